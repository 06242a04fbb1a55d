//! Run parameters and the rounding-granularity search.
//!
//! All volumes in this crate are exact: a vertex has volume `1/k` and every
//! stored volume is an integer count of such units. The granularity `delta`
//! is itself a multiple of `1/k`, so committed volumes, size classes and the
//! ILP right-hand sides all live on an integer grid.

use serde::{Deserialize, Serialize};

/// How strictly the parameter preconditions are enforced.
///
/// Strict mode requires `1/4 > epsilon >= (10/k)^(1/4)` so that the
/// granularity search is guaranteed to succeed with
/// `epsilon^2/2 <= delta <= epsilon^2`. Relaxed mode accepts any
/// `delta = j/k <= epsilon^2` whose rounding excess satisfies
/// `ceil_delta(1) - 1 <= delta/2`, which keeps the configuration space small
/// at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Relaxed,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Strict => write!(f, "strict"),
            Mode::Relaxed => write!(f, "relaxed"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("k must be positive")]
    ZeroK,
    #[error("server count must be positive")]
    ZeroServers,
    #[error("epsilon must be a positive fraction")]
    BadEpsilon,
    #[error("strict mode requires 1/4 > epsilon >= (10/k)^(1/4); got eps={eps_num}/{eps_den}, k={k}")]
    StrictPrecondition { eps_num: u64, eps_den: u64, k: u64 },
    #[error("no feasible delta: no multiple of 1/{k} satisfies the granularity conditions for eps={eps_num}/{eps_den}")]
    NoFeasibleDelta { eps_num: u64, eps_den: u64, k: u64 },
}

/// Global run parameters.
///
/// `k` is the number of vertices per server, `ell` the number of servers.
/// `epsilon` is kept as an exact fraction `eps_num/eps_den`. `delta_units`
/// stores `delta * k`, so `delta = delta_units / k`, and
/// `gamma = 2 * delta < 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub k: u64,
    pub ell: u32,
    pub eps_num: u64,
    pub eps_den: u64,
    pub delta_units: u64,
    pub mode: Mode,
    /// Extra reservation budget in delta-units added to the gamma-validity
    /// bound. Zero in the standard setting; positive values model the
    /// large-headroom regime where servers can hold their full monochromatic
    /// volume on top of the usual budget.
    #[serde(default)]
    pub headroom_delta_units: u64,
}

impl Params {
    /// Builds parameters, choosing `delta` by the granularity scan.
    pub fn new(k: u64, ell: u32, eps_num: u64, eps_den: u64, mode: Mode) -> Result<Self, ParamError> {
        if k == 0 {
            return Err(ParamError::ZeroK);
        }
        if ell == 0 {
            return Err(ParamError::ZeroServers);
        }
        if eps_num == 0 || eps_den == 0 {
            return Err(ParamError::BadEpsilon);
        }
        let delta_units = pick_delta(eps_num, eps_den, k, mode)?;
        Ok(Params {
            k,
            ell,
            eps_num,
            eps_den,
            delta_units,
            mode,
            headroom_delta_units: 0,
        })
    }

    pub fn with_headroom(mut self, headroom_delta_units: u64) -> Self {
        self.headroom_delta_units = headroom_delta_units;
        self
    }

    /// Total number of vertices, `ell * k`.
    pub fn n_vertices(&self) -> u64 {
        self.k * self.ell as u64
    }

    /// `delta * k`.
    pub fn d(&self) -> u64 {
        self.delta_units
    }

    /// Number of size classes: committed volume of one piece is at most 1,
    /// so classes range over `0 ..= floor(k/d)`.
    pub fn n_classes(&self) -> usize {
        (self.k / self.d()) as usize + 1
    }

    /// `ceil_delta(1)` in delta-units.
    pub fn one_rounded_up(&self) -> u64 {
        self.k.div_ceil(self.d())
    }

    /// Reservation budget `floor((1+gamma)/delta)` in delta-units: the
    /// largest multiple of delta that is gamma-valid, plus any headroom.
    pub fn budget_delta_units(&self) -> u64 {
        (self.k + 2 * self.d()) / self.d() + self.headroom_delta_units
    }

    /// `eps * k` compared exactly: is `units/k < eps`?
    pub fn units_below_eps(&self, units: u64) -> bool {
        (units as u128) * (self.eps_den as u128) < (self.eps_num as u128) * (self.k as u128)
    }

    /// Is `units/k <= eps`?
    pub fn units_at_most_eps(&self, units: u64) -> bool {
        (units as u128) * (self.eps_den as u128) <= (self.eps_num as u128) * (self.k as u128)
    }

    /// Is `foreign < eps * size` (both in units)? Used for the small-piece
    /// monochromatic test.
    pub fn foreign_below_eps_fraction(&self, foreign_units: u64, size_units: u64) -> bool {
        (foreign_units as u128) * (self.eps_den as u128)
            < (self.eps_num as u128) * (size_units as u128)
    }

    /// `gamma - delta` as an exact fraction of total volume: `d/k`.
    pub fn gamma_minus_delta(&self) -> (u64, u64) {
        (self.d(), self.k)
    }
}

/// Scans for the granularity `delta`.
///
/// Starts at the largest multiple of `1/k` that is at most `eps^2` and
/// decrements by `1/k` until `ceil_delta(1) - 1 <= delta/2` holds. In strict
/// mode the preconditions guarantee the scan stops with
/// `delta >= eps^2 / 2`; in relaxed mode any multiple of `1/k` may be
/// returned. Returns delta in units of `1/k`.
pub fn pick_delta(eps_num: u64, eps_den: u64, k: u64, mode: Mode) -> Result<u64, ParamError> {
    if eps_num == 0 || eps_den == 0 || k == 0 {
        return Err(ParamError::BadEpsilon);
    }
    if mode == Mode::Strict {
        // eps <= 1/4  and  k >= 10/eps^4, i.e. k * eps_num^4 >= 10 * eps_den^4.
        let eps_ok = 4 * eps_num <= eps_den;
        let num4 = (eps_num as u128).pow(4);
        let den4 = (eps_den as u128).pow(4);
        let k_ok = k as u128 * num4 >= 10 * den4;
        if !eps_ok || !k_ok {
            return Err(ParamError::StrictPrecondition { eps_num, eps_den, k });
        }
    }
    // Largest j with j/k <= eps^2, i.e. j <= k * eps_num^2 / eps_den^2.
    let num2 = (eps_num as u128) * (eps_num as u128);
    let den2 = (eps_den as u128) * (eps_den as u128);
    let mut j = ((k as u128 * num2) / den2) as u64;
    while j >= 1 {
        if rounding_excess_ok(j, k) {
            if mode == Mode::Strict {
                // delta >= eps^2/2, i.e. 2*j*den2 >= k*num2.
                debug_assert!(2 * j as u128 * den2 >= k as u128 * num2);
            }
            return Ok(j);
        }
        j -= 1;
    }
    Err(ParamError::NoFeasibleDelta { eps_num, eps_den, k })
}

/// `ceil_delta(1) - 1 <= delta / 2` for `delta = j/k`:
/// `(ceil(k/j)*j - k) * 2 <= j`.
pub fn rounding_excess_ok(j: u64, k: u64) -> bool {
    let excess = k.div_ceil(j) * j - k;
    2 * excess <= j
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: exhaustively scan all multiples of 1/k in
    /// [eps^2/2, eps^2] and return those satisfying all three conditions.
    fn feasible_deltas(eps_num: u64, eps_den: u64, k: u64) -> Vec<u64> {
        let num2 = (eps_num as u128) * (eps_num as u128);
        let den2 = (eps_den as u128) * (eps_den as u128);
        let hi = ((k as u128 * num2) / den2) as u64;
        let mut out = Vec::new();
        for j in 1..=hi {
            let lower_ok = 2 * j as u128 * den2 >= k as u128 * num2;
            if lower_ok && rounding_excess_ok(j, k) {
                out.push(j);
            }
        }
        out
    }

    #[test]
    fn delta_for_quarter_eps_k4096() {
        // 1 is an exact multiple of 1/16, so the scan stops immediately.
        let j = pick_delta(1, 4, 4096, Mode::Strict).unwrap();
        assert_eq!(j, 256); // 256/4096 = 1/16
    }

    #[test]
    fn delta_for_quarter_eps_k2560() {
        let j = pick_delta(1, 4, 2560, Mode::Strict).unwrap();
        // Exhaustive-scan oracle: the procedure returns the largest feasible
        // multiple.
        let feasible = feasible_deltas(1, 4, 2560);
        assert_eq!(j, *feasible.last().unwrap());
        assert_eq!(j, 160); // 160/2560 = 1/16
    }

    #[test]
    fn delta_for_fifth_eps_k6250() {
        let j = pick_delta(1, 5, 6250, Mode::Strict).unwrap();
        let feasible = feasible_deltas(1, 5, 6250);
        assert!(feasible.contains(&j));
        assert_eq!(j, *feasible.last().unwrap());
        // All three invariants hold for the result.
        let num2 = 1u128;
        let den2 = 25u128;
        assert!(2 * j as u128 * den2 >= 6250 * num2); // delta >= eps^2/2
        assert!((j as u128) * den2 <= 6250 * num2); // delta <= eps^2
        assert!(rounding_excess_ok(j, 6250));
    }

    #[test]
    fn strict_mode_rejects_small_k() {
        let err = pick_delta(1, 4, 64, Mode::Strict).unwrap_err();
        assert!(matches!(err, ParamError::StrictPrecondition { .. }));
    }

    #[test]
    fn relaxed_mode_accepts_coarse_grid() {
        // eps = 1/2, k = 32: delta = 1/4 = 8/32 divides 1 exactly.
        let j = pick_delta(1, 2, 32, Mode::Relaxed).unwrap();
        assert_eq!(j, 8);
    }

    #[test]
    fn relaxed_mode_reports_infeasible() {
        // eps = 1/32 at k = 64: eps^2 = 1/1024 < 1/64, no multiple fits.
        let err = pick_delta(1, 32, 64, Mode::Relaxed).unwrap_err();
        assert!(matches!(err, ParamError::NoFeasibleDelta { .. }));
    }

    #[test]
    fn class_and_budget_arithmetic() {
        let p = Params::new(64, 4, 1, 8, Mode::Relaxed).unwrap();
        assert_eq!(p.delta_units, 1); // delta = 1/64 = eps^2
        assert_eq!(p.n_classes(), 65);
        assert_eq!(p.one_rounded_up(), 64);
        assert_eq!(p.budget_delta_units(), 66);
    }
}
