//! Configurations, source/reservation vectors and the scheduling ILP.
//!
//! A server's source vector describes the committed volume of the pieces
//! monochromatic for it (per size class) plus its rounded uncommitted color
//! volume; a reservation vector reserves per-class space on a server. The
//! ILP picks one configuration `(r, m)` per server, minimizing the number of
//! extraordinary ones (`r` not >= `m`), subject to reserving enough space
//! for every size class. All entries are kept in integer delta-units.

mod packing;
pub mod pool;
mod simplex;
pub mod solve;
pub mod variants;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{Color, CoreState};
use crate::params::Params;

pub use solve::{solve, SolveError, SolveOptions, SolverMode};

/// Per-class volumes in delta-units; entry `i > 0` is a multiple of `i`,
/// entry 0 unconstrained. Source vectors additionally sum to at most
/// `ceil_delta(1)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceVector(pub Vec<u32>);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReservationVector(pub Vec<u32>);

impl SourceVector {
    pub fn norm1(&self) -> u64 {
        self.0.iter().map(|&v| v as u64).sum()
    }
}

impl ReservationVector {
    pub fn norm1(&self) -> u64 {
        self.0.iter().map(|&v| v as u64).sum()
    }

    /// Componentwise `r >= m`.
    pub fn covers(&self, m: &SourceVector) -> bool {
        self.0.iter().zip(&m.0).all(|(&r, &m)| r >= m)
    }
}

/// True iff every prefix sum of `m1` is at least the corresponding prefix
/// sum of `m2`.
pub fn prefix_geq(m1: &SourceVector, m2: &SourceVector) -> bool {
    debug_assert_eq!(m1.0.len(), m2.0.len());
    let mut s1 = 0u64;
    let mut s2 = 0u64;
    for (&a, &b) in m1.0.iter().zip(&m2.0) {
        s1 += a as u64;
        s2 += b as u64;
        if s1 < s2 {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub r: ReservationVector,
    pub m: SourceVector,
}

impl Configuration {
    /// Recomputed on every call; never stored.
    pub fn ordinary(&self) -> bool {
        self.r.covers(&self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    Deterministic,
    Augmented,
}

/// Assigns ids to source vectors compatible with the prefix order:
/// `m1 >=_p m2` implies `id(m1) <= id(m2)`.
///
/// The id of `m` is its rank in a fixed linear extension of `>=_p`: grid
/// vectors ordered by their prefix-sum vectors, descending
/// lexicographically (ties are impossible since the prefix vector
/// determines the vector). Ranks are computed by a counting DP, so the
/// grid is never materialized.
#[derive(Debug, Clone)]
pub struct SourceVectorRanker {
    w: u32,
    /// suffix[j][b] = number of valid tails (e_j, .., e_{C-1}) with sum <= b.
    suffix: Vec<Vec<u128>>,
}

impl SourceVectorRanker {
    pub fn new(n_classes: usize, w: u32) -> Self {
        let mut suffix = vec![vec![0u128; w as usize + 1]; n_classes + 1];
        for b in 0..=w as usize {
            suffix[n_classes][b] = 1;
        }
        for j in (0..n_classes).rev() {
            let step = j.max(1);
            for b in 0..=w as usize {
                let mut total = 0u128;
                let mut v = 0usize;
                while v <= b {
                    total = total
                        .checked_add(suffix[j + 1][b - v])
                        .expect("source-vector count overflow");
                    v += step;
                }
                suffix[j][b] = total;
            }
        }
        SourceVectorRanker { w, suffix }
    }

    /// Number of grid-valid source vectors.
    pub fn universe_size(&self) -> u128 {
        self.suffix[0][self.w as usize]
    }

    /// Rank of `m` in the linear extension, in `1..=universe_size()`.
    pub fn id(&self, m: &SourceVector) -> u128 {
        let n_classes = self.suffix.len() - 1;
        debug_assert_eq!(m.0.len(), n_classes);
        let mut earlier = 0u128;
        let mut prefix_before = 0u64;
        for j in 0..n_classes {
            let step = (j.max(1)) as u64;
            let budget = self.w as u64 - prefix_before;
            // Count vectors equal before j with a strictly larger entry at
            // j; entries at j are multiples of `step`.
            let mut v = m.0[j] as u64 + step;
            while v <= budget {
                earlier += self.suffix[j + 1][(budget - v) as usize];
                v += step;
            }
            prefix_before += m.0[j] as u64;
        }
        earlier + 1
    }

    /// `lambda = 1 / (|M|^2 * ell)`.
    pub fn lambda(&self, ell: u32) -> BigRational {
        let m = BigInt::from(self.universe_size());
        BigRational::new(BigInt::one(), &m * &m * BigInt::from(ell))
    }
}

/// Cost vector: zero on ordinary configurations; extraordinary ones cost 1
/// (deterministic) or `1 + lambda * id(m)` (augmented). The total surcharge
/// of any solution stays below 1, so the extraordinary count remains the
/// primary objective.
#[derive(Debug, Clone)]
pub struct CostModel {
    pub mode: CostMode,
    ranker: Option<SourceVectorRanker>,
    lambda: Option<BigRational>,
}

impl CostModel {
    pub fn deterministic() -> Self {
        CostModel {
            mode: CostMode::Deterministic,
            ranker: None,
            lambda: None,
        }
    }

    pub fn augmented(params: &Params) -> Self {
        let ranker = SourceVectorRanker::new(params.n_classes(), params.one_rounded_up() as u32);
        let lambda = ranker.lambda(params.ell);
        CostModel {
            mode: CostMode::Augmented,
            ranker: Some(ranker),
            lambda: Some(lambda),
        }
    }

    pub fn for_mode(mode: CostMode, params: &Params) -> Self {
        match mode {
            CostMode::Deterministic => Self::deterministic(),
            CostMode::Augmented => Self::augmented(params),
        }
    }

    pub fn id(&self, m: &SourceVector) -> u128 {
        match &self.ranker {
            Some(r) => r.id(m),
            None => 0,
        }
    }

    pub fn cost(&self, cfg: &Configuration) -> BigRational {
        if cfg.ordinary() {
            return BigRational::zero();
        }
        match self.mode {
            CostMode::Deterministic => BigRational::one(),
            CostMode::Augmented => {
                let id = self.id(&cfg.m);
                BigRational::one()
                    + self.lambda.as_ref().unwrap() * BigRational::from(BigInt::from(id))
            }
        }
    }

    /// `lambda * id(m)`; zero in deterministic mode.
    pub fn surcharge(&self, m: &SourceVector) -> BigRational {
        match self.mode {
            CostMode::Deterministic => BigRational::zero(),
            CostMode::Augmented => {
                self.lambda.as_ref().unwrap() * BigRational::from(BigInt::from(self.id(m)))
            }
        }
    }
}

/// Right-hand sides of the ILP: class volumes and the source-vector census.
/// `v0_units` keeps the raw (unrounded) uncommitted volume; the class-0
/// covering constraint compares against its delta-ceiling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpInstance {
    pub n_classes: usize,
    pub v0_units: u64,
    /// Committed volume per class in delta-units; index 0 unused.
    pub v_delta: Vec<u64>,
    pub z: BTreeMap<SourceVector, u32>,
    /// delta in 1/k units.
    pub d: u64,
    /// Reservation budget in delta-units (gamma-validity plus headroom).
    pub budget: u64,
    pub ell: u32,
    pub mode: CostMode,
}

impl IlpInstance {
    pub fn v0_ceil_delta(&self) -> u64 {
        self.v0_units.div_ceil(self.d)
    }

    /// Covering requirement for a class row, in delta-units.
    pub fn requirement(&self, class: usize) -> u64 {
        if class == 0 {
            self.v0_ceil_delta()
        } else {
            self.v_delta[class]
        }
    }
}

/// Multiset of configurations with its exact objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct IlpSolution {
    pub x: BTreeMap<Configuration, u32>,
    pub objective: BigRational,
}

impl IlpSolution {
    pub fn from_configs(x: BTreeMap<Configuration, u32>, cost: &CostModel) -> Self {
        let objective = x
            .iter()
            .map(|(cfg, &count)| cost.cost(cfg) * BigRational::from(BigInt::from(count)))
            .sum();
        IlpSolution { x, objective }
    }

    /// Number of extraordinary configurations used; equals the floored
    /// objective by the choice of lambda.
    pub fn extraordinary_count(&self) -> u32 {
        self.x
            .iter()
            .filter(|(cfg, _)| !cfg.ordinary())
            .map(|(_, &count)| count)
            .sum()
    }

    pub fn l1_distance(&self, other: &IlpSolution) -> u64 {
        let mut keys: Vec<&Configuration> = self.x.keys().collect();
        keys.extend(other.x.keys());
        keys.sort();
        keys.dedup();
        keys.iter()
            .map(|cfg| {
                let a = *self.x.get(*cfg).unwrap_or(&0) as i64;
                let b = *other.x.get(*cfg).unwrap_or(&0) as i64;
                (a - b).unsigned_abs()
            })
            .sum()
    }

    /// Checks both constraint families, the budget and the server count.
    pub fn check_feasible(&self, inst: &IlpInstance) -> Result<(), String> {
        let total: u64 = self.x.values().map(|&c| c as u64).sum();
        if total != inst.ell as u64 {
            return Err(format!(
                "solution uses {} servers, expected {}",
                total, inst.ell
            ));
        }
        for class in 0..inst.n_classes {
            let reserved: u64 = self
                .x
                .iter()
                .map(|(cfg, &count)| cfg.r.0[class] as u64 * count as u64)
                .sum();
            if reserved < inst.requirement(class) {
                return Err(format!(
                    "class {} reserves {} delta-units, requires {}",
                    class,
                    reserved,
                    inst.requirement(class)
                ));
            }
        }
        let mut per_m: BTreeMap<&SourceVector, u64> = BTreeMap::new();
        for (cfg, &count) in &self.x {
            *per_m.entry(&cfg.m).or_default() += count as u64;
        }
        for (m, &z) in &inst.z {
            if per_m.get(m).copied().unwrap_or(0) != z as u64 {
                return Err(format!(
                    "source vector {:?} used {} times, census says {}",
                    m.0,
                    per_m.get(m).copied().unwrap_or(0),
                    z
                ));
            }
        }
        let active = inst.z.iter().filter(|(_, &z)| z > 0).count();
        if per_m.len() != active {
            return Err("solution uses a source vector with zero census".into());
        }
        for cfg in self.x.keys() {
            if cfg.r.norm1() > inst.budget {
                return Err(format!(
                    "reservation {:?} exceeds budget {}",
                    cfg.r.0, inst.budget
                ));
            }
        }
        Ok(())
    }

    pub fn objective_floor(&self) -> u32 {
        debug_assert!(!self.objective.is_negative());
        let f = self.objective.floor();
        let int = f.numer() / f.denom();
        u32::try_from(int).expect("objective fits u32")
    }
}

/// Source vector of server `s`: entry `i > 0` is the committed volume of
/// class-`i` pieces monochromatic for `s`; entry 0 is the uncommitted volume
/// of color `s`, rounded up to a multiple of delta. Depends only on the
/// pieces, never on the schedule.
pub fn source_vector_of(state: &CoreState, s: Color) -> SourceVector {
    let params = &state.params;
    let mut entries = vec![0u32; params.n_classes()];
    let mut uncommitted_color_units = 0u64;
    for piece in state.pieces() {
        let idx = (s - 1) as usize;
        uncommitted_color_units +=
            (piece.histogram.total[idx] - piece.histogram.committed[idx]) as u64;
        let class = (piece.committed_units / params.d()) as usize;
        if class > 0 {
            let pc = state.classify_piece(piece.id).expect("piece exists");
            if pc.monochromatic && pc.majority_color == s {
                entries[class] += (piece.committed_units / params.d()) as u32;
            }
        }
    }
    entries[0] = uncommitted_color_units.div_ceil(params.d()) as u32;
    SourceVector(entries)
}

/// Builds the ILP right-hand sides from the current pieces.
pub fn build_instance(state: &CoreState, mode: CostMode) -> IlpInstance {
    let params = &state.params;
    let n_classes = params.n_classes();
    let mut v_delta = vec![0u64; n_classes];
    let mut v0_units = 0u64;
    for piece in state.pieces() {
        v0_units += piece.uncommitted_units;
        let class = (piece.committed_units / params.d()) as usize;
        if class > 0 {
            v_delta[class] += piece.committed_units / params.d();
        }
    }
    let mut z: BTreeMap<SourceVector, u32> = BTreeMap::new();
    for s in 1..=params.ell {
        *z.entry(source_vector_of(state, s)).or_default() += 1;
    }
    IlpInstance {
        n_classes,
        v0_units,
        v_delta,
        z,
        d: params.d(),
        budget: params.budget_delta_units(),
        ell: params.ell,
        mode,
    }
}

/// JSON form used by golden tests: volumes as integer delta-units, plus the
/// raw uncommitted volume in 1/k units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IlpInstanceJson {
    #[serde(rename = "V")]
    pub v: Vec<u64>,
    pub v0_units: u64,
    #[serde(rename = "Z")]
    pub z: Vec<ZEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZEntry {
    pub m: Vec<u32>,
    pub count: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IlpSolutionJson {
    pub x: Vec<XEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XEntry {
    pub r: Vec<u32>,
    pub m: Vec<u32>,
    pub count: u32,
}

impl IlpInstance {
    pub fn to_json(&self) -> IlpInstanceJson {
        let mut v = self.v_delta.clone();
        v[0] = self.v0_ceil_delta();
        IlpInstanceJson {
            v,
            v0_units: self.v0_units,
            z: self
                .z
                .iter()
                .map(|(m, &count)| ZEntry {
                    m: m.0.clone(),
                    count,
                })
                .collect(),
        }
    }
}

impl IlpSolution {
    pub fn to_json(&self) -> IlpSolutionJson {
        IlpSolutionJson {
            x: self
                .x
                .iter()
                .map(|(cfg, &count)| XEntry {
                    r: cfg.r.0.clone(),
                    m: cfg.m.0.clone(),
                    count,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Mode;

    fn state() -> CoreState {
        // k=32, ell=2, eps=1/2, d=8 (delta=1/4), classes 0..=4.
        CoreState::new(Params::new(32, 2, 1, 2, Mode::Relaxed).unwrap())
    }

    #[test]
    fn initial_source_vectors_are_full_uncommitted() {
        let st = state();
        let m = source_vector_of(&st, 1);
        assert_eq!(m.0, vec![4, 0, 0, 0, 0]); // ceil(1)_delta = 4 delta-units
        assert_eq!(source_vector_of(&st, 2), m);
    }

    #[test]
    fn initial_instance_counts_servers() {
        let st = state();
        let inst = build_instance(&st, CostMode::Deterministic);
        assert_eq!(inst.v0_units, 64);
        assert_eq!(inst.v_delta, vec![0, 0, 0, 0, 0]);
        assert_eq!(inst.z.len(), 1);
        assert_eq!(inst.z.values().copied().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn committed_volume_moves_between_v_entries() {
        let mut st = state();
        for v in 0..31 {
            st.register_edge(v, v + 1).unwrap();
        }
        let pm = st.piece_of(0).unwrap();
        st.commit_step(pm).unwrap();
        let inst = build_instance(&st, CostMode::Deterministic);
        assert_eq!(inst.v_delta[1], 1);
        assert_eq!(inst.v0_units, 64 - 8);
        // Total volume is preserved: committed delta-units * d + raw.
        let total: u64 = inst.v_delta.iter().sum::<u64>() * inst.d + inst.v0_units;
        assert_eq!(total, 64);
    }

    #[test]
    fn source_vector_tracks_monochromatic_commit() {
        let mut st = state();
        for v in 0..31 {
            st.register_edge(v, v + 1).unwrap();
        }
        let pm = st.piece_of(0).unwrap();
        st.commit_step(pm).unwrap(); // class 1, monochromatic for 1
        let m1 = source_vector_of(&st, 1);
        // m_{1,1} = 1 delta-unit committed, m_{1,0} = ceil(24/8) = 3.
        assert_eq!(m1.0, vec![3, 1, 0, 0, 0]);
        let m2 = source_vector_of(&st, 2);
        assert_eq!(m2.0, vec![4, 0, 0, 0, 0]);
    }

    #[test]
    fn prefix_order_examples() {
        let a = SourceVector(vec![0, 1]);
        let b = SourceVector(vec![1, 0]);
        assert!(!prefix_geq(&a, &b)); // prefixes (0,1) vs (1,1)
        assert!(prefix_geq(&b, &a));
        assert!(prefix_geq(&a, &a));
        // Componentwise >= implies prefix >=.
        let c = SourceVector(vec![1, 1]);
        assert!(prefix_geq(&c, &a) && prefix_geq(&c, &b));
    }

    #[test]
    fn ranker_is_prefix_compatible_on_full_grid() {
        // Small grid: 3 classes, w = 4. Enumerate everything and check
        // compatibility plus bijectivity of ranks.
        let n_classes = 3;
        let w = 4u32;
        let ranker = SourceVectorRanker::new(n_classes, w);
        let mut all = Vec::new();
        for e0 in 0..=w {
            for e1 in 0..=(w - e0) {
                let rem = w - e0 - e1;
                for e2 in (0..=rem).step_by(2) {
                    all.push(SourceVector(vec![e0, e1, e2]));
                }
            }
        }
        assert_eq!(all.len() as u128, ranker.universe_size());
        let ids: Vec<u128> = all.iter().map(|m| ranker.id(m)).collect();
        for (m1, &id1) in all.iter().zip(&ids) {
            for (m2, &id2) in all.iter().zip(&ids) {
                if prefix_geq(m1, m2) && m1 != m2 {
                    assert!(id1 < id2, "{:?} >=p {:?} but ids {} {}", m1.0, m2.0, id1, id2);
                }
            }
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len());
        assert_eq!(*sorted.first().unwrap(), 1);
        assert_eq!(*sorted.last().unwrap(), all.len() as u128);
    }

    #[test]
    fn augmented_surcharge_stays_below_one() {
        let params = Params::new(32, 4, 1, 2, Mode::Relaxed).unwrap();
        let cost = CostModel::augmented(&params);
        let ranker = cost.ranker.as_ref().unwrap();
        let max_id = ranker.universe_size();
        // ell extraordinary configurations with the worst id.
        let worst = cost.lambda.clone().unwrap()
            * BigRational::from(BigInt::from(max_id))
            * BigRational::from(BigInt::from(params.ell));
        assert!(worst < BigRational::one());
    }
}
