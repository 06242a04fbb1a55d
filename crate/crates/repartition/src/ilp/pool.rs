//! The configuration pool: gamma-valid reservation vectors per active
//! source vector.
//!
//! Only finitely many configurations exist on the delta-grid, but the count
//! explodes with the number of classes, so enumeration is guarded by a cap;
//! past it, callers switch to the pricing path.

use super::{Configuration, IlpInstance, ReservationVector, SourceVector};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PoolError {
    #[error("configuration pool would hold {size} columns, cap is {cap}; use pricing mode")]
    Overflow { size: u128, cap: usize },
}

/// Number of gamma-valid reservation vectors for one source vector
/// (entry `i > 0` a multiple of `i`, total at most `budget`).
pub fn reservation_count(n_classes: usize, budget: u64) -> u128 {
    // DP over classes; identical to the source-vector tail count but with
    // the full budget.
    let mut counts = vec![0u128; budget as usize + 1];
    for c in counts.iter_mut() {
        *c = 1;
    }
    for class in (0..n_classes).rev() {
        let step = class.max(1);
        let mut next = vec![0u128; budget as usize + 1];
        for (b, slot) in next.iter_mut().enumerate() {
            let mut total = 0u128;
            let mut v = 0usize;
            while v <= b {
                total += counts[b - v];
                v += step;
            }
            *slot = total;
        }
        counts = next;
    }
    counts[budget as usize]
}

/// Total pool size for the active source vectors of `inst`.
pub fn pool_size(inst: &IlpInstance) -> u128 {
    let per_m = reservation_count(inst.n_classes, inst.budget);
    let active = inst.z.iter().filter(|(_, &z)| z > 0).count() as u128;
    per_m * active
}

/// Enumerates every gamma-valid reservation vector.
pub fn enumerate_reservations(n_classes: usize, budget: u64) -> Vec<ReservationVector> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n_classes];
    fn rec(
        class: usize,
        n_classes: usize,
        left: u64,
        current: &mut Vec<u32>,
        out: &mut Vec<ReservationVector>,
    ) {
        if class == n_classes {
            out.push(ReservationVector(current.clone()));
            return;
        }
        let step = class.max(1) as u64;
        let mut v = 0u64;
        while v <= left {
            current[class] = v as u32;
            rec(class + 1, n_classes, left - v, current, out);
            v += step;
        }
        current[class] = 0;
    }
    rec(0, n_classes, budget, &mut current, &mut out);
    out
}

/// The full pool restricted to active source vectors; errors out past `cap`.
pub fn configuration_pool(inst: &IlpInstance, cap: usize) -> Result<Vec<Configuration>, PoolError> {
    let size = pool_size(inst);
    if size > cap as u128 {
        return Err(PoolError::Overflow { size, cap });
    }
    let reservations = enumerate_reservations(inst.n_classes, inst.budget);
    let mut pool = Vec::with_capacity(size as usize);
    for (m, &z) in &inst.z {
        if z == 0 {
            continue;
        }
        for r in &reservations {
            pool.push(Configuration {
                r: r.clone(),
                m: m.clone(),
            });
        }
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use crate::ilp::CostMode;

    #[test]
    fn count_matches_enumeration() {
        // Relaxed tiny grid: 3 classes, budget 4.
        for (classes, budget) in [(3usize, 4u64), (4, 6), (5, 6)] {
            let listed = enumerate_reservations(classes, budget);
            assert_eq!(listed.len() as u128, reservation_count(classes, budget));
            // Direct product count by nested loops for the 3-class case.
            if classes == 3 {
                let mut direct = 0u32;
                for r0 in 0..=budget {
                    for r1 in 0..=(budget - r0) {
                        let rem = budget - r0 - r1;
                        direct += (rem / 2 + 1) as u32;
                    }
                }
                assert_eq!(listed.len(), direct as usize);
            }
        }
    }

    #[test]
    fn inactive_source_vectors_contribute_no_columns() {
        let mut z = BTreeMap::new();
        z.insert(SourceVector(vec![2, 0, 0]), 2u32);
        z.insert(SourceVector(vec![1, 1, 0]), 0u32);
        let inst = IlpInstance {
            n_classes: 3,
            v0_units: 8,
            v_delta: vec![0, 0, 0],
            z,
            d: 4,
            budget: 4,
            ell: 2,
            mode: CostMode::Deterministic,
        };
        let pool = configuration_pool(&inst, 10_000).unwrap();
        assert!(pool.iter().all(|cfg| cfg.m.0 == vec![2, 0, 0]));
    }

    #[test]
    fn overflow_reports_pricing() {
        let mut z = BTreeMap::new();
        z.insert(SourceVector(vec![2, 0, 0]), 2u32);
        let inst = IlpInstance {
            n_classes: 3,
            v0_units: 8,
            v_delta: vec![0, 0, 0],
            z,
            d: 4,
            budget: 4,
            ell: 2,
            mode: CostMode::Deterministic,
        };
        let err = configuration_pool(&inst, 3).unwrap_err();
        assert!(matches!(err, PoolError::Overflow { .. }));
    }
}
