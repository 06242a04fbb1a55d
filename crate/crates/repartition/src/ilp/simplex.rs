//! Dense two-phase primal simplex over exact rationals.
//!
//! Small by design: the master programs here have a few dozen rows and at
//! most a few thousand columns, exactness matters more than speed, and
//! Bland's rule guarantees termination. Duals come from the reduced costs
//! of the slack and artificial columns.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: BigRational,
    /// One value per structural column.
    pub primal: Vec<BigRational>,
    /// One value per row.
    pub duals: Vec<BigRational>,
}

/// A linear program `min c.x  s.t.  A x (<=,>=,=) b, x >= 0`.
pub struct Lp {
    n_cols: usize,
    costs: Vec<BigRational>,
    rows: Vec<(Vec<(usize, BigRational)>, Relation, BigRational)>,
}

impl Lp {
    pub fn new(n_cols: usize) -> Self {
        Lp {
            n_cols,
            costs: vec![BigRational::zero(); n_cols],
            rows: Vec::new(),
        }
    }

    pub fn set_cost(&mut self, col: usize, cost: BigRational) {
        self.costs[col] = cost;
    }

    /// Sparse row; coefficients for distinct columns.
    pub fn add_row(&mut self, coeffs: Vec<(usize, BigRational)>, rel: Relation, rhs: BigRational) {
        self.rows.push((coeffs, rel, rhs));
    }

    pub fn solve(&self) -> LpResult {
        let n_rows = self.rows.len();
        let n_struct = self.n_cols;
        // Column layout: structural | slack/surplus (one per Le/Ge row) |
        // artificial (one per Ge/Eq row).
        let mut slack_col = vec![usize::MAX; n_rows];
        let mut artif_col = vec![usize::MAX; n_rows];
        let mut next = n_struct;
        for (i, (_, rel, _)) in self.rows.iter().enumerate() {
            match rel {
                Relation::Le | Relation::Ge => {
                    slack_col[i] = next;
                    next += 1;
                }
                Relation::Eq => {}
            }
        }
        for col in artif_col.iter_mut() {
            *col = next;
            next += 1;
        }
        let n_total = next;

        // Tableau with RHS in the last column.
        let zero = BigRational::zero();
        let mut t = vec![vec![zero.clone(); n_total + 1]; n_rows];
        let mut basis = vec![usize::MAX; n_rows];
        for (i, (coeffs, rel, rhs)) in self.rows.iter().enumerate() {
            let flip = rhs.is_negative();
            let sign = if flip { -BigRational::one() } else { BigRational::one() };
            for (col, v) in coeffs {
                t[i][*col] = &sign * v;
            }
            t[i][n_total] = &sign * rhs;
            let eff_rel = if flip {
                match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                }
            } else {
                *rel
            };
            match eff_rel {
                Relation::Le => {
                    t[i][slack_col[i]] = BigRational::one();
                    basis[i] = slack_col[i];
                }
                Relation::Ge => {
                    t[i][slack_col[i]] = -BigRational::one();
                    t[i][artif_col[i]] = BigRational::one();
                    basis[i] = artif_col[i];
                }
                Relation::Eq => {
                    t[i][artif_col[i]] = BigRational::one();
                    basis[i] = artif_col[i];
                }
            }
        }

        let is_artificial = |c: usize| c >= n_struct + slack_count(&slack_col);

        // Phase 1: minimize the sum of artificials.
        let mut phase1 = vec![zero.clone(); n_total + 1];
        let mut any_artif = false;
        for i in 0..n_rows {
            if artif_col[i] != usize::MAX && basis[i] == artif_col[i] {
                any_artif = true;
                for c in 0..=n_total {
                    let v = t[i][c].clone();
                    phase1[c] -= v;
                }
            }
        }
        if any_artif {
            if !pivot_loop(&mut t, &mut basis, &mut phase1, n_total, &|c| {
                // Artificials may leave but never re-enter once zero; allow
                // them as entering candidates only during phase 1 pricing of
                // their own column is pointless -- skip.
                !is_artificial(c)
            }) {
                // Phase-1 objective unbounded cannot happen (bounded below
                // by 0); treat as numeric bug.
                unreachable!("phase-1 unbounded");
            }
            if phase1[n_total].is_negative() {
                return LpResult {
                    status: LpStatus::Infeasible,
                    objective: zero.clone(),
                    primal: vec![zero.clone(); n_struct],
                    duals: vec![zero; n_rows],
                };
            }
            // Drive remaining basic artificials out where possible.
            for i in 0..n_rows {
                if artif_col[i] != usize::MAX && basis[i] == artif_col[i] {
                    let col = (0..n_struct + slack_count(&slack_col))
                        .find(|&c| !t[i][c].is_zero());
                    if let Some(c) = col {
                        do_pivot(&mut t, &mut basis, &mut phase1, i, c, n_total);
                    }
                }
            }
        }

        // Phase 2 objective row.
        let mut obj = vec![zero.clone(); n_total + 1];
        for (c, cost) in self.costs.iter().enumerate() {
            obj[c] = cost.clone();
        }
        for i in 0..n_rows {
            let b = basis[i];
            if b != usize::MAX && !obj[b].is_zero() {
                let factor = obj[b].clone();
                for c in 0..=n_total {
                    let v = &t[i][c] * &factor;
                    obj[c] -= v;
                }
            }
        }
        if !pivot_loop(&mut t, &mut basis, &mut obj, n_total, &|c| !is_artificial(c)) {
            return LpResult {
                status: LpStatus::Unbounded,
                objective: zero.clone(),
                primal: vec![zero.clone(); n_struct],
                duals: vec![zero; n_rows],
            };
        }

        let mut primal = vec![zero.clone(); n_struct];
        for i in 0..n_rows {
            if basis[i] < n_struct {
                primal[basis[i]] = t[i][n_total].clone();
            }
        }
        // Duals: y_i from the reduced cost of the row's slack or artificial
        // column (c_bar = -y for +1 slack/artificial, c_bar = +y for -1
        // surplus).
        let mut duals = vec![zero.clone(); n_rows];
        for i in 0..n_rows {
            let (_, rel, rhs) = &self.rows[i];
            let flip = rhs.is_negative();
            let eff_rel = if flip {
                match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                }
            } else {
                *rel
            };
            let mut y = match eff_rel {
                Relation::Le => -obj[slack_col[i]].clone(),
                Relation::Ge => obj[slack_col[i]].clone(),
                Relation::Eq => -obj[artif_col[i]].clone(),
            };
            if flip {
                y = -y;
            }
            duals[i] = y;
        }
        LpResult {
            status: LpStatus::Optimal,
            objective: -obj[n_total].clone(),
            primal,
            duals,
        }
    }
}

fn slack_count(slack_col: &[usize]) -> usize {
    slack_col.iter().filter(|&&c| c != usize::MAX).count()
}

/// Bland's rule pivoting until optimal; false when unbounded.
fn pivot_loop(
    t: &mut Vec<Vec<BigRational>>,
    basis: &mut Vec<usize>,
    obj: &mut Vec<BigRational>,
    n_total: usize,
    allowed: &dyn Fn(usize) -> bool,
) -> bool {
    loop {
        let entering = (0..n_total).find(|&c| allowed(c) && obj[c].is_negative());
        let Some(col) = entering else {
            return true;
        };
        let mut leaving: Option<usize> = None;
        let mut best: Option<BigRational> = None;
        for (i, row) in t.iter().enumerate() {
            if row[col].is_positive() {
                let ratio = &row[n_total] / &row[col];
                let better = match &best {
                    None => true,
                    Some(b) => {
                        ratio < *b || (ratio == *b && basis[i] < basis[leaving.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leaving = Some(i);
                }
            }
        }
        let Some(row) = leaving else {
            return false;
        };
        do_pivot(t, basis, obj, row, col, n_total);
    }
}

fn do_pivot(
    t: &mut [Vec<BigRational>],
    basis: &mut [usize],
    obj: &mut [BigRational],
    row: usize,
    col: usize,
    n_total: usize,
) {
    let pivot = t[row][col].clone();
    for c in 0..=n_total {
        t[row][c] /= &pivot;
    }
    for i in 0..t.len() {
        if i != row && !t[i][col].is_zero() {
            let factor = t[i][col].clone();
            for c in 0..=n_total {
                let v = &t[row][c] * &factor;
                t[i][c] -= v;
            }
        }
    }
    if !obj[col].is_zero() {
        let factor = obj[col].clone();
        for c in 0..=n_total {
            let v = &t[row][c] * &factor;
            obj[c] -= v;
        }
    }
    basis[row] = col;
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tiny_covering() {
        // min x0 + x1 s.t. x0 + 2 x1 >= 4, x0 >= 1.
        let mut lp = Lp::new(2);
        lp.set_cost(0, rat(1));
        lp.set_cost(1, rat(1));
        lp.add_row(vec![(0, rat(1)), (1, rat(2))], Relation::Ge, rat(4));
        lp.add_row(vec![(0, rat(1))], Relation::Ge, rat(1));
        let res = lp.solve();
        assert_eq!(res.status, LpStatus::Optimal);
        // x0 = 1, x1 = 3/2 -> obj 5/2.
        assert_eq!(res.objective, BigRational::new(5.into(), 2.into()));
    }

    #[test]
    fn detects_infeasible() {
        // x0 <= 1 and x0 >= 2.
        let mut lp = Lp::new(1);
        lp.set_cost(0, rat(1));
        lp.add_row(vec![(0, rat(1))], Relation::Le, rat(1));
        lp.add_row(vec![(0, rat(1))], Relation::Ge, rat(2));
        assert_eq!(lp.solve().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x0, x0 free upward.
        let mut lp = Lp::new(1);
        lp.set_cost(0, rat(-1));
        lp.add_row(vec![(0, rat(1))], Relation::Ge, rat(0));
        assert_eq!(lp.solve().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_duals() {
        // min 3x0 + 2x1 s.t. x0 + x1 = 2, x0 >= 0 -> x1 = 2, obj 4.
        let mut lp = Lp::new(2);
        lp.set_cost(0, rat(3));
        lp.set_cost(1, rat(2));
        lp.add_row(vec![(0, rat(1)), (1, rat(1))], Relation::Eq, rat(2));
        let res = lp.solve();
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.objective, rat(4));
        assert_eq!(res.primal[1], rat(2));
        // Dual of the equality row is the marginal cost: 2.
        assert_eq!(res.duals[0], rat(2));
    }
}
