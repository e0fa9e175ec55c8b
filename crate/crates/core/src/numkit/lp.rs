//! Dense two-phase simplex and the strict-inequality feasibility test built
//! on it.

use crate::error::{Error, Result};

use super::{norm, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// `minimize objective' x` subject to `rows` and `lower <= x <= upper`.
/// Infinite bounds are allowed; variables are free unless bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn bound(&mut self, j: usize, lo: f64, hi: f64) -> &mut Self {
        self.lower[j] = lo;
        self.upper[j] = hi;
        self
    }

    pub fn bound_all(&mut self, lo: f64, hi: f64) -> &mut Self {
        self.lower.iter_mut().for_each(|v| *v = lo);
        self.upper.iter_mut().for_each(|v| *v = hi);
        self
    }

    pub fn row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> &mut Self {
        self.rows.push(LpRow { coeffs, sense, rhs });
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    Shift { col: usize, lo: f64 },
    Mirror { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

const PIVOT_EPS: f64 = 1e-10;
const BLAND_AFTER: usize = 50;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over the current basis; only columns `< allowed` may
    /// enter. Returns false when the objective is unbounded below.
    fn optimize(&mut self, cost: &[f64], allowed: usize, budget: &mut usize) -> Result<bool> {
        let scale = 1.0 + cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let eps = 1e-11 * scale;
        let mut degenerate = 0usize;
        let mut is_basic = vec![false; self.width];
        loop {
            is_basic.iter_mut().for_each(|b| *b = false);
            for &b in &self.basis {
                is_basic[b] = true;
            }
            let bland = degenerate >= BLAND_AFTER;
            let mut entering = None;
            let mut best = -eps;
            for j in 0..allowed {
                if is_basic[j] {
                    continue;
                }
                let mut r = cost[j];
                for (i, row) in self.rows.iter().enumerate() {
                    r -= cost[self.basis[i]] * row[j];
                }
                if r < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(c) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            if *budget == 0 {
                return Err(Error::MaxIter {
                    solver: "simplex",
                    iterations: 0,
                });
            }
            *budget -= 1;
        }
    }
}

/// Two-phase dense simplex. Errors only when the pivot budget runs out.
pub fn solve_lp(lp: &LinearProgram, tol: &Tolerances) -> Result<LpOutcome> {
    let n = lp.num_vars();
    for row in &lp.rows {
        if row.coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.coeffs.len(),
                context: "LP row",
            });
        }
    }
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::invalid("LP bounds must match the number of variables"));
    }

    // Standard form: every variable nonnegative.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo > hi {
            return Ok(LpOutcome::Infeasible);
        }
        if lo.is_finite() {
            maps.push(VarMap::Shift { col: ncols, lo });
            if hi.is_finite() {
                extra_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror { col: ncols, hi });
            ncols += 1;
        } else {
            maps.push(VarMap::Split {
                pos: ncols,
                neg: ncols + 1,
            });
            ncols += 2;
        }
    }

    let mut std_rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::new();
    for row in &lp.rows {
        let mut coeffs = vec![0.0; ncols];
        let mut rhs = row.rhs;
        for (j, &a) in row.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    coeffs[col] += a;
                    rhs -= a * lo;
                }
                VarMap::Mirror { col, hi } => {
                    coeffs[col] -= a;
                    rhs -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        std_rows.push((coeffs, row.sense, rhs));
    }
    for &(col, width) in &extra_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        std_rows.push((coeffs, RowSense::Le, width));
    }

    let mut cost = vec![0.0; ncols];
    for (j, &c) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shift { col, .. } => cost[col] += c,
            VarMap::Mirror { col, .. } => cost[col] -= c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    let m = std_rows.len();
    let nslack = std_rows.iter().filter(|r| r.1 != RowSense::Eq).count();
    let art_start = ncols + nslack;
    let width = art_start + m;
    let mut rows = Vec::with_capacity(m);
    let mut slack = ncols;
    let mut bmax: f64 = 0.0;
    for (i, (coeffs, sense, rhs)) in std_rows.into_iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        row[..ncols].copy_from_slice(&coeffs);
        match sense {
            RowSense::Le => {
                row[slack] = 1.0;
                slack += 1;
            }
            RowSense::Ge => {
                row[slack] = -1.0;
                slack += 1;
            }
            RowSense::Eq => {}
        }
        row[width] = rhs;
        if rhs < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[art_start + i] = 1.0;
        bmax = bmax.max(rhs.abs());
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        basis: (art_start..art_start + m).collect(),
        width,
    };
    let mut budget = tol.max_iter.max(100 * (m + width));

    let mut phase1 = vec![0.0; width];
    phase1[art_start..].iter_mut().for_each(|c| *c = 1.0);
    tab.optimize(&phase1, width, &mut budget)?;
    let infeas: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= art_start)
        .map(|i| tab.rhs(i).abs())
        .sum();
    if infeas > 1e-9 * (1.0 + bmax) {
        return Ok(LpOutcome::Infeasible);
    }
    for i in 0..m {
        if tab.basis[i] >= art_start {
            let col = (0..art_start)
                .filter(|&j| tab.rows[i][j].abs() > 1e-9)
                .max_by(|&a, &b| tab.rows[i][a].abs().total_cmp(&tab.rows[i][b].abs()));
            if let Some(j) = col {
                tab.pivot(i, j);
            }
        }
    }

    let mut phase2 = vec![0.0; width];
    phase2[..ncols].copy_from_slice(&cost);
    if !tab.optimize(&phase2, art_start, &mut budget)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut xs = vec![0.0; width];
    for (i, &b) in tab.basis.iter().enumerate() {
        xs[b] = tab.rhs(i).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + xs[col],
            VarMap::Mirror { col, hi } => hi - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    Ok(LpOutcome::Optimal { x, value })
}

/// Sense of a strict row: `a'd > 0` or `a'd < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strict {
    Gt,
    Lt,
}

impl Strict {
    pub fn sign(self) -> f64 {
        match self {
            Strict::Gt => 1.0,
            Strict::Lt => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s >= 0.0 {
            Strict::Gt
        } else {
            Strict::Lt
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrictFeasibility {
    pub feasible: bool,
    /// Optimal margin over normalized rows inside the unit box.
    pub margin: f64,
    pub witness: Option<Vec<f64>>,
}

/// Decides whether some `d` satisfies every strict row and `a'd = 0` for
/// every equality row, by maximizing the margin `s` in
/// `sign * a'd >= s ||a||, ||d||_inf <= 1, s <= 1`.
pub fn lp_strict_feasible(
    strict_rows: &[(Vec<f64>, Strict)],
    eq_rows: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<StrictFeasibility> {
    let n = match (strict_rows.first(), eq_rows.first()) {
        (Some((a, _)), _) => a.len(),
        (None, Some(a)) => a.len(),
        (None, None) => return Err(Error::invalid("strict feasibility needs at least one row")),
    };
    if strict_rows
        .iter()
        .map(|r| r.0.len())
        .chain(eq_rows.iter().map(|r| r.len()))
        .any(|l| l != n)
    {
        return Err(Error::invalid("strict feasibility rows must share a dimension"));
    }
    let infeasible = StrictFeasibility {
        feasible: false,
        margin: 0.0,
        witness: None,
    };
    if strict_rows.iter().any(|(a, _)| norm(a) == 0.0) {
        return Ok(infeasible);
    }

    let mut objective = vec![0.0; n + 1];
    objective[n] = -1.0;
    let mut lp = LinearProgram::new(objective);
    lp.bound_all(-1.0, 1.0);
    for (a, sense) in strict_rows {
        let scale = sense.sign() / norm(a);
        let mut coeffs: Vec<f64> = a.iter().map(|v| v * scale).collect();
        coeffs.push(-1.0);
        lp.row(coeffs, RowSense::Ge, 0.0);
    }
    for a in eq_rows {
        let nrm = norm(a);
        if nrm == 0.0 {
            continue;
        }
        let mut coeffs: Vec<f64> = a.iter().map(|v| v / nrm).collect();
        coeffs.push(0.0);
        lp.row(coeffs, RowSense::Eq, 0.0);
    }

    match solve_lp(&lp, tol)? {
        LpOutcome::Optimal { x, .. } => {
            let margin = x[n];
            if margin > tol.margin_tol {
                Ok(StrictFeasibility {
                    feasible: true,
                    margin,
                    witness: Some(x[..n].to_vec()),
                })
            } else {
                Ok(StrictFeasibility { margin, ..infeasible })
            }
        }
        // d = 0, s = 0 is always feasible and s <= 1 bounds the objective.
        _ => Err(Error::invalid("margin LP reported an impossible status")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn optimal(out: LpOutcome) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.bound_all(0.0, f64::INFINITY)
            .row(vec![1.0, 0.0], RowSense::Le, 4.0)
            .row(vec![0.0, 2.0], RowSense::Le, 12.0)
            .row(vec![3.0, 2.0], RowSense::Le, 18.0);
        let (x, v) = optimal(solve_lp(&lp, &tol()).unwrap());
        assert!((v + 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min y with y >= -x, y >= x + 3, x <= -1, y free
        let mut lp = LinearProgram::new(vec![0.0, 1.0]);
        lp.bound(0, f64::NEG_INFINITY, -1.0)
            .row(vec![1.0, 1.0], RowSense::Ge, 0.0)
            .row(vec![-1.0, 1.0], RowSense::Ge, 3.0);
        let (x, v) = optimal(solve_lp(&lp, &tol()).unwrap());
        assert!((x[0] + 1.5).abs() < 1e-9);
        assert!((v - 1.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.row(vec![1.0], RowSense::Ge, 1.0).row(vec![1.0], RowSense::Le, -1.0);
        assert_eq!(solve_lp(&lp, &tol()).unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.row(vec![1.0], RowSense::Ge, 0.0);
        assert_eq!(solve_lp(&lp, &tol()).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.bound_all(0.0, f64::INFINITY)
            .row(vec![1.0, 1.0], RowSense::Eq, 1.0)
            .row(vec![2.0, 2.0], RowSense::Eq, 2.0);
        let (x, v) = optimal(solve_lp(&lp, &tol()).unwrap());
        assert!((v - 1.0).abs() < 1e-9 && (x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_strict_rows() {
        let rows = vec![(vec![1.0, 0.0], Strict::Gt), (vec![-1.0, 0.0], Strict::Gt)];
        assert!(!lp_strict_feasible(&rows, &[], &tol()).unwrap().feasible);
    }

    #[test]
    fn single_strict_row_has_witness() {
        let rows = vec![(vec![1.0, 0.0], Strict::Gt)];
        let res = lp_strict_feasible(&rows, &[], &tol()).unwrap();
        assert!(res.feasible);
        assert!(res.witness.unwrap()[0] > 0.0);
    }

    #[test]
    fn mixed_senses_are_realizable() {
        let rows = vec![(vec![1.0, 0.0], Strict::Gt), (vec![1.0, 1.0], Strict::Lt)];
        let res = lp_strict_feasible(&rows, &[], &tol()).unwrap();
        assert!(res.feasible);
        let d = res.witness.unwrap();
        assert!(d[0] > 0.0 && d[0] + d[1] < 0.0);
    }

    #[test]
    fn equalities_restrict_directions() {
        let rows = vec![(vec![1.0, 0.0], Strict::Gt)];
        let eq = vec![vec![1.0, 0.0]];
        assert!(!lp_strict_feasible(&rows, &eq, &tol()).unwrap().feasible);
        let eq = vec![vec![0.0, 1.0]];
        assert!(lp_strict_feasible(&rows, &eq, &tol()).unwrap().feasible);
    }

    #[test]
    fn zero_row_is_never_strict_and_empty_is_error() {
        let rows = vec![(vec![0.0, 0.0], Strict::Gt)];
        assert!(!lp_strict_feasible(&rows, &[], &tol()).unwrap().feasible);
        assert!(lp_strict_feasible(&[], &[], &tol()).is_err());
    }
}
