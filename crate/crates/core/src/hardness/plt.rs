//! The piecewise linear test function
//! `f(d) = max_i -sum_j max(d'y_{3i+j}, 0)` built from a 3-CNF, and
//! stationarity of `f` at the origin.
//!
//! Clause `i` maps to three vectors: literal `x_k` at a position gives `e_k`,
//! literal `not x_k` gives `-e_k`. Clauses with fewer than three literals
//! repeat their last literal. Repeating a literal only repeats a
//! `max(., 0)` term, so `-sum_j max(d'y_j, 0) < 0` still holds exactly when
//! some literal of the clause is "true" under `sign(d)`, and the formula is
//! satisfiable iff `f(d) < 0` for some `d`, i.e. iff the origin is not
//! Frechet stationary.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkit::{
    project_polyhedron, solve_lp, LinearProgram, LpOutcome, PolyhedronSpec, Projection, RowSense, SolveStatus,
    Tolerances,
};

use super::cnf::Cnf3;

/// Variable limit of sign enumeration.
pub const MAX_EXHAUSTIVE_VARS: usize = 20;
/// Variable limit of the orthant cutting-plane distance computation.
pub const MAX_ORTHANT_VARS: usize = 12;
/// Clause limit of selection enumeration (`3^n` LPs).
pub const MAX_CERTIFICATE_CLAUSES: usize = 12;
const MAX_CUT_ROUNDS: usize = 1000;

/// Data of a piecewise linear test instance: `3n` signed unit vectors of
/// `R^m`, three per clause.
#[derive(Debug, Clone, PartialEq)]
pub struct PltInstance {
    m: usize,
    vectors: Vec<Vec<f64>>,
    axes: Vec<(usize, f64)>,
}

impl PltInstance {
    /// Every vector must be `+e_k` or `-e_k`; the count must be a positive
    /// multiple of three.
    pub fn new(m: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if vectors.is_empty() || !vectors.len().is_multiple_of(3) {
            return Err(Error::invalid(format!(
                "expected a positive multiple of 3 vectors, got {}",
                vectors.len()
            )));
        }
        let mut axes = Vec::with_capacity(vectors.len());
        for (j, y) in vectors.iter().enumerate() {
            if y.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: y.len(),
                    context: "test vector",
                });
            }
            let nonzero: Vec<usize> = (0..m).filter(|&k| y[k] != 0.0).collect();
            match nonzero.as_slice() {
                [k] if y[*k].abs() == 1.0 => axes.push((*k, y[*k])),
                _ => return Err(Error::invalid(format!("vector {j} is not a signed unit vector"))),
            }
        }
        Ok(Self { m, vectors, axes })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn num_clauses(&self) -> usize {
        self.vectors.len() / 3
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// `(k, s)` with `y_j = s e_k`.
    pub fn axis(&self, j: usize) -> (usize, f64) {
        self.axes[j]
    }

    fn check_dim(&self, d: &[f64]) -> Result<()> {
        if d.len() == self.m {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.m,
                got: d.len(),
                context: "direction",
            })
        }
    }

    fn clause_value(&self, i: usize, d: &[f64]) -> f64 {
        -(0..3)
            .map(|j| {
                let (k, s) = self.axes[3 * i + j];
                (s * d[k]).max(0.0)
            })
            .sum::<f64>()
    }

    fn value(&self, d: &[f64]) -> f64 {
        (0..self.num_clauses())
            .map(|i| self.clause_value(i, d))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Reduction from 3SAT: literal `x_k` maps to `e_k`, `not x_k` to `-e_k`.
pub fn sat_to_plt(cnf: &Cnf3) -> Result<PltInstance> {
    if cnf.num_clauses() == 0 {
        return Err(Error::invalid("formula has no clauses"));
    }
    let m = cnf.num_vars();
    let mut vectors = Vec::with_capacity(3 * cnf.num_clauses());
    for clause in cnf.clauses() {
        let last = *clause.last().expect("clauses are nonempty");
        for pos in 0..3 {
            let lit = clause.get(pos).copied().unwrap_or(last);
            let mut y = vec![0.0; m];
            y[lit.unsigned_abs() as usize - 1] = if lit > 0 { 1.0 } else { -1.0 };
            vectors.push(y);
        }
    }
    PltInstance::new(m, vectors)
}

/// `d_k = +1` for true variables and `-1` for false ones.
pub fn assignment_direction(assignment: &[bool]) -> Vec<f64> {
    assignment.iter().map(|&a| if a { 1.0 } else { -1.0 }).collect()
}

pub fn eval_plt(inst: &PltInstance, d: &[f64]) -> Result<f64> {
    inst.check_dim(d)?;
    Ok(inst.value(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PltMode {
    /// Sign enumeration for `epsilon = 0`, orthant cutting planes otherwise.
    Exhaustive,
    /// One LP per choice of a literal in every clause.
    Certificate,
}

/// Whether some `g` with `||g|| <= epsilon` satisfies `f(d) >= g'd` for all
/// `d`.
///
/// Certificate mode accepts `epsilon < 1/sqrt(m)`: a certificate `d` in
/// `{-1, 0, 1}^m` with `f(d) <= -1` rules out every such `g`.
pub fn plt_stationary(inst: &PltInstance, epsilon: f64, mode: PltMode, tol: &Tolerances) -> Result<bool> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!(
            "epsilon must be finite and nonnegative, got {epsilon}"
        )));
    }
    match mode {
        PltMode::Exhaustive if epsilon == 0.0 => Ok(sign_witness(inst)?.is_none()),
        PltMode::Exhaustive => Ok(frechet_distance(inst, tol)?.is_some_and(|(dist, _)| dist <= epsilon)),
        PltMode::Certificate => {
            if epsilon * (inst.dim() as f64).sqrt() >= 1.0 {
                return Err(Error::invalid(format!(
                    "certificate mode needs epsilon < 1/sqrt(m) = {}",
                    1.0 / (inst.dim() as f64).sqrt()
                )));
            }
            Ok(certificate(inst, tol)?.is_none())
        }
    }
}

/// First `d` in `{-1, 1}^m` (binary order, bit `k` set means `d_k = +1`)
/// with `f(d) < 0`.
pub fn sign_witness(inst: &PltInstance) -> Result<Option<Vec<f64>>> {
    let m = inst.dim();
    if m > MAX_EXHAUSTIVE_VARS {
        return Err(Error::GuardExceeded {
            what: "variables for sign enumeration",
            value: m as u128,
            limit: MAX_EXHAUSTIVE_VARS as u128,
        });
    }
    let to_dir = |mask: u32| -> Vec<f64> { (0..m).map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 }).collect() };
    Ok((0u32..(1u32 << m))
        .into_par_iter()
        .find_first(|&mask| inst.value(&to_dir(mask)) < 0.0)
        .map(to_dir))
}

/// Direction with `f(d) <= -1` from the first feasible literal selection,
/// or `None` when every selection LP is infeasible.
pub fn certificate(inst: &PltInstance, tol: &Tolerances) -> Result<Option<Vec<f64>>> {
    let n = inst.num_clauses();
    if n > MAX_CERTIFICATE_CLAUSES {
        return Err(Error::GuardExceeded {
            what: "clauses for selection enumeration",
            value: n as u128,
            limit: MAX_CERTIFICATE_CLAUSES as u128,
        });
    }
    let total = 3usize.pow(n as u32);
    let hit = (0..total)
        .into_par_iter()
        .find_map_first(|code| match selection_lp(inst, code, tol) {
            Ok(None) => None,
            other => Some(other),
        });
    hit.transpose().map(Option::flatten)
}

fn selection_lp(inst: &PltInstance, code: usize, tol: &Tolerances) -> Result<Option<Vec<f64>>> {
    let m = inst.dim();
    let mut lp = LinearProgram::new(vec![0.0; m]);
    lp.bound_all(-1.0, 1.0);
    let mut rest = code;
    for i in 0..inst.num_clauses() {
        let (k, s) = inst.axis(3 * i + rest % 3);
        rest /= 3;
        let mut row = vec![0.0; m];
        row[k] = s;
        lp.row(row, RowSense::Ge, 1.0);
    }
    match solve_lp(&lp, tol)? {
        LpOutcome::Optimal { x, .. } => Ok(Some(x)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("bounded feasibility LP"),
    }
}

/// Distance from the origin to `{g : f(d) >= g'd for all d}` with its
/// minimizer, `None` when that set is empty.
///
/// Cutting planes: project the origin onto the cuts found so far, then in
/// every orthant (where `f` is a max of linear functions) minimize
/// `f(d) - g'd` over `|d_k| <= 1` by LP and add the violated directions.
pub fn frechet_distance(inst: &PltInstance, tol: &Tolerances) -> Result<Option<(f64, Vec<f64>)>> {
    let m = inst.dim();
    if m > MAX_ORTHANT_VARS {
        return Err(Error::GuardExceeded {
            what: "variables for orthant enumeration",
            value: m as u128,
            limit: MAX_ORTHANT_VARS as u128,
        });
    }
    let mut spec = PolyhedronSpec::new();
    let mut g = vec![0.0; m];
    for _ in 0..MAX_CUT_ROUNDS {
        let cuts: Vec<Vec<f64>> = (0u32..(1u32 << m))
            .into_par_iter()
            .map(|orthant| orthant_minimizer(inst, orthant, &g, tol))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        if cuts.is_empty() {
            let dist = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            return Ok(Some((dist, g)));
        }
        for d in cuts {
            let fd = inst.value(&d);
            spec = spec.le(d, fd);
        }
        match project_polyhedron(&vec![0.0; m], &spec, tol)? {
            Projection::Projected { z, report } => {
                if report.status != SolveStatus::Optimal {
                    return Err(Error::MaxIter {
                        solver: "cut projection",
                        iterations: report.iterations,
                    });
                }
                g = z;
            }
            Projection::Infeasible => return Ok(None),
        }
    }
    Err(Error::MaxIter {
        solver: "orthant cutting planes",
        iterations: MAX_CUT_ROUNDS,
    })
}

/// Minimizer of `f(d) - g'd` over the orthant with `|d_k| <= 1` when the
/// minimum is below `-margin_tol`.
fn orthant_minimizer(inst: &PltInstance, orthant: u32, g: &[f64], tol: &Tolerances) -> Result<Option<Vec<f64>>> {
    let m = inst.dim();
    let sign = |k: usize| if orthant >> k & 1 == 1 { 1.0 } else { -1.0 };
    // variables (d, t): minimize t - g'd subject to clause_i(d) <= t
    let mut objective: Vec<f64> = g.iter().map(|v| -v).collect();
    objective.push(1.0);
    let mut lp = LinearProgram::new(objective);
    for k in 0..m {
        if sign(k) > 0.0 {
            lp.bound(k, 0.0, 1.0);
        } else {
            lp.bound(k, -1.0, 0.0);
        }
    }
    for i in 0..inst.num_clauses() {
        let mut row = vec![0.0; m + 1];
        for j in 0..3 {
            let (k, s) = inst.axis(3 * i + j);
            if s == sign(k) {
                row[k] -= s;
            }
        }
        row[m] = -1.0;
        lp.row(row, RowSense::Le, 0.0);
    }
    match solve_lp(&lp, tol)? {
        LpOutcome::Optimal { mut x, value } if value < -tol.margin_tol => {
            x.truncate(m);
            Ok(Some(x))
        }
        LpOutcome::Optimal { .. } => Ok(None),
        _ => unreachable!("bounded LP with a feasible origin"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardness::cnf::{random_cnf3, satisfying_assignment};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single() -> PltInstance {
        sat_to_plt(&Cnf3::new(3, vec![vec![1, -2, 3]]).unwrap()).unwrap()
    }

    fn unsat_pair() -> PltInstance {
        sat_to_plt(&Cnf3::new(1, vec![vec![1], vec![-1]]).unwrap()).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn reduction_mapping() {
        let inst = single();
        assert_eq!(
            inst.vectors(),
            &[vec![1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 1.0]]
        );
        let pair = unsat_pair();
        assert_eq!(
            pair.vectors(),
            &[vec![1.0], vec![1.0], vec![1.0], vec![-1.0], vec![-1.0], vec![-1.0]]
        );
        assert!(sat_to_plt(&Cnf3::new(2, vec![]).unwrap()).is_err());
    }

    #[test]
    fn evaluation() {
        assert_eq!(eval_plt(&single(), &[1.0, -1.0, 1.0]).unwrap(), -3.0);
        assert_eq!(eval_plt(&single(), &[0.0; 3]).unwrap(), 0.0);
        let pair = unsat_pair();
        for d in [-2.0, -0.5, 0.0, 0.5, 2.0] {
            assert!(eval_plt(&pair, &[d]).unwrap() >= 0.0);
        }
        assert!(eval_plt(&pair, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_non_axis_vectors() {
        assert!(PltInstance::new(2, vec![vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(PltInstance::new(2, vec![vec![2.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(PltInstance::new(2, vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn verdicts_on_small_instances() {
        for mode in [PltMode::Exhaustive, PltMode::Certificate] {
            assert!(!plt_stationary(&single(), 0.0, mode, &tol()).unwrap());
            assert!(plt_stationary(&unsat_pair(), 0.0, mode, &tol()).unwrap());
        }
        let d = certificate(&single(), &tol()).unwrap().unwrap();
        assert!(eval_plt(&single(), &d).unwrap() <= -1.0 + 1e-9);
    }

    #[test]
    fn certificate_mode_epsilon_limit() {
        assert!(plt_stationary(&single(), 0.6, PltMode::Certificate, &tol()).is_err());
        assert!(plt_stationary(&single(), 0.5, PltMode::Certificate, &tol()).is_ok());
        assert!(plt_stationary(&single(), -1.0, PltMode::Exhaustive, &tol()).is_err());
    }

    #[test]
    fn frechet_distance_of_small_instances() {
        let (dist, g) = frechet_distance(&unsat_pair(), &tol()).unwrap().unwrap();
        assert!(dist < 1e-12 && g.len() == 1);
        // single clause: f(d) = -(max(d1,0) + max(-d2,0) + max(d3,0)) is
        // concave and nonsmooth at 0, so its Frechet subdifferential is empty
        assert!(frechet_distance(&single(), &tol()).unwrap().is_none());
    }

    #[test]
    fn single_literal_has_empty_subdifferential() {
        // f(d) = -max(d1, 0) has no linear minorant through the origin
        let inst = sat_to_plt(&Cnf3::new(1, vec![vec![1]]).unwrap()).unwrap();
        assert!(frechet_distance(&inst, &tol()).unwrap().is_none());
    }

    #[test]
    fn distance_of_a_nonnegative_nonconvex_function() {
        // (x1) and (not x1) over two variables with an unused x2: f >= 0 and
        // f(d) = 0 on the d1 = 0 line, so the minimal subgradient is 0
        let inst = sat_to_plt(&Cnf3::new(2, vec![vec![1], vec![-1]]).unwrap()).unwrap();
        let (dist, _) = frechet_distance(&inst, &tol()).unwrap().unwrap();
        assert!(dist < 1e-12);
    }

    #[test]
    fn small_epsilon_agrees_with_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let m = rng.random_range(1..=4);
            let n = rng.random_range(1..=4);
            let inst = sat_to_plt(&random_cnf3(&mut rng, m, n)).unwrap();
            let eps = 0.9 / (m as f64).sqrt();
            let zero = plt_stationary(&inst, 0.0, PltMode::Exhaustive, &tol()).unwrap();
            assert_eq!(plt_stationary(&inst, eps, PltMode::Exhaustive, &tol()).unwrap(), zero);
            assert_eq!(plt_stationary(&inst, eps, PltMode::Certificate, &tol()).unwrap(), zero);
        }
    }

    #[test]
    fn satisfying_assignment_gives_unit_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let m = rng.random_range(1..=6);
            let n = rng.random_range(1..=6);
            let cnf = random_cnf3(&mut rng, m, n);
            let inst = sat_to_plt(&cnf).unwrap();
            if let Some(a) = satisfying_assignment(&cnf).unwrap() {
                assert!(eval_plt(&inst, &assignment_direction(&a)).unwrap() <= -1.0);
            }
        }
    }

    #[test]
    fn positive_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let m = rng.random_range(1..=6);
            let n = rng.random_range(1..=6);
            let inst = sat_to_plt(&random_cnf3(&mut rng, m, n)).unwrap();
            let d: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            let base = eval_plt(&inst, &d).unwrap();
            for t in [0.0, 0.5, 2.0] {
                let td: Vec<f64> = d.iter().map(|v| t * v).collect();
                assert!((eval_plt(&inst, &td).unwrap() - t * base).abs() <= 1e-12);
            }
        }
    }
}
