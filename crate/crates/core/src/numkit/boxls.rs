//! `min_{xi in [0,1]^n} ||a0 + P xi||` by a primal active-set method.
//!
//! Subspace steps use the minimum-norm least-squares solution, so rank
//! deficient generator sets are fine. When a bound is released the freed
//! coordinate first takes an exact line-search step, which strictly lowers
//! the objective and rules out cycling between working sets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::{dot, norm, SegmentSumSet, SolveReport, SolveStatus, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct BoxLsSolution {
    pub distance: f64,
    pub xi: Vec<f64>,
    pub report: SolveReport,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

fn residual(set: &SegmentSumSet, xi: &[f64]) -> Vec<f64> {
    set.eval(xi)
}

fn gradient(set: &SegmentSumSet, r: &[f64]) -> Vec<f64> {
    set.generators.iter().map(|p| dot(p, r)).collect()
}

/// Projected-gradient KKT residual `||xi - clip(xi - g)||_inf`.
fn kkt_residual(xi: &[f64], g: &[f64]) -> f64 {
    xi.iter()
        .zip(g)
        .map(|(&x, &gj)| (x - (x - gj).clamp(0.0, 1.0)).abs())
        .fold(0.0, f64::max)
}

pub fn box_ls_distance(set: &SegmentSumSet, tol: &Tolerances) -> Result<BoxLsSolution> {
    let dim = set.dim();
    if set.generators.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("generator dimension differs from base"));
    }
    let n = set.generators.len();
    if n == 0 {
        return Ok(BoxLsSolution {
            distance: norm(&set.base),
            xi: Vec::new(),
            report: SolveReport {
                status: SolveStatus::Optimal,
                kkt_residual: 0.0,
                iterations: 0,
            },
        });
    }

    let scale = set
        .generators
        .iter()
        .map(|p| norm(p))
        .fold(0.0, f64::max)
        .max(norm(&set.base))
        .max(1e-300);
    let release_tol = 1e-13 * scale * scale;

    let mut xi = vec![0.0; n];
    let mut state = vec![Bound::Lower; n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > tol.max_iter {
            return Err(Error::MaxIter {
                solver: "box least squares",
                iterations: tol.max_iter,
            });
        }

        let free: Vec<usize> = (0..n).filter(|&j| state[j] == Bound::Free).collect();
        let r = residual(set, &xi);
        let step = subspace_step(set, &free, &r);
        let moving = step.iter().any(|s| s.abs() > 1e-15);

        if moving {
            // Largest feasible fraction of the step; the first blocking
            // coordinate joins the bound set.
            let mut alpha = 1.0;
            let mut block: Option<(usize, Bound)> = None;
            for (&j, &s) in free.iter().zip(&step) {
                if s < 0.0 {
                    let a = xi[j] / -s;
                    if a < alpha {
                        alpha = a;
                        block = Some((j, Bound::Lower));
                    }
                } else if s > 0.0 {
                    let a = (1.0 - xi[j]) / s;
                    if a < alpha {
                        alpha = a;
                        block = Some((j, Bound::Upper));
                    }
                }
            }
            for (&j, &s) in free.iter().zip(&step) {
                xi[j] = (xi[j] + alpha * s).clamp(0.0, 1.0);
            }
            if let Some((j, b)) = block {
                xi[j] = if b == Bound::Lower { 0.0 } else { 1.0 };
                state[j] = b;
                continue;
            }
        }

        // Subspace optimum: release the bound with the worst multiplier.
        let r = residual(set, &xi);
        let g = gradient(set, &r);
        let mut worst: Option<(usize, f64)> = None;
        for j in 0..n {
            let viol = match state[j] {
                Bound::Lower => -g[j],
                Bound::Upper => g[j],
                Bound::Free => 0.0,
            };
            if viol > release_tol && worst.is_none_or(|(_, w)| viol > w) {
                worst = Some((j, viol));
            }
        }
        let Some((j, _)) = worst else {
            let kkt = kkt_residual(&xi, &g);
            let distance = norm(&r);
            let status = if kkt <= tol.qp_tol {
                SolveStatus::Optimal
            } else {
                SolveStatus::MaxIter
            };
            return Ok(BoxLsSolution {
                distance,
                xi,
                report: SolveReport {
                    status,
                    kkt_residual: kkt,
                    iterations,
                },
            });
        };
        let pj = &set.generators[j];
        let t = (-g[j] / dot(pj, pj)).clamp(-xi[j], 1.0 - xi[j]);
        xi[j] += t;
        state[j] = if xi[j] <= 0.0 {
            xi[j] = 0.0;
            Bound::Lower
        } else if xi[j] >= 1.0 {
            xi[j] = 1.0;
            Bound::Upper
        } else {
            Bound::Free
        };
    }
}

/// Minimum-norm `s` minimizing `||r + P_free s||`.
fn subspace_step(set: &SegmentSumSet, free: &[usize], r: &[f64]) -> Vec<f64> {
    if free.is_empty() {
        return Vec::new();
    }
    let dim = set.dim();
    let p = DMatrix::from_fn(dim, free.len(), |i, c| set.generators[free[c]][i]);
    let rhs = DVector::from_iterator(dim, r.iter().map(|v| -v));
    let svd = p.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return vec![0.0; free.len()];
    }
    match svd.solve(&rhs, 1e-12 * smax) {
        Ok(s) => s.iter().copied().collect(),
        Err(_) => vec![0.0; free.len()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solve(base: Vec<f64>, gens: Vec<Vec<f64>>) -> BoxLsSolution {
        box_ls_distance(&SegmentSumSet::new(base, gens), &Tolerances::default()).unwrap()
    }

    /// Projected gradient with a fixed step, run to convergence.
    fn reference_distance(set: &SegmentSumSet) -> f64 {
        let n = set.generators.len();
        let lip: f64 = set.generators.iter().map(|p| dot(p, p)).sum::<f64>().max(1e-12);
        let mut xi = vec![0.5; n];
        for _ in 0..200_000 {
            let g = gradient(set, &residual(set, &xi));
            for j in 0..n {
                xi[j] = (xi[j] - g[j] / lip).clamp(0.0, 1.0);
            }
        }
        norm(&residual(set, &xi))
    }

    #[test]
    fn empty_generators_give_base_norm() {
        assert_eq!(solve(vec![0.0, 0.0], vec![]).distance, 0.0);
        assert_eq!(solve(vec![3.0, 4.0], vec![]).distance, 5.0);
    }

    #[test]
    fn interior_minimizer() {
        let sol = solve(vec![1.0], vec![vec![-2.0]]);
        assert!(sol.distance < 1e-15);
        assert!((sol.xi[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_minimizer() {
        let sol = solve(vec![3.0], vec![vec![-2.0]]);
        assert!((sol.distance - 1.0).abs() < 1e-15);
        assert_eq!(sol.xi[0], 1.0);
        assert_eq!(sol.report.status, SolveStatus::Optimal);
    }

    #[test]
    fn symmetric_segment_contains_origin() {
        // [0,1] + [-1,0] = [-1, 1]
        let sol = solve(vec![0.0], vec![vec![1.0], vec![-1.0]]);
        assert!(sol.distance < 1e-15);
    }

    #[test]
    fn rank_deficient_generators() {
        let gens = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![-1.0, -1.0], vec![0.5, 0.5]];
        let sol = solve(vec![-3.0, -2.0], gens);
        // the set is the segment (-3,-2) + t(1,1), t in [-1, 3.5]
        assert!((sol.distance - (0.5f64).sqrt()).abs() < 1e-12);
        assert_eq!(sol.report.status, SolveStatus::Optimal);
    }

    proptest! {
        #[test]
        fn matches_projected_gradient(
            base in prop::collection::vec(-3.0f64..3.0, 2),
            gens in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..5),
        ) {
            let set = SegmentSumSet::new(base, gens);
            let sol = box_ls_distance(&set, &Tolerances::default()).unwrap();
            prop_assert_eq!(sol.report.status, SolveStatus::Optimal);
            prop_assert!(sol.report.kkt_residual <= 1e-9);
            prop_assert!((sol.distance - norm(&set.eval(&sol.xi))).abs() < 1e-10);
            let reference = reference_distance(&set);
            prop_assert!(sol.distance <= reference + 1e-8);
            prop_assert!((sol.distance - reference).abs() < 1e-6);
        }

        #[test]
        fn first_order_perturbations_never_help(
            base in prop::collection::vec(-3.0f64..3.0, 3),
            gens in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..6),
        ) {
            let set = SegmentSumSet::new(base, gens);
            let sol = box_ls_distance(&set, &Tolerances::default()).unwrap();
            let f0 = 0.5 * sol.distance * sol.distance;
            for j in 0..sol.xi.len() {
                for h in [-1e-4, 1e-4] {
                    let mut xi = sol.xi.clone();
                    xi[j] = (xi[j] + h).clamp(0.0, 1.0);
                    let f = 0.5 * norm(&set.eval(&xi)).powi(2);
                    prop_assert!(f >= f0 - 1e-8);
                }
            }
        }
    }
}
