//! Minimum-norm point in the convex hull of finitely many points (Wolfe's
//! method).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::{dot, solve_lp, LinearProgram, LpOutcome, RowSense, SolveReport, SolveStatus, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct HullSolution {
    pub distance: f64,
    pub point: Vec<f64>,
    /// Convex weights over the input points.
    pub weights: Vec<f64>,
    pub report: SolveReport,
}

fn combine(points: &[Vec<f64>], corral: &[usize], lambda: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&i, &l) in corral.iter().zip(lambda) {
        for (xv, pv) in x.iter_mut().zip(&points[i]) {
            *xv += l * pv;
        }
    }
    x
}

/// Affine minimum-norm combination of the corral points, solved as a
/// least-squares problem in the differences `p_j - p_0` (avoids squaring the
/// condition number through the Gram matrix).
fn affine_min_norm(points: &[Vec<f64>], corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    let p0 = &points[corral[0]];
    let dim = p0.len();
    if k == 1 {
        return vec![1.0];
    }
    let diffs = DMatrix::from_fn(dim, k - 1, |i, c| points[corral[c + 1]][i] - p0[i]);
    let rhs = DVector::from_iterator(dim, p0.iter().map(|v| -v));
    let svd = diffs.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let beta: Vec<f64> = if smax == 0.0 {
        vec![0.0; k - 1]
    } else {
        match svd.solve(&rhs, 1e-13 * smax) {
            Ok(b) => b.iter().copied().collect(),
            Err(_) => vec![0.0; k - 1],
        }
    };
    let mut alpha = Vec::with_capacity(k);
    alpha.push(1.0 - beta.iter().sum::<f64>());
    alpha.extend(beta);
    alpha
}

pub fn min_norm_in_hull(points: &[Vec<f64>], tol: &Tolerances) -> Result<HullSolution> {
    let Some(first) = points.first() else {
        return Err(Error::invalid("convex hull of an empty point set"));
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("hull points must share a dimension"));
    }
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max);
    let gap_tol = 1e-14 * scale.max(1e-300);

    let start = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap_or(0);
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();
    let mut iterations = 0;

    loop {
        iterations += 1;
        if iterations > tol.max_iter {
            return Err(Error::MaxIter {
                solver: "min-norm hull",
                iterations: tol.max_iter,
            });
        }
        let xx = dot(&x, &x);
        let (j, xp) = (0..points.len())
            .map(|j| (j, dot(&x, &points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, xx));
        if xx - xp <= gap_tol || corral.contains(&j) {
            break;
        }
        let (prev_corral, prev_lambda) = (corral.clone(), lambda.clone());
        corral.push(j);
        lambda.push(0.0);

        // Minor cycle: move toward the affine minimizer until it lies in the
        // relative interior of the corral.
        loop {
            let alpha = affine_min_norm(points, &corral);
            if alpha.iter().all(|&a| a > 1e-12) {
                lambda = alpha;
                break;
            }
            let mut theta: f64 = 1.0;
            for (&l, &a) in lambda.iter().zip(&alpha) {
                if a <= 1e-12 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l += theta * (a - *l);
            }
            let keep: Vec<bool> = lambda.iter().map(|&l| l > 1e-12).collect();
            if keep.iter().all(|&k| k) {
                // Numerical stall: drop the smallest weight.
                let (idx, _) = lambda
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap_or((0, &0.0));
                corral.remove(idx);
                lambda.remove(idx);
            } else {
                let mut c = Vec::new();
                let mut l = Vec::new();
                for ((&ci, &li), &k) in corral.iter().zip(&lambda).zip(&keep) {
                    if k {
                        c.push(ci);
                        l.push(li);
                    }
                }
                corral = c;
                lambda = l;
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            if corral.len() == 1 {
                break;
            }
        }
        let next = combine(points, &corral, &lambda, dim);
        if dot(&next, &next) >= xx {
            // No strict decrease left at working precision.
            corral = prev_corral;
            lambda = prev_lambda;
            break;
        }
        x = next;
    }

    let xx = dot(&x, &x);
    let gap = points.iter().map(|p| xx - dot(&x, p)).fold(0.0, f64::max);
    let mut weights = vec![0.0; points.len()];
    for (&i, &l) in corral.iter().zip(&lambda) {
        weights[i] += l;
    }
    Ok(HullSolution {
        distance: xx.sqrt(),
        point: x,
        weights,
        report: SolveReport {
            status: if gap <= tol.qp_tol * scale.max(1.0) {
                SolveStatus::Optimal
            } else {
                SolveStatus::MaxIter
            },
            kkt_residual: gap,
            iterations,
        },
    })
}

/// Whether `target` lies in `conv(points)`: minimizes the sup-norm residual
/// of a convex combination by LP and compares it with `feas_tol` (relative
/// to the data scale).
pub fn hull_contains(points: &[Vec<f64>], target: &[f64], tol: &Tolerances) -> Result<bool> {
    if points.is_empty() {
        return Ok(false);
    }
    let dim = target.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("hull points must match the target dimension"));
    }
    let n = points.len();
    // variables (lambda, s), minimize s
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::new(objective);
    lp.bound_all(0.0, f64::INFINITY);
    let mut ones = vec![1.0; n + 1];
    ones[n] = 0.0;
    lp.row(ones, RowSense::Eq, 1.0);
    for c in 0..dim {
        let mut le: Vec<f64> = points.iter().map(|p| p[c]).collect();
        let mut ge = le.clone();
        le.push(-1.0);
        ge.push(1.0);
        lp.row(le, RowSense::Le, target[c]);
        lp.row(ge, RowSense::Ge, target[c]);
    }
    let scale = points
        .iter()
        .chain(std::iter::once(&target.to_vec()))
        .flat_map(|p| p.iter().map(|v| v.abs()))
        .fold(1.0, f64::max);
    match solve_lp(&lp, tol)? {
        LpOutcome::Optimal { value, .. } => Ok(value <= tol.feas_tol * scale),
        _ => Err(Error::invalid("hull membership LP must be bounded and feasible")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::norm;
    use proptest::prelude::*;

    fn hull(points: Vec<Vec<f64>>) -> HullSolution {
        min_norm_in_hull(&points, &Tolerances::default()).unwrap()
    }

    #[test]
    fn hull_membership() {
        let tri = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]];
        let tol = Tolerances::default();
        assert!(hull_contains(&tri, &[0.5, 0.5], &tol).unwrap());
        assert!(hull_contains(&tri, &[1.0, 1.0], &tol).unwrap());
        assert!(!hull_contains(&tri, &[1.0, 1.01], &tol).unwrap());
        assert!(!hull_contains(&[], &[0.0], &tol).unwrap());
    }

    #[test]
    fn segment_through_origin() {
        let sol = hull(vec![vec![1.0], vec![-1.0]]);
        assert!(sol.distance < 1e-15);
        assert!((sol.weights[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_point_and_duplicate_points() {
        assert_eq!(hull(vec![vec![3.0, 4.0]]).distance, 5.0);
        assert_eq!(hull(vec![vec![3.0, 4.0], vec![3.0, 4.0]]).distance, 5.0);
    }

    #[test]
    fn triangle_edge_closest() {
        // closest point of the segment (1,-1)-(1,1) is (1,0)
        let sol = hull(vec![vec![1.0, -1.0], vec![1.0, 1.0], vec![3.0, 0.0]]);
        assert!((sol.distance - 1.0).abs() < 1e-12);
        assert!(sol.weights[2].abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(min_norm_in_hull(&[], &Tolerances::default()).is_err());
    }

    proptest! {
        #[test]
        fn optimality_and_weight_consistency(
            pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..9),
        ) {
            let sol = min_norm_in_hull(&pts, &Tolerances::default()).unwrap();
            prop_assert_eq!(sol.report.status, SolveStatus::Optimal);
            let total: f64 = sol.weights.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            prop_assert!(sol.weights.iter().all(|&w| w >= 0.0));
            let mut x = vec![0.0; 3];
            for (p, w) in pts.iter().zip(&sol.weights) {
                for k in 0..3 { x[k] += w * p[k]; }
            }
            prop_assert!((norm(&x) - sol.distance).abs() < 1e-9);
            // optimality: every point lies in the half-space x.p >= x.x
            for p in &pts {
                prop_assert!(dot(&sol.point, p) >= dot(&sol.point, &sol.point) - 1e-9);
            }
        }
    }
}
