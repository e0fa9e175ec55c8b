//! Euclidean projection onto `{z : a'z >= b, a'z <= b, a'z = b}`.
//!
//! A margin LP supplies a feasible start (and the infeasibility verdict);
//! a primal active-set method with an identity Hessian then walks to the
//! projection, keeping the working set linearly independent.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::lp::{solve_lp, LinearProgram, LpOutcome, RowSense};
use super::{dot, norm, rank_with_tolerance, PolyhedronSpec, SolveReport, SolveStatus, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Projected { z: Vec<f64>, report: SolveReport },
    Infeasible,
}

impl Projection {
    pub fn point(&self) -> Option<&[f64]> {
        match self {
            Projection::Projected { z, .. } => Some(z),
            Projection::Infeasible => None,
        }
    }
}

/// `a'z >= b` form of a constraint; equalities are kept apart.
struct Row {
    a: Vec<f64>,
    b: f64,
}

pub fn project_polyhedron(w: &[f64], spec: &PolyhedronSpec, tol: &Tolerances) -> Result<Projection> {
    let d = w.len();
    let all = spec.ge_rows.iter().chain(&spec.le_rows).chain(&spec.eq_rows);
    if all.clone().any(|(a, _)| a.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: all.map(|(a, _)| a.len()).find(|&l| l != d).unwrap_or(0),
            context: "polyhedron row",
        });
    }

    let mut ineq: Vec<Row> = Vec::new();
    for (a, b) in &spec.ge_rows {
        ineq.push(Row { a: a.clone(), b: *b });
    }
    for (a, b) in &spec.le_rows {
        ineq.push(Row {
            a: a.iter().map(|v| -v).collect(),
            b: -b,
        });
    }
    let eqs: Vec<Row> = spec.eq_rows.iter().map(|(a, b)| Row { a: a.clone(), b: *b }).collect();

    let exactly_feasible = ineq.iter().all(|r| dot(&r.a, w) >= r.b) && eqs.iter().all(|r| dot(&r.a, w) == r.b);
    if exactly_feasible {
        return Ok(Projection::Projected {
            z: w.to_vec(),
            report: SolveReport {
                status: SolveStatus::Optimal,
                kkt_residual: 0.0,
                iterations: 0,
            },
        });
    }

    for r in ineq.iter().chain(&eqs) {
        if norm(&r.a) == 0.0 {
            let ok = if eqs.iter().any(|e| std::ptr::eq(e, r)) {
                r.b.abs() <= tol.feas_tol
            } else {
                r.b <= tol.feas_tol
            };
            if !ok {
                return Ok(Projection::Infeasible);
            }
        }
    }
    let ineq: Vec<Row> = ineq.into_iter().filter(|r| norm(&r.a) > 0.0).collect();
    let eqs: Vec<Row> = eqs.into_iter().filter(|r| norm(&r.a) > 0.0).collect();

    let Some(mut z) = phase_one(d, &ineq, &eqs, tol)? else {
        return Ok(Projection::Infeasible);
    };

    // Independent subset of the equalities; the rest are implied (phase one
    // established consistency).
    let mut working: Vec<(bool, usize)> = Vec::new();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for (i, r) in eqs.iter().enumerate() {
        kept.push(r.a.clone());
        if rank_with_tolerance(&kept, 1e-10) == kept.len() {
            working.push((true, i));
        } else {
            kept.pop();
        }
    }

    let row_of = |(is_eq, i): (bool, usize)| -> &Row {
        if is_eq {
            &eqs[i]
        } else {
            &ineq[i]
        }
    };
    let scale = 1.0 + norm(w);
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > tol.max_iter {
            return Err(Error::MaxIter {
                solver: "polyhedral projection",
                iterations: tol.max_iter,
            });
        }
        let g: Vec<f64> = z.iter().zip(w).map(|(zi, wi)| zi - wi).collect();
        let rows: Vec<&Row> = working.iter().map(|&k| row_of(k)).collect();
        let (lambda, p) = multipliers_and_step(&rows, &g, d);
        if norm(&p) <= 1e-13 * scale.max(norm(&g)) {
            let mut worst: Option<(usize, f64)> = None;
            for (slot, (&(is_eq, _), &l)) in working.iter().zip(&lambda).enumerate() {
                if !is_eq && l < -1e-12 * scale && worst.is_none_or(|(_, v)| l < v) {
                    worst = Some((slot, l));
                }
            }
            match worst {
                Some((slot, _)) => {
                    working.remove(slot);
                    continue;
                }
                None => {
                    let kkt = kkt_residual(&z, w, &ineq, &eqs, &working, &lambda);
                    let status = if kkt <= tol.qp_tol * scale {
                        SolveStatus::Optimal
                    } else {
                        SolveStatus::MaxIter
                    };
                    return Ok(Projection::Projected {
                        z,
                        report: SolveReport {
                            status,
                            kkt_residual: kkt,
                            iterations,
                        },
                    });
                }
            }
        }

        let mut alpha = 1.0;
        let mut block = None;
        for (i, r) in ineq.iter().enumerate() {
            if working.contains(&(false, i)) {
                continue;
            }
            let ap = dot(&r.a, &p);
            if ap < -1e-14 * norm(&r.a) * norm(&p) {
                let slack = (dot(&r.a, &z) - r.b).max(0.0);
                let t = slack / -ap;
                if t < alpha {
                    alpha = t;
                    block = Some(i);
                }
            }
        }
        for (zi, pi) in z.iter_mut().zip(&p) {
            *zi += alpha * pi;
        }
        if let Some(i) = block {
            working.push((false, i));
        }
    }
}

/// Least-squares multipliers `argmin ||A_W' lambda - g||` and the step
/// `p = -(I - P) g`, with `P` the orthogonal projector onto the row space of
/// `A_W` built from the same SVD. Forming `p` from the projector rather than
/// the residual `A_W' lambda - g` keeps it exactly zero at a vertex when the
/// multipliers are large.
fn multipliers_and_step(rows: &[&Row], g: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut p: Vec<f64> = g.iter().map(|v| -v).collect();
    if rows.is_empty() {
        return (Vec::new(), p);
    }
    let at = DMatrix::from_fn(d, rows.len(), |i, c| rows[c].a[i]);
    let rhs = DVector::from_column_slice(g);
    let svd = at.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = 1e-12 * smax;
    let lambda = match svd.solve(&rhs, cut) {
        Ok(l) => l.iter().copied().collect(),
        Err(_) => vec![0.0; rows.len()],
    };
    if let Some(u) = &svd.u {
        let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
        if rank >= d {
            return (lambda, vec![0.0; d]);
        }
        for c in 0..rank {
            let col = u.column(c);
            let coef: f64 = col.iter().zip(g).map(|(a, b)| a * b).sum();
            for (pi, ui) in p.iter_mut().zip(col.iter()) {
                *pi += coef * ui;
            }
        }
    }
    (lambda, p)
}

fn kkt_residual(z: &[f64], w: &[f64], ineq: &[Row], eqs: &[Row], working: &[(bool, usize)], lambda: &[f64]) -> f64 {
    let mut stat: Vec<f64> = z.iter().zip(w).map(|(zi, wi)| zi - wi).collect();
    let mut worst: f64 = 0.0;
    for (&(is_eq, i), &l) in working.iter().zip(lambda) {
        let r = if is_eq { &eqs[i] } else { &ineq[i] };
        for (s, a) in stat.iter_mut().zip(&r.a) {
            *s -= l * a;
        }
        if !is_eq {
            worst = worst.max(-l);
        }
    }
    worst = worst.max(norm(&stat));
    for r in ineq {
        worst = worst.max(r.b - dot(&r.a, z));
    }
    for r in eqs {
        worst = worst.max((dot(&r.a, z) - r.b).abs());
    }
    worst
}

/// Maximizes the normalized margin `s` with `a'z - b >= s ||a||` and the
/// equalities; returns a feasible start or `None` when the margin is below
/// `-feas_tol` or the equalities are inconsistent.
fn phase_one(d: usize, ineq: &[Row], eqs: &[Row], tol: &Tolerances) -> Result<Option<Vec<f64>>> {
    let mut objective = vec![0.0; d + 1];
    objective[d] = -1.0;
    let mut lp = LinearProgram::new(objective);
    lp.bound(d, f64::NEG_INFINITY, 1.0);
    for r in ineq {
        let n = norm(&r.a);
        let mut coeffs: Vec<f64> = r.a.iter().map(|v| v / n).collect();
        coeffs.push(-1.0);
        lp.row(coeffs, RowSense::Ge, r.b / n);
    }
    for r in eqs {
        let n = norm(&r.a);
        let mut coeffs: Vec<f64> = r.a.iter().map(|v| v / n).collect();
        coeffs.push(0.0);
        lp.row(coeffs, RowSense::Eq, r.b / n);
    }
    match solve_lp(&lp, tol)? {
        LpOutcome::Optimal { x, .. } => {
            if !ineq.is_empty() && x[d] <= -tol.feas_tol {
                Ok(None)
            } else {
                Ok(Some(x[..d].to_vec()))
            }
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::invalid("margin LP unbounded despite s <= 1")),
    }
}
