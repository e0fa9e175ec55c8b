//! Brute-force ground truth that never touches the chain-rule formulas.
//!
//! Every tied pair `(k, i)` defines the hyperplane `{d : x_i'd_{w_k} = 0}` in
//! parameter space. Each full-dimensional cell of that arrangement fixes the
//! tied ReLUs on or off, the loss is smooth along the cell, and its gradient
//! there is a Bouligand limit. The Clarke set is the hull of those gradients;
//! the Frechet set is checked cone by cone against the piecewise-linear
//! directional derivative.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    directional_derivative, eval_loss, local_structure, piece_gradient, Dataset, LossModel, Network, TieRule,
};
use crate::numkit::{
    lp_strict_feasible, min_norm_in_hull, solve_lp, LinearProgram, LpOutcome, RowSense, Strict, Tolerances,
};

/// Largest number of simultaneous ties the enumeration accepts.
pub const MAX_ORACLE_TIES: usize = 20;

/// One full-dimensional cell of the tie arrangement.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSign {
    /// `+1` or `-1` per tied pair, in the arrangement's tie order.
    pub signs: Vec<i8>,
    /// A parameter-space direction strictly inside the cell.
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    /// Tied `(unit, sample)` pairs.
    pub ties: Vec<(usize, usize)>,
    pub cells: Vec<CellSign>,
}

fn tie_row(net: &Network, data: &Dataset, k: usize, i: usize) -> Vec<f64> {
    let d = net.dim();
    let mut row = vec![0.0; net.param_len()];
    row[k * (d + 1) + 1..(k + 1) * (d + 1)].copy_from_slice(data.point(i));
    row
}

pub fn enumerate_cells(net: &Network, data: &Dataset, loss: &LossModel, tol: &Tolerances) -> Result<Arrangement> {
    let local = local_structure(net, data, loss, TieRule::Exact)?;
    let ties: Vec<(usize, usize)> = local
        .partition
        .units
        .iter()
        .enumerate()
        .flat_map(|(k, u)| u.eq.iter().map(move |&i| (k, i)))
        .collect();
    if ties.len() > MAX_ORACLE_TIES {
        return Err(Error::GuardExceeded {
            what: "simultaneous ties",
            value: ties.len() as u128,
            limit: MAX_ORACLE_TIES as u128,
        });
    }
    if ties.is_empty() {
        return Ok(Arrangement {
            ties,
            cells: vec![CellSign {
                signs: Vec::new(),
                witness: vec![0.0; net.param_len()],
            }],
        });
    }
    let rows: Vec<Vec<f64>> = ties.iter().map(|&(k, i)| tie_row(net, data, k, i)).collect();
    let mut cells = Vec::new();
    let mut prefix = Vec::with_capacity(rows.len());
    extend_cells(&rows, tol, &mut prefix, &mut cells)?;
    Ok(Arrangement { ties, cells })
}

fn extend_cells(rows: &[Vec<f64>], tol: &Tolerances, prefix: &mut Vec<i8>, cells: &mut Vec<CellSign>) -> Result<()> {
    for s in [-1i8, 1] {
        prefix.push(s);
        let strict: Vec<(Vec<f64>, Strict)> = rows
            .iter()
            .zip(prefix.iter())
            .map(|(r, &s)| (r.clone(), Strict::from_sign(s as f64)))
            .collect();
        let res = lp_strict_feasible(&strict, &[], tol)?;
        if res.feasible {
            if prefix.len() == rows.len() {
                cells.push(CellSign {
                    signs: prefix.clone(),
                    witness: res.witness.unwrap_or_default(),
                });
            } else {
                extend_cells(rows, tol, prefix, cells)?;
            }
        }
        prefix.pop();
    }
    Ok(())
}

/// Gradient of the smooth piece on one cell: a tied ReLU is active iff its
/// sign in the cell is `+1`.
pub fn cell_gradient(
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    arrangement: &Arrangement,
    cell: &CellSign,
) -> Result<Vec<f64>> {
    piece_gradient(net, data, loss, TieRule::Exact, |k, i| {
        arrangement
            .ties
            .iter()
            .position(|&t| t == (k, i))
            .map(|p| cell.signs[p] > 0)
            .unwrap_or(false)
    })
}

/// All cell gradients; their convex hull is the Clarke subdifferential.
pub fn bouligand_gradients(net: &Network, data: &Dataset, loss: &LossModel, tol: &Tolerances) -> Result<Vec<Vec<f64>>> {
    let arrangement = enumerate_cells(net, data, loss, tol)?;
    arrangement
        .cells
        .iter()
        .map(|c| cell_gradient(net, data, loss, &arrangement, c))
        .collect()
}

/// `dist(0, conv(Bouligand gradients))`.
pub fn clarke_oracle_distance(net: &Network, data: &Dataset, loss: &LossModel, tol: &Tolerances) -> Result<f64> {
    let grads = bouligand_gradients(net, data, loss, tol)?;
    Ok(min_norm_in_hull(&grads, tol)?.distance)
}

/// Whether `g` is a Frechet subgradient: on every closed cell cone `K`,
/// where the directional derivative is `c_K'd`, the LP
/// `min (c_K - g)'d over K, ||d||_inf <= 1` stays above `-margin_tol`.
pub fn frechet_oracle_check(
    g: &[f64],
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    tol: &Tolerances,
) -> Result<bool> {
    if g.len() != net.param_len() {
        return Err(Error::DimensionMismatch {
            expected: net.param_len(),
            got: g.len(),
            context: "candidate subgradient",
        });
    }
    let arrangement = enumerate_cells(net, data, loss, tol)?;
    let rows: Vec<Vec<f64>> = arrangement
        .ties
        .iter()
        .map(|&(k, i)| tie_row(net, data, k, i))
        .collect();
    for cell in &arrangement.cells {
        let c = cell_gradient(net, data, loss, &arrangement, cell)?;
        let objective: Vec<f64> = c.iter().zip(g).map(|(ci, gi)| ci - gi).collect();
        let mut lp = LinearProgram::new(objective);
        lp.bound_all(-1.0, 1.0);
        for (row, &s) in rows.iter().zip(&cell.signs) {
            lp.row(row.iter().map(|v| v * s as f64).collect(), RowSense::Ge, 0.0);
        }
        match solve_lp(&lp, tol)? {
            LpOutcome::Optimal { value, .. } => {
                if value < -tol.margin_tol {
                    return Ok(false);
                }
            }
            _ => return Err(Error::invalid("cell cone LP must be bounded and feasible")),
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub seed: u64,
    pub steps: Vec<f64>,
    /// Best relative error over the step sizes, per direction.
    pub errors: Vec<f64>,
    pub max_rel_error: f64,
}

pub const FD_STEPS: [f64; 5] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7];

/// Forward difference quotient of the loss along `dir`.
pub fn difference_quotient(net: &Network, data: &Dataset, loss: &LossModel, dir: &[f64], t: f64) -> Result<f64> {
    let f0 = eval_loss(net, data, loss)?;
    let f1 = eval_loss(&net.shifted(dir, t)?, data, loss)?;
    Ok((f1 - f0) / t)
}

/// Compares the analytic directional derivative with forward differences
/// along seeded random unit directions.
pub fn finite_difference_report(
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    n_directions: usize,
    seed: u64,
) -> Result<FdReport> {
    if n_directions == 0 {
        return Err(Error::invalid("need at least one direction"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = net.param_len();
    let mut errors = Vec::with_capacity(n_directions);
    for _ in 0..n_directions {
        let mut dir: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        dir.iter_mut().for_each(|v| *v /= nrm);
        let dd = directional_derivative(net, data, loss, &dir)?;
        let mut best = f64::INFINITY;
        for &t in &FD_STEPS {
            let fd = difference_quotient(net, data, loss, &dir, t)?;
            best = best.min((fd - dd).abs() / dd.abs().max(1.0));
        }
        errors.push(best);
    }
    let max_rel_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(FdReport {
        seed,
        steps: FD_STEPS.to_vec(),
        errors,
        max_rel_error,
    })
}
