//! The network test function
//! `f(u, w) = max_i sum_j u_{3i+j} max(w'y_{3i+j}, 0)` and its directional
//! derivative at `(-1, 0)`, which equals the PLT function of `d^w`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::plt::{eval_plt, PltInstance};

/// Base step of the Richardson difference quotient.
pub const NNT_STEP: f64 = 1e-4;

pub fn eval_nnt(inst: &PltInstance, u: &[f64], w: &[f64]) -> Result<f64> {
    let n = inst.num_clauses();
    if u.len() != 3 * n {
        return Err(Error::DimensionMismatch {
            expected: 3 * n,
            got: u.len(),
            context: "outer weights",
        });
    }
    if w.len() != inst.dim() {
        return Err(Error::DimensionMismatch {
            expected: inst.dim(),
            got: w.len(),
            context: "inner weights",
        });
    }
    Ok((0..n)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let (k, s) = inst.axis(3 * i + j);
                    u[3 * i + j] * (s * w[k]).max(0.0)
                })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Directional derivative of `f` at `(-1, 0)` along `(du, dw)`.
///
/// Along the ray `f(-1 + t du, t dw) / t` is a max of functions affine in
/// `t`, hence affine for small `t`; Richardson extrapolation of the
/// difference quotient at `t` and `t/2` removes the slope.
pub fn nnt_directional_derivative(inst: &PltInstance, du: &[f64], dw: &[f64]) -> Result<f64> {
    let base_u = vec![-1.0; 3 * inst.num_clauses()];
    let f0 = eval_nnt(inst, &base_u, &vec![0.0; inst.dim()])?;
    let quotient = |t: f64| -> Result<f64> {
        let u: Vec<f64> = base_u.iter().zip(du).map(|(b, d)| b + t * d).collect();
        let w: Vec<f64> = dw.iter().map(|d| t * d).collect();
        Ok((eval_nnt(inst, &u, &w)? - f0) / t)
    };
    Ok(2.0 * quotient(NNT_STEP / 2.0)? - quotient(NNT_STEP)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NntReport {
    pub seed: u64,
    /// `|f'((-1, 0); (du, dw)) - f_PLT(dw)|` per direction.
    pub errors: Vec<f64>,
    pub max_error: f64,
}

/// Compares directional derivatives along `n_directions` Gaussian directions
/// with the PLT function of the inner-weight part.
pub fn nnt_directional_check(inst: &PltInstance, n_directions: usize, seed: u64) -> Result<NntReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(n_directions);
    for _ in 0..n_directions {
        let du: Vec<f64> = (0..3 * inst.num_clauses())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let dw: Vec<f64> = (0..inst.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let derivative = nnt_directional_derivative(inst, &du, &dw)?;
        errors.push((derivative - eval_plt(inst, &dw)?).abs());
    }
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    Ok(NntReport {
        seed,
        errors,
        max_error,
    })
}
