//! Seeded random instances with exact ties, for randomized testing.
//!
//! All data and weights are small integers (or halves), so pre-activations,
//! outputs and square-loss derivatives are computed exactly in floating
//! point and ties survive as literal zeros.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{Dataset, LossModel, Network, Unit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub max_dim: usize,
    pub max_points: usize,
    pub max_hidden: usize,
}

impl Default for InstanceShape {
    fn default() -> Self {
        Self {
            max_dim: 3,
            max_points: 5,
            max_hidden: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub net: Network,
    pub data: Dataset,
    pub loss: LossModel,
}

fn int_vec<R: Rng>(rng: &mut R, d: usize, bound: i32) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-bound..=bound) as f64).collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(x'x) w - (w'x) x`: an integer vector orthogonal to `x`.
pub fn project_out(w: &[f64], x: &[f64]) -> Vec<f64> {
    let xx = dot(x, x);
    let wx = dot(w, x);
    w.iter().zip(x).map(|(wi, xi)| xx * wi - wx * xi).collect()
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Data points with deliberate degeneracies: repeats, negations and
/// multiples show up often enough to exercise non-SQ and non-LIAD cases.
pub fn random_points<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let p = if !pts.is_empty() && rng.random_bool(0.25) {
            let src = &pts[rng.random_range(0..pts.len())];
            let c = [1.0, -1.0, 2.0][rng.random_range(0..3)];
            src.iter().map(|v| c * v).collect()
        } else {
            int_vec(rng, d, 3)
        };
        pts.push(p);
    }
    pts
}

/// Inner weight with injected ties against the given points.
pub fn random_tied_weight<R: Rng>(rng: &mut R, pts: &[Vec<f64>]) -> Vec<f64> {
    let d = pts[0].len();
    match rng.random_range(0..5) {
        0 => vec![0.0; d],
        1 => int_vec(rng, d, 2),
        2 if d == 3 && pts.len() >= 2 => {
            let a = &pts[rng.random_range(0..pts.len())];
            let b = &pts[rng.random_range(0..pts.len())];
            let c = cross(a, b);
            if c.iter().all(|&v| v == 0.0) {
                project_out(&int_vec(rng, d, 2), a)
            } else {
                c
            }
        }
        _ => {
            let x = &pts[rng.random_range(0..pts.len())];
            project_out(&int_vec(rng, d, 2), x)
        }
    }
}

fn small_scalar<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-4..=4) as f64 / 2.0
}

/// Random instance with `d <= max_dim`, `N <= max_points`, `H <= max_hidden`
/// and the given loss.
pub fn random_instance<R: Rng>(rng: &mut R, shape: InstanceShape, loss: LossModel) -> Instance {
    let d = rng.random_range(1..=shape.max_dim);
    let n = rng.random_range(1..=shape.max_points);
    let h = rng.random_range(1..=shape.max_hidden);
    let pts = random_points(rng, n, d);
    let labels: Vec<f64> = (0..n).map(|_| small_scalar(rng)).collect();
    let units: Vec<Unit> = (0..h)
        .map(|_| {
            let u = loop {
                let u = small_scalar(rng);
                if u != 0.0 || rng.random_bool(0.1) {
                    break u;
                }
            };
            Unit::new(u, random_tied_weight(rng, &pts))
        })
        .collect();
    Instance {
        net: Network::new(units).expect("generated network is valid"),
        data: Dataset::new(pts, labels).expect("generated points are nonzero"),
        loss,
    }
}

/// Alternates identity and square losses.
pub fn random_mixed_instance<R: Rng>(rng: &mut R, shape: InstanceShape) -> Instance {
    let loss = if rng.random_bool(0.5) {
        LossModel::identity()
    } else {
        LossModel::square()
    };
    random_instance(rng, shape, loss)
}

fn random_units<R: Rng>(rng: &mut R, pts: &[Vec<f64>], h: usize, zero_prob: f64) -> Vec<Unit> {
    (0..h)
        .map(|_| {
            let u = if rng.random_bool(zero_prob) {
                0.0
            } else {
                [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0][rng.random_range(0..8)]
            };
            Unit::new(u, random_tied_weight(rng, pts))
        })
        .collect()
}

fn exact_outputs(units: &[Unit], pts: &[Vec<f64>]) -> Vec<f64> {
    pts.iter()
        .map(|x| units.iter().map(|u| u.u * dot(&u.w, x).max(0.0)).sum())
        .collect()
}

/// Exactly Clarke-stationary point (`epsilon = 0`) under square loss.
///
/// Outer weights are nonzero: with `u_k = 0` the sign of a perturbed
/// `u_k rho_i` is arbitrary and SQ need not survive rounding.
/// Points active in some unit are fitted exactly (`rho_i = 0`); tied points
/// get residuals of magnitude `0.25..=0.75`, the rest any residual in
/// `[-0.75, 0.75]`. `None` when a point is active in one unit and tied in
/// another: its `rho_i = 0` would let the tie sets change sign under any
/// perturbation.
pub fn clarke_stationary_instance<R: Rng>(rng: &mut R, shape: InstanceShape) -> Option<Instance> {
    let d = rng.random_range(1..=shape.max_dim);
    let n = rng.random_range(1..=shape.max_points);
    let h = rng.random_range(1..=shape.max_hidden);
    let pts = random_points(rng, n, d);
    let units = random_units(rng, &pts, h, 0.0);
    let out = exact_outputs(&units, &pts);
    let mut labels = Vec::with_capacity(n);
    for (x, o) in pts.iter().zip(&out) {
        let active = units.iter().any(|u| dot(&u.w, x) > 0.0);
        let tied = units.iter().any(|u| dot(&u.w, x) == 0.0);
        let r = match (active, tied) {
            (true, true) => return None,
            (true, false) => 0.0,
            (false, true) => {
                let m = rng.random_range(1..=3) as f64 / 4.0;
                if rng.random_bool(0.5) {
                    m
                } else {
                    -m
                }
            }
            (false, false) => rng.random_range(-3..=3) as f64 / 4.0,
        };
        labels.push(o - r);
    }
    Some(Instance {
        net: Network::new(units).expect("generated network is valid"),
        data: Dataset::new(pts, labels).expect("generated points are nonzero"),
        loss: LossModel::square(),
    })
}

/// Point satisfying the Frechet nondegeneracy condition under square loss:
/// every point tied in some unit has `rho_i != 0`, with `u_k rho_i > 0` for
/// every unit `k` with `u_k != 0` tying it. Units with `u_k = 0` carry at
/// least one tie. `None` when the sampled ties cannot be signed
/// consistently.
pub fn frechet_nondegenerate_instance<R: Rng>(rng: &mut R, shape: InstanceShape) -> Option<Instance> {
    let d = rng.random_range(1..=shape.max_dim);
    let n = rng.random_range(1..=shape.max_points);
    let h = rng.random_range(1..=shape.max_hidden);
    let pts = random_points(rng, n, d);
    let units = random_units(rng, &pts, h, 0.3);
    if units
        .iter()
        .any(|u| u.u == 0.0 && pts.iter().all(|x| dot(&u.w, x) != 0.0))
    {
        return None;
    }
    let out = exact_outputs(&units, &pts);
    let mut labels = Vec::with_capacity(n);
    for (x, o) in pts.iter().zip(&out) {
        let tied: Vec<f64> = units.iter().filter(|u| dot(&u.w, x) == 0.0).map(|u| u.u).collect();
        let magnitude = rng.random_range(1..=3) as f64 / 4.0;
        let r = if tied.is_empty() {
            rng.random_range(-3..=3) as f64 / 4.0
        } else {
            let pos = tied.iter().any(|&u| u > 0.0);
            let neg = tied.iter().any(|&u| u < 0.0);
            match (pos, neg) {
                (true, true) => return None,
                (true, false) => magnitude,
                (false, true) => -magnitude,
                (false, false) => magnitude * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            }
        };
        labels.push(o - r);
    }
    Some(Instance {
        net: Network::new(units).expect("generated network is valid"),
        data: Dataset::new(pts, labels).expect("generated points are nonzero"),
        loss: LossModel::square(),
    })
}

/// `net` moved by a Gaussian direction scaled to norm `radius`.
pub fn perturb<R: Rng>(rng: &mut R, net: &Network, radius: f64) -> Network {
    let dir: Vec<f64> = (0..net.param_len()).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
    net.shifted(&dir, radius / norm).expect("direction matches the layout")
}

fn single_unit(u: f64, w: Vec<f64>, pts: Vec<Vec<f64>>, labels: Vec<f64>, loss: LossModel) -> Instance {
    Instance {
        net: Network::new(vec![Unit::new(u, w)]).expect("fixture network is valid"),
        data: Dataset::new(pts, labels).expect("fixture data is valid"),
        loss,
    }
}

/// Two identical tied points with opposite `u rho`: SQ fails and the
/// formula set strictly contains the Clarke subdifferential.
pub fn duplicate_point_example() -> Instance {
    single_unit(
        1.0,
        vec![0.0, 1.0],
        vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        vec![1.0, -1.0],
        LossModel::label_linear(),
    )
}

/// Four tied points in `R^4` whose positive and negative parts span
/// complementary subspaces: SQ holds, LIAD fails.
pub fn sq_without_liad_example() -> Instance {
    single_unit(
        1.0,
        vec![0.0; 4],
        vec![
            vec![0.0, 2.0, 0.0, 1.0],
            vec![2.0, 0.0, 2.0, 1.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, -1.0, 1.0],
        ],
        vec![1.0, 1.0, 1.0, -1.0],
        LossModel::label_linear(),
    )
}

/// Three points lie in the plane `x_1 = 0`, so general position fails; the
/// two tied points are independent, so LIAD holds.
pub fn liad_without_general_position_example() -> Instance {
    single_unit(
        1.0,
        vec![1.0, 1.0, -1.0],
        vec![
            vec![0.0, -2.0, 1.0],
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ],
        vec![1.0, 1.0, 1.0, -1.0],
        LossModel::label_linear(),
    )
}
