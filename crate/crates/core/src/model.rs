//! Networks, datasets, losses, and the local first-order structure of the
//! empirical loss
//!
//! ```text
//!     L(u_1, w_1, ..., u_H, w_H) = sum_i loss( sum_k u_k * max(w_k' x_i, 0), y_i )
//! ```
//!
//! Parameters are flattened as `[u_1, w_1..., u_2, w_2..., ...]` whenever a
//! parameter-space vector is needed (directions, gradients, distances).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Training points `x_i` (already bias-lifted when requested) with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    bias_appended: bool,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        Self::build(points, labels, false)
    }

    /// Appends a trailing `1` to every raw point, i.e. uses `x = (x~, 1)`.
    pub fn with_bias(raw: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        let points = raw
            .into_iter()
            .map(|mut p| {
                p.push(1.0);
                p
            })
            .collect();
        Self::build(points, labels, true)
    }

    /// Wraps points that already carry the bias coordinate.
    pub fn from_parts(points: Vec<Vec<f64>>, labels: Vec<f64>, bias_appended: bool) -> Result<Self> {
        Self::build(points, labels, bias_appended)
    }

    fn build(points: Vec<Vec<f64>>, labels: Vec<f64>, bias_appended: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("dataset must contain at least one point"));
        }
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
                context: "labels vs points",
            });
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                    context: "point dimension",
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
            }
            if p.iter().all(|&v| v == 0.0) {
                return Err(Error::invalid(format!("point {i} is the zero vector")));
            }
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("labels must be finite"));
        }
        Ok(Self {
            points,
            labels,
            bias_appended,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn bias_appended(&self) -> bool {
        self.bias_appended
    }

    /// `R = max_i ||x_i||`.
    pub fn radius(&self) -> f64 {
        self.points.iter().map(|p| norm(p)).fold(0.0, f64::max)
    }
}

/// One hidden unit: outer weight `u` and inner weight vector `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub u: f64,
    pub w: Vec<f64>,
}

impl Unit {
    pub fn new(u: f64, w: Vec<f64>) -> Self {
        Self { u, w }
    }
}

/// A two-layer ReLU network `x -> sum_k u_k max(w_k' x, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    units: Vec<Unit>,
}

impl Network {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::invalid("network needs at least one hidden unit"));
        }
        let d = units[0].w.len();
        if d == 0 {
            return Err(Error::invalid("inner weights must be non-empty"));
        }
        for unit in &units {
            if unit.w.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: unit.w.len(),
                    context: "inner weight dimension",
                });
            }
            if !unit.u.is_finite() || unit.w.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("network parameters must be finite"));
            }
        }
        Ok(Self { units })
    }

    /// Rebuilds a network from the flat `[u_1, w_1..., u_2, w_2...]` layout.
    pub fn from_flat(hidden: usize, dim: usize, params: &[f64]) -> Result<Self> {
        if params.len() != hidden * (dim + 1) {
            return Err(Error::DimensionMismatch {
                expected: hidden * (dim + 1),
                got: params.len(),
                context: "flat parameter vector",
            });
        }
        let units = params
            .chunks(dim + 1)
            .map(|c| Unit::new(c[0], c[1..].to_vec()))
            .collect();
        Self::new(units)
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn unit(&self, k: usize) -> &Unit {
        &self.units[k]
    }

    pub fn hidden(&self) -> usize {
        self.units.len()
    }

    pub fn dim(&self) -> usize {
        self.units[0].w.len()
    }

    pub fn param_len(&self) -> usize {
        self.hidden() * (self.dim() + 1)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_len());
        for unit in &self.units {
            out.push(unit.u);
            out.extend_from_slice(&unit.w);
        }
        out
    }

    /// Euclidean norm of the full parameter vector.
    pub fn norm(&self) -> f64 {
        norm(&self.to_flat())
    }

    pub fn distance(&self, other: &Network) -> f64 {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + t * direction` in parameter space.
    pub fn shifted(&self, direction: &[f64], t: f64) -> Result<Network> {
        if direction.len() != self.param_len() {
            return Err(Error::DimensionMismatch {
                expected: self.param_len(),
                got: direction.len(),
                context: "parameter direction",
            });
        }
        let flat: Vec<f64> = self.to_flat().iter().zip(direction).map(|(p, d)| p + t * d).collect();
        Network::from_flat(self.hidden(), self.dim(), &flat)
    }

    pub(crate) fn check_data(&self, data: &Dataset) -> Result<()> {
        if self.dim() != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.dim(),
                context: "network vs data dimension",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Square,
    Identity,
    Logistic,
    Custom,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LossKind::Square => "square",
            LossKind::Identity => "identity",
            LossKind::Logistic => "logistic",
            LossKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Smooth per-sample loss `(t, y) -> loss(t, y)` with its derivative in `t`.
///
/// `lip_value` bounds `|loss'|` and `lip_grad` is the Lipschitz constant of
/// `loss'`. For unbounded losses the value constant is `+inf` until a bound on
/// the region of interest is supplied via [`LossModel::with_lip_value`].
#[derive(Clone)]
pub struct LossModel {
    kind: LossKind,
    name: String,
    eval: ScalarFn,
    deriv: ScalarFn,
    lip_value: f64,
    lip_grad: f64,
}

impl fmt::Debug for LossModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossModel")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("lip_value", &self.lip_value)
            .field("lip_grad", &self.lip_grad)
            .finish()
    }
}

impl LossModel {
    /// `0.5 * (t - y)^2`
    pub fn square() -> Self {
        Self {
            kind: LossKind::Square,
            name: "square".into(),
            eval: Arc::new(|t, y| 0.5 * (t - y) * (t - y)),
            deriv: Arc::new(|t, y| t - y),
            lip_value: f64::INFINITY,
            lip_grad: 1.0,
        }
    }

    /// `t` (ignores the label); makes the empirical loss piecewise linear.
    pub fn identity() -> Self {
        Self {
            kind: LossKind::Identity,
            name: "identity".into(),
            eval: Arc::new(|t, _| t),
            deriv: Arc::new(|_, _| 1.0),
            lip_value: 1.0,
            lip_grad: 0.0,
        }
    }

    /// `log(1 + exp(-y t))`, constants stated for labels in `{-1, +1}`.
    pub fn logistic() -> Self {
        Self {
            kind: LossKind::Logistic,
            name: "logistic".into(),
            eval: Arc::new(|t, y| softplus(-y * t)),
            deriv: Arc::new(|t, y| -y * sigmoid(-y * t)),
            lip_value: 1.0,
            lip_grad: 0.25,
        }
    }

    /// `y * t`: the label acts as a per-sample slope, so `rho_i = y_i`.
    pub fn label_linear() -> Self {
        Self {
            kind: LossKind::Custom,
            name: "label_linear".into(),
            eval: Arc::new(|t, y| y * t),
            deriv: Arc::new(|_, y| y),
            lip_value: f64::INFINITY,
            lip_grad: 0.0,
        }
    }

    pub fn custom<E, D>(name: &str, eval: E, deriv: D, lip_value: f64, lip_grad: f64) -> Self
    where
        E: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: LossKind::Custom,
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            lip_value,
            lip_grad,
        }
    }

    pub fn with_lip_value(mut self, lip_value: f64) -> Self {
        self.lip_value = lip_value;
        self
    }

    pub fn with_lip_grad(mut self, lip_grad: f64) -> Self {
        self.lip_grad = lip_grad;
        self
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64, y: f64) -> f64 {
        (self.eval)(t, y)
    }

    pub fn deriv(&self, t: f64, y: f64) -> f64 {
        (self.deriv)(t, y)
    }

    pub fn lip_value(&self) -> f64 {
        self.lip_value
    }

    pub fn lip_grad(&self) -> f64 {
        self.lip_grad
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// How a pre-activation `w_k' x_i` is classified as a kink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TieRule {
    /// Literal floating-point equality with zero.
    Exact,
    /// `|w_k' x_i| <= threshold`; tied pre-activations are treated as exactly zero.
    Threshold(f64),
}

impl TieRule {
    pub fn is_tie(&self, z: f64) -> bool {
        match *self {
            TieRule::Exact => z == 0.0,
            TieRule::Threshold(t) => z.abs() <= t,
        }
    }
}

/// Per-unit split of `[N]` by the sign of `w_k' x_i`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnitPartition {
    pub less: Vec<usize>,
    pub eq: Vec<usize>,
    pub greater: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationPartition {
    pub units: Vec<UnitPartition>,
}

impl ActivationPartition {
    pub fn tie_count(&self) -> usize {
        self.units.iter().map(|u| u.eq.len()).sum()
    }
}

/// Everything the subdifferential formulas need at one parameter point.
#[derive(Debug, Clone)]
pub struct LocalStructure {
    /// `rho_i = loss'(output_i, y_i)`.
    pub rho: Vec<f64>,
    pub outputs: Vec<f64>,
    /// `relu[k][i] = max(w_k' x_i, 0)`, with ties forced to zero.
    pub relu: Vec<Vec<f64>>,
    /// `preact[k][i] = w_k' x_i` as computed.
    pub preact: Vec<Vec<f64>>,
    pub partition: ActivationPartition,
    /// Tied indices with `u_k rho_i >= 0`.
    pub i_plus: Vec<Vec<usize>>,
    /// Tied indices with `u_k rho_i < 0`.
    pub i_minus: Vec<Vec<usize>>,
}

impl LocalStructure {
    /// `sum_i rho_i max(w_k' x_i, 0)`: the partial derivative in `u_k`.
    pub fn u_component(&self, k: usize) -> f64 {
        self.rho.iter().zip(&self.relu[k]).map(|(r, a)| r * a).sum()
    }
}

fn relu_table(net: &Network, data: &Dataset, ties: TieRule) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut preact = Vec::with_capacity(net.hidden());
    let mut relu = Vec::with_capacity(net.hidden());
    for unit in net.units() {
        let z: Vec<f64> = data.points().iter().map(|x| dot(&unit.w, x)).collect();
        let a = z
            .iter()
            .map(|&v| if ties.is_tie(v) { 0.0 } else { v.max(0.0) })
            .collect();
        preact.push(z);
        relu.push(a);
    }
    (preact, relu)
}

fn outputs_from(net: &Network, relu: &[Vec<f64>], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| net.units().iter().zip(relu).map(|(unit, a)| unit.u * a[i]).sum())
        .collect()
}

/// Network outputs on every data point.
pub fn outputs(net: &Network, data: &Dataset) -> Result<Vec<f64>> {
    net.check_data(data)?;
    let (_, relu) = relu_table(net, data, TieRule::Exact);
    Ok(outputs_from(net, &relu, data.len()))
}

/// Empirical loss `sum_i loss(output_i, y_i)`.
pub fn eval_loss(net: &Network, data: &Dataset, loss: &LossModel) -> Result<f64> {
    let out = outputs(net, data)?;
    Ok(out.iter().zip(data.labels()).map(|(&t, &y)| loss.eval(t, y)).sum())
}

/// `rho`, activation partition and `I_k^+ / I_k^-` with exact tie detection.
pub fn rho_and_partition(net: &Network, data: &Dataset, loss: &LossModel) -> Result<LocalStructure> {
    local_structure(net, data, loss, TieRule::Exact)
}

pub fn local_structure(net: &Network, data: &Dataset, loss: &LossModel, ties: TieRule) -> Result<LocalStructure> {
    net.check_data(data)?;
    let n = data.len();
    let (preact, relu) = relu_table(net, data, ties);
    let outputs = outputs_from(net, &relu, n);
    let rho: Vec<f64> = outputs
        .iter()
        .zip(data.labels())
        .map(|(&t, &y)| loss.deriv(t, y))
        .collect();

    let mut units = Vec::with_capacity(net.hidden());
    let mut i_plus = Vec::with_capacity(net.hidden());
    let mut i_minus = Vec::with_capacity(net.hidden());
    for (k, unit) in net.units().iter().enumerate() {
        let mut part = UnitPartition::default();
        let (mut plus, mut minus) = (Vec::new(), Vec::new());
        for (i, &z) in preact[k].iter().enumerate() {
            if ties.is_tie(z) {
                part.eq.push(i);
                if unit.u * rho[i] >= 0.0 {
                    plus.push(i);
                } else {
                    minus.push(i);
                }
            } else if z > 0.0 {
                part.greater.push(i);
            } else {
                part.less.push(i);
            }
        }
        units.push(part);
        i_plus.push(plus);
        i_minus.push(minus);
    }

    Ok(LocalStructure {
        rho,
        outputs,
        relu,
        preact,
        partition: ActivationPartition { units },
        i_plus,
        i_minus,
    })
}

/// Exact one-sided directional derivative `L'(params; direction)`.
pub fn directional_derivative(net: &Network, data: &Dataset, loss: &LossModel, direction: &[f64]) -> Result<f64> {
    net.check_data(data)?;
    if direction.len() != net.param_len() {
        return Err(Error::DimensionMismatch {
            expected: net.param_len(),
            got: direction.len(),
            context: "parameter direction",
        });
    }
    let local = rho_and_partition(net, data, loss)?;
    let d = net.dim();
    let mut total = 0.0;
    for (i, x) in data.points().iter().enumerate() {
        let mut out_dir = 0.0;
        for (k, unit) in net.units().iter().enumerate() {
            let block = &direction[k * (d + 1)..(k + 1) * (d + 1)];
            let du = block[0];
            let dz = dot(&block[1..], x);
            let z = local.preact[k][i];
            let relu_dir = if z > 0.0 {
                dz
            } else if z == 0.0 {
                dz.max(0.0)
            } else {
                0.0
            };
            out_dir += du * local.relu[k][i] + unit.u * relu_dir;
        }
        total += local.rho[i] * out_dir;
    }
    Ok(total)
}

/// Gradient of the smooth piece selected by `tie_active(k, i)` for tied
/// pre-activations; non-tied ones follow their sign.
pub fn piece_gradient<F>(
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    ties: TieRule,
    tie_active: F,
) -> Result<Vec<f64>>
where
    F: Fn(usize, usize) -> bool,
{
    let local = local_structure(net, data, loss, ties)?;
    let d = net.dim();
    let mut grad = vec![0.0; net.param_len()];
    for (k, unit) in net.units().iter().enumerate() {
        let base = k * (d + 1);
        grad[base] = local.u_component(k);
        for (i, x) in data.points().iter().enumerate() {
            let z = local.preact[k][i];
            let active = if ties.is_tie(z) { tie_active(k, i) } else { z > 0.0 };
            if active {
                let c = unit.u * local.rho[i];
                for (g, xv) in grad[base + 1..base + 1 + d].iter_mut().zip(x) {
                    *g += c * xv;
                }
            }
        }
    }
    Ok(grad)
}

/// A subgradient selection that treats every tied ReLU as inactive.
pub fn subgradient(net: &Network, data: &Dataset, loss: &LossModel) -> Result<Vec<f64>> {
    piece_gradient(net, data, loss, TieRule::Exact, |_, _| false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_fixture(w: f64) -> (Network, Dataset) {
        let net = Network::new(vec![Unit::new(1.0, vec![w])]).unwrap();
        let data = Dataset::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        (net, data)
    }

    #[test]
    fn loss_of_single_unit_square() {
        let net = Network::new(vec![Unit::new(1.0, vec![1.0, 0.0])]).unwrap();
        let data = Dataset::new(vec![vec![1.0, 0.0]], vec![2.0]).unwrap();
        let l = eval_loss(&net, &data, &LossModel::square()).unwrap();
        assert_eq!(l, 0.5);
    }

    #[test]
    fn zero_outer_weights_give_half_label_energy() {
        let net = Network::new(vec![Unit::new(0.0, vec![1.0, 2.0]), Unit::new(0.0, vec![-1.0, 0.5])]).unwrap();
        let data = Dataset::new(vec![vec![1.0, 1.0], vec![0.0, 3.0]], vec![2.0, -1.0]).unwrap();
        let l = eval_loss(&net, &data, &LossModel::square()).unwrap();
        assert_eq!(l, 0.5 * 4.0 + 0.5 * 1.0);
    }

    #[test]
    fn identity_loss_at_zero_weight() {
        let net = Network::new(vec![Unit::new(1.0, vec![0.0])]).unwrap();
        let data = Dataset::new(vec![vec![3.0]], vec![0.0]).unwrap();
        assert_eq!(eval_loss(&net, &data, &LossModel::identity()).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let net = Network::new(vec![Unit::new(1.0, vec![1.0, 0.0])]).unwrap();
        let data = Dataset::new(vec![vec![1.0]], vec![0.0]).unwrap();
        assert!(matches!(
            eval_loss(&net, &data, &LossModel::square()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_zero_points_and_ragged_input() {
        assert!(Dataset::new(vec![vec![0.0, 0.0]], vec![1.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![1.0, 1.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![1.0, 2.0]).is_err());
        let biased = Dataset::with_bias(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(biased.point(0), &[0.0, 0.0, 1.0]);
        assert!(biased.bias_appended());
    }

    #[test]
    fn sq_not_liad_example_index_sets() {
        // max{2y+b,0} + max{2x+2z+b,0} + max{x+y+z+b,0} - max{x-z+b,0} at the origin
        let data = Dataset::new(
            vec![
                vec![0.0, 2.0, 0.0, 1.0],
                vec![2.0, 0.0, 2.0, 1.0],
                vec![1.0, 1.0, 1.0, 1.0],
                vec![1.0, 0.0, -1.0, 1.0],
            ],
            vec![1.0, 1.0, 1.0, -1.0],
        )
        .unwrap();
        let net = Network::new(vec![Unit::new(1.0, vec![0.0; 4])]).unwrap();
        let local = rho_and_partition(&net, &data, &LossModel::label_linear()).unwrap();
        assert_eq!(local.i_plus[0], vec![0, 1, 2]);
        assert_eq!(local.i_minus[0], vec![3]);
    }

    #[test]
    fn abs_construction_rho_and_ties() {
        let (net, data) = abs_fixture(0.0);
        let local = rho_and_partition(&net, &data, &LossModel::identity()).unwrap();
        assert_eq!(local.rho, vec![1.0, 1.0]);
        assert_eq!(local.i_plus[0], vec![0, 1]);
        assert!(local.i_minus[0].is_empty());
    }

    #[test]
    fn no_ties_means_empty_index_sets() {
        let (net, data) = abs_fixture(0.7);
        let local = rho_and_partition(&net, &data, &LossModel::identity()).unwrap();
        let part = &local.partition.units[0];
        assert!(part.eq.is_empty());
        assert_eq!(part.greater, vec![0]);
        assert_eq!(part.less, vec![1]);
        assert!(local.i_plus[0].is_empty() && local.i_minus[0].is_empty());
    }

    #[test]
    fn abs_directional_derivative_both_ways() {
        let (net, data) = abs_fixture(0.0);
        let loss = LossModel::identity();
        assert_eq!(directional_derivative(&net, &data, &loss, &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(directional_derivative(&net, &data, &loss, &[0.0, -1.0]).unwrap(), 1.0);
    }

    #[test]
    fn threshold_ties_snap_relu_to_zero() {
        let (net, data) = abs_fixture(1e-13);
        let local = local_structure(&net, &data, &LossModel::identity(), TieRule::Threshold(1e-9)).unwrap();
        assert_eq!(local.partition.units[0].eq, vec![0, 1]);
        assert_eq!(local.relu[0], vec![0.0, 0.0]);
    }

    #[test]
    fn logistic_derivative_matches_difference_quotient() {
        let loss = LossModel::logistic();
        for &(t, y) in &[(0.3, 1.0), (-2.0, -1.0), (40.0, 1.0), (-40.0, 1.0)] {
            let h = 1e-6;
            let fd = (loss.eval(t + h, y) - loss.eval(t - h, y)) / (2.0 * h);
            assert!((fd - loss.deriv(t, y)).abs() < 1e-8, "t={t} y={y}");
        }
    }
}
