//! Neural rounding and the robust (near-approximate) stationarity tests.
//!
//! Rounding projects every `w_k` onto the polyhedron that snaps
//! pre-activations with `|x_i'w_k| <= R delta` to zero and pushes the others
//! at least `2 R delta` away from zero. The exact test is then run on the
//! rounded point; a finite value `v` certifies that the input lies within
//! `delta` of a point whose subdifferential has an element of norm `v`.
//!
//! Rounded ties are exact in exact arithmetic but only tiny in floating
//! point, so the exact test on a rounded point classifies
//! `|x_i'w_k| <= R delta` as a tie. Rounding guarantees every other
//! pre-activation is at least `2 R delta` in magnitude, so this threshold
//! reproduces the rounded activation pattern.

use crate::error::Result;
use crate::exact::{etest, ExactTestResult, TestKind};
use crate::model::{dot, local_structure, Dataset, LossModel, Network, TieRule, Unit};
use crate::numkit::{project_polyhedron, PolyhedronSpec, Projection, SolveStatus, Tolerances};

/// Tie rule used by the exact test on a point rounded at radius `delta`.
pub fn rounded_tie_rule(data: &Dataset, delta: f64) -> TieRule {
    TieRule::Threshold(data.radius() * delta)
}

/// Rounding polyhedron of one inner weight.
pub fn rounding_polyhedron(w: &[f64], delta: f64, data: &Dataset) -> PolyhedronSpec {
    let r = data.radius();
    let mut spec = PolyhedronSpec::new();
    for x in data.points() {
        let z = dot(x, w);
        if z > r * delta {
            spec = spec.ge(x.clone(), 2.0 * r * delta);
        } else if z < -r * delta {
            spec = spec.le(x.clone(), -2.0 * r * delta);
        } else {
            spec = spec.eq(x.clone(), 0.0);
        }
    }
    spec
}

fn round_inner(net: &Network, delta: f64, data: &Dataset, tol: &Tolerances) -> Result<Option<Vec<Vec<f64>>>> {
    net.check_data(data)?;
    let mut out = Vec::with_capacity(net.hidden());
    for unit in net.units() {
        let spec = rounding_polyhedron(&unit.w, delta, data);
        match project_polyhedron(&unit.w, &spec, tol)? {
            Projection::Projected { z, report } => {
                if report.status != SolveStatus::Optimal {
                    return Err(crate::Error::MaxIter {
                        solver: "rounding projection",
                        iterations: report.iterations,
                    });
                }
                out.push(z);
            }
            Projection::Infeasible => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// Clarke rounding: projects each `w_k`, keeps every `u_k`. `None` when some
/// projection is infeasible.
pub fn rnd_clarke(net: &Network, delta: f64, data: &Dataset, tol: &Tolerances) -> Result<Option<Network>> {
    check_delta(delta)?;
    let Some(ws) = round_inner(net, delta, data, tol)? else {
        return Ok(None);
    };
    let units = net
        .units()
        .iter()
        .zip(ws)
        .map(|(unit, w)| Unit::new(unit.u, w))
        .collect();
    Ok(Some(Network::new(units)?))
}

/// Frechet rounding: as [`rnd_clarke`], then `u_k` is zeroed when the
/// rounded unit has a tie with `u_k rho_i <= 2 C_u delta`, `rho` taken at the
/// input point and `C_u = L' (4 H R B^2 + 1)` with `B = ||net|| + delta`.
pub fn rnd_frechet(
    net: &Network,
    delta: f64,
    data: &Dataset,
    loss: &LossModel,
    tol: &Tolerances,
) -> Result<Option<Network>> {
    check_delta(delta)?;
    let Some(ws) = round_inner(net, delta, data, tol)? else {
        return Ok(None);
    };
    let rho = local_structure(net, data, loss, TieRule::Exact)?.rho;
    let c_u = constants_for(net, data, loss, delta).c_u;
    let threshold = data.radius() * delta;
    let units = net
        .units()
        .iter()
        .zip(ws)
        .map(|(unit, w)| {
            let min_tied = data
                .points()
                .iter()
                .zip(&rho)
                .filter(|(x, _)| dot(x, &w).abs() <= threshold)
                .map(|(_, r)| unit.u * r)
                .fold(f64::INFINITY, f64::min);
            let u = if min_tied <= 2.0 * c_u * delta { 0.0 } else { unit.u };
            Unit::new(u, w)
        })
        .collect();
    Ok(Some(Network::new(units)?))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::invalid(format!(
            "delta must be positive and finite, got {delta}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobustStatus {
    /// Some rounding projection had no feasible point.
    RoundingInfeasible,
    /// The rounded point moved farther than `delta`.
    TooFar,
    /// The exact test ran on the rounded point.
    Tested,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustResult {
    pub kind: TestKind,
    pub delta: f64,
    pub status: RobustStatus,
    pub rounded: Option<Network>,
    /// `||net - rounded||`, `+inf` when rounding failed.
    pub moved: f64,
    pub exact: Option<ExactTestResult>,
}

impl RobustResult {
    /// Certified `epsilon`, `+inf` unless the exact test returned a value.
    pub fn value(&self) -> f64 {
        self.exact.as_ref().map_or(f64::INFINITY, |e| e.value())
    }

    pub fn is_finite(&self) -> bool {
        self.value().is_finite()
    }
}

/// General robust test: round with the kind's rounder, reject when the
/// rounding moved more than `delta`, otherwise run the kind's exact test on
/// the rounded point.
pub fn rtest(
    kind: TestKind,
    net: &Network,
    delta: f64,
    data: &Dataset,
    loss: &LossModel,
    tol: &Tolerances,
) -> Result<RobustResult> {
    let rounded = match kind {
        TestKind::Clarke => rnd_clarke(net, delta, data, tol)?,
        TestKind::Frechet => rnd_frechet(net, delta, data, loss, tol)?,
    };
    let mut result = RobustResult {
        kind,
        delta,
        status: RobustStatus::RoundingInfeasible,
        rounded: None,
        moved: f64::INFINITY,
        exact: None,
    };
    let Some(rounded) = rounded else {
        return Ok(result);
    };
    result.moved = net.distance(&rounded);
    if result.moved > delta {
        result.status = RobustStatus::TooFar;
        result.rounded = Some(rounded);
        return Ok(result);
    }
    result.exact = Some(etest(kind, &rounded, data, loss, tol, rounded_tie_rule(data, delta))?);
    result.status = RobustStatus::Tested;
    result.rounded = Some(rounded);
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `delta_t <= m / (2R)`: rounding is the identity from here on.
    IdentityRounding,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchTrace {
    pub steps: Vec<RobustResult>,
    /// Index into `steps` of the smallest finite certificate.
    pub best: Option<usize>,
    pub stop: StopReason,
    /// `min |x_i'w_k|` over nonzero pre-activations, `+inf` if none.
    pub min_clearance: f64,
}

impl LineSearchTrace {
    pub fn best_result(&self) -> Option<&RobustResult> {
        self.best.map(|i| &self.steps[i])
    }
}

/// Smallest nonzero `|x_i'w_k|`, `+inf` when every pre-activation is zero.
pub fn min_clearance(net: &Network, data: &Dataset) -> f64 {
    net.units()
        .iter()
        .flat_map(|u| data.points().iter().map(move |x| dot(x, &u.w).abs()))
        .filter(|&z| z != 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Points tied in some unit (within `tie_tol`) whose `rho_i` vanishes. The
/// Frechet guarantees need this list empty at the reference point.
pub fn frechet_degenerate_points(net: &Network, data: &Dataset, loss: &LossModel, tie_tol: f64) -> Result<Vec<usize>> {
    let local = local_structure(net, data, loss, TieRule::Exact)?;
    Ok((0..data.len())
        .filter(|&i| {
            let tied = net.units().iter().any(|u| dot(data.point(i), &u.w).abs() <= tie_tol);
            tied && local.rho[i] == 0.0
        })
        .collect())
}

/// Number of halvings of `delta0` until `delta_t <= m / (2R)`.
pub fn identity_rounding_bound(delta0: f64, radius: f64, clearance: f64) -> usize {
    if !clearance.is_finite() {
        return 0;
    }
    let ratio = delta0 * 2.0 * radius / clearance;
    if ratio <= 1.0 {
        0
    } else {
        ratio.log2().ceil() as usize
    }
}

/// Runs [`rtest`] at `delta0, delta0/2, ...` until rounding provably becomes
/// the identity or `max_iters` tests have run.
pub fn line_search(
    kind: TestKind,
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    delta0: f64,
    max_iters: usize,
    tol: &Tolerances,
) -> Result<LineSearchTrace> {
    check_delta(delta0)?;
    let clearance = min_clearance(net, data);
    let stop_delta = clearance / (2.0 * data.radius());
    let mut steps: Vec<RobustResult> = Vec::new();
    let mut best: Option<usize> = None;
    let mut stop = StopReason::MaxIters;
    let mut delta = delta0;
    for _ in 0..max_iters.max(1) {
        let res = rtest(kind, net, delta, data, loss, tol)?;
        if res.is_finite() && best.is_none_or(|b| res.value() <= steps[b].value()) {
            best = Some(steps.len());
        }
        steps.push(res);
        if delta <= stop_delta {
            stop = StopReason::IdentityRounding;
            break;
        }
        delta /= 2.0;
    }
    Ok(LineSearchTrace {
        steps,
        best,
        stop,
        min_clearance: clearance,
    })
}

/// Constants of the certified bounds `epsilon + C_mu delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantBundle {
    pub r: f64,
    pub b: f64,
    pub lip_value: f64,
    pub lip_grad: f64,
    pub n: usize,
    pub h: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c_mu_clarke: f64,
    pub c1_frechet: f64,
    pub c2_frechet: f64,
    pub c4_frechet: f64,
    pub c5_frechet: f64,
    pub c_mu_frechet: f64,
    pub c_u: f64,
}

impl ConstantBundle {
    pub fn c_mu(&self, kind: TestKind) -> f64 {
        match kind {
            TestKind::Clarke => self.c_mu_clarke,
            TestKind::Frechet => self.c_mu_frechet,
        }
    }
}

/// Constants from data size, radius, loss constants, width `h` and a norm
/// bound `b` on the reference point.
pub fn constants(data: &Dataset, loss: &LossModel, h: usize, b: f64) -> ConstantBundle {
    constants_from(data.len(), h, data.radius(), b, loss.lip_value(), loss.lip_grad())
}

/// Constants with `B = ||net|| + delta`, an upper bound on the norm of any
/// reference point within `delta` of `net`.
pub fn constants_for(net: &Network, data: &Dataset, loss: &LossModel, delta: f64) -> ConstantBundle {
    constants(data, loss, net.hidden(), net.norm() + delta)
}

pub fn constants_from(n: usize, h: usize, r: f64, b: f64, lip_value: f64, lip_grad: f64) -> ConstantBundle {
    let (nf, hf, lg) = (n as f64, h as f64, lip_grad);
    let c1 = 3.0 * lg * nf * hf * b * r;
    let c2 = b * r * c1;
    let c3 = 2.0 * lg * nf * r;
    let c4 = hf * (c2 + c3);
    let c5 = hf * (b * r * c1 + nf * r * lg);
    let c1_frechet = 4.0 * lg * nf * hf * b * r;
    let c2_frechet = b * r * c1_frechet;
    let c4_frechet = hf * (c2_frechet + c3);
    let c5_frechet = hf * (b * r * c1_frechet + 2.0 * nf * r * lg);
    ConstantBundle {
        r,
        b,
        lip_value,
        lip_grad,
        n,
        h,
        c1,
        c2,
        c3,
        c4,
        c5,
        c_mu_clarke: c4 + c5,
        c1_frechet,
        c2_frechet,
        c4_frechet,
        c5_frechet,
        c_mu_frechet: c4_frechet + c5_frechet,
        c_u: lg * (4.0 * hf * r * b * b + 1.0),
    }
}

/// Separation constants of a reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    /// `min |x_i'w*_k| / (4R)` over nonzero pre-activations.
    pub clarke: f64,
    /// Uses `tau' / (4 C_u)` for the outer-weight term.
    pub frechet: f64,
    /// Same with the `tau' / C_u` denominator.
    pub frechet_loose: f64,
}

pub fn separation(net_star: &Network, data: &Dataset, loss: &LossModel, b: f64) -> Result<Separation> {
    let local = local_structure(net_star, data, loss, TieRule::Exact)?;
    let r = data.radius();
    let clarke = min_clearance(net_star, data) / (4.0 * r);
    let c_u = constants(data, loss, net_star.hidden(), b).c_u;
    let tau_u = net_star
        .units()
        .iter()
        .zip(&local.partition.units)
        .flat_map(|(unit, part)| part.eq.iter().map(move |&i| (unit.u, i)))
        .map(|(u, i)| u * local.rho[i])
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    Ok(Separation {
        clarke,
        frechet: clarke.min(tau_u / (4.0 * c_u)),
        frechet_loose: clarke.min(tau_u / c_u),
    })
}
