//! Exact Clarke and Frechet stationarity measurement.
//!
//! Under SQ the subdifferential is the product over units of
//! `{u-partial} x G_k`, so the distance from the origin splits into one
//! scalar and one box-constrained least-squares problem per unit.

use std::fmt;
use std::str::FromStr;

use crate::chain::{convex_sets_from_local, sq_from_local, SqReport};
use crate::error::{Error, Result};
use crate::model::{local_structure, Dataset, LossModel, Network, TieRule};
use crate::numkit::{box_ls_distance, SolveStatus, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    Clarke,
    Frechet,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::Clarke => "clarke",
            TestKind::Frechet => "frechet",
        })
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clarke" => Ok(TestKind::Clarke),
            "frechet" | "fréchet" => Ok(TestKind::Frechet),
            other => Err(Error::invalid(format!("unknown test kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStatus {
    NotSq,
    Value,
    Infinite,
}

impl fmt::Display for ExactStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExactStatus::NotSq => "not-SQ",
            ExactStatus::Value => "value",
            ExactStatus::Infinite => "infinite",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitBreakdown {
    /// `|sum_i rho_i max(w_k'x_i, 0)|`
    pub eps1: f64,
    /// Distance from the origin to the unit's set.
    pub eps2: f64,
    /// Segment weights attaining `eps2`.
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTestResult {
    pub kind: TestKind,
    pub status: ExactStatus,
    /// `sqrt(sum_k eps1_k^2 + eps2_k^2)` when `status` is `Value`.
    pub epsilon: Option<f64>,
    pub units: Vec<UnitBreakdown>,
    /// Minimum-norm subgradient in the flat parameter layout (when `Value`).
    pub minimizer: Option<Vec<f64>>,
    pub sq: SqReport,
}

impl ExactTestResult {
    /// The measured distance, `+inf` for `Infinite` and `NotSq`.
    pub fn value(&self) -> f64 {
        self.epsilon.unwrap_or(f64::INFINITY)
    }

    pub fn is_finite(&self) -> bool {
        self.status == ExactStatus::Value
    }
}

pub fn etest_clarke(net: &Network, data: &Dataset, loss: &LossModel, tol: &Tolerances) -> Result<ExactTestResult> {
    etest(TestKind::Clarke, net, data, loss, tol, TieRule::Exact)
}

pub fn etest_frechet(net: &Network, data: &Dataset, loss: &LossModel, tol: &Tolerances) -> Result<ExactTestResult> {
    etest(TestKind::Frechet, net, data, loss, tol, TieRule::Exact)
}

/// Exact test with an explicit tie rule. `TieRule::Exact` is the textbook
/// test; a threshold rule is used on rounded points, where ties are exact in
/// exact arithmetic but only tiny in floating point.
pub fn etest(
    kind: TestKind,
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    tol: &Tolerances,
    ties: TieRule,
) -> Result<ExactTestResult> {
    let local = local_structure(net, data, loss, ties)?;
    let sq = sq_from_local(&local, data, tol.rank_tol);
    let mut result = ExactTestResult {
        kind,
        status: ExactStatus::NotSq,
        epsilon: None,
        units: Vec::new(),
        minimizer: None,
        sq,
    };
    if !result.sq.overall {
        return Ok(result);
    }
    if kind == TestKind::Frechet && local.i_minus.iter().any(|m| !m.is_empty()) {
        result.status = ExactStatus::Infinite;
        return Ok(result);
    }

    let sets = convex_sets_from_local(&local, net, data);
    let mut total = 0.0;
    let mut minimizer = Vec::with_capacity(net.param_len());
    for (k, (clarke, frechet)) in sets.iter().enumerate() {
        let set = match kind {
            TestKind::Clarke => clarke,
            TestKind::Frechet => frechet.as_ref().unwrap_or(clarke),
        };
        let sol = box_ls_distance(set, tol)?;
        if sol.report.status != SolveStatus::Optimal {
            return Err(Error::MaxIter {
                solver: "box least squares",
                iterations: sol.report.iterations,
            });
        }
        let eps1 = local.u_component(k).abs();
        total += eps1 * eps1 + sol.distance * sol.distance;
        minimizer.push(local.u_component(k));
        minimizer.extend(set.eval(&sol.xi));
        result.units.push(UnitBreakdown {
            eps1,
            eps2: sol.distance,
            xi: sol.xi,
        });
    }
    result.status = ExactStatus::Value;
    result.epsilon = Some(total.sqrt());
    result.minimizer = Some(minimizer);
    Ok(result)
}
