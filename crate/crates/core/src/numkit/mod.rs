//! Dense numerical kernels sized for desk-scale instances: rank with a
//! relative tolerance, LPs (including strict-inequality feasibility),
//! box-constrained least squares, minimum-norm points of convex hulls, and
//! Euclidean projection onto polyhedra.

mod boxls;
mod hull;
mod lp;
mod project;
mod rank;

pub use boxls::{box_ls_distance, BoxLsSolution};
pub use hull::{hull_contains, min_norm_in_hull, HullSolution};
pub use lp::{lp_strict_feasible, solve_lp, LinearProgram, LpOutcome, LpRow, RowSense, Strict, StrictFeasibility};
pub use project::{project_polyhedron, Projection};
pub use rank::{rank_with_tolerance, vectors_rank};

/// Solver tolerances shared by every kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub qp_tol: f64,
    pub feas_tol: f64,
    pub margin_tol: f64,
    pub rank_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            qp_tol: 1e-9,
            feas_tol: 1e-8,
            margin_tol: 1e-7,
            rank_tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// `{base + sum_j xi_j * generators[j] : xi in [0,1]^n}`, a translated zonotope.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSumSet {
    pub base: Vec<f64>,
    pub generators: Vec<Vec<f64>>,
}

impl SegmentSumSet {
    pub fn new(base: Vec<f64>, generators: Vec<Vec<f64>>) -> Self {
        Self { base, generators }
    }

    pub fn point(base: Vec<f64>) -> Self {
        Self {
            base,
            generators: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// `base + sum_j xi_j * generators[j]`.
    pub fn eval(&self, xi: &[f64]) -> Vec<f64> {
        let mut out = self.base.clone();
        for (g, &c) in self.generators.iter().zip(xi) {
            for (o, v) in out.iter_mut().zip(g) {
                *o += c * v;
            }
        }
        out
    }

    /// Whether `v` is in the set, by an LP on `xi` with sup-norm slack.
    pub fn contains(&self, v: &[f64], tol: &Tolerances) -> crate::error::Result<bool> {
        let n = self.generators.len();
        let mut objective = vec![0.0; n + 1];
        objective[n] = 1.0;
        let mut lp = LinearProgram::new(objective);
        lp.bound_all(0.0, 1.0);
        lp.bound(n, 0.0, f64::INFINITY);
        for c in 0..self.dim() {
            let mut le: Vec<f64> = self.generators.iter().map(|g| g[c]).collect();
            let mut ge = le.clone();
            le.push(-1.0);
            ge.push(1.0);
            lp.row(le, RowSense::Le, v[c] - self.base[c]);
            lp.row(ge, RowSense::Ge, v[c] - self.base[c]);
        }
        let scale = self
            .generators
            .iter()
            .chain([&self.base, &v.to_vec()])
            .flat_map(|p| p.iter().map(|x| x.abs()))
            .fold(1.0, f64::max);
        match solve_lp(&lp, tol)? {
            LpOutcome::Optimal { value, .. } => Ok(value <= tol.feas_tol * scale),
            _ => Err(crate::error::Error::invalid(
                "membership LP must be bounded and feasible",
            )),
        }
    }

    /// Every `base + sum_{j in S} generators[j]`; these include all vertices.
    pub fn vertex_candidates(&self) -> Vec<Vec<f64>> {
        let n = self.generators.len();
        (0..1usize << n)
            .map(|mask| {
                let xi: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
                self.eval(&xi)
            })
            .collect()
    }
}

/// Linear constraints on `z`: `a'z >= b`, `a'z <= b`, `a'z = b`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolyhedronSpec {
    pub ge_rows: Vec<(Vec<f64>, f64)>,
    pub le_rows: Vec<(Vec<f64>, f64)>,
    pub eq_rows: Vec<(Vec<f64>, f64)>,
}

impl PolyhedronSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ge(mut self, a: Vec<f64>, b: f64) -> Self {
        self.ge_rows.push((a, b));
        self
    }

    pub fn le(mut self, a: Vec<f64>, b: f64) -> Self {
        self.le_rows.push((a, b));
        self
    }

    pub fn eq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.eq_rows.push((a, b));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.ge_rows.is_empty() && self.le_rows.is_empty() && self.eq_rows.is_empty()
    }

    /// Largest constraint violation at `z`.
    pub fn violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in &self.ge_rows {
            worst = worst.max(b - dot(a, z));
        }
        for (a, b) in &self.le_rows {
            worst = worst.max(dot(a, z) - b);
        }
        for (a, b) in &self.eq_rows {
            worst = worst.max((dot(a, z) - b).abs());
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
