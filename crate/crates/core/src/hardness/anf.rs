//! Abs-normal form `z = Z d + L|z|`, `y = a'd + b'|z|` of the PLT function
//! and the signature test on it.
//!
//! Switching variables `z_1..z_3n` are `y_j'd`. With
//! `q_i = -(1/2) sum_j (y_{3i+j}'d + |z_{3i+j}|)` the running maximum
//! `M_1 = q_1`, `M_t = (M_{t-1} + q_t)/2 + |M_{t-1} - q_t|/2` adds the
//! switching variables `z_{3n+t-1} = M_{t-1} - q_t` for `t = 2..n`, so
//! `s = 4n - 1` and `y = M_n`.
//!
//! For a signature `sigma` put `P = (Diag(sigma) - L)^{-1} Z`; on the cone
//! `P d >= 0` the function is linear with gradient `a + P'b`. The system
//! `P'mu = a + P'b, mu >= 0` is compatible iff that gradient lies in the
//! dual cone, i.e. iff `f >= 0` on the cone (Farkas). Every `d` lies in the
//! cone of `sigma = sign(z(d))`, so all signatures are compatible iff
//! `f >= 0` everywhere, i.e. iff the origin is Frechet stationary.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numkit::{solve_lp, LinearProgram, LpOutcome, RowSense, Tolerances};

use super::plt::PltInstance;

/// Signature enumeration limit.
pub const MAX_ANFT_SWITCHES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct AbsNormalForm {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `s x n`
    pub z: Vec<Vec<f64>>,
    /// `s x s`, strictly lower triangular.
    pub l: Vec<Vec<f64>>,
}

impl AbsNormalForm {
    pub fn new(a: Vec<f64>, b: Vec<f64>, z: Vec<Vec<f64>>, l: Vec<Vec<f64>>) -> Result<Self> {
        let (n, s) = (a.len(), b.len());
        if z.len() != s || l.len() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                got: if z.len() != s { z.len() } else { l.len() },
                context: "rows of Z and L",
            });
        }
        for (i, (zr, lr)) in z.iter().zip(&l).enumerate() {
            if zr.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: zr.len(),
                    context: "row of Z",
                });
            }
            if lr.len() != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    got: lr.len(),
                    context: "row of L",
                });
            }
            if lr[i..].iter().any(|&v| v != 0.0) {
                return Err(Error::invalid(format!("L is not strictly lower triangular in row {i}")));
            }
        }
        Ok(Self { a, b, z, l })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn switches(&self) -> usize {
        self.b.len()
    }

    /// Switching vector `z(d)` by forward evaluation.
    pub fn switching(&self, d: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.switches());
        for i in 0..self.switches() {
            let lin: f64 = self.z[i].iter().zip(d).map(|(r, v)| r * v).sum();
            let fb: f64 = (0..i).map(|j| self.l[i][j] * f64::abs(z[j])).sum();
            z.push(lin + fb);
        }
        z
    }

    pub fn eval(&self, d: &[f64]) -> Result<f64> {
        if d.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: d.len(),
                context: "direction",
            });
        }
        let z = self.switching(d);
        Ok(self.a.iter().zip(d).map(|(a, v)| a * v).sum::<f64>()
            + self.b.iter().zip(&z).map(|(b, v)| b * v.abs()).sum::<f64>())
    }

    /// `(Diag(sigma) - L)^{-1} Z` by forward substitution.
    pub fn signature_matrix(&self, sigma: &[i8]) -> Vec<Vec<f64>> {
        let mut p: Vec<Vec<f64>> = Vec::with_capacity(self.switches());
        for i in 0..self.switches() {
            let mut row = self.z[i].clone();
            for (j, pj) in p.iter().enumerate() {
                let lij = self.l[i][j];
                if lij != 0.0 {
                    row.iter_mut().zip(pj).for_each(|(r, v)| *r += lij * v);
                }
            }
            let s = f64::from(sigma[i]);
            row.iter_mut().for_each(|r| *r *= s);
            p.push(row);
        }
        p
    }

    /// Whether `P'mu = a + P'b` has a solution `mu >= 0`.
    pub fn signature_compatible(&self, sigma: &[i8], tol: &Tolerances) -> Result<bool> {
        let p = self.signature_matrix(sigma);
        let (n, s) = (self.dim(), self.switches());
        let mut lp = LinearProgram::new(vec![0.0; s]);
        lp.bound_all(0.0, f64::INFINITY);
        for k in 0..n {
            let coeffs: Vec<f64> = (0..s).map(|i| p[i][k]).collect();
            let rhs = self.a[k] + (0..s).map(|i| p[i][k] * self.b[i]).sum::<f64>();
            lp.row(coeffs, RowSense::Eq, rhs);
        }
        Ok(!matches!(solve_lp(&lp, tol)?, LpOutcome::Infeasible))
    }
}

/// Abs-normal form of the PLT function with `s = 4n - 1` switches.
pub fn plt_to_abs_normal(inst: &PltInstance) -> AbsNormalForm {
    let (m, n) = (inst.dim(), inst.num_clauses());
    let s = 4 * n - 1;
    // linear forms over (d, p) with p = |z|
    let mut z = vec![vec![0.0; m]; s];
    let mut l = vec![vec![0.0; s]; s];
    for (j, y) in inst.vectors().iter().enumerate() {
        z[j] = y.clone();
    }
    let q = |i: usize| -> Vec<f64> {
        let mut form = vec![0.0; m + s];
        for j in 3 * i..3 * i + 3 {
            let (k, sign) = inst.axis(j);
            form[k] -= 0.5 * sign;
            form[m + j] -= 0.5;
        }
        form
    };
    let mut running = q(0);
    for t in 1..n {
        let qt = q(t);
        let idx = 3 * n + t - 1;
        let diff: Vec<f64> = running.iter().zip(&qt).map(|(a, b)| a - b).collect();
        z[idx] = diff[..m].to_vec();
        l[idx][..s].copy_from_slice(&diff[m..]);
        running = running.iter().zip(&qt).map(|(a, b)| 0.5 * (a + b)).collect();
        running[m + idx] += 0.5;
    }
    AbsNormalForm::new(running[..m].to_vec(), running[m..].to_vec(), z, l).expect("construction is consistent")
}

/// First incompatible signature in binary order (bit `i` set means
/// `sigma_i = +1`), or `None` when all `2^s` signatures are compatible.
pub fn anft_witness(anf: &AbsNormalForm, tol: &Tolerances) -> Result<Option<Vec<i8>>> {
    let s = anf.switches();
    if s > MAX_ANFT_SWITCHES {
        return Err(Error::GuardExceeded {
            what: "switching variables for signature enumeration",
            value: s as u128,
            limit: MAX_ANFT_SWITCHES as u128,
        });
    }
    let to_sigma = |mask: u32| -> Vec<i8> { (0..s).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect() };
    let hit = (0u32..(1u32 << s)).into_par_iter().find_map_first(|mask| {
        match anf.signature_compatible(&to_sigma(mask), tol) {
            Ok(true) => None,
            Ok(false) => Some(Ok(to_sigma(mask))),
            Err(e) => Some(Err(e)),
        }
    });
    hit.transpose()
}

/// Answer of the signature test: `true` iff some signature is incompatible,
/// i.e. the origin is not first-order minimal.
pub fn anft_check(anf: &AbsNormalForm, tol: &Tolerances) -> Result<bool> {
    Ok(anft_witness(anf, tol)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardness::cnf::{random_cnf3, Cnf3};
    use crate::hardness::plt::{eval_plt, sat_to_plt};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn absolute_value_examples() {
        let abs = AbsNormalForm::new(vec![0.0], vec![1.0], vec![vec![1.0]], vec![vec![0.0]]).unwrap();
        assert!(!anft_check(&abs, &tol()).unwrap());
        let neg = AbsNormalForm::new(vec![0.0], vec![-1.0], vec![vec![1.0]], vec![vec![0.0]]).unwrap();
        assert_eq!(anft_witness(&neg, &tol()).unwrap(), Some(vec![-1]));
    }

    #[test]
    fn rejects_non_triangular_l() {
        let r = AbsNormalForm::new(
            vec![0.0],
            vec![1.0, 1.0],
            vec![vec![1.0], vec![1.0]],
            vec![vec![0.0, 1.0], vec![0.0, 0.0]],
        );
        assert!(r.is_err());
    }

    #[test]
    fn encoding_reproduces_plt_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let m = rng.random_range(1..=5);
            let n = rng.random_range(1..=5);
            let inst = sat_to_plt(&random_cnf3(&mut rng, m, n)).unwrap();
            let anf = plt_to_abs_normal(&inst);
            assert_eq!(anf.switches(), 4 * n - 1);
            for _ in 0..10 {
                let d: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
                let want = eval_plt(&inst, &d).unwrap();
                assert!((anf.eval(&d).unwrap() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_verdicts() {
        let single = sat_to_plt(&Cnf3::new(3, vec![vec![1, -2, 3]]).unwrap()).unwrap();
        let anf = plt_to_abs_normal(&single);
        assert_eq!(anf.switches(), 3);
        assert!(anft_check(&anf, &tol()).unwrap());
        let pair = sat_to_plt(&Cnf3::new(1, vec![vec![1], vec![-1]]).unwrap()).unwrap();
        assert!(!anft_check(&plt_to_abs_normal(&pair), &tol()).unwrap());
    }

    #[test]
    fn signature_matrix_inverts_the_system() {
        let inst = sat_to_plt(&Cnf3::new(2, vec![vec![1, 2], vec![-1], vec![2, -1]]).unwrap()).unwrap();
        let anf = plt_to_abs_normal(&inst);
        let sigma: Vec<i8> = (0..anf.switches()).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
        let p = anf.signature_matrix(&sigma);
        // (Diag(sigma) - L) P = Z
        for i in 0..anf.switches() {
            for k in 0..anf.dim() {
                let lhs = f64::from(sigma[i]) * p[i][k] - (0..i).map(|j| anf.l[i][j] * p[j][k]).sum::<f64>();
                assert!((lhs - anf.z[i][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn guard_on_switch_count() {
        let cnf = Cnf3::new(1, vec![vec![1]; 5]).unwrap();
        let anf = plt_to_abs_normal(&sat_to_plt(&cnf).unwrap());
        assert!(matches!(anft_witness(&anf, &tol()), Err(Error::GuardExceeded { .. })));
    }
}
