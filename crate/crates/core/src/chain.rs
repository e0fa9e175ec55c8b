//! Per-unit subdifferential sets of the empirical loss and the regularity
//! conditions that make the product chain rule exact.
//!
//! For unit `k` with tied indices `J_eq = I+ u I-` the Clarke-type set is
//!
//! ```text
//!     G^C_k = sum_{i not tied} u_k rho_i 1{w_k'x_i > 0} x_i + sum_{j tied} u_k rho_j x_j [0,1]
//! ```
//!
//! the Frechet-type set keeps only the `I+` segments and is empty when `I-`
//! is not, and the limiting-type set is a union over the sign patterns of
//! `I-` realizable by some direction, each pattern fixing its `I-` segments
//! at 0 or 1.

use crate::error::{Error, Result};
use crate::model::{local_structure, Dataset, LocalStructure, LossModel, Network, TieRule};
use crate::numkit::{lp_strict_feasible, rank_with_tolerance, vectors_rank, SegmentSumSet, Strict, Tolerances};

/// One realizable `I-` pattern of the limiting set.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingMember {
    /// `pattern[t]` is the activation of the `t`-th index of `I-`.
    pub pattern: Vec<bool>,
    pub set: SegmentSumSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitSubdiff {
    /// `sum_i rho_i max(w_k'x_i, 0)`, the `u_k` partial derivative.
    pub u_component: f64,
    pub clarke: SegmentSumSet,
    /// `None` encodes the empty set.
    pub frechet: Option<SegmentSumSet>,
    pub limiting: Vec<LimitingMember>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitSq {
    pub holds: bool,
    pub rank_plus: usize,
    pub rank_minus: usize,
    pub rank_joint: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqReport {
    pub units: Vec<UnitSq>,
    pub overall: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regularities {
    pub general_position: bool,
    pub likq: bool,
    pub liad: bool,
    pub sq: bool,
}

/// Limit on the number of `I-` indices per unit for limiting-set enumeration.
pub const MAX_LIMITING_TIES: usize = 20;
/// Limit on `C(N, min(N, d))` for the general-position check.
pub const MAX_GP_SUBSETS: u128 = 1_000_000;

pub fn check_sq(net: &Network, data: &Dataset, loss: &LossModel, rel_tol: f64) -> Result<SqReport> {
    let local = local_structure(net, data, loss, TieRule::Exact)?;
    Ok(sq_from_local(&local, data, rel_tol))
}

/// SQ restricted to ties with `u_k rho_i != 0`. A tie with a zero
/// coefficient contributes a zero generator, so it cannot affect either
/// side of the chain rule; when SQ fails only through such ties the formula
/// is still exact.
pub fn check_sq_effective(net: &Network, data: &Dataset, loss: &LossModel, rel_tol: f64) -> Result<SqReport> {
    let mut local = local_structure(net, data, loss, TieRule::Exact)?;
    for (k, plus) in local.i_plus.iter_mut().enumerate() {
        let u = net.unit(k).u;
        plus.retain(|&i| u * local.rho[i] != 0.0);
    }
    Ok(sq_from_local(&local, data, rel_tol))
}

/// SQ per unit: `rank([X+ | X-]) = rank(X+) + rank(X-)`.
pub fn sq_from_local(local: &LocalStructure, data: &Dataset, rel_tol: f64) -> SqReport {
    let pts = data.points();
    let units: Vec<UnitSq> = local
        .i_plus
        .iter()
        .zip(&local.i_minus)
        .map(|(plus, minus)| {
            let rank_plus = vectors_rank(pts, plus, rel_tol);
            let rank_minus = vectors_rank(pts, minus, rel_tol);
            let joint: Vec<usize> = plus.iter().chain(minus).copied().collect();
            let rank_joint = vectors_rank(pts, &joint, rel_tol);
            UnitSq {
                holds: rank_joint == rank_plus + rank_minus,
                rank_plus,
                rank_minus,
                rank_joint,
            }
        })
        .collect();
    let overall = units.iter().all(|u| u.holds);
    SqReport { units, overall }
}

pub fn build_subdiff_sets(
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    tol: &Tolerances,
) -> Result<Vec<UnitSubdiff>> {
    let local = local_structure(net, data, loss, TieRule::Exact)?;
    subdiff_from_local(&local, net, data, tol)
}

fn scaled(x: &[f64], c: f64) -> Vec<f64> {
    x.iter().map(|v| c * v).collect()
}

fn add_scaled(acc: &mut [f64], x: &[f64], c: f64) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += c * v;
    }
}

/// The convex sets `(G^C_k, G^F_k)` of every unit, without the limiting
/// pattern enumeration.
pub fn convex_sets_from_local(
    local: &LocalStructure,
    net: &Network,
    data: &Dataset,
) -> Vec<(SegmentSumSet, Option<SegmentSumSet>)> {
    net.units()
        .iter()
        .enumerate()
        .map(|(k, unit)| {
            let part = &local.partition.units[k];
            let base = unit_base(local, data, k, unit.u);
            let gens = |idx: &[usize]| -> Vec<Vec<f64>> {
                idx.iter()
                    .map(|&j| scaled(data.point(j), unit.u * local.rho[j]))
                    .collect()
            };
            let clarke = SegmentSumSet::new(base.clone(), gens(&part.eq));
            let frechet = local.i_minus[k]
                .is_empty()
                .then(|| SegmentSumSet::new(base, gens(&local.i_plus[k])));
            (clarke, frechet)
        })
        .collect()
}

/// The Clarke formula set in the flat parameter layout: the product over
/// units of the `u`-partial and `G^C_k`, itself a translated zonotope.
pub fn clarke_formula_set(net: &Network, data: &Dataset, loss: &LossModel) -> Result<SegmentSumSet> {
    let local = local_structure(net, data, loss, TieRule::Exact)?;
    let sets = convex_sets_from_local(&local, net, data);
    let (p, block) = (net.param_len(), net.dim() + 1);
    let mut base = Vec::with_capacity(p);
    let mut generators = Vec::new();
    for (k, (clarke, _)) in sets.iter().enumerate() {
        base.push(local.u_component(k));
        base.extend(&clarke.base);
        for g in &clarke.generators {
            let mut full = vec![0.0; p];
            full[k * block + 1..(k + 1) * block].copy_from_slice(g);
            generators.push(full);
        }
    }
    Ok(SegmentSumSet::new(base, generators))
}

fn unit_base(local: &LocalStructure, data: &Dataset, k: usize, u: f64) -> Vec<f64> {
    let mut base = vec![0.0; data.dim()];
    for &i in &local.partition.units[k].greater {
        add_scaled(&mut base, data.point(i), u * local.rho[i]);
    }
    base
}

pub fn subdiff_from_local(
    local: &LocalStructure,
    net: &Network,
    data: &Dataset,
    tol: &Tolerances,
) -> Result<Vec<UnitSubdiff>> {
    let convex = convex_sets_from_local(local, net, data);
    let mut out = Vec::with_capacity(net.hidden());
    for ((k, unit), (clarke, frechet)) in net.units().iter().enumerate().zip(convex) {
        let coeff = |j: usize| unit.u * local.rho[j];
        let plus_gens: Vec<Vec<f64>> = local.i_plus[k]
            .iter()
            .map(|&j| scaled(data.point(j), coeff(j)))
            .collect();
        let minus = &local.i_minus[k];
        if minus.len() > MAX_LIMITING_TIES {
            return Err(Error::GuardExceeded {
                what: "negative tied indices for one unit",
                value: minus.len() as u128,
                limit: MAX_LIMITING_TIES as u128,
            });
        }
        let base = unit_base(local, data, k, unit.u);
        let limiting = realizable_patterns(data, minus, tol)?
            .into_iter()
            .map(|pattern| {
                let mut b = base.clone();
                for (&j, &on) in minus.iter().zip(&pattern) {
                    if on {
                        add_scaled(&mut b, data.point(j), coeff(j));
                    }
                }
                LimitingMember {
                    pattern,
                    set: SegmentSumSet::new(b, plus_gens.clone()),
                }
            })
            .collect();

        out.push(UnitSubdiff {
            u_component: local.u_component(k),
            clarke,
            frechet,
            limiting,
        });
    }
    Ok(out)
}

/// Sign patterns on `idx` realizable by a direction `d` with every
/// `x_t'd` strictly signed, by depth-first search with LP pruning.
fn realizable_patterns(data: &Dataset, idx: &[usize], tol: &Tolerances) -> Result<Vec<Vec<bool>>> {
    if idx.is_empty() {
        return Ok(vec![Vec::new()]);
    }
    let mut found = Vec::new();
    let mut prefix = Vec::with_capacity(idx.len());
    dfs(data, idx, tol, &mut prefix, &mut found)?;
    Ok(found)
}

fn dfs(
    data: &Dataset,
    idx: &[usize],
    tol: &Tolerances,
    prefix: &mut Vec<bool>,
    found: &mut Vec<Vec<bool>>,
) -> Result<()> {
    if prefix.len() == idx.len() {
        found.push(prefix.clone());
        return Ok(());
    }
    for on in [false, true] {
        prefix.push(on);
        let rows: Vec<(Vec<f64>, Strict)> = idx
            .iter()
            .zip(prefix.iter())
            .map(|(&t, &s)| (data.point(t).to_vec(), if s { Strict::Gt } else { Strict::Lt }))
            .collect();
        if lp_strict_feasible(&rows, &[], tol)?.feasible {
            dfs(data, idx, tol, prefix, found)?;
        }
        prefix.pop();
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u128::MAX / 1024 {
            return u128::MAX;
        }
    }
    acc
}

/// Every `min(N, d)`-subset of the data has full rank.
pub fn general_position(data: &Dataset, rel_tol: f64) -> Result<bool> {
    let n = data.len();
    let k = n.min(data.dim());
    let count = binomial(n, k);
    if count > MAX_GP_SUBSETS {
        return Err(Error::GuardExceeded {
            what: "general-position subsets",
            value: count,
            limit: MAX_GP_SUBSETS,
        });
    }
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        if vectors_rank(data.points(), &subset, rel_tol) < k {
            return Ok(false);
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(true);
            }
            i -= 1;
            if subset[i] < n - k + i {
                subset[i] += 1;
                for j in i + 1..k {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Tied data of every unit are linearly independent.
pub fn liad_from_local(local: &LocalStructure, data: &Dataset, rel_tol: f64) -> bool {
    local
        .partition
        .units
        .iter()
        .all(|u| vectors_rank(data.points(), &u.eq, rel_tol) == u.eq.len())
}

/// Full row rank of the Jacobian rows of the active switching variables
/// `z_{k,i} = w_k'x_i`; the row of `(k, i)` carries `x_i` in the `w_k`
/// block of parameter space and zeros elsewhere.
pub fn likq_from_local(local: &LocalStructure, net: &Network, data: &Dataset, rel_tol: f64) -> bool {
    let d = data.dim();
    let width = net.param_len();
    let mut rows = Vec::new();
    for (k, part) in local.partition.units.iter().enumerate() {
        for &i in &part.eq {
            let mut row = vec![0.0; width];
            row[k * (d + 1) + 1..(k + 1) * (d + 1)].copy_from_slice(data.point(i));
            rows.push(row);
        }
    }
    rank_with_tolerance(&rows, rel_tol) == rows.len()
}

pub fn check_regularities(net: &Network, data: &Dataset, loss: &LossModel, rel_tol: f64) -> Result<Regularities> {
    let local = local_structure(net, data, loss, TieRule::Exact)?;
    Ok(Regularities {
        general_position: general_position(data, rel_tol)?,
        likq: likq_from_local(&local, net, data, rel_tol),
        liad: liad_from_local(&local, data, rel_tol),
        sq: sq_from_local(&local, data, rel_tol).overall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Unit;
    use crate::numkit::{box_ls_distance, min_norm_in_hull};

    const TOL: f64 = 1e-9;

    fn one_unit(w: Vec<f64>) -> Network {
        Network::new(vec![Unit::new(1.0, w)]).unwrap()
    }

    fn sq_not_liad_data() -> Dataset {
        Dataset::new(
            vec![
                vec![0.0, 2.0, 0.0, 1.0],
                vec![2.0, 0.0, 2.0, 1.0],
                vec![1.0, 1.0, 1.0, 1.0],
                vec![1.0, 0.0, -1.0, 1.0],
            ],
            vec![1.0, 1.0, 1.0, -1.0],
        )
        .unwrap()
    }

    #[test]
    fn sq_holds_but_liad_fails() {
        let data = sq_not_liad_data();
        let net = one_unit(vec![0.0; 4]);
        let reg = check_regularities(&net, &data, &LossModel::label_linear(), TOL).unwrap();
        assert!(reg.sq);
        assert!(!reg.liad);
        assert!(!reg.likq);
        let sq = check_sq(&net, &data, &LossModel::label_linear(), TOL).unwrap();
        assert_eq!(sq.units[0].rank_plus, 2);
        assert_eq!(sq.units[0].rank_minus, 1);
        assert_eq!(sq.units[0].rank_joint, 3);
    }

    #[test]
    fn liad_without_general_position() {
        let data = Dataset::new(
            vec![
                vec![0.0, -2.0, 1.0],
                vec![0.0, -1.0, 1.0],
                vec![1.0, 0.0, 1.0],
                vec![0.0, 1.0, 1.0],
            ],
            vec![1.0, 1.0, 1.0, -1.0],
        )
        .unwrap();
        let net = one_unit(vec![1.0, 1.0, -1.0]);
        let reg = check_regularities(&net, &data, &LossModel::label_linear(), TOL).unwrap();
        assert!(reg.liad && reg.likq && reg.sq);
        assert!(!reg.general_position);
    }

    #[test]
    fn empty_negative_set_gives_sq() {
        let data = Dataset::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let sq = check_sq(&one_unit(vec![0.0]), &data, &LossModel::identity(), TOL).unwrap();
        assert!(sq.overall);
    }

    #[test]
    fn identical_points_split_across_signs_break_sq() {
        let data = Dataset::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]], vec![1.0, -1.0]).unwrap();
        let sq = check_sq(&one_unit(vec![0.0, 1.0]), &data, &LossModel::label_linear(), TOL).unwrap();
        assert!(!sq.overall);
    }

    #[test]
    fn abs_construction_sets() {
        let data = Dataset::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let sets = build_subdiff_sets(
            &one_unit(vec![0.0]),
            &data,
            &LossModel::identity(),
            &Tolerances::default(),
        )
        .unwrap();
        let s = &sets[0];
        assert_eq!(s.u_component, 0.0);
        assert_eq!(s.clarke.base, vec![0.0]);
        assert_eq!(s.clarke.generators, vec![vec![1.0], vec![-1.0]]);
        assert_eq!(s.frechet.as_ref(), Some(&s.clarke));
        assert_eq!(s.limiting.len(), 1);
        assert_eq!(s.limiting[0].set, s.clarke);
    }

    #[test]
    fn negated_abs_construction_sets() {
        let data = Dataset::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let loss = LossModel::custom("negated", |t, _| -t, |_, _| -1.0, 1.0, 0.0);
        let sets = build_subdiff_sets(&one_unit(vec![0.0]), &data, &loss, &Tolerances::default()).unwrap();
        let s = &sets[0];
        assert!(s.frechet.is_none());
        let mut points: Vec<f64> = s
            .limiting
            .iter()
            .map(|m| {
                assert!(m.set.generators.is_empty());
                m.set.base[0]
            })
            .collect();
        points.sort_by(f64::total_cmp);
        assert_eq!(points, vec![-1.0, 1.0]);
        let mut patterns: Vec<Vec<bool>> = s.limiting.iter().map(|m| m.pattern.clone()).collect();
        patterns.sort();
        assert_eq!(patterns, vec![vec![false, true], vec![true, false]]);
    }

    #[test]
    fn smooth_point_collapses_to_gradient() {
        let data = Dataset::new(vec![vec![1.0, 2.0], vec![-1.0, 0.5]], vec![0.3, -0.2]).unwrap();
        let net = one_unit(vec![0.7, 0.1]);
        let sets = build_subdiff_sets(&net, &data, &LossModel::square(), &Tolerances::default()).unwrap();
        let s = &sets[0];
        assert!(s.clarke.generators.is_empty());
        assert_eq!(s.frechet.as_ref(), Some(&s.clarke));
        assert_eq!(s.limiting.len(), 1);
        // gradient in w: rho_1 * x_1 with rho_1 = 0.7*1 + 0.1*2 - 0.3
        let rho = 0.9 - 0.3;
        assert!((s.clarke.base[0] - rho).abs() < 1e-15);
        assert!((s.clarke.base[1] - 2.0 * rho).abs() < 1e-15);
    }

    #[test]
    fn general_position_with_few_points_and_duplicates() {
        let data = Dataset::new(vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], vec![0.0, 0.0]).unwrap();
        assert!(!general_position(&data, TOL).unwrap());
        let data = Dataset::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], vec![0.0, 0.0]).unwrap();
        assert!(general_position(&data, TOL).unwrap());
    }

    #[test]
    fn duplicated_tied_point_breaks_liad() {
        let data = Dataset::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let reg = check_regularities(&one_unit(vec![0.0, 1.0]), &data, &LossModel::label_linear(), TOL).unwrap();
        assert!(!reg.liad && !reg.likq);
        assert!(reg.sq);
    }

    #[test]
    fn limiting_hull_distance_matches_clarke_under_sq() {
        let data = sq_not_liad_data();
        let tol = Tolerances::default();
        let sets = build_subdiff_sets(&one_unit(vec![0.0; 4]), &data, &LossModel::label_linear(), &tol).unwrap();
        let s = &sets[0];
        let clarke = box_ls_distance(&s.clarke, &tol).unwrap().distance;
        let vertices: Vec<Vec<f64>> = s.limiting.iter().flat_map(|m| m.set.vertex_candidates()).collect();
        let hull = min_norm_in_hull(&vertices, &tol).unwrap().distance;
        assert!((clarke - hull).abs() < 1e-8);
    }
}
