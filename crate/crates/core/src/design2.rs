//! Piggybacking over `2r - 3` substripes per instance with weighted
//! combinations of the first `r - 1` substripes.

use std::ops::Range;

use crate::algebra::rational::{ratio, Ratio};
use crate::algebra::{Field, Mat};
use crate::basecode::{BaseCode, ScalarMDSBase};
use crate::design1::contiguous;
use crate::engine::{covered_parity_plan, full_download_plan, parity_piggyback_pass, Cover, RepairPlan, Repairable};
use crate::error::{Error, Result};
use crate::framework::{instantiate, LinearCode, PiggybackSpec};

/// `(t_low, t_high, t)`: the first `t` sets have `t_high` nodes, the rest `t_low`.
pub fn sizes(k: usize, r: usize) -> Result<(usize, usize, usize)> {
    if r < 3 {
        return Err(Error::params(format!("design 2 needs r >= 3, got r={r}")));
    }
    if k < r - 1 {
        return Err(Error::params(format!("design 2 needs k >= r - 1, got k={k}, r={r}")));
    }
    let t_low = k / (r - 1);
    let t_high = k.div_ceil(r - 1);
    Ok((t_low, t_high, k - (r - 1) * t_low))
}

/// Distinct nonzero weights: powers `g^0 .. g^(r-2)` of the field generator.
pub fn weights(field: Field, r: usize) -> Result<Vec<u32>> {
    if r - 1 > (field.order() - 1) as usize {
        return Err(Error::FieldTooSmall {
            needed: r,
            order: field.order(),
        });
    }
    let g = field.generator();
    Ok((0..r - 1).map(|e| field.pow(g, e as u64)).collect())
}

#[derive(Clone, Debug)]
pub struct Design2 {
    code: LinearCode,
    m: usize,
    sets: Vec<Range<usize>>,
    weights: Vec<u32>,
    covers: Vec<Cover>,
}

/// Groups other than `skip`, in order; group `j_u` sits on substripe `r - 1 + u`.
fn other_groups(r: usize, skip: usize) -> impl Iterator<Item = usize> {
    (0..r - 1).filter(move |&g| g != skip)
}

/// `m` instances of `2r - 3` substripes each.
pub fn construct(base: &ScalarMDSBase, m: usize) -> Result<Design2> {
    if m == 0 {
        return Err(Error::params("design 2 needs m >= 1"));
    }
    let (k, r, f) = (base.k(), base.r(), base.field());
    let (t_low, t_high, t) = sizes(k, r)?;
    let mut set_sizes = vec![t_high; t];
    set_sizes.resize(r - 1, t_low);
    let sets = contiguous(&set_sizes);
    let w = weights(f, r)?;
    check_recovery_system(f, &w)?;

    let len = 2 * r - 3;
    let alpha = len * m;
    let code = instantiate(base, alpha)?;
    let mut spec = PiggybackSpec::new(alpha);
    for inst in 0..m {
        let o = inst * len;
        for par in 1..r {
            let p = base.parity(par);
            let wi = w[par - 1];
            // q masked to `group`, times sum_s w^(r-1-s) a_s for s in 1..=upto
            let combo = |group: usize, upto: usize, coeffs: &mut [u32]| {
                for s in 1..=upto {
                    let ws = f.pow(wi, (r - 1 - s) as u64);
                    for x in sets[group].clone() {
                        let c = (o + s - 1) * k + x;
                        coeffs[c] = f.add(coeffs[c], f.mul(p[x], ws));
                    }
                }
            };
            let mut hat = vec![0; k * alpha];
            for g in other_groups(r, par - 1) {
                combo(g, r - 2, &mut hat);
            }
            spec.add(k + par, o + r - 2, hat);
            for (u, g) in other_groups(r, par - 1).enumerate() {
                let mut coeffs = vec![0; k * alpha];
                combo(g, r - 1, &mut coeffs);
                spec.add(k + par, o + r - 1 + u, coeffs);
            }
        }
    }
    let mut code = code.apply_piggyback(&spec)?;
    let mut t_mat = Mat::identity(f, alpha);
    for inst in 0..m {
        let o = inst * len;
        for u in 0..r - 2 {
            t_mat.set(o + r - 2, o + r - 1 + u, f.neg(1));
        }
    }
    for par in 1..r {
        code = code.apply_node_transform(k + par, &t_mat)?;
    }

    let mut d = Design2 {
        code,
        m,
        sets,
        weights: w,
        covers: Vec::new(),
    };
    let pass = parity_piggyback_pass(&d.code, &|l| d.sys_reads(l))?;
    d.code = pass.code;
    d.covers = pass.covers;
    Ok(d)
}

/// For every group, the `r - 1` combinations a repair recovers must be independent.
fn check_recovery_system(f: Field, w: &[u32]) -> Result<()> {
    let r = w.len() + 1;
    for group in 0..r - 1 {
        let mut rows = Vec::new();
        for par in 1..r {
            if par - 1 == group {
                let mut e = vec![0; r - 1];
                e[r - 2] = 1;
                rows.push(e);
            } else {
                rows.push((1..r).map(|s| f.pow(w[par - 1], (r - 1 - s) as u64)).collect());
            }
        }
        if Mat::from_rows(f, &rows)?.rank() != r - 1 {
            return Err(Error::params("weights give a singular recovery system"));
        }
    }
    Ok(())
}

impl Design2 {
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn sets(&self) -> &[Range<usize>] {
        &self.sets
    }
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }
    pub fn covers(&self) -> &[Cover] {
        &self.covers
    }

    pub fn set_of(&self, l: usize) -> usize {
        self.sets.iter().position(|s| s.contains(&l)).expect("systematic node")
    }

    /// Reads for systematic node `l`.
    pub fn sys_reads(&self, l: usize) -> Vec<(usize, usize)> {
        let (k, r) = (self.code.k(), self.code.r());
        let len = 2 * r - 3;
        let group = self.set_of(l);
        let mut reads = Vec::new();
        for inst in 0..self.m {
            let o = inst * len;
            for s in o + r - 1..o + len {
                reads.extend((0..=k).filter(|&i| i != l).map(|i| (i, s)));
            }
            for par in 1..r {
                let s = if par - 1 == group {
                    o + r - 2
                } else {
                    let u = other_groups(r, par - 1).position(|g| g == group).expect("group");
                    o + r - 1 + u
                };
                reads.push((k + par, s));
            }
            for x in self.sets[group].clone().filter(|&x| x != l) {
                reads.extend((o..o + r - 1).map(|s| (x, s)));
            }
        }
        reads
    }
}

impl Repairable for Design2 {
    fn code(&self) -> &LinearCode {
        &self.code
    }

    fn repair_plan(&self, node: usize) -> Result<RepairPlan> {
        let k = self.code.k();
        if node < k {
            RepairPlan::from_reads(&self.code, node, self.sys_reads(node))
        } else if node == k {
            full_download_plan(&self.code, node)
        } else {
            covered_parity_plan(&self.code, &self.covers, node)
        }
    }
}

/// Per-instance systematic repair cost for a node in a set of `size`.
pub fn sys_cost(k: usize, r: usize, size: usize) -> usize {
    (r - 2) * k + (r - 1) * size
}

/// Average systematic read fraction, weighting each set by its node count.
pub fn gamma2_sys(k: usize, r: usize) -> Result<Ratio> {
    let (t_low, t_high, t) = sizes(k, r)?;
    let total = t * t_high * sys_cost(k, r, t_high) + (k - t * t_high) * sys_cost(k, r, t_low);
    Ok(ratio(total as i64, ((2 * r - 3) * k * k) as i64))
}

/// The same average with the large sets weighted
/// by `t` rather than by their node count. Agrees with [`gamma2_sys`] when
/// `r - 1` divides `k`.
pub fn gamma2_sys_unweighted(k: usize, r: usize) -> Result<Ratio> {
    let (t_low, t_high, t) = sizes(k, r)?;
    let total = t * sys_cost(k, r, t_high) + (k - t) * sys_cost(k, r, t_low);
    Ok(ratio(total as i64, ((2 * r - 3) * k * k) as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basecode::make_cauchy_base;
    use crate::engine::{measure_gamma, plan_validate};
    use crate::framework::DEFAULT_BOUND;

    fn build(k: usize, r: usize, m: usize) -> Design2 {
        construct(&make_cauchy_base(Field::gf256(), k, r).unwrap(), m).unwrap()
    }

    #[test]
    fn sizes_examples() {
        assert_eq!(sizes(10, 3).unwrap(), (5, 5, 0));
        assert_eq!(sizes(10, 4).unwrap(), (3, 4, 1));
        assert_eq!(sizes(4, 3).unwrap(), (2, 2, 0));
        assert!(sizes(10, 2).is_err());
    }

    #[test]
    fn example_13_10() {
        let d = build(10, 3, 1);
        assert_eq!(d.code().alpha(), 3);
        for l in 0..10 {
            let plan = d.repair_plan(l).unwrap();
            assert_eq!(plan.cost(), 20);
            assert!(plan_validate(d.code(), &plan));
        }
        assert!(d.code().verify_mds(DEFAULT_BOUND).unwrap());
        assert_eq!(measure_gamma(&d).unwrap().sys, ratio(2, 3));
        assert_eq!(gamma2_sys(10, 3).unwrap(), ratio(2, 3));
    }

    #[test]
    fn uneven_sets() {
        let d = build(10, 4, 1);
        assert_eq!(d.repair_plan(0).unwrap().cost(), 32);
        assert_eq!(d.repair_plan(9).unwrap().cost(), 29);
        assert_eq!(measure_gamma(&d).unwrap().sys, gamma2_sys(10, 4).unwrap());
        assert_ne!(gamma2_sys(10, 4).unwrap(), gamma2_sys_unweighted(10, 4).unwrap());
    }

    #[test]
    fn small_case() {
        let d = build(4, 3, 1);
        assert_eq!(d.repair_plan(0).unwrap().cost(), 8);
        assert_eq!(gamma2_sys(4, 3).unwrap(), ratio(8, 12));
    }

    #[test]
    fn r3_masks_are_complementary_halves() {
        let base = make_cauchy_base(Field::gf256(), 10, 3).unwrap();
        let d = construct(&base, 1).unwrap();
        let code = d.code();
        // node 12: substripe 3 holds p2.c + q.(b + a) with q on one half only
        let row = code.row(11, 2);
        let on_a: Vec<usize> = (0..10).filter(|&x| row[x] != 0).collect();
        let on_b: Vec<usize> = (0..10).filter(|&x| row[10 + x] != 0).collect();
        assert_eq!(on_a, on_b);
        let row13 = code.row(12, 2);
        let on_a13: Vec<usize> = (0..10).filter(|&x| row13[x] != 0).collect();
        assert_eq!(on_a.len() + on_a13.len(), 10);
        assert!(on_a.iter().all(|x| !on_a13.contains(x)));
    }

    #[test]
    fn parity_pass_helps_with_two_instances() {
        let d = build(10, 3, 2);
        assert!(!d.covers().is_empty());
        let c = d.repair_plan(12).unwrap().cost();
        assert!(c < 60, "cost {c}");
        for l in 0..10 {
            assert_eq!(d.repair_plan(l).unwrap().cost(), 40);
        }
    }
}
