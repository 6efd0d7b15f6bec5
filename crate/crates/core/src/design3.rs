//! Two-level piggybacking with repair locality `k + 1`.
//!
//! Systematic nodes split into `S1`, `S2`, `S3`. Within each half of `2 * m1`
//! substripes, odd substripes of the non-first parities carry sums over groups
//! of `S1` from the previous substripe, even ones the same for `S2`. When `S3`
//! is non-empty a second half is added and the first parity's second half
//! carries sums over `S3` from the first half.

use std::ops::Range;

use crate::algebra::rational::{ratio, Ratio};
use crate::algebra::Field;
use crate::basecode::{make_cauchy_base, BaseCode, ScalarMDSBase};
use crate::design1::contiguous;
use crate::engine::{full_download_plan, RepairPlan, Repairable};
use crate::error::{Error, Result};
use crate::framework::{instantiate, LinearCode, PiggybackSpec};

/// `(t1, t2, t3)` with `t1 = t2` where possible.
pub fn sizes(k: usize, r: usize) -> Result<(usize, usize, usize)> {
    if k < 2 || r < 2 {
        return Err(Error::params(format!(
            "design 3 needs k >= 2 and r >= 2, got k={k}, r={r}"
        )));
    }
    let t = (k * (r - 1)).div_ceil(2 * r - 1);
    if 2 * t > k {
        return Ok((k.div_ceil(2), k / 2, 0));
    }
    Ok((t, t, k - 2 * t))
}

/// Split `set` into `parts` contiguous groups, larger first.
fn split(set: Range<usize>, parts: usize) -> Vec<Range<usize>> {
    let len = set.len();
    let sizes: Vec<usize> = (0..parts).map(|g| len / parts + usize::from(g < len % parts)).collect();
    contiguous(&sizes)
        .into_iter()
        .map(|g| g.start + set.start..g.end + set.start)
        .collect()
}

#[derive(Clone, Debug)]
pub struct Design3 {
    code: LinearCode,
    m1: usize,
    levels: usize,
    sets: [Range<usize>; 3],
    groups: [Vec<Range<usize>>; 2],
}

/// Picks one level when `S3` is empty, two otherwise.
pub fn construct(base: &ScalarMDSBase, m1: usize) -> Result<Design3> {
    let (_, _, t3) = sizes(base.k(), base.r())?;
    construct_levels(base, m1, if t3 > 0 { 2 } else { 1 })
}

pub fn construct_levels(base: &ScalarMDSBase, m1: usize, levels: usize) -> Result<Design3> {
    if m1 < 2 {
        return Err(Error::params(format!("design 3 needs m1 >= 2, got {m1}")));
    }
    let (k, r) = (base.k(), base.r());
    let (t1, t2, t3) = sizes(k, r)?;
    if !(1..=2).contains(&levels) || (levels == 1 && t3 > 0) {
        return Err(Error::params(format!(
            "design 3 cannot use {levels} level(s) with t3={t3}"
        )));
    }
    let sets = [0..t1, t1..t1 + t2, t1 + t2..k];
    let groups = [split(sets[0].clone(), r - 1), split(sets[1].clone(), r - 1)];
    let h = 2 * m1;
    let alpha = h * levels;
    let code = instantiate(base, alpha)?;

    let mut spec = PiggybackSpec::new(alpha);
    for half in 0..levels {
        let o = half * h;
        for s in 1..h {
            let which = if s % 2 == 1 { 0 } else { 1 };
            for (g, members) in groups[which].iter().enumerate() {
                if members.is_empty() {
                    continue;
                }
                let mut coeffs = vec![0; k * alpha];
                for x in members.clone() {
                    coeffs[code.coord(x, o + s - 1)] = 1;
                }
                spec.add(k + 1 + g, o + s, coeffs);
            }
        }
    }
    if levels == 2 && t3 > 0 {
        for s in 0..h {
            let mut coeffs = vec![0; k * alpha];
            for x in sets[2].clone() {
                coeffs[code.coord(x, s)] = 1;
            }
            spec.add(k, h + s, coeffs);
        }
    }
    let code = code.apply_piggyback(&spec)?;
    Ok(Design3 {
        code,
        m1,
        levels,
        sets,
        groups,
    })
}

impl Design3 {
    pub fn m1(&self) -> usize {
        self.m1
    }
    pub fn levels(&self) -> usize {
        self.levels
    }
    pub fn sets(&self) -> &[Range<usize>; 3] {
        &self.sets
    }
    pub fn groups(&self) -> &[Vec<Range<usize>>; 2] {
        &self.groups
    }

    fn half_len(&self) -> usize {
        2 * self.m1
    }

    /// Reads for systematic node `l`.
    pub fn sys_reads(&self, l: usize) -> Result<Vec<(usize, usize)>> {
        let k = self.code.k();
        if l >= k {
            return Err(Error::IndexOutOfRange {
                what: "systematic node",
                index: l,
                limit: k,
            });
        }
        let h = self.half_len();
        let clean = |s: usize, reads: &mut Vec<(usize, usize)>, helper: usize| {
            reads.extend((0..k).filter(|&i| i != l).map(|i| (i, s)));
            reads.push((helper, s));
        };
        let mut reads = Vec::new();
        if self.sets[2].contains(&l) {
            for s in h..2 * h {
                clean(s, &mut reads, k + 1);
                reads.push((k, s));
            }
            for x in self.sets[2].clone().filter(|&x| x != l) {
                reads.extend((0..h).map(|s| (x, s)));
            }
            return Ok(reads);
        }
        let which = usize::from(!self.sets[0].contains(&l));
        let g = self.groups[which].iter().position(|m| m.contains(&l)).expect("grouped");
        for half in 0..self.levels {
            let o = half * h;
            // S1 decodes odd substripes, S2 even ones plus the last
            let parity = if which == 0 { 1 } else { 0 };
            for s in (0..h).filter(|s| s % 2 == parity) {
                clean(o + s, &mut reads, k);
                if s >= 1 {
                    reads.push((k + 1 + g, o + s));
                    reads.extend(
                        self.groups[which][g]
                            .clone()
                            .filter(|&x| x != l)
                            .map(|x| (x, o + s - 1)),
                    );
                }
            }
            if which == 1 {
                clean(o + h - 1, &mut reads, k);
            }
        }
        Ok(reads)
    }
}

impl Repairable for Design3 {
    fn code(&self) -> &LinearCode {
        &self.code
    }

    fn repair_plan(&self, node: usize) -> Result<RepairPlan> {
        if node < self.code.k() {
            RepairPlan::from_reads(&self.code, node, self.sys_reads(node)?)
        } else {
            full_download_plan(&self.code, node)
        }
    }
}

/// Average systematic plan cost over `alpha * k`, on a GF(2^8) Cauchy base.
pub fn gamma3_sys_measured(k: usize, r: usize, m1: usize) -> Result<Ratio> {
    let d = construct(&make_cauchy_base(Field::gf256(), k, r)?, m1)?;
    let mut total = 0;
    for l in 0..k {
        total += d.repair_plan(l)?.cost();
    }
    Ok(ratio(total as i64, (d.code.alpha() * k * k) as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::plan_validate;
    use crate::framework::DEFAULT_BOUND;

    fn base(k: usize, r: usize) -> ScalarMDSBase {
        make_cauchy_base(Field::gf256(), k, r).unwrap()
    }

    #[test]
    fn sizes_examples() {
        assert_eq!(sizes(10, 3).unwrap(), (4, 4, 2));
        assert_eq!(sizes(8, 3).unwrap(), (4, 4, 0));
        assert_eq!(sizes(2, 2).unwrap(), (1, 1, 0));
        assert_eq!(sizes(3, 4).unwrap(), (2, 1, 0));
        assert!(sizes(1, 2).is_err());
    }

    #[test]
    fn example_11_8() {
        let d = construct(&base(8, 3), 2).unwrap();
        assert_eq!(d.code().alpha(), 4);
        let costs: Vec<usize> = (0..8).map(|l| d.repair_plan(l).unwrap().cost()).collect();
        assert_eq!(costs, vec![20, 20, 20, 20, 26, 26, 26, 26]);
        assert_eq!(gamma3_sys_measured(8, 3, 2).unwrap(), ratio(23, 32));
        // node 10, substripe 2: p2.b + a1 + a2
        let row = d.code().row(9, 1);
        assert_eq!(row[0], 1);
        assert_eq!(row[1], 1);
        assert!(row[2..8].iter().all(|&v| v == 0));
        assert!(d.code().verify_mds(DEFAULT_BOUND).unwrap());
    }

    #[test]
    fn example_13_10() {
        let d = construct(&base(10, 3), 2).unwrap();
        assert_eq!(d.code().alpha(), 8);
        for l in 0..10 {
            let plan = d.repair_plan(l).unwrap();
            let want = if (4..8).contains(&l) { 64 } else { 48 };
            assert_eq!(plan.cost(), want, "node {l}");
            assert!(plan.locality() <= 11);
            assert!(plan_validate(d.code(), &plan));
        }
        assert_eq!(gamma3_sys_measured(10, 3, 2).unwrap(), ratio(544, 800));
        // node 11, substripe 5: p1.e + a9 + a10
        let row = d.code().row(10, 4);
        assert_eq!(row[8], 1);
        assert_eq!(row[9], 1);
        assert!(d.code().verify_mds(DEFAULT_BOUND).unwrap());
    }

    #[test]
    fn two_levels_without_s3_is_two_copies() {
        let b = base(8, 3);
        let one = construct_levels(&b, 2, 1).unwrap();
        let two = construct_levels(&b, 2, 2).unwrap();
        let (k, h) = (8, 4);
        for node in 0..11 {
            for s in 0..2 * h {
                let row = two.code().row(node, s);
                let src = one.code().row(node, s % h);
                // coordinate (substripe, node) shifts by one half
                let offset = if s >= h { k * h } else { 0 };
                for (c, &v) in src.iter().enumerate().take(k * h) {
                    assert_eq!(row[c + offset], v);
                }
            }
        }
        assert!(construct_levels(&base(10, 3), 2, 1).is_err());
    }

    #[test]
    fn m1_bounds() {
        assert!(construct(&base(8, 3), 1).is_err());
        let d = construct(&base(10, 3), 3).unwrap();
        assert_eq!(d.code().alpha(), 12);
        for l in 0..10 {
            let plan = d.repair_plan(l).unwrap();
            assert!(plan.locality() <= 11);
            assert!(plan_validate(d.code(), &plan));
        }
        let g = gamma3_sys_measured(2, 2, 2).unwrap();
        assert!(g > ratio(0, 1) && g <= ratio(1, 1));
    }
}
