//! Two-substripe piggybacking over `r` sets of systematic nodes, with the
//! parity pass for `m > 1` pairs.

use std::ops::Range;

use crate::algebra::rational::{ratio, Ratio};
use crate::algebra::Mat;
use crate::basecode::ScalarMDSBase;
use crate::engine::{covered_parity_plan, full_download_plan, parity_piggyback_pass, Cover, RepairPlan, Repairable};
use crate::error::{Error, Result};
use crate::framework::{instantiate, LinearCode, PiggybackSpec};

/// Set sizes `(t, t_r)`: the first `r - 1` sets have `t` nodes, the last `t_r`.
pub fn sizes(k: usize, r: usize) -> Result<(usize, usize)> {
    if r < 2 {
        return Err(Error::params("design 1 needs r >= 2"));
    }
    if k < r {
        return Err(Error::params(format!("design 1 needs k >= r, got k={k}, r={r}")));
    }
    let mut t = (2 * k + r - 2).div_ceil(2 * r);
    while (r - 1) * t >= k {
        t -= 1;
    }
    Ok((t, k - (r - 1) * t))
}

pub(crate) fn contiguous(sizes: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&s| {
            let r = start..start + s;
            start += s;
            r
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Design1 {
    code: LinearCode,
    m: usize,
    t: usize,
    t_r: usize,
    sets: Vec<Range<usize>>,
    covers: Vec<Cover>,
}

/// `m` pairs of substripes built from a scalar MDS base.
pub fn construct(base: &ScalarMDSBase, m: usize) -> Result<Design1> {
    use crate::basecode::BaseCode;
    if m == 0 {
        return Err(Error::params("design 1 needs m >= 1"));
    }
    let (k, r) = (base.k(), base.r());
    let (t, t_r) = sizes(k, r)?;
    let mut set_sizes = vec![t; r - 1];
    set_sizes.push(t_r);
    let sets = contiguous(&set_sizes);
    let f = base.field();
    let alpha = 2 * m;
    let code = instantiate(base, alpha)?;
    let p_last = base.parity(r - 1);

    let mut spec = PiggybackSpec::new(alpha);
    for pair in 0..m {
        let (a, b) = (2 * pair, 2 * pair + 1);
        for par in 1..r {
            let mut coeffs = vec![0; k * alpha];
            for x in sets[par - 1].clone() {
                coeffs[a * k + x] = p_last[x];
            }
            spec.add(k + par, b, coeffs);
        }
    }
    let code = code.apply_piggyback(&spec)?;

    let mut t_mat = Mat::identity(f, alpha);
    for pair in 0..m {
        t_mat.set(2 * pair, 2 * pair + 1, f.neg(1));
    }
    let code = code.apply_node_transform(k + r - 1, &t_mat)?;

    let mut d = Design1 {
        code,
        m,
        t,
        t_r,
        sets,
        covers: Vec::new(),
    };
    if m > 1 {
        let pass = parity_piggyback_pass(&d.code, &|l| d.sys_reads(l))?;
        d.code = pass.code;
        d.covers = pass.covers;
    }
    Ok(d)
}

impl Design1 {
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn sizes(&self) -> (usize, usize) {
        (self.t, self.t_r)
    }
    pub fn sets(&self) -> &[Range<usize>] {
        &self.sets
    }
    pub fn covers(&self) -> &[Cover] {
        &self.covers
    }

    fn set_of(&self, l: usize) -> usize {
        self.sets.iter().position(|s| s.contains(&l)).expect("systematic node")
    }

    /// Reads for systematic node `l`.
    pub fn sys_reads(&self, l: usize) -> Vec<(usize, usize)> {
        let (k, r) = (self.code.k(), self.code.r());
        let si = self.set_of(l);
        let mut reads = Vec::new();
        for pair in 0..self.m {
            let (a, b) = (2 * pair, 2 * pair + 1);
            reads.extend((0..=k).filter(|&i| i != l).map(|i| (i, b)));
            if si + 1 < r {
                reads.push((k + si + 1, b));
            } else {
                reads.push((k + r - 1, a));
                reads.extend((1..r - 1).map(|par| (k + par, b)));
            }
            reads.extend(self.sets[si].clone().filter(|&x| x != l).map(|x| (x, a)));
        }
        reads
    }
}

impl Repairable for Design1 {
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

/// Average systematic read fraction.
pub fn gamma1_sys(k: usize, r: usize) -> Result<Ratio> {
    let (t, t_r) = sizes(k, r)?;
    let (k, r, t, t_r) = (k as i64, r as i64, t as i64, t_r as i64);
    Ok(ratio((k - t_r) * (k + t) + t_r * (k + t_r + r - 2), 2 * k * k))
}

/// Average parity read fraction with `m` pairs.
pub fn gamma1_par(k: usize, r: usize, m: usize) -> Result<Ratio> {
    sizes(k, r)?;
    if m == 0 {
        return Err(Error::params("m >= 1"));
    }
    let (k, r, m) = (k as i64, r as i64, m as i64);
    let one = ratio(1, 1);
    let inner = (one.clone() + ratio(1, m)) * ratio(k, 1) + (one - ratio(1, m)) * ratio(r - 1, 1);
    Ok((ratio(2 * k, 1) + ratio(r - 1, 1) * inner) / ratio(2 * k * r, 1))
}
