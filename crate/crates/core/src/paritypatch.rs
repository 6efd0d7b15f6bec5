//! Cheaper parity repair for vector codes whose parities help systematic
//! repair with the same selections as the systematic nodes.
//!
//! Parities are grouped; in the second instance the first parity of each group
//! also stores the first-instance symbols of the rest of its group.

use std::ops::Range;

use crate::algebra::rational::{ratio, Ratio};
use crate::algebra::Mat;
use crate::basecode::{BaseCode, VectorLinearBase};
use crate::design1::contiguous;
use crate::engine::{full_download_plan, RepairPlan, Repairable};
use crate::error::{Error, Result};
use crate::framework::{instantiate, LinearCode, PiggybackSpec};

/// Parity indices `0..r` split into `g` contiguous groups, larger first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityGroups {
    pub g: usize,
    pub groups: Vec<Range<usize>>,
}

impl ParityGroups {
    /// `g` is the largest integer with `g^2 (k + 1) <= r^2`, at least 1.
    pub fn new(k: usize, r: usize) -> Result<ParityGroups> {
        if k == 0 || r == 0 {
            return Err(Error::params("parity groups need k >= 1 and r >= 1"));
        }
        let g = group_count(k, r);
        let sizes: Vec<usize> = (0..g).map(|i| r / g + usize::from(i < r % g)).collect();
        Ok(ParityGroups {
            g,
            groups: contiguous(&sizes),
        })
    }

    pub fn group_of(&self, j: usize) -> &Range<usize> {
        self.groups.iter().find(|g| g.contains(&j)).expect("parity index")
    }
}

fn group_count(k: usize, r: usize) -> usize {
    let mut g = 1;
    while (g + 1) * (g + 1) * (k + 1) <= r * r {
        g += 1;
    }
    g
}

/// Whether `R Q_x^(i) = Q_y^(i) S` for every systematic `i`.
pub fn lemma_check(base: &VectorLinearBase, x: usize, y: usize, r: &Mat, s: &Mat) -> Result<bool> {
    let (k, nr) = (base.k(), base.r());
    for (what, idx) in [("parity", x), ("parity", y)] {
        if idx >= nr {
            return Err(Error::IndexOutOfRange {
                what,
                index: idx,
                limit: nr,
            });
        }
    }
    for i in 0..k {
        let left = r.mul(base.parity_q(x, i))?;
        let right = base.parity_q(y, i).mul(s)?;
        if left != right {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub struct ParityPatch {
    code: LinearCode,
    groups: ParityGroups,
    base_reads: Vec<Vec<(usize, usize)>>,
}

/// Two instances of `base` with the group piggybacks on the second.
pub fn pp_construct(base: &VectorLinearBase) -> Result<ParityPatch> {
    let (k, r, mu) = (base.k(), base.r(), base.mu());
    if !base.is_common_q() {
        return Err(Error::LemmaPrecondition(
            "parities must use the systematic repair matrices".into(),
        ));
    }
    let groups = ParityGroups::new(k, r)?;
    let code = instantiate(base, 2)?;
    let mut spec = PiggybackSpec::new(2 * mu);
    for group in &groups.groups {
        let first = group.start;
        for u in 0..mu {
            let mut coeffs = vec![0; code.width()];
            let mut any = false;
            for y in group.clone().skip(1) {
                let f = code.field();
                for (c, &v) in code.row(k + y, u).iter().enumerate() {
                    coeffs[c] = f.add(coeffs[c], v);
                }
                any = true;
            }
            if any {
                spec.add(k + first, mu + u, coeffs);
            }
        }
    }
    let code = code.apply_piggyback(&spec)?;
    let base_reads = (0..k).map(|i| base.repair_reads(i)).collect();
    Ok(ParityPatch {
        code,
        groups,
        base_reads,
    })
}

/// Adds `a^T P_y R` from the first instance to parity `x` in the second,
/// provided `(R, S)` witnesses the repair-matrix identity.
pub fn pp_lemma_piggyback(
    base: &VectorLinearBase,
    code: &LinearCode,
    x: usize,
    y: usize,
    r: &Mat,
    s: &Mat,
) -> Result<LinearCode> {
    if !lemma_check(base, x, y, r, s)? {
        return Err(Error::LemmaPrecondition(format!(
            "no witness for parities {} and {}",
            x + 1,
            y + 1
        )));
    }
    let (k, mu, f) = (base.k(), base.mu(), base.field());
    if r.rows() != mu || r.cols() != mu {
        return Err(Error::shape(format!("{mu}x{mu}"), format!("{}x{}", r.rows(), r.cols())));
    }
    let mut spec = PiggybackSpec::new(code.alpha());
    for u in 0..mu {
        let mut coeffs = vec![0; code.width()];
        for w in 0..mu {
            let factor = r.get(w, u);
            for (c, &v) in code.row(k + y, w).iter().enumerate() {
                coeffs[c] = f.add(coeffs[c], f.mul(factor, v));
            }
        }
        spec.add(k + x, mu + u, coeffs);
    }
    code.apply_piggyback(&spec)
}

impl ParityPatch {
    pub fn groups(&self) -> &ParityGroups {
        &self.groups
    }

    fn sys_reads(&self, i: usize) -> Vec<(usize, usize)> {
        let mu = self.code.mu();
        (0..2)
            .flat_map(|t| self.base_reads[i].iter().map(move |&(h, u)| (h, t * mu + u)))
            .collect()
    }

    fn parity_reads(&self, j: usize) -> Option<Vec<(usize, usize)>> {
        let (k, mu) = (self.code.k(), self.code.mu());
        let group = self.groups.group_of(j);
        if j == group.start {
            return None;
        }
        let mut reads: Vec<(usize, usize)> = (0..k).flat_map(|i| (mu..2 * mu).map(move |u| (i, u))).collect();
        reads.extend((mu..2 * mu).map(|u| (k + group.start, u)));
        for z in group.clone().skip(1).filter(|&z| z != j) {
            reads.extend((0..mu).map(|u| (k + z, u)));
        }
        Some(reads)
    }
}

impl Repairable for ParityPatch {
    fn code(&self) -> &LinearCode {
        &self.code
    }

    fn repair_plan(&self, node: usize) -> Result<RepairPlan> {
        let k = self.code.k();
        if node < k {
            return RepairPlan::from_reads(&self.code, node, self.sys_reads(node));
        }
        if node >= self.code.n() {
            return Err(Error::IndexOutOfRange {
                what: "node",
                index: node,
                limit: self.code.n(),
            });
        }
        match self.parity_reads(node - k) {
            Some(reads) => RepairPlan::from_reads(&self.code, node, reads),
            None => full_download_plan(&self.code, node),
        }
    }
}

/// Average parity read fraction assuming `g` equal groups of `r / g`.
pub fn pp_avg_parity_read(k: usize, r: usize) -> Result<Ratio> {
    if k == 0 || r < 2 {
        return Err(Error::params("need k >= 1 and r >= 2"));
    }
    let g = group_count(k, r) as i64;
    let (k, r) = (k as i64, r as i64);
    let rho = ratio(r, g);
    let one = ratio(1, 1);
    let dev = rho.clone() - one;
    Ok(ratio(1, 2) + (ratio(k, 1) + dev.clone() * dev) / (ratio(2 * k, 1) * rho))
}
