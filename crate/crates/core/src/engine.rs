//! Repair plans, their validation and execution, the parity piggyback pass
//! over free slots, and read-fraction tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use itertools::Itertools;

use crate::algebra::rational::{self, ratio, Ratio};
use crate::algebra::Mat;
use crate::error::{Error, Result};
use crate::framework::{LinearCode, PiggybackSpec};

/// Which symbols a repair reads and how the lost node is rebuilt from them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairPlan {
    pub failed: usize,
    /// `(node, substripe)` pairs, in read order.
    pub reads: Vec<(usize, usize)>,
    /// `alpha x reads.len()`: lost symbols in terms of the read values.
    pub reconstruction: Mat,
}

fn read_rows(code: &LinearCode, reads: &[(usize, usize)]) -> Result<Mat> {
    let mut data = Vec::with_capacity(reads.len() * code.width());
    for &(node, s) in reads {
        if node >= code.n() {
            return Err(Error::IndexOutOfRange {
                what: "node",
                index: node,
                limit: code.n(),
            });
        }
        if s >= code.alpha() {
            return Err(Error::IndexOutOfRange {
                what: "substripe",
                index: s,
                limit: code.alpha(),
            });
        }
        data.extend_from_slice(code.row(node, s));
    }
    Mat::from_vec(code.field(), reads.len(), code.width(), data)
}

impl RepairPlan {
    /// Solve for the reconstruction; fails unless the reads span the lost node.
    pub fn from_reads(code: &LinearCode, failed: usize, reads: Vec<(usize, usize)>) -> Result<RepairPlan> {
        if failed >= code.n() {
            return Err(Error::IndexOutOfRange {
                what: "node",
                index: failed,
                limit: code.n(),
            });
        }
        if reads.iter().any(|&(node, _)| node == failed) {
            return Err(Error::PlanInvalid { node: failed });
        }
        if let Some(&(node, _)) = reads.iter().duplicates().next() {
            return Err(Error::DuplicateNode(node));
        }
        let avail = read_rows(code, &reads)?;
        let reconstruction = avail
            .express_rows(&code.node_rows(failed))?
            .ok_or(Error::PlanInvalid { node: failed })?;
        Ok(RepairPlan {
            failed,
            reads,
            reconstruction,
        })
    }

    /// Symbols read, which equals symbols downloaded.
    pub fn cost(&self) -> usize {
        self.reads.len()
    }

    /// Distinct nodes contacted.
    pub fn locality(&self) -> usize {
        self.nodes().len()
    }

    pub fn nodes(&self) -> BTreeSet<usize> {
        self.reads.iter().map(|r| r.0).collect()
    }

    /// Symbols read from each node, indexed by node.
    pub fn per_node(&self, n: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        for &(node, _) in &self.reads {
            out[node] += 1;
        }
        out
    }

    /// Rebuild the lost symbols from read values given in read order.
    pub fn apply(&self, values: &[u32]) -> Result<Vec<u32>> {
        self.reconstruction.mul_vec(values)
    }
}

/// Indices in range, failed node not read, and `reconstruction * reads`
/// reproduces the lost node's functionals exactly.
pub fn plan_validate(code: &LinearCode, plan: &RepairPlan) -> bool {
    if plan.failed >= code.n() || plan.reads.iter().any(|&(node, _)| node == plan.failed) {
        return false;
    }
    if plan.reconstruction.rows() != code.alpha() || plan.reconstruction.cols() != plan.reads.len() {
        return false;
    }
    let Ok(avail) = read_rows(code, &plan.reads) else {
        return false;
    };
    matches!(plan.reconstruction.mul(&avail), Ok(m) if m == code.node_rows(plan.failed))
}

/// Encode `message`, read the plan's symbols and rebuild the lost node.
pub fn plan_execute(code: &LinearCode, message: &[u32], plan: &RepairPlan) -> Result<Vec<u32>> {
    if !plan_validate(code, plan) {
        return Err(Error::PlanInvalid { node: plan.failed });
    }
    let cw = code.encode(message)?;
    let values: Vec<u32> = plan.reads.iter().map(|&(node, s)| cw[node][s]).collect();
    plan.apply(&values)
}

/// A code together with its repair procedures.
pub trait Repairable: Sync {
    fn code(&self) -> &LinearCode;
    fn repair_plan(&self, node: usize) -> Result<RepairPlan>;
}

/// Parity failure: every systematic symbol. Systematic failure: the other
/// systematic nodes plus the first parity, in full.
pub fn full_download_plan(code: &LinearCode, failed: usize) -> Result<RepairPlan> {
    let k = code.k();
    let helpers: Vec<usize> = if failed < k {
        (0..k).filter(|&i| i != failed).chain([k]).collect()
    } else {
        (0..k).collect()
    };
    let reads = helpers
        .into_iter()
        .flat_map(|h| (0..code.alpha()).map(move |s| (h, s)))
        .collect();
    RepairPlan::from_reads(code, failed, reads)
}

/// Parity symbols never read by any systematic repair, sorted by node then substripe.
pub fn free_slots(code: &LinearCode, sys_reads: &dyn Fn(usize) -> Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let used: BTreeSet<(usize, usize)> = (0..code.k()).flat_map(sys_reads).collect();
    (code.k()..code.n())
        .cartesian_product(0..code.alpha())
        .filter(|slot| !used.contains(slot))
        .collect()
}

/// A free slot of the first parity carrying the other parities of `covered`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cover {
    pub slot: usize,
    pub covered: usize,
}

#[derive(Clone, Debug)]
pub struct ParityPass {
    pub code: LinearCode,
    pub covers: Vec<Cover>,
}

/// Fill free slots of the first parity node with sums of the remaining
/// parities' stored symbols.
///
/// Candidates are the substripes where the first parity is read by some
/// systematic repair. Slots are visited in ascending order and each takes
/// the earliest uncovered candidate whose sum only involves earlier
/// instances.
pub fn parity_piggyback_pass(
    code: &LinearCode,
    sys_reads: &dyn Fn(usize) -> Vec<(usize, usize)>,
) -> Result<ParityPass> {
    let k = code.k();
    let f = code.field();
    if code.r() < 2 {
        return Ok(ParityPass {
            code: code.clone(),
            covers: Vec::new(),
        });
    }
    let free: BTreeSet<usize> = free_slots(code, sys_reads)
        .into_iter()
        .filter(|&(node, _)| node == k)
        .map(|(_, s)| s)
        .collect();
    let candidates: Vec<usize> = (0..code.alpha()).filter(|s| !free.contains(s)).collect();
    let sum_at = |c: usize| -> Vec<u32> {
        let mut acc = vec![0u32; code.width()];
        for j in k + 1..code.n() {
            for (a, &v) in acc.iter_mut().zip(code.row(j, c)) {
                *a = f.add(*a, v);
            }
        }
        acc
    };
    let mut covered = BTreeSet::new();
    let mut covers = Vec::new();
    let mut spec = PiggybackSpec::new(code.alpha());
    for &slot in &free {
        let pick = candidates
            .iter()
            .copied()
            .filter(|c| *c < slot && !covered.contains(c))
            .find_map(|c| {
                let sum = sum_at(c);
                let top = sum.iter().rposition(|&v| v != 0)?;
                (code.instance_of_coord(top) < code.instance_of_sub(slot)).then_some((c, sum))
            });
        if let Some((c, sum)) = pick {
            covered.insert(c);
            covers.push(Cover { slot, covered: c });
            spec.add(k, slot, sum);
        }
    }
    Ok(ParityPass {
        code: code.apply_piggyback(&spec)?,
        covers,
    })
}

/// Repair of a non-first parity using the pass's covers, or a full download
/// when the covers do not suffice.
pub fn covered_parity_plan(code: &LinearCode, covers: &[Cover], failed: usize) -> Result<RepairPlan> {
    let k = code.k();
    if failed <= k || failed >= code.n() || covers.is_empty() {
        return full_download_plan(code, failed);
    }
    let covered: BTreeSet<usize> = covers.iter().map(|c| c.covered).collect();
    let mut reads: Vec<(usize, usize)> = (0..code.alpha())
        .filter(|s| !covered.contains(s))
        .flat_map(|s| (0..k).map(move |i| (i, s)))
        .collect();
    for cover in covers {
        reads.push((k, cover.slot));
        reads.extend((k + 1..code.n()).filter(|&j| j != failed).map(|j| (j, cover.covered)));
    }
    match RepairPlan::from_reads(code, failed, reads) {
        Ok(plan) => Ok(plan),
        Err(Error::PlanInvalid { .. }) => full_download_plan(code, failed),
        Err(e) => Err(e),
    }
}

/// Per-node repair costs and averages as fractions of the message size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaTable {
    pub costs: Vec<usize>,
    pub sys: Ratio,
    pub par: Ratio,
    pub all: Ratio,
}

pub fn measure_gamma(rep: &dyn Repairable) -> Result<GammaTable> {
    let code = rep.code();
    let costs = (0..code.n())
        .map(|j| rep.repair_plan(j).map(|p| p.cost()))
        .collect::<Result<Vec<_>>>()?;
    let msg = code.width() as i64;
    let avg = |range: std::ops::Range<usize>| {
        let total: usize = costs[range.clone()].iter().sum();
        ratio(total as i64, msg * range.len() as i64)
    };
    Ok(GammaTable {
        sys: avg(0..code.k()),
        par: avg(code.k()..code.n()),
        all: avg(0..code.n()),
        costs,
    })
}

/// One line of an analysis sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRow {
    pub n: usize,
    pub k: usize,
    pub design: String,
    pub m: usize,
    pub sys: Ratio,
    pub par: Ratio,
    pub all: Ratio,
}

pub const TABLE_HEADER: &str =
    "n\tk\tdesign\tm\tgamma_sys\tgamma_sys_dec\tgamma_par\tgamma_par_dec\tgamma_all\tgamma_all_dec";

/// Tab-separated table with one header line.
pub fn emit_tables(rows: &[TableRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{}\t{}\t{}\t{}", row.n, row.k, row.design, row.m);
        for g in [&row.sys, &row.par, &row.all] {
            let _ = write!(out, "\t{}\t{}", rational::render(g), rational::render_decimal(g));
        }
        out.push('\n');
    }
    out
}

/// Parse [`emit_tables`] output; decimal columns are checked against the fractions.
pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(TABLE_HEADER) {
        return Err(Error::format("missing table header"));
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim_end().split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::format(format!("row {}: expected 10 columns", ln + 1)));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(format!("row {}: bad integer {s:?}", ln + 1)))
        };
        let frac = |s: &str, dec: &str| {
            let r = rational::parse(s).ok_or_else(|| Error::format(format!("row {}: bad fraction {s:?}", ln + 1)))?;
            if rational::render_decimal(&r) != dec {
                return Err(Error::format(format!(
                    "row {}: decimal {dec:?} disagrees with {s}",
                    ln + 1
                )));
            }
            Ok(r)
        };
        rows.push(TableRow {
            n: int(cols[0])?,
            k: int(cols[1])?,
            design: cols[2].to_string(),
            m: int(cols[3])?,
            sys: frac(cols[4], cols[5])?,
            par: frac(cols[6], cols[7])?,
            all: frac(cols[8], cols[9])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basecode::make_toy_base;
    use crate::framework::instantiate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_plans_on_plain_mds() {
        let code = instantiate(&make_toy_base(), 2).unwrap();
        for j in 0..6 {
            let plan = full_download_plan(&code, j).unwrap();
            assert!(plan_validate(&code, &plan));
            assert_eq!(plan.cost(), 8);
        }
    }

    #[test]
    fn missing_symbol_is_invalid() {
        let code = instantiate(&make_toy_base(), 2).unwrap();
        let mut reads: Vec<_> = (1..5).flat_map(|h| [(h, 0), (h, 1)]).collect();
        reads.pop();
        assert!(matches!(
            RepairPlan::from_reads(&code, 0, reads),
            Err(Error::PlanInvalid { node: 0 })
        ));
        assert!(RepairPlan::from_reads(&code, 0, vec![(0, 0)]).is_err());
    }

    #[test]
    fn validate_catches_wrong_reconstruction() {
        let code = instantiate(&make_toy_base(), 2).unwrap();
        let mut plan = full_download_plan(&code, 5).unwrap();
        assert!(plan_validate(&code, &plan));
        let v = plan.reconstruction.get(0, 0);
        plan.reconstruction.set(0, 0, v ^ 1);
        assert!(!plan_validate(&code, &plan));
    }

    #[test]
    fn execute_matches_encode() {
        let code = instantiate(&make_toy_base(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let plan = full_download_plan(&code, 4).unwrap();
        assert_eq!(plan_execute(&code, &[0; 8], &plan).unwrap(), vec![0, 0]);
        for _ in 0..20 {
            let msg: Vec<u32> = (0..8).map(|_| rng.gen_range(0..256)).collect();
            assert_eq!(plan_execute(&code, &msg, &plan).unwrap(), code.encode(&msg).unwrap()[4]);
        }
    }

    #[test]
    fn fully_read_code_has_no_free_slots() {
        let code = instantiate(&make_toy_base(), 1).unwrap();
        let reads = |i: usize| -> Vec<(usize, usize)> { (0..6).filter(|&h| h != i).map(|h| (h, 0)).collect() };
        assert!(free_slots(&code, &reads).is_empty());
    }

    #[test]
    fn table_roundtrip() {
        let rows = vec![TableRow {
            n: 6,
            k: 4,
            design: "d1".into(),
            m: 2,
            sys: ratio(3, 4),
            par: ratio(29, 32),
            all: ratio(5, 6),
        }];
        let text = emit_tables(&rows);
        assert!(text.contains("\t3/4\t0.750000\t29/32\t0.906250\t"));
        assert_eq!(parse_table(&text).unwrap(), rows);
        assert!(parse_table("nope").is_err());
        let bad = text.replace("0.750000", "0.7");
        assert!(parse_table(&bad).is_err());
    }
}
