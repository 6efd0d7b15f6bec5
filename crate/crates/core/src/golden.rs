//! Worked examples with known layouts and costs, checked symbol by symbol.
//!
//! Layouts are written in a small expression language: `3a3+4a4-b1` is three
//! times node 3's first substripe plus four times node 4's first substripe
//! minus node 1's second substripe. Letters name substripes, numbers name
//! systematic nodes from 1.

use crate::algebra::rational::{ratio, render};
use crate::basecode::{make_cauchy_base, make_gf5_vector_base, make_toy_base, ScalarMDSBase};
use crate::engine::{measure_gamma, plan_validate, Repairable};
use crate::error::{Error, Result};
use crate::framework::{instantiate, LinearCode};
use crate::{design1, design2, design3, paritypatch};

/// Coefficient row of an expression over `code`'s message.
pub fn parse_expr(code: &LinearCode, text: &str) -> Result<Vec<u32>> {
    let f = code.field();
    let mut out = vec![0; code.width()];
    let bytes = text.as_bytes();
    let mut i = 0;
    let skip_ws = |i: &mut usize| {
        while *i < bytes.len() && bytes[*i].is_ascii_whitespace() {
            *i += 1;
        }
    };
    let digits = |i: &mut usize| -> Option<u64> {
        let start = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        text[start..*i].parse().ok()
    };
    skip_ws(&mut i);
    let mut first = true;
    while i < bytes.len() {
        let mut negative = false;
        match bytes[i] {
            b'+' => i += 1,
            b'-' => {
                negative = true;
                i += 1;
            }
            _ if first => {}
            _ => return Err(Error::format(format!("expected + or - at offset {i} in {text:?}"))),
        }
        first = false;
        skip_ws(&mut i);
        let coeff = digits(&mut i).unwrap_or(1);
        let letter = *bytes
            .get(i)
            .filter(|b| b.is_ascii_lowercase())
            .ok_or_else(|| Error::format(format!("expected a substripe letter at offset {i} in {text:?}")))?;
        i += 1;
        let node = digits(&mut i).ok_or_else(|| Error::format(format!("missing node number in {text:?}")))? as usize;
        let sub = (letter - b'a') as usize;
        if node == 0 || node > code.k() || sub >= code.alpha() {
            return Err(Error::format(format!(
                "term {}{node} is outside the code",
                letter as char
            )));
        }
        let mut c = f.from_int(coeff)?;
        if negative {
            c = f.neg(c);
        }
        let idx = code.coord(node - 1, sub);
        out[idx] = f.add(out[idx], c);
        skip_ws(&mut i);
    }
    Ok(out)
}

/// One worked example and what went wrong with it, if anything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenResult {
    pub name: &'static str,
    pub failures: Vec<String>,
}

impl GoldenResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Checker {
    failures: Vec<String>,
}

impl Checker {
    fn new() -> Checker {
        Checker { failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn run<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(format!("{what}: {e}"));
                None
            }
        }
    }

    /// Node `node` (from 1) stores exactly `exprs`.
    fn rows(&mut self, code: &LinearCode, node: usize, exprs: &[&str]) {
        for (s, e) in exprs.iter().enumerate() {
            if let Some(want) = self.run(e, parse_expr(code, e)) {
                self.check(code.row(node - 1, s) == want.as_slice(), || {
                    format!("node {node} substripe {} is not {e}", s + 1)
                });
            }
        }
    }

    /// What node `node` stores beyond `plain` is exactly `exprs`.
    fn piggybacks(&mut self, code: &LinearCode, plain: &LinearCode, node: usize, exprs: &[&str]) {
        let f = code.field();
        for (s, e) in exprs.iter().enumerate() {
            let Some(want) = self.run(e, parse_expr(code, e)) else {
                continue;
            };
            let got: Vec<u32> = code
                .row(node - 1, s)
                .iter()
                .zip(plain.row(node - 1, s))
                .map(|(&a, &b)| f.sub(a, b))
                .collect();
            self.check(got == want, || {
                format!("node {node} substripe {} piggyback is not {e:?}", s + 1)
            });
        }
    }

    fn costs(&mut self, rep: &dyn Repairable, nodes: &[usize], want: &[usize]) {
        for (&node, &w) in nodes.iter().zip(want) {
            match rep.repair_plan(node - 1) {
                Ok(plan) => {
                    self.check(plan.cost() == w, || {
                        format!("node {node} costs {}, expected {w}", plan.cost())
                    });
                    self.check(plan_validate(rep.code(), &plan), || {
                        format!("node {node} plan does not validate")
                    });
                }
                Err(e) => self.failures.push(format!("node {node}: {e}")),
            }
        }
    }

    fn finish(self, name: &'static str) -> GoldenResult {
        GoldenResult {
            name,
            failures: self.failures,
        }
    }
}

fn toy_one_pair() -> GoldenResult {
    let mut c = Checker::new();
    if let Some(d) = c.run("build", design1::construct(&make_toy_base(), 1)) {
        let code = d.code();
        for i in 1..=4 {
            c.rows(code, i, &[&format!("a{i}"), &format!("b{i}")]);
        }
        c.rows(code, 5, &["a1+a2+a3+a4", "b1+b2+b3+b4"]);
        c.rows(code, 6, &["3a3+4a4-b1-2b2-3b3-4b4", "b1+2b2+3b3+4b4+a1+2a2"]);
        c.costs(&d, &[1, 2, 3, 4], &[6, 6, 6, 6]);
        if let Some(plan) = c.run("plan", d.repair_plan(0)) {
            c.check(plan.reads.contains(&(5, 1)), || {
                "node 1 does not read node 6's second symbol".into()
            });
        }
        if let Some(plan) = c.run("plan", d.repair_plan(2)) {
            c.check(plan.reads.contains(&(5, 0)), || {
                "node 3 does not read node 6's first symbol".into()
            });
        }
        if let Some(g) = c.run("gamma", measure_gamma(&d)) {
            c.check(g.sys == ratio(3, 4), || {
                format!("systematic fraction {}", render(&g.sys))
            });
        }
        c.check(code.verify_mds(1 << 20).unwrap_or(false), || "not MDS".into());
    }
    c.finish("(6,4) design 1, one pair")
}

fn toy_two_pairs() -> GoldenResult {
    let mut c = Checker::new();
    if let Some(d) = c.run("build", design1::construct(&make_toy_base(), 2)) {
        let code = d.code();
        c.rows(
            code,
            5,
            &[
                "a1+a2+a3+a4",
                "b1+b2+b3+b4",
                "c1+c2+c3+c4+b1+2b2+3b3+4b4+a1+2a2",
                "d1+d2+d3+d4",
            ],
        );
        c.rows(
            code,
            6,
            &[
                "3a3+4a4-b1-2b2-3b3-4b4",
                "b1+2b2+3b3+4b4+a1+2a2",
                "3c3+4c4-d1-2d2-3d3-4d4",
                "d1+2d2+3d3+4d4+c1+2c2",
            ],
        );
        c.costs(&d, &[5, 6], &[16, 13]);
        c.costs(&d, &[1, 2, 3, 4], &[12, 12, 12, 12]);
        if let Some(g) = c.run("gamma", measure_gamma(&d)) {
            c.check(g.par == ratio(29, 32), || format!("parity fraction {}", render(&g.par)));
            if let Some(formula) = c.run("formula", design1::gamma1_par(4, 2, 2)) {
                c.check(g.par == formula, || {
                    "parity fraction differs from the closed form".into()
                });
            }
        }
        c.check(code.verify_mds(1 << 20).unwrap_or(false), || "not MDS".into());
    }
    c.finish("(6,4) design 1, two pairs with parity piggyback")
}

fn cauchy(k: usize, r: usize) -> Result<ScalarMDSBase> {
    make_cauchy_base(crate::algebra::Field::gf256(), k, r)
}

fn d2_13_10() -> GoldenResult {
    let mut c = Checker::new();
    let Some(base) = c.run("base", cauchy(10, 3)) else {
        return c.finish("(13,10) design 2");
    };
    if let Some(d) = c.run("build", design2::construct(&base, 1)) {
        let code = d.code();
        c.check(code.alpha() == 3, || "expected three substripes".into());
        c.costs(&d, &(1..=10).collect::<Vec<_>>(), &[20; 10]);
        if let Some(g) = c.run("gamma", measure_gamma(&d)) {
            c.check(g.sys == ratio(20, 30), || {
                format!("systematic fraction {}", render(&g.sys))
            });
        }
        // second symbol of nodes 12 and 13: v.b - p.c, with v on one set only
        for (node, par) in [(12, 1), (13, 2)] {
            let p = base.parity(par);
            let row = code.row(node - 1, 1);
            let f = code.field();
            c.check(row[..10].iter().all(|&v| v == 0), || {
                format!("node {node} substripe 2 still has a terms")
            });
            c.check((0..10).all(|x| row[20 + x] == f.neg(p[x])), || {
                format!("node {node} substripe 2 is not v.b - p.c")
            });
            let own = d.sets()[par - 1].clone();
            c.check((0..10).all(|x| (row[10 + x] != 0) == own.contains(&x)), || {
                format!("node {node} substripe 2 touches b outside its set")
            });
        }
        // third symbols of nodes 12 and 13 cover complementary sets
        let support = |node: usize| -> Vec<usize> { (0..10).filter(|&x| code.row(node - 1, 2)[x] != 0).collect() };
        let (s12, s13) = (support(12), support(13));
        c.check(
            s12.len() + s13.len() == 10 && s12.iter().all(|x| !s13.contains(x)),
            || "third-substripe piggybacks do not split the systematic nodes".into(),
        );
        c.check(code.verify_mds(1 << 20).unwrap_or(false), || "not MDS".into());
    }
    c.finish("(13,10) design 2")
}

fn d3_11_8() -> GoldenResult {
    let mut c = Checker::new();
    let Some(base) = c.run("base", cauchy(8, 3)) else {
        return c.finish("(11,8) design 3");
    };
    if let (Some(d), Some(plain)) = (
        c.run("build", design3::construct(&base, 2)),
        c.run("plain", instantiate(&base, 4)),
    ) {
        let code = d.code();
        c.piggybacks(code, &plain, 9, &["", "", "", ""]);
        c.piggybacks(code, &plain, 10, &["", "a1+a2", "b5+b6", "c1+c2"]);
        c.piggybacks(code, &plain, 11, &["", "a3+a4", "b7+b8", "c3+c4"]);
        c.costs(&d, &(1..=8).collect::<Vec<_>>(), &[20, 20, 20, 20, 26, 26, 26, 26]);
        if let Some(g) = c.run("gamma", design3::gamma3_sys_measured(8, 3, 2)) {
            c.check(g == ratio(23, 32), || format!("systematic fraction {}", render(&g)));
        }
        c.check(code.verify_mds(1 << 20).unwrap_or(false), || "not MDS".into());
    }
    c.finish("(11,8) design 3, one level")
}

fn d3_13_10() -> GoldenResult {
    let mut c = Checker::new();
    let Some(base) = c.run("base", cauchy(10, 3)) else {
        return c.finish("(13,10) design 3");
    };
    if let (Some(d), Some(plain)) = (
        c.run("build", design3::construct(&base, 2)),
        c.run("plain", instantiate(&base, 8)),
    ) {
        let code = d.code();
        c.piggybacks(
            code,
            &plain,
            11,
            &["", "", "", "", "a9+a10", "b9+b10", "c9+c10", "d9+d10"],
        );
        c.piggybacks(
            code,
            &plain,
            12,
            &["", "a1+a2", "b5+b6", "c1+c2", "", "e1+e2", "f5+f6", "g1+g2"],
        );
        c.piggybacks(
            code,
            &plain,
            13,
            &["", "a3+a4", "b7+b8", "c3+c4", "", "e3+e4", "f7+f8", "g3+g4"],
        );
        c.costs(
            &d,
            &(1..=10).collect::<Vec<_>>(),
            &[48, 48, 48, 48, 64, 64, 64, 64, 48, 48],
        );
        for node in 0..10 {
            if let Ok(plan) = d.repair_plan(node) {
                c.check(plan.locality() <= 11, || {
                    format!("node {} contacts {} nodes", node + 1, plan.locality())
                });
            }
        }
        if let Some(g) = c.run("gamma", design3::gamma3_sys_measured(10, 3, 2)) {
            c.check(g == ratio(544, 800), || format!("systematic fraction {}", render(&g)));
        }
        c.check(code.verify_mds(1 << 20).unwrap_or(false), || "not MDS".into());
    }
    c.finish("(13,10) design 3, two levels")
}

fn gf5_patch() -> GoldenResult {
    let mut c = Checker::new();
    let base = make_gf5_vector_base();
    if let Some(pp) = c.run("build", paritypatch::pp_construct(&base)) {
        let code = pp.code();
        c.rows(code, 1, &["a1", "b1", "c1", "d1"]);
        c.rows(code, 2, &["a2", "b2", "c2", "d2"]);
        c.rows(
            code,
            3,
            &[
                "3a1+2b1+a2",
                "b1+2a2+3b2",
                "3c1+2d1+c2+3a1+4b1+2a2",
                "d1+2c2+3d2+b1+2a2+b2",
            ],
        );
        c.rows(code, 4, &["3a1+4b1+2a2", "b1+2a2+b2", "3c1+4d1+2c2", "d1+2c2+d2"]);
        c.costs(&pp, &[1, 2, 3, 4], &[6, 6, 8, 6]);
        if let Some(plan) = c.run("plan", pp.repair_plan(3)) {
            let mut reads = plan.reads.clone();
            reads.sort_unstable();
            c.check(reads == [(0, 2), (0, 3), (1, 2), (1, 3), (2, 2), (2, 3)], || {
                format!("node 4 reads {reads:?}")
            });
        }
        for i in 0..2 {
            if let Some(plan) = c.run("plan", pp.repair_plan(i)) {
                let per_instance = plan.reads.iter().filter(|r| r.1 < 2).count();
                c.check(per_instance == 3, || {
                    format!("node {} reads {per_instance} symbols in instance 1", i + 1)
                });
            }
        }
        if let Some(g) = c.run("gamma", measure_gamma(&pp)) {
            c.check(g.par == ratio(7, 8), || format!("parity fraction {}", render(&g.par)));
        }
        c.check(code.verify_mds(1 << 20).unwrap_or(false), || "not MDS".into());
    }
    c.finish("(4,2) GF(5) parity patch")
}

/// Every worked example, in order.
pub fn selftest() -> Vec<GoldenResult> {
    vec![
        toy_one_pair(),
        toy_two_pairs(),
        d2_13_10(),
        d3_11_8(),
        d3_13_10(),
        gf5_patch(),
    ]
}

/// `PASS 6/6 golden examples`, or `FAIL` with the count that passed.
pub fn summary(results: &[GoldenResult]) -> String {
    let passed = results.iter().filter(|r| r.passed()).count();
    let verdict = if passed == results.len() { "PASS" } else { "FAIL" };
    format!("{verdict} {passed}/{} golden examples", results.len())
}
