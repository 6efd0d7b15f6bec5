//! Piggybacked codes as one flat coefficient grid.
//!
//! A code with `n` nodes, `k` systematic nodes and `alpha` substripes stores
//! `n * alpha` symbols. Row `node * alpha + s` of the grid is the functional
//! (length `k * alpha`) giving symbol `s` of `node` in terms of the message.
//! Message coordinate `s * k + i` is the symbol that systematic node `i`
//! stores in substripe `s`.

use std::fmt::Write as _;

use itertools::Itertools;
use rayon::prelude::*;

use crate::algebra::matrix::rank_of_rows;
use crate::algebra::{Field, Mat};
use crate::basecode::{binomial, BaseCode};
use crate::error::{Error, Result};

/// Default cap on exhaustive subset enumeration.
pub const DEFAULT_BOUND: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    field: Field,
    n: usize,
    k: usize,
    alpha: usize,
    mu: usize,
    grid: Mat,
    transforms: Vec<Mat>,
}

/// One piggyback: `coeffs` (length `k * alpha`) is added to symbol
/// `substripe` of `node`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Addition {
    pub substripe: usize,
    pub node: usize,
    pub coeffs: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PiggybackSpec {
    pub alpha: usize,
    pub additions: Vec<Addition>,
}

impl PiggybackSpec {
    pub fn new(alpha: usize) -> PiggybackSpec {
        PiggybackSpec {
            alpha,
            additions: Vec::new(),
        }
    }

    pub fn add(&mut self, node: usize, substripe: usize, coeffs: Vec<u32>) {
        self.additions.push(Addition {
            substripe,
            node,
            coeffs,
        });
    }
}

/// `alpha` copies of a base code. A vector base with `mu` symbols per node
/// fills `mu` consecutive substripes per copy.
pub fn instantiate(base: &dyn BaseCode, instances: usize) -> Result<LinearCode> {
    if instances == 0 {
        return Err(Error::params("need at least one instance"));
    }
    let (k, mu, n) = (base.k(), base.mu(), base.n());
    let alpha = instances * mu;
    let width = k * alpha;
    let mut grid = Mat::zeros(base.field(), n * alpha, width);
    for j in 0..n {
        let rows = base.node_rows(j);
        for t in 0..instances {
            for u in 0..mu {
                let dst = grid.row_mut(j * alpha + t * mu + u);
                for (c, &v) in rows.row(u).iter().enumerate() {
                    // base coordinate i*mu + w is substripe t*mu + w of node i
                    dst[t * k * mu + (c % mu) * k + c / mu] = v;
                }
            }
        }
    }
    let transforms = vec![Mat::identity(base.field(), alpha); n];
    Ok(LinearCode {
        field: base.field(),
        n,
        k,
        alpha,
        mu,
        grid,
        transforms,
    })
}

impl LinearCode {
    /// Build directly from a grid; systematic rows must be unit functionals.
    pub fn from_grid(field: Field, n: usize, k: usize, alpha: usize, mu: usize, grid: Mat) -> Result<LinearCode> {
        if grid.rows() != n * alpha || grid.cols() != k * alpha || grid.field() != field {
            return Err(Error::shape(
                format!("{}x{} grid over {:?}", n * alpha, k * alpha, field),
                format!("{}x{} over {:?}", grid.rows(), grid.cols(), grid.field()),
            ));
        }
        if mu == 0 || !alpha.is_multiple_of(mu) || k == 0 || k > n {
            return Err(Error::params("inconsistent code dimensions"));
        }
        for i in 0..k {
            for s in 0..alpha {
                let row = grid.row(i * alpha + s);
                let c = s * k + i;
                if row.iter().enumerate().any(|(j, &v)| v != u32::from(j == c)) {
                    return Err(Error::params(format!("node {} is not systematic", i + 1)));
                }
            }
        }
        Ok(LinearCode {
            field,
            n,
            k,
            alpha,
            mu,
            grid,
            transforms: vec![Mat::identity(field, alpha); n],
        })
    }

    pub fn field(&self) -> Field {
        self.field
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn r(&self) -> usize {
        self.n - self.k
    }
    pub fn alpha(&self) -> usize {
        self.alpha
    }
    pub fn mu(&self) -> usize {
        self.mu
    }
    /// Message length `k * alpha`.
    pub fn width(&self) -> usize {
        self.k * self.alpha
    }
    pub fn grid(&self) -> &Mat {
        &self.grid
    }
    pub fn transform(&self, node: usize) -> &Mat {
        &self.transforms[node]
    }

    pub fn row(&self, node: usize, substripe: usize) -> &[u32] {
        self.grid.row(node * self.alpha + substripe)
    }

    /// Base-code instance a substripe belongs to.
    pub fn instance_of_sub(&self, s: usize) -> usize {
        s / self.mu
    }

    /// Instance a message coordinate belongs to.
    pub fn instance_of_coord(&self, c: usize) -> usize {
        c / (self.k * self.mu)
    }

    /// Functional of a systematic symbol.
    pub fn coord(&self, node: usize, substripe: usize) -> usize {
        substripe * self.k + node
    }

    pub fn node_rows(&self, node: usize) -> Mat {
        self.grid
            .select_rows(&(node * self.alpha..(node + 1) * self.alpha).collect::<Vec<_>>())
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n {
            return Err(Error::IndexOutOfRange {
                what: "node",
                index: node,
                limit: self.n,
            });
        }
        Ok(())
    }

    /// Add each piggyback to its stored symbol.
    ///
    /// A symbol of a transformed node is traced back through the inverse
    /// transform so triangularity is checked against the original instances.
    pub fn apply_piggyback(&self, spec: &PiggybackSpec) -> Result<LinearCode> {
        if spec.alpha != self.alpha {
            return Err(Error::shape(format!("alpha {}", self.alpha), format!("{}", spec.alpha)));
        }
        let mut out = self.clone();
        for add in &spec.additions {
            self.check_node(add.node)?;
            if add.substripe >= self.alpha {
                return Err(Error::IndexOutOfRange {
                    what: "substripe",
                    index: add.substripe,
                    limit: self.alpha,
                });
            }
            if add.node < self.k {
                return Err(Error::params("piggybacks go on parity nodes only"));
            }
            if add.coeffs.len() != self.width() {
                return Err(Error::shape(
                    format!("{} coefficients", self.width()),
                    format!("{}", add.coeffs.len()),
                ));
            }
            for &v in &add.coeffs {
                self.field.elem(v)?;
            }
            let tinv = self.transforms[add.node].inverse()?;
            let last = add.coeffs.iter().rposition(|&v| v != 0);
            for u in 0..self.alpha {
                if tinv.get(u, add.substripe) == 0 {
                    continue;
                }
                if let Some(c) = last {
                    if self.instance_of_coord(c) >= self.instance_of_sub(u) {
                        return Err(Error::NotTriangular { substripe: u, coord: c });
                    }
                }
            }
            let f = self.field;
            let row = out.grid.row_mut(add.node * self.alpha + add.substripe);
            for (d, &v) in row.iter_mut().zip(&add.coeffs) {
                *d = f.add(*d, v);
            }
        }
        Ok(out)
    }

    /// Replace a parity node's stored vector by `t` times it.
    pub fn apply_node_transform(&self, node: usize, t: &Mat) -> Result<LinearCode> {
        self.check_node(node)?;
        if node < self.k {
            return Err(Error::params("systematic nodes are never transformed"));
        }
        if t.rows() != self.alpha || t.cols() != self.alpha {
            return Err(Error::shape(
                format!("{0}x{0} transform", self.alpha),
                format!("{}x{}", t.rows(), t.cols()),
            ));
        }
        if t.rank() < self.alpha {
            return Err(Error::Singular);
        }
        let new_rows = t.mul(&self.node_rows(node))?;
        let mut out = self.clone();
        for s in 0..self.alpha {
            out.grid.row_mut(node * self.alpha + s).copy_from_slice(new_rows.row(s));
        }
        out.transforms[node] = t.mul(&self.transforms[node])?;
        Ok(out)
    }

    /// True iff the stored symbols of `nodes` determine the whole message.
    /// Indices past `n` are ignored.
    pub fn can_decode(&self, nodes: &[usize]) -> bool {
        let rows: Vec<&[u32]> = nodes
            .iter()
            .filter(|&&j| j < self.n)
            .unique()
            .flat_map(|&j| (0..self.alpha).map(move |s| self.row(j, s)))
            .collect();
        rows.len() >= self.width() && rank_of_rows(self.field, &rows, self.width()) == self.width()
    }

    /// Every k-subset of nodes decodes.
    pub fn verify_mds(&self, bound: u128) -> Result<bool> {
        let count = binomial(self.n, self.k);
        if count > bound {
            return Err(Error::CombinatorialBound { count, bound });
        }
        let sets: Vec<Vec<usize>> = (0..self.n).combinations(self.k).collect();
        Ok(sets.par_iter().all(|s| self.can_decode(s)))
    }

    /// Encode a message of `k * alpha` symbols into `n` node vectors.
    pub fn encode(&self, message: &[u32]) -> Result<Vec<Vec<u32>>> {
        let all = self.grid.mul_vec(message)?;
        Ok(all.chunks(self.alpha).map(|c| c.to_vec()).collect())
    }

    /// Matrix `X` with `message = X * values`, where `values` concatenates the
    /// stored vectors of `nodes` in order.
    pub fn decode_matrix(&self, nodes: &[usize]) -> Result<Mat> {
        for &j in nodes {
            self.check_node(j)?;
        }
        if let Some(d) = nodes.iter().duplicates().next() {
            return Err(Error::DuplicateNode(*d));
        }
        let idx: Vec<usize> = nodes
            .iter()
            .flat_map(|&j| j * self.alpha..(j + 1) * self.alpha)
            .collect();
        let avail = self.grid.select_rows(&idx);
        avail
            .express_rows(&Mat::identity(self.field, self.width()))?
            .ok_or_else(|| Error::Insufficient(format!("nodes {} cannot decode", one_based(nodes))))
    }

    /// Direct solve from the stored vectors of `nodes`.
    pub fn decode(&self, nodes: &[usize], values: &[Vec<u32>]) -> Result<Vec<u32>> {
        if values.len() != nodes.len() || values.iter().any(|v| v.len() != self.alpha) {
            return Err(Error::shape(
                "one alpha-vector per node",
                format!("{} vectors", values.len()),
            ));
        }
        let x = self.decode_matrix(nodes)?;
        x.mul_vec(&values.concat())
    }

    /// Undo node transforms, then recover instances in order, subtracting the
    /// piggybacks of already-decoded instances before each base decode.
    pub fn sequential_decode(&self, nodes: &[usize], values: &[Vec<u32>]) -> Result<Vec<u32>> {
        if values.len() != nodes.len() {
            return Err(Error::shape(
                format!("{} vectors", nodes.len()),
                format!("{}", values.len()),
            ));
        }
        let f = self.field;
        let block = self.k * self.mu;
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for (&j, v) in nodes.iter().zip(values) {
            self.check_node(j)?;
            let tinv = self.transforms[j].inverse()?;
            let orig = tinv.mul(&self.node_rows(j))?;
            let ov = tinv.mul_vec(v)?;
            for (s, &value) in ov.iter().enumerate() {
                rows.push((s, orig.row(s).to_vec()));
                vals.push(value);
            }
        }
        let mut msg = vec![0u32; self.width()];
        for t in 0..self.alpha / self.mu {
            let lo = t * block;
            let hi = lo + block;
            let mut local = Vec::new();
            let mut rhs = Vec::new();
            for ((s, row), &v) in rows.iter().zip(&vals) {
                if self.instance_of_sub(*s) != t {
                    continue;
                }
                if row[hi..].iter().any(|&x| x != 0) {
                    return Err(Error::NotTriangular {
                        substripe: *s,
                        coord: hi + row[hi..].iter().position(|&x| x != 0).unwrap_or(0),
                    });
                }
                let pig = crate::algebra::matrix::dot(f, &row[..lo], &msg[..lo]);
                local.push(row[lo..hi].to_vec());
                rhs.push(f.sub(v, pig));
            }
            let basis = Mat::from_rows(f, &local)?;
            let basis = if local.is_empty() {
                Mat::zeros(f, 0, block)
            } else {
                basis
            };
            let x = basis
                .express_rows(&Mat::identity(f, block))?
                .ok_or_else(|| Error::Insufficient(format!("instance {} is not decodable", t + 1)))?;
            let part = x.mul_vec(&rhs)?;
            msg[lo..hi].copy_from_slice(&part);
        }
        Ok(msg)
    }

    /// One line per stored symbol: 1-based node and substripe, then the
    /// coefficients in fixed-width hex.
    pub fn dump(&self) -> String {
        let width = hex_width(self.field);
        let mut out = String::new();
        for j in 0..self.n {
            for s in 0..self.alpha {
                let _ = write!(out, "{} {}", j + 1, s + 1);
                for &v in self.row(j, s) {
                    let _ = write!(out, " {v:0width$x}");
                }
                out.push('\n');
            }
        }
        out
    }
}

pub(crate) fn one_based(nodes: &[usize]) -> String {
    nodes.iter().map(|j| (j + 1).to_string()).join(",")
}

pub fn hex_width(field: Field) -> usize {
    let bits = 32 - (field.order() - 1).leading_zeros() as usize;
    bits.div_ceil(4).max(1)
}

/// A parsed grid dump: `(node, substripe, coefficients)` with 0-based indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridDump {
    pub rows: Vec<(usize, usize, Vec<u32>)>,
}

/// Parse the output of [`LinearCode::dump`].
pub fn parse_grid(text: &str, field: Field) -> Result<GridDump> {
    let mut rows = Vec::new();
    let mut width = None;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_ascii_whitespace();
        let mut index = |what: &str| -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| Error::format(format!("line {}: missing {what}", ln + 1)))?;
            match tok.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::format(format!("line {}: bad {what} {tok:?}", ln + 1))),
            }
        };
        let node = index("node")?;
        let sub = index("substripe")?;
        let coeffs = it
            .map(|tok| {
                u32::from_str_radix(tok, 16)
                    .ok()
                    .filter(|&v| v < field.order())
                    .ok_or_else(|| Error::format(format!("line {}: bad coefficient {tok:?}", ln + 1)))
            })
            .collect::<Result<Vec<u32>>>()?;
        match width {
            None => width = Some(coeffs.len()),
            Some(w) if w != coeffs.len() => {
                return Err(Error::format(format!("line {}: expected {w} coefficients", ln + 1)));
            }
            _ => {}
        }
        rows.push((node, sub, coeffs));
    }
    Ok(GridDump { rows })
}

/// Every node set that decodes the base code also decodes `code`.
///
/// Decodability is monotone, so only minimal decodable sets of the base are
/// checked. Requires `2^n <= bound`.
pub fn theorem1_check(base: &dyn BaseCode, code: &LinearCode, bound: u128) -> Result<bool> {
    let n = base.n();
    if n != code.n() || base.k() != code.k() {
        return Err(Error::params("base and code parameters differ"));
    }
    let count = 1u128 << n;
    if count > bound || n >= 64 {
        return Err(Error::CombinatorialBound { count, bound });
    }
    let f = base.field();
    let width = base.k() * base.mu();
    let rows: Vec<Mat> = (0..n).map(|j| base.node_rows(j)).collect();
    let decodable: Vec<bool> = (0..1usize << n)
        .into_par_iter()
        .map(|mask| {
            let sel: Vec<&[u32]> = (0..n)
                .filter(|j| mask >> j & 1 == 1)
                .flat_map(|j| (0..base.mu()).map(move |u| (j, u)))
                .map(|(j, u)| rows[j].row(u))
                .collect();
            sel.len() >= width && rank_of_rows(f, &sel, width) == width
        })
        .collect();
    let ok = (0..1usize << n).into_par_iter().all(|mask| {
        if !decodable[mask] {
            return true;
        }
        let minimal = (0..n).all(|j| mask >> j & 1 == 0 || !decodable[mask & !(1 << j)]);
        if !minimal {
            return true;
        }
        let set: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        code.can_decode(&set)
    });
    Ok(ok)
}
