//! Systematic MDS base codes: scalar codes given by parity vectors, and vector
//! codes given by parity matrices with per-node repair matrices.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{cauchy_matrix, Field, Mat};
use crate::error::{Error, Result};

/// Anything that can be instantiated as piggybacking input.
pub trait BaseCode: Sync {
    fn field(&self) -> Field;
    fn k(&self) -> usize;
    fn r(&self) -> usize;
    /// Symbols per node per instance.
    fn mu(&self) -> usize;
    /// The `mu` functionals (length `k * mu`) stored by `node` in one instance.
    fn node_rows(&self, node: usize) -> Mat;

    fn n(&self) -> usize {
        self.k() + self.r()
    }

    /// Node reads, as `(node, symbol within instance)`, for repairing systematic node `i`.
    fn repair_reads(&self, i: usize) -> Vec<(usize, usize)> {
        full_repair_reads(self.k(), self.mu(), self.n() - 1, i)
    }
}

/// Read every symbol of the other systematic nodes and of `helper`.
pub fn full_repair_reads(k: usize, mu: usize, helper: usize, failed: usize) -> Vec<(usize, usize)> {
    (0..k)
        .filter(|&h| h != failed)
        .chain(std::iter::once(helper))
        .flat_map(|h| (0..mu).map(move |u| (h, u)))
        .collect()
}

/// Exhaustive node-MDS check: every k-subset of nodes decodes one instance.
pub fn is_node_mds(base: &dyn BaseCode) -> bool {
    let rows: Vec<Mat> = (0..base.n()).map(|j| base.node_rows(j)).collect();
    let full = base.k() * base.mu();
    (0..base.n()).combinations(base.k()).all(|set| {
        let mut stack = Vec::with_capacity(full * full);
        for &j in &set {
            stack.extend_from_slice(rows[j].data());
        }
        Mat::from_vec(base.field(), full, full, stack)
            .map(|m| m.rank() == full)
            .unwrap_or(false)
    })
}

/// Scalar systematic MDS code: parity `j` stores `p_j · a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarMDSBase {
    field: Field,
    k: usize,
    r: usize,
    parities: Vec<Vec<u32>>,
}

impl ScalarMDSBase {
    /// Validates shape, nonzero parity entries and (exhaustively) the MDS property.
    pub fn new(field: Field, k: usize, parities: Vec<Vec<u32>>) -> Result<ScalarMDSBase> {
        let r = parities.len();
        if k == 0 || r == 0 {
            return Err(Error::params("base code needs k >= 1 and r >= 1"));
        }
        for p in &parities {
            if p.len() != k {
                return Err(Error::shape(format!("parity of length {k}"), format!("{}", p.len())));
            }
            for &v in p {
                field.elem(v)?;
                if v == 0 {
                    return Err(Error::params("parity vectors must have nonzero entries"));
                }
            }
        }
        let base = ScalarMDSBase { field, k, r, parities };
        if !is_node_mds(&base) {
            return Err(Error::params("parity vectors do not give an MDS code"));
        }
        Ok(base)
    }

    pub fn parity(&self, j: usize) -> &[u32] {
        &self.parities[j]
    }

    pub fn parities(&self) -> &[Vec<u32>] {
        &self.parities
    }

    /// `n x k` generator: identity stacked on the parity vectors.
    pub fn generator(&self) -> Mat {
        let mut g = Mat::zeros(self.field, self.n(), self.k);
        for i in 0..self.k {
            g.set(i, i, 1);
        }
        for (j, p) in self.parities.iter().enumerate() {
            g.row_mut(self.k + j).copy_from_slice(p);
        }
        g
    }

    pub fn encode(&self, message: &[u32]) -> Result<Vec<u32>> {
        if message.len() != self.k {
            return Err(Error::shape(
                format!("{} message symbols", self.k),
                format!("{}", message.len()),
            ));
        }
        for &m in message {
            self.field.elem(m)?;
        }
        self.generator().mul_vec(message)
    }

    /// Recover the message from at least `k` symbols on distinct nodes.
    pub fn decode(&self, symbols: &[(usize, u32)]) -> Result<Vec<u32>> {
        let mut seen = vec![false; self.n()];
        for &(node, v) in symbols {
            if node >= self.n() {
                return Err(Error::IndexOutOfRange {
                    what: "node",
                    index: node,
                    limit: self.n(),
                });
            }
            if std::mem::replace(&mut seen[node], true) {
                return Err(Error::DuplicateNode(node));
            }
            self.field.elem(v)?;
        }
        if symbols.len() < self.k {
            return Err(Error::TooFewSymbols {
                needed: self.k,
                got: symbols.len(),
            });
        }
        let used = &symbols[..self.k];
        let g = self.generator();
        let a = g.select_rows(&used.iter().map(|s| s.0).collect::<Vec<_>>());
        let rhs = Mat::from_vec(self.field, self.k, 1, used.iter().map(|s| s.1).collect())?;
        Ok(a.solve(&rhs)?.data().to_vec())
    }
}

impl BaseCode for ScalarMDSBase {
    fn field(&self) -> Field {
        self.field
    }
    fn k(&self) -> usize {
        self.k
    }
    fn r(&self) -> usize {
        self.r
    }
    fn mu(&self) -> usize {
        1
    }
    fn node_rows(&self, node: usize) -> Mat {
        let mut m = Mat::zeros(self.field, 1, self.k);
        if node < self.k {
            m.set(0, node, 1);
        } else {
            m.row_mut(0).copy_from_slice(&self.parities[node - self.k]);
        }
        m
    }
}

/// Cauchy parities on canonical points `y_i = i`, `x_j = k + j`.
pub fn make_cauchy_base(field: Field, k: usize, r: usize) -> Result<ScalarMDSBase> {
    make_cauchy_base_seeded(field, k, r, 0)
}

/// Cauchy parities; a nonzero seed draws the evaluation points at random.
pub fn make_cauchy_base_seeded(field: Field, k: usize, r: usize, seed: u64) -> Result<ScalarMDSBase> {
    let n = k + r;
    if k == 0 || r == 0 {
        return Err(Error::params("base code needs k >= 1 and r >= 1"));
    }
    if n as u64 > field.order() as u64 {
        return Err(Error::FieldTooSmall {
            needed: n,
            order: field.order(),
        });
    }
    let points: Vec<u32> = if seed == 0 {
        (0..n as u32).collect()
    } else {
        let mut all: Vec<u32> = (0..field.order()).collect();
        all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        all.truncate(n);
        all
    };
    let (ys, xs) = points.split_at(k);
    let c = cauchy_matrix(field, xs, ys)?;
    let parities = (0..r).map(|j| c.row(j).to_vec()).collect();
    // Cauchy structure makes this MDS; `new` still checks when cheap enough.
    if binomial(n, k) <= 1 << 14 {
        ScalarMDSBase::new(field, k, parities)
    } else {
        Ok(ScalarMDSBase { field, k, r, parities })
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// The (6,4) code with parities `(1,1,1,1)` and `(1,2,3,4)` over GF(2^8).
pub fn make_toy_base() -> ScalarMDSBase {
    ScalarMDSBase::new(Field::gf256(), 4, vec![vec![1, 1, 1, 1], vec![1, 2, 3, 4]])
        .expect("the (6,4) example code is MDS over GF(2^8)")
}

/// Vector code: parity `j` stores `a^T P_j`; when systematic node `i` fails,
/// every helper passes its symbols times a selection matrix.
#[derive(Clone, Debug)]
pub struct VectorLinearBase {
    field: Field,
    k: usize,
    mu: usize,
    p: Vec<Mat>,
    sys_q: Vec<Mat>,
    parity_q: Vec<Vec<Mat>>,
}

fn selected_rows(q: &Mat) -> Result<Vec<usize>> {
    (0..q.cols())
        .map(|c| {
            let nz: Vec<usize> = (0..q.rows()).filter(|&r| q.get(r, c) != 0).collect();
            match nz.as_slice() {
                [r] if q.get(*r, c) == 1 => Ok(*r),
                _ => Err(Error::params("repair matrices must select single symbols")),
            }
        })
        .collect()
}

impl VectorLinearBase {
    /// `p[j]` is `(k mu) x mu`; `sys_q[i]` is used by systematic helpers and
    /// `parity_q[j][i]` by parity `j` when node `i` fails.
    pub fn new(
        field: Field,
        k: usize,
        mu: usize,
        p: Vec<Mat>,
        sys_q: Vec<Mat>,
        parity_q: Vec<Vec<Mat>>,
    ) -> Result<VectorLinearBase> {
        if k == 0 || mu == 0 || p.is_empty() {
            return Err(Error::params("vector base needs k, mu, r >= 1"));
        }
        for pj in &p {
            if pj.rows() != k * mu || pj.cols() != mu {
                return Err(Error::shape(
                    format!("{}x{} parity matrix", k * mu, mu),
                    format!("{}x{}", pj.rows(), pj.cols()),
                ));
            }
        }
        if sys_q.len() != k || parity_q.len() != p.len() || parity_q.iter().any(|q| q.len() != k) {
            return Err(Error::params("one repair matrix per systematic node and helper"));
        }
        for q in sys_q.iter().chain(parity_q.iter().flatten()) {
            if q.rows() != mu {
                return Err(Error::shape(
                    format!("{mu} repair-matrix rows"),
                    format!("{}", q.rows()),
                ));
            }
            selected_rows(q)?;
        }
        let base = VectorLinearBase {
            field,
            k,
            mu,
            p,
            sys_q,
            parity_q,
        };
        if !is_node_mds(&base) {
            return Err(Error::params("vector base is not node-MDS"));
        }
        for i in 0..k {
            let reads = base.q_reads(i);
            if !reads_span_node(&base, &reads, i) {
                return Err(Error::PlanInvalid { node: i });
            }
        }
        Ok(base)
    }

    /// View a scalar code as a vector code with `mu = 1` and `Q = [1]`.
    pub fn from_scalar(base: &ScalarMDSBase) -> VectorLinearBase {
        let f = base.field;
        let one = Mat::identity(f, 1);
        VectorLinearBase {
            field: f,
            k: base.k,
            mu: 1,
            p: base
                .parities
                .iter()
                .map(|p| Mat::from_vec(f, base.k, 1, p.clone()).expect("k entries"))
                .collect(),
            sys_q: vec![one.clone(); base.k],
            parity_q: vec![vec![one; base.k]; base.r],
        }
    }

    pub fn parity_matrix(&self, j: usize) -> &Mat {
        &self.p[j]
    }

    pub fn sys_q(&self, i: usize) -> &Mat {
        &self.sys_q[i]
    }

    pub fn parity_q(&self, j: usize, i: usize) -> &Mat {
        &self.parity_q[j][i]
    }

    /// True when every parity uses the same repair matrix as the systematic helpers.
    pub fn is_common_q(&self) -> bool {
        (0..self.k).all(|i| self.parity_q.iter().all(|qj| qj[i] == self.sys_q[i]))
    }

    /// Reads of the repair-by-transfer plan driven by the Q matrices.
    pub fn q_reads(&self, i: usize) -> Vec<(usize, usize)> {
        let mut reads = Vec::new();
        for h in 0..self.n() {
            if h == i {
                continue;
            }
            let q = if h < self.k {
                &self.sys_q[i]
            } else {
                &self.parity_q[h - self.k][i]
            };
            for u in selected_rows(q).expect("validated") {
                reads.push((h, u));
            }
        }
        reads
    }

    pub fn encode(&self, message: &[u32]) -> Result<Vec<Vec<u32>>> {
        let km = self.k * self.mu;
        if message.len() != km {
            return Err(Error::shape(
                format!("{km} message symbols"),
                format!("{}", message.len()),
            ));
        }
        (0..self.n()).map(|j| self.node_rows(j).mul_vec(message)).collect()
    }
}

fn reads_span_node(base: &dyn BaseCode, reads: &[(usize, usize)], node: usize) -> bool {
    let f = base.field();
    let cols = base.k() * base.mu();
    let mut data = Vec::new();
    for &(h, u) in reads {
        data.extend_from_slice(base.node_rows(h).row(u));
    }
    let Ok(avail) = Mat::from_vec(f, reads.len(), cols, data) else {
        return false;
    };
    matches!(avail.express_rows(&base.node_rows(node)), Ok(Some(_)))
}

impl BaseCode for VectorLinearBase {
    fn field(&self) -> Field {
        self.field
    }
    fn k(&self) -> usize {
        self.k
    }
    fn r(&self) -> usize {
        self.p.len()
    }
    fn mu(&self) -> usize {
        self.mu
    }
    fn node_rows(&self, node: usize) -> Mat {
        if node < self.k {
            let mut m = Mat::zeros(self.field, self.mu, self.k * self.mu);
            for u in 0..self.mu {
                m.set(u, node * self.mu + u, 1);
            }
            m
        } else {
            self.p[node - self.k].transpose()
        }
    }
    /// The cheaper of the Q-matrix plan and a full download; ties keep the Q plan.
    fn repair_reads(&self, i: usize) -> Vec<(usize, usize)> {
        let q = self.q_reads(i);
        if q.len() <= self.k * self.mu {
            q
        } else {
            full_repair_reads(self.k, self.mu, self.n() - 1, i)
        }
    }
}

fn column_mat(f: Field, cols: &[[u32; 4]]) -> Mat {
    let mut m = Mat::zeros(f, 4, cols.len());
    for (c, col) in cols.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            m.set(r, c, v);
        }
    }
    m
}

/// The (4,2) vector code over GF(5) with two symbols per node.
///
/// Message order is `(a1, b1, a2, b2)`; node 1 holds `(a1, b1)`.
pub fn make_gf5_vector_base() -> VectorLinearBase {
    let f = Field::prime(5).expect("5 is prime");
    let p3 = column_mat(f, &[[3, 2, 1, 0], [0, 1, 2, 3]]);
    let p4 = column_mat(f, &[[3, 4, 2, 0], [0, 1, 2, 1]]);
    let e1 = Mat::from_rows(f, &[[1], [0]]).expect("2x1");
    let e2 = Mat::from_rows(f, &[[0], [1]]).expect("2x1");
    let q = vec![e1, e2];
    VectorLinearBase::new(f, 2, 2, vec![p3, p4], q.clone(), vec![q.clone(), q])
        .expect("the (4,2) example code is valid")
}

/// A random common-Q code with `k = 2`, `mu = 2` and `r` parities.
///
/// Parity first symbols avoid `b2` and second symbols avoid `a1`, so the
/// same selections as the (4,2) example repair both systematic nodes.
pub fn make_common_q_base(field: Field, r: usize, seed: u64) -> Result<VectorLinearBase> {
    if field.order() < 3 || r == 0 {
        return Err(Error::params("need r >= 1 and a field with at least 3 elements"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e1 = Mat::from_rows(field, &[[1], [0]])?;
    let e2 = Mat::from_rows(field, &[[0], [1]])?;
    let q = vec![e1, e2];
    for _ in 0..10_000 {
        let mut nz = || rng.gen_range(1..field.order());
        let p: Vec<Mat> = (0..r)
            .map(|_| column_mat(field, &[[nz(), nz(), nz(), 0], [0, nz(), nz(), nz()]]))
            .collect();
        if let Ok(base) = VectorLinearBase::new(field, 2, 2, p, q.clone(), vec![q.clone(); r]) {
            return Ok(base);
        }
    }
    Err(Error::FieldTooSmall {
        needed: r + 2,
        order: field.order(),
    })
}
