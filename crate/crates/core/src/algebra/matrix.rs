//! Dense matrices over a [`Field`], with exact rank, solve and inverse.
//!
//! Code generator grids are mostly unit rows (systematic symbols), so rank
//! and span computations first peel off rows with a single nonzero entry and
//! only run Gaussian elimination on what remains.

use std::fmt;

use super::field::Field;
use crate::error::{Error, Result};

/// Row-major matrix over a finite field.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} over {:?} [", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Mat {
        Mat {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Field, size: usize) -> Mat {
        let mut m = Mat::zeros(field, size, size);
        for i in 0..size {
            m.data[i * size + i] = 1;
        }
        m
    }

    pub fn from_vec(field: Field, rows: usize, cols: usize, data: Vec<u32>) -> Result<Mat> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                format!("{} entries", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        for &v in &data {
            field.elem(v)?;
        }
        Ok(Mat {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[u32]>>(field: Field, rows: &[R]) -> Result<Mat> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape(format!("{cols} columns"), format!("{}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Mat::from_vec(field, rows.len(), cols, data)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        debug_assert!(v < self.field.order());
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Mat {
            field: self.field,
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::shape(
                format!("{} rows on the right", self.cols),
                format!("{}", other.rows),
            ));
        }
        let f = self.field;
        let mut out = Mat::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = f.add(*d, f.mul(a, b));
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self · v`.
    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(Error::shape(format!("vector of {}", self.cols), format!("{}", v.len())));
        }
        Ok((0..self.rows).map(|r| dot(self.field, self.row(r), v)).collect())
    }

    /// Row-echelon pivot count.
    pub fn rank(&self) -> usize {
        let rows: Vec<&[u32]> = (0..self.rows).map(|r| self.row(r)).collect();
        rank_of_rows(self.field, &rows, self.cols)
    }

    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::shape("square matrix", format!("{}x{}", self.rows, self.cols)));
        }
        self.solve(&Mat::identity(self.field, self.rows))
    }

    /// Solve `self · X = rhs` for square nonsingular `self`.
    pub fn solve(&self, rhs: &Mat) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::shape("square matrix", format!("{}x{}", self.rows, self.cols)));
        }
        if rhs.rows != self.rows {
            return Err(Error::shape(format!("{} rhs rows", self.rows), format!("{}", rhs.rows)));
        }
        let f = self.field;
        let n = self.rows;
        let w = n + rhs.cols;
        let mut aug: Vec<Vec<u32>> = (0..n)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                row.extend_from_slice(rhs.row(r));
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| aug[r][col] != 0).ok_or(Error::Singular)?;
            aug.swap(col, pivot);
            let inv = f.inv_nonzero(aug[col][col]);
            for v in aug[col].iter_mut() {
                *v = f.mul(*v, inv);
            }
            let prow = aug[col].clone();
            for (r, row) in aug.iter_mut().enumerate() {
                if r == col || row[col] == 0 {
                    continue;
                }
                let factor = row[col];
                axpy(f, row, factor, &prow);
            }
        }
        let mut out = Mat::zeros(f, n, rhs.cols);
        for (r, row) in aug.iter().enumerate() {
            out.row_mut(r).copy_from_slice(&row[n..w]);
        }
        Ok(out)
    }

    /// Express every row of `targets` as a combination of the rows of `self`.
    ///
    /// Returns `X` with `X · self = targets`, or `None` when some target row is
    /// outside the row space.
    pub fn express_rows(&self, targets: &Mat) -> Result<Option<Mat>> {
        if targets.cols != self.cols {
            return Err(Error::shape(
                format!("{} columns", self.cols),
                format!("{}", targets.cols),
            ));
        }
        let rows: Vec<&[u32]> = (0..self.rows).map(|r| self.row(r)).collect();
        let basis = SpanBasis::new(self.field, &rows, self.cols);
        let mut out = Mat::zeros(self.field, targets.rows, self.rows);
        for t in 0..targets.rows {
            match basis.express(targets.row(t)) {
                Some(combo) => out.row_mut(t).copy_from_slice(&combo),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }
}

#[inline]
pub(crate) fn dot(f: Field, a: &[u32], b: &[u32]) -> u32 {
    a.iter().zip(b).fold(
        0,
        |acc, (&x, &y)| if x == 0 || y == 0 { acc } else { f.add(acc, f.mul(x, y)) },
    )
}

/// `dst -= factor * src`
#[inline]
pub(crate) fn axpy(f: Field, dst: &mut [u32], factor: u32, src: &[u32]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d = f.sub(*d, f.mul(factor, s));
        }
    }
}

fn single_nonzero(row: &[u32]) -> Option<(usize, u32)> {
    let mut found = None;
    for (c, &v) in row.iter().enumerate() {
        if v != 0 {
            if found.is_some() {
                return None;
            }
            found = Some((c, v));
        }
    }
    found
}

/// Rank of a set of rows of length `cols`.
pub(crate) fn rank_of_rows(f: Field, rows: &[&[u32]], cols: usize) -> usize {
    let mut unit_cols = vec![false; cols];
    let mut units = 0;
    let mut dense = Vec::new();
    for row in rows {
        match single_nonzero(row) {
            Some((c, _)) => {
                if !unit_cols[c] {
                    unit_cols[c] = true;
                    units += 1;
                }
            }
            None => {
                if row.iter().any(|&v| v != 0) {
                    dense.push(*row);
                }
            }
        }
    }
    // Unit rows span their columns, so the rest only matters on the other columns.
    let free: Vec<usize> = (0..cols).filter(|&c| !unit_cols[c]).collect();
    let mut reduced: Vec<Vec<u32>> = dense.iter().map(|row| free.iter().map(|&c| row[c]).collect()).collect();
    units + echelon_rank(f, &mut reduced, free.len())
}

fn echelon_rank(f: Field, rows: &mut [Vec<u32>], cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows.len() {
            break;
        }
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let inv = f.inv_nonzero(rows[rank][col]);
        let prow: Vec<u32> = rows[rank].iter().map(|&v| f.mul(v, inv)).collect();
        for row in rows.iter_mut().skip(rank + 1) {
            let factor = row[col];
            if factor != 0 {
                axpy(f, row, factor, &prow);
            }
        }
        rows[rank] = prow;
        rank += 1;
    }
    rank
}

/// Reduced basis of a row set that remembers how each basis vector was built.
pub(crate) struct SpanBasis {
    field: Field,
    nrows: usize,
    /// column -> (source row, nonzero value) for single-entry rows
    unit: Vec<Option<(usize, u32)>>,
    /// echelon rows with their pivot column and combination of source rows
    echelon: Vec<(usize, Vec<u32>, Vec<u32>)>,
}

impl SpanBasis {
    pub(crate) fn new(f: Field, rows: &[&[u32]], cols: usize) -> SpanBasis {
        let nrows = rows.len();
        let mut unit: Vec<Option<(usize, u32)>> = vec![None; cols];
        let mut dense = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            match single_nonzero(row) {
                Some((c, v)) => {
                    if unit[c].is_none() {
                        unit[c] = Some((i, v));
                    }
                }
                None => {
                    if row.iter().any(|&v| v != 0) {
                        dense.push(i);
                    }
                }
            }
        }
        let mut basis = SpanBasis {
            field: f,
            nrows,
            unit,
            echelon: Vec::new(),
        };
        for i in dense {
            let mut vec = rows[i].to_vec();
            let mut combo = vec![0u32; nrows];
            combo[i] = 1;
            basis.reduce(&mut vec, &mut combo);
            if let Some(pc) = vec.iter().position(|&v| v != 0) {
                let inv = f.inv_nonzero(vec[pc]);
                for v in vec.iter_mut() {
                    *v = f.mul(*v, inv);
                }
                for v in combo.iter_mut() {
                    *v = f.mul(*v, inv);
                }
                basis.echelon.push((pc, vec, combo));
            }
        }
        basis
    }

    /// Eliminate unit columns and existing echelon pivots from `vec`, folding
    /// the subtracted rows into `combo` (which tracks `vec` as a combination).
    fn reduce(&self, vec: &mut [u32], combo: &mut [u32]) {
        let f = self.field;
        for (c, u) in self.unit.iter().enumerate() {
            if let Some((src, v)) = *u {
                let x = vec[c];
                if x != 0 {
                    let factor = f.mul(x, f.inv_nonzero(v));
                    vec[c] = 0;
                    combo[src] = f.sub(combo[src], factor);
                }
            }
        }
        for (pc, erow, ecombo) in &self.echelon {
            let x = vec[*pc];
            if x != 0 {
                axpy(f, vec, x, erow);
                axpy(f, combo, x, ecombo);
            }
        }
    }

    /// Coefficients `c` with `Σ c_i · row_i = target`, if any.
    pub(crate) fn express(&self, target: &[u32]) -> Option<Vec<u32>> {
        let f = self.field;
        let mut vec = target.to_vec();
        // combo tracks (target - Σ combo_i row_i) == vec, with sign flipped at the end
        let mut combo = vec![0u32; self.nrows];
        self.reduce(&mut vec, &mut combo);
        if vec.iter().any(|&v| v != 0) {
            return None;
        }
        // vec = target + combo·rows = 0  =>  target = -combo·rows
        Some(combo.iter().map(|&v| f.neg(v)).collect())
    }
}

/// Cauchy matrix with entry (i, j) = 1 / (x_i - y_j).
pub fn cauchy_matrix(field: Field, x: &[u32], y: &[u32]) -> Result<Mat> {
    let mut seen = std::collections::HashSet::new();
    for &v in x.iter().chain(y) {
        field.elem(v)?;
        if !seen.insert(v) {
            return Err(Error::DuplicatePoint(v));
        }
    }
    let mut m = Mat::zeros(field, x.len(), y.len());
    for (i, &xi) in x.iter().enumerate() {
        for (j, &yj) in y.iter().enumerate() {
            m.set(i, j, field.inv(field.sub(xi, yj))?);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf5() -> Field {
        Field::prime(5).unwrap()
    }

    fn random_mat(f: Field, rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
        let data = (0..rows * cols).map(|_| rng.gen_range(0..f.order())).collect();
        Mat::from_vec(f, rows, cols, data).unwrap()
    }

    #[test]
    fn gf5_inverse() {
        let a = Mat::from_rows(gf5(), &[[3, 2], [1, 1]]).unwrap();
        let inv = a.inverse().unwrap();
        assert_eq!(inv, Mat::from_rows(gf5(), &[[1, 3], [4, 3]]).unwrap());
        assert_eq!(a.mul(&inv).unwrap(), Mat::identity(gf5(), 2));
    }

    #[test]
    fn identity_and_zero() {
        let f = Field::gf256();
        assert_eq!(Mat::identity(f, 5).inverse().unwrap(), Mat::identity(f, 5));
        assert_eq!(Mat::zeros(f, 4, 6).rank(), 0);
    }

    #[test]
    fn singular_is_distinct_from_shape() {
        let f = gf5();
        let s = Mat::from_rows(f, &[[1, 2], [2, 4]]).unwrap();
        assert!(matches!(s.inverse(), Err(Error::Singular)));
        let r = Mat::zeros(f, 2, 3);
        assert!(matches!(r.inverse(), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(
            s.solve(&Mat::zeros(f, 3, 1)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn random_inverses() {
        let f = Field::gf256();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 40 {
            let n = rng.gen_range(1..=12);
            let a = random_mat(f, n, n, &mut rng);
            match a.inverse() {
                Ok(inv) => {
                    assert_eq!(inv.mul(&a).unwrap(), Mat::identity(f, n));
                    assert_eq!(a.rank(), n);
                    checked += 1;
                }
                Err(Error::Singular) => assert!(a.rank() < n),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn rank_fast_path_agrees_with_plain_elimination() {
        let f = Field::gf256();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let rows = rng.gen_range(1..10);
            let cols = rng.gen_range(1..10);
            let mut m = random_mat(f, rows, cols, &mut rng);
            // sprinkle unit rows
            for r in 0..rows {
                if rng.gen_bool(0.4) {
                    let c = rng.gen_range(0..cols);
                    let v = rng.gen_range(1..256);
                    m.row_mut(r).fill(0);
                    m.set(r, c, v);
                }
            }
            let mut plain: Vec<Vec<u32>> = (0..rows).map(|r| m.row(r).to_vec()).collect();
            assert_eq!(m.rank(), echelon_rank(f, &mut plain, cols));
        }
    }

    #[test]
    fn express_rows_finds_combinations() {
        let f = Field::gf256();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let basis = random_mat(f, 4, 7, &mut rng);
            let coeffs = random_mat(f, 3, 4, &mut rng);
            let targets = coeffs.mul(&basis).unwrap();
            let x = basis.express_rows(&targets).unwrap().expect("in span");
            assert_eq!(x.mul(&basis).unwrap(), targets);
        }
        // a target outside the span
        let basis = Mat::from_rows(f, &[[1, 0, 0], [0, 1, 1]]).unwrap();
        let t = Mat::from_rows(f, &[[0, 1, 0]]).unwrap();
        assert!(basis.express_rows(&t).unwrap().is_none());
    }

    #[test]
    fn cauchy_examples() {
        let f = gf5();
        assert_eq!(
            cauchy_matrix(f, &[0, 1], &[2, 3]).unwrap(),
            Mat::from_rows(f, &[[2, 3], [4, 2]]).unwrap()
        );
        assert_eq!(
            cauchy_matrix(f, &[0], &[1]).unwrap(),
            Mat::from_rows(f, &[[4]]).unwrap()
        );
        assert!(matches!(cauchy_matrix(f, &[0, 1], &[1]), Err(Error::DuplicatePoint(1))));
        assert!(matches!(cauchy_matrix(f, &[2, 2], &[1]), Err(Error::DuplicatePoint(2))));
    }

    #[test]
    fn cauchy_square_submatrices_nonsingular() {
        let f = Field::new(super::super::FieldSpec::Binary { w: 4 }).unwrap();
        let c = cauchy_matrix(f, &[0, 1, 2, 3, 4, 5], &[6, 7, 8, 9, 10, 11]).unwrap();
        assert!(c.data().iter().all(|&v| v != 0));
        for size in 1..=6 {
            for rs in (0..6).combinations(size) {
                for cs in (0..6).combinations(size) {
                    let sub = Mat::from_rows(
                        f,
                        &rs.iter()
                            .map(|&r| cs.iter().map(|&c2| c.get(r, c2)).collect::<Vec<_>>())
                            .collect::<Vec<_>>(),
                    )
                    .unwrap();
                    assert_eq!(sub.rank(), size);
                }
            }
        }
    }
}
