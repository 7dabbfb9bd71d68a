//! Dense exact linear algebra over `F_q`.
//!
//! Everything here is deterministic: pivots are chosen as the first nonzero
//! entry in column order, and nullspace bases come out in a canonical form
//! (one vector per free variable, ordered by free-variable index, leading
//! nonzero entry scaled to 1).

use std::fmt;

use crate::error::{Error, Result};
use crate::gf::FieldSpec;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MatrixFq {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
    field: FieldSpec,
}

/// Output of [`MatrixFq::rref`]: `transform · input = rref`.
#[derive(Clone, Debug)]
pub struct RrefResult {
    pub rref: MatrixFq,
    pub rank: usize,
    pub pivot_cols: Vec<usize>,
    pub transform: MatrixFq,
}

impl MatrixFq {
    pub fn new(field: FieldSpec, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|&&x| x >= field.modulus()) {
            return Err(Error::Dimension(format!(
                "entry {bad} is not a residue mod {}",
                field.modulus()
            )));
        }
        Ok(MatrixFq {
            rows,
            cols,
            data,
            field,
        })
    }

    /// Builds a matrix from signed integer rows, reducing every entry mod q.
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[i64]>>(field: FieldSpec, rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r.iter().map(|&x| field.reduce(x)));
        }
        MatrixFq {
            rows: rows.len(),
            cols,
            data,
            field,
        }
    }

    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        MatrixFq {
            rows,
            cols,
            data: vec![0; rows * cols],
            field,
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        assert!(v < self.field.modulus());
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Column indices of the nonzero entries of row `r`.
    pub fn row_support(&self, r: usize) -> Vec<usize> {
        self.row(r)
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(j, _)| j)
            .collect()
    }

    fn check_field(&self, other: &MatrixFq) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, rhs: &MatrixFq) -> Result<MatrixFq> {
        self.check_field(rhs)?;
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let q = self.field.modulus() as u64;
        let mut out = vec![0u32; self.rows * rhs.cols];
        // Accumulate in u64 and reduce lazily; (q-1)^2 < 2^62 so 4 terms fit.
        let mut acc = vec![0u64; rhs.cols];
        for i in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let a = a as u64;
                for (slot, &b) in acc.iter_mut().zip(rhs.row(k)) {
                    *slot = (*slot + a * b as u64) % q;
                }
            }
            for (o, &a) in out[i * rhs.cols..(i + 1) * rhs.cols].iter_mut().zip(&acc) {
                *o = a as u32;
            }
        }
        Ok(MatrixFq {
            rows: self.rows,
            cols: rhs.cols,
            data: out,
            field: self.field,
        })
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.rows);
        let f = self.field;
        let mut out = vec![0u32; self.cols];
        for (r, &c) in v.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(r)) {
                *o = f.add(*o, f.mul(c, x));
            }
        }
        out
    }

    pub fn transpose(&self) -> MatrixFq {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<MatrixFq> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.cols) {
            return Err(Error::Dimension(format!(
                "column {bad} out of range for {} columns",
                self.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Ok(MatrixFq {
            rows: self.rows,
            cols: idx.len(),
            data,
            field: self.field,
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<MatrixFq> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.rows) {
            return Err(Error::Dimension(format!(
                "row {bad} out of range for {} rows",
                self.rows
            )));
        }
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Ok(MatrixFq {
            rows: idx.len(),
            cols: self.cols,
            data,
            field: self.field,
        })
    }

    /// Vertical concatenation `[a; b]`.
    pub fn stack_rows(a: &MatrixFq, b: &MatrixFq) -> Result<MatrixFq> {
        a.check_field(b)?;
        if a.cols != b.cols {
            return Err(Error::Dimension(format!(
                "cannot stack {} columns on {} columns",
                a.cols, b.cols
            )));
        }
        let mut data = a.data.clone();
        data.extend_from_slice(&b.data);
        Ok(MatrixFq {
            rows: a.rows + b.rows,
            cols: a.cols,
            data,
            field: a.field,
        })
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn hstack(field: FieldSpec, rows: usize, parts: &[&MatrixFq]) -> Result<MatrixFq> {
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(field, rows, cols);
        let mut off = 0;
        for p in parts {
            if p.rows != rows || p.field != field {
                return Err(Error::Dimension(format!(
                    "hstack block is {}x{} over {}, expected {rows} rows over {field}",
                    p.rows, p.cols, p.field
                )));
            }
            for r in 0..rows {
                out.data[r * cols + off..r * cols + off + p.cols].copy_from_slice(p.row(r));
            }
            off += p.cols;
        }
        Ok(out)
    }

    /// Reduced row echelon form together with the accumulated row operations.
    pub fn rref(&self) -> RrefResult {
        let mut work = self.row_vecs();
        let mut transform = Self::identity(self.field, self.rows).row_vecs();
        let pivot_cols = eliminate(self.field, &mut work, Some(&mut transform), self.cols);
        RrefResult {
            rank: pivot_cols.len(),
            rref: from_row_vecs(self.field, self.cols, work),
            pivot_cols,
            transform: from_row_vecs(self.field, self.rows, transform),
        }
    }

    pub fn rank(&self) -> usize {
        let mut work = self.row_vecs();
        eliminate(self.field, &mut work, None, self.cols).len()
    }

    /// Basis of `{v : v · self = 0}`, one row per basis vector.
    pub fn left_nullspace_basis(&self) -> MatrixFq {
        let f = self.field;
        // v · m = 0  <=>  m^T v^T = 0, so reduce m^T (cols x rows).
        let mut work = self.transpose().row_vecs();
        let pivots = eliminate(f, &mut work, None, self.rows);
        let free: Vec<usize> = (0..self.rows).filter(|c| !pivots.contains(c)).collect();
        let mut data = Vec::with_capacity(free.len() * self.rows);
        for &fc in &free {
            let mut v = vec![0u32; self.rows];
            v[fc] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(work[i][fc]);
            }
            let lead = *v.iter().find(|&&x| x != 0).expect("basis vector is nonzero");
            let s = f.inv(lead).expect("nonzero lead");
            data.extend(v.into_iter().map(|x| f.mul(x, s)));
        }
        MatrixFq {
            rows: free.len(),
            cols: self.rows,
            data,
            field: f,
        }
    }

    pub fn invert(&self) -> Result<MatrixFq> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let r = self.rref();
        if r.rank < self.rows {
            return Err(Error::Singular);
        }
        Ok(r.transform)
    }

    /// Lexicographically smallest set of `count` linearly independent columns,
    /// found by a left-to-right greedy scan.
    pub fn first_independent_columns(&self, count: usize) -> Result<Vec<usize>> {
        let mut work = self.row_vecs();
        let pivots = eliminate(self.field, &mut work, None, self.cols);
        if pivots.len() < count {
            return Err(Error::InsufficientRank {
                needed: count,
                found: pivots.len(),
            });
        }
        Ok(pivots[..count].to_vec())
    }

    /// Indices of a maximal set of independent rows, greedy in row order.
    pub fn first_independent_rows(&self) -> Vec<usize> {
        let mut work = self.transpose().row_vecs();
        eliminate(self.field, &mut work, None, self.rows)
    }

    /// Finds `C` with `C · basis = target`.
    ///
    /// When the rows of `basis` are dependent the solution is not unique; the
    /// one returned sets every free coefficient to zero.
    pub fn solve_row_combination(basis: &MatrixFq, target: &MatrixFq) -> Result<MatrixFq> {
        basis.check_field(target)?;
        if basis.cols != target.cols {
            return Err(Error::Dimension(format!(
                "basis has {} columns, target has {}",
                basis.cols, target.cols
            )));
        }
        let f = basis.field;
        let r = basis.rows;
        // Solve basis^T X = target^T on the augmented system [basis^T | target^T].
        let bt = basis.transpose();
        let tt = target.transpose();
        let mut work: Vec<Vec<u32>> = (0..bt.rows)
            .map(|i| {
                let mut row = bt.row(i).to_vec();
                row.extend_from_slice(tt.row(i));
                row
            })
            .collect();
        let pivots = eliminate(f, &mut work, None, r);
        // Inconsistent if any zero row of the coefficient part has a nonzero rhs.
        for row in work.iter().skip(pivots.len()) {
            if row[r..].iter().any(|&x| x != 0) {
                return Err(Error::NoSolution);
            }
        }
        let mut x = Self::zeros(f, r, target.rows);
        for (i, &pc) in pivots.iter().enumerate() {
            for t in 0..target.rows {
                x.data[pc * target.rows + t] = work[i][r + t];
            }
        }
        Ok(x.transpose())
    }
}

fn from_row_vecs(field: FieldSpec, cols: usize, rows: Vec<Vec<u32>>) -> MatrixFq {
    let n = rows.len();
    MatrixFq {
        rows: n,
        cols,
        data: rows.into_iter().flatten().collect(),
        field,
    }
}

/// Gauss-Jordan elimination in place on the first `pivot_limit` columns.
///
/// Rows may be longer than `pivot_limit` (augmented systems); the extra
/// columns are carried along. `companion`, when given, receives the same
/// row operations. Returns the pivot columns in increasing order; after the
/// call, row `i` holds pivot `i` and rows past the rank are zero in the
/// pivot range.
fn eliminate(
    f: FieldSpec,
    rows: &mut [Vec<u32>],
    mut companion: Option<&mut Vec<Vec<u32>>>,
    pivot_limit: usize,
) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..pivot_limit {
        if next == rows.len() {
            break;
        }
        let Some(p) = (next..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(next, p);
        if let Some(c) = companion.as_deref_mut() {
            c.swap(next, p);
        }
        let s = f.inv(rows[next][col]).expect("pivot is nonzero");
        scale(f, &mut rows[next], s);
        if let Some(c) = companion.as_deref_mut() {
            scale(f, &mut c[next], s);
        }
        for r in 0..rows.len() {
            if r == next || rows[r][col] == 0 {
                continue;
            }
            let factor = f.neg(rows[r][col]);
            let (src, dst) = pick(rows, next, r);
            axpy(f, dst, src, factor);
            if let Some(c) = companion.as_deref_mut() {
                let (src, dst) = pick(c, next, r);
                axpy(f, dst, src, factor);
            }
        }
        pivots.push(col);
        next += 1;
    }
    pivots
}

fn scale(f: FieldSpec, row: &mut [u32], s: u32) {
    row.iter_mut().for_each(|x| *x = f.mul(*x, s));
}

/// dst += factor * src
fn axpy(f: FieldSpec, dst: &mut [u32], src: &[u32], factor: u32) {
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d = f.add(*d, f.mul(factor, s));
        }
    }
}

fn pick(rows: &mut [Vec<u32>], src: usize, dst: usize) -> (&[u32], &mut [u32]) {
    if src < dst {
        let (a, b) = rows.split_at_mut(dst);
        (&a[src], &mut b[0])
    } else {
        let (a, b) = rows.split_at_mut(src);
        (&b[0], &mut a[dst])
    }
}

impl fmt::Debug for MatrixFq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MatrixFq {}x{} over {} [", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}
