//! Complex sparse matrices and the tensor-product layout of the emitter and
//! sensor two-level systems.
//!
//! Basis convention for every site: index 0 is the ground state `|↓⟩` and
//! index 1 the excited state `|↑⟩`, so `σ⁻ = |↓⟩⟨↑|` has its single entry at
//! `(0, 1)`. In a tensor product the first factor is the most significant
//! digit of the composite index, which makes site 0 the leftmost factor.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Compressed-row complex matrix.
///
/// Instances are immutable once built; all constructors go through
/// [`SparseComplexMatrix::from_triplets_with_tolerance`], which sorts, merges
/// duplicate coordinates and drops entries at or below the drop tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseComplexMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseComplexMatrix {
    pub fn from_triplets<It>(rows: usize, cols: usize, entries: It) -> Self
    where
        It: IntoIterator<Item = (usize, usize, C64)>,
    {
        Self::from_triplets_with_tolerance(rows, cols, entries, 0.0)
    }

    pub fn from_triplets_with_tolerance<It>(
        rows: usize,
        cols: usize,
        entries: It,
        drop_tol: f64,
    ) -> Self
    where
        It: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut triplets: Vec<(usize, usize, C64)> = entries.into_iter().collect();
        for &(r, c, _) in &triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut it = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v.norm() > drop_tol {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, std::iter::empty())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, ONE)))
    }

    pub fn from_dense(m: MatRef<'_, C64>) -> Self {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => ZERO,
        }
    }

    /// Entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.rows, self.cols, self.iter().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "add",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Self::from_triplets(self.rows, self.cols, self.iter().chain(other.iter())))
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "multiply",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut t = Vec::new();
        for (r, k, a) in self.iter() {
            for (c, b) in other.row(k) {
                t.push((r, c, a * b));
            }
        }
        Ok(Self::from_triplets(self.rows, other.cols, t))
    }

    /// `y = self · x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    /// `self · m` for a dense right-hand side.
    pub fn mul_dense(&self, m: MatRef<'_, C64>) -> Result<Mat<C64>> {
        if self.cols != m.nrows() {
            return Err(Error::DimensionMismatch {
                op: "mul_dense",
                left: self.shape(),
                right: (m.nrows(), m.ncols()),
            });
        }
        let mut out = Mat::<C64>::zeros(self.rows, m.ncols());
        for j in 0..m.ncols() {
            for (r, k, v) in self.iter() {
                out[(r, j)] += v * m[(k, j)];
            }
        }
        Ok(out)
    }

    /// `m · self` for a dense left-hand side.
    pub fn dense_mul(&self, m: MatRef<'_, C64>) -> Result<Mat<C64>> {
        if m.ncols() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "dense_mul",
                left: (m.nrows(), m.ncols()),
                right: self.shape(),
            });
        }
        let mut out = Mat::<C64>::zeros(m.nrows(), self.cols);
        for (k, c, v) in self.iter() {
            for i in 0..m.nrows() {
                out[(i, c)] += m[(i, k)] * v;
            }
        }
        Ok(out)
    }

    /// Largest entrywise deviation from Hermiticity, `max |A_ij − conj(A_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .chain(self.adjoint().iter().map(|(r, c, v)| (v - self.get(r, c)).norm()))
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_1(&self) -> f64 {
        let mut col_sums = vec![0.0; self.cols];
        for (_, c, v) in self.iter() {
            col_sums[c] += v.norm();
        }
        col_sums.into_iter().fold(0.0, f64::max)
    }
}

/// Collects scaled copies of sparse matrices and merges them on `finish`.
#[derive(Debug)]
pub struct Accumulator {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl Accumulator {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, v: C64) {
        self.entries.push((row, col, v));
    }

    pub fn add(&mut self, m: &SparseComplexMatrix, coef: C64) {
        assert_eq!(m.shape(), (self.rows, self.cols), "accumulator shape mismatch");
        self.entries.extend(m.iter().map(|(r, c, v)| (r, c, v * coef)));
    }

    pub fn finish(self) -> SparseComplexMatrix {
        SparseComplexMatrix::from_triplets(self.rows, self.cols, self.entries)
    }
}

/// Tensor product `a ⊗ b`; the first factor is the most significant index.
pub fn kron(a: &SparseComplexMatrix, b: &SparseComplexMatrix) -> SparseComplexMatrix {
    let (br, bc) = b.shape();
    let mut t = Vec::with_capacity(a.nnz() * b.nnz());
    for (ra, ca, va) in a.iter() {
        for (rb, cb, vb) in b.iter() {
            t.push((ra * br + rb, ca * bc + cb, va * vb));
        }
    }
    SparseComplexMatrix::from_triplets(a.rows() * br, a.cols() * bc, t)
}

pub fn adjoint(a: &SparseComplexMatrix) -> SparseComplexMatrix {
    a.adjoint()
}

pub fn multiply(a: &SparseComplexMatrix, b: &SparseComplexMatrix) -> Result<SparseComplexMatrix> {
    a.multiply(b)
}

/// `Tr[op · rho]`.
pub fn expectation(op: &SparseComplexMatrix, rho: MatRef<'_, C64>) -> Result<C64> {
    if op.cols() != rho.nrows() || op.rows() != rho.ncols() {
        return Err(Error::DimensionMismatch {
            op: "expectation",
            left: op.shape(),
            right: (rho.nrows(), rho.ncols()),
        });
    }
    Ok(op.iter().map(|(r, c, v)| v * rho[(c, r)]).sum())
}

pub fn sigma_minus() -> SparseComplexMatrix {
    SparseComplexMatrix::from_triplets(2, 2, [(0, 1, ONE)])
}

pub fn sigma_plus() -> SparseComplexMatrix {
    SparseComplexMatrix::from_triplets(2, 2, [(1, 0, ONE)])
}

/// `σ⁺σ⁻`, the excited-state projector.
pub fn excitation() -> SparseComplexMatrix {
    SparseComplexMatrix::from_triplets(2, 2, [(1, 1, ONE)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SiteLabel {
    Atom,
    Sensor,
}

/// Ordered list of two-level sites: atoms first, then sensors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertLayout {
    site_dims: Vec<usize>,
    site_labels: Vec<SiteLabel>,
}

impl HilbertLayout {
    pub fn new(atoms: usize, sensors: usize) -> Self {
        let mut site_labels = vec![SiteLabel::Atom; atoms];
        site_labels.extend(std::iter::repeat(SiteLabel::Sensor).take(sensors));
        Self {
            site_dims: vec![2; atoms + sensors],
            site_labels,
        }
    }

    pub fn site_count(&self) -> usize {
        self.site_dims.len()
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn site_labels(&self) -> &[SiteLabel] {
        &self.site_labels
    }

    pub fn atom_count(&self) -> usize {
        self.site_labels.iter().filter(|&&l| l == SiteLabel::Atom).count()
    }

    pub fn sensor_count(&self) -> usize {
        self.site_labels.iter().filter(|&&l| l == SiteLabel::Sensor).count()
    }

    /// Site index of the `k`-th sensor.
    pub fn sensor_site(&self, k: usize) -> usize {
        self.atom_count() + k
    }

    pub fn dim(&self) -> usize {
        self.site_dims.iter().product()
    }

    /// Local state of `site` in composite basis state `index`.
    pub fn local_state(&self, index: usize, site: usize) -> usize {
        let stride: usize = self.site_dims[site + 1..].iter().product();
        (index / stride) % self.site_dims[site]
    }
}

/// Lifts a single-site operator to the full space, identity elsewhere.
pub fn embed(
    local: &SparseComplexMatrix,
    site: usize,
    layout: &HilbertLayout,
) -> Result<SparseComplexMatrix> {
    if site >= layout.site_count() {
        return Err(Error::SiteOutOfRange {
            site,
            sites: layout.site_count(),
        });
    }
    let d = layout.site_dims()[site];
    if local.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            op: "embed",
            left: local.shape(),
            right: (d, d),
        });
    }
    let left: usize = layout.site_dims()[..site].iter().product();
    let right: usize = layout.site_dims()[site + 1..].iter().product();
    let m = kron(&SparseComplexMatrix::identity(left), local);
    Ok(kron(&m, &SparseComplexMatrix::identity(right)))
}
