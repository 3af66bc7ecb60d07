//! Dense complex matrices and the linear algebra the rest of the crate needs.
//!
//! Eigen- and singular value decompositions are delegated to `nalgebra`. Everything
//! channel-specific (vectorization convention, partial traces, completions, dilations)
//! lives here.

use nalgebra::{DMatrix, SymmetricEigen};
pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{dim_err, Error, Result};

/// Default relative tolerance for equality and proportionality tests.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default relative cutoff (against the largest singular value) for numerical rank.
pub const RANK_TOL: f64 = 1e-7;

const MAX_ITER: usize = 100_000;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix, row-major in its serialized form.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    m: DMatrix<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.m[idx]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.m[idx]
    }
}

/// Which tensor factor a partial trace removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues in descending order.
/// Column `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Thin singular value decomposition `A = U diag(sigma) V^dag`, sigma descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { m: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { m: DMatrix::from_fn(rows, cols, f) }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: &[C64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_err("from_row_major", rows * cols, data.len()));
        }
        Ok(Self { m: DMatrix::from_row_slice(rows, cols, data) })
    }

    /// Real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        let v: Vec<C64> = data.iter().map(|&x| c(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &v)
    }

    pub fn from_nalgebra(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// Column vector from entries.
    pub fn column(v: &[C64]) -> Self {
        Self { m: DMatrix::from_column_slice(v.len(), 1, v) }
    }

    /// Computational basis ket `|i>` in dimension `n`.
    pub fn ket(n: usize, i: usize) -> Self {
        let mut m = Self::zeros(n, 1);
        m[(i, 0)] = ONE;
        m
    }

    /// Diagonal matrix.
    pub fn diag(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| if i == j { v[i] } else { ZERO })
    }

    pub fn diag_real(v: &[f64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| if i == j { c(v[i], 0.0) } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn cols(&self) -> usize {
        self.m.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.m.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.m[(i, j)]);
            }
        }
        out
    }

    pub fn col(&self, j: usize) -> ComplexMatrix {
        Self { m: self.m.columns(j, 1).into_owned() }
    }

    pub fn row(&self, i: usize) -> ComplexMatrix {
        Self { m: self.m.rows(i, 1).into_owned() }
    }

    /// Sub-block with top-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> ComplexMatrix {
        Self { m: self.m.view((r0, c0), (nr, nc)).into_owned() }
    }

    /// Selects the given columns, in order.
    pub fn select_cols(&self, idx: &[usize]) -> ComplexMatrix {
        Self::from_fn(self.rows(), idx.len(), |i, j| self.m[(i, idx[j])])
    }

    /// Selects the given rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> ComplexMatrix {
        Self::from_fn(idx.len(), self.cols(), |i, j| self.m[(idx[i], j)])
    }

    pub fn hstack(parts: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        let rows = parts.first().map(|p| p.rows()).unwrap_or(0);
        if parts.iter().any(|p| p.rows() != rows) {
            return Err(Error::Invalid("hstack: row counts differ".into()));
        }
        let cols: usize = parts.iter().map(|p| p.cols()).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            out.m.view_mut((0, off), (rows, p.cols())).copy_from(&p.m);
            off += p.cols();
        }
        Ok(out)
    }

    pub fn vstack(parts: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        let cols = parts.first().map(|p| p.cols()).unwrap_or(0);
        if parts.iter().any(|p| p.cols() != cols) {
            return Err(Error::Invalid("vstack: column counts differ".into()));
        }
        let rows: usize = parts.iter().map(|p| p.rows()).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            out.m.view_mut((off, 0), (p.rows(), cols)).copy_from(&p.m);
            off += p.rows();
        }
        Ok(out)
    }

    pub fn dagger(&self) -> ComplexMatrix {
        Self { m: self.m.adjoint() }
    }

    pub fn transpose(&self) -> ComplexMatrix {
        Self { m: self.m.transpose() }
    }

    pub fn conj(&self) -> ComplexMatrix {
        Self { m: self.m.map(|z| z.conj()) }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, a: C64) -> ComplexMatrix {
        Self { m: &self.m * a }
    }

    pub fn scale_re(&self, a: f64) -> ComplexMatrix {
        Self { m: self.m.map(|z| z * a) }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        if self.rows() == 0 || self.cols() == 0 {
            return 0.0;
        }
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Trace norm (sum of singular values).
    pub fn trace_norm(&self) -> f64 {
        self.singular_values().iter().sum()
    }

    /// `<a|b>` for column vectors, i.e. `tr(a^dag b)` in general.
    pub fn inner(&self, other: &ComplexMatrix) -> C64 {
        self.m.iter().zip(other.m.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// `||A - A^dag||_F`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.m - self.m.adjoint()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol * self.frobenius_norm().max(1.0)
    }

    pub fn hermitian_part(&self) -> ComplexMatrix {
        Self { m: (&self.m + self.m.adjoint()).map(|z| z * 0.5) }
    }

    /// `A ⊗ B`, with the index of `A` as the slow one.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        Self { m: self.m.kronecker(&other.m) }
    }

    /// Spectral decomposition of the Hermitian part of a square matrix.
    pub fn eigh(&self) -> Result<Eigh> {
        if !self.is_square() {
            return Err(dim_err("eigh", "square matrix", format!("{}x{}", self.rows(), self.cols())));
        }
        let n = self.rows();
        if n == 0 {
            return Ok(Eigh { values: vec![], vectors: Self::zeros(0, 0) });
        }
        let h = self.hermitian_part();
        let eig = SymmetricEigen::try_new(h.m, f64::EPSILON, MAX_ITER)
            .ok_or_else(|| Error::ConstructionFailed("eigendecomposition did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = Self::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        fix_column_phases(&mut vectors);
        Ok(Eigh { values, vectors })
    }

    /// Thin SVD with singular values in descending order.
    pub fn svd(&self) -> Result<Svd> {
        let (m, n) = self.shape();
        let k = m.min(n);
        if k == 0 {
            return Ok(Svd { u: Self::zeros(m, 0), sigma: vec![], v: Self::zeros(n, 0) });
        }
        let s = self
            .to_faer()
            .thin_svd()
            .map_err(|e| Error::ConstructionFailed(format!("SVD did not converge: {e:?}")))?;
        let sv = s.S().column_vector();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| sv[b].re.total_cmp(&sv[a].re));
        let sigma = order.iter().map(|&i| sv[i].re).collect();
        let (su, svv) = (s.U(), s.V());
        let u = Self::from_fn(m, k, |i, j| su[(i, order[j])]);
        let v = Self::from_fn(n, k, |i, j| svv[(i, order[j])]);
        Ok(Svd { u, sigma, v })
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.svd().map(|s| s.sigma).unwrap_or_default()
    }

    fn to_faer(&self) -> faer::Mat<C64> {
        faer::Mat::from_fn(self.rows(), self.cols(), |i, j| self.m[(i, j)])
    }

    /// Numerical rank with the cutoff `tol * sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let s = self.singular_values();
        let smax = s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        s.iter().filter(|&&x| x > tol * smax).count()
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn hermitian_fn(&self, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        let e = self.eigh()?;
        let n = self.rows();
        let fv: Vec<f64> = e.values.iter().map(|&x| f(x)).collect();
        let v = &e.vectors;
        Ok(Self::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fv[k] * v[(j, k)].conj()).sum()
        }))
    }

    /// Smallest and largest eigenvalue of the Hermitian part.
    pub fn eig_range(&self) -> Result<(f64, f64)> {
        let e = self.eigh()?;
        Ok((
            e.values.last().copied().unwrap_or(0.0),
            e.values.first().copied().unwrap_or(0.0),
        ))
    }

    /// `||A - (tr A / d) 1||_F`, for square `A`.
    pub fn identity_deviation(&self) -> f64 {
        let d = self.rows();
        let t = self.trace() / d as f64;
        let mut dev = self.clone();
        for i in 0..d {
            dev[(i, i)] -= t;
        }
        dev.frobenius_norm()
    }

    /// Proportionality test `||A - (tr A/d) 1||_F <= tol * max(1, ||A||_F)`.
    pub fn is_proportional_to_identity(&self, tol: f64) -> bool {
        self.is_square() && self.identity_deviation() <= tol * self.frobenius_norm().max(1.0)
    }

    /// Relative distance used for approximate equality, `||A-B||_F / max(1, ||B||_F)`.
    pub fn rel_dist(&self, other: &ComplexMatrix) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        (self - other).frobenius_norm() / other.frobenius_norm().max(1.0)
    }

    pub fn approx_eq(&self, other: &ComplexMatrix, tol: f64) -> bool {
        self.rel_dist(other) <= tol
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.frobenius_norm() <= tol
    }
}

/// Makes the first entry of maximal modulus in each column real and positive.
fn fix_column_phases(v: &mut ComplexMatrix) {
    for j in 0..v.cols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..v.rows() {
            let a = v[(i, j)].norm();
            if a > best_abs + 1e-12 {
                best_abs = a;
                best = i;
            }
        }
        if best_abs > 0.0 {
            let ph = v[(best, j)].conj() / best_abs;
            for i in 0..v.rows() {
                v[(i, j)] *= ph;
            }
        }
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { m: &self.m $op &rhs.m }
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { m: self.m $op rhs.m }
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { m: self.m $op &rhs.m }
            }
        }
        impl $tr<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { m: &self.m $op rhs.m }
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { m: -self.m }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { m: -self.m.clone() }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows(),
            cols: self.cols(),
            data: self.to_row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        let data: Vec<C64> = r.data.iter().map(|p| c(p[0], p[1])).collect();
        ComplexMatrix::from_row_major(r.rows, r.cols, &data).map_err(serde::de::Error::custom)
    }
}

/// Vectorization `|M> = sum_i |i> ⊗ M^T |i>`, which is row-major flattening.
pub fn vectorize(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::column(&m.to_row_major())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &ComplexMatrix, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.cols() != 1 || v.rows() != rows * cols {
        return Err(dim_err("unvectorize", format!("{}x1", rows * cols), format!("{}x{}", v.rows(), v.cols())));
    }
    ComplexMatrix::from_row_major(rows, cols, &v.to_row_major())
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Partial trace of an operator on `C^d1 ⊗ C^d2`.
pub fn partial_trace(a: &ComplexMatrix, dims: (usize, usize), which: Subsystem) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    if a.rows() != d1 * d2 || a.cols() != d1 * d2 {
        return Err(dim_err("partial_trace", format!("{0}x{0}", d1 * d2), format!("{}x{}", a.rows(), a.cols())));
    }
    Ok(match which {
        Subsystem::First => ComplexMatrix::from_fn(d2, d2, |i, j| (0..d1).map(|k| a[(k * d2 + i, k * d2 + j)]).sum()),
        Subsystem::Second => ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| a[(i * d2 + k, j * d2 + k)]).sum()),
    })
}

/// Moore-Penrose pseudo-inverse; singular values at or below `cutoff * sigma_max` are treated as zero.
pub fn pseudo_inverse(a: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let s = a.svd()?;
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let (m, n) = a.shape();
    let inv: Vec<f64> = s.sigma.iter().map(|&x| if smax > 0.0 && x > cutoff * smax { 1.0 / x } else { 0.0 }).collect();
    Ok(ComplexMatrix::from_fn(n, m, |i, j| {
        (0..inv.len()).map(|k| s.v[(i, k)] * inv[k] * s.u[(j, k)].conj()).sum()
    }))
}

/// Square root of a positive semidefinite matrix. Eigenvalues in `[-tol*max(1,lambda_max), 0)`
/// are clamped to zero.
pub fn matrix_sqrt(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(dim_err("matrix_sqrt", "square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    if !a.is_hermitian(tol) {
        return Err(Error::NotHermitian { deviation: a.hermitian_deviation() });
    }
    let e = a.eigh()?;
    let lmax = e.values.first().copied().unwrap_or(0.0);
    let lmin = e.values.last().copied().unwrap_or(0.0);
    if lmin < -tol * lmax.abs().max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: lmin });
    }
    a.hermitian_fn(|x| x.max(0.0).sqrt())
}

/// Inverse square root of a positive definite matrix.
pub fn inverse_sqrt(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let (lmin, lmax) = a.eig_range()?;
    if lmin <= tol * lmax.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(format!("smallest eigenvalue {lmin:.3e}")));
    }
    a.hermitian_fn(|x| 1.0 / x.sqrt())
}

/// Orthonormal basis (as columns) of `{v : ||Lv|| <= tol * sigma_max(L)}`.
pub fn null_space(l: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let (m, n) = l.shape();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    // Pad with zero rows so the SVD returns a full right basis.
    let k = m.max(n);
    let mut padded = ComplexMatrix::zeros(k, n);
    if m > 0 {
        padded.m.view_mut((0, 0), (m, n)).copy_from(&l.m);
    }
    let s = padded.svd()?;
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let idx: Vec<usize> = (0..n).filter(|&j| s.sigma[j] <= tol * smax || smax == 0.0).collect();
    Ok(s.v.select_cols(&idx))
}

/// Largest deviation of `V^dag V` from the identity.
pub fn orthonormality_deviation(v: &ComplexMatrix) -> f64 {
    (&v.dagger() * v - ComplexMatrix::identity(v.cols())).frobenius_norm()
}

/// Completes orthonormal columns `v` (n x k) to an n x n unitary whose column `slots[j]` is
/// column `j` of `v`. The remaining columns are filled in increasing slot order from
/// computational basis vectors, each time taking the one with the largest residual
/// after projection, so the result is deterministic.
pub fn unitary_completion(v: &ComplexMatrix, slots: &[usize]) -> Result<ComplexMatrix> {
    let (n, k) = v.shape();
    if slots.len() != k {
        return Err(dim_err("unitary_completion slots", k, slots.len()));
    }
    let mut seen = vec![false; n];
    for &s in slots {
        if s >= n || seen[s] {
            return Err(Error::Invalid(format!("unitary_completion: bad slot {s}")));
        }
        seen[s] = true;
    }
    let dev = orthonormality_deviation(v);
    if dev > 1e-8 {
        return Err(Error::NotOrthonormal { deviation: dev });
    }
    let mut basis: Vec<ComplexMatrix> = (0..k).map(|j| v.col(j)).collect();
    let mut extra = Vec::new();
    while basis.len() < n {
        let mut best: Option<(f64, ComplexMatrix)> = None;
        for e in 0..n {
            let mut r = ComplexMatrix::ket(n, e);
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.inner(&r);
                    r = r - b.scale(proj);
                }
            }
            let nr = r.frobenius_norm();
            if best.as_ref().map_or(true, |(bn, _)| nr > *bn + 1e-12) {
                best = Some((nr, r));
            }
        }
        let (nr, r) = best.expect("n > 0");
        let r = r.scale_re(1.0 / nr);
        basis.push(r.clone());
        extra.push(r);
    }
    let mut u = ComplexMatrix::zeros(n, n);
    for (j, &s) in slots.iter().enumerate() {
        u.m.set_column(s, &v.m.column(j));
    }
    let free: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();
    for (col, e) in free.iter().zip(extra.iter()) {
        u.m.set_column(*col, &e.m.column(0));
    }
    Ok(u)
}

/// Unitary dilation of a contraction `C` (m x n):
/// `[[C, (1 - C C^dag)^{1/2}], [(1 - C^dag C)^{1/2}, -C^dag]]`, size (m+n) x (m+n).
/// Singular values in `(1, 1+tol]` are clipped to 1 first.
pub fn unitary_dilation(cm: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let (m, n) = cm.shape();
    let s = cm.svd()?;
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    if smax > 1.0 + tol {
        return Err(Error::NotContraction { norm: smax });
    }
    let k = s.sigma.len();
    let sig: Vec<f64> = s.sigma.iter().map(|&x| x.min(1.0)).collect();
    let slots_u: Vec<usize> = (0..k).collect();
    let w = unitary_completion(&s.u, &slots_u)?;
    let z = unitary_completion(&s.v, &slots_u)?;
    let defect = |i: usize| if i < k { (1.0 - sig[i] * sig[i]).max(0.0).sqrt() } else { 1.0 };
    let c_used = if smax > 1.0 {
        ComplexMatrix::from_fn(m, n, |i, j| (0..k).map(|t| s.u[(i, t)] * sig[t] * s.v[(j, t)].conj()).sum())
    } else {
        cm.clone()
    };
    let dl = ComplexMatrix::from_fn(m, m, |i, j| (0..m).map(|t| w[(i, t)] * defect(t) * w[(j, t)].conj()).sum());
    let dr = ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|t| z[(i, t)] * defect(t) * z[(j, t)].conj()).sum());
    let mut u = ComplexMatrix::zeros(m + n, m + n);
    u.m.view_mut((0, 0), (m, n)).copy_from(&c_used.m);
    u.m.view_mut((0, n), (m, m)).copy_from(&dl.m);
    u.m.view_mut((m, 0), (n, n)).copy_from(&dr.m);
    u.m.view_mut((m, n), (n, m)).copy_from(&(-c_used.dagger()).m);
    Ok(u)
}

/// Unitary `U` with `U a_k = b_k` for orthonormal columns `a_k` of `from` and `b_k` of `to`.
pub fn unitary_mapping(from: &ComplexMatrix, to: &ComplexMatrix) -> Result<ComplexMatrix> {
    if from.shape() != to.shape() {
        return Err(dim_err("unitary_mapping", format!("{:?}", from.shape()), format!("{:?}", to.shape())));
    }
    let k = from.cols();
    let slots: Vec<usize> = (0..k).collect();
    let a = unitary_completion(from, &slots)?;
    let b = unitary_completion(to, &slots)?;
    Ok(&b * &a.dagger())
}
