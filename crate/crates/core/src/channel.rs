//! Completely positive, trace non-increasing maps in Kraus form, with Choi and
//! Stinespring views.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::matcore::{c, partial_trace, unvectorize, vectorize, ComplexMatrix, Subsystem, DEFAULT_TOL, ONE};

/// Relative eigenvalue cutoff below which a Choi eigenvalue counts as zero.
pub const CHOI_RANK_TOL: f64 = 1e-9;

/// A subchannel `Phi(X) = sum_i K_i X K_i^dag` from `C^in_dim` to `C^out_dim`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SubchannelRepr")]
pub struct Subchannel {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<ComplexMatrix>,
}

#[derive(Deserialize)]
struct SubchannelRepr {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl TryFrom<SubchannelRepr> for Subchannel {
    type Error = Error;
    fn try_from(r: SubchannelRepr) -> Result<Self> {
        Subchannel::new(r.in_dim, r.out_dim, r.kraus)
    }
}

/// Choi operator `J = sum_i |K_i><K_i|` on `C^out ⊗ C^in`.
#[derive(Clone, Debug)]
pub struct ChoiOperator {
    pub in_dim: usize,
    pub out_dim: usize,
    pub matrix: ComplexMatrix,
}

impl Subchannel {
    /// Checked constructor: dimensions must agree and `sum K^dag K <= 1`.
    pub fn new(in_dim: usize, out_dim: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let ch = Self::new_unchecked(in_dim, out_dim, kraus)?;
        let (_, lmax) = ch.kraus_sum().eig_range()?;
        if lmax > 1.0 + DEFAULT_TOL.max(1e-8) {
            return Err(Error::NotTraceNonIncreasing { max_eigenvalue: lmax });
        }
        Ok(ch)
    }

    /// Only checks that the Kraus shapes agree with the declared dimensions.
    pub fn new_unchecked(in_dim: usize, out_dim: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        for k in &kraus {
            if k.shape() != (out_dim, in_dim) {
                return Err(dim_err("Kraus operator", format!("{out_dim}x{in_dim}"), format!("{}x{}", k.rows(), k.cols())));
            }
        }
        Ok(Self { in_dim, out_dim, kraus })
    }

    pub fn identity(d: usize) -> Self {
        Self { in_dim: d, out_dim: d, kraus: vec![ComplexMatrix::identity(d)] }
    }

    /// Channel of a single Kraus operator (unitary, isometry or contraction).
    pub fn from_operator(k: ComplexMatrix) -> Result<Self> {
        Self::new(k.cols(), k.rows(), vec![k])
    }

    /// `(1 - q) X + q sum_i |i><i| X |i><i|`.
    pub fn dephasing(d: usize, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Invalid(format!("dephasing strength {q} outside [0,1]")));
        }
        let mut kraus = vec![ComplexMatrix::identity(d).scale_re((1.0 - q).sqrt())];
        for i in 0..d {
            let mut k = ComplexMatrix::zeros(d, d);
            k[(i, i)] = c(q.sqrt(), 0.0);
            kraus.push(k);
        }
        Self::new(d, d, kraus)
    }

    /// `(1 - q) X + q tr(X) 1/d`.
    pub fn depolarizing(d: usize, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Invalid(format!("depolarizing strength {q} outside [0,1]")));
        }
        let mut kraus = vec![ComplexMatrix::identity(d).scale_re((1.0 - q).sqrt())];
        let w = (q / d as f64).sqrt();
        for i in 0..d {
            for j in 0..d {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(i, j)] = c(w, 0.0);
                kraus.push(k);
            }
        }
        Self::new(d, d, kraus)
    }

    /// `X -> tr(X) rho` for a density matrix `rho` on `C^out`, from `C^in`.
    pub fn replacement(in_dim: usize, rho: &ComplexMatrix) -> Result<Self> {
        let e = rho.eigh()?;
        let out = rho.rows();
        let mut kraus = Vec::new();
        for (k, &lam) in e.values.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let v = e.vectors.col(k).scale_re(lam.sqrt());
            for j in 0..in_dim {
                kraus.push(&v * &ComplexMatrix::ket(in_dim, j).dagger());
            }
        }
        Self::new(in_dim, out, kraus)
    }

    /// Schur (diagonal) channel with Kraus operators `diag(v_i)`.
    pub fn schur_channel(diagonals: &[Vec<C64>]) -> Result<Self> {
        let s = diagonals.first().map(|d| d.len()).ok_or_else(|| Error::Invalid("no diagonals".into()))?;
        if diagonals.iter().any(|d| d.len() != s) {
            return Err(Error::Invalid("diagonals of unequal length".into()));
        }
        Self::new(s, s, diagonals.iter().map(|d| ComplexMatrix::diag(d)).collect())
    }

    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    /// `sum_i K_i^dag K_i`.
    pub fn kraus_sum(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            acc = acc + &k.dagger() * k;
        }
        acc
    }

    /// `sum_i K_i K_i^dag`, the image of the identity.
    pub fn image_of_identity(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            acc = acc + k * &k.dagger();
        }
        acc
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.kraus_sum().approx_eq(&ComplexMatrix::identity(self.in_dim), tol)
    }

    pub fn is_trace_nonincreasing(&self, tol: f64) -> bool {
        match self.kraus_sum().eig_range() {
            Ok((_, lmax)) => lmax <= 1.0 + tol,
            Err(_) => false,
        }
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(dim_err("apply", format!("{0}x{0}", self.in_dim), format!("{}x{}", x.rows(), x.cols())));
        }
        let mut acc = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            acc = acc + &(k * x) * &k.dagger();
        }
        Ok(acc)
    }

    pub fn choi(&self) -> ChoiOperator {
        let n = self.out_dim * self.in_dim;
        let mut j = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            let v = vectorize(k);
            j = j + &v * &v.dagger();
        }
        ChoiOperator { in_dim: self.in_dim, out_dim: self.out_dim, matrix: j }
    }

    pub fn choi_rank(&self, tol: f64) -> Result<usize> {
        self.choi().rank(tol)
    }

    /// Equivalent Kraus set with Hilbert-Schmidt orthogonal operators, in
    /// descending order of their squared norms.
    pub fn canonical(&self) -> Result<Self> {
        let ops = self.choi().canonical_kraus(CHOI_RANK_TOL)?;
        Self::new_unchecked(self.in_dim, self.out_dim, ops)
    }

    /// Stinespring isometry `A = sum_i K_i ⊗ |i>` (environment second), built from the
    /// canonical Kraus operators. Returns `(A, environment dimension)`.
    pub fn stinespring(&self) -> Result<(ComplexMatrix, usize)> {
        let can = self.canonical()?;
        let r = can.kraus.len().max(1);
        let mut a = ComplexMatrix::zeros(self.out_dim * r, self.in_dim);
        for (i, k) in can.kraus.iter().enumerate() {
            a = a + k.kron(&ComplexMatrix::ket(r, i));
        }
        Ok((a, r))
    }

    /// `Phi ⊗ Psi`.
    pub fn tensor(&self, other: &Subchannel) -> Result<Self> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kron(b));
            }
        }
        Self::new_unchecked(self.in_dim * other.in_dim, self.out_dim * other.out_dim, kraus)
    }

    /// `q Phi` for `q` in `[0, 1]`.
    pub fn scaled(&self, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Invalid(format!("scale factor {q} outside [0,1]")));
        }
        let s = q.sqrt();
        Self::new_unchecked(self.in_dim, self.out_dim, self.kraus.iter().map(|k| k.scale_re(s)).collect())
    }
}

/// `Psi ∘ Phi`, with Kraus operators `L_j K_i`.
pub fn compose(psi: &Subchannel, phi: &Subchannel) -> Result<Subchannel> {
    if psi.in_dim != phi.out_dim {
        return Err(dim_err("compose", phi.out_dim, psi.in_dim));
    }
    let mut kraus = Vec::with_capacity(psi.kraus.len() * phi.kraus.len());
    for l in &psi.kraus {
        for k in &phi.kraus {
            kraus.push(l * k);
        }
    }
    Subchannel::new_unchecked(phi.in_dim, psi.out_dim, kraus)
}

impl ChoiOperator {
    /// Choi operator of an arbitrary linear map given by its action on matrices.
    pub fn from_map(in_dim: usize, out_dim: usize, f: impl Fn(&ComplexMatrix) -> Result<ComplexMatrix>) -> Result<Self> {
        let n = out_dim * in_dim;
        let mut j = ComplexMatrix::zeros(n, n);
        for a in 0..in_dim {
            for b in 0..in_dim {
                let mut e = ComplexMatrix::zeros(in_dim, in_dim);
                e[(a, b)] = ONE;
                let y = f(&e)?;
                if y.shape() != (out_dim, out_dim) {
                    return Err(dim_err("ChoiOperator::from_map", out_dim, y.rows()));
                }
                for y1 in 0..out_dim {
                    for y2 in 0..out_dim {
                        j[(y1 * in_dim + a, y2 * in_dim + b)] = y[(y1, y2)];
                    }
                }
            }
        }
        Ok(Self { in_dim, out_dim, matrix: j })
    }

    /// `Phi(X) = tr_2(J (1 ⊗ X^T))`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(dim_err("ChoiOperator::apply", self.in_dim, x.rows()));
        }
        let t = ComplexMatrix::identity(self.out_dim).kron(&x.transpose());
        partial_trace(&(&self.matrix * &t), (self.out_dim, self.in_dim), Subsystem::Second)
    }

    /// `tr_1 J`, which equals `(sum K^dag K)^T`.
    pub fn input_marginal(&self) -> Result<ComplexMatrix> {
        partial_trace(&self.matrix, (self.out_dim, self.in_dim), Subsystem::First)
    }

    pub fn rank(&self, tol: f64) -> Result<usize> {
        let e = self.matrix.eigh()?;
        let lmax = e.values.first().copied().unwrap_or(0.0);
        if lmax <= 0.0 {
            return Ok(0);
        }
        Ok(e.values.iter().filter(|&&x| x > tol * lmax).count())
    }

    /// Kraus operators from the spectral decomposition, by descending eigenvalue.
    /// Eigenvalues at or below `tol * lambda_max` are dropped.
    pub fn canonical_kraus(&self, tol: f64) -> Result<Vec<ComplexMatrix>> {
        let e = self.matrix.eigh()?;
        let lmax = e.values.first().copied().unwrap_or(0.0);
        let lmin = e.values.last().copied().unwrap_or(0.0);
        if lmin < -DEFAULT_TOL.max(1e-8) * lmax.max(1.0) {
            return Err(Error::NotPsd { min_eigenvalue: lmin });
        }
        let mut ops = Vec::new();
        for (k, &lam) in e.values.iter().enumerate() {
            if lmax <= 0.0 || lam <= tol * lmax {
                break;
            }
            let v = e.vectors.col(k).scale_re(lam.sqrt());
            ops.push(unvectorize(&v, self.out_dim, self.in_dim)?);
        }
        Ok(ops)
    }

    pub fn to_subchannel(&self) -> Result<Subchannel> {
        Subchannel::new(self.in_dim, self.out_dim, self.canonical_kraus(CHOI_RANK_TOL)?)
    }
}

/// `tr_2(A X A^dag)` for a Stinespring operator with environment dimension `r` second.
pub fn apply_stinespring(a: &ComplexMatrix, out_dim: usize, r: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let y = &(a * x) * &a.dagger();
    partial_trace(&y, (out_dim, r), Subsystem::Second)
}

/// Trace of a matrix as a real number (imaginary part dropped).
pub fn real_trace(x: &ComplexMatrix) -> f64 {
    x.trace().re
}

/// Pure state density matrix `|psi><psi|` from a column vector.
pub fn pure_state(psi: &ComplexMatrix) -> ComplexMatrix {
    psi * &psi.dagger()
}

/// Maximally mixed state `1/d`.
pub fn maximally_mixed(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d).scale_re(1.0 / d as f64)
}
