//! Verification of probabilistic correction schemes and the equivalent
//! characterizations of correctability.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChoiOperator, Subchannel, CHOI_RANK_TOL};
use crate::error::{dim_err, Error, Result};
use crate::matcore::{matrix_sqrt, null_space, unvectorize, vectorize, ComplexMatrix, RANK_TOL, ZERO};

/// Encoder `S: C^d -> C^s` and recovery `R: C^s' -> C^d` with `R ∘ E ∘ S ≈ p · id`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scheme {
    pub encoder: Subchannel,
    pub recovery: Subchannel,
    #[serde(rename = "p")]
    pub success_prob: f64,
    pub residual: f64,
}

/// Least-squares fit of the logical Choi operator to `p |1><1|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verification {
    pub p: f64,
    pub residual: f64,
    pub passed: bool,
}

/// Operators `S*` (s x d) and `R*` (d x s') with `R* E_i S* = c_i 1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionDWitness {
    pub s_star: ComplexMatrix,
    pub r_star: ComplexMatrix,
    pub coeffs: Vec<C64>,
}

impl ConditionDWitness {
    /// Bundles `S*` and `R*`, computing `c_i = tr(R* E_i S*)/d` over the Kraus list of `e`.
    pub fn from_parts(e: &Subchannel, s_star: ComplexMatrix, r_star: ComplexMatrix) -> Result<Self> {
        let d = s_star.cols();
        if s_star.rows() != e.in_dim || r_star.shape() != (d, e.out_dim) {
            return Err(dim_err(
                "witness",
                format!("S* {}x{d}, R* {d}x{}", e.in_dim, e.out_dim),
                format!("S* {:?}, R* {:?}", s_star.shape(), r_star.shape()),
            ));
        }
        let coeffs = e.kraus.iter().map(|k| (&(&r_star * k) * &s_star).trace() / d as f64).collect();
        Ok(Self { s_star, r_star, coeffs })
    }
}

fn check_scheme_dims(e: &Subchannel, enc: &Subchannel, rec: &Subchannel) -> Result<usize> {
    let d = enc.in_dim;
    if enc.out_dim != e.in_dim {
        return Err(dim_err("encoder output", e.in_dim, enc.out_dim));
    }
    if rec.in_dim != e.out_dim {
        return Err(dim_err("recovery input", e.out_dim, rec.in_dim));
    }
    if rec.out_dim != d {
        return Err(dim_err("recovery output", d, rec.out_dim));
    }
    Ok(d)
}

/// Choi operator of `R ∘ E ∘ S`.
pub fn logical_choi(e: &Subchannel, enc: &Subchannel, rec: &Subchannel) -> Result<ChoiOperator> {
    let d = check_scheme_dims(e, enc, rec)?;
    ChoiOperator::from_map(d, d, |x| rec.apply(&e.apply(&enc.apply(x)?)?))
}

/// Fits `J(R∘E∘S)` to `p |1><1|`. The scheme passes when the residual is at most
/// `tol * max(1, p d)`.
pub fn verify_scheme(e: &Subchannel, enc: &Subchannel, rec: &Subchannel, tol: f64) -> Result<Verification> {
    let j = logical_choi(e, enc, rec)?;
    let d = enc.in_dim;
    let one = vectorize(&ComplexMatrix::identity(d));
    let p = (one.inner(&(&j.matrix * &one)).re / (d * d) as f64).max(0.0);
    let residual = (&j.matrix - (&one * &one.dagger()).scale_re(p)).frobenius_norm();
    Ok(Verification { p, residual, passed: residual <= tol * (p * d as f64).max(1.0) })
}

impl Scheme {
    /// Verifies and packages a scheme; fails if the residual test fails.
    pub fn build(e: &Subchannel, encoder: Subchannel, recovery: Subchannel, tol: f64) -> Result<Self> {
        let v = verify_scheme(e, &encoder, &recovery, tol)?;
        if !v.passed {
            return Err(Error::NotProportional { what: "R∘E∘S".into(), deviation: v.residual });
        }
        Ok(Self { encoder, recovery, success_prob: v.p, residual: v.residual })
    }

    /// Packages a scheme with its fitted `p` and residual whether or not it passes.
    pub fn fitted(e: &Subchannel, encoder: Subchannel, recovery: Subchannel, tol: f64) -> Result<(Self, bool)> {
        let v = verify_scheme(e, &encoder, &recovery, tol)?;
        Ok((Self { encoder, recovery, success_prob: v.p, residual: v.residual }, v.passed))
    }

    pub fn verify(&self, e: &Subchannel, tol: f64) -> Result<Verification> {
        verify_scheme(e, &self.encoder, &self.recovery, tol)
    }

    pub fn logical_dim(&self) -> usize {
        self.encoder.in_dim
    }

    /// `sum_l R_l^dag R_l`, the operator used by the trace conditions.
    pub fn recovery_operator(&self) -> ComplexMatrix {
        self.recovery.kraus_sum()
    }
}

fn check_r_op(r_op: &ComplexMatrix, dim: usize, tol: f64) -> Result<()> {
    if r_op.shape() != (dim, dim) {
        return Err(dim_err("R operator", format!("{dim}x{dim}"), format!("{:?}", r_op.shape())));
    }
    if !r_op.is_hermitian(tol.max(1e-12)) {
        return Err(Error::NotHermitian { deviation: r_op.hermitian_deviation() });
    }
    let (lmin, lmax) = r_op.eig_range()?;
    let slack = tol.max(1e-9);
    if lmin < -slack {
        return Err(Error::NotPsd { min_eigenvalue: lmin });
    }
    if lmax > 1.0 + slack {
        return Err(Error::NotContraction { norm: lmax });
    }
    Ok(())
}

/// Outcome of the orthogonality test on the canonical Kraus operators of `sqrt(R) E S`.
#[derive(Clone, Debug)]
pub struct ConditionBReport {
    pub ops: Vec<ComplexMatrix>,
    pub alphas: Vec<f64>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Canonicalizes `{sqrt(R) E_i S_k}` to `A_i` and tests `A_j^dag A_i ∝ δ_ij 1`.
pub fn check_condition_b(e: &Subchannel, enc: &Subchannel, r_op: &ComplexMatrix, tol: f64) -> Result<ConditionBReport> {
    if enc.out_dim != e.in_dim {
        return Err(dim_err("encoder output", e.in_dim, enc.out_dim));
    }
    check_r_op(r_op, e.out_dim, tol)?;
    let sq = matrix_sqrt(r_op, tol.max(1e-9))?;
    let mut ops = Vec::with_capacity(e.kraus.len() * enc.kraus.len());
    for ei in &e.kraus {
        let se = &sq * ei;
        for sk in &enc.kraus {
            ops.push(&se * sk);
        }
    }
    let d = enc.in_dim;
    let can = Subchannel::new_unchecked(d, e.out_dim, ops)?.canonical()?;
    let a = can.kraus;
    let mut alphas = Vec::with_capacity(a.len());
    let mut max_dev: f64 = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            let g = &a[j].dagger() * &a[i];
            let dev = if i == j {
                alphas.push(g.trace().re / d as f64);
                g.identity_deviation() / g.frobenius_norm().max(1.0)
            } else {
                g.frobenius_norm() / (a[i].frobenius_norm() * a[j].frobenius_norm()).max(1.0)
            };
            max_dev = max_dev.max(dev);
        }
    }
    Ok(ConditionBReport { ops: a, alphas, max_deviation: max_dev, passed: max_dev <= tol })
}

/// The coefficient matrix `M` with `S_l^dag E_j^dag R E_i S_k = M_{jl,ik} 1`.
/// Rows and columns are indexed by `(i, k) -> i * n_S + k`.
#[derive(Clone, Debug)]
pub struct ConditionCReport {
    pub m: ComplexMatrix,
    pub r_op: ComplexMatrix,
    pub trace_m: f64,
    pub max_deviation: f64,
}

/// Builds `M` and checks that every block is proportional to the identity. On failure
/// the error names the worst block `(j,l,i,k)`.
pub fn build_condition_c(e: &Subchannel, enc: &Subchannel, r_op: &ComplexMatrix, tol: f64) -> Result<ConditionCReport> {
    if enc.out_dim != e.in_dim {
        return Err(dim_err("encoder output", e.in_dim, enc.out_dim));
    }
    check_r_op(r_op, e.out_dim, tol)?;
    let d = enc.in_dim;
    let ns = enc.kraus.len();
    let f: Vec<ComplexMatrix> = e.kraus.iter().flat_map(|ei| enc.kraus.iter().map(move |sk| ei * sk)).collect();
    let rf: Vec<ComplexMatrix> = f.iter().map(|fk| r_op * fk).collect();
    let n = f.len();
    let mut m = ComplexMatrix::zeros(n, n);
    let mut worst = (0.0f64, (0, 0, 0, 0));
    for row in 0..n {
        let fd = f[row].dagger();
        for col in 0..n {
            let b = &fd * &rf[col];
            let dev = b.identity_deviation() / b.frobenius_norm().max(1.0);
            if dev > worst.0 {
                worst = (dev, (row / ns, row % ns, col / ns, col % ns));
            }
            m[(row, col)] = b.trace() / d as f64;
        }
    }
    if worst.0 > tol {
        let (j, l, i, k) = worst.1;
        return Err(Error::NotProportional { what: format!("block (j,l,i,k)=({j},{l},{i},{k})"), deviation: worst.0 });
    }
    let trace_m = m.trace().re;
    Ok(ConditionCReport { m, r_op: r_op.clone(), trace_m, max_deviation: worst.0 })
}

/// Recovery built from the spectral decomposition of `M`: with `A_m = sum_k W_{k,m} sqrt(R) E_a S_b`
/// (`k = (a,b)`, `W` the eigenvectors of `M`), the Kraus operators are `alpha_m^{-1/2} A_m^dag sqrt(R)`.
pub fn recovery_from_m(report: &ConditionCReport, e: &Subchannel, enc: &Subchannel, tol: f64) -> Result<Subchannel> {
    let n = e.kraus.len() * enc.kraus.len();
    if report.m.shape() != (n, n) {
        return Err(dim_err("M", format!("{n}x{n}"), format!("{:?}", report.m.shape())));
    }
    let d = enc.in_dim;
    let eig = report.m.eigh()?;
    let dmax = eig.values.first().copied().unwrap_or(0.0);
    let dmin = eig.values.last().copied().unwrap_or(0.0);
    if dmin < -tol.max(1e-9) * dmax.max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: dmin });
    }
    let sq = matrix_sqrt(&report.r_op, tol.max(1e-9))?;
    let sf: Vec<ComplexMatrix> =
        e.kraus.iter().flat_map(|ei| enc.kraus.iter().map(move |sk| ei * sk)).map(|fk| &sq * &fk).collect();
    let mut kraus = Vec::new();
    for (mi, &alpha) in eig.values.iter().enumerate() {
        if dmax <= 0.0 || alpha <= CHOI_RANK_TOL * dmax {
            break;
        }
        let mut a = ComplexMatrix::zeros(e.out_dim, d);
        for (k, op) in sf.iter().enumerate() {
            let w = eig.vectors[(k, mi)];
            if w != ZERO {
                a = a + op.scale(w);
            }
        }
        let g = &a.dagger() * &a;
        if g.identity_deviation() > tol.max(1e-9) * g.frobenius_norm().max(1.0) {
            return Err(Error::NotProportional { what: format!("A_{mi}^dag A_{mi}"), deviation: g.identity_deviation() });
        }
        kraus.push(&a.dagger() * &sq.scale_re(1.0 / alpha.sqrt()));
    }
    Subchannel::new(e.out_dim, d, kraus)
}

/// Result of testing a witness.
#[derive(Clone, Debug)]
pub struct ConditionDReport {
    pub passed: bool,
    /// `c_i = tr(R* E_i S*)/d` for the witness as given.
    pub coeffs: Vec<C64>,
    pub max_deviation: f64,
    /// Scheme with `S = S*/||S*||`, `R = R*/||R*||`, present when the witness passes.
    pub scheme: Option<Scheme>,
}

/// Tests `R* E_i S* ∝ 1` with some nonzero coefficient. The test runs on the
/// operator-norm normalized witness, so it is invariant under rescaling `S*` and `R*`.
pub fn check_condition_d(e: &Subchannel, w: &ConditionDWitness, tol: f64) -> Result<ConditionDReport> {
    let d = w.s_star.cols();
    if w.s_star.rows() != e.in_dim || w.r_star.shape() != (d, e.out_dim) || d == 0 {
        return Err(dim_err(
            "witness",
            format!("S* {}xd, R* dx{}", e.in_dim, e.out_dim),
            format!("S* {:?}, R* {:?}", w.s_star.shape(), w.r_star.shape()),
        ));
    }
    let coeffs: Vec<C64> = e.kraus.iter().map(|k| (&(&w.r_star * k) * &w.s_star).trace() / d as f64).collect();
    let ns = w.s_star.op_norm();
    let nr = w.r_star.op_norm();
    if ns == 0.0 || nr == 0.0 {
        return Ok(ConditionDReport { passed: false, coeffs, max_deviation: f64::INFINITY, scheme: None });
    }
    let s_hat = w.s_star.scale_re(1.0 / ns);
    let r_hat = w.r_star.scale_re(1.0 / nr);
    let mut max_dev: f64 = 0.0;
    let mut max_c: f64 = 0.0;
    for k in &e.kraus {
        let a = &(&r_hat * k) * &s_hat;
        max_dev = max_dev.max(a.identity_deviation() / a.frobenius_norm().max(1.0));
        max_c = max_c.max((a.trace() / d as f64).norm());
    }
    let passed = max_dev <= tol && max_c > tol;
    let scheme = if passed {
        let enc = Subchannel::new(d, e.in_dim, vec![s_hat])?;
        let rec = Subchannel::new(e.out_dim, d, vec![r_hat])?;
        Some(Scheme::fitted(e, enc, rec, tol)?.0)
    } else {
        None
    };
    Ok(ConditionDReport { passed, coeffs, max_deviation: max_dev, scheme })
}

/// Solves `F_i S = c_i 1` (each `F_i` is d x s) through the null space of
/// `L_i(S) = F_i S - tr(F_i S)/d 1`. Among null-space basis vectors and their pairwise
/// sums, the one maximizing `max_i |c_i|` is returned with `R* = 1`.
pub fn solve_linear_condition_d(f: &[ComplexMatrix], tol: f64) -> Result<Option<ConditionDWitness>> {
    let (d, s) = match f.first() {
        Some(x) => x.shape(),
        None => return Err(Error::Invalid("solve_linear_condition_d: empty operator list".into())),
    };
    if f.iter().any(|x| x.shape() != (d, s)) || d == 0 || s == 0 {
        return Err(Error::Invalid("solve_linear_condition_d: operators of unequal shape".into()));
    }
    let nvar = s * d;
    let mut l = ComplexMatrix::zeros(f.len() * d * d, nvar);
    for a in 0..s {
        for b in 0..d {
            let col = a * d + b;
            for (i, fi) in f.iter().enumerate() {
                // F_i |a><b| has column b equal to column a of F_i.
                let tr = fi[(b, a)] / d as f64;
                for x in 0..d {
                    for y in 0..d {
                        let mut v = if y == b { fi[(x, a)] } else { ZERO };
                        if x == y {
                            v -= tr;
                        }
                        l[(i * d * d + x * d + y, col)] = v;
                    }
                }
            }
        }
    }
    let ns = null_space(&l, tol)?;
    let k = ns.cols();
    if k == 0 {
        return Ok(None);
    }
    let coeffs_of = |v: &ComplexMatrix| -> Result<(ComplexMatrix, Vec<C64>)> {
        let sm = unvectorize(v, s, d)?;
        let c = f.iter().map(|fi| (fi * &sm).trace() / d as f64).collect();
        Ok((sm, c))
    };
    let mut candidates: Vec<ComplexMatrix> = (0..k).map(|j| ns.col(j)).collect();
    for a in 0..k {
        for b in (a + 1)..k {
            let v = ns.col(a) + ns.col(b);
            candidates.push(v.scale_re(std::f64::consts::FRAC_1_SQRT_2));
        }
    }
    let mut best: Option<(f64, ComplexMatrix, Vec<C64>)> = None;
    for v in &candidates {
        let (sm, c) = coeffs_of(v)?;
        let cmax = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if best.as_ref().map_or(true, |(b, _, _)| cmax > *b) {
            best = Some((cmax, sm, c));
        }
    }
    let (cmax, sm, coeffs) = best.expect("at least one candidate");
    let scale = f.iter().map(|x| x.op_norm()).fold(0.0, f64::max).max(1.0);
    if cmax <= tol * scale {
        return Ok(None);
    }
    Ok(Some(ConditionDWitness { s_star: sm, r_star: ComplexMatrix::identity(d), coeffs }))
}

/// Isometry `V_Π` onto the support of `E(1)` and the reduced operators `F_i = V_Π^dag E_i`.
/// Fails unless that support has dimension exactly `d`.
pub fn reduce_full_output_rank(e: &Subchannel, d: usize) -> Result<(ComplexMatrix, Vec<ComplexMatrix>)> {
    let img = e.image_of_identity();
    let eig = img.eigh()?;
    let lmax = eig.values.first().copied().unwrap_or(0.0);
    let rank = eig.values.iter().filter(|&&x| x > RANK_TOL * lmax).count();
    if rank != d {
        return Err(Error::Precondition(format!("rank of E(1) is {rank}, expected {d}")));
    }
    let v = eig.vectors.block(0, 0, e.out_dim, d);
    let f = e.kraus.iter().map(|k| &v.dagger() * k).collect();
    Ok((v, f))
}

/// Solves the linear problem for `F_i = V^dag E_i` with a given isometry `V` (s' x d) and
/// lifts the answer to a witness for `E` with `R* = V^dag`.
pub fn projected_linear_witness(e: &Subchannel, v: &ComplexMatrix, tol: f64) -> Result<Option<ConditionDWitness>> {
    if v.rows() != e.out_dim {
        return Err(dim_err("projection isometry rows", e.out_dim, v.rows()));
    }
    let vd = v.dagger();
    let f: Vec<ComplexMatrix> = e.kraus.iter().map(|k| &vd * k).collect();
    match solve_linear_condition_d(&f, tol)? {
        None => Ok(None),
        Some(w) => Ok(Some(ConditionDWitness::from_parts(e, w.s_star, vd)?)),
    }
}

/// Reduction through the support of `E(1)` followed by the linear solve.
pub fn linear_witness(e: &Subchannel, d: usize, tol: f64) -> Result<Option<ConditionDWitness>> {
    let (v, _) = reduce_full_output_rank(e, d)?;
    projected_linear_witness(e, &v, tol)
}

/// Deterministic error correction test: `S^dag E_j^dag E_i S ∝ 1` for an isometry `S`.
pub fn kl_check(e: &Subchannel, s_iso: &ComplexMatrix, tol: f64) -> Result<bool> {
    if s_iso.rows() != e.in_dim {
        return Err(dim_err("isometry rows", e.in_dim, s_iso.rows()));
    }
    let dev = crate::matcore::orthonormality_deviation(s_iso);
    if dev > 1e-8 {
        return Err(Error::NotOrthonormal { deviation: dev });
    }
    let es: Vec<ComplexMatrix> = e.kraus.iter().map(|k| k * s_iso).collect();
    for a in &es {
        let ad = a.dagger();
        for b in &es {
            if !(&ad * b).is_proportional_to_identity(tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Moves the encoder normalization into the recovery: with `S = sum S_k^dag S_k`, the new
/// encoder has Kraus operators `S_k S^{-1/2}` and the new recovery `S^{1/2} R_l`.
pub fn realization_shift(e: &Subchannel, scheme: &Scheme, tol: f64) -> Result<Scheme> {
    let s = scheme.encoder.kraus_sum();
    let (lmin, lmax) = s.eig_range()?;
    if lmin <= RANK_TOL * lmax.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(format!("encoder normalization has eigenvalue {lmin:.3e}")));
    }
    let s_half = s.hermitian_fn(|x| x.sqrt())?;
    let s_inv_half = s.hermitian_fn(|x| 1.0 / x.sqrt())?;
    let enc = Subchannel::new(
        scheme.encoder.in_dim,
        scheme.encoder.out_dim,
        scheme.encoder.kraus.iter().map(|k| k * &s_inv_half).collect(),
    )?;
    let rec = Subchannel::new(
        scheme.recovery.in_dim,
        scheme.recovery.out_dim,
        scheme.recovery.kraus.iter().map(|k| &s_half * k).collect(),
    )?;
    Scheme::build(e, enc, rec, tol)
}

/// Trace-preserving decoder `Y -> R(Y) ⊗ |0><0| + tr((1 - sum R^dag R) Y) 1/d ⊗ |1><1|`.
/// The output space is `C^d ⊗ C^2` with the flag as the second factor.
pub fn flagged_decoder(rec: &Subchannel) -> Result<Subchannel> {
    let d = rec.out_dim;
    let s = rec.in_dim;
    let flag0 = ComplexMatrix::identity(d).kron(&ComplexMatrix::ket(2, 0));
    let mut kraus: Vec<ComplexMatrix> = rec.kraus.iter().map(|k| &flag0 * k).collect();
    let rest = ComplexMatrix::identity(s) - rec.kraus_sum();
    let eig = rest.eigh()?;
    for (m, &mu) in eig.values.iter().enumerate() {
        if mu <= 0.0 {
            continue;
        }
        let w = eig.vectors.col(m).dagger();
        for x in 0..d {
            let out = ComplexMatrix::ket(d, x).kron(&ComplexMatrix::ket(2, 1));
            kraus.push((&out * &w).scale_re((mu / d as f64).sqrt()));
        }
    }
    Subchannel::new(s, 2 * d, kraus)
}

/// Branch of a flagged decoder with the given flag value, as a map into `C^d`.
pub fn flag_branch(dec: &Subchannel, flag: usize) -> Result<Subchannel> {
    if dec.out_dim % 2 != 0 || flag > 1 {
        return Err(Error::Invalid("flag_branch expects an output of the form C^d ⊗ C^2".into()));
    }
    let d = dec.out_dim / 2;
    let proj = ComplexMatrix::identity(d).kron(&ComplexMatrix::ket(2, flag).dagger());
    Subchannel::new(dec.in_dim, d, dec.kraus.iter().map(|k| &proj * k).collect())
}

fn check_weights(ens: &[(f64, Subchannel)]) -> Result<()> {
    if ens.is_empty() {
        return Err(Error::Invalid("empty ensemble".into()));
    }
    if ens.iter().any(|(w, _)| !(*w >= 0.0)) {
        return Err(Error::Invalid("ensemble weights must be nonnegative".into()));
    }
    let total: f64 = ens.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("ensemble weights sum to {total}")));
    }
    let (i0, o0) = (ens[0].1.in_dim, ens[0].1.out_dim);
    if ens.iter().any(|(_, c)| c.in_dim != i0 || c.out_dim != o0) {
        return Err(Error::Invalid("ensemble members have different dimensions".into()));
    }
    Ok(())
}

/// Convex mixture `sum_e w_e E_e`, returned in canonical Kraus form.
pub fn average_channel(ens: &[(f64, Subchannel)]) -> Result<Subchannel> {
    check_weights(ens)?;
    let (i0, o0) = (ens[0].1.in_dim, ens[0].1.out_dim);
    let mut kraus = Vec::new();
    for (w, ch) in ens {
        let s = w.sqrt();
        kraus.extend(ch.kraus.iter().map(|k| k.scale_re(s)));
    }
    Subchannel::new_unchecked(i0, o0, kraus)?.canonical()
}

/// Per-member success probabilities for a scheme that corrects the ensemble average.
#[derive(Clone, Debug)]
pub struct EnsembleReport {
    pub p_average: f64,
    pub members: Vec<f64>,
    pub weighted_sum: f64,
}

/// Verifies the scheme on the average channel, then on each member.
pub fn check_ensemble(ens: &[(f64, Subchannel)], enc: &Subchannel, rec: &Subchannel, tol: f64) -> Result<EnsembleReport> {
    let avg = average_channel(ens)?;
    let v = verify_scheme(&avg, enc, rec, tol)?;
    if !v.passed {
        return Err(Error::NotProportional { what: "scheme on the average channel".into(), deviation: v.residual });
    }
    let mut members = Vec::with_capacity(ens.len());
    for (idx, (_, ch)) in ens.iter().enumerate() {
        let vm = verify_scheme(ch, enc, rec, tol)?;
        if !vm.passed {
            return Err(Error::ConstructionFailed(format!(
                "member {idx} is not mapped to a multiple of the identity (residual {:.3e})",
                vm.residual
            )));
        }
        members.push(vm.p);
    }
    let weighted_sum = ens.iter().zip(&members).map(|((w, _), p)| w * p).sum();
    Ok(EnsembleReport { p_average: v.p, members, weighted_sum })
}

/// `tr(R E S(rho))` for a density matrix `rho`.
pub fn acceptance_probability(e: &Subchannel, scheme: &Scheme, rho: &ComplexMatrix) -> Result<f64> {
    let out = scheme.recovery.apply(&e.apply(&scheme.encoder.apply(rho)?)?)?;
    Ok(out.trace().re)
}
