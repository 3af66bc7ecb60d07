//! Explicit codes: the qubit code for rank-2 channels on four dimensions and its circuit,
//! Schur-channel codes, the E_R family with its optimal schemes, and the channels that
//! saturate or break the rank bounds.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channel::{Subchannel, CHOI_RANK_TOL};
use crate::error::{dim_err, Error, Result};
use crate::matcore::{
    c, matrix_sqrt, null_space, partial_trace, pseudo_inverse, unitary_completion, unitary_dilation, unitary_mapping,
    ComplexMatrix, Subsystem, I, ONE, RANK_TOL, ZERO,
};
use crate::pqec::{check_condition_d, projected_linear_witness, ConditionDWitness, Scheme};

/// Names accepted by the `construct` front end.
pub const CONSTRUCTORS: &[&str] =
    &["qubit-rank2", "schur", "er-family", "rank-sat-xi", "rank-sat-xi1", "rank-bound-xi", "rank-bound-xi1"];

/// Unitaries of the two-stage qubit correction circuit and its acceptance probability.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QubitCodeCircuit {
    pub u_s: ComplexMatrix,
    pub u_r: ComplexMatrix,
    pub v_r: ComplexMatrix,
    pub p: f64,
}

/// Eigenvalues of `R = U diag(lambda) U^dag` in the magic basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicFamilyParams {
    pub lambda: [f64; 4],
}

/// `E_k = U_k D_k V` for a pair of Kraus operators with `E_0^dag E_0 + E_1^dag E_1 = 1`.
#[derive(Clone, Debug)]
pub struct JointSvd {
    pub v: ComplexMatrix,
    pub u0: ComplexMatrix,
    pub d0: Vec<f64>,
    pub u1: ComplexMatrix,
    pub d1: Vec<f64>,
}

/// Which rank-saturating or counterexample family to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankFamily {
    /// Every channel of rank below the bound admits a scheme with some `p > 0`.
    Xi,
    /// Every channel of rank below the bound admits a scheme with `p = 1`.
    Xi1,
}

impl std::str::FromStr for RankFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(Self::Xi),
            "xi1" => Ok(Self::Xi1),
            other => Err(Error::Invalid(format!("unknown rank family '{other}' (expected xi or xi1)"))),
        }
    }
}

fn unitary_columns_from(cols: &[ComplexMatrix], slots: &[usize], n: usize) -> Result<ComplexMatrix> {
    // Gram-Schmidt the given columns so that the completion sees exact orthonormality.
    let mut ortho: Vec<ComplexMatrix> = Vec::new();
    for v in cols {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &ortho {
                let proj = b.inner(&r);
                r = r - b.scale(proj);
            }
        }
        let nr = r.frobenius_norm();
        ortho.push(r.scale_re(1.0 / nr));
    }
    let m = if ortho.is_empty() { ComplexMatrix::zeros(n, 0) } else { ComplexMatrix::hstack(&ortho)? };
    unitary_completion(&m, slots)
}

/// Joint decomposition with `V` from the eigenvectors of `E_0^dag E_0`, `D_1 = sqrt(1 - D_0^2)`,
/// and the columns of `U_k` with vanishing `D_k` completed to an orthonormal basis.
pub fn joint_svd(e0: &ComplexMatrix, e1: &ComplexMatrix, tol: f64) -> Result<JointSvd> {
    let n = e0.cols();
    let eig = (&e0.dagger() * e0).eigh()?;
    let w = eig.vectors;
    let d0: Vec<f64> = eig.values.iter().map(|&x| x.clamp(0.0, 1.0).sqrt()).collect();
    let d1: Vec<f64> = d0.iter().map(|&x| (1.0 - x * x).max(0.0).sqrt()).collect();
    let build_u = |e: &ComplexMatrix, dk: &[f64]| -> Result<ComplexMatrix> {
        let mut cols = Vec::new();
        let mut slots = Vec::new();
        for i in 0..n {
            if dk[i] > tol.max(RANK_TOL) {
                cols.push(&(e * &w.col(i)).scale_re(1.0 / dk[i]) * &ComplexMatrix::identity(1));
                slots.push(i);
            }
        }
        unitary_columns_from(&cols, &slots, e.rows())
    };
    let u0 = build_u(e0, &d0)?;
    let u1 = build_u(e1, &d1)?;
    Ok(JointSvd { v: w.dagger(), u0, d0, u1, d1 })
}

fn norm2(v: &ComplexMatrix) -> f64 {
    v.frobenius_norm().powi(2)
}

fn independent(x: &ComplexMatrix, y: &ComplexMatrix, tol: f64) -> Option<f64> {
    let (nx, ny) = (norm2(x), norm2(y));
    if nx.sqrt() <= tol || ny.sqrt() <= tol {
        return None;
    }
    let det = nx * ny - x.inner(y).norm_sqr();
    let q = det / (nx * ny);
    (q > tol).then_some(q)
}

fn solve2(a: [[C64; 2]; 2], rhs: [C64; 2]) -> Result<[C64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.norm() == 0.0 {
        return Err(Error::Singular("2x2 system".into()));
    }
    Ok([(rhs[0] * a[1][1] - a[0][1] * rhs[1]) / det, (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det])
}

struct Candidate {
    s0: ComplexMatrix,
    s1: ComplexMatrix,
    r0: ComplexMatrix,
    r1: ComplexMatrix,
}

/// Witness for a channel on `C^4` with at most two Kraus operators, encoding one qubit.
///
/// The construction works in the joint singular basis, with `x_i = E_0 V^dag |i>` and
/// `y_i = E_1 V^dag |i>`, and distinguishes three situations: some pair `(x_i, y_i)` is
/// linearly independent; at least two `y_i` vanish; or every pair is dependent with at most
/// one vanishing `y_i`. Candidates are tried in that order and the first that passes
/// `check_condition_d` is returned.
pub fn qubit_rank2_witness(e: &Subchannel, tol: f64) -> Result<ConditionDWitness> {
    if e.in_dim != 4 || e.out_dim != 4 {
        return Err(Error::Precondition(format!("expected a channel on C^4, got {}->{}", e.in_dim, e.out_dim)));
    }
    if !e.is_trace_preserving(1e-8) {
        return Err(Error::Precondition("channel is not trace preserving".into()));
    }
    let can = e.canonical()?;
    if can.kraus.len() > 2 {
        return Err(Error::Precondition(format!("Choi rank {} exceeds 2", can.kraus.len())));
    }
    let zero = ComplexMatrix::zeros(4, 4);
    let e0 = can.kraus.first().cloned().unwrap_or_else(|| zero.clone());
    let e1 = can.kraus.get(1).cloned().unwrap_or(zero);
    let w = (&e0.dagger() * &e0).eigh()?.vectors;
    let xs: Vec<ComplexMatrix> = (0..4).map(|i| &e0 * &w.col(i)).collect();
    let ys: Vec<ComplexMatrix> = (0..4).map(|i| &e1 * &w.col(i)).collect();
    let ket = |i: usize| ComplexMatrix::ket(4, i);

    let mut candidates: Vec<Candidate> = Vec::new();

    // Some (x_i, y_i) linearly independent, best conditioned first.
    let mut indep: Vec<(f64, usize)> = (0..4).filter_map(|i| independent(&xs[i], &ys[i], tol).map(|q| (q, i))).collect();
    indep.sort_by(|a, b| b.0.total_cmp(&a.0));
    for &(_, i3) in &indep {
        let rest: Vec<usize> = (0..4).filter(|&i| i != i3).collect();
        let (x3, y3) = (&xs[i3], &ys[i3]);
        let m = ComplexMatrix::from_fn(2, 3, |r, j| if r == 0 { y3.inner(&xs[rest[j]]) } else { x3.inner(&ys[rest[j]]) });
        let ns = null_space(&m, 1e-12)?;
        for k in 0..ns.cols() {
            let a = ns.col(k);
            let mut x = ComplexMatrix::zeros(4, 1);
            let mut y = ComplexMatrix::zeros(4, 1);
            let mut s0 = ComplexMatrix::zeros(4, 1);
            for j in 0..3 {
                x = x + xs[rest[j]].scale(a[(j, 0)]);
                y = y + ys[rest[j]].scale(a[(j, 0)]);
                s0 = s0 + ket(rest[j]).scale(a[(j, 0)]);
            }
            let r0 = if norm2(&x) >= norm2(&y) { x.clone() } else { y.clone() };
            if r0.frobenius_norm() <= tol {
                continue;
            }
            let g = [[x3.inner(x3), y3.inner(x3)], [x3.inner(y3), y3.inner(y3)]];
            let b = match solve2(g, [r0.inner(&x), r0.inner(&y)]) {
                Ok(b) => b,
                Err(_) => continue,
            };
            let r1 = x3.scale(b[0].conj()) + y3.scale(b[1].conj());
            candidates.push(Candidate { s0, s1: ket(i3), r0, r1 });
        }
    }

    // At least two vanishing y_i.
    let zero_y: Vec<usize> = (0..4).filter(|&i| ys[i].frobenius_norm() <= tol).collect();
    if zero_y.len() >= 2 {
        let (i0, i1) = (zero_y[0], zero_y[1]);
        let (n0, n1) = (norm2(&xs[i0]), norm2(&xs[i1]));
        if n0 > 0.0 && n1 > 0.0 {
            candidates.push(Candidate {
                s0: ket(i0),
                s1: ket(i1),
                r0: xs[i0].scale_re(1.0 / n0),
                r1: xs[i1].scale_re(1.0 / n1),
            });
        }
    }

    // Every pair dependent, at most one vanishing y_i.
    if zero_y.len() <= 1 {
        let drops: Vec<usize> = if zero_y.len() == 1 { zero_y.clone() } else { (0..4).rev().collect() };
        for i3 in drops {
            let idx: Vec<usize> = (0..4).filter(|&i| i != i3).collect();
            let col = |j: usize| [ys[idx[j]].inner(&xs[idx[j]]), c(norm2(&ys[idx[j]]), 0.0)];
            let cols: Vec<[C64; 2]> = (0..3).map(col).collect();
            let cn = |v: &[C64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            let minor = |a: usize, b: usize| {
                let det = cols[a][0] * cols[b][1] - cols[b][0] * cols[a][1];
                det.norm() / (cn(&cols[a]) * cn(&cols[b])).max(f64::MIN_POSITIVE)
            };
            let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
            let (best_pair, best_minor) =
                pairs.iter().map(|&(a, b)| ((a, b), minor(a, b))).max_by(|p, q| p.1.total_cmp(&q.1)).expect("three pairs");
            if best_minor <= tol {
                let (y0, y1) = (&ys[idx[0]], &ys[idx[1]]);
                let (n0, n1) = (norm2(y0), norm2(y1));
                if n0 <= 0.0 || n1 <= 0.0 {
                    continue;
                }
                let b = n1 / n0;
                candidates.push(Candidate { s0: ket(idx[0]), s1: ket(idx[1]), r0: y0.clone(), r1: y1.scale_re(1.0 / b) });
            } else {
                let (j1, j2) = best_pair;
                let j0 = 3 - j1 - j2;
                let n = [[cols[j1][0], cols[j2][0]], [cols[j1][1], cols[j2][1]]];
                let b = match solve2(n, cols[j0]) {
                    Ok(b) => b,
                    Err(_) => continue,
                };
                let r1 = ys[idx[j1]].scale(b[0].conj()) + ys[idx[j2]].scale(b[1].conj());
                candidates.push(Candidate {
                    s0: ket(idx[j0]),
                    s1: ket(idx[j1]) + ket(idx[j2]),
                    r0: ys[idx[j0]].clone(),
                    r1,
                });
            }
        }
    }

    for cand in candidates {
        let s_star = &w * &ComplexMatrix::hstack(&[cand.s0, cand.s1])?;
        let r_star = ComplexMatrix::vstack(&[cand.r0.dagger(), cand.r1.dagger()])?;
        let wit = ConditionDWitness::from_parts(e, s_star, r_star)?;
        if check_condition_d(e, &wit, tol)?.passed {
            return Ok(wit);
        }
    }
    Err(Error::ConstructionFailed("no candidate witness passed the proportionality test".into()))
}

/// Normalizes a qubit witness into an isometric encoder and a contraction recovery and
/// compiles both into the two-stage circuit.
pub fn qubit_code_circuit(e: &Subchannel, tol: f64) -> Result<(QubitCodeCircuit, Scheme)> {
    let w = qubit_rank2_witness(e, tol)?;
    let q = &w.s_star.dagger() * &w.s_star;
    let q_inv_half = q.hermitian_fn(|x| 1.0 / x.sqrt())?;
    let q_half = q.hermitian_fn(|x| x.max(0.0).sqrt())?;
    let s = &w.s_star * &q_inv_half;
    let rt = &q_half * &w.r_star;
    let r = rt.scale_re(1.0 / rt.op_norm());

    let u_s = unitary_columns_from(&[s.col(0), s.col(1)], &[0, 2], 4)?;

    let svd = r.svd()?;
    let t1 = svd.v.col(0);
    let t2 = if svd.sigma[1] > RANK_TOL * svd.sigma[0] {
        svd.v.col(1)
    } else {
        unitary_completion(&t1, &[0])?.col(1)
    };
    let from = unitary_columns_from(&[t1, t2], &[0, 1], 4)?.block(0, 0, 4, 2);
    let to = ComplexMatrix::hstack(&[ComplexMatrix::ket(4, 0), ComplexMatrix::ket(4, 2)])?;
    let u_r = unitary_mapping(&from, &to)?;

    let anc0 = ComplexMatrix::identity(2).kron(&ComplexMatrix::ket(2, 0));
    let r_prime = &(&r * &u_r.dagger()) * &anc0;
    let vd = unitary_dilation(&r_prime, 1e-9)?;
    // The dilation is blocked as (ancilla, system); reorder to system ⊗ ancilla.
    let v_r = ComplexMatrix::from_fn(4, 4, |row, col| {
        let (s1, a1) = (row / 2, row % 2);
        let (s2, a2) = (col / 2, col % 2);
        vd[(a1 * 2 + s1, a2 * 2 + s2)]
    });

    let enc = Subchannel::new(2, 4, vec![s])?;
    let rec = Subchannel::new(4, 2, vec![r])?;
    let scheme = Scheme::build(e, enc, rec, tol)?;
    Ok((QubitCodeCircuit { u_s, u_r, v_r, p: scheme.success_prob }, scheme))
}

fn diagonal_coefficients(e: &Subchannel, tol: f64) -> Result<Vec<Vec<C64>>> {
    if e.in_dim != e.out_dim {
        return Err(Error::Precondition("Schur channel must act on a single space".into()));
    }
    let s = e.in_dim;
    let mut rows = Vec::with_capacity(e.kraus.len());
    for k in &e.kraus {
        let mut off: f64 = 0.0;
        for i in 0..s {
            for j in 0..s {
                if i != j {
                    off = off.max(k[(i, j)].norm());
                }
            }
        }
        if off > tol * k.max_abs().max(1.0) {
            return Err(Error::Precondition("Kraus operators are not diagonal".into()));
        }
        rows.push((0..s).map(|j| k[(j, j)]).collect());
    }
    Ok(rows)
}

/// Witness for a Schur channel on `C^s` with Choi rank `r < s/(d-1)`, encoding `C^d`.
///
/// Picks a set of coordinates on which the restricted diagonals span the full coefficient
/// space, recurses on the complementary coordinates with `d - 1`, and closes the new row of
/// `R*` by a linear solve against the coefficients returned by the recursion.
pub fn schur_code(e: &Subchannel, d: usize, tol: f64) -> Result<ConditionDWitness> {
    let coef = diagonal_coefficients(e, tol)?;
    let s = e.in_dim;
    if d == 0 || d > s {
        return Err(Error::Precondition(format!("logical dimension {d} not in 1..={s}")));
    }
    let cmat = ComplexMatrix::from_fn(coef.len(), s, |i, j| coef[i][j]);
    let r = cmat.rank(RANK_TOL);
    if d >= 2 && r * (d - 1) >= s {
        return Err(Error::Precondition(format!("rank {r} is not below s/(d-1) = {}/{}", s, d - 1)));
    }
    let coords: Vec<usize> = (0..s).collect();
    let (cols, rows, _) = schur_recurse(&cmat, &coords, d)?;
    let s_star = ComplexMatrix::hstack(&cols)?;
    let r_star = ComplexMatrix::vstack(&rows.iter().map(|r| r.dagger()).collect::<Vec<_>>())?;
    let wit = ConditionDWitness::from_parts(e, s_star, r_star)?;
    let rep = check_condition_d(e, &wit, tol)?;
    if !rep.passed {
        return Err(Error::ConstructionFailed(format!(
            "Schur witness failed its own check (deviation {:.3e})",
            rep.max_deviation
        )));
    }
    Ok(wit)
}

/// Returns (columns of `S*`, kets `|r>` whose bras are rows of `R*`, coefficients).
type SchurParts = (Vec<ComplexMatrix>, Vec<ComplexMatrix>, Vec<C64>);

fn schur_recurse(cmat: &ComplexMatrix, coords: &[usize], d: usize) -> Result<SchurParts> {
    let s = cmat.cols();
    let n = cmat.rows();
    if d == 1 {
        let mut best = (coords[0], -1.0);
        for &j in coords {
            let m = (0..n).map(|i| cmat[(i, j)].norm()).fold(0.0, f64::max);
            if m > best.1 + 1e-15 {
                best = (j, m);
            }
        }
        let j = best.0;
        let coeffs = (0..n).map(|i| cmat[(i, j)]).collect();
        return Ok((vec![ComplexMatrix::ket(s, j)], vec![ComplexMatrix::ket(s, j)], coeffs));
    }
    // Greedy pivoted selection of coordinates spanning the restricted column space.
    let norms: Vec<f64> = coords.iter().map(|&j| cmat.col(j).frobenius_norm()).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<ComplexMatrix> = Vec::new();
    loop {
        let mut best: Option<(f64, usize, ComplexMatrix)> = None;
        for &j in coords {
            if chosen.contains(&j) {
                continue;
            }
            let mut v = cmat.col(j);
            for _ in 0..2 {
                for b in &basis {
                    let p = b.inner(&v);
                    v = v - b.scale(p);
                }
            }
            let nv = v.frobenius_norm();
            if best.as_ref().map_or(true, |(bn, _, _)| nv > *bn + 1e-15) {
                best = Some((nv, j, v));
            }
        }
        match best {
            Some((nv, j, v)) if nv > RANK_TOL * scale => {
                chosen.push(j);
                basis.push(v.scale_re(1.0 / nv));
            }
            _ => break,
        }
    }
    chosen.sort_unstable();
    let rest: Vec<usize> = coords.iter().copied().filter(|j| !chosen.contains(j)).collect();
    if rest.len() < d - 1 {
        return Err(Error::ConstructionFailed(format!(
            "only {} coordinates left for logical dimension {}",
            rest.len(),
            d - 1
        )));
    }
    let (mut cols, mut rows, coeffs) = schur_recurse(cmat, &rest, d - 1)?;
    let a = cmat.select_cols(&chosen);
    let cvec = ComplexMatrix::column(&coeffs);
    let u = &pseudo_inverse(&a, RANK_TOL)? * &cvec;
    let fit = (&(&a * &u) - &cvec).frobenius_norm();
    if fit > 1e-8 * cvec.frobenius_norm().max(1.0) {
        return Err(Error::ConstructionFailed(format!("coefficients not reachable on the chosen block ({fit:.3e})")));
    }
    let mut col = ComplexMatrix::zeros(s, 1);
    let mut row = ComplexMatrix::zeros(s, 1);
    for (t, &j) in chosen.iter().enumerate() {
        col[(j, 0)] = ONE;
        row[(j, 0)] = u[(t, 0)].conj();
    }
    cols.push(col);
    rows.push(row);
    Ok((cols, rows, coeffs))
}

fn check_unit_interval_op(r_op: &ComplexMatrix, tol: f64) -> Result<()> {
    if r_op.shape() != (4, 4) {
        return Err(dim_err("E_R operator", "4x4", format!("{:?}", r_op.shape())));
    }
    if !r_op.is_hermitian(tol) {
        return Err(Error::NotHermitian { deviation: r_op.hermitian_deviation() });
    }
    let (lmin, lmax) = r_op.eig_range()?;
    if lmin < -tol || lmax > 1.0 + tol {
        return Err(Error::Precondition(format!("spectrum [{lmin}, {lmax}] not inside [0, 1]")));
    }
    Ok(())
}

/// `E_R(Y) = |0><0| ⊗ tr_1(sqrt(R) Y sqrt(R)) + |1><1| ⊗ tr((1 - R) Y) 1/2` on `C^2 ⊗ C^2`.
pub fn er_channel(r_op: &ComplexMatrix) -> Result<Subchannel> {
    check_unit_interval_op(r_op, 1e-9)?;
    let sq = matrix_sqrt(r_op, 1e-9)?;
    let id2 = ComplexMatrix::identity(2);
    let mut kraus = Vec::new();
    let lift0 = ComplexMatrix::ket(2, 0).kron(&id2);
    for a in 0..2 {
        let bra = ComplexMatrix::ket(2, a).dagger().kron(&id2);
        kraus.push(&(&lift0 * &bra) * &sq);
    }
    let rest = ComplexMatrix::identity(4) - r_op.clone();
    let eig = rest.eigh()?;
    for (m, &mu) in eig.values.iter().enumerate() {
        if mu <= 0.0 {
            continue;
        }
        let wbra = eig.vectors.col(m).dagger();
        for x in 0..2 {
            let out = ComplexMatrix::ket(2, 1).kron(&ComplexMatrix::ket(2, x));
            kraus.push((&out * &wbra).scale_re((mu / 2.0).sqrt()));
        }
    }
    Subchannel::new(4, 4, kraus)
}

/// Scheme for `E_R` with encoder `X -> sqrt(R)^+ (P ⊗ X) sqrt(R)^+` and recovery
/// `Y -> tr_1(Y (|0><0| ⊗ 1))`. Its success probability is `tr(P)`.
pub fn er_optimal_scheme(r_op: &ComplexMatrix, p_op: &ComplexMatrix, tol: f64) -> Result<Scheme> {
    check_unit_interval_op(r_op, tol.max(1e-9))?;
    if p_op.shape() != (2, 2) {
        return Err(dim_err("P", "2x2", format!("{:?}", p_op.shape())));
    }
    let pe = p_op.eigh()?;
    if pe.values.last().copied().unwrap_or(0.0) < -tol {
        return Err(Error::NotPsd { min_eigenvalue: pe.values[1] });
    }
    let sq = matrix_sqrt(r_op, tol.max(1e-9))?;
    let sq_inv = pseudo_inverse(&sq, RANK_TOL)?;
    let r_inv = &sq_inv * &sq_inv;
    let id2 = ComplexMatrix::identity(2);

    let t = partial_trace(&(&r_inv * &p_op.kron(&id2)), (2, 2), Subsystem::First)?;
    let (_, tmax) = t.hermitian_part().eig_range()?;
    if tmax > 1.0 + tol.max(1e-9) {
        return Err(Error::Precondition(format!("tr_1(R^-1 (P ⊗ 1)) has eigenvalue {tmax} > 1")));
    }
    let proj = &sq * &sq_inv;
    for a in 0..2 {
        for b in 0..2 {
            let mut x = ComplexMatrix::zeros(2, 2);
            x[(a, b)] = ONE;
            let px = p_op.kron(&x);
            let dev = (&(&proj * &px) * &proj - &px).frobenius_norm();
            if dev > tol.max(1e-9) * px.frobenius_norm().max(1.0) {
                return Err(Error::Precondition(format!("P ⊗ X is not supported on the range of R (deviation {dev:.3e})")));
            }
        }
    }
    let mut enc_kraus = Vec::new();
    for (k, &pv) in pe.values.iter().enumerate() {
        if pv <= 0.0 {
            continue;
        }
        let v = pe.vectors.col(k).scale_re(pv.sqrt());
        enc_kraus.push(&sq_inv * &v.kron(&id2));
    }
    let enc = Subchannel::new(2, 4, enc_kraus)?;
    let rec = Subchannel::new(4, 2, vec![ComplexMatrix::ket(2, 0).dagger().kron(&id2)])?;
    Scheme::build(&er_channel(r_op)?, enc, rec, tol)
}

/// `(1/sqrt 2) [[1,0,0,i],[0,i,1,0],[0,i,-1,0],[1,0,0,-i]]`.
pub fn magic_basis() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let o = c(h, 0.0);
    let i = I * h;
    let z = ZERO;
    ComplexMatrix::from_row_major(4, 4, &[o, z, z, i, z, i, o, z, z, i, -o, z, o, z, z, -i]).expect("4x4")
}

impl MagicFamilyParams {
    pub fn new(lambda: [f64; 4]) -> Result<Self> {
        if lambda.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::Invalid(format!("eigenvalues {lambda:?} must lie in (0, 1]")));
        }
        Ok(Self { lambda })
    }

    /// `R = U diag(lambda) U^dag`.
    pub fn r_op(&self) -> ComplexMatrix {
        let u = magic_basis();
        &(&u * &ComplexMatrix::diag_real(&self.lambda)) * &u.dagger()
    }

    pub fn p0(&self) -> f64 {
        4.0 / self.lambda.iter().map(|l| 1.0 / l).sum::<f64>()
    }

    pub fn p1(&self) -> f64 {
        let inv: Vec<f64> = self.lambda.iter().map(|l| 1.0 / l).collect();
        let total: f64 = inv.iter().sum();
        let a = (inv[0] - inv[1] - inv[2] + inv[3]).abs();
        let b = ((inv[0] - inv[3]).abs() - (inv[1] - inv[2]).abs()).abs();
        4.0 / (total + a.min(b))
    }
}

/// Closed forms `(p0, p1)` for the magic family.
pub fn magic_p0_p1(lambda: [f64; 4]) -> Result<(f64, f64)> {
    let m = MagicFamilyParams::new(lambda)?;
    Ok((m.p0(), m.p1()))
}

/// Grid search of `max_psi 1/||tr_1(R^-1 (|psi><psi| ⊗ 1))||` over Bloch angles
/// `theta = k pi / n_theta` (`k = 0..=n_theta`) and `phi = 2 pi m / n_phi` (`m < n_phi`).
pub fn magic_p1_oracle(lambda: [f64; 4], n_theta: usize, n_phi: usize) -> Result<f64> {
    let m = MagicFamilyParams::new(lambda)?;
    if n_theta == 0 || n_phi == 0 {
        return Err(Error::Invalid("grid must be nonempty".into()));
    }
    let r_inv = pseudo_inverse(&m.r_op(), 1e-14)?;
    // Blocks B_ab = (<a| ⊗ 1) R^-1 (|b> ⊗ 1).
    let blk = |a: usize, b: usize| r_inv.block(2 * a, 2 * b, 2, 2);
    let (b00, b01, b10, b11) = (blk(0, 0), blk(0, 1), blk(1, 0), blk(1, 1));
    let mut best: f64 = 0.0;
    for k in 0..=n_theta {
        let th = std::f64::consts::PI * k as f64 / n_theta as f64;
        let (c0, s0) = ((th / 2.0).cos(), (th / 2.0).sin());
        for mm in 0..n_phi {
            let ph = 2.0 * std::f64::consts::PI * mm as f64 / n_phi as f64;
            let x0 = c(c0, 0.0);
            let x1 = C64::from_polar(s0, ph);
            let t = b00.scale(x0.conj() * x0) + b01.scale(x0.conj() * x1) + b10.scale(x1.conj() * x0) + b11.scale(x1.conj() * x1);
            let (a, dd, off) = (t[(0, 0)].re, t[(1, 1)].re, t[(0, 1)]);
            let lmax = 0.5 * (a + dd) + (0.25 * (a - dd).powi(2) + off.norm_sqr()).sqrt();
            best = best.max(1.0 / lmax);
        }
    }
    Ok(best)
}

fn isometry_first(s: usize, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(s, d, |i, j| if i == j { ONE } else { ZERO })
}

fn unit(s: usize, i: usize, j: usize, w: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(s, s);
    m[(i, j)] = c(w, 0.0);
    m
}

/// Channels on `C^s` that meet the rank bound with equality, with their schemes encoding `C^d`.
///
/// `Xi1`: `k = floor(s/d)` blocks `E_i = k^{-1/2} sum_j |j + i d><j|` plus a replacement
/// channel on the complement of the first `d` coordinates; the scheme has `p = 1`.
/// `Xi`: `(Π Y Π + tr(Π Y)(1 - Π))/(s-d+1)` plus the same replacement part; the scheme has
/// `p = 1/(s-d+1)`.
pub fn rank_saturating_channel(kind: RankFamily, d: usize, s: usize) -> Result<(Subchannel, Scheme)> {
    if d == 0 || d > s {
        return Err(Error::Invalid(format!("need 1 <= d <= s, got d={d}, s={s}")));
    }
    let mut kraus = Vec::new();
    let enc = Subchannel::new(d, s, vec![isometry_first(s, d)])?;
    let rec;
    match kind {
        RankFamily::Xi1 => {
            let k = s / d;
            let w = 1.0 / (k as f64).sqrt();
            let mut blocks = Vec::with_capacity(k);
            for i in 0..k {
                let mut e = ComplexMatrix::zeros(s, s);
                for j in 0..d {
                    e[(j + i * d, j)] = c(w, 0.0);
                }
                blocks.push(e);
            }
            let sd = isometry_first(s, d).dagger();
            rec = Subchannel::new(s, d, blocks.iter().map(|e| (&sd * &e.dagger()).scale_re((k as f64).sqrt())).collect())?;
            kraus.extend(blocks);
        }
        RankFamily::Xi => {
            let g = 1.0 / ((s - d + 1) as f64).sqrt();
            let mut pi = ComplexMatrix::zeros(s, s);
            for j in 0..d {
                pi[(j, j)] = c(g, 0.0);
            }
            kraus.push(pi);
            for m in d..s {
                for j in 0..d {
                    kraus.push(unit(s, m, j, g));
                }
            }
            rec = Subchannel::new(s, d, vec![isometry_first(s, d).dagger()])?;
        }
    }
    let w = 1.0 / (s as f64).sqrt();
    for m in d..s {
        for x in 0..s {
            kraus.push(unit(s, x, m, w));
        }
    }
    let ch = Subchannel::new(s, s, kraus)?;
    let scheme = Scheme::build(&ch, enc, rec, 1e-9)?;
    Ok((ch, scheme))
}

/// Spanning family of `l^2` unit vectors in `C^l`: basis vectors, then `(|j> + |k>)/sqrt 2`
/// and `(|j> + i|k>)/sqrt 2` for `j < k`.
pub fn spanning_vectors(l: usize) -> Vec<ComplexMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v: Vec<ComplexMatrix> = (0..l).map(|j| ComplexMatrix::ket(l, j)).collect();
    for phase in [ONE, I] {
        for j in 0..l {
            for k in (j + 1)..l {
                let mut x = ComplexMatrix::zeros(l, 1);
                x[(j, 0)] = c(h, 0.0);
                x[(k, 0)] = phase * h;
                v.push(x);
            }
        }
    }
    v
}

/// Schur channels with Kraus operators of rank at most `d - 1`, which admit no scheme encoding
/// `C^d`. For `Xi1` the blocks are recombined into `ceil(sqrt(k))` Kraus operators.
pub fn rank_bound_counterexample(kind: RankFamily, d: usize, s: usize) -> Result<Subchannel> {
    if d < 2 || s < d {
        return Err(Error::Invalid(format!("need 2 <= d <= s, got d={d}, s={s}")));
    }
    let k = s.div_ceil(d - 1);
    let pad = k * (d - 1) - s;
    let mut blocks = Vec::with_capacity(k);
    for i in 0..k {
        let len = if i + 1 == k { d - 1 - pad } else { d - 1 };
        let mut e = ComplexMatrix::zeros(s, s);
        for j in 0..len {
            e[(j + (d - 1) * i, j + (d - 1) * i)] = ONE;
        }
        blocks.push(e);
    }
    match kind {
        RankFamily::Xi => Subchannel::new(s, s, blocks),
        RankFamily::Xi1 => {
            let l = (1..).find(|l| l * l >= k).expect("finite");
            let psi = spanning_vectors(l);
            let mut f = Vec::with_capacity(l);
            for i in 0..l {
                let mut acc = ComplexMatrix::zeros(s, s);
                for (a, blk) in blocks.iter().enumerate() {
                    acc = acc + blk.scale(psi[a][(i, 0)].conj());
                }
                f.push(acc);
            }
            Subchannel::new(s, s, f)
        }
    }
}

/// Runs the linear solve on every reduction `F_i = V^dag E_i` where `V` spans `d` output
/// coordinates, and returns the first witness found.
pub fn coordinate_block_search(e: &Subchannel, d: usize, tol: f64) -> Result<Option<ConditionDWitness>> {
    let s = e.out_dim;
    if d == 0 || d > s {
        return Err(Error::Invalid(format!("need 1 <= d <= {s}")));
    }
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let v = ComplexMatrix::from_fn(s, d, |i, j| if idx[j] == i { ONE } else { ZERO });
        if let Some(w) = projected_linear_witness(e, &v, tol)? {
            return Ok(Some(w));
        }
        // Next combination in lexicographic order.
        let mut t = d;
        loop {
            if t == 0 {
                return Ok(None);
            }
            t -= 1;
            if idx[t] < s - d + t {
                break;
            }
            if t == 0 {
                return Ok(None);
            }
        }
        idx[t] += 1;
        for u in (t + 1)..d {
            idx[u] = idx[u - 1] + 1;
        }
    }
}

/// Choi rank with the crate's default relative cutoff.
pub fn choi_rank(e: &Subchannel) -> Result<usize> {
    e.choi_rank(CHOI_RANK_TOL)
}
