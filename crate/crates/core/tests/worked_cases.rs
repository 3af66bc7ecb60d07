//! Small hand-checkable instances for every module.

use pqec::channel::{compose, maximally_mixed, pure_state, ChoiOperator, Subchannel};
use pqec::codes::{
    choi_rank, er_channel, er_optimal_scheme, magic_p0_p1, magic_p1_oracle, qubit_code_circuit,
    qubit_rank2_witness, rank_bound_counterexample, rank_saturating_channel, schur_code, MagicFamilyParams,
    RankFamily,
};
use pqec::matcore::{
    c, kron, matrix_sqrt, null_space, orthonormality_deviation, partial_trace, pseudo_inverse, unitary_completion,
    unitary_dilation, vectorize, ComplexMatrix, Subsystem, ONE, ZERO,
};
use pqec::pqec::{
    build_condition_c, check_condition_b, check_condition_d, check_ensemble, flag_branch, flagged_decoder, kl_check,
    linear_witness, realization_shift, recovery_from_m, reduce_full_output_rank, solve_linear_condition_d,
    verify_scheme, ConditionDWitness, Scheme,
};
use pqec::randgen::{
    ginibre, random_channel, random_channel_dims, random_isometry, random_schur_channel, random_unitary, RngSeed,
};
use pqec::sim::run_exact;
use pqec::Error;

const TOL: f64 = 1e-9;

fn real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_real(rows, cols, data).unwrap()
}

fn code_isometry(s: usize, d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(s).select_cols(&(0..d).collect::<Vec<_>>())
}

// ---- matcore ----

#[test]
fn vectorize_small_cases() {
    assert_eq!(vectorize(&ComplexMatrix::identity(2)), real(4, 1, &[1.0, 0.0, 0.0, 1.0]));
    let e01 = ComplexMatrix::ket(2, 0) * ComplexMatrix::ket(2, 1).dagger();
    assert_eq!(vectorize(&e01), real(4, 1, &[0.0, 1.0, 0.0, 0.0]));
}

#[test]
fn partial_trace_small_cases() {
    let k00 = ComplexMatrix::ket(4, 0);
    let t = partial_trace(&pure_state(&k00), (2, 2), Subsystem::Second).unwrap();
    assert!(t.approx_eq(&pure_state(&ComplexMatrix::ket(2, 0)), 1e-15));
    let omega = real(4, 1, &[1.0, 0.0, 0.0, 1.0]).scale_re(std::f64::consts::FRAC_1_SQRT_2);
    let t = partial_trace(&pure_state(&omega), (2, 2), Subsystem::First).unwrap();
    assert!(t.approx_eq(&maximally_mixed(2), 1e-15));
}

#[test]
fn kron_small_cases() {
    assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
    assert_eq!(kron(&ComplexMatrix::ket(2, 0), &ComplexMatrix::ket(2, 1)), ComplexMatrix::ket(4, 1));
    let mut rng = RngSeed::new(1).rng();
    let [a, b, cm, d] = [0, 1, 2, 3].map(|_| ginibre(2, 2, &mut rng));
    let lhs = &kron(&a, &b) * &kron(&cm, &d);
    assert!(lhs.approx_eq(&kron(&(&a * &cm), &(&b * &d)), 1e-12));
}

#[test]
fn pseudo_inverse_small_cases() {
    assert!(pseudo_inverse(&ComplexMatrix::identity(4), 1e-12).unwrap().approx_eq(&ComplexMatrix::identity(4), 1e-14));
    let p = pseudo_inverse(&ComplexMatrix::diag_real(&[2.0, 0.0]), 1e-12).unwrap();
    assert!(p.approx_eq(&ComplexMatrix::diag_real(&[0.5, 0.0]), 1e-15));
}

#[test]
fn sqrt_small_cases() {
    assert!(matrix_sqrt(&ComplexMatrix::identity(3), TOL).unwrap().approx_eq(&ComplexMatrix::identity(3), 1e-14));
    let s = matrix_sqrt(&ComplexMatrix::diag_real(&[4.0, 9.0]), TOL).unwrap();
    assert!(s.approx_eq(&ComplexMatrix::diag_real(&[2.0, 3.0]), 1e-14));
}

#[test]
fn null_space_small_cases() {
    assert_eq!(null_space(&ComplexMatrix::identity(3), TOL).unwrap().cols(), 0);
    let ns = null_space(&pure_state(&ComplexMatrix::ket(2, 0)), TOL).unwrap();
    assert_eq!(ns.cols(), 1);
    assert!((ns[(1, 0)].norm() - 1.0).abs() < 1e-14 && ns[(0, 0)].norm() < 1e-14);
}

#[test]
fn completion_small_cases() {
    let u = unitary_completion(&ComplexMatrix::ket(2, 0), &[0]).unwrap();
    assert!(orthonormality_deviation(&u) < 1e-15);
    assert_eq!(u.col(0), ComplexMatrix::ket(2, 0));
    // An isometry placed in slots [0, 2] of C^2 ⊗ C^2 is U (1 ⊗ |0>).
    let s = random_isometry(4, 2, &mut RngSeed::new(2).rng());
    let u = unitary_completion(&s, &[0, 2]).unwrap();
    let embed = kron(&ComplexMatrix::identity(2), &ComplexMatrix::ket(2, 0));
    assert!((&u * &embed).approx_eq(&s, 1e-12));
}

#[test]
fn dilation_small_cases() {
    let u = unitary_dilation(&ComplexMatrix::identity(2), TOL).unwrap();
    assert!(orthonormality_deviation(&u) < 1e-14);
    assert!(u.block(0, 0, 2, 2).approx_eq(&ComplexMatrix::identity(2), 1e-14));
    let u = unitary_dilation(&ComplexMatrix::zeros(2, 2), TOL).unwrap();
    assert!(orthonormality_deviation(&u) < 1e-14);
    assert!(u.block(0, 0, 2, 2).max_abs() < 1e-14);
}

// ---- channel ----

#[test]
fn identity_and_depolarizing_choi() {
    let j = Subchannel::identity(2).choi();
    assert_eq!(j.matrix, pure_state(&real(4, 1, &[1.0, 0.0, 0.0, 1.0])));
    assert_eq!(j.rank(1e-9).unwrap(), 1);
    let dep = Subchannel::replacement(2, &maximally_mixed(2)).unwrap();
    assert!(dep.choi().matrix.approx_eq(&ComplexMatrix::identity(4).scale_re(0.5), 1e-14));
    let k = j.canonical_kraus(1e-9).unwrap();
    assert_eq!(k.len(), 1);
    assert!(k[0].is_proportional_to_identity(1e-12));
}

#[test]
fn redundant_kraus_pair_has_one_canonical_operator() {
    let k = random_unitary(3, &mut RngSeed::new(3).rng()).scale_re(0.5);
    let e = Subchannel::new(3, 3, vec![k.clone(), k]).unwrap();
    assert_eq!(e.canonical().unwrap().num_kraus(), 1);
    let back = ChoiOperator::from_map(3, 3, |x| e.apply(x)).unwrap();
    assert!(back.matrix.approx_eq(&e.choi().matrix, 1e-12));
}

#[test]
fn composition_identities() {
    let mut rng = RngSeed::new(4).rng();
    let phi = random_channel(3, 2, &mut rng).unwrap();
    let with_id = compose(&phi, &Subchannel::identity(3)).unwrap();
    assert!(with_id.choi().matrix.approx_eq(&phi.choi().matrix, 1e-12));
    let a = random_channel(3, 2, &mut rng).unwrap().scaled(0.7).unwrap();
    let b = random_channel(3, 3, &mut rng).unwrap().scaled(0.8).unwrap();
    let left = compose(&compose(&a, &b).unwrap(), &phi).unwrap();
    let right = compose(&a, &compose(&b, &phi).unwrap()).unwrap();
    assert!(left.choi().matrix.approx_eq(&right.choi().matrix, 1e-12));
    assert!(left.is_trace_nonincreasing(1e-12));
}

#[test]
fn identity_stinespring_is_trivial() {
    let (a, r) = Subchannel::identity(3).stinespring().unwrap();
    assert_eq!(r, 1);
    assert!(a.approx_eq(&ComplexMatrix::identity(3), 1e-12));
}

#[test]
fn schur_channel_small_cases() {
    let ones = Subchannel::schur_channel(&[vec![ONE; 3]]).unwrap();
    let x = ginibre(3, 3, &mut RngSeed::new(5).rng());
    assert!(ones.apply(&x).unwrap().approx_eq(&x, 1e-15));
    let deph = Subchannel::schur_channel(&[vec![ONE, ZERO], vec![ZERO, ONE]]).unwrap();
    assert_eq!(deph.choi_rank(1e-9).unwrap(), 2);
    let e = rank_bound_counterexample(RankFamily::Xi, 2, 4).unwrap();
    assert_eq!(e.num_kraus(), 4);
    for k in &e.kraus {
        assert_eq!(k.rank(1e-9), 1);
        assert!((k * k).approx_eq(k, 1e-15));
    }
}

// ---- pqec ----

#[test]
fn verification_small_cases() {
    let id = Subchannel::identity(2);
    let v = verify_scheme(&id, &id, &id, TOL).unwrap();
    assert!(v.passed && (v.p - 1.0).abs() < 1e-15 && v.residual < 1e-15);
    let (e, scheme) = rank_saturating_channel(RankFamily::Xi, 2, 4).unwrap();
    let v = scheme.verify(&e, TOL).unwrap();
    assert!(v.passed && (v.p - 1.0 / 3.0).abs() < 1e-10);
    // A random scheme does not correct depolarizing noise.
    let mut rng = RngSeed::new(6).rng();
    let dep = Subchannel::depolarizing(4, 0.6).unwrap();
    let enc = Subchannel::from_operator(random_isometry(4, 2, &mut rng)).unwrap();
    let rec = Subchannel::from_operator(random_isometry(4, 2, &mut rng).dagger()).unwrap();
    assert!(!verify_scheme(&dep, &enc, &rec, TOL).unwrap().passed);
}

#[test]
fn condition_b_small_cases() {
    let id = Subchannel::identity(2);
    let b = check_condition_b(&id, &id, &ComplexMatrix::identity(2), TOL).unwrap();
    assert!(b.passed && b.ops.len() == 1);
    let (e, _) = rank_saturating_channel(RankFamily::Xi1, 2, 4).unwrap();
    let enc = Subchannel::from_operator(code_isometry(4, 2)).unwrap();
    let b = check_condition_b(&e, &enc, &ComplexMatrix::identity(4), TOL).unwrap();
    assert!(b.passed);
    assert_eq!(b.ops.len(), 2);
    let bad = Subchannel::from_operator(random_isometry(4, 2, &mut RngSeed::new(7).rng())).unwrap();
    assert!(!check_condition_b(&e, &bad, &ComplexMatrix::identity(4), TOL).unwrap().passed);
}

#[test]
fn condition_c_small_cases() {
    let id = Subchannel::identity(2);
    let rep = build_condition_c(&id, &id, &ComplexMatrix::identity(2), TOL).unwrap();
    assert_eq!(rep.m.shape(), (1, 1));
    assert!((rep.trace_m - 1.0).abs() < 1e-15);
    let rec = recovery_from_m(&rep, &id, &id, TOL).unwrap();
    assert!(verify_scheme(&id, &id, &rec, TOL).unwrap().p > 1.0 - 1e-12);

    let (e, _) = rank_saturating_channel(RankFamily::Xi1, 2, 4).unwrap();
    let enc = Subchannel::from_operator(code_isometry(4, 2)).unwrap();
    let rep = build_condition_c(&e, &enc, &ComplexMatrix::identity(4), TOL).unwrap();
    let rec = recovery_from_m(&rep, &e, &enc, TOL).unwrap();
    let v = verify_scheme(&e, &enc, &rec, TOL).unwrap();
    assert!(v.passed && (v.p - 1.0).abs() < 1e-10);

    // Perturbing the encoder of a working scheme breaks a block of M.
    let mut rng = RngSeed::new(8).rng();
    let noisy = &code_isometry(4, 2) + &ginibre(4, 2, &mut rng).scale_re(0.1);
    let noisy = Subchannel::from_operator(noisy.scale_re(1.0 / noisy.op_norm())).unwrap();
    assert!(matches!(build_condition_c(&e, &noisy, &ComplexMatrix::identity(4), TOL), Err(Error::NotProportional { .. })));
}

#[test]
fn er_family_conditions_reach_p0() {
    let m = MagicFamilyParams::new([0.25, 0.5, 0.5, 0.5]).unwrap();
    let r = m.r_op();
    let e = er_channel(&r).unwrap();
    let scheme = er_optimal_scheme(&r, &ComplexMatrix::identity(2).scale_re(m.p0() / 2.0), TOL).unwrap();
    let r_op = scheme.recovery_operator();
    let rep = build_condition_c(&e, &scheme.encoder, &r_op, 1e-8).unwrap();
    assert!((rep.trace_m - m.p0()).abs() < 1e-8);
    let rec = recovery_from_m(&rep, &e, &scheme.encoder, 1e-8).unwrap();
    assert!((verify_scheme(&e, &scheme.encoder, &rec, 1e-8).unwrap().p - m.p0()).abs() < 1e-8);
    let shifted = realization_shift(&e, &scheme, 1e-8).unwrap();
    assert!((shifted.success_prob - m.p0()).abs() < 1e-8);
    assert!(shifted.encoder.is_trace_preserving(1e-8));
}

#[test]
fn condition_d_and_linear_small_cases() {
    let id = Subchannel::identity(2);
    let w = ConditionDWitness::from_parts(&id, ComplexMatrix::identity(2), ComplexMatrix::identity(2)).unwrap();
    let rep = check_condition_d(&id, &w, TOL).unwrap();
    assert!(rep.passed);
    assert!((rep.coeffs[0] - ONE).norm() < 1e-15);
    let w = solve_linear_condition_d(&[ComplexMatrix::identity(2)], TOL).unwrap().unwrap();
    assert!(w.s_star.is_proportional_to_identity(1e-12));
    let e = rank_bound_counterexample(RankFamily::Xi, 2, 4).unwrap();
    assert!(solve_linear_condition_d(&e.kraus, TOL).unwrap().is_none());
}

#[test]
fn linear_witness_on_random_low_rank_channel() {
    // rank(E(1)) = d = 2 and r = 2 < s d / (d^2 - 1) = 8/3.
    let mut rng = RngSeed::new(9).rng();
    let inner = random_channel_dims(4, 2, 2, &mut rng).unwrap();
    let v = random_isometry(5, 2, &mut rng);
    let e = Subchannel::new(4, 5, inner.kraus.iter().map(|k| &v * k).collect()).unwrap();
    let (vp, f) = reduce_full_output_rank(&e, 2).unwrap();
    assert!((&vp * &vp.dagger()).approx_eq(&(&v * &v.dagger()), 1e-10));
    let sum = f.iter().map(|x| &x.dagger() * x).fold(ComplexMatrix::zeros(4, 4), |a, b| a + b);
    assert!(sum.approx_eq(&ComplexMatrix::identity(4), 1e-10));
    let w = linear_witness(&e, 2, TOL).unwrap().expect("witness");
    assert!(check_condition_d(&e, &w, TOL).unwrap().passed);
    // E_R has E(1) of full rank 4.
    let er = er_channel(&ComplexMatrix::diag_real(&[0.5, 0.6, 0.7, 0.8])).unwrap();
    assert!(matches!(reduce_full_output_rank(&er, 2), Err(Error::Precondition(_))));
}

#[test]
fn deterministic_test_small_cases() {
    let mut rng = RngSeed::new(10).rng();
    let u = Subchannel::from_operator(random_unitary(4, &mut rng)).unwrap();
    assert!(kl_check(&u, &random_isometry(4, 2, &mut rng), TOL).unwrap());
    let (e, _) = rank_saturating_channel(RankFamily::Xi1, 2, 4).unwrap();
    assert!(kl_check(&e, &code_isometry(4, 2), TOL).unwrap());
    let dep = Subchannel::depolarizing(2, 0.5).unwrap();
    assert!(!kl_check(&dep, &random_unitary(2, &mut rng), TOL).unwrap());
}

#[test]
fn realization_shift_small_cases() {
    let id = Subchannel::identity(2);
    let half = Subchannel::from_operator(ComplexMatrix::identity(2).scale_re(0.5)).unwrap();
    let scheme = Scheme::build(&id, half, id.clone(), TOL).unwrap();
    assert!((scheme.success_prob - 0.25).abs() < 1e-15);
    let shifted = realization_shift(&id, &scheme, TOL).unwrap();
    assert!((shifted.success_prob - 0.25).abs() < 1e-14);
    assert!(shifted.encoder.is_trace_preserving(1e-14));
    let again = realization_shift(&id, &shifted, TOL).unwrap();
    assert!(again.encoder.kraus[0].approx_eq(&shifted.encoder.kraus[0], 1e-14));
}

#[test]
fn flagged_decoder_small_cases() {
    let rho = maximally_mixed(2);
    let dec = flagged_decoder(&Subchannel::identity(2)).unwrap();
    assert!(flag_branch(&dec, 1).unwrap().apply(&rho).unwrap().max_abs() < 1e-15);
    let quarter = Subchannel::from_operator(ComplexMatrix::identity(2).scale_re(0.5)).unwrap();
    let dec = flagged_decoder(&quarter).unwrap();
    let p0 = flag_branch(&dec, 0).unwrap().apply(&rho).unwrap().trace().re;
    assert!((p0 - 0.25).abs() < 1e-15);
    assert!(dec.is_trace_preserving(1e-14));
}

#[test]
fn ensemble_small_cases() {
    let id = Subchannel::identity(2);
    let single = check_ensemble(&[(1.0, id.clone())], &id, &id, TOL).unwrap();
    assert!((single.p_average - 1.0).abs() < 1e-14);

    // Two unitary channels on C^4 mixed into a rank-2 channel, corrected by the qubit code.
    let mut rng = RngSeed::new(11).rng();
    let u = random_unitary(4, &mut rng);
    let ens = vec![(0.4, Subchannel::from_operator(u).unwrap()), (0.6, Subchannel::identity(4))];
    let avg = pqec::pqec::average_channel(&ens).unwrap();
    let (_, scheme) = qubit_code_circuit(&avg, TOL).unwrap();
    let rep = check_ensemble(&ens, &scheme.encoder, &scheme.recovery, 1e-8).unwrap();
    assert!(rep.members.iter().all(|&p| p >= -1e-12));
    assert!((rep.weighted_sum - rep.p_average).abs() < 1e-9);

    // A member that the scheme never accepts is allowed.
    let swap = real(4, 4, &[0., 0., 1., 0., 0., 0., 0., 1., 1., 0., 0., 0., 0., 1., 0., 0.]);
    let ens = vec![(0.3, Subchannel::identity(4)), (0.7, Subchannel::from_operator(swap).unwrap())];
    let enc = Subchannel::from_operator(code_isometry(4, 2)).unwrap();
    let rec = Subchannel::from_operator(code_isometry(4, 2).dagger()).unwrap();
    let rep = check_ensemble(&ens, &enc, &rec, TOL).unwrap();
    assert!((rep.p_average - 0.3).abs() < 1e-14);
    assert!(rep.members[1].abs() < 1e-14 && (rep.members[0] - 1.0).abs() < 1e-14);
}

// ---- codes ----

#[test]
fn qubit_witness_on_unitary_noise() {
    let u = random_unitary(4, &mut RngSeed::new(12).rng());
    let e = Subchannel::new(4, 4, vec![u, ComplexMatrix::zeros(4, 4)]).unwrap();
    let w = qubit_rank2_witness(&e, TOL).unwrap();
    let rep = check_condition_d(&e, &w, TOL).unwrap();
    assert!(rep.passed);
    assert!(rep.coeffs[0].norm() > 1e-6 && rep.coeffs[1].norm() < 1e-12);
    let e = Subchannel::new(4, 4, vec![ComplexMatrix::identity(4), ComplexMatrix::zeros(4, 4)]).unwrap();
    let (circ, _) = qubit_code_circuit(&e, TOL).unwrap();
    assert!((circ.p - 1.0).abs() < 1e-10);
}

#[test]
fn qubit_witness_on_stinespring_channel() {
    let a = random_isometry(8, 4, &mut RngSeed::new(13).rng());
    // Environment is the second factor: E_i = (1 ⊗ <i|) A.
    let kraus: Vec<ComplexMatrix> = (0..2)
        .map(|i| &kron(&ComplexMatrix::identity(4), &ComplexMatrix::ket(2, i).dagger()) * &a)
        .collect();
    let e = Subchannel::new(4, 4, kraus).unwrap();
    let w = qubit_rank2_witness(&e, TOL).unwrap();
    let scale = w.s_star.op_norm() * w.r_star.op_norm();
    for k in &e.kraus {
        let m = (&(&w.r_star * k) * &w.s_star).scale_re(1.0 / scale);
        let mean = m.trace() / 2.0;
        assert!((m[(0, 1)].norm() + m[(1, 0)].norm() + (m[(0, 0)] - mean).norm()) < 1e-9);
    }
}

#[test]
fn qubit_witness_on_scalar_schur_pair() {
    let (al, be) = (c(0.6, 0.0), c(0.0, 0.8));
    let e = Subchannel::new(
        4,
        4,
        vec![ComplexMatrix::identity(4).scale(al), ComplexMatrix::identity(4).scale(be)],
    )
    .unwrap();
    let w = qubit_rank2_witness(&e, TOL).unwrap();
    let rep = check_condition_d(&e, &w, TOL).unwrap();
    assert!(rep.passed);
    assert!(rep.coeffs.iter().all(|z| z.norm() > 1e-9));
}

#[test]
fn schur_code_small_cases() {
    let mut rng = RngSeed::new(14).rng();
    let e = random_schur_channel(4, 2, &mut rng).unwrap();
    assert!(check_condition_d(&e, &schur_code(&e, 2, TOL).unwrap(), TOL).unwrap().passed);
    let e = random_schur_channel(8, 7, &mut rng).unwrap();
    assert!(check_condition_d(&e, &schur_code(&e, 2, TOL).unwrap(), TOL).unwrap().passed);
    let e = rank_bound_counterexample(RankFamily::Xi, 2, 4).unwrap();
    match schur_code(&e, 2, TOL) {
        Err(Error::Precondition(msg)) => assert!(!msg.is_empty()),
        other => panic!("expected precondition error, got {other:?}"),
    }
    assert!(Error::Precondition("x".into()).to_string().starts_with("precondition unmet"));
    assert!(Error::ConstructionFailed("x".into()).to_string().starts_with("construction failed"));
}

#[test]
fn er_channel_small_cases() {
    let mut rng = RngSeed::new(15).rng();
    let rho = {
        let g = ginibre(4, 4, &mut rng);
        let r = &g * &g.dagger();
        let t = r.trace().re;
        r.scale_re(1.0 / t)
    };
    let zero = ComplexMatrix::ket(2, 0);
    let one = ComplexMatrix::ket(2, 1);
    let full = er_channel(&ComplexMatrix::identity(4)).unwrap().apply(&rho).unwrap();
    let expect = kron(&pure_state(&zero), &partial_trace(&rho, (2, 2), Subsystem::First).unwrap());
    assert!(full.approx_eq(&expect, 1e-12));
    let none = er_channel(&ComplexMatrix::zeros(4, 4)).unwrap().apply(&rho).unwrap();
    assert!(none.approx_eq(&kron(&pure_state(&one), &maximally_mixed(2)), 1e-12));
    assert!(er_channel(&ComplexMatrix::identity(4).scale_re(1.5)).is_err());
}

#[test]
fn er_scheme_with_rank_two_r() {
    // R = |psi><psi| ⊗ A, so tr_1(R^+ (|psi><psi| ⊗ 1)) = A^-1 and p = lambda_min(A).
    let psi = real(2, 1, &[0.6, 0.8]);
    let psi_perp = real(2, 1, &[-0.8, 0.6]);
    let a = ComplexMatrix::diag_real(&[0.8, 0.3]);
    let r = kron(&pure_state(&psi), &a);
    let e = er_channel(&r).unwrap();
    let scheme = er_optimal_scheme(&r, &pure_state(&psi).scale_re(0.3), TOL).unwrap();
    let v = scheme.verify(&e, 1e-8).unwrap();
    assert!(v.passed && (v.p - 0.3).abs() < 1e-9);
    assert!(er_optimal_scheme(&r, &pure_state(&psi_perp).scale_re(0.3), TOL).is_err());
    assert!(er_optimal_scheme(&r, &pure_state(&psi).scale_re(0.5), TOL).is_err());
}

#[test]
fn magic_family_values() {
    // lambda = (1/(2N), 1/2, 1/2, 1/2) gives p1 = 1/(N+1), p0 = 2/(N+3).
    for n in [1.0, 2.0, 3.0, 10.0, 100.0] {
        let (p0, p1) = magic_p0_p1([1.0 / (2.0 * n), 0.5, 0.5, 0.5]).unwrap();
        assert!((p1 - 1.0 / (n + 1.0)).abs() < 1e-12);
        assert!((p0 - 2.0 / (n + 3.0)).abs() < 1e-12);
        assert!(p0 / p1 < 2.0);
    }
    let lam = [0.25, 0.5, 0.5, 0.5];
    assert!((magic_p1_oracle(lam, 60, 120).unwrap() - 1.0 / 3.0).abs() < 1e-3);
    // 1/l1 + 1/l4 = 1/l2 + 1/l3: pure encodings are as good as mixed ones.
    let lam = [0.5, 0.4, 0.8, 1.0 / (1.0 / 0.4 + 1.0 / 0.8 - 2.0)];
    let (p0, p1) = magic_p0_p1(lam).unwrap();
    assert!((p0 - p1).abs() < 1e-12);
    assert!((magic_p1_oracle(lam, 60, 120).unwrap() - p0).abs() < 1e-3);
}

#[test]
fn rank_saturating_ranks_follow_formulas() {
    for (d, s) in [(2, 2), (2, 3), (2, 4), (2, 5), (3, 5), (3, 6), (4, 5)] {
        let (e, _) = rank_saturating_channel(RankFamily::Xi1, d, s).unwrap();
        assert_eq!(choi_rank(&e).unwrap(), s * s - s * d + s / d, "xi1 d={d} s={s}");
        let (e, _) = rank_saturating_channel(RankFamily::Xi, d, s).unwrap();
        assert_eq!(choi_rank(&e).unwrap(), s * s - d * d + 1, "xi d={d} s={s}");
    }
    assert!(rank_saturating_channel(RankFamily::Xi, 3, 2).is_err());
}

#[test]
fn xi1_counterexample_for_qubits() {
    let e = rank_bound_counterexample(RankFamily::Xi1, 2, 4).unwrap();
    assert_eq!(choi_rank(&e).unwrap(), 2);
    let w = qubit_rank2_witness(&e, TOL).unwrap();
    assert!(check_condition_d(&e, &w, TOL).unwrap().passed);
}

// ---- sim ----

#[test]
fn exact_run_small_cases() {
    let mut rng = RngSeed::new(16).rng();
    let e = random_channel(4, 2, &mut rng).unwrap();
    let (_, scheme) = qubit_code_circuit(&e, TOL).unwrap();
    let out = run_exact(&e, &scheme, &[maximally_mixed(2)]).unwrap().remove(0);
    assert!(out.state.approx_eq(&maximally_mixed(2), 1e-9));
    // The same scheme on another channel still runs and reports a fidelity below one.
    let other = random_channel(4, 2, &mut rng).unwrap();
    let psi = ComplexMatrix::ket(2, 0);
    let out = run_exact(&other, &scheme, &[psi]).unwrap().remove(0);
    assert!(out.fidelity.unwrap() < 1.0 - 1e-6);
}
