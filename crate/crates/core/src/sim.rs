//! Exact and sampled execution of correction schemes and qubit circuits.
//!
//! Sampling uses density-matrix branching: the state after each measurement is computed
//! exactly and only the classical outcome labels are drawn at random.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{pure_state, Subchannel};
use crate::codes::QubitCodeCircuit;
use crate::error::{dim_err, Error, Result};
use crate::matcore::{matrix_sqrt, ComplexMatrix};
use crate::pqec::Scheme;
use crate::randgen::RngSeed;

/// Shots per independently seeded block. Blocks, not threads, own the random streams.
pub const SHOTS_PER_BLOCK: u64 = 8192;

/// Result of running a scheme on one input state.
#[derive(Clone, Debug)]
pub struct ExactOutcome {
    /// `tr(R E S(rho))`.
    pub p: f64,
    /// Normalized accepted output (zero matrix when `p = 0`).
    pub state: ComplexMatrix,
    /// Fidelity of the accepted output with the input, `None` when `p = 0`.
    pub fidelity: Option<f64>,
}

/// Summary of a sampled run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    pub p_exact: f64,
    pub accept_freq: f64,
    pub accepted_fidelity_mean: Option<f64>,
    pub accepted_fidelity_min: Option<f64>,
    pub shots: u64,
    pub seed: RngSeed,
    pub branch_counts: BTreeMap<String, u64>,
}

/// What to sample from.
#[derive(Clone, Copy, Debug)]
pub enum SimTarget<'a> {
    Scheme(&'a Scheme),
    Circuit(&'a QubitCodeCircuit),
}

fn as_density(state: &ComplexMatrix) -> ComplexMatrix {
    if state.cols() == 1 {
        pure_state(state)
    } else {
        state.clone()
    }
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, equal to `<psi|sigma|psi>` for
/// pure `rho`.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let sr = matrix_sqrt(rho, 1e-9)?;
    let inner = &(&sr * sigma) * &sr;
    let t = matrix_sqrt(&inner.hermitian_part(), 1e-9)?.trace().re;
    Ok((t * t).clamp(0.0, 1.0))
}

/// Runs `R ∘ E ∘ S` on each input (ket or density matrix).
pub fn run_exact(e: &Subchannel, scheme: &Scheme, states: &[ComplexMatrix]) -> Result<Vec<ExactOutcome>> {
    let d = scheme.logical_dim();
    states
        .iter()
        .map(|st| {
            let rho = as_density(st);
            if rho.shape() != (d, d) {
                return Err(dim_err("input state", format!("{d}x{d}"), format!("{:?}", rho.shape())));
            }
            let out = scheme.recovery.apply(&e.apply(&scheme.encoder.apply(&rho)?)?)?;
            let p = out.trace().re.max(0.0);
            if p <= 0.0 {
                return Ok(ExactOutcome { p, state: ComplexMatrix::zeros(d, d), fidelity: None });
            }
            let sigma = out.scale_re(1.0 / p);
            let f = fidelity(&rho, &sigma)?;
            Ok(ExactOutcome { p, state: sigma, fidelity: Some(f) })
        })
        .collect()
}

/// Exact branch probabilities `P(i, j)` and post-measurement states of qubit 1 for the
/// circuit: `U_S` on `|psi>|0>`, the channel, `U_R`, measurement `i` of qubit 2, a fresh
/// ancilla, `V_R` on qubits 1 and 3, measurement `j` of qubit 3. Acceptance is `(0, 0)`.
#[derive(Clone, Debug)]
pub struct CircuitBranches {
    pub probs: [[f64; 2]; 2],
    pub states: [[Option<ComplexMatrix>; 2]; 2],
}

impl CircuitBranches {
    pub fn accept_prob(&self) -> f64 {
        self.probs[0][0]
    }
}

fn measure_second(rho: &ComplexMatrix, outcome: usize) -> (f64, ComplexMatrix) {
    let proj = ComplexMatrix::identity(2).kron(&ComplexMatrix::ket(2, outcome));
    let sub = &(&proj.dagger() * rho) * &proj;
    (sub.trace().re.max(0.0), sub)
}

pub fn circuit_branches(e: &Subchannel, circ: &QubitCodeCircuit, input: &ComplexMatrix) -> Result<CircuitBranches> {
    if e.in_dim != 4 || e.out_dim != 4 {
        return Err(dim_err("circuit channel", "4->4", format!("{}->{}", e.in_dim, e.out_dim)));
    }
    let rho = as_density(input);
    if rho.shape() != (2, 2) {
        return Err(dim_err("circuit input", "2x2", format!("{:?}", rho.shape())));
    }
    let anc = pure_state(&ComplexMatrix::ket(2, 0));
    let r0 = rho.kron(&anc);
    let r1 = &(&circ.u_s * &r0) * &circ.u_s.dagger();
    let r2 = e.apply(&r1)?;
    let r3 = &(&circ.u_r * &r2) * &circ.u_r.dagger();
    let mut probs = [[0.0; 2]; 2];
    let mut states: [[Option<ComplexMatrix>; 2]; 2] = Default::default();
    for i in 0..2 {
        let (pi, sub) = measure_second(&r3, i);
        if pi <= 0.0 {
            continue;
        }
        let sigma = sub.scale_re(1.0 / pi);
        let t = sigma.kron(&anc);
        let t2 = &(&circ.v_r * &t) * &circ.v_r.dagger();
        for j in 0..2 {
            let (pj, sub2) = measure_second(&t2, j);
            probs[i][j] = pi * pj;
            if pj > 0.0 {
                states[i][j] = Some(sub2.scale_re(1.0 / pj));
            }
        }
    }
    Ok(CircuitBranches { probs, states })
}

struct Plan {
    labels: Vec<String>,
    /// Stage 1 probabilities, then per stage-1 outcome the conditional stage 2 probabilities.
    first: Vec<f64>,
    second: Vec<Vec<f64>>,
    accept: usize,
    accept_fidelity: Option<f64>,
    p_exact: f64,
}

fn plan_for(e: &Subchannel, target: SimTarget<'_>, psi: &ComplexMatrix) -> Result<Plan> {
    let rho = pure_state(psi);
    match target {
        SimTarget::Scheme(s) => {
            let out = run_exact(e, s, std::slice::from_ref(&rho))?.remove(0);
            let p = out.p.min(1.0);
            Ok(Plan {
                labels: vec!["(0)".into(), "(1)".into()],
                first: vec![p, 1.0 - p],
                second: vec![vec![1.0], vec![1.0]],
                accept: 0,
                accept_fidelity: out.fidelity,
                p_exact: out.p,
            })
        }
        SimTarget::Circuit(c) => {
            let br = circuit_branches(e, c, &rho)?;
            let pi = [br.probs[0][0] + br.probs[0][1], br.probs[1][0] + br.probs[1][1]];
            let cond = |i: usize| -> Vec<f64> {
                if pi[i] > 0.0 {
                    vec![br.probs[i][0] / pi[i], br.probs[i][1] / pi[i]]
                } else {
                    vec![1.0, 0.0]
                }
            };
            let accept_fidelity = match &br.states[0][0] {
                Some(sigma) => Some(fidelity(&rho, sigma)?),
                None => None,
            };
            Ok(Plan {
                labels: vec!["(0,0)".into(), "(0,1)".into(), "(1,0)".into(), "(1,1)".into()],
                first: pi.to_vec(),
                second: vec![cond(0), cond(1)],
                accept: 0,
                accept_fidelity,
                p_exact: br.probs[0][0],
            })
        }
    }
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Samples `shots` runs. Shots are split into fixed blocks of [`SHOTS_PER_BLOCK`], each with
/// its own child stream of `seed`, so the report does not depend on the thread count.
pub fn run_monte_carlo(e: &Subchannel, target: SimTarget<'_>, psi: &ComplexMatrix, shots: u64, seed: RngSeed) -> Result<SimReport> {
    if shots == 0 {
        return Err(Error::Invalid("shots must be positive".into()));
    }
    if psi.cols() != 1 {
        return Err(Error::Invalid("input must be a pure state given as a column vector".into()));
    }
    let nrm = psi.frobenius_norm();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("input state has norm {nrm}")));
    }
    let plan = plan_for(e, target, psi)?;
    let n_second = plan.second[0].len();
    let n_out = plan.first.len() * n_second;
    let blocks = shots.div_ceil(SHOTS_PER_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.child(b).rng();
            let n = SHOTS_PER_BLOCK.min(shots - b * SHOTS_PER_BLOCK);
            let mut local = vec![0u64; n_out];
            for _ in 0..n {
                let i = draw(&plan.first, &mut rng);
                let j = if n_second > 1 { draw(&plan.second[i], &mut rng) } else { 0 };
                local[i * n_second + j] += 1;
            }
            local
        })
        .reduce(|| vec![0u64; n_out], |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        });
    let accepted = counts[plan.accept];
    let fid = if accepted > 0 { plan.accept_fidelity } else { None };
    Ok(SimReport {
        p_exact: plan.p_exact,
        accept_freq: accepted as f64 / shots as f64,
        accepted_fidelity_mean: fid,
        accepted_fidelity_min: fid,
        shots,
        seed,
        branch_counts: plan.labels.iter().cloned().zip(counts).collect(),
    })
}
