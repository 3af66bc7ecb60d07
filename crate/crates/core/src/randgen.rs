//! Seeded random matrices, channels and states.
//!
//! Every generator takes an explicit [`RngSeed`]; there is no global RNG state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::Subchannel;
use crate::error::{Error, Result};
use crate::matcore::{c, inverse_sqrt, ComplexMatrix};
use num_complex::Complex64 as C64;

/// Seed plus stream index. Distinct streams of the same seed are independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// ChaCha20 generator keyed by `seed`, positioned on `stream`.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        let mut z = self.seed;
        for chunk in key.chunks_mut(8) {
            z = splitmix64(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }

    /// Child seed for sub-task `index`; deterministic and independent of scheduling.
    pub fn child(&self, index: u64) -> RngSeed {
        RngSeed { seed: splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0xA5A5))), stream: index }
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re * s, im * s)
}

/// Complex Ginibre matrix: i.i.d. entries with independent N(0, 1/2) real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let data: Vec<C64> = (0..rows * cols).map(|_| gauss(rng)).collect();
    ComplexMatrix::from_row_major(rows, cols, &data).expect("sizes agree")
}

/// Random channel `C^in -> C^out` with `r` Kraus operators `G_i Q^{-1/2}`,
/// `Q = sum G_i^dag G_i`. A singular draw is resampled once.
pub fn random_channel_dims<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, r: usize, rng: &mut R) -> Result<Subchannel> {
    if r == 0 || in_dim == 0 || out_dim == 0 {
        return Err(Error::Invalid("random_channel: dimensions and rank must be positive".into()));
    }
    for _ in 0..2 {
        let gs: Vec<ComplexMatrix> = (0..r).map(|_| ginibre(out_dim, in_dim, rng)).collect();
        let mut q = ComplexMatrix::zeros(in_dim, in_dim);
        for g in &gs {
            q = q + &g.dagger() * g;
        }
        match inverse_sqrt(&q, 1e-12) {
            Ok(qi) => {
                let kraus = gs.iter().map(|g| g * &qi).collect();
                return Subchannel::new(in_dim, out_dim, kraus);
            }
            Err(Error::Singular(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Singular(format!("random_channel: singular normalizer for r={r}, out={out_dim}, in={in_dim}")))
}

/// Random channel on `C^s` with `r` Kraus operators.
pub fn random_channel<R: Rng + ?Sized>(s: usize, r: usize, rng: &mut R) -> Result<Subchannel> {
    random_channel_dims(s, s, r, rng)
}

/// Random Schur channel on `C^s` with `r` diagonal Kraus operators, normalized per coordinate.
pub fn random_schur_channel<R: Rng + ?Sized>(s: usize, r: usize, rng: &mut R) -> Result<Subchannel> {
    if r == 0 || s == 0 {
        return Err(Error::Invalid("random_schur_channel: s and r must be positive".into()));
    }
    let mut diags: Vec<Vec<C64>> = (0..r).map(|_| (0..s).map(|_| gauss(rng)).collect()).collect();
    for j in 0..s {
        let n: f64 = diags.iter().map(|d| d[j].norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::Singular("random_schur_channel: zero column".into()));
        }
        for d in diags.iter_mut() {
            d[j] /= n;
        }
    }
    Subchannel::schur_channel(&diags)
}

/// Haar-random pure state as a unit column vector.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, 1, rng);
    let n = g.frobenius_norm();
    g.scale_re(1.0 / n)
}

/// Haar-random unitary (QR of a Ginibre matrix with the phase of `R` removed).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let qr = g.as_nalgebra().clone().qr();
    let q = qr.q();
    let r = qr.r();
    ComplexMatrix::from_fn(d, d, |i, j| {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        q[(i, j)] * ph
    })
}

/// Haar-random isometry `C^d -> C^s` (first `d` columns of a random unitary).
pub fn random_isometry<R: Rng + ?Sized>(s: usize, d: usize, rng: &mut R) -> ComplexMatrix {
    let u = random_unitary(s, rng);
    u.block(0, 0, s, d)
}
