//! Quasi-static Rayleigh channel, AWGN and the real equivalent model.

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::codes::{CodeId, CodeSpec};
use crate::linalg::{norm_sqr8, thin_qr, vec_tilde, CMat2, LinalgError, RMat8, RVec8};

/// Number of transmit antennas.
pub const N_TX: usize = 2;

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// 2×2 channel with i.i.d. `CN(0, 1)` entries.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R) -> CMat2 {
    CMat2([
        [complex_gaussian(rng, 1.0), complex_gaussian(rng, 1.0)],
        [complex_gaussian(rng, 1.0), complex_gaussian(rng, 1.0)],
    ])
}

/// 2×2 noise block with i.i.d. `CN(0, n0)` entries.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, n0: f64) -> CMat2 {
    if n0 == 0.0 {
        return CMat2::ZERO;
    }
    CMat2([
        [complex_gaussian(rng, n0), complex_gaussian(rng, n0)],
        [complex_gaussian(rng, n0), complex_gaussian(rng, n0)],
    ])
}

/// `Y = HS + N`. With `n0 == 0` no randomness is consumed.
pub fn transmit<R: Rng + ?Sized>(s: &CMat2, h: &CMat2, n0: f64, rng: &mut R) -> CMat2 {
    assert!(n0 >= 0.0, "noise variance must be nonnegative");
    *h * *s + sample_noise(rng, n0)
}

/// Noise variance for a per-receive-antenna SNR in dB, assuming codewords
/// normalized to `E‖S‖_F² = n_t·T`: `N0 = n_t / 10^{snr/10}`.
pub fn n0_from_snr_db(snr_db: f64) -> f64 {
    N_TX as f64 / 10f64.powf(snr_db / 10.0)
}

/// Real equivalent of `Y = HS + N` on the integer-grid coordinates:
/// `vec_tilde(Y) = H_eq′·x̃ + ñ` with `H_eq′ = (I₂ ⊗ Ȟ)·G·F`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealModel {
    pub code: CodeId,
    /// Number of real unknowns (columns of `H_eq′` in use).
    pub dim: usize,
    pub h_eq: RMat8,
    pub y: RVec8,
    pub q: RMat8,
    pub r: RMat8,
    /// `Qᵀ·y` on the first `dim` rows.
    pub z: RVec8,
    /// `‖y‖² − ‖Qᵀy‖²`: the part of the metric outside the column space.
    pub residual: f64,
}

impl RealModel {
    /// `‖y − H_eq′·x̃‖²`.
    pub fn metric(&self, coords: &RVec8) -> f64 {
        let mut x = *coords;
        for v in x.iter_mut().skip(self.dim) {
            *v = 0.0;
        }
        let hx = self.h_eq.mul_vec(&x);
        let d: RVec8 = core::array::from_fn(|i| self.y[i] - hx[i]);
        norm_sqr8(&d)
    }
}

/// `I₂ ⊗ Ȟ` times the code generator and rotation, restricted to the
/// code's coordinates.
pub fn equivalent_channel(h: &CMat2, code: &CodeSpec) -> RMat8 {
    let mut m = RMat8::kron_i2_check(h) * *code.generator() * code.rotation_matrix();
    for row in m.0.iter_mut() {
        for v in row.iter_mut().skip(code.dim()) {
            *v = 0.0;
        }
    }
    m
}

/// Builds `H_eq′`, its QR factors and the rotated observation `Qᵀ·ỹ`.
pub fn build_real_model(y: &CMat2, h: &CMat2, code: &CodeSpec) -> Result<RealModel, LinalgError> {
    let h_eq = equivalent_channel(h, code);
    let dim = code.dim();
    let (q, r) = thin_qr(&h_eq, dim)?;
    let yt = vec_tilde(y);
    let mut z = [0.0; 8];
    for (k, zk) in z.iter_mut().enumerate().take(dim) {
        *zk = (0..8).map(|i| q.0[i][k] * yt[i]).sum();
    }
    let residual = (norm_sqr8(&yt) - norm_sqr8(&z)).max(0.0);
    Ok(RealModel {
        code: code.id(),
        dim,
        h_eq,
        y: yt,
        q,
        r,
        z,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::SymbolVector;
    use crate::linalg::frob_metric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(rng: &mut impl Rng) -> SymbolVector {
        SymbolVector::new(core::array::from_fn(|_| {
            Complex64::new(
                (2 * rng.random_range(-2..2) + 1) as f64,
                (2 * rng.random_range(-2..2) + 1) as f64,
            )
        }))
    }

    #[test]
    fn channel_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 250_000;
        let (mut p, mut vr, mut vi) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            for z in sample_channel(&mut rng).0.iter().flatten() {
                p += z.norm_sqr();
                vr += z.re * z.re;
                vi += z.im * z.im;
            }
        }
        let count = (4 * n) as f64;
        assert!((p / count - 1.0).abs() < 0.01);
        assert!((vr / count - 0.5).abs() < 0.01);
        assert!((vi / count - 0.5).abs() < 0.01);
    }

    #[test]
    fn channel_is_seed_deterministic() {
        let a = sample_channel(&mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_channel(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_transmission() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_channel(&mut rng);
        assert_eq!(transmit(&s, &CMat2::IDENTITY, 0.0, &mut rng), s);
        let h = sample_channel(&mut rng);
        let y = transmit(&s, &h, 0.0, &mut rng);
        assert_eq!(frob_metric(&y, &h, &s), 0.0);
    }

    #[test]
    fn noise_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n0 = 0.37;
        let n = 100_000;
        let e: f64 = (0..n)
            .map(|_| sample_noise(&mut rng, n0).frob_norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((e / (4.0 * n0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn identity_channel_gives_generator_times_rotation() {
        let code = CodeSpec::get(CodeId::Proposed);
        let m = build_real_model(&CMat2::ZERO, &CMat2::IDENTITY, &code).unwrap();
        let gf = *code.generator() * code.rotation_matrix();
        assert!((m.h_eq - gf).frob_norm() < 1e-15);
        assert_eq!(m.h_eq.mul_vec(&[0.0; 8]), vec_tilde(&CMat2::ZERO));
    }

    #[test]
    fn real_model_reproduces_codewords_and_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for id in CodeId::ALL {
            let code = CodeSpec::get(id);
            for _ in 0..1000 {
                let h = sample_channel(&mut rng);
                let mut v = random_symbols(&mut rng);
                if code.symbols() == 2 {
                    v.x[2] = Complex64::new(0.0, 0.0);
                    v.x[3] = Complex64::new(0.0, 0.0);
                }
                let s = code.encode(&v);
                let y = transmit(&s, &h, 0.5, &mut rng);
                let m = build_real_model(&y, &h, &code).unwrap();
                let lhs = vec_tilde(&(h * s));
                let rhs = m.h_eq.mul_vec(&v.coords());
                let err: f64 = (0..8)
                    .map(|i| (lhs[i] - rhs[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(err < 1e-10, "{id}: {err}");
                let mut v2 = random_symbols(&mut rng);
                if code.symbols() == 2 {
                    v2.x[2] = Complex64::new(0.0, 0.0);
                    v2.x[3] = Complex64::new(0.0, 0.0);
                }
                let f = frob_metric(&y, &h, &code.encode(&v2));
                assert!((f - m.metric(&v2.coords())).abs() < 1e-10 * (1.0 + f));
            }
        }
    }

    #[test]
    fn kron_embedding_is_block_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = sample_channel(&mut rng);
        let k = RMat8::kron_i2_check(&h);
        let c = crate::linalg::check_op(&h);
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i / 4 == j / 4 { c[i % 4][j % 4] } else { 0.0 };
                assert_eq!(k.0[i][j], expect);
            }
        }
    }

    #[test]
    fn snr_convention() {
        assert!((n0_from_snr_db(0.0) - 2.0).abs() < 1e-15);
        assert!((n0_from_snr_db(10.0) - 0.2).abs() < 1e-15);
    }
}
