//! Small fixed-size matrix primitives.
//!
//! `CMat2` holds codewords, channels and received blocks. `RMat8`/`RVec8`
//! hold the real equivalent model used by the sphere decoder. Real stacking
//! is column-major with real/imaginary interleaving per complex entry:
//! `[Re X11, Im X11, Re X21, Im X21, Re X12, Im X12, Re X22, Im X22]`.

use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Columns whose residual norm falls below this are treated as dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is numerically rank deficient at column {column} (residual norm {norm:e})")]
    RankDeficient { column: usize, norm: f64 },
}

/// 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CMat2(pub [[Complex64; 2]; 2]);

impl CMat2 {
    pub const ZERO: CMat2 = CMat2([[Complex64::new(0.0, 0.0); 2]; 2]);
    pub const IDENTITY: CMat2 = CMat2([
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ]);

    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        CMat2([[a, b], [c, d]])
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        CMat2([[a, z], [z, d]])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        CMat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        let m = &self.0;
        CMat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Squared Frobenius norm.
    pub fn frob_norm_sqr(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for CMat2 {
    type Output = CMat2;
    fn add(self, rhs: CMat2) -> CMat2 {
        let (a, b) = (&self.0, &rhs.0);
        CMat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for CMat2 {
    type Output = CMat2;
    fn sub(self, rhs: CMat2) -> CMat2 {
        self + (-rhs)
    }
}

impl Neg for CMat2 {
    type Output = CMat2;
    fn neg(self) -> CMat2 {
        self.scale_real(-1.0)
    }
}

impl Mul for CMat2 {
    type Output = CMat2;
    fn mul(self, rhs: CMat2) -> CMat2 {
        let (a, b) = (&self.0, &rhs.0);
        CMat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

pub type RVec8 = [f64; 8];

/// Column-major stacking followed by real/imaginary interleaving.
pub fn vec_tilde(x: &CMat2) -> RVec8 {
    let m = &x.0;
    [
        m[0][0].re, m[0][0].im, m[1][0].re, m[1][0].im, m[0][1].re, m[0][1].im, m[1][1].re,
        m[1][1].im,
    ]
}

/// Inverse of [`vec_tilde`].
pub fn from_vec_tilde(v: &RVec8) -> CMat2 {
    let c = |k: usize| Complex64::new(v[2 * k], v[2 * k + 1]);
    CMat2([[c(0), c(2)], [c(1), c(3)]])
}

/// Real 2×2 representation of complex multiplication by `s`.
pub fn check_scalar(s: Complex64) -> [[f64; 2]; 2] {
    [[s.re, -s.im], [s.im, s.re]]
}

/// Entrywise [`check_scalar`] of a 2×2 complex matrix.
pub fn check_op(x: &CMat2) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for r in 0..2 {
        for c in 0..2 {
            let b = check_scalar(x.0[r][c]);
            for i in 0..2 {
                for j in 0..2 {
                    out[2 * r + i][2 * c + j] = b[i][j];
                }
            }
        }
    }
    out
}

/// `‖Y − HS‖_F²`.
pub fn frob_metric(y: &CMat2, h: &CMat2, s: &CMat2) -> f64 {
    (*y - *h * *s).frob_norm_sqr()
}

pub fn dot8(a: &RVec8, b: &RVec8) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sqr8(a: &RVec8) -> f64 {
    dot8(a, a)
}

/// 8×8 real matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RMat8(pub [[f64; 8]; 8]);

impl Default for RMat8 {
    fn default() -> Self {
        RMat8::ZERO
    }
}

impl RMat8 {
    pub const ZERO: RMat8 = RMat8([[0.0; 8]; 8]);

    pub fn identity() -> Self {
        let mut m = RMat8::ZERO;
        for i in 0..8 {
            m.0[i][i] = 1.0;
        }
        m
    }

    pub fn from_columns(cols: &[RVec8]) -> Self {
        assert!(cols.len() <= 8, "at most 8 columns");
        let mut m = RMat8::ZERO;
        for (j, col) in cols.iter().enumerate() {
            for i in 0..8 {
                m.0[i][j] = col[i];
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> RVec8 {
        core::array::from_fn(|i| self.0[i][j])
    }

    pub fn transpose(&self) -> Self {
        let mut t = RMat8::ZERO;
        for i in 0..8 {
            for j in 0..8 {
                t.0[j][i] = self.0[i][j];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &RVec8) -> RVec8 {
        core::array::from_fn(|i| dot8(&self.0[i], v))
    }

    pub fn frob_norm(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Block-diagonal `I₂ ⊗ check_op(h)`: the real action of `S ↦ HS` on
    /// `vec_tilde(S)`.
    pub fn kron_i2_check(h: &CMat2) -> Self {
        let c = check_op(h);
        let mut m = RMat8::ZERO;
        for blk in 0..2 {
            for i in 0..4 {
                for j in 0..4 {
                    m.0[4 * blk + i][4 * blk + j] = c[i][j];
                }
            }
        }
        m
    }

    /// Permutes columns: column `j` of the result is column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize; 8]) -> Self {
        let mut out = RMat8::ZERO;
        for i in 0..8 {
            for j in 0..8 {
                out.0[i][j] = self.0[i][perm[j]];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for RMat8 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for RMat8 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Mul for RMat8 {
    type Output = RMat8;
    fn mul(self, rhs: RMat8) -> RMat8 {
        let mut out = RMat8::ZERO;
        for i in 0..8 {
            for k in 0..8 {
                let a = self.0[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..8 {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl Sub for RMat8 {
    type Output = RMat8;
    fn sub(self, rhs: RMat8) -> RMat8 {
        let mut out = self;
        for i in 0..8 {
            for j in 0..8 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}

/// QR by Gram-Schmidt on the first `cols` columns of `m`.
///
/// Returns `Q` with `cols` orthonormal columns (remaining columns zero) and
/// the `cols × cols` upper-triangular `R` in the top-left corner, with a
/// nonnegative diagonal. Modified Gram-Schmidt is used; it produces the same
/// factors as the classical recursion in exact arithmetic.
pub fn thin_qr(m: &RMat8, cols: usize) -> Result<(RMat8, RMat8), LinalgError> {
    assert!(cols <= 8);
    let mut q_cols = [[0.0; 8]; 8];
    let mut r = RMat8::ZERO;
    for i in 0..cols {
        let mut v = m.column(i);
        // two passes keep the basis orthogonal to machine precision
        for _ in 0..2 {
            for (j, qj) in q_cols.iter().enumerate().take(i) {
                let p = dot8(qj, &v);
                r.0[j][i] += p;
                for k in 0..8 {
                    v[k] -= p * qj[k];
                }
            }
        }
        let norm = norm_sqr8(&v).sqrt();
        if norm.is_nan() || norm < RANK_TOLERANCE {
            return Err(LinalgError::RankDeficient { column: i, norm });
        }
        r.0[i][i] = norm;
        for k in 0..8 {
            v[k] /= norm;
        }
        q_cols[i] = v;
    }
    Ok((RMat8::from_columns(&q_cols[..cols]), r))
}

/// Full 8×8 Gram-Schmidt QR, `M = QR`, `R` upper triangular with
/// nonnegative diagonal.
pub fn gram_schmidt_qr(m: &RMat8) -> Result<(RMat8, RMat8), LinalgError> {
    thin_qr(m, 8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_cmat(rng: &mut impl Rng) -> CMat2 {
        let mut z = || c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        CMat2::new(z(), z(), z(), z())
    }

    fn random_rmat(rng: &mut impl Rng) -> RMat8 {
        let mut m = RMat8::ZERO;
        for i in 0..8 {
            for j in 0..8 {
                m.0[i][j] = rng.random_range(-1.0..1.0);
            }
        }
        m
    }

    #[test]
    fn vec_tilde_reads_column_major() {
        assert_eq!(vec_tilde(&CMat2::ZERO), [0.0; 8]);
        let x = CMat2::new(c(1.0, 2.0), c(5.0, 6.0), c(3.0, 4.0), c(7.0, 8.0));
        assert_eq!(vec_tilde(&x), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(from_vec_tilde(&vec_tilde(&x)), x);
    }

    #[test]
    fn vec_tilde_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (a, b) = (random_cmat(&mut rng), random_cmat(&mut rng));
            let lhs = vec_tilde(&(a + b));
            let (va, vb) = (vec_tilde(&a), vec_tilde(&b));
            for k in 0..8 {
                assert!((lhs[k] - va[k] - vb[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn check_op_basics() {
        let id = check_op(&CMat2::IDENTITY);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(id[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(check_scalar(c(0.0, 1.0)), [[0.0, -1.0], [1.0, 0.0]]);
    }

    #[test]
    fn check_op_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let matmul4 = |a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]| {
            let mut o = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    o[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            o
        };
        for _ in 0..100 {
            let (a, b) = (random_cmat(&mut rng), random_cmat(&mut rng));
            let prod = check_op(&(a * b));
            let expect = matmul4(&check_op(&a), &check_op(&b));
            let herm = check_op(&a.hermitian());
            let ca = check_op(&a);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((prod[i][j] - expect[i][j]).abs() < 1e-10);
                    assert_eq!(herm[i][j], ca[j][i]);
                }
            }
        }
    }

    #[test]
    fn frob_metric_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (h, s) = (random_cmat(&mut rng), random_cmat(&mut rng));
        assert!(frob_metric(&(h * s), &h, &s) < 1e-20);
        assert_eq!(
            frob_metric(&CMat2::IDENTITY, &CMat2::IDENTITY, &CMat2::ZERO),
            2.0
        );
    }

    #[test]
    fn kron_check_acts_like_left_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (h, s) = (random_cmat(&mut rng), random_cmat(&mut rng));
            let lhs = vec_tilde(&(h * s));
            let rhs = RMat8::kron_i2_check(&h).mul_vec(&vec_tilde(&s));
            for k in 0..8 {
                assert!((lhs[k] - rhs[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn qr_of_identity_and_scaled_identity() {
        let (q, r) = gram_schmidt_qr(&RMat8::identity()).unwrap();
        assert_eq!(q, RMat8::identity());
        assert_eq!(r, RMat8::identity());
        let mut two = RMat8::ZERO;
        for i in 0..8 {
            two.0[i][i] = 2.0;
        }
        let (q, r) = gram_schmidt_qr(&two).unwrap();
        assert_eq!(q, RMat8::identity());
        assert_eq!(r, two);
    }

    #[test]
    fn qr_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let m = random_rmat(&mut rng);
            let (q, r) = gram_schmidt_qr(&m).unwrap();
            assert!((m - q * r).frob_norm() / m.frob_norm() < 1e-10);
            assert!((q.transpose() * q - RMat8::identity()).frob_norm() < 1e-10);
            for i in 0..8 {
                assert!(r.0[i][i] >= 0.0);
                for j in 0..i {
                    assert_eq!(r.0[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn qr_flags_rank_deficiency() {
        let mut m = RMat8::identity();
        for i in 0..8 {
            m.0[i][3] = m.0[i][1] * 2.0;
        }
        assert!(matches!(
            gram_schmidt_qr(&m),
            Err(LinalgError::RankDeficient { column: 3, .. })
        ));
    }
}
