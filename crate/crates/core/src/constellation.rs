//! Odd-integer-grid QAM alphabets and the CIOD rotation angle.
//!
//! Alphabets are kept unnormalized (points `a + jb` with `a, b` odd, spacing
//! 2) so that minimum determinants come out as small rationals. Energy
//! normalization happens in the simulator.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ConstellationError {
    #[error("unsupported QAM size {0} (supported: 4, 16, 64)")]
    UnsupportedSize(usize),
}

/// `½·arctan 2` radians: the CIOD rotation that maximizes coding gain.
pub fn theta_g() -> f64 {
    0.5 * 2.0f64.atan()
}

/// `e^{jθ_g}`.
pub fn rotation_phasor() -> Complex64 {
    Complex64::from_polar(1.0, theta_g())
}

/// Rotates an integer-grid point into the CIOD alphabet.
pub fn rotate(x: Complex64) -> Complex64 {
    rotation_phasor() * x
}

/// A finite QAM alphabet on the odd-integer grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QamAlphabet {
    points: Vec<Complex64>,
}

/// Builds the square `M`-QAM alphabet, ordered by real part then imaginary
/// part.
pub fn make_qam(m: usize) -> Result<QamAlphabet, ConstellationError> {
    let side = match m {
        4 => 2,
        16 => 4,
        64 => 8,
        _ => return Err(ConstellationError::UnsupportedSize(m)),
    };
    let levels: Vec<f64> = (0..side).map(|i| (2 * i - (side - 1)) as f64).collect();
    let mut points = Vec::with_capacity(m);
    for &re in &levels {
        for &im in &levels {
            points.push(Complex64::new(re, im));
        }
    }
    Ok(QamAlphabet { points })
}

impl QamAlphabet {
    pub fn new(m: usize) -> Result<Self, ConstellationError> {
        make_qam(m)
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    pub fn label_of(&self, x: Complex64) -> Option<usize> {
        self.points.iter().position(|p| *p == x)
    }

    /// Distinct real parts, ascending.
    pub fn real_levels(&self) -> Vec<f64> {
        sorted_unique(self.points.iter().map(|p| p.re))
    }

    /// Distinct imaginary parts, ascending.
    pub fn imag_levels(&self) -> Vec<f64> {
        sorted_unique(self.points.iter().map(|p| p.im))
    }

    /// Mean `|x|²` under uniform labels.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.size() as f64
    }

    /// Second moments `(E[re²], E[re·im], E[im²])` under uniform labels.
    pub fn second_moments(&self) -> (f64, f64, f64) {
        let n = self.size() as f64;
        let (mut rr, mut ri, mut ii) = (0.0, 0.0, 0.0);
        for p in &self.points {
            rr += p.re * p.re;
            ri += p.re * p.im;
            ii += p.im * p.im;
        }
        (rr / n, ri / n, ii / n)
    }

    /// All pairwise differences `a − b`, deduplicated, in lexicographic
    /// (real, imaginary) order. Includes zero.
    pub fn difference_set(&self) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = Vec::new();
        for a in &self.points {
            for b in &self.points {
                d.push(a - b);
            }
        }
        d.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        d.dedup();
        d
    }

    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }
}

fn sorted_unique(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = it.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}
