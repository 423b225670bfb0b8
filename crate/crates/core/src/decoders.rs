//! Maximum-likelihood decoders with metric-evaluation counters.
//!
//! All three decoders minimize `‖Y − HS‖_F²` over the full symbol alphabet
//! and break exact metric ties towards the lexicographically smallest label
//! vector `(x1, x2, x3, x4)`, so they agree symbol-for-symbol.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::channel::{build_real_model, RealModel};
use crate::codes::{CodeId, CodeSpec, SymbolVector};
use crate::constellation::QamAlphabet;
use crate::linalg::{norm_sqr8, vec_tilde, CMat2, LinalgError, RVec8};

/// Structural zeros of `R` smaller than this are snapped to zero.
pub const STRUCTURAL_ZERO_TOLERANCE: f64 = 1e-10;

/// Largest weight-identity residual for which the conditional decomposition
/// is accepted.
const QUASI_ORTHOGONAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("decoder does not support code `{0}`")]
    UnsupportedCode(CodeId),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("R entry ({row}, {col}) = {value:e} should be structurally zero")]
    StructureMismatch { row: usize, col: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DecoderId {
    Exhaustive,
    Conditional,
    Sphere,
}

impl DecoderId {
    pub const ALL: [DecoderId; 3] = [
        DecoderId::Exhaustive,
        DecoderId::Conditional,
        DecoderId::Sphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderId::Exhaustive => "exhaustive",
            DecoderId::Conditional => "conditional",
            DecoderId::Sphere => "sphere",
        }
    }

    /// Whether this decoder can run on `code`.
    pub fn supports(self, code: &CodeSpec) -> bool {
        match self {
            DecoderId::Conditional => conditional_applies(code),
            _ => true,
        }
    }
}

impl fmt::Display for DecoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown decoder `{0}` (known: exhaustive, conditional, sphere)")]
pub struct UnknownDecoder(pub alloc::string::String);

impl FromStr for DecoderId {
    type Err = UnknownDecoder;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DecoderId::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| UnknownDecoder(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeResult {
    /// Alphabet labels; entries past the code's symbol count are zero.
    pub labels: [usize; 4],
    pub symbols: SymbolVector,
    pub metric: f64,
    pub metric_evals: u64,
    /// Tree nodes accepted by the sphere search (zero for the other decoders).
    pub node_visits: u64,
}

fn better(metric: f64, labels: &[usize; 4], best: f64, best_labels: &[usize; 4]) -> bool {
    metric < best || (metric == best && labels < best_labels)
}

/// Per-symbol images `vec_tilde(H·(xI·A_{2m} + xQ·A_{2m+1}))` for every label.
fn symbol_images(h: &CMat2, code: &CodeSpec, alphabet: &QamAlphabet) -> Vec<Vec<RVec8>> {
    let hw: Vec<RVec8> = code
        .weight_matrices()
        .iter()
        .map(|a| vec_tilde(&(*h * *a)))
        .collect();
    (0..code.symbols())
        .map(|m| {
            alphabet
                .points()
                .iter()
                .map(|p| core::array::from_fn(|i| p.re * hw[2 * m][i] + p.im * hw[2 * m + 1][i]))
                .collect()
        })
        .collect()
}

fn sub8(a: &RVec8, b: &RVec8) -> RVec8 {
    core::array::from_fn(|i| a[i] - b[i])
}

fn result(alphabet: &QamAlphabet, labels: [usize; 4], symbols: usize, metric: f64) -> DecodeResult {
    let mut x = [num_complex::Complex64::new(0.0, 0.0); 4];
    for (k, xk) in x.iter_mut().enumerate().take(symbols) {
        *xk = alphabet.point(labels[k]);
    }
    DecodeResult {
        labels,
        symbols: SymbolVector::new(x),
        metric,
        metric_evals: 0,
        node_visits: 0,
    }
}

/// Brute-force ML over all `M^k` label vectors.
pub fn decode_exhaustive(
    y: &CMat2,
    h: &CMat2,
    code: &CodeSpec,
    alphabet: &QamAlphabet,
) -> DecodeResult {
    let images = symbol_images(h, code, alphabet);
    let mut best = (f64::INFINITY, [0usize; 4]);
    let mut labels = [0usize; 4];
    let mut evals = 0u64;
    exhaustive_level(
        &images,
        0,
        &vec_tilde(y),
        &mut labels,
        &mut best,
        &mut evals,
    );
    let mut out = result(alphabet, best.1, code.symbols(), best.0);
    out.metric_evals = evals;
    out
}

fn exhaustive_level(
    images: &[Vec<RVec8>],
    level: usize,
    residual: &RVec8,
    labels: &mut [usize; 4],
    best: &mut (f64, [usize; 4]),
    evals: &mut u64,
) {
    if level == images.len() {
        *evals += 1;
        let m = norm_sqr8(residual);
        // iteration is lexicographic, so strict improvement keeps the first tie
        if m < best.0 {
            *best = (m, *labels);
        }
        return;
    }
    for (l, img) in images[level].iter().enumerate() {
        labels[level] = l;
        exhaustive_level(images, level + 1, &sub8(residual, img), labels, best, evals);
    }
}

fn conditional_applies(code: &CodeSpec) -> bool {
    code.id() == CodeId::Proposed
        && code.is_canonical()
        && code.weight_identity_residual().0 < QUASI_ORTHOGONAL_TOLERANCE
}

/// ML decoding by conditioning on `(x3, x4)`: given the pair, the metric
/// splits into a term in `x1` plus a term in `x2`, each minimized over the
/// alphabet independently. Evaluates exactly `2M³` partial metrics.
pub fn decode_conditional(
    y: &CMat2,
    h: &CMat2,
    code: &CodeSpec,
    alphabet: &QamAlphabet,
) -> Result<DecodeResult, DecodeError> {
    if !conditional_applies(code) {
        return Err(DecodeError::UnsupportedCode(code.id()));
    }
    let images = symbol_images(h, code, alphabet);
    let yt = vec_tilde(y);
    let n = alphabet.size();
    let mut best = (f64::INFINITY, [0usize; 4]);
    let mut evals = 0u64;

    let argmin = |r: &RVec8, imgs: &[RVec8], evals: &mut u64| {
        let mut b = (f64::INFINITY, 0usize);
        for (l, img) in imgs.iter().enumerate() {
            *evals += 1;
            let m = norm_sqr8(&sub8(r, img));
            if m < b.0 {
                b = (m, l);
            }
        }
        b
    };

    for l3 in 0..n {
        let r3 = sub8(&yt, &images[2][l3]);
        for l4 in 0..n {
            let r = sub8(&r3, &images[3][l4]);
            // ‖r − u1 − u2‖² = ‖r − u1‖² + ‖r − u2‖² − ‖r‖² since u1 ⟂ u2
            let (m1, l1) = argmin(&r, &images[0], &mut evals);
            let (m2, l2) = argmin(&r, &images[1], &mut evals);
            let total = m1 + m2 - norm_sqr8(&r);
            let labels = [l1, l2, l3, l4];
            if better(total, &labels, best.0, &best.1) {
                best = (total, labels);
            }
        }
    }
    let mut out = result(alphabet, best.1, 4, best.0.max(0.0));
    out.metric_evals = evals;
    Ok(out)
}

/// Depth-first Schnorr-Euchner enumeration over the finite alphabet on an
/// upper-triangular system `‖z − R·x̃‖²`.
struct Enumerator<'a> {
    r: [[f64; 8]; 8],
    z: &'a RVec8,
    alphabet: &'a QamAlphabet,
    imag_levels: Vec<f64>,
    /// For each imaginary level: the (real part, label) pairs present.
    reals: Vec<Vec<(f64, usize)>>,
    /// Enumeration stops after fixing this coordinate.
    stop: usize,
    x: RVec8,
    imag_idx: [usize; 4],
    labels: [usize; 4],
    best: f64,
    best_labels: [usize; 4],
    node_visits: u64,
    metric_evals: u64,
    /// Independent tail searches run at the leaves (structured mode).
    split_tail: bool,
}

impl<'a> Enumerator<'a> {
    fn new(r: [[f64; 8]; 8], z: &'a RVec8, alphabet: &'a QamAlphabet, stop: usize) -> Self {
        let imag_levels = alphabet.imag_levels();
        let reals = imag_levels
            .iter()
            .map(|&im| {
                alphabet
                    .points()
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.im == im)
                    .map(|(l, p)| (p.re, l))
                    .collect()
            })
            .collect();
        Enumerator {
            r,
            z,
            alphabet,
            imag_levels,
            reals,
            stop,
            x: [0.0; 8],
            imag_idx: [0; 4],
            labels: [0; 4],
            best: f64::INFINITY,
            best_labels: [0; 4],
            node_visits: 0,
            metric_evals: 0,
            split_tail: false,
        }
    }

    fn center(&self, k: usize, dim: usize) -> f64 {
        let mut acc = self.z[k];
        for j in k + 1..dim {
            acc -= self.r[k][j] * self.x[j];
        }
        acc / self.r[k][k]
    }

    fn search(&mut self, k: usize, dim: usize, partial: f64) {
        let c = self.center(k, dim);
        let rkk2 = self.r[k][k] * self.r[k][k];
        let sym = k / 2;
        // candidate values with the label/imag-index they imply
        let mut cands: Vec<(f64, usize)> = if k % 2 == 1 {
            self.imag_levels
                .iter()
                .copied()
                .enumerate()
                .map(|(i, v)| (v, i))
                .collect()
        } else {
            self.reals[self.imag_idx[sym]].clone()
        };
        cands.sort_by(|a, b| {
            (a.0 - c)
                .abs()
                .total_cmp(&(b.0 - c).abs())
                .then(a.0.total_cmp(&b.0))
        });
        for (v, tag) in cands {
            let d = partial + rkk2 * (v - c) * (v - c);
            if d > self.best {
                break;
            }
            self.node_visits += 1;
            self.x[k] = v;
            if k % 2 == 1 {
                self.imag_idx[sym] = tag;
            } else {
                self.labels[sym] = tag;
            }
            if k == self.stop {
                self.leaf(d);
            } else {
                self.search(k - 1, dim, d);
            }
        }
    }

    fn leaf(&mut self, d: f64) {
        if !self.split_tail {
            self.metric_evals += 1;
            if better(d, &self.labels, self.best, &self.best_labels) {
                self.best = d;
                self.best_labels = self.labels;
            }
            return;
        }
        // x3, x4 fixed: rows 0-1 involve only x1, rows 2-3 only x2
        let mut total = d;
        let mut labels = self.labels;
        for (sym, rows) in [(0usize, 0usize), (1, 2)] {
            let e: [f64; 2] = core::array::from_fn(|i| {
                let row = rows + i;
                let mut acc = self.z[row];
                for j in 4..8 {
                    acc -= self.r[row][j] * self.x[j];
                }
                acc
            });
            let mut b = (f64::INFINITY, 0usize);
            for (l, p) in self.alphabet.points().iter().enumerate() {
                self.metric_evals += 1;
                let r = &self.r;
                let e0 = e[0] - r[rows][rows] * p.re - r[rows][rows + 1] * p.im;
                let e1 = e[1] - r[rows + 1][rows + 1] * p.im;
                let m = e0 * e0 + e1 * e1;
                if m < b.0 {
                    b = (m, l);
                }
            }
            total += b.0;
            labels[sym] = b.1;
        }
        if better(total, &labels, self.best, &self.best_labels) {
            self.best = total;
            self.best_labels = labels;
        }
    }
}

/// Sphere decoding on the real model.
///
/// For the proposed code the structure of `R` is exploited: a 4-dimensional
/// search over `[Re x3, Im x3, Re x4, Im x4]` followed, at each surviving
/// leaf, by two independent 2-dimensional searches for `x1` and `x2`.
/// Other codes use a plain 2k-dimensional search.
pub fn decode_sphere(
    model: &RealModel,
    code: &CodeSpec,
    alphabet: &QamAlphabet,
) -> Result<DecodeResult, DecodeError> {
    let dim = model.dim;
    let mut r = model.r.0;
    let structured = model.code == CodeId::Proposed && code.is_canonical();
    if structured {
        for row in 0..2 {
            for col in 2..4 {
                let v = r[row][col];
                if v.abs() >= STRUCTURAL_ZERO_TOLERANCE {
                    return Err(DecodeError::StructureMismatch { row, col, value: v });
                }
                r[row][col] = 0.0;
            }
        }
    }
    let stop = if structured { 4 } else { 0 };
    let mut e = Enumerator::new(r, &model.z, alphabet, stop);
    e.split_tail = structured;
    e.search(dim - 1, dim, 0.0);
    let mut out = result(
        alphabet,
        e.best_labels,
        code.symbols(),
        e.best + model.residual,
    );
    out.metric_evals = e.metric_evals;
    out.node_visits = e.node_visits;
    Ok(out)
}

/// Runs `decoder` on one received block.
pub fn decode(
    decoder: DecoderId,
    y: &CMat2,
    h: &CMat2,
    code: &CodeSpec,
    alphabet: &QamAlphabet,
) -> Result<DecodeResult, DecodeError> {
    match decoder {
        DecoderId::Exhaustive => Ok(decode_exhaustive(y, h, code, alphabet)),
        DecoderId::Conditional => decode_conditional(y, h, code, alphabet),
        DecoderId::Sphere => {
            let model = build_real_model(y, h, code)?;
            decode_sphere(&model, code, alphabet)
        }
    }
}
