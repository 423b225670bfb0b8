//! Code registry.
//!
//! Every code is stored as linear-dispersion data: weight matrices indexed
//! by the real coordinates `[Re x1, Im x1, Re x2, Im x2, ...]` of the
//! integer-grid symbols, and a generator matrix `G` with
//! `vec_tilde(S) = G·s̃`, where `s` are the transmitted (rotated, for CIOD
//! based codes) symbols. Closed-form encoders are kept next to the registry
//! so the two descriptions can be checked against each other.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::constellation::{rotate, rotation_phasor, QamAlphabet};
use crate::linalg::{dot8, vec_tilde, CMat2, RMat8, RVec8};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodeError {
    #[error("unknown code `{0}` (known: proposed, golden, htw-pga, sezginer-sari, ciod)")]
    UnknownCode(String),
}

/// Registered codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CodeId {
    /// CIOD pair plus permuted, `e^{jπ/4}`-scaled second CIOD.
    Proposed,
    /// Rate-1 coordinate-interleaved orthogonal design on two symbols.
    Ciod,
    Golden,
    HtwPga,
    SezginerSari,
}

impl CodeId {
    pub const ALL: [CodeId; 5] = [
        CodeId::Proposed,
        CodeId::Golden,
        CodeId::HtwPga,
        CodeId::SezginerSari,
        CodeId::Ciod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CodeId::Proposed => "proposed",
            CodeId::Ciod => "ciod",
            CodeId::Golden => "golden",
            CodeId::HtwPga => "htw-pga",
            CodeId::SezginerSari => "sezginer-sari",
        }
    }
}

impl fmt::Display for CodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodeId {
    type Err = CodeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CodeId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CodeError::UnknownCode(String::from(s)))
    }
}

/// Four integer-grid information symbols. Two-symbol codes read `x[0..2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymbolVector {
    pub x: [Complex64; 4],
}

impl SymbolVector {
    pub fn new(x: [Complex64; 4]) -> Self {
        SymbolVector { x }
    }

    pub fn from_labels(alphabet: &QamAlphabet, labels: &[usize; 4]) -> Self {
        SymbolVector {
            x: labels.map(|l| alphabet.point(l)),
        }
    }

    /// `s_i = e^{jθ_g}·x_i`.
    pub fn rotated(&self) -> [Complex64; 4] {
        self.x.map(rotate)
    }

    /// `x̃`: interleaved real/imaginary coordinates.
    pub fn coords(&self) -> RVec8 {
        let x = &self.x;
        [
            x[0].re, x[0].im, x[1].re, x[1].im, x[2].re, x[2].im, x[3].re, x[3].im,
        ]
    }

    pub fn from_coords(c: &RVec8) -> Self {
        SymbolVector {
            x: core::array::from_fn(|i| Complex64::new(c[2 * i], c[2 * i + 1])),
        }
    }
}

fn j() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// CIOD for two transmit antennas:
/// `diag(s1I + j·s2Q, s2I + j·s1Q)`.
pub fn encode_ciod(s1: Complex64, s2: Complex64) -> CMat2 {
    CMat2::diag(Complex64::new(s1.re, s2.im), Complex64::new(s2.re, s1.im))
}

/// The proposed code on the integer-grid symbols `v.x` (rotation applied here):
///
/// ```text
/// [ s1I + j s2Q             e^{jπ/4}(s3I + j s4Q) ]
/// [ e^{jπ/4}(s4I + j s3Q)   s2I + j s1Q           ]
/// ```
pub fn encode_proposed(v: &SymbolVector) -> CMat2 {
    let s = v.rotated();
    let w = Complex64::from_polar(1.0, core::f64::consts::FRAC_PI_4);
    CMat2::new(
        Complex64::new(s[0].re, s[1].im),
        w * Complex64::new(s[2].re, s[3].im),
        w * Complex64::new(s[3].re, s[2].im),
        Complex64::new(s[1].re, s[0].im),
    )
}

/// Golden code, `1/√5`-normalized, on unrotated integer-grid symbols.
pub fn encode_golden(v: &SymbolVector) -> CMat2 {
    let sqrt5 = 5f64.sqrt();
    let theta = (1.0 + sqrt5) / 2.0;
    let theta_bar = (1.0 - sqrt5) / 2.0;
    let alpha = Complex64::new(1.0, 1.0 - theta);
    let alpha_bar = Complex64::new(1.0, 1.0 - theta_bar);
    let x = &v.x;
    CMat2::new(
        alpha * (x[0] + x[1] * theta),
        alpha * (x[2] + x[3] * theta),
        j() * alpha_bar * (x[2] + x[3] * theta_bar),
        alpha_bar * (x[0] + x[1] * theta_bar),
    )
    .scale_real(1.0 / sqrt5)
}

/// HTW-PGA code: two Alamouti layers, the second mixed by a unitary over
/// `Q(i, √−7)` and right-multiplied by `diag(1, −1)`.
pub fn encode_htw_pga(v: &SymbolVector) -> CMat2 {
    let x = &v.x;
    let s7 = 7f64.sqrt();
    let z3 = (Complex64::new(1.0, 1.0) * x[2] + Complex64::new(1.0, 2.0) * x[3]) / s7;
    let z4 = (Complex64::new(-1.0, 2.0) * x[2] + Complex64::new(1.0, -1.0) * x[3]) / s7;
    CMat2::new(
        x[0] + z3,
        -x[1].conj() + z4.conj(),
        x[1] + z4,
        x[0].conj() - z3.conj(),
    )
    .scale_real(core::f64::consts::FRAC_1_SQRT_2)
}

/// Sezginer-Sari code with `a = c = 1/√2`, `b = (1−√7 + j(1+√7))/(4√2)`,
/// `d = −j·b`.
pub fn encode_sezginer_sari(v: &SymbolVector) -> CMat2 {
    let x = &v.x;
    let s7 = 7f64.sqrt();
    let a = re(core::f64::consts::FRAC_1_SQRT_2);
    let b = Complex64::new(1.0 - s7, 1.0 + s7) / (4.0 * 2f64.sqrt());
    let d = -j() * b;
    CMat2::new(
        a * x[0] + b * x[2],
        -(a * x[1].conj()) - d * x[3].conj(),
        a * x[1] + b * x[3],
        a * x[0].conj() + d * x[2].conj(),
    )
}

/// Closed-form encoder for any registered code.
pub fn encode_reference(id: CodeId, v: &SymbolVector) -> CMat2 {
    match id {
        CodeId::Proposed => encode_proposed(v),
        CodeId::Ciod => {
            let s = v.rotated();
            encode_ciod(s[0], s[1])
        }
        CodeId::Golden => encode_golden(v),
        CodeId::HtwPga => encode_htw_pga(v),
        CodeId::SezginerSari => encode_sezginer_sari(v),
    }
}

/// The eight weight matrices of the proposed code, as listed for its
/// conditional-decoding derivation.
fn proposed_weight_matrices() -> [CMat2; 8] {
    let (c, s) = (rotation_phasor().re, rotation_phasor().im);
    let z = re(0.0);
    let w = Complex64::from_polar(1.0, core::f64::consts::FRAC_PI_4);
    [
        CMat2::new(re(c), z, z, j() * s),
        CMat2::new(re(-s), z, z, j() * c),
        CMat2::new(j() * s, z, z, re(c)),
        CMat2::new(j() * c, z, z, re(-s)),
        CMat2::new(z, re(c), j() * s, z).scale(w),
        CMat2::new(z, re(-s), j() * c, z).scale(w),
        CMat2::new(z, j() * s, re(c), z).scale(w),
        CMat2::new(z, j() * c, re(-s), z).scale(w),
    ]
}

/// Generator of the proposed code on `s̃`, entries `0, ±1, ±1/√2`.
fn proposed_generator() -> RMat8 {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    RMat8([
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, -h, h, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, h, h, 0.0],
        [0.0, 0.0, 0.0, 0.0, h, 0.0, 0.0, -h],
        [0.0, 0.0, 0.0, 0.0, h, 0.0, 0.0, h],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ])
}

/// `F = diag[J, J, J, J]`, `J` the 2×2 rotation by `θ_g`; maps `x̃` to `s̃`.
pub fn rotation_block_matrix() -> RMat8 {
    let (c, s) = (rotation_phasor().re, rotation_phasor().im);
    let mut f = RMat8::ZERO;
    for k in 0..4 {
        f.0[2 * k][2 * k] = c;
        f.0[2 * k][2 * k + 1] = -s;
        f.0[2 * k + 1][2 * k] = s;
        f.0[2 * k + 1][2 * k + 1] = c;
    }
    f
}

/// Linear-dispersion description of one 2×2 code.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    id: CodeId,
    symbols: usize,
    weights: Vec<CMat2>,
    generator: RMat8,
    rotated: bool,
    /// Non-identity only for deliberately corrupted copies.
    coordinate_order: [usize; 8],
}

impl CodeSpec {
    pub fn get(id: CodeId) -> CodeSpec {
        match id {
            CodeId::Proposed => CodeSpec {
                id,
                symbols: 4,
                weights: proposed_weight_matrices().to_vec(),
                generator: proposed_generator(),
                rotated: true,
                coordinate_order: IDENTITY_ORDER,
            },
            CodeId::Ciod => {
                let weights = weights_from_encoder(id, 2);
                // generator on s̃: columns are the unrotated weight images
                let cols: Vec<RVec8> = (0..4)
                    .map(|k| {
                        let mut s = [Complex64::new(0.0, 0.0); 2];
                        s[k / 2] = if k % 2 == 0 { re(1.0) } else { j() };
                        vec_tilde(&encode_ciod(s[0], s[1]))
                    })
                    .collect();
                CodeSpec {
                    id,
                    symbols: 2,
                    weights,
                    generator: RMat8::from_columns(&cols),
                    rotated: true,
                    coordinate_order: IDENTITY_ORDER,
                }
            }
            CodeId::Golden | CodeId::HtwPga | CodeId::SezginerSari => {
                let weights = weights_from_encoder(id, 4);
                let cols: Vec<RVec8> = weights.iter().map(vec_tilde).collect();
                CodeSpec {
                    id,
                    symbols: 4,
                    weights,
                    generator: RMat8::from_columns(&cols),
                    rotated: false,
                    coordinate_order: IDENTITY_ORDER,
                }
            }
        }
    }

    pub fn by_name(name: &str) -> Result<CodeSpec, CodeError> {
        Ok(CodeSpec::get(name.parse()?))
    }

    pub fn id(&self) -> CodeId {
        self.id
    }

    /// Complex information symbols per codeword.
    pub fn symbols(&self) -> usize {
        self.symbols
    }

    /// Real coordinates per codeword (`2·symbols`).
    pub fn dim(&self) -> usize {
        2 * self.symbols
    }

    pub fn weight_matrices(&self) -> &[CMat2] {
        &self.weights
    }

    pub fn generator(&self) -> &RMat8 {
        &self.generator
    }

    pub fn uses_rotation(&self) -> bool {
        self.rotated
    }

    /// Maps `x̃` to `s̃`: `F` for rotated codes, identity otherwise.
    pub fn rotation_matrix(&self) -> RMat8 {
        if self.rotated {
            rotation_block_matrix()
        } else {
            RMat8::identity()
        }
    }

    /// `G·F` restricted to the code's coordinates, i.e. the matrix whose
    /// column `k` is `vec_tilde(A_k)`.
    pub fn generator_on_coords(&self) -> RMat8 {
        let cols: Vec<RVec8> = self.weights.iter().map(vec_tilde).collect();
        RMat8::from_columns(&cols)
    }

    /// `Σ_k x̃_k A_k`.
    pub fn encode(&self, v: &SymbolVector) -> CMat2 {
        let c = v.coords();
        self.weights
            .iter()
            .zip(c.iter())
            .fold(CMat2::ZERO, |acc, (a, &xk)| acc + a.scale_real(xk))
    }

    /// Symbols after the code's own rotation (identity for unrotated codes).
    pub fn transmitted_symbols(&self, v: &SymbolVector) -> [Complex64; 4] {
        if self.rotated {
            v.rotated()
        } else {
            v.x
        }
    }

    /// `vec_tilde(S)` via the generator: `G·s̃`.
    pub fn encode_via_generator(&self, v: &SymbolVector) -> RVec8 {
        let s = SymbolVector::new(self.transmitted_symbols(v));
        let mut st = s.coords();
        for v in st.iter_mut().skip(self.dim()) {
            *v = 0.0;
        }
        self.generator.mul_vec(&st)
    }

    /// `‖GᵀG − I‖_F` over the code's coordinates.
    pub fn generator_unitarity_residual(&self) -> f64 {
        let g = &self.generator;
        let n = self.dim();
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let d = dot8(&g.column(a), &g.column(b)) - if a == b { 1.0 } else { 0.0 };
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    /// Largest entry of `A_m A_lᴴ + A_l A_mᴴ` over the first four weight
    /// matrices with `l ∉ {m, partner(m)}`, partners being (1,2) and (3,4).
    pub fn weight_identity_residual(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        let n = self.weights.len().min(4);
        for m in 0..n {
            for l in 0..n {
                if l == m || l == (m ^ 1) {
                    continue;
                }
                let (a, b) = (self.weights[m], self.weights[l]);
                let r = (a * b.hermitian() + b * a.hermitian()).max_abs();
                if r > worst.0 {
                    worst = (r, m + 1, l + 1);
                }
            }
        }
        worst
    }

    /// Scale `c` such that `E‖c·S‖_F² = n_t·T = 4` under uniform labels.
    pub fn energy_scale(&self, alphabet: &QamAlphabet) -> f64 {
        let (rr, ri, ii) = alphabet.second_moments();
        let cols: Vec<RVec8> = self.weights.iter().map(vec_tilde).collect();
        let mut e = 0.0;
        for m in 0..self.symbols {
            let (gi, gq) = (&cols[2 * m], &cols[2 * m + 1]);
            e += rr * dot8(gi, gi) + 2.0 * ri * dot8(gi, gq) + ii * dot8(gq, gq);
        }
        (4.0 / e).sqrt()
    }

    /// Copy with the real symbol coordinates reordered by `perm`; column `k`
    /// of the new weight list/generator is column `perm[k]` of the original.
    /// Used as a negative control for structure checks. For rotated codes
    /// `perm` must move whole symbols (coordinate pairs) to keep `G·s̃`
    /// consistent with the weights.
    pub fn with_shuffled_coordinates(&self, perm: [usize; 8]) -> CodeSpec {
        let mut out = self.clone();
        out.weights = perm
            .iter()
            .take(self.dim())
            .map(|&p| self.weights[p])
            .collect();
        out.generator = self.generator.permute_columns(&perm);
        out.coordinate_order = perm;
        out
    }

    /// Whether this is an unmodified registry entry.
    pub fn is_canonical(&self) -> bool {
        self.coordinate_order == IDENTITY_ORDER
    }
}

const IDENTITY_ORDER: [usize; 8] = [0, 1, 2, 3, 4, 5, 6, 7];

/// Weight matrices read off a real-linear closed-form encoder.
fn weights_from_encoder(id: CodeId, symbols: usize) -> Vec<CMat2> {
    (0..2 * symbols)
        .map(|k| {
            let mut c = [0.0; 8];
            c[k] = 1.0;
            encode_reference(id, &SymbolVector::from_coords(&c))
        })
        .collect()
}

/// Weight matrices of a registered code.
pub fn weight_matrices(id: CodeId) -> Vec<CMat2> {
    CodeSpec::get(id).weights
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_symbols(rng: &mut impl Rng) -> SymbolVector {
        SymbolVector::new(core::array::from_fn(|_| {
            c(
                rng.random_range(-7..=7) as f64,
                rng.random_range(-7..=7) as f64,
            )
        }))
    }

    fn close(a: &CMat2, b: &CMat2, tol: f64) -> bool {
        (*a - *b).max_abs() < tol
    }

    #[test]
    fn names_round_trip() {
        for id in CodeId::ALL {
            assert_eq!(id.name().parse::<CodeId>().unwrap(), id);
        }
        assert_eq!(
            "alamouti".parse::<CodeId>(),
            Err(CodeError::UnknownCode(String::from("alamouti")))
        );
    }

    #[test]
    fn ciod_examples() {
        assert_eq!(encode_ciod(c(0.0, 0.0), c(0.0, 0.0)), CMat2::ZERO);
        assert_eq!(
            encode_ciod(c(1.0, 2.0), c(3.0, 4.0)),
            CMat2::diag(c(1.0, 4.0), c(3.0, 2.0))
        );
        let s = c(0.3, -1.2);
        assert_eq!(encode_ciod(s, s), CMat2::diag(s, s));
    }

    #[test]
    fn proposed_examples() {
        assert_eq!(encode_proposed(&SymbolVector::default()), CMat2::ZERO);
        let v = SymbolVector::new([c(1.0, 1.0), c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let s = c(0.3249197, 1.3763819);
        assert!(close(&encode_proposed(&v), &CMat2::diag(s, s), 1e-7));
    }

    #[test]
    fn proposed_first_weight_matrix_values() {
        let a1 = weight_matrices(CodeId::Proposed)[0];
        assert!(close(
            &a1,
            &CMat2::diag(c(0.8506508, 0.0), c(0.0, 0.5257311)),
            1e-7
        ));
    }

    #[test]
    fn weights_generator_and_closed_form_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for id in CodeId::ALL {
            let code = CodeSpec::get(id);
            for _ in 0..1000 {
                let mut v = random_symbols(&mut rng);
                if code.symbols() == 2 {
                    v.x[2] = c(0.0, 0.0);
                    v.x[3] = c(0.0, 0.0);
                }
                let s = code.encode(&v);
                assert!(close(&s, &encode_reference(id, &v), 1e-10), "{id}");
                let g = code.encode_via_generator(&v);
                let t = vec_tilde(&s);
                let err: f64 = (0..8).map(|k| (g[k] - t[k]).powi(2)).sum::<f64>().sqrt();
                assert!(err < 1e-10, "{id}: {err}");
            }
        }
    }

    #[test]
    fn proposed_generator_times_rotation_matches_weights() {
        let code = CodeSpec::get(CodeId::Proposed);
        let gf = *code.generator() * code.rotation_matrix();
        assert!((gf - code.generator_on_coords()).frob_norm() < 1e-14);
    }

    #[test]
    fn generator_unitarity() {
        assert!(CodeSpec::get(CodeId::Proposed).generator_unitarity_residual() < 1e-12);
        for id in [CodeId::Golden, CodeId::HtwPga, CodeId::Ciod] {
            assert!(
                CodeSpec::get(id).generator_unitarity_residual() < 1e-12,
                "{id}"
            );
        }
        // x1 and x3 share the diagonal with a·b ≠ 0
        assert!(CodeSpec::get(CodeId::SezginerSari).generator_unitarity_residual() > 0.5);
    }

    #[test]
    fn proposed_quasi_orthogonality() {
        let (r, _, _) = CodeSpec::get(CodeId::Proposed).weight_identity_residual();
        assert!(r < 1e-14, "{r}");
        let (r, _, _) = CodeSpec::get(CodeId::Golden).weight_identity_residual();
        assert!(r > 0.1);
    }

    #[test]
    fn energy_scale_normalizes_to_four() {
        for m in [4, 16] {
            let q = QamAlphabet::new(m).unwrap();
            for id in CodeId::ALL {
                let code = CodeSpec::get(id);
                let scale = code.energy_scale(&q);
                let n = q.size();
                // exact average over all label vectors for the two-symbol
                // marginal structure: E‖S‖² = Σ_m E‖x_m part‖²
                let mut e = 0.0;
                for m_sym in 0..code.symbols() {
                    for l in 0..n {
                        let mut v = SymbolVector::default();
                        v.x[m_sym] = q.point(l);
                        e += code.encode(&v).frob_norm_sqr();
                    }
                }
                let e = e / n as f64 * scale * scale;
                assert!((e - 4.0).abs() < 1e-12, "{id} M={m}: {e}");
            }
        }
    }

    #[test]
    fn shuffled_copy_still_encodes_consistently() {
        let code =
            CodeSpec::get(CodeId::Proposed).with_shuffled_coordinates([0, 1, 4, 5, 2, 3, 6, 7]);
        assert!(!code.is_canonical());
        let v = SymbolVector::new([c(1.0, -1.0), c(3.0, 1.0), c(-1.0, -3.0), c(1.0, 1.0)]);
        let g = code.encode_via_generator(&v);
        let t = vec_tilde(&code.encode(&v));
        for k in 0..8 {
            assert!((g[k] - t[k]).abs() < 1e-12);
        }
    }
}
