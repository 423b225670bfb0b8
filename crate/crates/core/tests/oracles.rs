//! Cross-checks against brute-force oracles that share no code with the
//! library's search routines.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stbc_core::analysis::{expected_min_det, min_determinant};
use stbc_core::channel::{sample_channel, transmit};
use stbc_core::codes::encode_reference;
use stbc_core::decoders::{decode_conditional, decode_exhaustive};
use stbc_core::linalg::frob_metric;
use stbc_core::{CodeId, CodeSpec, QamAlphabet, SymbolVector};

fn det2(m: [[Complex64; 2]; 2]) -> Complex64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Minimum `|det(S_a − S_b)|²` over every unordered pair of distinct
/// codewords, built from the closed-form encoders.
fn pairwise_min_det(id: CodeId, q: &QamAlphabet, symbols: usize) -> f64 {
    let m = q.size();
    let count = m.pow(symbols as u32);
    let words: Vec<[[Complex64; 2]; 2]> = (0..count)
        .map(|mut n| {
            let mut labels = [0usize; 4];
            for l in labels.iter_mut().take(symbols) {
                *l = n % m;
                n /= m;
            }
            encode_reference(id, &SymbolVector::from_labels(q, &labels)).0
        })
        .collect();
    let mut best = f64::INFINITY;
    for a in 0..count {
        for b in a + 1..count {
            let d =
                core::array::from_fn(|i| core::array::from_fn(|j| words[a][i][j] - words[b][i][j]));
            best = best.min(det2(d).norm_sqr());
        }
    }
    best
}

#[test]
fn min_det_matches_pairwise_oracle_at_4qam() {
    let q = QamAlphabet::new(4).unwrap();
    for id in CodeId::ALL {
        let code = CodeSpec::get(id);
        let oracle = pairwise_min_det(id, &q, code.symbols());
        let fast = min_determinant(&code, &q).min_det;
        assert!(
            (oracle - fast).abs() < 1e-12,
            "{id}: oracle {oracle}, search {fast}"
        );
    }
}

#[test]
fn pairwise_oracle_agrees_with_anchor_table() {
    let q = QamAlphabet::new(4).unwrap();
    for id in [
        CodeId::Proposed,
        CodeId::Golden,
        CodeId::HtwPga,
        CodeId::SezginerSari,
    ] {
        let (value, tol) = expected_min_det(id, 4).unwrap();
        let oracle = pairwise_min_det(id, &q, 4);
        assert!((oracle - value).abs() <= tol, "{id}: {oracle}");
    }
    // HTW-PGA closes exactly at 16/7
    let htw = pairwise_min_det(CodeId::HtwPga, &q, 4);
    assert!((htw - 16.0 / 7.0).abs() < 1e-12);
}

#[test]
fn proposed_min_det_at_16qam() {
    let q = QamAlphabet::new(16).unwrap();
    let md = min_determinant(&CodeSpec::get(CodeId::Proposed), &q);
    assert!((md.min_det - 3.2).abs() < 1e-9, "{}", md.min_det);
    assert_eq!(md.evaluations, 49u64.pow(4) - 1);
}

#[test]
fn conditional_split_matches_joint_minimization() {
    // The conditional decoder minimizes x1 and x2 separately for each
    // (x3, x4); a joint search over the full metric must agree.
    let q = QamAlphabet::new(4).unwrap();
    let code = CodeSpec::get(CodeId::Proposed);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..200 {
        let h = sample_channel(&mut rng);
        let labels: [usize; 4] = core::array::from_fn(|_| rng.random_range(0..4));
        let s = code.encode(&SymbolVector::from_labels(&q, &labels));
        let y = transmit(&s, &h, 0.8, &mut rng);

        let mut joint = (f64::INFINITY, [0usize; 4]);
        for n in 0..256usize {
            let l = [n >> 6 & 3, n >> 4 & 3, n >> 2 & 3, n & 3];
            let f = frob_metric(
                &y,
                &h,
                &encode_reference(CodeId::Proposed, &SymbolVector::from_labels(&q, &l)),
            );
            if f < joint.0 {
                joint = (f, l);
            }
        }
        let co = decode_conditional(&y, &h, &code, &q).unwrap();
        let ex = decode_exhaustive(&y, &h, &code, &q);
        assert_eq!(co.labels, joint.1);
        assert_eq!(ex.labels, joint.1);
        assert!((co.metric - joint.0).abs() < 1e-9 * (1.0 + joint.0));
    }
}
