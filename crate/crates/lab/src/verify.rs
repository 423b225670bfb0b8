//! Invariant suite behind `stbc-lab verify`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stbc_core::analysis::{
    det_identity_residual, min_determinant, nvd_scan, verify_r_pattern, verify_weight_identities,
    RPattern,
};
use stbc_core::channel::{equivalent_channel, n0_from_snr_db, sample_channel};
use stbc_core::decoders::{decode, DecoderId};
use stbc_core::linalg::thin_qr;
use stbc_core::{CodeId, CodeSpec, Complex64, QamAlphabet, RMat8};

use crate::error::LabError;
use crate::sim::draw_instance;

/// SNR at which the proposed code with 4-QAM has roughly 10% codeword
/// errors.
pub const EQUIVALENCE_SNR_DB: f64 = 10.0;

/// Coordinate order used by the `shuffle-generator` fault: `x2` and `x3`
/// trade places.
pub const SHUFFLED_ORDER: [usize; 8] = [0, 1, 4, 5, 2, 3, 6, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Reorder the proposed code's generator columns.
    ShuffleGenerator,
}

impl FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shuffle-generator" => Ok(Fault::ShuffleGenerator),
            _ => Err(format!("unknown fault `{s}` (known: shuffle-generator)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual or count, where one applies.
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub all_passed: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn check(name: &'static str, passed: bool, value: Option<f64>, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        value,
        detail,
    }
}

fn proposed(fault: Option<Fault>) -> CodeSpec {
    let code = CodeSpec::get(CodeId::Proposed);
    match fault {
        Some(Fault::ShuffleGenerator) => code.with_shuffled_coordinates(SHUFFLED_ORDER),
        None => code,
    }
}

fn check_qr(trials: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0f64;
    let mut singular = 0;
    for _ in 0..trials {
        let h = sample_channel(rng);
        for id in CodeId::ALL {
            let code = CodeSpec::get(id);
            let m = equivalent_channel(&h, &code);
            match thin_qr(&m, code.dim()) {
                Ok((q, r)) => {
                    let mut eye = RMat8::ZERO;
                    for i in 0..code.dim() {
                        eye.0[i][i] = 1.0;
                    }
                    worst = worst
                        .max((q * r - m).frob_norm())
                        .max((q.transpose() * q - eye).frob_norm());
                }
                Err(_) => singular += 1,
            }
        }
    }
    check(
        "qr_residuals",
        worst < 1e-10 && singular == 0,
        Some(worst),
        format!("max ‖QR − H‖, ‖QᵀQ − I‖ = {worst:.3e} over {trials} channels × 5 codes; {singular} singular"),
    )
}

fn check_r_pattern(code: &CodeSpec, trials: usize, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let golden = CodeSpec::get(CodeId::Golden);
    [
        ("r_pattern_proposed", code, RPattern::Proposed),
        ("r_pattern_golden", &golden, RPattern::GoldenType),
    ]
    .into_iter()
    .map(
        |(name, c, pattern)| match verify_r_pattern(c, pattern, trials, rng) {
            Ok(w) => check(
                name,
                true,
                Some(w),
                format!("largest structural zero {w:.3e} over {trials} channels"),
            ),
            Err(e) => check(name, false, None, e.to_string()),
        },
    )
    .collect()
}

fn check_decoders(code: &CodeSpec, trials: usize, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let q = QamAlphabet::new(4).expect("4-QAM");
    let m = q.size() as u64;
    let scale = code.energy_scale(&q);
    let n0 = n0_from_snr_db(EQUIVALENCE_SNR_DB);
    let mut mismatches = 0;
    let mut errors = 0;
    let mut first_problem = None;
    let (mut cond_max, mut ex_bad) = (0u64, 0);
    for t in 0..trials {
        let inst = draw_instance(code, &q, scale, n0, rng);
        let results: Vec<_> = DecoderId::ALL
            .iter()
            .map(|&d| decode(d, &inst.y, &inst.h, code, &q))
            .collect();
        match (&results[0], &results[1], &results[2]) {
            (Ok(ex), Ok(co), Ok(sd)) => {
                if ex.labels != co.labels || ex.labels != sd.labels {
                    mismatches += 1;
                    first_problem.get_or_insert(format!("instance {t}: decoders disagree"));
                }
                errors += u64::from(ex.labels != inst.labels);
                cond_max = cond_max.max(co.metric_evals);
                ex_bad += usize::from(ex.metric_evals != m.pow(4));
            }
            _ => {
                mismatches += 1;
                let err = results
                    .iter()
                    .find_map(|r| r.as_ref().err())
                    .expect("one failed");
                first_problem.get_or_insert(format!("instance {t}: {err}"));
            }
        }
    }
    let cer = errors as f64 / trials as f64;
    let equivalence = check(
        "decoder_equivalence",
        mismatches == 0,
        Some(mismatches as f64),
        match &first_problem {
            Some(p) => format!("{mismatches}/{trials} instances failed; first: {p}"),
            None => {
                format!("{trials}/{trials} identical at {EQUIVALENCE_SNR_DB} dB (CER {cer:.3})")
            }
        },
    );
    let bound = 2 * m.pow(3);
    let complexity = check(
        "decoder_complexity",
        first_problem.is_none() && cond_max <= bound && ex_bad == 0,
        Some(cond_max as f64),
        format!("conditional max {cond_max} evals (bound {bound}); exhaustive ≠ {} on {ex_bad} instances", m.pow(4)),
    );
    vec![equivalence, complexity]
}

fn check_nvd() -> CheckResult {
    let bound = 1.0 / 5f64.sqrt();
    match nvd_scan(1) {
        Ok(s) => check(
            "nvd_scan",
            s.min_abs_det >= bound - 1e-9 && (s.min_abs_det - bound).abs() < 1e-9,
            Some(s.min_abs_det),
            format!(
                "min |det S| = {:.12} over {} vectors (1/√5 = {bound:.12})",
                s.min_abs_det, s.evaluations
            ),
        ),
        Err(e) => check("nvd_scan", false, None, e.to_string()),
    }
}

fn check_det_identity(trials: usize, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x: [Complex64; 4] = core::array::from_fn(|_| {
            Complex64::new(
                rng.random_range(-7..=7) as f64,
                rng.random_range(-7..=7) as f64,
            )
        });
        worst = worst.max(det_identity_residual(&x));
    }
    check(
        "det_identity",
        worst < 1e-9,
        Some(worst),
        format!("max residual {worst:.3e} over {trials} integer vectors"),
    )
}

fn check_structure(code: &CodeSpec) -> Vec<CheckResult> {
    let weights = match verify_weight_identities(code) {
        Ok(r) => check(
            "weight_identities",
            true,
            Some(r),
            format!("max residual {r:.3e}"),
        ),
        Err(e) => check("weight_identities", false, None, e.to_string()),
    };
    let u = code.generator_unitarity_residual();
    let unitary = check(
        "generator_unitarity",
        u < 1e-12,
        Some(u),
        format!("‖GᵀG − I‖_F = {u:.3e}"),
    );
    let q = QamAlphabet::new(4).expect("4-QAM");
    let md = min_determinant(code, &q).min_det;
    let min_det = check(
        "min_det_4qam",
        (md - 3.2).abs() < 1e-9,
        Some(md),
        format!("min det = {md:.10} (expected 3.2)"),
    );
    vec![weights, unitary, min_det]
}

/// Runs every invariant check. Fails only on bad input; check failures are
/// reported in the result.
pub fn run(cfg: &VerifyConfig) -> Result<VerifyReport, LabError> {
    if cfg.trials == 0 {
        return Err(LabError::EmptySuite);
    }
    let code = proposed(cfg.fault);
    let rng = |k: u64| ChaCha8Rng::seed_from_u64(cfg.seed ^ (k << 56));
    let mut checks = vec![check_qr(cfg.trials, &mut rng(1))];
    checks.extend(check_r_pattern(&code, cfg.trials, &mut rng(2)));
    checks.extend(check_decoders(&code, cfg.trials, &mut rng(3)));
    checks.push(check_nvd());
    checks.push(check_det_identity(cfg.trials, &mut rng(4)));
    checks.extend(check_structure(&code));
    Ok(VerifyReport {
        config: cfg.clone(),
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
