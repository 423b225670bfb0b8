//! Monte Carlo codeword-error-rate simulation.
//!
//! Every trial owns a ChaCha8 stream: the key is derived from the master
//! seed and the SNR, the stream index is the trial number. Trials are summed
//! with integer counters, so results do not depend on the thread count.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stbc_core::channel::{n0_from_snr_db, sample_channel, sample_noise};
use stbc_core::decoders::{decode, DecodeError, DecoderId};
use stbc_core::linalg::LinalgError;
use stbc_core::{CMat2, CodeId, CodeSpec, QamAlphabet, SymbolVector};

use crate::error::LabError;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Trials per chunk in target-errors mode.
pub const CHUNK: u64 = 10_000;

/// Redraws of a singular channel before a trial gives up.
const MAX_REDRAWS: u32 = 64;

pub const CSV_HEADER: &str =
    "code,decoder,M,snr_db,trials,errors,cer,ci95_lo,ci95_hi,mean_metric_evals,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum StopRule {
    /// Exactly this many trials per point.
    Fixed { trials: u64 },
    /// Chunks of [`CHUNK`] trials until `target` errors or `max_trials`.
    TargetErrors { target: u64, max_trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub code: CodeId,
    pub decoder: DecoderId,
    pub m: usize,
    pub snr_db: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
    /// Scale codewords to `E‖S‖_F² = 4`.
    pub normalize: bool,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(
        code: CodeId,
        decoder: DecoderId,
        m: usize,
        snr_db: Vec<f64>,
        trials: u64,
        seed: u64,
    ) -> Self {
        SimConfig {
            code,
            decoder,
            m,
            snr_db,
            stop: StopRule::Fixed { trials },
            seed,
            normalize: true,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(CodeSpec, QamAlphabet), LabError> {
        let alphabet = QamAlphabet::new(self.m)?;
        let code = CodeSpec::get(self.code);
        if !self.decoder.supports(&code) {
            return Err(LabError::UnsupportedCode {
                code: self.code.to_string(),
                decoder: self.decoder.to_string(),
            });
        }
        if self.snr_db.is_empty() {
            return Err(LabError::EmptySweep);
        }
        let trials = match self.stop {
            StopRule::Fixed { trials } => trials,
            StopRule::TargetErrors { target, max_trials } => target.min(max_trials),
        };
        if trials == 0 {
            return Err(LabError::NoTrials);
        }
        Ok((code, alphabet))
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CerPoint {
    pub code: CodeId,
    pub decoder: DecoderId,
    #[serde(rename = "M")]
    pub m: usize,
    pub snr_db: f64,
    pub trials: u64,
    pub errors: u64,
    pub cer: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub mean_metric_evals: f64,
    pub seed: u64,
    /// Singular channel draws that were replaced (not written to CSV).
    #[serde(skip)]
    pub channel_redraws: u64,
}

impl CerPoint {
    pub fn ci95_half_width(&self) -> f64 {
        (self.ci95_hi - self.ci95_lo) / 2.0
    }
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Stream for trial `trial` at `snr_db`.
pub fn trial_rng(seed: u64, snr_db: f64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&snr_db.to_bits().to_le_bytes());
    key[16..24].copy_from_slice(b"stbc-cer");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// A received block together with what was sent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance {
    pub labels: [usize; 4],
    /// Channel with the energy scale folded in: `y = h·S(x) + n` on the
    /// integer grid.
    pub h: CMat2,
    pub y: CMat2,
}

/// Draws labels, a channel and noise. `scale` multiplies the codeword.
pub fn draw_instance<R: Rng + ?Sized>(
    code: &CodeSpec,
    alphabet: &QamAlphabet,
    scale: f64,
    n0: f64,
    rng: &mut R,
) -> Instance {
    let mut labels = [0usize; 4];
    for l in labels.iter_mut().take(code.symbols()) {
        *l = rng.random_range(0..alphabet.size());
    }
    let s = code.encode(&SymbolVector::from_labels(alphabet, &labels));
    let h = sample_channel(rng).scale_real(scale);
    let y = h * s + sample_noise(rng, n0);
    Instance { labels, h, y }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    errors: u64,
    evals: u64,
    redraws: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            errors: self.errors + o.errors,
            evals: self.evals + o.evals,
            redraws: self.redraws + o.redraws,
        }
    }
}

fn run_trial(
    cfg: &SimConfig,
    code: &CodeSpec,
    alphabet: &QamAlphabet,
    scale: f64,
    n0: f64,
    snr_db: f64,
    trial: u64,
) -> Result<Tally, LabError> {
    let mut rng = trial_rng(cfg.seed, snr_db, trial);
    let mut redraws = 0;
    loop {
        let inst = draw_instance(code, alphabet, scale, n0, &mut rng);
        match decode(cfg.decoder, &inst.y, &inst.h, code, alphabet) {
            Ok(res) => {
                return Ok(Tally {
                    trials: 1,
                    errors: u64::from(res.labels != inst.labels),
                    evals: res.metric_evals,
                    redraws: u64::from(redraws),
                });
            }
            Err(DecodeError::Linalg(LinalgError::RankDeficient { .. }))
                if redraws < MAX_REDRAWS =>
            {
                redraws += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
}

fn run_range(
    cfg: &SimConfig,
    code: &CodeSpec,
    alphabet: &QamAlphabet,
    snr_db: f64,
    range: std::ops::Range<u64>,
) -> Result<Tally, LabError> {
    let scale = if cfg.normalize {
        code.energy_scale(alphabet)
    } else {
        1.0
    };
    let n0 = n0_from_snr_db(snr_db);
    range
        .into_par_iter()
        .map(|t| run_trial(cfg, code, alphabet, scale, n0, snr_db, t))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
}

fn point_from(cfg: &SimConfig, snr_db: f64, t: Tally) -> CerPoint {
    let (lo, hi) = wilson_interval(t.errors, t.trials, Z95);
    CerPoint {
        code: cfg.code,
        decoder: cfg.decoder,
        m: cfg.m,
        snr_db,
        trials: t.trials,
        errors: t.errors,
        cer: t.errors as f64 / t.trials as f64,
        ci95_lo: lo,
        ci95_hi: hi,
        mean_metric_evals: t.evals as f64 / t.trials as f64,
        seed: cfg.seed,
        channel_redraws: t.redraws,
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, LabError> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?)
}

fn run_point_in_pool(
    cfg: &SimConfig,
    code: &CodeSpec,
    alphabet: &QamAlphabet,
    snr_db: f64,
) -> Result<CerPoint, LabError> {
    let tally = match cfg.stop {
        StopRule::Fixed { trials } => run_range(cfg, code, alphabet, snr_db, 0..trials)?,
        StopRule::TargetErrors { target, max_trials } => {
            let mut acc = Tally::default();
            while acc.errors < target && acc.trials < max_trials {
                let end = (acc.trials + CHUNK).min(max_trials);
                acc = acc.merge(run_range(cfg, code, alphabet, snr_db, acc.trials..end)?);
            }
            acc
        }
    };
    Ok(point_from(cfg, snr_db, tally))
}

/// Simulates one SNR point.
pub fn run_point(cfg: &SimConfig, snr_db: f64) -> Result<CerPoint, LabError> {
    let (code, alphabet) = cfg.validate()?;
    pool(cfg.threads)?.install(|| run_point_in_pool(cfg, &code, &alphabet, snr_db))
}

/// Simulates every SNR point in order. `existing` points (from a resumed
/// file) are reused when their SNR matches; `progress` sees each new point.
pub fn run_sweep_with(
    cfg: &SimConfig,
    existing: &[CerPoint],
    mut progress: impl FnMut(&CerPoint, bool),
) -> Result<Vec<CerPoint>, LabError> {
    let (code, alphabet) = cfg.validate()?;
    let pool = pool(cfg.threads)?;
    let mut out = Vec::with_capacity(cfg.snr_db.len());
    for &snr in &cfg.snr_db {
        if let Some(p) = existing.iter().find(|p| p.snr_db == snr) {
            progress(p, true);
            out.push(p.clone());
            continue;
        }
        let p = pool.install(|| run_point_in_pool(cfg, &code, &alphabet, snr))?;
        progress(&p, false);
        out.push(p);
    }
    Ok(out)
}

pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<CerPoint>, LabError> {
    run_sweep_with(cfg, &[], |_, _| {})
}

/// Parses `start:step:stop` (stop included when on the grid) or a single
/// value.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>, LabError> {
    let bad = || LabError::BadSnrRange(s.to_string());
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    if parts.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, step, stop] => {
            if step <= 0.0 || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as u64;
            Ok((0..=n)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        _ => Err(bad()),
    }
}

/// Writes the sweep as CSV with the fixed header and LF line endings.
pub fn write_csv<W: Write>(w: W, points: &[CerPoint]) -> Result<(), csv::Error> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    for p in points {
        wr.serialize(p)?;
    }
    if points.is_empty() {
        wr.write_record(CSV_HEADER.split(','))?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<CerPoint>, LabError> {
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    let mut rd = csv::Reader::from_reader(file);
    let header = rd.headers().map_err(|e| LabError::Csv {
        path: path.into(),
        source: e,
    })?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(LabError::ResumeMismatch {
            path: path.into(),
            reason: "unexpected header".into(),
        });
    }
    rd.deserialize()
        .collect::<Result<Vec<CerPoint>, _>>()
        .map_err(|e| LabError::Csv {
            path: path.into(),
            source: e,
        })
}

/// Rows of `path` that belong to this sweep, for resuming.
pub fn resumable_points(cfg: &SimConfig, path: &Path) -> Result<Vec<CerPoint>, LabError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let rows = read_csv(path)?;
    for p in &rows {
        if p.code != cfg.code || p.decoder != cfg.decoder || p.m != cfg.m || p.seed != cfg.seed {
            return Err(LabError::ResumeMismatch {
                path: path.into(),
                reason: format!("row at {} dB has a different code/decoder/M/seed", p.snr_db),
            });
        }
    }
    Ok(rows
        .into_iter()
        .filter(|p| cfg.snr_db.contains(&p.snr_db))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_closed_form() {
        // 10 errors in 100 trials, computed by hand
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.055_229_4).abs() < 1e-6, "{lo}");
        assert!((hi - 0.174_366_2).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.003_826).abs() < 1e-5, "{hi}");
    }

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr_range("4:2:20").unwrap().len(), 9);
        assert_eq!(
            parse_snr_range("8:2:18").unwrap(),
            vec![8.0, 10.0, 12.0, 14.0, 16.0, 18.0]
        );
        assert_eq!(
            parse_snr_range("0:0.1:0.3").unwrap(),
            vec![0.0, 0.1, 0.2, 0.3]
        );
        assert_eq!(parse_snr_range("0:3:7").unwrap(), vec![0.0, 3.0, 6.0]);
        assert_eq!(parse_snr_range("12.5").unwrap(), vec![12.5]);
        for bad in ["", "a:1:2", "4:0:10", "10:1:4", "1:2", "1:2:3:4", "inf"] {
            assert!(
                matches!(parse_snr_range(bad), Err(LabError::BadSnrRange(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn streams_are_distinct_and_repeatable() {
        let a: u64 = trial_rng(1, 10.0, 0).random();
        let b: u64 = trial_rng(1, 10.0, 1).random();
        let c: u64 = trial_rng(1, 12.0, 0).random();
        let d: u64 = trial_rng(2, 10.0, 0).random();
        assert_eq!(a, trial_rng(1, 10.0, 0).random::<u64>());
        assert!(a != b && a != c && a != d);
    }

    #[test]
    fn validation() {
        let cfg = SimConfig::new(CodeId::Golden, DecoderId::Conditional, 4, vec![10.0], 10, 1);
        assert!(matches!(
            cfg.validate(),
            Err(LabError::UnsupportedCode { .. })
        ));
        let cfg = SimConfig::new(CodeId::Proposed, DecoderId::Sphere, 4, vec![], 10, 1);
        assert!(matches!(cfg.validate(), Err(LabError::EmptySweep)));
        let cfg = SimConfig::new(CodeId::Proposed, DecoderId::Sphere, 8, vec![1.0], 10, 1);
        assert!(matches!(cfg.validate(), Err(LabError::UnsupportedSize(_))));
        let cfg = SimConfig::new(CodeId::Proposed, DecoderId::Sphere, 4, vec![1.0], 0, 1);
        assert!(matches!(cfg.validate(), Err(LabError::NoTrials)));
    }

    #[test]
    fn noiseless_limit_has_no_errors() {
        let cfg = SimConfig::new(
            CodeId::Proposed,
            DecoderId::Sphere,
            4,
            vec![60.0],
            10_000,
            3,
        );
        let p = run_point(&cfg, 60.0).unwrap();
        assert_eq!(p.errors, 0);
        assert_eq!(p.cer, 0.0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut cfg = SimConfig::new(
            CodeId::Proposed,
            DecoderId::Sphere,
            4,
            vec![6.0, 10.0],
            3000,
            11,
        );
        cfg.threads = Some(1);
        let a = run_sweep(&cfg).unwrap();
        cfg.threads = Some(4);
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a[0].errors > 0);
    }

    #[test]
    fn target_error_mode_is_chunked_and_deterministic() {
        let mut cfg = SimConfig::new(CodeId::Golden, DecoderId::Sphere, 4, vec![6.0], 1, 5);
        cfg.stop = StopRule::TargetErrors {
            target: 50,
            max_trials: 200_000,
        };
        cfg.threads = Some(2);
        let a = run_point(&cfg, 6.0).unwrap();
        cfg.threads = Some(3);
        let b = run_point(&cfg, 6.0).unwrap();
        assert_eq!(a, b);
        assert!(a.errors >= 50);
        assert_eq!(a.trials % CHUNK, 0);
        // the first chunk equals a fixed run of the same length
        let mut fixed = cfg.clone();
        fixed.stop = StopRule::Fixed { trials: a.trials };
        assert_eq!(run_point(&fixed, 6.0).unwrap().errors, a.errors);
    }

    #[test]
    fn exhaustive_and_sphere_count_the_same_errors() {
        for code in [CodeId::Proposed, CodeId::HtwPga] {
            let ex = SimConfig::new(code, DecoderId::Exhaustive, 4, vec![8.0], 2000, 9);
            let sd = SimConfig {
                decoder: DecoderId::Sphere,
                ..ex.clone()
            };
            let a = run_point(&ex, 8.0).unwrap();
            let b = run_point(&sd, 8.0).unwrap();
            assert_eq!(a.errors, b.errors, "{code}");
            assert_eq!(a.mean_metric_evals, 256.0);
        }
    }

    #[test]
    fn csv_round_trip() {
        let cfg = SimConfig::new(
            CodeId::Proposed,
            DecoderId::Conditional,
            4,
            vec![4.0, 6.0],
            500,
            2,
        );
        let pts = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 3);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("proposed,conditional,4,4.0,500,"));

        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(file.path(), &text).unwrap();
        let back = read_csv(file.path()).unwrap();
        let mut again = Vec::new();
        write_csv(&mut again, &back).unwrap();
        assert_eq!(again, text.as_bytes());
    }
}
