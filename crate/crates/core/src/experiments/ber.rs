use std::fmt::Write as _;

use log::warn;

use crate::detect::{ml_admissible, Detector, DetectorKind};
use crate::error::{Error, Result};
use crate::mimo::{sample_channel, sample_symbols, snr_to_sigma, trial_seed, unit_noise, Constellation, Stream};
use crate::reduction::{ReductionMethod, ReductionParams, SVP_RANK_CAP};

use super::{run_trials, wilson_interval};

#[derive(Debug, Clone)]
pub struct BerConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// QAM order: 4, 16 or 64.
    pub order: usize,
    pub detectors: Vec<DetectorKind>,
    /// SNR grid in dB; `inf` means noiseless.
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub reduction: ReductionParams,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl BerConfig {
    /// Checks every field, naming the first bad one.
    pub fn validate(&self) -> Result<Constellation> {
        if self.n_tx == 0 {
            return Err(Error::config("n_tx", "must be positive"));
        }
        if self.n_rx < self.n_tx {
            return Err(Error::config(
                "n_rx",
                format!("must be at least n_tx = {} for a full-rank channel", self.n_tx),
            ));
        }
        let constellation = Constellation::qam(self.order)
            .map_err(|_| Error::config("order", format!("unsupported QAM order {} (4, 16, 64)", self.order)))?;
        if self.detectors.is_empty() {
            return Err(Error::config("detectors", "at least one detector is required"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("snr_db", "at least one SNR point is required"));
        }
        if let Some(s) = self.snr_db.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return Err(Error::config("snr_db", format!("invalid SNR value {s}")));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be positive"));
        }
        let r = &self.reduction;
        if !(r.delta > 0.25 && r.delta <= 1.0) {
            return Err(Error::config("delta", "must lie in (1/4, 1]"));
        }
        if r.max_tours == 0 {
            return Err(Error::config("max_tours", "must be positive"));
        }
        let m = 2 * self.n_tx;
        let blocky = self
            .detectors
            .iter()
            .any(|d| *d == DetectorKind::LraSic(ReductionMethod::Bkz));
        if blocky && (r.beta < 2 || r.beta > m.min(SVP_RANK_CAP)) {
            return Err(Error::config(
                "beta",
                format!("must lie in [2, {}]", m.min(SVP_RANK_CAP)),
            ));
        }
        if self.detectors.contains(&DetectorKind::LraSic(ReductionMethod::Kz)) && m > SVP_RANK_CAP {
            return Err(Error::config(
                "detectors",
                format!("lra-kz needs 2*n_tx <= {SVP_RANK_CAP}"),
            ));
        }
        Ok(constellation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub sigma: f64,
    pub trials: u64,
    pub vec_errors: u64,
    pub sym_errors: u64,
    /// Gray-coded bit errors.
    pub bit_errors: u64,
    /// Half-width of the 95% Wilson interval on the vector error rate.
    pub ci_halfwidth: f64,
}

impl BerPoint {
    pub fn vector_error_rate(&self) -> f64 {
        self.vec_errors as f64 / self.trials as f64
    }

    pub fn wilson(&self) -> (f64, f64) {
        wilson_interval(self.vec_errors, self.trials)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub detector: DetectorKind,
    /// Bits carried by one transmit vector.
    pub bits_per_vector: u64,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    pub fn ber(&self, point: &BerPoint) -> f64 {
        point.bit_errors as f64 / (point.trials * self.bits_per_vector) as f64
    }
}

/// Drops ML detectors whose search the guard refuses, with a warning.
pub fn effective_detectors(config: &BerConfig, constellation: &Constellation) -> Vec<DetectorKind> {
    let admit = ml_admissible(constellation, config.n_tx);
    config
        .detectors
        .iter()
        .copied()
        .filter(|d| {
            if d.is_ml() && !admit {
                warn!(
                    "skipping {d}: {}^{} candidates exceed the ML search cap",
                    constellation.order(),
                    config.n_tx
                );
                return false;
            }
            true
        })
        .collect()
}

#[derive(Clone, Copy, Default)]
struct Counts {
    vec: u64,
    sym: u64,
    bit: u64,
}

fn bit_errors(constellation: &Constellation, a: usize, b: usize) -> u64 {
    let side = constellation.side();
    let axes = |k: usize| ((k / side) as i64, (k % side) as i64);
    let (ar, ai) = axes(a);
    let (br, bi) = axes(b);
    u64::from((constellation.gray(ar) ^ constellation.gray(br)).count_ones())
        + u64::from((constellation.gray(ai) ^ constellation.gray(bi)).count_ones())
}

/// Monte-Carlo error counts per detector and SNR point. Each trial draws its
/// channel, symbols and unit noise once; every detector and SNR point sees
/// the same draws, with noise scaled by the point's sigma.
pub fn run_ber(config: &BerConfig) -> Result<Vec<BerCurve>> {
    let constellation = config.validate()?;
    let detectors = effective_detectors(config, &constellation);
    let sigmas: Vec<f64> = config
        .snr_db
        .iter()
        .map(|&s| snr_to_sigma(s, config.n_tx, &constellation))
        .collect();
    let per_trial = run_trials(config.trials, config.threads, |trial| {
        let channel = sample_channel(
            config.n_rx,
            config.n_tx,
            trial_seed(config.master_seed, trial, Stream::Channel),
        )?;
        let sent = sample_symbols(
            config.n_tx,
            &constellation,
            trial_seed(config.master_seed, trial, Stream::Symbols),
        );
        let x: Vec<_> = sent.iter().map(|&k| constellation.point(k)).collect();
        let clean = channel.apply(&x);
        let noise = unit_noise(config.n_rx, trial_seed(config.master_seed, trial, Stream::Noise));
        let mut out = Vec::with_capacity(detectors.len() * sigmas.len());
        for &kind in &detectors {
            let det = Detector::new(&channel, &constellation, kind, &config.reduction)?;
            for &sigma in &sigmas {
                let y: Vec<_> = clean.iter().zip(&noise).map(|(c, n)| c + n * sigma).collect();
                let got = det.detect(&y, sigma)?.indices;
                let mut c = Counts::default();
                for (&a, &b) in sent.iter().zip(&got) {
                    if a != b {
                        c.sym += 1;
                        c.bit += bit_errors(&constellation, a, b);
                    }
                }
                c.vec = u64::from(c.sym > 0);
                out.push(c);
            }
        }
        Ok(out)
    })?;

    let mut totals = vec![Counts::default(); detectors.len() * sigmas.len()];
    for trial in &per_trial {
        for (t, c) in totals.iter_mut().zip(trial) {
            t.vec += c.vec;
            t.sym += c.sym;
            t.bit += c.bit;
        }
    }
    let bits_per_vector = 2 * u64::from(constellation.bits_per_axis()) * config.n_tx as u64;
    let curves: Vec<BerCurve> = detectors
        .iter()
        .enumerate()
        .map(|(d, &detector)| BerCurve {
            detector,
            bits_per_vector,
            points: sigmas
                .iter()
                .enumerate()
                .map(|(s, &sigma)| {
                    let c = totals[d * sigmas.len() + s];
                    let (lo, hi) = wilson_interval(c.vec, config.trials);
                    BerPoint {
                        snr_db: config.snr_db[s],
                        sigma,
                        trials: config.trials,
                        vec_errors: c.vec,
                        sym_errors: c.sym,
                        bit_errors: c.bit,
                        ci_halfwidth: (hi - lo) / 2.0,
                    }
                })
                .collect(),
        })
        .collect();
    for curve in &curves {
        warn_if_not_monotone(curve);
    }
    Ok(curves)
}

fn warn_if_not_monotone(curve: &BerCurve) {
    let mut pts: Vec<&BerPoint> = curve.points.iter().collect();
    pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    for w in pts.windows(2) {
        if curve.ber(w[1]) > curve.ber(w[0]) {
            warn!(
                "{}: BER rises from {} dB to {} dB ({:.3e} -> {:.3e})",
                curve.detector,
                w[0].snr_db,
                w[1].snr_db,
                curve.ber(w[0]),
                curve.ber(w[1])
            );
        }
    }
}

pub const BER_CSV_HEADER: &str = "detector,snr_db,trials,vec_errors,sym_errors,ber,ci_halfwidth";

/// BER CSV with the run configuration in `#` comment lines.
pub fn ber_csv(config: &BerConfig, curves: &[BerCurve]) -> String {
    let mut out = String::new();
    let r = &config.reduction;
    let names: Vec<String> = config.detectors.iter().map(|d| d.to_string()).collect();
    let snrs: Vec<String> = config.snr_db.iter().map(|s| format!("{s:?}")).collect();
    let _ = writeln!(out, "# master_seed={}", config.master_seed);
    let _ = writeln!(
        out,
        "# snr=10*log10(n_tx*Es/sigma^2); E|h_ij|^2=1; noise variance sigma^2 per complex receive dimension"
    );
    let _ = writeln!(
        out,
        "# quantizer=round half away from zero, clip each real coordinate to the constellation"
    );
    let _ = writeln!(out, "# delta={:?}", r.delta);
    let _ = writeln!(out, "# max_tours={}", r.max_tours);
    let _ = writeln!(out, "# beta={}", r.beta);
    let _ = writeln!(
        out,
        "# n_tx={} n_rx={} order={} trials={} detectors={} snr_db={}",
        config.n_tx,
        config.n_rx,
        config.order,
        config.trials,
        names.join(";"),
        snrs.join(";")
    );
    let _ = writeln!(out, "# ber=Gray-coded bit error rate; ci_halfwidth=95% Wilson half-width of the vector error rate");
    let _ = writeln!(out, "{BER_CSV_HEADER}");
    for curve in curves {
        for p in &curve.points {
            let _ = writeln!(
                out,
                "{},{:?},{},{},{},{:?},{:?}",
                curve.detector,
                p.snr_db,
                p.trials,
                p.vec_errors,
                p.sym_errors,
                curve.ber(p),
                p.ci_halfwidth
            );
        }
    }
    out
}
