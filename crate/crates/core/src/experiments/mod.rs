//! Monte-Carlo experiments: empirical proximity factors against the BKZ
//! bound, Schnorr-inequality audits and BER sweeps.
//!
//! Every trial draws its randomness from streams keyed by
//! `(master_seed, trial_index)`, and per-trial results are merged in trial
//! order, so outputs do not depend on the thread count.

mod ber;
mod proximity;
mod stats;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

pub use ber::{ber_csv, effective_detectors, run_ber, BerConfig, BerCurve, BerPoint};
pub use proximity::{
    proximity_csv, run_proximity, run_schnorr_audit, AuditConfig, ProximityConfig, ProximityReport,
    SchnorrAudit, Violation, PROXIMITY_RANK_CAP,
};
pub use stats::{never_wrong_way, wilson_interval, WILSON_Z};

use crate::error::{Error, Result};
use crate::lattice::{compute_gso, format_basis, Basis};
use crate::mimo::{embed_real, rng, sample_channel};

/// Random basis families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ensemble {
    /// Real embedding of an i.i.d. complex Gaussian `m/2 x m/2` channel; for
    /// odd `m`, an i.i.d. real Gaussian `m x m` matrix.
    Gaussian,
    /// Integer entries uniform in `[-50, 50]`.
    Integer,
    /// Random orthogonal directions with lengths uniform in `[1/2, 2]`.
    Orthogonal,
    Identity,
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Integer => "integer",
            Self::Orthogonal => "orthogonal",
            Self::Identity => "identity",
        })
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "integer" => Ok(Self::Integer),
            "orthogonal" => Ok(Self::Orthogonal),
            "identity" => Ok(Self::Identity),
            _ => Err(Error::config(
                "ensemble",
                format!("unknown ensemble `{s}` (gaussian, integer, orthogonal, identity)"),
            )),
        }
    }
}

pub const INTEGER_RANGE: i64 = 50;

fn real_gaussian(m: usize, r: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..m).map(|_| r.sample(StandardNormal)).collect())
        .collect()
}

/// Draws a rank-`m` basis; rank-deficient draws are redrawn from the same
/// stream.
pub fn sample_basis(ensemble: Ensemble, m: usize, seed: u64) -> Result<Basis> {
    if m == 0 {
        return Err(Error::InvalidParameter("rank must be >= 1".into()));
    }
    let mut r = rng(seed);
    for _ in 0..1000 {
        let vectors = match ensemble {
            Ensemble::Identity => return Ok(Basis::identity(m)),
            Ensemble::Gaussian if m % 2 == 0 => {
                let channel = sample_channel(m / 2, m / 2, r.random())?;
                embed_real(&channel).columns()
            }
            Ensemble::Gaussian => real_gaussian(m, &mut r),
            Ensemble::Integer => (0..m)
                .map(|_| {
                    (0..m)
                        .map(|_| r.random_range(-INTEGER_RANGE..=INTEGER_RANGE) as f64)
                        .collect()
                })
                .collect(),
            Ensemble::Orthogonal => {
                let Ok(b) = Basis::new(real_gaussian(m, &mut r)) else {
                    continue;
                };
                let gso = compute_gso(&b)?;
                gso.ortho
                    .iter()
                    .zip(&gso.norms_sq)
                    .map(|(v, n)| {
                        let scale = r.random_range(0.5..=2.0) / n.sqrt();
                        v.iter().map(|x| x * scale).collect()
                    })
                    .collect()
            }
        };
        if let Ok(b) = Basis::new(vectors) {
            return Ok(b);
        }
    }
    Err(Error::InvalidParameter(format!(
        "could not draw a full-rank {ensemble} basis of rank {m}"
    )))
}

/// Runs `f(trial)` for every trial on a pool of `threads` workers
/// (0 = all cores) and returns results in trial order.
pub(crate) fn run_trials<T, F>(trials: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}

/// A basis that broke an inequality, with enough context to replay it.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub trial: u64,
    pub seed: u64,
    pub m: usize,
    pub beta: usize,
    pub ensemble: Ensemble,
    pub what: String,
    /// The sampled basis, before reduction.
    pub basis: Basis,
}

impl Counterexample {
    /// Basis file with one comment line of parameters.
    pub fn to_file_string(&self) -> String {
        format_basis(
            &self.basis,
            &[format!(
                "m={} beta={} ensemble={} trial={} seed={} violation={}",
                self.m, self.beta, self.ensemble, self.trial, self.seed, self.what
            )],
        )
    }

    pub fn file_name(&self) -> String {
        format!(
            "counterexample_m{}_b{}_{}_t{}.txt",
            self.m, self.beta, self.ensemble, self.trial
        )
    }
}

/// Writes each counterexample to its own file under `dir`.
pub fn archive_counterexamples(dir: &Path, items: &[Counterexample]) -> Result<Vec<PathBuf>> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(dir)?;
    items
        .iter()
        .map(|c| {
            let path = dir.join(c.file_name());
            std::fs::write(&path, c.to_file_string())?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensembles_are_seeded_and_full_rank() {
        for e in [Ensemble::Gaussian, Ensemble::Integer, Ensemble::Orthogonal, Ensemble::Identity] {
            for m in 1..=6 {
                let a = sample_basis(e, m, 17).unwrap();
                assert_eq!(a.rank(), m);
                assert_eq!(a, sample_basis(e, m, 17).unwrap());
            }
        }
        assert_ne!(
            sample_basis(Ensemble::Integer, 4, 1).unwrap(),
            sample_basis(Ensemble::Integer, 4, 2).unwrap()
        );
    }

    #[test]
    fn orthogonal_ensemble_is_orthogonal() {
        let b = sample_basis(Ensemble::Orthogonal, 5, 3).unwrap();
        let g = compute_gso(&b).unwrap();
        for i in 0..5 {
            for j in 0..i {
                assert!(g.mu[i][j].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integer_entries_in_range() {
        let b = sample_basis(Ensemble::Integer, 6, 8).unwrap();
        assert!(b
            .vectors()
            .iter()
            .flatten()
            .all(|x| x.fract() == 0.0 && x.abs() <= INTEGER_RANGE as f64));
    }

    #[test]
    fn ensemble_names() {
        for e in ["gaussian", "integer", "orthogonal", "identity"] {
            assert_eq!(e.parse::<Ensemble>().unwrap().to_string(), e);
        }
        assert!("uniform".parse::<Ensemble>().is_err());
    }

    #[test]
    fn trial_order_is_thread_independent() {
        let a = run_trials(100, 1, |t| Ok(t * t)).unwrap();
        let b = run_trials(100, 4, |t| Ok(t * t)).unwrap();
        assert_eq!(a, b);
    }
}
