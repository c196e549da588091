use std::fmt::Write as _;

use crate::bounds::{check_schnorr, proximity_bound_sic};
use crate::error::{Error, Result};
use crate::lattice::compute_gso;
use crate::mimo::{trial_seed, Stream};
use crate::reduction::{bkz_reduce_detailed, svp_enumerate, ReductionParams};

use super::{run_trials, sample_basis, Counterexample, Ensemble};

/// Exact `lambda(L)` by enumeration limits proximity runs to this rank.
pub const PROXIMITY_RANK_CAP: usize = 8;

#[derive(Debug, Clone)]
pub struct ProximityConfig {
    pub m: usize,
    pub beta: usize,
    pub trials: u64,
    pub ensemble: Ensemble,
    pub master_seed: u64,
    pub delta: f64,
    pub max_tours: usize,
    /// Relative slack before a ratio counts as exceeding its bound.
    pub tolerance: f64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl ProximityConfig {
    pub fn new(m: usize, beta: usize, trials: u64, ensemble: Ensemble, master_seed: u64) -> Self {
        let defaults = ReductionParams::default();
        Self {
            m,
            beta,
            trials,
            ensemble,
            master_seed,
            delta: defaults.delta,
            max_tours: defaults.max_tours,
            tolerance: 1e-9,
            threads: 0,
        }
    }

    fn params(&self) -> ReductionParams {
        ReductionParams {
            delta: self.delta,
            beta: self.beta,
            max_tours: self.max_tours,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m > PROXIMITY_RANK_CAP {
            return Err(Error::RankGuard {
                rank: self.m,
                cap: PROXIMITY_RANK_CAP,
            });
        }
        if self.m < 2 {
            return Err(Error::config("m", "rank must be at least 2"));
        }
        if self.beta < 2 || self.beta > self.m {
            return Err(Error::config("beta", format!("must lie in [2, {}]", self.m)));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be positive"));
        }
        if !(self.delta > 0.25 && self.delta <= 1.0) {
            return Err(Error::config("delta", "must lie in (1/4, 1]"));
        }
        if self.max_tours == 0 {
            return Err(Error::config("max_tours", "must be positive"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::config("tolerance", "must be nonnegative"));
        }
        Ok(())
    }
}

/// A trial whose ratio `lambda^2 / |b_i*|^2` exceeded a bound.
#[derive(Debug, Clone)]
pub struct Violation {
    pub seed: u64,
    /// 1-based index.
    pub i: usize,
    pub ratio: f64,
    pub bound: f64,
    pub counterexample: Counterexample,
}

#[derive(Debug, Clone)]
pub struct ProximityReport {
    pub m: usize,
    pub beta: usize,
    pub trials: u64,
    pub ensemble: Ensemble,
    /// Max over trials of `lambda^2(L) / |b_i*|^2`, entry `i-1`.
    pub per_index_empirical_sup: Vec<f64>,
    pub per_index_bound: Vec<f64>,
    pub theorem_bound: f64,
    pub violations: Vec<Violation>,
    /// Per index: trials where `|b_i*|^2 < lambda^2(L)`.
    pub below_lambda: Vec<u64>,
    /// Trials where BKZ hit `max_tours` without a clean tour.
    pub unconverged: u64,
    pub config: ProximityConfig,
}

impl ProximityReport {
    pub fn violated_at(&self, i: usize) -> bool {
        self.violations.iter().any(|v| v.i == i)
    }
}

struct TrialOutcome {
    ratios: Vec<f64>,
    converged: bool,
    seed: u64,
    basis: crate::lattice::Basis,
}

/// Samples, BKZ-reduces and measures `lambda^2(L) / |b_i*|^2` per index for
/// every trial, comparing against the per-index and final bounds.
pub fn run_proximity(config: &ProximityConfig) -> Result<ProximityReport> {
    config.validate()?;
    let bound = proximity_bound_sic(config.m, config.beta)?;
    let params = config.params();
    let outcomes = run_trials(config.trials, config.threads, |trial| {
        let seed = trial_seed(config.master_seed, trial, Stream::Basis);
        let basis = sample_basis(config.ensemble, config.m, seed)?;
        let reduced = bkz_reduce_detailed(&basis, &params)?;
        let gso = compute_gso(&reduced.basis)?;
        let lambda_sq = svp_enumerate(&reduced.basis)?.norm_sq;
        Ok(TrialOutcome {
            ratios: gso.norms_sq.iter().map(|n| lambda_sq / n).collect(),
            converged: reduced.converged,
            seed,
            basis,
        })
    })?;

    let m = config.m;
    let mut sup = vec![0.0f64; m];
    let mut below_lambda = vec![0u64; m];
    let mut violations = Vec::new();
    let mut unconverged = 0;
    let slack = 1.0 + config.tolerance;
    for (trial, o) in outcomes.into_iter().enumerate() {
        unconverged += u64::from(!o.converged);
        for (idx, &ratio) in o.ratios.iter().enumerate() {
            sup[idx] = sup[idx].max(ratio);
            if ratio > slack {
                below_lambda[idx] += 1;
            }
            let limit = bound.per_index[idx].min(bound.value);
            if ratio > limit * slack {
                violations.push(Violation {
                    seed: o.seed,
                    i: idx + 1,
                    ratio,
                    bound: limit,
                    counterexample: Counterexample {
                        trial: trial as u64,
                        seed: o.seed,
                        m,
                        beta: config.beta,
                        ensemble: config.ensemble,
                        what: format!("proximity i={} ratio={ratio:?} bound={limit:?}", idx + 1),
                        basis: o.basis.clone(),
                    },
                });
            }
        }
    }
    Ok(ProximityReport {
        m,
        beta: config.beta,
        trials: config.trials,
        ensemble: config.ensemble,
        per_index_empirical_sup: sup,
        per_index_bound: bound.per_index,
        theorem_bound: bound.value,
        violations,
        below_lambda,
        unconverged,
        config: config.clone(),
    })
}

pub const PROXIMITY_CSV_HEADER: &str =
    "m,beta,ensemble,trials,i,empirical_sup,per_index_bound,theorem_bound,violated";

/// Proximity CSV: `# key=value` configuration lines, the header row, then one
/// row per index for each report.
pub fn proximity_csv(reports: &[ProximityReport]) -> String {
    let mut out = String::new();
    if let Some(first) = reports.first() {
        let c = &first.config;
        let _ = writeln!(out, "# master_seed={}", c.master_seed);
        let _ = writeln!(out, "# delta={:?}", c.delta);
        let _ = writeln!(out, "# max_tours={}", c.max_tours);
        let _ = writeln!(out, "# tolerance={:?}", c.tolerance);
        let _ = writeln!(out, "# ratio=lambda1^2/|b_i*|^2 after BKZ-beta");
    }
    let _ = writeln!(out, "{PROXIMITY_CSV_HEADER}");
    for r in reports {
        for i in 1..=r.m {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:?},{:?},{:?},{}",
                r.m,
                r.beta,
                r.ensemble,
                r.trials,
                i,
                r.per_index_empirical_sup[i - 1],
                r.per_index_bound[i - 1],
                r.theorem_bound,
                r.violated_at(i)
            );
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct AuditConfig {
    pub m: usize,
    pub beta: usize,
    pub trials: u64,
    pub ensemble: Ensemble,
    pub master_seed: u64,
    pub delta: f64,
    pub max_tours: usize,
    pub threads: usize,
}

impl AuditConfig {
    pub fn new(m: usize, beta: usize, trials: u64, ensemble: Ensemble, master_seed: u64) -> Self {
        let defaults = ReductionParams::default();
        Self {
            m,
            beta,
            trials,
            ensemble,
            master_seed,
            delta: defaults.delta,
            max_tours: defaults.max_tours,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchnorrAudit {
    pub m: usize,
    pub beta: usize,
    pub trials: u64,
    pub upper_violations: u64,
    pub lower_violations: u64,
    /// Smallest `bound - ratio` seen for the upper inequality.
    pub worst_upper_margin: f64,
    /// Smallest `ratio - bound` seen for the lower inequality.
    pub worst_lower_margin: f64,
    pub counterexamples: Vec<Counterexample>,
}

impl SchnorrAudit {
    pub fn violations(&self) -> u64 {
        self.upper_violations + self.lower_violations
    }
}

/// BKZ-reduces sampled bases and checks both Schnorr inequalities with exact
/// successive minima.
pub fn run_schnorr_audit(config: &AuditConfig) -> Result<SchnorrAudit> {
    if config.m > PROXIMITY_RANK_CAP {
        return Err(Error::RankGuard {
            rank: config.m,
            cap: PROXIMITY_RANK_CAP,
        });
    }
    if config.beta < 2 || config.beta > config.m {
        return Err(Error::config("beta", format!("must lie in [2, {}]", config.m)));
    }
    let params = ReductionParams {
        delta: config.delta,
        beta: config.beta,
        max_tours: config.max_tours,
    };
    let reports = run_trials(config.trials, config.threads, |trial| {
        let seed = trial_seed(config.master_seed, trial, Stream::Basis);
        let basis = sample_basis(config.ensemble, config.m, seed)?;
        let reduced = bkz_reduce_detailed(&basis, &params)?.basis;
        Ok((seed, basis, check_schnorr(&reduced, config.beta)?))
    })?;
    let mut audit = SchnorrAudit {
        m: config.m,
        beta: config.beta,
        trials: config.trials,
        upper_violations: 0,
        lower_violations: 0,
        worst_upper_margin: f64::INFINITY,
        worst_lower_margin: f64::INFINITY,
        counterexamples: Vec::new(),
    };
    for (trial, (seed, basis, report)) in reports.into_iter().enumerate() {
        let mut failed = Vec::new();
        for c in &report.indices {
            audit.worst_upper_margin = audit.worst_upper_margin.min(c.upper_margin);
            audit.worst_lower_margin = audit.worst_lower_margin.min(c.lower_margin);
            if !c.upper_ok() {
                audit.upper_violations += 1;
                failed.push(format!("upper i={}", c.i));
            }
            if !c.lower_ok() {
                audit.lower_violations += 1;
                failed.push(format!("lower i={}", c.i));
            }
        }
        if !failed.is_empty() {
            audit.counterexamples.push(Counterexample {
                trial: trial as u64,
                seed,
                m: config.m,
                beta: config.beta,
                ensemble: config.ensemble,
                what: format!("schnorr {}", failed.join(",")),
                basis,
            });
        }
    }
    Ok(audit)
}
