//! Hermite constants, the Schnorr inequalities for block-reduced bases and
//! the proximity-factor bound for SIC detection after block reduction.
//!
//! Powers of the Hermite constant are written as powers of the exact rational
//! `gamma_beta^beta` wherever the table knows it: the integer part of the
//! exponent is applied in exact rational arithmetic, as is the fractional
//! remainder when `gamma_beta^beta` has an exact root of that order. Only the
//! rest goes through `powf`.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_integer::Roots;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::lattice::{compute_gso, norm_sq, Basis};
use crate::reduction::{successive_minima_capped, SVP_RANK_CAP};

/// Relative slack when comparing an observed ratio with a bound.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    UpperBound,
}

impl fmt::Display for Exactness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::UpperBound => "upper-bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteValue {
    pub beta: usize,
    pub value: f64,
    pub exactness: Exactness,
    /// `gamma_beta^beta` as an exact rational, for table entries.
    pub power_form: Option<Ratio<u64>>,
}

/// `gamma_beta^beta` for the ranks where it is known.
fn known_power(beta: usize) -> Option<Ratio<u64>> {
    let (n, d) = match beta {
        1 => (1, 1),
        2 => (4, 3),
        3 => (2, 1),
        4 => (4, 1),
        5 => (8, 1),
        6 => (64, 3),
        7 => (64, 1),
        8 => (256, 1),
        24 => (1u64 << 48, 1),
        _ => return None,
    };
    Some(Ratio::new(n, d))
}

fn ratio_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Hermite constant `gamma_beta`. Exact for `beta` in 1..=8 and 24; otherwise
/// Blichfeldt's bound `(2/pi) * Gamma(2 + beta/2)^(2/beta)`, flagged as an
/// upper bound.
pub fn hermite_constant(beta: usize) -> Result<HermiteValue> {
    if beta == 0 {
        return Err(Error::InvalidParameter("Hermite constant needs rank >= 1".into()));
    }
    Ok(match known_power(beta) {
        Some(p) => HermiteValue {
            beta,
            value: ratio_f64(&p).powf(1.0 / beta as f64),
            exactness: Exactness::Exact,
            power_form: Some(p),
        },
        None => {
            let b = beta as f64;
            let ln_gamma = statrs::function::gamma::ln_gamma(2.0 + b / 2.0);
            HermiteValue {
                beta,
                value: std::f64::consts::FRAC_2_PI * (2.0 / b * ln_gamma).exp(),
                exactness: Exactness::UpperBound,
                power_form: None,
            }
        }
    })
}

fn big(r: &Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact `r^(1/d)` when numerator and denominator are perfect `d`-th powers.
fn exact_root(r: &Ratio<u64>, d: u32) -> Option<Ratio<u64>> {
    let root = |x: u64| {
        let y = x.nth_root(d);
        (y.checked_pow(d) == Some(x)).then_some(y)
    };
    Some(Ratio::new(root(*r.numer())?, root(*r.denom())?))
}

/// `gamma^(num/den) * factor`.
fn scaled_power(h: &HermiteValue, num: i64, den: i64, factor: Ratio<u64>) -> f64 {
    match &h.power_form {
        Some(p) => {
            // gamma^(num/den) = (gamma^beta)^(num / (den * beta))
            let e = Ratio::new(num, den * h.beta as i64);
            let whole = e.floor();
            let frac = e - whole;
            let mut exact = big(p).pow(whole.to_integer() as i32) * big(&factor);
            if frac.is_integer() {
                return exact.to_f64().unwrap_or(f64::NAN);
            }
            let d = *frac.denom() as u32;
            match exact_root(p, d) {
                Some(r) => {
                    exact *= big(&r).pow(*frac.numer() as i32);
                    exact.to_f64().unwrap_or(f64::NAN)
                }
                None => {
                    exact.to_f64().unwrap_or(f64::NAN)
                        * ratio_f64(p).powf(frac.to_f64().unwrap_or(0.0))
                }
            }
        }
        None => h.value.powf(num as f64 / den as f64) * ratio_f64(&factor),
    }
}

/// The SIC proximity bound for a block-reduced basis of rank `m`, with the
/// per-index bounds it is assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityBound {
    pub m: usize,
    pub beta: usize,
    pub gamma: HermiteValue,
    /// `gamma_beta^(4(m-1)/(beta-1)) * (m+3)/4`.
    pub value: f64,
    /// Entry `i-1` is `gamma_beta^(2(m+i-2)/(beta-1)) * (i+3)/4`.
    pub per_index: Vec<f64>,
    /// Set for `m = 1`, where the formula is evaluated outside its hypotheses.
    pub degenerate: bool,
}

fn check_rank_block(m: usize, beta: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("rank must be >= 1".into()));
    }
    if m == 1 {
        if beta == 0 {
            return Err(Error::InvalidParameter("block size must be >= 1".into()));
        }
        return Ok(());
    }
    if beta < 2 || beta > m {
        return Err(Error::InvalidParameter(format!(
            "block size {beta} outside [2, {m}]"
        )));
    }
    Ok(())
}

fn check_index(i: usize, m: usize) -> Result<()> {
    if i == 0 || i > m {
        return Err(Error::IndexOutOfRange(format!("index {i} outside [1, {m}]")));
    }
    Ok(())
}

/// Exponent denominator `beta - 1`, with the rank-1 case mapped to a zero
/// numerator by the callers.
fn block_den(beta: usize) -> i64 {
    (beta as i64 - 1).max(1)
}

/// Proximity bound for SIC after BKZ-`beta` reduction of a rank-`m` lattice.
/// `m = 1` is accepted for any `beta >= 1` and yields 1.
pub fn proximity_bound_sic(m: usize, beta: usize) -> Result<ProximityBound> {
    check_rank_block(m, beta)?;
    let gamma = hermite_constant(beta)?;
    let den = block_den(beta);
    let mi = m as i64;
    let value = scaled_power(&gamma, 4 * (mi - 1), den, Ratio::new(m as u64 + 3, 4));
    let per_index = (1..=mi)
        .map(|i| scaled_power(&gamma, 2 * (mi + i - 2), den, Ratio::new(i as u64 + 3, 4)))
        .collect::<Vec<_>>();
    let per_index = if m == 1 { vec![1.0] } else { per_index };
    Ok(ProximityBound {
        m,
        beta,
        value: if m == 1 { 1.0 } else { value },
        per_index,
        gamma,
        degenerate: m == 1,
    })
}

/// Upper Schnorr inequality: `|b_i|^2 / lambda_i^2 <= gamma^(2(m-1)/(beta-1)) * (i+3)/4`.
/// `i` is 1-based.
pub fn schnorr_upper(i: usize, m: usize, beta: usize) -> Result<f64> {
    check_rank_block(m, beta)?;
    check_index(i, m)?;
    let gamma = hermite_constant(beta)?;
    Ok(scaled_power(
        &gamma,
        2 * (m as i64 - 1),
        block_den(beta),
        Ratio::new(i as u64 + 3, 4),
    ))
}

/// Lower Schnorr inequality: `|b_i*|^2 / lambda_i^2 >= gamma^(-2(i-1)/(beta-1))`.
/// `i` is 1-based.
pub fn schnorr_lower(i: usize, m: usize, beta: usize) -> Result<f64> {
    check_rank_block(m, beta)?;
    check_index(i, m)?;
    let gamma = hermite_constant(beta)?;
    Ok(scaled_power(
        &gamma,
        -2 * (i as i64 - 1),
        block_den(beta),
        Ratio::new(1, 1),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchnorrIndexCheck {
    /// 1-based index.
    pub i: usize,
    pub lambda_sq: f64,
    /// `|b_i|^2 / lambda_i^2`.
    pub upper_ratio: f64,
    pub upper_bound: f64,
    /// `upper_bound - upper_ratio`; negative on violation.
    pub upper_margin: f64,
    /// `|b_i*|^2 / lambda_i^2`.
    pub lower_ratio: f64,
    pub lower_bound: f64,
    /// `lower_ratio - lower_bound`; negative on violation.
    pub lower_margin: f64,
}

impl SchnorrIndexCheck {
    pub fn upper_ok(&self) -> bool {
        self.upper_ratio <= self.upper_bound * (1.0 + BOUND_TOL)
    }

    pub fn lower_ok(&self) -> bool {
        self.lower_ratio >= self.lower_bound * (1.0 - BOUND_TOL)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchnorrReport {
    pub m: usize,
    pub beta: usize,
    pub indices: Vec<SchnorrIndexCheck>,
}

impl SchnorrReport {
    pub fn violations(&self) -> usize {
        self.indices
            .iter()
            .map(|c| usize::from(!c.upper_ok()) + usize::from(!c.lower_ok()))
            .sum()
    }

    pub fn all_pass(&self) -> bool {
        self.violations() == 0
    }
}

/// Evaluates both Schnorr inequalities at every index of `basis`, using exact
/// successive minima. Violations are reported, never raised.
pub fn check_schnorr(basis: &Basis, beta: usize) -> Result<SchnorrReport> {
    check_schnorr_capped(basis, beta, SVP_RANK_CAP)
}

pub fn check_schnorr_capped(basis: &Basis, beta: usize, cap: usize) -> Result<SchnorrReport> {
    let m = basis.rank();
    check_rank_block(m, beta)?;
    let minima = successive_minima_capped(basis, m, cap)?;
    let gso = compute_gso(basis)?;
    let mut indices = Vec::with_capacity(m);
    for i in 1..=m {
        let lambda_sq = minima.norms_sq[i - 1];
        let upper_ratio = norm_sq(basis.vector(i - 1)) / lambda_sq;
        let lower_ratio = gso.norms_sq[i - 1] / lambda_sq;
        let upper_bound = schnorr_upper(i, m, beta)?;
        let lower_bound = schnorr_lower(i, m, beta)?;
        indices.push(SchnorrIndexCheck {
            i,
            lambda_sq,
            upper_ratio,
            upper_bound,
            upper_margin: upper_bound - upper_ratio,
            lower_ratio,
            lower_bound,
            lower_margin: lower_ratio - lower_bound,
        });
    }
    Ok(SchnorrReport { m, beta, indices })
}

/// All admissible `(m, beta)` pairs in the given inclusive ranges: `2 <= beta
/// <= m`, plus `(1, 1)` when both ranges contain 1.
pub fn bound_rows(
    ms: std::ops::RangeInclusive<usize>,
    betas: std::ops::RangeInclusive<usize>,
) -> Result<Vec<ProximityBound>> {
    let mut rows = Vec::new();
    for m in ms {
        if m == 1 {
            if betas.contains(&1) {
                rows.push(proximity_bound_sic(1, 1)?);
            }
            continue;
        }
        for beta in betas.clone() {
            if beta >= 2 && beta <= m {
                rows.push(proximity_bound_sic(m, beta)?);
            }
        }
    }
    Ok(rows)
}

pub const BOUND_CSV_HEADER: &str = "m,beta,gamma_beta,exactness,bound,per_index_json";

/// Bound table as CSV; `per_index_json` is a quoted JSON array.
pub fn bound_table_csv(rows: &[ProximityBound]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{BOUND_CSV_HEADER}");
    for r in rows {
        let per: Vec<String> = r.per_index.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(
            out,
            "{},{},{:?},{},{:?},\"[{}]\"",
            r.m,
            r.beta,
            r.gamma.value,
            r.gamma.exactness,
            r.value,
            per.join(",")
        );
    }
    out
}
