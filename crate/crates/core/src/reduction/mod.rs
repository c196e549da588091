//! LLL, block Korkin–Zolotarev (BKZ) and Korkin–Zolotarev reduction.

mod enumerate;

use std::fmt;
use std::str::FromStr;

pub use enumerate::{
    successive_minima, successive_minima_capped, svp_enumerate, svp_enumerate_capped,
    SuccessiveMinima, SvpResult, SVP_RANK_CAP, TIE_TOL,
};
pub(crate) use enumerate::block_svp;

use crate::error::{Error, Result};
use crate::lattice::{compute_gso, size_reduce_row, Basis};

pub const DEFAULT_DELTA: f64 = 0.99;
pub const DEFAULT_MAX_TOURS: usize = 32;
/// A block vector is inserted only if it beats the current one by this factor.
pub const INSERT_EPS: f64 = 1e-9;
/// Swaps happen only on a Lovász violation larger than this relative slack,
/// so `delta = 1` terminates on float input.
const LOVASZ_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionParams {
    /// Lovász parameter in (1/4, 1].
    pub delta: f64,
    /// Block size, `2 <= beta <= m`.
    pub beta: usize,
    /// Cap on BKZ tours.
    pub max_tours: usize,
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            beta: 2,
            max_tours: DEFAULT_MAX_TOURS,
        }
    }
}

impl ReductionParams {
    pub fn with_beta(beta: usize) -> Self {
        Self {
            beta,
            ..Self::default()
        }
    }

    fn check_delta(&self) -> Result<()> {
        if !(self.delta > 0.25 && self.delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta {} outside (1/4, 1]",
                self.delta
            )));
        }
        Ok(())
    }

    fn check_block(&self, m: usize) -> Result<()> {
        self.check_delta()?;
        if self.beta < 2 || self.beta > m {
            return Err(Error::InvalidParameter(format!(
                "block size {} outside [2, {m}]",
                self.beta
            )));
        }
        if self.beta > SVP_RANK_CAP {
            return Err(Error::RankGuard {
                rank: self.beta,
                cap: SVP_RANK_CAP,
            });
        }
        if self.max_tours == 0 {
            return Err(Error::InvalidParameter("max_tours must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReductionMethod {
    Lll,
    Bkz,
    Kz,
}

impl fmt::Display for ReductionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lll => "lll",
            Self::Bkz => "bkz",
            Self::Kz => "kz",
        })
    }
}

impl FromStr for ReductionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lll" => Ok(Self::Lll),
            "bkz" => Ok(Self::Bkz),
            "kz" => Ok(Self::Kz),
            _ => Err(Error::config("method", format!("unknown method `{s}` (lll, bkz, kz)"))),
        }
    }
}

/// Result of a reduction run with its bookkeeping.
#[derive(Debug, Clone)]
pub struct ReductionOutcome {
    pub basis: Basis,
    /// Completed BKZ tours; 0 for LLL.
    pub tours: usize,
    pub insertions: usize,
    /// False when BKZ stopped at `max_tours` with a tour that still changed
    /// the basis.
    pub converged: bool,
}

/// In-place LLL; returns the number of swaps.
pub(crate) fn lll_in_place(basis: &mut Basis, delta: f64) -> Result<usize> {
    let m = basis.rank();
    let mut gso = compute_gso(basis)?;
    let mut swaps = 0;
    let mut k = 1;
    while k < m {
        size_reduce_row(basis, &mut gso, k)?;
        let mu = gso.mu[k][k - 1];
        let bound = (delta - mu * mu) * gso.norms_sq[k - 1];
        if gso.norms_sq[k] < bound * (1.0 - LOVASZ_SLACK) {
            basis.swap(k - 1, k);
            gso.refresh(basis.vectors(), k - 1)?;
            swaps += 1;
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }
    Ok(swaps)
}

/// LLL reduction: size-reduced output satisfying the Lovász condition with
/// parameter `params.delta`.
pub fn lll_reduce(basis: &Basis, params: &ReductionParams) -> Result<Basis> {
    params.check_delta()?;
    let mut out = basis.clone();
    lll_in_place(&mut out, params.delta)?;
    Ok(out)
}

/// Makes generator `start` equal to `sum_j coeffs[j] * b_{start+j}` by a
/// chain of unimodular 2x2 column operations, so no dependency ever appears.
fn insert_block_vector(basis: &mut Basis, start: usize, coeffs: &[i64]) {
    let mut x = coeffs.to_vec();
    // a shortest vector is primitive, so the final gcd is 1
    for j in (1..x.len()).rev() {
        let (a, b) = (x[j - 1], x[j]);
        if b == 0 {
            continue;
        }
        let eg = num_integer::Integer::extended_gcd(&a, &b);
        let (g, s, t) = if eg.gcd < 0 {
            (-eg.gcd, -eg.x, -eg.y)
        } else {
            (eg.gcd, eg.x, eg.y)
        };
        basis.mix(start + j - 1, start + j, [[a / g, b / g], [-t, s]]);
        x[j - 1] = g;
        x[j] = 0;
    }
    if x[0] < 0 {
        basis.negate(start);
    }
}

/// BKZ with full bookkeeping. LLL preprocessing, then tours over block starts
/// `k = 0..m-1`; each block `[k, min(k+beta, m))` is searched exhaustively
/// for a projected vector strictly shorter than `b_k*`, which is inserted at
/// `k` before re-running LLL. A tour without insertion ends the run.
pub fn bkz_reduce_detailed(basis: &Basis, params: &ReductionParams) -> Result<ReductionOutcome> {
    let m = basis.rank();
    params.check_block(m)?;
    let mut out = basis.clone();
    lll_in_place(&mut out, params.delta)?;
    let mut insertions = 0;
    let mut tours = 0;
    let mut converged = false;
    while tours < params.max_tours {
        tours += 1;
        let mut changed = false;
        for k in 0..m - 1 {
            let end = (k + params.beta).min(m);
            let gso = compute_gso(&out)?;
            let radius = gso.norms_sq[k] * (1.0 - INSERT_EPS);
            if let Some((coeffs, _)) = block_svp(&gso, k, end, radius) {
                insert_block_vector(&mut out, k, &coeffs);
                lll_in_place(&mut out, params.delta)?;
                insertions += 1;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("BKZ-{} stopped after {tours} tours without a clean tour", params.beta);
    }
    Ok(ReductionOutcome {
        basis: out,
        tours,
        insertions,
        converged,
    })
}

/// Block Korkin–Zolotarev reduction with block size `params.beta`.
pub fn bkz_reduce(basis: &Basis, params: &ReductionParams) -> Result<Basis> {
    bkz_reduce_detailed(basis, params).map(|o| o.basis)
}

/// Korkin–Zolotarev reduction, i.e. BKZ with `beta = m`.
pub fn kz_reduce(basis: &Basis, params: &ReductionParams) -> Result<Basis> {
    reduce(basis, ReductionMethod::Kz, params).map(|o| o.basis)
}

/// Dispatches on `method`. For KZ the block size is forced to the rank.
pub fn reduce(
    basis: &Basis,
    method: ReductionMethod,
    params: &ReductionParams,
) -> Result<ReductionOutcome> {
    match method {
        ReductionMethod::Lll => Ok(ReductionOutcome {
            basis: lll_reduce(basis, params)?,
            tours: 0,
            insertions: 0,
            converged: true,
        }),
        ReductionMethod::Bkz => bkz_reduce_detailed(basis, params),
        ReductionMethod::Kz if basis.rank() == 1 => Ok(ReductionOutcome {
            basis: basis.clone(),
            tours: 0,
            insertions: 0,
            converged: true,
        }),
        ReductionMethod::Kz => bkz_reduce_detailed(
            basis,
            &ReductionParams {
                beta: basis.rank(),
                ..*params
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::project_block;

    fn basis(v: &[&[f64]]) -> Basis {
        Basis::new(v.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn lll_identity_and_hand_trace() {
        let p = ReductionParams::default();
        let id = Basis::identity(4);
        assert_eq!(lll_reduce(&id, &p).unwrap(), id);
        let r = lll_reduce(&basis(&[&[1.0, 1.0], &[0.0, 2.0]]), &p).unwrap();
        assert_eq!(r.vectors(), &[vec![1.0, 1.0], vec![-1.0, 1.0]]);
    }

    #[test]
    fn bkz2_matches_lll_on_hand_trace() {
        let b = basis(&[&[1.0, 1.0], &[0.0, 2.0]]);
        let p = ReductionParams::default();
        let out = bkz_reduce_detailed(&b, &p).unwrap();
        assert_eq!(out.basis, lll_reduce(&b, &p).unwrap());
        assert!(out.converged);
        assert_eq!(out.insertions, 0);
    }

    #[test]
    fn bad_params_rejected() {
        let b = Basis::identity(3);
        let mut p = ReductionParams::with_beta(4);
        assert!(bkz_reduce(&b, &p).is_err());
        p.beta = 1;
        assert!(bkz_reduce(&b, &p).is_err());
        p.beta = 2;
        p.delta = 0.25;
        assert!(lll_reduce(&b, &p).is_err());
        p.delta = 1.01;
        assert!(lll_reduce(&b, &p).is_err());
    }

    #[test]
    fn insertion_builds_requested_vector() {
        let mut b = basis(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        insert_block_vector(&mut b, 0, &[3, -2, 5]);
        assert_eq!(b.vector(0), &[3.0, -2.0, 5.0]);
        assert_eq!(b.transform().determinant().abs(), 1);
        let mut b = Basis::identity(2);
        insert_block_vector(&mut b, 0, &[-1, 0]);
        assert_eq!(b.vector(0), &[-1.0, 0.0]);
    }

    #[test]
    fn kz_rank_two_structure() {
        let b = basis(&[&[7.0, 3.0], &[-2.0, 11.0]]);
        let r = kz_reduce(&b, &ReductionParams::default()).unwrap();
        let g = compute_gso(&r).unwrap();
        let lambda = svp_enumerate(&b).unwrap().norm_sq;
        let det = b.gram_determinant();
        assert!((g.norms_sq[0] - lambda).abs() <= 1e-9 * lambda);
        assert!((g.norms_sq[1] - det / lambda).abs() <= 1e-9 * g.norms_sq[1]);
        let tail = project_block(&r, 1..2).unwrap();
        assert!((svp_enumerate(&tail).unwrap().norm_sq - g.norms_sq[1]).abs() < 1e-9 * g.norms_sq[1]);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("BKZ".parse::<ReductionMethod>().unwrap(), ReductionMethod::Bkz);
        assert!("hkz".parse::<ReductionMethod>().is_err());
    }
}
