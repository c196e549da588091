//! Schnorr–Euchner depth-first enumeration over projected sublattices, and
//! the exact shortest-vector / successive-minima oracles built on it.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::lattice::{compute_gso, norm_sq, Basis, GsoDecomposition};

use super::{lll_in_place, DEFAULT_DELTA};

/// Largest rank the exact oracles accept by default.
pub const SVP_RANK_CAP: usize = 12;
/// Two squared norms within this relative distance are treated as a tie.
pub const TIE_TOL: f64 = 1e-9;

/// A shortest nonzero lattice vector, as coefficients w.r.t. the input basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SvpResult {
    pub coeffs: Vec<i64>,
    pub norm_sq: f64,
}

/// Successive minima `lambda_1^2 <= ... <= lambda_k^2` with linearly
/// independent vectors realizing them.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessiveMinima {
    pub norms_sq: Vec<f64>,
    pub coeffs: Vec<Vec<i64>>,
}

struct Enumerator<'a, F> {
    mu: Vec<&'a [f64]>,
    offset: usize,
    norms: &'a [f64],
    x: Vec<i64>,
    radius: f64,
    visit: F,
}

impl<F: FnMut(&[i64], f64) -> f64> Enumerator<'_, F> {
    fn mu(&self, i: usize, j: usize) -> f64 {
        self.mu[i][self.offset + j]
    }

    fn descend(&mut self, level: usize, partial: f64, zero_above: bool) {
        let n = self.norms.len();
        let mut center = 0.0;
        for i in level + 1..n {
            center -= self.x[i] as f64 * self.mu(i, level);
        }
        let weight = self.norms[level];
        // up to sign: the highest nonzero coefficient is positive
        let floor = match (zero_above, level) {
            (true, 0) => 1,
            (true, _) => 0,
            _ => i64::MIN,
        };
        let nearest = center.round() as i64;
        let mut up = nearest.max(floor);
        let mut down = nearest - 1;
        let mut down_live = down >= floor;
        let dist = |v: i64| partial + (v as f64 - center).powi(2) * weight;
        loop {
            let du = dist(up);
            let dd = if down_live { dist(down) } else { f64::INFINITY };
            let (value, d) = if du <= dd { (up, du) } else { (down, dd) };
            if !(d <= self.radius) {
                break;
            }
            if du <= dd {
                up += 1;
            } else {
                down -= 1;
                down_live = down >= floor;
            }
            self.x[level] = value;
            if level == 0 {
                self.radius = (self.visit)(&self.x, d);
            } else {
                self.descend(level - 1, d, zero_above && value == 0);
            }
        }
        self.x[level] = 0;
    }
}

/// Visits every nonzero coefficient vector, up to sign, of the projected
/// sublattice spanned by GSO rows `start..end` whose projected squared norm
/// is at most the current radius. `visit` returns the radius to continue with.
pub(crate) fn enumerate_block<F>(
    gso: &GsoDecomposition,
    start: usize,
    end: usize,
    radius: f64,
    visit: F,
) where
    F: FnMut(&[i64], f64) -> f64,
{
    let n = end - start;
    if n == 0 {
        return;
    }
    let mut e = Enumerator {
        mu: gso.mu[start..end].iter().map(Vec::as_slice).collect(),
        offset: start,
        norms: &gso.norms_sq[start..end],
        x: vec![0; n],
        radius,
        visit,
    };
    e.descend(n - 1, 0.0, true);
}

/// Flips the sign so the first nonzero entry is positive.
pub(crate) fn sign_normalize(mut c: Vec<i64>) -> Vec<i64> {
    if c.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0) {
        c.iter_mut().for_each(|v| *v = -*v);
    }
    c
}

/// Shortest vector of the projected block `start..end` with projected norm
/// below `radius`, ties resolved to the lexicographically smallest
/// sign-normalized coefficient vector. Coefficients are block-local.
pub(crate) fn block_svp(
    gso: &GsoDecomposition,
    start: usize,
    end: usize,
    radius: f64,
) -> Option<(Vec<i64>, f64)> {
    let mut best: Option<(Vec<i64>, f64)> = None;
    enumerate_block(gso, start, end, radius, |x, d| {
        let replace = match &best {
            None => true,
            Some((bx, bd)) => {
                if d < *bd * (1.0 - TIE_TOL) {
                    true
                } else if d <= *bd * (1.0 + TIE_TOL) {
                    sign_normalize(x.to_vec()) < *bx
                } else {
                    false
                }
            }
        };
        if replace {
            best = Some((sign_normalize(x.to_vec()), d));
        }
        best.as_ref()
            .map_or(radius, |(_, bd)| (bd * (1.0 + TIE_TOL)).min(radius))
    });
    best
}

fn check_cap(basis: &Basis, cap: usize) -> Result<()> {
    if basis.rank() > cap {
        return Err(Error::RankGuard {
            rank: basis.rank(),
            cap,
        });
    }
    Ok(())
}

/// LLL-reduced copy whose transform is relative to `basis` itself.
fn preprocessed(basis: &Basis) -> Result<Basis> {
    let mut local = basis.rebased();
    lll_in_place(&mut local, DEFAULT_DELTA)?;
    Ok(local)
}

/// Collects all lattice vectors (up to sign) with squared norm at most
/// `radius`, as `(coefficients w.r.t. basis, exact squared norm)`.
fn vectors_within(
    basis: &Basis,
    reduced: &Basis,
    gso: &GsoDecomposition,
    radius: f64,
) -> Vec<(Vec<i64>, f64)> {
    let mut found = Vec::new();
    enumerate_block(gso, 0, reduced.rank(), radius, |x, _| {
        found.push(x.to_vec());
        radius
    });
    found
        .into_iter()
        .map(|x| {
            let c = sign_normalize(reduced.transform().apply(&x));
            let n = norm_sq(&basis.point(&c));
            (c, n)
        })
        .collect()
}

fn by_norm_then_lex(a: &(Vec<i64>, f64), b: &(Vec<i64>, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0))
}

/// Exact shortest nonzero vector with the default rank cap.
pub fn svp_enumerate(basis: &Basis) -> Result<SvpResult> {
    svp_enumerate_capped(basis, SVP_RANK_CAP)
}

/// Exact shortest nonzero vector. The basis is LLL-reduced internally; the
/// returned coefficients refer to the input generators and are
/// sign-normalized. Among vectors whose norms tie within [`TIE_TOL`], the
/// lexicographically smallest coefficient vector wins.
pub fn svp_enumerate_capped(basis: &Basis, cap: usize) -> Result<SvpResult> {
    check_cap(basis, cap)?;
    let reduced = preprocessed(basis)?;
    let gso = compute_gso(&reduced)?;
    let start = reduced
        .vectors()
        .iter()
        .map(|v| norm_sq(v))
        .fold(f64::INFINITY, f64::min);

    let mut pool: Vec<(Vec<i64>, f64)> = Vec::new();
    let mut best = start;
    enumerate_block(&gso, 0, reduced.rank(), start * (1.0 + TIE_TOL), |x, d| {
        if d < best {
            best = d;
            pool.retain(|(_, pd)| *pd <= best * (1.0 + TIE_TOL));
        }
        pool.push((x.to_vec(), d));
        best * (1.0 + TIE_TOL)
    });

    let mut candidates: Vec<(Vec<i64>, f64)> = pool
        .into_iter()
        .map(|(x, _)| {
            let c = sign_normalize(reduced.transform().apply(&x));
            let n = norm_sq(&basis.point(&c));
            (c, n)
        })
        .collect();
    let min = candidates
        .iter()
        .map(|(_, n)| *n)
        .fold(f64::INFINITY, f64::min);
    candidates.retain(|(_, n)| *n <= min * (1.0 + TIE_TOL));
    let (coeffs, norm_sq) = candidates
        .into_iter()
        .min_by(|a, b| a.0.cmp(&b.0))
        .expect("enumeration always finds the shortest basis vector");
    Ok(SvpResult { coeffs, norm_sq })
}

/// Rank of an integer matrix given by rows, by fraction-free elimination.
pub(crate) fn integer_rank(rows: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..a.len()).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..a.len() {
            if a[r][col] == 0 {
                continue;
            }
            let (pv, rv) = (a[rank][col], a[r][col]);
            for c in col..cols {
                a[r][c] = a[r][c] * pv - a[rank][c] * rv;
            }
            let g = a[r]
                .iter()
                .fold(0i128, |g, &v| num_integer::gcd(g, v));
            if g > 1 {
                a[r].iter_mut().for_each(|v| *v /= g);
            }
        }
        rank += 1;
    }
    rank
}

/// The first `k` successive minima with the default rank cap.
pub fn successive_minima(basis: &Basis, k: usize) -> Result<SuccessiveMinima> {
    successive_minima_capped(basis, k, SVP_RANK_CAP)
}

/// The first `k` successive minima. All vectors up to the `k`-th shortest
/// generator of an LLL-reduced basis are enumerated (that radius provably
/// contains `lambda_k`), then independent vectors are taken greedily in order
/// of norm.
pub fn successive_minima_capped(basis: &Basis, k: usize, cap: usize) -> Result<SuccessiveMinima> {
    check_cap(basis, cap)?;
    let m = basis.rank();
    if k == 0 || k > m {
        return Err(Error::IndexOutOfRange(format!(
            "asked for {k} successive minima of a rank-{m} lattice"
        )));
    }
    let reduced = preprocessed(basis)?;
    let gso = compute_gso(&reduced)?;
    let mut lengths: Vec<f64> = reduced.vectors().iter().map(|v| norm_sq(v)).collect();
    lengths.sort_by(f64::total_cmp);
    let radius = lengths[k - 1] * (1.0 + TIE_TOL);

    let mut candidates = vectors_within(basis, &reduced, &gso, radius);
    candidates.sort_by(by_norm_then_lex);

    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(k);
    let mut norms = Vec::with_capacity(k);
    for (c, n) in candidates {
        chosen.push(c);
        if integer_rank(&chosen) == chosen.len() {
            norms.push(n);
            if chosen.len() == k {
                break;
            }
        } else {
            chosen.pop();
        }
    }
    if chosen.len() < k {
        return Err(Error::InvalidParameter(format!(
            "found only {} independent vectors within the search radius",
            chosen.len()
        )));
    }
    Ok(SuccessiveMinima {
        norms_sq: norms,
        coeffs: chosen,
    })
}
