//! Independent oracles for integration tests. Nothing here calls the
//! library's GSO, reduction or enumeration code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `m` generators of dimension `m` with integer entries in `[-r, r]`,
/// redrawn until the determinant is nonzero.
pub fn random_integer_basis(r: &mut ChaCha8Rng, m: usize, range: i64) -> Vec<Vec<f64>> {
    loop {
        let v: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..m).map(|_| r.random_range(-range..=range) as f64).collect())
            .collect();
        if int_det(&v) != 0 {
            return v;
        }
    }
}

/// Exact determinant of an integer matrix by fraction-free elimination.
pub fn int_det(rows: &[Vec<f64>]) -> i128 {
    let n = rows.len();
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| a[i][k] != 0) else {
            return 0;
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Rank of integer vectors over the rationals.
pub fn int_rank(vectors: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = vectors
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..a.len()).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..a.len() {
            let f = a[i][c];
            let g = a[rank][c];
            for j in 0..cols {
                a[i][j] = a[i][j] * g - a[rank][j] * f;
            }
            let d = a[i].iter().fold(0i128, |d, &x| gcd(d, x.abs()));
            if d > 1 {
                a[i].iter_mut().for_each(|x| *x /= d);
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Householder QR of the matrix whose columns are `vectors`; returns the
/// `m x m` upper-triangular factor with row `j`, column `i` = `<b_i, q_j>`.
pub fn householder_r(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = vectors.len();
    let d = vectors[0].len();
    // a[row][col]
    let mut a: Vec<Vec<f64>> = (0..d).map(|r| (0..m).map(|c| vectors[c][r]).collect()).collect();
    for k in 0..m {
        let norm = (k..d).map(|r| a[r][k] * a[r][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..d).map(|r| a[r][k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for c in k..m {
            let s: f64 = (k..d).map(|r| v[r - k] * a[r][c]).sum::<f64>() * 2.0 / vv;
            for r in k..d {
                a[r][c] -= s * v[r - k];
            }
        }
    }
    (0..m).map(|r| (0..m).map(|c| if c >= r { a[r][c] } else { 0.0 }).collect()).collect()
}

/// `(mu, norms_sq)` derived from the QR oracle.
pub fn qr_gso(vectors: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let r = householder_r(vectors);
    let m = vectors.len();
    let norms: Vec<f64> = (0..m).map(|j| r[j][j] * r[j][j]).collect();
    let mu = (0..m)
        .map(|i| (0..m).map(|j| if j < i { r[j][i] / r[j][j] } else { 0.0 }).collect())
        .collect();
    (mu, norms)
}

/// Inverse of a square matrix by Gauss–Jordan with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs()))
            .unwrap();
        m.swap(k, p);
        let piv = m[k][k];
        m[k].iter_mut().for_each(|x| *x /= piv);
        for i in 0..n {
            if i != k {
                let f = m[i][k];
                for j in 0..2 * n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn point(vectors: &[Vec<f64>], c: &[i64]) -> Vec<f64> {
    let d = vectors[0].len();
    (0..d)
        .map(|r| vectors.iter().zip(c).map(|(v, &ci)| ci as f64 * v[r]).sum())
        .collect()
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Per-coefficient bounds `|c_j| <= R * |row j of B^-1|` for every lattice
/// vector of norm at most `R`, for square `B` with the generators as columns.
pub fn coefficient_box(vectors: &[Vec<f64>], radius_sq: f64) -> Vec<i64> {
    let m = vectors.len();
    let cols: Vec<Vec<f64>> = (0..m).map(|r| (0..m).map(|c| vectors[c][r]).collect()).collect();
    let inv = invert(&cols);
    inv.iter()
        .map(|row| (radius_sq.sqrt() * norm_sq(row).sqrt() * (1.0 + 1e-9)).floor() as i64)
        .collect()
}

/// Visits every coefficient vector in the box `[-b_j, b_j]`.
pub fn for_each_in_box(bounds: &[i64], mut f: impl FnMut(&[i64])) {
    let m = bounds.len();
    let mut c: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        f(&c);
        let mut j = 0;
        loop {
            if j == m {
                return;
            }
            if c[j] < bounds[j] {
                c[j] += 1;
                break;
            }
            c[j] = -bounds[j];
            j += 1;
        }
    }
}

pub fn box_size(bounds: &[i64]) -> f64 {
    bounds.iter().map(|&b| (2 * b + 1) as f64).product()
}

/// Shortest nonzero norm over the box, or `None` when the box exceeds `cap`.
pub fn brute_force_svp(vectors: &[Vec<f64>], cap: f64) -> Option<f64> {
    let radius_sq = vectors.iter().map(|v| norm_sq(v)).fold(f64::INFINITY, f64::min);
    let bounds = coefficient_box(vectors, radius_sq);
    if box_size(&bounds) > cap {
        return None;
    }
    let mut best = f64::INFINITY;
    for_each_in_box(&bounds, |c| {
        if c.iter().any(|&x| x != 0) {
            best = best.min(norm_sq(&point(vectors, c)));
        }
    });
    Some(best)
}

/// Successive minima by greedy independent selection over a coefficient
/// window, sorted by norm.
pub fn brute_force_minima(vectors: &[Vec<f64>], window: i64) -> Vec<f64> {
    let m = vectors.len();
    let mut all = Vec::new();
    for_each_in_box(&vec![window; m], |c| {
        if c.iter().any(|&x| x != 0) {
            all.push((norm_sq(&point(vectors, c)), c.to_vec()));
        }
    });
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    let mut minima = Vec::new();
    for (n, c) in all {
        chosen.push(c);
        if int_rank(&chosen) == chosen.len() {
            minima.push(n);
            if minima.len() == m {
                break;
            }
        } else {
            chosen.pop();
        }
    }
    minima
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
