//! Basis representation, Gram–Schmidt orthogonalization and the plain-text
//! basis format.
//!
//! A basis is a list of `m` generator vectors of ambient dimension `d >= m`.
//! Lattice points are integer combinations `sum_i c_i * b_i`. Coordinates are
//! `f64`; the unimodular transform relating a basis to the generators it was
//! constructed from is tracked exactly in integers.

use std::fmt::Write as _;
use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance for algebraic identities (Pythagoras, reconstruction).
pub const IDENTITY_TOL: f64 = 1e-9;
/// Relative tolerance for pairwise orthogonality of GSO vectors.
pub const ORTHO_TOL: f64 = 1e-8;
/// Relative tolerance on size-reduction (`|mu| <= 1/2 + SIZE_TOL`).
pub const SIZE_TOL: f64 = 1e-9;
/// A generator whose orthogonal residual falls below this fraction of its
/// squared length is treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-20;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Square integer matrix of determinant ±1, stored row-major.
///
/// Column `j` holds the coefficients of the current generator `j` in terms of
/// the original generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnimodularTransform {
    entries: Vec<Vec<i64>>,
}

impl UnimodularTransform {
    pub fn identity(m: usize) -> Self {
        let entries = (0..m)
            .map(|i| (0..m).map(|j| i64::from(i == j)).collect())
            .collect();
        Self { entries }
    }

    /// Wraps a matrix after checking that its determinant is ±1.
    pub fn from_entries(entries: Vec<Vec<i64>>) -> Result<Self> {
        let m = entries.len();
        if entries.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidParameter("transform must be square".into()));
        }
        let t = Self { entries };
        match t.determinant() {
            1 | -1 => Ok(t),
            d => Err(Error::InvalidParameter(format!(
                "transform determinant is {d}, not ±1"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row][col]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim())
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> i128 {
        let m = self.dim();
        if m == 0 {
            return 1;
        }
        let mut a: Vec<Vec<i128>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&x| x as i128).collect())
            .collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..m - 1 {
            if a[k][k] == 0 {
                match (k + 1..m).find(|&r| a[r][k] != 0) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..m {
                for j in k + 1..m {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        sign * a[m - 1][m - 1]
    }

    /// `self * coeffs`: maps coefficients w.r.t. the current generators to
    /// coefficients w.r.t. the original ones.
    pub fn apply(&self, coeffs: &[i64]) -> Vec<i64> {
        self.entries
            .iter()
            .map(|row| row.iter().zip(coeffs).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn add_column_multiple(&mut self, target: usize, source: usize, k: i64) {
        for row in &mut self.entries {
            row[target] += k * row[source];
        }
    }

    fn swap_columns(&mut self, a: usize, b: usize) {
        for row in &mut self.entries {
            row.swap(a, b);
        }
    }

    fn negate_column(&mut self, col: usize) {
        for row in &mut self.entries {
            row[col] = -row[col];
        }
    }

    fn mix_columns(&mut self, a: usize, b: usize, m: [[i64; 2]; 2]) {
        for row in &mut self.entries {
            let (x, y) = (row[a], row[b]);
            row[a] = m[0][0] * x + m[0][1] * y;
            row[b] = m[1][0] * x + m[1][1] * y;
        }
    }
}

/// A lattice basis with its accumulated unimodular transform.
#[derive(Debug, Clone)]
pub struct Basis {
    vectors: Vec<Vec<f64>>,
    transform: UnimodularTransform,
    origin: Arc<Vec<Vec<f64>>>,
}

impl Basis {
    /// Builds a basis from generator vectors, rejecting rank-deficient input.
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let m = vectors.len();
        let d = vectors.first().map_or(0, Vec::len);
        if m == 0 || d < m {
            return Err(Error::BadShape);
        }
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: d,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        let basis = Self {
            transform: UnimodularTransform::identity(m),
            origin: Arc::new(vectors.clone()),
            vectors,
        };
        compute_gso(&basis)?;
        Ok(basis)
    }

    pub fn identity(m: usize) -> Self {
        let vectors = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(vectors).expect("identity is full rank")
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn transform(&self) -> &UnimodularTransform {
        &self.transform
    }

    /// Generators this basis was constructed from; `vectors = origin * transform`.
    pub fn origin(&self) -> &[Vec<f64>] {
        &self.origin
    }

    /// Drops the history: the current generators become the new origin.
    pub fn rebased(&self) -> Self {
        Self {
            vectors: self.vectors.clone(),
            transform: UnimodularTransform::identity(self.rank()),
            origin: Arc::new(self.vectors.clone()),
        }
    }

    /// Lattice point `sum_i coeffs[i] * b_i`.
    pub fn point(&self, coeffs: &[i64]) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        for (c, v) in coeffs.iter().zip(&self.vectors) {
            if *c != 0 {
                let c = *c as f64;
                for (pi, vi) in p.iter_mut().zip(v) {
                    *pi += c * vi;
                }
            }
        }
        p
    }

    /// Determinant of the Gram matrix, i.e. the squared lattice volume.
    pub fn gram_determinant(&self) -> f64 {
        compute_gso(self)
            .map(|g| g.norms_sq.iter().product())
            .unwrap_or(0.0)
    }

    /// Largest relative deviation of `vectors` from `origin * transform`.
    pub fn reconstruction_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (j, v) in self.vectors.iter().enumerate() {
            let mut rebuilt = vec![0.0; self.dim()];
            for (i, o) in self.origin.iter().enumerate() {
                let c = self.transform.get(i, j) as f64;
                for (r, x) in rebuilt.iter_mut().zip(o) {
                    *r += c * x;
                }
            }
            let diff: f64 = v.iter().zip(&rebuilt).map(|(a, b)| (a - b).powi(2)).sum();
            let scale = norm_sq(v).max(f64::MIN_POSITIVE);
            worst = worst.max((diff / scale).sqrt());
        }
        worst
    }

    // Column operations; each is applied to the generators and the transform.

    pub(crate) fn add_multiple(&mut self, target: usize, source: usize, k: i64) {
        if k == 0 {
            return;
        }
        let kf = k as f64;
        let (t, s) = if target < source {
            let (lo, hi) = self.vectors.split_at_mut(source);
            (&mut lo[target], &hi[0])
        } else {
            let (lo, hi) = self.vectors.split_at_mut(target);
            (&mut hi[0], &lo[source])
        };
        for (x, y) in t.iter_mut().zip(s.iter()) {
            *x += kf * y;
        }
        self.transform.add_column_multiple(target, source, k);
    }

    pub(crate) fn swap(&mut self, a: usize, b: usize) {
        self.vectors.swap(a, b);
        self.transform.swap_columns(a, b);
    }

    pub(crate) fn negate(&mut self, i: usize) {
        for x in &mut self.vectors[i] {
            *x = -*x;
        }
        self.transform.negate_column(i);
    }

    /// Replaces `(b_a, b_b)` by `(m00 b_a + m01 b_b, m10 b_a + m11 b_b)`;
    /// the caller guarantees `det m = ±1`.
    pub(crate) fn mix(&mut self, a: usize, b: usize, m: [[i64; 2]; 2]) {
        let (x, y) = (self.vectors[a].clone(), self.vectors[b].clone());
        let f = m.map(|r| r.map(|v| v as f64));
        for k in 0..x.len() {
            self.vectors[a][k] = f[0][0] * x[k] + f[0][1] * y[k];
            self.vectors[b][k] = f[1][0] * x[k] + f[1][1] * y[k];
        }
        self.transform.mix_columns(a, b, m);
    }
}

impl PartialEq for Basis {
    /// Bases compare equal when their generators match coordinate-wise.
    fn eq(&self, other: &Self) -> bool {
        self.vectors == other.vectors
    }
}

/// Gram–Schmidt orthogonalization of a basis.
///
/// `b_i = ortho_i + sum_{j<i} mu[i][j] * ortho_j`, with `mu[i][i] = 1`.
#[derive(Debug, Clone)]
pub struct GsoDecomposition {
    pub ortho: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub norms_sq: Vec<f64>,
}

impl GsoDecomposition {
    pub fn rank(&self) -> usize {
        self.norms_sq.len()
    }

    /// Recomputes rows `from..` for the given generators, keeping rows before
    /// `from` as they are.
    pub(crate) fn refresh(&mut self, vectors: &[Vec<f64>], from: usize) -> Result<()> {
        for i in from..vectors.len() {
            self.fill_row(vectors, i)?;
        }
        Ok(())
    }

    fn fill_row(&mut self, vectors: &[Vec<f64>], i: usize) -> Result<()> {
        let b = &vectors[i];
        let mut w = b.clone();
        for j in 0..i {
            // modified Gram-Schmidt: project the running residual
            let mu = dot(&w, &self.ortho[j]) / self.norms_sq[j];
            self.mu[i][j] = mu;
            for (wk, ok) in w.iter_mut().zip(&self.ortho[j]) {
                *wk -= mu * ok;
            }
        }
        // mu from the residual differs from <b_i, b*_j>/|b*_j|^2 only by rounding;
        // recompute against b_i for the returned coefficients
        for j in 0..i {
            self.mu[i][j] = dot(b, &self.ortho[j]) / self.norms_sq[j];
        }
        self.mu[i][i] = 1.0;
        for j in i + 1..self.mu[i].len() {
            self.mu[i][j] = 0.0;
        }
        let n = norm_sq(&w);
        if !(n > RANK_TOL * norm_sq(b)) {
            return Err(Error::RankDeficient { index: i });
        }
        self.norms_sq[i] = n;
        self.ortho[i] = w;
        Ok(())
    }
}

fn gso_of(vectors: &[Vec<f64>]) -> Result<GsoDecomposition> {
    let m = vectors.len();
    let d = vectors.first().map_or(0, Vec::len);
    let mut g = GsoDecomposition {
        ortho: vec![vec![0.0; d]; m],
        mu: vec![vec![0.0; m]; m],
        norms_sq: vec![0.0; m],
    };
    g.refresh(vectors, 0)?;
    Ok(g)
}

/// Gram–Schmidt orthogonalization; fails with the first dependent index.
pub fn compute_gso(basis: &Basis) -> Result<GsoDecomposition> {
    gso_of(&basis.vectors)
}

/// Size-reduces generator `k` against all earlier ones, keeping `gso` current.
pub(crate) fn size_reduce_row(
    basis: &mut Basis,
    gso: &mut GsoDecomposition,
    k: usize,
) -> Result<()> {
    // float drift in large reductions can leave |mu| slightly above 1/2; repeat
    for _ in 0..64 {
        let mut changed = false;
        for j in (0..k).rev() {
            let mu = gso.mu[k][j];
            if mu.abs() > 0.5 {
                let q = mu.round();
                basis.add_multiple(k, j, -(q as i64));
                for l in 0..j {
                    gso.mu[k][l] -= q * gso.mu[j][l];
                }
                gso.mu[k][j] -= q;
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
        gso.fill_row(&basis.vectors, k)?;
        if gso.mu[k][..k].iter().all(|m| m.abs() <= 0.5 + SIZE_TOL) {
            return Ok(());
        }
    }
    Ok(())
}

/// Size reduction: makes every `|mu_ij| <= 1/2` without changing the lattice
/// or the GSO vectors.
pub fn size_reduce(basis: &Basis) -> Result<Basis> {
    let mut out = basis.clone();
    let mut gso = compute_gso(&out)?;
    for k in 1..out.rank() {
        size_reduce_row(&mut out, &mut gso, k)?;
    }
    Ok(out)
}

/// Projects generators `range` onto the orthogonal complement of the
/// generators before `range.start` (0-based, half-open).
pub fn project_block(basis: &Basis, range: Range<usize>) -> Result<Basis> {
    let m = basis.rank();
    if range.start >= range.end || range.end > m {
        return Err(Error::IndexOutOfRange(format!(
            "block {}..{} for rank {m}",
            range.start, range.end
        )));
    }
    let gso = compute_gso(basis)?;
    let start = range.start;
    let projected = range
        .map(|i| {
            let mut v = basis.vectors[i].clone();
            for j in 0..start {
                let mu = gso.mu[i][j];
                for (vk, ok) in v.iter_mut().zip(&gso.ortho[j]) {
                    *vk -= mu * ok;
                }
            }
            v
        })
        .collect();
    Basis::new(projected)
}

/// Reads the text format: a header line `m d`, then `m` lines of `d` numbers.
/// Blank lines and lines starting with `#` are skipped; errors carry the
/// 1-based physical line number.
pub fn parse_basis(text: &str) -> Result<Basis> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header `m d`".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line: header_line,
            message: format!("bad header: {e}"),
        })?;
    let [m, d] = dims[..] else {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header needs 2 values `m d`, found {}", dims.len()),
        });
    };
    let mut vectors = Vec::with_capacity(m);
    let mut last_line = header_line;
    for _ in 0..m {
        let Some((line, text)) = lines.next() else {
            return Err(Error::Parse {
                line: last_line + 1,
                message: format!("expected {m} generator lines, found {}", vectors.len()),
            });
        };
        last_line = line;
        let v: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line,
                message: format!("bad number: {e}"),
            })?;
        if v.len() != d {
            return Err(Error::Parse {
                line,
                message: format!("expected {d} values, found {}", v.len()),
            });
        }
        vectors.push(v);
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            message: format!("unexpected content after {m} generators"),
        });
    }
    Basis::new(vectors)
}

/// Writes the text format with 17 significant digits per coordinate, which
/// round-trips every `f64` exactly. `comments` are emitted as `# ` lines first.
pub fn format_basis(basis: &Basis, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{} {}", basis.rank(), basis.dim());
    for v in basis.vectors() {
        let row: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(v: &[&[f64]]) -> Basis {
        Basis::new(v.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn gso_of_identity() {
        let g = compute_gso(&Basis::identity(2)).unwrap();
        assert_eq!(g.ortho, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(g.mu, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn rank_deficiency_names_first_dependent_index() {
        let err = Basis::new(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![2.0, -3.0, 0.0],
        ])
        .unwrap_err();
        assert!(matches!(err, Error::RankDeficient { index: 2 }));
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(Basis::new(vec![]), Err(Error::BadShape)));
        assert!(matches!(
            Basis::new(vec![vec![1.0], vec![2.0]]),
            Err(Error::BadShape)
        ));
        assert!(matches!(
            Basis::new(vec![vec![1.0, 0.0], vec![1.0]]),
            Err(Error::DimensionMismatch { index: 1, .. })
        ));
        assert!(matches!(
            Basis::new(vec![vec![f64::NAN, 0.0], vec![0.0, 1.0]]),
            Err(Error::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn size_reduce_single_step() {
        let b = basis(&[&[1.0, 1.0], &[0.0, 2.0]]);
        assert!(close(compute_gso(&b).unwrap().mu[1][0], 1.0));
        let r = size_reduce(&b).unwrap();
        assert_eq!(r.vectors(), &[vec![1.0, 1.0], vec![-1.0, 1.0]]);
        assert_eq!(compute_gso(&r).unwrap().mu[1][0], 0.0);
        assert_eq!(r.transform().entries(), &[vec![1, -1], vec![0, 1]]);
    }

    #[test]
    fn size_reduce_fixed_points() {
        let id = Basis::identity(3);
        assert_eq!(size_reduce(&id).unwrap(), id);
        let b = basis(&[&[2.0, 0.0], &[1.0, 2.0]]);
        assert_eq!(size_reduce(&b).unwrap(), b);
    }

    #[test]
    fn project_block_cases() {
        let b = basis(&[&[2.0, 0.0], &[1.0, 2.0]]);
        let p = project_block(&b, 1..2).unwrap();
        assert_eq!(p.vectors(), &[vec![0.0, 2.0]]);
        assert_eq!(project_block(&b, 0..2).unwrap(), b);
        assert_eq!(project_block(&b, 0..1).unwrap().vectors(), &[vec![2.0, 0.0]]);
        let orth = basis(&[&[3.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 5.0]]);
        assert_eq!(project_block(&orth, 0..3).unwrap(), orth);
        assert!(project_block(&b, 1..1).is_err());
        assert!(project_block(&b, 0..3).is_err());
    }

    #[test]
    fn transform_determinant() {
        let t = UnimodularTransform::from_entries(vec![vec![2, 1], vec![1, 1]]).unwrap();
        assert_eq!(t.determinant(), 1);
        let t = UnimodularTransform::from_entries(vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(t.determinant(), -1);
        assert!(UnimodularTransform::from_entries(vec![vec![2, 0], vec![0, 1]]).is_err());
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_basis("2 2\n1 0\n0 1 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_basis("# c\n2 2\n1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse_basis("2 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn format_round_trips_bits() {
        let b = basis(&[&[0.1, 1.0 / 3.0], &[-2.5e-7, std::f64::consts::PI]]);
        let text = format_basis(&b, &["m=2 beta=2".into()]);
        assert!(text.starts_with("# m=2 beta=2\n2 2\n"));
        let back = parse_basis(&text).unwrap();
        assert_eq!(back, b);
    }
}
