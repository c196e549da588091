//! ML, ZF, MMSE, SIC and lattice-reduction-aided SIC detection.
//!
//! Every detector works on the real embedding of the channel. Lattice-domain
//! detectors use the shifted model `t = (y + (L-1) H 1) / 2 = H u + noise/2`
//! with integer coordinates `u` in `0..L` per real axis. Quantization rounds
//! half away from zero; clipping into the constellation box happens last.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{compute_gso, dot, norm_sq, Basis, GsoDecomposition};
use crate::mimo::{embed_real, lattice_to_constellation, to_real, ComplexChannel, Constellation, RealEmbedding};
use crate::reduction::{reduce, ReductionMethod, ReductionParams};

/// Largest candidate count exhaustive ML will scan.
pub const ML_SEARCH_CAP: u128 = 1 << 20;
/// Relative slack on the sphere radius so ties with the incumbent are visited.
const SPHERE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub symbols: Vec<Complex64>,
    /// Symbol index per transmit antenna.
    pub indices: Vec<usize>,
    /// Real-layout integer coordinates before clipping.
    pub lattice_point: Vec<i64>,
    /// Per real coordinate: whether clipping moved it.
    pub clipped: Vec<bool>,
    /// `|y - B x|^2` for the detected symbols.
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    MlExhaustive,
    MlSphere,
    Zf,
    Mmse,
    Sic,
    LraSic(ReductionMethod),
}

impl DetectorKind {
    pub fn is_ml(&self) -> bool {
        matches!(self, Self::MlExhaustive | Self::MlSphere)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MlExhaustive => f.write_str("ml-exhaustive"),
            Self::MlSphere => f.write_str("ml"),
            Self::Zf => f.write_str("zf"),
            Self::Mmse => f.write_str("mmse"),
            Self::Sic => f.write_str("sic"),
            Self::LraSic(m) => write!(f, "lra-{m}"),
        }
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "ml-exhaustive" => Self::MlExhaustive,
            "ml" | "ml-sphere" => Self::MlSphere,
            "zf" => Self::Zf,
            "mmse" => Self::Mmse,
            "sic" => Self::Sic,
            other => match other.strip_prefix("lra-") {
                Some(m) => Self::LraSic(m.parse()?),
                None => {
                    return Err(Error::config(
                        "detectors",
                        format!("unknown detector `{s}` (ml, ml-exhaustive, zf, mmse, sic, lra-lll, lra-bkz, lra-kz)"),
                    ))
                }
            },
        })
    }
}

/// `q^n_tx`, saturating.
fn search_size(constellation: &Constellation, n_tx: usize) -> u128 {
    (0..n_tx).fold(1u128, |acc, _| acc.saturating_mul(constellation.order() as u128))
}

pub fn ml_admissible(constellation: &Constellation, n_tx: usize) -> bool {
    search_size(constellation, n_tx) <= ML_SEARCH_CAP
}

/// Coefficients of the least-squares solution of `sum_i u_i b_i ~ t`.
fn least_squares(gso: &GsoDecomposition, t: &[f64]) -> Vec<f64> {
    let m = gso.rank();
    let c: Vec<f64> = (0..m)
        .map(|j| dot(t, &gso.ortho[j]) / gso.norms_sq[j])
        .collect();
    let mut u = vec![0.0; m];
    for j in (0..m).rev() {
        u[j] = c[j] - (j + 1..m).map(|i| gso.mu[i][j] * u[i]).sum::<f64>();
    }
    u
}

/// Babai's nearest-plane algorithm: layer by layer from the last generator,
/// round the coefficient of the residual and cancel that layer.
fn nearest_plane(basis: &Basis, gso: &GsoDecomposition, t: &[f64]) -> Vec<i64> {
    let m = basis.rank();
    let mut residual = t.to_vec();
    let mut z = vec![0i64; m];
    for k in (0..m).rev() {
        let c = dot(&residual, &gso.ortho[k]) / gso.norms_sq[k];
        z[k] = c.round() as i64;
        let zf = z[k] as f64;
        for (r, b) in residual.iter_mut().zip(basis.vector(k)) {
            *r -= zf * b;
        }
    }
    z
}

/// A channel prepared for repeated detection with one detector.
#[derive(Debug, Clone)]
pub struct Detector {
    kind: DetectorKind,
    constellation: Constellation,
    embedding: RealEmbedding,
    basis: Basis,
    gso: GsoDecomposition,
    reduced: Option<(Basis, GsoDecomposition)>,
}

impl Detector {
    pub fn new(
        channel: &ComplexChannel,
        constellation: &Constellation,
        kind: DetectorKind,
        params: &ReductionParams,
    ) -> Result<Self> {
        if kind == DetectorKind::MlExhaustive && !ml_admissible(constellation, channel.n_tx()) {
            return Err(Error::SearchGuard {
                candidates: search_size(constellation, channel.n_tx()),
                cap: ML_SEARCH_CAP,
            });
        }
        let embedding = embed_real(channel);
        let basis = embedding.basis()?;
        let gso = compute_gso(&basis)?;
        let reduced = match kind {
            DetectorKind::LraSic(method) => {
                let r = reduce(&basis, method, params)?.basis;
                let g = compute_gso(&r)?;
                Some((r, g))
            }
            _ => None,
        };
        Ok(Self {
            kind,
            constellation: constellation.clone(),
            embedding,
            basis,
            gso,
            reduced,
        })
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    /// Reduced channel basis (with its transform), for LRA detectors.
    pub fn reduced_basis(&self) -> Option<&Basis> {
        self.reduced.as_ref().map(|(b, _)| b)
    }

    /// `sigma` is the noise standard deviation; only MMSE uses it.
    pub fn detect(&self, y: &[Complex64], sigma: f64) -> Result<DetectionResult> {
        if y.len() != self.embedding.n_rx() {
            return Err(Error::InvalidParameter(format!(
                "received vector has {} entries, channel has {} receive antennas",
                y.len(),
                self.embedding.n_rx()
            )));
        }
        let yr = to_real(y);
        Ok(match self.kind {
            DetectorKind::MlExhaustive => self.ml_exhaustive(&yr),
            DetectorKind::MlSphere => self.ml_sphere(&yr),
            DetectorKind::Zf => self.linear(&yr, 0.0),
            DetectorKind::Mmse => {
                if !(sigma >= 0.0) {
                    return Err(Error::InvalidParameter(format!("noise sigma {sigma} is negative")));
                }
                self.linear(&yr, sigma * sigma / self.constellation.energy())
            }
            DetectorKind::Sic => self.finish(&yr, nearest_plane(&self.basis, &self.gso, &self.shifted(&yr))),
            DetectorKind::LraSic(_) => {
                let (rb, rg) = self.reduced.as_ref().expect("prepared in new");
                let z = nearest_plane(rb, rg, &self.shifted(&yr));
                self.finish(&yr, rb.transform().apply(&z))
            }
        })
    }

    /// Lattice-domain target `(y + (L-1) H 1) / 2`.
    fn shifted(&self, yr: &[f64]) -> Vec<f64> {
        let off = self.constellation.offset();
        let ones = vec![off; self.basis.rank()];
        self.embedding
            .apply(&ones)
            .iter()
            .zip(yr)
            .map(|(h, y)| (y + h) / 2.0)
            .collect()
    }

    /// `|y - H s(u)|^2` for in-range coordinates `u`.
    pub(crate) fn objective(&self, yr: &[f64], coords: &[i64]) -> f64 {
        let s: Vec<f64> = coords.iter().map(|&u| self.constellation.level(u)).collect();
        let hs = self.embedding.apply(&s);
        yr.iter().zip(&hs).map(|(a, b)| (a - b).powi(2)).sum()
    }

    fn finish(&self, yr: &[f64], lattice_point: Vec<i64>) -> DetectionResult {
        let mapped = lattice_to_constellation(&lattice_point, &self.constellation);
        DetectionResult {
            objective: self.objective(yr, &mapped.coords),
            symbols: mapped.symbols,
            indices: mapped.indices,
            clipped: mapped.clipped,
            lattice_point,
        }
    }

    /// ZF (`reg = 0`) or MMSE (`reg = sigma^2 / E_s`) estimate in the symbol
    /// domain, then quantized in lattice coordinates.
    fn linear(&self, yr: &[f64], reg: f64) -> DetectionResult {
        let estimate = if reg == 0.0 {
            least_squares(&self.gso, yr)
        } else {
            // ridge regression as least squares on [H; sqrt(reg) I]
            let m = self.basis.rank();
            let root = reg.sqrt();
            let columns: Vec<Vec<f64>> = (0..m)
                .map(|j| {
                    let mut c = self.basis.vector(j).to_vec();
                    c.extend((0..m).map(|i| if i == j { root } else { 0.0 }));
                    c
                })
                .collect();
            let gso = compute_gso(&Basis::new(columns).expect("regularized columns are independent"))
                .expect("regularized columns are independent");
            let mut target = yr.to_vec();
            target.extend(std::iter::repeat_n(0.0, m));
            least_squares(&gso, &target)
        };
        let off = self.constellation.offset();
        let point = estimate
            .iter()
            .map(|s| ((s + off) / 2.0).round() as i64)
            .collect();
        self.finish(yr, point)
    }

    fn indices_of(&self, coords: &[i64]) -> Vec<usize> {
        let n = coords.len() / 2;
        (0..n)
            .map(|i| self.constellation.index_from_axes(coords[i], coords[n + i]))
            .collect()
    }

    fn ml_result(&self, coords: Vec<i64>, objective: f64) -> DetectionResult {
        let indices = self.indices_of(&coords);
        DetectionResult {
            symbols: indices.iter().map(|&k| self.constellation.point(k)).collect(),
            indices,
            clipped: vec![false; coords.len()],
            lattice_point: coords,
            objective,
        }
    }

    /// Scans every codeword in lexicographic order of symbol indices; the
    /// first strict minimum wins.
    fn ml_exhaustive(&self, yr: &[f64]) -> DetectionResult {
        let n = self.embedding.n_tx();
        let q = self.constellation.order();
        let side = self.constellation.side();
        let mut idx = vec![0usize; n];
        let mut best: Option<(f64, Vec<i64>)> = None;
        loop {
            let mut coords = vec![0i64; 2 * n];
            for (i, &k) in idx.iter().enumerate() {
                coords[i] = (k / side) as i64;
                coords[n + i] = (k % side) as i64;
            }
            let f = self.objective(yr, &coords);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, coords));
            }
            // odometer, last antenna fastest
            let mut pos = n;
            loop {
                if pos == 0 {
                    let (f, c) = best.expect("at least one codeword");
                    return self.ml_result(c, f);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < q {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// Schnorr–Euchner sphere decoding over the constellation box, seeded
    /// with the clipped nearest-plane point. Candidates are ranked by the
    /// same objective and tie rule as the exhaustive search.
    fn ml_sphere(&self, yr: &[f64]) -> DetectionResult {
        let t = self.shifted(yr);
        let babai = lattice_to_constellation(&nearest_plane(&self.basis, &self.gso, &t), &self.constellation);
        let mut search = Sphere {
            det: self,
            yr,
            m: self.basis.rank(),
            top: self.constellation.side() as i64 - 1,
            centers: (0..self.basis.rank())
                .map(|j| dot(&t, &self.gso.ortho[j]) / self.gso.norms_sq[j])
                .collect(),
            // component of t outside the channel's column space
            floor: {
                let proj: f64 = (0..self.basis.rank())
                    .map(|j| dot(&t, &self.gso.ortho[j]).powi(2) / self.gso.norms_sq[j])
                    .sum();
                (norm_sq(&t) - proj).max(0.0)
            },
            u: vec![0; self.basis.rank()],
            best_f: self.objective(yr, &babai.coords),
            best_idx: babai.indices.clone(),
            best_u: babai.coords.clone(),
            radius: 0.0,
        };
        search.update_radius();
        search.descend(search.m - 1, 0.0);
        let (f, u) = (search.best_f, search.best_u);
        self.ml_result(u, f)
    }
}

struct Sphere<'a> {
    det: &'a Detector,
    yr: &'a [f64],
    m: usize,
    top: i64,
    centers: Vec<f64>,
    floor: f64,
    u: Vec<i64>,
    best_f: f64,
    best_idx: Vec<usize>,
    best_u: Vec<i64>,
    radius: f64,
}

impl Sphere<'_> {
    fn update_radius(&mut self) {
        // objective = 4 |t - H u|^2 = 4 (floor + partial distance)
        let quarter = self.best_f / 4.0;
        self.radius = (quarter - self.floor) + SPHERE_SLACK * quarter + f64::MIN_POSITIVE;
    }

    fn descend(&mut self, level: usize, partial: f64) {
        let gso = &self.det.gso;
        let center = self.centers[level]
            - (level + 1..self.m)
                .map(|i| gso.mu[i][level] * self.u[i] as f64)
                .sum::<f64>();
        let weight = gso.norms_sq[level];
        let nearest = (center.round() as i64).clamp(0, self.top);
        let mut up = nearest;
        let mut down = nearest - 1;
        let dist = |v: i64| partial + (v as f64 - center).powi(2) * weight;
        loop {
            let du = if up <= self.top { dist(up) } else { f64::INFINITY };
            let dd = if down >= 0 { dist(down) } else { f64::INFINITY };
            let (value, d) = if du <= dd { (up, du) } else { (down, dd) };
            if !(d <= self.radius) {
                break;
            }
            if du <= dd {
                up += 1;
            } else {
                down -= 1;
            }
            self.u[level] = value;
            if level == 0 {
                let f = self.det.objective(self.yr, &self.u);
                if f <= self.best_f {
                    let idx = self.det.indices_of(&self.u);
                    if f < self.best_f || idx < self.best_idx {
                        self.best_f = f;
                        self.best_idx = idx;
                        self.best_u = self.u.clone();
                        self.update_radius();
                    }
                }
            } else {
                self.descend(level - 1, d);
            }
        }
    }
}

fn run(
    y: &[Complex64],
    channel: &ComplexChannel,
    constellation: &Constellation,
    kind: DetectorKind,
    sigma: f64,
) -> Result<DetectionResult> {
    Detector::new(channel, constellation, kind, &ReductionParams::default())?.detect(y, sigma)
}

/// Exhaustive maximum-likelihood detection (guarded by [`ML_SEARCH_CAP`]).
pub fn detect_ml_exhaustive(y: &[Complex64], channel: &ComplexChannel, constellation: &Constellation) -> Result<DetectionResult> {
    run(y, channel, constellation, DetectorKind::MlExhaustive, 0.0)
}

/// Maximum-likelihood detection by sphere decoding; same output as
/// [`detect_ml_exhaustive`].
pub fn detect_ml_sphere(y: &[Complex64], channel: &ComplexChannel, constellation: &Constellation) -> Result<DetectionResult> {
    run(y, channel, constellation, DetectorKind::MlSphere, 0.0)
}

pub fn detect_zf(y: &[Complex64], channel: &ComplexChannel, constellation: &Constellation) -> Result<DetectionResult> {
    run(y, channel, constellation, DetectorKind::Zf, 0.0)
}

/// MMSE with regularizer `sigma^2 / E_s`; `sigma = 0` is exactly ZF.
pub fn detect_mmse(y: &[Complex64], channel: &ComplexChannel, constellation: &Constellation, sigma: f64) -> Result<DetectionResult> {
    run(y, channel, constellation, DetectorKind::Mmse, sigma)
}

/// Successive interference cancellation, i.e. nearest-plane on the channel
/// basis followed by clipping.
pub fn detect_sic(y: &[Complex64], channel: &ComplexChannel, constellation: &Constellation) -> Result<DetectionResult> {
    run(y, channel, constellation, DetectorKind::Sic, 0.0)
}

/// SIC on the reduced channel `H T`, mapped back through `T` and clipped.
pub fn detect_lra_sic(
    y: &[Complex64],
    channel: &ComplexChannel,
    constellation: &Constellation,
    params: &ReductionParams,
    method: ReductionMethod,
) -> Result<DetectionResult> {
    Detector::new(channel, constellation, DetectorKind::LraSic(method), params)?.detect(y, 0.0)
}
