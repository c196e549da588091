//! Complex MIMO channel model `y = B x + noise` and its real-valued lattice
//! embedding.
//!
//! Conventions used throughout the crate:
//! - `B` is `n_rx x n_tx`; transmit vectors have `n_tx` entries.
//! - The real image of a complex vector `v` is `[Re v; Im v]`, and the real
//!   image of `B` is `[[Re B, -Im B], [Im B, Re B]]`.
//! - Noise is circularly-symmetric complex Gaussian with variance `sigma^2`
//!   per complex dimension. SNR is `n_tx * E_s / sigma^2` per receive antenna.
//! - Square QAM symbols have per-axis levels `{-(L-1), ..., -1, 1, ..., L-1}`
//!   with `L = sqrt(q)`; the lattice coordinate of a level `s` is
//!   `u = (s + L - 1) / 2` in `0..L`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::Basis;

/// Independent random streams within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Symbols = 2,
    Noise = 3,
    Basis = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `stream` of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64, stream: Stream) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ trial) ^ stream as u64)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexChannel {
    n_rx: usize,
    n_tx: usize,
    /// Row-major `n_rx x n_tx`.
    entries: Vec<Complex64>,
}

impl ComplexChannel {
    pub fn new(n_rx: usize, n_tx: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n_rx == 0 || n_tx == 0 || entries.len() != n_rx * n_tx {
            return Err(Error::InvalidParameter(format!(
                "channel {n_rx}x{n_tx} needs {} entries, got {}",
                n_rx * n_tx,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("channel entries must be finite".into()));
        }
        Ok(Self {
            n_rx,
            n_tx,
            entries,
        })
    }

    /// Real-valued channel.
    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rx = rows.len();
        let n_tx = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_tx) {
            return Err(Error::InvalidParameter("ragged channel rows".into()));
        }
        Self::new(
            n_rx,
            n_tx,
            rows.iter().flatten().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n_tx + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `B x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n_rx)
            .map(|r| (0..self.n_tx).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &ComplexChannel) -> Result<ComplexChannel> {
        if self.n_tx != other.n_rx {
            return Err(Error::InvalidParameter("inner dimensions differ".into()));
        }
        let entries = (0..self.n_rx)
            .flat_map(|r| {
                (0..other.n_tx).map(move |c| (0..self.n_tx).map(|k| self.get(r, k) * other.get(k, c)).sum())
            })
            .collect();
        ComplexChannel::new(self.n_rx, other.n_tx, entries)
    }
}

/// I.i.d. circularly-symmetric complex Gaussian entries of unit variance.
pub fn sample_channel(n_rx: usize, n_tx: usize, seed: u64) -> Result<ComplexChannel> {
    let mut rng = rng(seed);
    let entries = (0..n_rx * n_tx)
        .map(|_| complex_gaussian(&mut rng, 1.0))
        .collect();
    ComplexChannel::new(n_rx, n_tx, entries)
}

/// Square QAM alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    side: usize,
    points: Vec<Complex64>,
    energy: f64,
}

impl Constellation {
    /// Square QAM of order 4, 16 or 64. Symbol index `k` has lattice
    /// coordinates `(k / L, k % L)` on the (real, imaginary) axes.
    pub fn qam(order: usize) -> Result<Self> {
        let side = match order {
            4 => 2,
            16 => 4,
            64 => 8,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "constellation order {order} not in {{4, 16, 64}}"
                )))
            }
        };
        let level = |u: usize| (2 * u) as f64 - (side - 1) as f64;
        let points: Vec<Complex64> = (0..order)
            .map(|k| Complex64::new(level(k / side), level(k % side)))
            .collect();
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        Ok(Self {
            order,
            side,
            points,
            energy,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Levels per real axis, `sqrt(q)`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Mean symbol energy `E_s`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Offset `L - 1` between symbol levels and doubled lattice coordinates.
    pub fn offset(&self) -> f64 {
        (self.side - 1) as f64
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn level(&self, u: i64) -> f64 {
        2.0 * u as f64 - self.offset()
    }

    fn axis_coordinate(&self, value: f64) -> Option<i64> {
        let u = (value + self.offset()) / 2.0;
        let r = u.round();
        (r == u && r >= 0.0 && r < self.side as f64).then_some(r as i64)
    }

    pub fn index_of(&self, symbol: Complex64) -> Option<usize> {
        let ur = self.axis_coordinate(symbol.re)?;
        let ui = self.axis_coordinate(symbol.im)?;
        Some(ur as usize * self.side + ui as usize)
    }

    /// Symbol index from real-layout lattice coordinates of one antenna.
    pub fn index_from_axes(&self, u_re: i64, u_im: i64) -> usize {
        u_re as usize * self.side + u_im as usize
    }

    /// Gray label of one axis coordinate.
    pub fn gray(&self, u: i64) -> u32 {
        let u = u as u32;
        u ^ (u >> 1)
    }

    pub fn bits_per_axis(&self) -> u32 {
        self.side.trailing_zeros()
    }
}

/// Uniformly random symbol indices.
pub fn sample_symbols(n_tx: usize, constellation: &Constellation, seed: u64) -> Vec<usize> {
    let mut rng = rng(seed);
    (0..n_tx)
        .map(|_| rng.random_range(0..constellation.order()))
        .collect()
}

/// Real image of a complex vector, `[Re v; Im v]`.
pub fn to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

/// Inverse of [`to_real`].
pub fn from_real(v: &[f64]) -> Vec<Complex64> {
    let n = v.len() / 2;
    (0..n).map(|i| Complex64::new(v[i], v[n + i])).collect()
}

/// Real `2 n_rx x 2 n_tx` image of a complex channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEmbedding {
    n_rx: usize,
    n_tx: usize,
    /// Row-major rows.
    matrix: Vec<Vec<f64>>,
}

impl RealEmbedding {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Column `j` of the real matrix.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.iter().map(|r| r[j]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..2 * self.n_tx).map(|j| self.column(j)).collect()
    }

    /// `H v` for a real vector `v` of length `2 n_tx`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Lattice basis generated by the columns.
    pub fn basis(&self) -> Result<Basis> {
        Basis::new(self.columns())
    }

    /// Real image of coordinate `i` of a complex vector: `(i, n + i)`.
    pub fn real_indices(n: usize, i: usize) -> (usize, usize) {
        (i, n + i)
    }
}

pub fn embed_real(channel: &ComplexChannel) -> RealEmbedding {
    let (nr, nt) = (channel.n_rx(), channel.n_tx());
    let mut matrix = vec![vec![0.0; 2 * nt]; 2 * nr];
    for r in 0..nr {
        for c in 0..nt {
            let z = channel.get(r, c);
            matrix[r][c] = z.re;
            matrix[r][nt + c] = -z.im;
            matrix[nr + r][c] = z.im;
            matrix[nr + r][nt + c] = z.re;
        }
    }
    RealEmbedding {
        n_rx: nr,
        n_tx: nt,
        matrix,
    }
}

/// Maps constellation points to real-layout lattice coordinates in `0..L`.
pub fn constellation_to_lattice(symbols: &[Complex64], constellation: &Constellation) -> Result<Vec<i64>> {
    let mut re = Vec::with_capacity(symbols.len());
    let mut im = Vec::with_capacity(symbols.len());
    for s in symbols {
        let k = constellation
            .index_of(*s)
            .ok_or_else(|| Error::OffConstellation(format!("{s}")))?;
        re.push((k / constellation.side()) as i64);
        im.push((k % constellation.side()) as i64);
    }
    re.extend(im);
    Ok(re)
}

/// Lattice coordinates mapped back to symbols after clipping into `0..L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedSymbols {
    pub symbols: Vec<Complex64>,
    /// Symbol index per transmit antenna.
    pub indices: Vec<usize>,
    /// Clipped coordinates (real layout), pre-clipping values preserved by the caller.
    pub clipped: Vec<bool>,
    pub clip_count: usize,
    /// In-range real-layout coordinates.
    pub coords: Vec<i64>,
}

pub fn lattice_to_constellation(ints: &[i64], constellation: &Constellation) -> ClippedSymbols {
    let top = constellation.side() as i64 - 1;
    let coords: Vec<i64> = ints.iter().map(|&u| u.clamp(0, top)).collect();
    let clipped: Vec<bool> = ints.iter().zip(&coords).map(|(a, b)| a != b).collect();
    let n = ints.len() / 2;
    let indices: Vec<usize> = (0..n)
        .map(|i| constellation.index_from_axes(coords[i], coords[n + i]))
        .collect();
    ClippedSymbols {
        symbols: indices.iter().map(|&k| constellation.point(k)).collect(),
        indices,
        clip_count: clipped.iter().filter(|&&c| c).count(),
        clipped,
        coords,
    }
}

/// Unit-variance complex Gaussian noise draws; `add_awgn` scales these by sigma.
pub fn unit_noise(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rng(seed);
    (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect()
}

/// Adds complex Gaussian noise with variance `sigma^2` per complex dimension.
pub fn add_awgn(y: &[Complex64], sigma: f64, seed: u64) -> Result<Vec<Complex64>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise sigma {sigma} is negative")));
    }
    if sigma == 0.0 {
        return Ok(y.to_vec());
    }
    Ok(y.iter()
        .zip(unit_noise(y.len(), seed))
        .map(|(a, n)| a + n * sigma)
        .collect())
}

/// Noise standard deviation for `snr_db = 10 log10(n_tx E_s / sigma^2)`;
/// infinite SNR gives 0.
pub fn snr_to_sigma(snr_db: f64, n_tx: usize, constellation: &Constellation) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let var = n_tx as f64 * constellation.energy() / 10f64.powf(snr_db / 10.0);
    var.sqrt()
}
