use std::fmt::Write as _;

use rayon::prelude::*;

use super::Kernel;
use crate::error::{GopError, Result};
use crate::phasespace::TorusGrid;
use crate::scalar::{cabs, Complex, Real};
use crate::spectral::Spectral;

/// Default window width (cells) of the windowed-Fourier estimate.
pub const DEFAULT_WINDOW: usize = 8;
/// Default relative-energy threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.1;
/// Default number of angular bins for the direction pair `(p, p')`.
pub const DEFAULT_BINS: usize = 16;

const BITSET_MAGIC: &[u8; 8] = b"GOPWF001";

/// Conical set in `S*(T¹ × T¹)` in the `WF'` convention: a cell is a block of
/// `block × block` base points times an angular bin of the direction of
/// `(p, p')`, where `(x, p, x', −p') ∈ WF(K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WavefrontSet<T> {
    pub n_points: usize,
    pub block: usize,
    pub n_bins: usize,
    pub threshold: T,
    pub mask: Vec<bool>,
    /// High-band energy per cell (zero for predicted sets).
    pub energy: Vec<T>,
}

impl<T: Real> WavefrontSet<T> {
    pub fn empty(n_points: usize, block: usize, n_bins: usize) -> Self {
        let nb = n_points / block;
        Self {
            n_points,
            block,
            n_bins,
            threshold: T::zero(),
            mask: vec![false; nb * nb * n_bins],
            energy: vec![T::zero(); nb * nb * n_bins],
        }
    }

    pub fn blocks(&self) -> usize {
        self.n_points / self.block
    }

    pub fn index(&self, i: usize, j: usize, bin: usize) -> usize {
        (i * self.blocks() + j) * self.n_bins + bin
    }

    pub fn split(&self, idx: usize) -> (usize, usize, usize) {
        let bin = idx % self.n_bins;
        let ij = idx / self.n_bins;
        (ij / self.blocks(), ij % self.blocks(), bin)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Angular bin of the direction `(p, p')`.
    pub fn bin_of(&self, p: T, pp: T) -> usize {
        angle_bin(pp.atan2(p), self.n_bins)
    }

    /// Marks the cell containing base point `(x, x')` and direction `(p, p')`.
    pub fn mark_point(&mut self, x: T, xp: T, p: T, pp: T) {
        let h = T::two_pi() / T::from_index(self.n_points);
        let cell = |v: T| {
            let j = (crate::scalar::wrap_2pi(v) / h + T::lit(0.5))
                .floor()
                .as_f64() as usize
                % self.n_points;
            j / self.block
        };
        let idx = self.index(cell(x), cell(xp), self.bin_of(p, pp));
        self.mask[idx] = true;
    }

    /// Dilation by `slack` cells in both block coordinates and the angle.
    pub fn dilate(&self, slack: usize) -> Self {
        let nb = self.blocks() as i64;
        let nbins = self.n_bins as i64;
        let s = slack as i64;
        let mut out = self.clone();
        out.mask.iter_mut().for_each(|m| *m = false);
        for (idx, &m) in self.mask.iter().enumerate() {
            if !m {
                continue;
            }
            let (i, j, b) = self.split(idx);
            for di in -s..=s {
                for dj in -s..=s {
                    for db in -s..=s {
                        let ii = (i as i64 + di).rem_euclid(nb) as usize;
                        let jj = (j as i64 + dj).rem_euclid(nb) as usize;
                        let bb = (b as i64 + db).rem_euclid(nbins) as usize;
                        let k = out.index(ii, jj, bb);
                        out.mask[k] = true;
                    }
                }
            }
        }
        out
    }

    /// CSV with one row per cell: block indices, bin, cell-centre
    /// coordinates, bin angle, flag and energy.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x_block,xp_block,bin,x,xp,angle,marked,energy\n");
        let h = std::f64::consts::TAU / self.n_points as f64;
        let c = |i: usize| (i * self.block) as f64 * h + 0.5 * (self.block as f64 - 1.0) * h;
        for idx in 0..self.mask.len() {
            let (i, j, b) = self.split(idx);
            let ang = b as f64 * std::f64::consts::TAU / self.n_bins as f64;
            let _ = writeln!(
                s,
                "{i},{j},{b},{:.6},{:.6},{:.6},{},{:e}",
                c(i),
                c(j),
                ang,
                u8::from(self.mask[idx]),
                self.energy[idx].as_f64()
            );
        }
        s
    }

    /// Compact bitset: magic, `u32` n_points, `u32` block, `u32` bins, then
    /// the mask packed LSB-first.
    pub fn to_bitset(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.mask.len() / 8 + 1);
        out.extend_from_slice(BITSET_MAGIC);
        out.extend_from_slice(&(self.n_points as u32).to_le_bytes());
        out.extend_from_slice(&(self.block as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_bins as u32).to_le_bytes());
        let mut byte = 0u8;
        for (k, &m) in self.mask.iter().enumerate() {
            if m {
                byte |= 1 << (k % 8);
            }
            if k % 8 == 7 {
                out.push(byte);
                byte = 0;
            }
        }
        if self.mask.len() % 8 != 0 {
            out.push(byte);
        }
        out
    }

    pub fn from_bitset(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..8] != BITSET_MAGIC {
            return Err(GopError::Format("bad wavefront bitset header".into()));
        }
        let rd =
            |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
        let (n, block, bins) = (rd(8), rd(12), rd(16));
        if block == 0 || n % block != 0 {
            return Err(GopError::Format(
                "inconsistent wavefront bitset geometry".into(),
            ));
        }
        let mut set = Self::empty(n, block, bins);
        if bytes.len() < 20 + set.mask.len().div_ceil(8) {
            return Err(GopError::Format("truncated wavefront bitset".into()));
        }
        for k in 0..set.mask.len() {
            set.mask[k] = bytes[20 + k / 8] & (1 << (k % 8)) != 0;
        }
        Ok(set)
    }
}

pub(crate) fn angle_bin<T: Real>(theta: T, n_bins: usize) -> usize {
    let u = crate::scalar::wrap_2pi(theta) / T::two_pi() * T::from_index(n_bins) + T::lit(0.5);
    (u.floor().as_f64() as usize) % n_bins
}

/// Windowed-Fourier surrogate of the wave front set of a `T¹ × T¹` kernel.
///
/// Base points are grouped into `window × window` blocks. Around each block
/// centre a `4·window` patch is multiplied by a Gaussian of standard
/// deviation `window/2` cells and Fourier transformed; a cell is marked when
/// the energy at radius `≥ patch/4` in its angular sector is at least
/// `threshold` times the largest total block energy of the kernel.
pub fn wavefront_estimate<T: Real>(
    kernel: &Kernel<T>,
    window: usize,
    threshold: T,
) -> Result<WavefrontSet<T>> {
    wavefront_estimate_bins(kernel, window, threshold, DEFAULT_BINS)
}

pub fn wavefront_estimate_bins<T: Real>(
    kernel: &Kernel<T>,
    window: usize,
    threshold: T,
    n_bins: usize,
) -> Result<WavefrontSet<T>> {
    let grid = kernel.grid;
    if grid.dim() != 1 {
        return Err(GopError::Unsupported(
            "windowed wave front estimates are implemented on T¹ × T¹".into(),
        ));
    }
    if window < 4 || !window.is_power_of_two() {
        return Err(GopError::Usage(
            "window width must be a power of two ≥ 4".into(),
        ));
    }
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(GopError::Usage("threshold must lie in (0, 1)".into()));
    }
    let n = grid.n_points();
    if n < window {
        return Err(GopError::Usage("grid smaller than the window".into()));
    }
    let nb = n / window;
    let patch = 4 * window;
    let pgrid = TorusGrid::new(2, patch)?;
    let sp = Spectral::<T>::new(pgrid);
    let sigma = T::from_index(window) * T::lit(0.5);
    let half = patch as i64 / 2;
    let gauss: Vec<T> = (0..patch)
        .map(|a| {
            let d = T::from_int(a as i64 - half);
            (-(d * d) / (T::lit(2.0) * sigma * sigma)).exp()
        })
        .collect();
    // sector and band of each patch frequency
    let sectors: Vec<Option<usize>> = (0..patch * patch)
        .map(|f| {
            let xi = pgrid.frequency(f);
            let r = ((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt();
            if r >= patch as f64 / 4.0 {
                Some(angle_bin(
                    T::from_int(-xi[1]).atan2(T::from_int(xi[0])),
                    n_bins,
                ))
            } else {
                None
            }
        })
        .collect();
    let centre = window as i64 / 2;
    let blocks: Vec<(T, Vec<T>)> = (0..nb * nb)
        .into_par_iter()
        .map(|ij| {
            let (bi, bj) = (ij / nb, ij % nb);
            let (cx, cy) = (
                bi as i64 * window as i64 + centre,
                bj as i64 * window as i64 + centre,
            );
            let mut buf = vec![Complex::new(T::zero(), T::zero()); patch * patch];
            for a in 0..patch {
                let r = (cx + a as i64 - half).rem_euclid(n as i64) as usize;
                for b in 0..patch {
                    let c = (cy + b as i64 - half).rem_euclid(n as i64) as usize;
                    buf[a * patch + b] = kernel.values[(r, c)] * (gauss[a] * gauss[b]);
                }
            }
            sp.forward(&mut buf);
            let mut total = T::zero();
            let mut sector = vec![T::zero(); n_bins];
            for (f, z) in buf.iter().enumerate() {
                let e = cabs(*z);
                let e = e * e;
                total += e;
                if let Some(s) = sectors[f] {
                    sector[s] += e;
                }
            }
            (total, sector)
        })
        .collect();
    let emax = blocks.iter().map(|b| b.0).fold(T::zero(), |a, b| a.max(b));
    let mut set = WavefrontSet::empty(n, window, n_bins);
    set.threshold = threshold;
    if emax == T::zero() {
        return Ok(set);
    }
    for (ij, (_, sector)) in blocks.iter().enumerate() {
        for (bin, e) in sector.iter().enumerate() {
            let idx = ij * n_bins + bin;
            set.energy[idx] = *e / emax;
            set.mask[idx] = *e >= threshold * emax;
        }
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContainmentReport<T> {
    pub outside_mass_fraction: T,
    pub marked: usize,
    pub pass: bool,
}

/// Maximal outside-mass fraction accepted by [`containment_report`].
pub const CONTAINMENT_TOL: f64 = 0.05;

/// Fraction of the estimated (marked) energy lying outside the predicted set
/// dilated by `slack` cells; passes iff at most 5%. An empty estimate is
/// contained in anything.
pub fn containment_report<T: Real>(
    est: &WavefrontSet<T>,
    pred: &WavefrontSet<T>,
    slack: usize,
) -> Result<ContainmentReport<T>> {
    if est.n_points != pred.n_points || est.block != pred.block || est.n_bins != pred.n_bins {
        return Err(GopError::GridMismatch(
            "estimated and predicted wave front sets differ in geometry".into(),
        ));
    }
    let dil = pred.dilate(slack);
    let (mut inside, mut outside) = (T::zero(), T::zero());
    for (k, &m) in est.mask.iter().enumerate() {
        if m {
            if dil.mask[k] {
                inside += est.energy[k];
            } else {
                outside += est.energy[k];
            }
        }
    }
    let total = inside + outside;
    let frac = if total > T::zero() {
        outside / total
    } else {
        T::zero()
    };
    Ok(ContainmentReport {
        outside_mass_fraction: frac,
        marked: est.count(),
        pass: frac <= T::lit(CONTAINMENT_TOL),
    })
}

/// Share of the fine set's marked energy whose coarse cell (blocks halved) is
/// marked in the coarse set dilated by one cell.
pub fn resolution_agreement<T: Real>(
    coarse: &WavefrontSet<T>,
    fine: &WavefrontSet<T>,
) -> Result<T> {
    if fine.n_points != 2 * coarse.n_points
        || fine.block != coarse.block
        || fine.n_bins != coarse.n_bins
    {
        return Err(GopError::GridMismatch(
            "fine set must be on the doubled grid with equal block and bins".into(),
        ));
    }
    let dil = coarse.dilate(1);
    let (mut hit, mut total) = (T::zero(), T::zero());
    for (k, &m) in fine.mask.iter().enumerate() {
        if !m {
            continue;
        }
        let (i, j, b) = fine.split(k);
        total += fine.energy[k];
        if dil.mask[dil.index(i / 2, j / 2, b)] {
            hit += fine.energy[k];
        }
    }
    Ok(if total > T::zero() {
        hit / total
    } else {
        T::one()
    })
}
