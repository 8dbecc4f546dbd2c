//! One-ring spatial covariance, correlated CIR sampling, DFT submatrices and
//! eigen-structure utilities.
//!
//! DFT convention used crate-wide: `F[r, l] = exp(-j·2π·r·l / N)`, unnormalized.

use std::f64::consts::{FRAC_PI_3, PI};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_eigen, max_hermitian_defect, pinv, psd_sqrt_from};
use crate::{CMatrix, Error, Result, C64};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const RANK_THRESHOLD: f64 = 1e-6;
/// Negative eigenvalues of at most this relative size are clipped during PSD repair.
pub const PSD_REPAIR_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneRingParams {
    /// Mean angle of arrival, radians.
    pub theta: f64,
    /// Angle spread, radians.
    pub delta: f64,
    /// Antenna spacing in wavelengths.
    pub spacing: f64,
    pub n_antennas: usize,
}

impl OneRingParams {
    pub fn new(theta: f64, delta: f64, spacing: f64, n_antennas: usize) -> Result<Self> {
        let p = Self { theta, delta, spacing, n_antennas };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("angle spread must be > 0, got {}", self.delta)));
        }
        if self.n_antennas == 0 {
            return Err(Error::InvalidParameter("n_antennas must be >= 1".into()));
        }
        if !(self.theta.abs() <= FRAC_PI_3 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "mean AoA {} outside [-pi/3, pi/3]",
                self.theta
            )));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("antenna spacing must be > 0, got {}", self.spacing)));
        }
        Ok(())
    }

    /// Arc `[D sin(θ-Δ), D sin(θ+Δ)]` of normalized spatial frequencies.
    pub fn spatial_arc(&self) -> (f64, f64) {
        let a = self.spacing * (self.theta - self.delta).sin();
        let b = self.spacing * (self.theta + self.delta).sin();
        (a.min(b), a.max(b))
    }
}

#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub entries: CMatrix,
    /// Count of eigenvalues at or above `RANK_THRESHOLD · λ_max`.
    pub rank: usize,
    /// Eigenvalues (descending) and eigenvectors, shared between clones.
    eigen: Arc<(Vec<f64>, CMatrix)>,
}

impl CovarianceMatrix {
    /// Wraps a Hermitian matrix, computing its effective rank.
    pub fn from_entries(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension(format!(
                "covariance must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let scale = entries.norm().max(1.0);
        if max_hermitian_defect(&entries) > 1e-10 * scale {
            return Err(Error::InvalidParameter("covariance is not Hermitian".into()));
        }
        let (values, vectors) = hermitian_eigen(&entries);
        let max = values.first().copied().unwrap_or(0.0);
        let rank = values.iter().filter(|&&v| max > 0.0 && v >= RANK_THRESHOLD * max).count();
        Ok(Self { entries, rank, eigen: Arc::new((values, vectors)) })
    }

    /// Eigenvalues in descending order with matching eigenvector columns.
    pub fn eigenpairs(&self) -> (&[f64], &CMatrix) {
        (&self.eigen.0, &self.eigen.1)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }
}

#[derive(Debug, Clone)]
pub struct EigenStructure {
    /// Orthonormal columns, one per retained eigenvalue.
    pub vectors: CMatrix,
    /// Retained eigenvalues, descending.
    pub values: Vec<f64>,
    /// Reciprocals of `values`.
    pub pseudo_values: Vec<f64>,
}

impl EigenStructure {
    fn from_parts(values: Vec<f64>, vectors: CMatrix, keep: usize) -> Self {
        let values: Vec<f64> = values.into_iter().take(keep).collect();
        let vectors = vectors.columns(0, keep).into_owned();
        let pseudo_values = values.iter().map(|v| 1.0 / v).collect();
        Self { vectors, values, pseudo_values }
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `U · diag(λ⁻¹) · Uᴴ`.
    pub fn pseudo_inverse(&self) -> CMatrix {
        self.weighted(&self.pseudo_values)
    }

    /// `U · diag(λ) · Uᴴ`.
    pub fn reconstruct(&self) -> CMatrix {
        self.weighted(&self.values)
    }

    fn weighted(&self, w: &[f64]) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (c, &s) in w.iter().enumerate() {
            scaled.column_mut(c).scale_mut(s);
        }
        scaled * self.vectors.adjoint()
    }
}

/// Keeps eigenvalues `>= rel_threshold · λ_max`.
pub fn eigendecompose(cov: &CMatrix, rel_threshold: f64) -> EigenStructure {
    let (values, vectors) = hermitian_eigen(cov);
    let max = values.first().copied().unwrap_or(0.0);
    let keep = if max > 0.0 {
        values.iter().take_while(|&&v| v >= rel_threshold * max && v > 0.0).count()
    } else {
        0
    };
    EigenStructure::from_parts(values, vectors, keep)
}

/// Keeps the `k` dominant eigenpairs (clamped to the positive ones).
pub fn eigendecompose_rank(cov: &CMatrix, k: usize) -> EigenStructure {
    let (values, vectors) = hermitian_eigen(cov);
    let keep = values.iter().take(k).take_while(|&&v| v > 0.0).count();
    EigenStructure::from_parts(values, vectors, keep)
}

/// Vector-valued adaptive Simpson step; refines until every component meets `tol`.
#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64, &mut [C64])>(
    f: &F,
    a: f64,
    b: f64,
    fa: &[C64],
    fm: &[C64],
    fb: &[C64],
    whole: &[C64],
    tol: f64,
    depth: u32,
    acc: &mut [C64],
) {
    let dim = fa.len();
    let m = 0.5 * (a + b);
    // flm | frm | left | right
    let mut buf = vec![C64::new(0.0, 0.0); 4 * dim];
    let (flm, rest) = buf.split_at_mut(dim);
    let (frm, rest) = rest.split_at_mut(dim);
    let (left, right) = rest.split_at_mut(dim);
    f(0.5 * (a + m), flm);
    f(0.5 * (m + b), frm);
    let (wl, wr) = ((m - a) / 6.0, (b - m) / 6.0);
    let mut err_sq = 0.0f64;
    for i in 0..dim {
        left[i] = (fa[i] + flm[i] * 4.0 + fm[i]) * wl;
        right[i] = (fm[i] + frm[i] * 4.0 + fb[i]) * wr;
        err_sq = err_sq.max((left[i] + right[i] - whole[i]).norm_sqr());
    }
    if depth == 0 || err_sq <= (15.0 * tol).powi(2) {
        for i in 0..dim {
            let lr = left[i] + right[i];
            acc[i] += lr + (lr - whole[i]) / 15.0;
        }
        return;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, acc);
    simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, acc);
}

/// Adaptive Simpson integral of `dim` complex functions over `[a, b]`, split
/// into `panels` equal pieces first. `f(x, out)` writes all components at `x`;
/// the error target holds for every component.
fn adaptive_simpson<F: Fn(f64, &mut [C64])>(f: F, dim: usize, a: f64, b: f64, tol: f64, panels: usize) -> Vec<C64> {
    let h = (b - a) / panels as f64;
    let mut total = vec![C64::new(0.0, 0.0); dim];
    let zero = C64::new(0.0, 0.0);
    let (mut flo, mut fmid, mut fhi) = (vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    f(a, &mut fhi);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let hi = if p + 1 == panels { b } else { lo + h };
        std::mem::swap(&mut flo, &mut fhi);
        f(0.5 * (lo + hi), &mut fmid);
        f(hi, &mut fhi);
        let whole: Vec<C64> = (0..dim).map(|i| (flo[i] + fmid[i] * 4.0 + fhi[i]) * ((hi - lo) / 6.0)).collect();
        simpson_step(&f, lo, hi, &flo, &fmid, &fhi, &whole, tol / panels as f64, 48, &mut total);
    }
    total
}

/// Lags integrated together on one adaptive mesh.
const LAG_BLOCK: usize = 16;

/// Writes `exp(−j2πD·d·sin α)` for `d = first, first+1, …` into `out`.
fn lag_phasors(spacing: f64, alpha: f64, first: usize, out: &mut [C64]) {
    let w = -2.0 * PI * spacing * alpha.sin();
    let step = C64::from_polar(1.0, w);
    let mut z = C64::from_polar(1.0, w * first as f64);
    for o in out.iter_mut() {
        *o = z;
        z *= step;
    }
}

/// First column `r[d] = R[d, 0]` of the Toeplitz one-ring covariance.
fn one_ring_lags(params: &OneRingParams) -> Vec<C64> {
    let (lo, hi) = (params.theta - params.delta, params.theta + params.delta);
    let n = params.n_antennas;
    let mut lags = Vec::with_capacity(n);
    for start in (0..n).step_by(LAG_BLOCK) {
        let end = (start + LAG_BLOCK).min(n);
        // Roughly four panels per oscillation of the fastest lag in the block.
        let d_max = (end - 1) as f64;
        let cycles = params.spacing * d_max * ((hi.sin() - lo.sin()).abs() + 2.0 * params.delta);
        let panels = (4.0 * cycles).ceil().max(4.0) as usize;
        // Absolute error target on the averaged value, so scale by the interval length.
        let integrals = adaptive_simpson(
            |a, out: &mut [C64]| lag_phasors(params.spacing, a, start, out),
            end - start,
            lo,
            hi,
            QUAD_TOL * 2.0 * params.delta,
            panels,
        );
        lags.extend(integrals.into_iter().map(|z| z / (2.0 * params.delta)));
    }
    lags[0] = C64::new(1.0, 0.0);
    lags
}

/// Spatial covariance of the one-ring model for a ULA.
pub fn one_ring_covariance(params: &OneRingParams) -> Result<CovarianceMatrix> {
    params.validate()?;
    let lags = one_ring_lags(params);
    let n = params.n_antennas;
    let entries = CMatrix::from_fn(n, n, |m, k| if m >= k { lags[m - k] } else { lags[k - m].conj() });
    CovarianceMatrix::from_entries(entries)
}

/// Spatial-frequency bins `n ∈ [0, N_T)` whose frequency `n / N_T` falls on
/// the one-ring arc modulo 1.
pub fn support_bins(params: &OneRingParams) -> Vec<usize> {
    let (lo, hi) = params.spatial_arc();
    let nt = params.n_antennas;
    (0..nt)
        .filter(|&n| {
            let x = n as f64 / nt as f64;
            let first = (lo - x).ceil();
            first + x <= hi + 1e-12
        })
        .collect()
}

/// Asymptotic rank of the one-ring covariance: the number of support bins.
pub fn support_rank(params: &OneRingParams) -> usize {
    support_bins(params).len()
}

/// Dominant eigenpairs of `cov`, as many as the one-ring support has bins.
pub fn support_eigen(cov: &CovarianceMatrix, params: &OneRingParams) -> EigenStructure {
    let (values, vectors) = cov.eigenpairs();
    let keep = values.iter().take(support_rank(params)).take_while(|&&v| v > 0.0).count();
    EigenStructure::from_parts(values.to_vec(), vectors.clone(), keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportOverlap {
    /// Count of bins shared by both supports.
    pub a_estimate: usize,
    /// Support size of the first (Bob's) covariance.
    pub rho1_estimate: usize,
    pub disjoint: bool,
}

pub fn support_overlap(bob: &OneRingParams, ava: &OneRingParams) -> Result<SupportOverlap> {
    bob.validate()?;
    ava.validate()?;
    if bob.delta != ava.delta || bob.spacing != ava.spacing || bob.n_antennas != ava.n_antennas {
        return Err(Error::InvalidParameter(
            "support overlap needs equal angle spread, spacing and antenna count".into(),
        ));
    }
    let s1 = support_bins(bob);
    let s2 = support_bins(ava);
    let a = s1.iter().filter(|n| s2.contains(n)).count();
    Ok(SupportOverlap { a_estimate: a, rho1_estimate: s1.len(), disjoint: a == 0 })
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `N_T × L`, row `i` is antenna `i`'s CIR.
    pub bob_cirs: CMatrix,
    pub ava_cirs: CMatrix,
    pub pdp: Vec<f64>,
}

pub fn uniform_pdp(taps: usize) -> Vec<f64> {
    vec![1.0 / taps as f64; taps]
}

/// Reusable sampler holding both covariance square roots.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    bob_sqrt: CMatrix,
    ava_sqrt: CMatrix,
    pdp: Vec<f64>,
}

impl ChannelSampler {
    pub fn new(bob: &CovarianceMatrix, ava: &CovarianceMatrix, taps: usize) -> Result<Self> {
        if taps == 0 {
            return Err(Error::InvalidParameter("taps must be >= 1".into()));
        }
        if bob.dim() != ava.dim() {
            return Err(Error::Dimension("bob and ava antenna counts differ".into()));
        }
        Self::from_sqrt(covariance_sqrt(bob)?, covariance_sqrt(ava)?, taps)
    }

    /// Sampler from precomputed covariance square roots.
    pub fn from_sqrt(bob_sqrt: CMatrix, ava_sqrt: CMatrix, taps: usize) -> Result<Self> {
        if taps == 0 {
            return Err(Error::InvalidParameter("taps must be >= 1".into()));
        }
        if bob_sqrt.shape() != ava_sqrt.shape() {
            return Err(Error::Dimension("bob and ava antenna counts differ".into()));
        }
        Ok(Self { bob_sqrt, ava_sqrt, pdp: uniform_pdp(taps) })
    }

    pub fn taps(&self) -> usize {
        self.pdp.len()
    }

    fn draw<R: Rng + ?Sized>(&self, sqrt: &CMatrix, rng: &mut R) -> CMatrix {
        let nt = sqrt.nrows();
        let g = CMatrix::from_fn(nt, self.taps(), |_, l| {
            let scale = (self.pdp[l] / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * scale, im * scale)
        });
        sqrt * g
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let bob_cirs = self.draw(&self.bob_sqrt, rng);
        let ava_cirs = self.draw(&self.ava_sqrt, rng);
        ChannelRealization { bob_cirs, ava_cirs, pdp: self.pdp.clone() }
    }
}

/// Hermitian square root with PSD repair.
pub fn covariance_sqrt(cov: &CovarianceMatrix) -> Result<CMatrix> {
    let (values, vectors) = cov.eigenpairs();
    psd_sqrt_from(values, vectors, PSD_REPAIR_TOL)
}

/// Draws one pair of correlated CIRs from a seed.
pub fn sample_cir(bob: &OneRingParams, ava: &OneRingParams, taps: usize, seed: u64) -> Result<ChannelRealization> {
    let rb = one_ring_covariance(bob)?;
    let ra = one_ring_covariance(ava)?;
    let sampler = ChannelSampler::new(&rb, &ra, taps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sampler.sample(&mut rng))
}

#[derive(Debug, Clone)]
pub struct DftSubmatrix {
    pub n_fft: usize,
    pub rows: Vec<usize>,
    /// `s × L`.
    pub matrix: CMatrix,
    /// `Fᵀ F*`, `L × L`.
    pub gram: CMatrix,
    pub gram_eigen: EigenStructure,
}

pub fn dft_submatrix(n_fft: usize, taps: usize, rows: &[usize]) -> Result<DftSubmatrix> {
    if taps == 0 || n_fft == 0 {
        return Err(Error::InvalidParameter("n_fft and taps must be >= 1".into()));
    }
    for (i, &r) in rows.iter().enumerate() {
        if r >= n_fft {
            return Err(Error::InvalidParameter(format!("row {r} out of range for N = {n_fft}")));
        }
        if rows[..i].contains(&r) {
            return Err(Error::InvalidParameter(format!("duplicate row index {r}")));
        }
    }
    let matrix = CMatrix::from_fn(rows.len(), taps, |r, l| {
        let phase = -2.0 * PI * ((rows[r] * l) % n_fft) as f64 / n_fft as f64;
        C64::from_polar(1.0, phase)
    });
    let gram = matrix.transpose() * matrix.map(|z| z.conj());
    let gram_eigen = eigendecompose(&gram, RANK_THRESHOLD);
    Ok(DftSubmatrix { n_fft, rows: rows.to_vec(), matrix, gram, gram_eigen })
}

impl DftSubmatrix {
    pub fn s(&self) -> usize {
        self.rows.len()
    }

    pub fn taps(&self) -> usize {
        self.matrix.ncols()
    }

    /// Per-antenna frequency-domain covariance `F · diag(pdp) · Fᴴ` (`s × s`).
    pub fn fs_covariance(&self, pdp: &[f64]) -> CMatrix {
        let mut scaled = self.matrix.clone();
        for (l, &p) in pdp.iter().enumerate() {
            scaled.column_mut(l).scale_mut(p);
        }
        scaled * self.matrix.adjoint()
    }

    /// Eigen-structure of `fs_covariance`, rank `min(s, L)`.
    pub fn fs_eigen(&self, pdp: &[f64]) -> EigenStructure {
        eigendecompose_rank(&self.fs_covariance(pdp), self.s().min(self.taps()))
    }

    /// Moore-Penrose pseudo-inverse of the `s × L` slice.
    pub fn pinv(&self) -> CMatrix {
        pinv(&self.matrix)
    }

    /// Frequency response `F · h` for each antenna row of `cirs`, as `N_T × s`.
    pub fn apply(&self, cirs: &CMatrix) -> CMatrix {
        cirs * self.matrix.transpose()
    }
}
