use nalgebra::DVector;

use crate::airlink::ReceivedGrid;
use crate::channel::{dft_submatrix, CovarianceMatrix};
use crate::linalg::inverse_2x2;
use crate::{CMatrix, Error, Result, C64};

/// Frequency-selective estimates on the overlap set, stacked antenna-major
/// (`index = i·s + r`).
#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub h_bob_fs: DVector<C64>,
    pub h_ava_fs: DVector<C64>,
    pub nmse_bob: f64,
    pub nmse_ava: f64,
    /// Model-predicted per-element error `T(1 − T·xᴴC⁻¹x)`.
    pub predicted_mse_bob: f64,
    pub predicted_mse_ava: f64,
    pub overlap_set: Vec<usize>,
}

impl EstimationResult {
    pub fn s(&self) -> usize {
        self.overlap_set.len()
    }

    /// Reshapes a stacked vector to `N_T × s`.
    pub fn as_matrix(v: &DVector<C64>, s: usize) -> CMatrix {
        let nt = v.len() / s;
        CMatrix::from_fn(nt, s, |i, r| v[i * s + r])
    }
}

/// `2 × (N_T·s)` observation matrix, row `k` from symbol `k`.
pub fn stack_observations(grid: &ReceivedGrid, overlap: &[usize]) -> CMatrix {
    let s = overlap.len();
    let nt = grid.n_antennas;
    CMatrix::from_fn(2, nt * s, |k, c| grid.get(k, overlap[c % s], c / s))
}

/// True frequency responses of both users on `overlap`, stacked antenna-major.
pub fn true_fs(grid: &ReceivedGrid, overlap: &[usize]) -> Result<(DVector<C64>, DVector<C64>)> {
    let ch = &grid.truth.channels;
    let f = dft_submatrix(grid.n_fft, ch.bob_cirs.ncols(), overlap)?;
    let stack = |m: CMatrix| DVector::from_iterator(m.len(), m.transpose().iter().copied());
    Ok((stack(f.apply(&ch.bob_cirs)), stack(f.apply(&ch.ava_cirs))))
}

fn nmse(est: &DVector<C64>, truth: &DVector<C64>) -> f64 {
    (est - truth).norm_squared() / truth.norm_squared()
}

type Mat2 = [[C64; 2]; 2];

fn quad(x: &[C64; 2], m: &Mat2) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            acc += x[a].conj() * m[a][b] * x[b];
        }
    }
    acc
}

/// Row vector `t·xᴴ·C⁻¹` applied to `Y`.
fn apply_weights(y: &CMatrix, x: &[C64; 2], c_inv: &Mat2, t: f64) -> DVector<C64> {
    let w = [
        (x[0].conj() * c_inv[0][0] + x[1].conj() * c_inv[1][0]) * t,
        (x[0].conj() * c_inv[0][1] + x[1].conj() * c_inv[1][1]) * t,
    ];
    DVector::from_fn(y.ncols(), |c, _| w[0] * y[(0, c)] + w[1] * y[(1, c)])
}

fn invert_with_ridge(c: Mat2) -> Mat2 {
    inverse_2x2(c).unwrap_or_else(|| {
        let ridge = 1e-10 * (c[0][0].re + c[1][1].re).max(f64::MIN_POSITIVE);
        log::debug!("observation covariance singular, adding ridge {ridge:e}");
        let mut r = c;
        r[0][0] += ridge;
        r[1][1] += ridge;
        inverse_2x2(r).unwrap_or([[C64::new(1.0 / ridge, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0 / ridge, 0.0)]])
    })
}

fn estimate_with(
    grid: &ReceivedGrid,
    y: &CMatrix,
    x1: &[C64; 2],
    x2: &[C64; 2],
    overlap: &[usize],
    c: Mat2,
    t: f64,
) -> Result<EstimationResult> {
    let c_inv = invert_with_ridge(c);
    let h_bob_fs = apply_weights(y, x1, &c_inv, t);
    let h_ava_fs = apply_weights(y, x2, &c_inv, t);
    let (tb, ta) = true_fs(grid, overlap)?;
    Ok(EstimationResult {
        nmse_bob: nmse(&h_bob_fs, &tb),
        nmse_ava: nmse(&h_ava_fs, &ta),
        predicted_mse_bob: t * (1.0 - t * quad(x1, &c_inv).re),
        predicted_mse_ava: t * (1.0 - t * quad(x2, &c_inv).re),
        h_bob_fs,
        h_ava_fs,
        overlap_set: overlap.to_vec(),
    })
}

/// Sample-covariance LMMSE of both users' frequency responses on the overlap set.
///
/// `rf` is the per-antenna frequency-domain covariance on `overlap`; the
/// per-element prior power is `T = Tr(R₁)·Tr(R_F)/(N_T·s)`.
pub fn lmmse_estimate(
    grid: &ReceivedGrid,
    x1: [C64; 2],
    x2: [C64; 2],
    overlap: &[usize],
    r1: &CovarianceMatrix,
    rf: &CMatrix,
) -> Result<EstimationResult> {
    let s = overlap.len();
    let nt = grid.n_antennas;
    if s == 0 {
        return Err(Error::InvalidParameter("overlap set is empty".into()));
    }
    if grid.symbols < 2 || r1.dim() != nt || rf.nrows() != s {
        return Err(Error::Dimension("grid, covariance and overlap sizes disagree".into()));
    }
    let y = stack_observations(grid, overlap);
    let n = (nt * s) as f64;
    let cy = &y * y.adjoint() / C64::new(n, 0.0);
    let c = [[cy[(0, 0)], cy[(0, 1)]], [cy[(1, 0)], cy[(1, 1)]]];
    let tr_rf: f64 = rf.diagonal().iter().map(|z| z.re).sum();
    let t = r1.trace() * tr_rf / n;
    estimate_with(grid, &y, &x1, &x2, overlap, c, t)
}

/// Same linear estimator with the exact covariance `T·(x₁x₁ᴴ + x₂x₂ᴴ) + σ²I`.
pub fn perfect_mmse_estimate(
    grid: &ReceivedGrid,
    x1: [C64; 2],
    x2: [C64; 2],
    overlap: &[usize],
    t: f64,
) -> Result<EstimationResult> {
    if overlap.is_empty() || grid.symbols < 2 {
        return Err(Error::InvalidParameter("need a non-empty overlap and two symbols".into()));
    }
    let y = stack_observations(grid, overlap);
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            c[a][b] = (x1[a] * x1[b].conj() + x2[a] * x2[b].conj()) * t;
        }
        c[a][a] += grid.noise_var;
    }
    estimate_with(grid, &y, &x1, &x2, overlap, c, t)
}

/// Maps stacked frequency responses back to CIRs (`N_T × L`) with `F⁺` (`L × s`).
pub fn fs_to_cir(h_fs: &DVector<C64>, f_pinv: &CMatrix) -> CMatrix {
    let s = f_pinv.ncols();
    EstimationResult::as_matrix(h_fs, s) * f_pinv.transpose()
}

/// `‖Ĥ − H‖²_F / ‖H‖²_F`.
pub fn cir_nmse(est: &CMatrix, truth: &CMatrix) -> f64 {
    (est - truth).norm_squared() / truth.norm_squared()
}
