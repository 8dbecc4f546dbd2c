//! Browser bindings: covariance spectrum, asymptotic Δf grid and IEP curve.

use iccsim::channel::{one_ring_covariance, support_eigen, support_rank, OneRingParams};
use iccsim::code::{dpd_adjust, theoretical_iep};
use iccsim::harness::default_theta_grid;
use iccsim::receiver::asymptotic_delta_f;
use wasm_bindgen::prelude::*;

fn js(e: iccsim::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Eigenvalues of the one-ring covariance (descending), followed by the support rank.
pub fn spectrum(theta: f64, delta: f64, spacing: f64, n_antennas: usize) -> iccsim::Result<Vec<f64>> {
    let p = OneRingParams::new(theta, delta, spacing, n_antennas)?;
    let cov = one_ring_covariance(&p)?;
    let mut out = cov.eigenpairs().0.to_vec();
    out.push(support_rank(&p) as f64);
    Ok(out)
}

/// Row-major 5×5 asymptotic `Δf` over the default mean-AoA grid (rows: Bob).
pub fn deltaf_grid(delta: f64, spacing: f64, n_antennas: usize, taps: usize) -> iccsim::Result<Vec<f64>> {
    let rings = default_theta_grid()
        .into_iter()
        .map(|t| OneRingParams::new(t, delta, spacing, n_antennas))
        .collect::<iccsim::Result<Vec<_>>>()?;
    let covs = rings.iter().map(one_ring_covariance).collect::<iccsim::Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(covs.len() * covs.len());
    for (p, c) in rings.iter().zip(&covs) {
        let eig = support_eigen(c, p);
        out.extend(covs.iter().map(|c2| asymptotic_delta_f(&eig, c2, taps)));
    }
    Ok(out)
}

/// Pairs `(N_B, P_I / K)` for every parity-valid `N_B` in `[taps, n_b_max]`.
pub fn iep_points(taps: usize, k: usize, n_b_max: usize) -> iccsim::Result<Vec<f64>> {
    let mut out = Vec::new();
    for n_b in (taps.max(1)..=n_b_max).filter(|n| (n + taps) % 2 == 0) {
        let r = dpd_adjust(&theoretical_iep(n_b, taps)?, k)?;
        out.extend([n_b as f64, r.p_i_dpd]);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = covarianceSpectrum)]
pub fn covariance_spectrum(theta: f64, delta: f64, spacing: f64, n_antennas: usize) -> Result<Vec<f64>, JsError> {
    spectrum(theta, delta, spacing, n_antennas).map_err(js)
}

#[wasm_bindgen(js_name = deltafGrid)]
pub fn deltaf_grid_js(delta: f64, spacing: f64, n_antennas: usize, taps: usize) -> Result<Vec<f64>, JsError> {
    deltaf_grid(delta, spacing, n_antennas, taps).map_err(js)
}

#[wasm_bindgen(js_name = iepCurve)]
pub fn iep_curve(taps: usize, k: usize, n_b_max: usize) -> Result<Vec<f64>, JsError> {
    iep_points(taps, k, n_b_max).map_err(js)
}
