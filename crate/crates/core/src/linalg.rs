//! Small dense linear-algebra helpers over complex matrices.

use crate::{CMatrix, Error, Result, C64};

/// Eigen-pairs of a Hermitian matrix, eigenvalues sorted descending.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    // Symmetrize first: quadrature round-off leaves ~1e-16 asymmetry.
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub(crate) fn max_hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Square root of a PSD matrix. Negative eigenvalues down to `-tol * λ_max`
/// are clipped to zero; anything below that is an error.
#[cfg(test)]
pub(crate) fn psd_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    psd_sqrt_from(&values, &vectors, tol)
}

/// PSD square root from eigenpairs already sorted descending.
pub(crate) fn psd_sqrt_from(values: &[f64], vectors: &CMatrix, tol: f64) -> Result<CMatrix> {
    let max = values.first().copied().unwrap_or(0.0);
    let min = values.last().copied().unwrap_or(0.0);
    if min < -tol * max.abs() {
        return Err(Error::NotPsd { min, max });
    }
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    Ok(scaled * vectors.adjoint())
}

/// Moore-Penrose pseudo-inverse via SVD.
pub(crate) fn pinv(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = max_sv * 1e-12 * (m.nrows().max(m.ncols()) as f64);
    svd.pseudo_inverse(eps)
        .expect("SVD computed with both factors")
}

/// `Tr(A · B)` without forming the product.
pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub(crate) fn inverse_2x2(m: [[C64; 2]; 2]) -> Option<[[C64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].norm() + m[1][1].norm() + m[0][1].norm() + m[1][0].norm();
    if det.norm() <= 1e-300 || det.norm() < 1e-14 * scale * scale {
        return None;
    }
    let inv = det.inv();
    Some([
        [m[1][1] * inv, -m[0][1] * inv],
        [-m[1][0] * inv, m[0][0] * inv],
    ])
}
