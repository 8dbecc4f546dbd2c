use crate::channel::{CovarianceMatrix, EigenStructure};
use crate::code::{Codebook, Codeword};
use crate::linalg::trace_of_product;
use crate::CMatrix;

use super::estimate::EstimationResult;
use super::separate::SeparationResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    NoAttack,
    Identified,
    Ambiguous,
    Error,
}

/// `H0`: the phase-matched candidate is Bob's. `H1`: the other one is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationOutcome {
    pub status: Status,
    pub delta_f: Option<f64>,
    pub chosen: Option<Hypothesis>,
    pub iep_event: bool,
}

impl IdentificationOutcome {
    fn new(status: Status, chosen: Option<Hypothesis>) -> Self {
        Self { status, delta_f: None, chosen, iep_event: false }
    }
}

fn qualifies(word: &Option<Codeword>, book: &Codebook) -> bool {
    word.as_ref().is_some_and(|w| w.weight() == book.weight() && book.contains(w))
}

/// Weight-and-membership test on the separated candidates.
pub fn identify(sep: &SeparationResult, book: &Codebook) -> IdentificationOutcome {
    let bob_ok = qualifies(&sep.word_bob, book);
    let other_ok = qualifies(&sep.word_other, book);
    match (bob_ok, other_ok) {
        (true, _) if !sep.other_present => IdentificationOutcome::new(Status::NoAttack, Some(Hypothesis::H0)),
        (true, true) if sep.word_bob == sep.word_other => {
            IdentificationOutcome::new(Status::Identified, Some(Hypothesis::H0))
        }
        (true, true) => IdentificationOutcome::new(Status::Ambiguous, None),
        (true, false) => IdentificationOutcome::new(Status::Identified, Some(Hypothesis::H0)),
        (false, true) => IdentificationOutcome::new(Status::Identified, Some(Hypothesis::H1)),
        (false, false) => IdentificationOutcome::new(Status::Error, None),
    }
}

/// `Re Σ conj(M) ⊙ (A·M·Bᵀ)`, the quadratic form `rᴴ(A ⊗ B)r` of an
/// antenna-major stacked `r` reshaped to `M` (`N_T × s`).
pub fn kron_quadratic_form(m: &CMatrix, a: &CMatrix, b: &CMatrix) -> f64 {
    let amb = a * m * b.transpose();
    m.iter().zip(amb.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `f(ĥ_B) − f(ĥ_A)` with precomputed `R̄₁` (`N_T × N_T`) and `R̄_F` (`s × s`).
pub fn delta_f_with(est: &EstimationResult, r1_bar: &CMatrix, rf_bar: &CMatrix) -> f64 {
    let s = est.s();
    let mb = EstimationResult::as_matrix(&est.h_bob_fs, s);
    let ma = EstimationResult::as_matrix(&est.h_ava_fs, s);
    kron_quadratic_form(&mb, r1_bar, rf_bar) - kron_quadratic_form(&ma, r1_bar, rf_bar)
}

pub fn delta_f(est: &EstimationResult, r1_eigen: &EigenStructure, rf_eigen: &EigenStructure) -> f64 {
    delta_f_with(est, &r1_eigen.pseudo_inverse(), &rf_eigen.pseudo_inverse())
}

/// Large-array limit `L·(ρ₁ − Tr(R₂·R̄₁))`, with `ρ₁` the rank kept in `r1_eigen`.
pub fn asymptotic_delta_f(r1_eigen: &EigenStructure, r2: &CovarianceMatrix, taps: usize) -> f64 {
    let rho1 = r1_eigen.rank() as f64;
    let trace = trace_of_product(&r2.entries, &r1_eigen.pseudo_inverse()).re;
    taps as f64 * (rho1 - trace)
}

/// Zero band of the sign rule, `1e-3·L·ρ₁`.
pub fn delta_f_tolerance(taps: usize, rho1: usize) -> f64 {
    1e-3 * (taps * rho1) as f64
}

/// Resolves an ambiguous outcome by the sign of `Δf`.
pub fn enhance_identification(outcome: &IdentificationOutcome, delta: f64, tol: f64) -> IdentificationOutcome {
    let mut out = outcome.clone();
    if outcome.status != Status::Ambiguous {
        return out;
    }
    out.delta_f = Some(delta);
    if delta > tol {
        out.status = Status::Identified;
        out.chosen = Some(Hypothesis::H0);
    } else if delta < -tol {
        out.status = Status::Identified;
        out.chosen = Some(Hypothesis::H1);
    } else {
        out.status = Status::Error;
        out.chosen = None;
        out.iep_event = true;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn ambiguous() -> IdentificationOutcome {
        IdentificationOutcome::new(Status::Ambiguous, None)
    }

    #[test]
    fn sign_rule() {
        assert_eq!(enhance_identification(&ambiguous(), 1.0, 1e-3).chosen, Some(Hypothesis::H0));
        assert_eq!(enhance_identification(&ambiguous(), -1.0, 1e-3).chosen, Some(Hypothesis::H1));
        let zero = enhance_identification(&ambiguous(), 0.0, 1e-3);
        assert!(zero.iep_event);
        assert_eq!(zero.status, Status::Error);
    }

    #[test]
    fn kron_form_matches_dense() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let b = CMatrix::from_fn(2, 2, |i, j| C64::new(1.0 + (i * j) as f64, (i as f64) - (j as f64)));
        let m = CMatrix::from_fn(3, 2, |i, r| C64::new(i as f64 - 0.5, r as f64 + 0.25));
        let r = nalgebra::DVector::from_fn(6, |c, _| m[(c / 2, c % 2)]);
        let kron = a.kronecker(&b);
        let dense = (r.adjoint() * kron * &r)[(0, 0)].re;
        assert!((kron_quadratic_form(&m, &a, &b) - dense).abs() < 1e-9);
    }
}
