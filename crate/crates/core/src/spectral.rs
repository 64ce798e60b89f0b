//! Spectra of reversible chains, spectral gaps and relaxation times.

use nalgebra::DMatrix;

use crate::chain::{check_dim, require_reversible, ProbabilityDistribution, StochasticMatrix};
use crate::error::{Error, Result};

/// Eigenvalues within this distance of each other are treated as equal.
pub const EIGEN_TIE_TOL: f64 = 1e-10;

/// Real eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Builds a spectrum from arbitrary-order eigenvalues.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(i) = eigenvalues.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, col: i });
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest absolute value among all eigenvalues except the top one.
    pub fn second_absolute(&self) -> f64 {
        self.eigenvalues[1..]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSummary {
    pub gap: f64,
    pub relaxation_time: f64,
}

/// Spectrum of a chain reversible with respect to `pi`, computed from the
/// symmetric conjugate `S = D^{1/2} P D^{-1/2}` with `D = diag(π)`.
pub fn reversible_spectrum(p: &StochasticMatrix, pi: &ProbabilityDistribution) -> Result<Spectrum> {
    let s = symmetric_conjugate(p, pi)?;
    Spectrum::new(s.symmetric_eigen().eigenvalues.iter().copied().collect())
}

/// `D^{1/2} P D^{-1/2}`, symmetrized after the detailed-balance check.
pub(crate) fn symmetric_conjugate(
    p: &StochasticMatrix,
    pi: &ProbabilityDistribution,
) -> Result<DMatrix<f64>> {
    check_dim(p.dim(), pi.len())?;
    if let Some(i) = pi.weights().iter().position(|&w| w <= 0.0) {
        return Err(Error::out_of_range("pi", pi.get(i), "(0, 1]"));
    }
    require_reversible(p, pi, crate::chain::RESIDUAL_TOL)?;
    let n = p.dim();
    let root: Vec<f64> = pi.weights().iter().map(|w| w.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| root[i] * p.get(i, j) / root[j]);
    Ok((&s + s.transpose()) * 0.5)
}

/// `β = 1 − max(|λ₂|, |λ_n|)` and `τ_rlx = 1/β`.
pub fn spectral_gap(spectrum: &Spectrum) -> Result<GapSummary> {
    let second = spectrum.second_absolute();
    if second >= 1.0 - EIGEN_TIE_TOL {
        return Err(Error::DegenerateSpectrum { second });
    }
    let gap = 1.0 - second;
    Ok(GapSummary {
        gap,
        relaxation_time: 1.0 / gap,
    })
}

/// Lower and upper bounds on `t_mix(eps)` from the relaxation time:
/// `(τ − 1)·ln(1/(2ε)) ≤ t_mix(ε) ≤ τ·ln(1/(ε·π_min))`.
pub fn mixing_time_bounds(
    gap: &GapSummary,
    pi: &ProbabilityDistribution,
    eps: f64,
) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::out_of_range("eps", eps, "(0, 1/2)"));
    }
    let pi_min = pi.min();
    if pi_min <= 0.0 {
        return Err(Error::out_of_range("pi_min", pi_min, "(0, 1]"));
    }
    let tau = gap.relaxation_time;
    let lower = (tau - 1.0) * (1.0 / (2.0 * eps)).ln();
    let upper = tau * (1.0 / (eps * pi_min)).ln();
    Ok((lower, upper))
}
