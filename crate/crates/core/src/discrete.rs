//! Discrete-time adiabatic evolution along `P_s = (1 − s)·P_initial + s·P_final`
//! and the horizon bounds that control it.

use nalgebra::DMatrix;

use crate::chain::{
    check_dim, stationary_distribution, ProbabilityDistribution, StochasticMatrix, Structure,
};
use crate::error::{Error, Result};
use crate::mixing::{mixing_time_with, worst_case_rows};

/// Outcome of an adiabatic-time scan.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticReport<T> {
    pub epsilon: f64,
    /// Least horizon whose worst-case error is at most `epsilon`.
    pub measured_time: T,
    pub theoretical_bound: f64,
    /// `(T, error)` for every horizon visited by the scan, in order.
    pub error_curve: Vec<(T, f64)>,
}

/// A linear path from `p_initial` to `p_final` walked in `horizon` steps.
///
/// Only `p_final` must be irreducible and aperiodic; `p_initial` is arbitrary.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticSchedule {
    p_initial: StochasticMatrix,
    p_final: StochasticMatrix,
    horizon: usize,
}

impl AdiabaticSchedule {
    pub fn new(
        p_initial: StochasticMatrix,
        p_final: StochasticMatrix,
        horizon: usize,
    ) -> Result<Self> {
        check_dim(p_initial.dim(), p_final.dim())?;
        if horizon == 0 {
            return Err(Error::out_of_range("T", 0.0, "[1, ∞)"));
        }
        match crate::chain::structure(p_final.entries())? {
            Structure::Primitive => {}
            Structure::Reducible { from, to } => return Err(Error::Reducible { from, to }),
            Structure::Periodic { state, period } => return Err(Error::Periodic { state, period }),
        }
        Ok(Self {
            p_initial,
            p_final,
            horizon,
        })
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::out_of_range("T", 0.0, "[1, ∞)"));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn p_initial(&self) -> &StochasticMatrix {
        &self.p_initial
    }

    pub fn p_final(&self) -> &StochasticMatrix {
        &self.p_final
    }

    pub fn dim(&self) -> usize {
        self.p_final.dim()
    }

    /// `P_s` for `s ∈ [0, 1]`.
    pub fn interpolate(&self, s: f64) -> Result<StochasticMatrix> {
        self.p_initial.mix_with(&self.p_final, s)
    }

    /// `rows · P_{1/T} · P_{2/T} ⋯ P_1`, multiplying left to right without
    /// forming any matrix product of the interpolants.
    pub fn evolve_rows(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        let t = self.horizon;
        let mut current = rows.clone();
        for k in 1..=t {
            let s = k as f64 / t as f64;
            let from_initial = &current * self.p_initial.entries();
            let from_final = &current * self.p_final.entries();
            current = from_initial * (1.0 - s) + from_final * s;
        }
        current
    }
}

pub fn interpolate(sched: &AdiabaticSchedule, s: f64) -> Result<StochasticMatrix> {
    sched.interpolate(s)
}

/// `ν·P_{1/T}·P_{2/T} ⋯ P_{(T−1)/T}·P_1`.
pub fn adiabatic_evolve(
    nu: &ProbabilityDistribution,
    sched: &AdiabaticSchedule,
) -> Result<ProbabilityDistribution> {
    check_dim(sched.dim(), nu.len())?;
    let row = DMatrix::from_row_slice(1, nu.len(), nu.weights());
    let out = sched.evolve_rows(&row);
    ProbabilityDistribution::from_computed(out.iter().copied().collect())
}

/// Distance used when comparing the evolved law with `π_f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    TotalVariation,
    Euclidean,
}

/// Worst case over point masses of the distance between the evolved law and
/// `pi_final`.
pub fn adiabatic_error_with(
    sched: &AdiabaticSchedule,
    pi_final: &ProbabilityDistribution,
    metric: Metric,
) -> Result<f64> {
    check_dim(sched.dim(), pi_final.len())?;
    let n = sched.dim();
    let evolved = sched.evolve_rows(&DMatrix::identity(n, n));
    match metric {
        Metric::TotalVariation => worst_case_rows(&evolved, pi_final),
        Metric::Euclidean => Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (evolved[(i, j)] - pi_final.get(j)).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)),
    }
}

/// Worst-case total-variation error of the schedule at its horizon.
pub fn adiabatic_error(sched: &AdiabaticSchedule) -> Result<f64> {
    let pi = stationary_distribution(sched.p_final())?;
    adiabatic_error_with(sched, &pi, Metric::TotalVariation)
}

/// The explicit constant from the horizon argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteBound {
    /// Least integer `K ≥ 2` with `1 − ((1 + 1/(K−1))^{K−1}/e)^{t} ≤ ε/2`.
    pub k: u64,
    /// `K · t_mix(ε/2)`.
    pub t_bound: u64,
    /// `t/(−2·ln(1 − ε/2))`, the first-order estimate of `K`.
    pub k_approx: f64,
    /// `t/ε`, the cruder estimate of `K`.
    pub k_simple: f64,
}

/// `ln` of `((1 + 1/m)^m / e)^t`, evaluated stably.
fn log_shortfall(m: u64, t: u64) -> f64 {
    let m = m as f64;
    t as f64 * (m * (1.0 / m).ln_1p() - 1.0)
}

fn bound_holds(k: u64, t: u64, log_target: f64) -> bool {
    log_shortfall(k - 1, t) >= log_target
}

/// Solves the horizon inequality for `K` given `t = t_mix(ε/2)`.
///
/// The left side is decreasing in `K` (because `(1 + 1/m)^m` increases to
/// `e`), so the least admissible `K` is located by doubling followed by
/// bisection; the result is identical to an ascending search.
pub fn discrete_bound(t_mix_half: u64, eps: f64) -> Result<DiscreteBound> {
    if t_mix_half == 0 {
        return Err(Error::out_of_range("t_mix_half", 0.0, "[1, ∞)"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("eps", eps, "(0, 1)"));
    }
    // 1 − exp(x) ≤ ε/2  ⇔  x ≥ ln(1 − ε/2)
    let log_target = (-eps / 2.0).ln_1p();
    let mut hi = 2u64;
    while !bound_holds(hi, t_mix_half, log_target) {
        hi = hi.checked_mul(2).ok_or(Error::Numerical {
            context: "horizon constant search",
            residual: f64::INFINITY,
        })?;
    }
    let mut lo = (hi / 2).max(1);
    // invariant: bound fails at lo (or lo < 2), holds at hi
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound_holds(mid, t_mix_half, log_target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let k = hi;
    let t = t_mix_half as f64;
    Ok(DiscreteBound {
        k,
        t_bound: k * t_mix_half,
        k_approx: t / (-2.0 * log_target),
        k_simple: t / eps,
    })
}

/// `(ln(2/ε) + ln(1/π_min)) / (ε·β²)`: the spectral-gap form of the horizon
/// bound with its hidden constant set to one.
pub fn gap_bound(beta: f64, pi_min: f64, eps: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::out_of_range("beta", beta, "(0, 1]"));
    }
    if !(pi_min > 0.0 && pi_min < 1.0) {
        return Err(Error::out_of_range("pi_min", pi_min, "(0, 1)"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("eps", eps, "(0, 1)"));
    }
    Ok(((2.0 / eps).ln() + (1.0 / pi_min).ln()) / (eps * beta * beta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteAdiabaticReport {
    pub report: AdiabaticReport<usize>,
    /// Mixing time of `P_final` at `ε/2`.
    pub t_mix_half: usize,
    pub bound: DiscreteBound,
}

pub fn adiabatic_time(
    p_initial: &StochasticMatrix,
    p_final: &StochasticMatrix,
    eps: f64,
    cap: usize,
) -> Result<DiscreteAdiabaticReport> {
    adiabatic_time_with_metric(p_initial, p_final, eps, cap, Metric::TotalVariation)
}

/// Least horizon `T ≤ cap` whose worst-case error is at most `eps`.
///
/// The error is not assumed monotone in `T`: every horizon from 1 upward is
/// evaluated and recorded until the first success.
pub fn adiabatic_time_with_metric(
    p_initial: &StochasticMatrix,
    p_final: &StochasticMatrix,
    eps: f64,
    cap: usize,
    metric: Metric,
) -> Result<DiscreteAdiabaticReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("eps", eps, "(0, 1)"));
    }
    let base = AdiabaticSchedule::new(p_initial.clone(), p_final.clone(), 1)?;
    let pi = stationary_distribution(p_final)?;
    let t_mix_half =
        mixing_time_with(p_final, &pi, eps / 2.0, crate::mixing::DEFAULT_DISCRETE_CAP)?;
    let bound = discrete_bound(t_mix_half.max(1) as u64, eps)?;

    let mut curve = Vec::new();
    for t in 1..=cap {
        let error = adiabatic_error_with(&base.with_horizon(t)?, &pi, metric)?;
        curve.push((t, error));
        if error <= eps {
            return Ok(DiscreteAdiabaticReport {
                report: AdiabaticReport {
                    epsilon: eps,
                    measured_time: t,
                    theoretical_bound: bound.t_bound as f64,
                    error_curve: curve,
                },
                t_mix_half,
                bound,
            });
        }
    }
    Err(Error::AdiabaticCapExceeded {
        cap: cap as f64,
        epsilon: eps,
        curve: curve.into_iter().map(|(t, e)| (t as f64, e)).collect(),
    })
}
