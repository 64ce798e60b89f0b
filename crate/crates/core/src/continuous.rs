//! Continuous-time chains: generators, uniformization, the time-inhomogeneous
//! evolution `dν/dt = ν·Q[t/T]` and the continuous adiabatic time.

use nalgebra::DMatrix;

use crate::chain::{
    check_dim, check_square, left_null_distribution, structure, ProbabilityDistribution,
    StochasticMatrix, Structure, CLAMP_TOL, RESIDUAL_TOL, VALIDATION_TOL,
};
use crate::discrete::AdiabaticReport;
use crate::error::{Error, Result};
use crate::mixing::{mixing_time_continuous, worst_case_rows};

/// Default truncation tolerance of the uniformization series.
pub const SERIES_TOL: f64 = 1e-12;

/// Largest Poisson mean handled by a single series; longer intervals are
/// split so `exp(-λt)` never underflows.
const MAX_POISSON_MEAN: f64 = 256.0;

/// Default bound on `λ·h` for one integration substep.
pub const DEFAULT_RATE_STEP: f64 = 0.1;

/// A bounded Markov generator: nonnegative off-diagonal rates, zero row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    rates: DMatrix<f64>,
}

impl Generator {
    pub fn new(mut rates: DMatrix<f64>) -> Result<Self> {
        check_square(&rates)?;
        let n = rates.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = rates[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if i != j && v < 0.0 {
                    if v > -CLAMP_TOL {
                        rates[(i, j)] = 0.0;
                    } else {
                        return Err(Error::NegativeEntry {
                            row: i,
                            col: j,
                            value: v,
                        });
                    }
                }
            }
            let sum: f64 = rates.row(i).sum();
            if sum.abs() > VALIDATION_TOL {
                return Err(Error::RowSum {
                    row: i,
                    sum,
                    expected: 0.0,
                });
            }
        }
        Ok(Self { rates })
    }

    /// Builds a generator from off-diagonal rates, filling the diagonal with
    /// the negated row sums.
    pub fn from_off_diagonal(mut rates: DMatrix<f64>) -> Result<Self> {
        check_square(&rates)?;
        for i in 0..rates.nrows() {
            rates[(i, i)] = 0.0;
            let out: f64 = rates.row(i).sum();
            rates[(i, i)] = -out;
        }
        Self::new(rates)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(crate::chain::matrix_from_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            rates: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    /// Total off-diagonal rate out of `state`.
    pub fn departure_rate(&self, state: usize) -> f64 {
        (0..self.dim())
            .filter(|&j| j != state)
            .map(|j| self.rates[(state, j)])
            .sum()
    }

    pub fn max_departure_rate(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.departure_rate(i))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::out_of_range("c", c, "[0, ∞)"));
        }
        Ok(Self {
            rates: &self.rates * c,
        })
    }
}

/// Rate `λ` together with the jump chain `P_λ = I + Q/λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformizedChain {
    pub lambda: f64,
    pub jump_chain: StochasticMatrix,
}

pub fn uniformize(q: &Generator, lambda: f64) -> Result<UniformizedChain> {
    check_rate(q, lambda)?;
    let n = q.dim();
    let jump = DMatrix::<f64>::identity(n, n) + q.rates() / lambda;
    Ok(UniformizedChain {
        lambda,
        jump_chain: StochasticMatrix::with_tolerance(jump, VALIDATION_TOL)?,
    })
}

fn check_rate(q: &Generator, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::out_of_range("lambda", lambda, "(0, ∞)"));
    }
    for row in 0..q.dim() {
        let rate = q.departure_rate(row);
        if rate - lambda > VALIDATION_TOL * lambda.max(1.0) {
            return Err(Error::RateTooSmall { row, rate, lambda });
        }
    }
    Ok(())
}

/// A uniformization rate admissible for every generator in `qs`; 1 when all
/// of them are zero.
pub fn admissible_rate(qs: &[&Generator]) -> f64 {
    let rate = qs
        .iter()
        .map(|q| q.max_departure_rate())
        .fold(0.0, f64::max);
    if rate > 0.0 {
        rate
    } else {
        1.0
    }
}

/// Poisson(`mean`) weights `w_0..=w_N`, where `N` is the smallest index whose
/// cumulative mass exceeds `1 − tol`.
///
/// Past the mode the geometric tail bound `w_{N+1}/(1 − mean/(N+2))` is used
/// as well, so tolerances below machine precision still terminate.
pub fn poisson_weights(mean: f64, tol: f64) -> Vec<f64> {
    let mut w = (-mean).exp();
    let mut weights = vec![w];
    let mut cumulative = w;
    let hard_cap = (mean + 50.0 * mean.sqrt() + 200.0) as usize;
    let mut n = 0usize;
    loop {
        if 1.0 - cumulative < tol {
            break;
        }
        let next = w * mean / (n + 1) as f64;
        if (n + 2) as f64 > mean {
            let tail = next / (1.0 - mean / (n + 2) as f64);
            if tail < tol {
                break;
            }
        }
        if n >= hard_cap {
            break;
        }
        n += 1;
        w = next;
        weights.push(w);
        cumulative += w;
    }
    weights
}

/// Returns `rows · P(t)` where `P(t)` is the truncated uniformization series
/// `Σ_n e^{-λt}(λt)^n/n! · P_λ^n`.
///
/// The total truncated mass per row stays below `tol`.
pub fn apply_transition(
    rows: &DMatrix<f64>,
    q: &Generator,
    t: f64,
    lambda: f64,
    tol: f64,
) -> Result<DMatrix<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::out_of_range("t", t, "[0, ∞)"));
    }
    check_dim(q.dim(), rows.ncols())?;
    let jump = uniformize(q, lambda)?.jump_chain.into_entries();
    let total = lambda * t;
    if total == 0.0 {
        return Ok(rows.clone());
    }
    let pieces = (total / MAX_POISSON_MEAN).ceil().max(1.0);
    let weights = poisson_weights(total / pieces, tol / pieces);
    let mut current = rows.clone();
    for _ in 0..pieces as usize {
        let mut term = current.clone();
        let mut acc = &term * weights[0];
        for &w in &weights[1..] {
            term = &term * &jump;
            acc += &term * w;
        }
        current = acc;
    }
    Ok(current)
}

/// `P(t) = e^{tQ}` by uniformization at rate `lambda`.
pub fn transition_matrix(q: &Generator, t: f64, lambda: f64, tol: f64) -> Result<StochasticMatrix> {
    let n = q.dim();
    let p = apply_transition(&DMatrix::identity(n, n), q, t, lambda, tol)?;
    StochasticMatrix::with_tolerance(p, tol + 1e-12)
}

/// `Q[s] = (1 − s)·Q_initial + s·Q_final`.
pub fn interpolate_generator(q_init: &Generator, q_final: &Generator, s: f64) -> Result<Generator> {
    check_dim(q_init.dim(), q_final.dim())?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::out_of_range("s", s, "[0, 1]"));
    }
    Ok(Generator {
        rates: q_init.rates() * (1.0 - s) + q_final.rates() * s,
    })
}

/// Stationary law of an irreducible generator, from `πQ = 0`, `Σπ = 1`.
pub fn generator_stationary(q: &Generator) -> Result<ProbabilityDistribution> {
    let n = q.dim();
    let pattern = DMatrix::from_fn(n, n, |i, j| {
        if i == j || q.rate(i, j) > 0.0 {
            1.0
        } else {
            0.0
        }
    });
    if let Structure::Reducible { from, to } = structure(&pattern)? {
        return Err(Error::Reducible { from, to });
    }
    let pi = left_null_distribution(q.rates(), "generator stationary distribution")?;
    let flow = crate::chain::row_times(pi.weights(), q.rates());
    let residual = flow.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if residual > RESIDUAL_TOL * q.max_departure_rate().max(1.0) {
        return Err(Error::Numerical {
            context: "generator stationary distribution",
            residual,
        });
    }
    Ok(pi)
}

/// How many substeps the inhomogeneous integrator takes over a horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// Exactly this many substeps regardless of the horizon.
    Fixed(usize),
    /// Enough substeps that `λ·h` stays at or below this value.
    RateStep(f64),
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::RateStep(DEFAULT_RATE_STEP)
    }
}

impl StepPolicy {
    pub fn steps(&self, lambda: f64, horizon: f64) -> usize {
        match *self {
            StepPolicy::Fixed(n) => n.max(1),
            StepPolicy::RateStep(r) => ((lambda * horizon / r).ceil() as usize).max(1),
        }
    }
}

/// Evolves every row of `rows` through `[0, T]` under `Q[t/T]`.
///
/// Each of the `steps` substeps freezes the generator at the substep midpoint
/// and applies its exact (uniformized) transition matrix. The truncation
/// budget `tol` is shared across the substeps.
pub fn evolve_rows(
    rows: &DMatrix<f64>,
    q_init: &Generator,
    q_final: &Generator,
    horizon: f64,
    steps: usize,
    lambda: f64,
    tol: f64,
) -> Result<DMatrix<f64>> {
    check_dim(q_init.dim(), q_final.dim())?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::out_of_range("T", horizon, "[0, ∞)"));
    }
    if steps == 0 {
        return Err(Error::out_of_range("steps", 0.0, "[1, ∞)"));
    }
    let h = horizon / steps as f64;
    let step_tol = tol / steps as f64;
    let mut current = rows.clone();
    for k in 0..steps {
        let s = (k as f64 + 0.5) / steps as f64;
        let q = interpolate_generator(q_init, q_final, s)?;
        current = apply_transition(&current, &q, h, lambda, step_tol)?;
    }
    Ok(current)
}

/// Evolves `nu` through `[0, T]` under `dν/dt = ν·Q[t/T]` with `steps`
/// midpoint-frozen substeps.
pub fn evolve_inhomogeneous(
    nu: &ProbabilityDistribution,
    q_init: &Generator,
    q_final: &Generator,
    horizon: f64,
    steps: usize,
) -> Result<ProbabilityDistribution> {
    check_dim(q_init.dim(), nu.len())?;
    let lambda = admissible_rate(&[q_init, q_final]);
    let row = DMatrix::from_row_slice(1, nu.len(), nu.weights());
    let out = evolve_rows(&row, q_init, q_final, horizon, steps, lambda, SERIES_TOL)?;
    ProbabilityDistribution::from_computed(out.iter().copied().collect())
}

/// The rate `λ` and horizon bound of the continuous adiabatic theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousBound {
    /// `max(dep(Q_initial), dep(Q_final), ε/(2·t_mix(ε/2)) + 1)`.
    pub lambda: f64,
    /// Continuous mixing time of `Q_final` at `ε/2` (grid-rounded upward).
    pub t_mix_half: f64,
    /// `K = λ·t_mix(ε/2)/ε`, so that `T_bound = K·t_mix(ε/2)`.
    pub k: f64,
    /// `λ·t_mix(ε/2)²/ε`.
    pub t_bound: f64,
}

/// Resolution settings for the mixing-time computation inside the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingGrid {
    pub t_cap: f64,
    pub resolution: f64,
}

impl Default for MixingGrid {
    fn default() -> Self {
        Self {
            t_cap: crate::mixing::DEFAULT_CONTINUOUS_CAP,
            resolution: 1e-3,
        }
    }
}

pub fn continuous_bound(
    q_init: &Generator,
    q_final: &Generator,
    eps: f64,
    grid: MixingGrid,
) -> Result<ContinuousBound> {
    check_dim(q_init.dim(), q_final.dim())?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("eps", eps, "(0, 1)"));
    }
    let t_mix = mixing_time_continuous(q_final, eps / 2.0, grid.t_cap, grid.resolution)?;
    if t_mix <= 0.0 {
        return Err(Error::out_of_range("t_mix(eps/2)", t_mix, "(0, ∞)"));
    }
    let lambda = q_init
        .max_departure_rate()
        .max(q_final.max_departure_rate())
        .max(eps / (2.0 * t_mix) + 1.0);
    let k = lambda * t_mix / eps;
    let t_bound = k * t_mix;

    // Both requirements of the argument: K ≥ λ·t_mix/ε and K ≥ λ/(2(λ−1)).
    let slack = 1e-12 * k.max(1.0);
    if k + slack < lambda * t_mix / eps || k + slack < lambda / (2.0 * (lambda - 1.0)) {
        return Err(Error::Numerical {
            context: "continuous adiabatic bound conditions",
            residual: lambda / (2.0 * (lambda - 1.0)) - k,
        });
    }
    Ok(ContinuousBound {
        lambda,
        t_mix_half: t_mix,
        k,
        t_bound,
    })
}

/// Settings for the continuous adiabatic-time scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousScan {
    /// Largest horizon tried.
    pub t_cap: f64,
    /// Horizon grid spacing; horizons are `grid, 2·grid, …`.
    pub grid: f64,
    pub steps: StepPolicy,
    /// Uniformization rate for the simulation; the bound's `λ` when unset.
    pub lambda: Option<f64>,
    /// Truncation budget per evolution.
    pub tol: f64,
    /// Grid used for `t_mix(ε/2)` inside the bound.
    pub mixing: MixingGrid,
}

impl ContinuousScan {
    pub fn new(t_cap: f64, grid: f64) -> Self {
        Self {
            t_cap,
            grid,
            steps: StepPolicy::default(),
            lambda: None,
            tol: SERIES_TOL,
            mixing: MixingGrid {
                t_cap,
                resolution: grid / 10.0,
            },
        }
    }

    /// Grid of `t_mix(ε/2)/25` for the final generator, capped one grid step
    /// past the bound so a scan that respects the bound always terminates.
    pub fn fitted(
        q_init: &Generator,
        q_final: &Generator,
        eps: f64,
        mixing: MixingGrid,
    ) -> Result<Self> {
        let bound = continuous_bound(q_init, q_final, eps, mixing)?;
        let grid = if bound.t_mix_half > 0.0 {
            bound.t_mix_half / 25.0
        } else {
            mixing.resolution
        };
        let mut scan = Self::new(bound.t_bound + grid, grid);
        scan.mixing = mixing;
        Ok(scan)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousAdiabaticReport {
    pub report: AdiabaticReport<f64>,
    pub bound: ContinuousBound,
    /// Uniformization rate used by the simulation.
    pub lambda_used: f64,
}

/// Worst-case TV error `max_x ‖δ_x P_T(0,T) − π_f‖` at horizon `T`.
pub fn continuous_adiabatic_error(
    q_init: &Generator,
    q_final: &Generator,
    pi_final: &ProbabilityDistribution,
    horizon: f64,
    steps: usize,
    lambda: f64,
    tol: f64,
) -> Result<f64> {
    let n = q_final.dim();
    let evolved = evolve_rows(
        &DMatrix::identity(n, n),
        q_init,
        q_final,
        horizon,
        steps,
        lambda,
        tol,
    )?;
    worst_case_rows(&evolved, pi_final)
}

/// Least horizon on the grid whose worst-case error is at most `eps`,
/// scanning upward and keeping the full error curve.
pub fn adiabatic_time_continuous(
    q_init: &Generator,
    q_final: &Generator,
    eps: f64,
    scan: &ContinuousScan,
) -> Result<ContinuousAdiabaticReport> {
    check_dim(q_init.dim(), q_final.dim())?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("eps", eps, "(0, 1)"));
    }
    if !(scan.grid > 0.0 && scan.t_cap >= scan.grid) {
        return Err(Error::out_of_range("grid", scan.grid, "(0, t_cap]"));
    }
    let pi_final = generator_stationary(q_final)?;
    let bound = continuous_bound(q_init, q_final, eps, scan.mixing)?;
    let lambda = scan.lambda.unwrap_or(bound.lambda);
    check_rate(q_init, lambda)?;
    check_rate(q_final, lambda)?;

    let mut curve = Vec::new();
    let mut k = 1usize;
    loop {
        let horizon = k as f64 * scan.grid;
        if horizon > scan.t_cap * (1.0 + 1e-12) {
            break;
        }
        let steps = scan.steps.steps(lambda, horizon);
        let error = continuous_adiabatic_error(
            q_init, q_final, &pi_final, horizon, steps, lambda, scan.tol,
        )?;
        curve.push((horizon, error));
        if error <= eps {
            return Ok(ContinuousAdiabaticReport {
                report: AdiabaticReport {
                    epsilon: eps,
                    measured_time: horizon,
                    theoretical_bound: bound.t_bound,
                    error_curve: curve,
                },
                bound,
                lambda_used: lambda,
            });
        }
        k += 1;
    }
    Err(Error::AdiabaticCapExceeded {
        cap: scan.t_cap,
        epsilon: eps,
        curve,
    })
}
