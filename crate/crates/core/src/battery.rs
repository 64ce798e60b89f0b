//! The numerical validation battery: each criterion runs a seeded family of
//! instances and counts violations of one inequality or identity.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;

use crate::chain::{
    detailed_balance_violation, lazy, row_times, stationary_distribution, tv_distance_slices,
    StochasticMatrix,
};
use crate::continuous::{
    adiabatic_time_continuous, transition_matrix, ContinuousScan, Generator, MixingGrid, StepPolicy,
};
use crate::discrete::{adiabatic_error, adiabatic_time, discrete_bound, AdiabaticSchedule};
use crate::error::Result;
use crate::generate::{
    generate_chain, random_distribution, random_generator, random_hamiltonian, random_stochastic,
    reversible_random, rng, Construction, RandomChainSpec,
};
use crate::hamiltonian::{
    chain_to_hamiltonian, hamiltonian_to_chain, lazy_gap_relation, validate_hamiltonian,
};
use crate::ising::{
    adiabatic_ising_experiment, gibbs_distribution, glauber_generator, IsingExperimentConfig,
    IsingModel,
};
use crate::mixing::{mixing_time_with, worst_case_rows};
use crate::oracle::expm;
use crate::spectral::{mixing_time_bounds, reversible_spectrum, spectral_gap};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    /// First violation, or a one-line summary when none occurred.
    pub detail: String,
}

impl CriterionOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checks > 0
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {} ({}): {}/{} checks passed; {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.checks - self.violations,
            self.checks,
            self.detail
        )
    }
}

/// Collects checks for one criterion, keeping the first failure message.
struct Tally {
    id: u8,
    name: &'static str,
    checks: usize,
    violations: usize,
    first_failure: Option<String>,
    worst: f64,
}

impl Tally {
    fn new(id: u8, name: &'static str) -> Self {
        Self {
            id,
            name,
            checks: 0,
            violations: 0,
            first_failure: None,
            worst: 0.0,
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }

    /// Checks `deviation ≤ tol` and tracks the largest deviation seen.
    fn within(&mut self, deviation: f64, tol: f64, what: impl FnOnce() -> String) {
        self.worst = self.worst.max(deviation);
        self.check(deviation <= tol, || {
            format!("{} deviates by {deviation:e} > {tol:e}", what())
        });
    }

    fn error(&mut self, context: impl FnOnce() -> String, err: crate::Error) {
        self.check(false, || format!("{}: {err}", context()));
    }

    fn finish(self, summary: String) -> CriterionOutcome {
        CriterionOutcome {
            id: self.id,
            name: self.name,
            checks: self.checks,
            violations: self.violations,
            detail: self.first_failure.unwrap_or(summary),
        }
    }
}

const CONSTRUCTIONS: [Construction; 3] = [
    Construction::ReversibleRandom,
    Construction::BirthDeath,
    Construction::LazyRandomWalk,
];

/// Relaxation-time sandwich `(τ−1)·ln(1/(2ε)) ≤ t_mix(ε) ≤ τ·ln(1/(ε·π_min))`
/// on 100 random reversible chains with 3 to 8 states.
pub fn relaxation_sandwich(seed: u64) -> CriterionOutcome {
    let mut tally = Tally::new(1, "relaxation-time sandwich");
    let mut tightest = f64::INFINITY;
    for k in 0..100u64 {
        let spec = RandomChainSpec {
            n: 3 + (k as usize % 6),
            construction: CONSTRUCTIONS[(k as usize / 6) % 3],
            seed: seed.wrapping_add(k),
        };
        let p = generate_chain(&spec);
        let run = || -> Result<Vec<(f64, usize, f64, f64)>> {
            let pi = stationary_distribution(&p)?;
            let gap = spectral_gap(&reversible_spectrum(&p, &pi)?)?;
            [0.25, 0.05]
                .iter()
                .map(|&eps| {
                    let t = mixing_time_with(&p, &pi, eps, crate::mixing::DEFAULT_DISCRETE_CAP)?;
                    let (lo, hi) = mixing_time_bounds(&gap, &pi, eps)?;
                    Ok((eps, t, lo, hi))
                })
                .collect()
        };
        match run() {
            Ok(rows) => {
                for (eps, t, lo, hi) in rows {
                    let tf = t as f64;
                    tightest = tightest.min(hi - tf).min(tf - lo);
                    tally.check(lo <= tf && tf <= hi, || {
                        format!("{spec:?} eps={eps}: t_mix={t} outside [{lo:.4}, {hi:.4}]")
                    });
                }
            }
            Err(e) => tally.error(|| format!("{spec:?}"), e),
        }
    }
    tally.finish(format!("smallest slack {tightest:.4}"))
}

/// Chain/Hamiltonian conversion identities on 50 random Hamiltonians with 2
/// to 8 states.
pub fn conversion_identities(seed: u64) -> CriterionOutcome {
    let mut tally = Tally::new(2, "Hamiltonian conversion identities");
    let mut gap_cases = 0;
    for k in 0..50u64 {
        let n = 2 + (k as usize % 7);
        let s = seed.wrapping_add(k);
        let h = random_hamiltonian(n, s);
        let c = match hamiltonian_to_chain(&h) {
            Ok(c) => c,
            Err(e) => {
                tally.error(|| format!("seed {s} n {n}"), e);
                continue;
            }
        };
        let row_dev = (0..n)
            .map(|i| (c.chain.entries().row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max);
        tally.within(row_dev, 1e-10, || format!("seed {s}: row sums"));
        let balance = detailed_balance_violation(&c.chain, &c.stationary)
            .map(|v| v.0)
            .unwrap_or(f64::INFINITY);
        tally.within(balance, 1e-10, || format!("seed {s}: detailed balance"));
        let alpha_sq_dev = c
            .ground_state
            .vector
            .iter()
            .zip(c.stationary.weights())
            .map(|(a, p)| (a * a - p).abs())
            .fold(0.0, f64::max);
        tally.within(alpha_sq_dev, 1e-12, || format!("seed {s}: π = α²/‖α‖²"));
        let scale = 1.0 - c.ground_energy;
        let spectrum_dev = c
            .chain_spectrum
            .eigenvalues()
            .iter()
            .zip(&c.energies)
            .map(|(r, lam)| (r - (1.0 - lam) / scale).abs())
            .fold(0.0, f64::max);
        tally.within(spectrum_dev, 1e-9, || {
            format!("seed {s}: spectrum relation")
        });
        if c.gap_relation_applies() {
            gap_cases += 1;
            let dev = (c.chain_gap * scale - c.hamiltonian_gap).abs();
            tally.within(dev, 1e-10, || format!("seed {s}: gap relation"));
        }
        match lazy_gap_relation(&h) {
            Ok((gap, predicted)) => tally.within((gap - predicted).abs(), 1e-10, || {
                format!("seed {s}: lazy gap")
            }),
            Err(e) => tally.error(|| format!("seed {s}: lazy gap"), e),
        }
        match chain_to_hamiltonian(&c.chain, &c.stationary, c.ground_energy) {
            Ok(back) => {
                let dev = (back.entries() - h.entries()).amax();
                tally.within(dev, 1e-9, || format!("seed {s}: roundtrip"))
            }
            Err(e) => tally.error(|| format!("seed {s}: roundtrip"), e),
        }
    }
    let worst = tally.worst;
    tally.finish(format!(
        "gap relation exercised on {gap_cases}/50; worst deviation {worst:e}"
    ))
}

/// Measured discrete adiabatic time against `K·t_mix(ε/2)` on 20 random
/// pairs with 2 to 6 states.
pub fn discrete_adiabatic(seed: u64) -> CriterionOutcome {
    let mut tally = Tally::new(3, "discrete adiabatic time bound");
    let mut max_ratio = 0.0f64;
    for k in 0..20u64 {
        let n = 2 + (k as usize % 5);
        let s = seed.wrapping_add(k);
        let mut r = rng(s);
        let p_initial = random_stochastic(n, &mut r);
        let (p_final, _) = reversible_random(n, &mut r);
        for eps in [0.5, 0.25, 0.1] {
            let run = || -> Result<(usize, u64, f64)> {
                let pi = stationary_distribution(&p_final)?;
                let t_half = mixing_time_with(
                    &p_final,
                    &pi,
                    eps / 2.0,
                    crate::mixing::DEFAULT_DISCRETE_CAP,
                )?;
                let bound = discrete_bound(t_half.max(1) as u64, eps)?;
                let report = adiabatic_time(&p_initial, &p_final, eps, bound.t_bound as usize)?;
                let at_bound = AdiabaticSchedule::new(
                    p_initial.clone(),
                    p_final.clone(),
                    bound.t_bound as usize,
                )?;
                Ok((
                    report.report.measured_time,
                    bound.t_bound,
                    adiabatic_error(&at_bound)?,
                ))
            };
            match run() {
                Ok((measured, t_bound, error_at_bound)) => {
                    max_ratio = max_ratio.max(measured as f64 / t_bound as f64);
                    tally.check(measured as u64 <= t_bound, || {
                        format!("seed {s} eps {eps}: measured {measured} > bound {t_bound}")
                    });
                    tally.check(error_at_bound <= eps, || {
                        format!("seed {s} eps {eps}: error {error_at_bound} at T_bound {t_bound}")
                    });
                }
                Err(e) => tally.error(|| format!("seed {s} eps {eps}"), e),
            }
        }
    }
    tally.finish(format!("largest measured/bound ratio {max_ratio:.4}"))
}

/// Uniformization against the scaling-and-squaring exponential, plus the
/// semigroup and rate-invariance properties, on 20 random generators.
pub fn uniformization(seed: u64) -> CriterionOutcome {
    let mut tally = Tally::new(4, "uniformization correctness");
    let tol = crate::continuous::SERIES_TOL;

    // the oracle itself must reproduce the two-state closed form first
    let flip = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    for t in [0.1, 1.0, 10.0] {
        let e = expm(&(&flip * t));
        let decay = (-2.0 * t).exp();
        let dev = (e[(0, 0)] - (1.0 + decay) / 2.0)
            .abs()
            .max((e[(0, 1)] - (1.0 - decay) / 2.0).abs());
        tally.within(dev, 1e-12, || format!("oracle closed form at t={t}"));
    }

    for k in 0..20u64 {
        let s = seed.wrapping_add(k);
        let mut r = rng(s);
        let n = 2 + (k as usize % 5);
        let q = random_generator(n, &mut r);
        let lambda = q.max_departure_rate();
        let run = |tally: &mut Tally| -> Result<()> {
            for t in [0.1, 1.0, 10.0] {
                let p = transition_matrix(&q, t, lambda, tol)?;
                let reference = expm(&(q.rates() * t));
                tally.within((p.entries() - reference).amax(), 1e-8, || {
                    format!("seed {s}: expm at t={t}")
                });
            }
            for (a, b) in [(0.1, 1.0), (0.4, 0.7), (1.0, 10.0)] {
                let joint = transition_matrix(&q, a + b, lambda, tol)?;
                let split = transition_matrix(&q, a, lambda, tol)?
                    .then(&transition_matrix(&q, b, lambda, tol)?)?;
                tally.within(
                    (joint.entries() - split.entries()).amax(),
                    3.0 * tol,
                    || format!("seed {s}: semigroup at ({a}, {b})"),
                );
            }
            for t in [0.1, 1.0, 10.0] {
                let slow = transition_matrix(&q, t, lambda, tol)?;
                let fast = transition_matrix(&q, t, 2.5 * lambda, tol)?;
                tally.within((slow.entries() - fast.entries()).amax(), 2.0 * tol, || {
                    format!("seed {s}: λ-invariance at t={t}")
                });
            }
            Ok(())
        };
        if let Err(e) = run(&mut tally) {
            tally.error(|| format!("seed {s}"), e);
        }
    }
    let worst = tally.worst;
    tally.finish(format!("worst deviation {worst:e}"))
}

fn continuous_scan(
    q_init: &Generator,
    q_final: &Generator,
    eps: f64,
    steps: StepPolicy,
) -> Result<ContinuousScan> {
    let mixing = MixingGrid {
        t_cap: crate::mixing::DEFAULT_CONTINUOUS_CAP,
        resolution: 1e-3,
    };
    let mut scan = ContinuousScan::fitted(q_init, q_final, eps, mixing)?;
    scan.steps = steps;
    Ok(scan)
}

/// Measured continuous adiabatic time against `λ·t_mix(ε/2)²/ε` on 10
/// random generator pairs with 2 to 5 states.
pub fn continuous_adiabatic(seed: u64) -> CriterionOutcome {
    let mut tally = Tally::new(5, "continuous adiabatic time bound");
    let mut max_ratio = 0.0f64;
    for k in 0..10u64 {
        let s = seed.wrapping_add(k);
        let mut r = rng(s);
        let n = 2 + (k as usize % 4);
        let q_init = random_generator(n, &mut r);
        let q_final = random_generator(n, &mut r);
        for eps in [0.25, 0.1] {
            let run = || -> Result<(f64, f64)> {
                let scan = continuous_scan(&q_init, &q_final, eps, StepPolicy::RateStep(0.02))?;
                let report = adiabatic_time_continuous(&q_init, &q_final, eps, &scan)?;
                Ok((report.report.measured_time, report.bound.t_bound))
            };
            match run() {
                Ok((measured, bound)) => {
                    max_ratio = max_ratio.max(measured / bound);
                    tally.check(measured <= bound, || {
                        format!("seed {s} eps {eps}: measured {measured:.4} > bound {bound:.4}")
                    });
                }
                Err(e) => tally.error(|| format!("seed {s} eps {eps}"), e),
            }
        }
    }
    tally.finish(format!("largest measured/bound ratio {max_ratio:.4}"))
}

/// Glauber generators of small ferromagnets: detailed balance, stationarity,
/// and one adiabatic run per size from β = 0.2 to β = 1.0.
pub fn glauber_pipeline() -> CriterionOutcome {
    let mut tally = Tally::new(6, "Glauber/Ising pipeline");
    let mut runs = Vec::new();
    for n in [2usize, 3, 4] {
        for beta in [0.0, 0.5, 1.0] {
            let run = |tally: &mut Tally| -> Result<()> {
                let m = IsingModel::ferromagnet(n, 1.0, beta)?;
                let q = glauber_generator(&m)?;
                let pi = gibbs_distribution(&m)?;
                let size = m.state_count();
                let mut balance = 0.0f64;
                for x in 0..size {
                    for y in 0..size {
                        if x != y {
                            balance = balance
                                .max((pi.get(x) * q.rate(x, y) - pi.get(y) * q.rate(y, x)).abs());
                        }
                    }
                }
                tally.within(balance, 1e-12, || {
                    format!("n={n} β={beta}: detailed balance")
                });
                let flow = row_times(pi.weights(), q.rates());
                let residual = flow.iter().map(|v| v.abs()).fold(0.0, f64::max);
                tally.within(residual, 1e-10, || format!("n={n} β={beta}: stationarity"));
                Ok(())
            };
            if let Err(e) = run(&mut tally) {
                tally.error(|| format!("n={n} β={beta}"), e);
            }
        }
        let experiment = || -> Result<(f64, f64)> {
            let m_init = IsingModel::ferromagnet(n, 1.0, 0.2)?;
            let m_final = m_init.with_beta(1.0)?;
            let q_init = glauber_generator(&m_init)?;
            let q_final = glauber_generator(&m_final)?;
            let scan = continuous_scan(&q_init, &q_final, 0.25, StepPolicy::RateStep(0.05))?;
            let mut config = IsingExperimentConfig::for_spins(n, scan.t_cap, scan.grid);
            config.scan.mixing = scan.mixing;
            config.scan.steps = scan.steps;
            let report = adiabatic_ising_experiment(&m_init, &m_final, 0.25, &config)?;
            Ok((
                report.adiabatic.report.measured_time,
                report.adiabatic.bound.t_bound,
            ))
        };
        match experiment() {
            Ok((measured, bound)) => {
                runs.push(format!("n={n}: {measured:.3} ≤ {bound:.3}"));
                tally.check(measured <= bound, || {
                    format!("n={n}: measured {measured:.4} > bound {bound:.4}")
                });
            }
            Err(e) => tally.error(|| format!("n={n} adiabatic experiment"), e),
        }
    }
    tally.finish(runs.join(", "))
}

/// Worst case over 1000 random initial laws never beats the worst point mass.
pub fn extreme_points(seed: u64) -> CriterionOutcome {
    let mut tally = Tally::new(7, "extreme-point reduction");
    let mut margin = f64::INFINITY;
    for k in 0..20u64 {
        let s = seed.wrapping_add(k);
        let mut r = rng(s);
        let n = 2 + (k as usize % 7);
        let (p, pi) = reversible_random(n, &mut r);
        let t = r.random_range(0..4usize);
        let power = p.power(t);
        let Ok(point_max) = worst_case_rows(power.entries(), &pi) else {
            tally.check(false, || format!("seed {s}: point-mass maximum"));
            continue;
        };
        let mut sampled_max = 0.0f64;
        for _ in 0..1000 {
            let nu = random_distribution(n, &mut r);
            let moved = row_times(nu.weights(), power.entries());
            sampled_max = sampled_max.max(tv_distance_slices(&moved, pi.weights()));
        }
        margin = margin.min(point_max - sampled_max);
        tally.check(sampled_max <= point_max + 1e-12, || {
            format!("seed {s}: sampled {sampled_max} > point mass {point_max}")
        });
    }
    tally.finish(format!("smallest margin {margin:e}"))
}

/// Regression on the two hand-worked examples.
pub fn worked_examples() -> CriterionOutcome {
    let mut tally = Tally::new(8, "worked-example regression");
    let run = |tally: &mut Tally| -> Result<()> {
        let p = StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]])?;
        let pi = stationary_distribution(&p)?;
        let gap = spectral_gap(&reversible_spectrum(&p, &pi)?)?;
        tally.within((gap.gap - 0.2).abs(), 1e-3, || "gap".into());
        tally.within((gap.relaxation_time - 5.0).abs(), 1e-3, || {
            "relaxation time".into()
        });
        let t = mixing_time_with(&p, &pi, 0.25, 1000)?;
        tally.check(t == 4, || format!("t_mix(0.25) = {t}, expected 4"));
        let (lo, hi) = mixing_time_bounds(&gap, &pi, 0.25)?;
        tally.within((lo - 2.7726).abs(), 1e-3, || "lower bound".into());
        tally.within((hi - 10.397).abs(), 1e-3, || "upper bound".into());

        let h = validate_hamiltonian(DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, -1.0, -1.0]))?;
        let c = hamiltonian_to_chain(&h)?;
        let expected = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        tally.within((c.chain.entries() - expected).amax(), 1e-12, || {
            "converted chain".into()
        });
        tally.within((c.chain_gap - 2.0 / 3.0).abs(), 1e-12, || {
            "chain gap".into()
        });
        let lazy_spec = reversible_spectrum(&lazy(&c.chain), &c.stationary)?;
        let lazy_gap = spectral_gap(&lazy_spec)?.gap;
        tally.within((lazy_gap - 1.0 / 3.0).abs(), 1e-12, || "lazy gap".into());
        Ok(())
    };
    if let Err(e) = run(&mut tally) {
        tally.error(|| "worked examples".into(), e);
    }
    tally.finish("all values match".into())
}

/// Seed used by the battery when none is supplied.
pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn run_all(seed: u64) -> Vec<CriterionOutcome> {
    vec![
        relaxation_sandwich(seed),
        conversion_identities(seed),
        discrete_adiabatic(seed),
        uniformization(seed),
        continuous_adiabatic(seed),
        glauber_pipeline(),
        extreme_points(seed),
        worked_examples(),
    ]
}
