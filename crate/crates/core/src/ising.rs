//! Heat-bath Glauber dynamics for small Ising models, as continuous-time
//! generators over the `2ⁿ` spin configurations.
//!
//! States are enumerated by the integer whose bit `i` is `(σ_i + 1)/2`.

use nalgebra::DMatrix;

use crate::chain::{check_dim, ProbabilityDistribution};
use crate::continuous::{
    adiabatic_time_continuous, ContinuousAdiabaticReport, ContinuousScan, Generator,
};
use crate::error::{Error, Result};

/// Largest spin count the dense pipeline accepts.
pub const MAX_SPINS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    couplings: DMatrix<f64>,
    fields: Vec<f64>,
    beta: f64,
}

impl IsingModel {
    pub fn new(couplings: DMatrix<f64>, fields: Vec<f64>, beta: f64) -> Result<Self> {
        let n = fields.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if n > MAX_SPINS {
            return Err(Error::TooManySpins { n, max: MAX_SPINS });
        }
        check_dim(n, couplings.nrows())?;
        check_dim(n, couplings.ncols())?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::out_of_range("beta", beta, "[0, ∞)"));
        }
        for i in 0..n {
            if !fields[i].is_finite() {
                return Err(Error::NonFinite { row: 0, col: i });
            }
            if couplings[(i, i)] != 0.0 {
                return Err(Error::out_of_range("J_ii", couplings[(i, i)], "{0}"));
            }
            for j in 0..n {
                if !couplings[(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                let difference = (couplings[(i, j)] - couplings[(j, i)]).abs();
                if difference > 0.0 {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        difference,
                    });
                }
            }
        }
        Ok(Self {
            n,
            couplings,
            fields,
            beta,
        })
    }

    /// Uniform ferromagnet on the complete graph: `J_ij = coupling` for all
    /// `i ≠ j`, no external field.
    pub fn ferromagnet(n: usize, coupling: f64, beta: f64) -> Result<Self> {
        let couplings = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { coupling });
        Self::new(couplings, vec![0.0; n], beta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.couplings.clone(), self.fields.clone(), beta)
    }

    pub fn state_count(&self) -> usize {
        1 << self.n
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(i) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::out_of_range("spin", spins[i] as f64, "{-1, +1}"));
        }
        Ok(Self { spins })
    }

    pub fn from_index(n: usize, index: usize) -> Self {
        let spins = (0..n)
            .map(|i| if index >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        Self { spins }
    }

    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .map(|(i, &s)| usize::from(s == 1) << i)
            .sum()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut spins = self.spins.clone();
        spins[i] = -spins[i];
        Self { spins }
    }
}

/// `E(σ) = −Σ_{i<j} J_ij σ_i σ_j − Σ_i h_i σ_i`.
pub fn ising_energy(model: &IsingModel, sigma: &SpinConfiguration) -> Result<f64> {
    check_dim(model.n, sigma.spins.len())?;
    let s: Vec<f64> = sigma.spins.iter().map(|&x| x as f64).collect();
    let mut energy = 0.0;
    for i in 0..model.n {
        energy -= model.fields[i] * s[i];
        for j in (i + 1)..model.n {
            energy -= model.couplings[(i, j)] * s[i] * s[j];
        }
    }
    Ok(energy)
}

fn energies(model: &IsingModel) -> Vec<f64> {
    (0..model.state_count())
        .map(|x| {
            ising_energy(model, &SpinConfiguration::from_index(model.n, x)).expect("matching size")
        })
        .collect()
}

/// `π(σ) ∝ exp(−β·E(σ))`, shifted by the minimum energy before
/// exponentiating.
pub fn gibbs_distribution(model: &IsingModel) -> Result<ProbabilityDistribution> {
    let e = energies(model);
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = e
        .iter()
        .map(|x| (-model.beta * (x - e_min)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    ProbabilityDistribution::with_tolerance(w.iter().map(|x| x / z).collect(), 1e-12)
}

/// Heat-bath rate `1/(1 + e^{x})` for `x = β·ΔE`, evaluated without overflow.
fn heat_bath_rate(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Single-spin-flip generator with rates `q(σ, σ^i) = 1/(1 + e^{β(E(σ^i) − E(σ))})`.
pub fn glauber_generator(model: &IsingModel) -> Result<Generator> {
    let e = energies(model);
    let size = model.state_count();
    let mut rates = DMatrix::<f64>::zeros(size, size);
    for x in 0..size {
        for i in 0..model.n {
            let y = x ^ (1 << i);
            rates[(x, y)] = heat_bath_rate(model.beta * (e[y] - e[x]));
        }
    }
    Generator::from_off_diagonal(rates)
}

/// Settings for the Ising adiabatic experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingExperimentConfig {
    pub scan: ContinuousScan,
}

impl IsingExperimentConfig {
    /// Scan settings with the uniformization rate set to the spin count,
    /// which dominates every departure rate since each flip rate is below 1.
    pub fn for_spins(n: usize, t_cap: f64, grid: f64) -> Self {
        let mut scan = ContinuousScan::new(t_cap, grid);
        scan.lambda = Some(n as f64);
        Self { scan }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingReport {
    pub adiabatic: ContinuousAdiabaticReport,
    pub gibbs_final: ProbabilityDistribution,
}

/// Interpolates the two Glauber generators linearly and measures the
/// continuous adiabatic time together with its bound.
pub fn adiabatic_ising_experiment(
    m_init: &IsingModel,
    m_final: &IsingModel,
    eps: f64,
    config: &IsingExperimentConfig,
) -> Result<IsingReport> {
    check_dim(m_init.n, m_final.n)?;
    let q_init = glauber_generator(m_init)?;
    let q_final = glauber_generator(m_final)?;
    let adiabatic = adiabatic_time_continuous(&q_init, &q_final, eps, &config.scan)?;
    Ok(IsingReport {
        adiabatic,
        gibbs_final: gibbs_distribution(m_final)?,
    })
}
