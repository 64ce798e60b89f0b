//! Conversion between real symmetric Hamiltonians `H` with `I − H`
//! nonnegative and primitive, and reversible Markov chains.
//!
//! With `α` the positive ground state of `H` (the Perron vector of `I − H`)
//! and `λ₀` its ground energy,
//!
//! ```text
//! P_ij = α_j (I − H)_ij / ((1 − λ₀) α_i),     π = α² / ‖α‖²
//! H    = I − (1 − λ₀) D^{1/2} P D^{−1/2},     D = diag(π)
//! ```
//!
//! and the chain spectrum is `r_j = (1 − λ_j)/(1 − λ₀)`.

use nalgebra::DMatrix;

use crate::chain::{
    check_square, lazy, structure, ProbabilityDistribution, StochasticMatrix, Structure,
    RESIDUAL_TOL, VALIDATION_TOL,
};
use crate::error::{Error, Result};
use crate::spectral::{reversible_spectrum, spectral_gap, symmetric_conjugate, Spectrum};

/// Ground-state entries below this are treated as a near-reducible input.
pub const MIN_GROUND_STATE: f64 = 1e-13;

const POWER_ITERATIONS: usize = 200_000;

/// A validated real symmetric matrix whose complement `I − H` is
/// nonnegative, irreducible and aperiodic.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    entries: DMatrix<f64>,
}

impl Hamiltonian {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `I − H`.
    pub fn complement(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) - &self.entries
    }

    /// Eigenvalues of `H` in ascending order.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

pub fn validate_hamiltonian(m: DMatrix<f64>) -> Result<Hamiltonian> {
    check_square(&m)?;
    let n = m.nrows();
    if n < 2 {
        return Err(Error::out_of_range("n", n as f64, "[2, ∞)"));
    }
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let difference = (m[(i, j)] - m[(j, i)]).abs();
            if difference > VALIDATION_TOL {
                return Err(Error::Asymmetric {
                    row: i,
                    col: j,
                    difference,
                });
            }
        }
    }
    let complement = DMatrix::identity(n, n) - &m;
    for i in 0..n {
        for j in 0..n {
            let v = complement[(i, j)];
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    match structure(&complement)? {
        Structure::Primitive => Ok(Hamiltonian { entries: m }),
        Structure::Reducible { from, to } => Err(Error::Reducible { from, to }),
        Structure::Periodic { state, period } => Err(Error::Periodic { state, period }),
    }
}

/// Dominant eigenpair of a primitive nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    pub value: f64,
    /// Strictly positive, unit Euclidean norm.
    pub vector: Vec<f64>,
}

/// Perron eigenpair of a nonnegative irreducible aperiodic matrix.
///
/// Symmetric input goes through a symmetric eigensolve; anything else falls
/// back to power iteration, which converges for primitive matrices.
pub fn perron(m: &DMatrix<f64>) -> Result<PerronPair> {
    match structure(m)? {
        Structure::Primitive => {}
        Structure::Reducible { from, to } => return Err(Error::Reducible { from, to }),
        Structure::Periodic { state, period } => return Err(Error::Periodic { state, period }),
    }
    let n = m.nrows();
    let symmetric = (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= VALIDATION_TOL));
    let (value, mut vector) = if symmetric {
        let eig = m.clone().symmetric_eigen();
        let top = eig.eigenvalues.imax();
        let value = eig.eigenvalues[top];
        let others = (0..n)
            .filter(|&i| i != top)
            .map(|i| eig.eigenvalues[i].abs())
            .fold(0.0, f64::max);
        if value <= others {
            return Err(Error::Numerical {
                context: "Perron eigenvalue separation",
                residual: others - value,
            });
        }
        (
            value,
            eig.eigenvectors
                .column(top)
                .iter()
                .copied()
                .collect::<Vec<_>>(),
        )
    } else {
        power_iteration(m)?
    };

    let sum: f64 = vector.iter().sum();
    if sum < 0.0 {
        vector.iter_mut().for_each(|v| *v = -*v);
    }
    let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    vector.iter_mut().for_each(|v| *v /= norm);
    if let Some((index, &value)) = vector
        .iter()
        .enumerate()
        .find(|(_, &v)| v < MIN_GROUND_STATE)
    {
        return Err(Error::VanishingGroundState { index, value });
    }

    let residual = (0..n)
        .map(|i| ((0..n).map(|j| m[(i, j)] * vector[j]).sum::<f64>() - value * vector[i]).abs())
        .fold(0.0, f64::max);
    if residual > RESIDUAL_TOL * value.abs().max(1.0) {
        return Err(Error::Numerical {
            context: "Perron eigenpair",
            residual,
        });
    }
    Ok(PerronPair { value, vector })
}

fn power_iteration(m: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    let n = m.nrows();
    let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITERATIONS {
        let w = m * &v;
        let value = v.dot(&w);
        residual = (&w - &v * value).amax();
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        v = w / norm;
        if residual <= 1e-14 * value.abs().max(1.0) {
            let value = v.dot(&(m * &v));
            return Ok((value, v.iter().copied().collect()));
        }
    }
    Err(Error::Numerical {
        context: "Perron power iteration",
        residual,
    })
}

/// A Hamiltonian expressed as a reversible chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversionResult {
    pub chain: StochasticMatrix,
    pub stationary: ProbabilityDistribution,
    /// `λ₀`, the lowest eigenvalue of `H`.
    pub ground_energy: f64,
    /// `β_H = λ₁ − λ₀`.
    pub hamiltonian_gap: f64,
    /// `β = 1 − max(|r₁|, |r_N|)` of the chain, from its own spectrum.
    pub chain_gap: f64,
    pub ground_state: PerronPair,
    /// Eigenvalues `λ_0 ≤ λ_1 ≤ …` of `H`.
    pub energies: Vec<f64>,
    /// Eigenvalues `r_0 = 1 ≥ r_1 ≥ …` of the chain.
    pub chain_spectrum: Spectrum,
}

impl ConversionResult {
    /// Whether `r₁ ≥ |r_N|`, the case in which `β·(1 − λ₀) = β_H`.
    pub fn gap_relation_applies(&self) -> bool {
        let r = self.chain_spectrum.eigenvalues();
        r[1] >= r[r.len() - 1].abs()
    }
}

pub fn hamiltonian_to_chain(h: &Hamiltonian) -> Result<ConversionResult> {
    let a = h.complement();
    let ground_state = perron(&a)?;
    let n = h.dim();
    let scale = ground_state.value;
    let alpha = &ground_state.vector;
    let p = DMatrix::from_fn(n, n, |i, j| alpha[j] * a[(i, j)] / (scale * alpha[i]));
    let chain = StochasticMatrix::with_tolerance(p, RESIDUAL_TOL)?;
    let stationary = ProbabilityDistribution::with_tolerance(
        alpha.iter().map(|x| x * x).collect(),
        VALIDATION_TOL,
    )?;
    let energies = h.energies();
    let chain_spectrum = reversible_spectrum(&chain, &stationary)?;
    let chain_gap = spectral_gap(&chain_spectrum)?.gap;
    Ok(ConversionResult {
        chain,
        stationary,
        ground_energy: 1.0 - scale,
        hamiltonian_gap: energies[1] - energies[0],
        chain_gap,
        ground_state,
        energies,
        chain_spectrum,
    })
}

/// Rebuilds `H = I − (1 − λ₀)·D^{1/2} P D^{−1/2}` from a chain reversible
/// with respect to `pi`.
pub fn chain_to_hamiltonian(
    p: &StochasticMatrix,
    pi: &ProbabilityDistribution,
    ground_energy: f64,
) -> Result<Hamiltonian> {
    if !(ground_energy < 1.0 && ground_energy.is_finite()) {
        return Err(Error::out_of_range("lambda0", ground_energy, "(-∞, 1)"));
    }
    let s = symmetric_conjugate(p, pi)?;
    let n = p.dim();
    let h = DMatrix::identity(n, n) - s * (1.0 - ground_energy);
    validate_hamiltonian(h)
}

/// Spectral gap of the lazy chain `(I + P)/2` next to its prediction
/// `β_H / (2(1 − λ₀))`.
pub fn lazy_gap_relation(h: &Hamiltonian) -> Result<(f64, f64)> {
    let conv = hamiltonian_to_chain(h)?;
    let lazy_spectrum = reversible_spectrum(&lazy(&conv.chain), &conv.stationary)?;
    let lazy_gap = spectral_gap(&lazy_spectrum)?.gap;
    let predicted = conv.hamiltonian_gap / (2.0 * (1.0 - conv.ground_energy));
    Ok((lazy_gap, predicted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{is_reversible, matrix_from_rows};
    use crate::generate::{random_hamiltonian, random_reversible_chain};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        matrix_from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn two_state() -> Hamiltonian {
        validate_hamiltonian(m(&[&[-1.0, -1.0], &[-1.0, -1.0]])).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(matches!(
            validate_hamiltonian(DMatrix::zeros(3, 3)),
            Err(Error::Reducible { .. })
        ));
        two_state();
        assert!(matches!(
            validate_hamiltonian(m(&[&[0.5, -0.2], &[-0.3, 0.5]])),
            Err(Error::Asymmetric { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            validate_hamiltonian(m(&[&[0.5, 0.2], &[0.2, 0.5]])),
            Err(Error::NegativeEntry { row: 0, col: 1, .. })
        ));
        // I − H = [[0, 1], [1, 0]] is irreducible but periodic
        assert!(matches!(
            validate_hamiltonian(m(&[&[1.0, -1.0], &[-1.0, 1.0]])),
            Err(Error::Periodic { period: 2, .. })
        ));
    }

    #[test]
    fn perron_examples() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let p = perron(&m(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        assert_abs_diff_eq!(p.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.vector[0], r, epsilon = 1e-12);
        assert_abs_diff_eq!(p.vector[1], r, epsilon = 1e-12);

        let p = perron(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert_abs_diff_eq!(p.value, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.vector[0], r, epsilon = 1e-12);

        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let p = perron(&m(&[&[0.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert_abs_diff_eq!(p.value, golden, epsilon = 1e-12);
        assert!(p.vector.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn perron_of_nonsymmetric_matrix() {
        // eigenvalues of [[1, 2], [3, 2]] are 4 and −1; Perron vector ∝ (2, 3)
        let p = perron(&m(&[&[1.0, 2.0], &[3.0, 2.0]])).unwrap();
        assert_abs_diff_eq!(p.value, 4.0, epsilon = 1e-10);
        let norm = 13f64.sqrt();
        assert_abs_diff_eq!(p.vector[0], 2.0 / norm, epsilon = 1e-10);
        assert_abs_diff_eq!(p.vector[1], 3.0 / norm, epsilon = 1e-10);
    }

    #[test]
    fn conversion_two_state_example() {
        let c = hamiltonian_to_chain(&two_state()).unwrap();
        let expected = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(c.chain.get(i, j), expected[i][j], epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(c.stationary.get(0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.ground_energy, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.hamiltonian_gap, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.chain_gap, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn conversion_of_projection() {
        let h = validate_hamiltonian(m(&[&[0.5, -0.5], &[-0.5, 0.5]])).unwrap();
        let c = hamiltonian_to_chain(&h).unwrap();
        assert_abs_diff_eq!(c.ground_energy, 0.0, epsilon = 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(c.chain.get(i, j), 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_examples() {
        let p =
            StochasticMatrix::from_rows(&[vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 2.0 / 3.0]])
                .unwrap();
        let u = ProbabilityDistribution::uniform(2).unwrap();
        let h = chain_to_hamiltonian(&p, &u, -2.0).unwrap();
        for v in h.entries().iter() {
            assert_abs_diff_eq!(*v, -1.0, epsilon = 1e-12);
        }

        let sym = StochasticMatrix::from_rows(&[
            vec![0.2, 0.5, 0.3],
            vec![0.5, 0.1, 0.4],
            vec![0.3, 0.4, 0.3],
        ])
        .unwrap();
        let h =
            chain_to_hamiltonian(&sym, &ProbabilityDistribution::uniform(3).unwrap(), 0.0).unwrap();
        let expected = DMatrix::<f64>::identity(3, 3) - sym.entries();
        assert!((h.entries() - expected).amax() < 1e-12);

        assert!(chain_to_hamiltonian(&p, &u, 1.0).is_err());
        let skew = ProbabilityDistribution::new(vec![0.3, 0.7]).unwrap();
        assert!(matches!(
            chain_to_hamiltonian(&p, &skew, 0.0),
            Err(Error::NotReversible { .. })
        ));
    }

    #[test]
    fn lazy_gap_examples() {
        let (gap, predicted) = lazy_gap_relation(&two_state()).unwrap();
        assert_abs_diff_eq!(gap, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(predicted, 1.0 / 3.0, epsilon = 1e-12);

        let h = validate_hamiltonian(m(&[&[0.5, -0.5], &[-0.5, 0.5]])).unwrap();
        let (gap, predicted) = lazy_gap_relation(&h).unwrap();
        assert_abs_diff_eq!(gap, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(predicted, 0.5, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn conversion_identities(seed in any::<u64>(), n in 2usize..=8) {
            let h = random_hamiltonian(n, seed);
            let c = hamiltonian_to_chain(&h).unwrap();
            for i in 0..n {
                prop_assert!((c.chain.entries().row(i).sum() - 1.0).abs() < 1e-10);
            }
            prop_assert!(is_reversible(&c.chain, &c.stationary, 1e-10).unwrap());
            let scale = 1.0 - c.ground_energy;
            for (r, lam) in c.chain_spectrum.eigenvalues().iter().zip(&c.energies) {
                prop_assert!((r - (1.0 - lam) / scale).abs() < 1e-9);
            }
            if c.gap_relation_applies() {
                prop_assert!((c.chain_gap * scale - c.hamiltonian_gap).abs() < 1e-10);
            }
            let (gap, predicted) = lazy_gap_relation(&h).unwrap();
            prop_assert!((gap - predicted).abs() < 1e-10);

            let back = chain_to_hamiltonian(&c.chain, &c.stationary, c.ground_energy).unwrap();
            prop_assert!((back.entries() - h.entries()).amax() < 1e-9);
        }

        #[test]
        fn chain_roundtrip(seed in any::<u64>(), n in 2usize..=7) {
            let p = random_reversible_chain(n, seed);
            let pi = crate::chain::stationary_distribution(&p).unwrap();
            let h = chain_to_hamiltonian(&p, &pi, 0.0).unwrap();
            let c = hamiltonian_to_chain(&h).unwrap();
            prop_assert!((c.chain.entries() - p.entries()).amax() < 1e-9);
            for (a, b) in c.stationary.weights().iter().zip(pi.weights()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert!(c.ground_energy.abs() < 1e-9);
        }
    }
}
