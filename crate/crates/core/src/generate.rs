//! Seeded random test instances: reversible chains, Hamiltonians, generators.
//!
//! Every constructor is a pure function of its arguments. The stream comes
//! from [`RNG_NAME`] seeded through `SeedableRng::seed_from_u64`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{lazy, ProbabilityDistribution, StochasticMatrix};
use crate::continuous::Generator;
use crate::hamiltonian::{validate_hamiltonian, Hamiltonian};

/// Name of the pseudo-random generator family, for output headers.
pub const RNG_NAME: &str = "ChaCha8Rng";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// Metropolis-filled chain with a random target law.
    ReversibleRandom,
    /// Tridiagonal nearest-neighbour chain.
    BirthDeath,
    /// Lazy simple random walk on a random connected graph.
    LazyRandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomChainSpec {
    pub n: usize,
    pub construction: Construction,
    pub seed: u64,
}

pub fn generate_chain(spec: &RandomChainSpec) -> StochasticMatrix {
    let mut rng = rng(spec.seed);
    match spec.construction {
        Construction::ReversibleRandom => reversible_random(spec.n, &mut rng).0,
        Construction::BirthDeath => birth_death(spec.n, &mut rng),
        Construction::LazyRandomWalk => lazy_random_walk(spec.n, &mut rng),
    }
}

pub fn random_reversible_chain(n: usize, seed: u64) -> StochasticMatrix {
    reversible_random(n, &mut rng(seed)).0
}

/// A reversible chain together with the law it was built to be reversible for.
///
/// Off-diagonal moves are `c_xy/(n−1) · min(1, π(y)/π(x))` with symmetric
/// conductances `c`, so `π(x)p(x,y) = c_xy/(n−1) · min(π(x), π(y))` holds by
/// construction and the diagonal absorbs the remaining mass.
pub fn reversible_random(
    n: usize,
    rng: &mut impl Rng,
) -> (StochasticMatrix, ProbabilityDistribution) {
    assert!(n >= 1, "state space must be nonempty");
    // log-uniform weights spread π over roughly two decades
    let raw: Vec<f64> = (0..n)
        .map(|_| (rng.random_range(-2.3..0.0f64)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let pi: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mut conductance = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let c = rng.random_range(0.05..1.0);
            conductance[(i, j)] = c;
            conductance[(j, i)] = c;
        }
    }
    let spread = (n.max(2) - 1) as f64;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[(i, j)] = conductance[(i, j)] / spread * (pi[j] / pi[i]).min(1.0);
            }
        }
        let off: f64 = p.row(i).sum();
        p[(i, i)] = 1.0 - off;
    }
    let chain = StochasticMatrix::new(p).expect("Metropolis filling is row-stochastic");
    let law = ProbabilityDistribution::with_tolerance(pi, 1e-12).expect("normalized weights");
    (chain, law)
}

fn birth_death(n: usize, rng: &mut impl Rng) -> StochasticMatrix {
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let up = if i + 1 < n {
            rng.random_range(0.05..0.5)
        } else {
            0.0
        };
        let down = if i > 0 {
            rng.random_range(0.05..0.5)
        } else {
            0.0
        };
        if i + 1 < n {
            p[(i, i + 1)] = up;
        }
        if i > 0 {
            p[(i, i - 1)] = down;
        }
        p[(i, i)] = 1.0 - up - down;
    }
    StochasticMatrix::new(p).expect("birth-death rows sum to one")
}

fn lazy_random_walk(n: usize, rng: &mut impl Rng) -> StochasticMatrix {
    let adjacency = connected_graph(n, 0.3, rng);
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let degree: f64 = adjacency.row(i).sum();
        if degree == 0.0 {
            p[(i, i)] = 1.0;
            continue;
        }
        for j in 0..n {
            p[(i, j)] = adjacency[(i, j)] / degree;
        }
    }
    lazy(&StochasticMatrix::new(p).expect("walk rows sum to one"))
}

/// Symmetric 0/1 adjacency: a random spanning path plus extra edges with
/// probability `density`.
fn connected_graph(n: usize, density: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for w in order.windows(2) {
        a[(w[0], w[1])] = 1.0;
        a[(w[1], w[0])] = 1.0;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(density) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}

/// Arbitrary row-stochastic matrix, with roughly a third of entries zeroed.
pub fn random_stochastic(n: usize, rng: &mut impl Rng) -> StochasticMatrix {
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rng.random_bool(0.67) {
                p[(i, j)] = rng.random_range(0.0..1.0);
            }
        }
        if p.row(i).sum() == 0.0 {
            p[(i, rng.random_range(0..n))] = 1.0;
        }
        let s: f64 = p.row(i).sum();
        p.row_mut(i).scale_mut(1.0 / s);
    }
    StochasticMatrix::with_tolerance(p, 1e-12).expect("normalized rows")
}

/// Random valid Hamiltonian `H = I − A` with `A` symmetric, nonnegative,
/// connected and with a positive diagonal (hence primitive).
pub fn random_hamiltonian(n: usize, seed: u64) -> Hamiltonian {
    let mut rng = rng(seed);
    let adjacency = connected_graph(n, 0.5, &mut rng);
    let scale = rng.random_range(0.2..2.0);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = scale * rng.random_range(0.05..1.0);
        for j in (i + 1)..n {
            if adjacency[(i, j)] > 0.0 {
                let v = scale * rng.random_range(0.05..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    let h = DMatrix::<f64>::identity(n, n) - a;
    validate_hamiltonian(h).expect("construction yields a valid Hamiltonian")
}

/// Random irreducible generator: a directed ring of positive rates plus
/// random extra rates, all scaled by a random factor.
pub fn random_generator(n: usize, rng: &mut impl Rng) -> Generator {
    let scale = rng.random_range(0.3..2.0);
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        if n > 1 {
            q[(i, (i + 1) % n)] = scale * rng.random_range(0.1..1.0);
        }
        for j in 0..n {
            if j != i && j != (i + 1) % n && rng.random_bool(0.5) {
                q[(i, j)] = scale * rng.random_range(0.0..1.0);
            }
        }
    }
    Generator::from_off_diagonal(q).expect("off-diagonal rates are nonnegative")
}

/// Random probability vector, occasionally with zero entries.
pub fn random_distribution(n: usize, rng: &mut impl Rng) -> ProbabilityDistribution {
    let sparse = rng.random_bool(0.2);
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if sparse && rng.random_bool(0.5) {
                0.0
            } else {
                -rng.random_range(f64::MIN_POSITIVE..1.0).ln()
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    ProbabilityDistribution::with_tolerance(w.iter().map(|x| x / s).collect(), 1e-12)
        .expect("normalized weights")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{is_reversible, stationary_distribution};

    #[test]
    fn reversible_random_is_reversible_for_its_law() {
        for seed in 0..50 {
            let mut r = rng(seed);
            let (p, pi) = reversible_random(2 + (seed as usize % 7), &mut r);
            assert!(is_reversible(&p, &pi, 1e-12).unwrap());
            let solved = stationary_distribution(&p).unwrap();
            for (a, b) in solved.weights().iter().zip(pi.weights()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn every_construction_is_reversible() {
        for construction in [
            Construction::ReversibleRandom,
            Construction::BirthDeath,
            Construction::LazyRandomWalk,
        ] {
            for seed in 0..20 {
                let spec = RandomChainSpec {
                    n: 6,
                    construction,
                    seed,
                };
                let p = generate_chain(&spec);
                let pi = stationary_distribution(&p).unwrap();
                assert!(
                    is_reversible(&p, &pi, 1e-12).unwrap(),
                    "{construction:?} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn birth_death_is_tridiagonal() {
        let p = generate_chain(&RandomChainSpec {
            n: 7,
            construction: Construction::BirthDeath,
            seed: 3,
        });
        for i in 0..7usize {
            for j in 0..7 {
                if i.abs_diff(j) > 1 {
                    assert_eq!(p.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let spec = |seed| RandomChainSpec {
            n: 5,
            construction: Construction::ReversibleRandom,
            seed,
        };
        assert_eq!(generate_chain(&spec(11)), generate_chain(&spec(11)));
        assert_ne!(generate_chain(&spec(11)), generate_chain(&spec(12)));
    }

    #[test]
    fn products_and_mixtures_stay_stochastic() {
        let mut r = rng(5);
        for _ in 0..20 {
            let a = random_stochastic(6, &mut r);
            let b = random_stochastic(6, &mut r);
            let prod = a.then(&b).unwrap();
            let mix = a.mix_with(&b, r.random_range(0.0..1.0)).unwrap();
            for m in [prod, mix] {
                for i in 0..6 {
                    assert!((m.entries().row(i).sum() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn random_generators_are_irreducible() {
        let mut r = rng(9);
        for n in 2..=6 {
            let q = random_generator(n, &mut r);
            crate::continuous::generator_stationary(&q).unwrap();
        }
    }
}
