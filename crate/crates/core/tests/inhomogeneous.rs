use markov_adiabatic::continuous::{
    admissible_rate, evolve_inhomogeneous, evolve_rows, transition_matrix, Generator, SERIES_TOL,
};
use markov_adiabatic::generate::{random_distribution, random_generator, rng};
use markov_adiabatic::oracle::expm;
use markov_adiabatic::ProbabilityDistribution;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn q_init() -> Generator {
    Generator::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
}

fn q_final() -> Generator {
    Generator::from_rows(&[vec![-3.0, 3.0], vec![0.5, -0.5]]).unwrap()
}

/// Classical RK4 on `dν₀/dt = −a(t)·ν₀ + b(t)·(1 − ν₀)` for a two-state path.
fn rk4_two_state(nu0: f64, a: impl Fn(f64) -> (f64, f64), horizon: f64, steps: usize) -> f64 {
    let f = |t: f64, x: f64| {
        let (out, back) = a(t);
        -out * x + back * (1.0 - x)
    };
    let h = horizon / steps as f64;
    let mut x = nu0;
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = f(t, x);
        let k2 = f(t + h / 2.0, x + h / 2.0 * k1);
        let k3 = f(t + h / 2.0, x + h / 2.0 * k2);
        let k4 = f(t + h, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

#[test]
fn two_state_path_matches_fine_reference() {
    let horizon = 2.0;
    let rates = |t: f64| {
        let s = t / horizon;
        ((1.0 - s) * 1.0 + s * 3.0, (1.0 - s) * 1.0 + s * 0.5)
    };
    for start in [0.0, 0.3, 1.0] {
        let reference = rk4_two_state(start, rates, horizon, 1_000_000);
        let nu = ProbabilityDistribution::new(vec![start, 1.0 - start]).unwrap();
        let out = evolve_inhomogeneous(&nu, &q_init(), &q_final(), horizon, 20_000).unwrap();
        assert!(
            (out.get(0) - reference).abs() < 1e-8,
            "start {start}: {} vs {reference}",
            out.get(0)
        );
    }
}

#[test]
fn midpoint_freezing_is_second_order() {
    let horizon = 3.0;
    let lambda = admissible_rate(&[&q_init(), &q_final()]);
    let eye = DMatrix::identity(2, 2);
    let evolve = |steps| {
        evolve_rows(
            &eye,
            &q_init(),
            &q_final(),
            horizon,
            steps,
            lambda,
            SERIES_TOL,
        )
        .unwrap()
    };
    let reference = evolve(8192);
    let deviations: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| (evolve(n) - &reference).amax())
        .collect();
    for pair in deviations.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!(ratio >= 3.0, "deviations {deviations:?}");
    }
}

#[test]
fn evolution_preserves_distributions() {
    let mut r = rng(41);
    for k in 0..30 {
        let n = 2 + k % 5;
        let qa = random_generator(n, &mut r);
        let qb = random_generator(n, &mut r);
        let nu = random_distribution(n, &mut r);
        let horizon = 0.1 + k as f64 * 0.3;
        let out = evolve_inhomogeneous(&nu, &qa, &qb, horizon, 50).unwrap();
        let total: f64 = out.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(out.weights().iter().all(|&w| w >= 0.0));
    }
}

fn generator_strategy() -> impl Strategy<Value = Generator> {
    (2usize..=6, any::<u64>()).prop_map(|(n, seed)| random_generator(n, &mut rng(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn semigroup_property(q in generator_strategy(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let lambda = q.max_departure_rate();
        let joint = transition_matrix(&q, s + t, lambda, SERIES_TOL).unwrap();
        let split = transition_matrix(&q, s, lambda, SERIES_TOL)
            .unwrap()
            .then(&transition_matrix(&q, t, lambda, SERIES_TOL).unwrap())
            .unwrap();
        prop_assert!((joint.entries() - split.entries()).amax() <= 3.0 * SERIES_TOL);
    }

    #[test]
    fn rate_invariance(q in generator_strategy(), t in 0.0f64..5.0, stretch in 1.0f64..4.0) {
        let lambda = q.max_departure_rate();
        let a = transition_matrix(&q, t, lambda, SERIES_TOL).unwrap();
        let b = transition_matrix(&q, t, lambda * stretch, SERIES_TOL).unwrap();
        prop_assert!((a.entries() - b.entries()).amax() <= 2.0 * SERIES_TOL);
    }

    #[test]
    fn agrees_with_matrix_exponential(q in generator_strategy(), t in 0.0f64..10.0) {
        let p = transition_matrix(&q, t, q.max_departure_rate(), SERIES_TOL).unwrap();
        prop_assert!((p.entries() - expm(&(q.rates() * t))).amax() <= 1e-8);
    }
}
