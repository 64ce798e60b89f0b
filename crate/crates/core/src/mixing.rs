//! Exact mixing times by worst-case total-variation decay.
//!
//! The supremum over initial distributions is taken over point masses only:
//! `ν ↦ ‖νPᵗ − π‖_TV` is convex, so its maximum over the simplex sits at a
//! vertex.

use nalgebra::DMatrix;

use crate::chain::{
    check_dim, stationary_distribution, tv_distance_slices, ProbabilityDistribution,
    StochasticMatrix,
};
use crate::continuous::{
    admissible_rate, apply_transition, generator_stationary, Generator, SERIES_TOL,
};
use crate::error::{Error, Result};

pub const DEFAULT_DISCRETE_CAP: usize = 1_000_000;
pub const DEFAULT_CONTINUOUS_CAP: f64 = 1_000.0;

/// Worst-case distance `d(t)` sampled at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingCurve<T> {
    pub times: Vec<T>,
    pub distances: Vec<f64>,
}

impl<T> MixingCurve<T> {
    fn new() -> Self {
        Self {
            times: Vec::new(),
            distances: Vec::new(),
        }
    }

    fn push(&mut self, t: T, d: f64) {
        self.times.push(t);
        self.distances.push(d);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `max_x ‖row_x − π‖_TV` over the rows of `m`.
pub fn worst_case_rows(m: &DMatrix<f64>, pi: &ProbabilityDistribution) -> Result<f64> {
    check_dim(pi.len(), m.ncols())?;
    let n = m.ncols();
    let mut row = vec![0.0; n];
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = m[(i, j)];
        }
        worst = worst.max(tv_distance_slices(&row, pi.weights()));
    }
    Ok(worst.min(1.0))
}

/// `d(t) = max_x ‖δ_x Pᵗ − π‖_TV`.
pub fn worst_case_tv(p: &StochasticMatrix, t: usize, pi: &ProbabilityDistribution) -> Result<f64> {
    check_dim(p.dim(), pi.len())?;
    worst_case_rows(p.power(t).entries(), pi)
}

/// `d(0), d(1), …, d(t_max)`.
pub fn mixing_curve(
    p: &StochasticMatrix,
    pi: &ProbabilityDistribution,
    t_max: usize,
) -> Result<MixingCurve<usize>> {
    check_dim(p.dim(), pi.len())?;
    let mut curve = MixingCurve::new();
    let mut power = DMatrix::identity(p.dim(), p.dim());
    for t in 0..=t_max {
        if t > 0 {
            power = &power * p.entries();
        }
        curve.push(t, worst_case_rows(&power, pi)?);
    }
    Ok(curve)
}

/// Least `t` with `d(t) ≤ eps`, by linear scan from `t = 0`.
pub fn mixing_time(p: &StochasticMatrix, eps: f64, cap: usize) -> Result<usize> {
    let pi = stationary_distribution(p)?;
    mixing_time_with(p, &pi, eps, cap)
}

/// [`mixing_time`] with a precomputed stationary distribution.
pub fn mixing_time_with(
    p: &StochasticMatrix,
    pi: &ProbabilityDistribution,
    eps: f64,
    cap: usize,
) -> Result<usize> {
    check_dim(p.dim(), pi.len())?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("eps", eps, "(0, 1)"));
    }
    let mut power = DMatrix::identity(p.dim(), p.dim());
    let mut distance = worst_case_rows(&power, pi)?;
    for t in 0..=cap {
        if t > 0 {
            power = &power * p.entries();
            distance = worst_case_rows(&power, pi)?;
        }
        if distance <= eps {
            return Ok(t);
        }
    }
    Err(Error::CapExceeded {
        cap: cap as f64,
        last_distance: distance,
    })
}

/// Least grid time `k·resolution ≤ t_cap` with worst-case distance of
/// `e^{tQ}` at most `eps`; over-estimates the true value by less than
/// `resolution`.
pub fn mixing_time_continuous(q: &Generator, eps: f64, t_cap: f64, resolution: f64) -> Result<f64> {
    let curve = mixing_curve_continuous(q, eps, t_cap, resolution)?;
    Ok(curve.times[curve.len() - 1])
}

/// `d(0), d(h), d(2h), …` up to and including the first grid time at which
/// the distance is at most `eps`.
pub fn mixing_curve_continuous(
    q: &Generator,
    eps: f64,
    t_cap: f64,
    resolution: f64,
) -> Result<MixingCurve<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::out_of_range("eps", eps, "(0, 1)"));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::out_of_range("resolution", resolution, "(0, ∞)"));
    }
    if !(t_cap >= 0.0 && t_cap.is_finite()) {
        return Err(Error::out_of_range("t_cap", t_cap, "[0, ∞)"));
    }
    let pi = generator_stationary(q)?;
    let lambda = admissible_rate(&[q]);
    let n = q.dim();
    let grid_points = (t_cap / resolution * (1.0 + 1e-12)).floor() as usize;
    let step_tol = SERIES_TOL / grid_points.max(1) as f64;
    let step = apply_transition(&DMatrix::identity(n, n), q, resolution, lambda, step_tol)?;

    let mut curve = MixingCurve::new();
    let mut current = DMatrix::identity(n, n);
    let mut distance = worst_case_rows(&current, &pi)?;
    for k in 0..=grid_points {
        if k > 0 {
            current = &current * &step;
            distance = worst_case_rows(&current, &pi)?;
        }
        curve.push(k as f64 * resolution, distance);
        if distance <= eps {
            return Ok(curve);
        }
    }
    Err(Error::CapExceeded {
        cap: t_cap,
        last_distance: distance,
    })
}

/// Default grid spacing for [`mixing_time_continuous`]: a thousandth of the cap.
pub fn default_resolution(t_cap: f64) -> f64 {
    1e-3 * t_cap
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain(rows: &[&[f64]]) -> StochasticMatrix {
        StochasticMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn worst_case_examples() {
        let u = ProbabilityDistribution::uniform(2).unwrap();
        let sticky = chain(&[&[0.9, 0.1], &[0.1, 0.9]]);
        assert_eq!(worst_case_tv(&sticky, 0, &u).unwrap(), 0.5);
        let flat = chain(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert_eq!(worst_case_tv(&flat, 1, &u).unwrap(), 0.0);
        assert_abs_diff_eq!(
            worst_case_tv(&sticky, 3, &u).unwrap(),
            0.256,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mixing_time_examples() {
        let flat = chain(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert_eq!(mixing_time(&flat, 0.25, 100).unwrap(), 1);
        let sticky = chain(&[&[0.9, 0.1], &[0.1, 0.9]]);
        assert_eq!(mixing_time(&sticky, 0.25, 100).unwrap(), 4);
    }

    #[test]
    fn identity_never_mixes() {
        let id = StochasticMatrix::identity(2);
        let u = ProbabilityDistribution::uniform(2).unwrap();
        match mixing_time_with(&id, &u, 0.25, 50) {
            Err(Error::CapExceeded { cap, last_distance }) => {
                assert_eq!(cap, 50.0);
                assert_eq!(last_distance, 0.5);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn mixing_time_is_first_crossing() {
        let p = chain(&[&[0.6, 0.4, 0.0], &[0.1, 0.5, 0.4], &[0.0, 0.3, 0.7]]);
        let pi = stationary_distribution(&p).unwrap();
        for eps in [0.3, 0.1, 0.01, 1e-4] {
            let t = mixing_time(&p, eps, 10_000).unwrap();
            assert!(worst_case_tv(&p, t, &pi).unwrap() <= eps);
            if t > 0 {
                assert!(worst_case_tv(&p, t - 1, &pi).unwrap() > eps);
            }
        }
    }

    #[test]
    fn curve_is_monotone() {
        let p = chain(&[&[0.0, 0.5, 0.5], &[0.2, 0.0, 0.8], &[0.6, 0.4, 0.0]]);
        let pi = stationary_distribution(&p).unwrap();
        let curve = mixing_curve(&p, &pi, 60).unwrap();
        for w in curve.distances.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn continuous_examples() {
        let q = Generator::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let t = mixing_time_continuous(&q, 0.25, 10.0, 1e-4).unwrap();
        let exact = 2f64.ln() / 2.0;
        assert!(t >= exact - 1e-12 && t < exact + 1e-4, "t = {t}");
        assert_eq!(mixing_time_continuous(&q, 0.5, 10.0, 1e-3).unwrap(), 0.0);
        assert!(matches!(
            mixing_time_continuous(&Generator::zeros(2), 0.25, 10.0, 0.1),
            Err(Error::Reducible { .. })
        ));
    }

    #[test]
    fn continuous_cap_is_reported() {
        let q = Generator::from_rows(&[vec![-0.01, 0.01], vec![0.01, -0.01]]).unwrap();
        assert!(matches!(
            mixing_time_continuous(&q, 0.01, 1.0, 0.1),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn continuous_agrees_with_uniformized_chain() {
        let q = Generator::from_rows(&[
            vec![-1.2, 0.7, 0.5],
            vec![0.3, -0.4, 0.1],
            vec![0.6, 0.9, -1.5],
        ])
        .unwrap();
        for lambda in [2.0, 4.0, 8.0] {
            let p = crate::continuous::uniformize(&q, lambda)
                .unwrap()
                .jump_chain;
            for eps in [0.25, 0.1] {
                let discrete = mixing_time(&p, eps, 100_000).unwrap() as f64 / lambda;
                let cont = mixing_time_continuous(&q, eps, 100.0, 1e-3).unwrap();
                assert!(
                    (cont - discrete).abs() <= 2.0 / lambda,
                    "λ={lambda} eps={eps}: {cont} vs {discrete}"
                );
            }
        }
    }
}
