//! Reference matrix exponential by scaling and squaring, independent of the
//! uniformization path. Used to cross-check `transition_matrix`.

use nalgebra::DMatrix;

/// `e^{A}` via a Taylor polynomial on `A/2^s` followed by `s` squarings, with
/// `s` chosen so that `‖A/2^s‖₁ ≤ 1/2`.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    // ‖A‖ ≤ 1/2 makes the k = 30 remainder far below double precision
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_state_closed_form() {
        for t in [0.0, 0.01, 0.3, 1.0, 4.0, 10.0] {
            let q = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]) * t;
            let p = expm(&q);
            let decay = (-2.0 * t).exp();
            assert_abs_diff_eq!(p[(0, 0)], (1.0 + decay) / 2.0, epsilon = 1e-13);
            assert_abs_diff_eq!(p[(0, 1)], (1.0 - decay) / 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, 0.5, 2.0]));
        let e = expm(&a);
        for (i, v) in [-3.0f64, 0.5, 2.0].iter().enumerate() {
            assert_abs_diff_eq!(e[(i, i)], v.exp(), epsilon = 1e-12 * v.exp());
        }
    }
}
