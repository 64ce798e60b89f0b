//! Plain-text matrix and distribution files.
//!
//! A matrix file holds the dimension `n` on its first line followed by `n`
//! lines of `n` whitespace-separated reals. A distribution file is a single
//! line of reals. Blank lines are ignored. Values are written with 17
//! significant digits so every `f64` survives a round trip.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn parse_value(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{token}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("`{token}` is not finite"),
        });
    }
    Ok(v)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing dimension line".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line: header_line,
        message: format!("`{header}` is not a dimension"),
    })?;
    if n == 0 {
        return Err(Error::Parse {
            line: header_line,
            message: "dimension must be positive".into(),
        });
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for row in 0..n {
        let (line, content) = lines.next().ok_or(Error::Parse {
            line: header_line + row + 1,
            message: format!("expected {n} rows, found {row}"),
        })?;
        let values = content
            .split_whitespace()
            .map(|t| parse_value(t, line))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(Error::Parse {
                line,
                message: format!("expected {n} values, found {}", values.len()),
            });
        }
        for (col, v) in values.into_iter().enumerate() {
            m[(row, col)] = v;
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            message: format!("unexpected content after {n} rows"),
        });
    }
    Ok(m)
}

pub fn parse_distribution(text: &str) -> Result<Vec<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, content) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty distribution".into(),
    })?;
    if let Some((extra, _)) = lines.next() {
        return Err(Error::Parse {
            line: extra,
            message: "distribution must be a single line".into(),
        });
    }
    content
        .split_whitespace()
        .map(|t| parse_value(t, line))
        .collect()
}

/// Formats with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix(m: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_value(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn write_distribution(weights: &[f64]) -> String {
    let row: Vec<String> = weights.iter().map(|&w| format_value(w)).collect();
    format!("{}\n", row.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_the_documented_layout() {
        let m = parse_matrix("2\n0.9 0.1\n  0.1   0.9  \n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.1, 0.9]));
        assert_eq!(parse_distribution("0.5 0.5\n").unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "x\n",
            "0\n",
            "2\n1 0\n",
            "2\n1 0\n0\n",
            "2\n1 0\n0 1\n5 5\n",
            "2\n1 NaN\n0 1\n",
            "2\n1 inf\n0 1\n",
            "2\n1 zero\n0 1\n",
        ] {
            assert!(parse_matrix(bad).is_err(), "accepted {bad:?}");
        }
        assert!(parse_distribution("0.5 nan").is_err());
        assert!(parse_distribution("0.5\n0.5").is_err());
    }

    #[test]
    fn error_names_the_line() {
        match parse_matrix("2\n1 0\n0 oops\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn matrices_round_trip_bit_exactly(
            (n, values) in (1usize..=5).prop_flat_map(|n| (Just(n), prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), n * n)))
        ) {
            let m = DMatrix::from_row_slice(n, n, &values);
            let back = parse_matrix(&write_matrix(&m)).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
