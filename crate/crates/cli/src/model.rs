//! Ising model files, e.g.
//!
//! ```toml
//! n = 3
//! beta = 0.5
//! J = [[0, 1, 1.0], [1, 2, 1.0]]
//! h = [[0, 0.2]]
//! ```
//!
//! Each `J` triple sets `J_ij = J_ji`; unlisted couplings and fields are 0.

use std::path::Path;

use markov_adiabatic::IsingModel;
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::{io, CliError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n: usize,
    beta: f64,
    #[serde(rename = "J", default)]
    couplings: Vec<(usize, usize, f64)>,
    #[serde(default)]
    h: Vec<(usize, f64)>,
}

pub fn parse_model(text: &str) -> Result<IsingModel, String> {
    let file: ModelFile = toml::from_str(text).map_err(|e| e.to_string())?;
    let n = file.n;
    let mut j = DMatrix::<f64>::zeros(n, n);
    for &(a, b, v) in &file.couplings {
        if a >= n || b >= n {
            return Err(format!("coupling ({a}, {b}) names a spin outside 0..{n}"));
        }
        if a == b {
            return Err(format!("self-coupling on spin {a}"));
        }
        j[(a, b)] = v;
        j[(b, a)] = v;
    }
    let mut fields = vec![0.0; n];
    for &(a, v) in &file.h {
        if a >= n {
            return Err(format!("field on spin {a} outside 0..{n}"));
        }
        fields[a] = v;
    }
    IsingModel::new(j, fields, file.beta).map_err(|e| e.to_string())
}

pub fn read_model(path: &Path) -> Result<IsingModel, CliError> {
    parse_model(&io::read_text(path)?).map_err(|m| {
        CliError::Core(
            format!("{}: ", path.display()),
            markov_adiabatic::Error::Parse {
                line: 0,
                message: m,
            },
        )
    })
}
