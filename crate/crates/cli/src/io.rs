use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use markov_adiabatic::format::parse_matrix;
use markov_adiabatic::{Error, Generator, StochasticMatrix};
use nalgebra::DMatrix;

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn in_file(path: &Path, err: Error) -> CliError {
    CliError::Core(format!("{}: ", path.display()), err)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    parse_matrix(&read_text(path)?).map_err(|e| in_file(path, e))
}

pub fn read_chain(path: &Path, row_tol: f64) -> Result<StochasticMatrix, CliError> {
    StochasticMatrix::with_tolerance(read_matrix(path)?, row_tol).map_err(|e| in_file(path, e))
}

pub fn read_generator(path: &Path) -> Result<Generator, CliError> {
    Generator::new(read_matrix(path)?).map_err(|e| in_file(path, e))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
