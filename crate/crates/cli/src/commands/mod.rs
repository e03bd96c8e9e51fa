//! One module per subcommand. Each resolves flags and config into a validated plan, then runs it.

pub mod fit;
pub mod generate;
pub mod report;
pub mod simulate;
pub mod solve;
pub mod sweep;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use plsb_core::gains::DEFAULT_EPSILON;

use crate::table::Table;
use crate::{CliError, CliResult};

pub(crate) fn create_output(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_failed(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("cannot write {}: {e}", path.display()))
}

pub(crate) fn print_table(table: &Table, out: &mut dyn Write) -> CliResult<()> {
    table.write_to(out).map_err(CliError::internal)
}

pub(crate) fn epsilon(value: Option<f64>) -> CliResult<f64> {
    let eps = value.unwrap_or(DEFAULT_EPSILON);
    if eps > 0.0 && eps.is_finite() {
        Ok(eps)
    } else {
        Err(CliError::Input(format!("epsilon must be positive, got {eps}")))
    }
}

pub(crate) fn parse_all<T>(names: &[String], what: &str) -> CliResult<Vec<T>>
where
    T: std::str::FromStr<Err = String>,
{
    if names.is_empty() {
        return Err(CliError::Input(format!("no {what} given")));
    }
    names
        .iter()
        .map(|s| s.parse::<T>().map_err(CliError::Input))
        .collect()
}

pub(crate) fn require_path<'a>(path: &'a Option<std::path::PathBuf>, what: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::Input(format!("no {what} given (flag or config)")))
}
