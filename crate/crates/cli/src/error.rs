use std::process::ExitCode;

use vipv_core::comparator::ComparatorError;
use vipv_core::inventory::InventoryError;
use vipv_core::lca::LcaError;
use vipv_core::powertrain::PowertrainError;

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration: exit 2.
    Input(String),
    /// Numerical or solver failure: exit 3.
    Solve(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Solve(_) => ExitCode::from(3),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Solve(m) => write!(f, "solve error: {m}"),
        }
    }
}

impl From<InventoryError> for CliError {
    fn from(e: InventoryError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LcaError> for CliError {
    fn from(e: LcaError) -> Self {
        match e {
            LcaError::NonProductive(_) | LcaError::TooLarge(_) => CliError::Solve(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<PowertrainError> for CliError {
    fn from(e: PowertrainError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Solve(e.to_string())
        }
    }
}

impl From<ComparatorError> for CliError {
    fn from(e: ComparatorError) -> Self {
        match e {
            ComparatorError::Lca(e) => e.into(),
            ComparatorError::Powertrain(e) => e.into(),
            ComparatorError::InvalidScenario(m) => CliError::Input(m),
        }
    }
}
