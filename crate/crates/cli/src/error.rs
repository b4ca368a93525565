use std::fmt;

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input files, flags or configuration (exit 1).
    Input(String),
    /// The method cannot produce an estimate from valid input (exit 2).
    Method(String),
    /// Anything else (exit 3).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Method(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn input(m: impl Into<String>) -> Self {
        CliError::Input(m.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Method(m) => write!(f, "method failure: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<smeiv::Error> for CliError {
    fn from(e: smeiv::Error) -> Self {
        use smeiv::Error as E;
        let m = e.to_string();
        match e {
            E::InsufficientInstrument(_) => CliError::Method(format!(
                "{m}; the relevance condition needs the covariate law to differ across two instrument values"
            )),
            E::NoValidPoints
            | E::AnchorMasked(_)
            | E::SkedasticRangeTooSmall(_)
            | E::MaskedTarget(_)
            | E::AllRepsFailed => CliError::Method(m),
            E::QuadratureNotConverged(_) | E::GridMismatch => CliError::Internal(m),
            _ => CliError::Input(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
