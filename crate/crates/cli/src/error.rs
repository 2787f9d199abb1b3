use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, inputs or output location.
    Validation(String),
    /// A numerical routine failed while running.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<polyvar::Error> for CliError {
    fn from(e: polyvar::Error) -> Self {
        use polyvar::Error::*;
        match e {
            Argument(_) | Parse { .. } | UnsupportedDomain(_) | Resource(_) => CliError::Validation(e.to_string()),
            Evaluation(_) | Invariant(_) => CliError::Numerical(e.to_string()),
        }
    }
}
