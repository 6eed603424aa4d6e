use std::fmt;

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input detected before any computation (exit code 2).
    Validation(String),
    /// Failure while computing (exit code 3).
    Runtime(String),
}

pub type CmdResult<T> = Result<T, Failure>;

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Runtime(m) => write!(f, "{m}"),
        }
    }
}

pub fn invalid(message: impl Into<String>) -> Failure {
    Failure::Validation(message.into())
}

pub fn runtime(message: impl Into<String>) -> Failure {
    Failure::Runtime(message.into())
}

impl From<kgexplain_core::Error> for Failure {
    fn from(e: kgexplain_core::Error) -> Self {
        use kgexplain_core::Error as E;
        match e {
            E::Parse { .. } | E::Config(_) | E::Checkpoint(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}
