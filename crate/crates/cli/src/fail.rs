use std::fmt::Display;

use spk_core::applications::ApplicationError;
use spk_core::cascade::CascadeError;
use spk_core::consistency::ConsistencyError;
use spk_core::datastats::StatsError;
use spk_core::metrics::MetricsError;
use spk_core::taxonomy::TaxonomyError;
use spk_core::MaskIoError;

/// A failed run, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or configuration (exit 2).
    Invalid(anyhow::Error),
    /// Reading or writing the filesystem failed (exit 3).
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn context(self, what: impl Display) -> Self {
        match self {
            Failure::Invalid(e) => Failure::Invalid(e.context(what.to_string())),
            Failure::Io(e) => Failure::Io(e.context(what.to_string())),
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(e) | Failure::Io(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn invalid(message: impl Display) -> Failure {
    Failure::Invalid(anyhow::anyhow!("{message}"))
}

impl From<MaskIoError> for Failure {
    fn from(e: MaskIoError) -> Self {
        // the message already carries the source, so it is not chained again
        let flat = anyhow::anyhow!("{e}");
        if e.is_io() {
            Failure::Io(flat)
        } else {
            Failure::Invalid(flat)
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(anyhow::anyhow!("{e}"))
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {
        $(impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Invalid(anyhow::anyhow!("{e}"))
            }
        })*
    };
}

invalid_from!(
    ApplicationError,
    CascadeError,
    ConsistencyError,
    StatsError,
    MetricsError,
    TaxonomyError,
    serde_json::Error
);
