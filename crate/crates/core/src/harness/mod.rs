//! Command-line plumbing: run configuration, instance and report documents,
//! seeded instance generators and the brute-force Grassmannian oracle.
//!
//! Every document carries `schemaVersion`. Reports serialize
//! deterministically for a fixed seed except for their `timing` member.

pub mod config;
pub mod docs;
pub mod generate;
pub mod oracle;
pub mod report;
pub mod run;

use serde_json::{json, Value};
use thiserror::Error;

pub use config::{ConfigOverrides, RunConfig, Tolerances, CONFIG_ENV, ENV_PREFIX};
pub use docs::{FormDoc, LemmaDoc, MatrixRows};
pub use oracle::{oracle_grassmann_grid, OracleValue};
pub use report::{Report, Verdict};
pub use run::{round_trip, Command, RoundTrip};

use crate::forms::FormError;
use crate::immersions::ImmersionError;
use crate::spaceforms::SpaceFormError;
use crate::splitting::SplitError;
use crate::warped::WarpedError;

/// Version written to and accepted from every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    Schema { found: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    SpaceForm(#[from] SpaceFormError),
    #[error(transparent)]
    Warped(#[from] WarpedError),
    #[error(transparent)]
    Immersion(#[from] ImmersionError),
}

impl HarnessError {
    pub(crate) fn parse(path: &str, e: &serde_json::Error) -> Self {
        Self::Parse { path: path.to_string(), line: e.line(), column: e.column(), message: e.to_string() }
    }

    /// Short stable name of the error variant, innermost first.
    pub fn kind(&self) -> String {
        fn head(debug: String) -> String {
            debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
        }
        match self {
            Self::Io { .. } => "IoError".into(),
            Self::Parse { .. } => "ParseError".into(),
            Self::Schema { .. } => "SchemaVersion".into(),
            Self::Config(_) => "ConfigError".into(),
            Self::Input(_) => "InvalidInput".into(),
            Self::Form(e) => head(format!("{e:?}")),
            Self::Split(e) => head(format!("{e:?}")),
            Self::SpaceForm(e) => head(format!("{e:?}")),
            Self::Warped(e) => head(format!("{e:?}")),
            Self::Immersion(e) => match e {
                ImmersionError::Form(inner) => head(format!("{inner:?}")),
                ImmersionError::SpaceForm(inner) => head(format!("{inner:?}")),
                ImmersionError::Warped(inner) => head(format!("{inner:?}")),
                other => head(format!("{other:?}")),
            },
        }
    }

    /// Machine-readable fields of the error, when it has any.
    pub fn details(&self) -> Value {
        match self {
            Self::Io { path, .. } => json!({ "path": path }),
            Self::Parse { path, line, column, .. } => json!({ "path": path, "line": line, "column": column }),
            Self::Schema { found } => json!({ "found": found, "expected": SCHEMA_VERSION }),
            Self::SpaceForm(e) | Self::Immersion(ImmersionError::SpaceForm(e)) => space_form_details(e),
            Self::Form(FormError::PTooLarge { p }) => json!({ "p": p }),
            Self::Immersion(ImmersionError::HypothesisViolated { s, point, values }) => {
                json!({ "s": s, "point": point, "values": values })
            }
            Self::Immersion(ImmersionError::NotAdapted { residual, tol }) => json!({ "residual": residual, "tol": tol }),
            _ => Value::Null,
        }
    }

    /// Structured error document printed by the command-line tool.
    pub fn to_doc(&self) -> Value {
        let mut error = json!({ "kind": self.kind(), "message": self.to_string() });
        let details = self.details();
        if !details.is_null() {
            error["details"] = details;
        }
        json!({ "schemaVersion": SCHEMA_VERSION, "error": error })
    }

    /// Exit status: 2 for unusable input, 3 for failed computations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse { .. } | Self::Schema { .. } | Self::Config(_) | Self::Input(_) => 2,
            _ => 3,
        }
    }
}

fn space_form_details(e: &SpaceFormError) -> Value {
    match e {
        SpaceFormError::UmbilicalConstraintViolated { i, j, value, expected } => {
            json!({ "i": i, "j": j, "value": value, "expected": expected })
        }
        SpaceFormError::NotTangent { i, value } => json!({ "i": i, "value": value }),
        SpaceFormError::NonpositiveWarping { i, value } => json!({ "i": i, "value": value }),
        _ => Value::Null,
    }
}

/// Reads and parses a JSON document, checking `schemaVersion` when present.
pub fn read_doc<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_string(), message: e.to_string() })?;
    parse_doc(path, &text)
}

/// [`read_doc`] on a string; `origin` names the source in errors.
pub fn parse_doc<T: serde::de::DeserializeOwned>(origin: &str, text: &str) -> Result<T, HarnessError> {
    let value: Value = serde_json::from_str(text).map_err(|e| HarnessError::parse(origin, &e))?;
    if let Some(v) = value.get("schemaVersion") {
        let found = v.as_u64().ok_or_else(|| HarnessError::Input("schemaVersion must be an integer".into()))? as u32;
        if found != SCHEMA_VERSION {
            return Err(HarnessError::Schema { found });
        }
    }
    // reparse from text so that positions in type errors refer to the file
    serde_json::from_str(text).map_err(|e| HarnessError::parse(origin, &e))
}
