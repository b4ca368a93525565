use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smeiv::oracle::DgpSpec;

use crate::error::{CliError, CliResult};

/// Reads a JSON config, or the defaults when no file is given. Unknown keys are rejected.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
        }
    }
}

/// SHA-256 of the compact JSON form of the effective configuration.
pub fn hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A catalog id or an inline specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecRef {
    Catalog(String),
    Inline(Box<DgpSpec>),
}

impl SpecRef {
    pub fn resolve(&self) -> CliResult<DgpSpec> {
        let spec = match self {
            SpecRef::Catalog(id) => DgpSpec::catalog(id)?,
            SpecRef::Inline(s) => (**s).clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `--spec` argument: a catalog id, or a path to a JSON specification.
pub fn spec_from_arg(arg: &str) -> CliResult<DgpSpec> {
    let p = Path::new(arg);
    if arg.ends_with(".json") || p.is_file() {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::input(format!("{arg}: {e}")))?;
        let r: SpecRef = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{arg}: {e}")))?;
        r.resolve()
    } else {
        SpecRef::Catalog(arg.to_string()).resolve()
    }
}
