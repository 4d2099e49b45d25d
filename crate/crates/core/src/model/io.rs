use std::path::Path;

use crate::error::{Error, Result};

use super::SystemModel;

/// Parse the structured-text model format and validate the result.
pub fn parse_model(text: &str) -> Result<SystemModel> {
    let raw: SystemModel = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    SystemModel::new(
        raw.kind,
        raw.boundary_left,
        raw.domain_left,
        raw.a,
        raw.segments,
        raw.deltas,
    )
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SystemModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model(&text)
}

impl SystemModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
