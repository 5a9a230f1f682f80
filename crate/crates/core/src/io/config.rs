//! Model configuration files: TOML with a fixed, versioned schema.
//!
//! Fields left out fall back to the defaults of the baseline architecture
//! (depth 21, factor 3, compression 3:2, 5 repeats). Unknown fields are
//! rejected, and the parsed config is validated structurally before use.

use std::fs;
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::model::ModelConfig;

/// Loads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| {
        CoreError::Config(format!("cannot read `{}`: {e}", path.display()))
    })?;
    parse_config(&text)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ModelConfig> {
    let config: ModelConfig =
        toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Renders a configuration as TOML.
pub fn to_toml(config: &ModelConfig) -> Result<String> {
    toml::to_string_pretty(config).map_err(|e| CoreError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConvOrder, CONFIG_SCHEMA};

    #[test]
    fn default_roundtrips_through_toml() {
        let cfg = ModelConfig::default();
        let text = to_toml(&cfg).unwrap();
        let parsed = parse_config(&text).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn minimal_file_fills_defaults() {
        let text = format!("schema = \"{CONFIG_SCHEMA}\"\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg, ModelConfig::default());
        assert_eq!(cfg.blocks.len(), 5);
        assert_eq!(cfg.blocks[0].depth, 21);
        assert_eq!(cfg.blocks[0].factor, 3);
        assert_eq!(cfg.blocks[0].order, ConvOrder::PointwiseFirst);
        assert_eq!(cfg.blocks[0].compression.unwrap().time, 3);
        assert_eq!(cfg.blocks[0].compression.unwrap().channels, 2);
    }

    #[test]
    fn rejects_wrong_schema() {
        let err = parse_config("schema = \"something-else\"\n").unwrap_err().to_string();
        assert!(err.contains("schema"), "{err}");
    }

    #[test]
    fn rejects_unknown_fields_with_location() {
        let text = format!("schema = \"{CONFIG_SCHEMA}\"\nbanana = 3\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("banana"), "{err}");
    }

    #[test]
    fn rejects_channel_cap_and_bad_chunk_len() {
        let text = format!("schema = \"{CONFIG_SCHEMA}\"\n[c1]\nchannels = 256\ndepth = 9\nstride = 3\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("128"), "{err}");

        let text = format!("schema = \"{CONFIG_SCHEMA}\"\nchunk_len = 5000\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("multiple of 9"), "{err}");
    }

    #[test]
    fn block_sections_override_defaults() {
        let text = format!(
            "schema = \"{CONFIG_SCHEMA}\"\n\n[[block]]\ndepth = 9\n\n[[block]]\ndepth = 15\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.blocks.len(), 2);
        assert_eq!(cfg.blocks[0].depth, 9);
        assert_eq!(cfg.blocks[1].depth, 15);
        assert_eq!(cfg.blocks[1].repeats, 5);
    }
}
