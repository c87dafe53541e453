//! TOML study files.

use std::fs;
use std::path::Path;

use pcurve_core::power::PowerStudyConfig;

use crate::error::CliError;

/// Parse a study file. Schema errors carry the 1-based line they point at.
pub fn parse(text: &str, origin: &str) -> Result<PowerStudyConfig, CliError> {
    let cfg: PowerStudyConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        CliError::Schema {
            origin: origin.to_string(),
            line,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<PowerStudyConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

/// Canonical text of a config. Loading and re-saving it reproduces it byte
/// for byte.
pub fn to_string(cfg: &PowerStudyConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))
}

pub fn save(cfg: &PowerStudyConfig, path: &Path) -> Result<(), CliError> {
    fs::write(path, to_string(cfg)?).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pcurve_core::dgp::{DgpConfig, DgpScenario, SearchStrategy};
    use pcurve_core::pubbias::SelectionRule;

    fn sample() -> PowerStudyConfig {
        let mut c = PowerStudyConfig::new(DgpConfig::new(DgpScenario::Iv), SearchStrategy::ThresholdG2S, 11);
        c.selection = SelectionRule::sharp();
        c.dgp.f_screen = Some(10.0);
        c
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = to_string(&sample()).unwrap();
        let back = parse(&text, "mem").unwrap();
        assert_eq!(back, sample());
        assert_eq!(to_string(&back).unwrap(), text);
    }

    #[test]
    fn unknown_key_reports_line() {
        let mut text = to_string(&sample()).unwrap();
        text = text.replacen("n_obs = 200", "n_obs = 200\nbogus = 1", 1);
        let want = text.lines().position(|l| l.starts_with("bogus")).unwrap() + 1;
        match parse(&text, "mem") {
            Err(CliError::Schema { line, message, .. }) => {
                assert_eq!(line, Some(want));
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_field_is_named() {
        let text = to_string(&sample()).unwrap();
        let text: String = text.lines().filter(|l| !l.starts_with("seed")).map(|l| format!("{l}\n")).collect();
        match parse(&text, "mem") {
            Err(CliError::Schema { message, .. }) => assert!(message.contains("seed"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let text = to_string(&sample()).unwrap().replacen("mc_reps = 500", "mc_reps = 0", 1);
        let e = parse(&text, "mem").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
