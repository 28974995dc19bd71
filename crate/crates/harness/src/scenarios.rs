//! Scenario files shipped in `scenarios/`, embedded so the binary can run
//! them by name.

use crate::config::{ScenarioConfig, ScenarioError};
use std::path::PathBuf;

pub const BUNDLED: [(&str, &str); 3] = [
    ("reference", include_str!("../scenarios/reference.toml")),
    ("ice_age", include_str!("../scenarios/ice_age.toml")),
    ("moving_mountains", include_str!("../scenarios/moving_mountains.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// A bundled scenario; relative paths in it resolve against the working
/// directory.
pub fn bundled(name: &str) -> Option<Result<ScenarioConfig, ScenarioError>> {
    let (_, text) = BUNDLED.iter().find(|(n, _)| *n == name)?;
    Some(ScenarioConfig::from_toml_str(text, name).map(|mut c| {
        c.base_dir = PathBuf::from(".");
        c
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_is_valid() {
        for name in names() {
            let cfg = bundled(name).unwrap().unwrap();
            assert!(cfg.steps > 0, "{name}");
        }
        assert!(bundled("nope").is_none());
    }
}
