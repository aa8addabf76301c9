//! The shipped scenario library, embedded so the binary works from anywhere.
//! The same files live in `crates/evd/scenarios/`.

use std::path::Path;

use crate::config::ScenarioConfig;
use crate::error::Result;

pub const BUILTIN: [(&str, &str); 7] = [
    ("rest-state", include_str!("../scenarios/rest-state.toml")),
    ("gravity-settling", include_str!("../scenarios/gravity-settling.toml")),
    ("shear-creep", include_str!("../scenarios/shear-creep.toml")),
    ("rigid-rotation", include_str!("../scenarios/rigid-rotation.toml")),
    ("two-phase-inclusion", include_str!("../scenarios/two-phase-inclusion.toml")),
    ("damage-bar", include_str!("../scenarios/damage-bar.toml")),
    ("diffusion-swelling", include_str!("../scenarios/diffusion-swelling.toml")),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// An existing file path wins over a builtin of the same name.
pub fn resolve(source: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let p = Path::new(source);
    if p.exists() {
        return ScenarioConfig::load(p, overrides);
    }
    match builtin(source) {
        Some(text) => ScenarioConfig::from_toml(text, overrides),
        None => ScenarioConfig::load(p, overrides),
    }
}
