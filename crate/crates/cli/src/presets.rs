//! Bundled experiment presets selected with `--case`.

use crate::config::{ConfigError, RawConfig};

/// `(name, aliases, ini text)`.
const PRESETS: &[(&str, &[&str], &str)] = &[
    ("case-a", &[], include_str!("../presets/case-a.ini")),
    ("ball-h1", &[], include_str!("../presets/ball-h1.ini")),
    ("annulus", &[], include_str!("../presets/annulus.ini")),
    ("ellipse", &[], include_str!("../presets/ellipse.ini")),
    (
        "alt-phillips-γ43",
        &["alt-phillips-g43", "alt-phillips-gamma43"],
        include_str!("../presets/alt-phillips-g43.ini"),
    ),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

pub fn text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, aliases, _)| *n == name || aliases.contains(&name)).map(|p| p.2)
}

pub fn preset(name: &str) -> Result<RawConfig, ConfigError> {
    let body = text(name).ok_or_else(|| {
        ConfigError::general(
            "--case",
            format!("unknown preset '{name}' (available: {})", names().collect::<Vec<_>>().join(", ")),
        )
    })?;
    RawConfig::parse(body, &format!("preset {name}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn every_preset_parses() {
        for name in names() {
            let raw = preset(name).unwrap();
            ExperimentConfig::from_raw(&raw).unwrap();
        }
        assert!(preset("alt-phillips-g43").is_ok());
        assert!(preset("nope").is_err());
    }
}
