//! `key=value` configuration files merged under command-line flags.

use std::path::Path;

/// Parsed `key=value` entries in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigFile {
    pub entries: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Io(String),
    Syntax(String),
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Blank lines and lines starting with `#` are skipped. Keys may be
    /// written with or without the leading `--`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax(format!(
                    "config line {}: expected key=value",
                    lineno + 1
                )));
            };
            let key = key.trim().trim_start_matches("--");
            if key.is_empty() || key == "config" {
                return Err(ConfigError::Syntax(format!(
                    "config line {}: invalid key",
                    lineno + 1
                )));
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    /// Entries as flags. Boolean switches use `true`/`false`; `false` drops
    /// the switch.
    pub fn to_flags(&self, switches: &[&str]) -> Vec<String> {
        let mut flags = Vec::new();
        for (key, value) in &self.entries {
            if switches.contains(&key.as_str()) {
                if value == "true" {
                    flags.push(format!("--{key}"));
                }
                continue;
            }
            flags.push(format!("--{key}"));
            flags.push(value.clone());
        }
        flags
    }
}

/// Removes `--config PATH` / `--config=PATH` from `args`, returning the path.
pub fn take_config_path(args: &mut Vec<String>) -> Option<String> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" && i + 1 < args.len() {
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    path
}
