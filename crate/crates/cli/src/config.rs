//! Flat key=value configuration files and run manifests.

use std::collections::BTreeMap;
use std::path::Path;

pub type FileConfig = BTreeMap<String, String>;

/// Parse a `key=value` file; `#` starts a comment, blank lines are skipped.
pub fn load(path: Option<&Path>) -> Result<FileConfig, String> {
    let mut out = BTreeMap::new();
    let Some(path) = path else {
        return Ok(out);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {}", path.display(), e))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                out.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => {
                return Err(format!(
                    "{}:{}: expected key=value, got '{}'",
                    path.display(),
                    lineno + 1,
                    line
                ));
            }
        }
    }
    Ok(out)
}

/// Resolve one setting: flag beats config beats default.
pub fn resolve<T: std::str::FromStr + Clone>(
    flag: Option<T>,
    config: &FileConfig,
    key: &str,
    default: T,
) -> Result<T, String> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match config.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map_err(|_| format!("config key '{}': cannot parse '{}'", key, raw)),
        None => Ok(default),
    }
}

/// Like [`resolve`] but with no default.
pub fn resolve_opt<T: std::str::FromStr>(
    flag: Option<T>,
    config: &FileConfig,
    key: &str,
) -> Result<Option<T>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match config.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| format!("config key '{}': cannot parse '{}'", key, raw)),
        None => Ok(None),
    }
}

/// Write `<out>.manifest.json` capturing the resolved run settings.
pub fn write_manifest(
    out_path: &Path,
    subcommand: &str,
    settings: &BTreeMap<String, String>,
) -> std::io::Result<()> {
    #[derive(serde::Serialize)]
    struct Manifest<'a> {
        tool: &'static str,
        version: &'static str,
        subcommand: &'a str,
        settings: &'a BTreeMap<String, String>,
    }
    let manifest = Manifest {
        tool: "fixloc",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        settings,
    };
    let mut path = out_path.as_os_str().to_owned();
    path.push(".manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(std::path::PathBuf::from(path), json)
}
