//! Flat `key = value` config files, merged in front of the command-line
//! flags of the chosen subcommand so that explicit flags win.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Command};

#[derive(Debug)]
pub struct ConfigError(pub String);

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if line.starts_with('[') {
            return Err(ConfigError(format!(
                "line {}: sections are not supported; use flat key = value lines",
                i + 1
            )));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(ConfigError(format!("line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(out)
}

/// Options taking a value that may appear before the subcommand.
const GLOBAL_VALUED: [&str; 3] = ["--config", "--output", "--csv"];

/// Value of `--config` (either `--config FILE` or `--config=FILE`), found
/// before clap parses anything so config entries can fill required flags.
pub fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Names of the nested subcommands selected by `argv`.
pub fn subcommand_path(root: &Command, argv: &[OsString]) -> Vec<String> {
    let mut path = Vec::new();
    let mut cmd = root;
    let mut skip_value = false;
    for a in argv.iter().skip(1) {
        let a = a.to_string_lossy();
        if skip_value {
            skip_value = false;
            continue;
        }
        if a.starts_with('-') {
            skip_value = GLOBAL_VALUED.contains(&a.as_ref());
            continue;
        }
        match cmd.find_subcommand(a.as_ref()) {
            Some(sub) => {
                path.push(a.into_owned());
                cmd = sub;
            }
            None if cmd.has_subcommands() => break,
            None => {}
        }
        if !cmd.has_subcommands() {
            break;
        }
    }
    path
}

/// Inserts `--key value` pairs right after the subcommand path in `argv`.
pub fn merge_into_args(
    root: &Command,
    argv: &[OsString],
    path: &[String],
    config: &BTreeMap<String, String>,
) -> Result<Vec<OsString>, ConfigError> {
    let mut cmd = root;
    for name in path {
        cmd = cmd
            .find_subcommand(name)
            .ok_or_else(|| ConfigError(format!("unknown subcommand '{name}'")))?;
    }
    let mut injected = Vec::new();
    for (key, value) in config {
        let arg = cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| {
                ConfigError(format!("unknown config key '{key}' for '{}'", path.join(" ")))
            })?;
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "yes" | "1" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "no" | "0" => {}
                other => {
                    return Err(ConfigError(format!(
                        "config key '{key}' expects true or false, got '{other}'"
                    )))
                }
            },
            _ => {
                injected.push(OsString::from(format!("--{key}")));
                injected.push(OsString::from(value));
            }
        }
    }
    // The path names appear in order after the global options.
    let mut at = 1;
    for name in path {
        at = argv[at..]
            .iter()
            .position(|a| a == name.as_str())
            .map(|p| at + p + 1)
            .ok_or_else(|| ConfigError(format!("subcommand '{name}' not found in arguments")))?;
    }
    let mut out = argv[..at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_underscores() {
        let c = parse_config("# run\nbasis_size = 40\n; x\n\ntop=3\n").unwrap();
        assert_eq!(c["basis-size"], "40");
        assert_eq!(c["top"], "3");
    }

    #[test]
    fn finds_path_and_config() {
        use clap::{Arg, ArgAction};
        let root = Command::new("omega")
            .arg(Arg::new("config").long("config").global(true).action(ArgAction::Set))
            .subcommand(Command::new("catalog").subcommand(Command::new("sphere")))
            .subcommand(Command::new("mesh"));
        let argv: Vec<OsString> = ["omega", "--config", "mesh", "catalog", "sphere", "--dim", "2"]
            .iter()
            .map(OsString::from)
            .collect();
        assert_eq!(subcommand_path(&root, &argv), vec!["catalog", "sphere"]);
        assert_eq!(config_path(&argv), Some(PathBuf::from("mesh")));
        let eq: Vec<OsString> = ["omega", "mesh", "--config=a.cfg"].iter().map(OsString::from).collect();
        assert_eq!(config_path(&eq), Some(PathBuf::from("a.cfg")));
    }

    #[test]
    fn rejects_sections_and_duplicates() {
        assert!(parse_config("[mesh]\n").is_err());
        assert!(parse_config("a = 1\na = 2\n").is_err());
        assert!(parse_config("novalue\n").is_err());
    }
}
