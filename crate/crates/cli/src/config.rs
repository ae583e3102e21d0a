//! Flat `key = value` configuration files.
//!
//! Keys are long flag names of the chosen subcommand. Entries are spliced in
//! ahead of the command-line flags, and later occurrences win, so explicit
//! flags override the file.

use std::path::Path;

use crate::error::{CliError, Result};
use crate::io::read_text;

/// Parsed entries in file order. `#` starts a comment.
pub fn parse(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::parse(path, i + 1, format!("expected key=value, got `{line}`")))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::parse(path, i + 1, "empty key"));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Flag arguments for the entries; `true` becomes a bare switch, `false` is dropped.
pub fn to_args(entries: &[(String, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => args.push(format!("--{k}")),
            "false" => {}
            _ => {
                args.push(format!("--{k}"));
                args.push(v.clone());
            }
        }
    }
    args
}

/// Looks for `--config PATH` or `--config=PATH` in raw arguments.
pub fn find_config(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// `argv` with the config file's flags inserted right after the subcommand name.
pub fn splice(argv: &[String], subcommands: &[&str]) -> Result<Vec<String>> {
    let Some(path) = find_config(argv) else { return Ok(argv.to_vec()) };
    let path = Path::new(&path);
    let entries = parse(&read_text(path)?, path)?;
    let Some(pos) = argv.iter().skip(1).position(|a| subcommands.contains(&a.as_str())) else {
        return Ok(argv.to_vec());
    };
    let at = pos + 2;
    let mut out = argv[..at].to_vec();
    out.extend(to_args(&entries));
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}
