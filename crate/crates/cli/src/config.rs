//! `--config FILE` support.
//!
//! The file is TOML. Top-level keys apply to every subcommand that has a flag
//! of that name; keys inside a `[sweep]`, `[mc]`, ... table apply to that
//! subcommand only. Values are spliced in as flags directly after the
//! subcommand name, so flags given on the command line override them.

use std::ffi::OsString;
use std::fs;

use clap::CommandFactory;
use toml::{Table, Value};

use crate::cli::Cli;
use crate::error::CliError;

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn subcommand_position(args: &[OsString], names: &[String]) -> Option<usize> {
    let mut skip_next = false;
    for (i, a) in args.iter().enumerate().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        let s = a.to_string_lossy();
        if s == "--config" {
            skip_next = true;
        } else if names.iter().any(|n| *n == s) {
            return Some(i);
        }
    }
    None
}

fn render(key: &str, value: &Value) -> Result<Option<String>, CliError> {
    let flag = format!("--{}", key.replace('_', "-"));
    let text = match value {
        Value::Boolean(true) => return Ok(Some(flag)),
        Value::Boolean(false) => return Ok(None),
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Integer(i) => Ok(i.to_string()),
                Value::Float(f) => Ok(f.to_string()),
                _ => Err(CliError::Usage(format!(
                    "config key '{key}': unsupported list element"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        _ => {
            return Err(CliError::Usage(format!(
                "config key '{key}': unsupported value"
            )))
        }
    };
    Ok(Some(format!("{flag}={text}")))
}

/// Returns `args` with flags from the config file inserted.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| {
        CliError::Usage(format!(
            "cannot read config {}: {e}",
            path.to_string_lossy()
        ))
    })?;
    let table: Table = text
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.to_string_lossy())))?;

    let cmd = Cli::command();
    let names: Vec<String> = cmd
        .get_subcommands()
        .map(|s| s.get_name().to_string())
        .collect();
    let Some(pos) = subcommand_position(&args, &names) else {
        return Ok(args);
    };
    let name = args[pos].to_string_lossy().into_owned();
    let sub = cmd.find_subcommand(&name).expect("known subcommand");
    let accepts = |key: &str| {
        let long = key.replace('_', "-");
        sub.get_arguments().any(|a| {
            a.get_long() == Some(long.as_str())
                || a.get_all_aliases()
                    .is_some_and(|al| al.contains(&long.as_str()))
        })
    };

    let mut injected = Vec::new();
    for (key, value) in &table {
        if names.contains(key) || key == "config" {
            continue;
        }
        if accepts(key) {
            injected.extend(render(key, value)?);
        }
    }
    if let Some(section) = table.get(&name) {
        let section = section
            .as_table()
            .ok_or_else(|| CliError::Usage(format!("config entry '{name}' must be a table")))?;
        for (key, value) in section {
            injected.extend(render(key, value)?);
        }
    }

    let mut out = args[..=pos].to_vec();
    out.extend(injected.into_iter().map(OsString::from));
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}
