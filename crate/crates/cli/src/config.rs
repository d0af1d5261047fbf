//! `--config` files: one `key=value` per line, `#` comments. Each key names a
//! long flag of the chosen subcommand and is applied only when that flag is
//! absent from the command line, so flags win over the file and the file wins
//! over environment fallbacks and built-in defaults.

use std::ffi::OsString;
use std::path::Path;

use clap::{CommandFactory, FromArgMatches, Parser};

use crate::error::CliError;
use crate::Cli;

pub fn parse_with_config(args: Vec<OsString>) -> Result<Cli, CliError> {
    let first = Cli::try_parse_from(&args).map_err(CliError::Clap)?;
    let Some(path) = first.config.clone() else {
        return Ok(first);
    };
    let entries = read_entries(&path)?;
    let matches = Cli::command()
        .try_get_matches_from(&args)
        .map_err(CliError::Clap)?;
    let (sub_name, _) = matches.subcommand().expect("subcommand is required");
    let root = Cli::command();
    let sub = root
        .find_subcommand(sub_name)
        .expect("parsed subcommand exists");

    let mut extra = Vec::new();
    for (key, value) in entries {
        let Some(arg) = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            return Err(CliError::usage(format!(
                "{}: `{key}` is not a flag of `{sub_name}`",
                path.display()
            )));
        };
        if given_on_command_line(&args, &key) {
            continue;
        }
        let takes_value = arg.get_num_args().is_none_or(|n| n.takes_values());
        if takes_value {
            extra.push(OsString::from(format!("--{key}={value}")));
        } else if matches!(value.as_str(), "true" | "1" | "yes") {
            extra.push(OsString::from(format!("--{key}")));
        } else if !matches!(value.as_str(), "false" | "0" | "no") {
            return Err(CliError::usage(format!(
                "{}: `{key}` expects true or false",
                path.display()
            )));
        }
    }

    let sub_pos = args
        .iter()
        .position(|a| a.to_str() == Some(sub_name))
        .expect("subcommand appears in argv");
    let mut merged = args[..=sub_pos].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[sub_pos + 1..]);
    let matches = Cli::command()
        .try_get_matches_from(merged)
        .map_err(CliError::Clap)?;
    Cli::from_arg_matches(&matches).map_err(CliError::Clap)
}

fn given_on_command_line(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_eq = format!("--{key}=");
    args.iter()
        .filter_map(|a| a.to_str())
        .any(|a| a == flag || a.starts_with(&with_eq))
}

fn read_entries(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "{}:{}: expected key=value",
                path.display(),
                i + 1
            )));
        };
        let key = key.trim().trim_start_matches("--").to_string();
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}
