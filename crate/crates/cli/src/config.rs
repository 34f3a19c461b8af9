//! `--config FILE` support: `key = value` lines become flags of the chosen
//! command unless the same flag is already on the command line.

use std::collections::BTreeSet;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::error::{CliError, CliResult};

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().trim_start_matches('-').to_string();
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_for(key: &str) -> String {
    if key.len() == 1 && key.chars().all(|c| c.is_ascii_uppercase()) {
        format!("-{key}")
    } else {
        format!("--{}", key.replace('_', "-"))
    }
}

fn config_path(args: &[String]) -> CliResult<Option<String>> {
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            return args.get(i + 1).cloned().map(Some).ok_or_else(|| CliError::Usage("--config needs a file".into()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Ok(Some(p.to_string()));
        }
    }
    Ok(None)
}

/// Returns `args` with config-file entries inserted after the subcommand.
pub fn expand_args(args: Vec<String>) -> CliResult<Vec<String>> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(Path::new(&path), e))?;
    let entries = parse_config(&text)?;
    let cmd = Cli::command();
    let Some(sub_pos) = args.iter().skip(1).position(|a| cmd.find_subcommand(a).is_some()).map(|p| p + 1) else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(&args[sub_pos]).expect("subcommand located above");
    let mut known_here = BTreeSet::new();
    let mut takes_value = BTreeSet::new();
    for arg in sub.get_arguments() {
        let names =
            arg.get_long().map(|l| format!("--{l}")).into_iter().chain(arg.get_short().map(|s| format!("-{s}")));
        for n in names {
            if arg.get_action().takes_values() {
                takes_value.insert(n.clone());
            }
            known_here.insert(n);
        }
    }
    let known_anywhere: BTreeSet<String> = cmd
        .get_subcommands()
        .flat_map(|s| s.get_arguments())
        .flat_map(|a| a.get_long().map(|l| format!("--{l}")).into_iter().chain(a.get_short().map(|s| format!("-{s}"))))
        .collect();
    let present = |flag: &str| args.iter().any(|a| a == flag || a.starts_with(&format!("{flag}=")));
    let mut injected = Vec::new();
    for (key, value) in entries {
        let flag = flag_for(&key);
        if flag == "--config" {
            continue;
        }
        if !known_anywhere.contains(&flag) {
            return Err(CliError::Usage(format!("unknown config key `{key}`")));
        }
        if !known_here.contains(&flag) || present(&flag) {
            continue;
        }
        if takes_value.contains(&flag) {
            injected.push(flag);
            injected.push(value);
        } else if matches!(value.as_str(), "true" | "yes" | "1") {
            injected.push(flag);
        }
    }
    let mut out = args;
    out.splice(sub_pos + 1..sub_pos + 1, injected);
    Ok(out)
}
