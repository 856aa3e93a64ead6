//! Argument parsing. Every config key doubles as a global `--flag`.

use std::path::Path;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::config::{clearance_keys, flag_name, RunConfig, CLEARANCE_HELP, KEYS, SEED_ENV};
use crate::error::{CliError, Result};

const CONFIG_HEADING: &str = "Configuration";

fn shown(default: &str) -> &str {
    if default.is_empty() {
        "none"
    } else {
        default
    }
}

fn key_arg(name: String, help: String) -> Arg {
    Arg::new(name.clone())
        .long(flag_name(&name))
        .value_name("VALUE")
        .global(true)
        .action(ArgAction::Set)
        .help_heading(CONFIG_HEADING)
        .help(help)
}

pub fn command() -> Command {
    let mut cmd = Command::new("geopeg")
        .about("Dual-arm peg-in-hole simulation, scripted demonstrations, behavior cloning and evaluation")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help(
            "Values resolve as flag > config file > built-in default. Config files hold one \
             `key = value` per line; keys are the flag names with '_' for '-'.",
        )
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .global(true)
                .help("Config file of key = value lines [default: none]"),
        );
    for k in KEYS {
        let help = if k.name == "seed" {
            format!("{} [default: {}, or ${SEED_ENV}]", k.help, k.default)
        } else {
            format!("{} [default: {}]", k.help, shown(k.default))
        };
        cmd = cmd.arg(key_arg(k.name.to_string(), help));
    }
    for k in clearance_keys() {
        cmd = cmd.arg(key_arg(k, format!("{CLEARANCE_HELP} [default: none]")));
    }
    cmd.subcommand(
        Command::new("gen-demos")
            .about("Generate scripted expert demonstrations and save them to `dataset`"),
    )
    .subcommand(
        Command::new("train")
            .about("Train a behavior-cloning policy on `dataset`; write `checkpoint` and `curve`"),
    )
    .subcommand(
        Command::new("eval")
            .about("Evaluate `policy` over the variation/object-set grid; write reports to `out`")
            .arg(
                Arg::new("grid")
                    .long("grid")
                    .value_name("SPEC")
                    .num_args(1..)
                    .action(ArgAction::Append)
                    .help(
                        "Grid as `variations=XT,ZT objects=order-all`; sets grid_variations \
                         and grid_objects [default: none]",
                    ),
            ),
    )
    .subcommand(
        Command::new("render").about(
            "Render every shape and view at the show, align and insert waypoints into `out`",
        ),
    )
    .subcommand(
        Command::new("inspect")
            .about("Print the manifest and statistics of a dataset, or the header of a checkpoint")
            .arg(
                Arg::new("path")
                    .value_name("PATH")
                    .help("File to inspect [default: the `dataset` value]"),
            ),
    )
    .subcommand(Command::new("config").about("Print the resolved configuration in file form"))
}

/// Builds the run configuration from defaults, the config file and flags.
pub fn resolve(matches: &ArgMatches) -> Result<RunConfig> {
    let mut c = RunConfig::from_env()?;
    if let Some(p) = matches.get_one::<String>("config") {
        c.apply_file(Path::new(p))?;
    }
    let keys = KEYS
        .iter()
        .map(|k| k.name.to_string())
        .chain(clearance_keys());
    for k in keys {
        if let Some(v) = matches.get_one::<String>(&k) {
            c.set(&k, v)
                .map_err(|e| CliError::config(format!("--{}: {e}", flag_name(&k))))?;
        }
    }
    if let Ok(Some(specs)) = matches.try_get_many::<String>("grid") {
        for spec in specs {
            let (k, v) = spec.split_once('=').ok_or_else(|| {
                CliError::config(format!("--grid: expected key=value, got `{spec}`"))
            })?;
            let key = match k.trim() {
                "variations" | "variation" => "grid_variations",
                "objects" | "object_sets" | "object_set" => "grid_objects",
                other => {
                    return Err(CliError::config(format!("--grid: unknown axis `{other}`")));
                }
            };
            c.set(key, v)
                .map_err(|e| CliError::config(format!("--grid: {e}")))?;
        }
    }
    c.validate()?;
    Ok(c)
}
