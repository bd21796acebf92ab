use clap::Command;
use serde_json::{json, Value};

fn arg(a: &clap::Arg) -> Value {
    let possible: Vec<String> = a
        .get_possible_values()
        .iter()
        .map(|v| v.get_name().to_string())
        .collect();
    let defaults: Vec<String> = a
        .get_default_values()
        .iter()
        .map(|v| v.to_string_lossy().into_owned())
        .collect();
    json!({
        "id": a.get_id().as_str(),
        "long": a.get_long(),
        "short": a.get_short().map(String::from),
        "positional": a.is_positional(),
        "help": a.get_help().map(|h| h.to_string()),
        "required": a.is_required_set(),
        "takes_value": a.get_action().takes_values(),
        "multiple": a.get_num_args().is_some_and(|n| n.max_values() > 1),
        "global": a.is_global_set(),
        "default": defaults,
        "possible_values": possible,
    })
}

/// Machine-readable command tree.
pub fn describe(cmd: &Command) -> Value {
    let args: Vec<Value> = cmd
        .get_arguments()
        .filter(|a| !matches!(a.get_id().as_str(), "help" | "version"))
        .map(arg)
        .collect();
    let subs: Vec<Value> = cmd
        .get_subcommands()
        .filter(|s| s.get_name() != "help")
        .map(describe)
        .collect();
    json!({
        "name": cmd.get_name(),
        "version": cmd.get_version(),
        "about": cmd.get_about().map(|h| h.to_string()),
        "args": args,
        "subcommands": subs,
    })
}
