//! `--config` files: `key=value` lines whose keys are long flag names of the
//! chosen subcommand. Flags given on the command line win.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(format!("line {}: `{key}` set twice", i + 1));
        }
    }
    Ok(out)
}

fn flag_given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter().filter_map(|a| a.to_str()).any(|a| a == flag || a.starts_with(&with_value))
}

/// Long flag names of one subcommand and of all subcommands together.
pub struct FlagNames {
    pub own: Vec<String>,
    pub any: Vec<String>,
}

/// Appends `--key=value` for every config entry the command line does not
/// already set. Keys that only other subcommands accept are skipped, so one
/// file can serve `train` and `q-sweep` alike; keys no subcommand accepts are
/// errors.
pub fn merge_config(args: Vec<OsString>, names: &FlagNames) -> Result<Vec<OsString>, String> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        match a.to_str() {
            Some("--config") => path = args.get(i + 1).cloned(),
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => {}
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("config {}: {e}", path.to_string_lossy()))?;
    let entries = parse_key_values(&text).map_err(|e| format!("config {}: {e}", path.to_string_lossy()))?;
    let mut out = args.clone();
    for (key, value) in entries {
        if key == "config" {
            return Err("a config file cannot name another config file".into());
        }
        if !names.own.contains(&key) {
            if names.any.contains(&key) {
                continue;
            }
            return Err(format!("config key `{key}` is not a flag"));
        }
        if !flag_given(&args, &key) {
            out.push(format!("--{key}={value}").into());
        }
    }
    Ok(out)
}
