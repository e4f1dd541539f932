//! `key=value` config files, merged into the command line so that explicit
//! flags win over file entries and file entries win over built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::CliError;

/// Parses a config file into `(key, value)` pairs. Blank lines and `#`
/// comments are ignored; keys are long flag names without the dashes.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", n + 1)))?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", n + 1)));
        }
        if key == "config" {
            return Err(CliError::Config(format!("line {}: config files cannot nest", n + 1)));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn config_path(args: &[OsString]) -> Result<Option<OsString>, CliError> {
    let mut found = None;
    for (idx, arg) in args.iter().enumerate() {
        let s = arg.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            let value = args
                .get(idx + 1)
                .ok_or_else(|| CliError::Config("--config needs a path".into()))?;
            found = Some(value.clone());
        } else if let Some(v) = s.strip_prefix("--config=") {
            found = Some(OsString::from(v));
        }
    }
    Ok(found)
}

/// Inserts config entries directly after the subcommand name. Flags later on
/// the command line override them because the parser keeps the last value.
/// Boolean entries become bare switches when true and are dropped when false.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut injected = Vec::new();
    for (key, value) in parse(&text)? {
        match value.as_str() {
            "true" => injected.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                injected.push(OsString::from(format!("--{key}")));
                injected.push(OsString::from(value));
            }
        }
    }
    // args[0] is the program name, args[1] the subcommand
    if args.len() < 2 {
        return Ok(args);
    }
    let mut out = Vec::with_capacity(args.len() + injected.len());
    out.extend_from_slice(&args[..2]);
    out.extend(injected);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_comments() {
        let entries = parse("# sweep\nchannels = 1,2\n\n--reps=3\nmse=true\n").unwrap();
        assert_eq!(
            entries,
            vec![
                ("channels".to_string(), "1,2".to_string()),
                ("reps".to_string(), "3".to_string()),
                ("mse".to_string(), "true".to_string()),
            ]
        );
        assert!(parse("no equals sign").is_err());
        assert!(parse("config=other").is_err());
    }

    #[test]
    fn entries_precede_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "seed=7\ntrace-llk=true\nmse=false\n").unwrap();
        let args: Vec<OsString> = ["lcn", "fit", "--config", path.to_str().unwrap(), "--seed", "9"]
            .iter()
            .map(OsString::from)
            .collect();
        let out: Vec<String> = expand_args(args)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(
            out,
            vec!["lcn", "fit", "--seed", "7", "--trace-llk", "--config", path.to_str().unwrap(), "--seed", "9"]
        );
    }
}
