use std::io::Write;
use std::path::Path;

use conecap_core::VERSION;
use serde::Serialize;
use serde_json::Value;

use crate::commands::{Outcome, Status};
use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Serialize)]
struct Document<'a> {
    artifact: &'static str,
    version: &'static str,
    run_config: &'a RunConfig,
    status: &'static str,
    result: &'a Value,
}

fn status_tag(s: &Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::Budget(_) => "scan-budget-exceeded",
        Status::Audit(_) => "audit-failed",
    }
}

pub fn render_json(cfg: &RunConfig, o: &Outcome) -> Result<String, CliError> {
    let doc = Document { artifact: "conecap", version: VERSION, run_config: cfg, status: status_tag(&o.status), result: &o.result };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// `path,value` rows of every leaf of a JSON value.
fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let join = |k: &str| if prefix.is_empty() { k.to_owned() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        Value::String(s) => out.push_str(&format!("{},{}\n", quote(prefix), quote(s))),
        Value::Null => out.push_str(&format!("{},\n", quote(prefix))),
        other => out.push_str(&format!("{},{}\n", quote(prefix), other)),
    }
}

pub fn render_csv(cfg: &RunConfig, o: &Outcome) -> Result<String, CliError> {
    let config = serde_json::to_string(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    let mut text = format!("# conecap {VERSION}\n# run_config {config}\n# status {}\n", status_tag(&o.status));
    match &o.csv {
        Some(body) => text.push_str(body),
        None => {
            text.push_str("path,value\n");
            flatten("", &o.result, &mut text);
        }
    }
    Ok(text)
}

fn render(cfg: &RunConfig, o: &Outcome, f: Format) -> Result<String, CliError> {
    match f {
        Format::Json => render_json(cfg, o),
        Format::Csv => render_csv(cfg, o),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes the chosen format to `--out` or stdout. Commands with a dedicated
/// table (the spectrum) also write the other format next to `--out`, with
/// the extension swapped.
pub fn write(cfg: &RunConfig, o: &Outcome) -> Result<(), CliError> {
    let text = render(cfg, o, cfg.format)?;
    match &cfg.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        }
        Some(path) => {
            write_file(path, &text)?;
            if o.csv.is_some() {
                let other = cfg.format.other();
                let companion = path.with_extension(other.extension());
                if companion != *path {
                    write_file(&companion, &render(cfg, o, other)?)?;
                }
            }
        }
    }
    Ok(())
}
