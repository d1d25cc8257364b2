use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kgreason::KnowledgeGraph;
use serde::Serialize;
use serde_json::{json, Map, Value};

/// The resolved run configuration embedded in every output. Worker count
/// and output paths are left out so that outputs compare byte-for-byte.
pub fn config<A: Serialize>(subcommand: &str, args: &A) -> Result<Value> {
    Ok(json!({
        "subcommand": subcommand,
        "version": env!("CARGO_PKG_VERSION"),
        "args": serde_json::to_value(args)?,
    }))
}

/// JSON numbers cannot hold infinities.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn tsv_header(config: &Value) -> String {
    format!("# config: {config}\n")
}

pub fn json_document(config: Value, body: Value) -> Result<String> {
    let mut doc = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    doc.insert("config".into(), config);
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
    text.push('\n');
    Ok(text)
}

pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `<path>.entities.tsv` and `<path>.relations.tsv`, mapping names to the
/// ids used inside `path`.
pub fn write_sidecars(path: &Path, g: &KnowledgeGraph) -> Result<()> {
    for (suffix, vocab) in [(".entities.tsv", g.entities()), (".relations.tsv", g.relations())] {
        let p = with_suffix(path, suffix);
        let mut buf = Vec::new();
        vocab.write_sidecar(&mut buf)?;
        fs::write(&p, buf).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}
