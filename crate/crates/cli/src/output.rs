use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::Value;

use crate::Failure;

/// Number formatting shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct Fmt {
    pub full: bool,
}

impl Fmt {
    pub fn num(&self, v: f64) -> String {
        if self.full || !v.is_finite() || v == 0.0 {
            return v.to_string();
        }
        // 9 significant digits, then the shortest representation of the rounded value
        let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
        rounded.to_string()
    }

    pub fn json(&self, v: &Value) -> Value {
        match v {
            Value::Number(n) if !self.full && n.is_f64() => {
                let x = n.as_f64().expect("f64 number");
                let r: f64 = self.num(x).parse().expect("formatted float parses");
                serde_json::Number::from_f64(r)
                    .map(Value::Number)
                    .unwrap_or(Value::Null)
            }
            Value::Array(a) => Value::Array(a.iter().map(|x| self.json(x)).collect()),
            Value::Object(o) => {
                Value::Object(o.iter().map(|(k, x)| (k.clone(), self.json(x))).collect())
            }
            other => other.clone(),
        }
    }

    pub fn json_string<T: serde::Serialize>(&self, v: &T) -> Result<String, Failure> {
        let value = serde_json::to_value(v)
            .map_err(|e| Failure::config(format!("cannot serialize output: {e}")))?;
        serde_json::to_string_pretty(&self.json(&value)).map_err(|e| Failure::config(e.to_string()))
    }
}

/// Stdout when `path` is absent.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn write_all(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let mut w = sink(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Failure::io(e.to_string()))
}

pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}
