//! Series files, number formatting and the rc-v1 output envelope.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use riemann::numerics::{format_float, roundtrip_digits, BigComplex};
use riemann::series::{Series, TruncatedSeries};
use serde_json::{json, Map, Value};

use crate::Failure;

pub const FORMAT: &str = "rc-v1";

/// Decimal string for a real, complex as [re, im].
pub fn num(z: &BigComplex, digits: usize) -> Value {
    if z.im.is_zero() {
        Value::String(format_float(&z.re, digits))
    } else {
        json!([format_float(&z.re, digits), format_float(&z.im, digits)])
    }
}

pub fn digits_for(bits: u32) -> usize {
    roundtrip_digits(bits)
}

fn entry(v: &Value, bits: u32) -> Result<BigComplex, String> {
    let part = |v: &Value| -> Result<BigComplex, String> {
        let s = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            other => return Err(format!("bad coefficient {other}")),
        };
        BigComplex::parse(&s, bits).map_err(|e| e.to_string())
    };
    match v {
        Value::Array(a) if a.len() == 2 => {
            let re = part(&a[0])?;
            let im = part(&a[1])?;
            Ok(&re + &im.mul_i())
        }
        Value::Array(_) => Err("complex coefficients are [re, im]".into()),
        other => part(other),
    }
}

/// Reads {"label": …, "coefficients": […]}; "p/q" entries are accepted when
/// "rational" is set and rounded once to the working precision.
pub fn read_series(path: &Path, bits: u32) -> Result<Series, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::fatal(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::fatal(format!("{}: {e}", path.display())))?;
    let coeffs = v
        .get("coefficients")
        .and_then(Value::as_array)
        .ok_or_else(|| Failure::fatal(format!("{}: missing \"coefficients\" array", path.display())))?;
    let rational = v.get("rational").and_then(Value::as_bool).unwrap_or(false);
    let mut c = Vec::with_capacity(coeffs.len());
    for (k, x) in coeffs.iter().enumerate() {
        if !rational && x.as_str().is_some_and(|s| s.contains('/')) {
            return Err(Failure::fatal(format!("{}: coefficient {k} is a ratio but \"rational\" is not set", path.display())));
        }
        c.push(entry(x, bits).map_err(|e| Failure::fatal(format!("{}: coefficient {k}: {e}", path.display())))?);
    }
    let label = v.get("label").and_then(Value::as_str).unwrap_or("").to_string();
    TruncatedSeries::new(c).map(|s| s.labeled(label)).map_err(|e| Failure::fatal(format!("{}: {e}", path.display())))
}

pub fn series_json(p: &Series, digits: usize) -> Value {
    json!({
        "label": p.label,
        "coefficients": p.coeffs.iter().map(|c| num(c, digits)).collect::<Vec<_>>(),
    })
}

/// Everything needed to rerun a command.
pub struct Provenance {
    pub command: String,
    pub arguments: Vec<String>,
    pub digits: u32,
    pub inputs: Vec<(PathBuf, Series)>,
}

impl Provenance {
    pub fn to_json(&self) -> Value {
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|(p, s)| json!({"path": p.display().to_string(), "label": s.label, "terms": s.order()}))
            .collect();
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "library_version": riemann::VERSION,
            "command": self.command,
            "arguments": self.arguments,
            "precision_digits": self.digits,
            "inputs": inputs,
        })
    }

    pub fn envelope(&self, result: Value) -> Value {
        let mut m = Map::new();
        m.insert("format".into(), json!(FORMAT));
        m.insert("provenance".into(), self.to_json());
        m.insert("result".into(), result);
        Value::Object(m)
    }
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::fatal(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::fatal(e.to_string()))
        }
    }
}

pub fn write_json(path: Option<&Path>, v: &Value) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    write_text(path, &s)
}

/// CSV with a header row; `None` writes to stdout.
pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::fatal(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::fatal(e.to_string()))?;
    write_text(path, &String::from_utf8(bytes).expect("csv of ascii numbers"))
}
