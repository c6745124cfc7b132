//! JSON report assembly: every report embeds the resolved config and the
//! crate version, carries bracket or exactness tags on numeric claims,
//! and contains nothing time-dependent, so reruns reproduce it verbatim.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::{json, Value};

pub struct Report {
    doc: Value,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Report {
        Report {
            doc: json!({
                "command": command,
                "version": env!("CARGO_PKG_VERSION"),
                "config": config,
                "results": {},
            }),
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.doc["results"][key] = value;
    }

    pub fn emit(&self, out: Option<&PathBuf>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.doc)?;
        match out {
            Some(path) => {
                std::fs::write(path, text.as_bytes())
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            None => println!("{text}"),
        }
        Ok(())
    }
}

/// A certified interval as a JSON object tagged as a bracket.
pub fn bracket_json(lo: f64, hi: f64) -> Value {
    json!({"kind": "bracket", "lower": lo, "upper": hi})
}

/// An exact rational rendered with its float value.
pub fn exact_json(value: &num_rational::BigRational) -> Value {
    use num_traits::ToPrimitive;
    json!({
        "kind": "exact",
        "numerator": value.numer().to_string(),
        "denominator": value.denom().to_string(),
        "value": value.to_f64().unwrap_or(f64::NAN),
    })
}
