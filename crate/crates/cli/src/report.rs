//! Tabular reports written as CSV or JSON.
//!
//! CSV layout: `#`-prefixed lines carrying the reproducibility block, one
//! header row, the data rows, optional footer rows (aggregates, labelled in
//! the first column), then `# summary` lines and a final `# complete` or
//! `# incomplete: <reason>` line. JSON carries the same fields as one object.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub footer: Vec<Vec<Value>>,
    pub summary: Map<String, Value>,
    pub incomplete: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Self {
            command,
            columns: columns.to_vec(),
            rows: Vec::new(),
            footer: Vec::new(),
            summary: Map::new(),
            incomplete: None,
        }
    }

    pub fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn footer_row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.footer.push(values);
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Adds `<key>_nats` and `<key>_bits`.
    pub fn set_nats(&mut self, key: &str, nats: f64) {
        self.set(&format!("{key}_nats"), num(nats));
        self.set(&format!("{key}_bits"), num(nats / std::f64::consts::LN_2));
    }

    pub fn write(&self, out: &mut dyn Write, format: Format, prov: &Provenance) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(out, prov),
            Format::Json => self.write_json(out, prov),
        }
    }

    fn write_csv(&self, out: &mut dyn Write, prov: &Provenance) -> Result<(), CliError> {
        writeln!(out, "# tool: {} {}", prov.tool, prov.version)?;
        writeln!(out, "# command: {}", prov.command)?;
        writeln!(out, "# config: {}", serde_json::to_string(&prov.config)?)?;
        if let Some(t) = prov.generated_at {
            writeln!(out, "# generated_at: {t}")?;
        }
        {
            let mut w = csv::WriterBuilder::new().from_writer(&mut *out);
            w.write_record(&self.columns)?;
            for row in self.rows.iter().chain(&self.footer) {
                w.write_record(row.iter().map(cell))?;
            }
            w.flush()?;
        }
        for (k, v) in &self.summary {
            writeln!(out, "# summary {k}: {}", cell(v))?;
        }
        match &self.incomplete {
            None => writeln!(out, "# complete")?,
            Some(reason) => writeln!(out, "# incomplete: {reason}")?,
        }
        Ok(())
    }

    fn write_json(&self, out: &mut dyn Write, prov: &Provenance) -> Result<(), CliError> {
        let to_objects = |rows: &[Vec<Value>]| -> Vec<Value> {
            rows.iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.to_string(), v.clone()))
                            .collect(),
                    )
                })
                .collect()
        };
        let doc = json!({
            "reproducibility": prov,
            "columns": self.columns,
            "rows": to_objects(&self.rows),
            "footer": to_objects(&self.footer),
            "summary": self.summary,
            "complete": self.incomplete.is_none(),
            "incomplete_reason": self.incomplete,
        });
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        writeln!(out)?;
        Ok(())
    }
}

/// A float as JSON; `-0` prints as `0`, non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x == 0.0 {
        json!(0.0)
    } else if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("NaN")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            tool: "cdg",
            version: "0",
            command: "t",
            config: json!({"a": 2}),
            generated_at: None,
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::new("t", &["x", "y"]);
        r.row(vec![json!(1), num(0.5)]);
        r.row(vec![json!("a,b"), Value::Null]);
        r.footer_row(vec![json!("median"), num(f64::NAN)]);
        r.set("k", 3);
        let mut buf = Vec::new();
        r.write(&mut buf, Format::Csv, &prov()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# tool: cdg 0\n# command: t\n# config: {\"a\":2}\nx,y\n1,0.5\n\"a,b\",\nmedian,NaN\n# summary k: 3\n# complete\n"
        );
    }

    #[test]
    fn json_marks_incomplete() {
        let mut r = Report::new("t", &["x"]);
        r.row(vec![json!(1)]);
        r.incomplete = Some("cap".into());
        let mut buf = Vec::new();
        r.write(&mut buf, Format::Json, &prov()).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["complete"], json!(false));
        assert_eq!(v["incomplete_reason"], json!("cap"));
        assert_eq!(v["rows"][0]["x"], json!(1));
    }
}
