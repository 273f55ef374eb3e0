//! Report envelope and rendering.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    /// A verified mathematical inconsistency; an artifact has been written.
    Inconsistency,
    ResourceCap,
}

impl Verdict {
    pub fn code(self) -> u8 {
        match self {
            Verdict::Ok => 0,
            Verdict::Inconsistency => 1,
            Verdict::ResourceCap => 3,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::Inconsistency => "inconsistency",
            Verdict::ResourceCap => "resource_cap",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<I, S>(headers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    /// Two-column key/value table.
    pub fn pairs<I, K, V>(items: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: ToString,
        V: ToString,
    {
        let mut t = Table::new(["field", "value"]);
        for (k, v) in items {
            t.push([k.to_string(), v.to_string()]);
        }
        t
    }
}

pub struct Outcome {
    pub command: &'static str,
    pub verdict: Verdict,
    pub body: Map<String, Value>,
    pub table: Table,
}

impl Outcome {
    pub fn new(command: &'static str, body: Value, table: Table) -> Self {
        let body = match body {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        Outcome {
            command,
            verdict: Verdict::Ok,
            body,
            table,
        }
    }

    pub fn with_verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command));
        m.insert("status".into(), Value::from(self.verdict.label()));
        m.insert("exit_code".into(), Value::from(self.verdict.code()));
        for (k, v) in &self.body {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json()).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.table.headers).expect("in-memory write");
                for row in &self.table.rows {
                    w.write_record(row).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
            }
            Format::Markdown => {
                let mut s = format!("## {} ({})\n\n", self.command, self.verdict.label());
                let esc = |c: &str| c.replace('|', "\\|").replace('\n', " ");
                let _ = writeln!(s, "| {} |", self.table.headers.iter().map(|h| esc(h)).collect::<Vec<_>>().join(" | "));
                let _ = writeln!(s, "|{}", "---|".repeat(self.table.headers.len()));
                for row in &self.table.rows {
                    let _ = writeln!(s, "| {} |", row.iter().map(|c| esc(c)).collect::<Vec<_>>().join(" | "));
                }
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Outcome {
        let mut t = Table::new(["k", "note"]);
        t.push(["1", "a, b"]);
        t.push(["2", "x|y"]);
        Outcome::new("demo", json!({"value": 5}), t)
    }

    #[test]
    fn json_envelope() {
        let v = sample().with_verdict(Verdict::ResourceCap).json();
        assert_eq!(v["command"], "demo");
        assert_eq!(v["status"], "resource_cap");
        assert_eq!(v["exit_code"], 3);
        assert_eq!(v["value"], 5);
    }

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(sample().render(Format::Csv), "k,note\n1,\"a, b\"\n2,x|y\n");
    }

    #[test]
    fn markdown_escapes_pipes() {
        let md = sample().render(Format::Markdown);
        assert!(md.contains("| 2 | x\\|y |"));
        assert!(md.starts_with("## demo (ok)"));
    }
}
