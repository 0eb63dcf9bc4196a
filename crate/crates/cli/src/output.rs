use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Columns carried by every CSV row and every JSON record.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub config_hash: String,
    pub variant: String,
    pub rho: f64,
    pub alpha: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub truncation: String,
}

impl Provenance {
    pub fn new(cfg: &RunConfig) -> Self {
        let variant = serde_json::to_value(cfg.cone.variant)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash: cfg.hash(),
            variant,
            rho: cfg.cone.rho,
            alpha: cfg.cone.alpha,
            abs_tol: cfg.quadrature.abs_tol,
            rel_tol: cfg.quadrature.rel_tol,
            truncation: "auto".into(),
        }
    }

    const HEADER: [&'static str; 8] = [
        "schema_version",
        "config_hash",
        "variant",
        "rho",
        "alpha",
        "abs_tol",
        "rel_tol",
        "truncation",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.schema_version.to_string(),
            self.config_hash.clone(),
            self.variant.clone(),
            num(self.rho),
            num(self.alpha),
            num(self.abs_tol),
            num(self.rel_tol),
            self.truncation.clone(),
        ]
    }
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub struct Sink {
    out: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let out: Box<dyn Write> = match path {
            Some(p) => {
                Box::new(BufWriter::new(File::create(p).map_err(|e| {
                    CliError::Validation(format!("cannot create {}: {e}", p.display()))
                })?))
            }
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Self { out })
    }

    fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.out, "{s}").map_err(CliError::Io)
    }

    /// Free-form line, flushed immediately.
    pub fn text(&mut self, s: &str) -> Result<(), CliError> {
        self.line(s)?;
        self.out.flush().map_err(CliError::Io)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(CliError::Io)
    }
}

/// CSV table: provenance columns followed by the command's own columns.
pub struct CsvTable<'a> {
    sink: &'a mut Sink,
    prov: Vec<String>,
    width: usize,
}

impl<'a> CsvTable<'a> {
    pub fn new(sink: &'a mut Sink, prov: &Provenance, columns: &[&str]) -> Result<Self, CliError> {
        let header: Vec<&str> = Provenance::HEADER
            .iter()
            .copied()
            .chain(columns.iter().copied())
            .collect();
        sink.line(&header.join(","))?;
        Ok(Self {
            sink,
            prov: prov.fields(),
            width: columns.len(),
        })
    }

    pub fn row(&mut self, values: &[String]) -> Result<(), CliError> {
        assert_eq!(values.len(), self.width, "row width");
        let all: Vec<String> = self
            .prov
            .iter()
            .cloned()
            .chain(values.iter().map(|v| escape(v)))
            .collect();
        self.sink.line(&all.join(","))
    }
}

fn escape(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_string()
    }
}

/// One JSON object per line: `{"provenance": …, "kind": …, "record": …}`.
pub fn json_record<T: Serialize>(sink: &mut Sink, prov: &Provenance, kind: &str, record: &T) -> Result<(), CliError> {
    let mut m = Map::new();
    m.insert("provenance".into(), json!(prov));
    m.insert("kind".into(), Value::String(kind.into()));
    m.insert(
        "record".into(),
        serde_json::to_value(record).map_err(|e| CliError::Validation(e.to_string()))?,
    );
    let line = serde_json::to_string(&Value::Object(m)).map_err(|e| CliError::Validation(e.to_string()))?;
    sink.line(&line)
}
