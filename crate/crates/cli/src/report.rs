//! Versioned JSON reports.
//!
//! Every numeric result is wrapped as `{"value", "kind", "source"}` where
//! `kind` is `exact` or `estimated`. Timing lives in its own top-level field
//! so that two runs with the same configuration differ only there.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const REPORT_SCHEMA: &str = "mapclt.report/1";
pub const SERIES_SCHEMA: &str = "mapclt.series/1";
pub const TYPES_SCHEMA: &str = "mapclt.types/1";

#[derive(Debug, Clone, Copy)]
pub enum Source {
    Enumeration,
    Series,
    Asymptotic,
    Quadrature,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Enumeration => "enumeration",
            Source::Series => "series",
            Source::Asymptotic => "asymptotic",
            Source::Quadrature => "quadrature",
        }
    }
}

pub fn exact<T: Serialize>(value: T, src: Source) -> Value {
    json!({ "value": value, "kind": "exact", "source": src.name() })
}

pub fn estimated<T: Serialize>(value: T, src: Source) -> Value {
    json!({ "value": value, "kind": "estimated", "source": src.name() })
}

/// Conventions behind every count the tool reports.
pub fn conventions() -> Value {
    json!({
        "occurrence_equivalence": "embeddings of the pattern are identified modulo automorphisms of the pattern that fix its exterior face; an occurrence is a set of host darts together with the host faces filling the pattern's interior faces",
        "intersection": "two occurrences intersect when they share an interior face or when their sides interleave around a shared vertex",
        "deep_faces": "faces of a two-occurrence union that are interior to neither occurrence, other than the root face, are filled with simple-boundary maps and counted as deep faces",
        "type_families": "rooted types are grouped by their unrooted union over any choice of outer face; a 2-gon formed by one edge of each occurrence that is interior to neither is contracted to a single shared edge, and the contracted union joins the same family",
        "exact_x_layers": "pattern equations are exact in x^0, x^1 and x^2; higher x-powers are not exact",
        "gw_exponent": "ratio uses the exponent k(k-1)/2 (exactly 1 at k = 0, 1); ratio_k_squared uses k^2/2",
        "ks_distance": "supremum over both one-sided limits at every atom of the standardized law against the standard normal distribution function"
    })
}

pub struct Report {
    command: &'static str,
    config: Value,
    results: Map<String, Value>,
    warnings: Vec<String>,
    start: Instant,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Report { command, config, results: Map::new(), warnings: Vec::new(), start: Instant::now() }
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn to_value(&self) -> Value {
        json!({
            "schema": REPORT_SCHEMA,
            "tool": { "name": "mapclt", "version": env!("CARGO_PKG_VERSION") },
            "command": self.command,
            "config": self.config,
            "conventions": conventions(),
            "results": Value::Object(self.results.clone()),
            "warnings": self.warnings,
            "timing": { "seconds": self.start.elapsed().as_secs_f64() },
        })
    }

    /// Writes to `out`, or to stdout when absent.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        write_json(&self.to_value(), out)
    }
}

pub fn write_json(v: &Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
