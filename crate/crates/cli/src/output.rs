//! CSV and JSON-lines writers. All floats use 17 significant digits so a
//! value read back is bit-identical to the one written.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const UNITS: &str = "hbar = k_B = 1; times in inverse units of the configured frequencies";

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// SHA-256 of the canonical re-serialization, so formatting and key order
/// in the source file do not change the hash.
pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

/// Comment header shared by every CSV artifact.
pub struct Metadata {
    lines: Vec<String>,
}

impl Metadata {
    pub fn new(cfg: &RunConfig) -> Self {
        let mut lines = vec![
            format!("spinbath schema_version={} mode={}", cfg.schema_version, cfg.mode.name()),
            format!("config_sha256={}", config_hash(cfg)),
            format!("seed={}", cfg.seed),
            format!("units: {UNITS}"),
        ];
        for l in cfg.to_toml().lines().filter(|l| !l.trim().is_empty()) {
            lines.push(format!("config: {l}"));
        }
        Metadata { lines }
    }

    pub fn push(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    /// Label every reported order; the caveat appears once any order ≥ 2 is present.
    pub fn orders(&mut self, orders: &[spinbath::SeriesOrder]) {
        for o in orders {
            let name = match o {
                spinbath::SeriesOrder::Truncated(n) => format!("n={n}"),
                spinbath::SeriesOrder::Resolvent => "resolvent".to_string(),
            };
            self.lines.push(format!("order {name}: {}", o.label()));
        }
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let _ = writeln!(s, "# {l}");
        }
        s
    }
}

/// One CSV table: header row plus numeric rows.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.push(row.iter().map(|x| float(*x)).collect());
    }

    fn render(&self, out: &mut String) {
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
    }
}

/// Header followed by one or more tables. Multiple tables are separated by
/// a blank line and introduced by a `# block:` comment.
pub fn csv(meta: &Metadata, blocks: &[(Option<String>, Table)]) -> String {
    let mut s = meta.render();
    for (i, (name, table)) in blocks.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        if let Some(n) = name {
            let _ = writeln!(s, "# block: {n}");
        }
        table.render(&mut s);
    }
    s
}
