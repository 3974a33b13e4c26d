//! Run directories: CSV and JSON outputs plus a hashed manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::NormSeries;
use crate::error::{Error, Result};

use super::config::{series_key, NormIndex};

/// Shortest representation that parses back to the same `f64`; `-0` prints as `0e0`.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0e0".into();
    }
    format!("{v:e}")
}

/// Collects output files and their hashes; [`RunDir::finish`] writes the manifest.
pub struct RunDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(RunDir { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        self.files.insert(rel.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Contract(e.to_string()))?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes `manifest.json` with `meta` and the file table.
    pub fn finish(self, meta: serde_json::Value) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Entry<'a> {
            path: &'a str,
            sha256: &'a str,
        }
        let files: Vec<Entry> = self.files.iter().map(|(p, h)| Entry { path: p, sha256: h }).collect();
        let manifest = serde_json::json!({ "run": meta, "files": files });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Contract(e.to_string()))?;
        text.push('\n');
        let path = self.root.join("manifest.json");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// CSV with a header row and one row per index.
pub fn csv_table(header: &[&str], columns: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    let rows = columns.first().map_or(0, Vec::len);
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| fmt_num(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `t,value,label,p,l` rows for every series.
pub fn norms_csv(series: &[NormSeries]) -> String {
    let mut out = String::from("t,value,label,p,l\n");
    for s in series {
        for (t, v) in s.times.iter().zip(&s.values) {
            let _ = writeln!(out, "{},{},{},{},{}", fmt_num(*t), fmt_num(*v), s.label, NormIndex(s.p), s.l);
        }
    }
    out
}

/// Parses a file written by [`norms_csv`]; series keep their order of first appearance.
pub fn parse_norms_csv(text: &str) -> Result<Vec<NormSeries>> {
    let mut out: Vec<NormSeries> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Config(format!("norms.csv line {}: bad {what}", i + 1));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad("column count"));
        }
        let t: f64 = cols[0].parse().map_err(|_| bad("t"))?;
        let v: f64 = cols[1].parse().map_err(|_| bad("value"))?;
        let p = if cols[3] == "inf" { f64::INFINITY } else { cols[3].parse().map_err(|_| bad("p"))? };
        let l: u32 = cols[4].parse().map_err(|_| bad("l"))?;
        let key = series_key(cols[2], p, l);
        match out.iter_mut().find(|s| series_key(&s.label, s.p, s.l) == key) {
            Some(s) => {
                s.times.push(t);
                s.values.push(v);
            }
            None => out.push(NormSeries { times: vec![t], values: vec![v], p, l, label: cols[2].to_string() }),
        }
    }
    Ok(out)
}
