//! Output directory handling and the human-readable summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Summary lines of one command. Inequalities carry their margin, the signed
/// distance to the bound (positive when the inequality holds).
#[derive(Default)]
pub struct Summary {
    lines: Vec<String>,
}

fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

impl Summary {
    fn check(&mut self, label: &str, relation: String, margin: f64) {
        self.record(label, relation, margin, margin > 0.0);
    }

    fn record(&mut self, label: &str, relation: String, margin: f64, holds: bool) {
        let tag = if holds { "ok  " } else { "FAIL" };
        self.lines.push(format!(
            "[{tag}] {label}: {relation}  margin {}",
            sci(margin)
        ));
    }

    /// `value < bound`.
    pub fn below(&mut self, label: &str, value: f64, bound: f64) {
        self.check(
            label,
            format!("{} < {}", sci(value), sci(bound)),
            bound - value,
        );
    }

    /// `value ≤ bound`.
    pub fn at_most(&mut self, label: &str, value: f64, bound: f64) {
        let margin = bound - value;
        self.record(
            label,
            format!("{} <= {}", sci(value), sci(bound)),
            margin,
            margin >= 0.0,
        );
    }

    /// `value > bound`.
    pub fn above(&mut self, label: &str, value: f64, bound: f64) {
        self.check(
            label,
            format!("{} > {}", sci(value), sci(bound)),
            value - bound,
        );
    }

    /// `lo ≤ value ≤ hi`.
    pub fn within(&mut self, label: &str, value: f64, lo: f64, hi: f64) {
        self.check(
            label,
            format!("{} in [{}, {}]", sci(value), sci(lo), sci(hi)),
            (value - lo).min(hi - value),
        );
    }

    /// A check that could not be evaluated.
    pub fn fail(&mut self, text: &str) {
        self.lines.push(format!("[FAIL] {text}"));
    }

    pub fn value(&mut self, label: &str, value: f64) {
        self.lines.push(format!("       {label} = {}", sci(value)));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.lines.push(format!("       {}", text.into()));
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

/// Writes the artifacts of a command into one directory.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes `summary.txt` and echoes it to stdout.
    pub fn finish(&self, summary: &Summary) -> Result<()> {
        let text = summary.text();
        print!("{text}");
        self.write("summary.txt", &text)
    }
}
