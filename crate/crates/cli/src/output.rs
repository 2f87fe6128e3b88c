//! CSV tables, JSON records and gnuplot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// One pass/fail comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<=",
            bound,
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=",
            bound,
            passed: value >= bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Aborted; the record is a failure marker and tables may be partial.
    Error,
}

/// Top-level JSON record written for every run.
#[derive(Debug, Serialize)]
pub struct Record<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub status: Status,
    pub rng: &'static str,
    pub formula_anchors: &'a [&'static str],
    pub config: &'a ExperimentConfig,
    pub checks: &'a [Check],
    pub results: &'a Value,
    pub tables: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Columns plotted by a gnuplot script (1-based, gnuplot convention).
#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x: usize,
    pub ys: Vec<usize>,
    pub log_y: bool,
}

/// Collects the files written during one run.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    plot: bool,
    anchors: Vec<&'static str>,
    tables: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path, plot: bool, anchors: &[&'static str]) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            plot,
            anchors: anchors.to_vec(),
            tables: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn tables(&self) -> &[String] {
        &self.tables
    }

    /// Writes `<name>.csv` with a leading `#` comment naming the formula anchors.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>], plot: Option<PlotSpec>) -> Result<(), CliError> {
        let file = format!("{name}.csv");
        let mut buf = format!("# anchors: {}\n", self.anchors.join(" "));
        {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
            buf.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        }
        fs::write(self.dir.join(&file), buf)?;
        self.tables.push(file.clone());
        if self.plot {
            if let Some(p) = plot {
                self.gnuplot(&file, header, &p)?;
            }
        }
        Ok(())
    }

    fn gnuplot(&self, csv_file: &str, header: &[&str], p: &PlotSpec) -> Result<(), CliError> {
        let stem = csv_file.trim_end_matches(".csv");
        let mut s = String::new();
        s.push_str("set datafile separator ','\n");
        s.push_str("set key autotitle columnhead\n");
        s.push_str(&format!("set title \"{}\"\n", p.title));
        s.push_str(&format!("set xlabel \"{}\"\n", header[p.x - 1]));
        if p.log_y {
            s.push_str("set logscale y\n");
        }
        s.push_str("set terminal pngcairo size 900,600\n");
        s.push_str(&format!("set output \"{stem}.png\"\n"));
        let series: Vec<String> = p
            .ys
            .iter()
            .map(|y| format!("\"{csv_file}\" using {}:{} with linespoints", p.x, y))
            .collect();
        s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
        fs::write(self.dir.join(format!("{stem}.gp")), s)?;
        Ok(())
    }

    /// Writes `<name>.json`.
    pub fn record(&self, name: &str, rec: &Record<'_>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(rec)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}
