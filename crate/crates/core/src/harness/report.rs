//! Report tables, manifest and plot output.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use plotters::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// One line of `results.csv`, usually one `(series, n, τ)` cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub series: String,
    pub n: Option<usize>,
    pub tau: Option<f64>,
    /// Primary bound radius.
    pub bound: Option<f64>,
    pub source: Option<String>,
    pub valid: Option<bool>,
    pub secondary_bound: Option<f64>,
    pub secondary_source: Option<String>,
    pub secondary_valid: Option<bool>,
    /// Measured quantity of the row (`c_n`, median error, operator gap).
    pub value: Option<f64>,
    /// Fitted model or exact reference for `value` or for `rate`.
    pub reference: Option<f64>,
    /// Empirical quantile at level `1 − e^{−τ}` with a 95% order-statistic interval.
    pub quantile: Option<f64>,
    pub quantile_lo: Option<f64>,
    pub quantile_hi: Option<f64>,
    pub samples: usize,
    pub violations: Option<usize>,
    pub rate: Option<f64>,
    /// `e^{−τ} + 3σ` with `σ` the binomial deviation at `p = e^{−τ}`.
    pub rate_limit: Option<f64>,
    pub pass: Option<bool>,
}

impl Row {
    /// Recomputes `pass` from the stored counts.
    pub fn recomputed_pass(&self) -> Option<bool> {
        match (self.violations, self.rate_limit) {
            (Some(v), Some(limit)) if self.samples > 0 => Some(v as f64 / self.samples as f64 <= limit),
            _ => self.pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<Row>,
    /// Fitted constants, slopes and approximation diagnostics.
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    /// SHA-256 of the canonical TOML of the effective config.
    pub config_hash: String,
    pub seed: u64,
    pub config: String,
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub files: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn results_csv(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(ROW_HEADER).map_err(|e| csv_err(Path::new("results.csv"), e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(Path::new("results.csv"), e))?;
    }
    Ok(w.into_inner().expect("in-memory writer"))
}

const ROW_HEADER: [&str; 19] = [
    "series",
    "n",
    "tau",
    "bound",
    "source",
    "valid",
    "secondary_bound",
    "secondary_source",
    "secondary_valid",
    "value",
    "reference",
    "quantile",
    "quantile_lo",
    "quantile_hi",
    "samples",
    "violations",
    "rate",
    "rate_limit",
    "pass",
];

pub fn read_results(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

fn taus_of(rows: &[Row]) -> Vec<f64> {
    let mut taus: Vec<f64> = rows.iter().filter_map(|r| r.tau).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    taus
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Wide plot table: one line per `(series, n)` with per-τ bound and quantile
/// columns. Tables without `n` (chi-square) use `τ` as the abscissa instead.
pub fn plotdata_csv(rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e| csv_err(Path::new("plotdata.csv"), e);
    if rows.iter().all(|r| r.n.is_none()) {
        w.write_record(["series", "tau", "bound", "rate", "rate_limit", "reference", "quantile"])
            .map_err(err)?;
        for r in rows {
            w.write_record([
                r.series.clone(),
                opt(r.tau),
                opt(r.bound),
                opt(r.rate),
                opt(r.rate_limit),
                opt(r.reference),
                opt(r.quantile),
            ])
            .map_err(err)?;
        }
        return Ok(w.into_inner().expect("in-memory writer"));
    }
    let taus = taus_of(rows);
    let mut header = vec!["series".to_string(), "n".into(), "value".into(), "reference".into()];
    for t in &taus {
        header.push(format!("bound_tau{t}"));
        header.push(format!("secondary_tau{t}"));
        header.push(format!("quantile_tau{t}"));
    }
    w.write_record(&header).map_err(err)?;
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in rows {
        if let Some(n) = r.n {
            let k = (r.series.clone(), n);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    for (series, n) in keys {
        let cell: Vec<&Row> = rows.iter().filter(|r| r.series == series && r.n == Some(n)).collect();
        let mut rec = vec![
            series.clone(),
            n.to_string(),
            opt(cell.iter().find_map(|r| r.value)),
            opt(cell.iter().find_map(|r| r.reference)),
        ];
        for t in &taus {
            let r = cell.iter().find(|r| r.tau == Some(*t));
            rec.push(opt(r.and_then(|r| r.bound)));
            rec.push(opt(r.and_then(|r| r.secondary_bound)));
            rec.push(opt(r.and_then(|r| r.quantile)));
        }
        w.write_record(&rec).map_err(err)?;
    }
    Ok(w.into_inner().expect("in-memory writer"))
}

/// Log-log line plots of bound and quantile against `n`, one file per series.
pub fn render_svgs(rows: &[Row], title: &str) -> Result<Vec<(String, String)>> {
    let mut series: Vec<&str> = Vec::new();
    for r in rows.iter().filter(|r| r.n.is_some()) {
        if !series.contains(&r.series.as_str()) {
            series.push(&r.series);
        }
    }
    let taus = taus_of(rows);
    let mut out = Vec::new();
    for (k, s) in series.iter().enumerate() {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.series == *s && r.n.is_some()).collect();
        let mut lines: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        let mut push = |label: String, f: &dyn Fn(&Row) -> Option<f64>, tau: Option<f64>| {
            let pts: Vec<(f64, f64)> = mine
                .iter()
                .filter(|r| r.tau == tau)
                .filter_map(|r| Some((r.n? as f64, f(r)?)))
                .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
                .collect();
            if !pts.is_empty() {
                lines.push((label, pts));
            }
        };
        push("value".into(), &|r| r.value, None);
        push("value".into(), &|r| r.value, taus.first().copied());
        for &t in &taus {
            push(format!("bound τ={t}"), &|r| r.bound, Some(t));
            push(format!("secondary τ={t}"), &|r| r.secondary_bound, Some(t));
            push(format!("quantile τ={t}"), &|r| r.quantile, Some(t));
        }
        if lines.is_empty() {
            continue;
        }
        let all = lines.iter().flat_map(|(_, p)| p.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x1 <= x0 {
            x1 = x0 * 2.0;
        }
        if y1 <= y0 {
            y1 = y0 * 2.0;
        }
        let mut svg = String::new();
        draw_chart(&mut svg, &format!("{title}: {s}"), (x0, x1), (y0 / 1.5, y1 * 1.5), &lines)
            .map_err(|e| Error::NumericalBreakdown(format!("svg rendering: {e}")))?;
        out.push((format!("plot_{k}.svg"), svg));
    }
    Ok(out)
}

type Lines = [(String, Vec<(f64, f64)>)];

fn draw_chart(
    buf: &mut String,
    caption: &str,
    xr: (f64, f64),
    yr: (f64, f64),
    lines: &Lines,
) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let root = SVGBackend::with_string(buf, (720, 480)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(caption, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(32)
        .y_label_area_size(64)
        .build_cartesian_2d((xr.0..xr.1).log_scale(), (yr.0..yr.1).log_scale())?;
    chart.configure_mesh().x_desc("n").y_label_formatter(&|y| format!("{y:.0e}")).draw()?;
    for (i, (label, pts)) in lines.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}

/// Writes `manifest.json`, `results.csv`, `plotdata.csv` and, if asked, SVG plots.
pub fn emit_report(report: &ExperimentReport, cfg: &ExperimentConfig, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("results.csv".into(), results_csv(&report.rows)?),
        ("plotdata.csv".into(), plotdata_csv(&report.rows)?),
    ];
    if svg {
        for (name, s) in render_svgs(&report.rows, cfg.experiment.id())? {
            files.push((name, s.into_bytes()));
        }
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.id().into(),
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        config: cfg.to_toml(),
        summary: report.summary.clone(),
        checks: report.checks.clone(),
        notes: report.notes.clone(),
        files: files.iter().map(|(n, _)| n.clone()).collect(),
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Format {
        path: dir.join("manifest.json"),
        message: e.to_string(),
    })?;
    files.push(("manifest.json".into(), json));
    let mut written = Vec::new();
    for (name, bytes) in files {
        let p = dir.join(name);
        write_file(&p, &bytes)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentKind;

    fn sample_rows() -> Vec<Row> {
        let mut rows = Vec::new();
        for n in [2, 4] {
            for tau in [1.0, 2.0] {
                rows.push(Row {
                    series: "s".into(),
                    n: Some(n),
                    tau: Some(tau),
                    bound: Some(1.0 / n as f64),
                    source: Some("polynomial".into()),
                    valid: Some(true),
                    value: Some(0.1 / n as f64),
                    quantile: Some(0.05 / n as f64),
                    samples: 1000,
                    violations: Some(n),
                    rate: Some(n as f64 / 1000.0),
                    rate_limit: Some(0.4),
                    pass: Some(true),
                    ..Row::default()
                });
            }
        }
        rows
    }

    #[test]
    fn empty_report_gives_header_only_csv_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default_for(ExperimentKind::Chi2);
        let files = emit_report(&ExperimentReport::default(), &cfg, dir.path(), false).unwrap();
        assert_eq!(files.len(), 3);
        let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("series,n,tau,bound"));
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(m["seed"], 20240503);
    }

    #[test]
    fn csv_roundtrip_recomputes_pass() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default_for(ExperimentKind::Spheres);
        let report = ExperimentReport {
            rows: sample_rows(),
            ..Default::default()
        };
        emit_report(&report, &cfg, dir.path(), false).unwrap();
        let back = read_results(&dir.path().join("results.csv")).unwrap();
        assert_eq!(back, report.rows);
        for r in &back {
            assert_eq!(r.recomputed_pass(), r.pass);
        }
        let plot = std::fs::read_to_string(dir.path().join("plotdata.csv")).unwrap();
        assert_eq!(plot.lines().count(), 3);
        assert!(plot.lines().next().unwrap().contains("bound_tau2"));
    }

    #[test]
    fn svg_only_on_request() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default_for(ExperimentKind::Spheres);
        let report = ExperimentReport {
            rows: sample_rows(),
            ..Default::default()
        };
        emit_report(&report, &cfg, dir.path(), false).unwrap();
        assert!(!dir.path().join("plot_0.svg").exists());
        emit_report(&report, &cfg, dir.path(), true).unwrap();
        let svg = std::fs::read_to_string(dir.path().join("plot_0.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig::default_for(ExperimentKind::Chi2);
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
