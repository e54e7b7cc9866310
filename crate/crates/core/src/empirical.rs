//! Price ingestion, log-returns, rolling exit times, the moment fit of the
//! stationary gamma variance law, and deterministic artifact output.
//!
//! Time is the trading-day index: missing calendar days are simply absent.
//! Exit thresholds are in log-return units and must always be supplied.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curve::DensityCurve;
use crate::error::{Error, Result};
use crate::levy::{ModelParams, SubordinatorSpec};
use crate::mc::{simulate_logreturn, Mode};

pub const MANIFEST_SCHEMA: &str = "v1";

/// Daily closes with strictly increasing dates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
    pub source_id: String,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, closes: Vec<f64>, source_id: impl Into<String>) -> Result<Self> {
        if dates.len() != closes.len() {
            return Err(Error::Parse { line: 0, detail: "dates and closes differ in length".into() });
        }
        if dates.is_empty() {
            return Err(Error::EmptySeries);
        }
        // rows start at line 2, after the header
        for (i, c) in closes.iter().enumerate() {
            if !(*c > 0.0 && c.is_finite()) {
                return Err(Error::Parse { line: i + 2, detail: format!("close must be positive, got {c}") });
            }
        }
        for i in 1..dates.len() {
            if dates[i] <= dates[i - 1] {
                let what = if dates[i] == dates[i - 1] { "duplicate" } else { "out-of-order" };
                return Err(Error::Parse { line: i + 2, detail: format!("{what} date {}", dates[i]) });
            }
        }
        Ok(Self { dates, closes, source_id: source_id.into() })
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

/// Reads `date,close` CSV with ISO-8601 dates.
pub fn load_prices(path: &Path) -> Result<PriceSeries> {
    let file = fs::File::open(path)?;
    parse_prices(file, &path.display().to_string())
}

pub fn parse_prices(reader: impl Read, source_id: &str) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, detail: e.to_string() })?.clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "close" {
        return Err(Error::Parse { line: 1, detail: format!("expected header `date,close`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")) });
    }
    let mut dates = Vec::new();
    let mut closes = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Parse { line, detail: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| Error::Parse { line, detail: format!("bad date `{}`: {e}", &rec[0]) })?;
        let close: f64 = rec[1].parse().map_err(|_| Error::Parse { line, detail: format!("bad close `{}`", &rec[1]) })?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(Error::Parse { line, detail: format!("close must be positive, got {close}") });
        }
        if let Some(prev) = dates.last() {
            if date <= *prev {
                let what = if date == *prev { "duplicate" } else { "out-of-order" };
                return Err(Error::Parse { line, detail: format!("{what} date {date}") });
            }
        }
        dates.push(date);
        closes.push(close);
    }
    if dates.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(PriceSeries { dates, closes, source_id: source_id.to_string() })
}

/// Mean, median, maximum and minimum of the closes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
}

pub fn summary_stats(series: &PriceSeries) -> SummaryStats {
    let mut v = series.closes.clone();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    let mean = crate::real::KahanSum::from_iter(v.iter().copied()).value() / n as f64;
    SummaryStats { count: n, mean, median, max: v[n - 1], min: v[0] }
}

/// `X_k = ln(S_{start+k} / S_start)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub x: Vec<f64>,
    pub window_start: usize,
}

pub fn log_returns(series: &PriceSeries, window_start: usize) -> Result<ReturnSeries> {
    if window_start >= series.len() {
        return Err(Error::param("window_start", format!("{window_start} beyond a series of {}", series.len())));
    }
    let s0 = series.closes[window_start];
    let x = series.closes[window_start..].iter().map(|s| (s / s0).ln()).collect();
    Ok(ReturnSeries { x, window_start })
}

/// Exit times (trading days) from every `stride`-th window start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RollingExits {
    pub threshold: f64,
    pub mode: Mode,
    pub windows: usize,
    pub exit_days: Vec<usize>,
    pub censored: usize,
}

pub fn rolling_exit_times(series: &PriceSeries, threshold: f64, mode: Mode, stride: usize) -> Result<RollingExits> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::param("threshold", format!("must be positive, got {threshold}")));
    }
    if stride == 0 {
        return Err(Error::param("stride", "must be at least 1"));
    }
    let logs: Vec<f64> = series.closes.iter().map(|s| s.ln()).collect();
    let mut exit_days = Vec::new();
    let mut censored = 0;
    let mut windows = 0;
    for start in (0..logs.len()).step_by(stride) {
        windows += 1;
        let base = logs[start];
        let hit = logs[start + 1..].iter().position(|l| match mode {
            Mode::Up => l - base >= threshold,
            Mode::Down => l - base <= -threshold,
        });
        match hit {
            Some(k) => exit_days.push(k + 1),
            None => censored += 1,
        }
    }
    Ok(RollingExits { threshold, mode, windows, exit_days, censored })
}

/// Method-of-moments fit of a stationary `Gamma(nu, alpha)` variance law.
///
/// Heuristic: squared daily log-increments stand in for the unobserved
/// variance path, which makes the fit noisy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub nu: f64,
    pub alpha: f64,
    pub proxy_mean: f64,
    pub proxy_variance: f64,
    pub proxy_lag1_autocorrelation: f64,
    pub observations: usize,
    /// OU rate supplied by the caller; the stationary moments do not involve it.
    pub lambda: f64,
    pub warning: String,
}

const MIN_OBSERVATIONS: usize = 250;

/// Fits from squared log-increments of the closes.
pub fn estimate_gamma_params(series: &PriceSeries, lambda: f64) -> Result<GammaFit> {
    if series.len() < MIN_OBSERVATIONS {
        return Err(Error::param("series", format!("needs at least {MIN_OBSERVATIONS} observations, got {}", series.len())));
    }
    let proxy: Vec<f64> = series.closes.windows(2).map(|w| (w[1] / w[0]).ln().powi(2)).collect();
    estimate_gamma_from_proxy(&proxy, lambda)
}

/// Fits from a directly observed variance sample.
pub fn estimate_gamma_from_proxy(proxy: &[f64], lambda: f64) -> Result<GammaFit> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let n = proxy.len();
    if n < 2 {
        return Err(Error::DegenerateMoments(format!("{n} observations")));
    }
    let m = proxy.iter().sum::<f64>() / n as f64;
    let v = proxy.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / (n - 1) as f64;
    // a constant sample can leave rounding noise in v
    let constant = proxy.iter().all(|p| *p == proxy[0]);
    if constant || !(v > 0.0) || !(m > 0.0) {
        return Err(Error::DegenerateMoments(format!("sample mean {m}, variance {v}")));
    }
    let c0 = v * (n - 1) as f64;
    let c1: f64 = proxy.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    Ok(GammaFit {
        nu: m * m / v,
        alpha: m / v,
        proxy_mean: m,
        proxy_variance: v,
        proxy_lag1_autocorrelation: c1 / c0,
        observations: n,
        lambda,
        warning: "heuristic fit: squared daily log-increments are a noisy proxy for the variance path".into(),
    })
}

/// Bins of a sample of exit times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_left: Vec<f64>,
    pub bin_right: Vec<f64>,
    pub count: Vec<u64>,
}

impl Histogram {
    /// `bins` equal bins over `[lo, hi]`; values outside are dropped.
    pub fn new(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(Error::InvalidSettings(format!("histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let w = (hi - lo) / bins as f64;
        let mut count = vec![0u64; bins];
        for v in values {
            if v >= lo && v <= hi {
                let i = (((v - lo) / w) as usize).min(bins - 1);
                count[i] += 1;
            }
        }
        let bin_left = (0..bins).map(|i| lo + i as f64 * w).collect();
        let bin_right = (0..bins).map(|i| lo + (i + 1) as f64 * w).collect();
        Ok(Self { bin_left, bin_right, count })
    }
}

/// Floats as 17 significant digits, which round-trips every `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV field: counts print as integers, reals through [`fmt17`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Count(u64),
    Real(f64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Count(n as u64)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Count(n)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Count(n) => write!(f, "{n}"),
            Cell::Real(x) => f.write_str(&fmt17(*x)),
        }
    }
}

/// A named CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let fields: Vec<String> = r.iter().map(Cell::to_string).collect();
            s.push_str(&fields.join(","));
            s.push('\n');
        }
        s
    }
}

impl From<&Histogram> for Table {
    fn from(h: &Histogram) -> Self {
        let mut t = Table::new("", &["bin_left", "bin_right", "count"]);
        for i in 0..h.count.len() {
            t.push(vec![h.bin_left[i].into(), h.bin_right[i].into(), h.count[i].into()]);
        }
        t
    }
}

impl From<&DensityCurve<f64>> for Table {
    fn from(c: &DensityCurve<f64>) -> Self {
        let mut t = Table::new("", &["x", "value"]);
        for (x, v) in c.grid.points().zip(&c.values) {
            t.push(vec![x.into(), (*v).into()]);
        }
        t
    }
}

/// Files to write in one run.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub curves: Vec<(String, DensityCurve<f64>)>,
    pub histograms: Vec<(String, Histogram)>,
    pub tables: Vec<Table>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Run manifest. Holds no timestamps so that reruns are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, serde_json::Value>,
    pub files: Vec<ManifestFile>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config: BTreeMap<String, serde_json::Value>) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.into(),
            tool: "exitlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            files: Vec::new(),
        }
    }
}

/// Writes one CSV per curve (`x,value`) and histogram
/// (`bin_left,bin_right,count`), then `manifest.json` listing them in name order.
pub fn emit(artifacts: &Artifacts, out_dir: &Path, mut manifest: Manifest) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let named = artifacts
        .curves
        .iter()
        .map(|(n, c)| (n.as_str(), Table::from(c)))
        .chain(artifacts.histograms.iter().map(|(n, h)| (n.as_str(), Table::from(h))))
        .chain(artifacts.tables.iter().map(|t| (t.name.as_str(), t.clone())));
    for (name, table) in named {
        let file = format!("{name}.csv");
        fs::write(out_dir.join(&file), table.to_csv())?;
        written.push(file);
    }
    written.sort();
    for file in written {
        let bytes = fs::read(out_dir.join(&file))?;
        manifest.files.push(ManifestFile {
            name: file,
            bytes: bytes.len() as u64,
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
    }
    let path = out_dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&path, json)?;
    Ok(path)
}

/// Settings of the full rolling-exit pipeline on one price series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Exit thresholds in log-return units.
    pub thresholds: Vec<f64>,
    pub mode: Mode,
    pub stride: usize,
    /// OU rate for the gamma fit; `None` skips the fit.
    pub gamma_lambda: Option<f64>,
}

/// Summary statistics, one exit-day histogram per threshold, a rolling
/// summary and optionally the gamma fit, as tables sorted by name, plus the
/// configuration to record in the manifest.
pub fn run_pipeline(
    series: &PriceSeries,
    source_name: &str,
    cfg: &PipelineConfig,
) -> Result<(Vec<Table>, BTreeMap<String, serde_json::Value>)> {
    use serde_json::json;
    if cfg.thresholds.is_empty() {
        return Err(Error::param("threshold", "at least one threshold is required"));
    }
    let stats = summary_stats(series);
    let mut summary = Table::new("summary", &["count", "mean", "median", "max", "min"]);
    summary.push(vec![stats.count.into(), stats.mean.into(), stats.median.into(), stats.max.into(), stats.min.into()]);
    let mut rolling = Table::new("rolling", &["threshold", "windows", "exits", "censored"]);
    let mut tables = Vec::new();
    for (k, &th) in cfg.thresholds.iter().enumerate() {
        let ex = rolling_exit_times(series, th, cfg.mode, cfg.stride)?;
        rolling.push(vec![th.into(), ex.windows.into(), ex.exit_days.len().into(), ex.censored.into()]);
        // one bin per trading day
        let top = ex.exit_days.iter().max().copied().unwrap_or(1);
        let hist = Histogram::new(ex.exit_days.iter().map(|&d| d as f64), 0.5, top as f64 + 0.5, top)?;
        let mut t = Table::from(&hist);
        t.name = format!("exit_hist_{k}");
        tables.push(t);
    }
    tables.push(summary);
    tables.push(rolling);
    let mut config = BTreeMap::from([
        ("prices".to_string(), json!(source_name)),
        ("first_date".to_string(), json!(series.dates[0].to_string())),
        ("last_date".to_string(), json!(series.dates[series.len() - 1].to_string())),
        ("thresholds".to_string(), json!(cfg.thresholds)),
        ("mode".to_string(), json!(cfg.mode)),
        ("stride".to_string(), json!(cfg.stride)),
    ]);
    if let Some(lambda) = cfg.gamma_lambda {
        let fit = estimate_gamma_params(series, lambda)?;
        log::warn!("{}", fit.warning);
        let mut t = Table::new(
            "gamma_fit",
            &["nu", "alpha", "proxy_mean", "proxy_variance", "proxy_lag1_autocorrelation", "observations", "lambda"],
        );
        t.push(vec![
            fit.nu.into(),
            fit.alpha.into(),
            fit.proxy_mean.into(),
            fit.proxy_variance.into(),
            fit.proxy_lag1_autocorrelation.into(),
            fit.observations.into(),
            fit.lambda.into(),
        ]);
        tables.push(t);
        config.insert("lambda".into(), json!(lambda));
    }
    tables.sort_by(|a, b| a.name.cmp(&b.name));
    Ok((tables, config))
}

/// Synthetic daily closes from the log-return model with a gamma driving
/// process, on weekdays from `start`. Ships as a stand-in for licensed data.
pub fn synthetic_prices(days: usize, seed: u64, start: NaiveDate) -> Result<PriceSeries> {
    let model = ModelParams { mu: 2e-4, sigma: 0.01, rho: -0.01, lambda: 0.05, r: 0.0 };
    let spec = SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 };
    let path = simulate_logreturn(&model, &spec, (days - 1) as f64, 1.0, seed, 0)?;
    let mut dates = Vec::with_capacity(days);
    let mut d = start;
    while dates.len() < days {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d = d.succ_opt().ok_or(Error::Overflow("date"))?;
    }
    let closes = path.values.iter().take(days).map(|x| 1000.0 * x.exp()).collect();
    PriceSeries::new(dates, closes, format!("synthetic:seed={seed}"))
}

/// CSV text of a series, closes at 17 significant digits.
pub fn prices_csv(series: &PriceSeries) -> String {
    let mut s = String::from("date,close\n");
    for (d, c) in series.dates.iter().zip(&series.closes) {
        s.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), fmt17(*c)));
    }
    s
}
