//! CSV tables, the run manifest and point hashes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use cfnet::quantum::TruncationPolicy;
use cfnet::CircuitParams;
use sha2::{Digest, Sha256};

use crate::config::{Experiment, Scenario};
use crate::plot;

/// Which columns to draw, if the table is plotted.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub x: usize,
    pub y: Vec<usize>,
    pub log_y: bool,
    /// scatter instead of lines (multi-valued curves)
    pub markers: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// file stem
    pub name: String,
    /// trace-specific manifest lines
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub plot: Option<PlotSpec>,
}

impl Table {
    pub fn new(name: String, columns: Vec<&'static str>) -> Self {
        Self { name, meta: Vec::new(), columns, rows: Vec::new(), plot: None }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn csv(&self, header: &[(String, String)]) -> String {
        let mut s = String::new();
        for (k, v) in header.iter().chain(&self.meta) {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

/// A grid point that could not be solved.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub trace: String,
    pub at: String,
    pub params_hash: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub failures: Vec<Failure>,
    /// params hash → canonical point description
    pub points: BTreeMap<String, String>,
    pub notes: Vec<(String, String)>,
    /// plain-text validation report
    pub report: Option<String>,
    pub criteria_failed: usize,
}

impl RunOutput {
    /// Registers a point and returns its hash.
    pub fn point(&mut self, p: &CircuitParams, extra: &str) -> String {
        let key = point_key(p, extra);
        let h = params_hash(&key);
        self.points.entry(h.clone()).or_insert(key);
        h
    }

    pub fn fail(&mut self, trace: &str, at: impl ToString, hash: String, error: impl ToString) {
        self.failures.push(Failure { trace: trace.to_string(), at: at.to_string(), params_hash: hash, error: error.to_string() });
    }

    /// 0 when everything solved, 2 when some points failed, 1 when a
    /// validation criterion failed.
    pub fn exit_code(&self) -> u8 {
        if !self.failures.is_empty() {
            2
        } else if self.criteria_failed > 0 {
            1
        } else {
            0
        }
    }
}

/// Full-precision, order-fixed description of a single point.
pub fn point_key(p: &CircuitParams, extra: &str) -> String {
    let mut s = format!(
        "gamma={:?};gamma_f={:?};kappa={:?};chi={:?};delta_s={:?};delta={:?};epsilon={:?}",
        p.gamma, p.gamma_f, p.kappa, p.chi, p.delta_s, p.delta, p.epsilon
    );
    if !extra.is_empty() {
        s.push(';');
        s.push_str(extra);
    }
    s
}

/// First 16 hex digits of SHA-256 over the point key.
pub fn params_hash(key: &str) -> String {
    Sha256::digest(key.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn policy_str(t: &TruncationPolicy) -> String {
    let start = match t.initial {
        Some([a, c]) => format!("({a},{c})"),
        None => "auto".into(),
    };
    if t.escalate {
        format!(
            "start {start}, step {}, max {} per mode, max {} states, tolerance {}",
            t.step, t.max_per_mode, t.max_total, t.tolerance
        )
    } else {
        format!("fixed {start}")
    }
}

fn params_lines(p: &CircuitParams) -> Vec<(String, String)> {
    [
        ("gamma", p.gamma),
        ("gamma_f", p.gamma_f),
        ("kappa", p.kappa),
        ("chi", p.chi),
        ("delta_s", p.delta_s),
        ("delta", p.delta),
        ("epsilon", p.epsilon),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), format!("{v:?}")))
    .collect()
}

fn grid_line(g: &[f64]) -> String {
    match g {
        [x] => format!("{x:?}"),
        _ if g.len() <= 12 => format!("{:?}", g),
        _ => format!("{} points from {:?} to {:?}", g.len(), g[0], g[g.len() - 1]),
    }
}

/// `# key = value` lines shared by every CSV of a run.
pub fn common_header(s: &Scenario) -> Vec<(String, String)> {
    let mut h = vec![
        ("cfnet".to_string(), cfnet::VERSION.to_string()),
        ("scenario".to_string(), s.name.clone()),
        ("experiment".to_string(), s.experiment.to_string()),
        ("unit_mode".to_string(), s.unit_mode.as_str().to_string()),
    ];
    h.extend(params_lines(&s.params));
    if s.kerr.is_some() {
        h.push(("chi_source".into(), "qubit".into()));
    }
    if !matches!(s.experiment, Experiment::Bistability | Experiment::Hysteresis | Experiment::Validate) {
        h.push(("truncation".into(), policy_str(&s.truncation)));
    }
    h
}

fn manifest(s: &Scenario, out: &RunOutput, plots: bool) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "cfnet-cli {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "cfnet-core {}", cfnet::VERSION);
    let _ = writeln!(m, "scenario = {}", s.name);
    let _ = writeln!(m, "experiment = {}", s.experiment);
    let _ = writeln!(m, "unit_mode = {}", s.unit_mode.as_str());
    let annotated: Vec<&str> = s.per_two_pi.iter().map(|f| f.as_str()).collect();
    let _ = writeln!(m, "per_two_pi = [{}]", annotated.join(", "));
    let _ = writeln!(m, "p1_form = {}", s.p1_form_str());
    let _ = writeln!(m, "cavities = [{}]", s.cavities.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", "));

    let _ = writeln!(m, "\n[parameters]");
    for (k, v) in params_lines(&s.params) {
        let _ = writeln!(m, "{k} = {v}");
    }
    if let Some(q) = &s.params.qubit {
        let _ = writeln!(m, "qubit = g {:?}, Omega {:?}, delta_qT {:?}", q.g, q.omega, q.delta_qt);
    }
    if let Some((g, omega)) = s.qubit_coupling {
        let _ = writeln!(m, "qubit_coupling = g {g:?}, Omega {omega:?}");
    }
    if let Some(k) = &s.kerr {
        let _ = writeln!(m, "\n[derived]");
        let _ = writeln!(m, "chi = {:?} (from the qubit block)", k.chi);
        let _ = writeln!(m, "rabi_ratio = {:?}", k.rabi_ratio);
        let _ = writeln!(m, "dispersive_ratio = {:?}", k.dispersive_ratio);
        let _ = writeln!(m, "validity_warning = {}", k.warning);
    }

    let _ = writeln!(m, "\n[truncation]");
    let _ = writeln!(m, "policy = {}", policy_str(&s.truncation));

    let g = &s.grids;
    let grids = [("epsilon", &g.epsilon), ("k", &g.k), ("delta_s", &g.delta_s), ("delta_qT", &g.delta_qt)];
    if grids.iter().any(|(_, v)| v.is_some()) {
        let _ = writeln!(m, "\n[grids]");
        for (name, v) in grids {
            if let Some(v) = v {
                let _ = writeln!(m, "{name} = {}", grid_line(v));
            }
        }
    }

    if !out.notes.is_empty() {
        let _ = writeln!(m, "\n[notes]");
        for (k, v) in &out.notes {
            let _ = writeln!(m, "{k} = {v}");
        }
    }

    let _ = writeln!(m, "\n[outputs]");
    for t in &out.tables {
        let svg = if plots && t.plot.is_some() { format!(" (+ {}.svg)", t.name) } else { String::new() };
        let _ = writeln!(m, "{}.csv: {} rows{svg}", t.name, t.rows.len());
        for (k, v) in &t.meta {
            let _ = writeln!(m, "  {k} = {v}");
        }
    }
    if out.report.is_some() {
        let _ = writeln!(m, "validation_report.txt");
    }

    let _ = writeln!(m, "\n[failures]");
    if out.failures.is_empty() {
        let _ = writeln!(m, "none");
    }
    for f in &out.failures {
        let _ = writeln!(m, "{} at {} [{}]: {}", f.trace, f.at, f.params_hash, f.error);
    }

    if !out.points.is_empty() {
        let _ = writeln!(m, "\n[points]");
        for (h, key) in &out.points {
            let _ = writeln!(m, "{h} {key}");
        }
    }
    m
}

/// Writes every table (and its plot), the validation report and
/// `manifest.txt` under `dir`.
pub fn write_outputs(dir: &Path, s: &Scenario, out: &RunOutput, plots: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let header = common_header(s);
    for t in &out.tables {
        let path = dir.join(format!("{}.csv", t.name));
        fs::write(&path, t.csv(&header)).with_context(|| format!("writing {}", path.display()))?;
        if plots {
            if let Some(svg) = plot::render(t) {
                let path = dir.join(format!("{}.svg", t.name));
                fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    if let Some(r) = &out.report {
        fs::write(dir.join("validation_report.txt"), r).context("writing validation_report.txt")?;
    }
    fs::write(dir.join("manifest.txt"), manifest(s, out, plots)).context("writing manifest.txt")?;
    Ok(())
}
