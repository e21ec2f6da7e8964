//! Scenario files: TOML with a fixed set of keys.
//!
//! ```toml
//! experiment = "g2-ksweep"
//! cavity = "both"
//!
//! [params]
//! gamma = 2.0
//! gamma_f = 2.5
//! kappa = 1.0
//! chi = 10.0
//! delta_s = 50.0
//! epsilon = 0.1
//!
//! [grids]
//! k = { from = 0.0, to = 3.0, step = 0.05 }
//! delta_s = [50.0, 10.0]
//! ```
//!
//! A file may instead hold just `reproduce = "fig5"` (plus `out` and a
//! `[truncation]` table), which loads the figure recipe.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cfnet::circuit::{kerr_from_qubit, KerrFromQubit};
use cfnet::quantum::{Cavity, TruncationPolicy};
use cfnet::semiclassical::P1Form;
use cfnet::{CircuitParams, QubitParams};
use serde::Deserialize;

use crate::recipes::{recipe, Figure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Bistability,
    Hysteresis,
    G2Ksweep,
    G2Map,
    G2DriveSweep,
    G2ChiSweep,
    WeakDriveCompare,
    Validate,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Bistability => "bistability",
            Experiment::Hysteresis => "hysteresis",
            Experiment::G2Ksweep => "g2-ksweep",
            Experiment::G2Map => "g2-map",
            Experiment::G2DriveSweep => "g2-drive-sweep",
            Experiment::G2ChiSweep => "g2-chi-sweep",
            Experiment::WeakDriveCompare => "weak-drive-compare",
            Experiment::Validate => "validate",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A circuit parameter that can carry a `/2π` annotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Gamma,
    GammaF,
    Kappa,
    Chi,
    DeltaS,
    Delta,
    Epsilon,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Gamma => "gamma",
            Field::GammaF => "gamma_f",
            Field::Kappa => "kappa",
            Field::Chi => "chi",
            Field::DeltaS => "delta_s",
            Field::Delta => "delta",
            Field::Epsilon => "epsilon",
        }
    }

    fn slot(self, p: &mut CircuitParams) -> &mut f64 {
        match self {
            Field::Gamma => &mut p.gamma,
            Field::GammaF => &mut p.gamma_f,
            Field::Kappa => &mut p.kappa,
            Field::Chi => &mut p.chi,
            Field::DeltaS => &mut p.delta_s,
            Field::Delta => &mut p.delta,
            Field::Epsilon => &mut p.epsilon,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum UnitMode {
    /// numbers exactly as written
    #[default]
    Verbatim,
    /// `/2π`-annotated numbers multiplied by 2π
    Angular,
}

impl UnitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            UnitMode::Verbatim => "verbatim",
            UnitMode::Angular => "angular",
        }
    }
}

/// Sweep ranges. Grids that an experiment does not use are ignored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grids {
    pub epsilon: Option<Vec<f64>>,
    pub k: Option<Vec<f64>>,
    pub delta_s: Option<Vec<f64>>,
    pub delta_qt: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// file stem for the outputs
    pub name: String,
    pub experiment: Experiment,
    pub params: CircuitParams,
    pub grids: Grids,
    pub cavities: Vec<Cavity>,
    pub truncation: TruncationPolicy,
    pub p1_form: P1Form,
    /// qubit `(g, Ω)` for the χ sweep
    pub qubit_coupling: Option<(f64, f64)>,
    /// χ derived from a qubit block, if any
    pub kerr: Option<KerrFromQubit>,
    /// parameters quoted as `/2π` in the source
    pub per_two_pi: Vec<Field>,
    pub unit_mode: UnitMode,
    pub output: Option<PathBuf>,
}

impl Scenario {
    /// Rescales the annotated fields (and their grids) by 2π. Applying it
    /// twice is a no-op.
    pub fn with_unit_mode(mut self, mode: UnitMode) -> Self {
        if mode == UnitMode::Angular && self.unit_mode == UnitMode::Verbatim {
            let w = std::f64::consts::TAU;
            for &f in &self.per_two_pi {
                *f.slot(&mut self.params) *= w;
                let grid = match f {
                    Field::DeltaS => self.grids.delta_s.as_mut(),
                    Field::Epsilon => self.grids.epsilon.as_mut(),
                    _ => None,
                };
                if let Some(g) = grid {
                    g.iter_mut().for_each(|x| *x *= w);
                }
            }
        }
        self.unit_mode = mode;
        self
    }

    pub fn with_truncation(mut self, dims: usize) -> Self {
        self.truncation = TruncationPolicy::fixed([dims, dims]);
        self
    }

    pub fn p1_form_str(&self) -> &'static str {
        match self.p1_form {
            P1Form::Printed => "printed",
            P1Form::Consistent => "consistent",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    reproduce: Option<Figure>,
    experiment: Option<Experiment>,
    name: Option<String>,
    out: Option<PathBuf>,
    cavity: Option<RawCavity>,
    p1_form: Option<RawP1Form>,
    #[serde(default)]
    per_two_pi: Vec<Field>,
    params: Option<RawParams>,
    qubit: Option<RawQubit>,
    grids: Option<RawGrids>,
    truncation: Option<RawTruncation>,
}

#[derive(Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawCavity {
    A,
    C,
    Both,
}

#[derive(Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawP1Form {
    Printed,
    Consistent,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    gamma: f64,
    gamma_f: f64,
    kappa: f64,
    delta_s: f64,
    chi: Option<f64>,
    delta: Option<f64>,
    /// `K = Δ/χ + 1`, an alternative to `delta`
    k: Option<f64>,
    epsilon: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubit {
    g: f64,
    #[serde(rename = "Omega", alias = "omega")]
    omega: f64,
    #[serde(rename = "delta_qT", alias = "delta_qt")]
    delta_qt: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    epsilon: Option<GridSpec>,
    k: Option<GridSpec>,
    delta_s: Option<GridSpec>,
    #[serde(rename = "delta_qT", alias = "delta_qt")]
    delta_qt: Option<GridSpec>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridSpec {
    Values(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeSpec {
    from: f64,
    to: f64,
    points: Option<usize>,
    step: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruncation {
    dims: Option<[usize; 2]>,
    step: Option<usize>,
    max_per_mode: Option<usize>,
    max_total: Option<usize>,
    tolerance: Option<f64>,
    escalate: Option<bool>,
}

impl GridSpec {
    fn values(self, name: &str) -> Result<Vec<f64>> {
        let v = match self {
            GridSpec::Values(v) => v,
            GridSpec::Range(r) => {
                let n = match (r.points, r.step) {
                    (Some(n), None) => n,
                    (None, Some(step)) if step > 0.0 && step.is_finite() => {
                        ((r.to - r.from) / step).round() as usize + 1
                    }
                    (None, Some(_)) => bail!("grids.{name}: step must be positive"),
                    _ => bail!("grids.{name}: give exactly one of `points` or `step`"),
                };
                match r.step {
                    Some(step) => (0..n).map(|i| r.from + step * i as f64).collect(),
                    None => cfnet::validation::linspace(r.from, r.to, n),
                }
            }
        };
        if v.is_empty() {
            bail!("grids.{name} is empty");
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            bail!("grids.{name} contains a non-finite value {x}");
        }
        Ok(v)
    }
}

fn grid(spec: Option<GridSpec>, name: &str) -> Result<Option<Vec<f64>>> {
    spec.map(|s| s.values(name)).transpose()
}

fn truncation(raw: Option<RawTruncation>, base: TruncationPolicy) -> Result<TruncationPolicy> {
    let Some(t) = raw else { return Ok(base) };
    let p = TruncationPolicy {
        initial: t.dims.or(base.initial),
        step: t.step.unwrap_or(base.step),
        max_per_mode: t.max_per_mode.unwrap_or(base.max_per_mode),
        max_total: t.max_total.unwrap_or(base.max_total),
        tolerance: t.tolerance.unwrap_or(base.tolerance),
        escalate: t.escalate.unwrap_or(base.escalate),
    };
    if p.step == 0 {
        bail!("truncation.step must be positive");
    }
    if let Some(d) = p.initial {
        if d.iter().any(|&x| x < 2) {
            bail!("truncation.dims must be at least 2 per mode");
        }
    }
    if !(p.tolerance > 0.0) {
        bail!("truncation.tolerance must be positive");
    }
    Ok(p)
}

pub fn parse_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_config_str(&text, stem).with_context(|| format!("in {}", path.display()))
}

/// Parses a scenario from TOML text; `default_name` names the outputs when
/// the file has no `name` key.
pub fn parse_config_str(text: &str, default_name: &str) -> Result<Scenario> {
    let raw: RawConfig = toml::from_str(text)?;
    if let Some(fig) = raw.reproduce {
        return from_recipe(fig, raw);
    }
    let experiment = raw.experiment.ok_or_else(|| anyhow!("missing field `experiment` (or `reproduce`)"))?;
    let name = raw.name.unwrap_or_else(|| default_name.to_string());
    let grids = match raw.grids {
        Some(g) => Grids {
            epsilon: grid(g.epsilon, "epsilon")?,
            k: grid(g.k, "k")?,
            delta_s: grid(g.delta_s, "delta_s")?,
            delta_qt: grid(g.delta_qt, "delta_qT")?,
        },
        None => Grids::default(),
    };
    let cavities = match raw.cavity.unwrap_or(RawCavity::A) {
        RawCavity::A => vec![Cavity::A],
        RawCavity::C => vec![Cavity::C],
        RawCavity::Both => vec![Cavity::A, Cavity::C],
    };
    let p1_form = match raw.p1_form {
        Some(RawP1Form::Consistent) => P1Form::Consistent,
        _ => P1Form::Printed,
    };
    let truncation = truncation(raw.truncation, TruncationPolicy::default())?;

    let mut scenario = Scenario {
        name,
        experiment,
        params: cfnet::validation::fig4_params(),
        grids,
        cavities,
        truncation,
        p1_form,
        qubit_coupling: None,
        kerr: None,
        per_two_pi: raw.per_two_pi,
        unit_mode: UnitMode::Verbatim,
        output: raw.out,
    };
    if experiment == Experiment::Validate {
        return Ok(scenario);
    }
    let rp = raw.params.ok_or_else(|| anyhow!("missing table `[params]`"))?;
    scenario.params = build_params(rp, raw.qubit, &mut scenario)?;
    require_grids(&scenario)?;
    Ok(scenario)
}

fn build_params(rp: RawParams, qubit: Option<RawQubit>, s: &mut Scenario) -> Result<CircuitParams> {
    let chi_sweep = s.experiment == Experiment::G2ChiSweep;
    let chi = match (rp.chi, &qubit) {
        (Some(_), Some(_)) => bail!("give either params.chi or a [qubit] block, not both"),
        (Some(chi), None) => chi,
        (None, Some(q)) => {
            s.qubit_coupling = Some((q.g, q.omega));
            let dq = match (q.delta_qt, chi_sweep) {
                (Some(dq), _) => dq,
                // the sweep sets χ per point; the first point only anchors K
                (None, true) => s.grids.delta_qt.as_ref().and_then(|g| g.first().copied()).unwrap_or(f64::NAN),
                (None, false) => bail!("missing field `qubit.delta_qT`"),
            };
            if !dq.is_finite() {
                bail!("missing grid `grids.delta_qT`");
            }
            let kerr = kerr_from_qubit(q.g, q.omega, dq).context("deriving chi from the qubit block")?;
            s.kerr = Some(kerr);
            kerr.chi
        }
        (None, None) => bail!("missing field `params.chi` (or a [qubit] block)"),
    };
    let delta = match (rp.delta, rp.k) {
        (Some(_), Some(_)) => bail!("give either params.delta or params.k, not both"),
        (Some(d), None) => d,
        (None, Some(k)) => (k - 1.0) * chi,
        (None, None) => 0.0,
    };
    let p = CircuitParams {
        gamma: rp.gamma,
        gamma_f: rp.gamma_f,
        kappa: rp.kappa,
        chi,
        delta_s: rp.delta_s,
        delta,
        epsilon: rp.epsilon.unwrap_or(0.0),
        qubit: qubit.as_ref().and_then(|q| q.delta_qt.map(|delta_qt| QubitParams { g: q.g, omega: q.omega, delta_qt })),
    };
    p.validate().map_err(|e| anyhow!("invalid parameter: {e}"))?;
    let needs_epsilon = matches!(
        s.experiment,
        Experiment::G2Ksweep | Experiment::G2Map | Experiment::G2ChiSweep | Experiment::WeakDriveCompare
    );
    if needs_epsilon && rp.epsilon.is_none() {
        bail!("missing field `params.epsilon` (required by {})", s.experiment);
    }
    if chi_sweep && s.qubit_coupling.is_none() {
        bail!("{} needs a [qubit] block with g and Omega", s.experiment);
    }
    Ok(p)
}

fn require_grids(s: &Scenario) -> Result<()> {
    let g = &s.grids;
    let need: &[(&str, bool)] = match s.experiment {
        Experiment::Bistability | Experiment::Hysteresis | Experiment::G2DriveSweep => &[("epsilon", g.epsilon.is_some())],
        Experiment::G2Ksweep | Experiment::WeakDriveCompare => &[("k", g.k.is_some())],
        Experiment::G2Map => &[("k", g.k.is_some()), ("delta_s", g.delta_s.is_some())],
        Experiment::G2ChiSweep => &[("delta_qT", g.delta_qt.is_some())],
        Experiment::Validate => &[],
    };
    for (name, present) in need {
        if !present {
            bail!("missing grid `grids.{name}` (required by {})", s.experiment);
        }
    }
    if matches!(s.experiment, Experiment::Bistability | Experiment::Hysteresis) {
        let eps = g.epsilon.as_deref().unwrap_or_default();
        if eps.windows(2).any(|w| w[1] <= w[0]) {
            bail!("grids.epsilon must be strictly ascending for {}", s.experiment);
        }
    }
    if matches!(s.experiment, Experiment::G2Ksweep | Experiment::G2Map) && s.params.chi == 0.0 {
        bail!("{} sweeps K = delta/chi + 1 and needs chi != 0", s.experiment);
    }
    Ok(())
}

fn from_recipe(fig: Figure, raw: RawConfig) -> Result<Scenario> {
    let extra = [
        ("experiment", raw.experiment.is_some()),
        ("name", raw.name.is_some()),
        ("cavity", raw.cavity.is_some()),
        ("p1_form", raw.p1_form.is_some()),
        ("per_two_pi", !raw.per_two_pi.is_empty()),
        ("params", raw.params.is_some()),
        ("qubit", raw.qubit.is_some()),
        ("grids", raw.grids.is_some()),
    ];
    if let Some((key, _)) = extra.iter().find(|(_, set)| *set) {
        bail!("`{key}` cannot be combined with `reproduce`; only `out` and `[truncation]` can");
    }
    let mut s = recipe(fig);
    s.truncation = truncation(raw.truncation, s.truncation)?;
    s.output = raw.out;
    Ok(s)
}
