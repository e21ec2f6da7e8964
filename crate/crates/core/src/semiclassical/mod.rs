//! Mean-field treatment of the feedback circuit.
//!
//! The amplitudes `A = ⟨a⟩`, `C = ⟨c⟩` obey
//!
//! ```text
//! dA/dt = −iΔ_s A − ½(√γ+√γ_f)² A − √(κγ_f) C
//! dC/dt = −iΔ C + 2iχ|C|²C − (κ/2) C − √(κγ) A + iε
//! ```
//!
//! Eliminating `A` at steady state leaves a real cubic in `X = |C₀|²`:
//! `4χ²X³ − 4p₂χX² + (p₁² + p₂²)X = |ε|²`.

mod ode;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use rayon::prelude::*;

pub use ode::{relax as relax_ode, RelaxOutcome, RelaxTolerances};

use crate::circuit::CircuitParams;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanFieldState {
    pub a: c64,
    pub c: c64,
}

impl MeanFieldState {
    pub const VACUUM: Self = Self { a: c64 { re: 0.0, im: 0.0 }, c: c64 { re: 0.0, im: 0.0 } };

    pub fn to_real(self) -> [f64; 4] {
        [self.a.re, self.a.im, self.c.re, self.c.im]
    }

    pub fn from_real(y: &[f64; 4]) -> Self {
        Self { a: c64::new(y[0], y[1]), c: c64::new(y[2], y[3]) }
    }

    pub fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.c.norm_sqr()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_real().iter().all(|v| v.is_finite())
    }
}

/// Which expression is used for `p₁`.
///
/// `Printed` carries the factor `(4√γ + √γ_f)²`; `Consistent` uses
/// `(√γ + √γ_f)²`, which is what eliminating `A` from the amplitude
/// equations actually produces. Only `Consistent` roots are exact fixed
/// points of [`mean_field_rhs`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum P1Form {
    #[default]
    Printed,
    Consistent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanFieldOptions {
    pub p1_form: P1Form,
    /// global phase φ of the drive, `iε → iεe^{iφ}`
    pub drive_phase: f64,
}

/// Precomputed coefficients of the amplitude equations.
#[derive(Clone, Copy, Debug)]
struct Model {
    delta_s: f64,
    delta: f64,
    chi: f64,
    kappa: f64,
    half_gamma_total: f64,
    a_from_c: f64,
    c_from_a: f64,
    drive: c64,
}

impl Model {
    fn new(p: &CircuitParams, drive_phase: f64) -> Self {
        Self {
            delta_s: p.delta_s,
            delta: p.delta,
            chi: p.chi,
            kappa: p.kappa,
            half_gamma_total: 0.5 * p.gamma_total(),
            a_from_c: (p.kappa * p.gamma_f).sqrt(),
            c_from_a: (p.kappa * p.gamma).sqrt(),
            drive: c64::new(0.0, p.epsilon) * c64::cis(drive_phase),
        }
    }

    fn rhs(&self, s: &MeanFieldState) -> MeanFieldState {
        let i = c64::new(0.0, 1.0);
        let da = -i * self.delta_s * s.a - self.half_gamma_total * s.a - self.a_from_c * s.c;
        let dc = -i * self.delta * s.c + 2.0 * i * self.chi * s.c.norm_sqr() * s.c - 0.5 * self.kappa * s.c
            - self.c_from_a * s.a
            + self.drive;
        MeanFieldState { a: da, c: dc }
    }

    fn rhs_real(&self, y: &[f64; 4]) -> [f64; 4] {
        self.rhs(&MeanFieldState::from_real(y)).to_real()
    }

    /// Jacobian in `(Re A, Im A, Re C, Im C)`.
    fn jacobian(&self, s: &MeanFieldState) -> Mat<f64> {
        let i = c64::new(0.0, 1.0);
        let zero = c64::new(0.0, 0.0);
        // (∂f/∂z, ∂f/∂z̄) for each (equation, variable) pair
        let blocks = [
            [(-i * self.delta_s - self.half_gamma_total, zero), (c64::new(-self.a_from_c, 0.0), zero)],
            [
                (c64::new(-self.c_from_a, 0.0), zero),
                (
                    -i * self.delta - 0.5 * self.kappa + 4.0 * i * self.chi * s.c.norm_sqr(),
                    2.0 * i * self.chi * s.c * s.c,
                ),
            ],
        ];
        let mut j = Mat::<f64>::zeros(4, 4);
        for (eq, row) in blocks.iter().enumerate() {
            for (var, &(alpha, beta)) in row.iter().enumerate() {
                let dx = alpha + beta;
                let dy = i * (alpha - beta);
                j[(2 * eq, 2 * var)] = dx.re;
                j[(2 * eq + 1, 2 * var)] = dx.im;
                j[(2 * eq, 2 * var + 1)] = dy.re;
                j[(2 * eq + 1, 2 * var + 1)] = dy.im;
            }
        }
        j
    }
}

/// Right-hand side of the mean-field amplitude equations.
pub fn mean_field_rhs(s: &MeanFieldState, p: &CircuitParams) -> MeanFieldState {
    Model::new(p, 0.0).rhs(s)
}

/// Time derivative with the drive rotated by `drive_phase`.
pub fn mean_field_rhs_with_phase(s: &MeanFieldState, p: &CircuitParams, drive_phase: f64) -> MeanFieldState {
    Model::new(p, drive_phase).rhs(s)
}

/// Jacobian of [`mean_field_rhs`] in the real coordinates
/// `(Re A, Im A, Re C, Im C)`.
pub fn mean_field_jacobian(s: &MeanFieldState, p: &CircuitParams) -> Mat<f64> {
    Model::new(p, 0.0).jacobian(s)
}

/// Eigenvalues of the Jacobian at `s`.
pub fn linear_spectrum(s: &MeanFieldState, p: &CircuitParams) -> Result<Vec<c64>> {
    Model::new(p, 0.0)
        .jacobian(s)
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("jacobian eigenvalues: {e:?}")))
}

/// The reduced rates `p₁`, `p₂` and the `|A₀|²/|C₀|²` ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedRates {
    pub p1: f64,
    pub p2: f64,
    pub a0_ratio: f64,
}

pub fn reduced_rates(p: &CircuitParams, form: P1Form) -> Result<ReducedRates> {
    let sg = p.gamma.sqrt();
    let sgf = p.gamma_f.sqrt();
    let denom = 4.0 * p.delta_s * p.delta_s + (sg + sgf).powi(4);
    if denom == 0.0 {
        if p.kappa * p.gamma_f > 0.0 {
            return Err(Error::InvalidParameter {
                field: "delta_s",
                reason: "cavity a is undamped and resonant with the drive".into(),
            });
        }
        return Ok(ReducedRates { p1: 0.5 * p.kappa, p2: p.delta, a0_ratio: 0.0 });
    }
    let root = (p.gamma * p.gamma_f).sqrt();
    let factor = match form {
        P1Form::Printed => (4.0 * sg + sgf).powi(2),
        P1Form::Consistent => (sg + sgf).powi(2),
    };
    Ok(ReducedRates {
        p1: 0.5 * p.kappa - 2.0 * p.kappa * root * factor / denom,
        p2: p.delta + 4.0 * p.kappa * root * p.delta_s / denom,
        a0_ratio: 4.0 * p.kappa * p.gamma_f / denom,
    })
}

/// Real roots of `a₃x³ + a₂x² + a₁x + a₀` from the companion-matrix
/// eigenvalues, polished by Newton steps, sorted ascending.
///
/// An eigenvalue counts as real when `|Im λ| ≤ 1e−9·max(1, |λ|)`.
pub fn real_cubic_roots(coeffs: [f64; 4]) -> Result<Vec<f64>> {
    let [a3, a2, a1, a0] = coeffs;
    let scale = a2.abs().max(a1.abs()).max(a0.abs());
    if a3 == 0.0 || a3.abs() <= f64::EPSILON * scale {
        return Err(Error::DegenerateCubic);
    }
    let (b, c, d) = (a2 / a3, a1 / a3, a0 / a3);
    let companion = Mat::from_fn(3, 3, |i, j| match (i, j) {
        (0, 0) => -b,
        (0, 1) => -c,
        (0, 2) => -d,
        (1, 0) | (2, 1) => 1.0,
        _ => 0.0,
    });
    let eig = companion
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("companion eigenvalues: {e:?}")))?;
    let f = |x: f64| ((x + b) * x + c) * x + d;
    let df = |x: f64| (3.0 * x + 2.0 * b) * x + c;
    let mut roots: Vec<f64> = eig
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * z.norm().max(1.0))
        .map(|z| {
            let mut x = z.re;
            for _ in 0..3 {
                let slope = df(x);
                if slope == 0.0 {
                    break;
                }
                let step = f(x) / slope;
                if !step.is_finite() || step.abs() > 1e-6 * x.abs().max(1.0) {
                    break;
                }
                x -= step;
            }
            x
        })
        .collect();
    roots.sort_by(|x, y| x.total_cmp(y));
    Ok(roots)
}

/// `4χ²X³ − 4p₂χX² + (p₁² + p₂²)X − |ε|²`
pub fn intensity_cubic_residual(x: f64, chi: f64, p1: f64, p2: f64, epsilon: f64) -> f64 {
    4.0 * chi * chi * x.powi(3) - 4.0 * p2 * chi * x * x + (p1 * p1 + p2 * p2) * x - epsilon * epsilon
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `p₂ ≤ √3 p₁`: a single steady state for every drive
    Monostable,
    /// `p₂ > √3 p₁` but only one steady state at this drive
    BistableCapable,
    /// three positive steady states at this drive
    BistableAtThisDrive,
}

impl Regime {
    pub fn is_bistable_capable(self) -> bool {
        !matches!(self, Regime::Monostable)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Monostable => "monostable",
            Regime::BistableCapable => "bistable-capable",
            Regime::BistableAtThisDrive => "bistable-at-this-drive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyRoot {
    /// `|C₀|²`
    pub x: f64,
    /// `|A₀|²`
    pub a0_sq: f64,
    pub state: MeanFieldState,
    pub stable: bool,
    /// largest real part of the Jacobian spectrum
    pub max_growth_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BistabilityResult {
    pub epsilon: f64,
    pub p1: f64,
    pub p2: f64,
    pub roots: Vec<SteadyRoot>,
    pub regime: Regime,
    /// `√3 p₁³ / χ`
    pub threshold_eps_sq: f64,
    /// solved as the χ = 0 linear response
    pub linear: bool,
    pub p1_form: P1Form,
}

impl BistabilityResult {
    pub fn positive_roots(&self) -> usize {
        self.roots.iter().filter(|r| r.x > 0.0).count()
    }

    pub fn stable_roots(&self) -> usize {
        self.roots.iter().filter(|r| r.stable).count()
    }
}

pub fn steady_roots(p: &CircuitParams) -> Result<BistabilityResult> {
    steady_roots_with(p, &MeanFieldOptions::default())
}

/// Steady amplitudes from the intensity cubic, each classified by the
/// Jacobian spectrum (stable iff every eigenvalue has negative real part).
pub fn steady_roots_with(p: &CircuitParams, opts: &MeanFieldOptions) -> Result<BistabilityResult> {
    p.validate()?;
    let rates = reduced_rates(p, opts.p1_form)?;
    let (p1, p2) = (rates.p1, rates.p2);
    let chi = p.chi;
    let eps_sq = p.epsilon * p.epsilon;

    let linear = chi == 0.0 || chi.abs() <= f64::EPSILON * (p1.abs() + p2.abs());
    let xs: Vec<f64> = if linear {
        let denom = p1 * p1 + p2 * p2;
        if denom == 0.0 {
            return Err(Error::InvalidParameter { field: "chi", reason: "linear response undefined with p1 = p2 = 0".into() });
        }
        vec![eps_sq / denom]
    } else {
        let roots = real_cubic_roots([4.0 * chi * chi, -4.0 * p2 * chi, p1 * p1 + p2 * p2, -eps_sq])?;
        let scale = roots.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        roots.into_iter().filter(|&x| x >= -1e-12 * scale).map(|x| x.max(0.0)).collect()
    };

    let model = Model::new(p, opts.drive_phase);
    let a_factor = c64::new(0.5 * p.gamma_total(), p.delta_s);
    let mut roots = Vec::with_capacity(xs.len());
    for x in xs {
        // C₀ = iε / (p₁ + i(p₂ − 2χX)),  A₀ = −√(κγ_f) C₀ / (iΔ_s + Γ/2)
        let c0 = model.drive / c64::new(p1, p2 - 2.0 * chi * x);
        let a0 = if a_factor.norm() == 0.0 { c64::new(0.0, 0.0) } else { -model.a_from_c * c0 / a_factor };
        let state = MeanFieldState { a: a0, c: c0 };
        let eig = model
            .jacobian(&state)
            .eigenvalues()
            .map_err(|e| Error::Numerical(format!("jacobian eigenvalues: {e:?}")))?;
        let max_growth_rate = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        roots.push(SteadyRoot { x, a0_sq: rates.a0_ratio * x, state, stable: max_growth_rate < 0.0, max_growth_rate });
    }

    let positive = roots.iter().filter(|r| r.x > 0.0).count();
    let regime = if !(p2 > 3f64.sqrt() * p1) {
        Regime::Monostable
    } else if positive == 3 {
        Regime::BistableAtThisDrive
    } else {
        Regime::BistableCapable
    };
    Ok(BistabilityResult {
        epsilon: p.epsilon,
        p1,
        p2,
        roots,
        regime,
        threshold_eps_sq: 3f64.sqrt() * p1.powi(3) / chi,
        linear,
        p1_form: opts.p1_form,
    })
}

fn check_grid(grid: &[f64], field: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter { field, reason: "grid is empty".into() });
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter { field, reason: "grid contains non-finite values".into() });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter { field, reason: "grid must be strictly ascending".into() });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriveSweep {
    pub p1: f64,
    pub p2: f64,
    pub threshold_eps_sq: f64,
    pub rows: Vec<BistabilityResult>,
    /// first and last ε of the grid with three positive roots
    pub window: Option<(f64, f64)>,
    /// `p₂ > √3p₁` and some grid ε satisfies `|ε|² > √3p₁³/χ`
    pub threshold_admits: bool,
}

impl DriveSweep {
    /// The three-root window exists exactly when the threshold test admits one.
    pub fn window_matches_threshold(&self) -> bool {
        self.window.is_some() == self.threshold_admits
    }

    /// Every ε inside the window satisfies `|ε|² > √3p₁³/χ`.
    pub fn window_respects_threshold(&self) -> bool {
        self.window.is_none_or(|(lo, _)| lo * lo > self.threshold_eps_sq)
    }
}

pub fn drive_sweep(p: &CircuitParams, eps_grid: &[f64]) -> Result<DriveSweep> {
    drive_sweep_with(p, eps_grid, &MeanFieldOptions::default())
}

pub fn drive_sweep_with(p: &CircuitParams, eps_grid: &[f64], opts: &MeanFieldOptions) -> Result<DriveSweep> {
    check_grid(eps_grid, "epsilon grid")?;
    let rows = eps_grid
        .par_iter()
        .map(|&eps| steady_roots_with(&p.clone().with_epsilon(eps), opts))
        .collect::<Result<Vec<_>>>()?;
    let first = &rows[0];
    let (p1, p2, threshold) = (first.p1, first.p2, first.threshold_eps_sq);
    let mut window: Option<(f64, f64)> = None;
    for r in rows.iter().filter(|r| r.positive_roots() == 3) {
        window = Some(match window {
            None => (r.epsilon, r.epsilon),
            Some((lo, _)) => (lo, r.epsilon),
        });
    }
    let threshold_admits = p2 > 3f64.sqrt() * p1 && eps_grid.iter().any(|e| e * e > threshold);
    Ok(DriveSweep { p1, p2, threshold_eps_sq: threshold, rows, window, threshold_admits })
}

/// Integration settings for relaxing to a steady state.
#[derive(Clone, Copy, Debug)]
pub struct RelaxOptions {
    pub rtol: f64,
    pub atol: f64,
    pub rhs_tol: f64,
    /// `None` uses `10⁴ / min(κ, γ, γ_f, |p₁|)` over the positive rates
    pub max_time: Option<f64>,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-11, rhs_tol: 1e-9, max_time: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relaxed {
    pub state: MeanFieldState,
    pub time: f64,
    pub rhs_norm: f64,
}

fn default_max_time(p: &CircuitParams) -> Result<f64> {
    let p1 = reduced_rates(p, P1Form::Consistent)?.p1.abs();
    let slowest = [p.kappa, p.gamma, p.gamma_f, p1]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    Ok(if slowest.is_finite() { 1e4 / slowest } else { 1e4 })
}

/// Integrates the amplitude equations from `start` until the vector field is
/// small, then finishes with Newton steps on the fixed-point equation.
///
/// Explicit integration near a stable focus settles into step sizes at the
/// edge of the stability region, where `‖rhs‖` stalls around the local error
/// tolerance; the Newton stage takes it the rest of the way.
pub fn relax(p: &CircuitParams, start: MeanFieldState, opts: &RelaxOptions) -> Result<Relaxed> {
    let model = Model::new(p, 0.0);
    let tol = RelaxTolerances {
        rtol: opts.rtol,
        atol: opts.atol,
        rhs_tol: opts.rhs_tol.max(POLISH_FROM),
        max_time: match opts.max_time {
            Some(t) => t,
            None => default_max_time(p)?,
        },
    };
    let out = relax_ode(|y| model.rhs_real(y), start.to_real(), &tol).ok_or(Error::Diverged { epsilon: p.epsilon })?;
    if !out.converged {
        return Err(Error::NoConvergence { epsilon: p.epsilon, residual: out.rhs_norm, time: out.time });
    }
    let mut state = MeanFieldState::from_real(&out.y);
    let mut rhs_norm = out.rhs_norm;
    let origin = state;
    for _ in 0..NEWTON_STEPS {
        if rhs_norm < opts.rhs_tol {
            break;
        }
        let j = model.jacobian(&state);
        let f = model.rhs_real(&state.to_real());
        let b = Mat::from_fn(4, 1, |i, _| -f[i]);
        let dx = j.partial_piv_lu().solve(&b);
        let mut y = state.to_real();
        for (i, v) in y.iter_mut().enumerate() {
            *v += dx[(i, 0)];
        }
        let next = MeanFieldState::from_real(&y);
        if !next.is_finite() {
            break;
        }
        state = next;
        rhs_norm = model.rhs(&state).norm();
    }
    // a Newton step that wandered off to a different fixed point is not a relaxation
    let moved = MeanFieldState { a: state.a - origin.a, c: state.c - origin.c }.norm();
    if rhs_norm >= opts.rhs_tol || moved > 1e-3 * origin.norm().max(1.0) {
        return Err(Error::NoConvergence { epsilon: p.epsilon, residual: rhs_norm, time: out.time });
    }
    Ok(Relaxed { state, time: out.time, rhs_norm })
}

const POLISH_FROM: f64 = 1e-6;
const NEWTON_STEPS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HysteresisPoint {
    pub epsilon: f64,
    pub state: MeanFieldState,
    pub a0_sq: f64,
    pub c0_sq: f64,
}

impl HysteresisPoint {
    fn new(epsilon: f64, state: MeanFieldState) -> Self {
        Self { epsilon, state, a0_sq: state.a.norm_sqr(), c0_sq: state.c.norm_sqr() }
    }
}

/// Up- and down-sweep traces, both stored in ascending ε order so that
/// `up[i]` and `down[i]` share the same drive.
#[derive(Clone, Debug, PartialEq)]
pub struct Hysteresis {
    pub up: Vec<HysteresisPoint>,
    pub down: Vec<HysteresisPoint>,
}

impl Hysteresis {
    /// `|A₀|²` gap between the two traces at each grid point.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.up.iter().zip(&self.down).map(|(u, d)| (u.epsilon, (u.a0_sq - d.a0_sq).abs())).collect()
    }
}

/// Continuation in ε: each point relaxes from the previous steady state.
/// The up-sweep starts from the vacuum; the down-sweep starts from the top
/// of the up-sweep.
pub fn hysteresis(p: &CircuitParams, eps_grid: &[f64]) -> Result<Hysteresis> {
    hysteresis_with(p, eps_grid, &RelaxOptions::default())
}

pub fn hysteresis_with(p: &CircuitParams, eps_grid: &[f64], opts: &RelaxOptions) -> Result<Hysteresis> {
    check_grid(eps_grid, "epsilon grid")?;
    let mut state = MeanFieldState::VACUUM;
    let mut up = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        state = relax(&p.clone().with_epsilon(eps), state, opts)?.state;
        up.push(HysteresisPoint::new(eps, state));
    }
    let mut down = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid.iter().rev() {
        state = relax(&p.clone().with_epsilon(eps), state, opts)?.state;
        down.push(HysteresisPoint::new(eps, state));
    }
    down.reverse();
    Ok(Hysteresis { up, down })
}
