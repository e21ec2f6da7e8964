//! Weak-drive perturbation theory on the two-photon-truncated state
//! `|ψ⟩ = Σ C_{n_a n_c}|n_a n_c⟩`, `n ≤ 2`, with losses folded into complex
//! detunings, and the closed-form g2 that follows from it.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};

use crate::circuit::{collective_coupling, total_hamiltonian, CircuitParams};
use crate::error::{Error, Result};
use crate::fock::{FockOperator, ModeSpace};

/// Drive above which the two-photon truncation is flagged as unreliable.
pub const WEAK_DRIVE_LIMIT: f64 = 0.3;

/// Relative residual above which the amplitude system counts as singular.
const SINGULAR_RESIDUAL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexDetunings {
    /// `Δ_s − i(√γ+√γ_f)²/2`
    pub delta_s_c: c64,
    /// `Δ − iκ/2`
    pub delta_c: c64,
    /// `(√γ+√γ_f)² + κ`
    pub gamma_a: f64,
}

impl ComplexDetunings {
    pub fn new(p: &CircuitParams) -> Self {
        let g = p.gamma_total();
        Self {
            delta_s_c: c64::new(p.delta_s, -0.5 * g),
            delta_c: c64::new(p.delta, -0.5 * p.kappa),
            gamma_a: g + p.kappa,
        }
    }
}

/// How losses enter the non-Hermitian Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossModel {
    /// each cavity's own decay as an imaginary detuning
    #[default]
    ComplexDetunings,
    /// `H_tot − (i/2)L_tot†L_tot`, keeping the dissipative cross term
    /// between the two cavities that the collective jump operator carries
    CollectiveDissipator,
}

/// Amplitudes `C[n_a][n_c]` with `C[0][0] = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeTable {
    pub c: [[c64; 3]; 3],
    /// set when `ε > 0.3κ`
    pub drive_warning: bool,
}

impl AmplitudeTable {
    pub fn from_amplitudes(c: [[c64; 3]; 3]) -> Self {
        Self { c, drive_warning: false }
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn with_phase(&self, phi: f64) -> Self {
        let z = c64::cis(phi);
        let mut c = self.c;
        for row in c.iter_mut() {
            for v in row.iter_mut() {
                *v *= z;
            }
        }
        Self { c, drive_warning: self.drive_warning }
    }
}

fn truncated_space() -> ModeSpace {
    ModeSpace::two_mode(3, 3).expect("3x3 space is valid")
}

/// Non-Hermitian Hamiltonian on the `(3, 3)` space.
pub fn effective_hamiltonian(p: &CircuitParams, model: LossModel) -> Result<FockOperator> {
    let space = truncated_space();
    match model {
        LossModel::ComplexDetunings => {
            let d = ComplexDetunings::new(p);
            total_hamiltonian(&space, p, d.delta_s_c, d.delta_c)
        }
        LossModel::CollectiveDissipator => {
            let h = total_hamiltonian(&space, p, c64::new(p.delta_s, 0.0), c64::new(p.delta, 0.0))?;
            let l = collective_coupling(p, &space)?;
            Ok(&h - &(&l.adjoint() * &l).scale(c64::new(0.0, 0.5)))
        }
    }
}

pub fn solve_amplitudes(p: &CircuitParams) -> Result<AmplitudeTable> {
    solve_amplitudes_with(p, LossModel::ComplexDetunings)
}

/// Solves `H|ψ⟩ = 0` for the eight amplitudes other than `C₀₀ = 1`. The
/// `⟨00|` row is dropped: it would fix `C₀₀`, which the gauge already does.
pub fn solve_amplitudes_with(p: &CircuitParams, model: LossModel) -> Result<AmplitudeTable> {
    p.validate()?;
    if !(p.epsilon > 0.0) {
        return Err(Error::InvalidParameter { field: "epsilon", reason: "weak-drive amplitudes need ε > 0".into() });
    }
    let h = effective_hamiltonian(p, model)?;
    let a = Mat::from_fn(8, 8, |i, j| h.get(i + 1, j + 1));
    let b = Mat::from_fn(8, 1, |i, _| -h.get(i + 1, 0));
    let x = a.partial_piv_lu().solve(&b);
    let finite = (0..8).all(|i| x[(i, 0)].re.is_finite() && x[(i, 0)].im.is_finite());
    if !finite {
        return Err(Error::SingularSystem);
    }
    let r = &a * &x - &b;
    let scale = a.norm_l2() * x.norm_l2() + b.norm_l2();
    if r.norm_l2() > SINGULAR_RESIDUAL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularSystem);
    }
    let mut c = [[c64::new(0.0, 0.0); 3]; 3];
    c[0][0] = c64::new(1.0, 0.0);
    for k in 0..8 {
        let idx = k + 1;
        c[idx / 3][idx % 3] = x[(k, 0)];
    }
    Ok(AmplitudeTable { c, drive_warning: p.epsilon > WEAK_DRIVE_LIMIT * p.kappa })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Occupations {
    pub p1: f64,
    pub p2: f64,
}

/// `P_n = Σ_{n_c} |C_{n, n_c}|²` for `n = 1, 2`.
pub fn occupations(t: &AmplitudeTable) -> Occupations {
    let row = |n: usize| t.c[n].iter().map(|z| z.norm_sqr()).sum::<f64>();
    Occupations { p1: row(1), p2: row(2) }
}

/// The printed leading-order expressions for `P₁`, `P₂`, evaluated with the
/// complex detunings in place of `Δ_s` and `Δ`.
pub fn leading_order_occupations(p: &CircuitParams) -> Occupations {
    let d = ComplexDetunings::new(p);
    let chi = c64::new(p.chi, 0.0);
    let drive_sq = (2.0 * p.exchange_coupling() * p.epsilon).powi(2);
    let p1 = drive_sq / ((d.delta_c - chi) * d.delta_s_c).norm_sqr();
    let num = drive_sq * drive_sq * (d.delta_s_c - 2.0 * chi + d.delta_c).norm_sqr();
    let den = 2.0
        * ((d.delta_c - chi) * (d.delta_c - 2.0 * chi) * (d.delta_s_c + d.delta_c - chi) * d.delta_s_c * d.delta_s_c)
            .norm_sqr();
    Occupations { p1, p2: num / den }
}

/// `P₁ ≈ |Gε / (Δ̃ Δ̃_s)|²` with `G` = [`CircuitParams::exchange_coupling`]:
/// `C₀₁ ≈ ε/Δ̃` at first order, and `C₁₀ ≈ −iG C₀₁ / Δ̃_s`.
pub fn first_order_p1(p: &CircuitParams) -> f64 {
    let d = ComplexDetunings::new(p);
    (p.exchange_coupling() * p.epsilon).powi(2) / (d.delta_c * d.delta_s_c).norm_sqr()
}

/// `2P₂ / (P₁ + 2P₂)²`
pub fn g2_from_occupations(p1: f64, p2: f64) -> Result<f64> {
    if !(p1 > 0.0) {
        return Err(Error::ZeroOccupation(p1));
    }
    Ok(2.0 * p2 / (p1 + 2.0 * p2).powi(2))
}

/// Weak-drive g2 of the controlled cavity at detuning `Δ = (K − 1)χ`:
///
/// ```text
/// |Δ_s + (K−2)χ − iγ_a/2|² |(K−1)χ − iκ/2|²
/// ──────────────────────────────────────────────────
/// |((K−2)χ − iκ/2)(Δ_s + (K−1)χ − iγ_a/2)|²
/// ```
pub fn g2_closed_form(p: &CircuitParams, k: f64) -> Result<f64> {
    if p.chi == 0.0 {
        return Err(Error::InvalidParameter { field: "chi", reason: "K = Δ/χ + 1 needs χ ≠ 0".into() });
    }
    let ga = ComplexDetunings::new(p).gamma_a;
    let chi = p.chi;
    let half_kappa = 0.5 * p.kappa;
    let num = c64::new(p.delta_s + (k - 2.0) * chi, -0.5 * ga).norm_sqr() * c64::new((k - 1.0) * chi, -half_kappa).norm_sqr();
    let den = (c64::new((k - 2.0) * chi, -half_kappa) * c64::new(p.delta_s + (k - 1.0) * chi, -0.5 * ga)).norm_sqr();
    if den == 0.0 {
        return Err(Error::ClosedFormSingular);
    }
    Ok(num / den)
}

/// The `K = 1` reduction
/// `(4κ²(Δ_s−χ)² + κ²γ_a²) / (4κ²Δ_s² + 16χ²Δ_s² + (4χ²+κ²)γ_a²)`.
pub fn g2_closed_form_k1(p: &CircuitParams) -> Result<f64> {
    let ga = ComplexDetunings::new(p).gamma_a;
    let (k2, chi, ds) = (p.kappa * p.kappa, p.chi, p.delta_s);
    let num = 4.0 * k2 * (ds - chi).powi(2) + k2 * ga * ga;
    let den = 4.0 * k2 * ds * ds + 16.0 * chi * chi * ds * ds + (4.0 * chi * chi + k2) * ga * ga;
    if den == 0.0 {
        return Err(Error::ClosedFormSingular);
    }
    Ok(num / den)
}

/// One printed amplitude equation as coefficients on the `|n_a n_c⟩` basis
/// (index `3n_a + n_c`).
#[derive(Clone, Debug, PartialEq)]
pub struct PrintedEquation {
    pub label: &'static str,
    /// basis index of the amplitude whose equation this is
    pub row: usize,
    pub coefficients: [c64; 9],
}

/// The printed amplitude equations, including the duplicated first one,
/// with complex detunings substituted.
pub fn printed_equations(p: &CircuitParams) -> Vec<PrintedEquation> {
    let d = ComplexDetunings::new(p);
    let (ds, dl, chi, eps) = (d.delta_s_c, d.delta_c, c64::new(p.chi, 0.0), c64::new(p.epsilon, 0.0));
    let i = c64::new(0.0, 1.0);
    let g2 = c64::new(2.0 * p.exchange_coupling(), 0.0);
    let r2 = std::f64::consts::SQRT_2;
    let zero = c64::new(0.0, 0.0);
    let mk = |label, row, terms: &[(usize, c64)]| {
        let mut coefficients = [zero; 9];
        for &(k, v) in terms {
            coefficients[k] += v;
        }
        PrintedEquation { label, row, coefficients }
    };
    // index = 3 n_a + n_c
    let (c00, c01, c02, c10, c11, c12, c20, c21, c22) = (0, 1, 2, 3, 4, 5, 6, 7, 8);
    let c10_eq = [(c10, ds), (c11, -eps), (c01, i * g2 * 0.5)];
    vec![
        mk("C10", c10, &c10_eq),
        mk("C10 (repeated)", c10, &c10_eq),
        mk("C11", c11, &[(c11, ds + dl), (c10, -eps), (c12, -eps * r2), (c02, i * g2 / r2), (c20, -i * g2 / r2)]),
        mk("C12", c12, &[(c12, ds + 2.0 * dl - 2.0 * chi), (c11, -eps * r2), (c21, -i * g2)]),
        mk("C01", c01, &[(c00, -eps), (c02, -eps * r2), (c10, -i * g2 * 0.5), (c01, dl)]),
        mk("C02", c02, &[(c02, 2.0 * dl - 2.0 * chi), (c01, -eps * r2), (c11, -i * g2 / r2)]),
        mk("C21", c21, &[(c21, 2.0 * ds + dl), (c20, -eps), (c22, -eps * r2), (c12, i * g2)]),
        mk("C20", c20, &[(c20, 2.0 * ds), (c21, -eps), (c11, i * g2 / r2)]),
        mk("C22", c22, &[(c22, 2.0 * ds + 2.0 * dl - 2.0 * chi), (c21, -eps * r2)]),
    ]
}

/// Comparison of the printed equations with the rows of the programmatic
/// system.
#[derive(Clone, Debug, PartialEq)]
pub struct PrintedFixture {
    /// `(label, max coefficient difference)` per printed equation
    pub rows: Vec<(&'static str, f64)>,
    /// basis indices with no printed equation
    pub missing_rows: Vec<usize>,
    /// labels printed more than once
    pub duplicated: Vec<&'static str>,
}

impl PrintedFixture {
    pub fn max_difference(&self) -> f64 {
        self.rows.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

pub fn printed_fixture(p: &CircuitParams) -> Result<PrintedFixture> {
    let h = effective_hamiltonian(p, LossModel::ComplexDetunings)?;
    let eqs = printed_equations(p);
    let mut seen = [false; 9];
    let mut duplicated = Vec::new();
    let mut rows = Vec::new();
    for e in &eqs {
        if seen[e.row] {
            duplicated.push(e.label);
        }
        seen[e.row] = true;
        let diff = (0..9).map(|k| (h.get(e.row, k) - e.coefficients[k]).norm()).fold(0.0, f64::max);
        rows.push((e.label, diff));
    }
    let missing_rows = (0..9).filter(|&k| !seen[k]).collect();
    Ok(PrintedFixture { rows, missing_rows, duplicated })
}
