//! The Kerr coherent-feedback circuit: parameters, the qubit-induced Kerr
//! coefficient, and the flattened `(S, L, H)` description in the frame
//! rotating at the drive frequency.
//!
//! The controlled cavity `a` couples to the field twice (rates `gamma` on the
//! way in, `gamma_f` on the way back) with the Kerr controller `c` (rate
//! `kappa`) between the two passes.

use faer::c64;

use crate::error::{Error, Result};
use crate::fock::{FockOperator, ModeSpace, MODE_A, MODE_C};
use crate::slh::{series, SlhTriple};

/// Ratio above which the dispersive/adiabatic elimination of the qubit is
/// flagged as questionable.
pub const VALIDITY_RATIO: f64 = 0.1;

/// Qubit parameters from which the Kerr coefficient can be derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitParams {
    /// qubit–cavity coupling
    pub g: f64,
    /// Rabi frequency of the qubit drive
    pub omega: f64,
    /// qubit–cavity detuning
    pub delta_qt: f64,
}

/// All rates and detunings of the circuit, in one angular-frequency unit.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitParams {
    pub gamma: f64,
    pub gamma_f: f64,
    pub kappa: f64,
    pub chi: f64,
    /// `ω_s − ω₂`
    pub delta_s: f64,
    /// `ω_c − ω₂`
    pub delta: f64,
    pub epsilon: f64,
    pub qubit: Option<QubitParams>,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma", self.gamma),
            ("gamma_f", self.gamma_f),
            ("kappa", self.kappa),
            ("chi", self.chi),
            ("delta_s", self.delta_s),
            ("delta", self.delta),
            ("epsilon", self.epsilon),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParameter { field, reason: format!("must be finite, got {value}") });
            }
        }
        for (field, value) in [("gamma", self.gamma), ("gamma_f", self.gamma_f), ("kappa", self.kappa), ("epsilon", self.epsilon)] {
            if value < 0.0 {
                return Err(Error::InvalidParameter { field, reason: format!("must be >= 0, got {value}") });
            }
        }
        if let Some(q) = &self.qubit {
            kerr_from_qubit(q.g, q.omega, q.delta_qt)?;
        }
        Ok(())
    }

    /// Replaces `chi` with the value derived from the qubit block.
    pub fn with_qubit(mut self, qubit: QubitParams) -> Result<(Self, KerrFromQubit)> {
        let k = kerr_from_qubit(qubit.g, qubit.omega, qubit.delta_qt)?;
        self.chi = k.chi;
        self.qubit = Some(qubit);
        Ok((self, k))
    }

    /// `K = Δ/χ + 1`
    pub fn k(&self) -> f64 {
        self.delta / self.chi + 1.0
    }

    /// Sets `Δ = (K − 1)χ`.
    pub fn with_k(mut self, k: f64) -> Self {
        self.delta = (k - 1.0) * self.chi;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_delta_s(mut self, delta_s: f64) -> Self {
        self.delta_s = delta_s;
        self
    }

    /// `√γ + √γ_f`, the total coupling amplitude of cavity `a`.
    pub fn sqrt_gamma_total(&self) -> f64 {
        self.gamma.sqrt() + self.gamma_f.sqrt()
    }

    /// `(√γ + √γ_f)²`, the energy decay rate of cavity `a`.
    pub fn gamma_total(&self) -> f64 {
        self.sqrt_gamma_total().powi(2)
    }

    /// `(√(κγ) − √(κγ_f)) / 2`, the coherent exchange coefficient between the
    /// two cavities; `H ∋ i·coupling·(a†c − c†a)`.
    pub fn exchange_coupling(&self) -> f64 {
        0.5 * ((self.kappa * self.gamma).sqrt() - (self.kappa * self.gamma_f).sqrt())
    }
}

/// Kerr coefficient of the dispersively coupled, strongly driven qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KerrFromQubit {
    pub chi: f64,
    /// `g² / (Δ_qT·Ω)`, should be ≪ 1
    pub rabi_ratio: f64,
    /// `g / Δ_qT`, should be ≪ 1
    pub dispersive_ratio: f64,
    /// Set when either ratio exceeds [`VALIDITY_RATIO`].
    pub warning: bool,
}

/// `χ = g⁴ / (2ΩΔ_qT²)` with its validity ratios.
pub fn kerr_from_qubit(g: f64, omega: f64, delta_qt: f64) -> Result<KerrFromQubit> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter { field: "omega", reason: format!("must be > 0, got {omega}") });
    }
    if !(delta_qt > 0.0) || !delta_qt.is_finite() {
        return Err(Error::InvalidParameter { field: "delta_qt", reason: format!("must be > 0, got {delta_qt}") });
    }
    if !g.is_finite() {
        return Err(Error::InvalidParameter { field: "g", reason: format!("must be finite, got {g}") });
    }
    let chi = g.powi(4) / (2.0 * omega * delta_qt * delta_qt);
    let rabi_ratio = g * g / (delta_qt * omega);
    let dispersive_ratio = g.abs() / delta_qt;
    Ok(KerrFromQubit {
        chi,
        rabi_ratio,
        dispersive_ratio,
        warning: rabi_ratio > VALIDITY_RATIO || dispersive_ratio > VALIDITY_RATIO,
    })
}

fn require_two_modes(space: &ModeSpace) -> Result<()> {
    if space.num_modes() != 2 {
        return Err(Error::InvalidSpace(format!(
            "the feedback circuit needs exactly 2 modes, got {}",
            space.num_modes()
        )));
    }
    Ok(())
}

/// Controller Hamiltonian `Δc†c − χ(c†)²c² − ε(c† + c)` in the rotating frame.
/// Complex `delta` is accepted for the non-Hermitian weak-drive treatment.
pub(crate) fn controller_hamiltonian(space: &ModeSpace, delta: c64, chi: f64, epsilon: f64) -> Result<FockOperator> {
    let c = FockOperator::annihilator(space, MODE_C)?;
    let cd = c.adjoint();
    let n = &cd * &c;
    let kerr = &(&cd * &cd) * &(&c * &c);
    Ok(&(&n.scale(delta) - &(&kerr * chi)) - &(&(&cd + &c) * epsilon))
}

/// Coupling term `i·G·(a†c − c†a)` with `G` = [`CircuitParams::exchange_coupling`].
pub(crate) fn exchange_term(space: &ModeSpace, coupling: f64) -> Result<FockOperator> {
    let a = FockOperator::annihilator(space, MODE_A)?;
    let c = FockOperator::annihilator(space, MODE_C)?;
    let x = &(&a.adjoint() * &c) - &(&c.adjoint() * &a);
    Ok(x.scale(c64::new(0.0, coupling)))
}

/// `H_tot` with (possibly complex) detunings. Real detunings give the
/// Hermitian rotating-frame Hamiltonian.
pub(crate) fn total_hamiltonian(space: &ModeSpace, p: &CircuitParams, delta_s: c64, delta: c64) -> Result<FockOperator> {
    require_two_modes(space)?;
    let na = FockOperator::number(space, MODE_A)?;
    let hc = controller_hamiltonian(space, delta, p.chi, p.epsilon)?;
    let x = exchange_term(space, p.exchange_coupling())?;
    Ok(&(&na.scale(delta_s) + &hc) + &x)
}

/// `H_tot = Δ_s a†a + Δ c†c − χ(c†)²c² − ε(c† + c) + (i/2)(√(κγ) − √(κγ_f))(a†c − c†a)`,
/// written out term by term.
pub fn rotating_frame_hamiltonian(p: &CircuitParams, space: &ModeSpace) -> Result<FockOperator> {
    total_hamiltonian(space, p, c64::new(p.delta_s, 0.0), c64::new(p.delta, 0.0))
}

/// `L_tot = (√γ + √γ_f)a + √κ c`
pub fn collective_coupling(p: &CircuitParams, space: &ModeSpace) -> Result<FockOperator> {
    require_two_modes(space)?;
    let a = FockOperator::annihilator(space, MODE_A)?;
    let c = FockOperator::annihilator(space, MODE_C)?;
    Ok(&(&a * p.sqrt_gamma_total()) + &(&c * p.kappa.sqrt()))
}

/// The three components the feedback loop is assembled from: the controlled
/// cavity seen through its input port, the Kerr controller, and the same
/// cavity seen through its feedback port.
///
/// The second pass through cavity `a` carries no Hamiltonian of its own; its
/// free evolution is already counted by the first pass.
pub fn circuit_components(p: &CircuitParams, space: &ModeSpace) -> Result<[SlhTriple; 3]> {
    require_two_modes(space)?;
    let a = FockOperator::annihilator(space, MODE_A)?;
    let c = FockOperator::annihilator(space, MODE_C)?;
    let cavity = FockOperator::number(space, MODE_A)?.scale(c64::new(p.delta_s, 0.0));
    let controller = controller_hamiltonian(space, c64::new(p.delta, 0.0), p.chi, p.epsilon)?;
    Ok([
        SlhTriple::single_channel(&a * p.gamma.sqrt(), cavity)?,
        SlhTriple::single_channel(&c * p.kappa.sqrt(), controller)?,
        SlhTriple::single_channel(&a * p.gamma_f.sqrt(), FockOperator::zeros(space))?,
    ])
}

/// Flattened `(S'', L'', H'')` of the whole loop, in the rotating frame, built
/// by cascading [`circuit_components`] with [`series`].
pub fn build_circuit(p: &CircuitParams, space: &ModeSpace) -> Result<SlhTriple> {
    let [input, controller, feedback] = circuit_components(p, space)?;
    series(&series(&input, &controller)?, &feedback)
}

/// Linear mean-field drift of `(⟨a⟩, ⟨c⟩)` implied by an `(S, L, H)` triple:
/// `d⟨x_j⟩/dt = Σ_k M_jk ⟨x_k⟩ + f_j + (nonlinear terms)`.
///
/// Read off from matrix elements between the vacuum and the one-photon
/// states, which is exact for Hamiltonians whose nonlinear part annihilates
/// one-photon states (as the Kerr term does).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDrift {
    pub matrix: [[c64; 2]; 2],
    pub forcing: [c64; 2],
}

pub fn linear_drift(triple: &SlhTriple) -> Result<LinearDrift> {
    let space = triple.space();
    require_two_modes(space)?;
    let h = triple.hamiltonian();
    let vac = space.index_of(&[0, 0])?;
    let one = [space.index_of(&[1, 0])?, space.index_of(&[0, 1])?];
    let e0 = h.get(vac, vac);
    let minus_i = c64::new(0.0, -1.0);

    let mut matrix = [[c64::new(0.0, 0.0); 2]; 2];
    let mut forcing = [c64::new(0.0, 0.0); 2];
    for j in 0..2 {
        forcing[j] = minus_i * h.get(one[j], vac);
        for k in 0..2 {
            let mut hjk = h.get(one[j], one[k]);
            if j == k {
                hjk -= e0;
            }
            let mut m = minus_i * hjk;
            for l in triple.coupling() {
                // L = Σ l_k x_k + ...; l_k = <0|L|1_k>
                let lj = l.get(vac, one[j]);
                let lk = l.get(vac, one[k]);
                m -= 0.5 * lj.conj() * lk;
            }
            matrix[j][k] = m;
        }
    }
    Ok(LinearDrift { matrix, forcing })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn sample() -> CircuitParams {
        CircuitParams {
            gamma: 2.0,
            gamma_f: 2.5,
            kappa: 1.0,
            chi: 10.0,
            delta_s: 50.0,
            delta: 0.0,
            epsilon: 0.1,
            qubit: None,
        }
    }

    #[test]
    fn kerr_substitution() {
        let k = kerr_from_qubit(1.0, 0.5, 1.0).unwrap();
        assert!((k.chi - 1.0).abs() < 1e-15);
        assert!(k.warning);
        let base = kerr_from_qubit(0.3, 2.0, 5.0).unwrap().chi;
        assert!((kerr_from_qubit(0.6, 2.0, 5.0).unwrap().chi / base - 16.0).abs() < 1e-12);
        assert!((kerr_from_qubit(0.3, 2.0, 2.5).unwrap().chi / base - 4.0).abs() < 1e-12);
    }

    #[test]
    fn kerr_validity_ratios() {
        let k = kerr_from_qubit(2000.0, 2000.0, 20000.0).unwrap();
        assert!((k.dispersive_ratio - 0.1).abs() < 1e-15);
        assert!((k.rabi_ratio - 0.1).abs() < 1e-15);
        assert!(!k.warning);
        assert!(kerr_from_qubit(2000.0, 2000.0, 19000.0).unwrap().warning);
    }

    #[test]
    fn kerr_rejects_nonpositive() {
        assert!(matches!(kerr_from_qubit(1.0, 0.0, 1.0), Err(Error::InvalidParameter { field: "omega", .. })));
        assert!(matches!(kerr_from_qubit(1.0, 1.0, -1.0), Err(Error::InvalidParameter { field: "delta_qt", .. })));
    }

    #[test]
    fn validate_names_the_field() {
        let mut p = sample();
        p.kappa = -1.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { field: "kappa", .. })));
    }

    #[test]
    fn k_roundtrip() {
        let p = sample().with_k(1.7);
        assert!((p.delta - 7.0).abs() < 1e-12);
        assert!((p.k() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn collective_coupling_matches_flattened_circuit() {
        let p = sample();
        let space = ModeSpace::two_mode(3, 4).unwrap();
        let circuit = build_circuit(&p, &space).unwrap();
        let l = collective_coupling(&p, &space).unwrap();
        assert!(circuit.coupling()[0].max_abs_diff(&l).unwrap() < 1e-14);
    }

    #[test]
    fn symmetric_feedback_has_no_exchange_term() {
        let mut p = sample();
        p.gamma_f = p.gamma;
        let space = ModeSpace::two_mode(3, 3).unwrap();
        let h = build_circuit(&p, &space).unwrap().hamiltonian().clone();
        let idx10 = space.index_of(&[1, 0]).unwrap();
        let idx01 = space.index_of(&[0, 1]).unwrap();
        assert!(h.get(idx10, idx01).norm() < 1e-15);
        assert!(h.get(idx01, idx10).norm() < 1e-15);
    }

    #[test]
    fn zero_kappa_decouples_controller() {
        let mut p = sample();
        p.kappa = 0.0;
        let space = ModeSpace::two_mode(3, 3).unwrap();
        let circuit = build_circuit(&p, &space).unwrap();
        let a = FockOperator::annihilator(&space, MODE_A).unwrap();
        let expected = &a * p.sqrt_gamma_total();
        assert!(circuit.coupling()[0].max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn undriven_linear_hamiltonian_is_diagonal() {
        let mut p = sample();
        p.epsilon = 0.0;
        p.chi = 0.0;
        p.gamma_f = p.gamma;
        p.delta = 3.0;
        let space = ModeSpace::two_mode(3, 3).unwrap();
        let h = rotating_frame_hamiltonian(&p, &space).unwrap();
        for i in 0..9 {
            let occ = space.occupations(i);
            let diag = p.delta_s * occ[0] as f64 + p.delta * occ[1] as f64;
            for j in 0..9 {
                let expected = if i == j { diag } else { 0.0 };
                assert!((h.get(i, j) - c64::new(expected, 0.0)).norm() < 1e-12, "({i},{j}) {:?} vs {expected}", h.get(i, j));
            }
        }
    }

    #[test]
    fn kerr_matrix_element_on_two_photons() {
        let mut p = sample();
        p.epsilon = 0.0;
        p.delta = 0.0;
        let space = ModeSpace::two_mode(2, 3).unwrap();
        let h = rotating_frame_hamiltonian(&p, &space).unwrap();
        let k = space.index_of(&[0, 2]).unwrap();
        assert!((h.get(k, k) - c64::new(-2.0 * p.chi, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn rotating_frame_hamiltonian_is_hermitian() {
        let space = ModeSpace::two_mode(4, 5).unwrap();
        let h = rotating_frame_hamiltonian(&sample().with_k(1.3), &space).unwrap();
        assert!(h.hermiticity_error() < 1e-13);
    }

    #[test]
    fn wrong_mode_count() {
        let space = ModeSpace::new(&[3]).unwrap();
        assert!(matches!(build_circuit(&sample(), &space), Err(Error::InvalidSpace(_))));
        assert!(matches!(rotating_frame_hamiltonian(&sample(), &space), Err(Error::InvalidSpace(_))));
    }

    #[test]
    fn drift_of_flattened_circuit_matches_mean_field_equations() {
        let p = sample().with_k(1.4);
        let space = ModeSpace::two_mode(3, 3).unwrap();
        let d = linear_drift(&build_circuit(&p, &space).unwrap()).unwrap();
        let i = c64::new(0.0, 1.0);
        let expected = [
            [-i * p.delta_s - 0.5 * p.gamma_total(), c64::new(-(p.kappa * p.gamma_f).sqrt(), 0.0)],
            [c64::new(-(p.kappa * p.gamma).sqrt(), 0.0), -i * p.delta - 0.5 * p.kappa],
        ];
        for j in 0..2 {
            for k in 0..2 {
                assert!((d.matrix[j][k] - expected[j][k]).norm() < 1e-13, "M[{j}][{k}] = {}", d.matrix[j][k]);
            }
        }
        assert!(d.forcing[0].norm() < 1e-15);
        assert!((d.forcing[1] - i * p.epsilon).norm() < 1e-15);
    }
}
