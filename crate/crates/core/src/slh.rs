//! `(S, L, H)` triples and the series / feedback composition rules.

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::fock::{FockOperator, ModeSpace};

/// Tolerance for unitarity of `S` and Hermiticity of `H`, relative to
/// `max(1, ‖H‖)` for the latter.
pub const SLH_TOLERANCE: f64 = 1e-12;

/// An open quantum component with `n` field channels.
///
/// `S` is an `n × n` complex scalar matrix; `L` holds one coupling operator
/// per channel; `H` is the internal Hamiltonian.
#[derive(Clone, Debug)]
pub struct SlhTriple {
    scattering: Mat<c64>,
    coupling: Vec<FockOperator>,
    hamiltonian: FockOperator,
}

impl SlhTriple {
    pub fn new(scattering: Mat<c64>, coupling: Vec<FockOperator>, hamiltonian: FockOperator) -> Result<Self> {
        let n = coupling.len();
        if n == 0 {
            return Err(Error::ChannelMismatch { left: 0, right: scattering.nrows() });
        }
        if scattering.nrows() != n || scattering.ncols() != n {
            return Err(Error::ChannelMismatch { left: n, right: scattering.nrows().max(scattering.ncols()) });
        }
        for l in &coupling {
            if l.space() != hamiltonian.space() {
                return Err(Error::SpaceMismatch {
                    left: hamiltonian.space().dims().to_vec(),
                    right: l.space().dims().to_vec(),
                });
            }
        }
        let triple = Self { scattering, coupling, hamiltonian };
        let u = triple.unitarity_error();
        if u > SLH_TOLERANCE {
            return Err(Error::NonUnitary(u));
        }
        let h = triple.hamiltonian.hermiticity_error();
        if h > SLH_TOLERANCE * triple.hamiltonian.norm().max(1.0) {
            return Err(Error::NonHermitian(h));
        }
        Ok(triple)
    }

    /// `(1, L, H)`
    pub fn single_channel(coupling: FockOperator, hamiltonian: FockOperator) -> Result<Self> {
        Self::new(Mat::identity(1, 1), vec![coupling], hamiltonian)
    }

    /// `(S, 0, 0)`: a beam splitter or phase shifter with no system coupling.
    pub fn pure_scattering(space: &ModeSpace, scattering: Mat<c64>) -> Result<Self> {
        let n = scattering.nrows();
        Self::new(scattering, vec![FockOperator::zeros(space); n], FockOperator::zeros(space))
    }

    /// `(I, 0, 0)` on `channels` channels.
    pub fn identity(space: &ModeSpace, channels: usize) -> Result<Self> {
        Self::pure_scattering(space, Mat::identity(channels, channels))
    }

    pub fn channels(&self) -> usize {
        self.coupling.len()
    }

    pub fn space(&self) -> &ModeSpace {
        self.hamiltonian.space()
    }

    pub fn scattering(&self) -> &Mat<c64> {
        &self.scattering
    }

    pub fn coupling(&self) -> &[FockOperator] {
        &self.coupling
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.hamiltonian
    }

    /// `max(‖S†S − I‖, ‖SS† − I‖)` entrywise.
    pub fn unitarity_error(&self) -> f64 {
        let s = &self.scattering;
        let n = s.nrows();
        let id = Mat::<c64>::identity(n, n);
        let left = s.adjoint() * s - &id;
        let right = s * s.adjoint() - &id;
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max(left[(i, j)].norm()).max(right[(i, j)].norm());
            }
        }
        worst
    }

    /// Largest entrywise difference over `S`, every `L_k` and `H`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.channels() != other.channels() {
            return Err(Error::ChannelMismatch { left: self.channels(), right: other.channels() });
        }
        let n = self.channels();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((self.scattering[(i, j)] - other.scattering[(i, j)]).norm());
            }
        }
        for (l1, l2) in self.coupling.iter().zip(&other.coupling) {
            worst = worst.max(l1.max_abs_diff(l2)?);
        }
        Ok(worst.max(self.hamiltonian.max_abs_diff(&other.hamiltonian)?))
    }
}

/// `Σ_j m_ij L_j` for each row `i`.
fn rotate(m: &Mat<c64>, ops: &[FockOperator], space: &ModeSpace) -> Vec<FockOperator> {
    (0..m.nrows())
        .map(|i| {
            ops.iter()
                .enumerate()
                .fold(FockOperator::zeros(space), |acc, (j, l)| &acc + &l.scale(m[(i, j)]))
        })
        .collect()
}

/// `Σ_i x_i† y_i`
fn inner(x: &[FockOperator], y: &[FockOperator], space: &ModeSpace) -> FockOperator {
    x.iter()
        .zip(y)
        .fold(FockOperator::zeros(space), |acc, (xi, yi)| &acc + &(&xi.adjoint() * yi))
}

/// Cascade `first` into `second`: the output field of `first` drives `second`.
///
/// `(S₂S₁, L₂ + S₂L₁, H₁ + H₂ + (i/2)(L₁†S₂†L₂ − L₂†S₂L₁))`
pub fn series(first: &SlhTriple, second: &SlhTriple) -> Result<SlhTriple> {
    if first.channels() != second.channels() {
        return Err(Error::ChannelMismatch { left: first.channels(), right: second.channels() });
    }
    if first.space() != second.space() {
        return Err(Error::SpaceMismatch {
            left: first.space().dims().to_vec(),
            right: second.space().dims().to_vec(),
        });
    }
    let space = first.space();
    let s2 = &second.scattering;
    let s = s2 * &first.scattering;

    let s2_l1 = rotate(s2, &first.coupling, space);
    let l: Vec<FockOperator> = second.coupling.iter().zip(&s2_l1).map(|(l2, x)| l2 + x).collect();

    // L₁†S₂†L₂ = (S₂L₁)†L₂, and L₂†S₂L₁ is its adjoint.
    let cross = inner(&s2_l1, &second.coupling, space);
    let correction = (&cross - &cross.adjoint()).scale(c64::new(0.0, 0.5));
    let h = &(&first.hamiltonian + &second.hamiltonian) + &correction;

    SlhTriple::new(s, l, h)
}

/// Feed the output of `g` back into its own input.
///
/// `(S², L + SL, H + (i/2)L†(S† − S)L)`
pub fn direct_feedback(g: &SlhTriple) -> Result<SlhTriple> {
    let space = g.space();
    let s = &g.scattering;
    let s_sq = s * s;
    let sl = rotate(s, &g.coupling, space);
    let l: Vec<FockOperator> = g.coupling.iter().zip(&sl).map(|(a, b)| a + b).collect();

    let diff = s.adjoint() - s;
    let diff_l = rotate(&diff, &g.coupling, space);
    let correction = inner(&g.coupling, &diff_l, space).scale(c64::new(0.0, 0.5));
    let h = &g.hamiltonian + &correction;

    SlhTriple::new(s_sq, l, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{MODE_A, MODE_C};

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn space() -> ModeSpace {
        ModeSpace::two_mode(3, 3).unwrap()
    }

    #[test]
    fn series_of_two_cavities_matches_closed_form() {
        let s = space();
        let a = FockOperator::annihilator(&s, MODE_A).unwrap();
        let cc = FockOperator::annihilator(&s, MODE_C).unwrap();
        let (gamma, kappa, omega_s): (f64, f64, f64) = (2.0, 0.7, 1.3);
        let hc = &FockOperator::number(&s, MODE_C).unwrap() * 0.4;
        let g1 = SlhTriple::single_channel(&a * gamma.sqrt(), &FockOperator::number(&s, MODE_A).unwrap() * omega_s)
            .unwrap();
        let g2 = SlhTriple::single_channel(&cc * kappa.sqrt(), hc.clone()).unwrap();
        let out = series(&g1, &g2).unwrap();

        let l_expected = &(&cc * kappa.sqrt()) + &(&a * gamma.sqrt());
        let ad_c = &a.adjoint() * &cc;
        let cd_a = &cc.adjoint() * &a;
        let h_expected = &(&(&FockOperator::number(&s, MODE_A).unwrap() * omega_s) + &hc)
            + &(&ad_c - &cd_a).scale(c(0.0, 0.5 * (gamma * kappa).sqrt()));
        assert!(out.coupling()[0].max_abs_diff(&l_expected).unwrap() < 1e-14);
        assert!(out.hamiltonian().max_abs_diff(&h_expected).unwrap() < 1e-14);
        assert_eq!(out.scattering()[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn series_with_identity_is_noop() {
        let s = space();
        let a = FockOperator::annihilator(&s, MODE_A).unwrap();
        let g = SlhTriple::single_channel(&a * 1.5, FockOperator::number(&s, MODE_C).unwrap()).unwrap();
        let id = SlhTriple::identity(&s, 1).unwrap();
        assert_eq!(series(&g, &id).unwrap().max_abs_diff(&g).unwrap(), 0.0);
    }

    #[test]
    fn series_rejects_mismatches() {
        let s = space();
        let g1 = SlhTriple::identity(&s, 1).unwrap();
        let g2 = SlhTriple::identity(&s, 2).unwrap();
        assert!(matches!(series(&g1, &g2), Err(Error::ChannelMismatch { .. })));
        let other = SlhTriple::identity(&ModeSpace::two_mode(2, 3).unwrap(), 1).unwrap();
        assert!(matches!(series(&g1, &other), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn feedback_with_unit_scattering_doubles_coupling() {
        let s = space();
        let a = FockOperator::annihilator(&s, MODE_A).unwrap();
        let h = FockOperator::number(&s, MODE_A).unwrap();
        let g = SlhTriple::single_channel(&a * 0.8, h.clone()).unwrap();
        let fb = direct_feedback(&g).unwrap();
        assert!(fb.coupling()[0].max_abs_diff(&(&a * 1.6)).unwrap() < 1e-15);
        assert_eq!(fb.hamiltonian().max_abs_diff(&h).unwrap(), 0.0);
    }

    #[test]
    fn feedback_with_phase_i() {
        let s = space();
        let a = FockOperator::annihilator(&s, MODE_A).unwrap();
        let l = &a * 0.8;
        let h = FockOperator::number(&s, MODE_C).unwrap();
        let g = SlhTriple::new(Mat::from_fn(1, 1, |_, _| c(0.0, 1.0)), vec![l.clone()], h.clone()).unwrap();
        let fb = direct_feedback(&g).unwrap();
        assert!((fb.scattering()[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(fb.coupling()[0].max_abs_diff(&l.scale(c(1.0, 1.0))).unwrap() < 1e-15);
        let expected = &h + &(&l.adjoint() * &l);
        assert!(fb.hamiltonian().max_abs_diff(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn new_rejects_non_unitary_and_non_hermitian() {
        let s = space();
        let z = FockOperator::zeros(&s);
        assert!(matches!(
            SlhTriple::new(Mat::from_fn(1, 1, |_, _| c(2.0, 0.0)), vec![z.clone()], z.clone()),
            Err(Error::NonUnitary(_))
        ));
        let a = FockOperator::annihilator(&s, MODE_A).unwrap();
        assert!(matches!(SlhTriple::single_channel(z, a), Err(Error::NonHermitian(_))));
    }
}
