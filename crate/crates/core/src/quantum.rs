//! Lindblad master equation for the circuit: Liouvillian construction,
//! steady-state density matrices and zero-delay photon correlations.
//!
//! Superoperators act on column-stacked density matrices,
//! `vec(ρ)[i + n·j] = ρ[i, j]`, so `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};
use rayon::prelude::*;

use crate::circuit::{build_circuit, kerr_from_qubit, CircuitParams, KerrFromQubit};
use crate::error::{Error, Result};
use crate::fock::{FockOperator, ModeSpace, MODE_A, MODE_C};

/// Hermiticity tolerance on `H`, relative to `max(1, ‖H‖)`.
pub const HAMILTONIAN_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const POSITIVITY_FLOOR: f64 = -1e-8;
/// Residual bound relative to the Frobenius norm of the Liouvillian.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Null-space uniqueness: second-smallest singular value over the largest.
pub const GAP_TOLERANCE: f64 = 1e-6;
/// g2 is undefined below this mean photon number.
pub const VACUUM_THRESHOLD: f64 = 1e-12;

/// Superoperator dimension up to which [`SolveMethod::Auto`] uses the SVD.
const AUTO_SVD_LIMIT: usize = 256;
/// Largest superoperator dimension for which a failed LU solve is diagnosed
/// with a full SVD.
const DIAGNOSTIC_SVD_LIMIT: usize = 1024;

/// Dense generator of `ρ ↦ −i[H,ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    hamiltonian: FockOperator,
    jumps: Vec<FockOperator>,
    matrix: Mat<c64>,
    norm: f64,
}

/// `K = −iH − ½ Σ L_k†L_k`, so that `dρ/dt = Kρ + ρK† + Σ L_k ρ L_k†`.
fn effective_generator(h: &FockOperator, jumps: &[FockOperator]) -> FockOperator {
    let mut k = h.scale(c64::new(0.0, -1.0));
    for l in jumps {
        k = &k - &(&l.adjoint() * l).scale(c64::new(0.5, 0.0));
    }
    k
}

fn check_inputs(h: &FockOperator, jumps: &[FockOperator]) -> Result<()> {
    let err = h.hermiticity_error();
    if err > HAMILTONIAN_TOLERANCE * h.norm().max(1.0) {
        return Err(Error::NonHermitian(err));
    }
    for l in jumps {
        if l.space() != h.space() {
            return Err(Error::SpaceMismatch { left: h.space().dims().to_vec(), right: l.space().dims().to_vec() });
        }
    }
    Ok(())
}

/// `I ⊗ K + conj(K) ⊗ I + Σ conj(L) ⊗ L`, filled entry by entry.
fn fill_matrix(h: &FockOperator, jumps: &[FockOperator]) -> Mat<c64> {
    let n = h.dim();
    let k = effective_generator(h, jumps);
    let km = k.matrix();
    let mut m = Mat::<c64>::zeros(n * n, n * n);
    for j in 0..n {
        for kk in 0..n {
            for i in 0..n {
                m[(i + n * j, kk + n * j)] += km[(i, kk)];
            }
        }
    }
    for l in 0..n {
        for j in 0..n {
            let v = km[(j, l)].conj();
            if v == c64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                m[(i + n * j, i + n * l)] += v;
            }
        }
    }
    for op in jumps {
        let lm = op.matrix();
        let nonzero: Vec<(usize, usize, c64)> = (0..n)
            .flat_map(|c| (0..n).map(move |r| (r, c)))
            .filter_map(|(r, c)| {
                let v = lm[(r, c)];
                (v != c64::new(0.0, 0.0)).then_some((r, c, v))
            })
            .collect();
        for &(j, l, x) in &nonzero {
            let x = x.conj();
            for &(i, kk, y) in &nonzero {
                m[(i + n * j, kk + n * l)] += x * y;
            }
        }
    }
    m
}

fn frobenius(m: &Mat<c64>) -> f64 {
    m.norm_l2()
}

/// Builds the Liouvillian for Hamiltonian `h` and jump operators `jumps`.
pub fn build_liouvillian(h: &FockOperator, jumps: &[FockOperator]) -> Result<Liouvillian> {
    check_inputs(h, jumps)?;
    let matrix = fill_matrix(h, jumps);
    let norm = frobenius(&matrix);
    Ok(Liouvillian { hamiltonian: h.clone(), jumps: jumps.to_vec(), matrix, norm })
}

/// `dρ/dt` evaluated directly in operator form.
pub fn lindblad_rhs(h: &FockOperator, jumps: &[FockOperator], rho: &FockOperator) -> Result<FockOperator> {
    if rho.space() != h.space() {
        return Err(Error::SpaceMismatch { left: h.space().dims().to_vec(), right: rho.space().dims().to_vec() });
    }
    let k = effective_generator(h, jumps);
    let mut out = &(&k * rho) + &(rho * &k.adjoint());
    for l in jumps {
        out = &out + &(&(l * rho) * &l.adjoint());
    }
    Ok(out)
}

/// Column-stacks an operator.
pub fn vectorize(op: &FockOperator) -> Mat<c64> {
    let n = op.dim();
    let m = op.matrix();
    Mat::from_fn(n * n, 1, |idx, _| m[(idx % n, idx / n)])
}

/// Inverse of [`vectorize`].
pub fn unvectorize(space: &ModeSpace, v: &Mat<c64>) -> Result<FockOperator> {
    let n = space.total_dim();
    if v.nrows() != n * n || v.ncols() != 1 {
        return Err(Error::DimensionMismatch { expected: n * n, actual: v.nrows() });
    }
    FockOperator::from_matrix(space.clone(), Mat::from_fn(n, n, |i, j| v[(i + n * j, 0)]))
}

impl Liouvillian {
    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn space(&self) -> &ModeSpace {
        self.hamiltonian.space()
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[FockOperator] {
        &self.jumps
    }

    /// Superoperator dimension `n²`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Applies the matrix to `vec(ρ)` and reshapes.
    pub fn apply(&self, rho: &FockOperator) -> Result<FockOperator> {
        if rho.space() != self.space() {
            return Err(Error::SpaceMismatch {
                left: self.space().dims().to_vec(),
                right: rho.space().dims().to_vec(),
            });
        }
        let v = &self.matrix * vectorize(rho);
        unvectorize(self.space(), &v)
    }

    /// `max_col |vec(I)† · L[:, col]|`; zero for a trace-preserving generator.
    pub fn trace_preservation_error(&self) -> f64 {
        let n = self.space().total_dim();
        let mut worst = 0.0f64;
        for col in 0..self.dim() {
            let mut s = c64::new(0.0, 0.0);
            for i in 0..n {
                s += self.matrix[(i + n * i, col)];
            }
            worst = worst.max(s.norm());
        }
        worst
    }

    pub fn eigenvalues(&self) -> Result<Vec<c64>> {
        self.matrix.eigenvalues().map_err(|e| Error::Numerical(format!("liouvillian eigenvalues: {e:?}")))
    }

    /// `‖dρ/dt‖_F` in operator form.
    pub fn residual(&self, rho: &FockOperator) -> Result<f64> {
        Ok(lindblad_rhs(&self.hamiltonian, &self.jumps, rho)?.norm())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolveMethod {
    /// SVD for small superoperators, LU with a trace row above that
    #[default]
    Auto,
    Svd,
    Lu,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyStateOptions {
    pub method: SolveMethod,
    /// Rescale Fock levels by `λ^n` per mode before solving. Weakly driven
    /// states span many orders of magnitude between `ρ₀₀` and the
    /// multi-photon coherences; without rescaling those coherences drown
    /// in round-off.
    pub balance: bool,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { method: SolveMethod::Auto, balance: true }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyDensityMatrix {
    pub rho: FockOperator,
    /// `‖L(ρ)‖_F`
    pub residual: f64,
    /// `‖L‖_F` of the generator that produced `ρ`
    pub liouvillian_norm: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub method: SolveMethod,
}

impl SteadyDensityMatrix {
    /// `Tr(ρ N_mode)` for every mode.
    pub fn mean_occupations(&self) -> Vec<f64> {
        mean_occupations(&self.rho)
    }
}

fn mean_occupations(rho: &FockOperator) -> Vec<f64> {
    let space = rho.space();
    let mut out = vec![0.0; space.num_modes()];
    for i in 0..space.total_dim() {
        let p = rho.get(i, i).re;
        for (m, n) in space.occupations(i).into_iter().enumerate() {
            out[m] += p * n as f64;
        }
    }
    out
}

/// Diagonal similarity weights `d_i = Π_m λ_m^{n_m(i)}`.
fn balance_weights(space: &ModeSpace, lambdas: &[f64]) -> Vec<f64> {
    (0..space.total_dim())
        .map(|i| {
            space
                .occupations(i)
                .iter()
                .zip(lambdas)
                .map(|(&n, &l)| l.powi(n as i32))
                .product()
        })
        .collect()
}

/// Rescales `m` in place to `D⁻¹ m D` with `D = diag(d_i d_j)` on superoperator indices.
fn apply_balance(m: &mut Mat<c64>, weights: &[f64]) {
    let n = weights.len();
    let sup: Vec<f64> = (0..n * n).map(|idx| weights[idx % n] * weights[idx / n]).collect();
    for col in 0..n * n {
        for row in 0..n * n {
            let v = m[(row, col)];
            if v != c64::new(0.0, 0.0) {
                m[(row, col)] = v * (sup[col] / sup[row]);
            }
        }
    }
}

fn singular_values(m: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let svd = m.svd().map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector();
    let values: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((values, svd.V().to_owned()))
}

/// Right singular vector of the smallest singular value. With `check_gap`,
/// a second singular value within `GAP_TOLERANCE` of zero is an error.
fn null_vector_svd(m: &Mat<c64>, check_gap: bool) -> Result<Mat<c64>> {
    let (values, v) = singular_values(m)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let largest = values[order[order.len() - 1]];
    let smallest = values[order[0]];
    let second = order.get(1).map_or(0.0, |&i| values[i]);
    if check_gap && second <= GAP_TOLERANCE * largest {
        return Err(Error::DegenerateNullSpace { smallest, second });
    }
    let idx = order[0];
    Ok(Mat::from_fn(v.nrows(), 1, |i, _| v[(i, idx)]))
}

/// Solves with the `ρ₀₀` equation replaced by the weighted trace condition.
fn null_vector_lu(m: &Mat<c64>, trace_weights: &[(usize, f64)]) -> Mat<c64> {
    let dim = m.nrows();
    let mut a = m.clone();
    for col in 0..dim {
        a[(0, col)] = c64::new(0.0, 0.0);
    }
    for &(idx, w) in trace_weights {
        a[(0, idx)] = c64::new(w, 0.0);
    }
    let mut b = Mat::<c64>::zeros(dim, 1);
    b[(0, 0)] = c64::new(1.0, 0.0);
    let lu = a.partial_piv_lu();
    let mut x = lu.solve(&b);
    // one step of iterative refinement
    let r = &b - &a * &x;
    x = &x + lu.solve(&r);
    x
}

fn superoperator_weights(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    (0..n * n).map(|idx| weights[idx % n] * weights[idx / n]).collect()
}

/// Un-balances, reshapes, Hermitizes and normalizes a null vector.
fn finish_density(space: &ModeSpace, x: &Mat<c64>, weights: &[f64]) -> Result<FockOperator> {
    let sup = superoperator_weights(weights);
    let n = space.total_dim();
    if (0..x.nrows()).any(|i| !(x[(i, 0)].re.is_finite() && x[(i, 0)].im.is_finite())) {
        return Err(Error::SingularSystem);
    }
    let raw = Mat::from_fn(n, n, |i, j| x[(i + n * j, 0)] * sup[i + n * j]);
    let herm = Mat::from_fn(n, n, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
    let trace: f64 = (0..n).map(|i| herm[(i, i)].re).sum();
    if !(trace.abs() > 0.0) || !trace.is_finite() {
        return Err(Error::SingularSystem);
    }
    FockOperator::from_matrix(space.clone(), Mat::from_fn(n, n, |i, j| herm[(i, j)] / trace))
}

fn min_eigenvalue(rho: &FockOperator) -> Result<f64> {
    let eig = rho
        .matrix()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("density eigenvalues: {e:?}")))?;
    Ok(eig.into_iter().fold(f64::INFINITY, f64::min))
}

/// One null-vector solve after rescaling by `weights`. Singular values of a
/// rescaled matrix say nothing about degeneracy of the original, so the gap
/// is only checked on the unscaled solve.
fn solve_once(l: &Liouvillian, method: SolveMethod, weights: &[f64]) -> Result<FockOperator> {
    let space = l.space();
    let n = space.total_dim();
    let mut m = l.matrix.clone();
    let balanced = weights.iter().any(|&w| w != 1.0);
    if balanced {
        apply_balance(&mut m, weights);
    }
    let use_svd = match method {
        SolveMethod::Svd => true,
        SolveMethod::Lu => false,
        SolveMethod::Auto => l.dim() <= AUTO_SVD_LIMIT,
    };
    let x = if use_svd {
        null_vector_svd(&m, !balanced)?
    } else {
        // Tr ρ = Σ_i d_i² x_ii
        let trace: Vec<(usize, f64)> = (0..n).map(|i| (i + n * i, weights[i] * weights[i])).collect();
        let x = null_vector_lu(&m, &trace);
        let finite = (0..x.nrows()).all(|i| x[(i, 0)].re.is_finite() && x[(i, 0)].im.is_finite());
        if !finite {
            if l.dim() <= DIAGNOSTIC_SVD_LIMIT {
                // surfaces a degenerate null space by name
                null_vector_svd(&l.matrix, true)?;
            }
            return Err(Error::SingularSystem);
        }
        x
    };
    finish_density(space, &x, weights)
}

pub fn steady_state(l: &Liouvillian) -> Result<SteadyDensityMatrix> {
    steady_state_with(l, &SteadyStateOptions::default())
}

/// Steady state of `l` with every invariant checked.
pub fn steady_state_with(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<SteadyDensityMatrix> {
    let space = l.space().clone();
    let unit = vec![1.0; space.total_dim()];
    let mut rho = solve_once(l, opts.method, &unit)?;
    if opts.balance {
        let lambdas: Vec<f64> = mean_occupations(&rho)
            .into_iter()
            .map(|n| if n.is_finite() && n > 0.0 { n.sqrt().clamp(1e-8, 1.0) } else { 1e-8 })
            .collect();
        if lambdas.iter().any(|&x| x < 1.0) {
            rho = solve_once(l, opts.method, &balance_weights(&space, &lambdas))?;
        }
    }

    let trace_error = (rho.trace() - c64::new(1.0, 0.0)).norm();
    if trace_error > TRACE_TOLERANCE {
        return Err(Error::SteadyStateInvariant { what: "trace", value: trace_error });
    }
    let hermiticity_error = rho.hermiticity_error();
    if hermiticity_error > HERMITICITY_TOLERANCE {
        return Err(Error::SteadyStateInvariant { what: "hermiticity", value: hermiticity_error });
    }
    let min_eig = min_eigenvalue(&rho)?;
    if min_eig < POSITIVITY_FLOOR {
        return Err(Error::SteadyStateInvariant { what: "positivity", value: min_eig });
    }
    let residual = l.residual(&rho)?;
    if !(residual < RESIDUAL_TOLERANCE * l.norm.max(f64::MIN_POSITIVE)) {
        return Err(Error::SteadyStateInvariant { what: "residual", value: residual });
    }
    let method = match opts.method {
        SolveMethod::Auto if l.dim() <= AUTO_SVD_LIMIT => SolveMethod::Svd,
        SolveMethod::Auto => SolveMethod::Lu,
        m => m,
    };
    Ok(SteadyDensityMatrix {
        rho,
        residual,
        liouvillian_norm: l.norm,
        trace_error,
        hermiticity_error,
        min_eigenvalue: min_eig,
        method,
    })
}

/// Liouvillian of the full circuit with the single collective jump operator.
pub fn circuit_liouvillian(p: &CircuitParams, space: &ModeSpace) -> Result<Liouvillian> {
    let triple = build_circuit(p, space)?;
    build_liouvillian(triple.hamiltonian(), triple.coupling())
}

pub fn circuit_steady_state(p: &CircuitParams, dims: [usize; 2]) -> Result<SteadyDensityMatrix> {
    let space = ModeSpace::two_mode(dims[0], dims[1])?;
    steady_state(&circuit_liouvillian(p, &space)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cavity {
    /// the controlled resonator
    A,
    /// the Kerr controller
    C,
}

impl Cavity {
    pub fn mode(self) -> usize {
        match self {
            Cavity::A => MODE_A,
            Cavity::C => MODE_C,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Cavity::A => "a",
            Cavity::C => "c",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonStatistics {
    pub g2: f64,
    pub mean_photon: f64,
    /// `⟨x†²x²⟩`
    pub pair_moment: f64,
}

/// `g2 = ⟨x†²x²⟩ / ⟨x†x⟩²` for the mode of `cavity`.
///
/// Both moments are diagonal in the number basis, so only `ρ_ii` enter.
pub fn photon_statistics(rho: &FockOperator, cavity: Cavity) -> Result<PhotonStatistics> {
    photon_statistics_for_mode(rho, cavity.mode())
}

pub fn photon_statistics_for_mode(rho: &FockOperator, mode: usize) -> Result<PhotonStatistics> {
    let space = rho.space();
    if mode >= space.num_modes() {
        return Err(Error::ModeOutOfRange { mode, modes: space.num_modes() });
    }
    let (mut n1, mut n2) = (0.0, 0.0);
    for i in 0..space.total_dim() {
        let p = rho.get(i, i).re;
        let n = space.occupations(i)[mode] as f64;
        n1 += p * n;
        n2 += p * n * (n - 1.0);
    }
    if !(n1 > VACUUM_THRESHOLD) {
        return Err(Error::VacuumState(n1));
    }
    Ok(PhotonStatistics { g2: n2 / (n1 * n1), mean_photon: n1, pair_moment: n2 })
}

/// Number distribution of one mode, `P(n)` for `n < dim`.
pub fn mode_populations(rho: &FockOperator, cavity: Cavity) -> Result<Vec<f64>> {
    let space = rho.space();
    let mode = cavity.mode();
    if mode >= space.num_modes() {
        return Err(Error::ModeOutOfRange { mode, modes: space.num_modes() });
    }
    let mut out = vec![0.0; space.dims()[mode]];
    for i in 0..space.total_dim() {
        out[space.occupations(i)[mode]] += rho.get(i, i).re;
    }
    Ok(out)
}

/// How Fock truncations are chosen and escalated.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationPolicy {
    /// starting dims; `None` picks from the drive strength
    pub initial: Option<[usize; 2]>,
    pub step: usize,
    pub max_per_mode: usize,
    /// cap on `dim_a · dim_c` (memory grows as its square)
    pub max_total: usize,
    /// relative g2 change under `dim → dim + step` that counts as converged
    pub tolerance: f64,
    /// when false, solve once at the initial dims and skip the check
    pub escalate: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { initial: None, step: 2, max_per_mode: 12, max_total: 48, tolerance: 0.01, escalate: true }
    }
}

impl TruncationPolicy {
    pub fn fixed(dims: [usize; 2]) -> Self {
        Self { initial: Some(dims), escalate: false, ..Self::default() }
    }

    pub fn starting_at(dims: [usize; 2]) -> Self {
        Self { initial: Some(dims), ..Self::default() }
    }

    /// `(4,4)` for `ε ≤ 0.3κ`, `(4,8)` above.
    pub fn initial_dims(&self, p: &CircuitParams) -> [usize; 2] {
        self.initial.unwrap_or(if p.epsilon <= 0.3 * p.kappa { [4, 4] } else { [4, 8] })
    }

    fn allows(&self, dims: [usize; 2]) -> bool {
        dims.iter().all(|&d| d <= self.max_per_mode) && dims[0] * dims[1] <= self.max_total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct G2Result {
    pub g2: f64,
    pub mean_photon: f64,
    pub cavity: Cavity,
    pub truncation: [usize; 2],
    pub converged: bool,
    /// largest relative g2 change seen under the last `+step` checks
    pub truncation_change: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
}

struct Solved {
    stats: PhotonStatistics,
    residual: f64,
    min_eigenvalue: f64,
}

/// g2 of `cavity` in the circuit steady state, raising the truncation until a
/// `+step` change in either mode moves g2 by less than the tolerance.
pub fn solve_g2(p: &CircuitParams, cavity: Cavity, policy: &TruncationPolicy) -> Result<G2Result> {
    p.validate()?;
    let mut cache: BTreeMap<[usize; 2], Solved> = BTreeMap::new();
    let mut solve = |dims: [usize; 2]| -> Result<PhotonStatistics> {
        if let Some(s) = cache.get(&dims) {
            return Ok(s.stats);
        }
        let ss = circuit_steady_state(p, dims)?;
        let stats = photon_statistics(&ss.rho, cavity)?;
        cache.insert(dims, Solved { stats, residual: ss.residual, min_eigenvalue: ss.min_eigenvalue });
        Ok(stats)
    };

    let mut dims = policy.initial_dims(p);
    let mut base = solve(dims)?;
    let mut converged = false;
    let mut change = f64::NAN;
    if policy.escalate {
        loop {
            let mut grow = [false; 2];
            let mut worst = 0.0f64;
            let mut capped = false;
            for m in 0..2 {
                let mut next = dims;
                next[m] += policy.step;
                if !policy.allows(next) {
                    capped = true;
                    continue;
                }
                let s = solve(next)?;
                let rel = (s.g2 - base.g2).abs() / base.g2.abs().max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
                grow[m] = rel >= policy.tolerance;
            }
            change = worst;
            if capped {
                break;
            }
            if !grow[0] && !grow[1] {
                converged = true;
                break;
            }
            let mut next = dims;
            for m in 0..2 {
                if grow[m] {
                    next[m] += policy.step;
                }
            }
            if !policy.allows(next) {
                break;
            }
            dims = next;
            base = solve(dims)?;
        }
    }
    let s = &cache[&dims];
    Ok(G2Result {
        g2: base.g2,
        mean_photon: base.mean_photon,
        cavity,
        truncation: dims,
        converged,
        truncation_change: change,
        residual: s.residual,
        min_eigenvalue: s.min_eigenvalue,
    })
}

/// One point of a sweep. Failed points keep their error.
#[derive(Clone, Debug)]
pub struct SweepPoint<X> {
    pub at: X,
    pub params: CircuitParams,
    pub result: Result<G2Result>,
}

fn require_kerr(p: &CircuitParams) -> Result<()> {
    if p.chi == 0.0 {
        return Err(Error::InvalidParameter { field: "chi", reason: "K = Δ/χ + 1 needs χ ≠ 0".into() });
    }
    Ok(())
}

/// g2 against `K = Δ/χ + 1`.
pub fn k_sweep(p: &CircuitParams, k_grid: &[f64], cavity: Cavity, policy: &TruncationPolicy) -> Result<Vec<SweepPoint<f64>>> {
    require_kerr(p)?;
    p.validate()?;
    Ok(k_grid
        .par_iter()
        .map(|&k| {
            let q = p.clone().with_k(k);
            SweepPoint { at: k, result: solve_g2(&q, cavity, policy), params: q }
        })
        .collect())
}

/// g2 on the `(K, Δ_s)` plane, `K` varying fastest.
pub fn k_delta_s_map(
    p: &CircuitParams,
    k_grid: &[f64],
    delta_s_grid: &[f64],
    cavity: Cavity,
    policy: &TruncationPolicy,
) -> Result<Vec<SweepPoint<(f64, f64)>>> {
    require_kerr(p)?;
    p.validate()?;
    let points: Vec<(f64, f64)> = delta_s_grid.iter().flat_map(|&ds| k_grid.iter().map(move |&k| (k, ds))).collect();
    Ok(points
        .par_iter()
        .map(|&(k, ds)| {
            let q = p.clone().with_delta_s(ds).with_k(k);
            SweepPoint { at: (k, ds), result: solve_g2(&q, cavity, policy), params: q }
        })
        .collect())
}

/// g2 against drive amplitude at fixed detunings. `ε = 0` yields a vacuum error row.
pub fn drive_strength_sweep(
    p: &CircuitParams,
    eps_grid: &[f64],
    cavity: Cavity,
    policy: &TruncationPolicy,
) -> Vec<SweepPoint<f64>> {
    eps_grid
        .par_iter()
        .map(|&eps| {
            let q = p.clone().with_epsilon(eps);
            SweepPoint { at: eps, result: solve_g2(&q, cavity, policy), params: q }
        })
        .collect()
}

/// A qubit detuning point: the derived Kerr strength and the resulting g2.
#[derive(Clone, Debug)]
pub struct ChiPoint {
    pub delta_qt: f64,
    pub kerr: Result<KerrFromQubit>,
    pub point: Option<SweepPoint<f64>>,
}

/// g2 against qubit detuning with χ derived from `(g, Ω, Δ_qT)`.
pub fn chi_sweep(
    p: &CircuitParams,
    g: f64,
    omega: f64,
    delta_qt_grid: &[f64],
    cavity: Cavity,
    policy: &TruncationPolicy,
) -> Vec<ChiPoint> {
    let k = p.k();
    delta_qt_grid
        .par_iter()
        .map(|&dq| match kerr_from_qubit(g, omega, dq) {
            Ok(kerr) => {
                let mut q = p.clone();
                q.chi = kerr.chi;
                q.delta = (k - 1.0) * kerr.chi;
                let result = solve_g2(&q, cavity, policy);
                ChiPoint { delta_qt: dq, kerr: Ok(kerr), point: Some(SweepPoint { at: kerr.chi, params: q, result }) }
            }
            Err(e) => ChiPoint { delta_qt: dq, kerr: Err(e), point: None },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(dim: usize) -> ModeSpace {
        ModeSpace::new(&[dim]).unwrap()
    }

    #[test]
    fn amplitude_damping_spectrum() {
        let s = single(2);
        let gamma = 0.8;
        let a = FockOperator::annihilator(&s, 0).unwrap();
        let l = build_liouvillian(&FockOperator::zeros(&s), &[&a * f64::sqrt(gamma)]).unwrap();
        let mut eig: Vec<f64> = l.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        for (x, e) in eig.iter().zip([0.0, -gamma / 2.0, -gamma / 2.0, -gamma]) {
            assert!((x - e).abs() < 1e-12, "{eig:?}");
        }
    }

    #[test]
    fn matrix_agrees_with_operator_form() {
        let s = ModeSpace::two_mode(3, 2).unwrap();
        let a = FockOperator::annihilator(&s, 0).unwrap();
        let c = FockOperator::annihilator(&s, 1).unwrap();
        let h = &(&a.adjoint() * &c) + &(&c.adjoint() * &a);
        let h = &h + &FockOperator::number(&s, 0).unwrap();
        let jumps = [&a * 0.7, &(&c * 0.3) + &a];
        let l = build_liouvillian(&h, &jumps).unwrap();
        let rho = FockOperator::from_matrix(s.clone(), Mat::from_fn(6, 6, |i, j| c64::new((i + 2 * j) as f64, i as f64 - j as f64))).unwrap();
        let via_matrix = l.apply(&rho).unwrap();
        let direct = lindblad_rhs(&h, &jumps, &rho).unwrap();
        assert!(via_matrix.max_abs_diff(&direct).unwrap() < 1e-12);
        assert!(l.trace_preservation_error() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        let s = single(3);
        let a = FockOperator::annihilator(&s, 0).unwrap();
        assert!(matches!(build_liouvillian(&a, &[]), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn undriven_cavity_relaxes_to_vacuum() {
        let s = single(4);
        let a = FockOperator::annihilator(&s, 0).unwrap();
        let h = &FockOperator::number(&s, 0).unwrap() * 1.7;
        let l = build_liouvillian(&h, &[&a * 1.1]).unwrap();
        for method in [SolveMethod::Svd, SolveMethod::Lu] {
            let ss = steady_state_with(&l, &SteadyStateOptions { method, balance: true }).unwrap();
            assert!((ss.rho.get(0, 0).re - 1.0).abs() < 1e-12);
            assert!(matches!(photon_statistics_for_mode(&ss.rho, 0), Err(Error::VacuumState(_))));
        }
    }

    #[test]
    fn degenerate_null_space_is_named() {
        // no dissipation: every number state is stationary
        let s = single(3);
        let l = build_liouvillian(&FockOperator::number(&s, 0).unwrap(), &[]).unwrap();
        let err = steady_state_with(&l, &SteadyStateOptions { method: SolveMethod::Svd, balance: false }).unwrap_err();
        assert!(matches!(err, Error::DegenerateNullSpace { .. }), "{err:?}");
    }

    #[test]
    fn fock_state_g2_is_zero() {
        let s = single(4);
        let rho = FockOperator::projector(&s, &[1]).unwrap();
        let st = photon_statistics_for_mode(&rho, 0).unwrap();
        assert_eq!(st.g2, 0.0);
        assert_eq!(st.mean_photon, 1.0);
    }

    #[test]
    fn escalation_respects_caps() {
        let policy = TruncationPolicy { max_total: 20, ..Default::default() };
        assert!(policy.allows([4, 4]));
        assert!(!policy.allows([4, 6]));
        assert_eq!(policy.initial_dims(&crate::circuit::tests::sample()), [4, 4]);
    }
}
