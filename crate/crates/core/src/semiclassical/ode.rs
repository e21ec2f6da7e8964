//! Adaptive Dormand–Prince 5(4) integration that stops once the vector field
//! falls below a threshold.

#[derive(Clone, Copy, Debug)]
pub struct RelaxTolerances {
    pub rtol: f64,
    pub atol: f64,
    /// stop once `‖f(y)‖₂` drops below this
    pub rhs_tol: f64,
    pub max_time: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct RelaxOutcome<const N: usize> {
    pub y: [f64; N],
    pub time: f64,
    pub rhs_norm: f64,
    pub converged: bool,
    pub steps: usize,
}


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// 5th-order minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (w, k) in terms {
        for i in 0..N {
            out[i] += h * w * k[i];
        }
    }
    out
}

/// Integrates `dy/dt = f(y)` from `y0` until `‖f(y)‖ < rhs_tol` or
/// `max_time` elapses. Returns `None` if the state becomes non-finite.
pub fn relax<const N: usize, F>(f: F, y0: [f64; N], tol: &RelaxTolerances) -> Option<RelaxOutcome<N>>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut y = y0;
    let mut k1 = f(&y);
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut rhs_norm = norm(&k1);
    if rhs_norm < tol.rhs_tol {
        return Some(RelaxOutcome { y, time: t, rhs_norm, converged: true, steps });
    }

    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut h = (0.01 * scale / rhs_norm).clamp(1e-8, 1e-1);

    while t < tol.max_time {
        h = h.min(tol.max_time - t).max(1e-14);
        let k2 = f(&combine(&y, h, &[(A21, &k1)]));
        let k3 = f(&combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = combine(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(&y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if h <= 1e-13 {
                return None;
            }
            h *= 0.1;
            continue;
        }

        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7; // first-same-as-last
            steps += 1;
            rhs_norm = norm(&k1);
            if rhs_norm < tol.rhs_tol {
                return Some(RelaxOutcome { y, time: t, rhs_norm, converged: true, steps });
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Some(RelaxOutcome { y, time: t, rhs_norm, converged: false, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay_reaches_fixed_point() {
        // damped rotation toward (1, -2)
        let f = |y: &[f64; 2]| [-0.5 * (y[0] - 1.0) - 3.0 * (y[1] + 2.0), 3.0 * (y[0] - 1.0) - 0.5 * (y[1] + 2.0)];
        let tol = RelaxTolerances { rtol: 1e-10, atol: 1e-12, rhs_tol: 1e-7, max_time: 1e3 };
        let out = relax(f, [0.0, 0.0], &tol).unwrap();
        assert!(out.converged);
        assert!((out.y[0] - 1.0).abs() < 1e-7 && (out.y[1] + 2.0).abs() < 1e-7);
    }

    #[test]
    fn trajectory_accuracy_against_exponential() {
        let f = |y: &[f64; 1]| [-y[0]];
        let tol = RelaxTolerances { rtol: 1e-10, atol: 1e-12, rhs_tol: 0.0, max_time: 2.0 };
        let out = relax(f, [1.0], &tol).unwrap();
        assert!(!out.converged);
        assert!((out.time - 2.0).abs() < 1e-12);
        assert!((out.y[0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        // undamped oscillator never settles
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let tol = RelaxTolerances { rtol: 1e-8, atol: 1e-10, rhs_tol: 1e-9, max_time: 10.0 };
        assert!(!relax(f, [1.0, 0.0], &tol).unwrap().converged);
    }
}
