//! Filter-based parameter estimation for both control loops.
//!
//! Instead of differentiating measurements, the regressor and the applied
//! input pass through identical first-order low-pass filters, so the filtered
//! regression `psi_f * theta = u_f` holds along the trajectory. Exponentially
//! forgetting Gram accumulators
//!
//! ```text
//! P' <- decay(P') + psi_f^T psi_f      Q <- decay(Q) + psi_f^T u_f
//! ```
//!
//! then expose the estimation error through `H = P theta_hat - Q`, which the
//! update laws drive toward zero. All estimator ODEs advance with an
//! exponential-hold step: exact for the decay part, zero-order hold on the
//! forcing, unconditionally stable at any step size.
//!
//! `P` carries a positive offset `rho` that keeps it invertible before any
//! excitation arrives. Two conventions for that offset are supported because
//! they trade off differently:
//!
//! * [`OffsetMode::Constant`] — `P = P' + rho`. `P` never drops below `rho`
//!   and the zero-disturbance identity `H = -P e_theta + rho theta` holds for
//!   all time, but the `H = 0` fixed point is biased by `rho P^-1 theta`.
//! * [`OffsetMode::Decaying`] — the offset decays as `rho exp(-l t)`, so the
//!   bias vanishes and the estimates converge to the unbiased least-squares
//!   solution, at the cost of `P` approaching the bare excitation level.

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Vec3};

/// Guard below which the normalized inner update term is dropped.
pub const DEFAULT_H_EPSILON: f64 = 1e-9;

/// Convention for the positive-definiteness offset on the Gram accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetMode {
    /// `P = P' + rho` with a constant offset.
    Constant,
    /// `P(0) = rho` decaying at the forgetting rate.
    Decaying,
}

/// Saturation to the unit interval, `sat(x) = clamp(x, -1, 1)`.
pub fn sat(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

fn exp_hold_coeffs(dt: f64, tau: f64) -> (f64, f64) {
    let decay = (-dt / tau).exp();
    (decay, 1.0 - decay)
}

/// First-order filter pair for the outer loop: 3-vector regressor and force.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterFilterBank {
    pub alpha: f64,
    pub psi_f: Vec3,
    pub input_f: Vec3,
}

impl OuterFilterBank {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            psi_f: Vec3::zeros(),
            input_f: Vec3::zeros(),
        }
    }

    pub fn step(&mut self, psi_raw: &Vec3, input_raw: &Vec3, dt: f64) {
        let (decay, gain) = exp_hold_coeffs(dt, self.alpha);
        self.psi_f = self.psi_f * decay + psi_raw * gain;
        self.input_f = self.input_f * decay + input_raw * gain;
    }
}

/// First-order filter pair for the inner loop: matrix regressor and torque.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerFilterBank {
    pub alpha: f64,
    pub psi_f: Mat3,
    pub input_f: Vec3,
}

impl InnerFilterBank {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            psi_f: Mat3::zeros(),
            input_f: Vec3::zeros(),
        }
    }

    pub fn step(&mut self, psi_raw: &Mat3, input_raw: &Vec3, dt: f64) {
        let (decay, gain) = exp_hold_coeffs(dt, self.alpha);
        self.psi_f = self.psi_f * decay + psi_raw * gain;
        self.input_f = self.input_f * decay + input_raw * gain;
    }
}

/// Scalar Gram accumulator for the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterGram {
    pub forget: f64,
    pub rho: f64,
    pub mode: OffsetMode,
    /// Accumulated excitation `P'` (offset excluded), always >= 0.
    pub excess: f64,
    pub cross: f64,
    offset: f64,
}

impl OuterGram {
    pub fn new(forget: f64, rho: f64, mode: OffsetMode) -> Self {
        assert!(forget > 0.0 && rho > 0.0);
        Self {
            forget,
            rho,
            mode,
            excess: 0.0,
            cross: 0.0,
            offset: rho,
        }
    }

    pub fn step(&mut self, psi_f: &Vec3, input_f: &Vec3, dt: f64) {
        let decay = (-self.forget * dt).exp();
        let weight = (1.0 - decay) / self.forget;
        self.excess = self.excess * decay + psi_f.dot(psi_f) * weight;
        self.cross = self.cross * decay + psi_f.dot(input_f) * weight;
        if self.mode == OffsetMode::Decaying {
            self.offset *= decay;
        }
    }

    /// Current offset value (constant `rho` or `rho exp(-l t)`).
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn p(&self) -> f64 {
        self.excess + self.offset
    }

    pub fn q(&self) -> f64 {
        self.cross
    }

    pub fn extract_h(&self, theta1_hat: f64) -> f64 {
        self.p() * theta1_hat - self.cross
    }
}

/// Matrix Gram accumulator for the inner loop.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerGram {
    pub forget: f64,
    pub rho: f64,
    pub mode: OffsetMode,
    /// Accumulated excitation `P'` (offset excluded), symmetric PSD.
    pub excess: Mat3,
    pub cross: Vec3,
    offset: f64,
}

impl InnerGram {
    pub fn new(forget: f64, rho: f64, mode: OffsetMode) -> Self {
        assert!(forget > 0.0 && rho > 0.0);
        Self {
            forget,
            rho,
            mode,
            excess: Mat3::zeros(),
            cross: Vec3::zeros(),
            offset: rho,
        }
    }

    pub fn step(&mut self, psi_f: &Mat3, input_f: &Vec3, dt: f64) {
        let decay = (-self.forget * dt).exp();
        let weight = (1.0 - decay) / self.forget;
        self.excess = self.excess * decay + psi_f.transpose() * psi_f * weight;
        self.cross = self.cross * decay + psi_f.transpose() * input_f * weight;
        if self.mode == OffsetMode::Decaying {
            self.offset *= decay;
        }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn p(&self) -> Mat3 {
        self.excess + Mat3::identity() * self.offset
    }

    pub fn q(&self) -> Vec3 {
        self.cross
    }

    pub fn extract_h(&self, theta2_hat: &Vec3) -> Vec3 {
        self.p() * theta2_hat - self.cross
    }

    /// Smallest eigenvalue of the accumulated excitation `P'`.
    pub fn lambda_min_excess(&self) -> f64 {
        self.excess
            .symmetric_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Smallest eigenvalue of the full accumulator `P`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min_excess() + self.offset
    }
}

/// Outer-loop update law: `theta1 <- theta1 - gamma (gamma1 H + sat(H)) dt`.
pub fn update_outer(theta1_hat: f64, h1: f64, gamma: f64, gamma1: f64, dt: f64) -> f64 {
    theta1_hat - gamma * (gamma1 * h1 + sat(h1)) * dt
}

/// Inner-loop update law with the normalized direction term dropped inside
/// the `eps_h` guard band around `H = 0`.
#[allow(clippy::too_many_arguments)]
pub fn update_inner(
    theta2_hat: &Vec3,
    h2: &Vec3,
    p2: &Mat3,
    gamma_diag: &Vec3,
    sigma1: f64,
    sigma2: f64,
    eps_h: f64,
    dt: f64,
) -> Vec3 {
    let p_norm = p2.norm().max(1e-300);
    let pt_h = p2.transpose() * h2;
    let mut drive = sigma1 * h2 + pt_h * (sigma1 / p_norm);
    let h_norm = h2.norm();
    if h_norm >= eps_h {
        drive += pt_h * (sigma2 / (p_norm * h_norm));
    }
    theta2_hat - gamma_diag.component_mul(&drive) * dt
}

/// Full outer-loop estimator session.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterEstimator {
    pub filters: OuterFilterBank,
    pub gram: OuterGram,
    pub theta1_hat: f64,
    pub gamma: f64,
    pub gamma1: f64,
}

impl OuterEstimator {
    /// Advances filters and accumulators by one step without touching the
    /// estimate. The Gram step consumes the filter state at the step start so
    /// the filtered regression identity is preserved exactly.
    pub fn advance_signals(&mut self, psi_raw: &Vec3, input_raw: &Vec3, dt: f64) {
        let (psi_f, input_f) = (self.filters.psi_f, self.filters.input_f);
        self.gram.step(&psi_f, &input_f, dt);
        self.filters.step(psi_raw, input_raw, dt);
    }

    /// Advances the signals and applies the update law.
    pub fn step(&mut self, psi_raw: &Vec3, input_raw: &Vec3, dt: f64) {
        self.advance_signals(psi_raw, input_raw, dt);
        let h1 = self.gram.extract_h(self.theta1_hat);
        self.theta1_hat = update_outer(self.theta1_hat, h1, self.gamma, self.gamma1, dt);
    }

    pub fn h1(&self) -> f64 {
        self.gram.extract_h(self.theta1_hat)
    }
}

/// Full inner-loop estimator session.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerEstimator {
    pub filters: InnerFilterBank,
    pub gram: InnerGram,
    pub theta2_hat: Vec3,
    pub gamma_diag: Vec3,
    pub sigma1: f64,
    pub sigma2: f64,
    pub eps_h: f64,
}

impl InnerEstimator {
    pub fn advance_signals(&mut self, psi_raw: &Mat3, input_raw: &Vec3, dt: f64) {
        let (psi_f, input_f) = (self.filters.psi_f, self.filters.input_f);
        self.gram.step(&psi_f, &input_f, dt);
        self.filters.step(psi_raw, input_raw, dt);
    }

    pub fn step(&mut self, psi_raw: &Mat3, input_raw: &Vec3, dt: f64) {
        self.advance_signals(psi_raw, input_raw, dt);
        let h2 = self.gram.extract_h(&self.theta2_hat);
        self.theta2_hat = update_inner(
            &self.theta2_hat,
            &h2,
            &self.gram.p(),
            &self.gamma_diag,
            self.sigma1,
            self.sigma2,
            self.eps_h,
            dt,
        );
    }

    pub fn h2(&self) -> Vec3 {
        self.gram.extract_h(&self.theta2_hat)
    }
}

/// Finite-time convergence diagnostic over a logged `||P^-1 H||` trajectory.
///
/// Reports the measured first crossing below a threshold together with the
/// analytic settling bound `t = (2/c2) ln(1 + (c2/c1) a)` evaluated from the
/// supplied constants. `a = (sqrt(2)/2) (||e_theta(0)|| + xi_delta / rho)`
/// bounds the initial value of `sqrt(V2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtReport {
    pub initial_norm: f64,
    pub threshold: f64,
    pub first_crossing_s: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub a_bound: f64,
    pub analytic_bound_s: Option<f64>,
    /// Radius of the terminal set `||e_theta|| <= xi_delta / rho`.
    pub terminal_radius: f64,
    /// Residual bias radius `rho ||theta|| / lambda_min(P)` at the end of the
    /// data (zero-disturbance fixed-point offset of the constant-offset form).
    pub fixed_point_bias: f64,
}

/// Analytic finite-time bound for the decay `dV/dt <= -c1 sqrt(V) - c2 V`.
pub fn ft_time_bound(c1: f64, c2: f64, a: f64) -> Option<f64> {
    if c1 <= 0.0 || a <= 0.0 {
        return None;
    }
    if c2 <= 0.0 {
        // Pure square-root decay: sqrt(V) reaches zero at 2 a / c1.
        return Some(2.0 * a / c1);
    }
    Some(2.0 / c2 * (1.0 + c2 / c1 * a).ln())
}

#[allow(clippy::too_many_arguments)]
pub fn ft_diagnostic(
    times: &[f64],
    p_inv_h_norm: &[f64],
    theta_tilde_initial_norm: f64,
    xi_delta: f64,
    rho: f64,
    c1: f64,
    c2: f64,
    lambda_min_final: f64,
    theta_true_norm: f64,
    relative_threshold: f64,
) -> FtReport {
    let initial_norm = p_inv_h_norm.first().copied().unwrap_or(0.0);
    let threshold = relative_threshold * initial_norm;
    let first_crossing_s = times
        .iter()
        .zip(p_inv_h_norm)
        .find(|(_, &v)| v <= threshold)
        .map(|(&t, _)| t);
    let a_bound = std::f64::consts::FRAC_1_SQRT_2 * (theta_tilde_initial_norm + xi_delta / rho);
    FtReport {
        initial_norm,
        threshold,
        first_crossing_s,
        c1,
        c2,
        a_bound,
        analytic_bound_s: ft_time_bound(c1, c2, a_bound),
        terminal_radius: xi_delta / rho,
        fixed_point_bias: if lambda_min_final > 0.0 {
            rho * theta_true_norm / lambda_min_final
        } else {
            f64::INFINITY
        },
    }
}

/// Persistent-excitation diagnostic: the smallest excitation level seen over
/// the run, i.e. the minimum of `P - offset` (outer) and of the smallest
/// eigenvalue of `P - offset I` (inner). Zero means the regressor carried no
/// information on some axis. The first second of history is warm-up (the
/// accumulators start empty) and is excluded; at least one second of history
/// is required for a meaningful report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeReport {
    pub outer_min_excitation: f64,
    pub inner_min_excitation: f64,
    pub outer_warning: bool,
    pub inner_warning: bool,
}

/// Warm-up interval excluded from the excitation minimum, s.
pub const PE_WARMUP_S: f64 = 1.0;

pub fn pe_diagnostic(
    times: &[f64],
    outer_excess: &[f64],
    inner_lambda_min_excess: &[f64],
) -> PeReport {
    let min_after_warmup = |series: &[f64]| -> f64 {
        let m = times
            .iter()
            .zip(series)
            .filter(|(t, _)| **t >= PE_WARMUP_S)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            m
        } else {
            0.0
        }
    };
    let outer_min = min_after_warmup(outer_excess);
    let inner_min = min_after_warmup(inner_lambda_min_excess);
    PeReport {
        outer_min_excitation: outer_min,
        inner_min_excitation: inner_min,
        outer_warning: outer_min <= 1e-9,
        inner_warning: inner_min <= 1e-9,
    }
}
