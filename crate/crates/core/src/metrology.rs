//! Quantum Fisher information of the normalized Dyson state, Cramér–Rao
//! sensitivity, optimal interrogation time, contrast-based SNR and the
//! maximum-likelihood field estimate.
//!
//! All derivatives with respect to `B_z` hold `γφ` fixed, so `dC/dB_z = γ`.

use crate::error::{Error, Result};
use crate::evolution::dyson1_propagator;
use crate::linalg::{StateVector, C64};
use crate::model::{derived_quantities, SystemParams};
use crate::optimize::{maximize, Maximum};
use crate::protocol::{closed_form_probabilities, prepare_initial, MeasurementRecord};

/// Coarse grid size used to bracket the QFI maximum.
pub const OPTIMAL_TIME_GRID: usize = 2048;
pub const OPTIMAL_TIME_TOL: f64 = 1e-6;

pub const MLE_GRID: usize = 1024;
pub const MLE_TOL: f64 = 1e-8;

/// `|∂S/∂B_z|` below this is treated as a flat signal.
pub const FLAT_SIGNAL_THRESHOLD: f64 = 1e-14;

/// Closed-form QFI with respect to `B_z`:
///
/// ```text
/// F_Q = 2γ²Δ² (ω² + 2J²Δ² + 4JΔδxΩx + 4δx²Ωx²) / (Mω² + 4JΔδxΩx + 4δx²Ωx² + 2δα²Ωy²)²
/// ```
pub fn qfi_closed_form(p: &SystemParams, t: f64) -> f64 {
    let d = derived_quantities(p, t);
    let jd = p.j * d.delta;
    let ox = d.delta_x * p.omega_x;
    let w2 = p.omega * p.omega;
    let num = 2.0 * p.gamma * p.gamma * d.delta * d.delta * (w2 + 2.0 * jd * jd + 4.0 * jd * ox + 4.0 * ox * ox);
    let den = d.m * w2 + 4.0 * jd * ox + 4.0 * ox * ox + 2.0 * (d.delta_alpha * p.omega_y).powi(2);
    num / (den * den)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericQfi {
    pub value: f64,
    /// Set when the perturbed states differ by less than the rounding floor,
    /// so the difference quotient carries no information.
    pub precision_warning: bool,
}

fn dyson_state(p: &SystemParams, t: f64) -> StateVector {
    (&dyson1_propagator(p, t) * prepare_initial()).normalized()
}

// Rotate the global phase so amplitude `k` is real and positive.
fn align_phase(psi: &StateVector, k: usize) -> StateVector {
    let a = psi.0[k];
    if a.norm() == 0.0 {
        return *psi;
    }
    let phase = a.conj() / a.norm();
    StateVector(psi.0.map(|z| z * phase))
}

pub fn default_field_step(p: &SystemParams) -> f64 {
    1e-5 * p.b_z.abs().max(1.0)
}

/// Pure-state QFI `4(<∂ψ|∂ψ> - |<ψ|∂ψ>|²)` of the normalized Dyson state, with
/// `∂ψ` from a central difference of step `h` in `B_z`.
pub fn qfi_numeric(p: &SystemParams, t: f64, h: f64) -> NumericQfi {
    let center = dyson_state(p, t);
    let anchor = (0..4)
        .max_by(|&a, &b| center.0[a].norm().total_cmp(&center.0[b].norm()).then(b.cmp(&a)))
        .unwrap_or(0);
    let psi = align_phase(&center, anchor);
    let plus = align_phase(&dyson_state(&p.with_b_z(p.b_z + h), t), anchor);
    let minus = align_phase(&dyson_state(&p.with_b_z(p.b_z - h), t), anchor);

    let mut dpsi = [C64::new(0.0, 0.0); 4];
    let mut spread = 0.0;
    for (d, (a, b)) in dpsi.iter_mut().zip(plus.0.iter().zip(&minus.0)) {
        let diff = a - b;
        spread += diff.norm_sqr();
        *d = diff / (2.0 * h);
    }
    let dpsi = StateVector(dpsi);
    let value = 4.0 * (dpsi.norm_sqr() - psi.inner(&dpsi).norm_sqr());
    NumericQfi {
        value: value.max(0.0),
        precision_warning: spread.sqrt() < 1e-12,
    }
}

/// `16γ²J² / (C² + 4J²)²`, the large-t value of the closed-form QFI.
pub fn qfi_long_time_limit(p: &SystemParams) -> Result<f64> {
    let c = p.c();
    if p.j == 0.0 && c == 0.0 {
        return Err(Error::DegenerateLimit);
    }
    let den = c * c + 4.0 * p.j * p.j;
    Ok(16.0 * (p.gamma * p.j).powi(2) / (den * den))
}

/// `16γ²J² / (C² + J²)²`: the long-time limit with `J²` in place of `4J²`.
/// Reported alongside [`qfi_long_time_limit`] to show it disagrees with the
/// large-t closed form.
pub fn qfi_long_time_limit_j_squared(p: &SystemParams) -> Result<f64> {
    let c = p.c();
    if p.j == 0.0 && c == 0.0 {
        return Err(Error::DegenerateLimit);
    }
    let den = c * c + p.j * p.j;
    Ok(16.0 * (p.gamma * p.j).powi(2) / (den * den))
}

/// Global maximum of the closed-form QFI on `[t_lo, t_hi]`.
pub fn optimal_time(p: &SystemParams, t_lo: f64, t_hi: f64) -> Maximum {
    maximize(|t| qfi_closed_form(p, t), t_lo, t_hi, OPTIMAL_TIME_GRID, OPTIMAL_TIME_TOL)
}

/// Every interior local maximum of the closed-form QFI on `[t_lo, t_hi]`,
/// bracketed on the optimal-time grid and refined, in increasing `t`.
pub fn qfi_local_maxima(p: &SystemParams, t_lo: f64, t_hi: f64) -> Vec<Maximum> {
    let grid = OPTIMAL_TIME_GRID;
    let step = (t_hi - t_lo) / (grid - 1) as f64;
    let f = |t: f64| qfi_closed_form(p, t);
    let values: Vec<f64> = (0..grid).map(|k| f(t_lo + k as f64 * step)).collect();
    (1..grid - 1)
        .filter(|&k| values[k] > values[k - 1] && values[k] >= values[k + 1])
        .map(|k| maximize(f, t_lo + (k - 1) as f64 * step, t_lo + (k + 1) as f64 * step, 3, OPTIMAL_TIME_TOL))
        .collect()
}

/// `1 / sqrt(N F_Q)`; infinite when `F_Q` is zero.
pub fn sensitivity_bound(f_q: f64, n_shots: u64) -> f64 {
    if f_q > 0.0 {
        1.0 / (n_shots as f64 * f_q).sqrt()
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfiPoint {
    pub t: f64,
    pub f_q: f64,
    /// `sqrt(N) ΔB_z = 1 / sqrt(F_Q)`.
    pub sensitivity: f64,
}

pub fn qfi_point(p: &SystemParams, t: f64) -> QfiPoint {
    let f_q = qfi_closed_form(p, t);
    QfiPoint { t, f_q, sensitivity: sensitivity_bound(f_q, 1) }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrPoint {
    pub t: f64,
    /// `S = p11 - p00`.
    pub signal: f64,
    pub d_signal_d_bz: f64,
    /// `[p00(1 - p00) + p11(1 - p11)] / N`.
    pub variance: f64,
    /// `|∂S/∂B_z| δb / sqrt(Var S)` for the probe shift passed in.
    pub snr: f64,
    pub delta_b_min: f64,
    pub delta_b_qfi: f64,
    pub xi: f64,
    pub flat_signal: bool,
}

fn contrast(p: &SystemParams, t: f64) -> f64 {
    closed_form_probabilities(p, t).contrast()
}

/// `∂S/∂B_z` by central differences at steps `h` and `h/2`, combined by
/// Richardson extrapolation.
pub fn contrast_derivative(p: &SystemParams, t: f64) -> f64 {
    let h = default_field_step(p);
    let central = |h: f64| (contrast(&p.with_b_z(p.b_z + h), t) - contrast(&p.with_b_z(p.b_z - h), t)) / (2.0 * h);
    let coarse = central(h);
    let fine = central(0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

pub fn snr_point(p: &SystemParams, t: f64, n_shots: u64, delta_b: f64) -> SnrPoint {
    let probs = closed_form_probabilities(p, t);
    let signal = probs.contrast();
    let slope = contrast_derivative(p, t);
    let n = n_shots as f64;
    let variance = (probs.p00 * (1.0 - probs.p00) + probs.p11 * (1.0 - probs.p11)) / n;
    let flat_signal = slope.abs() < FLAT_SIGNAL_THRESHOLD;

    let delta_b_min = if flat_signal { f64::INFINITY } else { variance.sqrt() / slope.abs() };
    let delta_b_qfi = sensitivity_bound(qfi_closed_form(p, t), n_shots);
    let xi = if delta_b_min.is_finite() && delta_b_qfi.is_finite() {
        delta_b_min / delta_b_qfi
    } else {
        f64::INFINITY
    };
    let snr = if variance > 0.0 {
        slope.abs() * delta_b / variance.sqrt()
    } else if slope.abs() * delta_b > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    SnrPoint {
        t,
        signal,
        d_signal_d_bz: if flat_signal { 0.0 } else { slope },
        variance,
        snr,
        delta_b_min,
        delta_b_qfi,
        xi,
        flat_signal,
    }
}

/// Multinomial log-likelihood `Σ w_ij log p_ij(B_z)`; zero weights contribute
/// nothing even where `p_ij` vanishes.
pub fn log_likelihood(weights: &[f64; 4], template: &SystemParams, t: f64, b_z: f64) -> f64 {
    let probs = closed_form_probabilities(&template.with_b_z(b_z), t).as_array();
    weights
        .iter()
        .zip(probs)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, q)| if q > 0.0 { w * q.ln() } else { f64::NEG_INFINITY })
        .sum()
}

/// Maximum-likelihood `B_z` on `[b_lo, b_hi]` from outcome weights (counts or
/// frequencies), with `γφ` and every other parameter taken from `template`.
pub fn estimate_field_from_weights(
    weights: &[f64; 4],
    template: &SystemParams,
    t: f64,
    b_lo: f64,
    b_hi: f64,
) -> Result<f64> {
    if b_lo.is_nan() || b_hi.is_nan() || b_lo >= b_hi {
        return Err(Error::InvalidParams(format!("field window [{b_lo}, {b_hi}] is empty")));
    }
    let f = |b: f64| log_likelihood(weights, template, t, b);
    let step = (b_hi - b_lo) / (MLE_GRID - 1) as f64;
    let (lo_val, hi_val) = (0..MLE_GRID)
        .map(|k| f(b_lo + k as f64 * step))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let scale = hi_val.abs().max(1.0);
    if !hi_val.is_finite() || (hi_val - lo_val) <= 1e-12 * scale {
        return Err(Error::Unidentifiable { lo: b_lo, hi: b_hi });
    }
    Ok(maximize(f, b_lo, b_hi, MLE_GRID, MLE_TOL).arg)
}

pub fn estimate_field(
    record: &MeasurementRecord,
    template: &SystemParams,
    t: f64,
    b_lo: f64,
    b_hi: f64,
) -> Result<f64> {
    let weights = record.counts.map(|n| n as f64);
    estimate_field_from_weights(&weights, template, t, b_lo, b_hi)
}
