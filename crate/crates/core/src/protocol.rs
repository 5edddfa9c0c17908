//! The sensing sequence: prepare `(H⊗H)|00>`, evolve, apply `H⊗H` again,
//! and read out in the computational basis.
//!
//! Readout probabilities are available three ways: from the first-order
//! Dyson state through the matrix pipeline, from the closed forms, and from
//! the exact propagator. The Dyson propagator is not unitary, so probabilities
//! from it are always renormalized by the squared norm of the readout state.
//!
//! The closed forms share the denominator
//!
//! ```text
//! D = ω² M + 4 Ωx δx (Ωx δx + J Δ) + 2 Ωy² δα²
//! ```
//!
//! which is `ω²` times that squared norm. Outcomes `|01>` and `|10>` carry the
//! same probability because the Hamiltonian and the initial state are both
//! invariant under exchanging the qubits; `|11>` carries the `J² Δ²` term.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::Result;
use crate::evolution::{dyson1_propagator, exact_propagator};
use crate::linalg::{c64, hadamard, tensor_product, Mat4, StateVector};
use crate::model::{convergence_margin, derived_quantities, SystemParams};
use crate::output::{render_csv, Cell};

/// Which propagator drives the evolution step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagator {
    Dyson,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbabilitySource {
    NumericDyson,
    ClosedForm,
    NumericExact,
}

impl ProbabilitySource {
    pub fn label(self) -> &'static str {
        match self {
            ProbabilitySource::NumericDyson => "NUMERIC_DYSON",
            ProbabilitySource::ClosedForm => "CLOSED_FORM",
            ProbabilitySource::NumericExact => "NUMERIC_EXACT",
        }
    }
}

/// Readout probabilities in basis order `|00>, |01>, |10>, |11>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbabilityQuad {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    pub source: ProbabilitySource,
}

impl ProbabilityQuad {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p00, self.p01, self.p10, self.p11]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Population contrast `p11 - p00`.
    pub fn contrast(&self) -> f64 {
        self.p11 - self.p00
    }

    /// L1 distance between two quads.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Outcome counts from `shots` repetitions of the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasurementRecord {
    /// `(n00, n01, n10, n11)`.
    pub counts: [u64; 4],
    pub shots: u64,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn frequencies(&self) -> [f64; 4] {
        self.counts.map(|n| n as f64 / self.shots as f64)
    }
}

/// `H₂ ⊗ H₂`.
pub fn hadamard_pair() -> Mat4 {
    tensor_product(&hadamard(), &hadamard())
}

/// `(H₂ ⊗ H₂)|00> = (|00> + |01> + |10> + |11>) / 2`.
pub fn prepare_initial() -> StateVector {
    &hadamard_pair() * StateVector::basis(0)
}

/// `(H⊗H) U(t) (H⊗H)|00>`. Unnormalized when `method` is [`Propagator::Dyson`].
pub fn readout_state(p: &SystemParams, t: f64, method: Propagator) -> Result<StateVector> {
    let u = match method {
        Propagator::Dyson => dyson1_propagator(p, t),
        Propagator::Exact => exact_propagator(p, t)?,
    };
    let hh = hadamard_pair();
    Ok(&hh * (&u * prepare_initial()))
}

/// Closed-form amplitudes of the unnormalized Dyson readout state:
///
/// ```text
/// a00 = 1 - i (J t + 2 Ωx δx / ω)
/// a01 = a10 = i C t / 2 + Ωy δα / ω
/// a11 = -i J t
/// ```
pub fn dyson_readout_amplitudes(p: &SystemParams, t: f64) -> StateVector {
    let d = derived_quantities(p, t);
    let x = p.omega_x * d.delta_x / p.omega;
    let y = p.omega_y * d.delta_alpha / p.omega;
    let a00 = c64(1.0, -(p.j * t + 2.0 * x));
    let a01 = c64(y, 0.5 * d.c * t);
    StateVector([a00, a01, a01, c64(0.0, -p.j * t)])
}

fn quad_from_state(state: &StateVector, source: ProbabilitySource) -> ProbabilityQuad {
    let norm = state.norm_sqr();
    let [p00, p01, p10, p11] = state.0.map(|a| a.norm_sqr() / norm);
    ProbabilityQuad { p00, p01, p10, p11, source }
}

/// `p_ij = |<ij|α>|² / <α|α>`.
pub fn probabilities(p: &SystemParams, t: f64, method: Propagator) -> Result<ProbabilityQuad> {
    let state = readout_state(p, t, method)?;
    let source = match method {
        Propagator::Dyson => ProbabilitySource::NumericDyson,
        Propagator::Exact => ProbabilitySource::NumericExact,
    };
    Ok(quad_from_state(&state, source))
}

/// Shared denominator `D` of the closed forms.
pub fn closed_form_denominator(p: &SystemParams, t: f64) -> f64 {
    let d = derived_quantities(p, t);
    let ox = p.omega_x * d.delta_x;
    p.omega * p.omega * d.m + 4.0 * ox * (ox + p.j * d.delta) + 2.0 * (p.omega_y * d.delta_alpha).powi(2)
}

pub fn closed_form_probabilities(p: &SystemParams, t: f64) -> ProbabilityQuad {
    let d = derived_quantities(p, t);
    let den = closed_form_denominator(p, t);
    let jd = p.j * d.delta;
    let p00 = (p.omega * p.omega + (jd + 2.0 * p.omega_x * d.delta_x).powi(2)) / den;
    let p01 = ((d.delta * d.c).powi(2) / 4.0 + (p.omega_y * d.delta_alpha).powi(2)) / den;
    let p11 = jd * jd / den;
    ProbabilityQuad { p00, p01, p10: p01, p11, source: ProbabilitySource::ClosedForm }
}

/// The closed forms with the alternative printing: `-JΔ` in the denominators
/// of the last three outcomes and the `J²Δ²` numerator on `|10>` instead of
/// `|11>`. Kept for side-by-side discrepancy reports; these values neither
/// sum to one nor respect the qubit-exchange symmetry.
pub fn verbatim_probabilities(p: &SystemParams, t: f64) -> [f64; 4] {
    let d = derived_quantities(p, t);
    let jd = p.j * d.delta;
    let ox = p.omega_x * d.delta_x;
    let tail = 2.0 * (p.omega_y * d.delta_alpha).powi(2);
    let w2m = p.omega * p.omega * d.m;
    let den_plus = w2m + 4.0 * ox * (ox + jd) + tail;
    let den_minus = w2m + 4.0 * ox * (ox - jd) + tail;
    let mixed = (d.delta * d.c).powi(2) / 4.0 + (p.omega_y * d.delta_alpha).powi(2);
    [
        (p.omega * p.omega + (jd + 2.0 * ox).powi(2)) / den_plus,
        mixed / den_minus,
        jd * jd / den_minus,
        mixed / den_minus,
    ]
}

/// Multinomial draw over the closed-form probabilities.
///
/// The generator is ChaCha20 seeded from `seed`. Outcomes are drawn by
/// sequential conditional binomials in basis order: `n00 ~ Bin(N, p00)`,
/// `n01 ~ Bin(N - n00, p01 / (1 - p00))`, and so on, with `n11` taking the
/// remainder.
pub fn simulate_counts(p: &SystemParams, t: f64, shots: u64, seed: u64) -> MeasurementRecord {
    let probs = closed_form_probabilities(p, t).as_array();
    MeasurementRecord { counts: multinomial(&probs, shots, seed), shots, seed }
}

pub fn multinomial(probs: &[f64; 4], shots: u64, seed: u64) -> [u64; 4] {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = [0u64; 4];
    let mut remaining = shots;
    let mut mass = 1.0;
    for k in 0..3 {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 { (probs[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let n = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("probability within [0, 1]").sample(&mut rng)
        };
        counts[k] = n;
        remaining -= n;
        mass -= probs[k];
    }
    counts[3] = remaining;
    counts
}

/// Probability trace as CSV: `t,p00,p01,p10,p11,source,margin`.
pub fn probability_trace_csv(
    p: &SystemParams,
    times: &[f64],
    source: ProbabilitySource,
) -> Result<String> {
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let q = match source {
            ProbabilitySource::ClosedForm => closed_form_probabilities(p, t),
            ProbabilitySource::NumericDyson => probabilities(p, t, Propagator::Dyson)?,
            ProbabilitySource::NumericExact => probabilities(p, t, Propagator::Exact)?,
        };
        rows.push(vec![
            Cell::Num(t),
            Cell::Num(q.p00),
            Cell::Num(q.p01),
            Cell::Num(q.p10),
            Cell::Num(q.p11),
            Cell::Text(source.label().into()),
            Cell::Num(convergence_margin(p, t)),
        ]);
    }
    let metadata = vec![
        ("basis".to_owned(), "|00>,|01>,|10>,|11> with qubit 1 the left tensor factor".to_owned()),
        ("labels".to_owned(), "p01 = p10 by exchange symmetry; J^2 Delta^2 numerator on p11".to_owned()),
        ("params".to_owned(), serde_json::to_string(p)?),
    ];
    Ok(render_csv(&metadata, &["t", "p00", "p01", "p10", "p11", "source", "margin"], &rows))
}
