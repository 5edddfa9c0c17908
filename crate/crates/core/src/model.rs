//! Two-qubit magnetometer Hamiltonian, its closed-form time integral, and the
//! first-order Dyson convergence and truncation bounds.
//!
//! Units are dimensionless with hbar = 1. The Hamiltonian is
//!
//! ```text
//! H(t) = -C/2 Σz + J (ZZ + XX) + Ωx sin(ωt) Σx + Ωy cos(ωt + α) Σy
//! ```
//!
//! where `Σa = σa ⊗ I + I ⊗ σa` and `C = γ B_z - 2 γφ` collects the Zeeman
//! and dephasing terms.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, pauli_x, pauli_y, pauli_z, spectral_norm, tensor_product, Mat2, Mat4, Matrix};

/// Grid used by [`convergence_margin`] when sampling `|H(t')|` over `[0, t]`.
pub const DEFAULT_GRID_POINTS: usize = 256;

/// Smallest grid accepted by [`h_max`].
pub const MIN_GRID_POINTS: usize = 64;

/// Physical parameters of the two-qubit Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SystemParams {
    pub gamma: f64,
    pub b_z: f64,
    pub j: f64,
    pub gamma_phi: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega: f64,
    pub alpha: f64,
}

impl SystemParams {
    /// The reference regime used by the figure presets: ω = 1,
    /// Ωx = Ωy = 1/2, J = 0.2, C = 0.1 (γ = 1, B_z = 0.1, γφ = 0), α = 0.
    pub fn reference() -> Self {
        Self {
            gamma: 1.0,
            b_z: 0.1,
            j: 0.2,
            gamma_phi: 0.0,
            omega_x: 0.5,
            omega_y: 0.5,
            omega: 1.0,
            alpha: 0.0,
        }
    }

    /// All couplings and drives zero, ω = 1, γ = 1.
    pub fn quiet() -> Self {
        Self {
            gamma: 1.0,
            b_z: 0.0,
            j: 0.0,
            gamma_phi: 0.0,
            omega_x: 0.0,
            omega_y: 0.0,
            omega: 1.0,
            alpha: 0.0,
        }
    }

    /// Set the effective decoherence parameter directly. Dephasing is
    /// zeroed and the field absorbs C: `B_z = C / γ`, `γφ = 0`, which
    /// satisfies `γφ = (γ B_z - C) / 2`.
    pub fn with_c(mut self, c: f64) -> Self {
        self.b_z = c / self.gamma;
        self.gamma_phi = 0.0;
        self
    }

    pub fn with_j(mut self, j: f64) -> Self {
        self.j = j;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_drives(mut self, omega_x: f64, omega_y: f64) -> Self {
        self.omega_x = omega_x;
        self.omega_y = omega_y;
        self
    }

    pub fn with_b_z(mut self, b_z: f64) -> Self {
        self.b_z = b_z;
        self
    }

    /// Effective decoherence parameter `C = γ B_z - 2 γφ`.
    pub fn c(&self) -> f64 {
        self.gamma * self.b_z - 2.0 * self.gamma_phi
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma", self.gamma),
            ("b_z", self.b_z),
            ("j", self.j),
            ("gamma_phi", self.gamma_phi),
            ("omega_x", self.omega_x),
            ("omega_y", self.omega_y),
            ("omega", self.omega),
            ("alpha", self.alpha),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} must be finite")));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.gamma_phi < 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma_phi must be non-negative, got {}",
                self.gamma_phi
            )));
        }
        if self.gamma == 0.0 {
            return Err(Error::InvalidParams("gamma must be non-zero".into()));
        }
        Ok(())
    }

    /// Apply the fields present in `patch` on top of `self`.
    pub fn patched(mut self, patch: &ParamsPatch) -> Result<Self> {
        if patch.c.is_some() && (patch.b_z.is_some() || patch.gamma_phi.is_some()) {
            return Err(Error::InvalidParams(
                "key \"c\" replaces \"b_z\"/\"gamma_phi\"; give one form only".into(),
            ));
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = patch.$f { self.$f = v; } )* };
        }
        set!(gamma, b_z, j, gamma_phi, omega_x, omega_y, omega, alpha);
        if let Some(c) = patch.c {
            self = self.with_c(c);
        }
        self.validate()?;
        Ok(self)
    }
}

/// Partial parameter object: any subset of the [`SystemParams`] keys, with
/// `c` as an alternative to the `(b_z, gamma_phi)` pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    pub gamma: Option<f64>,
    pub b_z: Option<f64>,
    pub j: Option<f64>,
    pub gamma_phi: Option<f64>,
    pub omega_x: Option<f64>,
    pub omega_y: Option<f64>,
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub c: Option<f64>,
}

impl<'de> Deserialize<'de> for SystemParams {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;

        let patch = ParamsPatch::deserialize(de)?;
        let missing = |name: &str| D::Error::custom(format!("missing key \"{name}\""));
        let gamma = patch.gamma.ok_or_else(|| missing("gamma"))?;
        let (b_z, gamma_phi) = match (patch.c, patch.b_z, patch.gamma_phi) {
            (Some(c), None, None) => (c / gamma, 0.0),
            (Some(_), _, _) => {
                return Err(D::Error::custom(
                    "key \"c\" replaces \"b_z\"/\"gamma_phi\"; give one form only",
                ))
            }
            (None, b_z, gamma_phi) => (
                b_z.ok_or_else(|| missing("b_z"))?,
                gamma_phi.ok_or_else(|| missing("gamma_phi"))?,
            ),
        };
        let params = SystemParams {
            gamma,
            b_z,
            j: patch.j.ok_or_else(|| missing("j"))?,
            gamma_phi,
            omega_x: patch.omega_x.ok_or_else(|| missing("omega_x"))?,
            omega_y: patch.omega_y.ok_or_else(|| missing("omega_y"))?,
            omega: patch.omega.ok_or_else(|| missing("omega"))?,
            alpha: patch.alpha.ok_or_else(|| missing("alpha"))?,
        };
        params.validate().map_err(D::Error::custom)?;
        Ok(params)
    }
}

/// Shorthand quantities evaluated at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedQuantities {
    /// Accumulated drive angle `Δ = ωt`.
    pub delta: f64,
    /// `δx = 1 - cos Δ`.
    pub delta_x: f64,
    /// `δα = sin α - sin(α + Δ)`.
    pub delta_alpha: f64,
    /// `C = γ B_z - 2 γφ`.
    pub c: f64,
    /// `M = 1 + 2 J² t² + t² C² / 2`.
    pub m: f64,
}

pub fn derived_quantities(p: &SystemParams, t: f64) -> DerivedQuantities {
    let delta = p.omega * t;
    let c = p.c();
    DerivedQuantities {
        delta,
        delta_x: 1.0 - delta.cos(),
        delta_alpha: p.alpha.sin() - (p.alpha + delta).sin(),
        c,
        m: 1.0 + 2.0 * p.j * p.j * t * t + 0.5 * t * t * c * c,
    }
}

/// Fixed two-qubit operators the Hamiltonian is built from.
pub struct Operators {
    pub sum_x: Mat4,
    pub sum_y: Mat4,
    pub sum_z: Mat4,
    /// `σz⊗σz + σx⊗σx`.
    pub coupling: Mat4,
}

impl Operators {
    pub fn new() -> Self {
        let id = Mat2::identity();
        let sum = |s: Mat2| tensor_product(&s, &id) + tensor_product(&id, &s);
        Self {
            sum_x: sum(pauli_x()),
            sum_y: sum(pauli_y()),
            sum_z: sum(pauli_z()),
            coupling: tensor_product(&pauli_z(), &pauli_z()) + tensor_product(&pauli_x(), &pauli_x()),
        }
    }

    /// `a Σz + b (ZZ + XX) + x Σx + y Σy`.
    pub fn combine(&self, a: f64, b: f64, x: f64, y: f64) -> Mat4 {
        let mut m = Mat4::zeros();
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] = self.sum_z[(r, c)] * a
                    + self.coupling[(r, c)] * b
                    + self.sum_x[(r, c)] * x
                    + self.sum_y[(r, c)] * y;
            }
        }
        m
    }
}

impl Default for Operators {
    fn default() -> Self {
        Self::new()
    }
}

thread_local! {
    static OPS: Operators = Operators::new();
}

pub(crate) fn with_operators<R>(f: impl FnOnce(&Operators) -> R) -> R {
    OPS.with(f)
}

pub fn hamiltonian_at(p: &SystemParams, t: f64) -> Mat4 {
    let phase = p.omega * t;
    with_operators(|ops| {
        ops.combine(
            -0.5 * p.c(),
            p.j,
            p.omega_x * phase.sin(),
            p.omega_y * (phase + p.alpha).cos(),
        )
    })
}

/// `∫₀ᵗ H(t') dt'` in closed form.
pub fn integrated_hamiltonian(p: &SystemParams, t: f64) -> Mat4 {
    let d = derived_quantities(p, t);
    with_operators(|ops| {
        ops.combine(
            -0.5 * d.c * t,
            p.j * t,
            p.omega_x * d.delta_x / p.omega,
            -p.omega_y * d.delta_alpha / p.omega,
        )
    })
}

/// `‖H(t)‖`. The Hamiltonian commutes with qubit exchange, so the singlet
/// carries eigenvalue `-2J` and the rest is a 3×3 block on the triplet
/// `|00>, (|01>+|10>)/√2, |11>`.
pub fn hamiltonian_norm(p: &SystemParams, t: f64) -> f64 {
    let phase = p.omega * t;
    let a = -0.5 * p.c();
    let b = p.j;
    let z = c64(p.omega_x * phase.sin(), p.omega_y * (phase + p.alpha).cos()) * std::f64::consts::SQRT_2;
    let re = |x: f64| c64(x, 0.0);
    let block = Matrix::<3>([
        [re(2.0 * a + b), z.conj(), re(b)],
        [z, re(0.0), z.conj()],
        [re(b), z, re(b - 2.0 * a)],
    ]);
    let triplet = spectral_norm(&block).expect("triplet block is Hermitian by construction");
    triplet.max((2.0 * b).abs())
}

/// Upper bound on `sup_{t' in [0,t]} ‖H(t')‖`.
///
/// Samples sit at multiples of a power-of-two spacing `dt`, the smallest with
/// `t / dt <= grid_points`, and the result is inflated by the Lipschitz term
/// `2 ω (|Ωx| + |Ωy|) dt`. Grids for different `t` are then nested (or at
/// least twice as fine), which makes the bound non-decreasing in `t`.
pub fn h_max(p: &SystemParams, t: f64, grid_points: usize) -> f64 {
    let n = grid_points.max(MIN_GRID_POINTS);
    let n = (n + n % 2) as f64;
    if t == 0.0 {
        return hamiltonian_norm(p, 0.0);
    }
    let mut dt = 2f64.powi((t / n).log2().ceil() as i32);
    while t / dt > n {
        dt *= 2.0;
    }
    while t / (0.5 * dt) <= n {
        dt *= 0.5;
    }
    let samples = (t / dt).floor() as usize;
    let sampled = (0..=samples)
        .map(|k| hamiltonian_norm(p, k as f64 * dt))
        .fold(0.0, f64::max);
    sampled + 2.0 * p.omega * (p.omega_x.abs() + p.omega_y.abs()) * dt
}

/// `H_max · t`; the first-order Dyson propagator is trusted when this is
/// below one.
pub fn convergence_margin(p: &SystemParams, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    h_max(p, t, DEFAULT_GRID_POINTS) * t
}

/// `(H_max t)² / 2`.
pub fn truncation_error_bound(p: &SystemParams, t: f64) -> f64 {
    bound_from_margin(convergence_margin(p, t))
}

pub fn bound_from_margin(margin: f64) -> f64 {
    0.5 * margin * margin
}
