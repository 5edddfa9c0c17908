//! Parameter sweeps behind the `qmag` subcommands.
//!
//! Every sweep evaluates its grid in parallel and assembles rows in grid
//! order, so output depends only on the [`SweepSpec`]. Each row carries the
//! convergence margin `H_max t` of the parameters it was computed with and a
//! `dyson_trusted` flag (`margin < 1`).

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{dyson1_propagator, exact_propagator};
use crate::linalg::{operator_norm, Mat4};
use crate::metrology::{
    default_field_step, optimal_time, qfi_closed_form, qfi_long_time_limit, qfi_long_time_limit_j_squared,
    qfi_numeric, snr_point,
};
use crate::model::{bound_from_margin, convergence_margin, SystemParams};
use crate::output::{render_csv, Cell};
use crate::protocol::{closed_form_probabilities, probabilities, verbatim_probabilities, Propagator};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SweepKind {
    QfiCurve,
    SensitivityCurve,
    HeatmapTc,
    HeatmapTj,
    DecoherenceCompare,
    SnrCurve,
    Validate,
}

impl SweepKind {
    pub fn default_preset(self) -> &'static str {
        match self {
            SweepKind::QfiCurve => "fig1",
            SweepKind::SensitivityCurve => "fig2",
            SweepKind::HeatmapTc => "fig3a",
            SweepKind::HeatmapTj => "fig3b",
            SweepKind::DecoherenceCompare => "fig5",
            SweepKind::SnrCurve => "fig6",
            SweepKind::Validate => "validate",
        }
    }
}

/// Inclusive uniform grid `lo, ..., hi` with `points` samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridRange {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidSpec(format!("{name}: bounds must be finite")));
        }
        if self.lo >= self.hi {
            return Err(Error::InvalidSpec(format!("{name}: need lo < hi, got [{}, {}]", self.lo, self.hi)));
        }
        if self.points < 2 {
            return Err(Error::InvalidSpec(format!("{name}: need at least 2 points")));
        }
        Ok(())
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.points - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.value(k)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub preset: Option<String>,
    pub params: SystemParams,
    pub t_range: GridRange,
    /// C axis for `HEATMAP_TC`, J axis for `HEATMAP_TJ`.
    pub secondary_range: Option<GridRange>,
    pub n_shots: u64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    /// Drive phases for the QFI and sensitivity curves.
    pub alphas: Vec<f64>,
    /// The two C values compared by `DECOHERENCE_COMPARE`.
    pub compare_c: [f64; 2],
    /// Random draws per validation check.
    pub draws: usize,
    /// Run the normalization and exchange checks on the alternative
    /// closed forms from [`verbatim_probabilities`].
    pub verbatim_forms: bool,
}

impl SweepSpec {
    fn base(kind: SweepKind, preset: &str, params: SystemParams, t_range: GridRange) -> Self {
        Self {
            kind,
            preset: Some(preset.to_owned()),
            params,
            t_range,
            secondary_range: None,
            n_shots: 1,
            seed: 1,
            output_path: None,
            alphas: vec![params.alpha],
            compare_c: [0.0, 0.2],
            draws: 200,
            verbatim_forms: false,
        }
    }

    /// Named figure regimes.
    pub fn preset(name: &str) -> Result<Self> {
        let reference = SystemParams::reference();
        let spec = match name {
            "fig1" => Self {
                alphas: vec![0.0, PI / 4.0],
                ..Self::base(SweepKind::QfiCurve, name, reference, GridRange::new(0.0, 10.0, 1001))
            },
            "fig2" => Self {
                alphas: vec![0.0, PI / 4.0],
                ..Self::base(SweepKind::SensitivityCurve, name, reference, GridRange::new(0.0, 10.0, 1001))
            },
            "fig3a" => Self {
                secondary_range: Some(GridRange::new(0.0, 1.0, 201)),
                ..Self::base(
                    SweepKind::HeatmapTc,
                    name,
                    reference.with_alpha(PI / 4.0),
                    GridRange::new(0.0, 10.0, 201),
                )
            },
            "fig3b" => Self {
                secondary_range: Some(GridRange::new(0.0, 1.0, 201)),
                ..Self::base(
                    SweepKind::HeatmapTj,
                    name,
                    reference.with_alpha(PI / 4.0),
                    GridRange::new(0.0, 10.0, 201),
                )
            },
            "fig5" => Self::base(
                SweepKind::DecoherenceCompare,
                name,
                reference.with_j(0.3).with_alpha(PI / 4.0),
                GridRange::new(0.0, 10.0, 1001),
            ),
            "fig6" => Self::base(SweepKind::SnrCurve, name, reference, GridRange::new(0.0, 20.0, 200)),
            "validate" => Self::base(SweepKind::Validate, name, reference, GridRange::new(0.0, 20.0, 2)),
            other => return Err(Error::InvalidSpec(format!("unknown preset \"{other}\""))),
        };
        Ok(spec)
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["fig1", "fig2", "fig3a", "fig3b", "fig5", "fig6", "validate"]
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.kind == SweepKind::Validate {
            return Ok(());
        }
        self.t_range.validate("t_range")?;
        if self.t_range.lo < 0.0 {
            return Err(Error::InvalidSpec("t_range: times must be non-negative".into()));
        }
        if matches!(self.kind, SweepKind::HeatmapTc | SweepKind::HeatmapTj) {
            self.secondary_range
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec("heatmaps need secondary_range".into()))?
                .validate("secondary_range")?;
        }
        if self.n_shots == 0 {
            return Err(Error::InvalidSpec("n_shots must be at least 1".into()));
        }
        if self.alphas.is_empty() && matches!(self.kind, SweepKind::QfiCurve | SweepKind::SensitivityCurve) {
            return Err(Error::InvalidSpec("need at least one alpha".into()));
        }
        if self.alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidSpec("alphas must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Ordered key/value notes written as `#` header lines.
    pub metadata: Vec<(String, String)>,
    pub max_margin: f64,
    /// Unix seconds; reported in JSON output only so CSV stays reproducible.
    pub generated_at: u64,
    /// Names of failed validation checks (empty for the figure sweeps).
    pub failures: Vec<String>,
}

impl SweepResult {
    fn new(spec: &SweepSpec, columns: &[&str], rows: Vec<Vec<Cell>>, max_margin: f64) -> Result<Self> {
        let mut metadata = vec![
            ("qmag".to_owned(), VERSION.to_owned()),
            ("kind".to_owned(), serde_json::to_string(&spec.kind)?.trim_matches('"').to_owned()),
        ];
        if let Some(preset) = &spec.preset {
            metadata.push(("preset".to_owned(), preset.clone()));
        }
        metadata.push(("params".to_owned(), serde_json::to_string(&spec.params)?));
        metadata.push((
            "conventions".to_owned(),
            "basis |00>,|01>,|10>,|11> (qubit 1 left factor); derivatives at fixed gamma_phi; \
             inf marks an infinite-sensitivity sentinel"
                .to_owned(),
        ));
        metadata.push(("max_margin".to_owned(), crate::output::format_f64(max_margin)));
        Ok(Self {
            spec: spec.clone(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows,
            metadata,
            max_margin,
            generated_at: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            failures: Vec::new(),
        })
    }

    fn note(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.push((key.to_owned(), value.into()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[idx].as_f64()).collect()
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let cols: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        render_csv(&self.metadata, &cols, &self.rows)
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| match c {
                        Cell::Num(x) if x.is_finite() => serde_json::json!(x),
                        Cell::Num(x) => serde_json::json!(crate::output::format_f64(*x)),
                        Cell::Int(n) => serde_json::json!(n),
                        Cell::Bool(b) => serde_json::json!(b),
                        Cell::Text(s) => serde_json::json!(s),
                    })
                    .collect()
            })
            .collect();
        let meta: serde_json::Map<String, serde_json::Value> =
            self.metadata.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "spec": self.spec,
            "metadata": meta,
            "generated_at": self.generated_at,
            "columns": self.columns,
            "rows": rows,
            "failures": self.failures,
        }))?)
    }
}

fn trust(margin: f64) -> Cell {
    Cell::Bool(margin < 1.0)
}

fn max_margin(rows: &[Vec<Cell>], margin_col: usize) -> f64 {
    rows.iter().filter_map(|r| r[margin_col].as_f64()).fold(0.0, f64::max)
}

/// First interior grid minimum of `values` (index strictly inside the grid).
fn interior_argmin(values: &[f64]) -> Option<usize> {
    let (k, _) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    (k > 0 && k + 1 < values.len()).then_some(k)
}

fn fmt(x: f64) -> String {
    crate::output::format_f64(x)
}

pub fn run(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    match spec.kind {
        SweepKind::QfiCurve => run_qfi_curve(spec),
        SweepKind::SensitivityCurve => run_sensitivity_curve(spec),
        SweepKind::HeatmapTc | SweepKind::HeatmapTj => run_heatmap(spec),
        SweepKind::DecoherenceCompare => run_decoherence_compare(spec),
        SweepKind::SnrCurve => run_snr_curve(spec),
        SweepKind::Validate => run_validate(spec),
    }
}

fn alpha_grid(spec: &SweepSpec) -> Vec<(f64, f64)> {
    let times = spec.t_range.values();
    spec.alphas.iter().flat_map(|&a| times.iter().map(move |&t| (a, t))).collect()
}

pub fn run_qfi_curve(spec: &SweepSpec) -> Result<SweepResult> {
    let rows: Vec<Vec<Cell>> = alpha_grid(spec)
        .par_iter()
        .map(|&(alpha, t)| {
            let p = spec.params.with_alpha(alpha);
            let f_q = qfi_closed_form(&p, t);
            let margin = convergence_margin(&p, t);
            vec![
                t.into(),
                f_q.into(),
                crate::metrology::sensitivity_bound(f_q, 1).into(),
                alpha.into(),
                margin.into(),
                trust(margin),
            ]
        })
        .collect();
    let m = max_margin(&rows, 4);
    let mut result = SweepResult::new(
        spec,
        &["t", "f_q", "sqrtN_delta_b", "alpha", "margin", "dyson_trusted"],
        rows,
        m,
    )?;
    for &alpha in &spec.alphas {
        let best = optimal_time(&spec.params.with_alpha(alpha), spec.t_range.lo, spec.t_range.hi);
        result.note(
            &format!("t_star[alpha={}]", fmt(alpha)),
            format!("{} (f_q {})", fmt(best.arg), fmt(best.value)),
        );
    }
    Ok(result)
}

pub fn run_sensitivity_curve(spec: &SweepSpec) -> Result<SweepResult> {
    let rows: Vec<Vec<Cell>> = alpha_grid(spec)
        .par_iter()
        .map(|&(alpha, t)| {
            let p = spec.params.with_alpha(alpha);
            let margin = convergence_margin(&p, t);
            vec![
                t.into(),
                crate::metrology::sensitivity_bound(qfi_closed_form(&p, t), 1).into(),
                alpha.into(),
                margin.into(),
                trust(margin),
            ]
        })
        .collect();
    let m = max_margin(&rows, 3);
    let mut result = SweepResult::new(spec, &["t", "sqrtN_delta_b", "alpha", "margin", "dyson_trusted"], rows, m)?;
    for &alpha in &spec.alphas {
        let best = optimal_time(&spec.params.with_alpha(alpha), spec.t_range.lo, spec.t_range.hi);
        let interior = best.arg > spec.t_range.lo && best.arg < spec.t_range.hi;
        result.note(
            &format!("argmin[alpha={}]", fmt(alpha)),
            format!(
                "{} (sqrtN_delta_b {}, interior {})",
                fmt(best.arg),
                fmt(crate::metrology::sensitivity_bound(best.value, 1)),
                interior
            ),
        );
    }
    Ok(result)
}

pub fn run_heatmap(spec: &SweepSpec) -> Result<SweepResult> {
    let axis = spec
        .secondary_range
        .ok_or_else(|| Error::InvalidSpec("heatmaps need secondary_range".into()))?;
    let by_c = spec.kind == SweepKind::HeatmapTc;
    let times = spec.t_range.values();
    let grid: Vec<(f64, f64)> = axis
        .values()
        .into_iter()
        .flat_map(|a| times.iter().map(move |&t| (a, t)))
        .collect();
    let rows: Vec<Vec<Cell>> = grid
        .par_iter()
        .map(|&(a, t)| {
            let p = if by_c { spec.params.with_c(a) } else { spec.params.with_j(a) };
            let margin = convergence_margin(&p, t);
            vec![
                t.into(),
                a.into(),
                crate::metrology::sensitivity_bound(qfi_closed_form(&p, t), 1).into(),
                margin.into(),
                trust(margin),
            ]
        })
        .collect();
    let m = max_margin(&rows, 3);
    let axis_name = if by_c { "c" } else { "j" };
    let mut result = SweepResult::new(spec, &["t", axis_name, "sqrtN_delta_b", "margin", "dyson_trusted"], rows, m)?;
    let best = result
        .rows
        .iter()
        .filter_map(|r| Some((r[0].as_f64()?, r[1].as_f64()?, r[2].as_f64()?)))
        .filter(|(_, _, s)| s.is_finite())
        .min_by(|a, b| a.2.total_cmp(&b.2));
    if let Some((t, a, s)) = best {
        result.note("grid_min", format!("t {} {axis_name} {} sqrtN_delta_b {}", fmt(t), fmt(a), fmt(s)));
    }
    Ok(result)
}

pub fn run_decoherence_compare(spec: &SweepSpec) -> Result<SweepResult> {
    let [c_ideal, c_noisy] = spec.compare_c;
    let ideal = spec.params.with_c(c_ideal);
    let noisy = spec.params.with_c(c_noisy);
    let rows: Vec<Vec<Cell>> = spec
        .t_range
        .values()
        .par_iter()
        .map(|&t| {
            let margin = convergence_margin(&ideal, t).max(convergence_margin(&noisy, t));
            vec![
                t.into(),
                crate::metrology::sensitivity_bound(qfi_closed_form(&ideal, t), 1).into(),
                crate::metrology::sensitivity_bound(qfi_closed_form(&noisy, t), 1).into(),
                margin.into(),
                trust(margin),
            ]
        })
        .collect();
    let m = max_margin(&rows, 3);
    let mut result = SweepResult::new(
        spec,
        &["t", "sqrtN_delta_b_C0", "sqrtN_delta_b_C02", "margin", "dyson_trusted"],
        rows,
        m,
    )?;
    let (lo, hi) = (spec.t_range.lo, spec.t_range.hi);
    let best_ideal = optimal_time(&ideal, lo, hi);
    let best_noisy = optimal_time(&noisy, lo, hi);
    let min_ideal = crate::metrology::sensitivity_bound(best_ideal.value, 1);
    let min_noisy = crate::metrology::sensitivity_bound(best_noisy.value, 1);
    let ideal_at_noisy_t = crate::metrology::sensitivity_bound(qfi_closed_form(&ideal, best_noisy.arg), 1);
    result.note("compare_c", format!("{} {}", fmt(c_ideal), fmt(c_noisy)));
    result.note("t_star_C0", fmt(best_ideal.arg));
    result.note("min_C0", fmt(min_ideal));
    result.note("t_star_C02", fmt(best_noisy.arg));
    result.note("min_C02", fmt(min_noisy));
    result.note("noise_penalty", (min_noisy > ideal_at_noisy_t).to_string());
    Ok(result)
}

pub fn run_snr_curve(spec: &SweepSpec) -> Result<SweepResult> {
    let p = spec.params;
    let rows: Vec<Vec<Cell>> = spec
        .t_range
        .values()
        .par_iter()
        .map(|&t| {
            let s = snr_point(&p, t, spec.n_shots, 1e-3);
            let margin = convergence_margin(&p, t);
            vec![
                t.into(),
                s.signal.into(),
                s.d_signal_d_bz.into(),
                s.delta_b_min.into(),
                s.delta_b_qfi.into(),
                s.xi.into(),
                s.flat_signal.into(),
                margin.into(),
                trust(margin),
            ]
        })
        .collect();
    let m = max_margin(&rows, 7);
    let mut result = SweepResult::new(
        spec,
        &["t", "signal", "dS_dBz", "delta_b_min", "delta_b_qfi", "xi", "flat_signal", "margin", "dyson_trusted"],
        rows,
        m,
    )?;
    result.note("n_shots", spec.n_shots.to_string());
    let times = spec.t_range.values();
    for (name, col) in [("delta_b_min", 3usize), ("delta_b_qfi", 4)] {
        let values: Vec<f64> = result.rows.iter().filter_map(|r| r[col].as_f64()).collect();
        let note = match interior_argmin(&values) {
            Some(k) => format!("t {} value {}", fmt(times[k]), fmt(values[k])),
            None => "none".to_owned(),
        };
        result.note(&format!("interior_min_{name}"), note);
    }
    let xi_min = result
        .rows
        .iter()
        .filter_map(|r| r[5].as_f64())
        .filter(|x| x.is_finite())
        .fold(f64::INFINITY, f64::min);
    result.note("xi_min", fmt(xi_min));
    Ok(result)
}

/// Outcome of one validation check over its random draws.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    /// `invariant` checks gate the exit code; `known_discrepancy` rows only
    /// document known inconsistencies in the alternative printed formulas.
    pub role: &'static str,
    pub draws: usize,
    pub max_violation: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

fn random_params(rng: &mut ChaCha20Rng) -> SystemParams {
    SystemParams {
        gamma: rng.random_range(0.5..2.0),
        b_z: rng.random_range(-1.0..1.0),
        j: rng.random_range(-1.0..1.0),
        gamma_phi: rng.random_range(0.0..0.5),
        omega_x: rng.random_range(-1.0..1.0),
        omega_y: rng.random_range(-1.0..1.0),
        omega: rng.random_range(0.3..3.0),
        alpha: rng.random_range(0.0..2.0 * PI),
    }
}

fn check_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `(params, t)` with `H_max t < 1`.
pub fn trusted_draw(rng: &mut ChaCha20Rng) -> (SystemParams, f64, f64) {
    loop {
        let p = random_params(rng);
        let t = rng.random_range(0.0..2.0);
        let margin = convergence_margin(&p, t);
        if margin < 1.0 {
            return (p, t, margin);
        }
    }
}

/// The invariant suite over seeded random draws.
pub fn validation_checks(draws: usize, seed: u64, verbatim_forms: bool) -> Result<Vec<CheckOutcome>> {
    if draws == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let sample = |index: u64| -> Vec<(SystemParams, f64)> {
        let mut rng = check_rng(seed, index);
        (0..draws)
            .map(|_| {
                let p = random_params(&mut rng);
                let t = rng.random_range(0.0..20.0);
                (p, t)
            })
            .collect()
    };

    // probabilities: normalization, exchange symmetry, closed form vs pipeline
    let draws_prob = sample(1);
    let mut norm_violation: f64 = 0.0;
    let mut exch_violation: f64 = 0.0;
    let mut pipe_violation: f64 = 0.0;
    let mut verbatim_norm: f64 = 0.0;
    let mut verbatim_exch: f64 = 0.0;
    for (p, t) in &draws_prob {
        let closed = closed_form_probabilities(p, *t);
        let numeric = probabilities(p, *t, Propagator::Dyson)?;
        let v = verbatim_probabilities(p, *t);
        let v_sum: f64 = v.iter().sum();
        verbatim_norm = verbatim_norm.max((v_sum - 1.0).abs());
        verbatim_exch = verbatim_exch.max((v[1] - v[2]).abs());
        if verbatim_forms {
            norm_violation = norm_violation.max((v_sum - 1.0).abs());
            exch_violation = exch_violation.max((v[1] - v[2]).abs());
        } else {
            norm_violation = norm_violation.max((closed.sum() - 1.0).abs()).max((numeric.sum() - 1.0).abs());
            exch_violation = exch_violation.max((closed.p01 - closed.p10).abs()).max((numeric.p01 - numeric.p10).abs());
        }
        let diff = closed.as_array().iter().zip(numeric.as_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pipe_violation = pipe_violation.max(diff);
    }
    let n = draws_prob.len();
    out.push(CheckOutcome { name: "normalization", role: "invariant", draws: n, max_violation: norm_violation, tolerance: 1e-12 });
    out.push(CheckOutcome { name: "exchange_symmetry", role: "invariant", draws: n, max_violation: exch_violation, tolerance: 1e-12 });
    out.push(CheckOutcome { name: "closed_form_vs_pipeline", role: "invariant", draws: n, max_violation: pipe_violation, tolerance: 1e-12 });

    // QFI analytic vs numeric, relative
    let mut qfi_violation: f64 = 0.0;
    let mut qfi_draws = 0;
    for (p, t) in sample(2) {
        let exact = qfi_closed_form(&p, t);
        if exact <= 1e-8 {
            continue;
        }
        qfi_draws += 1;
        let numeric = qfi_numeric(&p, t, default_field_step(&p)).value;
        qfi_violation = qfi_violation.max(((numeric - exact) / exact).abs());
    }
    out.push(CheckOutcome { name: "qfi_analytic_vs_numeric", role: "invariant", draws: qfi_draws, max_violation: qfi_violation, tolerance: 1e-6 });

    // Dyson vs exact within the truncation bound, and unitarity of the exact propagator
    let mut rng = check_rng(seed, 3);
    let mut bound_violation: f64 = 0.0;
    let mut unitarity: f64 = 0.0;
    for _ in 0..draws {
        let (p, t, margin) = trusted_draw(&mut rng);
        let exact = exact_propagator(&p, t)?;
        let observed = operator_norm(&(exact - dyson1_propagator(&p, t)));
        bound_violation = bound_violation.max(observed - bound_from_margin(margin));
        unitarity = unitarity.max((exact.adjoint() * exact - Mat4::identity()).frobenius_norm());
    }
    out.push(CheckOutcome { name: "dyson_within_truncation_bound", role: "invariant", draws, max_violation: bound_violation.max(0.0), tolerance: 1e-8 });
    out.push(CheckOutcome { name: "exact_unitarity", role: "invariant", draws, max_violation: unitarity, tolerance: 1e-10 });

    // ξ >= 1
    let mut xi_violation: f64 = 0.0;
    for (p, t) in sample(4) {
        let s = snr_point(&p, t, 1, 1e-3);
        if s.xi.is_finite() {
            xi_violation = xi_violation.max(1.0 - s.xi);
        }
    }
    out.push(CheckOutcome { name: "cramer_rao_ordering", role: "invariant", draws, max_violation: xi_violation.max(0.0), tolerance: 1e-6 });

    // long-time limit against the closed form at t = 1e6 / ω
    let mut limit_violation: f64 = 0.0;
    let mut alt_violation: f64 = 0.0;
    let mut limit_draws = 0;
    let mut rng = check_rng(seed, 5);
    let reference = std::iter::once(SystemParams::reference());
    let randoms: Vec<SystemParams> = (0..draws).map(|_| random_params(&mut rng)).collect();
    for p in reference.chain(randoms) {
        let far = qfi_closed_form(&p, 1e6 / p.omega);
        let (Ok(limit), Ok(alt)) = (qfi_long_time_limit(&p), qfi_long_time_limit_j_squared(&p)) else {
            continue;
        };
        if limit < 1e-6 {
            continue;
        }
        limit_draws += 1;
        limit_violation = limit_violation.max(((far - limit) / limit).abs());
        alt_violation = alt_violation.max(((far - alt) / far).abs());
    }
    out.push(CheckOutcome { name: "long_time_limit", role: "invariant", draws: limit_draws, max_violation: limit_violation, tolerance: 1e-3 });

    out.push(CheckOutcome { name: "verbatim_normalization", role: "known_discrepancy", draws: n, max_violation: verbatim_norm, tolerance: 1e-12 });
    out.push(CheckOutcome { name: "verbatim_exchange_symmetry", role: "known_discrepancy", draws: n, max_violation: verbatim_exch, tolerance: 1e-12 });
    // relative gap between the (C²+J²)² form and the large-t closed form
    out.push(CheckOutcome { name: "long_time_limit_j_squared_form", role: "known_discrepancy", draws: limit_draws, max_violation: alt_violation, tolerance: 1e-3 });
    Ok(out)
}

pub fn run_validate(spec: &SweepSpec) -> Result<SweepResult> {
    let checks = validation_checks(spec.draws, spec.seed, spec.verbatim_forms)?;
    let rows: Vec<Vec<Cell>> = checks
        .iter()
        .map(|c| {
            vec![
                Cell::Text(c.name.into()),
                Cell::Text(c.role.into()),
                Cell::Int(c.draws as u64),
                Cell::Num(c.max_violation),
                Cell::Num(c.tolerance),
                Cell::Bool(c.passed()),
            ]
        })
        .collect();
    let mut result = SweepResult::new(
        spec,
        &["check_name", "role", "draws", "max_violation", "tolerance", "pass"],
        rows,
        0.0,
    )?;
    result.failures = checks
        .iter()
        .filter(|c| c.role == "invariant" && !c.passed())
        .map(|c| c.name.to_owned())
        .collect();
    result.note("seed", spec.seed.to_string());
    result.note("verbatim_forms", spec.verbatim_forms.to_string());
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind_preset: &str, points: usize) -> SweepSpec {
        let mut spec = SweepSpec::preset(kind_preset).unwrap();
        spec.t_range.points = points;
        if let Some(r) = spec.secondary_range.as_mut() {
            r.points = 11;
        }
        spec
    }

    #[test]
    fn grid_values_hit_endpoints() {
        let g = GridRange::new(0.0, 0.3, 4);
        assert_eq!(g.values().first(), Some(&0.0));
        assert_eq!(g.values().last(), Some(&0.3));
        assert!(GridRange::new(1.0, 1.0, 3).validate("x").is_err());
        assert!(GridRange::new(0.0, 1.0, 1).validate("x").is_err());
    }

    #[test]
    fn qfi_curve_bare_matches_two_t_squared() {
        let mut spec = small("fig1", 101);
        spec.params = SystemParams::quiet();
        spec.alphas = vec![0.0];
        let r = run(&spec).unwrap();
        let t = r.column("t").unwrap();
        let f = r.column("f_q").unwrap();
        for (t, f) in t.iter().zip(f) {
            assert!((f - 2.0 * t * t).abs() <= 1e-10);
        }
    }

    #[test]
    fn qfi_curve_reports_t_star() {
        let r = run(&small("fig1", 201)).unwrap();
        let note = r.metadata_value("t_star[alpha=0.0000000000000000e0]").unwrap();
        let t: f64 = note.split_whitespace().next().unwrap().parse().unwrap();
        assert!((6.30..=6.40).contains(&t), "{note}");
        assert_eq!(r.rows.len(), 2 * 201);
    }

    #[test]
    fn heatmap_row_count_and_zero_time_sentinel() {
        let r = run(&small("fig3a", 21)).unwrap();
        assert_eq!(r.rows.len(), 21 * 11);
        for row in r.rows.iter().filter(|row| row[0].as_f64() == Some(0.0)) {
            assert_eq!(row[2].as_f64(), Some(f64::INFINITY));
        }
    }

    #[test]
    fn margin_flag_consistent() {
        let r = run(&small("fig2", 51)).unwrap();
        for row in &r.rows {
            let margin = row[3].as_f64().unwrap();
            assert_eq!(row[4], Cell::Bool(margin < 1.0));
        }
        assert!(r.max_margin > 1.0);
        assert!(r.metadata_value("max_margin").is_some());
    }

    #[test]
    fn validate_zero_draws_is_empty_pass() {
        let mut spec = SweepSpec::preset("validate").unwrap();
        spec.draws = 0;
        let r = run(&spec).unwrap();
        assert!(r.rows.is_empty());
        assert!(r.failures.is_empty());
    }

    #[test]
    fn validate_verbatim_fails_normalization_and_exchange() {
        let mut spec = SweepSpec::preset("validate").unwrap();
        spec.draws = 10;
        spec.verbatim_forms = true;
        let r = run(&spec).unwrap();
        assert!(r.failures.contains(&"normalization".to_owned()));
        assert!(r.failures.contains(&"exchange_symmetry".to_owned()));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = SweepSpec::preset("fig3b").unwrap();
        spec.secondary_range = None;
        assert!(matches!(run(&spec), Err(Error::InvalidSpec(_))));
        assert!(SweepSpec::preset("fig9").is_err());
    }
}
