//! Exact propagators against an independent high-order ODE solve
//! (`golden/generate_propagators.py`).

use qmag_core::evolution::exact_propagator;
use qmag_core::linalg::{c64, operator_norm, Mat4};
use qmag_core::SystemParams;
use serde_json::Value;

const GOLDEN: &str = include_str!("golden/propagators.json");

fn matrix(case: &Value) -> Mat4 {
    let mut m = Mat4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            m.0[r][c] = c64(case["re"][r][c].as_f64().unwrap(), case["im"][r][c].as_f64().unwrap());
        }
    }
    m
}

#[test]
fn exact_propagator_matches_ode_reference() {
    let cases: Vec<Value> = serde_json::from_str(GOLDEN).unwrap();
    assert_eq!(cases.len(), 3);
    for case in &cases {
        let f = |k: &str| case[k].as_f64().unwrap();
        let p = SystemParams {
            gamma: f("gamma"),
            b_z: f("b_z"),
            j: f("j"),
            gamma_phi: f("gamma_phi"),
            omega_x: f("omega_x"),
            omega_y: f("omega_y"),
            omega: f("omega"),
            alpha: f("alpha"),
        };
        let u = exact_propagator(&p, f("t")).unwrap();
        let diff = operator_norm(&(u - matrix(case)));
        assert!(diff <= 1e-9, "{}: {diff:e}", case["name"]);
    }
}
