//! Deterministic 1-D maximization: uniform grid bracket, then golden-section
//! refinement inside the bracket. Ties go to the smaller argument.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
}

/// Maximize `f` on `[lo, hi]` using `grid` uniformly spaced samples
/// (endpoints included) and golden-section refinement to `tol` in the argument.
pub fn maximize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize, tol: f64) -> Maximum {
    let grid = grid.max(3);
    let step = (hi - lo) / (grid - 1) as f64;
    let at = |k: usize| if k == grid - 1 { hi } else { lo + k as f64 * step };

    let mut best = Maximum { arg: lo, value: f(lo) };
    let mut best_k = 0;
    for k in 1..grid {
        let x = at(k);
        let v = f(x);
        if v > best.value {
            best = Maximum { arg: x, value: v };
            best_k = k;
        }
    }

    let a = at(best_k.saturating_sub(1));
    let b = at((best_k + 1).min(grid - 1));
    let refined = golden_section(&f, a, b, tol);
    if refined.value > best.value {
        refined
    } else {
        best
    }
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Maximum {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        // `>=` keeps the left point on ties
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        Maximum { arg: c, value: fc }
    } else {
        Maximum { arg: d, value: fd }
    }
}
