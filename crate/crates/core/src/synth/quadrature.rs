//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 48;
const PANELS: usize = 64;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first cut into fixed panels so that narrow features
/// (kinks of a pointwise minimum, sharp peaks) cannot hide between the
/// five sample points of a single top-level Simpson estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let h = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == PANELS { b } else { lo + h };
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, flo, fmid, fhi);
            refine(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, MAX_DEPTH)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
