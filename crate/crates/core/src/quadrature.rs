//! Adaptive Simpson quadrature used as an independent numerical oracle for
//! the closed-form slot energies.
//!
//! The absolute tolerance is `1e-15 · scale`, where `scale` is the interval
//! length times the largest sampled integrand magnitude, and bisection stops
//! at depth 60.

/// Relative factor applied to the integrand scale to form the absolute tolerance.
pub const ORACLE_TOL_FACTOR: f64 = 1e-15;
/// Maximum bisection depth.
pub const ORACLE_MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, Copy)]
pub struct SimpsonOptions {
    pub abs_tol: f64,
    pub max_depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub evaluations: usize,
    /// Subintervals accepted because the depth cap was hit.
    pub depth_limited: usize,
}

/// Integrates `f` over `[a, b]` with the oracle settings: tolerance scaled
/// to the integrand magnitude, depth cap 60.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> QuadResult {
    let scale = integrand_scale(&f, a, b);
    let opts = SimpsonOptions {
        abs_tol: ORACLE_TOL_FACTOR * scale,
        max_depth: ORACLE_MAX_DEPTH,
    };
    adaptive_simpson(f, a, b, opts)
}

fn integrand_scale<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    const PROBES: usize = 257;
    let h = (b - a) / (PROBES - 1) as f64;
    let peak = (0..PROBES)
        .map(|i| f(a + h * i as f64).abs())
        .fold(0.0_f64, f64::max);
    peak * (b - a).abs()
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: SimpsonOptions) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, evaluations: 0, depth_limited: 0 };
    }
    if a > b {
        let r = adaptive_simpson(f, b, a, opts);
        return QuadResult { value: -r.value, ..r };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut state = State { evaluations: 3, depth_limited: 0 };
    let value = recurse(&f, a, b, fa, fm, fb, whole, opts.abs_tol, opts.max_depth, &mut state);
    QuadResult { value, evaluations: state.evaluations, depth_limited: state.depth_limited }
}

struct State {
    evaluations: usize,
    depth_limited: usize,
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    state: &mut State,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    state.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let split = left + right;
    let delta = split - whole;
    // Roundoff floor: once the refinement change is at the level of f64
    // resolution of the estimate, further splitting cannot help. Changes in
    // the subnormal range count as converged too, since the halved
    // tolerance underflows there.
    let floor = (16.0 * f64::EPSILON * split.abs()).max(f64::MIN_POSITIVE);
    if delta.abs() <= 15.0 * tol || delta.abs() <= floor {
        return split + delta / 15.0;
    }
    if depth == 0 || m <= a || m >= b {
        state.depth_limited += 1;
        return split + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, state)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, state)
}
