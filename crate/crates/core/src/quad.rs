//! Adaptive Simpson quadrature.

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error_estimate: f64,
    pub evaluations: usize,
    /// True if some interval hit the depth limit before meeting its tolerance.
    pub depth_limited: bool,
    /// True if some interval was accepted because its error estimate was at
    /// rounding level, above `tol`.
    pub rounding_limited: bool,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, refining at most
/// `max_depth` levels.
///
/// An interval whose Richardson error estimate is within a few ulps of its
/// value is accepted even above `tol`; further halving cannot improve it and
/// would only burn up to `2^max_depth` evaluations. Noise well above the
/// rounding level is caught by a budget of `MAX_EVALUATIONS`: once spent,
/// remaining intervals are accepted as they are and `depth_limited` is set.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Integral
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Integral {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            depth_limited: false,
            rounding_limited: false,
        };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut acc = Integral {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 3,
        depth_limited: false,
        rounding_limited: false,
    };
    recurse(&f, a, b, fa, fm, fb, whole, tol, max_depth, &mut acc);
    acc
}

const ROUNDING_ULPS: f64 = 64.0;
pub const MAX_EVALUATIONS: usize = 1 << 21;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
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
    acc: &mut Integral,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    acc.evaluations += 2;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        // a non-finite integrand cannot be refined away
        acc.value += left + right;
        acc.error_estimate = f64::NAN;
        acc.depth_limited = true;
        return;
    }
    let converged = delta.abs() <= 15.0 * tol;
    let at_rounding = delta.abs() <= ROUNDING_ULPS * f64::EPSILON * (left.abs() + right.abs());
    let exhausted = acc.evaluations >= MAX_EVALUATIONS;
    if converged || at_rounding || depth == 0 || exhausted {
        if !converged {
            if at_rounding {
                acc.rounding_limited = true;
            } else {
                acc.depth_limited = true;
            }
        }
        acc.value += left + right + delta / 15.0;
        acc.error_estimate += delta.abs() / 15.0;
        return;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, acc);
    recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, acc);
}
