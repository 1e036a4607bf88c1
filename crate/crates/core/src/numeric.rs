//! Small scalar routines shared by the fitting code.

use libm::erfc;
use statrs::function::erf::erfc_inv;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
/// sqrt(2 pi)
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
/// Cauchy-to-Gaussian scale ratio of a CGCM half, sqrt(pi/2).
pub const CGCM_K: f64 = 1.253_314_137_315_500_3;

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal survival function, accurate in the upper tail.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

/// Standard normal quantile, polished with one Halley step.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -norm_quantile_lower(1.0 - p);
    }
    norm_quantile_lower(p)
}

fn norm_quantile_lower(p: f64) -> f64 {
    let z = -SQRT_2 * erfc_inv(2.0 * p);
    if !z.is_finite() {
        return z;
    }
    // Halley refinement on the lower tail where relative accuracy matters.
    let e = norm_cdf(z) - p;
    let u = e / norm_pdf(z);
    if u.is_finite() {
        z - u / (1.0 + 0.5 * z * u)
    } else {
        z
    }
}

/// Bisection for the boundary of a monotone predicate.
///
/// `ok(lo)` must be false and `ok(hi)` true; returns the smallest `hi` found
/// with `hi - lo <= tol`.
pub fn bisect_threshold(mut lo: f64, mut hi: f64, tol: f64, mut ok: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Brent's method on a sign-changing bracket.
pub fn brent(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, xtol: f64, max_iter: usize) -> Option<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return None;
        }
    }
    Some(b)
}

/// Invert a nondecreasing CDF numerically. Uses the survival function for
/// upper-tail probabilities so that quantiles near 1 keep their accuracy.
pub fn invert_cdf(
    cdf: impl Fn(f64) -> f64,
    sf: impl Fn(f64) -> f64,
    p: f64,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    let upper = p > 0.5;
    let q = 1.0 - p;
    let below = |x: f64| if upper { sf(x) > q } else { cdf(x) < p };
    let mut step = (hi - lo).abs().max(1.0);
    while below(hi) {
        hi += step;
        step *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    step = (hi - lo).abs().max(1.0);
    while !below(lo) {
        lo -= step;
        step *= 2.0;
        if !lo.is_finite() {
            return f64::NEG_INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Linear-interpolation sample quantile (type 7) of sorted data.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let i = h.floor() as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    sorted[i] + (h - i as f64) * (sorted[i + 1] - sorted[i])
}
