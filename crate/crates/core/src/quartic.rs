//! Closed-form real-root extraction for polynomials up to degree four.
//!
//! The quartic path depresses the polynomial, solves the resolvent cubic
//! with a safeguarded Newton iteration from a bracketed start, recombines
//! the two Ferrari quadratics, and polishes every real root with two Newton
//! steps on the original quartic. Lower degrees are handled directly; a
//! vanishing leading coefficient demotes the degree.

/// Roots of `a x + b = 0`.
pub fn solve_linear(a: f64, b: f64) -> Vec<f64> {
    if a == 0.0 {
        Vec::new()
    } else {
        vec![-b / a]
    }
}

/// Real roots of `a x^2 + b x + c = 0` (stable citardauq form).
pub fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() < 1e-14 * scale {
        return solve_linear(b, c);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    if q == 0.0 {
        // b == 0 and disc == 0, or both roots zero.
        let r = (-c / a).max(0.0).sqrt();
        if r == 0.0 {
            return vec![0.0];
        }
        return vec![-r, r];
    }
    let r1 = q / a;
    let r2 = c / q;
    if (r1 - r2).abs() <= 1e-12 * (1.0 + r1.abs().max(r2.abs())) {
        vec![0.5 * (r1 + r2)]
    } else if r1 < r2 {
        vec![r1, r2]
    } else {
        vec![r2, r1]
    }
}

/// Real roots of `a x^3 + b x^2 + c x + d = 0` (trigonometric/Cardano).
pub fn solve_cubic(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() < 1e-14 * scale {
        return solve_quadratic(b, c, d);
    }
    let b = b / a;
    let c = c / a;
    let d = d / a;
    // Depress: x = t - b/3.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let mut roots = Vec::with_capacity(3);
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if disc > 0.0 {
        let sq = disc.sqrt();
        let u = cbrt(-q / 2.0 + sq);
        let v = cbrt(-q / 2.0 - sq);
        roots.push(u + v - shift);
    } else if p == 0.0 && q == 0.0 {
        roots.push(-shift);
    } else {
        // Three real roots.
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        for k in 0..3 {
            roots.push(m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift);
        }
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    }
    // One Newton step against the normalized cubic tightens Cardano's
    // rounding; harmless elsewhere.
    for r in roots.iter_mut() {
        let f = ((*r + b) * *r + c) * *r + d;
        let fp = (3.0 * *r + 2.0 * b) * *r + c;
        if fp != 0.0 {
            let step = f / fp;
            if step.is_finite() {
                *r -= step;
            }
        }
    }
    roots
}

#[inline]
fn cbrt(x: f64) -> f64 {
    x.signum() * x.abs().powf(1.0 / 3.0)
}

/// Largest real root of the resolvent cubic
/// `y^3 - (w/2) y^2 - v y + (w v / 2 - u^2 / 8) = 0`, found by a safeguarded
/// Newton iteration started at the bracket `[w/2, hi]`. The cubic is
/// negative at `w/2` (it equals `-u^2/8` there) and positive for large `y`,
/// so a root with `2y - w >= 0` always exists.
fn resolvent_root(w: f64, u: f64, v: f64) -> (f64, usize) {
    let eval = |y: f64| -> (f64, f64) {
        let f = ((y - w / 2.0) * y - v) * y + (w * v / 2.0 - u * u / 8.0);
        let fp = (3.0 * y - w) * y - v;
        (f, fp)
    };
    let mut lo = w / 2.0;
    let mut hi = lo.abs().max(v.abs()).max(u.abs()).max(1.0);
    let mut grow = 0;
    while eval(hi).0 <= 0.0 && grow < 200 {
        hi = hi * 2.0 + 1.0;
        grow += 1;
    }
    let mut y = 0.5 * (lo + hi);
    let mut iters = 0usize;
    for i in 0..64 {
        iters = i + 1;
        let (f, fp) = eval(y);
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = if fp != 0.0 { y - f / fp } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - y).abs() <= 1e-15 * (1.0 + y.abs()) {
            y = next;
            break;
        }
        y = next;
    }
    (y, iters)
}

/// Real roots of `g1 x^4 + g2 x^3 + g3 x^2 + g4 x + g5 = 0`.
///
/// A vanishing `g1` demotes the degree; multiple roots collapse to a single
/// entry. Roots are ascending.
pub fn solve_quartic(g1: f64, g2: f64, g3: f64, g4: f64, g5: f64) -> Vec<f64> {
    let scale = g1.abs().max(g2.abs()).max(g3.abs()).max(g4.abs()).max(g5.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if g1.abs() < 1e-14 * scale {
        return solve_cubic(g2, g3, g4, g5);
    }

    let b = g2 / g1;
    let c = g3 / g1;
    let d = g4 / g1;
    let e = g5 / g1;

    // Depressed quartic u^4 + w u^2 + m u + v, x = u - b/4.
    let shift = b / 4.0;
    let b2 = b * b;
    let w = c - 3.0 * b2 / 8.0;
    let m = b2 * b / 8.0 - b * c / 2.0 + d;
    let v = -3.0 * b2 * b2 / 256.0 + b2 * c / 16.0 - b * d / 4.0 + e;

    let mut roots: Vec<f64> = Vec::with_capacity(4);
    let depressed_scale = w.abs().max(m.abs()).max(v.abs()).max(1.0);
    if m.abs() < 1e-14 * depressed_scale {
        // Biquadratic: u^2 solves t^2 + w t + v = 0.
        for t in solve_quadratic(1.0, w, v) {
            if t > 0.0 {
                roots.push(t.sqrt() - shift);
                roots.push(-t.sqrt() - shift);
            } else if t >= -1e-14 * depressed_scale {
                roots.push(-shift);
            }
        }
    } else {
        let (y, _iters) = resolvent_root(w, m, v);
        let s2 = 2.0 * y - w;
        if s2 > 1e-300 {
            let s = s2.sqrt();
            let cc = m / (2.0 * s2);
            // (u^2 + y)^2 = s2 (u - cc)^2 splits into two quadratics.
            for r in solve_quadratic(1.0, -s, y + s * cc) {
                roots.push(r - shift);
            }
            for r in solve_quadratic(1.0, s, y - s * cc) {
                roots.push(r - shift);
            }
        } else {
            // The bracket guarantees 2y - w >= 0; hitting zero means the
            // linear term is negligible in this configuration. Seed with the
            // biquadratic roots and let polishing absorb the residual.
            for t in solve_quadratic(1.0, w, v) {
                if t >= 0.0 {
                    roots.push(t.sqrt() - shift);
                    roots.push(-t.sqrt() - shift);
                }
            }
        }
    }

    polish_and_dedup(roots, g1, g2, g3, g4, g5)
}

fn polish_and_dedup(mut roots: Vec<f64>, g1: f64, g2: f64, g3: f64, g4: f64, g5: f64) -> Vec<f64> {
    let eval = |x: f64| -> (f64, f64) {
        let f = (((g1 * x + g2) * x + g3) * x + g4) * x + g5;
        let fp = ((4.0 * g1 * x + 3.0 * g2) * x + 2.0 * g3) * x + g4;
        (f, fp)
    };
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let (f, fp) = eval(*r);
            if fp == 0.0 {
                break;
            }
            let step = f / fp;
            if !step.is_finite() || step.abs() > 1.0 + r.abs() {
                break;
            }
            *r -= step;
        }
    }
    roots.retain(|r| r.is_finite());
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_roots(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len(), "got {got:?}, want {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "got {got:?}, want {want:?}");
        }
    }

    #[test]
    fn factored_quartic() {
        // (x-1)(x-2)(x-3)(x-4)
        let r = solve_quartic(1.0, -10.0, 35.0, -50.0, 24.0);
        assert_roots(&r, &[1.0, 2.0, 3.0, 4.0], 1e-9);
    }

    #[test]
    fn repeated_root_collapses() {
        let r = solve_quartic(1.0, 0.0, 0.0, 0.0, 0.0);
        assert_roots(&r, &[0.0], 1e-9);
    }

    #[test]
    fn double_root() {
        // (x-1)^2 (x+2)(x+3) = x^4 + 3x^3 - 3x^2 - 7x + 6
        let r = solve_quartic(1.0, 3.0, -3.0, -7.0, 6.0);
        assert_roots(&r, &[-3.0, -2.0, 1.0], 1e-6);
    }

    #[test]
    fn no_real_roots() {
        // x^4 + 1
        let r = solve_quartic(1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(r.is_empty());
        // (x^2+1)(x^2+4)
        let r = solve_quartic(1.0, 0.0, 5.0, 0.0, 4.0);
        assert!(r.is_empty());
    }

    #[test]
    fn triple_root() {
        // (x-2)^3 (x+1) = x^4 - 5x^3 + 6x^2 + 4x - 8
        let r = solve_quartic(1.0, -5.0, 6.0, 4.0, -8.0);
        // Multiplicities collapse; the cluster around 2 may polish onto one
        // or two nearby values, all within 1e-4 of the true root.
        assert!(r.iter().any(|x| (x - 2.0).abs() < 1e-4), "{r:?}");
        assert!(r.iter().any(|x| (x + 1.0).abs() < 1e-9), "{r:?}");
        for x in &r {
            assert!((x - 2.0).abs() < 1e-4 || (x + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degree_demotion() {
        let r = solve_quartic(0.0, 1.0, -6.0, 11.0, -6.0);
        assert_roots(&r, &[1.0, 2.0, 3.0], 1e-9);
        let r = solve_quartic(0.0, 0.0, 1.0, -3.0, 2.0);
        assert_roots(&r, &[1.0, 2.0], 1e-12);
        let r = solve_quartic(0.0, 0.0, 0.0, 2.0, -4.0);
        assert_roots(&r, &[2.0], 1e-12);
    }

    #[test]
    fn biquadratic() {
        // x^4 - 5x^2 + 4 = (x^2-1)(x^2-4)
        let r = solve_quartic(1.0, 0.0, -5.0, 0.0, 4.0);
        assert_roots(&r, &[-2.0, -1.0, 1.0, 2.0], 1e-9);
    }

    #[test]
    fn cubic_three_real() {
        let r = solve_cubic(2.0, -12.0, 22.0, -12.0);
        assert_roots(&r, &[1.0, 2.0, 3.0], 1e-9);
    }

    #[test]
    fn quadratic_cases() {
        assert_roots(&solve_quadratic(1.0, -3.0, 2.0), &[1.0, 2.0], 1e-12);
        assert!(solve_quadratic(1.0, 0.0, 1.0).is_empty());
        assert_roots(&solve_quadratic(1.0, -2.0, 1.0), &[1.0], 1e-9);
    }
}
