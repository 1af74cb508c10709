//! Small quadrature and root-finding helpers shared by the analytic parts of
//! the crate (coefficient integrals, certificate flux integrals, time bounds).

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Adaptive Gauss–Legendre integration with interval bisection.
///
/// Converges on smooth integrands to roughly `rel_tol` relative accuracy; the
/// recursion depth is capped so pathological integrands return a best effort.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gauss_legendre8(f, a, b);
    adapt(f, a, b, whole, rel_tol, 0)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss_legendre8(f, a, mid);
    let right = gauss_legendre8(f, mid, b);
    let refined = left + right;
    let err = (refined - whole).abs();
    if depth >= 40 || err <= tol * refined.abs().max(1e-300) || err < 1e-300 {
        return refined;
    }
    adapt(f, a, mid, left, tol, depth + 1) + adapt(f, mid, b, right, tol, depth + 1)
}

/// Integrates over consecutive breakpoints, adaptive on each piece.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], rel_tol: f64) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| integrate(f, w[0], w[1], rel_tol))
        .sum()
}

/// Bisection for an increasing function: finds `x` in `[lo, hi]` with
/// `f(x) = target`. The bracket must satisfy `f(lo) <= target <= f(hi)`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, target: f64, rel_tol: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimisation on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `u^e` for `u >= 0` with fast paths for the exponents that show up in
/// practice. Returns 0 at `u = 0` for every positive exponent.
#[inline]
pub fn pow_nonneg(u: f64, e: f64) -> f64 {
    if e == 1.0 {
        u
    } else if e == 2.0 {
        u * u
    } else if e == 3.0 {
        u * u * u
    } else if e == 0.5 {
        u.sqrt()
    } else if e == 1.5 {
        u * u.sqrt()
    } else if u == 0.0 {
        0.0
    } else {
        u.powf(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(&|x: f64| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1e-14);
        assert!((v - (32.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn weak_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate(&|x: f64| if x > 0.0 { x.powf(-0.5) } else { 0.0 }, 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn bisection_finds_root() {
        let x = bisect_increasing(|x| x * x * x, 0.0, 3.0, 8.0, 1e-14);
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_minimum() {
        let x = golden_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 100);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn fast_powers_agree_with_powf() {
        for &u in &[0.0, 0.3, 1.0, 7.5, 1e6] {
            for &e in &[0.5, 1.0, 1.5, 2.0, 3.0, 0.7, 2.4] {
                let a = pow_nonneg(u, e);
                let b = if u == 0.0 { 0.0 } else { f64::powf(u, e) };
                assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
            }
        }
    }
}
