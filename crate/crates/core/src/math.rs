/// `sin(x)/x`, with the removable singularity filled in as 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        libm::sin(x) / x
    }
}

/// Unit triangle: 1 at the origin, falling linearly to 0 at |x| = 1.
pub fn triangle(x: f64) -> f64 {
    let a = x.abs();
    if a >= 1.0 {
        0.0
    } else {
        1.0 - a
    }
}

/// Fraction of the total mass of `sinc²` lying in `[-x_max, x_max]`.
///
/// Composite Simpson on `[0, x_max]` with about 32 panels per half period;
/// the full-line integral is `π`.
pub(crate) fn sinc_squared_coverage(x_max: f64) -> f64 {
    if x_max <= 0.0 {
        return 0.0;
    }
    let panels = {
        let n = libm::ceil(x_max / core::f64::consts::PI * 64.0) as usize;
        (n.max(64) + 1) & !1
    };
    let h = x_max / panels as f64;
    let f = |x: f64| {
        let s = sinc(x);
        s * s
    };
    let mut acc = f(0.0) + f(x_max);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    let half = acc * h / 3.0;
    (2.0 * half / core::f64::consts::PI).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn sinc_limits() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert!((sinc(1e-9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_shape() {
        assert_eq!(triangle(0.0), 1.0);
        assert_eq!(triangle(0.5), 0.5);
        assert_eq!(triangle(-0.5), 0.5);
        assert_eq!(triangle(1.0), 0.0);
        assert_eq!(triangle(-3.0), 0.0);
    }

    #[test]
    fn coverage_tail_matches_asymptote() {
        // ∫_X^∞ sinc² ≈ 1/(2X) for large X, so the uncovered fraction is ≈ 1/(πX).
        let x = 120.0 * PI;
        let missing = 1.0 - sinc_squared_coverage(x);
        assert!((missing - 1.0 / (PI * x)).abs() < 2e-6, "{missing}");
        assert!(sinc_squared_coverage(0.0) == 0.0);
    }
}
