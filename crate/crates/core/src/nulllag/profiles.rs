/// The standard bump `exp(1 - 1/(1 - s²))` on `(-1, 1)`, zero elsewhere.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Derivative of [`bump`].
pub fn bump_derivative(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - s * s;
        -2.0 * s / (d * d) * bump(s)
    }
}

/// `max |bump'|`, located by golden-section search on `(0, 1)` where
/// `|bump'|` is unimodal.
pub fn bump_derivative_max() -> f64 {
    let g = |s: f64| -bump_derivative(s);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let r = (5.0f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    g((a + b) / 2.0)
}

/// C² clamp `ℝ → [-3, 3]`: the identity on `[-2, 2]`, constant `±3` beyond
/// `±4`, monotone in between.
pub fn clamp(x: f64) -> f64 {
    let s = x.abs();
    let y = if s <= 2.0 {
        s
    } else if s >= 4.0 {
        3.0
    } else {
        let tau = (s - 2.0) / 2.0;
        2.0 + (s - 2.0) - 2.0 * (tau.powi(3) - tau.powi(4) / 2.0)
    };
    y.copysign(x)
}

/// Derivative of [`clamp`].
pub fn clamp_derivative(x: f64) -> f64 {
    let s = x.abs();
    if s <= 2.0 {
        1.0
    } else if s >= 4.0 {
        0.0
    } else {
        let tau = (s - 2.0) / 2.0;
        (1.0 - tau).powi(2) * (1.0 + 2.0 * tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.5), 0.0);
        for i in 1..100 {
            let s = -0.99 + 1.98 * i as f64 / 100.0;
            let fd = (bump(s + 1e-6) - bump(s - 1e-6)) / 2e-6;
            assert!((fd - bump_derivative(s)).abs() < 1e-6 * (1.0 + fd.abs()));
        }
        let m = bump_derivative_max();
        for i in 0..10000 {
            assert!(bump_derivative(i as f64 / 10000.0).abs() <= m * (1.0 + 1e-12));
        }
    }

    #[test]
    fn clamp_shape() {
        assert_eq!(clamp(1.5), 1.5);
        assert_eq!(clamp(-2.0), -2.0);
        assert_eq!(clamp(4.0), 3.0);
        assert_eq!(clamp(-10.0), -3.0);
        let mut prev = clamp(-5.0);
        for i in 1..=1000 {
            let x = -5.0 + 10.0 * i as f64 / 1000.0;
            let y = clamp(x);
            assert!(y >= prev && y.abs() <= 3.0);
            prev = y;
            let fd = (clamp(x + 1e-6) - clamp(x - 1e-6)) / 2e-6;
            assert!((fd - clamp_derivative(x)).abs() < 1e-6);
        }
        // second derivative continuous at the joints
        for x0 in [2.0, 4.0] {
            let h = 1e-4;
            let left = (clamp_derivative(x0) - clamp_derivative(x0 - h)) / h;
            let right = (clamp_derivative(x0 + h) - clamp_derivative(x0)) / h;
            assert!(left.abs() < 1e-3 && right.abs() < 1e-3);
        }
    }
}
