//! Straight stripes of unit width in the plane, jump length `r`.

use std::f64::consts::PI;

/// 1 if a jump at angle `phi` to the stripes from offset `y` lands on the
/// other colour, else 0. For `r ≤ 2` this is `1 − r sinφ ≤ y < 2 − r sinφ`.
pub fn planar_stripe_angle_success(r: f64, phi: f64, y: f64) -> f64 {
    let landing = (y + r * phi.sin()).floor() as i64;
    if landing.rem_euclid(2) == 1 {
        1.0
    } else {
        0.0
    }
}

/// Offset-averaged success at angle `phi`: a triangle wave of period 2 in
/// the displacement `r sinφ`.
pub fn planar_stripe_h(r: f64, phi: f64) -> f64 {
    let d = (r * phi.sin()).rem_euclid(2.0);
    if d <= 1.0 {
        d
    } else {
        2.0 - d
    }
}

/// Splits `[0, π/2]` where `r sinφ` crosses an integer and returns, per
/// piece, `(a, b, sign, offset)` with `h = sign·r sinφ + offset` on `[a, b]`.
fn pieces(r: f64) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    let mut a = 0.0;
    let mut j = 0usize;
    loop {
        let b = if ((j + 1) as f64) < r {
            ((j + 1) as f64 / r).asin()
        } else {
            PI / 2.0
        };
        let (sign, offset) = if j % 2 == 0 {
            (1.0, -(j as f64))
        } else {
            (-1.0, (j + 1) as f64)
        };
        out.push((a, b, sign, offset));
        if b >= PI / 2.0 {
            return out;
        }
        a = b;
        j += 1;
    }
}

/// Angle-averaged success `u(r) = (2/π)∫₀^{π/2} h(r,φ) dφ`. For `r ≤ 1` this
/// is `2r/π`, for `1 < r ≤ 2` it is
/// `(2/π)(r − 2√(r²−1) + π − 2 arcsin(1/r))`.
pub fn planar_stripe_success(r: f64) -> f64 {
    if r <= 1.0 {
        return 2.0 * r / PI;
    }
    if r <= 2.0 {
        return 2.0 / PI * (r - 2.0 * (r * r - 1.0).sqrt() + PI - 2.0 * (1.0 / r).asin());
    }
    let total: f64 = pieces(r)
        .iter()
        .map(|&(a, b, sign, offset)| sign * r * (a.cos() - b.cos()) + offset * (b - a))
        .sum();
    2.0 / PI * total
}

/// `du/dr`; for `1 < r ≤ 2` equal to `(2/π)(1 − 2√(1 − 1/r²))`.
pub fn planar_stripe_derivative(r: f64) -> f64 {
    if r <= 1.0 {
        return 2.0 / PI;
    }
    if r <= 2.0 {
        return 2.0 / PI * (1.0 - 2.0 * (1.0 - 1.0 / (r * r)).sqrt());
    }
    let total: f64 = pieces(r)
        .iter()
        .map(|&(a, b, sign, _)| sign * (a.cos() - b.cos()))
        .sum();
    2.0 / PI * total
}

/// Maximiser of `u` on `[1, 2]` by golden-section search, with its value.
pub fn planar_stripe_optimum() -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1.0, 2.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (planar_stripe_success(c), planar_stripe_success(d));
    while b - a > 1e-13 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = planar_stripe_success(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = planar_stripe_success(d);
        }
    }
    let r = 0.5 * (a + b);
    (r, planar_stripe_success(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_cases() {
        for y in [0.0, 0.3, 0.99] {
            assert_eq!(planar_stripe_angle_success(1.3, 0.0, y), 0.0);
            let r: f64 = 1.7;
            assert_eq!(planar_stripe_angle_success(r, (1.0 / r).asin(), y), 1.0);
        }
        let r = 2.0 / 3f64.sqrt();
        assert!((planar_stripe_h(r, PI / 2.0) - (2.0 - r)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_values() {
        let r = 2.0 / 3f64.sqrt();
        assert!((planar_stripe_success(r) - 2.0 / 3.0).abs() < 1e-12);
        assert!(planar_stripe_derivative(r).abs() < 1e-12);
        let above = 2.0 / PI * (1.0 - 2.0 * 0.0f64.sqrt() + PI - 2.0 * 1f64.asin());
        assert!((above - 2.0 / PI).abs() < 1e-14);
        assert!((planar_stripe_success(1.0) - 2.0 / PI).abs() < 1e-14);
        assert!((planar_stripe_success(1e6) - 0.5).abs() < 1e-3);
        for r in [1.5, 1.9, 2.7, 5.3] {
            let fd = (planar_stripe_success(r + 1e-6) - planar_stripe_success(r - 1e-6)) / 2e-6;
            assert!((fd - planar_stripe_derivative(r)).abs() < 1e-6, "r={r}");
        }
        let below = planar_stripe_success(2.0);
        let general: f64 = pieces(2.0)
            .iter()
            .map(|&(a, b, s, o)| s * 2.0 * (a.cos() - b.cos()) + o * (b - a))
            .sum();
        assert!((below - 2.0 / PI * general).abs() < 1e-14);
        let (ro, uo) = planar_stripe_optimum();
        assert!((ro - r).abs() < 1e-9);
        assert!((uo - 2.0 / 3.0).abs() < 1e-12);
    }
}
