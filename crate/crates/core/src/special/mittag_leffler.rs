//! Real-argument Mittag-Leffler functions E_α(z) and E_{α,β}(z).
//!
//! Regimes for negative argument z = −x with 0 < α < 1:
//! - x ≤ [`SERIES_LIMIT`]: power series;
//! - x > [`ASYMPTOTIC_THRESHOLD`]: algebraic asymptotic expansion with
//!   [`ASYMPTOTIC_TERMS`] terms, used whenever its first omitted term is
//!   below 1e-13 relative;
//! - otherwise: the real integral obtained by collapsing the Hankel contour
//!   onto the negative axis,
//!   E_{α,β}(−x) = (1/π) ∫_0^∞ e^{−r} r^{α−β} (r^α sin πβ − x sin π(α−β))
//!                 / (r^{2α} + 2x r^α cos πα + x²) dr,
//!   valid for β < 1 + α; larger β is reduced by
//!   E_{α,β}(z) = (E_{α,β−α}(z) − 1/Γ(β−α)) / z.
//!
//! The series with negative argument cancels catastrophically once x grows,
//! which is why it is confined to x ≤ 1.

use std::f64::consts::PI;

use super::gamma::{ln_gamma, rgamma};
use crate::error::{Error, Result};
use crate::quad::{integrate_pieces, Tolerance};

pub const SERIES_LIMIT: f64 = 1.0;
pub const ASYMPTOTIC_THRESHOLD: f64 = 50.0;
pub const ASYMPTOTIC_TERMS: usize = 8;

const SERIES_MAX_TERMS: usize = 500_000;

/// E_α(z) = Σ z^j / Γ(jα + 1).
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler2(alpha, 1.0, z)
}

/// E_{α,β}(z) = Σ z^j / Γ(jα + β).
pub fn mittag_leffler2(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("Mittag-Leffler order must be positive, got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!(
            "Mittag-Leffler second parameter must be positive, got {beta}"
        )));
    }
    if !z.is_finite() {
        return Err(Error::domain(format!("Mittag-Leffler argument must be finite, got {z}")));
    }
    if z == 0.0 {
        return Ok(rgamma(beta));
    }
    if alpha == 1.0 && beta == 1.0 {
        return checked_exp(z);
    }
    if alpha == 1.0 && beta == 2.0 {
        return Ok(z.exp_m1() / z).and_then(finite_or_overflow);
    }
    if alpha == 2.0 && z < 0.0 {
        let s = (-z).sqrt();
        if beta == 1.0 {
            return Ok(s.cos());
        }
        if beta == 2.0 {
            return Ok(s.sin() / s);
        }
    }
    if z > 0.0 {
        return series(alpha, beta, z).map(|(v, _)| v);
    }
    let x = -z;
    if alpha >= 1.0 || x <= SERIES_LIMIT {
        return series_checked(alpha, beta, z);
    }
    if x > ASYMPTOTIC_THRESHOLD {
        let (value, tail) = asymptotic_negative(alpha, beta, x, ASYMPTOTIC_TERMS);
        if tail <= 1e-13 * value.abs() {
            return Ok(value);
        }
    }
    integral_negative(alpha, beta, x)
}

fn checked_exp(z: f64) -> Result<f64> {
    finite_or_overflow(z.exp())
}

fn finite_or_overflow(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("Mittag-Leffler value exceeds the f64 range".into()))
    }
}

/// Power series. Returns the sum and Σ|terms| (the cancellation scale).
pub fn series(alpha: f64, beta: f64, z: f64) -> Result<(f64, f64)> {
    let ln_x = z.abs().ln();
    let negative = z < 0.0;
    let mut sum = rgamma(beta);
    let mut abs_sum = sum.abs();
    let mut prev = f64::INFINITY;
    for j in 1..SERIES_MAX_TERMS {
        let arg = j as f64 * alpha + beta;
        let ln_term = j as f64 * ln_x - ln_gamma(arg);
        if ln_term > 709.0 {
            return Err(Error::Overflow(format!(
                "Mittag-Leffler series term overflows at z = {z}"
            )));
        }
        let mag = ln_term.exp();
        let term = if negative && j % 2 == 1 { -mag } else { mag };
        sum += term;
        abs_sum += mag;
        // terms decrease monotonically once past the peak
        if mag <= prev && mag <= 1e-17 * abs_sum.max(f64::MIN_POSITIVE) {
            return finite_or_overflow(sum).map(|s| (s, abs_sum));
        }
        prev = mag;
    }
    Err(Error::PrecisionLoss(format!(
        "Mittag-Leffler series did not settle within {SERIES_MAX_TERMS} terms at z = {z}"
    )))
}

fn series_checked(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    let (sum, abs_sum) = series(alpha, beta, z)?;
    // rounding error of the sum is about eps·Σ|terms|
    if 4.0 * f64::EPSILON * abs_sum > 1e-11 * sum.abs() && 4.0 * f64::EPSILON * abs_sum > 1e-14 {
        return Err(Error::PrecisionLoss(format!(
            "series for E_{{{alpha},{beta}}}({z}) cancels: Σ|terms| = {abs_sum:e}, sum = {sum:e}"
        )));
    }
    Ok(sum)
}

/// Asymptotic expansion of E_{α,β}(−x) for 0 < α < 1 and large x.
/// Returns the value and the magnitude of the first omitted term.
pub fn asymptotic_negative(alpha: f64, beta: f64, x: f64, terms: usize) -> (f64, f64) {
    let mut sum = 0.0;
    let mut xk = 1.0;
    for k in 1..=terms {
        xk /= x;
        let term = xk * rgamma(beta - alpha * k as f64);
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let tail = (xk / x * rgamma(beta - alpha * (terms + 1) as f64)).abs();
    (sum, tail)
}

/// Contour-integral evaluation of E_{α,β}(−x) for 0 < α < 1, any x > 0.
pub fn integral_negative(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "integral representation needs 0 < α < 1, got {alpha}"
        )));
    }
    if beta >= 1.0 + alpha {
        let lower = integral_negative(alpha, beta - alpha, x)?;
        return Ok((rgamma(beta - alpha) - lower) / x);
    }
    // r = u^p absorbs the r^{α−β} endpoint factor exactly
    let p = 1.0 / (1.0 + alpha - beta);
    let (s_b, s_ab) = ((PI * beta).sin(), (PI * (alpha - beta)).sin());
    let cos_a = (PI * alpha).cos();
    let integrand = |u: f64| {
        let r = u.powf(p);
        let ra = r.powf(alpha);
        let den = ra * ra + 2.0 * x * ra * cos_a + x * x;
        let val = (-r).exp() * (ra * s_b - x * s_ab) / den;
        if val.is_finite() {
            val
        } else {
            0.0
        }
    };
    let r_max: f64 = 800.0;
    let mut r_edges = vec![0.0, 1.0, 5.0, 20.0, 60.0, 200.0, r_max];
    if cos_a < 0.0 {
        let r_peak = (x * -cos_a).powf(1.0 / alpha);
        if r_peak < r_max {
            r_edges.push(r_peak);
        }
    }
    r_edges.sort_by(f64::total_cmp);
    r_edges.dedup();
    let u_edges: Vec<f64> = r_edges.iter().map(|r| r.powf(1.0 / p)).collect();
    let tol = Tolerance::new(1e-15, 1e-12).with_max_intervals(4000);
    let (est, ok) = integrate_pieces(integrand, &u_edges, tol);
    let value = p * est.value / PI;
    if !ok {
        return Err(Error::Quadrature {
            context: format!("Mittag-Leffler integral for E_{{{alpha},{beta}}}(-{x})"),
            value,
            abs_err: p * est.abs_err / PI,
            requested: (1e-12 * value.abs()).max(1e-15),
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma::gamma;

    fn erfc_scaled_half(x: f64) -> f64 {
        // E_{1/2}(−x) = e^{x²} erfc(x), by continued fraction for large x and
        // the series of erf for small x
        if x < 3.0 {
            let mut term = x;
            let mut sum = x;
            let mut n = 0.0;
            loop {
                n += 1.0;
                term *= -x * x / n;
                let add = term / (2.0 * n + 1.0);
                sum += add;
                if add.abs() < 1e-18 {
                    break;
                }
            }
            let erf = 2.0 / PI.sqrt() * sum;
            (x * x).exp() * (1.0 - erf)
        } else {
            let mut f = 0.0;
            for k in (1..200).rev() {
                f = (k as f64 / 2.0) / (x + f);
            }
            1.0 / (PI.sqrt() * (x + f))
        }
    }

    #[test]
    fn trivial_cases() {
        assert!((mittag_leffler(1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(mittag_leffler(0.5, 0.0).unwrap(), 1.0);
        assert!((mittag_leffler2(1.0, 2.0, 1.0).unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert!((mittag_leffler2(0.5, 0.5, 0.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn half_order_against_erfc() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 49.0, 51.0, 200.0] {
            let got = mittag_leffler(0.5, -x).unwrap();
            let want = erfc_scaled_half(x);
            assert!(((got - want) / want).abs() < 1e-10, "x = {x}: {got} vs {want}");
        }
    }

    #[test]
    fn exponential_range() {
        for i in -20..=20 {
            let z = i as f64 * 0.5;
            let v = mittag_leffler(1.0, z).unwrap();
            assert!(((v - z.exp()) / z.exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn cosine_case() {
        let v = mittag_leffler(2.0, -4.0).unwrap();
        assert!((v - 2.0f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn series_meets_integral_at_switch() {
        for &alpha in &[0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
            for &beta in &[0.5, 1.0, alpha, 1.4] {
                let (s, _) = series(alpha, beta, -SERIES_LIMIT).unwrap();
                let i = integral_negative(alpha, beta, SERIES_LIMIT).unwrap();
                assert!((s - i).abs() < 1e-12, "α={alpha} β={beta}: {s} vs {i}");
            }
        }
    }

    #[test]
    fn integral_meets_asymptotic_at_switch() {
        for &alpha in &[0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
            let (a, _) = asymptotic_negative(alpha, 1.0, ASYMPTOTIC_THRESHOLD, ASYMPTOTIC_TERMS);
            let i = integral_negative(alpha, 1.0, ASYMPTOTIC_THRESHOLD).unwrap();
            assert!((a - i).abs() < 1e-8 * i.abs(), "α={alpha}: {a} vs {i}");
            // E_{α,α} decays like x^{-2}, so the same truncation is worth less
            let (a, _) = asymptotic_negative(alpha, alpha, ASYMPTOTIC_THRESHOLD, ASYMPTOTIC_TERMS);
            let i = integral_negative(alpha, alpha, ASYMPTOTIC_THRESHOLD).unwrap();
            assert!((a - i).abs() < 1e-7 * i.abs(), "α=β={alpha}: {a} vs {i}");
        }
    }

    #[test]
    fn recursion_for_large_second_parameter() {
        // E_{α,β+α}(z) z = E_{α,β}(z) − 1/Γ(β) holds in every regime
        for &x in &[0.5, 3.0, 20.0, 80.0] {
            let lhs = mittag_leffler2(0.6, 1.7, -x).unwrap() * -x;
            let rhs = mittag_leffler2(0.6, 1.1, -x).unwrap() - 1.0 / gamma(1.1);
            assert!((lhs - rhs).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(mittag_leffler(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(mittag_leffler2(0.5, -1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(mittag_leffler(0.5, 800.0), Err(Error::Overflow(_))));
        assert!(matches!(mittag_leffler2(1.5, 1.3, -60.0), Err(Error::PrecisionLoss(_))));
    }
}
