//! One-sided β-stable law with Laplace transform exp(−λ^β), 0 < β < 1.
//!
//! Density and distribution function are evaluated through the Kanter
//! (Zolotarev) representation over the angle φ ∈ (0, π):
//!
//!   A(φ) = [sin βφ / sin φ]^{1/(1−β)} · sin((1−β)φ) / sin βφ,
//!   g(φ) = A(φ) · x^{−β/(1−β)},
//!   w(x) = β/((1−β) π x) ∫ g e^{−g} dφ,      F(x) = (1/π) ∫ e^{−g} dφ.
//!
//! A is increasing from A(0) = (1−β) β^{β/(1−β)} to +∞, so the integrands
//! are unimodal in φ; the quadrature is split at the level sets of g.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::gamma::{gamma, ln_gamma};
use super::mittag_leffler::mittag_leffler;
use crate::error::{Error, Result};
use crate::quad::{integrate_pieces, integrate_to_infinity, Tolerance};

/// Stability index of the standard one-sided stable law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    beta: f64,
}

impl StableParams {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta < 1.0 {
            Ok(StableParams { beta })
        } else {
            Err(Error::domain(format!("stability index must lie in (0, 1), got {beta}")))
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// ln A(φ) for φ ∈ [0, π).
pub fn kanter_ln_a(beta: f64, phi: f64) -> f64 {
    if phi < 1e-7 {
        // A(φ) = A(0)(1 + O(φ²))
        return (beta / (1.0 - beta)) * beta.ln() + (1.0 - beta).ln();
    }
    let sb = (beta * phi).sin().ln();
    let s1 = phi.sin().ln();
    let sc = ((1.0 - beta) * phi).sin().ln();
    (sb - s1) / (1.0 - beta) + sc - sb
}

/// The stable variate (A(φ)/E)^{(1−β)/β} for an angle φ ∈ (0, π) and a
/// standard exponential E.
pub fn kanter_variate(beta: f64, phi: f64, e: f64) -> f64 {
    ((kanter_ln_a(beta, phi) - e.ln()) * ((1.0 - beta) / beta)).exp()
}

/// ln(sin u / u), accurate for small u.
fn ln_sinc(u: f64) -> f64 {
    if u < 0.3 {
        let u2 = u * u;
        let s = -u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0 * (1.0 - u2 / 110.0))));
        s.ln_1p()
    } else {
        (u.sin() / u).ln()
    }
}

/// ln A(φ) − ln A(0), with full relative accuracy as φ → 0.
fn kanter_ln_a_excess(beta: f64, phi: f64) -> f64 {
    let lb = ln_sinc(beta * phi);
    (lb - ln_sinc(phi)) / (1.0 - beta) + ln_sinc((1.0 - beta) * phi) - lb
}

/// ln g(φ) written as ln g(0) + d(φ), d(φ) = ln A(φ) − ln A(0) ≥ 0.
struct Angular {
    beta: f64,
    ln_g0: f64,
}

impl Angular {
    fn new(beta: f64, x: f64) -> Self {
        Angular {
            beta,
            ln_g0: kanter_ln_a(beta, 0.0) - (beta / (1.0 - beta)) * x.ln(),
        }
    }

    fn excess(&self, phi: f64) -> f64 {
        kanter_ln_a_excess(self.beta, phi)
    }

    /// φ in (lo, π) where d(φ) = level.
    fn solve(&self, level: f64, lo: f64) -> f64 {
        let (mut a, mut b) = (lo, PI);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.excess(m) < level {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Quadrature edges following the level sets of g, and whether g(0) ≥ 1
    /// (the integrands then peak at φ = 0 and are scaled by e^{g(0)}).
    fn edges(&self) -> (Vec<f64>, bool) {
        let g0 = self.ln_g0.exp();
        let peak_at_zero = g0 >= 1.0;
        let mut levels = Vec::new();
        if peak_at_zero {
            for d in [0.25, 1.0, 3.0, 8.0, 20.0, 50.0] {
                levels.push((d / g0).ln_1p());
            }
        } else {
            for l in [-40.0, -20.0, -12.0, -6.0, -3.0, -1.0, 0.0] {
                if l > self.ln_g0 {
                    levels.push(l - self.ln_g0);
                }
            }
            for g in [2.0, 5.0, 12.0, 25.0, 51.0] {
                levels.push(f64::ln(g) - self.ln_g0);
            }
        }
        let mut edges = vec![0.0];
        let mut lo = 0.0;
        for level in levels {
            let phi = self.solve(level, lo);
            if phi > lo {
                edges.push(phi);
                lo = phi;
            }
        }
        (edges, peak_at_zero)
    }

    /// (ln g, g − shift) where shift = g(0) if the peak is at zero, else 0.
    fn terms(&self, phi: f64, peak_at_zero: bool) -> (f64, f64) {
        let d = self.excess(phi);
        let lg = self.ln_g0 + d;
        if peak_at_zero {
            (lg, self.ln_g0.exp() * d.exp_m1())
        } else {
            (lg, lg.exp())
        }
    }

    fn shift(&self, peak_at_zero: bool) -> f64 {
        if peak_at_zero {
            self.ln_g0.exp()
        } else {
            0.0
        }
    }
}

/// x^β above which the density comes from the large-x series.
pub(crate) const TAIL_SWITCH: f64 = 1e4;

fn tight() -> Tolerance {
    Tolerance::new(1e-300, 1e-13).with_max_intervals(1000)
}

/// ln w_β(x) by direct evaluation of the angular integral.
pub fn stable_ln_density(p: StableParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let beta = p.beta;
    // deep left tail: ln w ≈ −(1−β) β^{β/(1−β)} x^{−β/(1−β)} is beyond any
    // representable density and the angular integral overflows
    let q = beta / (1.0 - beta);
    if (1.0 - beta) * beta.powf(q) * x.powf(-q) > 1e100 {
        return Ok(f64::NEG_INFINITY);
    }
    // far tail: the angular integrand degenerates, the series converges fast
    if x.powf(beta) >= TAIL_SWITCH {
        if let Some(l) = ln_tail_series(beta, x.ln(), 1.0) {
            return Ok(l - x.ln());
        }
    }
    let ang = Angular::new(beta, x);
    let (edges, peak) = ang.edges();
    let shift = ang.shift(peak);
    let integrand = |phi: f64| {
        let (lg, rest) = ang.terms(phi, peak);
        (lg - rest).exp()
    };
    let (est, ok) = integrate_pieces(integrand, &edges, tight());
    let prefactor = (beta / ((1.0 - beta) * PI * x)).ln() - shift;
    if !ok || !(est.value > 0.0) {
        return Err(Error::Quadrature {
            context: format!("stable density, beta = {beta}, x = {x:e}"),
            value: (prefactor + est.value.ln()).exp(),
            abs_err: est.abs_err,
            requested: 1e-13 * est.value.abs(),
        });
    }
    Ok(prefactor + est.value.ln())
}

/// w_β(x), or an error when the angular quadrature fails (extreme x).
pub fn try_stable_density(p: StableParams, x: f64) -> Result<f64> {
    stable_ln_density(p, x).map(f64::exp)
}

/// w_β(x;1,1), the density with Laplace transform exp(−λ^β); 0 for x ≤ 0.
/// Quadrature failures are logged and the best estimate returned; use
/// [`try_stable_density`] to receive them as errors.
pub fn stable_density(p: StableParams, x: f64) -> f64 {
    match try_stable_density(p, x) {
        Ok(v) => v,
        Err(Error::Quadrature { value, .. }) => {
            log::warn!("stable density at x = {x:e} (beta {}) is inaccurate", p.beta);
            value
        }
        Err(_) => f64::NAN,
    }
}

/// P[W ≤ x] with the angular integral; errors on quadrature failure.
pub fn try_stable_cdf(p: StableParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x.powf(p.beta) >= TAIL_SWITCH {
        if let Some(v) = stable_sf_tail_series(p.beta, x) {
            return Ok((1.0 - v).clamp(0.0, 1.0));
        }
    }
    let ang = Angular::new(p.beta, x);
    let (edges, peak) = ang.edges();
    let shift = ang.shift(peak);
    let integrand = |phi: f64| (-ang.terms(phi, peak).1).exp();
    let (est, ok) = integrate_pieces(integrand, &edges, tight());
    let value = ((est.value / PI).ln() - shift).exp();
    if !ok {
        return Err(Error::Quadrature {
            context: format!("stable cdf, beta = {}, x = {x:e}", p.beta),
            value,
            abs_err: est.abs_err,
            requested: 1e-13 * est.value,
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// P[W > x], accurate in the upper tail.
pub fn try_stable_sf(p: StableParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x.powf(p.beta) >= TAIL_SWITCH {
        if let Some(v) = stable_sf_tail_series(p.beta, x) {
            return Ok(v.clamp(0.0, 1.0));
        }
    }
    let ang = Angular::new(p.beta, x);
    let (edges, peak) = ang.edges();
    if peak {
        return try_stable_cdf(p, x).map(|f| 1.0 - f);
    }
    let end = *edges.last().expect("edges are non-empty");
    let integrand = |phi: f64| -(-ang.terms(phi, false).1).exp_m1();
    let (est, ok) = integrate_pieces(integrand, &edges, tight());
    let value = (est.value + (PI - end)) / PI;
    if !ok {
        return Err(Error::Quadrature {
            context: format!("stable survival function, beta = {}, x = {x:e}", p.beta),
            value,
            abs_err: est.abs_err,
            requested: 1e-13 * est.value,
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

pub fn stable_cdf(p: StableParams, x: f64) -> f64 {
    try_stable_cdf(p, x).unwrap_or_else(|e| match e {
        Error::Quadrature { value, .. } => {
            log::warn!("stable cdf at x = {x:e} (beta {}) is inaccurate", p.beta);
            value
        }
        _ => f64::NAN,
    })
}

pub fn stable_sf(p: StableParams, x: f64) -> f64 {
    try_stable_sf(p, x).unwrap_or_else(|e| match e {
        Error::Quadrature { value, .. } => {
            log::warn!("stable survival function at x = {x:e} (beta {}) is inaccurate", p.beta);
            value
        }
        _ => f64::NAN,
    })
}

/// ln of Σ_k (−1)^{k+1} c_k sin(kπβ) x^{−kβ} / π with c_k = Γ(kβ + shift)/k!,
/// summed relative to the first term so that nothing underflows.
pub(crate) fn ln_tail_series(beta: f64, ln_x: f64, shift: f64) -> Option<f64> {
    let ln_term = |k: f64| ln_gamma(k * beta + shift) - ln_gamma(k + 1.0) - k * beta * ln_x;
    let lead = ln_term(1.0);
    let mut sum = 0.0;
    for k in 1..=60 {
        let kf = k as f64;
        let rel = (ln_term(kf) - lead).exp();
        let t = rel * (kf * PI * beta).sin();
        sum += if k % 2 == 1 { t } else { -t };
        if rel < 1e-17 * sum.abs() {
            return if sum > 0.0 { Some(lead + sum.ln() - PI.ln()) } else { None };
        }
    }
    None
}

/// Convergent large-x expansion
/// w(x) = (1/π) Σ_k (−1)^{k+1} Γ(kβ+1)/k! sin(kπβ) x^{−kβ−1}.
/// Returns None if 60 terms do not settle below 1e-16 relative.
pub fn stable_density_tail_series(beta: f64, x: f64) -> Option<f64> {
    ln_tail_series(beta, x.ln(), 1.0).map(|l| (l - x.ln()).exp())
}

/// Termwise integral of the density series,
/// P[W > x] = (1/π) Σ_k (−1)^{k+1} Γ(kβ)/k! sin(kπβ) x^{−kβ}.
pub fn stable_sf_tail_series(beta: f64, x: f64) -> Option<f64> {
    ln_tail_series(beta, x.ln(), 0.0).map(f64::exp)
}

/// β·E_β(−u) − ∫_0^∞ e^{−uy} y^{−1−1/β} w_β(y^{−1/β}) dy.
pub fn check_ml_stable_identity(beta: f64, u: f64) -> Result<f64> {
    let p = StableParams::new(beta)?;
    if !(u >= 0.0) {
        return Err(Error::domain(format!("identity check needs u >= 0, got {u}")));
    }
    let lhs = beta * mittag_leffler(beta, -u)?;
    let mut failure = None;
    let mut integrand = |y: f64| {
        if y <= 0.0 {
            return 0.0;
        }
        let x = y.powf(-1.0 / beta);
        match stable_ln_density(p, x) {
            Ok(lw) => (-u * y - (1.0 + 1.0 / beta) * y.ln() + lw).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let split = 1.0 / (1.0 + u);
    let tol = Tolerance::new(1e-13, 1e-11);
    let (near, ok) = integrate_pieces(&mut integrand, &[0.0, 0.5 * split, split, 1.0], tol);
    if !ok {
        return Err(Error::Quadrature {
            context: format!("identity integral on (0, 1], beta = {beta}, u = {u}"),
            value: near.value,
            abs_err: near.abs_err,
            requested: 1e-11 * near.value.abs(),
        });
    }
    let far = integrate_to_infinity(&mut integrand, 1.0, 1.0, tol)
        .map_err(|e| e.within(format!("identity integral on [1, inf), beta = {beta}, u = {u}")))?;
    if let Some(e) = failure {
        return Err(e.within("identity integrand"));
    }
    Ok(lhs - (near.value + far.value))
}

// ---------------------------------------------------------------------------
// Interpolated law for the nested quadrature engines.

const CHEB_NODES: usize = 25;
const MAX_DEPTH: usize = 24;

#[derive(Debug, Clone)]
struct ChebPiece {
    lo: f64,
    hi: f64,
    coef: Vec<f64>,
}

impl ChebPiece {
    fn fit(lo: f64, hi: f64, values: &[f64]) -> Self {
        let n = values.len();
        let mut coef = vec![0.0; n];
        for (j, c) in coef.iter_mut().enumerate() {
            let mut s = 0.0;
            for (k, v) in values.iter().enumerate() {
                s += v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos();
            }
            *c = 2.0 * s / n as f64;
        }
        coef[0] *= 0.5;
        ChebPiece { lo, hi, coef }
    }

    fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let t = (PI * (k as f64 + 0.5) / n as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * t
            })
            .collect()
    }

    fn eval(&self, v: f64) -> f64 {
        let t = (2.0 * v - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coef.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coef[0]
    }
}

/// Piecewise-Chebyshev interpolant of ln w_β in v = ln x, with the
/// convergent series beyond the upper end and zero below the lower end.
/// Built once per β and shared; read-only after construction.
#[derive(Debug)]
pub struct StableLaw {
    beta: f64,
    v_lo: f64,
    v_hi: f64,
    pieces: Vec<ChebPiece>,
}

impl StableLaw {
    fn build(beta: f64) -> Result<Self> {
        let p = StableParams::new(beta)?;
        let exact = |v: f64| stable_ln_density(p, v.exp());
        let v_hi = (10f64).ln() / beta;
        let mut v_lo = 0.0f64.min(v_hi - 1.0);
        while exact(v_lo)? > -760.0 {
            v_lo -= 1.0;
        }
        let mut pieces = Vec::new();
        let n0 = ((v_hi - v_lo).ceil() as usize).max(1);
        let width = (v_hi - v_lo) / n0 as f64;
        // a stack: the leftmost interval is refined first, so pieces come out sorted
        let mut queue: Vec<(f64, f64, usize)> = (0..n0)
            .rev()
            .map(|i| (v_lo + i as f64 * width, v_lo + (i + 1) as f64 * width, 0))
            .collect();
        while let Some((lo, hi, depth)) = queue.pop() {
            let nodes = ChebPiece::nodes(lo, hi, CHEB_NODES);
            let values = nodes.iter().map(|&v| exact(v)).collect::<Result<Vec<_>>>()?;
            let piece = ChebPiece::fit(lo, hi, &values);
            let mut worst: f64 = 0.0;
            for k in 0..8 {
                let v = lo + (hi - lo) * (k as f64 + 0.37) / 8.0;
                let e = exact(v)?;
                worst = worst.max((piece.eval(v) - e).abs() / (1.0 + 0.1 * e.abs()));
            }
            if worst > 2e-12 && depth < MAX_DEPTH {
                let mid = 0.5 * (lo + hi);
                queue.push((mid, hi, depth + 1));
                queue.push((lo, mid, depth + 1));
            } else {
                pieces.push(piece);
            }
        }
        Ok(StableLaw {
            beta,
            v_lo,
            v_hi,
            pieces,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn pieces(&self) -> usize {
        self.pieces.len()
    }

    /// ln w_β(x).
    pub fn ln_density(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        let v = x.ln();
        if v < self.v_lo {
            return f64::NEG_INFINITY;
        }
        if v >= self.v_hi {
            return match ln_tail_series(self.beta, v, 1.0) {
                Some(l) => l - v,
                _ => {
                    // leading tail term
                    (self.beta / gamma(1.0 - self.beta)).ln() - (1.0 + self.beta) * v
                }
            };
        }
        let i = self.pieces.partition_point(|p| p.hi <= v).min(self.pieces.len() - 1);
        self.pieces[i].eval(v)
    }

    /// w_β(x).
    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    /// v-range [ln x_lo, ln x_hi] of the interpolated part.
    pub fn log_range(&self) -> (f64, f64) {
        (self.v_lo, self.v_hi)
    }
}

/// Shared interpolated law for β; built on first use.
pub fn stable_law(beta: f64) -> Result<Arc<StableLaw>> {
    static TABLES: OnceLock<Mutex<HashMap<u64, Arc<StableLaw>>>> = OnceLock::new();
    StableParams::new(beta)?;
    let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = tables.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(law) = guard.get(&beta.to_bits()) {
        return Ok(law.clone());
    }
    let law = Arc::new(StableLaw::build(beta)?);
    guard.insert(beta.to_bits(), law.clone());
    Ok(law)
}
