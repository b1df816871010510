//! Jump kernels ν(t, r) of power-law type
//!
//!   ν(t, r) = Σ_j w_j(t) β_j(t) / (Γ(1 − β_j(t)) r^{1 + β_j(t)}),
//!
//! which covers the stable, multi-term, variable-order and (discretised)
//! distributed-order families, together with numerical application of the
//! Caputo-type and RL-type operators they generate and an (H0)/(H1) probe.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};
use crate::quad::{integrate_from_minus_infinity, Tolerance};
use crate::special::{gamma, rgamma};

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type TimeFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

const PROBES: usize = 2001;

#[derive(Clone)]
enum Coef {
    Const(f64),
    Var(TimeFn),
}

impl Coef {
    fn at(&self, t: f64) -> f64 {
        match self {
            Coef::Const(c) => *c,
            Coef::Var(f) => f(t),
        }
    }
}

#[derive(Clone)]
struct Term {
    weight: Coef,
    order: Coef,
    // 1/Γ(1 − β) when the order is constant
    inv_gamma: Option<f64>,
}

impl Term {
    fn new(weight: Coef, order: Coef) -> Self {
        let inv_gamma = match order {
            Coef::Const(b) => Some(rgamma(1.0 - b)),
            Coef::Var(_) => None,
        };
        Term {
            weight,
            order,
            inv_gamma,
        }
    }

    /// (w, β, 1/Γ(1−β)) at state t.
    fn at(&self, t: f64) -> (f64, f64, f64) {
        let w = self.weight.at(t);
        let b = self.order.at(t);
        let ig = self.inv_gamma.unwrap_or_else(|| rgamma(1.0 - b));
        (w, b, ig)
    }
}

/// One envelope component c·r^{−1−γ}.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    c: f64,
    gamma: f64,
}

#[derive(Clone)]
pub struct JumpKernel {
    terms: Vec<Term>,
    envelope: Vec<Piece>,
    window: (f64, f64),
    label: String,
    stable: Option<f64>,
}

impl fmt::Debug for JumpKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpKernel")
            .field("label", &self.label)
            .field("window", &self.window)
            .finish()
    }
}

fn check_order(b: f64, what: &str) -> Result<()> {
    if b > 0.0 && b < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must lie in (0, 1), got {b}")))
    }
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if window.0.is_finite() && window.1.is_finite() && window.0 < window.1 {
        Ok(())
    } else {
        Err(Error::domain(format!("working interval must be finite and non-empty, got {window:?}")))
    }
}

fn probe_points(window: (f64, f64)) -> impl Iterator<Item = f64> {
    let (a, b) = window;
    (0..PROBES).map(move |i| a + (b - a) * i as f64 / (PROBES - 1) as f64)
}

/// sup of β/Γ(1−β) over [lo, hi], on a fine grid with a 1% margin.
fn sup_intensity_factor(lo: f64, hi: f64) -> f64 {
    let n = 400;
    let mut m: f64 = 0.0;
    for i in 0..=n {
        let b = lo + (hi - lo) * i as f64 / n as f64;
        m = m.max(b * rgamma(1.0 - b));
    }
    1.01 * m
}

impl JumpKernel {
    fn assemble(terms: Vec<Term>, window: (f64, f64), label: String, stable: Option<f64>) -> Result<Self> {
        let mut envelope = Vec::new();
        for term in &terms {
            let w_sup = match &term.weight {
                Coef::Const(c) => *c,
                Coef::Var(f) => {
                    let mut m: f64 = 0.0;
                    for t in probe_points(window) {
                        m = m.max(f(t));
                    }
                    1.02 * m
                }
            };
            if w_sup == 0.0 {
                continue;
            }
            match &term.order {
                Coef::Const(b) => envelope.push(Piece {
                    c: w_sup * b * rgamma(1.0 - b),
                    gamma: *b,
                }),
                Coef::Var(f) => {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for t in probe_points(window) {
                        let b = f(t);
                        lo = lo.min(b);
                        hi = hi.max(b);
                    }
                    let pad = 0.01 * (hi - lo) + 1e-9;
                    let lo = (lo - pad).max(0.5 * lo);
                    let hi = (hi + pad).min(0.5 * (1.0 + hi));
                    let c = w_sup * sup_intensity_factor(lo, hi);
                    envelope.push(Piece { c, gamma: lo });
                    envelope.push(Piece { c, gamma: hi });
                }
            }
        }
        Ok(JumpKernel {
            terms,
            envelope,
            window,
            label,
            stable,
        })
    }

    /// ν(t, r).
    pub fn nu(&self, t: f64, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let ln_r = r.ln();
        self.terms
            .iter()
            .map(|term| {
                let (w, b, ig) = term.at(t);
                if w == 0.0 {
                    0.0
                } else {
                    w * b * ig * (-(1.0 + b) * ln_r).exp()
                }
            })
            .sum()
    }

    /// ∫_x^∞ ν(t, r) dr.
    pub fn tail_mass(&self, t: f64, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::INFINITY;
        }
        let ln_x = x.ln();
        self.terms
            .iter()
            .map(|term| {
                let (w, b, ig) = term.at(t);
                if w == 0.0 {
                    0.0
                } else {
                    w * ig * (-b * ln_x).exp()
                }
            })
            .sum()
    }

    /// ∫_0^ε r ν(t, r) dr, the drift replacing jumps below ε.
    pub fn small_jump_moment(&self, t: f64, eps: f64) -> f64 {
        let ln_e = eps.ln();
        self.terms
            .iter()
            .map(|term| {
                let (w, b, ig) = term.at(t);
                if w == 0.0 {
                    0.0
                } else {
                    w * b * ig * ((1.0 - b) * ln_e).exp() / (1.0 - b)
                }
            })
            .sum()
    }

    /// Dominating function ν(t, r) ≤ envelope(r) for t in the working interval.
    pub fn envelope(&self, r: f64) -> f64 {
        let ln_r = r.ln();
        self.envelope
            .iter()
            .map(|p| p.c * (-(1.0 + p.gamma) * ln_r).exp())
            .sum()
    }

    /// ∫_ε^∞ envelope(r) dr.
    pub fn envelope_tail(&self, eps: f64) -> f64 {
        self.envelope.iter().map(|p| p.c * eps.powf(-p.gamma) / p.gamma).sum()
    }

    /// A draw from the normalised envelope restricted to r ≥ ε.
    pub fn sample_envelope_above<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> f64 {
        let total = self.envelope_tail(eps);
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = self.envelope.last().copied();
        for p in &self.envelope {
            let m = p.c * eps.powf(-p.gamma) / p.gamma;
            if pick < m {
                chosen = Some(*p);
                break;
            }
            pick -= m;
        }
        let p = chosen.expect("kernel has a non-empty envelope");
        let u: f64 = rng.sample(Open01);
        eps * u.powf(-1.0 / p.gamma)
    }

    /// A jump size from ν(t, ·) restricted to r ≥ ε, by thinning the envelope.
    pub fn sample_jump_above<R: Rng + ?Sized>(&self, t: f64, eps: f64, rng: &mut R) -> f64 {
        let mut r = eps;
        for _ in 0..1_000_000 {
            r = self.sample_envelope_above(eps, rng);
            let u: f64 = rng.random();
            if u * self.envelope(r) <= self.nu(t, r) {
                return r;
            }
        }
        log::warn!("thinning for {} accepted nothing in 1e6 proposals", self.label);
        r
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Some(β) for the classical stable kernel, whose increments are sampled exactly.
    pub fn stable_beta(&self) -> Option<f64> {
        self.stable
    }

    /// True when ν does not depend on t.
    pub fn is_homogeneous(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t.weight, Coef::Const(_)) && matches!(t.order, Coef::Const(_)))
    }

    pub fn has_jumps(&self) -> bool {
        !self.envelope.is_empty()
    }
}

/// ν(t, r) = β/(Γ(1−β) r^{1+β}).
pub fn kernel_stable(beta: f64) -> Result<JumpKernel> {
    check_order(beta, "stable index")?;
    let term = Term::new(Coef::Const(1.0), Coef::Const(beta));
    JumpKernel::assemble(vec![term], (0.0, 1.0), format!("stable(beta={beta})"), Some(beta))
}

/// Σ_i ω_i(t) β_i/(Γ(1−β_i) r^{1+β_i}); weights are probed on the working interval.
pub fn kernel_multi_term(weights: Vec<TimeFn>, betas: &[f64], window: (f64, f64)) -> Result<JumpKernel> {
    check_window(window)?;
    if weights.is_empty() || weights.len() != betas.len() {
        return Err(Error::domain(format!(
            "multi-term kernel needs equal, non-empty weight and order lists (got {} and {})",
            weights.len(),
            betas.len()
        )));
    }
    let mut terms = Vec::new();
    for (i, (w, &b)) in weights.into_iter().zip(betas).enumerate() {
        check_order(b, &format!("order {i}"))?;
        for t in probe_points(window) {
            let v = w(t);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("weight {i} is {v} at t = {t}")));
            }
        }
        terms.push(Term::new(Coef::Var(w), Coef::Const(b)));
    }
    JumpKernel::assemble(terms, window, format!("multi_term(betas={betas:?})"), None)
}

/// Multi-term kernel with constant weights.
pub fn kernel_multi_term_const(weights: &[f64], betas: &[f64]) -> Result<JumpKernel> {
    if weights.is_empty() || weights.len() != betas.len() {
        return Err(Error::domain(format!(
            "multi-term kernel needs equal, non-empty weight and order lists (got {} and {})",
            weights.len(),
            betas.len()
        )));
    }
    let mut terms = Vec::new();
    for (i, (&w, &b)) in weights.iter().zip(betas).enumerate() {
        check_order(b, &format!("order {i}"))?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::domain(format!("weight {i} must be non-negative, got {w}")));
        }
        terms.push(Term::new(Coef::Const(w), Coef::Const(b)));
    }
    JumpKernel::assemble(
        terms,
        (0.0, 1.0),
        format!("multi_term(weights={weights:?}, betas={betas:?})"),
        None,
    )
}

/// β(t)/(Γ(1−β(t)) r^{1+β(t)}) with β(t) inside the declared [lo, hi] ⊂ (0, 1).
pub fn kernel_variable_order(beta_fn: TimeFn, range: (f64, f64), window: (f64, f64)) -> Result<JumpKernel> {
    check_window(window)?;
    let (lo, hi) = range;
    check_order(lo, "lower order bound")?;
    check_order(hi, "upper order bound")?;
    if lo > hi {
        return Err(Error::domain(format!("order range [{lo}, {hi}] is empty")));
    }
    for t in probe_points(window) {
        let b = beta_fn(t);
        let slack = 1e-12 * (1.0 + hi - lo);
        if !(b >= lo - slack && b <= hi + slack) {
            return Err(Error::domain(format!("order {b} at t = {t} leaves [{lo}, {hi}]")));
        }
    }
    let term = Term::new(Coef::Const(1.0), Coef::Var(beta_fn));
    JumpKernel::assemble(vec![term], window, format!("variable_order(range=[{lo}, {hi}])"), None)
}

/// Σ_j m_j ω(s_j, t) β(s_j, t)/(Γ(1−β(s_j, t)) r^{1+β(s_j, t)}) on the nodes (s_j, m_j).
pub fn kernel_distributed(
    weight: TimeFn2,
    order: TimeFn2,
    nodes: &[(f64, f64)],
    window: (f64, f64),
) -> Result<JumpKernel> {
    check_window(window)?;
    if nodes.is_empty() {
        return Err(Error::domain("distributed kernel needs at least one node"));
    }
    let mut terms = Vec::new();
    for (j, &(s, m)) in nodes.iter().enumerate() {
        if !(m >= 0.0 && m.is_finite() && s.is_finite()) {
            return Err(Error::domain(format!("node {j} = ({s}, {m}) is invalid")));
        }
        for t in probe_points(window) {
            check_order(order(s, t), &format!("order at node {j}, t = {t}"))?;
            let w = weight(s, t);
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::domain(format!("weight at node {j}, t = {t} is {w}")));
            }
        }
        let (wf, of) = (weight.clone(), order.clone());
        terms.push(Term::new(
            Coef::Var(Arc::new(move |t| m * wf(s, t))),
            Coef::Var(Arc::new(move |t| of(s, t))),
        ));
    }
    JumpKernel::assemble(terms, window, format!("distributed({} nodes)", nodes.len()), None)
}

// ---------------------------------------------------------------------------
// Operator application.

fn default_operator_tol() -> Tolerance {
    Tolerance::new(1e-10, 1e-9).with_max_intervals(4000)
}

/// ∫_0^{t−a} (h(t−r) − h(t)) ν(t, r) dr with r = e^v.
fn jump_part(k: &JumpKernel, h: &dyn Fn(f64) -> f64, a: f64, t: f64, ht: f64, tol: Tolerance) -> Result<f64> {
    if !(t > a) {
        return Err(Error::domain(format!("operator needs t > a, got t = {t}, a = {a}")));
    }
    let top = (t - a).ln();
    let f = |v: f64| {
        let r = v.exp();
        if r <= 0.0 {
            return 0.0;
        }
        let d = h((t - r).max(a)) - ht;
        if d == 0.0 {
            0.0
        } else {
            d * k.nu(t, r) * r
        }
    };
    integrate_from_minus_infinity(f, top, 2.0, tol)
        .map(|e| e.value)
        .map_err(|e| e.within(format!("jump integral of {} at t = {t}", k.label())))
}

/// −D*h(t): ∫_0^{t−a}(h(t−r)−h(t))ν(t,r)dr + (h(a)−h(t))·tail_mass(t, t−a).
pub fn apply_caputo_operator(k: &JumpKernel, h: &dyn Fn(f64) -> f64, a: f64, t: f64) -> Result<f64> {
    apply_caputo_operator_tol(k, h, a, t, default_operator_tol())
}

pub fn apply_caputo_operator_tol(
    k: &JumpKernel,
    h: &dyn Fn(f64) -> f64,
    a: f64,
    t: f64,
    tol: Tolerance,
) -> Result<f64> {
    let ht = h(t);
    let jumps = jump_part(k, h, a, t, ht, tol)?;
    Ok(jumps + (h(a) - ht) * k.tail_mass(t, t - a))
}

/// −Dh(t): ∫_0^{t−a}(h(t−r)−h(t))ν(t,r)dr − h(t)·tail_mass(t, t−a).
pub fn apply_rl_operator(k: &JumpKernel, h: &dyn Fn(f64) -> f64, a: f64, t: f64) -> Result<f64> {
    apply_rl_operator_tol(k, h, a, t, default_operator_tol())
}

pub fn apply_rl_operator_tol(
    k: &JumpKernel,
    h: &dyn Fn(f64) -> f64,
    a: f64,
    t: f64,
    tol: Tolerance,
) -> Result<f64> {
    let ht = h(t);
    let jumps = jump_part(k, h, a, t, ht, tol)?;
    Ok(jumps - ht * k.tail_mass(t, t - a))
}

// ---------------------------------------------------------------------------
// Hypothesis probe.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probes {
    /// state grid points over the working interval
    pub n_t: usize,
    /// rungs of the δ-ladder δ_k = (b−a)·10^{−k}
    pub n_delta: usize,
}

impl Default for Probes {
    fn default() -> Self {
        Probes { n_t: 21, n_delta: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct H0Pass {
    pub first_moment: bool,
    pub dt_first_moment: bool,
    pub small_jump: bool,
    pub h1: bool,
    pub envelope: bool,
}

impl H0Pass {
    pub fn all(&self) -> bool {
        self.first_moment && self.dt_first_moment && self.small_jump && self.h1 && self.envelope
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct H0Report {
    /// sup_t ∫_0^{R_max} r ν(t, r) dr with R_max = 10(b−a)
    pub sup_first_moment: f64,
    /// sup_t |∂_t ∫_0^{R_max} r ν dr| by central differences
    pub sup_dt_first_moment: f64,
    /// sup_t ∫_0^δ r ν dr at the smallest rung of the ladder
    pub small_jump_limit: f64,
    pub small_jump_ladder: Vec<(f64, f64)>,
    /// min of ν(t, r) over the t-grid and r ≤ 0.05(b−a)
    pub h1_delta: f64,
    /// state where the (H1) lower bound is smallest when it fails
    pub h1_failing_t: Option<f64>,
    pub pass: H0Pass,
    /// quadrature problems met while probing
    pub notes: Vec<String>,
}

pub const H1_THRESHOLD: f64 = 1e-12;
const MOMENT_LIMIT: f64 = 1e12;

fn truncated_moment(k: &JumpKernel, t: f64, upper: f64, notes: &mut Vec<String>) -> f64 {
    let f = |v: f64| {
        let r = v.exp();
        r * r * k.nu(t, r)
    };
    match integrate_from_minus_infinity(f, upper.ln(), 2.0, Tolerance::new(1e-13, 1e-10)) {
        Ok(e) => e.value,
        Err(e) => {
            notes.push(format!("moment below {upper:e} at t = {t}: {e}"));
            match e {
                Error::Quadrature { value, .. } => value,
                _ => f64::NAN,
            }
        }
    }
}

/// Numerical probe of (H0) and (H1) on the interval [a, b]. Advisory only.
pub fn validate_hypotheses(k: &JumpKernel, t_range: (f64, f64), probes: Probes) -> H0Report {
    let (a, b) = t_range;
    let len = b - a;
    let n_t = probes.n_t.max(2);
    let grid: Vec<f64> = (0..n_t).map(|i| a + len * i as f64 / (n_t - 1) as f64).collect();
    let mut notes = Vec::new();
    let r_max = 10.0 * len;

    let mut sup_m: f64 = 0.0;
    let mut sup_dm: f64 = 0.0;
    let h = 1e-4 * len;
    for &t in &grid {
        sup_m = sup_m.max(truncated_moment(k, t, r_max, &mut notes));
        let (lo, hi) = ((t - h).max(a), (t + h).min(b));
        let d = (truncated_moment(k, hi, r_max, &mut notes) - truncated_moment(k, lo, r_max, &mut notes)) / (hi - lo);
        sup_dm = sup_dm.max(d.abs());
    }

    let mut ladder = Vec::new();
    for i in 1..=probes.n_delta.max(2) {
        let delta = len * 10f64.powi(-(i as i32));
        let mut m: f64 = 0.0;
        for &t in &grid {
            m = m.max(truncated_moment(k, t, delta, &mut notes));
        }
        ladder.push((delta, m));
    }
    let small_limit = ladder.last().map(|p| p.1).unwrap_or(f64::NAN);
    let monotone = ladder.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9));
    let slope = {
        let n = ladder.len();
        let (d0, m0) = ladder[n - 2];
        let (d1, m1) = ladder[n - 1];
        if m0 > 0.0 && m1 > 0.0 {
            (m1 / m0).ln() / (d1 / d0).ln()
        } else if m1 == 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };

    let eps = 0.05 * len;
    let mut delta = f64::INFINITY;
    let mut worst_t = a;
    for &t in &grid {
        for j in 0..=12 {
            let r = eps * 0.5f64.powi(j);
            let v = k.nu(t, r);
            if v < delta {
                delta = v;
                worst_t = t;
            }
        }
    }
    let h1 = delta > H1_THRESHOLD;

    let mut envelope_ok = k.has_jumps() || k.terms.iter().all(|t| grid.iter().all(|&s| t.weight.at(s) == 0.0));
    for &t in &grid {
        for j in -12..=12 {
            let r = len * 2f64.powi(j);
            if k.nu(t, r) > k.envelope(r) * (1.0 + 1e-12) {
                envelope_ok = false;
            }
        }
    }

    let pass = H0Pass {
        first_moment: sup_m.is_finite() && sup_m < MOMENT_LIMIT,
        dt_first_moment: sup_dm.is_finite() && sup_dm < MOMENT_LIMIT,
        small_jump: monotone && slope > 0.01,
        h1,
        envelope: envelope_ok,
    };
    H0Report {
        sup_first_moment: sup_m,
        sup_dt_first_moment: sup_dm,
        small_jump_limit: small_limit,
        small_jump_ladder: ladder,
        h1_delta: delta.max(0.0),
        h1_failing_t: if h1 { None } else { Some(worst_t) },
        pass,
        notes,
    }
}

/// Upper bound on the expected exit time from [a, b] implied by (H1):
/// (2L/ε + 1)/(δ ε) with L = b − a, ε = 0.05 L. None if δ = 0.
pub fn expected_exit_bound(k: &JumpKernel, a: f64, b: f64) -> Option<f64> {
    let report_delta = {
        let len = b - a;
        let eps = 0.05 * len;
        let mut delta = f64::INFINITY;
        for i in 0..21 {
            let t = a + len * i as f64 / 20.0;
            for j in 0..=12 {
                delta = delta.min(k.nu(t, eps * 0.5f64.powi(j)));
            }
        }
        delta
    };
    if report_delta > H1_THRESHOLD {
        let len = b - a;
        let eps = 0.05 * len;
        Some((2.0 * len / eps + 1.0) / (report_delta * eps))
    } else {
        None
    }
}

/// Γ(1−β)-normalised constant of the stable tail: x^{−β}/Γ(1−β).
pub fn stable_tail(beta: f64, x: f64) -> f64 {
    x.powf(-beta) / gamma(1.0 - beta)
}
