//! Deterministic engines for the stable kernel: quadrature against the
//! stable transition and exit-time densities, and the Mittag-Leffler closed
//! form.
//!
//! Expectations over the stable law are integrals in v = ln x against the
//! interpolated density table, so nested integrals stay cheap.

use std::sync::Arc;

use rayon::prelude::*;

use crate::curve::{CurvePoint, SolutionCurve};
use crate::error::{Error, Result};
use crate::quad::{integrate_pieces, integrate_real_line, integrate_to_infinity, Tolerance};
use crate::source::{Source, Source2};
use crate::special::{mittag_leffler, mittag_leffler2, stable_law, stable_sf, StableLaw, StableParams};

fn inner_tol() -> Tolerance {
    Tolerance::new(1e-14, 1e-11).with_max_intervals(4000)
}

fn outer_tol() -> Tolerance {
    Tolerance::new(1e-12, 1e-10).with_max_intervals(4000)
}

fn failed(context: String, est: crate::quad::Estimate, tol: Tolerance) -> Error {
    Error::Quadrature {
        context,
        value: est.value,
        abs_err: est.abs_err,
        requested: tol.abs.max(tol.rel * est.value.abs()),
    }
}

/// ∫_{−∞}^{v_max} f(v) e^v w_β(e^v) dv = E[f(ln W); W < e^{v_max}], split at
/// the given v-breakpoints.
fn law_expectation(
    law: &StableLaw,
    v_max: f64,
    breaks: &[f64],
    mut f: impl FnMut(f64) -> f64,
    tol: Tolerance,
) -> Result<f64> {
    let (lo, hi) = law.log_range();
    if v_max <= lo {
        return Ok(0.0);
    }
    let beta = law.beta();
    let mut weighted = |v: f64| {
        let fv = f(v);
        if fv == 0.0 {
            0.0
        } else {
            fv * (v + law.ln_density(v.exp())).exp()
        }
    };
    let top = v_max.min(hi);
    let mut edges = Vec::new();
    let n = ((top - lo).ceil() as usize).max(1);
    for i in 0..=n {
        edges.push(lo + (top - lo) * i as f64 / n as f64);
    }
    // the tail beyond hi decays like e^{−βv}; cover a finite v_max in steps of 1/β
    if v_max > hi && v_max.is_finite() {
        let mut v = hi + 1.0 / beta;
        while v < v_max && edges.len() < 400 {
            edges.push(v);
            v += 1.0 / beta;
        }
        edges.push(v_max);
    }
    let end = edges[edges.len() - 1];
    edges.extend(breaks.iter().copied().filter(|&b| b > lo && b < end));
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let (est, ok) = integrate_pieces(&mut weighted, &edges, tol);
    if !ok {
        return Err(failed(format!("expectation over the stable law (beta = {beta}) below v = {v_max:e}"), est, tol));
    }
    let mut total = est.value;
    if v_max.is_infinite() {
        let tail = integrate_to_infinity(&mut weighted, hi, 1.0 / beta, tol)
            .map_err(|e| e.within(format!("stable tail, beta = {beta}")))?;
        total += tail.value;
    }
    Ok(total)
}

/// J(κ) = β E[e^{−κ W^{−β}} W^{−β}], the kernel of the M-operator in y = r^β.
pub fn j_factor(law: &StableLaw, kappa: f64) -> Result<f64> {
    let beta = law.beta();
    let e = law_expectation(
        law,
        f64::INFINITY,
        &[],
        |v| {
            let p = (-beta * v).exp();
            (-kappa * p).exp() * p
        },
        inner_tol(),
    )?;
    Ok(beta * e)
}

fn check_beta(beta: f64) -> Result<Arc<StableLaw>> {
    StableParams::new(beta)?;
    stable_law(beta)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("need lambda >= 0, got {lambda}")))
    }
}

/// M g(t) = ∫_0^∞ e^{−λs} E[g(T_t(s)); s < τ] ds
///        = (1/β) ∫_0^{(t−a)^β} g(t − y^{1/β}) J(λy) dy.
pub fn m_operator_quad(beta: f64, lambda: f64, g: &Source, a: f64, t: f64) -> Result<f64> {
    let law = check_beta(beta)?;
    check_lambda(lambda)?;
    if !(t >= a) {
        return Err(Error::domain(format!("need t >= a, got t = {t}, a = {a}")));
    }
    if t == a || g.is_zero() {
        return Ok(0.0);
    }
    let top = (t - a).powf(beta);
    let j0 = if lambda == 0.0 { Some(j_factor(&law, 0.0)?) } else { None };
    let mut failure = None;
    let mut f = |y: f64| {
        let gv = g.eval(t - y.powf(1.0 / beta));
        if gv == 0.0 {
            return 0.0;
        }
        let j = match j0 {
            Some(j) => j,
            None => match j_factor(&law, lambda * y) {
                Ok(j) => j,
                Err(e) => {
                    failure.get_or_insert(e.within(format!("J at y = {y:e}")));
                    0.0
                }
            },
        };
        gv * j
    };
    let mut edges = vec![0.0];
    let mut ys: Vec<f64> = g
        .breaks()
        .iter()
        .filter(|&&c| c > a && c < t)
        .map(|&c| (t - c).powf(beta))
        .collect();
    ys.sort_by(f64::total_cmp);
    edges.extend(ys);
    edges.push(top);
    let tol = outer_tol();
    let (est, ok) = integrate_pieces(&mut f, &edges, tol);
    if let Some(e) = failure {
        return Err(e.within(format!("M-operator at t = {t}")));
    }
    if !ok {
        return Err(failed(format!("M-operator at t = {t}"), est, tol));
    }
    Ok(est.value / beta)
}

/// E[e^{−λτ}] = ∫_0^∞ e^{−λs} μ_a^t(s) ds, integrated in x = (t−a)s^{−1/β}
/// where μ becomes the stable density.
pub fn laplace_exit_quad(beta: f64, lambda: f64, t: f64, a: f64) -> Result<f64> {
    let law = check_beta(beta)?;
    check_lambda(lambda)?;
    if !(t >= a) {
        return Err(Error::domain(format!("need t >= a, got t = {t}, a = {a}")));
    }
    if t == a {
        return Ok(1.0);
    }
    let kappa = lambda * (t - a).powf(beta);
    law_expectation(&law, f64::INFINITY, &[], |v| (-kappa * (-beta * v).exp()).exp(), inner_tol())
}

/// The same transform by parts: λ ∫_0^∞ e^{−λs} P[τ ≤ s] ds with
/// P[τ ≤ s] = P[W ≥ (t−a) s^{−1/β}] from the direct survival function.
pub fn laplace_exit_by_parts(beta: f64, lambda: f64, t: f64, a: f64) -> Result<f64> {
    let p = StableParams::new(beta)?;
    check_lambda(lambda)?;
    if !(t >= a) {
        return Err(Error::domain(format!("need t >= a, got t = {t}, a = {a}")));
    }
    if t == a || lambda == 0.0 {
        return Ok(1.0);
    }
    // s = e^u / λ
    let f = |u: f64| {
        let s = u.exp() / lambda;
        let x = (t - a) * s.powf(-1.0 / beta);
        (u - u.exp()).exp() * stable_sf(p, x)
    };
    integrate_real_line(f, 0.0, 2.0, Tolerance::new(1e-13, 1e-11))
        .map(|e| e.value)
        .map_err(|e| e.within("exit-time transform by parts"))
}

fn check_grid(a: f64, grid: &[f64]) -> Result<()> {
    for &t in grid {
        if !(t >= a && t.is_finite()) {
            return Err(Error::domain(format!("grid point {t} lies below a = {a}")));
        }
    }
    Ok(())
}

fn curve(method: &str, grid: &[f64], values: Vec<Result<f64>>) -> Result<SolutionCurve> {
    let mut points = Vec::with_capacity(grid.len());
    for (&t, v) in grid.iter().zip(values) {
        points.push(CurvePoint::exact(t, None, v?));
    }
    Ok(SolutionCurve::new(method, points))
}

/// w(t) = M g(t); w(a) = 0.
pub fn solve_rl_quad(beta: f64, lambda: f64, g: &Source, a: f64, grid: &[f64]) -> Result<SolutionCurve> {
    check_grid(a, grid)?;
    let values = grid.par_iter().map(|&t| m_operator_quad(beta, lambda, g, a, t)).collect();
    curve("quad", grid, values)
}

/// u(t) = u_a E[e^{−λτ}] + M g(t); u(a) = u_a.
pub fn solve_caputo_quad(
    beta: f64,
    lambda: f64,
    g: &Source,
    u_a: f64,
    a: f64,
    grid: &[f64],
) -> Result<SolutionCurve> {
    check_grid(a, grid)?;
    let values = grid
        .par_iter()
        .map(|&t| {
            if t == a {
                return Ok(u_a);
            }
            let exit = if u_a == 0.0 { 0.0 } else { u_a * laplace_exit_quad(beta, lambda, t, a)? };
            Ok(exit + m_operator_quad(beta, lambda, g, a, t)?)
        })
        .collect();
    curve("quad", grid, values)
}

/// u(t) = u_a E_β(−λ(t−a)^β) + ∫_a^t g(r)(t−r)^{β−1} E_{β,β}(−λ(t−r)^β) dr,
/// integrated in y = (t−r)^β. Any real λ.
pub fn solve_caputo_closed_form(
    beta: f64,
    lambda: f64,
    g: &Source,
    u_a: f64,
    a: f64,
    grid: &[f64],
) -> Result<SolutionCurve> {
    StableParams::new(beta)?;
    if !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be finite, got {lambda}")));
    }
    check_grid(a, grid)?;
    let values = grid
        .par_iter()
        .map(|&t| closed_form_point(beta, lambda, g, u_a, a, t))
        .collect();
    curve("closed_form", grid, values)
}

fn closed_form_point(beta: f64, lambda: f64, g: &Source, u_a: f64, a: f64, t: f64) -> Result<f64> {
    if t == a {
        return Ok(u_a);
    }
    let top = (t - a).powf(beta);
    let first = if u_a == 0.0 { 0.0 } else { u_a * mittag_leffler(beta, -lambda * top)? };
    if g.is_zero() {
        return Ok(first);
    }
    let mut failure = None;
    let mut f = |y: f64| {
        let gv = g.eval(t - y.powf(1.0 / beta));
        if gv == 0.0 {
            return 0.0;
        }
        match mittag_leffler2(beta, beta, -lambda * y) {
            Ok(e) => gv * e,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let mut edges = vec![0.0];
    let mut ys: Vec<f64> = g
        .breaks()
        .iter()
        .filter(|&&c| c > a && c < t)
        .map(|&c| (t - c).powf(beta))
        .collect();
    ys.sort_by(f64::total_cmp);
    edges.extend(ys);
    edges.push(top);
    let tol = outer_tol();
    let (est, ok) = integrate_pieces(&mut f, &edges, tol);
    if let Some(e) = failure {
        return Err(e.within(format!("closed form at t = {t}")));
    }
    if !ok {
        return Err(failed(format!("closed form at t = {t}"), est, tol));
    }
    Ok(first + est.value / beta)
}

// ---------------------------------------------------------------------------
// Mixed problem.

/// E[h(t − c W); c W < t] for the law of W, with c = s^{1/β}. The v-breaks
/// come from the breakpoints of h.
fn killed_expectation(law: &StableLaw, c: f64, t: f64, h: &Source, tol: Tolerance) -> Result<f64> {
    if h.is_zero() {
        return Ok(0.0);
    }
    if c == 0.0 {
        return Ok(h.eval(t));
    }
    let v_max = (t / c).ln();
    let breaks: Vec<f64> = h
        .breaks()
        .iter()
        .filter(|&&b| b > 0.0 && b < t)
        .map(|&b| ((t - b) / c).ln())
        .collect();
    law_expectation(law, v_max, &breaks, |v| h.eval(t - c * v.exp()), tol)
}

/// u(t1, t2) for the mixed problem: RL-type in t1 (index β1), Caputo-type in
/// t2 (index β2), boundary data φ on t2 = 0.
pub fn solve_mixed_quad(
    beta1: f64,
    beta2: f64,
    lambda: f64,
    g: &Source2,
    phi: &Source,
    grid: &[(f64, f64)],
) -> Result<SolutionCurve> {
    let law1 = check_beta(beta1)?;
    let law2 = check_beta(beta2)?;
    check_lambda(lambda)?;
    let phi0 = phi.eval(0.0);
    if phi0.abs() > 1e-12 {
        return Err(Error::domain(format!("boundary data must vanish at 0, got phi(0) = {phi0}")));
    }
    for &(t1, t2) in grid {
        if !(t1 >= 0.0 && t2 >= 0.0) {
            return Err(Error::domain(format!("grid point ({t1}, {t2}) is outside the quadrant")));
        }
    }
    let values: Vec<Result<f64>> = grid
        .par_iter()
        .map(|&(t1, t2)| {
            if t1 == 0.0 {
                return Ok(0.0);
            }
            if t2 == 0.0 {
                return Ok(phi.eval(t1));
            }
            let a = mixed_phi_term(&law1, &law2, lambda, phi, t1, t2)
                .map_err(|e| e.within(format!("boundary term at ({t1}, {t2})")))?;
            let b = mixed_g_term(&law1, &law2, lambda, g, t1, t2)
                .map_err(|e| e.within(format!("source term at ({t1}, {t2})")))?;
            Ok(a + b)
        })
        .collect();
    let mut points = Vec::with_capacity(grid.len());
    for (&(t1, t2), v) in grid.iter().zip(values) {
        points.push(CurvePoint::exact(t1, Some(t2), v?));
    }
    Ok(SolutionCurve::new("quad", points))
}

/// ∫_0^∞ e^{−λs} μ_0^{t2}(s) E[φ(T1(s)); s < τ1] ds, in the variable of W2.
pub fn mixed_phi_term(law1: &StableLaw, law2: &StableLaw, lambda: f64, phi: &Source, t1: f64, t2: f64) -> Result<f64> {
    if phi.is_zero() {
        return Ok(0.0);
    }
    let (b1, b2) = (law1.beta(), law2.beta());
    let mut failure = None;
    let f = |v2: f64| {
        // τ2 = (t2/W2)^{β2}
        let s = (b2 * (t2.ln() - v2)).exp();
        let disc = (-lambda * s).exp();
        if disc == 0.0 {
            return 0.0;
        }
        match killed_expectation(law1, s.powf(1.0 / b1), t1, phi, mixed_inner_tol()) {
            Ok(e) => disc * e,
            Err(e) => {
                failure.get_or_insert(e.within(format!("at s = {s:e}")));
                0.0
            }
        }
    };
    let v = law_expectation(law2, f64::INFINITY, &[], f, mixed_outer_tol())?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn mixed_inner_tol() -> Tolerance {
    Tolerance::new(1e-13, 1e-10).with_max_intervals(4000)
}

fn mixed_outer_tol() -> Tolerance {
    Tolerance::new(1e-11, 1e-8).with_max_intervals(4000)
}

/// ∫_0^∞ e^{−λs} E[g(T1(s), T2(s)); s < τ1 ∧ τ2] ds, in u = ln s.
pub fn mixed_g_term(law1: &StableLaw, law2: &StableLaw, lambda: f64, g: &Source2, t1: f64, t2: f64) -> Result<f64> {
    if g.is_zero() {
        return Ok(0.0);
    }
    let (b1, b2) = (law1.beta(), law2.beta());
    let mut failure = None;
    let mut record = |e: Error, s: f64| {
        failure.get_or_insert(e.within(format!("at s = {s:e}")));
        0.0
    };
    let f = |u: f64| {
        let s = u.exp();
        if !s.is_finite() || !(s > 0.0) {
            return 0.0;
        }
        let disc = (u - lambda * s).exp();
        if disc == 0.0 {
            return 0.0;
        }
        let (c1, c2) = (s.powf(1.0 / b1), s.powf(1.0 / b2));
        let inner = match g.factors() {
            Some((g1, g2)) => killed_expectation(law1, c1, t1, g1, mixed_inner_tol())
                .and_then(|x| Ok(x * killed_expectation(law2, c2, t2, g2, mixed_inner_tol())?)),
            None => brute_inner(law1, law2, c1, c2, t1, t2, g),
        };
        match inner {
            Ok(v) if v == 0.0 => 0.0,
            Ok(v) => disc * v,
            Err(e) => record(e, s),
        }
    };
    let centre = 0.5 * (b1 * t1.ln() + b2 * t2.ln());
    let v = integrate_real_line(f, centre, 2.0, mixed_outer_tol())
        .map(|e| e.value)
        .map_err(|e| e.within("source term in ln s"))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// E[g(t1 − c1 W1, t2 − c2 W2); both positive] by nested quadrature.
fn brute_inner(law1: &StableLaw, law2: &StableLaw, c1: f64, c2: f64, t1: f64, t2: f64, g: &Source2) -> Result<f64> {
    let tol = Tolerance::new(1e-11, 1e-8).with_max_intervals(2000);
    let mut failure = None;
    let f = |v1: f64| {
        let r1 = t1 - c1 * v1.exp();
        let h = Source::from_fn("slice", {
            let g = g.clone();
            move |r2| g.eval(r1, r2)
        });
        match killed_expectation(law2, c2, t2, &h, tol) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let v = law_expectation(law1, (t1 / c1).ln(), &[], f, tol)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    #[test]
    fn j_at_zero() {
        let law = stable_law(0.5).unwrap();
        // β E[W^{−β}] = β Γ(2)/Γ(1+β) = 1/Γ(β)
        let j = j_factor(&law, 0.0).unwrap();
        assert!((j - 1.0 / gamma(0.5)).abs() < 1e-10, "{j}");
    }

    #[test]
    fn m_of_one_at_zero_lambda() {
        let m = m_operator_quad(0.5, 0.0, &Source::constant(1.0), 0.0, 1.0).unwrap();
        assert!((m - 1.0 / gamma(1.5)).abs() < 1e-9, "{m}");
    }

    #[test]
    fn zero_source() {
        assert_eq!(m_operator_quad(0.5, 1.0, &Source::zero(), 0.0, 1.0).unwrap(), 0.0);
        let c = solve_mixed_quad(0.5, 0.5, 1.0, &Source2::constant(0.0), &Source::zero(), &[(0.5, 0.5)]).unwrap();
        assert_eq!(c.points[0].value, 0.0);
    }

    #[test]
    fn laplace_at_zero_lambda_is_one() {
        for b in [0.3, 0.5, 0.7] {
            assert!((laplace_exit_quad(b, 0.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_boundary_rows() {
        let phi = Source::poly(&[0.0, 1.0, -1.0]);
        let c = solve_mixed_quad(0.5, 0.5, 1.0, &Source2::constant(1.0), &phi, &[(0.0, 0.7), (0.3, 0.0)]).unwrap();
        assert_eq!(c.points[0].value, 0.0);
        assert_eq!(c.points[1].value, 0.3 * 0.7);
    }
}
