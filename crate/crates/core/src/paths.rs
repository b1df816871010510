//! Simulation of the decreasing processes behind the operators: exact stable
//! increments, thinned paths for general kernels, stopped and killed runs,
//! exit-time samplers and the stable-case exit-time and joint densities.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Open01, Poisson};

use crate::error::Result;
use crate::kernels::JumpKernel;
use crate::source::Source;
use crate::special::stable::{ln_tail_series, TAIL_SWITCH};
use crate::special::{kanter_variate, stable_density, stable_ln_density, StableParams};

/// RNG sub-streams of one path.
pub const STREAM_MAIN: u64 = 0;
pub const STREAM_SECOND: u64 = 1;
pub const STREAM_EXIT: u64 = 2;

/// The generator owned by path `index` for a given purpose. Depends only on
/// (seed, index, purpose), never on scheduling.
pub fn path_rng(master_seed: u64, index: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index * 4 + purpose);
    rng
}

/// One draw of the positive β-stable law with Laplace transform exp(−ds·λ^β).
pub fn sample_stable_increment<R: Rng + ?Sized>(beta: f64, ds: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let e: f64 = rng.sample(Exp1);
    kanter_variate(beta, PI * u, e) * ds.powf(1.0 / beta)
}

/// τ = ((t − a)/W)^β, exact in law; 0 when t = a.
pub fn sample_exit_time_stable_exact<R: Rng + ?Sized>(beta: f64, t: f64, a: f64, rng: &mut R) -> f64 {
    if t <= a {
        return 0.0;
    }
    let w = sample_stable_increment(beta, 1.0, rng);
    ((t - a) / w).powf(beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// forced to land at a on the first crossing
    Stopped,
    /// terminated at the first crossing
    Killed,
}

/// How a step of the functional ∫_0^τ e^{−λs} g(T(s)) ds is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// average of g before and after each step; the crossing step counts
    /// half, so τ̂ is the midpoint of the step in which the path crosses
    Trapezoid,
    /// g before each step; τ̂ is the end of the crossing step
    LeftPoint,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Trapezoid
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub ds: f64,
    pub lambda: f64,
    pub horizon: f64,
    /// jumps below eps are replaced by their mean drift (thinned kernels only)
    pub eps: f64,
    pub rule: StepRule,
}

/// Discount weights of one step grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Discount {
    lambda: f64,
    ds: f64,
    full: f64,
    half: f64,
}

impl Discount {
    pub(crate) fn new(lambda: f64, ds: f64) -> Self {
        let w = |h: f64| if lambda == 0.0 { h } else { -(-lambda * h).exp_m1() / lambda };
        Discount {
            lambda,
            ds,
            full: w(ds),
            half: w(0.5 * ds),
        }
    }

    fn decay(&self, s: f64) -> f64 {
        if self.lambda == 0.0 {
            1.0
        } else {
            (-self.lambda * s).exp()
        }
    }

    /// ∫ e^{−λs} over step k.
    pub(crate) fn full(&self, k: usize) -> f64 {
        self.decay(k as f64 * self.ds) * self.full
    }

    /// weight of the crossing step k
    pub(crate) fn crossing(&self, k: usize, rule: StepRule) -> f64 {
        match rule {
            StepRule::Trapezoid => self.decay(k as f64 * self.ds) * self.half,
            StepRule::LeftPoint => self.full(k),
        }
    }

    pub(crate) fn exit_discount(&self, tau: f64) -> f64 {
        self.decay(tau)
    }
}

/// Exit-time estimate for a crossing during step k.
pub(crate) fn crossing_time(k: usize, ds: f64, rule: StepRule) -> f64 {
    match rule {
        StepRule::Trapezoid => (k as f64 + 0.5) * ds,
        StepRule::LeftPoint => (k + 1) as f64 * ds,
    }
}

pub(crate) fn combine(rule: StepRule, before: f64, after: f64) -> f64 {
    match rule {
        StepRule::Trapezoid => 0.5 * (before + after),
        StepRule::LeftPoint => before,
    }
}

/// Per-step decrement generator.
#[derive(Debug, Clone)]
pub(crate) enum Driver<'k> {
    Stable { beta: f64, scale: f64 },
    Fixed { k: &'k JumpKernel, eps: f64, rate: f64, drift: f64 },
    Thinned { k: &'k JumpKernel, eps: f64, ds: f64 },
}

impl<'k> Driver<'k> {
    pub(crate) fn new(k: &'k JumpKernel, ds: f64, eps: f64) -> Self {
        if let Some(beta) = k.stable_beta() {
            Driver::Stable {
                beta,
                scale: ds.powf(1.0 / beta),
            }
        } else if k.is_homogeneous() {
            Driver::Fixed {
                k,
                eps,
                rate: k.tail_mass(0.0, eps) * ds,
                drift: k.small_jump_moment(0.0, eps) * ds,
            }
        } else {
            Driver::Thinned { k, eps, ds }
        }
    }

    /// True when the decrement law does not depend on the current state.
    pub(crate) fn shared(&self) -> bool {
        !matches!(self, Driver::Thinned { .. })
    }

    pub(crate) fn decrement<R: Rng + ?Sized>(&self, t_cur: f64, rng: &mut R) -> f64 {
        match *self {
            Driver::Stable { beta, scale } => {
                let u: f64 = rng.sample(Open01);
                let e: f64 = rng.sample(Exp1);
                kanter_variate(beta, PI * u, e) * scale
            }
            Driver::Fixed { k, eps, rate, drift } => drift + jumps(k, t_cur, eps, rate, rng),
            Driver::Thinned { k, eps, ds } => {
                let rate = k.tail_mass(t_cur, eps) * ds;
                k.small_jump_moment(t_cur, eps) * ds + jumps(k, t_cur, eps, rate, rng)
            }
        }
    }
}

fn jumps<R: Rng + ?Sized>(k: &JumpKernel, t: f64, eps: f64, rate: f64, rng: &mut R) -> f64 {
    if !(rate > 0.0) {
        return 0.0;
    }
    let n = match Poisson::new(rate) {
        Ok(p) => p.sample(rng) as u64,
        Err(_) => 0,
    };
    (0..n).map(|_| k.sample_jump_above(t, eps, rng)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub exit_time: f64,
    pub exited: bool,
    /// discretised ∫_0^τ e^{−λs} g(T(s)) ds
    pub functional: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitTimeSample {
    pub tau: f64,
    pub state_at_query: Option<f64>,
}

impl PathSample {
    /// τ together with the state at clock s (a once exited).
    pub fn exit_sample(&self, s: f64) -> ExitTimeSample {
        let state = if self.exited && s >= self.exit_time {
            None
        } else {
            let i = self.times.partition_point(|&x| x <= s);
            self.states.get(i.saturating_sub(1)).copied()
        };
        ExitTimeSample {
            tau: self.exit_time,
            state_at_query: state,
        }
    }
}

/// One path of the decreasing process started at t0, with the functional
/// accumulated on the step grid of `opts`.
pub fn simulate_path<R: Rng + ?Sized>(
    k: &JumpKernel,
    t0: f64,
    a: f64,
    mode: Mode,
    opts: &StepOptions,
    g: &Source,
    rng: &mut R,
) -> PathSample {
    if t0 <= a {
        return PathSample {
            times: vec![0.0],
            states: vec![a],
            exit_time: 0.0,
            exited: true,
            functional: 0.0,
        };
    }
    let driver = Driver::new(k, opts.ds, opts.eps);
    let disc = Discount::new(opts.lambda, opts.ds);
    let n_steps = (opts.horizon / opts.ds).ceil() as usize;
    let mut times = vec![0.0];
    let mut states = vec![t0];
    let mut state = t0;
    let mut g_before = g.eval_below(state);
    let mut functional = 0.0;
    for step in 0..n_steps {
        let next = state - driver.decrement(state, rng);
        if next <= a {
            functional += disc.crossing(step, opts.rule) * g_before;
            let tau = crossing_time(step, opts.ds, opts.rule);
            if mode == Mode::Stopped {
                times.push(tau);
                states.push(a);
            }
            return PathSample {
                times,
                states,
                exit_time: tau,
                exited: true,
                functional,
            };
        }
        let g_after = g.eval(next);
        functional += disc.full(step) * combine(opts.rule, g_before, g_after);
        g_before = g_after;
        state = next;
        times.push((step + 1) as f64 * opts.ds);
        states.push(state);
    }
    PathSample {
        times,
        states,
        exit_time: n_steps as f64 * opts.ds,
        exited: false,
        functional,
    }
}

/// μ_a^t(s) = (1/β)(t−a) s^{−1/β−1} w_β((t−a) s^{−1/β}).
pub fn exit_time_density_stable(beta: f64, t: f64, a: f64, s: f64) -> Result<f64> {
    let p = StableParams::new(beta)?;
    if !(s > 0.0) || t <= a {
        return Ok(0.0);
    }
    // in logs: s^{−1/β−1} overflows long before the density underflows
    let ln_s = s.ln();
    let ln_x = (t - a).ln() - ln_s / beta;
    let series = if beta * ln_x >= TAIL_SWITCH.ln() {
        ln_tail_series(beta, ln_x, 1.0).map(|l| l - ln_x)
    } else {
        None
    };
    let ln_w = match series {
        Some(l) => l,
        None => stable_ln_density(p, ln_x.exp())?,
    };
    Ok(((t - a).ln() - beta.ln() - (1.0 / beta + 1.0) * ln_s + ln_w).exp())
}

/// p_s(t, r) = s^{−1/β} w_β(s^{−1/β}(t − r)), the density of T(s) at r.
pub fn transition_density_stable(beta: f64, s: f64, t: f64, r: f64) -> Result<f64> {
    let p = StableParams::new(beta)?;
    if !(s > 0.0) || r >= t {
        return Ok(0.0);
    }
    let c = s.powf(-1.0 / beta);
    Ok(c * stable_density(p, c * (t - r)))
}

/// Joint density of (T(s), τ) at (r, ξ): 1{s<ξ} p_s(t, r) μ_a^r(ξ − s).
pub fn joint_density_stable(beta: f64, t: f64, a: f64, s: f64, r: f64, xi: f64) -> Result<f64> {
    StableParams::new(beta)?;
    if s >= xi || r <= a || r >= t {
        return Ok(0.0);
    }
    Ok(transition_density_stable(beta, s, t, r)? * exit_time_density_stable(beta, r, a, xi - s)?)
}

/// CSV dump with columns path_id, s, state.
pub fn write_paths_csv<W: Write>(out: W, paths: &[PathSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "s", "state"])?;
    for (i, p) in paths.iter().enumerate() {
        for (s, x) in p.times.iter().zip(&p.states) {
            w.write_record([i.to_string(), s.to_string(), x.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV dump with columns path_id, tau.
pub fn write_exit_csv<W: Write>(out: W, taus: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "tau"])?;
    for (i, t) in taus.iter().enumerate() {
        w.write_record([i.to_string(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kernel_stable, kernel_variable_order};
    use std::sync::Arc;

    fn opts(lambda: f64) -> StepOptions {
        StepOptions {
            ds: 0.01,
            lambda,
            horizon: 50.0,
            eps: 1e-4,
            rule: StepRule::Trapezoid,
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let mut a = path_rng(1, 7, 0);
        let mut b = path_rng(1, 7, 0);
        let mut c = path_rng(1, 7, 1);
        let (x, y, z): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn self_similar_scaling() {
        let mut r1 = path_rng(3, 0, 0);
        let mut r2 = path_rng(3, 0, 0);
        for _ in 0..100 {
            let x1 = sample_stable_increment(0.6, 1.0, &mut r1);
            let x2 = sample_stable_increment(0.6, 2.0, &mut r2);
            assert!(x1 > 0.0);
            assert!((x2 / x1 - 2f64.powf(1.0 / 0.6)).abs() < 1e-12);
        }
    }

    #[test]
    fn start_at_barrier() {
        let k = kernel_stable(0.5).unwrap();
        let mut rng = path_rng(1, 0, 0);
        let p = simulate_path(&k, 0.0, 0.0, Mode::Stopped, &opts(1.0), &Source::constant(1.0), &mut rng);
        assert_eq!(p.exit_time, 0.0);
        assert_eq!(p.functional, 0.0);
        assert_eq!(sample_exit_time_stable_exact(0.5, 1.0, 1.0, &mut rng), 0.0);
    }

    #[test]
    fn stopped_and_killed_share_the_path() {
        let k = kernel_variable_order(Arc::new(|t| 0.4 + 0.2 * t), (0.4, 0.6), (0.0, 1.0)).unwrap();
        for i in 0..20 {
            let s = simulate_path(&k, 1.0, 0.0, Mode::Stopped, &opts(1.0), &Source::sin(1.0), &mut path_rng(5, i, 0));
            let kl = simulate_path(&k, 1.0, 0.0, Mode::Killed, &opts(1.0), &Source::sin(1.0), &mut path_rng(5, i, 0));
            assert!(s.exited && kl.exited);
            assert_eq!(&s.states[..kl.states.len()], &kl.states[..]);
            assert_eq!(*s.states.last().unwrap(), 0.0);
            assert_eq!(s.functional, kl.functional);
            assert!(s.states.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn exit_sample_is_consistent() {
        let k = kernel_stable(0.5).unwrap();
        let p = simulate_path(&k, 1.0, 0.0, Mode::Stopped, &opts(1.0), &Source::zero(), &mut path_rng(2, 0, 0));
        assert_eq!(p.functional, 0.0);
        for s in [0.0, 0.1, 0.5, 1.0, 3.0] {
            let e = p.exit_sample(s);
            assert_eq!(e.state_at_query.is_some(), e.tau > s);
            if let Some(x) = e.state_at_query {
                assert!(x > 0.0);
            }
        }
    }

    #[test]
    fn joint_density_support() {
        assert_eq!(joint_density_stable(0.5, 1.0, 0.0, 0.5, 0.5, 0.4).unwrap(), 0.0);
        assert!(joint_density_stable(0.5, 1.0, 0.0, 0.1, 0.5, 0.4).unwrap() > 0.0);
    }
}
