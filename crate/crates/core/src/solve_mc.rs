//! Monte Carlo engines for the RL-type, Caputo-type and mixed problems.
//!
//! Paths are simulated in fixed chunks, each chunk reduced with Welford
//! accumulators, and the chunks merged in index order, so the numbers do
//! not depend on the worker count.

use rayon::prelude::*;

use crate::curve::{CurvePoint, SolutionCurve};
use crate::error::{Error, Result};
use crate::kernels::{expected_exit_bound, JumpKernel};
use crate::paths::{
    combine, crossing_time, path_rng, sample_exit_time_stable_exact, simulate_path, Discount, Driver, Mode,
    StepOptions, StepRule, STREAM_EXIT, STREAM_MAIN, STREAM_SECOND,
};
use crate::source::{Source, Source2};
use crate::stats::Moments;

const CHUNK: u64 = 500;
/// horizon used for λ = 0 when (H1) gives no bound
const FALLBACK_HORIZON: f64 = 1e4;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_paths: u64,
    pub ds: f64,
    pub master_seed: u64,
    pub horizon: Option<f64>,
    /// small-jump cut for thinned kernels; default 1e-4·(b − a)
    pub eps: Option<f64>,
    pub rule: StepRule,
    pub workers: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 100_000,
            ds: 2e-3,
            master_seed: 20_240_917,
            horizon: None,
            eps: None,
            rule: StepRule::Trapezoid,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub truncated_fraction: f64,
    pub tie_fraction: f64,
}

impl McEstimate {
    fn exact(value: f64) -> Self {
        McEstimate {
            value,
            std_error: 0.0,
            n_paths: 0,
            truncated_fraction: 0.0,
            tie_fraction: 0.0,
        }
    }

    fn from_moments(m: &Moments, truncated: u64, ties: u64) -> Self {
        McEstimate {
            value: m.mean,
            std_error: m.std_error(),
            n_paths: m.n,
            truncated_fraction: truncated as f64 / m.n.max(1) as f64,
            tie_fraction: ties as f64 / m.n.max(1) as f64,
        }
    }

    fn point(&self, t: f64, t2: Option<f64>) -> CurvePoint {
        CurvePoint {
            t,
            t2,
            value: self.value,
            std_error: self.std_error,
            n_paths: self.n_paths,
            truncated_fraction: self.truncated_fraction,
            tie_fraction: t2.map(|_| self.tie_fraction),
        }
    }
}

/// D_{a+*} u = −λu + g with u(a) = u_a (Caputo), or the RL problem with
/// w(a) = 0, on [a, b].
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub kernel: JumpKernel,
    pub lambda: f64,
    pub g: Source,
    pub u_a: f64,
    pub a: f64,
    pub b: f64,
}

/// RL-type operator in t1 (killed on t1 = 0), Caputo-type in t2 (stopped on
/// t2 = 0, boundary φ on the t1-axis), on [0, b1] × [0, b2].
#[derive(Debug, Clone)]
pub struct MixedProblem {
    pub kernel1: JumpKernel,
    pub kernel2: JumpKernel,
    pub lambda: f64,
    pub g: Source2,
    pub phi: Source,
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Caputo(LinearProblem),
    Rl(LinearProblem),
    Mixed(MixedProblem),
}

/// One (λ, g, u_a) combination of a battery sharing paths.
#[derive(Debug, Clone)]
pub struct Case {
    pub lambda: f64,
    pub g: Source,
    pub u_a: f64,
}

/// Worker count: explicit value, else FRACFLOW_WORKERS, else rayon's default.
pub fn resolve_workers(explicit: Option<usize>) -> Result<Option<usize>> {
    if let Some(w) = explicit {
        return if w == 0 {
            Err(Error::config("workers", "must be at least 1"))
        } else {
            Ok(Some(w))
        };
    }
    match std::env::var("FRACFLOW_WORKERS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(Error::config("FRACFLOW_WORKERS", format!("expected a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` inside a pool of the resolved size.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match resolve_workers(workers)? {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("workers", e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Maps chunks of path indices in parallel; the result is in chunk order.
fn map_chunks<T: Send>(cfg: &McConfig, f: impl Fn(u64, u64) -> T + Sync + Send) -> Result<Vec<T>> {
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    with_workers(cfg.workers, || {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| f(c * CHUNK, ((c + 1) * CHUNK).min(cfg.n_paths)))
            .collect()
    })
}

fn check_cfg(cfg: &McConfig) -> Result<()> {
    if cfg.n_paths < 2 {
        return Err(Error::config("mc.n_paths", "need at least 2 paths"));
    }
    if !(cfg.ds > 0.0 && cfg.ds.is_finite()) {
        return Err(Error::config("mc.ds", format!("must be positive, got {}", cfg.ds)));
    }
    if let Some(h) = cfg.horizon {
        if !(h > 0.0) {
            return Err(Error::config("mc.horizon_override", format!("must be positive, got {h}")));
        }
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("probabilistic engines need lambda >= 0, got {lambda}")))
    }
}

fn check_kernel_window(k: &JumpKernel, a: f64, top: f64) -> Result<()> {
    if k.is_homogeneous() {
        return Ok(());
    }
    let (lo, hi) = k.window();
    let slack = 1e-12 * (1.0 + hi - lo);
    if a < lo - slack || top > hi + slack {
        return Err(Error::domain(format!(
            "states [{a}, {top}] leave the working interval [{lo}, {hi}] of {}",
            k.label()
        )));
    }
    Ok(())
}

/// Default horizon: 50/λ, or for λ = 0 fifty times the (H1) bound on E[τ].
pub fn default_horizon(k: &JumpKernel, lambda: f64, a: f64, b: f64) -> f64 {
    if lambda > 0.0 {
        return 50.0 / lambda;
    }
    match expected_exit_bound(k, a, b) {
        Some(bound) => 50.0 * bound,
        None => {
            log::warn!(
                "(H1) probe failed for {} on [{a}, {b}]; lambda = 0 runs use horizon {FALLBACK_HORIZON}",
                k.label()
            );
            FALLBACK_HORIZON
        }
    }
}

fn eps_for(cfg: &McConfig, a: f64, b: f64) -> f64 {
    cfg.eps.unwrap_or(1e-4 * (b - a))
}

// ---------------------------------------------------------------------------
// One-dimensional battery.

struct Battery<'k> {
    driver: Driver<'k>,
    a: f64,
    /// interior grid points, ascending
    grid: Vec<f64>,
    lambdas: Vec<f64>,
    discounts: Vec<Discount>,
    /// sources that must be evaluated along the path; constant ones are
    /// carried by the accumulated weights
    sources: Vec<Source>,
    rule: StepRule,
    ds: f64,
    n_steps: usize,
}

struct Scratch {
    exit: Vec<f64>,
    /// Σ of step weights, per (point, λ)
    weight: Vec<f64>,
    integral: Vec<f64>,
    exited: Vec<bool>,
    g_prev: Vec<f64>,
}

impl Battery<'_> {
    fn groups(&self) -> Vec<Vec<usize>> {
        let n = self.grid.len();
        if self.driver.shared() {
            vec![(0..n).collect()]
        } else {
            (0..n).map(|j| vec![j]).collect()
        }
    }

    fn scratch(&self) -> Scratch {
        let (n, nl, nm) = (self.grid.len(), self.lambdas.len(), self.sources.len());
        Scratch {
            exit: vec![0.0; n * nl],
            weight: vec![0.0; n * nl],
            integral: vec![0.0; n * nl * nm],
            exited: vec![false; n],
            g_prev: vec![0.0; n * nm],
        }
    }

    fn run_group(&self, idx: &[usize], rng: &mut impl rand::Rng, sc: &mut Scratch) {
        let (nl, nm) = (self.lambdas.len(), self.sources.len());
        for &j in idx {
            sc.exited[j] = false;
            sc.weight[j * nl..(j + 1) * nl].fill(0.0);
            sc.integral[j * nl * nm..(j + 1) * nl * nm].fill(0.0);
            for m in 0..nm {
                sc.g_prev[j * nm + m] = self.sources[m].eval_below(self.grid[j]);
            }
        }
        let mut full = vec![0.0; nl];
        let mut first = 0;
        let mut s = 0.0;
        for step in 0..self.n_steps {
            if first == idx.len() {
                break;
            }
            let t_cur = self.grid[idx[first]] - s;
            let s_new = s + self.driver.decrement(t_cur, rng);
            for l in 0..nl {
                full[l] = self.discounts[l].full(step);
            }
            for q in first..idx.len() {
                let j = idx[q];
                let after = self.grid[j] - s_new;
                let base = j * nl * nm;
                if after <= self.a {
                    let tau = crossing_time(step, self.ds, self.rule);
                    for l in 0..nl {
                        let w = self.discounts[l].crossing(step, self.rule);
                        sc.exit[j * nl + l] = self.discounts[l].exit_discount(tau);
                        sc.weight[j * nl + l] += w;
                        for m in 0..nm {
                            sc.integral[base + l * nm + m] += w * sc.g_prev[j * nm + m];
                        }
                    }
                    sc.exited[j] = true;
                    first = q + 1;
                } else {
                    for l in 0..nl {
                        sc.weight[j * nl + l] += full[l];
                    }
                    for m in 0..nm {
                        let ga = self.sources[m].eval(after);
                        let c = combine(self.rule, sc.g_prev[j * nm + m], ga);
                        for l in 0..nl {
                            sc.integral[base + l * nm + m] += full[l] * c;
                        }
                        sc.g_prev[j * nm + m] = ga;
                    }
                }
            }
            s = s_new;
        }
        let horizon = self.n_steps as f64 * self.ds;
        for &j in &idx[first..] {
            for l in 0..nl {
                sc.exit[j * nl + l] = self.discounts[l].exit_discount(horizon);
            }
        }
    }
}

/// How a case reads its value off the scratch arrays.
#[derive(Clone, Copy)]
enum Term {
    Zero,
    Constant(f64),
    Path(usize),
}

struct ChunkStats {
    moments: Vec<Moments>,
    truncated: Vec<u64>,
}

/// Caputo-type solutions for several (λ, g, u_a) on common paths. The RL
/// problem is the case u_a = 0.
pub fn solve_caputo_mc_batch(
    kernel: &JumpKernel,
    interval: (f64, f64),
    cases: &[Case],
    grid: &[f64],
    cfg: &McConfig,
) -> Result<Vec<SolutionCurve>> {
    check_cfg(cfg)?;
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::domain(format!("interval [{a}, {b}] is empty")));
    }
    for c in cases {
        check_lambda(c.lambda)?;
    }
    for &t in grid {
        if !(t >= a && t <= b) {
            return Err(Error::domain(format!("grid point {t} lies outside [{a}, {b}]")));
        }
    }
    let top = grid.iter().copied().fold(a, f64::max);
    check_kernel_window(kernel, a, top)?;

    let mut lambdas: Vec<f64> = Vec::new();
    let mut sources: Vec<Source> = Vec::new();
    let mut case_index = Vec::new();
    for c in cases {
        let l = match lambdas.iter().position(|&x| x == c.lambda) {
            Some(l) => l,
            None => {
                lambdas.push(c.lambda);
                lambdas.len() - 1
            }
        };
        let term = match c.g.constant_value() {
            Some(0.0) => Term::Zero,
            Some(v) => Term::Constant(v),
            None => {
                sources.push(c.g.clone());
                Term::Path(sources.len() - 1)
            }
        };
        case_index.push((l, term, c.u_a));
    }
    let horizon = cfg.horizon.unwrap_or_else(|| {
        lambdas
            .iter()
            .map(|&l| default_horizon(kernel, l, a, b))
            .fold(0.0, f64::max)
    });

    let mut interior: Vec<f64> = grid.iter().copied().filter(|&t| t > a).collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    let battery = Battery {
        driver: Driver::new(kernel, cfg.ds, eps_for(cfg, a, b)),
        a,
        grid: interior.clone(),
        discounts: lambdas.iter().map(|&l| Discount::new(l, cfg.ds)).collect(),
        lambdas,
        sources,
        rule: cfg.rule,
        ds: cfg.ds,
        n_steps: (horizon / cfg.ds).ceil() as usize,
    };
    let (n, nl, nm, nc) = (
        interior.len(),
        battery.lambdas.len(),
        battery.sources.len(),
        cases.len(),
    );
    let groups = battery.groups();

    let chunks = map_chunks(cfg, |start, end| {
        let mut sc = battery.scratch();
        let mut st = ChunkStats {
            moments: vec![Moments::default(); n * nc],
            truncated: vec![0; n],
        };
        for p in start..end {
            for group in &groups {
                let mut rng = path_rng(cfg.master_seed, p, STREAM_MAIN);
                battery.run_group(group, &mut rng, &mut sc);
            }
            for j in 0..n {
                if !sc.exited[j] {
                    st.truncated[j] += 1;
                }
                for (c, &(l, term, u_a)) in case_index.iter().enumerate() {
                    let integral = match term {
                        Term::Zero => 0.0,
                        Term::Constant(v) => v * sc.weight[j * nl + l],
                        Term::Path(m) => sc.integral[j * nl * nm + l * nm + m],
                    };
                    st.moments[j * nc + c].push(u_a * sc.exit[j * nl + l] + integral);
                }
            }
        }
        st
    })?;
    let mut total = ChunkStats {
        moments: vec![Moments::default(); n * nc],
        truncated: vec![0; n],
    };
    for ch in &chunks {
        for (t, m) in total.moments.iter_mut().zip(&ch.moments) {
            t.merge(m);
        }
        for (t, x) in total.truncated.iter_mut().zip(&ch.truncated) {
            *t += x;
        }
    }

    let mut curves = Vec::new();
    for (c, case) in cases.iter().enumerate() {
        let points = grid
            .iter()
            .map(|&t| {
                if t <= a {
                    return CurvePoint::exact(t, None, case.u_a);
                }
                let j = interior.partition_point(|&x| x < t);
                let est = McEstimate::from_moments(&total.moments[j * nc + c], total.truncated[j], 0);
                est.point(t, None)
            })
            .collect();
        curves.push(SolutionCurve::new("mc", points));
    }
    for (j, &tr) in total.truncated.iter().enumerate() {
        if tr > 0 {
            log::warn!(
                "{tr} of {} paths from t = {} reached the horizon {horizon}",
                cfg.n_paths,
                interior[j]
            );
        }
    }
    Ok(curves)
}

/// u(t) = u_a E[e^{−λτ}] + E[∫_0^τ e^{−λs} g(T(s)) ds] on each grid point.
pub fn solve_caputo_mc(p: &LinearProblem, grid: &[f64], cfg: &McConfig) -> Result<SolutionCurve> {
    let case = Case {
        lambda: p.lambda,
        g: p.g.clone(),
        u_a: p.u_a,
    };
    let mut v = solve_caputo_mc_batch(&p.kernel, (p.a, p.b), &[case], grid, cfg)?;
    Ok(v.remove(0))
}

/// w(t) = E[∫_0^τ e^{−λs} g(T(s)) ds]; the boundary value is always 0.
pub fn solve_rl_mc(p: &LinearProblem, grid: &[f64], cfg: &McConfig) -> Result<SolutionCurve> {
    if p.u_a != 0.0 {
        return Err(Error::domain(format!(
            "the RL problem has zero boundary value, got u_a = {}",
            p.u_a
        )));
    }
    if p.lambda == 0.0 && expected_exit_bound(&p.kernel, p.a, p.b).is_none() {
        log::warn!("(H1) fails for {}; the potential may be infinite", p.kernel.label());
    }
    solve_caputo_mc(p, grid, cfg)
}

/// E[e^{−λτ}] from t: exact sampler for the stable kernel, paths otherwise.
pub fn laplace_exit_mc(k: &JumpKernel, lambda: f64, t: f64, a: f64, cfg: &McConfig) -> Result<McEstimate> {
    check_cfg(cfg)?;
    check_lambda(lambda)?;
    if !(t >= a) {
        return Err(Error::domain(format!("need t >= a, got t = {t}, a = {a}")));
    }
    if t == a {
        return Ok(McEstimate::exact(1.0));
    }
    if let Some(beta) = k.stable_beta() {
        let chunks = map_chunks(cfg, |start, end| {
            let mut m = Moments::default();
            for p in start..end {
                let mut rng = path_rng(cfg.master_seed, p, STREAM_EXIT);
                let tau = sample_exit_time_stable_exact(beta, t, a, &mut rng);
                m.push(if lambda == 0.0 { 1.0 } else { (-lambda * tau).exp() });
            }
            m
        })?;
        let mut m = Moments::default();
        chunks.iter().for_each(|c| m.merge(c));
        return Ok(McEstimate::from_moments(&m, 0, 0));
    }
    let case = Case {
        lambda,
        g: Source::zero(),
        u_a: 1.0,
    };
    let curve = solve_caputo_mc_batch(k, (a, t), &[case], &[t], cfg)?;
    let p = curve[0].points[0];
    Ok(McEstimate {
        value: p.value,
        std_error: p.std_error,
        n_paths: p.n_paths,
        truncated_fraction: p.truncated_fraction,
        tie_fraction: 0.0,
    })
}

/// Exit times from t, one per path: exact draws for the stable kernel,
/// step-detected for other kernels (horizon-truncated paths report the horizon).
pub fn exit_times_mc(k: &JumpKernel, t: f64, a: f64, cfg: &McConfig) -> Result<Vec<f64>> {
    check_cfg(cfg)?;
    let stable = k.stable_beta();
    let opts = StepOptions {
        ds: cfg.ds,
        lambda: 0.0,
        horizon: cfg.horizon.unwrap_or_else(|| default_horizon(k, 0.0, a, t.max(a + 1e-300))),
        eps: eps_for(cfg, a, t),
        rule: cfg.rule,
    };
    if stable.is_none() && t > a {
        check_kernel_window(k, a, t)?;
    }
    let zero = Source::zero();
    let chunks = map_chunks(cfg, |start, end| {
        (start..end)
            .map(|p| match stable {
                Some(beta) => sample_exit_time_stable_exact(beta, t, a, &mut path_rng(cfg.master_seed, p, STREAM_EXIT)),
                None => {
                    let mut rng = path_rng(cfg.master_seed, p, STREAM_MAIN);
                    simulate_path(k, t, a, Mode::Killed, &opts, &zero, &mut rng).exit_time
                }
            })
            .collect::<Vec<f64>>()
    })?;
    Ok(chunks.concat())
}

// ---------------------------------------------------------------------------
// Mixed problem.

struct Mixed<'k> {
    d1: Driver<'k>,
    d2: Driver<'k>,
    grid: Vec<(f64, f64)>,
    disc: Discount,
    g: Source2,
    phi: Source,
    rule: StepRule,
    ds: f64,
    n_steps: usize,
}

#[derive(Clone, Copy, Default)]
struct MixedOutcome {
    value: f64,
    exited: bool,
    tie: bool,
}

impl Mixed<'_> {
    fn run_group(
        &self,
        idx: &[usize],
        r1: &mut impl rand::Rng,
        r2: &mut impl rand::Rng,
        out: &mut [MixedOutcome],
        g_prev: &mut [f64],
        active: &mut [bool],
    ) {
        for &j in idx {
            let (t1, t2) = self.grid[j];
            out[j] = MixedOutcome::default();
            g_prev[j] = self.g.eval(t1, t2);
            active[j] = true;
        }
        let mut left = idx.len();
        let (mut s1, mut s2) = (0.0, 0.0);
        for step in 0..self.n_steps {
            if left == 0 {
                break;
            }
            let lead = *idx.iter().find(|&&j| active[j]).expect("an active point exists");
            let (c1, c2) = (self.grid[lead].0 - s1, self.grid[lead].1 - s2);
            let n1 = s1 + self.d1.decrement(c1, r1);
            let n2 = s2 + self.d2.decrement(c2, r2);
            let full = self.disc.full(step);
            let cross = self.disc.crossing(step, self.rule);
            for &j in idx {
                if !active[j] {
                    continue;
                }
                let (t1, t2) = self.grid[j];
                let (a1, a2) = (t1 - n1, t2 - n2);
                let o = &mut out[j];
                if a1 <= 0.0 || a2 <= 0.0 {
                    o.value += cross * g_prev[j];
                    o.exited = true;
                    if a1 <= 0.0 {
                        o.tie = a2 <= 0.0;
                    } else {
                        let tau = crossing_time(step, self.ds, self.rule);
                        let before = t1 - s1;
                        // state of the killed coordinate at the estimated exit time
                        let phi = match self.rule {
                            StepRule::Trapezoid => 0.5 * (self.phi.eval(before) + self.phi.eval(a1)),
                            StepRule::LeftPoint => self.phi.eval(a1),
                        };
                        o.value += self.disc.exit_discount(tau) * phi;
                    }
                    active[j] = false;
                    left -= 1;
                } else {
                    let ga = self.g.eval(a1, a2);
                    o.value += full * combine(self.rule, g_prev[j], ga);
                    g_prev[j] = ga;
                }
            }
            s1 = n1;
            s2 = n2;
        }
    }
}

/// u(t1, t2) = E[e^{−λτ2} φ(T1(τ2)); τ2 < τ1] + E[∫_0^{τ1∧τ2} e^{−λs} g(T1(s), T2(s)) ds].
/// Same-step exits of both coordinates are given to the killed coordinate
/// and reported as the tie fraction.
pub fn solve_mixed_mc(p: &MixedProblem, grid: &[(f64, f64)], cfg: &McConfig) -> Result<SolutionCurve> {
    check_cfg(cfg)?;
    check_lambda(p.lambda)?;
    let phi0 = p.phi.eval(0.0);
    if phi0.abs() > 1e-12 {
        return Err(Error::domain(format!("boundary data must vanish at 0, got phi(0) = {phi0}")));
    }
    for &(t1, t2) in grid {
        if !(t1 >= 0.0 && t1 <= p.b1 && t2 >= 0.0 && t2 <= p.b2) {
            return Err(Error::domain(format!(
                "grid point ({t1}, {t2}) lies outside [0, {}] x [0, {}]",
                p.b1, p.b2
            )));
        }
    }
    let top1 = grid.iter().map(|x| x.0).fold(0.0, f64::max);
    let top2 = grid.iter().map(|x| x.1).fold(0.0, f64::max);
    check_kernel_window(&p.kernel1, 0.0, top1)?;
    check_kernel_window(&p.kernel2, 0.0, top2)?;
    let horizon = cfg.horizon.unwrap_or_else(|| {
        default_horizon(&p.kernel1, p.lambda, 0.0, p.b1).min(default_horizon(&p.kernel2, p.lambda, 0.0, p.b2))
    });

    let interior: Vec<(f64, f64)> = grid.iter().copied().filter(|&(a, b)| a > 0.0 && b > 0.0).collect();
    let engine = Mixed {
        d1: Driver::new(&p.kernel1, cfg.ds, cfg.eps.unwrap_or(1e-4 * p.b1)),
        d2: Driver::new(&p.kernel2, cfg.ds, cfg.eps.unwrap_or(1e-4 * p.b2)),
        grid: interior.clone(),
        disc: Discount::new(p.lambda, cfg.ds),
        g: p.g.clone(),
        phi: p.phi.clone(),
        rule: cfg.rule,
        ds: cfg.ds,
        n_steps: (horizon / cfg.ds).ceil() as usize,
    };
    let n = interior.len();
    let groups: Vec<Vec<usize>> = if engine.d1.shared() && engine.d2.shared() {
        vec![(0..n).collect()]
    } else {
        (0..n).map(|j| vec![j]).collect()
    };

    let chunks = map_chunks(cfg, |start, end| {
        let mut out = vec![MixedOutcome::default(); n];
        let mut g_prev = vec![0.0; n];
        let mut active = vec![false; n];
        let mut moments = vec![Moments::default(); n];
        let mut truncated = vec![0u64; n];
        let mut ties = vec![0u64; n];
        for path in start..end {
            for group in &groups {
                let mut r1 = path_rng(cfg.master_seed, path, STREAM_MAIN);
                let mut r2 = path_rng(cfg.master_seed, path, STREAM_SECOND);
                engine.run_group(group, &mut r1, &mut r2, &mut out, &mut g_prev, &mut active);
            }
            for j in 0..n {
                moments[j].push(out[j].value);
                truncated[j] += u64::from(!out[j].exited);
                ties[j] += u64::from(out[j].tie);
            }
        }
        (moments, truncated, ties)
    })?;
    let mut moments = vec![Moments::default(); n];
    let mut truncated = vec![0u64; n];
    let mut ties = vec![0u64; n];
    for (m, tr, ti) in &chunks {
        for j in 0..n {
            moments[j].merge(&m[j]);
            truncated[j] += tr[j];
            ties[j] += ti[j];
        }
    }
    let mut next = 0;
    let points = grid
        .iter()
        .map(|&(t1, t2)| {
            if t1 <= 0.0 {
                CurvePoint::exact(t1, Some(t2), 0.0)
            } else if t2 <= 0.0 {
                CurvePoint::exact(t1, Some(t2), p.phi.eval(t1))
            } else {
                let j = next;
                next += 1;
                McEstimate::from_moments(&moments[j], truncated[j], ties[j]).point(t1, Some(t2))
            }
        })
        .collect();
    Ok(SolutionCurve::new("mc", points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_stable;

    fn small() -> McConfig {
        McConfig {
            n_paths: 2000,
            ds: 0.01,
            ..McConfig::default()
        }
    }

    fn problem(lambda: f64, g: Source, u_a: f64) -> LinearProblem {
        LinearProblem {
            kernel: kernel_stable(0.5).unwrap(),
            lambda,
            g,
            u_a,
            a: 0.0,
            b: 1.0,
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let c = solve_rl_mc(&problem(1.0, Source::zero(), 0.0), &[0.5, 1.0], &small()).unwrap();
        for p in &c.points {
            assert_eq!(p.value, 0.0);
            assert_eq!(p.std_error, 0.0);
        }
    }

    #[test]
    fn boundary_is_exact() {
        let c = solve_caputo_mc(&problem(1.0, Source::sin(1.0), 0.7), &[0.0, 0.5], &small()).unwrap();
        assert_eq!(c.points[0].value, 0.7);
        assert_eq!(c.points[0].std_error, 0.0);
    }

    #[test]
    fn bridge_under_common_numbers() {
        let (lambda, u_a) = (1.3, 0.8);
        let g = Source::sin(2.0);
        let cfg = small();
        let grid = [0.2, 0.6, 1.0];
        let cap = solve_caputo_mc(&problem(lambda, g.clone(), u_a), &grid, &cfg).unwrap();
        let rl = solve_rl_mc(&problem(lambda, g.minus_constant(lambda * u_a), 0.0), &grid, &cfg).unwrap();
        for (c, r) in cap.points.iter().zip(&rl.points) {
            assert!((c.value - u_a - r.value).abs() < 1e-12);
        }
    }

    #[test]
    fn worker_count_does_not_change_numbers() {
        let p = problem(1.0, Source::sin(1.0), 1.0);
        let one = solve_caputo_mc(&p, &[0.5, 1.0], &McConfig { workers: Some(1), ..small() }).unwrap();
        let two = solve_caputo_mc(&p, &[0.5, 1.0], &McConfig { workers: Some(3), ..small() }).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn laplace_exit_at_zero_lambda() {
        let k = kernel_stable(0.5).unwrap();
        let e = laplace_exit_mc(&k, 0.0, 1.0, 0.0, &small()).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn mixed_rejects_bad_boundary() {
        let k = kernel_stable(0.5).unwrap();
        let p = MixedProblem {
            kernel1: k.clone(),
            kernel2: k,
            lambda: 1.0,
            g: Source2::constant(0.0),
            phi: Source::constant(1.0),
            b1: 1.0,
            b2: 1.0,
        };
        assert!(solve_mixed_mc(&p, &[(0.5, 0.5)], &small()).is_err());
    }

    #[test]
    fn mixed_zero_data() {
        let k = kernel_stable(0.5).unwrap();
        let p = MixedProblem {
            kernel1: k.clone(),
            kernel2: k,
            lambda: 1.0,
            g: Source2::constant(0.0),
            phi: Source::zero(),
            b1: 1.0,
            b2: 1.0,
        };
        let c = solve_mixed_mc(&p, &[(0.5, 0.5), (0.0, 0.3), (0.4, 0.0)], &small()).unwrap();
        assert!(c.points.iter().all(|p| p.value == 0.0 && p.std_error == 0.0));
    }
}
