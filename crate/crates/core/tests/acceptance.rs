//! Acceptance criteria 1-12, each at its stated tolerance.
//!
//! Runs as a plain binary: every criterion prints one PASS/FAIL line with
//! the achieved figure, and the process fails if any criterion fails.

use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use fracflow::curve::SolutionCurve;
use fracflow::kernels::{apply_caputo_operator_tol, kernel_distributed, kernel_multi_term_const, kernel_stable, kernel_variable_order};
use fracflow::paths::{exit_time_density_stable, path_rng, sample_exit_time_stable_exact, STREAM_EXIT};
use fracflow::quad::{integrate, integrate_real_line, Tolerance};
use fracflow::solve_mc::{
    laplace_exit_mc, solve_caputo_mc, solve_caputo_mc_batch, solve_mixed_mc, solve_rl_mc, Case, LinearProblem, McConfig,
    MixedProblem,
};
use fracflow::solve_quad::{laplace_exit_quad, solve_caputo_closed_form, solve_caputo_quad, solve_mixed_quad, solve_rl_quad};
use fracflow::source::{Source, Source2};
use fracflow::special::{check_ml_stable_identity, gamma, mittag_leffler, stable_density, stable_sf, StableParams};

type Outcome = Result<String, String>;

const PATHS: u64 = 100_000;
const SEED: u64 = 20_240_917;

fn grid10() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn battery() -> Vec<Case> {
    let mut v = Vec::new();
    for lambda in [0.0, 1.0] {
        for u_a in [0.0, 1.0] {
            for g in [Source::zero(), Source::constant(1.0), Source::sin(1.0)] {
                v.push(Case { lambda, g, u_a });
            }
        }
    }
    v
}

fn mc() -> McConfig {
    McConfig { n_paths: PATHS, master_seed: SEED, ..McConfig::default() }
}

/// Below this the spread is rounding noise, not sampling noise.
const ROUNDING: f64 = 1e-12;

/// |Δ|/SE; an estimate with no spread must match to rounding.
fn z(est: f64, se: f64, oracle: f64) -> f64 {
    let d = (est - oracle).abs();
    if se > ROUNDING {
        d / se
    } else if d <= ROUNDING * (1.0 + oracle.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

fn max_z(mc: &SolutionCurve, oracle: &SolutionCurve) -> f64 {
    mc.points.iter().zip(&oracle.points).map(|(p, q)| z(p.value, p.std_error, q.value)).fold(0.0, f64::max)
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c1() -> Outcome {
    let (mut dq, mut wz, mut wd) = (0.0f64, 0.0f64, 0.0f64);
    for beta in [0.3, 0.5, 0.7] {
        let k = kernel_stable(beta).unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            let ml = mittag_leffler(beta, -lambda).unwrap();
            dq = dq.max((laplace_exit_quad(beta, lambda, 1.0, 0.0).unwrap() - ml).abs());
            let e = laplace_exit_mc(&k, lambda, 1.0, 0.0, &mc()).unwrap();
            wz = wz.max(z(e.value, e.std_error, ml));
            wd = wd.max((e.value - ml).abs());
        }
    }
    check(dq <= 1e-6 && wz <= 3.0 && wd <= 5e-3, format!("quad err {dq:.2e} (<= 1e-6), MC max z {wz:.2} (<= 3), MC max err {wd:.2e} (<= 5e-3)"))
}

fn c2() -> Outcome {
    let mut worst = 0.0f64;
    for beta in [0.4, 0.6] {
        for u in [0.1, 1.0, 10.0] {
            worst = worst.max(check_ml_stable_identity(beta, u).unwrap().abs());
        }
    }
    check(worst < 1e-6, format!("max residual {worst:.2e} (< 1e-6)"))
}

fn c3() -> Outcome {
    let grid = grid10();
    let mut worst = 0.0f64;
    for beta in [0.3, 0.5, 0.7] {
        for c in battery() {
            let q = solve_caputo_quad(beta, c.lambda, &c.g, c.u_a, 0.0, &grid).unwrap();
            let cf = solve_caputo_closed_form(beta, c.lambda, &c.g, c.u_a, 0.0, &grid).unwrap();
            for (p, o) in q.points.iter().zip(&cf.points) {
                let d = (p.value - o.value).abs();
                worst = worst.max(if o.value == 0.0 { d } else { d / o.value.abs() });
            }
        }
    }
    // spot values that need no solver: u_a E_β(−λt^β) and, for λ = 0, g = 1, t^β/Γ(1+β)
    let cf = solve_caputo_closed_form(0.5, 1.0, &Source::zero(), 1.0, 0.0, &[1.0]).unwrap().values()[0];
    let pin1 = (cf - 0.427_583_576_155_807).abs();
    let cf = solve_caputo_closed_form(0.3, 0.0, &Source::constant(1.0), 0.0, 0.0, &[0.7]).unwrap().values()[0];
    let pin2 = (cf - 0.7f64.powf(0.3) / gamma(1.3)).abs();
    check(
        worst <= 1e-3 && pin1 < 1e-12 && pin2 < 1e-12,
        format!("max rel err {worst:.2e} (<= 1e-3); closed-form pins {pin1:.1e}, {pin2:.1e}"),
    )
}

fn c4() -> Outcome {
    let grid = grid10();
    let cases = battery();
    let k = kernel_stable(0.5).unwrap();
    let oracle: Vec<SolutionCurve> =
        cases.iter().map(|c| solve_caputo_closed_form(0.5, c.lambda, &c.g, c.u_a, 0.0, &grid).unwrap()).collect();
    let stats = |ds: f64| {
        let runs = solve_caputo_mc_batch(&k, (0.0, 1.0), &cases, &grid, &McConfig { ds, ..mc() }).unwrap();
        let (mut worst, mut sum, mut n) = (0.0f64, 0.0, 0.0);
        for (r, o) in runs.iter().zip(&oracle) {
            worst = worst.max(max_z(r, o));
            for (p, q) in r.points.iter().zip(&o.points) {
                if p.std_error > ROUNDING {
                    sum += ((p.value - q.value) / p.std_error).powi(2);
                    n += 1.0;
                }
            }
        }
        (worst, (sum / n).sqrt())
    };
    let (z0, r0) = stats(2e-3);
    let (z1, r1) = stats(1e-3);
    check(
        z0 <= 3.0 && z1 <= 3.0 && r1 <= r0.max(1.5),
        format!("ds 2e-3: max z {z0:.2}, rms z {r0:.2}; ds 1e-3: max z {z1:.2}, rms z {r1:.2} (<= max(rms at ds, 1.5))"),
    )
}

fn c5() -> Outcome {
    let p = StableParams::new(0.5).unwrap();
    let mut dens = 0.0f64;
    for x in [0.1f64, 0.5, 1.0, 2.0, 10.0] {
        let levy = 0.5 / std::f64::consts::PI.sqrt() * x.powf(-1.5) * (-0.25 / x).exp();
        dens = dens.max((stable_density(p, x) / levy - 1.0).abs());
    }
    let mut lap = 0.0f64;
    for beta in [0.3, 0.5, 0.7, 0.9] {
        let p = StableParams::new(beta).unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            // ∫ e^{−λx} w(x) dx in the variable v = ln x
            let f = |v: f64| {
                let x = v.exp();
                let e = (-lambda * x).exp();
                if e == 0.0 {
                    0.0
                } else {
                    x * e * stable_density(p, x)
                }
            };
            let est = integrate_real_line(f, 0.0, 2.0, Tolerance::new(1e-13, 1e-11)).unwrap().value;
            lap = lap.max((est - (-lambda.powf(beta)).exp()).abs());
        }
    }
    check(dens <= 1e-8 && lap <= 1e-6, format!("density rel err {dens:.2e} (<= 1e-8), Laplace err {lap:.2e} (<= 1e-6)"))
}

fn c6() -> Outcome {
    let grid = [0.3, 0.6, 1.0];
    let g = Source::sin(1.0);
    let oracle = solve_caputo_closed_form(0.5, 1.0, &g, 1.0, 0.0, &grid).unwrap();
    let kernels = [
        ("multi-term", kernel_multi_term_const(&[1.0], &[0.5]).unwrap()),
        ("variable-order", kernel_variable_order(Arc::new(|_| 0.5), (0.5, 0.5), (0.0, 1.0)).unwrap()),
        (
            "distributed",
            kernel_distributed(Arc::new(|_, _| 1.0), Arc::new(|s, _| s), &[(0.5, 1.0)], (0.0, 1.0)).unwrap(),
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, kernel) in kernels {
        let p = LinearProblem { kernel, lambda: 1.0, g: g.clone(), u_a: 1.0, a: 0.0, b: 1.0 };
        let w = max_z(&solve_caputo_mc(&p, &grid, &mc()).unwrap(), &oracle);
        ok &= w <= 3.0;
        parts.push(format!("{name} max z {w:.2}"));
    }
    check(ok, format!("{} (<= 3)", parts.join(", ")))
}

fn c7() -> Outcome {
    let grid = grid10();
    let mut worst = 0.0f64;
    for beta in [0.3, 0.5, 0.7] {
        for c in battery() {
            let u = solve_caputo_quad(beta, c.lambda, &c.g, c.u_a, 0.0, &grid).unwrap();
            let shifted = c.g.minus_constant(c.lambda * c.u_a);
            let w = solve_rl_quad(beta, c.lambda, &shifted, 0.0, &grid).unwrap();
            for (p, q) in u.points.iter().zip(&w.points) {
                worst = worst.max((p.value - c.u_a - q.value).abs());
            }
        }
    }
    check(worst <= 1e-8, format!("max abs diff {worst:.2e} (<= 1e-8)"))
}

fn c8() -> Outcome {
    let (beta, lambda, u_a) = (0.5, 1.0, 1.0);
    let g = Source::sin(1.0);
    let k = kernel_stable(beta).unwrap();
    let u = |s: f64| {
        if s <= 0.0 {
            u_a
        } else {
            solve_caputo_quad(beta, lambda, &g, u_a, 0.0, &[s]).unwrap().values()[0]
        }
    };
    let mut worst = 0.0f64;
    // every point of the 10-point grid on (0, 1] satisfies t >= a + 0.1 (b − a)
    for t in grid10() {
        // the operator is the generator −D*
        let tol = Tolerance::new(1e-8, 1e-7).with_max_intervals(2000);
        let op = apply_caputo_operator_tol(&k, &u, 0.0, t, tol).unwrap();
        worst = worst.max((-op + lambda * u(t) - g.eval(t)).abs() / (1.0 + g.eval(t).abs()));
    }
    check(worst <= 1e-2, format!("max scaled residual {worst:.2e} (<= 1e-2)"))
}

fn c9() -> Outcome {
    // φ(t) = t(1 − t)
    let phi = Source::poly(&[0.0, 1.0, -1.0]);
    let g = Source2::constant(1.0);
    let p = MixedProblem {
        kernel1: kernel_stable(0.5).unwrap(),
        kernel2: kernel_stable(0.5).unwrap(),
        lambda: 1.0,
        g: g.clone(),
        phi: phi.clone(),
        b1: 1.0,
        b2: 1.0,
    };
    let interior = [(0.5, 0.5), (1.0, 1.0), (1.0, 0.5)];
    let m = solve_mixed_mc(&p, &interior, &mc()).unwrap();
    let q = solve_mixed_quad(0.5, 0.5, 1.0, &g, &phi, &interior).unwrap();
    let wz = max_z(&m, &q);
    // u = 0 on t1 = 0 and u = φ(t1) on t2 = 0
    let boundary = [(0.0, 0.5), (0.0, 1.0), (0.25, 0.0), (0.5, 0.0), (1.0, 0.0)];
    let exact = [0.0, 0.0, 0.1875, 0.25, 0.0];
    let bm = solve_mixed_mc(&p, &boundary, &mc()).unwrap();
    let bq = solve_mixed_quad(0.5, 0.5, 1.0, &g, &phi, &boundary).unwrap();
    let mut bd = 0.0f64;
    for i in 0..boundary.len() {
        bd = bd.max((bm.points[i].value - exact[i]).abs()).max((bq.points[i].value - exact[i]).abs());
        bd = bd.max(bm.points[i].std_error);
    }
    check(wz <= 3.0 && bd == 0.0, format!("interior max z {wz:.2} (<= 3), boundary max err {bd:.1e} (= 0)"))
}

fn c10() -> Outcome {
    let mut norm = 0.0f64;
    let mut ks = 0.0f64;
    let mut cross = 0.0f64;
    for beta in [0.3, 0.7] {
        let mu_u = |v: f64| {
            let s = v.exp();
            let m = exit_time_density_stable(beta, 1.0, 0.0, s).unwrap();
            if m == 0.0 {
                0.0
            } else {
                s * m
            }
        };
        let tol = Tolerance::new(1e-13, 1e-11);
        norm = norm.max((integrate_real_line(mu_u, 0.0, 2.0, tol).unwrap().value - 1.0).abs());
        // τ = ((t − a)/W)^β, so P(τ <= s) = P(W >= (t − a) s^{−1/β})
        let p = StableParams::new(beta).unwrap();
        let cdf = |s: f64| stable_sf(p, s.powf(-1.0 / beta));
        // the μ-implied CDF agrees with it
        for (s1, s2) in [(0.2, 0.8), (0.8, 1.5), (1.5, 4.0)] {
            let m = integrate(mu_u, f64::ln(s1), f64::ln(s2), tol).unwrap().value;
            cross = cross.max((m - (cdf(s2) - cdf(s1))).abs());
        }
        let mut taus: Vec<f64> = (0..PATHS)
            .map(|i| sample_exit_time_stable_exact(beta, 1.0, 0.0, &mut path_rng(SEED, i, STREAM_EXIT)))
            .collect();
        taus.sort_by(f64::total_cmp);
        let n = taus.len() as f64;
        for (i, &s) in taus.iter().enumerate() {
            let f = cdf(s);
            ks = ks.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
        }
    }
    check(
        norm <= 1e-6 && ks <= 1e-2 && cross <= 1e-8,
        format!("normalisation err {norm:.2e} (<= 1e-6), KS {ks:.2e} (<= 1e-2), density vs CDF {cross:.1e}"),
    )
}

fn c11() -> Outcome {
    let (beta, lambda) = (0.5, 1.0);
    let g = Source::piecewise(&[0.5], &[0.0, 1.0]).unwrap();
    let grid = grid10();
    let q = solve_rl_quad(beta, lambda, &g, 0.0, &grid).unwrap();
    let p = LinearProblem { kernel: kernel_stable(beta).unwrap(), lambda, g: g.clone(), u_a: 0.0, a: 0.0, b: 1.0 };
    let wz = max_z(&solve_rl_mc(&p, &grid, &mc()).unwrap(), &q);
    // a bounded source gives a Hölder-β solution: |u(t + h) − u(t)| <= 2 sup|g| h^β/Γ(1 + β)
    let bound = |h: f64| 2.0 * h.powf(beta) / gamma(1.0 + beta);
    let mut ratio = 0.0f64;
    let mut pts = vec![0.0];
    pts.extend(&grid);
    let mut vals = vec![0.0];
    vals.extend(q.values());
    for i in 1..pts.len() {
        ratio = ratio.max((vals[i] - vals[i - 1]).abs() / bound(pts[i] - pts[i - 1]));
    }
    for delta in [1e-2, 1e-3, 1e-4] {
        let c = solve_rl_quad(beta, lambda, &g, 0.0, &[0.5 - delta, 0.5 + delta]).unwrap().values();
        ratio = ratio.max((c[1] - c[0]).abs() / bound(2.0 * delta));
    }
    check(wz <= 3.0 && ratio <= 1.0, format!("MC vs quad max z {wz:.2} (<= 3), jump/bound {ratio:.3} (<= 1)"))
}

fn c12() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let cfg = dir.path().join("v.json");
    std::fs::write(&cfg, r#"{"schema_version": 1, "mode": "quick", "n_paths": 1000, "master_seed": 5}"#).unwrap();
    let run = |workers: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_fracflow"))
            .args(["validate", "--config", cfg.to_str().unwrap(), "--workers", workers])
            .env_remove("FRACFLOW_WORKERS")
            .output()
            .unwrap();
        (o.status.code(), o.stdout)
    };
    let (c1, r1) = run("1");
    let (c2, r2) = run("1");
    let (c3, r3) = run("2");
    let ok = !r1.is_empty() && r1 == r2 && r1 == r3 && c1 == c2 && c1 == c3 && matches!(c1, Some(0) | Some(3));
    check(ok, format!("{} report bytes, repeat identical {}, workers 1 vs 2 identical {}", r1.len(), r1 == r2, r1 == r3))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Laplace transform of the exit time", c1),
        ("Mittag-Leffler / stable identity", c2),
        ("Caputo quadrature vs closed form", c3),
        ("Caputo MC convergence", c4),
        ("stable density pins", c5),
        ("kernel reductions", c6),
        ("RL / Caputo bridge", c7),
        ("operator residual", c8),
        ("mixed 2-D problem", c9),
        ("exit-time law", c10),
        ("discontinuous source", c11),
        ("determinism", c12),
    ];
    // `cargo test --test acceptance -- 3 8` runs a subset
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {:>2} PASS {name}: {msg} [{secs:.1} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {msg} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
