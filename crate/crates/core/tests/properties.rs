use proptest::prelude::*;

use fracflow::kernels::{kernel_multi_term_const, kernel_stable, kernel_variable_order, stable_tail};
use fracflow::solve_mc::{solve_caputo_mc, LinearProblem, McConfig};
use fracflow::solve_quad::solve_caputo_closed_form;
use fracflow::source::Source;
use fracflow::special::{mittag_leffler, stable_cdf, stable_sf, StableParams};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // E_α(−x) is completely monotone for α in (0, 1]: in (0, 1] and decreasing
    #[test]
    fn ml_negative_axis_is_a_decreasing_probability(alpha in 0.05f64..1.0, x in 0.0f64..40.0, dx in 1e-3f64..5.0) {
        let e1 = mittag_leffler(alpha, -x).unwrap();
        let e2 = mittag_leffler(alpha, -(x + dx)).unwrap();
        prop_assert!(e1 > 0.0 && e1 <= 1.0 + 1e-14);
        prop_assert!(e2 <= e1 + 1e-14);
    }

    #[test]
    fn stable_cdf_and_sf_are_complementary(beta in 0.05f64..0.95, x in 1e-3f64..1e3) {
        let p = StableParams::new(beta).unwrap();
        let f = stable_cdf(p, x);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f + stable_sf(p, x) - 1.0).abs() < 1e-12);
        prop_assert!(stable_cdf(p, 1.5 * x) >= f - 1e-15);
    }

    #[test]
    fn jump_intensity_is_nonnegative_and_enveloped(b1 in 0.1f64..0.9, b2 in 0.1f64..0.9, w in 0.0f64..3.0, t in 0.0f64..1.0, r in 1e-6f64..1e3) {
        let k = kernel_multi_term_const(&[1.0, w], &[b1, b2]).unwrap();
        prop_assert!(k.nu(t, r) >= 0.0);
        prop_assert!(k.envelope(r) >= k.nu(t, r) * (1.0 - 1e-12));
        let v = kernel_variable_order(std::sync::Arc::new(move |s: f64| b1 + 0.05 * s), (0.05, 0.96), (0.0, 1.0)).unwrap();
        prop_assert!(v.nu(t, r) >= 0.0);
        prop_assert!(v.envelope(r) >= v.nu(t, r) * (1.0 - 1e-12));
    }

    // the Caputo solution is affine in (u_a, g)
    #[test]
    fn closed_form_is_linear(beta in 0.1f64..0.95, lambda in 0.0f64..3.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, u1 in -2.0f64..2.0, u2 in -2.0f64..2.0) {
        let grid = [0.2, 0.7, 1.5];
        let g1 = [c1, 1.0, -0.5];
        let g2 = [0.3, c2, 2.0];
        let gs: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| x + y).collect();
        let a = solve_caputo_closed_form(beta, lambda, &Source::poly(&g1), u1, 0.0, &grid).unwrap().values();
        let b = solve_caputo_closed_form(beta, lambda, &Source::poly(&g2), u2, 0.0, &grid).unwrap().values();
        let s = solve_caputo_closed_form(beta, lambda, &Source::poly(&gs), u1 + u2, 0.0, &grid).unwrap().values();
        for i in 0..grid.len() {
            prop_assert!((a[i] + b[i] - s[i]).abs() <= 1e-10 * (1.0 + s[i].abs()));
        }
    }
}

#[test]
fn tail_mass_integrates_the_intensity() {
    let kernels = [
        kernel_stable(0.4).unwrap(),
        kernel_multi_term_const(&[1.0, 0.5], &[0.3, 0.8]).unwrap(),
        kernel_variable_order(std::sync::Arc::new(|t: f64| 0.3 + 0.4 * t), (0.3, 0.7), (0.0, 1.0)).unwrap(),
    ];
    for k in &kernels {
        for t in [0.0, 0.5, 1.0] {
            for x in [0.01, 0.3, 2.0] {
                // ∫_x^∞ ν dr in the variable r = x e^y; the integrand decays like e^{−0.3 y}
                let mass = simpson(|y: f64| k.nu(t, x * y.exp()) * x * y.exp(), 0.0, 120.0, 40_000);
                let want = k.tail_mass(t, x);
                assert!((mass - want).abs() < 1e-7 * want, "{} t {t} x {x}: {mass} vs {want}", k.label());
            }
        }
    }
    // stable tail r^{−β}/Γ(1−β)
    let k = kernel_stable(0.4).unwrap();
    assert!((k.tail_mass(0.0, 2.0) - stable_tail(0.4, 2.0)).abs() < 1e-15);
}

#[test]
fn mc_is_reproducible_and_worker_independent() {
    let p = LinearProblem {
        kernel: kernel_stable(0.6).unwrap(),
        lambda: 1.0,
        g: Source::sin(1.0),
        u_a: 1.0,
        a: 0.0,
        b: 1.0,
    };
    let grid = [0.25, 0.5, 1.0];
    let run = |workers| {
        let cfg = McConfig { n_paths: 3000, master_seed: 7, workers: Some(workers), ..Default::default() };
        fracflow::solve_mc::with_workers(Some(workers), || solve_caputo_mc(&p, &grid, &cfg))
            .unwrap()
            .unwrap()
            .to_csv_string()
            .unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(2));
    let other = McConfig { n_paths: 3000, master_seed: 8, ..Default::default() };
    assert_ne!(one, solve_caputo_mc(&p, &grid, &other).unwrap().to_csv_string().unwrap());
}
