//! Cross-checks against independently computed values and between the
//! crate's own independent routes.

use std::f64::consts::{E, PI};

use lunepv_core::mc_oracle::mc_estimate_f_with;
use lunepv_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fp(a: f64) -> FermiParameter {
    FermiParameter::new(a).unwrap()
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1.0)
}

// Reference values from an independent double-precision implementation
// (adaptive QUADPACK on the same reduction, separately coded).
#[test]
fn inner_reference_values() {
    let cfg = QuadConfig::default();
    let cases = [
        (2.0, 0.0, 0.5, 2.347_443_275_446_31),
        (2.0, 0.0, -0.5, -0.862_168_778_331_005_8),
        (1.2, 0.3, 0.5, 2.995_289_559_662_328),
        (1.2, 0.3, -0.5, -0.924_935_471_413_949_2),
    ];
    for (x, y, c, want) in cases {
        let r = inner_numeric(x, y, c, &cfg).unwrap();
        assert!(r.converged);
        assert!(
            close(r.value, want, 1e-9),
            "I({x}, {y}; {c}) = {} want {want}",
            r.value
        );
    }
}

#[test]
fn j_reference_values() {
    let cfg = QuadConfig::default();
    let t = 0.75f64.sqrt();
    let cases = [
        (1.0, 0.2, 3.419_894_716_875_2),
        (0.6, 0.0, 1.088_698_333_258_7),
        (2.0, 0.5, 3.001_827_736_119_2),
        (0.01, t, 0.935_246_087_06),
    ];
    for (x, y, want) in cases {
        let r = j_weighted(x, y, 0.5, &cfg).unwrap();
        assert!(
            close(r.value, want, 1e-9),
            "J({x}, {y}) = {} want {want}",
            r.value
        );
    }
}

#[test]
fn j_routes_agree_on_random_points() {
    let cfg = QuadConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 24 {
        let x: f64 = rng.gen_range(-2.5..2.5);
        let y: f64 = rng.gen_range(-1.3..1.3);
        let a: f64 = rng.gen_range(0.05..0.95);
        if x.abs() < 0.05 {
            continue;
        }
        let disk = j_weighted(x, y, a, &cfg).unwrap();
        let slab = j_moon_slab(x, y, a, &cfg).unwrap();
        let slack = disk.abs_err + slab.abs_err + 1e-12;
        assert!(
            (disk.value - slab.value).abs() <= slack,
            "J({x}, {y}; {a}): disks {disk:?} slabs {slab:?}"
        );
        checked += 1;
    }
}

#[test]
fn j_is_odd_in_x_and_even_in_y() {
    let cfg = QuadConfig::default();
    for (x, y, a) in [(0.7, 0.4, 0.3), (1.6, -0.2, 0.8), (0.2, 0.9, 0.5)] {
        let j = j_weighted(x, y, a, &cfg).unwrap();
        let mx = j_weighted(-x, y, a, &cfg).unwrap();
        let my = j_weighted(x, -y, a, &cfg).unwrap();
        assert!((j.value + mx.value).abs() <= j.abs_err + mx.abs_err + 1e-12);
        assert!((j.value - my.value).abs() <= j.abs_err + my.abs_err + 1e-12);
    }
}

type Known = (Box<dyn Fn(f64) -> f64>, f64, f64, f64);

#[test]
fn error_estimates_are_honest() {
    let cases: Vec<Known> = vec![
        (Box::new(|x| x * x), 0.0, 1.0, 1.0 / 3.0),
        (Box::new(f64::exp), 0.0, 1.0, E - 1.0),
        (Box::new(f64::sin), 0.0, PI, 2.0),
        (Box::new(|x| 1.0 / (1.0 + x * x)), 0.0, 1.0, PI / 4.0),
        (Box::new(f64::sqrt), 0.0, 1.0, 2.0 / 3.0),
        (Box::new(f64::ln), 0.0, 1.0, -1.0),
        (Box::new(|x| 1.0 / x.sqrt()), 0.0, 1.0, 2.0),
        (
            Box::new(|x| x * (-x).exp()),
            0.0,
            10.0,
            1.0 - 11.0 * (-10.0f64).exp(),
        ),
        (
            Box::new(|x| 1.0 / (1.0 + 25.0 * x * x)),
            -1.0,
            1.0,
            0.4 * 5.0f64.atan(),
        ),
        (Box::new(|x| (x - 1.0 / 3.0).abs()), 0.0, 1.0, 5.0 / 18.0),
        (
            Box::new(|x| 1.0 / (x * x + 1e-2)),
            -1.0,
            1.0,
            20.0 * 10.0f64.atan(),
        ),
        (Box::new(|x| x.sin().powi(2)), 0.0, 2.0 * PI, PI),
        (Box::new(f64::cbrt), 0.0, 1.0, 0.75),
        (Box::new(|x| 1.0 / x), 1.0, 2.0, 2.0f64.ln()),
        (
            Box::new(|x| (1.0 + x).ln()),
            0.0,
            1.0,
            2.0 * 2.0f64.ln() - 1.0,
        ),
        (Box::new(|x| x * x.sin()), 0.0, PI, PI),
        (
            Box::new(|x| (-x).exp() * (5.0 * x).cos()),
            0.0,
            1.0,
            ((-1.0f64).exp() * (5.0 * 5.0f64.sin() - 5.0f64.cos()) + 1.0) / 26.0,
        ),
        (
            Box::new(|x| 1.0 / (2.0 + x.cos())),
            0.0,
            2.0 * PI,
            2.0 * PI / 3.0f64.sqrt(),
        ),
        (Box::new(|x| (1.0 - x * x).sqrt()), -1.0, 1.0, PI / 2.0),
        (
            Box::new(|x| x.powi(7) - 2.0 * x.powi(3)),
            -1.0,
            2.0,
            (256.0 - 1.0) / 8.0 - 0.5 * (16.0 - 1.0),
        ),
    ];
    let cfg = QuadConfig::with_tol(1e-7, 1e-7);
    let mut honest = 0;
    for (i, (f, lo, hi, exact)) in cases.iter().enumerate() {
        let r = integrate_adaptive(f, Interval::new(*lo, *hi).unwrap(), &cfg).unwrap();
        let err = (r.value - exact).abs();
        if err <= 10.0 * r.abs_err {
            honest += 1;
        } else {
            eprintln!(
                "case {i}: true error {err:e} > 10 x reported {:e}",
                r.abs_err
            );
        }
    }
    assert!(
        honest * 100 >= 95 * cases.len(),
        "{honest}/{} honest",
        cases.len()
    );
}

#[test]
fn mc_inner_brackets_quadrature() {
    let cfg = QuadConfig::default();
    let q = inner_numeric(2.0, 0.0, 0.5, &cfg).unwrap();
    let mc = mc_estimate_inner(2.0, 0.0, 0.5, 10_000_000, 42).unwrap();
    assert!(
        (mc.mean - q.value).abs() <= 4.0 * mc.std_err,
        "{mc:?} vs {q:?}"
    );
}

#[test]
fn mc_std_err_scales_as_inverse_root() {
    let ns = [10_000u64, 100_000, 1_000_000];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| mc_estimate_inner(1.2, 0.3, -0.5, n, 9).unwrap().std_err)
        .collect();
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 3.0, ly.iter().sum::<f64>() / 3.0);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope + 0.5).abs() <= 0.1, "slope {slope}");
}

#[test]
fn mc_is_reproducible_across_thread_counts() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| mc_estimate_inner(0.8, 0.1, 0.3, 200_000, 5).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.mean.to_bits(), four.mean.to_bits());
    assert_eq!(one.std_err.to_bits(), four.std_err.to_bits());
    let other_seed = mc_estimate_inner(0.8, 0.1, 0.3, 200_000, 6).unwrap();
    assert_ne!(one.mean, other_seed.mean);
}

#[test]
fn truncated_f_matches_windowed_mc() {
    // both sides exclude | |y| - t | < w0, where the integrand stays bounded
    let a = fp(0.5);
    let touch = TouchConfig {
        final_window: 2f64.powi(-9),
        windows: 3,
    };
    let r = f_eval_with(a, &QuadConfig::with_tol(1e-3, 1e-3), true, &touch).unwrap();
    let d = r.touch.unwrap();
    let (s0, e0) = (d.partial_sums[0], d.partial_errs[0]);
    let opts = McFOptions {
        exclude_window: Some(touch.initial_window()),
        inner_draws: 1,
    };
    let mc = mc_estimate_f_with(a, 2_000_000, 17, &opts).unwrap();
    let sigma = (mc.std_err.powi(2) + e0.powi(2)).sqrt();
    assert!(
        (mc.mean - s0).abs() <= 4.0 * sigma,
        "quadrature {s0} ± {e0}, MC {mc:?}"
    );
}

#[test]
fn symmetric_and_direct_evaluations_agree() {
    let cfg = QuadConfig::with_tol(1e-3, 1e-3);
    let touch = TouchConfig {
        final_window: 2f64.powi(-8),
        windows: 4,
    };
    let folded = f_eval_with(fp(0.3), &cfg, true, &touch).unwrap();
    let direct = f_eval_with(fp(0.3), &cfg, false, &touch).unwrap();
    assert!(
        (folded.value - direct.value).abs() <= folded.abs_err + direct.abs_err,
        "{} ± {} vs {} ± {}",
        folded.value,
        folded.abs_err,
        direct.value,
        direct.abs_err
    );
}

#[test]
fn initial_window_does_not_move_truncated_value() {
    let cfg = QuadConfig::with_tol(1e-3, 1e-3);
    let wide = TouchConfig {
        final_window: 2f64.powi(-10),
        windows: 5,
    };
    let narrow = TouchConfig {
        final_window: 2f64.powi(-10),
        windows: 4,
    };
    let a = f_eval_with(fp(0.5), &cfg, true, &wide).unwrap();
    let b = f_eval_with(fp(0.5), &cfg, true, &narrow).unwrap();
    assert!(
        (a.value - b.value).abs() < 10.0 * a.abs_err.max(b.abs_err),
        "{a:?}\n{b:?}"
    );
}

#[test]
fn separated_disks_have_no_touch_points() {
    let r = f_eval(fp(2.5), &QuadConfig::with_tol(1e-5, 1e-5), true).unwrap();
    assert!(r.converged && r.value.is_finite());
    assert!(r.touch.is_none());
    assert_eq!(r.touchpoint_window, 0.0);
    let m = f_eval(fp(-2.5), &QuadConfig::with_tol(1e-5, 1e-5), true).unwrap();
    assert!((r.value - m.value).abs() <= r.abs_err + m.abs_err);
}

#[test]
fn divergence_is_flagged_not_hidden() {
    let touch = TouchConfig {
        final_window: 2f64.powi(-10),
        windows: 6,
    };
    let r = f_eval_with(fp(0.5), &QuadConfig::with_tol(1e-3, 1e-3), true, &touch).unwrap();
    let d = r.touch.as_ref().unwrap();
    assert!(!r.converged);
    assert!(!d.is_decaying());
    assert_eq!(r.touchpoint_window, touch.final_window);
    // each halving keeps adding about the same amount: F_w grows like L ln(1/w)
    assert!(
        d.contributions.iter().all(|&c| c > 1.8),
        "{:?}",
        d.contributions
    );
    assert!(
        d.ratios.windows(2).all(|r| r[1] >= r[0]) && *d.ratios.last().unwrap() > 0.9,
        "{:?}",
        d.ratios
    );
    assert!(
        (d.log_coefficient - 2.70).abs() < 0.05,
        "{}",
        d.log_coefficient
    );
}

#[test]
fn windowed_f_estimates_agree_across_seeds() {
    let opts = McFOptions { exclude_window: Some(2f64.powi(-6)), inner_draws: 1 };
    let a = mc_estimate_f_with(fp(0.5), 2_000_000, 1, &opts).unwrap();
    let b = mc_estimate_f_with(fp(0.5), 2_000_000, 2, &opts).unwrap();
    let sigma = a.std_err.hypot(b.std_err);
    assert!((a.mean - b.mean).abs() <= 4.0 * sigma, "{a:?} {b:?}");
}
