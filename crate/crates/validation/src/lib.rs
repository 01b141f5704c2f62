//! Acceptance criteria for `lunepv-core`. Each criterion prints its
//! measurements followed by one PASS/FAIL line.
//!
//! Driven by the `acceptance` test target:
//! `cargo test -p lunepv-validation --test acceptance -- 4 5` runs a subset.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, LN_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use lunepv_core::geometry::{classify_point, delta, moon_area, BOUNDARY_TOL};
use lunepv_core::mc_oracle::mc_estimate_f_with;
use lunepv_core::quadrature::kernel;
use lunepv_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const COMPARISON_AS: [f64; 3] = [0.3, 0.5, 0.8];
const DELIVERABLE_TOL: f64 = 1e-4;

fn fp(a: f64) -> FermiParameter {
    FermiParameter::new(a).unwrap()
}

#[derive(Default)]
struct Ctx {
    notes: Vec<String>,
    /// Scan rows at the deliverable tolerance, keyed by `a`.
    rows: BTreeMap<u64, ScanRow>,
}

impl Ctx {
    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// `pass` recorded as a note and returned.
    fn check(&mut self, pass: bool, what: impl Into<String>) -> bool {
        self.notes.push(format!(
            "[{}] {}",
            if pass { "ok" } else { "FAILED" },
            what.into()
        ));
        pass
    }

    fn scan_rows(&mut self, a_values: &[f64]) -> Vec<ScanRow> {
        let missing: Vec<f64> = a_values
            .iter()
            .copied()
            .filter(|a| !self.rows.contains_key(&a.to_bits()))
            .collect();
        if !missing.is_empty() {
            let cfg = QuadConfig::with_tol(DELIVERABLE_TOL, DELIVERABLE_TOL);
            for row in scan(&missing, &cfg) {
                self.rows.insert(row.a.to_bits(), row);
            }
        }
        a_values
            .iter()
            .map(|a| self.rows[&a.to_bits()].clone())
            .collect()
    }
}

/// Sample points: three inside the right moon, three exterior probes.
fn jordan_points(a: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = [0.0f64, 0.6, -1.0]
        .iter()
        .map(|t| (a + 0.8 * t.cos(), 0.8 * t.sin()))
        .collect();
    pts.extend([(2.0, 0.0), (1.5, 1.2), (-2.0, 0.5)]);
    pts
}

/// Name, integrand numerator, interval, exact principal value.
type PvCase = (&'static str, fn(f64) -> f64, f64, f64, f64);

fn pv_suite(ctx: &mut Ctx) -> bool {
    let cfg = QuadConfig::default();
    let cases: [PvCase; 3] = [
        ("f = 1 on (-1, 2)", |_| 1.0, -1.0, 2.0, LN_2),
        ("f = x on (-1, 1)", |x| x, -1.0, 1.0, 2.0),
        // 2 Shi(1) = sum 2 / ((2k+1) (2k+1)!)
        (
            "f = e^x on (-1, 1)",
            f64::exp,
            -1.0,
            1.0,
            2.114_501_750_751_457,
        ),
    ];
    let mut ok = true;
    for (name, f, lo, hi, exact) in cases {
        let t = Instant::now();
        let r = pv_cauchy(f, Interval::new(lo, hi).unwrap(), 0.0, &cfg).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let err = (r.value - exact).abs();
        ok &= ctx.check(
            err <= 1e-9 && secs < 1.0,
            format!("{name}: {:.16} error {err:.1e} in {secs:.4} s", r.value),
        );
    }
    ok
}

fn kernel_reduction(ctx: &mut Ctx) -> bool {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = QuadConfig::with_tol(1e-13, 1e-13);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let (x, y, xp): (f64, f64, f64) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-2.0..2.0),
        );
        let (lo, len): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.01..2.0));
        if (x - xp).abs() <= 1e-3 {
            continue;
        }
        let exact = kernel_y_integral(x, y, xp, lo, lo + len).unwrap();
        let q = integrate_adaptive(
            |yp| kernel(x, y, xp, yp),
            Interval::new(lo, lo + len).unwrap(),
            &cfg,
        )
        .unwrap();
        worst = worst.max((q.value - exact).abs());
        n += 1;
    }
    let secs = t.elapsed().as_secs_f64();
    ctx.check(
        worst <= 1e-10 && secs < 5.0,
        format!("100 cases, worst |difference| {worst:.2e}, {secs:.3} s"),
    )
}

fn geometry(ctx: &mut Ctx) -> bool {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tested = 0;
    let mut broken = 0;
    while tested < 10_000 {
        let (x, y, a): (f64, f64, f64) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-1.5..1.5),
            rng.gen_range(-2.0..2.0),
        );
        let near = |c: f64| ((x - c).hypot(y) - 1.0).abs() < 1e-9;
        if near(a) || near(-a) {
            continue;
        }
        let d = |x, y, a| delta(Point::new(x, y), fp(a)).unwrap();
        let v = d(x, y, a);
        if d(-x, y, a) != -v || d(x, y, -a) != -v || d(x, -y, a) != v {
            broken += 1;
        }
        tested += 1;
    }
    let parity = ctx.check(
        broken == 0,
        format!("parity (odd in x, odd in a, even in y): {broken} violations in {tested} points"),
    );

    let a = 0.5;
    let area = moon_area(fp(a));
    let n = 10_000_000u64;
    let mut hits = 0u64;
    for _ in 0..n {
        let p = Point::new(a + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if classify_point(p, fp(a), BOUNDARY_TOL).unwrap() == RegionClass::RightMoon {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    let (mc, sigma) = (4.0 * p, 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    let secs = t.elapsed().as_secs_f64();
    let close = (area - 1.913_223).abs() < 5e-7;
    let agree = (mc - area).abs() <= 4.0 * sigma;
    let area_ok = ctx.check(
        close && agree && secs < 30.0,
        format!("moon_area(0.5) = {area:.9}, box count {mc:.6} ± {sigma:.1e} ({:.2} sigma), {secs:.2} s", (mc - area).abs() / sigma),
    );
    parity && area_ok
}

fn jordan_agreement(ctx: &mut Ctx) -> bool {
    let anchor = i_jordan(2.0, 0.0, 0.5).unwrap();
    let anchor_ok = ctx.check(
        (anchor - FRAC_PI_2 * 5776f64.ln()).abs() < 1e-12,
        format!("closed form at (2, 0, 0.5) = {anchor:.9} = (pi/2) ln 5776"),
    );
    let cfg = QuadConfig::default();
    let mut agreeing = 0;
    let mut total = 0;
    for a in COMPARISON_AS {
        for (x, y) in jordan_points(a) {
            let region = classify_point(Point::new(x, y), fp(a), BOUNDARY_TOL).unwrap();
            let q = inner_numeric(x, y, a, &cfg).unwrap();
            let j = i_jordan(x, y, a).unwrap();
            let band = (1e-5 * j.abs()).max(10.0 * q.abs_err);
            let ok = (q.value - j).abs() <= band;
            agreeing += ok as usize;
            total += 1;
            ctx.note(format!(
                "a={a} ({x:.4}, {y:.4}) {region:?}: numeric {:.9} closed form {j:.9} diff {:+.3e} band {band:.1e} {}",
                q.value,
                q.value - j,
                if ok { "agree" } else { "DISAGREE" }
            ));
        }
    }
    ctx.note(format!(
        "empirical agreement region: {agreeing} of {total} sample points"
    ));
    let all = ctx.check(
        agreeing == total,
        "numeric inner integral matches the closed form at every point",
    );
    anchor_ok && all
}

fn discrepancy_experiment(ctx: &mut Ctx) -> bool {
    let base = QuadConfig::default();
    let tight = base.tightened(10.0);
    let samples = 1_000_000;
    let mut stable = 0;
    let mut mc_ok = 0;
    let mut nonzero = 0;
    let mut total = 0;
    let mut seed = 1000;
    for a in COMPARISON_AS {
        for (x, y) in jordan_points(a) {
            let c0 = compare_inner(x, y, a, &base).unwrap();
            let c1 = compare_inner(x, y, a, &tight).unwrap();
            let rel = (c1.disc_minus - c0.disc_minus).abs() / c1.disc_minus.abs();
            let is_stable = rel < 5e-4;
            let mut sigmas = [0.0; 2];
            for (k, (center, q)) in [(a, c1.i_num_plus), (-a, c1.i_num_minus)]
                .into_iter()
                .enumerate()
            {
                let mc = mc_estimate_inner(x, y, center, samples, seed).unwrap();
                seed += 1;
                sigmas[k] = (mc.mean - q).abs() / mc.std_err;
            }
            let agrees = sigmas.iter().all(|s| *s <= 4.0);
            stable += is_stable as usize;
            mc_ok += agrees as usize;
            nonzero += (c1.disc_minus.abs() > 10.0 * c1.err_bound) as usize;
            total += 1;
            ctx.note(format!(
                "a={a} ({x:.4}, {y:.4}): disc_minus {:+.6e} (rel change {rel:.1e}), disc_plus {:+.6e}, MC deviations {:.2}/{:.2} sigma",
                c1.disc_minus, c1.disc_plus, sigmas[0], sigmas[1]
            ));
        }
    }
    if nonzero == 0 {
        ctx.note("disc_minus vanishes everywhere: the predicted negative-a failure is REFUTED");
    } else {
        ctx.note(format!(
            "disc_minus is nonzero at {nonzero} of {total} points, as predicted for negative a"
        ));
    }
    let s = ctx.check(
        stable == total,
        format!("disc_minus stable to 3 significant digits at {stable} of {total} points"),
    );
    let m = ctx.check(
        mc_ok == total,
        format!("both inner integrals within 4 sigma of Monte Carlo at {mc_ok} of {total} points"),
    );
    s && m
}

fn full_integral(ctx: &mut Ctx) -> bool {
    let cfg = QuadConfig::with_tol(DELIVERABLE_TOL, DELIVERABLE_TOL);
    let zero = f_eval(fp(0.0), &cfg, false).unwrap();
    let zero_ok = ctx.check(
        zero.value == 0.0 && zero.evals == 0,
        format!("F(0) = {} with {} evaluations", zero.value, zero.evals),
    );

    let t = Instant::now();
    let plus = f_eval(fp(0.5), &cfg, false).unwrap();
    let minus = f_eval(fp(-0.5), &cfg, false).unwrap();
    let symmetric = (plus.value - minus.value).abs() <= plus.abs_err + minus.abs_err;
    let sym_ok = ctx.check(
        symmetric,
        format!(
            "F(0.5) = {:.9} ± {:.1e}, F(-0.5) = {:.9} ± {:.1e} without folding ({:.0} s)",
            plus.value,
            plus.abs_err,
            minus.value,
            minus.abs_err,
            t.elapsed().as_secs_f64()
        ),
    );

    let row = ctx.scan_rows(&[0.5]).remove(0);
    let f = row.f.clone().expect("a = 0.5 evaluates");
    let refine_ok = ctx.check(
        row.refinement_delta < 10.0 * f.abs_err,
        format!(
            "refinement_delta {:.2e} vs 10 abs_err {:.2e} at tol 1e-4",
            row.refinement_delta,
            10.0 * f.abs_err
        ),
    );

    let d = f.touch.as_ref().expect("touch diagnostics");
    ctx.note(format!(
        "window contributions per halving: first {:.5}, last {:.5}; ratios approach {:.5}",
        d.contributions[0],
        d.contributions.last().unwrap(),
        d.ratios.last().unwrap()
    ));
    ctx.note(format!(
        "F_w ~ L ln(1/w) + R with L = {:.4}, R = {}",
        d.log_coefficient,
        d.finite_part.map_or("n/a".into(), |r| format!("{r:.4}"))
    ));
    let converged = ctx.check(
        f.converged,
        format!(
            "F(0.5) converged (value {:.6} is truncated at |y - t| >= {:.1e})",
            f.value, f.touchpoint_window
        ),
    );

    let t = Instant::now();
    let mc = mc_estimate_f(fp(0.5), 100_000_000, 2026).unwrap();
    let sigma = (mc.std_err.powi(2) + f.abs_err.powi(2)).sqrt();
    let dev = (mc.mean - f.value).abs() / sigma;
    let mc_ok = ctx.check(
        f.converged && dev <= 4.0,
        format!(
            "Monte Carlo (1e8 samples) {:.4} ± {:.4} vs quadrature: {dev:.2} sigma ({:.0} s); a deviation count is meaningless while F diverges",
            mc.mean,
            mc.std_err,
            t.elapsed().as_secs_f64()
        ),
    );

    // Cross-check where both sides exist: exclude the outermost touch window.
    let w0 = d.half_widths[0];
    let opts = McFOptions {
        exclude_window: Some(w0),
        inner_draws: 1,
    };
    let windowed = mc_estimate_f_with(fp(0.5), 10_000_000, 2027, &opts).unwrap();
    let s = (windowed.std_err.powi(2) + d.partial_errs[0].powi(2)).sqrt();
    ctx.note(format!(
        "with | |y| - t | < {w0:.4} excluded: quadrature {:.6}, Monte Carlo {:.6} ± {:.6} ({:.2} sigma)",
        d.partial_sums[0],
        windowed.mean,
        windowed.std_err,
        (windowed.mean - d.partial_sums[0]).abs() / s
    ));

    zero_ok && sym_ok && refine_ok && converged && mc_ok
}

fn csv(rows: &[ScanRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let f = r.f.as_ref().unwrap();
        out += &format!(
            "{:.16e},{:.16e},{:.16e},{},{},{:.16e}\n",
            r.a, f.value, f.abs_err, f.evals, f.converged, r.refinement_delta
        );
    }
    out
}

fn determinism(ctx: &mut Ctx) -> bool {
    let a_values: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let cfg = QuadConfig::with_tol(1e-3, 1e-3);
    let touch = TouchConfig {
        final_window: 2f64.powi(-8),
        windows: 3,
    };
    let in_pool = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
    };
    let one = in_pool(1).install(|| csv(&scan_with(&a_values, &cfg, &touch)));
    let four = in_pool(4).install(|| csv(&scan_with(&a_values, &cfg, &touch)));
    let scan_ok = ctx.check(
        one == four,
        format!(
            "scan table over 9 values of a, 1 vs 4 workers: {} bytes",
            one.len()
        ),
    );

    let mc = |n: usize| {
        in_pool(n).install(|| {
            let f = mc_estimate_f(fp(0.5), 1_000_000, 3).unwrap();
            let i = mc_estimate_inner(1.2, 0.3, -0.5, 1_000_000, 3).unwrap();
            [f.mean, f.std_err, i.mean, i.std_err].map(f64::to_bits)
        })
    };
    let mc_ok = ctx.check(
        mc(1) == mc(4),
        "Monte Carlo estimates bit-identical for a fixed seed, 1 vs 4 workers",
    );
    scan_ok && mc_ok
}

fn deliverable(ctx: &mut Ctx) -> bool {
    let a_values: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let t = Instant::now();
    let rows = ctx.scan_rows(&a_values);
    ctx.note(format!(
        "scan finished in {:.0} s",
        t.elapsed().as_secs_f64()
    ));
    ctx.note("a, F (truncated), abs_err, converged, refinement_delta, L, R");
    let mut honest = true;
    let mut self_consistent = 0;
    for r in &rows {
        let Some(f) = r.f.as_ref() else {
            ctx.note(format!(
                "{}: error {}",
                r.a,
                r.error.clone().unwrap_or_default()
            ));
            honest = false;
            continue;
        };
        let d = f.touch.as_ref();
        // non-converged rows must say why: a finite truncated value and a non-decaying window series
        let flagged = f.converged
            || (f.value.is_finite()
                && f.touchpoint_window > 0.0
                && d.is_some_and(|d| !d.is_decaying()));
        honest &= flagged;
        self_consistent += (r.refinement_delta < 10.0 * f.abs_err) as usize;
        ctx.note(format!(
            "{:.1}, {:.6}, {:.1e}, {}, {:.1e}, {}, {}",
            r.a,
            f.value,
            f.abs_err,
            f.converged,
            r.refinement_delta,
            d.map_or("-".into(), |d| format!("{:.4}", d.log_coefficient)),
            d.and_then(|d| d.finite_part)
                .map_or("-".into(), |v| format!("{v:.4}"))
        ));
    }
    ctx.note(format!(
        "refinement_delta < 10 abs_err in {self_consistent} of {} rows",
        rows.len()
    ));
    ctx.check(
        honest,
        "every row converged or carries an explicit non-convergence flag",
    )
}

type Criterion = fn(&mut Ctx) -> bool;

/// Runs the selected criteria (all when `selected` is empty); true if all passed.
pub fn run(selected: &[u32]) -> bool {
    let criteria: [(u32, &str, Criterion); 8] = [
        (1, "principal-value unit suite", pv_suite),
        (2, "kernel reduction", kernel_reduction),
        (3, "geometry parities and moon area", geometry),
        (4, "closed-form agreement for positive a", jordan_agreement),
        (
            5,
            "negative-a discrepancy experiment",
            discrepancy_experiment,
        ),
        (6, "full integral F(a)", full_integral),
        (7, "determinism", determinism),
        (8, "scan over a = 0.1 .. 0.9", deliverable),
    ];
    let mut ctx = Ctx::default();
    let mut summary = Vec::new();
    for (n, title, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t = Instant::now();
        ctx.notes.clear();
        let pass = catch_unwind(AssertUnwindSafe(|| run(&mut ctx))).unwrap_or(false);
        for note in &ctx.notes {
            println!("    {note}");
        }
        let line = format!(
            "criterion {n} {} {title} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        println!("{line}\n");
        summary.push((pass, line));
    }
    println!("acceptance summary:");
    for (_, line) in &summary {
        println!("  {line}");
    }
    let failed = summary.iter().filter(|(p, _)| !p).count();
    println!("{} passed, {failed} failed", summary.len() - failed);
    failed == 0
}
