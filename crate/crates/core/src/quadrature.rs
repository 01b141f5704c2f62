//! One-dimensional adaptive quadrature.
//!
//! The workhorse is a globally adaptive Gauss-Kronrod 7/15 scheme: the panel
//! with the largest error estimate is bisected until the summed estimate
//! meets `max(abs_tol, rel_tol * |value|)`. Cauchy principal values are
//! computed by subtracting the pole's residue and adding the logarithm back
//! analytically.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Neg, Sub};

use crate::error::{ensure_finite, Error, Result};

// Kronrod abscissae on [0, 1]; odd indices are the Gauss-7 nodes, the last one is the centre.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Evaluations per Kronrod panel.
pub const EVALS_PER_PANEL: u64 = 15;

/// Hard cap on the number of live panels in one adaptive run.
const MAX_PANELS: usize = 20_000;

/// Largest step used for the central-difference derivative at a pole.
const POLE_DERIVATIVE_STEP: f64 = 1e-5;

/// Upper bound on the pole guard radius relative to the nearest breakpoint.
const GUARD_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains_strictly(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: u64,
    pub converged: bool,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: 0.0,
        abs_err: 0.0,
        evals: 0,
        converged: true,
    };

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            ..Self::ZERO
        }
    }

    pub fn scale(self, k: f64) -> Self {
        Self {
            value: self.value * k,
            abs_err: self.abs_err * k.abs(),
            ..self
        }
    }
}

impl Add for QuadResult {
    type Output = QuadResult;

    fn add(self, rhs: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + rhs.value,
            abs_err: self.abs_err + rhs.abs_err,
            evals: self.evals + rhs.evals,
            converged: self.converged && rhs.converged,
        }
    }
}

impl Sub for QuadResult {
    type Output = QuadResult;

    fn sub(self, rhs: QuadResult) -> QuadResult {
        self + (-rhs)
    }
}

impl Neg for QuadResult {
    type Output = QuadResult;

    fn neg(self) -> QuadResult {
        QuadResult {
            value: -self.value,
            ..self
        }
    }
}

impl std::iter::Sum for QuadResult {
    fn sum<I: Iterator<Item = QuadResult>>(iter: I) -> Self {
        iter.fold(QuadResult::ZERO, |acc, r| acc + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections applied to any initial panel.
    pub max_depth: u32,
    /// Radius around a principal-value pole inside which the subtracted
    /// integrand is replaced by its derivative limit.
    pub min_interval: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            max_depth: 64,
            min_interval: 1e-8,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.abs_tol) || !positive(self.rel_tol) || !positive(self.min_interval) {
            return Err(Error::Config(format!(
                "tolerances and min_interval must be finite and positive: {self:?}"
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(())
    }

    /// Same configuration with both tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol / factor,
            rel_tol: self.rel_tol / factor,
            ..*self
        }
    }

    pub fn with_abs_tol(&self, abs_tol: f64) -> Self {
        Self { abs_tol, ..*self }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Max-heap on error; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn eval<F>(f: &F, x: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let v = f(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { at: x, value: v })
    }
}

/// Single Gauss-Kronrod 7/15 panel with the QUADPACK error heuristic.
fn gk15<F>(f: &F, lo: f64, hi: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let f_center = eval(f, center)?;

    let mut res_g = f_center * WG[3];
    let mut res_k = f_center * WGK[7];
    let mut res_abs = f_center.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((result, err))
}

/// Adaptive integration of a fallible integrand over consecutive panels
/// `[breaks[i], breaks[i+1]]`.
///
/// The integrand is never evaluated at a breakpoint, so jumps and integrable
/// endpoint singularities belong there.
pub fn integrate_breaks<F>(f: F, breaks: &[f64], cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    if breaks.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    for w in breaks.windows(2) {
        Interval::new(w[0], w[1])?;
    }

    let mut heap = BinaryHeap::with_capacity(64);
    let mut done: Vec<Panel> = Vec::new();
    let mut evals = 0u64;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut done_err = 0.0;
    for w in breaks.windows(2) {
        let (value, err) = gk15(&f, w[0], w[1])?;
        evals += EVALS_PER_PANEL;
        total += value;
        total_err += err;
        heap.push(Panel {
            lo: w[0],
            hi: w[1],
            value,
            err,
            depth: 0,
        });
    }

    let mut converged = false;
    loop {
        if total_err <= cfg.target(total) {
            converged = true;
            break;
        }
        if done_err > cfg.target(total) || heap.len() + done.len() >= MAX_PANELS {
            break;
        }
        let Some(panel) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (panel.lo + panel.hi);
        if panel.depth >= cfg.max_depth || mid <= panel.lo || mid >= panel.hi {
            done_err += panel.err;
            done.push(panel);
            continue;
        }
        let (v1, e1) = gk15(&f, panel.lo, mid)?;
        let (v2, e2) = gk15(&f, mid, panel.hi)?;
        evals += 2 * EVALS_PER_PANEL;
        total += v1 + v2 - panel.value;
        total_err += e1 + e2 - panel.err;
        let depth = panel.depth + 1;
        heap.push(Panel {
            lo: panel.lo,
            hi: mid,
            value: v1,
            err: e1,
            depth,
        });
        heap.push(Panel {
            lo: mid,
            hi: panel.hi,
            value: v2,
            err: e2,
            depth,
        });
    }

    // Re-sum in a fixed left-to-right order to shed incremental drift.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let abs_err: f64 = panels.iter().map(|p| p.err).sum();
    let converged = converged && abs_err <= cfg.target(value);
    Ok(QuadResult {
        value,
        abs_err,
        evals,
        converged,
    })
}

/// Points `center ± base·2^k` (k = 0, 1, ...) strictly inside `(lo, hi)`.
///
/// Used to expose features of width `base` sitting next to `center` to an
/// adaptive rule whose initial panels are much wider.
pub fn dyadic_breaks(center: f64, base: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(base > 0.0 && base.is_finite()) {
        return out;
    }
    let mut step = base;
    while center - step > lo || center + step < hi {
        for p in [center - step, center + step] {
            if lo < p && p < hi {
                out.push(p);
            }
        }
        step *= 2.0;
    }
    out
}

/// Adaptive integral of `f` over `iv`.
pub fn integrate_adaptive<F>(f: F, iv: Interval, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    integrate_breaks(|x| Ok(f(x)), &[iv.lo, iv.hi], cfg)
}

/// Principal value of `∫ f(x) / (x - pole) dx` over `iv` for a fallible `f`.
///
/// `breaks` are extra interior breakpoints (jumps or kinks of `f`) which must
/// not coincide with the pole.
pub fn pv_cauchy_breaks<F>(
    f: F,
    iv: Interval,
    pole: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    ensure_finite(pole, "pole")?;
    if !iv.contains_strictly(pole) {
        return Err(Error::PoleOutside {
            pole,
            lo: iv.lo,
            hi: iv.hi,
        });
    }
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| iv.contains_strictly(b))
        .collect();
    if points.contains(&pole) {
        return Err(Error::Domain(format!(
            "breakpoint coincides with pole {pole}"
        )));
    }
    points.push(iv.lo);
    points.push(iv.hi);
    points.push(pole);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let f_pole = eval(&f, pole)?;
    let left = points
        .iter()
        .rev()
        .find(|&&p| p < pole)
        .copied()
        .unwrap_or(iv.lo);
    let right = points.iter().find(|&&p| p > pole).copied().unwrap_or(iv.hi);
    let room = (pole - left).min(right - pole);
    let h = POLE_DERIVATIVE_STEP.min(0.25 * room);
    let d1 = eval(&f, pole + h)? - eval(&f, pole - h)?;
    let d2 = eval(&f, pole + 2.0 * h)? - eval(&f, pole - 2.0 * h)?;
    let slope = (8.0 * d1 - d2) / (12.0 * h);

    // The guard zone carries weight ~ 2·guard·slope, and the slope can be as
    // large as 1/room; keep it tiny relative to the nearest breakpoint.
    let guard = cfg.min_interval.min(GUARD_FRACTION * room);
    let subtracted = |x: f64| -> Result<f64> {
        let d = x - pole;
        if d.abs() < guard {
            Ok(slope)
        } else {
            Ok((f(x)? - f_pole) / d)
        }
    };
    let smooth = integrate_breaks(subtracted, &points, cfg)?;
    let log_term = f_pole * ((iv.hi - pole) / (pole - iv.lo)).ln();
    Ok(QuadResult {
        value: smooth.value + log_term,
        evals: smooth.evals + 5,
        ..smooth
    })
}

/// Principal value of `∫ f(x) / (x - pole) dx` over `iv`.
pub fn pv_cauchy<F>(f: F, iv: Interval, pole: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    pv_cauchy_breaks(|x| Ok(f(x)), iv, pole, &[], cfg)
}

/// The kernel `(x - x') / ((x - x')² + (y + y')²)`.
pub fn kernel(x: f64, y: f64, xp: f64, yp: f64) -> f64 {
    let dx = x - xp;
    let dy = y + yp;
    dx / (dx * dx + dy * dy)
}

/// Exact `∫ kernel dy'` over `[y_lo, y_hi]`:
/// `atan((y + y_hi)/(x - x')) - atan((y + y_lo)/(x - x'))`.
///
/// At `x' = x` the kernel vanishes for `y' ≠ -y` but the antiderivative
/// jumps by `±π`, so that point is rejected; callers split there.
pub fn kernel_y_integral(x: f64, y: f64, xp: f64, y_lo: f64, y_hi: f64) -> Result<f64> {
    for (v, what) in [
        (x, "x"),
        (y, "y"),
        (xp, "x'"),
        (y_lo, "y' lower limit"),
        (y_hi, "y' upper limit"),
    ] {
        ensure_finite(v, what)?;
    }
    if xp == x {
        return Err(Error::Domain(format!(
            "x' = x = {x}: kernel antiderivative jumps here"
        )));
    }
    if y_lo == y_hi {
        return Ok(0.0);
    }
    let d = x - xp;
    Ok(((y + y_hi) / d).atan() - ((y + y_lo) / d).atan())
}
