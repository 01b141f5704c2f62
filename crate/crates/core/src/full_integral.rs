//! `F(a)`: the outer `Δ`-weighted double integral of `J(x, y) / x²`.
//!
//! Integration order is `y` outer, `x` inner over moon slabs. For fixed `y`
//! away from the touch heights `±√(1-a²)` the slabs stay clear of `x = 0`, so
//! `1/x²` is evaluated pointwise. Around each touch height the `y` range is cut
//! into dyadic windows `w_k = w_final · 2^(K-k)`; the window contributions are
//! reported and, when they decay geometrically, the tail is extrapolated.
//! When they do not decay, the result is the integral truncated at `w_final`
//! and is flagged as not converged.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{moon_slab, touch_points, FermiParameter, MoonSide};
use crate::inner_integral::j_weighted;
use crate::quadrature::{integrate_breaks, QuadConfig, QuadResult};

/// Window contributions must shrink at least this fast to be extrapolated.
const MAX_CONVERGENT_RATIO: f64 = 0.75;

/// Dyadic refinement around the touch heights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchConfig {
    /// Half-width of the innermost (excluded) window.
    pub final_window: f64,
    /// Number of dyadic windows between the initial and final half-widths.
    pub windows: u32,
}

impl Default for TouchConfig {
    fn default() -> Self {
        Self {
            final_window: 2f64.powi(-20),
            windows: 14,
        }
    }
}

impl TouchConfig {
    pub fn initial_window(&self) -> f64 {
        self.final_window * 2f64.powi(self.windows as i32)
    }

    /// Half-widths `w_0 > w_1 > ... > w_K`.
    pub fn half_widths(&self) -> Vec<f64> {
        (0..=self.windows)
            .map(|k| self.final_window * 2f64.powi((self.windows - k) as i32))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.final_window > 0.0 && self.final_window.is_finite()) || self.windows < 3 {
            return Err(Error::Config(format!(
                "touch windows need final_window > 0 and windows >= 3: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Measured behaviour of the integral as the touch windows shrink.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchDiagnostics {
    /// `w_0 > ... > w_K`.
    pub half_widths: Vec<f64>,
    /// `contributions[k]`: integral over the band `w_{k+1} <= |y - τ| < w_k`, all touch points.
    pub contributions: Vec<f64>,
    /// `partial_sums[k]`: the integral with `|y - τ| < w_k` excluded.
    pub partial_sums: Vec<f64>,
    /// Quadrature error estimates of `partial_sums`.
    pub partial_errs: Vec<f64>,
    /// `contributions[k+1] / contributions[k]`.
    pub ratios: Vec<f64>,
    /// Extrapolated remainder below `w_K`; `None` when the windows do not decay.
    pub tail_estimate: Option<f64>,
    /// Coefficient `L` of an `L ln(1/w)` growth of the truncated integral:
    /// the limiting window contribution divided by `ln 2`.
    pub log_coefficient: f64,
    /// `lim (F_w - L ln(1/w))` as `w -> 0`, when the window contributions
    /// settle geometrically onto a constant.
    pub finite_part: Option<f64>,
}

impl TouchDiagnostics {
    pub fn is_decaying(&self) -> bool {
        self.tail_estimate.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FResult {
    pub a: f64,
    pub value: f64,
    pub abs_err: f64,
    /// Inner integrand evaluations (the `x'` level), summed over all `J` calls.
    pub evals: u64,
    pub converged: bool,
    /// Excluded half-width around each touch height; 0 if nothing is excluded.
    pub touchpoint_window: f64,
    pub touch: Option<TouchDiagnostics>,
    pub j_cache_hits: u64,
}

impl FResult {
    fn zero(a: f64) -> Self {
        Self {
            a,
            value: 0.0,
            abs_err: 0.0,
            evals: 0,
            converged: true,
            touchpoint_window: 0.0,
            touch: None,
            j_cache_hits: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub a: f64,
    pub f: Option<FResult>,
    /// `|F(tol/10) - F(tol)|`
    pub refinement_delta: f64,
    pub error: Option<String>,
}

impl ScanRow {
    pub fn converged(&self) -> bool {
        self.f.as_ref().is_some_and(|f| f.converged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PieceKind {
    Regular,
    Window(usize),
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    kind: PieceKind,
}

/// Splits `[y_lo, y_hi]` at 0, at every window edge around each touch height,
/// and drops the innermost windows.
fn y_pieces(y_lo: f64, y_hi: f64, touches: &[f64], widths: &[f64]) -> Vec<Piece> {
    let mut points = vec![y_lo, y_hi];
    if y_lo < 0.0 && 0.0 < y_hi {
        points.push(0.0);
    }
    for &tau in touches {
        for &w in widths {
            for p in [tau - w, tau + w] {
                // windows never cross y = 0 unless the touch height is 0 itself
                let same_side = tau == 0.0 || p * tau > 0.0;
                if y_lo < p && p < y_hi && same_side {
                    points.push(p);
                }
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();

    let innermost = *widths.last().expect("at least one window");
    let mut pieces = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let nearest = touches
            .iter()
            .map(|&tau| (mid - tau).abs())
            .fold(f64::INFINITY, f64::min);
        if nearest < innermost {
            continue;
        }
        let kind = match widths
            .windows(2)
            .position(|pair| nearest < pair[0] && nearest >= pair[1])
        {
            Some(k) => PieceKind::Window(k),
            None => PieceKind::Regular,
        };
        pieces.push(Piece { lo, hi, kind });
    }
    pieces
}

/// Breakpoints for `∫ dx / x²`-like integrands on a slab interval: dyadic
/// refinement toward the end nearest `x = 0`.
fn x_breaks(lo: f64, hi: f64) -> Vec<f64> {
    let width = hi - lo;
    let near = lo.abs().min(hi.abs());
    let mut inner = Vec::new();
    if near > 0.0 && near < 0.25 * width {
        let mut p = 2.0 * near;
        while p < near + 0.5 * width {
            inner.push(p);
            p *= 2.0;
        }
    }
    let mut breaks = vec![lo];
    if lo > 0.0 {
        breaks.extend(inner);
    } else {
        breaks.extend(inner.iter().rev().map(|p| -p));
    }
    breaks.push(hi);
    breaks
}

struct JCache {
    a: f64,
    quad: QuadConfig,
    values: Mutex<HashMap<(u64, u64), QuadResult>>,
    hits: AtomicU64,
    evals: AtomicU64,
    all_converged: AtomicBool,
}

impl JCache {
    fn new(a: f64, quad: QuadConfig) -> Self {
        Self {
            a,
            quad,
            values: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            evals: AtomicU64::new(0),
            all_converged: AtomicBool::new(true),
        }
    }

    /// `J(x, y)` with an absolute tolerance scaled by `x²`, so that `J/x²`
    /// meets the same budget everywhere.
    fn get(&self, x: f64, y: f64) -> Result<f64> {
        let key = (x.to_bits(), y.to_bits());
        if let Some(r) = self.values.lock().expect("J cache poisoned").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(r.value);
        }
        let cfg = self.quad.with_abs_tol(self.quad.abs_tol * (x * x).min(1.0));
        let r = j_weighted(x, y, self.a, &cfg)?;
        self.evals.fetch_add(r.evals, Ordering::Relaxed);
        if !r.converged {
            self.all_converged.store(false, Ordering::Relaxed);
        }
        self.values.lock().expect("J cache poisoned").insert(key, r);
        Ok(r.value)
    }
}

/// `∫ Δ J / x² dx` at fixed `y` over the requested moons.
fn slab_integral(
    y: f64,
    fa: FermiParameter,
    sides: &[MoonSide],
    cfg: &QuadConfig,
    cache: &JCache,
) -> Result<f64> {
    let mut total = QuadResult::ZERO;
    for &side in sides {
        for (lo, hi) in moon_slab(y, fa, side)?.intervals {
            let r = integrate_breaks(|x| Ok(cache.get(x, y)? / (x * x)), &x_breaks(lo, hi), cfg)?;
            total = total + r.scale(side.sign());
        }
    }
    if !total.converged {
        cache.all_converged.store(false, Ordering::Relaxed);
    }
    Ok(total.value)
}

/// `F(a)` with the default touch-point windows.
pub fn f_eval(a: FermiParameter, cfg: &QuadConfig, exploit_symmetry: bool) -> Result<FResult> {
    f_eval_with(a, cfg, exploit_symmetry, &TouchConfig::default())
}

/// `F(a)`.
///
/// With `exploit_symmetry` only the upper half of the right moon is
/// integrated and the result multiplied by 4 (`Δ J / x²` is even under
/// `x → -x` and under `y → -y`). Without it all four quadrants of both moons
/// are integrated independently.
///
/// Tolerance budget: `cfg` at the `y` level, `cfg / 10` for each slab
/// integral, `cfg / 100` (absolute part scaled by `x²`) for each `J`.
pub fn f_eval_with(
    a: FermiParameter,
    cfg: &QuadConfig,
    exploit_symmetry: bool,
    touch: &TouchConfig,
) -> Result<FResult> {
    cfg.validate()?;
    touch.validate()?;
    let av = a.value();
    if av == 0.0 {
        return Ok(FResult::zero(av));
    }

    let (y_lo, y_hi, sides, factor): (f64, f64, &[MoonSide], f64) = if exploit_symmetry {
        (0.0, 1.0, &[MoonSide::Right], 4.0)
    } else {
        (-1.0, 1.0, &[MoonSide::Right, MoonSide::Left], 1.0)
    };
    let touches: Vec<f64> = match touch_points(a) {
        Some((t, _)) if exploit_symmetry => vec![t],
        Some((t, m)) => vec![m, t],
        None if av.abs() == 1.0 => vec![0.0],
        None => Vec::new(),
    };
    let widths = touch.half_widths();
    let pieces = if touches.is_empty() {
        vec![Piece {
            lo: y_lo,
            hi: y_hi,
            kind: PieceKind::Regular,
        }]
    } else {
        y_pieces(y_lo, y_hi, &touches, &widths)
    };

    let slab_cfg = cfg.tightened(10.0);
    let cache = JCache::new(av, cfg.tightened(100.0));
    let piece_cfg = cfg.with_abs_tol(cfg.abs_tol / (factor * pieces.len() as f64));

    let results: Vec<Result<QuadResult>> = pieces
        .par_iter()
        .map(|p| {
            integrate_breaks(
                |y| slab_integral(y, a, sides, &slab_cfg, &cache),
                &[p.lo, p.hi],
                &piece_cfg,
            )
            .map(|r| r.scale(factor))
        })
        .collect();

    let mut regular = QuadResult::ZERO;
    let mut windows = vec![QuadResult::ZERO; widths.len() - 1];
    for (piece, r) in pieces.iter().zip(results) {
        let r = r?;
        match piece.kind {
            PieceKind::Regular => regular = regular + r,
            PieceKind::Window(k) => windows[k] = windows[k] + r,
        }
    }

    let inner_ok = cache.all_converged.load(Ordering::Relaxed);
    let mut out = FResult {
        a: av,
        value: regular.value,
        abs_err: regular.abs_err,
        evals: cache.evals.load(Ordering::Relaxed),
        converged: regular.converged && inner_ok,
        touchpoint_window: 0.0,
        touch: None,
        j_cache_hits: cache.hits.load(Ordering::Relaxed),
    };
    if touches.is_empty() {
        return Ok(out);
    }

    let diag = touch_diagnostics(&widths, regular, &windows);
    let last = *diag.partial_sums.last().expect("non-empty partial sums");
    let last_err = *diag.partial_errs.last().expect("non-empty partial errors");
    let windows_ok = windows.iter().all(|w| w.converged);
    match diag.tail_estimate {
        Some(tail) => {
            out.value = last + tail;
            out.abs_err = last_err + tail.abs();
            out.converged = out.converged
                && windows_ok
                && out.abs_err <= cfg.abs_tol.max(cfg.rel_tol * out.value.abs());
        }
        None => {
            out.value = last;
            out.abs_err = last_err;
            out.converged = false;
            out.touchpoint_window = touch.final_window;
        }
    }
    out.touch = Some(diag);
    Ok(out)
}

fn touch_diagnostics(
    widths: &[f64],
    regular: QuadResult,
    windows: &[QuadResult],
) -> TouchDiagnostics {
    let contributions: Vec<f64> = windows.iter().map(|w| w.value).collect();
    let mut partial_sums = vec![regular.value];
    let mut partial_errs = vec![regular.abs_err];
    for w in windows {
        partial_sums.push(partial_sums.last().unwrap() + w.value);
        partial_errs.push(partial_errs.last().unwrap() + w.abs_err);
    }
    let ratios: Vec<f64> = contributions.windows(2).map(|c| c[1] / c[0]).collect();

    let n = contributions.len();
    let noise = windows[n - 1].abs_err;
    let last3 = &contributions[n.saturating_sub(3)..];
    let negligible = last3
        .iter()
        .all(|c| c.abs() <= noise.max(f64::MIN_POSITIVE));
    let recent = &ratios[ratios.len().saturating_sub(3)..];
    let decaying = !recent.is_empty()
        && recent
            .iter()
            .all(|r| r.is_finite() && r.abs() <= MAX_CONVERGENT_RATIO);
    let tail_estimate = if negligible {
        Some(0.0)
    } else if decaying {
        let r = *recent.last().unwrap();
        Some(contributions[n - 1] * r / (1.0 - r))
    } else {
        None
    };

    // Contributions approaching a constant c: Aitken on the last three, then
    // sum the geometric remainder of (c_k - c).
    let mut log_coefficient = last3.iter().sum::<f64>() / (last3.len() as f64 * LN_2);
    let mut finite_part = None;
    if tail_estimate.is_none() && n >= 3 {
        let (c0, c1, c2) = (
            contributions[n - 3],
            contributions[n - 2],
            contributions[n - 1],
        );
        let (d1, d2) = (c1 - c0, c2 - c1);
        let q = d2 / d1;
        if d1 != 0.0 && q.is_finite() && q.abs() <= MAX_CONVERGENT_RATIO {
            let limit = c2 - d2 * d2 / (d2 - d1);
            log_coefficient = limit / LN_2;
            let remainder = (c2 - limit) * q / (1.0 - q);
            let w_last = *widths.last().unwrap();
            let last_sum = *partial_sums.last().unwrap();
            finite_part = Some(last_sum + remainder - log_coefficient * (1.0 / w_last).ln());
        }
    }

    TouchDiagnostics {
        half_widths: widths.to_vec(),
        contributions,
        partial_sums,
        partial_errs,
        ratios,
        tail_estimate,
        log_coefficient,
        finite_part,
    }
}

/// One row per `a`, each with a rerun at tolerances tightened 10×.
pub fn scan(a_values: &[f64], cfg: &QuadConfig) -> Vec<ScanRow> {
    scan_with(a_values, cfg, &TouchConfig::default())
}

pub fn scan_with(a_values: &[f64], cfg: &QuadConfig, touch: &TouchConfig) -> Vec<ScanRow> {
    a_values
        .par_iter()
        .map(|&a| {
            let run = || -> Result<(FResult, f64)> {
                let fa = FermiParameter::new(a)?;
                let base = f_eval_with(fa, cfg, true, touch)?;
                let tight = f_eval_with(fa, &cfg.tightened(10.0), true, touch)?;
                let delta = (tight.value - base.value).abs();
                Ok((base, delta))
            };
            match run() {
                Ok((f, refinement_delta)) => ScanRow {
                    a,
                    f: Some(f),
                    refinement_delta,
                    error: None,
                },
                Err(e) => ScanRow {
                    a,
                    f: None,
                    refinement_delta: 0.0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
