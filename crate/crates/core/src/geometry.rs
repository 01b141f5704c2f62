//! Two unit circles centred at `(a, 0)` and `(-a, 0)`, the moons and lens they
//! cut out, and the sign function `Δ`.
//!
//! Conventions: the "right" moon is always the part of the disk centred at
//! `(+a, 0)` that lies outside the disk centred at `(-a, 0)`, even when `a < 0`
//! puts that disk on the left. Flipping the sign of `a` therefore swaps the
//! moons and flips `Δ`.

use std::f64::consts::PI;

use crate::error::{ensure_finite, Error, Result};

/// Points closer than this to either circle are classified [`RegionClass::Boundary`].
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn check(self) -> Result<()> {
        ensure_finite(self.x, "point x")?;
        ensure_finite(self.y, "point y")
    }
}

/// Signed half-separation of the two circle centres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FermiParameter(f64);

impl FermiParameter {
    pub fn new(a: f64) -> Result<Self> {
        ensure_finite(a, "parameter a")?;
        Ok(Self(a))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn negated(self) -> Self {
        Self(-self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionClass {
    /// Inside the circle centred at `(a, 0)` only.
    RightMoon,
    /// Inside the circle centred at `(-a, 0)` only.
    LeftMoon,
    Lens,
    Exterior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoonSide {
    Right,
    Left,
}

impl MoonSide {
    /// Value of `Δ` on this moon.
    pub fn sign(self) -> f64 {
        match self {
            MoonSide::Right => 1.0,
            MoonSide::Left => -1.0,
        }
    }
}

/// Cross-section of a moon at fixed `y`: sorted, disjoint open x-intervals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Slab {
    pub intervals: Vec<(f64, f64)>,
}

impl Slab {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_width(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }
}

pub fn classify_point(p: Point, a: FermiParameter, boundary_tol: f64) -> Result<RegionClass> {
    p.check()?;
    if boundary_tol.is_nan() || boundary_tol < 0.0 {
        return Err(Error::Domain(format!(
            "boundary tolerance must be >= 0, got {boundary_tol}"
        )));
    }
    let a = a.value();
    let d_right = (p.x - a).hypot(p.y);
    let d_left = (p.x + a).hypot(p.y);
    if (d_right - 1.0).abs() <= boundary_tol || (d_left - 1.0).abs() <= boundary_tol {
        return Ok(RegionClass::Boundary);
    }
    Ok(match (d_right < 1.0, d_left < 1.0) {
        (true, true) => RegionClass::Lens,
        (true, false) => RegionClass::RightMoon,
        (false, true) => RegionClass::LeftMoon,
        (false, false) => RegionClass::Exterior,
    })
}

/// `Δ(x, y)`: `+1` on the right moon, `-1` on the left moon, `0` elsewhere
/// (boundary included).
pub fn delta(p: Point, a: FermiParameter) -> Result<i8> {
    Ok(match classify_point(p, a, BOUNDARY_TOL)? {
        RegionClass::RightMoon => 1,
        RegionClass::LeftMoon => -1,
        RegionClass::Lens | RegionClass::Exterior | RegionClass::Boundary => 0,
    })
}

/// Heights `(+√(1-a²), -√(1-a²))` where the circles cross the y axis, or
/// `None` when `|a| >= 1`.
pub fn touch_points(a: FermiParameter) -> Option<(f64, f64)> {
    let a = a.value();
    if a.abs() < 1.0 {
        let t = (1.0 - a * a).sqrt();
        Some((t, -t))
    } else {
        None
    }
}

/// Open chord of the unit circle centred at `(center, 0)` at height `y`.
pub(crate) fn chord(center: f64, y: f64) -> Option<(f64, f64)> {
    if y.abs() < 1.0 {
        let s = (1.0 - y * y).sqrt();
        Some((center - s, center + s))
    } else {
        None
    }
}

fn subtract(keep: (f64, f64), cut: Option<(f64, f64)>) -> Vec<(f64, f64)> {
    let (lo, hi) = keep;
    let Some((clo, chi)) = cut else {
        return vec![keep];
    };
    if chi <= lo || clo >= hi {
        return vec![keep];
    }
    let mut out = Vec::with_capacity(2);
    if clo > lo {
        out.push((lo, clo));
    }
    if chi < hi {
        out.push((chi, hi));
    }
    out
}

/// x-intervals of the requested moon at height `y`.
pub fn moon_slab(y: f64, a: FermiParameter, side: MoonSide) -> Result<Slab> {
    ensure_finite(y, "slab height y")?;
    let a = a.value();
    let (own, other) = match side {
        MoonSide::Right => (a, -a),
        MoonSide::Left => (-a, a),
    };
    let Some(own_chord) = chord(own, y) else {
        return Ok(Slab::default());
    };
    let intervals = subtract(own_chord, chord(other, y))
        .into_iter()
        .filter(|(lo, hi)| lo < hi)
        .collect();
    Ok(Slab { intervals })
}

/// Area of the lens where the two unit disks overlap.
pub fn lens_area(a: FermiParameter) -> f64 {
    let a = a.value().abs();
    if a < 1.0 {
        2.0 * a.acos() - 2.0 * a * (1.0 - a * a).sqrt()
    } else {
        0.0
    }
}

/// Area of one moon.
pub fn moon_area(a: FermiParameter) -> f64 {
    PI - lens_area(a)
}
