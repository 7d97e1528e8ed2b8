//! Period-cell geometry of the decorated strip.
//!
//! The strip `(−L, 0)` in `x₂` carries, in every period `(iε, (i+1)ε)`, a thin
//! rectangular passage of width `d` and height `h` centred at `x₁ = iε + ε/2`,
//! topped by a room obtained by scaling the reference rectangle `B` by `b`.
//! Only one period (the ε-cell `(0, ε)`) is ever materialised.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Relative tolerance used when checking that `1/ε` is an integer.
const RECIPROCAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    /// `1/ε` is not a positive integer.
    PeriodNotReciprocalInteger { eps: f64 },
    /// A geometric constraint failed. `admissible_eps` carries the largest
    /// admissible period when the failure comes from a scaling preset.
    GeometryViolation {
        constraint: String,
        admissible_eps: Option<f64>,
    },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::PeriodNotReciprocalInteger { eps } => {
                write!(
                    f,
                    "PERIOD_NOT_RECIPROCAL_INTEGER: 1/eps = {} is not a positive integer",
                    1.0 / eps
                )
            }
            GeometryError::GeometryViolation {
                constraint,
                admissible_eps: Some(max_eps),
            } => write!(
                f,
                "GEOMETRY_VIOLATION: {constraint} (preset admissible only for eps <= {max_eps})"
            ),
            GeometryError::GeometryViolation { constraint, .. } => {
                write!(f, "GEOMETRY_VIOLATION: {constraint}")
            }
        }
    }
}

impl std::error::Error for GeometryError {}

fn violation(constraint: impl Into<String>) -> GeometryError {
    GeometryError::GeometryViolation {
        constraint: constraint.into(),
        admissible_eps: None,
    }
}

/// Exact sign test for `a * b - c <= 0`. A fused multiply-add rounds the exact
/// value once, so the sign of the result is the sign of the exact expression.
fn product_at_least(a: f64, b: f64, c: f64) -> bool {
    a.mul_add(b, -c) >= 0.0
}

/// One room-and-passage protuberance, in physical (ε-scaled) units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protuberance {
    /// Room scale `b`.
    pub room_scale: f64,
    /// Passage width `d`.
    pub passage_width: f64,
    /// Passage height `h`.
    pub passage_height: f64,
    /// Weight `ϱ` inside the room; the weight is 1 everywhere else.
    pub rho_room: f64,
    /// Mouth fraction `R`: the segment `(−R/2, R/2) × {0}` lies on the bottom of `B`.
    pub mouth_fraction: f64,
    /// Width of the reference room `B` (unit scale).
    pub room_width: f64,
    /// Height of the reference room `B` (unit scale).
    pub room_height: f64,
}

impl Protuberance {
    /// `|B|` of the reference room.
    pub fn reference_area(&self) -> f64 {
        self.room_width * self.room_height
    }

    /// Area of the physical room `b² |B|`.
    pub fn room_area(&self) -> f64 {
        self.room_scale * self.room_scale * self.reference_area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideParams {
    /// Period ε; `1/ε` must be an integer.
    pub eps: f64,
    /// Strip width `L`.
    pub width: f64,
    /// `None` describes the undecorated strip.
    pub protuberance: Option<Protuberance>,
}

impl WaveguideParams {
    pub fn unperturbed(eps: f64, width: f64) -> Self {
        WaveguideParams {
            eps,
            width,
            protuberance: None,
        }
    }

    /// Number of periods per unit length, `1/ε`.
    pub fn periods_per_unit(&self) -> usize {
        (1.0 / self.eps).round() as usize
    }

    /// `d ϱ / (h b² |B|)`, the finite-ε value whose limit is α.
    pub fn alpha_quotient(&self) -> Option<f64> {
        self.protuberance
            .map(|p| p.passage_width * p.rho_room / (p.passage_height * p.room_area()))
    }

    /// `b² |B| / (ε ϱ)`, the finite-ε value whose limit is r.
    pub fn r_quotient(&self) -> Option<f64> {
        self.protuberance
            .map(|p| p.room_area() / (self.eps * p.rho_room))
    }
}

/// Parameters that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams(WaveguideParams);

impl ValidatedParams {
    pub fn params(&self) -> &WaveguideParams {
        &self.0
    }

    pub fn eps(&self) -> f64 {
        self.0.eps
    }

    pub fn width(&self) -> f64 {
        self.0.width
    }

    pub fn protuberance(&self) -> Option<&Protuberance> {
        self.0.protuberance.as_ref()
    }
}

pub fn validate_params(p: WaveguideParams) -> Result<ValidatedParams, GeometryError> {
    if !(p.eps.is_finite() && p.eps > 0.0) {
        return Err(GeometryError::PeriodNotReciprocalInteger { eps: p.eps });
    }
    let inv = 1.0 / p.eps;
    if inv.round() < 1.0 || (inv - inv.round()).abs() > RECIPROCAL_TOL * inv.max(1.0) {
        return Err(GeometryError::PeriodNotReciprocalInteger { eps: p.eps });
    }
    if !(p.width.is_finite() && p.width > 0.0) {
        return Err(violation("strip width L > 0"));
    }
    let Some(q) = p.protuberance else {
        return Ok(ValidatedParams(p));
    };
    let positive = [
        (q.room_scale, "b > 0"),
        (q.passage_width, "d > 0"),
        (q.passage_height, "h > 0"),
        (q.rho_room, "rho_room > 0"),
        (q.room_width, "room_width > 0"),
        (q.room_height, "room_height > 0"),
    ];
    for (value, name) in positive {
        if !(value.is_finite() && value > 0.0) {
            return Err(violation(name));
        }
    }
    if !(q.mouth_fraction > 0.0 && q.mouth_fraction < 1.0) {
        return Err(violation("R in (0, 1)"));
    }
    // d / R <= b  <=>  R * b - d >= 0
    if !product_at_least(q.mouth_fraction, q.room_scale, q.passage_width) {
        return Err(violation("R^-1 d <= b"));
    }
    if q.room_scale > p.eps {
        return Err(violation("b <= eps"));
    }
    // B inside (−1/2, 1/2) × (0, ∞) with (−R/2, R/2) × {0} on its bottom edge.
    if q.room_width > 1.0 {
        return Err(violation("room inside (-1/2, 1/2) x (0, inf)"));
    }
    if q.mouth_fraction > q.room_width {
        return Err(violation("room bottom edge contains (-R/2, R/2) x {0}"));
    }
    Ok(ValidatedParams(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Strip,
    Passage,
    Room,
}

impl Region {
    pub fn tag(self) -> &'static str {
        match self {
            Region::Strip => "STRIP",
            Region::Passage => "PASSAGE",
            Region::Room => "ROOM",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Region> {
        match tag {
            "STRIP" => Some(Region::Strip),
            "PASSAGE" => Some(Region::Passage),
            "ROOM" => Some(Region::Room),
            _ => None,
        }
    }
}

/// Closed axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// The ε-cell `Ω^ε ∩ ((0, ε) × ℝ)` as up to three tagged rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub params: ValidatedParams,
    /// `(0, ε) × (−L, 0)`.
    pub strip: Rect,
    pub passage: Option<Rect>,
    pub room: Option<Rect>,
    /// `x₁`-extent of the upper strip boundary Γ inside the cell.
    pub gamma: (f64, f64),
}

impl CellGeometry {
    pub fn period(&self) -> f64 {
        self.strip.x1 - self.strip.x0
    }

    pub fn rho_room(&self) -> f64 {
        self.params.protuberance().map_or(1.0, |p| p.rho_room)
    }

    /// `|strip| + |passage| + |room|`.
    pub fn area(&self) -> f64 {
        self.strip.area()
            + self.passage.map_or(0.0, |r| r.area())
            + self.room.map_or(0.0, |r| r.area())
    }

    /// `∫ 1/ρ` over the cell.
    pub fn weighted_area(&self) -> f64 {
        self.strip.area()
            + self.passage.map_or(0.0, |r| r.area())
            + self.room.map_or(0.0, |r| r.area()) / self.rho_room()
    }

    pub fn rect(&self, region: Region) -> Option<Rect> {
        match region {
            Region::Strip => Some(self.strip),
            Region::Passage => self.passage,
            Region::Room => self.room,
        }
    }
}

pub fn build_cell(p: &ValidatedParams) -> CellGeometry {
    let eps = p.eps();
    let strip = Rect {
        x0: 0.0,
        x1: eps,
        y0: -p.width(),
        y1: 0.0,
    };
    let centre = 0.5 * eps;
    let (passage, room) = match p.protuberance() {
        None => (None, None),
        Some(q) => {
            let half_d = 0.5 * q.passage_width;
            let passage = Rect {
                x0: centre - half_d,
                x1: centre + half_d,
                y0: 0.0,
                y1: q.passage_height,
            };
            let half_w = 0.5 * q.room_scale * q.room_width;
            let room = Rect {
                x0: centre - half_w,
                x1: centre + half_w,
                y0: q.passage_height,
                y1: q.passage_height + q.room_scale * q.room_height,
            };
            (Some(passage), Some(room))
        }
    };
    CellGeometry {
        params: *p,
        strip,
        passage,
        room,
        gamma: (0.0, eps),
    }
}

/// Limits α, r of the scaling quotients plus the reference room shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPreset {
    pub alpha: f64,
    pub r: f64,
    /// Strip width `L`.
    pub width: f64,
    pub mouth_fraction: f64,
    pub room_width: f64,
    pub room_height: f64,
}

impl ScalingPreset {
    /// Unit-square room `(−1/2, 1/2) × (0, 1)` with mouth fraction 1/2.
    pub fn unit_square(alpha: f64, r: f64, width: f64) -> Self {
        ScalingPreset {
            alpha,
            r,
            width,
            mouth_fraction: 0.5,
            room_width: 1.0,
            room_height: 1.0,
        }
    }

    pub fn room_area_unit(&self) -> f64 {
        self.room_width * self.room_height
    }

    /// Largest ε for which `d = α r ε² <= R b = R ε`.
    pub fn max_eps(&self) -> f64 {
        self.mouth_fraction / (self.alpha * self.r)
    }
}

/// Parameters at period ε realising the limits of `preset` exactly:
/// `b = h = ε`, `ϱ = ε |B| / r`, `d = α r ε²`.
pub fn asymptotic_preset(s: &ScalingPreset, eps: f64) -> Result<ValidatedParams, GeometryError> {
    if !(s.alpha > 0.0 && s.r > 0.0) {
        return Err(violation("alpha > 0 and r > 0"));
    }
    let b = eps;
    let d = s.alpha * s.r * eps * eps;
    let params = WaveguideParams {
        eps,
        width: s.width,
        protuberance: Some(Protuberance {
            room_scale: b,
            passage_width: d,
            passage_height: eps,
            rho_room: eps * s.room_area_unit() / s.r,
            mouth_fraction: s.mouth_fraction,
            room_width: s.room_width,
            room_height: s.room_height,
        }),
    };
    match validate_params(params) {
        Err(GeometryError::GeometryViolation { constraint, .. }) if constraint == "R^-1 d <= b" => {
            let threshold = s.max_eps();
            // largest member of {1/n} not exceeding the threshold
            let n = (1.0 / threshold).ceil().max(1.0);
            Err(GeometryError::GeometryViolation {
                constraint: format!(
                    "R^-1 d <= b fails for the preset at eps = {eps} (needs alpha*r*eps <= R, eps <= {threshold})"
                ),
                admissible_eps: Some(1.0 / n),
            })
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> WaveguideParams {
        WaveguideParams {
            eps: 0.25,
            width: 1.0,
            protuberance: Some(Protuberance {
                room_scale: 0.25,
                passage_width: 1.0 / 64.0,
                passage_height: 0.25,
                rho_room: 0.25,
                mouth_fraction: 0.5,
                room_width: 1.0,
                room_height: 1.0,
            }),
        }
    }

    fn with<F: FnOnce(&mut Protuberance)>(f: F) -> WaveguideParams {
        let mut p = example();
        f(p.protuberance.as_mut().unwrap());
        p
    }

    #[test]
    fn accepts_admissible_parameters() {
        assert!(validate_params(example()).is_ok());
    }

    #[test]
    fn rejects_room_larger_than_period() {
        let err = validate_params(with(|q| q.room_scale = 0.5)).unwrap_err();
        match err {
            GeometryError::GeometryViolation { constraint, .. } => {
                assert_eq!(constraint, "b <= eps")
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rejects_non_reciprocal_period() {
        let mut p = example();
        p.eps = 0.3;
        assert_eq!(
            validate_params(p),
            Err(GeometryError::PeriodNotReciprocalInteger { eps: 0.3 })
        );
        p.eps = 2.0;
        assert!(validate_params(p).is_err());
    }

    #[test]
    fn rejects_degenerate_passage_and_wide_mouth() {
        assert!(validate_params(with(|q| q.passage_height = 0.0)).is_err());
        assert!(validate_params(with(|q| q.rho_room = -1.0)).is_err());
        assert!(validate_params(with(|q| q.passage_width = 0.2)).is_err());
        assert!(validate_params(with(|q| q.mouth_fraction = 1.0)).is_err());
        assert!(validate_params(with(|q| {
            q.room_width = 0.4;
        }))
        .is_err());
    }

    #[test]
    fn boundary_case_d_equals_rb_is_admissible() {
        // d = R b exactly
        assert!(validate_params(with(|q| q.passage_width = 0.125)).is_ok());
        assert!(validate_params(with(
            |q| q.passage_width = f64::from_bits(0.125f64.to_bits() + 1)
        ))
        .is_err());
    }

    #[test]
    fn cell_rectangles_follow_definitions() {
        let cell = build_cell(&validate_params(example()).unwrap());
        let passage = cell.passage.unwrap();
        let room = cell.room.unwrap();
        assert_eq!((passage.x0, passage.x1), (15.0 / 128.0, 17.0 / 128.0));
        assert_eq!((passage.y0, passage.y1), (0.0, 0.25));
        assert_eq!((room.x0, room.x1), (0.0, 0.25));
        assert_eq!((room.y0, room.y1), (0.25, 0.5));
        assert_eq!(
            cell.strip,
            Rect {
                x0: 0.0,
                x1: 0.25,
                y0: -1.0,
                y1: 0.0
            }
        );
    }

    #[test]
    fn preset_realises_limit_quotients() {
        let s = ScalingPreset::unit_square(1.0, 1.0, 1.0);
        let v = asymptotic_preset(&s, 0.125).unwrap();
        let q = v.protuberance().unwrap();
        assert_eq!(q.room_scale, 0.125);
        assert_eq!(q.passage_height, 0.125);
        assert_eq!(q.passage_width, 1.0 / 64.0);
        assert_eq!(q.rho_room, 0.125);
        assert_eq!(v.params().alpha_quotient(), Some(1.0));
        assert_eq!(v.params().r_quotient(), Some(1.0));
    }

    #[test]
    fn preset_reports_admissible_threshold() {
        let s = ScalingPreset::unit_square(4.0, 4.0, 1.0);
        match asymptotic_preset(&s, 0.25) {
            Err(GeometryError::GeometryViolation { admissible_eps, .. }) => {
                // α r ε² <= R ε  <=>  ε <= R/(α r) = 1/32
                assert_eq!(admissible_eps, Some(1.0 / 32.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(asymptotic_preset(&s, 1.0 / 32.0).is_ok());
    }

    #[test]
    fn unperturbed_cell_has_only_the_strip() {
        let cell = build_cell(&validate_params(WaveguideParams::unperturbed(1.0, 1.0)).unwrap());
        assert!(cell.passage.is_none() && cell.room.is_none());
        assert_eq!(cell.area(), 1.0);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn preset_quotients_exact_and_gluing_holds(
            alpha in 0.05f64..5.0,
            r in 0.05f64..5.0,
            n in 1usize..200,
        ) {
            let s = ScalingPreset::unit_square(alpha, r, 1.0);
            let eps = 1.0 / n as f64;
            if let Ok(v) = asymptotic_preset(&s, eps) {
                let p = v.params();
                prop_assert!((p.alpha_quotient().unwrap() / alpha - 1.0).abs() < 1e-14);
                prop_assert!((p.r_quotient().unwrap() / r - 1.0).abs() < 1e-14);
                let cell = build_cell(&v);
                let (pa, ro) = (cell.passage.unwrap(), cell.room.unwrap());
                prop_assert!(ro.x0 <= pa.x0 && pa.x1 <= ro.x1 && pa.y1 == ro.y0);
                // neighbouring passages are ε − d >= ε (1 − R) apart
                let gap = eps - pa.width();
                prop_assert!(gap >= eps * (1.0 - s.mouth_fraction) - 1e-15);
                prop_assert_eq!(build_cell(&v), cell);
            } else {
                prop_assert!(eps > s.max_eps());
            }
        }
    }
}
