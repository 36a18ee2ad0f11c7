//! Devices described as discretized complex current distributions.
//!
//! Every conductor is reduced to straight filament segments carrying complex
//! (phasor) currents. Planar conductors lie in planes of constant z; their
//! width is taken transverse to the centreline within that plane.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldcore::Vec3;

/// Straight current filament.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireSegment {
    pub start: Vec3,
    pub end: Vec3,
    /// Phasor amplitude in amperes, flowing from `start` to `end`.
    pub current: Complex64,
}

impl WireSegment {
    pub fn new(start: Vec3, end: Vec3, current: Complex64) -> Result<Self> {
        let s = WireSegment { start, end, current };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::domain("segment endpoints must be finite"));
        }
        if self.start == self.end {
            return Err(Error::domain("segment endpoints coincide"));
        }
        if !(self.current.re.is_finite() && self.current.im.is_finite()) {
            return Err(Error::domain("segment current must be finite"));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

/// Transverse current distribution across a strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurrentProfile {
    Uniform,
    /// Quasi-static edge singularity `1/√(1 − (2x/w)²)`, integrated per bin.
    #[default]
    EdgeWeighted,
}

/// Discretization settings shared by every strip of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripOptions {
    pub n_filaments: usize,
    pub profile: CurrentProfile,
}

impl Default for StripOptions {
    fn default() -> Self {
        StripOptions {
            n_filaments: 32,
            profile: CurrentProfile::EdgeWeighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripConductor {
    /// Polyline in a plane of constant z. A closed loop repeats its first point.
    pub centerline: Vec<Vec3>,
    pub width: f64,
    pub total_current: Complex64,
    pub profile: CurrentProfile,
    pub n_filaments: usize,
}

impl StripConductor {
    pub fn new(centerline: Vec<Vec3>, width: f64, total_current: Complex64, opts: StripOptions) -> Result<Self> {
        let s = StripConductor {
            centerline,
            width,
            total_current,
            profile: opts.profile,
            n_filaments: opts.n_filaments,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::domain("strip width must be positive"));
        }
        if self.n_filaments == 0 {
            return Err(Error::domain("strip needs at least one filament"));
        }
        if self.centerline.len() < 2 {
            return Err(Error::domain("strip centreline needs at least two points"));
        }
        if self.centerline.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("consecutive centreline points coincide"));
        }
        if self.centerline.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("centreline points must be finite"));
        }
        Ok(())
    }

    fn is_closed(&self) -> bool {
        self.centerline.len() > 2 && self.centerline.first() == self.centerline.last()
    }
}

/// A labelled collection of filament segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurrentModel {
    pub segments: Vec<WireSegment>,
    pub label: String,
}

impl CurrentModel {
    pub fn new(label: impl Into<String>, segments: Vec<WireSegment>) -> Self {
        CurrentModel {
            segments,
            label: label.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn scaled(&self, factor: Complex64) -> CurrentModel {
        let segments = self
            .segments
            .iter()
            .map(|s| WireSegment {
                current: s.current * factor,
                ..*s
            })
            .collect();
        CurrentModel::new(self.label.clone(), segments)
    }

    pub fn negated(&self) -> CurrentModel {
        let mut m = self.scaled(Complex64::new(-1.0, 0.0));
        m.label = format!("-{}", self.label);
        m
    }

    pub fn translated(&self, by: Vec3) -> CurrentModel {
        let segments = self
            .segments
            .iter()
            .map(|s| WireSegment {
                start: s.start + by,
                end: s.end + by,
                current: s.current,
            })
            .collect();
        CurrentModel::new(self.label.clone(), segments)
    }

    /// Reflection `x → −x` of the geometry; currents follow the segments.
    pub fn mirrored_x(&self) -> CurrentModel {
        let m = |v: Vec3| Vec3::new(-v.x, v.y, v.z);
        let segments = self
            .segments
            .iter()
            .map(|s| WireSegment {
                start: m(s.start),
                end: m(s.end),
                current: s.current,
            })
            .collect();
        CurrentModel::new(self.label.clone(), segments)
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(WireSegment::length).sum()
    }
}

/// Relative current carried by each filament bin, summing to one.
pub fn filament_weights(n: usize, profile: CurrentProfile) -> Vec<f64> {
    let raw: Vec<f64> = match profile {
        CurrentProfile::Uniform => vec![1.0; n],
        CurrentProfile::EdgeWeighted => (0..n)
            .map(|k| {
                // bin edges in u = 2x/w; exact antisymmetry keeps mirrored bins equal
                let lo = (2 * k as i64 - n as i64) as f64 / n as f64;
                let hi = (2 * k as i64 + 2 - n as i64) as f64 / n as f64;
                hi.clamp(-1.0, 1.0).asin() - lo.clamp(-1.0, 1.0).asin()
            })
            .collect(),
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Transverse offsets of the filament bin midpoints, ascending.
pub fn filament_offsets(n: usize, width: f64) -> Vec<f64> {
    let bin = width / n as f64;
    (0..n).map(|k| (k as f64 + 0.5 - n as f64 / 2.0) * bin).collect()
}

/// In-plane left normal of a direction lying in a z = const plane.
fn left_normal(t: Vec3) -> Vec3 {
    Vec3::Z.cross(t).normalized()
}

/// Offset polyline at signed distance `offset` (positive to the left of the
/// direction of travel), with mitred joints.
fn offset_polyline(points: &[Vec3], offset: f64, closed: bool) -> Vec<Vec3> {
    let n = points.len();
    let dir = |a: Vec3, b: Vec3| (b - a).normalized();
    (0..n)
        .map(|i| {
            let incoming = if i > 0 {
                Some(dir(points[i - 1], points[i]))
            } else if closed {
                Some(dir(points[n - 2], points[0]))
            } else {
                None
            };
            let outgoing = if i + 1 < n {
                Some(dir(points[i], points[i + 1]))
            } else if closed {
                Some(dir(points[0], points[1]))
            } else {
                None
            };
            let shift = match (incoming, outgoing) {
                (Some(a), Some(b)) => {
                    let na = left_normal(a);
                    let m = na + left_normal(b);
                    if m.norm() < 1e-12 {
                        na * offset
                    } else {
                        let m = m.normalized();
                        m * (offset / m.dot(na))
                    }
                }
                (Some(a), None) | (None, Some(a)) => left_normal(a) * offset,
                (None, None) => Vec3::ZERO,
            };
            points[i] + shift
        })
        .collect()
}

/// Splits a strip into parallel filaments at bin midpoints across its width.
pub fn discretize_strip(s: &StripConductor) -> Result<CurrentModel> {
    s.validate()?;
    let closed = s.is_closed();
    let offsets = filament_offsets(s.n_filaments, s.width);
    let weights = filament_weights(s.n_filaments, s.profile);
    let mut segments = Vec::with_capacity(s.n_filaments * (s.centerline.len() - 1));
    for (off, w) in offsets.into_iter().zip(weights) {
        let line = offset_polyline(&s.centerline, off, closed);
        let current = s.total_current * w;
        for pair in line.windows(2) {
            segments.push(WireSegment::new(pair[0], pair[1], current)?);
        }
    }
    Ok(CurrentModel::new("strip", segments))
}

/// Coplanar waveguide along +y, centred on `center`, in the plane z = center.z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpwSpec {
    #[serde(rename = "signal_width_m")]
    pub signal_width: f64,
    #[serde(rename = "gap_m")]
    pub gap: f64,
    #[serde(rename = "ground_width_m")]
    pub ground_width: f64,
    #[serde(rename = "length_m")]
    pub length: f64,
    #[serde(rename = "current_a")]
    pub current: Complex64,
    /// Fractions of the return current in the (left, right) ground planes.
    #[serde(default = "symmetric_split")]
    pub ground_split: (f64, f64),
    #[serde(rename = "center_m", default)]
    pub center: Vec3,
}

fn symmetric_split() -> (f64, f64) {
    (0.5, 0.5)
}

impl CpwSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.signal_width, self.gap, self.ground_width, self.length];
        if dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::domain("CPW dimensions must be positive"));
        }
        let (l, r) = self.ground_split;
        if (l + r - 1.0).abs() > 1e-12 || l < 0.0 || r < 0.0 {
            return Err(Error::domain(
                "ground split fractions must be non-negative and sum to 1",
            ));
        }
        Ok(())
    }
}

fn straight_strip(
    center: Vec3,
    half_length: f64,
    width: f64,
    current: Complex64,
    opts: StripOptions,
) -> Result<CurrentModel> {
    let line = vec![center - Vec3::Y * half_length, center + Vec3::Y * half_length];
    discretize_strip(&StripConductor::new(line, width, current, opts)?)
}

/// Signal strip with `+current` flanked by ground strips returning it in the
/// configured split.
pub fn build_cpw(spec: &CpwSpec, opts: StripOptions) -> Result<CurrentModel> {
    spec.validate()?;
    let half = spec.length / 2.0;
    let ground_offset = spec.signal_width / 2.0 + spec.gap + spec.ground_width / 2.0;
    let (left, right) = spec.ground_split;
    let c = spec.center;
    let mut segments = Vec::new();
    segments.extend(straight_strip(c, half, spec.signal_width, spec.current, opts)?.segments);
    segments.extend(
        straight_strip(
            c - Vec3::X * ground_offset,
            half,
            spec.ground_width,
            -spec.current * left,
            opts,
        )?
        .segments,
    );
    segments.extend(
        straight_strip(
            c + Vec3::X * ground_offset,
            half,
            spec.ground_width,
            -spec.current * right,
            opts,
        )?
        .segments,
    );
    Ok(CurrentModel::new("cpw", segments))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaLoopParams {
    pub radius_m: f64,
    pub gap_m: f64,
    pub width_m: f64,
    pub current_a: Complex64,
    #[serde(default)]
    pub lead_length_m: f64,
    #[serde(default)]
    pub center_m: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanderParams {
    pub n_turns: usize,
    pub pitch_m: f64,
    pub leg_m: f64,
    pub width_m: f64,
    pub current_a: Complex64,
    #[serde(default)]
    pub origin_m: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterdigitalParams {
    pub n_fingers: usize,
    pub finger_length_m: f64,
    pub finger_width_m: f64,
    pub finger_gap_m: f64,
    pub current_a: Complex64,
    /// Pieces per finger used to taper the charging current to zero at the tip.
    #[serde(default = "default_finger_pieces")]
    pub finger_pieces: usize,
    #[serde(default)]
    pub origin_m: Vec3,
}

fn default_finger_pieces() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoRingTrapParams {
    pub inner_radius_m: f64,
    pub outer_radius_m: f64,
    pub width_m: f64,
    /// Inner-loop current, counter-clockwise seen from +z.
    pub current_a: Complex64,
    /// Outer-loop current; defaults to the negated inner current.
    #[serde(default)]
    pub outer_current_a: Option<Complex64>,
    #[serde(default)]
    pub center_m: Vec3,
}

/// Device description document: `{"kind": ..., "params": {...}}` with SI
/// dimensions and `[re, im]` ampere currents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum DeviceSpec {
    Cpw(CpwSpec),
    OmegaLoop(OmegaLoopParams),
    Meander(MeanderParams),
    Interdigital(InterdigitalParams),
    TwoRingTrap(TwoRingTrapParams),
}

impl DeviceSpec {
    pub const KINDS: [&'static str; 5] = ["cpw", "omega-loop", "meander", "interdigital", "two-ring-trap"];

    /// Parses a device document, reporting unknown kinds as domain errors.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let kind = value
            .get("kind")
            .and_then(|k| k.as_str())
            .ok_or_else(|| Error::domain("device document needs a string \"kind\""))?;
        if !Self::KINDS.contains(&kind) {
            return Err(Error::domain(format!(
                "unknown device kind {kind:?}; expected one of {:?}",
                Self::KINDS
            )));
        }
        serde_json::from_value(value.clone()).map_err(|e| Error::domain(format!("device {kind}: {e}")))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DeviceSpec::Cpw(_) => "cpw",
            DeviceSpec::OmegaLoop(_) => "omega-loop",
            DeviceSpec::Meander(_) => "meander",
            DeviceSpec::Interdigital(_) => "interdigital",
            DeviceSpec::TwoRingTrap(_) => "two-ring-trap",
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

/// Number of arc pieces keeping every chord at or below `max_chord`.
fn arc_pieces(radius: f64, sweep: f64, max_chord: f64) -> usize {
    let max_step = 2.0 * (max_chord / (2.0 * radius)).min(1.0).asin();
    ((sweep / max_step).ceil() as usize).max(1)
}

fn arc(center: Vec3, radius: f64, from: f64, sweep: f64, pieces: usize) -> Vec<Vec3> {
    (0..=pieces)
        .map(|k| {
            let t = from + sweep * k as f64 / pieces as f64;
            center + Vec3::new(radius * t.cos(), radius * t.sin(), 0.0)
        })
        .collect()
}

/// Centreline of an omega loop: a circle opened by a chord `gap` at the
/// bottom, fed by optional straight leads running in −y.
pub fn omega_centerline(p: &OmegaLoopParams) -> Vec<Vec3> {
    let half_angle = (p.gap_m / (2.0 * p.radius_m)).asin();
    let start = -PI / 2.0 + half_angle;
    let sweep = 2.0 * PI - 2.0 * half_angle;
    let pieces = arc_pieces(p.radius_m, sweep, p.width_m / 4.0);
    let mut pts = arc(p.center_m, p.radius_m, start, sweep, pieces);
    if p.lead_length_m > 0.0 {
        let first = pts[0] - Vec3::Y * p.lead_length_m;
        let last = *pts.last().unwrap() - Vec3::Y * p.lead_length_m;
        pts.insert(0, first);
        pts.push(last);
    }
    pts
}

/// Centreline of a meander: `n_turns` repetitions of a leg along ±y followed
/// by a step of `pitch` along +x.
pub fn meander_centerline(p: &MeanderParams) -> Vec<Vec3> {
    let mut pts = vec![p.origin_m];
    let mut cur = p.origin_m;
    for k in 0..p.n_turns {
        let dir = if k % 2 == 0 { 1.0 } else { -1.0 };
        cur = cur + Vec3::Y * (dir * p.leg_m);
        pts.push(cur);
        cur = cur + Vec3::X * p.pitch_m;
        pts.push(cur);
    }
    pts
}

fn build_interdigital(p: &InterdigitalParams, opts: StripOptions) -> Result<CurrentModel> {
    if p.n_fingers < 2 || p.finger_pieces == 0 {
        return Err(Error::domain("interdigital needs ≥ 2 fingers and ≥ 1 piece per finger"));
    }
    let w = p.finger_width_m;
    let pitch = w + p.finger_gap_m;
    let left_x = 0.0;
    let right_x = p.finger_length_m + p.finger_gap_m + w;
    let n_left = (p.n_fingers + 1) / 2;
    let n_right = p.n_fingers / 2;
    let per_left = p.current_a / n_left as f64;
    let per_right = p.current_a / n_right as f64;
    let o = p.origin_m;
    let mut segments = Vec::new();
    let mut push = |a: Vec3, b: Vec3, i: Complex64, width: f64| -> Result<()> {
        let s = StripConductor::new(vec![o + a, o + b], width, i, opts)?;
        segments.extend(discretize_strip(&s)?.segments);
        Ok(())
    };
    let piece = p.finger_length_m / p.finger_pieces as f64;
    let taper = |k: usize| 1.0 - (k as f64 + 0.5) / p.finger_pieces as f64;
    let top = (p.n_fingers - 1) as f64 * pitch;
    // left comb: fed from the bottom of its bus, current leaves through fingers
    let mut bus = p.current_a;
    let mut y_prev = -pitch;
    for f in 0..n_left {
        let y = (2 * f) as f64 * pitch;
        push(Vec3::new(left_x, y_prev, 0.0), Vec3::new(left_x, y, 0.0), bus, w)?;
        bus -= per_left;
        for k in 0..p.finger_pieces {
            let x0 = left_x + w / 2.0 + k as f64 * piece;
            push(
                Vec3::new(x0, y, 0.0),
                Vec3::new(x0 + piece, y, 0.0),
                per_left * taper(k),
                w,
            )?;
        }
        y_prev = y;
    }
    // right comb: fingers charge toward the bus, which drains out at the top
    let mut bus = Complex64::new(0.0, 0.0);
    let mut y_prev = pitch;
    for f in 0..n_right {
        let y = (2 * f + 1) as f64 * pitch;
        if f > 0 {
            push(Vec3::new(right_x, y_prev, 0.0), Vec3::new(right_x, y, 0.0), bus, w)?;
        }
        for k in 0..p.finger_pieces {
            let x1 = right_x - w / 2.0 - k as f64 * piece;
            push(
                Vec3::new(x1 - piece, y, 0.0),
                Vec3::new(x1, y, 0.0),
                per_right * taper(k),
                w,
            )?;
        }
        bus += per_right;
        y_prev = y;
    }
    push(
        Vec3::new(right_x, y_prev, 0.0),
        Vec3::new(right_x, top + pitch, 0.0),
        bus,
        w,
    )?;
    Ok(CurrentModel::new("interdigital", segments))
}

fn ring(center: Vec3, radius: f64, width: f64, current: Complex64, opts: StripOptions) -> Result<CurrentModel> {
    let pieces = arc_pieces(radius, 2.0 * PI, width / 4.0).max(8);
    let mut pts = arc(center, radius, 0.0, 2.0 * PI, pieces);
    // close exactly so the strip is recognised as a loop
    *pts.last_mut().unwrap() = pts[0];
    discretize_strip(&StripConductor::new(pts, width, current, opts)?)
}

/// Polyline realization of one of the library devices.
pub fn build_device(spec: &DeviceSpec, opts: StripOptions) -> Result<CurrentModel> {
    let model = match spec {
        DeviceSpec::Cpw(c) => build_cpw(c, opts)?,
        DeviceSpec::OmegaLoop(p) => {
            positive("radius_m", p.radius_m)?;
            positive("gap_m", p.gap_m)?;
            positive("width_m", p.width_m)?;
            if p.gap_m >= 2.0 * p.radius_m {
                return Err(Error::domain("omega-loop gap must be smaller than its diameter"));
            }
            let s = StripConductor::new(omega_centerline(p), p.width_m, p.current_a, opts)?;
            discretize_strip(&s)?
        }
        DeviceSpec::Meander(p) => {
            positive("pitch_m", p.pitch_m)?;
            positive("leg_m", p.leg_m)?;
            positive("width_m", p.width_m)?;
            if p.n_turns == 0 {
                return Err(Error::domain("meander needs at least one turn"));
            }
            let s = StripConductor::new(meander_centerline(p), p.width_m, p.current_a, opts)?;
            discretize_strip(&s)?
        }
        DeviceSpec::Interdigital(p) => {
            positive("finger_length_m", p.finger_length_m)?;
            positive("finger_width_m", p.finger_width_m)?;
            positive("finger_gap_m", p.finger_gap_m)?;
            build_interdigital(p, opts)?
        }
        DeviceSpec::TwoRingTrap(p) => {
            positive("inner_radius_m", p.inner_radius_m)?;
            positive("width_m", p.width_m)?;
            if p.outer_radius_m <= p.inner_radius_m {
                return Err(Error::domain("two-ring-trap needs outer radius > inner radius"));
            }
            let outer_i = p.outer_current_a.unwrap_or(-p.current_a);
            superpose(&[
                ring(p.center_m, p.inner_radius_m, p.width_m, p.current_a, opts)?,
                ring(p.center_m, p.outer_radius_m, p.width_m, outer_i, opts)?,
            ])
        }
    };
    Ok(CurrentModel::new(spec.kind(), model.segments))
}

/// Concatenation of models; fields add by linearity.
pub fn superpose(models: &[CurrentModel]) -> CurrentModel {
    match models {
        [single] => single.clone(),
        _ => {
            let label = models.iter().map(|m| m.label.as_str()).collect::<Vec<_>>().join("+");
            let segments = models.iter().flat_map(|m| m.segments.iter().copied()).collect();
            CurrentModel::new(label, segments)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn amps(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn strip(n: usize, profile: CurrentProfile) -> StripConductor {
        StripConductor::new(
            vec![Vec3::new(0.0, -1e-3, 0.0), Vec3::new(0.0, 1e-3, 0.0)],
            120e-6,
            amps(0.05),
            StripOptions {
                n_filaments: n,
                profile,
            },
        )
        .unwrap()
    }

    #[test]
    fn single_filament_is_centerline() {
        for profile in [CurrentProfile::Uniform, CurrentProfile::EdgeWeighted] {
            let m = discretize_strip(&strip(1, profile)).unwrap();
            assert_eq!(m.segments.len(), 1);
            assert_eq!(m.segments[0].start.x, 0.0);
            assert_eq!(m.segments[0].current, amps(0.05));
        }
    }

    #[test]
    fn uniform_split() {
        let m = discretize_strip(&strip(4, CurrentProfile::Uniform)).unwrap();
        assert_eq!(m.segments.len(), 4);
        for s in &m.segments {
            assert_relative_eq!(s.current.re, 0.0125, max_relative = 1e-15);
        }
        let mut xs: Vec<f64> = m.segments.iter().map(|s| s.start.x * 1e6).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, want) in xs.iter().zip([-45.0, -15.0, 15.0, 45.0]) {
            assert_relative_eq!(*x, want, epsilon = 1e-9);
        }
    }

    /// Gauss-Legendre on 1/√(1−u²), with u = 1 − s² near ±1 to remove the
    /// endpoint singularity.
    fn bin_integral_oracle(lo: f64, hi: f64) -> f64 {
        const NODES: [(f64, f64); 5] = [
            (0.0, 0.568_888_888_888_888_9),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let gl = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize| -> f64 {
            let h = (b - a) / panels as f64;
            (0..panels)
                .map(|p| {
                    let (l, r) = (a + p as f64 * h, a + (p + 1) as f64 * h);
                    NODES
                        .iter()
                        .map(|(x, w)| w * f(0.5 * (l + r) + 0.5 * (r - l) * x))
                        .sum::<f64>()
                        * 0.5
                        * (r - l)
                })
                .sum()
        };
        // split at 0 and integrate each half on its own side
        let half = |a: f64, b: f64| -> f64 {
            // 0 ≤ a < b ≤ 1, substitute u = 1 − s²: ∫ 2/√(2 − s²) ds
            let (sa, sb) = ((1.0 - b).sqrt(), (1.0 - a).sqrt());
            gl(&|s: f64| 2.0 / (2.0 - s * s).sqrt(), sa, sb, 200)
        };
        let mut total = 0.0;
        if hi > 0.0 {
            total += half(lo.max(0.0), hi);
        }
        if lo < 0.0 {
            total += half((-hi).max(0.0), -lo);
        }
        total
    }

    #[test]
    fn edge_weights_match_bin_integrals() {
        let n = 6;
        let w = filament_weights(n, CurrentProfile::EdgeWeighted);
        let oracle: Vec<f64> = (0..n)
            .map(|k| bin_integral_oracle(-1.0 + 2.0 * k as f64 / n as f64, -1.0 + 2.0 * (k + 1) as f64 / n as f64))
            .collect();
        let total: f64 = oracle.iter().sum();
        assert_relative_eq!(total, PI, max_relative = 1e-10);
        assert_relative_eq!(w[0] / w[2], oracle[0] / oracle[2], max_relative = 1e-9);
        assert_relative_eq!(w[5] / w[3], oracle[5] / oracle[3], max_relative = 1e-9);
        for k in 0..n {
            assert_relative_eq!(w[k], oracle[k] / total, max_relative = 1e-9);
        }
    }

    #[test]
    fn current_conserved_per_strip() {
        for n in [1, 3, 32, 33, 64] {
            for profile in [CurrentProfile::Uniform, CurrentProfile::EdgeWeighted] {
                let mut s = strip(n, profile);
                s.total_current = Complex64::new(0.031, -0.017);
                let m = discretize_strip(&s).unwrap();
                let sum: Complex64 = m.segments.iter().map(|s| s.current).sum();
                assert!((sum - s.total_current).norm() <= 1e-12 * s.total_current.norm());
            }
        }
    }

    fn fig2_cpw(split: (f64, f64)) -> CpwSpec {
        CpwSpec {
            signal_width: 120e-6,
            gap: 54e-6,
            ground_width: 400e-6,
            length: 2e-3,
            current: amps(0.05),
            ground_split: split,
            center: Vec3::ZERO,
        }
    }

    #[test]
    fn cpw_return_currents() {
        let opts = StripOptions::default();
        let m = build_cpw(&fig2_cpw((0.5, 0.5)), opts).unwrap();
        assert_eq!(m.segments.len(), 3 * 32);
        let sum_where = |pred: &dyn Fn(f64) -> bool| -> Complex64 {
            m.segments.iter().filter(|s| pred(s.start.x)).map(|s| s.current).sum()
        };
        assert_relative_eq!(sum_where(&|x| x.abs() < 60e-6).re, 0.05, max_relative = 1e-12);
        assert_relative_eq!(sum_where(&|x| x < -60e-6).re, -0.025, max_relative = 1e-12);
        assert_relative_eq!(sum_where(&|x| x > 60e-6).re, -0.025, max_relative = 1e-12);

        let m = build_cpw(&fig2_cpw((0.65, 0.35)), opts).unwrap();
        let left: f64 = m
            .segments
            .iter()
            .filter(|s| s.start.x < -60e-6)
            .map(|s| s.current.re)
            .sum();
        assert_relative_eq!(left, -0.0325, max_relative = 1e-12);

        let mut zero = fig2_cpw((0.5, 0.5));
        zero.current = amps(0.0);
        let m = build_cpw(&zero, opts).unwrap();
        assert!(m
            .segments
            .iter()
            .all(|s| s.current == Complex64::new(0.0, 0.0) || s.current.norm() == 0.0));
    }

    #[test]
    fn cpw_mirror_symmetry() {
        let opts = StripOptions::default();
        let a = build_cpw(&fig2_cpw((0.7, 0.3)), opts).unwrap().mirrored_x();
        let b = build_cpw(&fig2_cpw((0.3, 0.7)), opts).unwrap();
        assert_eq!(a.segments.len(), b.segments.len());
        for s in &a.segments {
            assert!(b.segments.iter().any(|t| t == s), "no exact mirror for segment {s:?}");
        }
    }

    #[test]
    fn cpw_rejects_bad_split() {
        assert!(build_cpw(&fig2_cpw((0.6, 0.6)), StripOptions::default()).is_err());
    }

    #[test]
    fn meander_length_matches_closed_form() {
        let p = MeanderParams {
            n_turns: 7,
            pitch_m: 40e-6,
            leg_m: 300e-6,
            width_m: 10e-6,
            current_a: amps(0.01),
            origin_m: Vec3::ZERO,
        };
        let line = meander_centerline(&p);
        let len: f64 = line.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let expected = 7.0 * (40e-6 + 300e-6);
        assert_relative_eq!(len, expected, max_relative = 1e-12);
        let model = build_device(
            &DeviceSpec::Meander(p),
            StripOptions {
                n_filaments: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(model.total_length(), expected, max_relative = 1e-12);
    }

    #[test]
    fn omega_endpoints_separated_by_gap() {
        let p = OmegaLoopParams {
            radius_m: 300e-6,
            gap_m: 80e-6,
            width_m: 40e-6,
            current_a: amps(0.02),
            lead_length_m: 0.0,
            center_m: Vec3::new(1e-4, 2e-4, 0.0),
        };
        let line = omega_centerline(&p);
        let (a, b) = (line[0], *line.last().unwrap());
        assert_relative_eq!((a - b).norm(), 80e-6, max_relative = 1e-12);
        for q in [a, b] {
            assert_relative_eq!((q - p.center_m).norm(), 300e-6, max_relative = 1e-12);
        }
        for w in line.windows(2) {
            assert!((w[1] - w[0]).norm() <= 10e-6 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn two_ring_net_currents() {
        let p = TwoRingTrapParams {
            inner_radius_m: 100e-6,
            outer_radius_m: 200e-6,
            width_m: 20e-6,
            current_a: amps(0.1),
            outer_current_a: None,
            center_m: Vec3::ZERO,
        };
        let m = build_device(
            &DeviceSpec::TwoRingTrap(p),
            StripOptions {
                n_filaments: 4,
                ..Default::default()
            },
        )
        .unwrap();
        // current crossing the half-plane y = 0, x > 0, counted with direction +y
        let crossing = |rmin: f64, rmax: f64| -> f64 {
            m.segments
                .iter()
                .filter(|s| (s.start.y < 0.0) != (s.end.y < 0.0))
                .filter(|s| s.start.x > rmin && s.start.x < rmax)
                .map(|s| s.current.re * (s.end.y - s.start.y).signum())
                .sum()
        };
        assert_relative_eq!(crossing(50e-6, 150e-6), 0.1, max_relative = 1e-12);
        assert_relative_eq!(crossing(150e-6, 250e-6), -0.1, max_relative = 1e-12);
        // a closed loop: each filament's last endpoint meets its first
        let first = m.segments[0].start;
        assert!(
            m.segments.iter().skip(1).any(|s| s.end == first),
            "inner filament not closed"
        );
    }

    #[test]
    fn unknown_kind_rejected() {
        let doc = serde_json::json!({"kind": "toroid", "params": {}});
        assert!(matches!(DeviceSpec::from_json(&doc), Err(Error::Domain(_))));
        let doc = serde_json::json!({"kind": "two-ring-trap", "params": {
            "inner_radius_m": 2e-4, "outer_radius_m": 1e-4, "width_m": 1e-5, "current_a": [0.1, 0.0]}});
        let spec = DeviceSpec::from_json(&doc).unwrap();
        assert!(build_device(&spec, StripOptions::default()).is_err());
    }

    #[test]
    fn builders_are_deterministic() {
        let spec = DeviceSpec::Interdigital(InterdigitalParams {
            n_fingers: 5,
            finger_length_m: 200e-6,
            finger_width_m: 10e-6,
            finger_gap_m: 10e-6,
            current_a: amps(0.02),
            finger_pieces: 4,
            origin_m: Vec3::ZERO,
        });
        let a = build_device(&spec, StripOptions::default()).unwrap();
        let b = build_device(&spec, StripOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn superpose_identity_and_concat() {
        let a = discretize_strip(&strip(3, CurrentProfile::Uniform)).unwrap();
        assert_eq!(superpose(std::slice::from_ref(&a)), a);
        let both = superpose(&[a.clone(), a.negated()]);
        assert_eq!(both.segments.len(), 6);
    }
}
