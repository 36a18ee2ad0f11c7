//! Coordinate frames, NV-axis geometry and polarization bookkeeping.
//!
//! Positions are in meters and fields in teslas. Microwave fields are
//! complex phasors `B(r)` whose physical value is `Re[B e^{-iωt}]`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// NV gyromagnetic ratio, 28 kHz/µT, in Hz/T.
pub const GAMMA_NV: f64 = 2.8e10;
/// Ground-state zero-field splitting in Hz.
pub const D_ZFS: f64 = 2.87e9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// Euclidean norm via `hypot`, safe against overflow of the squares.
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Time-harmonic vector phasor (teslas).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexVec3 {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl ComplexVec3 {
    pub const ZERO: ComplexVec3 = ComplexVec3 {
        x: Complex64::new(0.0, 0.0),
        y: Complex64::new(0.0, 0.0),
        z: Complex64::new(0.0, 0.0),
    };

    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        ComplexVec3 { x, y, z }
    }

    /// Real direction scaled by a complex amplitude.
    pub fn from_real(v: Vec3, amplitude: Complex64) -> Self {
        ComplexVec3::new(amplitude * v.x, amplitude * v.y, amplitude * v.z)
    }

    pub fn re(&self) -> Vec3 {
        Vec3::new(self.x.re, self.y.re, self.z.re)
    }

    pub fn im(&self) -> Vec3 {
        Vec3::new(self.x.im, self.y.im, self.z.im)
    }

    /// Bilinear projection `b · d` onto a real direction.
    pub fn dot_real(&self, d: Vec3) -> Complex64 {
        self.x * d.x + self.y * d.y + self.z * d.z
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn scale(&self, s: Complex64) -> ComplexVec3 {
        ComplexVec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(&self) -> bool {
        self.re().is_finite() && self.im().is_finite()
    }
}

impl Add for ComplexVec3 {
    type Output = ComplexVec3;
    fn add(self, o: ComplexVec3) -> ComplexVec3 {
        ComplexVec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for ComplexVec3 {
    fn add_assign(&mut self, o: ComplexVec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Mul<f64> for ComplexVec3 {
    type Output = ComplexVec3;
    fn mul(self, s: f64) -> ComplexVec3 {
        ComplexVec3::new(self.x * s, self.y * s, self.z * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabAxis {
    X,
    Y,
    Z,
}

impl LabAxis {
    pub fn unit(self) -> Vec3 {
        match self {
            LabAxis::X => Vec3::X,
            LabAxis::Y => Vec3::Y,
            LabAxis::Z => Vec3::Z,
        }
    }
}

/// Plane in which the NV axis is tilted: the axis leaves `from` and turns
/// toward `toward` by the tilt angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisPair {
    pub toward: LabAxis,
    pub from: LabAxis,
}

impl AxisPair {
    pub const XZ: AxisPair = AxisPair {
        toward: LabAxis::X,
        from: LabAxis::Z,
    };
    pub const YZ: AxisPair = AxisPair {
        toward: LabAxis::Y,
        from: LabAxis::Z,
    };
    pub const XY: AxisPair = AxisPair {
        toward: LabAxis::X,
        from: LabAxis::Y,
    };
}

/// Right-handed orthonormal frame `(e1, e2, axis)` attached to the NV axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvFrame {
    axis: Vec3,
    e1: Vec3,
    e2: Vec3,
}

const FRAME_TOL: f64 = 1e-12;

impl NvFrame {
    /// Builds a frame from an axis and a transverse reference direction;
    /// `e1` is the part of `reference` orthogonal to the axis.
    pub fn new(axis: Vec3, reference: Vec3) -> Result<Self> {
        if !axis.is_finite() || axis.norm() == 0.0 {
            return Err(Error::domain("NV axis must be finite and non-zero"));
        }
        let axis = axis.normalized();
        let r = reference - axis * reference.dot(axis);
        if !r.is_finite() || r.norm() < 1e-9 * reference.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::domain("reference direction is parallel to the NV axis"));
        }
        let e1 = r.normalized();
        let e2 = axis.cross(e1);
        NvFrame::from_parts(axis, e1, e2)
    }

    /// Accepts an explicit triad, checking it is right-handed and orthonormal.
    pub fn from_parts(axis: Vec3, e1: Vec3, e2: Vec3) -> Result<Self> {
        let f = NvFrame { axis, e1, e2 };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: Vec3| (v.norm() - 1.0).abs() <= FRAME_TOL;
        let ok = unit(self.axis)
            && unit(self.e1)
            && unit(self.e2)
            && self.axis.dot(self.e1).abs() < FRAME_TOL
            && self.axis.dot(self.e2).abs() < FRAME_TOL
            && self.e1.dot(self.e2).abs() < FRAME_TOL
            && (self.e1.cross(self.e2) - self.axis).norm() <= FRAME_TOL;
        if ok {
            Ok(())
        } else {
            Err(Error::domain("NV frame is not a right-handed orthonormal triad"))
        }
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn e1(&self) -> Vec3 {
        self.e1
    }

    pub fn e2(&self) -> Vec3 {
        self.e2
    }

    /// Rotates the transverse pair about the axis by `angle` radians.
    pub fn rotate_transverse(&self, angle: f64) -> NvFrame {
        let (s, c) = angle.sin_cos();
        let e1 = self.e1 * c + self.e2 * s;
        let e2 = self.axis.cross(e1);
        NvFrame {
            axis: self.axis,
            e1,
            e2,
        }
    }
}

/// NV frame whose axis lies in `plane`, `tilt_deg` away from `plane.from`.
pub fn nv_frame_from_tilt(tilt_deg: f64, plane: AxisPair) -> Result<NvFrame> {
    if !(0.0..=90.0).contains(&tilt_deg) {
        return Err(Error::domain(format!("tilt {tilt_deg}° outside [0°, 90°]")));
    }
    if plane.toward == plane.from {
        return Err(Error::domain("tilt plane must name two distinct axes"));
    }
    let (s, c) = tilt_deg.to_radians().sin_cos();
    let toward = plane.toward.unit();
    let from = plane.from.unit();
    let axis = toward * s + from * c;
    let e1 = toward * c - from * s;
    let e2 = axis.cross(e1);
    NvFrame::from_parts(axis, e1, e2)
}

/// Axial and circular components of a phasor relative to an NV frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization {
    pub parallel: f64,
    pub plus: f64,
    pub minus: f64,
}

/// Splits `b` into `|b·axis|` and the circular magnitudes `|u ∓ i v| / 2`,
/// where `u = b·e1`, `v = b·e2`.
pub fn decompose_polarization(b: &ComplexVec3, frame: &NvFrame) -> Polarization {
    let i = Complex64::i();
    let u = b.dot_real(frame.e1);
    let v = b.dot_real(frame.e2);
    Polarization {
        parallel: b.dot_real(frame.axis).norm(),
        plus: (u - i * v).norm() * 0.5,
        minus: (u + i * v).norm() * 0.5,
    }
}

/// Reverses the NV axis (and `e2`, keeping the frame right-handed). Under the
/// flipped frame the σ+ and σ− magnitudes swap.
pub fn flip_axis(frame: &NvFrame) -> NvFrame {
    NvFrame {
        axis: -frame.axis,
        e1: frame.e1,
        e2: -frame.e2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    #[serde(rename = "sigma-plus")]
    SigmaPlus,
    #[serde(rename = "sigma-minus")]
    SigmaMinus,
}

impl Transition {
    pub fn other(self) -> Transition {
        match self {
            Transition::SigmaPlus => Transition::SigmaMinus,
            Transition::SigmaMinus => Transition::SigmaPlus,
        }
    }
}

/// Static-field configuration used to tune a transition onto the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasConfig {
    /// Hz
    pub d_zfs: f64,
    /// Hz/T
    pub gamma_nv: f64,
    /// Direction of the static field along the NV axis.
    pub sign: i8,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig {
            d_zfs: D_ZFS,
            gamma_nv: GAMMA_NV,
            sign: 1,
        }
    }
}

impl BiasConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_nv > 0.0 && self.d_zfs > 0.0) {
            return Err(Error::domain("gamma_nv and d_zfs must be positive"));
        }
        if self.sign != 1 && self.sign != -1 {
            return Err(Error::domain("bias sign must be +1 or -1"));
        }
        Ok(())
    }
}

/// Static field magnitude (T) that brings `transition` into resonance with
/// `f_mw` (Hz): `f_mw = d_zfs ± gamma_nv · B_dc`.
pub fn bias_field_for_frequency(f_mw: f64, transition: Transition, cfg: &BiasConfig) -> Result<f64> {
    cfg.validate()?;
    if !(f_mw > 0.0) {
        return Err(Error::domain("microwave frequency must be positive"));
    }
    let detuning = f_mw - cfg.d_zfs;
    let b = match transition {
        Transition::SigmaPlus => detuning / cfg.gamma_nv,
        Transition::SigmaMinus => -detuning / cfg.gamma_nv,
    };
    if b < 0.0 {
        return Err(Error::domain(format!(
            "{transition:?} cannot reach {f_mw} Hz with a non-negative field; use {:?}",
            transition.other()
        )));
    }
    // normalize -0.0
    Ok(b.abs())
}

/// NV-doped slab centred `h` above the device plane with thickness `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingLayer {
    pub h: f64,
    pub d: f64,
    pub n_samples: usize,
}

impl SensingLayer {
    pub const DEFAULT_SAMPLES: usize = 15;

    pub fn new(h: f64, d: f64, n_samples: usize) -> Result<Self> {
        let l = SensingLayer { h, d, n_samples };
        l.validate()?;
        Ok(l)
    }

    /// Infinitely thin layer at height `h`.
    pub fn thin(h: f64) -> Self {
        SensingLayer {
            h,
            d: 0.0,
            n_samples: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.d.is_finite()) {
            return Err(Error::domain("layer height and thickness must be finite"));
        }
        if self.d < 0.0 || self.h - self.d / 2.0 < 0.0 || self.n_samples == 0 {
            return Err(Error::domain(
                "sensing layer needs d ≥ 0, h − d/2 ≥ 0 and n_samples ≥ 1",
            ));
        }
        Ok(())
    }

    /// Midpoint quadrature heights in ascending order. A zero-thickness layer
    /// yields the single height `h`.
    pub fn heights(&self) -> Vec<f64> {
        if self.d == 0.0 {
            return vec![self.h];
        }
        let n = self.n_samples;
        let step = self.d / n as f64;
        let lo = self.h - self.d / 2.0;
        (0..n).map(|k| lo + (k as f64 + 0.5) * step).collect()
    }
}

/// Mean of `f` over the layer thickness at lateral position `(x, y)`.
pub fn layer_average<F>(f: F, layer: &SensingLayer, x: f64, y: f64) -> f64
where
    F: Fn(Vec3) -> f64,
{
    let hs = layer.heights();
    let n = hs.len() as f64;
    hs.into_iter().map(|z| f(Vec3::new(x, y, z))).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tilt_examples() {
        let f = nv_frame_from_tilt(0.0, AxisPair::XZ).unwrap();
        assert_abs_diff_eq!(f.axis().z, 1.0, epsilon = 1e-15);
        let f = nv_frame_from_tilt(90.0, AxisPair::XZ).unwrap();
        assert_abs_diff_eq!(f.axis().x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.axis().z, 0.0, epsilon = 1e-15);
        let f = nv_frame_from_tilt(29.5, AxisPair::XZ).unwrap();
        assert_abs_diff_eq!(f.axis().x, 0.4924, epsilon = 5e-5);
        assert_abs_diff_eq!(f.axis().y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.axis().z, 0.8704, epsilon = 5e-5);
        f.validate().unwrap();
    }

    #[test]
    fn tilt_rejects_bad_input() {
        assert!(nv_frame_from_tilt(-1.0, AxisPair::XZ).is_err());
        assert!(nv_frame_from_tilt(90.5, AxisPair::XZ).is_err());
        let same = AxisPair {
            toward: LabAxis::Z,
            from: LabAxis::Z,
        };
        assert!(nv_frame_from_tilt(10.0, same).is_err());
    }

    #[test]
    fn polarization_examples() {
        let f = nv_frame_from_tilt(29.5, AxisPair::XZ).unwrap();
        let beta = 3.0e-6;
        let lin = ComplexVec3::from_real(f.e1(), c(beta, 0.0));
        let p = decompose_polarization(&lin, &f);
        assert_abs_diff_eq!(p.plus, beta / 2.0, epsilon = 1e-18);
        assert_abs_diff_eq!(p.minus, beta / 2.0, epsilon = 1e-18);

        let circ = ComplexVec3::from_real(f.e1(), c(beta, 0.0)) + ComplexVec3::from_real(f.e2(), c(0.0, beta));
        let p = decompose_polarization(&circ, &f);
        assert_abs_diff_eq!(p.plus, beta, epsilon = 1e-18);
        assert_abs_diff_eq!(p.minus, 0.0, epsilon = 1e-18);

        let ax = ComplexVec3::from_real(f.axis(), c(beta, 0.0));
        let p = decompose_polarization(&ax, &f);
        assert_abs_diff_eq!(p.plus, 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(p.minus, 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(p.parallel, beta, epsilon = 1e-18);

        let flipped = flip_axis(&f);
        flipped.validate().unwrap();
        let p = decompose_polarization(&circ, &flipped);
        assert_abs_diff_eq!(p.plus, 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(p.minus, beta, epsilon = 1e-18);
        assert_eq!(flip_axis(&flipped), f);
    }

    #[test]
    fn bias_examples() {
        let cfg = BiasConfig::default();
        assert_eq!(
            bias_field_for_frequency(D_ZFS, Transition::SigmaPlus, &cfg).unwrap(),
            0.0
        );
        assert_eq!(
            bias_field_for_frequency(D_ZFS, Transition::SigmaMinus, &cfg).unwrap(),
            0.0
        );
        let b = bias_field_for_frequency(2.77e9, Transition::SigmaMinus, &cfg).unwrap();
        assert_abs_diff_eq!(b * 1e6, 3571.43, epsilon = 0.01);
        let b = bias_field_for_frequency(2.9674e9, Transition::SigmaPlus, &cfg).unwrap();
        assert_abs_diff_eq!(b * 1e6, 3478.57, epsilon = 0.01);
        let err = bias_field_for_frequency(2.77e9, Transition::SigmaPlus, &cfg).unwrap_err();
        assert!(err.to_string().contains("SigmaMinus"));
        assert!(bias_field_for_frequency(0.0, Transition::SigmaPlus, &cfg).is_err());
    }

    #[test]
    fn layer_examples() {
        let thin = SensingLayer::new(12e-6, 0.0, 15).unwrap();
        let f = |p: Vec3| p.z.powi(3) + p.x;
        assert_eq!(layer_average(f, &thin, 1e-6, 0.0), f(Vec3::new(1e-6, 0.0, 12e-6)));

        let layer = SensingLayer::new(12e-6, 14e-6, 15).unwrap();
        assert_eq!(layer_average(|_| 7.5, &layer, 0.0, 0.0), 7.5);
        assert_abs_diff_eq!(layer_average(|p| p.z, &layer, 0.0, 0.0), 12e-6, epsilon = 1e-18);

        assert!(SensingLayer::new(5e-6, 14e-6, 15).is_err());
        assert!(SensingLayer::new(12e-6, -1e-6, 15).is_err());
        assert!(SensingLayer::new(12e-6, 1e-6, 0).is_err());
    }

    #[test]
    fn layer_average_is_second_order() {
        // midpoint error for z² is step²/12
        let exact = |l: &SensingLayer| {
            let (a, b) = (l.h - l.d / 2.0, l.h + l.d / 2.0);
            (b.powi(3) - a.powi(3)) / (3.0 * l.d)
        };
        let mut errs = Vec::new();
        for n in [4, 8, 16, 32] {
            let l = SensingLayer::new(12.0, 14.0, n).unwrap();
            errs.push((layer_average(|p| p.z * p.z, &l, 0.0, 0.0) - exact(&l)).abs());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((2.0..=8.0).contains(&ratio), "ratio {ratio}");
        }
    }
}
