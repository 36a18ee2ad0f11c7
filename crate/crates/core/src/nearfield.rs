//! Quasi-static Biot-Savart evaluation of microwave phasor fields.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::currents::{CurrentModel, WireSegment};
use crate::error::{Error, Result};
use crate::fieldcore::{decompose_polarization, ComplexVec3, NvFrame, SensingLayer, Transition, Vec3};

/// Vacuum permeability, 4π×10⁻⁷ H/m.
pub const MU0: f64 = 4.0 * PI * 1e-7;
const MU0_OVER_4PI: f64 = 1e-7;

/// Points closer than this to a filament are rejected.
pub const EXCLUSION_RADIUS: f64 = 0.1e-6;

/// Pixel-centred rectangular grid in an arbitrary plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec3,
    pub axes: [Vec3; 2],
    pub nx: usize,
    pub ny: usize,
    /// m/pixel
    pub pitch: f64,
}

impl GridSpec {
    /// Grid in a plane of constant z, axes along x and y.
    pub fn xy(origin: Vec3, nx: usize, ny: usize, pitch: f64) -> Self {
        GridSpec {
            origin,
            axes: [Vec3::X, Vec3::Y],
            nx,
            ny,
            pitch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.axes;
        let ok = (a.norm() - 1.0).abs() <= 1e-12 && (b.norm() - 1.0).abs() <= 1e-12 && a.dot(b).abs() <= 1e-12;
        if !ok {
            return Err(Error::domain("grid axes must be orthonormal"));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::domain("grid needs at least one pixel per axis"));
        }
        if !(self.pitch > 0.0 && self.pitch.is_finite()) || !self.origin.is_finite() {
            return Err(Error::domain("grid pitch must be positive and origin finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn normal(&self) -> Vec3 {
        self.axes[0].cross(self.axes[1])
    }

    /// Centre of pixel `(i, j)`; `i` runs along `axes[0]`.
    pub fn pixel_position(&self, i: usize, j: usize) -> Vec3 {
        self.origin + self.axes[0] * ((i as f64 + 0.5) * self.pitch) + self.axes[1] * ((j as f64 + 0.5) * self.pitch)
    }

    /// Row-major index of pixel `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn translated(&self, by: Vec3) -> GridSpec {
        GridSpec {
            origin: self.origin + by,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldPhasorMap {
    pub grid: GridSpec,
    /// Row-major, `grid.index(i, j)`.
    pub values: Vec<ComplexVec3>,
}

impl FieldPhasorMap {
    pub fn get(&self, i: usize, j: usize) -> ComplexVec3 {
        self.values[self.grid.index(i, j)]
    }
}

/// Which magnitude a scalar field map holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    #[serde(rename = "sigma-plus")]
    SigmaPlus,
    #[serde(rename = "sigma-minus")]
    SigmaMinus,
    #[serde(rename = "axial")]
    Axial,
}

impl From<Transition> for Component {
    fn from(t: Transition) -> Self {
        match t {
            Transition::SigmaPlus => Component::SigmaPlus,
            Transition::SigmaMinus => Component::SigmaMinus,
        }
    }
}

/// Non-negative scalar amplitude map in teslas.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedFieldMap {
    pub grid: GridSpec,
    pub component: Component,
    pub values: Vec<f64>,
}

impl PolarizedFieldMap {
    pub fn uniform(grid: GridSpec, component: Component, value: f64) -> Self {
        PolarizedFieldMap {
            grid,
            component,
            values: vec![value; grid.len()],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Values along row `j` (varying `i`).
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.grid.nx..(j + 1) * self.grid.nx]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.grid.ny).map(|j| self.get(i, j)).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PolarizedFieldMap {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

fn distance_to_segment(seg: &WireSegment, p: Vec3) -> f64 {
    let l = seg.end - seg.start;
    let t = ((p - seg.start).dot(l) / l.dot(l)).clamp(0.0, 1.0);
    (p - (seg.start + l * t)).norm()
}

fn segment_field_unchecked(seg: &WireSegment, p: Vec3) -> ComplexVec3 {
    let l = seg.end - seg.start;
    let r1 = p - seg.start;
    let r2 = p - seg.end;
    let lxr = l.cross(r1);
    let denom = lxr.dot(lxr);
    // on the axis beyond the ends the field vanishes
    if denom <= (EXCLUSION_RADIUS * l.norm()).powi(2) {
        return ComplexVec3::ZERO;
    }
    let geom = l.dot(r1) / r1.norm() - l.dot(r2) / r2.norm();
    let dir = lxr * (MU0_OVER_4PI * geom / denom);
    ComplexVec3::from_real(dir, seg.current)
}

/// Closed-form field of a finite straight filament, `(µ0 I / 4πρ)(sin θ2 − sin θ1)`
/// in the azimuthal direction, with the complex current carried through.
pub fn segment_field(seg: &WireSegment, p: Vec3) -> Result<ComplexVec3> {
    let d = distance_to_segment(seg, p);
    if d < EXCLUSION_RADIUS {
        return Err(Error::Singularity {
            segment: 0,
            point: p,
            distance: d,
            pixel: None,
        });
    }
    Ok(segment_field_unchecked(seg, p))
}

/// Field of a whole model at one point; segments summed in model order.
pub fn model_field(model: &CurrentModel, p: Vec3) -> Result<ComplexVec3> {
    let mut acc = ComplexVec3::ZERO;
    for (k, seg) in model.segments.iter().enumerate() {
        let d = distance_to_segment(seg, p);
        if d < EXCLUSION_RADIUS {
            return Err(Error::Singularity {
                segment: k,
                point: p,
                distance: d,
                pixel: None,
            });
        }
        acc += segment_field_unchecked(seg, p);
    }
    Ok(acc)
}

/// Layer-averaged phasor field on every pixel. Layer heights are offsets
/// along the grid normal; the complex field is averaged before any projection.
pub fn evaluate_phasor_map(model: &CurrentModel, grid: &GridSpec, layer: &SensingLayer) -> Result<FieldPhasorMap> {
    grid.validate()?;
    layer.validate()?;
    let heights = layer.heights();
    let inv_n = 1.0 / heights.len() as f64;
    let normal = grid.normal();
    let results: Vec<Result<ComplexVec3>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = grid.coords(idx);
            let base = grid.pixel_position(i, j);
            let mut acc = ComplexVec3::ZERO;
            for &h in &heights {
                acc += model_field(model, base + normal * h).map_err(|e| match e {
                    Error::Singularity {
                        segment,
                        point,
                        distance,
                        ..
                    } => Error::Singularity {
                        segment,
                        point,
                        distance,
                        pixel: Some((i, j)),
                    },
                    other => other,
                })?;
            }
            Ok(if heights.len() == 1 { acc } else { acc * inv_n })
        })
        .collect();
    let values = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FieldPhasorMap { grid: *grid, values })
}

/// Per-pixel polarization magnitude of a phasor map.
pub fn project_polarization(fmap: &FieldPhasorMap, frame: &NvFrame, component: Component) -> Result<PolarizedFieldMap> {
    frame.validate()?;
    let values = fmap
        .values
        .iter()
        .map(|b| {
            let p = decompose_polarization(b, frame);
            match component {
                Component::SigmaPlus => p.plus,
                Component::SigmaMinus => p.minus,
                Component::Axial => p.parallel,
            }
        })
        .collect();
    Ok(PolarizedFieldMap {
        grid: fmap.grid,
        component,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcore::{flip_axis, nv_frame_from_tilt, AxisPair};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn amps(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_current_gives_zero() {
        let seg = WireSegment::new(Vec3::ZERO, Vec3::X, amps(0.0)).unwrap();
        assert_eq!(segment_field(&seg, Vec3::new(0.5, 0.0, 1e-5)).unwrap().norm_sqr(), 0.0);
    }

    #[test]
    fn long_segment_approaches_infinite_wire() {
        let r = 12e-6;
        let half = 100.0 * r / 2.0;
        let seg = WireSegment::new(Vec3::new(0.0, -half, 0.0), Vec3::new(0.0, half, 0.0), amps(0.05)).unwrap();
        let b = segment_field(&seg, Vec3::new(0.0, 0.0, r)).unwrap();
        let inf = MU0 * 0.05 / (2.0 * PI * r);
        assert_relative_eq!(inf * 1e6, 833.333, max_relative = 1e-5);
        assert_relative_eq!(b.norm_sqr().sqrt(), inf, max_relative = 1e-3);
    }

    #[test]
    fn square_loop_centre() {
        let a = 50e-6;
        let i = 0.02;
        let c = [
            Vec3::new(-a, -a, 0.0),
            Vec3::new(a, -a, 0.0),
            Vec3::new(a, a, 0.0),
            Vec3::new(-a, a, 0.0),
        ];
        let segs: Vec<_> = (0..4)
            .map(|k| WireSegment::new(c[k], c[(k + 1) % 4], amps(i)).unwrap())
            .collect();
        let model = CurrentModel::new("square", segs);
        let b = model_field(&model, Vec3::ZERO).unwrap();
        let expected = 2f64.sqrt() * MU0 * i / (PI * a);
        assert_relative_eq!(b.z.re, expected, max_relative = 1e-12);
        assert_eq!(b.x.re, 0.0);
    }

    #[test]
    fn singularity_reported() {
        let seg = WireSegment::new(Vec3::ZERO, Vec3::X * 1e-3, amps(1.0)).unwrap();
        let err = segment_field(&seg, Vec3::new(5e-4, 0.0, 0.5e-7)).unwrap_err();
        assert!(matches!(err, Error::Singularity { .. }));
        // on the axis but beyond the end: exact zero, not an error
        let b = segment_field(&seg, Vec3::new(2e-3, 0.0, 0.0)).unwrap();
        assert_eq!(b.norm_sqr(), 0.0);
    }

    #[test]
    fn map_error_names_pixel() {
        let seg = WireSegment::new(Vec3::new(-1e-3, 5e-6, 0.0), Vec3::new(1e-3, 5e-6, 0.0), amps(1.0)).unwrap();
        let model = CurrentModel::new("w", vec![seg]);
        let grid = GridSpec::xy(Vec3::ZERO, 3, 3, 10e-6);
        let err = evaluate_phasor_map(&model, &grid, &SensingLayer::thin(0.0)).unwrap_err();
        match err {
            Error::Singularity { pixel, .. } => assert_eq!(pixel, Some((0, 0))),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn wire_row_profile() {
        let i = 0.05;
        let seg = WireSegment::new(Vec3::new(0.0, -0.5, 0.0), Vec3::new(0.0, 0.5, 0.0), amps(i)).unwrap();
        let model = CurrentModel::new("wire", vec![seg]);
        let grid = GridSpec::xy(Vec3::new(-100e-6, -2e-6, 0.0), 40, 2, 5e-6);
        let layer = SensingLayer::thin(12e-6);
        let map = evaluate_phasor_map(&model, &grid, &layer).unwrap();
        for ix in 0..grid.nx {
            let p = grid.pixel_position(ix, 0);
            let r = (p.x * p.x + 12e-6 * 12e-6).sqrt();
            let b = map.get(ix, 0);
            assert_relative_eq!(b.norm_sqr().sqrt(), MU0 * i / (2.0 * PI * r), max_relative = 1e-3);
        }
        let empty = evaluate_phasor_map(&CurrentModel::default(), &grid, &layer).unwrap();
        assert!(empty.values.iter().all(|b| b.norm_sqr() == 0.0));
        let doubled = evaluate_phasor_map(&model.scaled(amps(2.0)), &grid, &layer).unwrap();
        for (a, b) in map.values.iter().zip(&doubled.values) {
            assert_eq!(a.x * 2.0, b.x);
            assert_eq!(a.z * 2.0, b.z);
        }
    }

    #[test]
    fn projection_examples() {
        let frame = nv_frame_from_tilt(29.5, AxisPair::XZ).unwrap();
        let grid = GridSpec::xy(Vec3::ZERO, 4, 3, 1e-6);
        let beta = 2e-5;
        let lin = FieldPhasorMap {
            grid,
            values: vec![ComplexVec3::from_real(frame.e2(), amps(beta)); grid.len()],
        };
        for c in [Component::SigmaPlus, Component::SigmaMinus] {
            let m = project_polarization(&lin, &frame, c).unwrap();
            assert!(m.values.iter().all(|v| (v - beta / 2.0).abs() < 1e-18));
        }
        let axial = FieldPhasorMap {
            grid,
            values: vec![ComplexVec3::from_real(frame.axis(), amps(beta)); grid.len()],
        };
        let m = project_polarization(&axial, &frame, Component::SigmaPlus).unwrap();
        assert!(m.values.iter().all(|v| *v < 1e-20));

        let mixed = FieldPhasorMap {
            grid,
            values: (0..grid.len())
                .map(|k| {
                    ComplexVec3::new(
                        Complex64::new(k as f64, 1.0),
                        Complex64::new(-2.0, k as f64),
                        Complex64::new(0.3, 0.7),
                    ) * 1e-6
                })
                .collect(),
        };
        let plus = project_polarization(&mixed, &frame, Component::SigmaPlus).unwrap();
        let flipped_minus = project_polarization(&mixed, &flip_axis(&frame), Component::SigmaMinus).unwrap();
        assert_eq!(plus.values, flipped_minus.values);
    }
}
