//! Randomized invariants, shared by the `properties` and `acceptance` targets.

use std::f64::consts::PI;

use num_complex::Complex64;
use nvscope::acquisition::{contrast_at, frame_time, CameraTiming, DecayParams, PulseParams};
use nvscope::analysis::{
    characterize_trap, dynamic_range_db, fit_pixel, stitch, FitConfig, Region, StitchOptions, Tile,
};
use nvscope::currents::{
    discretize_strip, superpose, CurrentModel, CurrentProfile, StripConductor, StripOptions, WireSegment,
};
use nvscope::fieldcore::{decompose_polarization, flip_axis, layer_average, ComplexVec3, NvFrame, SensingLayer, Vec3};
use nvscope::nearfield::{evaluate_phasor_map, Component, GridSpec, PolarizedFieldMap};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3()
        .prop_filter("non-degenerate", |v| v.norm() > 0.1)
        .prop_map(Vec3::normalized)
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn phasor() -> impl Strategy<Value = ComplexVec3> {
    (complex(), complex(), complex()).prop_map(|(x, y, z)| ComplexVec3::new(x, y, z))
}

fn frame() -> impl Strategy<Value = NvFrame> {
    (unit(), unit())
        .prop_filter("independent", |(a, r)| a.cross(*r).norm() > 0.1)
        .prop_map(|(a, r)| NvFrame::new(a, r).unwrap())
}

/// A few short segments in the plane z = 0, µm scale.
fn model() -> impl Strategy<Value = CurrentModel> {
    prop::collection::vec((vec3(), vec3(), complex()), 1..4).prop_map(|segs| {
        let segments = segs
            .into_iter()
            .map(|(a, b, i)| {
                let a = Vec3::new(a.x, a.y, 0.0) * 100e-6;
                let mut b = Vec3::new(b.x, b.y, 0.0) * 100e-6;
                if (b - a).norm() < 1e-6 {
                    b = a + Vec3::new(10e-6, 0.0, 0.0);
                }
                WireSegment::new(a, b, i * 0.01).unwrap()
            })
            .collect();
        CurrentModel::new("random", segments)
    })
}

fn small_grid() -> GridSpec {
    GridSpec::xy(Vec3::new(-60e-6, -60e-6, 0.0), 4, 4, 40e-6)
}

fn layer() -> SensingLayer {
    SensingLayer::new(15e-6, 6e-6, 3).unwrap()
}

fn close(a: ComplexVec3, b: ComplexVec3, scale: f64, tol: f64) -> bool {
    let d = ComplexVec3::new(a.x - b.x, a.y - b.y, a.z - b.z);
    d.norm_sqr().sqrt() <= tol * scale.max(f64::MIN_POSITIVE)
}

fn map_scale(values: &[ComplexVec3]) -> f64 {
    values.iter().map(|v| v.norm_sqr().sqrt()).fold(0.0, f64::max)
}

pub const FAST: u32 = 256;
pub const MEDIUM: u32 = 64;
pub const SLOW: u32 = 48;

/// No regression files: the acceptance binary has no source root to anchor them.
fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::with_cases(cases)
    }
}

pub const SUITE: &[(&str, fn(), u32)] = &[
    ("polarization_completeness", polarization_completeness, FAST),
    (
        "flip_axis_swaps_and_is_involution",
        flip_axis_swaps_and_is_involution,
        FAST,
    ),
    ("transverse_rotation_invariance", transverse_rotation_invariance, FAST),
    ("contrast_bounded", contrast_bounded, FAST),
    ("frame_time_monotone", frame_time_monotone, FAST),
    ("dynamic_range_additive", dynamic_range_additive, FAST),
    ("layer_average_second_order", layer_average_second_order, FAST),
    ("strip_conserves_current", strip_conserves_current, FAST),
    ("trap_matches_brute_force_argmin", trap_matches_brute_force_argmin, FAST),
    ("superposition", superposition, MEDIUM),
    ("scaling_linearity", scaling_linearity, MEDIUM),
    ("translation_covariance", translation_covariance, MEDIUM),
    ("real_currents_give_real_fields", real_currents_give_real_fields, MEDIUM),
    ("stitch_cut_and_reassemble", stitch_cut_and_reassemble, MEDIUM),
    ("fit_frequency_scale_invariant", fit_frequency_scale_invariant, SLOW),
];

pub fn polarization_completeness() {
    proptest!(config(FAST), |(b in phasor(), f in frame())| {
        let u = b.dot_real(f.e1());
        let v = b.dot_real(f.e2());
        let a = b.dot_real(f.axis());
        let total = a.norm_sqr() + u.norm_sqr() + v.norm_sqr();
        prop_assert!((total - b.norm_sqr()).abs() <= 1e-12 * b.norm_sqr().max(1e-300));

        // brute-force circular components
        let i = Complex64::i();
        let plus = (u - i * v).norm() / 2.0;
        let minus = (u + i * v).norm() / 2.0;
        let p = decompose_polarization(&b, &f);
        prop_assert!((p.plus - plus).abs() <= 1e-12);
        prop_assert!((p.minus - minus).abs() <= 1e-12);
        prop_assert!((p.parallel - a.norm()).abs() <= 1e-12);
        let transverse = u.norm_sqr() + v.norm_sqr();
        prop_assert!((2.0 * (p.plus * p.plus + p.minus * p.minus) - transverse).abs() <= 1e-12);
        prop_assert!(p.plus + p.minus >= u.norm().max(v.norm()) - 1e-12);
    });
}

pub fn flip_axis_swaps_and_is_involution() {
    proptest!(config(FAST), |(b in phasor(), f in frame())| {
        let g = flip_axis(&f);
        let p = decompose_polarization(&b, &f);
        let q = decompose_polarization(&b, &g);
        prop_assert!((p.plus - q.minus).abs() <= 1e-12);
        prop_assert!((p.minus - q.plus).abs() <= 1e-12);
        prop_assert!((p.parallel - q.parallel).abs() <= 1e-12);
        prop_assert_eq!(flip_axis(&g), f);
    });
}

pub fn transverse_rotation_invariance() {
    proptest!(config(FAST), |(b in phasor(), f in frame(), angle in 0.0..(2.0 * PI))| {
        let p = decompose_polarization(&b, &f);
        let q = decompose_polarization(&b, &f.rotate_transverse(angle));
        prop_assert!((p.plus - q.plus).abs() <= 1e-12);
        prop_assert!((p.minus - q.minus).abs() <= 1e-12);
    });
}

pub fn contrast_bounded() {
    proptest!(config(FAST), |(b in 0.0..1e-3f64, dt in 0.0..5000.0f64, c0 in 0.001..1.0f64, tf in 10.0..5000.0f64, k in 1.0..10.0f64, w in 0.0..1.0f64)| {
        let decay = DecayParams { tau_fast_ns: tf, tau_slow_ns: tf * k, weight_fast: w };
        let c = contrast_at(b, dt, &decay, c0);
        prop_assert!(c >= 0.0 && c <= c0 * (1.0 + 1e-15));
    });
}

pub fn frame_time_monotone() {
    proptest!(config(FAST), |(rows in 1u32..2000, shots in 1u32..500, dt in 0.0..1000.0f64, dr in 0u32..100, ds in 0u32..100, ddt in 0.0..500.0f64)| {
        let timing = CameraTiming { row_time_us: 10.0, overhead_us: 200.0 };
        let pulse = |n| PulseParams { n_shots: n, laser_ns: 700.0, wait_ns: 500.0, ..Default::default() };
        let base = frame_time(&timing, rows, &pulse(shots), dt).unwrap();
        prop_assert!(frame_time(&timing, rows + dr, &pulse(shots), dt).unwrap() >= base);
        prop_assert!(frame_time(&timing, rows, &pulse(shots + ds), dt).unwrap() >= base);
        prop_assert!(frame_time(&timing, rows, &pulse(shots), dt + ddt).unwrap() >= base);
    });
}

pub fn dynamic_range_additive() {
    proptest!(config(FAST), |(b in 1e-9..1e-3f64)| {
        let sum = dynamic_range_db(b, 10.0 * b).unwrap() + dynamic_range_db(10.0 * b, 100.0 * b).unwrap();
        prop_assert!((sum - dynamic_range_db(b, 100.0 * b).unwrap()).abs() <= 1e-12);
    });
}

pub fn layer_average_second_order() {
    proptest!(config(FAST), |(a in -2.0..2.0f64, b in -2.0..2.0f64, c in 0.1..2.0f64, h in 5.0..20.0f64, d in 1.0..8.0f64, n in 1usize..20)| {
        // f(z) = a + b z + c z², exact mean a + b h + c (h² + d²/12)
        let f = |p: Vec3| a + b * p.z + c * p.z * p.z;
        let exact = a + b * h + c * (h * h + d * d / 12.0);
        let e1 = layer_average(f, &SensingLayer::new(h, d, n).unwrap(), 0.0, 0.0) - exact;
        let e2 = layer_average(f, &SensingLayer::new(h, d, 2 * n).unwrap(), 0.0, 0.0) - exact;
        let ratio = e1 / e2;
        prop_assert!(ratio > 2.0 && ratio < 8.0, "error ratio {ratio}");
    });
}

pub fn strip_conserves_current() {
    proptest!(config(FAST), |(w in 1e-6..100e-6f64, n in 1usize..40, i in complex(), edge in any::<bool>())| {
        let profile = if edge { CurrentProfile::EdgeWeighted } else { CurrentProfile::Uniform };
        let s = StripConductor::new(vec![Vec3::ZERO, Vec3::new(1e-3, 0.0, 0.0)], w, i, StripOptions { n_filaments: n, profile }).unwrap();
        let m = discretize_strip(&s).unwrap();
        let total: Complex64 = m.segments.iter().map(|s| s.current).sum();
        prop_assert!((total - i).norm() <= 1e-12 * i.norm().max(1e-300));
    });
}

pub fn trap_matches_brute_force_argmin() {
    proptest!(config(FAST), |(ci in 5usize..35, cj in 5usize..25, gx in 0.5..3.0f64, gy in 0.5..3.0f64, tilt in -0.2..0.2f64)| {
        let grid = GridSpec::xy(Vec3::ZERO, 40, 30, 1e-6);
        let values: Vec<f64> = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.coords(idx);
                let (x, y) = (i as f64 - ci as f64 - 0.3, j as f64 - cj as f64 + 0.2);
                1e-6 * ((gx * x).hypot(gy * y) + tilt * x) + 2e-6
            })
            .collect();
        let map = PolarizedFieldMap { grid, component: Component::SigmaPlus, values };
        let report = characterize_trap(&map, Region::whole(&map), 3).unwrap();
        let (best, _) = map.values.iter().enumerate()
            .filter(|(idx, _)| { let (i, j) = grid.coords(*idx); i > 0 && j > 0 && i + 1 < 40 && j + 1 < 30 })
            .fold((0, f64::INFINITY), |(bi, bv), (k, v)| if *v < bv { (k, *v) } else { (bi, bv) });
        prop_assert_eq!(report.pixel, grid.coords(best));
    });
}

pub fn superposition() {
    proptest!(config(MEDIUM), |(a in model(), b in model())| {
        let (g, l) = (small_grid(), layer());
        let ma = evaluate_phasor_map(&a, &g, &l);
        let mb = evaluate_phasor_map(&b, &g, &l);
        let (Ok(ma), Ok(mb)) = (ma, mb) else { return Ok(()); };
        let mab = evaluate_phasor_map(&superpose(&[a, b]), &g, &l).unwrap();
        let scale = map_scale(&ma.values).max(map_scale(&mb.values));
        for k in 0..g.len() {
            prop_assert!(close(mab.values[k], ma.values[k] + mb.values[k], scale, 1e-12));
        }
    });
}

pub fn scaling_linearity() {
    proptest!(config(MEDIUM), |(a in model(), s in complex())| {
        let (g, l) = (small_grid(), layer());
        let Ok(ma) = evaluate_phasor_map(&a, &g, &l) else { return Ok(()); };
        let ms = evaluate_phasor_map(&a.scaled(s), &g, &l).unwrap();
        let scale = map_scale(&ma.values) * s.norm();
        for k in 0..g.len() {
            prop_assert!(close(ms.values[k], ma.values[k].scale(s), scale, 1e-12));
        }
    });
}

pub fn translation_covariance() {
    proptest!(config(MEDIUM), |(a in model(), t in vec3())| {
        let (g, l) = (small_grid(), layer());
        let t = t * 1e-3;
        let Ok(ma) = evaluate_phasor_map(&a, &g, &l) else { return Ok(()); };
        let mt = evaluate_phasor_map(&a.translated(t), &g.translated(t), &l).unwrap();
        let scale = map_scale(&ma.values);
        for k in 0..g.len() {
            prop_assert!(close(mt.values[k], ma.values[k], scale, 1e-9));
        }
    });
}

pub fn real_currents_give_real_fields() {
    proptest!(config(MEDIUM), |(a in model())| {
        let real = CurrentModel::new("real", a.segments.iter().map(|s| WireSegment { current: Complex64::new(s.current.re, 0.0), ..*s }).collect());
        let Ok(m) = evaluate_phasor_map(&real, &small_grid(), &layer()) else { return Ok(()); };
        prop_assert!(m.values.iter().all(|v| v.x.im == 0.0 && v.y.im == 0.0 && v.z.im == 0.0));
    });
}

pub fn stitch_cut_and_reassemble() {
    proptest!(config(MEDIUM), |(nx in 12usize..30, ny in 12usize..30, cut_x in 4usize..8, cut_y in 4usize..8, ox in 1usize..4, oy in 1usize..4, seed in any::<u64>())| {
        let grid = GridSpec::xy(Vec3::ZERO, nx, ny, 1e-6);
        let values: Vec<f64> = (0..grid.len()).map(|k| ((k as u64).wrapping_mul(seed | 1) % 1000) as f64 * 1e-7).collect();
        let whole = PolarizedFieldMap { grid, component: Component::SigmaMinus, values };
        // four overlapping quadrants
        let xs = [(0, cut_x + ox), (cut_x, nx - cut_x)];
        let ys = [(0, cut_y + oy), (cut_y, ny - cut_y)];
        let mut tiles = Vec::new();
        for &(i0, w) in &xs {
            for &(j0, h) in &ys {
                let map = nvscope::analysis::crop(&whole, i0, j0, w, h).unwrap();
                tiles.push(Tile { map, offset: (i0 as i64, j0 as i64) });
            }
        }
        let out = stitch(&tiles, &StitchOptions::default()).unwrap();
        prop_assert_eq!(out.map.values, whole.values.clone());

        // idempotence: a composite stitched with itself is unchanged
        let twice = stitch(&[Tile { map: whole.clone(), offset: (0, 0) }, Tile { map: whole.clone(), offset: (0, 0) }], &StitchOptions::default()).unwrap();
        prop_assert_eq!(twice.map.values, whole.values);
    });
}

pub fn fit_frequency_scale_invariant() {
    proptest!(config(SLOW), |(f_mhz in 2.0..30.0f64, k in 0.05..20.0f64)| {
        let dt: Vec<f64> = (0..100).map(|i| i as f64 * 10.0).collect();
        let decay = DecayParams::default();
        let b = f_mhz * 1e6 / nvscope::fieldcore::GAMMA_NV;
        let y: Vec<f64> = dt.iter().map(|&t| contrast_at(b, t, &decay, 0.05)).collect();
        let ys: Vec<f64> = y.iter().map(|v| v * k).collect();
        let cfg = FitConfig::default();
        let r1 = fit_pixel(&dt, &y, &cfg).unwrap();
        let r2 = fit_pixel(&dt, &ys, &cfg).unwrap();
        prop_assert!((r1.omega - r2.omega).abs() <= 1e-6 * r1.omega, "{} vs {}", r1.omega, r2.omega);
    });
}
