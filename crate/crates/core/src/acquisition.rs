//! Synthetic camera data: Rabi contrast images, dt scans, pulse-train streams
//! and the frame-time budget.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldcore::GAMMA_NV;
use crate::nearfield::{Component, GridSpec, PolarizedFieldMap};

/// Pulse sequence and photon budget of one camera exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub laser_ns: f64,
    pub wait_ns: f64,
    pub n_shots: u32,
    /// Maximum contrast.
    pub c0: f64,
    /// Mean reference counts per pixel per exposure.
    pub counts_ref: f64,
    /// Additive Gaussian read noise (counts, standard deviation).
    #[serde(default)]
    pub read_noise: f64,
}

impl Default for PulseParams {
    fn default() -> Self {
        PulseParams {
            laser_ns: 700.0,
            wait_ns: 1500.0,
            n_shots: 100,
            c0: 0.05,
            counts_ref: 1e4,
            read_noise: 0.0,
        }
    }
}

impl PulseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.laser_ns >= 0.0 && self.wait_ns >= 0.0) {
            return Err(Error::domain("laser and wait durations must be non-negative"));
        }
        if !(self.c0 > 0.0 && self.c0 <= 1.0) {
            return Err(Error::domain("c0 must lie in (0, 1]"));
        }
        if !(self.counts_ref > 0.0) || self.n_shots == 0 || self.read_noise < 0.0 {
            return Err(Error::domain(
                "counts_ref and n_shots must be positive, read_noise non-negative",
            ));
        }
        Ok(())
    }

    /// Duration of one shot in ns for a given MW pulse length.
    pub fn shot_ns(&self, dt_mw_ns: f64) -> f64 {
        self.laser_ns + self.wait_ns + dt_mw_ns
    }
}

/// Double-exponential damping of the Rabi oscillation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub tau_fast_ns: f64,
    pub tau_slow_ns: f64,
    pub weight_fast: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            tau_fast_ns: 300.0,
            tau_slow_ns: 3000.0,
            weight_fast: 0.5,
        }
    }
}

impl DecayParams {
    /// Undamped oscillation.
    pub fn none() -> Self {
        DecayParams {
            tau_fast_ns: f64::INFINITY,
            tau_slow_ns: f64::INFINITY,
            weight_fast: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_fast_ns > 0.0 && self.tau_fast_ns <= self.tau_slow_ns) {
            return Err(Error::domain("need 0 < tau_fast ≤ tau_slow"));
        }
        if !(0.0..=1.0).contains(&self.weight_fast) {
            return Err(Error::domain("weight_fast must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn envelope(&self, dt_ns: f64) -> f64 {
        self.weight_fast * (-dt_ns / self.tau_fast_ns).exp()
            + (1.0 - self.weight_fast) * (-dt_ns / self.tau_slow_ns).exp()
    }
}

/// Rabi angular frequency in rad/ns for a circular field amplitude in T.
pub fn rabi_omega(b_polarized: f64) -> f64 {
    2.0 * PI * GAMMA_NV * b_polarized * 1e-9
}

/// Ideal contrast `c0 · env(dt) · sin²(Ω dt / 2)`.
pub fn contrast_at(b_polarized: f64, dt_mw_ns: f64, decay: &DecayParams, c0: f64) -> f64 {
    let half = 0.5 * rabi_omega(b_polarized) * dt_mw_ns;
    c0 * decay.envelope(dt_mw_ns) * half.sin().powi(2)
}

/// Single 2-D frame, row-major like [`GridSpec::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Image {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Contrast frames over a scan of MW pulse durations.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCube {
    pub grid: GridSpec,
    pub component: Component,
    pub dt_list: Vec<f64>,
    pub frames: Vec<Image>,
    pub pulse: PulseParams,
    pub seed: Option<u64>,
}

impl ImageCube {
    pub fn validate(&self) -> Result<()> {
        validate_dt_list(&self.dt_list)?;
        if self.frames.len() != self.dt_list.len() {
            return Err(Error::domain("frame count differs from dt count"));
        }
        if self
            .frames
            .iter()
            .any(|f| f.nx != self.grid.nx || f.ny != self.grid.ny || f.data.len() != self.grid.len())
        {
            return Err(Error::domain("frame size differs from grid"));
        }
        if self
            .frames
            .iter()
            .flat_map(|f| &f.data)
            .any(|c| !c.is_finite() || *c > 1.0)
        {
            return Err(Error::domain("contrast values must be finite and ≤ 1"));
        }
        Ok(())
    }

    /// Time trace of one pixel across the scan.
    pub fn trace(&self, i: usize, j: usize) -> Vec<f64> {
        self.frames.iter().map(|f| f.get(i, j)).collect()
    }

    /// Shot time spent on data plus reference exposures, in seconds.
    pub fn measurement_time_s(&self) -> f64 {
        let ns: f64 = self
            .dt_list
            .iter()
            .map(|dt| 2.0 * self.pulse.n_shots as f64 * self.pulse.shot_ns(*dt))
            .sum();
        ns * 1e-9
    }
}

fn validate_dt_list(dt: &[f64]) -> Result<()> {
    if dt.is_empty() || dt[0] < 0.0 || dt.windows(2).any(|w| w[1] <= w[0]) || dt.iter().any(|d| !d.is_finite()) {
        return Err(Error::domain("dt list must be non-negative and strictly increasing"));
    }
    Ok(())
}

/// Counter-keyed random stream for `(seed, frame, pixel)`; independent of
/// evaluation order.
fn pixel_rng(seed: u64, frame: u64, pixel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((frame << 32) ^ pixel);
    rng
}

/// Optional acquisition imperfections.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    /// Multiplies `c0` per pixel, e.g. laser-intensity streaks.
    pub c0_map: Option<Vec<f64>>,
}

fn contrast_frame(
    bmap: &PolarizedFieldMap,
    dt_mw_ns: f64,
    pulse: &PulseParams,
    decay: &DecayParams,
    artifacts: &Artifacts,
    seed: Option<u64>,
    frame: u64,
) -> Image {
    let poisson = |mean: f64, rng: &mut ChaCha8Rng| -> f64 {
        if mean <= 0.0 {
            0.0
        } else {
            Poisson::new(mean).expect("positive finite mean").sample(rng)
        }
    };
    let data = bmap
        .values
        .par_iter()
        .enumerate()
        .map(|(idx, &b)| {
            let c0 = pulse.c0 * artifacts.c0_map.as_ref().map_or(1.0, |m| m[idx]);
            let ideal = contrast_at(b, dt_mw_ns, decay, c0);
            let Some(seed) = seed else {
                return ideal;
            };
            let mut rng = pixel_rng(seed, frame, idx as u64);
            let mut n_ref = poisson(pulse.counts_ref, &mut rng);
            let mut n_data = poisson(pulse.counts_ref * (1.0 - ideal), &mut rng);
            if pulse.read_noise > 0.0 {
                let g = Normal::new(0.0, pulse.read_noise).expect("finite sigma");
                n_ref += g.sample(&mut rng);
                n_data += g.sample(&mut rng);
            }
            if n_ref <= 0.0 {
                0.0
            } else {
                (1.0 - n_data / n_ref).min(1.0)
            }
        })
        .collect();
    Image {
        nx: bmap.grid.nx,
        ny: bmap.grid.ny,
        data,
    }
}

/// One contrast image `1 − N_data/N_ref`; ideal when `noise_seed` is `None`,
/// Poisson photon noise otherwise.
pub fn simulate_contrast_image(
    bmap: &PolarizedFieldMap,
    dt_mw_ns: f64,
    pulse: &PulseParams,
    decay: &DecayParams,
    noise_seed: Option<u64>,
) -> Result<Image> {
    pulse.validate()?;
    decay.validate()?;
    Ok(contrast_frame(
        bmap,
        dt_mw_ns,
        pulse,
        decay,
        &Artifacts::default(),
        noise_seed,
        0,
    ))
}

/// Full dt scan with independent noise per frame.
pub fn simulate_cube(
    bmap: &PolarizedFieldMap,
    dt_list: &[f64],
    pulse: &PulseParams,
    decay: &DecayParams,
    seed: Option<u64>,
) -> Result<ImageCube> {
    simulate_cube_with(bmap, dt_list, pulse, decay, &Artifacts::default(), seed)
}

pub fn simulate_cube_with(
    bmap: &PolarizedFieldMap,
    dt_list: &[f64],
    pulse: &PulseParams,
    decay: &DecayParams,
    artifacts: &Artifacts,
    seed: Option<u64>,
) -> Result<ImageCube> {
    pulse.validate()?;
    decay.validate()?;
    validate_dt_list(dt_list)?;
    if let Some(m) = &artifacts.c0_map {
        if m.len() != bmap.values.len() {
            return Err(Error::domain("c0 map size differs from field map"));
        }
    }
    let frames = dt_list
        .iter()
        .enumerate()
        .map(|(k, &dt)| contrast_frame(bmap, dt, pulse, decay, artifacts, seed, k as u64))
        .collect();
    Ok(ImageCube {
        grid: bmap.grid,
        component: bmap.component,
        dt_list: dt_list.to_vec(),
        frames,
        pulse: *pulse,
        seed,
    })
}

/// Evenly spaced scan `start, start + step, ...` with `n` entries.
pub fn linear_scan(start_ns: f64, step_ns: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start_ns + step_ns * k as f64).collect()
}

/// Camera readout model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraTiming {
    pub row_time_us: f64,
    pub overhead_us: f64,
}

impl CameraTiming {
    /// Solves row time and overhead from two readout-limited
    /// `(rows, frame_time_ms)` observations.
    pub fn calibrate(a: (u32, f64), b: (u32, f64)) -> Result<Self> {
        if a.0 == b.0 {
            return Err(Error::domain("calibration needs two different row counts"));
        }
        let row_time_ms = (a.1 - b.1) / (a.0 as f64 - b.0 as f64);
        let overhead_ms = a.1 - row_time_ms * a.0 as f64;
        let t = CameraTiming {
            row_time_us: row_time_ms * 1e3,
            overhead_us: overhead_ms * 1e3,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.row_time_us > 0.0 && self.overhead_us >= 0.0) {
            return Err(Error::domain("row time must be positive and overhead non-negative"));
        }
        Ok(())
    }
}

/// `max(readout, exposure) + overhead`, in ms.
pub fn frame_time(timing: &CameraTiming, rows: u32, pulse: &PulseParams, dt_mw_ns: f64) -> Result<f64> {
    timing.validate()?;
    if rows == 0 {
        return Err(Error::domain("need at least one row"));
    }
    Ok(frame_time_ms(timing, rows, pulse, dt_mw_ns))
}

fn frame_time_ms(timing: &CameraTiming, rows: u32, pulse: &PulseParams, dt_mw_ns: f64) -> f64 {
    let readout_ms = rows as f64 * timing.row_time_us * 1e-3;
    (readout_ms.max(exposure_ms(pulse, dt_mw_ns))) + timing.overhead_us * 1e-3
}

fn exposure_ms(pulse: &PulseParams, dt_mw_ns: f64) -> f64 {
    pulse.n_shots as f64 * pulse.shot_ns(dt_mw_ns) * 1e-6
}

/// One segment of an on/off MW schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub duration_ms: f64,
    pub on: bool,
}

impl ScheduleStep {
    pub fn on(duration_ms: f64) -> Self {
        ScheduleStep { duration_ms, on: true }
    }

    pub fn off(duration_ms: f64) -> Self {
        ScheduleStep { duration_ms, on: false }
    }
}

/// MW state at time `t_ms`, or `None` past the end of the schedule.
pub fn schedule_state(schedule: &[ScheduleStep], t_ms: f64) -> Option<bool> {
    let mut start = 0.0;
    for s in schedule {
        if t_ms >= start && t_ms < start + s.duration_ms {
            return Some(s.on);
        }
        start += s.duration_ms;
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamFrame {
    /// Exposure midpoint.
    pub timestamp_ms: f64,
    pub mw_on: bool,
    pub contrast: Image,
}

/// Iso-B frames of a pulsed MW drive read out at the camera frame rate.
/// Each frame exposes at the start of its period; the MW state is sampled at
/// the exposure midpoint.
#[allow(clippy::too_many_arguments)]
pub fn simulate_stream(
    bmap: &PolarizedFieldMap,
    dt_mw_ns: f64,
    pulse: &PulseParams,
    decay: &DecayParams,
    schedule: &[ScheduleStep],
    timing: &CameraTiming,
    rows: u32,
    seed: Option<u64>,
) -> Result<Vec<StreamFrame>> {
    pulse.validate()?;
    decay.validate()?;
    if schedule.is_empty() || schedule.iter().any(|s| !(s.duration_ms > 0.0)) {
        return Err(Error::domain("schedule durations must be positive"));
    }
    let period = frame_time(timing, rows, pulse, dt_mw_ns)?;
    let half_exposure = 0.5 * exposure_ms(pulse, dt_mw_ns);
    let off = PolarizedFieldMap::uniform(bmap.grid, bmap.component, 0.0);
    let mut frames = Vec::new();
    for k in 0u64.. {
        let t = k as f64 * period + half_exposure;
        let Some(on) = schedule_state(schedule, t) else {
            break;
        };
        let field = if on { bmap } else { &off };
        let contrast = contrast_frame(field, dt_mw_ns, pulse, decay, &Artifacts::default(), seed, k);
        frames.push(StreamFrame {
            timestamp_ms: t,
            mw_on: on,
            contrast,
        });
    }
    Ok(frames)
}
