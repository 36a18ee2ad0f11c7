//! Scenario documents: unit-suffixed JSON converted to SI on load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::{linear_scan, CameraTiming, DecayParams, PulseParams, ScheduleStep};
use crate::analysis::{Baseline, EnvelopeMode, FitConfig, Region};
use crate::currents::{CurrentProfile, DeviceSpec, StripOptions};
use crate::error::{Error, Result};
use crate::fieldcore::{flip_axis, nv_frame_from_tilt, AxisPair, BiasConfig, NvFrame, SensingLayer, Transition, Vec3};
use crate::nearfield::{Component, GridSpec};

const UM: f64 = 1e-6;

/// Scenarios shipped with the crate, addressable as `bundled:<name>`.
pub const BUNDLED: [(&str, &str); 6] = [
    ("cpw-fig2", include_str!("../../scenarios/cpw-fig2.json")),
    ("omega-fig3", include_str!("../../scenarios/omega-fig3.json")),
    ("meander-fig3", include_str!("../../scenarios/meander-fig3.json")),
    (
        "interdigital-fig3",
        include_str!("../../scenarios/interdigital-fig3.json"),
    ),
    ("trap-fig4-xz", include_str!("../../scenarios/trap-fig4-xz.json")),
    (
        "pulse-train-fig5",
        include_str!("../../scenarios/pulse-train-fig5.json"),
    ),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Device given inline (currents JSON) or as a path relative to the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceRef {
    File { file: PathBuf },
    Inline(serde_json::Value),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridPlane {
    Xy,
    Xz,
    Yz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilamentFile {
    pub n_filaments: usize,
    pub profile: CurrentProfile,
}

impl Default for FilamentFile {
    fn default() -> Self {
        let d = StripOptions::default();
        FilamentFile {
            n_filaments: d.n_filaments,
            profile: d.profile,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub plane: GridPlane,
    /// Corner of pixel (0, 0).
    pub origin_um: [f64; 3],
    pub nx: usize,
    pub ny: usize,
    pub pitch_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub h_um: f64,
    #[serde(default)]
    pub d_um: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

fn default_samples() -> usize {
    SensingLayer::DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NvFile {
    pub tilt_deg: f64,
    pub plane: AxisPair,
    #[serde(default)]
    pub flip_axis: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasFile {
    pub f_mw_ghz: f64,
    #[serde(default = "default_zfs")]
    pub d_zfs_ghz: f64,
    #[serde(default = "default_gamma")]
    pub gamma_khz_per_ut: f64,
}

fn default_zfs() -> f64 {
    2.87
}

fn default_gamma() -> f64 {
    28.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    pub laser_ns: f64,
    pub wait_ns: f64,
    pub n_shots: u32,
    pub c0: f64,
    pub counts_ref: f64,
    #[serde(default)]
    pub read_noise_counts: f64,
}

impl Default for PulseFile {
    fn default() -> Self {
        let p = PulseParams::default();
        PulseFile {
            laser_ns: p.laser_ns,
            wait_ns: p.wait_ns,
            n_shots: p.n_shots,
            c0: p.c0,
            counts_ref: p.counts_ref,
            read_noise_counts: p.read_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayFile {
    pub tau_fast_ns: f64,
    pub tau_slow_ns: f64,
    pub weight_fast: f64,
}

fn default_decay() -> Option<DecayFile> {
    let d = DecayParams::default();
    Some(DecayFile {
        tau_fast_ns: d.tau_fast_ns,
        tau_slow_ns: d.tau_slow_ns,
        weight_fast: d.weight_fast,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanFile {
    pub start_ns: f64,
    pub step_ns: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingFile {
    pub row_time_us: f64,
    pub overhead_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFile {
    pub duration_ms: f64,
    pub on: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamFileCfg {
    pub dt_mw_ns: f64,
    pub rows: u32,
    pub timing: TimingFile,
    pub schedule: Vec<StepFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFile {
    #[serde(default = "default_floor")]
    pub min_converged_fraction: f64,
    #[serde(default = "default_true")]
    pub allow_phase: bool,
    #[serde(default = "default_envelope")]
    pub envelope_mode: EnvelopeMode,
    #[serde(default = "default_baseline")]
    pub baseline: Baseline,
    #[serde(default = "default_snr")]
    pub min_contrast_snr: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_floor() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_envelope() -> EnvelopeMode {
    EnvelopeMode::DoubleExp
}
fn default_baseline() -> Baseline {
    Baseline::Envelope
}
fn default_snr() -> f64 {
    FitConfig::default().min_contrast_snr
}
fn default_iterations() -> usize {
    FitConfig::default().max_iterations
}

impl Default for FitFile {
    fn default() -> Self {
        FitFile {
            min_converged_fraction: default_floor(),
            allow_phase: true,
            envelope_mode: default_envelope(),
            baseline: default_baseline(),
            min_contrast_snr: default_snr(),
            max_iterations: default_iterations(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionLossFile {
    pub p_in_dbm: f64,
    #[serde(default = "default_impedance")]
    pub impedance_ohm: f64,
    /// Defaults to the device drive current.
    #[serde(default)]
    pub current_ma: Option<f64>,
}

fn default_impedance() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapFile {
    /// `[i0, i1, j0, j1]`, half-open.
    pub region_px: [usize; 4],
    #[serde(default = "default_arm")]
    pub arm_px: usize,
}

fn default_arm() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityFile {
    pub repeats: usize,
    pub region_px: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_cut_row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insertion_loss: Option<InsertionLossFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_range_ut: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityFile>,
}

/// Scenario document as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub device: DeviceRef,
    #[serde(default)]
    pub filaments: FilamentFile,
    pub grid: GridFile,
    pub layer: LayerFile,
    pub nv: NvFile,
    pub transition: Transition,
    pub bias: BiasFile,
    #[serde(default)]
    pub pulse: PulseFile,
    #[serde(default = "default_decay")]
    pub decay: Option<DecayFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanFile>,
    #[serde(default)]
    pub noise: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamFileCfg>,
    #[serde(default)]
    pub fit: FitFile,
    #[serde(default)]
    pub report: ReportFile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSettings {
    pub dt_mw_ns: f64,
    pub rows: u32,
    pub timing: CameraTiming,
    pub schedule: Vec<ScheduleStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub config: FitConfig,
    pub min_converged_fraction: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            config: FitConfig::default(),
            min_converged_fraction: default_floor(),
        }
    }
}

/// Validated scenario in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub device: DeviceSpec,
    pub strip: StripOptions,
    pub grid: GridSpec,
    pub layer: SensingLayer,
    pub frame: NvFrame,
    pub transition: Transition,
    pub bias: BiasConfig,
    /// Hz
    pub f_mw: f64,
    pub pulse: PulseParams,
    pub decay: DecayParams,
    pub dt_list: Option<Vec<f64>>,
    /// `None` gives noiseless images.
    pub seed: Option<u64>,
    pub stream: Option<StreamSettings>,
    pub fit: FitSettings,
    pub report: ReportFile,
    pub source: ScenarioFile,
}

fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    }
}

fn check(cond: bool, path: &str, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(path, msg))
    }
}

fn region(path: &str, r: [usize; 4], grid: &GridSpec) -> Result<Region> {
    let [i0, i1, j0, j1] = r;
    check(
        i0 < i1 && i1 <= grid.nx && j0 < j1 && j1 <= grid.ny,
        path,
        "region outside the grid",
    )?;
    Ok(Region { i0, i1, j0, j1 })
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })
    }

    /// Converts to SI and validates, resolving device files against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<Scenario> {
        let device_doc = match &self.device {
            DeviceRef::Inline(v) => v.clone(),
            DeviceRef::File { file } => {
                let p = base_dir.join(file);
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::config("device.file", format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::config("device.file", e.to_string()))?
            }
        };
        let device = DeviceSpec::from_json(&device_doc).map_err(at("device"))?;

        let f = &self.filaments;
        check(f.n_filaments >= 1, "filaments.n_filaments", "must be at least 1")?;
        let strip = StripOptions {
            n_filaments: f.n_filaments,
            profile: f.profile,
        };

        let g = &self.grid;
        let axes = match g.plane {
            GridPlane::Xy => [Vec3::X, Vec3::Y],
            GridPlane::Xz => [Vec3::X, Vec3::Z],
            GridPlane::Yz => [Vec3::Y, Vec3::Z],
        };
        check(
            g.pitch_um > 0.0 && g.pitch_um.is_finite(),
            "grid.pitch_um",
            "must be positive",
        )?;
        check(g.nx > 0 && g.ny > 0, "grid", "nx and ny must be positive")?;
        let grid = GridSpec {
            origin: Vec3::from(g.origin_um) * UM,
            axes,
            nx: g.nx,
            ny: g.ny,
            pitch: g.pitch_um * UM,
        };
        grid.validate().map_err(at("grid"))?;

        let l = &self.layer;
        check(l.d_um >= 0.0, "layer.d_um", "must be non-negative")?;
        let layer = SensingLayer::new(l.h_um * UM, l.d_um * UM, l.n_samples).map_err(at("layer"))?;

        let mut frame = nv_frame_from_tilt(self.nv.tilt_deg, self.nv.plane).map_err(at("nv"))?;
        if self.nv.flip_axis {
            frame = flip_axis(&frame);
        }

        let b = &self.bias;
        check(b.f_mw_ghz > 0.0, "bias.f_mw_ghz", "must be positive")?;
        check(b.gamma_khz_per_ut > 0.0, "bias.gamma_khz_per_ut", "must be positive")?;
        let bias = BiasConfig {
            d_zfs: b.d_zfs_ghz * 1e9,
            // kHz/µT = 1e3 Hz / 1e-6 T
            gamma_nv: b.gamma_khz_per_ut * 1e9,
            sign: 1,
        };
        bias.validate().map_err(at("bias"))?;

        let p = &self.pulse;
        let pulse = PulseParams {
            laser_ns: p.laser_ns,
            wait_ns: p.wait_ns,
            n_shots: p.n_shots,
            c0: p.c0,
            counts_ref: p.counts_ref,
            read_noise: p.read_noise_counts,
        };
        pulse.validate().map_err(at("pulse"))?;

        let decay = match &self.decay {
            None => DecayParams::none(),
            Some(d) => DecayParams {
                tau_fast_ns: d.tau_fast_ns,
                tau_slow_ns: d.tau_slow_ns,
                weight_fast: d.weight_fast,
            },
        };
        decay.validate().map_err(at("decay"))?;

        let dt_list = match &self.scan {
            None => None,
            Some(s) => {
                check(s.start_ns >= 0.0, "scan.start_ns", "must be non-negative")?;
                check(s.step_ns > 0.0, "scan.step_ns", "must be positive")?;
                check(s.n_steps >= 8, "scan.n_steps", "must be at least 8")?;
                Some(linear_scan(s.start_ns, s.step_ns, s.n_steps))
            }
        };

        let stream = match &self.stream {
            None => None,
            Some(s) => {
                check(s.dt_mw_ns >= 0.0, "stream.dt_mw_ns", "must be non-negative")?;
                check(s.rows > 0, "stream.rows", "must be positive")?;
                check(!s.schedule.is_empty(), "stream.schedule", "must not be empty")?;
                for (k, step) in s.schedule.iter().enumerate() {
                    check(
                        step.duration_ms > 0.0,
                        &format!("stream.schedule[{k}].duration_ms"),
                        "must be positive",
                    )?;
                }
                let timing = CameraTiming {
                    row_time_us: s.timing.row_time_us,
                    overhead_us: s.timing.overhead_us,
                };
                timing.validate().map_err(at("stream.timing"))?;
                Some(StreamSettings {
                    dt_mw_ns: s.dt_mw_ns,
                    rows: s.rows,
                    timing,
                    schedule: s
                        .schedule
                        .iter()
                        .map(|st| ScheduleStep {
                            duration_ms: st.duration_ms,
                            on: st.on,
                        })
                        .collect(),
                })
            }
        };

        let ff = &self.fit;
        check(
            (0.0..=1.0).contains(&ff.min_converged_fraction),
            "fit.min_converged_fraction",
            "must lie in [0, 1]",
        )?;
        let config = FitConfig {
            max_iterations: ff.max_iterations,
            min_contrast_snr: ff.min_contrast_snr,
            allow_phase: ff.allow_phase,
            envelope_mode: ff.envelope_mode,
            baseline: ff.baseline,
            gamma_nv: bias.gamma_nv,
            ..FitConfig::default()
        };
        config.validate().map_err(at("fit"))?;

        let r = &self.report;
        if let Some(row) = r.line_cut_row {
            check(row < grid.ny, "report.line_cut_row", "row outside the grid")?;
        }
        if let Some(t) = &r.trap {
            region("report.trap.region_px", t.region_px, &grid)?;
            check(t.arm_px >= 1, "report.trap.arm_px", "must be at least 1")?;
        }
        if let Some(s) = &r.sensitivity {
            region("report.sensitivity.region_px", s.region_px, &grid)?;
            check(s.repeats >= 10, "report.sensitivity.repeats", "must be at least 10")?;
            check(dt_list.is_some(), "report.sensitivity", "needs a scan")?;
        }
        if let Some([lo, hi]) = r.dynamic_range_ut {
            check(lo > 0.0 && hi >= lo, "report.dynamic_range_ut", "needs 0 < min ≤ max")?;
        }

        Ok(Scenario {
            name: self.name.clone(),
            device,
            strip,
            grid,
            layer,
            frame,
            transition: self.transition,
            bias,
            f_mw: b.f_mw_ghz * 1e9,
            pulse,
            decay,
            dt_list,
            seed: self.noise.then_some(self.seed),
            stream,
            fit: FitSettings {
                config,
                min_converged_fraction: ff.min_converged_fraction,
            },
            report: self.report.clone(),
            source: self.clone(),
        })
    }
}

impl Scenario {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Scenario> {
        ScenarioFile::parse(text)?.resolve(base_dir)
    }

    /// Loads `bundled:<name>` or a JSON file path.
    pub fn load(spec: &str) -> Result<(Scenario, String)> {
        if let Some(name) = spec.strip_prefix("bundled:") {
            let text = bundled(name).ok_or_else(|| {
                let names: Vec<_> = BUNDLED.iter().map(|(n, _)| *n).collect();
                Error::config(
                    "--config",
                    format!("no bundled scenario {name:?}; available: {names:?}"),
                )
            })?;
            return Ok((Scenario::from_json(text, Path::new("."))?, text.to_string()));
        }
        let path = Path::new(spec);
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((Scenario::from_json(&text, base)?, text))
    }

    pub fn component(&self) -> Component {
        self.transition.into()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self.source.noise = true;
        self.source.seed = seed;
        self
    }
}
