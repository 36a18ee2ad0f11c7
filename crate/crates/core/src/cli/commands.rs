//! Pipeline stages behind the `nvscope` subcommands. Each reads and writes
//! files in an output directory and records them in a manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::{ManifestWriter, RunManifest};
use super::scenario::{FitSettings, Scenario};
use crate::acquisition::{simulate_contrast_image, simulate_cube, simulate_stream, Image, ImageCube};
use crate::analysis::{
    amplitude_sensitivity, characterize_trap, crop, dynamic_range_db, extract_contours_with, fit_cube,
    insertion_loss_db, nominal_offsets, stitch, ContourOptions, CubeFit, FitDiagnostics, InsertionLoss, IsoBContourSet,
    Region, StitchOptions, Tile, TrapReport,
};
use crate::currents::{build_device, DeviceSpec};
use crate::error::{Error, Result};
use crate::fieldcore::bias_field_for_frequency;
use crate::formats::{
    decode_cube, decode_polarized_map, encode_cube, encode_pgm, encode_phasor_map, encode_polarized_map, encode_stream,
    line_cut_text, StreamFile,
};
use crate::nearfield::{evaluate_phasor_map, project_polarization, Component, FieldPhasorMap, PolarizedFieldMap};

pub const PHASOR_FILE: &str = "phasor.fmap";
pub const CUBE_FILE: &str = "cube.rcub";
pub const STREAM_FILE: &str = "stream.rcub";
pub const FIELD_FILE: &str = "field.fmap";
pub const STITCHED_FILE: &str = "stitched.fmap";

pub fn component_tag(c: Component) -> &'static str {
    match c {
        Component::SigmaPlus => "sigma-plus",
        Component::SigmaMinus => "sigma-minus",
        Component::Axial => "axial",
    }
}

/// File written by `simulate` for one polarization component.
pub fn map_file(c: Component) -> String {
    format!("{}.fmap", component_tag(c))
}

fn read_file(path: &Path, what: &str) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::config(what, format!("{}: {e}", path.display())))
}

fn write_map_pgm(w: &mut ManifestWriter, name: &str, map: &PolarizedFieldMap) -> Result<()> {
    let (bytes, scale) = encode_pgm(&map.values, map.grid.nx, map.grid.ny)?;
    w.write_pgm(name, &bytes, scale)
}

pub struct SimulateOutput {
    pub manifest: RunManifest,
    pub phasor: FieldPhasorMap,
    pub sigma_plus: PolarizedFieldMap,
    pub sigma_minus: PolarizedFieldMap,
}

/// Device → phasor map → both circular components.
pub fn cmd_simulate(sc: &Scenario, config_text: Option<&str>, out: &Path) -> Result<SimulateOutput> {
    let mut w = ManifestWriter::new(out, "simulate", config_text, None).scenario(&sc.name);
    let model = build_device(&sc.device, sc.strip)?;
    let phasor = evaluate_phasor_map(&model, &sc.grid, &sc.layer)?;
    let sigma_plus = project_polarization(&phasor, &sc.frame, Component::SigmaPlus)?;
    let sigma_minus = project_polarization(&phasor, &sc.frame, Component::SigmaMinus)?;
    w.write(PHASOR_FILE, &encode_phasor_map(&phasor))?;
    for map in [&sigma_plus, &sigma_minus] {
        w.write(&map_file(map.component), &encode_polarized_map(map))?;
        write_map_pgm(&mut w, &format!("{}.pgm", component_tag(map.component)), map)?;
    }
    Ok(SimulateOutput {
        manifest: w.finish()?,
        phasor,
        sigma_plus,
        sigma_minus,
    })
}

pub struct AcquireOutput {
    pub manifest: RunManifest,
    pub cube: Option<ImageCube>,
    pub stream: Option<StreamFile>,
}

fn load_component_map(sc: &Scenario, out: &Path, field_map: Option<&Path>) -> Result<PolarizedFieldMap> {
    let path = field_map
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.join(map_file(sc.component())));
    if !path.exists() {
        return Err(Error::config(
            "field_map",
            format!(
                "missing field map {}; run simulate first or pass --field-map",
                path.display()
            ),
        ));
    }
    let map = decode_polarized_map(&read_file(&path, "field_map")?)?;
    if map.component != sc.component() {
        return Err(Error::config(
            "field_map",
            format!(
                "map holds {:?} but the scenario drives {:?}",
                map.component,
                sc.component()
            ),
        ));
    }
    Ok(map)
}

/// Field map → seeded image cube and/or pulse-train stream.
pub fn cmd_acquire(
    sc: &Scenario,
    config_text: Option<&str>,
    out: &Path,
    field_map: Option<&Path>,
) -> Result<AcquireOutput> {
    if sc.dt_list.is_none() && sc.stream.is_none() {
        return Err(Error::config("scan", "scenario has neither a scan nor a stream"));
    }
    let bmap = load_component_map(sc, out, field_map)?;
    let mut w = ManifestWriter::new(out, "acquire", config_text, sc.seed).scenario(&sc.name);
    let cube = match &sc.dt_list {
        Some(dt) => {
            let cube = simulate_cube(&bmap, dt, &sc.pulse, &sc.decay, sc.seed)?;
            w.write(CUBE_FILE, &encode_cube(&cube))?;
            Some(cube)
        }
        None => None,
    };
    let stream = match &sc.stream {
        Some(s) => {
            let frames = simulate_stream(
                &bmap,
                s.dt_mw_ns,
                &sc.pulse,
                &sc.decay,
                &s.schedule,
                &s.timing,
                s.rows,
                sc.seed,
            )?;
            let file = StreamFile {
                grid: bmap.grid,
                component: bmap.component,
                dt_mw_ns: s.dt_mw_ns,
                pulse: sc.pulse,
                seed: sc.seed,
                frames,
            };
            w.write(STREAM_FILE, &encode_stream(&file))?;
            Some(file)
        }
        None => None,
    };
    Ok(AcquireOutput {
        manifest: w.finish()?,
        cube,
        stream,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSidecar {
    pub cube: String,
    pub component: Component,
    pub diagnostics: FitDiagnostics,
    pub min_converged_fraction: f64,
}

pub struct FitOutput {
    pub manifest: RunManifest,
    pub fit: CubeFit,
    pub diagnostics: FitDiagnostics,
}

/// Cube → calibrated field map plus diagnostics. Fails with
/// [`Error::LowConvergence`] after writing outputs when too few pixels fit.
pub fn cmd_fit(cube_path: &Path, settings: &FitSettings, out: &Path) -> Result<FitOutput> {
    let bytes = read_file(cube_path, "cube")?;
    let cube = decode_cube(&bytes)?;
    let mut w = ManifestWriter::new(out, "fit", None, cube.seed);
    let fit = fit_cube(&cube, &settings.config)?;
    let diagnostics = fit.diagnostics();
    w.write(FIELD_FILE, &encode_polarized_map(&fit.field))?;
    write_map_pgm(&mut w, "field.pgm", &fit.field)?;
    w.write_json(
        "fit-diagnostics.json",
        &FitSidecar {
            cube: cube_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            component: cube.component,
            diagnostics: diagnostics.clone(),
            min_converged_fraction: settings.min_converged_fraction,
        },
    )?;
    let manifest = w.finish()?;
    if diagnostics.converged_fraction < settings.min_converged_fraction {
        return Err(Error::LowConvergence {
            fraction: diagnostics.converged_fraction,
            floor: settings.min_converged_fraction,
        });
    }
    Ok(FitOutput {
        manifest,
        fit,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StitchSummary {
    pub tiles: Vec<String>,
    pub offsets_px: Vec<(i64, i64)>,
    pub nx: usize,
    pub ny: usize,
    pub uncovered_pixels: usize,
}

/// Overlapping tiles on a common pixel lattice → one composite map.
pub fn cmd_stitch(tiles: &[PathBuf], opts: &StitchOptions, out: &Path) -> Result<(RunManifest, PolarizedFieldMap)> {
    if tiles.is_empty() {
        return Err(Error::config("tiles", "no tiles given"));
    }
    let maps = tiles
        .iter()
        .map(|p| decode_polarized_map(&read_file(p, "tiles")?))
        .collect::<Result<Vec<_>>>()?;
    let offsets = nominal_offsets(&maps)?;
    let input: Vec<Tile> = maps
        .into_iter()
        .zip(offsets)
        .map(|(map, offset)| Tile { map, offset })
        .collect();
    let result = stitch(&input, opts)?;
    let mut w = ManifestWriter::new(out, "stitch", None, None);
    w.write(STITCHED_FILE, &encode_polarized_map(&result.map))?;
    write_map_pgm(&mut w, "stitched.pgm", &result.map)?;
    w.write_json(
        "stitch.json",
        &StitchSummary {
            tiles: tiles.iter().map(|p| p.display().to_string()).collect(),
            offsets_px: result.offsets.clone(),
            nx: result.map.grid.nx,
            ny: result.map.grid.ny,
            uncovered_pixels: result.coverage.iter().filter(|c| **c == 0).count(),
        },
    )?;
    Ok((w.finish()?, result.map))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCut {
    pub row: usize,
    pub peak_position_um: f64,
    pub peak_ut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub component: Component,
    pub bias_field_mt: f64,
    pub map_max_ut: f64,
    pub map_min_ut: f64,
    pub line_cut: Option<LineCut>,
    pub insertion_loss: Option<InsertionLoss>,
    pub trap: Option<TrapReport>,
    pub dynamic_range_db: Option<f64>,
    /// T/√Hz
    pub sensitivity: Option<f64>,
}

/// Magnitude of the drive current of a library device, A.
pub fn device_current(spec: &DeviceSpec) -> f64 {
    match spec {
        DeviceSpec::Cpw(p) => p.current.norm(),
        DeviceSpec::OmegaLoop(p) => p.current_a.norm(),
        DeviceSpec::Meander(p) => p.current_a.norm(),
        DeviceSpec::Interdigital(p) => p.current_a.norm(),
        DeviceSpec::TwoRingTrap(p) => p.current_a.norm(),
    }
}

fn report_text(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario            {}", r.scenario);
    let _ = writeln!(s, "component           {}", component_tag(r.component));
    let _ = writeln!(s, "bias field          {:.4} mT", r.bias_field_mt);
    let _ = writeln!(s, "map range           {:.3} .. {:.3} uT", r.map_min_ut, r.map_max_ut);
    if let Some(l) = &r.line_cut {
        let _ = writeln!(
            s,
            "line cut row {:<6} peak {:.3} uT at {:.1} um",
            l.row, l.peak_ut, l.peak_position_um
        );
    }
    if let Some(il) = &r.insertion_loss {
        let _ = writeln!(s, "simulated power     {:.3} dBm", il.p_sim_dbm);
        let _ = writeln!(s, "insertion loss      {:.3} dB", il.loss_db);
    }
    if let Some(t) = &r.trap {
        let _ = writeln!(
            s,
            "trap minimum        {:.3} uT at pixel ({}, {})",
            t.field_at_minimum * 1e6,
            t.pixel.0,
            t.pixel.1
        );
        for g in &t.gradients {
            let _ = writeln!(s, "  gradient axis {} {:?}  {:.4} uT/um", g.axis, g.side, g.gradient);
        }
    }
    if let Some(d) = r.dynamic_range_db {
        let _ = writeln!(s, "dynamic range       {d:.2} dB");
    }
    if let Some(e) = r.sensitivity {
        let _ = writeln!(s, "sensitivity         {:.3} nT/sqrt(Hz)", e * 1e9);
    }
    s
}

/// Metrics on a field map: line cut, insertion loss, trap, dynamic range and
/// sensitivity, as requested by the scenario's `report` section.
pub fn cmd_report(
    sc: &Scenario,
    config_text: Option<&str>,
    map_path: Option<&Path>,
    out: &Path,
) -> Result<(RunManifest, Report)> {
    let map = load_component_map(sc, out, map_path)?;
    if map.grid.nx != sc.grid.nx || map.grid.ny != sc.grid.ny {
        return Err(Error::domain("map grid differs from the scenario grid"));
    }
    let mut w = ManifestWriter::new(out, "report", config_text, sc.seed).scenario(&sc.name);
    let cfg = &sc.report;

    let line_cut = match cfg.line_cut_row {
        Some(row) => {
            let g = map.grid;
            let xs: Vec<f64> = (0..g.nx).map(|i| g.pixel_position(i, row).dot(g.axes[0])).collect();
            let vals = map.row(row);
            w.write("linecut.txt", line_cut_text(&xs, vals).as_bytes())?;
            let (k, peak) =
                vals.iter().enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |(bk, bv), (k, v)| if *v > bv { (k, *v) } else { (bk, bv) },
                );
            Some(LineCut {
                row,
                peak_position_um: xs[k] * 1e6,
                peak_ut: peak * 1e6,
            })
        }
        None => None,
    };

    let insertion_loss = match &cfg.insertion_loss {
        Some(il) => {
            let j = il
                .current_ma
                .map(|m| m * 1e-3)
                .unwrap_or_else(|| device_current(&sc.device));
            Some(insertion_loss_db(il.p_in_dbm, j, il.impedance_ohm)?)
        }
        None => None,
    };

    let trap = match &cfg.trap {
        Some(t) => {
            let [i0, i1, j0, j1] = t.region_px;
            Some(characterize_trap(&map, Region { i0, i1, j0, j1 }, t.arm_px)?)
        }
        None => None,
    };

    let dynamic_range = match cfg.dynamic_range_ut {
        Some([lo, hi]) => Some(dynamic_range_db(lo * 1e-6, hi * 1e-6)?),
        None => None,
    };

    let sensitivity = match (&cfg.sensitivity, &sc.dt_list) {
        (Some(s), Some(dt)) => {
            let [i0, i1, j0, j1] = s.region_px;
            let sub = crop(&map, i0, j0, i1 - i0, j1 - j0)?;
            let base = sc.source.seed;
            let cubes = (0..s.repeats as u64)
                .map(|k| simulate_cube(&sub, dt, &sc.pulse, &sc.decay, Some(base.wrapping_add(k))))
                .collect::<Result<Vec<_>>>()?;
            Some(amplitude_sensitivity(&cubes, &sc.fit.config)?)
        }
        _ => None,
    };

    let report = Report {
        scenario: sc.name.clone(),
        component: map.component,
        bias_field_mt: bias_field_for_frequency(sc.f_mw, sc.transition, &sc.bias)? * 1e3,
        map_max_ut: map.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) * 1e6,
        map_min_ut: map.values.iter().fold(f64::INFINITY, |m, v| m.min(*v)) * 1e6,
        line_cut,
        insertion_loss,
        trap,
        dynamic_range_db: dynamic_range,
        sensitivity,
    };
    w.write_json("report.json", &report)?;
    w.write("report.txt", report_text(&report).as_bytes())?;
    Ok((w.finish()?, report))
}

/// Where the iso-B frame for contour extraction comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ContourSource {
    /// Frame `frame` of an RCUB cube.
    Cube { path: PathBuf, frame: usize },
    /// Single frame simulated from the scenario's field map; `dt_mw_ns`
    /// defaults to the stream pulse length.
    Simulated { dt_mw_ns: Option<f64> },
}

pub fn cmd_contours(
    sc: &Scenario,
    config_text: Option<&str>,
    source: &ContourSource,
    out: &Path,
) -> Result<(RunManifest, IsoBContourSet)> {
    let (image, dt): (Image, f64) = match source {
        ContourSource::Cube { path, frame } => {
            let cube = decode_cube(&read_file(path, "cube")?)?;
            let img = cube
                .frames
                .get(*frame)
                .cloned()
                .ok_or_else(|| Error::config("frame", format!("cube has {} frames", cube.frames.len())))?;
            (img, cube.dt_list[*frame])
        }
        ContourSource::Simulated { dt_mw_ns } => {
            let dt = dt_mw_ns
                .or(sc.stream.as_ref().map(|s| s.dt_mw_ns))
                .ok_or_else(|| Error::config("dt_mw_ns", "no pulse length given and the scenario has no stream"))?;
            let map = load_component_map(sc, out, None)?;
            (simulate_contrast_image(&map, dt, &sc.pulse, &sc.decay, sc.seed)?, dt)
        }
    };
    let opts = ContourOptions {
        gamma_nv: sc.bias.gamma_nv,
        ..ContourOptions::default()
    };
    let set = extract_contours_with(&image, dt, &opts);
    let mut w = ManifestWriter::new(out, "contours", config_text, sc.seed).scenario(&sc.name);
    let (bytes, scale) = encode_pgm(&image.data, image.nx, image.ny)?;
    w.write_pgm("iso-b.pgm", &bytes, scale)?;
    w.write_json("contours.json", &set)?;
    Ok((w.finish()?, set))
}
