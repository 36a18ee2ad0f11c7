//! Field of a coplanar waveguide averaged over the NV layer, with a line cut
//! across the signal line.

use num_complex::Complex64;
use nvscope::currents::{build_cpw, CpwSpec, StripOptions};
use nvscope::fieldcore::{nv_frame_from_tilt, AxisPair, SensingLayer, Vec3};
use nvscope::nearfield::{evaluate_phasor_map, project_polarization, Component, GridSpec};

fn main() -> nvscope::Result<()> {
    let spec = CpwSpec {
        signal_width: 120e-6,
        gap: 60e-6,
        ground_width: 400e-6,
        length: 4e-3,
        current: Complex64::new(0.05, 0.0),
        ground_split: (0.5, 0.5),
        center: Vec3::ZERO,
    };
    let model = build_cpw(&spec, StripOptions::default())?;
    let grid = GridSpec::xy(Vec3::new(-300e-6, 0.0, 0.0), 151, 1, 4e-6);
    let layer = SensingLayer::new(12e-6, 14e-6, 15)?;
    let phasor = evaluate_phasor_map(&model, &grid, &layer)?;
    let frame = nv_frame_from_tilt(29.5, AxisPair::XZ)?;
    let plus = project_polarization(&phasor, &frame, Component::SigmaPlus)?;
    let minus = project_polarization(&phasor, &frame, Component::SigmaMinus)?;

    // in-phase drive is linearly polarized, so the two circular parts match
    println!("# x_um  B+_uT  B-_uT");
    for i in (0..grid.nx).step_by(5) {
        let x = grid.pixel_position(i, 0).x;
        println!(
            "{:7.1} {:7.2} {:7.2}",
            x * 1e6,
            plus.get(i, 0) * 1e6,
            minus.get(i, 0) * 1e6
        );
    }
    Ok(())
}
