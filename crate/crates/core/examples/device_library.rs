//! Builds every bundled device and reports its size and the peak driven
//! field on a coarse grid.

use nvscope::cli::scenario::Scenario;
use nvscope::currents::build_device;
use nvscope::nearfield::{evaluate_phasor_map, project_polarization};

fn main() -> nvscope::Result<()> {
    for name in [
        "cpw-fig2",
        "omega-fig3",
        "meander-fig3",
        "interdigital-fig3",
        "trap-fig4-xz",
    ] {
        let (mut sc, _) = Scenario::load(&format!("bundled:{name}"))?;
        let model = build_device(&sc.device, sc.strip)?;
        // a quarter-resolution preview
        sc.grid.pitch *= 4.0;
        sc.grid.nx /= 4;
        sc.grid.ny /= 4;
        let phasor = evaluate_phasor_map(&model, &sc.grid, &sc.layer)?;
        let map = project_polarization(&phasor, &sc.frame, sc.component())?;
        println!(
            "{name:>18} ({:>12}): {:5} segments, {:6.2} mm of wire, max {:?} {:7.1} µT",
            sc.device.kind(),
            model.segments.len(),
            model.total_length() * 1e3,
            map.component,
            map.max() * 1e6
        );
    }
    Ok(())
}
