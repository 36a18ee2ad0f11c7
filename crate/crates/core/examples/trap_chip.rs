//! Field minimum above two counter-propagating loops, imaged in the xz plane.

use nvscope::analysis::{characterize_trap, Region, Side};
use nvscope::cli::scenario::Scenario;
use nvscope::currents::build_device;
use nvscope::nearfield::{evaluate_phasor_map, project_polarization};

fn main() -> nvscope::Result<()> {
    let (mut sc, _) = Scenario::load("bundled:trap-fig4-xz")?;
    sc.grid.nx = 75;
    sc.grid.ny = 50;
    sc.grid.pitch = 8e-6;
    let model = build_device(&sc.device, sc.strip)?;
    let phasor = evaluate_phasor_map(&model, &sc.grid, &sc.layer)?;
    let map = project_polarization(&phasor, &sc.frame, sc.component())?;

    let report = characterize_trap(
        &map,
        Region {
            i0: 5,
            i1: 70,
            j0: 3,
            j1: 48,
        },
        3,
    )?;
    println!(
        "minimum {:.2} µT at x = {:.0} µm, z = {:.0} µm",
        report.field_at_minimum * 1e6,
        report.position.x * 1e6,
        report.position.z * 1e6
    );
    for (axis, name) in [(0, "x"), (1, "z")] {
        for side in [Side::Minus, Side::Plus] {
            if let Some(g) = report.gradient(axis, side) {
                println!("  d|B|/d{name} ({side:?}): {g:.3} µT/µm");
            }
        }
    }
    Ok(())
}
