//! Shot-noise-limited amplitude sensitivity from repeated simulated scans,
//! at three photon budgets.

use nvscope::acquisition::{linear_scan, simulate_cube, DecayParams, PulseParams};
use nvscope::analysis::{amplitude_sensitivity, FitConfig};
use nvscope::fieldcore::Vec3;
use nvscope::nearfield::{Component, GridSpec, PolarizedFieldMap};

fn main() -> nvscope::Result<()> {
    let map = PolarizedFieldMap::uniform(GridSpec::xy(Vec3::ZERO, 8, 8, 1e-6), Component::SigmaMinus, 100e-6);
    let dt = linear_scan(0.0, 20.0, 100);
    for counts in [1e5, 4e5, 1.6e6] {
        let pulse = PulseParams {
            counts_ref: counts,
            ..Default::default()
        };
        let cubes = (0..10)
            .map(|k| simulate_cube(&map, &dt, &pulse, &DecayParams::default(), Some(k)))
            .collect::<nvscope::Result<Vec<_>>>()?;
        let eta = amplitude_sensitivity(&cubes, &FitConfig::default())?;
        println!("counts_ref {counts:>9.0}: η = {:.1} nT/√Hz", eta * 1e9);
    }
    Ok(())
}
