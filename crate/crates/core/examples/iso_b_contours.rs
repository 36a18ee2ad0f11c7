//! Single-frame iso-B imaging: contrast of a synthetic dipole-like field at
//! one MW pulse length, with ridges labelled by field amplitude.

use nvscope::acquisition::{simulate_contrast_image, DecayParams, PulseParams};
use nvscope::analysis::extract_contours;
use nvscope::fieldcore::Vec3;
use nvscope::nearfield::{Component, GridSpec, PolarizedFieldMap};

fn main() -> nvscope::Result<()> {
    let n = 121;
    let grid = GridSpec::xy(Vec3::ZERO, n, n, 1e-6);
    let c = 60.0;
    // 3 mT at the centre falling off as 1/(1 + (r/15)²)
    let values = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            let r = (i as f64 - c).hypot(j as f64 - c);
            3e-3 / (1.0 + (r / 15.0).powi(2))
        })
        .collect();
    let map = PolarizedFieldMap {
        grid,
        component: Component::SigmaMinus,
        values,
    };

    let dt = 30.0;
    let counts = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1e6);
    let pulse = PulseParams {
        counts_ref: counts,
        ..Default::default()
    };
    let img = simulate_contrast_image(&map, dt, &pulse, &DecayParams::default(), Some(1))?;
    let set = extract_contours(&img, dt);
    println!("counts_ref {counts:.0}: {} ridges", set.ridges.len());
    for ridge in &set.ridges {
        let r = ridge.mean_radius([c, c]);
        let expected = 15.0 * (3e-3 / ridge.label_t - 1.0).max(0.0).sqrt();
        println!(
            "m = {}: {:7.1} µT, {} px, radius {:5.2} px (analytic {:5.2})",
            ridge.order,
            ridge.label_t * 1e6,
            ridge.points.len(),
            r,
            expected
        );
    }
    Ok(())
}
