//! Cuts a field map into overlapping tiles, perturbs one placement and
//! reassembles the mosaic with correlation refinement.

use nvscope::analysis::{crop, stitch, StitchOptions, Tile};
use nvscope::fieldcore::Vec3;
use nvscope::nearfield::{Component, GridSpec, PolarizedFieldMap};

fn main() -> nvscope::Result<()> {
    let grid = GridSpec::xy(Vec3::ZERO, 90, 60, 2e-6);
    let values = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.coords(k);
            let (x, y) = (i as f64 / 9.0, j as f64 / 7.0);
            1e-4 * (1.2 + x.sin() * y.cos() + 0.3 * (0.7 * x + 1.3 * y).sin())
        })
        .collect();
    let whole = PolarizedFieldMap {
        grid,
        component: Component::SigmaMinus,
        values,
    };

    let mut tiles = Vec::new();
    for (i0, j0) in [(0, 0), (40, 0), (0, 25), (40, 25)] {
        tiles.push(Tile {
            map: crop(&whole, i0, j0, 50, 35)?,
            offset: (i0 as i64, j0 as i64),
        });
    }
    // stage error on the last tile
    tiles[3].offset = (43, 23);

    for refine in [false, true] {
        let out = stitch(
            &tiles,
            &StitchOptions {
                refine,
                ..Default::default()
            },
        )?;
        let (nx, ny) = (out.map.grid.nx, out.map.grid.ny);
        let exact = out.map.values == whole.values;
        println!(
            "refine {refine:5}: {nx}×{ny}, offsets {:?}, identical to source: {exact}",
            out.offsets
        );
    }
    Ok(())
}
