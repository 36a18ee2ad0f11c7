//! Mosaicking of overlapping field-map tiles.

use crate::error::{Error, Result};
use crate::nearfield::{GridSpec, PolarizedFieldMap};

/// A tile and its nominal placement (pixels along the grid axes).
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub map: PolarizedFieldMap,
    pub offset: (i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StitchOptions {
    pub refine: bool,
    /// Largest offset correction tried, in pixels.
    pub search_radius: i64,
    /// Minimum overlapping pixels for a correlation to count.
    pub min_overlap: usize,
}

impl Default for StitchOptions {
    fn default() -> Self {
        StitchOptions {
            refine: false,
            search_radius: 6,
            min_overlap: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StitchResult {
    pub map: PolarizedFieldMap,
    /// Final placement of each tile relative to the composite origin.
    pub offsets: Vec<(i64, i64)>,
    /// Number of tiles covering each composite pixel.
    pub coverage: Vec<u32>,
}

/// Nominal pixel offsets of tiles from their grid origins, relative to the first.
pub fn nominal_offsets(maps: &[PolarizedFieldMap]) -> Result<Vec<(i64, i64)>> {
    let first = maps.first().ok_or_else(|| Error::domain("no tiles"))?.grid;
    maps.iter()
        .map(|m| {
            let d = m.grid.origin - first.origin;
            let u = d.dot(first.axes[0]) / first.pitch;
            let v = d.dot(first.axes[1]) / first.pitch;
            let (ru, rv) = (u.round(), v.round());
            if (u - ru).abs() > 1e-6 || (v - rv).abs() > 1e-6 {
                return Err(Error::domain("tile origins are not on a common pixel lattice"));
            }
            Ok((ru as i64, rv as i64))
        })
        .collect()
}

struct Canvas {
    x0: i64,
    y0: i64,
    nx: usize,
    ny: usize,
    mean: Vec<f64>,
    count: Vec<u32>,
}

impl Canvas {
    fn at(&self, x: i64, y: i64) -> Option<usize> {
        let (i, j) = (x - self.x0, y - self.y0);
        (i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny)
            .then(|| j as usize * self.nx + i as usize)
    }

    fn add(&mut self, tile: &PolarizedFieldMap, off: (i64, i64)) {
        for j in 0..tile.grid.ny {
            for i in 0..tile.grid.nx {
                let k = self.at(off.0 + i as i64, off.1 + j as i64).expect("canvas covers tile");
                self.count[k] += 1;
                // running mean keeps identical contributions exact
                self.mean[k] += (tile.get(i, j) - self.mean[k]) / self.count[k] as f64;
            }
        }
    }

    /// Normalized cross-correlation with the covered canvas, and overlap size.
    fn ncc(&self, tile: &PolarizedFieldMap, off: (i64, i64)) -> (f64, usize) {
        let mut pairs = Vec::new();
        for j in 0..tile.grid.ny {
            for i in 0..tile.grid.nx {
                if let Some(k) = self.at(off.0 + i as i64, off.1 + j as i64) {
                    if self.count[k] > 0 {
                        pairs.push((self.mean[k], tile.get(i, j)));
                    }
                }
            }
        }
        let n = pairs.len();
        if n < 2 {
            return (f64::NEG_INFINITY, n);
        }
        let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let (ma, mb) = (ma / n as f64, mb / n as f64);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (a, b) in &pairs {
            sab += (a - ma) * (b - mb);
            saa += (a - ma) * (a - ma);
            sbb += (b - mb) * (b - mb);
        }
        if saa <= 0.0 || sbb <= 0.0 {
            return (f64::NEG_INFINITY, n);
        }
        (sab / (saa * sbb).sqrt(), n)
    }
}

/// Places tiles on their bounding grid, optionally correcting each offset by
/// the integer shift that maximizes correlation with the tiles already placed.
/// Overlapping pixels are averaged.
pub fn stitch(tiles: &[Tile], opts: &StitchOptions) -> Result<StitchResult> {
    let first = tiles.first().ok_or_else(|| Error::domain("no tiles to stitch"))?;
    for t in tiles {
        t.map.grid.validate()?;
        if t.map.grid.pitch != first.map.grid.pitch {
            return Err(Error::domain("tiles have different pitch"));
        }
        if t.map.component != first.map.component {
            return Err(Error::domain("tiles hold different polarization components"));
        }
        if t.map.grid.axes != first.map.grid.axes {
            return Err(Error::domain("tiles lie in different planes"));
        }
    }
    let margin = if opts.refine { opts.search_radius.max(0) } else { 0 };
    let x0 = tiles.iter().map(|t| t.offset.0).min().unwrap() - margin;
    let y0 = tiles.iter().map(|t| t.offset.1).min().unwrap() - margin;
    let x1 = tiles.iter().map(|t| t.offset.0 + t.map.grid.nx as i64).max().unwrap() + margin;
    let y1 = tiles.iter().map(|t| t.offset.1 + t.map.grid.ny as i64).max().unwrap() + margin;
    let (nx, ny) = ((x1 - x0) as usize, (y1 - y0) as usize);
    let mut canvas = Canvas {
        x0,
        y0,
        nx,
        ny,
        mean: vec![0.0; nx * ny],
        count: vec![0; nx * ny],
    };

    let mut placed = Vec::with_capacity(tiles.len());
    for (k, t) in tiles.iter().enumerate() {
        let mut off = t.offset;
        if opts.refine && k > 0 {
            let mut best: Option<(f64, i64, (i64, i64))> = None;
            for dy in -opts.search_radius..=opts.search_radius {
                for dx in -opts.search_radius..=opts.search_radius {
                    let cand = (t.offset.0 + dx, t.offset.1 + dy);
                    let (score, n) = canvas.ncc(&t.map, cand);
                    if n < opts.min_overlap || !score.is_finite() {
                        continue;
                    }
                    let dist = dx.abs() + dy.abs();
                    let better = match best {
                        None => true,
                        Some((s, d, _)) => score > s + 1e-12 || ((score - s).abs() <= 1e-12 && dist < d),
                    };
                    if better {
                        best = Some((score, dist, cand));
                    }
                }
            }
            if let Some((_, _, cand)) = best {
                off = cand;
            }
        }
        canvas.add(&t.map, off);
        placed.push(off);
    }

    // crop to the covered bounding box
    let bx0 = placed.iter().map(|o| o.0).min().unwrap();
    let by0 = placed.iter().map(|o| o.1).min().unwrap();
    let bx1 = placed
        .iter()
        .zip(tiles)
        .map(|(o, t)| o.0 + t.map.grid.nx as i64)
        .max()
        .unwrap();
    let by1 = placed
        .iter()
        .zip(tiles)
        .map(|(o, t)| o.1 + t.map.grid.ny as i64)
        .max()
        .unwrap();
    let (onx, ony) = ((bx1 - bx0) as usize, (by1 - by0) as usize);
    let mut values = Vec::with_capacity(onx * ony);
    let mut coverage = Vec::with_capacity(onx * ony);
    for y in by0..by1 {
        for x in bx0..bx1 {
            let k = canvas.at(x, y).unwrap();
            values.push(canvas.mean[k]);
            coverage.push(canvas.count[k]);
        }
    }
    let g0 = first.map.grid;
    let shift = (bx0 - first.offset.0, by0 - first.offset.1);
    let grid = GridSpec {
        origin: g0.origin + g0.axes[0] * (shift.0 as f64 * g0.pitch) + g0.axes[1] * (shift.1 as f64 * g0.pitch),
        nx: onx,
        ny: ony,
        ..g0
    };
    Ok(StitchResult {
        map: PolarizedFieldMap {
            grid,
            component: first.map.component,
            values,
        },
        offsets: placed.iter().map(|o| (o.0 - bx0, o.1 - by0)).collect(),
        coverage,
    })
}

/// Sub-map covering `nx × ny` pixels starting at `(i0, j0)`.
pub fn crop(map: &PolarizedFieldMap, i0: usize, j0: usize, nx: usize, ny: usize) -> Result<PolarizedFieldMap> {
    if i0 + nx > map.grid.nx || j0 + ny > map.grid.ny || nx == 0 || ny == 0 {
        return Err(Error::domain("crop window outside the map"));
    }
    let g = map.grid;
    let mut values = Vec::with_capacity(nx * ny);
    for j in j0..j0 + ny {
        values.extend_from_slice(&map.values[g.index(i0, j)..g.index(i0, j) + nx]);
    }
    Ok(PolarizedFieldMap {
        grid: GridSpec {
            origin: g.origin + g.axes[0] * (i0 as f64 * g.pitch) + g.axes[1] * (j0 as f64 * g.pitch),
            nx,
            ny,
            ..g
        },
        component: map.component,
        values,
    })
}
