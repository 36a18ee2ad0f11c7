//! Field-minimum (trap) location and one-sided gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldcore::Vec3;
use crate::nearfield::PolarizedFieldMap;

/// Inclusive-exclusive pixel window `[i0, i1) × [j0, j1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl Region {
    pub fn whole(map: &PolarizedFieldMap) -> Self {
        Region {
            i0: 0,
            i1: map.grid.nx,
            j0: 0,
            j1: map.grid.ny,
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i1 && j >= self.j0 && j < self.j1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

/// Outward slope of the field on one side of the minimum along one grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientArm {
    pub axis: usize,
    pub side: Side,
    /// T/m, positive when the field rises away from the minimum.
    pub gradient: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapReport {
    pub pixel: (usize, usize),
    pub position: Vec3,
    pub field_at_minimum: f64,
    pub gradients: Vec<GradientArm>,
}

impl TrapReport {
    pub fn gradient(&self, axis: usize, side: Side) -> Option<f64> {
        self.gradients
            .iter()
            .find(|g| g.axis == axis && g.side == side)
            .map(|g| g.gradient)
    }
}

/// True when `(i, j)` has a full 8-neighbourhood, is no higher than any
/// neighbour and strictly lower than at least one.
pub fn is_local_minimum(map: &PolarizedFieldMap, i: usize, j: usize) -> bool {
    let g = map.grid;
    if i == 0 || j == 0 || i + 1 >= g.nx || j + 1 >= g.ny {
        return false;
    }
    let v = map.get(i, j);
    let mut strictly_lower = false;
    for dj in -1i64..=1 {
        for di in -1i64..=1 {
            if di == 0 && dj == 0 {
                continue;
            }
            let n = map.get((i as i64 + di) as usize, (j as i64 + dj) as usize);
            if v > n {
                return false;
            }
            strictly_lower |= v < n;
        }
    }
    strictly_lower
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Deepest interior local minimum inside `region`, with linear-fit gradients
/// over `arm` pixels on each side along both grid axes.
pub fn characterize_trap(map: &PolarizedFieldMap, region: Region, arm: usize) -> Result<TrapReport> {
    let g = map.grid;
    if region.i1 > g.nx || region.j1 > g.ny || region.i0 >= region.i1 || region.j0 >= region.j1 {
        return Err(Error::domain("search region outside the grid"));
    }
    if arm == 0 {
        return Err(Error::domain("gradient arm must be at least one pixel"));
    }
    let mut best: Option<(usize, usize, f64)> = None;
    for j in region.j0..region.j1 {
        for i in region.i0..region.i1 {
            if !is_local_minimum(map, i, j) {
                continue;
            }
            let v = map.get(i, j);
            if best.is_none_or(|(_, _, b)| v < b) {
                best = Some((i, j, v));
            }
        }
    }
    let (i, j, v) = best.ok_or_else(|| Error::NotFound("no interior local minimum in region".into()))?;

    let mut gradients = Vec::new();
    for axis in 0..2 {
        for side in [Side::Minus, Side::Plus] {
            let sign: i64 = if side == Side::Plus { 1 } else { -1 };
            let (mut xs, mut ys) = (vec![0.0], vec![v]);
            for k in 1..=arm as i64 {
                let (ii, jj) = if axis == 0 {
                    (i as i64 + sign * k, j as i64)
                } else {
                    (i as i64, j as i64 + sign * k)
                };
                if ii < 0 || jj < 0 || ii as usize >= g.nx || jj as usize >= g.ny {
                    break;
                }
                xs.push(k as f64 * g.pitch);
                ys.push(map.get(ii as usize, jj as usize));
            }
            if xs.len() >= 2 {
                gradients.push(GradientArm {
                    axis,
                    side,
                    gradient: slope(&xs, &ys),
                    points: xs.len(),
                });
            }
        }
    }
    Ok(TrapReport {
        pixel: (i, j),
        position: g.pixel_position(i, j),
        field_at_minimum: v,
        gradients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nearfield::{Component, GridSpec};
    use approx::assert_relative_eq;

    fn cone(nx: usize, ny: usize, c: (usize, usize), b0: f64, grad: f64) -> PolarizedFieldMap {
        let grid = GridSpec::xy(Vec3::ZERO, nx, ny, 2e-6);
        let r0 = grid.pixel_position(c.0, c.1);
        let values = (0..nx * ny)
            .map(|p| {
                let (i, j) = grid.coords(p);
                b0 + grad * (grid.pixel_position(i, j) - r0).norm()
            })
            .collect();
        PolarizedFieldMap {
            grid,
            component: Component::SigmaPlus,
            values,
        }
    }

    #[test]
    fn cone_minimum_and_gradients() {
        let map = cone(41, 31, (17, 12), 5e-6, 3.7);
        let rep = characterize_trap(&map, Region::whole(&map), 5).unwrap();
        assert_eq!(rep.pixel, (17, 12));
        assert_eq!(rep.gradients.len(), 4);
        for g in &rep.gradients {
            assert_relative_eq!(g.gradient, 3.7, max_relative = 1e-9);
            assert_eq!(g.points, 6);
        }
    }

    #[test]
    fn ramp_has_no_trap() {
        let grid = GridSpec::xy(Vec3::ZERO, 10, 10, 1e-6);
        let values = (0..100).map(|p| (p % 10) as f64 + 0.1 * (p / 10) as f64).collect();
        let map = PolarizedFieldMap {
            grid,
            component: Component::SigmaMinus,
            values,
        };
        assert!(matches!(
            characterize_trap(&map, Region::whole(&map), 5),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn region_must_fit() {
        let map = cone(10, 10, (5, 5), 0.0, 1.0);
        let r = Region {
            i0: 0,
            i1: 11,
            j0: 0,
            j1: 10,
        };
        assert!(matches!(characterize_trap(&map, r, 5), Err(Error::Domain(_))));
    }
}
