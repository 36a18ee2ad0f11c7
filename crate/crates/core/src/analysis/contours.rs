//! Iso-B ridge extraction from single contrast frames.
//!
//! Ridges of `|contrast|` follow the contours `Ω·dt = mπ`. Orders are assigned
//! by counting bright bands crossed from the largest boundary-touching dark
//! region, taken to be the far field where `B ≈ 0`. Under the `sin²(Ωt/2)`
//! population signal the bright ridges are the odd orders, so the k-th ridge
//! counted inward gets `m = 2k − 1`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::acquisition::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub order: u32,
    pub parity: Parity,
    /// Field amplitude on the contour, T.
    pub label_t: f64,
    /// Crest pixel centres `(i, j)` in raster order.
    pub points: Vec<[f64; 2]>,
}

impl Ridge {
    /// Mean distance of the ridge pixels from `center`, in pixels.
    pub fn mean_radius(&self, center: [f64; 2]) -> f64 {
        let sum: f64 = self
            .points
            .iter()
            .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
            .sum();
        sum / self.points.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoBContourSet {
    pub dt_mw_ns: f64,
    pub ridges: Vec<Ridge>,
}

impl IsoBContourSet {
    pub fn order(&self, m: u32) -> impl Iterator<Item = &Ridge> {
        self.ridges.iter().filter(move |r| r.order == m)
    }
}

/// Contour amplitude `m / (2 γ dt)` in T, `dt` in ns, γ in Hz/T.
pub fn contour_label(m: u32, dt_mw_ns: f64, gamma_nv: f64) -> f64 {
    m as f64 / (2.0 * gamma_nv * dt_mw_ns * 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    /// Fraction of the peak |contrast| a ridge pixel must reach.
    pub threshold: f64,
    /// Smaller connected ridges are discarded.
    pub min_pixels: usize,
    /// Gaussian smoothing applied to |contrast| before ridge detection, px;
    /// 0 disables it.
    pub smooth_px: f64,
    pub gamma_nv: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            threshold: 0.5,
            min_pixels: 5,
            smooth_px: 1.0,
            gamma_nv: crate::fieldcore::GAMMA_NV,
        }
    }
}

/// Separable Gaussian blur of `|data|`, edges clamped.
fn smoothed_magnitude(img: &Image, sigma: f64) -> Image {
    let mut data: Vec<f64> = img.data.iter().map(|v| v.abs()).collect();
    if sigma <= 0.0 {
        return Image { data, ..*img };
    }
    let half = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let (nx, ny) = (img.nx as isize, img.ny as isize);
    for (step, len, lines) in [((1, 0), nx, ny), ((0, 1), ny, nx)] {
        let src = data.clone();
        for line in 0..lines {
            for pos in 0..len {
                let mut acc = 0.0;
                for (w, k) in kernel.iter().zip(-half..=half) {
                    let q = (pos + k).clamp(0, len - 1);
                    let (i, j) = if step.0 == 1 { (q, line) } else { (line, q) };
                    acc += w * src[(j * nx + i) as usize];
                }
                let (i, j) = if step.0 == 1 { (pos, line) } else { (line, pos) };
                data[(j * nx + i) as usize] = acc / norm;
            }
        }
    }
    Image { data, ..*img }
}

const DIRS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
const N4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const N8: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Pixels above `threshold · peak` that are maxima of `|contrast|` along at
/// least two lattice directions. A crest is a maximum across and diagonally;
/// the flank of a broad ring is one only tangentially.
fn crest_mask(img: &Image, threshold: f64) -> Vec<bool> {
    let (nx, ny) = (img.nx as isize, img.ny as isize);
    let a = |i: isize, j: isize| img.data[(j * nx + i) as usize].abs();
    let peak = img.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut mask = vec![false; img.data.len()];
    if peak == 0.0 {
        return mask;
    }
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let v = a(i, j);
            if v < threshold * peak {
                continue;
            }
            let maxima = DIRS
                .iter()
                .filter(|&&(di, dj)| {
                    let (l, r) = (a(i - di, j - dj), a(i + di, j + dj));
                    v >= l && v >= r && (v > l || v > r)
                })
                .count();
            mask[(j * nx + i) as usize] = maxima >= 2;
        }
    }
    mask
}

/// Connected components of pixels where `member` holds; `-1` elsewhere.
fn label_components(
    nx: usize,
    ny: usize,
    member: &dyn Fn(usize) -> bool,
    nbrs: &[(isize, isize)],
) -> (Vec<i64>, usize) {
    let mut labels = vec![-1i64; nx * ny];
    let mut n = 0usize;
    let mut queue = VecDeque::new();
    for start in 0..nx * ny {
        if labels[start] >= 0 || !member(start) {
            continue;
        }
        labels[start] = n as i64;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (i, j) = ((p % nx) as isize, (p / nx) as isize);
            for &(di, dj) in nbrs {
                let (x, y) = (i + di, j + dj);
                if x < 0 || y < 0 || x >= nx as isize || y >= ny as isize {
                    continue;
                }
                let q = y as usize * nx + x as usize;
                if labels[q] < 0 && member(q) {
                    labels[q] = n as i64;
                    queue.push_back(q);
                }
            }
        }
        n += 1;
    }
    (labels, n)
}

/// Detects iso-B ridges in one contrast frame and labels them by order.
pub fn extract_contours(image: &Image, dt_mw_ns: f64) -> IsoBContourSet {
    extract_contours_with(image, dt_mw_ns, &ContourOptions::default())
}

pub fn extract_contours_with(image: &Image, dt_mw_ns: f64, opts: &ContourOptions) -> IsoBContourSet {
    let empty = IsoBContourSet {
        dt_mw_ns,
        ridges: Vec::new(),
    };
    let (nx, ny) = (image.nx, image.ny);
    if nx < 3 || ny < 3 {
        return empty;
    }
    // Nesting comes from the bright bands, which stay connected under noise;
    // the one-pixel crest lines inside them give the ridge positions.
    let smooth = smoothed_magnitude(image, opts.smooth_px);
    let peak = smooth.data.iter().fold(0.0f64, |m, v| m.max(*v));
    if peak == 0.0 {
        return empty;
    }
    let crest = crest_mask(&smooth, opts.threshold);
    let mut mask: Vec<bool> = smooth.data.iter().map(|v| *v >= opts.threshold * peak).collect();
    let (mut ridge_lab, n_ridges) = label_components(nx, ny, &|p| mask[p], &N8);
    let mut sizes = vec![0usize; n_ridges];
    for l in ridge_lab.iter().filter(|l| **l >= 0) {
        sizes[*l as usize] += 1;
    }
    for p in 0..nx * ny {
        if ridge_lab[p] >= 0 && sizes[ridge_lab[p] as usize] < opts.min_pixels {
            mask[p] = false;
            ridge_lab[p] = -1;
        }
    }
    if !mask.iter().any(|m| *m) {
        return empty;
    }
    let (region_lab, n_regions) = label_components(nx, ny, &|p| !mask[p], &N4);

    // reference: largest background region touching the border
    let mut area = vec![0usize; n_regions];
    let mut on_border = vec![false; n_regions];
    for p in 0..nx * ny {
        if region_lab[p] >= 0 {
            let r = region_lab[p] as usize;
            area[r] += 1;
            let (i, j) = (p % nx, p / nx);
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                on_border[r] = true;
            }
        }
    }
    let Some(reference) = (0..n_regions)
        .filter(|r| on_border[*r])
        .max_by_key(|r| (area[*r], std::cmp::Reverse(*r)))
    else {
        return empty;
    };

    // bipartite graph: nodes 0..n_regions are regions, then ridges
    let node = |p: usize| -> Option<usize> {
        if region_lab[p] >= 0 {
            Some(region_lab[p] as usize)
        } else if ridge_lab[p] >= 0 {
            Some(n_regions + ridge_lab[p] as usize)
        } else {
            None
        }
    };
    let total = n_regions + n_ridges;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for p in 0..nx * ny {
        let Some(a) = node(p) else { continue };
        let (i, j) = ((p % nx) as isize, (p / nx) as isize);
        for &(di, dj) in &N4 {
            let (x, y) = (i + di, j + dj);
            if x < 0 || y < 0 || x >= nx as isize || y >= ny as isize {
                continue;
            }
            if let Some(b) = node(y as usize * nx + x as usize) {
                if a != b && !adj[a].contains(&b) {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
        }
    }
    let mut depth = vec![usize::MAX; total];
    depth[reference] = 0;
    let mut queue = VecDeque::from([reference]);
    while let Some(a) = queue.pop_front() {
        for &b in &adj[a] {
            if depth[b] == usize::MAX {
                depth[b] = depth[a] + 1;
                queue.push_back(b);
            }
        }
    }

    let mut points: Vec<Vec<[f64; 2]>> = vec![Vec::new(); n_ridges];
    let mut band: Vec<Vec<[f64; 2]>> = vec![Vec::new(); n_ridges];
    for p in 0..nx * ny {
        if ridge_lab[p] >= 0 {
            let xy = [(p % nx) as f64, (p / nx) as f64];
            band[ridge_lab[p] as usize].push(xy);
            if crest[p] {
                points[ridge_lab[p] as usize].push(xy);
            }
        }
    }
    for (pts, all) in points.iter_mut().zip(band) {
        if pts.is_empty() {
            *pts = all;
        }
    }
    let mut ridges: Vec<Ridge> = points
        .into_iter()
        .enumerate()
        .filter(|(r, pts)| !pts.is_empty() && depth[n_regions + r] != usize::MAX)
        .map(|(r, pts)| {
            let k = (depth[n_regions + r] + 1) / 2;
            let order = (2 * k - 1) as u32;
            Ridge {
                order,
                parity: Parity::Odd,
                label_t: contour_label(order, dt_mw_ns, opts.gamma_nv),
                points: pts,
            }
        })
        .collect();
    ridges.sort_by_key(|r| r.order);
    IsoBContourSet { dt_mw_ns, ridges }
}
