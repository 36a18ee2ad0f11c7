//! Device and instrument figures of merit.

use serde::{Deserialize, Serialize};

use super::fit::{fit_cube, FitConfig};
use crate::acquisition::ImageCube;
use crate::error::{Error, Result};

/// `20·log10(b_max / b_min)`: amplitude ratio expressed as a power ratio.
pub fn dynamic_range_db(b_min: f64, b_max: f64) -> Result<f64> {
    if !(b_min > 0.0 && b_max >= b_min && b_max.is_finite()) {
        return Err(Error::domain("dynamic range needs 0 < b_min ≤ b_max"));
    }
    Ok(20.0 * (b_max / b_min).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionLoss {
    pub p_sim_dbm: f64,
    pub loss_db: f64,
}

/// On-chip power `J²Z` in dBm compared with the measured input power.
pub fn insertion_loss_db(p_in_dbm: f64, j_mw: f64, z_ohm: f64) -> Result<InsertionLoss> {
    if !(j_mw > 0.0 && z_ohm > 0.0) {
        return Err(Error::domain("current and impedance must be positive"));
    }
    let p_sim_dbm = 10.0 * (j_mw * j_mw * z_ohm / 1e-3).log10();
    Ok(InsertionLoss {
        p_sim_dbm,
        loss_db: p_in_dbm - p_sim_dbm,
    })
}

/// Median over pixels of the repeat-to-repeat standard deviation of the
/// fitted field, scaled by √(shot time per cube). T/√Hz.
pub fn amplitude_sensitivity(cubes: &[ImageCube], cfg: &FitConfig) -> Result<f64> {
    if cubes.len() < 10 {
        return Err(Error::domain("sensitivity needs at least 10 repeated cubes"));
    }
    let grid = cubes[0].grid;
    if cubes.iter().any(|c| c.grid != grid || c.dt_list != cubes[0].dt_list) {
        return Err(Error::domain("repeated cubes must share grid and dt scan"));
    }
    let fits = cubes.iter().map(|c| fit_cube(c, cfg)).collect::<Result<Vec<_>>>()?;
    let n = cubes.len() as f64;
    let mut per_pixel = Vec::new();
    for p in 0..grid.len() {
        if !fits.iter().all(|f| f.pixels[p].is_converged()) {
            continue;
        }
        let bs: Vec<f64> = fits.iter().map(|f| f.field.values[p]).collect();
        let mean = bs.iter().sum::<f64>() / n;
        let var = bs.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
        per_pixel.push(var.sqrt());
    }
    if per_pixel.is_empty() {
        return Err(Error::NotFound("no pixel converged in every repeat".into()));
    }
    per_pixel.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = per_pixel.len();
    let median = if m % 2 == 1 {
        per_pixel[m / 2]
    } else {
        0.5 * (per_pixel[m / 2 - 1] + per_pixel[m / 2])
    };
    Ok(median * cubes[0].measurement_time_s().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dynamic_range_examples() {
        assert_eq!(dynamic_range_db(1e-6, 1e-6).unwrap(), 0.0);
        assert_relative_eq!(dynamic_range_db(1e-6, 1e-5).unwrap(), 20.0, max_relative = 1e-12);
        assert_relative_eq!(dynamic_range_db(1e-6, 251.2e-6).unwrap(), 48.0, epsilon = 0.01);
        assert!(dynamic_range_db(2e-6, 1e-6).is_err());
        assert!(dynamic_range_db(0.0, 1e-6).is_err());
    }

    #[test]
    fn insertion_loss_examples() {
        let r = insertion_loss_db(22.6, 0.05, 50.0).unwrap();
        assert_relative_eq!(r.p_sim_dbm, 20.969, epsilon = 1e-3);
        assert_relative_eq!(r.loss_db, 1.631, epsilon = 1e-3);
        // 1 mW reference level
        let j = (1e-3f64 / 50.0).sqrt();
        assert!(insertion_loss_db(0.0, j, 50.0).unwrap().p_sim_dbm.abs() < 1e-12);
        assert!(insertion_loss_db(0.0, 0.0, 50.0).is_err());
    }
}
