//! Oversampled periodogram for frequency seeding of Rabi fits.
//!
//! Evaluated as a direct DFT so non-uniform dt scans work unchanged. Bin
//! spacing is `1 / (oversample · N · Δt)`, the spacing of an FFT of the trace
//! zero-padded by `oversample`.

/// Power spectrum of a mean-removed trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    /// cycles per unit of `t`
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    /// Interpolated frequency, cycles per unit of `t`.
    pub freq: f64,
    pub power: f64,
    pub bin: usize,
}

impl Periodogram {
    pub fn compute(t: &[f64], y: &[f64], oversample: usize) -> Periodogram {
        assert_eq!(t.len(), y.len());
        let n = t.len();
        let mean_step = (t[n - 1] - t[0]) / (n - 1) as f64;
        let df = 1.0 / (oversample as f64 * n as f64 * mean_step);
        let nyquist = 0.5 / mean_step;
        let n_bins = (nyquist / df).floor() as usize + 1;
        let mean = y.iter().sum::<f64>() / n as f64;
        let t0 = t[0];
        // mean removal leaves rounding residue of order eps·|y| per sample
        let y_max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = (16.0 * f64::EPSILON * y_max * n as f64).powi(2) / n as f64;
        let mut freqs = Vec::with_capacity(n_bins);
        let mut power = Vec::with_capacity(n_bins);
        for k in 0..n_bins {
            let f = k as f64 * df;
            let w = 2.0 * std::f64::consts::PI * f;
            let (mut re, mut im) = (0.0, 0.0);
            for (ti, yi) in t.iter().zip(y) {
                let (s, c) = (w * (ti - t0)).sin_cos();
                let v = yi - mean;
                re += v * c;
                im -= v * s;
            }
            freqs.push(f);
            let p = (re * re + im * im) / n as f64;
            power.push(if p > floor { p } else { 0.0 });
        }
        Periodogram { freqs, power }
    }

    /// Local maxima at or above `f_min`, strongest first. Equal peaks keep
    /// ascending frequency order.
    pub fn peaks(&self, f_min: f64) -> Vec<SpectralPeak> {
        let p = &self.power;
        let mut out: Vec<SpectralPeak> = (0..p.len())
            .filter(|&k| self.freqs[k] >= f_min)
            .filter(|&k| {
                let left = if k > 0 { p[k - 1] } else { f64::NEG_INFINITY };
                let right = if k + 1 < p.len() { p[k + 1] } else { f64::NEG_INFINITY };
                p[k] > left && p[k] >= right && p[k] > 0.0
            })
            .map(|k| self.refine(k))
            .collect();
        // stable sort keeps the lower frequency first on ties
        out.sort_by(|a, b| b.power.partial_cmp(&a.power).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    /// Parabolic interpolation of the peak position around bin `k`.
    fn refine(&self, k: usize) -> SpectralPeak {
        let p = &self.power;
        let freq = if k > 0 && k + 1 < p.len() {
            let (a, b, c) = (p[k - 1], p[k], p[k + 1]);
            let denom = a - 2.0 * b + c;
            let delta = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            let df = self.freqs[1] - self.freqs[0];
            self.freqs[k] + delta.clamp(-0.5, 0.5) * df
        } else {
            self.freqs[k]
        };
        SpectralPeak {
            freq,
            power: p[k],
            bin: k,
        }
    }

    /// Peak power relative to the median bin power.
    pub fn snr(&self, peak_power: f64) -> f64 {
        let mut sorted: Vec<f64> = self.power.iter().skip(1).copied().collect();
        if sorted.is_empty() || peak_power <= 0.0 {
            return 0.0;
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let median = sorted[sorted.len() / 2];
        if median > 0.0 {
            peak_power / median
        } else {
            f64::INFINITY
        }
    }
}
