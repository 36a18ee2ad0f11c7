//! Pixel-wise Rabi fitting.
//!
//! The fitted model is
//!
//! ```text
//! y = A + Bb·e^{-t/τf} + Cb·e^{-t/τs} − (B·e^{-t/τf} + C·e^{-t/τs})·sin(Ω t + φ)
//! ```
//!
//! With [`Baseline::Constant`] (`Bb = Cb = 0`) and `allow_phase = false`
//! (`φ = 0`) this is the classic double-exponential damped-sine Rabi model.
//! The envelope baseline lets the model follow a population signal
//! `c0·env(t)·sin²(Ωt/2)`, whose mean level decays with the envelope.
//!
//! Fitting is Levenberg-Marquardt on `(A, B, C, ln τf, ln τs, Ω, φ, Bb, Cb)`
//! seeded from the periodogram, with amplitudes initialized by linear least
//! squares at the seed frequency.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::periodogram::Periodogram;
use crate::acquisition::ImageCube;
use crate::error::{Error, Result};
use crate::fieldcore::GAMMA_NV;
use crate::nearfield::PolarizedFieldMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeMode {
    DoubleExp,
    SingleExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Offset `A` only.
    Constant,
    /// Offset plus envelope-following terms `Bb`, `Cb`.
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    /// rad/ns; derived from the scan (0.1 MHz to Nyquist) when `None`.
    pub omega_bounds: Option<(f64, f64)>,
    pub min_contrast_snr: f64,
    pub allow_phase: bool,
    pub envelope_mode: EnvelopeMode,
    pub baseline: Baseline,
    /// Periodogram peaks tried as starting frequencies.
    pub n_seeds: usize,
    /// Hz/T, used for the field calibration.
    pub gamma_nv: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 500,
            rel_tolerance: 1e-10,
            omega_bounds: None,
            min_contrast_snr: 25.0,
            allow_phase: true,
            envelope_mode: EnvelopeMode::DoubleExp,
            baseline: Baseline::Envelope,
            n_seeds: 3,
            gamma_nv: GAMMA_NV,
        }
    }
}

impl FitConfig {
    /// The unmodified damped-sine model: constant offset, zero phase.
    pub fn verbatim() -> Self {
        FitConfig {
            allow_phase: false,
            baseline: Baseline::Constant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.omega_bounds {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::domain("omega bounds must be positive and ordered"));
            }
        }
        if !(self.rel_tolerance > 0.0) || self.max_iterations == 0 || self.n_seeds == 0 {
            return Err(Error::domain(
                "tolerance, iteration limit and seed count must be positive",
            ));
        }
        if !(self.gamma_nv > 0.0) {
            return Err(Error::domain("gamma_nv must be positive"));
        }
        Ok(())
    }

    fn bounds_for(&self, t: &[f64]) -> (f64, f64) {
        self.omega_bounds.unwrap_or_else(|| {
            let step = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
            (2.0 * PI * 1e-4, 2.0 * PI * 0.5 / step)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiFitResult {
    pub offset: f64,
    pub amp_fast: f64,
    pub amp_slow: f64,
    pub tau_fast_ns: f64,
    pub tau_slow_ns: f64,
    /// rad/ns
    pub omega: f64,
    pub phase: f64,
    pub baseline_fast: f64,
    pub baseline_slow: f64,
    pub residual_rms: f64,
    pub converged: bool,
    pub envelope_mode: EnvelopeMode,
    pub iterations: usize,
    pub snr: f64,
}

impl RabiFitResult {
    /// Model value at `t` ns.
    pub fn eval(&self, t: f64) -> f64 {
        let ef = (-t / self.tau_fast_ns).exp();
        let es = (-t / self.tau_slow_ns).exp();
        self.offset + self.baseline_fast * ef + self.baseline_slow * es
            - (self.amp_fast * ef + self.amp_slow * es) * (self.omega * t + self.phase).sin()
    }

    /// Circular field amplitude in T.
    pub fn field(&self, gamma_nv: f64) -> f64 {
        omega_to_field(self.omega, gamma_nv)
    }
}

/// `B = Ω / (2π γ)` with Ω in rad/ns and γ in Hz/T.
pub fn omega_to_field(omega_rad_per_ns: f64, gamma_nv: f64) -> f64 {
    omega_rad_per_ns * 1e9 / (2.0 * PI * gamma_nv)
}

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const LTF: usize = 3;
const LTS: usize = 4;
const OM: usize = 5;
const PH: usize = 6;
const BB: usize = 7;
const CB: usize = 8;
const NP: usize = 9;

/// Sinc sidelobes sit below 5% of the main lobe.
const SIDELOBE_REJECTION: f64 = 0.25;

/// Longest decay time the fit may reach, in scan spans.
const TAU_MAX_SPANS: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
struct Layout {
    free: [bool; NP],
}

impl Layout {
    fn new(mode: EnvelopeMode, baseline: Baseline, allow_phase: bool) -> Self {
        let double = mode == EnvelopeMode::DoubleExp;
        let env = baseline == Baseline::Envelope;
        let mut free = [true; NP];
        free[C] = double;
        free[LTS] = double;
        free[CB] = double && env;
        free[BB] = env;
        free[PH] = allow_phase;
        Layout { free }
    }

    fn indices(&self) -> Vec<usize> {
        (0..NP).filter(|&k| self.free[k]).collect()
    }
}

fn model_terms(p: &[f64; NP], t: f64) -> (f64, f64, f64, f64, f64) {
    let ef = (-t * (-p[LTF]).exp()).exp();
    let es = (-t * (-p[LTS]).exp()).exp();
    let (s, c) = (p[OM] * t + p[PH]).sin_cos();
    (
        ef,
        es,
        s,
        c,
        p[A] + p[BB] * ef + p[CB] * es - (p[B] * ef + p[C] * es) * s,
    )
}

fn residuals(p: &[f64; NP], t: &[f64], y: &[f64]) -> Vec<f64> {
    t.iter().zip(y).map(|(&t, &y)| model_terms(p, t).4 - y).collect()
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn jacobian(p: &[f64; NP], t: &[f64], idx: &[usize]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(t.len(), idx.len());
    let inv_tf = (-p[LTF]).exp();
    let inv_ts = (-p[LTS]).exp();
    for (row, &t) in t.iter().enumerate() {
        let (ef, es, s, c, _) = model_terms(p, t);
        let amp = p[B] * ef + p[C] * es;
        for (col, &k) in idx.iter().enumerate() {
            j[(row, col)] = match k {
                A => 1.0,
                B => -ef * s,
                C => -es * s,
                LTF => (p[BB] - p[B] * s) * ef * t * inv_tf,
                LTS => (p[CB] - p[C] * s) * es * t * inv_ts,
                OM => -amp * c * t,
                PH => -amp * c,
                BB => ef,
                CB => es,
                _ => unreachable!(),
            };
        }
    }
    j
}

struct LmOutcome {
    params: [f64; NP],
    cost: f64,
    iterations: usize,
    converged: bool,
    jtj: DMatrix<f64>,
}

fn levenberg_marquardt(mut p: [f64; NP], layout: Layout, t: &[f64], y: &[f64], cfg: &FitConfig) -> LmOutcome {
    let idx = layout.indices();
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    // longer decays trade off against the offset as a near-linear drift and
    // let the fit creep along a flat valley
    let ln_tau_max = ((t[t.len() - 1] - t[0]) * TAU_MAX_SPANS).ln();
    let mut r = residuals(&p, t, y);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = jacobian(&p, t, &idx);
    while iterations < cfg.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        if c <= 1e-30 * scale {
            converged = true;
            break;
        }
        // a decay time held at its cap stays there while descent points outward
        let pinned: Vec<bool> = idx
            .iter()
            .enumerate()
            .map(|(col, &k)| (k == LTF || k == LTS) && p[k] >= ln_tau_max - 1e-12 && g[col] < 0.0)
            .collect();
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            let mut rhs = -&g;
            for k in 0..idx.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            for (col, _) in pinned.iter().enumerate().filter(|(_, p)| **p) {
                a.row_mut(col).fill(0.0);
                a.column_mut(col).fill(0.0);
                a[(col, col)] = 1.0;
                rhs[col] = 0.0;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&rhs);
            let mut trial = p;
            for (col, &k) in idx.iter().enumerate() {
                trial[k] += step[col];
            }
            trial[LTF] = trial[LTF].min(ln_tau_max);
            trial[LTS] = trial[LTS].min(ln_tau_max);
            let rt = residuals(&trial, t, y);
            let ct = cost(&rt);
            if ct.is_finite() && ct < c {
                let small_step = idx
                    .iter()
                    .enumerate()
                    .all(|(col, &k)| step[col].abs() <= cfg.rel_tolerance * (p[k].abs() + cfg.rel_tolerance));
                let small_gain = c - ct <= cfg.rel_tolerance * c;
                let moved: f64 = r.iter().zip(&rt).map(|(a, b)| (a - b) * (a - b)).sum();
                let small_change = moved <= cfg.rel_tolerance * cfg.rel_tolerance * scale;
                p = trial;
                r = rt;
                c = ct;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if small_step || small_gain || small_change {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left: stationary point
            converged = true;
        }
        if converged {
            break;
        }
        jac = jacobian(&p, t, &idx);
    }
    let jac = jacobian(&p, t, &idx);
    LmOutcome {
        params: p,
        cost: c,
        iterations,
        converged,
        jtj: jac.transpose() * jac,
    }
}

/// Linear least-squares amplitudes for fixed `(Ω, τf, τs)`, returning the
/// full parameter vector and its cost.
fn linear_init(t: &[f64], y: &[f64], omega: f64, tau_f: f64, tau_s: f64, layout: Layout) -> Option<([f64; NP], f64)> {
    let double = layout.free[C];
    let env = layout.free[BB];
    let mut cols: Vec<Box<dyn Fn(f64) -> f64>> = vec![Box::new(|_| 1.0)];
    let ef = move |t: f64| (-t / tau_f).exp();
    let es = move |t: f64| (-t / tau_s).exp();
    cols.push(Box::new(move |t| ef(t) * (omega * t).sin()));
    cols.push(Box::new(move |t| ef(t) * (omega * t).cos()));
    if double {
        cols.push(Box::new(move |t| es(t) * (omega * t).sin()));
        cols.push(Box::new(move |t| es(t) * (omega * t).cos()));
    }
    if env {
        cols.push(Box::new(ef));
        if double {
            cols.push(Box::new(es));
        }
    }
    let m = DMatrix::from_fn(t.len(), cols.len(), |r, c| cols[c](t[r]));
    let coef = m
        .clone()
        .svd(true, true)
        .solve(&DVector::from_column_slice(y), 1e-12)
        .ok()?;
    let (sf, cf) = (coef[1], coef[2]);
    let (ss, cs) = if double { (coef[3], coef[4]) } else { (0.0, 0.0) };
    let phase = if layout.free[PH] {
        (-(cf + cs)).atan2(-(sf + ss))
    } else {
        0.0
    };
    let (sp, cp) = phase.sin_cos();
    let mut p = [0.0; NP];
    p[A] = coef[0];
    p[B] = -(sf * cp + cf * sp);
    p[C] = -(ss * cp + cs * sp);
    p[LTF] = tau_f.ln();
    p[LTS] = tau_s.ln();
    p[OM] = omega;
    p[PH] = phase;
    if env {
        let k = if double { 5 } else { 3 };
        p[BB] = coef[k];
        p[CB] = if double { coef[k + 1] } else { 0.0 };
    }
    let c = cost(&residuals(&p, t, y));
    Some((p, c))
}

fn initial_guess(t: &[f64], y: &[f64], omega: f64, layout: Layout) -> Option<[f64; NP]> {
    let span = t[t.len() - 1] - t[0];
    let fast = [span / 20.0, span / 8.0, span / 3.0];
    let slow = [span, 4.0 * span];
    // periodogram peaks of short, damped traces are biased by up to a bin
    let df = 2.0 * PI / (4.0 * span);
    let mut best: Option<([f64; NP], f64)> = None;
    for k in -2..=2 {
        let omega = omega + 0.5 * k as f64 * df;
        if omega <= 0.0 {
            continue;
        }
        for &tf in &fast {
            let slows: &[f64] = if layout.free[C] { &slow } else { &[1.0] };
            for &ts in slows {
                let ts = if layout.free[C] { ts } else { tf };
                if let Some((p, c)) = linear_init(t, y, omega, tf, ts, layout) {
                    if best.as_ref().is_none_or(|(_, bc)| c < *bc) {
                        best = Some((p, c));
                    }
                }
            }
        }
    }
    best.map(|(p, _)| p)
}

fn to_result(
    out: &LmOutcome,
    mode: EnvelopeMode,
    n: usize,
    bounds: (f64, f64),
    snr: f64,
    allow_phase: bool,
) -> RabiFitResult {
    let p = out.params;
    let (mut tf, mut ts) = (p[LTF].exp(), p[LTS].exp());
    let (mut b, mut c, mut bb, mut cb) = (p[B], p[C], p[BB], p[CB]);
    if mode == EnvelopeMode::SingleExp {
        ts = tf;
        c = 0.0;
        cb = 0.0;
    } else if tf > ts {
        std::mem::swap(&mut tf, &mut ts);
        std::mem::swap(&mut b, &mut c);
        std::mem::swap(&mut bb, &mut cb);
    }
    // canonical sign: positive oscillation amplitude
    let mut phase = p[PH];
    if allow_phase && b + c < 0.0 {
        b = -b;
        c = -c;
        phase += PI;
    }
    let phase = if allow_phase {
        (phase + PI).rem_euclid(2.0 * PI) - PI
    } else {
        phase
    };
    let omega = p[OM];
    let in_bounds = omega > bounds.0 && omega < bounds.1;
    RabiFitResult {
        offset: p[A],
        amp_fast: b,
        amp_slow: c,
        tau_fast_ns: tf,
        tau_slow_ns: ts,
        omega,
        phase,
        baseline_fast: bb,
        baseline_slow: cb,
        residual_rms: (2.0 * out.cost / n as f64).sqrt(),
        converged: out.converged && in_bounds,
        envelope_mode: mode,
        iterations: out.iterations,
        snr,
    }
}

/// Standard errors of the free parameters, in layout order.
fn std_errors(out: &LmOutcome, n: usize) -> Option<Vec<f64>> {
    let dof = n.checked_sub(out.jtj.nrows()).filter(|d| *d > 0)?;
    let s2 = 2.0 * out.cost / dof as f64;
    let inv = out.jtj.clone().try_inverse()?;
    Some((0..inv.nrows()).map(|k| (inv[(k, k)].max(0.0) * s2).sqrt()).collect())
}

fn is_degenerate(out: &LmOutcome, layout: Layout, n: usize) -> bool {
    let p = out.params;
    let (tf, ts) = (p[LTF].exp(), p[LTS].exp());
    if tf.min(ts) / tf.max(ts) > 0.8 {
        return true;
    }
    let Some(se) = std_errors(out, n) else {
        return true;
    };
    let idx = layout.indices();
    let se_of = |k: usize| idx.iter().position(|&i| i == k).map(|c| se[c]).unwrap_or(0.0);
    p[B].abs() <= se_of(B) || p[C].abs() <= se_of(C)
}

fn fit_mode(t: &[f64], y: &[f64], seeds: &[f64], mode: EnvelopeMode, cfg: &FitConfig) -> Option<(LmOutcome, Layout)> {
    let layout = Layout::new(mode, cfg.baseline, cfg.allow_phase);
    let mut best: Option<LmOutcome> = None;
    for &omega in seeds {
        let Some(p0) = initial_guess(t, y, omega, layout) else {
            continue;
        };
        let out = levenberg_marquardt(p0, layout, t, y, cfg);
        if best.as_ref().is_none_or(|b| out.cost < b.cost) {
            best = Some(out);
        }
    }
    best.map(|b| (b, layout))
}

/// Fits one pixel trace (`dt` in ns, strictly increasing, ≥ 8 samples).
pub fn fit_pixel(dt: &[f64], contrast: &[f64], cfg: &FitConfig) -> Result<RabiFitResult> {
    cfg.validate()?;
    if dt.len() != contrast.len() {
        return Err(Error::domain("dt and contrast lengths differ"));
    }
    if dt.len() < 8 {
        return Err(Error::domain("need at least 8 samples"));
    }
    if dt.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("dt must be strictly increasing"));
    }
    let bounds = cfg.bounds_for(dt);
    let span = dt[dt.len() - 1] - dt[0];
    let pg = Periodogram::compute(dt, contrast, 4);
    // below one cycle per scan an oscillation cannot be told from the decay
    let peaks = pg.peaks((1.0 / span).max(bounds.0 / (2.0 * PI)));
    // a slow trace leaks sidelobes above the cutoff; only accept a peak that
    // holds up against the whole spectrum
    let total_max = pg.power.iter().fold(0.0f64, |m, v| m.max(*v));
    let snr = peaks
        .first()
        .filter(|p| p.power >= SIDELOBE_REJECTION * total_max)
        .map_or(0.0, |p| pg.snr(p.power));
    if !(snr >= cfg.min_contrast_snr) {
        return Err(Error::NoOscillation { snr });
    }
    let seeds: Vec<f64> = peaks.iter().take(cfg.n_seeds).map(|p| 2.0 * PI * p.freq).collect();

    let n = dt.len();
    let (out, mode) = match cfg.envelope_mode {
        EnvelopeMode::SingleExp => (
            fit_mode(dt, contrast, &seeds, EnvelopeMode::SingleExp, cfg).map(|(o, _)| o),
            EnvelopeMode::SingleExp,
        ),
        EnvelopeMode::DoubleExp => match fit_mode(dt, contrast, &seeds, EnvelopeMode::DoubleExp, cfg) {
            Some((out, layout)) if !is_degenerate(&out, layout, n) => (Some(out), EnvelopeMode::DoubleExp),
            _ => (
                fit_mode(dt, contrast, &seeds, EnvelopeMode::SingleExp, cfg).map(|(o, _)| o),
                EnvelopeMode::SingleExp,
            ),
        },
    };
    let out = out.ok_or(Error::NoOscillation { snr })?;
    let result = to_result(&out, mode, n, bounds, snr, cfg.allow_phase);
    if !out.converged {
        return Err(Error::NotConverged {
            iterations: out.iterations,
            last: Box::new(result),
        });
    }
    Ok(result)
}

/// Per-pixel outcome of a cube fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PixelFit {
    Fitted(RabiFitResult),
    BelowThreshold {
        snr: f64,
    },
    /// Iteration limit hit; the last iterate is kept.
    Unconverged(RabiFitResult),
    Invalid {
        reason: String,
    },
}

impl PixelFit {
    pub fn result(&self) -> Option<&RabiFitResult> {
        match self {
            PixelFit::Fitted(r) | PixelFit::Unconverged(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, PixelFit::Fitted(r) if r.converged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeFit {
    pub field: PolarizedFieldMap,
    pub pixels: Vec<PixelFit>,
}

/// Summary written next to fitted field maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n_pixels: usize,
    pub converged_fraction: f64,
    pub below_threshold_fraction: f64,
    pub median_residual: f64,
    pub median_field_t: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl CubeFit {
    pub fn diagnostics(&self) -> FitDiagnostics {
        let n = self.pixels.len();
        let converged = self.pixels.iter().filter(|p| p.is_converged()).count();
        let below = self
            .pixels
            .iter()
            .filter(|p| matches!(p, PixelFit::BelowThreshold { .. }))
            .count();
        let residuals = self
            .pixels
            .iter()
            .filter_map(|p| p.result())
            .map(|r| r.residual_rms)
            .collect();
        let fields = self
            .pixels
            .iter()
            .zip(&self.field.values)
            .filter(|(p, _)| p.is_converged())
            .map(|(_, b)| *b)
            .collect();
        FitDiagnostics {
            n_pixels: n,
            converged_fraction: converged as f64 / n.max(1) as f64,
            below_threshold_fraction: below as f64 / n.max(1) as f64,
            median_residual: median(residuals),
            median_field_t: median(fields),
        }
    }

    /// Pixels whose oscillation was detected and fitted to convergence.
    pub fn detected_mask(&self) -> Vec<bool> {
        self.pixels.iter().map(PixelFit::is_converged).collect()
    }
}

/// Fits every pixel of a cube independently; failures are recorded per pixel.
pub fn fit_cube(cube: &ImageCube, cfg: &FitConfig) -> Result<CubeFit> {
    cube.validate()?;
    cfg.validate()?;
    let grid = cube.grid;
    let pixels: Vec<PixelFit> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = grid.coords(idx);
            match fit_pixel(&cube.dt_list, &cube.trace(i, j), cfg) {
                Ok(r) => PixelFit::Fitted(r),
                Err(Error::NoOscillation { snr }) => PixelFit::BelowThreshold { snr },
                Err(Error::NotConverged { last, .. }) => PixelFit::Unconverged(*last),
                Err(e) => PixelFit::Invalid { reason: e.to_string() },
            }
        })
        .collect();
    let values = pixels
        .iter()
        .map(|p| p.result().map_or(0.0, |r| r.field(cfg.gamma_nv)))
        .collect();
    Ok(CubeFit {
        field: PolarizedFieldMap {
            grid,
            component: cube.component,
            values,
        },
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{contrast_at, linear_scan, DecayParams};
    use approx::assert_relative_eq;

    fn synth(f_hz: f64, dt: &[f64]) -> Vec<f64> {
        let b = f_hz / GAMMA_NV;
        dt.iter()
            .map(|t| contrast_at(b, *t, &DecayParams::default(), 0.05))
            .collect()
    }

    #[test]
    fn recovers_five_mhz() {
        let dt = linear_scan(0.0, 2000.0 / 99.0, 100);
        let y = synth(5e6, &dt);
        let r = fit_pixel(&dt, &y, &FitConfig::default()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.omega, 2.0 * PI * 5e6 * 1e-9, max_relative = 1e-3);
        assert!(r.tau_fast_ns <= r.tau_slow_ns);
    }

    #[test]
    fn constant_trace_has_no_oscillation() {
        let dt = linear_scan(0.0, 20.0, 50);
        let y = vec![0.01; 50];
        assert!(matches!(
            fit_pixel(&dt, &y, &FitConfig::default()),
            Err(Error::NoOscillation { .. })
        ));
    }

    #[test]
    fn calibration_identity() {
        let omega = 2.0 * PI * 2.8e6 * 1e-9;
        assert_relative_eq!(omega_to_field(omega, GAMMA_NV), 100e-6, max_relative = 1e-12);
    }

    #[test]
    fn verbatim_model_fits_its_own_form() {
        let dt = linear_scan(0.0, 15.0, 120);
        let truth = RabiFitResult {
            offset: 0.02,
            amp_fast: 0.01,
            amp_slow: 0.008,
            tau_fast_ns: 250.0,
            tau_slow_ns: 2500.0,
            omega: 0.05,
            phase: 0.0,
            baseline_fast: 0.0,
            baseline_slow: 0.0,
            residual_rms: 0.0,
            converged: true,
            envelope_mode: EnvelopeMode::DoubleExp,
            iterations: 0,
            snr: 0.0,
        };
        let y: Vec<f64> = dt.iter().map(|t| truth.eval(*t)).collect();
        let r = fit_pixel(&dt, &y, &FitConfig::verbatim()).unwrap();
        assert_relative_eq!(r.omega, 0.05, max_relative = 1e-6);
        assert_eq!(r.phase, 0.0);
        assert_eq!(r.baseline_fast, 0.0);
    }

    #[test]
    fn rejects_short_or_unsorted_traces() {
        let cfg = FitConfig::default();
        assert!(matches!(
            fit_pixel(&[0.0, 1.0], &[0.0, 1.0], &cfg),
            Err(Error::Domain(_))
        ));
        let dt = vec![0.0, 1.0, 2.0, 3.0, 5.0, 4.0, 6.0, 7.0];
        assert!(matches!(fit_pixel(&dt, &[0.0; 8], &cfg), Err(Error::Domain(_))));
    }
}
