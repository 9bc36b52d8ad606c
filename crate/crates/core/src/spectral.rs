//! Certification of the exceptional-point order: quarter-power splitting of
//! the perturbed spectrum, algebraic growth of the scaled occupations, the
//! exponential rate in the broken phase, and the nilpotency index.

use rayon::prelude::*;

use crate::dynamics::TimeSeries;
use crate::linalg::{eig, CMatrix, C64};
use crate::model::{PhaseLabel, PtHamiltonian};
use crate::{Error, Result};

/// Fits with a coefficient of determination below this are flagged.
pub const ACCEPTANCE_R_SQUARED: f64 = 0.99;
/// Late-time window for growth fits, in units of 1/J.
pub const GROWTH_WINDOW: (f64, f64) = (2.0, 4.5);
const NILPOTENCY_TOLERANCE: f64 = 1e-10;
/// Parts of the spectrum smaller than this fraction of the largest modulus
/// are treated as identically zero.
const DEGENERATE_PART: f64 = 1e-8;

/// Least-squares line through `(ln x, ln y)`: `y ≈ e^intercept · x^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Natural log of the prefactor.
    pub intercept: f64,
    pub r_squared: f64,
    /// Smallest and largest abscissa actually used.
    pub window: (f64, f64),
    pub n_points: usize,
    /// `r_squared >= ACCEPTANCE_R_SQUARED`.
    pub accepted: bool,
}

impl PowerLawFit {
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Slope of `ln y` against `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub accepted: bool,
}

struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    // flat data leaves nothing for the model to explain
    let flat = syy <= 1e-24 * n * (1.0 + my * my);
    let r_squared = if flat {
        0.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Line {
        slope,
        intercept,
        r_squared,
    }
}

fn check_samples(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::domain("abscissa and ordinate differ in length"));
    }
    if x.len() < 3 {
        return Err(Error::domain(format!(
            "need at least 3 points to fit, got {}",
            x.len()
        )));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite sample {v}")));
    }
    if let Some(v) = y.iter().find(|v| **v <= 0.0) {
        return Err(Error::domain(format!(
            "values must be positive for a logarithmic fit, found {v:e}"
        )));
    }
    Ok(())
}

fn span(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        })
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    check_samples(x, y)?;
    if let Some(v) = x.iter().find(|v| **v <= 0.0) {
        return Err(Error::domain(format!(
            "abscissa must be positive, found {v}"
        )));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let line = least_squares(&lx, &ly);
    Ok(PowerLawFit {
        exponent: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        window: span(x),
        n_points: x.len(),
        accepted: line.r_squared >= ACCEPTANCE_R_SQUARED,
    })
}

pub fn fit_exponential_rate(t: &[f64], y: &[f64]) -> Result<RateFit> {
    check_samples(t, y)?;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let line = least_squares(t, &ly);
    Ok(RateFit {
        rate: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        window: span(t),
        n_points: t.len(),
        accepted: line.r_squared >= ACCEPTANCE_R_SQUARED,
    })
}

/// `GROWTH_WINDOW` scaled to the coupling of `h`.
pub fn growth_window(h: &PtHamiltonian) -> (f64, f64) {
    (
        GROWTH_WINDOW.0 / h.coupling(),
        GROWTH_WINDOW.1 / h.coupling(),
    )
}

fn windowed(series: &TimeSeries, key: &str, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(window.0 < window.1) {
        return Err(Error::domain(format!(
            "empty window [{}, {}]",
            window.0, window.1
        )));
    }
    series
        .window(key, window.0, window.1)
        .ok_or_else(|| Error::domain(format!("series has no column {key}")))
}

/// Power-law exponent of `key` against `t` inside `window`.
pub fn growth_exponent_fit(
    series: &TimeSeries,
    key: &str,
    window: (f64, f64),
) -> Result<PowerLawFit> {
    let (t, y) = windowed(series, key, window)?;
    fit_power_law(&t, &y)
}

/// Exponential rate of `key` inside `window`.
pub fn growth_rate_fit(series: &TimeSeries, key: &str, window: (f64, f64)) -> Result<RateFit> {
    let (t, y) = windowed(series, key, window)?;
    fit_exponential_rate(&t, &y)
}

/// `H + iJδ |1><1|` for `H` at its exceptional point.
pub fn perturbed_hamiltonian(h: &PtHamiltonian, delta: f64) -> Result<CMatrix> {
    if h.phase() != PhaseLabel::ExceptionalPoint {
        return Err(Error::domain(format!(
            "perturbation is defined at the exceptional point, got γ/J = {}",
            h.gain_loss() / h.coupling()
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::domain(format!("δ must lie in [0, 1], got {delta}")));
    }
    let mut m = h.matrix().clone();
    m[(0, 0)] += C64::new(0.0, h.coupling() * delta);
    Ok(m)
}

/// Twelve geometric points per decade over `[1e-4, 1e-1]`, ends included.
pub fn default_delta_grid() -> Vec<f64> {
    geometric_grid(1e-4, 1e-1, 12)
}

/// `per_decade` geometric points per decade from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

/// Power-law fits of the spectral splitting against `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PuiseuxReport {
    pub deltas: Vec<f64>,
    /// `max_k |Re λ_k(δ)|` per grid point.
    pub max_real: Vec<f64>,
    /// `max_k |Im λ_k(δ)|` per grid point.
    pub max_imag: Vec<f64>,
    /// `max_k |λ_k(δ)|` per grid point.
    pub max_modulus: Vec<f64>,
    /// `(Π_k |λ_k(δ)|)^{1/d}` per grid point.
    pub mean_modulus: Vec<f64>,
    /// `None` when the real parts vanish identically.
    pub real: Option<PowerLawFit>,
    pub imag: Option<PowerLawFit>,
    pub modulus: PowerLawFit,
    /// Fit of the geometric-mean modulus. `Π_k |λ_k| = |det H_δ|` is linear
    /// in δ, so this exponent is `1/d` up to round-off.
    pub mean: PowerLawFit,
}

pub fn puiseux_fit(h: &PtHamiltonian, deltas: &[f64]) -> Result<PuiseuxReport> {
    if deltas.len() < 10 {
        return Err(Error::domain(format!(
            "δ grid needs at least 10 points, got {}",
            deltas.len()
        )));
    }
    let (lo, hi) = span(deltas);
    if !(lo > 0.0) || hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "δ grid must be positive and span two decades, got [{lo}, {hi}]"
        )));
    }
    let spectra: Vec<Vec<C64>> = deltas
        .par_iter()
        .map(|&delta| Ok(eig(&perturbed_hamiltonian(h, delta)?)?.values))
        .collect::<Result<_>>()?;
    let max_of = |f: fn(&C64) -> f64| -> Vec<f64> {
        spectra
            .iter()
            .map(|vals| vals.iter().map(f).fold(0.0, f64::max))
            .collect()
    };
    let max_real = max_of(|z| z.re.abs());
    let max_imag = max_of(|z| z.im.abs());
    let max_modulus = max_of(|z| z.norm());
    let mean_modulus: Vec<f64> = spectra
        .iter()
        .map(|vals| (vals.iter().map(|z| z.norm().ln()).sum::<f64>() / vals.len() as f64).exp())
        .collect();
    let modulus = fit_power_law(deltas, &max_modulus)?;
    let mean = fit_power_law(deltas, &mean_modulus)?;
    let part = |values: &[f64]| -> Result<Option<PowerLawFit>> {
        let degenerate = values
            .iter()
            .zip(&max_modulus)
            .all(|(v, m)| *v <= DEGENERATE_PART * m);
        if degenerate {
            Ok(None)
        } else {
            fit_power_law(deltas, values).map(Some)
        }
    };
    Ok(PuiseuxReport {
        real: part(&max_real)?,
        imag: part(&max_imag)?,
        deltas: deltas.to_vec(),
        max_real,
        max_imag,
        max_modulus,
        mean_modulus,
        modulus,
        mean,
    })
}

/// Smallest `m <= d` with `‖H^m‖₁ <= 1e-10 ‖H‖₁^m`.
pub fn nilpotency_index(h: &PtHamiltonian) -> Option<usize> {
    let m = h.matrix();
    let norm = m.norm_one();
    let mut power = m.clone();
    for k in 1..=h.dim() {
        if power.norm_one() <= NILPOTENCY_TOLERANCE * norm.powi(k as i32) {
            return Some(k);
        }
        power = &power * m;
    }
    None
}
