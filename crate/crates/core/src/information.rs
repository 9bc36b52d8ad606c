//! Entropies of the instantaneously normalised state, two-qubit reductions,
//! Bloch coordinates, and the eigenvector-expansion route to the occupation
//! eigenvalues of `ρ(t)`.
//!
//! The four modes factor as two qubits, `|1>=|00>, |2>=|01>, |3>=|10>, |4>=|11>`.
//! The first factor selects the gain/loss sector (path), the second the
//! internal (polarisation) state. The gain-labelled reduction keeps the
//! sector qubit, whose north pole is the amplifying sector; the loss-labelled
//! reduction keeps the internal qubit.

use crate::dynamics::{EvolvedDensity, TimeSeries};
use crate::linalg::{eig, eigh, CMatrix, C64, ZERO};
use crate::model::{PhaseLabel, PtHamiltonian};
use crate::{Error, Result};

/// Eigenvalues below this contribute nothing to the entropy.
const ZERO_EIGENVALUE: f64 = 1e-12;
/// Round-off allowance for negative eigenvalues and trace deviations.
const ROUNDOFF: f64 = 1e-10;
/// Eigenvector conditioning limit for the expansion route.
const EXPANSION_CONDITION_LIMIT: f64 = 1e8;

/// Von Neumann entropy in bits, `-Tr ρ̃ log₂ ρ̃`, of a unit-trace density.
pub fn entropy(rho: &CMatrix) -> Result<f64> {
    let d = rho.dim()?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > ROUNDOFF || tr.im.abs() > ROUNDOFF {
        return Err(Error::domain(format!(
            "entropy needs a unit-trace density, trace is {tr}"
        )));
    }
    let (vals, _) = eigh(rho)?;
    entropy_of_weights(&vals, d)
}

fn entropy_of_weights(weights: &[f64], d: usize) -> Result<f64> {
    let mut s = 0.0;
    for &p in weights {
        if p < -ROUNDOFF {
            return Err(Error::domain(format!(
                "density has negative eigenvalue {p:e}"
            )));
        }
        if p > ZERO_EIGENVALUE {
            s -= p * p.log2();
        }
    }
    Ok(s.clamp(0.0, (d as f64).log2()))
}

/// Which qubit of the 2x2 factorisation survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    /// Path / sector qubit: `|0>` = modes 1-2, `|1>` = modes 3-4.
    Sector,
    /// Internal qubit: `|0>` = modes 1, 3, `|1>` = modes 2, 4.
    Internal,
}

/// Reduces a 4x4 density to one qubit. Linear, so the trace is preserved.
pub fn partial_trace(rho: &CMatrix, keep: Factor) -> Result<CMatrix> {
    let d = rho.dim()?;
    if d != 4 {
        return Err(Error::domain(format!("partial trace needs d = 4, got {d}")));
    }
    let r = |i: usize, j: usize| rho[(i, j)];
    let entries = match keep {
        Factor::Sector => [
            r(0, 0) + r(1, 1),
            r(0, 2) + r(1, 3),
            r(2, 0) + r(3, 1),
            r(2, 2) + r(3, 3),
        ],
        Factor::Internal => [
            r(0, 0) + r(2, 2),
            r(0, 1) + r(2, 3),
            r(1, 0) + r(3, 2),
            r(1, 1) + r(3, 3),
        ],
    };
    Ok(CMatrix::new(2, 2, entries.to_vec())?)
}

/// `(S_gain, S_loss)`: entropies of the sector and internal reductions.
pub fn subsystem_entropies(rho: &CMatrix) -> Result<(f64, f64)> {
    let gain = entropy(&partial_trace(rho, Factor::Sector)?)?;
    let loss = entropy(&partial_trace(rho, Factor::Internal)?)?;
    Ok((gain, loss))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochPoint {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// `(2 Re σ01, 2 Im σ10, σ00 - σ11)` of a Hermitian unit-trace qubit density.
pub fn bloch_vector(sigma: &CMatrix) -> Result<BlochPoint> {
    if sigma.rows() != 2 || sigma.cols() != 2 {
        return Err(Error::domain("Bloch vectors need a 2x2 density"));
    }
    if !sigma.is_hermitian(ROUNDOFF) {
        return Err(Error::domain("qubit density is not Hermitian"));
    }
    let tr = sigma.trace();
    if (tr.re - 1.0).abs() > ROUNDOFF {
        return Err(Error::domain(format!("qubit density has trace {tr}")));
    }
    Ok(BlochPoint {
        x: 2.0 * sigma[(0, 1)].re,
        y: 2.0 * sigma[(1, 0)].im,
        z: (sigma[(0, 0)] - sigma[(1, 1)]).re,
    })
}

/// Occupation eigenvalues of `ρ(t)` assembled from the right eigenvectors of
/// `H` rather than from the propagator.
///
/// With `ρ(0) = Σ_i α_i |υ_i><υ_i|`, `|υ_i> = Σ_k β_ik |ζ_k>` and
/// `|ζ_k> = Σ_l κ_kl |φ_l>` over the orthonormal eigenbasis of `ρ(t)`:
///
/// ```text
/// p_l = Σ_{k,j,i} α_i β_ik β*_ij κ_kl κ*_jl e^{-i(λ_k - λ_j*) t}
/// ```
///
/// For real spectra `λ_j* = λ_j`; in the broken phase the conjugate is needed
/// for `ρ(t)` to stay Hermitian.
#[derive(Debug, Clone)]
pub struct SpectralExpansion {
    /// Eigenvalues of `H`, matching the columns of `betas`/rows of `kappas`.
    pub eigenvalues: Vec<C64>,
    pub alphas: Vec<f64>,
    /// `betas[(i, k)] = β_ik`.
    pub betas: CMatrix,
    /// `kappas[(k, l)] = κ_kl`.
    pub kappas: CMatrix,
    /// `p_l(t)`, scaled by `exp(-log_scale)`.
    pub occupations: Vec<f64>,
    /// Natural log of the factor removed from `occupations` to avoid overflow.
    pub log_scale: f64,
    right_vectors: CMatrix,
}

impl SpectralExpansion {
    /// `p̃_l = p_l / Σ_k p_k`.
    pub fn fractional_occupations(&self) -> Vec<f64> {
        let total: f64 = self.occupations.iter().sum();
        self.occupations.iter().map(|p| p / total).collect()
    }

    /// `-Σ p̃_l log₂ p̃_l` in bits.
    pub fn entropy(&self) -> Result<f64> {
        entropy_of_weights(&self.fractional_occupations(), self.occupations.len())
    }

    /// `Σ α_i β_ik β*_ij |ζ_k><ζ_j|`, which must reproduce the normalised `ρ(0)`.
    pub fn reconstructed_initial(&self) -> CMatrix {
        let coeff = self.initial_coefficients();
        let v = &self.right_vectors;
        &(v * &coeff) * &v.adjoint()
    }

    fn initial_coefficients(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        CMatrix::from_fn(n, n, |k, j| {
            (0..n)
                .map(|i| self.betas[(i, k)] * self.betas[(i, j)].conj() * self.alphas[i])
                .sum()
        })
    }
}

pub fn expansion_occupations(
    rho0: &EvolvedDensity,
    h: &PtHamiltonian,
    t: f64,
) -> Result<SpectralExpansion> {
    let n = h.dim();
    if rho0.dim() != n {
        return Err(Error::domain(format!(
            "density has dimension {}, Hamiltonian {n}",
            rho0.dim()
        )));
    }
    if !t.is_finite() {
        return Err(Error::domain(format!("time must be finite, got {t}")));
    }
    if h.phase() == PhaseLabel::ExceptionalPoint {
        return Err(Error::numerical(
            "eigenvectors coalesce at the exceptional point; use the direct density pathway",
        ));
    }
    let (raw_alphas, upsilon) = eigh(&rho0.normalized())?;
    let clipped: Vec<f64> = raw_alphas.iter().map(|a| a.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let alphas: Vec<f64> = clipped.iter().map(|a| a / total).collect();

    let decomposition = eig(h.matrix())?;
    if decomposition.condition_number >= EXPANSION_CONDITION_LIMIT {
        return Err(Error::numerical(format!(
            "eigenvector matrix condition number {:.3e} is too large near the exceptional point; \
             use the direct density pathway",
            decomposition.condition_number
        )));
    }
    let eigenvalues = decomposition.values.clone();
    let zeta = decomposition.vector_matrix();
    // columns of upsilon are |υ_i>; solve ζ β_iᵀ = υ_i
    let betas = zeta.solve(&upsilon)?.transpose();

    // e^{-iλ_k t}, with the largest growth factored out
    let log_scale = eigenvalues
        .iter()
        .map(|l| l.im * t)
        .fold(f64::NEG_INFINITY, f64::max);
    let phases: Vec<C64> = eigenvalues
        .iter()
        .map(|l| (C64::new(0.0, -1.0) * l * t - log_scale).exp())
        .collect();

    let mut expansion = SpectralExpansion {
        eigenvalues,
        alphas,
        betas,
        kappas: CMatrix::zeros(n, n),
        occupations: Vec::new(),
        log_scale: 2.0 * log_scale,
        right_vectors: zeta.clone(),
    };
    let c0 = expansion.initial_coefficients();
    let ct = CMatrix::from_fn(n, n, |k, j| c0[(k, j)] * phases[k] * phases[j].conj());
    let rho_t = &(&zeta * &ct) * &zeta.adjoint();
    let (_, phi) = eigh(&rho_t.hermitian_part())?;
    // κ_kl = <φ_l|ζ_k>
    let kappas = (&phi.adjoint() * &zeta).transpose();

    let mut occupations = Vec::with_capacity(n);
    let mut residue: f64 = 0.0;
    for l in 0..n {
        let mut p = ZERO;
        for k in 0..n {
            for j in 0..n {
                p += ct[(k, j)] * kappas[(k, l)] * kappas[(j, l)].conj();
            }
        }
        residue = residue.max(p.im.abs());
        occupations.push(p.re);
    }
    let scale: f64 = occupations.iter().map(|p| p.abs()).sum();
    if residue > 1e-9 * scale {
        return Err(Error::numerical(format!(
            "occupation eigenvalues carry imaginary residue {residue:.3e}"
        )));
    }
    expansion.kappas = kappas;
    expansion.occupations = occupations;
    Ok(expansion)
}

/// Functional form of the late-time approach to a steady value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproachForm {
    /// `a + b t^-n`
    Polynomial,
    /// `a + b e^{-r t}`
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproachFit {
    pub form: ApproachForm,
    /// Fitted steady-state value `a`.
    pub asymptote: f64,
    pub amplitude: f64,
    /// Exponent `n` or rate `r`.
    pub parameter: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub window: (f64, f64),
    pub polynomial: ApproachFit,
    pub exponential: ApproachFit,
    /// Form with the higher coefficient of determination.
    pub best: ApproachForm,
}

impl SteadyStateReport {
    pub fn best_fit(&self) -> &ApproachFit {
        match self.best {
            ApproachForm::Polynomial => &self.polynomial,
            ApproachForm::Exponential => &self.exponential,
        }
    }
}

/// Late-time window, in units of 1/J.
pub const STEADY_STATE_WINDOW: (f64, f64) = (2.0, 4.5);
const MIN_WINDOW_POINTS: usize = 8;

/// Fits both approach forms to `key` over `window` and reports the better one.
pub fn steady_state_fit(
    series: &TimeSeries,
    key: &str,
    window: (f64, f64),
) -> Result<SteadyStateReport> {
    let (ts, ys) = series
        .window(key, window.0, window.1)
        .ok_or_else(|| Error::domain(format!("series has no column {key}")))?;
    let polynomial = fit_approach(&ts, &ys, ApproachForm::Polynomial)?;
    let exponential = fit_approach(&ts, &ys, ApproachForm::Exponential)?;
    let best = if exponential.r_squared > polynomial.r_squared {
        ApproachForm::Exponential
    } else {
        ApproachForm::Polynomial
    };
    Ok(SteadyStateReport {
        window,
        polynomial,
        exponential,
        best,
    })
}

/// Least-squares fit of one approach form. The shape parameter is found by a
/// log-spaced scan refined with golden-section search; `(a, b)` are linear.
pub fn fit_approach(ts: &[f64], ys: &[f64], form: ApproachForm) -> Result<ApproachFit> {
    if ts.len() != ys.len() {
        return Err(Error::domain("times and values differ in length"));
    }
    if ts.len() < MIN_WINDOW_POINTS {
        return Err(Error::domain(format!(
            "need at least {MIN_WINDOW_POINTS} points in the window, got {}",
            ts.len()
        )));
    }
    if form == ApproachForm::Polynomial && ts.iter().any(|&t| t <= 0.0) {
        return Err(Error::domain("polynomial approach needs positive times"));
    }
    let basis = |t: f64, p: f64| match form {
        ApproachForm::Polynomial => t.powf(-p),
        ApproachForm::Exponential => (-p * t).exp(),
    };
    let solve = |p: f64| -> (f64, f64, f64) {
        let g: Vec<f64> = ts.iter().map(|&t| basis(t, p)).collect();
        let (a, b) = linear_fit(&g, ys);
        let sse = g
            .iter()
            .zip(ys)
            .map(|(gi, y)| (y - a - b * gi).powi(2))
            .sum();
        (a, b, sse)
    };
    let (lo, hi) = (1e-2f64.ln(), 30f64.ln());
    let scan = 200;
    let mut best = (0, f64::INFINITY);
    for i in 0..=scan {
        let p = (lo + (hi - lo) * i as f64 / scan as f64).exp();
        let sse = solve(p).2;
        if sse < best.1 {
            best = (i, sse);
        }
    }
    let step = (hi - lo) / scan as f64;
    let (mut a, mut b) = (
        lo + step * (best.0 as f64 - 1.0),
        lo + step * (best.0 as f64 + 1.0),
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if solve(c.exp()).2 < solve(d.exp()).2 {
            b = d;
        } else {
            a = c;
        }
    }
    let parameter = ((a + b) / 2.0).exp();
    let (asymptote, amplitude, sse) = solve(parameter);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sst: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - sse / sst).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ApproachFit {
        form,
        asymptote,
        amplitude,
        parameter,
        r_squared,
    })
}

/// Ordinary least squares `y ≈ a + b x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}
