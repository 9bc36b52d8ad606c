//! Non-unitary propagation under `U(t) = exp(-iHt)`.
//!
//! Magnitudes grow like `t^(2(d-1))` at the exceptional point and
//! exponentially beyond it, so states and density matrices carry a separate
//! natural-log scale factor. Every sample point recomputes its propagator from
//! scratch; nothing is stepped, so errors do not accumulate along a grid.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::information::{bloch_vector, entropy, partial_trace, subsystem_entropies, Factor};
use crate::linalg::{mat_exp, vec_norm, CMatrix, C64, I, ONE, ZERO};
use crate::model::{PhaseLabel, PtHamiltonian};
use crate::{Error, Result};

/// Largest `|t| * ||H||_1` for which `U(t)` is formed directly.
pub const PROPAGATOR_GUARD: f64 = 500.0;
/// Stored norms above this are folded into the log scale.
const RENORMALIZE_ABOVE: f64 = 1e100;
/// Relative anti-Hermitian drift tolerated before symmetrisation.
const HERMITICITY_DRIFT: f64 = 1e-8;
pub const DEFAULT_STEPS: usize = 201;
/// Time window used at and beyond the exceptional point, in units of 1/J.
pub const BROKEN_WINDOW: f64 = 4.5;

/// `U(t) = exp(-iHt)`.
pub fn propagator(h: &PtHamiltonian, t: f64) -> Result<CMatrix> {
    check_time(t)?;
    let load = t.abs() * h.matrix().norm_one();
    if load > PROPAGATOR_GUARD {
        return Err(Error::numerical(format!(
            "|t|·||H|| = {load:.3e} exceeds {PROPAGATOR_GUARD}; use the log-scaled density pathway"
        )));
    }
    Ok(mat_exp(&h.matrix().scale(-I), t)?)
}

/// `U_L(t) = exp(-i H_L t)` for the passive, loss-only Hamiltonian. Related to
/// the balanced propagator by `U(t) = U_L(t) exp(γ(d-1)t/2)`.
pub fn lossy_propagator(h: &PtHamiltonian, t: f64) -> Result<CMatrix> {
    check_time(t)?;
    if t < 0.0 {
        return Err(Error::domain(format!(
            "the lossy propagator runs forward in time only, got t = {t}"
        )));
    }
    Ok(mat_exp(&h.passive().scale(-I), t)?)
}

/// `(M, a)` with `U(t) = e^a M`. Within the guard this is `(U(t), 0)`. Past it
/// `U(t/2^k)` is squared `k` times, each square divided by its 1-norm and the
/// norm moved into `a`, so neither growth nor decay leaves the float range.
fn scaled_propagator(h: &PtHamiltonian, t: f64) -> Result<(CMatrix, f64)> {
    check_time(t)?;
    let load = t.abs() * h.matrix().norm_one();
    if load <= PROPAGATOR_GUARD {
        return Ok((propagator(h, t)?, 0.0));
    }
    let k = (load / PROPAGATOR_GUARD).log2().ceil() as i32;
    let mut m = propagator(h, t / 2f64.powi(k))?;
    let mut log_amp = 0.0;
    for _ in 0..k {
        m = &m * &m;
        let n = m.norm_one();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::numerical(format!(
                "propagator squaring lost range (norm {n})"
            )));
        }
        m = m.scale_real(1.0 / n);
        log_amp = 2.0 * log_amp + n.ln();
    }
    Ok((m, log_amp))
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("time must be finite, got {t}")))
    }
}

/// Unnormalised pure state. Occupations are `e^log_scale |a_k|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    norm_squared: f64,
    log_scale: f64,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::with_log_scale(amplitudes, 0.0)
    }

    fn with_log_scale(amplitudes: Vec<C64>, log_scale: f64) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::domain("a state needs at least two amplitudes"));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::domain("state amplitudes must be finite"));
        }
        let norm_squared: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm_squared == 0.0 {
            return Err(Error::domain("state vector is zero"));
        }
        let mut s = Self {
            amplitudes,
            norm_squared,
            log_scale,
        };
        if s.norm_squared > RENORMALIZE_ABOVE || s.norm_squared < 1.0 / RENORMALIZE_ABOVE {
            let f = s.norm_squared.sqrt();
            s.amplitudes.iter_mut().for_each(|z| *z /= f);
            s.log_scale += s.norm_squared.ln();
            s.norm_squared = s.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        }
        Ok(s)
    }

    /// Unit-norm version of `amplitudes`.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let s = Self::new(amplitudes)?;
        let n = vec_norm(&s.amplitudes);
        Self::new(s.amplitudes.iter().map(|z| z / n).collect())
    }

    /// Computational basis state `|k>` (0-based `k`).
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::domain(format!("mode {k} out of range for d = {d}")));
        }
        Self::new((0..d).map(|i| if i == k { ONE } else { ZERO }).collect())
    }

    /// Equal superposition of all modes, unit norm.
    pub fn symmetric(d: usize) -> Result<Self> {
        Self::normalized(vec![ONE; d])
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Stored amplitudes; multiply by `exp(log_scale / 2)` for the physical ones.
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// `||ψ||²` including the log scale.
    pub fn norm_squared(&self) -> f64 {
        self.norm_squared * self.log_scale.exp()
    }

    pub fn log_norm_squared(&self) -> f64 {
        self.norm_squared.ln() + self.log_scale
    }

    pub fn unit_amplitudes(&self) -> Vec<C64> {
        let n = self.norm_squared.sqrt();
        self.amplitudes.iter().map(|z| z / n).collect()
    }

    /// Scaled mode occupations `|<k|ψ>|²`; their sum may exceed 1.
    pub fn occupations(&self) -> Vec<f64> {
        let f = self.log_scale.exp();
        self.amplitudes.iter().map(|z| z.norm_sqr() * f).collect()
    }
}

/// `|ψ(t)> = U(t)|ψ(0)>`, not renormalised.
pub fn evolve_state(psi0: &PureState, h: &PtHamiltonian, t: f64) -> Result<PureState> {
    if psi0.dim() != h.dim() {
        return Err(Error::domain(format!(
            "state has {} modes, Hamiltonian {}",
            psi0.dim(),
            h.dim()
        )));
    }
    let (u, log_amp) = scaled_propagator(h, t)?;
    let amps = u.mul_vec(&psi0.amplitudes);
    PureState::with_log_scale(amps, psi0.log_scale + 2.0 * log_amp)
        .map_err(|e| Error::numerical(format!("state evolution failed: {e}")))
}

/// Unnormalised density matrix `e^log_scale · matrix`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedDensity {
    matrix: CMatrix,
    log_scale: f64,
}

impl EvolvedDensity {
    /// Validates a density matrix: Hermitian within 1e-10, positive trace,
    /// normalised eigenvalues no lower than -1e-10.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = matrix.dim()?;
        if d < 2 {
            return Err(Error::domain("density matrix must be at least 2x2"));
        }
        matrix.check_finite()?;
        let scale = matrix.max_abs();
        if !matrix.is_hermitian(1e-10 * scale.max(1.0)) {
            return Err(Error::domain("density matrix is not Hermitian"));
        }
        let tr = matrix.trace().re;
        if tr <= 0.0 {
            return Err(Error::domain("density matrix must have positive trace"));
        }
        let matrix = matrix.hermitian_part();
        let (vals, _) = crate::linalg::eigh(&matrix.scale_real(1.0 / tr))?;
        if vals.iter().any(|&v| v < -1e-10) {
            return Err(Error::domain("density matrix is not positive semidefinite"));
        }
        Ok(Self {
            matrix,
            log_scale: 0.0,
        })
    }

    /// `|ψ><ψ|` carrying the state's norm.
    pub fn from_pure(psi: &PureState) -> Self {
        let unit = psi.unit_amplitudes();
        Self {
            matrix: CMatrix::outer(&unit, &unit),
            log_scale: psi.log_norm_squared(),
        }
    }

    /// Diagonal mixture with weights normalised to unit trace.
    pub fn mixed(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain(
                "mixture weights must be finite and non-negative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("mixture weights must not all vanish"));
        }
        Self::new(CMatrix::from_real_diag(
            &weights.iter().map(|w| w / total).collect::<Vec<_>>(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn log_trace(&self) -> f64 {
        self.matrix.trace().re.ln() + self.log_scale
    }

    /// `Tr ρ` including the log scale (may overflow to infinity).
    pub fn trace(&self) -> f64 {
        self.log_trace().exp()
    }

    /// `ρ̃ = ρ / Tr ρ`.
    pub fn normalized(&self) -> CMatrix {
        self.matrix.scale_real(1.0 / self.matrix.trace().re)
    }

    /// Diagonal of the unnormalised density, i.e. the scaled occupations.
    pub fn occupations(&self) -> Vec<f64> {
        let f = self.log_scale.exp();
        self.matrix.diagonal().iter().map(|z| z.re * f).collect()
    }
}

/// `ρ(t) = U(t) ρ(0) U†(t)`, symmetrised, with the trace magnitude moved into
/// the log scale whenever the stored trace leaves `[1e-2, 1e2]`.
pub fn evolve_density(rho0: &EvolvedDensity, h: &PtHamiltonian, t: f64) -> Result<EvolvedDensity> {
    if rho0.dim() != h.dim() {
        return Err(Error::domain(format!(
            "density has dimension {}, Hamiltonian {}",
            rho0.dim(),
            h.dim()
        )));
    }
    let (u, log_amp) = scaled_propagator(h, t)?;
    let raw = &(&u * &rho0.matrix) * &u.adjoint();
    raw.check_finite()
        .map_err(|e| Error::numerical(format!("density overflow: {e}")))?;
    let scale = raw.max_abs();
    let drift = raw.max_abs_diff(&raw.adjoint()) / 2.0;
    if drift > HERMITICITY_DRIFT * scale {
        return Err(Error::numerical(format!(
            "density lost Hermiticity (drift {drift:.3e})"
        )));
    }
    let mut matrix = raw.hermitian_part();
    let mut log_scale = rho0.log_scale + 2.0 * log_amp;
    let tr = matrix.trace().re;
    if !(tr > 0.0 && tr.is_finite()) {
        return Err(Error::numerical(format!(
            "density trace {tr:e} cannot be normalised"
        )));
    }
    if !(1e-2..=1e2).contains(&tr) {
        matrix = matrix.scale_real(1.0 / tr);
        log_scale += tr.ln();
    }
    Ok(EvolvedDensity { matrix, log_scale })
}

/// Starting point of a trajectory.
#[derive(Debug, Clone)]
pub enum InitialState {
    Pure(PureState),
    Mixed(EvolvedDensity),
}

impl InitialState {
    pub fn dim(&self) -> usize {
        match self {
            InitialState::Pure(p) => p.dim(),
            InitialState::Mixed(r) => r.dim(),
        }
    }

    pub fn density(&self) -> EvolvedDensity {
        match self {
            InitialState::Pure(p) => EvolvedDensity::from_pure(p),
            InitialState::Mixed(r) => r.clone(),
        }
    }
}

/// Quantities recorded along a trajectory. Column order follows the variant
/// order here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observable {
    /// `P1..Pd`
    Occupations,
    /// `trace`, the sum of scaled occupations.
    Trace,
    /// `S_total`
    Entropy,
    /// `S_gain`, `S_loss` (d = 4 only).
    SubsystemEntropies,
    /// `gx gy gz lx ly lz` (d = 4 only).
    Bloch,
}

impl Observable {
    fn keys(self, d: usize) -> Vec<String> {
        match self {
            Observable::Occupations => (1..=d).map(|k| format!("P{k}")).collect(),
            Observable::Trace => vec!["trace".into()],
            Observable::Entropy => vec!["S_total".into()],
            Observable::SubsystemEntropies => vec!["S_gain".into(), "S_loss".into()],
            Observable::Bloch => ["gx", "gy", "gz", "lx", "ly", "lz"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// Time grid with one row of observables per time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    keys: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(keys: Vec<String>) -> Self {
        Self {
            times: Vec::new(),
            keys,
            rows: Vec::new(),
        }
    }

    /// Appends a record. Times must increase strictly and every record carries
    /// one value per key.
    pub fn push(&mut self, t: f64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.keys.len() {
            return Err(Error::domain(format!(
                "record has {} values for {} keys",
                values.len(),
                self.keys.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::domain(format!("time {t} does not follow {last}")));
            }
        }
        self.times.push(t);
        self.rows.push(values);
        Ok(())
    }

    pub fn from_columns(times: Vec<f64>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let keys = columns.iter().map(|(k, _)| k.clone()).collect();
        let mut s = Self::new(keys);
        for (i, &t) in times.iter().enumerate() {
            let row = columns
                .iter()
                .map(|(k, col)| {
                    col.get(i)
                        .copied()
                        .ok_or_else(|| Error::domain(format!("column {k} too short")))
                })
                .collect::<Result<Vec<_>>>()?;
            s.push(t, row)?;
        }
        Ok(s)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, key: &str) -> Option<Vec<f64>> {
        let idx = self.keys.iter().position(|k| k == key)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// `(t, value)` pairs of one column restricted to `lo <= t <= hi`.
    pub fn window(&self, key: &str, lo: f64, hi: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let col = self.column(key)?;
        Some(
            self.times
                .iter()
                .zip(col)
                .filter(|(t, _)| **t >= lo && **t <= hi)
                .map(|(t, v)| (*t, v))
                .unzip(),
        )
    }
}

/// Uniform grid of `steps` points over `[0, tmax]`, both ends included.
pub fn time_grid(tmax: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::domain(format!(
            "need at least 2 grid points, got {steps}"
        )));
    }
    if !(tmax.is_finite() && tmax > 0.0) {
        return Err(Error::domain(format!(
            "tmax must be positive and finite, got {tmax}"
        )));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                tmax
            } else {
                tmax * i as f64 / last
            }
        })
        .collect())
}

/// Two periods `2T(γ)` in the unbroken phase, `4.5/J` otherwise.
pub fn default_tmax(h: &PtHamiltonian) -> f64 {
    match (h.phase(), h.period()) {
        (PhaseLabel::Unbroken, Some(period)) => 2.0 * period,
        _ => BROKEN_WINDOW / h.coupling(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

/// Samples `observables` on a uniform grid, evaluating grid points in
/// parallel. Output is identical to [`Execution::Serial`].
pub fn sample_trajectory(
    initial: &InitialState,
    h: &PtHamiltonian,
    tmax: f64,
    steps: usize,
    observables: &BTreeSet<Observable>,
) -> Result<TimeSeries> {
    sample_trajectory_with(initial, h, tmax, steps, observables, Execution::Parallel)
}

pub fn sample_trajectory_with(
    initial: &InitialState,
    h: &PtHamiltonian,
    tmax: f64,
    steps: usize,
    observables: &BTreeSet<Observable>,
    execution: Execution,
) -> Result<TimeSeries> {
    let d = h.dim();
    if initial.dim() != d {
        return Err(Error::domain(format!(
            "initial state has dimension {}, Hamiltonian {d}",
            initial.dim()
        )));
    }
    let needs_factorization = observables.contains(&Observable::SubsystemEntropies)
        || observables.contains(&Observable::Bloch);
    if needs_factorization && d != 4 {
        return Err(Error::domain(format!(
            "subsystem observables need d = 4, got {d}"
        )));
    }
    let grid = time_grid(tmax, steps)?;
    let eval = |&t: &f64| observe(initial, h, t, observables).map_err(|e| at_time(e, t));
    let rows: Vec<Result<Vec<f64>>> = match execution {
        Execution::Serial => grid.iter().map(eval).collect(),
        Execution::Parallel => grid.par_iter().map(eval).collect(),
    };
    let keys = observables.iter().flat_map(|o| o.keys(d)).collect();
    let mut series = TimeSeries::new(keys);
    for (t, row) in grid.into_iter().zip(rows) {
        series.push(t, row?)?;
    }
    Ok(series)
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("at t = {t}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("at t = {t}: {m}")),
        Error::Linalg(l) => Error::Numerical(format!("at t = {t}: {l}")),
    }
}

fn observe(
    initial: &InitialState,
    h: &PtHamiltonian,
    t: f64,
    observables: &BTreeSet<Observable>,
) -> Result<Vec<f64>> {
    let (occupations, trace, normalized) = match initial {
        InitialState::Pure(psi0) => {
            let psi = evolve_state(psi0, h, t)?;
            let unit = psi.unit_amplitudes();
            (
                psi.occupations(),
                psi.norm_squared(),
                CMatrix::outer(&unit, &unit),
            )
        }
        InitialState::Mixed(rho0) => {
            let rho = evolve_density(rho0, h, t)?;
            (rho.occupations(), rho.trace(), rho.normalized())
        }
    };
    let scaled =
        observables.contains(&Observable::Occupations) || observables.contains(&Observable::Trace);
    if scaled && !trace.is_finite() {
        return Err(Error::numerical(format!(
            "scaled occupations exceed the floating-point range (trace = {trace})"
        )));
    }
    let mut out = Vec::new();
    for obs in observables {
        match obs {
            Observable::Occupations => out.extend_from_slice(&occupations),
            Observable::Trace => out.push(trace),
            Observable::Entropy => out.push(entropy(&normalized)?),
            Observable::SubsystemEntropies => {
                let (gain, loss) = subsystem_entropies(&normalized)?;
                out.extend([gain, loss]);
            }
            Observable::Bloch => {
                for factor in [Factor::Sector, Factor::Internal] {
                    let p = bloch_vector(&partial_trace(&normalized, factor)?)?;
                    out.extend([p.x, p.y, p.z]);
                }
            }
        }
    }
    Ok(out)
}
