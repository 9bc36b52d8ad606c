//! Spin-j operators and the PT-symmetric Hamiltonian `H = -J Sx + iγ Sz`.
//!
//! Basis ordering: `Sz = diag(j, j-1, ..., -j)`, so mode 1 (index 0) carries
//! the strongest gain `+ijγ` and mode d the strongest loss.

use crate::linalg::{CMatrix, C64, I, ONE, ZERO};
use crate::{Error, Result};

/// Default relative tolerance on `|γ - J| / J` for the exceptional point.
pub const DEFAULT_EP_TOLERANCE: f64 = 1e-12;

/// Angular-momentum triple `(Sx, Sy, Sz)` in dimension `d = 2j + 1` (ħ = 1).
#[derive(Debug, Clone)]
pub struct SpinRepresentation {
    pub dim: usize,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

impl SpinRepresentation {
    /// Wraps caller-supplied operators without checking the algebra; only the
    /// shapes are validated.
    pub fn from_matrices(sx: CMatrix, sy: CMatrix, sz: CMatrix) -> Result<Self> {
        let dim = sx.dim()?;
        if sy.dim()? != dim || sz.dim()? != dim {
            return Err(Error::domain("spin operators must share one dimension"));
        }
        Ok(Self { dim, sx, sy, sz })
    }

    /// Spin quantum number `j = (d - 1) / 2`.
    pub fn spin(&self) -> f64 {
        (self.dim as f64 - 1.0) / 2.0
    }

    pub fn casimir(&self) -> CMatrix {
        let sq = |m: &CMatrix| m * m;
        &(&sq(&self.sx) + &sq(&self.sy)) + &sq(&self.sz)
    }
}

/// Ladder-operator construction of the spin-j representation.
pub fn build_spin(d: usize) -> Result<SpinRepresentation> {
    if d < 2 {
        return Err(Error::domain(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    let j = (d as f64 - 1.0) / 2.0;
    let m = |i: usize| j - i as f64;
    // S+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; |m+1> sits one row above |m>.
    let raise = CMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            let mc = m(c);
            C64::new((j * (j + 1.0) - mc * (mc + 1.0)).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let lower = raise.adjoint();
    let sx = (&raise + &lower).scale_real(0.5);
    let sy = (&raise - &lower).scale(C64::new(0.0, -0.5));
    let sz = CMatrix::from_real_diag(&(0..d).map(m).collect::<Vec<_>>());
    Ok(SpinRepresentation { dim: d, sx, sy, sz })
}

/// Position of `γ` relative to the PT-breaking threshold `γ = J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseLabel {
    Unbroken,
    ExceptionalPoint,
    Broken,
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PhaseLabel::Unbroken => "unbroken",
            PhaseLabel::ExceptionalPoint => "exceptional-point",
            PhaseLabel::Broken => "broken",
        })
    }
}

/// `H = -J Sx + iγ Sz` for a qudit of dimension `d`.
#[derive(Debug, Clone)]
pub struct PtHamiltonian {
    coupling: f64,
    gain_loss: f64,
    dim: usize,
    matrix: CMatrix,
}

/// Builds `H = -J Sx + iγ Sz`.
pub fn build_hamiltonian(coupling: f64, gain_loss: f64, d: usize) -> Result<PtHamiltonian> {
    if !coupling.is_finite() || coupling <= 0.0 {
        return Err(Error::domain(format!(
            "coupling J must be positive and finite, got {coupling}"
        )));
    }
    if !gain_loss.is_finite() || gain_loss < 0.0 {
        return Err(Error::domain(format!(
            "gain/loss γ must be non-negative and finite, got {gain_loss}"
        )));
    }
    let spin = build_spin(d)?;
    let matrix = &spin.sx.scale_real(-coupling) + &spin.sz.scale(I * gain_loss);
    Ok(PtHamiltonian {
        coupling,
        gain_loss,
        dim: d,
        matrix,
    })
}

impl PtHamiltonian {
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn gain_loss(&self) -> f64 {
        self.gain_loss
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Energy gap `Δ = sqrt(J² - γ²)`, purely imaginary in the broken phase.
    pub fn gap(&self) -> C64 {
        C64::new(
            self.coupling * self.coupling - self.gain_loss * self.gain_loss,
            0.0,
        )
        .sqrt()
    }

    /// Anti-periodicity `T(γ) = 2π/Δ`; `None` at or beyond the threshold.
    pub fn period(&self) -> Option<f64> {
        let gap = self.gap();
        (self.gain_loss < self.coupling && gap.re > 0.0).then(|| std::f64::consts::TAU / gap.re)
    }

    /// Mode-selective loss counterpart `H_L = H - iγ(d-1)/2 · 1`, whose
    /// anti-Hermitian part is negative semidefinite.
    pub fn passive(&self) -> CMatrix {
        let shift = self.passive_shift();
        &self.matrix - &CMatrix::identity(self.dim).scale(I * shift)
    }

    /// `γ(d-1)/2`, the imaginary shift between `H` and its passive form.
    pub fn passive_shift(&self) -> f64 {
        self.gain_loss * (self.dim as f64 - 1.0) / 2.0
    }

    /// `λ_m = m Δ` for `m = -j, ..., j`, in ascending order of `m`.
    pub fn spectrum_closed_form(&self) -> Vec<C64> {
        let j = (self.dim as f64 - 1.0) / 2.0;
        let gap = self.gap();
        (0..self.dim).map(|i| gap * (i as f64 - j)).collect()
    }

    pub fn classify_phase(&self, rel_tol: f64) -> PhaseLabel {
        classify(self.coupling, self.gain_loss, rel_tol)
    }

    pub fn phase(&self) -> PhaseLabel {
        self.classify_phase(DEFAULT_EP_TOLERANCE)
    }

    pub fn is_pt_symmetric(&self) -> bool {
        is_pt_symmetric(&self.matrix)
    }
}

fn classify(coupling: f64, gain_loss: f64, rel_tol: f64) -> PhaseLabel {
    let eps = rel_tol * coupling;
    if gain_loss < coupling - eps {
        PhaseLabel::Unbroken
    } else if gain_loss > coupling + eps {
        PhaseLabel::Broken
    } else {
        PhaseLabel::ExceptionalPoint
    }
}

/// Parity `P = antidiag(1, ..., 1)`.
pub fn parity_operator(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| if i + j + 1 == d { ONE } else { ZERO })
}

/// Antilinear PT symmetry with `T` = complex conjugation: `P H* P = H`
/// entrywise within 1e-12.
pub fn is_pt_symmetric(h: &CMatrix) -> bool {
    let Ok(d) = h.dim() else {
        return false;
    };
    let p = parity_operator(d);
    (&(&p * &h.conj()) * &p).max_abs_diff(h) <= 1e-12
}

fn pauli() -> [CMatrix; 4] {
    let m = |a: [C64; 4]| CMatrix::new(2, 2, a.to_vec()).expect("2x2");
    [
        CMatrix::identity(2),
        m([ZERO, ONE, ONE, ZERO]),
        m([ZERO, -I, I, ZERO]),
        m([ONE, ZERO, ZERO, -ONE]),
    ]
}

/// Checks the two-qubit factorisation of the spin-3/2 operators:
/// `2Sx = σx⊗σx + σy⊗σy + √3 1⊗σx`, `Sz = σz⊗1 + (1/2) 1⊗σz` and
/// `P = σx⊗σx`, entrywise within 1e-12.
pub fn two_qubit_identity_check(spin: &SpinRepresentation) -> Result<bool> {
    if spin.dim != 4 {
        return Err(Error::domain(format!(
            "two-qubit identities need d = 4, got {}",
            spin.dim
        )));
    }
    let [id, x, y, z] = pauli();
    let two_sx = &(&x.kron(&x) + &y.kron(&y)) + &id.kron(&x).scale_real(3f64.sqrt());
    let sz = &z.kron(&id) + &id.kron(&z).scale_real(0.5);
    let tol = 1e-12;
    Ok(spin.sx.scale_real(2.0).max_abs_diff(&two_sx) <= tol
        && spin.sz.max_abs_diff(&sz) <= tol
        && parity_operator(4).max_abs_diff(&x.kron(&x)) <= tol)
}
