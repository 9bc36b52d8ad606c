//! Eigensolvers for small dense complex matrices.
//!
//! The general solver reduces to upper Hessenberg form with Householder
//! reflections, then runs single-shift complex QR (Wilkinson shifts, Givens
//! rotations) to a Schur form `A = Z T Z†`. Right eigenvectors come from back
//! substitution on `T`. Near an exceptional point the back substitution
//! produces nearly parallel vectors instead of inventing a spanning set; the
//! condition number of the eigenvector matrix exposes this.

use super::{vec_norm, CMatrix, LinalgError, C64, ONE, ZERO};

/// Relative subdiagonal deflation tolerance.
const DEFLATION_TOL: f64 = 1e-13;
/// QR sweeps allowed per unit of dimension.
const SWEEPS_PER_DIM: usize = 30;
/// Eigenvector-matrix condition number above which the decomposition is flagged.
const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    /// Unit-norm right eigenvectors, `vectors[k]` belonging to `values[k]`.
    pub vectors: Vec<Vec<C64>>,
    /// 1-norm condition number of the eigenvector matrix (infinite when it is
    /// exactly singular).
    pub condition_number: f64,
    /// Set when `condition_number` exceeds 1e10: the vectors do not span and the
    /// matrix is at (or numerically indistinguishable from) a defective point.
    pub condition_flag: bool,
}

impl EigenDecomposition {
    /// Eigenvectors as the columns of a matrix.
    pub fn vector_matrix(&self) -> CMatrix {
        let n = self.values.len();
        CMatrix::from_fn(n, n, |i, j| self.vectors[j][i])
    }

    /// Largest `||A v - λ v||` over the pairs.
    pub fn max_residual(&self, a: &CMatrix) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&lam, v)| {
                let av = a.mul_vec(v);
                av.iter()
                    .zip(v)
                    .map(|(x, y)| (x - lam * y).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues and right eigenvectors of a general square matrix.
pub fn eig(a: &CMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = a.dim()?;
    a.check_finite()?;
    let (t, z) = schur(a)?;
    let values = t.diagonal();

    let tnorm = t.norm_fro();
    let small = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lam = t[(k, k)];
        let mut x = vec![ZERO; n];
        x[k] = ONE;
        for i in (0..k).rev() {
            let s: C64 = ((i + 1)..=k).map(|j| t[(i, j)] * x[j]).sum();
            let mut denom = t[(i, i)] - lam;
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            x[i] = -s / denom;
            // keep the partial solution bounded; only the direction matters
            let big = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                x.iter_mut().for_each(|v| *v /= big);
            }
        }
        let mut v = z.mul_vec(&x);
        let norm = vec_norm(&v);
        v.iter_mut().for_each(|c| *c /= norm);
        vectors.push(v);
    }

    let vm = CMatrix::from_fn(n, n, |i, j| vectors[j][i]);
    let condition_number = match vm.inverse() {
        Ok(inv) if inv.check_finite().is_ok() => vm.norm_one() * inv.norm_one(),
        _ => f64::INFINITY,
    };
    Ok(EigenDecomposition {
        values,
        vectors,
        condition_number,
        condition_flag: condition_number > CONDITION_LIMIT,
    })
}

/// Householder reduction to upper Hessenberg form, `A = Q H Q†`.
fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let alpha = vec_norm(&x);
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            ONE
        };
        let mut v = x.clone();
        v[0] += phase * alpha;
        let vn = vec_norm(&v);
        v.iter_mut().for_each(|c| *c /= vn);
        // H <- (I - 2vv†) H (I - 2vv†) on the trailing block
        for j in 0..n {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * h[(k + 1 + r, j)])
                .sum();
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= 2.0 * vr * s;
            }
        }
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(r, vr)| m[(i, k + 1 + r)] * vr)
                    .sum();
                for (r, vr) in v.iter().enumerate() {
                    m[(i, k + 1 + r)] -= 2.0 * s * vr.conj();
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Givens rotation `G = [[c, s], [-s*, c]]` with `G [a, b]^T = [r, 0]^T`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    if b == ZERO {
        return (1.0, ZERO);
    }
    if a == ZERO {
        return (0.0, b.conj() / b.norm());
    }
    let an = a.norm();
    let r = an.hypot(b.norm());
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Complex Schur form `A = Z T Z†` with `T` upper triangular.
fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix), LinalgError> {
    let n = a.rows();
    let (mut h, mut z) = hessenberg(a);
    if n == 1 {
        return Ok((h, z));
    }
    let norm = a.norm_fro();
    let floor = 4.0 * f64::EPSILON * norm;
    let max_sweeps = SWEEPS_PER_DIM * n;
    let mut sweeps = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;

    while hi > 0 {
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= DEFLATION_TOL * diag || sub <= floor {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if sweeps >= max_sweeps {
            return Err(LinalgError::NoConvergence {
                norm,
                iterations: sweeps,
            });
        }
        sweeps += 1;
        since_deflation += 1;

        let shift = if since_deflation % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = c * x + s * y;
                h[(k + 1, j)] = -s.conj() * x + c * y;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = lo + idx;
            let top = (k + 2).min(hi);
            for i in 0..=top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = c * x + s.conj() * y;
                h[(i, k + 1)] = -s * x + c * y;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = c * x + s.conj() * y;
                z[(i, k + 1)] = -s * x + c * y;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok((h, z))
}

/// Eigenvalue of the trailing 2x2 block closer to its bottom-right entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix, by cyclic complex Jacobi rotations.
pub fn eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    let n = a.dim()?;
    a.check_finite()?;
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let norm = m.norm_fro();
    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let theta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = diag(1, phase*) * [[c, s], [-s, c]]
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                for i in 0..n {
                    let x = m[(i, p)];
                    let y = m[(i, q)];
                    m[(i, p)] = x * g_pp + y * g_qp;
                    m[(i, q)] = x * g_pq + y * g_qq;
                }
                for j in 0..n {
                    let x = m[(p, j)];
                    let y = m[(q, j)];
                    m[(p, j)] = g_pp.conj() * x + g_qp.conj() * y;
                    m[(q, j)] = g_pq.conj() * x + g_qq.conj() * y;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = x * g_pp + y * g_qp;
                    v[(i, q)] = x * g_pq + y * g_qq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            norm,
            iterations: max_sweeps,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

/// Singular values in descending order, from the eigenvalues of `A†A` with
/// negative round-off clamped to zero.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    a.dim()?;
    let gram = &a.adjoint() * a;
    let (vals, _) = eigh(&gram)?;
    let mut sv: Vec<f64> = vals.into_iter().map(|x| x.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Coefficients `c_0..c_n` of `det(λI - A) = Σ c_k λ^k` (Faddeev-LeVerrier).
pub fn characteristic_polynomial(a: &CMatrix) -> Result<Vec<C64>, LinalgError> {
    let n = a.dim()?;
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[n] = ONE;
    let mut m = CMatrix::zeros(n, n);
    let id = CMatrix::identity(n);
    for k in 1..=n {
        m = &(a * &m) + &id.scale(coeffs[n - k + 1]);
        coeffs[n - k] = -(a * &m).trace() / k as f64;
    }
    Ok(coeffs)
}

/// `|p(x)| / Σ|c_k||x|^k`, the backward-style relative residual of a root.
pub fn polynomial_residual(coeffs: &[C64], x: C64) -> f64 {
    let value = coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c);
    let scale = coeffs
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * x.norm() + c.norm());
    if scale == 0.0 {
        0.0
    } else {
        value.norm() / scale
    }
}
