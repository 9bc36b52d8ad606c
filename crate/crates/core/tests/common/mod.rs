//! Oracles shared by the integration targets. None of them calls the matrix
//! exponential or the eigensolvers of the library.

#![allow(dead_code)]

use ptqudit::{CMatrix, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `exp(-i H₂ t)` for the spin-1/2 member, `H₂ = [[iγ/2, -J/2], [-J/2, -iγ/2]]`.
/// `H₂² = ω² I` with `ω = √(J² - γ²)/2`, so the series sums to
/// `cos(ωt) I - i sin(ωt)/ω H₂` in every phase.
pub fn qubit_propagator(j: f64, gamma: f64, t: f64) -> [[C64; 2]; 2] {
    let omega = c(j * j - gamma * gamma, 0.0).sqrt() / 2.0;
    let x = omega * t;
    let cos = x.cos();
    let sinc_t = if x.norm() < 1e-6 {
        c(t, 0.0) * (c(1.0, 0.0) - x * x / 6.0)
    } else {
        x.sin() / omega
    };
    let h = [
        [c(0.0, gamma / 2.0), c(-j / 2.0, 0.0)],
        [c(-j / 2.0, 0.0), c(0.0, -gamma / 2.0)],
    ];
    let mi = c(0.0, -1.0);
    let mut u = [[C64::default(); 2]; 2];
    for r in 0..2 {
        for s in 0..2 {
            let id = if r == s { cos } else { C64::default() };
            u[r][s] = id + mi * sinc_t * h[r][s];
        }
    }
    u
}

/// Action of a 2x2 matrix on the symmetric power `Sym^n(C²)`, in the basis
/// `|k> ∝ √C(n,k) ↑^{n-k} ↓^k` (so `k = 0` is `m = +n/2`).
pub fn symmetric_power(m: &[[C64; 2]; 2], n: usize) -> CMatrix {
    let (a, b, cc, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let pow = |z: C64, e: usize| (0..e).fold(c(1.0, 0.0), |acc, _| acc * z);
    CMatrix::from_fn(n + 1, n + 1, |l, k| {
        // coefficient of ↑^{n-k} ↓^k in (a↑ + b↓)^{n-l} (c↑ + d↓)^l
        let mut sum = C64::default();
        for p in 0..=k.min(n - l) {
            let q = k - p;
            if q > l {
                continue;
            }
            sum += pow(a, n - l - p)
                * pow(b, p)
                * pow(cc, l - q)
                * pow(d, q)
                * (binomial(n - l, p) * binomial(l, q));
        }
        sum * (binomial(n, l) / binomial(n, k)).sqrt()
    })
}

/// `U(t)` of the d-level Hamiltonian from the qubit closed form.
pub fn oracle_propagator(j: f64, gamma: f64, d: usize, t: f64) -> CMatrix {
    symmetric_power(&qubit_propagator(j, gamma, t), d - 1)
}

/// Scaled occupations `|<k|U(t)|ψ0>|²`.
pub fn oracle_occupations(j: f64, gamma: f64, psi0: &[C64], t: f64) -> Vec<f64> {
    let u = oracle_propagator(j, gamma, psi0.len(), t);
    u.mul_vec(psi0).iter().map(|z| z.norm_sqr()).collect()
}

/// `(Re λ, Im λ)` of the closed-form spectrum `m √(J² - γ²)`, `m = j..-j`.
pub fn closed_form_spectrum(j: f64, gamma: f64, d: usize) -> Vec<C64> {
    let delta = c(j * j - gamma * gamma, 0.0).sqrt();
    (0..d)
        .map(|k| delta * ((d - 1) as f64 / 2.0 - k as f64))
        .collect()
}

/// Entropy in bits of a Hermitian unit-trace matrix via a Jacobi sweep on
/// its real 2n x 2n embedding, independent of the library's `eigh`.
pub fn oracle_entropy(rho: &CMatrix) -> f64 {
    let n = rho.rows();
    let m = 2 * n;
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..n {
        for k in 0..n {
            let z = rho[(i, k)];
            a[i][k] = z.re;
            a[i + n][k + n] = z.re;
            a[i][k + n] = -z.im;
            a[i + n][k] = z.im;
        }
    }
    for _ in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|p| (0..m).map(move |q| (p, q)))
            .filter(|(p, q)| p != q)
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for r in 0..m {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = cs * arp - sn * arq;
                    a[r][q] = sn * arp + cs * arq;
                }
                for r in 0..m {
                    let (apr, aqr) = (a[p][r], a[q][r]);
                    a[p][r] = cs * apr - sn * aqr;
                    a[q][r] = sn * apr + cs * aqr;
                }
            }
        }
    }
    // every eigenvalue appears twice in the embedding
    let s: f64 = (0..m)
        .map(|i| a[i][i])
        .filter(|p| *p > 1e-12)
        .map(|p| -p * p.log2())
        .sum();
    s / 2.0
}

pub fn wall_clock<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
