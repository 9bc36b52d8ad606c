//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham 2005). Works for any square matrix, including defective ones: no
//! eigendecomposition is involved.

use super::{CMatrix, LinalgError};

// Backward-error thresholds on the 1-norm for the [m/m] approximants.
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(scale * a)`.
pub fn mat_exp(a: &CMatrix, scale: f64) -> Result<CMatrix, LinalgError> {
    let n = a.dim()?;
    a.check_finite()?;
    if !scale.is_finite() {
        return Err(LinalgError::InvalidValue(format!(
            "scale {scale} is not finite"
        )));
    }
    let x = a.scale_real(scale);
    x.check_finite()?;
    let norm = x.norm_one();
    if !norm.is_finite() {
        return Err(LinalgError::InvalidValue(
            "|scale|*||A|| is not representable".into(),
        ));
    }
    if norm == 0.0 {
        return Ok(CMatrix::identity(n));
    }

    let id = CMatrix::identity(n);
    let x2 = &x * &x;
    for (theta, coeffs) in [
        (THETA_3, &B3[..]),
        (THETA_5, &B5[..]),
        (THETA_7, &B7[..]),
        (THETA_9, &B9[..]),
    ] {
        if norm <= theta {
            let (u, v) = pade_low(&x, &x2, &id, coeffs);
            return pade_quotient(&u, &v);
        }
    }

    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let (x, x2) = if s > 0 {
        let f = 2f64.powi(-s);
        (x.scale_real(f), x2.scale_real(f * f))
    } else {
        (x, x2)
    };
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let b = &B13;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> CMatrix {
        let mut m = &(&x6.scale_real(c6) + &x4.scale_real(c4)) + &x2.scale_real(c2);
        if c0 != 0.0 {
            m = &m + &id.scale_real(c0);
        }
        m
    };
    let u_inner = &(&x6 * &lin(b[13], b[11], b[9], 0.0)) + &lin(b[7], b[5], b[3], b[1]);
    let u = &x * &u_inner;
    let v = &(&x6 * &lin(b[12], b[10], b[8], 0.0)) + &lin(b[6], b[4], b[2], b[0]);
    let mut r = pade_quotient(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    r.check_finite()?;
    Ok(r)
}

/// Odd/even parts `U = x * sum b_{2k+1} x^{2k}`, `V = sum b_{2k} x^{2k}` for
/// orders below 13.
fn pade_low(x: &CMatrix, x2: &CMatrix, id: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let mut odd = id.scale_real(b[1]);
    let mut even = id.scale_real(b[0]);
    let mut pow = id.clone();
    for k in 1..b.len() / 2 {
        pow = &pow * x2;
        odd = &odd + &pow.scale_real(b[2 * k + 1]);
        even = &even + &pow.scale_real(b[2 * k]);
    }
    (x * &odd, even)
}

fn pade_quotient(u: &CMatrix, v: &CMatrix) -> Result<CMatrix, LinalgError> {
    (v - u).solve(&(v + u))
}
