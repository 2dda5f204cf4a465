//! Dense real eigensolver: Householder reduction to Hessenberg form followed
//! by Francis double-shift QR, plus cyclic Jacobi for symmetric input.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MAX_DIM: usize = 128;

/// Per-eigenvalue cap on QR sweeps before giving up.
const MAX_SWEEPS_PER_ROOT: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    #[serde(serialize_with = "serialize_complex")]
    pub eigenvalues: Vec<Complex64>,
    pub method: String,
    /// `max ‖Mq − λq‖` over unit eigenvector estimates.
    pub residual: f64,
}

fn serialize_complex<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

impl Spectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalue with the largest real part.
    pub fn rightmost(&self) -> Option<Complex64> {
        self.eigenvalues.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
    }
}

fn check_square(m: &Matrix) -> Result<usize> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!("eigenvalues need a square matrix, got {}x{}", n, m.ncols())));
    }
    if n > MAX_DIM {
        return Err(Error::Dimension(format!("eigensolver is capped at {MAX_DIM}x{MAX_DIM}, got {n}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { term: "eigensolver input".into() });
    }
    Ok(n)
}

/// All eigenvalues of `m`, accepted only if the residual is at most `tol·‖M‖`.
pub fn eigenvalues(m: &Matrix, tol: f64) -> Result<Spectrum> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(Spectrum { eigenvalues: Vec::new(), method: "empty".into(), residual: 0.0 });
    }
    let mut values = hqr(hessenberg(m))?;
    let mut method = "hessenberg+francis-qr".to_string();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() <= 1e-14 * scale {
        let sym = symmetric_eigenvalues(m)?;
        let mut qr: Vec<f64> = values.iter().map(|z| z.re).collect();
        qr.sort_by(f64::total_cmp);
        let gap = qr.iter().zip(&sym).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > tol * scale {
            return Err(Error::SpectrumResidual { residual: gap, limit: tol * scale });
        }
        values = sym.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        method = "jacobi(checked against qr)".into();
    }
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let residual = values.iter().map(|&l| eigen_residual(m, l)).fold(0.0, f64::max);
    if !(residual <= tol * scale) {
        return Err(Error::SpectrumResidual { residual, limit: tol * scale });
    }
    Ok(Spectrum { eigenvalues: values, method, residual })
}

pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m, 1e-8)?.spectral_radius())
}

/// Orthogonal similarity to upper Hessenberg form.
pub fn hessenberg(m: &Matrix) -> Matrix {
    let n = m.nrows();
    let mut h = m.clone();
    let mut ort = vec![0.0; n];
    for col in 1..n.saturating_sub(1) {
        let scale: f64 = (col..n).map(|i| h[(i, col - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (col..n).rev() {
            ort[i] = h[(i, col - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let g = if ort[col] > 0.0 { -hh.sqrt() } else { hh.sqrt() };
        hh -= ort[col] * g;
        ort[col] -= g;
        for j in col..n {
            let f: f64 = (col..n).rev().map(|i| ort[i] * h[(i, j)]).sum::<f64>() / hh;
            for i in col..n {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..n {
            let f: f64 = (col..n).rev().map(|j| ort[j] * h[(i, j)]).sum::<f64>() / hh;
            for j in col..n {
                h[(i, j)] -= f * ort[j];
            }
        }
        h[(col, col - 1)] = scale * g;
    }
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = 0.0;
        }
    }
    h
}

/// Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.
// The scratch scalars are shared across branches, as in the classic EISPACK layout.
#[allow(unused_assignments)]
pub fn hqr(mut h: Matrix) -> Result<Vec<Complex64>> {
    let nn = h.nrows();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    if nn == 0 {
        return Ok(Vec::new());
    }
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    let (mut p, mut q, mut r, mut s, mut z) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut iter = 0;
    let mut total = 0;
    let mut n = nn as isize - 1;
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }
        if l == nu {
            h[(nu, nu)] += exshift;
            d[nu] = h[(nu, nu)];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            let w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            let x = h[(nu, nu)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = if z != 0.0 { x - w / z } else { d[nu - 1] };
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            let mut x = h[(nu, nu)];
            let mut y = 0.0;
            let mut w = 0.0;
            if l < nu {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;
            if iter > MAX_SWEEPS_PER_ROOT {
                return Err(Error::NoConvergence { iterations: total, deflated: nn - 1 - nu, dim: nn });
            }

            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(d.into_iter().zip(e).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Cyclic Jacobi rotations; returns ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    let n = check_square(m)?;
    let mut a = m.clone();
    let scale = a.norm();
    for sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off.sqrt() <= f64::EPSILON * scale {
            let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            vals.sort_by(f64::total_cmp);
            return Ok(vals);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
        if sweep == 99 {
            break;
        }
    }
    Err(Error::NoConvergence { iterations: 100, deflated: 0, dim: n })
}

/// Residual of an eigenpair whose vector comes from complex inverse iteration.
fn eigen_residual(m: &Matrix, lambda: Complex64) -> f64 {
    let n = m.nrows();
    let mc: DMatrix<Complex64> = m.map(|v| Complex64::new(v, 0.0));
    let bump = 1e-10 * (m.norm() + 1.0);
    let shift = lambda + Complex64::new(bump, bump);
    let shifted = &mc - DMatrix::<Complex64>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut q =
        nalgebra::DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(1.0 + i as f64 * 0.37, 0.11 * i as f64));
    q /= Complex64::new(q.norm(), 0.0);
    for _ in 0..3 {
        match lu.solve(&q) {
            Some(next) => {
                let len = next.norm();
                if !(len.is_finite() && len > 0.0) {
                    break;
                }
                q = next / Complex64::new(len, 0.0);
            }
            None => break,
        }
    }
    let r = &mc * &q - &q * lambda;
    r.norm()
}
