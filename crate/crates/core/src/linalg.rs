//! Internal solvers: tridiagonal factorization, conjugate gradients and a
//! single-vector LOBPCG iteration for the lowest eigenpair of a symmetric
//! positive definite operator.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::quad::pairwise_dot;
use crate::{Error, Result};

/// Solve `(T - shift I) x = rhs` for a symmetric tridiagonal `T` given by its
/// diagonal and off-diagonal, by the Thomas algorithm (no pivoting; the
/// shifted matrix must be definite).
pub fn thomas_shifted(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    debug_assert_eq!(off.len(), n - 1);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut b0 = diag[0] - shift;
    c[0] = off.first().copied().unwrap_or(0.0) / b0;
    d[0] = rhs[0] / b0;
    for i in 1..n {
        b0 = diag[i] - shift - off[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = off[i] / b0;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / b0;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

fn tridiag_apply(diag: &[f64], off: &[f64], x: &[f64], out: &mut [f64]) {
    let n = diag.len();
    for i in 0..n {
        let mut v = diag[i] * x[i];
        if i > 0 {
            v += off[i - 1] * x[i - 1];
        }
        if i < n - 1 {
            v += off[i] * x[i + 1];
        }
        out[i] = v;
    }
}

/// Lowest eigenpair of a symmetric positive definite tridiagonal matrix by
/// inverse power iteration. Returns `(lambda, eigenvector, residual)` with
/// the eigenvector normalized in the Euclidean norm.
pub fn lowest_eig_tridiag(
    diag: &[f64],
    off: &[f64],
    start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = diag.len();
    let mut x: Vec<f64> = match start {
        Some(s) if s.len() == n => s.to_vec(),
        _ => (0..n).map(|i| 1.0 + 1e-3 * (i % 7) as f64).collect(),
    };
    normalize2(&mut x);
    let mut ax = vec![0.0; n];
    let mut lambda = 0.0;
    let mut res = f64::INFINITY;
    for _ in 0..max_iter {
        let y = thomas_shifted(diag, off, 0.0, &x);
        x = y;
        normalize2(&mut x);
        tridiag_apply(diag, off, &x, &mut ax);
        lambda = pairwise_dot(&x, &ax);
        let terms: Vec<f64> = (0..n).map(|i| ax[i] - lambda * x[i]).collect();
        res = libm::sqrt(pairwise_dot(&terms, &terms));
        if res <= tol * lambda.abs().max(1.0) {
            // fix the sign so the dominant component is positive
            orient_positive(&mut x);
            return Ok((lambda, x, res));
        }
    }
    Err(Error::Numerical {
        message: "tridiagonal inverse power iteration did not converge".to_string(),
        residual: res / lambda.abs().max(1.0),
    })
}

/// Conjugate gradients for SPD `A x = b` with an optional Jacobi
/// preconditioner. `apply` computes `out = A x`. Returns the solution and
/// the final relative residual.
pub fn cg_solve<F: FnMut(&[f64], &mut [f64])>(
    mut apply: F,
    b: &[f64],
    x0: Option<&[f64]>,
    precond_diag: Option<&[f64]>,
    tol_rel: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = b.len();
    let bnorm = libm::sqrt(pairwise_dot(b, b));
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0.0, 0));
    }
    let mut x = match x0 {
        Some(v) if v.len() == n => v.to_vec(),
        _ => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let prec = |r: &[f64], z: &mut Vec<f64>| {
        z.clear();
        match precond_diag {
            Some(d) => z.extend(r.iter().zip(d.iter()).map(|(r, d)| r / d)),
            None => z.extend_from_slice(r),
        }
    };
    let mut z = Vec::with_capacity(n);
    prec(&r, &mut z);
    let mut p = z.clone();
    let mut rz = pairwise_dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = libm::sqrt(pairwise_dot(&r, &r)) / bnorm;
    for it in 0..max_iter {
        if rel <= tol_rel {
            return Ok((x, rel, it));
        }
        apply(&p, &mut ap);
        let pap = pairwise_dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Numerical {
                message: "CG encountered a non-positive curvature direction".to_string(),
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = libm::sqrt(pairwise_dot(&r, &r)) / bnorm;
        prec(&r, &mut z);
        let rz_new = pairwise_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if rel <= tol_rel {
        return Ok((x, rel, max_iter));
    }
    Err(Error::Numerical {
        message: "CG did not reach the requested residual".to_string(),
        residual: rel,
    })
}

/// Lowest eigenpair of an SPD operator by single-vector LOBPCG with a Jacobi
/// preconditioner. Converges when the Euclidean residual norm satisfies
/// `||A x - lambda x|| <= tol * max(|lambda|, 1)`.
pub fn lobpcg_lowest<F: FnMut(&[f64], &mut [f64])>(
    mut apply: F,
    diag: &[f64],
    start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>, f64, usize)> {
    let n = diag.len();
    let mut x: Vec<f64> = match start {
        Some(s) if s.len() == n => s.to_vec(),
        _ => (0..n).map(|i| 1.0 + 1e-3 * (i % 11) as f64).collect(),
    };
    normalize2(&mut x);
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut lambda = pairwise_dot(&x, &ax);
    let mut p: Option<(Vec<f64>, Vec<f64>)> = None; // (p, A p)
    let mut res = f64::INFINITY;
    for it in 0..max_iter {
        let r: Vec<f64> = (0..n).map(|i| ax[i] - lambda * x[i]).collect();
        res = libm::sqrt(pairwise_dot(&r, &r));
        if res <= tol * lambda.abs().max(1.0) {
            orient_positive(&mut x);
            return Ok((lambda, x, res, it));
        }
        let mut w: Vec<f64> = r.iter().zip(diag.iter()).map(|(r, d)| r / d).collect();
        normalize2(&mut w);
        let mut aw = vec![0.0; n];
        apply(&w, &mut aw);

        // basis [x, w, p], orthonormalized by modified Gram-Schmidt;
        // A-images are combined alongside to save matvecs
        let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(3);
        basis.push((x.clone(), ax.clone()));
        push_orthonormal(&mut basis, w, aw);
        if let Some((pv, apv)) = p.take() {
            push_orthonormal(&mut basis, pv, apv);
        }
        let m = basis.len();
        if m == 1 {
            orient_positive(&mut x);
            return Ok((lambda, x, res, it));
        }
        // Rayleigh-Ritz on the small subspace
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = pairwise_dot(&basis[i].0, &basis[j].1);
                g[i * m + j] = v;
                g[j * m + i] = v;
            }
        }
        let (evals, evecs) = jacobi_eigen(&g, m);
        let mut kmin = 0;
        for k in 1..m {
            if evals[k] < evals[kmin] {
                kmin = k;
            }
        }
        let c: Vec<f64> = (0..m).map(|i| evecs[i * m + kmin]).collect();
        let mut xnew = vec![0.0; n];
        let mut axnew = vec![0.0; n];
        let mut pnew = vec![0.0; n];
        let mut apnew = vec![0.0; n];
        for (i, (b, ab)) in basis.iter().enumerate() {
            for k in 0..n {
                xnew[k] += c[i] * b[k];
                axnew[k] += c[i] * ab[k];
            }
            if i >= 1 {
                for k in 0..n {
                    pnew[k] += c[i] * b[k];
                    apnew[k] += c[i] * ab[k];
                }
            }
        }
        let s = libm::sqrt(pairwise_dot(&xnew, &xnew));
        if s == 0.0 {
            break;
        }
        for k in 0..n {
            xnew[k] /= s;
            axnew[k] /= s;
        }
        let ps = libm::sqrt(pairwise_dot(&pnew, &pnew));
        if ps > 1e-300 {
            for k in 0..n {
                pnew[k] /= ps;
                apnew[k] /= ps;
            }
            p = Some((pnew, apnew));
        }
        x = xnew;
        ax = axnew;
        lambda = pairwise_dot(&x, &ax);
    }
    Err(Error::Numerical {
        message: "LOBPCG did not reach the requested residual".to_string(),
        residual: res / lambda.abs().max(1.0),
    })
}

fn push_orthonormal(basis: &mut Vec<(Vec<f64>, Vec<f64>)>, mut v: Vec<f64>, mut av: Vec<f64>) {
    let n = v.len();
    for (b, ab) in basis.iter() {
        let c = pairwise_dot(b, &v);
        for k in 0..n {
            v[k] -= c * b[k];
            av[k] -= c * ab[k];
        }
    }
    let s = libm::sqrt(pairwise_dot(&v, &v));
    if s > 1e-10 {
        for k in 0..n {
            v[k] /= s;
            av[k] /= s;
        }
        basis.push((v, av));
    }
}

/// Jacobi eigen-decomposition of a small dense symmetric matrix (row-major).
/// Returns eigenvalues and the column-major eigenvector matrix.
fn jacobi_eigen(a: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    for _ in 0..50 {
        let mut off = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                off += a[i * m + j] * a[i * m + j];
            }
        }
        if off < 1e-28 {
            break;
        }
        for pi in 0..m {
            for qi in (pi + 1)..m {
                let apq = a[pi * m + qi];
                if libm::fabs(apq) < 1e-300 {
                    continue;
                }
                let theta = (a[qi * m + qi] - a[pi * m + pi]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    1.0 / (theta - libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + pi];
                    let akq = a[k * m + qi];
                    a[k * m + pi] = c * akp - s * akq;
                    a[k * m + qi] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[pi * m + k];
                    let aqk = a[qi * m + k];
                    a[pi * m + k] = c * apk - s * aqk;
                    a[qi * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + pi];
                    let vkq = v[k * m + qi];
                    v[k * m + pi] = c * vkp - s * vkq;
                    v[k * m + qi] = s * vkp + c * vkq;
                }
            }
        }
    }
    let evals: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    (evals, v)
}

fn normalize2(x: &mut [f64]) {
    let s = libm::sqrt(pairwise_dot(x, x));
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
}

fn orient_positive(x: &mut [f64]) {
    let mut dominant = 0.0f64;
    for &v in x.iter() {
        if libm::fabs(v) > libm::fabs(dominant) {
            dominant = v;
        }
    }
    if dominant < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn thomas_solves_a_small_system() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0 discretized
        let n = 63;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let rhs = vec![1.0; n];
        let x = thomas_shifted(&diag, &off, 0.0, &rhs);
        // u(x) = x(1-x)/2, max at 1/8
        let mid = x[n / 2];
        assert!((mid - 0.125).abs() < 1e-10, "{mid}");
    }

    #[test]
    fn tridiag_lowest_eig_matches_dirichlet_laplacian() {
        let n = 511;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let (lam, vecx, _) = lowest_eig_tridiag(&diag, &off, None, 1e-10, 500).unwrap();
        // discrete eigenvalue (2 - 2 cos(pi h)) / h^2
        let expect = (2.0 - 2.0 * (PI * h).cos()) / (h * h);
        assert!((lam - expect).abs() < 1e-8 * expect, "{lam} vs {expect}");
        assert!(vecx[n / 2] > 0.0);
    }

    #[test]
    fn cg_solves_diag_dominant_system() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| 4.0 + (i % 5) as f64).collect();
        let apply = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i < n - 1 {
                    v -= x[i + 1];
                }
                out[i] = v;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let (x, rel, _) = cg_solve(apply, &b, None, Some(&diag), 1e-12, 1000).unwrap();
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "err {err}, rel {rel}");
    }

    #[test]
    fn lobpcg_matches_tridiag_reference() {
        let n = 400;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let apply = |x: &[f64], out: &mut [f64]| tridiag_apply(&diag, &off, x, out);
        let (lam, _, _, _) = lobpcg_lowest(apply, &diag, None, 1e-10, 2000).unwrap();
        let expect = (2.0 - 2.0 * (PI * h).cos()) / (h * h);
        assert!((lam - expect).abs() < 1e-6 * expect, "{lam} vs {expect}");
    }
}
