//! Minimal safe wrappers over the banded LAPACK routines used by the
//! operator and flow modules (linked from the system OpenBLAS).
//!
//! Storage convention: symmetric banded, LOWER triangle, column-major with
//! leading dimension `kd + 1` — `ab[j*(kd+1) + (i−j)] = A[i][j]` for
//! `j ≤ i ≤ min(n−1, j+kd)`.

use crate::error::{Error, Result};
use std::os::raw::c_char;

extern "C" {
    fn dsbevx_(
        jobz: *const c_char,
        range: *const c_char,
        uplo: *const c_char,
        n: *const i32,
        kd: *const i32,
        ab: *mut f64,
        ldab: *const i32,
        q: *mut f64,
        ldq: *const i32,
        vl: *const f64,
        vu: *const f64,
        il: *const i32,
        iu: *const i32,
        abstol: *const f64,
        m: *mut i32,
        w: *mut f64,
        z: *mut f64,
        ldz: *const i32,
        work: *mut f64,
        iwork: *mut i32,
        ifail: *mut i32,
        info: *mut i32,
    );
    fn dpbtrf_(
        uplo: *const c_char,
        n: *const i32,
        kd: *const i32,
        ab: *mut f64,
        ldab: *const i32,
        info: *mut i32,
    );
    fn dpbtrs_(
        uplo: *const c_char,
        n: *const i32,
        kd: *const i32,
        nrhs: *const i32,
        ab: *const f64,
        ldab: *const i32,
        b: *mut f64,
        ldb: *const i32,
        info: *mut i32,
    );
}

/// Symmetric banded matrix, lower storage.
#[derive(Debug, Clone)]
pub struct BandMat {
    pub n: usize,
    pub kd: usize,
    /// column-major `(kd+1) × n`
    pub ab: Vec<f64>,
}

impl BandMat {
    pub fn zeros(n: usize, kd: usize) -> Self {
        Self {
            n,
            kd,
            ab: vec![0.0; (kd + 1) * n],
        }
    }

    /// Mutable entry A[i][j] for j ≤ i ≤ j + kd; panics outside the band.
    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(i >= j && i - j <= self.kd && i < self.n);
        &mut self.ab[j * (self.kd + 1) + (i - j)]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i >= j && i - j <= self.kd && i < self.n);
        self.ab[j * (self.kd + 1) + (i - j)]
    }

    /// y = A x using the symmetric band.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            y[j] += self.at(j, j) * x[j];
            let imax = (j + self.kd).min(self.n - 1);
            for i in j + 1..=imax {
                let v = self.at(i, j);
                y[i] += v * x[j];
                y[j] += v * x[i];
            }
        }
        y
    }

    /// x^T A y via the band.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(&a, &b)| a * b).sum()
    }
}

/// Largest `m` eigenvalues (ascending on return) of a symmetric banded
/// matrix; eigenvectors optional.  Overwrites a copy of the band.
pub fn sbevx_top(a: &BandMat, m: usize, want_vectors: bool) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.n as i32;
    if m == 0 || m > a.n {
        return Err(Error::InvalidParameter(format!(
            "requested {m} eigenvalues of a {}×{} matrix",
            a.n, a.n
        )));
    }
    let kd = a.kd as i32;
    let ldab = kd + 1;
    let mut ab = a.ab.clone();
    let jobz: c_char = if want_vectors { b'V' } else { b'N' } as c_char;
    let range: c_char = b'I' as c_char;
    let uplo: c_char = b'L' as c_char;
    let il = (a.n - m + 1) as i32;
    let iu = n;
    let abstol = 2.0 * f64::MIN_POSITIVE;
    let mut found: i32 = 0;
    let mut w = vec![0.0f64; a.n];
    let ldz = if want_vectors { n } else { 1 };
    let mut z = vec![0.0f64; (ldz as usize) * m.max(1)];
    // dsbevx needs the n×n orthogonal reduction factor only when jobz = 'V'
    let ldq = if want_vectors { n } else { 1 };
    let mut q = vec![0.0f64; (ldq as usize) * if want_vectors { a.n } else { 1 }];
    let mut work = vec![0.0f64; 7 * a.n];
    let mut iwork = vec![0i32; 5 * a.n];
    let mut ifail = vec![0i32; a.n];
    let mut info: i32 = 0;
    let (vl, vu) = (0.0f64, 0.0f64);
    unsafe {
        dsbevx_(
            &jobz, &range, &uplo, &n, &kd, ab.as_mut_ptr(), &ldab, q.as_mut_ptr(), &ldq, &vl,
            &vu, &il, &iu, &abstol, &mut found, w.as_mut_ptr(), z.as_mut_ptr(), &ldz,
            work.as_mut_ptr(), iwork.as_mut_ptr(), ifail.as_mut_ptr(), &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsbevx",
            info,
        });
    }
    if found as usize != m {
        return Err(Error::Numerical(format!(
            "dsbevx found {found} of {m} requested eigenvalues"
        )));
    }
    let vals = w[..m].to_vec();
    let vecs = if want_vectors {
        (0..m)
            .map(|k| z[k * a.n..(k + 1) * a.n].to_vec())
            .collect()
    } else {
        vec![]
    };
    Ok((vals, vecs))
}

/// Cholesky factorization of a symmetric positive-definite band (in place on
/// a copy); pair with [`pbtrs`].
pub fn pbtrf(a: &BandMat) -> Result<BandMat> {
    let mut fac = a.clone();
    let uplo: c_char = b'L' as c_char;
    let n = a.n as i32;
    let kd = a.kd as i32;
    let ldab = kd + 1;
    let mut info = 0i32;
    unsafe {
        dpbtrf_(&uplo, &n, &kd, fac.ab.as_mut_ptr(), &ldab, &mut info);
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dpbtrf",
            info,
        });
    }
    Ok(fac)
}

/// Solve A x = b given the [`pbtrf`] factor; b is overwritten with x.
pub fn pbtrs(fac: &BandMat, b: &mut [f64]) -> Result<()> {
    assert_eq!(b.len(), fac.n);
    let uplo: c_char = b'L' as c_char;
    let n = fac.n as i32;
    let kd = fac.kd as i32;
    let ldab = kd + 1;
    let nrhs = 1i32;
    let mut info = 0i32;
    unsafe {
        dpbtrs_(
            &uplo, &n, &kd, &nrhs, fac.ab.as_ptr(), &ldab, b.as_mut_ptr(), &n, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dpbtrs",
            info,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tridiagonal −Δ on 5 nodes: eigenvalues 2 − 2cos(kπ/6).
    fn laplacian(n: usize) -> BandMat {
        let mut a = BandMat::zeros(n, 1);
        for i in 0..n {
            *a.at_mut(i, i) = 2.0;
            if i + 1 < n {
                *a.at_mut(i + 1, i) = -1.0;
            }
        }
        a
    }

    #[test]
    fn eigenvalues_of_tridiagonal_laplacian() {
        let a = laplacian(5);
        let (vals, vecs) = sbevx_top(&a, 2, true).unwrap();
        let exact: Vec<f64> = (4..=5)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos())
            .collect();
        for (v, e) in vals.iter().zip(&exact) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
        // residual ‖Av − λv‖
        for (k, v) in vecs.iter().enumerate() {
            let av = a.matvec(v);
            for i in 0..5 {
                assert!((av[i] - vals[k] * v[i]).abs() < 1e-12);
            }
        }
        // values-only path agrees
        let (vals2, _) = sbevx_top(&a, 2, false).unwrap();
        for (x, y) in vals.iter().zip(&vals2) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let a = laplacian(6);
        let fac = pbtrf(&a).unwrap();
        let x0: Vec<f64> = (0..6).map(|i| (i as f64 + 1.0).sin()).collect();
        let mut b = a.matvec(&x0);
        pbtrs(&fac, &mut b).unwrap();
        for (xi, x0i) in b.iter().zip(&x0) {
            assert!((xi - x0i).abs() < 1e-12);
        }
    }

    #[test]
    fn pbtrf_rejects_indefinite() {
        let mut a = BandMat::zeros(4, 1);
        for i in 0..4 {
            *a.at_mut(i, i) = -1.0;
        }
        assert!(pbtrf(&a).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let mut a = BandMat::zeros(5, 2);
        for i in 0..5 {
            *a.at_mut(i, i) = 1.0 + i as f64;
            if i + 1 < 5 {
                *a.at_mut(i + 1, i) = 0.5;
            }
            if i + 2 < 5 {
                *a.at_mut(i + 2, i) = -0.25;
            }
        }
        let x = [1.0, -2.0, 0.5, 3.0, -1.0];
        let y = a.matvec(&x);
        // dense reference
        let mut dense = [[0.0f64; 5]; 5];
        for j in 0..5 {
            for i in j..(j + 3).min(5) {
                dense[i][j] = a.at(i, j);
                dense[j][i] = a.at(i, j);
            }
        }
        for i in 0..5 {
            let yi: f64 = (0..5).map(|j| dense[i][j] * x[j]).sum();
            assert!((y[i] - yi).abs() < 1e-14);
        }
    }
}
