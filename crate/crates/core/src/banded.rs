//! Banded LU factorization with partial pivoting, LAPACK-style band storage.
//!
//! Finite-difference Jacobians are banded (tridiagonal-plus in 1D, grid-width
//! bandwidth in 2D); a band solve keeps Newton steps at O(n·b²) instead of O(n³).

use ndarray::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BandedError {
    #[error("matrix is numerically singular at column {col}")]
    Singular { col: usize },
    #[error("entry ({i},{j}) lies outside the band (kl={kl}, ku={ku})")]
    OutOfBand { i: usize, j: usize, kl: usize, ku: usize },
    #[error("rhs length {got} does not match matrix order {expect}")]
    ShapeMismatch { got: usize, expect: usize },
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage reserves `kl` extra super-diagonal rows so LU with row pivoting
/// can fill in place (upper bandwidth grows to `kl + ku`).
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    /// A[i,j] lives at data[(kl + ku + i - j, j)]; shape (2*kl + ku + 1, n).
    data: Array2<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Banded {
            n,
            kl,
            ku,
            data: Array2::zeros((2 * kl + ku + 1, n)),
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Storage row for (i, j), valid while i - j is within [-(kl+ku), kl].
    #[inline]
    fn storage_row(&self, i: usize, j: usize) -> Option<usize> {
        let d = i as isize - j as isize;
        let off = (self.kl + self.ku) as isize;
        if d > self.kl as isize || d < -off {
            None
        } else {
            Some((off + d) as usize)
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.storage_row(i, j) {
            Some(r) => self.data[(r, j)],
            None => 0.0,
        }
    }

    #[inline]
    fn put(&mut self, i: usize, j: usize, v: f64) {
        let r = self.storage_row(i, j).expect("within storage band");
        self.data[(r, j)] = v;
    }

    /// Set A[i,j]; (i, j) must lie inside the declared (kl, ku) band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<(), BandedError> {
        let d = i as isize - j as isize;
        if d > self.kl as isize || -d > self.ku as isize {
            return Err(BandedError::OutOfBand {
                i,
                j,
                kl: self.kl,
                ku: self.ku,
            });
        }
        self.put(i, j, v);
        Ok(())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                out[(i, j)] = self.get(i, j);
            }
        }
        out
    }

    /// y = A·x without factorizing.
    pub fn matvec(&self, x: &Array1<f64>) -> Array1<f64> {
        let mut y = Array1::zeros(self.n);
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.get(i, j) * xj;
            }
        }
        y
    }

    /// LU factorization with partial pivoting; consumes the matrix.
    pub fn factor(mut self) -> Result<BandedLu, BandedError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kuf = ku + kl; // filled upper bandwidth
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in (j + 1)..=imax {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(BandedError::Singular { col: j });
            }
            ipiv[j] = p;
            let kmax = (j + kuf).min(n - 1);
            if p != j {
                for k in j..=kmax {
                    let a = self.get(j, k);
                    let b = self.get(p, k);
                    self.put(j, k, b);
                    self.put(p, k, a);
                }
            }
            let pivot = self.get(j, j);
            for i in (j + 1)..=imax {
                let l = self.get(i, j) / pivot;
                self.put(i, j, l);
                if l != 0.0 {
                    for k in (j + 1)..=kmax {
                        let v = self.get(i, k) - l * self.get(j, k);
                        self.put(i, k, v);
                    }
                }
            }
        }
        Ok(BandedLu {
            inner: self,
            kuf,
            ipiv,
        })
    }
}

/// Factored form of [`Banded`]; solves by forward/back substitution.
#[derive(Debug, Clone)]
pub struct BandedLu {
    inner: Banded,
    kuf: usize,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &Array1<f64>) -> Result<Array1<f64>, BandedError> {
        let n = self.inner.n;
        if b.len() != n {
            return Err(BandedError::ShapeMismatch {
                got: b.len(),
                expect: n,
            });
        }
        let kl = self.inner.kl;
        let mut x = b.clone();
        // forward: apply pivots and L multipliers in elimination order
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let imax = (j + kl).min(n - 1);
            let xj = x[j];
            if xj != 0.0 {
                for i in (j + 1)..=imax {
                    x[i] -= self.inner.get(i, j) * xj;
                }
            }
        }
        // back substitution with U (bandwidth kuf after fill)
        for j in (0..n).rev() {
            let kmax = (j + self.kuf).min(n - 1);
            let mut s = x[j];
            for k in (j + 1)..=kmax {
                s -= self.inner.get(j, k) * x[k];
            }
            x[j] = s / self.inner.get(j, j);
        }
        Ok(x)
    }
}
