//! Banded LU factorization with partial pivoting.

use crate::error::{HoroError, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals. Each row keeps
/// `kl` extra columns on the right for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Whether `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Sets an entry; entries outside the band are rejected.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// Factors in place and returns the LU object.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut perm = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(HoroError::SingularMatrix { pivot: k });
            }
            perm[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandLu { m: self, perm })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    perm: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.perm[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + m.kl).min(n - 1);
            let xk = x[k];
            for i in k + 1..=last {
                x[i] -= m.data[m.idx(i, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + m.kl + m.ku).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=jmax {
                acc -= m.data[m.idx(k, j)] * x[j];
            }
            x[k] = acc / m.data[m.idx(k, k)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tridiagonal_poisson() {
        let n = 50;
        let mut a = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = a.factor().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn random_band_needing_pivoting() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(30usize, 2usize, 3usize), (40, 5, 1), (25, 4, 4)] {
            let mut a = BandMatrix::zeros(n, kl, ku);
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    // small diagonal forces row exchanges
                    let v: f64 = rng.random_range(-1.0..1.0);
                    a.set(i, j, if i == j { 1e-3 * v } else { v });
                }
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = a.mul_vec(&x_true);
            let x = a.factor().unwrap().solve(&b);
            let err = x.iter().zip(&x_true).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "n={n} err={err}");
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = BandMatrix::zeros(3, 1, 1);
        assert!(a.factor().is_err());
    }
}
