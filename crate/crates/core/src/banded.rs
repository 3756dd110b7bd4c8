//! Banded complex LU with partial pivoting (column-major band storage, the
//! `gbtrf`/`gbtrs` layout).

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::{Error, Result, C64};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ldab, ab: alloc::vec![C64::new(0.0, 0.0); ldab * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ldab
    }

    /// Accumulates `v` into entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(i + self.ku >= j && j + self.kl >= i, "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i + self.ku < j || j + self.kl < i {
            return C64::new(0.0, 0.0);
        }
        self.ab[self.idx(i, j)]
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = alloc::vec![C64::new(0.0, 0.0); self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.ab[self.idx(i, j)] * x[j];
            }
        }
        y
    }

    /// In-place factorisation. `pivot_tol` is relative to the largest entry of
    /// the pivot column's row band before elimination.
    pub fn factor(mut self, pivot_tol: f64) -> Result<BandLu> {
        let n = self.n;
        let kv = self.kl + self.ku;
        let ld = self.ldab;
        let mut ipiv = alloc::vec![0usize; n];
        let mut row_norm = alloc::vec![0.0f64; n];
        for j in 0..n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(n - 1);
            for i in lo..=hi {
                let v = self.ab[self.idx(i, j)].norm();
                if v > row_norm[i] {
                    row_norm[i] = v;
                }
            }
        }
        let mut ju = 0usize;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let col = j * ld;
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let v = self.ab[col + kv + r].norm();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            let scale = row_norm[j + jp].max(row_norm[j]).max(f64::MIN_POSITIVE);
            if best <= pivot_tol * scale || best == 0.0 {
                return Err(Error::SingularSystem { row: j });
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for cc in j..=ju {
                    let a = kv + j - cc + cc * ld;
                    let b = kv + j + jp - cc + cc * ld;
                    self.ab.swap(a, b);
                }
                row_norm.swap(j, j + jp);
            }
            let piv = self.ab[col + kv];
            let inv = C64::new(1.0, 0.0) / piv;
            for r in 1..=km {
                self.ab[col + kv + r] *= inv;
            }
            for cc in (j + 1)..=ju {
                let f = self.ab[kv + j - cc + cc * ld];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for r in 1..=km {
                    let l = self.ab[col + kv + r];
                    self.ab[kv + j + r - cc + cc * ld] -= l * f;
                }
            }
        }
        Ok(BandLu { m: self, ipiv })
    }
}

/// Factorised band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [C64]) {
        let n = self.m.n;
        let kl = self.m.kl;
        let kv = self.m.kl + self.m.ku;
        let ld = self.m.ldab;
        let ab = &self.m.ab;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let lm = kl.min(n - 1 - j);
            let bj = b[j];
            for r in 1..=lm {
                b[j + r] -= ab[kv + r + j * ld] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= ab[kv + j * ld];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= ab[kv + i - j + j * ld] * bj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c;

    #[test]
    fn solves_pivoting_band_system() {
        let n = 40;
        let mut a = BandMatrix::zeros(n, 2, 3);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 3).min(n - 1) {
                let v = c(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i + 2 * j) % 5) as f64 - 2.0);
                a.add(i, j, v);
            }
            // tiny diagonal forces row swaps
            a.add(i, i, c(1e-3, 0.0));
        }
        let x: Vec<C64> = (0..n).map(|i| c(i as f64, -(i as f64) * 0.5)).collect();
        let mut b = a.matvec(&x);
        let lu = a.clone().factor(1e-14).unwrap();
        lu.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).norm() < 1e-9 * (1.0 + x[i].norm()), "{i}: {} vs {}", b[i], x[i]);
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 0, c(1.0, 0.0));
        a.add(1, 1, c(0.0, 0.0));
        a.add(2, 2, c(1.0, 0.0));
        assert!(matches!(a.factor(1e-14), Err(Error::SingularSystem { .. })));
    }
}
