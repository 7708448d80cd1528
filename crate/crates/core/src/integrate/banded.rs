//! Banded matrices and LU factorization with partial pivoting.

/// Square matrix with `lower` sub-diagonals and `upper` super-diagonals.
///
/// Storage keeps `lower` extra super-diagonals so that the factorization can
/// absorb the fill-in caused by row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.lower >= i && j <= i + self.upper + self.lower);
        i * self.width + (j + self.lower - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower < i || j > i + self.upper + self.lower {
            0.0
        } else {
            self.data[self.index(i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j);
        self.data[k] = value;
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.lower);
            let hi = (i + self.upper).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    /// `I - c·A` with the same band structure.
    pub fn identity_minus(&self, c: f64) -> BandMatrix {
        let mut m = BandMatrix::zeros(self.n, self.lower, self.upper);
        for (dst, src) in m.data.iter_mut().zip(&self.data) {
            *dst = -c * src;
        }
        for i in 0..self.n {
            let k = m.index(i, i);
            m.data[k] += 1.0;
        }
        m
    }

    /// In-place LU factorization. Returns `None` for a singular matrix.
    pub fn factor(mut self) -> Option<BandLu> {
        let n = self.n;
        let kl = self.lower;
        let reach = self.lower + self.upper;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            pivots[k] = p;
            let right = (k + reach).min(n - 1);
            if p != k {
                for j in k..=right {
                    let a = self.index(k, j);
                    let b = self.index(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let l = self.get(i, k) / pivot;
                self.set(i, k, l);
                if l != 0.0 {
                    for j in k + 1..=right {
                        let v = self.get(i, j) - l * self.get(k, j);
                        self.set(i, j, v);
                    }
                }
            }
        }
        Some(BandLu { lu: self, pivots })
    }
}

/// Factorized band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.lu.n;
        let kl = self.lu.lower;
        let reach = self.lu.lower + self.lu.upper;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.lu.get(i, k) * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= self.lu.get(i, j) * b[j];
            }
            b[i] = s / self.lu.get(i, i);
        }
    }
}
