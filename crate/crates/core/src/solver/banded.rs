//! Banded LU factorization with partial pivoting.
//!
//! Row `i` keeps columns `i − kl ..= i + ku + kl`; the extra `kl` columns on the
//! right absorb fill-in from row interchanges.

#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SingularPivot {
    pub row: usize,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// Factorizes in place and solves `A x = b`, overwriting `b` with `x`.
    pub fn solve(mut self, b: &mut [f64]) -> Result<(), SingularPivot> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * 1e-14 * n as f64;
        let mut piv = vec![0usize; n];
        for i in 0..n {
            let last_row = (i + kl).min(n - 1);
            let last_col = (i + ku + kl).min(n - 1);
            let mut p = i;
            let mut best = self.data[self.slot(i, i)].abs();
            for r in i + 1..=last_row {
                let v = self.data[self.slot(r, i)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(SingularPivot { row: i });
            }
            piv[i] = p;
            if p != i {
                for c in i..=last_col {
                    let (a, b) = (self.slot(i, c), self.slot(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(i, i)];
            let len = last_col - i;
            let src = self.slot(i, i) + 1;
            for r in i + 1..=last_row {
                let sr = self.slot(r, i);
                let l = self.data[sr] / pivot;
                self.data[sr] = l;
                if l == 0.0 || len == 0 {
                    continue;
                }
                // Row r starts after row i in storage, so the two spans are disjoint.
                let (head, tail) = self.data.split_at_mut(sr + 1);
                for (d, s) in tail[..len].iter_mut().zip(&head[src..src + len]) {
                    *d -= l * s;
                }
            }
        }
        for i in 0..n {
            b.swap(i, piv[i]);
            let bi = b[i];
            if bi != 0.0 {
                for r in i + 1..=(i + kl).min(n - 1) {
                    b[r] -= self.data[self.slot(r, i)] * bi;
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for c in i + 1..=(i + ku + kl).min(n - 1) {
                acc -= self.data[self.slot(i, c)] * b[c];
            }
            b[i] = acc / self.data[self.slot(i, i)];
        }
        Ok(())
    }
}
