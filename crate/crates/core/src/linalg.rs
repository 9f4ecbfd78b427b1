//! Dense row-major matrices and a Householder QR for tall, thin designs.

#![allow(clippy::needless_range_loop)]

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

/// Thin QR of an `n x k` matrix (`n >= k`) via Householder reflections.
pub(crate) struct Qr {
    /// Householder vectors below the diagonal, R on and above it.
    packed: Matrix,
    /// Diagonal of R.
    r_diag: Vec<f64>,
}

/// Column `j` is numerically dependent on columns `0..j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct DependentColumn(pub usize);

impl Qr {
    /// Factorizes `a`. A column whose residual norm after projecting out the
    /// previous columns is at most `rel_tol` times its own norm is reported
    /// as dependent.
    pub fn new(a: &Matrix, rel_tol: f64) -> Result<Self, DependentColumn> {
        let (n, k) = (a.rows(), a.cols());
        debug_assert!(n >= k);
        let col_norms: Vec<f64> = (0..k).map(|j| norm(&a.column(j))).collect();
        let mut m = a.clone();
        let mut r_diag = vec![0.0; k];

        for j in 0..k {
            let mut sub_norm = 0.0f64;
            for i in j..n {
                sub_norm = sub_norm.hypot(m.get(i, j));
            }
            if col_norms[j] == 0.0 || sub_norm <= rel_tol * col_norms[j] {
                return Err(DependentColumn(j));
            }
            let alpha = if m.get(j, j) > 0.0 {
                -sub_norm
            } else {
                sub_norm
            };
            // v = x - alpha e1, stored in place and normalized so v[j] = 1
            let v0 = m.get(j, j) - alpha;
            for i in j + 1..n {
                m.set(i, j, m.get(i, j) / v0);
            }
            let tau = -v0 / alpha;
            for c in j + 1..k {
                let mut s = m.get(j, c);
                for i in j + 1..n {
                    s += m.get(i, j) * m.get(i, c);
                }
                s *= tau;
                m.set(j, c, m.get(j, c) - s);
                for i in j + 1..n {
                    m.set(i, c, m.get(i, c) - s * m.get(i, j));
                }
            }
            m.set(j, j, tau);
            r_diag[j] = alpha;
        }
        Ok(Qr { packed: m, r_diag })
    }

    fn k(&self) -> usize {
        self.r_diag.len()
    }

    /// Applies `Q^T` to `y` in place.
    pub fn apply_qt(&self, y: &mut [f64]) {
        let n = self.packed.rows();
        for j in 0..self.k() {
            let tau = self.packed.get(j, j);
            let mut s = y[j];
            for i in j + 1..n {
                s += self.packed.get(i, j) * y[i];
            }
            s *= tau;
            y[j] -= s;
            for i in j + 1..n {
                y[i] -= s * self.packed.get(i, j);
            }
        }
    }

    /// Applies `Q` to `y` in place.
    pub fn apply_q(&self, y: &mut [f64]) {
        let n = self.packed.rows();
        for j in (0..self.k()).rev() {
            let tau = self.packed.get(j, j);
            let mut s = y[j];
            for i in j + 1..n {
                s += self.packed.get(i, j) * y[i];
            }
            s *= tau;
            y[j] -= s;
            for i in j + 1..n {
                y[i] -= s * self.packed.get(i, j);
            }
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => self.r_diag[i],
            std::cmp::Ordering::Less => self.packed.get(i, j),
            std::cmp::Ordering::Greater => 0.0,
        }
    }

    /// Least-squares solution of `A x = y`.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        self.back_substitute(&qty[..self.k()])
    }

    fn back_substitute(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k();
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = b[i];
            for j in i + 1..k {
                s -= self.r(i, j) * x[j];
            }
            x[i] = s / self.r(i, i);
        }
        x
    }

    /// `R^{-1}` (upper triangular, `k x k`).
    pub fn r_inverse(&self) -> Matrix {
        let k = self.k();
        let mut inv = Matrix::zeros(k, k);
        for c in 0..k {
            let mut e = vec![0.0; k];
            e[c] = 1.0;
            let col = self.back_substitute(&e);
            for (r, v) in col.into_iter().enumerate() {
                inv.set(r, c, v);
            }
        }
        inv
    }

    /// The first `k` columns of `Q` as an `n x k` matrix.
    pub fn thin_q(&self) -> Matrix {
        let (n, k) = (self.packed.rows(), self.k());
        let mut q = Matrix::zeros(n, k);
        for c in 0..k {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            self.apply_q(&mut e);
            for (r, v) in e.into_iter().enumerate() {
                q.set(r, c, v);
            }
        }
        q
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.hypot(*x))
}
