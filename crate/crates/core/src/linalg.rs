//! Small dense linear algebra: vector helpers, a square matrix type with
//! Cholesky/LU, Householder least squares, and a block-tridiagonal Cholesky
//! solver for the discrete action Hessian.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// `y += s * x`
#[inline]
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a += s * b);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(s: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], v)).collect()
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn add_scaled(&mut self, s: f64, other: &Mat) {
        axpy(s, &other.data, &mut self.data);
    }

    /// Lower Cholesky factor, or `None` when the matrix is not positive definite.
    pub fn cholesky(&self) -> Option<Cholesky> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Cholesky { n, l })
    }

    /// Solves `A x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
            if a[piv * n + col] == 0.0 {
                return None;
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                x.swap(col, piv);
            }
            for i in col + 1..n {
                let f = a[i * n + col] / a[col * n + col];
                if f != 0.0 {
                    for k in col..n {
                        a[i * n + k] -= f * a[col * n + k];
                    }
                    x[i] -= f * x[col];
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= a[i * n + k] * x[k];
            }
            x[i] = s / a[i * n + i];
        }
        Some(x)
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Diagonal of the factor `L`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.l[i * self.n + i]).collect()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `A⁻¹ B` for a square `B`.
    pub fn solve_mat(&self, b: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

/// Symmetric block-tridiagonal matrix with diagonal blocks `diag[i]` and
/// upper blocks `upper[i]` coupling block `i` to block `i + 1`.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    pub diag: Vec<Mat>,
    pub upper: Vec<Mat>,
}

impl BlockTridiagonal {
    /// Block Cholesky solve. Returns `None` when the matrix is not positive
    /// definite.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let m = self.diag.len();
        if m == 0 {
            return Some(Vec::new());
        }
        let b = self.diag[0].size();
        let mut factors: Vec<Cholesky> = Vec::with_capacity(m);
        let mut g: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut schur = self.diag[0].clone();
        let mut gi = rhs[0..b].to_vec();
        for i in 0..m {
            let ch = schur.cholesky()?;
            if i + 1 < m {
                let coupling = &self.upper[i];
                // W = S_i⁻¹ B_i
                let w = ch.solve_mat(coupling);
                let mut next = self.diag[i + 1].clone();
                next.add_scaled(-1.0, &coupling.transpose().mul(&w));
                let sg = ch.solve(&gi);
                let mut gn = rhs[(i + 1) * b..(i + 2) * b].to_vec();
                let corr = coupling.transpose().mul_vec(&sg);
                axpy(-1.0, &corr, &mut gn);
                factors.push(ch);
                g.push(gi);
                schur = next;
                gi = gn;
            } else {
                factors.push(ch);
                g.push(gi.clone());
            }
        }
        let mut x = vec![0.0; m * b];
        let last = factors[m - 1].solve(&g[m - 1]);
        x[(m - 1) * b..].copy_from_slice(&last);
        for i in (0..m - 1).rev() {
            let next = x[(i + 1) * b..(i + 2) * b].to_vec();
            let mut r = g[i].clone();
            axpy(-1.0, &self.upper[i].mul_vec(&next), &mut r);
            let xi = factors[i].solve(&r);
            x[i * b..(i + 1) * b].copy_from_slice(&xi);
        }
        Some(x)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        let b = if m > 0 { self.diag[0].size() } else { 0 };
        let mut out = vec![0.0; m * b];
        for i in 0..m {
            let yi = self.diag[i].mul_vec(&v[i * b..(i + 1) * b]);
            axpy(1.0, &yi, &mut out[i * b..(i + 1) * b]);
            if i + 1 < m {
                let up = self.upper[i].mul_vec(&v[(i + 1) * b..(i + 2) * b]);
                axpy(1.0, &up, &mut out[i * b..(i + 1) * b]);
                let lo = self.upper[i].transpose().mul_vec(&v[i * b..(i + 1) * b]);
                axpy(1.0, &lo, &mut out[(i + 1) * b..(i + 2) * b]);
            }
        }
        out
    }
}

/// Least-squares solution of `A c ≈ y` for a column-major `rows × cols`
/// design matrix, via Householder QR. Returns `None` for rank-deficient input.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = columns.len();
    let m = y.len();
    if k == 0 || m < k {
        return None;
    }
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut b = y.to_vec();
    for j in 0..k {
        let alpha = {
            let s: f64 = a[j][j..].iter().map(|v| v * v).sum();
            let s = s.sqrt();
            if a[j][j] > 0.0 {
                -s
            } else {
                s
            }
        };
        if alpha == 0.0 {
            return None;
        }
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(j) {
            let s = 2.0 * dot(&v, &col[j..]) / vn;
            axpy(-s, &v, &mut col[j..]);
        }
        let s = 2.0 * dot(&v, &b[j..]) / vn;
        axpy(-s, &v, &mut b[j..]);
    }
    let scale = a.iter().enumerate().fold(0.0, |mx: f64, (j, c)| mx.max(c[j].abs()));
    let mut c = vec![0.0; k];
    for i in (0..k).rev() {
        let diag = a[i][i];
        if diag.abs() <= 1e-13 * scale {
            return None;
        }
        let mut s = b[i];
        for j in i + 1..k {
            s -= a[j][i] * c[j];
        }
        c[i] = s / diag;
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_and_cholesky_agree() {
        let mut a = Mat::zeros(3);
        let vals = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = vals[i * 3 + j];
            }
        }
        let b = [1.0, -2.0, 0.5];
        let x1 = a.solve(&b).unwrap();
        let x2 = a.cholesky().unwrap().solve(&b);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-14);
        }
        let r = a.mul_vec(&x1);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_detects_indefinite() {
        let a = Mat::diag(&[1.0, -1.0]);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn block_tridiagonal_solve_matches_product() {
        let m = 5;
        let mut diag = Vec::new();
        let mut upper = Vec::new();
        for i in 0..m {
            let mut d = Mat::identity(2);
            d[(0, 0)] = 4.0 + i as f64;
            d[(1, 1)] = 3.0;
            d[(0, 1)] = 0.3;
            d[(1, 0)] = 0.3;
            diag.push(d);
            if i + 1 < m {
                let mut u = Mat::zeros(2);
                u[(0, 0)] = -1.0;
                u[(1, 1)] = -0.7;
                u[(0, 1)] = 0.1;
                upper.push(u);
            }
        }
        let t = BlockTridiagonal { diag, upper };
        let rhs: Vec<f64> = (0..2 * m).map(|k| (k as f64).sin()).collect();
        let x = t.solve(&rhs).unwrap();
        let back = t.mul_vec(&x);
        for (u, v) in back.iter().zip(&rhs) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_recovers_line() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 - 0.25 * x).collect();
        let ones = vec![1.0; t.len()];
        let c = least_squares(&[ones, t], &y).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 0.25).abs() < 1e-12);
    }
}
