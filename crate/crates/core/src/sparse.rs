//! Compressed sparse row matrices, a Jacobi-preconditioned conjugate
//! gradient solver and an envelope (profile) Cholesky factorization.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Square `n×n` matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            cols: (0..d.len()).collect(),
            vals: d.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Principal submatrix on `keep` (in that order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if map[j] != usize::MAX {
                    triplets.push((new_i, map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), triplets)
    }
}

/// Symmetric operator usable by [`pcg`].
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y)
    }

    fn diagonal(&self) -> Vec<f64> {
        CsrMatrix::diagonal(self)
    }
}

/// `base + diag(shift)`.
pub struct Shifted<'a> {
    pub base: &'a CsrMatrix,
    pub shift: &'a [f64],
}

impl LinearOperator for Shifted<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.mul_vec_into(x, y);
        for ((yi, s), xi) in y.iter_mut().zip(self.shift).zip(x) {
            *yi += s * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.base.diagonal().iter().zip(self.shift).map(|(d, s)| d + s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Default iteration cap `50·√n + 1000`.
pub fn default_cg_cap(n: usize) -> usize {
    50 * (n as f64).sqrt().ceil() as usize + 1000
}

/// Conjugate gradients with a diagonal (Jacobi) preconditioner, started from
/// zero. Stops once `‖b − Ax‖ ≤ tol·‖b‖`.
pub fn pcg<O: LinearOperator>(op: &O, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgReport)> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::Dimension { expected: n, found: rhs.len() });
    }
    let mut x = vec![0.0; n];
    let b_norm = norm2(rhs);
    if b_norm == 0.0 {
        return Ok((x, CgReport { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = op
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| if d > 0.0 { Ok(1.0 / d) } else { Err(Error::NotPositiveDefinite { index: i, pivot: d }) })
        .collect::<Result<_>>()?;
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { index: it, pivot: pap });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = norm2(&r) / b_norm;
        if rel <= tol {
            return Ok((x, CgReport { iterations: it, relative_residual: rel }));
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::LinearSolver { iterations: max_iter, residual: rel })
}

/// Solves a symmetric positive definite system to relative residual `tol`
/// with the default iteration cap.
pub fn solve_spd(op: &CsrMatrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("solver tolerance must be positive, got {tol}")));
    }
    pcg(op, rhs, tol, default_cg_cap(op.dim())).map(|(x, _)| x)
}

/// Cholesky factor stored row by row over each row's envelope
/// `first[i]..=i`. Fill-in never leaves the envelope, so the factor of a
/// banded stiffness matrix costs `O(n·b²)`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    offset: Vec<usize>,
    l: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors `a + diag(shift)`; only the lower triangle of `a` is read.
    pub fn factor(a: &CsrMatrix, shift: Option<&[f64]>) -> Result<Self> {
        let n = a.dim();
        let mut first = vec![0; n];
        let mut offset = vec![0; n + 1];
        for i in 0..n {
            first[i] = a.row(i).map(|(j, _)| j).filter(|&j| j <= i).min().unwrap_or(i);
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut l = vec![0.0; offset[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    l[offset[i] + j - first[i]] = v;
                }
            }
            if let Some(s) = shift {
                l[offset[i + 1] - 1] += s[i];
            }
        }
        for i in 0..n {
            let fi = first[i];
            let row_start = offset[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (head, tail) = l.split_at_mut(row_start);
                let row_i = &tail[..(i - fi + 1)];
                let row_j = &head[offset[j]..offset[j + 1]];
                let s: f64 = row_i[k0 - fi..j - fi]
                    .iter()
                    .zip(&row_j[k0 - fj..j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                let ljj = row_j[j - fj];
                tail[j - fi] = (tail[j - fi] - s) / ljj;
            }
            let row_i = &l[row_start..offset[i + 1]];
            let diag = row_i[i - fi] - row_i[..i - fi].iter().map(|v| v * v).sum::<f64>();
            if !(diag > 0.0) {
                return Err(Error::NotPositiveDefinite { index: i, pivot: diag });
            }
            l[offset[i + 1] - 1] = diag.sqrt();
        }
        Ok(Self { first, offset, l })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.l[self.offset[i]..self.offset[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&b[fi..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.l[self.offset[i]..self.offset[i + 1]];
            b[i] /= row[i - fi];
            let xi = b[i];
            for (bk, lik) in b[fi..i].iter_mut().zip(&row[..i - fi]) {
                *bk -= lik * xi;
            }
        }
    }
}
