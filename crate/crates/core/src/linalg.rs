//! Minimal linear algebra: sparse row vectors and a dense symmetric
//! eigensolver (cyclic Jacobi). Measurement rows are sparse almost by
//! definition (each touches a handful of field components), so nothing
//! here ever materializes a `P x M` matrix.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Sparse vector with strictly ascending column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec<T> {
    dim: usize,
    entries: Vec<(usize, T)>,
}

impl<T: Real> SparseVec<T> {
    /// Builds from `(index, value)` pairs. Zero values are dropped,
    /// duplicate indices rejected.
    pub fn new(dim: usize, mut entries: Vec<(usize, T)>) -> Result<Self> {
        entries.retain(|&(_, v)| v != T::zero());
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Config(format!(
                    "duplicate sparse index {}",
                    w[0].0
                )));
            }
        }
        if let Some(&(i, _)) = entries.last() {
            if i >= dim {
                return Err(Error::Config(format!(
                    "sparse index {} out of range (dim {})",
                    i, dim
                )));
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn from_dense(values: &[T]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != T::zero())
            .map(|(i, &v)| (i, v))
            .collect();
        Self {
            dim: values.len(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.entries.iter().copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }

    /// `Some(index)` when the row is a canonical selector `e_m`.
    pub fn as_unit_selector(&self) -> Option<usize> {
        match self.entries.as_slice() {
            [(i, v)] if *v == T::one() => Some(*i),
            _ => None,
        }
    }

    pub fn dot(&self, dense: &[T]) -> T {
        debug_assert!(dense.len() >= self.dim);
        self.entries
            .iter()
            .map(|&(i, v)| v * dense[i])
            .sum()
    }

    pub fn norm_sq(&self) -> T {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// `dense += scale * self`
    pub fn scatter_add(&self, dense: &mut [T], scale: T) {
        for &(i, v) in &self.entries {
            dense[i] += scale * v;
        }
    }

    /// Re-indexes entries through `map` (old index -> new index).
    /// Fails if a nonzero entry has no image.
    pub fn remap<F>(&self, new_dim: usize, map: F) -> Result<Self>
    where
        F: Fn(usize) -> Option<usize>,
    {
        let mut entries = Vec::with_capacity(self.entries.len());
        for &(i, v) in &self.entries {
            match map(i) {
                Some(j) => entries.push((j, v)),
                None => {
                    return Err(Error::Assumption(format!(
                        "nonzero entry at index {} has no image under restriction",
                        i + 1
                    )))
                }
            }
        }
        SparseVec::new(new_dim, entries)
    }
}

/// Dense symmetric matrix, row-major full storage.
#[derive(Debug, Clone)]
pub struct SymMat<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SymMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    /// Rank-one update `self += scale * row * row^T`.
    pub fn add_outer(&mut self, row: &SparseVec<T>, scale: T) {
        for (i, vi) in row.iter() {
            for (j, vj) in row.iter() {
                self.data[i * self.n + j] += scale * vi * vj;
            }
        }
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.data[i * self.n..(i + 1) * self.n].iter().copied().sum()
    }

    /// All eigenvalues, ascending, by cyclic Jacobi rotations.
    /// Adequate for the dense sizes this crate ever sees (N <= 2000
    /// graphs, desk-scale Grammians).
    pub fn eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![self.data[0]];
        }
        let mut a = self.data.clone();
        let idx = |i: usize, j: usize| i * n + j;
        let eps = real::<T>(1e-14);

        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut diag = T::zero();
            for i in 0..n {
                diag += a[idx(i, i)] * a[idx(i, i)];
                for j in (i + 1)..n {
                    off += a[idx(i, j)] * a[idx(i, j)];
                }
            }
            let scale = (diag + off + off).sqrt().max(T::one());
            if off.sqrt() <= eps * scale {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a[idx(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = a[idx(p, p)];
                    let aqq = a[idx(q, q)];
                    let tau = (aqq - app) / (real::<T>(2.0) * apq);
                    let t = if tau >= T::zero() {
                        T::one() / (tau + (T::one() + tau * tau).sqrt())
                    } else {
                        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[idx(k, p)];
                        let akq = a[idx(k, q)];
                        a[idx(k, p)] = c * akp - s * akq;
                        a[idx(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[idx(p, k)];
                        let aqk = a[idx(q, k)];
                        a[idx(p, k)] = c * apk - s * aqk;
                        a[idx(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eigs: Vec<T> = (0..n).map(|i| a[idx(i, i)]).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).expect("NaN eigenvalue"));
        eigs
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }
}

pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}
