//! Dense N-way arrays and the matricization helpers used by the fitters.
//!
//! Storage is column-major in the tensor sense: the first mode varies fastest.
//! The mode-n unfolding enumerates the remaining modes with the lowest-numbered
//! mode varying fastest, which pairs with the Khatri-Rao product
//! `A_N ⊙ … ⊙ A_{n+1} ⊙ A_{n-1} ⊙ … ⊙ A_1` (so that `X_(n) = A_n H^T`).

use crate::error::{Error, Result};
use crate::model::FactorMatrix;

/// Default cap on the number of entries of any materialized tensor.
pub const DEFAULT_DENSE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize], cap: usize) -> Result<Self> {
        let len = checked_len(shape, cap)?;
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        })
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() || shape.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "shape {:?} does not match {} values",
                shape,
                data.len()
            )));
        }
        Ok(DenseTensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        let mut stride = 1;
        for (&i, &s) in idx.iter().zip(&self.shape) {
            lin += i * stride;
            stride *= s;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let lin = self.linear_index(idx);
        self.data[lin] = value;
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Visits every multi-index in storage order.
    pub fn for_each_index(&self, mut f: impl FnMut(usize, &[usize])) {
        let mut idx = vec![0usize; self.shape.len()];
        for lin in 0..self.data.len() {
            f(lin, &idx);
            advance(&mut idx, &self.shape);
        }
    }

    /// Mode-`mode` unfolding as a row-major `I_mode × (Π_{k≠mode} I_k)` matrix.
    pub fn unfold(&self, mode: usize) -> Vec<Vec<f64>> {
        let rows = self.shape[mode];
        let cols = self.data.len() / rows;
        let mut out = vec![vec![0.0; cols]; rows];
        self.for_each_index(|lin, idx| {
            let mut col = 0;
            let mut stride = 1;
            for (k, (&i, &s)) in idx.iter().zip(&self.shape).enumerate() {
                if k != mode {
                    col += i * stride;
                    stride *= s;
                }
            }
            out[idx[mode]][col] = self.data[lin];
        });
        out
    }
}

/// Increments a multi-index with the first coordinate fastest.
pub(crate) fn advance(idx: &mut [usize], shape: &[usize]) {
    for (i, &s) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < s {
            return;
        }
        *i = 0;
    }
}

pub(crate) fn checked_len(shape: &[usize], cap: usize) -> Result<usize> {
    let mut len: usize = 1;
    for &s in shape {
        len = len.checked_mul(s).ok_or(Error::Capacity {
            requested: usize::MAX,
            cap,
        })?;
    }
    if len > cap {
        return Err(Error::Capacity {
            requested: len,
            cap,
        });
    }
    Ok(len)
}

/// Khatri-Rao product of the given factors, ordered so the first factor's row
/// index varies fastest: row `i_1 + I_1 i_2 + …` holds `Π_k A_k(i_k, :)`.
pub fn khatri_rao(factors: &[&FactorMatrix]) -> Vec<Vec<f64>> {
    let rank = factors.first().map_or(0, |f| f.cols());
    let shape: Vec<usize> = factors.iter().map(|f| f.rows()).collect();
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..total {
        let mut row = vec![1.0; rank];
        for (f, &i) in factors.iter().zip(&idx) {
            for (r, v) in row.iter_mut().zip(f.row(i)) {
                *r *= v;
            }
        }
        out.push(row);
        advance(&mut idx, &shape);
    }
    out
}

/// Matricized tensor times Khatri-Rao product, `X_(mode) · (⊙_{k≠mode} A_k)`,
/// computed in one pass over the tensor without forming the Khatri-Rao matrix.
/// Returns a row-major `I_mode × R` matrix.
pub fn mttkrp(tensor: &DenseTensor, factors: &[FactorMatrix], mode: usize) -> Vec<f64> {
    let rank = factors[0].cols();
    let mut out = vec![0.0; tensor.shape()[mode] * rank];
    let mut prod = vec![0.0; rank];
    tensor.for_each_index(|lin, idx| {
        let x = tensor.data[lin];
        if x == 0.0 {
            return;
        }
        prod.iter_mut().for_each(|p| *p = x);
        for (k, f) in factors.iter().enumerate() {
            if k != mode {
                for (p, v) in prod.iter_mut().zip(f.row(idx[k])) {
                    *p *= v;
                }
            }
        }
        let row = &mut out[idx[mode] * rank..(idx[mode] + 1) * rank];
        for (o, p) in row.iter_mut().zip(&prod) {
            *o += p;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factor(rows: usize, cols: usize, seed: u64) -> FactorMatrix {
        let vals: Vec<f64> = (0..rows * cols)
            .map(|k| ((k as u64 * 2654435761 + seed * 97) % 1000) as f64 / 1000.0)
            .collect();
        FactorMatrix::from_row_major(rows, cols, vals).unwrap()
    }

    #[test]
    fn unfolding_pairs_with_khatri_rao() {
        let shape = [3, 4, 2];
        let rank = 2;
        let fs: Vec<FactorMatrix> = shape
            .iter()
            .enumerate()
            .map(|(n, &s)| factor(s, rank, n as u64 + 1))
            .collect();
        let mut t = DenseTensor::zeros(&shape, DEFAULT_DENSE_CAP).unwrap();
        let mut idx = vec![0; 3];
        for lin in 0..t.len() {
            let v: f64 = (0..rank)
                .map(|h| (0..3).map(|n| fs[n].get(idx[n], h)).product::<f64>())
                .sum();
            t.as_mut_slice()[lin] = v;
            advance(&mut idx, &shape);
        }
        for mode in 0..3 {
            let unf = t.unfold(mode);
            let others: Vec<&FactorMatrix> =
                (0..3).filter(|&k| k != mode).map(|k| &fs[k]).collect();
            let kr = khatri_rao(&others);
            assert_eq!(kr.len(), unf[0].len());
            for (i, row) in unf.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    let pred: f64 = (0..rank).map(|h| fs[mode].get(i, h) * kr[j][h]).sum();
                    assert!((x - pred).abs() < 1e-12);
                }
            }
            // mttkrp agrees with the explicit unfold-times-KR route
            let m = mttkrp(&t, &fs, mode);
            for (i, row) in unf.iter().enumerate() {
                for h in 0..rank {
                    let direct: f64 = row.iter().zip(&kr).map(|(x, k)| x * k[h]).sum();
                    assert!((m[i * rank + h] - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn capacity_is_enforced() {
        assert!(matches!(
            DenseTensor::zeros(&[10, 10], 50),
            Err(Error::Capacity { requested: 100, .. })
        ));
    }
}
