//! Truncated matrix Taylor series `Σ c_k (t − t0)^k` around a probe point.
//!
//! Basis-valued quantities of the reduction frameworks (kernels, images,
//! inverses, projectors) are carried as series so that their derivatives are
//! available without finite differencing.

use nalgebra::DMatrix;

use crate::error::{DaeError, Result};
use crate::matfun::{PiecewiseMatrixFunction, Side};
use crate::numlin::{self, TolerancePolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<DMatrix<f64>>,
}

impl Series {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        Series { coeffs }
    }

    pub fn from_pmf(f: &PiecewiseMatrixFunction, t: f64, side: Side, n: usize) -> Result<Self> {
        Ok(Series::new(f.taylor(t, side, n)?))
    }

    pub fn constant(m: DMatrix<f64>, n: usize) -> Self {
        let (r, c) = m.shape();
        let mut coeffs = vec![m];
        coeffs.extend((1..n).map(|_| DMatrix::zeros(r, c)));
        Series { coeffs }
    }

    pub fn zeros(rows: usize, cols: usize, n: usize) -> Self {
        Series::constant(DMatrix::zeros(rows, cols), n)
    }

    pub fn identity(m: usize, n: usize) -> Self {
        Series::constant(DMatrix::identity(m, m), n)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    pub fn value(&self) -> &DMatrix<f64> {
        &self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative_at(&self, k: usize) -> DMatrix<f64> {
        let mut f = 1.0;
        for j in 2..=k {
            f *= j as f64;
        }
        self.coeffs
            .get(k)
            .map(|c| c * f)
            .unwrap_or_else(|| DMatrix::zeros(self.rows(), self.cols()))
    }

    /// Evaluate the truncated polynomial at offset `h`.
    pub fn eval(&self, h: f64) -> DMatrix<f64> {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * h + c;
        }
        acc
    }

    pub fn truncate(&self, n: usize) -> Self {
        Series {
            coeffs: self.coeffs[..n.clamp(1, self.len())].to_vec(),
        }
    }

    pub fn deriv(&self) -> Self {
        if self.len() == 1 {
            return Series::zeros(self.rows(), self.cols(), 1);
        }
        Series {
            coeffs: (1..self.len())
                .map(|k| &self.coeffs[k] * k as f64)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.len().min(other.len());
        let coeffs = (0..n)
            .map(|k| {
                let mut acc = DMatrix::zeros(self.rows(), other.cols());
                for j in 0..=k {
                    acc += &self.coeffs[j] * &other.coeffs[k - j];
                }
                acc
            })
            .collect();
        Series { coeffs }
    }

    pub fn mul_const(&self, m: &DMatrix<f64>) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| c * m).collect(),
        }
    }

    pub fn const_mul(m: &DMatrix<f64>, s: &Series) -> Series {
        Series {
            coeffs: s.coeffs.iter().map(|c| m * c).collect(),
        }
    }

    fn zip(&self, other: &Series, op: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>) -> Series {
        let n = self.len().min(other.len());
        Series {
            coeffs: (0..n).map(|k| op(&self.coeffs[k], &other.coeffs[k])).collect(),
        }
    }

    pub fn add(&self, other: &Series) -> Series {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Series) -> Series {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn transpose(&self) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| c.transpose()).collect(),
        }
    }

    pub fn columns(&self, start: usize, n: usize) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| c.columns(start, n).into_owned()).collect(),
        }
    }

    pub fn rows_range(&self, start: usize, n: usize) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| c.rows(start, n).into_owned()).collect(),
        }
    }

    pub fn hstack(parts: &[&Series]) -> Series {
        let n = parts.iter().map(|p| p.len()).min().unwrap_or(1);
        Series {
            coeffs: (0..n)
                .map(|k| {
                    let cs: Vec<&DMatrix<f64>> = parts.iter().map(|p| &p.coeffs[k]).collect();
                    numlin::stack_cols(&cs)
                })
                .collect(),
        }
    }

    pub fn vstack(parts: &[&Series]) -> Series {
        let n = parts.iter().map(|p| p.len()).min().unwrap_or(1);
        Series {
            coeffs: (0..n)
                .map(|k| {
                    let cs: Vec<&DMatrix<f64>> = parts.iter().map(|p| &p.coeffs[k]).collect();
                    numlin::stack_rows(&cs)
                })
                .collect(),
        }
    }

    /// Series of the inverse of a square series with invertible value.
    pub fn inverse(&self) -> Result<Series> {
        if self.rows() != self.cols() {
            return Err(DaeError::DimensionMismatch(format!(
                "inverse of a {}x{} series",
                self.rows(),
                self.cols()
            )));
        }
        let x0 = self
            .coeffs[0]
            .clone()
            .try_inverse()
            .ok_or_else(|| DaeError::DimensionMismatch("series value is singular".into()))?;
        let mut xs: Vec<DMatrix<f64>> = vec![x0.clone()];
        for k in 1..self.len() {
            let mut acc = DMatrix::zeros(self.rows(), self.cols());
            for j in 1..=k {
                acc += &self.coeffs[j] * &xs[k - j];
            }
            xs.push(-(&x0 * acc));
        }
        Ok(Series { coeffs: xs })
    }

    /// Smooth basis `C(t)` of `ker A(t)` normalized by `K0ᵀ C = I`, where `K0`
    /// is the orthonormal kernel basis at the expansion point.
    pub fn kernel(&self, tol: &TolerancePolicy) -> Result<Series> {
        let k0 = numlin::kernel(&self.coeffs[0], tol)?.basis;
        Ok(self.kernel_from(&k0))
    }

    pub fn kernel_from(&self, k0: &DMatrix<f64>) -> Series {
        let q = self.cols();
        let kd = k0.ncols();
        let n = self.len();
        if kd == 0 {
            return Series::zeros(q, 0, n);
        }
        let k0t = k0.transpose();
        let m: Vec<DMatrix<f64>> = (0..n)
            .map(|j| {
                let bottom = if j == 0 { k0t.clone() } else { DMatrix::zeros(kd, q) };
                numlin::stack_rows(&[&self.coeffs[j], &bottom])
            })
            .collect();
        let m0p = numlin::pseudo_inverse(&m[0], &TolerancePolicy::default()).unwrap_or_else(|_| DMatrix::zeros(q, m[0].nrows()));
        let mut cs = vec![k0.clone()];
        for k in 1..n {
            let mut acc = DMatrix::zeros(m[0].nrows(), kd);
            for j in 1..=k {
                acc += &m[j] * &cs[k - j];
            }
            cs.push(-(&m0p * acc));
        }
        Series { coeffs: cs }
    }

    /// Basis of `im A(t)` as `A(t) V0 Σ0⁻¹`, with `V0` the leading right singular
    /// vectors, so the value at the expansion point is orthonormal.
    pub fn image(&self, tol: &TolerancePolicy) -> Result<Series> {
        let f = numlin::fundamental_subspaces(&self.coeffs[0], tol)?;
        let mut v = f.corange.basis.clone();
        for (j, s) in f.rank.singular_values.iter().take(v.ncols()).enumerate() {
            v.column_mut(j).scale_mut(1.0 / s);
        }
        Ok(self.mul_const(&v))
    }

    /// Smooth basis of `(im A(t))^⊥`.
    pub fn cokernel(&self, tol: &TolerancePolicy) -> Result<Series> {
        self.transpose().kernel(tol)
    }

    /// `Aᵀ(AAᵀ)⁻¹` for a full-row-rank series.
    pub fn pinv_full_row(&self) -> Result<Series> {
        let at = self.transpose();
        Ok(at.mul(&self.mul(&at).inverse()?))
    }

    /// Orthoprojector onto the column span of a full-column-rank basis series.
    pub fn orthoprojector(basis: &Series) -> Result<Series> {
        let n = basis.rows();
        if basis.cols() == 0 {
            return Ok(Series::zeros(n, n, basis.len()));
        }
        let bt = basis.transpose();
        Ok(basis.mul(&bt.mul(basis).inverse()?).mul(&bt))
    }
}
