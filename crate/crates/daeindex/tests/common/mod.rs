//! Exact arithmetic used as an independent check on the floating point code:
//! polynomial matrices over ℚ, their derivative arrays, ranks and kernels over
//! ℚ, and ranks modulo large primes for the bigger random matrices.
#![allow(dead_code)]

use daeindex::PiecewiseMatrixFunction as Pmf;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(x: f64) -> Q {
    BigRational::from_float(x).expect("finite value")
}

pub fn qi(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

/// Dense row-major matrix over ℚ.
#[derive(Clone, Debug, PartialEq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<Q>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat {
            rows,
            cols,
            a: vec![Q::zero(); rows * cols],
        }
    }

    pub fn from_ints(rows: usize, cols: usize, v: &[i64]) -> Self {
        assert_eq!(v.len(), rows * cols);
        QMat {
            rows,
            cols,
            a: v.iter().map(|&x| qi(x)).collect(),
        }
    }

    pub fn from_f64(m: &DMatrix<f64>) -> Self {
        let mut out = QMat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                *out.at_mut(i, j) = q(m[(i, j)]);
            }
        }
        out
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).to_f64().unwrap())
    }

    pub fn at(&self, i: usize, j: usize) -> &Q {
        &self.a[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Q {
        &mut self.a[i * self.cols + j]
    }

    pub fn add_scaled(&mut self, other: &QMat, s: &Q) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += y * s;
        }
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = a * other.at(k, j);
                    *out.at_mut(i, j) += v;
                }
            }
        }
        out
    }

    pub fn put(&mut self, r0: usize, c0: usize, blk: &QMat) {
        for i in 0..blk.rows {
            for j in 0..blk.cols {
                *self.at_mut(r0 + i, c0 + j) = blk.at(i, j).clone();
            }
        }
    }

    pub fn hcat(&self, other: &QMat) -> QMat {
        assert_eq!(self.rows, other.rows);
        let mut out = QMat::zeros(self.rows, self.cols + other.cols);
        out.put(0, 0, self);
        out.put(0, self.cols, other);
        out
    }

    pub fn cols_from(&self, c0: usize) -> QMat {
        let mut out = QMat::zeros(self.rows, self.cols - c0);
        for i in 0..self.rows {
            for j in c0..self.cols {
                *out.at_mut(i, j - c0) = self.at(i, j).clone();
            }
        }
        out
    }
}

/// Reduced row echelon form; returns the pivot columns.
fn rref(m: &mut QMat) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row == m.rows {
            break;
        }
        let Some(p) = (row..m.rows).find(|&i| !m.at(i, col).is_zero()) else {
            continue;
        };
        for j in 0..m.cols {
            m.a.swap(row * m.cols + j, p * m.cols + j);
        }
        let inv = m.at(row, col).recip();
        for j in col..m.cols {
            let v = m.at(row, j) * &inv;
            *m.at_mut(row, j) = v;
        }
        for i in 0..m.rows {
            if i == row || m.at(i, col).is_zero() {
                continue;
            }
            let f = m.at(i, col).clone();
            for j in col..m.cols {
                let v = m.at(row, j) * &f;
                *m.at_mut(i, j) -= v;
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

pub fn rank_q(m: &QMat) -> usize {
    rref(&mut m.clone()).len()
}

/// Kernel basis over ℚ, one vector per free column.
pub fn kernel_q(m: &QMat) -> Vec<Vec<Q>> {
    let mut r = m.clone();
    let pivots = rref(&mut r);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); m.cols];
            v[f] = Q::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -r.at(row, f).clone();
            }
            v
        })
        .collect()
}

/// Every kernel vector has a vanishing leading block of size `block`.
pub fn one_full_q(m: &QMat, block: usize) -> bool {
    kernel_q(m).iter().all(|v| v[..block].iter().all(Zero::is_zero))
}

const PRIMES: [u64; 2] = [(1 << 61) - 1, 1_000_000_007];

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % p as u128) as u64;
        }
        b = ((b as u128 * b as u128) % p as u128) as u64;
        e >>= 1;
    }
    acc
}

fn to_mod(x: &Q, p: u64) -> u64 {
    let pm = BigInt::from(p);
    let n = ((x.numer() % &pm) + &pm) % &pm;
    let d = ((x.denom() % &pm) + &pm) % &pm;
    let d = d.to_u64().unwrap();
    assert!(d != 0, "denominator divisible by the modulus");
    let inv = pow_mod(d, p - 2, p);
    ((n.to_u64().unwrap() as u128 * inv as u128) % p as u128) as u64
}

fn rank_mod_p(m: &QMat, p: u64) -> usize {
    let mut a: Vec<Vec<u64>> = (0..m.rows).map(|i| (0..m.cols).map(|j| to_mod(m.at(i, j), p)).collect()).collect();
    let mut rank = 0;
    for col in 0..m.cols {
        let Some(piv) = (rank..m.rows).find(|&i| a[i][col] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = pow_mod(a[rank][col], p - 2, p);
        for i in rank + 1..m.rows {
            if a[i][col] == 0 {
                continue;
            }
            let f = ((a[i][col] as u128 * inv as u128) % p as u128) as u64;
            for j in col..m.cols {
                let sub = ((f as u128 * a[rank][j] as u128) % p as u128) as u64;
                a[i][j] = (a[i][j] + p - sub) % p;
            }
        }
        rank += 1;
        if rank == m.rows {
            break;
        }
    }
    rank
}

/// Rank over ℚ through reductions modulo two large primes. A prime can only
/// lower the rank, so the larger of the two is taken.
pub fn rank_mod(m: &QMat) -> usize {
    PRIMES.iter().map(|&p| rank_mod_p(m, p)).max().unwrap()
}

/// Polynomial matrix `Σ c_k t^k` with rational coefficients.
#[derive(Clone, Debug)]
pub struct QPoly {
    pub rows: usize,
    pub cols: usize,
    pub coeffs: Vec<QMat>,
}

fn falling(k: usize, j: usize) -> i64 {
    ((k - j + 1)..=k).map(|x| x as i64).product()
}

pub fn binom(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

impl QPoly {
    pub fn new(coeffs: Vec<QMat>) -> Self {
        let (rows, cols) = (coeffs[0].rows, coeffs[0].cols);
        QPoly { rows, cols, coeffs }
    }

    pub fn constant(m: QMat) -> Self {
        QPoly::new(vec![m])
    }

    /// The polynomial piece of `f` whose interval contains `t` in its interior.
    pub fn from_pmf(f: &Pmf, t: f64) -> Self {
        let seg = f
            .segments()
            .iter()
            .find(|s| s.t0 < t && t < s.t1 || (s.t0 <= t && t <= s.t1 && f.segments().len() == 1))
            .expect("t inside one piece");
        QPoly::new(seg.coeffs.iter().map(QMat::from_f64).collect())
    }

    /// `f^(j)(t)`.
    pub fn deriv_at(&self, t: &Q, j: usize) -> QMat {
        let mut out = QMat::zeros(self.rows, self.cols);
        for (k, c) in self.coeffs.iter().enumerate().skip(j) {
            let mut s = qi(falling(k, j));
            for _ in 0..k - j {
                s *= t;
            }
            out.add_scaled(c, &s);
        }
        out
    }
}

/// Derivative arrays `𝓔_[k]`, `𝓕_[k]` of `E x' + F x` at `t`, unknowns
/// `x', …, x^(k+1)` in `𝓔` and `x` in `𝓕`.
pub fn arrays(e: &QPoly, f: &QPoly, t: &Q, k: usize) -> (QMat, QMat) {
    let m = e.rows;
    let n = e.cols;
    let ed: Vec<QMat> = (0..=k).map(|j| e.deriv_at(t, j)).collect();
    let fd: Vec<QMat> = (0..=k).map(|j| f.deriv_at(t, j)).collect();
    let mut ea = QMat::zeros((k + 1) * m, (k + 1) * n);
    let mut fa = QMat::zeros((k + 1) * m, n);
    for i in 0..=k {
        fa.put(i * m, 0, &fd[i]);
        for j in 0..=i {
            let mut blk = QMat::zeros(m, n);
            blk.add_scaled(&ed[i - j], &qi(binom(i, j)));
            if j < i {
                blk.add_scaled(&fd[i - j - 1], &qi(binom(i, j + 1)));
            }
            ea.put(i * m, j * n, &blk);
        }
    }
    (ea, fa)
}

/// `N^p` evaluated at `t`.
pub fn power_at(n: &QPoly, t: &Q, p: usize) -> QMat {
    let v = n.deriv_at(t, 0);
    let mut acc = QMat::zeros(n.rows, n.rows);
    for i in 0..n.rows {
        *acc.at_mut(i, i) = Q::one();
    }
    for _ in 0..p {
        acc = acc.mul(&v);
    }
    acc
}

/// Scalar polynomial with integer coefficients placed at entry `(i, j)`.
pub fn entry_poly(rows: usize, cols: usize, i: usize, j: usize, c: &[i64]) -> QPoly {
    QPoly::new(
        c.iter()
            .map(|&x| {
                let mut m = QMat::zeros(rows, cols);
                *m.at_mut(i, j) = qi(x);
                m
            })
            .collect(),
    )
}

pub fn add(a: &QPoly, b: &QPoly) -> QPoly {
    let n = a.coeffs.len().max(b.coeffs.len());
    let coeffs = (0..n)
        .map(|k| {
            let mut m = QMat::zeros(a.rows, a.cols);
            for p in [a, b] {
                if let Some(c) = p.coeffs.get(k) {
                    m.add_scaled(c, &Q::one());
                }
            }
            m
        })
        .collect();
    QPoly::new(coeffs)
}
