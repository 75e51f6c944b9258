use serde::{Deserialize, Serialize};

use crate::error::{DaeError, Result};

/// Canonical characteristic values `(r, θ₀…θ_{μ−1}, μ, d)` and `a = m − d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharacteristicProfile {
    pub m: usize,
    pub r: usize,
    pub thetas: Vec<usize>,
    pub mu: usize,
    pub d: usize,
    pub a: usize,
}

impl CharacteristicProfile {
    /// Index zero: `E` nonsingular.
    pub fn ode(m: usize) -> Self {
        CharacteristicProfile {
            m,
            r: m,
            thetas: vec![],
            mu: 0,
            d: m,
            a: 0,
        }
    }

    /// Profile from `r` and the full list `θ₀…θ_{μ−1}`; an empty list means index zero.
    pub fn from_thetas(m: usize, r: usize, thetas: Vec<usize>) -> Result<Self> {
        if thetas.is_empty() {
            if r != m {
                return Err(DaeError::InvalidProfile(format!("index 0 requires r = m, got r = {r}, m = {m}")));
            }
            return Ok(Self::ode(m));
        }
        if r >= m {
            return Err(DaeError::InvalidProfile(format!("r = {r} must be below m = {m} for positive index")));
        }
        if *thetas.last().unwrap() != 0 {
            return Err(DaeError::InvalidProfile("last theta must be zero".into()));
        }
        let mu = thetas.len();
        if mu > m {
            return Err(DaeError::InvalidProfile(format!("index {mu} exceeds m = {m}")));
        }
        for w in thetas[..mu - 1].windows(2) {
            if w[0] < w[1] {
                return Err(DaeError::InvalidProfile(format!("thetas {thetas:?} not nonincreasing")));
            }
        }
        if thetas[..mu - 1].contains(&0) {
            return Err(DaeError::InvalidProfile(format!("thetas {thetas:?} vanish before the end")));
        }
        let sum: usize = thetas.iter().sum();
        if sum > r {
            return Err(DaeError::InvalidProfile(format!("sum of thetas {sum} exceeds r = {r}")));
        }
        if mu >= 2 && thetas[0] > m - r {
            return Err(DaeError::InvalidProfile(format!(
                "theta_0 = {} exceeds m - r = {}",
                thetas[0],
                m - r
            )));
        }
        let d = r - sum;
        Ok(CharacteristicProfile {
            m,
            r,
            thetas,
            mu,
            d,
            a: m - d,
        })
    }

    /// `r_i = r − Σ_{j<i} θ_j` for `i = 0..=μ`.
    pub fn reduced_ranks(&self) -> Vec<usize> {
        let mut out = vec![self.r];
        let mut acc = self.r;
        for &t in &self.thetas {
            acc -= t;
            out.push(acc);
        }
        out
    }

    /// Array ranks `r_[k] = km + r − Σ_{i<k} θ_i` for `k = 0..=kmax`.
    pub fn array_ranks(&self, kmax: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(kmax + 1);
        let mut sum = 0;
        for k in 0..=kmax {
            out.push(k * self.m + self.r - sum);
            sum += self.theta(k);
        }
        out
    }

    /// `θ_i`, zero past the index.
    pub fn theta(&self, i: usize) -> usize {
        self.thetas.get(i).copied().unwrap_or(0)
    }
}

impl std::fmt::Display for CharacteristicProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "m={} r={} theta={:?} mu={} d={}", self.m, self.r, self.thetas, self.mu, self.d)
    }
}
