//! Pointwise characteristic values through the basic reduction and its
//! elimination, dissection and strangeness relatives.
//!
//! Bases are carried as Taylor series around the probe point, so the basis
//! derivatives entering the reduced pairs are exact up to rounding. A finite
//! difference variant with Procrustes-aligned bases is kept in [`fd`].

mod basic;
mod dissection;
pub mod fd;
mod strangeness;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numlin::{self, TolerancePolicy};
use crate::problem::{DaeProblem, Point};

pub use crate::profile::CharacteristicProfile;
pub use basic::{reduction_profile, ReductionMode, ReductionResult};
pub use dissection::{dissection_profile, DissectionResult};
pub use strangeness::{strangeness_profile, StrangenessResult};

/// One level `{E_i, F_i}` of a dimension-reducing sequence, evaluated at the probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionLevel {
    pub level: usize,
    pub m_i: usize,
    pub e: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub r_i: usize,
    pub theta_i: usize,
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrangenessTriple {
    pub level: usize,
    pub r_s: usize,
    pub a_s: usize,
    pub s_s: usize,
    pub d_s: usize,
    pub v_s: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreRegularity {
    pub qualified: bool,
    /// Qualified with unambiguous rank decisions at this point.
    pub pre_regular: bool,
    pub r: usize,
    pub theta: usize,
}

/// Pointwise qualification test: `rank [E F] = m`, `r = rank E`, `θ = dim(ker E ∩ ker Z*F)`.
pub fn pre_regularity_check(e: &DMatrix<f64>, f: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<PreRegularity> {
    let m = e.nrows();
    let fe = numlin::fundamental_subspaces(e, tol)?;
    let ef = numlin::rank_info(&numlin::stack_cols(&[e, f]), tol)?;
    let qualified = ef.rank == m;
    let zf = fe.cokernel.basis.transpose() * f;
    let s = if zf.nrows() == 0 {
        numlin::Subspace::full(m)
    } else {
        numlin::kernel(&zf, tol)?
    };
    let theta = numlin::intersection_dim(&fe.kernel, &s, tol)?.dim;
    Ok(PreRegularity {
        qualified,
        pre_regular: qualified && !fe.rank.ambiguous() && !ef.ambiguous(),
        r: fe.rank.rank,
        theta,
    })
}

/// Number of Taylor coefficients carried for a problem of size `m`.
pub(crate) fn series_len(m: usize) -> usize {
    m + 3
}

pub(crate) fn rank_warn(m: &DMatrix<f64>, tol: &TolerancePolicy, what: impl FnOnce() -> String, w: &mut Vec<String>) -> Result<usize> {
    let info = numlin::rank_info(m, tol)?;
    if info.ambiguous() {
        w.push(format!("{}: gap ratio {:.2e}", what(), info.gap_ratio.unwrap_or(f64::NAN)));
    }
    Ok(info.rank)
}

/// Run every framework at `p` and collect the profiles by name.
pub fn all_profiles(problem: &DaeProblem, p: Point) -> Vec<(&'static str, Result<CharacteristicProfile>)> {
    vec![
        ("basic", reduction_profile(problem, p, ReductionMode::Basic).map(|r| r.profile)),
        ("elimination", reduction_profile(problem, p, ReductionMode::Elimination).map(|r| r.profile)),
        ("dissection", dissection_profile(problem, p).map(|r| r.profile)),
        ("strangeness", strangeness_profile(problem, p).map(|r| r.profile)),
        ("tractability", crate::tractability::tractability_at(problem, p).map(|c| c.profile)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn pre_regularity_of_degree_pair() {
        let tol = TolerancePolicy::default();
        let f = dmatrix![2.0, 0.0; 0.0, 2.0];
        let at0 = pre_regularity_check(&dmatrix![1.0, 0.0; 1.0, 0.0], &f, &tol).unwrap();
        assert!(at0.qualified);
        assert_eq!((at0.r, at0.theta), (1, 0));
        let at1 = pre_regularity_check(&dmatrix![1.0, -1.0; 1.0, -1.0], &f, &tol).unwrap();
        assert_eq!((at1.r, at1.theta), (1, 1));
    }
}
