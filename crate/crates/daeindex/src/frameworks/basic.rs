use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{rank_warn, series_len, CharacteristicProfile, ReductionLevel};
use crate::error::{DaeError, Result};
use crate::numlin::{self, Subspace, TolerancePolicy};
use crate::problem::{DaeProblem, Point};
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionMode {
    #[default]
    Basic,
    /// Bases from column pivoting, `C = K [I; −𝔅⁻¹𝔄]`.
    Elimination,
}

#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub profile: CharacteristicProfile,
    pub levels: Vec<ReductionLevel>,
    /// `C₀(t)⋯C_{μ−1}(t)`, a basis of the flow subspace.
    pub c_product: DMatrix<f64>,
    pub warnings: Vec<String>,
}

/// Greedy column pivoting: `k` columns of `m` that are well independent.
pub(crate) fn pivot_columns(m: &DMatrix<f64>, k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    for _ in 0..k {
        let mut best = (usize::MAX, -1.0);
        for j in 0..m.ncols() {
            if chosen.contains(&j) {
                continue;
            }
            let mut c = m.column(j).into_owned();
            for b in &basis {
                let d = b.dot(&c);
                c.axpy(-d, b, 1.0);
            }
            let n = c.norm();
            if n > best.1 {
                best = (j, n);
            }
        }
        let j = best.0;
        let mut c = m.column(j).into_owned();
        for b in &basis {
            let d = b.dot(&c);
            c.axpy(-d, b, 1.0);
        }
        let n = c.norm();
        if n > 0.0 {
            basis.push(c / n);
        }
        chosen.push(j);
    }
    chosen
}

fn selection(n: usize, cols: &[usize]) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, cols.len());
    for (k, &j) in cols.iter().enumerate() {
        s[(j, k)] = 1.0;
    }
    s
}

/// Bases `(Y, Z, C)` of `im E`, `(im E)^⊥` and `S = ker Z*F` as series.
fn level_bases(
    e: &Series,
    f: &Series,
    r: usize,
    mode: ReductionMode,
    tol: &TolerancePolicy,
) -> Result<(Series, Series, Series)> {
    let m = e.rows();
    let z = e.cokernel(tol)?;
    let zf = z.transpose().mul(f);
    match mode {
        ReductionMode::Basic => {
            let y = e.image(tol)?;
            let c = if zf.rows() == 0 {
                Series::identity(m, zf.len())
            } else {
                zf.kernel(tol)?
            };
            Ok((y, z, c))
        }
        ReductionMode::Elimination => {
            let mut sel = selection(m, &pivot_columns(e.value(), r));
            let norms: Vec<f64> = (e.value() * &sel).column_iter().map(|c| c.norm()).collect();
            for (j, n) in norms.into_iter().enumerate() {
                if n > 0.0 {
                    sel.column_mut(j).scale_mut(1.0 / n);
                }
            }
            let y = e.mul_const(&sel);
            let piv = pivot_columns(zf.value(), m - r);
            let free: Vec<usize> = (0..m).filter(|j| !piv.contains(j)).collect();
            let mut order = free.clone();
            order.extend(&piv);
            let k = selection(m, &order);
            let zfk = zf.mul_const(&k);
            let a = zfk.columns(0, r);
            let b = zfk.columns(r, m - r);
            let lower = if m - r == 0 {
                Series::zeros(0, r, zf.len())
            } else {
                b.inverse()?.mul(&a).scale(-1.0)
            };
            let stacked = Series::vstack(&[&Series::identity(r, zf.len()), &lower]);
            Ok((y, z, Series::const_mul(&k, &stacked)))
        }
    }
}

pub fn reduction_profile(problem: &DaeProblem, p: Point, mode: ReductionMode) -> Result<ReductionResult> {
    let tol = problem.tol;
    let m = problem.m();
    let n = series_len(m);
    problem.check_order(p, n - 1)?;
    let (mut e, mut f) = problem.series(p, n)?;
    let mut warnings = Vec::new();
    let mut levels = Vec::new();
    let mut thetas = Vec::new();
    let mut r0 = 0;
    let mut c_product = DMatrix::identity(m, m);
    for level in 0..=m {
        let mi = e.rows();
        let r = rank_warn(e.value(), &tol, || format!("rank E_{level}"), &mut warnings)?;
        if level == 0 {
            r0 = r;
            if r == m {
                return Ok(ReductionResult {
                    profile: CharacteristicProfile::ode(m),
                    levels,
                    c_product,
                    warnings,
                });
            }
        } else {
            let expect = levels.last().map(|l: &ReductionLevel| l.r_i - l.theta_i).unwrap();
            if r != expect {
                return Err(DaeError::PreRegularityLost { level, t: p.t });
            }
        }
        let ef = numlin::stack_cols(&[e.value(), f.value()]);
        if rank_warn(&ef, &tol, || format!("rank [E_{level} F_{level}]"), &mut warnings)? != mi {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        let (y, z, c) = level_bases(&e, &f, r, mode, &tol)?;
        let ker_e = numlin::kernel(e.value(), &tol)?;
        let s = Subspace::span(c.value(), &tol)?;
        if s.dim() != r {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        let theta = numlin::intersection_dim(&ker_e, &s, &tol)?.dim;
        c_product = &c_product * c.value();
        levels.push(ReductionLevel {
            level,
            m_i: mi,
            e: e.value().clone(),
            f: f.value().clone(),
            r_i: r,
            theta_i: theta,
            y: y.value().clone(),
            z: z.value().clone(),
            c: c.value().clone(),
        });
        thetas.push(theta);
        if theta == 0 {
            let profile = CharacteristicProfile::from_thetas(m, r0, thetas)?;
            return Ok(ReductionResult {
                profile,
                levels,
                c_product,
                warnings,
            });
        }
        if e.len() < 2 {
            return Err(DaeError::MaxLevelExceeded(level));
        }
        let yt = y.transpose();
        let e_next = yt.mul(&e).mul(&c);
        let f_next = yt.mul(&f.mul(&c).add(&e.mul(&c.deriv())));
        e = e_next;
        f = f_next;
    }
    Err(DaeError::MaxLevelExceeded(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::PiecewiseMatrixFunction;
    use nalgebra::dmatrix;

    fn degree_pair() -> DaeProblem {
        let e = PiecewiseMatrixFunction::polynomial(
            vec![dmatrix![1.0, 0.0; 1.0, 0.0], dmatrix![0.0, -1.0; 0.0, -1.0]],
            0.0,
            2.0,
        );
        let f = PiecewiseMatrixFunction::constant(dmatrix![2.0, 0.0; 0.0, 2.0], 0.0, 2.0);
        DaeProblem::new(e, f, None).unwrap()
    }

    #[test]
    fn index_one_away_from_critical_point() {
        let p = degree_pair();
        for mode in [ReductionMode::Basic, ReductionMode::Elimination] {
            let r = reduction_profile(&p, Point::new(0.0), mode).unwrap();
            assert_eq!(r.profile.thetas, vec![0]);
            assert_eq!((r.profile.r, r.profile.mu, r.profile.d), (1, 1, 1));
        }
    }

    #[test]
    fn critical_point_changes_degree_of_freedom() {
        let r = reduction_profile(&degree_pair(), Point::new(1.0), ReductionMode::Basic).unwrap();
        assert_eq!(r.profile.thetas, vec![1, 0]);
        assert_eq!(r.profile.d, 0);
    }

    #[test]
    fn pivoting_picks_independent_columns() {
        let m = dmatrix![1.0, 1.0, 0.0; 0.0, 0.0, 1.0];
        let cols = pivot_columns(&m, 2);
        assert_eq!(cols.len(), 2);
        let sel = m.select_columns(&cols);
        assert_eq!(numlin::rank_of(&sel, &TolerancePolicy::default()).unwrap(), 2);
    }
}
