//! Cross-check route for index ≤ 2: the reduction formula
//! `x = C₀x₁ + p₀`, `x₁ = C₁x₂ + p₁`, with difference quotients of the reduced
//! terms. The bases `C_i(s) = Π_i(s)C_i(t_n)` are re-anchored at every step so
//! they stay smooth across the step.

use nalgebra::{DMatrix, DVector};

use super::IvpSpec;
use crate::error::{DaeError, Result};
use crate::numlin::{self, TolerancePolicy};
use crate::problem::DaeProblem;

/// Difference step for derivatives of level-`l` terms.
fn fd_step(level: usize) -> f64 {
    1e-5 * 100f64.powi(level as i32)
}

type Split = (DMatrix<f64>, DVector<f64>);

struct Reducer<'a> {
    problem: &'a DaeProblem,
    tol: TolerancePolicy,
    anchors: Vec<DMatrix<f64>>,
    interval: (f64, f64),
}

impl Reducer<'_> {
    fn level0(&self, s: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
        let p = self.problem;
        let q = match &p.q {
            Some(q) => DVector::from_column_slice(q.eval_at(s)?.as_slice()),
            None => DVector::zeros(p.m()),
        };
        Ok((p.e.eval_at(s)?, p.f.eval_at(s)?, q))
    }

    fn data(&self, level: usize, s: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
        if level == 0 {
            return self.level0(s);
        }
        let (c, p) = self.split(level - 1, s)?;
        let (cd, pd) = self.deriv(level - 1, s)?;
        let (e, f, q) = self.data(level - 1, s)?;
        let y = numlin::fundamental_subspaces(&e, &self.tol)?.range.basis;
        let ye = y.transpose() * &e;
        let yf = y.transpose() * &f;
        Ok((&ye * &c, &ye * cd + &yf * &c, y.transpose() * q - &ye * pd - &yf * p))
    }

    /// Constraint split of level `l`: `C_l(s) = Π(s)·anchor`, `p_l(s)` the
    /// minimum-norm particular solution.
    fn split(&self, level: usize, s: f64) -> Result<Split> {
        let (e, f, q) = self.data(level, s)?;
        let z = numlin::fundamental_subspaces(&e, &self.tol)?.cokernel.basis;
        let a = z.transpose() * &f;
        let b = z.transpose() * &q;
        let ap = numlin::pseudo_inverse(&a, &self.tol)?;
        let pi = DMatrix::identity(a.ncols(), a.ncols()) - &ap * &a;
        Ok((pi * &self.anchors[level], ap * b))
    }

    fn deriv(&self, level: usize, s: f64) -> Result<Split> {
        let h = fd_step(level);
        let (a, b) = self.interval;
        if s - h >= a && s + h <= b {
            let (c1, p1) = self.split(level, s + h)?;
            let (c0, p0) = self.split(level, s - h)?;
            return Ok(((c1 - c0) / (2.0 * h), (p1 - p0) / (2.0 * h)));
        }
        let sg = if s - h < a { 1.0 } else { -1.0 };
        let (c0, p0) = self.split(level, s)?;
        let (c1, p1) = self.split(level, s + sg * h)?;
        let (c2, p2) = self.split(level, s + 2.0 * sg * h)?;
        let k = sg / (2.0 * h);
        Ok(((c1 * 4.0 - c0 * 3.0 - c2) * k, (p1 * 4.0 - p0 * 3.0 - p2) * k))
    }

    /// Anchors the bases at `t` and returns the number of levels.
    fn anchor(&mut self, t: f64) -> Result<usize> {
        self.anchors.clear();
        for level in 0..=2 {
            let (e, f, _) = self.data(level, t)?;
            let n = e.ncols();
            let fund = numlin::fundamental_subspaces(&e, &self.tol)?;
            if fund.rank.rank == n {
                return Ok(level);
            }
            let a = fund.cokernel.basis.transpose() * &f;
            if numlin::rank_of(&a, &self.tol)? != a.nrows() {
                return Err(DaeError::PreRegularityLost { level, t });
            }
            self.anchors.push(numlin::kernel(&a, &self.tol)?.basis);
        }
        Err(DaeError::IndexUndetermined("reduction route handles index ≤ 2 only".into()))
    }

    fn rhs(&self, top: usize, s: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        let (e, f, q) = self.data(top, s)?;
        e.lu()
            .solve(&(q - f * y))
            .ok_or(DaeError::StepFailure {
                t: s,
                reason: "reduced leading matrix singular".into(),
            })
    }

    fn lift(&self, top: usize, s: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        let mut x = y.clone();
        for level in (0..top).rev() {
            let (c, p) = self.split(level, s)?;
            x = c * x + p;
        }
        Ok(x)
    }

    fn lower(&self, top: usize, s: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut y = x.clone();
        for level in 0..top {
            let (c, p) = self.split(level, s)?;
            y = numlin::pseudo_inverse(&c, &self.tol)? * (y - p);
        }
        Ok(y)
    }
}

/// Solution values on the same grid as [`super::integrate_completion`],
/// started from a consistent `x0`.
pub fn reduction_solve(problem: &DaeProblem, spec: &IvpSpec, x0: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let mut red = Reducer {
        problem,
        tol: problem.tol,
        anchors: Vec::new(),
        interval: problem.interval(),
    };
    let span = spec.t_end - spec.t0;
    let n = ((span.abs() / spec.step) - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut x = x0.clone();
    let mut out = vec![x.clone()];
    for i in 0..n {
        let t = spec.t0 + h * i as f64;
        let top = red.anchor(t)?;
        let y = red.lower(top, t, &x)?;
        let k1 = red.rhs(top, t, &y)?;
        let k2 = red.rhs(top, t + 0.5 * h, &(&y + &k1 * (0.5 * h)))?;
        let k3 = red.rhs(top, t + 0.5 * h, &(&y + &k2 * (0.5 * h)))?;
        let k4 = red.rhs(top, t + h, &(&y + &k3 * h))?;
        let y1 = &y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        x = red.lift(top, t + h, &y1)?;
        out.push(x.clone());
    }
    Ok(out)
}
