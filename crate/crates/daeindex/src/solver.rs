//! Consistent initialization and fixed-step integration of regular linear DAEs
//! through the completion ODE of a 1-full derivative array.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arrays::{build_arrays, DerivativeArrayStack};
use crate::error::{DaeError, Result};
use crate::numlin::{self, TolerancePolicy};
use crate::problem::{DaeProblem, Point};
use crate::tractability;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvpSpec {
    pub t0: f64,
    /// Initial guess; the consistent value closest to it is used.
    pub alpha: Vec<f64>,
    pub t_end: f64,
    pub step: f64,
    /// Fixed array order for the completion field. Detected per point when absent.
    #[serde(default)]
    pub k_used: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub grid: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    /// `‖E x' + F x − q‖` at each grid point, `x'` from the completion field.
    pub residual: Vec<f64>,
    /// Size of the projection back onto the constraint set after each step.
    pub drift: Vec<f64>,
    /// Array order of the completion field at each grid point.
    pub orders: Vec<usize>,
    pub residual_max: f64,
    pub constraint_drift_max: f64,
    /// `‖x0 − α‖`.
    pub consistency_gap: f64,
    /// Largest condition number of the array pseudo-inverse seen.
    pub condition_max: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Affine constraint set `{x : 𝓦𝓕x = 𝓦q}` at one point.
struct Constraints {
    x_p: DVector<f64>,
    basis: DMatrix<f64>,
    p0: DMatrix<f64>,
    wf: DMatrix<f64>,
    wq: DVector<f64>,
}

impl Constraints {
    fn from_stack(s: &DerivativeArrayStack, tol: &TolerancePolicy) -> Result<Self> {
        let m = s.m;
        let sys = numlin::stack_cols(&[&s.f_arr, &s.e_arr]);
        let (sol, res) = numlin::lstsq(&sys, &s.q_arr, tol)?;
        if res > 1e-8 * (1.0 + s.q_arr.norm()) {
            return Err(DaeError::InfeasibleConstraints(res));
        }
        let x_p = sol.rows(0, m).into_owned();
        let cok = numlin::fundamental_subspaces(&s.e_arr, tol)?.cokernel;
        let wf = cok.basis.transpose() * &s.f_arr;
        let wq = cok.basis.transpose() * &s.q_arr;
        let basis = numlin::kernel(&wf, tol)?.basis;
        let e = s.e();
        let p0 = numlin::pseudo_inverse(e, tol)? * e;
        Ok(Constraints { x_p, basis, p0, wf, wq })
    }

    /// `x_p + B(PB)⁺P(α − x_p)`: the constrained point closest to `α` in the
    /// `P = E⁺E` seminorm.
    fn project(&self, alpha: &DVector<f64>, tol: &TolerancePolicy) -> Result<DVector<f64>> {
        if self.basis.ncols() == 0 {
            return Ok(self.x_p.clone());
        }
        let pb = &self.p0 * &self.basis;
        let z = numlin::pseudo_inverse(&pb, tol)? * (&self.p0 * (alpha - &self.x_p));
        Ok(&self.x_p + &self.basis * z)
    }

    fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.wf * x - &self.wq).norm()
    }
}

fn unconstrained(m: usize) -> Constraints {
    Constraints {
        x_p: DVector::zeros(m),
        basis: DMatrix::identity(m, m),
        p0: DMatrix::identity(m, m),
        wf: DMatrix::zeros(0, m),
        wq: DVector::zeros(0),
    }
}

/// Consistent value `x0` at `t0` from the order-`k−1` arrays, closest to
/// `alpha` in the seminorm `‖P(t0)(·)‖`, together with the derivatives
/// `w = (x0', …, x0^(k))` of one solution through it.
pub fn consistent_initialization(
    problem: &DaeProblem,
    t0: f64,
    alpha: &DVector<f64>,
    k: usize,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let m = problem.m();
    if alpha.len() != m {
        return Err(DaeError::DimensionMismatch(format!("alpha has {} entries, m = {m}", alpha.len())));
    }
    if k == 0 {
        return Ok((alpha.clone(), DVector::zeros(0)));
    }
    let tol = problem.tol;
    let s = build_arrays(problem, Point::new(t0), k - 1)?.scaled(&tol)?;
    let c = Constraints::from_stack(&s, &tol)?;
    let x0 = c.project(alpha, &tol)?;
    let ws = numlin::pseudo_inverse(&s.e_arr, &tol)? * (&s.q_arr - &s.f_arr * &x0);
    let mut w = ws;
    for j in 0..k {
        w.rows_mut(j * m, m).scale_mut(factorial(j + 1));
    }
    Ok((x0, w))
}

/// Completion field `x' = a x + b` at one point.
struct LocalField {
    order: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    e: DMatrix<f64>,
    f: DMatrix<f64>,
    q: DVector<f64>,
    cond: f64,
    constraints: Constraints,
}

impl LocalField {
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }

    fn residual(&self, x: &DVector<f64>) -> f64 {
        (&self.e * self.apply(x) + &self.f * x - &self.q).norm()
    }
}

fn local_field(problem: &DaeProblem, t: f64, fixed: Option<usize>) -> Result<LocalField> {
    let m = problem.m();
    let tol = problem.tol;
    let p = Point::new(t);
    let orders: Vec<usize> = match fixed {
        Some(k) => vec![k],
        None => (0..=m).collect(),
    };
    let mut prev: Option<DerivativeArrayStack> = None;
    for nu in orders {
        let s = build_arrays(problem, p, nu)?.scaled(&tol)?;
        if !numlin::one_fullness(&s.e_arr, m, &tol)?.is_one_full {
            if fixed.is_some() {
                return Err(DaeError::OneFullnessLost(t));
            }
            prev = Some(s);
            continue;
        }
        let svd = numlin::full_svd(&s.e_arr)?;
        let info = numlin::rank_info(&s.e_arr, &tol)?;
        let cond = if info.rank == 0 {
            1.0
        } else {
            svd.sigma[0] / svd.sigma[info.rank - 1]
        };
        let pinv = numlin::pseudo_inverse(&s.e_arr, &tol)?;
        let head = pinv.rows(0, m).into_owned();
        let constraints = if nu == 0 {
            unconstrained(m)
        } else {
            let below = match prev {
                Some(b) if b.k == nu - 1 => b,
                _ => s.sub(nu - 1, &tol)?,
            };
            Constraints::from_stack(&below, &tol)?
        };
        return Ok(LocalField {
            order: nu,
            a: -(&head * &s.f_arr),
            b: &head * &s.q_arr,
            e: s.e().clone(),
            f: s.f().clone(),
            q: s.q_arr.rows(0, m).into_owned(),
            cond,
            constraints,
        });
    }
    Err(DaeError::OneFullnessLost(t))
}

/// Classical Runge–Kutta on the completion ODE, projecting onto the
/// constraint set after every step.
pub fn integrate_completion(problem: &DaeProblem, spec: &IvpSpec) -> Result<SolveResult> {
    let m = problem.m();
    let tol = problem.tol;
    let (a, b) = problem.interval();
    let eps = 1e-12 * (1.0 + a.abs().max(b.abs()));
    for t in [spec.t0, spec.t_end] {
        if t < a - eps || t > b + eps {
            return Err(DaeError::OutOfDomain(t));
        }
    }
    if !(spec.step > 0.0) {
        return Err(DaeError::StepFailure {
            t: spec.t0,
            reason: "step must be positive".into(),
        });
    }
    let alpha = DVector::from_vec(spec.alpha.clone());
    if alpha.len() != m {
        return Err(DaeError::DimensionMismatch(format!("alpha has {} entries, m = {m}", alpha.len())));
    }
    let span = spec.t_end - spec.t0;
    let n = ((span.abs() / spec.step) - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;

    let mut field = local_field(problem, spec.t0, spec.k_used)?;
    let mut x = field.constraints.project(&alpha, &tol)?;
    let consistency_gap = (&x - &alpha).norm();
    let mut out = SolveResult {
        grid: vec![spec.t0],
        x: vec![x.clone()],
        residual: vec![field.residual(&x)],
        drift: vec![0.0],
        orders: vec![field.order],
        residual_max: 0.0,
        constraint_drift_max: 0.0,
        consistency_gap,
        condition_max: field.cond,
    };
    for i in 0..n {
        let t = spec.t0 + h * i as f64;
        let t1 = if i + 1 == n { spec.t_end } else { spec.t0 + h * (i + 1) as f64 };
        let step_err = |e: DaeError| match e {
            DaeError::OneFullnessLost(_) | DaeError::StepFailure { .. } => e,
            other => DaeError::StepFailure {
                t,
                reason: other.to_string(),
            },
        };
        let mid = local_field(problem, t + 0.5 * h, spec.k_used).map_err(step_err)?;
        let end = local_field(problem, t1, spec.k_used).map_err(step_err)?;
        let k1 = field.apply(&x);
        let k2 = mid.apply(&(&x + &k1 * (0.5 * h)));
        let k3 = mid.apply(&(&x + &k2 * (0.5 * h)));
        let k4 = end.apply(&(&x + &k3 * h));
        let raw = &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let proj = end.constraints.project(&raw, &tol).map_err(step_err)?;
        let drift = (&proj - &raw).norm();
        let cres = end.constraints.residual(&proj);
        if !proj.iter().all(|v| v.is_finite()) || cres >= 1e-7 * (1.0 + proj.norm()) {
            return Err(DaeError::StepFailure {
                t: t1,
                reason: format!("constraint residual {cres:.3e} after projection"),
            });
        }
        x = proj;
        out.condition_max = out.condition_max.max(mid.cond).max(end.cond);
        out.grid.push(t1);
        out.residual.push(end.residual(&x));
        out.drift.push(drift);
        out.orders.push(end.order);
        out.x.push(x.clone());
        field = end;
    }
    out.residual_max = out.residual.iter().cloned().fold(0.0, f64::max);
    out.constraint_drift_max = out.drift.iter().cloned().fold(0.0, f64::max);
    Ok(out)
}

/// `ker G = N_can(t0)` within `1e−7`.
pub fn ic_accuracy_check(problem: &DaeProblem, t0: f64, g: &DMatrix<f64>) -> Result<bool> {
    let p = Point::new(t0);
    let tol = problem.tol;
    let chain = tractability::tractability_at(problem, p).map_err(|_| DaeError::NotRegularAt(t0))?;
    let cs = tractability::canonical_subspaces_at(problem, p, &chain).map_err(|_| DaeError::NotRegularAt(t0))?;
    if g.ncols() != problem.m() {
        return Err(DaeError::DimensionMismatch(format!("G has {} columns, m = {}", g.ncols(), problem.m())));
    }
    let d = chain.profile.d;
    let rg = numlin::rank_of(g, &tol)?;
    if rg != d {
        return Err(DaeError::DimensionMismatch(format!("rank G = {rg}, d = {d}")));
    }
    let ker = numlin::kernel(g, &tol)?;
    Ok(ker.distance(&cs.n_can) <= 1e-7)
}

pub mod reduction;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matfun::PiecewiseMatrixFunction as Pmf;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn index_one_scf_initialization() {
        let p = fixtures::index_one_scf();
        let (x0, w) = consistent_initialization(&p, 0.0, &dvector![5.0, 99.0], 1).unwrap();
        assert!((x0 - dvector![5.0, 0.0]).norm() < 1e-12);
        assert_eq!(w.len(), 2);
        assert!((w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initialization_is_idempotent() {
        let p = fixtures::index_one_scf();
        let (x0, _) = consistent_initialization(&p, 0.3, &dvector![-2.0, 7.0], 1).unwrap();
        let (x1, _) = consistent_initialization(&p, 0.3, &x0, 1).unwrap();
        assert!((x0 - x1).norm() < 1e-12);
    }

    #[test]
    fn index_one_scf_solution() {
        let p = fixtures::index_one_scf();
        let spec = IvpSpec {
            t0: 0.0,
            alpha: vec![0.0, 0.0],
            t_end: 1.0,
            step: 1e-2,
            k_used: None,
        };
        let r = integrate_completion(&p, &spec).unwrap();
        let last = r.x.last().unwrap();
        assert!((last - dvector![1.0, 1.0]).norm() < 1e-8);
        assert!(r.orders.iter().all(|&o| o == 1));
        assert!(r.residual_max < 1e-10);
    }

    #[test]
    fn infeasible_at_solvability_loss() {
        let p = fixtures::solvability_loss();
        let q = Pmf::constant(dmatrix![1.0; 1.0; 1.0], -1.0, 1.0);
        let p = p.with_q(q).unwrap();
        let e = consistent_initialization(&p, 0.0, &dvector![0.0, 0.0, 0.0], 2).unwrap_err();
        assert!(matches!(e, DaeError::InfeasibleConstraints(_)), "{e:?}");
    }

    #[test]
    fn accurately_stated_conditions() {
        let e = dmatrix![1.0, 0.0, 0.0; 0.0, 0.0, 1.0; 0.0, 0.0, 0.0];
        let f = dmatrix![2.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 1.0];
        let p = DaeProblem::new(Pmf::constant(e, 0.0, 1.0), Pmf::constant(f, 0.0, 1.0), None).unwrap();
        assert!(ic_accuracy_check(&p, 0.5, &dmatrix![1.0, 0.0, 0.0]).unwrap());
        assert!(!ic_accuracy_check(&p, 0.5, &dmatrix![0.0, 1.0, 0.0]).unwrap());
        let p1 = fixtures::index_one_scf();
        let e0 = p1.e.eval_at(0.2).unwrap();
        assert!(ic_accuracy_check(&p1, 0.2, &e0).unwrap());
    }
}
