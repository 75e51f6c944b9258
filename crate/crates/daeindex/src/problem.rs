use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DaeError, Result};
use crate::matfun::{PiecewiseMatrixFunction, Side};
use crate::numlin::TolerancePolicy;
use crate::series::Series;

/// A probe location; `side` picks the one-sided limit at breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    #[serde(default)]
    pub side: Side,
}

impl Point {
    pub fn new(t: f64) -> Self {
        Point { t, side: Side::Auto }
    }

    pub fn with_side(t: f64, side: Side) -> Self {
        Point { t, side }
    }
}

impl From<f64> for Point {
    fn from(t: f64) -> Self {
        Point::new(t)
    }
}

/// The pair `{E, F}` of `E(t)x' + F(t)x = q(t)` on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DaeProblem {
    pub e: PiecewiseMatrixFunction,
    pub f: PiecewiseMatrixFunction,
    pub q: Option<PiecewiseMatrixFunction>,
    pub tol: TolerancePolicy,
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    interval: [f64; 2],
    #[serde(rename = "E")]
    e: PiecewiseMatrixFunction,
    #[serde(rename = "F")]
    f: PiecewiseMatrixFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<PiecewiseMatrixFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<TolerancePolicy>,
}

fn same_interval(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() <= 1e-12 * (1.0 + a.0.abs()) && (a.1 - b.1).abs() <= 1e-12 * (1.0 + a.1.abs())
}

impl DaeProblem {
    pub fn new(
        e: PiecewiseMatrixFunction,
        f: PiecewiseMatrixFunction,
        q: Option<PiecewiseMatrixFunction>,
    ) -> Result<Self> {
        let m = e.rows();
        if e.cols() != m || f.rows() != m || f.cols() != m {
            return Err(DaeError::DimensionMismatch(format!(
                "E is {}x{}, F is {}x{}",
                e.rows(),
                e.cols(),
                f.rows(),
                f.cols()
            )));
        }
        if !same_interval(e.interval(), f.interval()) {
            return Err(DaeError::DimensionMismatch("E and F live on different intervals".into()));
        }
        if let Some(q) = &q {
            if q.rows() != m || q.cols() != 1 {
                return Err(DaeError::DimensionMismatch(format!(
                    "q is {}x{}, expected {m}x1",
                    q.rows(),
                    q.cols()
                )));
            }
            if !same_interval(e.interval(), q.interval()) {
                return Err(DaeError::DimensionMismatch("q lives on a different interval".into()));
            }
        }
        Ok(DaeProblem {
            e,
            f,
            q,
            tol: TolerancePolicy::default(),
        })
    }

    pub fn with_tol(mut self, tol: TolerancePolicy) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_q(mut self, q: PiecewiseMatrixFunction) -> Result<Self> {
        let p = DaeProblem::new(self.e, self.f, Some(q))?;
        self.e = p.e;
        self.f = p.f;
        self.q = p.q;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.e.rows()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.e.interval()
    }

    /// Interior breakpoints of `E`, `F` and `q`, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.e.breakpoints();
        b.extend(self.f.breakpoints());
        if let Some(q) = &self.q {
            b.extend(q.breakpoints());
        }
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + x.abs()));
        b
    }

    fn parts(&self) -> Vec<&PiecewiseMatrixFunction> {
        let mut v = vec![&self.e, &self.f];
        if let Some(q) = &self.q {
            v.push(q);
        }
        v
    }

    /// Refuse derivatives of order `order` at a breakpoint probed without a side
    /// when some coefficient is less smooth than that.
    pub fn check_order(&self, p: Point, order: usize) -> Result<()> {
        if p.side != Side::Auto {
            return Ok(());
        }
        for f in self.parts() {
            if f.breakpoints().iter().any(|&b| (b - p.t).abs() <= 1e-12 * (1.0 + b.abs())) && order > f.smoothness() {
                return Err(DaeError::InsufficientSmoothness(order));
            }
        }
        Ok(())
    }

    /// Taylor series of `E` and `F` with `n` coefficients at `p`.
    pub fn series(&self, p: Point, n: usize) -> Result<(Series, Series)> {
        Ok((
            Series::from_pmf(&self.e, p.t, p.side, n)?,
            Series::from_pmf(&self.f, p.t, p.side, n)?,
        ))
    }

    /// Derivatives `q^(0..n)` at `p`; zero when the problem is homogeneous.
    pub fn q_derivatives(&self, p: Point, n: usize) -> Result<Vec<DVector<f64>>> {
        let m = self.m();
        match &self.q {
            None => Ok(vec![DVector::zeros(m); n]),
            Some(q) => {
                let s = Series::from_pmf(q, p.t, p.side, n)?;
                Ok((0..n)
                    .map(|k| {
                        let d: DMatrix<f64> = s.derivative_at(k);
                        DVector::from_column_slice(d.as_slice())
                    })
                    .collect())
            }
        }
    }

    pub fn to_json_string(&self) -> String {
        let j = ProblemJson {
            interval: [self.interval().0, self.interval().1],
            e: self.e.clone(),
            f: self.f.clone(),
            q: self.q.clone(),
            tolerance: Some(self.tol),
        };
        serde_json::to_string_pretty(&j).expect("problem serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: ProblemJson = serde_json::from_str(s).map_err(|e| DaeError::Parse(e.to_string()))?;
        let p = DaeProblem::new(j.e, j.f, j.q)?;
        if !same_interval(p.interval(), (j.interval[0], j.interval[1])) {
            return Err(DaeError::DimensionMismatch(format!(
                "declared interval [{}, {}] differs from the coefficient segments",
                j.interval[0], j.interval[1]
            )));
        }
        Ok(match j.tolerance {
            Some(t) => p.with_tol(TolerancePolicy::new(t.rel_rank_tol, t.abs_floor)?),
            None => p,
        })
    }
}
