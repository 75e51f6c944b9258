//! Basic reduction with basis derivatives from central differences.
//!
//! Orthonormal bases at stencil points are rotated onto the bases at the
//! probe by the orthogonal Procrustes factor, then differenced. Each level
//! triples the number of evaluations, so this is meant for small indices.

use nalgebra::DMatrix;

use super::{CharacteristicProfile, ReductionLevel};
use crate::error::{DaeError, Result};
use crate::numlin::{self, Subspace, TolerancePolicy};
use crate::problem::{DaeProblem, Point};
use crate::series::Series;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Polar factor of `M`: the orthogonal matrix closest to it.
pub fn procrustes(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let svd = numlin::full_svd(m)?;
    let k = m.nrows().min(m.ncols());
    Ok(svd.u.columns(0, k) * svd.v.columns(0, k).transpose())
}

/// Rotate the orthonormal basis `b` onto `reference` (same dimension).
pub fn align(b: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(b * procrustes(&(b.transpose() * reference))?)
}

struct Refs {
    y: DMatrix<f64>,
    z: DMatrix<f64>,
    c: DMatrix<f64>,
}

fn leading(u: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    u.columns(0, k).into_owned()
}

fn trailing(u: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    u.columns(u.ncols() - k, k).into_owned()
}

/// Aligned `(Y, Z, C)` for a pair whose dimensions are fixed by `refs`.
fn bases(e: &DMatrix<f64>, f: &DMatrix<f64>, refs: &Refs) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let svd = numlin::full_svd(e)?;
    let y = align(&leading(&svd.u, refs.y.ncols()), &refs.y)?;
    let z = align(&trailing(&svd.u, refs.z.ncols()), &refs.z)?;
    let zf = z.transpose() * f;
    let c_raw = if zf.nrows() == 0 {
        DMatrix::identity(f.ncols(), f.ncols())
    } else {
        trailing(&numlin::full_svd(&zf)?.v, refs.c.ncols())
    };
    let c = align(&c_raw, &refs.c)?;
    Ok((y, z, c))
}

struct Fd<'a> {
    e: Series,
    f: Series,
    h: f64,
    refs: Vec<Refs>,
    _p: &'a DaeProblem,
}

impl Fd<'_> {
    /// `{E_level, F_level}` at offset `s` from the probe.
    fn pair(&self, s: f64, level: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if level == 0 {
            return Ok((self.e.eval(s), self.f.eval(s)));
        }
        let refs = &self.refs[level - 1];
        let (e, f) = self.pair(s, level - 1)?;
        let (y, _, c) = bases(&e, &f, refs)?;
        let cp = {
            let (ep, fp) = self.pair(s + self.h, level - 1)?;
            let (em, fm) = self.pair(s - self.h, level - 1)?;
            let cplus = bases(&ep, &fp, refs)?.2;
            let cminus = bases(&em, &fm, refs)?.2;
            (cplus - cminus) / (2.0 * self.h)
        };
        let yt = y.transpose();
        Ok((&yt * &e * &c, &yt * (&f * &c + &e * cp)))
    }
}

/// Basic reduction at `p` with finite-difference basis derivatives of step `h`.
pub fn reduction_profile_fd(problem: &DaeProblem, p: Point, h: f64) -> Result<(CharacteristicProfile, Vec<ReductionLevel>)> {
    let tol: TolerancePolicy = problem.tol;
    let m = problem.m();
    let n = problem.e.max_degree().max(problem.f.max_degree()) + 1;
    problem.check_order(p, 1)?;
    let (e, f) = problem.series(p, n)?;
    let mut fd = Fd {
        e,
        f,
        h,
        refs: Vec::new(),
        _p: problem,
    };
    let mut levels: Vec<ReductionLevel> = Vec::new();
    let mut thetas = Vec::new();
    let mut r0 = 0;
    for level in 0..=m {
        let (e, f) = fd.pair(0.0, level)?;
        let mi = e.nrows();
        let fe = numlin::fundamental_subspaces(&e, &tol)?;
        let r = fe.rank.rank;
        if level == 0 {
            r0 = r;
            if r == m {
                return Ok((CharacteristicProfile::ode(m), levels));
            }
        } else if r != levels.last().map(|l| l.r_i - l.theta_i).unwrap() {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        if numlin::rank_of(&numlin::stack_cols(&[&e, &f]), &tol)? != mi {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        let z = fe.cokernel.basis.clone();
        let zf = z.transpose() * &f;
        let c = if zf.nrows() == 0 {
            DMatrix::identity(mi, mi)
        } else {
            numlin::kernel(&zf, &tol)?.basis
        };
        if c.ncols() != r {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        let theta = numlin::intersection_dim(&fe.kernel, &Subspace::new(mi, c.clone()), &tol)?.dim;
        levels.push(ReductionLevel {
            level,
            m_i: mi,
            e: e.clone(),
            f: f.clone(),
            r_i: r,
            theta_i: theta,
            y: fe.range.basis.clone(),
            z: z.clone(),
            c: c.clone(),
        });
        thetas.push(theta);
        if theta == 0 {
            return Ok((CharacteristicProfile::from_thetas(m, r0, thetas)?, levels));
        }
        fd.refs.push(Refs {
            y: fe.range.basis,
            z,
            c,
        });
    }
    Err(DaeError::MaxLevelExceeded(m))
}
