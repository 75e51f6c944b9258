//! Admissible matrix function chains `G_i, B_i` with projectors, tractability
//! characteristics and the canonical subspaces `S_can`, `N_can`.

use nalgebra::DMatrix;

use crate::error::{DaeError, Result};
use crate::frameworks::{reduction_profile, series_len, CharacteristicProfile, ReductionMode};
use crate::numlin::{self, Projector, ProjectorKind, Subspace};
use crate::problem::{DaeProblem, Point};
use crate::series::Series;

#[derive(Debug, Clone)]
pub struct ChainLevel {
    pub level: usize,
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: Projector,
    pub p: Projector,
    pub pi: Projector,
    pub r_t: usize,
    pub u_t: usize,
    /// Basis of `N_i = ker G_i`.
    pub n: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub levels: Vec<ChainLevel>,
    /// Ranks `r^T_0 … r^T_μ`.
    pub ranks: Vec<usize>,
    pub mu_t: usize,
    pub profile: CharacteristicProfile,
    /// `D Π_i D⁻` for each level, for audit.
    pub d_pi_d: Vec<DMatrix<f64>>,
    pub warnings: Vec<String>,
}

fn proj(m: &DMatrix<f64>, kind: ProjectorKind) -> Projector {
    Projector {
        matrix: m.clone(),
        kind,
    }
}

/// Projector onto `im n` along `im [x, (im [n x])^⊥]`.
fn admissible_q(n: &Series, x: &Series, tol: &numlin::TolerancePolicy) -> Result<Series> {
    let m = n.rows();
    let k = n.cols();
    let nx = Series::hstack(&[n, x]);
    let perp = if nx.cols() == 0 {
        Series::identity(m, nx.len())
    } else {
        nx.transpose().kernel(tol)?
    };
    let big = Series::hstack(&[&nx, &perp]);
    if big.cols() != m {
        return Err(DaeError::DimensionMismatch("chain subspaces do not span".into()));
    }
    let inv = big.inverse()?;
    let mut sel = DMatrix::zeros(m, m);
    for i in 0..k {
        sel[(i, i)] = 1.0;
    }
    Ok(big.mul_const(&sel).mul(&inv))
}

pub fn admissible_chain_at(problem: &DaeProblem, p: Point, max_level: usize) -> Result<Chain> {
    let tol = problem.tol;
    let m = problem.m();
    let n = series_len(m);
    problem.check_order(p, n - 1)?;
    let (e, f) = problem.series(p, n)?;
    let mut warnings = Vec::new();
    let tc = e.transpose().image(&tol)?;
    let pp = Series::orthoprojector(&tc)?;
    let id = Series::identity(m, n);
    let mut g = e.clone();
    let mut b = f.sub(&e.mul(&pp.deriv()));
    let mut q = id.sub(&pp);
    let mut pi = pp.clone();
    let n0 = if m == tc.cols() {
        Series::zeros(m, 0, n)
    } else {
        e.kernel(&tol)?
    };
    let r0 = crate::frameworks::rank_warn(e.value(), &tol, || "rank G_0".into(), &mut warnings)?;
    let mut ranks = vec![r0];
    let mut levels = vec![ChainLevel {
        level: 0,
        g: g.value().clone(),
        b: b.value().clone(),
        q: proj(q.value(), ProjectorKind::Orthogonal),
        p: proj(pp.value(), ProjectorKind::Orthogonal),
        pi: proj(pi.value(), ProjectorKind::Orthogonal),
        r_t: r0,
        u_t: 0,
        n: n0.value().clone(),
    }];
    let mut d_pi_d = vec![pp.mul(&pi).mul(&pp).value().clone()];
    let mut nsum = n0;
    let mut mu = 0;
    if r0 < m {
        let mut done = false;
        for i in 1..=max_level {
            if g.len() < 2 {
                return Err(DaeError::MaxLevelExceeded(i));
            }
            let g_i = g.add(&b.mul(&q));
            let r_i = crate::frameworks::rank_warn(g_i.value(), &tol, || format!("rank G_{i}"), &mut warnings)?;
            if r_i < *ranks.last().unwrap() {
                return Err(DaeError::NonConstantRank(i));
            }
            ranks.push(r_i);
            let (n_i, q_i) = if r_i == m {
                (Series::zeros(m, 0, g_i.len()), Series::zeros(m, m, g_i.len()))
            } else {
                let n_i = g_i.kernel(&tol)?;
                let inter = numlin::intersection_dim(
                    &Subspace::new(m, n_i.value().clone()),
                    &Subspace::span(nsum.value(), &tol)?,
                    &tol,
                )?;
                if inter.dim > 0 {
                    return Err(DaeError::NonzeroIntersection { level: i, u: inter.dim });
                }
                let q_i = admissible_q(&n_i, &nsum, &tol)?;
                (n_i, q_i)
            };
            let p_i = Series::identity(m, q_i.len()).sub(&q_i);
            let pi_i = pi.mul(&p_i);
            let dpid = pp.mul(&pi_i).mul(&pp);
            let b_i = b
                .mul(&id.sub(&q))
                .sub(&g_i.mul(&pp).mul(&dpid.deriv()).mul(&pp).mul(&pi));
            levels.push(ChainLevel {
                level: i,
                g: g_i.value().clone(),
                b: b_i.value().clone(),
                q: proj(q_i.value(), ProjectorKind::Oblique),
                p: proj(p_i.value(), ProjectorKind::Oblique),
                pi: proj(pi_i.value(), ProjectorKind::Oblique),
                r_t: r_i,
                u_t: 0,
                n: n_i.value().clone(),
            });
            d_pi_d.push(dpid.value().clone());
            if r_i == m {
                mu = i;
                done = true;
                break;
            }
            nsum = Series::hstack(&[&nsum, &n_i]);
            g = g_i;
            b = b_i;
            q = q_i;
            pi = pi_i;
        }
        if !done {
            return Err(DaeError::MaxLevelExceeded(max_level));
        }
    }
    let profile = tractability_profile(m, &ranks)?;
    Ok(Chain {
        levels,
        ranks,
        mu_t: mu,
        profile,
        d_pi_d,
        warnings,
    })
}

/// `θ_{i−1} = m − r^T_i`.
pub fn tractability_profile(m: usize, ranks: &[usize]) -> Result<CharacteristicProfile> {
    let r = ranks[0];
    if r == m {
        return Ok(CharacteristicProfile::ode(m));
    }
    let thetas: Vec<usize> = ranks[1..].iter().map(|&x| m - x).collect();
    CharacteristicProfile::from_thetas(m, r, thetas)
}

pub fn tractability_at(problem: &DaeProblem, p: Point) -> Result<Chain> {
    admissible_chain_at(problem, p, problem.m())
}

#[derive(Debug, Clone)]
pub struct CanonicalSubspaces {
    pub s_can: Subspace,
    pub n_can: Subspace,
    pub at_t: f64,
}

pub fn canonical_subspaces_at(problem: &DaeProblem, p: Point, chain: &Chain) -> Result<CanonicalSubspaces> {
    let tol = problem.tol;
    let m = problem.m();
    let ncols: Vec<&DMatrix<f64>> = chain.levels.iter().take(chain.mu_t).map(|l| &l.n).collect();
    let n_can = if ncols.is_empty() {
        Subspace::zero(m)
    } else {
        Subspace::span(&numlin::stack_cols(&ncols), &tol)?
    };
    let s_can = if chain.mu_t == 0 {
        Subspace::full(m)
    } else {
        let red = reduction_profile(problem, p, ReductionMode::Basic)?;
        if red.profile != chain.profile {
            return Err(DaeError::IndexUndetermined(format!(
                "reduction gives {} but the chain gives {}",
                red.profile, chain.profile
            )));
        }
        if red.c_product.ncols() == 0 {
            Subspace::zero(m)
        } else {
            Subspace::span(&red.c_product, &tol)?
        }
    };
    let overlap = numlin::intersection_dim(&s_can, &n_can, &tol)?.dim;
    if overlap > 0 || s_can.dim() + n_can.dim() != m {
        return Err(DaeError::DecompositionFailure(overlap.max(1)));
    }
    Ok(CanonicalSubspaces {
        s_can,
        n_can,
        at_t: p.t,
    })
}
