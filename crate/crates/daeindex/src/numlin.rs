//! Tolerance-governed dense linear algebra: ranks, fundamental subspaces,
//! projectors, pseudoinverses, intersections and the 1-fullness test.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DaeError, Result};

/// Gap ratios below this are flagged as ambiguous rank decisions.
pub const GAP_WARN: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub rel_rank_tol: f64,
    pub abs_floor: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            rel_rank_tol: 1e-10,
            abs_floor: 1e-13,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rel_rank_tol: f64, abs_floor: f64) -> Result<Self> {
        if !(rel_rank_tol > 0.0 && abs_floor > 0.0) {
            return Err(DaeError::InvalidProfile("tolerances must be positive".into()));
        }
        Ok(TolerancePolicy {
            rel_rank_tol,
            abs_floor,
        })
    }

    /// Default policy, with `rel_rank_tol` taken from `DAE_TOL` when set.
    pub fn from_env() -> Self {
        let mut p = Self::default();
        if let Some(v) = std::env::var("DAE_TOL").ok().and_then(|s| s.trim().parse::<f64>().ok()) {
            if v > 0.0 {
                p.rel_rank_tol = v;
            }
        }
        p
    }

    pub fn cutoff(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        self.abs_floor
            .max(self.rel_rank_tol * sigma_max * rows.max(cols) as f64)
    }

    /// Threshold for "numerically zero" entries of orthonormal data.
    pub fn unit_cutoff(&self) -> f64 {
        (10.0 * self.rel_rank_tol).max(1e-12)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub cutoff: f64,
    /// `σ_r / σ_{r+1}`; `None` when one side of the gap does not exist.
    pub gap_ratio: Option<f64>,
}

impl RankInfo {
    pub fn ambiguous(&self) -> bool {
        self.gap_ratio.is_some_and(|g| g < GAP_WARN)
    }
}

/// Full SVD with descending singular values: `M = U diag(σ) Vᵀ`, `U` is
/// `rows × rows`, `V` is `cols × cols`.
pub struct FullSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(DaeError::NonFinite)
    }
}

pub fn full_svd(m: &DMatrix<f64>) -> Result<FullSvd> {
    check_finite(m)?;
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(FullSvd {
            u: DMatrix::identity(r, r),
            sigma: vec![],
            v: DMatrix::identity(c, c),
        });
    }
    let a = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = a.svd().map_err(|_| DaeError::NonFinite)?;
    let s = svd.S().column_vector();
    let mut idx: Vec<usize> = (0..r.min(c)).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let sigma = idx.iter().map(|&i| s[i]).collect();
    let (fu, fv) = (svd.U(), svd.V());
    let perm = |j: usize| idx.get(j).copied().unwrap_or(j);
    Ok(FullSvd {
        u: DMatrix::from_fn(r, r, |i, j| fu[(i, perm(j))]),
        sigma,
        v: DMatrix::from_fn(c, c, |i, j| fv[(i, perm(j))]),
    })
}

pub fn rank_info(m: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<RankInfo> {
    check_finite(m)?;
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(RankInfo {
            rank: 0,
            singular_values: vec![],
            cutoff: tol.abs_floor,
            gap_ratio: None,
        });
    }
    let sv = if r >= c {
        m.clone().singular_values()
    } else {
        m.transpose().singular_values()
    };
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(info_from_sigma(s, r, c, tol))
}

fn info_from_sigma(s: Vec<f64>, r: usize, c: usize, tol: &TolerancePolicy) -> RankInfo {
    let smax = s.first().copied().unwrap_or(0.0);
    let cut = tol.cutoff(smax, r, c);
    let rank = s.iter().filter(|&&x| x > cut).count();
    let gap_ratio = if rank == 0 || rank == s.len() {
        None
    } else {
        let below = s[rank];
        Some(if below > 0.0 { s[rank - 1] / below } else { f64::INFINITY })
    };
    RankInfo {
        rank,
        singular_values: s,
        cutoff: cut,
        gap_ratio,
    }
}

pub fn rank_of(m: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<usize> {
    Ok(rank_info(m, tol)?.rank)
}

/// First entry above `1e-10` in absolute value of every column becomes positive.
pub fn normalize_signs(b: &mut DMatrix<f64>) {
    for j in 0..b.ncols() {
        let mut col = b.column_mut(j);
        if let Some(x) = col.iter().copied().find(|x| x.abs() > 1e-10) {
            if x < 0.0 {
                col.neg_mut();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub ambient_dim: usize,
    pub basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(ambient_dim: usize, mut basis: DMatrix<f64>) -> Self {
        normalize_signs(&mut basis);
        Subspace { ambient_dim, basis }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Orthonormal basis for the span of arbitrary columns.
    pub fn span(cols: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<Self> {
        Ok(fundamental_subspaces(cols, tol)?.range)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> Projector {
        Projector {
            matrix: &self.basis * self.basis.transpose(),
            kind: ProjectorKind::Orthogonal,
        }
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self, tol: &TolerancePolicy) -> Result<Self> {
        Ok(fundamental_subspaces(&self.basis.transpose(), tol)?.kernel)
    }

    /// Largest principal-angle sine; `1.0` if dimensions differ.
    pub fn distance(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() || self.ambient_dim != other.ambient_dim {
            return 1.0;
        }
        if self.dim() == 0 {
            return 0.0;
        }
        let p = self.projector().matrix - other.projector().matrix;
        p.clone().singular_values().max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectorKind {
    Orthogonal,
    Oblique,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub matrix: DMatrix<f64>,
    pub kind: ProjectorKind,
}

impl Projector {
    /// Projector onto `im` along `ker`; the dimensions must add up.
    pub fn oblique(im: &Subspace, ker: &Subspace) -> Result<Self> {
        let n = im.ambient_dim;
        if ker.ambient_dim != n || im.dim() + ker.dim() != n {
            return Err(DaeError::DimensionMismatch("complementary subspaces".into()));
        }
        let mut full = DMatrix::zeros(n, n);
        full.view_mut((0, 0), (n, im.dim())).copy_from(&im.basis);
        full.view_mut((0, im.dim()), (n, ker.dim())).copy_from(&ker.basis);
        let inv = full
            .clone()
            .try_inverse()
            .ok_or_else(|| DaeError::DimensionMismatch("subspaces not complementary".into()))?;
        let head = inv.rows(0, im.dim()).into_owned();
        Ok(Projector {
            matrix: &im.basis * head,
            kind: ProjectorKind::Oblique,
        })
    }

    pub fn idempotency_defect(&self) -> f64 {
        (&self.matrix * &self.matrix - &self.matrix).amax()
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    pub fn complement(&self) -> Projector {
        let n = self.matrix.nrows();
        Projector {
            matrix: DMatrix::identity(n, n) - &self.matrix,
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fundamental {
    pub range: Subspace,
    pub kernel: Subspace,
    /// Row space, the orthogonal complement of the kernel.
    pub corange: Subspace,
    /// Orthogonal complement of the range.
    pub cokernel: Subspace,
    pub rank: RankInfo,
}

pub fn fundamental_subspaces(m: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<Fundamental> {
    let (r, c) = m.shape();
    let svd = full_svd(m)?;
    let info = info_from_sigma(svd.sigma.clone(), r, c, tol);
    let k = info.rank;
    let range = Subspace::new(r, svd.u.columns(0, k).into_owned());
    let cokernel = Subspace::new(r, svd.u.columns(k, r - k).into_owned());
    let corange = Subspace::new(c, svd.v.columns(0, k).into_owned());
    let kernel = Subspace::new(c, svd.v.columns(k, c - k).into_owned());
    Ok(Fundamental {
        range,
        kernel,
        corange,
        cokernel,
        rank: info,
    })
}

pub fn kernel(m: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<Subspace> {
    Ok(fundamental_subspaces(m, tol)?.kernel)
}

pub fn stack_rows(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts.iter().map(|p| p.ncols()).max().unwrap_or(0);
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for p in parts {
        out.view_mut((r0, 0), p.shape()).copy_from(*p);
        r0 += p.nrows();
    }
    out
}

pub fn stack_cols(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c0 = 0;
    for p in parts {
        out.view_mut((0, c0), p.shape()).copy_from(*p);
        c0 += p.ncols();
    }
    out
}

#[derive(Debug, Clone)]
pub struct Intersection {
    pub dim: usize,
    pub basis: Subspace,
}

/// `A ∩ B` as the kernel of the stacked annihilators `[A⊥ᵀ; B⊥ᵀ]`.
pub fn intersection_dim(a: &Subspace, b: &Subspace, tol: &TolerancePolicy) -> Result<Intersection> {
    if a.ambient_dim != b.ambient_dim {
        return Err(DaeError::DimensionMismatch("intersection of different ambient spaces".into()));
    }
    let n = a.ambient_dim;
    if a.dim() == 0 || b.dim() == 0 {
        return Ok(Intersection {
            dim: 0,
            basis: Subspace::zero(n),
        });
    }
    let ac = a.complement(tol)?.basis.transpose();
    let bc = b.complement(tol)?.basis.transpose();
    let stacked = stack_rows(&[&ac, &bc]);
    let ker = if stacked.nrows() == 0 {
        Subspace::full(n)
    } else {
        kernel(&stacked, tol)?
    };
    let dim = ker.dim().min(a.dim()).min(b.dim());
    Ok(Intersection { dim, basis: ker })
}

pub fn sum_dim(a: &Subspace, b: &Subspace, tol: &TolerancePolicy) -> Result<usize> {
    rank_of(&stack_cols(&[&a.basis, &b.basis]), tol)
}

pub fn pseudo_inverse(m: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<DMatrix<f64>> {
    let (r, c) = m.shape();
    let svd = full_svd(m)?;
    let info = info_from_sigma(svd.sigma.clone(), r, c, tol);
    let mut out = DMatrix::zeros(c, r);
    for i in 0..info.rank {
        let v = svd.v.column(i);
        let u = svd.u.column(i);
        out += (v * u.transpose()) / svd.sigma[i];
    }
    Ok(out)
}

/// Least-squares solution `M⁺ b` and the residual norm `‖M M⁺ b − b‖`.
pub fn lstsq(m: &DMatrix<f64>, b: &DVector<f64>, tol: &TolerancePolicy) -> Result<(DVector<f64>, f64)> {
    let x = pseudo_inverse(m, tol)? * b;
    let res = (m * &x - b).norm();
    Ok((x, res))
}

#[derive(Debug, Clone)]
pub struct OneFullness {
    pub is_one_full: bool,
    pub witness_kernel: Subspace,
    /// Largest singular value of the leading block of the kernel basis.
    pub leading_norm: f64,
}

/// Every kernel vector of `M` has a zero leading block of size `block`.
pub fn one_fullness(m: &DMatrix<f64>, block: usize, tol: &TolerancePolicy) -> Result<OneFullness> {
    let (r, c) = m.shape();
    if r != c || block == 0 || c % block != 0 {
        return Err(DaeError::DimensionMismatch(format!(
            "{r}x{c} matrix with leading block {block}"
        )));
    }
    let ker = kernel(m, tol)?;
    let lead = ker.basis.rows(0, block).into_owned();
    let leading_norm = if lead.ncols() == 0 {
        0.0
    } else {
        lead.singular_values().max()
    };
    Ok(OneFullness {
        is_one_full: leading_norm <= tol.unit_cutoff(),
        witness_kernel: ker,
        leading_norm,
    })
}

/// The same verdict through a rank identity: `M` is 1-full iff
/// `rank M = block + rank M[:, block..]`, i.e. `ker M = {0} × ker M_tail`.
pub fn one_fullness_by_ranks(m: &DMatrix<f64>, block: usize, tol: &TolerancePolicy) -> Result<bool> {
    let (r, c) = m.shape();
    if r != c || block == 0 || c % block != 0 {
        return Err(DaeError::DimensionMismatch(format!(
            "{r}x{c} matrix with leading block {block}"
        )));
    }
    let rm = rank_of(m, tol)?;
    let tail = m.columns(block, c - block).into_owned();
    let rt = if tail.ncols() == 0 { 0 } else { rank_of(&tail, tol)? };
    Ok(rm == block + rt)
}
