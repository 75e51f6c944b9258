use super::{rank_warn, series_len, CharacteristicProfile};
use crate::error::{DaeError, Result};
use crate::numlin::{self, TolerancePolicy};
use crate::problem::{DaeProblem, Point};
use crate::series::Series;

#[derive(Debug, Clone)]
pub struct DissectionResult {
    pub profile: CharacteristicProfile,
    /// `r^D_0 … r^D_κ`.
    pub ranks: Vec<usize>,
    /// `a^D_i = rank Z_i* F_i T_i`.
    pub a: Vec<usize>,
    pub warnings: Vec<String>,
}

fn kernel_or_identity(s: &Series, tol: &TolerancePolicy) -> Result<Series> {
    if s.rows() == 0 {
        Ok(Series::identity(s.cols(), s.len()))
    } else {
        s.kernel(tol)
    }
}

/// Basis of `S` assembled from the splittings `T, T^c, V, W, G, H`:
/// `C = [T^c G + T H^c 𝔈, T H]`.
fn dissection_basis(e: &Series, f: &Series, tol: &TolerancePolicy) -> Result<(Series, usize, usize)> {
    let t = kernel_or_identity(e, tol)?;
    let tc = e.transpose().image(tol)?;
    let z = e.cokernel(tol)?;
    let zf = z.transpose().mul(f);
    let zft = zf.mul(&t);
    let a = numlin::rank_of(zft.value(), tol)?;
    let theta = zft.rows() - a;
    // V spans im Z*FT, W its orthogonal complement.
    let v = zft.image(tol)?;
    let w = if zft.rows() == 0 {
        Series::zeros(0, 0, zft.len())
    } else {
        zft.cokernel(tol)?
    };
    let wzftc = w.transpose().mul(&zf).mul(&tc);
    let g = kernel_or_identity(&wzftc, tol)?;
    let vzft = v.transpose().mul(&zft);
    let h = kernel_or_identity(&vzft, tol)?;
    let hc = vzft.transpose().image(tol)?;
    let n = g.len().min(hc.len());
    let frak_e = if a == 0 {
        Series::zeros(0, g.cols(), n)
    } else {
        let lhs = vzft.mul(&hc).inverse()?;
        lhs.mul(&v.transpose().mul(&zf).mul(&tc).mul(&g)).scale(-1.0)
    };
    let first = tc.mul(&g).add(&t.mul(&hc).mul(&frak_e));
    let c = Series::hstack(&[&first, &t.mul(&h)]);
    Ok((c, a, theta))
}

pub fn dissection_profile(problem: &DaeProblem, p: Point) -> Result<DissectionResult> {
    let tol = problem.tol;
    let m = problem.m();
    let n = series_len(m);
    problem.check_order(p, n - 1)?;
    let (mut e, mut f) = problem.series(p, n)?;
    let mut warnings = Vec::new();
    let r0 = rank_warn(e.value(), &tol, || "rank E".into(), &mut warnings)?;
    let mut ranks = vec![r0];
    let mut a_list = Vec::new();
    if r0 == m {
        return Ok(DissectionResult {
            profile: CharacteristicProfile::ode(m),
            ranks,
            a: a_list,
            warnings,
        });
    }
    let mut prev_r = r0;
    for level in 0..=m {
        let mi = e.rows();
        let r = rank_warn(e.value(), &tol, || format!("rank E^D_{level}"), &mut warnings)?;
        if level > 0 && r > prev_r {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        prev_r = r;
        let ef = numlin::stack_cols(&[e.value(), f.value()]);
        if rank_warn(&ef, &tol, || format!("rank [E^D_{level} F^D_{level}]"), &mut warnings)? != mi {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        let (c, a, theta) = dissection_basis(&e, &f, &tol)?;
        a_list.push(a);
        let rd = ranks.last().unwrap() + a;
        ranks.push(rd);
        if rd > m {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        if rd == m {
            let thetas: Vec<usize> = ranks[1..].iter().map(|&x| m - x).collect();
            let profile = CharacteristicProfile::from_thetas(m, r0, thetas)?;
            return Ok(DissectionResult {
                profile,
                ranks,
                a: a_list,
                warnings,
            });
        }
        if theta == 0 || c.cols() != r || e.len() < 2 {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        let y = e.image(&tol)?;
        let yt = y.transpose();
        let e_next = yt.mul(&e).mul(&c);
        let f_next = yt.mul(&f.mul(&c).add(&e.mul(&c.deriv())));
        e = e_next;
        f = f_next;
    }
    Err(DaeError::MaxLevelExceeded(m))
}
