use super::{rank_warn, series_len, CharacteristicProfile, StrangenessTriple};
use crate::error::{DaeError, Result};
use crate::problem::{DaeProblem, Point};
use crate::series::Series;

#[derive(Debug, Clone)]
pub struct StrangenessResult {
    pub triples: Vec<StrangenessTriple>,
    pub profile: CharacteristicProfile,
    /// `μ^S`, the level whose strangeness vanishes.
    pub mu_s: usize,
    pub warnings: Vec<String>,
}

/// Strangeness reduction keeping the size `m`. The `s` equations that are
/// derivatives of algebraic ones are replaced by their differentiated form.
pub fn strangeness_profile(problem: &DaeProblem, p: Point) -> Result<StrangenessResult> {
    let tol = problem.tol;
    let m = problem.m();
    let n = series_len(m);
    problem.check_order(p, n - 1)?;
    let (mut e, mut f) = problem.series(p, n)?;
    let mut warnings = Vec::new();
    let mut triples = Vec::new();
    for level in 0..=m {
        let r = rank_warn(e.value(), &tol, || format!("rank E^S_{level}"), &mut warnings)?;
        if r == m {
            if level > 0 {
                return Err(DaeError::PreRegularityLost { level, t: p.t });
            }
            triples.push(StrangenessTriple {
                level,
                r_s: m,
                a_s: 0,
                s_s: 0,
                d_s: m,
                v_s: 0,
            });
            return Ok(StrangenessResult {
                triples,
                profile: CharacteristicProfile::ode(m),
                mu_s: 0,
                warnings,
            });
        }
        let t = e.kernel(&tol)?;
        let tc = e.transpose().image(&tol)?;
        let z = e.cokernel(&tol)?;
        let y = e.image(&tol)?;
        let zf = z.transpose().mul(&f);
        let zft = zf.mul(&t);
        let a = rank_warn(zft.value(), &tol, || format!("rank Z*FT at level {level}"), &mut warnings)?;
        let vs = zft.cokernel(&tol)?;
        let vzftc = vs.transpose().mul(&zf).mul(&tc);
        let s = rank_warn(vzftc.value(), &tol, || format!("rank V*Z*FT^c at level {level}"), &mut warnings)?;
        let v = (m - r).saturating_sub(a + s);
        if a + s > m - r {
            return Err(DaeError::PreRegularityLost { level, t: p.t });
        }
        if v > 0 {
            return Err(DaeError::NonZeroVanishing { level, v });
        }
        triples.push(StrangenessTriple {
            level,
            r_s: r,
            a_s: a,
            s_s: s,
            d_s: r - s,
            v_s: v,
        });
        if s == 0 {
            let r0 = triples[0].r_s;
            let thetas = triples.iter().map(|t| t.s_s).collect();
            return Ok(StrangenessResult {
                profile: CharacteristicProfile::from_thetas(m, r0, thetas)?,
                triples,
                mu_s: level,
                warnings,
            });
        }
        if e.len() < 2 {
            return Err(DaeError::MaxLevelExceeded(level));
        }
        let amat = vs.transpose().mul(&zf);
        let ye = y.transpose().mul(&e);
        let g = amat.mul(&ye.pinv_full_row()?);
        let gc = g.kernel(&tol)?.transpose();
        let yf = y.transpose().mul(&f);
        let len = amat.len() - 1;
        let e_new = Series::vstack(&[&gc.mul(&ye), &Series::zeros(m - (r - s), m, len)]);
        let f_new = Series::vstack(&[&gc.mul(&yf), &g.mul(&yf).sub(&amat.deriv()), &zf]);
        e = e_new.truncate(len);
        f = f_new.truncate(len);
    }
    Err(DaeError::MaxLevelExceeded(m))
}
