//! Derivative arrays `𝓔_[k]`, `𝓕_[k]`, `𝓓_[k]`, `𝓑_[k]`, their rank data, and
//! the differentiation-type indices built on them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DaeError, Result};
use crate::numlin::{self, TolerancePolicy};
use crate::problem::{DaeProblem, Point};
use crate::profile::CharacteristicProfile;

#[derive(Debug, Clone)]
pub struct DerivativeArrayStack {
    pub k: usize,
    pub m: usize,
    pub at: Point,
    /// `m(k+1) × m(k+1)`, acting on `(x', …, x^(k+1))`.
    pub e_arr: DMatrix<f64>,
    /// `m(k+1) × m`, acting on `x`.
    pub f_arr: DMatrix<f64>,
    pub d_arr: DMatrix<f64>,
    pub b_arr: DMatrix<f64>,
    pub q_arr: DVector<f64>,
    /// Row block `i` divided by `i!`, column block `j` of `𝓔` multiplied by `(j+1)!`.
    pub taylor_scaled: bool,
    e_derivs: Vec<DMatrix<f64>>,
    f_derivs: Vec<DMatrix<f64>>,
}

fn binom(n: usize, k: usize) -> f64 {
    crate::matfun::binomial(n, k)
}

pub fn build_arrays(problem: &DaeProblem, p: Point, k: usize) -> Result<DerivativeArrayStack> {
    problem.check_order(p, k)?;
    let m = problem.m();
    let (es, fs) = problem.series(p, k + 1)?;
    let e_derivs: Vec<DMatrix<f64>> = (0..=k).map(|j| es.derivative_at(j)).collect();
    let f_derivs: Vec<DMatrix<f64>> = (0..=k).map(|j| fs.derivative_at(j)).collect();
    let qd = problem.q_derivatives(p, k + 1)?;
    let n = m * (k + 1);
    let mut e_arr = DMatrix::zeros(n, n);
    let mut f_arr = DMatrix::zeros(n, m);
    let mut q_arr = DVector::zeros(n);
    for i in 0..=k {
        f_arr.view_mut((i * m, 0), (m, m)).copy_from(&f_derivs[i]);
        q_arr.rows_mut(i * m, m).copy_from(&qd[i]);
        for j in 0..=i {
            let l = i - j;
            let mut blk = &e_derivs[l] * binom(i, l);
            if l >= 1 {
                blk += &f_derivs[l - 1] * binom(i, l - 1);
            }
            e_arr.view_mut((i * m, j * m), (m, m)).copy_from(&blk);
        }
    }
    let mut s = DerivativeArrayStack {
        k,
        m,
        at: p,
        e_arr,
        f_arr,
        d_arr: DMatrix::zeros(0, 0),
        b_arr: DMatrix::zeros(0, 0),
        q_arr,
        taylor_scaled: false,
        e_derivs,
        f_derivs,
    };
    let tol = problem.tol;
    s.fill_db(&tol)?;
    Ok(s)
}

impl DerivativeArrayStack {
    fn fill_db(&mut self, tol: &TolerancePolicy) -> Result<()> {
        let m = self.m;
        let e = &self.e_derivs[0];
        let p = numlin::pseudo_inverse(e, tol)? * e;
        let n = m * (self.k + 1);
        let mut d = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        d.view_mut((0, 0), (m, m)).copy_from(e);
        b.view_mut((0, 0), (m, m)).copy_from(&p);
        if self.k >= 1 {
            let lower = m * self.k;
            let fk = self.f_arr.rows(0, lower).into_owned();
            let ek = self.e_arr.view((0, 0), (lower, lower)).into_owned();
            for t in [&mut d, &mut b] {
                t.view_mut((m, 0), (lower, m)).copy_from(&fk);
                t.view_mut((m, m), (lower, lower)).copy_from(&ek);
            }
        }
        self.d_arr = d;
        self.b_arr = b;
        Ok(())
    }

    /// The stack of order `j ≤ k`, sliced from this one.
    pub fn sub(&self, j: usize, tol: &TolerancePolicy) -> Result<DerivativeArrayStack> {
        assert!(j <= self.k);
        let m = self.m;
        let n = m * (j + 1);
        let mut s = DerivativeArrayStack {
            k: j,
            m,
            at: self.at,
            e_arr: self.e_arr.view((0, 0), (n, n)).into_owned(),
            f_arr: self.f_arr.rows(0, n).into_owned(),
            d_arr: DMatrix::zeros(0, 0),
            b_arr: DMatrix::zeros(0, 0),
            q_arr: self.q_arr.rows(0, n).into_owned(),
            taylor_scaled: self.taylor_scaled,
            e_derivs: self.e_derivs[..=j].to_vec(),
            f_derivs: self.f_derivs[..=j].to_vec(),
        };
        s.fill_db(tol)?;
        Ok(s)
    }

    /// Equivalent stack in Taylor-coefficient unknowns `x^(j)/j!`. Ranks,
    /// 1-fullness, `S_[k]` and the first block of solutions are unchanged, but
    /// the binomial growth of the blocks is gone.
    pub fn scaled(&self, tol: &TolerancePolicy) -> Result<DerivativeArrayStack> {
        if self.taylor_scaled {
            return Ok(self.clone());
        }
        let m = self.m;
        let mut s = self.clone();
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        for i in 0..=self.k {
            let ri = 1.0 / fact(i);
            s.e_arr.rows_mut(i * m, m).scale_mut(ri);
            s.f_arr.rows_mut(i * m, m).scale_mut(ri);
            s.q_arr.rows_mut(i * m, m).scale_mut(ri);
            s.e_arr.columns_mut(i * m, m).scale_mut(fact(i + 1));
        }
        s.taylor_scaled = true;
        s.fill_db(tol)?;
        Ok(s)
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e_derivs[0]
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f_derivs[0]
    }

    /// `𝓦 = I − 𝓔𝓔⁺`.
    pub fn w_proj(&self, tol: &TolerancePolicy) -> Result<DMatrix<f64>> {
        let range = numlin::fundamental_subspaces(&self.e_arr, tol)?.cokernel;
        Ok(&range.basis * range.basis.transpose())
    }

    /// Basis of `S_[k] = ker 𝓦_[k]𝓕_[k]`.
    pub fn s_subspace(&self, tol: &TolerancePolicy) -> Result<numlin::Subspace> {
        let wf = self.w_proj(tol)? * &self.f_arr;
        numlin::kernel(&wf, tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayProfile {
    pub m: usize,
    pub r: usize,
    /// `r_[j] = rank 𝓔_[j]`.
    pub r_arr: Vec<usize>,
    /// `rank [𝓔_[j] 𝓕_[j]] = m(j+1)`.
    pub full_row_rank_ok: Vec<bool>,
    /// `dim S_[j]`.
    pub s_dims: Vec<usize>,
    /// `rank 𝓦_[j]𝓕_[j]`.
    pub rank_wf: Vec<usize>,
    /// `ρ_j = rank [E; 𝓦_[j]𝓕_[j]]`.
    pub rho: Vec<usize>,
    /// `rank T_j`; entry 0 is `dim ker E`.
    pub rank_t: Vec<usize>,
    /// `rank V_j`; entry 0 is `rank E`.
    pub rank_v: Vec<usize>,
    /// `rank 𝓓_[j]`, entry 0 is `rank E`.
    pub rank_d: Vec<usize>,
    /// `rank 𝓑_[j]`, entry 0 is `rank E`.
    pub rank_b: Vec<usize>,
    /// 1-fullness of `𝓔_[j]`.
    pub one_full: Vec<bool>,
    /// 1-fullness of `𝓑_[j]` (entry 0: `E` nonsingular).
    pub b_one_full: Vec<bool>,
    pub warnings: Vec<String>,
}

fn rank_logged(m: &DMatrix<f64>, tol: &TolerancePolicy, what: &str, warnings: &mut Vec<String>) -> Result<usize> {
    let info = numlin::rank_info(m, tol)?;
    if info.ambiguous() {
        warnings.push(format!(
            "rank of {what} ambiguous: gap ratio {:.2e}",
            info.gap_ratio.unwrap_or(f64::NAN)
        ));
    }
    Ok(info.rank)
}

/// Orthoprojector rank onto `ker [A; B]`, i.e. its nullity.
fn stacked_nullity(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<usize> {
    let s = numlin::stack_rows(&[a, b]);
    Ok(numlin::kernel(&s, tol)?.dim())
}

pub fn array_profile(problem: &DaeProblem, p: Point, k_max: usize) -> Result<ArrayProfile> {
    let stack = build_arrays(problem, p, k_max)?;
    profile_from_stack(&stack, &problem.tol)
}

pub fn profile_from_stack(stack: &DerivativeArrayStack, tol: &TolerancePolicy) -> Result<ArrayProfile> {
    let stack = &stack.scaled(tol)?;
    let m = stack.m;
    let mut w = Vec::new();
    let e = stack.e().clone();
    let r = rank_logged(&e, tol, "E", &mut w)?;
    let pe = numlin::pseudo_inverse(&e, tol)? * &e;
    let qe = DMatrix::identity(m, m) - &pe;
    let mut prof = ArrayProfile {
        m,
        r,
        r_arr: vec![],
        full_row_rank_ok: vec![],
        s_dims: vec![],
        rank_wf: vec![],
        rho: vec![],
        rank_t: vec![m - r],
        rank_v: vec![r],
        rank_d: vec![r],
        rank_b: vec![r],
        one_full: vec![],
        b_one_full: vec![r == m],
        warnings: vec![],
    };
    let mut prev_wf: Option<DMatrix<f64>> = None;
    let mut prev_vf: Option<DMatrix<f64>> = None;
    for j in 0..=stack.k {
        let s = stack.sub(j, tol)?;
        let fund = numlin::fundamental_subspaces(&s.e_arr, tol)?;
        if fund.rank.ambiguous() {
            w.push(format!("rank of E_[{j}] ambiguous: gap ratio {:.2e}", fund.rank.gap_ratio.unwrap()));
        }
        let rj = fund.rank.rank;
        prof.r_arr.push(rj);
        let ef = numlin::stack_cols(&[&s.e_arr, &s.f_arr]);
        let rf = rank_logged(&ef, tol, &format!("[E_[{j}] F_[{j}]]"), &mut w)?;
        prof.full_row_rank_ok.push(rf == m * (j + 1));
        let wp = &fund.cokernel.basis * fund.cokernel.basis.transpose();
        let wf = &wp * &s.f_arr;
        let rwf = rank_logged(&wf, tol, &format!("W_[{j}]F_[{j}]"), &mut w)?;
        prof.rank_wf.push(rwf);
        prof.s_dims.push(m - rwf);
        prof.rho.push(m - stacked_nullity(&e, &wf, tol)?);
        let of = numlin::one_fullness(&s.e_arr, m, tol)?;
        prof.one_full.push(of.is_one_full);
        // 𝓥_[j]: orthoprojector along im [𝓕_[j]Q, 𝓔_[j]].
        let fq = &s.f_arr * &qe;
        let cok = numlin::fundamental_subspaces(&numlin::stack_cols(&[&fq, &s.e_arr]), tol)?.cokernel;
        let vf = (&cok.basis * cok.basis.transpose()) * &s.f_arr;
        if j >= 1 {
            prof.rank_t.push(stacked_nullity(&pe, prev_wf.as_ref().unwrap(), tol)?);
            prof.rank_v.push(stacked_nullity(&qe, prev_vf.as_ref().unwrap(), tol)?);
            prof.rank_d.push(rank_logged(&s.d_arr, tol, &format!("D_[{j}]"), &mut w)?);
            prof.rank_b.push(rank_logged(&s.b_arr, tol, &format!("B_[{j}]"), &mut w)?);
            prof.b_one_full.push(numlin::one_fullness(&s.b_arr, m, tol)?.is_one_full);
        }
        prev_wf = Some(wf);
        prev_vf = Some(vf);
    }
    prof.warnings = w;
    Ok(prof)
}

/// `θ_i = m + r_[i] − r_[i+1]` until the first zero.
pub fn theta_from_arrays(profile: &ArrayProfile) -> Result<CharacteristicProfile> {
    let m = profile.m;
    let r = profile.r;
    if r == m {
        return Ok(CharacteristicProfile::ode(m));
    }
    let mut thetas = Vec::new();
    for i in 0..profile.r_arr.len().saturating_sub(1) {
        if !profile.full_row_rank_ok[i] {
            return Err(DaeError::SolvabilityViolated(i));
        }
        let th = (m + profile.r_arr[i])
            .checked_sub(profile.r_arr[i + 1])
            .ok_or_else(|| DaeError::InvalidProfile("array ranks grew by more than m".into()))?;
        thetas.push(th);
        if th == 0 {
            if !profile.full_row_rank_ok[i + 1] {
                return Err(DaeError::SolvabilityViolated(i + 1));
            }
            return CharacteristicProfile::from_thetas(m, r, thetas);
        }
    }
    Err(DaeError::IndexUndetermined(format!(
        "no vanishing theta up to array order {}",
        profile.r_arr.len().saturating_sub(1)
    )))
}

/// Orders at which the computed ranks contradict `profile`: at a regular point
/// `r_[i] = rank 𝓓_[i] = rank 𝓑_[i] = im + r − θ₀ − … − θ_{i−1}` and
/// `ρ_i = m − θ_i`. Near a critical point the larger arrays lose rank first.
pub fn rank_pattern_violations(a: &ArrayProfile, profile: &CharacteristicProfile) -> Vec<String> {
    let (m, r) = (profile.m, profile.r);
    let th = |i: usize| profile.thetas.get(i).copied().unwrap_or(0);
    let mut out = Vec::new();
    let mut sigma = 0;
    for i in 0..a.r_arr.len() {
        let want = i * m + r - sigma;
        let got = [a.r_arr[i], a.rank_d.get(i).copied().unwrap_or(want), a.rank_b.get(i).copied().unwrap_or(want)];
        if got.iter().any(|&g| g != want) {
            out.push(format!("array ranks {got:?} at order {i}, pattern gives {want}"));
        }
        if let Some(&rho) = a.rho.get(i) {
            if rho != m - th(i) {
                out.push(format!("rho_{i} = {rho}, pattern gives {}", m - th(i)));
            }
        }
        sigma += th(i);
    }
    out
}

/// Array-derived profile at a point, building only the orders needed.
pub fn pointwise_profile(problem: &DaeProblem, p: Point, k_max: usize) -> Result<(CharacteristicProfile, Vec<usize>)> {
    let tol = problem.tol;
    let m = problem.m();
    let stack = build_arrays(problem, p, k_max)?.scaled(&tol)?;
    let r = numlin::rank_of(stack.e(), &tol)?;
    if r == m {
        return Ok((CharacteristicProfile::ode(m), vec![r]));
    }
    let frr = |j: usize, s: &DerivativeArrayStack| -> Result<bool> {
        let ef = numlin::stack_cols(&[&s.e_arr, &s.f_arr]);
        Ok(numlin::rank_of(&ef, &tol)? == m * (j + 1))
    };
    let mut ranks = vec![r];
    let mut thetas = Vec::new();
    if !frr(0, &stack.sub(0, &tol)?)? {
        return Err(DaeError::SolvabilityViolated(0));
    }
    for j in 1..=k_max {
        let s = stack.sub(j, &tol)?;
        if !frr(j, &s)? {
            return Err(DaeError::SolvabilityViolated(j));
        }
        let rj = numlin::rank_of(&s.e_arr, &tol)?;
        let th = (m + ranks[j - 1])
            .checked_sub(rj)
            .ok_or_else(|| DaeError::InvalidProfile("array ranks grew by more than m".into()))?;
        ranks.push(rj);
        thetas.push(th);
        if th == 0 {
            return Ok((CharacteristicProfile::from_thetas(m, r, thetas)?, ranks));
        }
    }
    Err(DaeError::IndexUndetermined(format!("no vanishing theta up to array order {k_max}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub mu_diff: Result<usize>,
    pub mu_rdiff: Result<usize>,
    pub mu_pbdiff: Result<usize>,
    pub sf_mu_hat: Result<usize>,
    /// `μ^diff = μ^pbdiff = μ^rdiff = μ̂ + 1` whenever all are defined.
    pub consistency: bool,
}

fn undefined(kind: &str, reason: impl Into<String>) -> DaeError {
    DaeError::Undefined {
        kind: kind.into(),
        reason: reason.into(),
    }
}

fn constant<T: PartialEq + Copy>(xs: impl Iterator<Item = T>) -> Option<T> {
    let mut it = xs;
    let first = it.next()?;
    it.all(|x| x == first).then_some(first)
}

/// SF data at one probe for order `mu_hat`: `(rank 𝓔, â, rank F̂₂, rank EC)`.
fn sf_data(stack: &DerivativeArrayStack, tol: &TolerancePolicy) -> Result<(usize, usize, usize, usize)> {
    let m = stack.m;
    let fund = numlin::fundamental_subspaces(&stack.e_arr, tol)?;
    let re = fund.rank.rank;
    let a_hat = m * (stack.k + 1) - re;
    let f2 = fund.cokernel.basis.transpose() * &stack.f_arr;
    let rf2 = numlin::rank_of(&f2, tol)?;
    let c = numlin::kernel(&f2, tol)?;
    let rec = numlin::rank_of(&(stack.e() * &c.basis), tol)?;
    Ok((re, a_hat, rf2, rec))
}

pub fn index_report(problem: &DaeProblem, probes: &[Point], k_max: usize) -> Result<IndexReport> {
    let tol = problem.tol;
    let m = problem.m();
    let stacks: Vec<DerivativeArrayStack> = probes
        .iter()
        .map(|&p| build_arrays(problem, p, k_max).and_then(|s| s.scaled(&tol)))
        .collect::<Result<_>>()?;
    let profiles: Vec<ArrayProfile> = stacks
        .iter()
        .map(|s| profile_from_stack(s, &tol))
        .collect::<Result<_>>()?;
    if profiles.is_empty() {
        return Err(DaeError::IndexUndetermined("no probes".into()));
    }

    let r_const = |j: usize| constant(profiles.iter().map(|p| p.r_arr[j]));
    let mu_diff = (0..=k_max)
        .find(|&j| r_const(j).is_some() && profiles.iter().all(|p| p.one_full[j]))
        .ok_or_else(|| undefined("differentiation index", format!("no constant-rank 1-full array up to order {k_max}")));
    let mu_rdiff = (0..=k_max)
        .find(|&j| (0..=j).all(|i| r_const(i).is_some()) && profiles.iter().all(|p| p.one_full[j]))
        .ok_or_else(|| {
            let bad = (0..=k_max).find(|&i| r_const(i).is_none());
            match bad {
                Some(i) => undefined("regular differentiation index", format!("rank of E_[{i}] varies over the probes")),
                None => undefined("regular differentiation index", format!("no 1-full array up to order {k_max}")),
            }
        });
    let mu_pbdiff = if constant(profiles.iter().map(|p| p.r)).is_none() {
        Err(undefined("projector based differentiation index", "rank E varies over the probes"))
    } else if profiles[0].r == m {
        Ok(0)
    } else {
        let mut out = Err(undefined(
            "projector based differentiation index",
            format!("rho never reaches m up to order {}", k_max.saturating_sub(1)),
        ));
        for nu in 1..=k_max {
            let b_const = constant(profiles.iter().map(|p| p.rank_b[nu])).is_some();
            let rho_const = constant(profiles.iter().map(|p| p.rho[nu - 1])).is_some();
            let r_ok = constant(profiles.iter().map(|p| p.r_arr[nu - 1])).is_some();
            if !(b_const && rho_const && r_ok) {
                out = Err(undefined(
                    "projector based differentiation index",
                    format!("ranks at order {nu} vary over the probes"),
                ));
                break;
            }
            if profiles.iter().all(|p| p.rho[nu - 1] == m && p.b_one_full[nu]) {
                out = Ok(nu);
                break;
            }
        }
        out
    };
    let mut sf_mu_hat = Err(undefined("SF hypothesis", format!("not satisfied up to order {k_max}")));
    for mh in 0..=k_max {
        let data: Vec<(usize, usize, usize, usize)> = stacks
            .iter()
            .map(|s| s.sub(mh, &tol).and_then(|ss| sf_data(&ss, &tol)))
            .collect::<Result<_>>()?;
        let Some((_, a_hat, _, _)) = constant(data.iter().copied()) else {
            continue;
        };
        let (_, _, rf2, rec) = data[0];
        if rf2 == a_hat && a_hat <= m && rec == m - a_hat {
            sf_mu_hat = Ok(mh);
            break;
        }
    }
    let consistency = match (&mu_diff, &mu_rdiff, &mu_pbdiff, &sf_mu_hat) {
        (Ok(a), Ok(b), Ok(c), Ok(h)) => {
            if *a == 0 {
                *b == 0 && *c == 0 && *h == 0
            } else {
                a == b && b == c && *a == h + 1
            }
        }
        _ => false,
    };
    Ok(IndexReport {
        mu_diff,
        mu_rdiff,
        mu_pbdiff,
        sf_mu_hat,
        consistency,
    })
}

/// Profile over a probe set: ranks must be constant and the pointwise profiles agree.
pub fn theta_from_profiles(profiles: &[ArrayProfile]) -> Result<CharacteristicProfile> {
    let first = profiles.first().ok_or_else(|| DaeError::IndexUndetermined("no probes".into()))?;
    for j in 0..first.r_arr.len() {
        if profiles.iter().any(|p| p.r_arr.get(j) != first.r_arr.get(j)) {
            return Err(DaeError::NonConstantRank(j));
        }
    }
    theta_from_arrays(first)
}
