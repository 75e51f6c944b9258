//! JSON and CSV renderings of scan and point reports.

use serde::Serialize;
use serde_json::{json, Value};

use crate::arrays::{index_report, ArrayProfile};
use crate::error::{DaeError, Result};
use crate::numlin::TolerancePolicy;
use crate::problem::{DaeProblem, Point};
use crate::profile::CharacteristicProfile;
use crate::scanner::{self, PointKind, ScanReport, CAVEAT};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileJson {
    pub r: usize,
    pub thetas: Vec<usize>,
    pub mu: usize,
    pub d: usize,
}

impl From<&CharacteristicProfile> for ProfileJson {
    fn from(p: &CharacteristicProfile) -> Self {
        ProfileJson {
            r: p.r,
            thetas: p.thetas.clone(),
            mu: p.mu,
            d: p.d,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentJson {
    pub t0: f64,
    pub t1: f64,
    pub profile: ProfileJson,
    pub probes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointJson {
    /// Bracket midpoint; the transition lies somewhere in `[t_lo, t_hi]`.
    pub t: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub kind: &'static str,
    pub evidence: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridJson {
    pub n: usize,
    pub interval: [f64; 2],
    pub breakpoints: Vec<f64>,
    pub probes: usize,
    pub kmax: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanJson {
    pub tool_version: &'static str,
    pub caveat: &'static str,
    pub tolerance: TolerancePolicy,
    pub grid: GridJson,
    pub segments: Vec<SegmentJson>,
    pub points: Vec<PointJson>,
    pub almost_regular: bool,
    pub exit_code: i32,
    pub warnings: Vec<String>,
}

fn evidence(kind: &PointKind) -> Value {
    match kind {
        PointKind::Regular(p) => json!(ProfileJson::from(p)),
        PointKind::HarmlessCritical(e) => json!(e),
        PointKind::Singular(s) => json!({ "reason": s }),
        PointKind::Undetermined(w) => json!({ "warnings": w }),
    }
}

pub fn scan_json(problem: &DaeProblem, report: &ScanReport, n: usize) -> ScanJson {
    let (a, b) = problem.interval();
    ScanJson {
        tool_version: TOOL_VERSION,
        caveat: CAVEAT,
        tolerance: problem.tol,
        grid: GridJson {
            n,
            interval: [a, b],
            breakpoints: problem.breakpoints(),
            probes: report.grid.len(),
            kmax: report.kmax,
        },
        segments: report
            .segments
            .iter()
            .map(|s| SegmentJson {
                t0: s.t0,
                t1: s.t1,
                profile: (&s.profile).into(),
                probes: s.probes,
            })
            .collect(),
        points: report
            .points
            .iter()
            .map(|p| PointJson {
                t: 0.5 * (p.t_lo + p.t_hi),
                t_lo: p.t_lo,
                t_hi: p.t_hi,
                kind: p.kind.name(),
                evidence: evidence(&p.kind),
            })
            .collect(),
        almost_regular: report.almost_regular,
        exit_code: report.exit_code(),
        warnings: report.tolerance_audit.clone(),
    }
}

/// One row per probe, preceded by `#` comment lines with the caveat.
pub fn scan_csv(report: &ScanReport) -> String {
    let mut out = format!("# daeindex {TOOL_VERSION}\n# {CAVEAT}\n");
    out.push_str("t,side,kind,r,mu,d,thetas\n");
    for (i, p) in report.grid.iter().enumerate() {
        let kind = report.classify_probe(i);
        let prof = report.probes[i].profile.as_ref().ok();
        let field = |f: &dyn Fn(&CharacteristicProfile) -> String| prof.map(f).unwrap_or_default();
        out.push_str(&format!(
            "{},{:?},{},{},{},{},{}\n",
            p.t,
            p.side,
            kind.name(),
            field(&|q| q.r.to_string()),
            field(&|q| q.mu.to_string()),
            field(&|q| q.d.to_string()),
            field(&|q| q.thetas.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")),
        ));
    }
    out
}

fn result_json<T: Serialize>(r: &Result<T>) -> Value {
    match r {
        Ok(v) => json!({ "ok": v }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn arrays_json(a: &ArrayProfile) -> Value {
    json!({
        "r_arr": a.r_arr,
        "full_row_rank": a.full_row_rank_ok,
        "s_dims": a.s_dims,
        "rho": a.rho,
        "rank_d": a.rank_d,
        "rank_b": a.rank_b,
        "one_full": a.one_full,
        "b_one_full": a.b_one_full,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeJson {
    pub tool_version: &'static str,
    pub caveat: &'static str,
    pub tolerance: TolerancePolicy,
    pub t: f64,
    pub m: usize,
    pub kmax: usize,
    pub kind: &'static str,
    pub evidence: Value,
    pub arrays: Value,
    pub frameworks: Vec<Value>,
    /// Differentiation-type indices over a small neighbourhood of `t`.
    pub indices: Value,
    pub warnings: Vec<String>,
}

impl AnalyzeJson {
    /// Exit code with the same meaning as for scans.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            "Singular" => 20,
            "Undetermined" => 30,
            "HarmlessCritical" => 10,
            _ => 0,
        }
    }
}

/// Report at a single point with every framework, the array data and the
/// classification against probes at `t ± delta`.
pub fn analyze(problem: &DaeProblem, t: f64, kmax: Option<usize>) -> Result<AnalyzeJson> {
    let (a, b) = problem.interval();
    if t < a || t > b {
        return Err(DaeError::OutOfDomain(t));
    }
    let kmax = kmax.unwrap_or(problem.m());
    let pr = scanner::probe(problem, Point::new(t), kmax);
    let delta = 1e-3 * (b - a);
    let nb: Vec<f64> = [t - delta, t + delta].into_iter().filter(|s| *s >= a && *s <= b).collect();
    let kind = scanner::classify_point(problem, t, &nb);
    let mut probes = vec![Point::new(t)];
    probes.extend(nb.iter().map(|&s| Point::new(s)));
    let indices = match index_report(problem, &probes, kmax) {
        Ok(r) => json!({
            "mu_diff": result_json(&r.mu_diff),
            "mu_rdiff": result_json(&r.mu_rdiff),
            "mu_pbdiff": result_json(&r.mu_pbdiff),
            "sf_mu_hat": result_json(&r.sf_mu_hat),
            "consistent": r.consistency,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(AnalyzeJson {
        tool_version: TOOL_VERSION,
        caveat: CAVEAT,
        tolerance: problem.tol,
        t,
        m: problem.m(),
        kmax,
        kind: kind.name(),
        evidence: evidence(&kind),
        arrays: json!({
            "profile": result_json(&pr.profile.as_ref().map(ProfileJson::from).map_err(|e| e.clone())),
            "ranks": pr.arrays.as_ref().map(arrays_json).unwrap_or_else(|e| json!({ "error": e.to_string() })),
        }),
        frameworks: pr
            .frameworks
            .iter()
            .map(|(name, r)| {
                let mut v = result_json(&r.as_ref().map(ProfileJson::from).map_err(|e| e.clone()));
                v["name"] = json!(name);
                v
            })
            .collect(),
        indices,
        warnings: pr.warnings(),
    })
}
