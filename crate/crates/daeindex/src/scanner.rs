//! Interval sweep: per-probe profiles from the derivative arrays and every
//! framework, maximal constant-profile segments, and classification of the
//! brackets between them.

use rayon::prelude::*;
use serde::Serialize;

use crate::arrays::{array_profile, rank_pattern_violations, theta_from_arrays, ArrayProfile};
use crate::error::{DaeError, Result};
use crate::frameworks::all_profiles;
use crate::matfun::Side;
use crate::problem::{DaeProblem, Point};
use crate::profile::CharacteristicProfile;

pub const DEFAULT_GRID: usize = 401;

/// Printed with every report.
pub const CAVEAT: &str = "only grid-visible structure is reported: rank changes between probes, \
or on sets the grid cannot resolve, are not detected, and every critical point is only bracketed";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    /// Highest array order used; `m` when absent.
    pub kmax: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n: DEFAULT_GRID,
            kmax: None,
        }
    }
}

impl GridSpec {
    pub fn with_n(n: usize) -> Self {
        GridSpec { n, kmax: None }
    }

    /// Uniform probes plus both one-sided probes at every breakpoint.
    pub fn points(&self, problem: &DaeProblem) -> Vec<Point> {
        let (a, b) = problem.interval();
        let n = self.n.max(2);
        let bps = problem.breakpoints();
        let eps = 1e-12 * (1.0 + a.abs().max(b.abs()));
        let mut pts: Vec<Point> = (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .filter(|t| !bps.iter().any(|bp| (bp - t).abs() <= eps))
            .map(Point::new)
            .collect();
        for &bp in &bps {
            pts.push(Point::with_side(bp, Side::Left));
            pts.push(Point::with_side(bp, Side::Right));
        }
        pts.sort_by(|x, y| x.t.total_cmp(&y.t).then(side_rank(x.side).cmp(&side_rank(y.side))));
        pts
    }
}

fn side_rank(s: Side) -> u8 {
    match s {
        Side::Left => 0,
        Side::Auto => 1,
        Side::Right => 2,
    }
}

#[derive(Debug, Clone)]
pub struct Probe {
    pub point: Point,
    pub arrays: Result<ArrayProfile>,
    /// Array-derived profile.
    pub profile: Result<CharacteristicProfile>,
    pub frameworks: Vec<(&'static str, Result<CharacteristicProfile>)>,
}

impl Probe {
    /// Frameworks that are defined here but disagree with the arrays.
    pub fn disagreements(&self) -> Vec<String> {
        let Ok(p) = &self.profile else {
            return vec![];
        };
        self.frameworks
            .iter()
            .filter_map(|(name, r)| match r {
                Ok(q) if q != p => Some(format!("{name} gives {q}, arrays give {p}")),
                _ => None,
            })
            .collect()
    }

    /// Array ranks of every computed order that break the pattern of the profile.
    pub fn rank_pattern(&self) -> Vec<String> {
        match (&self.arrays, &self.profile) {
            (Ok(a), Ok(p)) => rank_pattern_violations(a, p),
            _ => vec![],
        }
    }

    /// The profile when the probe is regular: arrays defined, every computed
    /// array rank on the pattern of the profile, no defined framework disagreeing.
    pub fn regular_profile(&self) -> Option<&CharacteristicProfile> {
        match &self.profile {
            Ok(p) if self.disagreements().is_empty() && self.rank_pattern().is_empty() => Some(p),
            _ => None,
        }
    }

    pub fn solvability_violated(&self) -> Option<usize> {
        match &self.profile {
            Err(DaeError::SolvabilityViolated(j)) => Some(*j),
            _ => None,
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = match &self.arrays {
            Ok(a) => a.warnings.clone(),
            Err(e) => vec![format!("arrays: {e}")],
        };
        if let Err(e) = &self.profile {
            if self.arrays.is_ok() {
                w.push(format!("arrays: {e}"));
            }
        }
        w.extend(self.disagreements());
        w.extend(self.rank_pattern());
        w
    }
}

/// Highest array order at most `kmax` that the smoothness at `p` allows.
fn available_order(problem: &DaeProblem, p: Point, kmax: usize) -> usize {
    (0..=kmax).rev().find(|&k| problem.check_order(p, k).is_ok()).unwrap_or(0)
}

pub fn probe(problem: &DaeProblem, p: Point, kmax: usize) -> Probe {
    let k = available_order(problem, p, kmax);
    let arrays = array_profile(problem, p, k);
    let profile = match &arrays {
        Ok(a) => theta_from_arrays(a),
        Err(e) => Err(e.clone()),
    };
    Probe {
        point: p,
        arrays,
        profile,
        frameworks: all_profiles(problem, p),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmlessEvidence {
    /// Array order whose rank stays constant and which stays 1-full.
    pub nu: usize,
    pub r_nu: usize,
    pub d: usize,
    /// Rank functions that change across the bracket.
    pub changes: Vec<String>,
    pub criterion: &'static str,
}

pub const HARMLESS_CRITERION: &str = "proxy decision: constant d, constant r_[nu] and a 1-full E_[nu] on every probe \
of the bracket; solvability of the DAE itself is not checked";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "evidence")]
pub enum PointKind {
    Regular(CharacteristicProfile),
    HarmlessCritical(HarmlessEvidence),
    Singular(String),
    Undetermined(Vec<String>),
}

impl PointKind {
    pub fn name(&self) -> &'static str {
        match self {
            PointKind::Regular(_) => "Regular",
            PointKind::HarmlessCritical(_) => "HarmlessCritical",
            PointKind::Singular(_) => "Singular",
            PointKind::Undetermined(_) => "Undetermined",
        }
    }
}

/// A transition between segments, localized to the probes `t_lo ≤ t ≤ t_hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointClassification {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Probes strictly inside the bracket (not part of a segment).
    pub inner: Vec<Point>,
    pub kind: PointKind,
}

impl PointClassification {
    pub fn contains(&self, t: f64) -> bool {
        self.t_lo <= t && t <= self.t_hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub profile: CharacteristicProfile,
    pub probes: usize,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub grid: Vec<Point>,
    pub probes: Vec<Probe>,
    pub segments: Vec<Segment>,
    pub points: Vec<PointClassification>,
    pub almost_regular: bool,
    pub tolerance_audit: Vec<String>,
    pub kmax: usize,
}

impl ScanReport {
    pub fn is_regular(&self) -> bool {
        self.points.is_empty() && !self.segments.is_empty()
    }

    /// `20` singular, `30` undetermined, `10` almost regular, `0` regular.
    pub fn exit_code(&self) -> i32 {
        let has = |name: &str| self.points.iter().any(|p| p.kind.name() == name);
        if has("Singular") {
            20
        } else if has("Undetermined") || self.segments.is_empty() {
            30
        } else if has("HarmlessCritical") {
            10
        } else {
            0
        }
    }

    pub fn count(&self, name: &str) -> usize {
        self.points.iter().filter(|p| p.kind.name() == name).count()
    }

    /// Per-probe classification: segment probes are regular, the others take
    /// the kind of their bracket.
    pub fn classify_probe(&self, i: usize) -> PointKind {
        let t = self.grid[i].t;
        if let Some(p) = self.probes[i].regular_profile() {
            if self.segments.iter().any(|s| s.t0 <= t && t <= s.t1 && &s.profile == p) {
                let inner = self.points.iter().any(|b| b.inner.contains(&self.grid[i]));
                if !inner {
                    return PointKind::Regular(p.clone());
                }
            }
        }
        self.points
            .iter()
            .find(|b| b.inner.contains(&self.grid[i]) || b.contains(t))
            .map(|b| b.kind.clone())
            .unwrap_or_else(|| PointKind::Undetermined(self.probes[i].warnings()))
    }
}

pub fn scan(problem: &DaeProblem, grid: &GridSpec) -> ScanReport {
    let kmax = grid.kmax.unwrap_or(problem.m());
    let pts = grid.points(problem);
    let probes: Vec<Probe> = pts.par_iter().map(|&p| probe(problem, p, kmax)).collect();
    assemble(pts, probes, kmax)
}

fn assemble(grid: Vec<Point>, probes: Vec<Probe>, kmax: usize) -> ScanReport {
    let n = probes.len();
    // Maximal runs of equal regular profiles.
    let mut in_segment = vec![false; n];
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        let Some(p) = probes[i].regular_profile() else {
            i += 1;
            continue;
        };
        let mut j = i + 1;
        while j < n && probes[j].regular_profile() == Some(p) {
            j += 1;
        }
        if j - i >= 2 && grid[j - 1].t > grid[i].t {
            segments.push((i, j - 1));
            in_segment[i..j].iter_mut().for_each(|x| *x = true);
        }
        i = j;
    }
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        if in_segment[i] {
            // Adjacent segments with different profiles meet without an inner probe.
            if i + 1 < n && in_segment[i + 1] && probes[i].regular_profile() != probes[i + 1].regular_profile() {
                points.push(classify_bracket(&grid, &probes, i, i + 1, &[], kmax));
            }
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !in_segment[i] {
            i += 1;
        }
        let lo = start.saturating_sub(1);
        let hi = if i < n { i } else { n - 1 };
        let inner: Vec<usize> = (start..i).collect();
        points.push(classify_bracket(&grid, &probes, lo, hi, &inner, kmax));
    }
    let segments: Vec<Segment> = segments
        .into_iter()
        .map(|(a, b)| Segment {
            t0: grid[a].t,
            t1: grid[b].t,
            profile: probes[a].regular_profile().unwrap().clone(),
            probes: b - a + 1,
        })
        .collect();
    let mut tolerance_audit: Vec<String> = Vec::new();
    for p in &probes {
        if let Ok(a) = &p.arrays {
            for w in &a.warnings {
                tolerance_audit.push(format!("t = {}: {w}", p.point.t));
            }
        }
    }
    let almost_regular = !segments.is_empty()
        && points
            .iter()
            .all(|p| matches!(p.kind, PointKind::HarmlessCritical(_)));
    ScanReport {
        grid,
        probes,
        segments,
        points,
        almost_regular,
        tolerance_audit,
        kmax,
    }
}

fn classify_bracket(
    grid: &[Point],
    probes: &[Probe],
    lo: usize,
    hi: usize,
    inner: &[usize],
    kmax: usize,
) -> PointClassification {
    let idx: Vec<usize> = (lo..=hi).collect();
    let kind = classify_indices(probes, &idx, kmax);
    PointClassification {
        t_lo: grid[lo].t,
        t_hi: grid[hi].t,
        inner: inner.iter().map(|&i| grid[i]).collect(),
        kind,
    }
}

fn classify_indices(probes: &[Probe], idx: &[usize], kmax: usize) -> PointKind {
    if let Some(&i) = idx.iter().find(|&&i| probes[i].solvability_violated().is_some()) {
        let j = probes[i].solvability_violated().unwrap();
        return PointKind::Singular(format!(
            "[E_[{j}] F_[{j}]] loses full row rank at t = {}",
            probes[i].point.t
        ));
    }
    let ds: Vec<usize> = idx.iter().filter_map(|&i| probes[i].profile.as_ref().ok().map(|p| p.d)).collect();
    if ds.windows(2).any(|w| w[0] != w[1]) {
        let lo = ds.iter().min().unwrap();
        let hi = ds.iter().max().unwrap();
        return PointKind::Singular(format!("degree of freedom changes between {lo} and {hi}"));
    }
    let arrays: Vec<&ArrayProfile> = idx.iter().filter_map(|&i| probes[i].arrays.as_ref().ok()).collect();
    let all_defined = arrays.len() == idx.len() && ds.len() == idx.len();
    if all_defined {
        let top = arrays.iter().map(|a| a.r_arr.len()).min().unwrap_or(0).min(kmax + 1);
        for nu in 0..top {
            let r0 = arrays[0].r_arr[nu];
            if arrays.iter().all(|a| a.r_arr[nu] == r0 && a.one_full[nu]) {
                let mut changes = Vec::new();
                if arrays.iter().any(|a| a.r != arrays[0].r) {
                    changes.push("rank E".to_string());
                }
                for k in 0..nu {
                    if arrays.iter().any(|a| a.r_arr[k] != arrays[0].r_arr[k]) {
                        changes.push(format!("rank E_[{k}]"));
                    }
                }
                let profiles: Vec<&CharacteristicProfile> =
                    idx.iter().filter_map(|&i| probes[i].profile.as_ref().ok()).collect();
                if profiles.iter().any(|p| p.thetas != profiles[0].thetas) {
                    changes.push("theta".to_string());
                }
                let dis: Vec<String> = idx.iter().flat_map(|&i| probes[i].disagreements()).collect();
                if !dis.is_empty() {
                    changes.push(format!("framework disagreement ({})", dis.len()));
                }
                return PointKind::HarmlessCritical(HarmlessEvidence {
                    nu,
                    r_nu: r0,
                    d: ds[0],
                    changes,
                    criterion: HARMLESS_CRITERION,
                });
            }
        }
    }
    let mut w: Vec<String> = idx
        .iter()
        .flat_map(|&i| probes[i].warnings().into_iter().map(move |s| format!("t = {}: {s}", probes[i].point.t)))
        .collect();
    if w.is_empty() {
        w.push("no array order with constant rank and 1-fullness across the bracket".into());
    }
    PointKind::Undetermined(w)
}

/// Classification of a single point from probes around it: `t` itself and
/// the given neighbours.
pub fn classify_point(problem: &DaeProblem, t: f64, neighborhood: &[f64]) -> PointKind {
    let kmax = problem.m();
    let mut pts: Vec<Point> = neighborhood.iter().map(|&s| Point::new(s)).collect();
    if problem.breakpoints().contains(&t) {
        pts.push(Point::with_side(t, Side::Left));
        pts.push(Point::with_side(t, Side::Right));
    } else {
        pts.push(Point::new(t));
    }
    pts.sort_by(|x, y| x.t.total_cmp(&y.t).then(side_rank(x.side).cmp(&side_rank(y.side))));
    let probes: Vec<Probe> = pts.iter().map(|&p| probe(problem, p, kmax)).collect();
    if let Some(p0) = probes[0].regular_profile() {
        if probes.iter().all(|p| p.regular_profile() == Some(p0)) {
            return PointKind::Regular(p0.clone());
        }
    }
    let idx: Vec<usize> = (0..probes.len()).collect();
    classify_indices(&probes, &idx, kmax)
}
