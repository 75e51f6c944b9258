//! Piecewise polynomial matrix functions of one real variable.
//!
//! Each segment stores coefficient matrices `C_k` of `Σ_k C_k t^k` in the
//! absolute variable `t`. Segments are half-open `[t0, t1)`, the last one is
//! closed. At a breakpoint the right-limit segment is used unless a [`Side`]
//! says otherwise.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DaeError, Result};

/// Which one-sided limit to use when `t` is a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Right limit, and derivatives beyond the declared smoothness are refused
    /// at breakpoints where that matters.
    #[default]
    Auto,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub coeffs: Vec<DMatrix<f64>>,
}

impl Segment {
    pub fn new(t0: f64, t1: f64, coeffs: Vec<DMatrix<f64>>) -> Self {
        Segment { t0, t1, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn eval(&self, t: f64) -> DMatrix<f64> {
        let mut it = self.coeffs.iter().rev();
        let mut acc = it.next().cloned().expect("segment without coefficients");
        for c in it {
            acc *= t;
            acc += c;
        }
        acc
    }

    /// `f^(j)(t) / j!` for `j < n`.
    fn taylor(&self, t: f64, n: usize) -> Vec<DMatrix<f64>> {
        let (r, c) = self.coeffs[0].shape();
        (0..n)
            .map(|j| {
                let mut acc = DMatrix::zeros(r, c);
                for k in (j..self.coeffs.len()).rev() {
                    acc *= t;
                    acc += &self.coeffs[k] * binomial(k, j);
                }
                acc
            })
            .collect()
    }

    fn derivative(&self) -> Segment {
        let (r, c) = self.coeffs[0].shape();
        let coeffs = if self.coeffs.len() <= 1 {
            vec![DMatrix::zeros(r, c)]
        } else {
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, ck)| ck * k as f64)
                .collect()
        };
        Segment::new(self.t0, self.t1, coeffs)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b.round()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseMatrixFunction {
    rows: usize,
    cols: usize,
    smoothness: usize,
    segments: Vec<Segment>,
}

const JOIN_TOL: f64 = 1e-9;
/// Declared smoothness of a single polynomial piece.
pub const SMOOTH_POLY: usize = 64;

impl PiecewiseMatrixFunction {
    pub fn from_segments(
        rows: usize,
        cols: usize,
        segments: Vec<Segment>,
        smoothness: usize,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(DaeError::DimensionMismatch("no segments".into()));
        }
        for s in &segments {
            if s.coeffs.is_empty() {
                return Err(DaeError::DimensionMismatch("segment without coefficients".into()));
            }
            if !(s.t0 < s.t1) || !s.t0.is_finite() || !s.t1.is_finite() {
                return Err(DaeError::GapOrOverlap(s.t0));
            }
            for c in &s.coeffs {
                if c.shape() != (rows, cols) {
                    return Err(DaeError::DimensionMismatch(format!(
                        "coefficient {}x{} in a {}x{} function",
                        c.nrows(),
                        c.ncols(),
                        rows,
                        cols
                    )));
                }
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(DaeError::NonFinite);
                }
            }
        }
        for w in segments.windows(2) {
            let scale = 1.0 + w[0].t1.abs();
            if (w[0].t1 - w[1].t0).abs() > 1e-12 * scale {
                return Err(DaeError::GapOrOverlap(w[0].t1));
            }
        }
        let f = PiecewiseMatrixFunction {
            rows,
            cols,
            smoothness,
            segments,
        };
        f.check_smoothness()?;
        Ok(f)
    }

    fn check_smoothness(&self) -> Result<()> {
        for w in self.segments.windows(2) {
            let b = w[1].t0;
            let n = self.smoothness + 1;
            let left = w[0].taylor(b, n);
            let right = w[1].taylor(b, n);
            for j in 0..n {
                let scale = 1.0 + left[j].amax().max(right[j].amax());
                let mismatch = (&left[j] - &right[j]).amax();
                if mismatch > JOIN_TOL * scale {
                    let fact: f64 = (1..=j).map(|i| i as f64).product();
                    return Err(DaeError::SmoothnessViolation {
                        breakpoint: b,
                        order: j,
                        mismatch: mismatch * fact,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn constant(m: DMatrix<f64>, t0: f64, t1: f64) -> Self {
        Self::polynomial(vec![m], t0, t1)
    }

    pub fn polynomial(coeffs: Vec<DMatrix<f64>>, t0: f64, t1: f64) -> Self {
        let (rows, cols) = coeffs[0].shape();
        PiecewiseMatrixFunction {
            rows,
            cols,
            smoothness: SMOOTH_POLY,
            segments: vec![Segment::new(t0, t1, coeffs)],
        }
    }

    pub fn zeros(rows: usize, cols: usize, t0: f64, t1: f64) -> Self {
        Self::constant(DMatrix::zeros(rows, cols), t0, t1)
    }

    pub fn identity(n: usize, t0: f64, t1: f64) -> Self {
        Self::constant(DMatrix::identity(n, n), t0, t1)
    }

    /// Scalar piecewise polynomial; each piece is `(t0, t1, [c0, c1, ...])`.
    pub fn scalar(pieces: &[(f64, f64, Vec<f64>)], smoothness: usize) -> Result<Self> {
        let segs = pieces
            .iter()
            .map(|(a, b, c)| {
                Segment::new(*a, *b, c.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect())
            })
            .collect();
        Self::from_segments(1, 1, segs, smoothness)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn smoothness(&self) -> usize {
        self.smoothness
    }
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.segments[0].t0, self.segments[self.segments.len() - 1].t1)
    }

    /// Interior breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.t0).collect()
    }

    pub fn is_breakpoint(&self, t: f64) -> bool {
        self.breakpoints().contains(&t)
    }

    pub fn max_degree(&self) -> usize {
        self.segments.iter().map(|s| s.degree()).max().unwrap_or(0)
    }

    fn locate(&self, t: f64, side: Side) -> Result<usize> {
        let (a, b) = self.interval();
        let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if !t.is_finite() || t < a - slack || t > b + slack {
            return Err(DaeError::OutOfDomain(t));
        }
        let n = self.segments.len();
        match side {
            Side::Left => {
                for (i, s) in self.segments.iter().enumerate() {
                    if t > s.t0 && t <= s.t1 {
                        return Ok(i);
                    }
                }
                Ok(0)
            }
            Side::Right | Side::Auto => {
                for (i, s) in self.segments.iter().enumerate() {
                    if t >= s.t0 && t < s.t1 {
                        return Ok(i);
                    }
                }
                Ok(n - 1)
            }
        }
    }

    pub fn eval_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.eval_side(t, Side::Auto)
    }

    pub fn eval_side(&self, t: f64, side: Side) -> Result<DMatrix<f64>> {
        let i = self.locate(t, side)?;
        Ok(self.segments[i].eval(t))
    }

    /// Taylor coefficients `f^(j)(t)/j!`, `j < n`, of the selected segment.
    pub fn taylor(&self, t: f64, side: Side, n: usize) -> Result<Vec<DMatrix<f64>>> {
        let i = self.locate(t, side)?;
        Ok(self.segments[i].taylor(t, n))
    }

    pub fn derivative(&self, order: usize) -> PiecewiseMatrixFunction {
        let mut segs = self.segments.clone();
        for _ in 0..order {
            segs = segs.iter().map(Segment::derivative).collect();
        }
        PiecewiseMatrixFunction {
            rows: self.rows,
            cols: self.cols,
            smoothness: self.smoothness.saturating_sub(order),
            segments: segs,
        }
    }

    fn cut_points(&self, other: &Self) -> Result<Vec<f64>> {
        let (a, b) = self.interval();
        let (c, d) = other.interval();
        if (a - c).abs() > 1e-12 * (1.0 + a.abs()) || (b - d).abs() > 1e-12 * (1.0 + b.abs()) {
            return Err(DaeError::DimensionMismatch(format!(
                "intervals [{a}, {b}] and [{c}, {d}] differ"
            )));
        }
        let mut pts: Vec<f64> = vec![a];
        pts.extend(self.breakpoints());
        pts.extend(other.breakpoints());
        pts.push(b);
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + x.abs()));
        Ok(pts)
    }

    fn combine(
        &self,
        other: &Self,
        rows: usize,
        cols: usize,
        op: impl Fn(&[DMatrix<f64>], &[DMatrix<f64>]) -> Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let pts = self.cut_points(other)?;
        let mut segs = Vec::with_capacity(pts.len() - 1);
        for w in pts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let sa = &self.segments[self.locate(mid, Side::Right)?];
            let sb = &other.segments[other.locate(mid, Side::Right)?];
            segs.push(Segment::new(w[0], w[1], op(&sa.coeffs, &sb.coeffs)));
        }
        Ok(PiecewiseMatrixFunction {
            rows,
            cols,
            smoothness: self.smoothness.min(other.smoothness),
            segments: segs,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(DaeError::DimensionMismatch("product".into()));
        }
        let (r, c) = (self.rows, other.cols);
        self.combine(other, r, c, |a, b| {
            let mut out = vec![DMatrix::zeros(r, c); a.len() + b.len() - 1];
            for (i, ai) in a.iter().enumerate() {
                for (j, bj) in b.iter().enumerate() {
                    out[i + j] += ai * bj;
                }
            }
            out
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lincomb(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lincomb(other, -1.0)
    }

    fn lincomb(&self, other: &Self, s: f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(DaeError::DimensionMismatch("sum".into()));
        }
        let (r, c) = (self.rows, self.cols);
        self.combine(other, r, c, |a, b| {
            let n = a.len().max(b.len());
            (0..n)
                .map(|k| {
                    let mut m = DMatrix::zeros(r, c);
                    if let Some(x) = a.get(k) {
                        m += x;
                    }
                    if let Some(y) = b.get(k) {
                        m += y * s;
                    }
                    m
                })
                .collect()
        })
    }

    pub fn transpose(&self) -> Self {
        PiecewiseMatrixFunction {
            rows: self.cols,
            cols: self.rows,
            smoothness: self.smoothness,
            segments: self
                .segments
                .iter()
                .map(|s| Segment::new(s.t0, s.t1, s.coeffs.iter().map(|c| c.transpose()).collect()))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for seg in &mut out.segments {
            for c in &mut seg.coeffs {
                *c *= s;
            }
        }
        out
    }

    /// Block matrix from a grid of pieces; `None` entries are zero blocks.
    /// Every row of blocks needs at least one `Some` to fix its height, and
    /// likewise for columns.
    pub fn from_blocks(blocks: &[Vec<Option<PiecewiseMatrixFunction>>]) -> Result<Self> {
        let nbr = blocks.len();
        let nbc = blocks.first().map_or(0, |r| r.len());
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        let mut interval = None;
        for (i, row) in blocks.iter().enumerate() {
            if row.len() != nbc {
                return Err(DaeError::DimensionMismatch("ragged block grid".into()));
            }
            for (j, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    for (slot, v) in [(&mut heights[i], b.rows), (&mut widths[j], b.cols)] {
                        match slot {
                            Some(x) if *x != v => {
                                return Err(DaeError::DimensionMismatch("block sizes".into()))
                            }
                            _ => *slot = Some(v),
                        }
                    }
                    interval.get_or_insert(b.interval());
                }
            }
        }
        let heights: Vec<usize> = heights.into_iter().map(|h| h.unwrap_or(0)).collect();
        let widths: Vec<usize> = widths.into_iter().map(|w| w.unwrap_or(0)).collect();
        let (a, b) = interval.ok_or_else(|| DaeError::DimensionMismatch("empty block grid".into()))?;
        let rows: usize = heights.iter().sum();
        let cols: usize = widths.iter().sum();
        let mut acc = PiecewiseMatrixFunction::zeros(rows, cols, a, b);
        let mut r0 = 0;
        for (i, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (j, blk) in row.iter().enumerate() {
                if let Some(blk) = blk {
                    let emb = blk.embed(rows, cols, r0, c0);
                    acc = acc.add(&emb)?;
                }
                c0 += widths[j];
            }
            r0 += heights[i];
        }
        Ok(acc)
    }

    fn embed(&self, rows: usize, cols: usize, r0: usize, c0: usize) -> Self {
        PiecewiseMatrixFunction {
            rows,
            cols,
            smoothness: self.smoothness,
            segments: self
                .segments
                .iter()
                .map(|s| {
                    let coeffs = s
                        .coeffs
                        .iter()
                        .map(|c| {
                            let mut m = DMatrix::zeros(rows, cols);
                            m.view_mut((r0, c0), c.shape()).copy_from(c);
                            m
                        })
                        .collect();
                    Segment::new(s.t0, s.t1, coeffs)
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> MatfunJson {
        MatfunJson {
            rows: self.rows,
            cols: self.cols,
            smoothness: self.smoothness,
            segments: self
                .segments
                .iter()
                .map(|s| SegmentJson {
                    t0: s.t0,
                    t1: s.t1,
                    coeffs: s.coeffs.iter().map(|c| CoeffJson::Nested(rows_of(c))).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &MatfunJson) -> Result<Self> {
        let mut segs = Vec::with_capacity(j.segments.len());
        for s in &j.segments {
            let mut coeffs = Vec::with_capacity(s.coeffs.len());
            for c in &s.coeffs {
                coeffs.push(c.to_matrix(j.rows, j.cols)?);
            }
            segs.push(Segment::new(s.t0, s.t1, coeffs));
        }
        Self::from_segments(j.rows, j.cols, segs, j.smoothness)
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatfunJson {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub smoothness: usize,
    pub segments: Vec<SegmentJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SegmentJson {
    pub t0: f64,
    pub t1: f64,
    pub coeffs: Vec<CoeffJson>,
}

/// A coefficient matrix, either as a list of rows or flat in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CoeffJson {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl CoeffJson {
    fn to_matrix(&self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        match self {
            CoeffJson::Nested(r) => {
                if r.len() != rows || r.iter().any(|x| x.len() != cols) {
                    return Err(DaeError::DimensionMismatch(format!(
                        "expected {rows}x{cols} coefficient"
                    )));
                }
                Ok(DMatrix::from_fn(rows, cols, |i, j| r[i][j]))
            }
            CoeffJson::Flat(v) => {
                if v.len() != rows * cols {
                    return Err(DaeError::DimensionMismatch(format!(
                        "expected {} flat entries, got {}",
                        rows * cols,
                        v.len()
                    )));
                }
                Ok(DMatrix::from_row_slice(rows, cols, v))
            }
        }
    }
}

impl Serialize for PiecewiseMatrixFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseMatrixFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatfunJson::deserialize(d)?;
        PiecewiseMatrixFunction::from_json(&j).map_err(serde::de::Error::custom)
    }
}
