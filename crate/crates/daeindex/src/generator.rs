//! Pairs with prescribed characteristic values, built from a structured
//! standard canonical form and hidden behind random smooth equivalence
//! transformations.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arrays::build_arrays;
use crate::error::{DaeError, Result};
use crate::matfun::PiecewiseMatrixFunction as Pmf;
use crate::numlin::{self, TolerancePolicy};
use crate::problem::{DaeProblem, Point};
use crate::profile::CharacteristicProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Secondary blocks of full column rank, sizes `l₁ ≥ l₂ ≥ …`.
    #[default]
    FullColumn,
    /// Secondary blocks of full row rank, sizes `l₁ ≤ l₂ ≤ …`.
    FullRow,
}

impl std::str::FromStr for Variant {
    type Err = DaeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "column" | "full_column" => Ok(Variant::FullColumn),
            "row" | "full_row" => Ok(Variant::FullRow),
            _ => Err(DaeError::Parse(format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Fill {
    #[default]
    Zero,
    /// Blocks above the secondary diagonal get random polynomial entries.
    RandomPolynomial { degree: usize, magnitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScfSpec {
    pub d: usize,
    /// `θ₀ … θ_{μ−1}`; empty for index zero.
    pub thetas: Vec<usize>,
    #[serde(default)]
    pub variant: Variant,
    /// Size of the block carrying `ker N`; defaults to `max(θ₀, 1)`.
    #[serde(default)]
    pub l1: Option<usize>,
    /// `Ω`, `d × d`; random of degree `omega_degree` when absent.
    #[serde(default)]
    pub omega: Option<Pmf>,
    #[serde(default)]
    pub omega_degree: usize,
    #[serde(default)]
    pub fill: Fill,
    /// Frobenius bound of the smooth perturbation of the secondary blocks.
    #[serde(default)]
    pub perturbation: f64,
    pub seed: u64,
    pub interval: (f64, f64),
}

impl ScfSpec {
    pub fn new(d: usize, thetas: Vec<usize>, variant: Variant, seed: u64) -> Self {
        ScfSpec {
            d,
            thetas,
            variant,
            l1: None,
            omega: None,
            omega_degree: 0,
            fill: Fill::Zero,
            perturbation: 0.0,
            seed,
            interval: (0.0, 1.0),
        }
    }

    /// Block sizes `l₁ … l_μ` of the nilpotent part.
    pub fn block_sizes(&self) -> Result<Vec<usize>> {
        let mu = self.thetas.len();
        if mu == 0 {
            return Ok(vec![]);
        }
        let th0 = self.thetas[0];
        let l1 = self.l1.unwrap_or(if mu >= 2 { th0.max(1) } else { 1 });
        if l1 == 0 || (mu >= 2 && l1 < th0) {
            return Err(DaeError::InvalidProfile(format!("l1 = {l1} must be at least max(θ₀, 1)")));
        }
        let mut l = vec![l1];
        l.extend_from_slice(&self.thetas[..mu - 1]);
        if self.variant == Variant::FullRow {
            l.reverse();
        }
        Ok(l)
    }

    pub fn expected_profile(&self) -> Result<CharacteristicProfile> {
        let l = self.block_sizes()?;
        let a: usize = l.iter().sum();
        let m = self.d + a;
        if self.thetas.is_empty() {
            return Ok(CharacteristicProfile::ode(m));
        }
        let r = self.d + self.thetas.iter().sum::<usize>();
        CharacteristicProfile::from_thetas(m, r, self.thetas.clone())
    }
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, mag: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-mag..=mag))
}

fn random_poly(rng: &mut ChaCha8Rng, rows: usize, cols: usize, degree: usize, mag: f64, iv: (f64, f64)) -> Pmf {
    Pmf::polynomial((0..=degree).map(|_| uniform(rng, rows, cols, mag)).collect(), iv.0, iv.1)
}

/// Random polynomial whose Frobenius norm stays below `bound` on the interval.
fn bounded_poly(rng: &mut ChaCha8Rng, rows: usize, cols: usize, degree: usize, bound: f64, iv: (f64, f64)) -> Pmf {
    let tmax = iv.0.abs().max(iv.1.abs()).max(1.0);
    let c = 0.99 * bound / ((degree + 1) as f64 * tmax.powi(degree as i32) * ((rows * cols) as f64).sqrt());
    random_poly(rng, rows, cols, degree, c, iv)
}

/// Secondary block `[I; 0]` or `[I 0]` of size `p × q`.
fn secondary(p: usize, q: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, q, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// The nilpotent part `N` of a spec, as a matrix function.
pub fn build_nilpotent(spec: &ScfSpec, rng: &mut ChaCha8Rng) -> Result<Pmf> {
    let l = spec.block_sizes()?;
    let iv = spec.interval;
    let nu = l.len();
    let degree = match spec.fill {
        Fill::Zero => 0,
        Fill::RandomPolynomial { degree, .. } => degree,
    };
    let mut grid: Vec<Vec<Option<Pmf>>> = vec![vec![None; nu]; nu];
    for i in 0..nu {
        for j in 0..nu {
            let blk = if j == i + 1 {
                let base = Pmf::constant(secondary(l[i], l[j]), iv.0, iv.1);
                if spec.perturbation > 0.0 {
                    base.add(&bounded_poly(rng, l[i], l[j], degree, spec.perturbation.min(0.1), iv))?
                } else {
                    base
                }
            } else if j >= i + 2 {
                match spec.fill {
                    Fill::Zero => Pmf::zeros(l[i], l[j], iv.0, iv.1),
                    Fill::RandomPolynomial { degree, magnitude } => random_poly(rng, l[i], l[j], degree, magnitude, iv),
                }
            } else {
                Pmf::zeros(l[i], l[j], iv.0, iv.1)
            };
            grid[i][j] = Some(blk);
        }
    }
    Pmf::from_blocks(&grid)
}

/// `E = diag(I_d, N)`, `F = diag(Ω, I_a)`.
pub fn build_scf_pair(spec: &ScfSpec) -> Result<DaeProblem> {
    spec.expected_profile()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let iv = spec.interval;
    let d = spec.d;
    let a: usize = spec.block_sizes()?.iter().sum();
    let omega = match &spec.omega {
        Some(o) => {
            if o.rows() != d || o.cols() != d {
                return Err(DaeError::DimensionMismatch(format!("Ω must be {d}x{d}")));
            }
            Some(o.clone())
        }
        None if d > 0 => Some(random_poly(&mut rng, d, d, spec.omega_degree, 1.0, iv)),
        None => None,
    };
    let (e, f) = if a == 0 {
        (Pmf::identity(d, iv.0, iv.1), omega.expect("d > 0 when a = 0"))
    } else {
        let n = build_nilpotent(spec, &mut rng)?;
        if d == 0 {
            (n, Pmf::identity(a, iv.0, iv.1))
        } else {
            let e = Pmf::from_blocks(&[
                vec![Some(Pmf::identity(d, iv.0, iv.1)), Some(Pmf::zeros(d, a, iv.0, iv.1))],
                vec![Some(Pmf::zeros(a, d, iv.0, iv.1)), Some(n)],
            ])?;
            let f = Pmf::from_blocks(&[
                vec![omega, Some(Pmf::zeros(d, a, iv.0, iv.1))],
                vec![Some(Pmf::zeros(a, d, iv.0, iv.1)), Some(Pmf::identity(a, iv.0, iv.1))],
            ])?;
            (e, f)
        }
    };
    DaeProblem::new(e, f, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceTransform {
    pub l: Pmf,
    pub k: Pmf,
    pub k_deriv: Pmf,
    pub condition_bound: f64,
}

pub const DEFAULT_CONDITION_BOUND: f64 = 50.0;
const COND_GRID: usize = 65;

fn max_condition(f: &Pmf, grid: usize) -> Result<f64> {
    let (a, b) = f.interval();
    let mut worst: f64 = 1.0;
    for i in 0..grid {
        let t = a + (b - a) * i as f64 / (grid - 1) as f64;
        let sv = f.eval_at(t)?.singular_values();
        let (mx, mn) = (sv.max(), sv.min());
        if !(mn > 0.0) {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(mx / mn);
    }
    Ok(worst)
}

impl EquivalenceTransform {
    pub fn identity(m: usize, iv: (f64, f64)) -> Self {
        EquivalenceTransform {
            l: Pmf::identity(m, iv.0, iv.1),
            k: Pmf::identity(m, iv.0, iv.1),
            k_deriv: Pmf::zeros(m, m, iv.0, iv.1),
            condition_bound: 1.0,
        }
    }

    pub fn new(l: Pmf, k: Pmf, condition_bound: f64) -> Result<Self> {
        for f in [&l, &k] {
            let c = max_condition(f, COND_GRID)?;
            if c > condition_bound {
                let (a, _) = f.interval();
                return Err(DaeError::SingularTransform(a));
            }
        }
        let k_deriv = k.derivative(1);
        Ok(EquivalenceTransform {
            l,
            k,
            k_deriv,
            condition_bound,
        })
    }
}

/// `L, K = I + P` with random polynomial `P` of degree `≤ degree`, resampled
/// until both condition numbers stay below `bound` on a grid.
pub fn random_transform(m: usize, degree: usize, iv: (f64, f64), bound: f64, rng: &mut ChaCha8Rng) -> Result<EquivalenceTransform> {
    let mag = 0.8 / (m as f64).sqrt();
    for _ in 0..1000 {
        let id = Pmf::identity(m, iv.0, iv.1);
        let l = id.add(&random_poly(rng, m, m, degree, mag, iv))?;
        let k = id.add(&random_poly(rng, m, m, degree, mag, iv))?;
        if let Ok(t) = EquivalenceTransform::new(l, k, bound) {
            return Ok(t);
        }
    }
    Err(DaeError::SingularTransform(iv.0))
}

/// `Ẽ = LEK`, `F̃ = LFK + LEK'`, `q̃ = Lq`; solutions relate by `x = K x̃`.
pub fn apply_equivalence(problem: &DaeProblem, tr: &EquivalenceTransform) -> Result<DaeProblem> {
    let le = tr.l.mul(&problem.e)?;
    let e = le.mul(&tr.k)?;
    let f = tr.l.mul(&problem.f)?.mul(&tr.k)?.add(&le.mul(&tr.k_deriv)?)?;
    let q = problem.q.as_ref().map(|q| tr.l.mul(q)).transpose()?;
    Ok(DaeProblem::new(e, f, q)?.with_tol(problem.tol))
}

/// Attach `q = E x*' + F x*` so that `x*` solves the DAE.
pub fn manufacture_problem(problem: &DaeProblem, x_star: &Pmf) -> Result<DaeProblem> {
    let q = problem.e.mul(&x_star.derivative(1))?.add(&problem.f.mul(x_star)?)?;
    DaeProblem::new(problem.e.clone(), problem.f.clone(), Some(q)).map(|p| p.with_tol(problem.tol))
}

/// A generated instance with everything needed to reproduce it.
#[derive(Debug, Clone)]
pub struct Generated {
    pub spec: ScfSpec,
    pub scf: DaeProblem,
    pub problem: DaeProblem,
    pub transform: EquivalenceTransform,
    pub expected: CharacteristicProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: ScfSpec,
    pub seed: u64,
    pub transform_degree: usize,
    pub expected_profile: CharacteristicProfile,
}

/// SCF pair from `spec`, transformed by a random `L, K` of degree `≤ degree`
/// (identity when `degree` is `None`). The transform uses the stream after the
/// SCF construction, so one seed fixes the whole instance.
pub fn generate(spec: &ScfSpec, degree: Option<usize>, bound: f64) -> Result<Generated> {
    let expected = spec.expected_profile()?;
    let scf = build_scf_pair(spec)?;
    let m = scf.m();
    let transform = match degree {
        None => EquivalenceTransform::identity(m, spec.interval),
        Some(deg) => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
            random_transform(m, deg, spec.interval, bound, &mut rng)?
        }
    };
    let problem = apply_equivalence(&scf, &transform)?;
    Ok(Generated {
        spec: spec.clone(),
        scf,
        problem,
        transform,
        expected,
    })
}

/// Random valid spec with `m ≤ m_max` and `μ ≤ mu_max`.
pub fn random_spec(rng: &mut ChaCha8Rng, m_max: usize, mu_max: usize) -> ScfSpec {
    loop {
        let mu = rng.random_range(1..=mu_max);
        let mut thetas = Vec::with_capacity(mu);
        let mut prev = rng.random_range(1..=3usize);
        for _ in 0..mu.saturating_sub(1) {
            let th = rng.random_range(1..=prev);
            thetas.push(th);
            prev = th;
        }
        thetas.push(0);
        let th0 = thetas[0].max(1);
        let l1 = th0 + rng.random_range(0..=1usize);
        let d = rng.random_range(0..=2usize);
        let a: usize = l1 + thetas.iter().sum::<usize>();
        if d + a > m_max || d + a == 0 {
            continue;
        }
        let variant = if rng.random_bool(0.5) { Variant::FullColumn } else { Variant::FullRow };
        let mut spec = ScfSpec::new(d, thetas, variant, rng.random());
        spec.l1 = Some(l1);
        spec.omega_degree = rng.random_range(0..=1usize);
        spec.fill = Fill::RandomPolynomial {
            degree: rng.random_range(0..=1usize),
            magnitude: 0.5,
        };
        spec.perturbation = 0.05;
        return spec;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SutKind {
    Column,
    Row,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SutRanks {
    /// `rank 𝓝_[k]`.
    pub rank_array: usize,
    /// `rank N^{k+1}`.
    pub rank_power: usize,
    pub kind: SutKind,
}

/// Ranks of the array `𝓝_[k]` of the pair `{N, I}` and of `N^{k+1}` at `t`.
/// For the column and row classes the identity `rank 𝓝_[k] = kl + rank N^{k+1}`
/// is asserted.
pub fn sut_rank_oracle(n: &Pmf, blocks: &[usize], k: usize, t: f64, tol: &TolerancePolicy) -> Result<SutRanks> {
    let l: usize = blocks.iter().sum();
    if n.rows() != l || n.cols() != l {
        return Err(DaeError::DimensionMismatch(format!("N is {}x{}, blocks sum to {l}", n.rows(), n.cols())));
    }
    let nt = n.eval_at(t)?;
    let offs: Vec<usize> = blocks.iter().scan(0, |s, &b| {
        let o = *s;
        *s += b;
        Some(o)
    }).collect();
    let scale = 1.0 + nt.amax();
    for (i, &oi) in offs.iter().enumerate() {
        for (j, &oj) in offs.iter().enumerate().take(i + 1) {
            if nt.view((oi, oj), (blocks[i], blocks[j])).amax() > 1e-12 * scale {
                return Err(DaeError::NotStrictlyUpperTriangular);
            }
        }
    }
    let sec_ranks: Vec<usize> = (0..blocks.len().saturating_sub(1))
        .map(|i| numlin::rank_of(&nt.view((offs[i], offs[i + 1]), (blocks[i], blocks[i + 1])).into_owned(), tol))
        .collect::<Result<_>>()?;
    let col = blocks.windows(2).all(|w| w[0] >= w[1]) && sec_ranks.iter().zip(&blocks[1..]).all(|(r, b)| r == b);
    let row = blocks.windows(2).all(|w| w[0] <= w[1]) && sec_ranks.iter().zip(blocks).all(|(r, b)| r == b);
    let kind = if col {
        SutKind::Column
    } else if row {
        SutKind::Row
    } else {
        SutKind::General
    };
    let (a, b) = n.interval();
    let pair = DaeProblem::new(n.clone(), Pmf::identity(l, a, b), None)?.with_tol(*tol);
    let arr = build_arrays(&pair, Point::new(t), k)?;
    let rank_array = numlin::rank_of(&arr.e_arr, tol)?;
    let mut pw = DMatrix::identity(l, l);
    for _ in 0..=k {
        pw = &pw * &nt;
    }
    let rank_power = numlin::rank_of(&pw, tol)?;
    if kind != SutKind::General && rank_array != k * l + rank_power {
        return Err(DaeError::InvalidProfile(format!(
            "rank N_[{k}] = {rank_array} but kl + rank N^(k+1) = {}",
            k * l + rank_power
        )));
    }
    Ok(SutRanks {
        rank_array,
        rank_power,
        kind,
    })
}

/// Random SUT matrix function with full-rank secondary blocks of the given class.
pub fn random_sut(blocks: &[usize], kind: SutKind, degree: usize, rng: &mut ChaCha8Rng, iv: (f64, f64)) -> Result<Pmf> {
    let nu = blocks.len();
    let mut grid: Vec<Vec<Option<Pmf>>> = vec![vec![None; nu]; nu];
    for i in 0..nu {
        for j in 0..nu {
            let blk = if j == i + 1 {
                let p = blocks[i];
                let q = blocks[j];
                // A random orthogonal-ish full-rank block.
                let g = uniform(rng, p, q, 1.0);
                let full = match kind {
                    SutKind::Column | SutKind::Row => secondary(p, q) * 2.0 + g * 0.3,
                    SutKind::General => g,
                };
                Pmf::constant(full, iv.0, iv.1).add(&bounded_poly(rng, p, q, degree, 0.1, iv))?
            } else if j >= i + 2 {
                random_poly(rng, blocks[i], blocks[j], degree, 1.0, iv)
            } else {
                Pmf::zeros(blocks[i], blocks[j], iv.0, iv.1)
            };
            grid[i][j] = Some(blk);
        }
    }
    Pmf::from_blocks(&grid)
}
