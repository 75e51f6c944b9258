//! Worked example pairs used in tests, the self test and the documentation.

use nalgebra::{dmatrix, DMatrix};

use crate::error::Result;
use crate::matfun::PiecewiseMatrixFunction as Pmf;
use crate::problem::DaeProblem;

/// Matrix function `base + Σ f_ij e_i e_jᵀ` from scalar entries.
pub fn with_entries(base: DMatrix<f64>, entries: &[(usize, usize, &Pmf)]) -> Result<Pmf> {
    let (a, b) = entries.first().map_or((0.0, 1.0), |e| e.2.interval());
    let (m, n) = base.shape();
    let mut acc = Pmf::constant(base, a, b);
    for (i, j, f) in entries {
        let mut ei = DMatrix::zeros(m, 1);
        ei[*i] = 1.0;
        let mut ej = DMatrix::zeros(1, n);
        ej[*j] = 1.0;
        let term = Pmf::constant(ei, a, b).mul(f)?.mul(&Pmf::constant(ej, a, b))?;
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

fn poly(c: &[f64], a: f64, b: f64) -> Pmf {
    Pmf::polynomial(c.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect(), a, b)
}

/// `0` on `[−1, 0)`, `t³` on `[0, 1]`, of class `C²`.
pub fn cubic_switch_on() -> Pmf {
    Pmf::scalar(&[(-1.0, 0.0, vec![0.0]), (0.0, 1.0, vec![0.0, 0.0, 0.0, 1.0])], 2).expect("C2 join")
}

/// `t³` on `[−1, 0)`, `0` on `[0, 1]`.
pub fn cubic_switch_off() -> Pmf {
    Pmf::scalar(&[(-1.0, 0.0, vec![0.0, 0.0, 0.0, 1.0]), (0.0, 1.0, vec![0.0])], 2).expect("C2 join")
}

/// `E = [[1, −t], [1, −t]]`, `F = 2I` on `[0, 2]`: the degree of freedom
/// drops at `t = 1`.
pub fn degree_pair() -> DaeProblem {
    let e = Pmf::polynomial(vec![dmatrix![1.0, 0.0; 1.0, 0.0], dmatrix![0.0, -1.0; 0.0, -1.0]], 0.0, 2.0);
    let f = Pmf::constant(dmatrix![2.0, 0.0; 0.0, 2.0], 0.0, 2.0);
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// `E = [[0, t], [0, 0]]`, `F = [[β, β + M], [1, 1]]` on `[−1, 1]`.
pub fn rank_drop_e(beta: f64, m_gap: f64) -> DaeProblem {
    let e = Pmf::polynomial(vec![DMatrix::zeros(2, 2), dmatrix![0.0, 1.0; 0.0, 0.0]], -1.0, 1.0);
    let f = Pmf::constant(dmatrix![beta, beta + m_gap; 1.0, 1.0], -1.0, 1.0);
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// `E = diag(1, 1, 0)`, `F = [[0, 0, β], [1, 1, 0], [1, 0, 0]]` with `β = t` on
/// `[−1, 1]`; solvability fails at `t = 0`.
pub fn solvability_loss() -> DaeProblem {
    let e = Pmf::constant(DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1.0, 0.0]), -1.0, 1.0);
    let f = with_entries(
        dmatrix![0.0, 0.0, 0.0; 1.0, 1.0, 0.0; 1.0, 0.0, 0.0],
        &[(0, 2, &poly(&[0.0, 1.0], -1.0, 1.0))],
    )
    .expect("entries");
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// `E = [[1, −1], [1, −1]]`, `F = diag(2, t + 2)` on `[−1, 1]`.
pub fn koch_pair() -> DaeProblem {
    let e = Pmf::constant(dmatrix![1.0, -1.0; 1.0, -1.0], -1.0, 1.0);
    let f = Pmf::polynomial(vec![dmatrix![2.0, 0.0; 0.0, 2.0], dmatrix![0.0, 0.0; 0.0, 1.0]], -1.0, 1.0);
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// `E = [[0, α, 0], [0, 0, 1], [0, 0, 0]]`, `F = [[−6, 0, 0], [0, 1, 0], [1, 0, 1]]`
/// with polynomial `α` given by its coefficients, on `[−1, 1]`.
pub fn alpha_rank_drop(alpha: &[f64]) -> DaeProblem {
    let e = with_entries(
        dmatrix![0.0, 0.0, 0.0; 0.0, 0.0, 1.0; 0.0, 0.0, 0.0],
        &[(0, 1, &poly(alpha, -1.0, 1.0))],
    )
    .expect("entries");
    let f = Pmf::constant(dmatrix![-6.0, 0.0, 0.0; 0.0, 1.0, 0.0; 1.0, 0.0, 1.0], -1.0, 1.0);
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// `E = [[0, 1, α, 0], [0, 0, 0, β], [0, 0, 0, 1], 0]`, `F = I` with polynomial
/// `α`, `β` on `[a, b]`. Index 3 where `α + β ≠ 0`, index 2 where it vanishes.
pub fn theta_switch(alpha: &[f64], beta: &[f64], a: f64, b: f64) -> DaeProblem {
    let mut base = DMatrix::zeros(4, 4);
    base[(0, 1)] = 1.0;
    base[(2, 3)] = 1.0;
    let e = with_entries(base, &[(0, 2, &poly(alpha, a, b)), (1, 3, &poly(beta, a, b))]).expect("entries");
    let f = Pmf::identity(4, a, b);
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// `E = [[1, 0, 0], [0, 0, α], [0, 0, 0]]`, `F = I` with `α` from
/// [`cubic_switch_on`]: index 1 on `[−1, 0]`, index 2 on `(0, 1]`, `d = 1`.
pub fn scf_harmless() -> DaeProblem {
    let e = with_entries(
        dmatrix![1.0, 0.0, 0.0; 0.0, 0.0, 0.0; 0.0, 0.0, 0.0],
        &[(1, 2, &cubic_switch_on())],
    )
    .expect("entries");
    let f = Pmf::identity(3, -1.0, 1.0);
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// `E = [[0, α], [β, 0]]`, `F = I` with the two switched cubics.
pub fn not_scf() -> DaeProblem {
    let e = with_entries(
        DMatrix::zeros(2, 2),
        &[(0, 1, &cubic_switch_on()), (1, 0, &cubic_switch_off())],
    )
    .expect("entries");
    let f = Pmf::identity(2, -1.0, 1.0);
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// `E = [[0, α, 0], [0, 0, α], [0, 0, 0]]`, `F = I` with `α` from
/// [`cubic_switch_on`]: index 1 on `[−1, 0]`, index 3 on `(0, 1]`, `d = 0`.
pub fn scf_index_jump() -> DaeProblem {
    let a = cubic_switch_on();
    let e = with_entries(DMatrix::zeros(3, 3), &[(0, 1, &a), (1, 2, &a)]).expect("entries");
    let f = Pmf::identity(3, -1.0, 1.0);
    DaeProblem::new(e, f, None).expect("valid pair")
}

/// Nilpotent Jordan block of size `n`.
pub fn jordan(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j == i + 1 { 1.0 } else { 0.0 })
}

/// Constant pair `E = blockdiag(J₃, J₂, J₂)`, `F = I₇` on `[0, 1]`:
/// `r = 4`, `θ = (3, 1, 0)`, `d = 0`.
pub fn kronecker_blocks() -> DaeProblem {
    let mut e = DMatrix::zeros(7, 7);
    e.view_mut((0, 0), (3, 3)).copy_from(&jordan(3));
    e.view_mut((3, 3), (2, 2)).copy_from(&jordan(2));
    e.view_mut((5, 5), (2, 2)).copy_from(&jordan(2));
    DaeProblem::new(Pmf::constant(e, 0.0, 1.0), Pmf::identity(7, 0.0, 1.0), None).expect("valid pair")
}

/// Index-1 SCF pair `E = diag(1, 0)`, `F = diag(0, 1)` with `q = (1, t)` on `[0, 1]`.
pub fn index_one_scf() -> DaeProblem {
    let e = Pmf::constant(dmatrix![1.0, 0.0; 0.0, 0.0], 0.0, 1.0);
    let f = Pmf::constant(dmatrix![0.0, 0.0; 0.0, 1.0], 0.0, 1.0);
    let q = Pmf::polynomial(vec![dmatrix![1.0; 0.0], dmatrix![0.0; 1.0]], 0.0, 1.0);
    DaeProblem::new(e, f, Some(q)).expect("valid pair")
}

/// All named fixtures with their interval-wide description.
pub fn catalogue() -> Vec<(&'static str, DaeProblem)> {
    vec![
        ("degree_pair", degree_pair()),
        ("rank_drop_e", rank_drop_e(0.0, 2.0)),
        ("solvability_loss", solvability_loss()),
        ("koch_pair", koch_pair()),
        ("alpha_rank_drop_t", alpha_rank_drop(&[0.0, 1.0])),
        ("alpha_rank_drop_t2", alpha_rank_drop(&[0.0, 0.0, 1.0])),
        ("theta_switch_regular", theta_switch(&[0.0, 0.0, 1.0], &[1.0], 0.0, 1.0)),
        ("theta_switch_cancel", theta_switch(&[0.0, 0.0, 1.0], &[0.0, 0.0, -1.0], 0.0, 1.0)),
        ("theta_switch_crossing", theta_switch(&[0.0, 1.0], &[0.0], -1.0, 1.0)),
        ("scf_harmless", scf_harmless()),
        ("not_scf", not_scf()),
        ("scf_index_jump", scf_index_jump()),
        ("kronecker_blocks", kronecker_blocks()),
        ("index_one_scf", index_one_scf()),
    ]
}
