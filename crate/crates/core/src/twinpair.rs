//! Training of the two non-parallel hyperplanes for one class pair.
//!
//! For a pair (p, q) the focal class p is fitted closely by plane 1 while
//! class q is pushed to `f1 <= -1` and the remaining classes to
//! `f1 <= -(1 - epsilon)`; plane 2 mirrors the roles. Ball radii enlarge
//! the required margins on the right-hand side of the constraints, so the
//! whole ball, not just its centroid, satisfies them. Each plane comes out
//! of a box-constrained dual QP; the same factorization used to form the
//! dual matrix recovers the plane from the multipliers.
//!
//! With all radii zero and raw points as centroids this is exactly the
//! point-based pair solver, which doubles as the Twin-KSVC baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram, KernelSpec};
use crate::numerics::{
    default_max_sweeps, solve_box_qp, BoxQp, CholeskyFactor, DualSolution, Matrix,
    DEFAULT_QP_TOL,
};

/// Penalties, margin, ridge, and kernel for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub kernel: KernelSpec,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            epsilon: 0.1,
            delta: 0.05,
            kernel: KernelSpec::Linear,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
        ] {
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} outside (0, 1)",
                self.epsilon
            )));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta = {} must be >= 0",
                self.delta
            )));
        }
        self.kernel.validate()
    }
}

/// One class pair's training units: centroids of the focal classes `a`
/// (class p) and `b` (class q), centroids `c` of all remaining classes,
/// and the aligned radius vectors. `c` may have zero rows when K = 2.
#[derive(Debug, Clone)]
pub struct PairProblem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
}

impl PairProblem {
    pub fn validate(&self) -> Result<()> {
        if self.a.rows() == 0 || self.b.rows() == 0 {
            return Err(Error::EmptyInput("pair problem with empty focal class".into()));
        }
        if self.r1.len() != self.a.rows()
            || self.r2.len() != self.b.rows()
            || self.r3.len() != self.c.rows()
        {
            return Err(Error::DimensionMismatch(
                "radius vectors must align with centroid rows".into(),
            ));
        }
        if self.a.cols() != self.b.cols()
            || (self.c.rows() > 0 && self.c.cols() != self.a.cols())
        {
            return Err(Error::DimensionMismatch(
                "pair blocks disagree on feature dimension".into(),
            ));
        }
        if [&self.r1, &self.r2, &self.r3]
            .iter()
            .any(|r| r.iter().any(|v| *v < 0.0))
        {
            return Err(Error::InvalidParameter("negative radius".into()));
        }
        Ok(())
    }

    /// Zero-radius problem over raw points (the point-based reduction).
    pub fn from_points(a: Matrix, b: Matrix, c: Matrix) -> Self {
        let (r1, r2, r3) = (
            vec![0.0; a.rows()],
            vec![0.0; b.rows()],
            vec![0.0; c.rows()],
        );
        Self { a, b, c, r1, r2, r3 }
    }
}

/// Linear mode works in input space; kernel mode maps every block through
/// the Gram against the stacked reference rows `[A; B; C]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Linear,
    Kernel,
}

/// The two trained planes of one class pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanePair {
    pub w1: Vec<f64>,
    pub b1: f64,
    pub w2: Vec<f64>,
    pub b2: f64,
    /// Stacked reference rows for kernel mode; `None` in linear mode.
    pub reference: Option<Matrix>,
    pub kernel: KernelSpec,
}

impl PlanePair {
    /// Decision values (f1, f2) at an input-space point.
    pub fn decision_values(&self, z: &[f64]) -> (f64, f64) {
        match &self.reference {
            None => (
                crate::numerics::dot(&self.w1, z) + self.b1,
                crate::numerics::dot(&self.w2, z) + self.b2,
            ),
            Some(d) => {
                let phi: Vec<f64> = (0..d.rows())
                    .map(|i| self.kernel.eval(z, d.row(i)))
                    .collect();
                (
                    crate::numerics::dot(&self.w1, &phi) + self.b1,
                    crate::numerics::dot(&self.w2, &phi) + self.b2,
                )
            }
        }
    }
}

/// Factors and stacked constraint matrix cached between dual assembly and
/// plane recovery.
pub struct DualContext {
    factor: CholeskyFactor,
    /// `H' H + delta I` (or the mirrored Gram), kept for residual checks.
    regularized_gram: Matrix,
    /// Stacked `[push; rest]` design rows whose transpose maps multipliers
    /// back into plane space.
    stacked: Matrix,
    /// -1 for the first dual, +1 for the second.
    sign: f64,
}

/// Design blocks after optional kernelization, with bias column appended.
struct DesignBlocks {
    h_a: Matrix,
    g_b: Matrix,
    o_c: Matrix,
}

fn build_designs(problem: &PairProblem, kernel: KernelSpec, mode: TrainMode) -> Result<DesignBlocks> {
    match mode {
        TrainMode::Linear => Ok(DesignBlocks {
            h_a: problem.a.with_appended_column(1.0),
            g_b: problem.b.with_appended_column(1.0),
            o_c: if problem.c.rows() > 0 {
                problem.c.with_appended_column(1.0)
            } else {
                Matrix::zeros(0, problem.a.cols() + 1)
            },
        }),
        TrainMode::Kernel => {
            let d = problem.a.vstack(&problem.b)?.vstack(&problem.c)?;
            let h_a = gram(&problem.a, &d, kernel)?.with_appended_column(1.0);
            let g_b = gram(&problem.b, &d, kernel)?.with_appended_column(1.0);
            let o_c = if problem.c.rows() > 0 {
                gram(&problem.c, &d, kernel)?.with_appended_column(1.0)
            } else {
                Matrix::zeros(0, d.rows() + 1)
            };
            Ok(DesignBlocks {
                h_a,
                g_b,
                o_c,
            })
        }
    }
}

/// Shared dual assembly. `fit` is the design block being fitted closely,
/// `push` the block pushed beyond margin 1 with penalty `c_push`, `rest`
/// the epsilon-tube block with penalty `c_rest`.
#[allow(clippy::too_many_arguments)]
fn assemble_dual(
    fit: &Matrix,
    push: &Matrix,
    rest: &Matrix,
    push_margins: &[f64],
    rest_margins: &[f64],
    c_push: f64,
    c_rest: f64,
    delta: f64,
    sign: f64,
) -> Result<(BoxQp, DualContext)> {
    let regularized_gram = {
        let mut g = fit.gram_self();
        for i in 0..g.rows() {
            g.set(i, i, g.at(i, i) + delta);
        }
        g
    };
    let factor = CholeskyFactor::new(&regularized_gram)?;
    let stacked = push.vstack(rest)?;
    // M = stacked (fit'fit + delta I)^{-1} stacked', via one solve per column
    let x = factor.solve_mat(&stacked.transpose())?;
    let m = stacked.matmul(&x)?.symmetrized();

    let mut e4 = push_margins.to_vec();
    e4.extend_from_slice(rest_margins);
    let mut upper = vec![c_push; push.rows()];
    upper.extend(vec![c_rest; rest.rows()]);

    let qp = BoxQp::new(m, e4, upper)?;
    Ok((
        qp,
        DualContext {
            factor,
            regularized_gram,
            stacked,
            sign,
        },
    ))
}

/// First dual: plane 1 fits class p, pushes class q and the rest away.
pub fn assemble_first_dual(
    problem: &PairProblem,
    hp: &HyperParams,
    mode: TrainMode,
) -> Result<(BoxQp, DualContext)> {
    problem.validate()?;
    hp.validate()?;
    let blocks = build_designs(problem, hp.kernel, mode)?;
    let push_margins: Vec<f64> = problem.r2.iter().map(|r| 1.0 + r).collect();
    let rest_margins: Vec<f64> = problem.r3.iter().map(|r| (1.0 - hp.epsilon) + r).collect();
    assemble_dual(
        &blocks.h_a,
        &blocks.g_b,
        &blocks.o_c,
        &push_margins,
        &rest_margins,
        hp.c1,
        hp.c2,
        hp.delta,
        -1.0,
    )
}

/// Second dual: the mirrored problem fitting class q.
pub fn assemble_second_dual(
    problem: &PairProblem,
    hp: &HyperParams,
    mode: TrainMode,
) -> Result<(BoxQp, DualContext)> {
    problem.validate()?;
    hp.validate()?;
    let blocks = build_designs(problem, hp.kernel, mode)?;
    let push_margins: Vec<f64> = problem.r1.iter().map(|r| 1.0 + r).collect();
    let rest_margins: Vec<f64> = problem.r3.iter().map(|r| (1.0 - hp.epsilon) + r).collect();
    assemble_dual(
        &blocks.g_b,
        &blocks.h_a,
        &blocks.o_c,
        &push_margins,
        &rest_margins,
        hp.c3,
        hp.c4,
        hp.delta,
        1.0,
    )
}

/// Map dual multipliers back to plane coefficients through the cached
/// factorization. Returns (w, b).
pub fn recover_plane(dual: &DualSolution, ctx: &DualContext) -> Result<(Vec<f64>, f64)> {
    let rhs = ctx.stacked.transpose_matvec(&dual.x)?;
    let mut theta = ctx.factor.solve_vec(&rhs)?;
    for t in theta.iter_mut() {
        *t *= ctx.sign;
    }
    let b = theta.pop().expect("design has a bias column");
    Ok((theta, b))
}

/// Stationarity residual of a recovered plane:
/// `||(fit'fit + delta I) theta + sign * stacked' x||_inf` must vanish.
pub fn stationarity_residual(
    dual: &DualSolution,
    ctx: &DualContext,
    w: &[f64],
    b: f64,
) -> Result<f64> {
    let mut theta = w.to_vec();
    theta.push(b);
    let lhs = ctx.regularized_gram.matvec(&theta)?;
    let rhs = ctx.stacked.transpose_matvec(&dual.x)?;
    // theta = sign * K^{-1} rhs, so K theta - sign * rhs = 0
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - ctx.sign * r).abs())
        .fold(0.0, f64::max))
}

/// Per-pair training diagnostics surfaced to the model level.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PairDiagnostics {
    /// Worst stationarity residual over both planes.
    pub stationarity_residual: f64,
    /// Worst projected-gradient KKT residual over both dual solves.
    pub dual_kkt_residual: f64,
    /// Dual dimensions (first, second); each equals push + rest row counts.
    pub dual_dims: (usize, usize),
}

pub fn train_pair(problem: &PairProblem, hp: &HyperParams, mode: TrainMode) -> Result<PlanePair> {
    Ok(train_pair_full(problem, hp, mode)?.0)
}

/// Train both planes and report diagnostics.
pub fn train_pair_full(
    problem: &PairProblem,
    hp: &HyperParams,
    mode: TrainMode,
) -> Result<(PlanePair, PairDiagnostics)> {
    let solve = |qp: &BoxQp| -> Result<DualSolution> {
        // M entries scale like 1/delta, so an absolute gradient tolerance is
        // unreachable in f64 for small ridges; scale it by the matrix norm,
        // the natural size of the projected gradient
        let tol = 0.1 * DEFAULT_QP_TOL * (1.0 + qp.m.inf_norm());
        solve_box_qp(qp, tol, default_max_sweeps(qp.dim()))
    };

    let (qp1, ctx1) = assemble_first_dual(problem, hp, mode)?;
    let dual1 = solve(&qp1).map_err(|e| Error::DegeneratePair {
        p: 0,
        q: 1,
        reason: format!("first dual: {e}"),
    })?;
    let (w1, b1) = recover_plane(&dual1, &ctx1)?;
    let res1 = stationarity_residual(&dual1, &ctx1, &w1, b1)?;

    let (qp2, ctx2) = assemble_second_dual(problem, hp, mode)?;
    let dual2 = solve(&qp2).map_err(|e| Error::DegeneratePair {
        p: 0,
        q: 1,
        reason: format!("second dual: {e}"),
    })?;
    let (w2, b2) = recover_plane(&dual2, &ctx2)?;
    let res2 = stationarity_residual(&dual2, &ctx2, &w2, b2)?;

    let reference = match mode {
        TrainMode::Linear => None,
        TrainMode::Kernel => Some(problem.a.vstack(&problem.b)?.vstack(&problem.c)?),
    };
    Ok((
        PlanePair {
            w1,
            b1,
            w2,
            b2,
            reference,
            kernel: hp.kernel,
        },
        PairDiagnostics {
            stationarity_residual: res1.max(res2),
            dual_kkt_residual: dual1.kkt_residual.max(dual2.kkt_residual),
            dual_dims: (qp1.dim(), qp2.dim()),
        },
    ))
}
