//! Trace-minimization SDPs: the general dual with one constraint per state,
//! the block-diagonal dual in the eigenbasis of S, the positive-part oracle,
//! and variable counting.

mod barrier;
mod blocks;
mod counting;


use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

pub use barrier::SolverOptions;
pub use blocks::{BlockDiagOperator, BlockSpec};
pub use counting::{count_variables, ProblemKind, VariableCount};

use crate::ensemble::GuEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, EPS};
use crate::operators::{conjugate_matrix, DensityOperator, EigenStructure, HermitianOperator, SymmetryOperator};
use barrier::{minimize_trace, BarrierResult};
use blocks::Layout;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Tr(X) at the returned iterate, i.e. the probability of correct detection.
    pub optimal_value: f64,
    pub p_error: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub newton_steps: usize,
    pub max_constraint_violation: f64,
    pub d: usize,
    #[serde(rename = "Ce")]
    pub ce: usize,
    #[serde(rename = "Ci")]
    pub ci: usize,
    pub wall_time: f64,
}

impl SolveReport {
    fn from_barrier(r: &BarrierResult, count: VariableCount, started: Stopwatch) -> Self {
        let value = trace_of_dense(&r.dense);
        Self {
            optimal_value: value,
            p_error: 1.0 - value,
            duality_gap: r.gap,
            iterations: r.iterations,
            newton_steps: r.newton_steps,
            max_constraint_violation: (-r.min_slack_eigenvalue).max(0.0),
            d: count.d,
            ce: count.ce,
            ci: count.ci,
            wall_time: started.seconds(),
        }
    }
}

/// Wall clock for reports. std has no clock on wasm32-unknown-unknown, so
/// wall_time is reported as zero there.
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    started: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            started: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.started.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}

fn trace_of_dense(a: &CMat) -> f64 {
    linalg::trace(a.as_ref()).re
}

/// min Tr(X) subject to X ⪰ q_i ρ_i, over all Hermitian X.
pub fn solve_dp1(
    states: &[DensityOperator],
    priors: &[f64],
    opts: &SolverOptions,
) -> Result<(HermitianOperator, SolveReport)> {
    let started = Stopwatch::start();
    let first = states.first().ok_or_else(|| Error::InvalidInput("no states".into()))?;
    let n = first.dim();
    if priors.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), found: priors.len() });
    }
    if priors.iter().any(|&q| !(q >= 0.0)) || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("priors must be non-negative and sum to one".into()));
    }
    let mut constraints = Vec::with_capacity(states.len());
    for (s, &q) in states.iter().zip(priors) {
        if s.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.dim() });
        }
        constraints.push(linalg::scaled(s.as_ref(), q));
    }
    let spec = BlockSpec::full(n);
    let layout = Layout::new(&spec);
    let r = minimize_trace(&layout, &constraints, opts)?;
    let count = count_variables(ProblemKind::DP1, n, states.len(), None)?;
    debug_assert_eq!(r.x.len(), count.d);
    let report = SolveReport::from_barrier(&r, count, started);
    Ok((HermitianOperator::from_computed(r.dense), report))
}

/// min Tr(X̃) over block-diagonal X̃ (blocks given by the eigenvalue
/// multiplicities of S) subject to X̃ ⪰ (1/M) U† ρ₀ U.
pub fn solve_dp3(e: &GuEnsemble, eig: &EigenStructure, opts: &SolverOptions) -> Result<(BlockDiagOperator, SolveReport)> {
    let started = Stopwatch::start();
    if eig.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: eig.dim() });
    }
    let spec = BlockSpec::new(eig.multiplicities().to_vec())?;
    let u = eig.basis();
    let rotated = u.adjoint() * e.reference_state().as_ref() * u;
    let c = linalg::hermitian_part(linalg::scaled(rotated.as_ref(), e.prior()).as_ref());
    let layout = Layout::new(&spec);
    let r = minimize_trace(&layout, &[c], opts)?;
    let count = count_variables(ProblemKind::DP3, e.dim(), e.size(), Some(&spec))?;
    if r.x.len() != count.d {
        return Err(Error::NumericalBreakdown(format!(
            "parameter vector has length {} but {} variables were counted",
            r.x.len(),
            count.d
        )));
    }
    let report = SolveReport::from_barrier(&r, count, started);
    Ok((BlockDiagOperator::from_params(&spec, &r.x), report))
}

/// X = U X̃ U†.
pub fn lift(xtilde: &BlockDiagOperator, eig: &EigenStructure) -> Result<HermitianOperator> {
    if xtilde.spec().dim() != eig.dim() || xtilde.spec().sizes() != eig.multiplicities() {
        return Err(Error::DimensionMismatch { expected: eig.dim(), found: xtilde.spec().dim() });
    }
    let n = eig.dim();
    let u = eig.basis();
    let mut ux = Mat::<c64>::zeros(n, n);
    for (b, w) in xtilde.blocks().iter().zip(eig.block_offsets().windows(2)) {
        let (o, k) = (w[0], w[1] - w[0]);
        let prod = u.as_ref().submatrix(0, o, n, k) * b;
        ux.as_mut().submatrix_mut(0, o, n, k).copy_from(&prod);
    }
    Ok(HermitianOperator::from_computed(&ux * u.adjoint()))
}

/// A₊ = Σ_{λ_k > 0} λ_k v_k v_k†.
pub fn positive_part(a: &HermitianOperator) -> Result<HermitianOperator> {
    let (vals, vecs) = linalg::eigh(a.as_ref())?;
    let n = a.dim();
    let scaled = Mat::from_fn(n, n, |i, j| vecs[(i, j)] * vals[j].max(0.0));
    Ok(HermitianOperator::from_computed(&scaled * vecs.adjoint()))
}

/// Barrier solve of min Tr(X) subject to X ⪰ A and X ⪰ 0.
pub fn solve_psd_majorant(a: &HermitianOperator, opts: &SolverOptions) -> Result<(HermitianOperator, SolveReport)> {
    let started = Stopwatch::start();
    let n = a.dim();
    let spec = BlockSpec::full(n);
    let layout = Layout::new(&spec);
    let constraints = vec![a.matrix().clone(), Mat::<c64>::zeros(n, n)];
    let r = minimize_trace(&layout, &constraints, opts)?;
    let count = VariableCount { d: n * n, ce: 0, ci: 2 };
    let report = SolveReport::from_barrier(&r, count, started);
    Ok((HermitianOperator::from_computed(r.dense), report))
}

/// Group average X′ = (1/M) Σ_i S^{-i} X S^i, which commutes with S.
pub fn group_average(x: &HermitianOperator, s: &SymmetryOperator) -> Result<HermitianOperator> {
    let n = x.dim();
    let m = s.order();
    let mut acc = Mat::<c64>::zeros(n, n);
    // the orbit {S^i X S^-i} is the same set as {S^-i X S^i}
    for i in 0..m {
        acc += conjugate_matrix(s, i, x.as_ref())?;
    }
    Ok(HermitianOperator::from_computed(linalg::scaled(acc.as_ref(), 1.0 / m as f64)))
}

/// ||X S - S X||_F.
pub fn commutator_norm(x: &HermitianOperator, s: &SymmetryOperator) -> f64 {
    let xs = x.matrix() * s.matrix();
    let sx = s.matrix() * x.matrix();
    linalg::difference_norm(xs.as_ref(), sx.as_ref())
}

/// min_i λ_min(X - q ρ_i): the worst slack of X against the whole ensemble.
pub fn min_slack(x: &HermitianOperator, e: &GuEnsemble) -> Result<f64> {
    if x.dim() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: x.dim() });
    }
    let mut worst = f64::INFINITY;
    for i in 0..e.size() {
        let z = x.matrix() - linalg::scaled(e.state(i).matrix().as_ref(), e.prior());
        worst = worst.min(linalg::min_eigenvalue(z.as_ref())?);
    }
    Ok(worst)
}

/// Slack of a commuting X′ against the reference state only, and the worst
/// slack over the orbit S^i (X′ - ρ₀/M) S^{-i}. For X′ in the commutant
/// these coincide, so one constraint suffices.
pub fn commuting_slacks(x: &HermitianOperator, e: &GuEnsemble) -> Result<(f64, f64)> {
    let z = x.matrix() - linalg::scaled(e.reference_state().as_ref(), e.prior());
    let reference = linalg::min_eigenvalue(z.as_ref())?;
    let mut orbit = f64::INFINITY;
    for i in 0..e.size() {
        let zi = conjugate_matrix(e.symmetry(), i, z.as_ref())?;
        orbit = orbit.min(linalg::min_eigenvalue(linalg::hermitian_part(zi.as_ref()).as_ref())?);
    }
    Ok((reference, orbit))
}

/// Trace drift tolerated by the group average: 10·ε·N·M relative to |Tr X|.
pub fn averaging_trace_tolerance(n: usize, m: usize, trace: f64) -> f64 {
    10.0 * EPS * (n * m) as f64 * trace.abs().max(1.0)
}
