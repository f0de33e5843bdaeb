//! Log-det barrier path following for
//!
//! ```text
//! minimize Tr(X)  subject to  X - C_i ≻ 0,  i = 1..m,
//! ```
//!
//! with X ranging over block-diagonal Hermitian matrices. Each centering step
//! minimizes `t·Tr(X) - Σ log det(X - C_i)` by damped Newton on the real
//! parameter vector of X; t grows by `mu` once the Newton decrement is small.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Llt;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{c64, Accum, Mat, Par, Side};
use serde::{Deserialize, Serialize};

use super::blocks::{Layout, Slot};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target duality gap (number of constraints · N / t).
    pub tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    pub mu: f64,
    /// Centering stops once λ²/2 falls below this.
    pub centering_tol: f64,
    pub fraction_to_boundary: f64,
    /// Above this many variables the Newton system is solved by
    /// preconditioned conjugate gradients instead of a dense Cholesky.
    pub dense_limit: usize,
    pub cg_max_iter: usize,
    pub cg_rel_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_outer: 200,
            max_newton: 50,
            mu: 10.0,
            centering_tol: 1e-14,
            fraction_to_boundary: 0.98,
            dense_limit: 2048,
            cg_max_iter: 2000,
            cg_rel_tol: 1e-9,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug)]
pub(crate) struct BarrierResult {
    pub x: Vec<f64>,
    pub dense: CMat,
    pub iterations: usize,
    pub newton_steps: usize,
    pub gap: f64,
    pub min_slack_eigenvalue: f64,
}

struct Point {
    x: Vec<f64>,
    dense: CMat,
    factors: Vec<Llt<c64>>,
    log_det: f64,
    trace: f64,
}

fn trace_of(layout: &Layout, x: &[f64]) -> f64 {
    layout
        .slots
        .iter()
        .zip(x)
        .filter(|(s, _)| matches!(s, Slot::Diag(_)))
        .map(|(_, v)| v)
        .sum()
}

fn factor(layout: &Layout, constraints: &[CMat], x: Vec<f64>) -> Option<Point> {
    let dense = layout.embed(&x);
    let mut factors = Vec::with_capacity(constraints.len());
    let mut log_det = 0.0;
    for c in constraints {
        let z = &dense - c;
        let llt = linalg::cholesky(z.as_ref())?;
        log_det += linalg::log_det_from_llt(&llt);
        factors.push(llt);
    }
    if !log_det.is_finite() {
        return None;
    }
    let trace = trace_of(layout, &x);
    Some(Point { x, dense, factors, log_det, trace })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Expansion of a basis element into elementary matrices e_p e_q†.
fn terms(slot: Slot) -> ([(usize, usize, c64); 2], usize) {
    let one = c64::new(1.0, 0.0);
    let zero = (0, 0, c64::new(0.0, 0.0));
    match slot {
        Slot::Diag(p) => ([(p, p, one), zero], 1),
        Slot::Re(p, q) => ([(p, q, one), (q, p, one)], 2),
        Slot::Im(p, q) => ([(p, q, c64::new(0.0, 1.0)), (q, p, c64::new(0.0, -1.0))], 2),
    }
}

/// H_ab = Σ_i Re Tr(W_i E_a W_i E_b), using Tr(W e_p e_q† W e_r e_s†) = W_qr W_sp.
fn dense_hessian(layout: &Layout, ws: &[CMat]) -> Mat<f64> {
    let d = layout.len();
    let expanded: Vec<_> = layout.slots.iter().map(|&s| terms(s)).collect();
    let mut h = Mat::<f64>::zeros(d, d);
    for a in 0..d {
        let (ta, na) = &expanded[a];
        for b in a..d {
            let (tb, nb) = &expanded[b];
            let mut acc = 0.0;
            for w in ws {
                let mut z = c64::new(0.0, 0.0);
                for &(p, q, alpha) in &ta[..*na] {
                    for &(r, s, beta) in &tb[..*nb] {
                        z += alpha * beta * w[(q, r)] * w[(s, p)];
                    }
                }
                acc += z.re;
            }
            h[(a, b)] = acc;
            h[(b, a)] = acc;
        }
    }
    h
}

fn solve_dense(h: Mat<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let d = rhs.len();
    let scale: Vec<f64> = (0..d).map(|i| 1.0 / h[(i, i)].abs().max(f64::MIN_POSITIVE).sqrt()).collect();
    let scaled = Mat::from_fn(d, d, |i, j| h[(i, j)] * scale[i] * scale[j]);
    let b = Mat::from_fn(d, 1, |i, _| rhs[i] * scale[i]);
    let mut shift = 0.0;
    for _ in 0..12 {
        let m = if shift > 0.0 { Mat::from_fn(d, d, |i, j| scaled[(i, j)] + if i == j { shift } else { 0.0 }) } else { scaled.clone() };
        if let Ok(llt) = m.llt(Side::Lower) {
            use faer::linalg::solvers::Solve;
            let y = llt.solve(&b);
            let out: Vec<f64> = (0..d).map(|i| y[(i, 0)] * scale[i]).collect();
            if out.iter().all(|v| v.is_finite()) {
                return Ok(out);
            }
        }
        shift = if shift == 0.0 { 1e-14 } else { shift * 100.0 };
    }
    Err(Error::NumericalBreakdown("Newton system is not positive definite".into()))
}

/// Matrix-free Hessian: v ↦ dual(Σ_i P_blocks(W_i V W_i)).
struct HessianOperator<'a> {
    layout: &'a Layout,
    ws: &'a [CMat],
    offsets: Vec<usize>,
    inv_blocks: Vec<CMat>,
}

impl<'a> HessianOperator<'a> {
    fn new(layout: &'a Layout, ws: &'a [CMat]) -> Result<Self> {
        let offsets = layout.spec.offsets();
        let mut inv_blocks = Vec::with_capacity(layout.spec.sizes().len());
        for (j, &k) in layout.spec.sizes().iter().enumerate() {
            let o = offsets[j];
            let mut a = Mat::<c64>::zeros(k, k);
            for w in ws {
                a += w.as_ref().submatrix(o, o, k, k);
            }
            let llt = linalg::cholesky(linalg::hermitian_part(a.as_ref()).as_ref())
                .ok_or_else(|| Error::NumericalBreakdown("preconditioner block is not positive definite".into()))?;
            inv_blocks.push(linalg::inverse_from_llt(&llt));
        }
        Ok(Self { layout, ws, offsets, inv_blocks })
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.layout.spec.dim();
        let vm = self.layout.embed(v);
        let sizes = self.layout.spec.sizes();
        let mut acc = Mat::<c64>::zeros(n, n);
        let one = c64::new(1.0, 0.0);
        for w in self.ws {
            let mut t = Mat::<c64>::zeros(n, n);
            for (j, &k) in sizes.iter().enumerate() {
                let o = self.offsets[j];
                matmul(
                    t.as_mut().submatrix_mut(0, o, n, k),
                    Accum::Replace,
                    w.as_ref().submatrix(0, o, n, k),
                    vm.as_ref().submatrix(o, o, k, k),
                    one,
                    Par::Seq,
                );
            }
            for (j, &k) in sizes.iter().enumerate() {
                let o = self.offsets[j];
                matmul(
                    acc.as_mut().submatrix_mut(o, o, k, k),
                    Accum::Add,
                    t.as_ref().submatrix(o, 0, k, n),
                    w.as_ref().submatrix(0, o, n, k),
                    one,
                    Par::Seq,
                );
            }
        }
        self.layout.dual(acc.as_ref())
    }

    /// Block-Jacobi preconditioner: exact inverse of V_j ↦ (1/m) A_j V_j A_j
    /// with A_j = Σ_i (W_i)_jj.
    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let rm = self.layout.from_dual(r);
        let n = self.layout.spec.dim();
        let m = self.ws.len() as f64;
        let mut out = Mat::<c64>::zeros(n, n);
        for (j, &k) in self.layout.spec.sizes().iter().enumerate() {
            let o = self.offsets[j];
            let inv = &self.inv_blocks[j];
            let tmp = inv * rm.as_ref().submatrix(o, o, k, k);
            let z = &tmp * inv;
            out.as_mut().submatrix_mut(o, o, k, k).copy_from(linalg::scaled(z.as_ref(), m));
        }
        self.layout.primal(out.as_ref())
    }
}

fn solve_cg(op: &HessianOperator<'_>, rhs: &[f64], opts: &SolverOptions) -> Result<Vec<f64>> {
    let d = rhs.len();
    let mut x = vec![0.0; d];
    let mut r = rhs.to_vec();
    let bnorm = dot(rhs, rhs).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut z = op.precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..opts.cg_max_iter {
        let hp = op.apply(&p);
        let php = dot(&p, &hp);
        if !(php > 0.0) {
            break;
        }
        let alpha = rz / php;
        for i in 0..d {
            x[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        if dot(&r, &r).sqrt() <= opts.cg_rel_tol * bnorm {
            break;
        }
        z = op.precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..d {
            p[i] = z[i] + beta * p[i];
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBreakdown("conjugate gradient produced a non-finite direction".into()));
    }
    Ok(x)
}

/// Largest step α with Z + α·dZ still PSD, given Z = L L†.
fn step_to_boundary(llt: &Llt<c64>, dz: &CMat) -> Result<f64> {
    let l = llt.L();
    let mut m1 = dz.clone();
    solve_lower_triangular_in_place(l, m1.as_mut(), Par::Seq);
    let mut m2 = m1.adjoint().to_owned();
    solve_lower_triangular_in_place(l, m2.as_mut(), Par::Seq);
    let lam = linalg::min_eigenvalue(linalg::hermitian_part(m2.as_ref()).as_ref())?;
    Ok(if lam < 0.0 { -1.0 / lam } else { f64::INFINITY })
}

/// Lower bound on the optimum from the dual point Y_i = W_i / t.
///
/// When some C_i is PSD every feasible X is PSD, so Y_i rescaled to satisfy
/// Σ P(Y_i) ⪯ I gives Σ Re Tr(C_i Y_i) ≤ Tr(X) for all feasible X. This keeps
/// the certificate valid when centering is only approximate.
fn dual_bound(layout: &Layout, constraints: &[CMat], ws: &[CMat], t: f64, psd_data: bool) -> Result<f64> {
    let raw: f64 = constraints.iter().zip(ws).map(|(c, w)| linalg::re_trace_product(c.as_ref(), w.as_ref())).sum();
    if !psd_data {
        return Ok(raw / t);
    }
    let offsets = layout.spec.offsets();
    let mut top = f64::NEG_INFINITY;
    for (j, &k) in layout.spec.sizes().iter().enumerate() {
        let o = offsets[j];
        let mut a = Mat::<c64>::zeros(k, k);
        for w in ws {
            a += w.as_ref().submatrix(o, o, k, k);
        }
        top = top.max(linalg::max_eigenvalue(linalg::hermitian_part(a.as_ref()).as_ref())?);
    }
    Ok(raw / (t * (top / t).max(1.0)))
}

/// Minimizes Tr(X) over block-diagonal X with X - C_i ≻ 0 for all i.
pub(crate) fn minimize_trace(layout: &Layout, constraints: &[CMat], opts: &SolverOptions) -> Result<BarrierResult> {
    let n = layout.spec.dim();
    if constraints.is_empty() {
        return Err(Error::InvalidInput("at least one constraint is required".into()));
    }
    for c in constraints {
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: c.nrows() });
        }
    }
    let d = layout.len();
    let lam_max = constraints
        .iter()
        .map(|c| linalg::max_eigenvalue(c.as_ref()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let psd_data = constraints
        .iter()
        .map(|c| linalg::min_eigenvalue(c.as_ref()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .any(|l| l >= -1e-14 * lam_max.abs().max(1.0));
    let start = 1.0 + lam_max;
    let x0: Vec<f64> = layout
        .slots
        .iter()
        .map(|s| if matches!(s, Slot::Diag(_)) { start } else { 0.0 })
        .collect();
    let mut point = factor(layout, constraints, x0)
        .ok_or_else(|| Error::NumericalBreakdown("initial point is not strictly feasible".into()))?;

    let trace_grad: Vec<f64> = layout.slots.iter().map(|s| if matches!(s, Slot::Diag(_)) { 1.0 } else { 0.0 }).collect();
    let m_total = (constraints.len() * n) as f64;

    let inverses = |p: &Point| -> Vec<CMat> { p.factors.iter().map(linalg::inverse_from_llt).collect() };

    let mut ws = inverses(&point);
    let mut t = {
        let s: f64 = ws.iter().map(|w| linalg::trace(w.as_ref()).re).sum();
        (s / n as f64).max(1e-3)
    };

    let mut iterations = 0;
    let mut newton_steps = 0;
    loop {
        let mut previous = f64::INFINITY;
        for _ in 0..opts.max_newton {
            let mut g = trace_grad.iter().map(|v| t * v).collect::<Vec<_>>();
            for w in &ws {
                for (gi, wi) in g.iter_mut().zip(layout.dual(w.as_ref())) {
                    *gi -= wi;
                }
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let dir = if d <= opts.dense_limit {
                solve_dense(dense_hessian(layout, &ws), &rhs)?
            } else {
                let op = HessianOperator::new(layout, &ws)?;
                solve_cg(&op, &rhs, opts)?
            };
            let slope = dot(&g, &dir);
            if !slope.is_finite() {
                return Err(Error::NumericalBreakdown("non-finite Newton decrement".into()));
            }
            let decrement = -slope;
            if decrement / 2.0 <= opts.centering_tol || decrement <= 0.0 {
                break;
            }
            // Newton converges quadratically here; a slow decrease means the
            // decrement is at the rounding floor of the slack matrices
            if decrement < 1e-8 && decrement > 0.25 * previous {
                break;
            }
            previous = decrement;

            let dz = layout.embed(&dir);
            let mut alpha_max = f64::INFINITY;
            for llt in &point.factors {
                alpha_max = alpha_max.min(step_to_boundary(llt, &dz)?);
            }
            let mut alpha = (opts.fraction_to_boundary * alpha_max).min(1.0);
            let f0 = t * point.trace - point.log_det;
            let mut accepted = None;
            while alpha > 1e-14 {
                let trial: Vec<f64> = point.x.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
                if let Some(p) = factor(layout, constraints, trial) {
                    let f1 = t * p.trace - p.log_det;
                    // inside the quadratic region the barrier value is below
                    // rounding noise of t·Tr(X); a feasible Newton step is safe
                    if f1 <= f0 + 0.25 * alpha * slope || decrement < 0.1 {
                        accepted = Some(p);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            newton_steps += 1;
            match accepted {
                Some(p) => {
                    point = p;
                    ws = inverses(&point);
                }
                // no descent possible at working precision: treat as centered
                None => break,
            }
        }
        iterations += 1;
        if m_total / t <= opts.tol {
            break;
        }
        if iterations >= opts.max_outer {
            let dual = dual_bound(layout, constraints, &ws, t, psd_data)?;
            return Err(Error::MaxIterationsExceeded { best_value: point.trace, gap: point.trace - dual });
        }
        t *= opts.mu;
    }

    let dual = dual_bound(layout, constraints, &ws, t, psd_data)?;
    let mut min_slack = f64::INFINITY;
    for c in constraints {
        let z = &point.dense - c;
        min_slack = min_slack.min(linalg::min_eigenvalue(z.as_ref())?);
    }
    Ok(BarrierResult {
        gap: point.trace - dual,
        x: point.x,
        dense: point.dense,
        iterations,
        newton_steps,
        min_slack_eigenvalue: min_slack,
    })
}
