//! Measurements: recovery of the reference operator Π₀ from the dual optimum,
//! expansion to the full covariant POVM, success probabilities, optimality
//! checks and the square-root measurement baseline.

use faer::{c64, Mat, MatRef};
use serde::{Serialize, Serializer};

use crate::ensemble::GuEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::matrix::MatrixView;
use crate::sdp::{lift, solve_dp3, SolveReport, SolverOptions};
use crate::operators::{
    conjugate_matrix, eigenstructure, DensityOperator, EigenStructure, HermitianOperator, SymmetryOperator,
    Tolerances,
};

/// Completeness tolerance ||Σ Π_i - I||_F.
pub const EPS_POVM: f64 = 1e-7;

/// Relative threshold for the numerical null space of X - ρ₀/M and for the
/// support of the average state in the square-root measurement.
pub const NULL_THRESHOLD: f64 = 1e-6;

/// Above this many real matrix entries the completeness least-squares
/// problem is solved matrix-free by CGLS instead of a dense SVD.
const DENSE_LSQ_LIMIT: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    operators: Vec<HermitianOperator>,
}

impl Povm {
    /// Checks positivity (within `tol.psd`) and completeness (within `eps`).
    pub fn new(operators: Vec<HermitianOperator>, tol: &Tolerances, eps: f64) -> Result<Self> {
        let n = operators.first().ok_or_else(|| Error::InvalidInput("empty POVM".into()))?.dim();
        for p in &operators {
            if p.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.dim() });
            }
            let lam = linalg::min_eigenvalue(p.as_ref())?;
            if lam < -tol.psd {
                return Err(Error::NotPsd { min_eigenvalue: lam });
            }
        }
        let povm = Self { operators };
        let residual = povm.completeness_residual();
        if residual > eps {
            return Err(Error::CompletenessViolated { residual });
        }
        Ok(povm)
    }

    pub fn operators(&self) -> &[HermitianOperator] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    /// ||Σ Π_i - I||_F.
    pub fn completeness_residual(&self) -> f64 {
        let n = self.dim();
        let mut sum = Mat::<c64>::zeros(n, n);
        for p in &self.operators {
            sum += p.as_ref();
        }
        linalg::distance_to_identity(sum.as_ref(), c64::new(1.0, 0.0))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for p in &self.operators {
            lo = lo.min(linalg::min_eigenvalue(p.as_ref())?);
        }
        Ok(lo)
    }
}

impl Serialize for Povm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.operators.iter().map(|p| MatrixView(p.as_ref())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryOptions {
    pub null_threshold: f64,
    pub eps_povm: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { null_threshold: NULL_THRESHOLD, eps_povm: EPS_POVM }
    }
}

/// Π₀ together with diagnostics of the recovery.
#[derive(Clone, Debug)]
pub struct Recovery {
    pub pi0: HermitianOperator,
    pub null_dim: usize,
    /// ||Σ_i S^i Π₀ S^{-i} - I||_F.
    pub completeness_residual: f64,
    /// Whether the refinement restricted to the face of the PSD cone won.
    pub refined: bool,
}

/// Tightening rounds tried by [`solve_and_recover`] when the completeness
/// system is infeasible at the requested tolerance.
pub const POLISH_ROUNDS: usize = 3;

/// Solves the reduced dual and recovers Π₀. The null-space estimate error
/// shrinks linearly with the solver tolerance, so an infeasible completeness
/// system triggers a re-solve at tol/10, up to [`POLISH_ROUNDS`] times.
pub fn solve_and_recover(
    e: &GuEnsemble,
    eig: &EigenStructure,
    opts: &SolverOptions,
    rec: &RecoveryOptions,
) -> Result<(HermitianOperator, SolveReport, Recovery)> {
    let mut opts = opts.clone();
    let mut round = 0;
    loop {
        let (xt, report) = solve_dp3(e, eig, &opts)?;
        let x = lift(&xt, eig)?;
        match recover_reference_povm_with(e, eig, &x, rec) {
            Ok(r) => return Ok((x, report, r)),
            Err(Error::CompletenessInfeasible { .. }) if round < POLISH_ROUNDS => {
                round += 1;
                opts.tol /= 10.0;
            }
            Err(err) => return Err(err),
        }
    }
}

/// Recovers Π₀ from an optimal X (commuting with S) by complementary
/// slackness: Π₀ = V C V† on the null space V of X - ρ₀/M, with C ⪰ 0 the
/// minimum-norm solution of the completeness equations.
pub fn recover_reference_povm(e: &GuEnsemble, x_opt: &HermitianOperator, opts: &RecoveryOptions) -> Result<HermitianOperator> {
    let eig = eigenstructure(e.symmetry(), Tolerances::default().grouping)?;
    Ok(recover_reference_povm_with(e, &eig, x_opt, opts)?.pi0)
}

pub fn recover_reference_povm_with(
    e: &GuEnsemble,
    eig: &EigenStructure,
    x_opt: &HermitianOperator,
    opts: &RecoveryOptions,
) -> Result<Recovery> {
    let n = e.dim();
    if x_opt.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x_opt.dim() });
    }
    let m = e.size() as f64;
    let d = x_opt.matrix() - linalg::scaled(e.reference_state().as_ref(), e.prior());
    let (vals, vecs) = linalg::eigh(linalg::hermitian_part(d.as_ref()).as_ref())?;
    // the scale is floored by ||X|| so that D ≈ 0 (indistinguishable states)
    // counts as an all-null slack rather than as noise relative to itself
    let sigma_max = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(linalg::max_eigenvalue(x_opt.as_ref())?.abs());
    let null: Vec<usize> = (0..n).filter(|&i| vals[i].abs() <= opts.null_threshold * sigma_max).collect();
    if null.is_empty() {
        let min_relative = vals.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs())) / sigma_max;
        return Err(Error::EmptyNullSpace { min_relative });
    }
    let k = null.len();
    let v = Mat::from_fn(n, k, |i, j| vecs[(i, null[j])]);

    // completeness ⇔ P_blocks(U† Π₀ U) = I/M in the eigenbasis of S
    let b = eig.basis().adjoint() * &v;
    let offsets = eig.block_offsets();
    let bs: Vec<CMat> = offsets.windows(2).map(|w| b.as_ref().submatrix(w[0], 0, w[1] - w[0], k).to_owned()).collect();
    let target: Vec<CMat> = eig.multiplicities().iter().map(|&nj| linalg::scaled(linalg::identity(nj).as_ref(), 1.0 / m)).collect();

    let c = clip_psd(min_norm_solution(&bs, &target)?.as_ref())?;
    let mut best = (lsq_residual(&bs, c.as_ref(), &target), c, false);

    // one refinement on the face spanned by the dominant eigenvectors of C
    let (cv, cvecs) = linalg::eigh(best.1.as_ref())?;
    let top = cv.iter().fold(0.0f64, |a, &x| a.max(x));
    let face: Vec<usize> = (0..k).filter(|&i| cv[i] > opts.null_threshold * top).collect();
    if !face.is_empty() && face.len() < k {
        let w = Mat::from_fn(k, face.len(), |i, j| cvecs[(i, face[j])]);
        let bw: Vec<CMat> = bs.iter().map(|bj| bj * &w).collect();
        let g = clip_psd(min_norm_solution(&bw, &target)?.as_ref())?;
        let c2 = &w * &g * w.adjoint();
        let r2 = lsq_residual(&bs, c2.as_ref(), &target);
        if r2 < best.0 {
            best = (r2, c2, true);
        }
    }

    let completeness_residual = m * best.0;
    if !(completeness_residual <= opts.eps_povm) {
        return Err(Error::CompletenessInfeasible { residual: completeness_residual });
    }
    let pi0 = &v * &best.1 * v.adjoint();
    Ok(Recovery { pi0: HermitianOperator::from_computed(pi0), null_dim: k, completeness_residual, refined: best.2 })
}

fn clip_psd(c: MatRef<'_, c64>) -> Result<CMat> {
    let (vals, vecs) = linalg::eigh(c)?;
    let k = c.nrows();
    let scaled = Mat::from_fn(k, k, |i, j| vecs[(i, j)] * vals[j].max(0.0));
    Ok(linalg::hermitian_part((&scaled * vecs.adjoint()).as_ref()))
}

/// The linear map C ↦ (B_j C B_j†)_j.
fn apply(bs: &[CMat], c: MatRef<'_, c64>) -> Vec<CMat> {
    bs.iter().map(|bj| bj * c * bj.adjoint()).collect()
}

/// Its adjoint (Y_j)_j ↦ Σ_j B_j† Y_j B_j.
fn apply_adjoint(bs: &[CMat], ys: &[CMat]) -> CMat {
    let k = bs[0].ncols();
    let mut out = Mat::<c64>::zeros(k, k);
    for (bj, yj) in bs.iter().zip(ys) {
        out += bj.adjoint() * yj * bj;
    }
    linalg::hermitian_part(out.as_ref())
}

fn blocks_norm_sq(ys: &[CMat]) -> f64 {
    ys.iter().map(|y| linalg::frobenius(y.as_ref()).powi(2)).sum()
}

fn lsq_residual(bs: &[CMat], c: MatRef<'_, c64>, target: &[CMat]) -> f64 {
    let r: Vec<CMat> = apply(bs, c).iter().zip(target).map(|(a, t)| a - t).collect();
    blocks_norm_sq(&r).sqrt()
}

/// Orthonormal real coordinates of a Hermitian matrix: diagonal entries,
/// then √2·Re and √2·Im of each strictly upper entry.
fn herm_coords(h: MatRef<'_, c64>, out: &mut Vec<f64>) {
    let k = h.nrows();
    out.extend((0..k).map(|p| h[(p, p)].re));
    let s = std::f64::consts::SQRT_2;
    for p in 0..k {
        for q in p + 1..k {
            out.push(s * h[(p, q)].re);
            out.push(s * h[(p, q)].im);
        }
    }
}

fn herm_from_coords(k: usize, x: &[f64]) -> CMat {
    let mut h = Mat::<c64>::zeros(k, k);
    for p in 0..k {
        h[(p, p)] = c64::new(x[p], 0.0);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut idx = k;
    for p in 0..k {
        for q in p + 1..k {
            let z = c64::new(s * x[idx], s * x[idx + 1]);
            h[(p, q)] = z;
            h[(q, p)] = z.conj();
            idx += 2;
        }
    }
    h
}

/// Minimum-Frobenius-norm least-squares solution of B_j C B_j† = T_j.
fn min_norm_solution(bs: &[CMat], target: &[CMat]) -> Result<CMat> {
    let k = bs[0].ncols();
    let rows: usize = bs.iter().map(|b| b.nrows() * b.nrows()).sum();
    if rows.saturating_mul(k * k) <= DENSE_LSQ_LIMIT {
        dense_min_norm(bs, target, k, rows)
    } else {
        Ok(cgls(bs, target, k))
    }
}

fn dense_min_norm(bs: &[CMat], target: &[CMat], k: usize, rows: usize) -> Result<CMat> {
    let cols = k * k;
    let mut a = Mat::<f64>::zeros(rows, cols);
    let mut unit = vec![0.0; cols];
    let mut buf = Vec::with_capacity(rows);
    for col in 0..cols {
        unit.iter_mut().for_each(|u| *u = 0.0);
        unit[col] = 1.0;
        let basis = herm_from_coords(k, &unit);
        buf.clear();
        for y in apply(bs, basis.as_ref()) {
            herm_coords(y.as_ref(), &mut buf);
        }
        for (row, &v) in buf.iter().enumerate() {
            a[(row, col)] = v;
        }
    }
    buf.clear();
    for t in target {
        herm_coords(t.as_ref(), &mut buf);
    }
    let svd = a.thin_svd().map_err(|e| Error::DecompositionFailed(format!("{e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let r = s.dim();
    let smax = (0..r).fold(0.0f64, |acc, i| acc.max(s[i]));
    let cutoff = smax * 1e-10 * (rows.max(cols) as f64);
    let mut x = vec![0.0; cols];
    for i in 0..r {
        if s[i] <= cutoff {
            continue;
        }
        let proj: f64 = (0..rows).map(|row| u[(row, i)] * buf[row]).sum::<f64>() / s[i];
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += v[(j, i)] * proj;
        }
    }
    Ok(herm_from_coords(k, &x))
}

/// CGLS started at zero, which converges to the minimum-norm solution.
fn cgls(bs: &[CMat], target: &[CMat], k: usize) -> CMat {
    let mut x = Mat::<c64>::zeros(k, k);
    let mut r: Vec<CMat> = target.to_vec();
    let mut s = apply_adjoint(bs, &r);
    let mut p = s.clone();
    let mut gamma = linalg::frobenius(s.as_ref()).powi(2);
    let stop = 1e-28 * gamma;
    for _ in 0..20_000 {
        if gamma <= stop || gamma == 0.0 {
            break;
        }
        let q = apply(bs, p.as_ref());
        let qq = blocks_norm_sq(&q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x += linalg::scaled(p.as_ref(), alpha);
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= linalg::scaled(qi.as_ref(), alpha);
        }
        s = apply_adjoint(bs, &r);
        let gamma_new = linalg::frobenius(s.as_ref()).powi(2);
        p = &s + linalg::scaled(p.as_ref(), gamma_new / gamma);
        gamma = gamma_new;
    }
    linalg::hermitian_part(x.as_ref())
}

/// Π_i = S^i Π₀ S^{-i}, i = 0..M-1.
pub fn expand_povm(pi0: &HermitianOperator, s: &SymmetryOperator, m: usize) -> Result<Povm> {
    if pi0.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: pi0.dim() });
    }
    if m != s.order() {
        return Err(Error::OrderMismatch { symmetry: s.order(), ensemble: m });
    }
    let ops = (0..m)
        .map(|i| conjugate_matrix(s, i, pi0.as_ref()).map(HermitianOperator::from_computed))
        .collect::<Result<Vec<_>>>()?;
    let povm = Povm { operators: ops };
    let residual = povm.completeness_residual();
    if residual > EPS_POVM {
        return Err(Error::CompletenessViolated { residual });
    }
    Ok(povm)
}

/// P_c = Σ q_i Tr(ρ_i Π_i), unclamped.
pub fn success_probability(states: &[DensityOperator], priors: &[f64], povm: &Povm) -> Result<f64> {
    if states.len() != povm.len() || priors.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), found: povm.len() });
    }
    let mut pc = 0.0;
    for ((rho, &q), p) in states.iter().zip(priors).zip(povm.operators()) {
        if rho.dim() != p.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim(), found: rho.dim() });
        }
        pc += q * linalg::re_trace_product(rho.as_ref(), p.as_ref());
    }
    Ok(pc)
}

/// P_c of a covariant POVM on a GU ensemble: Tr(ρ₀ Π₀).
pub fn reference_success_probability(e: &GuEnsemble, pi0: &HermitianOperator) -> f64 {
    linalg::re_trace_product(e.reference_state().as_ref(), pi0.as_ref())
}

/// Pseudo-inverse square root of ρ̄ on its support and the projector onto it.
fn srm_parts(avg: MatRef<'_, c64>) -> Result<(CMat, CMat)> {
    let (vals, vecs) = linalg::eigh(avg)?;
    let n = avg.nrows();
    let top = vals.iter().fold(0.0f64, |a, &v| a.max(v));
    let keep: Vec<bool> = vals.iter().map(|&v| v > NULL_THRESHOLD * top).collect();
    let r = Mat::from_fn(n, n, |i, j| if keep[j] { vecs[(i, j)] / vals[j].sqrt() } else { c64::new(0.0, 0.0) });
    let p = Mat::from_fn(n, n, |i, j| if keep[j] { vecs[(i, j)] } else { c64::new(0.0, 0.0) });
    Ok((&r * vecs.adjoint(), &p * vecs.adjoint()))
}

/// Square-root measurement Π_i = R q_i ρ_i R + (I - P)/M with R = ρ̄^{-1/2}
/// on the support of ρ̄ and P the projector onto that support.
pub fn srm_povm(states: &[DensityOperator], priors: &[f64]) -> Result<Povm> {
    let first = states.first().ok_or_else(|| Error::InvalidInput("no states".into()))?;
    let n = first.dim();
    if priors.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: states.len(), found: priors.len() });
    }
    let mut avg = Mat::<c64>::zeros(n, n);
    for (rho, &q) in states.iter().zip(priors) {
        if rho.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rho.dim() });
        }
        avg += linalg::scaled(rho.as_ref(), q);
    }
    let (r, p) = srm_parts(avg.as_ref())?;
    let m = states.len() as f64;
    let complement = linalg::scaled((linalg::identity(n) - &p).as_ref(), 1.0 / m);
    let ops = states
        .iter()
        .zip(priors)
        .map(|(rho, &q)| {
            let core = &r * linalg::scaled(rho.as_ref(), q) * &r;
            HermitianOperator::from_computed(core + &complement)
        })
        .collect();
    Ok(Povm { operators: ops })
}

/// Reference operator of the square-root measurement of a GU ensemble. The
/// average state commutes with S, so the SRM is itself covariant.
pub fn srm_reference(e: &GuEnsemble) -> Result<HermitianOperator> {
    let avg = crate::ensemble::average_state(e);
    let (r, p) = srm_parts(avg.as_ref())?;
    let n = e.dim();
    let core = &r * linalg::scaled(e.reference_state().as_ref(), e.prior()) * &r;
    let complement = linalg::scaled((linalg::identity(n) - &p).as_ref(), e.prior());
    Ok(HermitianOperator::from_computed(core + complement))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalityReport {
    /// max_i max(||(X - q_i ρ_i) Π_i||_F, ||Π_i (X - q_i ρ_i)||_F).
    pub slackness_residual: f64,
    /// min_i λ_min(X - q_i ρ_i).
    pub min_dual_slack: f64,
    pub completeness_residual: f64,
    pub min_povm_eigenvalue: f64,
    pub success_probability: f64,
    pub trace_x: f64,
    /// |Tr(X) - P_c|.
    pub gap: f64,
    pub rank_pi0: usize,
    pub rank_rho0: usize,
    /// rank(Π₀) ≤ rank(ρ₀); reported, not part of the verdict.
    pub rank_bound_holds: bool,
    pub tol: f64,
    pub optimal: bool,
    pub verdict: String,
}

/// Checks the optimality conditions of `povm` against the dual point `x`.
pub fn verify_optimality(e: &GuEnsemble, povm: &Povm, x: &HermitianOperator, tol: f64) -> Result<OptimalityReport> {
    let n = e.dim();
    if povm.len() != e.size() || povm.dim() != n || x.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: povm.dim() });
    }
    let q = e.prior();
    let mut slackness = 0.0f64;
    let mut min_slack = f64::INFINITY;
    let mut pc = 0.0;
    for (i, p) in povm.operators().iter().enumerate() {
        let rho = e.state(i);
        let z = x.matrix() - linalg::scaled(rho.matrix().as_ref(), q);
        let zp = &z * p.matrix();
        let pz = p.matrix() * &z;
        slackness = slackness.max(linalg::frobenius(zp.as_ref())).max(linalg::frobenius(pz.as_ref()));
        min_slack = min_slack.min(linalg::min_eigenvalue(linalg::hermitian_part(z.as_ref()).as_ref())?);
        pc += q * linalg::re_trace_product(rho.matrix().as_ref(), p.as_ref());
    }
    let completeness = povm.completeness_residual();
    let min_povm = povm.min_eigenvalue()?;
    let trace_x = x.trace();
    let gap = (trace_x - pc).abs();
    let rank_pi0 = povm.operators()[0].rank()?;
    let rank_rho0 = e.reference_state().rank()?;
    let optimal = slackness <= tol && min_slack >= -tol && completeness <= tol && min_povm >= -tol && gap <= tol;
    Ok(OptimalityReport {
        slackness_residual: slackness,
        min_dual_slack: min_slack,
        completeness_residual: completeness,
        min_povm_eigenvalue: min_povm,
        success_probability: pc,
        trace_x,
        gap,
        rank_pi0,
        rank_rho0,
        rank_bound_holds: rank_pi0 <= rank_rho0,
        tol,
        optimal,
        verdict: if optimal { "optimal" } else { "not optimal" }.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{build_ensemble, random_ensemble, rotation_ensemble, rotation_symmetry};
    use crate::sdp::{lift, solve_dp3, SolverOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn solve(e: &GuEnsemble) -> (EigenStructure, HermitianOperator) {
        let eig = eigenstructure(e.symmetry(), 1e-8).unwrap();
        let (xt, _) = solve_dp3(e, &eig, &SolverOptions::default()).unwrap();
        let x = lift(&xt, &eig).unwrap();
        (eig, x)
    }

    fn diag(vals: &[f64]) -> CMat {
        Mat::from_fn(vals.len(), vals.len(), |i, j| c64::new(if i == j { vals[i] } else { 0.0 }, 0.0))
    }

    #[test]
    fn pure_spin_half_reference() {
        for m in [2, 3, 5] {
            let e = rotation_ensemble(m, 1.0, 0.0).unwrap();
            let (eig, x) = solve(&e);
            let r = recover_reference_povm_with(&e, &eig, &x, &RecoveryOptions::default()).unwrap();
            let expect = diag(&[2.0 / m as f64, 0.0]);
            assert!(linalg::difference_norm(r.pi0.as_ref(), expect.as_ref()) < 1e-6, "M={m}");
            assert!((r.pi0.trace() - 2.0 / m as f64).abs() < 1e-7);
        }
    }

    #[test]
    fn boundary_reference_is_scaled_state() {
        let e = rotation_ensemble(4, 0.5, 0.5).unwrap();
        let (eig, x) = solve(&e);
        let r = recover_reference_povm_with(&e, &eig, &x, &RecoveryOptions::default()).unwrap();
        let expect = linalg::scaled(e.reference_state().as_ref(), 0.5);
        assert!(linalg::difference_norm(r.pi0.as_ref(), expect.as_ref()) < 1e-6);
    }

    #[test]
    fn identical_states_force_uniform_reference() {
        let e0 = rotation_ensemble(3, 0.8, 0.2).unwrap();
        let id = crate::operators::validate_symmetry(
            &crate::matrix::ComplexMatrix::new(linalg::identity(2)).unwrap(),
            3,
            &Tolerances::default(),
        )
        .unwrap();
        let e = build_ensemble(e0.reference_state().clone(), id, 3).unwrap();
        let (eig, x) = solve(&e);
        let r = recover_reference_povm_with(&e, &eig, &x, &RecoveryOptions::default()).unwrap();
        let expect = linalg::scaled(linalg::identity(2).as_ref(), 1.0 / 3.0);
        assert!(linalg::difference_norm(r.pi0.as_ref(), expect.as_ref()) < 1e-6);
    }

    #[test]
    fn expansion_and_completeness() {
        let s = rotation_symmetry(2).unwrap();
        let povm = expand_povm(&HermitianOperator::from_computed(diag(&[1.0, 0.0])), &s, 2).unwrap();
        assert!(linalg::difference_norm(povm.operators()[1].as_ref(), diag(&[0.0, 1.0]).as_ref()) < 1e-15);
        let s5 = rotation_symmetry(5).unwrap();
        let uniform = HermitianOperator::from_computed(diag(&[0.2, 0.2]));
        assert!(expand_povm(&uniform, &s5, 5).is_ok());
        let bad = HermitianOperator::from_computed(diag(&[0.5, 0.0]));
        assert!(matches!(expand_povm(&bad, &s5, 5), Err(Error::CompletenessViolated { .. })));
    }

    #[test]
    fn success_probability_examples() {
        let e = rotation_ensemble(2, 1.0, 0.0).unwrap();
        let povm = expand_povm(&HermitianOperator::from_computed(diag(&[1.0, 0.0])), e.symmetry(), 2).unwrap();
        assert!((success_probability(&e.states(), &e.priors(), &povm).unwrap() - 1.0).abs() < 1e-15);
        let e = rotation_ensemble(3, 0.8, 0.2).unwrap();
        let blind = expand_povm(&HermitianOperator::from_computed(diag(&[1.0 / 3.0, 1.0 / 3.0])), e.symmetry(), 3).unwrap();
        assert!((success_probability(&e.states(), &e.priors(), &blind).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn recovered_povm_attains_the_dual_value() {
        let e = rotation_ensemble(3, 0.8, 0.2).unwrap();
        let (eig, x) = solve(&e);
        let r = recover_reference_povm_with(&e, &eig, &x, &RecoveryOptions::default()).unwrap();
        let povm = expand_povm(&r.pi0, e.symmetry(), 3).unwrap();
        let pc = success_probability(&e.states(), &e.priors(), &povm).unwrap();
        assert!((pc - (1.0 - 0.42630)).abs() < 1e-5);
        assert!((pc - x.trace()).abs() < 2e-8);
        assert!((pc - reference_success_probability(&e, &r.pi0)).abs() < 1e-14);
        let report = verify_optimality(&e, &povm, &x, 1e-6).unwrap();
        assert!(report.optimal, "{report:?}");
    }

    #[test]
    fn srm_examples() {
        let e = rotation_ensemble(2, 1.0, 0.0).unwrap();
        let srm = srm_povm(&e.states(), &e.priors()).unwrap();
        assert!((success_probability(&e.states(), &e.priors(), &srm).unwrap() - 1.0).abs() < 1e-12);
        for m in [3, 4, 7] {
            let e = rotation_ensemble(m, 1.0, 0.0).unwrap();
            let srm = srm_povm(&e.states(), &e.priors()).unwrap();
            let pe = 1.0 - success_probability(&e.states(), &e.priors(), &srm).unwrap();
            assert!((pe - (1.0 - 2.0 / m as f64)).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = random_ensemble(4, 4, &mut rng).unwrap();
        let srm = srm_povm(&e.states(), &e.priors()).unwrap();
        assert!(srm.completeness_residual() < 1e-12);
        let pc_srm = success_probability(&e.states(), &e.priors(), &srm).unwrap();
        let (_, x) = solve(&e);
        assert!(pc_srm <= x.trace() + 1e-8);
        let covariant = expand_povm(&srm_reference(&e).unwrap(), e.symmetry(), 4).unwrap();
        let pc_cov = success_probability(&e.states(), &e.priors(), &covariant).unwrap();
        assert!((pc_cov - pc_srm).abs() < 1e-12);
    }

    #[test]
    fn blind_guessing_is_not_optimal() {
        let e = rotation_ensemble(3, 0.9, 0.1).unwrap();
        let (_, x) = solve(&e);
        let blind = expand_povm(&HermitianOperator::from_computed(diag(&[1.0 / 3.0, 1.0 / 3.0])), e.symmetry(), 3).unwrap();
        let report = verify_optimality(&e, &blind, &x, 1e-6).unwrap();
        assert!(!report.optimal);
        assert!(report.gap > 0.1);
    }

    #[test]
    fn coordinates_are_orthonormal() {
        let k = 3;
        let x: Vec<f64> = (0..9).map(|i| (i as f64 * 0.37).sin()).collect();
        let h = herm_from_coords(k, &x);
        let mut back = Vec::new();
        herm_coords(h.as_ref(), &mut back);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - linalg::frobenius(h.as_ref())).abs() < 1e-14);
    }

    #[test]
    fn cgls_matches_dense_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = crate::ensemble::random_unitary(5, &mut rng);
        let v = u.as_ref().submatrix(0, 0, 5, 3).to_owned();
        let bs = vec![v.as_ref().submatrix(0, 0, 2, 3).to_owned(), v.as_ref().submatrix(2, 0, 3, 3).to_owned()];
        let target = vec![linalg::scaled(linalg::identity(2).as_ref(), 0.25), linalg::scaled(linalg::identity(3).as_ref(), 0.25)];
        let a = dense_min_norm(&bs, &target, 3, 13).unwrap();
        let b = cgls(&bs, &target, 3);
        assert!(linalg::difference_norm(a.as_ref(), b.as_ref()) < 1e-9);
    }
}
