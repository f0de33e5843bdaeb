//! Validated quantum operators: Hermitian and density operators, the unitary
//! symmetry operator with its projective order, and the grouped eigenbasis of
//! the symmetry that drives the block reduction.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, EPS};
use crate::matrix::ComplexMatrix;

/// Numerical tolerances shared by validation and eigenstructure extraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm: f64,
    pub unitary: f64,
    pub psd: f64,
    pub trace: f64,
    /// Angular distance (radians) below which eigenvalues of S are merged.
    pub grouping: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { herm: 1e-10, unitary: 1e-8, psd: 1e-9, trace: 1e-9, grouping: 1e-8 }
    }
}

/// Relative threshold under which singular values count as zero for ranks.
pub const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(CMat);

impl HermitianOperator {
    /// Validates Hermiticity relative to the Frobenius norm and stores the
    /// symmetrized matrix (A + A†)/2.
    pub fn new(m: CMat, tol: &Tolerances) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if let Some((row, col)) = linalg::all_finite(m.as_ref()) {
            return Err(Error::NonFinite { row, col });
        }
        let scale = linalg::frobenius(m.as_ref());
        let dev = linalg::anti_hermitian_norm(m.as_ref());
        if dev > tol.herm * scale {
            let deviation = if scale > 0.0 { dev / scale } else { dev };
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(linalg::hermitian_part(m.as_ref())))
    }

    /// Symmetrizes without checking; for matrices Hermitian by construction.
    pub(crate) fn from_computed(m: CMat) -> Self {
        Self(linalg::hermitian_part(m.as_ref()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(self.as_ref()).re
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(self.as_ref())
    }

    pub fn rank(&self) -> Result<usize> {
        linalg::hermitian_rank(self.as_ref(), RANK_THRESHOLD)
    }

    pub fn to_complex_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::new(self.0.clone()).expect("validated operators are finite")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(HermitianOperator);

impl DensityOperator {
    pub fn op(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn matrix(&self) -> &CMat {
        self.0.matrix()
    }

    /// Unitary images of a validated state inherit its invariants.
    pub(crate) fn from_conjugation(m: CMat) -> Self {
        Self(HermitianOperator::from_computed(m))
    }

    pub fn rank(&self) -> Result<usize> {
        self.0.rank()
    }
}

/// Validates a density operator: Hermitian, PSD and unit trace.
pub fn validate_density(m: &ComplexMatrix, tol: &Tolerances) -> Result<DensityOperator> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let op = HermitianOperator::new(m.as_mat().clone(), tol)?;
    let min_eigenvalue = linalg::min_eigenvalue(op.as_ref())?;
    if min_eigenvalue < -tol.psd {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    let trace = op.trace();
    if (trace - 1.0).abs() > tol.trace {
        return Err(Error::TraceNotOne { trace });
    }
    Ok(DensityOperator(op))
}

/// Unitary S with S^M = c·I for a unit-modulus phase c.
#[derive(Clone, Debug)]
pub struct SymmetryOperator {
    op: CMat,
    order: usize,
    phase: c64,
    powers: Arc<OnceLock<Vec<CMat>>>,
}

impl PartialEq for SymmetryOperator {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.phase == other.phase && self.op == other.op
    }
}

impl SymmetryOperator {
    /// Trusted constructor for operators unitary of order M by construction
    /// (rotations, permutations).
    pub(crate) fn from_parts(op: CMat, order: usize, phase: c64) -> Self {
        Self { op, order, phase, powers: Arc::new(OnceLock::new()) }
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn projective_phase(&self) -> c64 {
        self.phase
    }

    pub fn matrix(&self) -> &CMat {
        &self.op
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.op.as_ref()
    }

    /// S^0, ..., S^{M-1}, computed once by repeated multiplication.
    pub fn powers(&self) -> &[CMat] {
        self.powers.get_or_init(|| {
            let mut out = Vec::with_capacity(self.order);
            let mut p = linalg::identity(self.dim());
            for _ in 0..self.order {
                let next = &p * &self.op;
                out.push(p);
                p = next;
            }
            out
        })
    }

    /// S^(i mod M).
    pub fn power(&self, i: usize) -> &CMat {
        &self.powers()[i % self.order]
    }

    pub fn to_complex_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::new(self.op.clone()).expect("validated operators are finite")
    }
}

pub fn validate_symmetry(m: &ComplexMatrix, order: usize, tol: &Tolerances) -> Result<SymmetryOperator> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    let s = m.as_ref();
    let n = s.nrows();
    let gram = s * s.adjoint();
    let deviation = linalg::distance_to_identity(gram.as_ref(), c64::new(1.0, 0.0));
    if deviation > tol.unitary {
        return Err(Error::NotUnitary { deviation });
    }
    let sm = linalg::matrix_power(s, order);
    let tr = linalg::trace(sm.as_ref()) / n as f64;
    if tr.norm() < 0.5 {
        let deviation = linalg::distance_to_identity(sm.as_ref(), c64::new(0.0, 0.0));
        return Err(Error::NotProjectiveOrder { deviation });
    }
    let phase = tr / tr.norm();
    let deviation = linalg::distance_to_identity(sm.as_ref(), phase);
    if deviation > tol.unitary {
        return Err(Error::NotProjectiveOrder { deviation });
    }
    Ok(SymmetryOperator::from_parts(m.as_mat().clone(), order, phase))
}

/// Eigenbasis of S with columns grouped by distinct eigenvalue.
#[derive(Clone, Debug)]
pub struct EigenStructure {
    basis: CMat,
    eigenvalues: Vec<c64>,
    multiplicities: Vec<usize>,
    offsets: Vec<usize>,
}

impl EigenStructure {
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn distinct_eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// Column offset of each group, plus a final entry equal to N.
    pub fn block_offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Λ: the distinct eigenvalues repeated with multiplicity.
    pub fn diagonal(&self) -> Vec<c64> {
        self.eigenvalues
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&l, &k)| std::iter::repeat_n(l, k))
            .collect()
    }

    /// ||S - U Λ U†||_F.
    pub fn reconstruction_error(&self, s: &SymmetryOperator) -> f64 {
        let lambda = self.diagonal();
        let ul = Mat::from_fn(self.dim(), self.dim(), |i, j| self.basis[(i, j)] * lambda[j]);
        let rec = &ul * self.basis.adjoint();
        linalg::difference_norm(rec.as_ref(), s.as_ref())
    }
}

fn principal_angle(z: c64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Groups eigenvalue angles (any order) into clusters on the circle. Returns
/// the sorted (angle, original index) list and the cluster boundaries.
fn group_angles(angles: &[f64], tol: f64) -> (Vec<(f64, usize)>, Vec<usize>) {
    let mut sorted: Vec<(f64, usize)> = angles
        .iter()
        .enumerate()
        .map(|(i, &a)| (if TAU - a < tol { a - TAU } else { a }, i))
        .collect();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut bounds = vec![0];
    for k in 1..sorted.len() {
        if sorted[k].0 - sorted[k - 1].0 >= tol {
            bounds.push(k);
        }
    }
    bounds.push(sorted.len());
    (sorted, bounds)
}

/// Full eigendecomposition of the unitary S with eigenvalues sorted by
/// principal angle in [0, 2π) and merged when closer than `grouping_tol`.
///
/// The eigenvalues come from a general (Schur-based) solver; the eigenvectors
/// of each group are taken as the lowest eigenvectors of the Hermitian
/// matrix (S - μI)†(S - μI), which yields an orthonormal basis of each
/// eigenspace even for highly degenerate S.
pub fn eigenstructure(s: &SymmetryOperator, grouping_tol: f64) -> Result<EigenStructure> {
    let n = s.dim();
    let raw = s
        .matrix()
        .eigenvalues()
        .map_err(|e| Error::DecompositionFailed(format!("{e:?}")))?;
    let angles: Vec<f64> = raw.iter().map(|&z| principal_angle(z)).collect();
    let (sorted, bounds) = group_angles(&angles, grouping_tol);

    let mut basis = Mat::<c64>::zeros(n, n);
    let mut eigenvalues = Vec::new();
    let mut multiplicities = Vec::new();
    let mut offsets = vec![0];
    for w in bounds.windows(2) {
        let members = &sorted[w[0]..w[1]];
        let k = members.len();
        let sum: c64 = members.iter().map(|&(a, _)| c64::new(a.cos(), a.sin())).sum();
        let mu = sum / sum.norm();
        let shifted = Mat::from_fn(n, n, |i, j| {
            s.matrix()[(i, j)] - if i == j { mu } else { c64::new(0.0, 0.0) }
        });
        let gram = shifted.adjoint() * &shifted;
        let (_, vecs) = linalg::eigh(gram.as_ref())?;
        let mut cols = vecs.as_ref().submatrix(0, 0, n, k).to_owned();
        linalg::orthonormalize_columns(&mut cols);
        let start = *offsets.last().unwrap();
        basis.as_mut().submatrix_mut(0, start, n, k).copy_from(&cols);
        eigenvalues.push(mu);
        multiplicities.push(k);
        offsets.push(start + k);
    }

    let eig = EigenStructure { basis, eigenvalues, multiplicities, offsets };
    let rec = eig.reconstruction_error(s);
    let rec_tol = (1e3 * EPS * n as f64).max(1e-12);
    if rec > rec_tol.max(10.0 * grouping_tol * (n as f64).sqrt()) {
        return Err(Error::DecompositionFailed(format!(
            "eigenbasis reconstruction error {rec:e} exceeds tolerance"
        )));
    }
    Ok(eig)
}

/// S^i A S^{-i}, with i taken modulo the order of S.
pub fn conjugate_power(s: &SymmetryOperator, i: usize, a: &HermitianOperator) -> Result<HermitianOperator> {
    Ok(HermitianOperator::from_computed(conjugate_matrix(s, i, a.as_ref())?))
}

pub(crate) fn conjugate_matrix(s: &SymmetryOperator, i: usize, a: MatRef<'_, c64>) -> Result<CMat> {
    if a.nrows() != s.dim() || a.ncols() != s.dim() {
        return Err(Error::DimensionMismatch { expected: s.dim(), found: a.nrows() });
    }
    if i.is_multiple_of(s.order()) {
        return Ok(a.to_owned());
    }
    let p = s.power(i);
    let pa = p * a;
    Ok(&pa * p.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation(theta: f64) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[vec![theta.cos(), -theta.sin()], vec![theta.sin(), theta.cos()]]).unwrap()
    }

    fn cyclic_shift(n: usize) -> ComplexMatrix {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == (j + 1) % n { 1.0 } else { 0.0 }).collect())
            .collect();
        ComplexMatrix::from_real_rows(&rows).unwrap()
    }

    #[test]
    fn maximally_mixed_state_is_valid() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let rho = validate_density(&m, &Tolerances::default()).unwrap();
        let ev = rho.op().eigenvalues().unwrap();
        assert!((ev[0] - 0.5).abs() < 1e-15 && (ev[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn qubit_state_with_coherence_is_valid() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.8, 0.2], vec![0.2, 0.2]]).unwrap();
        let rho = validate_density(&m, &Tolerances::default()).unwrap();
        let ev = rho.op().eigenvalues().unwrap();
        // characteristic polynomial x^2 - x + 0.12
        let disc = 0.13f64.sqrt();
        assert!((ev[0] - (0.5 - disc)).abs() < 1e-14);
        assert!((ev[1] - (0.5 + disc)).abs() < 1e-14);
    }

    #[test]
    fn negative_entry_is_not_psd() {
        let m = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, -0.01]]).unwrap();
        match validate_density(&m, &Tolerances::default()) {
            Err(Error::NotPsd { min_eigenvalue }) => assert!((min_eigenvalue + 0.01).abs() < 1e-15),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn density_error_paths() {
        let tol = Tolerances::default();
        let not_herm = ComplexMatrix::from_real_rows(&[vec![0.5, 0.1], vec![0.0, 0.5]]).unwrap();
        assert!(matches!(validate_density(&not_herm, &tol), Err(Error::NotHermitian { .. })));
        let bad_trace = ComplexMatrix::from_real_rows(&[vec![0.5, 0.0], vec![0.0, 0.6]]).unwrap();
        assert!(matches!(validate_density(&bad_trace, &tol), Err(Error::TraceNotOne { .. })));
        let rect = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(validate_density(&rect, &tol), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn input_is_symmetrized() {
        let m = ComplexMatrix::from_rows(&[
            vec![c64::new(0.5, 0.0), c64::new(0.1, 1e-13)],
            vec![c64::new(0.1, 0.0), c64::new(0.5, 0.0)],
        ])
        .unwrap();
        let rho = validate_density(&m, &Tolerances::default()).unwrap();
        let a = rho.as_ref();
        assert_eq!(a[(0, 1)], a[(1, 0)].conj());
    }

    #[test]
    fn rotation_by_pi_over_m_has_phase_minus_one() {
        let s = validate_symmetry(&rotation(PI / 4.0), 4, &Tolerances::default()).unwrap();
        assert!((s.projective_phase() - c64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_has_order_one() {
        let id = ComplexMatrix::new(linalg::identity(3)).unwrap();
        let s = validate_symmetry(&id, 1, &Tolerances::default()).unwrap();
        assert_eq!(s.projective_phase(), c64::new(1.0, 0.0));
    }

    #[test]
    fn shear_is_not_unitary() {
        let shear = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(validate_symmetry(&shear, 2, &Tolerances::default()), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn wrong_order_is_rejected() {
        // rotation by 2π/5 has S^3 far from any multiple of I
        let r = rotation(2.0 * PI / 5.0);
        assert!(matches!(
            validate_symmetry(&r, 3, &Tolerances::default()),
            Err(Error::NotProjectiveOrder { .. })
        ));
    }

    #[test]
    fn rotation_eigenstructure_is_nondegenerate() {
        for m in 2..9 {
            let s = validate_symmetry(&rotation(PI / m as f64), m, &Tolerances::default()).unwrap();
            let eig = eigenstructure(&s, 1e-8).unwrap();
            assert_eq!(eig.multiplicities(), &[1, 1]);
            let lam = eig.distinct_eigenvalues();
            let th = PI / m as f64;
            assert!((lam[0] - c64::new(th.cos(), th.sin())).norm() < 1e-12);
            assert!((lam[1] - c64::new(th.cos(), -th.sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_eigenstructure_is_one_block() {
        let id = ComplexMatrix::new(linalg::identity(5)).unwrap();
        let s = validate_symmetry(&id, 1, &Tolerances::default()).unwrap();
        let eig = eigenstructure(&s, 1e-8).unwrap();
        assert_eq!(eig.multiplicities(), &[5]);
        assert!((eig.distinct_eigenvalues()[0] - c64::new(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(eig.block_offsets(), &[0, 5]);
    }

    #[test]
    fn cyclic_shift_is_diagonalized_by_fourier_basis() {
        let s = validate_symmetry(&cyclic_shift(4), 4, &Tolerances::default()).unwrap();
        let eig = eigenstructure(&s, 1e-8).unwrap();
        assert_eq!(eig.multiplicities(), &[1, 1, 1, 1]);
        let expected = [c64::new(1.0, 0.0), c64::new(0.0, 1.0), c64::new(-1.0, 0.0), c64::new(0.0, -1.0)];
        for (got, want) in eig.distinct_eigenvalues().iter().zip(expected) {
            assert!((got - want).norm() < 1e-12, "{got} vs {want}");
        }
        let u = eig.basis();
        let su = s.matrix() * u;
        let lam = eig.diagonal();
        let ul = Mat::from_fn(4, 4, |i, j| u[(i, j)] * lam[j]);
        assert!(linalg::difference_norm(su.as_ref(), ul.as_ref()) < 1e-12);
    }

    #[test]
    fn grouping_wraps_around_zero_angle() {
        let (sorted, bounds) = group_angles(&[TAU - 1e-12, 1e-12, PI], 1e-8);
        assert_eq!(bounds, vec![0, 2, 3]);
        assert_eq!(sorted[2].1, 2);
    }

    #[test]
    fn conjugation_by_quarter_turn_swaps_axes() {
        let s = validate_symmetry(&rotation(PI / 2.0), 2, &Tolerances::default()).unwrap();
        let a = HermitianOperator::new(
            ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap().into_mat(),
            &Tolerances::default(),
        )
        .unwrap();
        let b = conjugate_power(&s, 1, &a).unwrap();
        let want = ComplexMatrix::from_real_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(linalg::difference_norm(b.as_ref(), want.as_ref()) < 1e-15);
        let same = conjugate_power(&s, 0, &a).unwrap();
        assert_eq!(same, a);
    }

    #[test]
    fn conjugation_checks_dimensions() {
        let s = validate_symmetry(&rotation(PI / 2.0), 2, &Tolerances::default()).unwrap();
        let a = HermitianOperator::new(linalg::identity(3), &Tolerances::default()).unwrap();
        assert!(matches!(conjugate_power(&s, 1, &a), Err(Error::DimensionMismatch { .. })));
    }
}
