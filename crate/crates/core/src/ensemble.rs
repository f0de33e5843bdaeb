//! Geometrically uniform ensembles ρ_i = S^i ρ₀ S^{-i} with uniform priors.

use std::borrow::Cow;
use std::f64::consts::PI;

use faer::{c64, Mat};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::matrix::ComplexMatrix;
use crate::operators::{
    conjugate_matrix, validate_density, validate_symmetry, DensityOperator, SymmetryOperator, Tolerances,
};

/// Largest M·N² for which states are stored eagerly.
pub const EAGER_LIMIT: usize = 1 << 26;

pub const DEFAULT_DIMENSION_CAP: usize = 2048;

#[derive(Clone, Debug)]
pub struct GuEnsemble {
    rho0: DensityOperator,
    symmetry: SymmetryOperator,
    size: usize,
    states: Option<Vec<DensityOperator>>,
    warnings: Vec<String>,
}

impl GuEnsemble {
    pub fn reference_state(&self) -> &DensityOperator {
        &self.rho0
    }

    pub fn symmetry(&self) -> &SymmetryOperator {
        &self.symmetry
    }

    /// Number of states M.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.rho0.dim()
    }

    pub fn prior(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn priors(&self) -> Vec<f64> {
        vec![self.prior(); self.size]
    }

    pub fn is_eager(&self) -> bool {
        self.states.is_some()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// ρ_i, borrowed when materialized and computed from S-powers otherwise.
    pub fn state(&self, i: usize) -> Cow<'_, DensityOperator> {
        match &self.states {
            Some(states) => Cow::Borrowed(&states[i]),
            None => Cow::Owned(self.conjugated_state(i)),
        }
    }

    pub fn states(&self) -> Vec<DensityOperator> {
        (0..self.size).map(|i| self.state(i).into_owned()).collect()
    }

    fn conjugated_state(&self, i: usize) -> DensityOperator {
        let m = conjugate_matrix(&self.symmetry, i, self.rho0.as_ref()).expect("dimensions checked at construction");
        DensityOperator::from_conjugation(m)
    }
}

pub fn build_ensemble(rho0: DensityOperator, symmetry: SymmetryOperator, size: usize) -> Result<GuEnsemble> {
    if rho0.dim() != symmetry.dim() {
        return Err(Error::DimensionMismatch { expected: symmetry.dim(), found: rho0.dim() });
    }
    if symmetry.order() != size {
        return Err(Error::OrderMismatch { symmetry: symmetry.order(), ensemble: size });
    }
    let n = rho0.dim();
    let mut e = GuEnsemble { rho0, symmetry, size, states: None, warnings: Vec::new() };
    if size.saturating_mul(n * n) <= EAGER_LIMIT {
        e.states = Some((0..size).map(|i| e.conjugated_state(i)).collect());
    }
    Ok(e)
}

/// 2×2 counterclockwise rotation through π/M; S^M = -I.
pub fn rotation_symmetry(m: usize) -> Result<SymmetryOperator> {
    if m == 0 {
        return Err(Error::InvalidOrder(m));
    }
    let th = PI / m as f64;
    let (s, co) = th.sin_cos();
    let op = Mat::from_fn(2, 2, |i, j| {
        let v = match (i, j) {
            (0, 0) | (1, 1) => co,
            (0, 1) => -s,
            _ => s,
        };
        c64::new(v, 0.0)
    });
    Ok(SymmetryOperator::from_parts(op, m, c64::new(-1.0, 0.0)))
}

/// Checks 0 ≤ α ≤ 1 and |β| ≤ √(α(1-α)).
pub fn check_rotation_parameters(alpha: f64, beta: f64) -> Result<()> {
    if !alpha.is_finite() || !beta.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InfeasibleParameters(format!("alpha = {alpha} must lie in [0, 1]")));
    }
    let bound = (alpha * (1.0 - alpha)).sqrt();
    if beta.abs() > bound + 1e-12 {
        return Err(Error::InfeasibleParameters(format!(
            "|beta| = {} exceeds sqrt(alpha(1-alpha)) = {bound}",
            beta.abs()
        )));
    }
    Ok(())
}

/// The two-dimensional rotation family with ρ₀ = [[α, β], [β, 1-α]].
pub fn rotation_ensemble(m: usize, alpha: f64, beta: f64) -> Result<GuEnsemble> {
    if m == 0 {
        return Err(Error::InvalidOrder(m));
    }
    check_rotation_parameters(alpha, beta)?;
    let rho = ComplexMatrix::from_real_rows(&[vec![alpha, beta], vec![beta, 1.0 - alpha]])?;
    let rho0 = validate_density(&rho, &Tolerances::default())?;
    build_ensemble(rho0, rotation_symmetry(m)?, m)
}

/// Pulse-position words on (C^n)^{⊗M}: ρ₀ = |w₀⟩⟨w₀| with the pulse in slot 0
/// and S the cyclic shift of tensor slots, so that ρ_i has the pulse in slot i.
pub fn ppm_ensemble(n: usize, m: usize, pulse: &[c64], idle: &[c64], dimension_cap: usize) -> Result<GuEnsemble> {
    if n < 2 || m < 2 {
        return Err(Error::InvalidInput(format!("ppm requires n >= 2 and M >= 2, got n = {n}, M = {m}")));
    }
    if pulse.len() != n || idle.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pulse.len().min(idle.len()) });
    }
    let dim = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(n));
    let dim = match dim {
        Some(d) if d <= dimension_cap => d,
        Some(d) => return Err(Error::DimensionCapExceeded { dim: d, cap: dimension_cap }),
        None => return Err(Error::DimensionCapExceeded { dim: usize::MAX, cap: dimension_cap }),
    };
    for (name, v) in [("pulse", pulse), ("idle", idle)] {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 || v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} vector must have unit norm, found {norm}")));
        }
    }

    // slot 0 is the most significant digit of the basis index
    let digits = |mut idx: usize| {
        let mut d = vec![0usize; m];
        for k in (0..m).rev() {
            d[k] = idx % n;
            idx /= n;
        }
        d
    };
    let word: Vec<c64> = (0..dim)
        .map(|idx| {
            digits(idx)
                .iter()
                .enumerate()
                .map(|(slot, &a)| if slot == 0 { pulse[a] } else { idle[a] })
                .product()
        })
        .collect();
    let rho = Mat::from_fn(dim, dim, |i, j| word[i] * word[j].conj());

    // S|a_0 ... a_{M-1}> = |a_{M-1} a_0 ... a_{M-2}>
    let mut shift = Mat::<c64>::zeros(dim, dim);
    for idx in 0..dim {
        let d = digits(idx);
        let target = (0..m).fold(0usize, |acc, k| acc * n + d[(k + m - 1) % m]);
        shift[(target, idx)] = c64::new(1.0, 0.0);
    }

    let rho0 = DensityOperator::from_conjugation(rho);
    let s = SymmetryOperator::from_parts(shift, m, c64::new(1.0, 0.0));
    let mut e = build_ensemble(rho0, s, m)?;
    let overlap: c64 = pulse.iter().zip(idle).map(|(p, q)| p.conj() * q).sum();
    if overlap.norm() > 1.0 - 1e-12 {
        e.warnings.push("DegenerateVectors: pulse is parallel to idle; all states coincide".into());
    }
    Ok(e)
}

/// Unit vector e_k in C^n.
pub fn basis_vector(n: usize, k: usize) -> Vec<c64> {
    (0..n).map(|i| c64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect()
}

/// (1/M) Σ ρ_i.
pub fn average_state(e: &GuEnsemble) -> DensityOperator {
    let n = e.dim();
    let mut acc = Mat::<c64>::zeros(n, n);
    for i in 0..e.size() {
        acc += e.state(i).matrix().as_ref();
    }
    DensityOperator::from_conjugation(linalg::scaled(acc.as_ref(), e.prior()))
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im)
    })
}

/// Haar-distributed unitary from the QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    // fix column phases so the distribution is Haar
    Mat::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c64::new(1.0, 0.0) };
        q[(i, j)] * ph
    })
}

/// Random density operator G G† / Tr(G G†) with G of shape N×rank.
pub fn random_density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> DensityOperator {
    let g = gaussian_matrix(n, rank.max(1), rng);
    let gg = &g * g.adjoint();
    let tr = linalg::trace(gg.as_ref()).re;
    DensityOperator::from_conjugation(linalg::scaled(gg.as_ref(), 1.0 / tr))
}

/// Random cyclic symmetry: S = Q diag(e^{iφ} ω^{k_j}) Q† with Haar Q, random
/// exponents k_j and a random global phase, so that S^M = e^{iMφ} I.
pub fn random_symmetry<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<SymmetryOperator> {
    if m == 0 {
        return Err(Error::InvalidOrder(m));
    }
    let q = random_unitary(n, rng);
    let phi: f64 = rng.random_range(0.0..(2.0 * PI / m as f64));
    let lam: Vec<c64> = (0..n)
        .map(|_| {
            let k = rng.random_range(0..m) as f64;
            let a = phi + 2.0 * PI * k / m as f64;
            c64::new(a.cos(), a.sin())
        })
        .collect();
    let ql = Mat::from_fn(n, n, |i, j| q[(i, j)] * lam[j]);
    let s = &ql * q.adjoint();
    validate_symmetry(&ComplexMatrix::new(s)?, m, &Tolerances::default())
}

/// Random full-rank mixed GU ensemble of dimension N and size M.
pub fn random_ensemble<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<GuEnsemble> {
    let s = random_symmetry(n, m, rng)?;
    let rho0 = random_density(n, n, rng);
    build_ensemble(rho0, s, m)
}

/// Ensemble input document.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EnsembleDoc {
    Generated(GeneratorDoc),
    Explicit {
        #[serde(rename = "M")]
        m: usize,
        rho0: ComplexMatrix,
        #[serde(rename = "S")]
        s: ComplexMatrix,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "generator", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorDoc {
    Rotation {
        #[serde(rename = "M")]
        m: usize,
        alpha: f64,
        beta: f64,
    },
    Ppm {
        n: usize,
        #[serde(rename = "M")]
        m: usize,
        pulse: Vec<[f64; 2]>,
        idle: Vec<[f64; 2]>,
    },
}

fn to_vector(v: &[[f64; 2]]) -> Vec<c64> {
    v.iter().map(|&[re, im]| c64::new(re, im)).collect()
}

impl EnsembleDoc {
    pub fn build(&self, dimension_cap: usize) -> Result<GuEnsemble> {
        match self {
            EnsembleDoc::Generated(GeneratorDoc::Rotation { m, alpha, beta }) => rotation_ensemble(*m, *alpha, *beta),
            EnsembleDoc::Generated(GeneratorDoc::Ppm { n, m, pulse, idle }) => {
                ppm_ensemble(*n, *m, &to_vector(pulse), &to_vector(idle), dimension_cap)
            }
            EnsembleDoc::Explicit { m, rho0, s } => {
                if rho0.rows() > dimension_cap {
                    return Err(Error::DimensionCapExceeded { dim: rho0.rows(), cap: dimension_cap });
                }
                let tol = Tolerances::default();
                let rho0 = validate_density(rho0, &tol)?;
                let s = validate_symmetry(s, *m, &tol)?;
                build_ensemble(rho0, s, *m)
            }
        }
    }

    /// Explicit document for an already-built ensemble.
    pub fn explicit(e: &GuEnsemble) -> Self {
        EnsembleDoc::Explicit {
            m: e.size(),
            rho0: e.reference_state().op().to_complex_matrix(),
            s: e.symmetry().to_complex_matrix(),
        }
    }
}
