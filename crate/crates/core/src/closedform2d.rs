//! Closed-form solution of the two-dimensional rotation family: ρ₀ =
//! [[α, β], [β, 1-α]] rotated through multiples of π/M.

use faer::{c64, Mat};
use serde::Serialize;

use crate::ensemble::{check_rotation_parameters, rotation_ensemble, GuEnsemble};
use crate::error::{Error, Result};
use crate::operators::{HermitianOperator, Tolerances};
use crate::sdp::{BlockDiagOperator, BlockSpec};

pub use crate::ensemble::rotation_symmetry;

/// Slack used to decide whether (α, β) lies on one of the solvable lines.
const REGIME_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationExampleParams {
    m: usize,
    alpha: f64,
    beta: f64,
}

impl RotationExampleParams {
    pub fn new(m: usize, alpha: f64, beta: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidOrder(m));
        }
        check_rotation_parameters(alpha, beta)?;
        Ok(Self { m, alpha, beta })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn ensemble(&self) -> Result<GuEnsemble> {
        rotation_ensemble(self.m, self.alpha, self.beta)
    }

    /// √((2α-1)² + (2β)²), the distance of ρ₀ from I/2 in Bloch units.
    fn radius(&self) -> f64 {
        (2.0 * self.alpha - 1.0).hypot(2.0 * self.beta)
    }
}

/// P_e = (M-1)/M - (1/M)·√((2α-1)² + (2β)²).
pub fn closed_form_pe(p: &RotationExampleParams) -> f64 {
    let m = p.m as f64;
    (m - 1.0) / m - p.radius() / m
}

/// The optimal dual variable x̃·I with x̃ = (1 + √((2α-1)² + (2β)²)) / (2M).
pub fn closed_form_xtilde(p: &RotationExampleParams) -> BlockDiagOperator {
    let x = (1.0 + p.radius()) / (2.0 * p.m as f64);
    let block = Mat::from_fn(1, 1, |_, _| c64::new(x, 0.0));
    let spec = BlockSpec::new(vec![1, 1]).expect("two unit blocks");
    BlockDiagOperator::new(spec, vec![block.clone(), block], &Tolerances::default()).expect("real diagonal blocks")
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClosedFormPovm {
    Reference(HermitianOperator),
    NoClosedForm,
}

/// Optimal Π₀ on the two solvable lines:
/// β = 0 gives (2/M)·diag(1, 0) for α ≥ 1/2 and (2/M)·diag(0, 1) for α < 1/2;
/// |β| = √(α(1-α)) (pure ρ₀) gives (2/M)·ρ₀.
pub fn closed_form_povm(p: &RotationExampleParams) -> ClosedFormPovm {
    let scale = 2.0 / p.m as f64;
    let diag = |a: f64, b: f64| {
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::new(a, 0.0),
            (1, 1) => c64::new(b, 0.0),
            _ => c64::new(0.0, 0.0),
        });
        HermitianOperator::from_computed(m)
    };
    if p.beta.abs() <= REGIME_TOL {
        return if p.alpha >= 0.5 {
            ClosedFormPovm::Reference(diag(scale, 0.0))
        } else {
            ClosedFormPovm::Reference(diag(0.0, scale))
        };
    }
    if (p.beta.abs() - (p.alpha * (1.0 - p.alpha)).sqrt()).abs() <= REGIME_TOL {
        let rho = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::new(scale * p.alpha, 0.0),
            (1, 1) => c64::new(scale * (1.0 - p.alpha), 0.0),
            _ => c64::new(scale * p.beta, 0.0),
        });
        return ClosedFormPovm::Reference(HermitianOperator::from_computed(rho));
    }
    ClosedFormPovm::NoClosedForm
}
