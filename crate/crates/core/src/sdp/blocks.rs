use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::operators::{HermitianOperator, Tolerances};

/// Block sizes N_0, ..., N_{k-1} of a block-diagonal Hermitian operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    sizes: Vec<usize>,
}

impl BlockSpec {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidInput(format!("block sizes must be positive, got {sizes:?}")));
        }
        Ok(Self { sizes })
    }

    /// A single full block of size N.
    pub fn full(n: usize) -> Self {
        Self { sizes: vec![n] }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.sizes.len() + 1);
        let mut acc = 0;
        out.push(0);
        for &s in &self.sizes {
            acc += s;
            out.push(acc);
        }
        out
    }

    /// Number of real parameters Σ N_j².
    pub fn param_len(&self) -> usize {
        self.sizes.iter().map(|s| s * s).sum()
    }
}

/// One real coordinate of a block-diagonal Hermitian matrix, in global
/// row/column indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

/// Coordinate layout: per block, the N_j diagonal entries followed by
/// (Re, Im) of each strictly upper entry in row-major order.
pub(crate) fn slots(spec: &BlockSpec) -> Vec<Slot> {
    let mut out = Vec::with_capacity(spec.param_len());
    let offsets = spec.offsets();
    for (j, &n) in spec.sizes().iter().enumerate() {
        let o = offsets[j];
        out.extend((0..n).map(|p| Slot::Diag(o + p)));
        for p in 0..n {
            for q in p + 1..n {
                out.push(Slot::Re(o + p, o + q));
                out.push(Slot::Im(o + p, o + q));
            }
        }
    }
    out
}

/// Block-diagonal Hermitian operator; off-block entries are implicit zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagOperator {
    spec: BlockSpec,
    blocks: Vec<CMat>,
}

impl BlockDiagOperator {
    pub fn new(spec: BlockSpec, blocks: Vec<CMat>, tol: &Tolerances) -> Result<Self> {
        if blocks.len() != spec.sizes().len() {
            return Err(Error::DimensionMismatch { expected: spec.sizes().len(), found: blocks.len() });
        }
        let mut clean = Vec::with_capacity(blocks.len());
        for (b, &n) in blocks.into_iter().zip(spec.sizes()) {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.nrows() });
            }
            clean.push(HermitianOperator::new(b, tol)?.into_matrix());
        }
        Ok(Self { spec, blocks: clean })
    }

    pub fn identity(spec: BlockSpec) -> Self {
        let blocks = spec.sizes().iter().map(|&n| linalg::identity(n)).collect();
        Self { spec, blocks }
    }

    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| linalg::trace(b.as_ref()).re).sum()
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.spec.dim();
        let mut out = Mat::<c64>::zeros(n, n);
        for (b, o) in self.blocks.iter().zip(self.spec.offsets()) {
            let k = b.nrows();
            out.as_mut().submatrix_mut(o, o, k, k).copy_from(b);
        }
        out
    }

    pub fn from_params(spec: &BlockSpec, x: &[f64]) -> Self {
        let dense = Layout::new(spec).embed(x);
        Self::from_dense_blocks(spec, dense.as_ref())
    }

    /// Diagonal blocks of a dense matrix; off-block entries are discarded.
    pub fn from_dense_blocks(spec: &BlockSpec, a: MatRef<'_, c64>) -> Self {
        let blocks = spec
            .sizes()
            .iter()
            .zip(spec.offsets())
            .map(|(&k, o)| linalg::hermitian_part(a.submatrix(o, o, k, k)))
            .collect();
        Self { spec: spec.clone(), blocks }
    }

    pub fn to_params(&self) -> Vec<f64> {
        Layout::new(&self.spec).primal(self.to_dense().as_ref())
    }
}

/// Cached coordinate layout of a block specification.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub spec: BlockSpec,
    pub slots: Vec<Slot>,
}

impl Layout {
    pub fn new(spec: &BlockSpec) -> Self {
        Self { spec: spec.clone(), slots: slots(spec) }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    /// Dense N×N matrix from a parameter vector.
    pub fn embed(&self, x: &[f64]) -> CMat {
        let n = self.spec.dim();
        let mut out = Mat::<c64>::zeros(n, n);
        for (slot, &v) in self.slots.iter().zip(x) {
            match *slot {
                Slot::Diag(p) => out[(p, p)] = c64::new(v, 0.0),
                Slot::Re(p, q) => {
                    out[(p, q)].re = v;
                    out[(q, p)].re = v;
                }
                Slot::Im(p, q) => {
                    out[(p, q)].im = v;
                    out[(q, p)].im = -v;
                }
            }
        }
        out
    }

    /// Coordinates of the block part of `a`.
    pub fn primal(&self, a: MatRef<'_, c64>) -> Vec<f64> {
        self.slots
            .iter()
            .map(|slot| match *slot {
                Slot::Diag(p) => a[(p, p)].re,
                Slot::Re(p, q) => 0.5 * (a[(p, q)].re + a[(q, p)].re),
                Slot::Im(p, q) => 0.5 * (a[(p, q)].im - a[(q, p)].im),
            })
            .collect()
    }

    /// Dual coordinates g_a = Re Tr(E_a A) for the basis E_a of the layout,
    /// so that g·x = Re Tr(A X) for block-diagonal X.
    pub fn dual(&self, a: MatRef<'_, c64>) -> Vec<f64> {
        self.slots
            .iter()
            .map(|slot| match *slot {
                Slot::Diag(p) => a[(p, p)].re,
                Slot::Re(p, q) => a[(p, q)].re + a[(q, p)].re,
                Slot::Im(p, q) => a[(p, q)].im - a[(q, p)].im,
            })
            .collect()
    }

    /// Inverse of `dual` on block-diagonal Hermitian matrices.
    pub fn from_dual(&self, g: &[f64]) -> CMat {
        let n = self.spec.dim();
        let mut out = Mat::<c64>::zeros(n, n);
        for (slot, &v) in self.slots.iter().zip(g) {
            match *slot {
                Slot::Diag(p) => out[(p, p)] = c64::new(v, 0.0),
                Slot::Re(p, q) => {
                    out[(p, q)].re = 0.5 * v;
                    out[(q, p)].re = 0.5 * v;
                }
                Slot::Im(p, q) => {
                    out[(p, q)].im = 0.5 * v;
                    out[(q, p)].im = -0.5 * v;
                }
            }
        }
        out
    }
}
