//! Dense complex matrices and their JSON wire format.
//!
//! A matrix serializes as `{"rows": R, "cols": C, "data": [[re, im], ...]}`
//! with `data` in row-major order. Non-finite entries are rejected on both
//! construction and deserialization.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, CMat};

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(CMat);

impl ComplexMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Malformed("empty matrix".into()));
        }
        if let Some((row, col)) = all_finite(m.as_ref()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self(m))
    }

    /// Build from row-major rows of complex entries.
    pub fn from_rows(rows: &[Vec<c64>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::Malformed("ragged rows".into()));
        }
        Self::new(Mat::from_fn(r, cols, |i, j| rows[i][j]))
    }

    /// Build from row-major rows of real entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<c64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| c64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }
}

impl From<ComplexMatrix> for CMat {
    fn from(m: ComplexMatrix) -> Self {
        m.0
    }
}

/// Serialize any faer matrix in the wire format.
pub fn write_matrix<S: Serializer>(m: MatRef<'_, c64>, serializer: S) -> std::result::Result<S::Ok, S::Error> {
    let data: Vec<[f64; 2]> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
        .collect();
    WireMatrix { rows: m.nrows(), cols: m.ncols(), data }.serialize(serializer)
}

#[derive(Serialize, Deserialize)]
struct WireMatrix {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        write_matrix(self.0.as_ref(), serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = WireMatrix::deserialize(deserializer)?;
        if wire.rows == 0 || wire.cols == 0 {
            return Err(D::Error::custom("matrix dimensions must be positive"));
        }
        if wire.data.len() != wire.rows * wire.cols {
            return Err(D::Error::custom(format!(
                "expected {} entries for a {}x{} matrix, found {}",
                wire.rows * wire.cols,
                wire.rows,
                wire.cols,
                wire.data.len()
            )));
        }
        let m = Mat::from_fn(wire.rows, wire.cols, |i, j| {
            let [re, im] = wire.data[i * wire.cols + j];
            c64::new(re, im)
        });
        ComplexMatrix::new(m).map_err(D::Error::custom)
    }
}

/// Newtype so that borrowed faer matrices can be embedded in serde structs.
pub struct MatrixView<'a>(pub MatRef<'a, c64>);

impl Serialize for MatrixView<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        write_matrix(self.0, serializer)
    }
}
