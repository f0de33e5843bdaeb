use serde::{Deserialize, Serialize};

use super::blocks::BlockSpec;
use crate::error::{Error, Result};

/// Formulations of the minimum-error problem for an M-state ensemble on C^N.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    /// Primal over all M measurement operators.
    PP1,
    /// Primal over the reference measurement operator only.
    PP2,
    /// Dual with one constraint per state.
    DP1,
    /// Dual restricted to the commutant of S.
    DP2,
    /// Dual in the eigenbasis of S, block-diagonal variable.
    DP3,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [Self::PP1, Self::PP2, Self::DP1, Self::DP2, Self::DP3];

    pub fn name(self) -> &'static str {
        match self {
            Self::PP1 => "PP1",
            Self::PP2 => "PP2",
            Self::DP1 => "DP1",
            Self::DP2 => "DP2",
            Self::DP3 => "DP3",
        }
    }
}

/// Real decision variables, equality constraints and inequality constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableCount {
    pub d: usize,
    #[serde(rename = "Ce")]
    pub ce: usize,
    #[serde(rename = "Ci")]
    pub ci: usize,
}

pub fn count_variables(kind: ProblemKind, n: usize, m: usize, spec: Option<&BlockSpec>) -> Result<VariableCount> {
    let (d, ce, ci) = match kind {
        ProblemKind::PP1 => (m * n * n, 1, m),
        ProblemKind::PP2 => (n * n, 1, 1),
        ProblemKind::DP1 => (n * n, 0, m),
        ProblemKind::DP2 => (n * n, 0, 2),
        ProblemKind::DP3 => (spec.ok_or(Error::MissingBlockSpec)?.param_len(), 0, 1),
    };
    Ok(VariableCount { d, ce, ci })
}
