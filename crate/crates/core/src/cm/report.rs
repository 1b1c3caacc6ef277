use std::fmt;

use serde::{Deserialize, Serialize};

use super::{best_extension, verify_cm, CmSequence};
use crate::error::{Error, Result};
use crate::geometry::{support_value, Vector};
use crate::setmaps::SetValuedMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityClass {
    Monotone,
    WeaklyMonotone,
    CyclicMonotone,
    WeaklyCyclicMonotone,
    /// The support-function chain inequality, sufficient for weak cyclic
    /// monotonicity.
    SupportCondition,
}

impl fmt::Display for MonotonicityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Monotone => "monotone",
            Self::WeaklyMonotone => "weakly monotone",
            Self::CyclicMonotone => "cyclic monotone",
            Self::WeaklyCyclicMonotone => "weakly cyclic monotone",
            Self::SupportCondition => "support condition",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Holds on the samples; never a global certificate.
    Holds,
    Fails,
}

/// Evidence against a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `⟨x − y, v_x − v_y⟩ < −tol`.
    Pair {
        x: Vector,
        y: Vector,
        vx: Vector,
        vy: Vector,
    },
    /// No `v_y ∈ F(y)` answers `v_x`.
    Unanswered { x: Vector, y: Vector, vx: Vector },
    /// A graph sequence breaking the chain inequality at its final index.
    Chain { sequence: CmSequence },
    /// A CM sequence with no CM continuation at `x_next`.
    Stuck { sequence: CmSequence, x_next: Vector },
    /// A point sequence breaking the support inequality at its final index.
    Points { points: Vec<Vector> },
}

impl Witness {
    /// Re-evaluates the witness against `map`; `true` when the failure is
    /// reproduced.
    pub fn replay(&self, map: &SetValuedMap, tol: f64) -> Result<bool> {
        match self {
            Witness::Pair { x, y, vx, vy } => {
                let members = map.eval(x)?.contains(vx) && map.eval(y)?.contains(vy);
                Ok(members && (x - y).dot(&(vx - vy)) < -tol)
            }
            Witness::Unanswered { x, y, vx } => {
                if !map.eval(x)?.contains(vx) {
                    return Ok(false);
                }
                let dx = x - y;
                Ok(map.eval(y)?.iter().all(|vy| dx.dot(&(vx - vy)) < -tol))
            }
            Witness::Chain { sequence } => {
                if !on_graph(map, sequence)? {
                    return Ok(false);
                }
                let check = verify_cm(sequence, tol);
                Ok(check.first_violation == Some(sequence.len() - 1))
            }
            Witness::Stuck { sequence, x_next } => {
                if !on_graph(map, sequence)? || !verify_cm(sequence, tol).holds() {
                    return Ok(false);
                }
                let values = map.eval(x_next)?;
                Ok(best_extension(sequence, x_next, &values, tol)?.is_none())
            }
            Witness::Points { points } => Ok(support_slack(map, points)? < -tol),
        }
    }
}

fn on_graph(map: &SetValuedMap, seq: &CmSequence) -> Result<bool> {
    for p in seq.pairs() {
        if !map.eval(&p.x)?.contains(&p.v) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `δ*(x_m − x_0, F(x_m)) − Σ_{i=1}^{m} δ*(x_i − x_{i−1}, F(x_{i−1}))` for
/// the full point sequence.
pub(crate) fn support_slack(map: &SetValuedMap, points: &[Vector]) -> Result<f64> {
    let (first, last) = match points {
        [first, .., last] => (first, last),
        _ => {
            return Err(Error::Precondition(
                "support condition needs at least two points".into(),
            ))
        }
    };
    let lhs = support_value(&map.eval(last)?, &(last - first))?;
    let mut rhs = 0.0;
    for w in points.windows(2) {
        rhs += support_value(&map.eval(&w[0])?, &(&w[1] - &w[0]))?;
    }
    Ok(lhs - rhs)
}

/// Result of one classification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: MonotonicityClass,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub tol: f64,
    pub samples: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_length: Option<usize>,
}

impl ClassReport {
    pub(crate) fn new(
        class: MonotonicityClass,
        witness: Option<Witness>,
        tol: f64,
        samples: String,
        max_length: Option<usize>,
    ) -> Self {
        let verdict = if witness.is_some() {
            Verdict::Fails
        } else {
            Verdict::Holds
        };
        Self {
            class,
            verdict,
            witness,
            tol,
            samples,
            max_length,
        }
    }

    #[inline]
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl fmt::Display for ClassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
        };
        write!(f, "{}: {verdict} on {} (tol {:e})", self.class, self.samples, self.tol)?;
        if let Some(l) = self.max_length {
            write!(f, ", max length {l}")?;
        }
        Ok(())
    }
}
