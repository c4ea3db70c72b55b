//! Core data model for uncertain vector databases.
//!
//! An [`UncertainDatabase`] holds a set of uncertain objects. Each
//! [`UncertainObject`] is a small set of mutually exclusive alternative
//! [`VectorInstance`]s: at most one instance of an object exists in any
//! concrete outcome, and the instance probabilities of one object sum to at
//! most 1. A total strictly below 1 leaves residual probability that the
//! object is absent altogether (existential uncertainty). Distinct objects
//! are stochastically independent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack applied to probability upper bounds during validation.
///
/// Instance probabilities and per-object probability totals are allowed to
/// exceed their mathematical bound of 1 by this much, so that masses
/// assembled from rounded decimal fractions (for example twenty additions of
/// `0.05`) are not rejected for accumulated representation error.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// One alternative placement of an uncertain object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorInstance {
    /// Identifier of the instance, unique within its object.
    pub instance_id: u32,
    /// Coordinates; the length must equal the database dimensionality.
    pub position: Vec<f64>,
    /// Probability that the object exists at this position, in `(0, 1]`.
    pub probability: f64,
}

/// An uncertain object: mutually exclusive alternative instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainObject {
    /// Identifier of the object, unique within the database.
    pub object_id: i64,
    /// Alternative instances; at least one, probabilities summing to ≤ 1.
    pub instances: Vec<VectorInstance>,
}

impl UncertainObject {
    /// Total probability that the object exists at all.
    pub fn total_mass(&self) -> f64 {
        self.instances.iter().map(|inst| inst.probability).sum()
    }
}

/// A collection of independent uncertain objects over one vector space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainDatabase {
    dimensionality: usize,
    objects: Vec<UncertainObject>,
    total_instance_count: usize,
}

impl UncertainDatabase {
    /// Assembles a database; the instance count is derived from `objects`.
    ///
    /// No validation happens here — call [`validate_database`] to check the
    /// model invariants before handing the database to ranking code.
    pub fn new(dimensionality: usize, objects: Vec<UncertainObject>) -> Self {
        let total_instance_count = objects.iter().map(|o| o.instances.len()).sum();
        Self {
            dimensionality,
            objects,
            total_instance_count,
        }
    }

    /// Number of coordinates per instance position.
    pub fn dimensionality(&self) -> usize {
        self.dimensionality
    }

    /// The objects, in their stored order.
    pub fn objects(&self) -> &[UncertainObject] {
        &self.objects
    }

    /// Number of objects.
    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    /// Total number of instances across all objects.
    pub fn total_instance_count(&self) -> usize {
        self.total_instance_count
    }
}

/// A query position in the same space as the database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPoint(pub Vec<f64>);

impl QueryPoint {
    /// Number of coordinates.
    pub fn dimensionality(&self) -> usize {
        self.0.len()
    }
}

/// Error raised when two points of different dimensionality are compared.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dimension mismatch: left has {left} coordinates, right has {right}")]
pub struct DimensionMismatch {
    /// Coordinate count of the first point.
    pub left: usize,
    /// Coordinate count of the second point.
    pub right: usize,
}

/// Euclidean (L2) distance between two points.
///
/// This is the default similarity measure; ranking code only ever consumes
/// the total order induced by it, so any other metric can be substituted via
/// [`crate::browsing::build_browsing_with_metric`].
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64, DimensionMismatch> {
    if a.len() != b.len() {
        return Err(DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let sum_sq: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    Ok(sum_sq.sqrt())
}

/// One violation of the data-model invariants.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// The database declares zero dimensions.
    ZeroDimensionality,
    /// Two objects share the same identifier.
    DuplicateObjectId { object_id: i64 },
    /// An object has no instances.
    EmptyObject { object_id: i64 },
    /// An instance probability is zero, negative, or not finite.
    NonPositiveProbability {
        object_id: i64,
        instance_id: u32,
        probability: f64,
    },
    /// An instance probability exceeds 1 beyond [`PROBABILITY_SLACK`].
    ProbabilityAboveOne {
        object_id: i64,
        instance_id: u32,
        probability: f64,
    },
    /// An object's instance probabilities sum to more than 1 beyond
    /// [`PROBABILITY_SLACK`].
    ObjectMassAboveOne { object_id: i64, mass: f64 },
    /// An instance position has the wrong number of coordinates.
    DimensionMismatch {
        object_id: i64,
        instance_id: u32,
        expected: usize,
        found: usize,
    },
    /// An instance position contains a NaN or infinite coordinate.
    NonFiniteCoordinate { object_id: i64, instance_id: u32 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ZeroDimensionality => write!(f, "database dimensionality must be at least 1"),
            Self::DuplicateObjectId { object_id } => {
                write!(f, "object {object_id}: duplicate object id")
            }
            Self::EmptyObject { object_id } => {
                write!(f, "object {object_id}: has no instances")
            }
            Self::NonPositiveProbability {
                object_id,
                instance_id,
                probability,
            } => write!(
                f,
                "object {object_id} instance {instance_id}: probability {probability} is not in (0, 1]"
            ),
            Self::ProbabilityAboveOne {
                object_id,
                instance_id,
                probability,
            } => write!(
                f,
                "object {object_id} instance {instance_id}: probability {probability} exceeds 1"
            ),
            Self::ObjectMassAboveOne { object_id, mass } => write!(
                f,
                "object {object_id}: instance probabilities sum to {mass}, which exceeds 1"
            ),
            Self::DimensionMismatch {
                object_id,
                instance_id,
                expected,
                found,
            } => write!(
                f,
                "object {object_id} instance {instance_id}: expected {expected} coordinates, found {found}"
            ),
            Self::NonFiniteCoordinate {
                object_id,
                instance_id,
            } => write!(
                f,
                "object {object_id} instance {instance_id}: position contains a non-finite coordinate"
            ),
        }
    }
}

/// Outcome of [`validate_database`]: the full list of violations found.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Every violation found, in discovery order.
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// True when no violations were found.
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return write!(f, "valid");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every model invariant and reports all violations found.
///
/// Checked per database: dimensionality ≥ 1 and unique object ids. Checked
/// per object: at least one instance and a probability total of at most
/// `1 + ` [`PROBABILITY_SLACK`]. Checked per instance: a finite probability
/// in `(0, 1 + `[`PROBABILITY_SLACK`]`]` and a finite position of the
/// declared dimensionality. Zero-probability instances are rejected rather
/// than tolerated: they would otherwise occupy stream positions while
/// contributing nothing, and downstream accounting divides by instance
/// probabilities.
pub fn validate_database(db: &UncertainDatabase) -> ValidationReport {
    let mut report = ValidationReport::default();
    if db.dimensionality() == 0 {
        report.violations.push(Violation::ZeroDimensionality);
    }
    let mut seen_ids = std::collections::HashSet::new();
    for object in db.objects() {
        if !seen_ids.insert(object.object_id) {
            report.violations.push(Violation::DuplicateObjectId {
                object_id: object.object_id,
            });
        }
        if object.instances.is_empty() {
            report.violations.push(Violation::EmptyObject {
                object_id: object.object_id,
            });
        }
        for inst in &object.instances {
            if !(inst.probability > 0.0) || !inst.probability.is_finite() {
                report.violations.push(Violation::NonPositiveProbability {
                    object_id: object.object_id,
                    instance_id: inst.instance_id,
                    probability: inst.probability,
                });
            } else if inst.probability > 1.0 + PROBABILITY_SLACK {
                report.violations.push(Violation::ProbabilityAboveOne {
                    object_id: object.object_id,
                    instance_id: inst.instance_id,
                    probability: inst.probability,
                });
            }
            if inst.position.len() != db.dimensionality() {
                report.violations.push(Violation::DimensionMismatch {
                    object_id: object.object_id,
                    instance_id: inst.instance_id,
                    expected: db.dimensionality(),
                    found: inst.position.len(),
                });
            }
            if inst.position.iter().any(|c| !c.is_finite()) {
                report.violations.push(Violation::NonFiniteCoordinate {
                    object_id: object.object_id,
                    instance_id: inst.instance_id,
                });
            }
        }
        let mass = object.total_mass();
        if mass > 1.0 + PROBABILITY_SLACK {
            report.violations.push(Violation::ObjectMassAboveOne {
                object_id: object.object_id,
                mass,
            });
        }
    }
    report
}
