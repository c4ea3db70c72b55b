//! Deterministic synthetic data: uncertain objects whose instances spread
//! uniformly inside per-object hyper-rectangles.
//!
//! Object centers are uniform in the cube `[0, S]^d`; each object's
//! instances are uniform in the axis-aligned hypercube of side `UD`
//! centered there, clamped back into the space. `UD` therefore controls how
//! widely objects overlap each other in distance order — the knob driving
//! the size of the working set during ranking. Instance probabilities are
//! uniform, `(1 - e) / m`, where `e` is the per-object existential
//! (absence) mass.
//!
//! Output is a pure function of [`GenParams`]: generation draws from a
//! counter-based seeded generator with one independent stream per object,
//! so the same parameters always produce the identical database, and
//! per-object generation could be parallelized without changing the
//! output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::dataset::{UncertainDatabase, UncertainObject, VectorInstance};

/// Parameters of one synthetic database.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Number of objects `N` (≥ 1).
    pub object_count: usize,
    /// Instances per object `m` (≥ 1).
    pub instances_per_object: usize,
    /// Dimensionality `d` (≥ 1).
    pub dims: usize,
    /// Side length `S` of the vector space `[0, S]^d` (> 0).
    pub space_side: f64,
    /// Degree of uncertainty `UD`: side length of each object's instance
    /// hyper-rectangle (≥ 0; may exceed `S`, in which case clamping makes
    /// instances nearly uniform over the whole space).
    pub uncertainty_degree: f64,
    /// Existential mass `e ∈ [0, 1)`: each object's instance probabilities
    /// sum to `1 - e`, leaving probability `e` that the object is absent.
    pub existential_mass: f64,
    /// Seed; the sole source of randomness.
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            object_count: 1000,
            instances_per_object: 20,
            dims: 3,
            space_side: 10.0,
            uncertainty_degree: 2.0,
            existential_mass: 0.0,
            seed: 42,
        }
    }
}

/// A parameter outside its documented domain.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid generator parameter {name}: {reason}")]
pub struct GenError {
    /// Offending field of [`GenParams`].
    pub name: &'static str,
    /// What was wrong with it.
    pub reason: String,
}

fn check(ok: bool, name: &'static str, reason: impl Into<String>) -> Result<(), GenError> {
    if ok {
        Ok(())
    } else {
        Err(GenError {
            name,
            reason: reason.into(),
        })
    }
}

impl GenParams {
    /// Validates every field against its documented domain.
    pub fn validate(&self) -> Result<(), GenError> {
        check(self.object_count >= 1, "object_count", "must be at least 1")?;
        check(
            self.instances_per_object >= 1,
            "instances_per_object",
            "must be at least 1",
        )?;
        check(self.dims >= 1, "dims", "must be at least 1")?;
        check(
            self.space_side.is_finite() && self.space_side > 0.0,
            "space_side",
            format!("{} is not a positive finite length", self.space_side),
        )?;
        check(
            self.uncertainty_degree.is_finite() && self.uncertainty_degree >= 0.0,
            "uncertainty_degree",
            format!("{} is not a non-negative finite length", self.uncertainty_degree),
        )?;
        check(
            self.existential_mass.is_finite()
                && (0.0..1.0).contains(&self.existential_mass),
            "existential_mass",
            format!("{} is outside [0, 1)", self.existential_mass),
        )?;
        Ok(())
    }
}

/// Generates the database described by `params`.
///
/// Object ids are `0..N`; instance ids are `0..m` within each object. Every
/// instance lies in the object's `UD`-box intersected with `[0, S]^d`, and
/// each object's total mass is `1 - e` up to representation error.
pub fn generate(params: &GenParams) -> Result<UncertainDatabase, GenError> {
    params.validate()?;
    let probability = (1.0 - params.existential_mass) / params.instances_per_object as f64;
    let objects = (0..params.object_count)
        .map(|index| generate_object(params, index, probability))
        .collect();
    Ok(UncertainDatabase::new(params.dims, objects))
}

fn generate_object(params: &GenParams, index: usize, probability: f64) -> UncertainObject {
    // One generator stream per object: object contents depend only on
    // (seed, object index), not on how many objects precede them.
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    rng.set_stream(index as u64);

    let side = params.space_side;
    let center: Vec<f64> = (0..params.dims).map(|_| rng.gen::<f64>() * side).collect();
    let half = params.uncertainty_degree / 2.0;
    let instances = (0..params.instances_per_object)
        .map(|instance_id| VectorInstance {
            instance_id: instance_id as u32,
            position: center
                .iter()
                .map(|&c| (c + (rng.gen::<f64>() - 0.5) * 2.0 * half).clamp(0.0, side))
                .collect(),
            probability,
        })
        .collect();
    UncertainObject {
        object_id: index as i64,
        instances,
    }
}
