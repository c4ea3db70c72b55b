//! Probabilistic similarity ranking for uncertain vector databases.
//!
//! An uncertain database holds objects that are each a small set of
//! mutually exclusive weighted point alternatives, possibly summing to less
//! than 1 (the object may be absent altogether). Given a query point, this
//! crate computes, for every instance and every object, the full
//! distribution over ranking positions — the probability of placing 1st,
//! 2nd, …, `k`-th among all objects by distance — under standard
//! possible-worlds semantics with independence across objects.
//!
//! The centerpiece is a one-pass incremental engine
//! ([`engine::psr_rank`]) that processes instances in ascending distance
//! and spends `O(k)` per instance. Two independent reference
//! implementations validate it: a from-scratch quadratic recomputation
//! ([`baselines::ylks_rank`]) and an exhaustive possible-worlds enumeration
//! ([`baselines::possible_worlds_rank`]) for small inputs. On top of the
//! rank distributions, [`semantics`] derives definite rankings under four
//! query models, [`datagen`] produces seeded synthetic databases, and
//! [`io`] reads and writes the dataset and result file formats.
//!
//! ```
//! use psr_core::{GenParams, QueryPoint, generate, psr_rank};
//!
//! let db = generate(&GenParams { object_count: 50, ..GenParams::default() }).unwrap();
//! let out = psr_rank(&db, &QueryPoint(vec![5.0, 5.0, 5.0]), 10).unwrap();
//! let mass: f64 = out.objects.iter().map(|(_, row)| row.iter().sum::<f64>()).sum();
//! assert!(mass > 0.0);
//! ```

pub mod baselines;
pub mod browsing;
pub mod datagen;
pub mod dataset;
pub mod engine;
pub mod io;
pub mod semantics;

pub use baselines::{
    possible_worlds_rank, possible_worlds_rank_stream, ylks_rank, ylks_rank_stream, MAX_WORLDS,
    WorldEnumerationError,
};
pub use browsing::{build_browsing, compare_browsing_order, BrowsingStream, RankedInstance};
pub use datagen::{generate, GenError, GenParams};
pub use dataset::{
    distance, validate_database, DimensionMismatch, QueryPoint, UncertainDatabase,
    UncertainObject, ValidationReport, VectorInstance, Violation, PROBABILITY_SLACK,
};
pub use engine::{
    adjust_probs, dynamic_round, full_dp_recompute, matrix_max_abs_diff, objects_max_abs_diff,
    psr_rank, psr_rank_stream, ActiveObjectList, AolEntry, AolUpdate, DiffError, EngineError,
    InstanceRankMatrix, MatrixRow, ObjectRankDistribution, PRankVector, RankOutput, RankStats,
    ADJUST_STABILITY_THRESHOLD, DIVISOR_GUARD, UNDERFLOW_FLUSH,
};
pub use semantics::{
    expected_rank, global_top_k, pt_k, u_k_ranks, RankAssignment, RankTable, ScoredEntry,
    SemanticsError, SemanticsReport, TableLevel, TopKResult,
};
