//! Reference implementations used to validate the incremental engine.
//!
//! Two independent paths compute the same rank probabilities as
//! [`crate::engine::psr_rank`]:
//!
//! * [`ylks_rank`] walks the stream in the same order but rebuilds every
//!   instance's vector from scratch out of the seen-mass table
//!   ([`full_dp_recompute`]), never reusing the previous vector. It shares
//!   the fold operation with the engine but none of the carry/adjust logic,
//!   and costs `O(k · n²)` instead of `O(k · n)`.
//! * [`possible_worlds_rank`] enumerates every possible world — one
//!   realization choice per object, including absence when the object's
//!   mass is below 1 — ranks the realized instances, and accumulates world
//!   probabilities directly. It shares *no* arithmetic with the engine and
//!   serves as the ground-truth oracle on small inputs; enumeration is
//!   capped at [`MAX_WORLDS`] worlds.

use std::collections::HashMap;

use thiserror::Error;

use crate::browsing::{build_browsing, BrowsingStream};
use crate::dataset::{QueryPoint, UncertainDatabase};
use crate::engine::{
    full_dp_recompute, instance_totals, ActiveObjectList, EngineError, InstanceRankMatrix,
    MatrixRow, ObjectAccumulator, ObjectRankDistribution, PRankVector, RankOutput, RankStats,
};

/// Upper bound on the number of possible worlds [`possible_worlds_rank`]
/// will enumerate. Beyond this the call refuses rather than running
/// unboundedly long.
pub const MAX_WORLDS: f64 = 1e7;

/// Errors from the possible-worlds oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldEnumerationError {
    /// The database spans more worlds than [`MAX_WORLDS`].
    #[error("enumeration would visit {worlds:.3e} possible worlds (limit {MAX_WORLDS:.0e})")]
    TooManyWorlds { worlds: f64 },
    /// Invalid depth or mismatched query dimensionality.
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// From-scratch baseline: identical stream walk and early-termination rule
/// as the incremental engine, but every row is recomputed directly from the
/// seen-mass table. See [`ylks_rank_stream`].
pub fn ylks_rank(
    db: &UncertainDatabase,
    query: &QueryPoint,
    k: usize,
) -> Result<RankOutput, EngineError> {
    let stream = build_browsing(db, query)?;
    ylks_rank_stream(db, &stream, k)
}

/// Runs the from-scratch baseline over a prebuilt stream.
///
/// Each step folds the seen masses of all other seen objects into a fresh
/// vector, so the cost of step `j` is `O(min(k, j) · j)` and a full pass is
/// quadratic in the stream length. Output is intended to match
/// [`crate::engine::psr_rank_stream`] to within floating-point reordering
/// error.
pub fn ylks_rank_stream(
    db: &UncertainDatabase,
    stream: &BrowsingStream,
    k: usize,
) -> Result<RankOutput, EngineError> {
    if k == 0 {
        return Err(EngineError::InvalidDepth);
    }
    let totals = instance_totals(db);
    let mut aol = ActiveObjectList::new();
    let mut objects = ObjectAccumulator::new(db, k);
    let mut rows: Vec<MatrixRow> = Vec::with_capacity(stream.len());
    let mut stats = RankStats {
        instances_total: stream.len(),
        ..RankStats::default()
    };
    let mut active_sum = 0usize;

    for (index, y) in stream.instances().iter().enumerate() {
        if index > 0 && rows[index - 1].p_rank.is_exhausted() {
            stats.early_stopped = true;
            stats.instances_skipped = stream.len() - index;
            break;
        }
        aol.update(y.object_id, y.probability, totals[&y.object_id]);
        let p_rank = full_dp_recompute(&aol, y.object_id, k);
        objects.add(y.object_id, y.probability, p_rank.values());
        rows.push(MatrixRow {
            object_id: y.object_id,
            instance_id: y.instance_id,
            distance: y.distance,
            p_rank,
        });
        active_sum += aol.active_count();
    }

    stats.rows_emitted = rows.len();
    stats.avg_active_objects = if rows.is_empty() {
        0.0
    } else {
        active_sum as f64 / rows.len() as f64
    };
    Ok(RankOutput {
        matrix: InstanceRankMatrix { k, rows },
        objects: objects.finish(),
        stats,
    })
}

/// One realization choice for an object: a specific instance (identified by
/// its stream position) or absence.
struct Branch {
    stream_index: Option<usize>,
    probability: f64,
}

/// Exhaustive ground-truth oracle. See [`possible_worlds_rank_stream`].
pub fn possible_worlds_rank(
    db: &UncertainDatabase,
    query: &QueryPoint,
    k: usize,
) -> Result<RankOutput, WorldEnumerationError> {
    let stream = build_browsing(db, query).map_err(EngineError::from)?;
    possible_worlds_rank_stream(db, &stream, k)
}

/// Enumerates every possible world and accumulates exact rank
/// probabilities.
///
/// A world picks one branch per object — one of its instances, or absence
/// when total mass is below 1 — with probability equal to the product of
/// branch probabilities. Present instances are ranked by the shared
/// browsing order (distance, then object id, then instance id), so ties
/// resolve exactly as in the streamed engines. Instance rows are normalized
/// by the instance's own probability, making them directly comparable to
/// the engine's conditional rank vectors; object rows accumulate world
/// probability unnormalized.
///
/// Every instance gets a row (no early termination); impossible ranks come
/// out exactly zero. Fails with [`WorldEnumerationError::TooManyWorlds`]
/// when the world count exceeds [`MAX_WORLDS`].
pub fn possible_worlds_rank_stream(
    db: &UncertainDatabase,
    stream: &BrowsingStream,
    k: usize,
) -> Result<RankOutput, WorldEnumerationError> {
    if k == 0 {
        return Err(EngineError::InvalidDepth.into());
    }
    let mut worlds = 1.0f64;
    for object in db.objects() {
        let absent = 1.0 - object.total_mass();
        let branches = object.instances.len() + usize::from(absent > 0.0);
        worlds *= branches as f64;
    }
    if worlds > MAX_WORLDS {
        return Err(WorldEnumerationError::TooManyWorlds { worlds });
    }

    let mut index_of: HashMap<(i64, u32), usize> = HashMap::new();
    for (index, instance) in stream.instances().iter().enumerate() {
        index_of.insert((instance.object_id, instance.instance_id), index);
    }
    let object_branches: Vec<Vec<Branch>> = db
        .objects()
        .iter()
        .map(|object| {
            let mut branches: Vec<Branch> = object
                .instances
                .iter()
                .map(|instance| Branch {
                    stream_index: Some(index_of[&(object.object_id, instance.instance_id)]),
                    probability: instance.probability,
                })
                .collect();
            let absent = 1.0 - object.total_mass();
            if absent > 0.0 {
                branches.push(Branch {
                    stream_index: None,
                    probability: absent,
                });
            }
            branches
        })
        .collect();

    let mut rows: Vec<MatrixRow> = stream
        .instances()
        .iter()
        .map(|y| MatrixRow {
            object_id: y.object_id,
            instance_id: y.instance_id,
            distance: y.distance,
            p_rank: PRankVector(vec![0.0; k]),
        })
        .collect();
    let mut objects = ObjectRankDistribution::zeroed(db, k);
    let mut chosen: Vec<usize> = Vec::with_capacity(db.object_count());
    walk_worlds(
        &object_branches,
        0,
        1.0,
        &mut chosen,
        k,
        &mut rows,
        &mut objects,
    );

    for (row, instance) in rows.iter_mut().zip(stream.instances()) {
        for value in &mut row.p_rank.0 {
            *value /= instance.probability;
        }
    }

    let stats = RankStats {
        instances_total: stream.len(),
        rows_emitted: rows.len(),
        instances_skipped: 0,
        early_stopped: false,
        avg_active_objects: 0.0,
        dp_fallbacks: 0,
    };
    Ok(RankOutput {
        matrix: InstanceRankMatrix { k, rows },
        objects,
        stats,
    })
}

fn walk_worlds(
    object_branches: &[Vec<Branch>],
    level: usize,
    probability: f64,
    chosen: &mut Vec<usize>,
    k: usize,
    rows: &mut [MatrixRow],
    objects: &mut ObjectRankDistribution,
) {
    if level == object_branches.len() {
        let mut present = chosen.clone();
        present.sort_unstable();
        for (closer, &stream_index) in present.iter().enumerate() {
            if closer >= k {
                break;
            }
            rows[stream_index].p_rank.0[closer] += probability;
            objects.add_mass(rows[stream_index].object_id, closer, probability);
        }
        return;
    }
    for branch in &object_branches[level] {
        match branch.stream_index {
            Some(stream_index) => {
                chosen.push(stream_index);
                walk_worlds(
                    object_branches,
                    level + 1,
                    probability * branch.probability,
                    chosen,
                    k,
                    rows,
                    objects,
                );
                chosen.pop();
            }
            None => walk_worlds(
                object_branches,
                level + 1,
                probability * branch.probability,
                chosen,
                k,
                rows,
                objects,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{UncertainObject, VectorInstance};
    use crate::engine::{matrix_max_abs_diff, objects_max_abs_diff, psr_rank};

    fn instance(instance_id: u32, position: f64, probability: f64) -> VectorInstance {
        VectorInstance {
            instance_id,
            position: vec![position],
            probability,
        }
    }

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
            assert!(
                (a - e).abs() <= tol,
                "entry {i}: got {a}, expected {e} (tolerance {tol})"
            );
        }
    }

    fn e1_database() -> UncertainDatabase {
        UncertainDatabase::new(
            1,
            vec![
                UncertainObject {
                    object_id: 0,
                    instances: vec![instance(0, 1.0, 0.6), instance(1, 3.0, 0.4)],
                },
                UncertainObject {
                    object_id: 1,
                    instances: vec![instance(0, 2.0, 1.0)],
                },
            ],
        )
    }

    #[test]
    fn ylks_reproduces_worked_example() {
        let out = ylks_rank(&e1_database(), &QueryPoint(vec![0.0]), 2).unwrap();
        assert_close(out.matrix.rows[0].p_rank.values(), &[1.0, 0.0], 1e-12);
        assert_close(out.matrix.rows[1].p_rank.values(), &[0.4, 0.6], 1e-12);
        assert_close(out.matrix.rows[2].p_rank.values(), &[0.0, 1.0], 1e-12);
        assert_close(out.objects.get(0).unwrap(), &[0.6, 0.4], 1e-12);
        assert_close(out.objects.get(1).unwrap(), &[0.4, 0.6], 1e-12);
    }

    #[test]
    fn oracle_reproduces_worked_example() {
        let out = possible_worlds_rank(&e1_database(), &QueryPoint(vec![0.0]), 2).unwrap();
        assert_close(out.matrix.rows[0].p_rank.values(), &[1.0, 0.0], 1e-12);
        assert_close(out.matrix.rows[1].p_rank.values(), &[0.4, 0.6], 1e-12);
        assert_close(out.matrix.rows[2].p_rank.values(), &[0.0, 1.0], 1e-12);
        assert_close(out.objects.get(0).unwrap(), &[0.6, 0.4], 1e-12);
        assert_close(out.objects.get(1).unwrap(), &[0.4, 0.6], 1e-12);
    }

    /// Three objects whose instances interleave in distance: a certain
    /// object never ranking first, and two uncertain objects splitting the
    /// first rank 0.46 / 0.54.
    fn interleaved_database() -> UncertainDatabase {
        UncertainDatabase::new(
            1,
            vec![
                UncertainObject {
                    object_id: 0,
                    instances: vec![
                        instance(0, 1.0, 0.54),
                        instance(1, 4.0, 0.3),
                        instance(2, 5.0, 0.16),
                    ],
                },
                UncertainObject {
                    object_id: 1,
                    instances: vec![instance(0, 2.0, 0.5), instance(1, 3.0, 0.5)],
                },
                UncertainObject {
                    object_id: 2,
                    instances: vec![instance(0, 6.0, 1.0)],
                },
            ],
        )
    }

    #[test]
    fn oracle_interleaved_first_rank_split() {
        let out = possible_worlds_rank(&interleaved_database(), &QueryPoint(vec![0.0]), 3).unwrap();
        let a = out.objects.get(1).unwrap();
        let b = out.objects.get(0).unwrap();
        let c = out.objects.get(2).unwrap();
        assert!((a[0] - 0.46).abs() < 1e-12);
        assert!((b[0] - 0.54).abs() < 1e-12);
        assert_close(c, &[0.0, 0.0, 1.0], 1e-12);
        // Full-mass objects: each row sums to 1.
        for id in 0..3 {
            let sum: f64 = out.objects.get(id).unwrap().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_three_paths_agree_on_interleaved_database() {
        let db = interleaved_database();
        let query = QueryPoint(vec![0.0]);
        let engine = psr_rank(&db, &query, 3).unwrap();
        let ylks = ylks_rank(&db, &query, 3).unwrap();
        let oracle = possible_worlds_rank(&db, &query, 3).unwrap();
        assert!(matrix_max_abs_diff(&engine.matrix, &ylks.matrix).unwrap() < 1e-12);
        assert!(matrix_max_abs_diff(&engine.matrix, &oracle.matrix).unwrap() < 1e-12);
        assert!(objects_max_abs_diff(&engine.objects, &oracle.objects) < 1e-12);
    }

    #[test]
    fn oracle_handles_existential_uncertainty() {
        // One object present only half the time: the later certain object
        // takes rank 1 whenever the first is absent.
        let db = UncertainDatabase::new(
            1,
            vec![
                UncertainObject {
                    object_id: 7,
                    instances: vec![instance(0, 1.0, 0.5)],
                },
                UncertainObject {
                    object_id: 8,
                    instances: vec![instance(0, 2.0, 1.0)],
                },
            ],
        );
        let query = QueryPoint(vec![0.0]);
        let oracle = possible_worlds_rank(&db, &query, 2).unwrap();
        assert_close(oracle.matrix.rows[0].p_rank.values(), &[1.0, 0.0], 1e-12);
        assert_close(oracle.matrix.rows[1].p_rank.values(), &[0.5, 0.5], 1e-12);
        assert_close(oracle.objects.get(7).unwrap(), &[0.5, 0.0], 1e-12);
        assert_close(oracle.objects.get(8).unwrap(), &[0.5, 0.5], 1e-12);

        let engine = psr_rank(&db, &query, 2).unwrap();
        assert!(matrix_max_abs_diff(&engine.matrix, &oracle.matrix).unwrap() < 1e-12);
        assert!(objects_max_abs_diff(&engine.objects, &oracle.objects) < 1e-12);
    }

    #[test]
    fn oracle_refuses_oversized_enumeration() {
        // 15 objects with two instances and existential uncertainty each:
        // 3^15 ≈ 1.4e7 worlds, above the cap.
        let objects = (0..15)
            .map(|i| UncertainObject {
                object_id: i,
                instances: vec![
                    instance(0, i as f64, 0.4),
                    instance(1, i as f64 + 0.5, 0.4),
                ],
            })
            .collect();
        let db = UncertainDatabase::new(1, objects);
        let err = possible_worlds_rank(&db, &QueryPoint(vec![0.0]), 3).unwrap_err();
        assert!(matches!(
            err,
            WorldEnumerationError::TooManyWorlds { worlds } if worlds > MAX_WORLDS
        ));
    }

    #[test]
    fn ylks_stops_where_the_engine_stops() {
        let objects = (0..5)
            .map(|i| UncertainObject {
                object_id: i,
                instances: vec![instance(0, 1.0 + i as f64, 1.0)],
            })
            .collect();
        let db = UncertainDatabase::new(1, objects);
        let query = QueryPoint(vec![0.0]);
        let engine = psr_rank(&db, &query, 2).unwrap();
        let ylks = ylks_rank(&db, &query, 2).unwrap();
        assert!(engine.stats.early_stopped);
        assert!(ylks.stats.early_stopped);
        assert_eq!(engine.stats.rows_emitted, ylks.stats.rows_emitted);
        assert_eq!(engine.stats.instances_skipped, ylks.stats.instances_skipped);
        assert!(matrix_max_abs_diff(&engine.matrix, &ylks.matrix).unwrap() < 1e-12);
    }
}
