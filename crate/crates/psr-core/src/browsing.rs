//! Distance browsing: instances of all objects, streamed by ascending
//! distance from a query point.
//!
//! The stream is materialized by presorting every instance once
//! (`O(n log n)`), after which consumers pay `O(1)` per element. Ties in
//! distance are broken by `(object_id, instance_id)` ascending, so the order
//! is a deterministic total order for any input. All ranking code in this
//! crate defines "closer than" as "earlier in this order", which keeps the
//! incremental engine, the baseline, and the exhaustive oracle consistent
//! even on tied distances.

use crate::dataset::{distance, DimensionMismatch, QueryPoint, UncertainDatabase};

/// One instance tagged with its distance from the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedInstance {
    /// Object the instance belongs to.
    pub object_id: i64,
    /// Instance identifier within the object.
    pub instance_id: u32,
    /// Probability carried by the instance.
    pub probability: f64,
    /// Distance from the query point.
    pub distance: f64,
}

/// All instances of a database, sorted by ascending distance from a query.
#[derive(Debug, Clone)]
pub struct BrowsingStream {
    items: Vec<RankedInstance>,
    cursor: usize,
}

impl BrowsingStream {
    /// Returns the next-closest instance, or `None` once exhausted.
    pub fn next(&mut self) -> Option<RankedInstance> {
        let item = self.items.get(self.cursor).copied();
        if item.is_some() {
            self.cursor += 1;
        }
        item
    }

    /// The full sorted contents, independent of the cursor.
    pub fn instances(&self) -> &[RankedInstance] {
        &self.items
    }

    /// Total number of instances in the stream.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    /// True when the stream holds no instances at all.
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Rewinds the cursor to the closest instance.
    pub fn reset(&mut self) {
        self.cursor = 0;
    }
}

/// Builds the browsing stream under the default Euclidean metric.
///
/// An empty database yields an empty stream, not an error.
pub fn build_browsing(
    db: &UncertainDatabase,
    query: &QueryPoint,
) -> Result<BrowsingStream, DimensionMismatch> {
    build_browsing_with_metric(db, query, |a, b| {
        distance(a, b).expect("lengths checked before sorting")
    })
}

/// Builds the browsing stream under a caller-supplied metric.
///
/// The metric only influences ordering; it must return finite values for the
/// database at hand. Dimensionality of the query is still checked against
/// the database up front.
pub fn build_browsing_with_metric<M>(
    db: &UncertainDatabase,
    query: &QueryPoint,
    metric: M,
) -> Result<BrowsingStream, DimensionMismatch>
where
    M: Fn(&[f64], &[f64]) -> f64,
{
    if query.dimensionality() != db.dimensionality() {
        return Err(DimensionMismatch {
            left: query.dimensionality(),
            right: db.dimensionality(),
        });
    }
    let mut items = Vec::with_capacity(db.total_instance_count());
    for object in db.objects() {
        for inst in &object.instances {
            items.push(RankedInstance {
                object_id: object.object_id,
                instance_id: inst.instance_id,
                probability: inst.probability,
                distance: metric(&inst.position, &query.0),
            });
        }
    }
    items.sort_unstable_by(compare_browsing_order);
    Ok(BrowsingStream { items, cursor: 0 })
}

/// The total order used by every ranking component in this crate.
pub fn compare_browsing_order(a: &RankedInstance, b: &RankedInstance) -> std::cmp::Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.object_id.cmp(&b.object_id))
        .then_with(|| a.instance_id.cmp(&b.instance_id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{UncertainObject, VectorInstance};

    fn sample_db() -> UncertainDatabase {
        UncertainDatabase::new(
            1,
            vec![
                UncertainObject {
                    object_id: 0,
                    instances: vec![
                        VectorInstance {
                            instance_id: 0,
                            position: vec![1.0],
                            probability: 0.6,
                        },
                        VectorInstance {
                            instance_id: 1,
                            position: vec![3.0],
                            probability: 0.4,
                        },
                    ],
                },
                UncertainObject {
                    object_id: 1,
                    instances: vec![VectorInstance {
                        instance_id: 0,
                        position: vec![2.0],
                        probability: 1.0,
                    }],
                },
            ],
        )
    }

    #[test]
    fn streams_instances_by_ascending_distance() {
        let mut stream = build_browsing(&sample_db(), &QueryPoint(vec![0.0])).unwrap();
        let order: Vec<(i64, u32)> = std::iter::from_fn(|| stream.next())
            .map(|r| (r.object_id, r.instance_id))
            .collect();
        assert_eq!(order, vec![(0, 0), (1, 0), (0, 1)]);
    }

    #[test]
    fn next_reports_distances_and_exhaustion() {
        let mut stream = build_browsing(&sample_db(), &QueryPoint(vec![0.0])).unwrap();
        assert_eq!(stream.len(), 3);
        assert_eq!(stream.next().unwrap().distance, 1.0);
        assert_eq!(stream.next().unwrap().distance, 2.0);
        assert_eq!(stream.next().unwrap().distance, 3.0);
        assert!(stream.next().is_none());
        stream.reset();
        assert_eq!(stream.next().unwrap().distance, 1.0);
    }

    #[test]
    fn ties_break_by_object_then_instance_id() {
        let db = UncertainDatabase::new(
            1,
            vec![
                UncertainObject {
                    object_id: 5,
                    instances: vec![VectorInstance {
                        instance_id: 0,
                        position: vec![4.0],
                        probability: 1.0,
                    }],
                },
                UncertainObject {
                    object_id: 2,
                    instances: vec![
                        VectorInstance {
                            instance_id: 1,
                            position: vec![-4.0],
                            probability: 0.5,
                        },
                        VectorInstance {
                            instance_id: 0,
                            position: vec![4.0],
                            probability: 0.5,
                        },
                    ],
                },
            ],
        );
        let stream = build_browsing(&db, &QueryPoint(vec![0.0])).unwrap();
        let order: Vec<(i64, u32)> = stream
            .instances()
            .iter()
            .map(|r| (r.object_id, r.instance_id))
            .collect();
        // All three land at distance 4; ids decide the order.
        assert_eq!(order, vec![(2, 0), (2, 1), (5, 0)]);
    }

    #[test]
    fn empty_database_yields_empty_stream() {
        let db = UncertainDatabase::new(3, vec![]);
        let mut stream = build_browsing(&db, &QueryPoint(vec![0.0, 0.0, 0.0])).unwrap();
        assert!(stream.is_empty());
        assert!(stream.next().is_none());
    }

    #[test]
    fn rejects_query_of_wrong_dimensionality() {
        let err = build_browsing(&sample_db(), &QueryPoint(vec![0.0, 0.0])).unwrap_err();
        assert_eq!(err, DimensionMismatch { left: 2, right: 1 });
    }

    #[test]
    fn stream_is_a_permutation_with_monotone_distances() {
        let db = sample_db();
        let stream = build_browsing(&db, &QueryPoint(vec![1.5])).unwrap();
        assert_eq!(stream.len(), db.total_instance_count());
        for pair in stream.instances().windows(2) {
            assert!(pair[0].distance <= pair[1].distance);
        }
        let mass: f64 = stream.instances().iter().map(|r| r.probability).sum();
        assert!((mass - 2.0).abs() < 1e-12);
    }

    #[test]
    fn custom_metric_reorders_the_stream() {
        // Rank by distance from 3.0 instead of from the query origin.
        let stream = build_browsing_with_metric(&sample_db(), &QueryPoint(vec![0.0]), |a, _| {
            (a[0] - 3.0).abs()
        })
        .unwrap();
        let order: Vec<(i64, u32)> = stream
            .instances()
            .iter()
            .map(|r| (r.object_id, r.instance_id))
            .collect();
        assert_eq!(order, vec![(0, 1), (1, 0), (0, 0)]);
    }
}
