//! Incremental computation of rank probabilities over a distance-browsing
//! stream.
//!
//! For a query `q` and ranking depth `k`, every instance `x` of an object
//! `o` gets a rank-probability vector: entry `i` (0-based) is the
//! probability that exactly `i` objects other than `o` are closer to `q`
//! than `x`, i.e. that `x` would appear at rank `i + 1`. Because objects are
//! independent and each contributes at most one instance per outcome, the
//! count of closer objects is a sum of independent Bernoulli variables —
//! one per already-seen object, with success probability equal to that
//! object's probability mass seen so far in the stream.
//!
//! The engine walks the stream once and carries the previous instance's
//! vector forward. Between two consecutive instances `x` (object `o_x`) and
//! `y` (object `o_y`), the only Bernoulli parameter that changes is the one
//! for `o_y`; this yields three transitions:
//!
//! * same object (`o_y == o_x`): the vector is reused unchanged;
//! * `o_y` never seen before: fold in `o_x` with one [`dynamic_round`];
//! * `o_y` seen before: remove its stale contribution with
//!   [`adjust_probs`], then fold in `o_x` with one [`dynamic_round`].
//!
//! Each transition costs `O(k)`, so a full pass is `O(k · n)` after the
//! `O(n log n)` presort — against `O(k · n²)` for recomputing every vector
//! from scratch (see [`crate::baselines::ylks_rank`]).
//!
//! One numerical caveat governs the third transition. Removing a component
//! whose stale mass is `p` divides by `1 - p` per entry, which multiplies
//! representation noise by `p / (1 - p)` per entry — and the *problem* is
//! that ill-conditioned, not just the recursion: a truncated vector simply
//! does not determine its own de-folding to better accuracy. For `p ≤ 0.5`
//! the factor is at most 1 and the incremental path is stable; beyond it a
//! single removal at depth `k` can inflate noise by `(p/(1-p))^(k-1)`, so
//! the engine instead rebuilds that step's vector from the seen-mass table
//! ([`full_dp_recompute`]), which costs `O(k · |AOL|)` for that step and
//! resets the error to machine precision. The same fallback covers the
//! degenerate divisor `p ≈ 1`. Fallback steps are counted in
//! [`RankStats::dp_fallbacks`].

use std::collections::HashMap;

use thiserror::Error;

use crate::browsing::{build_browsing, BrowsingStream};
use crate::dataset::{DimensionMismatch, QueryPoint, UncertainDatabase};

/// Divisor guard for [`adjust_probs`].
///
/// Removing a component divides by `1 - p_closer`; once `p_closer` is within
/// this distance of 1 the division amplifies noise without bound, so
/// [`adjust_probs`] refuses and the engine falls back to a from-scratch
/// recomputation ([`full_dp_recompute`]) for that step.
pub const DIVISOR_GUARD: f64 = 1e-12;

/// Largest stale mass the engine removes incrementally.
///
/// Inverting a fold multiplies round-off by `p / (1 - p)` per entry; at or
/// below 0.5 that factor is at most 1, so errors never grow. Above it the
/// amplification compounds to `(p/(1-p))^(k-1)` across a vector — at
/// realistic depths this turns machine noise into garbage within a single
/// step — so the engine recomputes such steps from the seen-mass table
/// instead. The threshold is exactly the boundary where removal stops being
/// well-conditioned; no accuracy is traded away by it.
pub const ADJUST_STABILITY_THRESHOLD: f64 = 0.5;

/// Probabilities below this are flushed to exact zero as vectors are built.
///
/// On long streams with many low-mass components, rank probabilities decay
/// exponentially and would otherwise drift through the subnormal range
/// (below ~2.2e-308), where each arithmetic operation takes a hardware
/// assist one to two orders of magnitude slower than normal arithmetic —
/// measured as a several-fold slowdown of whole passes. Values this small
/// are hundreds of orders of magnitude beneath any tolerance used by the
/// comparisons here; flushing them costs nothing semantically, keeps every
/// operation in normal-range arithmetic (the floor leaves headroom for
/// intermediate products), and lets fully decayed vectors reach the exact
/// all-zero state that the early-termination rule looks for.
pub const UNDERFLOW_FLUSH: f64 = 1e-300;

/// Flush-to-zero guard for non-negative probability values.
#[inline]
fn flush(x: f64) -> f64 {
    if x < UNDERFLOW_FLUSH {
        0.0
    } else {
        x
    }
}

/// Errors from the rank-vector operations and engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    /// A Bernoulli parameter outside `[0, 1]` was supplied.
    #[error("probability {value} is outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },
    /// [`adjust_probs`] was asked to divide by `1 - p_closer` with
    /// `p_closer` within [`DIVISOR_GUARD`] of 1.
    #[error("cannot remove a component with probability {value}: divisor 1 - p is below {DIVISOR_GUARD}")]
    DegenerateDivisor { value: f64 },
    /// The ranking depth `k` must be at least 1.
    #[error("ranking depth k must be at least 1")]
    InvalidDepth,
    /// Query and database dimensionality disagree.
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
}

/// Rank-probability vector of fixed length `k`.
///
/// Entry `i` is the probability of exactly `i` closer objects; entries are
/// in `[0, 1]` and sum to at most 1 (mass that would land past entry
/// `k - 1` is dropped when more than `k - 1` seen objects exist).
#[derive(Debug, Clone, PartialEq)]
pub struct PRankVector(pub(crate) Vec<f64>);

impl PRankVector {
    /// The vector `[1, 0, …, 0]`: certainly zero closer objects.
    pub fn first(k: usize) -> Self {
        let mut v = vec![0.0; k];
        if k > 0 {
            v[0] = 1.0;
        }
        Self(v)
    }

    /// Wraps raw values; callers are responsible for their validity.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// The entries.
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// The depth `k`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True for depth zero (no entries).
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when no entry is positive: the instance cannot appear within
    /// the first `k` ranks at all.
    pub fn is_exhausted(&self) -> bool {
        all_non_positive(&self.0)
    }
}

fn all_non_positive(values: &[f64]) -> bool {
    values.iter().all(|&p| p <= 0.0)
}

/// `out[i] = src[i-1]·p + src[i]·(1-p)`, with `out[0] = src[0]·(1-p)`.
/// Results below [`UNDERFLOW_FLUSH`] become exact zeros.
fn round_from(src: &[f64], p: f64, out: &mut Vec<f64>) {
    out.clear();
    let q = 1.0 - p;
    out.push(flush(src[0] * q));
    for i in 1..src.len() {
        out.push(flush(src[i - 1] * p + src[i] * q));
    }
}

/// In-place variant of [`round_from`] touching only the first
/// `min(prefix + 1, len)` entries; entries beyond the current nonzero
/// prefix stay zero, which keeps repeated folding linear in the number of
/// occupied entries rather than in `k`.
fn round_in_place(v: &mut [f64], prefix: usize, p: f64) {
    let q = 1.0 - p;
    let hi = prefix.min(v.len() - 1);
    for i in (1..=hi).rev() {
        v[i] = flush(v[i - 1] * p + v[i] * q);
    }
    v[0] = flush(v[0] * q);
}

/// Forward recursion inverse of [`round_from`]; negative round-off residue
/// is clamped to zero so vectors stay valid probability vectors, and
/// positive residue below [`UNDERFLOW_FLUSH`] becomes an exact zero.
fn adjust_from(cur: &[f64], p: f64, out: &mut Vec<f64>) {
    out.clear();
    let q = 1.0 - p;
    out.push(flush((cur[0] / q).max(0.0)));
    for i in 1..cur.len() {
        let prev = out[i - 1];
        out.push(flush(((cur[i] - prev * p) / q).max(0.0)));
    }
}

/// Folds one more independent Bernoulli component with success probability
/// `p_closer` into a rank-probability vector.
///
/// With probability `p_closer` the new component is closer (every rank
/// shifts up by one); otherwise the vector is unchanged. Mass shifted past
/// the last entry is dropped, and entries that decay below
/// [`UNDERFLOW_FLUSH`] become exact zeros. Errors when `p_closer` is
/// outside `[0, 1]`.
pub fn dynamic_round(v: &PRankVector, p_closer: f64) -> Result<PRankVector, EngineError> {
    if !(0.0..=1.0).contains(&p_closer) || p_closer.is_nan() {
        return Err(EngineError::ProbabilityOutOfRange { value: p_closer });
    }
    if v.is_empty() {
        return Ok(v.clone());
    }
    let mut out = Vec::with_capacity(v.len());
    round_from(v.values(), p_closer, &mut out);
    Ok(PRankVector(out))
}

/// Removes one Bernoulli component with success probability `p_closer`
/// from a rank-probability vector — the inverse of [`dynamic_round`],
/// provided the vector's final entry carried no truncated mass.
///
/// Errors when `p_closer` is outside `[0, 1]` or within [`DIVISOR_GUARD`]
/// of 1 (degenerate divisor).
pub fn adjust_probs(cur: &PRankVector, p_closer: f64) -> Result<PRankVector, EngineError> {
    if !(0.0..=1.0).contains(&p_closer) || p_closer.is_nan() {
        return Err(EngineError::ProbabilityOutOfRange { value: p_closer });
    }
    if 1.0 - p_closer < DIVISOR_GUARD {
        return Err(EngineError::DegenerateDivisor { value: p_closer });
    }
    if cur.is_empty() {
        return Ok(cur.clone());
    }
    let mut out = Vec::with_capacity(cur.len());
    adjust_from(cur.values(), p_closer, &mut out);
    Ok(PRankVector(out))
}

/// Bookkeeping entry for one object encountered in the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AolEntry {
    /// The object.
    pub object_id: i64,
    /// Probability mass of this object's instances seen so far.
    pub seen_mass: f64,
    /// Instances of this object not yet seen.
    pub remaining_instances: u32,
}

/// Result of recording one instance in the [`ActiveObjectList`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AolUpdate {
    /// The object's seen mass before this instance was added.
    pub prior_mass: f64,
    /// True when this was the object's first instance in the stream.
    pub first_sighting: bool,
}

/// Seen-mass accounting for every object encountered so far.
///
/// Lookup and update are `O(1)`. Entries are never evicted: an object whose
/// instances are all consumed keeps its entry (its mass stays folded into
/// carried vectors and from-scratch recomputation still needs it), but it no
/// longer counts as *active*. The active count — seen objects that still
/// have unseen instances — is the working-set metric reported by the
/// engines.
#[derive(Debug, Clone, Default)]
pub struct ActiveObjectList {
    slots: HashMap<i64, usize>,
    entries: Vec<AolEntry>,
    active_count: usize,
}

impl ActiveObjectList {
    /// An empty list.
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one streamed instance of `object_id` carrying `probability`.
    ///
    /// `total_instances` is the object's instance count in the database and
    /// is only consulted on the first sighting.
    pub fn update(&mut self, object_id: i64, probability: f64, total_instances: u32) -> AolUpdate {
        match self.slots.get(&object_id) {
            Some(&slot) => {
                let entry = &mut self.entries[slot];
                debug_assert!(entry.remaining_instances > 0, "more updates than instances");
                let prior_mass = entry.seen_mass;
                entry.seen_mass += probability;
                entry.remaining_instances -= 1;
                if entry.remaining_instances == 0 {
                    self.active_count -= 1;
                }
                AolUpdate {
                    prior_mass,
                    first_sighting: false,
                }
            }
            None => {
                self.slots.insert(object_id, self.entries.len());
                self.entries.push(AolEntry {
                    object_id,
                    seen_mass: probability,
                    remaining_instances: total_instances - 1,
                });
                if total_instances > 1 {
                    self.active_count += 1;
                }
                AolUpdate {
                    prior_mass: 0.0,
                    first_sighting: true,
                }
            }
        }
    }

    /// Seen mass of an object; zero when the object has not appeared yet.
    pub fn seen_mass(&self, object_id: i64) -> f64 {
        self.slots
            .get(&object_id)
            .map(|&slot| self.entries[slot].seen_mass)
            .unwrap_or(0.0)
    }

    /// All entries, in first-sighting order.
    pub fn entries(&self) -> &[AolEntry] {
        &self.entries
    }

    /// Number of objects seen so far.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when no object has been seen.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Seen objects that still have unseen instances.
    pub fn active_count(&self) -> usize {
        self.active_count
    }
}

/// Seen masses can exceed 1 by accumulated representation error (within the
/// validation slack); clamp before using them as Bernoulli parameters.
fn clamp_unit(p: f64) -> f64 {
    p.min(1.0)
}

/// Computes a rank-probability vector from scratch: one fold per seen
/// object other than `exclude`, over the current seen masses.
///
/// The result depends only on the list state, never on any carried vector,
/// which makes it both the per-step workhorse of the quadratic baseline and
/// the fallback when the incremental path hits a degenerate divisor.
/// `O(k · len)`. `k` must be at least 1.
pub fn full_dp_recompute(aol: &ActiveObjectList, exclude: i64, k: usize) -> PRankVector {
    assert!(k >= 1, "ranking depth k must be at least 1");
    let mut v = vec![0.0; k];
    v[0] = 1.0;
    let mut prefix = 1usize;
    for entry in aol.entries() {
        if entry.object_id == exclude {
            continue;
        }
        round_in_place(&mut v, prefix, clamp_unit(entry.seen_mass));
        if prefix < k {
            prefix += 1;
        }
    }
    PRankVector(v)
}

/// One emitted row of an [`InstanceRankMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    /// Object the instance belongs to.
    pub object_id: i64,
    /// Instance identifier within the object.
    pub instance_id: u32,
    /// Distance from the query.
    pub distance: f64,
    /// Rank probabilities of this instance (not weighted by its own
    /// probability).
    pub p_rank: PRankVector,
}

/// Instance-level rank probabilities, one row per emitted instance, in
/// browsing order.
///
/// Instances past the early-termination point are omitted; their rows are
/// implicitly all-zero and are counted in [`RankStats::instances_skipped`].
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRankMatrix {
    pub(crate) k: usize,
    /// Emitted rows in browsing order.
    pub rows: Vec<MatrixRow>,
}

impl InstanceRankMatrix {
    /// Assembles a matrix from rows; `None` when any row's width differs
    /// from `k`.
    pub fn from_rows(k: usize, rows: Vec<MatrixRow>) -> Option<Self> {
        rows.iter()
            .all(|r| r.p_rank.len() == k)
            .then_some(Self { k, rows })
    }

    /// The ranking depth `k` (row width).
    pub fn depth(&self) -> usize {
        self.k
    }
}

/// Object-level rank distribution: for every object, entry `i` is the
/// probability that the object ranks at position `i + 1`.
///
/// Aggregated from instance rows weighted by instance probability; rows sum
/// to at most the object's total probability mass. Objects whose instances
/// were all skipped keep an all-zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRankDistribution {
    k: usize,
    rows: std::collections::BTreeMap<i64, Vec<f64>>,
}

impl ObjectRankDistribution {
    /// Assembles a distribution from per-object rows; `None` when any
    /// row's width differs from `depth`.
    pub fn from_rows(
        depth: usize,
        rows: std::collections::BTreeMap<i64, Vec<f64>>,
    ) -> Option<Self> {
        rows.values()
            .all(|r| r.len() == depth)
            .then_some(Self { k: depth, rows })
    }

    pub(crate) fn zeroed(db: &UncertainDatabase, k: usize) -> Self {
        let rows = db
            .objects()
            .iter()
            .map(|o| (o.object_id, vec![0.0; k]))
            .collect();
        Self { k, rows }
    }

    /// The ranking depth `k` (row width).
    pub fn depth(&self) -> usize {
        self.k
    }

    /// Number of objects covered.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// True when no objects are covered.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rank probabilities for one object.
    pub fn get(&self, object_id: i64) -> Option<&[f64]> {
        self.rows.get(&object_id).map(Vec::as_slice)
    }

    /// Iterates `(object_id, probabilities)` in ascending object id.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &[f64])> {
        self.rows.iter().map(|(&id, v)| (id, v.as_slice()))
    }

    pub(crate) fn add_mass(&mut self, object_id: i64, rank_index: usize, amount: f64) {
        let row = self
            .rows
            .get_mut(&object_id)
            .expect("every streamed object exists in the database");
        row[rank_index] += amount;
    }
}

/// Flat per-object aggregation buffer used while streaming; one contiguous
/// row per database object keeps the hot `+= p · v[i]` loop out of
/// pointer-chasing map lookups.
pub(crate) struct ObjectAccumulator {
    index: HashMap<i64, usize>,
    ids: Vec<i64>,
    rows: Vec<f64>,
    k: usize,
}

impl ObjectAccumulator {
    pub(crate) fn new(db: &UncertainDatabase, k: usize) -> Self {
        let ids: Vec<i64> = db.objects().iter().map(|o| o.object_id).collect();
        let index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        Self {
            index,
            rows: vec![0.0; ids.len() * k],
            ids,
            k,
        }
    }

    pub(crate) fn add(&mut self, object_id: i64, probability: f64, values: &[f64]) {
        let slot = self.index[&object_id];
        let row = &mut self.rows[slot * self.k..(slot + 1) * self.k];
        for (acc, &v) in row.iter_mut().zip(values) {
            *acc += probability * v;
        }
    }

    pub(crate) fn finish(self) -> ObjectRankDistribution {
        let mut rows = std::collections::BTreeMap::new();
        for (i, &id) in self.ids.iter().enumerate() {
            rows.insert(id, self.rows[i * self.k..(i + 1) * self.k].to_vec());
        }
        ObjectRankDistribution { k: self.k, rows }
    }
}

/// Counters describing one ranking pass.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RankStats {
    /// Instances in the stream.
    pub instances_total: usize,
    /// Rows actually emitted.
    pub rows_emitted: usize,
    /// Instances skipped after early termination.
    pub instances_skipped: usize,
    /// True when the pass stopped before exhausting the stream.
    pub early_stopped: bool,
    /// Mean active-object count over the emitted steps.
    pub avg_active_objects: f64,
    /// Steps where removing stale mass would have been ill-conditioned
    /// (above [`ADJUST_STABILITY_THRESHOLD`]) and the vector was instead
    /// rebuilt from the seen-mass table.
    pub dp_fallbacks: usize,
}

/// Everything produced by one ranking pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOutput {
    /// Instance-level rank probabilities.
    pub matrix: InstanceRankMatrix,
    /// Object-level rank distribution.
    pub objects: ObjectRankDistribution,
    /// Pass counters.
    pub stats: RankStats,
}

/// Runs the incremental engine against `db` for `query`, building the
/// browsing stream internally. See [`psr_rank_stream`].
pub fn psr_rank(
    db: &UncertainDatabase,
    query: &QueryPoint,
    k: usize,
) -> Result<RankOutput, EngineError> {
    let stream = build_browsing(db, query)?;
    psr_rank_stream(db, &stream, k)
}

/// Runs the incremental engine over a prebuilt stream.
///
/// The pass visits instances in stream order and terminates early as soon
/// as the previous instance's vector has no positive entry: no transition
/// can turn an all-zero vector into anything else, so every unemitted row
/// is exactly zero. The all-zero test is exact (threshold 0) — a loose
/// threshold would cut off genuinely positive tail probabilities.
///
/// Steps whose removal would be ill-conditioned (stale mass above
/// [`ADJUST_STABILITY_THRESHOLD`]) are recomputed from the seen-mass table
/// and counted in [`RankStats::dp_fallbacks`]; see the module
/// documentation.
///
/// `db` must be the database the stream was built from and must satisfy
/// [`crate::dataset::validate_database`].
pub fn psr_rank_stream(
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

    let mut current: Vec<f64> = vec![0.0; k];
    let mut scratch: Vec<f64> = Vec::with_capacity(k);
    let mut next: Vec<f64> = Vec::with_capacity(k);
    let mut prev_object = 0i64;
    let mut active_sum = 0usize;

    for (index, y) in stream.instances().iter().enumerate() {
        if index > 0 && all_non_positive(&current) {
            stats.early_stopped = true;
            stats.instances_skipped = stream.len() - index;
            break;
        }
        let total = totals[&y.object_id];
        let update = aol.update(y.object_id, y.probability, total);

        next.clear();
        if index == 0 {
            next.resize(k, 0.0);
            next[0] = 1.0;
        } else if y.object_id == prev_object {
            next.extend_from_slice(&current);
        } else if update.first_sighting {
            round_from(&current, clamp_unit(aol.seen_mass(prev_object)), &mut next);
        } else {
            let stale = clamp_unit(update.prior_mass);
            if stale > ADJUST_STABILITY_THRESHOLD {
                stats.dp_fallbacks += 1;
                next.extend_from_slice(full_dp_recompute(&aol, y.object_id, k).values());
            } else {
                adjust_from(&current, stale, &mut scratch);
                round_from(&scratch, clamp_unit(aol.seen_mass(prev_object)), &mut next);
            }
        }

        objects.add(y.object_id, y.probability, &next);
        rows.push(MatrixRow {
            object_id: y.object_id,
            instance_id: y.instance_id,
            distance: y.distance,
            p_rank: PRankVector(next.clone()),
        });
        std::mem::swap(&mut current, &mut next);
        prev_object = y.object_id;
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

pub(crate) fn instance_totals(db: &UncertainDatabase) -> HashMap<i64, u32> {
    db.objects()
        .iter()
        .map(|o| (o.object_id, o.instances.len() as u32))
        .collect()
}

/// Error from comparing two rank outputs that do not describe the same
/// stream.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    /// The two matrices have different depths `k`.
    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: usize, right: usize },
    /// Overlapping rows name different instances at position `index`.
    #[error("row {index} identifies different instances in the two matrices")]
    RowIdentityMismatch { index: usize },
}

/// Maximum absolute elementwise difference between two instance matrices.
///
/// Rows are aligned positionally (both matrices are in browsing order); when
/// one pass terminated earlier than the other, its missing trailing rows are
/// treated as all-zero, which is exactly what they represent.
pub fn matrix_max_abs_diff(
    a: &InstanceRankMatrix,
    b: &InstanceRankMatrix,
) -> Result<f64, DiffError> {
    if a.depth() != b.depth() {
        return Err(DiffError::DepthMismatch {
            left: a.depth(),
            right: b.depth(),
        });
    }
    let overlap = a.rows.len().min(b.rows.len());
    for index in 0..overlap {
        let (ra, rb) = (&a.rows[index], &b.rows[index]);
        if ra.object_id != rb.object_id || ra.instance_id != rb.instance_id {
            return Err(DiffError::RowIdentityMismatch { index });
        }
    }
    let mut max_diff = 0.0f64;
    let longer = a.rows.len().max(b.rows.len());
    for index in 0..longer {
        let va = a.rows.get(index).map(|r| r.p_rank.values());
        let vb = b.rows.get(index).map(|r| r.p_rank.values());
        for i in 0..a.depth() {
            let x = va.map_or(0.0, |v| v[i]);
            let y = vb.map_or(0.0, |v| v[i]);
            max_diff = max_diff.max((x - y).abs());
        }
    }
    Ok(max_diff)
}

/// Maximum absolute elementwise difference between two object
/// distributions; objects present in only one side compare against zero.
pub fn objects_max_abs_diff(a: &ObjectRankDistribution, b: &ObjectRankDistribution) -> f64 {
    let mut max_diff = 0.0f64;
    let ids: std::collections::BTreeSet<i64> =
        a.iter().map(|(id, _)| id).chain(b.iter().map(|(id, _)| id)).collect();
    for id in ids {
        let va = a.get(id);
        let vb = b.get(id);
        let width = va.map_or(0, <[f64]>::len).max(vb.map_or(0, <[f64]>::len));
        for i in 0..width {
            let x = va.and_then(|v| v.get(i)).copied().unwrap_or(0.0);
            let y = vb.and_then(|v| v.get(i)).copied().unwrap_or(0.0);
            max_diff = max_diff.max((x - y).abs());
        }
    }
    max_diff
}
