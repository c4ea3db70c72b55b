//! Deterministic rankings derived from rank-probability distributions.
//!
//! A [`RankTable`] is a level-agnostic view of rank probabilities: one row
//! per entry (a matrix row at instance level, an object at object level),
//! one column per rank. Four query models turn it into definite rankings:
//!
//! * [`u_k_ranks`] — the most probable entry at each individual rank;
//! * [`pt_k`] — all entries whose probability of ranking within the top
//!   `k` strictly exceeds a threshold;
//! * [`global_top_k`] — the `k` entries with the highest top-`k`
//!   probability;
//! * [`expected_rank`] — entries ordered by conditional expected rank.
//!
//! All tie-breaks are by ascending entry id, so identical tables always
//! produce identical outputs.

use serde::Serialize;
use thiserror::Error;

use crate::engine::{InstanceRankMatrix, ObjectRankDistribution};

/// Whether a table's entries are matrix rows or whole objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableLevel {
    /// Entries are instance-matrix rows; entry ids are 0-based row indices.
    Instance,
    /// Entries are objects; entry ids are object ids.
    Object,
}

impl TableLevel {
    /// Lowercase tag used in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            TableLevel::Instance => "instance",
            TableLevel::Object => "object",
        }
    }
}

/// Errors from the ranking semantics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticsError {
    /// The table has no rows.
    #[error("rank table has no entries")]
    EmptyTable,
    /// `k` was zero or exceeds the table depth.
    #[error("rank depth {k} is invalid for a table of depth {depth}")]
    InvalidDepth { k: usize, depth: usize },
    /// A probability threshold outside `[0, 1]` was supplied.
    #[error("threshold {value} is outside [0, 1]")]
    ThresholdOutOfRange { value: f64 },
    /// Table rows do not all share one width.
    #[error("table rows have inconsistent widths")]
    RaggedRows,
}

/// Rank probabilities for a set of entries: `rows[e][i]` is the probability
/// that entry `e` ranks at position `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    level: TableLevel,
    ids: Vec<i64>,
    rows: Vec<Vec<f64>>,
    depth: usize,
}

impl RankTable {
    /// Builds a table from explicit ids and rows; all rows must share one
    /// width and ids must align one-to-one with rows.
    pub fn new(level: TableLevel, ids: Vec<i64>, rows: Vec<Vec<f64>>) -> Result<Self, SemanticsError> {
        if ids.len() != rows.len() {
            return Err(SemanticsError::RaggedRows);
        }
        let depth = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != depth) {
            return Err(SemanticsError::RaggedRows);
        }
        Ok(Self {
            level,
            ids,
            rows,
            depth,
        })
    }

    /// Instance-level view of a rank matrix; entry ids are row indices.
    pub fn from_matrix(matrix: &InstanceRankMatrix) -> Self {
        Self {
            level: TableLevel::Instance,
            ids: (0..matrix.rows.len() as i64).collect(),
            rows: matrix
                .rows
                .iter()
                .map(|r| r.p_rank.values().to_vec())
                .collect(),
            depth: matrix.depth(),
        }
    }

    /// Object-level view of an object rank distribution; entry ids are
    /// object ids, ascending.
    pub fn from_objects(objects: &ObjectRankDistribution) -> Self {
        let mut ids = Vec::with_capacity(objects.len());
        let mut rows = Vec::with_capacity(objects.len());
        for (id, values) in objects.iter() {
            ids.push(id);
            rows.push(values.to_vec());
        }
        Self {
            level: TableLevel::Object,
            ids,
            rows,
            depth: objects.depth(),
        }
    }

    /// The level of the entries.
    pub fn level(&self) -> TableLevel {
        self.level
    }

    /// Entry ids, aligned with rows.
    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// True when the table has no entries.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of rank columns.
    pub fn depth(&self) -> usize {
        self.depth
    }

    fn check_depth(&self, k: usize) -> Result<(), SemanticsError> {
        if self.is_empty() {
            return Err(SemanticsError::EmptyTable);
        }
        if k == 0 || k > self.depth {
            return Err(SemanticsError::InvalidDepth {
                k,
                depth: self.depth,
            });
        }
        Ok(())
    }

    /// Probability mass of entry `e` within the first `k` ranks.
    fn top_k_mass(&self, entry: usize, k: usize) -> f64 {
        self.rows[entry][..k].iter().sum()
    }
}

/// The winner of one rank under [`u_k_ranks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankAssignment {
    /// 1-based rank.
    pub rank: usize,
    /// Winning entry id.
    pub entry_id: i64,
    /// The winner's probability at this rank.
    pub probability: f64,
    /// False when no entry had positive probability at this rank, in which
    /// case the winner is the bare tie-break choice.
    pub supported: bool,
}

/// An entry paired with the score that ranked it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredEntry {
    /// Entry id.
    pub entry_id: i64,
    /// Method-dependent score (top-`k` mass or expected rank).
    pub score: f64,
}

/// Result of [`global_top_k`].
#[derive(Debug, Clone, PartialEq)]
pub struct TopKResult {
    /// Selected entries, best first.
    pub entries: Vec<ScoredEntry>,
    /// True when the table had fewer than `k` entries, in which case all of
    /// them are returned.
    pub short: bool,
}

/// For each rank `1..=k`, the entry most likely to occupy exactly that
/// rank; ties break toward the smaller entry id. The same entry may win
/// several ranks and an all-zero rank column still yields its tie-break
/// winner, flagged unsupported.
pub fn u_k_ranks(table: &RankTable, k: usize) -> Result<Vec<RankAssignment>, SemanticsError> {
    table.check_depth(k)?;
    let mut out = Vec::with_capacity(k);
    for rank_index in 0..k {
        let mut best_entry = 0usize;
        let mut best_value = f64::NEG_INFINITY;
        for (entry, row) in table.rows.iter().enumerate() {
            let value = row[rank_index];
            let better = value > best_value
                || (value == best_value && table.ids[entry] < table.ids[best_entry]);
            if better {
                best_entry = entry;
                best_value = value;
            }
        }
        out.push(RankAssignment {
            rank: rank_index + 1,
            entry_id: table.ids[best_entry],
            probability: best_value,
            supported: best_value > 0.0,
        });
    }
    Ok(out)
}

/// All entries whose probability of ranking within the top `k` strictly
/// exceeds `threshold`, in ascending entry id.
pub fn pt_k(
    table: &RankTable,
    k: usize,
    threshold: f64,
) -> Result<Vec<ScoredEntry>, SemanticsError> {
    table.check_depth(k)?;
    if !(0.0..=1.0).contains(&threshold) || threshold.is_nan() {
        return Err(SemanticsError::ThresholdOutOfRange { value: threshold });
    }
    let mut out: Vec<ScoredEntry> = (0..table.len())
        .filter_map(|entry| {
            let score = table.top_k_mass(entry, k);
            (score > threshold).then_some(ScoredEntry {
                entry_id: table.ids[entry],
                score,
            })
        })
        .collect();
    out.sort_by_key(|e| e.entry_id);
    Ok(out)
}

/// The `k` entries with the highest probability of ranking within the top
/// `k`, best first; ties break toward the smaller entry id. A table with
/// fewer than `k` entries yields all of them with the `short` flag set.
pub fn global_top_k(table: &RankTable, k: usize) -> Result<TopKResult, SemanticsError> {
    table.check_depth(k)?;
    let mut scored: Vec<ScoredEntry> = (0..table.len())
        .map(|entry| ScoredEntry {
            entry_id: table.ids[entry],
            score: table.top_k_mass(entry, k),
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("top-k masses are finite")
            .then(a.entry_id.cmp(&b.entry_id))
    });
    let short = scored.len() < k;
    scored.truncate(k);
    Ok(TopKResult {
        entries: scored,
        short,
    })
}

/// Entries ordered by conditional expected rank
/// `Σ_i (i + 1) · row[i] / Σ_i row[i]`, ascending; an entry with no mass at
/// all scores `+∞` and sorts last. Ties break toward the smaller entry id.
///
/// Meaningful only on an untruncated table — one computed with depth at
/// least the number of objects, so no rank mass has been dropped.
pub fn expected_rank(table: &RankTable) -> Result<Vec<ScoredEntry>, SemanticsError> {
    if table.is_empty() {
        return Err(SemanticsError::EmptyTable);
    }
    let mut scored: Vec<ScoredEntry> = table
        .rows
        .iter()
        .zip(&table.ids)
        .map(|(row, &entry_id)| {
            let mass: f64 = row.iter().sum();
            let score = if mass > 0.0 {
                row.iter()
                    .enumerate()
                    .map(|(i, &p)| (i + 1) as f64 * p)
                    .sum::<f64>()
                    / mass
            } else {
                f64::INFINITY
            };
            ScoredEntry { entry_id, score }
        })
        .collect();
    scored.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .expect("scores are never NaN")
            .then(a.entry_id.cmp(&b.entry_id))
    });
    Ok(scored)
}

/// Serializable summary of one semantics computation, as emitted by the
/// command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemanticsReport {
    /// Method tag: `ukranks`, `ptk`, `globaltopk`, or `expectedrank`.
    pub method: String,
    /// Entry level the table was built at.
    pub level: TableLevel,
    /// Selected entry ids, in method order.
    pub ranking: Vec<i64>,
    /// Score per selected entry (winning probability, top-`k` mass, or
    /// expected rank).
    pub scores: Vec<f64>,
    /// Rank depth the method was evaluated at.
    pub k: usize,
    /// Threshold, for `ptk` only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// 1-based ranks whose winner had zero probability, for `ukranks` only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unsupported_ranks: Option<Vec<usize>>,
    /// True when fewer than `k` entries existed, for `globaltopk` only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub short: Option<bool>,
}

impl SemanticsReport {
    /// Report for a [`u_k_ranks`] result.
    pub fn from_ukranks(level: TableLevel, assignments: &[RankAssignment], k: usize) -> Self {
        Self {
            method: "ukranks".to_owned(),
            level,
            ranking: assignments.iter().map(|a| a.entry_id).collect(),
            scores: assignments.iter().map(|a| a.probability).collect(),
            k,
            threshold: None,
            unsupported_ranks: Some(
                assignments
                    .iter()
                    .filter(|a| !a.supported)
                    .map(|a| a.rank)
                    .collect(),
            ),
            short: None,
        }
    }

    /// Report for a [`pt_k`] result.
    pub fn from_ptk(level: TableLevel, entries: &[ScoredEntry], k: usize, threshold: f64) -> Self {
        Self {
            method: "ptk".to_owned(),
            level,
            ranking: entries.iter().map(|e| e.entry_id).collect(),
            scores: entries.iter().map(|e| e.score).collect(),
            k,
            threshold: Some(threshold),
            unsupported_ranks: None,
            short: None,
        }
    }

    /// Report for a [`global_top_k`] result.
    pub fn from_global_top_k(level: TableLevel, result: &TopKResult, k: usize) -> Self {
        Self {
            method: "globaltopk".to_owned(),
            level,
            ranking: result.entries.iter().map(|e| e.entry_id).collect(),
            scores: result.entries.iter().map(|e| e.score).collect(),
            k,
            threshold: None,
            unsupported_ranks: None,
            short: Some(result.short),
        }
    }

    /// Report for an [`expected_rank`] result.
    pub fn from_expected_rank(level: TableLevel, entries: &[ScoredEntry], k: usize) -> Self {
        Self {
            method: "expectedrank".to_owned(),
            level,
            ranking: entries.iter().map(|e| e.entry_id).collect(),
            scores: entries.iter().map(|e| e.score).collect(),
            k,
            threshold: None,
            unsupported_ranks: None,
            short: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1_table() -> RankTable {
        RankTable::new(
            TableLevel::Object,
            vec![0, 1],
            vec![vec![0.6, 0.4], vec![0.4, 0.6]],
        )
        .unwrap()
    }

    #[test]
    fn ukranks_on_worked_example() {
        let ranks = u_k_ranks(&e1_table(), 2).unwrap();
        assert_eq!(ranks.len(), 2);
        assert_eq!(ranks[0].entry_id, 0);
        assert_eq!(ranks[0].probability, 0.6);
        assert!(ranks[0].supported);
        assert_eq!(ranks[1].entry_id, 1);
        assert_eq!(ranks[1].probability, 0.6);
    }

    #[test]
    fn ukranks_all_zero_column_flags_unsupported() {
        let table = RankTable::new(TableLevel::Object, vec![3], vec![vec![1.0, 0.0]]).unwrap();
        let ranks = u_k_ranks(&table, 2).unwrap();
        assert_eq!(ranks[0].entry_id, 3);
        assert!(ranks[0].supported);
        assert_eq!(ranks[1].entry_id, 3);
        assert!(!ranks[1].supported);
    }

    #[test]
    fn ukranks_ties_break_to_smaller_id() {
        let table = RankTable::new(
            TableLevel::Object,
            vec![9, 4],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap();
        let ranks = u_k_ranks(&table, 2).unwrap();
        assert_eq!(ranks[0].entry_id, 4);
        assert_eq!(ranks[1].entry_id, 4);
    }

    #[test]
    fn ukranks_invariant_under_column_scaling() {
        let table = RankTable::new(
            TableLevel::Object,
            vec![0, 1, 2],
            vec![
                vec![0.5, 0.1, 0.2],
                vec![0.3, 0.4, 0.1],
                vec![0.2, 0.3, 0.6],
            ],
        )
        .unwrap();
        let scaled = RankTable::new(
            TableLevel::Object,
            vec![0, 1, 2],
            vec![
                vec![0.5 * 3.0, 0.1 * 0.25, 0.2 * 7.0],
                vec![0.3 * 3.0, 0.4 * 0.25, 0.1 * 7.0],
                vec![0.2 * 3.0, 0.3 * 0.25, 0.6 * 7.0],
            ],
        )
        .unwrap();
        let a: Vec<i64> = u_k_ranks(&table, 3)
            .unwrap()
            .iter()
            .map(|r| r.entry_id)
            .collect();
        let b: Vec<i64> = u_k_ranks(&scaled, 3)
            .unwrap()
            .iter()
            .map(|r| r.entry_id)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn ukranks_rejects_empty_and_bad_depth() {
        let empty = RankTable::new(TableLevel::Object, vec![], vec![]).unwrap();
        assert_eq!(u_k_ranks(&empty, 1), Err(SemanticsError::EmptyTable));
        assert!(matches!(
            u_k_ranks(&e1_table(), 3),
            Err(SemanticsError::InvalidDepth { k: 3, depth: 2 })
        ));
        assert!(matches!(
            u_k_ranks(&e1_table(), 0),
            Err(SemanticsError::InvalidDepth { .. })
        ));
    }

    #[test]
    fn ptk_on_worked_example() {
        let selected = pt_k(&e1_table(), 1, 0.5).unwrap();
        assert_eq!(selected.len(), 1);
        assert_eq!(selected[0].entry_id, 0);
        assert_eq!(selected[0].score, 0.6);
    }

    #[test]
    fn ptk_threshold_one_selects_nothing() {
        assert!(pt_k(&e1_table(), 2, 1.0).unwrap().is_empty());
    }

    #[test]
    fn ptk_threshold_zero_selects_everything_with_mass() {
        let table = RankTable::new(
            TableLevel::Object,
            vec![0, 1, 2],
            vec![vec![0.6, 0.4], vec![0.4, 0.6], vec![0.0, 0.0]],
        )
        .unwrap();
        let ids: Vec<i64> = pt_k(&table, 2, 0.0)
            .unwrap()
            .iter()
            .map(|e| e.entry_id)
            .collect();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn ptk_rejects_bad_threshold() {
        assert!(matches!(
            pt_k(&e1_table(), 1, 1.5),
            Err(SemanticsError::ThresholdOutOfRange { .. })
        ));
        assert!(matches!(
            pt_k(&e1_table(), 1, f64::NAN),
            Err(SemanticsError::ThresholdOutOfRange { .. })
        ));
    }

    #[test]
    fn global_top_k_on_worked_example() {
        let result = global_top_k(&e1_table(), 1).unwrap();
        assert!(!result.short);
        assert_eq!(result.entries.len(), 1);
        assert_eq!(result.entries[0].entry_id, 0);
        assert_eq!(result.entries[0].score, 0.6);
    }

    #[test]
    fn global_top_k_full_depth_orders_by_id_on_ties() {
        let result = global_top_k(&e1_table(), 2).unwrap();
        let ids: Vec<i64> = result.entries.iter().map(|e| e.entry_id).collect();
        // Both objects have top-2 mass 1.0; the smaller id leads.
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn global_top_k_short_table_is_flagged() {
        let table = RankTable::new(
            TableLevel::Object,
            vec![0, 1],
            vec![vec![0.6, 0.4, 0.0], vec![0.4, 0.6, 0.0]],
        )
        .unwrap();
        let result = global_top_k(&table, 3).unwrap();
        assert!(result.short);
        assert_eq!(result.entries.len(), 2);
    }

    #[test]
    fn ptk_at_zero_contains_global_top_k() {
        let table = RankTable::new(
            TableLevel::Object,
            vec![0, 1, 2, 3],
            vec![
                vec![0.5, 0.2],
                vec![0.3, 0.3],
                vec![0.2, 0.4],
                vec![0.0, 0.1],
            ],
        )
        .unwrap();
        let selected: std::collections::BTreeSet<i64> = pt_k(&table, 2, 0.0)
            .unwrap()
            .iter()
            .map(|e| e.entry_id)
            .collect();
        let top: std::collections::BTreeSet<i64> = global_top_k(&table, 2)
            .unwrap()
            .entries
            .iter()
            .map(|e| e.entry_id)
            .collect();
        assert!(top.is_subset(&selected));
    }

    #[test]
    fn expected_rank_on_worked_example() {
        let scored = expected_rank(&e1_table()).unwrap();
        assert_eq!(scored[0].entry_id, 0);
        assert!((scored[0].score - 1.4).abs() < 1e-12);
        assert_eq!(scored[1].entry_id, 1);
        assert!((scored[1].score - 1.6).abs() < 1e-12);
    }

    #[test]
    fn expected_rank_certain_chain_is_exact() {
        let table = RankTable::new(
            TableLevel::Object,
            vec![0, 1],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let scored = expected_rank(&table).unwrap();
        assert_eq!(scored[0].score, 1.0);
        assert_eq!(scored[1].score, 2.0);
    }

    #[test]
    fn expected_rank_zero_mass_sorts_last() {
        let table = RankTable::new(
            TableLevel::Object,
            vec![0, 1, 2],
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let scored = expected_rank(&table).unwrap();
        let ids: Vec<i64> = scored.iter().map(|e| e.entry_id).collect();
        assert_eq!(ids, vec![2, 1, 0]);
        assert!(scored[2].score.is_infinite());
    }

    #[test]
    fn reports_serialize_with_expected_shape() {
        let ranks = u_k_ranks(&e1_table(), 2).unwrap();
        let report = SemanticsReport::from_ukranks(TableLevel::Object, &ranks, 2);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["method"], "ukranks");
        assert_eq!(json["level"], "object");
        assert_eq!(json["ranking"], serde_json::json!([0, 1]));
        assert_eq!(json["unsupported_ranks"], serde_json::json!([]));
        assert!(json.get("threshold").is_none());
    }

    #[test]
    fn table_construction_rejects_ragged_rows() {
        assert_eq!(
            RankTable::new(TableLevel::Object, vec![0, 1], vec![vec![1.0], vec![]]),
            Err(SemanticsError::RaggedRows)
        );
        assert_eq!(
            RankTable::new(TableLevel::Object, vec![0], vec![]),
            Err(SemanticsError::RaggedRows)
        );
    }
}
