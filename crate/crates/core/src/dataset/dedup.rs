use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::record::{CanFrameRecord, Category, RecordTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuplicateRow {
    pub category: Category,
    pub duplicate_count: usize,
    pub total_records: usize,
    pub duplicate_fraction: f64,
    pub unique_messages: usize,
}

/// Per-category duplicate statistics.
///
/// Because the duplicate key includes the labels, a frame can only repeat
/// within its own category, so `deduplicated_total` always equals the sum of
/// per-category unique counts. `unique_frames_ignoring_labels` counts
/// distinct (ID, payload) pairs and exposes frames that occur under more
/// than one label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub rows: Vec<DuplicateRow>,
    pub deduplicated_total: usize,
    pub unique_frames_ignoring_labels: usize,
}

impl DuplicateReport {
    pub fn row(&self, category: Category) -> Option<&DuplicateRow> {
        self.rows.iter().find(|r| r.category == category)
    }
}

pub fn duplicate_report(table: &RecordTable) -> DuplicateReport {
    let mut seen: HashSet<&CanFrameRecord> = HashSet::with_capacity(8192);
    let mut frames: HashSet<(u16, [u8; 8])> = HashSet::with_capacity(8192);
    let mut totals: HashMap<Category, (usize, usize)> = HashMap::new();
    for record in table.records() {
        let entry = totals.entry(record.category).or_insert((0, 0));
        entry.0 += 1;
        if seen.insert(record) {
            entry.1 += 1;
        }
        frames.insert((record.id, record.data));
    }
    let rows = Category::ALL
        .iter()
        .filter_map(|&category| {
            totals.get(&category).map(|&(total, unique)| DuplicateRow {
                category,
                duplicate_count: total - unique,
                total_records: total,
                duplicate_fraction: (total - unique) as f64 / total as f64,
                unique_messages: unique,
            })
        })
        .collect();
    DuplicateReport {
        rows,
        deduplicated_total: seen.len(),
        unique_frames_ignoring_labels: frames.len(),
    }
}

/// Keeps the first occurrence of every distinct 12-field row, preserving
/// relative order.
pub fn deduplicate(table: &RecordTable) -> RecordTable {
    let mut seen: HashSet<CanFrameRecord> = HashSet::with_capacity(8192);
    let mut out = RecordTable::new();
    for (record, tag) in table.iter() {
        if seen.insert(*record) {
            out.push(*record, tag);
        }
    }
    out
}
