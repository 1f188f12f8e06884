use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest valid 11-bit standard CAN identifier.
pub const MAX_CAN_ID: u16 = 2047;

/// Feature names in model-input order.
pub const FEATURE_NAMES: [&str; 9] = [
    "ID", "DATA_0", "DATA_1", "DATA_2", "DATA_3", "DATA_4", "DATA_5", "DATA_6", "DATA_7",
];

/// The twelve CSV columns, in canonical order.
pub const COLUMNS: [&str; 12] = [
    "ID",
    "DATA_0",
    "DATA_1",
    "DATA_2",
    "DATA_3",
    "DATA_4",
    "DATA_5",
    "DATA_6",
    "DATA_7",
    "label",
    "category",
    "specific_class",
];

macro_rules! taxonomy_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(
                #[serde(rename = $text)]
                $variant,
            )+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            /// Accepts only the normalized (trimmed, uppercase) spelling.
            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "`{}` is not a valid {}",
                        other,
                        stringify!($name)
                    )),
                }
            }
        }
    };
}

taxonomy_enum!(
    /// Binary traffic label.
    Label {
        Benign => "BENIGN",
        Attack => "ATTACK",
    }
);

taxonomy_enum!(
    /// Coarse attack family.
    Category {
        Benign => "BENIGN",
        Dos => "DOS",
        Spoofing => "SPOOFING",
    }
);

taxonomy_enum!(
    /// Fine-grained class; the target of every classifier.
    SpecificClass {
        Benign => "BENIGN",
        Dos => "DOS",
        Gas => "GAS",
        Rpm => "RPM",
        Speed => "SPEED",
        SteeringWheel => "STEERING_WHEEL",
    }
);

impl Category {
    pub fn label(self) -> Label {
        match self {
            Category::Benign => Label::Benign,
            _ => Label::Attack,
        }
    }
}

impl SpecificClass {
    pub fn category(self) -> Category {
        match self {
            SpecificClass::Benign => Category::Benign,
            SpecificClass::Dos => Category::Dos,
            _ => Category::Spoofing,
        }
    }

    pub fn label(self) -> Label {
        self.category().label()
    }
}

/// Checks the three-level taxonomy for consistency.
pub(crate) fn check_closure(
    label: Label,
    category: Category,
    specific: SpecificClass,
) -> std::result::Result<(), String> {
    if category.label() != label {
        return Err(format!("label {label} inconsistent with category {category}"));
    }
    if specific.category() != category {
        return Err(format!(
            "specific_class {specific} inconsistent with category {category}"
        ));
    }
    Ok(())
}

/// One CAN message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanFrameRecord {
    pub id: u16,
    pub data: [u8; 8],
    pub label: Label,
    pub category: Category,
    pub specific_class: SpecificClass,
}

impl CanFrameRecord {
    /// Builds a record whose label and category are implied by `specific_class`.
    pub fn new(id: u16, data: [u8; 8], specific_class: SpecificClass) -> Result<Self> {
        if id > MAX_CAN_ID {
            return Err(Error::Argument(format!(
                "CAN id {id} exceeds {MAX_CAN_ID}"
            )));
        }
        Ok(Self {
            id,
            data,
            label: specific_class.label(),
            category: specific_class.category(),
            specific_class,
        })
    }

    /// The nine numeric features: ID followed by the payload bytes.
    pub fn features(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[0] = f64::from(self.id);
        for (slot, byte) in out[1..].iter_mut().zip(self.data) {
            *slot = f64::from(byte);
        }
        out
    }

    pub fn payload_sum(&self) -> u32 {
        self.data.iter().map(|&b| u32::from(b)).sum()
    }

    pub fn is_attack(&self) -> bool {
        self.label == Label::Attack
    }
}

/// An ordered collection of records, each tagged with the source it came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordTable {
    records: Vec<CanFrameRecord>,
    origins: Vec<u16>,
    sources: Vec<String>,
}

impl RecordTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// A table whose records all share one source tag.
    pub fn from_records(records: Vec<CanFrameRecord>, source_tag: &str) -> Self {
        let origins = vec![0; records.len()];
        Self {
            records,
            origins,
            sources: vec![source_tag.to_string()],
        }
    }

    pub fn push(&mut self, record: CanFrameRecord, source_tag: &str) {
        let origin = self.source_index(source_tag);
        self.records.push(record);
        self.origins.push(origin);
    }

    fn source_index(&mut self, tag: &str) -> u16 {
        match self.sources.iter().position(|s| s == tag) {
            Some(i) => i as u16,
            None => {
                self.sources.push(tag.to_string());
                (self.sources.len() - 1) as u16
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[CanFrameRecord] {
        &self.records
    }

    pub fn get(&self, index: usize) -> Option<&CanFrameRecord> {
        self.records.get(index)
    }

    pub fn source_tag(&self, index: usize) -> &str {
        &self.sources[self.origins[index] as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CanFrameRecord, &str)> {
        self.records
            .iter()
            .zip(&self.origins)
            .map(|(r, &o)| (r, self.sources[o as usize].as_str()))
    }

    /// Record counts per source tag, in first-seen order.
    pub fn source_counts(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0usize; self.sources.len()];
        for &o in &self.origins {
            counts[o as usize] += 1;
        }
        self.sources.iter().cloned().zip(counts).collect()
    }

    /// The sub-table at the given indices, in the order given.
    pub fn select(&self, indices: &[usize]) -> RecordTable {
        let mut out = RecordTable::new();
        for &i in indices {
            out.push(self.records[i], self.source_tag(i));
        }
        out
    }

    /// Row-major `n × 9` feature values.
    pub fn feature_rows(&self) -> Vec<[f64; 9]> {
        self.records.iter().map(CanFrameRecord::features).collect()
    }

    pub fn specific_classes(&self) -> Vec<SpecificClass> {
        self.records.iter().map(|r| r.specific_class).collect()
    }

    /// Count of records per specific class, for the classes present.
    pub fn class_counts(&self) -> HashMap<SpecificClass, usize> {
        let mut counts = HashMap::new();
        for r in &self.records {
            *counts.entry(r.specific_class).or_insert(0) += 1;
        }
        counts
    }
}

/// Concatenates tables in argument order.
pub fn merge_tables(tables: &[RecordTable]) -> RecordTable {
    let mut out = RecordTable::new();
    for table in tables {
        for (record, tag) in table.iter() {
            out.push(*record, tag);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u16, b0: u8, class: SpecificClass) -> CanFrameRecord {
        CanFrameRecord::new(id, [b0, 0, 0, 0, 0, 0, 0, 0], class).unwrap()
    }

    #[test]
    fn closure_is_derived_from_specific_class() {
        let r = rec(513, 1, SpecificClass::Rpm);
        assert_eq!(r.category, Category::Spoofing);
        assert_eq!(r.label, Label::Attack);
        assert!(check_closure(Label::Attack, Category::Spoofing, SpecificClass::Dos).is_err());
        assert!(check_closure(Label::Benign, Category::Dos, SpecificClass::Dos).is_err());
        assert!(check_closure(Label::Attack, Category::Dos, SpecificClass::Dos).is_ok());
    }

    #[test]
    fn id_range_enforced() {
        assert!(CanFrameRecord::new(2048, [0; 8], SpecificClass::Benign).is_err());
        assert!(CanFrameRecord::new(2047, [0; 8], SpecificClass::Benign).is_ok());
    }

    #[test]
    fn merge_preserves_order_and_length() {
        let a = RecordTable::from_records(
            vec![rec(1, 0, SpecificClass::Benign), rec(2, 0, SpecificClass::Benign)],
            "a",
        );
        let b = RecordTable::from_records(
            vec![
                rec(3, 0, SpecificClass::Dos),
                rec(4, 0, SpecificClass::Dos),
                rec(5, 0, SpecificClass::Dos),
            ],
            "b",
        );
        let merged = merge_tables(&[a.clone(), b]);
        assert_eq!(merged.len(), 5);
        let ids: Vec<u16> = merged.records().iter().map(|r| r.id).collect();
        assert_eq!(ids, vec![1, 2, 3, 4, 5]);
        assert_eq!(merged.source_tag(0), "a");
        assert_eq!(merged.source_tag(4), "b");
        assert_eq!(
            merged.source_counts(),
            vec![("a".to_string(), 2), ("b".to_string(), 3)]
        );
        assert_eq!(merge_tables(std::slice::from_ref(&a)), a);
    }

    #[test]
    fn features_order() {
        let r = CanFrameRecord::new(535, [127, 255, 127, 255, 127, 255, 127, 255], SpecificClass::Benign)
            .unwrap();
        assert_eq!(r.features()[0], 535.0);
        assert_eq!(r.features()[2], 255.0);
        assert_eq!(r.payload_sum(), 4 * 127 + 4 * 255);
    }
}
