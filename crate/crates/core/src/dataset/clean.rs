//! Text-level cleaning that runs before records are typed.
//!
//! Cells are interned: a 1.4M-row log only has a few hundred distinct cell
//! strings, so each cell is stored as an index into a shared value pool.

use std::collections::{BTreeMap, HashMap};

use super::record::{
    check_closure, CanFrameRecord, Category, Label, RecordTable, SpecificClass, COLUMNS,
    MAX_CAN_ID,
};
use crate::error::{Error, Result};

const WIDTH: usize = COLUMNS.len();
const NUMERIC_COLUMNS: usize = 9;

/// Untyped rows in canonical column order. `None` marks a missing cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawTable {
    cells: Vec<Option<u32>>,
    pool: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl RawTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row. Empty strings are stored as given; normalization
    /// decides whether they count as missing.
    pub fn push_row<S: AsRef<str>>(&mut self, row: &[Option<S>; WIDTH]) {
        for cell in row {
            let idx = cell.as_ref().map(|s| self.intern(s.as_ref()));
            self.cells.push(idx);
        }
    }

    fn intern(&mut self, value: &str) -> u32 {
        if let Some(&i) = self.lookup.get(value) {
            return i;
        }
        let i = self.pool.len() as u32;
        self.pool.push(value.to_string());
        self.lookup.insert(value.to_string(), i);
        i
    }

    pub fn len(&self) -> usize {
        self.cells.len() / WIDTH
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, row: usize, column: usize) -> Option<&str> {
        self.cells[row * WIDTH + column].map(|i| self.pool[i as usize].as_str())
    }

    pub fn missing_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    fn rows(&self) -> impl Iterator<Item = &[Option<u32>]> {
        self.cells.chunks_exact(WIDTH)
    }

    /// Rebuilds the table with every pooled value passed through `map`,
    /// choosing the mapping by column. Values mapping to `None` become missing.
    fn map_values(&self, map: impl Fn(usize, &str) -> Option<String>) -> RawTable {
        let mut out = RawTable::new();
        let mut memo: HashMap<(bool, u32), Option<u32>> = HashMap::new();
        out.cells.reserve(self.cells.len());
        for (k, cell) in self.cells.iter().enumerate() {
            let column = k % WIDTH;
            let mapped = cell.and_then(|i| {
                let key = (column < NUMERIC_COLUMNS, i);
                if let Some(&m) = memo.get(&key) {
                    return m;
                }
                let m = map(column, &self.pool[i as usize]).map(|v| out.intern(&v));
                memo.insert(key, m);
                m
            });
            out.cells.push(mapped);
        }
        out
    }

    /// Types every row. Fails on any missing, non-integer or out-of-range
    /// cell and on taxonomy violations. Row numbers in errors are 1-based
    /// data rows (the header is not counted).
    pub fn to_records(&self, source_tag: &str) -> Result<RecordTable> {
        let mut records = Vec::with_capacity(self.len());
        // Parse each pooled value at most once per column kind.
        let mut ints: HashMap<u32, Option<i64>> = HashMap::new();
        for (r, row) in self.rows().enumerate() {
            let row_no = r + 1;
            let mut numbers = [0i64; NUMERIC_COLUMNS];
            for (c, slot) in numbers.iter_mut().enumerate() {
                let idx = row[c].ok_or_else(|| Error::Parse {
                    row: row_no,
                    column: COLUMNS[c].to_string(),
                    message: "missing value".into(),
                })?;
                let parsed = *ints
                    .entry(idx)
                    .or_insert_with(|| self.pool[idx as usize].parse::<i64>().ok());
                *slot = parsed.ok_or_else(|| Error::Parse {
                    row: row_no,
                    column: COLUMNS[c].to_string(),
                    message: format!("`{}` is not an integer", self.pool[idx as usize]),
                })?;
            }
            if !(0..=i64::from(MAX_CAN_ID)).contains(&numbers[0]) {
                return Err(Error::Parse {
                    row: row_no,
                    column: "ID".into(),
                    message: format!("{} outside [0, {MAX_CAN_ID}]", numbers[0]),
                });
            }
            let mut data = [0u8; 8];
            for (k, &v) in numbers[1..].iter().enumerate() {
                data[k] = u8::try_from(v).map_err(|_| Error::Parse {
                    row: row_no,
                    column: COLUMNS[1 + k].to_string(),
                    message: format!("{v} outside [0, 255]"),
                })?;
            }
            let text = |c: usize| -> Result<&str> {
                row[c]
                    .map(|i| self.pool[i as usize].as_str())
                    .ok_or_else(|| Error::Parse {
                        row: row_no,
                        column: COLUMNS[c].to_string(),
                        message: "missing value".into(),
                    })
            };
            let label: Label = parse_enum(text(9)?, row_no)?;
            let category: Category = parse_enum(text(10)?, row_no)?;
            let specific: SpecificClass = parse_enum(text(11)?, row_no)?;
            check_closure(label, category, specific).map_err(|message| Error::Label {
                row: row_no,
                value: format!("{label}/{category}/{specific}"),
                message,
            })?;
            records.push(CanFrameRecord {
                id: numbers[0] as u16,
                data,
                label,
                category,
                specific_class: specific,
            });
        }
        Ok(RecordTable::from_records(records, source_tag))
    }
}

fn parse_enum<T: std::str::FromStr<Err = String>>(value: &str, row: usize) -> Result<T> {
    value.parse().map_err(|message| Error::Label {
        row,
        value: value.to_string(),
        message,
    })
}

/// Trims every cell, uppercases the three label columns, and turns
/// whitespace-only cells into missing ones. Present label values are checked
/// against the taxonomy, including closure between the columns present.
pub fn normalize_labels(table: &RawTable) -> Result<RawTable> {
    let out = table.map_values(|column, value| {
        let trimmed = value.trim();
        if trimmed.is_empty() {
            None
        } else if column >= NUMERIC_COLUMNS {
            Some(trimmed.to_uppercase())
        } else {
            Some(trimmed.to_string())
        }
    });
    for (r, row) in out.rows().enumerate() {
        let row_no = r + 1;
        let get = |c: usize| row[c].map(|i| out.pool[i as usize].as_str());
        let label: Option<Label> = get(9).map(|v| parse_enum(v, row_no)).transpose()?;
        let category: Option<Category> = get(10).map(|v| parse_enum(v, row_no)).transpose()?;
        let specific: Option<SpecificClass> =
            get(11).map(|v| parse_enum(v, row_no)).transpose()?;
        let violation = match (label, category, specific) {
            (Some(l), Some(c), _) if c.label() != l => {
                Some(format!("label {l} inconsistent with category {c}"))
            }
            (_, Some(c), Some(s)) if s.category() != c => Some(format!(
                "specific_class {s} inconsistent with category {c}"
            )),
            (Some(l), None, Some(s)) if s.label() != l => {
                Some(format!("label {l} inconsistent with specific_class {s}"))
            }
            _ => None,
        };
        if let Some(message) = violation {
            return Err(Error::Label {
                row: row_no,
                value: [get(9), get(10), get(11)]
                    .iter()
                    .map(|v| v.unwrap_or(""))
                    .collect::<Vec<_>>()
                    .join("/"),
                message,
            });
        }
    }
    Ok(out)
}

/// Result of [`impute_missing`].
#[derive(Clone, Debug, PartialEq)]
pub struct Imputed {
    pub table: RawTable,
    pub cells_imputed: usize,
}

/// Fills missing numeric cells with the column median and missing label
/// cells with the column mode, both computed over the observed values.
///
/// An even-sized median is the mean of the two middle values, rounded half
/// up to stay in the integer domain. Mode ties go to the lexicographically
/// smallest value.
pub fn impute_missing(table: &RawTable) -> Result<Imputed> {
    let missing = table.missing_cells();
    if missing == 0 {
        return Ok(Imputed {
            table: table.clone(),
            cells_imputed: 0,
        });
    }
    let mut out = table.clone();
    for column in 0..WIDTH {
        let has_gap = table.rows().any(|row| row[column].is_none());
        if !has_gap {
            continue;
        }
        let fill = if column < NUMERIC_COLUMNS {
            column_median(table, column)?.to_string()
        } else {
            column_mode(table, column)?
        };
        let idx = out.intern(&fill);
        for row in out.cells.chunks_exact_mut(WIDTH) {
            if row[column].is_none() {
                row[column] = Some(idx);
            }
        }
    }
    Ok(Imputed {
        table: out,
        cells_imputed: missing,
    })
}

fn column_median(table: &RawTable, column: usize) -> Result<i64> {
    // Values are small integers; a counted histogram avoids sorting millions.
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    let mut total = 0usize;
    for (r, row) in table.rows().enumerate() {
        if let Some(i) = row[column] {
            let raw = &table.pool[i as usize];
            let v = raw.trim().parse::<i64>().map_err(|_| Error::Parse {
                row: r + 1,
                column: COLUMNS[column].to_string(),
                message: format!("`{raw}` is not an integer"),
            })?;
            *counts.entry(v).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Imputation {
            column: COLUMNS[column].to_string(),
        });
    }
    let nth = |n: usize| -> i64 {
        let mut seen = 0;
        for (&v, &c) in &counts {
            seen += c;
            if seen > n {
                return v;
            }
        }
        unreachable!("rank within total")
    };
    if total % 2 == 1 {
        Ok(nth(total / 2))
    } else {
        let (lo, hi) = (nth(total / 2 - 1), nth(total / 2));
        // (lo + hi) / 2 rounded half up
        Ok((lo + hi).div_euclid(2) + (lo + hi).rem_euclid(2))
    }
}

fn column_mode(table: &RawTable, column: usize) -> Result<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for row in table.rows() {
        if let Some(i) = row[column] {
            *counts.entry(table.pool[i as usize].as_str()).or_insert(0) += 1;
        }
    }
    // BTreeMap iterates in ascending order; keep the first maximum.
    let mut best: Option<(&str, usize)> = None;
    for (v, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((v, c));
        }
    }
    best.map(|(v, _)| v.to_string())
        .ok_or_else(|| Error::Imputation {
            column: COLUMNS[column].to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cells: [&str; 12]) -> [Option<&str>; 12] {
        cells.map(|c| if c == "?" { None } else { Some(c) })
    }

    fn benign(id: &str, b0: &str) -> [Option<&'static str>; 12] {
        let id: &'static str = Box::leak(id.to_string().into_boxed_str());
        let b0: &'static str = Box::leak(b0.to_string().into_boxed_str());
        row([
            id, b0, "0", "0", "0", "0", "0", "0", "0", "BENIGN", "BENIGN", "BENIGN",
        ])
    }

    #[test]
    fn normalize_trims_and_uppercases() {
        let mut t = RawTable::new();
        t.push_row(&row([
            " 513", "1 ", "0", "0", "0", "0", "0", "0", "0", " attack", "SPOOFING", " rpm",
        ]));
        let n = normalize_labels(&t).unwrap();
        assert_eq!(n.get(0, 0), Some("513"));
        assert_eq!(n.get(0, 1), Some("1"));
        assert_eq!(n.get(0, 9), Some("ATTACK"));
        assert_eq!(n.get(0, 11), Some("RPM"));
        let rec = n.to_records("x").unwrap();
        assert_eq!(rec.records()[0].specific_class, SpecificClass::Rpm);
        assert_eq!(rec.records()[0].category, Category::Spoofing);
        assert_eq!(normalize_labels(&n).unwrap(), n);
    }

    #[test]
    fn benign_label_normalized() {
        let mut t = RawTable::new();
        t.push_row(&row([
            "65", "96", "0", "0", "0", "0", "0", "0", "0", " benign ", "benign", "Benign",
        ]));
        let n = normalize_labels(&t).unwrap();
        assert_eq!(n.get(0, 9), Some("BENIGN"));
    }

    #[test]
    fn closure_violation_is_label_error() {
        let mut t = RawTable::new();
        t.push_row(&row([
            "1", "0", "0", "0", "0", "0", "0", "0", "0", "ATTACK", "SPOOFING", "DOS",
        ]));
        match normalize_labels(&t) {
            Err(Error::Label { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected label error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_label_error() {
        let mut t = RawTable::new();
        t.push_row(&row([
            "1", "0", "0", "0", "0", "0", "0", "0", "0", "ATTACK", "FUZZY", "DOS",
        ]));
        match normalize_labels(&t) {
            Err(Error::Label { value, .. }) => assert_eq!(value, "FUZZY"),
            other => panic!("expected label error, got {other:?}"),
        }
    }

    #[test]
    fn median_imputation() {
        let mut t = RawTable::new();
        t.push_row(&benign("1", "0"));
        t.push_row(&benign("?", "0"));
        t.push_row(&benign("3", "0"));
        let imputed = impute_missing(&normalize_labels(&t).unwrap()).unwrap();
        assert_eq!(imputed.cells_imputed, 1);
        assert_eq!(imputed.table.get(1, 0), Some("2"));
    }

    #[test]
    fn even_median_rounds_half_up() {
        let mut t = RawTable::new();
        t.push_row(&benign("1", "0"));
        t.push_row(&benign("2", "0"));
        t.push_row(&benign("?", "0"));
        let imputed = impute_missing(&t).unwrap();
        assert_eq!(imputed.table.get(2, 0), Some("2"));
    }

    #[test]
    fn mode_imputation() {
        let mut t = RawTable::new();
        t.push_row(&benign("1", "0"));
        t.push_row(&benign("2", "0"));
        let mut r = benign("3", "0");
        r[9] = None;
        t.push_row(&r);
        let imputed = impute_missing(&t).unwrap();
        assert_eq!(imputed.table.get(2, 9), Some("BENIGN"));
        assert!(imputed.table.to_records("x").is_ok());
    }

    #[test]
    fn complete_table_unchanged() {
        let mut t = RawTable::new();
        t.push_row(&benign("65", "96"));
        let imputed = impute_missing(&t).unwrap();
        assert_eq!(imputed.cells_imputed, 0);
        assert_eq!(imputed.table, t);
    }

    #[test]
    fn entirely_missing_column_fails() {
        let mut t = RawTable::new();
        let mut r = benign("1", "0");
        r[3] = None;
        t.push_row(&r);
        t.push_row(&r);
        match impute_missing(&t) {
            Err(Error::Imputation { column }) => assert_eq!(column, "DATA_2"),
            other => panic!("expected imputation error, got {other:?}"),
        }
    }

    #[test]
    fn non_integer_cell_reports_row() {
        let mut t = RawTable::new();
        t.push_row(&benign("1", "0"));
        t.push_row(&benign("1", "x7"));
        match t.to_records("x") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "DATA_0");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn byte_out_of_range_rejected() {
        let mut t = RawTable::new();
        t.push_row(&benign("1", "256"));
        assert!(matches!(t.to_records("x"), Err(Error::Parse { .. })));
    }
}
