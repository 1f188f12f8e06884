use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::clean::{impute_missing, normalize_labels, RawTable};
use super::record::{merge_tables, RecordTable, COLUMNS};
use crate::error::{Error, Result};

/// The six CICIoV2024 decimal files, in merge order, with their source tags.
pub const CANONICAL_FILES: [(&str, &str); 6] = [
    ("decimal_benign.csv", "benign"),
    ("decimal_DoS.csv", "DoS"),
    ("decimal_spoofing-GAS.csv", "spoofing-GAS"),
    ("decimal_spoofing-RPM.csv", "spoofing-RPM"),
    ("decimal_spoofing-SPEED.csv", "spoofing-SPEED"),
    ("decimal_spoofing-STEERING_WHEEL.csv", "spoofing-STEERING_WHEEL"),
];

/// Environment variable naming the dataset directory when no flag is given.
pub const DATA_DIR_ENV: &str = "CANGUARD_DATA_DIR";

/// Reads the raw cells of a decimal CSV. Header names are matched after
/// whitespace stripping; columns may appear in any order.
pub fn read_raw_csv<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?
        .clone();
    let positions = COLUMNS
        .iter()
        .map(|&name| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Schema {
                    column: name.to_string(),
                })
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut table = RawTable::new();
    let mut record = csv::StringRecord::new();
    let mut row_no = 0usize;
    loop {
        row_no += 1;
        let more = rdr.read_record(&mut record).map_err(|e| Error::Parse {
            row: row_no,
            column: "*".into(),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let mut cells: [Option<&str>; 12] = [None; 12];
        for (slot, &pos) in cells.iter_mut().zip(&positions) {
            let value = record.get(pos).unwrap_or("");
            *slot = if value.is_empty() { None } else { Some(value) };
        }
        table.push_row(&cells);
    }
    Ok(table)
}

/// Parses one decimal CSV file: raw read, label normalization, imputation,
/// then typing.
pub fn parse_decimal_csv(path: &Path, source_tag: &str) -> Result<RecordTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_decimal_reader(BufReader::new(file), source_tag)
}

pub fn parse_decimal_reader<R: Read>(reader: R, source_tag: &str) -> Result<RecordTable> {
    let raw = read_raw_csv(reader)?;
    let normalized = normalize_labels(&raw)?;
    let imputed = impute_missing(&normalized)?;
    if imputed.cells_imputed > 0 {
        log::warn!(
            "{source_tag}: imputed {} missing cells",
            imputed.cells_imputed
        );
    }
    imputed.table.to_records(source_tag)
}

/// Writes a table in the canonical decimal layout with LF line endings.
pub fn write_decimal_csv<W: Write>(table: &RecordTable, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let to_err = |e: csv::Error| Error::Format(e.to_string());
    wtr.write_record(COLUMNS).map_err(to_err)?;
    let mut fields: Vec<String> = Vec::with_capacity(12);
    for record in table.records() {
        fields.clear();
        fields.push(record.id.to_string());
        fields.extend(record.data.iter().map(u8::to_string));
        fields.push(record.label.to_string());
        fields.push(record.category.to_string());
        fields.push(record.specific_class.to_string());
        wtr.write_record(&fields).map_err(to_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::Format(format!("flush failed: {e}")))?;
    Ok(())
}

pub fn write_decimal_file(table: &RecordTable, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_decimal_csv(table, BufWriter::new(file))
}

/// Resolves the dataset directory: the explicit flag wins, then the
/// environment variable.
pub fn resolve_data_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
}

/// Loads and merges the six canonical files from `dir`. Files are parsed in
/// parallel; the merge order is fixed.
pub fn load_dataset_dir(dir: &Path) -> Result<RecordTable> {
    let missing: Vec<String> = CANONICAL_FILES
        .iter()
        .filter(|(name, _)| !dir.join(name).is_file())
        .map(|(name, _)| name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingInputs {
            dir: dir.to_path_buf(),
            expected: CANONICAL_FILES.iter().map(|(n, _)| n.to_string()).collect(),
        });
    }
    let tables = CANONICAL_FILES
        .par_iter()
        .map(|(name, tag)| parse_decimal_csv(&dir.join(name), tag))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_tables(&tables))
}
