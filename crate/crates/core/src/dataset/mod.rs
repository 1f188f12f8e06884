//! Ingestion, cleaning, deduplication, splitting and synthesis of CAN frame
//! record tables in the CICIoV2024 decimal layout.

mod clean;
mod dedup;
mod io;
mod record;
mod split;
mod synth;

pub use clean::{impute_missing, normalize_labels, Imputed, RawTable};
pub use dedup::{deduplicate, duplicate_report, DuplicateReport, DuplicateRow};
pub use io::{
    load_dataset_dir, parse_decimal_csv, parse_decimal_reader, read_raw_csv, resolve_data_dir,
    write_decimal_csv, write_decimal_file, CANONICAL_FILES, DATA_DIR_ENV,
};
pub use record::{
    merge_tables, CanFrameRecord, Category, Label, RecordTable, SpecificClass, COLUMNS,
    FEATURE_NAMES, MAX_CAN_ID,
};
pub use split::{stratified_indices, stratified_split, test_size, SplitResult};
pub use synth::{generate_synthetic, ClassSynth, SynthConfig, DOS_ID, SPOOFING_IDS, SYNTH_TAG};
