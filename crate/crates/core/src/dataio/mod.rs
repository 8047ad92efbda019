//! Dataset container, CSV import and normalization.

mod container;
mod csv_import;
mod scaler;

pub use container::{
    decode, encode_block_header, encode_header, load, load_checkpoint, peek, save, save_checkpoint, Checkpoint,
    DatasetContainer, HeaderSummary, FORMAT_VERSION, MAGIC,
};
pub use csv_import::{export_csv, import_csv, window_count, CsvImportOptions, Split};
pub use scaler::{Direction, StandardScaler};
