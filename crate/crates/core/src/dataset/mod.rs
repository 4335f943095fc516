//! Dataset files and the plain-text instance and configuration formats.

mod binary;
mod text;
mod trajectory;

pub use binary::{
    decode_dataset, encode_dataset, read_dataset, read_sidecar, sidecar_path, write_dataset, Dataset, DatasetError,
    DatasetHeader, RecordKind, Records, Sidecar, FORMAT_VERSION, MAGIC,
};
pub use text::{format_config, format_instance, parse_config, parse_instance, TextError};
pub use trajectory::{label, Trajectory};
