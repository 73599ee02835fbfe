//! Data model, file formats, preprocessing, splitting, and batching for
//! event-sequence datasets.

mod batch;
mod io;
mod preprocess;
mod schema;
mod sequence;

pub use batch::{pad_batch, unpad_batch, PaddedBatch};
pub use io::{import_csv, load_dataset, load_schema, save_dataset, save_schema, SchemaFile};
pub use preprocess::{
    aggregate_intervals, assign_split_tags, category_counts, consolidate_rare_categories,
    normalize_time, normalize_time_with, split, truncate_recent, TimeNorm, RARE_MIN_COUNT,
};
pub use schema::{CategoricalFeature, FeatureSchema, NumericFeature, TargetKind, PAD_CODE};
pub use sequence::{Dataset, EventSequence, Split};
