//! On-disk formats: run records (CSV), fitted laws (JSON) and plot series (CSV or JSON).

mod lawfile;
mod runfile;
mod series;

pub use lawfile::{emit_law, parse_law, read_law, write_law, LAW_FORMAT_VERSION};
pub use runfile::{ingest, parse_runfile, render_runfile, write_runfile, RunSet, Units};
pub use series::{emit_series, format_number, render_series, Cell, SeriesFormat, Table};
