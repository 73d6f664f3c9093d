//! Shared helpers for CSV/JSON artifacts.

use std::io::Write;

use crate::error::Result;

/// Full double precision in scientific notation (17 significant digits).
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `format_float` for present values, an empty field otherwise.
pub fn format_optional(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Writes a header and rows of pre-formatted fields as CSV.
pub fn write_csv<W: Write>(writer: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}
