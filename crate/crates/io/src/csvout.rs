//! CSV artifact writers. RFC-4180 output via the `csv` crate, with every
//! float rendered in scientific notation at 17 significant digits so values
//! survive a parse → print → parse cycle exactly.

use crate::{atomic_write, IoError};
use occluforge_solver::LossCurveRow;
use std::path::Path;

pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn rows_to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, IoError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let escape = |e: csv::Error| IoError::BadManifest(format!("csv serialization failed: {e}"));
    writer.write_record(header).map_err(escape)?;
    for row in rows {
        writer.write_record(row).map_err(escape)?;
    }
    writer
        .into_inner()
        .map_err(|e| IoError::BadManifest(format!("csv serialization failed: {e}")))
}

/// Writes per-step training losses: step index, the three position-loss
/// terms, their weighted sum, and the rotation loss (0 when not trained).
pub fn write_loss_curve_csv(path: &Path, rows: &[LossCurveRow]) -> Result<(), IoError> {
    let header = ["step", "l_mocc", "l_mshift", "l_j", "l_p", "l_rot"];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.step.to_string(),
                fmt_float(r.l_mocc),
                fmt_float(r.l_mshift),
                fmt_float(r.l_j),
                fmt_float(r.l_p),
                fmt_float(r.l_rot),
            ]
        })
        .collect();
    atomic_write(path, &rows_to_csv(&header, &body)?)
}

/// Writes a two-column name,value table (used for stats summaries).
pub fn write_named_floats_csv(path: &Path, rows: &[(String, f64)]) -> Result<(), IoError> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, value)| vec![name.clone(), fmt_float(*value)])
        .collect();
    atomic_write(path, &rows_to_csv(&["name", "value"], &body)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_curve_csv_round_trips_floats_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let rows = vec![
            LossCurveRow {
                step: 1,
                l_mocc: 1.0 / 3.0,
                l_mshift: 0.125,
                l_j: 2.5e-7,
                l_p: 0.3 + 2.5e-7,
                l_rot: 0.0,
            },
            LossCurveRow {
                step: 2,
                l_mocc: f64::MIN_POSITIVE,
                l_mshift: 1e300,
                l_j: -0.0,
                l_p: 1e300,
                l_rot: 4.0,
            },
        ];
        write_loss_curve_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,l_mocc,l_mshift,l_j,l_p,l_rot\r\n"));
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let parsed: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(parsed.len(), 2);
        let reparsed: f64 = parsed[0][1].parse().unwrap();
        assert_eq!(reparsed, 1.0 / 3.0, "17 significant digits are lossless");
        let tiny: f64 = parsed[1][1].parse().unwrap();
        assert_eq!(tiny, f64::MIN_POSITIVE);
    }

    #[test]
    fn named_floats_quote_embedded_commas() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        write_named_floats_csv(&path, &[("mean, overall".to_string(), 0.5)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"mean, overall\""));
    }
}
