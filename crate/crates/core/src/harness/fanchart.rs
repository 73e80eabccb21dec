use std::io::Write;

use super::backtest::BacktestReport;
use crate::error::{Error, Result};

/// Column header of the forecast for quantile level `tau`.
pub fn tau_column(tau: f64) -> String {
    format!("q{tau}")
}

/// Writes `date, actual, q<τ>...` with one row per test date.
pub fn fanchart_export<W: Write>(report: &BacktestReport, sink: W) -> Result<()> {
    if report.is_empty() {
        return Err(Error::invalid("cannot export an empty backtest report"));
    }
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["date".to_string(), "actual".to_string()];
    header.extend(report.taus.iter().map(|t| tau_column(*t)));
    w.write_record(&header)?;
    for ((date, actual), row) in report.dates.iter().zip(&report.actual).zip(&report.forecasts) {
        let mut record = vec![date.clone(), actual.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::backtest::insee_reference;

    fn report(dates: usize) -> BacktestReport {
        BacktestReport {
            taus: vec![0.05, 0.25, 0.5, 0.75, 0.95],
            dates: (0..dates).map(|i| format!("2000-Q{}", i + 1)).collect(),
            actual: (0..dates).map(|i| 0.1 * i as f64 + 0.03).collect(),
            forecasts: (0..dates).map(|i| (0..5).map(|j| j as f64 * 0.2 - 0.4 + i as f64 / 3.0).collect()).collect(),
            crossings: 0,
            mean_abs_error: None,
            mean_quad_error: None,
            coverage: vec![],
            reference: insee_reference(),
        }
    }

    #[test]
    fn shape_and_round_trip() {
        let r = report(2);
        let mut buf = Vec::new();
        fanchart_export(&r, &mut buf).unwrap();
        let mut reader = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(reader.headers().unwrap().len(), 7);
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(&row[0], r.dates[i]);
            assert_eq!(row[1].parse::<f64>().unwrap(), r.actual[i]);
            for j in 0..5 {
                assert_eq!(row[2 + j].parse::<f64>().unwrap(), r.forecasts[i][j]);
            }
        }
    }

    #[test]
    fn empty_report_is_error() {
        assert!(fanchart_export(&report(0), Vec::new()).is_err());
    }
}
