//! CSV ingestion and emission of daily bars (`date,open,high,low,close`).

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{LpplError, Result};
use crate::series::{Bar, PriceSeries};

pub const CSV_HEADER: [&str; 5] = ["date", "open", "high", "low", "close"];

/// Reads a price file. Rows may come in any order; they are sorted by date.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LpplError::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(LpplError::Csv {
            line: 1,
            message: format!("expected header {:?}, got {:?}", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut bars = Vec::new();
    let mut seen: HashMap<NaiveDate, u64> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| LpplError::Csv { line, message };
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| fail(format!("bad date {:?}: {e}", &record[0])))?;
        let mut px = [0.0f64; 4];
        for (k, v) in px.iter_mut().enumerate() {
            let field = &record[k + 1];
            *v = field
                .parse()
                .map_err(|_| fail(format!("bad {} value {field:?}", CSV_HEADER[k + 1])))?;
            if !(v.is_finite() && *v > 0.0) {
                return Err(fail(format!("{} price must be > 0, got {field}", CSV_HEADER[k + 1])));
            }
        }
        if let Some(first) = seen.insert(date, line) {
            return Err(fail(format!("duplicate date {date} (first seen on line {first})")));
        }
        bars.push(Bar {
            date,
            open: px[0],
            high: px[1],
            low: px[2],
            close: px[3],
        });
    }
    bars.sort_by_key(|b| b.date);
    PriceSeries::new(bars)
}

fn csv_err(line: u64, e: csv::Error) -> LpplError {
    LpplError::Csv {
        line,
        message: e.to_string(),
    }
}

/// Writes bars with shortest round-trip float formatting, so that reading the
/// output back reproduces the series exactly.
pub fn write_csv<W: Write>(series: &PriceSeries, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for b in series.bars() {
        writeln!(w, "{},{},{},{},{}", b.date, b.open, b.high, b.low, b.close)?;
    }
    Ok(())
}

pub fn save_csv(series: &PriceSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| LpplError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(series, &mut w).and_then(|_| w.flush()).map_err(|e| LpplError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LpplParams;
    use crate::synth::{generate, ResidualModel, SynthSpec};

    const OK: &str = "date,open,high,low,close\n2020-01-02,1,2,0.5,1.5\n2020-01-03,1.5,1.6,1.4,1.55\n2020-01-06,1.55,1.7,1.5,1.6\n";

    #[test]
    fn three_rows() {
        let s = read_csv(OK.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.bars()[2].close, 1.6);
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let text = "date,open,high,low,close\n2020-01-03,1,1,1,1\n2020-01-02,2,2,2,2\n";
        let s = read_csv(text.as_bytes()).unwrap();
        assert_eq!(s.bars()[0].close, 2.0);
    }

    #[test]
    fn duplicate_date_names_line() {
        let text = format!("{OK}2020-01-03,1,1,1,1\n");
        match read_csv(text.as_bytes()) {
            Err(LpplError::Csv { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_price_rejected() {
        let text = "date,open,high,low,close\n2020-01-02,1,1,1,0\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(LpplError::Csv { line: 2, .. })));
    }

    #[test]
    fn malformed_rows() {
        for bad in [
            "date,open,high,low,close\n2020-01-02,1,1,1\n",
            "date,open,high,low,close\n2020-13-02,1,1,1,1\n",
            "date,open,high,low,close\n2020-01-02,1,x,1,1\n",
        ] {
            assert!(matches!(read_csv(bad.as_bytes()), Err(LpplError::Csv { line: 2, .. })), "{bad}");
        }
        assert!(matches!(read_csv("d,o,h,l,c\n".as_bytes()), Err(LpplError::Csv { line: 1, .. })));
    }

    #[test]
    fn synthetic_round_trip_is_exact() {
        let p = LpplParams::new(7.0, -0.1, 0.01, 0.5, 8.0, 1.0, 330.0);
        let s = generate(&SynthSpec::new(p, 300, ResidualModel::Ar1 { a: 0.9, sigma: 0.01 }, 5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        save_csv(&s, &path).unwrap();
        assert_eq!(load_csv(&path).unwrap(), s);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_csv("/nonexistent/x.csv"), Err(LpplError::Io { .. })));
    }
}
