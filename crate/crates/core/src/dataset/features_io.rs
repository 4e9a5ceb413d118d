//! Features table: `window_key,f01_mean,...,f19_max,flag_low_coverage`.
//!
//! Blocks without coverage are written as `NaN` and filled at training time
//! from training-fold medians.

use super::labels::WindowKey;
use super::{read_to_string, write_atomic};
use crate::error::{Error, Result};
use crate::features::{column_names, WindowFeatureVector, VECTOR_LEN};
use std::path::Path;

pub fn serialize_features(rows: &[WindowFeatureVector]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["window_key".to_string()];
    header.extend(column_names());
    header.push("flag_low_coverage".into());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = Vec::with_capacity(VECTOR_LEN + 2);
        rec.push(r.key.to_string());
        rec.extend(r.values.iter().map(|v| v.to_string()));
        rec.push(if r.low_coverage { "1" } else { "0" }.to_string());
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn parse_features(path: &Path, text: &str) -> Result<Vec<WindowFeatureVector>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let mut expected = vec!["window_key".to_string()];
    expected.extend(column_names());
    expected.push("flag_low_coverage".into());
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::parse(
            path,
            1,
            "features header does not match the 171-column layout",
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let key: WindowKey = rec[0]
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        let values = (1..=VECTOR_LEN)
            .map(|j| {
                rec[j].parse::<f64>().map_err(|_| {
                    Error::parse(
                        path,
                        line,
                        format!("bad value {:?} in column {}", &rec[j], j + 1),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::parse(path, line, "infinite feature value"));
        }
        let low_coverage = match &rec[VECTOR_LEN + 1] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(path, line, format!("bad flag {other:?}"))),
        };
        out.push(WindowFeatureVector {
            key,
            values,
            low_coverage,
        });
    }
    out.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(out)
}

pub fn load_features(path: &Path) -> Result<Vec<WindowFeatureVector>> {
    parse_features(path, &read_to_string(path)?)
}

pub fn write_features(path: &Path, rows: &[WindowFeatureVector]) -> Result<()> {
    write_atomic(path, serialize_features(rows).as_bytes())
}
