use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::Dataset;

/// The twelve attributes of the hourly bike sharing file.
pub const BIKE_SHARING_FEATURES: [&str; 12] = [
    "season", "yr", "mnth", "hr", "holiday", "weekday", "workingday", "weathersit", "temp", "atemp",
    "hum", "windspeed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    MinMax,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: Dataset<f64>,
    pub features: Vec<String>,
    pub rows_read: usize,
    pub rows_dropped: usize,
}

/// Reads a comma separated file with a header row. Rows with a missing or
/// non-numeric selected cell are dropped and counted. An empty feature list
/// selects every column except the target.
pub fn ingest_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    feature_columns: &[String],
    normalization: Normalization,
) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let target = find(target_column)?;
    let features: Vec<String> = if feature_columns.is_empty() {
        headers.iter().filter(|h| *h != target_column).cloned().collect()
    } else {
        feature_columns.to_vec()
    };
    let idx = features.iter().map(|f| find(f)).collect::<Result<Vec<_>>>()?;

    let (mut x, mut y) = (Vec::new(), Vec::new());
    let (mut read, mut dropped) = (0, 0);
    for rec in rdr.records() {
        let rec = rec?;
        read += 1;
        let cell = |i: usize| rec.get(i).and_then(|c| c.trim().parse::<f64>().ok()).filter(|v| v.is_finite());
        let row: Option<Vec<f64>> = idx.iter().map(|&i| cell(i)).collect();
        match (row, cell(target)) {
            (Some(r), Some(t)) => {
                x.push(r);
                y.push(t);
            }
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} of {read} rows with missing or non-numeric cells");
    }
    if normalization == Normalization::MinMax && !x.is_empty() {
        for j in 0..features.len() {
            let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r[j]), b.max(r[j])));
            if hi > lo {
                x.iter_mut().for_each(|r| r[j] = (r[j] - lo) / (hi - lo));
            } else {
                log::warn!("column `{}` is constant; mapped to 0", features[j]);
                x.iter_mut().for_each(|r| r[j] = 0.0);
            }
        }
    }
    let data = Dataset::new(x, y)?;
    Ok(Ingested { data, features, rows_read: read, rows_dropped: dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn round_trip_and_drops() {
        let f = file("a,b,y\n1,2,3\n4,5,6\n7,x,9\n0.5,-1,2\n");
        let got = ingest_csv(f.path(), "y", &[], Normalization::None).unwrap();
        assert_eq!(got.data.x(), &[vec![1.0, 2.0], vec![4.0, 5.0], vec![0.5, -1.0]]);
        assert_eq!(got.data.y(), &[3.0, 6.0, 2.0]);
        assert_eq!((got.rows_read, got.rows_dropped), (4, 1));
        let err = ingest_csv(f.path(), "z", &[], Normalization::None).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "z"));
    }

    #[test]
    fn minmax_with_constant_column() {
        let f = file("a,c,y\n1,5,0\n3,5,1\n2,5,2\n");
        let got = ingest_csv(f.path(), "y", &["a".into(), "c".into()], Normalization::MinMax).unwrap();
        assert_eq!(got.data.x(), &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.0]]);
    }

    #[test]
    fn bike_sharing_layout() {
        let header = "instant,dteday,season,yr,mnth,hr,holiday,weekday,workingday,weathersit,temp,atemp,hum,windspeed,casual,registered,cnt";
        let row = "1,2011-01-01,1,0,1,0,0,6,0,1,0.24,0.2879,0.81,0,3,13,16";
        let f = file(&format!("{header}\n{row}\n{row}\n"));
        let feats: Vec<String> = BIKE_SHARING_FEATURES.iter().map(|s| s.to_string()).collect();
        let got = ingest_csv(f.path(), "cnt", &feats, Normalization::None).unwrap();
        assert_eq!(got.data.dim(), 12);
        assert_eq!(got.data.y(), &[16.0, 16.0]);
    }
}
