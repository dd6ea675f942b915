use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "experiment,n,k,p,q,p0,gamma,r,seed,trial,statistic,threshold,decision,density,runtime_ms";

/// One output row. Fields that do not apply to an experiment are `None` and
/// written as empty cells. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub experiment: String,
    pub n: usize,
    pub k: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub p0: Option<f64>,
    pub gamma: Option<f64>,
    pub r: Option<usize>,
    pub seed: u64,
    pub trial: usize,
    pub statistic: f64,
    pub threshold: f64,
    #[serde(serialize_with = "bit_out", deserialize_with = "bit_in")]
    pub decision: bool,
    pub density: Option<f64>,
    pub runtime_ms: Option<f64>,
}

fn bit_out<S: Serializer>(b: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*b))
}

fn bit_in<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    match u8::deserialize(d)? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(serde::de::Error::custom(format!("decision must be 0 or 1, got {v}"))),
    }
}

impl TrialRow {
    pub fn new(experiment: impl Into<String>, n: usize, k: usize, seed: u64, trial: usize) -> Self {
        TrialRow {
            experiment: experiment.into(),
            n,
            k,
            p: None,
            q: None,
            p0: None,
            gamma: None,
            r: None,
            seed,
            trial,
            statistic: f64::NAN,
            threshold: f64::NAN,
            decision: false,
            density: None,
            runtime_ms: None,
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Renders rows under [`CSV_HEADER`]. Floats use shortest round-trip
/// formatting, so equal values give equal bytes.
pub fn write_csv(rows: &[TrialRow]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    format!("{CSV_HEADER}\n{body}")
}

/// Parses text produced by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<TrialRow>> {
    match text.lines().next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing or unexpected header".into(),
            })
        }
    }
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = TrialRow::new("detect-sum-null", 100, 10, 7, 3);
        r.p = Some(0.9);
        r.q = Some(0.5);
        r.statistic = 2475.0;
        r.threshold = 2490.5;
        r.decision = true;
        r.density = Some(0.5);
        let text = write_csv(&[r.clone()]);
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.lines().nth(1).unwrap().starts_with("detect-sum-null,100,10,0.9,0.5,,,,7,3,"));
        assert_eq!(read_csv(&text).unwrap(), vec![r]);
    }

    #[test]
    fn rejects_bad_rows() {
        let text = format!("{CSV_HEADER}\nx,1,1,,,,,,0,0,1,1,2,,\n");
        assert!(matches!(read_csv(&text), Err(Error::Parse { .. })));
        assert!(read_csv("a,b\n").is_err());
    }
}
