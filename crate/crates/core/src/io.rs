//! Dataset ingestion and report serialization. CSV in the RFC-4180 style
//! with a header row; missing outcomes read as empty, `NA`, or `NaN`
//! (case-insensitive) and always written as empty. Serialized floats carry
//! 10 significant digits and round-trip.

use std::io::Read;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::estimators::{Dataset, EstimateReport};
use crate::numeric::sig10;
use crate::simulate::McSummary;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    File(#[from] std::io::Error),
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("data row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("data row {row}: outcome present although the selection indicator is 0")]
    Contradiction { row: usize },
    #[error("dataset: {0}")]
    Dataset(String),
}

/// Maps dataset roles to CSV header names. With `r` unset the selection
/// indicator is derived from outcome presence. An empty `covariates` list
/// means "all remaining columns".
#[derive(Debug, Clone)]
pub struct ColumnBinding {
    pub a: String,
    pub y: String,
    pub r: Option<String>,
    pub covariates: Vec<String>,
}

impl Default for ColumnBinding {
    fn default() -> Self {
        Self {
            a: "A".into(),
            y: "Y".into(),
            r: Some("R".into()),
            covariates: Vec::new(),
        }
    }
}

fn is_missing(field: &str) -> bool {
    let t = field.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

pub fn read_csv_path(path: &Path, binding: &ColumnBinding) -> Result<Dataset, IoError> {
    read_csv(std::fs::File::open(path)?, binding)
}

pub fn read_csv<R: Read>(reader: R, binding: &ColumnBinding) -> Result<Dataset, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| -> Result<usize, IoError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))
    };
    let a_idx = col(&binding.a)?;
    let y_idx = col(&binding.y)?;
    let r_idx = binding.r.as_ref().map(|r| col(r)).transpose()?;

    let cov_names: Vec<String> = if binding.covariates.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != a_idx && *i != y_idx && Some(*i) != r_idx)
            .map(|(_, h)| h.clone())
            .collect()
    } else {
        binding.covariates.clone()
    };
    let cov_idx: Vec<usize> = cov_names
        .iter()
        .map(|n| col(n))
        .collect::<Result<_, _>>()?;

    let mut covariates: Vec<(String, Vec<f64>)> =
        cov_names.into_iter().map(|n| (n, Vec::new())).collect();
    let mut a = Vec::new();
    let mut r = Vec::new();
    let mut y = Vec::new();

    for (rec_no, record) in rdr.records().enumerate() {
        let row = rec_no + 1;
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let parse = |i: usize, what: &str| -> Result<f64, IoError> {
            field(i).parse::<f64>().map_err(|_| IoError::Row {
                row,
                msg: format!("cannot parse {what} value `{}`", field(i)),
            })
        };

        let a_val = parse(a_idx, "exposure")?;
        if a_val != 0.0 && a_val != 1.0 {
            return Err(IoError::Row {
                row,
                msg: format!("exposure must be 0 or 1, got {a_val}"),
            });
        }
        let y_missing = is_missing(field(y_idx));
        let r_val = match r_idx {
            Some(ri) => {
                let v = parse(ri, "selection")?;
                if v != 0.0 && v != 1.0 {
                    return Err(IoError::Row {
                        row,
                        msg: format!("selection indicator must be 0 or 1, got {v}"),
                    });
                }
                v as u8
            }
            None => u8::from(!y_missing),
        };
        match (r_val, y_missing) {
            (0, false) => return Err(IoError::Contradiction { row }),
            (1, true) => {
                return Err(IoError::Row {
                    row,
                    msg: "outcome missing although the selection indicator is 1".into(),
                })
            }
            _ => {}
        }
        let y_val = if y_missing {
            None
        } else {
            Some(parse(y_idx, "outcome")?)
        };
        for (slot, &ci) in covariates.iter_mut().zip(&cov_idx) {
            slot.1.push(parse(ci, &format!("covariate {}", slot.0))?);
        }
        a.push(a_val as u8);
        r.push(r_val);
        y.push(y_val);
    }

    Dataset::new(covariates, a, r, y).map_err(|e| IoError::Dataset(e.to_string()))
}

/// Canonical CSV form: covariate columns in dataset order, then `A`, `R`,
/// `Y` with masked outcomes written as empty fields.
pub fn dataset_to_csv(ds: &Dataset) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ds
        .covariates()
        .iter()
        .map(|(n, _)| n.clone())
        .collect();
    header.extend(["A".into(), "R".into(), "Y".into()]);
    wtr.write_record(&header).expect("in-memory write");
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds
            .covariates()
            .iter()
            .map(|(_, c)| format!("{}", c[i]))
            .collect();
        rec.push(format!("{}", ds.a()[i]));
        rec.push(format!("{}", ds.r()[i]));
        rec.push(ds.y()[i].map(|v| format!("{v}")).unwrap_or_default());
        wtr.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Round every float in a JSON tree to 10 significant digits.
fn round_value(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return serde_json::Number::from_f64(sig10(f))
                        .map(Value::Number)
                        .unwrap_or(Value::Null);
                }
            }
            Value::Number(n)
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(round_value).collect()),
        Value::Object(m) => {
            Value::Object(m.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

/// Stable JSON with 10-significant-digit floats.
pub fn to_json_stable<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    serde_json::to_string_pretty(&round_value(v)).expect("plain json")
}

fn fmt10(x: f64) -> String {
    if x.is_finite() {
        format!("{}", sig10(x))
    } else {
        String::new()
    }
}

/// One CSV row per estimate.
pub fn reports_to_csv(reports: &[EstimateReport]) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "method", "pair", "psi_hat", "se", "ci_lo", "ci_hi", "n_eval", "delta_star",
        "gamma_star", "trunc_pi_a", "trunc_pi_r", "warnings",
    ])
    .expect("in-memory write");
    for r in reports {
        wtr.write_record([
            r.method.label().to_string(),
            r.pair_display(),
            fmt10(r.psi_hat),
            fmt10(r.se),
            fmt10(r.ci_lo),
            fmt10(r.ci_hi),
            r.n_eval.to_string(),
            r.diagnostics.delta_star.map(fmt10).unwrap_or_default(),
            r.diagnostics.gamma_star.map(fmt10).unwrap_or_default(),
            r.diagnostics.trunc_pi_a.to_string(),
            r.diagnostics.trunc_pi_r.to_string(),
            r.diagnostics.warnings.join("; "),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// One CSV row per estimator in a Monte Carlo summary.
pub fn summary_to_csv(s: &McSummary) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "estimator",
        "pair",
        "n_ok",
        "n_failed",
        "bias",
        "bias_d",
        "mse",
        "mse_d",
        "coverage_pct",
        "mean_ci_width",
        "psi_true",
        "sd_y_ref",
    ])
    .expect("in-memory write");
    for row in &s.rows {
        wtr.write_record([
            row.estimator.clone(),
            row.pair.clone(),
            row.n_ok.to_string(),
            row.n_failed.to_string(),
            fmt10(row.bias),
            fmt10(row.bias_d),
            fmt10(row.mse),
            fmt10(row.mse_d),
            fmt10(row.coverage_pct),
            fmt10(row.mean_ci_width),
            fmt10(s.psi_true),
            fmt10(s.sd_y_ref),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_masked_rows() {
        let csv = "X,A,R,Y\n0.5,1,1,2.0\n0.1,0,0,\n-0.3,1,1,0.7\n";
        let ds = read_csv(csv.as_bytes(), &ColumnBinding::default()).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.y()[1], None);
        assert_eq!(ds.r(), &[1, 0, 1]);
        assert_eq!(ds.covariate("X").unwrap()[2], -0.3);
    }

    #[test]
    fn contradiction_is_reported_with_row() {
        let csv = "X,A,R,Y\n0.5,1,0,2.0\n";
        match read_csv(csv.as_bytes(), &ColumnBinding::default()) {
            Err(IoError::Contradiction { row }) => assert_eq!(row, 1),
            other => panic!("expected contradiction, got {other:?}"),
        }
    }

    #[test]
    fn derives_selection_from_missingness() {
        let csv = "X,A,Y\n1,1,2.0\n2,0,3.0\n3,1,NA\n4,0,1.0\n5,1,nan\n";
        let binding = ColumnBinding {
            r: None,
            ..ColumnBinding::default()
        };
        let ds = read_csv(csv.as_bytes(), &binding).unwrap();
        assert_eq!(ds.r(), &[1, 1, 0, 1, 0]);
    }

    #[test]
    fn round_trips_exactly() {
        let csv = "X,A,R,Y\n0.125,1,1,2.5\n-3.75,0,0,\n0.0625,1,1,-1.25\n";
        let ds = read_csv(csv.as_bytes(), &ColumnBinding::default()).unwrap();
        let written = dataset_to_csv(&ds);
        let again = read_csv(written.as_bytes(), &ColumnBinding::default()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn json_is_idempotent_under_reserialization() {
        #[derive(Serialize)]
        struct T {
            x: f64,
            xs: Vec<f64>,
        }
        let t = T {
            x: 0.123456789012345,
            xs: vec![1.0 / 3.0, 2.0 / 7.0],
        };
        let once = to_json_stable(&t);
        let parsed: serde_json::Value = serde_json::from_str(&once).unwrap();
        let twice = serde_json::to_string_pretty(&round_value(parsed)).unwrap();
        assert_eq!(once, twice);
    }
}
