//! Result records and their CSV/JSON forms.
//!
//! Floating-point fields are written in scientific notation with 17
//! significant digits, so every value survives a round trip bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::config::OutputFormat;
use crate::error::{Error, Result};

/// One aggregated `(sweep point, scheme, metric)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub sweep_var: String,
    #[serde(serialize_with = "sig17")]
    pub sweep_value: f64,
    pub scheme: String,
    pub metric: String,
    #[serde(serialize_with = "sig17")]
    pub mean: f64,
    #[serde(serialize_with = "sig17")]
    pub std_err: f64,
    pub trials: usize,
    pub master_seed: u64,
}

pub const CSV_HEADER: [&str; 8] = [
    "sweep_var",
    "sweep_value",
    "scheme",
    "metric",
    "mean",
    "std_err",
    "trials",
    "master_seed",
];

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn sig17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(serde::ser::Error::custom(format!(
            "cannot serialise non-finite value {x}"
        )));
    }
    let raw = RawValue::from_string(format_f64(*x)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub fn to_csv_string(records: &[MetricsRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| Error::invalid(format!("CSV encoding failed: {e}"));
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in records {
        w.write_record([
            r.sweep_var.clone(),
            format_f64(r.sweep_value),
            r.scheme.clone(),
            r.metric.clone(),
            format_f64(r.mean),
            format_f64(r.std_err),
            r.trials.to_string(),
            r.master_seed.to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn to_json_string(records: &[MetricsRecord]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(records)
        .map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_results_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| Error::config(format!("malformed results CSV: {e}")))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::config(
            "results CSV header does not match the expected columns",
        ));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::config(format!("malformed results CSV: {e}"))))
        .collect()
}

pub fn parse_results_json(text: &str) -> Result<Vec<MetricsRecord>> {
    serde_json::from_str(text).map_err(|e| Error::config(format!("malformed results JSON: {e}")))
}

pub fn encode(records: &[MetricsRecord], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv_string(records),
        OutputFormat::Json => to_json_string(records),
    }
}

/// Writes `records` to `path`; I/O failures carry the path.
pub fn emit_results(records: &[MetricsRecord], path: &Path, format: OutputFormat) -> Result<()> {
    let text = encode(records, format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a results file, choosing the parser from the extension
/// (`.json`, anything else is CSV).
pub fn read_results(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        parse_results_json(&text)
    } else {
        parse_results_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<MetricsRecord> {
        vec![
            MetricsRecord {
                sweep_var: "L".into(),
                sweep_value: 8.0,
                scheme: "projection".into(),
                metric: "ber".into(),
                mean: 0.1 + 0.2,
                std_err: 1.0 / 3.0,
                trials: 500,
                master_seed: u64::MAX,
            },
            MetricsRecord {
                sweep_var: "P_r_dB".into(),
                sweep_value: -4.0,
                scheme: "sic".into(),
                metric: "nmse".into(),
                mean: 5e-324,
                std_err: 0.0,
                trials: 1,
                master_seed: 0,
            },
        ]
    }

    #[test]
    fn csv_layout() {
        let text = to_csv_string(&sample()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sweep_var,sweep_value,scheme,metric,mean,std_err,trials,master_seed"
        );
        assert_eq!(
            lines.next().unwrap(),
            "L,8.0000000000000000e0,projection,ber,3.0000000000000004e-1,3.3333333333333331e-1,500,18446744073709551615"
        );
    }

    #[test]
    fn round_trips_are_exact() {
        let recs = sample();
        assert_eq!(
            parse_results_csv(&to_csv_string(&recs).unwrap()).unwrap(),
            recs
        );
        let json = to_json_string(&recs).unwrap();
        assert!(json.contains("\"mean\": 3.0000000000000004e-1"), "{json}");
        assert_eq!(parse_results_json(&json).unwrap(), recs);
    }

    #[test]
    fn non_finite_values_are_refused() {
        let mut recs = sample();
        recs[0].mean = f64::NAN;
        assert!(to_json_string(&recs).is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_results_json("{}").is_err());
        assert!(parse_results_json(r#"[{"sweep_var": "L"}]"#).is_err());
        assert!(parse_results_csv("a,b\n1,2\n").is_err());
        let mut text = to_csv_string(&sample()).unwrap();
        text.push_str("L,x,sic,ber,1,1,1,1\n");
        assert!(parse_results_csv(&text).is_err());
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = emit_results(
            &sample(),
            Path::new("/nonexistent/dir/out.csv"),
            OutputFormat::Csv,
        )
        .unwrap_err();
        assert!(
            err.to_string().contains("/nonexistent/dir/out.csv"),
            "{err}"
        );
    }
}
