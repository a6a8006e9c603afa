use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::cluster::ClusterBenchRecord;
use super::dist::DistMetricRecord;
use super::pointwise::SweepRecord;
use super::verify::{FlopsRecord, MseVerifyRecord};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A flat record with a fixed CSV column order.
///
/// `HEADER` lists the columns in the order of the struct fields; CSV rows
/// are written in that order.
pub trait TableRecord: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

impl TableRecord for SweepRecord {
    const HEADER: &'static [&'static str] = &[
        "theta",
        "r",
        "estimator_id",
        "feature_dim",
        "trials",
        "mean_estimate",
        "q05",
        "q95",
        "empirical_rel_err",
        "closedform_rel_err",
        "exact_sm",
    ];
}

impl TableRecord for ClusterBenchRecord {
    const HEADER: &'static [&'static str] =
        &["dataset_id", "rf_count", "estimator_id", "repetitions", "mean_mse", "min_mse", "max_mse", "mean_s"];
}

impl TableRecord for DistMetricRecord {
    const HEADER: &'static [&'static str] =
        &["query_id", "estimator_id", "wasserstein1", "ks", "negative_mass_fraction"];
}

impl TableRecord for MseVerifyRecord {
    const HEADER: &'static [&'static str] =
        &["formula", "theta", "r", "length_ratio", "m", "n", "trials", "empirical", "closed_form", "rel_dev", "std_error"];
}

impl TableRecord for FlopsRecord {
    const HEADER: &'static [&'static str] = &[
        "estimator_id",
        "d",
        "m",
        "n",
        "model_mul_add",
        "measured_mul_add",
        "measured_transcendental",
        "model_rel_gap",
        "regular_cost",
        "ratio",
        "measured_ratio",
        "feature_dim",
        "big_o_terms",
    ];
}

/// Writes `records` as CSV (header always present, floats in shortest
/// round-trip form) or as a pretty JSON array.
pub fn write_records<R: TableRecord, W: Write>(records: &[R], writer: W, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
            w.write_record(R::HEADER)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut writer = writer;
            serde_json::to_writer_pretty(&mut writer, records)?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn export<R: TableRecord>(records: &[R], path: &Path, format: Format) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_records(records, &mut w, format)?;
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: TableRecord, T: Read>(reader: T) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_json<R: TableRecord, T: Read>(reader: T) -> Result<Vec<R>> {
    Ok(serde_json::from_reader(reader)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<DistMetricRecord> {
        vec![
            DistMetricRecord {
                query_id: 0,
                estimator_id: "trig_m16".into(),
                wasserstein1: 0.1 + 0.2,
                ks: 1.0 / 3.0,
                negative_mass_fraction: 0.0,
            },
            DistMetricRecord {
                query_id: 1,
                estimator_id: "a,b".into(),
                wasserstein1: 1e-300,
                ks: std::f64::consts::PI,
                negative_mass_fraction: 0.25,
            },
        ]
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_records::<SweepRecord, _>(&[], &mut buf, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SweepRecord::HEADER.join(",") + "\n");
    }

    #[test]
    fn csv_and_json_round_trip() {
        for format in [Format::Csv, Format::Json] {
            let mut buf = Vec::new();
            write_records(&sample(), &mut buf, format).unwrap();
            let back: Vec<DistMetricRecord> = match format {
                Format::Csv => read_csv(buf.as_slice()).unwrap(),
                Format::Json => read_json(buf.as_slice()).unwrap(),
            };
            assert_eq!(back, sample());
        }
    }

    fn serde_header<R: TableRecord>(r: &R) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(r).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        text.lines().next().unwrap().to_string()
    }

    #[test]
    fn headers_match_field_order() {
        assert_eq!(serde_header(&sample()[0]), DistMetricRecord::HEADER.join(","));
        let sweep = SweepRecord {
            theta: 0.0,
            r: 1.0,
            estimator_id: "x".into(),
            feature_dim: 1,
            trials: 2,
            mean_estimate: 0.0,
            q05: 0.0,
            q95: 0.0,
            empirical_rel_err: 0.0,
            closedform_rel_err: 0.0,
            exact_sm: 1.0,
        };
        assert_eq!(serde_header(&sweep), SweepRecord::HEADER.join(","));
        let cluster = ClusterBenchRecord {
            dataset_id: "s".into(),
            rf_count: 1,
            estimator_id: "trig".into(),
            repetitions: 1,
            mean_mse: 0.0,
            min_mse: 0.0,
            max_mse: 0.0,
            mean_s: 0.0,
        };
        assert_eq!(serde_header(&cluster), ClusterBenchRecord::HEADER.join(","));
        let verify = MseVerifyRecord {
            formula: "trig".into(),
            theta: 0.0,
            r: 1.0,
            length_ratio: 1.0,
            m: 1,
            n: 1,
            trials: 2,
            empirical: 0.0,
            closed_form: 0.0,
            rel_dev: 0.0,
            std_error: 0.0,
        };
        assert_eq!(serde_header(&verify), MseVerifyRecord::HEADER.join(","));
        let flops = FlopsRecord {
            estimator_id: "a".into(),
            d: 1,
            m: 1,
            n: 1,
            model_mul_add: 1,
            measured_mul_add: 1,
            measured_transcendental: 1,
            model_rel_gap: 0.0,
            regular_cost: 1,
            ratio: 1.0,
            measured_ratio: 1.0,
            feature_dim: 1,
            big_o_terms: 1,
        };
        assert_eq!(serde_header(&flops), FlopsRecord::HEADER.join(","));
    }
}
