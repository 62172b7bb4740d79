use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{VuTrace, WorkloadError};
use crate::model::VehicularUnit;
use crate::{rng, Minutes, VuClass};

const HISTOGRAM_HEADER: [&str; 4] = ["date", "stay_bucket_min_lo", "stay_bucket_min_hi", "count"];
const EVENT_HEADER: [&str; 2] = ["arrival_min", "stay_min"];

/// Under 3 h is SRT, 3 h to 6 h inclusive is MRT, longer is LRT.
pub fn classify_vu(declared_stay_min: Minutes) -> VuClass {
    match declared_stay_min {
        s if s < 180 => VuClass::Srt,
        s if s <= 360 => VuClass::Mrt,
        _ => VuClass::Lrt,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    /// Seeds the histogram expansion.
    pub seed: u64,
    pub config_time_min: Minutes,
    pub day_len_min: Minutes,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { seed: 1, config_time_min: 5, day_len_min: 1440 }
    }
}

pub fn ingest_parking_trace(path: &Path, opts: &IngestOptions) -> Result<VuTrace, WorkloadError> {
    let text = std::fs::read_to_string(path)?;
    ingest_parking_text(&text, opts)
}

/// Parses either a per-day stay histogram or a list of `(arrival, stay)`
/// events, picking the format from the header.
pub fn ingest_parking_text(text: &str, opts: &IngestOptions) -> Result<VuTrace, WorkloadError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| WorkloadError::Parse { line: 1, msg: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let pairs = if header == HISTOGRAM_HEADER {
        expand_histogram(&mut reader, opts)?
    } else if header == EVENT_HEADER {
        read_events(&mut reader)?
    } else {
        return Err(WorkloadError::Parse {
            line: 1,
            msg: format!(
                "unrecognised header `{}`; expected `{}` or `{}`",
                header.join(","),
                HISTOGRAM_HEADER.join(","),
                EVENT_HEADER.join(",")
            ),
        });
    };

    let mut pairs = pairs;
    pairs.sort_by_key(|&(arrival, _)| arrival);
    let mut vus = Vec::with_capacity(pairs.len());
    for (i, (arrival, stay)) in pairs.into_iter().enumerate() {
        vus.push(VehicularUnit::new(i as u32, classify_vu(stay), arrival, stay, arrival + stay, opts.config_time_min)?);
    }
    Ok(VuTrace { vus })
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T, WorkloadError> {
    let line = record_line(rec);
    let raw = rec.get(idx).ok_or_else(|| WorkloadError::Parse { line, msg: format!("missing `{name}`") })?;
    raw.parse().map_err(|_| WorkloadError::Parse { line, msg: format!("bad `{name}` value `{raw}`") })
}

fn read_events(reader: &mut csv::Reader<&[u8]>) -> Result<Vec<(Minutes, Minutes)>, WorkloadError> {
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| WorkloadError::Parse { line: csv_err_line(&e), msg: e.to_string() })?;
        let line = record_line(&rec);
        let arrival: i64 = field(&rec, 0, "arrival_min")?;
        let stay: i64 = field(&rec, 1, "stay_min")?;
        if arrival < 0 || stay <= 0 {
            return Err(WorkloadError::Validation { line, msg: "arrival must be >= 0 and stay > 0".into() });
        }
        out.push((arrival as Minutes, stay as Minutes));
    }
    Ok(out)
}

/// Each day gets `[k·day_len, (k+1)·day_len)` in order of first appearance.
/// Given the day's total, Poisson arrival times are uniform order
/// statistics, so arrivals are sorted uniforms; stays are uniform in the
/// bucket and paired with arrivals at random.
fn expand_histogram(
    reader: &mut csv::Reader<&[u8]>,
    opts: &IngestOptions,
) -> Result<Vec<(Minutes, Minutes)>, WorkloadError> {
    let mut days: Vec<(String, Vec<Minutes>)> = Vec::new();
    let mut rng = rng::stream(opts.seed, rng::INGEST);
    for rec in reader.records() {
        let rec = rec.map_err(|e| WorkloadError::Parse { line: csv_err_line(&e), msg: e.to_string() })?;
        let line = record_line(&rec);
        let date = rec.get(0).unwrap_or_default().to_string();
        let lo: f64 = field(&rec, 1, "stay_bucket_min_lo")?;
        let hi: f64 = field(&rec, 2, "stay_bucket_min_hi")?;
        let count: i64 = field(&rec, 3, "count")?;
        if count < 0 {
            return Err(WorkloadError::Validation { line, msg: format!("negative count {count}") });
        }
        if !(lo >= 0.0 && hi >= lo && hi >= 1.0) {
            return Err(WorkloadError::Validation { line, msg: format!("bad stay bucket [{lo}, {hi}]") });
        }
        let idx = match days.iter().position(|(d, _)| *d == date) {
            Some(i) => i,
            None => {
                days.push((date, Vec::new()));
                days.len() - 1
            }
        };
        for _ in 0..count {
            let stay = (lo + rng.random::<f64>() * (hi - lo)).round().clamp(lo.max(1.0), hi) as Minutes;
            days[idx].1.push(stay);
        }
    }

    let mut out = Vec::new();
    for (k, (_, mut stays)) in days.into_iter().enumerate() {
        let start = k as Minutes * opts.day_len_min;
        let mut arrivals: Vec<Minutes> =
            (0..stays.len()).map(|_| start + (rng.random::<f64>() * opts.day_len_min as f64) as Minutes).collect();
        arrivals.sort_unstable();
        stays.shuffle(&mut rng);
        out.extend(arrivals.into_iter().zip(stays));
    }
    Ok(out)
}

fn csv_err_line(e: &csv::Error) -> usize {
    e.position().map(|p| p.line() as usize).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str) -> Result<VuTrace, WorkloadError> {
        ingest_parking_text(text, &IngestOptions::default())
    }

    #[test]
    fn class_thresholds() {
        assert_eq!(classify_vu(90), VuClass::Srt);
        assert_eq!(classify_vu(179), VuClass::Srt);
        assert_eq!(classify_vu(180), VuClass::Mrt);
        assert_eq!(classify_vu(360), VuClass::Mrt);
        assert_eq!(classify_vu(361), VuClass::Lrt);
        assert_eq!(classify_vu(500), VuClass::Lrt);
    }

    #[test]
    fn single_event_row() {
        let t = ingest("arrival_min,stay_min\n0,90\n").unwrap();
        assert_eq!(t.len(), 1);
        let v = &t.vus[0];
        assert_eq!((v.class, v.arrival_min, v.declared_stay_min, v.actual_departure_min), (VuClass::Srt, 0, 90, 90));
    }

    #[test]
    fn histogram_bucket_above_lrt_threshold() {
        let t = ingest("date,stay_bucket_min_lo,stay_bucket_min_hi,count\n2020-01-06,360,600,5\n").unwrap();
        assert_eq!(t.len(), 5);
        for v in &t.vus {
            assert!((360..=600).contains(&v.declared_stay_min));
            assert!(v.arrival_min < 1440);
        }
        assert!(t.vus.iter().filter(|v| v.declared_stay_min > 360).all(|v| v.class == VuClass::Lrt));
        assert!(t.is_sorted());
    }

    #[test]
    fn days_are_laid_out_in_order() {
        let text = "date,stay_bucket_min_lo,stay_bucket_min_hi,count\nmon,0,60,3\ntue,60,120,4\nmon,120,180,2\n";
        let t = ingest(text).unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!(t.vus.iter().filter(|v| v.arrival_min < 1440).count(), 5);
        assert_eq!(t.vus.iter().filter(|v| (1440..2880).contains(&v.arrival_min)).count(), 4);
        assert_eq!(t, ingest(text).unwrap());
    }

    #[test]
    fn empty_files_with_headers() {
        assert!(ingest("arrival_min,stay_min\n").unwrap().is_empty());
        assert!(ingest("date,stay_bucket_min_lo,stay_bucket_min_hi,count\n").unwrap().is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(ingest("when,how_long\n0,90\n"), Err(WorkloadError::Parse { line: 1, .. })));
        let neg = "date,stay_bucket_min_lo,stay_bucket_min_hi,count\nmon,0,60,3\nmon,60,120,-1\n";
        assert!(matches!(ingest(neg), Err(WorkloadError::Validation { line: 3, .. })));
        assert!(matches!(ingest("arrival_min,stay_min\n0,abc\n"), Err(WorkloadError::Parse { line: 2, .. })));
    }
}
