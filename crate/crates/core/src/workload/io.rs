use std::fmt::Write as _;

use super::{TaskTrace, VuTrace, WorkloadError};
use crate::model::{Task, VehicularUnit};
use crate::{Minutes, Money, VuClass};

const VU_HEADER: &str = "vu_id,class,arrival_min,declared_stay_min,actual_departure_min";
const TASK_HEADER: &str = "task_id,arrival_min,exec_min,deadline_min,revenue";

pub fn vu_csv(trace: &VuTrace) -> String {
    let mut out = format!("{VU_HEADER}\n");
    for v in &trace.vus {
        let _ =
            writeln!(out, "{},{},{},{},{}", v.id, v.class, v.arrival_min, v.declared_stay_min, v.actual_departure_min);
    }
    out
}

pub fn task_csv(trace: &TaskTrace) -> String {
    let mut out = format!("{TASK_HEADER}\n");
    for t in &trace.tasks {
        let _ = writeln!(out, "{},{},{},{},{}", t.id, t.arrival_min, t.exec_min, t.deadline_min, t.revenue);
    }
    out
}

fn records(text: &str, header: &str) -> Result<Vec<(usize, csv::StringRecord)>, WorkloadError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let got = reader.headers().map_err(|e| WorkloadError::Parse { line: 1, msg: e.to_string() })?;
    if got.iter().collect::<Vec<_>>().join(",") != header {
        return Err(WorkloadError::Parse { line: 1, msg: format!("expected header `{header}`") });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| WorkloadError::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        out.push((line, rec));
    }
    Ok(out)
}

fn col<T: std::str::FromStr>(rec: &csv::StringRecord, line: usize, idx: usize, name: &str) -> Result<T, WorkloadError> {
    let raw = rec.get(idx).unwrap_or_default();
    raw.parse().map_err(|_| WorkloadError::Parse { line, msg: format!("bad `{name}` value `{raw}`") })
}

/// Reads a VU trace written by [`vu_csv`]. Configuration time is not part
/// of the file and has to be supplied.
pub fn read_vu_csv(text: &str, config_time_min: Minutes) -> Result<VuTrace, WorkloadError> {
    let mut vus = Vec::new();
    for (line, rec) in records(text, VU_HEADER)? {
        let class: VuClass = col(&rec, line, 1, "class")?;
        let v = VehicularUnit::new(
            col(&rec, line, 0, "vu_id")?,
            class,
            col(&rec, line, 2, "arrival_min")?,
            col(&rec, line, 3, "declared_stay_min")?,
            col(&rec, line, 4, "actual_departure_min")?,
            config_time_min,
        )
        .map_err(|e| WorkloadError::Validation { line, msg: e.to_string() })?;
        vus.push(v);
    }
    let trace = VuTrace { vus };
    if !trace.is_sorted() {
        return Err(WorkloadError::Validation { line: 0, msg: "VUs are not sorted by arrival".into() });
    }
    Ok(trace)
}

pub fn read_task_csv(text: &str) -> Result<TaskTrace, WorkloadError> {
    let mut tasks = Vec::new();
    for (line, rec) in records(text, TASK_HEADER)? {
        let revenue: Money = col(&rec, line, 4, "revenue")?;
        let t = Task::new(
            col(&rec, line, 0, "task_id")?,
            col(&rec, line, 1, "arrival_min")?,
            col(&rec, line, 2, "exec_min")?,
            col(&rec, line, 3, "deadline_min")?,
            revenue,
        )
        .map_err(|e| WorkloadError::Validation { line, msg: e.to_string() })?;
        tasks.push(t);
    }
    let trace = TaskTrace { tasks };
    if !trace.is_sorted() {
        return Err(WorkloadError::Validation { line: 0, msg: "tasks are not sorted by arrival".into() });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{gen_tasks, gen_vus, WorkloadConfig};

    #[test]
    fn traces_round_trip() {
        let cfg = WorkloadConfig { num_tasks: 50, num_vus: 80, seed: 4, ..Default::default() };
        let vus = gen_vus(&cfg).unwrap();
        let tasks = gen_tasks(&cfg).unwrap();
        let vu_text = vu_csv(&vus);
        let task_text = task_csv(&tasks);
        assert!(vu_text.starts_with("vu_id,class,arrival_min,declared_stay_min,actual_departure_min\n"));
        assert_eq!(read_vu_csv(&vu_text, cfg.config_time_min).unwrap(), vus);
        assert_eq!(read_task_csv(&task_text).unwrap(), tasks);
    }

    #[test]
    fn money_has_three_decimals() {
        let t = Task::new(0, 0, 400, 1400, Money::from_milli(24_000_010)).unwrap();
        let text = task_csv(&TaskTrace { tasks: vec![t] });
        assert_eq!(text.lines().nth(1), Some("0,0,400,1400,24000.010"));
    }

    #[test]
    fn bad_rows_are_reported() {
        let text = "task_id,arrival_min,exec_min,deadline_min,revenue\n0,0,0,5,1.000\n";
        assert!(matches!(read_task_csv(text), Err(WorkloadError::Validation { line: 2, .. })));
        assert!(matches!(read_task_csv("id\n"), Err(WorkloadError::Parse { line: 1, .. })));
    }
}
