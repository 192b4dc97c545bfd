//! CSV persistence for ground-truth and estimated traces.
//!
//! One record per line with a header row; column order follows the field
//! order of [`TraceRecord`] and [`EstimatedRecord`]. Floats are written in
//! shortest round-trip form, so write/read is lossless.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Result, ResultExt};
use crate::obs::{EstimatedRecord, EstimatedTrace};
use crate::sim::{GroundTruthTrace, TraceRecord};

/// Which kind of trace a CSV file holds, judged by its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    GroundTruth,
    Estimated,
}

fn write_records<W: Write, T: Serialize>(w: W, records: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

fn read_records<R: Read, T: DeserializeOwned>(r: R) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_ground_truth<W: Write>(w: W, trace: &GroundTruthTrace) -> Result<()> {
    write_records(w, &trace.records)
}

pub fn read_ground_truth<R: Read>(r: R) -> Result<GroundTruthTrace> {
    Ok(GroundTruthTrace { records: read_records::<_, TraceRecord>(r)? })
}

pub fn write_estimated<W: Write>(w: W, trace: &EstimatedTrace) -> Result<()> {
    write_records(w, &trace.records)
}

pub fn read_estimated<R: Read>(r: R) -> Result<EstimatedTrace> {
    Ok(EstimatedTrace { records: read_records::<_, EstimatedRecord>(r)? })
}

pub fn save_ground_truth(path: &Path, trace: &GroundTruthTrace) -> Result<()> {
    let f = File::create(path).map_err(Into::into).context(|| format!("creating {}", path.display()))?;
    write_ground_truth(BufWriter::new(f), trace).context(|| format!("writing {}", path.display()))
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruthTrace> {
    let f = File::open(path).map_err(Into::into).context(|| format!("opening {}", path.display()))?;
    read_ground_truth(BufReader::new(f)).context(|| format!("reading {}", path.display()))
}

pub fn save_estimated(path: &Path, trace: &EstimatedTrace) -> Result<()> {
    let f = File::create(path).map_err(Into::into).context(|| format!("creating {}", path.display()))?;
    write_estimated(BufWriter::new(f), trace).context(|| format!("writing {}", path.display()))
}

pub fn load_estimated(path: &Path) -> Result<EstimatedTrace> {
    let f = File::open(path).map_err(Into::into).context(|| format!("opening {}", path.display()))?;
    read_estimated(BufReader::new(f)).context(|| format!("reading {}", path.display()))
}

/// Classifies a trace file by its header row.
pub fn detect_kind(path: &Path) -> Result<TraceKind> {
    let f = File::open(path).map_err(Into::into).context(|| format!("opening {}", path.display()))?;
    let mut rd = csv::Reader::from_reader(BufReader::new(f));
    let headers = rd.headers()?;
    if headers.iter().any(|h| h == "track_id") {
        Ok(TraceKind::Estimated)
    } else {
        Ok(TraceKind::GroundTruth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_scenario, SimConfig};

    #[test]
    fn ground_truth_roundtrip_is_lossless() {
        let cfg = SimConfig { duration_ticks: 5, seed: 3, ..SimConfig::default() };
        let trace = run_scenario(&cfg).unwrap();
        let mut buf = Vec::new();
        write_ground_truth(&mut buf, &trace).unwrap();
        let header = String::from_utf8_lossy(&buf).lines().next().unwrap().to_string();
        assert_eq!(
            header,
            "frame,vehicle_id,lane,cell,lateral_offset,speed_mps,accel_mps2,steering_deg,braking,orientation_deg,injected_flags,label"
        );
        assert_eq!(read_ground_truth(buf.as_slice()).unwrap(), trace);
    }

    #[test]
    fn malformed_row_is_an_error() {
        let text = "frame,vehicle_id,lane,cell,lateral_offset,speed_mps,accel_mps2,steering_deg,braking,orientation_deg,injected_flags,label\n0,1,1,x,0,0,0,0,none,0,-,safe\n";
        assert!(read_ground_truth(text.as_bytes()).is_err());
    }
}
