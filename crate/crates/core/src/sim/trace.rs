//! Per-tick recordings of a run, and their JSON-lines file format.
//!
//! One line per entry:
//! `{"t":0.05,"block":"b1","drones":[{"id":0,"x":0.0,"y":0.0,"z":0.05,"yaw":0.0,"mode":"TakingOff","r":0,"g":0,"b":0,"battery":0.99}]}`

use super::drone::{DroneState, FlightMode};
use serde::{Deserialize, Serialize};
use std::io::{self, BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub sim_time: f64,
    pub block_id: Option<String>,
    pub drones: Vec<DroneState>,
}

/// A drone as it appears in a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDrone {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub mode: FlightMode,
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub battery: f64,
}

impl From<&DroneState> for TraceDrone {
    fn from(d: &DroneState) -> Self {
        let p = d.position();
        TraceDrone {
            id: d.id,
            x: p.x,
            y: p.y,
            z: p.z,
            yaw: d.pose.yaw,
            mode: d.mode,
            r: d.led.r,
            g: d.led.g,
            b: d.led.b,
            battery: d.battery,
        }
    }
}

/// One parsed trace line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLine {
    pub t: f64,
    pub block: Option<String>,
    pub drones: Vec<TraceDrone>,
}

impl From<&TraceEntry> for TraceLine {
    fn from(e: &TraceEntry) -> Self {
        TraceLine {
            t: e.sim_time,
            block: e.block_id.clone(),
            drones: e.drones.iter().map(TraceDrone::from).collect(),
        }
    }
}

/// A complete trace plus how the run ended.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    /// Runtime error that terminated the run, if any.
    pub error: Option<String>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        write_jsonl(&self.entries, &mut out)
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

pub fn write_jsonl<W: Write>(entries: &[TraceEntry], out: &mut W) -> io::Result<()> {
    for e in entries {
        serde_json::to_writer(&mut *out, &TraceLine::from(e))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Vec<TraceLine>> {
    let mut lines = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("trace line {}: {e}", n + 1))
        })?;
        lines.push(parsed);
    }
    Ok(lines)
}
