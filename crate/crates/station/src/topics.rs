//! Topic registry, and the mapping from engine events to topic payloads.

use crate::safe_area::VIOLATION_TOPIC;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sib_core::engine::{EngineEvent, Stamped};
use sib_core::sim::{DroneState, SimEvent};
use std::collections::{BTreeMap, BTreeSet};

pub const MANUAL_TOPIC: &str = "manual_cmd";

/// `(name, message_kind)` for every topic the station knows.
pub const TOPICS: &[(&str, &str)] = &[
    ("running", "Running"),
    ("block", "Block"),
    ("error", "Error"),
    ("prompt", "Prompt"),
    ("telemetry", "Telemetry"),
    (VIOLATION_TOPIC, "SafeAreaViolation"),
    ("avoidance", "Adjustments"),
    ("drone_events", "DroneEvent"),
    (MANUAL_TOPIC, "ManualCommand"),
];

/// Topics clients may publish to.
pub fn is_writable(topic: &str) -> bool {
    topic == MANUAL_TOPIC
}

pub fn is_known(topic: &str) -> bool {
    TOPICS.iter().any(|(name, _)| *name == topic)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicInfo {
    pub name: String,
    pub message_kind: String,
    pub publisher_count: usize,
    pub last_publish_sim_time: Option<f64>,
    pub message_count: u64,
}

#[derive(Debug, Default)]
struct TopicStats {
    last_publish_sim_time: Option<f64>,
    message_count: u64,
    /// Sessions currently publishing (client-writable topics only).
    client_publishers: BTreeSet<u64>,
}

#[derive(Debug, Default)]
pub struct TopicRegistry {
    stats: BTreeMap<&'static str, TopicStats>,
}

impl TopicRegistry {
    pub fn new() -> Self {
        Self {
            stats: TOPICS.iter().map(|(name, _)| (*name, TopicStats::default())).collect(),
        }
    }

    pub fn record(&mut self, topic: &str, sim_time: f64) {
        if let Some(s) = self.stats.get_mut(topic) {
            s.message_count += 1;
            s.last_publish_sim_time = Some(sim_time);
        }
    }

    pub fn add_client_publisher(&mut self, topic: &str, session: u64) {
        if let Some(s) = self.stats.get_mut(topic) {
            s.client_publishers.insert(session);
        }
    }

    pub fn remove_session(&mut self, session: u64) {
        for s in self.stats.values_mut() {
            s.client_publishers.remove(&session);
        }
    }

    pub fn list(&self) -> Vec<TopicInfo> {
        TOPICS
            .iter()
            .map(|(name, kind)| {
                let s = &self.stats[name];
                TopicInfo {
                    name: name.to_string(),
                    message_kind: kind.to_string(),
                    // the station itself publishes every topic except the client-fed one
                    publisher_count: if is_writable(name) { s.client_publishers.len() } else { 1 },
                    last_publish_sim_time: s.last_publish_sim_time,
                    message_count: s.message_count,
                }
            })
            .collect()
    }
}

fn drone_json(d: &DroneState) -> Value {
    let p = d.position();
    json!({
        "id": d.id,
        "x": p.x, "y": p.y, "z": p.z, "yaw": d.pose.yaw,
        "vx": d.velocity.x, "vy": d.velocity.y, "vz": d.velocity.z,
        "mode": d.mode.name(),
        "r": d.led.r, "g": d.led.g, "b": d.led.b,
        "battery": d.battery,
        "cpu": d.cpu,
    })
}

/// Topic and payload for an engine event. Every payload carries `sim_time`.
pub fn topic_payload(s: &Stamped) -> (String, Value) {
    let t = s.sim_time;
    let (topic, payload) = match &s.event {
        EngineEvent::Running(r) => ("running", json!({ "running": r, "sim_time": t })),
        EngineEvent::Block(id) => ("block", json!({ "block_id": id, "sim_time": t })),
        EngineEvent::Error(msg) => ("error", json!({ "message": msg, "sim_time": t })),
        EngineEvent::Prompt { var, message } => ("prompt", json!({ "var": var, "message": message, "sim_time": t })),
        EngineEvent::Telemetry(drones) => (
            "telemetry",
            json!({ "sim_time": t, "tick": s.tick, "drones": drones.iter().map(drone_json).collect::<Vec<_>>() }),
        ),
        EngineEvent::Adjusted(adjustments) => ("avoidance", json!({ "adjustments": adjustments, "sim_time": t })),
        EngineEvent::Sim(e) => ("drone_events", sim_event_json(e, t)),
        EngineEvent::Topic { topic, payload } => {
            let mut payload = payload.clone();
            if let Value::Object(m) = &mut payload {
                m.insert("sim_time".into(), json!(t));
            }
            return (topic.clone(), payload);
        }
    };
    (topic.to_string(), payload)
}

fn sim_event_json(e: &SimEvent, t: f64) -> Value {
    match e {
        SimEvent::ModeChanged { drone, from, to } => {
            json!({ "kind": "mode_changed", "drone": drone, "from": from.name(), "to": to.name(), "sim_time": t })
        }
        SimEvent::Arrived { drone } => json!({ "kind": "arrived", "drone": drone, "sim_time": t }),
        SimEvent::BatteryDepleted { drone } => json!({ "kind": "battery_depleted", "drone": drone, "sim_time": t }),
    }
}
