//! Service registry. Every service takes a JSON object and answers with one.

use crate::safe_area::{SafeArea, SafeAreaGuard};
use crate::server::Shared;
use serde::Deserialize;
use serde_json::{json, Value};
use sib_core::lang::{parse_value, BlockProgram, RuntimeParams};
use sib_core::sim::SwarmCommand;
use sib_core::Vec3;

pub const SERVICES: &[&str] = &[
    "run",
    "stop",
    "store",
    "load",
    "list_programs",
    "land_all",
    "set_safe_area",
    "get_safe_area",
    "list_topics",
    "spawn",
    "answer_prompt",
    "set_params",
];

type Reply = Result<Value, String>;

fn args<T: for<'de> Deserialize<'de>>(payload: Value) -> Result<T, String> {
    serde_json::from_value(payload).map_err(|e| format!("invalid payload: {e}"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoArgs {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunArgs {
    name: Option<String>,
    program: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NameArgs {
    name: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StoreArgs {
    name: String,
    program: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpawnArgs {
    n: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerArgs {
    value: f64,
}

/// Runs `service`. Blocks until the engine has applied it.
pub fn call(shared: &Shared, service: &str, payload: Value) -> Reply {
    match service {
        "run" => {
            let a: RunArgs = args(payload)?;
            let program: BlockProgram = match (a.name, a.program) {
                (Some(name), None) => shared.store.load(&name).map_err(|e| e.to_string())?,
                (None, Some(doc)) => parse_value(&doc).map_err(|e| e.to_string())?,
                _ => return Err("run takes exactly one of `name` or `program`".into()),
            };
            let run_id = shared.engine(move |e| e.run(&program))?.map_err(|e| e.to_string())?;
            Ok(json!({ "run_id": run_id }))
        }
        "stop" => {
            let _: NoArgs = args(payload)?;
            shared.engine(|e| e.stop())?.map_err(|e| e.to_string())?;
            Ok(json!({}))
        }
        "store" => {
            let a: StoreArgs = args(payload)?;
            let program = parse_value(&a.program).map_err(|e| e.to_string())?;
            let name = shared.store.store(&a.name, &program).map_err(|e| e.to_string())?;
            Ok(json!({ "name": name }))
        }
        "load" => {
            let a: NameArgs = args(payload)?;
            let program = shared.store.load(&a.name).map_err(|e| e.to_string())?;
            Ok(json!({ "name": a.name, "program": program }))
        }
        "list_programs" => {
            let _: NoArgs = args(payload)?;
            Ok(json!({ "programs": shared.store.list().map_err(|e| e.to_string())? }))
        }
        "land_all" => {
            let _: NoArgs = args(payload)?;
            shared.engine(|e| e.land_all())?;
            Ok(json!({}))
        }
        "set_safe_area" => {
            let area: SafeArea = args(payload)?;
            area.validate()?;
            shared.engine(move |e| {
                if let Some(g) = e.supervisor_mut::<SafeAreaGuard>() {
                    g.set_area(area);
                }
            })?;
            Ok(json!(area))
        }
        "get_safe_area" => {
            let _: NoArgs = args(payload)?;
            let area = shared.engine(|e| e.supervisor_mut::<SafeAreaGuard>().map(|g| g.area()))?;
            Ok(json!(area.unwrap_or_default()))
        }
        "list_topics" => {
            let _: NoArgs = args(payload)?;
            Ok(json!({ "topics": shared.topics.lock().expect("topic registry").list() }))
        }
        "spawn" => {
            let a: SpawnArgs = args(payload)?;
            shared.engine(move |e| e.spawn(a.n))?.map_err(|e| e.to_string())?;
            Ok(json!({ "n": a.n }))
        }
        "answer_prompt" => {
            let a: AnswerArgs = args(payload)?;
            if !a.value.is_finite() {
                return Err("answer must be a finite number".into());
            }
            shared.engine(move |e| e.answer_prompt(a.value))?.map_err(|e| e.to_string())?;
            Ok(json!({}))
        }
        "set_params" => {
            let Value::Object(update) = payload else {
                return Err("invalid payload: expected an object".into());
            };
            let current = shared.engine(|e| e.params())?;
            let mut merged = serde_json::to_value(current).expect("params serialize");
            merged.as_object_mut().expect("object").extend(update);
            let params: RuntimeParams = args(merged)?;
            shared.engine(move |e| e.set_params(params))?.map_err(|e| e.to_string())?;
            Ok(json!(params))
        }
        _ => Err("unknown service".into()),
    }
}

/// Body of a `manual_cmd` publish.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManualCmd {
    pub drone: u32,
    /// m/s
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    /// rad/s
    #[serde(default)]
    pub yaw_rate: f64,
    /// `true` when vx/vy are forward/left relative to the drone's heading.
    #[serde(default)]
    pub body_frame: bool,
}

/// Applies a manual velocity command; returns the sim time it took effect.
pub fn manual(shared: &Shared, payload: Value) -> Result<f64, String> {
    let cmd: ManualCmd = args(payload)?;
    shared
        .engine(move |e| {
            e.command(SwarmCommand::ManualVelocity {
                drone: cmd.drone,
                velocity: Vec3::new(cmd.vx, cmd.vy, cmd.vz),
                yaw_rate: cmd.yaw_rate,
                body_frame: cmd.body_frame,
            })
            .map(|_| e.clock().sim_time())
        })?
        .map_err(|e| e.to_string())
}
