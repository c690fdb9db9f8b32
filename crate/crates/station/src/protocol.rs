//! The web-socket message envelope.
//!
//! ```text
//! client → station   {"op":"subscribe","topic":"telemetry"}
//!                    {"op":"call","id":"7","service":"run","payload":{"name":"demo"}}
//!                    {"op":"publish","topic":"manual_cmd","payload":{...}}
//! station → client   {"op":"response","id":"7","ok":true,"payload":{"run_id":1}}
//!                    {"op":"event","topic":"running","payload":{"running":true,"sim_time":0.0}}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Subscribe,
    Unsubscribe,
    Publish,
    Call,
    Response,
    Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationMessage {
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ok: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
}

/// A client message after envelope checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Subscribe(String),
    Unsubscribe(String),
    Publish { topic: String, id: Option<String>, payload: Value },
    Call { id: String, service: String, payload: Value },
}

impl StationMessage {
    pub fn response(id: Option<String>, result: Result<Value, String>) -> Self {
        let (ok, payload) = match result {
            Ok(v) => (true, v),
            Err(reason) => (false, json!({ "reason": reason })),
        };
        Self {
            op: Op::Response,
            topic: None,
            service: None,
            id,
            ok: Some(ok),
            payload: Some(payload),
        }
    }

    pub fn event(topic: &str, payload: Value) -> Self {
        Self {
            op: Op::Event,
            topic: Some(topic.to_string()),
            service: None,
            id: None,
            ok: None,
            payload: Some(payload),
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

/// Topic sent just before the station closes a session for a malformed message.
pub const PROTOCOL_ERROR_TOPIC: &str = "protocol_error";

/// Parses and checks a client frame. `Err` carries the protocol error reason.
pub fn parse_request(text: &str) -> Result<Request, String> {
    let msg: StationMessage = serde_json::from_str(text).map_err(|e| format!("malformed message: {e}"))?;
    let field = |v: Option<String>, name: &str| v.ok_or_else(|| format!("`{:?}` requires `{name}`", msg.op));
    let reject_extra = |present: bool, name: &str| {
        if present {
            Err(format!("`{name}` is not allowed on this op"))
        } else {
            Ok(())
        }
    };
    reject_extra(msg.ok.is_some(), "ok")?;
    match msg.op {
        Op::Subscribe | Op::Unsubscribe => {
            reject_extra(msg.service.is_some(), "service")?;
            reject_extra(msg.id.is_some(), "id")?;
            reject_extra(msg.payload.is_some(), "payload")?;
            let topic = field(msg.topic.clone(), "topic")?;
            Ok(if msg.op == Op::Subscribe {
                Request::Subscribe(topic)
            } else {
                Request::Unsubscribe(topic)
            })
        }
        Op::Publish => {
            reject_extra(msg.service.is_some(), "service")?;
            Ok(Request::Publish {
                topic: field(msg.topic.clone(), "topic")?,
                id: msg.id.clone(),
                payload: msg.payload.clone().unwrap_or(Value::Null),
            })
        }
        Op::Call => {
            reject_extra(msg.topic.is_some(), "topic")?;
            Ok(Request::Call {
                id: field(msg.id.clone(), "id")?,
                service: field(msg.service.clone(), "service")?,
                payload: msg.payload.clone().unwrap_or_else(|| json!({})),
            })
        }
        Op::Response | Op::Event => Err(format!("clients may not send `{:?}` messages", msg.op)),
    }
}
