//! Operator station: a web-socket topic/service bridge in front of a live
//! simulator, plus HTTP endpoints for programs and traces.
//!
//! ```no_run
//! # async fn demo() -> Result<(), sib_station::StationError> {
//! let station = sib_station::Station::start(sib_station::StationConfig::new("programs")).await?;
//! println!("listening on {}", station.addr());
//! # Ok(())
//! # }
//! ```

mod protocol;
mod safe_area;
mod server;
mod services;
mod topics;

pub use protocol::{parse_request, Op, Request, StationMessage, PROTOCOL_ERROR_TOPIC};
pub use safe_area::{SafeArea, SafeAreaGuard, VIOLATION_TOPIC};
pub use server::{Station, StationConfig, StationError};
pub use services::{ManualCmd, SERVICES};
pub use topics::{is_writable, topic_payload, TopicInfo, TopicRegistry, MANUAL_TOPIC, TOPICS};
