//! Tick-driven interpreter for block programs.
//!
//! An [`Execution`] walks the program tree with an explicit frame stack. Each
//! call to [`Execution::advance`] runs instantaneous blocks until it reaches a
//! block that has to wait on the swarm (a wait, a flight maneuver or a
//! prompt), then returns; the owner calls it again after every simulator tick.
//! All interaction with drones goes through a [`SwarmPort`].
//!
//! Publication rule for the `block` topic: every block publishes its id right
//! before it executes, except that `Define` is a declaration and never
//! publishes, and `While` publishes once per condition evaluation that passes.
//! `Repeat` therefore appears once followed by its body `count` times, and
//! `If` appears once followed by the taken branch.

use super::program::{Block, BlockKind, BlockProgram, Condition, Operand, Param};
use crate::avoidance::Adjustment;
use crate::geometry::{self, yaw_difference, Formation, FormationKind, FormationSpec, Pose, Vec3};
use crate::sim::{Color, DroneState, EffectSpec, FlightMode, SimError, Simulator, SwarmCommand};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const MAX_CALL_DEPTH: usize = 32;
/// Instantaneous blocks executed per tick before yielding to the simulator.
const MAX_STEPS_PER_ADVANCE: usize = 10_000;
/// `current_block` while waiting for the run confirmation.
pub const CONFIRM_BLOCK_ID: &str = "$confirm";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuntimeParams {
    /// m
    pub nav_tolerance: f64,
    /// rad
    pub yaw_tolerance: f64,
    pub confirm_before_run: bool,
    /// s
    pub block_timeout: f64,
}

impl Default for RuntimeParams {
    fn default() -> Self {
        Self {
            nav_tolerance: 0.2,
            yaw_tolerance: 0.1,
            confirm_before_run: false,
            block_timeout: 60.0,
        }
    }
}

impl RuntimeParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.nav_tolerance) {
            return Err(format!("nav_tolerance must be positive, got {}", self.nav_tolerance));
        }
        if !positive(self.yaw_tolerance) {
            return Err(format!("yaw_tolerance must be positive, got {}", self.yaw_tolerance));
        }
        if !positive(self.block_timeout) {
            return Err(format!("block_timeout must be positive, got {}", self.block_timeout));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExecStatus {
    Idle,
    Running,
    Prompting,
    Stopping,
    Done,
    Errored,
}

impl ExecStatus {
    pub fn is_active(self) -> bool {
        matches!(self, ExecStatus::Running | ExecStatus::Prompting | ExecStatus::Stopping)
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, ExecStatus::Done | ExecStatus::Errored)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionState {
    pub status: ExecStatus,
    pub current_block: Option<String>,
    pub variables: BTreeMap<String, f64>,
    pub error_message: Option<String>,
}

impl ExecutionState {
    pub fn idle() -> Self {
        Self {
            status: ExecStatus::Idle,
            current_block: None,
            variables: BTreeMap::new(),
            error_message: None,
        }
    }
}

/// What an execution publishes, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExecEvent {
    Running(bool),
    Block(String),
    Error(String),
    Prompt { var: String, message: String },
    Adjusted(Vec<Adjustment>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("a program is already running")]
    AlreadyRunning,
    #[error("no program is running")]
    NotRunning,
    #[error("the program is not waiting for input")]
    NotPrompting,
    #[error("invalid runtime parameters: {0}")]
    InvalidParams(String),
}

/// The interpreter's view of the swarm.
pub trait SwarmPort {
    fn drones(&self) -> &[DroneState];
    fn tick_dt(&self) -> f64;
    fn tick_count(&self) -> u64;
    fn command(&mut self, cmd: SwarmCommand) -> Result<Vec<Adjustment>, SimError>;
}

impl SwarmPort for Simulator {
    fn drones(&self) -> &[DroneState] {
        Simulator::drones(self)
    }

    fn tick_dt(&self) -> f64 {
        self.clock().tick_dt
    }

    fn tick_count(&self) -> u64 {
        self.clock().tick_count
    }

    fn command(&mut self, cmd: SwarmCommand) -> Result<Vec<Adjustment>, SimError> {
        Simulator::command(self, cmd)
    }
}

type ListId = usize;
type NodeId = usize;

#[derive(Debug)]
struct Node {
    id: String,
    kind: BlockKind,
    params: BTreeMap<String, Param>,
    body: ListId,
    alt: ListId,
}

/// The program flattened into index-addressed nodes and block lists.
#[derive(Debug)]
struct Compiled {
    nodes: Vec<Node>,
    lists: Vec<Vec<NodeId>>,
    root: ListId,
    defines: BTreeMap<String, ListId>,
}

impl Compiled {
    fn new(p: &BlockProgram) -> Self {
        let mut c = Compiled {
            nodes: Vec::new(),
            lists: vec![Vec::new()],
            root: 0,
            defines: BTreeMap::new(),
        };
        c.root = c.list(&p.blocks);
        c
    }

    fn list(&mut self, blocks: &[Block]) -> ListId {
        if blocks.is_empty() {
            return 0;
        }
        let ids: Vec<NodeId> = blocks.iter().map(|b| self.node(b)).collect();
        self.lists.push(ids);
        self.lists.len() - 1
    }

    fn node(&mut self, b: &Block) -> NodeId {
        let body = self.list(b.slot("body"));
        let alt = self.list(b.slot("else"));
        if b.kind == BlockKind::Define {
            if let Some(Param::Text(name)) = b.params.get("name") {
                self.defines.insert(name.clone(), body);
            }
        }
        self.nodes.push(Node {
            id: b.id.clone(),
            kind: b.kind,
            params: b.params.clone(),
            body,
            alt,
        });
        self.nodes.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Looping {
    Once,
    Repeat { remaining: u64 },
    While { node: NodeId },
    Call { name: String },
}

#[derive(Debug, Clone)]
struct Frame {
    list: ListId,
    pos: usize,
    looping: Looping,
}

#[derive(Debug, Clone)]
enum Pending {
    Ticks { until: u64 },
    Reach { targets: Vec<(usize, Pose, bool)>, since: u64 },
    AllLanded { since: u64 },
}

enum Flow {
    Continue,
    Wait,
}

type Step<T> = Result<T, String>;

#[derive(Debug)]
pub struct Execution {
    program: Compiled,
    name: String,
    params: RuntimeParams,
    status: ExecStatus,
    stack: Vec<Frame>,
    vars: BTreeMap<String, f64>,
    current_block: Option<String>,
    error: Option<String>,
    pending: Option<Pending>,
    pending_block: Option<NodeId>,
    prompt_var: Option<String>,
    formation: Option<Formation>,
}

impl Execution {
    /// Begins a run: publishes `running = true` and either starts executing or,
    /// with `confirm_before_run`, waits for a confirmation answer.
    pub fn start(program: &BlockProgram, params: RuntimeParams, events: &mut Vec<ExecEvent>) -> Self {
        let compiled = Compiled::new(program);
        let root = compiled.root;
        let mut exec = Execution {
            program: compiled,
            name: program.name.clone(),
            params,
            status: ExecStatus::Running,
            stack: vec![Frame {
                list: root,
                pos: 0,
                looping: Looping::Once,
            }],
            vars: BTreeMap::new(),
            current_block: None,
            error: None,
            pending: None,
            pending_block: None,
            prompt_var: None,
            formation: None,
        };
        events.push(ExecEvent::Running(true));
        if params.confirm_before_run {
            exec.status = ExecStatus::Prompting;
            exec.current_block = Some(CONFIRM_BLOCK_ID.to_string());
            events.push(ExecEvent::Prompt {
                var: CONFIRM_BLOCK_ID.to_string(),
                message: format!("Run program `{}`? (nonzero = yes, 0 = cancel)", exec.name),
            });
        }
        exec
    }

    pub fn status(&self) -> ExecStatus {
        self.status
    }

    pub fn is_terminal(&self) -> bool {
        self.status.is_terminal()
    }

    pub fn params(&self) -> &RuntimeParams {
        &self.params
    }

    pub fn state(&self) -> ExecutionState {
        ExecutionState {
            status: self.status,
            current_block: self.current_block.clone(),
            variables: self.vars.clone(),
            error_message: self.error.clone(),
        }
    }

    pub fn current_block(&self) -> Option<&str> {
        self.current_block.as_deref()
    }

    /// Cooperative cancellation: airborne drones hover and the run ends as `Done`.
    pub fn stop(&mut self, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) -> Result<(), RunError> {
        if !matches!(self.status, ExecStatus::Running | ExecStatus::Prompting) {
            return Err(RunError::NotRunning);
        }
        self.status = ExecStatus::Stopping;
        let _ = port.command(SwarmCommand::Hover { drone: None });
        self.finish(events);
        Ok(())
    }

    pub fn answer_prompt(&mut self, value: f64, events: &mut Vec<ExecEvent>) -> Result<(), RunError> {
        if self.status != ExecStatus::Prompting {
            return Err(RunError::NotPrompting);
        }
        match self.prompt_var.take() {
            Some(var) => {
                self.vars.insert(var, value);
                self.status = ExecStatus::Running;
            }
            None if value != 0.0 => {
                self.status = ExecStatus::Running;
                self.current_block = None;
            }
            None => self.finish(events),
        }
        Ok(())
    }

    /// Fails the run from outside (for example an unanswerable prompt).
    pub fn abort(&mut self, message: String, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) {
        if !self.status.is_terminal() {
            self.fail(message, port, events);
        }
    }

    fn finish(&mut self, events: &mut Vec<ExecEvent>) {
        self.status = ExecStatus::Done;
        self.current_block = None;
        self.stack.clear();
        self.pending = None;
        events.push(ExecEvent::Running(false));
    }

    fn fail(&mut self, message: String, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) {
        events.push(ExecEvent::Error(message.clone()));
        self.error = Some(message);
        self.status = ExecStatus::Errored;
        self.current_block = None;
        self.stack.clear();
        self.pending = None;
        let _ = port.command(SwarmCommand::Hover { drone: None });
        events.push(ExecEvent::Running(false));
    }

    /// Runs until the program blocks, finishes or fails.
    pub fn advance(&mut self, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) {
        if self.status != ExecStatus::Running {
            return;
        }
        if let Some(pending) = &self.pending {
            match self.poll(pending, port) {
                Ok(true) => {
                    self.pending = None;
                    self.pending_block = None;
                }
                Ok(false) => return,
                Err(msg) => return self.fail(msg, port, events),
            }
        }
        for _ in 0..MAX_STEPS_PER_ADVANCE {
            match self.step(port, events) {
                Ok(Some(Flow::Continue)) => {}
                Ok(Some(Flow::Wait)) => return,
                Ok(None) => return self.finish(events),
                Err(msg) => return self.fail(msg, port, events),
            }
            if self.status != ExecStatus::Running {
                return;
            }
        }
    }

    /// One structural step. `Ok(None)` when the program is complete.
    fn step(&mut self, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) -> Step<Option<Flow>> {
        let Some(frame) = self.stack.last_mut() else {
            return Ok(None);
        };
        let list = &self.program.lists[frame.list];
        if frame.pos < list.len() {
            let node = list[frame.pos];
            frame.pos += 1;
            return self.exec(node, port, events).map(Some);
        }
        match frame.looping.clone() {
            Looping::Repeat { remaining } if remaining > 0 => {
                frame.looping = Looping::Repeat { remaining: remaining - 1 };
                frame.pos = 0;
            }
            Looping::While { node } => {
                if self.condition(node)? {
                    let frame = self.stack.last_mut().expect("frame");
                    frame.pos = 0;
                    self.publish(node, events);
                } else {
                    self.stack.pop();
                }
            }
            _ => {
                self.stack.pop();
            }
        }
        Ok(Some(Flow::Continue))
    }

    fn publish(&mut self, node: NodeId, events: &mut Vec<ExecEvent>) {
        let id = self.program.nodes[node].id.clone();
        self.current_block = Some(id.clone());
        events.push(ExecEvent::Block(id));
    }

    fn push(&mut self, list: ListId, looping: Looping) {
        self.stack.push(Frame { list, pos: 0, looping });
    }

    fn exec(&mut self, node: NodeId, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) -> Step<Flow> {
        let kind = self.program.nodes[node].kind;
        match kind {
            BlockKind::Define => return Ok(Flow::Continue),
            BlockKind::While => {
                if self.condition(node)? {
                    self.publish(node, events);
                    let body = self.program.nodes[node].body;
                    self.push(body, Looping::While { node });
                }
                return Ok(Flow::Continue);
            }
            _ => self.publish(node, events),
        }
        let n = &self.program.nodes[node];
        match kind {
            BlockKind::Repeat => {
                let count = match n.params.get("count") {
                    Some(Param::Int(c)) => *c as u64,
                    _ => return Err(self.msg(node, "count must be a nonnegative integer")),
                };
                if count > 0 {
                    self.push(n.body, Looping::Repeat { remaining: count - 1 });
                }
                Ok(Flow::Continue)
            }
            BlockKind::If => {
                let branch = if self.condition(node)? { n.body } else { n.alt };
                self.push(branch, Looping::Once);
                Ok(Flow::Continue)
            }
            BlockKind::Call => {
                let name = self.text(node, "name")?;
                let in_flight = self
                    .stack
                    .iter()
                    .filter(|f| matches!(f.looping, Looping::Call { .. }))
                    .count();
                if self.stack.iter().any(|f| f.looping == Looping::Call { name: name.clone() }) {
                    return Err(self.msg(node, &format!("recursive call to `{name}`")));
                }
                if in_flight >= MAX_CALL_DEPTH {
                    return Err(self.msg(node, &format!("call depth limit of {MAX_CALL_DEPTH} exceeded")));
                }
                let Some(&body) = self.program.defines.get(&name) else {
                    return Err(self.msg(node, &format!("`{name}` is not defined")));
                };
                self.push(body, Looping::Call { name });
                Ok(Flow::Continue)
            }
            BlockKind::SetVar => {
                let var = self.text(node, "var")?;
                let value = self.number(node, "value")?;
                let add = matches!(n.params.get("op"), Some(Param::Text(op)) if op == "add");
                let new = if add {
                    match self.vars.get(&var) {
                        Some(old) => old + value,
                        None => return Err(self.msg(node, &format!("undefined variable `{var}`"))),
                    }
                } else {
                    value
                };
                if !new.is_finite() {
                    return Err(self.msg(node, &format!("`{var}` is not finite")));
                }
                self.vars.insert(var, new);
                Ok(Flow::Continue)
            }
            BlockKind::Prompt => {
                let var = self.text(node, "var")?;
                let message = self.text(node, "message")?;
                self.prompt_var = Some(var.clone());
                self.status = ExecStatus::Prompting;
                events.push(ExecEvent::Prompt { var, message });
                Ok(Flow::Wait)
            }
            BlockKind::Wait => {
                let seconds = self.number(node, "seconds")?;
                if seconds < 0.0 {
                    return Err(self.msg(node, "wait time must not be negative"));
                }
                let ticks = (seconds / port.tick_dt() - 1e-9).ceil().max(0.0) as u64;
                if ticks == 0 {
                    return Ok(Flow::Continue);
                }
                self.block_on(node, Pending::Ticks {
                    until: port.tick_count() + ticks,
                })
            }
            BlockKind::TakeoffAll => {
                let z = self.number(node, "z")?;
                self.command(node, port, events, SwarmCommand::TakeoffAll { z })?;
                let targets = port
                    .drones()
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.mode == FlightMode::TakingOff)
                    .map(|(i, d)| (i, Pose::new(Vec3::new(d.position().x, d.position().y, z), 0.0), false))
                    .collect();
                self.block_on(node, Pending::Reach {
                    targets,
                    since: port.tick_count(),
                })
            }
            BlockKind::LandAll => {
                self.command(node, port, events, SwarmCommand::LandAll)?;
                self.block_on(node, Pending::AllLanded {
                    since: port.tick_count(),
                })
            }
            BlockKind::Navigate => self.navigate(node, port, events),
            BlockKind::ApplyFormation => self.apply_formation(node, port, events),
            BlockKind::Translate | BlockKind::Rotate | BlockKind::Scale => self.transform(node, port, events),
            BlockKind::LedEffect => {
                let spec = EffectSpec {
                    effect: self.text(node, "effect")?.parse().map_err(|e: String| self.msg(node, &e))?,
                    group: self.text(node, "group")?.parse().map_err(|e: String| self.msg(node, &e))?,
                    base_color: Color::new(self.channel(node, "r")?, self.channel(node, "g")?, self.channel(node, "b")?),
                    rate: self.number(node, "rate")?,
                };
                if !(spec.rate > 0.0) {
                    return Err(self.msg(node, "LED rate must be positive"));
                }
                self.command(node, port, events, SwarmCommand::Led(spec))?;
                Ok(Flow::Continue)
            }
            BlockKind::Define | BlockKind::While => unreachable!("handled above"),
        }
    }

    fn navigate(&mut self, node: NodeId, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) -> Step<Flow> {
        let drone = match self.program.nodes[node].params.get("drone") {
            Some(Param::Int(d)) => *d,
            _ => return Err(self.msg(node, "drone must be an integer")),
        };
        let point = Vec3::new(self.number(node, "x")?, self.number(node, "y")?, self.number(node, "z")?);
        let speed = self.number(node, "speed")?;
        let since = port.tick_count();
        if drone < 0 {
            // the whole swarm moves rigidly so that its centroid lands on the point
            let current = Formation {
                slots: port.drones().iter().map(|d| d.pose).collect(),
            };
            let moved = geometry::translate(&current, point - current.centroid());
            return self.fly_formation(node, port, events, moved, speed);
        }
        let id = drone as u32;
        let Some(index) = port.drones().iter().position(|d| d.id == id) else {
            return Err(self.msg(node, &format!("unknown drone {id}")));
        };
        self.command(node, port, events, SwarmCommand::Navigate {
            drone: id,
            position: point,
            yaw: None,
            speed,
        })?;
        self.formation = None;
        self.block_on(node, Pending::Reach {
            targets: vec![(index, Pose::at(point), false)],
            since,
        })
    }

    fn apply_formation(&mut self, node: NodeId, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) -> Step<Flow> {
        let kind: FormationKind = self
            .text(node, "kind")?
            .parse()
            .map_err(|e: geometry::GeometryError| self.msg(node, &e.to_string()))?;
        let n = match self.program.nodes[node].params.get("n") {
            Some(Param::Int(n)) => *n as usize,
            _ => return Err(self.msg(node, "n must be an integer")),
        };
        let swarm = port.drones().len();
        if n != swarm {
            return Err(self.msg(node, &format!("formation has {n} slots but the swarm has {swarm} drones")));
        }
        let size = self.number(node, "size")?;
        let height = match self.program.nodes[node].params.get("height") {
            Some(_) => self.number(node, "height")?,
            None => size,
        };
        let altitude = self.number(node, "altitude")?;
        let spec = FormationSpec {
            kind,
            n,
            size,
            height,
            altitude,
        };
        let target = geometry::generate(&spec).map_err(|e| self.msg(node, &e.to_string()))?;
        let current: Vec<Vec3> = port.drones().iter().map(|d| d.position()).collect();
        let assignment = geometry::assign(&current, &target).map_err(|e| self.msg(node, &e.to_string()))?;
        let ordered = Formation {
            slots: assignment
                .slot_of
                .iter()
                .zip(port.drones())
                .map(|(&slot, d)| Pose::new(target.slots[slot].position, d.pose.yaw))
                .collect(),
        };
        let speed = max_speed(port);
        self.fly_formation(node, port, events, ordered, speed)
    }

    fn transform(&mut self, node: NodeId, port: &mut dyn SwarmPort, events: &mut Vec<ExecEvent>) -> Step<Flow> {
        let base = match &self.formation {
            Some(f) if f.len() == port.drones().len() => f.clone(),
            _ => Formation {
                slots: port.drones().iter().map(|d| d.pose).collect(),
            },
        };
        let moved = match self.program.nodes[node].kind {
            BlockKind::Translate => {
                let offset = Vec3::new(self.number(node, "dx")?, self.number(node, "dy")?, self.number(node, "dz")?);
                geometry::translate(&base, offset)
            }
            BlockKind::Rotate => geometry::rotate(&base, self.number(node, "angle")?),
            BlockKind::Scale => {
                geometry::scale(&base, self.number(node, "factor")?).map_err(|e| self.msg(node, &e.to_string()))?
            }
            _ => unreachable!(),
        };
        let speed = max_speed(port);
        self.fly_formation(node, port, events, moved, speed)
    }

    /// Sends drone `i` to `slots[i]` as one de-conflicted transition.
    fn fly_formation(
        &mut self,
        node: NodeId,
        port: &mut dyn SwarmPort,
        events: &mut Vec<ExecEvent>,
        formation: Formation,
        speed: f64,
    ) -> Step<Flow> {
        let since = port.tick_count();
        let targets: Vec<(u32, Pose)> = port.drones().iter().map(|d| d.id).zip(formation.slots.iter().copied()).collect();
        let adjustments = self.command(node, port, events, SwarmCommand::SetTargets { targets, speed })?;
        // lifted goals are part of the accepted plan
        let reach = port
            .drones()
            .iter()
            .enumerate()
            .map(|(i, d)| (i, d.target.unwrap_or(formation.slots[i]), true))
            .collect();
        if !adjustments.is_empty() {
            events.push(ExecEvent::Adjusted(adjustments));
        }
        self.formation = Some(formation);
        self.block_on(node, Pending::Reach { targets: reach, since })
    }

    fn command(
        &mut self,
        node: NodeId,
        port: &mut dyn SwarmPort,
        _events: &mut Vec<ExecEvent>,
        cmd: SwarmCommand,
    ) -> Step<Vec<Adjustment>> {
        port.command(cmd).map_err(|e| self.msg(node, &e.to_string()))
    }

    fn block_on(&mut self, node: NodeId, pending: Pending) -> Step<Flow> {
        self.pending = Some(pending);
        self.pending_block = Some(node);
        Ok(Flow::Wait)
    }

    /// `Ok(true)` once the pending operation is complete.
    fn poll(&self, pending: &Pending, port: &dyn SwarmPort) -> Step<bool> {
        let node = self.pending_block.expect("pending block");
        let timed_out = |since: u64| {
            let elapsed = (port.tick_count() - since) as f64 * port.tick_dt();
            elapsed > self.params.block_timeout
        };
        match pending {
            Pending::Ticks { until } => Ok(port.tick_count() >= *until),
            Pending::Reach { targets, since } => {
                let drones = port.drones();
                let mut done = true;
                for &(i, goal, check_yaw) in targets {
                    let d = &drones[i];
                    if matches!(d.mode, FlightMode::Landing | FlightMode::Landed) {
                        return Err(self.msg(node, &format!("drone {} stopped flying", d.id)));
                    }
                    let near = d.position().distance(goal.position) <= self.params.nav_tolerance;
                    let aligned = !check_yaw || yaw_difference(d.pose.yaw, goal.yaw).abs() <= self.params.yaw_tolerance;
                    done &= near && aligned;
                }
                if !done && timed_out(*since) {
                    return Err(self.timeout(node));
                }
                Ok(done)
            }
            Pending::AllLanded { since } => {
                let done = port.drones().iter().all(|d| d.mode == FlightMode::Landed);
                if !done && timed_out(*since) {
                    return Err(self.timeout(node));
                }
                Ok(done)
            }
        }
    }

    fn timeout(&self, node: NodeId) -> String {
        self.msg(node, &format!("timed out after {} s", self.params.block_timeout))
    }

    fn msg(&self, node: NodeId, what: &str) -> String {
        let n = &self.program.nodes[node];
        format!("{} `{}`: {what}", n.kind, n.id)
    }

    fn operand(&self, node: NodeId, o: &Operand) -> Step<f64> {
        match o {
            Operand::Int(i) => Ok(*i as f64),
            Operand::Float(f) => Ok(*f),
            Operand::Var(v) => self
                .vars
                .get(v)
                .copied()
                .ok_or_else(|| self.msg(node, &format!("undefined variable `{v}`"))),
        }
    }

    fn condition(&self, node: NodeId) -> Step<bool> {
        let Some(Param::Cond(Condition { lhs, op, rhs })) = self.program.nodes[node].params.get("cond") else {
            return Err(self.msg(node, "missing condition"));
        };
        Ok(op.apply(self.operand(node, lhs)?, self.operand(node, rhs)?))
    }

    fn number(&self, node: NodeId, key: &str) -> Step<f64> {
        match self.program.nodes[node].params.get(key) {
            Some(Param::Int(i)) => Ok(*i as f64),
            Some(Param::Float(f)) => Ok(*f),
            Some(Param::Text(v)) => self
                .vars
                .get(v)
                .copied()
                .ok_or_else(|| self.msg(node, &format!("undefined variable `{v}`"))),
            _ => Err(self.msg(node, &format!("`{key}` must be a number"))),
        }
    }

    fn text(&self, node: NodeId, key: &str) -> Step<String> {
        match self.program.nodes[node].params.get(key) {
            Some(Param::Text(s)) => Ok(s.clone()),
            _ => Err(self.msg(node, &format!("`{key}` must be a string"))),
        }
    }

    fn channel(&self, node: NodeId, key: &str) -> Step<u8> {
        match self.program.nodes[node].params.get(key) {
            Some(Param::Int(c)) if (0..=255).contains(c) => Ok(*c as u8),
            _ => Err(self.msg(node, &format!("`{key}` must be an integer in 0..=255"))),
        }
    }
}

fn max_speed(port: &dyn SwarmPort) -> f64 {
    port.drones()
        .iter()
        .map(|d| d.max_speed)
        .fold(f64::INFINITY, f64::min)
        .min(f64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::sim::SimConfig;

    fn sim(n: usize) -> Simulator {
        Simulator::with_swarm(SimConfig::default(), n, 1.0).unwrap()
    }

    /// Runs to completion, ticking the simulator between advances.
    fn run(program: &BlockProgram, sim: &mut Simulator, max_ticks: usize) -> (Execution, Vec<ExecEvent>) {
        let mut events = Vec::new();
        let mut exec = Execution::start(program, RuntimeParams::default(), &mut events);
        exec.advance(sim, &mut events);
        for _ in 0..max_ticks {
            if exec.is_terminal() {
                break;
            }
            sim.tick();
            exec.advance(sim, &mut events);
        }
        (exec, events)
    }

    fn blocks(events: &[ExecEvent]) -> Vec<&str> {
        events
            .iter()
            .filter_map(|e| match e {
                ExecEvent::Block(id) => Some(id.as_str()),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn empty_program_publishes_running_twice() {
        let mut s = sim(1);
        let (exec, events) = run(&BlockProgram::new("e", vec![]), &mut s, 10);
        assert_eq!(exec.status(), ExecStatus::Done);
        assert_eq!(events, vec![ExecEvent::Running(true), ExecEvent::Running(false)]);
    }

    #[test]
    fn repeat_wait_publishes_four_blocks() {
        let p = BlockProgram::new(
            "r",
            vec![Block::new("rep", BlockKind::Repeat)
                .param("count", 3)
                .body(vec![Block::new("w", BlockKind::Wait).param("seconds", 0.1)])],
        );
        let mut s = sim(1);
        let (exec, events) = run(&p, &mut s, 100);
        assert_eq!(exec.status(), ExecStatus::Done);
        assert_eq!(blocks(&events), vec!["rep", "w", "w", "w"]);
        // 3 waits of 2 ticks each
        assert_eq!(s.clock().tick_count, 6);
    }

    #[test]
    fn zero_iterations() {
        let p = parse(
            br#"{"version":1,"name":"z","blocks":[
            {"id":"r","kind":"Repeat","params":{"count":0},"children":{"body":[{"id":"x","kind":"LandAll"}]}},
            {"id":"w","kind":"While","params":{"cond":{"lhs":1,"op":">","rhs":2}},"children":{"body":[{"id":"y","kind":"LandAll"}]}}]}"#,
        )
        .unwrap();
        let (_, events) = run(&p, &mut sim(1), 10);
        assert_eq!(blocks(&events), vec!["r"]);
    }

    #[test]
    fn if_else_branch() {
        let p = parse(
            br#"{"version":1,"name":"i","blocks":[
            {"id":"s","kind":"SetVar","params":{"var":"a","value":5}},
            {"id":"i","kind":"If","params":{"cond":{"lhs":"a","op":">=","rhs":6}},
             "children":{"body":[{"id":"t","kind":"SetVar","params":{"var":"b","value":1}}],
                         "else":[{"id":"e","kind":"SetVar","params":{"var":"b","value":2}}]}}]}"#,
        )
        .unwrap();
        let (exec, events) = run(&p, &mut sim(1), 10);
        assert_eq!(blocks(&events), vec!["s", "i", "e"]);
        assert_eq!(exec.state().variables["b"], 2.0);
    }

    #[test]
    fn while_counts_with_add() {
        let p = parse(
            br#"{"version":1,"name":"w","blocks":[
            {"id":"init","kind":"SetVar","params":{"var":"i","value":0}},
            {"id":"loop","kind":"While","params":{"cond":{"lhs":"i","op":"<","rhs":3}},
             "children":{"body":[{"id":"inc","kind":"SetVar","params":{"var":"i","value":1,"op":"add"}}]}}]}"#,
        )
        .unwrap();
        let (exec, events) = run(&p, &mut sim(1), 10);
        assert_eq!(blocks(&events), vec!["init", "loop", "inc", "loop", "inc", "loop", "inc"]);
        assert_eq!(exec.state().variables["i"], 3.0);
    }

    #[test]
    fn call_runs_definition_body() {
        let p = parse(
            br#"{"version":1,"name":"c","blocks":[
            {"id":"c1","kind":"Call","params":{"name":"f"}},
            {"id":"d","kind":"Define","params":{"name":"f"},"children":{"body":[{"id":"b","kind":"SetVar","params":{"var":"x","value":1}}]}},
            {"id":"c2","kind":"Call","params":{"name":"f"}}]}"#,
        )
        .unwrap();
        let (exec, events) = run(&p, &mut sim(1), 10);
        assert_eq!(exec.status(), ExecStatus::Done);
        assert_eq!(blocks(&events), vec!["c1", "b", "c2", "b"]);
    }

    #[test]
    fn recursion_is_a_runtime_error() {
        let p = parse(
            br#"{"version":1,"name":"rec","blocks":[
            {"id":"d","kind":"Define","params":{"name":"f"},"children":{"body":[{"id":"inner","kind":"Call","params":{"name":"f"}}]}},
            {"id":"c","kind":"Call","params":{"name":"f"}}]}"#,
        )
        .unwrap();
        let (exec, events) = run(&p, &mut sim(1), 10);
        assert_eq!(exec.status(), ExecStatus::Errored);
        let errors: Vec<_> = events.iter().filter(|e| matches!(e, ExecEvent::Error(_))).collect();
        assert_eq!(errors.len(), 1);
        assert!(exec.state().error_message.unwrap().contains("recursive"));
        assert_eq!(events.last(), Some(&ExecEvent::Running(false)));
    }

    #[test]
    fn undefined_variable_fails() {
        let p = parse(br#"{"version":1,"name":"u","blocks":[{"id":"w","kind":"Wait","params":{"seconds":"t"}}]}"#).unwrap();
        let (exec, _) = run(&p, &mut sim(1), 10);
        assert_eq!(exec.status(), ExecStatus::Errored);
        assert!(exec.state().error_message.unwrap().contains("undefined variable `t`"));
    }

    #[test]
    fn prompt_then_answer() {
        let p = parse(
            br#"{"version":1,"name":"p","blocks":[
            {"id":"q","kind":"Prompt","params":{"var":"h","message":"height?"}},
            {"id":"s","kind":"SetVar","params":{"var":"g","value":"h"}}]}"#,
        )
        .unwrap();
        let mut s = sim(1);
        let mut events = Vec::new();
        let mut exec = Execution::start(&p, RuntimeParams::default(), &mut events);
        assert_eq!(exec.answer_prompt(1.0, &mut events), Err(RunError::NotPrompting));
        exec.advance(&mut s, &mut events);
        assert_eq!(exec.status(), ExecStatus::Prompting);
        assert_eq!(exec.current_block(), Some("q"));
        exec.answer_prompt(2.5, &mut events).unwrap();
        exec.advance(&mut s, &mut events);
        assert_eq!(exec.status(), ExecStatus::Done);
        assert_eq!(exec.state().variables["g"], 2.5);
    }

    #[test]
    fn confirmation_can_cancel() {
        let mut events = Vec::new();
        let params = RuntimeParams {
            confirm_before_run: true,
            ..RuntimeParams::default()
        };
        let p = BlockProgram::new("c", vec![Block::new("l", BlockKind::LandAll)]);
        let mut exec = Execution::start(&p, params, &mut events);
        assert_eq!(exec.status(), ExecStatus::Prompting);
        exec.answer_prompt(0.0, &mut events).unwrap();
        assert_eq!(exec.status(), ExecStatus::Done);
        assert_eq!(blocks(&events), Vec::<&str>::new());
        assert_eq!(events.first(), Some(&ExecEvent::Running(true)));
        assert_eq!(events.last(), Some(&ExecEvent::Running(false)));
    }

    #[test]
    fn navigate_completes_within_tolerance() {
        let p = parse(
            br#"{"version":1,"name":"n","blocks":[
            {"id":"t","kind":"TakeoffAll","params":{"z":1}},
            {"id":"n","kind":"Navigate","params":{"drone":0,"x":1,"y":0,"z":1,"speed":1}}]}"#,
        )
        .unwrap();
        let mut s = sim(1);
        let mut events = Vec::new();
        let mut exec = Execution::start(&p, RuntimeParams::default(), &mut events);
        exec.advance(&mut s, &mut events);
        let mut nav_start = None;
        while !exec.is_terminal() {
            s.tick();
            exec.advance(&mut s, &mut events);
            if nav_start.is_none() && exec.current_block() == Some("n") {
                nav_start = Some(s.sim_time());
            }
        }
        let elapsed = s.sim_time() - nav_start.unwrap();
        assert!((0.8 - 1e-9..=1.0 + 2.0 * 0.05).contains(&elapsed), "{elapsed}");
        assert!(s.drones()[0].position().distance(Vec3::new(1.0, 0.0, 1.0)) <= 0.2);
    }

    #[test]
    fn navigate_landed_drone_errors() {
        let p = parse(br#"{"version":1,"name":"n","blocks":[{"id":"n","kind":"Navigate","params":{"drone":0,"x":1,"y":0,"z":1,"speed":1}}]}"#).unwrap();
        let (exec, _) = run(&p, &mut sim(1), 10);
        assert_eq!(exec.status(), ExecStatus::Errored);
        assert!(exec.state().error_message.unwrap().contains("not airborne"));
    }

    #[test]
    fn timeout_is_an_error() {
        let p = parse(
            br#"{"version":1,"name":"slow","blocks":[
            {"id":"t","kind":"TakeoffAll","params":{"z":1}},
            {"id":"far","kind":"Navigate","params":{"drone":0,"x":100,"y":0,"z":1,"speed":1}}]}"#,
        )
        .unwrap();
        let mut s = sim(1);
        let mut events = Vec::new();
        let params = RuntimeParams {
            block_timeout: 2.0,
            ..RuntimeParams::default()
        };
        let mut exec = Execution::start(&p, params, &mut events);
        exec.advance(&mut s, &mut events);
        for _ in 0..200 {
            s.tick();
            exec.advance(&mut s, &mut events);
        }
        assert_eq!(exec.status(), ExecStatus::Errored);
        assert!(exec.state().error_message.unwrap().contains("timed out"));
    }

    #[test]
    fn stop_requires_running() {
        let mut s = sim(1);
        let mut events = Vec::new();
        let p = BlockProgram::new("w", vec![Block::new("w", BlockKind::Wait).param("seconds", 10.0)]);
        let mut exec = Execution::start(&p, RuntimeParams::default(), &mut events);
        exec.advance(&mut s, &mut events);
        exec.stop(&mut s, &mut events).unwrap();
        assert_eq!(exec.status(), ExecStatus::Done);
        assert_eq!(exec.stop(&mut s, &mut events), Err(RunError::NotRunning));
    }

    #[test]
    fn busy_loop_yields_each_tick() {
        let p = parse(
            br#"{"version":1,"name":"spin","blocks":[
            {"id":"w","kind":"While","params":{"cond":{"lhs":0,"op":"==","rhs":0}},"children":{"body":[
                {"id":"s","kind":"SetVar","params":{"var":"x","value":1}}]}}]}"#,
        )
        .unwrap();
        let mut s = sim(1);
        let mut events = Vec::new();
        let mut exec = Execution::start(&p, RuntimeParams::default(), &mut events);
        exec.advance(&mut s, &mut events);
        assert_eq!(exec.status(), ExecStatus::Running);
        exec.stop(&mut s, &mut events).unwrap();
        assert_eq!(exec.status(), ExecStatus::Done);
    }
}
