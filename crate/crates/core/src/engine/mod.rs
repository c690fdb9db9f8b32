//! Simulator plus interpreter, stepped as one unit.
//!
//! [`Engine::step`] is the only way time advances: the simulator ticks, every
//! [`Supervisor`] inspects the new state and may issue commands, then the
//! running program (if any) advances. Preview and live runs both drive an
//! `Engine`, which is what makes them identical tick for tick. [`LiveHost`]
//! owns an engine on its own thread and applies requests at tick boundaries.

mod live;

pub use live::{LiveHandle, LiveHost, Pace};

use crate::avoidance::Adjustment;
use crate::lang::{BlockProgram, ExecEvent, ExecStatus, Execution, ExecutionState, RunError, RuntimeParams};
use crate::sim::{DroneState, SimClock, SimConfig, SimError, SimEvent, Simulator, SwarmCommand, Trace, TraceEntry};
use serde_json::Value;
use std::any::Any;
use std::collections::BTreeMap;

/// Finished traces kept for download.
const KEPT_TRACES: usize = 16;
/// Telemetry period in sim seconds.
pub const TELEMETRY_PERIOD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum EngineEvent {
    Running(bool),
    Block(String),
    Error(String),
    Prompt { var: String, message: String },
    Adjusted(Vec<Adjustment>),
    Telemetry(Vec<DroneState>),
    Sim(SimEvent),
    /// Published by a supervisor.
    Topic { topic: String, payload: Value },
}

impl From<ExecEvent> for EngineEvent {
    fn from(e: ExecEvent) -> Self {
        match e {
            ExecEvent::Running(r) => EngineEvent::Running(r),
            ExecEvent::Block(id) => EngineEvent::Block(id),
            ExecEvent::Error(msg) => EngineEvent::Error(msg),
            ExecEvent::Prompt { var, message } => EngineEvent::Prompt { var, message },
            ExecEvent::Adjusted(a) => EngineEvent::Adjusted(a),
        }
    }
}

/// An event and the simulator time at which it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct Stamped {
    pub sim_time: f64,
    pub tick: u64,
    pub event: EngineEvent,
}

#[derive(Debug, Default)]
pub struct SupervisorOutput {
    pub commands: Vec<SwarmCommand>,
    pub events: Vec<(String, Value)>,
}

/// Inspects the swarm after every tick, before the program advances.
pub trait Supervisor: Send {
    fn inspect(&mut self, clock: SimClock, drones: &[DroneState]) -> SupervisorOutput;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub run_id: u64,
    pub program: String,
}

pub struct Engine {
    sim: Simulator,
    params: RuntimeParams,
    execution: Option<Execution>,
    run: Option<RunInfo>,
    next_run_id: u64,
    recording: Vec<TraceEntry>,
    traces: BTreeMap<u64, Trace>,
    supervisors: Vec<Box<dyn Supervisor>>,
    outbox: Vec<Stamped>,
    telemetry_every: u64,
    spacing: f64,
}

impl Engine {
    pub fn new(config: SimConfig, n: usize, spacing: f64) -> Result<Self, SimError> {
        let sim = Simulator::with_swarm(config, n, spacing)?;
        Ok(Self {
            telemetry_every: telemetry_every(config.tick_dt),
            sim,
            params: RuntimeParams::default(),
            execution: None,
            run: None,
            next_run_id: 1,
            recording: Vec::new(),
            traces: BTreeMap::new(),
            supervisors: Vec::new(),
            outbox: Vec::new(),
            spacing,
        })
    }

    pub fn sim(&self) -> &Simulator {
        &self.sim
    }

    pub fn clock(&self) -> SimClock {
        self.sim.clock()
    }

    pub fn drones(&self) -> &[DroneState] {
        self.sim.drones()
    }

    pub fn params(&self) -> RuntimeParams {
        self.params
    }

    /// Takes effect at the next run.
    pub fn set_params(&mut self, params: RuntimeParams) -> Result<(), RunError> {
        params.validate().map_err(RunError::InvalidParams)?;
        self.params = params;
        Ok(())
    }

    pub fn add_supervisor(&mut self, s: Box<dyn Supervisor>) {
        self.supervisors.push(s);
    }

    /// First supervisor of type `T`.
    pub fn supervisor_mut<T: 'static>(&mut self) -> Option<&mut T> {
        self.supervisors.iter_mut().find_map(|s| s.as_any_mut().downcast_mut::<T>())
    }

    pub fn is_running(&self) -> bool {
        self.execution.as_ref().is_some_and(|e| e.status().is_active())
    }

    pub fn current_run(&self) -> Option<&RunInfo> {
        self.run.as_ref()
    }

    pub fn execution_state(&self) -> ExecutionState {
        self.execution.as_ref().map(Execution::state).unwrap_or_else(ExecutionState::idle)
    }

    pub fn trace(&self, run_id: u64) -> Option<&Trace> {
        self.traces.get(&run_id)
    }

    /// Events produced since the last drain, oldest first.
    pub fn drain_events(&mut self) -> Vec<Stamped> {
        std::mem::take(&mut self.outbox)
    }

    fn emit(&mut self, event: EngineEvent) {
        let clock = self.sim.clock();
        self.outbox.push(Stamped {
            sim_time: clock.sim_time(),
            tick: clock.tick_count,
            event,
        });
    }

    fn emit_exec(&mut self, events: Vec<ExecEvent>) {
        for e in events {
            self.emit(e.into());
        }
    }

    /// Current swarm state tagged with the active block.
    pub fn snapshot(&self) -> TraceEntry {
        TraceEntry {
            sim_time: self.sim.sim_time(),
            block_id: self.execution.as_ref().and_then(|e| e.current_block().map(str::to_string)),
            drones: self.sim.drones().to_vec(),
        }
    }

    /// Starts a program. The first instantaneous blocks execute immediately.
    pub fn run(&mut self, program: &BlockProgram) -> Result<u64, RunError> {
        if self.is_running() {
            return Err(RunError::AlreadyRunning);
        }
        let run_id = self.next_run_id;
        self.next_run_id += 1;
        self.run = Some(RunInfo {
            run_id,
            program: program.name.clone(),
        });
        let mut events = Vec::new();
        let mut exec = Execution::start(program, self.params, &mut events);
        self.recording = vec![self.snapshot()];
        exec.advance(&mut self.sim, &mut events);
        self.execution = Some(exec);
        self.emit_exec(events);
        self.after_program_step();
        Ok(run_id)
    }

    pub fn stop(&mut self) -> Result<(), RunError> {
        let exec = self.execution.as_mut().ok_or(RunError::NotRunning)?;
        let mut events = Vec::new();
        exec.stop(&mut self.sim, &mut events)?;
        self.emit_exec(events);
        self.after_program_step();
        Ok(())
    }

    pub fn answer_prompt(&mut self, value: f64) -> Result<(), RunError> {
        let exec = self.execution.as_mut().ok_or(RunError::NotPrompting)?;
        let mut events = Vec::new();
        exec.answer_prompt(value, &mut events)?;
        exec.advance(&mut self.sim, &mut events);
        self.emit_exec(events);
        self.after_program_step();
        Ok(())
    }

    /// Ends the current run with an error.
    pub fn abort(&mut self, message: &str) {
        if let Some(exec) = self.execution.as_mut() {
            let mut events = Vec::new();
            exec.abort(message.to_string(), &mut self.sim, &mut events);
            self.emit_exec(events);
            self.after_program_step();
        }
    }

    /// Stops any program, then lands every airborne drone. Always succeeds.
    pub fn land_all(&mut self) {
        if self.is_running() {
            let _ = self.stop();
        }
        self.sim.command(SwarmCommand::LandAll).expect("land all never fails");
    }

    /// Direct swarm command, outside of any program.
    pub fn command(&mut self, cmd: SwarmCommand) -> Result<Vec<Adjustment>, SimError> {
        self.sim.command(cmd)
    }

    /// Replaces the swarm with `n` fresh landed drones.
    pub fn spawn(&mut self, n: usize) -> Result<(), RunError> {
        if self.is_running() {
            return Err(RunError::AlreadyRunning);
        }
        self.sim
            .respawn(n, self.spacing)
            .map_err(|e| RunError::InvalidParams(e.to_string()))
    }

    /// One simulator tick followed by supervisors and the program.
    pub fn step(&mut self) {
        for e in self.sim.tick() {
            self.emit(EngineEvent::Sim(e));
        }
        let clock = self.sim.clock();
        let mut supervisors = std::mem::take(&mut self.supervisors);
        for s in &mut supervisors {
            let out = s.inspect(clock, self.sim.drones());
            for cmd in out.commands {
                // supervisors only issue commands valid for the state they inspected
                let _ = self.sim.command(cmd);
            }
            for (topic, payload) in out.events {
                self.emit(EngineEvent::Topic { topic, payload });
            }
        }
        self.supervisors = supervisors;

        if let Some(exec) = self.execution.as_mut() {
            let mut events = Vec::new();
            exec.advance(&mut self.sim, &mut events);
            self.emit_exec(events);
        }
        if clock.tick_count % self.telemetry_every == 0 {
            self.emit(EngineEvent::Telemetry(self.sim.drones().to_vec()));
        }
        if self.run.is_some() && self.execution.is_some() {
            let entry = self.snapshot();
            self.recording.push(entry);
        }
        self.after_program_step();
    }

    /// Archives the trace once the program reaches a terminal state.
    fn after_program_step(&mut self) {
        let Some(exec) = &self.execution else { return };
        if !exec.is_terminal() {
            return;
        }
        let error = exec.state().error_message;
        if let Some(run) = &self.run {
            let trace = Trace {
                entries: std::mem::take(&mut self.recording),
                error,
            };
            self.traces.insert(run.run_id, trace);
            while self.traces.len() > KEPT_TRACES {
                self.traces.pop_first();
            }
        }
        // the execution itself stays readable until the next run
        self.run = None;
    }

    /// Status of the most recent execution.
    pub fn status(&self) -> ExecStatus {
        self.execution.as_ref().map_or(ExecStatus::Idle, Execution::status)
    }
}

fn telemetry_every(tick_dt: f64) -> u64 {
    ((TELEMETRY_PERIOD / tick_dt).round() as u64).max(1)
}
