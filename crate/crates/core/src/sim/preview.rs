//! Faster-than-real-time runs on a private simulator, recorded as traces.

use super::{SimConfig, SimError, Trace};
use crate::engine::Engine;
use crate::lang::{BlockProgram, ExecStatus, RuntimeParams};
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct PreviewOptions {
    pub config: SimConfig,
    /// Spawn spacing along x, m.
    pub spacing: f64,
    /// Answers handed to prompts in order.
    pub answers: Vec<f64>,
    /// Sim seconds after which an unfinished preview is cut off.
    pub max_time: f64,
}

impl Default for PreviewOptions {
    fn default() -> Self {
        Self {
            config: SimConfig::default(),
            spacing: 1.0,
            answers: Vec::new(),
            max_time: 600.0,
        }
    }
}

/// Runs `program` on `n` fresh drones and records the initial state plus one
/// entry per tick until the program has ended and the swarm is at rest.
///
/// Preview never asks for run confirmation. A prompt with no answer left, or
/// running past `max_time`, ends the run with an error recorded in the trace.
pub fn preview_run(
    program: &BlockProgram,
    params: RuntimeParams,
    n: usize,
    options: &PreviewOptions,
) -> Result<Trace, SimError> {
    let mut engine = Engine::new(options.config, n, options.spacing)?;
    engine
        .set_params(RuntimeParams {
            confirm_before_run: false,
            ..params
        })
        .map_err(|e| SimError::InvalidCommand(e.to_string()))?;
    let mut answers: VecDeque<f64> = options.answers.iter().copied().collect();
    let max_ticks = (options.max_time / options.config.tick_dt).ceil() as u64;

    let mut entries = vec![engine.snapshot()];
    engine.run(program).map_err(|e| SimError::InvalidCommand(e.to_string()))?;
    answer_prompts(&mut engine, &mut answers);
    while !(engine.status().is_terminal() && engine.sim().is_settled()) {
        if engine.clock().tick_count >= max_ticks {
            if engine.status().is_terminal() {
                break;
            }
            engine.abort(&format!("preview exceeded {} s of simulated time", options.max_time));
            entries.push(engine.snapshot());
            break;
        }
        engine.step();
        answer_prompts(&mut engine, &mut answers);
        entries.push(engine.snapshot());
    }
    engine.drain_events();
    Ok(Trace {
        entries,
        error: engine.execution_state().error_message,
    })
}

fn answer_prompts(engine: &mut Engine, answers: &mut VecDeque<f64>) {
    while engine.status() == ExecStatus::Prompting {
        match answers.pop_front() {
            Some(v) => engine.answer_prompt(v).expect("program is prompting"),
            None => {
                let var = engine.execution_state().current_block.unwrap_or_default();
                engine.abort(&format!("prompt `{var}` has no answer in preview"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{Block, BlockKind};

    #[test]
    fn empty_program_is_one_snapshot() {
        let t = preview_run(&BlockProgram::new("e", vec![]), RuntimeParams::default(), 2, &PreviewOptions::default())
            .unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.entries[0].block_id.is_none());
        assert!(t.error.is_none());
    }

    #[test]
    fn takeoff_reaches_altitude_by_entry_20() {
        let p = BlockProgram::new("t", vec![Block::new("t", BlockKind::TakeoffAll).param("z", 1.0)]);
        let t = preview_run(&p, RuntimeParams::default(), 1, &PreviewOptions::default()).unwrap();
        let z: Vec<f64> = t.entries.iter().map(|e| e.drones[0].position().z).collect();
        assert!(z.windows(2).all(|w| w[1] >= w[0]));
        assert!((z[20] - 1.0).abs() <= 0.2);
        for (k, e) in t.entries.iter().enumerate() {
            assert_eq!(e.sim_time, k as f64 * 0.05);
        }
    }

    #[test]
    fn missing_answer_is_recorded() {
        let p = BlockProgram::new(
            "q",
            vec![Block::new("q", BlockKind::Prompt).param("var", "h").param("message", "height?")],
        );
        let t = preview_run(&p, RuntimeParams::default(), 1, &PreviewOptions::default()).unwrap();
        assert!(t.error.unwrap().contains("no answer"));
    }
}
