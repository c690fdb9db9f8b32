use super::{Engine, Stamped};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

/// How fast simulated time runs against the wall clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pace {
    RealTime,
    /// Sim seconds per wall second.
    Scaled(f64),
    /// As fast as possible.
    Unpaced,
}

type Request = Box<dyn FnOnce(&mut Engine) + Send>;

enum Msg {
    Call(Request),
    Shutdown,
}

/// Cloneable handle for sending work to the engine thread.
#[derive(Clone)]
pub struct LiveHandle {
    tx: Sender<Msg>,
}

impl LiveHandle {
    /// Runs `f` on the engine at the next tick boundary and waits for its result.
    /// `None` when the host has shut down.
    pub fn call<R, F>(&self, f: F) -> Option<R>
    where
        R: Send + 'static,
        F: FnOnce(&mut Engine) -> R + Send + 'static,
    {
        let (reply_tx, reply_rx) = mpsc::channel();
        let req: Request = Box::new(move |e| {
            let _ = reply_tx.send(f(e));
        });
        self.tx.send(Msg::Call(req)).ok()?;
        reply_rx.recv().ok()
    }
}

pub struct LiveHost {
    handle: LiveHandle,
    thread: Option<JoinHandle<Engine>>,
}

impl LiveHost {
    /// Moves `engine` onto a new thread that steps it at `pace`, handing every
    /// batch of events to `sink` after each tick.
    pub fn spawn<S>(engine: Engine, pace: Pace, sink: S) -> Self
    where
        S: FnMut(Vec<Stamped>) + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        let thread = thread::Builder::new()
            .name("sib-engine".into())
            .spawn(move || host_loop(engine, pace, rx, sink))
            .expect("spawning the engine thread");
        Self {
            handle: LiveHandle { tx },
            thread: Some(thread),
        }
    }

    pub fn handle(&self) -> LiveHandle {
        self.handle.clone()
    }

    /// Stops the thread and returns the engine.
    pub fn shutdown(mut self) -> Engine {
        let _ = self.handle.tx.send(Msg::Shutdown);
        self.thread.take().expect("joined once").join().expect("engine thread panicked")
    }
}

impl Drop for LiveHost {
    fn drop(&mut self) {
        if let Some(t) = self.thread.take() {
            let _ = self.handle.tx.send(Msg::Shutdown);
            let _ = t.join();
        }
    }
}

fn host_loop<S: FnMut(Vec<Stamped>)>(mut engine: Engine, pace: Pace, rx: Receiver<Msg>, mut sink: S) -> Engine {
    let tick_wall = match pace {
        Pace::RealTime => Some(Duration::from_secs_f64(engine.clock().tick_dt)),
        Pace::Scaled(f) if f > 0.0 && f.is_finite() => Some(Duration::from_secs_f64(engine.clock().tick_dt / f)),
        _ => None,
    };
    let mut deadline = Instant::now();
    loop {
        // requests are applied between ticks, never during one
        loop {
            let msg = match tick_wall {
                Some(_) => match rx.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
                    Ok(m) => m,
                    Err(RecvTimeoutError::Timeout) => break,
                    Err(RecvTimeoutError::Disconnected) => return engine,
                },
                None => match rx.try_recv() {
                    Ok(m) => m,
                    Err(mpsc::TryRecvError::Empty) => break,
                    Err(mpsc::TryRecvError::Disconnected) => return engine,
                },
            };
            match msg {
                Msg::Call(f) => f(&mut engine),
                Msg::Shutdown => {
                    flush(&mut engine, &mut sink);
                    return engine;
                }
            }
        }
        flush(&mut engine, &mut sink);
        engine.step();
        flush(&mut engine, &mut sink);
        if let Some(period) = tick_wall {
            deadline += period;
            // after a long stall, resume pacing from now instead of bursting
            let now = Instant::now();
            if deadline + period * 10 < now {
                deadline = now;
            }
        }
    }
}

fn flush<S: FnMut(Vec<Stamped>)>(engine: &mut Engine, sink: &mut S) {
    let events = engine.drain_events();
    if !events.is_empty() {
        sink(events);
    }
}
