//! Independent reference implementations shared by the integration tests and
//! the acceptance run. Nothing here calls into the code under test except for
//! plain data types.
#![allow(dead_code)]

use itertools::Itertools;
use rand::Rng;
use sib_core::avoidance::Trajectory;
use sib_core::lang::{Block, BlockKind, BlockProgram, CompareOp, Condition, Operand, Param};
use sib_core::Vec3;
use std::collections::BTreeMap;

/// Minimum total squared distance over every permutation.
pub fn brute_force_cost(current: &[Vec3], slots: &[Vec3]) -> f64 {
    (0..slots.len())
        .permutations(slots.len())
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| {
                    let d = current[i] - slots[j];
                    d.x * d.x + d.y * d.y + d.z * d.z
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Position of a straight constant-speed transition, written out from the
/// definition: hold, fly, hold.
pub fn position(t: &Trajectory, time: f64) -> Vec3 {
    let len = (t.goal - t.start).norm();
    if t.speed == 0.0 || len == 0.0 || time <= t.depart_time {
        return t.start;
    }
    let travelled = (time - t.depart_time) * t.speed;
    if travelled >= len {
        t.goal
    } else {
        t.start + (t.goal - t.start) * (travelled / len)
    }
}

fn end_time(t: &Trajectory) -> f64 {
    let len = (t.goal - t.start).norm();
    if t.speed == 0.0 {
        t.depart_time
    } else {
        t.depart_time + len / t.speed
    }
}

/// Sampled `(min separation, time)` at `step` spacing over the joint window,
/// including its end point.
pub fn sampled_min_distance(a: &Trajectory, b: &Trajectory, step: f64) -> (f64, f64) {
    let t0 = a.depart_time.min(b.depart_time);
    let t1 = end_time(a).max(end_time(b));
    let samples = ((t1 - t0) / step).ceil() as usize;
    let mut best = (f64::INFINITY, t0);
    for k in 0..=samples {
        let t = (t0 + k as f64 * step).min(t1);
        let d = (position(a, t) - position(b, t)).norm();
        if d < best.0 {
            best = (d, t);
        }
    }
    best
}

/// Smallest pairwise separation of a whole plan, sampled every `step`.
pub fn plan_min_separation(plan: &[Trajectory], step: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..plan.len() {
        for j in i + 1..plan.len() {
            best = best.min(sampled_min_distance(&plan[i], &plan[j], step).0);
        }
    }
    best
}

/// Fully saturated, full value HSV to 8-bit RGB for the hue `num/den`
/// degrees, in exact integer arithmetic. Halves round up.
pub fn hue_to_rgb(num: u64, den: u64) -> (u8, u8, u8) {
    // work in units of 1/(60·den) of a sector
    let unit = 60 * den;
    let h = num % (360 * den);
    let sector = h / unit;
    let within = h % unit;
    // x = 1 - |(h/60 mod 2) - 1| as a fraction of `unit`
    let x = if sector % 2 == 0 { within } else { unit - within };
    let ch = |v: u64| ((2 * 255 * v + unit) / (2 * unit)) as u8;
    let (full, x) = (ch(unit), ch(x));
    match sector {
        0 => (full, x, 0),
        1 => (x, full, 0),
        2 => (0, full, x),
        3 => (0, x, full),
        4 => (x, 0, full),
        _ => (full, 0, x),
    }
}

fn compare(op: CompareOp, lhs: f64, rhs: f64) -> bool {
    match op.symbol() {
        "<" => lhs < rhs,
        "<=" => lhs <= rhs,
        ">" => lhs > rhs,
        ">=" => lhs >= rhs,
        "==" => lhs == rhs,
        "!=" => lhs != rhs,
        other => panic!("unknown comparison {other}"),
    }
}

fn number(p: &Param) -> f64 {
    match p {
        Param::Int(i) => *i as f64,
        Param::Float(f) => *f,
        other => panic!("expected a literal number, got {other:?}"),
    }
}

struct Walker<'a> {
    defines: BTreeMap<&'a str, &'a [Block]>,
    vars: BTreeMap<String, f64>,
    out: Vec<String>,
}

impl<'a> Walker<'a> {
    fn operand(&self, o: &Operand) -> f64 {
        match o {
            Operand::Int(i) => *i as f64,
            Operand::Float(f) => *f,
            Operand::Var(v) => self.vars[v],
        }
    }

    fn holds(&self, b: &Block) -> bool {
        let Some(Param::Cond(c)) = b.params.get("cond") else {
            panic!("block {} has no condition", b.id)
        };
        compare(c.op, self.operand(&c.lhs), self.operand(&c.rhs))
    }

    fn text(b: &'a Block, name: &str) -> &'a str {
        match &b.params[name] {
            Param::Text(s) => s,
            other => panic!("expected text, got {other:?}"),
        }
    }

    fn list(&mut self, blocks: &'a [Block]) {
        for b in blocks {
            self.block(b);
        }
    }

    fn block(&mut self, b: &'a Block) {
        match b.kind {
            BlockKind::Define => {}
            BlockKind::While => {
                while self.holds(b) {
                    self.out.push(b.id.clone());
                    self.list(b.slot("body"));
                }
            }
            _ => {
                self.out.push(b.id.clone());
                match b.kind {
                    BlockKind::Repeat => {
                        for _ in 0..number(&b.params["count"]) as u64 {
                            self.list(b.slot("body"));
                        }
                    }
                    BlockKind::If => {
                        let slot = if self.holds(b) { "body" } else { "else" };
                        self.list(b.slot(slot));
                    }
                    BlockKind::Call => {
                        let body = self.defines[Self::text(b, "name")];
                        self.list(body);
                    }
                    BlockKind::SetVar => {
                        let var = Self::text(b, "var").to_string();
                        let value = number(&b.params["value"]);
                        let add = matches!(b.params.get("op"), Some(Param::Text(op)) if op == "add");
                        let new = if add { self.vars[&var] + value } else { value };
                        self.vars.insert(var, new);
                    }
                    _ => {}
                }
            }
        }
    }
}

/// The block ids an interpreter publishes for `program`, in order, assuming
/// it only uses control flow, `SetVar`, `Wait` and `LedEffect`.
pub fn expected_blocks(program: &BlockProgram) -> Vec<String> {
    let mut w = Walker {
        defines: BTreeMap::new(),
        vars: BTreeMap::new(),
        out: Vec::new(),
    };
    for b in &program.blocks {
        if b.kind == BlockKind::Define {
            w.defines.insert(Walker::text(b, "name"), b.slot("body"));
        }
    }
    w.list(&program.blocks);
    w.out
}

/// Random terminating programs built from control flow and instant blocks.
pub struct ProgramGen<R> {
    rng: R,
    next_id: usize,
    next_counter: usize,
}

const MAX_DEPTH: usize = 3;

impl<R: Rng> ProgramGen<R> {
    pub fn new(rng: R) -> Self {
        Self {
            rng,
            next_id: 0,
            next_counter: 0,
        }
    }

    fn id(&mut self) -> String {
        self.next_id += 1;
        format!("b{}", self.next_id)
    }

    fn cond(&mut self, var: &str) -> Condition {
        let op = CompareOp::ALL[self.rng.gen_range(0..CompareOp::ALL.len())];
        Condition {
            lhs: Operand::Var(var.to_string()),
            op,
            rhs: Operand::Int(self.rng.gen_range(-3..6)),
        }
    }

    pub fn program(&mut self) -> BlockProgram {
        self.next_id = 0;
        self.next_counter = 0;
        let defines = self.rng.gen_range(0..3);
        let mut blocks = vec![Block::new(self.id(), BlockKind::SetVar)
            .param("var", "x")
            .param("value", self.rng.gen_range(0..5i64))];
        for k in 0..defines {
            let body = self.list(1, k);
            blocks.push(
                Block::new(self.id(), BlockKind::Define)
                    .param("name", format!("f{k}").as_str())
                    .body(body),
            );
        }
        blocks.extend(self.list(0, defines));
        BlockProgram::new("random", blocks)
    }

    /// `callable` defines (`f0..`) may be called from this list.
    fn list(&mut self, depth: usize, callable: usize) -> Vec<Block> {
        let len = self.rng.gen_range(0..4);
        (0..len).flat_map(|_| self.block(depth, callable)).collect()
    }

    fn block(&mut self, depth: usize, callable: usize) -> Vec<Block> {
        let nested = depth < MAX_DEPTH;
        let choice = self.rng.gen_range(0..if nested { 9 } else { 4 });
        let id = self.id();
        match choice {
            0 => {
                let seconds = [0.0, 0.05, 0.12][self.rng.gen_range(0..3)];
                vec![Block::new(id, BlockKind::Wait).param("seconds", seconds)]
            }
            1 => {
                let b = Block::new(id, BlockKind::SetVar)
                    .param("var", "x")
                    .param("value", self.rng.gen_range(-3..4i64));
                let b = if self.rng.gen_bool(0.5) { b.param("op", "add") } else { b };
                vec![b]
            }
            2 => vec![Block::new(id, BlockKind::LedEffect)
                .param("effect", "fill")
                .param("group", "all")
                .param("r", 0i64)
                .param("g", self.rng.gen_range(0..256i64))
                .param("b", 255i64)
                .param("rate", 1.0)],
            3 if callable > 0 => {
                let target = self.rng.gen_range(0..callable);
                vec![Block::new(id, BlockKind::Call).param("name", format!("f{target}").as_str())]
            }
            3 => vec![Block::new(id, BlockKind::Wait).param("seconds", 0.0)],
            4 | 5 => {
                let count = self.rng.gen_range(0..4i64);
                let body = self.list(depth + 1, callable);
                vec![Block::new(id, BlockKind::Repeat).param("count", count).body(body)]
            }
            6 | 7 => {
                let cond = self.cond("x");
                let body = self.list(depth + 1, callable);
                let alt = self.list(depth + 1, callable);
                let b = Block::new(id, BlockKind::If).param("cond", cond).body(body);
                vec![if alt.is_empty() { b } else { b.child_slot("else", alt) }]
            }
            _ => {
                // a counted loop with its own counter so it always terminates
                let var = format!("i{}", self.next_counter);
                self.next_counter += 1;
                let limit = self.rng.gen_range(0..4i64);
                let init = Block::new(self.id(), BlockKind::SetVar).param("var", var.as_str()).param("value", 0i64);
                let mut body = self.list(depth + 1, callable);
                body.push(
                    Block::new(self.id(), BlockKind::SetVar)
                        .param("var", var.as_str())
                        .param("value", 1i64)
                        .param("op", "add"),
                );
                let cond = Condition {
                    lhs: Operand::Var(var),
                    op: CompareOp::Lt,
                    rhs: Operand::Int(limit),
                };
                vec![init, Block::new(id, BlockKind::While).param("cond", cond).body(body)]
            }
        }
    }
}
