//! Block programs and their canonical `.sib.json` form.
//!
//! ```text
//! {"blocks":[Block…],"name":string,"version":1}
//! Block = {"children":{slot:[Block…]},"id":string,"kind":string,"params":{…}}
//! ```
//!
//! The canonical serialization sorts every object's keys and has no
//! insignificant whitespace, so structurally equal programs produce identical
//! bytes. Numbers keep their integer/float spelling (`3` vs `3.0`).

use super::LangError;
use crate::geometry::FormationKind;
use crate::sim::{Effect, Group};
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

pub const PROGRAM_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BlockKind {
    TakeoffAll,
    LandAll,
    Navigate,
    ApplyFormation,
    Translate,
    Rotate,
    Scale,
    LedEffect,
    Wait,
    Repeat,
    While,
    If,
    Define,
    Call,
    Prompt,
    SetVar,
}

impl BlockKind {
    pub const ALL: [BlockKind; 16] = [
        BlockKind::TakeoffAll,
        BlockKind::LandAll,
        BlockKind::Navigate,
        BlockKind::ApplyFormation,
        BlockKind::Translate,
        BlockKind::Rotate,
        BlockKind::Scale,
        BlockKind::LedEffect,
        BlockKind::Wait,
        BlockKind::Repeat,
        BlockKind::While,
        BlockKind::If,
        BlockKind::Define,
        BlockKind::Call,
        BlockKind::Prompt,
        BlockKind::SetVar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::TakeoffAll => "TakeoffAll",
            BlockKind::LandAll => "LandAll",
            BlockKind::Navigate => "Navigate",
            BlockKind::ApplyFormation => "ApplyFormation",
            BlockKind::Translate => "Translate",
            BlockKind::Rotate => "Rotate",
            BlockKind::Scale => "Scale",
            BlockKind::LedEffect => "LedEffect",
            BlockKind::Wait => "Wait",
            BlockKind::Repeat => "Repeat",
            BlockKind::While => "While",
            BlockKind::If => "If",
            BlockKind::Define => "Define",
            BlockKind::Call => "Call",
            BlockKind::Prompt => "Prompt",
            BlockKind::SetVar => "SetVar",
        }
    }

    /// Child slots this kind may carry.
    pub fn slots(self) -> &'static [&'static str] {
        match self {
            BlockKind::Repeat | BlockKind::While | BlockKind::Define => &["body"],
            BlockKind::If => &["body", "else"],
            _ => &[],
        }
    }

    fn schema(self) -> &'static [(&'static str, ParamType, bool)] {
        use ParamType::*;
        match self {
            BlockKind::TakeoffAll => &[("z", Number, true)],
            BlockKind::LandAll => &[],
            BlockKind::Navigate => &[
                ("drone", DroneRef, true),
                ("x", Number, true),
                ("y", Number, true),
                ("z", Number, true),
                ("speed", Number, true),
            ],
            BlockKind::ApplyFormation => &[
                ("kind", FormationName, true),
                ("n", Count, true),
                ("size", Number, true),
                ("height", Number, false),
                ("altitude", Number, true),
            ],
            BlockKind::Translate => &[("dx", Number, true), ("dy", Number, true), ("dz", Number, true)],
            BlockKind::Rotate => &[("angle", Number, true)],
            BlockKind::Scale => &[("factor", Number, true)],
            BlockKind::LedEffect => &[
                ("effect", EffectName, true),
                ("group", GroupName, true),
                ("r", Channel, true),
                ("g", Channel, true),
                ("b", Channel, true),
                ("rate", Number, true),
            ],
            BlockKind::Wait => &[("seconds", Number, true)],
            BlockKind::Repeat => &[("count", RepeatCount, true)],
            BlockKind::While | BlockKind::If => &[("cond", Cond, true)],
            BlockKind::Define | BlockKind::Call => &[("name", Ident, true)],
            BlockKind::Prompt => &[("var", Ident, true), ("message", Text, true)],
            BlockKind::SetVar => &[("var", Ident, true), ("value", Number, true), ("op", SetOp, false)],
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlockKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        BlockKind::ALL.into_iter().find(|k| k.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ParamType {
    /// Number constant or variable name.
    Number,
    /// Integer >= -1 (-1 addresses every drone).
    DroneRef,
    /// Integer >= 1.
    Count,
    /// Integer >= 0.
    RepeatCount,
    /// Integer in 0..=255.
    Channel,
    Ident,
    Text,
    FormationName,
    EffectName,
    GroupName,
    SetOp,
    Cond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CompareOp {
    pub const ALL: [CompareOp; 6] = [
        CompareOp::Lt,
        CompareOp::Le,
        CompareOp::Gt,
        CompareOp::Ge,
        CompareOp::Eq,
        CompareOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
        }
    }

    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CompareOp::Lt => lhs < rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Gt => lhs > rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Eq => lhs == rhs,
            CompareOp::Ne => lhs != rhs,
        }
    }
}

impl Serialize for CompareOp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

/// A number literal or a variable reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Operand {
    Int(i64),
    Float(f64),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub lhs: Operand,
    pub op: CompareOp,
    pub rhs: Operand,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Param {
    Bool(bool),
    Int(i64),
    Float(f64),
    /// A string literal, or a variable reference where a number is expected.
    Text(String),
    Cond(Condition),
}

impl From<i64> for Param {
    fn from(v: i64) -> Self {
        Param::Int(v)
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Float(v)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

impl From<Condition> for Param {
    fn from(v: Condition) -> Self {
        Param::Cond(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub children: BTreeMap<String, Vec<Block>>,
    pub id: String,
    pub kind: BlockKind,
    pub params: BTreeMap<String, Param>,
}

impl Block {
    pub fn new(id: impl Into<String>, kind: BlockKind) -> Self {
        Self {
            children: BTreeMap::new(),
            id: id.into(),
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, name: &str, value: impl Into<Param>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    pub fn child_slot(mut self, slot: &str, blocks: Vec<Block>) -> Self {
        self.children.insert(slot.to_string(), blocks);
        self
    }

    pub fn body(self, blocks: Vec<Block>) -> Self {
        self.child_slot("body", blocks)
    }

    pub fn slot(&self, name: &str) -> &[Block] {
        self.children.get(name).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockProgram {
    pub blocks: Vec<Block>,
    pub name: String,
    pub version: u64,
}

impl BlockProgram {
    pub fn new(name: impl Into<String>, blocks: Vec<Block>) -> Self {
        Self {
            blocks,
            name: name.into(),
            version: PROGRAM_VERSION,
        }
    }

    /// Visits every block depth-first in document order.
    pub fn walk(&self) -> impl Iterator<Item = &Block> {
        let mut stack: Vec<&Block> = self.blocks.iter().rev().collect();
        std::iter::from_fn(move || {
            let b = stack.pop()?;
            for slot in b.children.values().rev() {
                stack.extend(slot.iter().rev());
            }
            Some(b)
        })
    }

    /// Checks every schema rule; `parse` output always passes.
    pub fn validate(&self) -> Result<(), LangError> {
        let doc = serde_json::to_value(self).expect("program serializes");
        parse_value(&doc).map(|_| ())
    }
}

/// Canonical bytes: sorted keys, no whitespace, UTF-8.
pub fn serialize(p: &BlockProgram) -> Vec<u8> {
    serde_json::to_vec(p).expect("program serializes")
}

/// Parses and validates a `.sib.json` document.
pub fn parse(document: &[u8]) -> Result<BlockProgram, LangError> {
    let text = std::str::from_utf8(document).map_err(|e| LangError::Syntax(format!("not UTF-8: {e}")))?;
    let value: Value = serde_json::from_str(text).map_err(|e| LangError::Syntax(e.to_string()))?;
    parse_value(&value)
}

pub fn parse_value(value: &Value) -> Result<BlockProgram, LangError> {
    let mut cx = Validator::default();
    let program = cx.program(value)?;
    for (path, id, name) in &cx.calls {
        if !cx.defines.contains(name) {
            return Err(LangError::schema(
                Some(id),
                path,
                format!("Call `{name}` has no matching Define"),
            ));
        }
    }
    Ok(program)
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Default)]
struct Validator {
    ids: BTreeSet<String>,
    defines: BTreeSet<String>,
    calls: Vec<(String, String, String)>,
}

fn object<'a>(v: &'a Value, path: &str, id: Option<&str>) -> Result<&'a Map<String, Value>, LangError> {
    v.as_object()
        .ok_or_else(|| LangError::schema(id, path, "expected an object"))
}

impl Validator {
    fn program(&mut self, v: &Value) -> Result<BlockProgram, LangError> {
        let top = object(v, "$", None)?;
        for key in top.keys() {
            if !matches!(key.as_str(), "version" | "name" | "blocks") {
                return Err(LangError::schema(None, &format!("$.{key}"), "unknown field"));
            }
        }
        match top.get("version") {
            Some(Value::Number(n)) if n.as_u64() == Some(PROGRAM_VERSION) => {}
            Some(_) => return Err(LangError::schema(None, "$.version", "version must be 1")),
            None => return Err(LangError::schema(None, "$.version", "missing field")),
        }
        let name = match top.get("name") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(LangError::schema(None, "$.name", "expected a string")),
            None => return Err(LangError::schema(None, "$.name", "missing field")),
        };
        let blocks = match top.get("blocks") {
            Some(b) => self.sequence(b, "$.blocks", true)?,
            None => return Err(LangError::schema(None, "$.blocks", "missing field")),
        };
        Ok(BlockProgram {
            blocks,
            name,
            version: PROGRAM_VERSION,
        })
    }

    fn sequence(&mut self, v: &Value, path: &str, root: bool) -> Result<Vec<Block>, LangError> {
        let items = v
            .as_array()
            .ok_or_else(|| LangError::schema(None, path, "expected an array of blocks"))?;
        items
            .iter()
            .enumerate()
            .map(|(i, b)| self.block(b, &format!("{path}[{i}]"), root))
            .collect()
    }

    fn block(&mut self, v: &Value, path: &str, root: bool) -> Result<Block, LangError> {
        let obj = object(v, path, None)?;
        let id = match obj.get("id") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(_) => return Err(LangError::schema(None, &format!("{path}.id"), "id must be a non-empty string")),
            None => return Err(LangError::schema(None, &format!("{path}.id"), "missing field")),
        };
        let idr = Some(id.as_str());
        for key in obj.keys() {
            if !matches!(key.as_str(), "id" | "kind" | "params" | "children") {
                return Err(LangError::schema(idr, &format!("{path}.{key}"), "unknown field"));
            }
        }
        if !self.ids.insert(id.clone()) {
            return Err(LangError::schema(idr, &format!("{path}.id"), format!("duplicate block id `{id}`")));
        }
        let kind = match obj.get("kind") {
            Some(Value::String(s)) => s
                .parse::<BlockKind>()
                .map_err(|_| LangError::schema(idr, &format!("{path}.kind"), format!("unknown block kind `{s}`")))?,
            Some(_) => return Err(LangError::schema(idr, &format!("{path}.kind"), "expected a string")),
            None => return Err(LangError::schema(idr, &format!("{path}.kind"), "missing field")),
        };

        let empty = Map::new();
        let params_path = format!("{path}.params");
        let raw_params = match obj.get("params") {
            Some(p) => object(p, &params_path, idr)?,
            None => &empty,
        };
        let schema = kind.schema();
        for key in raw_params.keys() {
            if !schema.iter().any(|(name, _, _)| name == key) {
                return Err(LangError::schema(
                    idr,
                    &format!("{params_path}.{key}"),
                    format!("{kind} has no parameter `{key}`"),
                ));
            }
        }
        let mut params = BTreeMap::new();
        for &(name, ty, required) in schema {
            let ppath = format!("{params_path}.{name}");
            match raw_params.get(name) {
                Some(value) => {
                    params.insert(name.to_string(), param(value, ty, &ppath, &id)?);
                }
                None if required => {
                    return Err(LangError::schema(idr, &ppath, format!("{kind} requires `{name}`")))
                }
                None => {}
            }
        }
        check_constants(kind, &params, &params_path, &id)?;

        let children_path = format!("{path}.children");
        let raw_children = match obj.get("children") {
            Some(c) => object(c, &children_path, idr)?,
            None => &empty,
        };
        let mut children = BTreeMap::new();
        for (slot, value) in raw_children {
            let spath = format!("{children_path}.{slot}");
            if !kind.slots().contains(&slot.as_str()) {
                return Err(LangError::schema(idr, &spath, format!("{kind} has no child slot `{slot}`")));
            }
            children.insert(slot.clone(), self.sequence(value, &spath, false)?);
        }

        match kind {
            BlockKind::Define => {
                let Some(Param::Text(name)) = params.get("name") else { unreachable!() };
                if !root {
                    return Err(LangError::schema(idr, path, "Define is only allowed at the top level"));
                }
                if !self.defines.insert(name.clone()) {
                    return Err(LangError::schema(idr, &format!("{params_path}.name"), format!("`{name}` is defined twice")));
                }
            }
            BlockKind::Call => {
                let Some(Param::Text(name)) = params.get("name") else { unreachable!() };
                self.calls.push((format!("{params_path}.name"), id.clone(), name.clone()));
            }
            _ => {}
        }

        Ok(Block {
            children,
            id,
            kind,
            params,
        })
    }
}

fn number_literal(n: &serde_json::Number) -> Param {
    match n.as_i64() {
        Some(i) => Param::Int(i),
        None => Param::Float(n.as_f64().unwrap_or(f64::NAN)),
    }
}

fn operand(v: &Value, path: &str, id: &str) -> Result<Operand, LangError> {
    match v {
        Value::Number(n) => Ok(match number_literal(n) {
            Param::Int(i) => Operand::Int(i),
            Param::Float(f) if f.is_finite() => Operand::Float(f),
            _ => return Err(LangError::schema(Some(id), path, "number out of range")),
        }),
        Value::String(s) if is_identifier(s) => Ok(Operand::Var(s.clone())),
        _ => Err(LangError::schema(Some(id), path, "expected a number or a variable name")),
    }
}

fn param(v: &Value, ty: ParamType, path: &str, id: &str) -> Result<Param, LangError> {
    let err = |msg: String| LangError::schema(Some(id), path, msg);
    let int_in = |lo: i64, hi: i64, what: &str| -> Result<Param, LangError> {
        match v.as_i64() {
            Some(i) if v.is_i64() || v.is_u64() => {
                if (lo..=hi).contains(&i) {
                    Ok(Param::Int(i))
                } else {
                    Err(err(format!("{what} must be in {lo}..={hi}, got {i}")))
                }
            }
            _ => Err(err(format!("{what} must be an integer"))),
        }
    };
    let text = || -> Result<&str, LangError> {
        v.as_str().ok_or_else(|| err("expected a string".into()))
    };
    match ty {
        ParamType::Number => match v {
            Value::Number(n) => match number_literal(n) {
                Param::Float(f) if !f.is_finite() => Err(err("number out of range".into())),
                p => Ok(p),
            },
            Value::String(s) if is_identifier(s) => Ok(Param::Text(s.clone())),
            _ => Err(err("expected a number or a variable name".into())),
        },
        ParamType::DroneRef => int_in(-1, i64::from(u32::MAX), "drone"),
        ParamType::Count => int_in(1, crate::sim::MAX_DRONES as i64, "n"),
        ParamType::RepeatCount => int_in(0, i64::MAX, "count"),
        ParamType::Channel => int_in(0, 255, "color channel"),
        ParamType::Ident => {
            let s = text()?;
            if is_identifier(s) {
                Ok(Param::Text(s.to_string()))
            } else {
                Err(err(format!("`{s}` is not a valid identifier")))
            }
        }
        ParamType::Text => Ok(Param::Text(text()?.to_string())),
        ParamType::FormationName => {
            let s = text()?;
            s.parse::<FormationKind>().map_err(|e| err(e.to_string()))?;
            Ok(Param::Text(s.to_string()))
        }
        ParamType::EffectName => {
            let s = text()?;
            s.parse::<Effect>().map_err(err)?;
            Ok(Param::Text(s.to_string()))
        }
        ParamType::GroupName => {
            let s = text()?;
            s.parse::<Group>().map_err(err)?;
            Ok(Param::Text(s.to_string()))
        }
        ParamType::SetOp => {
            let s = text()?;
            if matches!(s, "set" | "add") {
                Ok(Param::Text(s.to_string()))
            } else {
                Err(err(format!("op must be `set` or `add`, got `{s}`")))
            }
        }
        ParamType::Cond => {
            let obj = v
                .as_object()
                .ok_or_else(|| err("condition must be an object {lhs, op, rhs}".into()))?;
            for key in obj.keys() {
                if !matches!(key.as_str(), "lhs" | "op" | "rhs") {
                    return Err(LangError::schema(Some(id), &format!("{path}.{key}"), "unknown field"));
                }
            }
            let side = |k: &str| -> Result<Operand, LangError> {
                let p = format!("{path}.{k}");
                let v = obj
                    .get(k)
                    .ok_or_else(|| LangError::schema(Some(id), &p, "missing field"))?;
                operand(v, &p, id)
            };
            let op_path = format!("{path}.op");
            let op = match obj.get("op") {
                Some(Value::String(s)) => CompareOp::ALL
                    .into_iter()
                    .find(|o| o.symbol() == s)
                    .ok_or_else(|| LangError::schema(Some(id), &op_path, format!("unknown comparison `{s}`")))?,
                _ => return Err(LangError::schema(Some(id), &op_path, "expected one of < <= > >= == !=")),
            };
            Ok(Param::Cond(Condition {
                lhs: side("lhs")?,
                op,
                rhs: side("rhs")?,
            }))
        }
    }
}

/// Range checks for parameters given as literals; variable-supplied values are
/// checked when the block runs.
fn check_constants(kind: BlockKind, params: &BTreeMap<String, Param>, path: &str, id: &str) -> Result<(), LangError> {
    let literal = |name: &str| match params.get(name) {
        Some(Param::Int(i)) => Some(*i as f64),
        Some(Param::Float(f)) => Some(*f),
        _ => None,
    };
    let positive: &[&str] = match kind {
        BlockKind::Navigate => &["speed"],
        BlockKind::ApplyFormation => &["size", "height"],
        BlockKind::Scale => &["factor"],
        BlockKind::LedEffect => &["rate"],
        BlockKind::TakeoffAll => &["z"],
        _ => &[],
    };
    for name in positive {
        if let Some(v) = literal(name) {
            if v <= 0.0 {
                return Err(LangError::schema(Some(id), &format!("{path}.{name}"), format!("`{name}` must be positive")));
            }
        }
    }
    if kind == BlockKind::Wait {
        if let Some(v) = literal("seconds") {
            if v < 0.0 {
                return Err(LangError::schema(Some(id), &format!("{path}.seconds"), "`seconds` must not be negative"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_err(doc: &str) -> (Option<String>, String, String) {
        match parse(doc.as_bytes()) {
            Err(LangError::Schema { block_id, path, message }) => (block_id, path, message),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn empty_program() {
        let p = parse(br#"{"version":1,"name":"empty","blocks":[]}"#).unwrap();
        assert!(p.blocks.is_empty());
        assert_eq!(serialize(&p), br#"{"blocks":[],"name":"empty","version":1}"#.to_vec());
    }

    #[test]
    fn undefined_call_names_block() {
        let (id, path, msg) = schema_err(
            r#"{"version":1,"name":"x","blocks":[{"id":"c1","kind":"Call","params":{"name":"spiral"}}]}"#,
        );
        assert_eq!(id.as_deref(), Some("c1"));
        assert_eq!(path, "$.blocks[0].params.name");
        assert!(msg.contains("spiral"));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse(b"{not json"), Err(LangError::Syntax(_))));
        assert!(matches!(parse(&[0xff, 0xfe]), Err(LangError::Syntax(_))));
    }

    #[test]
    fn schema_violations() {
        let cases = [
            (r#"{"version":2,"name":"x","blocks":[]}"#, "$.version"),
            (r#"{"version":1,"name":"x","blocks":[],"extra":1}"#, "$.extra"),
            (r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"Fly"}]}"#, "$.blocks[0].kind"),
            (r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"Wait"}]}"#, "$.blocks[0].params.seconds"),
            (
                r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"LandAll"},{"id":"a","kind":"LandAll"}]}"#,
                "$.blocks[1].id",
            ),
            (
                r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"Repeat","params":{"count":-1}}]}"#,
                "$.blocks[0].params.count",
            ),
            (
                r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"Repeat","params":{"count":1.5}}]}"#,
                "$.blocks[0].params.count",
            ),
            (
                r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"Wait","params":{"seconds":1},"children":{"body":[]}}]}"#,
                "$.blocks[0].children.body",
            ),
            (
                r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"LedEffect","params":{"effect":"fill","group":"all","r":256,"g":0,"b":0,"rate":1}}]}"#,
                "$.blocks[0].params.r",
            ),
            (
                r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"If","params":{"cond":{"lhs":1,"op":"=~","rhs":2}}}]}"#,
                "$.blocks[0].params.cond.op",
            ),
            (
                r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"Repeat","params":{"count":1},"children":{"body":[{"id":"d","kind":"Define","params":{"name":"f"}}]}}]}"#,
                "$.blocks[0].children.body[0]",
            ),
            (
                r#"{"version":1,"name":"x","blocks":[{"id":"a","kind":"Wait","params":{"seconds":1,"speed":2}}]}"#,
                "$.blocks[0].params.speed",
            ),
        ];
        for (doc, want) in cases {
            let (_, path, _) = schema_err(doc);
            assert_eq!(path, want, "{doc}");
        }
    }

    #[test]
    fn keys_are_sorted_in_output() {
        let p = BlockProgram::new(
            "demo",
            vec![Block::new("r", BlockKind::Repeat)
                .param("count", 3)
                .body(vec![Block::new("w", BlockKind::Wait).param("seconds", 0.1)])],
        );
        let bytes = String::from_utf8(serialize(&p)).unwrap();
        assert_eq!(
            bytes,
            r#"{"blocks":[{"children":{"body":[{"children":{},"id":"w","kind":"Wait","params":{"seconds":0.1}}]},"id":"r","kind":"Repeat","params":{"count":3}}],"name":"demo","version":1}"#
        );
        assert_eq!(parse(bytes.as_bytes()).unwrap(), p);
    }

    #[test]
    fn variables_allowed_in_numeric_params() {
        let doc = r#"{"version":1,"name":"x","blocks":[
            {"id":"p","kind":"Prompt","params":{"var":"h","message":"height?"}},
            {"id":"n","kind":"Navigate","params":{"drone":0,"x":0,"y":0,"z":"h","speed":1}}]}"#;
        let p = parse(doc.as_bytes()).unwrap();
        assert_eq!(p.blocks[1].params["z"], Param::Text("h".into()));
        assert!(matches!(
            parse(br#"{"version":1,"name":"x","blocks":[{"id":"n","kind":"Wait","params":{"seconds":"not a name"}}]}"#),
            Err(LangError::Schema { .. })
        ));
    }

    #[test]
    fn walk_is_depth_first() {
        let p = BlockProgram::new(
            "w",
            vec![
                Block::new("a", BlockKind::Repeat)
                    .param("count", 1)
                    .body(vec![Block::new("b", BlockKind::LandAll)]),
                Block::new("c", BlockKind::LandAll),
            ],
        );
        let ids: Vec<&str> = p.walk().map(|b| b.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }
}
