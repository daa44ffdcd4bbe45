//! The message vocabulary shared by the OSC endpoint and the JSON bridge.
//!
//! Every message is an address plus a list of typed arguments. The binary
//! form is an OSC packet; the JSON form is one object per line:
//! `{"address":"/feedback/guide","args":[1]}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::osc::{decode_packet, encode_message, OscArg, OscMessage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed message: {reason}")]
pub struct MalformedMessage {
    pub reason: String,
}

impl MalformedMessage {
    pub fn new(reason: impl Into<String>) -> Self {
        Self { reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valence {
    Positive,
    Negative,
}

impl Valence {
    pub fn sign(self) -> i32 {
        match self {
            Valence::Positive => 1,
            Valence::Negative => -1,
        }
    }

    fn from_arg(arg: &OscArg) -> Result<Self, MalformedMessage> {
        match arg.as_i64() {
            Some(1) => Ok(Valence::Positive),
            Some(-1) => Ok(Valence::Negative),
            _ => Err(MalformedMessage::new(format!("valence must be +1 or -1, got {arg}"))),
        }
    }
}

impl From<Valence> for coexplorer_core::Valence {
    fn from(v: Valence) -> Self {
        match v {
            Valence::Positive => coexplorer_core::Valence::Positive,
            Valence::Negative => coexplorer_core::Valence::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutoSwitch {
    Start,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InboundMessage {
    Guide(Valence),
    Zone(Valence),
    Auto(AutoSwitch),
    ChangeZone,
    Back { history_id: u64 },
    Reset,
    SetState { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeName {
    Autonomous,
    Stepwise,
    Paused,
}

impl ModeName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeName::Autonomous => "autonomous",
            ModeName::Stepwise => "stepwise",
            ModeName::Paused => "paused",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "autonomous" => Some(ModeName::Autonomous),
            "stepwise" => Some(ModeName::Stepwise),
            "paused" => Some(ModeName::Paused),
            _ => None,
        }
    }
}

impl From<coexplorer_core::Mode> for ModeName {
    fn from(m: coexplorer_core::Mode) -> Self {
        match m {
            coexplorer_core::Mode::Autonomous => ModeName::Autonomous,
            coexplorer_core::Mode::Stepwise => ModeName::Stepwise,
            coexplorer_core::Mode::Paused => ModeName::Paused,
        }
    }
}

/// History cell colour class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Neutral,
    Positive,
    Negative,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Neutral => "neutral",
            Tag::Positive => "positive",
            Tag::Negative => "negative",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "neutral" => Some(Tag::Neutral),
            "positive" => Some(Tag::Positive),
            "negative" => Some(Tag::Negative),
            _ => None,
        }
    }
}

impl From<coexplorer_core::session::history::HistoryTag> for Tag {
    fn from(t: coexplorer_core::session::history::HistoryTag) -> Self {
        use coexplorer_core::session::history::HistoryTag;
        match t {
            HistoryTag::Neutral => Tag::Neutral,
            HistoryTag::Positive => Tag::Positive,
            HistoryTag::Negative => Tag::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutboundMessage {
    State { t: u64, values: Vec<f64> },
    HistoryAppend { id: u64, tag: Tag },
    Mode(ModeName),
    Epsilon(f64),
    Error { code: String, detail: String },
}

impl From<coexplorer_core::SessionEvent> for OutboundMessage {
    fn from(e: coexplorer_core::SessionEvent) -> Self {
        use coexplorer_core::SessionEvent as E;
        match e {
            E::State { t, values } => OutboundMessage::State { t, values },
            E::HistoryAppend { id, tag } => OutboundMessage::HistoryAppend { id, tag: tag.into() },
            E::Mode(m) => OutboundMessage::Mode(m.into()),
            E::Epsilon(v) => OutboundMessage::Epsilon(v),
            E::Error { code, detail } => OutboundMessage::Error { code, detail },
        }
    }
}

impl OutboundMessage {
    pub fn malformed(err: &MalformedMessage) -> Self {
        OutboundMessage::Error { code: "malformed_message".into(), detail: err.reason.clone() }
    }
}

fn arity(msg: &OscMessage, expected: usize) -> Result<(), MalformedMessage> {
    if msg.args.len() != expected {
        return Err(MalformedMessage::new(format!(
            "{} takes {expected} argument(s), got {}",
            msg.address,
            msg.args.len()
        )));
    }
    Ok(())
}

fn uint_arg(msg: &OscMessage, i: usize) -> Result<u64, MalformedMessage> {
    msg.args[i]
        .as_i64()
        .and_then(|v| u64::try_from(v).ok())
        .ok_or_else(|| MalformedMessage::new(format!("{} argument {i} must be a non-negative integer", msg.address)))
}

fn str_arg(msg: &OscMessage, i: usize) -> Result<&str, MalformedMessage> {
    msg.args[i]
        .as_str()
        .ok_or_else(|| MalformedMessage::new(format!("{} argument {i} must be a string", msg.address)))
}

fn float_args(msg: &OscMessage, from: usize) -> Result<Vec<f64>, MalformedMessage> {
    msg.args[from..]
        .iter()
        .enumerate()
        .map(|(i, a)| match a.as_f64() {
            Some(v) if v.is_finite() => Ok(v),
            _ => Err(MalformedMessage::new(format!("{} argument {} must be a finite number", msg.address, i + from))),
        })
        .collect()
}

/// Converts between typed messages and their wire forms for a space of
/// dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Codec {
    pub n: usize,
}

impl Codec {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn inbound_to_osc(&self, msg: &InboundMessage) -> OscMessage {
        let (address, args) = match msg {
            InboundMessage::Guide(v) => ("/feedback/guide", vec![OscArg::Int(v.sign())]),
            InboundMessage::Zone(v) => ("/feedback/zone", vec![OscArg::Int(v.sign())]),
            InboundMessage::Auto(AutoSwitch::Start) => ("/command/auto", vec![OscArg::Str("start".into())]),
            InboundMessage::Auto(AutoSwitch::Stop) => ("/command/auto", vec![OscArg::Str("stop".into())]),
            InboundMessage::ChangeZone => ("/command/change_zone", vec![]),
            InboundMessage::Back { history_id } => ("/command/back", vec![OscArg::Long(*history_id as i64)]),
            InboundMessage::Reset => ("/command/reset", vec![]),
            InboundMessage::SetState { values } => ("/state/set", values.iter().map(|&v| OscArg::Double(v)).collect()),
        };
        OscMessage::new(address, args)
    }

    pub fn inbound_from_osc(&self, msg: &OscMessage) -> Result<InboundMessage, MalformedMessage> {
        match msg.address.as_str() {
            "/feedback/guide" => {
                arity(msg, 1)?;
                Ok(InboundMessage::Guide(Valence::from_arg(&msg.args[0])?))
            }
            "/feedback/zone" => {
                arity(msg, 1)?;
                Ok(InboundMessage::Zone(Valence::from_arg(&msg.args[0])?))
            }
            "/command/auto" => {
                arity(msg, 1)?;
                match str_arg(msg, 0)? {
                    "start" => Ok(InboundMessage::Auto(AutoSwitch::Start)),
                    "stop" => Ok(InboundMessage::Auto(AutoSwitch::Stop)),
                    other => Err(MalformedMessage::new(format!("/command/auto expects start or stop, got `{other}`"))),
                }
            }
            "/command/change_zone" => arity(msg, 0).map(|_| InboundMessage::ChangeZone),
            "/command/back" => {
                arity(msg, 1)?;
                Ok(InboundMessage::Back { history_id: uint_arg(msg, 0)? })
            }
            "/command/reset" => arity(msg, 0).map(|_| InboundMessage::Reset),
            "/state/set" => {
                arity(msg, self.n)?;
                Ok(InboundMessage::SetState { values: float_args(msg, 0)? })
            }
            other => Err(MalformedMessage::new(format!("unknown address `{other}`"))),
        }
    }

    pub fn outbound_to_osc(&self, msg: &OutboundMessage) -> OscMessage {
        let (address, args) = match msg {
            OutboundMessage::State { t, values } => {
                let mut args = Vec::with_capacity(values.len() + 1);
                args.push(OscArg::Long(*t as i64));
                args.extend(values.iter().map(|&v| OscArg::Double(v)));
                ("/state", args)
            }
            OutboundMessage::HistoryAppend { id, tag } => {
                ("/history/append", vec![OscArg::Long(*id as i64), OscArg::Str(tag.as_str().into())])
            }
            OutboundMessage::Mode(m) => ("/mode", vec![OscArg::Str(m.as_str().into())]),
            OutboundMessage::Epsilon(v) => ("/epsilon", vec![OscArg::Double(*v)]),
            OutboundMessage::Error { code, detail } => {
                ("/error", vec![OscArg::Str(code.clone()), OscArg::Str(detail.clone())])
            }
        };
        OscMessage::new(address, args)
    }

    pub fn outbound_from_osc(&self, msg: &OscMessage) -> Result<OutboundMessage, MalformedMessage> {
        match msg.address.as_str() {
            "/state" => {
                arity(msg, self.n + 1)?;
                Ok(OutboundMessage::State { t: uint_arg(msg, 0)?, values: float_args(msg, 1)? })
            }
            "/history/append" => {
                arity(msg, 2)?;
                let tag = Tag::parse(str_arg(msg, 1)?).ok_or_else(|| MalformedMessage::new("unknown history tag"))?;
                Ok(OutboundMessage::HistoryAppend { id: uint_arg(msg, 0)?, tag })
            }
            "/mode" => {
                arity(msg, 1)?;
                let m = ModeName::parse(str_arg(msg, 0)?).ok_or_else(|| MalformedMessage::new("unknown mode"))?;
                Ok(OutboundMessage::Mode(m))
            }
            "/epsilon" => {
                arity(msg, 1)?;
                Ok(OutboundMessage::Epsilon(float_args(msg, 0)?[0]))
            }
            "/error" => {
                arity(msg, 2)?;
                Ok(OutboundMessage::Error { code: str_arg(msg, 0)?.into(), detail: str_arg(msg, 1)?.into() })
            }
            other => Err(MalformedMessage::new(format!("unknown address `{other}`"))),
        }
    }

    pub fn encode_inbound(&self, msg: &InboundMessage) -> Vec<u8> {
        encode_message(&self.inbound_to_osc(msg))
    }

    pub fn encode_outbound(&self, msg: &OutboundMessage) -> Vec<u8> {
        encode_message(&self.outbound_to_osc(msg))
    }

    /// Decodes one datagram; a bundle may carry several messages.
    pub fn decode_inbound(&self, bytes: &[u8]) -> Result<Vec<InboundMessage>, MalformedMessage> {
        let msgs = decode_packet(bytes).map_err(|e| MalformedMessage::new(e.0))?;
        msgs.iter().map(|m| self.inbound_from_osc(m)).collect()
    }

    pub fn decode_outbound(&self, bytes: &[u8]) -> Result<Vec<OutboundMessage>, MalformedMessage> {
        let msgs = decode_packet(bytes).map_err(|e| MalformedMessage::new(e.0))?;
        msgs.iter().map(|m| self.outbound_from_osc(m)).collect()
    }

    pub fn inbound_to_json(&self, msg: &InboundMessage) -> String {
        to_json_line(&self.inbound_to_osc(msg))
    }

    pub fn outbound_to_json(&self, msg: &OutboundMessage) -> String {
        to_json_line(&self.outbound_to_osc(msg))
    }

    pub fn inbound_from_json(&self, line: &str) -> Result<InboundMessage, MalformedMessage> {
        self.inbound_from_osc(&from_json_line(line)?)
    }

    pub fn outbound_from_json(&self, line: &str) -> Result<OutboundMessage, MalformedMessage> {
        self.outbound_from_osc(&from_json_line(line)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonMessage {
    address: String,
    #[serde(default)]
    args: Vec<Value>,
}

/// One JSON object, without the trailing newline. Integers stay integers;
/// floats use the shortest decimal that parses back to the same value.
pub fn to_json_line(msg: &OscMessage) -> String {
    let args = msg
        .args
        .iter()
        .map(|a| match a {
            OscArg::Int(v) => Value::from(*v),
            OscArg::Long(v) => Value::from(*v),
            OscArg::Float(v) => Value::from(f64::from(*v)),
            OscArg::Double(v) => Value::from(*v),
            OscArg::Str(s) => Value::from(s.as_str()),
        })
        .collect();
    serde_json::to_string(&JsonMessage { address: msg.address.clone(), args }).expect("JSON values serialize")
}

pub fn from_json_line(line: &str) -> Result<OscMessage, MalformedMessage> {
    let raw: JsonMessage = serde_json::from_str(line.trim()).map_err(|e| MalformedMessage::new(format!("invalid JSON: {e}")))?;
    if !raw.address.starts_with('/') {
        return Err(MalformedMessage::new(format!("address `{}` does not start with `/`", raw.address)));
    }
    let args = raw
        .args
        .into_iter()
        .map(|v| match v {
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(OscArg::Long(i))
                } else {
                    n.as_f64().map(OscArg::Double).ok_or_else(|| MalformedMessage::new("number out of range"))
                }
            }
            Value::String(s) => Ok(OscArg::Str(s)),
            other => Err(MalformedMessage::new(format!("unsupported argument {other}"))),
        })
        .collect::<Result<_, _>>()?;
    Ok(OscMessage { address: raw.address, args })
}
