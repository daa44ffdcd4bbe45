//! OSC 1.0 packet layout: a padded address string, a padded type-tag string
//! starting with `,`, then big-endian arguments, each 4-byte aligned.
//!
//! Supported tags are `i` (int32), `h` (int64), `f` (float32), `d` (float64)
//! and `s` (string). Bundles are accepted on decode and flattened.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum OscArg {
    Int(i32),
    Long(i64),
    Float(f32),
    Double(f64),
    Str(String),
}

impl fmt::Display for OscArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OscArg::Int(v) => write!(f, "{v}"),
            OscArg::Long(v) => write!(f, "{v}"),
            OscArg::Float(v) => write!(f, "{v}"),
            OscArg::Double(v) => write!(f, "{v}"),
            OscArg::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl OscArg {
    fn tag(&self) -> u8 {
        match self {
            OscArg::Int(_) => b'i',
            OscArg::Long(_) => b'h',
            OscArg::Float(_) => b'f',
            OscArg::Double(_) => b'd',
            OscArg::Str(_) => b's',
        }
    }

    /// Integer value of an integral argument. Floats qualify when they hold
    /// an exact integer.
    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            OscArg::Int(v) => Some(i64::from(v)),
            OscArg::Long(v) => Some(v),
            OscArg::Float(v) if v.fract() == 0.0 && v.is_finite() => Some(v as i64),
            OscArg::Double(v) if v.fract() == 0.0 && v.is_finite() && v.abs() < 9.0e15 => Some(v as i64),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            OscArg::Int(v) => Some(f64::from(v)),
            OscArg::Long(v) => Some(v as f64),
            OscArg::Float(v) => Some(f64::from(v)),
            OscArg::Double(v) => Some(v),
            OscArg::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            OscArg::Str(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscArg>,
}

impl OscMessage {
    pub fn new(address: impl Into<String>, args: Vec<OscArg>) -> Self {
        Self { address: address.into(), args }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OscError(pub String);

impl fmt::Display for OscError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for OscError {}

fn push_padded_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(s.as_bytes());
    out.push(0);
    while out.len() % 4 != 0 {
        out.push(0);
    }
}

pub fn encode_message(msg: &OscMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * msg.args.len());
    push_padded_str(&mut out, &msg.address);
    let mut tags = String::with_capacity(msg.args.len() + 1);
    tags.push(',');
    tags.extend(msg.args.iter().map(|a| a.tag() as char));
    push_padded_str(&mut out, &tags);
    for arg in &msg.args {
        match arg {
            OscArg::Int(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Long(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Float(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Double(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Str(s) => push_padded_str(&mut out, s),
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], OscError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| OscError(format!("truncated packet at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn string(&mut self) -> Result<String, OscError> {
        let rest = &self.buf[self.pos..];
        let nul = rest.iter().position(|&b| b == 0).ok_or_else(|| OscError("unterminated string".into()))?;
        let s = std::str::from_utf8(&rest[..nul]).map_err(|_| OscError("string is not UTF-8".into()))?.to_owned();
        let padded = (nul + 4) & !3;
        self.take(padded)?;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], OscError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

/// Decodes a message or a bundle into its messages.
pub fn decode_packet(buf: &[u8]) -> Result<Vec<OscMessage>, OscError> {
    if buf.len() % 4 != 0 {
        return Err(OscError(format!("packet length {} is not a multiple of 4", buf.len())));
    }
    if buf.starts_with(b"#bundle\0") {
        let mut r = Reader { buf, pos: 8 };
        r.take(8)?; // time tag
        let mut out = Vec::new();
        while r.pos < buf.len() {
            let size = u32::from_be_bytes(r.array()?) as usize;
            out.extend(decode_packet(r.take(size)?)?);
        }
        return Ok(out);
    }
    decode_message(buf).map(|m| vec![m])
}

pub fn decode_message(buf: &[u8]) -> Result<OscMessage, OscError> {
    let mut r = Reader { buf, pos: 0 };
    let address = r.string()?;
    if !address.starts_with('/') {
        return Err(OscError(format!("address `{address}` does not start with `/`")));
    }
    let tags = if r.pos == buf.len() { String::from(",") } else { r.string()? };
    let Some(tags) = tags.strip_prefix(',') else {
        return Err(OscError("type tag string must start with `,`".into()));
    };
    let mut args = Vec::with_capacity(tags.len());
    for tag in tags.bytes() {
        let arg = match tag {
            b'i' => OscArg::Int(i32::from_be_bytes(r.array()?)),
            b'h' => OscArg::Long(i64::from_be_bytes(r.array()?)),
            b'f' => OscArg::Float(f32::from_be_bytes(r.array()?)),
            b'd' => OscArg::Double(f64::from_be_bytes(r.array()?)),
            b's' => OscArg::Str(r.string()?),
            other => return Err(OscError(format!("unsupported type tag `{}`", other as char))),
        };
        args.push(arg);
    }
    if r.pos != buf.len() {
        return Err(OscError(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(OscMessage { address, args })
}
