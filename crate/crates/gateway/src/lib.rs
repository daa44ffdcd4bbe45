//! Message gateway for a co-exploration session: OSC over UDP for tools
//! such as sound engines, and the same vocabulary as line-delimited JSON
//! over TCP for the browser interface.

pub mod message;
pub mod osc;
pub mod queue;
pub mod server;

pub use message::{AutoSwitch, Codec, InboundMessage, MalformedMessage, ModeName, OutboundMessage, Tag, Valence};
pub use server::{apply, Gateway, GatewayError, GatewayOptions};
