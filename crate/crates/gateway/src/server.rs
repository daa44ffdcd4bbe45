//! Network service: a UDP endpoint speaking OSC, a TCP endpoint speaking
//! line-delimited JSON, and the thread that owns the session.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use coexplorer_core::{Command, FeedbackKind, Mode, Session, SessionError};
use log::{debug, info, warn};
use thiserror::Error;

use crate::message::{AutoSwitch, Codec, InboundMessage, MalformedMessage, OutboundMessage};
use crate::queue::DropOldest;

/// How long blocking I/O waits before rechecking for shutdown.
const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("cannot bind {what} endpoint on {addr}: {source}")]
    Bind {
        what: &'static str,
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct GatewayOptions {
    pub osc_addr: SocketAddr,
    pub ui_addr: SocketAddr,
    /// Capacity of the shared inbound queue.
    pub inbound_capacity: usize,
    /// Capacity of each peer's outbound queue.
    pub outbound_capacity: usize,
    /// Ticks between epsilon reports while autonomous.
    pub epsilon_every: u64,
}

impl GatewayOptions {
    pub fn new(osc_addr: SocketAddr, ui_addr: SocketAddr) -> Self {
        Self { osc_addr, ui_addr, inbound_capacity: 1024, outbound_capacity: 256, epsilon_every: 10 }
    }
}

enum Input {
    Message(InboundMessage),
    /// A UI client connected; it gets a snapshot and then every update.
    Connected(Arc<DropOldest<OutboundMessage>>),
}

/// A running gateway. Dropping it without calling [`Gateway::shutdown`]
/// leaves the threads running.
pub struct Gateway {
    osc_addr: SocketAddr,
    ui_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    session_thread: JoinHandle<Session>,
    io_threads: Vec<JoinHandle<()>>,
}

impl Gateway {
    /// Binds both endpoints and starts serving `session`.
    pub fn start(session: Session, options: GatewayOptions) -> Result<Self, GatewayError> {
        let udp = UdpSocket::bind(options.osc_addr).map_err(|source| GatewayError::Bind {
            what: "OSC",
            addr: options.osc_addr,
            source,
        })?;
        let tcp = TcpListener::bind(options.ui_addr).map_err(|source| GatewayError::Bind {
            what: "UI",
            addr: options.ui_addr,
            source,
        })?;
        udp.set_read_timeout(Some(POLL))?;
        tcp.set_nonblocking(true)?;
        let osc_addr = udp.local_addr()?;
        let ui_addr = tcp.local_addr()?;
        info!("OSC endpoint on udp://{osc_addr}, UI bridge on tcp://{ui_addr}");

        let codec = Codec::new(session.space().n());
        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::sync_channel(options.inbound_capacity);
        let udp_out = Arc::new(DropOldest::new(options.outbound_capacity));
        let udp_peers = Arc::new(Mutex::new(HashSet::new()));

        let mut io_threads = Vec::new();
        {
            let (udp, tx, stop, peers) = (udp.try_clone()?, tx.clone(), Arc::clone(&stop), Arc::clone(&udp_peers));
            io_threads.push(thread::Builder::new().name("osc-in".into()).spawn(move || udp_reader(udp, codec, tx, peers, stop))?);
        }
        {
            let (out, stop) = (Arc::clone(&udp_out), Arc::clone(&stop));
            io_threads.push(thread::Builder::new().name("osc-out".into()).spawn(move || udp_writer(udp, codec, out, udp_peers, stop))?);
        }
        {
            let stop = Arc::clone(&stop);
            let capacity = options.outbound_capacity;
            io_threads.push(thread::Builder::new().name("ui-accept".into()).spawn(move || ui_acceptor(tcp, codec, tx, capacity, stop))?);
        }
        let session_thread = {
            let stop = Arc::clone(&stop);
            let epsilon_every = options.epsilon_every;
            thread::Builder::new()
                .name("session".into())
                .spawn(move || session_loop(session, rx, udp_out, epsilon_every, stop))?
        };
        Ok(Self { osc_addr, ui_addr, stop, session_thread, io_threads })
    }

    pub fn osc_addr(&self) -> SocketAddr {
        self.osc_addr
    }

    pub fn ui_addr(&self) -> SocketAddr {
        self.ui_addr
    }

    /// A flag that stops the gateway when set.
    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        Arc::clone(&self.stop)
    }

    /// Blocks until the stop flag is set, then shuts down.
    pub fn wait(self) -> Session {
        while !self.stop.load(Ordering::Relaxed) {
            thread::sleep(Duration::from_millis(100));
        }
        self.shutdown()
    }

    /// Stops every thread and hands back the session.
    pub fn shutdown(self) -> Session {
        self.stop.store(true, Ordering::Relaxed);
        let session = self.session_thread.join().expect("session thread panicked");
        for t in self.io_threads {
            let _ = t.join();
        }
        session
    }
}

fn udp_reader(
    socket: UdpSocket,
    codec: Codec,
    tx: SyncSender<Input>,
    peers: Arc<Mutex<HashSet<SocketAddr>>>,
    stop: Arc<AtomicBool>,
) {
    let mut buf = vec![0u8; 65_536];
    while !stop.load(Ordering::Relaxed) {
        let (len, from) = match socket.recv_from(&mut buf) {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => continue,
            Err(e) => {
                // ICMP port-unreachable from a departed peer surfaces here on some platforms.
                debug!("OSC receive error: {e}");
                continue;
            }
        };
        if peers.lock().unwrap().insert(from) {
            info!("OSC peer {from} joined");
        }
        match codec.decode_inbound(&buf[..len]) {
            Ok(msgs) => {
                for m in msgs {
                    forward(&tx, Input::Message(m));
                }
            }
            Err(e) => {
                warn!("malformed OSC packet from {from}: {}", e.reason);
                let reply = codec.encode_outbound(&OutboundMessage::malformed(&e));
                let _ = socket.send_to(&reply, from);
            }
        }
    }
}

fn forward(tx: &SyncSender<Input>, input: Input) {
    match tx.try_send(input) {
        Ok(()) => {}
        Err(TrySendError::Full(input)) => {
            // The session thread is behind; wait rather than reorder or drop input.
            let _ = tx.send(input);
        }
        Err(TrySendError::Disconnected(_)) => {}
    }
}

fn udp_writer(
    socket: UdpSocket,
    codec: Codec,
    queue: Arc<DropOldest<OutboundMessage>>,
    peers: Arc<Mutex<HashSet<SocketAddr>>>,
    stop: Arc<AtomicBool>,
) {
    while !stop.load(Ordering::Relaxed) {
        let Some(msg) = queue.pop_timeout(POLL) else { continue };
        let bytes = codec.encode_outbound(&msg);
        let targets: Vec<SocketAddr> = peers.lock().unwrap().iter().copied().collect();
        for addr in targets {
            if let Err(e) = socket.send_to(&bytes, addr) {
                info!("OSC peer {addr} dropped: {e}");
                peers.lock().unwrap().remove(&addr);
            }
        }
    }
}

fn ui_acceptor(listener: TcpListener, codec: Codec, tx: SyncSender<Input>, capacity: usize, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::Relaxed) {
        let (stream, from) = match listener.accept() {
            Ok(r) => r,
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                thread::sleep(POLL);
                continue;
            }
            Err(e) => {
                warn!("UI accept failed: {e}");
                thread::sleep(POLL);
                continue;
            }
        };
        info!("UI client {from} connected");
        if let Err(e) = start_ui_client(stream, from, codec, tx.clone(), capacity, Arc::clone(&stop)) {
            warn!("UI client {from} setup failed: {e}");
        }
    }
}

fn start_ui_client(
    stream: TcpStream,
    from: SocketAddr,
    codec: Codec,
    tx: SyncSender<Input>,
    capacity: usize,
    stop: Arc<AtomicBool>,
) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(POLL))?;
    let queue = Arc::new(DropOldest::new(capacity));
    let writer = stream.try_clone()?;
    {
        let queue = Arc::clone(&queue);
        let stop = Arc::clone(&stop);
        thread::Builder::new().name(format!("ui-out-{from}")).spawn(move || ui_writer(writer, from, codec, queue, stop))?;
    }
    forward(&tx, Input::Connected(Arc::clone(&queue)));
    thread::Builder::new().name(format!("ui-in-{from}")).spawn(move || ui_reader(stream, from, codec, tx, queue, stop))?;
    Ok(())
}

fn ui_reader(
    stream: TcpStream,
    from: SocketAddr,
    codec: Codec,
    tx: SyncSender<Input>,
    queue: Arc<DropOldest<OutboundMessage>>,
    stop: Arc<AtomicBool>,
) {
    let mut reader = BufReader::new(stream);
    let mut line = Vec::new();
    while !stop.load(Ordering::Relaxed) && !queue.is_closed() {
        match reader.read_until(b'\n', &mut line) {
            Ok(0) => break,
            Ok(_) => {
                if line.last() != Some(&b'\n') {
                    // Partial line before a timeout; keep accumulating.
                    continue;
                }
                let parsed = std::str::from_utf8(&line)
                    .map_err(|_| MalformedMessage::new("line is not UTF-8"))
                    .and_then(|text| if text.trim().is_empty() { Ok(None) } else { codec.inbound_from_json(text).map(Some) });
                match parsed {
                    Ok(Some(m)) => forward(&tx, Input::Message(m)),
                    Ok(None) => {}
                    Err(e) => {
                        warn!("malformed UI message from {from}: {}", e.reason);
                        queue.push(OutboundMessage::malformed(&e));
                    }
                }
                line.clear();
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => continue,
            Err(e) => {
                info!("UI client {from} read error: {e}");
                break;
            }
        }
    }
    info!("UI client {from} disconnected");
    queue.close();
}

fn ui_writer(
    mut stream: TcpStream,
    from: SocketAddr,
    codec: Codec,
    queue: Arc<DropOldest<OutboundMessage>>,
    stop: Arc<AtomicBool>,
) {
    while !stop.load(Ordering::Relaxed) {
        let Some(msg) = queue.pop_timeout(POLL) else {
            if queue.is_closed() {
                break;
            }
            continue;
        };
        let mut line = codec.outbound_to_json(&msg);
        line.push('\n');
        if let Err(e) = stream.write_all(line.as_bytes()) {
            info!("UI client {from} write failed: {e}");
            break;
        }
    }
    queue.close();
    let _ = stream.shutdown(std::net::Shutdown::Both);
}

fn error_code(e: &SessionError) -> &'static str {
    match e {
        SessionError::WrongMode { .. } => "wrong_mode",
        SessionError::UnknownHistoryId(_) => "unknown_history_id",
        SessionError::Space(_) => "invalid_state",
        SessionError::Config(_) => "config",
    }
}

/// Applies one inbound message to the session. Outcomes surface as session
/// events; failures become error messages.
pub fn apply(session: &mut Session, msg: InboundMessage) -> Result<(), SessionError> {
    match msg {
        InboundMessage::Guide(v) => session.submit_feedback(FeedbackKind::Guiding, v.into()),
        InboundMessage::Zone(v) => session.submit_feedback(FeedbackKind::Zone, v.into()),
        InboundMessage::Auto(AutoSwitch::Start) => session.command(Command::StartAuto),
        InboundMessage::Auto(AutoSwitch::Stop) => session.command(Command::StopAuto),
        InboundMessage::ChangeZone => session.command(Command::ChangeZone),
        InboundMessage::Back { history_id } => session.go_backward(history_id).map(|_| ()),
        InboundMessage::Reset => session.command(Command::Reset),
        InboundMessage::SetState { values } => session.set_state(&values).map(|_| ()),
    }
}

struct Outbox {
    udp: Arc<DropOldest<OutboundMessage>>,
    ui: Vec<Arc<DropOldest<OutboundMessage>>>,
}

impl Outbox {
    fn publish(&mut self, msg: OutboundMessage) {
        self.ui.retain(|q| !q.is_closed());
        for q in &self.ui {
            q.push(msg.clone());
        }
        self.udp.push(msg);
    }
}

fn snapshot(session: &Session) -> Vec<OutboundMessage> {
    vec![
        OutboundMessage::Mode(session.mode().into()),
        OutboundMessage::Epsilon(session.epsilon()),
        OutboundMessage::State { t: session.t(), values: session.current().values().to_vec() },
    ]
}

fn session_loop(
    mut session: Session,
    rx: Receiver<Input>,
    udp_out: Arc<DropOldest<OutboundMessage>>,
    epsilon_every: u64,
    stop: Arc<AtomicBool>,
) -> Session {
    let period = session.tick_period();
    let mut outbox = Outbox { udp: udp_out, ui: Vec::new() };
    let mut next_tick = Instant::now() + period;
    let mut was_auto = session.mode() == Mode::Autonomous;

    while !stop.load(Ordering::Relaxed) {
        let auto = session.mode() == Mode::Autonomous;
        if auto && !was_auto {
            next_tick = Instant::now() + period;
        }
        was_auto = auto;
        let wait = if auto { next_tick.saturating_duration_since(Instant::now()) } else { POLL };
        let mut inputs = Vec::new();
        match rx.recv_timeout(wait) {
            Ok(i) => inputs.push(i),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        inputs.extend(rx.try_iter());
        for input in inputs {
            match input {
                Input::Connected(queue) => {
                    for m in snapshot(&session) {
                        queue.push(m);
                    }
                    outbox.ui.push(queue);
                }
                Input::Message(msg) => {
                    if let Err(e) = apply(&mut session, msg) {
                        outbox.publish(OutboundMessage::Error { code: error_code(&e).into(), detail: e.to_string() });
                    }
                }
            }
        }

        if session.mode() == Mode::Autonomous && Instant::now() >= next_tick {
            match session.tick() {
                Ok(report) => {
                    if report.t % epsilon_every == 0 {
                        outbox.publish(OutboundMessage::Epsilon(session.epsilon()));
                    }
                }
                Err(e) => warn!("tick failed: {e}"),
            }
            next_tick += period;
            let now = Instant::now();
            if next_tick < now {
                next_tick = now + period;
            }
        }
        for event in session.drain_events() {
            outbox.publish(event.into());
        }
    }
    session.flush_log();
    session
}
