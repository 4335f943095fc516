//! Line-delimited JSON protocol for policies running in another process.
//!
//! One message per line, internally tagged by `type`:
//!
//! ```text
//! -> {"type":"hello","n":5,"m":8,"version":1}
//! <- {"type":"ready"}
//! -> {"type":"act","state":{"node_residual":[..],"link_residual":[..],"sfc_features":[..]},"pending":[..],"slot":0}
//! <- {"type":"action","matrix":[[0,1,0,0,0],..]}
//! ```
//!
//! A peer may answer any request with `refuse` (e.g. shape mismatch at the
//! handshake) or `error`.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::model::StateLayout;
use crate::{State, UnitChain};

use super::{Action, Decision, Policy, PolicyView, SimError};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireState {
    pub node_residual: Vec<f64>,
    pub link_residual: Vec<f64>,
    pub sfc_features: Vec<f64>,
}

impl From<&State> for WireState {
    fn from(s: &State) -> Self {
        WireState {
            node_residual: s.node_residual.clone(),
            link_residual: s.link_residual.clone(),
            sfc_features: s.sfc_features.clone(),
        }
    }
}

/// A pending chain as sent to the peer; `row` is its action-matrix row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub row: usize,
    pub id: usize,
    pub release: u32,
    pub duration: u32,
    pub node_demands: Vec<u32>,
    pub flow_demands: Vec<u32>,
}

impl ChainRecord {
    pub fn new(row: usize, chain: &UnitChain) -> Self {
        ChainRecord {
            row,
            id: chain.id,
            release: chain.release,
            duration: chain.duration,
            node_demands: chain.node_demands.clone(),
            flow_demands: chain.flow_demands.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello { n: usize, m: usize, version: u32 },
    Ready,
    Act { state: WireState, pending: Vec<ChainRecord>, slot: u32 },
    Action { matrix: Vec<Vec<u8>> },
    Refuse { reason: String },
    Error { message: String },
}

impl Message {
    /// Single-line encoding without the trailing newline.
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }

    pub fn decode(line: &str) -> Result<Self, SimError> {
        serde_json::from_str(line.trim_end()).map_err(|e| SimError::Protocol(format!("bad message: {e}")))
    }
}

/// Reads and writes whole messages over any byte stream pair.
pub struct Channel {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
}

impl Channel {
    pub fn new(reader: impl BufRead + Send + 'static, writer: impl Write + Send + 'static) -> Self {
        Channel { reader: Box::new(reader), writer: Box::new(writer) }
    }

    pub fn send(&mut self, msg: &Message) -> Result<(), SimError> {
        let mut line = msg.encode();
        line.push('\n');
        self.writer.write_all(line.as_bytes()).map_err(transport)?;
        self.writer.flush().map_err(transport)
    }

    /// Next message, or `None` on a clean end of stream.
    pub fn recv(&mut self) -> Result<Option<Message>, SimError> {
        let mut line = String::new();
        if self.reader.read_line(&mut line).map_err(transport)? == 0 {
            return Ok(None);
        }
        Message::decode(&line).map(Some)
    }

    fn request(&mut self, msg: &Message) -> Result<Message, SimError> {
        self.send(msg)?;
        self.recv()?.ok_or_else(|| SimError::Transport("peer closed the connection".into()))
    }
}

fn transport(e: std::io::Error) -> SimError {
    SimError::Transport(e.to_string())
}

/// A policy answered by a bridge peer.
///
/// Endpoints are `host:port` (optionally prefixed `tcp://`) or `exec:<command>`,
/// which spawns the command through `sh -c` and talks over its standard streams.
pub struct BridgePolicy {
    channel: Channel,
    child: Option<Child>,
    layout: Option<StateLayout>,
}

impl BridgePolicy {
    pub fn connect(endpoint: &str) -> Result<Self, SimError> {
        if let Some(cmd) = endpoint.strip_prefix("exec:") {
            let mut child = Command::new("sh")
                .arg("-c")
                .arg(cmd)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .spawn()
                .map_err(transport)?;
            let stdin: ChildStdin = child.stdin.take().expect("piped stdin");
            let stdout: ChildStdout = child.stdout.take().expect("piped stdout");
            let channel = Channel::new(BufReader::new(stdout), stdin);
            return Ok(BridgePolicy { channel, child: Some(child), layout: None });
        }
        let addr = endpoint.strip_prefix("tcp://").unwrap_or(endpoint);
        let stream = TcpStream::connect(addr).map_err(|e| SimError::Transport(format!("{addr}: {e}")))?;
        let reader = BufReader::new(stream.try_clone().map_err(transport)?);
        Ok(BridgePolicy { channel: Channel::new(reader, stream), child: None, layout: None })
    }

    pub fn from_channel(channel: Channel) -> Self {
        BridgePolicy { channel, child: None, layout: None }
    }
}

impl Drop for BridgePolicy {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn unexpected(msg: Message, wanted: &str) -> SimError {
    match msg {
        Message::Refuse { reason } => SimError::Refused(reason),
        Message::Error { message } => SimError::Protocol(format!("peer error: {message}")),
        other => SimError::Protocol(format!("expected {wanted}, got {}", other.encode())),
    }
}

impl Policy for BridgePolicy {
    fn handshake(&mut self, layout: &StateLayout) -> Result<(), SimError> {
        let hello = Message::Hello { n: layout.nodes, m: layout.max_tracked, version: PROTOCOL_VERSION };
        match self.channel.request(&hello)? {
            Message::Ready => {
                self.layout = Some(*layout);
                Ok(())
            }
            other => Err(unexpected(other, "ready")),
        }
    }

    fn decide(&mut self, view: &PolicyView<'_>) -> Result<Vec<Decision>, SimError> {
        let layout = self.layout.as_ref().ok_or_else(|| SimError::Protocol("no handshake".into()))?;
        let obs = view.observation;
        let pending = obs.pending.iter().enumerate().map(|(row, &i)| ChainRecord::new(row, &view.instance.chains[i]));
        let act = Message::Act { state: WireState::from(&obs.state), pending: pending.collect(), slot: obs.slot };
        match self.channel.request(&act)? {
            Message::Action { matrix } => {
                let action = Action::from_matrix(&matrix, layout.max_tracked, layout.nodes)?;
                Ok(action.rows().iter().map(|r| r.map_or(Decision::Defer, Decision::Anchor)).collect())
            }
            other => Err(unexpected(other, "action")),
        }
    }
}

/// Answers one connection: checks the handshake against `(n, m)` and maps
/// every `act` through `respond`. Returns when the peer closes the stream.
/// Useful for tests and as a reference for external agents.
pub fn serve(
    channel: &mut Channel,
    n: usize,
    m: usize,
    mut respond: impl FnMut(&WireState, &[ChainRecord], u32) -> Vec<Vec<u8>>,
) -> Result<(), SimError> {
    while let Some(msg) = channel.recv()? {
        let reply = match msg {
            Message::Hello { n: hn, m: hm, version } if hn == n && hm == m && version == PROTOCOL_VERSION => {
                Message::Ready
            }
            Message::Hello { n: hn, m: hm, version } => Message::Refuse {
                reason: format!("serving n={n} m={m} v{PROTOCOL_VERSION}, asked n={hn} m={hm} v{version}"),
            },
            Message::Act { state, pending, slot } => Message::Action { matrix: respond(&state, &pending, slot) },
            other => Message::Error { message: format!("unexpected {}", other.encode()) },
        };
        channel.send(&reply)?;
    }
    Ok(())
}
