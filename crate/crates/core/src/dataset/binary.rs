//! Single-file dataset container.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic      8  b"SFCDSET\0"
//! version    u16
//! kind       u8   0 = trajectories, 1 = demonstrations
//! reserved   u8   0
//! nodes      u32  n
//! tracked    u32  m
//! horizon    u32  H, states per trajectory
//! chain_len  u32  L, longest chain the feature rows can hold
//! scales     3 x f64  demand, duration, time
//! records    u64
//! record*    u32 byte length, then the payload
//! crc32      u32  over every preceding byte
//! ```
//!
//! A trajectory payload is `H` states of `n + n^2 + m (2L + 5)` f64 values,
//! `H - 1` actions of `m` u32 rows (0 defers, `p + 1` anchors on server `p`),
//! `H` u32 returns and the f64 label. A demonstration payload is its
//! trajectory followed by the instance, the deployment, the completion times
//! and a u8 flag telling whether the schedule is proven optimal.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invdemo::{derive_deadline, Demonstration};
use crate::model::{check_feasible, Deployment, Network, StateLayout, SystemState};
use crate::simulator::Action;
use crate::{UnitChain, UnitInstance};

use super::Trajectory;

pub const MAGIC: [u8; 8] = *b"SFCDSET\0";
pub const FORMAT_VERSION: u16 = 1;

const HEADER_LEN: usize = 8 + 2 + 1 + 1 + 4 * 4 + 3 * 8 + 8;
const NONE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed dataset: {0}")]
    Format(String),
    #[error("format version {found}, this build reads {expected}")]
    Version { found: u16, expected: u16 },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("record {record}: {reason}")]
    Invariant { record: usize, reason: String },
}

fn format_err(msg: impl Into<String>) -> DatasetError {
    DatasetError::Format(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Trajectories,
    Demonstrations,
}

impl RecordKind {
    fn code(self) -> u8 {
        match self {
            RecordKind::Trajectories => 0,
            RecordKind::Demonstrations => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self, DatasetError> {
        match code {
            0 => Ok(RecordKind::Trajectories),
            1 => Ok(RecordKind::Demonstrations),
            other => Err(format_err(format!("unknown record kind {other}"))),
        }
    }
}

/// Everything the fixed header holds; also written as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u16,
    pub kind: RecordKind,
    pub nodes: usize,
    pub max_tracked: usize,
    pub horizon: u32,
    pub max_chain_len: usize,
    pub demand_scale: f64,
    pub duration_scale: f64,
    pub time_scale: f64,
    pub records: u64,
}

impl DatasetHeader {
    pub fn new(kind: RecordKind, layout: &StateLayout, horizon: u32, records: usize) -> Self {
        DatasetHeader {
            version: FORMAT_VERSION,
            kind,
            nodes: layout.nodes,
            max_tracked: layout.max_tracked,
            horizon,
            max_chain_len: layout.max_chain_len,
            demand_scale: layout.demand_scale,
            duration_scale: layout.duration_scale,
            time_scale: layout.time_scale,
            records: records as u64,
        }
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout {
            nodes: self.nodes,
            max_tracked: self.max_tracked,
            max_chain_len: self.max_chain_len,
            demand_scale: self.demand_scale,
            duration_scale: self.duration_scale,
            time_scale: self.time_scale,
        }
    }
}

/// The sidecar: header plus what it takes to audit the binary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub header: DatasetHeader,
    pub state_len: usize,
    pub feature_width: usize,
    pub bytes: u64,
    pub crc32: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Trajectories(Vec<Trajectory>),
    Demonstrations(Vec<Demonstration>),
}

impl Records {
    pub fn kind(&self) -> RecordKind {
        match self {
            Records::Trajectories(_) => RecordKind::Trajectories,
            Records::Demonstrations(_) => RecordKind::Demonstrations,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Records::Trajectories(t) => t.len(),
            Records::Demonstrations(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        let (a, b) = match self {
            Records::Trajectories(t) => (t.as_slice(), &[][..]),
            Records::Demonstrations(d) => (&[][..], d.as_slice()),
        };
        a.iter().chain(b.iter().map(|d| &d.trajectory))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Records,
}

/// Serializes `records`; every trajectory must have `horizon` states shaped by `layout`.
pub fn encode_dataset(layout: &StateLayout, horizon: u32, records: &Records) -> Result<Vec<u8>, DatasetError> {
    if horizon == 0 {
        return Err(format_err("horizon must be positive"));
    }
    for (k, traj) in records.trajectories().enumerate() {
        if traj.len() != horizon as usize {
            return Err(format_err(format!("record {k} has {} states, header says {horizon}", traj.len())));
        }
        traj.validate(layout).map_err(|e| format_err(format!("record {k}: {e}")))?;
    }
    let header = DatasetHeader::new(records.kind(), layout, horizon, records.len());
    let mut out = Vec::new();
    put_header(&mut out, &header);
    let mut payload = Vec::new();
    match records {
        Records::Trajectories(ts) => {
            for t in ts {
                payload.clear();
                put_trajectory(&mut payload, t);
                put_record(&mut out, &payload)?;
            }
        }
        Records::Demonstrations(ds) => {
            for d in ds {
                if d.instance.node_count() != layout.nodes {
                    return Err(format_err("demonstration network does not match the layout"));
                }
                payload.clear();
                put_demonstration(&mut payload, d);
                put_record(&mut out, &payload)?;
            }
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Parses and validates a whole file image.
pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset, DatasetError> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(format_err("not a dataset file (bad magic)"));
    }
    if bytes.len() < MAGIC.len() + 2 {
        return Err(DatasetError::Checksum { stored: 0, computed: crc32fast::hash(bytes) });
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != FORMAT_VERSION {
        return Err(DatasetError::Version { found: version, expected: FORMAT_VERSION });
    }
    if bytes.len() < HEADER_LEN + 4 {
        let stored = if bytes.len() >= 14 { tail_u32(bytes) } else { 0 };
        return Err(DatasetError::Checksum { stored, computed: crc32fast::hash(bytes) });
    }
    let (body, _) = bytes.split_at(bytes.len() - 4);
    let stored = tail_u32(bytes);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(DatasetError::Checksum { stored, computed });
    }

    let mut r = Reader { bytes: body, pos: MAGIC.len() + 2 };
    let kind = RecordKind::from_code(r.u8()?)?;
    if r.u8()? != 0 {
        return Err(format_err("reserved header byte is not zero"));
    }
    let nodes = r.u32()? as usize;
    let max_tracked = r.u32()? as usize;
    let horizon = r.u32()?;
    let max_chain_len = r.u32()? as usize;
    let (demand_scale, duration_scale, time_scale) = (r.f64()?, r.f64()?, r.f64()?);
    let count = r.u64()?;
    let header = DatasetHeader {
        version,
        kind,
        nodes,
        max_tracked,
        horizon,
        max_chain_len,
        demand_scale,
        duration_scale,
        time_scale,
        records: count,
    };
    if horizon == 0 {
        return Err(format_err("horizon must be positive"));
    }
    let layout = header.layout();

    let mut trajectories = Vec::new();
    let mut demos = Vec::new();
    for k in 0..count as usize {
        let len = r.u32()? as usize;
        let mut rec = Reader { bytes: r.take(len)?, pos: 0 };
        let invariant = |reason: String| DatasetError::Invariant { record: k, reason };
        match kind {
            RecordKind::Trajectories => {
                let t = rec.trajectory(&layout, horizon)?;
                check_trajectory(&t, &layout).map_err(invariant)?;
                trajectories.push(t);
            }
            RecordKind::Demonstrations => {
                let d = rec.demonstration(&layout, horizon)?;
                check_trajectory(&d.trajectory, &layout).map_err(invariant)?;
                check_demonstration(&d).map_err(invariant)?;
                demos.push(d);
            }
        }
        if rec.pos != rec.bytes.len() {
            return Err(format_err(format!("record {k} has {} trailing bytes", rec.bytes.len() - rec.pos)));
        }
    }
    if r.pos != body.len() {
        return Err(format_err(format!("{} bytes after the last record", body.len() - r.pos)));
    }
    let records = match kind {
        RecordKind::Trajectories => Records::Trajectories(trajectories),
        RecordKind::Demonstrations => Records::Demonstrations(demos),
    };
    Ok(Dataset { header, records })
}

/// `<path>.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the binary file and its JSON sidecar; returns the header.
pub fn write_dataset(
    path: &Path,
    layout: &StateLayout,
    horizon: u32,
    records: &Records,
) -> Result<DatasetHeader, DatasetError> {
    let bytes = encode_dataset(layout, horizon, records)?;
    let header = DatasetHeader::new(records.kind(), layout, horizon, records.len());
    let sidecar = Sidecar {
        header: header.clone(),
        state_len: layout.state_len(),
        feature_width: layout.feature_width(),
        bytes: bytes.len() as u64,
        crc32: format!("{:08x}", tail_u32(&bytes)),
    };
    fs::write(path, &bytes)?;
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar always serializes");
    text.push('\n');
    fs::write(sidecar_path(path), text)?;
    Ok(header)
}

/// Reads and validates a dataset file. The sidecar is not consulted.
pub fn read_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    decode_dataset(&fs::read(path)?)
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, DatasetError> {
    let text = fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(format!("sidecar: {e}")))
}

fn tail_u32(bytes: &[u8]) -> u32 {
    let n = bytes.len();
    u32::from_le_bytes(bytes[n - 4..].try_into().expect("four bytes"))
}

fn check_trajectory(t: &Trajectory, layout: &StateLayout) -> Result<(), String> {
    t.validate(layout).map_err(|e| e.to_string())
}

fn check_demonstration(d: &Demonstration) -> Result<(), String> {
    let inst = &d.instance;
    if d.deployment.chain_count() != inst.chain_count()
        // Without chains a deployment has no rows to carry a horizon.
        || (inst.chain_count() > 0 && d.deployment.horizon() != inst.deadline as usize)
        || d.deployment.placement.iter().zip(&inst.chains).any(|(p, c)| p.len() != c.len())
    {
        return Err("deployment does not match the instance".into());
    }
    if let Some(v) = check_feasible(inst, &d.deployment).violations.first() {
        return Err(format!("infeasible deployment: {v}"));
    }
    let completion: Option<Vec<u32>> = d.deployment.completion_times().into_iter().collect();
    match completion {
        Some(c) if c == d.completion_times => {}
        _ => return Err("completion times do not match the schedule".into()),
    }
    let deadline = if d.completion_times.is_empty() { 1 } else { derive_deadline(&d.completion_times).unwrap_or(0) };
    if deadline != inst.deadline {
        return Err(format!("deadline {} should be {deadline}", inst.deadline));
    }
    if d.trajectory.episode_return() as usize != d.reward() {
        return Err("trajectory return differs from the number of chains".into());
    }
    Ok(())
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    put_u32(out, u32::try_from(n).expect("lengths fit in u32"));
}

fn put_header(out: &mut Vec<u8>, h: &DatasetHeader) {
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&h.version.to_le_bytes());
    out.push(h.kind.code());
    out.push(0);
    for v in [h.nodes, h.max_tracked, h.horizon as usize, h.max_chain_len] {
        put_len(out, v);
    }
    for v in [h.demand_scale, h.duration_scale, h.time_scale] {
        put_f64(out, v);
    }
    out.extend_from_slice(&h.records.to_le_bytes());
}

fn put_record(out: &mut Vec<u8>, payload: &[u8]) -> Result<(), DatasetError> {
    let len = u32::try_from(payload.len()).map_err(|_| format_err("record longer than 4 GiB"))?;
    put_u32(out, len);
    out.extend_from_slice(payload);
    Ok(())
}

fn put_trajectory(out: &mut Vec<u8>, t: &Trajectory) {
    for s in &t.states {
        s.node_residual.iter().chain(&s.link_residual).chain(&s.sfc_features).for_each(|&v| put_f64(out, v));
    }
    for a in &t.actions {
        for row in a.rows() {
            put_u32(out, row.map_or(0, |p| p as u32 + 1));
        }
    }
    t.returns.iter().for_each(|&r| put_u32(out, r));
    put_f64(out, t.label);
}

fn put_demonstration(out: &mut Vec<u8>, d: &Demonstration) {
    put_trajectory(out, &d.trajectory);
    let inst = &d.instance;
    put_u32(out, inst.deadline);
    inst.network.capacities().iter().for_each(|&c| put_u32(out, c));
    let links = inst.network.links();
    put_len(out, links.len());
    for (p, q, b) in links {
        put_len(out, p);
        put_len(out, q);
        put_u32(out, b);
    }
    put_len(out, inst.chain_count());
    for c in &inst.chains {
        put_len(out, c.id);
        put_u32(out, c.release);
        put_u32(out, c.duration);
        put_f64(out, c.weight);
        put_len(out, c.len());
        c.node_demands.iter().chain(&c.flow_demands).for_each(|&v| put_u32(out, v));
    }
    for (i, servers) in d.deployment.placement.iter().enumerate() {
        servers.iter().for_each(|s| put_u32(out, s.map_or(NONE, |p| p as u32)));
        let slots: Vec<u32> = d.deployment.slots(i).collect();
        put_len(out, slots.len());
        slots.into_iter().for_each(|t| put_u32(out, t));
    }
    put_len(out, d.completion_times.len());
    d.completion_times.iter().for_each(|&t| put_u32(out, t));
    out.push(d.exact as u8);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| format_err("unexpected end of data"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, DatasetError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn u64(&mut self) -> Result<u64, DatasetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }

    fn f64(&mut self) -> Result<f64, DatasetError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, DatasetError> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn u32s(&mut self, n: usize) -> Result<Vec<u32>, DatasetError> {
        (0..n).map(|_| self.u32()).collect()
    }

    /// A count that cannot exceed what is left, at `unit` bytes per item.
    fn count(&mut self, unit: usize) -> Result<usize, DatasetError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(unit) > self.bytes.len() - self.pos {
            return Err(format_err(format!("count {n} runs past the record")));
        }
        Ok(n)
    }

    fn trajectory(&mut self, layout: &StateLayout, horizon: u32) -> Result<Trajectory, DatasetError> {
        let (n, m) = (layout.nodes, layout.max_tracked);
        let h = horizon as usize;
        let mut states = Vec::with_capacity(h);
        for _ in 0..h {
            states.push(SystemState {
                node_residual: self.f64s(n)?,
                link_residual: self.f64s(n * n)?,
                sfc_features: self.f64s(m * layout.feature_width())?,
            });
        }
        let mut actions = Vec::with_capacity(h - 1);
        for _ in 1..h {
            let rows = self
                .u32s(m)?
                .into_iter()
                .map(|v| match v {
                    0 => Ok(None),
                    p if (p as usize) <= n => Ok(Some(p as usize - 1)),
                    p => Err(format_err(format!("action anchors server {} of {n}", p - 1))),
                })
                .collect::<Result<_, _>>()?;
            actions.push(Action::from_rows(n, rows).map_err(|e| format_err(e.to_string()))?);
        }
        let returns = self.u32s(h)?;
        let label = self.f64()?;
        Ok(Trajectory { states, actions, returns, label })
    }

    fn demonstration(&mut self, layout: &StateLayout, horizon: u32) -> Result<Demonstration, DatasetError> {
        let trajectory = self.trajectory(layout, horizon)?;
        let n = layout.nodes;
        let deadline = self.u32()?;
        let capacities = self.u32s(n)?;
        let links = (0..self.count(12)?)
            .map(|_| Ok((self.u32()? as usize, self.u32()? as usize, self.u32()?)))
            .collect::<Result<Vec<_>, DatasetError>>()?;
        let network = Network::from_links(capacities, &links).map_err(|e| format_err(e.to_string()))?;
        let chain_count = self.count(24)?;
        let mut chains = Vec::with_capacity(chain_count);
        for _ in 0..chain_count {
            let id = self.u32()? as usize;
            let release = self.u32()?;
            let duration = self.u32()?;
            let weight = self.f64()?;
            let len = self.count(8)?;
            if len == 0 {
                return Err(format_err("chain without VNFs"));
            }
            let node_demands = self.u32s(len)?;
            let flow_demands = self.u32s(len - 1)?;
            let mut chain = UnitChain::new(id, node_demands, flow_demands, duration, release);
            chain.weight = weight;
            chains.push(chain);
        }
        let instance = UnitInstance::new(network, chains, deadline).map_err(|e| format_err(e.to_string()))?;
        let mut deployment = Deployment::empty(&instance);
        for i in 0..instance.chain_count() {
            let servers = self.u32s(instance.chains[i].len())?;
            if servers.iter().any(|&s| s != NONE && s as usize >= n) {
                return Err(format_err(format!("chain {i} placed on an unknown server")));
            }
            deployment.placement[i] = servers.iter().map(|&s| (s != NONE).then_some(s as usize)).collect();
            let count = self.count(4)?;
            for t in self.u32s(count)? {
                if t >= deadline {
                    return Err(format_err(format!("chain {i} scheduled in slot {t} past the deadline")));
                }
                deployment.schedule[i][t as usize] = true;
            }
        }
        let count = self.count(4)?;
        let completion_times = self.u32s(count)?;
        let exact = match self.u8()? {
            0 => false,
            1 => true,
            b => return Err(format_err(format!("bad flag byte {b}"))),
        };
        Ok(Demonstration { instance, deployment, trajectory, completion_times, exact })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::GenConfig;
    use crate::invdemo::iterate_demonstrations;

    fn layout() -> StateLayout {
        StateLayout {
            nodes: 2,
            max_tracked: 1,
            max_chain_len: 1,
            demand_scale: 2.0,
            duration_scale: 10.0,
            time_scale: 48.0,
        }
    }

    fn state(v: f64) -> crate::State {
        SystemState {
            node_residual: vec![v, 1.0],
            link_residual: vec![0.0, 0.5, 0.5, 0.0],
            sfc_features: vec![0.25; 7],
        }
    }

    fn trajectory() -> Trajectory {
        let act = Action::from_rows(2, vec![Some(1)]).unwrap();
        Trajectory::new(vec![state(1.0), state(0.5), state(0.75)], vec![act, Action::defer(1, 2)], vec![1, 0, 0])
    }

    #[test]
    fn empty_file_is_header_and_trailer() {
        let bytes = encode_dataset(&layout(), 3, &Records::Trajectories(vec![])).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 4);
        assert_eq!(&bytes[..8], b"SFCDSET\0");
        let ds = decode_dataset(&bytes).unwrap();
        assert_eq!(ds.records, Records::Trajectories(vec![]));
        assert_eq!(ds.header.layout(), layout());
    }

    #[test]
    fn trajectories_roundtrip() {
        let recs = Records::Trajectories(vec![trajectory(), trajectory()]);
        let bytes = encode_dataset(&layout(), 3, &recs).unwrap();
        assert_eq!(decode_dataset(&bytes).unwrap().records, recs);
        assert_eq!(encode_dataset(&layout(), 3, &recs).unwrap(), bytes);
    }

    #[test]
    fn demonstrations_roundtrip() {
        let cfg = GenConfig { seed: 3, ..GenConfig::default() };
        let demos = iterate_demonstrations(&cfg, 4).unwrap();
        let recs = Records::Demonstrations(demos);
        let bytes = encode_dataset(&cfg.layout(cfg.horizon), cfg.horizon, &recs).unwrap();
        let ds = decode_dataset(&bytes).unwrap();
        assert_eq!(ds.records, recs);
        assert_eq!(ds.header.kind, RecordKind::Demonstrations);
    }

    #[test]
    fn shape_mismatch_is_a_format_error() {
        let recs = Records::Trajectories(vec![trajectory()]);
        assert!(matches!(encode_dataset(&layout(), 4, &recs), Err(DatasetError::Format(_))));
    }

    #[test]
    fn truncation_and_corruption_fail_the_checksum() {
        let bytes = encode_dataset(&layout(), 3, &Records::Trajectories(vec![trajectory()])).unwrap();
        for cut in [1, 5, bytes.len() - HEADER_LEN] {
            let err = decode_dataset(&bytes[..bytes.len() - cut]).unwrap_err();
            assert!(matches!(err, DatasetError::Checksum { .. }), "cut {cut}: {err}");
        }
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 10] ^= 1;
        assert!(matches!(decode_dataset(&flipped), Err(DatasetError::Checksum { .. })));
    }

    #[test]
    fn wrong_version_is_reported_before_the_checksum() {
        let mut bytes = encode_dataset(&layout(), 3, &Records::Trajectories(vec![])).unwrap();
        bytes[8] = 9;
        assert!(matches!(decode_dataset(&bytes), Err(DatasetError::Version { found: 9, expected: 1 })));
        bytes[..8].copy_from_slice(b"NOTADSET");
        assert!(matches!(decode_dataset(&bytes), Err(DatasetError::Format(_))));
    }

    #[test]
    fn bad_label_is_an_invariant_error() {
        let mut t = trajectory();
        let recs = Records::Trajectories(vec![t.clone()]);
        let mut bytes = encode_dataset(&layout(), 3, &recs).unwrap();
        // Rewrite the label in place and fix up the checksum.
        t.label = 7.0;
        let label_at = bytes.len() - 4 - 8;
        bytes[label_at..label_at + 8].copy_from_slice(&t.label.to_le_bytes());
        let n = bytes.len();
        let crc = crc32fast::hash(&bytes[..n - 4]);
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode_dataset(&bytes), Err(DatasetError::Invariant { record: 0, .. })));
    }
}
