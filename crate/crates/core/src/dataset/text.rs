//! Line-oriented text formats.
//!
//! Both are sequences of `key value...` lines; `#` starts a comment. An
//! instance file reads
//!
//! ```text
//! nodes 3
//! deadline 10
//! capacity 4 4 2
//! link 0 1 3
//! link 1 2 2
//! chain 0 release 0 duration 2 weight 1 vnf 1 2 flow 1
//! ```
//!
//! and a generator configuration uses the field names of [`GenConfig`], with
//! ranges written as two numbers (`duration 1 10`). Keys left out keep their
//! defaults.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::gen::GenConfig;
use crate::model::Network;
use crate::{UnitChain, UnitInstance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
}

fn syntax(line: usize, reason: impl Into<String>) -> TextError {
    TextError::Syntax { line, reason: reason.into() }
}

/// Non-empty lines with comments stripped, as `(line number, key, values)`.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let mut words = body.split_whitespace();
        words.next().map(|key| (k + 1, key, words.collect()))
    })
}

fn num<T: FromStr>(line: usize, word: &str) -> Result<T, TextError> {
    word.parse().map_err(|_| syntax(line, format!("`{word}` is not a valid number")))
}

fn nums<T: FromStr>(line: usize, words: &[&str]) -> Result<Vec<T>, TextError> {
    words.iter().map(|w| num(line, w)).collect()
}

fn exactly<T: FromStr + Copy, const K: usize>(line: usize, key: &str, words: &[&str]) -> Result<[T; K], TextError> {
    let v: Vec<T> = nums(line, words)?;
    v.try_into().map_err(|_| syntax(line, format!("`{key}` takes {K} value(s)")))
}

pub fn parse_instance(text: &str) -> Result<UnitInstance, TextError> {
    let mut nodes = None;
    let mut deadline = None;
    let mut capacity = None;
    let mut links = Vec::new();
    let mut chains = Vec::new();
    for (line, key, words) in lines(text) {
        match key {
            "nodes" => nodes = Some(exactly::<usize, 1>(line, key, &words)?[0]),
            "deadline" => deadline = Some(exactly::<u32, 1>(line, key, &words)?[0]),
            "capacity" => capacity = Some(nums::<u32>(line, &words)?),
            "link" => {
                let [p, q, b] = exactly::<u32, 3>(line, key, &words)?;
                links.push((p as usize, q as usize, b));
            }
            "chain" => chains.push(parse_chain(line, &words)?),
            other => return Err(syntax(line, format!("unknown key `{other}`"))),
        }
    }
    let nodes = nodes.ok_or_else(|| TextError::Invalid("missing `nodes`".into()))?;
    let deadline = deadline.ok_or_else(|| TextError::Invalid("missing `deadline`".into()))?;
    let capacity = capacity.ok_or_else(|| TextError::Invalid("missing `capacity`".into()))?;
    if capacity.len() != nodes {
        return Err(TextError::Invalid(format!("{} capacities for {nodes} nodes", capacity.len())));
    }
    let network = Network::from_links(capacity, &links).map_err(|e| TextError::Invalid(e.to_string()))?;
    UnitInstance::new(network, chains, deadline).map_err(|e| TextError::Invalid(e.to_string()))
}

// `<id> release r duration d [weight w] vnf c.. flow b..`
fn parse_chain(line: usize, words: &[&str]) -> Result<UnitChain, TextError> {
    let (id, rest) = words.split_first().ok_or_else(|| syntax(line, "`chain` needs an id"))?;
    let id: usize = num(line, id)?;
    let keys = ["release", "duration", "weight", "vnf", "flow"];
    let mut fields: Vec<(&str, Vec<&str>)> = Vec::new();
    for &w in rest {
        if keys.contains(&w) {
            if fields.iter().any(|(k, _)| *k == w) {
                return Err(syntax(line, format!("`{w}` given twice")));
            }
            fields.push((w, Vec::new()));
        } else if let Some((_, vals)) = fields.last_mut() {
            vals.push(w);
        } else {
            return Err(syntax(line, format!("unexpected `{w}`")));
        }
    }
    let field = |k: &str| fields.iter().find(|(name, _)| *name == k).map(|(_, v)| v.as_slice());
    let single = |k: &str| -> Result<Option<&str>, TextError> {
        match field(k) {
            None => Ok(None),
            Some([v]) => Ok(Some(*v)),
            Some(_) => Err(syntax(line, format!("`{k}` takes one value"))),
        }
    };
    let release = single("release")?.ok_or_else(|| syntax(line, "chain needs `release`"))?;
    let duration = single("duration")?.ok_or_else(|| syntax(line, "chain needs `duration`"))?;
    let vnf = nums(line, field("vnf").ok_or_else(|| syntax(line, "chain needs `vnf`"))?)?;
    let flow = nums(line, field("flow").unwrap_or(&[]))?;
    let mut chain = UnitChain::new(id, vnf, flow, num(line, duration)?, num(line, release)?);
    if let Some(w) = single("weight")? {
        chain.weight = num(line, w)?;
    }
    Ok(chain)
}

pub fn format_instance(instance: &UnitInstance) -> String {
    let net = &instance.network;
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", net.node_count());
    let _ = writeln!(out, "deadline {}", instance.deadline);
    let _ = writeln!(out, "capacity {}", join(net.capacities()));
    for (p, q, b) in net.links() {
        let _ = writeln!(out, "link {p} {q} {b}");
    }
    for c in &instance.chains {
        let _ = write!(
            out,
            "chain {} release {} duration {} weight {} vnf {}",
            c.id,
            c.release,
            c.duration,
            c.weight,
            join(&c.node_demands)
        );
        if !c.flow_demands.is_empty() {
            let _ = write!(out, " flow {}", join(&c.flow_demands));
        }
        out.push('\n');
    }
    out
}

fn join<T: ToString>(vals: &[T]) -> String {
    vals.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Reads a generator configuration on top of `GenConfig::default()`.
pub fn parse_config(text: &str) -> Result<GenConfig, TextError> {
    let mut cfg = GenConfig::default();
    let mut seen = HashSet::new();
    for (line, key, words) in lines(text) {
        if !seen.insert(key) {
            return Err(syntax(line, format!("`{key}` given twice")));
        }
        let w = &words;
        match key {
            "nodes" => cfg.nodes = exactly::<usize, 1>(line, key, w)?[0],
            "chains" => cfg.chains = exactly::<usize, 1>(line, key, w)?[0],
            "length" => cfg.length = exactly(line, key, w)?,
            "node_demand" => cfg.node_demand = exactly(line, key, w)?,
            "flow_demand" => cfg.flow_demand = exactly(line, key, w)?,
            "duration" => cfg.duration = exactly(line, key, w)?,
            "capacity" => cfg.capacity = exactly(line, key, w)?,
            "bandwidth" => cfg.bandwidth = exactly(line, key, w)?,
            "link_probability" => cfg.link_probability = exactly::<f64, 1>(line, key, w)?[0],
            "patience" => cfg.patience = exactly::<u32, 1>(line, key, w)?[0],
            "horizon" => cfg.horizon = exactly::<u32, 1>(line, key, w)?[0],
            "max_tracked" => cfg.max_tracked = exactly::<usize, 1>(line, key, w)?[0],
            "seed" => cfg.seed = exactly::<u64, 1>(line, key, w)?[0],
            other => return Err(syntax(line, format!("unknown key `{other}`"))),
        }
    }
    cfg.validate().map_err(|e| TextError::Invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn format_config(cfg: &GenConfig) -> String {
    let pair = |r: [u32; 2]| format!("{} {}", r[0], r[1]);
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", cfg.nodes);
    let _ = writeln!(out, "chains {}", cfg.chains);
    let _ = writeln!(out, "length {} {}", cfg.length[0], cfg.length[1]);
    let _ = writeln!(out, "node_demand {}", pair(cfg.node_demand));
    let _ = writeln!(out, "flow_demand {}", pair(cfg.flow_demand));
    let _ = writeln!(out, "duration {}", pair(cfg.duration));
    let _ = writeln!(out, "capacity {}", pair(cfg.capacity));
    let _ = writeln!(out, "bandwidth {}", pair(cfg.bandwidth));
    let _ = writeln!(out, "link_probability {}", cfg.link_probability);
    let _ = writeln!(out, "patience {}", cfg.patience);
    let _ = writeln!(out, "horizon {}", cfg.horizon);
    let _ = writeln!(out, "max_tracked {}", cfg.max_tracked);
    let _ = writeln!(out, "seed {}", cfg.seed);
    out
}
