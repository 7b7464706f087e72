//! Bulk-synchronous message-passing harness. Every transmission goes through
//! [`deliver`], which checks it against the round's graph and meters it in a
//! [`CommLog`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::graph::GraphSnapshot;
use crate::{Result, SocoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// A d-dimensional action vector.
    Action,
    /// A network-crawl aggregate vector.
    Crawl,
    /// A cost-function descriptor (LPC only).
    Function,
}

impl MessageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MessageKind::Action => "action",
            MessageKind::Crawl => "crawl",
            MessageKind::Function => "function",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub round: usize,
    pub iteration: usize,
    pub src: usize,
    pub dst: usize,
    pub payload_dim: usize,
    pub kind: MessageKind,
}

/// Whether a [`CommLog`] keeps every message or only running totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogMode {
    #[default]
    Full,
    Counting,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub messages: usize,
    /// Messages weighted by relay length.
    pub hop_messages: usize,
    /// Payload scalars summed over hop-messages.
    pub dims: usize,
}

/// Append-only communication and compute ledger.
#[derive(Debug, Clone, Default)]
pub struct CommLog {
    mode: LogMode,
    messages: Vec<Message>,
    hops: Vec<usize>,
    per_round: BTreeMap<usize, BTreeMap<MessageKind, KindCounts>>,
    per_agent_ops: Vec<f64>,
    wall_clock: BTreeMap<String, Duration>,
    agents: usize,
}

impl CommLog {
    pub fn new(agents: usize) -> Self {
        Self::with_mode(agents, LogMode::Full)
    }

    pub fn with_mode(agents: usize, mode: LogMode) -> Self {
        Self { mode, agents, per_agent_ops: vec![0.0; agents], ..Self::default() }
    }

    pub fn mode(&self) -> LogMode {
        self.mode
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    /// Stored messages; empty in counting mode.
    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    /// Relay length of each stored message.
    pub fn hops(&self) -> &[usize] {
        &self.hops
    }

    pub fn round_counts(&self, round: usize) -> BTreeMap<MessageKind, KindCounts> {
        self.per_round.get(&round).cloned().unwrap_or_default()
    }

    pub fn count(&self, kind: MessageKind) -> KindCounts {
        let mut total = KindCounts::default();
        for c in self.per_round.values().filter_map(|r| r.get(&kind)) {
            total.messages += c.messages;
            total.hop_messages += c.hop_messages;
            total.dims += c.dims;
        }
        total
    }

    pub fn add_ops(&mut self, agent: usize, flops: f64) {
        if agent >= self.per_agent_ops.len() {
            self.per_agent_ops.resize(agent + 1, 0.0);
        }
        self.per_agent_ops[agent] += flops;
    }

    pub fn ops(&self) -> &[f64] {
        &self.per_agent_ops
    }

    /// Adds wall-clock time spent by `algo` across all agents.
    pub fn add_time(&mut self, algo: &str, elapsed: Duration) {
        *self.wall_clock.entry(algo.to_string()).or_default() += elapsed;
    }

    pub fn wall_clock(&self) -> &BTreeMap<String, Duration> {
        &self.wall_clock
    }

    fn record(&mut self, msg: Message, hops: usize) {
        let c = self.per_round.entry(msg.round).or_default().entry(msg.kind).or_default();
        c.messages += 1;
        c.hop_messages += hops;
        c.dims += hops * msg.payload_dim;
        if self.mode == LogMode::Full {
            self.messages.push(msg);
            self.hops.push(hops);
        }
    }

    /// `round,iteration,src,dst,payload_dim,kind` rows (full mode only).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,iteration,src,dst,payload_dim,kind\n");
        for m in &self.messages {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                m.round + 1,
                m.iteration,
                m.src,
                m.dst,
                m.payload_dim,
                m.kind.as_str()
            );
        }
        out
    }
}

/// Checks `msg` against `g` and appends it to `log`; returns the hop count.
///
/// Action and crawl messages must travel along an edge. Function messages may
/// be relayed up to `relay_radius` hops and are charged once per hop.
pub fn deliver(log: &mut CommLog, msg: Message, g: &GraphSnapshot, relay_radius: Option<usize>) -> Result<usize> {
    if msg.src >= g.n() || msg.dst >= g.n() || msg.src == msg.dst {
        return Err(SocoError::LocalityViolation(format!("invalid endpoints {} -> {}", msg.src, msg.dst)));
    }
    let hops = match msg.kind {
        MessageKind::Action | MessageKind::Crawl => {
            if !g.has_edge(msg.src, msg.dst) {
                return Err(SocoError::LocalityViolation(format!(
                    "{} message {} -> {} in round {} is not on an edge",
                    msg.kind.as_str(),
                    msg.src,
                    msg.dst,
                    msg.round + 1
                )));
            }
            1
        }
        MessageKind::Function => {
            let radius = relay_radius.ok_or_else(|| {
                SocoError::LocalityViolation("function payload sent without a declared relay radius".into())
            })?;
            match g.hop_distance(msg.src, msg.dst) {
                Some(h) if h <= radius => h,
                other => {
                    return Err(SocoError::LocalityViolation(format!(
                        "function payload {} -> {} spans {:?} hops, radius is {radius}",
                        msg.src, msg.dst, other
                    )));
                }
            }
        }
    };
    log.record(msg, hops);
    Ok(hops)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// Logical messages per round, indexed from round 0 to the last logged round.
    pub messages_per_round: Vec<usize>,
    pub messages: usize,
    pub hop_messages: usize,
    pub dims_total: usize,
    pub ops_per_agent: Vec<f64>,
    /// Seconds per agent for each algorithm: aggregate time divided by N.
    pub time_per_agent: BTreeMap<String, f64>,
}

pub fn summarize(log: &CommLog) -> Summary {
    let rounds = log.per_round.keys().next_back().map_or(0, |r| r + 1);
    let mut messages_per_round = vec![0; rounds];
    let (mut messages, mut hop_messages, mut dims_total) = (0, 0, 0);
    for (&r, kinds) in &log.per_round {
        for c in kinds.values() {
            messages_per_round[r] += c.messages;
            messages += c.messages;
            hop_messages += c.hop_messages;
            dims_total += c.dims;
        }
    }
    let n = log.agents.max(1) as f64;
    let time_per_agent = log.wall_clock.iter().map(|(k, d)| (k.clone(), d.as_secs_f64() / n)).collect();
    Summary {
        messages_per_round,
        messages,
        hop_messages,
        dims_total,
        ops_per_agent: log.per_agent_ops.clone(),
        time_per_agent,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub algo: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub degree: usize,
    pub beta: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub messages: usize,
    pub dims: usize,
    pub tau_per_agent: f64,
}

/// `{algo, N, D, beta, T, messages, dims, tau_per_agent}` for one run.
pub fn summary_json(log: &CommLog, algo: &str, degree: usize, beta: f64, horizon: usize) -> Result<String> {
    let s = summarize(log);
    let rec = SummaryRecord {
        algo: algo.to_string(),
        n: log.agents,
        degree,
        beta,
        horizon,
        messages: s.hop_messages,
        dims: s.dims_total,
        tau_per_agent: s.time_per_agent.get(algo).copied().unwrap_or(0.0),
    };
    Ok(serde_json::to_string(&rec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_d_regular;

    fn msg(src: usize, dst: usize, kind: MessageKind) -> Message {
        Message { round: 0, iteration: 1, src, dst, payload_dim: 1, kind }
    }

    #[test]
    fn edge_messages_must_follow_edges() {
        let ring = build_d_regular(5, 2).unwrap();
        let mut log = CommLog::new(5);
        assert_eq!(deliver(&mut log, msg(0, 1, MessageKind::Action), &ring, None).unwrap(), 1);
        assert!(matches!(
            deliver(&mut log, msg(0, 2, MessageKind::Action), &ring, None),
            Err(SocoError::LocalityViolation(_))
        ));
        assert!(deliver(&mut log, msg(0, 2, MessageKind::Crawl), &ring, Some(3)).is_err());
        assert_eq!(log.messages().len(), 1);
    }

    #[test]
    fn function_payloads_are_charged_per_hop() {
        let ring = build_d_regular(6, 2).unwrap();
        let mut log = CommLog::new(6);
        let m = Message { payload_dim: 3, ..msg(0, 2, MessageKind::Function) };
        assert_eq!(deliver(&mut log, m, &ring, Some(2)).unwrap(), 2);
        assert!(deliver(&mut log, msg(0, 3, MessageKind::Function), &ring, Some(2)).is_err());
        assert!(deliver(&mut log, msg(0, 1, MessageKind::Function), &ring, None).is_err());
        let c = log.count(MessageKind::Function);
        assert_eq!((c.messages, c.hop_messages, c.dims), (1, 2, 6));
    }

    #[test]
    fn counting_mode_keeps_totals_only() {
        let ring = build_d_regular(4, 2).unwrap();
        let mut log = CommLog::with_mode(4, LogMode::Counting);
        for _ in 0..3 {
            deliver(&mut log, msg(1, 2, MessageKind::Action), &ring, None).unwrap();
        }
        assert!(log.messages().is_empty());
        assert_eq!(summarize(&log).messages, 3);
    }

    #[test]
    fn empty_summary_is_zero() {
        let s = summarize(&CommLog::new(3));
        assert!(s.messages_per_round.is_empty());
        assert_eq!((s.messages, s.hop_messages, s.dims_total), (0, 0, 0));
        assert_eq!(s.ops_per_agent, vec![0.0; 3]);
    }

    #[test]
    fn csv_and_summary_json() {
        let ring = build_d_regular(4, 2).unwrap();
        let mut log = CommLog::new(4);
        deliver(&mut log, msg(0, 3, MessageKind::Action), &ring, None).unwrap();
        log.add_time("acord", Duration::from_millis(40));
        assert_eq!(log.to_csv(), "round,iteration,src,dst,payload_dim,kind\n1,1,0,3,1,action\n");
        let json: serde_json::Value = serde_json::from_str(&summary_json(&log, "acord", 2, 5.0, 1).unwrap()).unwrap();
        assert_eq!(json["messages"], 1);
        assert!((json["tau_per_agent"].as_f64().unwrap() - 0.01).abs() < 1e-12);
    }
}
