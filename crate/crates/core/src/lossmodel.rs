//! Per-sample menu of semantic losses and latencies for the four transmission levels.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::channel::{latency, ChannelError, ChannelParams};
use crate::extractor::{classify, ClassId, ExtractorError, ExtractorModel};
use crate::planner::{Instance, Level, PlanError, Row, LEVELS};
use crate::skb::{Skb, SkbError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("knowledge base is empty")]
    EmptySkb,
    #[error(transparent)]
    Extractor(#[from] ExtractorError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Skb(#[from] SkbError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// One party's trained projections and knowledge base.
#[derive(Debug, Clone, Copy)]
pub struct PartyContext<'a> {
    pub model: &'a ExtractorModel,
    pub skb: &'a Skb,
}

impl<'a> PartyContext<'a> {
    pub fn new(model: &'a ExtractorModel, skb: &'a Skb) -> Result<Self, LossError> {
        if skb.is_empty() {
            return Err(LossError::EmptySkb);
        }
        let dim = skb.prototypes().dim();
        if model.d_s() != dim {
            return Err(LossError::DimensionMismatch(format!(
                "model semantic dimension {} but prototypes have dimension {dim}",
                model.d_s()
            )));
        }
        Ok(Self { model, skb })
    }

    fn nearest(&self, s: &[f64]) -> Result<(ClassId, f64), LossError> {
        Ok(classify(s, self.skb.prototypes(), self.skb.class_ids())?)
    }
}

/// Losses, latencies and receiver decisions for one sample, indexed by level.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleMenu {
    pub losses: Row,
    /// Seconds.
    pub latencies: Row,
    /// Class the receiver settles on at each level.
    pub decisions: [ClassId; LEVELS],
    /// Transmitter's estimate over its own knowledge base.
    pub tx_estimate: ClassId,
    /// Whether the receiver's knowledge base holds `tx_estimate`.
    pub rx_hit: bool,
}

/// Builds the four-level menu for visual feature `v`.
///
/// Level 1 sends `v` and the receiver runs its own pipeline; level 2 sends the
/// transmitter's intermediate feature for the receiver to decode; level 3
/// sends the transmitter's semantic vector; level 4 sends the transmitter's
/// class estimate, as a single label when the receiver knows that class and
/// as its semantic vector otherwise.
pub fn compute_menu(
    v: &[f64],
    tx: PartyContext<'_>,
    rx: PartyContext<'_>,
    channel: &ChannelParams,
    rate: f64,
) -> Result<SampleMenu, LossError> {
    let (mt, mr) = (tx.model, rx.model);
    if v.len() != mt.d_v() || v.len() != mr.d_v() {
        return Err(LossError::DimensionMismatch(format!(
            "visual feature has length {}, models expect {} and {}",
            v.len(),
            mt.d_v(),
            mr.d_v()
        )));
    }
    if mt.k() != mr.k() || mt.d_s() != mr.d_s() {
        return Err(LossError::DimensionMismatch(format!(
            "transmitter (k={}, ds={}) and receiver (k={}, ds={}) disagree",
            mt.k(),
            mt.d_s(),
            mr.k(),
            mr.d_s()
        )));
    }
    for party in [&tx, &rx] {
        if party.skb.is_empty() {
            return Err(LossError::EmptySkb);
        }
    }

    let (c1, l1) = rx.nearest(&mr.semantic(v))?;
    let f_tx = mt.encode(v);
    let (c2, l2) = rx.nearest(&mr.decode(&f_tx))?;
    let s_tx = mt.decode(&f_tx);
    let (c3, l3) = rx.nearest(&s_tx)?;
    let (c4, l4) = tx.nearest(&s_tx)?;
    let rx_hit = rx.skb.indicator(c4)? == 1;

    let t = |elements: usize| latency(elements, channel, rate);
    let label_elements = if rx_hit { 1 } else { mt.d_s() };
    Ok(SampleMenu {
        losses: [l1, l2, l3, l4],
        latencies: [t(mt.d_v())?, t(mt.k())?, t(mt.d_s())?, t(label_elements)?],
        decisions: [c1, c2, c3, c4],
        tx_estimate: c4,
        rx_hit,
    })
}

/// The receiver's class when the sample is sent at `level`.
pub fn effective_decision(menu: &SampleMenu, level: Level) -> ClassId {
    menu.decisions[level.index()]
}

/// Stacks menus into a planner instance with budget `tau`.
pub fn instance_from_menus(menus: &[SampleMenu], tau: f64) -> Result<Instance, LossError> {
    let losses: Vec<Row> = menus.iter().map(|m| m.losses).collect();
    let latencies: Vec<Row> = menus.iter().map(|m| m.latencies).collect();
    Ok(Instance::new(losses, latencies, tau)?)
}
