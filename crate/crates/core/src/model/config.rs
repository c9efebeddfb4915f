use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Identifier of a node on the complete graph, in `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for NodeId {
    fn from(id: u32) -> Self {
        NodeId(id)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Which dissemination protocol a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Every active node stays active with probability `s` after each send.
    Parameterized,
    /// The source sends once and goes silent; standard push (`s = 1`)
    /// continues from the node it told. The muting parameter is ignored.
    DelayedStart,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Parameterized => "parameterized",
            Variant::DelayedStart => "delayed_start",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parameterized" => Ok(Variant::Parameterized),
            "delayed_start" => Ok(Variant::DelayedStart),
            other => Err(ConfigError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("need at least 2 nodes, got n = {0}")]
    TooFewNodes(usize),
    #[error("n = {0} exceeds the 32-bit node id space")]
    TooManyNodes(usize),
    #[error("curious count f = {f} must be at most n - 2 = {}", .n.saturating_sub(2))]
    TooManyCurious { f: usize, n: usize },
    #[error("muting parameter s = {0} is outside [0, 1]")]
    MutingOutOfRange(f64),
    #[error("source {node} is not a node of a graph with n = {n}")]
    SourceOutOfRange { node: NodeId, n: usize },
    #[error("source {0} is a curious node")]
    SourceIsCurious(NodeId),
    #[error("step cap must be positive")]
    ZeroStepCap,
    #[error("unknown protocol variant `{0}`")]
    UnknownVariant(String),
}

/// Full parameterization of one gossip run.
///
/// The curious set is always the `f` highest ids `{n - f, .., n - 1}`; on the
/// complete graph only its size matters.
#[derive(Debug, Clone, PartialEq)]
pub struct GossipConfig {
    n: usize,
    f: usize,
    s: f64,
    source: NodeId,
    variant: Variant,
    step_cap: Option<u64>,
}

impl GossipConfig {
    /// Parameterized gossip with node 0 as the source.
    pub fn new(n: usize, f: usize, s: f64) -> Result<Self, ConfigError> {
        if n < 2 {
            return Err(ConfigError::TooFewNodes(n));
        }
        if n > u32::MAX as usize {
            return Err(ConfigError::TooManyNodes(n));
        }
        if f > n - 2 {
            return Err(ConfigError::TooManyCurious { f, n });
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(ConfigError::MutingOutOfRange(s));
        }
        Ok(GossipConfig {
            n,
            f,
            s,
            source: NodeId(0),
            variant: Variant::Parameterized,
            step_cap: None,
        })
    }

    pub fn with_source(mut self, source: NodeId) -> Result<Self, ConfigError> {
        if source.index() >= self.n {
            return Err(ConfigError::SourceOutOfRange {
                node: source,
                n: self.n,
            });
        }
        if self.curious().contains(source) {
            return Err(ConfigError::SourceIsCurious(source));
        }
        self.source = source;
        Ok(self)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_step_cap(mut self, cap: u64) -> Result<Self, ConfigError> {
        if cap == 0 {
            return Err(ConfigError::ZeroStepCap);
        }
        self.step_cap = Some(cap);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Maximum number of `tell_gossip` calls before a run is flagged as capped.
    pub fn step_cap(&self) -> u64 {
        self.step_cap.unwrap_or_else(|| default_step_cap(self.n))
    }

    pub fn curious(&self) -> CuriousSet {
        CuriousSet::new(self.n, self.f)
    }

    /// Non-curious nodes, in increasing id order.
    pub fn honest_nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..(self.n - self.f) as u32).map(NodeId)
    }
}

/// `ceil(50 n ln n)`.
pub fn default_step_cap(n: usize) -> u64 {
    let n = n as f64;
    (50.0 * n * n.ln()).ceil().max(1.0) as u64
}

/// The curious nodes of a configuration: the `f` highest ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CuriousSet {
    n: usize,
    first: usize,
}

impl CuriousSet {
    pub fn new(n: usize, f: usize) -> Self {
        assert!(f <= n, "curious count {f} exceeds n = {n}");
        CuriousSet { n, first: n - f }
    }

    #[inline]
    pub fn contains(&self, id: NodeId) -> bool {
        id.index() >= self.first
    }

    pub fn len(&self) -> usize {
        self.n - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> {
        (self.first as u32..self.n as u32).map(NodeId)
    }
}
