use std::fmt;

use serde::{Deserialize, Serialize};

use super::device::NbdsBias;
use super::SynthError;

pub const NETLIST_SCHEMA: &str = "nbds-netlist/1";

/// Index into [`Netlist::nets`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetId(pub usize);

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Sign convention of the current carried by a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Non-negative by construction.
    Plus,
    /// Non-negative, subtracted at its destination.
    Minus,
    /// Either sign.
    Bilateral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BlockKind {
    Nbds,
    Mult,
    Splitter,
    Mirror,
    DcSource,
    Input,
    Output,
}

impl BlockKind {
    pub fn label(self) -> &'static str {
        match self {
            BlockKind::Nbds => "NBDS",
            BlockKind::Mult => "MULT",
            BlockKind::Splitter => "SPLITTER",
            BlockKind::Mirror => "MIRROR",
            BlockKind::DcSource => "DCSOURCE",
            BlockKind::Input => "INPUT",
            BlockKind::Output => "OUTPUT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Block {
    /// One integrating core. `plus_in`/`minus_in` carry `F⁺` and `F⁻`;
    /// `out` carries `I_out`.
    #[serde(rename = "NBDS")]
    Nbds {
        dim: usize,
        state: String,
        bias: NbdsBias,
        #[serde(rename = "S")]
        s: f64,
        initial: f64,
        plus_in: Option<NetId>,
        minus_in: Option<NetId>,
        out: NetId,
    },
    /// `out = a·b/c`.
    #[serde(rename = "MULT")]
    Mult {
        a: NetId,
        b: NetId,
        c: NetId,
        out: NetId,
    },
    #[serde(rename = "SPLITTER")]
    Splitter {
        input: NetId,
        plus: NetId,
        minus: NetId,
    },
    /// `out += gain·input`.
    #[serde(rename = "MIRROR")]
    Mirror { input: NetId, out: NetId, gain: f64 },
    #[serde(rename = "DCSOURCE")]
    DcSource { amps: f64, out: NetId },
    #[serde(rename = "INPUT")]
    Input {
        name: String,
        default: f64,
        out: NetId,
    },
    #[serde(rename = "OUTPUT")]
    Output { name: String, input: NetId },
}

impl Block {
    pub fn kind(&self) -> BlockKind {
        match self {
            Block::Nbds { .. } => BlockKind::Nbds,
            Block::Mult { .. } => BlockKind::Mult,
            Block::Splitter { .. } => BlockKind::Splitter,
            Block::Mirror { .. } => BlockKind::Mirror,
            Block::DcSource { .. } => BlockKind::DcSource,
            Block::Input { .. } => BlockKind::Input,
            Block::Output { .. } => BlockKind::Output,
        }
    }

    /// Nets this block reads.
    pub fn reads(&self) -> Vec<NetId> {
        match self {
            Block::Nbds {
                plus_in, minus_in, ..
            } => plus_in.iter().chain(minus_in.iter()).copied().collect(),
            Block::Mult { a, b, c, .. } => vec![*a, *b, *c],
            Block::Splitter { input, .. } | Block::Mirror { input, .. } => vec![*input],
            Block::Output { input, .. } => vec![*input],
            Block::DcSource { .. } | Block::Input { .. } => Vec::new(),
        }
    }

    /// Nets this block drives.
    pub fn drives(&self) -> Vec<NetId> {
        match self {
            Block::Nbds { out, .. }
            | Block::Mult { out, .. }
            | Block::Mirror { out, .. }
            | Block::DcSource { out, .. }
            | Block::Input { out, .. } => vec![*out],
            Block::Splitter { plus, minus, .. } => vec![*plus, *minus],
            Block::Output { .. } => Vec::new(),
        }
    }

    /// Whether the block's outputs are independent of its inputs within one
    /// evaluation.
    pub fn is_source(&self) -> bool {
        matches!(
            self,
            Block::Nbds { .. } | Block::DcSource { .. } | Block::Input { .. }
        )
    }
}

/// Block counts by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    #[serde(rename = "NBDS")]
    pub nbds: usize,
    #[serde(rename = "MULT")]
    pub mult: usize,
    #[serde(rename = "SPLITTER")]
    pub splitter: usize,
    #[serde(rename = "MIRROR")]
    pub mirror: usize,
    #[serde(rename = "DCSOURCE")]
    pub dc_source: usize,
    #[serde(rename = "INPUT")]
    pub input: usize,
    #[serde(rename = "OUTPUT")]
    pub output: usize,
}

impl Census {
    pub fn of(blocks: &[Block]) -> Self {
        let mut c = Census::default();
        for b in blocks {
            *match b.kind() {
                BlockKind::Nbds => &mut c.nbds,
                BlockKind::Mult => &mut c.mult,
                BlockKind::Splitter => &mut c.splitter,
                BlockKind::Mirror => &mut c.mirror,
                BlockKind::DcSource => &mut c.dc_source,
                BlockKind::Input => &mut c.input,
                BlockKind::Output => &mut c.output,
            } += 1;
        }
        c
    }
}

impl fmt::Display for Census {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "NBDS={} MULT={} SPLITTER={} MIRROR={} DCSOURCE={} INPUT={} OUTPUT={}",
            self.nbds,
            self.mult,
            self.splitter,
            self.mirror,
            self.dc_source,
            self.input,
            self.output
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSummary {
    pub k_n: f64,
    pub k_p: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Netlist {
    pub schema: String,
    pub name: String,
    /// Number of state variables.
    pub dimension: usize,
    pub device: DeviceSummary,
    pub nets: Vec<Net>,
    pub blocks: Vec<Block>,
    pub census: Census,
}

impl Netlist {
    /// Blocks reading each net, in block order.
    pub fn readers(&self) -> Vec<Vec<usize>> {
        let mut r = vec![Vec::new(); self.nets.len()];
        for (i, b) in self.blocks.iter().enumerate() {
            for n in b.reads() {
                if let Some(list) = r.get_mut(n.0) {
                    list.push(i);
                }
            }
        }
        r
    }

    /// Blocks driving each net, in block order.
    pub fn drivers(&self) -> Vec<Vec<usize>> {
        let mut d = vec![Vec::new(); self.nets.len()];
        for (i, b) in self.blocks.iter().enumerate() {
            for n in b.drives() {
                if let Some(list) = d.get_mut(n.0) {
                    list.push(i);
                }
            }
        }
        d
    }

    /// The NBDS block of each dimension, if present exactly once.
    pub fn nbds_blocks(&self) -> Vec<Option<usize>> {
        let mut found = vec![None; self.dimension];
        for (i, b) in self.blocks.iter().enumerate() {
            if let Block::Nbds { dim, .. } = b {
                if let Some(slot) = found.get_mut(*dim) {
                    *slot = Some(i);
                }
            }
        }
        found
    }

    /// `(name, default)` of every INPUT block, in block order.
    pub fn input_ports(&self) -> Vec<(String, f64)> {
        self.blocks
            .iter()
            .filter_map(|b| match b {
                Block::Input { name, default, .. } => Some((name.clone(), *default)),
                _ => None,
            })
            .collect()
    }

    /// State names by dimension.
    pub fn state_names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.dimension];
        for b in &self.blocks {
            if let Block::Nbds { dim, state, .. } = b {
                if let Some(slot) = names.get_mut(*dim) {
                    *slot = state.clone();
                }
            }
        }
        names
    }
}

pub fn export_json(netlist: &Netlist) -> String {
    serde_json::to_string_pretty(netlist).expect("netlist serializes")
}

/// Parse a netlist document and check its schema tag and census.
pub fn import_json(document: &str) -> Result<Netlist, SynthError> {
    let n: Netlist =
        serde_json::from_str(document).map_err(|e| SynthError::Schema(e.to_string()))?;
    if n.schema != NETLIST_SCHEMA {
        return Err(SynthError::Schema(format!(
            "unsupported schema \"{}\", expected \"{NETLIST_SCHEMA}\"",
            n.schema
        )));
    }
    let census = Census::of(&n.blocks);
    if census != n.census {
        return Err(SynthError::Schema(format!(
            "census ({}) does not match blocks ({census})",
            n.census
        )));
    }
    Ok(n)
}
