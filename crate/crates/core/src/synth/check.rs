use std::collections::HashSet;
use std::fmt;

use super::dataflow::Dataflow;
use super::device::NbdsBias;
use super::netlist::{Block, NetId, Netlist};

/// One violated netlist invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum NetlistDiagnostic {
    /// A block refers to a net that does not exist.
    DanglingNet { block: usize, net: NetId },
    /// Dimension `dim` has `found` NBDS cores instead of one.
    NbdsCount { dim: usize, found: usize },
    /// A MULT divisor net has no DC source among its drivers.
    PositivityGuardMissing { block: usize, net: NetId },
    /// A net has several direct readers and no mirror copies.
    MirrorMissing { net: NetId, readers: Vec<usize> },
    /// A net is read but nothing drives it.
    UndrivenNet { net: NetId },
    /// A block cannot be reached from any source.
    Disconnected { block: usize },
    /// NBDS bias does not satisfy the capacitor ratio law.
    BiasRatio { block: usize, relative_error: f64 },
    /// Non-positive or non-finite bias or `S`.
    InvalidValue { block: usize, what: &'static str },
    /// Blocks depending on each other within one evaluation.
    AlgebraicLoop { blocks: Vec<usize> },
}

impl fmt::Display for NetlistDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use NetlistDiagnostic::*;
        match self {
            DanglingNet { block, net } => write!(f, "block {block} refers to missing net {net}"),
            NbdsCount { dim, found } => {
                write!(f, "dimension {dim} has {found} NBDS cores, expected 1")
            }
            PositivityGuardMissing { block, net } => write!(
                f,
                "MULT block {block}: divisor net {net} has no DC source"
            ),
            MirrorMissing { net, readers } => write!(
                f,
                "net {net} is read directly by blocks {readers:?} without a mirror"
            ),
            UndrivenNet { net } => write!(f, "net {net} is read but never driven"),
            Disconnected { block } => write!(f, "block {block} is not reachable from a source"),
            BiasRatio {
                block,
                relative_error,
            } => write!(
                f,
                "NBDS block {block}: C/I_dc off by {relative_error:e} relative"
            ),
            InvalidValue { block, what } => write!(f, "block {block}: invalid {what}"),
            AlgebraicLoop { blocks } => write!(f, "algebraic loop through blocks {blocks:?}"),
        }
    }
}

/// Relative tolerance of the bias ratio check.
pub const BIAS_RATIO_TOLERANCE: f64 = 1e-12;

/// Every invariant violation of `netlist`; empty when it is sound.
pub fn validate_netlist(netlist: &Netlist) -> Vec<NetlistDiagnostic> {
    use NetlistDiagnostic::*;
    let mut out = Vec::new();
    for (i, b) in netlist.blocks.iter().enumerate() {
        for net in b.reads().into_iter().chain(b.drives()) {
            if net.0 >= netlist.nets.len() {
                out.push(DanglingNet { block: i, net });
            }
        }
    }
    if !out.is_empty() {
        return out;
    }

    let mut per_dim = vec![0usize; netlist.dimension];
    for b in &netlist.blocks {
        if let Block::Nbds { dim, .. } = b {
            if *dim < per_dim.len() {
                per_dim[*dim] += 1;
            } else {
                out.push(NbdsCount {
                    dim: *dim,
                    found: 1,
                });
            }
        }
    }
    for (dim, &found) in per_dim.iter().enumerate() {
        if found != 1 {
            out.push(NbdsCount { dim, found });
        }
    }

    let beta = netlist.device.beta;
    let k_n = netlist.device.k_n;
    for (i, b) in netlist.blocks.iter().enumerate() {
        match b {
            Block::Nbds { bias, s, .. } => {
                let positive = |v: f64| v > 0.0 && v.is_finite();
                if !positive(bias.c) || !positive(bias.i_dc) || !positive(bias.tau_circuit) {
                    out.push(InvalidValue {
                        block: i,
                        what: "bias",
                    });
                    continue;
                }
                if !positive(*s) {
                    out.push(InvalidValue { block: i, what: "S" });
                }
                let want = NbdsBias::required_ratio(bias.tau_circuit, k_n, beta);
                let err = ((bias.c / bias.i_dc - want) / want).abs();
                if !(err <= BIAS_RATIO_TOLERANCE) {
                    out.push(BiasRatio {
                        block: i,
                        relative_error: err,
                    });
                }
            }
            Block::Mirror { gain, .. } if !gain.is_finite() => out.push(InvalidValue {
                block: i,
                what: "mirror gain",
            }),
            Block::DcSource { amps, .. } if !amps.is_finite() => out.push(InvalidValue {
                block: i,
                what: "DC current",
            }),
            _ => {}
        }
    }

    let readers = netlist.readers();
    let drivers = netlist.drivers();
    for (n, list) in readers.iter().enumerate() {
        if !list.is_empty() && drivers[n].is_empty() {
            out.push(UndrivenNet { net: NetId(n) });
        }
        let direct: Vec<usize> = list
            .iter()
            .copied()
            .filter(|&r| !matches!(netlist.blocks[r], Block::Mirror { .. }))
            .collect();
        if direct.len() > 1 {
            out.push(MirrorMissing {
                net: NetId(n),
                readers: direct,
            });
        }
    }

    for (i, b) in netlist.blocks.iter().enumerate() {
        if let Block::Mult { c, .. } = b {
            let guarded = drivers[c.0]
                .iter()
                .any(|&d| matches!(netlist.blocks[d], Block::DcSource { .. }));
            if !guarded {
                out.push(PositivityGuardMissing { block: i, net: *c });
            }
        }
    }

    if let Err(e) = Dataflow::new(netlist) {
        out.push(AlgebraicLoop { blocks: e.0 });
    }

    for block in unreachable(netlist, &drivers) {
        out.push(Disconnected { block });
    }
    out
}

/// Blocks that no chain of drivers connects to an INPUT, DC source or NBDS.
fn unreachable(netlist: &Netlist, drivers: &[Vec<usize>]) -> Vec<usize> {
    let mut live: HashSet<usize> = netlist
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_source())
        .map(|(i, _)| i)
        .collect();
    loop {
        let before = live.len();
        for (i, b) in netlist.blocks.iter().enumerate() {
            if live.contains(&i) || b.is_source() {
                continue;
            }
            let fed = b
                .reads()
                .iter()
                .all(|n| drivers[n.0].iter().any(|d| live.contains(d)));
            if fed {
                live.insert(i);
            }
        }
        if live.len() == before {
            break;
        }
    }
    let mut out: Vec<usize> = (0..netlist.blocks.len())
        .filter(|i| !live.contains(i))
        .collect();
    for (i, b) in netlist.blocks.iter().enumerate() {
        if matches!(b, Block::Nbds { .. })
            && !b
                .reads()
                .iter()
                .all(|n| drivers[n.0].iter().any(|d| live.contains(d)))
        {
            out.push(i);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}
