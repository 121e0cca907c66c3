//! Static evaluation of a netlist's block graph for given state and input
//! currents.

use std::collections::VecDeque;

use super::netlist::{Block, NetId, Netlist};

/// MULT divisors smaller than this in magnitude are clamped.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    State { dim: usize, out: usize },
    Input { index: usize, out: usize },
    Dc { amps: f64, out: usize },
    Mirror { input: usize, out: usize, gain: f64 },
    Splitter { input: usize, plus: usize, minus: usize },
    Mult { block: usize, a: usize, b: usize, c: usize, out: usize },
}

/// A block graph scheduled in dependency order.
#[derive(Debug, Clone)]
pub struct Dataflow {
    ops: Vec<Op>,
    rails: Vec<(Option<usize>, Option<usize>)>,
    values: Vec<f64>,
    /// Block indices whose divisor was clamped on the last evaluation.
    floored: Vec<usize>,
    pub floor: f64,
}

/// Blocks left unscheduled because they depend on each other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraicLoop(pub Vec<usize>);

impl Dataflow {
    pub fn new(netlist: &Netlist) -> Result<Self, AlgebraicLoop> {
        let drivers = netlist.drivers();
        let n = netlist.blocks.len();
        let mut pending = vec![0usize; n];
        let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, b) in netlist.blocks.iter().enumerate() {
            if b.is_source() || matches!(b, Block::Output { .. }) {
                continue;
            }
            for net in b.reads() {
                for &d in drivers.get(net.0).map(Vec::as_slice).unwrap_or(&[]) {
                    pending[i] += 1;
                    dependents[d].push(i);
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &j in &dependents[i] {
                pending[j] -= 1;
                if pending[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).filter(|&i| pending[i] > 0).collect();
            return Err(AlgebraicLoop(stuck));
        }

        let input_index: Vec<usize> = {
            let mut k = 0;
            netlist
                .blocks
                .iter()
                .map(|b| {
                    let here = k;
                    if matches!(b, Block::Input { .. }) {
                        k += 1;
                    }
                    here
                })
                .collect()
        };
        let mut rails = vec![(None, None); netlist.dimension];
        let mut ops = Vec::new();
        for i in order {
            let op = match &netlist.blocks[i] {
                Block::Nbds {
                    dim,
                    plus_in,
                    minus_in,
                    out,
                    ..
                } => {
                    if let Some(r) = rails.get_mut(*dim) {
                        *r = (plus_in.map(|n| n.0), minus_in.map(|n| n.0));
                    }
                    Op::State {
                        dim: *dim,
                        out: out.0,
                    }
                }
                Block::Input { out, .. } => Op::Input {
                    index: input_index[i],
                    out: out.0,
                },
                Block::DcSource { amps, out } => Op::Dc {
                    amps: *amps,
                    out: out.0,
                },
                Block::Mirror { input, out, gain } => Op::Mirror {
                    input: input.0,
                    out: out.0,
                    gain: *gain,
                },
                Block::Splitter { input, plus, minus } => Op::Splitter {
                    input: input.0,
                    plus: plus.0,
                    minus: minus.0,
                },
                Block::Mult { a, b, c, out } => Op::Mult {
                    block: i,
                    a: a.0,
                    b: b.0,
                    c: c.0,
                    out: out.0,
                },
                Block::Output { .. } => continue,
            };
            ops.push(op);
        }
        Ok(Dataflow {
            ops,
            rails,
            values: vec![0.0; netlist.nets.len()],
            floored: Vec::new(),
            floor: DENOMINATOR_FLOOR,
        })
    }

    /// Settle every net for the given state currents (by dimension) and input
    /// currents (in INPUT block order).
    pub fn evaluate(&mut self, states: &[f64], inputs: &[f64]) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
        self.floored.clear();
        let v = &mut self.values;
        for op in &self.ops {
            match *op {
                Op::State { dim, out } => v[out] += states[dim],
                Op::Input { index, out } => v[out] += inputs[index],
                Op::Dc { amps, out } => v[out] += amps,
                Op::Mirror { input, out, gain } => v[out] += gain * v[input],
                Op::Splitter { input, plus, minus } => {
                    let x = v[input];
                    v[plus] += x.max(0.0);
                    v[minus] += (-x).max(0.0);
                }
                Op::Mult { block, a, b, c, out } => {
                    let mut den = v[c];
                    if den.abs() < self.floor {
                        den = if den < 0.0 { -self.floor } else { self.floor };
                        self.floored.push(block);
                    }
                    v[out] += v[a] * v[b] / den;
                }
            }
        }
    }

    /// `F⁺ − F⁻` of dimension `dim` after [`Dataflow::evaluate`].
    pub fn rhs(&self, dim: usize) -> f64 {
        let (p, m) = self.rails[dim];
        p.map_or(0.0, |i| self.values[i]) - m.map_or(0.0, |i| self.values[i])
    }

    /// `(F⁺, F⁻)` of dimension `dim`.
    pub fn rails(&self, dim: usize) -> (f64, f64) {
        let (p, m) = self.rails[dim];
        (
            p.map_or(0.0, |i| self.values[i]),
            m.map_or(0.0, |i| self.values[i]),
        )
    }

    pub fn net_value(&self, net: NetId) -> f64 {
        self.values[net.0]
    }

    pub fn floored_blocks(&self) -> &[usize] {
        &self.floored
    }

    pub fn dimension(&self) -> usize {
        self.rails.len()
    }
}
