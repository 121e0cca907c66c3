use std::collections::HashMap;

use super::device::{bias_for_circuit_tau, DeviceParams};
use super::netlist::{Block, Census, DeviceSummary, Net, NetId, Netlist, Polarity, NETLIST_SCHEMA};
use super::{validate_netlist, SynthError};
use crate::expr::{signed_addends, split_terms, strip_sign, validate_with, Expr, Factors, SymbolClass};
use crate::system::{DynamicalSystem, SymbolKind, UnitMap};

/// Compile an electrical-domain system into a block netlist.
pub fn synthesize(
    system: &DynamicalSystem,
    device: &DeviceParams,
    units: &UnitMap,
) -> Result<Netlist, SynthError> {
    device.validate()?;
    units
        .validate()
        .map_err(|e| SynthError::InvalidDevice(e.to_string()))?;
    let classify = |s: &str| match system.kind_of(s) {
        Some(SymbolKind::State(_)) | Some(SymbolKind::Input(_)) => SymbolClass::Signal,
        Some(SymbolKind::Parameter(v)) => SymbolClass::Constant(v),
        None => SymbolClass::Unknown,
    };
    for st in &system.states {
        let diagnostics = validate_with(&st.rhs, &classify);
        if !diagnostics.is_empty() {
            return Err(SynthError::Unsynthesizable {
                state: st.name.clone(),
                diagnostics,
            });
        }
    }

    let mut b = Builder::new(system, units.current_per_unit);
    for (i, input) in system.inputs.iter().enumerate() {
        let raw = b.net(&input.name, Polarity::Bilateral);
        b.blocks.push(Block::Input {
            name: input.name.clone(),
            default: input.default,
            out: raw,
        });
        let plus = b.net(&format!("{}_p", input.name), Polarity::Plus);
        let minus = b.net(&format!("{}_n", input.name), Polarity::Minus);
        b.claim(raw);
        b.blocks.push(Block::Splitter {
            input: raw,
            plus,
            minus,
        });
        b.inputs.push(Port {
            raw,
            plus,
            minus,
        });
        debug_assert_eq!(b.inputs.len(), i + 1);
    }
    let mut nbds_index = Vec::new();
    for (dim, st) in system.states.iter().enumerate() {
        let bias = bias_for_circuit_tau(st.tau, device, dim)?;
        let s = device.sum_for(dim, bias.i_dc)?;
        let out = b.net(&st.name, Polarity::Bilateral);
        nbds_index.push(b.blocks.len());
        b.blocks.push(Block::Nbds {
            dim,
            state: st.name.clone(),
            bias,
            s,
            initial: st.initial_value,
            plus_in: None,
            minus_in: None,
            out,
        });
        b.claim(out);
        b.blocks.push(Block::Output {
            name: st.name.clone(),
            input: out,
        });
        b.states.push(out);
    }
    for (dim, st) in system.states.iter().enumerate() {
        let mut target = Target::Rails {
            name: st.name.clone(),
            plus: None,
            minus: None,
        };
        let split = split_terms(&st.rhs);
        for t in &split.positive_terms {
            let r = b.realize(t);
            b.emit(r, false, &mut target);
        }
        for t in &split.negative_terms {
            let r = b.realize(t);
            b.emit(r, true, &mut target);
        }
        if let (Target::Rails { plus, minus, .. }, Block::Nbds { plus_in, minus_in, .. }) =
            (target, &mut b.blocks[nbds_index[dim]])
        {
            *plus_in = plus;
            *minus_in = minus;
        }
    }

    let census = Census::of(&b.blocks);
    let netlist = Netlist {
        schema: NETLIST_SCHEMA.to_string(),
        name: system.name.clone(),
        dimension: system.dimension(),
        device: DeviceSummary {
            k_n: device.k_n,
            k_p: device.k_p,
            beta: device.beta(),
        },
        nets: b.nets,
        blocks: b.blocks,
        census,
    };
    let diagnostics = validate_netlist(&netlist);
    if !diagnostics.is_empty() {
        return Err(SynthError::Netlist(diagnostics));
    }
    Ok(netlist)
}

struct Port {
    raw: NetId,
    plus: NetId,
    minus: NetId,
}

enum Target {
    /// The `F⁺`/`F⁻` pair of one NBDS, created on first use.
    Rails {
        name: String,
        plus: Option<NetId>,
        minus: Option<NetId>,
    },
    /// A single signed summing net.
    Net(NetId),
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Net(NetId),
    Input(usize),
}

#[derive(Debug, Clone, Copy)]
enum Realized {
    Dc(f64),
    Scaled { source: Source, gain: f64 },
}

enum NumItem {
    Signal(Source),
    Constant(f64),
}

enum DenItem {
    Sum(Expr),
    Constant(f64),
}

struct Builder<'a> {
    system: &'a DynamicalSystem,
    unit: f64,
    nets: Vec<Net>,
    blocks: Vec<Block>,
    /// Whether a net already has its one direct (non-mirror) reader.
    claimed: Vec<bool>,
    states: Vec<NetId>,
    inputs: Vec<Port>,
    products: HashMap<String, (NetId, f64)>,
    counter: usize,
}

impl<'a> Builder<'a> {
    fn new(system: &'a DynamicalSystem, unit: f64) -> Self {
        Builder {
            system,
            unit,
            nets: Vec::new(),
            blocks: Vec::new(),
            claimed: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
            products: HashMap::new(),
            counter: 0,
        }
    }

    fn net(&mut self, name: &str, polarity: Polarity) -> NetId {
        self.nets.push(Net {
            name: name.to_string(),
            polarity,
        });
        self.claimed.push(false);
        NetId(self.nets.len() - 1)
    }

    fn fresh(&mut self, prefix: &str, polarity: Polarity) -> NetId {
        self.counter += 1;
        let name = format!("{prefix}{}", self.counter);
        self.net(&name, polarity)
    }

    fn claim(&mut self, net: NetId) {
        self.claimed[net.0] = true;
    }

    /// A net carrying `net`'s current for a new direct reader, copied
    /// through a unit mirror when `net` already has one.
    fn tap(&mut self, net: NetId) -> NetId {
        if !self.claimed[net.0] {
            self.claim(net);
            return net;
        }
        let name = format!("{}_copy", self.nets[net.0].name);
        let copy = self.net(&name, self.nets[net.0].polarity);
        self.blocks.push(Block::Mirror {
            input: net,
            out: copy,
            gain: 1.0,
        });
        self.claim(copy);
        copy
    }

    fn dc(&mut self, amps: f64, polarity: Polarity) -> NetId {
        let out = self.fresh("dc", polarity);
        self.blocks.push(Block::DcSource { amps, out });
        out
    }

    fn value_of(&self, e: &Expr) -> f64 {
        e.eval_with(&|s| self.system.parameters.get(s).copied())
            .expect("constant subexpression evaluates")
    }

    fn is_signal(&self, s: &str) -> bool {
        self.system.is_signal(s)
    }

    fn numerator_item(&mut self, e: &Expr) -> NumItem {
        match e {
            Expr::Symbol(s) => match self.system.kind_of(s) {
                Some(SymbolKind::State(i)) => NumItem::Signal(Source::Net(self.states[i])),
                Some(SymbolKind::Input(i)) => NumItem::Signal(Source::Input(i)),
                _ => NumItem::Constant(self.value_of(e)),
            },
            _ if e.is_constant_under(&|s| self.is_signal(s)) => NumItem::Constant(self.value_of(e)),
            _ => NumItem::Signal(Source::Net(self.sum(e))),
        }
    }

    /// A bilateral net carrying the value of the sum `e`.
    fn sum(&mut self, e: &Expr) -> NetId {
        let net = self.fresh("sum", Polarity::Bilateral);
        let mut target = Target::Net(net);
        for (neg, addend) in signed_addends(e) {
            let (neg2, stripped) = strip_sign(&addend);
            let r = self.realize(&stripped);
            self.emit(r, neg != neg2, &mut target);
        }
        net
    }

    /// A positive net carrying the value of a divisor sum.
    fn divisor_sum(&mut self, e: &Expr) -> NetId {
        let net = self.fresh("den", Polarity::Plus);
        let mut target = Target::Net(net);
        for (neg, addend) in signed_addends(e) {
            let (neg2, stripped) = strip_sign(&addend);
            let r = self.realize(&stripped);
            self.emit(r, neg != neg2, &mut target);
        }
        net
    }

    fn source_net(&mut self, s: Source) -> NetId {
        match s {
            Source::Net(n) => self.tap(n),
            Source::Input(i) => {
                let raw = self.inputs[i].raw;
                self.tap(raw)
            }
        }
    }

    /// Realize a sign-stripped term as a constant or a scaled signal.
    fn realize(&mut self, term: &Expr) -> Realized {
        let f = Factors::of(term);
        let mut gain = f.coefficient;
        let mut num = Vec::new();
        for item in &f.numerator {
            num.push(self.numerator_item(item));
        }
        let mut den = Vec::new();
        for item in &f.denominator {
            if item.is_constant_under(&|s| self.is_signal(s)) {
                den.push(DenItem::Constant(self.value_of(item)));
            } else {
                den.push(DenItem::Sum(item.clone()));
            }
        }
        let signals = num.iter().filter(|i| matches!(i, NumItem::Signal(_))).count();
        let sums = den.iter().filter(|i| matches!(i, DenItem::Sum(_))).count();

        if sums == 0 && signals <= 1 {
            let mut source = None;
            for it in &num {
                match it {
                    NumItem::Signal(s) => source = Some(*s),
                    NumItem::Constant(v) => gain *= v,
                }
            }
            for it in &den {
                if let DenItem::Constant(v) = it {
                    gain /= v;
                }
            }
            return match source {
                None => Realized::Dc(gain),
                Some(source) => Realized::Scaled { source, gain },
            };
        }

        let key = term.to_string();
        if let Some(&(net, gain)) = self.products.get(&key) {
            return Realized::Scaled {
                source: Source::Net(net),
                gain,
            };
        }

        let stages = (signals.saturating_sub(1)).max(sums);
        let mut constant_operands = (stages + 1).saturating_sub(signals);
        let mut operands: Vec<NumItem> = Vec::new();
        for it in num {
            match it {
                NumItem::Signal(_) => operands.push(it),
                NumItem::Constant(v) if constant_operands > 0 => {
                    constant_operands -= 1;
                    operands.push(NumItem::Constant(v));
                }
                NumItem::Constant(v) => gain *= v,
            }
        }
        while operands.len() < stages + 1 {
            operands.push(NumItem::Constant(self.unit));
            gain /= self.unit;
        }
        let mut divisors: Vec<DenItem> = Vec::new();
        let mut constant_divisors = stages - sums;
        for it in den.iter().filter(|i| matches!(i, DenItem::Sum(_))) {
            if let DenItem::Sum(e) = it {
                divisors.push(DenItem::Sum(e.clone()));
            }
        }
        for it in &den {
            if let DenItem::Constant(v) = it {
                if constant_divisors > 0 {
                    constant_divisors -= 1;
                    divisors.push(DenItem::Constant(*v));
                } else {
                    gain /= v;
                }
            }
        }
        while divisors.len() < stages {
            divisors.push(DenItem::Constant(self.unit));
            gain *= self.unit;
        }

        let mut operands = operands.into_iter();
        let mut acc = self.operand_net(operands.next().expect("at least one operand"));
        for (b, c) in operands.zip(divisors) {
            let a = acc;
            self.claim(a);
            let b = self.operand_net(b);
            let c = match c {
                DenItem::Sum(e) => self.divisor_sum(&e),
                DenItem::Constant(v) => self.dc(v, Polarity::Plus),
            };
            let out = self.fresh("mult", Polarity::Bilateral);
            self.blocks.push(Block::Mult { a, b, c, out });
            acc = out;
        }
        self.products.insert(key, (acc, gain));
        Realized::Scaled {
            source: Source::Net(acc),
            gain,
        }
    }

    fn operand_net(&mut self, item: NumItem) -> NetId {
        match item {
            NumItem::Signal(s) => self.source_net(s),
            NumItem::Constant(v) => {
                let n = self.dc(v, Polarity::Bilateral);
                self.claim(n);
                n
            }
        }
    }

    fn rail(&mut self, target: &mut Target, negative: bool) -> NetId {
        match target {
            Target::Net(n) => *n,
            Target::Rails { name, plus, minus } => {
                let (slot, suffix, polarity) = if negative {
                    (minus, "Fn", Polarity::Minus)
                } else {
                    (plus, "Fp", Polarity::Plus)
                };
                if let Some(n) = slot {
                    return *n;
                }
                let net = self.net(&format!("{name}_{suffix}"), polarity);
                *slot = Some(net);
                net
            }
        }
    }

    /// Add `±r` into `target`.
    fn emit(&mut self, r: Realized, negative: bool, target: &mut Target) {
        let rails = matches!(target, Target::Rails { .. });
        match r {
            Realized::Dc(v) => {
                let (negative, amps) = if rails {
                    (negative != (v < 0.0), v.abs())
                } else {
                    (false, if negative { -v } else { v })
                };
                let out = self.rail(target, negative);
                self.blocks.push(Block::DcSource { amps, out });
            }
            Realized::Scaled { source, gain } => {
                let (negative, gain) = if rails {
                    (negative != (gain < 0.0), gain.abs())
                } else {
                    (false, if negative { -gain } else { gain })
                };
                match source {
                    Source::Net(input) => {
                        let out = self.rail(target, negative);
                        self.blocks.push(Block::Mirror { input, out, gain });
                    }
                    Source::Input(i) if rails => {
                        let (plus, minus) = (self.inputs[i].plus, self.inputs[i].minus);
                        let out = self.rail(target, negative);
                        self.blocks.push(Block::Mirror {
                            input: plus,
                            out,
                            gain,
                        });
                        let out = self.rail(target, !negative);
                        self.blocks.push(Block::Mirror {
                            input: minus,
                            out,
                            gain,
                        });
                    }
                    Source::Input(i) => {
                        let input = self.inputs[i].raw;
                        let out = self.rail(target, negative);
                        self.blocks.push(Block::Mirror { input, out, gain });
                    }
                }
            }
        }
    }
}
