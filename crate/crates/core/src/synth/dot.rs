use std::fmt::Write;

use super::netlist::{Block, BlockKind, Netlist};

fn shape(kind: BlockKind) -> &'static str {
    match kind {
        BlockKind::Nbds => "box3d",
        BlockKind::Mult => "box",
        BlockKind::Splitter => "trapezium",
        BlockKind::Mirror => "doublecircle",
        BlockKind::DcSource => "circle",
        BlockKind::Input => "invhouse",
        BlockKind::Output => "house",
    }
}

fn label(b: &Block) -> String {
    match b {
        Block::Nbds { state, .. } => format!("NBDS {state}"),
        Block::Mult { .. } => "MULT\\na·b/c".into(),
        Block::Splitter { .. } => "SPLIT".into(),
        Block::Mirror { gain, .. } if *gain == 1.0 => "M".into(),
        Block::Mirror { gain, .. } => format!("×{gain}"),
        Block::DcSource { amps, .. } => format!("{amps:e} A"),
        Block::Input { name, .. } => name.clone(),
        Block::Output { name, .. } => name.clone(),
    }
}

/// Graphviz digraph with one node per block and one edge per driver→reader
/// pair, labelled with the net name.
pub fn export_dot(netlist: &Netlist) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{", netlist.name.replace('"', "'"));
    let _ = writeln!(s, "  rankdir=LR;");
    let _ = writeln!(s, "  node [fontname=\"Helvetica\"];");
    for (i, b) in netlist.blocks.iter().enumerate() {
        let kind = b.kind();
        let _ = writeln!(
            s,
            "  b{i} [shape={}, label=\"{}\", kind=\"{}\"];",
            shape(kind),
            label(b),
            kind.label()
        );
    }
    let readers = netlist.readers();
    for (d, b) in netlist.blocks.iter().enumerate() {
        for net in b.drives() {
            for &r in &readers[net.0] {
                let _ = writeln!(
                    s,
                    "  b{d} -> b{r} [label=\"{}\"];",
                    netlist.nets[net.0].name
                );
            }
        }
    }
    s.push_str("}\n");
    s
}
