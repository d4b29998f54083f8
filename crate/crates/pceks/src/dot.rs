use std::fmt::Write as _;
use std::path::Path;

use pceks_core::concrete::Exploration;

/// The concrete state graph in DOT. Nodes are labelled with their index;
/// edges with the sequence number of the thread that moved.
pub fn to_dot(x: &Exploration) -> String {
    let finals = x.finals();
    let mut out = String::from("digraph explore {\n  node [shape=circle];\n");
    for i in 0..x.states.len() {
        let shape = if finals.contains(&i) { ", shape=doublecircle" } else { "" };
        let _ = writeln!(out, "  s{i} [label=\"{i}\"{shape}];");
    }
    for e in &x.edges {
        let _ = writeln!(out, "  s{} -> s{} [label=\"t{}\"];", e.from, e.to, e.tid.seq);
    }
    out.push_str("}\n");
    out
}

pub fn write_dot(path: &Path, x: &Exploration) -> std::io::Result<()> {
    std::fs::write(path, to_dot(x))
}
