use std::fmt::Write;

use crate::model::{format_prob, Icgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DotOptions {
    /// Annotate edges with transition probabilities.
    pub probabilities: bool,
}

impl DotOptions {
    /// Probabilities on, except for variant-A models.
    pub fn for_model(model: &Icgs) -> Self {
        let variant_a = model.meta.get("variant").and_then(|v| v.as_str()) == Some("A");
        Self {
            probabilities: !variant_a,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: one node per state in index order, one edge per
/// positive-probability successor of each move.
pub fn export_dot(model: &Icgs, opts: &DotOptions) -> String {
    // agents after the first are hidden when they never have a choice
    let shown: Vec<usize> = (0..model.n_agents())
        .filter(|&a| a == 0 || model.legal.iter().any(|l| l[a].len() > 1))
        .collect();
    let mut out = String::new();
    out.push_str("digraph icgs {\n  rankdir=LR;\n  node [shape=box];\n");
    for (i, s) in model.states.iter().enumerate() {
        let mut label = escape(&s.name);
        for l in &s.labels {
            label.push_str("\\n");
            label.push_str(&escape(l));
        }
        let extra = if i == model.initial {
            ", peripheries=2"
        } else {
            ""
        };
        let _ = writeln!(out, "  s{i} [label=\"{label}\"{extra}];");
    }
    for (i, row) in model.moves.iter().enumerate() {
        for m in row {
            let act: Vec<&str> = shown
                .iter()
                .map(|&a| model.actions[m.joint[a]].as_str())
                .collect();
            let act = escape(&act.join(","));
            for (t, p) in m.outcome.iter() {
                if opts.probabilities {
                    let _ = writeln!(
                        out,
                        "  s{i} -> s{t} [label=\"{act} / {}\"];",
                        format_prob(p).trim_end_matches("/1")
                    );
                } else {
                    let _ = writeln!(out, "  s{i} -> s{t} [label=\"{act}\"];");
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
