//! Human-readable grounding traces and statistics.

use std::fmt::Write as _;
use std::io::Write;

use crate::analysis::Component;
use crate::ast::{Rule, SymbolicAtom};
use crate::engine::{Observer, Stats};
use crate::grounder::{GroundInstance, PreparedRule};
use crate::parser::Program;

fn braced(atoms: impl IntoIterator<Item = impl std::fmt::Display>) -> String {
    let items: Vec<String> = atoms.into_iter().map(|a| a.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

/// A prepared rule with its body in grounding order, adornments and marks
/// shown.
pub fn annotated_rule(prepared: &PreparedRule) -> String {
    let body: Vec<String> = prepared
        .order
        .iter()
        .map(|&i| prepared.rule.body[i].annotated().to_string())
        .collect();
    match &prepared.rule.head {
        Some(h) if body.is_empty() => format!("{h}."),
        Some(h) => format!("{h} :- {}.", body.join(", ")),
        None => format!(":- {}.", body.join(", ")),
    }
}

fn annotated_source(rule: &Rule) -> String {
    let body: Vec<String> = rule
        .body
        .iter()
        .map(|l| l.annotated().to_string())
        .collect();
    match &rule.head {
        Some(h) if body.is_empty() => format!("{h}."),
        Some(h) => format!("{h} :- {}.", body.join(", ")),
        None => format!(":- {}.", body.join(", ")),
    }
}

/// Writes component panels, rule instances and propagation events.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    fn line(&mut self, text: &str) {
        // tracing is best effort; a closed stderr must not abort grounding
        let _ = writeln!(self.out, "{text}");
    }
}

impl<W: Write> Observer for TraceWriter<W> {
    fn rewritten(&mut self, program: &Program) {
        self.line("% rewritten program");
        for rule in &program.rules {
            self.line(&annotated_source(rule));
        }
    }

    fn component_start(&mut self, component: &Component, prepared: &[PreparedRule]) {
        let (outer, inner) = component.index;
        self.line("");
        self.line(&format!("Component {outer},{inner}"));
        self.line(&format!("  A_r = {}", braced(&component.recursive_atoms)));
        for p in prepared {
            self.line(&format!("  {}", annotated_rule(p)));
        }
    }

    fn instance(
        &mut self,
        component: &Component,
        iteration: usize,
        _prepared: &PreparedRule,
        instance: &GroundInstance,
    ) {
        let mut text = format!("  {}.{iteration}  {}", component.index.0, instance.rule);
        if !instance.emitted {
            let _ = write!(text, "  % head is a fact");
        }
        self.line(&text);
    }

    fn propagation(
        &mut self,
        component: &Component,
        iteration: usize,
        _recursive: bool,
        added: &[SymbolicAtom],
    ) {
        if !added.is_empty() {
            self.line(&format!(
                "  {}.{iteration}  PropagateAggregates: {}",
                component.index.0,
                braced(added)
            ));
        }
    }

    fn iteration_end(&mut self, component: &Component, iteration: usize, added: &[SymbolicAtom]) {
        self.line(&format!(
            "  {}.{iteration}  A_n = {}",
            component.index.0,
            braced(added)
        ));
    }
}

/// Multi-line statistics summary.
pub fn format_stats(stats: &Stats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "components: {}", stats.components.len());
    let _ = writeln!(out, "rules:      {}", stats.rules);
    let _ = writeln!(out, "atoms:      {}", stats.atoms);
    let _ = writeln!(out, "facts:      {}", stats.facts);
    let _ = writeln!(out, "propagations: {}", stats.propagations);
    for c in &stats.components {
        let _ = writeln!(
            out,
            "  component {},{}: {} iteration(s), reached {:?}, emitted {}",
            c.index.0, c.index.1, c.iterations, c.reached, c.emitted
        );
    }
    out
}
