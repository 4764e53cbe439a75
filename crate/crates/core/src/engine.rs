//! The component-wise grounding driver.

use std::collections::BTreeSet;

use indexmap::{IndexMap, IndexSet};

use crate::aggregates::{assemble_aggregates, propagate_aggregates, AggregateError};
use crate::analysis::{analyze_program, Component};
use crate::ast::{AggregateFunction, AggregateId, Literal, Rule, SymbolicAtom};
use crate::grounder::{ground_rule, prepare_component, GroundInstance, PreparedRule};
use crate::parser::Program;
use crate::rewrite::{rewrite_program, AggregateRegistry};
use crate::store::AtomStore;

pub const DEFAULT_ATOM_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundingOptions {
    /// Abort once the Herbrand base holds more atoms than this.
    pub atom_limit: usize,
}

impl Default for GroundingOptions {
    fn default() -> Self {
        GroundingOptions {
            atom_limit: DEFAULT_ATOM_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GroundError {
    #[error("atom limit of {limit} exceeded while grounding component {component:?}; the program may not terminate (raise it with --limit)")]
    LimitExceeded {
        limit: usize,
        component: (usize, usize),
    },
    #[error("{source} while propagating aggregate #aggr{id}")]
    Aggregate {
        id: AggregateId,
        source: AggregateError,
    },
    #[error("{function} aggregates are not supported (aggregate {id})")]
    Unsupported {
        function: AggregateFunction,
        id: AggregateId,
    },
}

/// Hooks invoked by [`ground_program`]; every method defaults to a no-op.
pub trait Observer {
    fn rewritten(&mut self, _program: &Program) {}
    fn component_start(&mut self, _component: &Component, _prepared: &[PreparedRule]) {}
    /// An instance reached in `iteration` (1-based), emitted or suppressed.
    fn instance(
        &mut self,
        _component: &Component,
        _iteration: usize,
        _prepared: &PreparedRule,
        _instance: &GroundInstance,
    ) {
    }
    /// Aggregate atoms a propagation call added to the Herbrand base.
    fn propagation(
        &mut self,
        _component: &Component,
        _iteration: usize,
        _recursive: bool,
        _added: &[SymbolicAtom],
    ) {
    }
    /// Atoms committed at the end of `iteration`.
    fn iteration_end(
        &mut self,
        _component: &Component,
        _iteration: usize,
        _added: &[SymbolicAtom],
    ) {
    }
    fn component_end(&mut self, _component: &Component, _iterations: usize) {}
}

/// An observer that ignores everything.
pub struct Silent;

impl Observer for Silent {}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComponentStats {
    pub index: (usize, usize),
    pub iterations: usize,
    /// Instances reached per iteration, including suppressed ones.
    pub reached: Vec<usize>,
    pub emitted: usize,
    pub propagations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub components: Vec<ComponentStats>,
    pub rules: usize,
    pub atoms: usize,
    pub facts: usize,
    pub propagations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundingResult {
    /// Input facts, then the ground rules in emission order.
    pub rules: Vec<Rule>,
    pub facts: IndexSet<SymbolicAtom>,
    /// The Herbrand base, including reserved aggregate atoms.
    pub atoms: IndexSet<SymbolicAtom>,
    pub stats: Stats,
}

impl GroundingResult {
    /// Whether an integrity constraint lost its whole body, so the program
    /// has no stable model.
    pub fn is_inconsistent(&self) -> bool {
        self.rules
            .iter()
            .any(|r| r.head.is_none() && r.body.is_empty())
    }
}

/// Body literals in a canonical order, for duplicate detection.
fn canonical(rule: &Rule) -> (Option<SymbolicAtom>, BTreeSet<String>) {
    let body = rule.body.iter().map(Literal::to_string).collect();
    (rule.head.clone(), body)
}

/// Aggregates that must be propagated in `component`, split into
/// non-recursive and recursive ones.
fn component_aggregates(
    component: &Component,
    registry: &AggregateRegistry,
) -> (Vec<AggregateId>, Vec<AggregateId>) {
    let mut all = Vec::new();
    let mut recursive = IndexSet::new();
    for rule in &component.rules {
        let Some(head) = &rule.head else { continue };
        if let Some(info) = registry.by_aggr(head.predicate) {
            all.push(info.id);
        }
        if let Some(info) = registry.by_accu(head.predicate) {
            let through_element = rule.body.iter().any(|l| {
                !l.marked
                    && l.positive_symbolic()
                        .is_some_and(|a| component.is_recursive(a))
            });
            if through_element {
                recursive.insert(info.id);
            }
        }
    }
    all.iter().copied().partition(|id| !recursive.contains(id))
}

/// Grounds `program` component by component with semi-naive evaluation.
pub fn ground_program(
    program: &Program,
    options: GroundingOptions,
    observer: &mut dyn Observer,
) -> Result<GroundingResult, GroundError> {
    let (rewritten, registry) = rewrite_program(program);
    if let Some(info) = registry
        .iter()
        .find(|i| matches!(i.function, AggregateFunction::Min | AggregateFunction::Max))
    {
        return Err(GroundError::Unsupported {
            function: info.function,
            id: info.id,
        });
    }
    observer.rewritten(&rewritten);

    let mut store = AtomStore::new();
    for fact in &program.facts {
        store.insert(fact.clone(), true);
    }
    let mut stats = Stats::default();
    let mut ground: Vec<Rule> = Vec::new();

    for component in analyze_program(&rewritten.rules) {
        let (stratified, recursive) = component_aggregates(&component, &registry);
        let prepared = prepare_component(&component);
        observer.component_start(&component, &prepared);
        let mut cstats = ComponentStats {
            index: component.index,
            ..ComponentStats::default()
        };
        store.mark_all_new();
        let mut iteration = 0;
        loop {
            iteration += 1;
            let mut reached = 0;
            for rule in &prepared {
                for instance in ground_rule(rule, &mut store) {
                    reached += 1;
                    observer.instance(&component, iteration, rule, &instance);
                    if instance.emitted {
                        cstats.emitted += 1;
                        ground.push(instance.rule);
                    }
                }
                if store.len() + store.staged().count() > options.atom_limit {
                    return Err(GroundError::LimitExceeded {
                        limit: options.atom_limit,
                        component: component.index,
                    });
                }
            }
            cstats.reached.push(reached);
            for (ids, is_recursive) in [(&stratified, false), (&recursive, true)] {
                if store.has_staged() || ids.is_empty() {
                    continue;
                }
                let propagation = propagate_aggregates(ids, is_recursive, &store, &registry)
                    .map_err(|source| GroundError::Aggregate { id: ids[0], source })?;
                cstats.propagations += 1;
                let facts: IndexSet<&SymbolicAtom> = propagation.facts.iter().collect();
                let added: Vec<SymbolicAtom> = propagation
                    .delta
                    .iter()
                    .filter(|a| store.stage((*a).clone(), facts.contains(a)))
                    .cloned()
                    .collect();
                observer.propagation(&component, iteration, is_recursive, &added);
            }
            let added: Vec<SymbolicAtom> = store.staged().cloned().collect();
            store.commit();
            if store.len() > options.atom_limit {
                return Err(GroundError::LimitExceeded {
                    limit: options.atom_limit,
                    component: component.index,
                });
            }
            observer.iteration_end(&component, iteration, &added);
            if added.is_empty() || !component.has_recursive_positive {
                break;
            }
        }
        cstats.iterations = iteration;
        stats.propagations += cstats.propagations;
        observer.component_end(&component, iteration);
        stats.components.push(cstats);
    }

    let mut seen = IndexSet::new();
    let rules: Vec<Rule> = program
        .facts
        .iter()
        .cloned()
        .map(Rule::fact)
        .chain(assemble_aggregates(ground, &registry))
        .filter(|r| seen.insert(canonical(r)))
        .collect();
    let mut atoms = IndexSet::new();
    let mut facts = IndexSet::new();
    for (atom, fact) in store.atoms() {
        if fact {
            facts.insert(atom.clone());
        }
        atoms.insert(atom);
    }
    stats.rules = rules.len();
    stats.atoms = atoms.len();
    stats.facts = facts.len();
    Ok(GroundingResult {
        rules,
        facts,
        atoms,
        stats,
    })
}

/// A reached instance with the iteration it was reached in.
pub type Reached = (usize, PreparedRule, GroundInstance);

/// Atoms added by one productive propagation, with its iteration.
pub type Propagated = (usize, Vec<SymbolicAtom>);

/// Reached instances keyed by component, for instrumentation.
#[derive(Debug, Default)]
pub struct Recorder {
    pub instances: IndexMap<(usize, usize), Vec<Reached>>,
    pub propagations: IndexMap<(usize, usize), Vec<Propagated>>,
}

impl Observer for Recorder {
    fn instance(
        &mut self,
        component: &Component,
        iteration: usize,
        prepared: &PreparedRule,
        instance: &GroundInstance,
    ) {
        self.instances.entry(component.index).or_default().push((
            iteration,
            prepared.clone(),
            instance.clone(),
        ));
    }

    fn propagation(
        &mut self,
        component: &Component,
        iteration: usize,
        _recursive: bool,
        added: &[SymbolicAtom],
    ) {
        if !added.is_empty() {
            self.propagations
                .entry(component.index)
                .or_default()
                .push((iteration, added.to_vec()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn run(src: &str) -> GroundingResult {
        ground_program(
            &parse_program(src).unwrap(),
            GroundingOptions::default(),
            &mut Silent,
        )
        .unwrap()
    }

    fn printed(result: &GroundingResult) -> Vec<String> {
        result.rules.iter().map(Rule::to_string).collect()
    }

    #[test]
    fn empty_program() {
        let result = run("");
        assert!(result.rules.is_empty() && result.atoms.is_empty());
    }

    #[test]
    fn violated_constraint_is_reported() {
        let result = run("p(a). :- p(a).");
        assert_eq!(printed(&result), vec!["p(a).", ":- ."]);
        assert!(result.is_inconsistent());
        assert!(!run("p(a). :- p(b).").is_inconsistent());
    }

    #[test]
    fn transitive_closure() {
        let result = run("e(a,b). e(b,c). t(X,Y) :- e(X,Y). t(X,Z) :- t(X,Y), e(Y,Z).");
        assert_eq!(
            printed(&result),
            vec!["e(a,b).", "e(b,c).", "t(a,b).", "t(b,c).", "t(a,c)."]
        );
    }

    #[test]
    fn negation_stays_in_bodies() {
        let result = run("d(a). d(b). p(X) :- d(X), not q(X). q(X) :- d(X), not p(X).");
        assert_eq!(
            printed(&result),
            vec![
                "d(a).",
                "d(b).",
                "p(a) :- not q(a).",
                "p(b) :- not q(b).",
                "q(a) :- not p(a).",
                "q(b) :- not p(b).",
            ]
        );
    }

    #[test]
    fn underivable_negative_literals_are_dropped() {
        let result = run("d(a). p(X) :- d(X), not q(X). q(X) :- r(X).");
        assert_eq!(printed(&result), vec!["d(a).", "p(a)."]);
    }

    #[test]
    fn stratified_count_becomes_a_fact() {
        let result = run("p(1). p(2). h :- #count { X : p(X) } >= 2.");
        assert_eq!(printed(&result), vec!["p(1).", "p(2).", "h."]);
    }

    #[test]
    fn unsatisfiable_aggregate_drops_the_rule() {
        let result = run("p(1). h :- #sum { X : p(X) } > 5.");
        assert_eq!(printed(&result), vec!["p(1)."]);
    }

    #[test]
    fn non_fact_elements_are_assembled() {
        let result = run("d(1). d(2). p(X) :- d(X), not q(X). q(X) :- d(X), not p(X). h :- #sum { X : p(X) } >= 2.");
        assert!(printed(&result).contains(&"h :- #sum { 1 : p(1); 2 : p(2) } >= 2.".to_string()));
    }

    #[test]
    fn neutral_derivation_handles_empty_sets() {
        let result = run("q. h :- #count { X : p(X) } <= 0, q.");
        assert_eq!(printed(&result), vec!["q.", "h."]);
    }

    #[test]
    fn negated_aggregates_keep_their_sign() {
        let result = run("d(1). d(2). p(X) :- d(X), not q(X). q(X) :- d(X), not p(X). h :- not #count { X : p(X) } >= 1.");
        assert!(
            printed(&result).contains(&"h :- not #count { 1 : p(1); 2 : p(2) } >= 1.".to_string())
        );
    }

    #[test]
    fn min_is_rejected() {
        let err = ground_program(
            &parse_program("p(1). h :- #min { X : p(X) } < 3.").unwrap(),
            GroundingOptions::default(),
            &mut Silent,
        )
        .unwrap_err();
        assert!(matches!(err, GroundError::Unsupported { .. }));
    }

    #[test]
    fn limit_stops_growing_terms() {
        let err = ground_program(
            &parse_program("p(a). p(f(X)) :- p(X).").unwrap(),
            GroundingOptions { atom_limit: 50 },
            &mut Silent,
        )
        .unwrap_err();
        assert!(matches!(err, GroundError::LimitExceeded { limit: 50, .. }));
    }

    #[test]
    fn non_recursive_components_run_once() {
        let result = run("e(a,b). f(X) :- e(X,Y). g(Y) :- f(Y), e(Y,Z).");
        assert!(result.stats.components.iter().all(|c| c.iterations == 1));
    }

    #[test]
    fn marked_recursion_does_not_make_an_aggregate_recursive() {
        let rules =
            parse_program("p. h(X) :- #sum { 1 : p } > 0, q(X). q(X) :- h(X). q(a).").unwrap();
        let (rewritten, registry) = rewrite_program(&rules);
        for component in analyze_program(&rewritten.rules) {
            let (_, recursive) = component_aggregates(&component, &registry);
            assert!(recursive.is_empty());
        }
    }

    #[test]
    fn company_aggregate_is_recursive_in_its_component() {
        let src = "controls(X,Y) :- #sum+ { S : owns(X,Y,S); S,Z : controls(X,Z), owns(Z,Y,S) } > 50, company(X), company(Y), X != Y.";
        let (rewritten, registry) = rewrite_program(&parse_program(src).unwrap());
        let components = analyze_program(&rewritten.rules);
        let found: Vec<_> = components
            .iter()
            .map(|c| component_aggregates(c, &registry))
            .collect();
        assert_eq!(found[2], (vec![], vec![AggregateId(1)]));
        assert!(found[1].0.is_empty() && found[1].1.is_empty());
    }

    #[test]
    fn heads_are_in_the_base_and_bodies_are_known() {
        let result =
            run("d(a). d(b). p(X) :- d(X), not q(X). q(X) :- d(X), not p(X). r(X) :- p(X), q(X).");
        for rule in &result.rules {
            if let Some(h) = &rule.head {
                assert!(result.atoms.contains(h));
            }
            for a in rule.body_pm() {
                assert!(result.atoms.contains(a), "{a}");
            }
        }
    }
}
