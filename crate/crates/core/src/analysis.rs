//! Rule dependency graphs, component ordering and recursive atoms.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use indexmap::IndexSet;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::ast::{unify, Rule, Signature, Symbol, SymbolicAtom};

/// A strongly connected group of rules, refined by positive dependencies,
/// together with the body atoms that are recursive in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// 1-based (outer, inner) position, as in "Component 7,1".
    pub index: (usize, usize),
    pub rules: Vec<Rule>,
    /// Positions of `rules` in the analysed program.
    pub rule_ids: Vec<usize>,
    pub recursive_atoms: IndexSet<SymbolicAtom>,
    pub has_recursive_positive: bool,
}

impl Component {
    pub fn is_recursive(&self, atom: &SymbolicAtom) -> bool {
        self.recursive_atoms.contains(atom)
    }
}

fn rename_apart(atom: &SymbolicAtom) -> SymbolicAtom {
    atom.rename(&mut |v| Symbol::intern(&format!("{v}'")))
}

fn heads_by_signature(rules: &[Rule]) -> HashMap<Signature, Vec<usize>> {
    let mut heads: HashMap<Signature, Vec<usize>> = HashMap::new();
    for (i, rule) in rules.iter().enumerate() {
        if let Some(h) = &rule.head {
            heads.entry(h.signature()).or_default().push(i);
        }
    }
    heads
}

/// Edges `(r1, r2)` such that the head of `r1` unifies with a symbolic body
/// literal of `r2` (positive ones only when `positive_only`).
pub fn dependency_edges(rules: &[Rule], positive_only: bool) -> Vec<(usize, usize)> {
    let heads = heads_by_signature(rules);
    let renamed: Vec<Option<SymbolicAtom>> = rules
        .iter()
        .map(|r| r.head.as_ref().map(rename_apart))
        .collect();
    let mut edges = IndexSet::new();
    for (r2, rule) in rules.iter().enumerate() {
        let body: Vec<&SymbolicAtom> = if positive_only {
            rule.body_pos().collect()
        } else {
            rule.body_pm().collect()
        };
        for atom in body {
            for &r1 in heads.get(&atom.signature()).into_iter().flatten() {
                let head = renamed[r1].as_ref().expect("indexed rules have heads");
                if unify(head, atom).is_some() {
                    edges.insert((r1, r2));
                }
            }
        }
    }
    edges.into_iter().collect()
}

/// Strongly connected components of `nodes` under `edges`, in a topological
/// order of the condensation. Among available components the one holding
/// the smallest node is emitted first.
fn ordered_sccs(nodes: &[usize], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut graph: DiGraph<usize, ()> = DiGraph::new();
    let mut index_of = HashMap::new();
    for &n in nodes {
        index_of.insert(n, graph.add_node(n));
    }
    for (a, b) in edges {
        if let (Some(&x), Some(&y)) = (index_of.get(a), index_of.get(b)) {
            graph.add_edge(x, y, ());
        }
    }
    let mut sccs: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut members: Vec<usize> = c.into_iter().map(|ix: NodeIndex| graph[ix]).collect();
            members.sort_unstable();
            members
        })
        .collect();
    sccs.sort_by_key(|c| c[0]);
    let mut scc_of = HashMap::new();
    for (i, c) in sccs.iter().enumerate() {
        for &n in c {
            scc_of.insert(n, i);
        }
    }
    let mut succ: Vec<IndexSet<usize>> = vec![IndexSet::new(); sccs.len()];
    let mut indegree = vec![0usize; sccs.len()];
    for (a, b) in edges {
        if let (Some(&x), Some(&y)) = (scc_of.get(a), scc_of.get(b)) {
            if x != y && succ[x].insert(y) {
                indegree[y] += 1;
            }
        }
    }
    // sccs are sorted by smallest member, so the scc index is the priority
    let mut ready: BinaryHeap<Reverse<usize>> = (0..sccs.len())
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(sccs.len());
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &j in &succ[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(Reverse(j));
            }
        }
    }
    order.into_iter().map(|i| sccs[i].clone()).collect()
}

/// Splits a normal program into components in grounding order.
///
/// Recursive atoms are computed against the rules of the current component
/// and all components not yet emitted, so atoms defined only by earlier
/// components are never recursive.
pub fn analyze_program(rules: &[Rule]) -> Vec<Component> {
    let all: Vec<usize> = (0..rules.len()).collect();
    let edges = dependency_edges(rules, false);
    let positive = dependency_edges(rules, true);
    let heads = heads_by_signature(rules);
    let renamed: Vec<Option<SymbolicAtom>> = rules
        .iter()
        .map(|r| r.head.as_ref().map(rename_apart))
        .collect();
    let mut remaining = vec![true; rules.len()];
    let mut components = Vec::new();
    for (outer, scc) in ordered_sccs(&all, &edges).into_iter().enumerate() {
        for (inner, members) in ordered_sccs(&scc, &positive).into_iter().enumerate() {
            let mut recursive_atoms = IndexSet::new();
            for &r2 in &members {
                for atom in rules[r2].body_pm() {
                    let recursive = heads
                        .get(&atom.signature())
                        .into_iter()
                        .flatten()
                        .filter(|&&r1| remaining[r1])
                        .any(|&r1| unify(renamed[r1].as_ref().expect("has head"), atom).is_some());
                    if recursive {
                        recursive_atoms.insert(atom.clone());
                    }
                }
            }
            let has_recursive_positive = members
                .iter()
                .any(|&r| rules[r].body_pos().any(|a| recursive_atoms.contains(a)));
            for &r in &members {
                remaining[r] = false;
            }
            components.push(Component {
                index: (outer + 1, inner + 1),
                rules: members.iter().map(|&r| rules[r].clone()).collect(),
                rule_ids: members,
                recursive_atoms,
                has_recursive_positive,
            });
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use proptest::prelude::*;

    pub(crate) const HAM: &str = "
        omit(X,Y) :- edge(X,Y), not path(X,Y).
        path(X,Y) :- edge(X,Y), not omit(X,Y).
        :- path(X,Y), path(X',Y), X < X'.
        :- path(X,Y), path(X,Y'), Y < Y'.
        on_path(Y) :- path(X,Y), path(Y,Z).
        :- node(X), not on_path(X).
        reach(X) :- start(X).
        reach(Y) :- reach(X), path(X,Y).
        :- node(X), not reach(X).
    ";

    fn ham() -> Vec<Rule> {
        // primes are not valid in source variables
        parse_program(&HAM.replace("X'", "Xb").replace("Y'", "Yb"))
            .unwrap()
            .rules
    }

    fn atom(src: &str) -> SymbolicAtom {
        parse_program(&format!("h :- {src}.")).unwrap().rules[0].body[0]
            .symbolic()
            .unwrap()
            .clone()
    }

    #[test]
    fn hamiltonian_components_follow_dependency_order() {
        let components = analyze_program(&ham());
        let layout: Vec<((usize, usize), Vec<usize>)> = components
            .iter()
            .map(|c| (c.index, c.rule_ids.clone()))
            .collect();
        assert_eq!(
            layout,
            vec![
                ((1, 1), vec![0]),
                ((1, 2), vec![1]),
                ((2, 1), vec![2]),
                ((3, 1), vec![3]),
                ((4, 1), vec![4]),
                ((5, 1), vec![5]),
                ((6, 1), vec![6]),
                ((7, 1), vec![7]),
                ((8, 1), vec![8]),
            ]
        );
        let recursive: Vec<Vec<SymbolicAtom>> = components
            .iter()
            .map(|c| c.recursive_atoms.iter().cloned().collect())
            .collect();
        assert_eq!(recursive[0], vec![atom("path(X,Y)")]);
        assert_eq!(recursive[7], vec![atom("reach(X)")]);
        for (i, r) in recursive.iter().enumerate() {
            if i != 0 && i != 7 {
                assert!(r.is_empty(), "component {i} has {r:?}");
            }
        }
        assert!(components[7].has_recursive_positive);
        assert!(!components[0].has_recursive_positive);
    }

    #[test]
    fn dependency_edge_examples() {
        let rules = ham();
        let edges = dependency_edges(&rules, false);
        assert!(edges.contains(&(0, 1)) && edges.contains(&(1, 0)));
        assert!(edges.contains(&(7, 7)));
        let positive = dependency_edges(&rules, true);
        assert!(!positive.contains(&(0, 1)) && !positive.contains(&(1, 0)));
        assert!(positive.contains(&(7, 7)));
        assert!(dependency_edges(&parse_program("p. q.").unwrap().rules, false).is_empty());
    }

    #[test]
    fn independent_rules_form_singletons() {
        let rules = parse_program("a :- b. c :- d.").unwrap().rules;
        let components = analyze_program(&rules);
        assert_eq!(components.len(), 2);
        assert!(components.iter().all(|c| c.recursive_atoms.is_empty()));
    }

    #[test]
    fn unification_not_just_signature() {
        let rules = parse_program("p(a) :- q. r :- p(b), s.").unwrap().rules;
        assert!(dependency_edges(&rules, false).is_empty());
    }

    fn random_rules() -> impl Strategy<Value = Vec<Rule>> {
        let atom = (
            prop::sample::select(vec!["p", "q", "r", "s"]),
            prop::sample::select(vec!["X", "a", "b"]),
        )
            .prop_map(|(p, t)| format!("{p}({t})"));
        let rule = (
            atom.clone(),
            prop::collection::vec((atom, any::<bool>()), 1..3),
        )
            .prop_map(|(h, body)| {
                let mut lits = vec!["dom(X)".to_string()];
                lits.extend(
                    body.into_iter()
                        .map(|(a, neg)| if neg { format!("not {a}") } else { a }),
                );
                format!("{h} :- {}.", lits.join(", "))
            });
        prop::collection::vec(rule, 1..7)
            .prop_map(|rules| parse_program(&rules.join("\n")).unwrap().rules)
    }

    proptest! {
        #[test]
        fn order_is_topological(rules in random_rules()) {
            let components = analyze_program(&rules);
            let mut position = vec![(0, 0); rules.len()];
            for c in &components {
                for &r in &c.rule_ids {
                    position[r] = c.index;
                }
            }
            for (a, b) in dependency_edges(&rules, false) {
                prop_assert!(position[a].0 <= position[b].0);
            }
            for (a, b) in dependency_edges(&rules, true) {
                prop_assert!(position[a] <= position[b]);
            }
        }

        #[test]
        fn every_rule_in_exactly_one_component(rules in random_rules()) {
            let mut seen: Vec<usize> = analyze_program(&rules)
                .iter()
                .flat_map(|c| c.rule_ids.clone())
                .collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..rules.len()).collect::<Vec<_>>());
        }

        #[test]
        fn recursive_atoms_match_later_heads(rules in random_rules()) {
            let components = analyze_program(&rules);
            for (k, c) in components.iter().enumerate() {
                let later: Vec<&Rule> = components[k..].iter().flat_map(|d| &d.rules).collect();
                for rule in &c.rules {
                    for a in rule.body_pm() {
                        let expected = later.iter().filter_map(|r| r.head.as_ref())
                            .any(|h| unify(&rename_apart(h), a).is_some());
                        prop_assert_eq!(c.is_recursive(a), expected, "{}", a);
                    }
                }
            }
        }
    }
}
