//! Component preparation and single-rule instantiation.

use indexmap::IndexSet;

use crate::analysis::Component;
use crate::ast::{Adornment, Atom, Literal, Rule, Substitution, Symbol, SymbolicAtom};
use crate::store::{AtomStore, View};

/// One adorned variant of a component rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedRule {
    /// The rule with adornments on its positive symbolic literals.
    pub rule: Rule,
    /// Position of the unadorned rule in the analysed program.
    pub origin: usize,
    /// Safe body order as indices into `rule.body`.
    pub order: Vec<usize>,
    /// Per body literal: whether its atom is recursive in the component.
    pub recursive: Vec<bool>,
}

/// Builds the adorned variants of every rule of `component`.
///
/// A rule with recursive positive literals `p1..pk` yields `k` variants; in
/// the `j`-th, `pj` reads the new view, `p1..p(j-1)` the old view and all
/// other positive literals the full view. Rules without recursive positive
/// literals yield a single variant reading the new view everywhere.
pub fn prepare_component(component: &Component) -> Vec<PreparedRule> {
    let mut prepared = Vec::new();
    for (rule, &origin) in component.rules.iter().zip(&component.rule_ids) {
        let recursive: Vec<bool> = rule
            .body
            .iter()
            .map(|l| l.symbolic().is_some_and(|a| component.is_recursive(a)))
            .collect();
        let positive: Vec<usize> = (0..rule.body.len())
            .filter(|&i| rule.body[i].positive_symbolic().is_some())
            .collect();
        let focus: Vec<usize> = positive.iter().copied().filter(|&i| recursive[i]).collect();
        let mut variants = Vec::new();
        if focus.is_empty() {
            variants.push(adorn(rule, &positive, |_| Adornment::New));
        } else {
            for (k, &f) in focus.iter().enumerate() {
                let done = &focus[..k];
                variants.push(adorn(rule, &positive, |i| {
                    if i == f {
                        Adornment::New
                    } else if done.contains(&i) {
                        Adornment::Old
                    } else {
                        Adornment::All
                    }
                }));
            }
        }
        for adorned in variants {
            let order = order_body(&adorned, &recursive);
            prepared.push(PreparedRule {
                rule: adorned,
                origin,
                order,
                recursive: recursive.clone(),
            });
        }
    }
    prepared
}

fn adorn(rule: &Rule, positive: &[usize], view: impl Fn(usize) -> Adornment) -> Rule {
    let mut adorned = rule.clone();
    for &i in positive {
        adorned.body[i].adorn = view(i);
    }
    adorned
}

fn literal_vars(lit: &Literal) -> Vec<Symbol> {
    let mut vars = Vec::new();
    lit.atom.collect_all_vars(&mut vars);
    vars
}

/// A safe body order for `rule`.
///
/// Comparisons and negative literals go as soon as their variables are
/// bound. Otherwise a recursive literal reading the new view goes first;
/// after that positive literals are picked greedily by fewest unbound
/// variables, ties broken by source position.
pub fn order_body(rule: &Rule, recursive: &[bool]) -> Vec<usize> {
    let mut bound: Vec<Symbol> = Vec::new();
    let mut remaining: Vec<usize> = (0..rule.body.len()).collect();
    let mut order = Vec::with_capacity(remaining.len());
    let unbound = |i: usize, bound: &[Symbol]| {
        literal_vars(&rule.body[i])
            .into_iter()
            .filter(|v| !bound.contains(v))
            .count()
    };
    while !remaining.is_empty() {
        let started = order
            .iter()
            .any(|&i: &usize| rule.body[i].positive_symbolic().is_some());
        let is_check = |i: usize| rule.body[i].positive_symbolic().is_none();
        let pick = remaining
            .iter()
            .position(|&i| is_check(i) && unbound(i, &bound) == 0)
            .or_else(|| {
                if started {
                    return None;
                }
                remaining.iter().position(|&i| {
                    rule.body[i].adorn == Adornment::New && recursive.get(i) == Some(&true)
                })
            })
            .or_else(|| {
                remaining
                    .iter()
                    .enumerate()
                    .filter(|&(_, &i)| !is_check(i))
                    .min_by_key(|&(_, &i)| unbound(i, &bound))
                    .map(|(k, _)| k)
            })
            // only reachable for unsafe rules; keep going so grounding still terminates
            .unwrap_or(0);
        let i = remaining.remove(pick);
        if let Some(a) = rule.body[i].positive_symbolic() {
            a.collect_vars(&mut bound);
        }
        order.push(i);
    }
    order
}

/// A rule instance reached during instantiation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundInstance {
    /// The simplified ground rule.
    pub rule: Rule,
    /// The substitution that produced it.
    pub binding: Substitution,
    /// False when the instance was suppressed because its head is already
    /// a fact.
    pub emitted: bool,
}

enum Step {
    /// Continue with `order[at]` under `sigma`.
    Next {
        at: usize,
        body: Vec<Literal>,
        sigma: Substitution,
    },
    /// A positive literal `order[at - 1]` matched; decide whether its
    /// instance joins the body, then continue.
    Matched {
        at: usize,
        body: Vec<Literal>,
        sigma: Substitution,
    },
}

/// Instantiates `prepared` against the store.
///
/// Positive literals are matched in their adorned view; instances of
/// unmarked literals join the body unless they are facts. A negative
/// literal prunes the branch when its atom is a fact; otherwise it joins the
/// body if unmarked and its atom is recursive or already derived.
/// Comparisons are evaluated. A complete instance is emitted unless its
/// head is a fact; heads are staged in the store, as facts when the body
/// is empty.
pub fn ground_rule(prepared: &PreparedRule, store: &mut AtomStore) -> Vec<GroundInstance> {
    let rule = &prepared.rule;
    let order = &prepared.order;
    let mut out = Vec::new();
    let mut stack = vec![Step::Next {
        at: 0,
        body: Vec::new(),
        sigma: Substitution::new(),
    }];
    while let Some(step) = stack.pop() {
        let (at, body, sigma) = match step {
            Step::Next { at, body, sigma } => (at, body, sigma),
            Step::Matched {
                at,
                mut body,
                sigma,
            } => {
                let lit = &rule.body[order[at - 1]];
                let atom = lit.symbolic().expect("matched literal is symbolic");
                let instance = atom.apply(&sigma);
                if !lit.marked && !store.is_fact(&instance) {
                    body.push(Literal::positive(Atom::Symbolic(instance)));
                }
                (at, body, sigma)
            }
        };
        if at == order.len() {
            let head = rule.head.as_ref().map(|h| h.apply(&sigma));
            let emitted = head.as_ref().is_none_or(|h| !store.is_fact(h));
            if emitted {
                if let Some(h) = &head {
                    store.stage(h.clone(), body.is_empty());
                }
            }
            out.push(GroundInstance {
                rule: Rule { head, body },
                binding: sigma,
                emitted,
            });
            continue;
        }
        let index = order[at];
        let lit = &rule.body[index];
        match &lit.atom {
            Atom::Symbolic(atom) if !lit.negated => {
                let view = match lit.adorn {
                    Adornment::New => View::New,
                    Adornment::Old => View::Old,
                    Adornment::All | Adornment::None => View::All,
                };
                let found = store.matches(atom, &sigma, view);
                for sigma in found.into_iter().rev() {
                    stack.push(Step::Matched {
                        at: at + 1,
                        body: body.clone(),
                        sigma,
                    });
                }
            }
            Atom::Symbolic(atom) => {
                let instance = atom.apply(&sigma);
                if store.is_fact(&instance) {
                    continue;
                }
                let mut body = body;
                if !lit.marked && (prepared.recursive[index] || store.contains(&instance)) {
                    body.push(Literal::negative(Atom::Symbolic(instance)));
                }
                stack.push(Step::Next {
                    at: at + 1,
                    body,
                    sigma,
                });
            }
            Atom::Comparison(c) => {
                let ground = Atom::Comparison(c.clone()).apply(&sigma);
                let Atom::Comparison(ground) = ground else {
                    unreachable!()
                };
                if ground.holds() {
                    stack.push(Step::Next {
                        at: at + 1,
                        body,
                        sigma,
                    });
                }
            }
            Atom::Aggregate(_) => panic!("aggregates must be rewritten before grounding"),
        }
    }
    out
}

/// Heads of emitted instances, deduplicated in emission order.
pub fn heads(instances: &[GroundInstance]) -> IndexSet<SymbolicAtom> {
    instances
        .iter()
        .filter(|i| i.emitted)
        .filter_map(|i| i.rule.head.clone())
        .collect()
}
