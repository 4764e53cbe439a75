//! Aggregate evaluation, propagation of partially grounded aggregates, and
//! reassembly of ground aggregate atoms.

use std::collections::BTreeSet;

use indexmap::{IndexMap, IndexSet};

use crate::ast::{
    compare_ground, weight, AggregateAtom, AggregateElement, AggregateFunction, AggregateId, Atom,
    Literal, Relation, Rule, Signature, Term,
};
use crate::rewrite::{neutral_constant, tuple_symbol, AggregateInfo, AggregateRegistry};
use crate::store::{AtomStore, View};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AggregateError {
    #[error("integer overflow evaluating {function} aggregate")]
    Overflow { function: AggregateFunction },
    #[error("{function} aggregates are not supported yet (aggregate {id})")]
    Unsupported {
        function: AggregateFunction,
        id: AggregateId,
    },
}

/// Value of `function` on a finite set of ground tuples.
pub fn eval_aggregate<'a>(
    function: AggregateFunction,
    tuples: impl IntoIterator<Item = &'a [Term]>,
) -> Result<Term, AggregateError> {
    let overflow = AggregateError::Overflow { function };
    let mut total: i64 = 0;
    for t in tuples {
        let add = match function {
            AggregateFunction::Sum => weight(t),
            AggregateFunction::SumPlus => weight(t).max(0),
            AggregateFunction::Count => 1,
            AggregateFunction::Min | AggregateFunction::Max => {
                return Err(AggregateError::Unsupported {
                    function,
                    id: AggregateId(0),
                })
            }
        };
        total = total.checked_add(add).ok_or(overflow.clone())?;
    }
    Ok(Term::Numeral(total))
}

/// Whether growing the tuple set can never falsify `function rel guard`.
pub fn is_monotone(function: AggregateFunction, relation: Relation) -> bool {
    matches!(
        (function, relation),
        (
            AggregateFunction::SumPlus | AggregateFunction::Count,
            Relation::Ge | Relation::Gt
        )
    )
}

/// Whether a tuple can change the value of `function`.
pub fn is_relevant(function: AggregateFunction, tuple: &[Term]) -> bool {
    match function {
        AggregateFunction::Sum => weight(tuple) != 0,
        AggregateFunction::SumPlus => weight(tuple) > 0,
        _ => true,
    }
}

/// Tuples accumulated for one ground aggregate instance: `facts` must be
/// in the aggregated set, `possible` may be.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccumulationState {
    pub function: AggregateFunction,
    pub facts: BTreeSet<Vec<Term>>,
    pub possible: BTreeSet<Vec<Term>>,
    pub neutral: bool,
}

impl AccumulationState {
    pub fn new(function: AggregateFunction) -> Self {
        AccumulationState {
            function,
            facts: BTreeSet::new(),
            possible: BTreeSet::new(),
            neutral: false,
        }
    }

    /// Records a tuple; irrelevant tuples are dropped.
    pub fn add(&mut self, tuple: Vec<Term>, fact: bool) {
        if !is_relevant(self.function, &tuple) {
            return;
        }
        if fact {
            self.facts.insert(tuple.clone());
        }
        self.possible.insert(tuple);
    }

    /// Smallest and largest value over all sets between `facts` and
    /// `possible`.
    pub fn bounds(&self) -> Result<(i64, i64), AggregateError> {
        let overflow = AggregateError::Overflow {
            function: self.function,
        };
        let sum = |it: &mut dyn Iterator<Item = i64>| -> Result<i64, AggregateError> {
            checked_sum(it).ok_or(overflow.clone())
        };
        match self.function {
            AggregateFunction::Count => Ok((
                i64::try_from(self.facts.len()).map_err(|_| overflow.clone())?,
                i64::try_from(self.possible.len()).map_err(|_| overflow.clone())?,
            )),
            AggregateFunction::Sum | AggregateFunction::SumPlus => {
                let clamp = |w: i64| {
                    if self.function == AggregateFunction::SumPlus {
                        w.max(0)
                    } else {
                        w
                    }
                };
                let base = sum(&mut self.facts.iter().map(|t| clamp(weight(t))))?;
                let optional = || {
                    self.possible
                        .iter()
                        .filter(|t| !self.facts.contains(*t))
                        .map(|t| clamp(weight(t)))
                };
                let low = sum(&mut optional().filter(|w| *w < 0))?;
                let high = sum(&mut optional().filter(|w| *w > 0))?;
                Ok((
                    base.checked_add(low).ok_or(overflow.clone())?,
                    base.checked_add(high).ok_or(overflow)?,
                ))
            }
            function @ (AggregateFunction::Min | AggregateFunction::Max) => {
                Err(AggregateError::Unsupported {
                    function,
                    id: AggregateId(0),
                })
            }
        }
    }

    pub fn fact_value(&self) -> Result<Term, AggregateError> {
        eval_aggregate(self.function, self.facts.iter().map(Vec::as_slice))
    }
}

fn checked_sum(it: &mut dyn Iterator<Item = i64>) -> Option<i64> {
    let mut total: i64 = 0;
    for w in it {
        total = total.checked_add(w)?;
    }
    Some(total)
}

fn holds(lhs: i64, relation: Relation, guard: &Term) -> bool {
    relation.holds(compare_ground(&Term::Numeral(lhs), guard))
}

/// Whether some tuple set between the state's facts and possible tuples
/// satisfies `relation guard`, decided from the value bounds.
pub fn satisfiable_between(
    state: &AccumulationState,
    relation: Relation,
    guard: &Term,
) -> Result<bool, AggregateError> {
    let (min, max) = state.bounds()?;
    Ok(match relation {
        Relation::Ge | Relation::Gt => holds(max, relation, guard),
        Relation::Le | Relation::Lt => holds(min, relation, guard),
        Relation::Ne => holds(min, relation, guard) || holds(max, relation, guard),
    })
}

/// Aggregate atoms found satisfiable, and those among them known true.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Propagation {
    pub delta: Vec<crate::ast::SymbolicAtom>,
    pub facts: Vec<crate::ast::SymbolicAtom>,
}

/// Groups the accumulated `#accu` atoms of one aggregate by their global
/// values, in first-derivation order.
pub fn accumulate(
    info: &AggregateInfo,
    store: &AtomStore,
) -> IndexMap<Vec<Term>, AccumulationState> {
    let n = info.globals.len();
    let sig = Signature {
        name: info.accu,
        arity: n + 1,
    };
    let mut groups: IndexMap<Vec<Term>, AccumulationState> = IndexMap::new();
    for (atom, fact) in store.atoms_of(sig, View::All) {
        let state = groups
            .entry(atom.args[..n].to_vec())
            .or_insert_with(|| AccumulationState::new(info.function));
        match &atom.args[n] {
            Term::Function(name, tuple) if *name == tuple_symbol() => {
                state.add(tuple.clone(), fact)
            }
            t if *t == neutral_constant() => state.neutral = true,
            other => panic!("malformed accumulator argument {other}"),
        }
    }
    groups
}

/// Decides which `#aggr` atoms of the aggregates `ids` become derivable.
///
/// An atom is added when its aggregate is satisfiable by the accumulated
/// tuples. It is also a fact when the aggregate is monotone and already
/// satisfied by the fact tuples, or when it is non-recursive and every
/// relevant tuple is a fact.
pub fn propagate_aggregates(
    ids: &[AggregateId],
    recursive: bool,
    store: &AtomStore,
    registry: &AggregateRegistry,
) -> Result<Propagation, AggregateError> {
    let mut out = Propagation::default();
    for &id in ids {
        let info = registry.get(id).expect("registered aggregate");
        if matches!(
            info.function,
            AggregateFunction::Min | AggregateFunction::Max
        ) {
            return Err(AggregateError::Unsupported {
                function: info.function,
                id,
            });
        }
        for (values, state) in accumulate(info, store) {
            let guard = info.ground_guard(&values);
            if !satisfiable_between(&state, info.relation, &guard)? {
                continue;
            }
            let Term::Numeral(fact_value) = state.fact_value()? else {
                unreachable!("sum-family values are numerals")
            };
            let monotone_true = is_monotone(info.function, info.relation)
                && holds(fact_value, info.relation, &guard);
            let complete = !recursive && state.possible.len() == state.facts.len();
            let atom = info.aggr_atom(values);
            if monotone_true || complete {
                out.facts.push(atom.clone());
            }
            out.delta.push(atom);
        }
    }
    Ok(out)
}

/// Replaces every `#aggr` literal by its ground aggregate and drops the
/// `#accu`-headed rules. Elements keep first-derivation order.
pub fn assemble_aggregates(rules: Vec<Rule>, registry: &AggregateRegistry) -> Vec<Rule> {
    if registry.is_empty() {
        return rules;
    }
    let mut elements: IndexMap<(AggregateId, Vec<Term>), IndexSet<AggregateElement>> =
        IndexMap::new();
    for rule in &rules {
        let Some(head) = &rule.head else { continue };
        let Some(info) = registry.by_accu(head.predicate) else {
            continue;
        };
        let n = info.globals.len();
        if let Term::Function(name, tuple) = &head.args[n] {
            if *name == tuple_symbol() {
                elements
                    .entry((info.id, head.args[..n].to_vec()))
                    .or_default()
                    .insert(AggregateElement {
                        tuple: tuple.clone(),
                        condition: rule.body.clone(),
                    });
            }
        }
    }
    rules
        .into_iter()
        .filter(|r| {
            r.head
                .as_ref()
                .is_none_or(|h| registry.by_accu(h.predicate).is_none())
        })
        .map(|rule| {
            let body = rule
                .body
                .into_iter()
                .map(|lit| {
                    let Some(atom) = lit.symbolic() else {
                        return lit;
                    };
                    let Some(info) = registry.by_aggr(atom.predicate) else {
                        return lit;
                    };
                    let key = (info.id, atom.args.clone());
                    let assembled = AggregateAtom {
                        id: info.id,
                        function: info.function,
                        elements: elements
                            .get(&key)
                            .map(|es| es.iter().cloned().collect())
                            .unwrap_or_default(),
                        relation: info.relation,
                        guard: info.ground_guard(&atom.args),
                    };
                    Literal {
                        atom: Atom::Aggregate(assembled),
                        ..lit
                    }
                })
                .collect();
            Rule {
                head: rule.head,
                body,
            }
        })
        .collect()
}
