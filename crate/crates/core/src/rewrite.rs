//! Decomposition of aggregate atoms into normal rules over reserved
//! `#aggr<i>` / `#accu<i>` predicates.
//!
//! For `controls(X,Y) :- #sum+ { S : owns(X,Y,S); S,Z : controls(X,Z), owns(Z,Y,S) } > 50, B.`
//! the rewrite produces
//!
//! ```text
//! controls(X,Y) :- #aggr1(X,Y), B.
//! #accu1(X,Y,#neutral) :- 0 > 50, B†.
//! #accu1(X,Y,#tuple(S)) :- owns(X,Y,S), B†.
//! #accu1(X,Y,#tuple(S,Z)) :- controls(X,Z), owns(Z,Y,S), B†.
//! #aggr1(X,Y) :- #accu1(X,Y,_), 0 > 0.
//! ```

use indexmap::IndexMap;

use crate::ast::{
    AggregateElement, AggregateFunction, AggregateId, Atom, Comparison, Literal, Relation, Rule,
    Substitution, Symbol, SymbolicAtom, Term,
};
use crate::parser::Program;

/// Everything needed to propagate and reassemble one aggregate occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregateInfo {
    pub id: AggregateId,
    pub function: AggregateFunction,
    pub relation: Relation,
    pub guard: Term,
    /// Global variables of the occurrence, in first-occurrence order.
    pub globals: Vec<Symbol>,
    /// Whether the occurrence was negated in its host rule.
    pub negated: bool,
    pub elements: Vec<AggregateElement>,
    pub aggr: Symbol,
    pub accu: Symbol,
}

impl AggregateInfo {
    /// The guard with the global variables bound to `values`.
    pub fn ground_guard(&self, values: &[Term]) -> Term {
        self.guard.apply(&self.binding(values))
    }

    pub fn binding(&self, values: &[Term]) -> Substitution {
        self.globals
            .iter()
            .copied()
            .zip(values.iter().cloned())
            .collect()
    }

    pub fn aggr_atom(&self, values: Vec<Term>) -> SymbolicAtom {
        SymbolicAtom {
            predicate: self.aggr,
            args: values,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AggregateRegistry {
    entries: IndexMap<AggregateId, AggregateInfo>,
}

impl AggregateRegistry {
    pub fn get(&self, id: AggregateId) -> Option<&AggregateInfo> {
        self.entries.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AggregateInfo> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The aggregate whose `#aggr` predicate is `pred`.
    pub fn by_aggr(&self, pred: Symbol) -> Option<&AggregateInfo> {
        self.entries.values().find(|e| e.aggr == pred)
    }

    /// The aggregate whose `#accu` predicate is `pred`.
    pub fn by_accu(&self, pred: Symbol) -> Option<&AggregateInfo> {
        self.entries.values().find(|e| e.accu == pred)
    }
}

pub fn neutral_constant() -> Term {
    Term::Constant(Symbol::intern("#neutral"))
}

pub fn tuple_symbol() -> Symbol {
    Symbol::intern("#tuple")
}

/// Value of the aggregate function on the empty set.
pub fn empty_value(function: AggregateFunction) -> i64 {
    match function {
        AggregateFunction::Sum | AggregateFunction::SumPlus | AggregateFunction::Count => 0,
        // reserved; only reached if a caller bypasses the engine's rejection
        AggregateFunction::Min | AggregateFunction::Max => 0,
    }
}

fn same_literal(a: &Literal, b: &Literal) -> bool {
    a.atom == b.atom && a.negated == b.negated
}

/// Replaces every aggregate occurrence by `⋄#aggr<i>(x)` and appends, per
/// occurrence, a neutral rule, one accumulation rule per element, and a
/// dependency rule that never fires.
pub fn rewrite_program(program: &Program) -> (Program, AggregateRegistry) {
    let mut registry = AggregateRegistry::default();
    let mut rules = Vec::with_capacity(program.rules.len());
    let mut extra = Vec::new();
    for rule in &program.rules {
        let host_globals = rule.global_vars();
        let simple: Vec<&Literal> = rule.body.iter().filter(|l| l.is_simple()).collect();
        let padding = |condition: &[Literal]| -> Vec<Literal> {
            simple
                .iter()
                .filter(|l| !condition.iter().any(|c| same_literal(c, l)))
                .map(|l| Literal {
                    marked: true,
                    ..(*l).clone()
                })
                .collect()
        };
        let mut body = Vec::with_capacity(rule.body.len());
        for lit in &rule.body {
            let Atom::Aggregate(agg) = &lit.atom else {
                body.push(lit.clone());
                continue;
            };
            let mut vars = Vec::new();
            lit.atom.collect_all_vars(&mut vars);
            let globals: Vec<Symbol> = vars
                .into_iter()
                .filter(|v| host_globals.contains(v))
                .collect();
            let x: Vec<Term> = globals.iter().map(|&v| Term::Variable(v)).collect();
            let info = AggregateInfo {
                id: agg.id,
                function: agg.function,
                relation: agg.relation,
                guard: agg.guard.clone(),
                globals,
                negated: lit.negated,
                elements: agg.elements.clone(),
                aggr: Symbol::intern(&format!("#aggr{}", agg.id)),
                accu: Symbol::intern(&format!("#accu{}", agg.id)),
            };
            let accu = |last: Term| {
                let mut args = x.clone();
                args.push(last);
                SymbolicAtom {
                    predicate: info.accu,
                    args,
                }
            };

            let mut neutral_body = vec![Literal::positive(Atom::Comparison(Comparison {
                lhs: Term::Numeral(empty_value(agg.function)),
                relation: agg.relation,
                rhs: agg.guard.clone(),
            }))];
            neutral_body.extend(padding(&[]));
            extra.push(Rule {
                head: Some(accu(neutral_constant())),
                body: neutral_body,
            });

            for element in &agg.elements {
                let mut element_body = element.condition.clone();
                element_body.extend(padding(&element.condition));
                extra.push(Rule {
                    head: Some(accu(Term::Function(tuple_symbol(), element.tuple.clone()))),
                    body: element_body,
                });
            }

            let any = Term::Variable(Symbol::intern(&format!("_aggr{}", agg.id)));
            extra.push(Rule {
                head: Some(info.aggr_atom(x.clone())),
                body: vec![
                    Literal::positive(Atom::Symbolic(accu(any))),
                    Literal::positive(Atom::Comparison(Comparison::falsity())),
                ],
            });

            body.push(Literal {
                atom: Atom::Symbolic(info.aggr_atom(x.clone())),
                negated: lit.negated,
                marked: false,
                adorn: lit.adorn,
            });
            registry.entries.insert(agg.id, info);
        }
        rules.push(Rule {
            head: rule.head.clone(),
            body,
        });
    }
    rules.extend(extra);
    (
        Program {
            rules,
            facts: program.facts.clone(),
        },
        registry,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{check_safety, parse_program};
    use proptest::prelude::*;

    const COMPANY: &str = "controls(X,Y) :- #sum+ { S : owns(X,Y,S); S,Z : controls(X,Z), owns(Z,Y,S) } > 50, company(X), company(Y), X != Y.";

    fn annotated(rule: &Rule) -> String {
        let body: Vec<String> = rule
            .body
            .iter()
            .map(|l| l.annotated().to_string())
            .collect();
        match &rule.head {
            Some(h) => format!("{h} :- {}.", body.join(", ")),
            None => format!(":- {}.", body.join(", ")),
        }
    }

    #[test]
    fn company_rewrite_has_five_rules() {
        let (rewritten, registry) = rewrite_program(&parse_program(COMPANY).unwrap());
        let printed: Vec<String> = rewritten.rules.iter().map(annotated).collect();
        assert_eq!(
            printed,
            vec![
                "controls(X,Y) :- #aggr1(X,Y), company(X), company(Y), X != Y.",
                "#accu1(X,Y,#neutral) :- 0 > 50, †company(X), †company(Y), †X != Y.",
                "#accu1(X,Y,#tuple(S)) :- owns(X,Y,S), †company(X), †company(Y), †X != Y.",
                "#accu1(X,Y,#tuple(S,Z)) :- controls(X,Z), owns(Z,Y,S), †company(X), †company(Y), †X != Y.",
                "#aggr1(X,Y) :- #accu1(X,Y,_), 0 > 0.",
            ]
        );
        let info = registry.get(AggregateId(1)).unwrap();
        assert_eq!(info.globals, vec![Symbol::intern("X"), Symbol::intern("Y")]);
        assert!(!info.negated);
    }

    #[test]
    fn aggregate_free_program_is_unchanged() {
        let program = parse_program("p(X) :- q(X), not r(X). q(a).").unwrap();
        let (rewritten, registry) = rewrite_program(&program);
        assert_eq!(rewritten, program);
        assert!(registry.is_empty());
    }

    #[test]
    fn neutral_rule_keeps_true_comparison() {
        let (rewritten, _) =
            rewrite_program(&parse_program("h :- #sum{ 1 : p } <= 0, q.").unwrap());
        assert_eq!(
            annotated(&rewritten.rules[1]),
            "#accu1(#neutral) :- 0 <= 0, †q."
        );
        let Atom::Comparison(c) = &rewritten.rules[1].body[0].atom else {
            panic!("comparison expected");
        };
        assert!(c.holds());
    }

    #[test]
    fn negated_aggregate_keeps_sign() {
        let (rewritten, registry) =
            rewrite_program(&parse_program("h(X) :- q(X), not #count{ Y : p(X,Y) } > 1.").unwrap());
        assert_eq!(
            rewritten.rules[0].to_string(),
            "h(X) :- q(X), not #aggr1(X)."
        );
        assert!(registry.get(AggregateId(1)).unwrap().negated);
    }

    #[test]
    fn condition_literals_are_not_padded_twice() {
        let (rewritten, _) =
            rewrite_program(&parse_program("h(X) :- #sum{ 1 : q(X) } > 0, q(X).").unwrap());
        assert_eq!(
            annotated(&rewritten.rules[2]),
            "#accu1(X,#tuple(1)) :- q(X)."
        );
    }

    fn aggregate_programs() -> impl Strategy<Value = String> {
        let function = prop::sample::select(vec!["#sum", "#sum+", "#count"]);
        let element = prop::sample::select(vec![
            "X : p(X)",
            "1,Y : q(X,Y)",
            "Y : q(Y,Z), not p(Z)",
            "2",
            ": p(Y), Y != X",
        ]);
        let agg = (
            function,
            prop::collection::vec(element, 0..3),
            any::<bool>(),
            prop::sample::select(vec!["> 1", "<= X", "!= 0"]),
        )
            .prop_map(|(f, es, neg, guard)| {
                format!(
                    "{}{f} {{ {} }} {guard}",
                    if neg { "not " } else { "" },
                    es.join("; ")
                )
            });
        prop::collection::vec(agg, 1..3)
            .prop_map(|aggs| format!("h(X) :- dom(X), {}, not r(X).", aggs.join(", ")))
    }

    proptest! {
        #[test]
        fn rewrite_is_normal_safe_and_sized(src in aggregate_programs()) {
            let Ok(program) = parse_program(&src) else { return Ok(()); };
            let (rewritten, registry) = rewrite_program(&program);
            let expected: usize = registry.iter().map(|i| i.elements.len() + 2).sum();
            prop_assert_eq!(rewritten.rules.len(), program.rules.len() + expected);
            for rule in &rewritten.rules {
                prop_assert!(rule.body.iter().all(Literal::is_simple));
                prop_assert!(check_safety(rule).is_ok(), "{}", rule);
            }
            let host = &program.rules[0];
            for rule in &rewritten.rules[1..] {
                for lit in rule.body.iter().filter(|l| l.marked) {
                    prop_assert!(host.body.iter().any(|h| same_literal(h, lit) && !h.marked));
                }
            }
        }
    }
}
