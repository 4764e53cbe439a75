#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use microgringo::ast::{Atom, Literal, Rule, Substitution, Symbol, SymbolicAtom, Term};
use microgringo::Program;
use rand::seq::SliceRandom;
use rand::Rng;

pub const COMPANY: &str = include_str!("../data/company.lp");
pub const HAM: &str = include_str!("../data/ham.lp");

const CONSTANTS: [&str; 4] = ["a", "b", "c", "d"];
const PREDICATES: [(&str, usize); 3] = [("p", 1), ("q", 2), ("r", 1)];
const VARIABLES: [&str; 3] = ["X", "Y", "Z"];

fn random_term(rng: &mut impl Rng, vars: &[&str], constants: usize) -> String {
    if !vars.is_empty() && rng.gen_bool(0.75) {
        vars.choose(rng).unwrap().to_string()
    } else {
        CONSTANTS[rng.gen_range(0..constants)].to_string()
    }
}

/// `derived` biases towards `r`, which has few facts, so that heads and
/// negative literals more often meet rule-defined atoms.
fn random_atom(rng: &mut impl Rng, vars: &[&str], constants: usize, derived: bool) -> String {
    let pick = if derived && rng.gen_bool(0.5) {
        2
    } else {
        rng.gen_range(0..PREDICATES.len())
    };
    let (name, arity) = PREDICATES[pick];
    let args: Vec<String> = (0..arity)
        .map(|_| random_term(rng, vars, constants))
        .collect();
    format!("{name}({})", args.join(","))
}

/// A safe, aggregate-free program over at most four constants, three
/// predicates of arity at most two and at most six rules, plus facts.
pub fn random_program(rng: &mut impl Rng) -> String {
    let constants = rng.gen_range(2..=CONSTANTS.len());
    let mut lines = Vec::new();
    for (name, arity) in PREDICATES {
        let most = if name == "r" { 1 } else { 3 };
        for _ in 0..rng.gen_range(0..=most) {
            let args: Vec<&str> = (0..arity)
                .map(|_| CONSTANTS[rng.gen_range(0..constants)])
                .collect();
            lines.push(format!("{name}({}).", args.join(",")));
        }
    }
    for _ in 0..rng.gen_range(2..=6) {
        let mut body = Vec::new();
        let mut bound: Vec<&str> = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            let vars: Vec<&str> = VARIABLES[..rng.gen_range(1..=VARIABLES.len())].to_vec();
            let atom = random_atom(rng, &vars, constants, false);
            for v in vars {
                if atom.contains(v) && !bound.contains(&v) {
                    bound.push(v);
                }
            }
            body.push(atom);
        }
        for _ in 0..rng.gen_range(0..=2) {
            body.push(format!("not {}", random_atom(rng, &bound, constants, true)));
        }
        if bound.len() >= 2 && rng.gen_bool(0.3) {
            let relation = ["<", "!=", "<=", ">"].choose(rng).unwrap();
            body.push(format!("{} {relation} {}", bound[0], bound[1]));
        }
        body.shuffle(rng);
        let head = if rng.gen_bool(0.15) {
            String::new()
        } else {
            random_atom(rng, &bound, constants, true)
        };
        lines.push(format!("{head} :- {}.", body.join(", ")));
    }
    lines.join("\n")
}

fn ground_terms(program: &Program) -> Vec<Term> {
    let mut terms = BTreeSet::new();
    let atoms = program.facts.iter().chain(
        program
            .rules
            .iter()
            .flat_map(|r| r.head.iter().chain(r.body_pm())),
    );
    for atom in atoms {
        for t in &atom.args {
            if t.is_ground() {
                terms.insert(t.clone());
            }
        }
    }
    terms.into_iter().collect()
}

fn rule_vars(rule: &Rule) -> Vec<Symbol> {
    let mut vars = Vec::new();
    rule.collect_vars(&mut vars);
    vars
}

/// Every instance of every rule over the program's ground terms, with
/// comparisons evaluated and removed.
fn all_instances(program: &Program) -> Vec<Rule> {
    let universe = ground_terms(program);
    let mut out = Vec::new();
    for rule in &program.rules {
        let vars = rule_vars(rule);
        let mut choice = vec![0usize; vars.len()];
        if !vars.is_empty() && universe.is_empty() {
            continue;
        }
        'assign: loop {
            let sigma: Substitution = vars
                .iter()
                .zip(&choice)
                .map(|(&v, &i)| (v, universe[i].clone()))
                .collect();
            let ground = rule.apply(&sigma);
            let mut holds = true;
            let body: Vec<Literal> = ground
                .body
                .into_iter()
                .filter(|l| match &l.atom {
                    Atom::Comparison(c) => {
                        holds &= c.holds();
                        false
                    }
                    _ => true,
                })
                .collect();
            if holds {
                out.push(Rule {
                    head: ground.head,
                    body,
                });
            }
            for slot in choice.iter_mut() {
                *slot += 1;
                if *slot < universe.len() {
                    continue 'assign;
                }
                *slot = 0;
            }
            break;
        }
    }
    out
}

fn least_model<'a>(
    rules: impl Iterator<Item = &'a Rule> + Clone,
    seed: &HashSet<SymbolicAtom>,
    allowed: impl Fn(&Rule) -> bool,
) -> HashSet<SymbolicAtom> {
    let mut model = seed.clone();
    loop {
        let mut changed = false;
        for rule in rules.clone() {
            let Some(head) = &rule.head else { continue };
            if !model.contains(head) && rule.body_pos().all(|a| model.contains(a)) && allowed(rule)
            {
                model.insert(head.clone());
                changed = true;
            }
        }
        if !changed {
            return model;
        }
    }
}

/// The naive relevant grounding: all instances whose positive bodies are
/// derivable, simplified by the same fact elision the grounder applies.
pub fn naive_grounding(program: &Program) -> Vec<Rule> {
    let instances = all_instances(program);
    let facts: HashSet<SymbolicAtom> = program.facts.iter().cloned().collect();
    let derivable = least_model(instances.iter(), &facts, |_| true);
    let relevant: Vec<&Rule> = instances
        .iter()
        .filter(|r| r.body_pos().all(|a| derivable.contains(a)))
        .collect();
    let known = least_model(relevant.iter().copied(), &facts, |r| {
        r.body_neg().all(|a| !derivable.contains(a))
    });
    let mut out: Vec<Rule> = program.facts.iter().cloned().map(Rule::fact).collect();
    for rule in relevant {
        if rule.body_neg().any(|a| known.contains(a)) {
            continue;
        }
        let body: Vec<Literal> = rule
            .body
            .iter()
            .filter(|l| {
                let a = l.symbolic().expect("comparisons removed");
                if l.negated {
                    derivable.contains(a)
                } else {
                    !known.contains(a)
                }
            })
            .cloned()
            .collect();
        if let Some(h) = &rule.head {
            if known.contains(h) && !body.is_empty() {
                continue;
            }
        }
        out.push(Rule {
            head: rule.head.clone(),
            body,
        });
    }
    out
}

/// Well-founded model `(true, possible)` of a ground normal program by the
/// alternating fixpoint.
pub fn well_founded(rules: &[Rule]) -> (HashSet<SymbolicAtom>, HashSet<SymbolicAtom>) {
    let empty = HashSet::new();
    let gamma = |assumed: &HashSet<SymbolicAtom>| {
        least_model(rules.iter(), &empty, |r| {
            r.body_neg().all(|a| !assumed.contains(a))
        })
    };
    let mut truth: HashSet<SymbolicAtom> = HashSet::new();
    loop {
        let possible = gamma(&truth);
        let next = gamma(&possible);
        if next == truth {
            return (truth, possible);
        }
        truth = next;
    }
}

/// A ground normal program modulo well-founded simplification: rules with a
/// false body literal are dropped, true literals removed, rules for true
/// heads reduced to facts. Order and duplicates are forgotten.
pub fn canonicalize(rules: &[Rule]) -> BTreeSet<String> {
    let (truth, possible) = well_founded(rules);
    let mut out = BTreeSet::new();
    for rule in rules {
        let false_literal = rule.body.iter().any(|l| {
            let a = l.symbolic().expect("ground normal program");
            if l.negated {
                truth.contains(a)
            } else {
                !possible.contains(a)
            }
        });
        if false_literal {
            continue;
        }
        let mut body: Vec<String> = rule
            .body
            .iter()
            .filter(|l| {
                let a = l.symbolic().unwrap();
                if l.negated {
                    possible.contains(a)
                } else {
                    !truth.contains(a)
                }
            })
            .map(|l| l.to_string())
            .collect();
        body.sort();
        body.dedup();
        match &rule.head {
            Some(h) if truth.contains(h) => {
                out.insert(format!("{h}."));
            }
            Some(h) if body.is_empty() => {
                out.insert(format!("{h}."));
            }
            Some(h) => {
                out.insert(format!("{h} :- {}.", body.join(", ")));
            }
            None => {
                out.insert(format!(":- {}.", body.join(", ")));
            }
        }
    }
    out
}

/// Accumulated tuples per global tuple for aggregate `#accu<id>`.
pub fn accu_tuples(
    atoms: impl IntoIterator<Item = SymbolicAtom>,
    id: u32,
) -> BTreeMap<Vec<String>, BTreeSet<Vec<String>>> {
    let name = format!("#accu{id}");
    let mut out: BTreeMap<Vec<String>, BTreeSet<Vec<String>>> = BTreeMap::new();
    for atom in atoms {
        if atom.predicate.as_str() != name {
            continue;
        }
        let (last, globals) = atom.args.split_last().unwrap();
        let entry = out
            .entry(globals.iter().map(Term::to_string).collect())
            .or_default();
        if let Term::Function(_, tuple) = last {
            entry.insert(tuple.iter().map(Term::to_string).collect());
        }
    }
    out
}
