//! Terms, atoms, literals, rules and substitutions.
//!
//! Everything downstream of the parser works on these types. Ground terms
//! carry a fixed total order (see [`compare_ground`]) which extends the
//! integer order on numerals and puts the supremum `#sup` above everything.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Mutex, OnceLock};

/// An interned name (predicate, constant, function or variable).
///
/// Two symbols are equal iff they point at the same interned string, so
/// equality and hashing are pointer operations. Ordering is by string
/// content, which keeps the ground-term order independent of interning order.
#[derive(Clone, Copy)]
pub struct Symbol(&'static str);

fn interner() -> &'static Mutex<HashSet<&'static str>> {
    static INTERNER: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
    INTERNER.get_or_init(|| Mutex::new(HashSet::new()))
}

impl Symbol {
    pub fn intern(name: &str) -> Symbol {
        let mut table = interner().lock().expect("symbol table poisoned");
        if let Some(existing) = table.get(name) {
            return Symbol(existing);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        table.insert(leaked);
        Symbol(leaked)
    }

    pub fn as_str(&self) -> &'static str {
        self.0
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0, other.0)
    }
}

impl Eq for Symbol {}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.0.as_ptr() as usize).hash(state)
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            Ordering::Equal
        } else {
            self.0.cmp(other.0)
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Numeral(i64),
    Constant(Symbol),
    Variable(Symbol),
    Function(Symbol, Vec<Term>),
    Supremum,
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Constant(Symbol::intern(name))
    }

    pub fn variable(name: &str) -> Term {
        Term::Variable(Symbol::intern(name))
    }

    pub fn function(name: &str, args: Vec<Term>) -> Term {
        Term::Function(Symbol::intern(name), args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Variable(_) => false,
            Term::Function(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Appends the variables of this term to `out` in first-occurrence order,
    /// skipping ones already present.
    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Variable(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Function(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
            _ => {}
        }
    }

    pub fn apply(&self, sigma: &Substitution) -> Term {
        match self {
            Term::Variable(v) => sigma.get(*v).cloned().unwrap_or_else(|| self.clone()),
            Term::Function(name, args) => {
                Term::Function(*name, args.iter().map(|t| t.apply(sigma)).collect())
            }
            _ => self.clone(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Term::Numeral(_) => 0,
            Term::Constant(_) => 1,
            Term::Function(..) => 2,
            Term::Supremum => 3,
            Term::Variable(_) => 4,
        }
    }

    fn occurs(&self, var: Symbol) -> bool {
        match self {
            Term::Variable(v) => *v == var,
            Term::Function(_, args) => args.iter().any(|t| t.occurs(var)),
            _ => false,
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Numerals < constants < functions < `#sup`; variables sort last so that
/// non-ground terms can still live in ordered collections.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Term::Numeral(a), Term::Numeral(b)) => a.cmp(b),
            (Term::Constant(a), Term::Constant(b)) => a.cmp(b),
            (Term::Variable(a), Term::Variable(b)) => a.cmp(b),
            (Term::Function(f, xs), Term::Function(g, ys)) => f
                .cmp(g)
                .then(xs.len().cmp(&ys.len()))
                .then_with(|| xs.cmp(ys)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Numeral(n) => write!(f, "{n}"),
            Term::Constant(c) => write!(f, "{c}"),
            // anonymous variables are freshened at parse time; print them back as `_`
            Term::Variable(v) if v.as_str().starts_with('_') => f.write_str("_"),
            Term::Variable(v) => write!(f, "{v}"),
            Term::Function(name, args) => {
                write!(f, "{name}(")?;
                write_joined(f, args, ",")?;
                f.write_str(")")
            }
            Term::Supremum => f.write_str("#sup"),
        }
    }
}

pub(crate) fn write_joined<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: &[T],
    sep: &str,
) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

/// Total order on ground terms.
///
/// Panics if either term contains a variable.
pub fn compare_ground(a: &Term, b: &Term) -> Ordering {
    assert!(
        a.is_ground() && b.is_ground(),
        "compare_ground called on non-ground terms {a} and {b}"
    );
    a.cmp(b)
}

/// Weight of a ground term tuple: its leading numeral, or 0.
pub fn weight(tuple: &[Term]) -> i64 {
    match tuple.first() {
        Some(Term::Numeral(n)) => *n,
        _ => 0,
    }
}

/// Predicate name together with its arity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub name: Symbol,
    pub arity: usize,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicAtom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl SymbolicAtom {
    pub fn new(predicate: &str, args: Vec<Term>) -> SymbolicAtom {
        SymbolicAtom {
            predicate: Symbol::intern(predicate),
            args,
        }
    }

    pub fn signature(&self) -> Signature {
        Signature {
            name: self.predicate,
            arity: self.args.len(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        self.args.iter().for_each(|t| t.collect_vars(out));
    }

    pub fn apply(&self, sigma: &Substitution) -> SymbolicAtom {
        SymbolicAtom {
            predicate: self.predicate,
            args: self.args.iter().map(|t| t.apply(sigma)).collect(),
        }
    }

    /// Renames every variable through `rename`.
    pub fn rename(&self, rename: &mut impl FnMut(Symbol) -> Symbol) -> SymbolicAtom {
        fn go(t: &Term, rename: &mut impl FnMut(Symbol) -> Symbol) -> Term {
            match t {
                Term::Variable(v) => Term::Variable(rename(*v)),
                Term::Function(n, args) => {
                    Term::Function(*n, args.iter().map(|a| go(a, rename)).collect())
                }
                _ => t.clone(),
            }
        }
        SymbolicAtom {
            predicate: self.predicate,
            args: self.args.iter().map(|t| go(t, rename)).collect(),
        }
    }
}

impl fmt::Display for SymbolicAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_joined(f, &self.args, ",")?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Comparison relations. Equality is deliberately absent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::Ne,
        Relation::Lt,
        Relation::Gt,
        Relation::Le,
        Relation::Ge,
    ];

    /// Whether `lhs rel rhs` holds given `lhs.cmp(rhs)`.
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Relation::Ne => ord != Ordering::Equal,
            Relation::Lt => ord == Ordering::Less,
            Relation::Gt => ord == Ordering::Greater,
            Relation::Le => ord != Ordering::Greater,
            Relation::Ge => ord != Ordering::Less,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ne => "!=",
            Relation::Lt => "<",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Comparison {
    pub lhs: Term,
    pub relation: Relation,
    pub rhs: Term,
}

impl Comparison {
    /// The always-false comparison `0 > 0`.
    pub fn falsity() -> Comparison {
        Comparison {
            lhs: Term::Numeral(0),
            relation: Relation::Gt,
            rhs: Term::Numeral(0),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.lhs.is_ground() && self.rhs.is_ground()
    }

    /// Evaluates a ground comparison.
    pub fn holds(&self) -> bool {
        self.relation.holds(compare_ground(&self.lhs, &self.rhs))
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.relation, self.rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggregateFunction {
    Sum,
    SumPlus,
    Count,
    /// Reserved: parsed, but rejected before grounding.
    Min,
    /// Reserved: parsed, but rejected before grounding.
    Max,
}

impl AggregateFunction {
    pub fn name(self) -> &'static str {
        match self {
            AggregateFunction::Sum => "#sum",
            AggregateFunction::SumPlus => "#sum+",
            AggregateFunction::Count => "#count",
            AggregateFunction::Min => "#min",
            AggregateFunction::Max => "#max",
        }
    }
}

impl fmt::Display for AggregateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Identifier of one aggregate occurrence in a program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AggregateId(pub u32);

impl fmt::Display for AggregateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AggregateElement {
    pub tuple: Vec<Term>,
    /// Simple literals only.
    pub condition: Vec<Literal>,
}

impl fmt::Display for AggregateElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_joined(f, &self.tuple, ",")?;
        if !self.condition.is_empty() {
            f.write_str(if self.tuple.is_empty() { ": " } else { " : " })?;
            write_joined(f, &self.condition, ", ")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AggregateAtom {
    pub id: AggregateId,
    pub function: AggregateFunction,
    pub elements: Vec<AggregateElement>,
    pub relation: Relation,
    pub guard: Term,
}

impl fmt::Display for AggregateAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{ ", self.function)?;
        write_joined(f, &self.elements, "; ")?;
        if !self.elements.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "}} {} {}", self.relation, self.guard)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Symbolic(SymbolicAtom),
    Comparison(Comparison),
    Aggregate(AggregateAtom),
}

impl Atom {
    pub fn as_symbolic(&self) -> Option<&SymbolicAtom> {
        match self {
            Atom::Symbolic(a) => Some(a),
            _ => None,
        }
    }

    /// Variables of the atom. For aggregates these are the global ones only,
    /// i.e. the variables of the guard.
    pub fn collect_global_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Atom::Symbolic(a) => a.collect_vars(out),
            Atom::Comparison(c) => {
                c.lhs.collect_vars(out);
                c.rhs.collect_vars(out);
            }
            Atom::Aggregate(a) => a.guard.collect_vars(out),
        }
    }

    /// Every variable occurring anywhere in the atom.
    pub fn collect_all_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Atom::Aggregate(a) => {
                for e in &a.elements {
                    e.tuple.iter().for_each(|t| t.collect_vars(out));
                    e.condition
                        .iter()
                        .for_each(|l| l.atom.collect_all_vars(out));
                }
                a.guard.collect_vars(out);
            }
            _ => self.collect_global_vars(out),
        }
    }

    pub fn apply(&self, sigma: &Substitution) -> Atom {
        match self {
            Atom::Symbolic(a) => Atom::Symbolic(a.apply(sigma)),
            Atom::Comparison(c) => Atom::Comparison(Comparison {
                lhs: c.lhs.apply(sigma),
                relation: c.relation,
                rhs: c.rhs.apply(sigma),
            }),
            Atom::Aggregate(a) => Atom::Aggregate(AggregateAtom {
                id: a.id,
                function: a.function,
                elements: a
                    .elements
                    .iter()
                    .map(|e| AggregateElement {
                        tuple: e.tuple.iter().map(|t| t.apply(sigma)).collect(),
                        condition: e.condition.iter().map(|l| l.apply(sigma)).collect(),
                    })
                    .collect(),
                relation: a.relation,
                guard: a.guard.apply(sigma),
            }),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Symbolic(a) => write!(f, "{a}"),
            Atom::Comparison(c) => write!(f, "{c}"),
            Atom::Aggregate(a) => write!(f, "{a}"),
        }
    }
}

/// Which part of the evolving atom store a positive body literal is matched
/// against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Adornment {
    #[default]
    None,
    New,
    Old,
    All,
}

impl Adornment {
    fn suffix(self) -> &'static str {
        match self {
            Adornment::None => "",
            Adornment::New => "n",
            Adornment::Old => "o",
            Adornment::All => "a",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
    /// Safety padding added by the aggregate rewrite; never copied into
    /// ground bodies.
    pub marked: bool,
    pub adorn: Adornment,
}

impl Literal {
    pub fn positive(atom: Atom) -> Literal {
        Literal {
            atom,
            negated: false,
            marked: false,
            adorn: Adornment::None,
        }
    }

    pub fn negative(atom: Atom) -> Literal {
        Literal {
            negated: true,
            ..Literal::positive(atom)
        }
    }

    pub fn symbolic(&self) -> Option<&SymbolicAtom> {
        self.atom.as_symbolic()
    }

    /// The atom of a positive symbolic literal.
    pub fn positive_symbolic(&self) -> Option<&SymbolicAtom> {
        if self.negated {
            None
        } else {
            self.symbolic()
        }
    }

    /// Symbolic or comparison literal, as opposed to an aggregate one.
    pub fn is_simple(&self) -> bool {
        !matches!(self.atom, Atom::Aggregate(_))
    }

    pub fn apply(&self, sigma: &Substitution) -> Literal {
        Literal {
            atom: self.atom.apply(sigma),
            ..self.clone()
        }
    }

    /// Display including adornment and safety mark, e.g. `†company[a](X)`.
    pub fn annotated(&self) -> AnnotatedLiteral<'_> {
        AnnotatedLiteral(self)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        write!(f, "{}", self.atom)
    }
}

pub struct AnnotatedLiteral<'a>(&'a Literal);

impl fmt::Display for AnnotatedLiteral<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lit = self.0;
        if lit.marked {
            f.write_str("†")?;
        }
        if lit.negated {
            f.write_str("not ")?;
        }
        match (&lit.atom, lit.adorn) {
            (Atom::Symbolic(a), adorn) if adorn != Adornment::None => {
                write!(f, "{}[{}]", a.predicate, adorn.suffix())?;
                if !a.args.is_empty() {
                    f.write_str("(")?;
                    write_joined(f, &a.args, ",")?;
                    f.write_str(")")?;
                }
                Ok(())
            }
            (atom, _) => write!(f, "{atom}"),
        }
    }
}

/// `head :- body.`; a missing head makes the rule an integrity constraint.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Option<SymbolicAtom>,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn fact(head: SymbolicAtom) -> Rule {
        Rule {
            head: Some(head),
            body: Vec::new(),
        }
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_none()
    }

    /// Atoms of positive symbolic body literals.
    pub fn body_pos(&self) -> impl Iterator<Item = &SymbolicAtom> {
        self.body.iter().filter_map(Literal::positive_symbolic)
    }

    /// Atoms of negative symbolic body literals.
    pub fn body_neg(&self) -> impl Iterator<Item = &SymbolicAtom> {
        self.body
            .iter()
            .filter(|l| l.negated)
            .filter_map(Literal::symbolic)
    }

    /// Atoms of all symbolic body literals.
    pub fn body_pm(&self) -> impl Iterator<Item = &SymbolicAtom> {
        self.body.iter().filter_map(Literal::symbolic)
    }

    pub fn is_ground(&self) -> bool {
        let mut vars = Vec::new();
        self.collect_vars(&mut vars);
        vars.is_empty()
    }

    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        if let Some(h) = &self.head {
            h.collect_vars(out);
        }
        for l in &self.body {
            l.atom.collect_all_vars(out);
        }
    }

    /// Global variables: those of the head, of simple body literals, and of
    /// aggregate guards.
    pub fn global_vars(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        if let Some(h) = &self.head {
            h.collect_vars(&mut out);
        }
        for l in &self.body {
            l.atom.collect_global_vars(&mut out);
        }
        out
    }

    pub fn apply(&self, sigma: &Substitution) -> Rule {
        Rule {
            head: self.head.as_ref().map(|h| h.apply(sigma)),
            body: self.body.iter().map(|l| l.apply(sigma)).collect(),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = &self.head {
            write!(f, "{h}")?;
            if !self.body.is_empty() {
                f.write_str(" ")?;
            }
        }
        if !self.body.is_empty() || self.head.is_none() {
            f.write_str(":- ")?;
            write_joined(f, &self.body, ", ")?;
        }
        f.write_str(".")
    }
}

/// Finite map from variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<Symbol, Term>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, var: Symbol) -> Option<&Term> {
        self.0.get(&var)
    }

    pub fn bind(&mut self, var: Symbol, term: Term) {
        self.0.insert(var, term);
    }

    pub fn is_bound(&self, var: Symbol) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.0.iter()
    }

    /// Whether every binding of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &Substitution) -> bool {
        self.0.iter().all(|(v, t)| other.0.get(v) == Some(t))
    }

    /// Extends `self` so that `pattern` applied to the result equals the
    /// ground term `target`. Returns false on mismatch; `self` may then be
    /// partially extended.
    pub fn match_term(&mut self, pattern: &Term, target: &Term) -> bool {
        match (pattern, target) {
            (Term::Variable(v), _) => match self.0.get(v) {
                Some(bound) => bound == target,
                None => {
                    self.0.insert(*v, target.clone());
                    true
                }
            },
            (Term::Function(f, xs), Term::Function(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.match_term(x, y))
            }
            _ => pattern == target,
        }
    }

    pub fn match_args(&mut self, pattern: &[Term], target: &[Term]) -> bool {
        pattern.len() == target.len()
            && pattern
                .iter()
                .zip(target)
                .all(|(p, t)| self.match_term(p, t))
    }
}

impl FromIterator<(Symbol, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Symbol, Term)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}↦{t}")?;
        }
        f.write_str("}")
    }
}

/// Most general unifier of two symbolic atoms, with occurs check.
///
/// The atoms are assumed to be renamed apart by the caller. The returned
/// substitution is idempotent.
pub fn unify(a: &SymbolicAtom, b: &SymbolicAtom) -> Option<Substitution> {
    if a.predicate != b.predicate || a.args.len() != b.args.len() {
        return None;
    }
    let mut bindings: HashMap<Symbol, Term> = HashMap::new();
    let mut stack: Vec<(Term, Term)> = a.args.iter().cloned().zip(b.args.iter().cloned()).collect();
    while let Some((s, t)) = stack.pop() {
        let s = resolve(&s, &bindings);
        let t = resolve(&t, &bindings);
        match (s, t) {
            (Term::Variable(x), Term::Variable(y)) if x == y => {}
            (Term::Variable(x), t) | (t, Term::Variable(x)) => {
                if t.occurs(x) {
                    return None;
                }
                bindings.insert(x, t);
            }
            (Term::Function(f, xs), Term::Function(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.into_iter().zip(ys));
            }
            (s, t) => {
                if s != t {
                    return None;
                }
            }
        }
    }
    let vars: Vec<Symbol> = bindings.keys().copied().collect();
    Some(
        vars.into_iter()
            .map(|v| {
                let t = resolve(&Term::Variable(v), &bindings);
                (v, t)
            })
            .collect(),
    )
}

/// Fully dereferences `t` through triangular `bindings`.
fn resolve(t: &Term, bindings: &HashMap<Symbol, Term>) -> Term {
    match t {
        Term::Variable(v) => match bindings.get(v) {
            Some(bound) => resolve(bound, bindings),
            None => t.clone(),
        },
        Term::Function(f, args) => {
            Term::Function(*f, args.iter().map(|a| resolve(a, bindings)).collect())
        }
        _ => t.clone(),
    }
}
