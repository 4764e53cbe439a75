//! Surface syntax: a small ASP dialect with `#sum`, `#sum+` and `#count`
//! aggregates.
//!
//! ```text
//! controls(X,Y) :- #sum+ { S : owns(X,Y,S); S,Z : controls(X,Z), owns(Z,Y,S) } > 50,
//!                  company(X), company(Y), X != Y.
//! ```

use std::fmt;

use indexmap::IndexSet;

use crate::ast::{
    AggregateAtom, AggregateElement, AggregateFunction, AggregateId, Atom, Comparison, Literal,
    Relation, Rule, Symbol, SymbolicAtom, Term,
};

/// Rules plus the ground facts split off from them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub facts: IndexSet<SymbolicAtom>,
}

impl Program {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.facts.is_empty()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}.")?;
        }
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{}{line}:{column}: {message}", .file.as_ref().map(|f| format!("{f}:")).unwrap_or_default())]
pub struct ParseError {
    pub file: Option<String>,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Anon,
    Num(i64),
    Aggregate(AggregateFunction),
    Sup,
    Not,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    If,
    Dot,
    Rel(Relation),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Anon => f.write_str("`_`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Aggregate(a) => write!(f, "`{a}`"),
            Tok::Sup => f.write_str("`#sup`"),
            Tok::Not => f.write_str("`not`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::If => f.write_str("`:-`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Rel(r) => write!(f, "`{r}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn word(&mut self) -> &'a str {
        let start = self.offset();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '\'') {
            self.bump();
        }
        &self.src[start..self.offset()]
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, Pos)>, (Pos, String)> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '%' {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let pos = Pos {
                line: self.line,
                column: self.column,
            };
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, pos));
                return Ok(out);
            };
            let tok = match c {
                'a'..='z' => {
                    let w = self.word();
                    if w.contains('\'') {
                        return Err((pos, format!("invalid identifier `{w}`")));
                    }
                    if w == "not" {
                        Tok::Not
                    } else {
                        Tok::Ident(w.to_owned())
                    }
                }
                'A'..='Z' => {
                    let w = self.word();
                    if w.contains('\'') {
                        return Err((pos, format!("invalid variable `{w}`")));
                    }
                    Tok::Var(w.to_owned())
                }
                '_' => {
                    let w = self.word();
                    if w != "_" {
                        return Err((pos, format!("names may not start with `_`: `{w}`")));
                    }
                    Tok::Anon
                }
                '0'..='9' | '-' => {
                    if c == '-' {
                        self.bump();
                        if !matches!(self.peek(), Some('0'..='9')) {
                            return Err((pos, "expected a digit after `-`".into()));
                        }
                    }
                    let digits = self.word();
                    let text = if c == '-' {
                        format!("-{digits}")
                    } else {
                        digits.to_owned()
                    };
                    let n = text
                        .parse::<i64>()
                        .map_err(|_| (pos, format!("invalid numeral `{text}`")))?;
                    Tok::Num(n)
                }
                '#' => {
                    self.bump();
                    let w = self.word();
                    match w {
                        "sum" if self.peek() == Some('+') => {
                            self.bump();
                            Tok::Aggregate(AggregateFunction::SumPlus)
                        }
                        "sum" => Tok::Aggregate(AggregateFunction::Sum),
                        "sumplus" => Tok::Aggregate(AggregateFunction::SumPlus),
                        "count" => Tok::Aggregate(AggregateFunction::Count),
                        "min" => Tok::Aggregate(AggregateFunction::Min),
                        "max" => Tok::Aggregate(AggregateFunction::Max),
                        "sup" => Tok::Sup,
                        _ => return Err((pos, format!("unknown directive `#{w}`"))),
                    }
                }
                _ => {
                    self.bump();
                    match (c, self.peek()) {
                        ('(', _) => Tok::LParen,
                        (')', _) => Tok::RParen,
                        ('{', _) => Tok::LBrace,
                        ('}', _) => Tok::RBrace,
                        (',', _) => Tok::Comma,
                        (';', _) => Tok::Semi,
                        ('.', _) => Tok::Dot,
                        (':', Some('-')) => {
                            self.bump();
                            Tok::If
                        }
                        (':', _) => Tok::Colon,
                        ('!', Some('=')) => {
                            self.bump();
                            Tok::Rel(Relation::Ne)
                        }
                        ('<', Some('=')) => {
                            self.bump();
                            Tok::Rel(Relation::Le)
                        }
                        ('>', Some('=')) => {
                            self.bump();
                            Tok::Rel(Relation::Ge)
                        }
                        ('<', _) => Tok::Rel(Relation::Lt),
                        ('>', _) => Tok::Rel(Relation::Gt),
                        ('=', _) => {
                            return Err((pos, "equality atoms are not supported".into()));
                        }
                        _ => return Err((pos, format!("unexpected character `{c}`"))),
                    }
                }
            };
            out.push((tok, pos));
        }
    }
}

/// Parses one or more sources into a single program.
///
/// Aggregate identifiers and anonymous-variable names are numbered across
/// all sources, so concatenating files behaves like parsing their
/// concatenation.
#[derive(Debug, Default)]
pub struct Parser {
    program: Program,
    next_aggregate: u32,
    next_anonymous: u32,
}

impl Parser {
    pub fn new() -> Parser {
        Parser {
            next_aggregate: 1,
            next_anonymous: 1,
            ..Parser::default()
        }
    }

    pub fn add_source(&mut self, file: Option<&str>, src: &str) -> Result<(), ParseError> {
        let err = |pos: Pos, message: String| ParseError {
            file: file.map(str::to_owned),
            line: pos.line,
            column: pos.column,
            message,
        };
        let tokens = Lexer::new(src).tokenize().map_err(|(pos, m)| err(pos, m))?;
        let mut state = State {
            tokens,
            at: 0,
            parser: self,
        };
        while state.peek() != &Tok::Eof {
            let start = state.pos();
            let rule = state.statement().map_err(|(pos, m)| err(pos, m))?;
            if let Err(unsafe_vars) = check_safety(&rule) {
                let names: Vec<&str> = unsafe_vars.iter().map(Symbol::as_str).collect();
                return Err(err(
                    start,
                    format!("unsafe variables {} in `{rule}`", names.join(", ")),
                ));
            }
            state.parser.push_rule(rule);
        }
        Ok(())
    }

    fn push_rule(&mut self, rule: Rule) {
        match rule.head {
            Some(head) if rule.body.is_empty() => {
                self.program.facts.insert(head);
            }
            _ => self.program.rules.push(rule),
        }
    }

    pub fn finish(self) -> Program {
        self.program
    }
}

/// Parses a single source text.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut parser = Parser::new();
    parser.add_source(None, src)?;
    Ok(parser.finish())
}

type PResult<T> = Result<T, (Pos, String)>;

struct State<'p> {
    tokens: Vec<(Tok, Pos)>,
    at: usize,
    parser: &'p mut Parser,
}

impl State<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].1
    }

    fn next(&mut self) -> Tok {
        let tok = self.tokens[self.at].0.clone();
        if tok != Tok::Eof {
            self.at += 1;
        }
        tok
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.peek() == &tok {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&format!("{tok}")))
        }
    }

    fn unexpected(&self, wanted: &str) -> (Pos, String) {
        (
            self.pos(),
            format!("expected {wanted}, found {}", self.peek()),
        )
    }

    fn statement(&mut self) -> PResult<Rule> {
        let head = if self.peek() == &Tok::If {
            None
        } else {
            let pos = self.pos();
            match self.literal(false)? {
                Literal {
                    atom: Atom::Symbolic(a),
                    negated: false,
                    ..
                } => Some(a),
                _ => return Err((pos, "rule heads must be symbolic atoms".into())),
            }
        };
        let mut body = Vec::new();
        if self.peek() == &Tok::If {
            self.next();
            // `:- .` is how an inconsistent ground program prints
            while self.peek() != &Tok::Dot {
                body.push(self.literal(true)?);
                if self.peek() == &Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Dot)?;
        Ok(Rule { head, body })
    }

    /// A body literal; aggregates only when `allow_aggregate`.
    fn literal(&mut self, allow_aggregate: bool) -> PResult<Literal> {
        let negated = if self.peek() == &Tok::Not {
            self.next();
            true
        } else {
            false
        };
        let atom = if let Tok::Aggregate(function) = *self.peek() {
            if !allow_aggregate {
                return Err((self.pos(), "aggregates are not allowed here".into()));
            }
            self.next();
            Atom::Aggregate(self.aggregate(function)?)
        } else {
            self.simple_atom()?
        };
        Ok(Literal {
            negated,
            ..Literal::positive(atom)
        })
    }

    fn simple_atom(&mut self) -> PResult<Atom> {
        let pos = self.pos();
        let lhs = self.term()?;
        if let Tok::Rel(relation) = *self.peek() {
            self.next();
            if matches!(self.peek(), Tok::Aggregate(_)) {
                return Err((
                    self.pos(),
                    "aggregate guards must appear on the right".into(),
                ));
            }
            let rhs = self.term()?;
            return Ok(Atom::Comparison(Comparison { lhs, relation, rhs }));
        }
        match lhs {
            Term::Constant(name) => Ok(Atom::Symbolic(SymbolicAtom {
                predicate: name,
                args: Vec::new(),
            })),
            Term::Function(name, args) => Ok(Atom::Symbolic(SymbolicAtom {
                predicate: name,
                args,
            })),
            _ => Err((pos, format!("expected an atom, found term `{lhs}`"))),
        }
    }

    fn aggregate(&mut self, function: AggregateFunction) -> PResult<AggregateAtom> {
        self.expect(Tok::LBrace)?;
        let mut elements = Vec::new();
        if self.peek() != &Tok::RBrace {
            loop {
                elements.push(self.element()?);
                if self.peek() == &Tok::Semi {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace)?;
        let Tok::Rel(relation) = *self.peek() else {
            return Err(self.unexpected("a relation followed by the aggregate guard"));
        };
        self.next();
        let guard = self.term()?;
        if matches!(self.peek(), Tok::Rel(_)) {
            return Err((
                self.pos(),
                "aggregates take a single right-hand guard".into(),
            ));
        }
        let id = AggregateId(self.parser.next_aggregate);
        self.parser.next_aggregate += 1;
        Ok(AggregateAtom {
            id,
            function,
            elements,
            relation,
            guard,
        })
    }

    fn element(&mut self) -> PResult<AggregateElement> {
        let mut tuple = Vec::new();
        if !matches!(self.peek(), Tok::Colon | Tok::Semi | Tok::RBrace) {
            loop {
                tuple.push(self.term()?);
                if self.peek() == &Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        let mut condition = Vec::new();
        if self.peek() == &Tok::Colon {
            self.next();
            loop {
                if matches!(self.peek(), Tok::Aggregate(_))
                    || (self.peek() == &Tok::Not
                        && matches!(self.tokens[self.at + 1].0, Tok::Aggregate(_)))
                {
                    return Err((self.pos(), "nested aggregates are not supported".into()));
                }
                condition.push(self.literal(false)?);
                if self.peek() == &Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        Ok(AggregateElement { tuple, condition })
    }

    fn term(&mut self) -> PResult<Term> {
        let pos = self.pos();
        match self.next() {
            Tok::Num(n) => Ok(Term::Numeral(n)),
            Tok::Var(v) => Ok(Term::variable(&v)),
            Tok::Sup => Ok(Term::Supremum),
            Tok::Anon => {
                let name = format!("_{}", self.parser.next_anonymous);
                self.parser.next_anonymous += 1;
                Ok(Term::variable(&name))
            }
            Tok::Ident(name) => {
                if self.peek() != &Tok::LParen {
                    return Ok(Term::constant(&name));
                }
                self.next();
                let mut args = vec![self.term()?];
                while self.peek() == &Tok::Comma {
                    self.next();
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Term::function(&name, args))
            }
            tok => Err((pos, format!("expected a term, found {tok}"))),
        }
    }
}

/// Checks that every global variable is bound by a positive symbolic body
/// literal, and every variable local to an aggregate element is bound by a
/// positive symbolic literal of that element's condition.
///
/// Returns the offending variables in first-occurrence order.
pub fn check_safety(rule: &Rule) -> Result<(), Vec<Symbol>> {
    let mut bound = Vec::new();
    for atom in rule.body_pos() {
        atom.collect_vars(&mut bound);
    }
    let global = rule.global_vars();
    let mut unsafe_vars: Vec<Symbol> = global
        .iter()
        .filter(|v| !bound.contains(v))
        .copied()
        .collect();
    for lit in &rule.body {
        let Atom::Aggregate(agg) = &lit.atom else {
            continue;
        };
        for element in &agg.elements {
            let mut local_bound = Vec::new();
            for l in &element.condition {
                if let Some(a) = l.positive_symbolic() {
                    a.collect_vars(&mut local_bound);
                }
            }
            let mut vars = Vec::new();
            element.tuple.iter().for_each(|t| t.collect_vars(&mut vars));
            element
                .condition
                .iter()
                .for_each(|l| l.atom.collect_all_vars(&mut vars));
            for v in vars {
                if !global.contains(&v) && !local_bound.contains(&v) && !unsafe_vars.contains(&v) {
                    unsafe_vars.push(v);
                }
            }
        }
    }
    if unsafe_vars.is_empty() {
        Ok(())
    } else {
        Err(unsafe_vars)
    }
}
