//! Concrete text syntax: lexer, parser, and printer.
//!
//! Precedence, loosest to tightest: quantifiers (scope extends as far right
//! as possible), `<->`, the implication family (`->` Kleene, `~>`
//! Łukasiewicz, `&>` strict, `=>` / `==>` the two deduction-compatible
//! forms), the disjunction family (`\/` Kleene, `|` strict, `||`
//! short-circuit), the conjunction family (`/\` `&` `&&`), then the unary
//! operators `not` and `*`. Conjunctions and disjunctions associate to the
//! left, implications to the right. `not` and `*` applied directly to a
//! quantified formula negate its whole (maximal) scope.
//!
//! Variables are written `v1`, `v2`, …; other symbols are lower-case
//! identifiers resolved against the ambient [`Signature`]. `*` doubles as a
//! function name when the signature declares it, so `*(v2, v2) = v1` is an
//! equation while `* p(c)` is the definedness connective. Comments run from
//! `#` to end of line.

use std::fmt;

use thiserror::Error;

use crate::syntax::{looks_like_variable, Formula, Signature, Term, VarIndex};

/// Formulas over the core grammar extended with the operator sugar that
/// [`crate::translate::desugar`] eliminates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SugaredFormula {
    False,
    True,
    Eq(SugaredTerm, SugaredTerm),
    Rel(String, Vec<SugaredTerm>),
    Not(Box<SugaredFormula>),
    And(Box<SugaredFormula>, Box<SugaredFormula>),
    Or(Box<SugaredFormula>, Box<SugaredFormula>),
    Forall(VarIndex, Box<SugaredFormula>),
    Exists(VarIndex, Box<SugaredFormula>),
    /// `->`: false antecedent or true consequent; undefined propagates.
    KleeneImp(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `<->`: conjunction of the two `->` directions.
    KleeneIff(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `~>`: like `->` except undefined-implies-undefined is true.
    LukImp(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `&`: conjunction that is undefined as soon as either side is.
    StrictAnd(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `|`: disjunction that is undefined as soon as either side is.
    StrictOr(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `&&`: left-to-right short-circuit conjunction.
    McCarthyAnd(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `||`: left-to-right short-circuit disjunction.
    McCarthyOr(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `&>`: implication that is undefined as soon as either side is.
    StrictImp(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `=>`: satisfies both Modus Ponens and the Deduction Theorem.
    DtImp1(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `==>`: as `=>` but also guards the consequent.
    DtImp2(Box<SugaredFormula>, Box<SugaredFormula>),
    /// `sforall`: universal quantifier, undefined if any instance is.
    StrictForall(VarIndex, Box<SugaredFormula>),
    /// `sexists`: existential quantifier, undefined if any instance is.
    StrictExists(VarIndex, Box<SugaredFormula>),
    /// `lexists`: existential quantifier counting only defined witnesses.
    LehmannExists(VarIndex, Box<SugaredFormula>),
    /// `*`: true when the operand is defined, false otherwise.
    Star(Box<SugaredFormula>),
    /// `E!`: true when the term denotes.
    EBang(SugaredTerm),
}

/// Terms extended with the conditional `ite(condition, then, else)`, which
/// is only meaningful inside atomic formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SugaredTerm {
    Var(VarIndex),
    Const(String),
    App(String, Vec<SugaredTerm>),
    Ite(Box<SugaredFormula>, Box<SugaredTerm>, Box<SugaredTerm>),
}

impl From<Term> for SugaredTerm {
    fn from(t: Term) -> Self {
        match t {
            Term::Var(i) => SugaredTerm::Var(i),
            Term::Const(c) => SugaredTerm::Const(c),
            Term::App(f, args) => SugaredTerm::App(f, args.into_iter().map(Into::into).collect()),
        }
    }
}

impl From<Formula> for SugaredFormula {
    fn from(phi: Formula) -> Self {
        match phi {
            Formula::False => SugaredFormula::False,
            Formula::True => SugaredFormula::True,
            Formula::Eq(t1, t2) => SugaredFormula::Eq(t1.into(), t2.into()),
            Formula::Rel(r, args) => {
                SugaredFormula::Rel(r, args.into_iter().map(Into::into).collect())
            }
            Formula::Not(p) => SugaredFormula::Not(Box::new((*p).into())),
            Formula::And(p, q) => SugaredFormula::And(Box::new((*p).into()), Box::new((*q).into())),
            Formula::Or(p, q) => SugaredFormula::Or(Box::new((*p).into()), Box::new((*q).into())),
            Formula::Forall(i, p) => SugaredFormula::Forall(i, Box::new((*p).into())),
            Formula::Exists(i, p) => SugaredFormula::Exists(i, Box::new((*p).into())),
        }
    }
}

impl SugaredTerm {
    /// Extracts a core term; fails on `ite`.
    pub fn into_core(self) -> Result<Term, ParseError> {
        match self {
            SugaredTerm::Var(i) => Ok(Term::Var(i)),
            SugaredTerm::Const(c) => Ok(Term::Const(c)),
            SugaredTerm::App(f, args) => Ok(Term::App(
                f,
                args.into_iter()
                    .map(SugaredTerm::into_core)
                    .collect::<Result<_, _>>()?,
            )),
            SugaredTerm::Ite(..) => Err(ParseError::UnexpectedSugar("ite".to_string())),
        }
    }
}

impl SugaredFormula {
    /// Extracts a core formula; fails if any sugared construct remains.
    pub fn into_core(self) -> Result<Formula, ParseError> {
        match self {
            SugaredFormula::False => Ok(Formula::False),
            SugaredFormula::True => Ok(Formula::True),
            SugaredFormula::Eq(t1, t2) => Ok(Formula::Eq(t1.into_core()?, t2.into_core()?)),
            SugaredFormula::Rel(r, args) => Ok(Formula::Rel(
                r,
                args.into_iter()
                    .map(SugaredTerm::into_core)
                    .collect::<Result<_, _>>()?,
            )),
            SugaredFormula::Not(p) => Ok(Formula::not(p.into_core()?)),
            SugaredFormula::And(p, q) => Ok(Formula::and(p.into_core()?, q.into_core()?)),
            SugaredFormula::Or(p, q) => Ok(Formula::or(p.into_core()?, q.into_core()?)),
            SugaredFormula::Forall(i, p) => Ok(Formula::forall(i, p.into_core()?)),
            SugaredFormula::Exists(i, p) => Ok(Formula::exists(i, p.into_core()?)),
            other => Err(ParseError::UnexpectedSugar(
                operator_name(&other).to_string(),
            )),
        }
    }
}

fn operator_name(phi: &SugaredFormula) -> &'static str {
    use SugaredFormula::*;
    match phi {
        KleeneImp(..) => "->",
        KleeneIff(..) => "<->",
        LukImp(..) => "~>",
        StrictAnd(..) => "&",
        StrictOr(..) => "|",
        McCarthyAnd(..) => "&&",
        McCarthyOr(..) => "||",
        StrictImp(..) => "&>",
        DtImp1(..) => "=>",
        DtImp2(..) => "==>",
        StrictForall(..) => "sforall",
        StrictExists(..) => "sexists",
        LehmannExists(..) => "lexists",
        Star(..) => "*",
        EBang(..) => "E!",
        _ => "core",
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("{line}:{col}: unknown symbol `{name}`")]
    UnknownSymbol {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: `{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
        line: usize,
        col: usize,
    },
    #[error("construct `{0}` is not allowed here")]
    UnexpectedSugar(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    EqSign,
    FalseLit,
    TrueLit,
    Var(VarIndex),
    Ident(String),
    Not,
    Forall,
    Exists,
    SForall,
    SExists,
    LExists,
    Ite,
    Wedge,
    Vee,
    StrictAndTok,
    McAndTok,
    StrictOrTok,
    McOrTok,
    Arrow,
    Iff,
    LukArrow,
    StrictArrow,
    DtArrow1,
    DtArrow2,
    StarTok,
    EBangTok,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::EqSign => "=",
            Tok::FalseLit => "F",
            Tok::TrueLit => "T",
            Tok::Var(i) => return write!(f, "v{i}"),
            Tok::Ident(s) => return write!(f, "{s}"),
            Tok::Not => "not",
            Tok::Forall => "forall",
            Tok::Exists => "exists",
            Tok::SForall => "sforall",
            Tok::SExists => "sexists",
            Tok::LExists => "lexists",
            Tok::Ite => "ite",
            Tok::Wedge => "/\\",
            Tok::Vee => "\\/",
            Tok::StrictAndTok => "&",
            Tok::McAndTok => "&&",
            Tok::StrictOrTok => "|",
            Tok::McOrTok => "||",
            Tok::Arrow => "->",
            Tok::Iff => "<->",
            Tok::LukArrow => "~>",
            Tok::StrictArrow => "&>",
            Tok::DtArrow1 => "=>",
            Tok::DtArrow2 => "==>",
            Tok::StarTok => "*",
            Tok::EBangTok => "E!",
            Tok::Eof => "end of input",
        };
        write!(f, "{s}")
    }
}

type Spanned = (Tok, usize, usize);

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = *self.src.get(self.pos)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn error(&self, expected: &str, found: String) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col,
            expected: expected.to_string(),
            found,
        }
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c == b'#' {
                    while self.peek().is_some_and(|c| c != b'\n') {
                        self.bump();
                    }
                } else if c.is_ascii_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = match c {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'*' => {
                    self.bump();
                    Tok::StarTok
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'=') && self.peek2() == Some(b'>') {
                        self.bump();
                        self.bump();
                        Tok::DtArrow2
                    } else if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::DtArrow1
                    } else {
                        Tok::EqSign
                    }
                }
                b'/' => {
                    self.bump();
                    if self.bump() == Some(b'\\') {
                        Tok::Wedge
                    } else {
                        return Err(self.error("`/\\`", "`/`".to_string()));
                    }
                }
                b'\\' => {
                    self.bump();
                    if self.bump() == Some(b'/') {
                        Tok::Vee
                    } else {
                        return Err(self.error("`\\/`", "`\\`".to_string()));
                    }
                }
                b'&' => {
                    self.bump();
                    if self.peek() == Some(b'&') {
                        self.bump();
                        Tok::McAndTok
                    } else if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::StrictArrow
                    } else {
                        Tok::StrictAndTok
                    }
                }
                b'|' => {
                    self.bump();
                    if self.peek() == Some(b'|') {
                        self.bump();
                        Tok::McOrTok
                    } else {
                        Tok::StrictOrTok
                    }
                }
                b'-' => {
                    self.bump();
                    if self.bump() == Some(b'>') {
                        Tok::Arrow
                    } else {
                        return Err(self.error("`->`", "`-`".to_string()));
                    }
                }
                b'<' => {
                    self.bump();
                    if self.bump() == Some(b'-') && self.bump() == Some(b'>') {
                        Tok::Iff
                    } else {
                        return Err(self.error("`<->`", "`<`".to_string()));
                    }
                }
                b'~' => {
                    self.bump();
                    if self.bump() == Some(b'>') {
                        Tok::LukArrow
                    } else {
                        return Err(self.error("`~>`", "`~`".to_string()));
                    }
                }
                b'F' => {
                    self.bump();
                    Tok::FalseLit
                }
                b'T' => {
                    self.bump();
                    Tok::TrueLit
                }
                b'E' => {
                    self.bump();
                    if self.bump() == Some(b'!') {
                        Tok::EBangTok
                    } else {
                        return Err(self.error("`E!`", "`E`".to_string()));
                    }
                }
                c if c.is_ascii_lowercase() => {
                    let start = self.pos;
                    while self
                        .peek()
                        .is_some_and(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == b'_')
                    {
                        self.bump();
                    }
                    let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    match word {
                        "not" => Tok::Not,
                        "forall" => Tok::Forall,
                        "exists" => Tok::Exists,
                        "sforall" => Tok::SForall,
                        "sexists" => Tok::SExists,
                        "lexists" => Tok::LExists,
                        "ite" => Tok::Ite,
                        w if looks_like_variable(w) => {
                            let idx = w[1..]
                                .parse()
                                .map_err(|_| self.error("a variable index", format!("`{w}`")))?;
                            Tok::Var(idx)
                        }
                        w => Tok::Ident(w.to_string()),
                    }
                }
                other => return Err(self.error("a token", format!("`{}`", other as char))),
            };
            out.push((tok, line, col));
        }
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{tok}`")))
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            expected: expected.to_string(),
            found: format!("`{}`", self.peek()),
        }
    }

    fn formula(&mut self) -> Result<SugaredFormula, ParseError> {
        match self.peek() {
            Tok::Forall | Tok::Exists | Tok::SForall | Tok::SExists | Tok::LExists => {
                let kw = self.bump();
                let var = match self.bump() {
                    Tok::Var(i) if i >= 1 => i,
                    other => {
                        let (line, col) = self.here();
                        return Err(ParseError::Syntax {
                            line,
                            col,
                            expected: "a variable".to_string(),
                            found: format!("`{other}`"),
                        });
                    }
                };
                let body = Box::new(self.formula()?);
                Ok(match kw {
                    Tok::Forall => SugaredFormula::Forall(var, body),
                    Tok::Exists => SugaredFormula::Exists(var, body),
                    Tok::SForall => SugaredFormula::StrictForall(var, body),
                    Tok::SExists => SugaredFormula::StrictExists(var, body),
                    _ => SugaredFormula::LehmannExists(var, body),
                })
            }
            _ => self.iff(),
        }
    }

    fn iff(&mut self) -> Result<SugaredFormula, ParseError> {
        let mut lhs = self.imp()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let rhs = self.imp()?;
            lhs = SugaredFormula::KleeneIff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn imp(&mut self) -> Result<SugaredFormula, ParseError> {
        let lhs = self.or()?;
        let build = match self.peek() {
            Tok::Arrow => SugaredFormula::KleeneImp,
            Tok::LukArrow => SugaredFormula::LukImp,
            Tok::StrictArrow => SugaredFormula::StrictImp,
            Tok::DtArrow1 => SugaredFormula::DtImp1,
            Tok::DtArrow2 => SugaredFormula::DtImp2,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.imp()?;
        Ok(build(Box::new(lhs), Box::new(rhs)))
    }

    fn or(&mut self) -> Result<SugaredFormula, ParseError> {
        let mut lhs = self.and()?;
        loop {
            let build = match self.peek() {
                Tok::Vee => SugaredFormula::Or,
                Tok::StrictOrTok => SugaredFormula::StrictOr,
                Tok::McOrTok => SugaredFormula::McCarthyOr,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.and()?;
            lhs = build(Box::new(lhs), Box::new(rhs));
        }
    }

    fn and(&mut self) -> Result<SugaredFormula, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let build = match self.peek() {
                Tok::Wedge => SugaredFormula::And,
                Tok::StrictAndTok => SugaredFormula::StrictAnd,
                Tok::McAndTok => SugaredFormula::McCarthyAnd,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = build(Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<SugaredFormula, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(SugaredFormula::Not(Box::new(self.unary_operand()?)))
            }
            Tok::StarTok => {
                // `*(` may open a function application when the signature
                // declares `*`; try the atom reading first and fall back to
                // the connective.
                if self.sig.func_arity("*").is_some() && *self.peek_at(1) == Tok::LParen {
                    let save = self.pos;
                    if let Ok(atom) = self.atom() {
                        return Ok(atom);
                    }
                    self.pos = save;
                }
                self.bump();
                Ok(SugaredFormula::Star(Box::new(self.unary_operand()?)))
            }
            _ => self.atom(),
        }
    }

    /// Operand of `not` / `*`: another unary, or a whole quantified formula.
    fn unary_operand(&mut self) -> Result<SugaredFormula, ParseError> {
        match self.peek() {
            Tok::Forall | Tok::Exists | Tok::SForall | Tok::SExists | Tok::LExists => {
                self.formula()
            }
            _ => self.unary(),
        }
    }

    fn atom(&mut self) -> Result<SugaredFormula, ParseError> {
        match self.peek().clone() {
            Tok::FalseLit => {
                self.bump();
                Ok(SugaredFormula::False)
            }
            Tok::TrueLit => {
                self.bump();
                Ok(SugaredFormula::True)
            }
            Tok::EBangTok => {
                self.bump();
                Ok(SugaredFormula::EBang(self.term()?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) if self.sig.rel_arity(&name).is_some() => {
                let (line, col) = self.here();
                self.bump();
                let args = self.paren_terms()?;
                let expected = self.sig.rel_arity(&name).unwrap();
                if args.len() != expected {
                    return Err(ParseError::ArityMismatch {
                        name,
                        expected,
                        got: args.len(),
                        line,
                        col,
                    });
                }
                Ok(SugaredFormula::Rel(name, args))
            }
            _ => {
                let lhs = self.term()?;
                self.expect(Tok::EqSign)?;
                let rhs = self.term()?;
                Ok(SugaredFormula::Eq(lhs, rhs))
            }
        }
    }

    fn paren_terms(&mut self) -> Result<Vec<SugaredTerm>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn term(&mut self) -> Result<SugaredTerm, ParseError> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Var(i) => {
                self.bump();
                Ok(SugaredTerm::Var(i))
            }
            Tok::Ite => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.formula()?;
                self.expect(Tok::Comma)?;
                let then = self.term()?;
                self.expect(Tok::Comma)?;
                let els = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(SugaredTerm::Ite(
                    Box::new(cond),
                    Box::new(then),
                    Box::new(els),
                ))
            }
            Tok::StarTok if self.sig.func_arity("*").is_some() => {
                self.bump();
                self.app_args("*", line, col)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.sig.has_const(&name) {
                    Ok(SugaredTerm::Const(name))
                } else if self.sig.func_arity(&name).is_some() {
                    self.app_args(&name, line, col)
                } else {
                    Err(ParseError::UnknownSymbol { name, line, col })
                }
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn app_args(&mut self, name: &str, line: usize, col: usize) -> Result<SugaredTerm, ParseError> {
        let args = self.paren_terms()?;
        let expected = self.sig.func_arity(name).unwrap();
        if args.len() != expected {
            return Err(ParseError::ArityMismatch {
                name: name.to_string(),
                expected,
                got: args.len(),
                line,
                col,
            });
        }
        Ok(SugaredTerm::App(name.to_string(), args))
    }
}

/// Parses a formula in the concrete syntax against `sig`.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<SugaredFormula, ParseError> {
    let toks = Lexer::new(text).tokenize()?;
    let mut p = Parser { toks, pos: 0, sig };
    let phi = p.formula()?;
    p.expect(Tok::Eof)?;
    Ok(phi)
}

/// Parses a core term (no `ite`) in the concrete syntax.
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, ParseError> {
    let toks = Lexer::new(text).tokenize()?;
    let mut p = Parser { toks, pos: 0, sig };
    let t = p.term()?;
    p.expect(Tok::Eof)?;
    t.into_core()
}

const LEVEL_QUANT: u8 = 0;
const LEVEL_IFF: u8 = 1;
const LEVEL_IMP: u8 = 2;
const LEVEL_OR: u8 = 3;
const LEVEL_AND: u8 = 4;
const LEVEL_UNARY: u8 = 5;
const LEVEL_ATOM: u8 = 6;

fn level(phi: &SugaredFormula) -> u8 {
    use SugaredFormula::*;
    match phi {
        Forall(..) | Exists(..) | StrictForall(..) | StrictExists(..) | LehmannExists(..) => {
            LEVEL_QUANT
        }
        KleeneIff(..) => LEVEL_IFF,
        KleeneImp(..) | LukImp(..) | StrictImp(..) | DtImp1(..) | DtImp2(..) => LEVEL_IMP,
        Or(..) | StrictOr(..) | McCarthyOr(..) => LEVEL_OR,
        And(..) | StrictAnd(..) | McCarthyAnd(..) => LEVEL_AND,
        Not(..) | Star(..) => LEVEL_UNARY,
        False | True | Eq(..) | Rel(..) | EBang(..) => LEVEL_ATOM,
    }
}

fn write_formula(out: &mut String, phi: &SugaredFormula, min_level: u8) {
    use SugaredFormula::*;
    if level(phi) < min_level {
        out.push('(');
        write_formula(out, phi, 0);
        out.push(')');
        return;
    }
    match phi {
        False => out.push('F'),
        True => out.push('T'),
        Eq(t1, t2) => {
            write_term(out, t1);
            out.push_str(" = ");
            write_term(out, t2);
        }
        Rel(r, args) => {
            out.push_str(r);
            write_args(out, args);
        }
        EBang(t) => {
            out.push_str("E! ");
            write_term(out, t);
        }
        Not(p) | Star(p) => {
            out.push_str(if matches!(phi, Not(_)) { "not " } else { "* " });
            // an equation under a unary operator reads better in parens
            if matches!(**p, Eq(..)) {
                out.push('(');
                write_formula(out, p, 0);
                out.push(')');
            } else {
                write_formula(out, p, LEVEL_UNARY);
            }
        }
        And(p, q) | StrictAnd(p, q) | McCarthyAnd(p, q) => {
            let op = match phi {
                And(..) => " /\\ ",
                StrictAnd(..) => " & ",
                _ => " && ",
            };
            write_formula(out, p, LEVEL_AND);
            out.push_str(op);
            write_formula(out, q, LEVEL_AND + 1);
        }
        Or(p, q) | StrictOr(p, q) | McCarthyOr(p, q) => {
            let op = match phi {
                Or(..) => " \\/ ",
                StrictOr(..) => " | ",
                _ => " || ",
            };
            write_formula(out, p, LEVEL_OR);
            out.push_str(op);
            write_formula(out, q, LEVEL_OR + 1);
        }
        KleeneImp(p, q) | LukImp(p, q) | StrictImp(p, q) | DtImp1(p, q) | DtImp2(p, q) => {
            let op = match phi {
                KleeneImp(..) => " -> ",
                LukImp(..) => " ~> ",
                StrictImp(..) => " &> ",
                DtImp1(..) => " => ",
                _ => " ==> ",
            };
            write_formula(out, p, LEVEL_IMP + 1);
            out.push_str(op);
            write_formula(out, q, LEVEL_IMP);
        }
        KleeneIff(p, q) => {
            write_formula(out, p, LEVEL_IFF);
            out.push_str(" <-> ");
            write_formula(out, q, LEVEL_IFF + 1);
        }
        Forall(i, p) | Exists(i, p) | StrictForall(i, p) | StrictExists(i, p)
        | LehmannExists(i, p) => {
            let kw = match phi {
                Forall(..) => "forall",
                Exists(..) => "exists",
                StrictForall(..) => "sforall",
                StrictExists(..) => "sexists",
                _ => "lexists",
            };
            out.push_str(kw);
            out.push_str(&format!(" v{i} "));
            write_formula(out, p, LEVEL_QUANT);
        }
    }
}

fn write_args(out: &mut String, args: &[SugaredTerm]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_term(out, a);
    }
    out.push(')');
}

fn write_term(out: &mut String, t: &SugaredTerm) {
    match t {
        SugaredTerm::Var(i) => out.push_str(&format!("v{i}")),
        SugaredTerm::Const(c) => out.push_str(c),
        SugaredTerm::App(f, args) => {
            out.push_str(f);
            write_args(out, args);
        }
        SugaredTerm::Ite(cond, then, els) => {
            out.push_str("ite(");
            write_formula(out, cond, 0);
            out.push_str(", ");
            write_term(out, then);
            out.push_str(", ");
            write_term(out, els);
            out.push(')');
        }
    }
}

/// Renders a formula with minimal parentheses; the output reparses to a
/// literally identical tree.
pub fn print_formula(phi: &SugaredFormula) -> String {
    let mut out = String::new();
    write_formula(&mut out, phi, 0);
    out
}

/// Renders a core term.
pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, &SugaredTerm::from(t.clone()));
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(&SugaredFormula::from(self.clone())))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl fmt::Display for SugaredFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_formula(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::literally_equal;

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_const("c").unwrap();
        s.add_const("d").unwrap();
        s.add_func("f", 1).unwrap();
        s.add_func("g", 2).unwrap();
        s.add_func("sqrt", 1).unwrap();
        s.add_func("*", 2).unwrap();
        s.add_rel("p", 1).unwrap();
        s.add_rel("q", 1).unwrap();
        s.add_rel("r", 1).unwrap();
        s.add_rel("lt", 2).unwrap();
        s
    }

    fn parse_core(text: &str) -> Formula {
        parse_formula(text, &sig()).unwrap().into_core().unwrap()
    }

    #[test]
    fn disjunction_associates_left() {
        let chained = parse_core("p(c) \\/ q(c) \\/ r(c)");
        let explicit = parse_core("(p(c) \\/ q(c)) \\/ r(c)");
        assert!(literally_equal(&chained, &explicit));
        let other = parse_core("p(c) \\/ (q(c) \\/ r(c))");
        assert!(!literally_equal(&chained, &other));
    }

    #[test]
    fn square_root_example_parses() {
        let phi = parse_core(
            "forall v1 ((not exists v2 (*(v2,v2) = v1)) \\/ (*(sqrt(v1),sqrt(v1)) = v1))",
        );
        let times = |a: Term, b: Term| Term::App("*".to_string(), vec![a, b]);
        let sqrt = |a: Term| Term::App("sqrt".to_string(), vec![a]);
        let expected = Formula::forall(
            1,
            Formula::or(
                Formula::not(Formula::exists(
                    2,
                    Formula::Eq(times(Term::Var(2), Term::Var(2)), Term::Var(1)),
                )),
                Formula::Eq(times(sqrt(Term::Var(1)), sqrt(Term::Var(1))), Term::Var(1)),
            ),
        );
        assert_eq!(phi, expected);
    }

    #[test]
    fn simple_literals() {
        assert_eq!(parse_formula("T", &sig()).unwrap(), SugaredFormula::True);
        assert_eq!(parse_formula("F", &sig()).unwrap(), SugaredFormula::False);
    }

    #[test]
    fn parse_terms() {
        let s = sig();
        assert_eq!(
            parse_term("f(v1)", &s).unwrap(),
            Term::App("f".to_string(), vec![Term::Var(1)])
        );
        assert_eq!(parse_term("v12", &s).unwrap(), Term::Var(12));
        let nested = parse_term("f(g(v1, c))", &s).unwrap();
        assert_eq!(print_term(&nested), "f(g(v1, c))");
        assert_eq!(parse_term(&print_term(&nested), &s).unwrap(), nested);
    }

    #[test]
    fn print_examples() {
        let phi = parse_core("p(c) \\/ q(c) \\/ r(c)");
        assert_eq!(print_formula(&phi.into()), "p(c) \\/ q(c) \\/ r(c)");
        let phi = parse_core("not (p(c) /\\ q(c))");
        assert_eq!(print_formula(&phi.into()), "not (p(c) /\\ q(c))");
        assert_eq!(print_formula(&SugaredFormula::False), "F");
    }

    #[test]
    fn quantifier_scope_extends_right() {
        let phi = parse_core("forall v1 p(v1) \\/ q(v1)");
        assert!(matches!(phi, Formula::Forall(1, _)));
        let phi = parse_core("(forall v1 p(v1)) \\/ q(v1)");
        assert!(matches!(phi, Formula::Or(..)));
    }

    #[test]
    fn precedence_tiers() {
        let phi = parse_formula("not p(c) /\\ q(c) \\/ r(c) -> p(d) <-> q(d)", &sig()).unwrap();
        let expected = SugaredFormula::KleeneIff(
            Box::new(SugaredFormula::KleeneImp(
                Box::new(parse_formula("not p(c) /\\ q(c) \\/ r(c)", &sig()).unwrap()),
                Box::new(parse_formula("p(d)", &sig()).unwrap()),
            )),
            Box::new(parse_formula("q(d)", &sig()).unwrap()),
        );
        assert_eq!(phi, expected);
        let or_part = parse_formula("not p(c) /\\ q(c) \\/ r(c)", &sig()).unwrap();
        assert!(matches!(or_part, SugaredFormula::Or(..)));
    }

    #[test]
    fn implications_associate_right() {
        let phi = parse_formula("p(c) -> q(c) ~> r(c)", &sig()).unwrap();
        assert!(matches!(phi, SugaredFormula::KleeneImp(_, ref rhs)
            if matches!(**rhs, SugaredFormula::LukImp(..))));
    }

    #[test]
    fn star_function_versus_connective() {
        let s = sig();
        let app = parse_formula("*(v1, v1) = v1", &s).unwrap();
        assert!(matches!(app, SugaredFormula::Eq(..)));
        let conn = parse_formula("* p(c)", &s).unwrap();
        assert!(matches!(conn, SugaredFormula::Star(..)));
        let wrapped = parse_formula("* (p(c) \\/ q(c))", &s).unwrap();
        assert!(matches!(wrapped, SugaredFormula::Star(..)));
    }

    #[test]
    fn ite_and_ebang_parse() {
        let s = sig();
        let phi = parse_formula("p(ite(q(c), c, d))", &s).unwrap();
        assert!(matches!(phi, SugaredFormula::Rel(..)));
        let text = print_formula(&phi);
        assert_eq!(parse_formula(&text, &s).unwrap(), phi);
        let phi = parse_formula("E! f(v1)", &s).unwrap();
        assert!(matches!(phi, SugaredFormula::EBang(..)));
    }

    #[test]
    fn errors_carry_positions() {
        let s = sig();
        match parse_formula("p(c) \\/\nunknown(c)", &s) {
            Err(ParseError::UnknownSymbol { name, line, .. }) => {
                assert_eq!(name, "unknown");
                assert_eq!(line, 2);
            }
            other => panic!("expected unknown symbol, got {other:?}"),
        }
        match parse_formula("f(c, c) = c", &s) {
            Err(ParseError::ArityMismatch {
                name,
                expected,
                got,
                ..
            }) => {
                assert_eq!((name.as_str(), expected, got), ("f", 1, 2));
            }
            other => panic!("expected arity mismatch, got {other:?}"),
        }
        assert!(matches!(
            parse_formula("p(c) \\/", &s),
            Err(ParseError::Syntax { .. })
        ));
    }

    mod roundtrip {
        use super::*;
        use proptest::prelude::*;

        fn term_strategy() -> impl Strategy<Value = SugaredTerm> {
            let leaf = prop_oneof![
                (1u32..4).prop_map(SugaredTerm::Var),
                Just(SugaredTerm::Const("c".to_string())),
                Just(SugaredTerm::Const("d".to_string())),
            ];
            leaf.prop_recursive(3, 12, 2, |inner| {
                prop_oneof![
                    inner
                        .clone()
                        .prop_map(|t| SugaredTerm::App("f".to_string(), vec![t])),
                    (inner.clone(), inner)
                        .prop_map(|(a, b)| SugaredTerm::App("g".to_string(), vec![a, b])),
                ]
            })
        }

        fn formula_strategy() -> impl Strategy<Value = SugaredFormula> {
            let leaf = prop_oneof![
                Just(SugaredFormula::False),
                Just(SugaredFormula::True),
                term_strategy().prop_map(|t| SugaredFormula::Rel("p".to_string(), vec![t])),
                (term_strategy(), term_strategy()).prop_map(|(a, b)| SugaredFormula::Eq(a, b)),
                term_strategy().prop_map(SugaredFormula::EBang),
            ];
            leaf.prop_recursive(4, 24, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|p| SugaredFormula::Not(Box::new(p))),
                    inner
                        .clone()
                        .prop_map(|p| SugaredFormula::Star(Box::new(p))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::And(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::Or(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::StrictAnd(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::StrictOr(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::McCarthyAnd(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::McCarthyOr(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::KleeneImp(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::LukImp(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::StrictImp(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::DtImp1(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::DtImp2(Box::new(a), Box::new(b))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| SugaredFormula::KleeneIff(Box::new(a), Box::new(b))),
                    (1u32..4, inner.clone())
                        .prop_map(|(v, p)| SugaredFormula::Forall(v, Box::new(p))),
                    (1u32..4, inner.clone())
                        .prop_map(|(v, p)| SugaredFormula::Exists(v, Box::new(p))),
                    (1u32..4, inner.clone())
                        .prop_map(|(v, p)| SugaredFormula::StrictForall(v, Box::new(p))),
                    (1u32..4, inner.clone())
                        .prop_map(|(v, p)| SugaredFormula::StrictExists(v, Box::new(p))),
                    (1u32..4, inner)
                        .prop_map(|(v, p)| SugaredFormula::LehmannExists(v, Box::new(p))),
                ]
            })
        }

        proptest! {
            #[test]
            fn print_then_parse_is_identity(phi in formula_strategy()) {
                let text = print_formula(&phi);
                let reparsed = parse_formula(&text, &sig())
                    .unwrap_or_else(|e| panic!("failed to reparse `{text}`: {e}"));
                prop_assert_eq!(reparsed, phi);
            }
        }
    }
}
