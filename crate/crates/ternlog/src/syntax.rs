//! Core abstract syntax: terms, formulas, and signatures.
//!
//! Variables are bare positive indices: `Var(3)` is the variable symbol
//! `v3`. Formula comparison (`==`) is literal structural identity of the
//! desugared trees; no quotienting by bound-variable names happens anywhere
//! in this module. Callers that need fresh bound names use
//! [`Formula::rename_bound_fresh`], and [`Formula::substitute`] refuses to
//! capture rather than renaming silently.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// 1-based index of a variable symbol.
pub type VarIndex = u32;

/// Names that may not be declared in a signature because the concrete
/// syntax treats them as keywords.
const RESERVED_NAMES: &[&str] = &[
    "not", "forall", "exists", "sforall", "sexists", "lexists", "ite",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("name `{0}` is already declared")]
    Duplicate(String),
    #[error("name `{0}` is reserved by the concrete syntax")]
    Reserved(String),
    #[error("`{0}` is not a legal symbol name")]
    BadName(String),
    #[error("function or relation `{0}` must have positive arity")]
    ZeroArity(String),
}

/// Constant, function, and relation symbols together with their arities.
///
/// The three name sets are kept mutually disjoint, and every declared arity
/// is positive. Signatures are finite.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    consts: BTreeSet<String>,
    funcs: BTreeMap<String, usize>,
    rels: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    fn check_name(&self, name: &str) -> Result<(), SignatureError> {
        let legal_ident = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_lowercase())
            && name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        // `*` is admitted as a function-style name so that familiar
        // multiplication examples can be written verbatim.
        if !legal_ident && name != "*" {
            return Err(SignatureError::BadName(name.to_string()));
        }
        if RESERVED_NAMES.contains(&name) || looks_like_variable(name) {
            return Err(SignatureError::Reserved(name.to_string()));
        }
        if self.consts.contains(name) || self.funcs.contains_key(name) || self.rels.contains_key(name) {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        Ok(())
    }

    pub fn add_const(&mut self, name: &str) -> Result<(), SignatureError> {
        self.check_name(name)?;
        self.consts.insert(name.to_string());
        Ok(())
    }

    pub fn add_func(&mut self, name: &str, arity: usize) -> Result<(), SignatureError> {
        self.check_name(name)?;
        if arity == 0 {
            return Err(SignatureError::ZeroArity(name.to_string()));
        }
        self.funcs.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn add_rel(&mut self, name: &str, arity: usize) -> Result<(), SignatureError> {
        self.check_name(name)?;
        if arity == 0 {
            return Err(SignatureError::ZeroArity(name.to_string()));
        }
        self.rels.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn has_const(&self, name: &str) -> bool {
        self.consts.contains(name)
    }

    pub fn func_arity(&self, name: &str) -> Option<usize> {
        self.funcs.get(name).copied()
    }

    pub fn rel_arity(&self, name: &str) -> Option<usize> {
        self.rels.get(name).copied()
    }

    pub fn consts(&self) -> impl Iterator<Item = &str> {
        self.consts.iter().map(|s| s.as_str())
    }

    pub fn funcs(&self) -> impl Iterator<Item = (&str, usize)> {
        self.funcs.iter().map(|(s, &a)| (s.as_str(), a))
    }

    pub fn rels(&self) -> impl Iterator<Item = (&str, usize)> {
        self.rels.iter().map(|(s, &a)| (s.as_str(), a))
    }
}

/// True for names of the shape `v<digits>`, which the concrete syntax
/// lexes as variable symbols.
pub(crate) fn looks_like_variable(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next() == Some('v') && {
        let rest = chars.as_str();
        !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())
    }
}

/// A term: a variable, a constant, or a function application.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(VarIndex),
    Const(String),
    App(String, Vec<Term>),
}

impl Term {
    /// Largest variable index occurring in the term; 0 if variable-free.
    pub fn arity(&self) -> VarIndex {
        match self {
            Term::Var(i) => *i,
            Term::Const(_) => 0,
            Term::App(_, args) => args.iter().map(Term::arity).max().unwrap_or(0),
        }
    }

    /// All variable indices occurring in the term.
    pub fn vars(&self) -> BTreeSet<VarIndex> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarIndex>) {
        match self {
            Term::Var(i) => {
                out.insert(*i);
            }
            Term::Const(_) => {}
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    /// All function symbols occurring in the term.
    pub fn func_symbols(&self, out: &mut BTreeSet<String>) {
        if let Term::App(f, args) = self {
            out.insert(f.clone());
            for a in args {
                a.func_symbols(out);
            }
        }
    }

    /// Simultaneously replaces variables according to `map`.
    pub fn substitute_many(&self, map: &BTreeMap<VarIndex, Term>) -> Term {
        match self {
            Term::Var(i) => map.get(i).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::App(f, args) => Term::App(
                f.clone(),
                args.iter().map(|a| a.substitute_many(map)).collect(),
            ),
        }
    }
}

/// A formula of the core language.
///
/// `False` and `True` are the atomic formulas for the two classical truth
/// values; there is deliberately no atom for the undefined value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    False,
    True,
    Eq(Term, Term),
    Rel(String, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Forall(VarIndex, Box<Formula>),
    Exists(VarIndex, Box<Formula>),
}

/// Convenience constructors; the `Box`es get noisy otherwise.
impl Formula {
    pub fn not(phi: Formula) -> Formula {
        Formula::Not(Box::new(phi))
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Formula {
        Formula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Formula {
        Formula::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn forall(var: VarIndex, body: Formula) -> Formula {
        Formula::Forall(var, Box::new(body))
    }

    pub fn exists(var: VarIndex, body: Formula) -> Formula {
        Formula::Exists(var, Box::new(body))
    }

    /// Left-associated conjunction of a nonempty list.
    pub fn and_chain<I: IntoIterator<Item = Formula>>(parts: I) -> Formula {
        let mut it = parts.into_iter();
        let first = it.next().expect("and_chain needs at least one conjunct");
        it.fold(first, Formula::and)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WfError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("variable index 0 is not a variable; indices start at 1")]
    ZeroVariable,
}

/// Substituting `t` for `v{var}` would let a binder on `v{captured}`
/// capture a variable of `t`.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("substituting for v{var} would capture v{captured}")]
pub struct CaptureError {
    pub var: VarIndex,
    pub captured: VarIndex,
}

/// Checks `t` against the signature: all names resolve, all argument
/// counts match declared arities, all variable indices are positive.
pub fn check_term(sig: &Signature, t: &Term) -> Result<(), WfError> {
    match t {
        Term::Var(0) => Err(WfError::ZeroVariable),
        Term::Var(_) => Ok(()),
        Term::Const(c) => {
            if sig.has_const(c) {
                Ok(())
            } else {
                Err(WfError::UnknownSymbol(c.clone()))
            }
        }
        Term::App(f, args) => {
            let expected = sig
                .func_arity(f)
                .ok_or_else(|| WfError::UnknownSymbol(f.clone()))?;
            if args.len() != expected {
                return Err(WfError::ArityMismatch {
                    name: f.clone(),
                    expected,
                    got: args.len(),
                });
            }
            args.iter().try_for_each(|a| check_term(sig, a))
        }
    }
}

/// Checks `phi` against the signature, including every term inside it.
pub fn check_formula(sig: &Signature, phi: &Formula) -> Result<(), WfError> {
    match phi {
        Formula::False | Formula::True => Ok(()),
        Formula::Eq(t1, t2) => {
            check_term(sig, t1)?;
            check_term(sig, t2)
        }
        Formula::Rel(r, args) => {
            let expected = sig
                .rel_arity(r)
                .ok_or_else(|| WfError::UnknownSymbol(r.clone()))?;
            if args.len() != expected {
                return Err(WfError::ArityMismatch {
                    name: r.clone(),
                    expected,
                    got: args.len(),
                });
            }
            args.iter().try_for_each(|a| check_term(sig, a))
        }
        Formula::Not(p) => check_formula(sig, p),
        Formula::And(p, q) | Formula::Or(p, q) => {
            check_formula(sig, p)?;
            check_formula(sig, q)
        }
        Formula::Forall(i, p) | Formula::Exists(i, p) => {
            if *i == 0 {
                return Err(WfError::ZeroVariable);
            }
            check_formula(sig, p)
        }
    }
}

impl Formula {
    /// Largest index occurring free; 0 for closed formulas.
    pub fn arity(&self) -> VarIndex {
        self.free_vars().into_iter().max().unwrap_or(0)
    }

    /// Indices with at least one free occurrence.
    pub fn free_vars(&self) -> BTreeSet<VarIndex> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out, &mut Vec::new());
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<VarIndex>, bound: &mut Vec<VarIndex>) {
        match self {
            Formula::False | Formula::True => {}
            Formula::Eq(t1, t2) => {
                for v in t1.vars().union(&t2.vars()) {
                    if !bound.contains(v) {
                        out.insert(*v);
                    }
                }
            }
            Formula::Rel(_, args) => {
                for a in args {
                    for v in a.vars() {
                        if !bound.contains(&v) {
                            out.insert(v);
                        }
                    }
                }
            }
            Formula::Not(p) => p.collect_free(out, bound),
            Formula::And(p, q) | Formula::Or(p, q) => {
                p.collect_free(out, bound);
                q.collect_free(out, bound);
            }
            Formula::Forall(i, p) | Formula::Exists(i, p) => {
                bound.push(*i);
                p.collect_free(out, bound);
                bound.pop();
            }
        }
    }

    /// True iff `var` has a free occurrence.
    pub fn has_free(&self, var: VarIndex) -> bool {
        self.free_vars().contains(&var)
    }

    /// All variable indices occurring anywhere, free or bound, including
    /// binder positions.
    pub fn all_vars(&self) -> BTreeSet<VarIndex> {
        let mut out = BTreeSet::new();
        self.collect_all_vars(&mut out);
        out
    }

    fn collect_all_vars(&self, out: &mut BTreeSet<VarIndex>) {
        match self {
            Formula::False | Formula::True => {}
            Formula::Eq(t1, t2) => {
                t1.collect_vars(out);
                t2.collect_vars(out);
            }
            Formula::Rel(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            Formula::Not(p) => p.collect_all_vars(out),
            Formula::And(p, q) | Formula::Or(p, q) => {
                p.collect_all_vars(out);
                q.collect_all_vars(out);
            }
            Formula::Forall(i, p) | Formula::Exists(i, p) => {
                out.insert(*i);
                p.collect_all_vars(out);
            }
        }
    }

    /// True iff `var` occurs anywhere, counting binder positions.
    pub fn occurs(&self, var: VarIndex) -> bool {
        self.all_vars().contains(&var)
    }

    /// All function symbols occurring in the formula.
    pub fn func_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_funcs(&mut out);
        out
    }

    fn collect_funcs(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::False | Formula::True => {}
            Formula::Eq(t1, t2) => {
                t1.func_symbols(out);
                t2.func_symbols(out);
            }
            Formula::Rel(_, args) => {
                for a in args {
                    a.func_symbols(out);
                }
            }
            Formula::Not(p) => p.collect_funcs(out),
            Formula::And(p, q) | Formula::Or(p, q) => {
                p.collect_funcs(out);
                q.collect_funcs(out);
            }
            Formula::Forall(_, p) | Formula::Exists(_, p) => p.collect_funcs(out),
        }
    }

    /// True iff substituting `t` for free `v{var}` captures no variable of
    /// `t`: no free occurrence of `v{var}` sits under a binder of any
    /// variable occurring in `t`.
    pub fn is_free_for(&self, t: &Term, var: VarIndex) -> bool {
        self.free_for_rec(&t.vars(), var)
    }

    fn free_for_rec(&self, tvars: &BTreeSet<VarIndex>, var: VarIndex) -> bool {
        match self {
            Formula::False | Formula::True | Formula::Eq(..) | Formula::Rel(..) => true,
            Formula::Not(p) => p.free_for_rec(tvars, var),
            Formula::And(p, q) | Formula::Or(p, q) => {
                p.free_for_rec(tvars, var) && q.free_for_rec(tvars, var)
            }
            Formula::Forall(i, p) | Formula::Exists(i, p) => {
                if *i == var {
                    true
                } else if tvars.contains(i) && p.has_free(var) {
                    false
                } else {
                    p.free_for_rec(tvars, var)
                }
            }
        }
    }

    /// Replaces every free occurrence of `v{var}` by `t`.
    ///
    /// Fails with [`CaptureError`] when `t` is not free for `v{var}` here;
    /// callers that want renaming apply [`Formula::rename_bound_fresh`]
    /// first. This keeps every substitution step auditable.
    pub fn substitute(&self, var: VarIndex, t: &Term) -> Result<Formula, CaptureError> {
        let mut map = BTreeMap::new();
        map.insert(var, t.clone());
        self.substitute_many(&map)
    }

    /// Simultaneously replaces free occurrences of each mapped variable.
    pub fn substitute_many(
        &self,
        map: &BTreeMap<VarIndex, Term>,
    ) -> Result<Formula, CaptureError> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        match self {
            Formula::False | Formula::True => Ok(self.clone()),
            Formula::Eq(t1, t2) => Ok(Formula::Eq(
                t1.substitute_many(map),
                t2.substitute_many(map),
            )),
            Formula::Rel(r, args) => Ok(Formula::Rel(
                r.clone(),
                args.iter().map(|a| a.substitute_many(map)).collect(),
            )),
            Formula::Not(p) => Ok(Formula::not(p.substitute_many(map)?)),
            Formula::And(p, q) => Ok(Formula::and(
                p.substitute_many(map)?,
                q.substitute_many(map)?,
            )),
            Formula::Or(p, q) => Ok(Formula::or(
                p.substitute_many(map)?,
                q.substitute_many(map)?,
            )),
            Formula::Forall(i, p) | Formula::Exists(i, p) => {
                let mut inner = map.clone();
                inner.remove(i);
                for (&v, t) in &inner {
                    if p.has_free(v) && t.vars().contains(i) {
                        return Err(CaptureError {
                            var: v,
                            captured: *i,
                        });
                    }
                }
                let body = p.substitute_many(&inner)?;
                Ok(match self {
                    Formula::Forall(..) => Formula::forall(*i, body),
                    _ => Formula::exists(*i, body),
                })
            }
        }
    }

    /// Renames bound variables so that no binder index remains in `avoid`.
    ///
    /// Fresh indices are the smallest not in `avoid` nor occurring in the
    /// formula, allocated upward in preorder. Free variables are untouched
    /// and the result differs from `self` only in bound-variable names.
    pub fn rename_bound_fresh(&self, avoid: &BTreeSet<VarIndex>) -> Formula {
        let mut used: BTreeSet<VarIndex> = self.all_vars();
        used.extend(avoid.iter().copied());
        self.rename_avoiding(avoid, &mut used)
    }

    fn rename_avoiding(&self, avoid: &BTreeSet<VarIndex>, used: &mut BTreeSet<VarIndex>) -> Formula {
        match self {
            Formula::False | Formula::True | Formula::Eq(..) | Formula::Rel(..) => self.clone(),
            Formula::Not(p) => Formula::not(p.rename_avoiding(avoid, used)),
            Formula::And(p, q) => Formula::and(
                p.rename_avoiding(avoid, used),
                q.rename_avoiding(avoid, used),
            ),
            Formula::Or(p, q) => Formula::or(
                p.rename_avoiding(avoid, used),
                q.rename_avoiding(avoid, used),
            ),
            Formula::Forall(i, p) | Formula::Exists(i, p) => {
                let (j, body) = if avoid.contains(i) {
                    let fresh = alloc_fresh(used);
                    let renamed = p
                        .substitute(*i, &Term::Var(fresh))
                        .expect("fresh index cannot be captured");
                    (fresh, renamed.rename_avoiding(avoid, used))
                } else {
                    (*i, p.rename_avoiding(avoid, used))
                };
                match self {
                    Formula::Forall(..) => Formula::forall(j, body),
                    _ => Formula::exists(j, body),
                }
            }
        }
    }

    /// Renames every binder to `*next`, `*next + 1`, … in preorder. The
    /// caller must start above every index occurring in the formula.
    pub(crate) fn renumber_binders(&self, next: &mut VarIndex) -> Formula {
        match self {
            Formula::False | Formula::True | Formula::Eq(..) | Formula::Rel(..) => self.clone(),
            Formula::Not(p) => Formula::not(p.renumber_binders(next)),
            Formula::And(p, q) => {
                let l = p.renumber_binders(next);
                let r = q.renumber_binders(next);
                Formula::and(l, r)
            }
            Formula::Or(p, q) => {
                let l = p.renumber_binders(next);
                let r = q.renumber_binders(next);
                Formula::or(l, r)
            }
            Formula::Forall(i, p) | Formula::Exists(i, p) => {
                let fresh = *next;
                *next += 1;
                let body = p
                    .substitute(*i, &Term::Var(fresh))
                    .expect("fresh index cannot be captured")
                    .renumber_binders(next);
                match self {
                    Formula::Forall(..) => Formula::forall(fresh, body),
                    _ => Formula::exists(fresh, body),
                }
            }
        }
    }
}

fn alloc_fresh(used: &mut BTreeSet<VarIndex>) -> VarIndex {
    let mut i = 1;
    while used.contains(&i) {
        i += 1;
    }
    used.insert(i);
    i
}

/// Literal identity of two formulas after desugaring. This is plain
/// structural equality; it is a named function because "the same formula"
/// is a load-bearing notion in the proof checker.
pub fn literally_equal(phi: &Formula, psi: &Formula) -> bool {
    phi == psi
}
