//! Finite structures and the ternary semantics.
//!
//! A structure interprets constants as domain elements, function symbols as
//! partial functions given by explicit tables (with `None` marking the
//! undefined entries), and relation symbols as tuple sets. Term evaluation
//! is strict: any undefined subterm makes the whole term undefined. Formula
//! evaluation is total over the three truth values, with conjunction and
//! disjunction as minimum and maximum under `F < U < T` and the quantifiers
//! as minimum and maximum over the domain.
//!
//! The module also provides exhaustive structure enumeration and a bounded
//! countermodel search. `NoneUpToBound` is explicitly inconclusive: it says
//! nothing about larger domains.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::isdef::Theory;
use crate::syntax::{Formula, Signature, Term, VarIndex};

/// The three truth values, ordered `F < U < T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TruthValue {
    False,
    Undef,
    True,
}

impl TruthValue {
    pub const ALL: [TruthValue; 3] = [TruthValue::False, TruthValue::Undef, TruthValue::True];

    pub fn is_true(self) -> bool {
        self == TruthValue::True
    }

    /// True or false, i.e. not undefined.
    pub fn is_classical(self) -> bool {
        self != TruthValue::Undef
    }
}

impl std::ops::Not for TruthValue {
    type Output = TruthValue;

    fn not(self) -> TruthValue {
        match self {
            TruthValue::False => TruthValue::True,
            TruthValue::Undef => TruthValue::Undef,
            TruthValue::True => TruthValue::False,
        }
    }
}

impl std::ops::BitAnd for TruthValue {
    type Output = TruthValue;

    fn bitand(self, rhs: TruthValue) -> TruthValue {
        self.min(rhs)
    }
}

impl std::ops::BitOr for TruthValue {
    type Output = TruthValue;

    fn bitor(self, rhs: TruthValue) -> TruthValue {
        self.max(rhs)
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruthValue::False => "F",
            TruthValue::Undef => "U",
            TruthValue::True => "T",
        })
    }
}

/// A partial function table over the domain `{0, …, n-1}`.
///
/// Entries are indexed by tuple rank: the rank of `(d1, …, dk)` is the
/// value of the digits `d1 … dk` read as a base-`n` number, first
/// coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionTable {
    arity: usize,
    entries: Vec<Option<usize>>,
}

/// A relation table over the domain, indexed like [`FunctionTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTable {
    arity: usize,
    entries: Vec<bool>,
}

fn tuple_rank(domain_size: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &d| acc * domain_size + d)
}

fn rank_tuple(domain_size: usize, arity: usize, mut rank: usize) -> Vec<usize> {
    let mut out = vec![0; arity];
    for slot in out.iter_mut().rev() {
        *slot = rank % domain_size;
        rank /= domain_size;
    }
    out
}

/// A finite structure: nonempty domain `{0, …, n-1}` plus interpretations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    domain_size: usize,
    consts: BTreeMap<String, usize>,
    funcs: BTreeMap<String, FunctionTable>,
    rels: BTreeMap<String, RelationTable>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("structure does not interpret `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` applied to {got} argument(s), table has arity {expected}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("element {element} outside domain of size {domain_size}")]
    ElementOutOfRange { element: usize, domain_size: usize },
    #[error("domain must be nonempty")]
    EmptyDomain,
}

impl Structure {
    /// A structure over `sig` with every constant 0, every function
    /// undefined everywhere, and every relation empty.
    pub fn new(sig: &Signature, domain_size: usize) -> Result<Structure, EvalError> {
        if domain_size == 0 {
            return Err(EvalError::EmptyDomain);
        }
        let consts = sig.consts().map(|c| (c.to_string(), 0)).collect();
        let funcs = sig
            .funcs()
            .map(|(f, a)| {
                (
                    f.to_string(),
                    FunctionTable {
                        arity: a,
                        entries: vec![None; domain_size.pow(a as u32)],
                    },
                )
            })
            .collect();
        let rels = sig
            .rels()
            .map(|(r, a)| {
                (
                    r.to_string(),
                    RelationTable {
                        arity: a,
                        entries: vec![false; domain_size.pow(a as u32)],
                    },
                )
            })
            .collect();
        Ok(Structure {
            domain_size,
            consts,
            funcs,
            rels,
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    fn check_element(&self, element: usize) -> Result<(), EvalError> {
        if element < self.domain_size {
            Ok(())
        } else {
            Err(EvalError::ElementOutOfRange {
                element,
                domain_size: self.domain_size,
            })
        }
    }

    pub fn set_const(&mut self, name: &str, element: usize) -> Result<(), EvalError> {
        self.check_element(element)?;
        match self.consts.get_mut(name) {
            Some(slot) => {
                *slot = element;
                Ok(())
            }
            None => Err(EvalError::UnknownSymbol(name.to_string())),
        }
    }

    pub fn set_func(
        &mut self,
        name: &str,
        tuple: &[usize],
        value: Option<usize>,
    ) -> Result<(), EvalError> {
        for &d in tuple {
            self.check_element(d)?;
        }
        if let Some(v) = value {
            self.check_element(v)?;
        }
        let n = self.domain_size;
        let table = self
            .funcs
            .get_mut(name)
            .ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))?;
        if tuple.len() != table.arity {
            return Err(EvalError::ArityMismatch {
                name: name.to_string(),
                expected: table.arity,
                got: tuple.len(),
            });
        }
        table.entries[tuple_rank(n, tuple)] = value;
        Ok(())
    }

    pub fn set_rel(&mut self, name: &str, tuple: &[usize], member: bool) -> Result<(), EvalError> {
        for &d in tuple {
            self.check_element(d)?;
        }
        let n = self.domain_size;
        let table = self
            .rels
            .get_mut(name)
            .ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))?;
        if tuple.len() != table.arity {
            return Err(EvalError::ArityMismatch {
                name: name.to_string(),
                expected: table.arity,
                got: tuple.len(),
            });
        }
        table.entries[tuple_rank(n, tuple)] = member;
        Ok(())
    }

    pub fn const_value(&self, name: &str) -> Result<usize, EvalError> {
        self.consts
            .get(name)
            .copied()
            .ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))
    }

    pub fn func_value(&self, name: &str, tuple: &[usize]) -> Result<Option<usize>, EvalError> {
        let table = self
            .funcs
            .get(name)
            .ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))?;
        if tuple.len() != table.arity {
            return Err(EvalError::ArityMismatch {
                name: name.to_string(),
                expected: table.arity,
                got: tuple.len(),
            });
        }
        Ok(table.entries[tuple_rank(self.domain_size, tuple)])
    }

    pub fn rel_holds(&self, name: &str, tuple: &[usize]) -> Result<bool, EvalError> {
        let table = self
            .rels
            .get(name)
            .ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))?;
        if tuple.len() != table.arity {
            return Err(EvalError::ArityMismatch {
                name: name.to_string(),
                expected: table.arity,
                got: tuple.len(),
            });
        }
        Ok(table.entries[tuple_rank(self.domain_size, tuple)])
    }

    /// True when every function table is total.
    pub fn all_funcs_total(&self) -> bool {
        self.funcs
            .values()
            .all(|t| t.entries.iter().all(Option::is_some))
    }
}

/// A total valuation of the variables: an explicit finite map plus a
/// default element for every other index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<VarIndex, usize>,
    default: usize,
}

impl Assignment {
    pub fn constant(default: usize) -> Assignment {
        Assignment {
            values: BTreeMap::new(),
            default,
        }
    }

    pub fn get(&self, var: VarIndex) -> usize {
        self.values.get(&var).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, var: VarIndex, element: usize) {
        self.values.insert(var, element);
    }

    /// The assignment that maps `var` to `element` and otherwise agrees.
    pub fn with(&self, var: VarIndex, element: usize) -> Assignment {
        let mut out = self.clone();
        out.set(var, element);
        out
    }

    pub fn explicit_entries(&self) -> impl Iterator<Item = (VarIndex, usize)> + '_ {
        self.values.iter().map(|(&v, &d)| (v, d))
    }

    pub fn default_element(&self) -> usize {
        self.default
    }
}

/// Strict evaluation of a term; `None` is the undefined result.
pub fn eval_term(
    structure: &Structure,
    assignment: &Assignment,
    term: &Term,
) -> Result<Option<usize>, EvalError> {
    match term {
        Term::Var(i) => {
            let d = assignment.get(*i);
            structure.check_element(d)?;
            Ok(Some(d))
        }
        Term::Const(c) => Ok(Some(structure.const_value(c)?)),
        Term::App(f, args) => {
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                match eval_term(structure, assignment, a)? {
                    Some(v) => values.push(v),
                    None => return Ok(None),
                }
            }
            structure.func_value(f, &values)
        }
    }
}

/// Total ternary evaluation of a formula.
pub fn eval_formula(
    structure: &Structure,
    assignment: &Assignment,
    phi: &Formula,
) -> Result<TruthValue, EvalError> {
    match phi {
        Formula::False => Ok(TruthValue::False),
        Formula::True => Ok(TruthValue::True),
        Formula::Eq(t1, t2) => {
            let v1 = eval_term(structure, assignment, t1)?;
            let v2 = eval_term(structure, assignment, t2)?;
            Ok(match (v1, v2) {
                (Some(a), Some(b)) if a == b => TruthValue::True,
                (Some(_), Some(_)) => TruthValue::False,
                _ => TruthValue::Undef,
            })
        }
        Formula::Rel(r, args) => {
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                match eval_term(structure, assignment, a)? {
                    Some(v) => values.push(v),
                    None => return Ok(TruthValue::Undef),
                }
            }
            Ok(if structure.rel_holds(r, &values)? {
                TruthValue::True
            } else {
                TruthValue::False
            })
        }
        Formula::Not(p) => Ok(!eval_formula(structure, assignment, p)?),
        Formula::And(p, q) => {
            let a = eval_formula(structure, assignment, p)?;
            if a == TruthValue::False {
                return Ok(TruthValue::False);
            }
            Ok(a & eval_formula(structure, assignment, q)?)
        }
        Formula::Or(p, q) => {
            let a = eval_formula(structure, assignment, p)?;
            if a == TruthValue::True {
                return Ok(TruthValue::True);
            }
            Ok(a | eval_formula(structure, assignment, q)?)
        }
        Formula::Forall(i, p) => {
            let mut acc = TruthValue::True;
            for d in 0..structure.domain_size {
                acc = acc & eval_formula(structure, &assignment.with(*i, d), p)?;
                if acc == TruthValue::False {
                    break;
                }
            }
            Ok(acc)
        }
        Formula::Exists(i, p) => {
            let mut acc = TruthValue::False;
            for d in 0..structure.domain_size {
                acc = acc | eval_formula(structure, &assignment.with(*i, d), p)?;
                if acc == TruthValue::True {
                    break;
                }
            }
            Ok(acc)
        }
    }
}

/// True iff the formula evaluates to `T`; `U` does not satisfy.
pub fn holds(
    structure: &Structure,
    assignment: &Assignment,
    phi: &Formula,
) -> Result<bool, EvalError> {
    Ok(eval_formula(structure, assignment, phi)?.is_true())
}

/// Checks that every function's definedness pattern agrees with the
/// theory's definedness formula for it: for every function symbol `f` and
/// tuple, the formula for `f` evaluates to `T` exactly on the tuples where
/// the table is defined.
pub fn models_isdef(structure: &Structure, theory: &Theory) -> Result<bool, EvalError> {
    for (f, arity) in theory.sig().funcs() {
        let guard = theory
            .isdef_of(f)
            .ok_or_else(|| EvalError::UnknownSymbol(f.to_string()))?;
        let n = structure.domain_size;
        for rank in 0..n.pow(arity as u32) {
            let tuple = rank_tuple(n, arity, rank);
            let mut nu = Assignment::constant(0);
            for (i, &d) in tuple.iter().enumerate() {
                nu.set(i as VarIndex + 1, d);
            }
            let guard_true = eval_formula(structure, &nu, guard)?.is_true();
            let defined = structure.func_value(f, &tuple)?.is_some();
            if guard_true != defined {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A model of the theory: the structure matches the definedness formulas
/// and the assignment makes every axiom true.
pub fn is_model(
    structure: &Structure,
    assignment: &Assignment,
    theory: &Theory,
) -> Result<bool, EvalError> {
    if !models_isdef(structure, theory)? {
        return Ok(false);
    }
    for axiom in theory.axioms() {
        if !holds(structure, assignment, axiom)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Enumerates every structure over `sig` with domain `{0, …, n-1}` exactly
/// once.
///
/// The order is lexicographic in the flattened interpretation vector:
/// constant values in name order, then function table entries in (name,
/// tuple rank) order with `undef < 0 < 1 < …`, then relation table entries
/// in (name, tuple rank) order with `absent < present`. The last entry
/// varies fastest.
pub fn enumerate_structures(sig: &Signature, domain_size: usize) -> StructureIter {
    StructureIter {
        next: Structure::new(sig, domain_size).ok(),
    }
}

pub struct StructureIter {
    next: Option<Structure>,
}

impl Iterator for StructureIter {
    type Item = Structure;

    fn next(&mut self) -> Option<Structure> {
        let current = self.next.clone()?;
        self.next = advance(current.clone());
        Some(current)
    }
}

/// Odometer increment over the interpretation vector; `None` on wrap.
fn advance(mut s: Structure) -> Option<Structure> {
    let n = s.domain_size;
    for table in s.rels.values_mut().rev() {
        for slot in table.entries.iter_mut().rev() {
            if !*slot {
                *slot = true;
                return Some(s);
            }
            *slot = false;
        }
    }
    for table in s.funcs.values_mut().rev() {
        for slot in table.entries.iter_mut().rev() {
            let next = match *slot {
                None => Some(0),
                Some(d) if d + 1 < n => Some(d + 1),
                Some(_) => None,
            };
            if next.is_some() {
                *slot = next;
                return Some(s);
            }
            *slot = None;
        }
    }
    for value in s.consts.values_mut().rev() {
        if *value + 1 < n {
            *value += 1;
            return Some(s);
        }
        *value = 0;
    }
    None
}

/// Outcome of a bounded countermodel search.
///
/// `NoneUpToBound` means no countermodel exists with domain size up to the
/// bound. It is inconclusive about logical consequence: larger domains may
/// still refute the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Countermodel {
        structure: Structure,
        assignment: Assignment,
    },
    NoneUpToBound {
        max_domain: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("enumeration budget exhausted after {examined} structures")]
    BudgetExceeded { examined: u64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Searches for a model of the theory that falsifies `phi`, trying domain
/// sizes `1..=max_domain` in order.
///
/// The witness is the first countermodel in enumeration order: structures
/// as in [`enumerate_structures`], and for each structure the assignments
/// to `v1..vm` (`m` the largest free index in the axioms and `phi`) in
/// lexicographic order with the last variable fastest. `budget` caps the
/// total number of structures examined. `jobs > 1` partitions the scan
/// while still reporting the first witness in enumeration order.
pub fn find_countermodel(
    theory: &Theory,
    phi: &Formula,
    max_domain: usize,
    budget: u64,
    jobs: usize,
) -> Result<SearchOutcome, SearchError> {
    let mut max_free = phi.arity();
    for axiom in theory.axioms() {
        max_free = max_free.max(axiom.arity());
    }
    let examined = AtomicU64::new(0);

    let check_structure = |structure: &Structure| -> Result<Option<Assignment>, SearchError> {
        if !models_isdef(structure, theory)? {
            return Ok(None);
        }
        let n = structure.domain_size();
        let mut assignment_rank = 0usize;
        let total = n.pow(max_free);
        while assignment_rank < total {
            let tuple = rank_tuple(n, max_free as usize, assignment_rank);
            let mut nu = Assignment::constant(0);
            for (i, &d) in tuple.iter().enumerate() {
                nu.set(i as VarIndex + 1, d);
            }
            let mut ok = true;
            for axiom in theory.axioms() {
                if !holds(structure, &nu, axiom)? {
                    ok = false;
                    break;
                }
            }
            if ok && !holds(structure, &nu, phi)? {
                return Ok(Some(nu));
            }
            assignment_rank += 1;
        }
        Ok(None)
    };

    for n in 1..=max_domain {
        let mut stream = enumerate_structures(theory.sig(), n);
        loop {
            // batches keep parallel search order-stable: the first hit in
            // the batch (in enumeration order) wins
            let batch: Vec<Structure> = stream.by_ref().take(4096).collect();
            if batch.is_empty() {
                break;
            }
            let used = examined.fetch_add(batch.len() as u64, Ordering::Relaxed) + batch.len() as u64;
            if used > budget {
                return Err(SearchError::BudgetExceeded {
                    examined: used.min(budget),
                });
            }
            let hit: Option<Result<SearchOutcome, SearchError>> = if jobs > 1 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .expect("thread pool");
                pool.install(|| {
                    batch.par_iter().find_map_first(|s| {
                        check_structure(s).transpose().map(|r| {
                            r.map(|assignment| SearchOutcome::Countermodel {
                                structure: s.clone(),
                                assignment,
                            })
                        })
                    })
                })
            } else {
                batch.iter().find_map(|s| {
                    check_structure(s).transpose().map(|r| {
                        r.map(|assignment| SearchOutcome::Countermodel {
                            structure: s.clone(),
                            assignment,
                        })
                    })
                })
            };
            if let Some(outcome) = hit {
                return outcome;
            }
        }
    }
    Ok(SearchOutcome::NoneUpToBound {
        max_domain,
    })
}

/// Canonical text form of a structure. Round-trips exactly through
/// [`parse_structure`].
pub fn print_structure(s: &Structure) -> String {
    let mut out = String::new();
    out.push_str(&format!("domain {}\n", s.domain_size));
    for (name, value) in &s.consts {
        out.push_str(&format!("const {name} = {value}\n"));
    }
    for (name, table) in &s.funcs {
        for rank in 0..table.entries.len() {
            let tuple = rank_tuple(s.domain_size, table.arity, rank);
            let args = tuple
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            let value = match table.entries[rank] {
                Some(v) => v.to_string(),
                None => "undef".to_string(),
            };
            out.push_str(&format!("fun {name} : {args} -> {value}\n"));
        }
    }
    for (name, table) in &s.rels {
        let mut tuples = Vec::new();
        for rank in 0..table.entries.len() {
            if table.entries[rank] {
                let tuple = rank_tuple(s.domain_size, table.arity, rank);
                tuples.push(format!(
                    "({})",
                    tuple
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                ));
            }
        }
        if tuples.is_empty() {
            out.push_str(&format!("rel {name} : {{ }}\n"));
        } else {
            out.push_str(&format!("rel {name} : {{ {} }}\n", tuples.join(" ")));
        }
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureParseError {
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error("missing `domain` header")]
    MissingDomain,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Parses the structure text format produced by [`print_structure`].
///
/// Function tables are assembled from the `fun` lines; any tuple without a
/// line stays undefined. Arities are inferred from the first line
/// mentioning each symbol and must stay consistent.
pub fn parse_structure(text: &str) -> Result<Structure, StructureParseError> {
    let mut domain_size = None;
    let mut consts = BTreeMap::new();
    let mut funcs: BTreeMap<String, FunctionTable> = BTreeMap::new();
    let mut rels: BTreeMap<String, RelationTable> = BTreeMap::new();

    let err = |lineno: usize, msg: &str| StructureParseError::Line(lineno, msg.to_string());

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().unwrap();
        match head {
            "domain" => {
                let n: usize = words
                    .next()
                    .ok_or_else(|| err(lineno, "expected domain size"))?
                    .parse()
                    .map_err(|_| err(lineno, "bad domain size"))?;
                if n == 0 {
                    return Err(EvalError::EmptyDomain.into());
                }
                domain_size = Some(n);
            }
            "const" => {
                let n = domain_size.ok_or(StructureParseError::MissingDomain)?;
                let name = words
                    .next()
                    .ok_or_else(|| err(lineno, "expected constant name"))?;
                if words.next() != Some("=") {
                    return Err(err(lineno, "expected `=`"));
                }
                let value: usize = words
                    .next()
                    .ok_or_else(|| err(lineno, "expected element"))?
                    .parse()
                    .map_err(|_| err(lineno, "bad element"))?;
                if value >= n {
                    return Err(EvalError::ElementOutOfRange {
                        element: value,
                        domain_size: n,
                    }
                    .into());
                }
                consts.insert(name.to_string(), value);
            }
            "fun" => {
                let n = domain_size.ok_or(StructureParseError::MissingDomain)?;
                let name = words
                    .next()
                    .ok_or_else(|| err(lineno, "expected function name"))?;
                if words.next() != Some(":") {
                    return Err(err(lineno, "expected `:`"));
                }
                let rest: Vec<&str> = words.collect();
                let arrow = rest
                    .iter()
                    .position(|w| *w == "->")
                    .ok_or_else(|| err(lineno, "expected `->`"))?;
                let tuple: Vec<usize> = rest[..arrow]
                    .iter()
                    .map(|w| w.parse().map_err(|_| err(lineno, "bad element")))
                    .collect::<Result<_, _>>()?;
                if tuple.is_empty() {
                    return Err(err(lineno, "function tuple must be nonempty"));
                }
                let value = match rest.get(arrow + 1) {
                    Some(&"undef") => None,
                    Some(w) => Some(w.parse::<usize>().map_err(|_| err(lineno, "bad element"))?),
                    None => return Err(err(lineno, "expected value after `->`")),
                };
                for &d in tuple.iter().chain(value.iter()) {
                    if d >= n {
                        return Err(EvalError::ElementOutOfRange {
                            element: d,
                            domain_size: n,
                        }
                        .into());
                    }
                }
                let table = funcs.entry(name.to_string()).or_insert_with(|| FunctionTable {
                    arity: tuple.len(),
                    entries: vec![None; n.pow(tuple.len() as u32)],
                });
                if table.arity != tuple.len() {
                    return Err(err(lineno, "inconsistent arity"));
                }
                table.entries[tuple_rank(n, &tuple)] = value;
            }
            "rel" => {
                let n = domain_size.ok_or(StructureParseError::MissingDomain)?;
                let name = words
                    .next()
                    .ok_or_else(|| err(lineno, "expected relation name"))?;
                if words.next() != Some(":") {
                    return Err(err(lineno, "expected `:`"));
                }
                let rest: String = words.collect::<Vec<_>>().join(" ");
                let rest = rest.trim();
                if !rest.starts_with('{') || !rest.ends_with('}') {
                    return Err(err(lineno, "expected `{ ... }`"));
                }
                let inner = &rest[1..rest.len() - 1];
                let mut tuples = Vec::new();
                for part in inner.split_whitespace() {
                    let part = part.trim();
                    if !part.starts_with('(') || !part.ends_with(')') {
                        return Err(err(lineno, "expected `(k,...)` tuples"));
                    }
                    let tuple: Vec<usize> = part[1..part.len() - 1]
                        .split(',')
                        .map(|w| w.trim().parse().map_err(|_| err(lineno, "bad element")))
                        .collect::<Result<_, _>>()?;
                    if tuple.is_empty() {
                        return Err(err(lineno, "relation tuple must be nonempty"));
                    }
                    for &d in &tuple {
                        if d >= n {
                            return Err(EvalError::ElementOutOfRange {
                                element: d,
                                domain_size: n,
                            }
                            .into());
                        }
                    }
                    tuples.push(tuple);
                }
                // an empty set leaves the arity unknown; default to 1
                let arity = tuples.first().map(|t| t.len()).unwrap_or(1);
                let table = rels.entry(name.to_string()).or_insert_with(|| RelationTable {
                    arity,
                    entries: vec![false; n.pow(arity as u32)],
                });
                for tuple in tuples {
                    if tuple.len() != table.arity {
                        return Err(err(lineno, "inconsistent arity"));
                    }
                    table.entries[tuple_rank(n, &tuple)] = true;
                }
            }
            other => {
                return Err(err(lineno, &format!("unknown line kind `{other}`")));
            }
        }
    }
    let domain_size = domain_size.ok_or(StructureParseError::MissingDomain)?;
    Ok(Structure {
        domain_size,
        consts,
        funcs,
        rels,
    })
}

/// Checks that the structure interprets exactly the symbols of `sig` at
/// the declared arities.
pub fn structure_matches(s: &Structure, sig: &Signature) -> Result<(), EvalError> {
    for c in sig.consts() {
        s.const_value(c)?;
    }
    for (f, a) in sig.funcs() {
        let table = s
            .funcs
            .get(f)
            .ok_or_else(|| EvalError::UnknownSymbol(f.to_string()))?;
        if table.arity != a {
            return Err(EvalError::ArityMismatch {
                name: f.to_string(),
                expected: a,
                got: table.arity,
            });
        }
    }
    for (r, a) in sig.rels() {
        let table = s
            .rels
            .get(r)
            .ok_or_else(|| EvalError::UnknownSymbol(r.to_string()))?;
        if table.arity != a {
            return Err(EvalError::ArityMismatch {
                name: r.to_string(),
                expected: a,
                got: table.arity,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isdef::Theory;
    use crate::surface::parse_formula;

    fn fixture_sig() -> Signature {
        let mut sig = Signature::new();
        sig.add_const("c").unwrap();
        sig.add_func("f", 1).unwrap();
        sig.add_rel("p", 1).unwrap();
        sig
    }

    /// Domain {0,1}, c = 0, f defined only at 1 with f(1) = 0, p = {1}.
    fn fixture_structure() -> Structure {
        let mut s = Structure::new(&fixture_sig(), 2).unwrap();
        s.set_const("c", 0).unwrap();
        s.set_func("f", &[1], Some(0)).unwrap();
        s.set_rel("p", &[1], true).unwrap();
        s
    }

    fn fixture_theory() -> Theory {
        let sig = fixture_sig();
        let guard = parse_formula("not (v1 = c)", &sig)
            .unwrap()
            .into_core()
            .unwrap();
        let mut th = Theory::new(sig);
        th.set_isdef("f", guard).unwrap();
        th
    }

    fn parse(s: &Structure, text: &str) -> Formula {
        let _ = s;
        parse_formula(text, &fixture_sig())
            .unwrap()
            .into_core()
            .unwrap()
    }

    #[test]
    fn strict_term_evaluation() {
        let s = fixture_structure();
        let nu = Assignment::constant(0);
        // f(c): table miss at 0
        let fc = Term::App("f".into(), vec![Term::Const("c".into())]);
        assert_eq!(eval_term(&s, &nu, &fc).unwrap(), None);
        // f(f(c)): undefined subterm propagates
        let ffc = Term::App("f".into(), vec![fc.clone()]);
        assert_eq!(eval_term(&s, &nu, &ffc).unwrap(), None);
        // f(v1) with v1 = 1 hits the table
        let fv = Term::App("f".into(), vec![Term::Var(1)]);
        let nu1 = nu.with(1, 1);
        assert_eq!(eval_term(&s, &nu1, &fv).unwrap(), Some(0));
    }

    #[test]
    fn undefined_terms_make_atoms_undefined() {
        let s = fixture_structure();
        let nu = Assignment::constant(0);
        let phi = parse(&s, "f(c) = f(c)");
        assert_eq!(eval_formula(&s, &nu, &phi).unwrap(), TruthValue::Undef);
        // F /\ (f(c) = f(c)) is F: conjunction is minimum
        let phi = parse(&s, "F /\\ f(c) = f(c)");
        assert_eq!(eval_formula(&s, &nu, &phi).unwrap(), TruthValue::False);
    }

    #[test]
    fn quantifiers_scan_the_domain() {
        let s = fixture_structure();
        let nu = Assignment::constant(0);
        let phi = parse(&s, "forall v1 (v1 = c \\/ f(v1) = c)");
        // brute force over the domain: d=0 gives T \/ U = T, d=1 gives
        // F \/ T = T, so the minimum is T
        let mut expected = TruthValue::True;
        for d in 0..2 {
            let inner = parse(&s, "v1 = c \\/ f(v1) = c");
            expected = expected & eval_formula(&s, &nu.with(1, d), &inner).unwrap();
        }
        assert_eq!(eval_formula(&s, &nu, &phi).unwrap(), expected);
        assert_eq!(expected, TruthValue::True);

        // and one that is genuinely false: p holds only at 1
        let all_p = parse(&s, "forall v1 p(v1)");
        assert_eq!(eval_formula(&s, &nu, &all_p).unwrap(), TruthValue::False);
        let some_p = parse(&s, "exists v1 p(v1)");
        assert_eq!(eval_formula(&s, &nu, &some_p).unwrap(), TruthValue::True);
    }

    #[test]
    fn holds_requires_true() {
        let s = fixture_structure();
        let nu = Assignment::constant(0);
        assert!(holds(&s, &nu, &parse(&s, "c = c")).unwrap());
        assert!(!holds(&s, &nu, &parse(&s, "f(c) = f(c)")).unwrap());
        assert!(!holds(&s, &nu, &parse(&s, "not (c = c)")).unwrap());
    }

    #[test]
    fn isdef_model_check_is_exhaustive() {
        let th = fixture_theory();
        let s = fixture_structure();
        assert!(models_isdef(&s, &th).unwrap());
        // defining f at 0 breaks the agreement at d = 0
        let mut bad = s.clone();
        bad.set_func("f", &[0], Some(1)).unwrap();
        assert!(!models_isdef(&bad, &th).unwrap());
        // totally defined f with guard T is fine
        let mut total_th = Theory::new(fixture_sig());
        let _ = &mut total_th;
        let mut total = s;
        total.set_func("f", &[0], Some(0)).unwrap();
        assert!(models_isdef(&total, &total_th).unwrap());
    }

    #[test]
    fn model_requires_axioms_true() {
        let mut th = fixture_theory();
        let s = fixture_structure();
        let nu = Assignment::constant(0);
        assert!(is_model(&s, &nu, &th).unwrap());
        th.add_axiom(Formula::False).unwrap();
        assert!(!is_model(&s, &nu, &th).unwrap());

        // an axiom decided by evaluation: true on this fixture since
        // f(1) = 0 = c
        let mut th2 = fixture_theory();
        th2.add_axiom(parse(&s, "forall v1 (v1 = c \\/ f(v1) = c)"))
            .unwrap();
        assert!(is_model(&s, &nu, &th2).unwrap());
        // while a universally-p axiom fails: p misses 0
        let mut th3 = fixture_theory();
        th3.add_axiom(parse(&s, "forall v1 p(v1)")).unwrap();
        assert!(!is_model(&s, &nu, &th3).unwrap());
    }

    #[test]
    fn enumeration_counts_match() {
        let mut sig = Signature::new();
        sig.add_const("c").unwrap();
        assert_eq!(enumerate_structures(&sig, 2).count(), 2);

        let sig = fixture_sig();
        // counting oracle: n^|C| * (n+1)^(n^1) * 2^(n^1)
        let expected = 2usize.pow(1) * 3usize.pow(2) * 2usize.pow(2);
        assert_eq!(enumerate_structures(&sig, 2).count(), expected);
        assert_eq!(expected, 72);

        let empty = Signature::new();
        assert_eq!(enumerate_structures(&empty, 1).count(), 1);
    }

    #[test]
    fn enumeration_is_duplicate_free() {
        let sig = fixture_sig();
        let all: Vec<Structure> = enumerate_structures(&sig, 2).collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn countermodel_search_finds_witness() {
        let mut sig = Signature::new();
        sig.add_const("c").unwrap();
        sig.add_rel("p", 1).unwrap();
        let mut th = Theory::new(sig.clone());
        th.add_axiom(
            parse_formula("p(c)", &sig).unwrap().into_core().unwrap(),
        )
        .unwrap();
        let phi = parse_formula("forall v1 p(v1)", &sig)
            .unwrap()
            .into_core()
            .unwrap();
        match find_countermodel(&th, &phi, 2, 1_000_000, 1).unwrap() {
            SearchOutcome::Countermodel { structure, .. } => {
                assert_eq!(structure.domain_size(), 2);
                assert_eq!(structure.const_value("c").unwrap(), 0);
                assert!(structure.rel_holds("p", &[0]).unwrap());
                assert!(!structure.rel_holds("p", &[1]).unwrap());
            }
            other => panic!("expected countermodel, got {other:?}"),
        }
    }

    #[test]
    fn axiom_is_its_own_consequence() {
        let sig = fixture_sig();
        let phi = parse_formula("p(c)", &sig).unwrap().into_core().unwrap();
        let mut th = Theory::new(sig);
        th.add_axiom(phi.clone()).unwrap();
        assert_eq!(
            find_countermodel(&th, &phi, 2, 1_000_000, 1).unwrap(),
            SearchOutcome::NoneUpToBound { max_domain: 2 }
        );
    }

    #[test]
    fn budget_is_enforced() {
        let sig = fixture_sig();
        let th = Theory::new(sig);
        let phi = Formula::False;
        // |D|=1 already has 1*2*2 = 4 structures... but all model the
        // trivial theory and refute F, so use an unrefutable formula
        let err = find_countermodel(&th, &Formula::True, 2, 3, 1);
        assert!(matches!(err, Err(SearchError::BudgetExceeded { .. })));
        let _ = phi;
    }

    #[test]
    fn parallel_search_agrees_with_sequential() {
        let sig = fixture_sig();
        let th = {
            let mut th = Theory::new(sig.clone());
            th.add_axiom(
                parse_formula("p(c)", &sig).unwrap().into_core().unwrap(),
            )
            .unwrap();
            th
        };
        let phi = parse_formula("forall v1 p(v1)", &sig)
            .unwrap()
            .into_core()
            .unwrap();
        let seq = find_countermodel(&th, &phi, 2, 1_000_000, 1).unwrap();
        let par = find_countermodel(&th, &phi, 2, 1_000_000, 4).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn structure_text_roundtrip() {
        let s = fixture_structure();
        let text = print_structure(&s);
        let back = parse_structure(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(print_structure(&back), text);
    }

    #[test]
    fn total_structures_never_yield_undef() {
        let sig = fixture_sig();
        let nu = Assignment::constant(0);
        let phi = parse_formula("forall v1 (p(f(v1)) \\/ not (f(c) = v1))", &sig)
            .unwrap()
            .into_core()
            .unwrap();
        for s in enumerate_structures(&sig, 2) {
            if s.all_funcs_total() {
                let v = eval_formula(&s, &nu, &phi).unwrap();
                assert!(v.is_classical());
            }
        }
    }

    #[test]
    fn evaluation_ignores_variables_beyond_free_set() {
        let sig = fixture_sig();
        let s = fixture_structure();
        let phi = parse_formula("exists v2 (v2 = v1)", &sig)
            .unwrap()
            .into_core()
            .unwrap();
        let nu1 = Assignment::constant(0).with(1, 1).with(2, 0).with(7, 1);
        let nu2 = Assignment::constant(1).with(1, 1);
        assert_eq!(
            eval_formula(&s, &nu1, &phi).unwrap(),
            eval_formula(&s, &nu2, &phi).unwrap()
        );
    }
}
