//! Theories and definedness formulas.
//!
//! A theory is a signature, a set of axioms, and one *definedness formula*
//! per function symbol: a formula over `v1..vk` (`k` the arity) that holds
//! exactly where the function is defined. The map is written `isdef` in the
//! file format, short for "is defined".
//!
//! [`isdef_term`] and [`isdef_formula`] extend the per-symbol map to
//! arbitrary terms and formulas by structural recursion. On every structure
//! that agrees with the map, the produced formulas are two-valued and
//! characterize definedness: `isdef_term(t)` is true exactly when `t`
//! denotes, and `isdef_formula(phi)` is true exactly when `phi` does not
//! evaluate to `U`.
//!
//! The outputs are deliberately left unsimplified — proof rules compare
//! them for literal identity — and a separate [`simplify`] pass exists for
//! display only.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::surface::{parse_formula, print_formula, ParseError};
use crate::syntax::{check_formula, Formula, Signature, Term, VarIndex, WfError};
use crate::translate::desugar;

/// A three-component theory: signature, axioms, definedness map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    sig: Signature,
    axioms: Vec<Formula>,
    isdef: BTreeMap<String, Formula>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error("no function `{0}` in the signature")]
    NoSuchFunction(String),
    #[error(transparent)]
    Wf(#[from] WfError),
}

impl Theory {
    /// A theory over `sig` with no axioms and every function total
    /// (definedness formula `T`).
    pub fn new(sig: Signature) -> Theory {
        let isdef = sig
            .funcs()
            .map(|(f, _)| (f.to_string(), Formula::True))
            .collect();
        Theory {
            sig,
            axioms: Vec::new(),
            isdef,
        }
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn axioms(&self) -> &[Formula] {
        &self.axioms
    }

    pub fn isdef_of(&self, func: &str) -> Option<&Formula> {
        self.isdef.get(func)
    }

    pub fn set_isdef(&mut self, func: &str, phi: Formula) -> Result<(), TheoryError> {
        if self.sig.func_arity(func).is_none() {
            return Err(TheoryError::NoSuchFunction(func.to_string()));
        }
        check_formula(&self.sig, &phi)?;
        self.isdef.insert(func.to_string(), phi);
        Ok(())
    }

    pub fn add_axiom(&mut self, phi: Formula) -> Result<(), TheoryError> {
        check_formula(&self.sig, &phi)?;
        self.axioms.push(phi);
        Ok(())
    }
}

/// A reason the definedness map is unusable.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IsdefViolation {
    #[error("function `{func}` has no definedness formula")]
    Missing { func: String },
    #[error("definedness formula of `{func}` mentions v{var}, beyond its arity {arity}")]
    FreeVariableOutOfRange {
        func: String,
        var: VarIndex,
        arity: usize,
    },
    #[error("definedness formula of `{func}` uses `{inner}`, whose own formula is not `T`")]
    InnerFunctionNotTotal { func: String, inner: String },
    #[error("definedness formula of `{func}` is malformed: {source}")]
    Malformed { func: String, source: WfError },
}

/// Checks the two conditions on the definedness map: each formula for `f`
/// has free variables only among `v1..v{arity(f)}`, and every function
/// symbol used inside it must itself have the formula `T`. Returns every
/// violation found.
pub fn validate_isdef_map(theory: &Theory) -> Result<(), Vec<IsdefViolation>> {
    let mut violations = Vec::new();
    for (f, arity) in theory.sig.funcs() {
        let Some(guard) = theory.isdef.get(f) else {
            violations.push(IsdefViolation::Missing {
                func: f.to_string(),
            });
            continue;
        };
        if let Err(source) = check_formula(&theory.sig, guard) {
            violations.push(IsdefViolation::Malformed {
                func: f.to_string(),
                source,
            });
            continue;
        }
        for var in guard.free_vars() {
            if var as usize > arity {
                violations.push(IsdefViolation::FreeVariableOutOfRange {
                    func: f.to_string(),
                    var,
                    arity,
                });
            }
        }
        for inner in guard.func_symbols() {
            if theory.isdef.get(&inner) != Some(&Formula::True) {
                violations.push(IsdefViolation::InnerFunctionNotTotal {
                    func: f.to_string(),
                    inner,
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// The definedness formula of a term.
///
/// Variables and constants are always defined. For an application
/// `f(t1, …, tk)` the result is the left-associated conjunction of the
/// arguments' definedness formulas followed by the formula for `f`
/// instantiated at the arguments. Before instantiation the binders of `f`'s
/// formula are renamed, in preorder, to indices above everything occurring
/// in the arguments or in the formula itself, so the substitution can never
/// capture.
pub fn isdef_term(theory: &Theory, term: &Term) -> Formula {
    match term {
        Term::Var(_) | Term::Const(_) => Formula::True,
        Term::App(f, args) => {
            let guard = theory
                .isdef
                .get(f)
                .cloned()
                .unwrap_or(Formula::True);
            let mut base: VarIndex = guard.all_vars().into_iter().max().unwrap_or(0);
            for a in args {
                base = base.max(a.vars().into_iter().max().unwrap_or(0));
            }
            let mut next = base + 1;
            let renamed = guard.renumber_binders(&mut next);
            let map: BTreeMap<VarIndex, Term> = args
                .iter()
                .enumerate()
                .map(|(i, t)| (i as VarIndex + 1, t.clone()))
                .collect();
            let instantiated = renamed
                .substitute_many(&map)
                .expect("binders were renamed above all argument variables");
            let parts = args
                .iter()
                .map(|a| isdef_term(theory, a))
                .chain(std::iter::once(instantiated));
            Formula::and_chain(parts)
        }
    }
}

/// The definedness formula of a formula.
///
/// The output shape follows a fixed structural recursion and is not
/// simplified; in particular `isdef_formula(¬φ)` is literally
/// `isdef_formula(φ)`.
pub fn isdef_formula(theory: &Theory, phi: &Formula) -> Formula {
    let d = |p: &Formula| isdef_formula(theory, p);
    match phi {
        Formula::False | Formula::True => Formula::True,
        Formula::Eq(t1, t2) => Formula::and(isdef_term(theory, t1), isdef_term(theory, t2)),
        Formula::Rel(_, args) => Formula::and_chain(args.iter().map(|a| isdef_term(theory, a))),
        Formula::Not(p) => d(p),
        Formula::And(p, q) => Formula::or(
            Formula::or(
                Formula::and(d(p), d(q)),
                Formula::and(d(p), Formula::not((**p).clone())),
            ),
            Formula::and(d(q), Formula::not((**q).clone())),
        ),
        Formula::Or(p, q) => Formula::or(
            Formula::or(
                Formula::and(d(p), d(q)),
                Formula::and(d(p), (**p).clone()),
            ),
            Formula::and(d(q), (**q).clone()),
        ),
        Formula::Forall(x, p) => Formula::or(
            Formula::forall(*x, d(p)),
            Formula::exists(*x, Formula::and(d(p), Formula::not((**p).clone()))),
        ),
        Formula::Exists(x, p) => Formula::or(
            Formula::forall(*x, d(p)),
            Formula::exists(*x, Formula::and(d(p), (**p).clone())),
        ),
    }
}

/// Truth-table-preserving cleanup for display: drops `T` conjuncts, `F`
/// disjuncts, double negations, and constant quantifier bodies. Never feed
/// the result to the proof checker; rules compare definedness formulas for
/// literal identity.
pub fn simplify(phi: &Formula) -> Formula {
    match phi {
        Formula::False | Formula::True | Formula::Eq(..) | Formula::Rel(..) => phi.clone(),
        Formula::Not(p) => match simplify(p) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            q => Formula::not(q),
        },
        Formula::And(p, q) => match (simplify(p), simplify(q)) {
            (Formula::True, b) => b,
            (a, Formula::True) => a,
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (a, b) => Formula::and(a, b),
        },
        Formula::Or(p, q) => match (simplify(p), simplify(q)) {
            (Formula::False, b) => b,
            (a, Formula::False) => a,
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (a, b) => Formula::or(a, b),
        },
        Formula::Forall(x, p) => match simplify(p) {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            body => Formula::forall(*x, body),
        },
        Formula::Exists(x, p) => match simplify(p) {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            body => Formula::exists(*x, body),
        },
    }
}

#[derive(Debug, Error)]
pub enum TheoryParseError {
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: {source}")]
    Theory { line: usize, source: TheoryError },
    #[error("line {line}: {source}")]
    Sig {
        line: usize,
        source: crate::syntax::SignatureError,
    },
    #[error("definedness map is invalid: {}", format_violations(.0))]
    Invalid(Vec<IsdefViolation>),
}

fn format_violations(vs: &[IsdefViolation]) -> String {
    vs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parses the theory file format.
///
/// Line kinds: `const <name>`, `fun <name> <arity>`, `rel <name> <arity>`,
/// `isdef <fun> := <formula>`, `axiom <formula>`. Comments run from `#`.
/// Functions without an `isdef` line are total (`T`). Definedness formulas
/// must be core syntax; axioms may use the sugared operators, which are
/// desugared against the declared map. The map is validated before any
/// axiom is desugared.
pub fn parse_theory(text: &str) -> Result<Theory, TheoryParseError> {
    let mut sig = Signature::new();
    let mut isdef_lines: Vec<(usize, String, String)> = Vec::new();
    let mut axiom_lines: Vec<(usize, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match head {
            "const" => {
                sig.add_const(rest)
                    .map_err(|source| TheoryParseError::Sig {
                        line: lineno,
                        source,
                    })?;
            }
            "fun" | "rel" => {
                let mut words = rest.split_whitespace();
                let name = words
                    .next()
                    .ok_or_else(|| TheoryParseError::Line(lineno, "expected a name".into()))?;
                let arity: usize = words
                    .next()
                    .ok_or_else(|| TheoryParseError::Line(lineno, "expected an arity".into()))?
                    .parse()
                    .map_err(|_| TheoryParseError::Line(lineno, "bad arity".into()))?;
                let res = if head == "fun" {
                    sig.add_func(name, arity)
                } else {
                    sig.add_rel(name, arity)
                };
                res.map_err(|source| TheoryParseError::Sig {
                    line: lineno,
                    source,
                })?;
            }
            "isdef" => {
                let (name, formula) = rest.split_once(":=").ok_or_else(|| {
                    TheoryParseError::Line(lineno, "expected `isdef <fun> := <formula>`".into())
                })?;
                isdef_lines.push((lineno, name.trim().to_string(), formula.trim().to_string()));
            }
            "axiom" => {
                axiom_lines.push((lineno, rest.to_string()));
            }
            other => {
                return Err(TheoryParseError::Line(
                    lineno,
                    format!("unknown line kind `{other}`"),
                ));
            }
        }
    }

    let mut theory = Theory::new(sig);
    for (lineno, name, text) in isdef_lines {
        let phi = parse_formula(&text, theory.sig())
            .and_then(|s| s.into_core())
            .map_err(|source| TheoryParseError::Parse {
                line: lineno,
                source,
            })?;
        theory
            .set_isdef(&name, phi)
            .map_err(|source| TheoryParseError::Theory {
                line: lineno,
                source,
            })?;
    }
    validate_isdef_map(&theory).map_err(TheoryParseError::Invalid)?;
    for (lineno, text) in axiom_lines {
        let sugared = parse_formula(&text, theory.sig()).map_err(|source| {
            TheoryParseError::Parse {
                line: lineno,
                source,
            }
        })?;
        let phi = desugar(&theory, &sugared).map_err(|e| {
            TheoryParseError::Line(lineno, e.to_string())
        })?;
        theory
            .add_axiom(phi)
            .map_err(|source| TheoryParseError::Theory {
                line: lineno,
                source,
            })?;
    }
    Ok(theory)
}

/// Canonical text form of a theory; parses back via [`parse_theory`].
pub fn print_theory(theory: &Theory) -> String {
    let mut out = String::new();
    for c in theory.sig.consts() {
        out.push_str(&format!("const {c}\n"));
    }
    for (f, a) in theory.sig.funcs() {
        out.push_str(&format!("fun {f} {a}\n"));
    }
    for (r, a) in theory.sig.rels() {
        out.push_str(&format!("rel {r} {a}\n"));
    }
    for (f, guard) in &theory.isdef {
        if *guard != Formula::True {
            out.push_str(&format!(
                "isdef {f} := {}\n",
                print_formula(&guard.clone().into())
            ));
        }
    }
    for axiom in &theory.axioms {
        out.push_str(&format!(
            "axiom {}\n",
            print_formula(&axiom.clone().into())
        ));
    }
    out
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_theory(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_term;

    fn fixture_theory() -> Theory {
        let mut sig = Signature::new();
        sig.add_const("c").unwrap();
        sig.add_func("f", 1).unwrap();
        sig.add_rel("p", 1).unwrap();
        let guard = parse_formula("not (v1 = c)", &sig)
            .unwrap()
            .into_core()
            .unwrap();
        let mut th = Theory::new(sig);
        th.set_isdef("f", guard).unwrap();
        th
    }

    /// Real-style arithmetic signature: sqrt defined on nonnegatives,
    /// division by nonzero, addition total.
    fn reals_theory() -> Theory {
        let mut sig = Signature::new();
        sig.add_const("zero").unwrap();
        sig.add_const("one").unwrap();
        sig.add_func("plus", 2).unwrap();
        sig.add_func("sqrt", 1).unwrap();
        sig.add_func("div", 2).unwrap();
        sig.add_rel("geq", 2).unwrap();
        let mut th = Theory::new(sig);
        let sqrt_guard = parse_formula("geq(v1, zero)", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        let div_guard = parse_formula("not (v2 = zero)", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        th.set_isdef("sqrt", sqrt_guard).unwrap();
        th.set_isdef("div", div_guard).unwrap();
        th
    }

    #[test]
    fn validation_checks_free_variables() {
        let mut th = fixture_theory();
        // unary f must not mention v2
        let bad = parse_formula("not (v2 = c)", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        th.set_isdef("f", bad).unwrap();
        let violations = validate_isdef_map(&th).unwrap_err();
        assert!(matches!(
            violations[0],
            IsdefViolation::FreeVariableOutOfRange { var: 2, .. }
        ));
    }

    #[test]
    fn validation_accepts_nested_total_functions() {
        let mut sig = Signature::new();
        sig.add_func("times", 2).unwrap();
        sig.add_func("sqrt", 1).unwrap();
        let mut th = Theory::new(sig);
        // sqrt of naturals: defined where some square matches
        let guard = parse_formula("exists v2 (times(v2, v2) = v1)", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        th.set_isdef("sqrt", guard).unwrap();
        assert!(validate_isdef_map(&th).is_ok());

        // but if times itself is partial, the nesting is rejected
        let times_guard = parse_formula("not (v1 = v1)", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        th.set_isdef("times", times_guard).unwrap();
        let violations = validate_isdef_map(&th).unwrap_err();
        assert!(violations
            .iter()
            .any(|v| matches!(v, IsdefViolation::InnerFunctionNotTotal { .. })));
    }

    #[test]
    fn all_total_is_valid() {
        let th = Theory::new(fixture_theory().sig().clone());
        assert!(validate_isdef_map(&th).is_ok());
    }

    #[test]
    fn variables_and_constants_are_defined() {
        let th = fixture_theory();
        assert_eq!(isdef_term(&th, &Term::Var(1)), Formula::True);
        assert_eq!(isdef_term(&th, &Term::Const("c".into())), Formula::True);
    }

    #[test]
    fn application_builds_guard_chain() {
        let th = fixture_theory();
        let t = parse_term("f(v1)", th.sig()).unwrap();
        let expected = parse_formula("T /\\ not (v1 = c)", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        assert_eq!(isdef_term(&th, &t), expected);
    }

    #[test]
    fn worked_division_example_expands_unsimplified() {
        let th = reals_theory();
        let t = parse_term("div(sqrt(plus(v1, v2)), plus(v2, one))", th.sig()).unwrap();
        let got = isdef_term(&th, &t);
        let expected_text = "T /\\ T /\\ T /\\ geq(plus(v1, v2), zero) /\\ (T /\\ T /\\ T) /\\ not (plus(v2, one) = zero)";
        let expected = parse_formula(expected_text, th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        assert_eq!(got, expected);
        assert_eq!(print_formula(&got.into()), expected_text);
    }

    #[test]
    fn negation_shares_the_guard_literally() {
        let th = fixture_theory();
        let phi = parse_formula("f(v1) = c", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        assert_eq!(
            isdef_formula(&th, &Formula::not(phi.clone())),
            isdef_formula(&th, &phi)
        );
    }

    #[test]
    fn equality_and_literals() {
        let th = fixture_theory();
        assert_eq!(isdef_formula(&th, &Formula::False), Formula::True);
        assert_eq!(isdef_formula(&th, &Formula::True), Formula::True);
        let phi = parse_formula("f(v1) = c", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        let expected = parse_formula("(T /\\ not (v1 = c)) /\\ T", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        assert_eq!(isdef_formula(&th, &phi), expected);
    }

    #[test]
    fn binders_are_renamed_above_argument_variables() {
        let mut sig = Signature::new();
        sig.add_const("c").unwrap();
        sig.add_func("times", 2).unwrap();
        sig.add_func("sqrt", 1).unwrap();
        let mut th = Theory::new(sig);
        let guard = parse_formula("exists v2 (times(v2, v2) = v1)", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        th.set_isdef("sqrt", guard).unwrap();

        // sqrt applied to a variable-free argument: the binder moves above
        // everything mentioned in the guard, and the free v1 is replaced
        let t = parse_term("sqrt(c)", th.sig()).unwrap();
        let expected = parse_formula("T /\\ (exists v3 (times(v3, v3) = c))", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        assert_eq!(isdef_term(&th, &t), expected);

        // argument mentioning v2 would be captured without renaming
        let t = parse_term("sqrt(times(v2, c))", th.sig()).unwrap();
        let expected = parse_formula(
            "(T /\\ T /\\ T) /\\ (exists v3 (times(v3, v3) = times(v2, c)))",
            th.sig(),
        )
        .unwrap()
        .into_core()
        .unwrap();
        assert_eq!(isdef_term(&th, &t), expected);
    }

    #[test]
    fn guard_free_variables_stay_within_inputs() {
        let th = reals_theory();
        let t = parse_term("div(sqrt(plus(v1, v2)), plus(v2, one))", th.sig()).unwrap();
        assert!(isdef_term(&th, &t).free_vars().is_subset(&t.vars()));
        let phi = parse_formula("exists v1 (geq(div(v1, v2), zero))", th.sig())
            .unwrap()
            .into_core()
            .unwrap();
        assert!(isdef_formula(&th, &phi)
            .free_vars()
            .is_subset(&phi.free_vars()));
    }

    #[test]
    fn simplify_preserves_shape_only_for_display() {
        let th = reals_theory();
        let t = parse_term("div(sqrt(plus(v1, v2)), plus(v2, one))", th.sig()).unwrap();
        let simplified = simplify(&isdef_term(&th, &t));
        let expected = parse_formula(
            "geq(plus(v1, v2), zero) /\\ not (plus(v2, one) = zero)",
            th.sig(),
        )
        .unwrap()
        .into_core()
        .unwrap();
        assert_eq!(simplified, expected);
    }

    #[test]
    fn theory_file_roundtrip() {
        let text = "\
# partial unary function fixture
const c
fun f 1
rel p 1
isdef f := not (v1 = c)
axiom forall v1 (p(v1) \\/ not p(v1) \\/ not T)
";
        let th = parse_theory(text).unwrap();
        assert_eq!(th.axioms().len(), 1);
        assert_eq!(
            th.isdef_of("f"),
            Some(
                &parse_formula("not (v1 = c)", th.sig())
                    .unwrap()
                    .into_core()
                    .unwrap()
            )
        );
        let printed = print_theory(&th);
        let back = parse_theory(&printed).unwrap();
        assert_eq!(back, th);
    }

    #[test]
    fn theory_file_rejects_invalid_map() {
        let text = "\
fun f 1
isdef f := not (v2 = v2)
";
        assert!(matches!(
            parse_theory(text),
            Err(TheoryParseError::Invalid(_))
        ));
    }
}
