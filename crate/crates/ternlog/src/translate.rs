//! Lowering of the extended operators into the core language.
//!
//! Every sugared connective and quantifier has a fixed encoding in terms of
//! `not`, `/\`, `\/`, `forall`, and `exists`. Some encodings mention the
//! definedness formula of their operands, so [`desugar`] takes the ambient
//! theory and its output depends on the theory's definedness map.
//!
//! [`guard_rewrite`] transplants the definedness guard of a subformula into
//! the formula around it, preserving exactly which interpretations make the
//! whole formula true (an undefined subformula may flip to false, never to
//! or from true).

use thiserror::Error;

use crate::isdef::{isdef_formula, isdef_term, Theory};
use crate::surface::{SugaredFormula, SugaredTerm};
use crate::syntax::{Formula, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("`ite` may appear only inside an atomic formula, not under `{0}`")]
    IteOutsideAtom(String),
    #[error("path step {0} does not address a subformula")]
    BadPath(usize),
    #[error("subformula sits under {actual} negation(s); polarity given as {stated:?}")]
    PolarityMismatch { actual: usize, stated: Parity },
    #[error("no relation `{0}` in the signature")]
    NoSuchRelation(String),
    #[error("signature error: {0}")]
    Signature(#[from] crate::syntax::SignatureError),
    #[error("theory error: {0}")]
    Theory(#[from] crate::isdef::TheoryError),
}

/// Eliminates every sugared construct, yielding a core formula.
///
/// `->` turns into `not φ \/ ψ` and `<->` into the conjunction of both
/// directions. `~>` adds the escape disjunct `not (isdef φ \/ isdef ψ)`, so
/// undefined-implies-undefined comes out true. The strict connectives fail
/// together with either operand, the `&&`/`||` forms evaluate left to
/// right, and `* φ` / `E! t` become the definedness formulas themselves.
/// `ite(χ, t1, t2)` is unfolded inside its atom as
/// `(χ ∧ A[t1]) ∨ (¬χ ∧ A[t2]) ∨ (χ ∧ ¬χ)`.
///
/// Core input passes through unchanged, so desugaring is idempotent.
pub fn desugar(theory: &Theory, phi: &SugaredFormula) -> Result<Formula, TranslateError> {
    use SugaredFormula::*;
    match phi {
        False => Ok(Formula::False),
        True => Ok(Formula::True),
        Eq(..) | Rel(..) => desugar_atom(theory, phi),
        Not(p) => Ok(Formula::not(desugar(theory, p)?)),
        And(p, q) => Ok(Formula::and(desugar(theory, p)?, desugar(theory, q)?)),
        Or(p, q) => Ok(Formula::or(desugar(theory, p)?, desugar(theory, q)?)),
        Forall(x, p) => Ok(Formula::forall(*x, desugar(theory, p)?)),
        Exists(x, p) => Ok(Formula::exists(*x, desugar(theory, p)?)),
        KleeneImp(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            Ok(Formula::or(Formula::not(a), b))
        }
        KleeneIff(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            Ok(Formula::and(
                Formula::or(Formula::not(a.clone()), b.clone()),
                Formula::or(Formula::not(b), a),
            ))
        }
        LukImp(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            let da = isdef_formula(theory, &a);
            let db = isdef_formula(theory, &b);
            Ok(Formula::or(
                Formula::or(Formula::not(a), b),
                Formula::not(Formula::or(da, db)),
            ))
        }
        StrictAnd(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            Ok(Formula::or(
                Formula::or(
                    Formula::and(a.clone(), Formula::not(a.clone())),
                    Formula::and(b.clone(), Formula::not(b.clone())),
                ),
                Formula::and(a, b),
            ))
        }
        StrictOr(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            Ok(Formula::and(
                Formula::and(
                    Formula::or(a.clone(), Formula::not(a.clone())),
                    Formula::or(b.clone(), Formula::not(b.clone())),
                ),
                Formula::or(a, b),
            ))
        }
        McCarthyAnd(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            Ok(Formula::and(
                a.clone(),
                Formula::or(Formula::not(a), b),
            ))
        }
        McCarthyOr(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            Ok(Formula::or(a.clone(), Formula::and(Formula::not(a), b)))
        }
        StrictImp(p, q) => {
            // strict disjunction of ¬φ and ψ
            let lowered = StrictOr(Box::new(Not(p.clone())), q.clone());
            desugar(theory, &lowered)
        }
        DtImp1(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            let da = isdef_formula(theory, &a);
            Ok(Formula::or(Formula::not(Formula::and(a, da)), b))
        }
        DtImp2(p, q) => {
            let (a, b) = (desugar(theory, p)?, desugar(theory, q)?);
            let da = isdef_formula(theory, &a);
            let db = isdef_formula(theory, &b);
            Ok(Formula::or(
                Formula::not(Formula::and(a, da)),
                Formula::and(b, db),
            ))
        }
        StrictForall(x, p) => {
            let a = desugar(theory, p)?;
            Ok(Formula::or(
                Formula::forall(*x, a.clone()),
                Formula::exists(*x, Formula::and(a.clone(), Formula::not(a))),
            ))
        }
        StrictExists(x, p) => {
            let a = desugar(theory, p)?;
            Ok(Formula::and(
                Formula::exists(*x, a.clone()),
                Formula::forall(*x, Formula::or(a.clone(), Formula::not(a))),
            ))
        }
        LehmannExists(x, p) => {
            let a = desugar(theory, p)?;
            let da = isdef_formula(theory, &a);
            Ok(Formula::exists(*x, Formula::and(da, a)))
        }
        Star(p) => {
            let a = desugar(theory, p)?;
            Ok(isdef_formula(theory, &a))
        }
        EBang(t) => {
            let core = lower_term(t)?;
            Ok(isdef_term(theory, &core))
        }
    }
}

/// Lowers an atomic formula, unfolding `ite` occurrences one at a time,
/// leftmost-outermost first.
fn desugar_atom(theory: &Theory, atom: &SugaredFormula) -> Result<Formula, TranslateError> {
    let terms: Vec<&SugaredTerm> = match atom {
        SugaredFormula::Eq(a, b) => vec![a, b],
        SugaredFormula::Rel(_, args) => args.iter().collect(),
        _ => unreachable!("desugar_atom called on a non-atom"),
    };
    for (i, t) in terms.iter().enumerate() {
        if let Some((cond, then, els)) = leftmost_ite(t) {
            let with = |replacement: &SugaredTerm| -> SugaredFormula {
                let replaced = replace_ite(terms[i], replacement);
                match atom {
                    SugaredFormula::Eq(a, b) => {
                        if i == 0 {
                            SugaredFormula::Eq(replaced, b.clone())
                        } else {
                            SugaredFormula::Eq(a.clone(), replaced)
                        }
                    }
                    SugaredFormula::Rel(r, args) => {
                        let mut args = args.clone();
                        args[i] = replaced;
                        SugaredFormula::Rel(r.clone(), args)
                    }
                    _ => unreachable!(),
                }
            };
            let chi = desugar(theory, cond)?;
            let then_atom = desugar_atom(theory, &with(then))?;
            let else_atom = desugar_atom(theory, &with(els))?;
            return Ok(Formula::or(
                Formula::or(
                    Formula::and(chi.clone(), then_atom),
                    Formula::and(Formula::not(chi.clone()), else_atom),
                ),
                Formula::and(chi.clone(), Formula::not(chi)),
            ));
        }
    }
    // no conditionals left; the atom is plain
    match atom {
        SugaredFormula::Eq(a, b) => Ok(Formula::Eq(lower_term(a)?, lower_term(b)?)),
        SugaredFormula::Rel(r, args) => Ok(Formula::Rel(
            r.clone(),
            args.iter().map(lower_term).collect::<Result<_, _>>()?,
        )),
        _ => unreachable!(),
    }
}

fn leftmost_ite(t: &SugaredTerm) -> Option<(&SugaredFormula, &SugaredTerm, &SugaredTerm)> {
    match t {
        SugaredTerm::Var(_) | SugaredTerm::Const(_) => None,
        SugaredTerm::Ite(c, a, b) => Some((c, a, b)),
        SugaredTerm::App(_, args) => args.iter().find_map(leftmost_ite),
    }
}

/// Replaces the leftmost-outermost `ite` in `t` by `replacement`.
fn replace_ite(t: &SugaredTerm, replacement: &SugaredTerm) -> SugaredTerm {
    match t {
        SugaredTerm::Var(_) | SugaredTerm::Const(_) => t.clone(),
        SugaredTerm::Ite(..) => replacement.clone(),
        SugaredTerm::App(f, args) => {
            let mut replaced = false;
            let args = args
                .iter()
                .map(|a| {
                    if !replaced && leftmost_ite(a).is_some() {
                        replaced = true;
                        replace_ite(a, replacement)
                    } else {
                        a.clone()
                    }
                })
                .collect();
            SugaredTerm::App(f.clone(), args)
        }
    }
}

fn lower_term(t: &SugaredTerm) -> Result<Term, TranslateError> {
    match t {
        SugaredTerm::Var(i) => Ok(Term::Var(*i)),
        SugaredTerm::Const(c) => Ok(Term::Const(c.clone())),
        SugaredTerm::App(f, args) => Ok(Term::App(
            f.clone(),
            args.iter().map(lower_term).collect::<Result<_, _>>()?,
        )),
        SugaredTerm::Ite(..) => Err(TranslateError::IteOutsideAtom("E!".to_string())),
    }
}

/// Parity of the negations along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Rewrites the subformula at `path`, guarding it with its own definedness
/// formula: under an even number of negations `ψ` becomes `isdef ψ ∧ ψ`,
/// under an odd number `¬ isdef ψ ∨ ψ`.
///
/// The declared polarity must match the number of negations actually on
/// the path. The rewrite preserves which interpretations make the whole
/// formula true: where `ψ` was undefined the rewritten subformula is
/// classical, so the full three-valued table may change at `U`, never at
/// `T`.
///
/// `path` selects child positions from the root: `0` for the operand of
/// `not` and quantifier bodies, `0`/`1` for the two operands of `/\` and
/// `\/`. The empty path addresses the whole formula.
pub fn guard_rewrite(
    theory: &Theory,
    phi: &Formula,
    path: &[usize],
    polarity: Parity,
) -> Result<Formula, TranslateError> {
    let mut negations = 0usize;
    let mut cursor = phi;
    for (depth, &step) in path.iter().enumerate() {
        cursor = match (cursor, step) {
            (Formula::Not(p), 0) => {
                negations += 1;
                p
            }
            (Formula::And(p, _), 0) | (Formula::Or(p, _), 0) => p,
            (Formula::And(_, q), 1) | (Formula::Or(_, q), 1) => q,
            (Formula::Forall(_, p), 0) | (Formula::Exists(_, p), 0) => p,
            _ => return Err(TranslateError::BadPath(depth)),
        };
    }
    let actual = if negations % 2 == 0 {
        Parity::Even
    } else {
        Parity::Odd
    };
    if actual != polarity {
        return Err(TranslateError::PolarityMismatch {
            actual: negations,
            stated: polarity,
        });
    }
    let guard = isdef_formula(theory, cursor);
    let replacement = match polarity {
        Parity::Even => Formula::and(guard, cursor.clone()),
        Parity::Odd => Formula::or(Formula::not(guard), cursor.clone()),
    };
    Ok(rebuild(phi, path, &replacement))
}

fn rebuild(phi: &Formula, path: &[usize], replacement: &Formula) -> Formula {
    let Some((&step, rest)) = path.split_first() else {
        return replacement.clone();
    };
    match (phi, step) {
        (Formula::Not(p), 0) => Formula::not(rebuild(p, rest, replacement)),
        (Formula::And(p, q), 0) => Formula::and(rebuild(p, rest, replacement), (**q).clone()),
        (Formula::And(p, q), 1) => Formula::and((**p).clone(), rebuild(q, rest, replacement)),
        (Formula::Or(p, q), 0) => Formula::or(rebuild(p, rest, replacement), (**q).clone()),
        (Formula::Or(p, q), 1) => Formula::or((**p).clone(), rebuild(q, rest, replacement)),
        (Formula::Forall(x, p), 0) => Formula::forall(*x, rebuild(p, rest, replacement)),
        (Formula::Exists(x, p), 0) => Formula::exists(*x, rebuild(p, rest, replacement)),
        _ => unreachable!("path validated before rebuild"),
    }
}

/// Extends a theory so that a relation can behave as if partial.
///
/// Adds a fresh function symbol of the relation's arity with the supplied
/// definedness formula. Atoms built with [`partial_atom`] then evaluate to
/// `U` exactly where that function is undefined: the relation's own table
/// should hold on those tuples so the conjunction cannot reach `F` there.
pub fn encode_partial_relation(
    theory: &Theory,
    rel: &str,
    witness_fn: &str,
    witness_isdef: Formula,
) -> Result<Theory, TranslateError> {
    let arity = theory
        .sig()
        .rel_arity(rel)
        .ok_or_else(|| TranslateError::NoSuchRelation(rel.to_string()))?;
    let mut sig = theory.sig().clone();
    sig.add_func(witness_fn, arity)?;
    let mut out = Theory::new(sig);
    for (f, _) in theory.sig().funcs() {
        out.set_isdef(f, theory.isdef_of(f).cloned().unwrap_or(Formula::True))?;
    }
    out.set_isdef(witness_fn, witness_isdef)?;
    for axiom in theory.axioms() {
        out.add_axiom(axiom.clone())?;
    }
    Ok(out)
}

/// `R(args) ∧ (f(args) = f(args))`: undefined where `f` is undefined,
/// otherwise the plain relation atom.
pub fn partial_atom(rel: &str, witness_fn: &str, args: Vec<Term>) -> Formula {
    let call = Term::App(witness_fn.to_string(), args.clone());
    Formula::and(
        Formula::Rel(rel.to_string(), args),
        Formula::Eq(call.clone(), call),
    )
}
