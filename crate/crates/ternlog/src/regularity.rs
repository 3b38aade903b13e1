//! Regularity checks over the extended semantics.
//!
//! This module extends evaluation with an explicit marker for the missing
//! value of an undefined term: a free variable may be given `Missing`
//! instead of a domain element, in which case looking it up is undefined
//! and strictness propagates from there. Bound variables still range over
//! actual domain elements only. The marker exists only in this module's
//! API; nothing else in the crate ever sees it.
//!
//! A truth function or formula is *regular* when, position by position, it
//! either yields `U` on an undefined input or ignores that position
//! entirely (same value for the marker and for every element). The core
//! language is regular by construction; the checks here verify that
//! exhaustively on finite structures and expose the counterexample when a
//! hand-built table is not.

use thiserror::Error;

use crate::semantics::{EvalError, Structure, TruthValue};
use crate::syntax::{Formula, Term, VarIndex};

/// A domain element or the marker for a missing value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtElement {
    Elem(usize),
    Missing,
}

impl ExtElement {
    fn as_option(self) -> Option<usize> {
        match self {
            ExtElement::Elem(d) => Some(d),
            ExtElement::Missing => None,
        }
    }
}

/// Evaluates a term with extended argument values: `args[i-1]` is the
/// extended value of `v{i}`, and looking up a missing value is undefined.
pub fn eval_term_ext(
    structure: &Structure,
    args: &[ExtElement],
    term: &Term,
) -> Result<Option<usize>, EvalError> {
    match term {
        Term::Var(i) => {
            let idx = *i as usize - 1;
            match args.get(idx).copied() {
                Some(ExtElement::Elem(d)) => Ok(Some(d)),
                Some(ExtElement::Missing) | None => Ok(None),
            }
        }
        Term::Const(c) => Ok(Some(structure.const_value(c)?)),
        Term::App(f, subterms) => {
            let mut values = Vec::with_capacity(subterms.len());
            for t in subterms {
                match eval_term_ext(structure, args, t)? {
                    Some(v) => values.push(v),
                    None => return Ok(None),
                }
            }
            structure.func_value(f, &values)
        }
    }
}

/// Evaluates a formula with extended argument values. Quantified variables
/// range over the domain only, never over the missing marker.
pub fn eval_formula_ext(
    structure: &Structure,
    args: &[ExtElement],
    phi: &Formula,
) -> Result<TruthValue, EvalError> {
    match phi {
        Formula::False => Ok(TruthValue::False),
        Formula::True => Ok(TruthValue::True),
        Formula::Eq(t1, t2) => {
            let v1 = eval_term_ext(structure, args, t1)?;
            let v2 = eval_term_ext(structure, args, t2)?;
            Ok(match (v1, v2) {
                (Some(a), Some(b)) if a == b => TruthValue::True,
                (Some(_), Some(_)) => TruthValue::False,
                _ => TruthValue::Undef,
            })
        }
        Formula::Rel(r, subterms) => {
            let mut values = Vec::with_capacity(subterms.len());
            for t in subterms {
                match eval_term_ext(structure, args, t)? {
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
        Formula::Not(p) => Ok(!eval_formula_ext(structure, args, p)?),
        Formula::And(p, q) => {
            let a = eval_formula_ext(structure, args, p)?;
            if a == TruthValue::False {
                return Ok(TruthValue::False);
            }
            Ok(a & eval_formula_ext(structure, args, q)?)
        }
        Formula::Or(p, q) => {
            let a = eval_formula_ext(structure, args, p)?;
            if a == TruthValue::True {
                return Ok(TruthValue::True);
            }
            Ok(a | eval_formula_ext(structure, args, q)?)
        }
        Formula::Forall(i, p) | Formula::Exists(i, p) => {
            let idx = *i as usize - 1;
            let mut local = args.to_vec();
            if local.len() <= idx {
                local.resize(idx + 1, ExtElement::Missing);
            }
            let universal = matches!(phi, Formula::Forall(..));
            let mut acc = if universal {
                TruthValue::True
            } else {
                TruthValue::False
            };
            for d in 0..structure.domain_size() {
                local[idx] = ExtElement::Elem(d);
                let v = eval_formula_ext(structure, &local, p)?;
                if universal {
                    acc = acc & v;
                    if acc == TruthValue::False {
                        break;
                    }
                } else {
                    acc = acc | v;
                    if acc == TruthValue::True {
                        break;
                    }
                }
            }
            Ok(acc)
        }
    }
}

/// A truth function `{F,U,T}^n -> {F,U,T}` given by its full table.
///
/// Entries are indexed by the rank of the argument tuple in base 3 with
/// `F = 0`, `U = 1`, `T = 2`, first argument most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    arity: usize,
    entries: Vec<TruthValue>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("table needs {expected} entries for arity {arity}, got {got}")]
pub struct TableSizeError {
    arity: usize,
    expected: usize,
    got: usize,
}

impl TruthTable {
    pub fn new(arity: usize, entries: Vec<TruthValue>) -> Result<TruthTable, TableSizeError> {
        let expected = 3usize.pow(arity as u32);
        if entries.len() != expected {
            return Err(TableSizeError {
                arity,
                expected,
                got: entries.len(),
            });
        }
        Ok(TruthTable { arity, entries })
    }

    pub fn from_fn(arity: usize, f: impl Fn(&[TruthValue]) -> TruthValue) -> TruthTable {
        let size = 3usize.pow(arity as u32);
        let entries = (0..size).map(|rank| f(&Self::tuple(arity, rank))).collect();
        TruthTable { arity, entries }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn tuple(arity: usize, mut rank: usize) -> Vec<TruthValue> {
        let mut out = vec![TruthValue::False; arity];
        for slot in out.iter_mut().rev() {
            *slot = TruthValue::ALL[rank % 3];
            rank /= 3;
        }
        out
    }

    pub fn get(&self, inputs: &[TruthValue]) -> TruthValue {
        let rank = inputs.iter().fold(0, |acc, v| {
            acc * 3
                + match v {
                    TruthValue::False => 0,
                    TruthValue::Undef => 1,
                    TruthValue::True => 2,
                }
        });
        self.entries[rank]
    }
}

/// Where a truth table fails regularity: at `position` (1-based), with the
/// other arguments as in `context` (which has `U` at the position), the
/// `U` output differs from the output at some classical input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableIrregularity {
    pub position: usize,
    pub context: Vec<TruthValue>,
    pub at_undef: TruthValue,
    pub differs_at: TruthValue,
    pub differing_output: TruthValue,
}

/// Checks position-by-position regularity of a truth table.
pub fn check_regular_truth_table(table: &TruthTable) -> Result<(), TableIrregularity> {
    let arity = table.arity;
    for position in 1..=arity {
        let others = arity - 1;
        for rank in 0..3usize.pow(others as u32) {
            let fill = TruthTable::tuple(others, rank);
            let mut inputs = Vec::with_capacity(arity);
            inputs.extend_from_slice(&fill[..position - 1]);
            inputs.push(TruthValue::Undef);
            inputs.extend_from_slice(&fill[position - 1..]);
            let at_undef = table.get(&inputs);
            if at_undef == TruthValue::Undef {
                continue;
            }
            for v in [TruthValue::False, TruthValue::True] {
                let mut probe = inputs.clone();
                probe[position - 1] = v;
                let out = table.get(&probe);
                if out != at_undef {
                    return Err(TableIrregularity {
                        position,
                        context: inputs,
                        at_undef,
                        differs_at: v,
                        differing_output: out,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Where a formula (or injected function) fails regularity on a structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaIrregularity {
    pub position: VarIndex,
    pub context: Vec<ExtElement>,
    pub at_missing: TruthValue,
    pub differs_at_element: usize,
    pub differing_output: TruthValue,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegularityError {
    #[error("context space of size {size} exceeds the budget {budget}")]
    BudgetExceeded { size: u64, budget: u64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Exhaustive regularity check of an arbitrary extended-valued function.
///
/// `arity` is the number of argument positions; contexts range over
/// elements-or-missing at every other position. Exposed so tests can probe
/// the checker with hand-built irregular functions that no formula of the
/// core language can express.
pub fn check_regular_extfn<F>(
    domain_size: usize,
    arity: usize,
    budget: u64,
    f: F,
) -> Result<Result<(), FormulaIrregularity>, RegularityError>
where
    F: Fn(&[ExtElement]) -> Result<TruthValue, EvalError>,
{
    if arity == 0 {
        return Ok(Ok(()));
    }
    let ext = domain_size as u64 + 1;
    let space = (arity as u64) * ext.pow(arity as u32 - 1);
    if space > budget {
        return Err(RegularityError::BudgetExceeded {
            size: space,
            budget,
        });
    }
    let ext_values: Vec<ExtElement> = (0..domain_size)
        .map(ExtElement::Elem)
        .chain(std::iter::once(ExtElement::Missing))
        .collect();
    for position in 1..=arity {
        let others = arity - 1;
        let mut rank = 0u64;
        let total = ext.pow(others as u32);
        while rank < total {
            let mut fill = Vec::with_capacity(others);
            let mut r = rank;
            for _ in 0..others {
                fill.push(ext_values[(r % ext) as usize]);
                r /= ext;
            }
            let mut context = Vec::with_capacity(arity);
            context.extend_from_slice(&fill[..position - 1]);
            context.push(ExtElement::Missing);
            context.extend_from_slice(&fill[position - 1..]);
            let at_missing = f(&context)?;
            if at_missing != TruthValue::Undef {
                for d in 0..domain_size {
                    let mut probe = context.clone();
                    probe[position - 1] = ExtElement::Elem(d);
                    let out = f(&probe)?;
                    if out != at_missing {
                        return Ok(Err(FormulaIrregularity {
                            position: position as VarIndex,
                            context,
                            at_missing,
                            differs_at_element: d,
                            differing_output: out,
                        }));
                    }
                }
            }
            rank += 1;
        }
    }
    Ok(Ok(()))
}

/// Exhaustive regularity check of a formula on a finite structure, over
/// all free positions `1..=arity` and all extended contexts.
pub fn check_regular_formula(
    structure: &Structure,
    phi: &Formula,
    budget: u64,
) -> Result<Result<(), FormulaIrregularity>, RegularityError> {
    let arity = phi.arity() as usize;
    check_regular_extfn(structure.domain_size(), arity, budget, |args| {
        eval_formula_ext(structure, args, phi)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{enumerate_structures, eval_formula, Assignment};
    use crate::surface::parse_formula;
    use crate::syntax::Signature;

    fn fixture_sig() -> Signature {
        let mut sig = Signature::new();
        sig.add_const("c").unwrap();
        sig.add_func("f", 1).unwrap();
        sig.add_rel("p", 1).unwrap();
        sig
    }

    fn fixture_structure() -> Structure {
        let mut s = Structure::new(&fixture_sig(), 2).unwrap();
        s.set_const("c", 0).unwrap();
        s.set_func("f", &[1], Some(0)).unwrap();
        s.set_rel("p", &[1], true).unwrap();
        s
    }

    fn parse(text: &str) -> Formula {
        parse_formula(text, &fixture_sig())
            .unwrap()
            .into_core()
            .unwrap()
    }

    #[test]
    fn missing_variable_is_undefined() {
        let s = fixture_structure();
        assert_eq!(
            eval_term_ext(&s, &[ExtElement::Missing], &Term::Var(1)).unwrap(),
            None
        );
        assert_eq!(
            eval_term_ext(&s, &[ExtElement::Missing], &Term::Const("c".into())).unwrap(),
            Some(0)
        );
        let fv = Term::App("f".into(), vec![Term::Var(1)]);
        assert_eq!(eval_term_ext(&s, &[ExtElement::Missing], &fv).unwrap(), None);
    }

    #[test]
    fn atoms_with_missing_values() {
        let s = fixture_structure();
        let phi = parse("v1 = v1");
        assert_eq!(
            eval_formula_ext(&s, &[ExtElement::Missing], &phi).unwrap(),
            TruthValue::Undef
        );
        assert_eq!(
            eval_formula_ext(&s, &[ExtElement::Missing], &Formula::True).unwrap(),
            TruthValue::True
        );
        // the bound variable still ranges over the domain
        let phi = parse("exists v2 (v2 = v2)");
        assert_eq!(
            eval_formula_ext(&s, &[ExtElement::Missing], &phi).unwrap(),
            TruthValue::True
        );
    }

    #[test]
    fn agrees_with_plain_evaluation_without_missing() {
        let s = fixture_structure();
        let phi = parse("forall v2 (p(v2) \\/ not (f(v1) = v2))");
        for d in 0..2 {
            let nu = Assignment::constant(0).with(1, d);
            assert_eq!(
                eval_formula_ext(&s, &[ExtElement::Elem(d)], &phi).unwrap(),
                eval_formula(&s, &nu, &phi).unwrap()
            );
        }
    }

    #[test]
    fn lukasiewicz_table_is_irregular() {
        use TruthValue::*;
        let luk = TruthTable::from_fn(2, |args| match (args[0], args[1]) {
            (Undef, Undef) => True,
            (a, b) => (!a) | b,
        });
        let witness = check_regular_truth_table(&luk).unwrap_err();
        // varying the antecedent with the consequent held at U:
        // U ~> U gives T while T ~> U gives U
        assert_eq!(witness.position, 1);
        assert_eq!(witness.context, vec![Undef, Undef]);
        assert_eq!(witness.at_undef, True);
        assert_eq!(witness.differs_at, True);
        assert_eq!(witness.differing_output, Undef);
    }

    #[test]
    fn kleene_tables_are_regular() {
        let and = TruthTable::from_fn(2, |args| args[0] & args[1]);
        assert!(check_regular_truth_table(&and).is_ok());
        let or = TruthTable::from_fn(2, |args| args[0] | args[1]);
        assert!(check_regular_truth_table(&or).is_ok());
        let neg = TruthTable::from_fn(1, |args| !args[0]);
        assert!(check_regular_truth_table(&neg).is_ok());
        let constant = TruthTable::from_fn(2, |_| TruthValue::True);
        assert!(check_regular_truth_table(&constant).is_ok());
    }

    #[test]
    fn core_formulas_are_regular_on_small_structures() {
        let samples = [
            "f(v1) = v2",
            "p(f(v1)) \\/ not (v2 = c)",
            "forall v2 (p(v2) \\/ f(v1) = v2)",
            "exists v1 (f(v1) = v2) /\\ p(v1)",
        ];
        for text in samples {
            let phi = parse(text);
            for n in 1..=2 {
                for s in enumerate_structures(&fixture_sig(), n) {
                    let res = check_regular_formula(&s, &phi, 1_000_000).unwrap();
                    assert!(res.is_ok(), "{text} irregular on {s:?}: {res:?}");
                }
            }
        }
    }

    #[test]
    fn closed_formulas_are_vacuously_regular() {
        let s = fixture_structure();
        let phi = parse("forall v1 p(v1)");
        assert!(check_regular_formula(&s, &phi, 10).unwrap().is_ok());
    }

    #[test]
    fn injected_irregular_function_is_caught() {
        // arity 2 over domain {0,1}: yields T when both inputs are missing,
        // U otherwise — depends on position 1 at a missing input
        let verdict = check_regular_extfn(2, 2, 1_000, |args| {
            Ok(
                if args.iter().all(|a| *a == ExtElement::Missing) {
                    TruthValue::True
                } else {
                    TruthValue::Undef
                },
            )
        })
        .unwrap();
        let witness = verdict.unwrap_err();
        assert_eq!(witness.at_missing, TruthValue::True);
        assert_eq!(witness.differing_output, TruthValue::Undef);
    }

    #[test]
    fn budget_guards_large_spaces() {
        let s = fixture_structure();
        let phi = parse("p(f(v1)) \\/ p(v2) \\/ p(v3)");
        assert!(matches!(
            check_regular_formula(&s, &phi, 5),
            Err(RegularityError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn undefined_term_transfer() {
        // when substituting an undefined term yields a classical value,
        // every element of the domain yields that same value
        let th = {
            let sig = fixture_sig();
            let guard = parse_formula("not (v1 = c)", &sig)
                .unwrap()
                .into_core()
                .unwrap();
            let mut th = crate::isdef::Theory::new(sig);
            th.set_isdef("f", guard).unwrap();
            th
        };
        let t = crate::surface::parse_term("f(c)", th.sig()).unwrap();
        let samples = ["p(v1) \\/ not p(v1) \\/ p(c)", "not (v1 = v1) \\/ T"];
        for text in samples {
            let phi = parse(text);
            let substituted = phi.substitute(1, &t).unwrap();
            for n in 1..=2 {
                for s in enumerate_structures(th.sig(), n) {
                    if !crate::semantics::models_isdef(&s, &th).unwrap() {
                        continue;
                    }
                    let nu = Assignment::constant(0);
                    if crate::semantics::eval_term(&s, &nu, &t).unwrap().is_some() {
                        continue;
                    }
                    let outer = eval_formula(&s, &nu, &substituted).unwrap();
                    if outer.is_classical() {
                        for d in 0..n {
                            assert_eq!(
                                eval_formula(&s, &nu.with(1, d), &phi).unwrap(),
                                outer
                            );
                        }
                    }
                }
            }
        }
    }
}
