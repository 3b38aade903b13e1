//! Three-valued first-order logic with partial functions.
//!
//! Truth values form the chain `F < U < T`, where `U` marks formulas whose
//! value hinges on an undefined term. Function symbols denote partial
//! functions, and a theory pairs its axioms with one *definedness formula*
//! per function symbol describing exactly where that function is defined.
//!
//! The crate is organized as follows:
//!
//! * [`syntax`] — terms and formulas with integer-indexed variables,
//!   free-variable analysis, capture-checked substitution, and bound-variable
//!   renaming.
//! * [`surface`] — a concrete text syntax: lexer, parser, and printer, plus
//!   the sugared operator set (Kleene/Łukasiewicz/strict/short-circuit
//!   connectives, strict quantifiers, `*`, `E!`, `ite`).
//! * [`semantics`] — finite structures with partial function tables, strict
//!   term evaluation, total ternary formula evaluation, structure
//!   enumeration, and bounded countermodel search.
//! * [`isdef`] — theories, validation of the per-function definedness map,
//!   and the recursive `isdef` construction for terms and formulas.
//! * [`regularity`] — the extended semantics over a domain with an explicit
//!   "missing value" marker, and exhaustive regularity checks for truth
//!   tables and formulas.
//! * [`kernel`] — an LCF-style proof checker: primitive rule schemas behind
//!   [`kernel::apply_rule`], compressed derivations, and derived-rule macros
//!   that expand to kernel-checked derivations.
//! * [`script`] — the proof-script file format replayed through the kernel.
//! * [`translate`] — desugaring of the extended operators into the core
//!   language and truth-preserving guard rewriting.

pub mod isdef;
// pub mod kernel;
pub mod regularity;
// pub mod script;
pub mod semantics;
pub mod surface;
pub mod syntax;
pub mod translate;



pub use syntax::{Formula, Signature, Term};
