//! Guarded labelled transition systems and their step-indexed theory.
//!
//! The library is organized around a single shape of system: states with
//! finitely-branching labelled transitions, where the targets of a
//! transition live "one step later". Concretely:
//!
//! * [`canon_set`] — canonical finite sets (sorted, duplicate-free), the
//!   ambient powerset functor.
//! * [`functor_kit`] — a small grammar of polynomial functors with finite
//!   powerset, relation lifting, and lifting witnesses.
//! * [`glts`] — finite guarded LTSs, their textual format, and their view
//!   as coalgebras for `Pfin(A x Id)`.
//! * [`approx`] — depth-`n` process trees and the evaluation map that
//!   unfolds a system state into its `n`-step behaviour.
//! * [`bisim`] — level-indexed bisimilarity, its stabilization, the
//!   coincidence with tree equality, and the coalgebraic cross-check via
//!   relation lifting.
//! * [`ccs`] — a small CCS front-end (parser, operational semantics,
//!   compilation to a finite system).
//! * [`hml`] — a negation-free Hennessy-Milner logic with step-indexed
//!   satisfaction and distinguishing-formula search.
//! * [`cli`] — the `gproc` batch command-line interface.

pub mod approx;
pub mod bisim;
pub mod canon_set;
pub mod ccs;
pub mod cli;
pub mod functor_kit;
pub mod glts;
pub mod hml;
pub mod limits;
