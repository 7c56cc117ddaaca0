//! A small CCS front-end.
//!
//! Processes are de Bruijn terms: channel names are *levels* (the
//! innermost binder carries the highest index, so a term well-scoped
//! under `n` names uses levels `0..n`, and entering a `ν` binder adds
//! level `n` without renumbering anything), while recursion variables are
//! ordinary de Bruijn *indices* (innermost `μ` is `Var(0)`). With levels,
//! unfolding a `μ` needs no channel shifting at all — a scope-`n` term is
//! verbatim a scope-`n+1` term.
//!
//! The transition semantics [`act`] follows the standard clauses: prefix
//! fires, sum unions, parallel composes by interleaving plus synchronized
//! `τ`-steps, restriction filters the bound channel and re-wraps
//! survivors, and `μ` unfolds once syntactically. Guardedness (recursion
//! variables only under a prefix) makes this terminate.
//!
//! [`compile`] explores the act-reachable terms of a definition file into
//! a finite [`Glts`], identifying states by structural equality of ASTs —
//! no congruence like `P∥0 ≡ P` is applied; identifying behaviour is the
//! bisimilarity modules' job.

pub mod parse;

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::canon_set::FinSet;
use crate::glts::{ActionId, Glts, StateId, Transition};

pub use parse::{parse_file, parse_process, parse_process_with, pretty, CcsFile};

/// A CCS label over de Bruijn channel levels.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Label {
    In(usize),
    Out(usize),
    Tau,
}

/// A CCS process term.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Process {
    Nil,
    Prefix(Label, Box<Process>),
    Sum(Box<Process>, Box<Process>),
    Par(Box<Process>, Box<Process>),
    /// Restriction: the body is scoped one channel level higher; the new
    /// level is the current scope size.
    Nu(Box<Process>),
    /// Recursion variable (de Bruijn index, innermost `μ` = 0).
    Var(usize),
    Mu(Box<Process>),
}

impl Process {
    pub fn prefix(l: Label, p: Process) -> Self {
        Process::Prefix(l, Box::new(p))
    }

    pub fn sum(l: Process, r: Process) -> Self {
        Process::Sum(Box::new(l), Box::new(r))
    }

    pub fn par(l: Process, r: Process) -> Self {
        Process::Par(Box::new(l), Box::new(r))
    }

    pub fn nu(p: Process) -> Self {
        Process::Nu(Box::new(p))
    }

    pub fn mu(p: Process) -> Self {
        Process::Mu(Box::new(p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CcsError {
    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("recursion variable `{name}` is not guarded by an action prefix")]
    Unguarded { name: String },
    #[error("unknown channel name `{0}`")]
    UnboundName(String),
    #[error("term is not well-scoped: {0}")]
    IllScoped(String),
    #[error("state limit {limit} exceeded while exploring the term space")]
    StateLimit { limit: usize },
    #[error("no definition named `{0}`")]
    UnknownDefinition(String),
}

/// Is `p` well-scoped under `names` channel levels and `recs` enclosing
/// recursion binders?
pub fn well_scoped(p: &Process, names: usize, recs: usize) -> bool {
    match p {
        Process::Nil => true,
        Process::Prefix(l, q) => {
            let label_ok = match l {
                Label::In(k) | Label::Out(k) => *k < names,
                Label::Tau => true,
            };
            label_ok && well_scoped(q, names, recs)
        }
        Process::Sum(a, b) | Process::Par(a, b) => {
            well_scoped(a, names, recs) && well_scoped(b, names, recs)
        }
        Process::Nu(q) => well_scoped(q, names + 1, recs),
        Process::Var(i) => *i < recs,
        Process::Mu(q) => well_scoped(q, names, recs + 1),
    }
}

/// A guardedness violation: the `mu_index`-th `μ` binder (preorder, from
/// 0) has an occurrence of its variable not under any prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GuardViolation {
    pub mu_index: usize,
}

/// Checks that every recursion variable occurs only under an action
/// prefix within its binder.
pub fn check_guarded(p: &Process) -> Result<(), GuardViolation> {
    fn walk(
        p: &Process,
        unguarded: &[Option<usize>],
        counter: &mut usize,
    ) -> Result<(), GuardViolation> {
        match p {
            Process::Nil => Ok(()),
            Process::Var(i) => match unguarded.get(*i) {
                Some(Some(mu_index)) => Err(GuardViolation {
                    mu_index: *mu_index,
                }),
                _ => Ok(()),
            },
            Process::Prefix(_, q) => {
                // a prefix guards everything beneath it
                let cleared = vec![None; unguarded.len()];
                walk(q, &cleared, counter)
            }
            Process::Sum(a, b) | Process::Par(a, b) => {
                walk(a, unguarded, counter)?;
                walk(b, unguarded, counter)
            }
            Process::Nu(q) => walk(q, unguarded, counter),
            Process::Mu(q) => {
                let mu_index = *counter;
                *counter += 1;
                let mut inner = Vec::with_capacity(unguarded.len() + 1);
                inner.push(Some(mu_index));
                inner.extend_from_slice(unguarded);
                walk(q, &inner, counter)
            }
        }
    }
    walk(p, &[], &mut 0)
}

/// Substitutes `q` for `Var(var)` in `p`. Channel levels need no
/// adjustment (levels are absolute); recursion indices shift in the
/// standard way for a disappearing binder.
pub fn subst(p: &Process, q: &Process, var: usize) -> Process {
    match p {
        Process::Nil => Process::Nil,
        Process::Prefix(l, body) => Process::prefix(*l, subst(body, q, var)),
        Process::Sum(a, b) => Process::sum(subst(a, q, var), subst(b, q, var)),
        Process::Par(a, b) => Process::par(subst(a, q, var), subst(b, q, var)),
        Process::Nu(body) => Process::nu(subst(body, q, var)),
        Process::Var(i) => {
            if *i == var {
                q.clone()
            } else if *i > var {
                Process::Var(*i - 1)
            } else {
                Process::Var(*i)
            }
        }
        Process::Mu(body) => Process::mu(subst(body, q, var + 1)),
    }
}

/// The transitions of `p`, read at channel scope `scope`: a canonical set
/// of (label, successor) pairs, the successor living one level later.
///
/// `p` must be closed in recursion variables and guarded; guardedness
/// bounds the `μ`-unfolding and makes the recursion terminate.
pub fn act(p: &Process, scope: usize) -> FinSet<(Label, Process)> {
    match p {
        Process::Nil => FinSet::empty(),
        Process::Prefix(l, q) => FinSet::singleton((*l, (**q).clone())),
        Process::Sum(a, b) => act(a, scope).union(&act(b, scope)),
        Process::Par(a, b) => {
            let u = act(a, scope);
            let v = act(b, scope);
            act_l(&u, b).union(&act_r(a, &v)).union(&synch(&u, &v))
        }
        Process::Nu(q) => act_nu(&act(q, scope + 1), scope),
        Process::Var(_) => {
            debug_assert!(false, "act on an open term");
            FinSet::empty()
        }
        Process::Mu(body) => act(&subst(body, p, 0), scope),
    }
}

/// Left interleaving: `P` moves, `Q` tags along.
pub fn act_l(u: &FinSet<(Label, Process)>, q: &Process) -> FinSet<(Label, Process)> {
    u.map(|(l, p2)| (*l, Process::par(p2.clone(), q.clone())))
}

/// Right interleaving: `Q` moves, `P` tags along.
pub fn act_r(p: &Process, v: &FinSet<(Label, Process)>) -> FinSet<(Label, Process)> {
    v.map(|(l, q2)| (*l, Process::par(p.clone(), q2.clone())))
}

/// Synchronization: complementary pairs meet in a `τ`-step. Defined by
/// iteration over the canonical elements; the result only depends on
/// membership, so it is well-defined on sets.
pub fn synch(
    u: &FinSet<(Label, Process)>,
    v: &FinSet<(Label, Process)>,
) -> FinSet<(Label, Process)> {
    let mut out = FinSet::empty();
    for (l1, p2) in u {
        for (l2, q2) in v {
            let matched = matches!((l1, l2), (Label::In(m), Label::Out(n)) if m == n)
                || matches!((l1, l2), (Label::Out(m), Label::In(n)) if m == n);
            if matched {
                out = out.inserted((Label::Tau, Process::par(p2.clone(), q2.clone())));
            }
        }
    }
    out
}

/// Restriction: drops transitions on the restricted channel (the level
/// bound by the enclosing `ν`, i.e. `restricted`), re-wraps survivors
/// under `ν`. Surviving labels are strictly below the restricted level,
/// so they are already well-scoped outside and pass through unchanged.
pub fn act_nu(
    u: &FinSet<(Label, Process)>,
    restricted: usize,
) -> FinSet<(Label, Process)> {
    u.filter(|(l, _)| !matches!(l, Label::In(k) | Label::Out(k) if *k == restricted))
        .map(|(l, p2)| (*l, Process::nu(p2.clone())))
}

/// Renders a label with the channel names of `table` (levels beyond the
/// table get generated binder names; top-level labels never need them).
pub fn label_name(l: &Label, table: &[String]) -> String {
    match l {
        Label::In(k) => channel_name(*k, table),
        Label::Out(k) => format!("'{}", channel_name(*k, table)),
        Label::Tau => "tau".to_string(),
    }
}

pub(crate) fn channel_name(level: usize, table: &[String]) -> String {
    match table.get(level) {
        Some(name) => name.clone(),
        None => parse::generated_channel_name(level, table),
    }
}

/// A definition file compiled to one shared system.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub glts: Glts,
    /// Definition name → its initial state.
    pub roots: BTreeMap<String, StateId>,
}

/// Compiles definitions into a single [`Glts`] by exploring the
/// act-reachable terms, breadth-first in canonical term order. States are
/// pretty-printed terms; exploration stops with an error beyond
/// `state_limit` states.
pub fn compile(
    defs: &[(String, Process)],
    table: &[String],
    state_limit: usize,
) -> Result<Compiled, CcsError> {
    let scope = table.len();
    for (name, p) in defs {
        if !well_scoped(p, scope, 0) {
            return Err(CcsError::IllScoped(format!("definition `{name}`")));
        }
        if check_guarded(p).is_err() {
            // parse-produced terms are already checked; give AST users a
            // name-free but precise error
            return Err(CcsError::Unguarded {
                name: format!("in definition `{name}`"),
            });
        }
    }
    let mut visited: BTreeMap<Process, FinSet<(Label, Process)>> = BTreeMap::new();
    let mut frontier: BTreeSet<Process> = defs.iter().map(|(_, p)| p.clone()).collect();
    while let Some(p) = frontier.pop_first() {
        if visited.contains_key(&p) {
            continue;
        }
        if visited.len() == state_limit {
            return Err(CcsError::StateLimit { limit: state_limit });
        }
        let outs = act(&p, scope);
        for (_, q) in &outs {
            if !visited.contains_key(q) {
                frontier.insert(q.clone());
            }
        }
        visited.insert(p, outs);
    }
    let ids: BTreeMap<&Process, StateId> = visited
        .keys()
        .map(|p| (p, StateId::new(pretty(p, table))))
        .collect();
    let mut actions: FinSet<ActionId> = FinSet::empty();
    let mut transitions = Vec::new();
    for (p, outs) in &visited {
        for (l, q) in outs {
            let a = ActionId::new(label_name(l, table));
            actions = actions.inserted(a.clone());
            transitions.push(Transition {
                source: ids[p].clone(),
                label: a,
                target: ids[q].clone(),
            });
        }
    }
    let glts = Glts::new(ids.values().cloned().collect(), actions, transitions)
        .expect("exploration closes the state space");
    let roots = defs
        .iter()
        .map(|(name, p)| (name.clone(), ids[p].clone()))
        .collect();
    Ok(Compiled { glts, roots })
}

/// Compiles a single process; returns the system and its initial state.
pub fn to_glts(
    p: &Process,
    table: &[String],
    state_limit: usize,
) -> Result<(Glts, StateId), CcsError> {
    let defs = [("main".to_string(), p.clone())];
    let compiled = compile(&defs, table, state_limit)?;
    let root = compiled.roots["main"].clone();
    Ok((compiled.glts, root))
}
