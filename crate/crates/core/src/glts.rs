//! Finite guarded labelled transition systems.
//!
//! A [`Glts`] is a finite set of states, a finite alphabet, and a total
//! transition map `state → FinSet<(action, state)>`. The *guarded* reading
//! is in the semantics, not the data: the target of a transition lives one
//! observation level later, which is what [`crate::approx`] and
//! [`crate::bisim`] count with their depth budgets.
//!
//! The textual `.glts` format has one declaration per line — `state <id>`,
//! `action <id>`, `trans <src> <label> <dst>` — order-insensitive, with
//! `#` comments. Identifiers are arbitrary whitespace-free tokens.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::canon_set::FinSet;
use crate::functor_kit::{FValue, FunctorExpr};

/// A state identifier (interned as a string, globally ordered).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StateId(pub String);

/// An action identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ActionId(pub String);

impl StateId {
    pub fn new(s: impl Into<String>) -> Self {
        StateId(s.into())
    }
}

impl ActionId {
    pub fn new(s: impl Into<String>) -> Self {
        ActionId(s.into())
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Debug for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// One labelled transition, for reports and construction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Transition {
    pub source: StateId,
    pub label: ActionId,
    pub target: StateId,
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} --{}--> {}", self.source, self.label, self.target)
    }
}

/// A single invariant violation found by validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownSource(Transition),
    UnknownLabel(Transition),
    UnknownTarget(Transition),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownSource(t) => write!(f, "transition {t} has an undeclared source"),
            Violation::UnknownLabel(t) => write!(f, "transition {t} has an undeclared label"),
            Violation::UnknownTarget(t) => write!(f, "transition {t} has an undeclared target"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GltsError {
    #[error("unknown state `{0}`")]
    UnknownState(StateId),
    #[error("invalid system: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A finite guarded LTS. Immutable once constructed; construction validates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Glts {
    states: FinSet<StateId>,
    actions: FinSet<ActionId>,
    trans: BTreeMap<StateId, FinSet<(ActionId, StateId)>>,
}

impl Glts {
    /// Builds a system from its parts, after checking the invariants:
    /// every transition endpoint declared, every label declared. The
    /// transition map is made total on `states`.
    pub fn new(
        states: FinSet<StateId>,
        actions: FinSet<ActionId>,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, GltsError> {
        let transitions: Vec<Transition> = transitions.into_iter().collect();
        let violations = validate_parts(&states, &actions, &transitions);
        if !violations.is_empty() {
            return Err(GltsError::Invalid(violations));
        }
        let mut trans: BTreeMap<StateId, FinSet<(ActionId, StateId)>> = states
            .iter()
            .map(|x| (x.clone(), FinSet::empty()))
            .collect();
        for t in transitions {
            let entry = trans.get_mut(&t.source).expect("validated source");
            *entry = entry.inserted((t.label, t.target));
        }
        Ok(Glts {
            states,
            actions,
            trans,
        })
    }

    pub fn states(&self) -> &FinSet<StateId> {
        &self.states
    }

    pub fn actions(&self) -> &FinSet<ActionId> {
        &self.actions
    }

    /// The outgoing transitions of `x`.
    pub fn trans(&self, x: &StateId) -> Result<&FinSet<(ActionId, StateId)>, GltsError> {
        self.trans
            .get(x)
            .ok_or_else(|| GltsError::UnknownState(x.clone()))
    }

    /// All transitions, in canonical order.
    pub fn transitions(&self) -> Vec<Transition> {
        self.trans
            .iter()
            .flat_map(|(src, outs)| {
                outs.iter().map(|(a, dst)| Transition {
                    source: src.clone(),
                    label: a.clone(),
                    target: dst.clone(),
                })
            })
            .collect()
    }

    /// `{x' | x --a--> x'}`.
    pub fn successors(&self, x: &StateId, a: &ActionId) -> Result<FinSet<StateId>, GltsError> {
        Ok(self
            .trans(x)?
            .filter(|(b, _)| b == a)
            .map(|(_, y)| y.clone()))
    }

    /// The set of actions `x` can take now.
    pub fn action_set(&self, x: &StateId) -> Result<FinSet<ActionId>, GltsError> {
        Ok(self.trans(x)?.map(|(a, _)| a.clone()))
    }

    /// Least set containing `x` and closed under transitions.
    pub fn reachable(&self, x: &StateId) -> Result<FinSet<StateId>, GltsError> {
        self.trans(x)?;
        let mut seen = FinSet::singleton(x.clone());
        let mut frontier = vec![x.clone()];
        while let Some(y) = frontier.pop() {
            for (_, z) in self.trans(&y).expect("reachable states are known") {
                if !seen.member(z) {
                    seen = seen.inserted(z.clone());
                    frontier.push(z.clone());
                }
            }
        }
        Ok(seen)
    }

    /// The system viewed as a coalgebra for `Pfin(actions × Id)`.
    pub fn as_coalgebra(&self) -> GltsCoalgebra {
        let functor = FunctorExpr::pfin(FunctorExpr::prod(
            FunctorExpr::ConstFin(self.actions.clone()),
            FunctorExpr::Id,
        ));
        let structure = self
            .trans
            .iter()
            .map(|(x, outs)| {
                let v = FValue::Set(
                    outs.iter()
                        .map(|(a, y)| {
                            FValue::pair(FValue::Atom(a.clone()), FValue::Carrier(y.clone()))
                        })
                        .collect(),
                );
                (x.clone(), v)
            })
            .collect();
        GltsCoalgebra {
            functor,
            carrier: self.states.clone(),
            structure,
        }
    }

    /// Parses the `.glts` textual format.
    pub fn parse_text(src: &str) -> Result<Self, GltsError> {
        let mut states: Vec<StateId> = Vec::new();
        let mut actions: Vec<ActionId> = Vec::new();
        let mut transitions: Vec<Transition> = Vec::new();
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut words = content.split_whitespace();
            let keyword = words.next().expect("nonempty line");
            let rest: Vec<&str> = words.collect();
            match (keyword, rest.as_slice()) {
                ("state", [id]) => states.push(StateId::new(*id)),
                ("action", [id]) => actions.push(ActionId::new(*id)),
                ("trans", [src, label, dst]) => transitions.push(Transition {
                    source: StateId::new(*src),
                    label: ActionId::new(*label),
                    target: StateId::new(*dst),
                }),
                ("state" | "action" | "trans", _) => {
                    return Err(GltsError::Parse {
                        line,
                        msg: format!("`{keyword}` declaration has the wrong number of fields"),
                    })
                }
                (other, _) => {
                    return Err(GltsError::Parse {
                        line,
                        msg: format!("unknown declaration `{other}`"),
                    })
                }
            }
        }
        Glts::new(
            states.into_iter().collect(),
            actions.into_iter().collect(),
            transitions,
        )
    }

    /// Serde-friendly view mirroring the textual format's fields.
    pub fn to_json(&self) -> GltsJson {
        GltsJson {
            states: self.states.iter().cloned().collect(),
            actions: self.actions.iter().cloned().collect(),
            transitions: self.transitions(),
        }
    }
}

/// Checks the invariants of a prospective system; the report lists every
/// violation rather than stopping at the first.
pub fn validate_parts(
    states: &FinSet<StateId>,
    actions: &FinSet<ActionId>,
    transitions: &[Transition],
) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in transitions {
        if !states.member(&t.source) {
            out.push(Violation::UnknownSource(t.clone()));
        }
        if !actions.member(&t.label) {
            out.push(Violation::UnknownLabel(t.clone()));
        }
        if !states.member(&t.target) {
            out.push(Violation::UnknownTarget(t.clone()));
        }
    }
    out
}

/// The coalgebraic view of a [`Glts`]: functor, carrier, structure map.
#[derive(Clone, Debug)]
pub struct GltsCoalgebra {
    pub functor: FunctorExpr<ActionId>,
    pub carrier: FinSet<StateId>,
    pub structure: BTreeMap<StateId, FValue<ActionId, StateId>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GltsJson {
    pub states: Vec<StateId>,
    pub actions: Vec<ActionId>,
    pub transitions: Vec<Transition>,
}

impl fmt::Display for Glts {
    /// Emits the `.glts` textual format (round-trips through `parse_text`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.states {
            writeln!(f, "state {x}")?;
        }
        for a in &self.actions {
            writeln!(f, "action {a}")?;
        }
        for t in self.transitions() {
            writeln!(f, "trans {} {} {}", t.source, t.label, t.target)?;
        }
        Ok(())
    }
}
