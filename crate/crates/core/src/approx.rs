//! Depth-indexed process approximants.
//!
//! A [`ProcTree`] with budget `n` is the `n`-th approximant of a process:
//! at budget 0 only the set of currently available actions is visible
//! (the successor lives one level later, and level 0 collapses it to a
//! point); at budget `k+1` each transition carries a budget-`k` subtree.
//! Budget `n` therefore shows `n+1` observable transition layers.
//!
//! [`eval`] unfolds a system state into its approximant; it is the unique
//! family satisfying the coalgebra recurrence
//!
//! ```text
//! eval(x, 0)   = { a          | (a, x') ∈ trans(x) }
//! eval(x, k+1) = { (a, eval(x', k)) | (a, x') ∈ trans(x) }
//! ```
//!
//! and [`check_unique`] verifies exactly that recurrence for any candidate
//! family, which pins down `eval` without running it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::canon_set::FinSet;
use crate::glts::{ActionId, Glts, GltsError, StateId, Transition};

/// The body of an approximant: labels at the leaf level, labelled
/// subtrees elsewhere.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TreeBody {
    Labels(FinSet<ActionId>),
    Branch(FinSet<(ActionId, ProcTree)>),
}

/// A depth-`budget` process approximant in canonical form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ProcTree {
    budget: usize,
    body: TreeBody,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ApproxError {
    #[error("cannot restrict a budget-0 tree")]
    BudgetZero,
    #[error("a branch node needs budget ≥ 1")]
    ZeroBudgetNode,
    #[error("child tree has budget {found}, expected {expected}")]
    ChildBudget { expected: usize, found: usize },
    #[error(transparent)]
    Glts(#[from] GltsError),
}

impl ProcTree {
    /// A budget-0 tree: just the visible action set.
    pub fn leaf(labels: FinSet<ActionId>) -> Self {
        ProcTree {
            budget: 0,
            body: TreeBody::Labels(labels),
        }
    }

    /// A budget-`budget` tree (`budget ≥ 1`) from labelled children, all
    /// of which must sit one level below.
    pub fn node(
        budget: usize,
        children: FinSet<(ActionId, ProcTree)>,
    ) -> Result<Self, ApproxError> {
        if budget == 0 {
            return Err(ApproxError::ZeroBudgetNode);
        }
        for (_, child) in &children {
            if child.budget != budget - 1 {
                return Err(ApproxError::ChildBudget {
                    expected: budget - 1,
                    found: child.budget,
                });
            }
        }
        Ok(ProcTree {
            budget,
            body: TreeBody::Branch(children),
        })
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn body(&self) -> &TreeBody {
        &self.body
    }

    /// The actions visible at the root.
    pub fn root_actions(&self) -> FinSet<ActionId> {
        match &self.body {
            TreeBody::Labels(ls) => ls.clone(),
            TreeBody::Branch(ch) => ch.map(|(a, _)| a.clone()),
        }
    }

    /// A compact, whitespace-free serialization, injective on trees.
    /// Used as a state identifier when trees are turned into a system.
    pub fn key(&self) -> String {
        fn body_key(t: &ProcTree, out: &mut String) {
            out.push('{');
            match &t.body {
                TreeBody::Labels(ls) => {
                    for (i, a) in ls.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        out.push_str(&a.0);
                    }
                }
                TreeBody::Branch(ch) => {
                    for (i, (a, c)) in ch.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        out.push('(');
                        out.push_str(&a.0);
                        out.push(',');
                        body_key(c, out);
                        out.push(')');
                    }
                }
            }
            out.push('}');
        }
        let mut out = format!("{}@", self.budget);
        body_key(self, &mut out);
        out
    }

    /// JSON view: `{"budget": n, "labels": [...]}` at the leaf level,
    /// `{"budget": n, "branches": [[action, tree], ...]}` elsewhere.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match &self.body {
            TreeBody::Labels(ls) => json!({
                "budget": self.budget,
                "labels": ls.iter().map(|a| a.0.clone()).collect::<Vec<_>>(),
            }),
            TreeBody::Branch(ch) => json!({
                "budget": self.budget,
                "branches": ch
                    .iter()
                    .map(|(a, c)| json!([a.0.clone(), c.to_json()]))
                    .collect::<Vec<_>>(),
            }),
        }
    }
}

impl fmt::Display for ProcTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            TreeBody::Labels(ls) => write!(f, "{ls}"),
            TreeBody::Branch(ch) => {
                write!(f, "{{")?;
                for (i, (a, c)) in ch.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "({a}, {c})")?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// The approximant of `x` at budget `n`.
pub fn eval(g: &Glts, x: &StateId, n: usize) -> Result<ProcTree, GltsError> {
    let mut memo = HashMap::new();
    eval_memo(g, x, n, &mut memo)
}

/// Approximants of every state at budget `n`, sharing one memo table.
pub fn eval_all(g: &Glts, n: usize) -> BTreeMap<StateId, ProcTree> {
    let mut memo = HashMap::new();
    g.states()
        .iter()
        .map(|x| {
            let t = eval_memo(g, x, n, &mut memo).expect("states are known");
            (x.clone(), t)
        })
        .collect()
}

fn eval_memo(
    g: &Glts,
    x: &StateId,
    n: usize,
    memo: &mut HashMap<(StateId, usize), ProcTree>,
) -> Result<ProcTree, GltsError> {
    if let Some(t) = memo.get(&(x.clone(), n)) {
        return Ok(t.clone());
    }
    let outs = g.trans(x)?;
    let t = if n == 0 {
        ProcTree::leaf(outs.map(|(a, _)| a.clone()))
    } else {
        let mut children = FinSet::empty();
        for (a, y) in outs {
            let sub = eval_memo(g, y, n - 1, memo)?;
            children = children.inserted((a.clone(), sub));
        }
        ProcTree::node(n, children).expect("children built at budget n-1")
    };
    memo.insert((x.clone(), n), t.clone());
    Ok(t)
}

/// Truncates the deepest layer: a budget-`n+1` tree becomes the budget-`n`
/// tree that forgets the last level of observation.
pub fn restrict(t: &ProcTree) -> Result<ProcTree, ApproxError> {
    match t.body() {
        TreeBody::Labels(_) => Err(ApproxError::BudgetZero),
        TreeBody::Branch(ch) => {
            if t.budget() == 1 {
                Ok(ProcTree::leaf(ch.map(|(a, _)| a.clone())))
            } else {
                let mut children = FinSet::empty();
                for (a, c) in ch {
                    children =
                        children.inserted((a.clone(), restrict(c).expect("budget ≥ 1 below")));
                }
                ProcTree::node(t.budget() - 1, children)
            }
        }
    }
}

/// Checks that the family `h` satisfies the coalgebra recurrence at every
/// state and every budget `0..=n`. Because the recurrence determines each
/// level from the one below, a passing family is pointwise equal to
/// [`eval`] — without this function ever calling it.
pub fn check_unique(g: &Glts, h: &dyn Fn(&StateId, usize) -> ProcTree, n: usize) -> bool {
    for k in 0..=n {
        for x in g.states() {
            let outs = g.trans(x).expect("states are known");
            let expected = if k == 0 {
                ProcTree::leaf(outs.map(|(a, _)| a.clone()))
            } else {
                let children = outs.map(|(a, y)| (a.clone(), h(y, k - 1)));
                match ProcTree::node(k, children) {
                    Ok(t) => t,
                    Err(_) => return false,
                }
            };
            if h(x, k) != expected {
                return false;
            }
        }
    }
    true
}

/// Builds a system whose states are the given trees and all their
/// subtrees, with the tree structure as transitions. Budget-0 layers
/// point at a single sink state named `unit`.
///
/// Bisimilarity in this system, read at the trees' budget, is structural
/// tree equality — which is what makes it a usable stand-in for the final
/// coalgebra at each level.
pub fn tree_system(trees: &[ProcTree]) -> (Glts, BTreeMap<ProcTree, StateId>) {
    let unit = StateId::new("unit");
    let mut ids: BTreeMap<ProcTree, StateId> = BTreeMap::new();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut actions: FinSet<ActionId> = FinSet::empty();
    let mut work: Vec<ProcTree> = trees.to_vec();
    while let Some(t) = work.pop() {
        if ids.contains_key(&t) {
            continue;
        }
        let id = StateId::new(t.key());
        ids.insert(t.clone(), id.clone());
        match t.body() {
            TreeBody::Labels(ls) => {
                for a in ls {
                    actions = actions.inserted(a.clone());
                    transitions.push(Transition {
                        source: id.clone(),
                        label: a.clone(),
                        target: unit.clone(),
                    });
                }
            }
            TreeBody::Branch(ch) => {
                for (a, c) in ch {
                    actions = actions.inserted(a.clone());
                    transitions.push(Transition {
                        source: id.clone(),
                        label: a.clone(),
                        target: StateId::new(c.key()),
                    });
                    work.push(c.clone());
                }
            }
        }
    }
    let mut states: FinSet<StateId> = ids.values().cloned().collect();
    states = states.inserted(unit);
    let g = Glts::new(states, actions, transitions).expect("tree systems are closed");
    (g, ids)
}
