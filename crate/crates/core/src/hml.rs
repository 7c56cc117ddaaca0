//! Hennessy–Milner logic with step-indexed satisfaction.
//!
//! The grammar is negation-free: `tt`, `ff`, conjunction, disjunction and
//! the modalities `[a]`/`<a>`. Satisfaction at level `n` spends one level
//! per modality: a modal body is checked at `n-1` against the successor,
//! and at level 0 the body is out of budget — `[a]φ` holds vacuously and
//! `<a>φ` only asks for an `a`-transition to exist. So level-`n`
//! satisfaction looks exactly `n` transition layers deep, matching the
//! budget convention of [`crate::approx`] and [`crate::bisim`].
//!
//! [`distinguish`] decides whether a formula separates two states at a
//! level, by exhausting semantics rather than syntax: the *truth sets*
//! definable at level `n` form a finite family (seeded by the modalities
//! over level-`n-1` truth sets and closed under union/intersection), so
//! searching that family is complete — if no member separates the pair,
//! no formula does. Without negation the separating formula may hold of
//! either state, so the result carries its direction.

use std::collections::BTreeMap;
use std::fmt;

use crate::canon_set::FinSet;
use crate::glts::{ActionId, Glts, GltsError, StateId};

/// A negation-free modal formula.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Formula {
    TT,
    FF,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Box(ActionId, Box<Formula>),
    Dia(ActionId, Box<Formula>),
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(std::boxed::Box::new(l), std::boxed::Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(std::boxed::Box::new(l), std::boxed::Box::new(r))
    }

    pub fn must(a: ActionId, body: Formula) -> Self {
        Formula::Box(a, std::boxed::Box::new(body))
    }

    pub fn may(a: ActionId, body: Formula) -> Self {
        Formula::Dia(a, std::boxed::Box::new(body))
    }

    /// Deepest nesting of modalities.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::TT | Formula::FF => 0,
            Formula::And(l, r) | Formula::Or(l, r) => l.modal_depth().max(r.modal_depth()),
            Formula::Box(_, body) | Formula::Dia(_, body) => 1 + body.modal_depth(),
        }
    }

    /// Every action mentioned, in canonical order.
    pub fn actions(&self) -> FinSet<ActionId> {
        match self {
            Formula::TT | Formula::FF => FinSet::empty(),
            Formula::And(l, r) | Formula::Or(l, r) => l.actions().union(&r.actions()),
            Formula::Box(a, body) | Formula::Dia(a, body) => {
                body.actions().inserted(a.clone())
            }
        }
    }
}

impl fmt::Display for Formula {
    /// Prints in the concrete grammar with minimal parentheses: `|`
    /// loosest, then `&`, modalities tightest.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn pp(phi: &Formula, req: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let prec = match phi {
                Formula::Or(..) => 0,
                Formula::And(..) => 1,
                _ => 2,
            };
            let wrap = prec < req;
            if wrap {
                f.write_str("(")?;
            }
            match phi {
                Formula::TT => f.write_str("tt")?,
                Formula::FF => f.write_str("ff")?,
                Formula::And(l, r) => {
                    pp(l, 1, f)?;
                    f.write_str(" & ")?;
                    pp(r, 2, f)?;
                }
                Formula::Or(l, r) => {
                    pp(l, 0, f)?;
                    f.write_str(" | ")?;
                    pp(r, 1, f)?;
                }
                Formula::Box(a, body) => {
                    write!(f, "[{a}]")?;
                    pp(body, 2, f)?;
                }
                Formula::Dia(a, body) => {
                    write!(f, "<{a}>")?;
                    pp(body, 2, f)?;
                }
            }
            if wrap {
                f.write_str(")")?;
            }
            Ok(())
        }
        pp(self, 0, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HmlError {
    #[error(transparent)]
    Glts(#[from] GltsError),
    #[error("formula action `{0}` is not in the system's alphabet")]
    UnknownAction(ActionId),
    #[error("syntax error at offset {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("semantic search space exceeded {0} truth sets per level")]
    SearchSpace(usize),
}

fn syntax(offset: usize, msg: impl Into<String>) -> HmlError {
    HmlError::Syntax {
        offset,
        msg: msg.into(),
    }
}

// ---------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Amp,
    Pipe,
    LPar,
    RPar,
    LBrack,
    RBrack,
    Lt,
    Gt,
}

fn scan(src: &str) -> Result<Vec<(usize, Tok)>, HmlError> {
    let mut toks = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            c if c.is_whitespace() => {}
            '&' => toks.push((i, Tok::Amp)),
            '|' => toks.push((i, Tok::Pipe)),
            '(' => toks.push((i, Tok::LPar)),
            ')' => toks.push((i, Tok::RPar)),
            '[' => toks.push((i, Tok::LBrack)),
            ']' => toks.push((i, Tok::RBrack)),
            '<' => toks.push((i, Tok::Lt)),
            '>' => toks.push((i, Tok::Gt)),
            c if c.is_alphanumeric() || c == '_' || c == '\'' => {
                let mut name = String::new();
                name.push(c);
                while let Some((_, c2)) = chars.peek() {
                    if c2.is_alphanumeric() || *c2 == '_' || *c2 == '\'' {
                        name.push(*c2);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push((i, Tok::Ident(name)));
            }
            _ => return Err(syntax(i, format!("unexpected character `{c}`"))),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn or(&mut self) -> Result<Formula, HmlError> {
        let mut acc = self.and()?;
        while matches!(self.peek(), Some(Tok::Pipe)) {
            self.pos += 1;
            acc = Formula::or(acc, self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula, HmlError> {
        let mut acc = self.atom()?;
        while matches!(self.peek(), Some(Tok::Amp)) {
            self.pos += 1;
            acc = Formula::and(acc, self.atom()?);
        }
        Ok(acc)
    }

    fn action(&mut self) -> Result<ActionId, HmlError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let a = ActionId::new(name.clone());
                self.pos += 1;
                Ok(a)
            }
            _ => Err(syntax(self.offset(), "expected an action name")),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), HmlError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected `{what}`")))
        }
    }

    fn atom(&mut self) -> Result<Formula, HmlError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "tt" => Ok(Formula::TT),
                    "ff" => Ok(Formula::FF),
                    _ => Err(syntax(at, format!("unexpected `{name}`; a formula is tt, ff, [a]φ, <a>φ or a parenthesized combination"))),
                }
            }
            Some(Tok::LPar) => {
                self.pos += 1;
                let inner = self.or()?;
                self.expect(Tok::RPar, ")")?;
                Ok(inner)
            }
            Some(Tok::LBrack) => {
                self.pos += 1;
                let a = self.action()?;
                self.expect(Tok::RBrack, "]")?;
                Ok(Formula::must(a, self.atom()?))
            }
            Some(Tok::Lt) => {
                self.pos += 1;
                let a = self.action()?;
                self.expect(Tok::Gt, ">")?;
                Ok(Formula::may(a, self.atom()?))
            }
            _ => Err(syntax(at, "expected a formula")),
        }
    }
}

/// Parses the concrete grammar `tt | ff | φ & φ | φ | φ | [a]φ | <a>φ`
/// with `&` binding tighter than `|` and modalities tightest.
pub fn parse_formula(src: &str) -> Result<Formula, HmlError> {
    let toks = scan(src)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let phi = parser.or()?;
    if parser.pos < parser.toks.len() {
        return Err(syntax(parser.offset(), "unexpected trailing input"));
    }
    Ok(phi)
}

// ---------------------------------------------------------------------
// Satisfaction
// ---------------------------------------------------------------------

fn check_alphabet(g: &Glts, phi: &Formula) -> Result<(), HmlError> {
    for a in &phi.actions() {
        if !g.actions().member(a) {
            return Err(HmlError::UnknownAction(a.clone()));
        }
    }
    Ok(())
}

/// Does `x` satisfy `phi` at level `n`?
pub fn sat(g: &Glts, x: &StateId, phi: &Formula, n: usize) -> Result<bool, HmlError> {
    check_alphabet(g, phi)?;
    g.trans(x)?;
    Ok(sat_in(g, x, phi, n))
}

fn sat_in(g: &Glts, x: &StateId, phi: &Formula, n: usize) -> bool {
    let outs = || g.trans(x).expect("state checked on entry; successors stay in the system");
    match phi {
        Formula::TT => true,
        Formula::FF => false,
        Formula::And(l, r) => sat_in(g, x, l, n) && sat_in(g, x, r, n),
        Formula::Or(l, r) => sat_in(g, x, l, n) || sat_in(g, x, r, n),
        Formula::Box(a, body) => outs()
            .iter()
            .filter(|(b, _)| b == a)
            .all(|(_, x2)| n == 0 || sat_in(g, x2, body, n - 1)),
        Formula::Dia(a, body) => outs()
            .iter()
            .filter(|(b, _)| b == a)
            .any(|(_, x2)| n == 0 || sat_in(g, x2, body, n - 1)),
    }
}

// ---------------------------------------------------------------------
// Distinguishing formulas
// ---------------------------------------------------------------------

/// A separating formula together with its direction: without negation a
/// distinguisher may hold of either state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distinguisher {
    pub formula: Formula,
    /// True: the formula holds of the left state and fails of the right.
    /// False: the mirror image.
    pub holds_of_left: bool,
}

/// Per-level bound on distinct truth sets tracked by the semantic search.
const TRUTH_SET_CAP: usize = 4096;

type Bits = Vec<u64>;

fn bit_get(b: &[u64], i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

struct Indexed {
    states: Vec<StateId>,
    /// Per action, per state index, successor indices.
    succ: BTreeMap<ActionId, Vec<Vec<usize>>>,
    words: usize,
}

impl Indexed {
    fn new(g: &Glts) -> Self {
        let states: Vec<StateId> = g.states().iter().cloned().collect();
        let index: BTreeMap<&StateId, usize> =
            states.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut succ: BTreeMap<ActionId, Vec<Vec<usize>>> = g
            .actions()
            .iter()
            .map(|a| (a.clone(), vec![Vec::new(); states.len()]))
            .collect();
        for (i, x) in states.iter().enumerate() {
            for (a, x2) in g.trans(x).expect("iterating the system's own states") {
                succ.get_mut(a).expect("validated label")[i].push(index[x2]);
            }
        }
        let words = states.len().div_ceil(64).max(1);
        Indexed {
            states,
            succ,
            words,
        }
    }

    fn full(&self) -> Bits {
        let mut b = vec![u64::MAX; self.words];
        let extra = self.words * 64 - self.states.len();
        if extra > 0 {
            *b.last_mut().expect("at least one word") >>= extra;
        }
        b
    }

    fn empty(&self) -> Bits {
        vec![0; self.words]
    }

    fn dia(&self, succ: &[Vec<usize>], s: &Bits) -> Bits {
        let mut out = self.empty();
        for (i, nexts) in succ.iter().enumerate() {
            if nexts.iter().any(|j| bit_get(s, *j)) {
                out[i / 64] |= 1 << (i % 64);
            }
        }
        out
    }

    fn boxm(&self, succ: &[Vec<usize>], s: &Bits) -> Bits {
        let mut out = self.empty();
        for (i, nexts) in succ.iter().enumerate() {
            if nexts.iter().all(|j| bit_get(s, *j)) {
                out[i / 64] |= 1 << (i % 64);
            }
        }
        out
    }
}

/// Closes `seeds` under pointwise ∧ and ∨, keeping one defining formula
/// per distinct truth set.
fn boolean_closure(
    seeds: Vec<(Bits, Formula)>,
    cap: usize,
) -> Result<Vec<(Bits, Formula)>, HmlError> {
    let mut items: Vec<(Bits, Formula)> = Vec::new();
    let mut seen: BTreeMap<Bits, ()> = BTreeMap::new();
    let mut push = |items: &mut Vec<(Bits, Formula)>, bits: Bits, f: Formula| {
        if seen.insert(bits.clone(), ()).is_none() {
            items.push((bits, f));
        }
        items.len() <= cap
    };
    for (bits, f) in seeds {
        if !push(&mut items, bits, f) {
            return Err(HmlError::SearchSpace(cap));
        }
    }
    let mut i = 0;
    while i < items.len() {
        for j in 0..i {
            let and: Bits = items[i]
                .0
                .iter()
                .zip(&items[j].0)
                .map(|(a, b)| a & b)
                .collect();
            let or: Bits = items[i]
                .0
                .iter()
                .zip(&items[j].0)
                .map(|(a, b)| a | b)
                .collect();
            let f_and = Formula::and(items[i].1.clone(), items[j].1.clone());
            let f_or = Formula::or(items[i].1.clone(), items[j].1.clone());
            if !push(&mut items, and, f_and) || !push(&mut items, or, f_or) {
                return Err(HmlError::SearchSpace(cap));
            }
        }
        i += 1;
    }
    Ok(items)
}

fn truth_sets(g: &Glts, n: usize, cap: usize) -> Result<(Indexed, Vec<(Bits, Formula)>), HmlError> {
    let ix = Indexed::new(g);
    let mut level: Vec<(Bits, Formula)> = Vec::new();
    for k in 0..=n {
        let mut seeds = vec![(ix.full(), Formula::TT), (ix.empty(), Formula::FF)];
        for (a, succ) in &ix.succ {
            if k == 0 {
                // at level 0 a diamond only asks for a transition; a box
                // is vacuous (so its truth set duplicates tt)
                seeds.push((ix.dia(succ, &ix.full()), Formula::may(a.clone(), Formula::TT)));
            } else {
                for (bits, f) in &level {
                    seeds.push((ix.dia(succ, bits), Formula::may(a.clone(), f.clone())));
                    seeds.push((ix.boxm(succ, bits), Formula::must(a.clone(), f.clone())));
                }
            }
        }
        level = boolean_closure(seeds, cap)?;
    }
    Ok((ix, level))
}

/// Every truth set definable at level `n` — the set of states satisfying
/// some formula — paired with one formula defining it. The family is
/// exhaustive: any level-`n` formula over the system's alphabet has its
/// truth set here.
pub fn formula_space(g: &Glts, n: usize) -> Result<Vec<(FinSet<StateId>, Formula)>, HmlError> {
    let (ix, sets) = truth_sets(g, n, TRUTH_SET_CAP)?;
    Ok(sets
        .into_iter()
        .map(|(bits, f)| {
            let members: FinSet<StateId> = ix
                .states
                .iter()
                .enumerate()
                .filter(|(i, _)| bit_get(&bits, *i))
                .map(|(_, s)| s.clone())
                .collect();
            (members, f)
        })
        .collect())
}

/// Searches for a level-`n` formula telling `x` and `y` apart. Returns
/// nothing exactly when no formula separates them — which coincides with
/// level-`n` bisimilarity.
pub fn distinguish(
    g: &Glts,
    x: &StateId,
    y: &StateId,
    n: usize,
) -> Result<Option<Distinguisher>, HmlError> {
    g.trans(x)?;
    g.trans(y)?;
    if x == y {
        return Ok(None);
    }
    let (ix, sets) = truth_sets(g, n, TRUTH_SET_CAP)?;
    let xi = ix.states.iter().position(|s| s == x).expect("checked above");
    let yi = ix.states.iter().position(|s| s == y).expect("checked above");
    for (bits, f) in sets {
        match (bit_get(&bits, xi), bit_get(&bits, yi)) {
            (true, false) => {
                return Ok(Some(Distinguisher {
                    formula: f,
                    holds_of_left: true,
                }))
            }
            (false, true) => {
                return Ok(Some(Distinguisher {
                    formula: f,
                    holds_of_left: false,
                }))
            }
            _ => {}
        }
    }
    Ok(None)
}
