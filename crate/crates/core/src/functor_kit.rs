//! A small grammar of set functors and their relation liftings.
//!
//! The grammar covers constant finite sets, the identity, binary products
//! and sums, and finite powerset. Values of a functor applied to a carrier
//! are the [`FValue`] trees; [`fmap`] is the functorial action,
//! [`enumerate`] lists all values over a finite carrier, and the three
//! `rel_lift_*` operations realize relation lifting:
//!
//! * [`rel_lift_bf`] decides the lifted relation directly, by structural
//!   recursion (back-and-forth at powerset nodes).
//! * [`rel_lift_witness`] produces a concrete witness: a value of the same
//!   functor over the *graph* of the relation whose two projections are
//!   exactly the given values. Mere existence of such a witness is the
//!   truncated lifting; the two routes are kept independent so they can
//!   check each other.
//! * [`witness_count`] counts all distinct witnesses, exposing the size of
//!   the untruncated witness type. The count and the decision procedure
//!   genuinely differ: a lifted pair may admit many witnesses.

use std::fmt;

use crate::canon_set::FinSet;
use crate::limits::Limits;

/// Functor expressions over an atom alphabet `A`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FunctorExpr<A: Ord + Clone> {
    /// Constant functor at a finite set of atoms.
    ConstFin(FinSet<A>),
    /// Identity functor.
    Id,
    /// Binary product.
    Prod(Box<FunctorExpr<A>>, Box<FunctorExpr<A>>),
    /// Binary sum.
    Sum(Box<FunctorExpr<A>>, Box<FunctorExpr<A>>),
    /// Finite powerset.
    Pfin(Box<FunctorExpr<A>>),
}

impl<A: Ord + Clone> FunctorExpr<A> {
    pub fn prod(l: FunctorExpr<A>, r: FunctorExpr<A>) -> Self {
        FunctorExpr::Prod(Box::new(l), Box::new(r))
    }

    pub fn sum(l: FunctorExpr<A>, r: FunctorExpr<A>) -> Self {
        FunctorExpr::Sum(Box::new(l), Box::new(r))
    }

    pub fn pfin(f: FunctorExpr<A>) -> Self {
        FunctorExpr::Pfin(Box::new(f))
    }
}

/// A value of a functor applied to a carrier `C`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FValue<A: Ord + Clone, C: Ord + Clone> {
    Atom(A),
    Carrier(C),
    Pair(Box<FValue<A, C>>, Box<FValue<A, C>>),
    Inl(Box<FValue<A, C>>),
    Inr(Box<FValue<A, C>>),
    Set(FinSet<FValue<A, C>>),
}

impl<A: Ord + Clone, C: Ord + Clone> FValue<A, C> {
    pub fn pair(l: FValue<A, C>, r: FValue<A, C>) -> Self {
        FValue::Pair(Box::new(l), Box::new(r))
    }

    pub fn inl(v: FValue<A, C>) -> Self {
        FValue::Inl(Box::new(v))
    }

    pub fn inr(v: FValue<A, C>) -> Self {
        FValue::Inr(Box::new(v))
    }
}

impl<A, C> fmt::Debug for FValue<A, C>
where
    A: Ord + Clone + fmt::Debug,
    C: Ord + Clone + fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FValue::Atom(a) => write!(f, "Atom({a:?})"),
            FValue::Carrier(c) => write!(f, "Carrier({c:?})"),
            FValue::Pair(l, r) => write!(f, "({l:?}, {r:?})"),
            FValue::Inl(v) => write!(f, "Inl({v:?})"),
            FValue::Inr(v) => write!(f, "Inr({v:?})"),
            FValue::Set(s) => write!(f, "{s:?}"),
        }
    }
}

/// A binary relation between two finite carriers, kept in bounds by
/// construction: `pairs ⊆ domain × codomain`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation<C: Ord + Clone> {
    domain: FinSet<C>,
    codomain: FinSet<C>,
    pairs: FinSet<(C, C)>,
}

impl<C: Ord + Clone> Relation<C> {
    pub fn new(
        domain: FinSet<C>,
        codomain: FinSet<C>,
        pairs: FinSet<(C, C)>,
    ) -> Result<Self, KitError> {
        for (x, y) in &pairs {
            if !domain.member(x) || !codomain.member(y) {
                return Err(KitError::IllFormedRelation(
                    "pair outside domain × codomain".into(),
                ));
            }
        }
        Ok(Relation {
            domain,
            codomain,
            pairs,
        })
    }

    /// The identity relation on `carrier`.
    pub fn identity(carrier: &FinSet<C>) -> Self {
        Relation {
            domain: carrier.clone(),
            codomain: carrier.clone(),
            pairs: carrier.map(|x| (x.clone(), x.clone())),
        }
    }

    /// The total relation `domain × codomain`.
    pub fn total(domain: &FinSet<C>, codomain: &FinSet<C>) -> Self {
        let pairs = domain
            .iter()
            .flat_map(|x| codomain.iter().map(move |y| (x.clone(), y.clone())))
            .collect();
        Relation {
            domain: domain.clone(),
            codomain: codomain.clone(),
            pairs,
        }
    }

    /// The relation `{(x, y) | pred(x, y)}` on `domain × codomain`.
    pub fn from_fn(
        domain: &FinSet<C>,
        codomain: &FinSet<C>,
        mut pred: impl FnMut(&C, &C) -> bool,
    ) -> Self {
        let pairs = domain
            .iter()
            .flat_map(|x| codomain.iter().map(move |y| (x.clone(), y.clone())))
            .filter(|(x, y)| pred(x, y))
            .collect();
        Relation {
            domain: domain.clone(),
            codomain: codomain.clone(),
            pairs,
        }
    }

    pub fn holds(&self, x: &C, y: &C) -> bool {
        self.pairs.member(&(x.clone(), y.clone()))
    }

    pub fn domain(&self) -> &FinSet<C> {
        &self.domain
    }

    pub fn codomain(&self) -> &FinSet<C> {
        &self.codomain
    }

    /// The graph of the relation: the carrier its lifting witnesses live over.
    pub fn graph(&self) -> &FinSet<(C, C)> {
        &self.pairs
    }

    pub fn is_subrelation_of(&self, other: &Relation<C>) -> bool {
        self.pairs.subset(&other.pairs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum KitError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("combinatorial limit exceeded: {0}")]
    LimitExceeded(String),
    #[error("ill-formed relation: {0}")]
    IllFormedRelation(String),
}

/// Checks that `v` is a well-formed value of `expr` over `carrier`.
pub fn check_shape<A: Ord + Clone, C: Ord + Clone>(
    expr: &FunctorExpr<A>,
    carrier: &FinSet<C>,
    v: &FValue<A, C>,
) -> Result<(), KitError> {
    match (expr, v) {
        (FunctorExpr::ConstFin(univ), FValue::Atom(a)) => {
            if univ.member(a) {
                Ok(())
            } else {
                Err(KitError::ShapeMismatch("atom outside its universe".into()))
            }
        }
        (FunctorExpr::Id, FValue::Carrier(c)) => {
            if carrier.member(c) {
                Ok(())
            } else {
                Err(KitError::ShapeMismatch(
                    "carrier element outside the carrier".into(),
                ))
            }
        }
        (FunctorExpr::Prod(f, g), FValue::Pair(l, r)) => {
            check_shape(f, carrier, l)?;
            check_shape(g, carrier, r)
        }
        (FunctorExpr::Sum(f, _), FValue::Inl(l)) => check_shape(f, carrier, l),
        (FunctorExpr::Sum(_, g), FValue::Inr(r)) => check_shape(g, carrier, r),
        (FunctorExpr::Pfin(f), FValue::Set(s)) => {
            for e in s {
                check_shape(f, carrier, e)?;
            }
            Ok(())
        }
        (e, _) => Err(KitError::ShapeMismatch(format!(
            "value does not match functor node {}",
            node_name(e)
        ))),
    }
}

fn node_name<A: Ord + Clone>(expr: &FunctorExpr<A>) -> &'static str {
    match expr {
        FunctorExpr::ConstFin(_) => "ConstFin",
        FunctorExpr::Id => "Id",
        FunctorExpr::Prod(_, _) => "Prod",
        FunctorExpr::Sum(_, _) => "Sum",
        FunctorExpr::Pfin(_) => "Pfin",
    }
}

/// Functorial action: rename carrier elements through `f`, preserving shape.
pub fn fmap<A, C, D>(
    expr: &FunctorExpr<A>,
    f: &mut impl FnMut(&C) -> D,
    v: &FValue<A, C>,
) -> Result<FValue<A, D>, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
    D: Ord + Clone,
{
    match (expr, v) {
        (FunctorExpr::ConstFin(_), FValue::Atom(a)) => Ok(FValue::Atom(a.clone())),
        (FunctorExpr::Id, FValue::Carrier(c)) => Ok(FValue::Carrier(f(c))),
        (FunctorExpr::Prod(fl, fr), FValue::Pair(l, r)) => Ok(FValue::pair(
            fmap(fl, f, l)?,
            fmap(fr, f, r)?,
        )),
        (FunctorExpr::Sum(fl, _), FValue::Inl(l)) => Ok(FValue::inl(fmap(fl, f, l)?)),
        (FunctorExpr::Sum(_, fr), FValue::Inr(r)) => Ok(FValue::inr(fmap(fr, f, r)?)),
        (FunctorExpr::Pfin(fe), FValue::Set(s)) => {
            let mut out = FinSet::empty();
            for e in s {
                out = out.inserted(fmap(fe, f, e)?);
            }
            Ok(FValue::Set(out))
        }
        (e, _) => Err(KitError::ShapeMismatch(format!(
            "value does not match functor node {}",
            node_name(e)
        ))),
    }
}

/// Enumerates every value of `expr` over `carrier`, with `Pfin` layers
/// capped at `size_budget` elements. Output is duplicate-free and in a
/// deterministic order (powerset layers by cardinality, then position).
pub fn enumerate<A, C>(
    expr: &FunctorExpr<A>,
    carrier: &FinSet<C>,
    size_budget: usize,
    limits: &Limits,
) -> Result<Vec<FValue<A, C>>, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    if carrier.len() > limits.carrier {
        return Err(KitError::LimitExceeded(format!(
            "carrier has {} elements, budget is {}",
            carrier.len(),
            limits.carrier
        )));
    }
    let out = enum_rec(expr, carrier, size_budget, limits)?;
    Ok(out)
}

fn enum_rec<A, C>(
    expr: &FunctorExpr<A>,
    carrier: &FinSet<C>,
    size_budget: usize,
    limits: &Limits,
) -> Result<Vec<FValue<A, C>>, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    let cap = |n: usize| -> Result<usize, KitError> {
        if (n as u64) > limits.witness_space {
            Err(KitError::LimitExceeded(format!(
                "enumeration would produce {n} values, budget is {}",
                limits.witness_space
            )))
        } else {
            Ok(n)
        }
    };
    match expr {
        FunctorExpr::ConstFin(univ) => Ok(univ.iter().cloned().map(FValue::Atom).collect()),
        FunctorExpr::Id => Ok(carrier.iter().cloned().map(FValue::Carrier).collect()),
        FunctorExpr::Prod(f, g) => {
            let ls = enum_rec(f, carrier, size_budget, limits)?;
            let rs = enum_rec(g, carrier, size_budget, limits)?;
            cap(ls.len().saturating_mul(rs.len()))?;
            let mut out = Vec::with_capacity(ls.len() * rs.len());
            for l in &ls {
                for r in &rs {
                    out.push(FValue::pair(l.clone(), r.clone()));
                }
            }
            Ok(out)
        }
        FunctorExpr::Sum(f, g) => {
            let ls = enum_rec(f, carrier, size_budget, limits)?;
            let rs = enum_rec(g, carrier, size_budget, limits)?;
            cap(ls.len().saturating_add(rs.len()))?;
            let mut out: Vec<FValue<A, C>> = ls.into_iter().map(FValue::inl).collect();
            out.extend(rs.into_iter().map(FValue::inr));
            Ok(out)
        }
        FunctorExpr::Pfin(f) => {
            let inner = enum_rec(f, carrier, size_budget, limits)?;
            let budget = size_budget.min(limits.pfin_card).min(inner.len());
            // Σ_{k ≤ budget} C(|inner|, k) subsets; guard before generating.
            let mut total: u64 = 0;
            for k in 0..=budget {
                total = total.saturating_add(binomial(inner.len(), k));
            }
            cap(usize::try_from(total).unwrap_or(usize::MAX))?;
            let mut out = Vec::with_capacity(total as usize);
            for k in 0..=budget {
                let mut idx: Vec<usize> = (0..k).collect();
                loop {
                    out.push(FValue::Set(idx.iter().map(|&i| inner[i].clone()).collect()));
                    if !next_combination(&mut idx, inner.len()) {
                        break;
                    }
                }
            }
            Ok(out)
        }
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    acc
}

/// Advances `idx` to the next k-combination of `0..n`; false when exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] != i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Decides the lifted relation `F̄R(u, v)` by structural recursion:
/// atoms must match, carrier pairs must be related, and powerset nodes
/// use the back-and-forth condition.
pub fn rel_lift_bf<A, C>(
    expr: &FunctorExpr<A>,
    rel: &Relation<C>,
    u: &FValue<A, C>,
    v: &FValue<A, C>,
) -> Result<bool, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    check_shape(expr, rel.domain(), u)?;
    check_shape(expr, rel.codomain(), v)?;
    Ok(bf(expr, rel, u, v))
}

fn bf<A, C>(expr: &FunctorExpr<A>, rel: &Relation<C>, u: &FValue<A, C>, v: &FValue<A, C>) -> bool
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    match (expr, u, v) {
        (FunctorExpr::ConstFin(_), FValue::Atom(a), FValue::Atom(b)) => a == b,
        (FunctorExpr::Id, FValue::Carrier(x), FValue::Carrier(y)) => rel.holds(x, y),
        (FunctorExpr::Prod(f, g), FValue::Pair(ul, ur), FValue::Pair(vl, vr)) => {
            bf(f, rel, ul, vl) && bf(g, rel, ur, vr)
        }
        (FunctorExpr::Sum(f, _), FValue::Inl(l), FValue::Inl(r)) => bf(f, rel, l, r),
        (FunctorExpr::Sum(_, g), FValue::Inr(l), FValue::Inr(r)) => bf(g, rel, l, r),
        (FunctorExpr::Sum(_, _), _, _) => false,
        (FunctorExpr::Pfin(f), FValue::Set(us), FValue::Set(vs)) => {
            us.iter().all(|s| vs.iter().any(|t| bf(f, rel, s, t)))
                && vs.iter().all(|t| us.iter().any(|s| bf(f, rel, s, t)))
        }
        // shapes were checked at entry
        _ => false,
    }
}

/// Produces a lifting witness: a value of `expr` over the graph of `rel`
/// whose projections are exactly `u` and `v`, or `None` when the lifted
/// relation does not hold. Independent of [`rel_lift_bf`].
pub fn rel_lift_witness<A, C>(
    expr: &FunctorExpr<A>,
    rel: &Relation<C>,
    u: &FValue<A, C>,
    v: &FValue<A, C>,
    limits: &Limits,
) -> Result<Option<FValue<A, (C, C)>>, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    check_shape(expr, rel.domain(), u)?;
    check_shape(expr, rel.codomain(), v)?;
    let mut work = WorkBudget::new(limits.witness_space);
    witness_rec(expr, rel, u, v, &mut work)
}

/// Counts cell probes so pathological inputs fail loudly instead of spinning.
struct WorkBudget {
    left: u64,
}

impl WorkBudget {
    fn new(space: u64) -> Self {
        // Each probe is cheap; allow a generous multiple of the search space.
        WorkBudget {
            left: space.saturating_mul(64).max(1 << 16),
        }
    }

    fn spend(&mut self) -> Result<(), KitError> {
        if self.left == 0 {
            return Err(KitError::LimitExceeded(
                "witness search exceeded its work budget".into(),
            ));
        }
        self.left -= 1;
        Ok(())
    }
}

fn witness_rec<A, C>(
    expr: &FunctorExpr<A>,
    rel: &Relation<C>,
    u: &FValue<A, C>,
    v: &FValue<A, C>,
    work: &mut WorkBudget,
) -> Result<Option<FValue<A, (C, C)>>, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    work.spend()?;
    Ok(match (expr, u, v) {
        (FunctorExpr::ConstFin(_), FValue::Atom(a), FValue::Atom(b)) => {
            (a == b).then(|| FValue::Atom(a.clone()))
        }
        (FunctorExpr::Id, FValue::Carrier(x), FValue::Carrier(y)) => rel
            .holds(x, y)
            .then(|| FValue::Carrier((x.clone(), y.clone()))),
        (FunctorExpr::Prod(f, g), FValue::Pair(ul, ur), FValue::Pair(vl, vr)) => {
            match witness_rec(f, rel, ul, vl, work)? {
                None => None,
                Some(wl) => witness_rec(g, rel, ur, vr, work)?.map(|wr| FValue::pair(wl, wr)),
            }
        }
        (FunctorExpr::Sum(f, _), FValue::Inl(l), FValue::Inl(r)) => {
            witness_rec(f, rel, l, r, work)?.map(FValue::inl)
        }
        (FunctorExpr::Sum(_, g), FValue::Inr(l), FValue::Inr(r)) => {
            witness_rec(g, rel, l, r, work)?.map(FValue::inr)
        }
        (FunctorExpr::Sum(_, _), _, _) => None,
        (FunctorExpr::Pfin(f), FValue::Set(us), FValue::Set(vs)) => {
            // One candidate witness per (row, column) cell; a witness set
            // must cover every row and every column.
            let rows: Vec<&FValue<A, C>> = us.iter().collect();
            let cols: Vec<&FValue<A, C>> = vs.iter().collect();
            let mut cell = vec![vec![None; cols.len()]; rows.len()];
            for (i, s) in rows.iter().enumerate() {
                for (j, t) in cols.iter().enumerate() {
                    cell[i][j] = witness_rec(f, rel, s, t, work)?;
                }
            }
            let mut chosen: FinSet<FValue<A, (C, C)>> = FinSet::empty();
            let mut col_hit = vec![false; cols.len()];
            let mut ok = true;
            for row in &cell {
                match row.iter().position(|w| w.is_some()) {
                    Some(j) => {
                        chosen = chosen.inserted(row[j].clone().unwrap());
                        col_hit[j] = true;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                for j in 0..cols.len() {
                    if col_hit[j] {
                        continue;
                    }
                    match (0..rows.len()).find(|&i| cell[i][j].is_some()) {
                        Some(i) => chosen = chosen.inserted(cell[i][j].clone().unwrap()),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            ok.then(|| FValue::Set(chosen))
        }
        _ => None,
    })
}

/// Counts the distinct lifting witnesses for `(u, v)`.
///
/// At a powerset node the witnesses are exactly the subsets of the
/// disjoint union of per-cell witness sets that cover every row and
/// column; inclusion–exclusion over uncovered rows/columns counts them
/// without materializing the subsets.
pub fn witness_count<A, C>(
    expr: &FunctorExpr<A>,
    rel: &Relation<C>,
    u: &FValue<A, C>,
    v: &FValue<A, C>,
    limits: &Limits,
) -> Result<u64, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    check_shape(expr, rel.domain(), u)?;
    check_shape(expr, rel.codomain(), v)?;
    count_rec(expr, rel, u, v, limits)
}

fn count_rec<A, C>(
    expr: &FunctorExpr<A>,
    rel: &Relation<C>,
    u: &FValue<A, C>,
    v: &FValue<A, C>,
    limits: &Limits,
) -> Result<u64, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    let within = |c: u64| -> Result<u64, KitError> {
        if c > limits.witness_space {
            Err(KitError::LimitExceeded(format!(
                "witness count {c} exceeds the search budget {}",
                limits.witness_space
            )))
        } else {
            Ok(c)
        }
    };
    match (expr, u, v) {
        (FunctorExpr::ConstFin(_), FValue::Atom(a), FValue::Atom(b)) => Ok((a == b) as u64),
        (FunctorExpr::Id, FValue::Carrier(x), FValue::Carrier(y)) => Ok(rel.holds(x, y) as u64),
        (FunctorExpr::Prod(f, g), FValue::Pair(ul, ur), FValue::Pair(vl, vr)) => {
            let cl = count_rec(f, rel, ul, vl, limits)?;
            if cl == 0 {
                return Ok(0);
            }
            let cr = count_rec(g, rel, ur, vr, limits)?;
            within(cl.checked_mul(cr).ok_or_else(|| {
                KitError::LimitExceeded("witness count overflows".into())
            })?)
        }
        (FunctorExpr::Sum(f, _), FValue::Inl(l), FValue::Inl(r)) => count_rec(f, rel, l, r, limits),
        (FunctorExpr::Sum(_, g), FValue::Inr(l), FValue::Inr(r)) => count_rec(g, rel, l, r, limits),
        (FunctorExpr::Sum(_, _), _, _) => Ok(0),
        (FunctorExpr::Pfin(f), FValue::Set(us), FValue::Set(vs)) => {
            let rows: Vec<&FValue<A, C>> = us.iter().collect();
            let cols: Vec<&FValue<A, C>> = vs.iter().collect();
            let mut counts = vec![vec![0u64; cols.len()]; rows.len()];
            let mut total_exp: u64 = 0;
            for (i, s) in rows.iter().enumerate() {
                for (j, t) in cols.iter().enumerate() {
                    let c = count_rec(f, rel, s, t, limits)?;
                    counts[i][j] = c;
                    total_exp = total_exp.saturating_add(c);
                }
            }
            // A row or column with no witness in any cell can never be
            // covered, so there are no witnesses at all.
            if counts.iter().any(|row| row.iter().all(|&c| c == 0)) {
                return Ok(0);
            }
            if (0..cols.len()).any(|j| counts.iter().all(|row| row[j] == 0)) {
                return Ok(0);
            }
            // The candidate space is every subset of the union of cells.
            if total_exp >= 64 || (1u64 << total_exp) > limits.witness_space {
                return Err(KitError::LimitExceeded(format!(
                    "witness space 2^{total_exp} exceeds the search budget {}",
                    limits.witness_space
                )));
            }
            // Inclusion–exclusion over uncovered lines of the smaller side;
            // the other side's rows then contribute independently.
            let (sel, cell): (usize, Vec<Vec<u64>>) = if cols.len() > rows.len() {
                // iterate over subsets of rows; lines are the columns
                let flipped = (0..cols.len())
                    .map(|j| counts.iter().map(|row| row[j]).collect())
                    .collect();
                (rows.len(), flipped)
            } else {
                (cols.len(), counts)
            };
            if sel > 24 {
                return Err(KitError::LimitExceeded(format!(
                    "powerset node with {sel} elements per side is beyond the search cap"
                )));
            }
            let mut acc: i128 = 0;
            for b in 0u64..(1u64 << sel) {
                let mut prod: u128 = 1;
                for line in &cell {
                    let mut e: u64 = 0;
                    for (j, &c) in line.iter().enumerate() {
                        if b & (1 << j) == 0 {
                            e += c;
                        }
                    }
                    prod = prod.saturating_mul((1u128 << e) - 1);
                    if prod == 0 {
                        break;
                    }
                }
                if b.count_ones() % 2 == 0 {
                    acc += prod as i128;
                } else {
                    acc -= prod as i128;
                }
            }
            debug_assert!(acc >= 0);
            within(u64::try_from(acc).map_err(|_| {
                KitError::LimitExceeded("witness count overflows".into())
            })?)
        }
        (e, _, _) => Err(KitError::ShapeMismatch(format!(
            "value does not match functor node {}",
            node_name(e)
        ))),
    }
}

/// First projection of a witness value (rename graph pairs to their left leg).
pub fn project_left<A, C>(
    expr: &FunctorExpr<A>,
    w: &FValue<A, (C, C)>,
) -> Result<FValue<A, C>, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    fmap(expr, &mut |p: &(C, C)| p.0.clone(), w)
}

/// Second projection of a witness value.
pub fn project_right<A, C>(
    expr: &FunctorExpr<A>,
    w: &FValue<A, (C, C)>,
) -> Result<FValue<A, C>, KitError>
where
    A: Ord + Clone,
    C: Ord + Clone,
{
    fmap(expr, &mut |p: &(C, C)| p.1.clone(), w)
}

#[cfg(test)]
mod tests {
    use super::*;

    type F = FunctorExpr<&'static str>;
    type V = FValue<&'static str, char>;

    fn chars(s: &str) -> FinSet<char> {
        s.chars().collect()
    }

    fn limits() -> Limits {
        Limits::default()
    }

    /// Brute-force witness search: enumerate every value of `expr` over the
    /// graph of `rel` and keep those projecting to `(u, v)`.
    fn witnesses_brute(
        expr: &F,
        rel: &Relation<char>,
        u: &V,
        v: &V,
    ) -> Vec<FValue<&'static str, (char, char)>> {
        let graph = rel.graph().clone();
        let mut roomy = limits();
        roomy.witness_space = 1 << 24;
        roomy.carrier = 64;
        // nested powersets need room for sets of sets, not just |graph| elements
        roomy.pfin_card = 16;
        let all = enumerate(expr, &graph, 16, &roomy).unwrap();
        all.into_iter()
            .filter(|w| {
                project_left(expr, w).unwrap() == *u && project_right(expr, w).unwrap() == *v
            })
            .collect()
    }

    #[test]
    fn enumerate_powerset_of_id() {
        let f = F::pfin(FunctorExpr::Id);
        let vs = enumerate(&f, &chars("x"), 4, &limits()).unwrap();
        assert_eq!(
            vs,
            vec![
                V::Set(FinSet::empty()),
                V::Set(FinSet::singleton(FValue::Carrier('x'))),
            ]
        );
        let vs = enumerate(&f, &chars("xy"), 4, &limits()).unwrap();
        assert_eq!(vs.len(), 4);
    }

    #[test]
    fn enumerate_counts_multiply_and_add() {
        let a = F::ConstFin(["a", "b", "c"].into_iter().collect());
        let prod = F::prod(a.clone(), FunctorExpr::Id);
        assert_eq!(enumerate(&prod, &chars("xy"), 4, &limits()).unwrap().len(), 6);
        let sum = F::sum(a, FunctorExpr::Id);
        assert_eq!(enumerate(&sum, &chars("xy"), 4, &limits()).unwrap().len(), 5);
    }

    #[test]
    fn enumerate_respects_size_budget() {
        let f = F::pfin(FunctorExpr::Id);
        let vs = enumerate(&f, &chars("xyz"), 1, &limits()).unwrap();
        // ∅ and three singletons
        assert_eq!(vs.len(), 4);
        assert!(vs.iter().all(|v| matches!(v, FValue::Set(s) if s.len() <= 1)));
    }

    #[test]
    fn enumerate_is_duplicate_free() {
        let f = F::pfin(F::prod(
            F::ConstFin(["a", "b"].into_iter().collect()),
            FunctorExpr::Id,
        ));
        let vs = enumerate(&f, &chars("xy"), 3, &limits()).unwrap();
        let dedup: std::collections::BTreeSet<_> = vs.iter().cloned().collect();
        assert_eq!(dedup.len(), vs.len());
        for v in &vs {
            check_shape(&f, &chars("xy"), v).unwrap();
        }
    }

    #[test]
    fn enumerate_rejects_oversized_carrier() {
        let err = enumerate(&F::Id, &('a'..='z').collect(), 4, &limits()).unwrap_err();
        assert!(matches!(err, KitError::LimitExceeded(_)));
    }

    #[test]
    fn fmap_laws_on_enumerated_values() {
        let f = F::pfin(F::prod(
            F::ConstFin(["a", "b"].into_iter().collect()),
            F::sum(FunctorExpr::Id, FunctorExpr::Id),
        ));
        let carrier = chars("xyz");
        for v in enumerate(&f, &carrier, 3, &limits()).unwrap() {
            // identity law
            assert_eq!(fmap(&f, &mut |c: &char| *c, &v).unwrap(), v);
            // composition law
            let mut g = |c: &char| (*c as u8).wrapping_add(1);
            let mut h = |b: &u8| *b as u32 * 2;
            let composed = fmap(&f, &mut |c: &char| h(&g(c)), &v).unwrap();
            let staged = fmap(&f, &mut h, &fmap(&f, &mut g, &v).unwrap()).unwrap();
            assert_eq!(composed, staged);
        }
    }

    #[test]
    fn fmap_rejects_wrong_shape() {
        let f = F::pfin(FunctorExpr::Id);
        let wrong: V = FValue::Carrier('x');
        assert!(matches!(
            fmap(&f, &mut |c: &char| *c, &wrong),
            Err(KitError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn lifting_of_identity_is_equality_per_node() {
        // For each grammar node shape, lifting the identity relation
        // coincides with value equality (exhaustively on a small carrier).
        let atoms: FinSet<&'static str> = ["a", "b"].into_iter().collect();
        let shapes: Vec<F> = vec![
            F::ConstFin(atoms.clone()),
            FunctorExpr::Id,
            F::prod(F::ConstFin(atoms.clone()), FunctorExpr::Id),
            F::sum(F::ConstFin(atoms.clone()), FunctorExpr::Id),
            F::pfin(FunctorExpr::Id),
            F::pfin(F::prod(F::ConstFin(atoms), FunctorExpr::Id)),
        ];
        let carrier = chars("pqr");
        let id = Relation::identity(&carrier);
        for f in &shapes {
            let vals = enumerate(f, &carrier, 3, &limits()).unwrap();
            for u in &vals {
                for v in &vals {
                    let lifted = rel_lift_bf(f, &id, u, v).unwrap();
                    assert_eq!(lifted, u == v, "functor {f:?}, values {u:?} / {v:?}");
                    let wit = rel_lift_witness(f, &id, u, v, &limits()).unwrap();
                    assert_eq!(wit.is_some(), u == v);
                    if let Some(w) = wit {
                        // diagonal witness: both projections give back u
                        assert_eq!(project_left(f, &w).unwrap(), *u);
                        assert_eq!(project_right(f, &w).unwrap(), *u);
                    }
                }
            }
        }
    }

    #[test]
    fn witness_projections_are_exact() {
        let f = F::pfin(F::prod(
            F::ConstFin(["a", "b"].into_iter().collect()),
            FunctorExpr::Id,
        ));
        let dom = chars("pq");
        let cod = chars("st");
        let rel = Relation::from_fn(&dom, &cod, |x, y| (*x == 'p') == (*y == 's'));
        for u in enumerate(&f, &dom, 2, &limits()).unwrap() {
            for v in enumerate(&f, &cod, 2, &limits()).unwrap() {
                if let Some(w) = rel_lift_witness(&f, &rel, &u, &v, &limits()).unwrap() {
                    assert_eq!(project_left(&f, &w).unwrap(), u);
                    assert_eq!(project_right(&f, &w).unwrap(), v);
                }
            }
        }
    }

    #[test]
    fn bf_agrees_with_witness_existence_and_brute_force() {
        // Cross-check all three routes on an exhaustive small instance.
        let f = F::pfin(F::prod(
            F::ConstFin(["a", "b"].into_iter().collect()),
            FunctorExpr::Id,
        ));
        let dom = chars("pq");
        let cod = chars("st");
        let rel = Relation::from_fn(&dom, &cod, |x, y| *x == 'p' && *y == 't');
        for u in enumerate(&f, &dom, 2, &limits()).unwrap() {
            for v in enumerate(&f, &cod, 2, &limits()).unwrap() {
                let by_bf = rel_lift_bf(&f, &rel, &u, &v).unwrap();
                let by_wit = rel_lift_witness(&f, &rel, &u, &v, &limits())
                    .unwrap()
                    .is_some();
                let brute = witnesses_brute(&f, &rel, &u, &v);
                let count = witness_count(&f, &rel, &u, &v, &limits()).unwrap();
                assert_eq!(by_bf, by_wit, "{u:?} vs {v:?}");
                assert_eq!(by_wit, !brute.is_empty(), "{u:?} vs {v:?}");
                assert_eq!(count, brute.len() as u64, "{u:?} vs {v:?}");
            }
        }
    }

    #[test]
    fn empty_sets_are_lifted_trivially() {
        let f = F::pfin(FunctorExpr::Id);
        let rel = Relation::from_fn(&chars("x"), &chars("y"), |_, _| false);
        let empty: V = FValue::Set(FinSet::empty());
        assert!(rel_lift_bf(&f, &rel, &empty, &empty).unwrap());
        assert_eq!(
            witness_count(&f, &rel, &empty, &empty, &limits()).unwrap(),
            1
        );
        // ∅ against a nonempty set fails in both routes
        let one: V = FValue::Set(FinSet::singleton(FValue::Carrier('y')));
        assert!(!rel_lift_bf(&f, &rel, &empty, &one).unwrap());
        assert!(rel_lift_witness(&f, &rel, &empty, &one, &limits())
            .unwrap()
            .is_none());
    }

    #[test]
    fn two_point_total_relation_has_seven_witnesses() {
        // F = Pfin(Id), X = {x, y}, R total, u = v = {x, y}: of the 16
        // subsets of the four graph pairs, exactly 7 cover both sides.
        let f = F::pfin(FunctorExpr::Id);
        let x = chars("xy");
        let rel = Relation::total(&x, &x);
        let u: V = FValue::Set([FValue::Carrier('x'), FValue::Carrier('y')].into_iter().collect());
        assert_eq!(witness_count(&f, &rel, &u, &u, &limits()).unwrap(), 7);
        assert_eq!(witnesses_brute(&f, &rel, &u, &u).len(), 7);
    }

    #[test]
    fn witness_count_respects_budget() {
        let f = F::pfin(FunctorExpr::Id);
        let x = chars("xy");
        let rel = Relation::total(&x, &x);
        let u: V = FValue::Set([FValue::Carrier('x'), FValue::Carrier('y')].into_iter().collect());
        let mut tight = limits();
        tight.witness_space = 8; // the candidate space here is 2^4 = 16
        assert!(matches!(
            witness_count(&f, &rel, &u, &u, &tight),
            Err(KitError::LimitExceeded(_))
        ));
    }

    #[test]
    fn relation_construction_checks_bounds() {
        let dom = chars("ab");
        let cod = chars("cd");
        let bad: FinSet<(char, char)> = FinSet::singleton(('a', 'z'));
        assert!(matches!(
            Relation::new(dom.clone(), cod.clone(), bad),
            Err(KitError::IllFormedRelation(_))
        ));
        let good: FinSet<(char, char)> = FinSet::singleton(('a', 'c'));
        let r = Relation::new(dom, cod, good).unwrap();
        assert!(r.holds(&'a', &'c'));
        assert!(!r.holds(&'a', &'d'));
    }

    #[test]
    fn shape_checks_guard_lifting_entry_points() {
        let f = F::pfin(FunctorExpr::Id);
        let rel = Relation::identity(&chars("x"));
        let outside: V = FValue::Set(FinSet::singleton(FValue::Carrier('z')));
        let inside: V = FValue::Set(FinSet::singleton(FValue::Carrier('x')));
        assert!(matches!(
            rel_lift_bf(&f, &rel, &outside, &inside),
            Err(KitError::ShapeMismatch(_))
        ));
        assert!(matches!(
            witness_count(&f, &rel, &inside, &outside, &limits()),
            Err(KitError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn nested_powerset_witnesses_match_brute_force() {
        // Depth-2 nesting exercises the inclusion–exclusion recursion.
        let f = F::pfin(F::pfin(FunctorExpr::Id));
        let dom = chars("pq");
        let cod = chars("s");
        let rel = Relation::total(&dom, &cod);
        for u in enumerate(&f, &dom, 2, &limits()).unwrap() {
            for v in enumerate(&f, &cod, 2, &limits()).unwrap() {
                let brute = witnesses_brute(&f, &rel, &u, &v);
                let count = witness_count(&f, &rel, &u, &v, &limits()).unwrap();
                assert_eq!(count, brute.len() as u64, "{u:?} vs {v:?}");
                let wit = rel_lift_witness(&f, &rel, &u, &v, &limits()).unwrap();
                assert_eq!(wit.is_some(), count > 0);
            }
        }
    }
}
