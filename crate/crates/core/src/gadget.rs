//! The matching-pennies prototype game and the nine payoff gadgets.
//!
//! The prototype pairs `K` arithmetic nodes (rows) with `K` internal nodes
//! (columns); each node owns two adjacent pure strategies. Diagonal 2x2
//! blocks pay `M` to the row player and `-M` to the column player, so in
//! any reasonable equilibrium both players spread probability almost
//! uniformly across node pairs: every capacity `x[2v-1] + x[2v]` lands
//! within `eps` of `1/K`.
//!
//! Gadgets are small payoff modifications (constants in `[0, 1]` added to
//! the rows of the output node in `A` and the columns of the internal node
//! in `B`) that force arithmetic relations between node values at every
//! eps-well-supported equilibrium: constants, scaling, copy, addition,
//! subtraction, comparison, and the three logic connectives on the boolean
//! encoding `0` / full capacity.
//!
//! [`forward_eval`] is the idealized oracle for these semantics: it
//! propagates exact node values through a gadget list with all capacities
//! pinned at exactly `1/K` and `eps = 0`, flagging comparator ties as
//! brittle rather than choosing a value.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::game::{BimatrixGame, GameError};
use crate::num::{pow2, rat, Rat};

#[derive(Clone, Debug)]
pub enum GadgetError {
    BadParameter(String),
    /// Arithmetic output node already drives another gadget, or the
    /// internal node is already taken.
    NodeReuse(String),
    /// Two modifications landed on the same payoff cell.
    CellCollision { row: u64, col: u64 },
    ZetaOutOfRange(String),
    NodesExhausted { kind: NodeKind },
    NonBooleanInput { node: u64 },
    MissingInput { node: u64 },
    TooLargeToDensify { n: u64, cap: u64 },
    Game(GameError),
}

impl From<GameError> for GadgetError {
    fn from(e: GameError) -> Self {
        GadgetError::Game(e)
    }
}

impl fmt::Display for GadgetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GadgetError::BadParameter(s) => write!(f, "bad parameter: {s}"),
            GadgetError::NodeReuse(s) => write!(f, "node reuse: {s}"),
            GadgetError::CellCollision { row, col } => {
                write!(f, "cell ({row}, {col}) modified twice")
            }
            GadgetError::ZetaOutOfRange(s) => write!(f, "zeta out of range: {s}"),
            GadgetError::NodesExhausted { kind } => write!(f, "{kind:?} nodes exhausted"),
            GadgetError::NonBooleanInput { node } => {
                write!(f, "logic gadget fed a non-boolean value at node {node}")
            }
            GadgetError::MissingInput { node } => {
                write!(f, "node {node} has no value and is not a source")
            }
            GadgetError::TooLargeToDensify { n, cap } => {
                write!(f, "game with {n} strategies exceeds the dense cap {cap}")
            }
            GadgetError::Game(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GadgetError {}

/// Prototype parameters. `K` node pairs give `N = 2K` strategies; `M` is
/// the penalty payoff and `eps` the equilibrium tolerance the gadget
/// contracts are stated at.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PrototypeParams {
    k: u64,
    m_payoff: Rat,
    eps: Rat,
}

impl PrototypeParams {
    /// The schedule used by the reduction: `K = 2^(6m)`, `eps = 2^(-18m)`
    /// and `M = 2^(18m+1) = 2/eps = 2K^3`.
    pub fn paper_faithful(m: u32) -> Result<Self, GadgetError> {
        if m == 0 || 6 * m > 62 {
            return Err(GadgetError::BadParameter(alloc::format!(
                "m = {m} outside the supported range"
            )));
        }
        Ok(PrototypeParams {
            k: 1u64 << (6 * m),
            m_payoff: pow2(18 * m as i64 + 1),
            eps: pow2(-18 * (m as i64)),
        })
    }

    /// Decoupled parameters for small test games; the inequalities the
    /// capacity lemma consumes (`M >= 2/eps`, `M/K >= 2`) are enforced.
    pub fn test_mode(k: u64, m_payoff: Rat, eps: Rat) -> Result<Self, GadgetError> {
        if k < 2 {
            return Err(GadgetError::BadParameter("need at least two node pairs".into()));
        }
        if !eps.is_positive() {
            return Err(GadgetError::BadParameter("eps must be positive".into()));
        }
        if &m_payoff * &eps < rat(2) {
            return Err(GadgetError::BadParameter("need M >= 2/eps".into()));
        }
        if m_payoff < rat(2) * Rat::from_integer(k.into()) {
            return Err(GadgetError::BadParameter("need M/K >= 2".into()));
        }
        Ok(PrototypeParams { k, m_payoff, eps })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Strategy count `N = 2K` for each player.
    pub fn n(&self) -> u64 {
        2 * self.k
    }

    pub fn penalty(&self) -> &Rat {
        &self.m_payoff
    }

    pub fn eps(&self) -> &Rat {
        &self.eps
    }

    /// Node capacity at an ideal equilibrium, `1/K`.
    pub fn cap(&self) -> Rat {
        Rat::new(1.into(), self.k.into())
    }

    /// Prototype payoff for the row player at (1-based) cell `(i, j)`.
    pub fn prototype_a(&self, i: u64, j: u64) -> Rat {
        if i.div_ceil(2) == j.div_ceil(2) {
            self.m_payoff.clone()
        } else {
            Rat::zero()
        }
    }

    /// Prototype payoff for the column player at (1-based) cell `(i, j)`.
    pub fn prototype_b(&self, i: u64, j: u64) -> Rat {
        if i.div_ceil(2) == j.div_ceil(2) {
            -self.m_payoff.clone()
        } else {
            Rat::zero()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum NodeKind {
    Arithmetic,
    Internal,
}

/// First-free-index node allocator; `1..=K` per kind.
#[derive(Clone, Debug)]
pub struct NodeAllocator {
    k: u64,
    next_arith: u64,
    next_internal: u64,
}

impl NodeAllocator {
    pub fn new(k: u64) -> Self {
        NodeAllocator { k, next_arith: 1, next_internal: 1 }
    }

    pub fn alloc_arith(&mut self) -> Result<u64, GadgetError> {
        if self.next_arith > self.k {
            return Err(GadgetError::NodesExhausted { kind: NodeKind::Arithmetic });
        }
        self.next_arith += 1;
        Ok(self.next_arith - 1)
    }

    pub fn alloc_internal(&mut self) -> Result<u64, GadgetError> {
        if self.next_internal > self.k {
            return Err(GadgetError::NodesExhausted { kind: NodeKind::Internal });
        }
        self.next_internal += 1;
        Ok(self.next_internal - 1)
    }

    pub fn arith_used(&self) -> u64 {
        self.next_arith - 1
    }

    pub fn internal_used(&self) -> u64 {
        self.next_internal - 1
    }
}

/// The nine gadget shapes, named by what they force the output value to be.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum GadgetKind {
    /// `x[v] = zeta` (requires `zeta <= 1/K - eps`).
    Constant,
    /// `x[v2] = min(zeta x[v1], cap)` (requires `zeta <= 1`).
    Scale,
    /// `x[v2] = min(x[v1], cap)`; the `zeta = 1` scaling.
    Copy,
    /// `x[v3] = min(x[v1] + x[v2], cap)`.
    Add,
    /// `x[v3]` between `min(x[v1] - x[v2], cap)` and `max(x[v1] - x[v2], 0)`.
    Sub,
    /// `x[v3]` saturates to cap when `x[v1] < x[v2] - eps`, to 0 when
    /// `x[v1] > x[v2] + eps`; brittle at ties.
    Less,
    Or,
    And,
    Not,
}

impl GadgetKind {
    pub fn arity(&self) -> usize {
        match self {
            GadgetKind::Constant => 0,
            GadgetKind::Scale | GadgetKind::Copy | GadgetKind::Not => 1,
            _ => 2,
        }
    }

    pub fn takes_zeta(&self) -> bool {
        matches!(self, GadgetKind::Constant | GadgetKind::Scale)
    }
}

/// One inserted gadget: input nodes, output node, internal node, and the
/// constant for the kinds that take one. All node indices are 1-based.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GadgetInstance {
    pub kind: GadgetKind,
    pub inputs: Vec<u64>,
    pub output: u64,
    pub internal: u64,
    pub zeta: Option<Rat>,
}

impl GadgetInstance {
    pub fn new(
        kind: GadgetKind,
        inputs: &[u64],
        output: u64,
        internal: u64,
        zeta: Option<Rat>,
    ) -> Self {
        GadgetInstance { kind, inputs: inputs.to_vec(), output, internal, zeta }
    }
}

/// One cell modification: `(matrix, row, col, delta)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CellDelta {
    A(u64, u64, Rat),
    B(u64, u64, Rat),
    /// A constant added to every cell of one column of B.
    BColumn(u64, Rat),
}

/// The payoff modifications one gadget makes, straight from its defining
/// conditions. Row/column indices are 1-based into the `N x N` matrices.
pub fn gadget_deltas(g: &GadgetInstance, cap: &Rat) -> Result<Vec<CellDelta>, GadgetError> {
    let one = Rat::one();
    let w = g.internal;
    let wc = 2 * w - 1; // "boolean 0" column of the internal node
    let wd = 2 * w; // "boolean 1" column
    let out = g.output;
    let zeta = g.zeta.clone();
    let need_zeta = || -> Result<Rat, GadgetError> {
        zeta.clone().ok_or_else(|| GadgetError::BadParameter("missing zeta".into()))
    };
    Ok(match g.kind {
        GadgetKind::Constant => {
            let z = need_zeta()?;
            alloc::vec![
                CellDelta::B(2 * out - 1, wc, one.clone()),
                CellDelta::BColumn(wd, z),
                CellDelta::A(2 * out - 1, wd, one.clone()),
                CellDelta::A(2 * out, wc, one),
            ]
        }
        GadgetKind::Scale | GadgetKind::Copy => {
            let z = if g.kind == GadgetKind::Copy { one.clone() } else { need_zeta()? };
            let v1 = g.inputs[0];
            alloc::vec![
                CellDelta::B(2 * v1 - 1, wc, z),
                CellDelta::B(2 * out - 1, wd, one.clone()),
                CellDelta::A(2 * out - 1, wc, one.clone()),
                CellDelta::A(2 * out, wd, one),
            ]
        }
        GadgetKind::Add => {
            let (v1, v2) = (g.inputs[0], g.inputs[1]);
            alloc::vec![
                CellDelta::B(2 * v1 - 1, wc, one.clone()),
                CellDelta::B(2 * v2 - 1, wc, one.clone()),
                CellDelta::B(2 * out - 1, wd, one.clone()),
                CellDelta::A(2 * out - 1, wc, one.clone()),
                CellDelta::A(2 * out, wd, one),
            ]
        }
        GadgetKind::Sub => {
            let (v1, v2) = (g.inputs[0], g.inputs[1]);
            alloc::vec![
                CellDelta::B(2 * v1 - 1, wc, one.clone()),
                CellDelta::B(2 * v2 - 1, wd, one.clone()),
                CellDelta::B(2 * out - 1, wd, one.clone()),
                CellDelta::A(2 * out - 1, wc, one.clone()),
                CellDelta::A(2 * out, wd, one),
            ]
        }
        GadgetKind::Less => {
            let (v1, v2) = (g.inputs[0], g.inputs[1]);
            alloc::vec![
                CellDelta::B(2 * v1 - 1, wc, one.clone()),
                CellDelta::B(2 * v2 - 1, wd, one.clone()),
                CellDelta::A(2 * out - 1, wd, one.clone()),
                CellDelta::A(2 * out, wc, one),
            ]
        }
        GadgetKind::Or | GadgetKind::And => {
            let (v1, v2) = (g.inputs[0], g.inputs[1]);
            let threshold = if g.kind == GadgetKind::Or {
                cap / rat(2)
            } else {
                cap * Rat::new(3.into(), 2.into())
            };
            alloc::vec![
                CellDelta::B(2 * v1 - 1, wc, one.clone()),
                CellDelta::B(2 * v2 - 1, wc, one.clone()),
                CellDelta::BColumn(wd, threshold),
                CellDelta::A(2 * out - 1, wc, one.clone()),
                CellDelta::A(2 * out, wd, one),
            ]
        }
        GadgetKind::Not => {
            let v1 = g.inputs[0];
            alloc::vec![
                CellDelta::B(2 * v1 - 1, wc, one.clone()),
                CellDelta::B(2 * v1, wd, one.clone()),
                CellDelta::A(2 * out - 1, wd, one.clone()),
                CellDelta::A(2 * out, wc, one),
            ]
        }
    })
}

/// The prototype plus an accumulated map of gadget payoff modifications.
/// Whole-column additions to `B` are kept symbolically so the construction
/// scales to the reduction's strategy counts.
#[derive(Clone, Debug)]
pub struct SparseGame {
    params: PrototypeParams,
    delta_a: BTreeMap<(u64, u64), Rat>,
    delta_b: BTreeMap<(u64, u64), Rat>,
    col_delta_b: BTreeMap<u64, Rat>,
    gadgets: Vec<GadgetInstance>,
    outputs_used: BTreeSet<u64>,
    internals_used: BTreeSet<u64>,
}

impl SparseGame {
    pub fn new(params: PrototypeParams) -> Self {
        SparseGame {
            params,
            delta_a: BTreeMap::new(),
            delta_b: BTreeMap::new(),
            col_delta_b: BTreeMap::new(),
            gadgets: Vec::new(),
            outputs_used: BTreeSet::new(),
            internals_used: BTreeSet::new(),
        }
    }

    pub fn params(&self) -> &PrototypeParams {
        &self.params
    }

    pub fn gadgets(&self) -> &[GadgetInstance] {
        &self.gadgets
    }

    pub fn deltas(
        &self,
    ) -> (&BTreeMap<(u64, u64), Rat>, &BTreeMap<(u64, u64), Rat>, &BTreeMap<u64, Rat>) {
        (&self.delta_a, &self.delta_b, &self.col_delta_b)
    }

    /// Full payoff entry for the row player at 1-based `(i, j)`.
    pub fn a_entry(&self, i: u64, j: u64) -> Rat {
        let mut v = self.params.prototype_a(i, j);
        if let Some(d) = self.delta_a.get(&(i, j)) {
            v += d;
        }
        v
    }

    /// Full payoff entry for the column player at 1-based `(i, j)`.
    pub fn b_entry(&self, i: u64, j: u64) -> Rat {
        let mut v = self.params.prototype_b(i, j);
        if let Some(d) = self.col_delta_b.get(&j) {
            v += d;
        }
        if let Some(d) = self.delta_b.get(&(i, j)) {
            v += d;
        }
        v
    }

    fn check_node(&self, v: u64) -> Result<(), GadgetError> {
        if v == 0 || v > self.params.k {
            return Err(GadgetError::BadParameter(alloc::format!(
                "node index {v} outside 1..={}",
                self.params.k
            )));
        }
        Ok(())
    }

    /// Insert one gadget, enforcing the structural rules: fresh output and
    /// internal nodes, constants in range, every payoff cell modified at
    /// most once.
    pub fn insert(&mut self, g: GadgetInstance) -> Result<(), GadgetError> {
        if g.inputs.len() != g.kind.arity() {
            return Err(GadgetError::BadParameter(alloc::format!(
                "{:?} takes {} inputs, got {}",
                g.kind,
                g.kind.arity(),
                g.inputs.len()
            )));
        }
        if g.zeta.is_some() != g.kind.takes_zeta() {
            return Err(GadgetError::BadParameter(alloc::format!(
                "{:?} and a zeta constant do not go together",
                g.kind
            )));
        }
        for &v in g.inputs.iter().chain([g.output].iter()) {
            self.check_node(v)?;
        }
        self.check_node(g.internal)?;
        // within one gadget all arithmetic nodes must be distinct, so its
        // cell modifications cannot overlap
        let mut nodes = g.inputs.clone();
        nodes.push(g.output);
        let unique: BTreeSet<u64> = nodes.iter().copied().collect();
        if unique.len() != nodes.len() {
            return Err(GadgetError::NodeReuse(
                "a gadget's arithmetic nodes must be pairwise distinct".into(),
            ));
        }
        if let Some(z) = &g.zeta {
            if z.is_negative() {
                return Err(GadgetError::ZetaOutOfRange("zeta must be nonnegative".into()));
            }
            match g.kind {
                GadgetKind::Constant => {
                    let limit = self.params.cap() - self.params.eps();
                    if z > &limit {
                        return Err(GadgetError::ZetaOutOfRange(alloc::format!(
                            "constant gadget needs zeta <= 1/K - eps = {limit}"
                        )));
                    }
                }
                GadgetKind::Scale => {
                    if z > &Rat::one() {
                        return Err(GadgetError::ZetaOutOfRange(
                            "scaling gadget needs zeta <= 1".into(),
                        ));
                    }
                }
                _ => unreachable!(),
            }
        }
        if !self.outputs_used.insert(g.output) {
            return Err(GadgetError::NodeReuse(alloc::format!(
                "arithmetic node {} already drives a gadget",
                g.output
            )));
        }
        if !self.internals_used.insert(g.internal) {
            self.outputs_used.remove(&g.output);
            return Err(GadgetError::NodeReuse(alloc::format!(
                "internal node {} already used",
                g.internal
            )));
        }

        let deltas = gadget_deltas(&g, &self.params.cap())?;
        // all-or-nothing: validate before applying
        for d in &deltas {
            match d {
                CellDelta::A(i, j, v) | CellDelta::B(i, j, v) => {
                    if v.is_negative() || v > &Rat::one() {
                        return Err(GadgetError::ZetaOutOfRange(alloc::format!(
                            "delta {v} at ({i}, {j}) outside [0, 1]"
                        )));
                    }
                }
                CellDelta::BColumn(j, v) => {
                    if v.is_negative() || v > &Rat::one() {
                        return Err(GadgetError::ZetaOutOfRange(alloc::format!(
                            "column delta {v} at column {j} outside [0, 1]"
                        )));
                    }
                }
            }
        }
        for d in &deltas {
            match d {
                CellDelta::A(i, j, _) => {
                    if self.delta_a.contains_key(&(*i, *j)) {
                        return Err(GadgetError::CellCollision { row: *i, col: *j });
                    }
                }
                CellDelta::B(i, j, _) => {
                    if self.delta_b.contains_key(&(*i, *j)) || self.col_delta_b.contains_key(j) {
                        return Err(GadgetError::CellCollision { row: *i, col: *j });
                    }
                }
                CellDelta::BColumn(j, _) => {
                    if self.col_delta_b.contains_key(j)
                        || self.delta_b.keys().any(|&(_, c)| c == *j)
                    {
                        return Err(GadgetError::CellCollision { row: 0, col: *j });
                    }
                }
            }
        }
        for d in deltas {
            match d {
                CellDelta::A(i, j, v) => {
                    self.delta_a.insert((i, j), v);
                }
                CellDelta::B(i, j, v) => {
                    self.delta_b.insert((i, j), v);
                }
                CellDelta::BColumn(j, v) => {
                    self.col_delta_b.insert(j, v);
                }
            }
        }
        self.gadgets.push(g);
        Ok(())
    }

    /// Class membership: every modification lies in `[0, 1]`.
    pub fn in_class_l(&self) -> bool {
        let ok = |v: &Rat| !v.is_negative() && v <= &Rat::one();
        self.delta_a.values().all(ok)
            && self.delta_b.values().all(ok)
            && self.col_delta_b.values().all(ok)
    }

    /// Materialize the full `N x N` game; only for toy sizes.
    pub fn to_dense(&self, cap: u64) -> Result<BimatrixGame, GadgetError> {
        let n = self.params.n();
        if n > cap {
            return Err(GadgetError::TooLargeToDensify { n, cap });
        }
        let n = n as usize;
        let a = (1..=n)
            .map(|i| (1..=n).map(|j| self.a_entry(i as u64, j as u64)).collect())
            .collect();
        let b = (1..=n)
            .map(|i| (1..=n).map(|j| self.b_entry(i as u64, j as u64)).collect())
            .collect();
        Ok(BimatrixGame::new(a, b)?)
    }
}

/// `x[v]`: probability on the first strategy of arithmetic node `v`
/// (1-based) in a dense strategy vector.
pub fn value_of(probs: &[Rat], v: u64) -> Rat {
    probs[(2 * v - 2) as usize].clone()
}

/// `x_C[v]`: probability on both strategies of node `v`.
pub fn capacity_of(probs: &[Rat], v: u64) -> Rat {
    &probs[(2 * v - 2) as usize] + &probs[(2 * v - 1) as usize]
}

/// Largest deviation of any node capacity from `1/K`.
pub fn max_capacity_deviation(params: &PrototypeParams, probs: &[Rat]) -> Rat {
    let capacity = params.cap();
    let mut worst = Rat::zero();
    for v in 1..=params.k {
        let dev = (capacity_of(probs, v) - &capacity).abs();
        if dev > worst {
            worst = dev;
        }
    }
    worst
}

#[derive(Clone, Debug)]
pub struct ContractCheck {
    pub ok: bool,
    /// How far outside the allowed band the output value sits (zero when ok).
    pub residual: Rat,
}

/// Evaluate a gadget's defining conclusion on a dense row-strategy vector.
pub fn gadget_contract_check(g: &GadgetInstance, x: &[Rat], eps: &Rat) -> ContractCheck {
    let zero = Rat::zero();
    let band = |target: Rat, lo_slack: &Rat, hi_slack: &Rat, got: Rat| -> ContractCheck {
        let lo = &target - lo_slack;
        let hi = &target + hi_slack;
        if got >= lo && got <= hi {
            ContractCheck { ok: true, residual: Rat::zero() }
        } else if got < lo {
            ContractCheck { ok: false, residual: lo - got }
        } else {
            ContractCheck { ok: false, residual: got - hi }
        }
    };
    let out_val = value_of(x, g.output);
    let out_cap = capacity_of(x, g.output);
    match g.kind {
        GadgetKind::Constant => band(g.zeta.clone().unwrap(), eps, eps, out_val),
        GadgetKind::Scale | GadgetKind::Copy => {
            let z = g.zeta.clone().unwrap_or_else(Rat::one);
            let target = (z * value_of(x, g.inputs[0])).min(out_cap);
            band(target, eps, eps, out_val)
        }
        GadgetKind::Add => {
            let target = (value_of(x, g.inputs[0]) + value_of(x, g.inputs[1])).min(out_cap);
            band(target, eps, eps, out_val)
        }
        GadgetKind::Sub => {
            let diff = value_of(x, g.inputs[0]) - value_of(x, g.inputs[1]);
            let lo = diff.clone().min(out_cap) - eps;
            let hi = diff.max(zero.clone()) + eps;
            if out_val >= lo && out_val <= hi {
                ContractCheck { ok: true, residual: Rat::zero() }
            } else if out_val < lo {
                ContractCheck { ok: false, residual: lo - out_val }
            } else {
                ContractCheck { ok: false, residual: out_val - hi }
            }
        }
        GadgetKind::Less => {
            let lhs = value_of(x, g.inputs[0]);
            let rhs = value_of(x, g.inputs[1]);
            if lhs < &rhs - eps {
                band(out_cap, &zero, &zero, out_val)
            } else if lhs > &rhs + eps {
                band(Rat::zero(), &zero, &zero, out_val)
            } else {
                ContractCheck { ok: true, residual: Rat::zero() }
            }
        }
        GadgetKind::Or | GadgetKind::And => {
            let b1 = boolean_of(x, g.inputs[0]);
            let b2 = boolean_of(x, g.inputs[1]);
            let want = match (g.kind, b1, b2) {
                (GadgetKind::Or, Some(a), Some(b)) => Some(a || b),
                (GadgetKind::Or, Some(true), None) | (GadgetKind::Or, None, Some(true)) => {
                    Some(true)
                }
                (GadgetKind::And, Some(a), Some(b)) => Some(a && b),
                (GadgetKind::And, Some(false), None) | (GadgetKind::And, None, Some(false)) => {
                    Some(false)
                }
                _ => None,
            };
            match want {
                Some(true) => band(out_cap, &zero, &zero, out_val),
                Some(false) => band(Rat::zero(), &zero, &zero, out_val),
                None => ContractCheck { ok: true, residual: Rat::zero() },
            }
        }
        GadgetKind::Not => match boolean_of(x, g.inputs[0]) {
            Some(true) => band(Rat::zero(), &zero, &zero, out_val),
            Some(false) => band(out_cap, &zero, &zero, out_val),
            None => ContractCheck { ok: true, residual: Rat::zero() },
        },
    }
}

/// The boolean a node encodes: full capacity is 1, zero value is 0,
/// anything in between is neither.
fn boolean_of(x: &[Rat], v: u64) -> Option<bool> {
    let val = value_of(x, v);
    if val.is_zero() {
        Some(false)
    } else if val == capacity_of(x, v) {
        Some(true)
    } else {
        None
    }
}

/// A minimal class-L game hosting a single gadget: nodes are allocated
/// first-free, and the constants default to `1/(2K)` for the constant
/// gadget and `1/2` for scaling.
pub fn build_minimal_game(
    params: &PrototypeParams,
    kind: GadgetKind,
) -> Result<(SparseGame, GadgetInstance), GadgetError> {
    if params.k < 4 {
        return Err(GadgetError::BadParameter("minimal games need K >= 4".into()));
    }
    let mut alloc_nodes = NodeAllocator::new(params.k);
    let inputs: Vec<u64> =
        (0..kind.arity()).map(|_| alloc_nodes.alloc_arith()).collect::<Result<_, _>>()?;
    let output = alloc_nodes.alloc_arith()?;
    let internal = alloc_nodes.alloc_internal()?;
    let zeta = match kind {
        GadgetKind::Constant => Some(params.cap() / rat(2)),
        GadgetKind::Scale => Some(Rat::new(1.into(), 2.into())),
        _ => None,
    };
    let instance = GadgetInstance::new(kind, &inputs, output, internal, zeta);
    let mut game = SparseGame::new(params.clone());
    game.insert(instance.clone())?;
    Ok((game, instance))
}

// ---------------------------------------------------------------------------
// idealized forward evaluation
// ---------------------------------------------------------------------------

/// A node value during forward evaluation. Comparator ties poison their
/// output rather than picking a side.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum NodeVal {
    Known(Rat),
    Brittle,
}

#[derive(Clone, Debug)]
pub struct ForwardEval {
    pub values: BTreeMap<u64, NodeVal>,
    /// Whether a full pass left every node unchanged.
    pub converged: bool,
    pub rounds: u64,
}

/// Propagate exact node values through a gadget list with every capacity
/// pinned at `cap = 1/K` and `eps = 0`. Sources seed the nodes that no
/// gadget drives (or that feedback edges read before they are written).
/// The list is re-evaluated until a pass changes nothing or the round
/// budget runs out.
pub fn forward_eval(
    gadgets: &[GadgetInstance],
    cap: &Rat,
    sources: &BTreeMap<u64, Rat>,
    max_rounds: u64,
) -> Result<ForwardEval, GadgetError> {
    for (&node, v) in sources {
        if v.is_negative() || v > cap {
            return Err(GadgetError::BadParameter(alloc::format!(
                "source value {v} at node {node} outside [0, 1/K]"
            )));
        }
    }
    let mut values: BTreeMap<u64, NodeVal> =
        sources.iter().map(|(&n, v)| (n, NodeVal::Known(v.clone()))).collect();
    let mut rounds = 0;
    let mut converged = false;
    while rounds < max_rounds.max(1) {
        rounds += 1;
        let before = values.clone();
        for g in gadgets {
            let out = eval_gadget(g, cap, &values)?;
            values.insert(g.output, out);
        }
        if values == before {
            converged = true;
            break;
        }
    }
    Ok(ForwardEval { values, converged, rounds })
}

fn eval_gadget(
    g: &GadgetInstance,
    cap: &Rat,
    values: &BTreeMap<u64, NodeVal>,
) -> Result<NodeVal, GadgetError> {
    let fetch = |node: u64| -> Result<NodeVal, GadgetError> {
        values.get(&node).cloned().ok_or(GadgetError::MissingInput { node })
    };
    let known = |nv: NodeVal| -> Option<Rat> {
        match nv {
            NodeVal::Known(v) => Some(v),
            NodeVal::Brittle => None,
        }
    };
    let as_bool = |v: &Rat, node: u64| -> Result<bool, GadgetError> {
        if v.is_zero() {
            Ok(false)
        } else if v == cap {
            Ok(true)
        } else {
            Err(GadgetError::NonBooleanInput { node })
        }
    };
    let bool_val = |b: bool| -> NodeVal {
        NodeVal::Known(if b { cap.clone() } else { Rat::zero() })
    };
    Ok(match g.kind {
        GadgetKind::Constant => NodeVal::Known(g.zeta.clone().unwrap()),
        GadgetKind::Scale | GadgetKind::Copy => {
            let z = g.zeta.clone().unwrap_or_else(Rat::one);
            match known(fetch(g.inputs[0])?) {
                Some(v) => NodeVal::Known((z * v).min(cap.clone())),
                None => NodeVal::Brittle,
            }
        }
        GadgetKind::Add => {
            match (known(fetch(g.inputs[0])?), known(fetch(g.inputs[1])?)) {
                (Some(a), Some(b)) => NodeVal::Known((a + b).min(cap.clone())),
                _ => NodeVal::Brittle,
            }
        }
        GadgetKind::Sub => {
            match (known(fetch(g.inputs[0])?), known(fetch(g.inputs[1])?)) {
                (Some(a), Some(b)) => {
                    NodeVal::Known((a - b).max(Rat::zero()).min(cap.clone()))
                }
                _ => NodeVal::Brittle,
            }
        }
        GadgetKind::Less => {
            match (known(fetch(g.inputs[0])?), known(fetch(g.inputs[1])?)) {
                (Some(a), Some(b)) => {
                    if a < b {
                        NodeVal::Known(cap.clone())
                    } else if a > b {
                        NodeVal::Known(Rat::zero())
                    } else {
                        NodeVal::Brittle
                    }
                }
                _ => NodeVal::Brittle,
            }
        }
        GadgetKind::Or | GadgetKind::And => {
            let a = fetch(g.inputs[0])?;
            let b = fetch(g.inputs[1])?;
            match (a, b) {
                (NodeVal::Known(a), NodeVal::Known(b)) => {
                    let (a, b) = (as_bool(&a, g.inputs[0])?, as_bool(&b, g.inputs[1])?);
                    bool_val(if g.kind == GadgetKind::Or { a || b } else { a && b })
                }
                // a brittle side can still be overridden by a dominant one
                (NodeVal::Known(a), NodeVal::Brittle) | (NodeVal::Brittle, NodeVal::Known(a)) => {
                    let a = as_bool(&a, g.inputs[0])?;
                    if (g.kind == GadgetKind::Or && a) || (g.kind == GadgetKind::And && !a) {
                        bool_val(a)
                    } else {
                        NodeVal::Brittle
                    }
                }
                _ => NodeVal::Brittle,
            }
        }
        GadgetKind::Not => match known(fetch(g.inputs[0])?) {
            Some(v) => bool_val(!as_bool(&v, g.inputs[0])?),
            None => NodeVal::Brittle,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ratio;

    fn test_params() -> PrototypeParams {
        // K = 4, eps = 1/K^3, M = 2K^3: the paper's relations at toy scale
        PrototypeParams::test_mode(4, rat(128), ratio(1, 64)).unwrap()
    }

    #[test]
    fn prototype_entries() {
        let p = test_params();
        assert_eq!(p.prototype_a(1, 1), rat(128));
        assert_eq!(p.prototype_a(1, 2), rat(128));
        assert_eq!(p.prototype_a(2, 1), rat(128));
        assert_eq!(p.prototype_a(1, 3), rat(0));
        assert_eq!(p.prototype_b(2, 2), rat(-128));
        assert_eq!(p.prototype_b(3, 1), rat(0));
    }

    #[test]
    fn paper_faithful_schedule() {
        let p = PrototypeParams::paper_faithful(1).unwrap();
        assert_eq!(p.k(), 64);
        assert_eq!(p.n(), 128);
        assert_eq!(p.eps(), &pow2(-18));
        assert_eq!(p.penalty(), &pow2(19));
        // M = 2/eps exactly
        assert_eq!(p.penalty() * p.eps(), rat(2));
    }

    #[test]
    fn test_mode_validates_inequalities() {
        assert!(PrototypeParams::test_mode(4, rat(4), ratio(1, 64)).is_err()); // M < 2/eps
        assert!(PrototypeParams::test_mode(65, rat(128), ratio(1, 8)).is_err()); // M < 2K
    }

    #[test]
    fn add_gadget_cell_deltas() {
        let p = test_params();
        let g = GadgetInstance::new(GadgetKind::Add, &[1, 2], 3, 1, None);
        let deltas = gadget_deltas(&g, &p.cap()).unwrap();
        let one = Rat::one();
        assert_eq!(
            deltas,
            alloc::vec![
                CellDelta::B(1, 1, one.clone()),
                CellDelta::B(3, 1, one.clone()),
                CellDelta::B(5, 2, one.clone()),
                CellDelta::A(5, 1, one.clone()),
                CellDelta::A(6, 2, one),
            ]
        );
    }

    #[test]
    fn constant_gadget_adds_whole_column() {
        let p = test_params();
        let zeta = ratio(1, 8); // 1/(2K)
        let g = GadgetInstance::new(GadgetKind::Constant, &[], 1, 1, Some(zeta.clone()));
        let mut game = SparseGame::new(p);
        game.insert(g).unwrap();
        for i in 1..=8 {
            let base = game.params().prototype_b(i, 2);
            assert_eq!(game.b_entry(i, 2), base + &zeta, "row {i}");
        }
    }

    #[test]
    fn constant_zeta_range() {
        let p = test_params();
        let mut game = SparseGame::new(p.clone());
        // 1/K - 2 eps is fine, 1/K is not
        let ok = p.cap() - p.eps() - p.eps();
        game.insert(GadgetInstance::new(GadgetKind::Constant, &[], 1, 1, Some(ok)))
            .unwrap();
        let mut game = SparseGame::new(p.clone());
        assert!(matches!(
            game.insert(GadgetInstance::new(GadgetKind::Constant, &[], 1, 1, Some(p.cap()))),
            Err(GadgetError::ZetaOutOfRange(_))
        ));
    }

    #[test]
    fn node_reuse_is_rejected() {
        let p = test_params();
        let mut game = SparseGame::new(p);
        game.insert(GadgetInstance::new(GadgetKind::Copy, &[1], 2, 1, None)).unwrap();
        // same output node
        assert!(matches!(
            game.insert(GadgetInstance::new(GadgetKind::Copy, &[3], 2, 2, None)),
            Err(GadgetError::NodeReuse(_))
        ));
        // same internal node
        assert!(matches!(
            game.insert(GadgetInstance::new(GadgetKind::Copy, &[3], 4, 1, None)),
            Err(GadgetError::NodeReuse(_))
        ));
        // inputs may fan out freely
        game.insert(GadgetInstance::new(GadgetKind::Copy, &[1], 3, 2, None)).unwrap();
    }

    #[test]
    fn class_l_membership() {
        let p = test_params();
        let (game, _) = build_minimal_game(&p, GadgetKind::Add).unwrap();
        assert!(game.in_class_l());
        // deltas of 3/2 or negative would leave the class, and the
        // insertion path refuses to create them
        let mut bad = SparseGame::new(p);
        assert!(matches!(
            bad.insert(GadgetInstance::new(
                GadgetKind::Scale,
                &[1],
                2,
                1,
                Some(ratio(3, 2))
            )),
            Err(GadgetError::ZetaOutOfRange(_))
        ));
        assert!(matches!(
            bad.insert(GadgetInstance::new(
                GadgetKind::Scale,
                &[1],
                2,
                1,
                Some(ratio(-1, 10))
            )),
            Err(GadgetError::ZetaOutOfRange(_))
        ));
    }

    #[test]
    fn minimal_game_densifies() {
        let p = test_params();
        let (game, _) = build_minimal_game(&p, GadgetKind::Add).unwrap();
        let dense = game.to_dense(16).unwrap();
        assert_eq!(dense.rows(), 8);
        assert_eq!(dense.cols(), 8);
        assert_eq!(dense.a(0, 0), &rat(128));
        // delta B(1,1) += 1 on top of the -M block
        assert_eq!(dense.b(0, 0), &rat(-127));
        assert!(matches!(
            game.to_dense(4),
            Err(GadgetError::TooLargeToDensify { .. })
        ));
    }

    #[test]
    fn forward_eval_basics() {
        let cap = ratio(1, 8); // 1/K for K = 8
        let mut sources = BTreeMap::new();
        sources.insert(1u64, ratio(1, 16));
        sources.insert(2u64, ratio(3, 32));
        let gadgets = alloc::vec![
            GadgetInstance::new(GadgetKind::Constant, &[], 3, 1, Some(ratio(1, 16))),
            GadgetInstance::new(GadgetKind::Add, &[1, 2], 4, 2, None),
            GadgetInstance::new(GadgetKind::Sub, &[1, 2], 5, 3, None),
            GadgetInstance::new(GadgetKind::Less, &[1, 2], 6, 4, None),
            GadgetInstance::new(GadgetKind::Less, &[1, 3], 7, 5, None),
        ];
        let res = forward_eval(&gadgets, &cap, &sources, 4).unwrap();
        assert!(res.converged);
        assert_eq!(res.values[&3], NodeVal::Known(ratio(1, 16)));
        // 1/16 + 3/32 clamps at the capacity 1/8
        assert_eq!(res.values[&4], NodeVal::Known(ratio(1, 8)));
        // 1/16 - 3/32 clamps at zero
        assert_eq!(res.values[&5], NodeVal::Known(rat(0)));
        assert_eq!(res.values[&6], NodeVal::Known(cap.clone()));
        // exact tie: brittle
        assert_eq!(res.values[&7], NodeVal::Brittle);
    }

    #[test]
    fn forward_eval_logic_and_errors() {
        let cap = ratio(1, 8);
        let mut sources = BTreeMap::new();
        sources.insert(1u64, cap.clone());
        sources.insert(2u64, rat(0));
        let gadgets = alloc::vec![
            GadgetInstance::new(GadgetKind::Or, &[1, 2], 3, 1, None),
            GadgetInstance::new(GadgetKind::And, &[1, 2], 4, 2, None),
            GadgetInstance::new(GadgetKind::Not, &[2], 5, 3, None),
        ];
        let res = forward_eval(&gadgets, &cap, &sources, 2).unwrap();
        assert_eq!(res.values[&3], NodeVal::Known(cap.clone()));
        assert_eq!(res.values[&4], NodeVal::Known(rat(0)));
        assert_eq!(res.values[&5], NodeVal::Known(cap.clone()));

        // non-boolean input to a logic gadget
        let mut sources = BTreeMap::new();
        sources.insert(1u64, ratio(1, 16));
        sources.insert(2u64, rat(0));
        let gadgets = alloc::vec![GadgetInstance::new(GadgetKind::Or, &[1, 2], 3, 1, None)];
        assert!(matches!(
            forward_eval(&gadgets, &cap, &sources, 2),
            Err(GadgetError::NonBooleanInput { node: 1 })
        ));

        // missing input
        let gadgets = alloc::vec![GadgetInstance::new(GadgetKind::Copy, &[9], 3, 1, None)];
        assert!(matches!(
            forward_eval(&gadgets, &cap, &BTreeMap::new(), 2),
            Err(GadgetError::MissingInput { node: 9 })
        ));
    }

    #[test]
    fn forward_eval_idempotent_on_fixed_points() {
        let cap = ratio(1, 8);
        let mut sources = BTreeMap::new();
        sources.insert(1u64, ratio(1, 32));
        let gadgets = alloc::vec![
            GadgetInstance::new(GadgetKind::Copy, &[1], 2, 1, None),
            GadgetInstance::new(GadgetKind::Add, &[1, 2], 3, 2, None),
        ];
        let once = forward_eval(&gadgets, &cap, &sources, 1).unwrap();
        let twice = forward_eval(&gadgets, &cap, &sources, 8).unwrap();
        assert_eq!(once.values, twice.values);
        assert!(twice.converged);
    }

    #[test]
    fn value_and_capacity_accessors() {
        // pure on row 1 = node 1's first strategy
        let mut x = alloc::vec![rat(0); 8];
        x[0] = Rat::one();
        assert_eq!(value_of(&x, 1), rat(1));
        assert_eq!(capacity_of(&x, 1), rat(1));
        let uniform = alloc::vec![ratio(1, 8); 8];
        assert_eq!(capacity_of(&uniform, 3), ratio(1, 4));
        assert_eq!(value_of(&uniform, 3), ratio(1, 8));
        let mut y = alloc::vec![rat(0); 8];
        y[4] = Rat::one();
        assert_eq!(value_of(&y, 2), rat(0));
        assert_eq!(capacity_of(&y, 2), rat(0));
    }

    #[test]
    fn contract_check_synthetic_profiles() {
        let g = GadgetInstance::new(GadgetKind::Add, &[1, 2], 3, 1, None);
        // x[v3] = x[v1] + x[v2] exactly, capacities 1/4 each over K = 4
        let x = alloc::vec![
            ratio(1, 16), ratio(3, 16),   // v1
            ratio(1, 16), ratio(3, 16),   // v2
            ratio(2, 16), ratio(2, 16),   // v3
            ratio(2, 16), ratio(2, 16),   // v4
        ];
        let eps = ratio(1, 64);
        assert!(gadget_contract_check(&g, &x, &eps).ok);

        // push the output value out of band
        let mut bad = x.clone();
        bad[4] = ratio(4, 16);
        bad[5] = rat(0);
        let res = gadget_contract_check(&g, &bad, &eps);
        assert!(!res.ok);
        assert!(res.residual.is_positive());
    }

    #[test]
    fn less_contract_conditional() {
        let g = GadgetInstance::new(GadgetKind::Less, &[1, 2], 3, 1, None);
        let eps = ratio(1, 64);
        // x[v1] < x[v2] - eps forces the output to its full capacity
        let x = alloc::vec![
            rat(0), ratio(4, 16),
            ratio(2, 16), ratio(2, 16),
            ratio(4, 16), rat(0),
            ratio(4, 16), rat(0),
        ];
        assert!(gadget_contract_check(&g, &x, &eps).ok);
        // same input gap but output not saturated: violation
        let mut bad = x.clone();
        bad[4] = ratio(2, 16);
        bad[5] = ratio(2, 16);
        assert!(!gadget_contract_check(&g, &bad, &eps).ok);
    }
}
