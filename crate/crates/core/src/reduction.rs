//! From Brouwer-mapping circuits to sparse bimatrix games.
//!
//! The input is a valid circuit over the side-8 hypergrid `B^n`. The
//! construction places `n^3` sample points along the main diagonal: node
//! values `x[v_i^k] = x[v_i^0] + k/K^2`, each sampled through a network
//! that extracts the three binary digits of `8K x[v_i^k]` (a comparator
//! cascade) and feeds them through one logic gadget per circuit gate. The
//! per-sample direction readings are averaged by scale-and-add chains into
//! `v_i^+ / v_i^-`, and a three-gadget feedback loop per coordinate pins
//! `x[v_i^0]` so that, at any eps-well-supported equilibrium of the
//! resulting game, the set of sampled lattice points straddles a
//! panchromatic simplex of the circuit.
//!
//! [`decode_equilibrium`] maps node values back: it scales them by `8K`,
//! discards the at-most-`n` poorly-positioned sample points, floors the
//! rest onto the grid, and tallies colors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{BrouwerCircuit, CircuitError, Color, Gate, ValidityMode};
use crate::gadget::{
    forward_eval, ForwardEval, GadgetError, GadgetInstance, GadgetKind, NodeAllocator, NodeVal,
    PrototypeParams, SparseGame,
};
use crate::grid::{GridBounds, GridPoint};
use crate::num::{rat, Rat};

#[derive(Clone, Debug)]
pub enum ReductionError {
    Circuit(CircuitError),
    Gadget(GadgetError),
    BadParameter(String),
    /// A node required by the decoder has no value in the profile.
    MissingNodeValue { node: u64 },
}

impl From<CircuitError> for ReductionError {
    fn from(e: CircuitError) -> Self {
        ReductionError::Circuit(e)
    }
}

impl From<GadgetError> for ReductionError {
    fn from(e: GadgetError) -> Self {
        ReductionError::Gadget(e)
    }
}

impl fmt::Display for ReductionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionError::Circuit(e) => write!(f, "{e}"),
            ReductionError::Gadget(e) => write!(f, "{e}"),
            ReductionError::BadParameter(s) => write!(f, "bad parameter: {s}"),
            ReductionError::MissingNodeValue { node } => {
                write!(f, "no value for arithmetic node {node}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ReductionError {}

// ---------------------------------------------------------------------------
// scalar helpers
// ---------------------------------------------------------------------------

/// `pi(a)`: the largest integer in `[0, 7]` strictly below `a`, clamped to
/// 0 at `a = 0` (such points are poorly positioned anyway).
pub fn pi_floor(a: &Rat) -> Result<u64, ReductionError> {
    if a.is_negative() {
        return Err(ReductionError::BadParameter(alloc::format!("pi of negative value {a}")));
    }
    for i in (0..=7u64).rev() {
        if &Rat::from_integer(i.into()) < a {
            return Ok(i);
        }
    }
    Ok(0)
}

/// Whether `a` keeps a distance greater than `80/K^2` from every integer
/// in `[0, 7]`.
pub fn is_well_positioned(a: &Rat, k: u64) -> bool {
    if a.is_negative() {
        return false;
    }
    let threshold = Rat::new(80.into(), (k as i128 * k as i128).into());
    for t in 0..=7u64 {
        if (a - Rat::from_integer(t.into())).abs() <= threshold {
            return false;
        }
    }
    true
}

/// `pi` applied coordinate-wise.
pub fn pi_point(p: &[Rat]) -> Result<GridPoint, ReductionError> {
    Ok(GridPoint(p.iter().map(pi_floor).collect::<Result<_, _>>()?))
}

// ---------------------------------------------------------------------------
// circuit normalization
// ---------------------------------------------------------------------------

/// Rewrite a circuit so that every gate has two distinct input wires and
/// every output is the output wire of a distinct gate: gates with repeated
/// inputs become double negations, and input-wire or shared outputs get a
/// double-negation buffer. Colors are unchanged; the gadget mapping then
/// needs exactly one gadget per gate.
pub fn normalize_for_gadgets(c: &BrouwerCircuit) -> BrouwerCircuit {
    let inputs = c.input_count();
    let mut gates: Vec<Gate> = Vec::with_capacity(c.gates().len());
    let mut remap: Vec<usize> = (0..inputs).collect();
    for g in c.gates() {
        let mapped = match *g {
            Gate::And(a, b) | Gate::Or(a, b) if remap[a] == remap[b] => {
                gates.push(Gate::Not(remap[a]));
                Gate::Not(inputs + gates.len() - 1)
            }
            Gate::And(a, b) => Gate::And(remap[a], remap[b]),
            Gate::Or(a, b) => Gate::Or(remap[a], remap[b]),
            Gate::Not(a) => Gate::Not(remap[a]),
        };
        gates.push(mapped);
        remap.push(inputs + gates.len() - 1);
    }
    let mut outputs = Vec::with_capacity(c.outputs().len());
    let mut used = alloc::collections::BTreeSet::new();
    for &o in c.outputs() {
        let mut w = remap[o];
        if w < inputs || !used.insert(w) {
            let first = inputs + gates.len();
            gates.push(Gate::Not(w));
            gates.push(Gate::Not(first));
            w = first + 1;
            used.insert(w);
        }
        outputs.push(w);
    }
    BrouwerCircuit::new(c.bounds().clone(), gates, outputs)
        .expect("normalization preserves well-formedness")
}

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

/// Reduction input: a valid circuit over `B^n` plus the derived prototype
/// parameters (`2^m >= Size[C]`, `K = 2^(6m)`).
#[derive(Clone, Debug)]
pub struct ReductionConfig {
    circuit: BrouwerCircuit,
    n: usize,
    m: u32,
    params: PrototypeParams,
}

impl ReductionConfig {
    pub fn new(circuit: BrouwerCircuit, n: usize) -> Result<Self, ReductionError> {
        if circuit.dim() != n || n == 0 {
            return Err(ReductionError::BadParameter(alloc::format!(
                "circuit dimension {} does not match n = {n}",
                circuit.dim()
            )));
        }
        if circuit.bounds().sides().iter().any(|&r| r != 8) {
            return Err(ReductionError::BadParameter(
                "the reduction needs every side to be 8".into(),
            ));
        }
        let mode = if n <= 5 {
            ValidityMode::Exhaustive
        } else {
            ValidityMode::Sampled { count: 512, seed: 0xb10c }
        };
        let report = circuit.check_validity(mode);
        if !report.passed() {
            return Err(ReductionError::BadParameter(alloc::format!(
                "circuit is not valid: {:?}",
                report.violations.first()
            )));
        }
        let size = circuit.size() as u64;
        let m = (0..=10u32)
            .find(|&m| (1u64 << m) >= size)
            .ok_or_else(|| ReductionError::BadParameter("circuit too large".into()))?;
        let params = PrototypeParams::paper_faithful(m)?;
        // the sampling increments k/K^2 must stay far below the lattice
        // spacing 1/(8K)
        if params.k() < 8 * (n as u64).pow(3) {
            return Err(ReductionError::BadParameter("K < 8 n^3".into()));
        }
        Ok(ReductionConfig { circuit, n, m, params })
    }

    pub fn circuit(&self) -> &BrouwerCircuit {
        &self.circuit
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn params(&self) -> &PrototypeParams {
        &self.params
    }
}

/// Where the construction put its distinguished nodes. All indices are
/// 1-based arithmetic node indices; `sample[i][k]` is `v_i^k`.
#[derive(Clone, Debug, Default)]
pub struct ReductionNodeMap {
    pub sample: Vec<Vec<u64>>,
    pub sample_plus: Vec<Vec<u64>>,
    pub sample_minus: Vec<Vec<u64>>,
    pub avg_plus: Vec<u64>,
    pub avg_minus: Vec<u64>,
    pub loop_sum: Vec<u64>,
    pub loop_diff: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct ReductionOutput {
    pub config: ReductionConfig,
    pub game: SparseGame,
    pub nodes: ReductionNodeMap,
    /// The gadget-compatible rewrite of the input circuit actually wired
    /// into the sampling networks.
    pub normalized: BrouwerCircuit,
    pub arith_nodes_used: u64,
    pub internal_nodes_used: u64,
}

/// Outputs of one sampling network.
pub struct SamplingOutputs {
    pub plus: Vec<u64>,
    pub minus: Vec<u64>,
    pub gadgets_added: usize,
}

/// Wire one sampling network: per coordinate, a three-round comparator
/// cascade extracts the binary digits of `8K` times the input node's
/// value; the digits then drive one logic gadget per circuit gate. The
/// circuit must be normalized (distinct gate inputs, distinct gate
/// outputs).
pub fn build_sampling_network(
    game: &mut SparseGame,
    nodes: &mut NodeAllocator,
    circuit: &BrouwerCircuit,
    inputs: &[u64],
) -> Result<SamplingOutputs, ReductionError> {
    let n = circuit.dim();
    if inputs.len() != n {
        return Err(ReductionError::BadParameter("one input node per coordinate".into()));
    }
    let cap = game.params().cap();
    let before = game.gadgets().len();

    // digit extraction: bits[i][j] encodes digit j of coordinate i
    let mut wire_node: Vec<Option<u64>> = alloc::vec![None; circuit.input_count() + circuit.gates().len()];
    for (i, &input) in inputs.iter().enumerate() {
        let mut rem = input;
        for j in 1..=3u32 {
            let half = Rat::new(1.into(), (1i64 << j).into());
            let threshold = nodes.alloc_arith()?;
            game.insert(GadgetInstance::new(
                GadgetKind::Constant,
                &[],
                threshold,
                nodes.alloc_internal()?,
                Some(&cap * &half),
            ))?;
            let bit = nodes.alloc_arith()?;
            game.insert(GadgetInstance::new(
                GadgetKind::Less,
                &[threshold, rem],
                bit,
                nodes.alloc_internal()?,
                None,
            ))?;
            let scaled = nodes.alloc_arith()?;
            game.insert(GadgetInstance::new(
                GadgetKind::Scale,
                &[bit],
                scaled,
                nodes.alloc_internal()?,
                Some(half),
            ))?;
            let next_rem = nodes.alloc_arith()?;
            game.insert(GadgetInstance::new(
                GadgetKind::Sub,
                &[rem, scaled],
                next_rem,
                nodes.alloc_internal()?,
                None,
            ))?;
            wire_node[3 * i + (j as usize - 1)] = Some(bit);
            rem = next_rem;
        }
    }

    // one logic gadget per gate
    for (g_idx, g) in circuit.gates().iter().enumerate() {
        let node_of = |w: usize| -> Result<u64, ReductionError> {
            wire_node[w].ok_or_else(|| {
                ReductionError::BadParameter(alloc::format!("wire {w} has no node"))
            })
        };
        let out = nodes.alloc_arith()?;
        let w = nodes.alloc_internal()?;
        let inst = match *g {
            Gate::And(a, b) => {
                GadgetInstance::new(GadgetKind::And, &[node_of(a)?, node_of(b)?], out, w, None)
            }
            Gate::Or(a, b) => {
                GadgetInstance::new(GadgetKind::Or, &[node_of(a)?, node_of(b)?], out, w, None)
            }
            Gate::Not(a) => GadgetInstance::new(GadgetKind::Not, &[node_of(a)?], out, w, None),
        };
        game.insert(inst)?;
        wire_node[circuit.input_count() + g_idx] = Some(out);
    }

    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for i in 0..n {
        let po = circuit.outputs()[2 * i];
        let mo = circuit.outputs()[2 * i + 1];
        plus.push(wire_node[po].expect("normalized outputs are gate wires"));
        minus.push(wire_node[mo].expect("normalized outputs are gate wires"));
    }
    Ok(SamplingOutputs { plus, minus, gadgets_added: game.gadgets().len() - before })
}

/// Run the whole construction.
pub fn build_reduction(circuit: &BrouwerCircuit, n: usize) -> Result<ReductionOutput, ReductionError> {
    let config = ReductionConfig::new(circuit.clone(), n)?;
    let normalized = normalize_for_gadgets(circuit);
    let params = config.params().clone();
    let k_big = params.k();
    let samples = n.pow(3);
    let mut game = SparseGame::new(params.clone());
    let mut nodes = NodeAllocator::new(k_big);
    let mut map = ReductionNodeMap::default();

    // anchor nodes v_i^0; their driving gadget arrives in the feedback loop
    let anchors: Vec<u64> =
        (0..n).map(|_| nodes.alloc_arith()).collect::<Result<_, _>>()?;
    map.sample = (0..n).map(|i| alloc::vec![anchors[i]]).collect();

    // sampled copies v_i^k = v_i^0 + k/K^2
    let k_sq = Rat::new(1.into(), (k_big as i128 * k_big as i128).into());
    for k in 1..samples {
        let inc = rat(k as i64) * &k_sq;
        for i in 0..n {
            let c_node = nodes.alloc_arith()?;
            game.insert(GadgetInstance::new(
                GadgetKind::Constant,
                &[],
                c_node,
                nodes.alloc_internal()?,
                Some(inc.clone()),
            ))?;
            let vk = nodes.alloc_arith()?;
            game.insert(GadgetInstance::new(
                GadgetKind::Add,
                &[map.sample[i][0], c_node],
                vk,
                nodes.alloc_internal()?,
                None,
            ))?;
            map.sample[i].push(vk);
        }
    }

    // one sampling network per sample point
    for k in 0..samples {
        let inputs: Vec<u64> = (0..n).map(|i| map.sample[i][k]).collect();
        let outs = build_sampling_network(&mut game, &mut nodes, &normalized, &inputs)?;
        for i in 0..n {
            if k == 0 {
                map.sample_plus.push(alloc::vec![outs.plus[i]]);
                map.sample_minus.push(alloc::vec![outs.minus[i]]);
            } else {
                map.sample_plus[i].push(outs.plus[i]);
                map.sample_minus[i].push(outs.minus[i]);
            }
        }
    }

    // averaging: scale each direction reading by 1/K, then fold
    let inv_k = params.cap();
    for (list, into) in [(&map.sample_plus, &mut map.avg_plus), (&map.sample_minus, &mut map.avg_minus)]
    {
        for per_coord in list.iter() {
            let mut acc: Option<u64> = None;
            for &src in per_coord {
                let scaled = nodes.alloc_arith()?;
                game.insert(GadgetInstance::new(
                    GadgetKind::Scale,
                    &[src],
                    scaled,
                    nodes.alloc_internal()?,
                    Some(inv_k.clone()),
                ))?;
                acc = Some(match acc {
                    None => scaled,
                    Some(prev) => {
                        let sum = nodes.alloc_arith()?;
                        game.insert(GadgetInstance::new(
                            GadgetKind::Add,
                            &[prev, scaled],
                            sum,
                            nodes.alloc_internal()?,
                            None,
                        ))?;
                        sum
                    }
                });
            }
            into.push(acc.expect("n^3 >= 1"));
        }
    }

    // feedback: v_i^0 tracks v_i^0 + v_i^+ - v_i^-
    for i in 0..n {
        let sum = nodes.alloc_arith()?;
        game.insert(GadgetInstance::new(
            GadgetKind::Add,
            &[anchors[i], map.avg_plus[i]],
            sum,
            nodes.alloc_internal()?,
            None,
        ))?;
        let diff = nodes.alloc_arith()?;
        game.insert(GadgetInstance::new(
            GadgetKind::Sub,
            &[sum, map.avg_minus[i]],
            diff,
            nodes.alloc_internal()?,
            None,
        ))?;
        game.insert(GadgetInstance::new(
            GadgetKind::Copy,
            &[diff],
            anchors[i],
            nodes.alloc_internal()?,
            None,
        ))?;
        map.loop_sum.push(sum);
        map.loop_diff.push(diff);
    }

    Ok(ReductionOutput {
        config,
        game,
        nodes: map,
        normalized,
        arith_nodes_used: nodes.arith_used(),
        internal_nodes_used: nodes.internal_used(),
    })
}

// ---------------------------------------------------------------------------
// structural validation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StructureCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct StructureReport {
    pub checks: Vec<StructureCheck>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Re-derive every delta from the gadget list and compare against the
/// game's stored maps; check class membership, the node-usage rules, the
/// node budget, and spot-check assembled payoff cells.
pub fn validate_structure(output: &ReductionOutput) -> StructureReport {
    use crate::gadget::{gadget_deltas, CellDelta};
    let mut checks = Vec::new();
    let game = &output.game;
    let params = game.params();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(StructureCheck { name: name.into(), passed, detail });
    };

    // rebuild the delta maps from scratch
    let mut da: BTreeMap<(u64, u64), Rat> = BTreeMap::new();
    let mut db: BTreeMap<(u64, u64), Rat> = BTreeMap::new();
    let mut dcol: BTreeMap<u64, Rat> = BTreeMap::new();
    let mut collision = None;
    'outer: for g in game.gadgets() {
        match gadget_deltas(g, &params.cap()) {
            Ok(ds) => {
                for d in ds {
                    let clash = match d {
                        CellDelta::A(i, j, v) => da.insert((i, j), v).is_some(),
                        CellDelta::B(i, j, v) => {
                            db.insert((i, j), v).is_some() || dcol.contains_key(&j)
                        }
                        CellDelta::BColumn(j, v) => {
                            let hit = dcol.insert(j, v).is_some()
                                || db.keys().any(|&(_, c)| c == j);
                            hit
                        }
                    };
                    if clash {
                        collision = Some(alloc::format!("{g:?}"));
                        break 'outer;
                    }
                }
            }
            Err(e) => {
                collision = Some(alloc::format!("{e}"));
                break 'outer;
            }
        }
    }
    push(
        "cell-once",
        collision.is_none(),
        collision.unwrap_or_else(|| "every payoff cell modified at most once".into()),
    );
    let (sa, sb, scol) = game.deltas();
    push(
        "delta-maps-rederive",
        &da == sa && &db == sb && &dcol == scol,
        alloc::format!("{} A-cells, {} B-cells, {} B-columns", da.len(), db.len(), dcol.len()),
    );

    let one = rat(1);
    let in_range = da
        .values()
        .chain(db.values())
        .chain(dcol.values())
        .all(|v| !v.is_negative() && v <= &one);
    push("class-L", in_range && game.in_class_l(), "all deltas within [0, 1]".into());

    // node-usage rules
    let mut outputs = alloc::collections::BTreeSet::new();
    let mut internals = alloc::collections::BTreeSet::new();
    let mut reuse = None;
    for g in game.gadgets() {
        if !outputs.insert(g.output) {
            reuse = Some(alloc::format!("arithmetic node {} drives two gadgets", g.output));
        }
        if !internals.insert(g.internal) {
            reuse = Some(alloc::format!("internal node {} used twice", g.internal));
        }
    }
    push(
        "node-usage",
        reuse.is_none(),
        reuse.unwrap_or_else(|| "output and internal nodes used at most once".into()),
    );

    let budget_ok =
        output.arith_nodes_used <= params.k() && output.internal_nodes_used <= params.k();
    push(
        "node-budget",
        budget_ok,
        alloc::format!(
            "{} arithmetic and {} internal nodes of K = {}",
            output.arith_nodes_used,
            output.internal_nodes_used,
            params.k()
        ),
    );

    // spot-evaluate random assembled cells against the re-derived deltas
    let mut rng = ChaCha8Rng::seed_from_u64(0x5151);
    let n_big = params.n();
    let mut spot_ok = true;
    let mut spot_detail = String::from("256 random cells match");
    for _ in 0..256 {
        let i = rng.random_range(1..=n_big);
        let j = rng.random_range(1..=n_big);
        let mut want_a = params.prototype_a(i, j);
        if let Some(d) = da.get(&(i, j)) {
            want_a += d;
        }
        let mut want_b = params.prototype_b(i, j);
        if let Some(d) = dcol.get(&j) {
            want_b += d;
        }
        if let Some(d) = db.get(&(i, j)) {
            want_b += d;
        }
        if game.a_entry(i, j) != want_a || game.b_entry(i, j) != want_b {
            spot_ok = false;
            spot_detail = alloc::format!("cell ({i}, {j}) mismatches");
            break;
        }
    }
    push("spot-cells", spot_ok, spot_detail);

    StructureReport { checks }
}

// ---------------------------------------------------------------------------
// decoding
// ---------------------------------------------------------------------------

/// Values of arithmetic nodes, the part of a mixed profile the decoder
/// reads. For a dense profile this is `x[2v-1]` per node `v`; synthetic
/// profiles may come straight from [`forward_eval`].
pub type NodeValues = BTreeMap<u64, Rat>;

/// Extract the known values of a forward evaluation.
pub fn values_of_eval(eval: &ForwardEval) -> NodeValues {
    eval.values
        .iter()
        .filter_map(|(&n, v)| match v {
            NodeVal::Known(r) => Some((n, r.clone())),
            NodeVal::Brittle => None,
        })
        .collect()
}

#[derive(Clone, Debug)]
pub enum DecoderVerdict {
    Panchromatic,
    /// Not a panchromatic set; the diagnosis names what is missing.
    Incomplete(String),
}

#[derive(Clone, Debug)]
pub struct DecoderReport {
    /// The scaled sample points `p^k`, one vector of `n` rationals each.
    pub points: Vec<Vec<Rat>>,
    /// Indices of well-positioned sample points.
    pub good: Vec<usize>,
    /// Indices of poorly-positioned sample points.
    pub bad: Vec<usize>,
    /// The floored lattice points of the well-positioned samples, deduplicated.
    pub q: Vec<GridPoint>,
    /// Color tallies `T_1 ... T_{n+1}` over the well-positioned samples.
    pub tallies: Vec<u64>,
    pub verdict: DecoderVerdict,
}

/// Decode a (possibly synthetic) profile of the reduction game.
pub fn decode_equilibrium(
    output: &ReductionOutput,
    values: &NodeValues,
) -> Result<DecoderReport, ReductionError> {
    let n = output.config.n();
    let k_big = output.config.params().k();
    let samples = n.pow(3);
    let scale = rat(8) * rat(k_big as i64);

    let mut points = Vec::with_capacity(samples);
    for k in 0..samples {
        let mut p = Vec::with_capacity(n);
        for i in 0..n {
            let node = output.nodes.sample[i][k];
            let v = values
                .get(&node)
                .ok_or(ReductionError::MissingNodeValue { node })?;
            p.push(&scale * v);
        }
        points.push(p);
    }

    let mut good = Vec::new();
    let mut bad = Vec::new();
    for (k, p) in points.iter().enumerate() {
        if p.iter().all(|a| is_well_positioned(a, k_big)) {
            good.push(k);
        } else {
            bad.push(k);
        }
    }

    let mut tallies = alloc::vec![0u64; n + 1];
    let mut q: Vec<GridPoint> = Vec::new();
    for &k in &good {
        let lattice = pi_point(&points[k])?;
        let color = output.config.circuit().color_at(&lattice)?;
        tallies[color.index(n) - 1] += 1;
        if !q.contains(&lattice) {
            q.push(lattice);
        }
    }
    q.sort();

    let bounds = output.config.circuit().bounds();
    let verdict = if tallies.iter().any(|&t| t == 0) {
        let missing: Vec<String> = (0..=n)
            .filter(|&i| tallies[i] == 0)
            .map(|i| {
                if i == n {
                    String::from("red")
                } else {
                    alloc::format!("{}", i + 1)
                }
            })
            .collect();
        DecoderVerdict::Incomplete(alloc::format!("missing colors: {}", missing.join(", ")))
    } else if q.len() != n + 1 {
        DecoderVerdict::Incomplete(alloc::format!("{} distinct points, need {}", q.len(), n + 1))
    } else if !bounds.accommodated(&q) {
        DecoderVerdict::Incomplete("sampled points are not accommodated".into())
    } else {
        DecoderVerdict::Panchromatic
    };
    Ok(DecoderReport { points, good, bad, q, tallies, verdict })
}

/// Synthetic node values realizing the ideal sampling structure: the
/// anchors take the given values and every sampled copy is exactly
/// `anchor + k/K^2`. Panics if an anchor would push a sample past `1/K`.
pub fn synthetic_sample_values(output: &ReductionOutput, anchors: &[Rat]) -> NodeValues {
    let n = output.config.n();
    assert_eq!(anchors.len(), n);
    let k_big = output.config.params().k();
    let cap = output.config.params().cap();
    let k_sq = Rat::new(1.into(), (k_big as i128 * k_big as i128).into());
    let mut values = NodeValues::new();
    for i in 0..n {
        for (k, &node) in output.nodes.sample[i].iter().enumerate() {
            let v = &anchors[i] + rat(k as i64) * &k_sq;
            assert!(!v.is_negative() && v <= cap, "sample value outside [0, 1/K]");
            values.insert(node, v);
        }
    }
    values
}

/// Run the game's full gadget list as an idealized network from the given
/// anchor values, iterating the feedback loop.
pub fn forward_eval_reduction(
    output: &ReductionOutput,
    anchors: &[Rat],
    rounds: u64,
) -> Result<ForwardEval, ReductionError> {
    let n = output.config.n();
    assert_eq!(anchors.len(), n);
    let mut sources = BTreeMap::new();
    for i in 0..n {
        sources.insert(output.nodes.sample[i][0], anchors[i].clone());
    }
    Ok(forward_eval(
        output.game.gadgets(),
        &output.config.params().cap(),
        &sources,
        rounds,
    )?)
}

// ---------------------------------------------------------------------------
// tally norms and boundary conditions
// ---------------------------------------------------------------------------

/// The max-norm of `sum_i T_i z^i` where `z^i = e_i / K` for `i <= n` and
/// `z^{n+1} = -sum e_i / K`: componentwise `(T_i - T_{n+1}) / K`.
pub fn color_gap_norm(tallies: &[u64], k: u64) -> Result<Rat, ReductionError> {
    if tallies.len() < 2 {
        return Err(ReductionError::BadParameter("need at least two tallies".into()));
    }
    let n = tallies.len() - 1;
    let red = tallies[n] as i128;
    let mut worst: i128 = 0;
    for &t in &tallies[..n] {
        let gap = (t as i128 - red).abs();
        if gap > worst {
            worst = gap;
        }
    }
    Ok(Rat::new(worst.into(), (k as i128).into()))
}

#[derive(Clone, Debug)]
pub struct BoundaryReport {
    pub violations: Vec<(GridPoint, String)>,
}

impl BoundaryReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The four boundary conditions any valid circuit over `B^n` satisfies:
/// no red at a zero coordinate; the color never names a positive
/// coordinate while another is zero; a coordinate at 7 never names
/// itself; and when it names another coordinate, that one is zero.
/// Exhaustive up to `8^n <= 2^16` points, sampled beyond.
pub fn check_boundary_conditions(c: &BrouwerCircuit) -> Result<BoundaryReport, ReductionError> {
    let n = c.dim();
    let bounds = c.bounds().clone();
    let mut violations = Vec::new();
    let mut check = |q: &GridPoint, color: Color, violations: &mut Vec<(GridPoint, String)>| {
        for k in 0..n {
            if q.coord(k) == 0 && color == Color::Red {
                violations.push((q.clone(), "red at a zero coordinate".into()));
            }
            if q.coord(k) == 0 {
                if let Color::Dir(l) = color {
                    if l != k + 1 && q.coord(l - 1) > 0 {
                        violations.push((
                            q.clone(),
                            alloc::format!("color {l} names a positive coordinate"),
                        ));
                    }
                }
            }
            if q.coord(k) == 7 {
                match color {
                    Color::Dir(l) if l == k + 1 => {
                        violations.push((q.clone(), alloc::format!("color {l} at its own 7")));
                    }
                    Color::Dir(l) => {
                        if q.coord(l - 1) != 0 {
                            violations.push((
                                q.clone(),
                                alloc::format!("color {l} beside a 7 but q_{l} != 0"),
                            ));
                        }
                    }
                    Color::Red => {}
                }
            }
        }
    };
    if bounds.point_count() <= 1 << 16 {
        for q in bounds.iter_points() {
            let color = c.color_at(&q)?;
            check(&q, color, &mut violations);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0xb0bb);
        for _ in 0..4096 {
            let mut coords: Vec<u64> = (0..n).map(|_| rng.random_range(0..8)).collect();
            let axis = rng.random_range(0..n);
            coords[axis] = if rng.random::<bool>() { 0 } else { 7 };
            let q = GridPoint(coords);
            let color = c.color_at(&q)?;
            check(&q, color, &mut violations);
        }
    }
    Ok(BoundaryReport { violations })
}
