//! Brouwer-mapping circuits: boolean gate networks over grid-point
//! encodings.
//!
//! A circuit with parameters `(d, r)` reads the concatenated big-endian
//! encoding of a point of `A_r^d` and emits `2d` direction bits, in the
//! order `D1+, D1-, ..., Dd+, Dd-`. A pattern is legal when it is either
//! `case i` (exactly `Di+` set) or the all-minus pattern (`Di+ = 0` and
//! `Di- = 1` for every `i`). Legal patterns induce a color: `case i`
//! maps to color `i` and all-minus maps to `red`.
//!
//! A circuit is *valid* when every point evaluates to a legal pattern and
//! every boundary point follows the boundary rule: if some coordinate is
//! zero the color is `max{i | p_i = 0}`, otherwise (some coordinate is at
//! `r_i - 1`) the color is red.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{pt, GridBounds, GridError, GridPoint};
use crate::synth::CircuitBuilder;

/// A two-input or one-input boolean gate over wire indices.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Gate {
    And(usize, usize),
    Or(usize, usize),
    Not(usize),
}

impl Gate {
    pub fn max_input(&self) -> usize {
        match *self {
            Gate::And(a, b) | Gate::Or(a, b) => a.max(b),
            Gate::Not(a) => a,
        }
    }
}

/// The `2d` output bits of a circuit evaluated at one point.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OutputPattern(pub Vec<bool>);

/// Classification of an output pattern per the legal cases.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PatternClass {
    /// `case i`, 1-based: exactly `Di+` set.
    Case(usize),
    /// The all-minus case (`d + 1`): every `Di+` clear, every `Di-` set.
    AllMinus,
    Invalid,
}

impl OutputPattern {
    pub fn dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn plus(&self, i: usize) -> bool {
        self.0[2 * (i - 1)]
    }

    pub fn minus(&self, i: usize) -> bool {
        self.0[2 * (i - 1) + 1]
    }

    pub fn classify(&self) -> PatternClass {
        let d = self.dim();
        let set: Vec<usize> = (0..self.0.len()).filter(|&k| self.0[k]).collect();
        if set.len() == 1 && set[0] % 2 == 0 {
            return PatternClass::Case(set[0] / 2 + 1);
        }
        if set.len() == d && (1..=d).all(|i| !self.plus(i) && self.minus(i)) {
            return PatternClass::AllMinus;
        }
        PatternClass::Invalid
    }

    /// The pattern for `case i` in dimension `d`.
    pub fn case(d: usize, i: usize) -> Self {
        let mut bits = alloc::vec![false; 2 * d];
        bits[2 * (i - 1)] = true;
        OutputPattern(bits)
    }

    /// The all-minus (red) pattern in dimension `d`.
    pub fn all_minus(d: usize) -> Self {
        let mut bits = alloc::vec![false; 2 * d];
        for i in 0..d {
            bits[2 * i + 1] = true;
        }
        OutputPattern(bits)
    }
}

/// A color assigned to a grid point: one of the `d` directions, or red.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Color {
    /// Directional color, 1-based index in `1..=d`.
    Dir(usize),
    Red,
}

impl Color {
    /// Red sorts after every direction; used for tallies where red is
    /// treated as color `d + 1`.
    pub fn index(&self, d: usize) -> usize {
        match *self {
            Color::Dir(i) => i,
            Color::Red => d + 1,
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Color::Dir(i) => write!(f, "{i}"),
            Color::Red => write!(f, "red"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CircuitError {
    Grid(GridError),
    /// Gate or output references a wire that is not defined before it.
    WireOutOfOrder { gate: usize, wire: usize },
    BadOutputCount { expected: usize, got: usize },
    /// The circuit emitted an illegal pattern at a point and is not wrapped.
    InvalidPattern { point: GridPoint },
    ParameterMismatch,
}

impl From<GridError> for CircuitError {
    fn from(e: GridError) -> Self {
        CircuitError::Grid(e)
    }
}

impl fmt::Display for CircuitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitError::Grid(e) => write!(f, "{e}"),
            CircuitError::WireOutOfOrder { gate, wire } => {
                write!(f, "gate {gate} references undefined wire {wire}")
            }
            CircuitError::BadOutputCount { expected, got } => {
                write!(f, "expected {expected} output wires, got {got}")
            }
            CircuitError::InvalidPattern { point } => {
                write!(f, "illegal output pattern at {point:?}")
            }
            CircuitError::ParameterMismatch => write!(f, "circuit parameters do not match"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CircuitError {}

/// A Brouwer-mapping circuit: wires `0..inputs` are the point encoding,
/// wire `inputs + k` is the output of gate `k`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BrouwerCircuit {
    bounds: GridBounds,
    gates: Vec<Gate>,
    outputs: Vec<usize>,
}

impl BrouwerCircuit {
    pub fn new(
        bounds: GridBounds,
        gates: Vec<Gate>,
        outputs: Vec<usize>,
    ) -> Result<Self, CircuitError> {
        let inputs = bounds.encoding_bits();
        for (k, g) in gates.iter().enumerate() {
            if g.max_input() >= inputs + k {
                return Err(CircuitError::WireOutOfOrder { gate: k, wire: g.max_input() });
            }
        }
        let expected = 2 * bounds.dim();
        if outputs.len() != expected {
            return Err(CircuitError::BadOutputCount { expected, got: outputs.len() });
        }
        let limit = inputs + gates.len();
        for &w in &outputs {
            if w >= limit {
                return Err(CircuitError::WireOutOfOrder { gate: gates.len(), wire: w });
            }
        }
        Ok(BrouwerCircuit { bounds, gates, outputs })
    }

    pub fn bounds(&self) -> &GridBounds {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn input_count(&self) -> usize {
        self.bounds.encoding_bits()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Gate count plus input and output variable counts.
    pub fn size(&self) -> usize {
        self.gates.len() + self.input_count() + self.outputs.len()
    }

    /// Evaluate on raw input bits (length must equal `input_count`).
    pub fn eval_bits(&self, bits: &[bool]) -> OutputPattern {
        debug_assert_eq!(bits.len(), self.input_count());
        let mut wires = Vec::with_capacity(bits.len() + self.gates.len());
        wires.extend_from_slice(bits);
        for g in &self.gates {
            let v = match *g {
                Gate::And(a, b) => wires[a] && wires[b],
                Gate::Or(a, b) => wires[a] || wires[b],
                Gate::Not(a) => !wires[a],
            };
            wires.push(v);
        }
        OutputPattern(self.outputs.iter().map(|&w| wires[w]).collect())
    }

    pub fn eval(&self, p: &GridPoint) -> Result<OutputPattern, CircuitError> {
        let bits = self.bounds.encode(p)?;
        Ok(self.eval_bits(&bits))
    }

    /// The color at `p`; errors on out-of-range points and, for unwrapped
    /// circuits, on illegal patterns.
    pub fn color_at(&self, p: &GridPoint) -> Result<Color, CircuitError> {
        match self.eval(p)?.classify() {
            PatternClass::Case(i) => Ok(Color::Dir(i)),
            PatternClass::AllMinus => Ok(Color::Red),
            PatternClass::Invalid => Err(CircuitError::InvalidPattern { point: p.clone() }),
        }
    }

    /// The color demanded by the boundary rule, if `p` is a boundary point.
    pub fn boundary_rule_color(&self, p: &GridPoint) -> Option<Color> {
        if !self.bounds.on_boundary(p) {
            return None;
        }
        Some(match self.bounds.max_zero_index(p) {
            Some(i) => Color::Dir(i),
            None => Color::Red,
        })
    }

    fn check_point(&self, p: &GridPoint, report: &mut ValidityReport) {
        let class = self.eval(p).expect("point within bounds").classify();
        let got = match class {
            PatternClass::Case(i) => Color::Dir(i),
            PatternClass::AllMinus => Color::Red,
            PatternClass::Invalid => {
                report.violations.push(Violation::IllegalPattern { point: p.clone() });
                return;
            }
        };
        if let Some(expected) = self.boundary_rule_color(p) {
            if got != expected {
                report.violations.push(Violation::BoundaryRule {
                    point: p.clone(),
                    expected,
                    got,
                });
            }
        }
    }

    /// Validity check. Exhaustive mode scans every grid point; sampled mode
    /// scans the grid corners (capped at 4096), `count` random boundary
    /// points, and `count` random points, deterministically from `seed`.
    pub fn check_validity(&self, mode: ValidityMode) -> ValidityReport {
        let mut report = ValidityReport { violations: Vec::new() };
        match mode {
            ValidityMode::Exhaustive => {
                for p in self.bounds.iter_points() {
                    self.check_point(&p, &mut report);
                }
            }
            ValidityMode::Sampled { count, seed } => {
                let d = self.dim();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                if d <= 12 {
                    for mask in 0u64..(1 << d) {
                        let coords: Vec<u64> = (0..d)
                            .map(|i| if (mask >> i) & 1 == 1 { self.bounds.side(i) - 1 } else { 0 })
                            .collect();
                        self.check_point(&pt(&coords), &mut report);
                    }
                } else {
                    for _ in 0..count {
                        let coords: Vec<u64> = (0..d)
                            .map(|i| if rng.random::<bool>() { self.bounds.side(i) - 1 } else { 0 })
                            .collect();
                        self.check_point(&pt(&coords), &mut report);
                    }
                }
                for k in 0..2 * count {
                    let mut coords: Vec<u64> =
                        (0..d).map(|i| rng.random_range(0..self.bounds.side(i))).collect();
                    if k < count {
                        // force onto a random boundary face
                        let i = rng.random_range(0..d);
                        coords[i] = if rng.random::<bool>() { 0 } else { self.bounds.side(i) - 1 };
                    }
                    self.check_point(&pt(&coords), &mut report);
                }
            }
        }
        report
    }

    /// Footnote-style coupling with a standard circuit: the result follows
    /// `self` wherever its pattern is legal and `standard` elsewhere.
    /// Pointwise equal to `self` whenever `self` is valid.
    pub fn wrap_with_standard(&self, standard: &Self) -> Result<Self, CircuitError> {
        if self.bounds != standard.bounds {
            return Err(CircuitError::ParameterMismatch);
        }
        let d = self.dim();
        let mut b = CircuitBuilder::new(self.bounds.clone());
        let inputs: Vec<usize> = (0..b.input_count()).collect();
        let main = b.embed(self, &inputs);
        let fallback = b.embed(standard, &inputs);

        // legality of the main pattern: one of the d one-hot cases, or all-minus
        let mut cases = Vec::with_capacity(d + 1);
        for i in 0..d {
            let mut lits = Vec::with_capacity(2 * d);
            for (k, &w) in main.iter().enumerate() {
                lits.push(if k == 2 * i { w } else { b.not(w) });
            }
            cases.push(b.and_many(&lits));
        }
        let mut minus_lits = Vec::with_capacity(2 * d);
        for (k, &w) in main.iter().enumerate() {
            minus_lits.push(if k % 2 == 1 { w } else { b.not(w) });
        }
        cases.push(b.and_many(&minus_lits));
        let legal = b.or_many(&cases);

        let outs: Vec<usize> =
            (0..2 * d).map(|k| b.mux(legal, main[k], fallback[k])).collect();
        Ok(b.finish(outs))
    }
}

#[derive(Clone, Copy, Debug)]
pub enum ValidityMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    IllegalPattern { point: GridPoint },
    BoundaryRule { point: GridPoint, expected: Color, got: Color },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Whether `set` is a panchromatic simplex of `c`: `d + 1` points in one
/// unit cube carrying all `d + 1` colors. Out-of-range points or illegal
/// patterns make the answer `false`.
pub fn is_panchromatic(c: &BrouwerCircuit, set: &[GridPoint]) -> bool {
    let d = c.dim();
    if set.len() != d + 1 {
        return false;
    }
    let mut dedup = set.to_vec();
    dedup.sort();
    dedup.dedup();
    if dedup.len() != d + 1 {
        return false;
    }
    if !c.bounds().accommodated(set) {
        return false;
    }
    let mut seen = alloc::vec![false; d + 1];
    for p in set {
        match c.color_at(p) {
            Ok(color) => seen[color.index(d) - 1] = true,
            Err(_) => return false,
        }
    }
    seen.iter().all(|&s| s)
}

/// Compile an arbitrary color function into a circuit by sum-of-products
/// over the point encodings. No minimization. Only for small grids.
pub fn compile_color_circuit<F>(
    bounds: &GridBounds,
    color: F,
    max_points: u64,
) -> Result<BrouwerCircuit, CircuitError>
where
    F: Fn(&GridPoint) -> Color,
{
    if bounds.point_count() > max_points {
        return Err(CircuitError::Grid(GridError::OutOfRange {
            point: pt(bounds.sides()),
        }));
    }
    let d = bounds.dim();
    let mut b = CircuitBuilder::new(bounds.clone());
    // one minterm per point, OR-ed into the output bits its color sets
    let mut bit_terms: Vec<Vec<usize>> = alloc::vec![Vec::new(); 2 * d];
    for p in bounds.iter_points() {
        let bits = bounds.encode(&p)?;
        let lits: Vec<usize> = (0..bits.len())
            .map(|k| if bits[k] { b.input(k) } else { b.not_input(k) })
            .collect();
        let term = b.and_many(&lits);
        let pattern = match color(&p) {
            Color::Dir(i) => OutputPattern::case(d, i),
            Color::Red => OutputPattern::all_minus(d),
        };
        for (k, &set) in pattern.0.iter().enumerate() {
            if set {
                bit_terms[k].push(term);
            }
        }
    }
    let outs: Vec<usize> = bit_terms.iter().map(|terms| b.or_many(terms)).collect();
    Ok(b.finish(outs))
}

/// The corner-family color rule: `max{i | p_i = 0}` when some coordinate
/// is zero, red otherwise. Valid on every grid.
pub fn corner_color(bounds: &GridBounds, p: &GridPoint) -> Color {
    match bounds.max_zero_index(p) {
        Some(i) => Color::Dir(i),
        None => Color::Red,
    }
}

/// Test-instance generator: a valid circuit implementing the corner-family
/// rule. Grids up to `2^16` points are compiled from the truth table;
/// larger grids use zero-test comparator subcircuits directly.
pub fn make_corner_circuit(bounds: &GridBounds) -> Result<BrouwerCircuit, CircuitError> {
    if bounds.point_count() <= 1 << 16 {
        if bounds.sides().iter().any(|&r| r < 2) {
            return Err(CircuitError::Grid(GridError::ZeroSide));
        }
        return compile_color_circuit(bounds, |p| corner_color(bounds, p), 1 << 16);
    }
    make_corner_circuit_comparator(bounds)
}

/// The corner-family circuit built from zero-test comparators regardless
/// of grid size; much smaller than the truth-table compile.
pub fn make_corner_circuit_comparator(bounds: &GridBounds) -> Result<BrouwerCircuit, CircuitError> {
    if bounds.sides().iter().any(|&r| r < 2) {
        return Err(CircuitError::Grid(GridError::ZeroSide));
    }
    let d = bounds.dim();
    let mut b = CircuitBuilder::new(bounds.clone());
    let zero: Vec<usize> = (0..d).map(|i| b.coord_is_zero(i)).collect();
    let mut outs = alloc::vec![0usize; 2 * d];
    let any_zero = b.or_many(&zero);
    let red = b.not(any_zero);
    for i in 0..d {
        // i_max = i: coordinate i is zero and no later coordinate is
        let mut lits = alloc::vec![zero[i]];
        for &z in zero.iter().skip(i + 1) {
            lits.push(b.not(z));
        }
        outs[2 * i] = b.and_many(&lits);
        outs[2 * i + 1] = red;
    }
    Ok(b.finish(outs))
}

/// Test-instance generator: the boundary rule with uniformly random
/// interior colors, compiled from the truth table. Valid by construction
/// on any grid small enough to compile.
pub fn make_random_valid_circuit(
    bounds: &GridBounds,
    seed: u64,
) -> Result<BrouwerCircuit, CircuitError> {
    let d = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interior: alloc::collections::BTreeMap<GridPoint, Color> =
        alloc::collections::BTreeMap::new();
    for p in bounds.iter_points() {
        if !bounds.on_boundary(&p) {
            let c = rng.random_range(0..=d);
            interior.insert(p, if c == d { Color::Red } else { Color::Dir(c + 1) });
        }
    }
    compile_color_circuit(
        bounds,
        |p| match bounds.max_zero_index(p) {
            Some(i) => Color::Dir(i),
            None if bounds.on_boundary(p) => Color::Red,
            None => interior[p],
        },
        1 << 16,
    )
}

/// The named well-behaved shape functions, plus explicit tables.
#[derive(Clone, Debug)]
pub enum ShapeFn {
    Const3,
    Halve,
    Third,
    Log,
    Table(Vec<(u64, u64)>),
}

impl ShapeFn {
    pub fn eval(&self, n: u64) -> Option<u64> {
        match self {
            ShapeFn::Const3 => Some(3),
            ShapeFn::Halve => Some(n / 2),
            ShapeFn::Third => Some(n / 3),
            ShapeFn::Log => Some(63 - (n.leading_zeros() as u64).min(63)),
            ShapeFn::Table(t) => t.iter().find(|&&(k, _)| k == n).map(|&(_, v)| v),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InstanceReport {
    pub issues: Vec<alloc::string::String>,
}

impl InstanceReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Check that `(c, 0^n)` is a plausible instance for the shape function
/// `f`: well-behavedness of `f` at `n`, the derived `(d, r)`, the
/// input/output arities, and sampled validity.
pub fn validate_instance(c: &BrouwerCircuit, n: u64, f: &ShapeFn) -> InstanceReport {
    use alloc::format;
    let mut issues = Vec::new();
    let m = match f.eval(n) {
        Some(m) => m,
        None => {
            return InstanceReport { issues: alloc::vec![format!("shape function undefined at n={n}")] }
        }
    };
    if m < 3 || 2 * m > n {
        issues.push(format!("shape function not well-behaved at n={n}: f(n)={m} outside [3, n/2]"));
        return InstanceReport { issues };
    }
    let d = n.div_ceil(m) as usize;
    if c.dim() != d {
        issues.push(format!("dimension mismatch: expected d={d}, circuit has {}", c.dim()));
    }
    let side = 1u64 << m;
    for (i, &r) in c.bounds().sides().iter().enumerate() {
        if r != side {
            issues.push(format!("side {} mismatch: expected 2^{m}={side}, got {r}", i + 1));
        }
    }
    let expected_inputs = d * m as usize;
    if c.dim() == d && c.input_count() != expected_inputs {
        issues.push(format!(
            "input arity mismatch: expected {expected_inputs}, got {}",
            c.input_count()
        ));
    }
    if c.outputs().len() != 2 * c.dim() {
        issues.push(format!(
            "output arity mismatch: expected {}, got {}",
            2 * c.dim(),
            c.outputs().len()
        ));
    }
    if issues.is_empty() {
        let report = c.check_validity(ValidityMode::Sampled { count: 256, seed: 0x5eed });
        if !report.passed() {
            issues.push(format!("validity violations: {:?}", report.violations));
        }
    }
    InstanceReport { issues }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::pt;

    fn corner(r: &[u64]) -> BrouwerCircuit {
        make_corner_circuit(&GridBounds::new(r).unwrap()).unwrap()
    }

    #[test]
    fn classify_cases() {
        assert_eq!(
            OutputPattern(alloc::vec![true, false, false, false]).classify(),
            PatternClass::Case(1)
        );
        assert_eq!(
            OutputPattern(alloc::vec![false, true, false, true]).classify(),
            PatternClass::AllMinus
        );
        assert_eq!(
            OutputPattern(alloc::vec![true, true, false, false]).classify(),
            PatternClass::Invalid
        );
    }

    #[test]
    fn corner_d2_colors() {
        let c = corner(&[8, 8]);
        assert_eq!(c.eval(&pt(&[3, 3])).unwrap().0, alloc::vec![false, true, false, true]);
        assert_eq!(c.eval(&pt(&[0, 5])).unwrap().0, alloc::vec![true, false, false, false]);
        assert_eq!(c.color_at(&pt(&[0, 0])).unwrap(), Color::Dir(2));
        assert_eq!(c.color_at(&pt(&[7, 7])).unwrap(), Color::Red);
        assert_eq!(c.color_at(&pt(&[3, 0])).unwrap(), Color::Dir(2));
    }

    #[test]
    fn corner_d1_colors() {
        let c = corner(&[8]);
        assert_eq!(c.color_at(&pt(&[0])).unwrap(), Color::Dir(1));
        for k in 1..8 {
            assert_eq!(c.color_at(&pt(&[k])).unwrap(), Color::Red);
        }
    }

    #[test]
    fn corner_passes_exhaustive_validity() {
        for r in [&[8u64, 8][..], &[7, 9], &[8], &[7, 7, 7]] {
            let c = corner(r);
            assert!(c.check_validity(ValidityMode::Exhaustive).passed(), "bounds {r:?}");
        }
    }

    #[test]
    fn comparator_mode_matches_truth_table_rule() {
        // force the comparator path by a grid over the truth-table cutoff
        let bounds = GridBounds::new(&[64, 64, 32]).unwrap();
        let c = make_corner_circuit(&bounds).unwrap();
        let report = c.check_validity(ValidityMode::Sampled { count: 200, seed: 7 });
        assert!(report.passed());
        for p in [pt(&[0, 5, 3]), pt(&[4, 0, 3]), pt(&[1, 2, 3]), pt(&[63, 63, 31])] {
            assert_eq!(c.color_at(&p).unwrap(), corner_color(&bounds, &p));
        }
    }

    #[test]
    fn invalid_pattern_is_an_error_unwrapped() {
        // constant circuit emitting (1,1,0,0): two plus bits set
        let bounds = GridBounds::new(&[8, 8]).unwrap();
        let mut b = CircuitBuilder::new(bounds);
        let t = b.constant(true);
        let f = b.constant(false);
        let c = b.finish(alloc::vec![t, t, f, f]);
        assert!(matches!(
            c.color_at(&pt(&[1, 1])),
            Err(CircuitError::InvalidPattern { .. })
        ));
        let report = c.check_validity(ValidityMode::Exhaustive);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::IllegalPattern { point } if *point == pt(&[1, 1]))));
    }

    #[test]
    fn constant_case1_circuit_classifies() {
        let bounds = GridBounds::new(&[8, 8]).unwrap();
        let mut b = CircuitBuilder::new(bounds);
        let t = b.constant(true);
        let f = b.constant(false);
        let c = b.finish(alloc::vec![t, f, f, f]);
        assert_eq!(c.eval(&pt(&[5, 2])).unwrap().classify(), PatternClass::Case(1));
    }

    #[test]
    fn wrap_with_standard_fixes_invalid_points() {
        let bounds = GridBounds::new(&[8, 8]).unwrap();
        let std_circuit = make_corner_circuit(&bounds).unwrap();

        // invalid everywhere
        let mut b = CircuitBuilder::new(bounds.clone());
        let t = b.constant(true);
        let broken = b.finish(alloc::vec![t, t, t, t]);
        let wrapped = broken.wrap_with_standard(&std_circuit).unwrap();
        assert!(wrapped.check_validity(ValidityMode::Exhaustive).passed());
        for p in bounds.iter_points() {
            assert_eq!(wrapped.color_at(&p).unwrap(), std_circuit.color_at(&p).unwrap());
        }

        // valid input is untouched
        let valid = make_corner_circuit(&bounds).unwrap();
        let wrapped = valid.wrap_with_standard(&std_circuit).unwrap();
        for p in bounds.iter_points() {
            assert_eq!(wrapped.eval(&p).unwrap(), valid.eval(&p).unwrap());
        }
    }

    #[test]
    fn wrap_rejects_mismatched_bounds() {
        let a = corner(&[8, 8]);
        let b = corner(&[8]);
        assert!(matches!(a.wrap_with_standard(&b), Err(CircuitError::ParameterMismatch)));
    }

    #[test]
    fn panchromatic_corner_examples() {
        let c = corner(&[8, 8]);
        assert!(is_panchromatic(&c, &[pt(&[0, 1]), pt(&[1, 0]), pt(&[1, 1])]));
        assert!(!is_panchromatic(&c, &[pt(&[0, 0]), pt(&[1, 0]), pt(&[7, 7])]));
        assert!(!is_panchromatic(&c, &[pt(&[0, 1]), pt(&[1, 0])]));
    }

    #[test]
    fn boundary_continuity_small_grids() {
        // colors agree along boundary steps p -> p + e_t with 1 <= p_t <= r_t - 2
        for r in [&[8u64, 8][..], &[7, 8, 7]] {
            let c = corner(r);
            let bounds = c.bounds().clone();
            for p in bounds.iter_points() {
                if !bounds.on_boundary(&p) {
                    continue;
                }
                for t in 0..bounds.dim() {
                    if p.coord(t) < 1 || p.coord(t) > bounds.side(t) - 2 {
                        continue;
                    }
                    let mut q = p.clone();
                    q.0[t] += 1;
                    if !bounds.on_boundary(&q) {
                        continue;
                    }
                    assert_eq!(c.color_at(&p).unwrap(), c.color_at(&q).unwrap());
                }
            }
        }
    }

    #[test]
    fn validate_instance_examples() {
        let c = corner(&[8, 8]);
        assert!(validate_instance(&c, 6, &ShapeFn::Const3).passed());
        let c16 = corner(&[16, 16]);
        assert!(validate_instance(&c16, 8, &ShapeFn::Halve).passed());
        // f(n) = 2 is not well-behaved
        let r = validate_instance(&c, 6, &ShapeFn::Table(alloc::vec![(6, 2)]));
        assert!(!r.passed());
        // wrong grid for the shape
        let r = validate_instance(&c16, 6, &ShapeFn::Const3);
        assert!(!r.passed());
    }
}
