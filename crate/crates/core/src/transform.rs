//! Coloring triples and the three dimension-embedding transforms.
//!
//! A coloring triple is a valid Brouwer-mapping circuit over a grid with
//! every side at least 7. The transforms embed a triple into a larger one
//! while keeping panchromatic simplices decodable:
//!
//! * `pad` stretches one side to a larger length, coloring the new slab red.
//! * `lift` adds a fresh dimension; the original colors live on layer 1 of
//!   the new coordinate, layer 0 takes the new directional color, and the
//!   remaining layers are red.
//! * `snake` trades side length for a dimension: the long `t`-th axis is
//!   folded into a serpentine region `W` of the `(t, d+1)`-plane via the
//!   surjection [`snake_psi`].
//!
//! Each transform emits a genuine gate-level circuit: comparator
//! subcircuits on the coordinates select between constant patterns and one
//! embedded copy of the input circuit, so the number of added gates
//! depends only on the grid parameters, never on the input circuit's
//! internals.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::circuit::{
    is_panchromatic, BrouwerCircuit, CircuitError, Color, ShapeFn, ValidityMode,
};
use crate::grid::{GridBounds, GridPoint};
use crate::synth::CircuitBuilder;

/// Grid-size threshold below which triple construction checks validity
/// exhaustively; larger grids are sampled.
pub const EXHAUSTIVE_VALIDITY_CAP: u64 = 1 << 14;

#[derive(Clone, Debug)]
pub enum TransformError {
    Circuit(CircuitError),
    /// A side length, dimension index, or transform parameter is out of range.
    BadParameter(String),
    /// The circuit failed its validity check on construction.
    NotValid(String),
    /// A decoder was handed a set that is not panchromatic for its triple.
    NotPanchromatic,
    /// A decoder input contradicts what the transform guarantees
    /// (impossible for genuine panchromatic simplices).
    MalformedWitness(String),
}

impl From<CircuitError> for TransformError {
    fn from(e: CircuitError) -> Self {
        TransformError::Circuit(e)
    }
}

impl From<crate::grid::GridError> for TransformError {
    fn from(e: crate::grid::GridError) -> Self {
        TransformError::Circuit(CircuitError::Grid(e))
    }
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::Circuit(e) => write!(f, "{e}"),
            TransformError::BadParameter(s) => write!(f, "bad parameter: {s}"),
            TransformError::NotValid(s) => write!(f, "circuit not valid: {s}"),
            TransformError::NotPanchromatic => write!(f, "set is not a panchromatic simplex"),
            TransformError::MalformedWitness(s) => write!(f, "malformed witness: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TransformError {}

fn bad(msg: impl Into<String>) -> TransformError {
    TransformError::BadParameter(msg.into())
}

/// A valid Brouwer-mapping circuit over a grid with all sides at least 7.
/// Validity is checked on construction: exhaustively up to
/// [`EXHAUSTIVE_VALIDITY_CAP`] grid points, sampled beyond.
#[derive(Clone, Debug)]
pub struct ColoringTriple {
    circuit: BrouwerCircuit,
}

impl ColoringTriple {
    pub fn new(circuit: BrouwerCircuit) -> Result<Self, TransformError> {
        if circuit.bounds().sides().iter().any(|&r| r < 7) {
            return Err(bad("every side of a coloring triple must be at least 7"));
        }
        let mode = if circuit.bounds().point_count() <= EXHAUSTIVE_VALIDITY_CAP {
            ValidityMode::Exhaustive
        } else {
            ValidityMode::Sampled { count: 256, seed: 0xc011 }
        };
        let report = circuit.check_validity(mode);
        if !report.passed() {
            return Err(TransformError::NotValid(alloc::format!(
                "{} violations, first: {:?}",
                report.violations.len(),
                report.violations.first()
            )));
        }
        Ok(ColoringTriple { circuit })
    }

    pub fn circuit(&self) -> &BrouwerCircuit {
        &self.circuit
    }

    pub fn dim(&self) -> usize {
        self.circuit.dim()
    }

    pub fn bounds(&self) -> &GridBounds {
        self.circuit.bounds()
    }

    pub fn color_at(&self, p: &GridPoint) -> Result<Color, TransformError> {
        Ok(self.circuit.color_at(p)?)
    }
}

// ---------------------------------------------------------------------------
// shared circuit-assembly pieces
// ---------------------------------------------------------------------------

struct BoundaryWires {
    on_boundary: usize,
    exists_zero: usize,
    /// `imax_sel[i]`: coordinate `i` (0-based) is the largest zero coordinate.
    imax_sel: Vec<usize>,
}

fn boundary_wires(b: &mut CircuitBuilder, bounds: &GridBounds) -> BoundaryWires {
    let d = bounds.dim();
    let mut zero = Vec::with_capacity(d);
    let mut extreme = Vec::with_capacity(2 * d);
    for i in 0..d {
        let z = b.coord_is_zero(i);
        zero.push(z);
        extreme.push(z);
        let bits = b.coord_bits(i);
        let at_max = b.eq_const(&bits, bounds.side(i) - 1);
        extreme.push(at_max);
    }
    let on_boundary = b.or_many(&extreme);
    let exists_zero = b.or_many(&zero);
    // suffix_nonzero[i] = no coordinate from i onwards is zero
    let t = b.constant(true);
    let mut suffix_nonzero = alloc::vec![t; d + 1];
    for i in (0..d).rev() {
        let nz = b.not(zero[i]);
        suffix_nonzero[i] = b.and(nz, suffix_nonzero[i + 1]);
    }
    let imax_sel = (0..d).map(|i| b.and(zero[i], suffix_nonzero[i + 1])).collect();
    BoundaryWires { on_boundary, exists_zero, imax_sel }
}

/// Widen an embedded `2d`-bit pattern to `2(d+1)` bits: the new pair is
/// `(0, old-red)`, so old directional colors keep their case and old red
/// becomes new red.
fn widen_pattern(b: &mut CircuitBuilder, emb: &[usize]) -> Vec<usize> {
    let d = emb.len() / 2;
    let mut red_lits = Vec::with_capacity(2 * d);
    for (k, &w) in emb.iter().enumerate() {
        red_lits.push(if k % 2 == 1 { w } else { b.not(w) });
    }
    let old_red = b.and_many(&red_lits);
    let f = b.constant(false);
    let mut out = emb.to_vec();
    out.push(f);
    out.push(old_red);
    out
}

/// Final output assembly: mutually exclusive selector wires pick between
/// constant case patterns, the red pattern, and an embedded pattern.
fn assemble_outputs(
    b: &mut CircuitBuilder,
    d_new: usize,
    case_sel: &[(usize, usize)], // (1-based case index, selector wire)
    red_sel: usize,
    emb: Option<(usize, &[usize])>, // (selector, 2*d_new pattern wires)
) -> Vec<usize> {
    let mut outs = Vec::with_capacity(2 * d_new);
    for i in 1..=d_new {
        let mut plus_terms: Vec<usize> =
            case_sel.iter().filter(|&&(c, _)| c == i).map(|&(_, w)| w).collect();
        let mut minus_terms = alloc::vec![red_sel];
        if let Some((sel, bits)) = emb {
            plus_terms.push(b.and(sel, bits[2 * (i - 1)]));
            minus_terms.push(b.and(sel, bits[2 * (i - 1) + 1]));
        }
        outs.push(b.or_many(&plus_terms));
        outs.push(b.or_many(&minus_terms));
    }
    outs
}

// ---------------------------------------------------------------------------
// pad: stretch one side
// ---------------------------------------------------------------------------

/// Stretch side `t` (1-based) of the triple to `u > r_t`. Points beyond the
/// old range turn red; the boundary rule is re-derived on the new grid.
pub fn pad(triple: &ColoringTriple, t: usize, u: u64) -> Result<ColoringTriple, TransformError> {
    let d = triple.dim();
    if t == 0 || t > d {
        return Err(bad(alloc::format!("coordinate {t} outside 1..={d}")));
    }
    let old_r = triple.bounds().sides().to_vec();
    if u <= old_r[t - 1] {
        return Err(bad(alloc::format!("pad needs u > r_t, got u={u}, r_t={}", old_r[t - 1])));
    }
    let mut new_r = old_r.clone();
    new_r[t - 1] = u;
    let circuit = pad_circuit(triple.circuit(), t, &GridBounds::new(&new_r)?)?;
    ColoringTriple::new(circuit)
}

fn pad_circuit(
    base: &BrouwerCircuit,
    t: usize,
    new_bounds: &GridBounds,
) -> Result<BrouwerCircuit, TransformError> {
    let d = base.dim();
    let ti = t - 1;
    let old_bounds = base.bounds().clone();
    let mut b = CircuitBuilder::new(new_bounds.clone());

    // the embedded circuit reads the low bits of the stretched coordinate
    let mut input_map = Vec::with_capacity(base.input_count());
    for i in 0..d {
        let bits = b.coord_bits(i);
        if i == ti {
            let keep = old_bounds.width(i);
            input_map.extend_from_slice(&bits[bits.len() - keep..]);
        } else {
            input_map.extend_from_slice(&bits);
        }
    }
    let emb = b.embed(base, &input_map);

    let bw = boundary_wires(&mut b, new_bounds);
    let t_bits = b.coord_bits(ti);
    let in_old = b.le_const(&t_bits, old_bounds.side(ti) - 1);

    let not_bnd = b.not(bw.on_boundary);
    let no_zero = b.not(bw.exists_zero);
    let bnd_red = b.and(bw.on_boundary, no_zero);
    let not_old = b.not(in_old);
    let interior_red = b.and(not_bnd, not_old);
    let red_sel = b.or(bnd_red, interior_red);
    let emb_sel = b.and(not_bnd, in_old);
    let case_sel: Vec<(usize, usize)> = (0..d)
        .map(|i| (i + 1, b.and(bw.on_boundary, bw.imax_sel[i])))
        .collect();

    let outs = assemble_outputs(&mut b, d, &case_sel, red_sel, Some((emb_sel, &emb)));
    Ok(b.finish(outs))
}

/// Decode a panchromatic simplex of `pad(triple, t, u)` back to one of
/// `triple`: the set is unchanged, after checking that its accommodating
/// corner stays strictly inside the old `t`-range.
pub fn pad_decode(
    triple: &ColoringTriple,
    t: usize,
    u: u64,
    witness: &[GridPoint],
) -> Result<Vec<GridPoint>, TransformError> {
    let padded = pad(triple, t, u)?;
    pad_decode_with(triple, &padded, t, witness)
}

pub(crate) fn pad_decode_with(
    triple: &ColoringTriple,
    padded: &ColoringTriple,
    t: usize,
    witness: &[GridPoint],
) -> Result<Vec<GridPoint>, TransformError> {
    if !is_panchromatic(padded.circuit(), witness) {
        return Err(TransformError::NotPanchromatic);
    }
    let corner = min_corner(witness);
    if corner.coord(t - 1) > triple.bounds().side(t - 1) - 1 {
        return Err(TransformError::MalformedWitness(alloc::format!(
            "accommodating corner has p_t = {} beyond the old range",
            corner.coord(t - 1)
        )));
    }
    let result = witness.to_vec();
    if !is_panchromatic(triple.circuit(), &result) {
        return Err(TransformError::MalformedWitness(
            "decoded set is not panchromatic for the base triple".into(),
        ));
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// lift: add a dimension
// ---------------------------------------------------------------------------

/// Add a fresh dimension of side `u >= 7`. Layer 1 of the new coordinate
/// carries the original colors, the boundary rule colors layer 0 with the
/// new direction, and all other interior layers are red.
pub fn lift(triple: &ColoringTriple, u: u64) -> Result<ColoringTriple, TransformError> {
    if u < 7 {
        return Err(bad(alloc::format!("lift needs u >= 7, got {u}")));
    }
    let mut new_r = triple.bounds().sides().to_vec();
    new_r.push(u);
    let circuit = lift_circuit(triple.circuit(), &GridBounds::new(&new_r)?)?;
    ColoringTriple::new(circuit)
}

fn lift_circuit(
    base: &BrouwerCircuit,
    new_bounds: &GridBounds,
) -> Result<BrouwerCircuit, TransformError> {
    let d = base.dim();
    let mut b = CircuitBuilder::new(new_bounds.clone());

    let mut input_map = Vec::with_capacity(base.input_count());
    for i in 0..d {
        input_map.extend_from_slice(&b.coord_bits(i));
    }
    let emb_raw = b.embed(base, &input_map);
    let emb = widen_pattern(&mut b, &emb_raw);

    let bw = boundary_wires(&mut b, new_bounds);
    let layer1 = b.coord_eq(d, 1);

    let not_bnd = b.not(bw.on_boundary);
    let no_zero = b.not(bw.exists_zero);
    let bnd_red = b.and(bw.on_boundary, no_zero);
    let not_layer1 = b.not(layer1);
    let interior_red = b.and(not_bnd, not_layer1);
    let red_sel = b.or(bnd_red, interior_red);
    let emb_sel = b.and(not_bnd, layer1);
    let case_sel: Vec<(usize, usize)> = (0..=d)
        .map(|i| (i + 1, b.and(bw.on_boundary, bw.imax_sel[i])))
        .collect();

    let outs = assemble_outputs(&mut b, d + 1, &case_sel, red_sel, Some((emb_sel, &emb)));
    Ok(b.finish(outs))
}

/// Decode a panchromatic simplex of `lift(triple, u)`: drop the point
/// carrying the new color (it sits on layer 0) and project the rest.
pub fn lift_decode(
    triple: &ColoringTriple,
    u: u64,
    witness: &[GridPoint],
) -> Result<Vec<GridPoint>, TransformError> {
    let lifted = lift(triple, u)?;
    lift_decode_with(triple, &lifted, witness)
}

pub(crate) fn lift_decode_with(
    triple: &ColoringTriple,
    lifted: &ColoringTriple,
    witness: &[GridPoint],
) -> Result<Vec<GridPoint>, TransformError> {
    let d = triple.dim();
    if !is_panchromatic(lifted.circuit(), witness) {
        return Err(TransformError::NotPanchromatic);
    }
    let corner = min_corner(witness);
    if corner.coord(d) != 0 {
        return Err(TransformError::MalformedWitness(
            "accommodating corner leaves layer 0 of the new coordinate".into(),
        ));
    }
    let mut result = Vec::with_capacity(d + 1);
    for p in witness {
        let color = lifted.color_at(p)?;
        if color == Color::Dir(d + 1) {
            continue;
        }
        if p.coord(d) != 1 {
            return Err(TransformError::MalformedWitness(
                "a kept point is not on layer 1".into(),
            ));
        }
        result.push(GridPoint(p.0[..d].to_vec()));
    }
    if !is_panchromatic(triple.circuit(), &result) {
        return Err(TransformError::MalformedWitness(
            "decoded set is not panchromatic for the base triple".into(),
        ));
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// snake: trade side length for a dimension
// ---------------------------------------------------------------------------

/// The serpentine region `W` in the `(t, d+1)`-plane, as a predicate on the
/// two relevant coordinates. `a, b` are the snake parameters.
pub fn in_snake_region(p_t: u64, p_last: u64, a: u64, b: u64) -> bool {
    if p_last < 1 || p_last > 4 * b + 1 {
        return false;
    }
    if p_last == 4 * b + 1 {
        return p_t <= a + 2;
    }
    if p_last == 1 {
        return (2..=a + 4).contains(&p_t);
    }
    match p_last % 4 {
        1 | 3 => (2..=a + 2).contains(&p_t),
        2 => p_t == 2,
        0 => p_t == a + 2,
        _ => unreachable!(),
    }
}

/// Where the snake sends the `t`-coordinate: the folded-out position along
/// the original long axis, as a function of `(p_t, p_{d+1})`.
fn snake_t_image(p_t: u64, p_last: u64, a: u64, b: u64) -> u64 {
    if p_last == 4 * b + 1 {
        return p_t;
    }
    match p_last % 4 {
        // rows 4(b - i) - 3, including the bottom row p_last = 1 (i = b - 1)
        1 => {
            let i = b - (p_last + 3) / 4;
            (2 * i + 2) * a + p_t
        }
        // rows 4(b - i) - 1 run backwards
        3 => {
            let i = b - (p_last + 1) / 4;
            (2 * i + 2) * a + 4 - p_t
        }
        // turning columns at p_t = 2
        2 => {
            let i = b - (p_last + 2) / 4;
            (2 * i + 2) * a + 2
        }
        // turning columns at p_t = a + 2
        0 => {
            let i = b - p_last / 4;
            (2 * i + 1) * a + 2
        }
        _ => unreachable!(),
    }
}

/// The snake surjection from `W` onto the original grid: drops the last
/// coordinate and folds the `t`-th one out. `t` is 1-based; `p` must have
/// `d + 1` coordinates and lie in `W`.
pub fn snake_psi(p: &GridPoint, t: usize, a: u64, b: u64) -> Result<GridPoint, TransformError> {
    let dp = p.dim();
    if t == 0 || t >= dp {
        return Err(bad(alloc::format!("coordinate {t} outside 1..{dp}")));
    }
    let p_t = p.coord(t - 1);
    let p_last = p.coord(dp - 1);
    if !in_snake_region(p_t, p_last, a, b) {
        return Err(bad(alloc::format!("point {p:?} outside the snake region")));
    }
    let mut q = p.0[..dp - 1].to_vec();
    q[t - 1] = snake_t_image(p_t, p_last, a, b);
    Ok(GridPoint(q))
}

/// Snake-embed the triple along coordinate `t` (1-based). Requires
/// `r_t = a(2b + 1) + 5`; the result has `r'_t = a + 5` and a new last
/// side of `4b + 3`.
pub fn snake(
    triple: &ColoringTriple,
    t: usize,
    a: u64,
    b: u64,
) -> Result<ColoringTriple, TransformError> {
    let d = triple.dim();
    if t == 0 || t > d {
        return Err(bad(alloc::format!("coordinate {t} outside 1..={d}")));
    }
    if a < 1 || b < 1 {
        return Err(bad("snake needs a >= 1 and b >= 1"));
    }
    let r_t = triple.bounds().side(t - 1);
    if r_t != a * (2 * b + 1) + 5 {
        return Err(bad(alloc::format!(
            "snake needs r_t = a(2b+1)+5; got r_t={r_t}, a={a}, b={b}"
        )));
    }
    let mut new_r = triple.bounds().sides().to_vec();
    new_r[t - 1] = a + 5;
    new_r.push(4 * b + 3);
    let circuit = snake_circuit(triple.circuit(), t, a, b, &GridBounds::new(&new_r)?)?;
    ColoringTriple::new(circuit)
}

fn snake_circuit(
    base: &BrouwerCircuit,
    t: usize,
    a: u64,
    b_param: u64,
    new_bounds: &GridBounds,
) -> Result<BrouwerCircuit, TransformError> {
    let d = base.dim();
    let ti = t - 1;
    let last = d; // 0-based index of the new coordinate
    let old_width_t = base.bounds().width(ti);
    let mut b = CircuitBuilder::new(new_bounds.clone());

    let t_bits = b.coord_bits(ti);
    let last_bits = b.coord_bits(last);

    // one sweep over the values of the new coordinate computes membership
    // in W and the folded-out t-image
    let mut w_terms = Vec::new();
    let mut image_bit_terms: Vec<Vec<usize>> = alloc::vec![Vec::new(); old_width_t];
    for v in 1..=4 * b_param + 1 {
        let at_v = b.eq_const(&last_bits, v);
        let range_v = if v == 4 * b_param + 1 {
            b.le_const(&t_bits, a + 2)
        } else if v == 1 {
            let ge = b.ge_const(&t_bits, 2);
            let le = b.le_const(&t_bits, a + 4);
            b.and(ge, le)
        } else {
            match v % 4 {
                1 | 3 => {
                    let ge = b.ge_const(&t_bits, 2);
                    let le = b.le_const(&t_bits, a + 2);
                    b.and(ge, le)
                }
                2 => b.eq_const(&t_bits, 2),
                0 => b.eq_const(&t_bits, a + 2),
                _ => unreachable!(),
            }
        };
        w_terms.push(b.and(at_v, range_v));

        let m_bits: Vec<usize> = if v == 4 * b_param + 1 {
            b.add_const(&t_bits, 0, old_width_t)
        } else {
            match v % 4 {
                1 => {
                    let i = b_param - (v + 3) / 4;
                    b.add_const(&t_bits, (2 * i + 2) * a, old_width_t)
                }
                3 => {
                    let i = b_param - (v + 1) / 4;
                    b.sub_from_const(&t_bits, (2 * i + 2) * a + 4, old_width_t)
                }
                2 => {
                    let i = b_param - (v + 2) / 4;
                    let c = (2 * i + 2) * a + 2;
                    (0..old_width_t)
                        .map(|j| b.constant((c >> (old_width_t - 1 - j)) & 1 == 1))
                        .collect()
                }
                0 => {
                    let i = b_param - v / 4;
                    let c = (2 * i + 1) * a + 2;
                    (0..old_width_t)
                        .map(|j| b.constant((c >> (old_width_t - 1 - j)) & 1 == 1))
                        .collect()
                }
                _ => unreachable!(),
            }
        };
        for (j, &mb) in m_bits.iter().enumerate() {
            let masked = b.and(at_v, mb);
            image_bit_terms[j].push(masked);
        }
    }
    let in_w = b.or_many(&w_terms);
    let image_bits: Vec<usize> =
        image_bit_terms.iter().map(|terms| b.or_many(terms)).collect();

    // embedded copy of the base circuit on the folded-out point
    let mut input_map = Vec::with_capacity(base.input_count());
    for i in 0..d {
        if i == ti {
            input_map.extend_from_slice(&image_bits);
        } else {
            input_map.extend_from_slice(&b.coord_bits(i));
        }
    }
    let emb_raw = b.embed(base, &input_map);
    let emb = widen_pattern(&mut b, &emb_raw);

    let bw = boundary_wires(&mut b, new_bounds);

    // interior bands that take the new directional color d+1
    let mut band_terms = Vec::new();
    {
        let ge1 = b.ge_const(&t_bits, 1);
        let le_a1 = b.le_const(&t_bits, a + 1);
        let row_range = b.and(ge1, le_a1);
        for i in 1..=b_param {
            let at_v = b.eq_const(&last_bits, 4 * i);
            band_terms.push(b.and(at_v, row_range));
        }
        let col1 = b.eq_const(&t_bits, 1);
        for v in 1..4 * b_param {
            if v % 4 == 0 {
                continue;
            }
            let at_v = b.eq_const(&last_bits, v);
            band_terms.push(b.and(at_v, col1));
        }
    }
    let bands = b.or_many(&band_terms);

    // priority: W, then the boundary rule, then the bands, then red
    let not_w = b.not(in_w);
    let bnd_only = b.and(not_w, bw.on_boundary);
    let not_bnd = b.not(bw.on_boundary);
    let free = b.and(not_w, not_bnd);

    let emb_sel = in_w;
    let no_zero = b.not(bw.exists_zero);
    let bnd_red = b.and(bnd_only, no_zero);
    let not_bands = b.not(bands);
    let free_red = b.and(free, not_bands);
    let red_sel = b.or(bnd_red, free_red);

    let mut case_sel: Vec<(usize, usize)> = (0..=d)
        .map(|i| (i + 1, b.and(bnd_only, bw.imax_sel[i])))
        .collect();
    let band_sel = b.and(free, bands);
    case_sel.push((d + 1, band_sel));

    let outs = assemble_outputs(&mut b, d + 1, &case_sel, red_sel, Some((emb_sel, &emb)));
    Ok(b.finish(outs))
}

/// Decode a panchromatic simplex of `snake(triple, t, a, b)`. The
/// accommodating corner determines which fold of the snake the simplex
/// straddles; every point not carrying the new color is pushed onto the
/// fold and mapped through [`snake_psi`].
pub fn snake_decode(
    triple: &ColoringTriple,
    t: usize,
    a: u64,
    b: u64,
    witness: &[GridPoint],
) -> Result<Vec<GridPoint>, TransformError> {
    let snaked = snake(triple, t, a, b)?;
    snake_decode_with(triple, &snaked, t, a, b, witness)
}

pub(crate) fn snake_decode_with(
    triple: &ColoringTriple,
    snaked: &ColoringTriple,
    t: usize,
    a: u64,
    b: u64,
    witness: &[GridPoint],
) -> Result<Vec<GridPoint>, TransformError> {
    let d = triple.dim();
    let ti = t - 1;
    let last = d;
    if !is_panchromatic(snaked.circuit(), witness) {
        return Err(TransformError::NotPanchromatic);
    }
    let corner = min_corner(witness);
    let ct = corner.coord(ti);
    let cl = corner.coord(last);

    if cl == 4 * b + 1 {
        return Err(TransformError::MalformedWitness(
            "accommodating corner on the top snake row cannot host the new color".into(),
        ));
    }

    // where to push a kept point so it lands in W before applying psi
    let reposition = |p: &GridPoint| -> Result<(u64, u64), TransformError> {
        let p_t = p.coord(ti);
        let p_l = p.coord(last);
        if ct == 0 {
            if cl != 4 * b {
                return Err(TransformError::MalformedWitness(
                    "corner with p_t = 0 must sit at the top turn".into(),
                ));
            }
            Ok((p_t, 4 * b + 1))
        } else if ct == a + 2 || ct == a + 3 {
            if cl != 0 {
                return Err(TransformError::MalformedWitness(
                    "corner right of the snake body must sit on layer 0".into(),
                ));
            }
            Ok((p_t, 1))
        } else if cl == 4 * b {
            Ok((p_t, 4 * b + 1))
        } else if cl == 0 {
            Ok((p_t.max(2), 1))
        } else if cl % 4 == 1 || cl % 4 == 2 {
            Ok((2, p_l))
        } else if cl % 4 == 0 {
            Ok((p_t.max(2), cl + 1))
        } else {
            Ok((p_t.max(2), cl))
        }
    };

    let mut result = Vec::with_capacity(d + 1);
    for p in witness {
        let color = snaked.color_at(p)?;
        if color == Color::Dir(d + 1) {
            continue;
        }
        let (m_t, m_l) = reposition(p)?;
        let mut q = p.0.clone();
        q[ti] = m_t;
        q[last] = m_l;
        result.push(snake_psi(&GridPoint(q), t, a, b)?);
    }
    if !is_panchromatic(triple.circuit(), &result) {
        return Err(TransformError::MalformedWitness(
            "decoded set is not panchromatic for the base triple".into(),
        ));
    }
    Ok(result)
}

fn min_corner(set: &[GridPoint]) -> GridPoint {
    let d = set[0].dim();
    GridPoint(
        (0..d)
            .map(|i| set.iter().map(|p| p.coord(i)).min().unwrap())
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// traces and the composed pipeline
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TraceStep {
    Pad { t: usize, u: u64 },
    Lift { u: u64 },
    Snake { t: usize, a: u64, b: u64 },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceRecord {
    pub step: TraceStep,
    /// Dimension and sides before the step was applied.
    pub pre_dims: (usize, Vec<u64>),
}

/// The ordered list of applied transforms, sufficient to replay the
/// construction from the base triple and to decode witnesses backwards.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransformTrace {
    pub base_dims: (usize, Vec<u64>),
    pub steps: Vec<TraceRecord>,
}

impl TransformTrace {
    pub fn new(base: &ColoringTriple) -> Self {
        TransformTrace {
            base_dims: (base.dim(), base.bounds().sides().to_vec()),
            steps: Vec::new(),
        }
    }

    /// The dimensions a replay would see, by pure bookkeeping; checks each
    /// recorded snapshot along the way.
    pub fn replay_dims(&self) -> Result<(usize, Vec<u64>), TransformError> {
        let (mut d, mut r) = self.base_dims.clone();
        for rec in &self.steps {
            if rec.pre_dims != (d, r.clone()) {
                return Err(bad("trace snapshot does not match replayed dimensions"));
            }
            match rec.step {
                TraceStep::Pad { t, u } => {
                    if t == 0 || t > d || u <= r[t - 1] {
                        return Err(bad("unreplayable pad step"));
                    }
                    r[t - 1] = u;
                }
                TraceStep::Lift { u } => {
                    d += 1;
                    r.push(u);
                }
                TraceStep::Snake { t, a, b } => {
                    if t == 0 || t > d || r[t - 1] != a * (2 * b + 1) + 5 {
                        return Err(bad("unreplayable snake step"));
                    }
                    r[t - 1] = a + 5;
                    r.push(4 * b + 3);
                    d += 1;
                }
            }
        }
        Ok((d, r))
    }
}

/// Apply one recorded step to a triple.
pub fn apply_step(
    triple: &ColoringTriple,
    step: &TraceStep,
) -> Result<ColoringTriple, TransformError> {
    match *step {
        TraceStep::Pad { t, u } => pad(triple, t, u),
        TraceStep::Lift { u } => lift(triple, u),
        TraceStep::Snake { t, a, b } => snake(triple, t, a, b),
    }
}

/// Decode one recorded step backwards.
pub fn decode_step(
    pre: &ColoringTriple,
    post: &ColoringTriple,
    step: &TraceStep,
    witness: &[GridPoint],
) -> Result<Vec<GridPoint>, TransformError> {
    match *step {
        TraceStep::Pad { t, .. } => pad_decode_with(pre, post, t, witness),
        TraceStep::Lift { .. } => lift_decode_with(pre, post, witness),
        TraceStep::Snake { t, a, b } => snake_decode_with(pre, post, t, a, b, witness),
    }
}

fn checked_pow2(e: u64) -> Result<u64, TransformError> {
    if e >= 63 {
        return Err(bad(alloc::format!("2^{e} overflows the side-length range")));
    }
    Ok(1u64 << e)
}

/// The composed construction: embed a two-dimensional triple with sides
/// `(2^n, 2^n)` into an `m`-dimensional grid with every side `2^l`, where
/// `l = f(11n)` and `m = ceil(11n / l)`. Every intermediate triple passes
/// its construction-time validity check. Pads whose target equals the
/// current side are skipped rather than recorded.
pub fn pipeline_build(
    base: &ColoringTriple,
    n: u64,
    f: &ShapeFn,
) -> Result<(ColoringTriple, TransformTrace), TransformError> {
    let l = f
        .eval(11 * n)
        .ok_or_else(|| bad("shape function undefined at 11n"))?;
    if l < 3 || 2 * l > 11 * n {
        return Err(bad(alloc::format!("f(11n) = {l} is not well-behaved")));
    }
    let side = checked_pow2(n)?;
    if base.dim() != 2 || base.bounds().sides() != [side, side] {
        return Err(bad(alloc::format!(
            "pipeline input must be a 2-dimensional triple with sides 2^n = {side}"
        )));
    }
    let m_prime = n.div_ceil(l - 2);
    if m_prime < 6 {
        return Err(bad(alloc::format!(
            "n too small: need ceil(n/(l-2)) >= 6, got {m_prime}"
        )));
    }
    let m = (11 * n).div_ceil(l) as usize;

    let mut trace = TransformTrace::new(base);
    let mut current = base.clone();

    fn push(
        current: &mut ColoringTriple,
        trace: &mut TransformTrace,
        step: TraceStep,
    ) -> Result<(), TransformError> {
        let pre = (current.dim(), current.bounds().sides().to_vec());
        let next = apply_step(current, &step)?;
        trace.steps.push(TraceRecord { step, pre_dims: pre });
        *current = next;
        Ok(())
    }

    let fold = 1u64 << (l - 1); // 2b + 1 for b = 2^(l-2) - 1
    let b_snake = (1u64 << (l - 2)) - 1;
    let target = checked_pow2(l)?;

    for coord in [1usize, 2] {
        // stretch to a power of 2^(l-2), then repeatedly fold the axis into
        // a fresh dimension until it is short enough
        let first = checked_pow2(m_prime * (l - 2))?;
        if first > current.bounds().side(coord - 1) {
            push(&mut current, &mut trace, TraceStep::Pad { t: coord, u: first })?;
        }
        for t in 0..=(m_prime - 6) {
            let a = checked_pow2((m_prime - t - 1) * (l - 2))? - 5;
            let u = a * fold + 5;
            if u > current.bounds().side(coord - 1) {
                push(&mut current, &mut trace, TraceStep::Pad { t: coord, u })?;
            }
            push(&mut current, &mut trace, TraceStep::Snake { t: coord, a, b: b_snake })?;
            let new_dim = current.dim();
            push(&mut current, &mut trace, TraceStep::Pad { t: new_dim, u: target })?;
        }
        while current.bounds().side(coord - 1) > target {
            let r1 = current.bounds().side(coord - 1);
            let k = (r1 - 5).div_ceil(fold) + 5;
            let u = (k - 5) * fold + 5;
            if u > r1 {
                push(&mut current, &mut trace, TraceStep::Pad { t: coord, u })?;
            }
            push(
                &mut current,
                &mut trace,
                TraceStep::Snake { t: coord, a: k - 5, b: b_snake },
            )?;
            let new_dim = current.dim();
            push(&mut current, &mut trace, TraceStep::Pad { t: new_dim, u: target })?;
        }
        if current.bounds().side(coord - 1) < target {
            push(&mut current, &mut trace, TraceStep::Pad { t: coord, u: target })?;
        }
    }

    if current.dim() > m {
        return Err(bad(alloc::format!(
            "construction used {} dimensions, over the budget m = {m}",
            current.dim()
        )));
    }
    while current.dim() < m {
        push(&mut current, &mut trace, TraceStep::Lift { u: target })?;
    }
    Ok((current, trace))
}

/// Map a panchromatic simplex of the trace's final triple back to one of
/// the base triple by replaying the construction and decoding in reverse.
pub fn pipeline_decode(
    base: &ColoringTriple,
    trace: &TransformTrace,
    witness: &[GridPoint],
) -> Result<Vec<GridPoint>, TransformError> {
    if trace.base_dims != (base.dim(), base.bounds().sides().to_vec()) {
        return Err(bad("trace base dimensions do not match the supplied triple"));
    }
    let mut triples = Vec::with_capacity(trace.steps.len() + 1);
    triples.push(base.clone());
    for rec in &trace.steps {
        let pre = triples.last().unwrap();
        if rec.pre_dims != (pre.dim(), pre.bounds().sides().to_vec()) {
            return Err(bad("trace snapshot does not match replayed triple"));
        }
        let next = apply_step(pre, &rec.step)?;
        triples.push(next);
    }
    let mut current = witness.to_vec();
    for (idx, rec) in trace.steps.iter().enumerate().rev() {
        current = decode_step(&triples[idx], &triples[idx + 1], &rec.step, &current)?;
    }
    Ok(current)
}
