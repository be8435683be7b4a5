//! Gate-level synthesis helpers used to build Brouwer-mapping circuits.
//!
//! The builder appends AND/OR/NOT gates over wire indices and offers the
//! small standard library the transforms need: constants, comparators
//! against constants, ripple adders for `x + c` and `c - x`, muxes, and
//! verbatim embedding of an existing circuit.
//!
//! Builder-generated gates are memoized by their operands so repeated
//! subterms are shared; embedded gates are copied verbatim and never enter
//! the memo table, which keeps the number of gates a transform adds a
//! function of the grid parameters alone.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::circuit::{BrouwerCircuit, Gate};
use crate::grid::GridBounds;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    And(usize, usize),
    Or(usize, usize),
    Not(usize),
}

pub struct CircuitBuilder {
    bounds: GridBounds,
    inputs: usize,
    gates: Vec<Gate>,
    memo: BTreeMap<Key, usize>,
}

impl CircuitBuilder {
    pub fn new(bounds: GridBounds) -> Self {
        let inputs = bounds.encoding_bits();
        CircuitBuilder { bounds, inputs, gates: Vec::new(), memo: BTreeMap::new() }
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn input(&self, k: usize) -> usize {
        debug_assert!(k < self.inputs);
        k
    }

    fn push(&mut self, key: Key, gate: Gate) -> usize {
        if let Some(&w) = self.memo.get(&key) {
            return w;
        }
        let w = self.inputs + self.gates.len();
        self.gates.push(gate);
        self.memo.insert(key, w);
        w
    }

    pub fn and(&mut self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.push(Key::And(a, b), Gate::And(a, b))
    }

    pub fn or(&mut self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.push(Key::Or(a, b), Gate::Or(a, b))
    }

    pub fn not(&mut self, a: usize) -> usize {
        self.push(Key::Not(a), Gate::Not(a))
    }

    pub fn not_input(&mut self, k: usize) -> usize {
        let w = self.input(k);
        self.not(w)
    }

    pub fn xor(&mut self, a: usize, b: usize) -> usize {
        let na = self.not(a);
        let nb = self.not(b);
        let l = self.and(a, nb);
        let r = self.and(na, b);
        self.or(l, r)
    }

    /// Constant wire, synthesized from input 0. Requires at least one input.
    pub fn constant(&mut self, value: bool) -> usize {
        assert!(self.inputs > 0, "constants need at least one input wire");
        let x = self.input(0);
        let nx = self.not(x);
        if value {
            self.or(x, nx)
        } else {
            self.and(x, nx)
        }
    }

    pub fn and_many(&mut self, xs: &[usize]) -> usize {
        match xs.len() {
            0 => self.constant(true),
            1 => xs[0],
            _ => {
                let mid = xs.len() / 2;
                let l = self.and_many(&xs[..mid]);
                let r = self.and_many(&xs[mid..]);
                self.and(l, r)
            }
        }
    }

    pub fn or_many(&mut self, xs: &[usize]) -> usize {
        match xs.len() {
            0 => self.constant(false),
            1 => xs[0],
            _ => {
                let mid = xs.len() / 2;
                let l = self.or_many(&xs[..mid]);
                let r = self.or_many(&xs[mid..]);
                self.or(l, r)
            }
        }
    }

    /// `sel ? a : b`
    pub fn mux(&mut self, sel: usize, a: usize, b: usize) -> usize {
        let ns = self.not(sel);
        let l = self.and(sel, a);
        let r = self.and(ns, b);
        self.or(l, r)
    }

    /// Input wires of coordinate `i` (1-based in the paper, 0-based here),
    /// big-endian. Empty for unit sides.
    pub fn coord_bits(&self, i: usize) -> Vec<usize> {
        let off = self.bounds.offset(i);
        (off..off + self.bounds.width(i)).collect()
    }

    /// Equality of a big-endian bit group against a constant.
    pub fn eq_const(&mut self, bits: &[usize], v: u64) -> usize {
        let w = bits.len();
        if w < 64 && v >= (1 << w) {
            return self.constant(false);
        }
        let lits: Vec<usize> = (0..w)
            .map(|j| {
                let bit = bits[j];
                if (v >> (w - 1 - j)) & 1 == 1 {
                    bit
                } else {
                    self.not(bit)
                }
            })
            .collect();
        self.and_many(&lits)
    }

    /// `value(bits) < c` for a big-endian bit group.
    pub fn lt_const(&mut self, bits: &[usize], c: u64) -> usize {
        let w = bits.len();
        if w < 64 && c >= (1 << w) {
            return self.constant(true);
        }
        if c == 0 {
            return self.constant(false);
        }
        let mut terms = Vec::new();
        let mut prefix_eq: Option<usize> = None;
        for (j, &bit) in bits.iter().enumerate() {
            let cj = (c >> (w - 1 - j)) & 1 == 1;
            if cj {
                let nb = self.not(bit);
                terms.push(match prefix_eq {
                    Some(pe) => self.and(pe, nb),
                    None => nb,
                });
            }
            // extend the equal-prefix wire
            let eq_here = if cj { bit } else { self.not(bit) };
            prefix_eq = Some(match prefix_eq {
                Some(pe) => self.and(pe, eq_here),
                None => eq_here,
            });
        }
        self.or_many(&terms)
    }

    pub fn le_const(&mut self, bits: &[usize], c: u64) -> usize {
        self.lt_const(bits, c.saturating_add(1))
    }

    pub fn ge_const(&mut self, bits: &[usize], c: u64) -> usize {
        let lt = self.lt_const(bits, c);
        self.not(lt)
    }

    pub fn is_zero(&mut self, bits: &[usize]) -> usize {
        self.eq_const(bits, 0)
    }

    pub fn coord_is_zero(&mut self, i: usize) -> usize {
        let bits = self.coord_bits(i);
        self.is_zero(&bits)
    }

    pub fn coord_eq(&mut self, i: usize, v: u64) -> usize {
        let bits = self.coord_bits(i);
        self.eq_const(&bits, v)
    }

    /// `(value(bits) + c) mod 2^out_width`, big-endian result.
    pub fn add_const(&mut self, bits: &[usize], c: u64, out_width: usize) -> Vec<usize> {
        let f = self.constant(false);
        // little-endian padded operand
        let mut xs: Vec<usize> = bits.iter().rev().copied().collect();
        xs.resize(out_width, f);
        let mut out = Vec::with_capacity(out_width);
        let mut carry = f;
        for (j, &x) in xs.iter().enumerate() {
            let cj = (c >> j) & 1 == 1;
            if cj {
                let s = self.xor(x, carry);
                out.push(self.not(s));
                carry = self.or(x, carry);
            } else {
                out.push(self.xor(x, carry));
                carry = self.and(x, carry);
            }
        }
        out.reverse();
        out
    }

    /// `(c - value(bits)) mod 2^out_width`, big-endian; exact when
    /// `value(bits) <= c < 2^out_width`.
    pub fn sub_from_const(&mut self, bits: &[usize], c: u64, out_width: usize) -> Vec<usize> {
        let t = self.constant(true);
        // ~x over out_width bits, little-endian, then add c + 1
        let mut xs: Vec<usize> = Vec::with_capacity(out_width);
        for &b in bits.iter().rev() {
            xs.push(self.not(b));
        }
        xs.resize(out_width, t);
        xs.reverse();
        let add = c.wrapping_add(1) & mask(out_width);
        self.add_const(&xs, add, out_width)
    }

    /// Copy `sub` into this circuit verbatim, feeding its inputs from
    /// `input_map`. Returns the remapped output wires. Copied gates bypass
    /// the memo table.
    pub fn embed(&mut self, sub: &BrouwerCircuit, input_map: &[usize]) -> Vec<usize> {
        assert_eq!(input_map.len(), sub.input_count());
        let base = sub.input_count();
        let mut remap: Vec<usize> = Vec::with_capacity(base + sub.gates().len());
        remap.extend_from_slice(input_map);
        for g in sub.gates() {
            let mapped = match *g {
                Gate::And(a, b) => Gate::And(remap[a], remap[b]),
                Gate::Or(a, b) => Gate::Or(remap[a], remap[b]),
                Gate::Not(a) => Gate::Not(remap[a]),
            };
            let w = self.inputs + self.gates.len();
            self.gates.push(mapped);
            remap.push(w);
        }
        sub.outputs().iter().map(|&w| remap[w]).collect()
    }

    pub fn finish(self, outputs: Vec<usize>) -> BrouwerCircuit {
        BrouwerCircuit::new(self.bounds, self.gates, outputs)
            .expect("builder produces well-formed circuits")
    }
}

fn mask(w: usize) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1 << w) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridBounds;

    fn harness(width: usize) -> (CircuitBuilder, Vec<usize>) {
        // one coordinate of side 2^width gives `width` raw input bits
        let bounds = GridBounds::new(&[1u64 << width]).unwrap();
        let b = CircuitBuilder::new(bounds);
        let bits = b.coord_bits(0);
        (b, bits)
    }

    /// Run the builder's gate list on the encoding of `v` and read `wires`.
    fn raw_eval(b: &CircuitBuilder, width: usize, v: u64, wires: &[usize]) -> u64 {
        let mut vals: Vec<bool> = (0..width).rev().map(|j| (v >> j) & 1 == 1).collect();
        for g in &b.gates {
            let val = match *g {
                Gate::And(x, y) => vals[x] && vals[y],
                Gate::Or(x, y) => vals[x] || vals[y],
                Gate::Not(x) => !vals[x],
            };
            vals.push(val);
        }
        wires.iter().fold(0, |acc, &w| (acc << 1) | u64::from(vals[w]))
    }

    #[test]
    fn comparators_match_u64_semantics() {
        for cval in [0u64, 1, 3, 5, 7] {
            let (mut b, bits) = harness(3);
            let lt = b.lt_const(&bits, cval);
            let eq = b.eq_const(&bits, cval);
            let ge = b.ge_const(&bits, cval);
            let le = b.le_const(&bits, cval);
            for v in 0..8u64 {
                assert_eq!(raw_eval(&b, 3, v, &[lt]) == 1, v < cval, "lt {v} {cval}");
                assert_eq!(raw_eval(&b, 3, v, &[eq]) == 1, v == cval, "eq {v} {cval}");
                assert_eq!(raw_eval(&b, 3, v, &[ge]) == 1, v >= cval, "ge {v} {cval}");
                assert_eq!(raw_eval(&b, 3, v, &[le]) == 1, v <= cval, "le {v} {cval}");
            }
        }
    }

    #[test]
    fn add_const_matches_u64_semantics() {
        let width = 4;
        for c in [0u64, 1, 5, 11, 15] {
            let (mut b, bits) = harness(width);
            let sum = b.add_const(&bits, c, 5);
            for v in 0..(1u64 << width) {
                assert_eq!(raw_eval(&b, width, v, &sum), (v + c) & 0x1f, "v={v} c={c}");
            }
        }
    }

    #[test]
    fn sub_from_const_matches_u64_semantics() {
        let width = 4;
        for c in [7u64, 15, 20] {
            let (mut b, bits) = harness(width);
            let diff = b.sub_from_const(&bits, c, 5);
            for v in 0..(1u64 << width).min(c + 1) {
                assert_eq!(raw_eval(&b, width, v, &diff), (c - v) & 0x1f, "v={v} c={c}");
            }
        }
    }

    #[test]
    fn memoization_shares_subterms_but_embedding_copies() {
        let (mut b, bits) = harness(3);
        let e1 = b.eq_const(&bits, 5);
        let n_before = b.gate_count();
        let e2 = b.eq_const(&bits, 5);
        assert_eq!(e1, e2);
        assert_eq!(b.gate_count(), n_before);

        // embedding the same circuit twice duplicates its gates
        let bounds = GridBounds::new(&[8]).unwrap();
        let mut inner = CircuitBuilder::new(bounds.clone());
        let z = inner.coord_is_zero(0);
        let nz = inner.not(z);
        let sub = inner.finish(alloc::vec![z, nz]);
        let subsize = sub.gates().len();

        let mut outer = CircuitBuilder::new(bounds);
        let map: Vec<usize> = (0..3).collect();
        let before = outer.gate_count();
        outer.embed(&sub, &map);
        outer.embed(&sub, &map);
        assert_eq!(outer.gate_count(), before + 2 * subsize);
    }
}

