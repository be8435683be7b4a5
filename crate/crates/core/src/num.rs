//! Exact rational scalars and small helpers shared across the crate.

use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar used throughout the equilibrium pipeline.
pub type Rat = num_rational::BigRational;

/// `n` as a rational.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `p/q` as a rational. Panics if `q == 0`.
pub fn ratio(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// `2^e` as a rational; `e` may be negative.
pub fn pow2(e: i64) -> Rat {
    let base = BigInt::from(2);
    if e >= 0 {
        Rat::from_integer(base.pow(e as u32))
    } else {
        Rat::new(BigInt::one(), base.pow((-e) as u32))
    }
}

/// Canonical `p/q` rendering, always with an explicit denominator.
pub fn rat_to_string(x: &Rat) -> String {
    alloc::format!("{}/{}", x.numer(), x.denom())
}

/// Sum of a slice of rationals.
pub fn rat_sum(xs: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for x in xs {
        acc += x;
    }
    acc
}

/// Dot product of two equal-length slices.
pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rat::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// max(|x_i|) over a slice.
pub fn linf_norm(xs: &[Rat]) -> Rat {
    let mut best = Rat::zero();
    for x in xs {
        let a = x.abs();
        if a > best {
            best = a;
        }
    }
    best
}

/// Componentwise `a - b`.
pub fn vec_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_negative_exponent() {
        assert_eq!(pow2(-3), ratio(1, 8));
        assert_eq!(pow2(4), rat(16));
    }

    #[test]
    fn rat_string_always_has_denominator() {
        assert_eq!(rat_to_string(&rat(5)), "5/1");
        assert_eq!(rat_to_string(&ratio(-2, 4)), "-1/2");
    }
}
