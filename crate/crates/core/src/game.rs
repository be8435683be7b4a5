//! Bimatrix games, mixed profiles, and equilibrium verification in exact
//! rational arithmetic.
//!
//! Two notions of approximation are implemented. A profile is an
//! eps-well-supported equilibrium when no strategy played with positive
//! probability is beaten by another by a margin strictly greater than eps.
//! It is an eps-approximate equilibrium when no (pure, hence mixed)
//! deviation gains more than eps. Well-supported implies approximate for
//! games with entries in `[0, 1]`; the converse holds up to a polynomial
//! blowup via [`approx_to_wsne`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::num::{dot, rat_sum, Rat};

#[derive(Clone, Debug)]
pub enum GameError {
    ShapeMismatch(String),
    InvalidDistribution(String),
    EntryOutOfRange(String),
    BadParameter(String),
    /// Conversion preconditions not met.
    PreconditionFailed(String),
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::ShapeMismatch(s) => write!(f, "shape mismatch: {s}"),
            GameError::InvalidDistribution(s) => write!(f, "invalid distribution: {s}"),
            GameError::EntryOutOfRange(s) => write!(f, "entry out of range: {s}"),
            GameError::BadParameter(s) => write!(f, "bad parameter: {s}"),
            GameError::PreconditionFailed(s) => write!(f, "precondition failed: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GameError {}

/// A two-player game in strategic form: `a[i][j]` pays the row player and
/// `b[i][j]` the column player when row `i` meets column `j`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BimatrixGame {
    a: Vec<Vec<Rat>>,
    b: Vec<Vec<Rat>>,
}

impl BimatrixGame {
    pub fn new(a: Vec<Vec<Rat>>, b: Vec<Vec<Rat>>) -> Result<Self, GameError> {
        if a.is_empty() || a[0].is_empty() {
            return Err(GameError::ShapeMismatch("matrices must be nonempty".into()));
        }
        let cols = a[0].len();
        if a.len() != b.len()
            || a.iter().any(|r| r.len() != cols)
            || b.iter().any(|r| r.len() != cols)
        {
            return Err(GameError::ShapeMismatch("A and B must share an m x n shape".into()));
        }
        Ok(BimatrixGame { a, b })
    }

    /// Convenience constructor from integer payoffs.
    pub fn from_ints(a: &[&[i64]], b: &[&[i64]]) -> Result<Self, GameError> {
        let conv = |m: &[&[i64]]| -> Vec<Vec<Rat>> {
            m.iter().map(|r| r.iter().map(|&x| crate::num::rat(x)).collect()).collect()
        };
        BimatrixGame::new(conv(a), conv(b))
    }

    pub fn rows(&self) -> usize {
        self.a.len()
    }

    pub fn cols(&self) -> usize {
        self.a[0].len()
    }

    pub fn a(&self, i: usize, j: usize) -> &Rat {
        &self.a[i][j]
    }

    pub fn b(&self, i: usize, j: usize) -> &Rat {
        &self.b[i][j]
    }

    pub fn matrices(&self) -> (&Vec<Vec<Rat>>, &Vec<Vec<Rat>>) {
        (&self.a, &self.b)
    }

    pub fn max_abs_entry(&self) -> Rat {
        let mut best = Rat::zero();
        for row in self.a.iter().chain(self.b.iter()) {
            for x in row {
                let v = x.abs();
                if v > best {
                    best = v;
                }
            }
        }
        best
    }

    /// `<a_i | y>`: the row player's payoff for pure row `i` against `y`.
    pub fn row_payoff(&self, i: usize, y: &[Rat]) -> Rat {
        dot(&self.a[i], y)
    }

    /// `<b_j | x>`: the column player's payoff for pure column `j` against `x`.
    pub fn col_payoff(&self, j: usize, x: &[Rat]) -> Rat {
        let mut acc = Rat::zero();
        for i in 0..self.rows() {
            acc += &self.b[i][j] * &x[i];
        }
        acc
    }
}

/// A pair of mixed strategies; probabilities are exact rationals that sum
/// to exactly one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct MixedProfile {
    pub x: Vec<Rat>,
    pub y: Vec<Rat>,
}

impl MixedProfile {
    pub fn new(x: Vec<Rat>, y: Vec<Rat>) -> Result<Self, GameError> {
        for (name, v) in [("x", &x), ("y", &y)] {
            if v.is_empty() {
                return Err(GameError::InvalidDistribution(alloc::format!("{name} is empty")));
            }
            if v.iter().any(|p| p.is_negative()) {
                return Err(GameError::InvalidDistribution(alloc::format!(
                    "{name} has a negative entry"
                )));
            }
            if !rat_sum(v).is_one() {
                return Err(GameError::InvalidDistribution(alloc::format!(
                    "{name} does not sum to 1"
                )));
            }
        }
        Ok(MixedProfile { x, y })
    }

    /// Uniform mixture over both strategy sets.
    pub fn uniform(m: usize, n: usize) -> Self {
        let xm = Rat::new(1.into(), (m as i64).into());
        let yn = Rat::new(1.into(), (n as i64).into());
        MixedProfile { x: alloc::vec![xm; m], y: alloc::vec![yn; n] }
    }

    pub fn pure(m: usize, n: usize, i: usize, j: usize) -> Self {
        let mut x = alloc::vec![Rat::zero(); m];
        let mut y = alloc::vec![Rat::zero(); n];
        x[i] = Rat::one();
        y[j] = Rat::one();
        MixedProfile { x, y }
    }
}

/// Per-strategy payoffs `(<a_i|y>)_i` and `(<b_j|x>)_j`.
pub fn payoff_vectors(
    game: &BimatrixGame,
    profile: &MixedProfile,
) -> Result<(Vec<Rat>, Vec<Rat>), GameError> {
    if profile.x.len() != game.rows() || profile.y.len() != game.cols() {
        return Err(GameError::ShapeMismatch("profile does not fit the game".into()));
    }
    let rows = (0..game.rows()).map(|i| game.row_payoff(i, &profile.y)).collect();
    let cols = (0..game.cols()).map(|j| game.col_payoff(j, &profile.x)).collect();
    Ok((rows, cols))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Player {
    Row,
    Column,
}

/// Verification outcome, carrying the first violation found.
#[derive(Clone, Debug)]
pub struct EquilibriumWitness {
    pub ok: bool,
    pub violation: Option<ViolationDetail>,
}

#[derive(Clone, Debug)]
pub struct ViolationDetail {
    pub player: Player,
    /// The strategy that does strictly better.
    pub better: usize,
    /// The offending strategy it beats (played with positive probability,
    /// for the well-supported check; unused for the approximate check).
    pub worse: usize,
    /// The full payoff margin, in payoff units.
    pub margin: Rat,
}

impl EquilibriumWitness {
    fn pass() -> Self {
        EquilibriumWitness { ok: true, violation: None }
    }

    fn fail(player: Player, better: usize, worse: usize, margin: Rat) -> Self {
        EquilibriumWitness {
            ok: false,
            violation: Some(ViolationDetail { player, better, worse, margin }),
        }
    }
}

/// Well-supported check: a strategy beaten by a margin strictly greater
/// than `eps` must carry zero probability.
pub fn verify_wsne(
    game: &BimatrixGame,
    profile: &MixedProfile,
    eps: &Rat,
) -> Result<EquilibriumWitness, GameError> {
    let (rows, cols) = payoff_vectors(game, profile)?;
    let best_row = rows.iter().enumerate().max_by(|a, b| a.1.cmp(b.1)).unwrap();
    for (i, p) in profile.x.iter().enumerate() {
        if p.is_positive() {
            let margin = best_row.1 - &rows[i];
            if &margin > eps {
                return Ok(EquilibriumWitness::fail(Player::Row, best_row.0, i, margin));
            }
        }
    }
    let best_col = cols.iter().enumerate().max_by(|a, b| a.1.cmp(b.1)).unwrap();
    for (j, p) in profile.y.iter().enumerate() {
        if p.is_positive() {
            let margin = best_col.1 - &cols[j];
            if &margin > eps {
                return Ok(EquilibriumWitness::fail(Player::Column, best_col.0, j, margin));
            }
        }
    }
    Ok(EquilibriumWitness::pass())
}

/// Approximate-equilibrium check: the best pure deviation of either player
/// gains at most `eps`. Pure deviations suffice by linearity, so this is
/// exact for the usual quantification over all mixed deviations.
pub fn verify_approx_ne(
    game: &BimatrixGame,
    profile: &MixedProfile,
    eps: &Rat,
) -> Result<EquilibriumWitness, GameError> {
    let (rows, cols) = payoff_vectors(game, profile)?;
    let row_value = dot(&profile.x, &rows);
    let best_row = rows.iter().enumerate().max_by(|a, b| a.1.cmp(b.1)).unwrap();
    let gain = best_row.1 - &row_value;
    if &gain > eps {
        return Ok(EquilibriumWitness::fail(Player::Row, best_row.0, 0, gain));
    }
    let col_value = dot(&profile.y, &cols);
    let best_col = cols.iter().enumerate().max_by(|a, b| a.1.cmp(b.1)).unwrap();
    let gain = best_col.1 - &col_value;
    if &gain > eps {
        return Ok(EquilibriumWitness::fail(Player::Column, best_col.0, 0, gain));
    }
    Ok(EquilibriumWitness::pass())
}

/// Convert an `eps^2/(8n)`-approximate equilibrium into an
/// `eps`-well-supported one: zero every strategy beaten by at least
/// `eps/2` and rescale the remaining mass proportionally.
pub fn approx_to_wsne(
    game: &BimatrixGame,
    profile: &MixedProfile,
    eps: &Rat,
) -> Result<MixedProfile, GameError> {
    if !eps.is_positive() {
        return Err(GameError::BadParameter("eps must be positive".into()));
    }
    if game.max_abs_entry() > Rat::one() {
        return Err(GameError::PreconditionFailed(
            "conversion needs payoff entries within [-1, 1]".into(),
        ));
    }
    let n = game.rows().max(game.cols()) as i64;
    let pre_eps = eps * eps / Rat::new(8.into(), 1.into()) / Rat::from_integer(n.into());
    if !verify_approx_ne(game, profile, &pre_eps)?.ok {
        return Err(GameError::PreconditionFailed(alloc::format!(
            "input is not an eps^2/(8n)-approximate equilibrium (threshold {pre_eps})"
        )));
    }
    let (rows, cols) = payoff_vectors(game, profile)?;
    let half = eps / crate::num::rat(2);
    let best_row = rows.iter().max().unwrap().clone();
    let best_col = cols.iter().max().unwrap().clone();

    let prune = |probs: &[Rat], payoffs: &[Rat], best: &Rat| -> Vec<Rat> {
        probs
            .iter()
            .zip(payoffs)
            .map(|(p, v)| if best >= &(v + &half) { Rat::zero() } else { p.clone() })
            .collect()
    };
    let x = prune(&profile.x, &rows, &best_row);
    let y = prune(&profile.y, &cols, &best_col);
    let xs = rat_sum(&x);
    let ys = rat_sum(&y);
    if xs.is_zero() || ys.is_zero() {
        return Err(GameError::PreconditionFailed(
            "pruning removed all strategies; input violates the precondition".into(),
        ));
    }
    let x = x.into_iter().map(|p| p / &xs).collect();
    let y = y.into_iter().map(|p| p / &ys).collect();
    MixedProfile::new(x, y)
}

/// Affinely map all payoffs into `[0, 1]`: `x -> (x + bound) / (2 bound)`.
pub fn normalize_positive(game: &BimatrixGame, bound: &Rat) -> Result<BimatrixGame, GameError> {
    if !bound.is_positive() {
        return Err(GameError::BadParameter("bound must be positive".into()));
    }
    if &game.max_abs_entry() > bound {
        return Err(GameError::EntryOutOfRange(alloc::format!(
            "an entry exceeds the bound {bound}"
        )));
    }
    let two_bound = bound + bound;
    let map = |m: &Vec<Vec<Rat>>| -> Vec<Vec<Rat>> {
        m.iter()
            .map(|row| row.iter().map(|x| (x + bound) / &two_bound).collect())
            .collect()
    };
    BimatrixGame::new(map(&game.a), map(&game.b))
}

/// Positive scaling plus shift of both payoff matrices.
pub fn transform_payoffs(
    game: &BimatrixGame,
    scale: &Rat,
    shift: &Rat,
) -> Result<BimatrixGame, GameError> {
    if !scale.is_positive() {
        return Err(GameError::BadParameter("scale must be strictly positive".into()));
    }
    let map = |m: &Vec<Vec<Rat>>| -> Vec<Vec<Rat>> {
        m.iter()
            .map(|row| row.iter().map(|x| x * scale + shift).collect())
            .collect()
    };
    BimatrixGame::new(map(&game.a), map(&game.b))
}

/// Random game with entries `k / denom`, `k` uniform in `0..=denom`.
pub fn random_game<R: Rng>(m: usize, n: usize, denom: u32, rng: &mut R) -> BimatrixGame {
    let entry = |rng: &mut R| Rat::new(rng.random_range(0..=denom).into(), denom.into());
    let a = (0..m).map(|_| (0..n).map(|_| entry(rng)).collect()).collect();
    let b = (0..m).map(|_| (0..n).map(|_| entry(rng)).collect()).collect();
    BimatrixGame::new(a, b).expect("shapes agree by construction")
}

/// Random profile with exact rational weights.
pub fn random_profile<R: Rng>(m: usize, n: usize, rng: &mut R) -> MixedProfile {
    let side = |k: usize, rng: &mut R| -> Vec<Rat> {
        let w: Vec<Rat> =
            (0..k).map(|_| Rat::new(rng.random_range(0..64u32).into(), 1.into())).collect();
        let s = rat_sum(&w);
        if s.is_zero() {
            let mut v = alloc::vec![Rat::zero(); k];
            v[0] = Rat::one();
            v
        } else {
            w.into_iter().map(|x| x / &s).collect()
        }
    };
    MixedProfile { x: side(m, rng), y: side(n, rng) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{rat, ratio};

    fn matching_pennies() -> BimatrixGame {
        BimatrixGame::from_ints(&[&[1, -1], &[-1, 1]], &[&[-1, 1], &[1, -1]]).unwrap()
    }

    fn battle_of_sexes() -> BimatrixGame {
        BimatrixGame::from_ints(&[&[2, 0], &[0, 1]], &[&[1, 0], &[0, 2]]).unwrap()
    }

    fn mixed(xs: &[(i64, i64)], ys: &[(i64, i64)]) -> MixedProfile {
        MixedProfile::new(
            xs.iter().map(|&(p, q)| ratio(p, q)).collect(),
            ys.iter().map(|&(p, q)| ratio(p, q)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn payoff_vectors_matching_pennies() {
        let g = matching_pennies();
        let p = mixed(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]);
        let (rows, cols) = payoff_vectors(&g, &p).unwrap();
        assert_eq!(rows, alloc::vec![rat(0), rat(0)]);
        assert_eq!(cols, alloc::vec![rat(0), rat(0)]);

        let p = MixedProfile::pure(2, 2, 0, 0);
        let (rows, cols) = payoff_vectors(&g, &p).unwrap();
        assert_eq!(rows, alloc::vec![rat(1), rat(-1)]);
        assert_eq!(cols, alloc::vec![rat(-1), rat(1)]);
    }

    #[test]
    fn wsne_strictness() {
        let g = matching_pennies();
        let center = mixed(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]);
        assert!(verify_wsne(&g, &center, &rat(0)).unwrap().ok);

        let corner = MixedProfile::pure(2, 2, 0, 0);
        // the column player's second column beats the first by exactly 2
        let w = verify_wsne(&g, &corner, &rat(1)).unwrap();
        assert!(!w.ok);
        let v = w.violation.unwrap();
        assert_eq!(v.player, Player::Column);
        assert_eq!(v.margin, rat(2));
        // the inequality in the definition is strict
        assert!(verify_wsne(&g, &corner, &rat(2)).unwrap().ok);
    }

    #[test]
    fn approx_ne_examples() {
        let g = matching_pennies();
        let center = mixed(&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]);
        assert!(verify_approx_ne(&g, &center, &rat(0)).unwrap().ok);

        let corner = MixedProfile::pure(2, 2, 0, 0);
        assert!(!verify_approx_ne(&g, &corner, &rat(1)).unwrap().ok);
        // eps at the payoff range accepts anything
        assert!(verify_approx_ne(&g, &corner, &rat(2)).unwrap().ok);
    }

    #[test]
    fn wsne_implies_approx_on_unit_games() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let eps = ratio(1, 8);
        for _ in 0..200 {
            let m = rng.random_range(2..=5);
            let n = rng.random_range(2..=5);
            let g = random_game(m, n, 16, &mut rng);
            let p = random_profile(m, n, &mut rng);
            let w = verify_wsne(&g, &p, &eps).unwrap();
            if w.ok {
                assert!(verify_approx_ne(&g, &p, &eps).unwrap().ok);
            }
        }
    }

    #[test]
    fn approx_to_wsne_keeps_strict_pure_equilibria() {
        // battle of sexes, pure equilibrium: strict, so nothing is pruned
        let g01 = normalize_positive(&battle_of_sexes(), &rat(2)).unwrap();
        let p = MixedProfile::pure(2, 2, 0, 0);
        let eps = ratio(1, 4);
        let out = approx_to_wsne(&g01, &p, &eps).unwrap();
        assert_eq!(out, p);
        assert!(verify_wsne(&g01, &out, &eps).unwrap().ok);
    }

    #[test]
    fn approx_to_wsne_prunes_perturbed_mass() {
        let g01 = normalize_positive(&battle_of_sexes(), &rat(2)).unwrap();
        let eps = ratio(1, 4);
        // eps^2 / (16 n) of mass leaked onto the beaten strategies
        let delta = &eps * &eps / rat(32);
        let x = alloc::vec![rat(1) - &delta, delta.clone()];
        let y = alloc::vec![rat(1) - &delta, delta.clone()];
        let p = MixedProfile::new(x, y).unwrap();
        let out = approx_to_wsne(&g01, &p, &eps).unwrap();
        assert!(verify_wsne(&g01, &out, &eps).unwrap().ok);
        assert!(out.x[1].is_zero());

        // an input failing the precondition errors
        let p_bad = MixedProfile::pure(2, 2, 0, 1);
        assert!(matches!(
            approx_to_wsne(&g01, &p_bad, &eps),
            Err(GameError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn profile_validation() {
        assert!(MixedProfile::new(alloc::vec![ratio(9, 10)], alloc::vec![rat(1)]).is_err());
        assert!(MixedProfile::new(
            alloc::vec![ratio(3, 2), ratio(-1, 2)],
            alloc::vec![rat(1)]
        )
        .is_err());
    }

    #[test]
    fn normalize_examples() {
        let g = BimatrixGame::from_ints(&[&[0, 8], &[-8, 3]], &[&[8, 0], &[-3, -8]]).unwrap();
        let n = normalize_positive(&g, &rat(8)).unwrap();
        assert_eq!(n.a(0, 0), &ratio(1, 2));
        assert_eq!(n.a(0, 1), &rat(1));
        assert_eq!(n.a(1, 0), &rat(0));
        let g9 = BimatrixGame::from_ints(&[&[9]], &[&[0]]).unwrap();
        assert!(normalize_positive(&g9, &rat(8)).is_err());
    }

    #[test]
    fn transform_scale_and_shift() {
        let g = matching_pennies();
        let id = transform_payoffs(&g, &rat(1), &rat(0)).unwrap();
        assert_eq!(id, g);
        assert!(transform_payoffs(&g, &rat(0), &rat(0)).is_err());

        // shifting never changes verdicts; scaling by c rescales eps
        let shifted = transform_payoffs(&g, &rat(1), &rat(5)).unwrap();
        let scaled = transform_payoffs(&g, &rat(3), &rat(0)).unwrap();
        let p = MixedProfile::pure(2, 2, 0, 0);
        for eps_num in 0..5i64 {
            let eps = rat(eps_num);
            let base = verify_wsne(&g, &p, &eps).unwrap().ok;
            assert_eq!(verify_wsne(&shifted, &p, &eps).unwrap().ok, base);
            let base = verify_approx_ne(&g, &p, &eps).unwrap().ok;
            assert_eq!(
                verify_approx_ne(&scaled, &p, &(eps * rat(3))).unwrap().ok,
                base
            );
        }
    }
}
