//! Exact equilibrium solvers.
//!
//! [`support_enumeration`] is the oracle: for every pair of supports it
//! solves the indifference systems in exact rational arithmetic, keeps the
//! solutions that are genuine distributions and best responses, and (for
//! rank-deficient systems) enumerates all basic solutions. It is complete
//! for nondegenerate games and returns the extreme equilibria of degenerate
//! ones.
//!
//! [`lemke_howson`] is the classic complementary-pivoting algorithm on the
//! pair of best-response polytopes, with lexicographic ratio tests so that
//! degenerate games cannot cycle. Pivot counts are reported for the
//! smoothed-complexity harness.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::game::{BimatrixGame, GameError, MixedProfile};
use crate::num::{rat_sum, Rat};

pub const DEFAULT_SUPPORT_CAP: usize = 10;
pub const DEFAULT_PIVOT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Debug)]
pub enum SolveError {
    Game(GameError),
    CapExceeded { size: usize, cap: usize },
    BadLabel { label: usize, max: usize },
    PivotBudgetExceeded { budget: u64 },
    Internal(String),
}

impl From<GameError> for SolveError {
    fn from(e: GameError) -> Self {
        SolveError::Game(e)
    }
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Game(e) => write!(f, "{e}"),
            SolveError::CapExceeded { size, cap } => {
                write!(f, "game size {size} exceeds the enumeration cap {cap}")
            }
            SolveError::BadLabel { label, max } => {
                write!(f, "label {label} outside 1..={max}")
            }
            SolveError::PivotBudgetExceeded { budget } => {
                write!(f, "pivot budget {budget} exceeded")
            }
            SolveError::Internal(s) => write!(f, "internal solver error: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolveError {}

// ---------------------------------------------------------------------------
// exact linear algebra
// ---------------------------------------------------------------------------

/// Gauss-Jordan elimination in place; returns the pivot column of each
/// pivot row. The matrix may include an augmented right-hand column (the
/// caller interprets a pivot there as inconsistency).
fn rref(m: &mut [Vec<Rat>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, pr);
        let inv = m[r][c].clone();
        for j in c..cols {
            let v = &m[r][j] / &inv;
            m[r][j] = v;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    let v = &m[i][j] - &f * &m[r][j];
                    m[i][j] = v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

enum LinearOutcome {
    Unique(Vec<Rat>),
    Inconsistent,
    Underdetermined { rank: usize },
}

/// Solve `M z = rhs` given rows `[coefs..., rhs]`.
fn solve_square_ish(mut aug: Vec<Vec<Rat>>, nvars: usize) -> LinearOutcome {
    let pivots = rref(&mut aug);
    if pivots.iter().any(|&c| c == nvars) {
        return LinearOutcome::Inconsistent;
    }
    if pivots.len() < nvars {
        return LinearOutcome::Underdetermined { rank: pivots.len() };
    }
    let mut z = alloc::vec![Rat::zero(); nvars];
    for (row, &c) in pivots.iter().enumerate() {
        z[c] = aug[row][nvars].clone();
    }
    LinearOutcome::Unique(z)
}

// ---------------------------------------------------------------------------
// support enumeration
// ---------------------------------------------------------------------------

/// Distributions over `full_len` strategies that make every `eq_support`
/// strategy of the opponent indifferent (payoff coefficients given by
/// `coef(eq_strategy, var_strategy)`), restricted to `var_support`, valid,
/// and best responses against all `eq_total` opponent strategies. For
/// rank-deficient systems, all basic solutions (a maximal uniquely-solvable
/// subset of variables, the rest at zero) are returned.
fn side_solutions(
    coef: &dyn Fn(usize, usize) -> Rat,
    eq_support: &[usize],
    var_support: &[usize],
    full_len: usize,
    eq_total: usize,
) -> Vec<Vec<Rat>> {
    let q = var_support.len() + 1; // variables plus the common payoff u
    let build_rows = |keep: &[usize]| -> Vec<Vec<Rat>> {
        let mut rows = Vec::with_capacity(eq_support.len() + 1);
        for &i in eq_support {
            let mut row: Vec<Rat> = keep.iter().map(|&j| coef(i, j)).collect();
            row.push(-Rat::one()); // -u
            row.push(Rat::zero()); // rhs
            rows.push(row);
        }
        let mut norm = alloc::vec![Rat::one(); keep.len()];
        norm.push(Rat::zero());
        norm.push(Rat::one());
        rows.push(norm);
        rows
    };

    let mut raw: Vec<Vec<Rat>> = Vec::new(); // candidate (values..., u) over var_support
    match solve_square_ish(build_rows(var_support), q) {
        LinearOutcome::Unique(z) => raw.push(z),
        LinearOutcome::Inconsistent => {}
        LinearOutcome::Underdetermined { rank } => {
            // basic solutions keep rank - 1 value variables (u always stays)
            let k = var_support.len();
            let keep_len = rank.saturating_sub(1);
            if keep_len >= 1 {
                let mut dedup: BTreeSet<Vec<Rat>> = BTreeSet::new();
                let mut keep_slots: Vec<usize> = (0..keep_len).collect();
                loop {
                    let keep: Vec<usize> = keep_slots.iter().map(|&j| var_support[j]).collect();
                    if let LinearOutcome::Unique(z) =
                        solve_square_ish(build_rows(&keep), keep.len() + 1)
                    {
                        let mut full = alloc::vec![Rat::zero(); k + 1];
                        for (slot, &j) in keep_slots.iter().enumerate() {
                            full[j] = z[slot].clone();
                        }
                        full[k] = z[keep.len()].clone();
                        if dedup.insert(full.clone()) {
                            raw.push(full);
                        }
                    }
                    // next combination of keep_len slots out of k
                    let mut i = keep_len;
                    let advanced = loop {
                        if i == 0 {
                            break false;
                        }
                        i -= 1;
                        if keep_slots[i] != i + k - keep_len {
                            keep_slots[i] += 1;
                            for j in i + 1..keep_len {
                                keep_slots[j] = keep_slots[j - 1] + 1;
                            }
                            break true;
                        }
                    };
                    if !advanced {
                        break;
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    for z in raw {
        let u = z[var_support.len()].clone();
        if z[..var_support.len()].iter().any(|p| p.is_negative()) {
            continue;
        }
        let mut dist = alloc::vec![Rat::zero(); full_len];
        for (slot, &j) in var_support.iter().enumerate() {
            dist[j] = z[slot].clone();
        }
        // best response: nothing outside the opponent support does better
        let mut ok = true;
        for i in 0..eq_total {
            if eq_support.contains(&i) {
                continue;
            }
            let mut payoff = Rat::zero();
            for (slot, &j) in var_support.iter().enumerate() {
                payoff += coef(i, j) * &z[slot];
            }
            if payoff > u {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(dist);
        }
    }
    out
}

fn mask_bits(mask: u32, len: usize) -> Vec<usize> {
    (0..len).filter(|&k| (mask >> k) & 1 == 1).collect()
}

/// Enumerate all support pairs and solve each exactly.
pub fn support_enumeration_with_cap(
    game: &BimatrixGame,
    cap: usize,
) -> Result<Vec<MixedProfile>, SolveError> {
    let m = game.rows();
    let n = game.cols();
    if m > cap || n > cap {
        return Err(SolveError::CapExceeded { size: m.max(n), cap });
    }
    let mut seen: BTreeSet<(Vec<Rat>, Vec<Rat>)> = BTreeSet::new();
    let mut out = Vec::new();
    let a_coef = |i: usize, j: usize| game.a(i, j).clone();
    let b_coef = |j: usize, i: usize| game.b(i, j).clone();
    for sx_mask in 1u32..(1 << m) {
        let sx = mask_bits(sx_mask, m);
        for sy_mask in 1u32..(1 << n) {
            let sy = mask_bits(sy_mask, n);
            let ys = side_solutions(&a_coef, &sx, &sy, n, m);
            if ys.is_empty() {
                continue;
            }
            let xs = side_solutions(&b_coef, &sy, &sx, m, n);
            for x in &xs {
                for y in &ys {
                    if seen.insert((x.clone(), y.clone())) {
                        out.push(MixedProfile::new(x.clone(), y.clone())?);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All equilibria found by support enumeration, at the default size cap.
pub fn support_enumeration(game: &BimatrixGame) -> Result<Vec<MixedProfile>, SolveError> {
    support_enumeration_with_cap(game, DEFAULT_SUPPORT_CAP)
}

/// Equilibrium-level degeneracy: at every equilibrium of a nondegenerate
/// game, each player's support size equals the opponent's count of pure
/// best responses. Any mismatch witnesses degeneracy.
pub fn is_degenerate_at(
    game: &BimatrixGame,
    eqs: &[MixedProfile],
) -> Result<bool, SolveError> {
    for p in eqs {
        let (rows, cols) = crate::game::payoff_vectors(game, p)?;
        let rmax = rows.iter().max().unwrap();
        let br_rows = rows.iter().filter(|v| *v == rmax).count();
        let supp_x = p.x.iter().filter(|v| v.is_positive()).count();
        let cmax = cols.iter().max().unwrap();
        let br_cols = cols.iter().filter(|v| *v == cmax).count();
        let supp_y = p.y.iter().filter(|v| v.is_positive()).count();
        if br_rows != supp_x || br_cols != supp_y || supp_x != supp_y {
            return Ok(true);
        }
    }
    Ok(false)
}

// ---------------------------------------------------------------------------
// Lemke-Howson
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum LhVar {
    /// Row strategy `i` (P system), label `i + 1`.
    X(usize),
    /// Slack of column constraint `j` in P, label `m + j + 1`.
    S(usize),
    /// Column strategy `j` (Q system), label `m + j + 1`.
    Y(usize),
    /// Slack of row constraint `i` in Q, label `i + 1`.
    R(usize),
}

struct Tableau {
    basis: Vec<LhVar>,
    rhs: Vec<Rat>,
    coef: Vec<Vec<Rat>>,
    slack_start: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    /// Lexicographic ratio test on `(rhs, slack columns)`; returns the
    /// pivot row.
    fn lexico_row(&self, col: usize) -> Option<usize> {
        let ncols = self.coef[0].len();
        let mut best: Option<usize> = None;
        for r in 0..self.rows() {
            if !self.coef[r][col].is_positive() {
                continue;
            }
            best = Some(match best {
                None => r,
                Some(b) => {
                    let cr = &self.coef[r][col];
                    let cb = &self.coef[b][col];
                    let mut pick = b;
                    let head = (&self.rhs[r] * cb).cmp(&(&self.rhs[b] * cr));
                    if head == core::cmp::Ordering::Less {
                        pick = r;
                    } else if head == core::cmp::Ordering::Equal {
                        for j in self.slack_start..ncols {
                            let v = (&self.coef[r][j] * cb).cmp(&(&self.coef[b][j] * cr));
                            if v == core::cmp::Ordering::Less {
                                pick = r;
                                break;
                            }
                            if v == core::cmp::Ordering::Greater {
                                break;
                            }
                        }
                    }
                    pick
                }
            });
        }
        best
    }

    fn pivot(&mut self, row: usize, col: usize, entering: LhVar) -> LhVar {
        let ncols = self.coef[0].len();
        let pv = self.coef[row][col].clone();
        for j in 0..ncols {
            let v = &self.coef[row][j] / &pv;
            self.coef[row][j] = v;
        }
        let v = &self.rhs[row] / &pv;
        self.rhs[row] = v;
        for i in 0..self.rows() {
            if i == row || self.coef[i][col].is_zero() {
                continue;
            }
            let f = self.coef[i][col].clone();
            for j in 0..ncols {
                let v = &self.coef[i][j] - &f * &self.coef[row][j];
                self.coef[i][j] = v;
            }
            let v = &self.rhs[i] - &f * &self.rhs[row];
            self.rhs[i] = v;
        }
        core::mem::replace(&mut self.basis[row], entering)
    }
}

#[derive(Clone, Debug)]
pub struct LhSolution {
    pub profile: MixedProfile,
    pub pivots: u64,
}

/// Lemke-Howson from the artificial origin, dropping `label` (1-based in
/// `1..=m+n`). Exact arithmetic with lexicographic degeneracy resolution;
/// the result is an exact Nash equilibrium.
pub fn lemke_howson_with_budget(
    game: &BimatrixGame,
    label: usize,
    budget: u64,
) -> Result<LhSolution, SolveError> {
    let m = game.rows();
    let n = game.cols();
    if label == 0 || label > m + n {
        return Err(SolveError::BadLabel { label, max: m + n });
    }
    // shift payoffs so both matrices are entrywise >= 1
    let mut min = game.a(0, 0).clone();
    let (a_mat, b_mat) = game.matrices();
    for row in a_mat.iter().chain(b_mat.iter()) {
        for v in row {
            if v < &min {
                min = v.clone();
            }
        }
    }
    let delta = Rat::one() - min;
    let a = |i: usize, j: usize| game.a(i, j) + &delta;
    let b = |i: usize, j: usize| game.b(i, j) + &delta;

    // P: B^T x + s = 1 (n rows, columns x_1..x_m, s_1..s_n)
    let p_rows: Vec<Vec<Rat>> = (0..n)
        .map(|j| {
            let mut row: Vec<Rat> = (0..m).map(|i| b(i, j)).collect();
            row.extend((0..n).map(|k| if k == j { Rat::one() } else { Rat::zero() }));
            row
        })
        .collect();
    let mut p = Tableau {
        basis: (0..n).map(LhVar::S).collect(),
        rhs: alloc::vec![Rat::one(); n],
        coef: p_rows,
        slack_start: m,
    };
    // Q: A y + r = 1 (m rows, columns y_1..y_n, r_1..r_m)
    let q_rows: Vec<Vec<Rat>> = (0..m)
        .map(|i| {
            let mut row: Vec<Rat> = (0..n).map(|j| a(i, j)).collect();
            row.extend((0..m).map(|k| if k == i { Rat::one() } else { Rat::zero() }));
            row
        })
        .collect();
    let mut q = Tableau {
        basis: (0..m).map(LhVar::R).collect(),
        rhs: alloc::vec![Rat::one(); m],
        coef: q_rows,
        slack_start: n,
    };

    let var_label = |v: LhVar| match v {
        LhVar::X(i) | LhVar::R(i) => i + 1,
        LhVar::S(j) | LhVar::Y(j) => m + j + 1,
    };
    let mut entering = if label <= m { LhVar::X(label - 1) } else { LhVar::Y(label - m - 1) };
    let mut pivots = 0u64;
    loop {
        pivots += 1;
        if pivots > budget {
            return Err(SolveError::PivotBudgetExceeded { budget });
        }
        let leaving = match entering {
            LhVar::X(i) => {
                let row = p.lexico_row(i).ok_or_else(|| {
                    SolveError::Internal("unbounded pivot column in P".into())
                })?;
                p.pivot(row, i, entering)
            }
            LhVar::S(j) => {
                let row = p.lexico_row(m + j).ok_or_else(|| {
                    SolveError::Internal("unbounded pivot column in P".into())
                })?;
                p.pivot(row, m + j, entering)
            }
            LhVar::Y(j) => {
                let row = q.lexico_row(j).ok_or_else(|| {
                    SolveError::Internal("unbounded pivot column in Q".into())
                })?;
                q.pivot(row, j, entering)
            }
            LhVar::R(i) => {
                let row = q.lexico_row(n + i).ok_or_else(|| {
                    SolveError::Internal("unbounded pivot column in Q".into())
                })?;
                q.pivot(row, n + i, entering)
            }
        };
        if var_label(leaving) == label {
            break;
        }
        entering = match leaving {
            LhVar::X(i) => LhVar::R(i),
            LhVar::R(i) => LhVar::X(i),
            LhVar::S(j) => LhVar::Y(j),
            LhVar::Y(j) => LhVar::S(j),
        };
    }

    let mut x = alloc::vec![Rat::zero(); m];
    for (r, v) in p.basis.iter().enumerate() {
        if let LhVar::X(i) = v {
            x[*i] = p.rhs[r].clone();
        }
    }
    let mut y = alloc::vec![Rat::zero(); n];
    for (r, v) in q.basis.iter().enumerate() {
        if let LhVar::Y(j) = v {
            y[*j] = q.rhs[r].clone();
        }
    }
    let xs = rat_sum(&x);
    let ys = rat_sum(&y);
    if xs.is_zero() || ys.is_zero() {
        return Err(SolveError::Internal("terminated at the artificial origin".into()));
    }
    let x = x.into_iter().map(|v| v / &xs).collect();
    let y = y.into_iter().map(|v| v / &ys).collect();
    Ok(LhSolution { profile: MixedProfile::new(x, y)?, pivots })
}

/// Lemke-Howson with the default pivot budget.
pub fn lemke_howson(game: &BimatrixGame, label: usize) -> Result<LhSolution, SolveError> {
    lemke_howson_with_budget(game, label, DEFAULT_PIVOT_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{random_game, verify_approx_ne, verify_wsne};
    use crate::num::{rat, ratio};
    use rand::{Rng, SeedableRng};

    fn matching_pennies() -> BimatrixGame {
        BimatrixGame::from_ints(&[&[1, -1], &[-1, 1]], &[&[-1, 1], &[1, -1]]).unwrap()
    }

    fn battle_of_sexes() -> BimatrixGame {
        BimatrixGame::from_ints(&[&[2, 0], &[0, 1]], &[&[1, 0], &[0, 2]]).unwrap()
    }

    #[test]
    fn support_enum_matching_pennies() {
        let eqs = support_enumeration(&matching_pennies()).unwrap();
        assert_eq!(eqs.len(), 1);
        let h = ratio(1, 2);
        assert_eq!(eqs[0].x, alloc::vec![h.clone(), h.clone()]);
        assert_eq!(eqs[0].y, alloc::vec![h.clone(), h]);
    }

    #[test]
    fn support_enum_battle_of_sexes() {
        let eqs = support_enumeration(&battle_of_sexes()).unwrap();
        assert_eq!(eqs.len(), 3);
        let pure_a = MixedProfile::pure(2, 2, 0, 0);
        let pure_b = MixedProfile::pure(2, 2, 1, 1);
        let mixed = MixedProfile::new(
            alloc::vec![ratio(2, 3), ratio(1, 3)],
            alloc::vec![ratio(1, 3), ratio(2, 3)],
        )
        .unwrap();
        for want in [&pure_a, &pure_b, &mixed] {
            assert!(eqs.contains(want), "missing {want:?}");
        }
    }

    #[test]
    fn support_enum_dominance_solvable() {
        // prisoner's dilemma: defecting dominates
        let g = BimatrixGame::from_ints(&[&[3, 0], &[5, 1]], &[&[3, 5], &[0, 1]]).unwrap();
        let eqs = support_enumeration(&g).unwrap();
        assert_eq!(eqs, alloc::vec![MixedProfile::pure(2, 2, 1, 1)]);
    }

    #[test]
    fn support_enum_respects_cap() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = random_game(11, 3, 16, &mut rng);
        assert!(matches!(
            support_enumeration(&g),
            Err(SolveError::CapExceeded { .. })
        ));
    }

    #[test]
    fn solver_outputs_are_exact_equilibria() {
        let zero = rat(0);
        for g in [matching_pennies(), battle_of_sexes()] {
            for p in support_enumeration(&g).unwrap() {
                assert!(verify_wsne(&g, &p, &zero).unwrap().ok);
                assert!(verify_approx_ne(&g, &p, &zero).unwrap().ok);
            }
            for label in 1..=4 {
                let s = lemke_howson(&g, label).unwrap();
                assert!(verify_wsne(&g, &s.profile, &zero).unwrap().ok);
            }
        }
    }

    #[test]
    fn lemke_howson_matching_pennies_unique() {
        let g = matching_pennies();
        let h = ratio(1, 2);
        for label in 1..=4 {
            let s = lemke_howson(&g, label).unwrap();
            assert_eq!(s.profile.x, alloc::vec![h.clone(), h.clone()]);
            assert_eq!(s.profile.y, alloc::vec![h.clone(), h.clone()]);
        }
    }

    #[test]
    fn lemke_howson_bos_agrees_with_enumeration() {
        let g = battle_of_sexes();
        let eqs = support_enumeration(&g).unwrap();
        let s = lemke_howson(&g, 1).unwrap();
        assert!(eqs.contains(&s.profile));
    }

    #[test]
    fn lemke_howson_one_by_one() {
        let g = BimatrixGame::from_ints(&[&[7]], &[&[-3]]).unwrap();
        for label in 1..=2 {
            let s = lemke_howson(&g, label).unwrap();
            assert_eq!(s.profile.x, alloc::vec![rat(1)]);
            assert_eq!(s.profile.y, alloc::vec![rat(1)]);
        }
    }

    #[test]
    fn lemke_howson_bad_label() {
        let g = matching_pennies();
        assert!(matches!(lemke_howson(&g, 0), Err(SolveError::BadLabel { .. })));
        assert!(matches!(lemke_howson(&g, 5), Err(SolveError::BadLabel { .. })));
    }

    #[test]
    fn lemke_howson_cross_check_random() {
        let zero = rat(0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        let mut attempts = 0;
        while checked < 12 {
            attempts += 1;
            assert!(attempts < 100, "too many degenerate draws");
            let m = rng.random_range(2..=4);
            let n = rng.random_range(2..=4);
            let g = random_game(m, n, 97, &mut rng);
            let eqs = support_enumeration_with_cap(&g, 6).unwrap();
            assert!(!eqs.is_empty(), "every game has an equilibrium");
            if is_degenerate_at(&g, &eqs).unwrap() {
                continue;
            }
            let s = lemke_howson(&g, 1).unwrap();
            assert!(verify_wsne(&g, &s.profile, &zero).unwrap().ok);
            assert!(eqs.contains(&s.profile), "LH result missing from enumeration");
            checked += 1;
        }
    }
}
