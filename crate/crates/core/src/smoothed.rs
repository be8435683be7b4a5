//! Perturbation models and the smoothed-to-approximation reduction.
//!
//! Uniform noise is drawn on a `2^64`-step grid and scaled by sigma, so
//! the whole pipeline stays in exact rational arithmetic. Gaussian noise
//! is drawn in floating point and truncated onto the same grid before it
//! crosses into the rational world; the truncation error (at most
//! `2^-64`) is far inside every tolerance used here.
//!
//! The reduction itself: perturb a `[-1, 1]` game by uniform noise of
//! magnitude `eps/2`, solve the perturbed game exactly, and return that
//! equilibrium. Because `|x^T S y| <= eps/2` holds for any profile and
//! any noise matrix bounded by `eps/2`, the result is always an
//! `eps`-approximate equilibrium of the original game.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::game::{verify_wsne, BimatrixGame, GameError, MixedProfile};
use crate::num::{rat, Rat};
use crate::solve::{
    lemke_howson, support_enumeration_with_cap, SolveError, DEFAULT_SUPPORT_CAP,
};

#[derive(Clone, Debug)]
pub enum SmoothedError {
    Game(GameError),
    Solve(SolveError),
    BadParameter(String),
}

impl From<GameError> for SmoothedError {
    fn from(e: GameError) -> Self {
        SmoothedError::Game(e)
    }
}

impl From<SolveError> for SmoothedError {
    fn from(e: SolveError) -> Self {
        SmoothedError::Solve(e)
    }
}

impl fmt::Display for SmoothedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothedError::Game(e) => write!(f, "{e}"),
            SmoothedError::Solve(e) => write!(f, "{e}"),
            SmoothedError::BadParameter(s) => write!(f, "bad parameter: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SmoothedError {}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PerturbKind {
    Uniform,
    Gaussian,
}

/// A perturbation model: independent per-entry noise of magnitude (or
/// standard deviation) `sigma`, with `0 < sigma < 1`.
#[derive(Clone, Debug)]
pub struct PerturbModel {
    pub kind: PerturbKind,
    pub sigma: Rat,
}

impl PerturbModel {
    pub fn new(kind: PerturbKind, sigma: Rat) -> Result<Self, SmoothedError> {
        if !sigma.is_positive() || sigma >= Rat::one() {
            return Err(SmoothedError::BadParameter(alloc::format!(
                "sigma must lie strictly between 0 and 1, got {sigma}"
            )));
        }
        Ok(PerturbModel { kind, sigma })
    }

    pub fn uniform(sigma: Rat) -> Result<Self, SmoothedError> {
        PerturbModel::new(PerturbKind::Uniform, sigma)
    }

    pub fn gaussian(sigma: Rat) -> Result<Self, SmoothedError> {
        PerturbModel::new(PerturbKind::Gaussian, sigma)
    }
}

const GRID: i128 = 1 << 64;

fn dyadic(numer: i128) -> Rat {
    Rat::new(numer.into(), GRID.into())
}

/// One noise draw as an exact rational on the `2^64` grid.
pub fn sample_noise<R: Rng>(model: &PerturbModel, rng: &mut R) -> Rat {
    match model.kind {
        PerturbKind::Uniform => {
            let u = rng.random::<u64>() as i128;
            &model.sigma * dyadic(2 * u - GRID)
        }
        PerturbKind::Gaussian => {
            let sigma_f = rat_to_f64(&model.sigma);
            let normal = Normal::new(0.0, sigma_f).expect("sigma validated");
            let x: f64 = normal.sample(rng);
            if !x.is_finite() {
                return Rat::from_integer(0.into());
            }
            let scaled = (x * (GRID as f64)).round();
            // clamp draws so far out they threaten the i128 conversion
            let scaled = scaled.clamp(-(1i64 << 62) as f64 * 4.0, (1i64 << 62) as f64 * 4.0);
            dyadic(scaled as i128)
        }
    }
}

fn rat_to_f64(x: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(0.0)
}

/// The realized noise and the perturbed game.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub perturbed: BimatrixGame,
    pub noise_a: Vec<Vec<Rat>>,
    pub noise_b: Vec<Vec<Rat>>,
    /// Gaussian draws beyond the magnitude bound that were rejected and
    /// redrawn (always zero for the uniform model, or when no bound is
    /// enforced).
    pub rejections: u64,
}

fn perturb_inner(
    game: &BimatrixGame,
    model: &PerturbModel,
    seed: u64,
    bound: Option<&Rat>,
) -> Result<Perturbation, SmoothedError> {
    if game.max_abs_entry() > Rat::one() {
        return Err(SmoothedError::BadParameter(
            "perturbation needs base entries within [-1, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rejections = 0u64;
    let mut draw = |rng: &mut ChaCha8Rng| -> Rat {
        loop {
            let s = sample_noise(model, rng);
            match bound {
                Some(b) if s.abs() > *b => rejections += 1,
                _ => return s,
            }
        }
    };
    let m = game.rows();
    let n = game.cols();
    let mut noise_a = Vec::with_capacity(m);
    let mut noise_b = Vec::with_capacity(m);
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let mut na = Vec::with_capacity(n);
        let mut nb = Vec::with_capacity(n);
        let mut ra = Vec::with_capacity(n);
        let mut rb = Vec::with_capacity(n);
        for j in 0..n {
            let s = draw(&mut rng);
            ra.push(game.a(i, j) + &s);
            na.push(s);
            let t = draw(&mut rng);
            rb.push(game.b(i, j) + &t);
            nb.push(t);
        }
        noise_a.push(na);
        noise_b.push(nb);
        a.push(ra);
        b.push(rb);
    }
    Ok(Perturbation { perturbed: BimatrixGame::new(a, b)?, noise_a, noise_b, rejections })
}

/// Perturb every entry independently. The realized noise matrices come
/// back for bound checking; the draw sequence is reproducible from the
/// seed.
pub fn perturb(
    game: &BimatrixGame,
    model: &PerturbModel,
    seed: u64,
) -> Result<Perturbation, SmoothedError> {
    perturb_inner(game, model, seed, None)
}

/// Like [`perturb`], but Gaussian draws larger than `sigma` in magnitude
/// are rejected and redrawn, so the realized noise is bounded like the
/// uniform model's. The rejection count is reported.
pub fn perturb_bounded(
    game: &BimatrixGame,
    model: &PerturbModel,
    seed: u64,
) -> Result<Perturbation, SmoothedError> {
    let sigma = model.sigma.clone();
    perturb_inner(game, model, seed, Some(&sigma))
}

/// `|x^T S y| <= eps/2` and `|x^T T y| <= eps/2`, exactly.
pub fn perturbation_bound_check(
    profile: &MixedProfile,
    noise_a: &[Vec<Rat>],
    noise_b: &[Vec<Rat>],
    eps: &Rat,
) -> bool {
    let half = eps / rat(2);
    let form = |s: &[Vec<Rat>]| -> Rat {
        let mut acc = rat(0);
        for (i, row) in s.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                acc += &profile.x[i] * v * &profile.y[j];
            }
        }
        acc
    };
    form(noise_a).abs() <= half && form(noise_b).abs() <= half
}

/// Which exact solver the harness runs on the perturbed instance, and the
/// cost metric it reports: pivots for Lemke-Howson, support systems
/// examined for enumeration.
#[derive(Clone, Copy, Debug)]
pub enum Solver {
    SupportEnumeration,
    LemkeHowson { label: usize },
}

fn solve_exact(game: &BimatrixGame, solver: Solver) -> Result<(MixedProfile, u64), SmoothedError> {
    match solver {
        Solver::SupportEnumeration => {
            let eqs = support_enumeration_with_cap(game, DEFAULT_SUPPORT_CAP)?;
            let cost = ((1u64 << game.rows()) - 1) * ((1u64 << game.cols()) - 1);
            let first = eqs
                .into_iter()
                .next()
                .ok_or_else(|| SmoothedError::BadParameter("no equilibrium found".into()))?;
            Ok((first, cost))
        }
        Solver::LemkeHowson { label } => {
            let s = lemke_howson(game, label)?;
            Ok((s.profile, s.pivots))
        }
    }
}

#[derive(Clone, Debug)]
pub struct SmoothedRun {
    pub profile: MixedProfile,
    pub perturbation: Perturbation,
    pub cost: u64,
    pub seed: u64,
}

/// Perturb with uniform noise of magnitude `eps/2`, solve the perturbed
/// game exactly, and return its equilibrium: an `eps`-approximate
/// equilibrium of the original game by the bilinear bound.
pub fn smoothed_for_approximation(
    game: &BimatrixGame,
    eps: &Rat,
    solver: Solver,
    seed: u64,
) -> Result<SmoothedRun, SmoothedError> {
    if !eps.is_positive() {
        return Err(SmoothedError::BadParameter("eps must be positive".into()));
    }
    let sigma = eps / rat(2);
    // eps >= 2 makes any profile qualify; still run the machinery with a
    // clamped sigma so the model constructor stays happy
    let sigma = if sigma >= Rat::one() {
        Rat::new(1.into(), 2.into())
    } else {
        sigma
    };
    let model = PerturbModel::uniform(sigma)?;
    let perturbation = perturb(game, &model, seed)?;
    let (profile, cost) = solve_exact(&perturbation.perturbed, solver)?;
    Ok(SmoothedRun { profile, perturbation, cost, seed })
}

#[derive(Clone, Debug)]
pub struct TrialRow {
    pub base_index: usize,
    pub seed: u64,
    pub cost: u64,
    /// The solved profile is an exact equilibrium of the perturbed game.
    pub verified: bool,
}

#[derive(Clone, Debug)]
pub struct BaseStat {
    pub base_index: usize,
    pub trials: u64,
    pub mean_cost: Rat,
    pub max_cost: u64,
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<TrialRow>,
    pub per_base: Vec<BaseStat>,
}

/// Empirical smoothed-cost measurement: for each base instance, run
/// `trials` independent perturbations (seeds `base_seed, base_seed+1, ...`)
/// and record the solver cost of each.
pub fn smoothed_bench(
    bases: &[BimatrixGame],
    model: &PerturbModel,
    trials: u64,
    base_seed: u64,
    solver: Solver,
) -> Result<BenchReport, SmoothedError> {
    let mut report = BenchReport::default();
    let mut seed = base_seed;
    for (base_index, game) in bases.iter().enumerate() {
        let mut total = rat(0);
        let mut max_cost = 0u64;
        for _ in 0..trials {
            let perturbation = match model.kind {
                PerturbKind::Uniform => perturb(game, model, seed)?,
                PerturbKind::Gaussian => perturb_bounded(game, model, seed)?,
            };
            let (profile, cost) = solve_exact(&perturbation.perturbed, solver)?;
            let verified =
                verify_wsne(&perturbation.perturbed, &profile, &rat(0))?.ok;
            report.rows.push(TrialRow { base_index, seed, cost, verified });
            total += rat(cost as i64);
            max_cost = max_cost.max(cost);
            seed += 1;
        }
        if trials > 0 {
            report.per_base.push(BaseStat {
                base_index,
                trials,
                mean_cost: total / rat(trials as i64),
                max_cost,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{random_game, verify_approx_ne};
    use crate::num::{pow2, ratio};
    use crate::solve::is_degenerate_at;

    fn unit_game(m: usize, n: usize, seed: u64) -> BimatrixGame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_game(m, n, 64, &mut rng);
        // map [0, 1] entries into [-1, 1]
        crate::game::transform_payoffs(&g, &rat(2), &rat(-1)).unwrap()
    }

    #[test]
    fn sigma_validation() {
        assert!(PerturbModel::uniform(rat(0)).is_err());
        assert!(PerturbModel::uniform(rat(1)).is_err());
        assert!(PerturbModel::uniform(ratio(1, 10)).is_ok());
    }

    #[test]
    fn uniform_noise_is_bounded_and_reproducible() {
        let g = unit_game(4, 4, 9);
        let model = PerturbModel::uniform(ratio(1, 10)).unwrap();
        let p1 = perturb(&g, &model, 1234).unwrap();
        let p2 = perturb(&g, &model, 1234).unwrap();
        assert_eq!(p1.perturbed, p2.perturbed);
        let p3 = perturb(&g, &model, 1235).unwrap();
        assert_ne!(p1.perturbed, p3.perturbed);
        for row in p1.noise_a.iter().chain(p1.noise_b.iter()) {
            for s in row {
                assert!(s.abs() <= ratio(1, 10));
            }
        }
    }

    #[test]
    fn tiny_sigma_approaches_identity() {
        let g = unit_game(3, 3, 10);
        let sigma = pow2(-40);
        let model = PerturbModel::uniform(sigma.clone()).unwrap();
        let p = perturb(&g, &model, 7).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((p.perturbed.a(i, j) - g.a(i, j)).abs() <= sigma);
            }
        }
    }

    #[test]
    fn gaussian_sample_variance() {
        let model = PerturbModel::gaussian(ratio(1, 10)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 100_000usize;
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        for _ in 0..n {
            let s = rat_to_f64(&sample_noise(&model, &mut rng));
            sum += s;
            sumsq += s * s;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let want = 0.01f64;
        assert!((var - want).abs() < 0.05 * want, "variance {var} vs {want}");
    }

    #[test]
    fn bounded_gaussian_respects_magnitude() {
        let g = unit_game(3, 3, 11);
        let model = PerturbModel::gaussian(ratio(1, 20)).unwrap();
        let p = perturb_bounded(&g, &model, 99).unwrap();
        for row in p.noise_a.iter().chain(p.noise_b.iter()) {
            for s in row {
                assert!(s.abs() <= ratio(1, 20));
            }
        }
    }

    #[test]
    fn bound_check_constant_matrix_is_tight() {
        let eps = ratio(1, 4);
        let half = &eps / rat(2);
        let s = alloc::vec![alloc::vec![half.clone(); 2]; 2];
        let z = alloc::vec![alloc::vec![rat(0); 2]; 2];
        let p = MixedProfile::uniform(2, 2);
        // x^T S y = eps/2 exactly for the constant matrix: passes on <=
        assert!(perturbation_bound_check(&p, &s, &z, &eps));
        assert!(perturbation_bound_check(&p, &z, &z, &eps));
        let too_big = alloc::vec![alloc::vec![&half + pow2(-30); 2]; 2];
        assert!(!perturbation_bound_check(&p, &too_big, &z, &eps));
    }

    #[test]
    fn smoothed_runs_give_approximate_equilibria() {
        let eps = ratio(1, 5);
        for seed in 0..10u64 {
            let g = unit_game(2, 2, 100 + seed);
            let run =
                smoothed_for_approximation(&g, &eps, Solver::SupportEnumeration, seed).unwrap();
            assert!(verify_approx_ne(&g, &run.profile, &eps).unwrap().ok);
            assert!(perturbation_bound_check(
                &run.profile,
                &run.perturbation.noise_a,
                &run.perturbation.noise_b,
                &eps
            ));
        }
    }

    #[test]
    fn flat_game_perturbs_to_generic() {
        let flat = BimatrixGame::from_ints(&[&[0, 0], &[0, 0]], &[&[0, 0], &[0, 0]]).unwrap();
        let model = PerturbModel::uniform(ratio(1, 2)).unwrap();
        for seed in 0..5u64 {
            let p = perturb(&flat, &model, seed).unwrap();
            let eqs = support_enumeration_with_cap(&p.perturbed, 4).unwrap();
            assert!(!is_degenerate_at(&p.perturbed, &eqs).unwrap(), "seed {seed}");
        }
    }

    #[test]
    fn bench_zero_trials_is_empty() {
        let g = unit_game(2, 2, 5);
        let model = PerturbModel::uniform(ratio(1, 10)).unwrap();
        let report =
            smoothed_bench(&[g], &model, 0, 0, Solver::LemkeHowson { label: 1 }).unwrap();
        assert!(report.rows.is_empty());
        assert!(report.per_base.is_empty());
    }

    #[test]
    fn bench_records_costs_and_seeds() {
        let g1 = unit_game(3, 3, 21);
        let g2 = unit_game(3, 3, 22);
        let model = PerturbModel::uniform(ratio(1, 4)).unwrap();
        let report =
            smoothed_bench(&[g1, g2], &model, 3, 50, Solver::LemkeHowson { label: 1 }).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.per_base.len(), 2);
        assert!(report.rows.iter().all(|r| r.verified));
        assert_eq!(report.rows[0].seed, 50);
        assert_eq!(report.rows[5].seed, 55);
        for stat in &report.per_base {
            assert!(stat.max_cost >= 1);
        }
    }
}
