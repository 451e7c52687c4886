//! Seeded property suites. Each suite checks one statement on generated
//! instances and reports residual quantiles per check; equal
//! [`TrialConfig`]s give byte-identical reports.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{leq, Algebra, Element, Tolerances};
use crate::decompose::{
    central_split, decompose_commutative, decompose_cone_iso, decompose_effect_iso, decompose_sa_iso, rel_dist,
    BlackBoxMap, DecomposeConfig,
};
use crate::effects::{homo_certificate, orth_by_order, spectral_staircase, HomoCertificate};
use crate::error::{Error, Result};
use crate::interval::IntervalKind;
use crate::maps::{JordanSpec, MapNode, OrderIsoExpr};
use crate::projections::{is_projection, orthogonal_direct};
use crate::random::{self, trial_rng, TrialRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub seed: u64,
    pub trials: usize,
    /// Block signatures to draw algebras from; empty means the suite's own
    /// pool.
    #[serde(default)]
    pub algebra_pool: Vec<Vec<usize>>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl TrialConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        TrialConfig {
            seed,
            trials,
            algebra_pool: Vec::new(),
            tolerances: Tolerances::default(),
        }
    }

    fn pool(&self, default: &[&[usize]]) -> Result<Vec<Algebra>> {
        if self.algebra_pool.is_empty() {
            default.iter().map(|b| Algebra::new(b.to_vec())).collect()
        } else {
            self.algebra_pool.iter().map(|b| Algebra::new(b.clone())).collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Homo,
    Orth,
    Orthoiso,
    Staircase,
    PhiFamily,
    GeneralFormula,
    Cone,
    Sa,
    Commutative,
    CentralSplit,
    ExpIso,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Homo,
        Suite::Orth,
        Suite::Orthoiso,
        Suite::Staircase,
        Suite::PhiFamily,
        Suite::GeneralFormula,
        Suite::Cone,
        Suite::Sa,
        Suite::Commutative,
        Suite::CentralSplit,
        Suite::ExpIso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Homo => "homo",
            Suite::Orth => "orth",
            Suite::Orthoiso => "orthoiso",
            Suite::Staircase => "staircase",
            Suite::PhiFamily => "phi_family",
            Suite::GeneralFormula => "general_formula",
            Suite::Cone => "cone",
            Suite::Sa => "sa",
            Suite::Commutative => "commutative",
            Suite::CentralSplit => "central_split",
            Suite::ExpIso => "exp_iso",
        }
    }

    /// The statement the suite checks.
    pub fn statement(self) -> &'static str {
        match self {
            Suite::Homo => "inf{p, q + q⊥/2} = p/(2−t) for projections p, q at angle t",
            Suite::Orth => "pq = 0 iff inf{p, q + q⊥/2} = p/2",
            Suite::Orthoiso => "an effect automorphism fixing 1/2 restricts to an orthoisomorphism of projections",
            Suite::Staircase => {
                "every effect a has orthogonal projections pᵢ and grid values tᵢ with 0 ≤ a − Σtᵢpᵢ ≤ 1/n"
            }
            Suite::PhiFamily => "Φ_T and Φ_α are effect automorphisms with the stated inverses and scalar forms",
            Suite::GeneralFormula => "an effect automorphism with Φ(1/2), 1 − Φ(1/2) invertible is Φ_α⁻¹ ∘ Φ_T ∘ J",
            Suite::Cone => "an order automorphism of the positive cone is a ↦ bJ(a)b",
            Suite::Sa => "an order automorphism of the hermitian part is a ↦ bJ(a)b + c",
            Suite::Commutative => "an order isomorphism of function intervals on finite sets is Φ(f)(y) = f_y(f(μ(y)))",
            Suite::CentralSplit => "an order isomorphism splits along the abelian central summand",
            Suite::ExpIso => "a ↦ J(exp a) is an order isomorphism from the hermitian part onto the strict cone",
        }
    }

    fn stream_base(self) -> u64 {
        (Suite::ALL.iter().position(|&s| s == self).expect("listed") as u64 + 1) << 40
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

impl Quantiles {
    fn of(values: &[f64]) -> Quantiles {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let at = |q: f64| -> f64 {
            if v.is_empty() {
                return 0.0;
            }
            v[((v.len() - 1) as f64 * q).round() as usize]
        };
        Quantiles {
            min: at(0.0),
            p50: at(0.5),
            p90: at(0.9),
            p99: at(0.99),
            max: at(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub residual: f64,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub budget: f64,
    pub count: usize,
    pub failures: usize,
    pub passed: bool,
    pub residuals: Quantiles,
    /// The first few failing trials.
    pub witnesses: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub statement: String,
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub version: String,
    pub config: TrialConfig,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

struct Sample {
    check: String,
    trial: usize,
    residual: f64,
    note: String,
}

fn sample(check: &str, trial: usize, residual: f64) -> Sample {
    Sample {
        check: check.to_string(),
        trial,
        residual,
        note: String::new(),
    }
}

fn failed(checks: &[&str], trial: usize, err: &Error) -> Vec<Sample> {
    checks
        .iter()
        .map(|&check| Sample {
            check: check.to_string(),
            trial,
            residual: f64::INFINITY,
            note: err.to_string(),
        })
        .collect()
}

/// Runs `f` on every trial index, possibly in parallel, and concatenates the
/// samples in trial order.
fn run_trials(n: usize, f: impl Fn(usize) -> Vec<Sample> + Sync) -> Vec<Sample> {
    if n == 0 {
        return Vec::new();
    }
    let threads = std::thread::available_parallelism().map_or(1, |t| t.get()).min(n);
    let chunk = n.div_ceil(threads);
    let mut slots: Vec<Vec<Sample>> = (0..n).map(|_| Vec::new()).collect();
    std::thread::scope(|s| {
        for (c, part) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            s.spawn(move || {
                for (k, slot) in part.iter_mut().enumerate() {
                    *slot = f(c * chunk + k);
                }
            });
        }
    });
    slots.into_iter().flatten().collect()
}

const MAX_WITNESSES: usize = 5;

fn tally(budgets: &[(&str, f64)], samples: Vec<Sample>) -> Vec<CheckReport> {
    budgets
        .iter()
        .map(|&(name, budget)| {
            let mine: Vec<&Sample> = samples.iter().filter(|s| s.check == name).collect();
            let values: Vec<f64> = mine.iter().map(|s| s.residual).collect();
            let bad: Vec<&&Sample> = mine.iter().filter(|s| !(s.residual <= budget)).collect();
            CheckReport {
                name: name.to_string(),
                budget,
                count: values.len(),
                failures: bad.len(),
                passed: bad.is_empty() && !values.is_empty(),
                residuals: Quantiles::of(&values),
                witnesses: bad
                    .iter()
                    .take(MAX_WITNESSES)
                    .map(|s| Failure {
                        trial: s.trial,
                        residual: s.residual,
                        note: s.note.clone(),
                    })
                    .collect(),
            }
        })
        .collect()
}

fn pick<'a, T>(rng: &mut TrialRng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// A pair `a ≤ b` in the interval, built as `b = a + increment` with the
/// increment kept inside the interval: for effects it is compressed by
/// `(1 − a)^{1/2}`.
pub fn comparable_pair(
    rng: &mut TrialRng,
    alg: &Algebra,
    kind: IntervalKind,
    tol: &Tolerances,
) -> Result<(Element, Element)> {
    let a = random::interval_element(rng, alg, kind, 1.0);
    let b = match kind {
        IntervalKind::Effect => {
            let room = a.complement().sqrt_pos(tol)?;
            &a + &random::effect(rng, alg).congruence_by(&room)
        }
        _ => &a + &random::positive(rng, alg, 1.0),
    };
    Ok((a, b))
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderWitness {
    pub a: Element,
    pub b: Element,
    pub source_leq: bool,
    pub image_leq: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderIsoReport {
    pub comparable_pairs: usize,
    pub incomparable_pairs: usize,
    pub extra_pairs: usize,
    pub violations: usize,
    pub errors: usize,
    pub witnesses: Vec<OrderWitness>,
}

impl OrderIsoReport {
    pub fn passes(&self) -> bool {
        self.violations == 0 && self.errors == 0
    }
}

/// Tests `a ≤ b ⟺ Φ(a) ≤ Φ(b)` in both directions on `pairs` comparable
/// pairs, `pairs` independent pairs and the supplied extra pairs.
pub fn check_order_iso(
    phi: &BlackBoxMap,
    pairs: usize,
    extra: &[(Element, Element)],
    rng: &mut TrialRng,
) -> OrderIsoReport {
    let tol = *phi.tolerances();
    let mut report = OrderIsoReport {
        comparable_pairs: 0,
        incomparable_pairs: 0,
        extra_pairs: extra.len(),
        violations: 0,
        errors: 0,
        witnesses: Vec::new(),
    };
    let mut candidates: Vec<(Element, Element)> = Vec::with_capacity(2 * pairs + extra.len());
    for _ in 0..pairs {
        match comparable_pair(rng, phi.source(), phi.kind(), &tol) {
            Ok(p) => {
                candidates.push(p);
                report.comparable_pairs += 1;
            }
            Err(_) => report.errors += 1,
        }
    }
    for _ in 0..pairs {
        let a = random::interval_element(rng, phi.source(), phi.kind(), 1.0);
        let b = random::interval_element(rng, phi.source(), phi.kind(), 1.0);
        candidates.push((a, b));
        report.incomparable_pairs += 1;
    }
    candidates.extend(extra.iter().cloned());
    for (a, b) in candidates {
        let outcome = (|| -> Result<[(bool, bool); 2]> {
            let (fa, fb) = (phi.eval(&a)?, phi.eval(&b)?);
            Ok([
                (leq(&a, &b, &tol)?, leq(&fa, &fb, &tol)?),
                (leq(&b, &a, &tol)?, leq(&fb, &fa, &tol)?),
            ])
        })();
        match outcome {
            Ok(dirs) => {
                for (k, (src, img)) in dirs.into_iter().enumerate() {
                    if src != img {
                        report.violations += 1;
                        if report.witnesses.len() < 3 {
                            let (x, y) = if k == 0 { (&a, &b) } else { (&b, &a) };
                            report.witnesses.push(OrderWitness {
                                a: x.clone(),
                                b: y.clone(),
                                source_leq: src,
                                image_leq: img,
                            });
                        }
                    }
                }
            }
            Err(_) => report.errors += 1,
        }
    }
    report
}

/// Bounded grid search in `M₂` for effects `a ≤ b` with `a² ≰ b²`:
/// `a = x·e₁e₁ᴴ`, `b = a + y·vvᴴ` with `v = (cos θ, sin θ)`.
pub fn square_counterexample(tol: &Tolerances) -> Option<(Element, Element)> {
    let alg = Algebra::new(vec![2]).expect("M2");
    for i in 1..10 {
        for j in 1..10 {
            for k in 1..16 {
                let (x, y) = (i as f64 / 10.0, j as f64 / 10.0);
                let th = k as f64 * std::f64::consts::PI / 32.0;
                let (c, s) = (th.cos(), th.sin());
                let a = Element::real_symmetric(&alg, &[vec![vec![x, 0.0], vec![0.0, 0.0]]]).ok()?;
                let b = Element::real_symmetric(
                    &alg,
                    &[vec![vec![x + y * c * c, y * c * s], vec![y * c * s, y * s * s]]],
                )
                .ok()?;
                if !IntervalKind::Effect.contains(&b, tol) {
                    continue;
                }
                if !leq(
                    &(&a * &a).to_hermitian(tol).ok()?,
                    &(&b * &b).to_hermitian(tol).ok()?,
                    tol,
                )
                .ok()?
                {
                    return Some((a, b));
                }
            }
        }
    }
    None
}

/// Strictly increasing piecewise-linear function with linear extension past
/// the outer knots.
#[derive(Clone, Debug)]
pub struct MonotonePl {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl MonotonePl {
    pub fn eval(&self, t: f64) -> f64 {
        let (xs, ys) = (&self.xs, &self.ys);
        let k = match xs.iter().position(|&x| x > t) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => xs.len() - 2,
        }
        .min(xs.len() - 2);
        let w = (t - xs[k]) / (xs[k + 1] - xs[k]);
        ys[k] + w * (ys[k + 1] - ys[k])
    }

    /// At most `max_knots` knots on the grid `lo + (hi−lo)·i/m`, slopes in
    /// `[0.1, 3]`; effect functions are normalized to fix 0 and 1, cone
    /// functions fix 0.
    pub fn random(rng: &mut TrialRng, kind: IntervalKind, lo: f64, hi: f64, m: usize, max_knots: usize) -> MonotonePl {
        let k = rng.random_range(2..=max_knots.max(2).min(m + 1));
        let mut idx: Vec<usize> = vec![0, m];
        while idx.len() < k {
            let i = rng.random_range(1..m);
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        idx.sort_unstable();
        let xs: Vec<f64> = idx.iter().map(|&i| lo + (hi - lo) * i as f64 / m as f64).collect();
        let mut ys = vec![match kind {
            IntervalKind::Sa => rng.random_range(-1.0..1.0),
            _ => 0.0,
        }];
        for w in xs.windows(2) {
            let slope = rng.random_range(0.1..3.0);
            ys.push(ys.last().expect("nonempty") + slope * (w[1] - w[0]));
        }
        if kind == IntervalKind::Effect {
            let top = *ys.last().expect("nonempty");
            for y in ys.iter_mut() {
                *y /= top;
            }
            *ys.last_mut().expect("nonempty") = 1.0;
        }
        MonotonePl { xs, ys }
    }
}

/// `Φ(f)(y) = g_y(f(μ(y)))` on the diagonal algebra with `n` points.
pub fn product_form_map(
    mu: Vec<usize>,
    fs: Vec<MonotonePl>,
    kind: IntervalKind,
    tol: &Tolerances,
) -> Result<BlackBoxMap> {
    let alg = Algebra::new(vec![1; mu.len()])?;
    BlackBoxMap::new(
        alg.clone(),
        alg,
        kind,
        kind,
        move |a| {
            let v: Vec<f64> = a.blocks().iter().map(|b| b[(0, 0)].re).collect();
            let out: Vec<Vec<f64>> = (0..v.len()).map(|y| vec![fs[y].eval(v[mu[y]])]).collect();
            Element::diagonal(a.algebra(), &out)
        },
        tol,
    )
}

fn random_permutation(rng: &mut TrialRng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

fn compose_parts(expr: &OrderIsoExpr) -> &[MapNode] {
    match &expr.map {
        MapNode::Compose { maps } => maps,
        other => std::slice::from_ref(other),
    }
}

fn congruence_factor(expr: &OrderIsoExpr) -> Option<&Element> {
    compose_parts(expr).iter().find_map(|m| match m {
        MapNode::Congruence { b } => Some(b),
        _ => None,
    })
}

fn decompose_cfg(cfg: &TrialConfig, stream: u64) -> DecomposeConfig {
    DecomposeConfig {
        seed: cfg.seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        ..DecomposeConfig::default()
    }
}

fn suite_homo(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 2] = [("certificate", HomoCertificate::BUDGET), ("bisection", 1e-8)];
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[1], &[2], &[1, 1]])?;
    let scalar = Algebra::new(vec![1])?;
    let grid = 101;
    let samples = run_trials(grid + cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, Suite::Homo.stream_base() + i as u64);
        let (t, base) = if i < grid {
            (i as f64 / 100.0, scalar.clone())
        } else {
            (rng.random::<f64>(), pick(&mut rng, &pool).clone())
        };
        match homo_certificate(t, &base, 8, &mut rng, &tol) {
            Ok(c) => vec![
                sample("certificate", i, c.max_residual()),
                sample("bisection", i, (c.bisection_coefficient - c.coefficient).abs()),
            ],
            Err(e) => failed(&["certificate", "bisection"], i, &e),
        }
    });
    Ok(tally(&CHECKS, samples))
}

fn suite_orth(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[4, 2, 1], &[2, 2]])?;
    let names: Vec<String> = pool.iter().map(|a| format!("agreement on {a}")).collect();
    let budgets: Vec<(&str, f64)> = names.iter().map(|n| (n.as_str(), 0.0)).collect();
    let samples = run_trials(pool.len() * cfg.trials, |i| {
        let (which, _) = (i / cfg.trials.max(1), i % cfg.trials.max(1));
        let alg = &pool[which];
        let mut rng = trial_rng(cfg.seed, Suite::Orth.stream_base() + i as u64);
        let p = random::projection_any_rank(&mut rng, alg);
        let q = if rng.random_bool(0.5) {
            random::projection_orthogonal_to(&mut rng, &p)
        } else {
            random::projection_any_rank(&mut rng, alg)
        };
        match orth_by_order(&p, &q, &tol).and_then(|x| Ok((x, orthogonal_direct(&p, &q, &tol)?))) {
            Ok((x, y)) => vec![sample(&names[which], i, if x == y { 0.0 } else { 1.0 })],
            Err(e) => failed(&[&names[which]], i, &e),
        }
    });
    Ok(tally(&budgets, samples))
}

fn suite_orthoiso(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 3] = [
        ("fixes half", 1e-12),
        ("orthogonality", 0.0),
        ("projection image", 1e-9),
    ];
    const PAIRS: usize = 300;
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[2], &[3], &[1, 2], &[2, 2], &[1, 1, 2]])?;
    let samples = run_trials(cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, Suite::Orthoiso.stream_base() + i as u64);
        let alg = pick(&mut rng, &pool).clone();
        let run = |rng: &mut TrialRng| -> Result<Vec<Sample>> {
            let spec = random::jordan_spec(rng, &alg, &alg)?;
            let expr = OrderIsoExpr::new(MapNode::Jordan { spec }, IntervalKind::Effect)?;
            let half = expr.evaluate(&alg.scalar(0.5), &tol)?.dist(&alg.scalar(0.5));
            let (mut flips, mut defect) = (0.0f64, 0.0f64);
            for s in 0..PAIRS {
                let p = random::projection_any_rank(rng, &alg);
                let q = if s % 2 == 0 {
                    random::projection_orthogonal_to(rng, &p)
                } else {
                    random::projection_any_rank(rng, &alg)
                };
                let (fp, fq) = (expr.evaluate(&p, &tol)?, expr.evaluate(&q, &tol)?);
                if orthogonal_direct(&p, &q, &tol)? != orthogonal_direct(&fp, &fq, &tol)? {
                    flips += 1.0;
                }
                for x in [&fp, &fq] {
                    defect = defect.max((&(x * x) - x).opnorm());
                }
                if !is_projection(&fp, &tol) {
                    defect = defect.max(f64::INFINITY);
                }
            }
            Ok(vec![
                sample("fixes half", i, half),
                sample("orthogonality", i, flips),
                sample("projection image", i, defect),
            ])
        };
        run(&mut rng).unwrap_or_else(|e| failed(&["fixes half", "orthogonality", "projection image"], i, &e))
    });
    Ok(tally(&CHECKS, samples))
}

fn suite_staircase(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 2] = [("bounds", 1e-9), ("refinement", 1e-9)];
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[1], &[2], &[3], &[1, 2], &[2, 2]])?;
    let samples = run_trials(cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, Suite::Staircase.stream_base() + i as u64);
        let alg = pick(&mut rng, &pool).clone();
        let a = random::effect(&mut rng, &alg);
        let run = || -> Result<Vec<Sample>> {
            let mut bounds = 0.0f64;
            let mut sums = Vec::new();
            for n in [2u32, 4, 16] {
                let st = spectral_staircase(&a, n, &tol)?;
                let sum = st.sum(&alg);
                let rest = &a - &sum;
                let lower = (-rest.lambda_min(&tol)?).max(0.0);
                let upper = (rest.lambda_max(&tol)? - 1.0 / n as f64).max(0.0);
                bounds = bounds.max(lower).max(upper);
                sums.push(sum);
            }
            let mut refinement = 0.0f64;
            for w in sums.windows(2) {
                refinement = refinement.max((-(&w[1] - &w[0]).lambda_min(&tol)?).max(0.0));
            }
            Ok(vec![sample("bounds", i, bounds), sample("refinement", i, refinement)])
        };
        run().unwrap_or_else(|e| failed(&["bounds", "refinement"], i, &e))
    });
    Ok(tally(&CHECKS, samples))
}

fn suite_phi_family(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 6] = [
        ("phi_T roundtrip", 1e-8),
        ("phi_alpha roundtrip", 1e-8),
        ("phi_T(1/2) closed form", 1e-12),
        ("phi_T scalar grid", 1e-12),
        ("phi_T_inv(1/2) = 1/n", 1e-12),
        ("composite at 1/2", 1e-12),
    ];
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[1], &[2], &[3], &[1, 2], &[2, 2]])?;
    let scalar = Algebra::new(vec![1])?;
    let at = |node: MapNode, x: f64| -> Result<f64> { Ok(node.apply(&scalar.scalar(x), &tol)?.block(0)[(0, 0)].re) };

    let mut samples = Vec::new();
    for n in 3..=10usize {
        let t = scalar.scalar(((n - 2) as f64).sqrt());
        match at(MapNode::PhiTInv { t }, 0.5) {
            Ok(v) => samples.push(sample("phi_T_inv(1/2) = 1/n", n, (v - 1.0 / n as f64).abs())),
            Err(e) => samples.extend(failed(&["phi_T_inv(1/2) = 1/n"], n, &e)),
        }
    }
    samples.extend(run_trials(cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, Suite::PhiFamily.stream_base() + i as u64);
        let alg = pick(&mut rng, &pool).clone();
        let run = |rng: &mut TrialRng| -> Result<Vec<Sample>> {
            let t = random::pos_log_uniform(rng, &alg, 0.2, 5.0);
            let alpha = rng.random_range(0.1..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let a = random::effect(rng, &alg);
            let (fwd, inv) = (MapNode::PhiT { t: t.clone() }, MapNode::PhiTInv { t });
            let rt_t = fwd
                .apply(&inv.apply(&a, &tol)?, &tol)?
                .dist(&a)
                .max(inv.apply(&fwd.apply(&a, &tol)?, &tol)?.dist(&a));
            let (pa, pai) = (MapNode::PhiAlpha { alpha }, MapNode::PhiAlphaInv { alpha });
            let rt_a = pa
                .apply(&pai.apply(&a, &tol)?, &tol)?
                .dist(&a)
                .max(pai.apply(&pa.apply(&a, &tol)?, &tol)?.dist(&a));

            let tv = (rng.random_range(-1.5f64..1.5)).exp();
            let t2 = tv * tv;
            let half = (at(MapNode::PhiT { t: scalar.scalar(tv) }, 0.5)? - (1.0 + t2) / (2.0 + t2)).abs();
            let mut grid = 0.0f64;
            for k in 0..=100 {
                let x = k as f64 / 100.0;
                let v = at(MapNode::PhiT { t: scalar.scalar(tv) }, x)?;
                grid = grid.max((v - x * (1.0 + t2) / (1.0 + x * t2)).abs());
            }
            let comp = compose_at_half(alpha, tv, &scalar, &tol)?;
            let expect = 1.0 - 1.0 / (1.0 + (t2 + 1.0) / (1.0 + alpha * alpha));
            Ok(vec![
                sample("phi_T roundtrip", i, rt_t),
                sample("phi_alpha roundtrip", i, rt_a),
                sample("phi_T(1/2) closed form", i, half),
                sample("phi_T scalar grid", i, grid),
                sample("composite at 1/2", i, (comp - expect).abs()),
            ])
        };
        run(&mut rng).unwrap_or_else(|e| {
            failed(
                &[
                    "phi_T roundtrip",
                    "phi_alpha roundtrip",
                    "phi_T(1/2) closed form",
                    "phi_T scalar grid",
                    "composite at 1/2",
                ],
                i,
                &e,
            )
        })
    }));
    Ok(tally(&CHECKS, samples))
}

fn compose_at_half(alpha: f64, t: f64, scalar: &Algebra, tol: &Tolerances) -> Result<f64> {
    let expr = OrderIsoExpr::new(
        MapNode::Compose {
            maps: vec![
                MapNode::PhiAlphaInv { alpha },
                MapNode::PhiT { t: scalar.scalar(t) },
                MapNode::Jordan {
                    spec: JordanSpec::identity(scalar),
                },
            ],
        },
        IntervalKind::Effect,
    )?;
    Ok(expr.evaluate(&scalar.scalar(0.5), tol)?.block(0)[(0, 0)].re)
}

const VALIDATION: usize = 100;

fn suite_general_formula(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 4] = [
        ("reconstruction", 1e-6),
        ("linearity", 1e-7),
        ("jordan", 1e-7),
        ("order preserved", 0.0),
    ];
    let names = ["reconstruction", "linearity", "jordan", "order preserved"];
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[2], &[3], &[2, 2], &[1, 2], &[2, 3]])?;
    let samples = run_trials(cfg.trials, |i| {
        let stream = Suite::GeneralFormula.stream_base() + i as u64;
        let mut rng = trial_rng(cfg.seed, stream);
        let alg = pick(&mut rng, &pool).clone();
        let run = |rng: &mut TrialRng| -> Result<Vec<Sample>> {
            let expr = random::order_iso_expr(rng, &alg, IntervalKind::Effect)?;
            let phi = BlackBoxMap::from_expr(&expr, &alg, &tol)?;
            let d = decompose_effect_iso(&phi, &decompose_cfg(cfg, stream))?;
            let mut dev = 0.0f64;
            for _ in 0..VALIDATION {
                let a = random::effect(rng, &alg);
                dev = dev.max(d.recompose(&a, &tol)?.dist(&phi.eval(&a)?));
            }
            let order = check_order_iso(&phi, 10, &[], rng);
            Ok(vec![
                sample("reconstruction", i, dev),
                sample("linearity", i, d.linear.superposition_residual),
                sample("jordan", i, d.linear.jordan_residual),
                sample("order preserved", i, (order.violations + order.errors) as f64),
            ])
        };
        run(&mut rng).unwrap_or_else(|e| failed(&names, i, &e))
    });
    Ok(tally(&CHECKS, samples))
}

fn suite_cone(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 4] = [
        ("b squared", 1e-8),
        ("b recovered", 1e-8),
        ("reconstruction", 1e-6),
        ("order preserved", 0.0),
    ];
    let names = ["b squared", "b recovered", "reconstruction", "order preserved"];
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[1], &[2], &[3], &[1, 2], &[2, 2]])?;
    let samples = run_trials(cfg.trials, |i| {
        let stream = Suite::Cone.stream_base() + i as u64;
        let mut rng = trial_rng(cfg.seed, stream);
        let alg = pick(&mut rng, &pool).clone();
        let kind = if i % 2 == 0 {
            IntervalKind::Cone
        } else {
            IntervalKind::ConeStrict
        };
        let run = |rng: &mut TrialRng| -> Result<Vec<Sample>> {
            let expr = random::order_iso_expr(rng, &alg, kind)?;
            let b = congruence_factor(&expr).expect("generated with a congruence").clone();
            let phi = BlackBoxMap::from_expr(&expr, &alg, &tol)?;
            let d = decompose_cone_iso(&phi, &decompose_cfg(cfg, stream))?;
            let one = phi.eval(&alg.unit())?;
            let mut dev = 0.0f64;
            for _ in 0..VALIDATION {
                let a = random::interval_element(rng, &alg, kind, 2.0);
                dev = dev.max(rel_dist(&d.recompose(&a)?, &phi.eval(&a)?));
            }
            let order = check_order_iso(&phi, 10, &[], rng);
            Ok(vec![
                sample("b squared", i, (&d.b * &d.b).dist(&one)),
                sample("b recovered", i, d.b.dist(&b)),
                sample("reconstruction", i, dev),
                sample("order preserved", i, (order.violations + order.errors) as f64),
            ])
        };
        run(&mut rng).unwrap_or_else(|e| failed(&names, i, &e))
    });
    Ok(tally(&CHECKS, samples))
}

fn suite_sa(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 5] = [
        ("c equals image of 0", 0.0),
        ("b squared", 1e-8),
        ("b recovered", 1e-8),
        ("reconstruction", 1e-6),
        ("order preserved", 0.0),
    ];
    let names = [
        "c equals image of 0",
        "b squared",
        "b recovered",
        "reconstruction",
        "order preserved",
    ];
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[1], &[2], &[3], &[1, 2], &[2, 2]])?;
    let samples = run_trials(cfg.trials, |i| {
        let stream = Suite::Sa.stream_base() + i as u64;
        let mut rng = trial_rng(cfg.seed, stream);
        let alg = pick(&mut rng, &pool).clone();
        let run = |rng: &mut TrialRng| -> Result<Vec<Sample>> {
            let expr = random::order_iso_expr(rng, &alg, IntervalKind::Sa)?;
            let b = congruence_factor(&expr).expect("generated with a congruence").clone();
            let phi = BlackBoxMap::from_expr(&expr, &alg, &tol)?;
            let d = decompose_sa_iso(&phi, &decompose_cfg(cfg, stream))?;
            let zero = phi.eval(&alg.zero())?;
            let exact = if d.c == zero {
                0.0
            } else {
                d.c.dist(&zero).max(f64::MIN_POSITIVE)
            };
            // The cone part a ↦ Φ(0) − Φ(−a) sends 1 to b².
            let cone_one = &zero - &phi.eval(&alg.scalar(-1.0))?;
            let mut dev = 0.0f64;
            for _ in 0..VALIDATION {
                let a = random::hermitian(rng, &alg, 2.0);
                dev = dev.max(rel_dist(&d.recompose(&a)?, &phi.eval(&a)?));
            }
            let order = check_order_iso(&phi, 10, &[], rng);
            Ok(vec![
                sample("c equals image of 0", i, exact),
                sample("b squared", i, (&d.b * &d.b).dist(&cone_one)),
                sample("b recovered", i, d.b.dist(&b)),
                sample("reconstruction", i, dev),
                sample("order preserved", i, (order.violations + order.errors) as f64),
            ])
        };
        run(&mut rng).unwrap_or_else(|e| failed(&names, i, &e))
    });
    Ok(tally(&CHECKS, samples))
}

/// Grid resolution for the commutative suite.
pub const COMM_GRID: usize = 64;

fn suite_commutative(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 3] = [("mu exact", 0.0), ("knot values", 1e-9), ("product form", 1e-6)];
    let names = ["mu exact", "knot values", "product form"];
    let tol = cfg.tolerances;
    let samples = run_trials(cfg.trials, |i| {
        let stream = Suite::Commutative.stream_base() + i as u64;
        let mut rng = trial_rng(cfg.seed, stream);
        let kind = [IntervalKind::Effect, IntervalKind::Cone, IntervalKind::Sa][i % 3];
        let run = |rng: &mut TrialRng| -> Result<Vec<Sample>> {
            let n = rng.random_range(2..=10);
            let (lo, hi) = crate::decompose::grid_bounds(kind, 1.0)?;
            let mu = random_permutation(rng, n);
            let fs: Vec<MonotonePl> = (0..n)
                .map(|_| MonotonePl::random(rng, kind, lo, hi, COMM_GRID, 8))
                .collect();
            let phi = product_form_map(mu.clone(), fs.clone(), kind, &tol)?;
            let d = decompose_commutative(&phi, COMM_GRID, 1.0, &decompose_cfg(cfg, stream))?;
            let mut knots = 0.0f64;
            for (y, f) in fs.iter().enumerate() {
                for (&x, &v) in f.xs.iter().zip(&f.ys) {
                    let k = ((x - lo) / (hi - lo) * COMM_GRID as f64).round() as usize;
                    knots = knots.max((d.tables[y][k] - v).abs());
                }
            }
            Ok(vec![
                sample("mu exact", i, if d.mu == mu { 0.0 } else { 1.0 }),
                sample("knot values", i, knots),
                sample("product form", i, d.residual),
            ])
        };
        run(&mut rng).unwrap_or_else(|e| failed(&names, i, &e))
    });
    Ok(tally(&CHECKS, samples))
}

fn suite_central_split(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 3] = [
        ("well-definedness", 1e-8),
        ("abelian factor", 1e-6),
        ("non-abelian factor", 1e-6),
    ];
    let names = ["well-definedness", "abelian factor", "non-abelian factor"];
    let tol = cfg.tolerances;
    let pool = cfg.pool(&[&[1, 2], &[1, 1, 3]])?;
    let samples = run_trials(cfg.trials, |i| {
        let mut rng = trial_rng(cfg.seed, Suite::CentralSplit.stream_base() + i as u64);
        let alg = pool[i % pool.len()].clone();
        let run = |rng: &mut TrialRng| -> Result<Vec<Sample>> {
            let ab: Vec<usize> = (0..alg.num_blocks()).filter(|&k| alg.blocks()[k] == 1).collect();
            let rest: Vec<usize> = (0..alg.num_blocks()).filter(|&k| alg.blocks()[k] > 1).collect();
            let mu = random_permutation(rng, ab.len());
            let fs: Vec<MonotonePl> = (0..ab.len())
                .map(|_| MonotonePl::random(rng, IntervalKind::Effect, 0.0, 1.0, COMM_GRID, 8))
                .collect();
            let scramble = product_form_map(mu, fs, IntervalKind::Effect, &tol)?;
            let rest_alg = alg.sub_algebra(&rest)?;
            let expr = random::order_iso_expr(rng, &rest_alg, IntervalKind::Effect)?;
            let (s2, e2, ab2, rest2) = (scramble.clone(), expr.clone(), ab.clone(), rest.clone());
            let phi = BlackBoxMap::new(
                alg.clone(),
                alg.clone(),
                IntervalKind::Effect,
                IntervalKind::Effect,
                move |a| {
                    let x = s2.eval(&a.restrict(&ab2)?)?;
                    let y = e2.evaluate(&a.restrict(&rest2)?, &tol)?;
                    a.with_blocks_from(&ab2, &x)?.with_blocks_from(&rest2, &y)
                },
                &tol,
            )?;
            let split = central_split(&phi, 20, rng)?;
            let (f1, f2) = (
                split
                    .abelian
                    .ok_or_else(|| Error::Precondition("missing abelian factor".into()))?,
                split
                    .rest
                    .ok_or_else(|| Error::Precondition("missing non-abelian factor".into()))?,
            );
            let (mut d1, mut d2) = (0.0f64, 0.0f64);
            for _ in 0..20 {
                let x = random::effect(rng, f1.source());
                d1 = d1.max(f1.eval(&x)?.dist(&scramble.eval(&x)?));
                let y = random::effect(rng, f2.source());
                d2 = d2.max(f2.eval(&y)?.dist(&expr.evaluate(&y, &tol)?));
            }
            Ok(vec![
                sample("well-definedness", i, split.residual),
                sample("abelian factor", i, d1),
                sample("non-abelian factor", i, d2),
            ])
        };
        run(&mut rng).unwrap_or_else(|e| failed(&names, i, &e))
    });
    Ok(tally(&CHECKS, samples))
}

fn suite_exp_iso(cfg: &TrialConfig) -> Result<Vec<CheckReport>> {
    const CHECKS: [(&str, f64); 5] = [
        ("order preserved", 0.0),
        ("roundtrip", 1e-12),
        ("exp tables", 1e-12),
        ("mu matches permutation", 0.0),
        ("noncommutative rejected", 0.0),
    ];
    let names = ["order preserved", "roundtrip", "exp tables", "mu matches permutation"];
    let tol = cfg.tolerances;
    let m2 = Algebra::new(vec![2])?;
    let rejected = MapNode::ExpIso {
        spec: JordanSpec::identity(&m2),
    }
    .apply(&m2.zero(), &tol);
    let mut samples = vec![sample(
        "noncommutative rejected",
        0,
        if matches!(rejected, Err(Error::Precondition(_))) {
            0.0
        } else {
            1.0
        },
    )];
    samples.extend(run_trials(cfg.trials, |i| {
        let stream = Suite::ExpIso.stream_base() + i as u64;
        let mut rng = trial_rng(cfg.seed, stream);
        let run = |rng: &mut TrialRng| -> Result<Vec<Sample>> {
            let n = rng.random_range(1..=6);
            let alg = Algebra::new(vec![1; n])?;
            let spec = random::jordan_spec(rng, &alg, &alg)?;
            let expr = OrderIsoExpr::new(MapNode::ExpIso { spec: spec.clone() }, IntervalKind::Sa)?;
            let phi = BlackBoxMap::from_expr(&expr, &alg, &tol)?;
            let order = check_order_iso(&phi, 10, &[], rng);
            let mut roundtrip = 0.0f64;
            for _ in 0..10 {
                let a = random::hermitian(rng, &alg, 2.0);
                roundtrip = roundtrip.max(rel_dist(&phi.eval_inverse(&phi.eval(&a)?)?, &a));
            }
            let d = decompose_commutative(&phi, 16, 1.0, &decompose_cfg(cfg, stream))?;
            let mut tables = 0.0f64;
            for table in &d.tables {
                for (&t, &v) in d.grid.iter().zip(table) {
                    tables = tables.max((v - t.exp()).abs() / t.exp());
                }
            }
            let mut expected_mu = vec![0; n];
            for (x, &y) in spec.permutation().iter().enumerate() {
                expected_mu[y] = x;
            }
            Ok(vec![
                sample("order preserved", i, (order.violations + order.errors) as f64),
                sample("roundtrip", i, roundtrip),
                sample("exp tables", i, tables),
                sample("mu matches permutation", i, if d.mu == expected_mu { 0.0 } else { 1.0 }),
            ])
        };
        run(&mut rng).unwrap_or_else(|e| failed(&names, i, &e))
    }));
    Ok(tally(&CHECKS, samples))
}

pub fn run_suite(suite: Suite, cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.tolerances.validate()?;
    let checks = match suite {
        Suite::Homo => suite_homo(cfg),
        Suite::Orth => suite_orth(cfg),
        Suite::Orthoiso => suite_orthoiso(cfg),
        Suite::Staircase => suite_staircase(cfg),
        Suite::PhiFamily => suite_phi_family(cfg),
        Suite::GeneralFormula => suite_general_formula(cfg),
        Suite::Cone => suite_cone(cfg),
        Suite::Sa => suite_sa(cfg),
        Suite::Commutative => suite_commutative(cfg),
        Suite::CentralSplit => suite_central_split(cfg),
        Suite::ExpIso => suite_exp_iso(cfg),
    }?;
    Ok(SuiteReport {
        suite,
        statement: suite.statement().to_string(),
        seed: cfg.seed,
        trials: cfg.trials,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Runs one suite by name, or every suite for `"all"`.
pub fn run(name: &str, cfg: &TrialConfig) -> Result<FuzzReport> {
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![name.parse()?]
    };
    let reports = suites
        .into_iter()
        .map(|s| run_suite(s, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(FuzzReport {
        version: "v1".into(),
        config: cfg.clone(),
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn identity_passes_order_check() {
        let alg = Algebra::new(vec![2, 1]).unwrap();
        for kind in IntervalKind::ALL {
            let id = BlackBoxMap::new(alg.clone(), alg.clone(), kind, kind, |a| Ok(a.clone()), &tol()).unwrap();
            let r = check_order_iso(&id, 20, &[], &mut trial_rng(1, 0));
            assert!(r.passes(), "{kind}: {r:?}");
            assert_eq!(r.comparable_pairs, 20);
        }
    }

    #[test]
    fn canonical_expression_passes_order_check() {
        let alg = Algebra::new(vec![2, 2]).unwrap();
        let mut rng = trial_rng(2, 0);
        let expr = random::order_iso_expr(&mut rng, &alg, IntervalKind::Effect).unwrap();
        let phi = BlackBoxMap::from_expr(&expr, &alg, &tol()).unwrap();
        assert!(check_order_iso(&phi, 30, &[], &mut rng).passes());
    }

    #[test]
    fn squaring_fails_order_check() {
        let (a, b) = square_counterexample(&tol()).expect("a 2x2 witness exists");
        assert!(leq(&a, &b, &tol()).unwrap());
        let alg = a.algebra().clone();
        let sq = BlackBoxMap::new(
            alg.clone(),
            alg,
            IntervalKind::Effect,
            IntervalKind::Effect,
            |a| (a * a).to_hermitian(&Tolerances::default()),
            &tol(),
        )
        .unwrap();
        let r = check_order_iso(&sq, 0, &[(a, b)], &mut trial_rng(3, 0));
        assert!(!r.passes());
        assert_eq!(r.witnesses.len(), 1);
    }

    #[test]
    fn comparable_pairs_are_comparable() {
        let alg = Algebra::new(vec![3]).unwrap();
        let mut rng = trial_rng(4, 0);
        for kind in IntervalKind::ALL {
            for _ in 0..10 {
                let (a, b) = comparable_pair(&mut rng, &alg, kind, &tol()).unwrap();
                assert!(leq(&a, &b, &tol()).unwrap());
                assert!(kind.contains(&b, &tol()));
            }
        }
    }

    #[test]
    fn monotone_pl_generator() {
        let mut rng = trial_rng(5, 0);
        for kind in [IntervalKind::Effect, IntervalKind::Cone, IntervalKind::Sa] {
            let (lo, hi) = crate::decompose::grid_bounds(kind, 1.0).unwrap();
            let f = MonotonePl::random(&mut rng, kind, lo, hi, 64, 8);
            assert!(f.xs.len() <= 8);
            assert!(f.ys.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(f.eval(f.xs[1]), f.ys[1]);
            if kind == IntervalKind::Effect {
                assert_eq!((f.eval(0.0), f.eval(1.0)), (0.0, 1.0));
            }
            assert!(f.eval(hi + 1.0) > f.eval(hi));
        }
    }

    #[test]
    fn suites_are_deterministic_and_pass() {
        let cfg = TrialConfig::new(7, 4);
        for suite in Suite::ALL {
            let r1 = run_suite(suite, &cfg).unwrap();
            let r2 = run_suite(suite, &cfg).unwrap();
            assert_eq!(r1, r2);
            assert!(r1.passed, "{suite}: {:#?}", r1.checks);
        }
        assert!(matches!(run("nope", &cfg), Err(Error::UnknownSuite(_))));
    }
}
