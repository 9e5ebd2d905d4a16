//! Real-coded genetic algorithm whose crossover and mutation rates are
//! steered by a small Mamdani fuzzy controller.
//!
//! Crossover acts as positive feedback (exploitation), mutation as negative
//! feedback (exploration). The controller reads population diversity and
//! stagnation, both in [0, 1], and raises the mutation rate as the
//! population collapses or stalls, and the crossover rate while it is
//! diverse and still improving.
//!
//! Membership functions (inputs and outputs alike) are triangles on [0, 1]:
//! Low (-0.5, 0, 0.5), Medium (0, 0.5, 1), High (0.5, 1, 1.5).
//!
//! | diversity \ stagnation | Low        | Medium     | High       |
//! |------------------------|------------|------------|------------|
//! | Low                    | pc L, pm H | pc L, pm H | pc L, pm H |
//! | Medium                 | pc M, pm M | pc M, pm M | pc L, pm H |
//! | High                   | pc H, pm L | pc H, pm M | pc M, pm H |
//!
//! Inference is sum-product: rule strength is the product of the two input
//! memberships, each output set is scaled by its summed rule strengths, the
//! scaled sets are added, and the crisp value is the exact centroid of that
//! sum over [0, 1], mapped linearly onto the configured rate bounds. The
//! input memberships form a partition of unity and every rule row and column
//! is ordered, so the outputs move monotonically with both inputs (min/max
//! clipping dips between grid nodes where two input sets cross).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::ResultCache;
use crate::em::{Mat4, SolverConfig};
use crate::geometry::PatchDesign;
use crate::simulation::{simulate, SceneConfig};

/// Cost assigned to designs that cannot be simulated.
pub const PENALTY_COST: f64 = 10.0;

pub const GENE_NAMES: [&str; 5] = ["w", "l", "ins", "h1", "h2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Default for GeneBounds {
    /// W, L in [7, 14] mm, ins in [0, 5] mm, h1, h2 in [0, 2] mm.
    fn default() -> Self {
        GeneBounds { lo: vec![7.0, 7.0, 0.0, 0.0, 0.0], hi: vec![14.0, 14.0, 5.0, 2.0, 2.0] }
    }
}

impl GeneBounds {
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        GeneBounds { lo: vec![lo; dim], hi: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.lo.len() != self.hi.len() || self.lo.is_empty() {
            return Err("optimizer.bounds: lo and hi must be non-empty and of equal length".into());
        }
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(l < h) || !l.is_finite() || !h.is_finite() {
                return Err(format!("optimizer.bounds: gene {i} needs lo < hi (got {l}, {h})"));
            }
        }
        Ok(())
    }

    pub fn clip(&self, genes: &mut [f64]) {
        for (i, g) in genes.iter_mut().enumerate() {
            *g = g.clamp(self.lo[i], self.hi[i]);
        }
    }

    pub fn contains(&self, genes: &[f64]) -> bool {
        genes.iter().enumerate().all(|(i, &g)| g >= self.lo[i] && g <= self.hi[i])
    }
}

pub fn design_to_genes(d: &PatchDesign) -> Vec<f64> {
    vec![d.w, d.l, d.ins, d.h1, d.h2]
}

pub fn genes_to_design(g: &[f64]) -> PatchDesign {
    PatchDesign { w: g[0], l: g[1], ins: g[2], h1: g[3], h2: g[4] }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Rates used when the controller is disabled, and for generation 0.
    pub pc: f64,
    pub pm: f64,
    pub pc_min: f64,
    pub pc_max: f64,
    pub pm_min: f64,
    pub pm_max: f64,
    pub tournament: usize,
    pub elite: usize,
    pub alpha: f64,
    pub sigma_fraction: f64,
    /// Generations without improvement that count as full stagnation.
    pub stagnation_window: usize,
    pub adaptive: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 24,
            generations: 40,
            pc: 0.8,
            pm: 0.1,
            pc_min: 0.5,
            pc_max: 0.95,
            pm_min: 0.01,
            pm_max: 0.30,
            tournament: 2,
            elite: 2,
            alpha: 0.5,
            sigma_fraction: 0.1,
            stagnation_window: 10,
            adaptive: true,
            seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if self.population < 4 {
            return Err(format!("optimizer.population must be >= 4 (got {})", self.population));
        }
        if self.generations == 0 {
            return Err("optimizer.generations must be >= 1".into());
        }
        if self.elite >= self.population {
            return Err(format!("optimizer.elite must be < population (got {})", self.elite));
        }
        if self.tournament == 0 {
            return Err("optimizer.tournament must be >= 1".into());
        }
        if !(unit(self.pc_min) && unit(self.pc_max) && self.pc_min <= self.pc_max) {
            return Err(format!("optimizer.pc_min/pc_max must satisfy 0 < min <= max < 1 (got {}, {})", self.pc_min, self.pc_max));
        }
        if !(unit(self.pm_min) && unit(self.pm_max) && self.pm_min <= self.pm_max) {
            return Err(format!("optimizer.pm_min/pm_max must satisfy 0 < min <= max < 1 (got {}, {})", self.pm_min, self.pm_max));
        }
        if !(self.pc >= self.pc_min && self.pc <= self.pc_max) {
            return Err(format!("optimizer.pc must lie in [pc_min, pc_max] (got {})", self.pc));
        }
        if !(self.pm >= self.pm_min && self.pm <= self.pm_max) {
            return Err(format!("optimizer.pm must lie in [pm_min, pm_max] (got {})", self.pm));
        }
        if !(self.alpha >= 0.0) || !(self.sigma_fraction >= 0.0) {
            return Err("optimizer.alpha and optimizer.sigma_fraction must be non-negative".into());
        }
        if self.stagnation_window == 0 {
            return Err("optimizer.stagnation_window must be >= 1".into());
        }
        Ok(())
    }

    pub fn controller(&self) -> FuzzyController {
        FuzzyController { pc_min: self.pc_min, pc_max: self.pc_max, pm_min: self.pm_min, pm_max: self.pm_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Level {
    Low,
    Medium,
    High,
}

use Level::{High as H, Low as L, Medium as M};

const LEVELS: [Level; 3] = [L, M, H];

// [diversity][stagnation]
const PC_RULES: [[Level; 3]; 3] = [[L, L, L], [M, M, L], [H, H, M]];
const PM_RULES: [[Level; 3]; 3] = [[H, H, H], [M, M, H], [L, M, H]];

fn peak(level: Level) -> f64 {
    match level {
        L => 0.0,
        M => 0.5,
        H => 1.0,
    }
}

fn membership(level: Level, x: f64) -> f64 {
    (1.0 - 2.0 * (x - peak(level)).abs()).max(0.0)
}

/// Area and centroid of each output set restricted to [0, 1].
const SET_AREA: [f64; 3] = [0.25, 0.5, 0.25];
const SET_CENTROID: [f64; 3] = [1.0 / 6.0, 0.5, 5.0 / 6.0];

/// Exact centroid on [0, 1] of `sum_o strength_o * mu_o(x)`.
fn centroid(strength: [f64; 3]) -> f64 {
    let area: f64 = (0..3).map(|o| strength[o] * SET_AREA[o]).sum();
    let moment: f64 = (0..3).map(|o| strength[o] * SET_AREA[o] * SET_CENTROID[o]).sum();
    if area > 0.0 {
        moment / area
    } else {
        0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyController {
    pub pc_min: f64,
    pub pc_max: f64,
    pub pm_min: f64,
    pub pm_max: f64,
}

impl Default for FuzzyController {
    fn default() -> Self {
        GaConfig::default().controller()
    }
}

impl FuzzyController {
    /// (pc, pm) for the given diversity and stagnation.
    pub fn fuzzy_adapt(&self, diversity: f64, stagnation: f64) -> (f64, f64) {
        let d = diversity.clamp(0.0, 1.0);
        let s = stagnation.clamp(0.0, 1.0);
        let mut pc_strength = [0.0f64; 3];
        let mut pm_strength = [0.0f64; 3];
        for (i, &ld) in LEVELS.iter().enumerate() {
            for (j, &ls) in LEVELS.iter().enumerate() {
                let w = membership(ld, d) * membership(ls, s);
                let pc_out = PC_RULES[i][j] as usize;
                let pm_out = PM_RULES[i][j] as usize;
                pc_strength[pc_out] += w;
                pm_strength[pm_out] += w;
            }
        }
        let pc = self.pc_min + centroid(pc_strength) * (self.pc_max - self.pc_min);
        let pm = self.pm_min + centroid(pm_strength) * (self.pm_max - self.pm_min);
        (pc.clamp(self.pc_min, self.pc_max), pm.clamp(self.pm_min, self.pm_max))
    }
}

/// Index of the lowest-cost member among `k` uniform draws (with
/// replacement). A tournament at least as large as the population is
/// exhaustive and returns the global best.
pub fn tournament_select(costs: &[f64], k: usize, rng: &mut ChaCha8Rng) -> usize {
    let n = costs.len();
    if k >= n {
        return (0..n).fold(0, |b, i| if costs[i] < costs[b] { i } else { b });
    }
    let mut best = rng.gen_range(0..n);
    for _ in 1..k {
        let c = rng.gen_range(0..n);
        if costs[c] < costs[best] {
            best = c;
        }
    }
    best
}

/// BLX-alpha: each child gene uniform on `[min - alpha d, max + alpha d]`,
/// clipped to the bounds.
pub fn blend_crossover(p1: &[f64], p2: &[f64], alpha: f64, bounds: &GeneBounds, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for i in 0..p1.len() {
        let (lo, hi) = (p1[i].min(p2[i]), p1[i].max(p2[i]));
        let d = hi - lo;
        if d > 0.0 {
            let (a, b) = (lo - alpha * d, hi + alpha * d);
            c1[i] = rng.gen_range(a..=b);
            c2[i] = rng.gen_range(a..=b);
        }
    }
    bounds.clip(&mut c1);
    bounds.clip(&mut c2);
    (c1, c2)
}

/// With probability `pm` per gene, add N(0, (sigma_fraction (hi - lo))^2)
/// and clip.
pub fn gaussian_mutate(member: &mut [f64], pm: f64, sigma_fraction: f64, bounds: &GeneBounds, rng: &mut ChaCha8Rng) {
    for (i, g) in member.iter_mut().enumerate() {
        let hit = rng.gen::<f64>() < pm;
        if hit {
            let sigma = sigma_fraction * (bounds.hi[i] - bounds.lo[i]);
            let z: f64 = Normal::new(0.0, 1.0).unwrap().sample(rng);
            *g = (*g + sigma * z).clamp(bounds.lo[i], bounds.hi[i]);
        }
    }
}

/// Mean pairwise L1 distance between members (genes scaled to [0, 1] by
/// their bounds, averaged over genes), divided by its largest possible
/// value `floor(n/2) ceil(n/2) / C(n, 2)`.
pub fn diversity_metric(population: &[Vec<f64>], bounds: &GeneBounds) -> f64 {
    let n = population.len();
    if n < 2 {
        return 0.0;
    }
    let dim = bounds.dim();
    let mut total = 0.0;
    let mut col = vec![0.0; n];
    for g in 0..dim {
        let span = bounds.hi[g] - bounds.lo[g];
        for (k, m) in population.iter().enumerate() {
            col[k] = (m[g] - bounds.lo[g]) / span;
        }
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // sum_{i<j} |x_i - x_j| over sorted values.
        total += col.iter().enumerate().map(|(k, &x)| x * (2.0 * k as f64 - (n as f64 - 1.0))).sum::<f64>();
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let max = ((n / 2) * n.div_ceil(2)) as f64 / pairs;
    (total / (dim as f64 * pairs) / max).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    pub best_cost: f64,
    pub mean_cost: f64,
    pub pc: f64,
    pub pm: f64,
    pub diversity: f64,
    /// Objective failures (penalized members) in this generation.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: Individual,
    pub trace: Vec<TraceRow>,
    /// Best member of the initial population among the injected seeds.
    pub seed_costs: Vec<f64>,
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = String::from("generation,best_cost,mean_cost,pc,pm,diversity\n");
    for r in trace {
        s.push_str(&format!(
            "{},{:.12e},{:.12e},{:.9},{:.9},{:.9}\n",
            r.generation, r.best_cost, r.mean_cost, r.pc, r.pm, r.diversity
        ));
    }
    s
}

/// Stop the run when a generation's failure fraction exceeds this.
pub type FailureGuard = Option<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct TooManyFailures {
    pub generation: usize,
    pub failures: usize,
    pub population: usize,
}

fn evaluate<F>(members: &[Vec<f64>], objective: &F) -> (Vec<f64>, usize)
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let raw: Vec<Option<f64>> = members.par_iter().map(|m| objective(m)).collect();
    let failures = raw.iter().filter(|c| !matches!(c, Some(v) if v.is_finite())).count();
    let costs = raw.into_iter().map(|c| c.filter(|v| v.is_finite()).unwrap_or(PENALTY_COST)).collect();
    (costs, failures)
}

/// Minimize `objective` over the box. `seeds` are placed first in the
/// initial population (clipped to the bounds); the rest is uniform.
/// Objective failures (`None` or non-finite) cost [`PENALTY_COST`].
///
/// The initial population is generation 0; `cfg.generations` generations
/// are evaluated in total and the trace has one row per generation.
pub fn run_ga<F>(
    cfg: &GaConfig,
    bounds: &GeneBounds,
    seeds: &[Vec<f64>],
    objective: F,
    max_failure_fraction: FailureGuard,
) -> Result<GaResult, TooManyFailures>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.population;
    let dim = bounds.dim();
    let controller = cfg.controller();
    let mut pop: Vec<Vec<f64>> = seeds
        .iter()
        .take(n)
        .map(|s| {
            let mut g = s.clone();
            bounds.clip(&mut g);
            g
        })
        .collect();
    while pop.len() < n {
        pop.push((0..dim).map(|i| rng.gen_range(bounds.lo[i]..=bounds.hi[i])).collect());
    }
    let (mut costs, mut failures) = evaluate(&pop, &objective);
    let seed_costs = costs[..seeds.len().min(n)].to_vec();
    let best_of = |costs: &[f64]| (0..costs.len()).fold(0, |b, i| if costs[i] < costs[b] { i } else { b });
    let mut best = {
        let i = best_of(&costs);
        Individual { genes: pop[i].clone(), cost: costs[i] }
    };
    let mut stagnant = 0usize;
    let mut trace = Vec::with_capacity(cfg.generations);
    for generation in 0..cfg.generations {
        if let Some(limit) = max_failure_fraction {
            if failures as f64 > limit * n as f64 {
                return Err(TooManyFailures { generation, failures, population: n });
            }
        }
        let diversity = diversity_metric(&pop, bounds);
        let stagnation = (stagnant as f64 / cfg.stagnation_window as f64).min(1.0);
        let (pc, pm) = if cfg.adaptive && generation > 0 { controller.fuzzy_adapt(diversity, stagnation) } else { (cfg.pc, cfg.pm) };
        trace.push(TraceRow {
            generation,
            best_cost: best.cost,
            mean_cost: costs.iter().sum::<f64>() / n as f64,
            pc,
            pm,
            diversity,
            failures,
        });
        if generation + 1 == cfg.generations {
            break;
        }
        // Elites by cost, ties by index.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap().then(a.cmp(&b)));
        let mut next: Vec<Vec<f64>> = order[..cfg.elite].iter().map(|&i| pop[i].clone()).collect();
        let elite_costs: Vec<f64> = order[..cfg.elite].iter().map(|&i| costs[i]).collect();
        while next.len() < n {
            let a = tournament_select(&costs, cfg.tournament, &mut rng);
            let b = tournament_select(&costs, cfg.tournament, &mut rng);
            let (mut c1, mut c2) = if rng.gen::<f64>() < pc {
                blend_crossover(&pop[a], &pop[b], cfg.alpha, bounds, &mut rng)
            } else {
                (pop[a].clone(), pop[b].clone())
            };
            gaussian_mutate(&mut c1, pm, cfg.sigma_fraction, bounds, &mut rng);
            gaussian_mutate(&mut c2, pm, cfg.sigma_fraction, bounds, &mut rng);
            next.push(c1);
            if next.len() < n {
                next.push(c2);
            }
        }
        let (new_costs, new_failures) = evaluate(&next[cfg.elite..], &objective);
        failures = new_failures;
        costs = elite_costs.into_iter().chain(new_costs).collect();
        pop = next;
        let i = best_of(&costs);
        if costs[i] < best.cost {
            best = Individual { genes: pop[i].clone(), cost: costs[i] };
            stagnant = 0;
        } else {
            stagnant += 1;
        }
    }
    Ok(GaResult { best, trace, seed_costs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub reflection: f64,
    pub coupling: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { reflection: 1.0, coupling: 1.0 }
    }
}

/// `w_r max_p |S_pp| + w_c max_{i != j} |S_ij|` (linear magnitudes).
pub fn s_matrix_cost(s: &Mat4, weights: &CostWeights) -> f64 {
    let mut refl = 0.0f64;
    let mut coup = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                refl = refl.max(s[i][j].norm());
            } else {
                coup = coup.max(s[i][j].norm());
            }
        }
    }
    weights.reflection * refl + weights.coupling * coup
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub design: PatchDesign,
    pub cost: f64,
    /// S-matrix at f0; absent for designs that could not be simulated.
    pub s: Option<Mat4>,
}

/// Cost of `design` at `f0` inside the array described by `base`. Any
/// failure (invalid geometry, mesh or solver error) yields
/// [`PENALTY_COST`] and no S snapshot.
pub fn antenna_cost(
    design: &PatchDesign,
    base: &SceneConfig,
    solver: &SolverConfig,
    f0: f64,
    weights: &CostWeights,
    cache: Option<&ResultCache>,
) -> FitnessRecord {
    match simulate(&base.with_design(*design), solver, &[f0], cache) {
        Ok(out) => {
            let s = out.table.rows[0].s;
            let cost = s_matrix_cost(&s, weights);
            if cost.is_finite() {
                FitnessRecord { design: *design, cost, s: Some(s) }
            } else {
                FitnessRecord { design: *design, cost: PENALTY_COST, s: None }
            }
        }
        Err(_) => FitnessRecord { design: *design, cost: PENALTY_COST, s: None },
    }
}
