//! QME and QPME experiments on brickwork circuits.
//!
//! Every realization owns deterministic random streams keyed by
//! `(master_seed, realization_index)`: the free circuit comes from
//! [`Lane::Circuit`], preheating gates from [`Lane::Preheat`] and stabilizer
//! initial states from [`Lane::State`]. All θ (or p, or T) values of one
//! realization see the same free circuit. Realizations run in parallel and
//! are reduced in index order, so results do not depend on the thread count.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::dense::{reduced_density, tilted_state, von_neumann_entropy, Gate, PureState, TiltKind};
use crate::ensembles::{sample_haar_gate, EnsembleSpec, Family, DEFAULT_CLIFFORD_WORD_LENGTH, DEFAULT_GAUSSIAN_SCALE, DEFAULT_SWAP_PROBABILITY};
use crate::error::{Error, Result};
use crate::monotones::{coherence, coherence_of_pure, imaginarity, imaginarity_of_pure, majorana, wigner};
use crate::rng::{Lane, RngStream};
use crate::stabilizer::{init_hadamard_product, monomial_tables, StabilizerTableau};

/// Largest dense Hilbert-space dimension accepted by the runners.
pub const MAX_DENSE_DIM: usize = 1 << 24;
pub const DEFAULT_CROSSING_SIGMA: f64 = 2.0;
pub const DEFAULT_CROSSING_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Qme,
    Qpme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    Coherence,
    Imaginarity,
    NonGaussianity,
    Mana,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Dense,
    Stabilizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreheatScope {
    Both,
    BOnly,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        impl $ty {
            pub fn keyword(self) -> &'static str {
                match self { $($ty::$variant => $kw),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }

        impl std::str::FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($kw => Ok($ty::$variant),)+
                    _ => Err(Error::InvalidConfig(format!(
                        "unknown {} `{s}` (expected one of: {})",
                        stringify!($ty),
                        [$($kw),+].join(", ")
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Mode { Qme => "qme", Qpme => "qpme" });
keyword_enum!(Resource {
    Coherence => "coherence",
    Imaginarity => "imaginarity",
    NonGaussianity => "non_gaussianity",
    Mana => "mana",
});
keyword_enum!(Engine { Dense => "dense", Stabilizer => "stabilizer" });
keyword_enum!(Boundary { Open => "open", Periodic => "periodic" });
keyword_enum!(PreheatScope { Both => "both", BOnly => "B_only" });

impl Resource {
    /// Free gate family of the resource theory.
    pub fn family(self, engine: Engine) -> Family {
        match (self, engine) {
            (Resource::Coherence, Engine::Stabilizer) => Family::MonomialClifford,
            (Resource::Coherence, Engine::Dense) => Family::Coherence,
            (Resource::Imaginarity, _) => Family::Orthogonal,
            (Resource::NonGaussianity, _) => Family::Gaussian,
            (Resource::Mana, _) => Family::QutritClifford,
        }
    }

    pub fn default_tilt(self) -> TiltKind {
        match self {
            Resource::Imaginarity => TiltKind::X,
            Resource::Mana => TiltKind::QutritX,
            Resource::Coherence | Resource::NonGaussianity => TiltKind::Y,
        }
    }

    pub fn default_local_dim(self) -> usize {
        if self == Resource::Mana {
            3
        } else {
            2
        }
    }

    pub fn default_boundary(self) -> Boundary {
        if self == Resource::NonGaussianity {
            Boundary::Open
        } else {
            Boundary::Periodic
        }
    }
}

/// Preheating stage of a QPME run.
#[derive(Debug, Clone, PartialEq)]
pub struct PreheatConfig {
    /// Preheating depths `T`; must contain 0.
    pub depths: Vec<usize>,
    pub epsilon_a: f64,
    pub epsilon_b: f64,
    pub scope: PreheatScope,
}

/// Crossing significance rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingRule {
    /// Required separation in combined-stderr units.
    pub sigma: f64,
    /// Number of samples inspected on each side of a sign flip.
    pub window: usize,
}

impl Default for CrossingRule {
    fn default() -> Self {
        Self { sigma: DEFAULT_CROSSING_SIGMA, window: DEFAULT_CROSSING_WINDOW }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub resource: Resource,
    pub engine: Engine,
    pub n_sites: usize,
    pub local_dim: usize,
    /// `N_A`; the region is always the first `N_A` sites.
    pub region_size: usize,
    pub boundary: Boundary,
    /// θ values (dense) or `|+⟩` probabilities p (stabilizer).
    pub values: Vec<f64>,
    pub tilt: TiltKind,
    pub epsilon: f64,
    pub swap_probability: f64,
    pub gaussian_scale: f64,
    pub clifford_word_length: usize,
    pub preheat: Option<PreheatConfig>,
    pub depth: usize,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub sample_stride: usize,
    pub crossing: CrossingRule,
}

impl ExperimentConfig {
    /// Dense QME configuration with every optional field defaulted.
    pub fn qme(resource: Resource, n_sites: usize, region_size: usize, values: Vec<f64>, epsilon: f64) -> Self {
        Self {
            mode: Mode::Qme,
            resource,
            engine: Engine::Dense,
            n_sites,
            local_dim: resource.default_local_dim(),
            region_size,
            boundary: resource.default_boundary(),
            values,
            tilt: resource.default_tilt(),
            epsilon,
            swap_probability: DEFAULT_SWAP_PROBABILITY,
            gaussian_scale: DEFAULT_GAUSSIAN_SCALE,
            clifford_word_length: DEFAULT_CLIFFORD_WORD_LENGTH,
            preheat: None,
            depth: 0,
            n_realizations: 1,
            master_seed: 0,
            sample_stride: 1,
            crossing: CrossingRule::default(),
        }
    }

    /// Dense QPME configuration at a single θ.
    pub fn qpme(resource: Resource, n_sites: usize, region_size: usize, theta: f64, epsilon: f64, preheat: PreheatConfig) -> Self {
        Self { mode: Mode::Qpme, preheat: Some(preheat), ..Self::qme(resource, n_sites, region_size, vec![theta], epsilon) }
    }

    /// Stabilizer coherence QME configuration over `|+⟩` probabilities.
    pub fn stabilizer(n_sites: usize, region_size: usize, p_values: Vec<f64>, epsilon: f64) -> Self {
        Self {
            engine: Engine::Stabilizer,
            sample_stride: default_sample_stride(Engine::Stabilizer, n_sites),
            ..Self::qme(Resource::Coherence, n_sites, region_size, p_values, epsilon)
        }
    }

    pub fn with_run(mut self, depth: usize, n_realizations: usize, master_seed: u64) -> Self {
        self.depth = depth;
        self.n_realizations = n_realizations;
        self.master_seed = master_seed;
        self
    }

    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec {
            family: self.resource.family(self.engine),
            local_dim: self.local_dim,
            epsilon: self.epsilon,
            swap_probability: self.swap_probability,
            gaussian_scale: self.gaussian_scale,
            clifford_word_length: self.clifford_word_length,
        }
    }

    /// Sampled depths: multiples of the stride plus the final depth.
    pub fn depth_grid(&self) -> Vec<usize> {
        let mut grid: Vec<usize> = (0..=self.depth).step_by(self.sample_stride.max(1)).collect();
        if grid.last() != Some(&self.depth) {
            grid.push(self.depth);
        }
        grid
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::InvalidConfig(format!("{key}: {msg}")));
        if self.n_sites < 2 {
            return bad("n_sites", format!("{} < 2", self.n_sites));
        }
        let full_region_ok = self.engine == Engine::Dense && self.mode == Mode::Qme;
        if self.region_size == 0
            || self.region_size > self.n_sites
            || (self.region_size == self.n_sites && !full_region_ok)
        {
            return bad("n_a", format!("{} not in 1..{}", self.region_size, self.n_sites));
        }
        if self.values.is_empty() {
            return bad("theta_values", "at least one value required".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return bad("theta_values", "values must be finite".into());
        }
        if self.sample_stride == 0 {
            return bad("sample_stride", "must be ≥ 1".into());
        }
        if self.n_realizations == 0 {
            return bad("n_realizations", "must be ≥ 1".into());
        }
        if self.crossing.window == 0 || !(self.crossing.sigma >= 0.0) {
            return bad("crossing_window", "window ≥ 1 and sigma ≥ 0 required".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon", format!("{} outside [0, 1]", self.epsilon));
        }
        match self.engine {
            Engine::Stabilizer => {
                if self.resource != Resource::Coherence {
                    return bad("engine", "the stabilizer engine supports coherence only".into());
                }
                if self.local_dim != 2 {
                    return bad("local_dim", "the stabilizer engine needs d=2".into());
                }
                if self.mode != Mode::Qme {
                    return bad("mode", "the stabilizer engine runs qme only".into());
                }
                if let Some(p) = self.values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return bad("p_values", format!("{p} outside [0, 1]"));
                }
            }
            Engine::Dense => {
                let expected = self.resource.default_local_dim();
                if self.local_dim != expected {
                    return bad("local_dim", format!("{} needs d={expected}", self.resource));
                }
                if self.tilt.local_dim() != self.local_dim {
                    return bad("tilt", format!("tilt {:?} does not act on d={}", self.tilt, self.local_dim));
                }
                let dim = (self.local_dim as f64).powi(self.n_sites as i32);
                if dim > MAX_DENSE_DIM as f64 {
                    return bad("n_sites", format!("dense dimension {dim} exceeds {MAX_DENSE_DIM}"));
                }
                if self.resource == Resource::Mana && self.region_size > wigner::MAX_SITES {
                    return bad("n_a", format!("mana needs N_A ≤ {}", wigner::MAX_SITES));
                }
            }
        }
        if self.resource == Resource::NonGaussianity && self.boundary == Boundary::Periodic {
            return bad("boundary", "non-Gaussianity needs open boundaries".into());
        }
        self.ensemble()
            .validate()
            .or_else(|e| bad("ensemble", e.to_string()))?;
        match (self.mode, &self.preheat) {
            (Mode::Qme, Some(_)) => bad("preheat_depths", "only valid in qpme mode".into()),
            (Mode::Qme, None) => Ok(()),
            (Mode::Qpme, None) => bad("preheat_depths", "qpme needs a preheating stage".into()),
            (Mode::Qpme, Some(pre)) => {
                if self.values.len() != 1 {
                    return bad("theta_values", "qpme runs a single θ".into());
                }
                if !pre.depths.contains(&0) {
                    return bad("preheat_depths", "must include the T=0 baseline".into());
                }
                if let Some(t) = pre.depths.iter().find(|&&t| t > self.depth) {
                    return bad("preheat_depths", format!("T={t} exceeds depth {}", self.depth));
                }
                for (key, eps) in [("epsilon_a", pre.epsilon_a), ("epsilon_b", pre.epsilon_b)] {
                    if !(0.0..=1.0).contains(&eps) {
                        return bad(key, format!("{eps} outside [0, 1]"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Stride default: every layer, except every second layer for stabilizer
/// chains of 256 sites or more.
pub fn default_sample_stride(engine: Engine, n_sites: usize) -> usize {
    if engine == Engine::Stabilizer && n_sites >= 256 {
        2
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    pub depths: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, depths: Vec<usize>, mean: Vec<f64>, stderr: Vec<f64>, n_realizations: usize) -> Result<Self> {
        if depths.len() != mean.len() || mean.len() != stderr.len() {
            return Err(Error::DimensionMismatch("series columns differ in length".into()));
        }
        if stderr.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidParameter("stderr must be ≥ 0".into()));
        }
        Ok(Self { label: label.into(), depths, mean, stderr, n_realizations })
    }

    /// Pointwise mean and standard error over `samples[realization][depth]`.
    pub fn from_samples(label: impl Into<String>, depths: Vec<usize>, samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        let len = depths.len();
        if n == 0 || samples.iter().any(|s| s.len() != len) {
            return Err(Error::DimensionMismatch("ragged or empty sample set".into()));
        }
        let mut mean = vec![0.0; len];
        for s in samples {
            for (m, x) in mean.iter_mut().zip(s) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut stderr = vec![0.0; len];
        if n > 1 {
            for s in samples {
                for ((v, x), m) in stderr.iter_mut().zip(s).zip(&mean) {
                    *v += (x - m) * (x - m);
                }
            }
            stderr.iter_mut().for_each(|v| *v = (*v / (n - 1) as f64 / n as f64).sqrt());
        }
        Self::new(label, depths, mean, stderr, n)
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    /// Mean at a sampled depth.
    pub fn at(&self, depth: usize) -> Option<(f64, f64)> {
        let k = self.depths.iter().position(|&d| d == depth)?;
        Some((self.mean[k], self.stderr[k]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub pair: (String, String),
    /// Interpolated depth of the reported sign flip of `a − b`.
    pub crossing_depth: Option<f64>,
    pub significant: bool,
    /// For a crossing, the weaker of the best separations before and after
    /// the flip; otherwise the smallest separation. Combined-stderr units,
    /// or raw units when both series carry zero stderr.
    pub margin: f64,
}

/// Sign flips of `a − b`, first significant one preferred.
pub fn detect_crossing(a: &TimeSeries, b: &TimeSeries) -> Result<CrossingReport> {
    detect_crossing_with(a, b, CrossingRule::default())
}

pub fn detect_crossing_with(a: &TimeSeries, b: &TimeSeries, rule: CrossingRule) -> Result<CrossingReport> {
    if a.depths != b.depths {
        return Err(Error::GridMismatch(format!("`{}` and `{}` have different depth grids", a.label, b.label)));
    }
    let n = a.len();
    let diff: Vec<f64> = (0..n).map(|k| a.mean[k] - b.mean[k]).collect();
    let sigma: Vec<f64> = (0..n).map(|k| a.stderr[k].hypot(b.stderr[k])).collect();
    let raw = sigma.iter().all(|&s| s == 0.0);
    let score = |k: usize| -> f64 {
        if raw {
            diff[k].abs()
        } else if sigma[k] > 0.0 {
            diff[k].abs() / sigma[k]
        } else if diff[k] == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let threshold = if raw { 0.0 } else { rule.sigma };
    let passes = |k: usize| score(k) > threshold;

    let mut flips = Vec::new();
    let mut last: Option<usize> = None;
    for k in 0..n {
        if diff[k] == 0.0 {
            continue;
        }
        if let Some(i) = last {
            if diff[i].signum() != diff[k].signum() {
                flips.push((i, k));
            }
        }
        last = Some(k);
    }

    let side_best = |range: std::ops::Range<usize>, sign: f64| -> (f64, bool) {
        range
            .filter(|&k| diff[k] != 0.0 && diff[k].signum() == sign)
            .fold((0.0f64, false), |(best, ok), k| (best.max(score(k)), ok || passes(k)))
    };
    let evaluate = |&(i, j): &(usize, usize)| {
        let (before, ok_before) = side_best((i + 1).saturating_sub(rule.window)..i + 1, diff[i].signum());
        let (after, ok_after) = side_best(j..(j + rule.window).min(n), diff[j].signum());
        let t = diff[i].abs() / (diff[i].abs() + diff[j].abs());
        let depth = a.depths[i] as f64 + t * (a.depths[j] as f64 - a.depths[i] as f64);
        (depth, ok_before && ok_after, before.min(after))
    };

    let pair = (a.label.clone(), b.label.clone());
    let chosen = flips
        .iter()
        .map(evaluate)
        .find(|&(_, sig, _)| sig)
        .or_else(|| flips.first().map(evaluate));
    Ok(match chosen {
        Some((depth, significant, margin)) => CrossingReport { pair, crossing_depth: Some(depth), significant, margin },
        None => {
            let margin = (0..n).map(score).fold(f64::INFINITY, f64::min);
            CrossingReport { pair, crossing_depth: None, significant: false, margin: if n == 0 { 0.0 } else { margin } }
        }
    })
}

/// Bonds of brickwork layer `s ≥ 1`: odd `s` pairs `(0,1),(2,3),…`, even `s`
/// pairs `(1,2),(3,4),…`; periodic chains of even length add `(N−1, 0)` to
/// even layers.
pub fn brickwork_layer(s: usize, n_sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    assert!(s >= 1, "brickwork layers are numbered from 1");
    let start = if s % 2 == 1 { 0 } else { 1 };
    let mut bonds: Vec<(usize, usize)> = (start..n_sites.saturating_sub(1)).step_by(2).map(|x| (x, x + 1)).collect();
    if s % 2 == 0 && boundary == Boundary::Periodic && n_sites % 2 == 0 && n_sites > 2 {
        bonds.push((n_sites - 1, 0));
    }
    bonds
}

/// Series label for a swept value.
pub fn value_label(engine: Engine, value: f64) -> String {
    match engine {
        Engine::Dense => format!("theta={value}"),
        Engine::Stabilizer => format!("p={value}"),
    }
}

pub fn preheat_label(t: usize) -> String {
    format!("T={t}")
}

/// Monotone of the first `n_a` sites of a pure state.
pub fn evaluate_monotone(resource: Resource, state: &PureState, n_a: usize) -> Result<f64> {
    let region: Vec<usize> = (0..n_a).collect();
    let full = n_a == state.n_sites();
    match resource {
        Resource::Coherence if full => Ok(coherence_of_pure(state)),
        Resource::Imaginarity if full => Ok(imaginarity_of_pure(state)),
        Resource::Coherence => coherence(&reduced_density(state, &region)?),
        Resource::Imaginarity => imaginarity(&reduced_density(state, &region)?),
        Resource::NonGaussianity if full => {
            let m = majorana::majorana_correlation_matrix(state, &region)?;
            majorana::gaussian_entropy(&m)
        }
        Resource::NonGaussianity => {
            let m = majorana::majorana_correlation_matrix(state, &region)?;
            let s = von_neumann_entropy(&reduced_density(state, &region)?)?;
            crate::monotones::clamp_nonnegative(majorana::gaussian_entropy(&m)? - s, "non-Gaussianity")
        }
        Resource::Mana if full => wigner::mana(&crate::dense::DensityMatrix::from_pure(state)),
        Resource::Mana => wigner::mana(&reduced_density(state, &region)?),
    }
}

/// Applies one diluted free layer drawn from `rng`.
fn free_layer<R: Rng + ?Sized>(state: &mut PureState, spec: &EnsembleSpec, s: usize, boundary: Boundary, rng: &mut R) -> Result<()> {
    for (x, y) in brickwork_layer(s, state.n_sites(), boundary) {
        if let Some(gate) = spec.draw(rng) {
            state.apply_gate2(&gate, x, y)?;
        }
    }
    Ok(())
}

/// Applies one preheating layer: diluted Haar gates on bonds inside A
/// (`epsilon_a`) or inside B (`epsilon_b`); bonds across the cut are idle.
fn preheat_layer<R: Rng + ?Sized>(
    state: &mut PureState,
    n_a: usize,
    epsilon_a: f64,
    epsilon_b: f64,
    s: usize,
    boundary: Boundary,
    rng: &mut R,
) -> Result<()> {
    let d = state.local_dim();
    for (x, y) in brickwork_layer(s, state.n_sites(), boundary) {
        let eps = match (x < n_a, y < n_a) {
            (true, true) => epsilon_a,
            (false, false) => epsilon_b,
            _ => continue,
        };
        let coin: f64 = rng.random();
        let gate: Gate = sample_haar_gate(rng, d);
        if coin < eps {
            state.apply_gate2(&gate, x, y)?;
        }
    }
    Ok(())
}

/// Runs `f` for every realization in parallel; results come back in index
/// order.
fn realizations<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

fn collect_series(labels: Vec<String>, depths: &[usize], per_realization: Vec<Vec<Vec<f64>>>) -> Result<Vec<TimeSeries>> {
    labels
        .into_iter()
        .enumerate()
        .map(|(k, label)| {
            let samples: Vec<Vec<f64>> = per_realization.iter().map(|r| r[k].clone()).collect();
            TimeSeries::from_samples(label, depths.to_vec(), &samples)
        })
        .collect()
}

/// One monotone trajectory per value of `config.values`.
pub fn run_qme(config: &ExperimentConfig) -> Result<Vec<TimeSeries>> {
    config.validate()?;
    if config.mode != Mode::Qme {
        return Err(Error::InvalidConfig("mode: run_qme needs mode = qme".into()));
    }
    let grid = config.depth_grid();
    let labels = config.values.iter().map(|&v| value_label(config.engine, v)).collect();
    let per_realization = match config.engine {
        Engine::Dense => realizations(config.n_realizations, |r| {
            config
                .values
                .iter()
                .map(|&theta| dense_trajectory(config, theta, None, r, &grid))
                .collect::<Result<Vec<_>>>()
        })?,
        Engine::Stabilizer => realizations(config.n_realizations, |r| {
            config
                .values
                .iter()
                .map(|&p| stabilizer_trajectory(config, p, r, &grid))
                .collect::<Result<Vec<_>>>()
        })?,
    };
    collect_series(labels, &grid, per_realization)
}

/// One trajectory per preheating depth `T`, all at the single configured θ.
pub fn run_qpme(config: &ExperimentConfig) -> Result<Vec<TimeSeries>> {
    config.validate()?;
    let pre = match (config.mode, &config.preheat) {
        (Mode::Qpme, Some(pre)) => pre,
        _ => return Err(Error::InvalidConfig("mode: run_qpme needs mode = qpme".into())),
    };
    if pre.scope == PreheatScope::Both && config.region_size < 2 {
        log::warn!("N_A = 1 has no bonds inside A; preheating acts on B only");
    }
    let grid = config.depth_grid();
    let theta = config.values[0];
    let labels = pre.depths.iter().map(|&t| preheat_label(t)).collect();
    let per_realization = realizations(config.n_realizations, |r| {
        pre.depths
            .iter()
            .map(|&t| dense_trajectory(config, theta, Some((t, pre)), r, &grid))
            .collect::<Result<Vec<_>>>()
    })?;
    collect_series(labels, &grid, per_realization)
}

fn dense_trajectory(
    config: &ExperimentConfig,
    theta: f64,
    preheat: Option<(usize, &PreheatConfig)>,
    realization: u64,
    grid: &[usize],
) -> Result<Vec<f64>> {
    let spec = config.ensemble();
    let mut state = tilted_state(config.n_sites, config.local_dim, config.tilt, theta)?;
    let mut circuit = RngStream::with_lane(config.master_seed, realization, Lane::Circuit);
    let mut heat = RngStream::with_lane(config.master_seed, realization, Lane::Preheat);
    let (t_heat, eps_a, eps_b) = match preheat {
        Some((t, pre)) => {
            let eps_a = if pre.scope == PreheatScope::BOnly { 0.0 } else { pre.epsilon_a };
            (t, eps_a, pre.epsilon_b)
        }
        None => (0, 0.0, 0.0),
    };
    let mut out = Vec::with_capacity(grid.len());
    let mut next = grid.iter().peekable();
    for s in 0..=config.depth {
        if s > 0 {
            if s <= t_heat {
                preheat_layer(&mut state, config.region_size, eps_a, eps_b, s, config.boundary, &mut heat)?;
            } else {
                free_layer(&mut state, &spec, s, config.boundary, &mut circuit)?;
            }
        }
        if next.peek() == Some(&&s) {
            next.next();
            out.push(evaluate_monotone(config.resource, &state, config.region_size)?);
        }
    }
    Ok(out)
}

fn stabilizer_trajectory(config: &ExperimentConfig, p: f64, realization: u64, grid: &[usize]) -> Result<Vec<f64>> {
    let mut state_rng = RngStream::with_lane(config.master_seed, realization, Lane::State);
    let mut circuit = RngStream::with_lane(config.master_seed, realization, Lane::Circuit);
    let mut tab: StabilizerTableau = init_hadamard_product(config.n_sites, p, &mut state_rng)?;
    let tables = monomial_tables();
    let region = 0..config.region_size;
    let mut out = Vec::with_capacity(grid.len());
    let mut next = grid.iter().peekable();
    for s in 0..=config.depth {
        if s > 0 {
            for (x, y) in brickwork_layer(s, config.n_sites, config.boundary) {
                let coin: f64 = circuit.random();
                let index = circuit.random_range(0..tables.len());
                if coin < config.epsilon {
                    tab.apply_table(&tables[index], x, y)?;
                }
            }
        }
        if next.peek() == Some(&&s) {
            next.next();
            out.push(tab.coherence(region.clone())? as f64);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::binary_entropy;
    use approx::assert_abs_diff_eq;

    fn series(label: &str, mean: &[f64], se: f64) -> TimeSeries {
        let n = mean.len();
        TimeSeries::new(label, (0..n).collect(), mean.to_vec(), vec![se; n], 100).unwrap()
    }

    #[test]
    fn brickwork_examples() {
        assert_eq!(brickwork_layer(1, 6, Boundary::Open), vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(brickwork_layer(2, 6, Boundary::Open), vec![(1, 2), (3, 4)]);
        assert_eq!(brickwork_layer(2, 6, Boundary::Periodic), vec![(1, 2), (3, 4), (5, 0)]);
        assert_eq!(brickwork_layer(3, 6, Boundary::Periodic), brickwork_layer(1, 6, Boundary::Open));
        assert_eq!(brickwork_layer(2, 5, Boundary::Periodic), vec![(1, 2), (3, 4)]);
        assert_eq!(brickwork_layer(1, 5, Boundary::Open), vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn crossing_examples() {
        let a = series("a", &[3.0, 2.0, 1.0, 0.5], 0.01);
        let b = series("b", &[2.0, 1.5, 1.2, 1.0], 0.01);
        let r = detect_crossing(&a, &b).unwrap();
        assert!(r.significant);
        let d = r.crossing_depth.unwrap();
        assert!(d > 1.0 && d < 2.0);
        assert_abs_diff_eq!(d, 1.0 + 0.5 / 0.7, epsilon = 1e-12);

        let same = detect_crossing(&a, &a).unwrap();
        assert_eq!(same.crossing_depth, None);
        assert!(!same.significant);

        let low = series("low", &[1.0, 0.5, 0.4, 0.1], 0.1);
        let r = detect_crossing(&a, &low).unwrap();
        assert_eq!(r.crossing_depth, None);
        // min separation 0.4 in combined-stderr units
        assert_abs_diff_eq!(r.margin, 0.4 / 0.01f64.hypot(0.1), epsilon = 1e-12);

        let short = TimeSeries::new("s", vec![0, 2], vec![0.0, 0.0], vec![0.0, 0.0], 1).unwrap();
        assert!(matches!(detect_crossing(&a, &short), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn noisy_flip_is_not_significant() {
        let a = series("a", &[1.0, 0.51, 0.49, 0.3], 0.1);
        let b = series("b", &[0.5, 0.5, 0.5, 0.29], 0.1);
        let r = detect_crossing(&a, &b).unwrap();
        assert!(r.crossing_depth.is_some());
        assert!(!r.significant);
    }

    #[test]
    fn deterministic_series_use_raw_units() {
        let a = TimeSeries::new("a", vec![0, 1, 2], vec![1.0, 0.4, 0.1], vec![0.0; 3], 1).unwrap();
        let b = TimeSeries::new("b", vec![0, 1, 2], vec![0.5, 0.3, 0.2], vec![0.0; 3], 1).unwrap();
        let r = detect_crossing(&a, &b).unwrap();
        assert!(r.significant);
        assert_abs_diff_eq!(r.margin, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn time_series_statistics() {
        let samples = vec![vec![1.0, 2.0], vec![3.0, 2.0]];
        let ts = TimeSeries::from_samples("x", vec![0, 1], &samples).unwrap();
        assert_eq!(ts.mean, vec![2.0, 2.0]);
        assert_abs_diff_eq!(ts.stderr[0], 1.0, epsilon = 1e-12);
        assert_eq!(ts.stderr[1], 0.0);
        let one = TimeSeries::from_samples("x", vec![0], &[vec![5.0]]).unwrap();
        assert_eq!(one.stderr, vec![0.0]);
        assert!(TimeSeries::new("x", vec![0], vec![0.0], vec![-1.0], 1).is_err());
    }

    #[test]
    fn depth_grid_includes_last_depth() {
        let mut c = ExperimentConfig::qme(Resource::Coherence, 6, 2, vec![0.5], 0.4).with_run(7, 1, 0);
        c.sample_stride = 3;
        assert_eq!(c.depth_grid(), vec![0, 3, 6, 7]);
        c.depth = 0;
        assert_eq!(c.depth_grid(), vec![0]);
    }

    #[test]
    fn depth_zero_matches_product_formula() {
        let thetas = vec![0.3, 1.1];
        let c = ExperimentConfig::qme(Resource::Coherence, 6, 2, thetas.clone(), 0.4).with_run(0, 2, 9);
        let out = run_qme(&c).unwrap();
        for (ts, theta) in out.iter().zip(thetas) {
            let expected = 2.0 * binary_entropy((theta / 2.0).cos().powi(2));
            assert_abs_diff_eq!(ts.mean[0], expected, epsilon = 1e-10);
            assert_eq!(ts.stderr[0], 0.0);
        }
    }

    #[test]
    fn zero_dilution_is_constant() {
        for resource in [Resource::Coherence, Resource::Imaginarity, Resource::NonGaussianity, Resource::Mana] {
            let n = if resource == Resource::Mana { 4 } else { 6 };
            let c = ExperimentConfig::qme(resource, n, 2, vec![0.8], 0.0).with_run(6, 2, 1);
            for ts in run_qme(&c).unwrap() {
                for m in &ts.mean {
                    assert_abs_diff_eq!(*m, ts.mean[0], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn free_initial_states_stay_free() {
        for resource in [Resource::Coherence, Resource::Imaginarity, Resource::NonGaussianity, Resource::Mana] {
            let n = if resource == Resource::Mana { 4 } else { 6 };
            let c = ExperimentConfig::qme(resource, n, 2, vec![0.0], 1.0).with_run(5, 2, 3);
            for ts in run_qme(&c).unwrap() {
                assert!(ts.mean.iter().all(|m| m.abs() < 1e-9), "{resource}: {:?}", ts.mean);
            }
        }
        let c = ExperimentConfig::stabilizer(16, 4, vec![0.0], 1.0).with_run(10, 3, 3);
        assert!(run_qme(&c).unwrap()[0].mean.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn qpme_baseline_equals_qme() {
        let pre = PreheatConfig { depths: vec![0, 2], epsilon_a: 0.5, epsilon_b: 0.5, scope: PreheatScope::Both };
        let qpme = ExperimentConfig::qpme(Resource::Coherence, 6, 2, 0.85, 0.6, pre).with_run(6, 3, 11);
        let qme = ExperimentConfig::qme(Resource::Coherence, 6, 2, vec![0.85], 0.6).with_run(6, 3, 11);
        let a = run_qpme(&qpme).unwrap();
        let b = run_qme(&qme).unwrap();
        assert_eq!(a[0].mean, b[0].mean);
        assert_eq!(a[0].label, "T=0");
        assert_ne!(a[1].mean, a[0].mean);
    }

    #[test]
    fn idle_preheat_shifts_the_baseline() {
        let pre = PreheatConfig { depths: vec![0, 2], epsilon_a: 0.0, epsilon_b: 0.0, scope: PreheatScope::Both };
        let c = ExperimentConfig::qpme(Resource::Imaginarity, 6, 2, 0.55, 0.6, pre).with_run(8, 2, 5);
        let out = run_qpme(&c).unwrap();
        for t in 0..=6 {
            assert_abs_diff_eq!(out[1].mean[t + 2], out[0].mean[t], epsilon = 1e-12);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = ExperimentConfig::qme(Resource::Imaginarity, 6, 2, vec![0.4, 1.2], 1.0).with_run(5, 7, 21);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_qme(&c).unwrap());
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_qme(&c).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn validation_errors_name_the_key() {
        let base = ExperimentConfig::qme(Resource::Coherence, 6, 2, vec![0.5], 0.4).with_run(4, 1, 0);
        let check = |c: ExperimentConfig, key: &str| {
            let err = c.validate().unwrap_err().to_string();
            assert!(err.contains(key), "{err}");
        };
        check(ExperimentConfig { epsilon: 1.5, ..base.clone() }, "epsilon");
        check(ExperimentConfig { region_size: 0, ..base.clone() }, "n_a");
        check(ExperimentConfig { local_dim: 3, ..base.clone() }, "local_dim");
        check(ExperimentConfig { sample_stride: 0, ..base.clone() }, "sample_stride");
        let ng = ExperimentConfig::qme(Resource::NonGaussianity, 6, 2, vec![0.5], 0.4);
        check(ExperimentConfig { boundary: Boundary::Periodic, ..ng }, "boundary");
        let pre = PreheatConfig { depths: vec![0, 9], epsilon_a: 0.1, epsilon_b: 0.1, scope: PreheatScope::Both };
        check(ExperimentConfig::qpme(Resource::Coherence, 6, 2, 0.5, 0.4, pre).with_run(4, 1, 0), "preheat_depths");
        check(ExperimentConfig { engine: Engine::Stabilizer, resource: Resource::Mana, local_dim: 3, ..base }, "engine");
    }

    #[test]
    fn keywords_round_trip() {
        for r in [Resource::Coherence, Resource::Imaginarity, Resource::NonGaussianity, Resource::Mana] {
            assert_eq!(r.keyword().parse::<Resource>().unwrap(), r);
        }
        assert_eq!("B_only".parse::<PreheatScope>().unwrap(), PreheatScope::BOnly);
        assert!("sideways".parse::<Boundary>().is_err());
    }
}
