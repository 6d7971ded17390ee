//! `key = value` experiment files.
//!
//! One assignment per line, `#` starts a comment, lists are comma-separated.
//! Unknown keys are errors, and every error names the offending key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use mpemba_core::protocols::{CrossingRule, DEFAULT_CROSSING_SIGMA, DEFAULT_CROSSING_WINDOW};
use mpemba_core::{Boundary, Engine, ExperimentConfig, Mode, PreheatConfig, PreheatScope, Resource, TiltKind};

use crate::CliError;

/// Keys accepted by `qme` and `qpme` runs.
pub const EXPERIMENT_KEYS: &[&str] = &[
    "mode",
    "resource",
    "engine",
    "n_sites",
    "local_dim",
    "n_a",
    "boundary",
    "theta_values",
    "p_values",
    "tilt",
    "epsilon",
    "swap_probability",
    "gaussian_scale",
    "clifford_word_length",
    "preheat_depths",
    "epsilon_a",
    "epsilon_b",
    "preheat_scope",
    "depth",
    "n_realizations",
    "master_seed",
    "sample_stride",
    "crossing_sigma",
    "crossing_window",
    "svg",
];

/// Keys accepted by `markov` runs.
pub const MARKOV_KEYS: &[&str] =
    &["mode", "n_sites", "n_a", "theta_values", "steps", "reunitarize", "crossing_sigma", "crossing_window", "svg"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: String,
}

/// Raw assignments from a file followed by command-line overrides; later
/// assignments win.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

impl KeyValues {
    pub fn parse(text: &str, source: &str) -> Result<Self, CliError> {
        let mut kv = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = format!("{source}:{}", lineno + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}: expected `key = value`, got `{line}`")))?;
            kv.insert(key.trim(), value.trim(), origin)?;
        }
        Ok(kv)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn insert(&mut self, key: &str, value: &str, origin: String) -> Result<(), CliError> {
        if key.is_empty() {
            return Err(CliError::Config(format!("{origin}: empty key")));
        }
        self.entries.insert(key.to_string(), Entry { value: value.to_string(), origin });
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{assignment}`: expected key=value")))?;
        self.insert(key.trim(), value.trim(), "--set".into())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn check_known(&self, allowed: &[&str]) -> Result<(), CliError> {
        match self.entries.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, e)) => Err(CliError::Config(format!("{k}: unknown key ({})", e.origin))),
            None => Ok(()),
        }
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn get<T: FromStr>(&self, key: &str, expected: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|e| {
                e.value
                    .parse()
                    .map_err(|_| CliError::Config(format!("{key}: expected {expected}, got `{}` ({})", e.value, e.origin)))
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str, expected: &str) -> Result<T, CliError> {
        self.get(key, expected)?
            .ok_or_else(|| CliError::Config(format!("{key}: required key missing")))
    }

    fn list<T: FromStr>(&self, key: &str, expected: &str) -> Result<Option<Vec<T>>, CliError> {
        self.raw(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse().map_err(|_| {
                            CliError::Config(format!("{key}: expected a list of {expected}, got `{s}` ({})", e.origin))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    fn keyword<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|e| e.value.parse().map_err(|err| CliError::Config(format!("{key}: {err} ({})", e.origin))))
            .transpose()
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.get(key, "true or false")
    }
}

pub fn tilt_keyword(tilt: TiltKind) -> &'static str {
    match tilt {
        TiltKind::Y => "y",
        TiltKind::X => "x",
        TiltKind::QutritX => "qutrit_x",
    }
}

fn parse_tilt(kv: &KeyValues) -> Result<Option<TiltKind>, CliError> {
    kv.raw("tilt")
        .map(|e| match e.value.as_str() {
            "y" => Ok(TiltKind::Y),
            "x" => Ok(TiltKind::X),
            "qutrit_x" => Ok(TiltKind::QutritX),
            other => Err(CliError::Config(format!("tilt: unknown tilt `{other}` (expected one of: y, x, qutrit_x)"))),
        })
        .transpose()
}

fn check_mode(kv: &KeyValues, expected: &str) -> Result<(), CliError> {
    match kv.raw("mode") {
        Some(e) if e.value != expected => Err(CliError::Config(format!(
            "mode: config says `{}` but the subcommand is `{expected}` ({})",
            e.value, e.origin
        ))),
        _ => Ok(()),
    }
}

fn crossing_rule(kv: &KeyValues) -> Result<CrossingRule, CliError> {
    Ok(CrossingRule {
        sigma: kv.get("crossing_sigma", "a real number")?.unwrap_or(DEFAULT_CROSSING_SIGMA),
        window: kv.get("crossing_window", "a positive integer")?.unwrap_or(DEFAULT_CROSSING_WINDOW),
    })
}

fn check_distinct(key: &str, values: &[f64]) -> Result<(), CliError> {
    for (i, v) in values.iter().enumerate() {
        if values[..i].contains(v) {
            return Err(CliError::Config(format!("{key}: duplicate value {v}")));
        }
    }
    Ok(())
}

/// Resolved `qme`/`qpme` run: the experiment plus output options.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentFile {
    pub experiment: ExperimentConfig,
    pub svg: bool,
}

/// Builds a validated experiment for `mode` from raw assignments, applying
/// every default.
pub fn experiment_from_keys(kv: &KeyValues, mode: Mode) -> Result<ExperimentFile, CliError> {
    kv.check_known(EXPERIMENT_KEYS)?;
    check_mode(kv, mode.keyword())?;
    let resource: Resource = kv.keyword("resource")?.ok_or_else(|| CliError::Config("resource: required key missing".into()))?;
    let engine: Engine = kv.keyword("engine")?.unwrap_or(Engine::Dense);
    let n_sites: usize = kv.require("n_sites", "a positive integer")?;
    let n_a: usize = kv.require("n_a", "a positive integer")?;

    let (values_key, other_key) = match engine {
        Engine::Dense => ("theta_values", "p_values"),
        Engine::Stabilizer => ("p_values", "theta_values"),
    };
    if kv.contains(other_key) {
        return Err(CliError::Config(format!("{other_key}: not used by the {engine} engine, use {values_key}")));
    }
    let values: Vec<f64> = kv
        .list(values_key, "real numbers")?
        .ok_or_else(|| CliError::Config(format!("{values_key}: required key missing")))?;
    check_distinct(values_key, &values)?;

    let epsilon: f64 = match engine {
        Engine::Dense => kv.require("epsilon", "a real number in [0, 1]")?,
        Engine::Stabilizer => kv.get("epsilon", "a real number in [0, 1]")?.unwrap_or(1.0),
    };
    let mut cfg = match engine {
        Engine::Dense => ExperimentConfig::qme(resource, n_sites, n_a, values, epsilon),
        Engine::Stabilizer => {
            let mut c = ExperimentConfig::stabilizer(n_sites, n_a, values, epsilon);
            c.resource = resource;
            c
        }
    };
    cfg.mode = mode;
    cfg.depth = kv.require("depth", "a non-negative integer")?;
    cfg.n_realizations = kv.require("n_realizations", "a positive integer")?;
    cfg.master_seed = kv.require("master_seed", "a non-negative integer")?;
    if let Some(d) = kv.get("local_dim", "an integer")? {
        cfg.local_dim = d;
    }
    if let Some(b) = kv.keyword::<Boundary>("boundary")? {
        cfg.boundary = b;
    }
    if let Some(t) = parse_tilt(kv)? {
        cfg.tilt = t;
    }
    if let Some(p) = kv.get("swap_probability", "a real number in [0, 1]")? {
        cfg.swap_probability = p;
    }
    if let Some(s) = kv.get("gaussian_scale", "a positive real number")? {
        cfg.gaussian_scale = s;
    }
    if let Some(l) = kv.get("clifford_word_length", "a positive integer")? {
        cfg.clifford_word_length = l;
    }
    if let Some(s) = kv.get("sample_stride", "a positive integer")? {
        cfg.sample_stride = s;
    }
    cfg.crossing = crossing_rule(kv)?;

    const PREHEAT_KEYS: [&str; 4] = ["preheat_depths", "epsilon_a", "epsilon_b", "preheat_scope"];
    match mode {
        Mode::Qme => {
            if let Some(k) = PREHEAT_KEYS.iter().find(|k| kv.contains(k)) {
                return Err(CliError::Config(format!("{k}: only valid for qpme runs")));
            }
        }
        Mode::Qpme => {
            let depths: Vec<usize> = kv
                .list("preheat_depths", "non-negative integers")?
                .ok_or_else(|| CliError::Config("preheat_depths: required key missing".into()))?;
            let scope: PreheatScope = kv.keyword("preheat_scope")?.unwrap_or(PreheatScope::Both);
            let epsilon_a = match scope {
                PreheatScope::Both => kv.require("epsilon_a", "a real number in [0, 1]")?,
                PreheatScope::BOnly => kv.get("epsilon_a", "a real number in [0, 1]")?.unwrap_or(0.0),
            };
            let epsilon_b = kv.require("epsilon_b", "a real number in [0, 1]")?;
            cfg.preheat = Some(PreheatConfig { depths, epsilon_a, epsilon_b, scope });
        }
    }
    cfg.validate()?;
    let svg = kv.boolean("svg")?.unwrap_or(false);
    Ok(ExperimentFile { experiment: cfg, svg })
}

/// Reads a config file (optional) and applies overrides.
pub fn load_keys(path: Option<&Path>, overrides: &[String]) -> Result<KeyValues, CliError> {
    let mut kv = match path {
        Some(p) => KeyValues::read(p)?,
        None => KeyValues::default(),
    };
    for o in overrides {
        kv.set(o)?;
    }
    Ok(kv)
}

/// Parses a `qme`/`qpme` config file.
pub fn parse_config(path: &Path, mode: Mode) -> Result<ExperimentFile, CliError> {
    experiment_from_keys(&KeyValues::read(path)?, mode)
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

/// Fully resolved config in the input syntax; parsing it back yields the same
/// experiment.
pub fn echo_experiment(file: &ExperimentFile) -> String {
    let c = &file.experiment;
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("write to string");
    line("mode", c.mode.to_string());
    line("resource", c.resource.to_string());
    line("engine", c.engine.to_string());
    line("n_sites", c.n_sites.to_string());
    line("local_dim", c.local_dim.to_string());
    line("n_a", c.region_size.to_string());
    line("boundary", c.boundary.to_string());
    let values_key = if c.engine == Engine::Stabilizer { "p_values" } else { "theta_values" };
    line(values_key, join(&c.values));
    line("tilt", tilt_keyword(c.tilt).to_string());
    line("epsilon", c.epsilon.to_string());
    line("swap_probability", c.swap_probability.to_string());
    line("gaussian_scale", c.gaussian_scale.to_string());
    line("clifford_word_length", c.clifford_word_length.to_string());
    if let Some(p) = &c.preheat {
        line("preheat_depths", join(&p.depths));
        line("epsilon_a", p.epsilon_a.to_string());
        line("epsilon_b", p.epsilon_b.to_string());
        line("preheat_scope", p.scope.to_string());
    }
    line("depth", c.depth.to_string());
    line("n_realizations", c.n_realizations.to_string());
    line("master_seed", c.master_seed.to_string());
    line("sample_stride", c.sample_stride.to_string());
    line("crossing_sigma", c.crossing.sigma.to_string());
    line("crossing_window", c.crossing.window.to_string());
    line("svg", file.svg.to_string());
    out
}

/// Markov analysis of the fixed Floquet circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovConfig {
    pub n_sites: usize,
    pub n_a: usize,
    pub theta_values: Vec<f64>,
    pub steps: usize,
    pub reunitarize: bool,
    pub crossing: CrossingRule,
    pub svg: bool,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        Self {
            n_sites: 6,
            n_a: 2,
            theta_values: vec![0.2, 0.6, 1.0, 1.4],
            steps: 20,
            reunitarize: true,
            crossing: CrossingRule::default(),
            svg: false,
        }
    }
}

pub fn markov_from_keys(kv: &KeyValues) -> Result<MarkovConfig, CliError> {
    kv.check_known(MARKOV_KEYS)?;
    check_mode(kv, "markov")?;
    let d = MarkovConfig::default();
    let cfg = MarkovConfig {
        n_sites: kv.get("n_sites", "an even integer in 2..=12")?.unwrap_or(d.n_sites),
        n_a: kv.get("n_a", "a positive integer")?.unwrap_or(d.n_a),
        theta_values: kv.list("theta_values", "real numbers")?.unwrap_or(d.theta_values),
        steps: kv.get("steps", "a non-negative integer")?.unwrap_or(d.steps),
        reunitarize: kv.boolean("reunitarize")?.unwrap_or(d.reunitarize),
        crossing: crossing_rule(kv)?,
        svg: kv.boolean("svg")?.unwrap_or(d.svg),
    };
    if cfg.n_sites % 2 != 0 || !(2..=mpemba_core::markov::MAX_SITES).contains(&cfg.n_sites) {
        return Err(CliError::Config(format!(
            "n_sites: {} must be even and in 2..={}",
            cfg.n_sites,
            mpemba_core::markov::MAX_SITES
        )));
    }
    if cfg.n_a == 0 || cfg.n_a >= cfg.n_sites {
        return Err(CliError::Config(format!("n_a: {} not in 1..{}", cfg.n_a, cfg.n_sites)));
    }
    if cfg.theta_values.is_empty() || cfg.theta_values.iter().any(|t| !t.is_finite()) {
        return Err(CliError::Config("theta_values: at least one finite value required".into()));
    }
    check_distinct("theta_values", &cfg.theta_values)?;
    if cfg.crossing.window == 0 || !(cfg.crossing.sigma >= 0.0) {
        return Err(CliError::Config("crossing_window: window ≥ 1 and sigma ≥ 0 required".into()));
    }
    Ok(cfg)
}

pub fn echo_markov(cfg: &MarkovConfig) -> String {
    format!(
        "mode = markov\nn_sites = {}\nn_a = {}\ntheta_values = {}\nsteps = {}\nreunitarize = {}\ncrossing_sigma = {}\ncrossing_window = {}\nsvg = {}\n",
        cfg.n_sites,
        cfg.n_a,
        join(&cfg.theta_values),
        cfg.steps,
        cfg.reunitarize,
        cfg.crossing.sigma,
        cfg.crossing.window,
        cfg.svg
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# coherence QME
mode = qme
resource = coherence
n_sites = 8
n_a = 2
theta_values = 0.5, 1.4   # two tilts
epsilon = 0.4
depth = 10
n_realizations = 20
master_seed = 7
";

    fn qme(text: &str) -> Result<ExperimentFile, CliError> {
        experiment_from_keys(&KeyValues::parse(text, "test").unwrap(), Mode::Qme)
    }

    fn message(r: Result<ExperimentFile, CliError>) -> String {
        match r {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let file = qme(MINIMAL).unwrap();
        let c = &file.experiment;
        assert_eq!(c.values, vec![0.5, 1.4]);
        assert_eq!(c.engine, Engine::Dense);
        assert_eq!(c.boundary, Boundary::Periodic);
        assert_eq!(c.tilt, TiltKind::Y);
        assert_eq!(c.local_dim, 2);
        assert_eq!(c.sample_stride, 1);
        assert_eq!(c.crossing, CrossingRule::default());
        assert!(!file.svg);
        let echo = echo_experiment(&file);
        assert!(echo.contains("swap_probability = 0.5\n"));
        assert!(echo.contains("boundary = periodic\n"));
    }

    #[test]
    fn echo_parses_back_to_the_same_config() {
        let file = qme(MINIMAL).unwrap();
        assert_eq!(qme(&echo_experiment(&file)).unwrap(), file);
        let qpme_text = "resource = non_gaussianity\nn_sites = 8\nn_a = 2\ntheta_values = 0.7\nepsilon = 0.9\n\
            preheat_depths = 0, 2, 4\nepsilon_a = 0.25\nepsilon_b = 1\ndepth = 10\nn_realizations = 4\nmaster_seed = 1\n";
        let kv = KeyValues::parse(qpme_text, "test").unwrap();
        let file = experiment_from_keys(&kv, Mode::Qpme).unwrap();
        assert_eq!(file.experiment.boundary, Boundary::Open);
        let back = experiment_from_keys(&KeyValues::parse(&echo_experiment(&file), "echo").unwrap(), Mode::Qpme).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn out_of_range_epsilon_names_key() {
        let m = message(qme(&MINIMAL.replace("epsilon = 0.4", "epsilon = 1.5")));
        assert!(m.starts_with("epsilon:"), "{m}");
        assert!(m.contains("[0, 1]"), "{m}");
    }

    #[test]
    fn unknown_key_is_an_error() {
        let m = message(qme(&format!("{MINIMAL}colour = blue\n")));
        assert!(m.starts_with("colour: unknown key"), "{m}");
    }

    #[test]
    fn type_mismatch_names_key() {
        let m = message(qme(&MINIMAL.replace("n_sites = 8", "n_sites = eight")));
        assert!(m.starts_with("n_sites: expected"), "{m}");
        let m = message(qme(&MINIMAL.replace("resource = coherence", "resource = entanglement")));
        assert!(m.starts_with("resource:"), "{m}");
    }

    #[test]
    fn missing_key_is_named() {
        let m = message(qme(&MINIMAL.replace("depth = 10\n", "")));
        assert_eq!(m, "depth: required key missing");
    }

    #[test]
    fn invariant_violations_name_key() {
        let m = message(qme(&MINIMAL.replace("n_a = 2", "n_a = 9")));
        assert!(m.starts_with("n_a:"), "{m}");
        let m = message(qme(&format!("{MINIMAL}epsilon_a = 0.2\n")));
        assert!(m.starts_with("epsilon_a:"), "{m}");
        let m = message(qme(&MINIMAL.replace("0.5, 1.4", "0.5, 0.5")));
        assert!(m.starts_with("theta_values: duplicate"), "{m}");
    }

    #[test]
    fn mode_must_match_subcommand() {
        let kv = KeyValues::parse(MINIMAL, "test").unwrap();
        let m = message(experiment_from_keys(&kv, Mode::Qpme));
        assert!(m.starts_with("mode:"), "{m}");
    }

    #[test]
    fn overrides_win() {
        let mut kv = KeyValues::parse(MINIMAL, "test").unwrap();
        kv.set("depth=3").unwrap();
        kv.set("svg = true").unwrap();
        let file = experiment_from_keys(&kv, Mode::Qme).unwrap();
        assert_eq!(file.experiment.depth, 3);
        assert!(file.svg);
        assert!(matches!(kv.set("depth"), Err(CliError::Config(_))));
    }

    #[test]
    fn stabilizer_configs_use_p_values() {
        let text = "resource = coherence\nengine = stabilizer\nn_sites = 256\nn_a = 4\np_values = 0.3, 0.9\n\
            depth = 10\nn_realizations = 2\nmaster_seed = 3\n";
        let file = qme(text).unwrap();
        assert_eq!(file.experiment.epsilon, 1.0);
        assert_eq!(file.experiment.sample_stride, 2);
        let m = message(qme(&text.replace("p_values", "theta_values")));
        assert!(m.starts_with("theta_values:"), "{m}");
    }

    #[test]
    fn malformed_line_is_reported_with_location() {
        let err = KeyValues::parse("n_sites 8\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("cfg:1"));
    }

    #[test]
    fn markov_defaults_and_errors() {
        let cfg = markov_from_keys(&KeyValues::default()).unwrap();
        assert_eq!(cfg, MarkovConfig::default());
        let back = markov_from_keys(&KeyValues::parse(&echo_markov(&cfg), "echo").unwrap()).unwrap();
        assert_eq!(back, cfg);
        let kv = KeyValues::parse("n_sites = 7\n", "t").unwrap();
        assert!(markov_from_keys(&kv).unwrap_err().to_string().contains("n_sites"));
        let kv = KeyValues::parse("epsilon = 0.1\n", "t").unwrap();
        assert!(markov_from_keys(&kv).unwrap_err().to_string().contains("epsilon: unknown key"));
    }
}
