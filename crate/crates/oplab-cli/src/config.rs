//! Experiment configuration: a flat `key = value` file with `[section]`
//! headers, no nesting.
//!
//! Full-line comments start with `#`. Validation reports every problem with
//! its line number and never partially applies a file. Unknown sections or
//! keys are errors, so typos cannot silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

/// The named experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Schedule,
    GradCheck,
    BoundsSweep,
    Indicator,
    PlantedTrain,
    LowerBound,
    Corollary,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "schedule" => Self::Schedule,
            "gradcheck" => Self::GradCheck,
            "bounds-sweep" => Self::BoundsSweep,
            "indicator" => Self::Indicator,
            "planted-train" => Self::PlantedTrain,
            "lower-bound" => Self::LowerBound,
            "corollary" => Self::Corollary,
            _ => None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Schedule => "schedule",
            Self::GradCheck => "gradcheck",
            Self::BoundsSweep => "bounds-sweep",
            Self::Indicator => "indicator",
            Self::PlantedTrain => "planted-train",
            Self::LowerBound => "lower-bound",
            Self::Corollary => "corollary",
        }
    }

    /// Experiments whose architecture must support the indicator
    /// construction (`k0 >= 2d`).
    fn needs_indicator_arch(&self) -> bool {
        matches!(
            self,
            Self::Schedule | Self::Indicator | Self::PlantedTrain | Self::Corollary
        )
    }
}

/// `[arch]` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchBlock {
    pub d: usize,
    pub k0: usize,
    pub depth: usize,
    pub kn: usize,
}

/// How grid responses are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseKind {
    /// `+1, -1, +1, ...`
    Alternating,
    /// A gentle ramp `0.9 + 0.01 i`, useful with very small step sizes.
    Ramp,
    Constant(f64),
}

/// `[data]` block.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    /// `x_i = i/n` on the line with a synthetic response.
    Grid { n: usize, response: ResponseKind },
    /// CSV file with `d` feature columns then one response column.
    File { path: PathBuf, has_header: bool },
    /// Sampled from the adversarial grid design.
    Adversarial { n: usize },
}

/// Step-size rule for training experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    Fixed(f64),
    /// Reciprocal of the gradient-smoothness constant evaluated at the
    /// data's norm level.
    Auto,
}

/// `[run]` block; unused fields are ignored by experiments that do not need
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBlock {
    pub seed: u64,
    pub lambda: LambdaRule,
    pub steps: usize,
    pub stop_gap: Option<f64>,
    /// Uniform range for randomly initialized inner weights; defaults to
    /// `n^4` when absent.
    pub bound: Option<f64>,
    pub replications: usize,
    pub trials: usize,
    pub pairs: usize,
    pub configs: usize,
    pub rectangles: usize,
    pub probes: usize,
    pub perturbations: usize,
    pub sharpness: u32,
    pub corrupt: bool,
    pub kappa_target: f64,
    pub chain_max: usize,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            seed: 42,
            lambda: LambdaRule::Fixed(0.25),
            steps: 2000,
            stop_gap: None,
            bound: None,
            replications: 1000,
            trials: 1000,
            pairs: 500,
            configs: 100,
            rectangles: 50,
            probes: 10_000,
            perturbations: 1000,
            sharpness: 5,
            corrupt: false,
            kappa_target: 1e-3,
            chain_max: 1000,
        }
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub arch: ArchBlock,
    pub data: DataSpec,
    pub run: RunBlock,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

impl ExperimentConfig {
    pub fn default_for(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            arch: ArchBlock {
                d: 1,
                k0: 2,
                depth: 2,
                kn: 10,
            },
            data: DataSpec::Grid {
                n: 10,
                response: ResponseKind::Alternating,
            },
            run: RunBlock::default(),
            out_dir: PathBuf::from("out"),
            quiet: false,
        }
    }

    /// Cross-field constraints, re-checked after flag overrides.
    pub fn check(&self) -> Vec<ConfigError> {
        let mut errors = Vec::new();
        let mut err = |message: String| {
            errors.push(ConfigError { line: 0, message });
        };
        if self.arch.d < 1 || self.arch.k0 < 1 || self.arch.kn < 1 {
            err(format!(
                "[arch] d, k0, kn must be >= 1 (d={}, k0={}, kn={})",
                self.arch.d, self.arch.k0, self.arch.kn
            ));
        }
        if self.arch.depth < 2 {
            err(format!("[arch] L must be >= 2, got {}", self.arch.depth));
        }
        if self.experiment.needs_indicator_arch() && self.arch.k0 < 2 * self.arch.d {
            err(format!(
                "experiment `{}` needs k0 >= 2d (k0={}, d={})",
                self.experiment.name(),
                self.arch.k0,
                self.arch.d
            ));
        }
        match &self.data {
            DataSpec::Grid { n, .. } | DataSpec::Adversarial { n } => {
                if *n < 1 {
                    err("[data] n must be >= 1".into());
                }
            }
            DataSpec::File { path, .. } => {
                if !path.exists() {
                    err(format!("[data] file {} does not exist", path.display()));
                }
            }
        }
        if let LambdaRule::Fixed(l) = self.run.lambda {
            if !(l > 0.0) || !l.is_finite() {
                err(format!("[run] lambda must be positive, got {l}"));
            }
        }
        if let Some(g) = self.run.stop_gap {
            if !(g > 0.0) || !g.is_finite() {
                err(format!("[run] stop_gap must be positive, got {g}"));
            }
        }
        if let Some(b) = self.run.bound {
            if !(b > 0.0) || !b.is_finite() {
                err(format!("[run] bound must be positive, got {b}"));
            }
        }
        if !(self.run.kappa_target > 0.0) {
            err("[run] kappa_target must be positive".into());
        }
        errors
    }

    /// Canonical echo of every resolved field; the summary embeds it and the
    /// content hash is taken over it.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("experiment = {}\n", self.experiment.name()));
        s.push_str(&format!("quiet = {}\n", self.quiet));
        s.push_str("[arch]\n");
        s.push_str(&format!("d = {}\n", self.arch.d));
        s.push_str(&format!("k0 = {}\n", self.arch.k0));
        s.push_str(&format!("L = {}\n", self.arch.depth));
        s.push_str(&format!("kn = {}\n", self.arch.kn));
        s.push_str("[data]\n");
        match &self.data {
            DataSpec::Grid { n, response } => {
                s.push_str("kind = grid\n");
                s.push_str(&format!("n = {n}\n"));
                let r = match response {
                    ResponseKind::Alternating => "alternating".to_string(),
                    ResponseKind::Ramp => "ramp".to_string(),
                    ResponseKind::Constant(v) => format!("constant:{v}"),
                };
                s.push_str(&format!("response = {r}\n"));
            }
            DataSpec::File { path, has_header } => {
                s.push_str("kind = file\n");
                s.push_str(&format!("path = {}\n", path.display()));
                s.push_str(&format!("has_header = {has_header}\n"));
            }
            DataSpec::Adversarial { n } => {
                s.push_str("kind = adversarial\n");
                s.push_str(&format!("n = {n}\n"));
            }
        }
        s.push_str("[run]\n");
        s.push_str(&format!("seed = {}\n", self.run.seed));
        match self.run.lambda {
            LambdaRule::Fixed(l) => s.push_str(&format!("lambda = {l}\n")),
            LambdaRule::Auto => s.push_str("lambda = auto\n"),
        }
        s.push_str(&format!("steps = {}\n", self.run.steps));
        if let Some(g) = self.run.stop_gap {
            s.push_str(&format!("stop_gap = {g}\n"));
        }
        if let Some(b) = self.run.bound {
            s.push_str(&format!("bound = {b}\n"));
        }
        s.push_str(&format!("replications = {}\n", self.run.replications));
        s.push_str(&format!("trials = {}\n", self.run.trials));
        s.push_str(&format!("pairs = {}\n", self.run.pairs));
        s.push_str(&format!("configs = {}\n", self.run.configs));
        s.push_str(&format!("rectangles = {}\n", self.run.rectangles));
        s.push_str(&format!("probes = {}\n", self.run.probes));
        s.push_str(&format!("perturbations = {}\n", self.run.perturbations));
        s.push_str(&format!("sharpness = {}\n", self.run.sharpness));
        s.push_str(&format!("corrupt = {}\n", self.run.corrupt));
        s.push_str(&format!("kappa_target = {}\n", self.run.kappa_target));
        s.push_str(&format!("chain_max = {}\n", self.run.chain_max));
        s.push_str("[output]\n");
        s.push_str(&format!("dir = {}\n", self.out_dir.display()));
        s
    }
}

/// One validation problem, anchored to its line (0 for cross-field or
/// missing-field problems).
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            write!(f, "{}", self.message)
        }
    }
}

struct RawEntry {
    line: usize,
    value: String,
}

/// Parses and fully validates a config file's text.
pub fn validate_config_text(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
    let mut section = String::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !matches!(name, "arch" | "data" | "run" | "output") {
                errors.push(ConfigError {
                    line,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = name.to_string();
            continue;
        }
        match trimmed.split_once('=') {
            Some((key, value)) => {
                let key = key.trim();
                let full = if section.is_empty() {
                    key.to_string()
                } else {
                    format!("{section}.{key}")
                };
                if entries.contains_key(&full) {
                    errors.push(ConfigError {
                        line,
                        message: format!("duplicate key `{full}`"),
                    });
                }
                entries.insert(
                    full,
                    RawEntry {
                        line,
                        value: value.trim().to_string(),
                    },
                );
            }
            None => errors.push(ConfigError {
                line,
                message: format!("expected `key = value`, got {trimmed:?}"),
            }),
        }
    }

    let experiment = match entries.remove("experiment") {
        Some(entry) => match ExperimentKind::parse(&entry.value) {
            Some(kind) => Some(kind),
            None => {
                errors.push(ConfigError {
                    line: entry.line,
                    message: format!(
                        "unknown experiment {:?}; expected one of gradcheck, bounds-sweep, \
                         indicator, planted-train, schedule, lower-bound, corollary",
                        entry.value
                    ),
                });
                None
            }
        },
        None => {
            errors.push(ConfigError {
                line: 0,
                message: "missing required key `experiment`".into(),
            });
            None
        }
    };

    let mut cfg = ExperimentConfig::default_for(experiment.unwrap_or(ExperimentKind::Schedule));

    macro_rules! take {
        ($key:expr, $parse:expr) => {
            if let Some(entry) = entries.remove($key) {
                #[allow(clippy::redundant_closure_call)]
                match ($parse)(entry.value.as_str()) {
                    Ok(v) => Some(v),
                    Err(msg) => {
                        errors.push(ConfigError {
                            line: entry.line,
                            message: format!("key `{}`: {msg}", $key),
                        });
                        None
                    }
                }
            } else {
                None
            }
        };
    }
    fn num<T: std::str::FromStr>(s: &str) -> Result<T, String>
    where
        T::Err: fmt::Display,
    {
        s.parse::<T>().map_err(|e| format!("bad value {s:?}: {e}"))
    }
    fn boolean(s: &str) -> Result<bool, String> {
        match s {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(format!("bad boolean {s:?}")),
        }
    }

    if let Some(q) = take!("quiet", boolean) {
        cfg.quiet = q;
    }
    if let Some(v) = take!("arch.d", num::<usize>) {
        cfg.arch.d = v;
    }
    if let Some(v) = take!("arch.k0", num::<usize>) {
        cfg.arch.k0 = v;
    }
    if let Some(v) = take!("arch.L", num::<usize>) {
        cfg.arch.depth = v;
    }
    if let Some(v) = take!("arch.kn", num::<usize>) {
        cfg.arch.kn = v;
    }

    let data_kind = take!("data.kind", |s: &str| -> Result<String, String> {
        match s {
            "grid" | "file" | "adversarial" => Ok(s.to_string()),
            _ => Err(format!("bad data kind {s:?}")),
        }
    });
    let data_n = take!("data.n", num::<usize>);
    let data_path = take!("data.path", |s: &str| -> Result<PathBuf, String> {
        Ok(PathBuf::from(s))
    });
    let has_header = take!("data.has_header", boolean).unwrap_or(false);
    let response = take!("data.response", |s: &str| -> Result<ResponseKind, String> {
        match s {
            "alternating" => Ok(ResponseKind::Alternating),
            "ramp" => Ok(ResponseKind::Ramp),
            _ => match s.strip_prefix("constant:") {
                Some(v) => num::<f64>(v).map(ResponseKind::Constant),
                None => Err(format!("bad response kind {s:?}")),
            },
        }
    });
    match data_kind.as_deref() {
        Some("file") => match data_path {
            Some(path) => {
                cfg.data = DataSpec::File { path, has_header };
            }
            None => errors.push(ConfigError {
                line: 0,
                message: "data kind `file` needs `path`".into(),
            }),
        },
        Some("adversarial") => {
            cfg.data = DataSpec::Adversarial {
                n: data_n.unwrap_or(10),
            };
        }
        Some("grid") | None => {
            cfg.data = DataSpec::Grid {
                n: data_n.unwrap_or(10),
                response: response.unwrap_or(ResponseKind::Alternating),
            };
        }
        _ => unreachable!(),
    }

    if let Some(v) = take!("run.seed", num::<u64>) {
        cfg.run.seed = v;
    }
    if let Some(v) = take!("run.lambda", |s: &str| -> Result<LambdaRule, String> {
        if s == "auto" {
            Ok(LambdaRule::Auto)
        } else {
            num::<f64>(s).map(LambdaRule::Fixed)
        }
    }) {
        cfg.run.lambda = v;
    }
    if let Some(v) = take!("run.steps", num::<usize>) {
        cfg.run.steps = v;
    }
    if let Some(v) = take!("run.stop_gap", num::<f64>) {
        cfg.run.stop_gap = Some(v);
    }
    if let Some(v) = take!("run.bound", num::<f64>) {
        cfg.run.bound = Some(v);
    }
    if let Some(v) = take!("run.replications", num::<usize>) {
        cfg.run.replications = v;
    }
    if let Some(v) = take!("run.trials", num::<usize>) {
        cfg.run.trials = v;
    }
    if let Some(v) = take!("run.pairs", num::<usize>) {
        cfg.run.pairs = v;
    }
    if let Some(v) = take!("run.configs", num::<usize>) {
        cfg.run.configs = v;
    }
    if let Some(v) = take!("run.rectangles", num::<usize>) {
        cfg.run.rectangles = v;
    }
    if let Some(v) = take!("run.probes", num::<usize>) {
        cfg.run.probes = v;
    }
    if let Some(v) = take!("run.perturbations", num::<usize>) {
        cfg.run.perturbations = v;
    }
    if let Some(v) = take!("run.sharpness", num::<u32>) {
        cfg.run.sharpness = v;
    }
    if let Some(v) = take!("run.corrupt", boolean) {
        cfg.run.corrupt = v;
    }
    if let Some(v) = take!("run.kappa_target", num::<f64>) {
        cfg.run.kappa_target = v;
    }
    if let Some(v) = take!("run.chain_max", num::<usize>) {
        cfg.run.chain_max = v;
    }
    if let Some(v) = take!("output.dir", |s: &str| -> Result<PathBuf, String> {
        Ok(PathBuf::from(s))
    }) {
        cfg.out_dir = v;
    }

    for (key, entry) in &entries {
        errors.push(ConfigError {
            line: entry.line,
            message: format!("unknown key `{key}`"),
        });
    }
    errors.extend(cfg.check());

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Reads and validates a config file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![ConfigError {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        }]
    })?;
    validate_config_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = validate_config_text("experiment = schedule\n").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Schedule);
        assert_eq!(cfg.arch.k0, 2);
        assert_eq!(cfg.run.seed, 42);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn indicator_rejects_narrow_architecture() {
        let text = "experiment = indicator\n[arch]\nd = 1\nk0 = 1\n";
        let errors = validate_config_text(text).unwrap_err();
        assert!(errors.iter().any(|e| e.message.contains("k0 >= 2d")));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "experiment = gradcheck\n[run]\nseed = notanumber\nbogus_key = 1\n";
        let errors = validate_config_text(text).unwrap_err();
        assert!(errors.iter().any(|e| e.line == 3));
        assert!(errors
            .iter()
            .any(|e| e.line == 4 && e.message.contains("unknown key")));
    }

    #[test]
    fn unknown_experiment_and_sections_are_rejected() {
        let errors = validate_config_text("experiment = warp\n[misc]\nx = 1\n").unwrap_err();
        assert!(errors.iter().any(|e| e.message.contains("unknown experiment")));
        assert!(errors.iter().any(|e| e.message.contains("unknown section")));
    }

    #[test]
    fn full_round_trip_through_echo() {
        let text = "\
experiment = planted-train
[arch]
d = 1
k0 = 2
L = 2
kn = 10
[data]
kind = grid
n = 10
response = ramp
[run]
seed = 7
lambda = auto
steps = 500
[output]
dir = results
";
        let cfg = validate_config_text(text).unwrap();
        assert_eq!(cfg.run.lambda, LambdaRule::Auto);
        // the echo is itself a valid config that resolves identically
        let again = validate_config_text(&cfg.echo()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn missing_file_is_reported() {
        let text = "experiment = gradcheck\n[data]\nkind = file\npath = /no/such/file.csv\n";
        let errors = validate_config_text(text).unwrap_err();
        assert!(errors.iter().any(|e| e.message.contains("does not exist")));
    }
}
