//! Run configuration: a line-oriented `key = value` format with `[section]`
//! headers. Unknown keys and duplicate keys are hard errors with line
//! numbers, so a typo never silently falls back to a default.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("unknown key {key:?} (line {line})")]
    UnknownKey { key: String, line: usize },
    #[error("duplicate key {key:?} on lines {first} and {second}")]
    DuplicateKey {
        key: String,
        first: usize,
        second: usize,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    QuadraticCycleRegret,
    RbfDiscovery,
    RbfOptimize,
    TransformedPipeline,
    CoverageDemo,
    SteinCheck,
}

impl ExperimentKind {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(match text {
            "quadratic-cycle-regret" => ExperimentKind::QuadraticCycleRegret,
            "rbf-discovery" => ExperimentKind::RbfDiscovery,
            "rbf-optimize" => ExperimentKind::RbfOptimize,
            "transformed-pipeline" => ExperimentKind::TransformedPipeline,
            "coverage-demo" => ExperimentKind::CoverageDemo,
            "stein-check" => ExperimentKind::SteinCheck,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown experiment kind {other:?}"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::QuadraticCycleRegret => "quadratic-cycle-regret",
            ExperimentKind::RbfDiscovery => "rbf-discovery",
            ExperimentKind::RbfOptimize => "rbf-optimize",
            ExperimentKind::TransformedPipeline => "transformed-pipeline",
            ExperimentKind::CoverageDemo => "coverage-demo",
            ExperimentKind::SteinCheck => "stein-check",
        }
    }

    fn default_methods(&self) -> Vec<Method> {
        match self {
            ExperimentKind::QuadraticCycleRegret => {
                vec![Method::Fgm, Method::BestInDataset]
            }
            ExperimentKind::RbfOptimize => vec![Method::Fgm],
            ExperimentKind::TransformedPipeline => {
                vec![Method::VaeFgm, Method::NaiveFull]
            }
            _ => vec![],
        }
    }

    fn supported_methods(&self) -> &'static [Method] {
        match self {
            ExperimentKind::QuadraticCycleRegret => {
                &[Method::Fgm, Method::BestInDataset, Method::NaiveFull]
            }
            ExperimentKind::RbfOptimize => &[
                Method::Fgm,
                Method::NaiveFull,
                Method::BestInDataset,
                Method::Rwr,
            ],
            ExperimentKind::TransformedPipeline => {
                &[Method::VaeFgm, Method::VaeGa, Method::NaiveFull]
            }
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Fgm,
    NaiveFull,
    BestInDataset,
    Rwr,
    VaeFgm,
    VaeGa,
}

impl Method {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(match text {
            "fgm" => Method::Fgm,
            "naive-full" => Method::NaiveFull,
            "best-in-dataset" => Method::BestInDataset,
            "rwr" => Method::Rwr,
            "vae-fgm" => Method::VaeFgm,
            "vae-ga" => Method::VaeGa,
            other => return Err(ConfigError::Invalid(format!("unknown method {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Fgm => "fgm",
            Method::NaiveFull => "naive-full",
            Method::BestInDataset => "best-in-dataset",
            Method::Rwr => "rwr",
            Method::VaeFgm => "vae-fgm",
            Method::VaeGa => "vae-ga",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscoverySettings {
    pub alpha: f64,
    pub whiten: bool,
    /// Replace σ̂ with 1, emulating the unnormalized |Ĥ| ≥ c/√M test.
    pub sigma_hat_one: bool,
    pub ema_momentum: f64,
    pub ema_burn_in: usize,
}

#[derive(Debug, Clone)]
pub struct SurrogateSettings {
    /// Ridge weight is `lambda_scale · n`.
    pub lambda_scale: f64,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub holdout: f64,
    pub shared: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizeSettings {
    pub steps: usize,
    pub lr: f64,
    pub batch: usize,
    pub learn_std: bool,
    pub init_std: f64,
    pub mc_samples: usize,
    pub rwr_temperature: f64,
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct VaeSettings {
    /// 0 means "use the benchmark dimension".
    pub d_z: usize,
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    /// Feed the EMA pseudo-Hessian tracker during VAE training instead of
    /// running discovery once on the final encodings.
    pub interleaved: bool,
    /// Epochs between EMA updates in interleaved mode.
    pub ema_every: usize,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub d: usize,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub out: String,
    pub discovery: DiscoverySettings,
    pub surrogate: SurrogateSettings,
    pub optimize: OptimizeSettings,
    pub vae: VaeSettings,
    /// Raw config text, echoed into the sidecar metadata.
    pub source: String,
}

struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|(_, v)| v)
    }
}

fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut section = String::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') || line.len() < 3 {
                return Err(ConfigError::Malformed {
                    line: lineno,
                    msg: format!("bad section header {line:?}"),
                });
            }
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Malformed {
                line: lineno,
                msg: format!("expected 'key = value', got {line:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigError::Malformed {
                line: lineno,
                msg: "empty key".to_string(),
            });
        }
        let full_key = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        if let Some((first, _)) = entries.get(&full_key) {
            return Err(ConfigError::DuplicateKey {
                key: full_key,
                first: *first,
                second: lineno,
            });
        }
        entries.insert(full_key, (lineno, value.to_string()));
    }
    Ok(RawConfig { entries })
}

fn parse_usize(raw: &RawConfig, key: &str) -> Result<Option<usize>, ConfigError> {
    parse_with(raw, key, |v| v.parse::<usize>().ok())
}

fn parse_u64_list(value: &str) -> Option<Vec<u64>> {
    value
        .split(',')
        .map(|t| t.trim().parse::<u64>().ok())
        .collect()
}

fn parse_with<T>(
    raw: &RawConfig,
    key: &str,
    f: impl Fn(&str) -> Option<T>,
) -> Result<Option<T>, ConfigError> {
    match raw.entries.get(key) {
        None => Ok(None),
        Some((line, value)) => f(value).map(Some).ok_or_else(|| ConfigError::Malformed {
            line: *line,
            msg: format!("cannot parse value {value:?} for key {key:?}"),
        }),
    }
}

fn parse_bool(raw: &RawConfig, key: &str) -> Result<Option<bool>, ConfigError> {
    parse_with(raw, key, |v| match v {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    })
}

fn parse_f64(raw: &RawConfig, key: &str) -> Result<Option<f64>, ConfigError> {
    parse_with(raw, key, |v| v.parse::<f64>().ok())
}

fn parse_widths(raw: &RawConfig, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
    parse_with(raw, key, |v| {
        v.split(',')
            .map(|t| t.trim().parse::<usize>().ok().filter(|&w| w > 0))
            .collect()
    })
}

/// Every key the parser accepts; anything else is an error naming the key.
const KNOWN_KEYS: &[&str] = &[
    "kind",
    "d",
    "n",
    "seeds",
    "seed_base",
    "seed_list",
    "methods",
    "out",
    "discovery.alpha",
    "discovery.whiten",
    "discovery.sigma_hat_one",
    "discovery.ema_momentum",
    "discovery.ema_burn_in",
    "surrogate.lambda_scale",
    "surrogate.hidden",
    "surrogate.lr",
    "surrogate.epochs",
    "surrogate.batch",
    "surrogate.holdout",
    "surrogate.shared",
    "optimize.steps",
    "optimize.lr",
    "optimize.batch",
    "optimize.learn_std",
    "optimize.init_std",
    "optimize.mc_samples",
    "optimize.rwr_temperature",
    "optimize.restarts",
    "vae.d_z",
    "vae.hidden",
    "vae.lr",
    "vae.epochs",
    "vae.batch",
    "vae.interleaved",
    "vae.ema_every",
];

/// Parses and validates a configuration, filling documented defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut raw = parse_raw(text)?;
    for (key, (line, _)) in &raw.entries {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                line: *line,
            });
        }
    }

    let kind = match raw.take("kind") {
        Some(v) => ExperimentKind::parse(&v)?,
        None => {
            return Err(ConfigError::Invalid(
                "experiment kind required (key 'kind')".to_string(),
            ))
        }
    };
    let d = parse_usize(&raw, "d")?
        .ok_or_else(|| ConfigError::Invalid("dimension required (key 'd')".to_string()))?;
    let n = parse_usize(&raw, "n")?
        .ok_or_else(|| ConfigError::Invalid("dataset size required (key 'n')".to_string()))?;
    if d < 1 || n < 1 {
        return Err(ConfigError::Invalid("d and n must be at least 1".to_string()));
    }

    let seed_count = parse_usize(&raw, "seeds")?.unwrap_or(1);
    let seed_base = parse_with(&raw, "seed_base", |v| v.parse::<u64>().ok())?.unwrap_or(0);
    let seeds = match parse_with(&raw, "seed_list", |v| parse_u64_list(v))? {
        Some(list) => list,
        None => (0..seed_count as u64).map(|k| seed_base + k).collect(),
    };
    if seeds.is_empty() {
        return Err(ConfigError::Invalid("seed list must be nonempty".to_string()));
    }

    let methods = match raw.take("methods") {
        Some(v) => v
            .split(',')
            .map(|t| Method::parse(t.trim()))
            .collect::<Result<Vec<_>, _>>()?,
        None => kind.default_methods(),
    };
    for m in &methods {
        if !kind.supported_methods().contains(m) {
            return Err(ConfigError::Invalid(format!(
                "method {:?} is not supported by experiment kind {:?}",
                m.name(),
                kind.name()
            )));
        }
    }

    let out = raw.take("out").unwrap_or_else(|| "results".to_string());

    let discovery = DiscoverySettings {
        alpha: parse_f64(&raw, "discovery.alpha")?.unwrap_or(0.05),
        whiten: parse_bool(&raw, "discovery.whiten")?.unwrap_or(false),
        sigma_hat_one: parse_bool(&raw, "discovery.sigma_hat_one")?.unwrap_or(false),
        ema_momentum: parse_f64(&raw, "discovery.ema_momentum")?.unwrap_or(0.99),
        ema_burn_in: parse_usize(&raw, "discovery.ema_burn_in")?.unwrap_or(10),
    };
    if !(discovery.alpha > 0.0 && discovery.alpha < 1.0) {
        return Err(ConfigError::Invalid("discovery.alpha must lie in (0,1)".to_string()));
    }

    let surrogate = SurrogateSettings {
        lambda_scale: parse_f64(&raw, "surrogate.lambda_scale")?.unwrap_or(1e-6),
        hidden: parse_widths(&raw, "surrogate.hidden")?.unwrap_or_else(|| vec![64, 64]),
        lr: parse_f64(&raw, "surrogate.lr")?.unwrap_or(1e-3),
        epochs: parse_usize(&raw, "surrogate.epochs")?.unwrap_or(200),
        batch: parse_usize(&raw, "surrogate.batch")?.unwrap_or(128),
        holdout: parse_f64(&raw, "surrogate.holdout")?.unwrap_or(0.1),
        shared: parse_bool(&raw, "surrogate.shared")?.unwrap_or(true),
    };

    let optimize = OptimizeSettings {
        steps: parse_usize(&raw, "optimize.steps")?.unwrap_or(50),
        lr: parse_f64(&raw, "optimize.lr")?.unwrap_or(0.05),
        batch: parse_usize(&raw, "optimize.batch")?.unwrap_or(64),
        learn_std: parse_bool(&raw, "optimize.learn_std")?.unwrap_or(true),
        init_std: parse_f64(&raw, "optimize.init_std")?.unwrap_or(0.5),
        mc_samples: parse_usize(&raw, "optimize.mc_samples")?.unwrap_or(10_000),
        rwr_temperature: parse_f64(&raw, "optimize.rwr_temperature")?.unwrap_or(1.0),
        restarts: parse_usize(&raw, "optimize.restarts")?.unwrap_or(8),
    };

    let vae = VaeSettings {
        d_z: parse_usize(&raw, "vae.d_z")?.unwrap_or(0),
        hidden: parse_widths(&raw, "vae.hidden")?.unwrap_or_else(|| vec![128]),
        lr: parse_f64(&raw, "vae.lr")?.unwrap_or(1e-3),
        epochs: parse_usize(&raw, "vae.epochs")?.unwrap_or(100),
        batch: parse_usize(&raw, "vae.batch")?.unwrap_or(128),
        interleaved: parse_bool(&raw, "vae.interleaved")?.unwrap_or(false),
        ema_every: parse_usize(&raw, "vae.ema_every")?.unwrap_or(1),
    };

    Ok(RunConfig {
        kind,
        d,
        n,
        seeds,
        methods,
        out,
        discovery,
        surrogate,
        optimize,
        vae,
        source: text.to_string(),
    })
}

/// Documented defaults, printed by `--help`.
pub fn help_text() -> String {
    "fgm-ddo — offline data-driven optimization with functional graphical models

USAGE:
    fgm-ddo run <config> [--out DIR] [--workers K] [--seed-offset K] [--dry-run]

Config format: 'key = value' lines with optional [section] headers and '#'
comments. Unknown or duplicate keys are errors.

Top-level keys:
    kind        quadratic-cycle-regret | rbf-discovery | rbf-optimize |
                transformed-pipeline | coverage-demo | stein-check   (required)
    d           design dimension                                     (required)
    n           dataset size (sample count M for discovery kinds)    (required)
    seeds       number of seeds, 0..seeds-1 shifted by seed_base     (default 1)
    seed_base   first seed                                           (default 0)
    seed_list   comma-separated explicit seeds (overrides seeds)
    methods     comma-separated subset of: fgm, naive-full,
                best-in-dataset, rwr, vae-fgm, vae-ga                (kind default)
    out         output directory                                     (default results)

[discovery]  alpha=0.05 whiten=false sigma_hat_one=false
             ema_momentum=0.99 ema_burn_in=10
[surrogate]  lambda_scale=1e-6 hidden=64,64 lr=1e-3 epochs=200 batch=128
             holdout=0.1 shared=true
[optimize]   steps=50 lr=0.05 batch=64 learn_std=true init_std=0.5
             mc_samples=10000 rwr_temperature=1.0 restarts=8
[vae]        d_z=0(=d) hidden=128 lr=1e-3 epochs=100 batch=128
             interleaved=false ema_every=1

Outputs: <out>/results.csv (deterministic; header
experiment,method,d,n,seed,metric,value) and <out>/meta.txt (config echo,
version, timestamps, per-cell wall-clock).

Exit codes: 0 all cells ok, 1 any cell error, 2 config error.
"
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_requires_kind() {
        match parse_config("") {
            Err(ConfigError::Invalid(msg)) => assert!(msg.contains("experiment kind required")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("kind = quadratic-cycle-regret\nd = 4\nn = 100\nseeds = 1\n")
            .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::QuadraticCycleRegret);
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.methods, vec![Method::Fgm, Method::BestInDataset]);
        assert_eq!(cfg.discovery.alpha, 0.05);
        assert_eq!(cfg.surrogate.hidden, vec![64, 64]);
        assert_eq!(cfg.optimize.steps, 50);
        assert_eq!(cfg.vae.epochs, 100);
        assert_eq!(cfg.out, "results");
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let text = "kind = stein-check\nd = 5\nn = 10\nd = 6\n";
        match parse_config(text) {
            Err(ConfigError::DuplicateKey { key, first, second }) => {
                assert_eq!(key, "d");
                assert_eq!((first, second), (2, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "kind = stein-check\nd = 5\nn = 10\nfrobnicate = 9\n";
        match parse_config(text) {
            Err(ConfigError::UnknownKey { key, line }) => {
                assert_eq!(key, "frobnicate");
                assert_eq!(line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sections_prefix_keys_and_parse() {
        let text = "kind = rbf-optimize\nd = 7\nn = 500\n[optimize]\nsteps = 10\nlr = 0.1\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.optimize.steps, 10);
        assert_eq!(cfg.optimize.lr, 0.1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "kind = stein-check\nd 5\n";
        match parse_config(text) {
            Err(ConfigError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn seed_list_overrides_count() {
        let text = "kind = stein-check\nd = 5\nn = 100\nseeds = 3\nseed_list = 7, 9\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.seeds, vec![7, 9]);
    }

    #[test]
    fn incompatible_method_rejected() {
        let text = "kind = quadratic-cycle-regret\nd = 4\nn = 10\nmethods = vae-fgm\n";
        assert!(matches!(parse_config(text), Err(ConfigError::Invalid(_))));
    }
}
