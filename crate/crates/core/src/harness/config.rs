//! Run configuration files.
//!
//! ```toml
//! mode = "exact"                 # or "monte-carlo"
//! trials = 10000                 # monte-carlo only
//! seed = 0
//! potentials = ["tsallis:0.5", "log-barrier"]
//! assertions = true              # invariant violations are fatal
//! regret_distribution = false    # exact only
//! diagnostics = false            # monte-carlo, explicit priors only
//!
//! [prior]
//! generator = "nohighprob"       # or: file = "prior.toml"
//! T = 6
//!
//! [feedback]
//! kind = "full"                  # semi-bandit | graph | contextual
//! graph = "g.txt"                # graph: one static graph
//! graphs = ["g1.txt", "g2.txt"]  # graph/contextual: one per round
//!
//! [policy]
//! kind = "ts"                    # or "thresholded-ts"
//! gamma = "auto"                 # or a number
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::report::Mode;
use crate::error::{Error, Result};
use crate::feedback::{FeedbackKind, FeedbackModel};
use crate::graph::Graph;
use crate::infotheory::PotentialFn;
use crate::policy::{default_gamma, PolicyConfig, PolicyKind};
use crate::prior::read_prior;
use crate::scenarios::{ExpansionMode, PriorModel, ScenarioSpec};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TSLAB_OUT_DIR";
/// Output directory when neither the config nor the environment sets one.
pub const DEFAULT_OUT_DIR: &str = "tslab-out";
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_POTENTIALS: [&str; 2] = ["tsallis:0.5", "log-barrier"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    /// Path to a serialized prior.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Generator name; the remaining fields are its parameters.
    #[serde(default)]
    pub generator: Option<String>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default, rename = "T")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub lstar: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub scenarios: Option<usize>,
    #[serde(default)]
    pub means: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Lazy constructions are expanded in exact mode regardless.
    #[serde(default)]
    pub expansion: Option<ExpansionMode>,
}

impl PriorSection {
    pub fn spec(&self, mode: Mode) -> Option<ScenarioSpec> {
        let name = self.generator.clone()?;
        let default_expansion = if mode == Mode::Exact { ExpansionMode::Exact } else { ExpansionMode::Lazy };
        Some(ScenarioSpec {
            name,
            d: self.d,
            m: self.m,
            horizon: self.horizon,
            lstar: self.lstar,
            seed: self.seed,
            scenarios: self.scenarios,
            means: self.means.clone(),
            samples: self.samples,
            mode: self.expansion.unwrap_or(default_expansion),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    /// `None` selects the generator's own feedback rule.
    #[serde(default)]
    pub kind: Option<FeedbackKind>,
    #[serde(default)]
    pub graph: Option<PathBuf>,
    #[serde(default)]
    pub graphs: Option<Vec<PathBuf>>,
}

/// `"auto"` or an explicit threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSetting {
    Value(f64),
    Keyword(String),
}

impl Default for GammaSetting {
    fn default() -> Self {
        GammaSetting::Keyword("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    #[serde(default = "default_policy_kind")]
    pub kind: PolicyKind,
    #[serde(default)]
    pub gamma: GammaSetting,
}

fn default_policy_kind() -> PolicyKind {
    PolicyKind::Ts
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection { kind: PolicyKind::Ts, gamma: GammaSetting::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub potentials: Option<Vec<String>>,
    #[serde(default = "yes")]
    pub assertions: bool,
    #[serde(default)]
    pub regret_distribution: bool,
    #[serde(default)]
    pub diagnostics: bool,
    pub prior: PriorSection,
    #[serde(default)]
    pub feedback: FeedbackSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn yes() -> bool {
    true
}

/// Everything a run needs, with files read and defaults applied.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub model: PriorModel,
    pub description: String,
    pub feedback: FeedbackModel,
    pub policy: PolicyConfig,
    pub potentials: Vec<PotentialFn>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(format!("invalid run config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn validate(&self) -> Result<()> {
        if self.prior.file.is_some() == self.prior.generator.is_some() {
            return Err(Error::config("[prior] needs exactly one of 'file' or 'generator'"));
        }
        if self.trials == Some(0) {
            return Err(Error::config("trials must be at least 1"));
        }
        if let GammaSetting::Keyword(k) = &self.policy.gamma {
            if k != "auto" {
                return Err(Error::config(format!("gamma must be \"auto\" or a number, got \"{k}\"")));
            }
        }
        Ok(())
    }

    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(DEFAULT_TRIALS)
    }

    /// Output directory: the config's, else `$TSLAB_OUT_DIR`, else
    /// [`DEFAULT_OUT_DIR`].
    pub fn output_dir(&self) -> PathBuf {
        match &self.output.dir {
            Some(d) => self.path(d),
            None => std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        let (model, description, native) = match (&self.prior.file, self.prior.spec(self.mode)) {
            (Some(file), _) => {
                let path = self.path(file);
                let prior = read_prior(&path).map_err(|e| match e {
                    Error::Io(io) => Error::config(format!("cannot read {}: {io}", path.display())),
                    other => other,
                })?;
                (PriorModel::Finite(Arc::new(prior)), format!("file {}", path.display()), None)
            }
            (None, Some(spec)) => {
                let native = spec.native_feedback()?;
                (spec.build()?, describe(&spec), native)
            }
            (None, None) => return Err(Error::config("[prior] needs 'file' or 'generator'")),
        };
        let feedback = self.feedback_model(native, model.d(), model.horizon())?;
        let policy = match self.policy.kind {
            PolicyKind::Ts => PolicyConfig::ts(),
            PolicyKind::ThresholdedTs => {
                let actions = model.actions();
                let gamma = match self.policy.gamma {
                    GammaSetting::Value(g) => g,
                    GammaSetting::Keyword(_) => default_gamma(model.d(), actions.m(), model.lstar_max()),
                };
                PolicyConfig::thresholded(gamma, model.d())?
            }
        };
        let names: Vec<String> = match &self.potentials {
            Some(list) => list.clone(),
            None => DEFAULT_POTENTIALS.iter().map(|s| s.to_string()).collect(),
        };
        let potentials = names.iter().map(|n| parse_potential(n, model.horizon())).collect::<Result<Vec<_>>>()?;
        Ok(ResolvedRun { model, description, feedback, policy, potentials })
    }

    fn feedback_model(&self, native: Option<FeedbackModel>, d: usize, horizon: usize) -> Result<FeedbackModel> {
        let sec = &self.feedback;
        let model = match (sec.kind, native) {
            (None, Some(native)) | (Some(FeedbackKind::Contextual), Some(native)) if sec.graphs.is_none() => native,
            (None, _) => return Err(Error::config("[feedback] kind is required for this prior")),
            (Some(FeedbackKind::Full), _) => FeedbackModel::full(),
            (Some(FeedbackKind::SemiBandit), _) => FeedbackModel::semi_bandit(),
            (Some(FeedbackKind::Graph), _) => FeedbackModel::graph(self.read_graphs()?)?,
            (Some(FeedbackKind::Contextual), _) => FeedbackModel::contextual(self.read_graphs()?)?,
        };
        model.validate(d, horizon)?;
        Ok(model)
    }

    fn read_graphs(&self) -> Result<Vec<Graph>> {
        let files: Vec<PathBuf> = match (&self.feedback.graph, &self.feedback.graphs) {
            (Some(g), None) => vec![g.clone()],
            (None, Some(list)) if !list.is_empty() => list.clone(),
            _ => return Err(Error::config("graph feedback needs exactly one of 'graph' or a nonempty 'graphs'")),
        };
        files
            .iter()
            .map(|f| {
                let path = self.path(f);
                let text =
                    fs::read_to_string(&path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
                Graph::parse(&text)
            })
            .collect()
    }
}

fn describe(spec: &ScenarioSpec) -> String {
    let mut parts = vec![spec.name.clone()];
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            parts.push(format!("{k}={v}"));
        }
    };
    push("d", spec.d.map(|x| x.to_string()));
    push("m", spec.m.map(|x| x.to_string()));
    push("T", spec.horizon.map(|x| x.to_string()));
    push("L", spec.lstar.map(|x| x.to_string()));
    push("seed", spec.seed.map(|x| x.to_string()));
    parts.join(" ")
}

/// `tsallis:<alpha>`, `log-barrier[:<T>]` (default: the horizon) or
/// `negentropy`.
pub fn parse_potential(name: &str, horizon: usize) -> Result<PotentialFn> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let number = |a: &str| a.trim().parse::<f64>().map_err(|_| Error::config(format!("bad potential parameter in '{name}'")));
    match (head, arg) {
        ("tsallis", Some(a)) => {
            let alpha = number(a)?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::config(format!("Tsallis exponent must lie in (0,1), got {alpha}")));
            }
            Ok(PotentialFn::tsallis(alpha))
        }
        ("log-barrier", None) => Ok(PotentialFn::log_barrier(horizon as f64)),
        ("log-barrier", Some(a)) => {
            let t = number(a)?;
            if t <= 0.0 {
                return Err(Error::config("log-barrier scale must be positive"));
            }
            Ok(PotentialFn::log_barrier(t))
        }
        ("negentropy", None) => Ok(PotentialFn::negentropy()),
        _ => Err(Error::config(format!("unknown potential '{name}' (tsallis:<a>, log-barrier[:<T>], negentropy)"))),
    }
}
