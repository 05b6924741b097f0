use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rasqp_core::driver::{Budget, HessianKind, SamplingRule, SolverConfig, SolverKind, StopCriterion, TerminationRule};
use rasqp_core::sqp::{EqParams, NormMode, RobustParams, SolveMode};
use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, clap::ValueEnum)]
pub enum Method {
    RaSqpKkt,
    RaSqpDnorm,
    RaSqpDl,
    RaSqpDlLbfgs,
    RaSqpDlInexact,
    RaSqpLinf,
    RaSqpL1,
    DetSqp,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::RaSqpKkt,
        Method::RaSqpDnorm,
        Method::RaSqpDl,
        Method::RaSqpDlLbfgs,
        Method::RaSqpDlInexact,
        Method::RaSqpLinf,
        Method::RaSqpL1,
        Method::DetSqp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RaSqpKkt => "ra-sqp-kkt",
            Method::RaSqpDnorm => "ra-sqp-dnorm",
            Method::RaSqpDl => "ra-sqp-dl",
            Method::RaSqpDlLbfgs => "ra-sqp-dl-lbfgs",
            Method::RaSqpDlInexact => "ra-sqp-dl-inexact",
            Method::RaSqpLinf => "ra-sqp-linf",
            Method::RaSqpL1 => "ra-sqp-l1",
            Method::DetSqp => "det-sqp",
        }
    }

    /// Equality-only methods cannot handle inequality constraints.
    pub fn requires_equality(self) -> bool {
        !matches!(self, Method::RaSqpLinf | Method::RaSqpL1 | Method::DetSqp)
    }

    /// Solver configuration for a problem with `num_ineq` inequalities.
    /// `det-sqp` uses the equality solver when there are none and the
    /// robust ℓ∞ solver otherwise.
    pub fn solver_config(self, num_ineq: usize) -> Result<SolverConfig> {
        if self.requires_equality() && num_ineq > 0 {
            return Err(BenchError::config(format!("{self} requires a problem without inequality constraints")));
        }
        let dl = SolverConfig::equality(TerminationRule::model_decrease());
        Ok(match self {
            Method::RaSqpKkt => SolverConfig::equality(TerminationRule::kkt_error()),
            Method::RaSqpDnorm => SolverConfig::equality(TerminationRule::step_norm()),
            Method::RaSqpDl => dl,
            Method::RaSqpDlLbfgs => SolverConfig { hessian: HessianKind::Lbfgs { memory: 0 }, ..dl },
            Method::RaSqpDlInexact => SolverConfig {
                solver: SolverKind::Equality { mode: SolveMode::inexact(), params: EqParams::default() },
                ..dl
            },
            Method::RaSqpLinf => SolverConfig::robust(NormMode::Linf),
            Method::RaSqpL1 => SolverConfig::robust(NormMode::L1),
            Method::DetSqp if num_ineq == 0 => SolverConfig::deterministic(SolverKind::Equality {
                mode: SolveMode::exact(),
                params: EqParams::default(),
            }),
            Method::DetSqp => {
                SolverConfig::deterministic(SolverKind::Robust { norm: NormMode::Linf, params: RobustParams::default() })
            }
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| BenchError::config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingSpec {
    Adaptive { initial_size: usize },
    Geometric { beta: f64, initial_size: usize },
    Fixed { size: usize },
    Full,
}

impl SamplingSpec {
    pub fn rule(self) -> SamplingRule {
        match self {
            SamplingSpec::Adaptive { initial_size } => match SamplingRule::adaptive() {
                SamplingRule::AdaptiveNormTest { theta, beta_hat, .. } => {
                    SamplingRule::AdaptiveNormTest { theta, beta_hat, initial_size }
                }
                other => other,
            },
            SamplingSpec::Geometric { beta, initial_size } => SamplingRule::Geometric { beta, initial_size },
            SamplingSpec::Fixed { size } => SamplingRule::Fixed { size: Some(size) },
            SamplingSpec::Full => SamplingRule::Fixed { size: None },
        }
    }
}

/// Problem name plus the generator and data parameters that shape it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub name: String,
    /// LIBSVM file replacing the synthetic logistic regression data.
    pub data: Option<PathBuf>,
    pub noise_level: f64,
    pub samples: usize,
    /// `n_f`, counting the bias.
    pub features: usize,
    pub classes: usize,
    pub separation: f64,
    pub spread: f64,
}

impl ProblemParams {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            data: None,
            noise_level: 0.1,
            samples: 5000,
            features: 10,
            classes: 3,
            separation: 1.0,
            spread: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemParams,
    pub method: Method,
    /// `None` keeps the method's own sampling rule.
    pub sampling: Option<SamplingSpec>,
    pub budget: u64,
    pub max_outer: Option<usize>,
    pub seed: u64,
    pub stop: Option<StopCriterion>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(problem: &str, method: Method, seed: u64) -> Self {
        Self {
            problem: ProblemParams::named(problem),
            method,
            sampling: None,
            budget: 1_000_000,
            max_outer: None,
            seed,
            stop: None,
            output: None,
        }
    }

    pub fn budget(&self) -> Budget {
        let mut b = Budget::grad_evals(self.budget);
        if let Some(k) = self.max_outer {
            b.max_outer = k;
        }
        b
    }

    pub fn solver_config(&self, num_ineq: usize) -> Result<SolverConfig> {
        let mut c = self.method.solver_config(num_ineq)?;
        if let Some(s) = self.sampling {
            c.sampling = s.rule();
        }
        c.stop = self.stop;
        Ok(c)
    }
}

/// Flat key-value settings shared by the config file and the command line.
/// Every field is optional; later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long, value_enum)]
    #[serde(default, deserialize_with = "de_method")]
    pub method: Option<Method>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gradient-evaluation budget.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// adaptive | geometric | fixed | full
    #[arg(long)]
    pub sampling: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub initial_size: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub stop_violation: Option<f64>,
    #[arg(long)]
    pub stop_stationarity: Option<f64>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub noise_level: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn de_method<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Method>, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map(Some).map_err(serde::de::Error::custom)
}

macro_rules! overlay {
    ($self:ident, $other:ident; $($f:ident),*) => {
        $( if $other.$f.is_some() { $self.$f = $other.$f.clone(); } )*
    };
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Values set in `other` win.
    pub fn overlay(&mut self, other: &Settings) {
        overlay!(self, other; problem, method, seed, budget, max_outer, sampling, beta, initial_size,
            batch_size, stop_violation, stop_stationarity, data, noise_level, samples, features,
            classes, separation, spread, output);
    }

    pub fn sampling_spec(&self) -> Result<Option<SamplingSpec>> {
        let initial_size = self.initial_size.unwrap_or(32);
        let spec = match self.sampling.as_deref() {
            None => return Ok(None),
            Some("adaptive") => SamplingSpec::Adaptive { initial_size },
            Some("geometric") => SamplingSpec::Geometric { beta: self.beta.unwrap_or(0.5), initial_size },
            Some("fixed") => SamplingSpec::Fixed {
                size: self.batch_size.ok_or_else(|| BenchError::config("fixed sampling needs batch_size"))?,
            },
            Some("full") => SamplingSpec::Full,
            Some(other) => return Err(BenchError::config(format!("unknown sampling rule {other:?}"))),
        };
        if let SamplingSpec::Geometric { beta, .. } = spec {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(BenchError::config("geometric beta must lie in (0, 1)"));
            }
        }
        if initial_size == 0 || self.batch_size == Some(0) {
            return Err(BenchError::config("batch sizes must be positive"));
        }
        Ok(Some(spec))
    }

    /// Resolves into a run configuration; problem and method are required.
    pub fn resolve(&self) -> Result<RunConfig> {
        let problem = self.problem.as_deref().ok_or_else(|| BenchError::config("missing problem"))?;
        let method = self.method.ok_or_else(|| BenchError::config("missing method"))?;
        self.resolve_with(problem, method, self.seed.unwrap_or(0))
    }

    pub fn resolve_with(&self, problem: &str, method: Method, seed: u64) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(problem, method, seed);
        let p = &mut cfg.problem;
        p.data = self.data.clone();
        p.noise_level = self.noise_level.unwrap_or(p.noise_level);
        p.samples = self.samples.unwrap_or(p.samples);
        p.features = self.features.unwrap_or(p.features);
        p.classes = self.classes.unwrap_or(p.classes);
        p.separation = self.separation.unwrap_or(p.separation);
        p.spread = self.spread.unwrap_or(p.spread);
        if p.noise_level < 0.0 {
            return Err(BenchError::config("noise_level must be nonnegative"));
        }
        cfg.sampling = self.sampling_spec()?;
        cfg.budget = self.budget.unwrap_or(cfg.budget);
        cfg.max_outer = self.max_outer;
        cfg.stop = match (self.stop_violation, self.stop_stationarity) {
            (None, None) => None,
            (v, s) => Some(StopCriterion { violation: v.unwrap_or(f64::INFINITY), stationarity: s.unwrap_or(f64::INFINITY) }),
        };
        cfg.output = self.output.clone();
        Ok(cfg)
    }
}
