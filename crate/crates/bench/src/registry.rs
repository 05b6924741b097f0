use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rasqp_core::problem::{
    build_logreg_problem, hock_schittkowski, synthetic_classification, AugmentedProblem, ConstraintKind, Dataset,
    InfeasiblePair, NoisyQuadratic, NoisyQuadraticSpec, Problem, RandomNlp, RandomNlpSpec, SyntheticClassSpec,
    HS_NAMES,
};

use crate::config::ProblemParams;
use crate::error::{BenchError, Result};

pub const BASE_PROBLEMS: &[&str] =
    &["synth-eq-quad", "logreg-eq", "logreg-ineq", "infeasible", "random-eq", "random-ineq"];

pub fn problem_names() -> Vec<&'static str> {
    BASE_PROBLEMS.iter().chain(HS_NAMES).copied().collect()
}

/// Generator for problem instances. Solver randomness uses [`solver_rng`],
/// an independent stream under the same seed.
pub fn problem_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn solver_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Gaussian class clusters, scaled feature-wise by maximum magnitude like
/// the scaled LIBSVM benchmark sets.
pub fn synthetic_dataset(params: &ProblemParams, seed: u64) -> Result<Dataset> {
    if params.features < 2 {
        return Err(BenchError::config("features counts the bias and must be at least 2"));
    }
    let spec = SyntheticClassSpec {
        n_raw_features: params.features - 1,
        n_classes: params.classes,
        n_samples: params.samples,
        separation: params.separation,
        spread: params.spread,
    };
    Ok(synthetic_classification(&spec, &mut problem_rng(seed))?.max_abs_scaled())
}

pub type DynProblem = Box<dyn Problem + Send>;

/// Builds the named problem instance for `seed`. `data` replaces the
/// synthetic logistic regression data when given.
pub fn build_problem(params: &ProblemParams, seed: u64, data: Option<Arc<Dataset>>) -> Result<DynProblem> {
    let name = params.name.as_str();
    let logreg = |kind| -> Result<DynProblem> {
        let data = match data.clone() {
            Some(d) => d,
            None => Arc::new(synthetic_dataset(params, seed)?),
        };
        Ok(Box::new(build_logreg_problem(data, kind)?))
    };
    let random = |num_eq, num_balls, num_halfspaces| -> Result<DynProblem> {
        let spec = RandomNlpSpec { dim: 6, num_eq, num_balls, num_halfspaces, num_samples: 200 };
        Ok(Box::new(RandomNlp::generate(&spec, &mut problem_rng(seed))?))
    };
    match name {
        "synth-eq-quad" => {
            Ok(Box::new(NoisyQuadratic::generate(&NoisyQuadraticSpec::default(), &mut problem_rng(seed))?))
        }
        "logreg-eq" => logreg(ConstraintKind::Equality),
        "logreg-ineq" => logreg(ConstraintKind::Inequality),
        "infeasible" => Ok(Box::new(AugmentedProblem::new(InfeasiblePair { start: 3.0 }, params.noise_level))),
        "random-eq" => random(3, 0, 0),
        "random-ineq" => random(2, 2, 3),
        _ => match hock_schittkowski(name) {
            Some(hs) => Ok(Box::new(AugmentedProblem::new(hs, params.noise_level))),
            None => Err(BenchError::config(format!("unknown problem {name:?}"))),
        },
    }
}
