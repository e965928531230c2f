//! Scenario files in, analysis reports out.

pub mod report;
pub mod schema;

use std::path::Path;
use std::sync::Arc;

use covariant_povm::covariant::{block_form, check_seed, validate_density};
use covariant_povm::extremality::{
    convex_split, is_extremal, perturbation_space, rank_bounds, split_along_witness,
};
use covariant_povm::grouprep::{intertwiner_check, GroupModel};
use covariant_povm::numerics::{CMatrix, Tolerances};
use covariant_povm::optimize::{average_figure_of_merit, ml_map, optimize_likelihood, OptimizeOptions};
use covariant_povm::{Error, Seed, SeedSpace};

pub use report::{Report, TaskReport};
pub use schema::{parse, ScenarioFile, Task};

use report::{ClassSummary, ClosedFormReport, ScenarioSummary, ToleranceReport};
use schema::MatrixSpec;

pub const DEFAULT_RNG_SEED: u64 = covariant_povm::grouprep::DEFAULT_RNG_SEED;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("task {task}: {source}")]
    Task {
        task: &'static str,
        #[source]
        source: Error,
    },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("optimizer did not converge in {iterations} iterations (last step {last_step:e})")]
    NonConvergence { iterations: usize, last_step: f64 },
}

impl CliError {
    /// 3 for numerical failures, 2 for everything the input is to blame for.
    pub fn exit_code(&self) -> i32 {
        let numerical = |e: &Error| {
            matches!(
                e,
                Error::NonConvergence { .. } | Error::ClusterAmbiguity { .. } | Error::Decomposition(_)
            )
        };
        match self {
            CliError::NonConvergence { .. } => 3,
            CliError::Core(e) | CliError::Task { source: e, .. } if numerical(e) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tol: f64,
    pub rng_seed: u64,
    pub max_iter: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol: covariant_povm::numerics::DEFAULT_TOL,
            rng_seed: DEFAULT_RNG_SEED,
            max_iter: OptimizeOptions::default().max_iter,
        }
    }
}

/// Outcome of a run: the report is produced even when the optimizer stalls.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub error: Option<CliError>,
}

pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    run_str(&text, opts)
}

pub fn run_str(text: &str, opts: &RunOptions) -> Result<RunOutput, CliError> {
    run(&parse(text)?, opts)
}

fn model_summary(m: &GroupModel) -> String {
    match m.constraint_matrices().len() {
        0 => "trivial".into(),
        1 => format!("{} (1 matrix)", m.kind_name()),
        k => format!("{} ({k} matrices)", m.kind_name()),
    }
}

fn classes(dec: &covariant_povm::IsotypicDecomposition) -> Vec<ClassSummary> {
    dec.classes
        .iter()
        .map(|c| ClassSummary {
            label: c.label,
            d: c.d,
            m: c.m,
        })
        .collect()
}

struct State {
    space: Arc<SeedSpace>,
    seed: Option<CMatrix>,
    rho: Option<CMatrix>,
}

impl State {
    fn seed_matrix(&self, task: &'static str) -> Result<&CMatrix, CliError> {
        self.seed.as_ref().ok_or_else(|| {
            CliError::Validation(format!("task {task} needs a seed (give one or run optimize first)"))
        })
    }

    fn seed(&self, task: &'static str) -> Result<Seed, CliError> {
        let xi = self.seed_matrix(task)?.clone();
        Seed::new(xi, self.space.clone()).map_err(|source| CliError::Task { task, source })
    }

    fn rho(&self, task: &'static str) -> Result<&CMatrix, CliError> {
        self.rho
            .as_ref()
            .ok_or_else(|| CliError::Validation(format!("task {task} needs rho")))
    }
}

/// Executes the tasks in order; decompositions are computed once and shared.
pub fn run(file: &ScenarioFile, opts: &RunOptions) -> Result<RunOutput, CliError> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(CliError::Validation(format!("tolerance {} must be positive", opts.tol)));
    }
    let scenario = file.scenario.build()?;
    let tolerances = Tolerances::with_tol(opts.tol);
    let space = scenario.seed_space_seeded(&tolerances, opts.rng_seed)?;
    let dim = scenario.dim;
    let seed = file.seed.as_ref().map(|s| s.build(dim)).transpose()?;
    let rho = file.rho.as_ref().map(|r| r.to_matrix("rho")).transpose()?;
    for (what, m) in [("seed", &seed), ("rho", &rho)] {
        if let Some(m) = m {
            if m.shape() != (dim, dim) {
                return Err(CliError::Validation(format!(
                    "{what} is {}x{}, scenario dimension is {dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
    }
    if let Some(r) = &rho {
        validate_density(r, dim).map_err(|e| CliError::Validation(format!("rho: {e}")))?;
    }
    let mut state = State { space, seed, rho };
    let mut report = Report {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_seed: opts.rng_seed,
        tolerances: ToleranceReport {
            tol: tolerances.tol,
            cluster_rel: tolerances.cluster_rel,
            max_iter: opts.max_iter,
        },
        scenario: ScenarioSummary {
            name: scenario.name.clone(),
            dim,
            representation: model_summary(&scenario.rep),
            stabilizer: model_summary(&scenario.stabilizer),
        },
        results: Vec::new(),
    };
    let mut error = None;
    for task in &file.tasks {
        let name = task.name();
        let wrap = |source: Error| CliError::Task { task: name, source };
        let result = match task {
            Task::Decompose => {
                let g = &state.space.g_dec;
                let g0 = &state.space.g0_dec;
                TaskReport::Decompose {
                    g_classes: classes(g),
                    g0_classes: classes(g0),
                    commutant_dim: g.commutant_dim(),
                    block_residual: intertwiner_check(g, &scenario.rep)
                        .max_violation()
                        .max(intertwiner_check(g0, &scenario.stabilizer).max_violation()),
                }
            }
            Task::CheckSeed => {
                let xi = state.seed_matrix(name)?;
                let r = check_seed(xi, &state.space.g_dec, &state.space.g0_dec, opts.tol)
                    .map_err(wrap)?;
                TaskReport::CheckSeed {
                    valid: r.valid,
                    psd_margin: r.psd_margin,
                    norm_violation: r.norm_violation,
                    comm_violation: r.comm_violation,
                }
            }
            Task::Extremal => {
                let seed = state.seed(name)?;
                let cert = is_extremal(&seed).map_err(wrap)?;
                let ps = perturbation_space(&seed).map_err(wrap)?;
                TaskReport::Extremal {
                    extremal: cert.extremal,
                    gram_rank: cert.gram_rank,
                    block_dim: cert.block_dim,
                    perturbation_dim: ps.dimension,
                    singular_values: cert.singular_values,
                    witness: cert.witness.as_ref().map(MatrixSpec::from_matrix),
                }
            }
            Task::RankBounds => {
                let seed = state.seed(name)?;
                seed.ensure_valid().map_err(wrap)?;
                let rb = rank_bounds(&seed).map_err(wrap)?;
                let blocks = block_form(&seed).map_err(wrap)?;
                let seed_rank = blocks.blocks.iter().map(|b| b.rank * b.d).sum::<usize>();
                TaskReport::RankBounds {
                    seed_rank,
                    lower_bound: rb.lower_bound,
                    budget_lhs: rb.extremal_budget_lhs,
                    budget_rhs: rb.extremal_budget_rhs,
                    budget_ok: rb.budget_ok,
                }
            }
            Task::Optimize { max_iter } => {
                let rho = state.rho(name)?;
                let o = OptimizeOptions {
                    max_iter: max_iter.unwrap_or(opts.max_iter),
                    ..OptimizeOptions::default()
                };
                let res = optimize_likelihood(rho, &state.space, &o).map_err(wrap)?;
                if !res.converged && error.is_none() {
                    error = Some(CliError::NonConvergence {
                        iterations: res.iterations,
                        last_step: res.last_step,
                    });
                }
                let out = TaskReport::Optimize {
                    value: res.value,
                    converged: res.converged,
                    iterations: res.iterations,
                    last_step: res.last_step.is_finite().then_some(res.last_step),
                    unique: res.unique,
                    stability_alpha_max: res.stability_alpha_max,
                    closed_form: res.closed_form.as_ref().map(|cf| ClosedFormReport {
                        value: cf.value,
                        rank: cf.rank,
                        alpha: cf.alpha,
                        q_bar: cf.q_bar,
                        agrees: cf.agrees,
                    }),
                    xi_star: MatrixSpec::from_matrix(res.xi_star.xi()),
                };
                if file.seed.is_none() {
                    state.seed = Some(res.xi_star.xi().clone());
                }
                out
            }
            Task::Split { theta } => {
                let seed = state.seed(name)?;
                let split = match theta {
                    Some(t) => {
                        let t = t.to_matrix("split.theta")?;
                        convex_split(&seed, &t).map(Some).map_err(wrap)?
                    }
                    None => match split_along_witness(&seed) {
                        Ok(s) => Some(s),
                        Err(Error::Extremal) => None,
                        Err(e) => return Err(wrap(e)),
                    },
                };
                match split {
                    Some(s) => TaskReport::Split {
                        split: true,
                        lambda: Some(s.lambda),
                        t_plus: Some(s.t_plus),
                        t_minus: Some(s.t_minus),
                        zeta_plus: Some(MatrixSpec::from_matrix(s.zeta_plus.xi())),
                        zeta_minus: Some(MatrixSpec::from_matrix(s.zeta_minus.xi())),
                    },
                    None => TaskReport::Split {
                        split: false,
                        lambda: None,
                        t_plus: None,
                        t_minus: None,
                        zeta_plus: None,
                        zeta_minus: None,
                    },
                }
            }
            Task::Merit { weight } => {
                let seed = state.seed(name)?;
                let rho = state.rho(name)?;
                let fom = weight.figure_of_merit();
                let value = average_figure_of_merit(&seed, rho, &fom).map_err(wrap)?;
                let map = match fom {
                    covariant_povm::optimize::FigureOfMerit::DeltaLikelihood => None,
                    _ => Some(MatrixSpec::from_matrix(
                        &ml_map(rho, &fom, &state.space.g_dec).map_err(wrap)?,
                    )),
                };
                TaskReport::Merit { value, ml_map: map }
            }
        };
        report.results.push(result);
    }
    Ok(RunOutput { report, error })
}
