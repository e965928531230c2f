//! Input file format.
//!
//! Complex entries are `[re, im]` pairs (a bare number is read as a real
//! entry) and matrices are row-major nested arrays.

use covariant_povm::grouprep::GroupModel;
use covariant_povm::numerics::{c, CMatrix};
use covariant_povm::optimize::{FigureOfMerit, Weight};
use covariant_povm::scenarios::{self, Stabilizer};
use covariant_povm::Scenario;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Pair([f64; 2]),
    Real(f64),
}

impl Entry {
    fn parts(self) -> [f64; 2] {
        match self {
            Entry::Pair(p) => p,
            Entry::Real(r) => [r, 0.0],
        }
    }
}

/// A complex matrix as written in a scenario file or report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixSpec(pub Vec<Vec<Entry>>);

impl MatrixSpec {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixSpec(
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| Entry::Pair([m[(i, j)].re, m[(i, j)].im]))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn to_matrix(&self, what: &str) -> Result<CMatrix, CliError> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(CliError::Validation(format!("{what}: empty matrix")));
        }
        if let Some(bad) = self.0.iter().position(|r| r.len() != cols) {
            return Err(CliError::Validation(format!(
                "{what}: row {bad} has {} entries, expected {cols}",
                self.0[bad].len()
            )));
        }
        let mut out = CMatrix::zeros(rows, cols);
        for (i, row) in self.0.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let [re, im] = e.parts();
                if !re.is_finite() || !im.is_finite() {
                    return Err(CliError::Validation(format!(
                        "{what}: non-finite entry at ({i}, {j})"
                    )));
                }
                out[(i, j)] = c(re, im);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: String,
    pub scenario: ScenarioSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<MatrixSpec>,
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Builder(BuilderSpec),
    Inline(InlineScenario),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", content = "params", rename_all = "snake_case")]
pub enum BuilderSpec {
    SpinJ { j: f64 },
    SuDTensor2 { d: usize },
    U1Phase {
        d: usize,
        degeneracies: Vec<usize>,
        #[serde(default)]
        stabilizer: StabilizerSpec,
    },
    Cyclic { n: usize, charges: Vec<i64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilizerSpec {
    #[default]
    Trivial,
    Cyclic(usize),
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineScenario {
    pub name: String,
    pub rep: ModelSpec,
    /// Defaults to the trivial group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stabilizer: Option<ModelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Finite { elements: Vec<MatrixSpec> },
    OneParameter { generator: MatrixSpec },
    Lie { generators: Vec<MatrixSpec> },
    Trivial { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Matrix(MatrixSpec),
    Builder(SeedBuilder),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", content = "params", rename_all = "snake_case")]
pub enum SeedBuilder {
    SpinHighestWeight { j: f64, index: usize },
    SuDTensor2 { d: usize },
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    Decompose,
    CheckSeed,
    Extremal,
    RankBounds,
    Optimize {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_iter: Option<usize>,
    },
    Split {
        /// Perturbation direction; the extremality witness when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<MatrixSpec>,
    },
    Merit { weight: WeightSpec },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Decompose => "decompose",
            Task::CheckSeed => "check-seed",
            Task::Extremal => "extremal",
            Task::RankBounds => "rank-bounds",
            Task::Optimize { .. } => "optimize",
            Task::Split { .. } => "split",
            Task::Merit { .. } => "merit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    Delta,
    Constant(f64),
    Elements(Vec<f64>),
    Trig {
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl WeightSpec {
    pub fn figure_of_merit(&self) -> FigureOfMerit {
        match self {
            WeightSpec::Delta => FigureOfMerit::DeltaLikelihood,
            WeightSpec::Constant(k) => FigureOfMerit::Weighted(Weight::Constant(*k)),
            WeightSpec::Elements(w) => FigureOfMerit::Weighted(Weight::Elements(w.clone())),
            WeightSpec::Trig { cos, sin } => FigureOfMerit::Weighted(Weight::Trig {
                cos: cos.clone(),
                sin: sin.clone(),
            }),
        }
    }
}

/// Parses a scenario file, reporting the JSON path of the first error.
pub fn parse(text: &str) -> Result<ScenarioFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    if file.version != SCHEMA_VERSION {
        return Err(CliError::Schema {
            path: "version".into(),
            message: format!("unsupported version {:?}, expected {SCHEMA_VERSION:?}", file.version),
        });
    }
    Ok(file)
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<Scenario, CliError> {
        let s = match self {
            ScenarioSpec::Builder(b) => match b {
                BuilderSpec::SpinJ { j } => scenarios::spin_j(*j)?,
                BuilderSpec::SuDTensor2 { d } => scenarios::su_d_tensor2(*d)?,
                BuilderSpec::U1Phase {
                    d,
                    degeneracies,
                    stabilizer,
                } => {
                    let stab = match stabilizer {
                        StabilizerSpec::Trivial => Stabilizer::Trivial,
                        StabilizerSpec::Cyclic(k) => Stabilizer::Cyclic(*k),
                        StabilizerSpec::Full => Stabilizer::Full,
                    };
                    scenarios::u1_phase(*d, degeneracies, stab)?
                }
                BuilderSpec::Cyclic { n, charges } => scenarios::cyclic(*n, charges)?,
            },
            ScenarioSpec::Inline(s) => {
                let rep = s.rep.build("scenario.rep")?;
                let stab = match &s.stabilizer {
                    Some(m) => m.build("scenario.stabilizer")?,
                    None => GroupModel::trivial(rep.dim())?,
                };
                Scenario::new(s.name.clone(), rep, stab)?
            }
        };
        Ok(s)
    }
}

impl ModelSpec {
    fn build(&self, what: &str) -> Result<GroupModel, CliError> {
        let mats = |ms: &[MatrixSpec], field: &str| -> Result<Vec<CMatrix>, CliError> {
            ms.iter()
                .enumerate()
                .map(|(k, m)| m.to_matrix(&format!("{what}.{field}[{k}]")))
                .collect()
        };
        Ok(match self {
            ModelSpec::Finite { elements } => GroupModel::finite(mats(elements, "elements")?)?,
            ModelSpec::OneParameter { generator } => {
                GroupModel::one_parameter(generator.to_matrix(&format!("{what}.generator"))?)?
            }
            ModelSpec::Lie { generators } => {
                let gens = mats(generators, "generators")?;
                let dim = gens.first().map(|g| g.nrows()).ok_or_else(|| {
                    CliError::Validation(format!("{what}.generators: at least one generator is required"))
                })?;
                GroupModel::lie(dim, gens)?
            }
            ModelSpec::Trivial { dim } => GroupModel::trivial(*dim)?,
        })
    }
}

impl SeedSpec {
    pub fn build(&self, dim: usize) -> Result<CMatrix, CliError> {
        Ok(match self {
            SeedSpec::Matrix(m) => m.to_matrix("seed")?,
            SeedSpec::Builder(SeedBuilder::SpinHighestWeight { j, index }) => {
                scenarios::spin_highest_weight_seed(*j, *index)?
            }
            SeedSpec::Builder(SeedBuilder::SuDTensor2 { d }) => scenarios::su_d_tensor2_seed(*d)?,
            SeedSpec::Builder(SeedBuilder::Identity) => covariant_povm::numerics::identity(dim),
        })
    }
}
