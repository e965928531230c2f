use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::schema::{Entry, MatrixSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub rng_seed: u64,
    pub tolerances: ToleranceReport,
    pub scenario: ScenarioSummary,
    pub results: Vec<TaskReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub tol: f64,
    pub cluster_rel: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub dim: usize,
    pub representation: String,
    pub stabilizer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub label: usize,
    pub d: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub value: f64,
    pub rank: usize,
    pub alpha: f64,
    pub q_bar: Option<f64>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum TaskReport {
    Decompose {
        g_classes: Vec<ClassSummary>,
        g0_classes: Vec<ClassSummary>,
        commutant_dim: usize,
        block_residual: f64,
    },
    CheckSeed {
        valid: bool,
        psd_margin: f64,
        norm_violation: f64,
        comm_violation: f64,
    },
    Extremal {
        extremal: bool,
        gram_rank: usize,
        block_dim: usize,
        perturbation_dim: usize,
        singular_values: Vec<f64>,
        witness: Option<MatrixSpec>,
    },
    RankBounds {
        seed_rank: usize,
        lower_bound: usize,
        budget_lhs: usize,
        budget_rhs: usize,
        budget_ok: bool,
    },
    Optimize {
        value: f64,
        converged: bool,
        iterations: usize,
        last_step: Option<f64>,
        unique: Option<bool>,
        stability_alpha_max: Option<f64>,
        closed_form: Option<ClosedFormReport>,
        xi_star: MatrixSpec,
    },
    Split {
        /// False when the seed is extremal and admits no split.
        split: bool,
        lambda: Option<f64>,
        t_plus: Option<f64>,
        t_minus: Option<f64>,
        zeta_plus: Option<MatrixSpec>,
        zeta_minus: Option<MatrixSpec>,
    },
    Merit {
        value: f64,
        ml_map: Option<MatrixSpec>,
    },
}

impl Report {
    /// Pretty-printed JSON with every float written in shortest round-trip form.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let sc = &self.scenario;
        let _ = writeln!(out, "# Report: {}\n", sc.name);
        let _ = writeln!(out, "- tool version: {}", self.tool_version);
        let _ = writeln!(out, "- rng seed: {:#x}", self.rng_seed);
        let _ = writeln!(
            out,
            "- tol: {}, cluster_rel: {}, max_iter: {}",
            sig6(self.tolerances.tol),
            sig6(self.tolerances.cluster_rel),
            self.tolerances.max_iter
        );
        let _ = writeln!(
            out,
            "- dimension {}, representation {}, stabilizer {}",
            sc.dim, sc.representation, sc.stabilizer
        );
        for r in &self.results {
            out.push('\n');
            r.write_markdown(&mut out);
        }
        out
    }
}

impl TaskReport {
    fn write_markdown(&self, out: &mut String) {
        match self {
            TaskReport::Decompose {
                g_classes,
                g0_classes,
                commutant_dim,
                block_residual,
            } => {
                let _ = writeln!(out, "## decompose\n");
                let _ = writeln!(out, "| group | label | d | m |\n|---|---|---|---|");
                for (name, list) in [("G", g_classes), ("G0", g0_classes)] {
                    for c in list {
                        let _ = writeln!(out, "| {name} | {} | {} | {} |", c.label, c.d, c.m);
                    }
                }
                let _ = writeln!(
                    out,
                    "\ncommutant dimension {commutant_dim}, block residual {}",
                    sig6(*block_residual)
                );
            }
            TaskReport::CheckSeed {
                valid,
                psd_margin,
                norm_violation,
                comm_violation,
            } => {
                let _ = writeln!(out, "## check-seed\n");
                let _ = writeln!(out, "- valid: {valid}");
                let _ = writeln!(out, "- psd margin: {}", sig6(*psd_margin));
                let _ = writeln!(out, "- normalization violation: {}", sig6(*norm_violation));
                let _ = writeln!(out, "- commutation violation: {}", sig6(*comm_violation));
            }
            TaskReport::Extremal {
                extremal,
                gram_rank,
                block_dim,
                perturbation_dim,
                singular_values,
                witness,
            } => {
                let _ = writeln!(out, "## extremal\n");
                let _ = writeln!(out, "- extremal: {extremal}");
                let _ = writeln!(out, "- span rank {gram_rank} of {block_dim}");
                let _ = writeln!(out, "- perturbation space dimension: {perturbation_dim}");
                let _ = writeln!(out, "- singular values: {}", list(singular_values));
                if let Some(w) = witness {
                    let _ = writeln!(out, "\nwitness:\n");
                    write_matrix(out, w);
                }
            }
            TaskReport::RankBounds {
                seed_rank,
                lower_bound,
                budget_lhs,
                budget_rhs,
                budget_ok,
            } => {
                let _ = writeln!(out, "## rank-bounds\n");
                let _ = writeln!(out, "- seed rank: {seed_rank}");
                let _ = writeln!(out, "- rank lower bound: {lower_bound}");
                let _ = writeln!(out, "- budget: {budget_lhs} <= {budget_rhs}: {budget_ok}");
            }
            TaskReport::Optimize {
                value,
                converged,
                iterations,
                last_step,
                unique,
                stability_alpha_max,
                closed_form,
                xi_star,
            } => {
                let _ = writeln!(out, "## optimize\n");
                let _ = writeln!(out, "- value: {}", sig6(*value));
                let _ = writeln!(
                    out,
                    "- converged: {converged} after {iterations} iterations (last step {})",
                    opt(last_step.map(sig6))
                );
                let _ = writeln!(out, "- unique: {}", opt(unique.map(|u| u.to_string())));
                let _ = writeln!(out, "- stability alpha max: {}", opt(stability_alpha_max.map(sig6)));
                if let Some(cf) = closed_form {
                    let _ = writeln!(
                        out,
                        "- closed form: value {}, rank {}, alpha {}, agrees {}",
                        sig6(cf.value),
                        cf.rank,
                        sig6(cf.alpha),
                        cf.agrees
                    );
                }
                let _ = writeln!(out, "\noptimal seed:\n");
                write_matrix(out, xi_star);
            }
            TaskReport::Split {
                split,
                lambda,
                t_plus,
                t_minus,
                zeta_plus,
                zeta_minus,
            } => {
                let _ = writeln!(out, "## split\n");
                if !split {
                    let _ = writeln!(out, "seed is extremal; no split exists");
                    return;
                }
                let _ = writeln!(out, "- lambda: {}", opt(lambda.map(sig6)));
                let _ = writeln!(
                    out,
                    "- steps: +{} / -{}",
                    opt(t_plus.map(sig6)),
                    opt(t_minus.map(sig6))
                );
                for (name, m) in [("zeta_plus", zeta_plus), ("zeta_minus", zeta_minus)] {
                    if let Some(m) = m {
                        let _ = writeln!(out, "\n{name}:\n");
                        write_matrix(out, m);
                    }
                }
            }
            TaskReport::Merit { value, ml_map } => {
                let _ = writeln!(out, "## merit\n");
                let _ = writeln!(out, "- value: {}", sig6(*value));
                if let Some(m) = ml_map {
                    let _ = writeln!(out, "\naveraged state:\n");
                    write_matrix(out, m);
                }
            }
        }
    }
}

fn opt(v: Option<String>) -> String {
    v.unwrap_or_else(|| "n/a".into())
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| sig6(*x)).collect::<Vec<_>>().join(", ")
}

/// Rounds to six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn entry(e: &Entry) -> String {
    let (re, im) = match *e {
        Entry::Pair([re, im]) => (re, im),
        Entry::Real(r) => (r, 0.0),
    };
    let re_s = sig6(re);
    let im_s = sig6(im);
    if im_s == "0" {
        re_s
    } else if re_s == "0" {
        format!("{im_s}i")
    } else if im < 0.0 {
        format!("{re_s}-{}i", sig6(-im))
    } else {
        format!("{re_s}+{im_s}i")
    }
}

fn write_matrix(out: &mut String, m: &MatrixSpec) {
    let _ = writeln!(out, "```");
    for row in &m.0 {
        let _ = writeln!(out, "{}", row.iter().map(entry).collect::<Vec<_>>().join("  "));
    }
    let _ = writeln!(out, "```");
}
