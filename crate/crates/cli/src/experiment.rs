//! Runs configured experiments and writes their reports.
//!
//! Every output file carries the config hash and root seed. Each cell gets a
//! seed derived from the root seed and a key naming the cell, so outputs are
//! identical across runs and thread counts. Wall-clock timings go to
//! `timings.tsv`, the only file that differs between reruns.

use std::path::{Path, PathBuf};
use std::time::Instant;

use bidguard_core::harness::{
    build_scorecard, evaluate_defense, incentive_experiment, manipulation_probability, q_sweep,
    rd_vs_plra_comparison, Annotations, EvaluationReport,
};
use bidguard_core::rng::derive_seed;
use bidguard_core::{
    compute_similarity, run_defense, AttackScenario, BidMatrix, ConferenceInstance, DefensePolicy,
};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::io::{self, Provenance};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TIMINGS_FILE: &str = "timings.tsv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// Some optimum was not proven or an experiment failed.
    Partial,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub status: RunStatus,
    pub experiments: Vec<Experiment>,
    /// Output files relative to the output directory, in write order.
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// File-name form of a defense label.
pub fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '=') { c } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}

/// Shortest round-tripping decimal, with negative zero printed as 0.
fn fmt(x: f64) -> String {
    (x + 0.0).to_string()
}

pub struct Runner {
    config: ExperimentConfig,
    instance: ConferenceInstance,
    honest: BidMatrix,
    scenarios: Vec<(String, AttackScenario)>,
    provenance: Provenance,
    out: PathBuf,
    files: Vec<String>,
    warnings: Vec<String>,
    timings: Vec<(String, f64)>,
}

impl Runner {
    /// Validates the config and builds the instance and attack scenarios.
    /// Nothing is solved or written yet.
    pub fn new(config: ExperimentConfig, out: &Path) -> Result<Self> {
        config.validate()?;
        let (instance, honest) = config.materialize()?;
        let honest = honest.sanitized(&instance);
        let scenarios = config
            .attacks
            .iter()
            .map(|a| Ok((a.name.clone(), a.scenario(&instance)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Runner {
            provenance: config.provenance(),
            config,
            instance,
            honest,
            scenarios,
            out: out.to_path_buf(),
            files: Vec::new(),
            warnings: Vec::new(),
            timings: Vec::new(),
        })
    }

    pub fn instance(&self) -> &ConferenceInstance {
        &self.instance
    }

    fn seed(&self, key: &str) -> u64 {
        derive_seed(self.config.seed, key)
    }

    fn record(&mut self, rel: &str) -> PathBuf {
        self.files.push(rel.to_string());
        self.out.join(rel)
    }

    fn toml<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let path = self.record(rel);
        io::write_toml(&path, value, &self.provenance)
    }

    fn tsv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.record(rel);
        io::write_tsv(&path, header, rows, &self.provenance)
    }

    fn require_defenses(&self, what: Experiment) -> Result<()> {
        if self.config.defenses.is_empty() {
            return Err(CliError::Config(format!("`{}` needs at least one [[defenses]] entry", what.name())));
        }
        Ok(())
    }

    /// Runs the experiments in order and writes the manifest. An experiment
    /// error still leaves a manifest marked partial.
    pub fn run(&mut self, experiments: &[Experiment]) -> Result<Manifest> {
        let mut result = Ok(());
        for &e in experiments {
            let start = Instant::now();
            result = self.run_one(e);
            self.timings.push((e.name().to_string(), start.elapsed().as_secs_f64()));
            if result.is_err() {
                break;
            }
        }
        let status = if result.is_ok() && self.warnings.is_empty() {
            RunStatus::Complete
        } else {
            RunStatus::Partial
        };
        if let Err(e) = &result {
            self.warnings.push(format!("stopped: {e}"));
        }
        let rows: Vec<Vec<String>> = self
            .timings
            .iter()
            .map(|(name, secs)| vec![name.clone(), format!("{secs:.3}")])
            .collect();
        io::write_tsv(&self.out.join(TIMINGS_FILE), &["experiment", "seconds"], &rows, &self.provenance)?;
        let manifest = Manifest {
            status,
            experiments: experiments.to_vec(),
            files: self.files.clone(),
            warnings: self.warnings.clone(),
        };
        io::write_toml(&self.out.join(MANIFEST_FILE), &manifest, &self.provenance)?;
        result.map(|()| manifest)
    }

    fn run_one(&mut self, e: Experiment) -> Result<()> {
        match e {
            Experiment::Solve => self.solve(),
            Experiment::Attack => self.attack(),
            Experiment::Incentive => self.incentive(),
            Experiment::RdVsPlra => self.rd_vs_plra(),
            Experiment::QSweep => self.q_sweep(),
            Experiment::Scorecard => self.scorecard(),
        }
    }

    fn solve(&mut self) -> Result<()> {
        self.require_defenses(Experiment::Solve)?;
        let papers = self.instance.paper_ids.clone();
        let reviewers = self.instance.reviewer_ids.clone();
        let mut summary = Vec::new();
        for policy in self.config.defenses.clone() {
            let label = policy.label();
            let seed = self.seed(&format!("solve/{label}"));
            let outcome = run_defense(&policy, &self.instance, &self.honest, &self.config.similarity, seed)?;
            let d = &outcome.diagnostics;
            if !d.proven_optimal {
                self.warnings
                    .push(format!("{label}: search budget exhausted, best assignment found is not proven optimal"));
            }
            let rows: Vec<Vec<String>> = outcome
                .assignment
                .pairs
                .iter()
                .map(|p| {
                    vec![
                        papers[p.paper].clone(),
                        reviewers[p.reviewer].clone(),
                        fmt(outcome.scores[[p.paper, p.reviewer]]),
                        fmt(outcome.assignment_probability(p.paper, p.reviewer)),
                    ]
                })
                .collect();
            summary.push(vec![
                label.clone(),
                fmt(d.objective),
                d.expected_objective.map_or_else(String::new, fmt),
                d.shortfall.to_string(),
                d.proven_optimal.to_string(),
                d.work.to_string(),
            ]);
            self.tsv(
                &format!("solve/{}.tsv", slug(&label)),
                &["paper", "reviewer", "score", "probability"],
                &rows,
            )?;
        }
        self.tsv(
            "solve/summary.tsv",
            &["defense", "objective", "expected_objective", "shortfall", "proven_optimal", "work"],
            &summary,
        )
    }

    fn attack(&mut self) -> Result<()> {
        self.require_defenses(Experiment::Attack)?;
        if self.scenarios.is_empty() {
            return Err(CliError::Config("`attack` needs at least one [[attacks]] entry".into()));
        }
        #[derive(Serialize)]
        struct AttackReport<'a> {
            defense: &'a DefensePolicy,
            attack: &'a str,
            scenario: &'a AttackScenario,
            worst_case: f64,
            estimates: Vec<bidguard_core::harness::ManipulationEstimate>,
        }
        for policy in self.config.defenses.clone() {
            let label = policy.label();
            for (name, scenario) in self.scenarios.clone() {
                let estimates = manipulation_probability(
                    &policy,
                    &self.instance,
                    &self.honest,
                    &scenario,
                    &self.config.similarity,
                    self.config.trials,
                    self.seed(&format!("attack/{label}/{name}")),
                )?;
                let worst_case = estimates.iter().map(|e| e.probability.value).fold(0.0, f64::max);
                let report = AttackReport {
                    defense: &policy,
                    attack: &name,
                    scenario: &scenario,
                    worst_case,
                    estimates,
                };
                self.toml(&format!("attack/{}__{}.toml", slug(&label), slug(&name)), &report)?;
            }
        }
        Ok(())
    }

    fn incentive(&mut self) -> Result<()> {
        self.require_defenses(Experiment::Incentive)?;
        #[derive(Serialize)]
        struct Summary<'a> {
            defense: &'a DefensePolicy,
            reviewers: usize,
            mean: f64,
            median: f64,
        }
        for policy in self.config.defenses.clone() {
            let label = policy.label();
            let result = incentive_experiment(
                &self.instance,
                &self.honest,
                &policy,
                &self.config.similarity,
                self.seed(&format!("incentive/{label}")),
            )?;
            let s = slug(&label);
            self.toml(
                &format!("incentive/{s}.toml"),
                &Summary {
                    defense: &policy,
                    reviewers: result.differences.len(),
                    mean: result.mean,
                    median: result.median,
                },
            )?;
            let hist: Vec<Vec<String>> = result
                .histogram
                .iter()
                .enumerate()
                .map(|(d, c)| vec![d.to_string(), c.to_string()])
                .collect();
            self.tsv(&format!("incentive/{s}_histogram.tsv"), &["difference", "reviewers"], &hist)?;
            let per: Vec<Vec<String>> = result
                .differences
                .iter()
                .enumerate()
                .map(|(r, d)| vec![r.to_string(), d.to_string()])
                .collect();
            self.tsv(&format!("incentive/{s}_differences.tsv"), &["reviewer", "difference"], &per)?;
        }
        Ok(())
    }

    fn similarity(&self) -> Result<ndarray::Array2<f64>> {
        Ok(compute_similarity(&self.instance, &self.honest, &self.config.similarity)?)
    }

    fn rd_vs_plra(&mut self) -> Result<()> {
        let spec = self
            .config
            .rd_vs_plra
            .clone()
            .ok_or_else(|| CliError::Config("`rd_vs_plra` needs an [rd_vs_plra] table".into()))?;
        let s = self.similarity()?;
        let result = rd_vs_plra_comparison(&self.instance, &s, spec.q, spec.mode, self.seed("rd_vs_plra"))?;
        #[derive(Serialize)]
        struct Summary<'a> {
            q: f64,
            rd: &'a bidguard_core::harness::Estimate,
            plra_expected: f64,
            dominance_holds: bool,
            max_realized_marginal: f64,
            cap_respected: bool,
            realizations: u64,
        }
        self.toml(
            "rd_vs_plra.toml",
            &Summary {
                q: spec.q,
                rd: &result.rd,
                plra_expected: result.plra_expected,
                dominance_holds: result.dominance_holds,
                max_realized_marginal: result.max_realized_marginal,
                cap_respected: result.cap_respected,
                realizations: result.realizations,
            },
        )?;
        let rows: Vec<Vec<String>> = result
            .realized_average
            .indexed_iter()
            .filter(|(_, v)| **v > 0.0)
            .map(|((p, r), v)| vec![p.to_string(), r.to_string(), fmt(*v)])
            .collect();
        self.tsv("rd_vs_plra_marginals.tsv", &["paper", "reviewer", "average"], &rows)?;
        if !result.dominance_holds {
            self.warnings.push("random display exceeded probability-limited assignment".into());
        }
        Ok(())
    }

    fn q_sweep(&mut self) -> Result<()> {
        let qs = self
            .config
            .q_sweep
            .as_ref()
            .map(|s| s.qs.clone())
            .ok_or_else(|| CliError::Config("`q_sweep` needs a [q_sweep] table".into()))?;
        let s = self.similarity()?;
        let rows: Vec<Vec<String>> = q_sweep(&self.instance, &s, &qs)?
            .iter()
            .map(|p| {
                vec![
                    fmt(p.q),
                    fmt(p.expected_similarity),
                    fmt(p.ratio),
                    fmt(p.max_marginal),
                    fmt(p.shortfall),
                ]
            })
            .collect();
        self.tsv(
            "q_sweep.tsv",
            &["q", "expected_similarity", "ratio", "max_marginal", "shortfall"],
            &rows,
        )
    }

    fn scorecard(&mut self) -> Result<()> {
        self.require_defenses(Experiment::Scorecard)?;
        let mut reports: Vec<EvaluationReport> = Vec::new();
        for policy in self.config.defenses.clone() {
            let label = policy.label();
            let report = evaluate_defense(
                &policy,
                &self.instance,
                &self.honest,
                &self.scenarios,
                &self.config.similarity,
                self.config.trials,
                self.seed(&format!("scorecard/{label}")),
                true,
            )?;
            self.toml(&format!("reports/{}.toml", slug(&label)), &report)?;
            reports.push(report);
        }
        let rows = build_scorecard(&reports, &Annotations::builtin());
        #[derive(Serialize)]
        struct Card<'a> {
            rows: &'a [bidguard_core::harness::ScorecardRow],
        }
        self.toml("scorecard.toml", &Card { rows: &rows })?;
        let attacks: Vec<&str> = self.scenarios.iter().map(|(n, _)| n.as_str()).collect();
        let mut header = vec!["defense", "quality_ratio", "incentive_median"];
        let attack_cols: Vec<String> = attacks.iter().map(|a| format!("attack:{a}")).collect();
        header.extend(attack_cols.iter().map(String::as_str));
        header.extend(["work", "expressiveness", "attack_cost", "adjustability"]);
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.defense.clone(),
                    fmt(r.quality_ratio),
                    r.incentive_median.map_or_else(String::new, fmt),
                ];
                row.extend(attacks.iter().map(|a| r.manipulation.get(*a).map_or_else(String::new, |v| fmt(*v))));
                row.extend([
                    r.work.to_string(),
                    r.expressiveness.clone(),
                    r.attack_cost.clone(),
                    r.adjustability.clone(),
                ]);
                row
            })
            .collect();
        self.tsv("scorecard.tsv", &header, &table)
    }
}

/// Validates the config, then runs `experiments` into `out`.
pub fn run_experiment(config: ExperimentConfig, experiments: &[Experiment], out: &Path) -> Result<Manifest> {
    Runner::new(config, out)?.run(experiments)
}
