//! The batch pipeline: trajectories → marker matrices → recognition and
//! interaction reports.

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use swarm_markers::experiment::{marker_matrices, simulate_all, PlanData};
use swarm_markers::interaction::{
    agent_association, default_k, matrix_attention, summarize, write_adjacency_csv, write_membership_csv,
    write_stats_csv, SummaryStats,
};
use swarm_markers::markers::MarkerConfig;
use swarm_markers::recognition::{
    ablate_impute, ablate_retrain, mi_bottom_markers, mi_rank, standard_removals, sweep, train_tree,
    SearchConfig, SweepResult, TrainedModel,
};
use swarm_markers::windowing::{build_labeled_dataset, LabelKind, MatrixTiming, Split};
use swarm_markers::{MarkerMatrix, MarkerSet, ScenarioId, Trajectory, WindowPlan};

use crate::exit::{MissingArtifact, Usage};
use crate::fsio::{manifest_path, read_input};
use crate::manifest::{FileDigest, PlanTiming, RunManifest};
use crate::PlanArgs;

#[derive(Args)]
pub struct PipelineArgs {
    /// `all` or a list such as `S1,S5`.
    #[arg(long, default_value = "all")]
    scenarios: String,
    /// A seed, a range `a-b`, or a list.
    #[arg(long, default_value = "1-20")]
    seeds: String,
    /// Train and time every plan of the 5x3 window grid.
    #[arg(long)]
    sweep: bool,
    /// Recognition targets: agent, swarm11, swarm2.
    #[arg(long, value_delimiter = ',')]
    train: Vec<LabelKind>,
    /// Ablation protocols on the agent task: e1, e2.
    #[arg(long, value_delimiter = ',')]
    ablate: Vec<String>,
    /// Agent association by per-window co-clustering.
    #[arg(long)]
    associate: bool,
    /// Swarm attention points.
    #[arg(long)]
    attention: bool,
    /// Attention mass threshold, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Clusters per window; defaults to the number of agent types (min 2).
    #[arg(long)]
    k: Option<usize>,
    /// Simulate trajectories instead of reading them from the output dir.
    #[arg(long)]
    regenerate: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    plan: PlanArgs,
    /// Hyperparameter search trials.
    #[arg(long, default_value_t = 30)]
    budget: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Row cap for the tuning subsample; 0 tunes on every training row.
    #[arg(long, default_value_t = 20_000)]
    tune_rows: usize,
    /// Seed of the train/test split shuffle.
    #[arg(long, default_value_t = 0)]
    shuffle_seed: u64,
    /// Seed of the search and k-means initialisation.
    #[arg(long, default_value_t = 0)]
    search_seed: u64,
    /// Unique-information coverage kept by the MI selection.
    #[arg(long, default_value_t = 0.95)]
    coverage: f64,
}

pub fn parse_scenarios(spec: &str) -> Result<Vec<ScenarioId>> {
    if spec.trim() == "all" {
        return Ok(ScenarioId::ALL.to_vec());
    }
    let mut ids = spec
        .split(',')
        .map(|t| Ok(t.trim().parse::<ScenarioId>()?))
        .collect::<Result<Vec<_>>>()?;
    ids.sort();
    ids.dedup();
    Ok(ids)
}

pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Usage(format!("`{spec}` is not a seed, range a-b or list"));
    let spec = spec.trim();
    let mut seeds = if let Some((a, b)) = spec.split_once('-') {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad().into());
        }
        (a..=b).collect()
    } else {
        spec.split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?
    };
    seeds.sort_unstable();
    seeds.dedup();
    Ok(seeds)
}

fn trajectory_path(dir: &Path, s: ScenarioId, seed: u64) -> PathBuf {
    dir.join("trajectories").join(format!("{s}_seed{seed}.csv"))
}

/// Simulates or loads every run; returns them with their file digests.
fn trajectories(
    args: &PipelineArgs,
    scenarios: &[ScenarioId],
    seeds: &[u64],
) -> Result<(Vec<Trajectory>, Vec<FileDigest>)> {
    if args.regenerate {
        let runs = simulate_all(scenarios, seeds)?;
        let mut digests = Vec::with_capacity(runs.len());
        for t in &runs {
            let path = trajectory_path(&args.out_dir, t.scenario_id, t.seed);
            let mut csv = Vec::new();
            t.write_csv(&mut csv)?;
            let mut m = RunManifest::new(
                vec!["simulate".into(), format!("{}", t.scenario_id), format!("--seed={}", t.seed)],
                Vec::new(),
            );
            m.scenario = Some(t.scenario_id.to_string());
            m.seeds = vec![t.seed];
            m.reached_goal = Some(t.reached_goal);
            m.emit(&path, &csv)?;
            m.save(&manifest_path(&path))?;
            digests.push(FileDigest::of(&path, &csv));
        }
        return Ok((runs, digests));
    }
    let jobs: Vec<(ScenarioId, u64)> = scenarios
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    // Report the first absent file before doing any work.
    for &(s, seed) in &jobs {
        let path = trajectory_path(&args.out_dir, s, seed);
        if !path.exists() {
            return Err(MissingArtifact(path).into());
        }
    }
    jobs.par_iter()
        .map(|&(s, seed)| {
            let path = trajectory_path(&args.out_dir, s, seed);
            let bytes = read_input(&path)?;
            let reached = RunManifest::load(&manifest_path(&path))
                .ok()
                .and_then(|m| m.reached_goal)
                .unwrap_or(false);
            let t = Trajectory::read_csv(BufReader::new(bytes.as_slice()), s, seed, reached)
                .with_context(|| format!("in {}", path.display()))?;
            Ok((t, FileDigest::of(&path, &bytes)))
        })
        .collect::<Result<Vec<_>>>()
        .map(|pairs| pairs.into_iter().unzip())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> swarm_markers::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

struct Pipeline<'a> {
    args: &'a PipelineArgs,
    runs: Vec<Trajectory>,
    plan: WindowPlan,
    set: MarkerSet,
    search: SearchConfig,
    manifest: RunManifest,
    matrices: Option<Vec<MarkerMatrix>>,
    data: Option<PlanData>,
    models: BTreeMap<String, TrainedModel>,
}

impl Pipeline<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.args.out_dir.join(name)
    }

    fn matrices(&mut self) -> Result<&[MarkerMatrix]> {
        if self.matrices.is_none() {
            let ms = marker_matrices(&self.runs, &self.plan, &self.set, &MarkerConfig::default())?;
            let (timing, n) = MatrixTiming::pooled(&ms);
            self.manifest.timing.push(PlanTiming::new(&self.plan, &timing, n));
            self.matrices = Some(ms);
        }
        Ok(self.matrices.as_deref().expect("computed above"))
    }

    fn data(&mut self) -> Result<&PlanData> {
        if self.data.is_none() {
            let shuffle = self.args.shuffle_seed;
            let plan = self.plan;
            let ms = self.matrices()?;
            let (timing, n_windows) = MatrixTiming::pooled(ms);
            let dataset = build_labeled_dataset(ms, shuffle)?;
            self.data = Some(PlanData {
                plan,
                dataset,
                timing,
                n_windows,
            });
        }
        Ok(self.data.as_ref().expect("computed above"))
    }

    fn model(&mut self, target: LabelKind) -> Result<&TrainedModel> {
        let key = target.to_string();
        if !self.models.contains_key(&key) {
            let cfg = self.search;
            let model = train_tree(&self.data()?.dataset, target, &cfg)?;
            self.models.insert(key.clone(), model);
        }
        Ok(&self.models[&key])
    }

    fn sweep(&mut self, targets: &[LabelKind]) -> Result<()> {
        let mut results: Vec<SweepResult> = targets
            .iter()
            .map(|&target| SweepResult {
                target,
                cells: Vec::new(),
                missing: Vec::new(),
            })
            .collect();
        for plan in WindowPlan::canonical_grid() {
            let ms = marker_matrices(&self.runs, &plan, &self.set, &MarkerConfig::default())?;
            let (timing, n_windows) = MatrixTiming::pooled(&ms);
            if plan != self.plan {
                self.manifest.timing.push(PlanTiming::new(&plan, &timing, n_windows));
            }
            let pd = PlanData {
                plan,
                dataset: build_labeled_dataset(&ms, self.args.shuffle_seed)?,
                timing,
                n_windows,
            };
            if plan == self.plan && self.matrices.is_none() {
                self.manifest.timing.push(PlanTiming::new(&plan, &timing, n_windows));
                self.matrices = Some(ms);
            }
            for r in &mut results {
                r.cells.extend(sweep(std::slice::from_ref(&pd), r.target, &self.search)?.cells);
            }
        }
        for r in &results {
            let acc = csv_bytes(|b| r.write_accuracy_csv(b))?;
            self.manifest
                .emit_report(&self.out(&format!("sweep_{}_accuracy.csv", r.target)), &acc)?;
            let timing = csv_bytes(|b| r.write_timing_csv(b))?;
            self.manifest
                .emit_report(&self.out(&format!("sweep_{}_timing.csv", r.target)), &timing)?;
        }
        Ok(())
    }

    fn train(&mut self, target: LabelKind) -> Result<()> {
        let plan = self.plan;
        let m = self.model(target)?.clone();
        let mut csv = String::from(
            "target,window,overlap,markers,cv_accuracy,test_accuracy,max_depth,min_leaf,strategy,trials,depth,leaves\n",
        );
        csv.push_str(&format!(
            "{},{},{},\"{}\",{:.1},{:.1},{},{},{:?},{},{},{}\n",
            target,
            plan.size(),
            plan.overlap(),
            m.markers,
            100.0 * m.cv_accuracy,
            100.0 * m.test_accuracy,
            m.search.best.max_depth,
            m.search.best.min_leaf,
            m.search.strategy,
            m.search.trials.len(),
            m.tree.depth(),
            m.tree.n_leaves()
        ));
        self.manifest
            .emit_report(&self.out(&format!("train_{target}.csv")), csv.as_bytes())?;
        let mut json = serde_json::to_string_pretty(&m)?;
        json.push('\n');
        self.manifest
            .emit(&self.out(&format!("model_{target}.json")), json.as_bytes())
    }

    fn ablate(&mut self, protocols: &[String]) -> Result<()> {
        let target = LabelKind::Agent;
        let coverage = self.args.coverage;
        let model = self.model(target)?.clone();
        let dataset = &self.data()?.dataset;
        let ranking = mi_rank(&dataset.samples(target, Split::Train))?;
        let kept = ranking.prefix(coverage);
        let total: f64 = ranking.gains.iter().sum();
        let mut csv = String::from("rank,marker,unique_mi_nats,cumulative_fraction,selected\n");
        let mut acc = 0.0;
        for (rank, (&f, &g)) in ranking.order.iter().zip(&ranking.gains).enumerate() {
            acc += g;
            let frac = if total > 0.0 { acc / total } else { 0.0 };
            csv.push_str(&format!(
                "{},{},{:.6},{:.4},{}\n",
                rank + 1,
                dataset.markers.ids()[f],
                g,
                frac,
                kept.contains(&f)
            ));
        }
        let bottom = mi_bottom_markers(dataset, target, coverage)?;
        let sets = standard_removals(&dataset.markers, &bottom);
        let mut reports = Vec::new();
        for p in protocols {
            let report = match p.as_str() {
                "e1" => ablate_retrain(dataset, target, model.search.best, &sets)?,
                "e2" => ablate_impute(&model.tree, dataset, target, &sets)?,
                _ => unreachable!("validated in run"),
            };
            reports.push((p.clone(), report));
        }
        self.manifest.emit_report(&self.out("mi_ranking.csv"), csv.as_bytes())?;
        for (p, report) in reports {
            let bytes = csv_bytes(|b| report.write_csv(b))?;
            self.manifest
                .emit_report(&self.out(&format!("ablation_{p}.csv")), &bytes)?;
        }
        Ok(())
    }

    /// Per-scenario and per-(scenario, profile) stats of per-agent values.
    fn grouped_stats(&self, per_run: &[(ScenarioId, Vec<f64>, Vec<swarm_markers::ProfileLabel>)]) -> Vec<(String, SummaryStats)> {
        let mut by_scenario: BTreeMap<ScenarioId, Vec<f64>> = BTreeMap::new();
        let mut by_profile: BTreeMap<(ScenarioId, swarm_markers::ProfileLabel), Vec<f64>> = BTreeMap::new();
        for (s, values, labels) in per_run {
            by_scenario.entry(*s).or_default().extend(values);
            for (v, l) in values.iter().zip(labels) {
                by_profile.entry((*s, *l)).or_default().push(*v);
            }
        }
        let mut rows: Vec<(String, SummaryStats)> =
            by_scenario.iter().map(|(s, v)| (s.to_string(), summarize(v))).collect();
        rows.extend(by_profile.iter().map(|((s, l), v)| (format!("{s}:{l}"), summarize(v))));
        rows
    }

    fn associate(&mut self) -> Result<()> {
        let k = self.args.k;
        let seed = self.args.search_seed;
        let results = self
            .matrices()?
            .par_iter()
            .map(|m| {
                let k = k.unwrap_or_else(|| default_k(&m.agent_labels));
                Ok((m, agent_association(m, k, seed)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut files = Vec::new();
        let mut per_run = Vec::new();
        for (m, r) in &results {
            let bytes = csv_bytes(|b| write_adjacency_csv(r, b))?;
            files.push((format!("association/{}_seed{}.csv", m.scenario, m.seed), bytes));
            per_run.push((m.scenario, r.scores.clone(), m.agent_labels.clone()));
        }
        let stats = csv_bytes(|b| write_stats_csv(&self.grouped_stats(&per_run), b))?;
        for (name, bytes) in files {
            self.manifest.emit_report(&self.out(&name), &bytes)?;
        }
        self.manifest.emit_report(&self.out("association_stats.csv"), &stats)
    }

    fn attention(&mut self) -> Result<()> {
        let eta = self.args.eta;
        let results = self
            .matrices()?
            .par_iter()
            .map(|m| Ok((m, matrix_attention(m, eta)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut files = Vec::new();
        let mut per_run = Vec::new();
        for (m, r) in &results {
            let bytes = csv_bytes(|b| write_membership_csv(r, b))?;
            files.push((format!("attention/{}_seed{}.csv", m.scenario, m.seed), bytes));
            per_run.push((m.scenario, r.fractions.clone(), m.agent_labels.clone()));
        }
        let stats = csv_bytes(|b| write_stats_csv(&self.grouped_stats(&per_run), b))?;
        for (name, bytes) in files {
            self.manifest.emit_report(&self.out(&name), &bytes)?;
        }
        self.manifest.emit_report(&self.out("attention_stats.csv"), &stats)
    }
}

pub fn run(args: &PipelineArgs, command: Vec<String>) -> Result<()> {
    if !(args.eta > 0.0 && args.eta <= 1.0) {
        return Err(Usage(format!("--eta {} is not in (0, 1]", args.eta)).into());
    }
    if !(args.coverage > 0.0 && args.coverage <= 1.0) {
        return Err(Usage(format!("--coverage {} is not in (0, 1]", args.coverage)).into());
    }
    let mut protocols: Vec<String> = args.ablate.iter().map(|p| p.trim().to_ascii_lowercase()).collect();
    protocols.sort();
    protocols.dedup();
    if let Some(bad) = protocols.iter().find(|p| !matches!(p.as_str(), "e1" | "e2")) {
        return Err(Usage(format!("unknown ablation protocol `{bad}` (expected e1, e2)")).into());
    }
    let (plan, set) = args.plan.resolve()?;
    let scenarios = parse_scenarios(&args.scenarios)?;
    let seeds = parse_seeds(&args.seeds)?;
    let search = SearchConfig {
        folds: args.folds,
        budget: args.budget,
        tune_rows: (args.tune_rows > 0).then_some(args.tune_rows),
        seed: args.search_seed,
        ..SearchConfig::default()
    };

    let (runs, inputs) = trajectories(args, &scenarios, &seeds)?;
    let mut manifest = RunManifest::new(command, inputs);
    manifest.scenario = Some(scenarios.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    manifest.seeds = seeds;
    manifest.window_plan = Some(plan);

    let mut p = Pipeline {
        args,
        runs,
        plan,
        set,
        search,
        manifest,
        matrices: None,
        data: None,
        models: BTreeMap::new(),
    };
    let mut targets: Vec<LabelKind> = Vec::new();
    for &t in &args.train {
        if !targets.contains(&t) {
            targets.push(t);
        }
    }
    if args.sweep {
        let sweep_targets = if targets.is_empty() { vec![LabelKind::Agent] } else { targets.clone() };
        p.sweep(&sweep_targets)?;
    }
    for &t in &targets {
        p.train(t)?;
    }
    if !protocols.is_empty() {
        p.ablate(&protocols)?;
    }
    if args.associate {
        p.associate()?;
    }
    if args.attention {
        p.attention()?;
    }
    let path = args.out_dir.join("pipeline.manifest.json");
    p.manifest.save(&path)
}
