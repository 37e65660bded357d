use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::corpus::{sample_set_hash, Corpus};
use super::plan::{cell_name, Approach, Scenario, TransferPlan};
use super::report::{
    write_json, AblationCell, AblationReport, AblationRow, EvalReport, FoldResult, MatrixReport,
    RunRecord, SummaryCell, TargetAblation, TargetMatrix,
};
use crate::audio::{split_folds, AudioSample, Folds};
use crate::error::{Error, Result};
use crate::network::{
    evaluate, load_weights, save_weights, train_epochs, Example, LayerMask, NetworkConfig,
    NetworkModel, TrainConfig,
};
use crate::optim::AdaDeltaConfig;
use crate::rng::{derive_seed, Rng};
use crate::stats::{self, classify_significance, paired_t_test};

/// Cell label of the train-on-target baseline.
pub const TT_CELL: &str = "TT";

/// Which experiments to run and with how much training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSettings {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub targets: Vec<String>,
    /// Source domains; every non-target domain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<String>>,
    #[serde(default = "all_scenarios")]
    pub scenarios: Vec<Scenario>,
    #[serde(default = "all_approaches")]
    pub approaches: Vec<Approach>,
    #[serde(default = "ablation_approaches")]
    pub ablation_approaches: Vec<Approach>,
    #[serde(default = "five")]
    pub folds: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "thirty")]
    pub pretrain_epochs: usize,
    #[serde(default = "thirty")]
    pub finetune_epochs: usize,
}

fn default_name() -> String {
    "default".into()
}
fn all_scenarios() -> Vec<Scenario> {
    Scenario::ALL.to_vec()
}
fn all_approaches() -> Vec<Approach> {
    Approach::ALL.to_vec()
}
fn ablation_approaches() -> Vec<Approach> {
    Approach::ALL[..4].to_vec()
}
fn five() -> usize {
    5
}
fn default_alpha() -> f64 {
    0.05
}
fn thirty() -> usize {
    30
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(Error::Config("experiment.name must be a plain directory name".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("experiment.folds must be at least 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("experiment.alpha must lie in (0, 1)".into()));
        }
        if self.scenarios.is_empty() || self.approaches.is_empty() {
            return Err(Error::Config("experiment needs at least one scenario and approach".into()));
        }
        Ok(())
    }
}

/// Everything that determines the numbers an experiment produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSetup {
    pub network: NetworkConfig,
    pub optimizer: AdaDeltaConfig,
    pub train: TrainConfig,
    pub experiment: ExperimentSettings,
}

impl RunSetup {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.optimizer.validate()?;
        self.train.validate()?;
        self.experiment.validate()
    }

    pub fn hash_hex(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("setup serializes"))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
struct Checkpoint {
    bytes: Vec<u8>,
    sha256: String,
    set_sha256: String,
    path: Option<String>,
}

/// Executes experiment cells over one corpus, caching pre-trained checkpoints
/// in memory and, when a results directory is set, on disk.
pub struct Runner<'a> {
    setup: RunSetup,
    config_hash: String,
    corpus: &'a Corpus,
    out_dir: Option<PathBuf>,
    pool: rayon::ThreadPool,
    checkpoints: Mutex<HashMap<String, Arc<Checkpoint>>>,
    timings: Mutex<BTreeMap<String, Duration>>,
}

fn examples<'s>(samples: &'s [AudioSample], idx: &[usize]) -> Vec<Example<'s>> {
    idx.iter()
        .map(|&i| Example {
            input: &samples[i].waveform,
            label: samples[i].label.index(),
        })
        .collect()
}

/// Checks that every frozen layer is bitwise identical to the pre-trained model.
pub fn verify_frozen(pretrained: &NetworkModel, tuned: &NetworkModel, mask: &LayerMask) -> Result<()> {
    for layer in &mask.frozen {
        for name in tuned.layer_params(*layer) {
            let a = pretrained.params().value(&name)?;
            let b = tuned.params().value(&name)?;
            if !a.bit_eq(b) {
                return Err(Error::Contract(format!("frozen parameter `{name}` changed")));
            }
        }
    }
    Ok(())
}

impl<'a> Runner<'a> {
    pub fn new(setup: RunSetup, corpus: &'a Corpus, out_dir: Option<PathBuf>, jobs: usize) -> Result<Self> {
        setup.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(Runner {
            config_hash: setup.hash_hex(),
            setup,
            corpus,
            out_dir,
            pool,
            checkpoints: Mutex::new(HashMap::new()),
            timings: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn setup(&self) -> &RunSetup {
        &self.setup
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Wall-clock time per executed unit of work, keyed by a descriptive label.
    pub fn timings(&self) -> BTreeMap<String, Duration> {
        self.timings.lock().expect("timings lock").clone()
    }

    fn seed(&self) -> u64 {
        self.setup.train.seed
    }

    fn record_time(&self, label: String, d: Duration) {
        self.timings.lock().expect("timings lock").insert(label, d);
    }

    /// Source domains for `target`: the configured list or every other domain.
    pub fn sources_for(&self, target: &str) -> Result<Vec<String>> {
        let sources: Vec<String> = match &self.setup.experiment.sources {
            Some(s) => s.iter().filter(|d| *d != target).cloned().collect(),
            None => self
                .corpus
                .domain_names()
                .into_iter()
                .filter(|d| d != target)
                .collect(),
        };
        for s in &sources {
            self.corpus.domain(s)?;
        }
        Ok(sources)
    }

    pub fn plan(&self, scenario: Scenario, approach: Approach, target: &str, sources: &[String]) -> TransferPlan {
        TransferPlan {
            scenario,
            approach,
            target: target.to_string(),
            sources: sources.to_vec(),
            pretrain_epochs: self.setup.experiment.pretrain_epochs,
            finetune_epochs: self.setup.experiment.finetune_epochs,
            seed: self.seed(),
        }
    }

    /// Stratified folds of `target`, shared by TT and every transfer cell.
    pub fn folds(&self, target: &str, seed: u64) -> Result<Folds> {
        let samples = self.corpus.domain(target)?;
        let labels: Vec<_> = samples.iter().map(|s| s.label).collect();
        split_folds(&labels, self.setup.experiment.folds, derive_seed(seed, &format!("split/{target}")))
            .map_err(|e| Error::Experiment(format!("target `{target}`: {e}")))
    }

    fn write_weights(&self, rel: &str, bytes: &[u8]) -> Result<Option<String>> {
        let Some(out) = &self.out_dir else {
            return Ok(None);
        };
        let path = out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(Some(rel.to_string()))
    }

    fn write_report<T: Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        match &self.out_dir {
            Some(out) => write_json(&out.join(rel), value),
            None => Ok(()),
        }
    }

    fn fold_uar(&self, model: &NetworkModel, test: &[Example<'_>]) -> Result<f64> {
        evaluate(model, test)?.uar()
    }

    fn tt_fold(&self, target: &str, folds: &Folds, fold: usize) -> Result<FoldResult> {
        let start = Instant::now();
        let samples = self.corpus.domain(target)?;
        let train = examples(samples, &folds.train_indices(fold));
        let test = examples(samples, &folds.test_indices(fold));
        let label = format!("tt/{target}/fold{fold}");
        let seed = self.seed();
        let mut model = NetworkModel::build(&self.setup.network, &mut Rng::derived(seed, &format!("{label}/init")))?;
        let t = &self.setup.train;
        train_epochs(
            &mut model,
            &train,
            t.epochs,
            t.batch_size,
            self.setup.optimizer,
            Rng::derived(seed, &format!("{label}/train")),
        )?;
        let bytes = save_weights(&model);
        let weights = self.write_weights(&format!("{target}/{TT_CELL}/fold{fold}/weights.mdnw"), &bytes)?;
        self.record_time(label, start.elapsed());
        Ok(FoldResult {
            fold,
            uar: self.fold_uar(&model, &test)?,
            train_samples: train.len(),
            test_samples: test.len(),
            weights,
            weights_sha256: sha256_hex(&bytes),
            pretrained_sha256: None,
            pretrain_checkpoint: None,
            pretrain_set_sha256: None,
        })
    }

    /// Five-fold (by default) training and evaluation on the target alone.
    pub fn run_tt(&self, target: &str) -> Result<RunRecord> {
        let start = Instant::now();
        let folds = self.folds(target, self.seed())?;
        let results: Vec<FoldResult> = self.pool.install(|| {
            (0..folds.k())
                .into_par_iter()
                .map(|f| self.tt_fold(target, &folds, f))
                .collect::<Result<_>>()
        })?;
        let record = self.record(TT_CELL.into(), target, vec![], None, results, start.elapsed());
        self.write_report(&format!("{target}/{TT_CELL}/report.json"), &record)?;
        Ok(record)
    }

    fn record(
        &self,
        cell: String,
        target: &str,
        sources: Vec<String>,
        plan: Option<TransferPlan>,
        folds: Vec<FoldResult>,
        wall_time: Duration,
    ) -> RunRecord {
        let fold_uars: Vec<f64> = folds.iter().map(|f| f.uar).collect();
        RunRecord {
            cell,
            target: target.to_string(),
            sources,
            plan,
            mean_uar: stats::mean(&fold_uars),
            fold_uars,
            folds,
            config_hash: self.config_hash.clone(),
            seed: self.seed(),
            wall_time,
        }
    }

    /// Pre-training samples: all sources, plus the target's training folds under S1.
    fn pretrain_set<'s>(&'s self, plan: &TransferPlan, folds: &Folds, fold: usize) -> Result<Vec<&'s AudioSample>> {
        let mut set: Vec<&AudioSample> = Vec::new();
        for s in &plan.sources {
            set.extend(self.corpus.domain(s)?);
        }
        if plan.scenario.includes_target() {
            let target = self.corpus.domain(&plan.target)?;
            set.extend(folds.train_indices(fold).into_iter().map(|i| &target[i]));
        } else if set.iter().any(|s| s.domain == plan.target) {
            return Err(Error::Contract(format!(
                "S2 pre-training set contains samples of target `{}`",
                plan.target
            )));
        }
        Ok(set)
    }

    fn pretrain_label(plan: &TransferPlan, fold: usize) -> String {
        let target = if plan.scenario.includes_target() {
            format!("{}/fold{fold}", plan.target)
        } else {
            "-".to_string()
        };
        format!("pretrain/{}/{}/{}", plan.scenario, plan.sources.join(","), target)
    }

    fn pretrain_config_hash(&self, plan: &TransferPlan) -> String {
        let key = serde_json::json!({
            "network": self.setup.network,
            "optimizer": self.setup.optimizer,
            "batch_size": self.setup.train.batch_size,
            "pretrain_epochs": plan.pretrain_epochs,
        });
        sha256_hex(key.to_string().as_bytes())
    }

    /// The pre-trained checkpoint for `plan` and `fold`. S2 checkpoints do not
    /// depend on the fold or target and are shared.
    fn pretrained(&self, plan: &TransferPlan, folds: &Folds, fold: usize) -> Result<Arc<Checkpoint>> {
        let set = self.pretrain_set(plan, folds, fold)?;
        let set_sha256 = sample_set_hash(set.iter().copied());
        let label = Self::pretrain_label(plan, fold);
        let key = format!("{set_sha256}|{}|{}|{label}", self.pretrain_config_hash(plan), plan.seed);
        if let Some(c) = self.checkpoints.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(c));
        }
        let rel = format!("pretrain/{}-{}.mdnw", plan.scenario, &sha256_hex(key.as_bytes())[..16]);
        let cached = match &self.out_dir {
            Some(out) if out.join(&rel).is_file() => {
                let path = out.join(&rel);
                let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                load_weights(&bytes, &self.setup.network)?;
                Some(bytes)
            }
            _ => None,
        };
        let bytes = match cached {
            Some(b) => b,
            None => {
                let start = Instant::now();
                let train: Vec<Example<'_>> = set
                    .iter()
                    .map(|s| Example {
                        input: &s.waveform,
                        label: s.label.index(),
                    })
                    .collect();
                let mut model =
                    NetworkModel::build(&self.setup.network, &mut Rng::derived(plan.seed, &format!("{label}/init")))?;
                train_epochs(
                    &mut model,
                    &train,
                    plan.pretrain_epochs,
                    self.setup.train.batch_size,
                    self.setup.optimizer,
                    Rng::derived(plan.seed, &format!("{label}/train")),
                )?;
                let bytes = save_weights(&model);
                self.write_weights(&rel, &bytes)?;
                self.record_time(label, start.elapsed());
                bytes
            }
        };
        let ck = Arc::new(Checkpoint {
            sha256: sha256_hex(&bytes),
            bytes,
            set_sha256,
            path: self.out_dir.as_ref().map(|_| rel),
        });
        self.checkpoints
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&ck));
        Ok(ck)
    }

    fn transfer_fold(&self, plan: &TransferPlan, folds: &Folds, fold: usize, out_rel: &str) -> Result<FoldResult> {
        let ck = self.pretrained(plan, folds, fold)?;
        let start = Instant::now();
        let samples = self.corpus.domain(&plan.target)?;
        let train = examples(samples, &folds.train_indices(fold));
        let test = examples(samples, &folds.test_indices(fold));
        let pretrained = load_weights(&ck.bytes, &self.setup.network)?;
        let mut model = pretrained.clone();
        let label = format!("finetune/{}/{}/fold{fold}", plan.cell(), plan.target);
        if plan.approach.fine_tunes() {
            let mask = plan.approach.mask(self.setup.network.use_lstm);
            model.apply_mask(&mask, &mut Rng::derived(plan.seed, &format!("{label}/reinit")))?;
            train_epochs(
                &mut model,
                &train,
                plan.effective_finetune_epochs(),
                self.setup.train.batch_size,
                self.setup.optimizer,
                Rng::derived(plan.seed, &format!("{label}/train")),
            )?;
            verify_frozen(&pretrained, &model, &mask)?;
        }
        let bytes = save_weights(&model);
        if !plan.approach.fine_tunes() && bytes != ck.bytes {
            return Err(Error::Contract("A1 altered the pre-trained weights".into()));
        }
        let weights = self.write_weights(&format!("{out_rel}/fold{fold}/weights.mdnw"), &bytes)?;
        self.record_time(format!("{label}@{out_rel}"), start.elapsed());
        Ok(FoldResult {
            fold,
            uar: self.fold_uar(&model, &test)?,
            train_samples: train.len(),
            test_samples: test.len(),
            weights,
            weights_sha256: sha256_hex(&bytes),
            pretrained_sha256: Some(ck.sha256.clone()),
            pretrain_checkpoint: ck.path.clone(),
            pretrain_set_sha256: Some(ck.set_sha256.clone()),
        })
    }

    /// Runs several plans on one target: pre-trainings first, then every
    /// (plan, fold) fine-tuning, each stage in parallel.
    fn run_plans(&self, plans: &[(TransferPlan, String)]) -> Result<Vec<RunRecord>> {
        for (p, _) in plans {
            p.validate()?;
        }
        let folds: Vec<Folds> = plans
            .iter()
            .map(|(p, _)| self.folds(&p.target, p.seed))
            .collect::<Result<_>>()?;
        let mut pre: Vec<(usize, usize)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, (p, _)) in plans.iter().enumerate() {
            for f in 0..folds[i].k() {
                let fold_key = if p.scenario.includes_target() { f } else { 0 };
                if seen.insert((Self::pretrain_label(p, fold_key), p.seed, p.pretrain_epochs)) {
                    pre.push((i, fold_key));
                }
            }
        }
        let start = Instant::now();
        self.pool.install(|| {
            pre.par_iter()
                .map(|&(i, f)| self.pretrained(&plans[i].0, &folds[i], f).map(|_| ()))
                .collect::<Result<Vec<()>>>()
        })?;
        let tasks: Vec<(usize, usize)> = (0..plans.len())
            .flat_map(|i| (0..folds[i].k()).map(move |f| (i, f)))
            .collect();
        let results: Vec<FoldResult> = self.pool.install(|| {
            tasks
                .par_iter()
                .map(|&(i, f)| self.transfer_fold(&plans[i].0, &folds[i], f, &plans[i].1))
                .collect::<Result<_>>()
        })?;
        let elapsed = start.elapsed();
        let mut results = results.into_iter();
        let mut records = Vec::with_capacity(plans.len());
        for (i, (p, _)) in plans.iter().enumerate() {
            let fr: Vec<FoldResult> = results.by_ref().take(folds[i].k()).collect();
            records.push(self.record(p.cell(), &p.target, p.sources.clone(), Some(p.clone()), fr, elapsed));
        }
        Ok(records)
    }

    fn compare(&self, record: RunRecord, baseline: &RunRecord) -> Result<EvalReport> {
        if record.fold_uars.len() != baseline.fold_uars.len() {
            return Err(Error::Experiment("TT baseline has a different fold count".into()));
        }
        let tt = paired_t_test(&record.fold_uars, &baseline.fold_uars)?;
        let gain = stats::gain(baseline.mean_uar, record.mean_uar).ok();
        Ok(EvalReport {
            baseline_mean_uar: baseline.mean_uar,
            gain,
            t: tt.t.is_finite().then_some(tt.t),
            p: tt.p,
            mark: classify_significance(tt.p, tt.mean_diff, self.setup.experiment.alpha),
            record,
        })
    }

    /// One transfer cell, reported against its TT baseline.
    pub fn run_transfer(&self, plan: &TransferPlan, tt: &RunRecord) -> Result<EvalReport> {
        if tt.cell != TT_CELL || tt.target != plan.target {
            return Err(Error::Experiment(format!("missing TT baseline for `{}`", plan.target)));
        }
        let out_rel = format!("{}/{}", plan.target, plan.cell());
        let rec = self.run_plans(&[(plan.clone(), out_rel.clone())])?.remove(0);
        let report = self.compare(rec, tt)?;
        self.write_report(&format!("{out_rel}/report.json"), &report)?;
        Ok(report)
    }

    /// TT plus every configured scenario × approach cell for one target.
    pub fn run_matrix(&self, target: &str) -> Result<TargetMatrix> {
        let sources = self.sources_for(target)?;
        let tt = self.run_tt(target)?;
        let plans: Vec<(TransferPlan, String)> = self
            .setup
            .experiment
            .scenarios
            .iter()
            .flat_map(|&s| self.setup.experiment.approaches.iter().map(move |&a| (s, a)))
            .map(|(s, a)| (self.plan(s, a, target, &sources), format!("{target}/{}", cell_name(s, a))))
            .collect();
        let records = self.run_plans(&plans)?;
        let mut cells = Vec::with_capacity(records.len());
        for (rec, (_, out_rel)) in records.into_iter().zip(&plans) {
            let report = self.compare(rec, &tt)?;
            self.write_report(&format!("{out_rel}/report.json"), &report)?;
            cells.push(report);
        }
        Ok(TargetMatrix {
            target: target.to_string(),
            sources,
            tt,
            cells,
        })
    }

    /// The matrix for every configured target, with mean/std gain rows.
    pub fn matrix(&self) -> Result<MatrixReport> {
        let targets = &self.setup.experiment.targets;
        if targets.is_empty() {
            return Err(Error::Config("experiment.targets is empty".into()));
        }
        let rows: Vec<TargetMatrix> = targets.iter().map(|t| self.run_matrix(t)).collect::<Result<_>>()?;
        let summary = summarize(&rows);
        Ok(MatrixReport {
            experiment: self.setup.experiment.name.clone(),
            seed: self.seed(),
            config_hash: self.config_hash.clone(),
            targets: rows,
            summary,
        })
    }

    /// Rows `All` and `-d` for every source `d`, each over the configured
    /// scenarios and ablation approaches, marked against `All`.
    pub fn run_ablation(&self, target: &str) -> Result<TargetAblation> {
        let sources = self.sources_for(target)?;
        if sources.len() < 2 {
            return Err(Error::Experiment(format!(
                "ablation for `{target}` needs at least two source domains"
            )));
        }
        let exp = &self.setup.experiment;
        let mut row_defs: Vec<(String, Option<String>, Vec<String>)> = vec![("All".into(), None, sources.clone())];
        for d in &sources {
            let rest: Vec<String> = sources.iter().filter(|s| *s != d).cloned().collect();
            row_defs.push((format!("-{d}"), Some(d.clone()), rest));
        }
        let cells: Vec<(Scenario, Approach)> = exp
            .scenarios
            .iter()
            .flat_map(|&s| exp.ablation_approaches.iter().map(move |&a| (s, a)))
            .collect();
        let mut plans = Vec::new();
        for (label, _, srcs) in &row_defs {
            for &(s, a) in &cells {
                let dir = format!("{target}/ablation/{label}/{}", cell_name(s, a));
                plans.push((self.plan(s, a, target, srcs), dir));
            }
        }
        let records = self.run_plans(&plans)?;
        let mut dirs = plans.iter().map(|(_, d)| d);
        let all: Vec<RunRecord> = records[..cells.len()].to_vec();
        let mut rows = Vec::with_capacity(row_defs.len());
        let mut it = records.into_iter();
        for (label, excluded, srcs) in row_defs {
            let mut row_cells = Vec::with_capacity(cells.len());
            for (j, &(scenario, approach)) in cells.iter().enumerate() {
                let record = it.next().expect("one record per plan");
                let dir = dirs.next().expect("one directory per plan");
                let tt = paired_t_test(&record.fold_uars, &all[j].fold_uars)?;
                let cell = AblationCell {
                    scenario,
                    approach,
                    t: tt.t.is_finite().then_some(tt.t),
                    p: tt.p,
                    mark: classify_significance(tt.p, tt.mean_diff, exp.alpha),
                    record,
                };
                self.write_report(&format!("{dir}/report.json"), &cell)?;
                row_cells.push(cell);
            }
            rows.push(AblationRow {
                label,
                excluded,
                sources: srcs,
                cells: row_cells,
            });
        }
        Ok(TargetAblation {
            target: target.to_string(),
            rows,
        })
    }

    pub fn ablation(&self) -> Result<AblationReport> {
        let targets = &self.setup.experiment.targets;
        if targets.is_empty() {
            return Err(Error::Config("experiment.targets is empty".into()));
        }
        Ok(AblationReport {
            experiment: self.setup.experiment.name.clone(),
            seed: self.seed(),
            config_hash: self.config_hash.clone(),
            alpha: self.setup.experiment.alpha,
            targets: targets.iter().map(|t| self.run_ablation(t)).collect::<Result<_>>()?,
        })
    }

    pub fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }
}

/// Mean and sample std of each cell's gain over targets, in cell order.
pub(crate) fn summarize(rows: &[TargetMatrix]) -> Vec<SummaryCell> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    first
        .cells
        .iter()
        .map(|c| {
            let gains: Option<Vec<f64>> = rows
                .iter()
                .map(|r| r.cells.iter().find(|x| x.record.cell == c.record.cell).and_then(|x| x.gain))
                .collect();
            let (mean_gain, std_gain) = match gains {
                Some(g) if !g.is_empty() => (
                    Some(stats::mean(&g)),
                    (g.len() >= 2).then(|| stats::sample_std(&g)),
                ),
                _ => (None, None),
            };
            SummaryCell {
                cell: c.record.cell.clone(),
                mean_gain,
                std_gain,
            }
        })
        .collect()
}
