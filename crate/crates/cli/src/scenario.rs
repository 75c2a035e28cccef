//! End-to-end scenario harness.
//!
//! Composes synthesis, training, discrimination, clustering, update, and
//! evaluation into one reproducible run. Every stage works through files in
//! the output directory — the pipeline is exactly the composition of the
//! individual subcommands, so each report number can be recomputed from the
//! persisted artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use owtc_core::classifier::{accuracy, ArchitectureSpec, ArchKind};
use owtc_core::discriminator::{discriminate, DiscriminationResult};
use owtc_core::labeler::label_unknowns;
use owtc_core::metrics::{confusion, pair_counts, precision_recall_f, rand_index, throughput_bench,
    ConfusionMatrix};
use owtc_core::nn::{load_model, save_model, NeuralModel, Optimizer, TrainConfig};
use owtc_core::packet::{default_profiles, generate_packets, read_dataset, write_dataset,
    LabeledDataset, PacketVector, SynthAppProfile};
use owtc_core::seed;
use owtc_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::report::{BaselineReport, ClusteringReport, EvaluationReport, FilterQuality, RunReport,
    ScoreSets, SeedNote, SetSizes, Timing};

/// Per-class packet counts of the five data portions. Defaults are the
/// desk-scale sizes (a tenth of the paper-scale protocol).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortionSizes {
    /// P1: training packets per existing class.
    pub p1_per_existing: usize,
    /// P3: validation packets per existing class.
    pub p3_per_existing: usize,
    /// P2 and P4 each: packets per existing class.
    pub p24_per_existing: usize,
    /// P2 and P4 each: packets per unknown class.
    pub p24_per_unknown: usize,
    /// P5: test packets per unknown class.
    pub p5_per_unknown: usize,
    /// Active-traffic subsample drawn from P1, per existing class.
    pub active_from_p1_per_existing: usize,
}

impl PortionSizes {
    pub fn desk_scale() -> Self {
        Self {
            p1_per_existing: 250,
            p3_per_existing: 120,
            p24_per_existing: 50,
            p24_per_unknown: 450,
            p5_per_unknown: 120,
            active_from_p1_per_existing: 50,
        }
    }

    /// The paper-scale protocol: 2500 / 1200 / 500 / 4500 / 1200 / 500.
    pub fn paper_scale() -> Self {
        Self {
            p1_per_existing: 2500,
            p3_per_existing: 1200,
            p24_per_existing: 500,
            p24_per_unknown: 4500,
            p5_per_unknown: 1200,
            active_from_p1_per_existing: 500,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.p1_per_existing,
            self.p3_per_existing,
            self.p24_per_existing,
            self.p24_per_unknown,
            self.p5_per_unknown,
            self.active_from_p1_per_existing,
        ];
        if all.iter().any(|&n| n == 0) {
            return Err(Error::Validation("portion sizes must be positive".into()));
        }
        if self.active_from_p1_per_existing > self.p1_per_existing {
            return Err(Error::Validation(
                "active-traffic subsample cannot exceed P1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for PortionSizes {
    fn default() -> Self {
        Self::desk_scale()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.03,
            epochs: 12,
            batch_size: 16,
        }
    }
}

/// Where the threshold level epsilon comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum EpsilonMode {
    /// Measure classifier accuracy on the validation portion P3.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub name: String,
    /// Synthetic application profiles; `null` uses the built-in six.
    pub profiles: Option<Vec<SynthAppProfile>>,
    /// Indices into the profile list.
    pub existing: Vec<usize>,
    /// Indices into the profile list; may be empty (null scenario).
    pub unknown: Vec<usize>,
    pub portions: PortionSizes,
    pub seed: u64,
    pub architecture: ArchKind,
    pub epsilon: EpsilonMode,
    pub train: TrainParams,
    /// Fine-tune epochs of the transfer update.
    pub transfer_epochs: usize,
    /// Epoch budget of the from-scratch baseline.
    pub retrain_epochs: usize,
    pub baseline_retrain: bool,
    pub k_max: usize,
    pub variance_target: f64,
    pub bench_rounds: usize,
    pub bench_per_round: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default-synthetic".into(),
            profiles: None,
            existing: vec![0, 1, 2, 3],
            unknown: vec![4, 5],
            portions: PortionSizes::desk_scale(),
            seed: 7,
            architecture: ArchKind::Mlp,
            epsilon: EpsilonMode::Auto,
            train: TrainParams::default(),
            transfer_epochs: 6,
            retrain_epochs: 12,
            baseline_retrain: false,
            k_max: 10,
            variance_target: 0.95,
            bench_rounds: 5,
            bench_per_round: 200,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("scenario config: {e}")))?;
        Ok(config)
    }

    fn resolve_profiles(&self) -> Vec<SynthAppProfile> {
        self.profiles.clone().unwrap_or_else(default_profiles)
    }

    fn validate(&self, profiles: &[SynthAppProfile]) -> Result<()> {
        self.portions.validate()?;
        if self.existing.is_empty() {
            return Err(Error::Validation("need at least one existing class".into()));
        }
        if self.existing.len() < 2 {
            return Err(Error::Validation(
                "the classifier needs at least two existing classes".into(),
            ));
        }
        for &idx in self.existing.iter().chain(&self.unknown) {
            if idx >= profiles.len() {
                return Err(Error::Validation(format!(
                    "profile index {idx} out of range ({} profiles)",
                    profiles.len()
                )));
            }
        }
        for &u in &self.unknown {
            if self.existing.contains(&u) {
                return Err(Error::Validation(format!(
                    "class {u} cannot be both existing and unknown"
                )));
            }
        }
        if let EpsilonMode::Fixed(v) = self.epsilon {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Validation(format!(
                    "fixed epsilon must lie in (0, 1], got {v}"
                )));
            }
        }
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return Err(Error::Validation("variance target must lie in (0, 1]".into()));
        }
        if self.k_max < 2 {
            return Err(Error::Validation("k_max must be at least 2".into()));
        }
        Ok(())
    }
}

/// Index file written by the discrimination stage; also the input format of
/// the `cluster` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscriminationFile {
    pub traffic_file: String,
    pub discriminator_file: Option<String>,
    pub theta: f64,
    pub epsilon: f64,
    pub low_confidence: Vec<usize>,
    pub remaining: Vec<usize>,
    pub swept: Vec<usize>,
    pub unknown: Vec<usize>,
    pub fallback: bool,
    pub warnings: Vec<String>,
}

impl DiscriminationFile {
    pub fn from_result(result: &DiscriminationResult, traffic_file: &str,
        discriminator_file: Option<&str>) -> Self {
        Self {
            traffic_file: traffic_file.to_string(),
            discriminator_file: discriminator_file.map(str::to_string),
            theta: result.threshold.theta,
            epsilon: result.threshold.epsilon,
            low_confidence: result.low_confidence.clone(),
            remaining: result.remaining.clone(),
            swept: result.swept.clone(),
            unknown: result.unknown.clone(),
            fallback: result.fallback,
            warnings: result.warnings.clone(),
        }
    }
}

/// Labels file written by the clustering stage; also the input format of the
/// `update` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterFile {
    pub traffic_file: String,
    /// Indices into the traffic file (the unknown set P_n).
    pub indices: Vec<usize>,
    /// Cluster label per index, contiguous 0..K.
    pub labels: Vec<u32>,
    pub chosen_k: usize,
    pub degenerate: bool,
    pub bic_table: Vec<owtc_core::labeler::BicRow>,
    pub retained_dimension: usize,
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("parsing {}: {e}", path.display())))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

struct StageClock {
    stages: BTreeMap<String, f64>,
    current: Option<(String, Instant)>,
}

impl StageClock {
    fn new() -> Self {
        Self {
            stages: BTreeMap::new(),
            current: None,
        }
    }

    fn start(&mut self, name: &str) {
        self.finish();
        self.current = Some((name.to_string(), Instant::now()));
    }

    fn finish(&mut self) {
        if let Some((name, started)) = self.current.take() {
            *self.stages.entry(name).or_insert(0.0) += started.elapsed().as_secs_f64();
        }
    }
}

/// Runs the full open-world episode into `out_dir` and returns the report
/// (also written as `run_report.json`).
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path) -> Result<RunReport> {
    let profiles = config.resolve_profiles();
    config.validate(&profiles)?;
    fs::create_dir_all(out_dir)?;
    let root = config.seed;
    let mut clock = StageClock::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut artifact_paths: Vec<PathBuf> = Vec::new();

    // ---- portions -------------------------------------------------------
    clock.start("portions");
    let existing_count = config.existing.len();
    let sizes = &config.portions;
    let mut train_ds = LabeledDataset::new();
    let mut val_ds = LabeledDataset::new();
    let mut test_ds = LabeledDataset::new();
    let mut traffic_records: Vec<(PacketVector, u32)> = Vec::new();
    let mut active_subsample: BTreeMap<u32, Vec<usize>> = BTreeMap::new();

    for (slot, &pidx) in config.existing.iter().enumerate() {
        let profile = &profiles[pidx];
        let label = slot as u32;
        let total = sizes.p1_per_existing + sizes.p3_per_existing + 2 * sizes.p24_per_existing;
        let pool = generate_packets(profile, total, seed::derive(root, &format!("pool.existing{slot}")))?;
        let (p1, rest) = pool.split_at(sizes.p1_per_existing);
        let (p3, rest) = rest.split_at(sizes.p3_per_existing);
        let (p2, p4) = rest.split_at(sizes.p24_per_existing);

        train_ds.set_class_name(label, profile.name.clone());
        val_ds.set_class_name(label, profile.name.clone());
        test_ds.set_class_name(label, profile.name.clone());
        for v in p1 {
            train_ds.push(v.clone(), Some(label));
        }
        for v in p3 {
            val_ds.push(v.clone(), Some(label));
            test_ds.push(v.clone(), Some(label));
        }
        for v in p2.iter().chain(p4) {
            traffic_records.push((v.clone(), label));
        }
        // Seeded subsample of P1 joins the active traffic; recorded by index.
        let picks = seed::pick_indices(
            sizes.p1_per_existing,
            sizes.active_from_p1_per_existing,
            root,
            &format!("active.existing{slot}"),
        );
        for &i in &picks {
            traffic_records.push((p1[i].clone(), label));
        }
        active_subsample.insert(label, picks);
    }

    for (uslot, &pidx) in config.unknown.iter().enumerate() {
        let profile = &profiles[pidx];
        let truth = (existing_count + uslot) as u32;
        let total = 2 * sizes.p24_per_unknown + sizes.p5_per_unknown;
        let pool = generate_packets(profile, total, seed::derive(root, &format!("pool.unknown{uslot}")))?;
        let (p2, rest) = pool.split_at(sizes.p24_per_unknown);
        let (p4, p5) = rest.split_at(sizes.p24_per_unknown);
        test_ds.set_class_name(truth, profile.name.clone());
        for v in p2.iter().chain(p4) {
            traffic_records.push((v.clone(), truth));
        }
        for v in p5 {
            test_ds.push(v.clone(), Some(truth));
        }
    }

    // Deterministic shuffle of the active traffic order.
    seed::shuffle(&mut traffic_records, root, "traffic.order");
    let mut traffic_ds = LabeledDataset::new();
    for (slot, &pidx) in config.existing.iter().enumerate() {
        traffic_ds.set_class_name(slot as u32, profiles[pidx].name.clone());
    }
    for (uslot, &pidx) in config.unknown.iter().enumerate() {
        traffic_ds.set_class_name((existing_count + uslot) as u32, profiles[pidx].name.clone());
    }
    for (v, truth) in &traffic_records {
        traffic_ds.push(v.clone(), Some(*truth));
    }

    let train_path = out_dir.join("train.owtc");
    let val_path = out_dir.join("validation.owtc");
    let test_path = out_dir.join("test.owtc");
    let traffic_path = out_dir.join("traffic.owtc");
    write_dataset(&train_ds, &train_path)?;
    write_dataset(&val_ds, &val_path)?;
    write_dataset(&test_ds, &test_path)?;
    write_dataset(&traffic_ds, &traffic_path)?;
    let active_path = out_dir.join("active_subsample.json");
    save_json(&active_subsample, &active_path)?;
    artifact_paths.extend([
        train_path.clone(),
        val_path.clone(),
        test_path.clone(),
        traffic_path.clone(),
        active_path,
    ]);

    // ---- train the initial classifier ------------------------------------
    clock.start("train_initial");
    let arch = ArchitectureSpec::of(config.architecture);
    let train_ds = read_dataset(&train_path)?;
    let val_ds = read_dataset(&val_path)?;
    let base_cfg = TrainConfig {
        learning_rate: config.train.learning_rate,
        epochs: config.train.epochs,
        batch_size: config.train.batch_size,
        seed: seed::derive(root, "train.initial"),
        optimizer: Optimizer::SgdMomentum,
    };
    let trained = owtc_core::classifier::train_classifier(&arch, &train_ds, &base_cfg)?;
    let model_t_path = out_dir.join("model_t.ownn");
    save_model(&trained.model, &model_t_path)?;
    artifact_paths.push(model_t_path.clone());
    let model_t = load_model(&model_t_path)?;

    let epsilon = match config.epsilon {
        EpsilonMode::Auto => accuracy(&model_t, &val_ds)?,
        EpsilonMode::Fixed(v) => v,
    };

    // ---- discrimination ---------------------------------------------------
    clock.start("discriminate");
    let traffic_ds = read_dataset(&traffic_path)?;
    let traffic_vectors: Vec<PacketVector> = traffic_ds.vectors().cloned().collect();
    let disc_cfg = TrainConfig {
        seed: seed::derive(root, "train.discriminator"),
        ..base_cfg.clone()
    };
    let result = discriminate(&traffic_vectors, &train_ds, &model_t, epsilon, &disc_cfg)?;
    warnings.extend(result.warnings.iter().cloned());

    let discriminator_file = if let Some(d) = &result.discriminator {
        let path = out_dir.join("discriminator.ownn");
        save_model(d, &path)?;
        artifact_paths.push(path);
        Some("discriminator.ownn".to_string())
    } else {
        None
    };
    let disc_file = DiscriminationFile::from_result(&result, "traffic.owtc",
        discriminator_file.as_deref());
    let disc_path = out_dir.join("discrimination.json");
    save_json(&disc_file, &disc_path)?;
    artifact_paths.push(disc_path);

    let truth_labels: Vec<u32> = traffic_ds
        .records()
        .iter()
        .map(|r| r.label.expect("traffic records carry truth ids"))
        .collect();
    let is_unknown_truth = |t: u32| (t as usize) >= existing_count;
    let truth_unknown_total = truth_labels.iter().filter(|&&t| is_unknown_truth(t)).count();
    let filter_quality = if truth_unknown_total > 0 {
        let caught = result
            .unknown
            .iter()
            .filter(|&&i| is_unknown_truth(truth_labels[i]))
            .count();
        let left_true = result
            .low_confidence
            .iter()
            .filter(|&&i| is_unknown_truth(truth_labels[i]))
            .count();
        Some(FilterQuality {
            recall: caught as f64 / truth_unknown_total as f64,
            purity: if result.unknown.is_empty() {
                0.0
            } else {
                caught as f64 / result.unknown.len() as f64
            },
            prefilter_purity: if result.low_confidence.is_empty() {
                0.0
            } else {
                left_true as f64 / result.low_confidence.len() as f64
            },
            truth_unknown_in_traffic: truth_unknown_total,
        })
    } else {
        None
    };

    // ---- score sets for the report / plots -------------------------------
    clock.start("scores");
    let val_vectors: Vec<PacketVector> = val_ds.vectors().cloned().collect();
    let known_validation = owtc_core::classifier::score_set(&model_t, &val_vectors)?;
    let unknown_vectors_all: Vec<PacketVector> = traffic_ds
        .records()
        .iter()
        .filter(|r| is_unknown_truth(r.label.expect("labeled")))
        .map(|r| r.vector.clone())
        .collect();
    let unknown_traffic = owtc_core::classifier::score_set(&model_t, &unknown_vectors_all)?;

    // ---- clustering -------------------------------------------------------
    clock.start("cluster");
    let mut clustering_report = None;
    let mut cluster_file: Option<ClusterFile> = None;
    if config.unknown.is_empty() {
        warnings.push("no unknown classes configured; clustering and update skipped".into());
    } else if result.unknown.len() < 2 {
        warnings.push(format!(
            "only {} packets filtered as unknown; clustering and update skipped",
            result.unknown.len()
        ));
    } else {
        let unknown_packets: Vec<PacketVector> = result
            .unknown
            .iter()
            .map(|&i| traffic_vectors[i].clone())
            .collect();
        let outcome = label_unknowns(
            &unknown_packets,
            &model_t,
            config.variance_target,
            config.k_max,
            seed::derive(root, "cluster"),
        )?;
        if outcome.clustering.degenerate {
            warnings.push("clustered feature maps are degenerate; K forced to 1".into());
        }
        let mut cluster_sizes = vec![0usize; outcome.clustering.chosen_k];
        for &l in &outcome.clustering.labels {
            cluster_sizes[l as usize] += 1;
        }
        let truth_of_unknown_set: Vec<u32> =
            result.unknown.iter().map(|&i| truth_labels[i]).collect();
        let (ri, prf) = if truth_of_unknown_set.len() >= 2 {
            let counts = pair_counts(&truth_of_unknown_set, &outcome.clustering.labels)?;
            (
                Some(rand_index(&truth_of_unknown_set, &outcome.clustering.labels)?),
                Some(precision_recall_f(counts, 1.0)),
            )
        } else {
            (None, None)
        };
        clustering_report = Some(ClusteringReport {
            bic_table: outcome.clustering.table.clone(),
            chosen_k: outcome.clustering.chosen_k,
            degenerate: outcome.clustering.degenerate,
            cluster_sizes,
            retained_dimension: outcome.components.retained,
            explained_ratio: outcome.components.explained_ratio.clone(),
            rand_index: ri,
            pairwise: prf,
        });
        cluster_file = Some(ClusterFile {
            traffic_file: "traffic.owtc".into(),
            indices: result.unknown.clone(),
            labels: outcome.clustering.labels.clone(),
            chosen_k: outcome.clustering.chosen_k,
            degenerate: outcome.clustering.degenerate,
            bic_table: outcome.clustering.table.clone(),
            retained_dimension: outcome.components.retained,
        });
        let cluster_path = out_dir.join("cluster.json");
        save_json(cluster_file.as_ref().expect("just set"), &cluster_path)?;
        artifact_paths.push(cluster_path);
    }

    // ---- merge + transfer update -----------------------------------------
    clock.start("update");
    let mut evaluation = None;
    let mut bench_updated = None;
    if let Some(cfile) = &cluster_file {
        let unknown_packets: Vec<PacketVector> = cfile
            .indices
            .iter()
            .map(|&i| traffic_vectors[i].clone())
            .collect();
        let merged = owtc_core::updater::merge_dataset(&train_ds, &unknown_packets, &cfile.labels)?;
        let merged_path = out_dir.join("data_t1.owtc");
        write_dataset(&merged, &merged_path)?;
        artifact_paths.push(merged_path.clone());
        let merged = read_dataset(&merged_path)?;

        let transfer_base = TrainConfig {
            epochs: config.transfer_epochs,
            seed: seed::derive(root, "train.transfer"),
            ..base_cfg.clone()
        };
        let plan = owtc_core::updater::UpdatePlan::transfer_default(
            existing_count,
            cfile.chosen_k,
            &transfer_base,
        );
        let updated = owtc_core::updater::transfer_update(&model_t, &merged, &plan)?;
        let model_t1_path = out_dir.join("model_t1.ownn");
        save_model(&updated, &model_t1_path)?;
        artifact_paths.push(model_t1_path.clone());
        let updated = load_model(&model_t1_path)?;

        // ---- evaluation ---------------------------------------------------
        clock.start("evaluate");
        let test_ds = read_dataset(&test_path)?;
        let mapping = cluster_truth_mapping(
            existing_count,
            cfile,
            &truth_labels,
        );
        let eval = evaluate_update(
            &model_t,
            &updated,
            &val_ds,
            &test_ds,
            existing_count,
            &merged,
            &mapping,
            config.transfer_epochs,
        )?;

        let baseline = if config.baseline_retrain {
            clock.start("baseline_retrain");
            let retrain_cfg = TrainConfig {
                epochs: config.retrain_epochs,
                seed: seed::derive(root, "train.retrain"),
                ..base_cfg.clone()
            };
            let baseline = owtc_core::updater::retrain_from_scratch(&arch, &merged, &retrain_cfg)?;
            let baseline_path = out_dir.join("baseline_retrain.ownn");
            save_model(&baseline.model, &baseline_path)?;
            artifact_paths.push(baseline_path.clone());
            let baseline_model = load_model(&baseline_path)?;
            let (overall, new_acc) = mapped_accuracies(
                &baseline_model,
                &test_ds,
                existing_count,
                &mapping,
            )?;
            Some(BaselineReport {
                epochs: config.retrain_epochs,
                accuracy_overall: overall,
                accuracy_new_classes: new_acc,
            })
        } else {
            None
        };
        evaluation = Some(EvaluationReport { baseline, ..eval });

        clock.start("bench");
        let bench_set = bench_sample(&test_ds, config.bench_per_round, root);
        bench_updated = Some(throughput_bench(&updated, &bench_set, 1, config.bench_rounds)?);
    }

    // ---- bench the original model ------------------------------------------
    clock.start("bench");
    let bench_set = bench_sample(&val_ds, config.bench_per_round, root);
    let bench_original = Some(throughput_bench(&model_t, &bench_set, 1, config.bench_rounds)?);
    clock.finish();

    // ---- digests + report ---------------------------------------------------
    let mut artifacts = BTreeMap::new();
    for path in &artifact_paths {
        digest_with_sidecar(out_dir, path, &mut artifacts)?;
    }

    let report = RunReport {
        config: config.clone(),
        seeds: SeedNote {
            root,
            scheme: "sub-seeds: splitmix64(root xor fnv1a(purpose label))".into(),
        },
        epsilon,
        theta: result.threshold.theta,
        sets: SetSizes {
            traffic: traffic_vectors.len(),
            low_confidence: result.low_confidence.len(),
            remaining: result.remaining.len(),
            swept: result.swept.len(),
            unknown: result.unknown.len(),
            fallback: result.fallback,
        },
        scores: ScoreSets {
            known_validation,
            unknown_traffic,
        },
        filter_quality,
        clustering: clustering_report,
        evaluation,
        artifacts,
        warnings,
        timing: Timing {
            stage_seconds: clock.stages,
            bench_original,
            bench_updated,
        },
    };
    save_json(&report, &out_dir.join("run_report.json"))?;
    Ok(report)
}

fn digest_with_sidecar(
    out_dir: &Path,
    path: &Path,
    artifacts: &mut BTreeMap<String, String>,
) -> Result<()> {
    let rel = path
        .strip_prefix(out_dir)
        .unwrap_or(path)
        .to_string_lossy()
        .into_owned();
    artifacts.insert(rel.clone(), sha256_file(path)?);
    let sidecar = path.with_file_name(format!(
        "{}.names.json",
        path.file_name().unwrap_or_default().to_string_lossy()
    ));
    if sidecar.exists() {
        let rel_sidecar = format!("{rel}.names.json");
        artifacts.insert(rel_sidecar, sha256_file(&sidecar)?);
    }
    Ok(())
}

fn bench_sample(dataset: &LabeledDataset, per_round: usize, root: u64) -> Vec<PacketVector> {
    let picks = seed::pick_indices(
        dataset.len(),
        per_round.min(dataset.len()),
        root,
        "bench.sample",
    );
    picks
        .iter()
        .map(|&i| dataset.records()[i].vector.clone())
        .collect()
}

/// Majority-vote mapping from truth-unknown class ids to discovered global
/// class ids, derived from the ground truth of the clustered packets.
pub fn cluster_truth_mapping(
    existing_count: usize,
    cfile: &ClusterFile,
    truth_labels: &[u32],
) -> BTreeMap<u32, u32> {
    // counts[(truth, cluster)]
    let mut counts: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (&traffic_idx, &cluster) in cfile.indices.iter().zip(&cfile.labels) {
        let truth = truth_labels[traffic_idx];
        if (truth as usize) >= existing_count {
            *counts.entry((truth, cluster)).or_insert(0) += 1;
        }
    }
    let mut best: BTreeMap<u32, (u32, usize)> = BTreeMap::new();
    for (&(truth, cluster), &n) in &counts {
        let entry = best.entry(truth).or_insert((cluster, n));
        if n > entry.1 {
            *entry = (cluster, n);
        }
    }
    best.into_iter()
        .map(|(truth, (cluster, _))| (truth, existing_count as u32 + cluster))
        .collect()
}

/// Accuracy of a model over the mixed test set with truth-unknown classes
/// remapped to their discovered ids. Returns (overall, new-class accuracy).
fn mapped_accuracies(
    model: &NeuralModel,
    test_ds: &LabeledDataset,
    existing_count: usize,
    mapping: &BTreeMap<u32, u32>,
) -> Result<(f64, Option<f64>)> {
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut new_correct = 0usize;
    let mut new_total = 0usize;
    for record in test_ds.records() {
        let truth = record.label.expect("test records are labeled");
        let expected = if (truth as usize) < existing_count {
            Some(truth)
        } else {
            mapping.get(&truth).copied()
        };
        let predicted = owtc_core::classifier::classify(model, &record.vector)?.predicted_label;
        total += 1;
        let ok = expected == Some(predicted);
        if ok {
            correct += 1;
        }
        if (truth as usize) >= existing_count {
            new_total += 1;
            if ok {
                new_correct += 1;
            }
        }
    }
    let new_acc = (new_total > 0).then(|| new_correct as f64 / new_total as f64);
    Ok((correct as f64 / total as f64, new_acc))
}

#[allow(clippy::too_many_arguments)]
fn evaluate_update(
    original: &NeuralModel,
    updated: &NeuralModel,
    val_ds: &LabeledDataset,
    test_ds: &LabeledDataset,
    existing_count: usize,
    merged: &LabeledDataset,
    mapping: &BTreeMap<u32, u32>,
    transfer_epochs: usize,
) -> Result<EvaluationReport> {
    let pre_update_confusion = confusion(original, val_ds)?;
    let accuracy_existing_before = pre_update_confusion.accuracy();

    let m_after = updated.class_count();
    let names = (0..m_after as u32).map(|i| merged.class_name(i)).collect();
    let mut post = ConfusionMatrix::new(m_after, names);
    let mut unmapped = 0usize;
    let mut existing_correct = 0usize;
    let mut existing_total = 0usize;
    let mut new_correct = 0usize;
    let mut new_total = 0usize;
    for record in test_ds.records() {
        let truth = record.label.expect("test records are labeled");
        let predicted = owtc_core::classifier::classify(updated, &record.vector)?.predicted_label;
        let expected = if (truth as usize) < existing_count {
            existing_total += 1;
            Some(truth)
        } else {
            new_total += 1;
            mapping.get(&truth).copied()
        };
        match expected {
            Some(e) => {
                post.record(e as usize, predicted as usize);
                if e == predicted {
                    if (truth as usize) < existing_count {
                        existing_correct += 1;
                    } else {
                        new_correct += 1;
                    }
                }
            }
            None => unmapped += 1,
        }
    }
    let accuracy_existing_after = if existing_total > 0 {
        existing_correct as f64 / existing_total as f64
    } else {
        0.0
    };
    let accuracy_new_classes = (new_total > 0).then(|| new_correct as f64 / new_total as f64);
    let total = existing_total + new_total;
    let accuracy_overall = if total > 0 {
        (existing_correct + new_correct) as f64 / total as f64
    } else {
        0.0
    };

    let truth_to_discovered = mapping
        .iter()
        .map(|(&truth, &global)| (test_ds.class_name(truth), global))
        .collect();

    Ok(EvaluationReport {
        pre_update_confusion,
        post_update_confusion: post,
        accuracy_existing_before,
        accuracy_existing_after,
        accuracy_new_classes,
        accuracy_overall,
        unmapped_unknown_packets: unmapped,
        truth_to_discovered,
        transfer_epochs,
        baseline: None,
    })
}
