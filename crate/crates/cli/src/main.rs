//! `owtc` — open-world traffic classification pipeline.
//!
//! Subcommands cover every stage (synth, ingest, train, classify,
//! discriminate, cluster, update, evaluate, bench, plot) plus `pipeline`,
//! which composes them into a reproducible end-to-end scenario run.
//! Exit codes: 0 success, 2 validation error, 3 data-format error,
//! 4 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use owtc_cli::plot::emit_plots;
use owtc_cli::report::RunReport;
use owtc_cli::scenario::{load_json, run_scenario, save_json, ClusterFile, DiscriminationFile,
    PortionSizes, ScenarioConfig};
use owtc_core::classifier::{accuracy, classify, train_classifier, ArchKind, ArchitectureSpec};
use owtc_core::discriminator::discriminate;
use owtc_core::labeler::label_unknowns;
use owtc_core::metrics::{confusion, pair_counts, precision_recall_f, rand_index,
    throughput_bench};
use owtc_core::nn::{load_model, save_model, Optimizer, TrainConfig};
use owtc_core::packet::{default_profiles, ingest_pcap, preprocess, profiles_from_json,
    read_dataset, write_dataset, LabeledDataset};
use owtc_core::seed;
use owtc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "owtc", version, about = "Open-world traffic classification pipeline")]
struct Cli {
    /// Root seed; all randomness derives from it.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Directory that relative output paths are joined to.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Stdout summary format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Mlp,
    Cnn1d,
    Cnn2d,
    Cnn3d,
}

impl From<ArchArg> for ArchKind {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Mlp => ArchKind::Mlp,
            ArchArg::Cnn1d => ArchKind::Cnn1d,
            ArchArg::Cnn2d => ArchKind::Cnn2d,
            ArchArg::Cnn3d => ArchKind::Cnn3d,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded synthetic application traffic.
    Synth {
        /// Profile config JSON, or "default" for the built-in six apps.
        #[arg(long)]
        profiles: String,
        /// Packets per application class.
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a capture file into a dataset.
    Ingest {
        #[arg(long)]
        pcap: PathBuf,
        /// Class id assigned to every packet.
        #[arg(long)]
        label: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a labeled dataset.
    Train {
        #[arg(long, value_enum)]
        arch: ArchArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        epochs: usize,
        #[arg(long, default_value_t = 0.03)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        batch: usize,
    },
    /// Score a dataset, writing per-packet confidence CSV.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scores_out: PathBuf,
    },
    /// Filter packets of unknown applications from active traffic.
    Discriminate {
        #[arg(long)]
        model: PathBuf,
        /// Known (existing-class) training dataset.
        #[arg(long)]
        known: PathBuf,
        /// Active traffic dataset.
        #[arg(long)]
        traffic: PathBuf,
        /// "auto" (accuracy of the model on --known) or a value in (0,1].
        #[arg(long, default_value = "auto")]
        epsilon: String,
        /// Output base: writes <out>.json (indices) and <out>.ownn.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        epochs: usize,
        #[arg(long, default_value_t = 0.03)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        batch: usize,
    },
    /// Cluster filtered packets and assign labels autonomously.
    Cluster {
        #[arg(long)]
        model: PathBuf,
        /// Indices JSON written by `discriminate`.
        #[arg(long)]
        unknown: PathBuf,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
        #[arg(long, default_value_t = 0.95)]
        variance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge discovered classes and update the classifier by transfer.
    Update {
        /// Current classifier F_t.
        #[arg(long)]
        model: PathBuf,
        /// Known dataset D_t.
        #[arg(long)]
        known: PathBuf,
        /// Labels JSON written by `cluster`.
        #[arg(long)]
        unknown: PathBuf,
        #[arg(long)]
        out_model: PathBuf,
        #[arg(long)]
        out_data: PathBuf,
        /// Also retrain a from-scratch baseline to this path.
        #[arg(long)]
        baseline_retrain: Option<PathBuf>,
        /// Fine-tune epochs (the transfer learning rate is 0.1x of --lr).
        #[arg(long, default_value_t = 6)]
        epochs: usize,
        #[arg(long, default_value_t = 0.03)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        batch: usize,
        /// Epoch budget of the baseline retrain.
        #[arg(long, default_value_t = 12)]
        retrain_epochs: usize,
    },
    /// Confusion matrix of a model over a labeled dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Write the matrix report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the matrix as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Throughput benchmark (packets/ms and Mbps).
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        #[arg(long, default_value_t = 500)]
        per_round: usize,
        #[arg(long, default_value_t = 3)]
        warmup: usize,
    },
    /// End-to-end scenario: portions, train, filter, cluster, update, eval.
    Pipeline {
        /// Scenario config JSON; defaults to the built-in synthetic scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the paper-scale portion sizes (10x the desk-scale defaults).
        #[arg(long)]
        paper_scale: bool,
        /// Also train the from-scratch baseline for comparison.
        #[arg(long)]
        baseline_retrain: bool,
    },
    /// Render SVG plots from a run report.
    Plot {
        #[arg(long)]
        report: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn resolve(out_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        out_dir.join(path)
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn emit(format: Format, summary: &serde_json::Value, text: &str) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(summary).expect("summary serializes")
        ),
        Format::Text => println!("{text}"),
    }
}

fn train_config(lr: f64, epochs: usize, batch: usize, seed_val: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: lr,
        epochs,
        batch_size: batch,
        seed: seed_val,
        optimizer: Optimizer::SgdMomentum,
    }
}

/// Resolves a file reference stored inside a JSON artifact relative to that
/// artifact's directory.
fn sibling_path(artifact: &Path, reference: &str) -> PathBuf {
    let p = Path::new(reference);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        artifact.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

fn run(cli: Cli) -> Result<()> {
    let out_dir = &cli.out_dir;
    fs::create_dir_all(out_dir)?;
    match cli.command {
        Command::Synth {
            profiles,
            count,
            out,
        } => {
            let profiles = if profiles == "default" {
                default_profiles()
            } else {
                profiles_from_json(&fs::read_to_string(&profiles)?)?
            };
            let dataset = owtc_core::packet::synth_generate(&profiles, count, cli.seed)?;
            let out = resolve(out_dir, &out);
            ensure_parent(&out)?;
            write_dataset(&dataset, &out)?;
            let summary = serde_json::json!({
                "records": dataset.len(),
                "classes": dataset.class_count(),
                "out": out,
            });
            emit(
                cli.format,
                &summary,
                &format!(
                    "wrote {} records over {} classes to {}",
                    dataset.len(),
                    dataset.class_count(),
                    out.display()
                ),
            );
        }
        Command::Ingest { pcap, label, out } => {
            let packets = ingest_pcap(&pcap)?;
            let mut dataset = LabeledDataset::new();
            let mut skipped = 0usize;
            for p in &packets {
                match preprocess(p) {
                    Ok(vector) => dataset.push(vector, Some(label)),
                    Err(Error::EmptyPayload { .. }) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            dataset.set_class_name(
                label,
                pcap.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("class-{label}")),
            );
            let out = resolve(out_dir, &out);
            ensure_parent(&out)?;
            write_dataset(&dataset, &out)?;
            let summary = serde_json::json!({
                "capture_records": packets.len(),
                "vectorized": dataset.len(),
                "skipped_empty_payload": skipped,
                "label": label,
                "out": out,
            });
            emit(
                cli.format,
                &summary,
                &format!(
                    "ingested {} of {} capture records (skipped {} with empty payload) into {}",
                    dataset.len(),
                    packets.len(),
                    skipped,
                    out.display()
                ),
            );
        }
        Command::Train {
            arch,
            data,
            out,
            epochs,
            lr,
            batch,
        } => {
            let dataset = read_dataset(&data)?;
            let spec = ArchitectureSpec::of(arch.into());
            let cfg = train_config(lr, epochs, batch, seed::derive(cli.seed, "cli.train"));
            let trained = train_classifier(&spec, &dataset, &cfg)?;
            let out = resolve(out_dir, &out);
            ensure_parent(&out)?;
            save_model(&trained.model, &out)?;
            let summary = serde_json::json!({
                "arch": spec.kind.to_string(),
                "classes": trained.model.class_count(),
                "validation_accuracy": trained.validation_accuracy,
                "out": out,
            });
            emit(
                cli.format,
                &summary,
                &format!(
                    "trained {} classifier ({} classes), validation accuracy {:.4}, saved to {}",
                    spec.kind,
                    trained.model.class_count(),
                    trained.validation_accuracy,
                    out.display()
                ),
            );
        }
        Command::Classify {
            model,
            data,
            scores_out,
        } => {
            let model = load_model(&model)?;
            let dataset = read_dataset(&data)?;
            let mut csv = String::from("index,predicted_label,s_star,truth_label\n");
            for (i, record) in dataset.records().iter().enumerate() {
                let r = classify(&model, &record.vector)?;
                let truth = record.label.map_or(-1i64, |l| l as i64);
                csv.push_str(&format!(
                    "{i},{},{:.9},{truth}\n",
                    r.predicted_label, r.top_score
                ));
            }
            let scores_out = resolve(out_dir, &scores_out);
            ensure_parent(&scores_out)?;
            fs::write(&scores_out, csv)?;
            let summary = serde_json::json!({
                "records": dataset.len(),
                "scores_out": scores_out,
            });
            emit(
                cli.format,
                &summary,
                &format!(
                    "classified {} packets, scores written to {}",
                    dataset.len(),
                    scores_out.display()
                ),
            );
        }
        Command::Discriminate {
            model,
            known,
            traffic,
            epsilon,
            out,
            epochs,
            lr,
            batch,
        } => {
            let model = load_model(&model)?;
            let known_ds = read_dataset(&known)?;
            let traffic_ds = read_dataset(&traffic)?;
            let traffic_vectors: Vec<_> = traffic_ds.vectors().cloned().collect();
            let eps = match epsilon.as_str() {
                "auto" => accuracy(&model, &known_ds)?,
                v => v.parse::<f64>().map_err(|_| {
                    Error::Validation(format!("epsilon must be \"auto\" or a number, got {v:?}"))
                })?,
            };
            let cfg = train_config(lr, epochs, batch, seed::derive(cli.seed, "cli.discriminate"));
            let result = discriminate(&traffic_vectors, &known_ds, &model, eps, &cfg)?;

            let out = resolve(out_dir, &out);
            ensure_parent(&out)?;
            let json_path = out.with_extension("json");
            let model_path = out.with_extension("ownn");
            let discriminator_file = if let Some(d) = &result.discriminator {
                save_model(d, &model_path)?;
                Some(
                    model_path
                        .file_name()
                        .expect("file name")
                        .to_string_lossy()
                        .into_owned(),
                )
            } else {
                None
            };
            let file = DiscriminationFile::from_result(
                &result,
                &traffic.to_string_lossy(),
                discriminator_file.as_deref(),
            );
            save_json(&file, &json_path)?;

            // Quality bookkeeping when the traffic carries ground truth:
            // labels at or above the known class count mean "unknown app".
            let m_known = known_ds.require_dense_labels()? as u32;
            let truths: Option<Vec<u32>> = traffic_ds
                .records()
                .iter()
                .map(|r| r.label)
                .collect::<Option<Vec<_>>>();
            let quality = truths.as_ref().map(|truths| {
                let unknown_total = truths.iter().filter(|&&t| t >= m_known).count();
                let caught = result
                    .unknown
                    .iter()
                    .filter(|&&i| truths[i] >= m_known)
                    .count();
                serde_json::json!({
                    "truth_unknown_in_traffic": unknown_total,
                    "recall": if unknown_total > 0 { caught as f64 / unknown_total as f64 } else { 0.0 },
                    "purity": if result.unknown.is_empty() { 0.0 } else { caught as f64 / result.unknown.len() as f64 },
                })
            });
            let summary = serde_json::json!({
                "theta": result.threshold.theta,
                "epsilon": eps,
                "traffic": traffic_vectors.len(),
                "low_confidence": result.low_confidence.len(),
                "remaining": result.remaining.len(),
                "swept": result.swept.len(),
                "unknown": result.unknown.len(),
                "fallback": result.fallback,
                "quality": quality,
                "indices_out": json_path,
            });
            emit(
                cli.format,
                &summary,
                &format!(
                    "theta {:.6} (epsilon {:.4}): {} of {} packets filtered as unknown \
                     ({} by threshold, {} swept by discriminator){}",
                    result.threshold.theta,
                    eps,
                    result.unknown.len(),
                    traffic_vectors.len(),
                    result.low_confidence.len(),
                    result.swept.len(),
                    if result.fallback {
                        " [threshold-only fallback]"
                    } else {
                        ""
                    }
                ),
            );
        }
        Command::Cluster {
            model,
            unknown,
            kmax,
            variance,
            out,
        } => {
            let model = load_model(&model)?;
            let file: DiscriminationFile = load_json(&unknown)?;
            let traffic_path = sibling_path(&unknown, &file.traffic_file);
            let traffic_ds = read_dataset(&traffic_path)?;
            let packets: Vec<_> = file
                .unknown
                .iter()
                .map(|&i| {
                    traffic_ds
                        .records()
                        .get(i)
                        .map(|r| r.vector.clone())
                        .ok_or_else(|| {
                            Error::Validation(format!(
                                "index {i} out of range for {} traffic records",
                                traffic_ds.len()
                            ))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            let outcome = label_unknowns(
                &packets,
                &model,
                variance,
                kmax,
                seed::derive(cli.seed, "cli.cluster"),
            )?;
            let mut sizes = vec![0usize; outcome.clustering.chosen_k];
            for &l in &outcome.clustering.labels {
                sizes[l as usize] += 1;
            }
            let cluster_file = ClusterFile {
                traffic_file: file.traffic_file.clone(),
                indices: file.unknown.clone(),
                labels: outcome.clustering.labels.clone(),
                chosen_k: outcome.clustering.chosen_k,
                degenerate: outcome.clustering.degenerate,
                bic_table: outcome.clustering.table.clone(),
                retained_dimension: outcome.components.retained,
            };
            let out = resolve(out_dir, &out);
            ensure_parent(&out)?;
            save_json(&cluster_file, &out)?;

            let truths: Option<Vec<u32>> = file
                .unknown
                .iter()
                .map(|&i| traffic_ds.records()[i].label)
                .collect();
            let quality = match truths {
                Some(t) if t.len() >= 2 => {
                    let counts = pair_counts(&t, &outcome.clustering.labels)?;
                    let prf = precision_recall_f(counts, 1.0);
                    Some(serde_json::json!({
                        "rand_index": rand_index(&t, &outcome.clustering.labels)?,
                        "pair_recall": prf.recall.value,
                        "pair_precision": prf.precision.value,
                        "pair_f1": prf.f.value,
                    }))
                }
                _ => None,
            };
            let bic_table: Vec<_> = outcome
                .clustering
                .table
                .iter()
                .map(|row| serde_json::json!({"k": row.k, "bic": row.bic, "delta": row.delta}))
                .collect();
            let summary = serde_json::json!({
                "chosen_k": outcome.clustering.chosen_k,
                "degenerate": outcome.clustering.degenerate,
                "cluster_sizes": sizes,
                "retained_dimension": outcome.components.retained,
                "bic_table": bic_table,
                "quality": quality,
                "labels_out": out,
            });
            let mut text = format!(
                "chose K = {} over {} packets (PCA kept {} dims); cluster sizes {:?}",
                outcome.clustering.chosen_k,
                packets.len(),
                outcome.components.retained,
                sizes
            );
            if let Some(q) = &quality {
                text.push_str(&format!(
                    "\nrand index vs truth: {:.4}",
                    q["rand_index"].as_f64().unwrap_or(0.0)
                ));
            }
            emit(cli.format, &summary, &text);
        }
        Command::Update {
            model,
            known,
            unknown,
            out_model,
            out_data,
            baseline_retrain,
            epochs,
            lr,
            batch,
            retrain_epochs,
        } => {
            let f_t = load_model(&model)?;
            let known_ds = read_dataset(&known)?;
            let cluster_file: ClusterFile = load_json(&unknown)?;
            let traffic_path = sibling_path(&unknown, &cluster_file.traffic_file);
            let traffic_ds = read_dataset(&traffic_path)?;
            let packets: Vec<_> = cluster_file
                .indices
                .iter()
                .map(|&i| traffic_ds.records()[i].vector.clone())
                .collect();
            let merged =
                owtc_core::updater::merge_dataset(&known_ds, &packets, &cluster_file.labels)?;
            let out_data = resolve(out_dir, &out_data);
            ensure_parent(&out_data)?;
            write_dataset(&merged, &out_data)?;

            let base = train_config(lr, epochs, batch, seed::derive(cli.seed, "cli.update"));
            let plan = owtc_core::updater::UpdatePlan::transfer_default(
                f_t.class_count(),
                cluster_file.chosen_k,
                &base,
            );
            let updated = owtc_core::updater::transfer_update(&f_t, &merged, &plan)?;
            let out_model = resolve(out_dir, &out_model);
            ensure_parent(&out_model)?;
            save_model(&updated, &out_model)?;

            let baseline_path = match baseline_retrain {
                Some(path) => {
                    let spec_kind = if f_t
                        .layers()
                        .iter()
                        .any(|l| matches!(l, owtc_core::nn::Layer::Conv1d { .. }))
                    {
                        ArchKind::Cnn1d
                    } else {
                        ArchKind::Mlp
                    };
                    let cfg = train_config(
                        lr,
                        retrain_epochs,
                        batch,
                        seed::derive(cli.seed, "cli.retrain"),
                    );
                    let baseline = owtc_core::updater::retrain_from_scratch(
                        &ArchitectureSpec::of(spec_kind),
                        &merged,
                        &cfg,
                    )?;
                    let path = resolve(out_dir, &path);
                    ensure_parent(&path)?;
                    save_model(&baseline.model, &path)?;
                    Some(path)
                }
                None => None,
            };
            let summary = serde_json::json!({
                "classes_before": plan.class_count_before,
                "classes_after": plan.class_count_after,
                "merged_records": merged.len(),
                "out_model": out_model,
                "out_data": out_data,
                "baseline": baseline_path,
            });
            emit(
                cli.format,
                &summary,
                &format!(
                    "updated classifier from {} to {} classes on {} merged records -> {}",
                    plan.class_count_before,
                    plan.class_count_after,
                    merged.len(),
                    out_model.display()
                ),
            );
        }
        Command::Evaluate {
            model,
            data,
            out,
            csv,
        } => {
            let model = load_model(&model)?;
            let dataset = read_dataset(&data)?;
            let matrix = confusion(&model, &dataset)?;
            if let Some(out) = out {
                let out = resolve(out_dir, &out);
                ensure_parent(&out)?;
                save_json(&matrix, &out)?;
            }
            if let Some(csv_path) = csv {
                let csv_path = resolve(out_dir, &csv_path);
                ensure_parent(&csv_path)?;
                fs::write(&csv_path, matrix.to_csv())?;
            }
            let summary = serde_json::json!({
                "accuracy": matrix.accuracy(),
                "records": matrix.total(),
                "matrix": matrix,
            });
            emit(
                cli.format,
                &summary,
                &format!(
                    "{}\noverall accuracy {:.4} over {} packets",
                    matrix.render_text(),
                    matrix.accuracy(),
                    matrix.total()
                ),
            );
        }
        Command::Bench {
            model,
            data,
            rounds,
            per_round,
            warmup,
        } => {
            let model = load_model(&model)?;
            let dataset = read_dataset(&data)?;
            let picks = seed::pick_indices(
                dataset.len(),
                per_round.min(dataset.len()),
                cli.seed,
                "cli.bench",
            );
            let packets: Vec<_> = picks
                .iter()
                .map(|&i| dataset.records()[i].vector.clone())
                .collect();
            let report = throughput_bench(&model, &packets, warmup, rounds)?;
            let summary = serde_json::to_value(&report)
                .map_err(|e| Error::Validation(format!("bench report: {e}")))?;
            emit(
                cli.format,
                &summary,
                &format!(
                    "median {:.3} packets/ms = {:.3} Mbps over {} rounds of {} packets\n\
                     (Mbps assumes the fixed 1456-byte preprocessed payload)\nhardware: {}",
                    report.packets_per_ms,
                    report.mbps,
                    report.rounds,
                    report.packets_per_round,
                    report.hardware
                ),
            );
        }
        Command::Pipeline {
            config,
            paper_scale,
            baseline_retrain,
        } => {
            let mut scenario = match config {
                Some(path) => ScenarioConfig::from_json(&fs::read_to_string(&path)?)?,
                None => ScenarioConfig::default(),
            };
            scenario.seed = cli.seed;
            if paper_scale {
                scenario.portions = PortionSizes::paper_scale();
            }
            if baseline_retrain {
                scenario.baseline_retrain = true;
            }
            let report = run_scenario(&scenario, out_dir)?;
            let manifest = emit_plots(&report, out_dir)?;
            let summary = serde_json::json!({
                "out_dir": out_dir,
                "epsilon": report.epsilon,
                "theta": report.theta,
                "unknown_filtered": report.sets.unknown,
                "chosen_k": report.clustering.as_ref().map(|c| c.chosen_k),
                "rand_index": report.clustering.as_ref().and_then(|c| c.rand_index),
                "accuracy_overall": report.evaluation.as_ref().map(|e| e.accuracy_overall),
                "plots": manifest.emitted,
            });
            let mut text = format!(
                "pipeline complete in {}\n  epsilon {:.4}, theta {:.6}\n  {} of {} traffic packets filtered as unknown",
                out_dir.display(),
                report.epsilon,
                report.theta,
                report.sets.unknown,
                report.sets.traffic
            );
            if let Some(c) = &report.clustering {
                text.push_str(&format!(
                    "\n  chose K = {} (rand index {})",
                    c.chosen_k,
                    c.rand_index.map_or("n/a".into(), |v| format!("{v:.4}"))
                ));
            }
            if let Some(e) = &report.evaluation {
                text.push_str(&format!(
                    "\n  accuracy: existing {:.4} -> {:.4}, new {}, overall {:.4}",
                    e.accuracy_existing_before,
                    e.accuracy_existing_after,
                    e.accuracy_new_classes
                        .map_or("n/a".into(), |v| format!("{v:.4}")),
                    e.accuracy_overall
                ));
            }
            text.push_str(&format!(
                "\n  report: {}",
                out_dir.join("run_report.json").display()
            ));
            emit(cli.format, &summary, &text);
        }
        Command::Plot { report } => {
            let report: RunReport = load_json(&report)?;
            let manifest = emit_plots(&report, out_dir)?;
            let summary = serde_json::to_value(&manifest)
                .map_err(|e| Error::Validation(format!("manifest: {e}")))?;
            emit(
                cli.format,
                &summary,
                &format!(
                    "emitted {:?}; omitted {:?}",
                    manifest.emitted,
                    manifest.omitted.keys().collect::<Vec<_>>()
                ),
            );
        }
    }
    Ok(())
}
