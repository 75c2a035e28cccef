//! Evaluation suite: confusion matrices, pairwise precision/recall/F-beta,
//! Rand index, and throughput benchmarking.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::classifier::classify;
use crate::error::{Error, Result};
use crate::nn::NeuralModel;
use crate::packet::{LabeledDataset, PacketVector, VECTOR_LEN};

/// Fixed unit conversion: Mbps per (packets/ms) at 1456 bytes per packet.
pub const MBPS_PER_PACKET_PER_MS: f64 = (VECTOR_LEN as f64) * 8.0 * 1000.0 / 1e6;

/// M x M prediction counts; row = truth, column = prediction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConfusionMatrix {
    pub class_count: usize,
    pub counts: Vec<u64>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn new(class_count: usize, class_names: Vec<String>) -> Self {
        Self {
            class_count,
            counts: vec![0; class_count * class_count],
            class_names,
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.class_count + predicted] += 1;
    }

    pub fn at(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.class_count + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.class_count).map(|i| self.at(i, i)).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.trace() as f64 / total as f64
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.class_count).map(|p| self.at(truth, p)).sum()
    }

    pub fn column_sum(&self, predicted: usize) -> u64 {
        (0..self.class_count).map(|t| self.at(t, predicted)).sum()
    }

    /// Per-class (recall, precision); undefined entries are `None`.
    pub fn per_class(&self) -> Vec<(Option<f64>, Option<f64>)> {
        (0..self.class_count)
            .map(|c| {
                let diag = self.at(c, c) as f64;
                let row = self.row_sum(c);
                let col = self.column_sum(c);
                let recall = (row > 0).then(|| diag / row as f64);
                let precision = (col > 0).then(|| diag / col as f64);
                (recall, precision)
            })
            .collect()
    }

    /// Aligned-text rendering with per-class recall and precision appended.
    pub fn render_text(&self) -> String {
        let name = |i: usize| {
            self.class_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("class-{i}"))
        };
        let width = (0..self.class_count)
            .map(|i| name(i).len())
            .chain(std::iter::once(9))
            .max()
            .unwrap_or(9);
        let mut out = String::new();
        out.push_str(&format!("{:>width$} |", "truth\\pred"));
        for i in 0..self.class_count {
            out.push_str(&format!(" {:>width$}", name(i)));
        }
        out.push_str(&format!(" {:>8}\n", "recall"));
        let stats = self.per_class();
        for t in 0..self.class_count {
            out.push_str(&format!("{:>width$} |", name(t)));
            for p in 0..self.class_count {
                out.push_str(&format!(" {:>width$}", self.at(t, p)));
            }
            match stats[t].0 {
                Some(r) => out.push_str(&format!(" {:>8.3}\n", r)),
                None => out.push_str(&format!(" {:>8}\n", "-")),
            }
        }
        out.push_str(&format!("{:>width$} |", "precision"));
        for p in 0..self.class_count {
            match stats[p].1 {
                Some(v) => out.push_str(&format!(" {:>width$.3}", v)),
                None => out.push_str(&format!(" {:>width$}", "-")),
            }
        }
        out.push_str(&format!(" {:>8.3}\n", self.accuracy()));
        out
    }

    /// CSV rendering: header row of predicted names, one row per truth class.
    pub fn to_csv(&self) -> String {
        let name = |i: usize| {
            self.class_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("class-{i}"))
        };
        let mut out = String::from("truth");
        for p in 0..self.class_count {
            out.push(',');
            out.push_str(&name(p));
        }
        out.push('\n');
        for t in 0..self.class_count {
            out.push_str(&name(t));
            for p in 0..self.class_count {
                out.push_str(&format!(",{}", self.at(t, p)));
            }
            out.push('\n');
        }
        out
    }
}

/// Counts argmax predictions of the model against dataset labels.
pub fn confusion(model: &NeuralModel, dataset: &LabeledDataset) -> Result<ConfusionMatrix> {
    let m = model.class_count();
    let names = (0..m as u32).map(|i| dataset.class_name(i)).collect();
    let mut matrix = ConfusionMatrix::new(m, names);
    for record in dataset.records() {
        let Some(label) = record.label else {
            return Err(Error::Validation(
                "confusion matrix needs fully labeled data".into(),
            ));
        };
        if label as usize >= m {
            return Err(Error::Validation(format!(
                "label {label} out of range for {m} classes"
            )));
        }
        let predicted = classify(model, &record.vector)?.predicted_label;
        matrix.record(label as usize, predicted as usize);
    }
    Ok(matrix)
}

/// Pairwise decision counts over all C(n,2) point pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PairCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Pair counts from a truth labeling and a predicted clustering, via the
/// contingency table (exact integer arithmetic).
pub fn pair_counts(truth: &[u32], predicted: &[u32]) -> Result<PairCounts> {
    if truth.len() != predicted.len() {
        return Err(Error::Validation(format!(
            "label lists differ in length: {} vs {}",
            truth.len(),
            predicted.len()
        )));
    }
    let n = truth.len() as u64;
    if n < 2 {
        return Err(Error::Validation("need at least two points".into()));
    }
    let mut cells: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut rows: BTreeMap<u32, u64> = BTreeMap::new();
    let mut cols: BTreeMap<u32, u64> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(predicted) {
        *cells.entry((t, p)).or_insert(0) += 1;
        *rows.entry(t).or_insert(0) += 1;
        *cols.entry(p).or_insert(0) += 1;
    }
    let tp: u64 = cells.values().map(|&c| choose2(c)).sum();
    let same_pred: u64 = cols.values().map(|&c| choose2(c)).sum();
    let same_truth: u64 = rows.values().map(|&c| choose2(c)).sum();
    let fp = same_pred - tp;
    let fn_ = same_truth - tp;
    let tn = choose2(n) - tp - fp - fn_;
    Ok(PairCounts { tp, tn, fp, fn_ })
}

/// A metric value that distinguishes "0" from "undefined" (zero
/// denominator); undefined values report 0 with the flag cleared so batch
/// reports never abort.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub defined: bool,
}

impl MetricValue {
    fn defined(value: f64) -> Self {
        Self {
            value,
            defined: true,
        }
    }

    fn undefined() -> Self {
        Self {
            value: 0.0,
            defined: false,
        }
    }
}

/// Recall, precision, and F-beta over pair counts, with the counts attached.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrfScores {
    pub counts: PairCounts,
    pub beta: f64,
    pub recall: MetricValue,
    pub precision: MetricValue,
    pub f: MetricValue,
}

/// `R = TP/(TP+FN)`, `P = TP/(TP+FP)`, `F_b = (b^2+1)PR / (b^2 P + R)`.
/// Beta above 1 weights recall more; callers default to beta = 1.
pub fn precision_recall_f(counts: PairCounts, beta: f64) -> PrfScores {
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            MetricValue::undefined()
        } else {
            MetricValue::defined(num as f64 / den as f64)
        }
    };
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let f = if recall.defined && precision.defined {
        let denom = beta * beta * precision.value + recall.value;
        if denom == 0.0 {
            MetricValue::undefined()
        } else {
            MetricValue::defined(
                (beta * beta + 1.0) * precision.value * recall.value / denom,
            )
        }
    } else {
        MetricValue::undefined()
    };
    PrfScores {
        counts,
        beta,
        recall,
        precision,
        f,
    }
}

/// Rand index `(TP+TN) / C(n,2)` between a truth labeling and a clustering.
pub fn rand_index(truth: &[u32], predicted: &[u32]) -> Result<f64> {
    let counts = pair_counts(truth, predicted)?;
    Ok((counts.tp + counts.tn) as f64 / counts.total() as f64)
}

/// Output of [`throughput_bench`]; `mbps` is derived from the median rate by
/// the fixed 11.648 conversion.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BenchReport {
    pub packets_per_ms: f64,
    pub mbps: f64,
    /// Conversion convention behind the Mbps figure.
    pub mbps_basis: String,
    pub rounds: usize,
    pub packets_per_round: usize,
    pub warmup_rounds: usize,
    pub hardware: String,
    pub round_times_ms: Vec<f64>,
}

/// Times full forward passes over the packet set: after `warmup` untimed
/// rounds, runs `rounds` timed rounds and reports the median packets/ms.
pub fn throughput_bench(
    model: &NeuralModel,
    packets: &[PacketVector],
    warmup: usize,
    rounds: usize,
) -> Result<BenchReport> {
    if rounds == 0 {
        return Err(Error::Validation("need at least one timed round".into()));
    }
    if packets.is_empty() {
        return Err(Error::Validation("need at least one packet".into()));
    }
    let run_round = |out: &mut f64| -> Result<()> {
        for p in packets {
            let record = classify(model, p)?;
            // Keep the result observable so the pass cannot be elided.
            *out += record.top_score;
        }
        Ok(())
    };
    let mut sink = 0.0;
    for _ in 0..warmup {
        run_round(&mut sink)?;
    }
    let mut round_times_ms = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let start = Instant::now();
        run_round(&mut sink)?;
        round_times_ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let mut rates: Vec<f64> = round_times_ms
        .iter()
        .map(|&ms| packets.len() as f64 / ms)
        .collect();
    rates.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    let median = if rates.len() % 2 == 1 {
        rates[rates.len() / 2]
    } else {
        (rates[rates.len() / 2 - 1] + rates[rates.len() / 2]) / 2.0
    };
    std::hint::black_box(sink);
    Ok(BenchReport {
        packets_per_ms: median,
        mbps: median * MBPS_PER_PACKET_PER_MS,
        mbps_basis: "fixed 1456-byte preprocessed payload per packet (x11.648)".into(),
        rounds,
        packets_per_round: packets.len(),
        warmup_rounds: warmup,
        hardware: hardware_description(),
        round_times_ms,
    })
}

fn hardware_description() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_string())
        })
        .unwrap_or_else(|| "unknown CPU".to_string());
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!("{cpu} ({threads} hw threads)")
}
