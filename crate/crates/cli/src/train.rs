use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use topofeat::features::FeatureTable;
use topofeat::fusion::{self, trace_to_csv, FusionHead, FusionModel, FusionSample};
use topofeat::svm::{balanced_accuracy, SvmModel};
use topofeat::synthetic::{class_conditional_features, rng};

use crate::config::RunConfig;
use crate::run::{sibling, write_file, write_json, Failure, Recorder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Fusion,
}

/// Where fusion backbone features come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Backbone {
    Csv { columns: Vec<String> },
    Synthetic { dim: usize, separation: f64, seed: u64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SavedModel {
    Svm { class_names: Vec<String>, columns: Vec<String>, model: SvmModel },
    Fusion { class_names: Vec<String>, columns: Vec<String>, backbone: Backbone, model: FusionModel },
}

impl SavedModel {
    fn class_names(&self) -> &[String] {
        match self {
            SavedModel::Svm { class_names, .. } | SavedModel::Fusion { class_names, .. } => class_names,
        }
    }

    fn columns(&self) -> &[String] {
        match self {
            SavedModel::Svm { columns, .. } | SavedModel::Fusion { columns, .. } => columns,
        }
    }
}

type Predictor = Box<dyn Fn(&[usize]) -> Result<Vec<usize>>>;

pub struct TrainArgs<'a> {
    pub features: &'a Path,
    pub labels: &'a Path,
    pub model: ModelKind,
    pub out: &'a Path,
    pub backbone_csv: Option<&'a Path>,
}

#[derive(Debug, Serialize)]
struct Metrics {
    model: ModelKind,
    classes: Vec<String>,
    train_size: usize,
    validation_size: usize,
    test_size: usize,
    validation_balanced_accuracy: Option<f64>,
    test_balanced_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_alpha: Option<f64>,
    validation_ids: Vec<String>,
    test_ids: Vec<String>,
}

fn read_table(path: &Path) -> Result<FeatureTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    FeatureTable::from_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

/// `image_id,label` rows.
fn read_labels(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| anyhow!("{} is empty", path.display()))?;
    if header.split(',').map(str::trim).collect::<Vec<_>>() != ["image_id", "label"] {
        bail!("{}: expected header image_id,label", path.display());
    }
    let mut out = HashMap::new();
    for (i, line) in lines.enumerate() {
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("{}: line {} lacks a label", path.display(), i + 2))?;
        if out.insert(id.trim().to_string(), label.trim().to_string()).is_some() {
            bail!("{}: duplicate id {}", path.display(), id.trim());
        }
    }
    Ok(out)
}

/// Sorted class names; numerically if every label is an integer.
fn class_names(labels: &[String]) -> Vec<String> {
    let mut names: Vec<String> = labels.to_vec();
    names.sort();
    names.dedup();
    if names.iter().all(|n| n.parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<i64>().expect("checked"));
    }
    names
}

fn labels_for(table: &FeatureTable, labels: &HashMap<String, String>) -> Result<Vec<String>> {
    table
        .ids
        .iter()
        .map(|id| labels.get(id).cloned().ok_or_else(|| anyhow!("no label for image {id:?}")))
        .collect()
}

fn index_labels(labels: &[String], names: &[String]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| names.iter().position(|n| n == l).ok_or_else(|| anyhow!("unknown class {l:?}")))
        .collect()
}

/// Seeded split: optional `per_class` held-out test samples per class, then
/// `train_fraction` of the rest for training and the remainder for validation.
pub fn split(labels: &[usize], classes: usize, train_fraction: f64, per_class: Option<usize>, seed: u64) -> Result<[Vec<usize>; 3]> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        bail!("train fraction must lie in (0, 1]");
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut rng(seed));
    let mut test = Vec::new();
    let mut rest = Vec::new();
    if let Some(n) = per_class {
        let mut taken = vec![0usize; classes];
        for &i in &order {
            if taken[labels[i]] < n {
                taken[labels[i]] += 1;
                test.push(i);
            } else {
                rest.push(i);
            }
        }
        if let Some(c) = taken.iter().position(|&t| t < n) {
            bail!("class {c} has fewer than {n} samples for the balanced test split");
        }
    } else {
        rest = order;
    }
    let cut = ((rest.len() as f64) * train_fraction).round() as usize;
    let validation = rest.split_off(cut.min(rest.len()));
    Ok([rest, validation, test])
}

fn subset<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

fn maybe_balanced(preds: &[usize], labels: &[usize]) -> Result<Option<f64>> {
    if labels.is_empty() {
        return Ok(None);
    }
    Ok(Some(balanced_accuracy(preds, labels)?))
}

fn backbone_rows(
    backbone: &Backbone,
    csv: Option<&FeatureTable>,
    ids: &[String],
    labels: &[usize],
) -> Result<Vec<Vec<f64>>> {
    match backbone {
        Backbone::Synthetic { dim, separation, seed } => Ok(class_conditional_features(labels, *dim, *separation, *seed)),
        Backbone::Csv { columns } => {
            let table = csv.ok_or_else(|| anyhow!("this model needs --backbone-csv"))?;
            if &table.columns != columns {
                bail!("backbone columns differ from the ones used in training");
            }
            let by_id: HashMap<&str, &Vec<f64>> = table.ids.iter().map(String::as_str).zip(&table.rows).collect();
            ids.iter()
                .map(|id| by_id.get(id.as_str()).map(|r| (*r).clone()).ok_or_else(|| anyhow!("no backbone row for {id:?}")))
                .collect()
        }
    }
}

fn fusion_samples(backbone: Vec<Vec<f64>>, topo: &[Vec<f64>], labels: &[usize]) -> Vec<FusionSample> {
    backbone
        .into_iter()
        .zip(topo)
        .zip(labels)
        .map(|((b, t), &label)| FusionSample { backbone: b, topo: t.clone(), label })
        .collect()
}

pub fn train(args: &TrainArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let table = read_table(args.features)?;
    let label_map = read_labels(args.labels)?;
    let raw = labels_for(&table, &label_map)?;
    if raw.is_empty() {
        return Err(anyhow!("no feature rows").into());
    }
    let names = class_names(&raw);
    let labels = index_labels(&raw, &names)?;
    let [train_idx, val_idx, test_idx] = split(&labels, names.len(), cfg.train_fraction, cfg.balanced_test, cfg.seed)?;
    let x_train = subset(&table.rows, &train_idx);
    let y_train = subset(&labels, &train_idx);

    let mut rec = Recorder::new("train", cfg);
    rec.input(args.features);
    rec.input(args.labels);
    let mut final_alpha = None;
    let (saved, predict): (SavedModel, Predictor) = match args.model {
        ModelKind::Svm => {
            let model = SvmModel::fit(&x_train, &y_train, names.len(), &cfg.svm)?;
            let rows = table.rows.clone();
            let m = model.clone();
            let predict = Box::new(move |idx: &[usize]| idx.iter().map(|&i| Ok(m.predict(&rows[i])?)).collect());
            (SavedModel::Svm { class_names: names.clone(), columns: table.columns.clone(), model }, predict)
        }
        ModelKind::Fusion => {
            let backbone_table = args.backbone_csv.map(read_table).transpose()?;
            let backbone = match &backbone_table {
                Some(t) => Backbone::Csv { columns: t.columns.clone() },
                None => Backbone::Synthetic { dim: cfg.backbone_dim, separation: cfg.backbone_separation, seed: cfg.seed },
            };
            if let Some(path) = args.backbone_csv {
                rec.input(path);
            }
            let rows = backbone_rows(&backbone, backbone_table.as_ref(), &table.ids, &labels)?;
            let samples = fusion_samples(rows, &table.rows, &labels);
            let head = FusionHead::init(
                samples[0].backbone.len(),
                table.columns.len(),
                cfg.fusion.reduced_dim,
                names.len(),
                cfg.seed,
            );
            let (model, trace) = fusion::train(head, &subset(&samples, &train_idx), &cfg.fusion)?;
            if trace.iter().any(|r| !(r.alpha > 0.0 && r.alpha < 1.0)) {
                return Err(Failure::Invariant(anyhow!("topological rate left (0, 1)")));
            }
            final_alpha = trace.last().map(|r| r.alpha);
            let alpha_path = sibling(args.out, "alpha.csv");
            write_file(&alpha_path, trace_to_csv(&trace))?;
            rec.output(&alpha_path);
            let m = model.clone();
            let predict = Box::new(move |idx: &[usize]| {
                idx.iter().map(|&i| Ok(m.predict(&samples[i].backbone, &samples[i].topo)?)).collect()
            });
            (SavedModel::Fusion { class_names: names.clone(), columns: table.columns.clone(), backbone, model }, predict)
        }
    };
    let val_acc = maybe_balanced(&predict(&val_idx)?, &subset(&labels, &val_idx))?;
    let test_acc = maybe_balanced(&predict(&test_idx)?, &subset(&labels, &test_idx))?;
    write_json(args.out, &saved)?;
    rec.output(args.out);
    let metrics = Metrics {
        model: args.model,
        classes: names,
        train_size: train_idx.len(),
        validation_size: val_idx.len(),
        test_size: test_idx.len(),
        validation_balanced_accuracy: val_acc,
        test_balanced_accuracy: test_acc,
        final_alpha,
        validation_ids: subset(&table.ids, &val_idx),
        test_ids: subset(&table.ids, &test_idx),
    };
    let metrics_path = sibling(args.out, "metrics.json");
    write_json(&metrics_path, &metrics)?;
    rec.output(&metrics_path);
    if let Some(acc) = val_acc {
        eprintln!("validation balanced accuracy: {acc:.4}");
    }
    rec.finish(&sibling(args.out, "manifest.json"))
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    rows: usize,
    balanced_accuracy: Option<f64>,
    per_class_support: BTreeMap<String, usize>,
}

/// Predictions CSV `image_id,predicted`; with labels also a summary JSON.
pub fn eval(
    model_path: &Path,
    features: &Path,
    labels: Option<&Path>,
    backbone_csv: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let saved: SavedModel = serde_json::from_str(&text).with_context(|| format!("parsing {}", model_path.display()))?;
    let table = read_table(features)?;
    if table.columns != saved.columns() {
        return Err(anyhow!(
            "feature columns ({}) do not match the model's ({})",
            table.columns.len(),
            saved.columns().len()
        )
        .into());
    }
    let names = saved.class_names().to_vec();
    let truth = match labels {
        Some(p) => Some(index_labels(&labels_for(&table, &read_labels(p)?)?, &names)?),
        None => None,
    };
    let preds: Vec<usize> = match &saved {
        SavedModel::Svm { model, .. } => table.rows.iter().map(|r| model.predict(r)).collect::<Result<_, _>>()?,
        SavedModel::Fusion { model, backbone, .. } => {
            let backbone_table = backbone_csv.map(read_table).transpose()?;
            let synthetic_labels = match (backbone, &truth) {
                (Backbone::Synthetic { .. }, None) => {
                    return Err(anyhow!("a synthetic-backbone model needs --labels to regenerate its backbone").into())
                }
                (_, Some(t)) => t.clone(),
                (_, None) => vec![0; table.rows.len()],
            };
            let rows = backbone_rows(backbone, backbone_table.as_ref(), &table.ids, &synthetic_labels)?;
            rows.iter().zip(&table.rows).map(|(b, t)| model.predict(b, t)).collect::<Result<_, _>>()?
        }
    };
    let mut csv = String::from("image_id,predicted\n");
    for (id, &p) in table.ids.iter().zip(&preds) {
        csv.push_str(&format!("{id},{}\n", names[p]));
    }
    write_file(out, csv)?;
    if let Some(t) = &truth {
        let mut support = BTreeMap::new();
        for &l in t {
            *support.entry(names[l].clone()).or_insert(0) += 1;
        }
        let summary = EvalSummary { rows: t.len(), balanced_accuracy: maybe_balanced(&preds, t)?, per_class_support: support };
        write_json(&sibling(out, "summary.json"), &summary)?;
        if let Some(acc) = summary.balanced_accuracy {
            eprintln!("balanced accuracy: {acc:.4}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_seeded_and_complete() {
        let labels: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let [a, b, c] = split(&labels, 4, 0.7, Some(2), 5).unwrap();
        assert_eq!(c.len(), 8);
        assert_eq!(a.len(), 22);
        assert_eq!(b.len(), 10);
        let mut all: Vec<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        all.sort();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        assert_eq!(split(&labels, 4, 0.7, Some(2), 5).unwrap(), [a.clone(), b, c]);
        assert_ne!(split(&labels, 4, 0.7, Some(2), 6).unwrap()[0], a);
        assert!(split(&labels, 4, 0.7, Some(11), 5).is_err());
    }

    #[test]
    fn class_name_order() {
        let l = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(class_names(&l(&["10", "2", "2"])), l(&["2", "10"]));
        assert_eq!(class_names(&l(&["nv", "mel", "bcc"])), l(&["bcc", "mel", "nv"]));
    }
}
