//! Repeated k-fold evaluation of the prediction methods under the
//! operational accuracy metric, plus the small statistics toolbox the
//! reports and figure exports are built from.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

use crate::data::{Dataset, FeatureGroup};
use crate::error::{Error, Result};
use crate::metric::{accuracy, MetricParams, PredictionPair};
use crate::predictor::{fit, MethodId, TrainParams};

/// Fold assignments for every (repeat, case) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    repeats: usize,
    k: usize,
    seed: u64,
    stratified: bool,
    /// `assignments[r][i]` is the fold of case `i` in repeat `r`.
    assignments: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn repeats(&self) -> usize {
        self.repeats
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stratified(&self) -> bool {
        self.stratified
    }

    pub fn n_cases(&self) -> usize {
        self.assignments.first().map_or(0, Vec::len)
    }

    pub fn fold_of(&self, repeat: usize, case: usize) -> usize {
        self.assignments[repeat][case]
    }

    /// Ascending indices of the cases tested in (repeat, fold).
    pub fn test_indices(&self, repeat: usize, fold: usize) -> Vec<usize> {
        self.assignments[repeat]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Ascending indices of the cases trained on in (repeat, fold).
    pub fn train_indices(&self, repeat: usize, fold: usize) -> Vec<usize> {
        self.assignments[repeat]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Assigns every case to one of `k` folds, `repeats` times over, each
/// repeat on its own stream of the seed. With `stratified` set, cases
/// are shuffled and dealt out within each procedure so every fold sees
/// every procedure.
pub fn make_folds(
    ds: &Dataset,
    repeats: usize,
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<FoldPlan> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "cross-validation needs at least 2 folds, got {k}"
        )));
    }
    let n = ds.len();
    let strata: Vec<(String, Vec<usize>)> = if stratified {
        let mut by_proc: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, case) in ds.cases().iter().enumerate() {
            by_proc.entry(&case.procedure_name).or_default().push(i);
        }
        by_proc
            .into_iter()
            .map(|(name, idx)| (name.to_string(), idx))
            .collect()
    } else {
        vec![("(all cases)".to_string(), (0..n).collect())]
    };
    for (name, idx) in &strata {
        if idx.len() < k {
            return Err(Error::StratumTooSmall {
                procedure: name.clone(),
                have: idx.len(),
                need: k,
            });
        }
    }

    let mut assignments = Vec::with_capacity(repeats);
    for repeat in 0..repeats {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(repeat as u64);
        let mut fold_of = vec![0usize; n];
        for (_, idx) in &strata {
            let mut order = idx.clone();
            order.shuffle(&mut rng);
            for (pos, &i) in order.iter().enumerate() {
                fold_of[i] = pos % k;
            }
        }
        assignments.push(fold_of);
    }
    Ok(FoldPlan {
        repeats,
        k,
        seed,
        stratified,
        assignments,
    })
}

#[derive(Debug, Clone, Default)]
pub struct CvOptions {
    /// Keep every cell's raw model importance vector.
    pub collect_model_importances: bool,
    /// Keep every cell's test predictions, pooled per method.
    pub collect_pairs: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvMeta {
    pub repeats: usize,
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AccuracyRow {
    pub method: String,
    /// A procedure name, or "Overall" for the whole test fold.
    pub procedure: String,
    /// Mean of the per-cell accuracies.
    pub mean: f64,
    /// Sample standard deviation of the per-cell accuracies.
    pub sd_cells: f64,
    /// `sd_cells` shrunk by the root of the cell count.
    pub se_mean: f64,
    /// Sample standard deviation of the per-repeat mean accuracies.
    pub sd_repeat_means: f64,
    /// How many cells contributed.
    pub cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupShare {
    pub group: String,
    pub share: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodImportance {
    pub method: String,
    /// Per-feature mean share across cells, descending.
    pub features: Vec<ImportanceEntry>,
    /// The feature shares rolled up by source column.
    pub groups: Vec<GroupShare>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProcedureSummary {
    pub procedure: String,
    pub n: usize,
    pub mean_min: f64,
    pub sd_min: f64,
    /// Set when a single observation forced the deviation to zero.
    pub sd_degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub mean_min: f64,
    pub sd_min: f64,
    pub sd_degenerate: bool,
    pub procedures: Vec<ProcedureSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub metric: MetricParams,
    pub cv: CvMeta,
    pub methods: Vec<String>,
    pub summary: DatasetSummary,
    pub accuracy: Vec<AccuracyRow>,
    pub importance: Vec<MethodImportance>,
}

#[derive(Debug, Clone)]
pub struct CvOutput {
    pub report: EvaluationReport,
    /// Per method, every cell's test predictions in cell order.
    pub pooled_pairs: Option<BTreeMap<String, Vec<PredictionPair>>>,
    /// Per method, every cell's raw importance vector in cell order.
    pub model_importances: Option<BTreeMap<String, Vec<Vec<f64>>>>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cell_seed(base: u64, repeat: usize, fold: usize, method_idx: usize) -> u64 {
    let mut s = splitmix64(base);
    for part in [repeat as u64, fold as u64, method_idx as u64] {
        s = splitmix64(s ^ part);
    }
    s
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

struct MethodCell {
    overall: f64,
    per_procedure: BTreeMap<String, f64>,
    importance: Option<(Vec<String>, Vec<f64>)>,
    pairs: Option<Vec<PredictionPair>>,
}

struct CellResult {
    repeat: usize,
    per_method: Vec<MethodCell>,
}

/// Runs every requested method over every (repeat, fold) cell of the
/// plan, scoring test predictions with the metric. Cells run in
/// parallel; output order and content are independent of scheduling.
pub fn cross_validate(
    ds: &Dataset,
    methods: &[MethodId],
    plan: &FoldPlan,
    metric: &MetricParams,
    train_params: &TrainParams,
    options: &CvOptions,
) -> Result<CvOutput> {
    metric.validate()?;
    if plan.n_cases() != ds.len() {
        return Err(Error::InvalidConfig(format!(
            "fold plan covers {} cases but the dataset has {}",
            plan.n_cases(),
            ds.len()
        )));
    }
    let methods: Vec<MethodId> = MethodId::ALL
        .into_iter()
        .filter(|m| methods.contains(m))
        .collect();
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    let summary = summarize(ds)?;

    let cells: Vec<(usize, usize)> = (0..plan.repeats())
        .flat_map(|r| (0..plan.k()).map(move |f| (r, f)))
        .collect();

    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|&(repeat, fold)| -> Result<CellResult> {
            let train = ds.select(&plan.train_indices(repeat, fold));
            let test = ds.select(&plan.test_indices(repeat, fold));
            let mut per_method = Vec::with_capacity(methods.len());
            for (mi, &method) in methods.iter().enumerate() {
                let mut params = train_params.clone();
                params.seed = cell_seed(train_params.seed, repeat, fold, mi);
                let predictor = fit(method, &train, &params).map_err(|e| Error::CellFit {
                    method: method.label().to_string(),
                    repeat,
                    fold,
                    source: Box::new(e),
                })?;
                let pairs = predictor.predict_batch(&test);
                let overall = accuracy(&pairs, metric)?;
                let mut by_proc: BTreeMap<String, Vec<PredictionPair>> = BTreeMap::new();
                for pair in &pairs {
                    by_proc
                        .entry(pair.procedure_name.clone())
                        .or_default()
                        .push(pair.clone());
                }
                let mut per_procedure = BTreeMap::new();
                for (proc, group) in by_proc {
                    per_procedure.insert(proc, accuracy(&group, metric)?);
                }
                per_method.push(MethodCell {
                    overall,
                    per_procedure,
                    importance: if options.collect_model_importances || method.is_learned() {
                        predictor.importance()
                    } else {
                        None
                    },
                    pairs: options.collect_pairs.then_some(pairs),
                });
            }
            Ok(CellResult { repeat, per_method })
        })
        .collect::<Result<Vec<_>>>()?;

    // accuracy rows: Overall first, then procedures alphabetically
    let mut procedure_names: Vec<String> =
        summary.procedures.iter().map(|p| p.procedure.clone()).collect();
    procedure_names.sort();
    let mut accuracy_rows = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        let mut scopes = vec!["Overall".to_string()];
        scopes.extend(procedure_names.iter().cloned());
        for scope in scopes {
            let mut cell_values = Vec::new();
            let mut per_repeat: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for cell in &results {
                let mc = &cell.per_method[mi];
                let value = if scope == "Overall" {
                    Some(mc.overall)
                } else {
                    mc.per_procedure.get(&scope).copied()
                };
                if let Some(v) = value {
                    cell_values.push(v);
                    per_repeat.entry(cell.repeat).or_default().push(v);
                }
            }
            if cell_values.is_empty() {
                continue;
            }
            let repeat_means: Vec<f64> =
                per_repeat.values().map(|vs| mean(vs)).collect();
            let sd_cells = sample_sd(&cell_values);
            accuracy_rows.push(AccuracyRow {
                method: method.label().to_string(),
                procedure: scope,
                mean: mean(&cell_values),
                sd_cells,
                se_mean: sd_cells / (cell_values.len() as f64).sqrt(),
                sd_repeat_means: sample_sd(&repeat_means),
                cells: cell_values.len(),
            });
        }
    }

    // importance: average per feature name across cells, absent = 0
    let n_cells = results.len() as f64;
    let mut importance_rows = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        if !method.is_learned() {
            continue;
        }
        let mut sums: BTreeMap<String, f64> = BTreeMap::new();
        for cell in &results {
            if let Some((names, values)) = &cell.per_method[mi].importance {
                for (name, value) in names.iter().zip(values) {
                    *sums.entry(name.clone()).or_insert(0.0) += value;
                }
            }
        }
        let mut features: Vec<ImportanceEntry> = sums
            .into_iter()
            .map(|(feature, sum)| ImportanceEntry {
                feature,
                share: sum / n_cells,
            })
            .collect();
        let mut group_totals: BTreeMap<FeatureGroup, f64> = BTreeMap::new();
        for entry in &features {
            if let Some(group) = FeatureGroup::of_column(&entry.feature) {
                *group_totals.entry(group).or_insert(0.0) += entry.share;
            }
        }
        features.sort_by(|a, b| {
            b.share
                .total_cmp(&a.share)
                .then_with(|| a.feature.cmp(&b.feature))
        });
        let groups = FeatureGroup::TABLE_ORDER
            .iter()
            .filter(|g| **g != FeatureGroup::ExpertPrediction || method.uses_expert_feature())
            .map(|g| GroupShare {
                group: g.label().to_string(),
                share: group_totals.get(g).copied().unwrap_or(0.0),
            })
            .collect();
        importance_rows.push(MethodImportance {
            method: method.label().to_string(),
            features,
            groups,
        });
    }

    let pooled_pairs = options.collect_pairs.then(|| {
        let mut pooled: BTreeMap<String, Vec<PredictionPair>> = BTreeMap::new();
        for cell in &results {
            for (mi, &method) in methods.iter().enumerate() {
                if let Some(pairs) = &cell.per_method[mi].pairs {
                    pooled
                        .entry(method.label().to_string())
                        .or_default()
                        .extend(pairs.iter().cloned());
                }
            }
        }
        pooled
    });

    let model_importances = options.collect_model_importances.then(|| {
        let mut out: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for cell in &results {
            for (mi, &method) in methods.iter().enumerate() {
                if let Some((_, values)) = &cell.per_method[mi].importance {
                    out.entry(method.label().to_string())
                        .or_default()
                        .push(values.clone());
                }
            }
        }
        out
    });

    Ok(CvOutput {
        report: EvaluationReport {
            metric: metric.clone(),
            cv: CvMeta {
                repeats: plan.repeats(),
                folds: plan.k(),
                seed: plan.seed(),
                stratified: plan.stratified(),
            },
            methods: methods.iter().map(|m| m.label().to_string()).collect(),
            summary,
            accuracy: accuracy_rows,
            importance: importance_rows,
        },
        pooled_pairs,
        model_importances,
    })
}

/// Case counts and duration moments, overall and per procedure.
pub fn summarize(ds: &Dataset) -> Result<DatasetSummary> {
    if ds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let all: Vec<f64> = ds.cases().iter().map(|c| c.actual_duration_min).collect();
    let mut by_proc: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for case in ds.cases() {
        by_proc
            .entry(&case.procedure_name)
            .or_default()
            .push(case.actual_duration_min);
    }
    let procedures = by_proc
        .into_iter()
        .map(|(name, durations)| ProcedureSummary {
            procedure: name.to_string(),
            n: durations.len(),
            mean_min: mean(&durations),
            sd_min: sample_sd(&durations),
            sd_degenerate: durations.len() < 2,
        })
        .collect();
    Ok(DatasetSummary {
        n: all.len(),
        mean_min: mean(&all),
        sd_min: sample_sd(&all),
        sd_degenerate: all.len() < 2,
        procedures,
    })
}

/// Linear correlation of two equal-length samples.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidConfig(format!(
            "correlation inputs differ in length: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateInput(
            "correlation needs at least two points".into(),
        ));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput(
            "correlation is undefined for a constant sample".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through (xs, ys).
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<OlsFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidConfig(format!(
            "regression inputs differ in length: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateInput(
            "regression needs at least two points".into(),
        ));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateInput(
            "regression is undefined for a constant predictor".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok(OlsFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramData {
    /// `bins + 1` edges; bins are half-open except the last.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub log_scale: bool,
}

/// Equal-width histogram over the value range. With `log_scale`,
/// values are first mapped through the natural log and must be
/// positive.
pub fn histogram_data(values: &[f64], bins: usize, log_scale: bool) -> Result<HistogramData> {
    if bins == 0 {
        return Err(Error::InvalidConfig("a histogram needs at least one bin".into()));
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mapped: Vec<f64> = if log_scale {
        values
            .iter()
            .map(|&v| {
                if v > 0.0 && v.is_finite() {
                    Ok(v.ln())
                } else {
                    Err(Error::DegenerateInput(format!(
                        "log-scale histogram needs positive values, got {v}"
                    )))
                }
            })
            .collect::<Result<_>>()?
    } else {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput(
                "histogram values must be finite".into(),
            ));
        }
        values.to_vec()
    };
    let lo = mapped.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mapped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|b| {
            if b == bins {
                hi
            } else {
                lo + width * b as f64
            }
        })
        .collect();
    let mut counts = vec![0usize; bins];
    for v in &mapped {
        let idx = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Ok(HistogramData {
        edges,
        counts,
        log_scale,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Accuracy table in CSV form: one row per scope (Overall first, then
/// procedures), a mean and spread column per method.
pub fn write_accuracy_csv<W: Write>(report: &EvaluationReport, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["procedure".to_string()];
    for m in &report.methods {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_sd"));
    }
    csv.write_record(&header)?;

    let mut scopes = vec!["Overall".to_string()];
    let mut procs: Vec<String> = report
        .summary
        .procedures
        .iter()
        .map(|p| p.procedure.clone())
        .collect();
    procs.sort();
    scopes.extend(procs);

    let lookup: BTreeMap<(&str, &str), &AccuracyRow> = report
        .accuracy
        .iter()
        .map(|row| ((row.method.as_str(), row.procedure.as_str()), row))
        .collect();
    for scope in &scopes {
        let mut record = vec![scope.clone()];
        for m in &report.methods {
            match lookup.get(&(m.as_str(), scope.as_str())) {
                Some(row) => {
                    record.push(fmt_f64(row.mean));
                    record.push(fmt_f64(row.sd_cells));
                }
                None => {
                    record.push(String::new());
                    record.push(String::new());
                }
            }
        }
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

/// Grouped importance table in CSV form: one row per feature source,
/// one column per learned method. Methods that never see the expert
/// estimate show "NA" in that row.
pub fn write_importance_csv<W: Write>(report: &EvaluationReport, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["feature_group".to_string()];
    for mi in &report.importance {
        header.push(mi.method.clone());
    }
    csv.write_record(&header)?;
    for group in FeatureGroup::TABLE_ORDER {
        let mut record = vec![group.label().to_string()];
        for mi in &report.importance {
            let uses_expert = mi
                .method
                .parse::<MethodId>()
                .map(|m| m.uses_expert_feature())
                .unwrap_or(false);
            if group == FeatureGroup::ExpertPrediction && !uses_expert {
                record.push("NA".to_string());
            } else {
                let share = mi
                    .groups
                    .iter()
                    .find(|g| g.group == group.label())
                    .map(|g| g.share)
                    .unwrap_or(0.0);
                record.push(fmt_f64(share));
            }
        }
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}
