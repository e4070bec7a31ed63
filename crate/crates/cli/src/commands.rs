//! The five pipeline stages. Each one reads and validates everything it needs
//! before it writes its first file.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use drivesafe_core::featx::{extract_population, ExtractSummary, Label};
use drivesafe_core::io::{self, label_text, parse_label, PointRow};
use drivesafe_core::learn::{
    downsample, kfold_cv, train_forest, CvResult, Dataset, EvalMetrics, ForestHyperparams,
    ForestModel, ModelKind, Ratio, SWEEP_RATIOS,
};
use drivesafe_core::scorecard::{
    bottom_share, rank_drivers, rank_report, top_n_bad_proportion, BandSpec, RankReport,
    RankedDriver, Scorecard, ScorecardError,
};
use drivesafe_core::seed::derive_seed;
use drivesafe_core::simgen::{
    run_simulation, sample_driver_population, designed_styles, RoadNetwork, SimConfig, SimOutput,
};
use drivesafe_core::ViolationRecord;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self as art, ensure_dir};
use crate::config::PipelineConfig;
use crate::error::CliError;

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct PopulationRow {
    driver_id: u32,
    style: usize,
    acc: f64,
    dec: f64,
    sigma: f64,
    s_max: f64,
    g_min: f64,
    tau: f64,
}

#[derive(Serialize)]
struct FileCount {
    name: &'static str,
    rows: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    seed: u64,
    stage_seed: u64,
    noise: &'static str,
    config: &'a SimConfig,
    violations_by_kind: BTreeMap<String, usize>,
    files: Vec<FileCount>,
}

/// Sample the population and run the simulator under the stage seed.
pub fn simulate_stage(cfg: &PipelineConfig, seed: u64) -> Result<(SimConfig, SimOutput), CliError> {
    let stage = derive_seed(seed, "simulate");
    let sim = SimConfig {
        seed: stage,
        ..cfg.sim.clone()
    };
    let pop = sample_driver_population(
        &designed_styles(),
        &cfg.noise.spec(),
        sim.drivers,
        derive_seed(stage, "population"),
    )
    .map_err(CliError::invalid)?;
    let out = run_simulation(&sim, &pop).map_err(CliError::invalid)?;
    Ok((sim, out))
}

pub fn simulate(cfg: &PipelineConfig, seed: u64) -> Result<String, CliError> {
    let dir = &cfg.work_dir;
    ensure_dir(dir)?;
    let (sim, out) = simulate_stage(cfg, seed)?;
    let stage = sim.seed;

    let population: Vec<PopulationRow> = out
        .population
        .iter()
        .map(|p| PopulationRow {
            driver_id: p.id.0,
            style: p.style_index,
            acc: p.acc,
            dec: p.dec,
            sigma: p.sigma,
            s_max: p.s_max,
            g_min: p.g_min,
            tau: p.tau,
        })
        .collect();
    let mut by_kind = BTreeMap::new();
    for v in &out.violations {
        *by_kind.entry(v.kind.to_string()).or_insert(0) += 1;
    }
    let manifest = Manifest {
        command: "simulate",
        seed,
        stage_seed: stage,
        noise: cfg.noise.as_str(),
        config: &sim,
        violations_by_kind: by_kind,
        files: vec![
            FileCount {
                name: art::TRAJECTORIES,
                rows: out.points.len(),
            },
            FileCount {
                name: art::VIOLATIONS,
                rows: out.violations.len(),
            },
            FileCount {
                name: art::POPULATION,
                rows: population.len(),
            },
        ],
    };

    io::write_trajectories(&dir.join(art::TRAJECTORIES), &out.points)?;
    io::write_violations(&dir.join(art::VIOLATIONS), &out.violations)?;
    art::write_csv(&dir.join(art::POPULATION), &population)?;
    art::write_json(&dir.join(art::MANIFEST), &manifest)?;
    Ok(format!(
        "simulated {} drivers over {} days: {} points, {} violations",
        sim.drivers,
        sim.days,
        out.points.len(),
        out.violations.len()
    ))
}

// ----------------------------------------------------------------- extract

/// Per-driver feature rows from raw points and violation records.
pub fn extract_stage(
    cfg: &PipelineConfig,
    rows: &[PointRow],
    violations: &[ViolationRecord],
) -> Result<(Dataset, ExtractSummary), CliError> {
    let network = if cfg.use_network {
        Some(RoadNetwork::grid(cfg.sim.grid).map_err(CliError::invalid)?)
    } else {
        None
    };
    let (drivers, summary) = extract_population(
        rows,
        violations,
        &cfg.split(),
        &cfg.extract,
        network.as_ref(),
    )
    .map_err(CliError::invalid)?;
    if summary.skipped_drivers > 0 {
        log::warn!(
            "skipped {} drivers without observation-period trips",
            summary.skipped_drivers
        );
    }
    if drivers.is_empty() {
        return Err(CliError::invalid("no driver has observation-period trips"));
    }
    Ok((Dataset::from_rows(&drivers), summary))
}

pub fn extract(cfg: &PipelineConfig) -> Result<String, CliError> {
    let dir = &cfg.work_dir;
    ensure_dir(dir)?;
    let rows = io::read_trajectories(&cfg.trajectories_path())?;
    let violations = io::read_violations(&cfg.violations_path())?;
    let (data, summary) = extract_stage(cfg, &rows, &violations)?;
    io::write_features(&dir.join(art::FEATURES), &data)?;
    art::write_json(&dir.join(art::EXTRACT_SUMMARY), &summary)?;
    Ok(format!(
        "extracted {} drivers ({} bad, {} skipped) from {} trips",
        data.len(),
        summary.bad_drivers,
        summary.skipped_drivers,
        summary.trips
    ))
}

// ------------------------------------------------------------------- train

#[derive(Serialize)]
struct MetricsRow {
    model: &'static str,
    ratio: String,
    fold: usize,
    accuracy: f64,
    precision_good: f64,
    auc: f64,
    no_predicted_good: bool,
    auc_undefined: bool,
}

const METRICS_HEADER: [&str; 8] = [
    "model",
    "ratio",
    "fold",
    "accuracy",
    "precision_good",
    "auc",
    "no_predicted_good",
    "auc_undefined",
];

fn metric_rows(cv: &CvResult, ratio: Ratio) -> Vec<MetricsRow> {
    cv.folds
        .iter()
        .enumerate()
        .map(|(f, m)| MetricsRow {
            model: cv.kind.as_str(),
            ratio: ratio.to_string(),
            fold: f + 1,
            accuracy: m.accuracy,
            precision_good: m.precision_good,
            auc: m.auc,
            no_predicted_good: m.no_predicted_good,
            auc_undefined: m.auc_undefined,
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct IdRow {
    driver_id: u32,
}

fn summarize(label: &str, m: &EvalMetrics) -> String {
    format!(
        "{label}: accuracy {:.3}, precision_good {:.3}, auc {:.3}",
        m.accuracy, m.precision_good, m.auc
    )
}

/// Per-model cross-validation on the data downsampled to `cfg.ratio`, plus
/// the optional sweep and the final forest.
pub struct TrainOutcome {
    pub balanced: Dataset,
    pub comparison: Vec<CvResult>,
    pub sweep: Vec<(Ratio, CvResult)>,
    pub forest: ForestModel,
}

pub fn train_stage(cfg: &PipelineConfig, data: &Dataset, seed: u64) -> Result<TrainOutcome, CliError> {
    data.require_both_classes().map_err(CliError::invalid)?;
    let stage = derive_seed(seed, "train");
    let balanced =
        downsample(data, cfg.ratio, derive_seed(stage, "downsample")).map_err(CliError::invalid)?;
    let comparison = ModelKind::ALL
        .iter()
        .map(|&kind| kfold_cv(&balanced, cfg.folds, kind, &cfg.model, derive_seed(stage, "cv"), None))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::invalid)?;
    let sweep = if cfg.sweep {
        SWEEP_RATIOS
            .iter()
            .map(|&r| {
                kfold_cv(data, cfg.folds, ModelKind::Forest, &cfg.model, derive_seed(stage, "sweep"), Some(r))
                    .map(|cv| (r, cv))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::invalid)?
    } else {
        Vec::new()
    };
    let hp = ForestHyperparams {
        seed: derive_seed(stage, "forest"),
        ..cfg.model.forest
    };
    let forest = train_forest(&balanced, &hp).map_err(CliError::invalid)?;
    Ok(TrainOutcome {
        balanced,
        comparison,
        sweep,
        forest,
    })
}

pub fn train(cfg: &PipelineConfig, seed: u64) -> Result<String, CliError> {
    let dir = &cfg.work_dir;
    ensure_dir(dir)?;
    let data = io::read_features(&dir.join(art::FEATURES))?;
    let out = train_stage(cfg, &data, seed)?;

    let metrics: Vec<MetricsRow> = out
        .comparison
        .iter()
        .flat_map(|cv| metric_rows(cv, cfg.ratio))
        .collect();
    let ids: Vec<IdRow> = out.balanced.ids.iter().map(|&driver_id| IdRow { driver_id }).collect();
    art::write_csv_with_header(&dir.join(art::METRICS), &METRICS_HEADER, &metrics)?;
    if cfg.sweep {
        let rows: Vec<MetricsRow> = out.sweep.iter().flat_map(|(r, cv)| metric_rows(cv, *r)).collect();
        art::write_csv_with_header(&dir.join(art::SWEEP), &METRICS_HEADER, &rows)?;
    }
    art::write_json(&dir.join(art::MODEL), &out.forest)?;
    art::write_csv(&dir.join(art::TRAINING_SET), &ids)?;

    let mut lines = vec![format!(
        "trained on {} rows ({} good, {} bad) at {}",
        out.balanced.len(),
        out.balanced.n_good(),
        out.balanced.n_bad(),
        cfg.ratio
    )];
    lines.extend(out.comparison.iter().map(|cv| summarize(cv.kind.as_str(), &cv.mean)));
    lines.extend(out.sweep.iter().map(|(r, cv)| summarize(&format!("RF {r}"), &cv.mean)));
    Ok(lines.join("\n"))
}

// ------------------------------------------------------------------- score

/// Training rows restricted to the model's features, in the model's order.
fn align(data: &Dataset, names: &[String], ids: &[u32]) -> Result<Dataset, CliError> {
    let cols = names
        .iter()
        .map(|n| {
            data.feature_names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| CliError::invalid(ScorecardError::MissingFeature(n.clone())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let index: HashMap<u32, usize> = data.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let rows = ids
        .iter()
        .map(|id| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| CliError::invalid(format!("training driver {id} is not in the feature file")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(
        names.to_vec(),
        ids.to_vec(),
        rows.iter().map(|&i| cols.iter().map(|&c| data.x[i][c]).collect()).collect(),
        rows.iter().map(|&i| data.labels[i]).collect(),
    )
    .map_err(CliError::invalid)
}

/// Build the scorecard from the model and its training rows and score every
/// driver in `data`.
pub fn score_stage(
    cfg: &PipelineConfig,
    data: &Dataset,
    model: &ForestModel,
    training_ids: &[u32],
) -> Result<(Scorecard, Vec<RankedDriver>), CliError> {
    if model.importances.len() != model.feature_names.len() {
        return Err(CliError::invalid("model importances do not match its features"));
    }
    let train = align(data, &model.feature_names, training_ids)?;
    let card = Scorecard::build(&train, &model.importances, cfg.min_weight).map_err(CliError::invalid)?;
    let scored = data
        .ids
        .iter()
        .zip(&data.x)
        .zip(&data.labels)
        .map(|((&id, row), &label)| {
            card.score(&data.feature_names, row)
                .map(|s| (id, s, Some(label)))
                .map_err(CliError::invalid)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((card, rank_drivers(&scored)))
}

#[derive(Serialize, Deserialize)]
struct ScoreRow {
    driver_id: u32,
    score: f64,
    rank: usize,
    label: Option<String>,
}

pub fn score(cfg: &PipelineConfig) -> Result<String, CliError> {
    let dir = &cfg.work_dir;
    ensure_dir(dir)?;
    let data = io::read_features(&dir.join(art::FEATURES))?;
    let model: ForestModel = art::read_json(&dir.join(art::MODEL))?;
    let ids: Vec<IdRow> = art::read_csv(&dir.join(art::TRAINING_SET))?;
    let ids: Vec<u32> = ids.into_iter().map(|r| r.driver_id).collect();
    let (card, ranked) = score_stage(cfg, &data, &model, &ids)?;

    let rows: Vec<ScoreRow> = ranked
        .iter()
        .map(|r| ScoreRow {
            driver_id: r.driver,
            score: r.score,
            rank: r.rank,
            label: r.label.map(|l| label_text(l).to_string()),
        })
        .collect();
    art::write_json(&dir.join(art::SCORECARD), &card)?;
    art::write_csv(&dir.join(art::SCORES), &rows)?;
    let (lo, hi) = ranked
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.score), hi.max(r.score)));
    Ok(format!(
        "scored {} drivers with {} features (dropped {}); scores span {lo:.2} to {hi:.2}",
        ranked.len(),
        card.features.len(),
        card.dropped.len()
    ))
}

// ------------------------------------------------------------------ report

#[derive(Serialize)]
struct BandRow {
    first_rank: usize,
    last_rank: usize,
    score_high: f64,
    score_low: f64,
    drivers: usize,
    bad_drivers: Option<usize>,
    share_of_bad: Option<f64>,
}

#[derive(Serialize)]
struct TopNRow {
    n: usize,
    bad_drivers: Option<usize>,
    bad_proportion: Option<f64>,
}

#[derive(Serialize)]
pub struct ReportSummary {
    pub population: usize,
    pub bad_drivers: Option<usize>,
    pub bad_rate: Option<f64>,
    /// Share of all bad drivers in the worst third of the ranking.
    pub bottom_third_bad_share: Option<f64>,
    /// Bad rate among the best 5% of drivers.
    pub top_5pct_bad_rate: Option<f64>,
    /// Ground-truth and detected violation counts from extraction, when present.
    pub extraction: Option<serde_json::Value>,
}

/// Default top-N list: 1%, 5%, 10% and 20% of the population.
fn default_top_n(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = [0.01, 0.05, 0.10, 0.20]
        .iter()
        .map(|f| ((f * n as f64).floor() as usize).max(1))
        .collect();
    v.dedup();
    v
}

pub struct ReportOutcome {
    pub report: RankReport,
    pub top_n: Vec<(usize, Option<f64>)>,
    pub summary: ReportSummary,
}

pub fn report_stage(
    cfg: &PipelineConfig,
    ranked: &[RankedDriver],
    extraction: Option<serde_json::Value>,
) -> Result<ReportOutcome, CliError> {
    let n = ranked.len();
    if n == 0 {
        return Err(CliError::invalid("no scored drivers to report"));
    }
    let bands = cfg.bands.clone().map_or_else(|| BandSpec::scaled(n), BandSpec::new);
    let report = rank_report(ranked, &bands).map_err(|e| CliError::Config(e.to_string()))?;
    let top = cfg.top_n.clone().unwrap_or_else(|| default_top_n(n));
    if let Some(bad) = top.iter().find(|&&k| k > n) {
        return Err(CliError::Config(format!("top_n value {bad} exceeds the {n} scored drivers")));
    }
    let top_n = top.iter().map(|&k| (k, top_n_bad_proportion(ranked, k))).collect();
    let five = ((0.05 * n as f64).floor() as usize).max(1);
    let summary = ReportSummary {
        population: n,
        bad_drivers: report.total_bad,
        bad_rate: report.total_bad.map(|b| b as f64 / n as f64),
        bottom_third_bad_share: bottom_share(ranked, 1.0 / 3.0),
        top_5pct_bad_rate: top_n_bad_proportion(ranked, five),
        extraction,
    };
    Ok(ReportOutcome {
        report,
        top_n,
        summary,
    })
}

fn read_scores(path: &Path) -> Result<Vec<RankedDriver>, CliError> {
    let rows: Vec<ScoreRow> = art::read_csv(path)?;
    let mut triples = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let label = match r.label.as_deref() {
            None | Some("") => None,
            Some(t) => Some(parse_label(t).ok_or_else(|| {
                CliError::invalid(format!("{}:{}: unknown label {t:?}", path.display(), i + 2))
            })?),
        };
        if !(0.0..=100.0).contains(&r.score) {
            return Err(CliError::invalid(format!(
                "{}:{}: score {} outside [0, 100]",
                path.display(),
                i + 2,
                r.score
            )));
        }
        triples.push((r.driver_id, r.score, label));
    }
    // A partly labelled file carries no usable label information.
    if triples.iter().any(|t| t.2.is_none()) {
        for t in &mut triples {
            t.2 = None::<Label>;
        }
    }
    Ok(rank_drivers(&triples))
}

pub fn report(cfg: &PipelineConfig) -> Result<String, CliError> {
    let dir = &cfg.work_dir;
    ensure_dir(dir)?;
    let ranked = read_scores(&dir.join(art::SCORES))?;
    let summary_path = dir.join(art::EXTRACT_SUMMARY);
    let extraction = if summary_path.exists() {
        Some(art::read_json::<serde_json::Value>(&summary_path)?)
    } else {
        None
    };
    let out = report_stage(cfg, &ranked, extraction)?;

    let bands: Vec<BandRow> = out
        .report
        .bands
        .iter()
        .map(|b| BandRow {
            first_rank: b.first_rank,
            last_rank: b.last_rank,
            score_high: b.score_high,
            score_low: b.score_low,
            drivers: b.drivers,
            bad_drivers: b.bad,
            share_of_bad: b.share_of_bad,
        })
        .collect();
    let top: Vec<TopNRow> = out
        .top_n
        .iter()
        .map(|&(n, p)| TopNRow {
            n,
            bad_drivers: p.map(|p| (p * n as f64).round() as usize),
            bad_proportion: p,
        })
        .collect();
    art::write_csv(&dir.join(art::REPORT), &bands)?;
    art::write_csv(&dir.join(art::TOP_N), &top)?;
    art::write_json(&dir.join(art::REPORT_SUMMARY), &out.summary)?;

    let pct = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{:.2}%", 100.0 * v));
    let mut lines = vec![format!(
        "bottom third holds {} of bad drivers; top 5% bad rate {} (population {})",
        pct(out.summary.bottom_third_bad_share),
        pct(out.summary.top_5pct_bad_rate),
        pct(out.summary.bad_rate)
    )];
    for b in &out.report.bands {
        lines.push(format!(
            "  ranks {:>6}-{:<6} scores {:>6.2}-{:<6.2} bad {:>5} ({})",
            b.first_rank,
            b.last_rank,
            b.score_high,
            b.score_low,
            b.bad.map_or("n/a".to_string(), |x| x.to_string()),
            pct(b.share_of_bad)
        ));
    }
    Ok(lines.join("\n"))
}
