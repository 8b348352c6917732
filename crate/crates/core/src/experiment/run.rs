use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{AnalysisSettings, RunConfig};
use super::manifest::{Manifest, MANIFEST_FILE};
use crate::analysis::phenomena::{
    best_cluster, corner_flags, fraction, near_corner, wall_end_flags, ClusterFraction, NothingPerceived,
    FACING_TOLERANCE,
};
use crate::analysis::{
    cluster_report, kmeans_fit, pca_fit, transfer, write_projection_csv, ClusterModel, ClusterReport, KMeansConfig,
    PcaModel, RepresentationSet,
};
use crate::dataset::{self, generate, Trajectory};
use crate::error::{Error, Result};
use crate::models::{encode, evaluate, train, ArchKind, ArchitectureSpec, TrainedModel, TrainingSet};
use crate::sim::Environment;

/// Share of nothing-perceived records a cluster must hold to count as one
/// of the clusters they span.
pub const SPAN_MIN_SHARE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationCell {
    pub architecture: ArchKind,
    pub replicate: usize,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub environment: String,
    pub error: f64,
    pub epochs: usize,
}

/// Per-architecture median error in each environment, in dataset order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub architecture: ArchKind,
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferSummary {
    pub environment: String,
    pub points: usize,
    /// Points that received a label; always all of them.
    pub labeled: usize,
    /// Cluster-report samples of the source corner cluster.
    pub corner_cluster_samples: usize,
    /// Share of those samples near a corner and facing it.
    pub corner_cluster_facing_fraction: Option<f64>,
}

/// Checkable cluster phenomena of one representation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhenomenaSummary {
    pub architecture: ArchKind,
    pub replicate: usize,
    pub environment: String,
    pub points: usize,
    pub nothing_perceived_records: usize,
    pub nothing_perceived_per_cluster: Vec<usize>,
    /// Clusters holding at least [`SPAN_MIN_SHARE`] of those records.
    pub nothing_perceived_spanned: usize,
    pub nothing_perceived_dominant_fraction: f64,
    /// Share of all points within the corner radius of a corner.
    pub corner_data_fraction: f64,
    pub corner_cluster: Option<ClusterFraction>,
    pub wall_end_data_fraction: f64,
    pub wall_end_cluster: Option<ClusterFraction>,
    pub transfers: Vec<TransferSummary>,
}

/// Projection, clustering and phenomena of one representation set.
#[derive(Clone, Debug)]
pub struct ClusterAnalysis {
    pub pca: PcaModel,
    pub clusters: ClusterModel,
    pub report: ClusterReport,
    pub summary: PhenomenaSummary,
}

/// Fits PCA and k-means on `reps` (recorded in `env`) and measures the
/// geometric phenomena of the clusters.
pub fn analyze(
    reps: &RepresentationSet,
    env: &Environment,
    settings: &AnalysisSettings,
    kmeans_seed: u64,
    sampling_seed: u64,
    replicate: usize,
) -> Result<ClusterAnalysis> {
    let pca = pca_fit(reps.codes.view(), 2)?;
    let clusters = kmeans_fit(reps.codes.view(), &KMeansConfig::new(settings.k, kmeans_seed))?;
    let report = cluster_report(&clusters, reps, settings.samples_per_cluster, sampling_seed)?;
    let k = clusters.k();
    let nothing = NothingPerceived::new(&report.labels, k, &reps.min_laser);
    let corners = corner_flags(env, &reps.poses, None);
    let ends = wall_end_flags(env, &reps.poses);
    let has_ends = !env.wall_ends().is_empty();
    let summary = PhenomenaSummary {
        architecture: reps.encoder.kind,
        replicate,
        environment: reps.env_name.clone(),
        points: reps.len(),
        nothing_perceived_records: nothing.records,
        nothing_perceived_spanned: nothing.clusters_spanned(SPAN_MIN_SHARE),
        nothing_perceived_dominant_fraction: nothing.dominant_fraction(),
        nothing_perceived_per_cluster: nothing.per_cluster,
        corner_data_fraction: fraction(&corners),
        corner_cluster: best_cluster(&report.labels, k, &corners, settings.min_cluster_members),
        wall_end_data_fraction: fraction(&ends),
        wall_end_cluster: has_ends
            .then(|| best_cluster(&report.labels, k, &ends, settings.min_cluster_members))
            .flatten(),
        transfers: Vec::new(),
    };
    Ok(ClusterAnalysis {
        pca,
        clusters,
        report,
        summary,
    })
}

/// Applies source clusters to another environment and measures whether the
/// corner cluster still lands on corners.
pub fn transfer_summary(
    model: &TrainedModel,
    source: &ClusterAnalysis,
    traj: &Trajectory,
    env: &Environment,
    settings: &AnalysisSettings,
    sampling_seed: u64,
) -> Result<(TransferSummary, ClusterReport)> {
    let t = transfer(
        model,
        &source.clusters,
        &model.encoder_tag(),
        traj,
        settings.samples_per_cluster,
        sampling_seed,
    )?;
    let corners = env.corners();
    let (samples, facing) = match source.summary.corner_cluster {
        Some(c) => {
            let flags: Vec<bool> = t
                .report
                .samples_of(c.cluster)
                .map(|s| near_corner(&corners, &crate::sim::Pose::new(s.x, s.y, s.theta), Some(FACING_TOLERANCE)))
                .collect();
            let n = flags.len();
            (n, (n > 0).then(|| fraction(&flags)))
        }
        None => (0, None),
    };
    Ok((
        TransferSummary {
            environment: env.name().to_string(),
            points: t.representations.len(),
            labeled: t.report.labels.iter().filter(|&&l| l < source.clusters.k()).count(),
            corner_cluster_samples: samples,
            corner_cluster_facing_fraction: facing,
        },
        t.report,
    ))
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub root: PathBuf,
    pub environments: Vec<String>,
    pub evaluations: Vec<EvaluationCell>,
    pub table: Vec<TableRow>,
    pub phenomena: Vec<PhenomenaSummary>,
    pub manifest: Manifest,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl ExperimentReport {
    pub fn median_error(&self, arch: ArchKind, env: &str) -> Option<f64> {
        let col = self.environments.iter().position(|e| e == env)?;
        self.table.iter().find(|r| r.architecture == arch).map(|r| r.errors[col])
    }
}

/// Median errors laid out with architectures as rows and environments as
/// columns.
pub fn format_table(environments: &[String], table: &[TableRow], replicates: usize) -> String {
    let mut out = format!(
        "Next-step prediction error (mean squared, normalized units), median of {replicates} run(s)\n"
    );
    let _ = write!(out, "{:<22}", "model");
    for e in environments {
        let _ = write!(out, "{e:>12}");
    }
    out.push('\n');
    for row in table {
        let _ = write!(out, "{:<22}", row.architecture.display_name());
        for v in &row.errors {
            let _ = write!(out, "{v:>12.6}");
        }
        out.push('\n');
    }
    out
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| Error::io(path, e))?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Generates the datasets, trains and evaluates every architecture and
/// replicate, analyses the representations, and writes a manifest covering
/// every output under `root`.
pub fn run_experiment(config: &RunConfig, root: &Path, log: &mut dyn FnMut(&str)) -> Result<ExperimentReport> {
    config.validate()?;
    let envs = config
        .datasets
        .iter()
        .map(|d| Environment::from_layout(&d.layout))
        .collect::<Result<Vec<_>>>()?;
    let occupied = match std::fs::read_dir(root) {
        Ok(mut entries) => entries.next().is_some(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => false,
        Err(e) => return Err(Error::io(root, e)),
    };
    if occupied {
        return Err(Error::InvalidArgument(format!(
            "{} is not empty; choose a new directory",
            root.display()
        )));
    }

    mkdir(&root.join("data"))?;
    config.save(root.join("config.json"))?;

    let mut trajectories = Vec::with_capacity(envs.len());
    let mut sets = Vec::with_capacity(envs.len());
    for (env, d) in envs.iter().zip(&config.datasets) {
        log(&format!("generating {} ({} steps, seed {})", env.name(), config.steps, d.seed));
        let traj = generate(env, config.steps, d.seed)?;
        dataset::save(&traj, root.join("data").join(format!("{}.smt", env.name())))?;
        sets.push(TrainingSet::from_stream(&traj.stream())?);
        trajectories.push(traj);
    }
    let names: Vec<String> = envs.iter().map(|e| e.name().to_string()).collect();

    let mut evaluations = Vec::new();
    let mut phenomena = Vec::new();
    for &arch in &config.architectures {
        let spec = ArchitectureSpec::canonical(arch);
        for (r, (&init, &shuffle)) in config.seeds.init.iter().zip(&config.seeds.shuffle).enumerate() {
            let tc = config.training.train_config(init, shuffle);
            let model = train(&spec, &sets[0], &tc, |_| {})?;
            let dir = root.join("models").join(arch.id()).join(format!("r{r}"));
            model.save(&dir)?;
            let mut line = format!(
                "{arch} r{r}: {} epochs (best {})",
                model.provenance.epochs_run, model.provenance.best_epoch
            );
            for (set, name) in sets.iter().zip(&names) {
                let error = evaluate(&model.network, set.test_rows())?;
                let _ = write!(line, ", {name} {error:.6}");
                evaluations.push(EvaluationCell {
                    architecture: arch,
                    replicate: r,
                    init_seed: init,
                    shuffle_seed: shuffle,
                    environment: name.clone(),
                    error,
                    epochs: model.provenance.epochs_run,
                });
            }
            log(&line);

            if config.analysis.architectures.contains(&arch) {
                phenomena.push(analyze_and_write(config, root, &model, r, &trajectories, &envs)?);
            }
        }
    }

    let table: Vec<TableRow> = config
        .architectures
        .iter()
        .map(|&arch| TableRow {
            architecture: arch,
            errors: names
                .iter()
                .map(|n| {
                    let mut v: Vec<f64> = evaluations
                        .iter()
                        .filter(|c| c.architecture == arch && &c.environment == n)
                        .map(|c| c.error)
                        .collect();
                    median(&mut v)
                })
                .collect(),
        })
        .collect();
    write_csv(&root.join("evaluation.csv"), &evaluations)?;
    {
        let path = root.join("table.csv");
        let mut w = csv::Writer::from_writer(File::create(&path).map_err(|e| Error::io(&path, e))?);
        let mut header = vec!["architecture".to_string()];
        header.extend(names.iter().cloned());
        w.write_record(&header)?;
        for row in &table {
            let mut rec = vec![row.architecture.id().to_string()];
            rec.extend(row.errors.iter().map(|e| e.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    let text = format_table(&names, &table, config.replicates());
    fs::write(root.join("table.txt"), &text).map_err(|e| Error::io(root.join("table.txt"), e))?;
    log(&text);

    let manifest = Manifest::collect(root, config)?;
    manifest.save(root.join(MANIFEST_FILE))?;
    Ok(ExperimentReport {
        root: root.to_path_buf(),
        environments: names,
        evaluations,
        table,
        phenomena,
        manifest,
    })
}

fn analyze_and_write(
    config: &RunConfig,
    root: &Path,
    model: &TrainedModel,
    replicate: usize,
    trajectories: &[Trajectory],
    envs: &[Environment],
) -> Result<PhenomenaSummary> {
    let settings = &config.analysis;
    let arch = model.spec().kind;
    let dir = root.join("analysis").join(arch.id()).join(format!("r{replicate}"));
    mkdir(&dir)?;
    let reps = encode(model, &trajectories[0])?;
    reps.save(dir.join("representations.bin"))?;
    let mut analysis = analyze(
        &reps,
        &envs[0],
        settings,
        config.seeds.kmeans,
        config.seeds.sampling,
        replicate,
    )?;
    write_json(&dir.join("pca.json"), &analysis.pca)?;
    write_projection_csv(
        dir.join("projection.csv"),
        analysis.pca.project(reps.codes.view())?.view(),
        &reps.min_laser,
    )?;
    analysis.clusters.save(dir.join("clusters.bin"), &reps.encoder)?;
    analysis.report.write_csv(dir.join("clusters.csv"))?;
    for (traj, env) in trajectories.iter().zip(envs).skip(1) {
        let (summary, report) = transfer_summary(model, &analysis, traj, env, settings, config.seeds.sampling)?;
        report.write_csv(dir.join(format!("transfer_{}.csv", env.name())))?;
        analysis.summary.transfers.push(summary);
    }
    write_json(&dir.join("phenomena.json"), &analysis.summary)?;
    Ok(analysis.summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Scale;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn invalid_config_leaves_no_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("run");
        let mut config = RunConfig::preset(Scale::Smoke);
        config.steps = 0;
        let err = run_experiment(&config, &root, &mut |_| {}).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "steps"));
        assert!(!root.exists());
    }

    #[test]
    fn table_layout() {
        let envs = vec!["square".to_string(), "rooms1".to_string()];
        let table = vec![TableRow {
            architecture: ArchKind::RecurrentSm,
            errors: vec![0.0024, 0.0031],
        }];
        let text = format_table(&envs, &table, 3);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("square") && lines[1].contains("rooms1"));
        assert!(lines[2].starts_with("Recurrent-SM-encoder"));
        assert!(lines[2].contains("0.002400"));
    }
}
