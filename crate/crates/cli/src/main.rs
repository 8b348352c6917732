use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sensorimotor::analysis::{
    cluster_report, kmeans_fit, pca_fit, transfer, write_projection_csv, ClusterModel, KMeansConfig,
    RepresentationSet, DEFAULT_SAMPLES_PER_CLUSTER,
};
use sensorimotor::dataset;
use sensorimotor::experiment::{run_experiment, Manifest, RunConfig, Scale, MANIFEST_FILE};
use sensorimotor::models::{encode, evaluate, train, ArchKind, ArchitectureSpec, TrainConfig, TrainedModel, TrainingSet};
use sensorimotor::sim::Environment;
use sensorimotor::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

const REPS_FILE: &str = "representations.bin";
const CLUSTERS_FILE: &str = "clusters.bin";

#[derive(Parser)]
#[command(name = "sensorimotor", version, about = "Sensorimotor prediction on a simulated lidar agent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the exploration policy and save the trajectory.
    Generate(GenerateArgs),
    /// Train one architecture on a trajectory.
    Train(TrainArgs),
    /// Report the next-step prediction error of a trained model.
    Evaluate(EvaluateArgs),
    /// Encode a trajectory and export its codes and PCA projection.
    Represent(RepresentArgs),
    /// Fit k-means on exported codes and write a cluster report.
    Cluster(ClusterArgs),
    /// Label another environment's trajectory with existing clusters.
    Transfer(TransferArgs),
    /// Run the whole pipeline from a preset, a config file or a manifest.
    Repro(ReproArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// square, rooms1, rooms2 or a JSON wall-list file.
    #[arg(long)]
    env: String,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write `<out>.csv` and a pose CSV next to it.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    arch: String,
    #[arg(long)]
    data: PathBuf,
    /// Default for both the initialization and the shuffling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    seed_init: Option<u64>,
    #[arg(long)]
    seed_shuffle: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Split {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: Split,
}

#[derive(Args)]
struct RepresentArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Directory written by `represent`.
    #[arg(long)]
    reps: PathBuf,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// k-means seeding.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cluster-report subsampling.
    #[arg(long, default_value_t = 0)]
    seed_sampling: u64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CLUSTER)]
    samples: usize,
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long)]
    encoder: PathBuf,
    #[arg(long)]
    clusters: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to `transfer_<env>.csv` next to the cluster file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed_sampling: u64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CLUSTER)]
    samples: usize,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
struct ReproSource {
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run a recorded experiment and compare every output hash.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ReproArgs {
    #[command(flatten)]
    source: ReproSource,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the resolved config to this path and stop.
    #[arg(long)]
    dump_config: Option<PathBuf>,
}

fn load_model(dir: &Path) -> Result<TrainedModel> {
    TrainedModel::load(dir).with_context(|| format!("loading model from {}", dir.display()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let env = Environment::from_layout(&a.env)?;
    let traj = dataset::generate(&env, a.steps, a.seed)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    dataset::save(&traj, &a.out)?;
    println!("wrote {} steps of {} to {}", traj.len(), env.name(), a.out.display());
    if a.csv {
        let csv = a.out.with_extension("csv");
        let poses = dataset::export_csv(&traj, &csv)?;
        println!("wrote {} and {}", csv.display(), poses.display());
    }
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let kind: ArchKind = a.arch.parse().map_err(|e: Error| Error::config("arch", e.to_string()))?;
    let stream = dataset::load_stream(&a.data)?;
    let data = TrainingSet::from_stream(&stream)?;
    let mut config = TrainConfig {
        init_seed: a.seed_init.unwrap_or(a.seed),
        shuffle_seed: a.seed_shuffle.unwrap_or(a.seed),
        ..TrainConfig::default()
    };
    if let Some(m) = a.max_epochs {
        config.max_epochs = m;
    }
    let model = train(&ArchitectureSpec::canonical(kind), &data, &config, |r| {
        println!("epoch {:>3}  train {:.6}  val {:.6}", r.epoch, r.train_loss, r.val_loss);
    })?;
    model.save(&a.out)?;
    println!(
        "{}: best epoch {} of {} (val {:.6}), saved to {}",
        kind.display_name(),
        model.provenance.best_epoch,
        model.provenance.epochs_run,
        model.provenance.best_val_loss,
        a.out.display()
    );
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let data = TrainingSet::from_stream(&dataset::load_stream(&a.data)?)?;
    let rows = match a.split {
        Split::Train => data.train_rows(),
        Split::Validation => data.validation_rows(),
        Split::Test => data.test_rows(),
        Split::All => &data.rows[..],
    };
    let error = evaluate(&model.network, rows)?;
    println!("{error:.8}");
    Ok(())
}

fn represent(a: RepresentArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let traj = dataset::load(&a.data)?;
    let reps = encode(&model, &traj)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    reps.save(a.out.join(REPS_FILE))?;
    let pca = pca_fit(reps.codes.view(), 2)?;
    std::fs::write(a.out.join("pca.json"), serde_json::to_string_pretty(&pca)? + "\n")?;
    write_projection_csv(a.out.join("projection.csv"), pca.project(reps.codes.view())?.view(), &reps.min_laser)?;
    println!(
        "encoded {} steps; first two components explain {:.1}% of the variance",
        reps.len(),
        100.0 * pca.explained_variance.iter().sum::<f64>() / pca.total_variance
    );
    Ok(())
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let reps = RepresentationSet::load(a.reps.join(REPS_FILE))?;
    let model = kmeans_fit(reps.codes.view(), &KMeansConfig::new(a.k, a.seed))?;
    model.save(a.reps.join(CLUSTERS_FILE), &reps.encoder)?;
    let report = cluster_report(&model, &reps, a.samples, a.seed_sampling)?;
    report.write_csv(a.reps.join("clusters.csv"))?;
    println!(
        "{} clusters, inertia {:.6} after {} iterations; sizes {:?}",
        model.k(),
        model.inertia,
        model.iterations,
        report.sizes
    );
    Ok(())
}

fn transfer_cmd(a: TransferArgs) -> Result<()> {
    let model = load_model(&a.encoder)?;
    let (clusters, source) = ClusterModel::load(&a.clusters)?;
    let traj = dataset::load(&a.data)?;
    let t = transfer(&model, &clusters, &source, &traj, a.samples, a.seed_sampling)?;
    let out = a.out.unwrap_or_else(|| {
        a.clusters
            .with_file_name(format!("transfer_{}.csv", traj.env_name))
    });
    t.report.write_csv(&out)?;
    println!(
        "labeled {} of {} steps of {}; sizes {:?}; report in {}",
        t.report.labels.len(),
        t.representations.len(),
        traj.env_name,
        t.report.sizes,
        out.display()
    );
    Ok(())
}

fn repro(a: ReproArgs) -> Result<()> {
    let (config, manifest) = match (&a.source.scale, &a.source.config, &a.source.manifest) {
        (Some(scale), _, _) => (RunConfig::preset(scale.parse::<Scale>()?), None),
        (_, Some(path), _) => (RunConfig::load(path)?, None),
        (_, _, Some(path)) => {
            let m = Manifest::load(path)?;
            (m.config.clone(), Some((m, path.clone())))
        }
        _ => unreachable!("clap enforces one source"),
    };
    if let Some(path) = a.dump_config {
        config.save(&path)?;
        println!("wrote {}", path.display());
        return Ok(());
    }
    let out = match (a.out, &config.output_dir, &manifest) {
        (Some(out), _, _) => out,
        (None, _, Some((_, path))) => {
            let dir = path.parent().unwrap_or(Path::new("."));
            let name = dir.file_name().map_or("run".into(), |n| n.to_string_lossy().into_owned());
            dir.with_file_name(format!("{name}-rerun"))
        }
        (None, Some(dir), None) => dir.clone(),
        (None, None, None) => PathBuf::from("runs").join(&config.name),
    };
    let report = run_experiment(&config, &out, &mut |line| eprintln!("{line}"))?;
    println!("artifacts in {}", report.root.display());
    if let Some((m, _)) = manifest {
        let mismatches = m.verify(&out)?;
        if !mismatches.is_empty() {
            for x in &mismatches {
                eprintln!("differs: {}", x.path);
            }
            bail!("{} of {} outputs differ from the manifest", mismatches.len(), m.outputs.len());
        }
        println!("all {} outputs match {}", m.outputs.len(), MANIFEST_FILE);
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<Error>(),
            Some(Error::Config { .. } | Error::UnknownLayout(_) | Error::InvalidEnvironment(_))
        )
    });
    if config {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Represent(a) => represent(a),
        Command::Cluster(a) => cluster(a),
        Command::Transfer(a) => transfer_cmd(a),
        Command::Repro(a) => repro(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
