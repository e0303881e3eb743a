use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forge_core::correspondence::{cooccurrence, correspondence_analysis, read_labelled_matrix};
use forge_core::dataset::{BinCount, BinPolicy};
use forge_core::doc::{beta_tag, cluster_table_csv, estimate_w, DocOptions};
use forge_core::persona::{markdown_report, Linkage, ProtoPersona, SimilarityMatrix};
use forge_core::{ForgeError, Result};
use forge_cli::config::{parse_list, RunConfig, WSetting};
use forge_cli::pipeline::{run_pipeline, StageError};
use forge_cli::stages;

#[derive(Parser)]
#[command(name = "forge", version, about = "Subspace clustering of VAS ratings into proto-personas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a CSV and write the dataset as JSON.
    Ingest {
        input: PathBuf,
        /// Dimension labels: CSV with id,label,left,right.
        #[arg(long)]
        dims: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Suggest w from nearest-neighbour distances.
    EstimateW { input: PathBuf },
    /// Run the subspace search once per beta.
    Cluster(ClusterArgs),
    /// Pairwise similarity matrix of clusters, as CSV.
    Similarity {
        clusters: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Agglomerative dendrogram over clusters, as JSON.
    Dendrogram {
        clusters: PathBuf,
        #[arg(long, default_value = "average")]
        linkage: Linkage,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cut the dendrogram and merge each set into a proto-persona.
    Merge {
        clusters: PathBuf,
        #[arg(long)]
        cut: f64,
        #[arg(long, default_value = "average")]
        linkage: Linkage,
        #[arg(long, default_value_t = forge_core::persona::DEFAULT_CONFLICT_SD)]
        conflict_sd: f64,
        /// Dataset used to fill in descriptions.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Markdown report for proto-personas from `merge`.
    Describe {
        protos: PathBuf,
        /// Dataset (CSV or JSON) whose dimension labels are used.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        dims: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Co-occurrence counts of subjects across clusters.
    Cooccur {
        clusters: PathBuf,
        /// Comma-separated cluster ids to leave out.
        #[arg(long, default_value = "")]
        exclude: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Correspondence analysis of a contingency table CSV.
    Ca {
        table: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bin scores into categories.
    Bin(BinArgs),
    /// Multiple correspondence analysis of the binned data.
    Mca(BinArgs),
    /// Squared correlation ratios between variables and MCA axes.
    Corr {
        #[command(flatten)]
        bin: BinArgs,
        #[arg(long, default_value_t = 2)]
        axes: usize,
    },
    /// Whole pipeline from a JSON config; flags override the file.
    Run(RunArgs),
    /// Serve the HTTP API for the workbench.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Directory holding uploaded datasets and session files.
        #[arg(long, default_value = "forge-data")]
        data_dir: PathBuf,
        #[arg(long)]
        serial: bool,
    },
}

#[derive(Args)]
struct ClusterArgs {
    input: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number or "auto".
    #[arg(long)]
    w: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated list.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Only search for this subject's cluster.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    dims: Option<PathBuf>,
    /// Write clusters.json and per-beta tables here instead of stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct BinArgs {
    input: PathBuf,
    /// 2, 3 or auto.
    #[arg(long, default_value = "auto")]
    bins: BinCount,
    /// Per-dimension counts, e.g. d3=2,d7=3.
    #[arg(long, default_value = "")]
    overrides: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    w: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    linkage: Option<Linkage>,
    #[arg(long)]
    cut: Option<f64>,
    #[arg(long)]
    exclude: Option<String>,
    /// Enable the binning/MCA stages with this default bin count.
    #[arg(long)]
    bins: Option<BinCount>,
    #[arg(long)]
    serial: bool,
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            let mut out = std::io::stdout().lock();
            let done = out
                .write_all(text.as_bytes())
                .and_then(|()| if text.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") });
            match done {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

fn options(serial: bool) -> Result<DocOptions> {
    Ok(DocOptions {
        trial_cap: stages::trial_cap_from_env()?,
        parallel: !serial,
    })
}

fn policy(args: &BinArgs) -> Result<BinPolicy> {
    let mut p = BinPolicy::uniform(args.bins);
    for item in args.overrides.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (dim, count) = item
            .split_once('=')
            .ok_or_else(|| ForgeError::InvalidParameter(format!("override {item:?} is not dim=count")))?;
        p.overrides.insert(dim.trim().to_string(), count.parse()?);
    }
    Ok(p)
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(i) = args.input {
        cfg.input = Some(i);
    }
    if let Some(w) = &args.w {
        cfg.w = WSetting::parse(w)?;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(b) = &args.beta {
        cfg.betas = parse_list(b, "beta")?;
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.dims.is_some() {
        cfg.dims = args.dims;
    }
    cfg.validate()?;
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| ForgeError::InvalidParameter("no input file given".into()))?;
    let seed = cfg
        .seed
        .ok_or_else(|| ForgeError::InvalidParameter("--seed is required".into()))?;
    let data = stages::load_dataset(input, cfg.dims.as_deref())?;
    let w = stages::resolve_w(&data, cfg.w)?;
    let runs = stages::cluster_runs(
        &data,
        w,
        cfg.alpha,
        &cfg.betas,
        seed,
        args.target.as_deref(),
        &options(args.serial)?,
    )?;
    for run in &runs {
        for warning in &run.warnings {
            eprintln!("warning: {warning}");
        }
    }
    let json = stages::runs_to_json(&runs)?;
    match args.out_dir {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("clusters.json"), json + "\n")?;
            for run in &runs {
                let name = format!("clusters_beta{}.csv", beta_tag(run.params.beta));
                fs::write(dir.join(name), cluster_table_csv(&run.clusters, None)?)?;
            }
            Ok(())
        }
        None => emit(None, &json),
    }
}

fn run(args: RunArgs) -> std::result::Result<Vec<PathBuf>, StageError> {
    let stage = |source| StageError { stage: "config", source };
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p).map_err(stage)?,
        None => RunConfig::default(),
    };
    if args.input.is_some() {
        cfg.input = args.input;
    }
    if args.out_dir.is_some() {
        cfg.output_dir = args.out_dir;
    }
    if let Some(w) = &args.w {
        cfg.w = WSetting::parse(w).map_err(stage)?;
    }
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(b) = &args.beta {
        cfg.betas = parse_list(b, "beta").map_err(stage)?;
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if let Some(l) = args.linkage {
        cfg.linkage = l;
    }
    if let Some(c) = args.cut {
        cfg.cut = c;
    }
    if let Some(e) = &args.exclude {
        cfg.exclude = parse_list(e, "cluster id").map_err(stage)?;
    }
    if let Some(b) = args.bins {
        cfg.bins = Some(BinPolicy::uniform(b));
    }
    let opts = options(args.serial).map_err(stage)?;
    run_pipeline(&cfg, &opts)
}

fn dispatch(cmd: Command) -> std::result::Result<(), StageError> {
    let at = |stage: &'static str| move |source| StageError { stage, source };
    match cmd {
        Command::Ingest { input, dims, output } => {
            let data = stages::load_dataset(&input, dims.as_deref()).map_err(at("ingest"))?;
            eprintln!(
                "{} subjects, {} dimensions, {} missing cells",
                data.n_subjects(),
                data.n_dims(),
                data.missing_count()
            );
            emit(output.as_deref(), &data.to_json().map_err(at("ingest"))?).map_err(at("ingest"))
        }
        Command::EstimateW { input } => {
            let data = stages::load_dataset(&input, None).map_err(at("ingest"))?;
            let est = estimate_w(&data).map_err(at("estimate-w"))?;
            let text = serde_json::to_string_pretty(&est).map_err(|e| at("estimate-w")(e.into()))?;
            emit(None, &text).map_err(at("estimate-w"))
        }
        Command::Cluster(args) => cluster(args).map_err(at("cluster")),
        Command::Similarity { clusters, output } => {
            let cs = stages::load_clusters(&clusters).map_err(at("similarity"))?;
            let csv = SimilarityMatrix::compute(&cs).to_csv_string().map_err(at("similarity"))?;
            emit(output.as_deref(), &csv).map_err(at("similarity"))
        }
        Command::Dendrogram { clusters, linkage, output } => {
            let cs = stages::load_clusters(&clusters).map_err(at("dendrogram"))?;
            let d = stages::dendrogram_for(&cs, linkage).map_err(at("dendrogram"))?;
            emit(output.as_deref(), &d.to_json().map_err(at("dendrogram"))?).map_err(at("dendrogram"))
        }
        Command::Merge { clusters, cut, linkage, conflict_sd, data, output } => {
            let cs = stages::load_clusters(&clusters).map_err(at("merge"))?;
            let mut m = stages::merge_at(&cs, linkage, cut, conflict_sd).map_err(at("merge"))?;
            if let Some(d) = data {
                let data = stages::load_dataset(&d, None).map_err(at("ingest"))?;
                stages::describe_all(&mut m.protos, &data).map_err(at("describe"))?;
            }
            let text = serde_json::to_string_pretty(&m).map_err(|e| at("merge")(e.into()))?;
            emit(output.as_deref(), &text).map_err(at("merge"))
        }
        Command::Describe { protos, data, dims, output } => {
            let text = fs::read_to_string(&protos).map_err(|e| at("describe")(e.into()))?;
            let protos: Vec<ProtoPersona> = match serde_json::from_str::<stages::MergeOutcome>(&text) {
                Ok(m) => m.protos,
                Err(_) => serde_json::from_str(&text).map_err(|e| at("describe")(e.into()))?,
            };
            let data = stages::load_dataset(&data, dims.as_deref()).map_err(at("ingest"))?;
            let md = markdown_report(&protos, data.dimensions()).map_err(at("describe"))?;
            emit(output.as_deref(), &md).map_err(at("describe"))
        }
        Command::Cooccur { clusters, exclude, output } => {
            let cs = stages::load_clusters(&clusters).map_err(at("cooccur"))?;
            let ex: Vec<String> = parse_list(&exclude, "cluster id").map_err(at("cooccur"))?;
            let t = cooccurrence(&cs, &ex, None).map_err(at("cooccur"))?;
            for w in &t.warnings {
                eprintln!("warning: {w}");
            }
            emit(output.as_deref(), &t.to_csv_string().map_err(at("cooccur"))?).map_err(at("cooccur"))
        }
        Command::Ca { table, output } => {
            let file = fs::File::open(&table).map_err(|e| at("ca")(e.into()))?;
            let m = read_labelled_matrix(file).map_err(at("ca"))?;
            let map = correspondence_analysis(&m.row_ids, &m.col_ids, &m.values).map_err(at("ca"))?;
            for w in &map.warnings {
                eprintln!("warning: {w}");
            }
            emit(output.as_deref(), &map.to_json().map_err(at("ca"))?).map_err(at("ca"))
        }
        Command::Bin(args) => {
            let data = stages::load_dataset(&args.input, None).map_err(at("ingest"))?;
            let p = policy(&args).map_err(at("bin"))?;
            let t = stages::bin(&data, &p).map_err(at("bin"))?;
            emit(args.output.as_deref(), &t.to_csv_string().map_err(at("bin"))?).map_err(at("bin"))
        }
        Command::Mca(args) => {
            let data = stages::load_dataset(&args.input, None).map_err(at("ingest"))?;
            let p = policy(&args).map_err(at("mca"))?;
            let (_, r) = stages::mca_of(&data, &p).map_err(at("mca"))?;
            for w in &r.map.warnings {
                eprintln!("warning: {w}");
            }
            let text = serde_json::to_string_pretty(&r).map_err(|e| at("mca")(e.into()))?;
            emit(args.output.as_deref(), &text).map_err(at("mca"))
        }
        Command::Corr { bin, axes } => {
            let data = stages::load_dataset(&bin.input, None).map_err(at("ingest"))?;
            let p = policy(&bin).map_err(at("corr"))?;
            let eta = stages::eta_of(&data, &p, axes).map_err(at("corr"))?;
            emit(bin.output.as_deref(), &eta.to_csv_string().map_err(at("corr"))?).map_err(at("corr"))
        }
        Command::Serve { port, host, data_dir, serial } => {
            let opts = options(serial).map_err(at("serve"))?;
            let addr = std::net::SocketAddr::new(host, port);
            let rt = tokio::runtime::Runtime::new().map_err(|e| at("serve")(e.into()))?;
            eprintln!("listening on http://{addr}, data in {}", data_dir.display());
            rt.block_on(forge_server::serve(addr, data_dir, opts))
                .map_err(|e| at("serve")(e.into()))
        }
        Command::Run(args) => {
            for path in run(args)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
