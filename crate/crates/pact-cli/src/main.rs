//! `pact`: command-line front end for the activity classification engine.
//!
//! Subcommands: `train`, `classify`, `eval`, `bench`, `synth`,
//! `inspect-tree`. Exit codes: 0 success, 1 usage error, 2 data error
//! (unreadable/malformed input, checksum failure, length mismatch).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use pact_core::bench::run_bench;
use pact_core::features::{extract_features, LagHistory};
use pact_core::ingest::{
    decode_sample, read_labels_csv, read_samples_bin, read_samples_csv, write_labels_csv,
    write_samples_bin, write_samples_csv, AccelSample, LabelRecord, RawSample, SampleWindow,
    SAMPLE_RATE_HZ, WINDOW_LEN,
};
use pact_core::metrics::ConfusionMatrix;
use pact_core::pipeline::{
    run_dual, Backend, Classifier, ClassifierConfig, FixedClassifier, StepOutput,
};
use pact_core::synth::{default_corpus, gen_session, ActivityProfile, SessionScript};
use pact_core::tree::{
    deserialize_tree, serialize_tree, train_tree, training_accuracy, ActivityClass,
    LikelihoodTree, TrainingSet, TreeNode, CLASS_COUNT, MAX_DEPTH,
};

#[derive(Parser)]
#[command(name = "pact", version, about = "Streaming physical-activity classifier", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a likelihood tree from labeled sample streams
    Train(TrainArgs),
    /// Classify a sample stream with a trained tree
    Classify(ClassifyArgs),
    /// Evaluate a tree on labeled streams and print the confusion matrix
    Eval(EvalArgs),
    /// Measure per-sample latency and serialized footprints
    Bench(BenchArgs),
    /// Generate synthetic labeled streams
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Validate a tree file and print its structure
    InspectTree(InspectArgs),
}

#[derive(Args)]
struct StreamInput {
    /// Directory of stream pairs (`<prefix>_NN_samples.*` + `_labels.csv`)
    #[arg(long, value_name = "DIR")]
    corpus_dir: Option<PathBuf>,
    /// Sample stream file
    #[arg(long, value_name = "FILE", requires = "labels")]
    samples: Option<PathBuf>,
    /// Sidecar label CSV aligned with --samples
    #[arg(long, value_name = "FILE", requires = "samples")]
    labels: Option<PathBuf>,
    /// Sample file format
    #[arg(long, default_value = "csv", value_parser = ["csv", "bin"])]
    format: String,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: StreamInput,
    /// Output tree file
    #[arg(long, short, value_name = "FILE")]
    out: PathBuf,
    /// Maximum tree depth (at most 7)
    #[arg(long, default_value_t = MAX_DEPTH)]
    max_depth: usize,
    /// Do not split nodes smaller than twice this
    #[arg(long, default_value_t = 8)]
    min_leaf: usize,
    /// Cold-start samples dropped from the head of each stream
    #[arg(long, default_value_t = WINDOW_LEN)]
    skip_ramp: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Trained tree file
    #[arg(long, value_name = "FILE")]
    tree: PathBuf,
    /// Input sample stream
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Sample file format
    #[arg(long, default_value = "csv", value_parser = ["csv", "bin"])]
    format: String,
    /// Numeric backend
    #[arg(long, default_value = "float")]
    backend: Backend,
    /// AR coefficient: one value or five comma-separated per-class values
    #[arg(long)]
    alpha: Option<String>,
    /// Decision threshold in (0, 1)
    #[arg(long)]
    theta: Option<f64>,
    /// Decision CSV destination (stdout when omitted)
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Also write the per-sample feature CSV here
    #[arg(long, value_name = "FILE")]
    dump_features: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained tree file
    #[arg(long, value_name = "FILE")]
    tree: PathBuf,
    #[command(flatten)]
    input: StreamInput,
    /// Numeric backend (float or fixed)
    #[arg(long, default_value = "float")]
    backend: Backend,
}

#[derive(Args)]
struct BenchArgs {
    /// Trained tree file
    #[arg(long, value_name = "FILE")]
    tree: PathBuf,
    /// Length of the cycled stream in minutes
    #[arg(long, default_value_t = 1.0)]
    minutes: f64,
    /// Number of timed cycles
    #[arg(long, default_value_t = 1000)]
    iterations: u32,
    /// Numeric backend (float or fixed)
    #[arg(long, default_value = "float")]
    backend: Backend,
    /// Stream seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Render a scripted session to sample + label files
    Session(SynthSessionArgs),
    /// Write the standard training/evaluation corpus as stream files
    Corpus(SynthCorpusArgs),
}

#[derive(Args)]
struct SynthSessionArgs {
    /// Segments as `activity:seconds`, comma separated
    /// (e.g. `rest:60,walk:90,run:120`)
    #[arg(long)]
    script: String,
    /// Stream seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sample file format
    #[arg(long, default_value = "csv", value_parser = ["csv", "bin"])]
    format: String,
    /// Sample stream destination
    #[arg(long, value_name = "FILE")]
    samples_out: PathBuf,
    /// Label CSV destination
    #[arg(long, value_name = "FILE")]
    labels_out: PathBuf,
}

#[derive(Args)]
struct SynthCorpusArgs {
    /// Corpus seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Destination directory
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Which corpus halves to write
    #[arg(long, default_value = "both", value_parser = ["train", "eval", "both"])]
    which: String,
    /// Sample file format
    #[arg(long, default_value = "csv", value_parser = ["csv", "bin"])]
    format: String,
}

#[derive(Args)]
struct InspectArgs {
    /// Tree file to inspect
    #[arg(long, value_name = "FILE")]
    tree: PathBuf,
    /// Print every node
    #[arg(long)]
    verbose: bool,
}

/// Errors carrying their exit code: usage = 1, data = 2.
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn data(err: impl std::fmt::Display) -> Self {
        CliError::Data(err.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Synth(args) => cmd_synth(args),
        Command::InspectTree(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// One labeled stream already decoded to samples.
struct LabeledInput {
    name: String,
    samples: Vec<AccelSample>,
    raw: Vec<RawSample>,
    labels: Vec<Option<String>>,
}

fn read_sample_file(path: &Path, format: &str) -> CliResult<(Vec<AccelSample>, Vec<RawSample>)> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    match format {
        "csv" => {
            let samples = read_samples_csv(&mut reader)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok((samples, Vec::new()))
        }
        "bin" => {
            let raw = read_samples_bin(&mut reader)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let samples = raw
                .iter()
                .enumerate()
                .map(|(i, r)| decode_sample(*r, i as u64))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok((samples, raw))
        }
        other => Err(CliError::Usage(format!("unknown format `{other}`"))),
    }
}

fn read_label_file(path: &Path) -> CliResult<Vec<Option<String>>> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let records = read_labels_csv(BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(records.into_iter().map(|r| r.label).collect())
}

/// Collect the labeled streams named by `--corpus-dir` (all
/// `<prefix>*_samples.*` files with a `_labels.csv` sibling, sorted) or
/// the single `--samples`/`--labels` pair.
fn collect_inputs(input: &StreamInput, dir_prefix: &str) -> CliResult<Vec<LabeledInput>> {
    let mut streams = Vec::new();
    if let Some(dir) = &input.corpus_dir {
        let mut sample_files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with(dir_prefix) && n.contains("_samples."))
            })
            .collect();
        sample_files.sort();
        if sample_files.is_empty() {
            return Err(CliError::Data(format!(
                "{}: no `{dir_prefix}*_samples.*` files found",
                dir.display()
            )));
        }
        for sample_path in sample_files {
            let name = sample_path.file_name().unwrap().to_string_lossy().to_string();
            let format = if name.ends_with(".bin") { "bin" } else { "csv" };
            let label_name = name
                .replace("_samples.csv", "_labels.csv")
                .replace("_samples.bin", "_labels.csv");
            let label_path = sample_path.with_file_name(label_name);
            let (samples, raw) = read_sample_file(&sample_path, format)?;
            let labels = read_label_file(&label_path)?;
            streams.push(LabeledInput { name, samples, raw, labels });
        }
    } else if let (Some(samples_path), Some(labels_path)) = (&input.samples, &input.labels) {
        let (samples, raw) = read_sample_file(samples_path, &input.format)?;
        let labels = read_label_file(labels_path)?;
        streams.push(LabeledInput {
            name: samples_path.display().to_string(),
            samples,
            raw,
            labels,
        });
    } else {
        return Err(CliError::Usage(
            "provide --corpus-dir or both --samples and --labels".into(),
        ));
    }
    for s in &streams {
        if s.samples.len() != s.labels.len() {
            return Err(CliError::Data(format!(
                "{}: {} samples but {} labels",
                s.name,
                s.samples.len(),
                s.labels.len()
            )));
        }
    }
    Ok(streams)
}

fn load_tree(path: &Path) -> CliResult<Arc<LikelihoodTree>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let tree =
        deserialize_tree(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(Arc::new(tree))
}

fn parse_config(alpha: &Option<String>, theta: Option<f64>) -> CliResult<ClassifierConfig> {
    let theta = theta.unwrap_or(pact_core::smoother::DEFAULT_THRESHOLD);
    if theta <= 0.0 || theta >= 1.0 {
        return Err(CliError::Usage(format!("theta {theta} outside (0, 1)")));
    }
    let alphas = match alpha {
        None => [pact_core::smoother::DEFAULT_ALPHA; CLASS_COUNT],
        Some(text) => {
            let values: Vec<f64> = text
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("bad --alpha: {e}")))?;
            match values.as_slice() {
                [one] => [*one; CLASS_COUNT],
                [a, b, c, d, e] => [*a, *b, *c, *d, *e],
                _ => {
                    return Err(CliError::Usage(
                        "--alpha takes one value or five comma-separated values".into(),
                    ))
                }
            }
        }
    };
    for a in alphas {
        if !(0.0..1.0).contains(&a) {
            return Err(CliError::Usage(format!("alpha {a} outside [0, 1)")));
        }
    }
    Ok(ClassifierConfig::new(alphas, theta))
}

fn cmd_train(args: TrainArgs) -> CliResult {
    if args.max_depth > MAX_DEPTH {
        return Err(CliError::Usage(format!("--max-depth is capped at {MAX_DEPTH}")));
    }
    let streams = collect_inputs(&args.input, "train")?;
    let mut set = TrainingSet::new();
    for stream in &streams {
        let mut window = SampleWindow::new();
        let mut history = LagHistory::new();
        for (i, (sample, label)) in stream.samples.iter().zip(&stream.labels).enumerate() {
            window.push(sample);
            let features = extract_features(&window, &mut history);
            if i < args.skip_ramp {
                continue;
            }
            if let Some(label) = label {
                let class: ActivityClass = label
                    .parse()
                    .map_err(|e| CliError::Data(format!("{} row {}: {e}", stream.name, i + 1)))?;
                set.push(features, class);
            }
        }
    }
    if set.is_empty() {
        return Err(CliError::Data("no labeled samples after ramp skip".into()));
    }

    let tree = train_tree(&set, args.max_depth, args.min_leaf).map_err(CliError::data)?;
    let bytes = serialize_tree(&tree);
    fs::write(&args.out, &bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;

    let counts = set.class_counts();
    println!(
        "trained on {} samples from {} stream(s): {} nodes, depth {}, {} bytes",
        set.len(),
        streams.len(),
        tree.node_count(),
        tree.depth(),
        bytes.len()
    );
    println!("training accuracy: {:.2}%", 100.0 * training_accuracy(&tree, &set));
    let mut leaves_won = [0usize; CLASS_COUNT];
    for node in tree.nodes() {
        if let TreeNode::Leaf { likelihoods_q } = node {
            let best = (0..CLASS_COUNT).max_by_key(|&i| likelihoods_q[i]).unwrap_or(0);
            leaves_won[best] += 1;
        }
    }
    for class in ActivityClass::ALL {
        println!(
            "  {:<6} {:>7} samples, {} leaf(s)",
            class.name(),
            counts[class.index()],
            leaves_won[class.index()]
        );
    }
    Ok(())
}

fn write_decision_rows<W: Write>(out: &mut W, rows: &[StepOutput]) -> std::io::Result<()> {
    writeln!(out, "sample_index,label,confidence,p_rest,p_walk,p_run,p_bike,p_other")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.sample_index,
            r.decision.label,
            r.decision.confidence,
            r.probs[0],
            r.probs[1],
            r.probs[2],
            r.probs[3],
            r.probs[4]
        )?;
    }
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> CliResult {
    let tree = load_tree(&args.tree)?;
    let config = parse_config(&args.alpha, args.theta)?;
    let (samples, raw) = read_sample_file(&args.input, &args.format)?;

    let mut rows = Vec::with_capacity(samples.len());
    match args.backend {
        Backend::Fixed => {
            let mut fixed = FixedClassifier::new(Arc::clone(&tree), config.clone());
            for r in &to_raw_stream(&samples, &raw) {
                let out = fixed.step(*r).map_err(CliError::data)?;
                rows.push(StepOutput {
                    sample_index: out.sample_index,
                    features: pact_core::features::FeatureVector {
                        power: f64::from(out.features_q[0]) / 65536.0,
                        rhythmicity: f64::from(out.features_q[1]) / 65536.0,
                        freq_stability: f64::from(out.features_q[2]) / 65536.0,
                        dominant_lag: out.dominant_lag,
                    },
                    probs: out.probs_q.map(|q| f64::from(q) / 32768.0),
                    decision: out.decision,
                });
            }
        }
        Backend::Float | Backend::Dual => {
            let mut classifier = Classifier::new(Arc::clone(&tree), config.clone());
            for s in &samples {
                rows.push(classifier.step_decoded(s).map_err(CliError::data)?);
            }
        }
    }

    match &args.output {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            write_decision_rows(&mut BufWriter::new(file), &rows).map_err(CliError::data)?;
        }
        None => {
            let stdout = std::io::stdout();
            write_decision_rows(&mut stdout.lock(), &rows).map_err(CliError::data)?;
        }
    }

    if let Some(path) = &args.dump_features {
        let file =
            File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "sample_index,power,rhythmicity,freq_stability,dominant_lag")
            .map_err(CliError::data)?;
        for r in &rows {
            let lag = r.features.dominant_lag.map(|l| l.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                r.sample_index,
                r.features.power,
                r.features.rhythmicity,
                r.features.freq_stability,
                lag
            )
            .map_err(CliError::data)?;
        }
    }

    if args.backend == Backend::Dual {
        let report =
            run_dual(&tree, &config, &to_raw_stream(&samples, &raw)).map_err(CliError::data)?;
        println!("{}", report.to_json_line());
    }
    Ok(())
}

/// Raw words for the integer backend; CSV inputs are re-quantized to the
/// 12-bit lattice (exact when the file came from the generator).
fn to_raw_stream(samples: &[AccelSample], raw: &[RawSample]) -> Vec<RawSample> {
    if !raw.is_empty() {
        return raw.to_vec();
    }
    samples
        .iter()
        .map(|s| {
            let q = |g: f64| ((g * 256.0).round() as i64).clamp(-2048, 2047) as i16;
            RawSample::new(q(s.ax), q(s.ay), q(s.az))
        })
        .collect()
}

fn cmd_eval(args: EvalArgs) -> CliResult {
    if args.backend == Backend::Dual {
        return Err(CliError::Usage("eval takes --backend float or fixed".into()));
    }
    let tree = load_tree(&args.tree)?;
    let streams = collect_inputs(&args.input, "eval")?;
    let mut matrix = ConfusionMatrix::new();
    for stream in &streams {
        match args.backend {
            Backend::Fixed => {
                let mut classifier =
                    FixedClassifier::new(Arc::clone(&tree), ClassifierConfig::default());
                for (r, label) in to_raw_stream(&stream.samples, &stream.raw).iter().zip(&stream.labels) {
                    let out = classifier.step(*r).map_err(CliError::data)?;
                    if let Some(label) = label {
                        matrix.record(label, out.decision.label);
                    }
                }
            }
            _ => {
                let mut classifier = Classifier::new(Arc::clone(&tree), ClassifierConfig::default());
                for (s, label) in stream.samples.iter().zip(&stream.labels) {
                    let out = classifier.step_decoded(s).map_err(CliError::data)?;
                    if let Some(label) = label {
                        matrix.record(label, out.decision.label);
                    }
                }
            }
        }
    }
    print!("{matrix}");
    println!();
    for class in ActivityClass::ALL {
        if let Some(acc) = matrix.accuracy(class) {
            println!("{:<6} accuracy: {:.2}%", class.name(), 100.0 * acc);
        }
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    if args.backend == Backend::Dual {
        return Err(CliError::Usage("bench takes --backend float or fixed".into()));
    }
    if args.minutes <= 0.0 || args.iterations == 0 {
        return Err(CliError::Usage("--minutes and --iterations must be positive".into()));
    }
    let tree = load_tree(&args.tree)?;
    let report = run_bench(
        &tree,
        &ClassifierConfig::default(),
        args.backend,
        args.minutes,
        args.iterations,
        args.seed,
    )
    .map_err(CliError::data)?;
    println!(
        "{} backend: {} cycles x {} samples",
        report.backend, report.cycles, report.samples_per_cycle
    );
    println!(
        "per-sample step: mean {:.0} ns, median {:.0} ns, p99 {:.0} ns ({:.0} samples/s)",
        report.mean_ns, report.median_ns, report.p99_ns, report.samples_per_sec
    );
    println!(
        "serialized state {} bytes, tree file {} bytes",
        report.state_bytes, report.tree_bytes
    );
    println!("{}", report.to_json_line());
    Ok(())
}

fn parse_script(text: &str, seed: u64) -> CliResult<SessionScript> {
    let mut script = SessionScript::new(seed);
    for part in text.split(',') {
        let (name, seconds) = part.split_once(':').ok_or_else(|| {
            CliError::Usage(format!("bad segment `{part}`, expected `activity:seconds`"))
        })?;
        let class: ActivityClass = name.parse().map_err(CliError::Usage)?;
        let seconds: f64 = seconds
            .trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("bad duration in `{part}`: {e}")))?;
        if seconds <= 0.0 {
            return Err(CliError::Usage(format!("non-positive duration in `{part}`")));
        }
        script.push(ActivityProfile::default_for(class), seconds);
    }
    Ok(script)
}

fn write_stream_files(
    stream: &pact_core::synth::LabeledStream,
    samples_path: &Path,
    labels_path: &Path,
    format: &str,
) -> CliResult {
    let file = File::create(samples_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", samples_path.display())))?;
    let mut out = BufWriter::new(file);
    match format {
        "bin" => write_samples_bin(&mut out, &stream.samples).map_err(CliError::data)?,
        _ => {
            let decoded: Vec<AccelSample> = stream
                .samples
                .iter()
                .enumerate()
                .map(|(i, r)| decode_sample(*r, i as u64).expect("generated samples are in range"))
                .collect();
            write_samples_csv(&mut out, &decoded).map_err(CliError::data)?;
        }
    }
    let records: Vec<LabelRecord> = stream
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| LabelRecord { sample_index: i as u64, label: Some(l.name().to_string()) })
        .collect();
    let file = File::create(labels_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", labels_path.display())))?;
    write_labels_csv(&mut BufWriter::new(file), &records).map_err(CliError::data)?;
    Ok(())
}

fn cmd_synth(command: SynthCommand) -> CliResult {
    match command {
        SynthCommand::Session(args) => {
            let script = parse_script(&args.script, args.seed)?;
            let stream = gen_session(&script);
            write_stream_files(&stream, &args.samples_out, &args.labels_out, &args.format)?;
            println!(
                "wrote {} samples ({:.1} s at {} Hz) to {}",
                stream.samples.len(),
                stream.samples.len() as f64 / f64::from(SAMPLE_RATE_HZ),
                SAMPLE_RATE_HZ,
                args.samples_out.display()
            );
            Ok(())
        }
        SynthCommand::Corpus(args) => {
            fs::create_dir_all(&args.out_dir)
                .map_err(|e| CliError::Data(format!("{}: {e}", args.out_dir.display())))?;
            let corpus = default_corpus(args.seed);
            let ext = if args.format == "bin" { "bin" } else { "csv" };
            let mut written = 0usize;
            if args.which != "eval" {
                for (i, stream) in corpus.training_streams.iter().enumerate() {
                    let samples = args.out_dir.join(format!("train_{i:02}_samples.{ext}"));
                    let labels = args.out_dir.join(format!("train_{i:02}_labels.csv"));
                    write_stream_files(stream, &samples, &labels, &args.format)?;
                    written += 1;
                }
            }
            if args.which != "train" {
                for (i, stream) in corpus.held_out.iter().enumerate() {
                    let samples = args.out_dir.join(format!("eval_{i:02}_samples.{ext}"));
                    let labels = args.out_dir.join(format!("eval_{i:02}_labels.csv"));
                    write_stream_files(stream, &samples, &labels, &args.format)?;
                    written += 1;
                }
            }
            println!("wrote {written} stream pair(s) to {}", args.out_dir.display());
            Ok(())
        }
    }
}

fn cmd_inspect(args: InspectArgs) -> CliResult {
    let bytes = fs::read(&args.tree)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.tree.display())))?;
    let tree = deserialize_tree(&bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.tree.display())))?;
    println!("{}: {} bytes, checksum ok", args.tree.display(), bytes.len());
    println!(
        "nodes {} ({} leaves), root {}, depth {}",
        tree.node_count(),
        tree.leaf_count(),
        tree.root(),
        tree.depth()
    );
    if args.verbose {
        for (i, node) in tree.nodes().iter().enumerate() {
            match node {
                TreeNode::Internal { feature, threshold_q, left, right, .. } => {
                    println!(
                        "  [{i:>3}] {} < {:.6} ? -> {left} : {right}",
                        feature.name(),
                        f64::from(*threshold_q) / 65536.0
                    );
                }
                TreeNode::Leaf { likelihoods_q } => {
                    let probs: Vec<String> = ActivityClass::ALL
                        .iter()
                        .map(|c| {
                            format!("{} {:.3}", c.name(), f64::from(likelihoods_q[c.index()]) / 32768.0)
                        })
                        .collect();
                    println!("  [{i:>3}] leaf: {}", probs.join(", "));
                }
            }
        }
    }
    Ok(())
}
