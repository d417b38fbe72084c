//! `partfilter` command-line interface.
//!
//! Exit codes: 0 success, 1 invalid input or failed computation, 2 a check
//! that ended undecided.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use partfilter::entropy::{entropy_bracket, entropy_profile, entropy_rate_mc};
use partfilter::filter::{evolve, simulate_filter, DEFAULT_MERGE_EPS, DEFAULT_PRUNE};
use partfilter::gallery::{
    birkhoff_decompose, birkhoff_partition, kesten_model, kesten_perm_spec, perm_family_model, random_walk_model,
    PermFamilySpec, RandomWalkParams,
};
use partfilter::io::{self, fmt_f64, ModelFile};
use partfilter::kantorovich::kantorovich_distance;
use partfilter::model::{FilterModel, Partition, ProbVector, Provenance, TransitionMatrix};
use partfilter::stability::{
    condition_a_verdict, condition_b1_detect, default_col_bound, localizing_verdict, theorem11_verdict,
    theorem93_verdict, B1Policy, StabilityVerdict, DEFAULT_BUDGET, DEFAULT_MAX_POWER, DEFAULT_TOL,
};
use serde::Deserialize;

/// Environment variable holding the default worker thread count.
const THREADS_ENV: &str = "PARTFILTER_THREADS";

#[derive(Parser, Debug)]
#[command(name = "partfilter", version, about = "Filtering processes of partitioned Markov chains")]
struct Cli {
    /// Worker threads; defaults to $PARTFILTER_THREADS, then to the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a filter trajectory and write it as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        start: StartArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the n-step distribution of the filter from a point as a measure file.
    Evolve {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        start: StartArg,
        #[arg(long, default_value_t = DEFAULT_PRUNE)]
        prune: f64,
        #[arg(long, default_value_t = DEFAULT_MERGE_EPS)]
        merge_eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kantorovich distance between two measure files.
    Distance {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// Also write the optimal coupling as JSON.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Run a stability or non-stability check and print a JSON verdict.
    Check(CheckArgs),
    /// Write one of the built-in example models.
    Gallery {
        #[arg(value_enum)]
        which: GalleryKind,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Path entropies, increments and entropy-rate brackets as CSV.
    Entropy {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = DEFAULT_PRUNE)]
        prune: f64,
        #[arg(long)]
        bracket: bool,
        /// Monte Carlo estimate, e.g. `--mc samples=10000 burn=100 seed=1`.
        #[arg(long, num_args = 1..)]
        mc: Option<Vec<String>>,
    },
}

#[derive(Args, Debug)]
struct ModelArg {
    #[arg(long = "model")]
    path: PathBuf,
}

#[derive(Args, Debug)]
struct StartArg {
    /// Start vector as comma-separated coordinates; defaults to the stationary vector.
    #[arg(long, value_delimiter = ',')]
    start: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, value_enum)]
    condition: Condition,
    #[arg(long, default_value_t = 8)]
    max_word_len: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// 1-based states spanning the face for `thm11`.
    #[arg(long, value_delimiter = ',')]
    subset: Option<Vec<usize>>,
    /// Column bound for localization; defaults to a quarter of the states.
    #[arg(long)]
    col_bound: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, value_enum, default_value_t = PolicyKind::Auto)]
    policy: PolicyKind,
    /// Labels of the word for `--policy fixed`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    word: Option<Vec<String>>,
    #[arg(long, default_value_t = DEFAULT_MAX_POWER)]
    max_power: usize,
    /// Word depth for `thm11`.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Sampled pairs for `thm11`.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Condition {
    A,
    B1,
    Localizing,
    Thm93,
    Thm11,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum PolicyKind {
    Auto,
    Exhaustive,
    Repeated,
    Greedy,
    Fixed,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GalleryKind {
    Kesten,
    RandomWalk,
    PermFamily,
    Birkhoff,
}

type CliResult<T> = Result<T, String>;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn load_model(arg: &ModelArg) -> CliResult<ModelFile> {
    io::read_model(&arg.path).map_err(fail)
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(format!("cannot write to stdout: {e}")),
        _ => Ok(()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => io::write_text(p, text).map_err(fail),
        None => stdout(text),
    }
}

fn start_vector(start: &StartArg, file: &ModelFile) -> CliResult<ProbVector> {
    match &start.start {
        Some(x) => io::exact_prob(x).map_err(fail),
        None => Ok(file.to_model().map_err(fail)?.stationary().clone()),
    }
}

fn verdict_exit(v: &StabilityVerdict) -> CliResult<u8> {
    stdout(&io::to_json(v).map_err(fail)?)?;
    Ok(if v.is_undecided() { 2 } else { 0 })
}

fn check(args: &CheckArgs) -> CliResult<u8> {
    let file = load_model(&args.model)?;
    let m = file.to_partition().map_err(fail)?;
    let col_bound = args.col_bound.unwrap_or_else(|| default_col_bound(m.num_states()));
    let verdict = match args.condition {
        Condition::A => condition_a_verdict(&m, args.max_word_len, args.budget),
        Condition::Localizing => localizing_verdict(&m, args.max_word_len, col_bound, args.budget),
        Condition::Thm93 => theorem93_verdict(&m, args.max_word_len, col_bound, args.tol, args.budget),
        Condition::B1 => {
            let policy = b1_policy(args, &m)?;
            condition_b1_detect(&m, &policy, args.tol, args.budget)
        }
        Condition::Thm11 => {
            let subset = args.subset.as_ref().ok_or("thm11 needs --subset")?;
            if subset.contains(&0) {
                return Err("--subset is 1-based".into());
            }
            let zero_based: Vec<usize> = subset.iter().map(|i| i - 1).collect();
            theorem11_verdict(&m, &zero_based, args.depth, args.samples, args.seed).map_err(fail)?
        }
    };
    verdict_exit(&verdict)
}

fn b1_policy(args: &CheckArgs, m: &Partition) -> CliResult<B1Policy> {
    let len = args.max_word_len;
    Ok(match args.policy {
        PolicyKind::Auto => B1Policy::Auto { max_len: len, max_power: args.max_power },
        PolicyKind::Exhaustive => B1Policy::Exhaustive { max_len: len },
        PolicyKind::Repeated => B1Policy::RepeatedWord { base_len: len.min(4), max_power: args.max_power },
        PolicyKind::Greedy => B1Policy::Greedy { max_len: len },
        PolicyKind::Fixed => {
            let word = args.word.as_ref().ok_or("--policy fixed needs --word")?;
            B1Policy::Fixed { word: m.word_indices(word).map_err(fail)?, max_power: args.max_power }
        }
    })
}

/// Parameters of the random-walk generator: either explicit coefficients or a named case.
#[derive(Deserialize)]
#[serde(untagged)]
enum RandomWalkFile {
    Case {
        case: String,
        n: usize,
        #[serde(default)]
        i0: Option<usize>,
    },
    Explicit(RandomWalkParams),
}

/// A base model with block size `d` and one permutation per positive
/// `(i, k, w)` entry, given as `[i, k, w, [q_0, …, q_{d−1}]]`.
#[derive(Deserialize)]
struct PermFamilyFile {
    model: ModelFile,
    d: usize,
    perms: Vec<(usize, usize, usize, Vec<usize>)>,
}

#[derive(Deserialize)]
struct BirkhoffFile {
    matrix: Vec<Vec<f64>>,
    #[serde(default = "default_birkhoff_tol")]
    tol: f64,
}

fn default_birkhoff_tol() -> f64 {
    1e-12
}

fn read_params<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    io::from_json(&text).map_err(fail)
}

fn gallery(which: GalleryKind, params: Option<&Path>) -> CliResult<FilterModel> {
    match which {
        GalleryKind::Kesten => Ok(kesten_model()),
        GalleryKind::RandomWalk => {
            let p = match params {
                None => RandomWalkParams::case_a(64),
                Some(path) => match read_params::<RandomWalkFile>(path)? {
                    RandomWalkFile::Explicit(p) => p,
                    RandomWalkFile::Case { case, n, i0 } => match case.as_str() {
                        "a" => RandomWalkParams::case_a(n),
                        "b" => {
                            let i0 = i0.unwrap_or(3);
                            if i0 == 0 || i0 % 2 == 0 || i0 + 1 >= n {
                                return Err(format!("case b needs an odd interior i0, got {i0}"));
                            }
                            RandomWalkParams::case_b(n, i0)
                        }
                        other => return Err(format!("unknown random-walk case {other:?}; expected \"a\" or \"b\"")),
                    },
                },
            };
            random_walk_model(&p).map_err(fail)
        }
        GalleryKind::PermFamily => {
            let spec = match params {
                None => kesten_perm_spec(),
                Some(path) => {
                    let f: PermFamilyFile = read_params(path)?;
                    PermFamilySpec {
                        partition: f.model.to_partition().map_err(fail)?,
                        d: f.d,
                        perms: f.perms.into_iter().map(|(i, k, w, q)| ((i, k, w), q)).collect(),
                    }
                }
            };
            perm_family_model(&spec).map_err(fail)
        }
        GalleryKind::Birkhoff => {
            let path = params.ok_or("birkhoff needs --params with a doubly stochastic matrix")?;
            let f: BirkhoffFile = read_params(path)?;
            let d = TransitionMatrix::from_dense(&f.matrix).map_err(fail)?;
            let terms = birkhoff_decompose(&d, f.tol).map_err(fail)?;
            let partition = birkhoff_partition(&terms).map_err(fail)?;
            FilterModel::new(partition, Provenance::new("birkhoff").with_param("terms", terms.len())).map_err(fail)
        }
    }
}

struct McSpec {
    samples: usize,
    burn: usize,
    seed: u64,
}

fn parse_mc(items: &[String]) -> CliResult<McSpec> {
    let mut spec = McSpec { samples: 10_000, burn: 100, seed: 0 };
    for item in items {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("--mc expects key=value, got {item:?}"))?;
        let bad = |e: std::num::ParseIntError| format!("--mc {k}: {e}");
        match k {
            "samples" => spec.samples = v.parse().map_err(bad)?,
            "burn" => spec.burn = v.parse().map_err(bad)?,
            "seed" => spec.seed = v.parse().map_err(bad)?,
            _ => return Err(format!("--mc: unknown key {k:?}; expected samples, burn or seed")),
        }
    }
    Ok(spec)
}

fn entropy_csv(file: &ModelFile, horizon: usize, prune: f64, bracket: bool, mc: Option<&[String]>) -> CliResult<String> {
    if horizon == 0 {
        return Err("--horizon must be at least 1".into());
    }
    let model = file.to_model().map_err(fail)?;
    let profile = entropy_profile(model.stationary(), model.partition(), horizon + 1, prune).map_err(fail)?;
    let br = if bracket {
        entropy_bracket(&model, horizon, prune).map_err(fail)?.bracket
    } else {
        None
    };
    let mut out = String::from("n,H_n,H_R_n,L_n,U_n,pruned_mass\n");
    for n in 1..=horizon {
        let (hn, next) = (profile[n - 1], profile[n]);
        let (l, u) = match &br {
            Some(b) => (fmt_f64(b.lower[n - 1]), fmt_f64(b.upper[n - 1])),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{n},{},{},{l},{u},{}", fmt_f64(hn.value), fmt_f64(next.value - hn.value), fmt_f64(hn.pruned_mass));
    }
    if let Some(items) = mc {
        let spec = parse_mc(items)?;
        let e = entropy_rate_mc(&model, spec.burn, spec.samples, spec.seed).map_err(fail)?;
        let _ = writeln!(
            out,
            "# mc estimate={} stderr={} samples={} burn={} seed={} stable={}",
            fmt_f64(e.estimate),
            fmt_f64(e.stderr),
            e.samples,
            spec.burn,
            spec.seed,
            e.stable
        );
    }
    Ok(out)
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Simulate { model, steps, seed, start, out } => {
            let file = load_model(&model)?;
            let m = file.to_partition().map_err(fail)?;
            let x0 = start_vector(&start, &file)?;
            let trace = simulate_filter(&x0, &m, steps, seed).map_err(fail)?;
            emit(out.as_deref(), &io::trace_csv(&trace, m.labels()))?;
        }
        Command::Evolve { model, steps, start, prune, merge_eps, out } => {
            let file = load_model(&model)?;
            let m = file.to_partition().map_err(fail)?;
            let x0 = start_vector(&start, &file)?;
            let ev = evolve(&x0, &m, steps, prune, merge_eps).map_err(fail)?;
            let text = io::to_json(&io::MeasureFile::from_measure(&ev.measure, Some(ev.pruned_mass))).map_err(fail)?;
            emit(out.as_deref(), &text)?;
        }
        Command::Distance { mu, nu, plan } => {
            let mu = io::read_measure(&mu).map_err(fail)?;
            let nu = io::read_measure(&nu).map_err(fail)?;
            let (d, coupling) = kantorovich_distance(&mu, &nu).map_err(fail)?;
            stdout(&format!("{d:.11e}\n"))?;
            if let Some(p) = plan {
                io::write_text(&p, &io::to_json(&coupling).map_err(fail)?).map_err(fail)?;
            }
        }
        Command::Check(args) => return check(&args),
        Command::Gallery { which, params, out } => {
            let model = gallery(which, params.as_deref())?;
            io::write_model(&out, &ModelFile::from_model(&model)).map_err(fail)?;
        }
        Command::Entropy { model, horizon, prune, bracket, mc } => {
            let file = load_model(&model)?;
            stdout(&entropy_csv(&file, horizon, prune, bracket, mc.as_deref())?)?;
        }
    }
    Ok(0)
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.parse::<usize>().map_err(|e| format!("{THREADS_ENV}={v:?}: {e}"))?),
        Err(_) => None,
    };
    if let Some(n) = flag.or(from_env) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(fail)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads(cli.threads).and_then(|()| run(cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
