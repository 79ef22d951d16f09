//! The `proofsmith` command line.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error, 3 oracle
//! unavailable. Every run writes `<primary output>.manifest.json`.
//!
//! Settings resolve as built-in defaults, then `--config <toml>`, then flags:
//!
//! ```toml
//! oracle = "mock"            # or "remote"
//! oracle_url = "http://127.0.0.1:8800"
//! seed = 0
//! jobs = 1
//!
//! [search]                   # n, max_depth, top_proofs, gen_modes, fact_top_k,
//! n = 10                     # close_threshold, beam, cluster_threshold
//!
//! [score]
//! mode = "plain"             # or "fact_concat"
//!
//! [perturb]
//! ratio = 0.5
//!
//! [augment]
//! modes = ["entail", "contradict", "neutral", "monotonic"]
//! per_premise = 1
//! shares = "equal"           # or "pooled"
//! ```

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::{self, AugmentShares, AUGMENT_MODES};
use crate::error::{Error, Result};
use crate::kb::{self, KbIndex};
use crate::metrics::{self, ProofMetrics, ScoreMode};
use crate::oracle::{GenerationMode, Lexicon, MockOracle, NliLabel, Oracle, RemoteOracle, ORACLE_URL_ENV};
use crate::search::{self, Proof, SearchConfig, SearchMethod};
use crate::text::Sentence;

#[derive(Parser, Debug)]
#[command(name = "proofsmith", version, about = "Entailment proof search and proof verification metrics")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    oracle: Option<OracleKind>,
    /// Sidecar base URL (also read from PROOFSMITH_ORACLE_URL).
    #[arg(long, global = true)]
    oracle_url: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pairs processed in parallel.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OracleKind {
    Mock,
    Remote,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Level,
    Beam,
    Facts,
    None,
}

impl From<MethodArg> for SearchMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Level => SearchMethod::Level,
            MethodArg::Beam => SearchMethod::Beam,
            MethodArg::Facts => SearchMethod::Facts,
            MethodArg::None => SearchMethod::Unguided,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Plain,
    FactConcat,
}

#[derive(Args, Debug, Default)]
struct SearchArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    top_proofs: Option<usize>,
    #[arg(long)]
    fact_top_k: Option<usize>,
    #[arg(long)]
    close_threshold: Option<f64>,
    #[arg(long)]
    beam: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search proofs for every pair of a TSV file.
    Prove {
        #[arg(long, value_enum)]
        method: MethodArg,
        /// `id<TAB>premise<TAB>hypothesis<TAB>label` per line.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Knowledge-base files (required by `--method facts`).
        #[arg(long, num_args = 1..)]
        kb: Vec<PathBuf>,
        #[arg(long)]
        kb_cache: Option<PathBuf>,
        /// Per-pair fact decisions as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Fail instead of falling back to beam search when every fact is discarded.
        #[arg(long)]
        no_fallback: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Retrieve KB facts for every pair.
    Retrieve {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        kb: Vec<PathBuf>,
        #[arg(long)]
        kb_cache: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score proofs and write an aggregate report.
    Score {
        #[arg(long)]
        proofs: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Per-proof metrics as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Row label in the report.
        #[arg(long, default_value = "Proofs")]
        name: String,
    },
    /// Replace a share of the words of every inferred step.
    Perturb {
        #[arg(long)]
        proofs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Replace every inferred step by its contradiction.
    Negate {
        #[arg(long)]
        proofs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        beam: Option<usize>,
    },
    /// Generate labelled pairs and optionally export a mixed dataset.
    Augment {
        /// `premise`, `id<TAB>premise`, or a 4-column pairs file.
        #[arg(long)]
        premises: PathBuf,
        /// Generated examples as JSON lines.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        modes: Vec<GenerationMode>,
        #[arg(long)]
        per_premise: Option<usize>,
        /// Base pair file to mix with (`premise<TAB>hypothesis<TAB>label`).
        #[arg(long, requires = "dataset")]
        base: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        base_fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        augment_fraction: f64,
        #[arg(long)]
        shares: Option<AugmentShares>,
        /// Exported TSV dataset.
        #[arg(long, requires = "base")]
        dataset: Option<PathBuf>,
    },
    /// Render per-proof metrics files as one table.
    Report {
        /// Metrics JSON-lines files, one table row each.
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        /// Row labels, in order; defaults to the file stems.
        #[arg(long = "name")]
        names: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a knowledge base into an index cache.
    KbBuild {
        #[arg(long, num_args = 1.., required = true)]
        kb: Vec<PathBuf>,
        #[arg(long)]
        cache: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prove { .. } => "prove",
            Command::Retrieve { .. } => "retrieve",
            Command::Score { .. } => "score",
            Command::Perturb { .. } => "perturb",
            Command::Negate { .. } => "negate",
            Command::Augment { .. } => "augment",
            Command::Report { .. } => "report",
            Command::KbBuild { .. } => "kb-build",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScoreSettings {
    mode: ScoreMode,
}

impl Default for ScoreSettings {
    fn default() -> Self {
        ScoreSettings { mode: ScoreMode::Plain }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PerturbSettings {
    ratio: f64,
}

impl Default for PerturbSettings {
    fn default() -> Self {
        PerturbSettings { ratio: 0.5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AugmentSettings {
    modes: Vec<GenerationMode>,
    per_premise: usize,
    shares: AugmentShares,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            modes: AUGMENT_MODES.to_vec(),
            per_premise: 1,
            shares: AugmentShares::Equal,
        }
    }
}

/// Effective settings, echoed into every manifest.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Settings {
    oracle: OracleKind,
    oracle_url: Option<String>,
    seed: u64,
    jobs: usize,
    search: SearchConfig,
    score: ScoreSettings,
    perturb: PerturbSettings,
    augment: AugmentSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            oracle: OracleKind::Mock,
            oracle_url: None,
            seed: 0,
            jobs: 1,
            search: SearchConfig::default(),
            score: ScoreSettings::default(),
            perturb: PerturbSettings::default(),
            augment: AugmentSettings::default(),
        }
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    argv: Vec<String>,
    config: Settings,
    input_digests: BTreeMap<String, String>,
    oracle_backend: Option<String>,
    seed: u64,
    started_unix: u64,
    elapsed_ms: u128,
    outputs: Vec<String>,
}

/// Failures split by exit code.
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::OracleUnavailable(_) => 3,
        _ => 1,
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, argv) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Run {
    settings: Settings,
    argv: Vec<String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    backend: Option<String>,
    started: SystemTime,
    clock: Instant,
}

impl Run {
    fn oracle(&mut self) -> CliResult<Box<dyn Oracle>> {
        let oracle: Box<dyn Oracle> = match self.settings.oracle {
            OracleKind::Mock => Box::new(MockOracle::default()),
            OracleKind::Remote => {
                let url = self
                    .settings
                    .oracle_url
                    .clone()
                    .or_else(|| std::env::var(ORACLE_URL_ENV).ok())
                    .ok_or_else(|| usage(format!("--oracle remote needs --oracle-url or {ORACLE_URL_ENV}")))?;
                self.settings.oracle_url = Some(url.clone());
                Box::new(RemoteOracle::new(&url).map_err(|e| usage(e.to_string()))?)
            }
        };
        self.backend = Some(oracle.backend_id());
        Ok(oracle)
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.settings.jobs)
            .build()
            .map_err(|e| usage(format!("cannot start {} workers: {e}", self.settings.jobs)))
    }

    fn finish(self, command: &str) -> CliResult<()> {
        let mut input_digests = BTreeMap::new();
        for p in &self.inputs {
            let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
            input_digests.insert(p.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        }
        let primary = self.outputs.first().expect("every command has an output");
        let manifest_path = PathBuf::from(format!("{}.manifest.json", primary.display()));
        let manifest = RunManifest {
            command: command.to_string(),
            argv: self.argv,
            seed: self.settings.seed,
            config: self.settings,
            input_digests,
            oracle_backend: self.backend,
            started_unix: self.started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            elapsed_ms: self.clock.elapsed().as_millis(),
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
        fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;
        Ok(())
    }
}

fn load_settings(g: &GlobalArgs) -> CliResult<Settings> {
    let mut s = match &g.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => Settings::default(),
    };
    if let Some(o) = g.oracle {
        s.oracle = o;
    }
    if let Some(u) = &g.oracle_url {
        s.oracle_url = Some(u.clone());
    }
    if let Some(seed) = g.seed {
        s.seed = seed;
    }
    if let Some(j) = g.jobs {
        s.jobs = j;
    }
    if s.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    Ok(s)
}

fn apply_search(cfg: &mut SearchConfig, a: &SearchArgs) -> CliResult<()> {
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { cfg.$f = v; } )* };
    }
    set!(n, max_depth, top_proofs, fact_top_k, close_threshold, beam);
    cfg.validate().map_err(|e| usage(e.to_string()))
}

/// One line of a prove/retrieve input file.
#[derive(Clone, Debug)]
pub struct Task {
    pub id: String,
    pub premise: Sentence,
    pub hypothesis: Sentence,
    pub label: NliLabel,
}

/// Reads `id<TAB>premise<TAB>hypothesis<TAB>label` lines.
pub fn read_tasks(path: &Path) -> Result<Vec<Task>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 tab-separated fields, found {}", f.len())));
        }
        out.push(Task {
            id: f[0].to_string(),
            premise: Sentence::new(f[1]).map_err(|e| err(e.to_string()))?,
            hypothesis: Sentence::new(f[2]).map_err(|e| err(e.to_string()))?,
            label: f[3].trim().parse().map_err(|e: Error| err(e.to_string()))?,
        });
    }
    Ok(out)
}

fn read_premises(path: &Path) -> Result<Vec<(String, Sentence)>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let (id, text) = match f.len() {
            1 => ((i + 1).to_string(), f[0]),
            2 | 4 => (f[0].to_string(), f[1]),
            n => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected 1, 2 or 4 fields, found {n}"),
                })
            }
        };
        let s = Sentence::new(text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push((id, s));
    }
    Ok(out)
}

fn write_json_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for it in items {
        writeln!(w, "{}", serde_json::to_string(it)?).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_json_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

fn load_index(run: &mut Run, kb_files: &[PathBuf], cache: Option<&Path>, oracle: &dyn Oracle) -> Result<KbIndex> {
    for f in kb_files {
        run.input(f);
    }
    match cache {
        Some(c) => kb::build_index_cached(kb_files, oracle, c),
        None => kb::build_index(kb_files, oracle),
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> CliResult<i32> {
    let settings = load_settings(&cli.global)?;
    let command = cli.command.name();
    let mut run = Run {
        settings,
        argv,
        inputs: Vec::new(),
        outputs: Vec::new(),
        backend: None,
        started: SystemTime::now(),
        clock: Instant::now(),
    };
    if let Some(c) = &cli.global.config {
        run.input(c);
    }
    let code = match cli.command {
        Command::Prove {
            method,
            pairs,
            out,
            kb,
            kb_cache,
            trace,
            no_fallback,
            search,
        } => cmd_prove(&mut run, method.into(), &pairs, &out, &kb, kb_cache.as_deref(), trace.as_deref(), no_fallback, &search)?,
        Command::Retrieve {
            pairs,
            kb,
            kb_cache,
            k,
            out,
        } => cmd_retrieve(&mut run, &pairs, &kb, kb_cache.as_deref(), k, &out)?,
        Command::Score {
            proofs,
            mode,
            out,
            report,
            name,
        } => cmd_score(&mut run, &proofs, mode, out.as_deref(), &report, &name)?,
        Command::Perturb { proofs, out, ratio } => cmd_perturb(&mut run, &proofs, &out, ratio)?,
        Command::Negate { proofs, out, beam } => cmd_negate(&mut run, &proofs, &out, beam)?,
        Command::Augment {
            premises,
            out,
            modes,
            per_premise,
            base,
            base_fraction,
            augment_fraction,
            shares,
            dataset,
        } => cmd_augment(
            &mut run,
            &premises,
            &out,
            modes,
            per_premise,
            base.as_deref().zip(dataset.as_deref()),
            base_fraction,
            augment_fraction,
            shares,
        )?,
        Command::Report { metrics, names, out } => cmd_report(&mut run, &metrics, &names, &out)?,
        Command::KbBuild { kb, cache } => {
            let oracle = run.oracle()?;
            let index = load_index(&mut run, &kb, Some(&cache), oracle.as_ref())?;
            println!("indexed {} facts (dim {}) into {}", index.len(), index.dim(), cache.display());
            run.output(&cache);
            0
        }
    };
    run.finish(command)?;
    Ok(code)
}

#[allow(clippy::too_many_arguments)]
fn cmd_prove(
    run: &mut Run,
    method: SearchMethod,
    pairs: &Path,
    out: &Path,
    kb_files: &[PathBuf],
    kb_cache: Option<&Path>,
    trace_out: Option<&Path>,
    no_fallback: bool,
    args: &SearchArgs,
) -> CliResult<i32> {
    apply_search(&mut run.settings.search, args)?;
    if method == SearchMethod::Facts && kb_files.is_empty() {
        return Err(usage("--method facts needs --kb"));
    }
    run.input(pairs);
    let tasks = read_tasks(pairs)?;
    let oracle = run.oracle()?;
    let oracle = oracle.as_ref();
    let cfg = run.settings.search.clone();
    let index = if method == SearchMethod::Facts {
        Some(load_index(run, kb_files, kb_cache, oracle)?)
    } else {
        None
    };

    let results: Vec<Result<(Vec<Proof>, Option<search::FactTrace>)>> = run.pool()?.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let (mut proofs, trace) = match &index {
                    Some(idx) => {
                        let (p, tr) = search::fact_proof_search(&t.premise, &t.hypothesis, t.label, idx, &cfg, oracle)?;
                        if no_fallback && tr.fell_back {
                            return Err(Error::NoUsableFacts(format!("pair {}: every fact was discarded", t.id)));
                        }
                        (vec![p], Some(tr))
                    }
                    None => (
                        search::unconstrained_search(method, &t.premise, &t.hypothesis, t.label, &cfg, oracle, oracle)?,
                        None,
                    ),
                };
                for p in &mut proofs {
                    p.pair_id = Some(t.id.clone());
                }
                Ok((proofs, trace))
            })
            .collect()
    });
    let mut proofs = Vec::new();
    let mut traces = Vec::new();
    for (task, r) in tasks.iter().zip(results) {
        let (ps, tr) = r?;
        proofs.extend(ps);
        if let Some(tr) = tr {
            traces.push(serde_json::json!({ "pair_id": task.id, "trace": tr }));
        }
    }
    search::write_records(out, &proofs)?;
    run.output(out);
    if let Some(t) = trace_out {
        write_json_lines(t, &traces)?;
        run.output(t);
    }
    eprintln!("{} proofs for {} pairs -> {}", proofs.len(), tasks.len(), out.display());
    Ok(0)
}

fn cmd_retrieve(
    run: &mut Run,
    pairs: &Path,
    kb_files: &[PathBuf],
    kb_cache: Option<&Path>,
    k: Option<usize>,
    out: &Path,
) -> CliResult<i32> {
    if let Some(k) = k {
        run.settings.search.fact_top_k = k;
    }
    apply_search(&mut run.settings.search, &SearchArgs::default())?;
    run.input(pairs);
    let tasks = read_tasks(pairs)?;
    let oracle = run.oracle()?;
    let oracle = oracle.as_ref();
    let index = load_index(run, kb_files, kb_cache, oracle)?;
    let cfg = &run.settings.search;
    let mut rows = Vec::new();
    for t in &tasks {
        let queries = kb::pair_queries(&t.premise, &t.hypothesis, oracle, oracle, cfg.cluster_threshold)?;
        let facts = kb::retrieve_for_pair(&index, &t.premise, &t.hypothesis, cfg.fact_top_k, oracle, oracle, cfg.cluster_threshold)?;
        rows.push(serde_json::json!({ "pair_id": t.id, "queries": queries, "facts": facts }));
    }
    write_json_lines(out, &rows)?;
    run.output(out);
    Ok(0)
}

fn cmd_score(
    run: &mut Run,
    proofs_path: &Path,
    mode: Option<ModeArg>,
    out: Option<&Path>,
    report: &Path,
    name: &str,
) -> CliResult<i32> {
    if let Some(m) = mode {
        run.settings.score.mode = match m {
            ModeArg::Plain => ScoreMode::Plain,
            ModeArg::FactConcat => ScoreMode::FactConcat,
        };
    }
    run.input(proofs_path);
    let proofs = search::read_records(proofs_path)?;
    if proofs.is_empty() {
        return Err(Error::invalid(format!("{} holds no proofs", proofs_path.display())).into());
    }
    let oracle = run.oracle()?;
    let oracle = oracle.as_ref();
    let mode = run.settings.score.mode;
    let scored: Vec<Result<ProofMetrics>> = run
        .pool()?
        .install(|| proofs.par_iter().map(|p| metrics::score_proof(p, oracle, oracle, mode)).collect());
    let scored: Vec<ProofMetrics> = scored.into_iter().collect::<Result<_>>()?;
    let agg = metrics::aggregate(&scored)?;
    let table = metrics::render_table(&[(name.to_string(), agg.clone())]);
    fs::write(report, &table).map_err(|e| Error::io(report, e))?;
    run.output(report);
    let record = PathBuf::from(format!("{}.json", report.display()));
    let json = serde_json::to_string_pretty(&serde_json::json!({ "rows": [{ "name": name, "report": agg }] }))
        .map_err(Error::from)?;
    fs::write(&record, json + "\n").map_err(|e| Error::io(&record, e))?;
    run.output(&record);
    if let Some(o) = out {
        write_json_lines(o, &scored)?;
        run.output(o);
    }
    print!("{table}");
    let failed = scored.iter().filter(|m| !m.errors.is_empty()).count();
    if failed > 0 {
        eprintln!("{failed} proofs were only partially scored (oracle failures)");
        return Ok(3);
    }
    Ok(0)
}

fn cmd_perturb(run: &mut Run, proofs_path: &Path, out: &Path, ratio: Option<f64>) -> CliResult<i32> {
    if let Some(r) = ratio {
        run.settings.perturb.ratio = r;
    }
    let ratio = run.settings.perturb.ratio;
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(usage("--ratio must be in (0, 1]"));
    }
    run.input(proofs_path);
    let proofs = search::read_records(proofs_path)?;
    let sub = metrics::LexiconSubstituter::from_lexicon(&Lexicon::builtin())?;
    let seed = run.settings.seed;
    let perturbed: Vec<Proof> = proofs
        .iter()
        .enumerate()
        .map(|(i, p)| metrics::perturb_gold(p, ratio, &sub, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    search::write_records(out, &perturbed)?;
    run.output(out);
    Ok(0)
}

fn cmd_negate(run: &mut Run, proofs_path: &Path, out: &Path, beam: Option<usize>) -> CliResult<i32> {
    if let Some(b) = beam {
        run.settings.search.beam = b;
    }
    apply_search(&mut run.settings.search, &SearchArgs::default())?;
    run.input(proofs_path);
    let proofs = search::read_records(proofs_path)?;
    let oracle = run.oracle()?;
    let beam = run.settings.search.beam;
    let negated: Vec<Proof> = proofs
        .iter()
        .map(|p| metrics::negate_gold(p, oracle.as_ref(), beam))
        .collect::<Result<_>>()?;
    search::write_records(out, &negated)?;
    run.output(out);
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_augment(
    run: &mut Run,
    premises_path: &Path,
    out: &Path,
    modes: Vec<GenerationMode>,
    per_premise: Option<usize>,
    export: Option<(&Path, &Path)>,
    base_fraction: f64,
    augment_fraction: f64,
    shares: Option<AugmentShares>,
) -> CliResult<i32> {
    if !modes.is_empty() {
        run.settings.augment.modes = modes;
    }
    if let Some(p) = per_premise {
        run.settings.augment.per_premise = p;
    }
    if let Some(s) = shares {
        run.settings.augment.shares = s;
    }
    let a = run.settings.augment.clone();
    if a.per_premise == 0 {
        return Err(usage("--per-premise must be at least 1"));
    }
    if let Some(m) = a.modes.iter().find(|m| augment::label_for_mode(**m).is_none()) {
        return Err(usage(format!("mode {m} cannot label augmentation pairs")));
    }
    run.input(premises_path);
    let premises = read_premises(premises_path)?;
    let oracle = run.oracle()?;
    let beam = run.settings.search.beam;
    let examples = run
        .pool()?
        .install(|| augment::generate_augment_set(&premises, &a.modes, a.per_premise, oracle.as_ref(), beam))?;
    write_json_lines(out, &examples)?;
    run.output(out);
    if let Some((base_path, dataset)) = export {
        run.input(base_path);
        let base = augment::read_pairs(base_path)?;
        let (rows, manifest) =
            augment::export_dataset(&base, base_fraction, &examples, augment_fraction, a.shares, run.settings.seed)?;
        augment::write_pairs(dataset, &rows)?;
        run.output(dataset);
        let mpath = PathBuf::from(format!("{}.counts.json", dataset.display()));
        let json = serde_json::to_string_pretty(&manifest).map_err(Error::from)?;
        fs::write(&mpath, json + "\n").map_err(|e| Error::io(&mpath, e))?;
        run.output(&mpath);
    }
    Ok(0)
}

fn cmd_report(run: &mut Run, files: &[PathBuf], names: &[String], out: &Path) -> CliResult<i32> {
    if !names.is_empty() && names.len() != files.len() {
        return Err(usage(format!("{} --name values for {} metrics files", names.len(), files.len())));
    }
    let mut rows = Vec::new();
    for (i, f) in files.iter().enumerate() {
        run.input(f);
        let m: Vec<ProofMetrics> = read_json_lines(f)?;
        let name = names
            .get(i)
            .cloned()
            .unwrap_or_else(|| f.file_stem().map_or_else(|| f.display().to_string(), |s| s.to_string_lossy().into_owned()));
        rows.push((name, metrics::aggregate(&m)?));
    }
    let table = metrics::render_table(&rows);
    fs::write(out, &table).map_err(|e| Error::io(out, e))?;
    run.output(out);
    let record = PathBuf::from(format!("{}.json", out.display()));
    let json_rows: Vec<_> = rows
        .iter()
        .map(|(n, r)| serde_json::json!({ "name": n, "report": r }))
        .collect();
    let json = serde_json::to_string_pretty(&serde_json::json!({ "rows": json_rows })).map_err(Error::from)?;
    fs::write(&record, json + "\n").map_err(|e| Error::io(&record, e))?;
    run.output(&record);
    print!("{table}");
    Ok(0)
}
