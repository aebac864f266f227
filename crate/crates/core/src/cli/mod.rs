//! The `tse` command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 infeasible query,
//! 3 oracle verification mismatch.

pub mod emit;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::accumulator::{
    acc_iotse_in, acc_iotse_table, acc_iotse_table_log, decompositions, AccTriple, Count, Mode,
};
use crate::asymptotic::{r_point, sweep, AsymptoticQuery, SplitPolicy, SweepSpec};
use crate::ensemble::{
    ensemble_table, ensemble_table_log, ensemble_tse, Ceilings, EnsembleConfig, TrappingSetClass,
};
use crate::error::Error;
use crate::oracle::{
    exhaustive_acc, graph_ensemble_average, trellis_dp, verify_all, verify_subjects, Subjects,
    VerifyLimits,
};

use emit::{emit_sweep_csv, fmt_sig9, sweep_header, SweepRow, TableDoc};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

/// Repetition factor used by the figure presets when `--q` is not given.
pub const DEFAULT_FIGURE_Q: usize = 3;

#[derive(Parser, Debug)]
#[command(
    name = "tse",
    version,
    about = "Trapping set enumerators for repeat multiple accumulate codes"
)]
#[command(
    after_help = "Defaults for any flag may be supplied with --config FILE (key=value lines).\n\
                        TSE_THREADS sets the worker thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Log,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Log => Mode::Log,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Trellis,
    Exhaustive,
    Graph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[arg(long = "q")]
    q: usize,
    #[arg(long = "K")]
    k: usize,
    #[arg(long = "L")]
    levels: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count of one accumulator trapping-set class.
    Acc {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        ai: usize,
        #[arg(long)]
        ao: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        /// Also list the (m, n) path decompositions.
        #[arg(long)]
        decompose: bool,
    },
    /// Every nonzero accumulator class at block length N, as JSON.
    AccTable {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Ensemble-average count of one (a, b) class.
    Ensemble {
        #[command(flatten)]
        config: EnsembleArgs,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        /// Also list the per-profile contributions.
        #[arg(long)]
        breakdown: bool,
    },
    /// Every nonzero ensemble class, as JSON.
    EnsembleTable {
        #[command(flatten)]
        config: EnsembleArgs,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Asymptotic spectral shape at one point.
    AsymPoint {
        #[arg(long = "q", default_value_t = DEFAULT_FIGURE_Q)]
        q: usize,
        #[arg(long = "L", default_value_t = 2)]
        levels: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// free, equal, outermost, or fixed:f_1,...,f_L
        #[arg(long, default_value = "free")]
        split: String,
    },
    /// Asymptotic spectral shape along beta = delta * alpha, as CSV.
    AsymSweep {
        #[arg(long = "q")]
        q: Option<usize>,
        #[arg(long = "L", default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value = "free")]
        split: String,
        #[arg(long, default_value_t = 0.01)]
        alpha_start: f64,
        #[arg(long, default_value_t = 0.3)]
        alpha_stop: f64,
        #[arg(long, default_value_t = 30)]
        alpha_steps: usize,
        /// Figure reproduction; writes one CSV per curve into --output.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// CSV file, or directory for presets.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Brute-force tables, as JSON.
    Oracle {
        #[arg(long, value_enum)]
        kind: OracleKind,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long = "q")]
        q: Option<usize>,
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long = "L")]
        levels: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check every closed form against the oracles.
    Verify {
        /// Cap on every block length used.
        #[arg(long)]
        max_n: Option<usize>,
        /// Write the JSON report here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Self-test of the mismatch path: perturbs one closed-form class.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Infeasible(String),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("I/O error: {e}"))
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let result = prepare_args(argv).and_then(|argv| {
        configure_threads()?;
        match Cli::try_parse_from(argv) {
            Ok(cli) => dispatch(cli.command, out),
            Err(e) => {
                use clap::error::ErrorKind;
                let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
                let text = e.render().to_string();
                if help {
                    let _ = write!(out, "{text}");
                    Ok(())
                } else {
                    Err(Failure::Usage(text.trim_end().to_string()))
                }
            }
        }
    });
    let _ = out.flush();
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Infeasible(m) => (EXIT_INFEASIBLE, m),
                Failure::Mismatch(m) => (EXIT_MISMATCH, m),
            };
            let _ = writeln!(err, "tse: {msg}");
            code
        }
    }
}

fn configure_threads() -> CliResult {
    let Ok(raw) = std::env::var("TSE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("TSE_THREADS={raw:?} is not a thread count")))?;
    // A pool built earlier in this process stays in place.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Strips `--config FILE` and appends its defaults for flags not given explicitly.
fn prepare_args(argv: Vec<OsString>) -> std::result::Result<Vec<OsString>, Failure> {
    let mut args = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            let path = it
                .next()
                .ok_or_else(|| Failure::Usage("--config needs a file".into()))?;
            config = Some(PathBuf::from(path));
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            args.push(a);
        }
    }
    let Some(path) = config else { return Ok(args) };
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let defaults = parse_config(&text)?;

    let Some(sub_name) = args.get(1).map(|s| s.to_string_lossy().into_owned()) else {
        return Ok(args);
    };
    let cmd = Cli::command();
    let Some(sub) = cmd.get_subcommands().find(|c| c.get_name() == sub_name) else {
        return Ok(args);
    };
    let known: Vec<&str> = cmd
        .get_subcommands()
        .flat_map(|c| c.get_arguments().filter_map(|a| a.get_long()))
        .collect();
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (key, value) in defaults {
        if !known.contains(&key.as_str()) {
            return Err(Failure::Usage(format!(
                "unknown config key {key:?} in {}",
                path.display()
            )));
        }
        let Some(arg) = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            continue;
        };
        if given.contains(&key) {
            continue;
        }
        if arg.get_action().takes_values() {
            args.push(format!("--{key}").into());
            args.push(value.into());
        } else if matches!(value.as_str(), "true" | "1" | "yes") {
            args.push(format!("--{key}").into());
        }
    }
    Ok(args)
}

/// `key = value` lines; `#` starts a comment.
fn parse_config(text: &str) -> std::result::Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {} is not key=value", i + 1)))?;
        out.push((
            k.trim().trim_start_matches("--").to_string(),
            v.trim().to_string(),
        ));
    }
    Ok(out)
}

fn parse_split(text: &str, levels: usize) -> std::result::Result<SplitPolicy, Failure> {
    let split = match text {
        "free" => SplitPolicy::Free,
        "equal" => SplitPolicy::equal(levels),
        "outermost" => SplitPolicy::outermost(levels),
        other => {
            let list = other.strip_prefix("fixed:").unwrap_or(other);
            let f: std::result::Result<Vec<f64>, _> =
                list.split(',').map(|x| x.trim().parse::<f64>()).collect();
            SplitPolicy::Fixed(
                f.map_err(|_| Failure::Usage(format!("cannot parse split {other:?}")))?,
            )
        }
    };
    if split != SplitPolicy::Free {
        AsymptoticQuery::new(1, levels, 0.0, 0.0, split.clone())?;
    }
    Ok(split)
}

/// Writes to `path`, or to `out` when no path is given.
fn with_output(
    path: Option<&Path>,
    out: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> CliResult {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(
                File::create(p)
                    .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", p.display())))?,
            );
            body(&mut w)?;
            w.flush()?;
        }
        None => body(out)?,
    }
    Ok(())
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn mode_name(m: ModeArg) -> &'static str {
    match m {
        ModeArg::Exact => "exact",
        ModeArg::Log => "log",
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Acc {
            n,
            ai,
            ao,
            b,
            mode,
            decompose,
        } => {
            let t = AccTriple::new(n, ai, ao, b)?;
            match acc_iotse_in(&t, mode.into()) {
                Count::Exact(v) => writeln!(out, "{v}")?,
                Count::Log(v) => writeln!(out, "{v}")?,
            }
            if decompose {
                for (d, v) in decompositions(&t) {
                    writeln!(
                        out,
                        "m={} n={} w_t={} w_11={} count={v}",
                        d.m, d.n, d.w_t, d.w_11
                    )?;
                }
            }
            Ok(())
        }
        Command::AccTable { n, mode, output } => {
            let p = params(&[("N", n.into()), ("mode", mode_name(mode).into())]);
            let doc = match mode {
                ModeArg::Exact => TableDoc::iotse(&acc_iotse_table(n)?, p),
                ModeArg::Log => TableDoc::iotse_log(&acc_iotse_table_log(n)?, p),
            };
            with_output(output.as_deref(), out, |w| doc.write(w))
        }
        Command::Ensemble {
            config,
            a,
            b,
            mode,
            breakdown,
        } => {
            let c = EnsembleConfig::new(config.q, config.k, config.levels)?;
            let res = ensemble_tse(
                &c,
                TrappingSetClass { a, b },
                mode.into(),
                breakdown,
                &Ceilings::default(),
            )?;
            writeln!(out, "{}", res.value)?;
            for (profile, v) in res.breakdown.unwrap_or_default() {
                let levels: Vec<String> = profile
                    .levels
                    .iter()
                    .map(|(ao, b)| format!("({ao},{b})"))
                    .collect();
                writeln!(out, "w={} levels={} value={v}", profile.w, levels.join(""))?;
            }
            Ok(())
        }
        Command::EnsembleTable {
            config,
            mode,
            output,
        } => {
            let c = EnsembleConfig::new(config.q, config.k, config.levels)?;
            let p = params(&[
                ("K", c.k.into()),
                ("L", c.levels.into()),
                ("mode", mode_name(mode).into()),
                ("q", c.q.into()),
            ]);
            let doc = match mode {
                ModeArg::Exact => TableDoc::ensemble(&ensemble_table(&c, &Ceilings::default())?, p),
                ModeArg::Log => {
                    TableDoc::ensemble_log(&ensemble_table_log(&c, &Ceilings::default())?, p)
                }
            };
            with_output(output.as_deref(), out, |w| doc.write(w))
        }
        Command::AsymPoint {
            q,
            levels,
            alpha,
            beta,
            split,
        } => {
            let split = parse_split(&split, levels)?;
            let query = AsymptoticQuery::new(q, levels, alpha, beta, split)?;
            let point = r_point(&query)?.ok_or_else(|| {
                Failure::Infeasible(format!(
                    "(alpha, beta) = ({alpha}, {beta}) is infeasible for q={q}, L={levels}"
                ))
            })?;
            let row = SweepRow::from_point(alpha, beta, levels, Some(&point));
            writeln!(out, "{}", sweep_header(levels))?;
            let fields: Vec<String> = row.fields().into_iter().map(fmt_sig9).collect();
            writeln!(out, "{}", fields.join(","))?;
            Ok(())
        }
        Command::AsymSweep {
            q,
            levels,
            delta,
            split,
            alpha_start,
            alpha_stop,
            alpha_steps,
            preset,
            output,
        } => {
            let q_default = q.is_none();
            let q = q.unwrap_or(DEFAULT_FIGURE_Q);
            if let Some(preset) = preset {
                return run_preset(preset, q, q_default, output.as_deref(), out);
            }
            let spec = SweepSpec {
                q,
                levels,
                split: parse_split(&split, levels)?,
                delta,
                alpha_grid: SweepSpec::linear_grid(alpha_start, alpha_stop, alpha_steps),
            };
            let grid = format!(
                "{}:{}:{alpha_steps}",
                fmt_sig9(alpha_start),
                fmt_sig9(alpha_stop)
            );
            let (meta, rows) = run_sweep(&spec, &grid, q_default)?;
            with_output(output.as_deref(), out, |w| {
                emit_sweep_csv(w, &meta, levels, &rows)
            })
        }
        Command::Oracle {
            kind,
            n,
            q,
            k,
            levels,
            output,
        } => {
            let doc = match kind {
                OracleKind::Trellis | OracleKind::Exhaustive => {
                    let n =
                        n.ok_or_else(|| Failure::Usage("--N is required for this oracle".into()))?;
                    let (table, source) = match kind {
                        OracleKind::Trellis => (trellis_dp(n)?, "trellis"),
                        _ => (exhaustive_acc(n)?, "exhaustive"),
                    };
                    TableDoc::iotse(
                        &table,
                        params(&[("N", n.into()), ("source", source.into())]),
                    )
                }
                OracleKind::Graph => {
                    let (Some(q), Some(k), Some(levels)) = (q, k, levels) else {
                        return Err(Failure::Usage(
                            "--q, --K and --L are required for the graph oracle".into(),
                        ));
                    };
                    let c = EnsembleConfig::new(q, k, levels)?;
                    let p = params(&[
                        ("K", k.into()),
                        ("L", levels.into()),
                        ("q", q.into()),
                        ("source", "graph".into()),
                    ]);
                    TableDoc::ensemble(&graph_ensemble_average(&c)?, p)
                }
            };
            with_output(output.as_deref(), out, |w| doc.write(w))
        }
        Command::Verify {
            max_n,
            output,
            inject_fault,
        } => {
            let limits = max_n.map_or_else(VerifyLimits::default, VerifyLimits::with_max_n);
            let report = if inject_fault {
                let at = limits.trellis_max_n.min(5);
                let table = move |n: usize| {
                    let mut t = acc_iotse_table(n)?;
                    if n == at {
                        *t.entries.entry((1, 0, 1)).or_default() += 1u32;
                    }
                    Ok(t)
                };
                let subjects = Subjects {
                    iotse_table: &table,
                    ..Subjects::default()
                };
                verify_subjects(&limits, &subjects)
            } else {
                verify_all(&limits)
            };
            for c in &report.comparisons {
                let status = if c.mismatch.is_some() { "FAIL" } else { "PASS" };
                writeln!(out, "{status} {} ({} classes)", c.name, c.classes_checked)?;
                if let Some(m) = &c.mismatch {
                    writeln!(
                        out,
                        "  key {:?}: expected {}, got {}",
                        m.key, m.expected, m.actual
                    )?;
                }
            }
            if let Some(path) = &output {
                fs::write(path, report.to_json() + "\n")
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            }
            match report.first_mismatch() {
                None => Ok(()),
                Some((name, m)) => Err(Failure::Mismatch(format!(
                    "{} mismatching comparison(s); first in {name} at key {:?}",
                    report.mismatches, m.key
                ))),
            }
        }
    }
}

fn run_sweep(
    spec: &SweepSpec,
    grid: &str,
    q_default: bool,
) -> std::result::Result<(String, Vec<SweepRow>), Failure> {
    let meta = format!(
        "q={} L={} delta={} split={} grid={grid}{}",
        spec.q,
        spec.levels,
        fmt_sig9(spec.delta),
        spec.split.label(),
        if q_default { " q_assumed=true" } else { "" }
    );
    let rows = sweep(spec)?
        .into_iter()
        .map(|(alpha, beta, p)| SweepRow::from_point(alpha, beta, spec.levels, p.as_ref()))
        .collect();
    Ok((meta, rows))
}

/// `(file stem, spec)` for every curve of a figure.
fn preset_specs(preset: Preset, q: usize) -> (Vec<(String, SweepSpec)>, String) {
    let short = (0.01, 0.3, 30);
    let long = (0.01, 0.6, 60);
    let (range, curves): (
        (f64, f64, usize),
        Vec<(String, usize, usize, SplitPolicy, f64)>,
    ) = match preset {
        Preset::Fig4 => (
            short,
            [0.0, 0.05, 0.1, 0.2]
                .into_iter()
                .map(|d| (format!("fig4_delta{d}"), q, 2, SplitPolicy::equal(2), d))
                .collect(),
        ),
        Preset::Fig5 => {
            let mut curves: Vec<_> = [0.0, 0.25, 0.5, 0.75, 1.0]
                .into_iter()
                .map(|f| {
                    (
                        format!("fig5_split{f}"),
                        q,
                        2,
                        SplitPolicy::Fixed(vec![f, 1.0 - f]),
                        0.1,
                    )
                })
                .collect();
            curves.push(("fig5_free".into(), q, 2, SplitPolicy::Free, 0.1));
            (short, curves)
        }
        Preset::Fig6 => (
            short,
            [2, 3, 4]
                .into_iter()
                .map(|q| (format!("fig6_q{q}"), q, 2, SplitPolicy::outermost(2), 0.1))
                .collect(),
        ),
        Preset::Fig7 => (
            long,
            [2, 3, 4]
                .into_iter()
                .map(|l| (format!("fig7_L{l}"), q, l, SplitPolicy::outermost(l), 0.1))
                .collect(),
        ),
    };
    let grid = SweepSpec::linear_grid(range.0, range.1, range.2);
    let specs = curves
        .into_iter()
        .map(|(name, q, levels, split, delta)| {
            (
                name,
                SweepSpec {
                    q,
                    levels,
                    split,
                    delta,
                    alpha_grid: grid.clone(),
                },
            )
        })
        .collect();
    (
        specs,
        format!("{}:{}:{}", fmt_sig9(range.0), fmt_sig9(range.1), range.2),
    )
}

fn run_preset(
    preset: Preset,
    q: usize,
    q_default: bool,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult {
    let (specs, grid) = preset_specs(preset, q);
    if let Some(dir) = dir {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    for (i, (name, spec)) in specs.iter().enumerate() {
        // Only fig6 varies q itself, so only the others inherit the default flag.
        let assumed = q_default && preset != Preset::Fig6;
        let (meta, rows) = run_sweep(spec, &grid, assumed)?;
        match dir {
            Some(dir) => {
                let path = dir.join(format!("{name}.csv"));
                with_output(Some(&path), out, |w| {
                    emit_sweep_csv(w, &meta, spec.levels, &rows)
                })?;
                writeln!(out, "{}", path.display())?;
            }
            None => {
                if i > 0 {
                    writeln!(out)?;
                }
                emit_sweep_csv(out, &meta, spec.levels, &rows)?;
            }
        }
    }
    Ok(())
}
