use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pathlearn::automata::{Automaton, Path, DEFAULT_PATH_CAP};
use pathlearn::contextual::{path_gain_oracle, ContextAutomaton, PatternSet};
use pathlearn::harness::{run_experiment, sweep, write_run, EnsembleSpec, Instance, RunConfig};
use pathlearn::learners::default_tuning;
use pathlearn::verify::{run_checks, Level, VerifyOptions};

/// Online path learning over acyclic automata with count-based gains.
#[derive(Debug, Parser)]
#[command(name = "pathlearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the context automaton of an expert automaton and a pattern file,
    /// and report its sizes.
    BuildContext {
        /// Expert automaton, one `src dst name` transition or `state` final per line.
        automaton: PathBuf,
        /// Pattern file, one space-separated pattern per line, with optional
        /// `discount=` and `max_gap=` headers.
        patterns: PathBuf,
        /// Where to write the context automaton; printed to stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run an ensemble experiment and write trace.csv and meta.txt.
    Run {
        /// TOML run file with `[ensemble]` and `[learner]` tables.
        config: PathBuf,
        /// Override the seed from the run file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Run this many consecutive seeds, one `seed-<s>` directory each.
        #[arg(long)]
        seeds: Option<u64>,
        /// Run sweep seeds on separate threads.
        #[arg(long)]
        parallel: bool,
        /// Also write regret.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Run the self-checks; exits with 1 if any fails.
    Verify {
        /// `quick` (under a minute) or `full`.
        #[arg(long, default_value = "quick")]
        level: Level,
        /// Negate context-transition gains, which must make the additivity checks fail.
        #[arg(long, hide = true)]
        flip_edge_gains: bool,
    },
    /// Show that 4-gram gains on a two-translator instance are not edge-additive.
    DemoNonadditive,
    /// Brute-force gains by enumerating every accepting path.
    Oracle {
        automaton: PathBuf,
        patterns: PathBuf,
        /// One output symbol per transition, in file order, space-separated.
        #[arg(long)]
        outputs: String,
        /// Target sequence, space-separated.
        #[arg(long)]
        target: String,
        /// Score only this path (transition names, space-separated) instead
        /// of searching for the best one.
        #[arg(long)]
        path: Option<String>,
    },
}

/// Input that cannot be used as given: exit code 2.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err<T>(r: std::result::Result<T, impl Into<anyhow::Error>>) -> Result<T> {
    r.map_err(|e| ConfigError(e.into()).into())
}

fn read(path: &FsPath) -> Result<String> {
    config_err(fs::read_to_string(path).with_context(|| format!("reading {}", path.display())))
}

fn load_machine(automaton: &FsPath, patterns: &FsPath) -> Result<(Automaton, PatternSet)> {
    let a: Automaton = config_err(read(automaton)?.parse().with_context(|| format!("parsing {}", automaton.display())))?;
    let ps: PatternSet = config_err(read(patterns)?.parse().with_context(|| format!("parsing {}", patterns.display())))?;
    Ok((a, ps))
}

fn build_context(automaton: &FsPath, patterns: &FsPath, output: Option<&FsPath>) -> Result<bool> {
    let (a, ps) = load_machine(automaton, patterns)?;
    let ca = ContextAutomaton::build(&a, &ps)?;
    let text = ca.to_string();
    let s = ca.sizes();
    match output {
        Some(p) => fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    let report = format!("K = {}\nM = {}\nQ = {}\nN = {}", s.longest_path, s.transitions, s.states, s.paths);
    if output.is_some() {
        println!("{report}");
    } else {
        eprintln!("{report}");
    }
    Ok(true)
}

fn run_one(spec: &EnsembleSpec, cfg: &RunConfig, dir: &FsPath, svg: bool) -> Result<()> {
    let inst = Instance::new(spec)?;
    let lc = default_tuning(cfg.learner.algorithm, &cfg.learner.overrides(), &inst.sizes(), spec.seed)?;
    let trace = run_experiment(&inst, &lc, cfg.learner.regime())?;
    let m = write_run(dir, &inst, &lc, &trace, svg)?;
    println!(
        "{}: seed {} regret {:.4} bound {:.4}",
        dir.display(),
        spec.seed,
        m.expected_regret,
        m.bound
    );
    Ok(())
}

fn run(config: &FsPath, seed: Option<u64>, out: &FsPath, seeds: Option<u64>, parallel: bool, svg: bool) -> Result<bool> {
    let cfg = config_err(RunConfig::from_toml(&read(config)?))?;
    config_err(cfg.learner.algorithm.check_regime(cfg.learner.regime()))?;
    let mut spec = cfg.ensemble.clone();
    if let Some(s) = seed {
        spec.seed = s;
    }
    let Some(count) = seeds else {
        run_one(&spec, &cfg, out, svg)?;
        return Ok(true);
    };
    if count == 0 {
        return config_err(Err(anyhow::anyhow!("--seeds must be at least 1")));
    }
    let list: Vec<u64> = (spec.seed..spec.seed + count).collect();
    let dir_of = |s: u64| out.join(format!("seed-{s}"));
    let default_regime = cfg.learner.regime() == cfg.learner.algorithm.regime();
    if parallel && default_regime {
        for (s, res) in list.iter().zip(sweep(&spec, cfg.learner.algorithm, &cfg.learner.overrides(), &list)) {
            let (inst, lc, trace) = res?;
            let m = write_run(&dir_of(*s), &inst, &lc, &trace, svg)?;
            println!("{}: seed {s} regret {:.4} bound {:.4}", dir_of(*s).display(), m.expected_regret, m.bound);
        }
    } else {
        for &s in &list {
            let spec = EnsembleSpec { seed: s, ..spec.clone() };
            run_one(&spec, &cfg, &dir_of(s), svg)?;
        }
    }
    Ok(true)
}

fn verify(level: Level, flip_edge_gains: bool) -> bool {
    let start = Instant::now();
    let outcomes = run_checks(&VerifyOptions { level, flip_edge_gains });
    for c in &outcomes {
        println!(
            "{:<4} {:<20} {:>9.3}s  {}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.elapsed.as_secs_f64(),
            c.detail
        );
    }
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed, {:.3}s", outcomes.len(), start.elapsed().as_secs_f64());
    failed == 0
}

fn demo_nonadditive() -> Result<bool> {
    let inst = pathlearn::harness::translation_instance();
    let rep = pathlearn::harness::verify_non_additivity(&inst)?;
    println!("target: {}", inst.y.join(" "));
    for (p, g) in inst.paths.iter().zip(&rep.gains) {
        let words: Vec<&str> = p.0.iter().map(|&i| inst.out[i].as_str()).collect();
        println!("{:<40} gain {g}", words.join(" "));
    }
    println!("least-squares residual of edge-additive fit: {:e}", rep.residual);
    println!("edge-additive gains exist: {}", rep.feasible);
    Ok(!rep.feasible)
}

fn oracle(automaton: &FsPath, patterns: &FsPath, outputs: &str, target: &str, path: Option<&str>) -> Result<bool> {
    let (a, ps) = load_machine(automaton, patterns)?;
    let out: Vec<&str> = outputs.split_whitespace().collect();
    let y: Vec<&str> = target.split_whitespace().collect();
    if out.len() != a.num_transitions() {
        return config_err(Err(anyhow::anyhow!(
            "{} outputs given for {} transitions",
            out.len(),
            a.num_transitions()
        )));
    }
    let names = |p: &Path| p.names(&a).join(" ");
    if let Some(spec) = path {
        let p = config_err(
            spec.split_whitespace()
                .map(|n| a.index_of(n).with_context(|| format!("no transition named `{n}`")))
                .collect::<Result<Vec<_>>>(),
        )?;
        let p = Path(p);
        if !a.is_accepting(&p) {
            return config_err(Err(anyhow::anyhow!("`{spec}` is not an accepting path")));
        }
        println!("{}\t{}", names(&p), path_gain_oracle(&a, &p, &out, &y, &ps));
        return Ok(true);
    }
    let mut best: Option<(f64, Path)> = None;
    for p in a.enumerate_paths(DEFAULT_PATH_CAP)? {
        let g = path_gain_oracle(&a, &p, &out, &y, &ps);
        if best.as_ref().is_none_or(|(b, _)| g > *b) {
            best = Some((g, p));
        }
    }
    match best {
        Some((g, p)) => println!("{}\t{g}", names(&p)),
        None => bail!("automaton has no accepting path"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildContext { automaton, patterns, output } => build_context(&automaton, &patterns, output.as_deref()),
        Command::Run {
            config,
            seed,
            out,
            seeds,
            parallel,
            svg,
        } => run(&config, seed, &out, seeds, parallel, svg),
        Command::Verify { level, flip_edge_gains } => Ok(verify(level, flip_edge_gains)),
        Command::DemoNonadditive => demo_nonadditive(),
        Command::Oracle {
            automaton,
            patterns,
            outputs,
            target,
            path,
        } => oracle(&automaton, &patterns, &outputs, &target, path.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
