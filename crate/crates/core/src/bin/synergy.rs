use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use synergy::compat::{build_graph, check_compat, oracle_numeric, oracle_theorem1, Witness};
use synergy::experiment::{read_csv, run_experiment, summarize, ExperimentConfig, Mode, Summary};
use synergy::model::{InformationInstance, MtmrSetting};
use synergy::rules::{RuleSet, DEFAULT_RULES};
use synergy::scenario::{simulate, write_trajectory, Scenario, ScenarioError};

const RULES_ENV: &str = "SYNERGY_RULES";

#[derive(Parser)]
#[command(name = "synergy", version, about = "Compatibility checking for multi-robot task settings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rule file utilities.
    #[command(subcommand)]
    Rules(RulesCommand),
    /// Print the inference closure of a set of instances.
    Closure {
        /// Instances such as `G(r1)`.
        #[arg(required = true)]
        instances: Vec<String>,
        #[command(flatten)]
        rules: RulesArg,
    },
    /// Compatibility checks.
    #[command(subcommand)]
    Compat(CompatCommand),
    /// Assignment experiments.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Step a scenario and write the trajectory CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        ticks: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        rules: RulesArg,
    },
}

#[derive(Subcommand)]
enum RulesCommand {
    /// Parse and saturate a rule file, printing rule and type counts.
    Check {
        /// Defaults to $SYNERGY_RULES, then the built-in rules.
        file: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CompatCommand {
    /// Check whether a scenario's tasks can hold at once.
    Check {
        scenario: PathBuf,
        #[command(flatten)]
        rules: RulesArg,
        #[arg(long, value_enum, default_value_t = OracleChoice::None)]
        oracle: OracleChoice,
        /// Seed for the numeric oracle's random values.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the leveled inference graph as DOT.
        #[arg(long)]
        graph_dot: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run one experiment mode and write per-iteration rows.
    Run {
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        rules: RulesArg,
    },
    /// Print mean and standard deviation of result files.
    Summarize {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RulesArg {
    /// Rule file; defaults to $SYNERGY_RULES, then the built-in rules.
    #[arg(long = "rules")]
    path: Option<PathBuf>,
}

impl RulesArg {
    fn load(&self) -> Result<RuleSet> {
        load_rules(self.path.as_deref())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleChoice {
    Theorem1,
    Numeric,
    None,
}

fn rules_source(path: Option<&Path>) -> Result<(String, String)> {
    let path = path.map(Path::to_path_buf).or_else(|| std::env::var_os(RULES_ENV).map(PathBuf::from));
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p).with_context(|| format!("cannot read {}", p.display()))?;
            Ok((p.display().to_string(), text))
        }
        None => Ok(("built-in rules".into(), DEFAULT_RULES.into())),
    }
}

fn load_rules(path: Option<&Path>) -> Result<RuleSet> {
    let (name, text) = rules_source(path)?;
    let rules = RuleSet::parse(&text).with_context(|| name.clone())?;
    Ok(rules.saturate())
}

fn load_setting(path: &Path, rules: &RuleSet) -> Result<MtmrSetting> {
    let scenario = Scenario::load(path).with_context(|| path.display().to_string())?;
    scenario.check_types(rules)?;
    let setting = scenario.setting()?;
    for task in setting.tasks() {
        for inst in task.instances() {
            rules
                .types()
                .resolve(inst)
                .with_context(|| format!("task {}", task.task_id()))?;
        }
    }
    Ok(setting)
}

fn braces<'a>(set: impl IntoIterator<Item = &'a InformationInstance>) -> String {
    let items: Vec<String> = set.into_iter().map(ToString::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

fn print_witness(w: &Witness) {
    match w {
        Witness::Overlap {
            instance,
            first_task,
            second_task,
        } => {
            println!("witness: {instance} is pinned by both {first_task} and {second_task}");
        }
        Witness::Inference {
            instance,
            existing,
            candidate,
        } => {
            let common: BTreeSet<_> = existing.intersection(candidate).collect();
            println!("witness: {instance}");
            println!("  inferred by {}", braces(existing));
            println!("  inferred by {}", braces(candidate));
            println!("  not by their intersection {}", braces(common));
        }
    }
}

fn compat_check(
    scenario: &Path,
    rules: &RuleSet,
    oracle: OracleChoice,
    seed: u64,
    graph_dot: Option<&Path>,
    json: bool,
) -> Result<ExitCode> {
    let setting = load_setting(scenario, rules)?;
    let verdict = check_compat(&setting, rules);
    if let Some(p) = graph_dot {
        std::fs::write(p, build_graph(&setting, rules).to_dot()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    let oracle_report = match oracle {
        OracleChoice::None => None,
        OracleChoice::Theorem1 => {
            let v = oracle_theorem1(&setting, rules)?;
            Some(("theorem1", v.compatible, None))
        }
        OracleChoice::Numeric => {
            let v = oracle_numeric(&setting, rules, seed)?;
            Some(("numeric", v.compatible, Some(v.max_residual)))
        }
    };
    if json {
        let oracle = oracle_report.map(|(name, compatible, residual)| {
            json!({ "name": name, "compatible": compatible, "max_residual": residual })
        });
        let out = json!({
            "compatible": verdict.compatible,
            "witness": verdict.witness,
            "levels_built": verdict.levels_built,
            "oracle": oracle,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("{}", if verdict.compatible { "compatible" } else { "incompatible" });
        if let Some(w) = &verdict.witness {
            print_witness(w);
        }
        if let Some((name, compatible, residual)) = oracle_report {
            let agree = if compatible == verdict.compatible { "agrees" } else { "DISAGREES" };
            match residual {
                Some(r) => println!("oracle {name}: {agree} (max residual {r:.3e})"),
                None => println!("oracle {name}: {agree}"),
            }
        }
    }
    Ok(if verdict.compatible { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_summary(name: &str, s: &Summary) {
    println!("{name}: {} rows", s.rows);
    for (policy, p) in [("baseline", &s.baseline), ("synergy", &s.synergy)] {
        println!(
            "  {policy:<8} mean {:.3}  std {:.3}  pooled std {:.3}",
            p.overall.mean, p.overall.std, p.pooled_std
        );
    }
    println!("  ratio {:.3}  dominance violations {}", s.ratio(), s.dominance_violations);
    for (v, b) in &s.baseline.by_vehicles {
        let sy = &s.synergy.by_vehicles[v];
        println!(
            "  vehicles {v}: baseline {:.3} ± {:.3}  synergy {:.3} ± {:.3}",
            b.mean, b.std, sy.mean, sy.std
        );
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Rules(RulesCommand::Check { file }) => {
            let (name, text) = rules_source(file.as_deref())?;
            let parsed = RuleSet::parse(&text).with_context(|| name.clone())?;
            let saturated = parsed.saturate();
            println!(
                "{name}: {} types, {} rules, {} after saturation",
                parsed.types().len(),
                parsed.len(),
                saturated.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Closure { instances, rules } => {
            let rules = rules.load()?;
            let seed = instances
                .iter()
                .map(|s| rules.types().parse_instance(s))
                .collect::<Result<Vec<_>, _>>()?;
            for inst in rules.closure(&seed) {
                println!("{inst}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compat(CompatCommand::Check {
            scenario,
            rules,
            oracle,
            seed,
            graph_dot,
            json,
        }) => compat_check(&scenario, &rules.load()?, oracle, seed, graph_dot.as_deref(), json),
        Command::Experiment(ExperimentCommand::Run {
            mode,
            seed,
            out,
            iters,
            jobs,
            rules,
        }) => {
            if jobs == 0 {
                bail!("--jobs must be at least 1");
            }
            let rules = rules.load()?;
            let mut config = ExperimentConfig::new(mode);
            config.iters = iters;
            config.jobs = jobs;
            let report = run_experiment(&config, &rules, seed);
            let file = File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
            report.write_csv(BufWriter::new(file))?;
            print_summary(mode.name(), &report.summary());
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment(ExperimentCommand::Summarize { files }) => {
            for f in files {
                let file = File::open(&f).with_context(|| format!("cannot open {}", f.display()))?;
                let rows = read_csv(file).with_context(|| f.display().to_string())?;
                print_summary(&f.display().to_string(), &summarize(&rows));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            scenario,
            ticks,
            out,
            seed,
            rules,
        } => {
            let rules = rules.load()?;
            let s = Scenario::load(&scenario).with_context(|| scenario.display().to_string())?;
            s.check_types(&rules)?;
            match simulate(&s, &rules, seed, ticks) {
                Ok(states) => {
                    let file = File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
                    write_trajectory(&states, BufWriter::new(file))?;
                    let worst = states.iter().map(|s| s.max_residual).fold(0.0, f64::max);
                    println!("{ticks} ticks, max residual {worst:.3e}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ (ScenarioError::Incompatible { .. } | ScenarioError::Solve { .. })) => {
                    if let ScenarioError::Incompatible { tick, witness } = &e {
                        println!("tick {tick}: incompatible");
                        print_witness(witness);
                    } else {
                        println!("{e}");
                    }
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => {
            let _ = io::stdout().flush();
            code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
