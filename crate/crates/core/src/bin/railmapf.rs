use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use railmapf::exec::{Controller, HeuristicController};
use railmapf::gen::{full_schedule, generate, test_params, GenConfig};
use railmapf::graph::build_graph;
use railmapf::harness::{replay_stats, run_episode, run_evaluation, ControllerSpec, EvalConfig, Limits, SeedSpec};
use railmapf::obs::{dump_observations, FeatureSet, JunctionObserver, PriorityHandles};
use railmapf::sim::{Environment, Simulation};
use railmapf::solver::{check_solution, lns_improve, prioritized_plan, LnsConfig, Ordering, PlanningContext};
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Parser)]
#[command(name = "railmapf", version, about = "Train scheduling on rail grids")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the environment for one schedule slot, or print the schedule.
    Gen {
        #[arg(long, default_value_t = 0)]
        test: u32,
        #[arg(long, default_value_t = 0)]
        env: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the whole difficulty schedule instead.
        #[arg(long)]
        schedule: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan collision-free paths offline.
    Solve {
        #[arg(long)]
        env: PathBuf,
        /// `pp` or `lns`.
        #[arg(long, default_value = "pp")]
        planner: String,
        #[arg(long, default_value_t = 200)]
        iterations: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one episode with a controller.
    Exec {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value = "pp-sipp-mcp")]
        controller: ControllerSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Apply the desk time limits.
        #[arg(long)]
        enforce: bool,
    },
    /// Evaluate a controller over the test schedule.
    Eval {
        #[arg(long, default_value = "pp-sipp-mcp")]
        controller: ControllerSpec,
        /// Half-open test range such as `0..8`; the desk tests by default.
        #[arg(long)]
        tests: Option<String>,
        /// JSON file with a base seed or a list of seeds.
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// JSON limits file; the desk profile by default.
        #[arg(long)]
        limits: Option<PathBuf>,
        /// Use the full competition limits.
        #[arg(long, conflicts_with = "limits")]
        competition: bool,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Aggregate trace files into CSV tables and a score chart.
    ReplayStats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plot: PathBuf,
    },
    /// Export the state graph of an environment as DOT.
    Graph {
        #[arg(long)]
        env: PathBuf,
        /// Keep only switch states.
        #[arg(long)]
        condensed: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump per-agent observations while the heuristic controller drives.
    Obs {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long, default_value = "standard-7")]
        features: String,
        #[arg(long, default_value_t = 20)]
        steps: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_env(path: &Path) -> Result<Arc<Environment>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Arc::new(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_text(path: &Option<PathBuf>, text: &str) -> Result<()> {
    let mut w = output(path)?;
    w.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn parse_range(s: &str) -> Result<Range<u32>> {
    let (a, b) = s.split_once("..").with_context(|| format!("expected a range like 0..8, got `{s}`"))?;
    let (a, b): (u32, u32) = (a.trim().parse()?, b.trim().parse()?);
    if a >= b {
        bail!("empty test range {s}");
    }
    Ok(a..b)
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen { test, env, seed, schedule, out } => {
            if schedule {
                return write_text(&out, &serde_json::to_string_pretty(&full_schedule())?);
            }
            let params = test_params(test, env)?;
            let e = generate(&params, &GenConfig::new(seed))?;
            write_text(&out, &serde_json::to_string(&e)?)
        }
        Cmd::Solve { env, planner, iterations, seed, time_limit, out } => {
            let env = read_env(&env)?;
            let ctx = PlanningContext::new(env.clone());
            let mut sol = prioritized_plan(&ctx, &Ordering::default());
            if planner == "lns" {
                let cfg = LnsConfig { iterations, seed, time_limit_secs: time_limit, ..LnsConfig::default() };
                let deadline = time_limit.map(|s| Instant::now() + Duration::from_secs_f64(s));
                let (best, report) = lns_improve(&ctx, sol, &cfg, deadline);
                eprintln!("lns: {} iterations, {} improvements, cost {:?}", report.iterations, report.improvements, report.trajectory.last());
                sol = best;
            } else if planner != "pp" {
                bail!("unknown planner `{planner}` (pp or lns)");
            }
            let conflicts = check_solution(&env, &sol);
            eprintln!("planned {}/{} agents, cost {}, {} conflicts", sol.planned(), env.agents.len(), sol.cost(), conflicts.len());
            write_text(&out, &sol.to_json())
        }
        Cmd::Exec { env, controller, seed, trace, enforce } => {
            let env = read_env(&env)?;
            let limits = if enforce { Limits::desk() } else { Limits::unlimited() };
            let mut ctl = controller.build();
            let (res, tr) = run_episode(ctl.as_mut(), env, seed, &limits);
            if let (Some(p), Some(tr)) = (&trace, &tr) {
                std::fs::write(p, tr.to_jsonl_string())?;
            }
            println!("{}", serde_json::to_string_pretty(&res)?);
            Ok(())
        }
        Cmd::Eval { controller, tests, seeds, limits, competition, report, traces } => {
            let limits = match (limits, competition) {
                (Some(p), _) => Limits::from_file(&p)?,
                (None, true) => Limits::competition(),
                (None, false) => Limits::desk(),
            };
            let tests = match tests {
                Some(s) => parse_range(&s)?,
                None => Limits::DESK_TESTS,
            };
            let seeds = match seeds {
                Some(p) => SeedSpec::from_file(&p)?,
                None => SeedSpec::Base(0),
            };
            let cfg = EvalConfig { controller, tests, limits, seeds, trace_dir: traces };
            let rep = run_evaluation(&cfg)?;
            for (t, mean) in rep.test_means() {
                eprintln!("test {t:2}: mean {mean:.4}");
            }
            eprintln!("total {:.4} over {} envs{}", rep.total_score, rep.envs.len(), match &rep.termination {
                Some(r) => format!(", stopped: {r:?}"),
                None => String::new(),
            });
            write_text(&report, &serde_json::to_string_pretty(&rep)?)
        }
        Cmd::ReplayStats { input, plot } => {
            let summary = replay_stats(&input)?;
            for (p, e) in &summary.errors {
                eprintln!("skipped {}: {e}", p.display());
            }
            summary.write_files(&plot)?;
            eprintln!("{} traces, {} deadlocked agents, wrote {}", summary.traces.len(), summary.total_deadlocks, plot.display());
            Ok(())
        }
        Cmd::Graph { env, condensed, out } => {
            let env = read_env(&env)?;
            let g = build_graph(&env.grid, condensed);
            eprintln!("{} vertices, {} edges", g.vertex_count(), g.edge_count());
            write_text(&out, &g.to_dot())
        }
        Cmd::Obs { env, seed, depth, features, steps, out } => {
            let features = FeatureSet::parse(&features).with_context(|| format!("unknown feature set `{features}`"))?;
            let env = read_env(&env)?;
            let ctx = PlanningContext::new(env.clone());
            let mut sim = Simulation::reset(env.clone(), seed)?;
            let handles = PriorityHandles::from_seed(env.agents.len(), seed);
            let junctions = JunctionObserver::new(&env.grid);
            let mut ctl = HeuristicController::new();
            let far = Instant::now() + Duration::from_secs(3600);
            ctl.plan(&sim, far)?;
            let mut w = output(&out)?;
            for _ in 0..steps {
                dump_observations(&mut w, &ctx, &sim, &handles, &junctions, depth, features)?;
                if sim.is_terminated() {
                    break;
                }
                let actions = ctl.act(&sim, far)?;
                sim.step(&actions)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}
