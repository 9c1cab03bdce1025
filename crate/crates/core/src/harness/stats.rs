use crate::rail::{cluster_index, find_clusters};
use crate::sim::EpisodeTrace;
use crate::solver::PlanningContext;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStats {
    pub path: PathBuf,
    pub test: Option<u32>,
    pub env: Option<u32>,
    pub score: f64,
    pub n_agents: usize,
    pub agents_done: usize,
    /// Arrival minus free-flow arrival; `None` for agents that never arrived.
    pub delays: Vec<Option<i64>>,
    /// Agents flagged as deadlocked over the episode.
    pub deadlocks: usize,
    /// `occupancy[k]`: (cluster, step) pairs with `k` agents inside.
    pub occupancy: Vec<u64>,
    /// Agent-steps spent in each cell, as (row, col, count).
    pub heat: Vec<(u32, u32, u64)>,
}

impl TraceStats {
    pub fn mean_delay(&self) -> Option<f64> {
        let v: Vec<i64> = self.delays.iter().flatten().copied().collect();
        (!v.is_empty()).then(|| v.iter().sum::<i64>() as f64 / v.len() as f64)
    }
}

/// Per-test summary of environment scores.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub test: u32,
    pub n: usize,
    pub mean: f64,
    /// 0.1-quantile, linearly interpolated between order statistics.
    pub q10: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub traces: Vec<TraceStats>,
    /// Files that could not be read, with the reason.
    pub errors: Vec<(PathBuf, String)>,
    pub curve: Vec<CurvePoint>,
    pub occupancy: Vec<u64>,
    pub total_deadlocks: usize,
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn test_env_from_name(path: &Path) -> (Option<u32>, Option<u32>) {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let num = |prefix: &str| {
        name.split('_').find_map(|part| part.strip_prefix(prefix).and_then(|n| n.parse::<u32>().ok()))
    };
    (num("test"), num("env"))
}

pub fn trace_stats(path: &Path, trace: &EpisodeTrace) -> TraceStats {
    let env = Arc::new(trace.header.env.clone());
    let ctx = PlanningContext::new(env.clone());
    let (mut test, mut env_id) = test_env_from_name(path);
    if let Some(o) = &env.origin {
        test = Some(o.test);
        env_id = Some(o.env);
    }
    let arrivals: Vec<Option<u32>> = match &trace.summary {
        Some(s) => s.arrivals.clone(),
        None => vec![None; env.agents.len()],
    };
    let delays = arrivals
        .iter()
        .enumerate()
        .map(|(i, a)| Some(a.as_ref().copied()? as i64 - ctx.free_flow_arrival(i)? as i64))
        .collect();
    let clusters = find_clusters(&env.grid);
    let index = cluster_index(&env.grid, &clusters);
    let mut occupancy = vec![0u64; 2];
    let mut heat: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut deadlocks = 0;
    for step in &trace.steps {
        deadlocks += step.deadlocks.len();
        let mut inside = vec![0usize; clusters.len()];
        for s in step.positions.iter().flatten() {
            *heat.entry((s.cell.row, s.cell.col)).or_default() += 1;
            if let Some(k) = index[env.grid.index(s.cell)] {
                inside[k] += 1;
            }
        }
        for n in inside {
            if n >= occupancy.len() {
                occupancy.resize(n + 1, 0);
            }
            occupancy[n] += 1;
        }
    }
    TraceStats {
        path: path.to_path_buf(),
        test,
        env: env_id,
        score: trace.score(),
        n_agents: env.agents.len(),
        agents_done: arrivals.iter().filter(|a| a.is_some()).count(),
        delays,
        deadlocks,
        occupancy,
        heat: heat.into_iter().map(|((r, c), n)| (r, c, n)).collect(),
    }
}

/// Reads every `.jsonl` file in `dir` (sorted by name). Unreadable files
/// are listed in `errors` and skipped.
pub fn replay_stats(dir: &Path) -> std::io::Result<ReplaySummary> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut out = ReplaySummary::default();
    for p in paths {
        let read = File::open(&p).map_err(|e| e.to_string()).and_then(|f| EpisodeTrace::read_jsonl(BufReader::new(f)).map_err(|e| e.to_string()));
        match read {
            Ok(tr) => out.traces.push(trace_stats(&p, &tr)),
            Err(e) => out.errors.push((p, e)),
        }
    }
    let mut by_test: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for t in &out.traces {
        by_test.entry(t.test.unwrap_or(0)).or_default().push(t.score);
        out.total_deadlocks += t.deadlocks;
        if t.occupancy.len() > out.occupancy.len() {
            out.occupancy.resize(t.occupancy.len(), 0);
        }
        for (k, n) in t.occupancy.iter().enumerate() {
            out.occupancy[k] += n;
        }
    }
    out.curve = by_test
        .into_iter()
        .map(|(test, v)| CurvePoint { test, n: v.len(), mean: v.iter().sum::<f64>() / v.len() as f64, q10: quantile(&v, 0.1) })
        .collect();
    Ok(out)
}

impl ReplaySummary {
    pub fn per_env_csv(&self) -> String {
        let mut s = String::from("file,test,env,score,agents,done,deadlocks,mean_delay\n");
        for t in &self.traces {
            let opt = |x: Option<u32>| x.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                t.path.file_name().and_then(|n| n.to_str()).unwrap_or(""),
                opt(t.test),
                opt(t.env),
                t.score,
                t.n_agents,
                t.agents_done,
                t.deadlocks,
                t.mean_delay().map(|d| d.to_string()).unwrap_or_default()
            );
        }
        s
    }

    pub fn curve_csv(&self) -> String {
        let mut s = String::from("test,n,mean,q10\n");
        for p in &self.curve {
            let _ = writeln!(s, "{},{},{},{}", p.test, p.n, p.mean, p.q10);
        }
        s
    }

    pub fn occupancy_csv(&self) -> String {
        let mut s = String::from("agents_in_cluster,count\n");
        for (k, n) in self.occupancy.iter().enumerate() {
            let _ = writeln!(s, "{k},{n}");
        }
        s
    }

    pub fn heat_csv(&self) -> String {
        let mut total: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        for t in &self.traces {
            for &(r, c, n) in &t.heat {
                *total.entry((r, c)).or_default() += n;
            }
        }
        let mut s = String::from("row,col,agent_steps\n");
        for ((r, c), n) in total {
            let _ = writeln!(s, "{r},{c},{n}");
        }
        s
    }

    /// Mean score per test with the 0.1-quantile band, as an SVG line chart.
    pub fn curve_svg(&self) -> String {
        let (w, h, pad) = (640.0, 360.0, 48.0);
        let tests: Vec<f64> = self.curve.iter().map(|p| p.test as f64).collect();
        let (t0, t1) = match (tests.first(), tests.last()) {
            (Some(&a), Some(&b)) if b > a => (a, b),
            (Some(&a), _) => (a - 1.0, a + 1.0),
            _ => (0.0, 1.0),
        };
        let x = |t: f64| pad + (t - t0) / (t1 - t0) * (w - 2.0 * pad);
        let y = |s: f64| h - pad - s.clamp(0.0, 1.0) * (h - 2.0 * pad);
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>",
            h - pad,
            w - pad,
            h - pad,
            h - pad
        );
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">test</text>", w / 2.0, h - 12.0);
        let _ = writeln!(svg, "<text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">score</text>", h / 2.0, h / 2.0);
        if !self.curve.is_empty() {
            let mut band = String::new();
            for p in &self.curve {
                let _ = write!(band, "{:.1},{:.1} ", x(p.test as f64), y(p.mean));
            }
            for p in self.curve.iter().rev() {
                let _ = write!(band, "{:.1},{:.1} ", x(p.test as f64), y(p.q10));
            }
            let _ = writeln!(svg, "<polygon points=\"{}\" fill=\"steelblue\" fill-opacity=\"0.25\"/>", band.trim_end());
            let line: Vec<String> = self.curve.iter().map(|p| format!("{:.1},{:.1}", x(p.test as f64), y(p.mean))).collect();
            let _ = writeln!(svg, "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>", line.join(" "));
            for p in &self.curve {
                let _ = writeln!(svg, "<text x=\"{:.1}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{}</text>", x(p.test as f64), h - pad + 14.0, p.test);
            }
        }
        svg.push_str("</svg>\n");
        svg
    }

    /// Writes the CSV tables and the score chart into `dir`.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("per_env.csv"), self.per_env_csv())?;
        std::fs::write(dir.join("score_curve.csv"), self.curve_csv())?;
        std::fs::write(dir.join("occupancy.csv"), self.occupancy_csv())?;
        std::fs::write(dir.join("heat.csv"), self.heat_csv())?;
        std::fs::write(dir.join("score_curve.svg"), self.curve_svg())?;
        Ok(())
    }
}
