//! Batch replay of a weight schedule.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use marketvrp_core::{
    schedule_route, utility, write_trajectory, CustomerId, DepotId, Instance, PreferenceWeights,
    ReplayReport, StageReport, VehicleId, WeightSchedule,
};
use serde::Serialize;

/// Parses a schedule file: one stage per line, `w_dist [budget]`, `#` starts a comment.
pub fn parse_schedule(text: &str, default_budget: u64) -> Result<WeightSchedule> {
    let mut weights = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() > 2 {
            bail!(
                "schedule line {}: expected `w_dist [budget]`, got {raw:?}",
                i + 1
            );
        }
        let w: f64 = fields[0]
            .parse()
            .with_context(|| format!("schedule line {}: {:?} is not a number", i + 1, fields[0]))?;
        let budget: u64 = match fields.get(1) {
            Some(b) => b.parse().with_context(|| {
                format!("schedule line {}: {b:?} is not an iteration count", i + 1)
            })?,
            None => default_budget,
        };
        weights.push((w, budget));
    }
    let stages = weights
        .into_iter()
        .enumerate()
        .map(|(i, (w, budget))| {
            let w_dist =
                PreferenceWeights::new(w).with_context(|| format!("schedule stage {}", i + 1))?;
            Ok(marketvrp_core::Stage { w_dist, budget })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightSchedule::new(stages)?)
}

#[derive(Debug, Serialize)]
pub struct RouteSummary {
    pub vehicle: VehicleId,
    pub depot: DepotId,
    pub sequence: Vec<CustomerId>,
    pub distance: f64,
    pub tardiness: f64,
    pub load: f64,
    pub duration: f64,
}

#[derive(Debug, Serialize)]
pub struct SolutionSummary {
    pub w_dist: f64,
    pub dist: f64,
    pub tardy: f64,
    pub utility: f64,
    pub routes: Vec<RouteSummary>,
    pub stages: Vec<StageReport>,
}

pub fn summarize(instance: &Instance, report: &ReplayReport) -> Result<SolutionSummary> {
    let w = report.stages.last().expect("schedules have stages").w_dist;
    let mut routes = Vec::new();
    for (v, route) in report.solution.routes.iter().enumerate() {
        let s = schedule_route(route, instance)?;
        routes.push(RouteSummary {
            vehicle: route.vehicle,
            depot: instance.home_depot_of(v).id,
            sequence: route.sequence.clone(),
            distance: s.distance,
            tardiness: s.tardiness,
            load: s.load,
            duration: s.duration,
        });
    }
    let dist = routes.iter().map(|r| r.distance).sum();
    let tardy = routes.iter().map(|r| r.tardiness).sum();
    Ok(SolutionSummary {
        w_dist: w.w_dist(),
        dist,
        tardy,
        utility: utility(marketvrp_core::ObjectiveVector::new(dist, tardy), w),
        routes,
        stages: report.stages.clone(),
    })
}

/// Writes `trajectory.jsonl` and `solution.json` into `dir`.
pub fn write_outputs(dir: &Path, instance: &Instance, report: &ReplayReport) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join("trajectory.jsonl");
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    write_trajectory(&report.trajectory, BufWriter::new(file))?;
    let path = dir.join("solution.json");
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &summarize(instance, report)?)?;
    Ok(())
}

pub fn stage_table(report: &ReplayReport) -> String {
    let mut out = format!(
        "{:>5} {:>5} {:>12} {:>12} {:>12} {:>10} {}\n",
        "stage", "w", "DIST", "TARDY", "utility", "iters", "end"
    );
    for (i, s) in report.stages.iter().enumerate() {
        out.push_str(&format!(
            "{:>5} {:>5.1} {:>12.2} {:>12.2} {:>12.2} {:>10} {}\n",
            i + 1,
            s.w_dist.w_dist(),
            s.objectives.dist,
            s.objectives.tardy,
            s.utility,
            s.iterations,
            if s.converged { "converged" } else { "budget" },
        ));
    }
    out
}
