//! Run orchestration: construction, parallel improvement sweeps,
//! stagnation-driven reallocation, live weight changes and trajectory recording.
//!
//! All cross-route mutation happens on the engine's thread between sweeps.
//! During a sweep each agent works on its own route with its own random
//! stream, so parallel and sequential sweeps produce the same result.

use std::collections::VecDeque;
use std::io::{self, Write};
use std::sync::mpsc::{Receiver, TryRecvError};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{EjectionRule, VehicleAgent};
use crate::error::EngineError;
use crate::evaluation::{schedule_route, utility, RouteSchedule};
use crate::market::{self, construct, Market, StagnationMonitor, STAGNATION_EPS};
use crate::model::{
    CustomerId, DepotId, Instance, ObjectiveVector, Point, PreferenceWeights, Route, Solution,
    VehicleId,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub seed: u64,
    /// Improvement iterations without global progress before the decider intervenes.
    pub patience: u64,
    pub ejection_size: usize,
    pub ejection_rule: EjectionRule,
    /// Improvement steps per agent per sweep.
    pub micro_budget: u64,
    /// Consecutive stagnations without a new best after which the weights count as converged.
    pub stagnation_limit: u32,
    /// Run sweeps on the calling thread only.
    pub deterministic: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            patience: 2000,
            ejection_size: 2,
            ejection_rule: EjectionRule::Random,
            micro_budget: 200,
            stagnation_limit: 2,
            deterministic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryEvent {
    Improved,
    WeightChanged,
    Reallocated,
    Converged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub wall_iteration: u64,
    pub w_dist: f64,
    pub dist: f64,
    pub tardy: f64,
    pub utility: f64,
    pub event: TrajectoryEvent,
}

impl TrajectoryPoint {
    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.dist, self.tardy)
    }
}

/// Writes one JSON record per line.
pub fn write_trajectory<W: Write>(points: &[TrajectoryPoint], mut out: W) -> io::Result<()> {
    for p in points {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trajectory(text: &str) -> Result<Vec<TrajectoryPoint>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "w_dist")]
pub enum EngineCommand {
    SetWeight(PreferenceWeights),
    Pause,
    Resume,
    ForceReallocate,
    Stop,
}

/// Supplies commands to a running engine. Polled between sweeps.
pub trait CommandSource {
    /// Commands to apply before the sweep starting at `iteration`. When
    /// `idle` is set the engine is paused or converged and will not advance
    /// on its own, so the source may block; an empty answer then ends the run.
    fn next_commands(&mut self, iteration: u64, idle: bool) -> Vec<EngineCommand>;
}

/// Commands keyed by the wall iteration at which they become due. While the
/// engine idles, the next pending command is delivered straight away.
#[derive(Debug, Clone, Default)]
pub struct ScriptedCommands {
    queue: VecDeque<(u64, EngineCommand)>,
}

impl ScriptedCommands {
    pub fn new(mut commands: Vec<(u64, EngineCommand)>) -> Self {
        commands.sort_by_key(|&(at, _)| at);
        Self {
            queue: commands.into(),
        }
    }
}

impl CommandSource for ScriptedCommands {
    fn next_commands(&mut self, iteration: u64, idle: bool) -> Vec<EngineCommand> {
        let mut due = Vec::new();
        while self.queue.front().is_some_and(|&(at, _)| at <= iteration) {
            due.push(self.queue.pop_front().unwrap().1);
        }
        if due.is_empty() && idle {
            due.extend(self.queue.pop_front().map(|(_, c)| c));
        }
        due
    }
}

/// Commands from another thread. A disconnected sender stops the run.
#[derive(Debug)]
pub struct ChannelCommands(pub Receiver<EngineCommand>);

impl CommandSource for ChannelCommands {
    fn next_commands(&mut self, _iteration: u64, idle: bool) -> Vec<EngineCommand> {
        let mut out = Vec::new();
        if idle {
            match self.0.recv() {
                Ok(c) => out.push(c),
                Err(_) => return vec![EngineCommand::Stop],
            }
        }
        loop {
            match self.0.try_recv() {
                Ok(c) => out.push(c),
                Err(TryRecvError::Empty) => return out,
                Err(TryRecvError::Disconnected) => {
                    out.push(EngineCommand::Stop);
                    return out;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub w_dist: PreferenceWeights,
    /// Improvement iterations before the stage ends regardless of convergence.
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSchedule {
    stages: Vec<Stage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// 1.0 down to 0.0 in steps of 0.1.
    A,
    /// 0.0 up to 1.0 in steps of 0.1.
    B,
    /// 0.5 up to 1.0, then down to 0.0.
    C,
}

impl Scenario {
    pub fn weights(self) -> Vec<f64> {
        let tenths: Vec<u32> = match self {
            Scenario::A => (0..=10).rev().collect(),
            Scenario::B => (0..=10).collect(),
            Scenario::C => (5..=10).chain((0..10).rev()).collect(),
        };
        tenths.into_iter().map(|t| f64::from(t) / 10.0).collect()
    }
}

impl WeightSchedule {
    pub fn new(stages: Vec<Stage>) -> Result<Self, EngineError> {
        if stages.is_empty() {
            return Err(EngineError::InvalidSchedule("no stages".into()));
        }
        if let Some(i) = stages.iter().position(|s| s.budget == 0) {
            return Err(EngineError::InvalidSchedule(format!(
                "stage {} has a zero budget",
                i + 1
            )));
        }
        Ok(Self { stages })
    }

    pub fn scenario(scenario: Scenario, budget: u64) -> Result<Self, EngineError> {
        Self::from_weights(&scenario.weights(), budget)
    }

    pub fn from_weights(weights: &[f64], budget: u64) -> Result<Self, EngineError> {
        let stages = weights
            .iter()
            .map(|&w| {
                Ok(Stage {
                    w_dist: PreferenceWeights::new(w)?,
                    budget,
                })
            })
            .collect::<Result<Vec<_>, EngineError>>()?;
        Self::new(stages)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }
}

/// Best complete solution seen under one weight setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBest {
    pub w_dist: PreferenceWeights,
    pub solution: Solution,
    pub objectives: ObjectiveVector,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSnapshot {
    pub vehicle: VehicleId,
    pub depot: DepotId,
    pub schedule: RouteSchedule,
    /// Depot, visited customers in order, depot.
    pub path: Vec<Point>,
}

/// Point-in-time copy of the engine state, taken between sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub wall_iteration: u64,
    pub w_dist: f64,
    pub solution: Solution,
    pub objectives: ObjectiveVector,
    pub utility: f64,
    pub routes: Vec<RouteSnapshot>,
    pub market: Vec<CustomerId>,
    pub paused: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunLimits {
    pub max_iterations: Option<u64>,
    /// Idle once the current weights converge instead of reallocating indefinitely.
    pub until_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Best solution for the weights in force when the run ended.
    pub best: WeightBest,
    pub best_by_weight: Vec<WeightBest>,
    pub trajectory: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub w_dist: PreferenceWeights,
    pub objectives: ObjectiveVector,
    pub utility: f64,
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub stages: Vec<StageReport>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub solution: Solution,
    pub best_by_weight: Vec<WeightBest>,
}

#[derive(Debug, Clone)]
struct Incumbent {
    routes: Vec<Route>,
    objectives: ObjectiveVector,
    utility: f64,
}

pub struct Engine {
    instance: Arc<Instance>,
    config: EngineConfig,
    agents: Vec<VehicleAgent>,
    market: Market,
    w: PreferenceWeights,
    monitor: StagnationMonitor,
    iteration: u64,
    stage_best: Incumbent,
    best_at_last_stagnation: f64,
    fruitless: u32,
    converged: bool,
    converge_enabled: bool,
    paused: bool,
    best_by_weight: Vec<WeightBest>,
    trajectory: Vec<TrajectoryPoint>,
}

impl Engine {
    /// Builds the agents and constructs the initial solution under `w`.
    pub fn new(
        instance: Arc<Instance>,
        w: PreferenceWeights,
        config: EngineConfig,
    ) -> Result<Self, EngineError> {
        let agents: Vec<VehicleAgent> = (0..instance.vehicles().len())
            .map(|v| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(v as u64 + 1);
                VehicleAgent::new(&instance, v, rng)
            })
            .collect();
        let mut market = Market::with_all(&instance);
        let mut agents = agents;
        construct(&mut market, &mut agents, &instance, w)?;
        let monitor = StagnationMonitor::new(config.patience, config.ejection_size);
        let placeholder = Incumbent {
            routes: Vec::new(),
            objectives: ObjectiveVector::ZERO,
            utility: f64::INFINITY,
        };
        let mut engine = Self {
            instance,
            config,
            agents,
            market,
            w,
            monitor,
            iteration: 0,
            stage_best: placeholder,
            best_at_last_stagnation: f64::INFINITY,
            fruitless: 0,
            converged: false,
            converge_enabled: true,
            paused: false,
            best_by_weight: Vec::new(),
            trajectory: Vec::new(),
        };
        engine.begin_stage();
        Ok(engine)
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn weights(&self) -> PreferenceWeights {
        self.w
    }

    pub fn wall_iteration(&self) -> u64 {
        self.iteration
    }

    pub fn is_converged(&self) -> bool {
        self.converged
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn market(&self) -> &Market {
        &self.market
    }

    pub fn monitor(&self) -> &StagnationMonitor {
        &self.monitor
    }

    pub fn trajectory(&self) -> &[TrajectoryPoint] {
        &self.trajectory
    }

    pub fn best_by_weight(&self) -> &[WeightBest] {
        &self.best_by_weight
    }

    pub fn best_for(&self, w: PreferenceWeights) -> Option<&WeightBest> {
        self.best_by_weight.iter().find(|b| b.w_dist == w)
    }

    /// The current solution, which may be worse than the best after a reallocation.
    pub fn solution(&self) -> Solution {
        Solution {
            routes: self.routes(),
            unassigned: self.market.open_orders().clone(),
        }
    }

    /// Aggregated from the agents' incremental bookkeeping.
    pub fn objectives(&self) -> ObjectiveVector {
        self.agents.iter().map(VehicleAgent::objectives).sum()
    }

    pub fn utility(&self) -> f64 {
        utility(self.objectives(), self.w)
    }

    fn routes(&self) -> Vec<Route> {
        self.agents
            .iter()
            .map(|a| a.route(&self.instance))
            .collect()
    }

    fn capture(&self) -> Incumbent {
        let objectives = self.objectives();
        Incumbent {
            routes: self.routes(),
            objectives,
            utility: utility(objectives, self.w),
        }
    }

    fn restore(&mut self, routes: &[Route]) {
        for (agent, route) in self.agents.iter_mut().zip(routes) {
            agent
                .set_route(&self.instance, route)
                .expect("restored routes come from this engine");
        }
        self.market = Market::new();
    }

    fn record(&mut self, event: TrajectoryEvent, objectives: ObjectiveVector) {
        self.trajectory.push(TrajectoryPoint {
            wall_iteration: self.iteration,
            w_dist: self.w.w_dist(),
            dist: objectives.dist,
            tardy: objectives.tardy,
            utility: utility(objectives, self.w),
            event,
        });
    }

    fn update_weight_best(&mut self) {
        let best = &self.stage_best;
        let entry = WeightBest {
            w_dist: self.w,
            solution: Solution {
                routes: best.routes.clone(),
                unassigned: Default::default(),
            },
            objectives: best.objectives,
            utility: best.utility,
        };
        match self.best_by_weight.iter_mut().find(|b| b.w_dist == self.w) {
            Some(b) if entry.utility < b.utility => *b = entry,
            Some(_) => {}
            None => self.best_by_weight.push(entry),
        }
    }

    /// Resets per-stage bookkeeping around the current (complete) solution.
    fn begin_stage(&mut self) {
        self.stage_best = self.capture();
        let u = self.stage_best.utility;
        self.monitor.reset(u);
        self.best_at_last_stagnation = u;
        self.fruitless = 0;
        self.converged = false;
        self.record(TrajectoryEvent::WeightChanged, self.stage_best.objectives);
        self.update_weight_best();
    }

    /// Re-scores the stage's best solution under `w` and continues from it.
    pub fn set_weight(&mut self, w: PreferenceWeights) {
        let best = std::mem::take(&mut self.stage_best.routes);
        self.restore(&best);
        self.w = w;
        for agent in &mut self.agents {
            agent.invalidate_quotes();
        }
        self.begin_stage();
    }

    /// One improvement burst per agent, then aggregation and the stagnation check.
    /// Returns whether the current objectives changed.
    pub fn sweep(&mut self) -> bool {
        let instance = &*self.instance;
        let (w, budget) = (self.w, self.config.micro_budget);
        let accepted: u64 = if self.config.deterministic {
            self.agents
                .iter_mut()
                .map(|a| a.improve_burst(instance, w, budget))
                .sum()
        } else {
            self.agents
                .par_iter_mut()
                .map(|a| a.improve_burst(instance, w, budget))
                .sum()
        };
        self.iteration += budget;
        let objectives = self.objectives();
        let u = utility(objectives, w);
        let mut changed = accepted > 0;
        if u < self.stage_best.utility {
            self.stage_best = self.capture();
            self.record(TrajectoryEvent::Improved, objectives);
            self.update_weight_best();
        }
        if self.monitor.observe(u, budget) {
            self.on_stagnation();
            changed = true;
        }
        changed
    }

    fn on_stagnation(&mut self) {
        if self.stage_best.utility < self.best_at_last_stagnation - STAGNATION_EPS {
            self.fruitless = 0;
        } else {
            self.fruitless += 1;
        }
        self.best_at_last_stagnation = self.stage_best.utility;
        if self.converge_enabled && self.fruitless >= self.config.stagnation_limit {
            self.converge();
        } else {
            self.reallocate();
        }
    }

    /// Restores the stage's best solution and stops improving until a command arrives.
    fn converge(&mut self) {
        let best = self.stage_best.routes.clone();
        self.restore(&best);
        self.converged = true;
        self.monitor.restart_count();
        self.record(TrajectoryEvent::Converged, self.stage_best.objectives);
    }

    /// Every agent posts orders back and the assignment loop reruns. If
    /// reassignment stalls the previous routes are reinstated.
    pub fn reallocate(&mut self) {
        let before = self.routes();
        let instance = Arc::clone(&self.instance);
        market::reallocate(
            &mut self.market,
            &mut self.agents,
            &self.monitor,
            self.config.ejection_rule,
            &instance,
            self.w,
        );
        if construct(&mut self.market, &mut self.agents, &instance, self.w).is_err() {
            self.restore(&before);
        }
        self.converged = false;
        self.monitor.restart_count();
        let objectives = self.objectives();
        self.record(TrajectoryEvent::Reallocated, objectives);
    }

    /// Applies one command. Returns `true` for `Stop`.
    pub fn apply(&mut self, command: EngineCommand) -> bool {
        match command {
            EngineCommand::SetWeight(w) => self.set_weight(w),
            EngineCommand::Pause => self.paused = true,
            EngineCommand::Resume => self.paused = false,
            EngineCommand::ForceReallocate => self.reallocate(),
            EngineCommand::Stop => return true,
        }
        false
    }

    /// Runs until `Stop`, the iteration limit, or an idle engine with no further
    /// commands. Without `until_converged` every stagnation triggers a reallocation.
    pub fn run(&mut self, commands: &mut dyn CommandSource, limits: RunLimits) -> RunOutcome {
        self.run_observed(commands, limits, &mut |_| {})
    }

    /// Like [`Engine::run`], calling `observer` after every sweep or command
    /// that changed the objectives or the weights.
    pub fn run_observed(
        &mut self,
        commands: &mut dyn CommandSource,
        limits: RunLimits,
        observer: &mut dyn FnMut(&Engine),
    ) -> RunOutcome {
        self.converge_enabled = limits.until_converged;
        'outer: loop {
            if limits.max_iterations.is_some_and(|m| self.iteration >= m) {
                break;
            }
            let idle = self.paused || self.converged;
            let batch = commands.next_commands(self.iteration, idle);
            if idle && batch.is_empty() {
                break;
            }
            for command in batch {
                if self.apply(command) {
                    break 'outer;
                }
                if matches!(
                    command,
                    EngineCommand::SetWeight(_) | EngineCommand::ForceReallocate
                ) {
                    observer(self);
                }
            }
            if !(self.paused || self.converged) && self.sweep() {
                observer(self);
            }
        }
        self.finish()
    }

    /// Leaves the engine on the stage's best solution and reports it.
    fn finish(&mut self) -> RunOutcome {
        if !self.converged {
            let best = self.stage_best.routes.clone();
            self.restore(&best);
        }
        RunOutcome {
            best: self
                .best_for(self.w)
                .expect("current weight has a record")
                .clone(),
            best_by_weight: self.best_by_weight.clone(),
            trajectory: self.trajectory.clone(),
        }
    }

    /// Consistent copy of the current state with freshly evaluated schedules.
    pub fn snapshot(&self) -> Snapshot {
        let instance = &*self.instance;
        let solution = self.solution();
        let routes: Vec<RouteSnapshot> = solution
            .routes
            .iter()
            .enumerate()
            .map(|(v, route)| {
                let depot = instance.home_depot_of(v);
                let schedule = schedule_route(route, instance).expect("engine routes are valid");
                let mut path = vec![depot.location];
                path.extend(
                    route
                        .sequence
                        .iter()
                        .map(|&c| instance.customer(c).expect("known customer").location),
                );
                path.push(depot.location);
                RouteSnapshot {
                    vehicle: route.vehicle,
                    depot: depot.id,
                    schedule,
                    path,
                }
            })
            .collect();
        let objectives: ObjectiveVector = routes.iter().map(|r| r.schedule.objectives()).sum();
        Snapshot {
            wall_iteration: self.iteration,
            w_dist: self.w.w_dist(),
            market: solution.unassigned.iter().copied().collect(),
            solution,
            objectives,
            utility: utility(objectives, self.w),
            routes,
            paused: self.paused,
            converged: self.converged,
        }
    }
}

/// Runs every stage of `schedule` in order. A stage ends on convergence or
/// when its budget is spent; the next stage starts from its best solution.
pub fn replay_schedule(
    instance: Arc<Instance>,
    schedule: &WeightSchedule,
    config: EngineConfig,
) -> Result<ReplayReport, EngineError> {
    let stages = schedule.stages();
    let mut engine = Engine::new(instance, stages[0].w_dist, config)?;
    let mut reports = Vec::with_capacity(stages.len());
    for (i, stage) in stages.iter().enumerate() {
        if i > 0 {
            engine.set_weight(stage.w_dist);
        }
        let start = engine.iteration;
        while !engine.converged && engine.iteration - start < stage.budget {
            engine.sweep();
        }
        let converged = engine.converged;
        if !converged {
            let best = engine.stage_best.routes.clone();
            engine.restore(&best);
        }
        reports.push(StageReport {
            w_dist: stage.w_dist,
            objectives: engine.stage_best.objectives,
            utility: engine.stage_best.utility,
            iterations: engine.iteration - start,
            converged,
        });
    }
    Ok(ReplayReport {
        stages: reports,
        trajectory: engine.trajectory.clone(),
        solution: engine.solution(),
        best_by_weight: engine.best_by_weight.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Customer, Depot, VehicleSpec};

    fn line_instance(n: u32, vehicles: u32) -> Instance {
        let customers = (1..=n)
            .map(|i| Customer {
                id: CustomerId(i),
                location: Point::new(f64::from(i), f64::from(i % 3)),
                demand: 1.0,
                service_time: 1.0,
                tw_open: 0.0,
                tw_close: 5.0 * f64::from(i),
            })
            .collect();
        let depot = Depot {
            id: DepotId(1),
            location: Point::new(0.0, 0.0),
            tw_open: 0.0,
            tw_close: 1e4,
        };
        let vehicles = (1..=vehicles)
            .map(|v| VehicleSpec {
                id: VehicleId(v),
                home_depot: DepotId(1),
                capacity: 100.0,
                max_route_duration: None,
            })
            .collect();
        Instance::new(customers, vec![depot], vehicles).unwrap()
    }

    #[test]
    fn scenario_weights() {
        assert_eq!(Scenario::A.weights().len(), 11);
        assert_eq!(Scenario::A.weights()[3], 0.7);
        assert_eq!(Scenario::B.weights()[0], 0.0);
        let c = Scenario::C.weights();
        assert_eq!(c.len(), 16);
        assert_eq!((c[0], c[5], c[15]), (0.5, 1.0, 0.0));
    }

    #[test]
    fn schedule_validation() {
        assert!(WeightSchedule::new(vec![]).is_err());
        assert!(WeightSchedule::from_weights(&[0.5], 0).is_err());
        assert!(WeightSchedule::from_weights(&[1.5], 10).is_err());
    }

    #[test]
    fn single_customer_converges_immediately() {
        let inst = Arc::new(line_instance(1, 1));
        let w = PreferenceWeights::new(0.3).unwrap();
        let mut engine = Engine::new(inst, w, EngineConfig::default()).unwrap();
        let out = engine.run(
            &mut ScriptedCommands::default(),
            RunLimits {
                until_converged: true,
                ..RunLimits::default()
            },
        );
        assert_eq!(
            out.best.objectives,
            ObjectiveVector::new(2.0 * 2f64.sqrt(), 0.0)
        );
        assert!(engine.is_converged());
        assert_eq!(
            out.trajectory.last().unwrap().event,
            TrajectoryEvent::Converged
        );
    }

    #[test]
    fn snapshot_after_construct_is_complete() {
        let inst = Arc::new(line_instance(6, 2));
        let engine = Engine::new(
            inst,
            PreferenceWeights::new(0.5).unwrap(),
            EngineConfig::default(),
        )
        .unwrap();
        let a = engine.snapshot();
        assert!(a.market.is_empty() && a.solution.is_complete());
        assert_eq!(a, engine.snapshot());
        assert!((a.objectives.dist - engine.objectives().dist).abs() < 1e-9);
        assert_eq!(
            a.routes.iter().map(|r| r.path.len()).sum::<usize>(),
            6 + 2 * 2
        );
    }

    #[test]
    fn commands_apply_between_sweeps() {
        let inst = Arc::new(line_instance(8, 2));
        let config = EngineConfig {
            deterministic: true,
            ..EngineConfig::default()
        };
        let mut engine = Engine::new(inst, PreferenceWeights::new(1.0).unwrap(), config).unwrap();
        let mut script = ScriptedCommands::new(vec![
            (
                400,
                EngineCommand::SetWeight(PreferenceWeights::new(0.0).unwrap()),
            ),
            (1000, EngineCommand::Stop),
        ]);
        let out = engine.run(&mut script, RunLimits::default());
        let changes: Vec<_> = out
            .trajectory
            .iter()
            .filter(|p| p.event == TrajectoryEvent::WeightChanged)
            .map(|p| p.wall_iteration)
            .collect();
        assert_eq!(changes, vec![0, 400]);
        assert_eq!(out.best.w_dist.w_dist(), 0.0);
        assert_eq!(out.best_by_weight.len(), 2);
    }

    #[test]
    fn trajectory_round_trips_through_jsonl() {
        let p = TrajectoryPoint {
            wall_iteration: 7,
            w_dist: 0.1,
            dist: 1.5,
            tardy: 0.0,
            utility: 0.15,
            event: TrajectoryEvent::Improved,
        };
        let mut buf = Vec::new();
        write_trajectory(&[p, p], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(r#"{"wall_iteration":7,"w_dist":0.1,"dist":1.5,"tardy":0.0,"utility":0.15,"event":"improved"}"#));
        assert_eq!(read_trajectory(&text).unwrap(), vec![p, p]);
    }

    #[test]
    fn command_wire_format() {
        let c: EngineCommand =
            serde_json::from_str(r#"{"kind":"SetWeight","w_dist":0.3}"#).unwrap();
        assert_eq!(
            c,
            EngineCommand::SetWeight(PreferenceWeights::new(0.3).unwrap())
        );
        assert!(
            serde_json::from_str::<EngineCommand>(r#"{"kind":"SetWeight","w_dist":1.5}"#).is_err()
        );
    }
}
