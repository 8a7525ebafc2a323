//! Interactive multi-objective routing for multi-depot fleets with soft time
//! windows.
//!
//! Vehicle agents bid for orders posted on a marketplace, a decider assigns
//! them by regret, and each agent improves its own route by local search.
//! The trade-off between distance and tardiness is a single weight that can
//! change while the search runs.

pub mod agent;
pub mod cordeau;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod local_search;
pub mod market;
pub mod model;

pub use agent::{Bid, EjectionRule, VehicleAgent};
pub use cordeau::{parse_cordeau, pr01, serialize_cordeau, ParseError, ParseIssue, ParseIssueKind};
pub use engine::{
    read_trajectory, replay_schedule, write_trajectory, ChannelCommands, CommandSource, Engine,
    EngineCommand, EngineConfig, ReplayReport, RouteSnapshot, RunLimits, RunOutcome, Scenario,
    ScriptedCommands, Snapshot, Stage, StageReport, TrajectoryEvent, TrajectoryPoint, WeightBest,
    WeightSchedule,
};
pub use error::{AgentError, EngineError, EvalError, ModelError, Stalled};
pub use evaluation::{
    insertion_delta, move_delta, objectives, schedule_route, utility, RouteSchedule,
    FEASIBILITY_EPS,
};
pub use local_search::{apply_move, descend, improve_step, Move, MoveKind};
pub use market::{
    assign_next, construct, reallocate, Assignment, Market, RegretEntry, StagnationMonitor,
};
pub use model::{
    Customer, CustomerId, Depot, DepotId, Instance, ObjectiveVector, Point, PreferenceWeights,
    Route, Solution, VehicleId, VehicleSpec,
};
