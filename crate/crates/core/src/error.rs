use thiserror::Error;

use crate::model::{CustomerId, DepotId, VehicleId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate customer id {0}")]
    DuplicateCustomer(CustomerId),
    #[error("duplicate depot id {0}")]
    DuplicateDepot(DepotId),
    #[error("duplicate vehicle id {0}")]
    DuplicateVehicle(VehicleId),
    #[error("vehicle {vehicle} references unknown depot {depot}")]
    UnknownDepot { vehicle: VehicleId, depot: DepotId },
    #[error("customer {0}: {1}")]
    InvalidCustomer(CustomerId, &'static str),
    #[error("depot {0} has a non-finite field or an inverted time window")]
    InvalidDepot(DepotId),
    #[error("vehicle {0} has an invalid capacity or route duration")]
    InvalidVehicle(VehicleId),
    #[error("unknown customer {0}")]
    UnknownCustomer(CustomerId),
    #[error("unknown vehicle {0}")]
    UnknownVehicle(VehicleId),
    #[error("expected {expected} routes, found {found}")]
    RouteCountMismatch { expected: usize, found: usize },
    #[error("route for vehicle {found} found where vehicle {expected} was expected")]
    RouteVehicleMismatch {
        expected: VehicleId,
        found: VehicleId,
    },
    #[error("customer {0} is visited more than once")]
    DuplicateVisit(CustomerId),
    #[error("customer {0} is neither routed nor on the market")]
    MissingCustomer(CustomerId),
    #[error("w_dist must lie in [0, 1], got {0}")]
    InvalidWeight(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("insertion position {position} out of range for a route of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("move {0} is not valid for a route of length {1}")]
    InvalidMove(crate::local_search::Move, usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("customer {0} is already on this route")]
    AlreadyRouted(CustomerId),
    #[error("inserting customer {order} at position {position} is infeasible")]
    Infeasible { order: CustomerId, position: usize },
    #[error("insertion position {position} out of range for a route of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
}

/// Construction ran out of bids while orders were still open.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("no vehicle can serve {} open order(s): {unservable:?}", unservable.len())]
pub struct Stalled {
    pub unservable: Vec<CustomerId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("construction stalled: {0}")]
    Stalled(#[from] Stalled),
    #[error("invalid weight schedule: {0}")]
    InvalidSchedule(String),
}
