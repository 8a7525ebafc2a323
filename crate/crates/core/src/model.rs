//! Immutable problem data and the mutable [`Solution`] shared by every other module.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_newtype!(
    /// Identifier of a customer (a transport order).
    CustomerId
);
id_newtype!(DepotId);
id_newtype!(VehicleId);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean travel time between two nodes. Distance and travel time are the
/// same quantity throughout the crate.
#[inline]
pub fn travel_time(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: CustomerId,
    pub location: Point,
    pub demand: f64,
    pub service_time: f64,
    pub tw_open: f64,
    pub tw_close: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Depot {
    pub id: DepotId,
    pub location: Point,
    pub tw_open: f64,
    pub tw_close: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub id: VehicleId,
    pub home_depot: DepotId,
    pub capacity: f64,
    /// `None` means the route duration is unbounded.
    pub max_route_duration: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Metric {
    #[default]
    Euclidean,
}

/// Validated, immutable problem instance.
///
/// Nodes are indexed densely: customers occupy `0..n` in the order given at
/// construction, depots follow at `n..n + t`. Pairwise travel times are
/// precomputed.
#[derive(Debug, Clone)]
pub struct Instance {
    customers: Vec<Customer>,
    depots: Vec<Depot>,
    vehicles: Vec<VehicleSpec>,
    metric: Metric,
    locations: Vec<Point>,
    matrix: Vec<f64>,
    vehicle_depot: Vec<usize>,
    lookup: CustomerLookup,
}

#[derive(Debug, Clone)]
enum CustomerLookup {
    /// Customer `i` has id `i + 1`.
    Contiguous,
    Sorted(Vec<(CustomerId, usize)>),
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.customers == other.customers
            && self.depots == other.depots
            && self.vehicles == other.vehicles
            && self.metric == other.metric
    }
}

impl Instance {
    pub fn new(
        customers: Vec<Customer>,
        depots: Vec<Depot>,
        vehicles: Vec<VehicleSpec>,
    ) -> Result<Self, ModelError> {
        for c in &customers {
            let finite = [
                c.location.x,
                c.location.y,
                c.demand,
                c.service_time,
                c.tw_open,
                c.tw_close,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !finite {
                return Err(ModelError::InvalidCustomer(c.id, "non-finite field"));
            }
            if c.demand < 0.0 {
                return Err(ModelError::InvalidCustomer(c.id, "negative demand"));
            }
            if c.service_time < 0.0 {
                return Err(ModelError::InvalidCustomer(c.id, "negative service time"));
            }
            if c.tw_open > c.tw_close {
                return Err(ModelError::InvalidCustomer(
                    c.id,
                    "time window opens after it closes",
                ));
            }
        }
        for d in &depots {
            let finite = [d.location.x, d.location.y, d.tw_open, d.tw_close]
                .iter()
                .all(|v| v.is_finite());
            if !finite || d.tw_open > d.tw_close {
                return Err(ModelError::InvalidDepot(d.id));
            }
        }
        for v in &vehicles {
            let duration_ok = match v.max_route_duration {
                Some(t) => t.is_finite() && t > 0.0,
                None => true,
            };
            if !(v.capacity.is_finite() && v.capacity >= 0.0) || !duration_ok {
                return Err(ModelError::InvalidVehicle(v.id));
            }
        }

        let mut sorted: Vec<(CustomerId, usize)> = customers
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id, i))
            .collect();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ModelError::DuplicateCustomer(w[0].0));
        }
        let mut depot_ids: Vec<DepotId> = depots.iter().map(|d| d.id).collect();
        depot_ids.sort_unstable();
        if let Some(w) = depot_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateDepot(w[0]));
        }
        let mut vehicle_ids: Vec<VehicleId> = vehicles.iter().map(|v| v.id).collect();
        vehicle_ids.sort_unstable();
        if let Some(w) = vehicle_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateVehicle(w[0]));
        }

        let n = customers.len();
        let mut vehicle_depot = Vec::with_capacity(vehicles.len());
        for v in &vehicles {
            let k = depots.iter().position(|d| d.id == v.home_depot).ok_or(
                ModelError::UnknownDepot {
                    vehicle: v.id,
                    depot: v.home_depot,
                },
            )?;
            vehicle_depot.push(n + k);
        }

        let locations: Vec<Point> = customers
            .iter()
            .map(|c| c.location)
            .chain(depots.iter().map(|d| d.location))
            .collect();
        let size = locations.len();
        let mut matrix = vec![0.0; size * size];
        for (i, a) in locations.iter().enumerate() {
            for (j, b) in locations.iter().enumerate().skip(i + 1) {
                let d = travel_time(*a, *b);
                matrix[i * size + j] = d;
                matrix[j * size + i] = d;
            }
        }

        let lookup = if customers
            .iter()
            .enumerate()
            .all(|(i, c)| c.id.0 as usize == i + 1)
        {
            CustomerLookup::Contiguous
        } else {
            CustomerLookup::Sorted(sorted)
        };

        Ok(Self {
            customers,
            depots,
            vehicles,
            metric: Metric::Euclidean,
            locations,
            matrix,
            vehicle_depot,
            lookup,
        })
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn depots(&self) -> &[Depot] {
        &self.depots
    }

    pub fn vehicles(&self) -> &[VehicleSpec] {
        &self.vehicles
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn customer(&self, id: CustomerId) -> Option<&Customer> {
        self.customer_index(id).map(|i| &self.customers[i])
    }

    pub fn depot(&self, id: DepotId) -> Option<&Depot> {
        self.depots.iter().find(|d| d.id == id)
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleSpec> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    /// Position of the customer in [`Instance::customers`].
    pub fn customer_index(&self, id: CustomerId) -> Option<usize> {
        match &self.lookup {
            CustomerLookup::Contiguous => {
                let i = (id.0 as usize).checked_sub(1)?;
                (i < self.customers.len()).then_some(i)
            }
            CustomerLookup::Sorted(table) => table
                .binary_search_by_key(&id, |&(cid, _)| cid)
                .ok()
                .map(|k| table[k].1),
        }
    }

    pub fn vehicle_index(&self, id: VehicleId) -> Option<usize> {
        self.vehicles.iter().position(|v| v.id == id)
    }

    /// Home depot of the `v`-th vehicle.
    pub fn home_depot_of(&self, vehicle_index: usize) -> &Depot {
        &self.depots[self.vehicle_depot[vehicle_index] - self.customers.len()]
    }

    pub(crate) fn depot_node(&self, vehicle_index: usize) -> usize {
        self.vehicle_depot[vehicle_index]
    }

    #[inline]
    pub(crate) fn dist(&self, a: usize, b: usize) -> f64 {
        self.matrix[a * self.locations.len() + b]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub vehicle: VehicleId,
    pub sequence: Vec<CustomerId>,
}

impl Route {
    pub fn new(vehicle: VehicleId, sequence: Vec<CustomerId>) -> Self {
        Self { vehicle, sequence }
    }

    pub fn empty(vehicle: VehicleId) -> Self {
        Self::new(vehicle, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// One route per vehicle (in instance order) plus the orders still on the market.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub unassigned: BTreeSet<CustomerId>,
}

impl Solution {
    /// Every vehicle idle, every customer on the market.
    pub fn empty(instance: &Instance) -> Self {
        Self {
            routes: instance
                .vehicles()
                .iter()
                .map(|v| Route::empty(v.id))
                .collect(),
            unassigned: instance.customers().iter().map(|c| c.id).collect(),
        }
    }

    /// Checks the partition invariant and the route/vehicle correspondence.
    pub fn validate(&self, instance: &Instance) -> Result<(), ModelError> {
        if self.routes.len() != instance.vehicles().len() {
            return Err(ModelError::RouteCountMismatch {
                expected: instance.vehicles().len(),
                found: self.routes.len(),
            });
        }
        let mut seen = vec![false; instance.customers().len()];
        let mut mark = |id: CustomerId| -> Result<(), ModelError> {
            let i = instance
                .customer_index(id)
                .ok_or(ModelError::UnknownCustomer(id))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(ModelError::DuplicateVisit(id));
            }
            Ok(())
        };
        for (route, spec) in self.routes.iter().zip(instance.vehicles()) {
            if route.vehicle != spec.id {
                return Err(ModelError::RouteVehicleMismatch {
                    expected: spec.id,
                    found: route.vehicle,
                });
            }
            for &id in &route.sequence {
                mark(id)?;
            }
        }
        for &id in &self.unassigned {
            mark(id)?;
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(ModelError::MissingCustomer(instance.customers()[i].id)),
            None => Ok(()),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.unassigned.is_empty()
    }
}

/// The two criteria: total travelled distance and total tardiness.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub dist: f64,
    pub tardy: f64,
}

impl ObjectiveVector {
    pub const ZERO: Self = Self {
        dist: 0.0,
        tardy: 0.0,
    };

    pub fn new(dist: f64, tardy: f64) -> Self {
        Self { dist, tardy }
    }
}

impl std::ops::Add for ObjectiveVector {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.dist + rhs.dist, self.tardy + rhs.tardy)
    }
}

impl std::iter::Sum for ObjectiveVector {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

/// Relative importance of distance; tardiness receives `1 - w_dist`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PreferenceWeights {
    w_dist: f64,
}

impl PreferenceWeights {
    pub const DISTANCE_ONLY: Self = Self { w_dist: 1.0 };
    pub const TARDINESS_ONLY: Self = Self { w_dist: 0.0 };

    pub fn new(w_dist: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&w_dist) {
            Ok(Self { w_dist })
        } else {
            Err(ModelError::InvalidWeight(w_dist))
        }
    }

    pub fn w_dist(self) -> f64 {
        self.w_dist
    }

    pub fn w_tardy(self) -> f64 {
        1.0 - self.w_dist
    }
}

impl TryFrom<f64> for PreferenceWeights {
    type Error = ModelError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<PreferenceWeights> for f64 {
    fn from(w: PreferenceWeights) -> f64 {
        w.w_dist
    }
}
