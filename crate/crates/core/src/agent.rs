//! Vehicle agents: each owns one route, quotes prices for open orders,
//! accepts won orders, gives orders back on request and improves its own
//! sequence by local search.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, ModelError};
use crate::evaluation::{utility, RouteCache};
use crate::local_search::{descend_cached, improve_step_cached};
use crate::model::{CustomerId, Instance, ObjectiveVector, PreferenceWeights, Route, VehicleId};

/// A priced offer to serve `order` by inserting it at `position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub vehicle: VehicleId,
    pub order: CustomerId,
    /// 0-based index the order would occupy.
    pub position: usize,
    /// Weighted insertion cost under the weights in force when quoted.
    pub price: f64,
    pub delta_dist: f64,
    pub delta_tardy: f64,
    /// Version of the route the quote was computed against.
    pub route_version: u64,
}

/// Which orders an agent gives back when the decider forces a reallocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EjectionRule {
    /// Orders whose individual removal saves the most weighted cost.
    HighestSaving,
    /// Uniformly chosen orders.
    #[default]
    Random,
}

#[derive(Debug, Clone)]
pub struct VehicleAgent {
    id: VehicleId,
    cache: RouteCache,
    version: u64,
    rng: ChaCha8Rng,
    scratch: Vec<usize>,
}

impl VehicleAgent {
    pub fn new(instance: &Instance, vehicle_index: usize, rng: ChaCha8Rng) -> Self {
        Self {
            id: instance.vehicles()[vehicle_index].id,
            cache: RouteCache::new(instance, vehicle_index, Vec::new()),
            version: 0,
            rng,
            scratch: Vec::new(),
        }
    }

    pub fn id(&self) -> VehicleId {
        self.id
    }

    pub fn vehicle_index(&self) -> usize {
        self.cache.vehicle()
    }

    /// Bumped on every route change and on every weight change.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.len() == 0
    }

    pub fn route(&self, instance: &Instance) -> Route {
        self.cache.to_route(instance)
    }

    pub fn objectives(&self) -> ObjectiveVector {
        self.cache.totals().objectives()
    }

    pub fn cost(&self, w: PreferenceWeights) -> f64 {
        utility(self.objectives(), w)
    }

    pub fn is_feasible(&self, instance: &Instance) -> bool {
        self.cache.is_feasible(instance, &self.cache.totals())
    }

    /// Marks all previously issued bids stale.
    pub fn invalidate_quotes(&mut self) {
        self.version += 1;
    }

    /// Replaces the route wholesale (used to restore a recorded solution).
    pub fn set_route(&mut self, instance: &Instance, route: &Route) -> Result<(), ModelError> {
        let cache = RouteCache::from_route(route, instance)?;
        if cache.vehicle() != self.cache.vehicle() {
            return Err(ModelError::RouteVehicleMismatch {
                expected: self.id,
                found: route.vehicle,
            });
        }
        self.cache = cache;
        self.version += 1;
        Ok(())
    }

    /// Cheapest feasible insertion over every position, or `None` when no
    /// position is feasible. Ties go to the earliest position.
    pub fn compute_bid(
        &self,
        instance: &Instance,
        order: CustomerId,
        w: PreferenceWeights,
    ) -> Result<Option<Bid>, AgentError> {
        let node = instance
            .customer_index(order)
            .ok_or(ModelError::UnknownCustomer(order))?;
        if self.cache.contains(node) {
            return Err(AgentError::AlreadyRouted(order));
        }
        Ok(self.quote_node(instance, node, w))
    }

    pub(crate) fn quote_node(
        &self,
        instance: &Instance,
        node: usize,
        w: PreferenceWeights,
    ) -> Option<Bid> {
        let mut best: Option<Bid> = None;
        for position in 0..=self.cache.len() {
            let d = self.cache.insertion(instance, node, position, w);
            if d.feasible && best.is_none_or(|b| d.delta_utility < b.price) {
                best = Some(Bid {
                    vehicle: self.id,
                    order: instance.customers()[node].id,
                    position,
                    price: d.delta_utility,
                    delta_dist: d.delta_dist,
                    delta_tardy: d.delta_tardy,
                    route_version: self.version,
                });
            }
        }
        best
    }

    /// Inserts `order` at `position` if that keeps the route feasible.
    pub fn insert_order(
        &mut self,
        instance: &Instance,
        order: CustomerId,
        position: usize,
    ) -> Result<(), AgentError> {
        let node = instance
            .customer_index(order)
            .ok_or(ModelError::UnknownCustomer(order))?;
        if self.cache.contains(node) {
            return Err(AgentError::AlreadyRouted(order));
        }
        if position > self.cache.len() {
            return Err(AgentError::PositionOutOfRange {
                position,
                len: self.cache.len(),
            });
        }
        let after = self.cache.splice(instance, position, position, &[node]);
        if !self.cache.is_feasible(instance, &after) {
            return Err(AgentError::Infeasible { order, position });
        }
        self.cache.insert(instance, node, position);
        self.version += 1;
        Ok(())
    }

    /// Removes `min(k, len)` orders chosen by `rule` and returns them in route order.
    pub fn eject_orders(
        &mut self,
        instance: &Instance,
        rule: EjectionRule,
        k: usize,
        w: PreferenceWeights,
    ) -> Vec<CustomerId> {
        let k = k.min(self.cache.len());
        if k == 0 {
            return Vec::new();
        }
        let positions: Vec<usize> = if k == self.cache.len() {
            (0..k).collect()
        } else {
            match rule {
                EjectionRule::HighestSaving => {
                    let current = utility(self.cache.totals().objectives(), w);
                    let mut savings: Vec<(f64, usize)> = (0..self.cache.len())
                        .map(|p| {
                            (
                                current - utility(self.cache.removal(instance, p).objectives(), w),
                                p,
                            )
                        })
                        .collect();
                    // Equal savings are common under a single active objective; break them randomly.
                    savings.shuffle(&mut self.rng);
                    savings.sort_by(|a, b| b.0.total_cmp(&a.0));
                    savings.into_iter().take(k).map(|(_, p)| p).collect()
                }
                EjectionRule::Random => sample(&mut self.rng, self.cache.len(), k).into_vec(),
            }
        };
        let removed = self.cache.remove_positions(instance, &positions);
        self.version += 1;
        removed
            .into_iter()
            .map(|n| instance.customers()[n].id)
            .collect()
    }

    /// Local search until `patience` consecutive non-improving steps.
    /// Returns the number of accepted moves.
    pub fn improve(&mut self, instance: &Instance, w: PreferenceWeights, patience: u64) -> u64 {
        let accepted = descend_cached(
            &mut self.cache,
            instance,
            w,
            &mut self.rng,
            patience.max(1),
            &mut self.scratch,
        );
        if accepted > 0 {
            self.version += 1;
        }
        accepted
    }

    /// Exactly `steps` improvement steps; returns the number accepted.
    pub fn improve_burst(&mut self, instance: &Instance, w: PreferenceWeights, steps: u64) -> u64 {
        self.improve_burst_traced(instance, w, steps, |_| {})
    }

    /// Like [`VehicleAgent::improve_burst`], reporting the route cost after every accepted move.
    pub fn improve_burst_traced(
        &mut self,
        instance: &Instance,
        w: PreferenceWeights,
        steps: u64,
        mut on_accept: impl FnMut(f64),
    ) -> u64 {
        if self.cache.len() < 2 {
            return 0;
        }
        let mut accepted = 0;
        for _ in 0..steps {
            let step = improve_step_cached(
                &mut self.cache,
                instance,
                w,
                &mut self.rng,
                &mut self.scratch,
            );
            if step.accepted {
                accepted += 1;
                on_accept(utility(self.cache.totals().objectives(), w));
            }
        }
        if accepted > 0 {
            self.version += 1;
        }
        accepted
    }
}
