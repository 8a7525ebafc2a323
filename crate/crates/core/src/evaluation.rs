//! Route schedules, the two objectives, weighted utility, and exact deltas for
//! insertions and intra-route moves.
//!
//! Vehicles leave their home depot when it opens. Arriving before a window
//! opens means waiting; arriving after it closes is allowed and accrues
//! tardiness `arrival - tw_close`. Capacity and a bounded route duration are
//! hard constraints; both waiting and service count towards duration.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, ModelError};
use crate::local_search::Move;
use crate::model::{
    CustomerId, Instance, ObjectiveVector, PreferenceWeights, Route, Solution, VehicleId,
};

/// Slack applied to the hard capacity and duration limits.
pub const FEASIBILITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisitTiming {
    pub customer: CustomerId,
    pub arrival: f64,
    pub wait: f64,
    pub service_start: f64,
    pub departure: f64,
    pub tardiness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSchedule {
    pub vehicle: VehicleId,
    pub start_time: f64,
    pub return_time: f64,
    pub visits: Vec<VisitTiming>,
    pub distance: f64,
    pub duration: f64,
    pub load: f64,
    pub tardiness: f64,
}

impl RouteSchedule {
    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.distance, self.tardiness)
    }

    /// Whether the route respects the vehicle's capacity and duration limit.
    pub fn is_feasible(&self, instance: &Instance) -> bool {
        let Some(spec) = instance.vehicle(self.vehicle) else {
            return false;
        };
        within_limits(
            self.load,
            self.duration,
            spec.capacity,
            spec.max_route_duration,
        )
    }
}

fn within_limits(load: f64, duration: f64, capacity: f64, max_duration: Option<f64>) -> bool {
    load <= capacity + FEASIBILITY_EPS
        && max_duration.is_none_or(|d| duration <= d + FEASIBILITY_EPS)
}

pub fn schedule_route(route: &Route, instance: &Instance) -> Result<RouteSchedule, ModelError> {
    let v = instance
        .vehicle_index(route.vehicle)
        .ok_or(ModelError::UnknownVehicle(route.vehicle))?;
    let depot_node = instance.depot_node(v);
    let start_time = instance.home_depot_of(v).tw_open;

    let mut visits = Vec::with_capacity(route.len());
    let (mut prev, mut time, mut distance, mut load, mut tardiness) =
        (depot_node, start_time, 0.0, 0.0, 0.0);
    for &id in &route.sequence {
        let node = instance
            .customer_index(id)
            .ok_or(ModelError::UnknownCustomer(id))?;
        let c = &instance.customers()[node];
        let leg = instance.dist(prev, node);
        let arrival = time + leg;
        let service_start = arrival.max(c.tw_open);
        let late = (arrival - c.tw_close).max(0.0);
        visits.push(VisitTiming {
            customer: id,
            arrival,
            wait: service_start - arrival,
            service_start,
            departure: service_start + c.service_time,
            tardiness: late,
        });
        distance += leg;
        load += c.demand;
        tardiness += late;
        time = service_start + c.service_time;
        prev = node;
    }
    let back = instance.dist(prev, depot_node);
    distance += back;
    let return_time = time + back;
    Ok(RouteSchedule {
        vehicle: route.vehicle,
        start_time,
        return_time,
        visits,
        distance,
        duration: return_time - start_time,
        load,
        tardiness,
    })
}

/// Total distance and tardiness over all routes. Unassigned orders contribute nothing.
pub fn objectives(solution: &Solution, instance: &Instance) -> Result<ObjectiveVector, ModelError> {
    solution.validate(instance)?;
    solution
        .routes
        .iter()
        .map(|r| schedule_route(r, instance).map(|s| s.objectives()))
        .sum()
}

/// Weighted-sum utility; lower is better.
#[inline]
pub fn utility(obj: ObjectiveVector, w: PreferenceWeights) -> f64 {
    w.w_dist() * obj.dist + w.w_tardy() * obj.tardy
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionDelta {
    pub delta_dist: f64,
    pub delta_tardy: f64,
    pub delta_utility: f64,
    pub feasible: bool,
}

/// Cost change of inserting `order` so that it occupies index `position`
/// (0-based, `0..=route.len()`).
pub fn insertion_delta(
    route: &Route,
    order: CustomerId,
    position: usize,
    instance: &Instance,
    w: PreferenceWeights,
) -> Result<InsertionDelta, EvalError> {
    if position > route.len() {
        return Err(EvalError::PositionOutOfRange {
            position,
            len: route.len(),
        });
    }
    let cache = RouteCache::from_route(route, instance)?;
    let node = instance
        .customer_index(order)
        .ok_or(ModelError::UnknownCustomer(order))?;
    Ok(cache.insertion(instance, node, position, w))
}

/// Change in weighted route cost caused by `mv`.
pub fn move_delta(
    route: &Route,
    mv: &Move,
    instance: &Instance,
    w: PreferenceWeights,
) -> Result<f64, EvalError> {
    if !mv.is_valid_for(route.len()) {
        return Err(EvalError::InvalidMove(*mv, route.len()));
    }
    let cache = RouteCache::from_route(route, instance)?;
    let mut scratch = Vec::new();
    let after = cache.after_move(instance, mv, &mut scratch);
    Ok(utility(after.objectives(), w) - utility(cache.totals().objectives(), w))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct RouteTotals {
    pub dist: f64,
    pub tardy: f64,
    pub load: f64,
    pub duration: f64,
}

impl RouteTotals {
    pub fn objectives(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.dist, self.tardy)
    }
}

/// A route in node-index form with its forward schedule cached per position,
/// so that any splice can be priced by simulating only from the first
/// changed position onwards.
#[derive(Debug, Clone)]
pub(crate) struct RouteCache {
    vehicle: usize,
    depot: usize,
    start: f64,
    nodes: Vec<usize>,
    /// Completion of service at position `i`.
    departure: Vec<f64>,
    /// Distance travelled on arrival at position `i`.
    dist_to: Vec<f64>,
    /// Tardiness accumulated up to and including position `i`.
    tardy_through: Vec<f64>,
    totals: RouteTotals,
}

impl RouteCache {
    pub fn new(instance: &Instance, vehicle: usize, nodes: Vec<usize>) -> Self {
        let mut cache = Self {
            vehicle,
            depot: instance.depot_node(vehicle),
            start: instance.home_depot_of(vehicle).tw_open,
            nodes,
            departure: Vec::new(),
            dist_to: Vec::new(),
            tardy_through: Vec::new(),
            totals: RouteTotals::default(),
        };
        cache.rebuild(instance);
        cache
    }

    pub fn from_route(route: &Route, instance: &Instance) -> Result<Self, ModelError> {
        let v = instance
            .vehicle_index(route.vehicle)
            .ok_or(ModelError::UnknownVehicle(route.vehicle))?;
        let nodes = route
            .sequence
            .iter()
            .map(|&id| {
                instance
                    .customer_index(id)
                    .ok_or(ModelError::UnknownCustomer(id))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(instance, v, nodes))
    }

    pub fn rebuild(&mut self, instance: &Instance) {
        let n = self.nodes.len();
        self.departure.clear();
        self.dist_to.clear();
        self.tardy_through.clear();
        self.departure.reserve(n);
        self.dist_to.reserve(n);
        self.tardy_through.reserve(n);
        let (mut prev, mut time, mut dist, mut tardy, mut load) =
            (self.depot, self.start, 0.0, 0.0, 0.0);
        for &node in &self.nodes {
            let c = &instance.customers()[node];
            dist += instance.dist(prev, node);
            let arrival = time + instance.dist(prev, node);
            tardy += (arrival - c.tw_close).max(0.0);
            time = arrival.max(c.tw_open) + c.service_time;
            load += c.demand;
            self.dist_to.push(dist);
            self.departure.push(time);
            self.tardy_through.push(tardy);
            prev = node;
        }
        dist += instance.dist(prev, self.depot);
        let end = time + instance.dist(prev, self.depot);
        self.totals = RouteTotals {
            dist,
            tardy,
            load,
            duration: end - self.start,
        };
    }

    pub fn vehicle(&self) -> usize {
        self.vehicle
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn totals(&self) -> RouteTotals {
        self.totals
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.contains(&node)
    }

    pub fn is_feasible(&self, instance: &Instance, totals: &RouteTotals) -> bool {
        let spec = &instance.vehicles()[self.vehicle];
        within_limits(
            totals.load,
            totals.duration,
            spec.capacity,
            spec.max_route_duration,
        )
    }

    /// Totals of the route obtained by replacing positions `lo..hi` with
    /// `replacement`.
    pub fn splice(
        &self,
        instance: &Instance,
        lo: usize,
        hi: usize,
        replacement: &[usize],
    ) -> RouteTotals {
        debug_assert!(lo <= hi && hi <= self.nodes.len());
        let customers = instance.customers();
        let (mut prev, mut time, mut dist, mut tardy) = if lo == 0 {
            (self.depot, self.start, 0.0, 0.0)
        } else {
            (
                self.nodes[lo - 1],
                self.departure[lo - 1],
                self.dist_to[lo - 1],
                self.tardy_through[lo - 1],
            )
        };
        let removed: f64 = self.nodes[lo..hi]
            .iter()
            .map(|&n| customers[n].demand)
            .sum();
        let added: f64 = replacement.iter().map(|&n| customers[n].demand).sum();
        let load = self.totals.load - removed + added;

        for &node in replacement {
            let c = &customers[node];
            let leg = instance.dist(prev, node);
            let arrival = time + leg;
            dist += leg;
            tardy += (arrival - c.tw_close).max(0.0);
            time = arrival.max(c.tw_open) + c.service_time;
            prev = node;
        }
        for j in hi..self.nodes.len() {
            let node = self.nodes[j];
            let c = &customers[node];
            let leg = instance.dist(prev, node);
            let arrival = time + leg;
            dist += leg;
            tardy += (arrival - c.tw_close).max(0.0);
            time = arrival.max(c.tw_open) + c.service_time;
            if time == self.departure[j] {
                // Schedules re-synchronised: the rest of the route is unchanged.
                return RouteTotals {
                    dist: dist + (self.totals.dist - self.dist_to[j]),
                    tardy: tardy + (self.totals.tardy - self.tardy_through[j]),
                    load,
                    duration: self.totals.duration,
                };
            }
            prev = node;
        }
        let back = instance.dist(prev, self.depot);
        RouteTotals {
            dist: dist + back,
            tardy,
            load,
            duration: time + back - self.start,
        }
    }

    pub fn insertion(
        &self,
        instance: &Instance,
        node: usize,
        position: usize,
        w: PreferenceWeights,
    ) -> InsertionDelta {
        let after = self.splice(instance, position, position, &[node]);
        let delta_dist = after.dist - self.totals.dist;
        let delta_tardy = after.tardy - self.totals.tardy;
        InsertionDelta {
            delta_dist,
            delta_tardy,
            delta_utility: utility(ObjectiveVector::new(delta_dist, delta_tardy), w),
            feasible: self.is_feasible(instance, &after),
        }
    }

    /// Totals with the order at `position` removed.
    pub fn removal(&self, instance: &Instance, position: usize) -> RouteTotals {
        self.splice(instance, position, position + 1, &[])
    }

    pub fn after_move(
        &self,
        instance: &Instance,
        mv: &Move,
        scratch: &mut Vec<usize>,
    ) -> RouteTotals {
        let (lo, hi) = mv.rewrite(&self.nodes, scratch);
        self.splice(instance, lo, hi, scratch)
    }

    pub fn insert(&mut self, instance: &Instance, node: usize, position: usize) {
        self.nodes.insert(position, node);
        self.rebuild(instance);
    }

    pub fn apply(&mut self, instance: &Instance, mv: &Move) {
        mv.apply_in_place(&mut self.nodes);
        self.rebuild(instance);
    }

    /// Removes the given positions (any order) and returns the removed nodes in route order.
    pub fn remove_positions(&mut self, instance: &Instance, positions: &[usize]) -> Vec<usize> {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let removed: Vec<usize> = sorted.iter().map(|&p| self.nodes[p]).collect();
        for &p in sorted.iter().rev() {
            self.nodes.remove(p);
        }
        self.rebuild(instance);
        removed
    }

    pub fn to_route(&self, instance: &Instance) -> Route {
        Route::new(
            instance.vehicles()[self.vehicle].id,
            self.nodes
                .iter()
                .map(|&n| instance.customers()[n].id)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_search::MoveKind;
    use crate::model::{Customer, Depot, DepotId, Point, VehicleSpec};

    fn instance(customers: Vec<Customer>, capacity: f64, max_duration: Option<f64>) -> Instance {
        Instance::new(
            customers,
            vec![Depot {
                id: DepotId(1),
                location: Point::new(0.0, 0.0),
                tw_open: 0.0,
                tw_close: 1e6,
            }],
            vec![VehicleSpec {
                id: VehicleId(1),
                home_depot: DepotId(1),
                capacity,
                max_route_duration: max_duration,
            }],
        )
        .unwrap()
    }

    fn cust(id: u32, x: f64, y: f64, open: f64, close: f64) -> Customer {
        Customer {
            id: CustomerId(id),
            location: Point::new(x, y),
            demand: 1.0,
            service_time: 0.0,
            tw_open: open,
            tw_close: close,
        }
    }

    fn route(ids: &[u32]) -> Route {
        Route::new(VehicleId(1), ids.iter().map(|&i| CustomerId(i)).collect())
    }

    #[test]
    fn waiting_until_window_opens() {
        let inst = instance(vec![cust(1, 10.0, 0.0, 20.0, 100.0)], 10.0, None);
        let s = schedule_route(&route(&[1]), &inst).unwrap();
        let v = s.visits[0];
        assert_eq!(
            (v.arrival, v.wait, v.service_start, v.tardiness),
            (10.0, 10.0, 20.0, 0.0)
        );
        assert_eq!(s.distance, 20.0);
        assert_eq!(s.duration, 30.0);
    }

    #[test]
    fn late_arrival_is_tardy() {
        let inst = instance(vec![cust(1, 10.0, 0.0, 0.0, 4.0)], 10.0, None);
        let s = schedule_route(&route(&[1]), &inst).unwrap();
        assert_eq!(s.visits[0].tardiness, 6.0);
        assert_eq!(s.tardiness, 6.0);
    }

    #[test]
    fn objectives_of_trivial_solutions() {
        let inst = instance(vec![cust(1, 3.0, 4.0, 0.0, 100.0)], 10.0, None);
        let mut sol = Solution::empty(&inst);
        sol.unassigned.clear();
        sol.routes[0].sequence.push(CustomerId(1));
        assert_eq!(
            objectives(&sol, &inst).unwrap(),
            ObjectiveVector::new(10.0, 0.0)
        );

        sol.routes[0].sequence.clear();
        assert!(objectives(&sol, &inst).is_err());
        sol.unassigned.insert(CustomerId(1));
        assert_eq!(objectives(&sol, &inst).unwrap(), ObjectiveVector::ZERO);
    }

    #[test]
    fn utility_examples() {
        let w1 = PreferenceWeights::new(1.0).unwrap();
        let w0 = PreferenceWeights::new(0.0).unwrap();
        let half = PreferenceWeights::new(0.5).unwrap();
        assert_eq!(utility(ObjectiveVector::new(975.0, 6246.0), w1), 975.0);
        assert_eq!(utility(ObjectiveVector::new(1234.5, 0.0), w0), 0.0);
        assert_eq!(utility(ObjectiveVector::new(1245.0, 63.0), half), 654.0);
    }

    #[test]
    fn insertion_into_empty_route_is_round_trip() {
        let inst = instance(vec![cust(1, 3.0, 4.0, 0.0, 100.0)], 10.0, None);
        let d = insertion_delta(
            &route(&[]),
            CustomerId(1),
            0,
            &inst,
            PreferenceWeights::DISTANCE_ONLY,
        )
        .unwrap();
        assert_eq!(d.delta_dist, 10.0);
        assert_eq!(d.delta_tardy, 0.0);
        assert!(d.feasible);
        assert!(matches!(
            insertion_delta(
                &route(&[]),
                CustomerId(1),
                1,
                &inst,
                PreferenceWeights::DISTANCE_ONLY
            ),
            Err(EvalError::PositionOutOfRange { .. })
        ));
    }

    #[test]
    fn capacity_and_duration_make_insertions_infeasible() {
        let inst = instance(
            vec![cust(1, 3.0, 4.0, 0.0, 100.0), cust(2, 6.0, 8.0, 0.0, 100.0)],
            1.0,
            None,
        );
        let d = insertion_delta(
            &route(&[1]),
            CustomerId(2),
            1,
            &inst,
            PreferenceWeights::DISTANCE_ONLY,
        )
        .unwrap();
        assert!(!d.feasible);

        let inst = instance(
            vec![cust(1, 3.0, 4.0, 0.0, 100.0), cust(2, 6.0, 8.0, 0.0, 100.0)],
            5.0,
            Some(15.0),
        );
        let d = insertion_delta(
            &route(&[1]),
            CustomerId(2),
            1,
            &inst,
            PreferenceWeights::DISTANCE_ONLY,
        )
        .unwrap();
        assert!(!d.feasible, "route length 20 exceeds duration 15");
    }

    #[test]
    fn identity_moves_cost_nothing() {
        let inst = instance(
            vec![
                cust(1, 3.0, 4.0, 0.0, 5.0),
                cust(2, 6.0, 8.0, 0.0, 7.0),
                cust(3, -1.0, 2.0, 30.0, 40.0),
            ],
            10.0,
            None,
        );
        let r = route(&[1, 2, 3]);
        let w = PreferenceWeights::new(0.4).unwrap();
        assert_eq!(
            move_delta(&r, &Move::new(MoveKind::Exchange, 2, 2), &inst, w).unwrap(),
            0.0
        );
        assert!(move_delta(&r, &Move::new(MoveKind::ShiftForward, 2, 2), &inst, w).is_err());
        assert!(move_delta(&r, &Move::new(MoveKind::Invert, 1, 4), &inst, w).is_err());
    }

    #[test]
    fn two_customer_inversion_changes_boundary_arcs_only() {
        // No window is ever binding, so only the two arcs touching the
        // reversed segment change.
        let inst = instance(
            vec![
                cust(1, 10.0, 0.0, 0.0, 1e6),
                cust(2, 10.0, 10.0, 0.0, 1e6),
                cust(3, 0.0, 10.0, 0.0, 1e6),
                cust(4, 5.0, 20.0, 0.0, 1e6),
            ],
            10.0,
            None,
        );
        let r = route(&[1, 3, 2, 4]);
        let d = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
        let expected = d((10.0, 0.0), (10.0, 10.0)) + d((0.0, 10.0), (5.0, 20.0))
            - d((10.0, 0.0), (0.0, 10.0))
            - d((10.0, 10.0), (5.0, 20.0));
        let got = move_delta(
            &r,
            &Move::new(MoveKind::Invert, 2, 3),
            &inst,
            PreferenceWeights::DISTANCE_ONLY,
        )
        .unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn splice_resynchronisation_matches_rebuild() {
        // Wide-open late windows force waiting, which re-synchronises the schedule.
        let inst = instance(
            vec![
                cust(1, 1.0, 0.0, 0.0, 50.0),
                cust(2, 2.0, 0.0, 0.0, 50.0),
                cust(3, 3.0, 0.0, 200.0, 250.0),
                cust(4, 4.0, 0.0, 0.0, 10.0),
            ],
            10.0,
            None,
        );
        let cache = RouteCache::from_route(&route(&[1, 2, 3, 4]), &inst).unwrap();
        let spliced = cache.splice(&inst, 0, 2, &[1]);
        let fresh = RouteCache::from_route(&route(&[1, 3, 4]), &inst)
            .unwrap()
            .totals();
        assert!((spliced.dist - fresh.dist).abs() < 1e-12);
        assert!((spliced.tardy - fresh.tardy).abs() < 1e-12);
        assert!((spliced.duration - fresh.duration).abs() < 1e-12);
        assert_eq!(spliced.load, fresh.load);
    }
}
