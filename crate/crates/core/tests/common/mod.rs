//! Independent oracles and instance generators shared by the integration tests.
//!
//! Nothing here uses the solver's evaluation code: schedules are simulated
//! straight from coordinates, and optima come from exhaustive enumeration.

#![allow(dead_code)]

use marketvrp_core::{
    Customer, CustomerId, Depot, DepotId, Instance, MoveKind, ObjectiveVector, Point,
    PreferenceWeights, Route, Solution, VehicleId, VehicleSpec,
};
use rand::Rng;

pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval {
    pub dist: f64,
    pub tardy: f64,
    pub load: f64,
    pub duration: f64,
    pub feasible: bool,
}

impl Eval {
    pub fn utility(&self, w: f64) -> f64 {
        w * self.dist + (1.0 - w) * self.tardy
    }
}

/// Simulates a closed route of vehicle `vehicle_index` visiting `seq`.
pub fn simulate(inst: &Instance, vehicle_index: usize, seq: &[CustomerId]) -> Eval {
    let v = &inst.vehicles()[vehicle_index];
    let depot = inst.depots().iter().find(|d| d.id == v.home_depot).unwrap();
    let leg = |a: Point, b: Point| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    let (mut t, mut at, mut dist, mut tardy, mut load) =
        (depot.tw_open, depot.location, 0.0, 0.0, 0.0);
    for id in seq {
        let c = inst.customers().iter().find(|c| c.id == *id).unwrap();
        let d = leg(at, c.location);
        dist += d;
        let arrival = t + d;
        if arrival > c.tw_close {
            tardy += arrival - c.tw_close;
        }
        t = if arrival < c.tw_open {
            c.tw_open
        } else {
            arrival
        } + c.service_time;
        load += c.demand;
        at = c.location;
    }
    let d = leg(at, depot.location);
    dist += d;
    let duration = t + d - depot.tw_open;
    let feasible =
        load <= v.capacity + TOL && v.max_route_duration.is_none_or(|m| duration <= m + TOL);
    Eval {
        dist,
        tardy,
        load,
        duration,
        feasible,
    }
}

pub fn simulate_route(inst: &Instance, route: &Route) -> Eval {
    let vi = inst
        .vehicles()
        .iter()
        .position(|v| v.id == route.vehicle)
        .unwrap();
    simulate(inst, vi, &route.sequence)
}

pub fn simulate_solution(inst: &Instance, sol: &Solution) -> (ObjectiveVector, bool) {
    let evals: Vec<Eval> = sol.routes.iter().map(|r| simulate_route(inst, r)).collect();
    let obj = ObjectiveVector::new(
        evals.iter().map(|e| e.dist).sum(),
        evals.iter().map(|e| e.tardy).sum(),
    );
    (obj, evals.iter().all(|e| e.feasible))
}

/// Every customer appears exactly once across routes and the unassigned pool.
pub fn partition_holds(inst: &Instance, sol: &Solution) -> bool {
    let mut seen: Vec<CustomerId> = sol
        .routes
        .iter()
        .flat_map(|r| r.sequence.iter().copied())
        .collect();
    seen.extend(sol.unassigned.iter().copied());
    seen.sort();
    let mut all: Vec<CustomerId> = inst.customers().iter().map(|c| c.id).collect();
    all.sort();
    seen == all
        && sol.routes.len() == inst.vehicles().len()
        && sol
            .routes
            .iter()
            .zip(inst.vehicles())
            .all(|(r, v)| r.vehicle == v.id)
}

#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub customers: usize,
    pub vehicles: usize,
    pub depots: usize,
    /// Fraction of total demand one vehicle can carry.
    pub capacity_share: f64,
    pub duration_limit: Option<f64>,
}

/// Customers in a 100 x 100 square with windows that make tardiness likely
/// but not unavoidable.
pub fn random_instance<R: Rng>(rng: &mut R, spec: GenSpec) -> Instance {
    let customers: Vec<Customer> = (0..spec.customers)
        .map(|i| {
            let open = rng.random_range(0.0..150.0);
            Customer {
                id: CustomerId(i as u32 + 1),
                location: Point::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)),
                demand: f64::from(rng.random_range(1..=10u32)),
                service_time: rng.random_range(0.0..10.0),
                tw_open: open,
                tw_close: open + rng.random_range(10.0..80.0),
            }
        })
        .collect();
    let depots: Vec<Depot> = (0..spec.depots)
        .map(|k| Depot {
            id: DepotId(k as u32 + 100),
            location: Point::new(rng.random_range(20.0..80.0), rng.random_range(20.0..80.0)),
            tw_open: 0.0,
            tw_close: 1000.0,
        })
        .collect();
    let total: f64 = customers.iter().map(|c| c.demand).sum();
    let max_demand = customers.iter().map(|c| c.demand).fold(0.0, f64::max);
    let capacity = (total * spec.capacity_share).ceil().max(max_demand);
    let vehicles = (0..spec.vehicles)
        .map(|v| VehicleSpec {
            id: VehicleId(v as u32 + 1),
            home_depot: depots[v % spec.depots].id,
            capacity,
            max_route_duration: spec.duration_limit,
        })
        .collect();
    Instance::new(customers, depots, vehicles).unwrap()
}

/// Random permutation of a random subset of `pool`, of length `len`.
pub fn random_sequence<R: Rng>(rng: &mut R, pool: &[CustomerId], len: usize) -> Vec<CustomerId> {
    let mut ids = pool.to_vec();
    for i in 0..len.min(ids.len()) {
        let j = rng.random_range(i..ids.len());
        ids.swap(i, j);
    }
    ids.truncate(len);
    ids
}

/// The sequence a move produces, written directly from its definition.
pub fn permute_oracle<T: Copy>(seq: &[T], kind: MoveKind, p1: usize, p2: usize) -> Option<Vec<T>> {
    let n = seq.len();
    if p1 < 1 || p2 < 1 || p1 > n || p2 > n {
        return None;
    }
    let at = |k: usize| seq[k - 1];
    let out = match kind {
        MoveKind::Invert if p1 <= p2 => (1..=n)
            .map(|k| {
                if (p1..=p2).contains(&k) {
                    at(p1 + p2 - k)
                } else {
                    at(k)
                }
            })
            .collect(),
        MoveKind::Exchange if p1 <= p2 => (1..=n)
            .map(|k| {
                if k == p1 {
                    at(p2)
                } else if k == p2 {
                    at(p1)
                } else {
                    at(k)
                }
            })
            .collect(),
        // The order at p1 moves to p2; everything between slides one place towards p1.
        MoveKind::ShiftForward if p1 < p2 => (1..=n)
            .map(|k| {
                if k < p1 || k > p2 {
                    at(k)
                } else if k == p2 {
                    at(p1)
                } else {
                    at(k + 1)
                }
            })
            .collect(),
        MoveKind::ShiftBackward if p1 > p2 => (1..=n)
            .map(|k| {
                if k < p2 || k > p1 {
                    at(k)
                } else if k == p2 {
                    at(p1)
                } else {
                    at(k - 1)
                }
            })
            .collect(),
        _ => return None,
    };
    Some(out)
}

fn for_each_permutation(items: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        for_each_permutation(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Minimum utility over every complete, feasible solution, or `None` if
/// none exists. Exponential; meant for a handful of customers.
pub fn exhaustive_optimum(inst: &Instance, w: PreferenceWeights) -> Option<f64> {
    let n = inst.customers().len();
    let m = inst.vehicles().len();
    let ids: Vec<CustomerId> = inst.customers().iter().map(|c| c.id).collect();
    let wd = w.w_dist();
    // Best utility of every (vehicle, subset) pair.
    let mut best = vec![vec![f64::INFINITY; 1 << n]; m];
    for (v, row) in best.iter_mut().enumerate() {
        for (mask, slot) in row.iter_mut().enumerate() {
            let mut members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            for_each_permutation(&mut members, 0, &mut |perm| {
                let seq: Vec<CustomerId> = perm.iter().map(|&i| ids[i]).collect();
                let e = simulate(inst, v, &seq);
                if e.feasible {
                    *slot = slot.min(e.utility(wd));
                }
            });
        }
    }
    // Combine vehicles over disjoint subsets covering everything.
    let full = (1usize << n) - 1;
    let mut acc = best[0].clone();
    for row in &best[1..] {
        let mut next = vec![f64::INFINITY; 1 << n];
        for mask in 0..=full {
            let mut sub = mask;
            loop {
                let u = acc[sub] + row[mask ^ sub];
                if u < next[mask] {
                    next[mask] = u;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
        acc = next;
    }
    acc[full].is_finite().then_some(acc[full])
}
