//! The order pool and the decider: regret-based assignment of posted orders,
//! stagnation detection and forced reallocation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::agent::{Bid, EjectionRule, VehicleAgent};
use crate::error::Stalled;
use crate::model::{CustomerId, Instance, PreferenceWeights, VehicleId};

/// Orders currently offered for transportation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Market {
    open_orders: BTreeSet<CustomerId>,
}

impl Market {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_all(instance: &Instance) -> Self {
        Self {
            open_orders: instance.customers().iter().map(|c| c.id).collect(),
        }
    }

    pub fn post(&mut self, order: CustomerId) {
        self.open_orders.insert(order);
    }

    pub fn take(&mut self, order: CustomerId) -> bool {
        self.open_orders.remove(&order)
    }

    pub fn open_orders(&self) -> &BTreeSet<CustomerId> {
        &self.open_orders
    }

    pub fn is_empty(&self) -> bool {
        self.open_orders.is_empty()
    }

    pub fn len(&self) -> usize {
        self.open_orders.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretEntry {
    pub order: CustomerId,
    pub best: Bid,
    /// `f64::INFINITY` when only one vehicle bid.
    pub second_best_price: f64,
    pub regret: f64,
}

impl RegretEntry {
    /// Builds the entry from all bids for one order (at most one per vehicle).
    /// The best bid is the cheapest, ties going to the lower vehicle id.
    pub fn from_bids(bids: &[Bid]) -> Option<Self> {
        let best = bids
            .iter()
            .min_by(|a, b| a.price.total_cmp(&b.price).then(a.vehicle.cmp(&b.vehicle)))?;
        let second = bids
            .iter()
            .filter(|b| b.vehicle != best.vehicle)
            .map(|b| b.price)
            .min_by(f64::total_cmp)
            .unwrap_or(f64::INFINITY);
        Some(Self {
            order: best.order,
            best: *best,
            second_best_price: second,
            regret: second - best.price,
        })
    }

    /// Whether `self` should be assigned before `other`: larger regret, then
    /// lower best price, then lower order id.
    fn precedes(&self, other: &Self) -> bool {
        self.regret
            .total_cmp(&other.regret)
            .reverse()
            .then(self.best.price.total_cmp(&other.best.price))
            .then(self.order.cmp(&other.order))
            .is_lt()
    }
}

/// Current bids per open order.
pub type QuoteBook = BTreeMap<CustomerId, Vec<Bid>>;

#[derive(Debug, Clone, PartialEq)]
pub enum Assignment {
    Assign(RegretEntry),
    /// Orders are open but none received a bid.
    Stalled,
    /// Some quotes were computed against outdated routes or weights.
    Requote(Vec<VehicleId>),
    MarketEmpty,
}

/// Picks the open order with the largest regret and hands it to its best bidder.
///
/// `current_version` reports each vehicle's route version; any bid whose
/// version differs is stale and blocks the assignment.
pub fn assign_next(
    market: &Market,
    quotes: &QuoteBook,
    current_version: &dyn Fn(VehicleId) -> u64,
) -> Assignment {
    if market.is_empty() {
        return Assignment::MarketEmpty;
    }
    let mut stale: BTreeSet<VehicleId> = BTreeSet::new();
    let mut chosen: Option<RegretEntry> = None;
    for order in market.open_orders() {
        let Some(bids) = quotes.get(order) else {
            continue;
        };
        stale.extend(
            bids.iter()
                .filter(|b| b.route_version != current_version(b.vehicle))
                .map(|b| b.vehicle),
        );
        if let Some(entry) = RegretEntry::from_bids(bids) {
            if chosen.is_none_or(|c| entry.precedes(&c)) {
                chosen = Some(entry);
            }
        }
    }
    if !stale.is_empty() {
        return Assignment::Requote(stale.into_iter().collect());
    }
    chosen.map_or(Assignment::Stalled, Assignment::Assign)
}

/// Quotes cached per (order, vehicle) and refreshed only for vehicles whose
/// version moved.
struct QuoteCache {
    orders: Vec<CustomerId>,
    nodes: Vec<usize>,
    bids: Vec<Vec<Option<Bid>>>,
}

impl QuoteCache {
    fn new(
        instance: &Instance,
        market: &Market,
        agents: &[VehicleAgent],
        w: PreferenceWeights,
    ) -> Self {
        let orders: Vec<CustomerId> = market.open_orders().iter().copied().collect();
        let nodes = orders
            .iter()
            .map(|&o| {
                instance
                    .customer_index(o)
                    .expect("market holds instance customers")
            })
            .collect();
        let mut cache = Self {
            orders,
            nodes,
            bids: vec![vec![None; agents.len()]; market.len()],
        };
        for v in 0..agents.len() {
            cache.refresh(instance, agents, v, w);
        }
        cache
    }

    fn refresh(
        &mut self,
        instance: &Instance,
        agents: &[VehicleAgent],
        v: usize,
        w: PreferenceWeights,
    ) {
        for (i, &node) in self.nodes.iter().enumerate() {
            self.bids[i][v] = agents[v].quote_node(instance, node, w);
        }
    }

    fn remove(&mut self, order: CustomerId) {
        if let Some(i) = self.orders.iter().position(|&o| o == order) {
            self.orders.remove(i);
            self.nodes.remove(i);
            self.bids.remove(i);
        }
    }

    fn book(&self) -> QuoteBook {
        self.orders
            .iter()
            .zip(&self.bids)
            .map(|(&o, bids)| (o, bids.iter().flatten().copied().collect()))
            .collect()
    }
}

/// Assigns open orders one at a time by maximum regret until the market is
/// empty. On `Stalled` the orders that could not be placed stay on the market.
pub fn construct(
    market: &mut Market,
    agents: &mut [VehicleAgent],
    instance: &Instance,
    w: PreferenceWeights,
) -> Result<usize, Stalled> {
    let mut quotes = QuoteCache::new(instance, market, agents, w);
    let mut assigned = 0;
    loop {
        let book = quotes.book();
        let versions: Vec<(VehicleId, u64)> =
            agents.iter().map(|a| (a.id(), a.version())).collect();
        let version_of = |id: VehicleId| {
            versions
                .iter()
                .find(|(v, _)| *v == id)
                .map_or(u64::MAX, |&(_, ver)| ver)
        };
        match assign_next(market, &book, &version_of) {
            Assignment::MarketEmpty => return Ok(assigned),
            Assignment::Stalled => {
                return Err(Stalled {
                    unservable: market.open_orders().iter().copied().collect(),
                });
            }
            Assignment::Requote(stale) => {
                for id in stale {
                    let v = agents
                        .iter()
                        .position(|a| a.id() == id)
                        .expect("bids come from known agents");
                    quotes.refresh(instance, agents, v, w);
                }
            }
            Assignment::Assign(entry) => {
                let v = agents
                    .iter()
                    .position(|a| a.id() == entry.best.vehicle)
                    .expect("bids come from known agents");
                agents[v]
                    .insert_order(instance, entry.order, entry.best.position)
                    .expect("fresh bids are feasible");
                market.take(entry.order);
                quotes.remove(entry.order);
                quotes.refresh(instance, agents, v, w);
                assigned += 1;
            }
        }
    }
}

/// Tracks progress of the improvement procedures under fixed weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagnationMonitor {
    pub best_utility_seen: f64,
    pub iterations_since_improvement: u64,
    pub patience: u64,
    pub ejection_size: usize,
}

/// Minimum decrease of the global utility that counts as progress.
pub const STAGNATION_EPS: f64 = 1e-9;

impl StagnationMonitor {
    pub fn new(patience: u64, ejection_size: usize) -> Self {
        Self {
            best_utility_seen: f64::INFINITY,
            iterations_since_improvement: 0,
            patience,
            ejection_size,
        }
    }

    /// Records one improvement iteration ending at `current_utility`.
    /// Returns whether the search is stagnant.
    pub fn check_stagnation(&mut self, current_utility: f64) -> bool {
        self.observe(current_utility, 1)
    }

    /// Records `iterations` improvement iterations ending at `current_utility`.
    pub fn observe(&mut self, current_utility: f64, iterations: u64) -> bool {
        if current_utility < self.best_utility_seen - STAGNATION_EPS {
            self.best_utility_seen = current_utility;
            self.iterations_since_improvement = 0;
        } else {
            self.iterations_since_improvement += iterations;
        }
        self.is_stagnant()
    }

    pub fn is_stagnant(&self) -> bool {
        self.iterations_since_improvement >= self.patience
    }

    /// Starts over, e.g. after the weights changed.
    pub fn reset(&mut self, current_utility: f64) {
        self.best_utility_seen = current_utility;
        self.iterations_since_improvement = 0;
    }

    pub fn restart_count(&mut self) {
        self.iterations_since_improvement = 0;
    }
}

/// Forces every agent to post back up to `monitor.ejection_size` orders.
/// Returns the orders now on the market.
pub fn reallocate(
    market: &mut Market,
    agents: &mut [VehicleAgent],
    monitor: &StagnationMonitor,
    rule: EjectionRule,
    instance: &Instance,
    w: PreferenceWeights,
) -> Vec<CustomerId> {
    let mut ejected = Vec::new();
    for agent in agents.iter_mut() {
        for order in agent.eject_orders(instance, rule, monitor.ejection_size, w) {
            market.post(order);
            ejected.push(order);
        }
    }
    ejected
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::{Customer, Depot, DepotId, Point, VehicleSpec};

    fn bid(vehicle: u32, order: u32, price: f64) -> Bid {
        Bid {
            vehicle: VehicleId(vehicle),
            order: CustomerId(order),
            position: 0,
            price,
            delta_dist: price,
            delta_tardy: 0.0,
            route_version: 0,
        }
    }

    fn market(ids: &[u32]) -> Market {
        let mut m = Market::new();
        ids.iter().for_each(|&i| m.post(CustomerId(i)));
        m
    }

    #[test]
    fn max_regret_wins() {
        let mut book = QuoteBook::new();
        book.insert(CustomerId(1), vec![bid(1, 1, 10.0), bid(2, 1, 12.0)]);
        book.insert(CustomerId(2), vec![bid(1, 2, 30.0), bid(2, 2, 5.0)]);
        match assign_next(&market(&[1, 2]), &book, &|_| 0) {
            Assignment::Assign(e) => {
                assert_eq!(e.order, CustomerId(2));
                assert_eq!(e.best.vehicle, VehicleId(2));
                assert_eq!(e.regret, 25.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_bidder_has_infinite_regret() {
        let mut book = QuoteBook::new();
        book.insert(CustomerId(1), vec![bid(1, 1, 10.0), bid(2, 1, 500.0)]);
        book.insert(CustomerId(2), vec![bid(3, 2, 90.0)]);
        let Assignment::Assign(e) = assign_next(&market(&[1, 2]), &book, &|_| 0) else {
            panic!()
        };
        assert_eq!(e.order, CustomerId(2));
        assert!(e.regret.is_infinite() && e.second_best_price.is_infinite());
    }

    #[test]
    fn ties_break_on_price_then_id() {
        let mut book = QuoteBook::new();
        book.insert(CustomerId(5), vec![bid(1, 5, 4.0), bid(2, 5, 6.0)]);
        book.insert(CustomerId(3), vec![bid(1, 3, 4.0), bid(2, 3, 6.0)]);
        book.insert(CustomerId(4), vec![bid(1, 4, 3.0), bid(2, 4, 5.0)]);
        let Assignment::Assign(e) = assign_next(&market(&[3, 4, 5]), &book, &|_| 0) else {
            panic!()
        };
        assert_eq!(e.order, CustomerId(4));
        book.remove(&CustomerId(4));
        let Assignment::Assign(e) = assign_next(&market(&[3, 5]), &book, &|_| 0) else {
            panic!()
        };
        assert_eq!(e.order, CustomerId(3));
    }

    #[test]
    fn stale_and_stalled() {
        let mut book = QuoteBook::new();
        book.insert(CustomerId(1), vec![bid(1, 1, 10.0)]);
        assert_eq!(
            assign_next(&market(&[1]), &book, &|_| 1),
            Assignment::Requote(vec![VehicleId(1)])
        );
        book.clear();
        assert_eq!(
            assign_next(&market(&[1]), &book, &|_| 0),
            Assignment::Stalled
        );
        assert_eq!(
            assign_next(&market(&[]), &book, &|_| 0),
            Assignment::MarketEmpty
        );
    }

    #[test]
    fn stagnation_counter() {
        let mut m = StagnationMonitor::new(3, 2);
        for u in [10.0, 9.0, 8.0, 7.0, 6.0] {
            assert!(!m.check_stagnation(u));
        }
        assert!(!m.check_stagnation(6.0));
        assert!(!m.check_stagnation(6.0));
        // Improvement on the last allowed iteration resets the counter.
        assert!(!m.check_stagnation(5.0));
        assert!(!m.check_stagnation(5.0));
        assert!(!m.check_stagnation(5.0 - 1e-12));
        assert!(m.check_stagnation(5.0));
    }

    fn tiny(capacity: f64, demands: &[f64]) -> Instance {
        let customers = demands
            .iter()
            .enumerate()
            .map(|(i, &d)| Customer {
                id: CustomerId(i as u32 + 1),
                location: Point::new(i as f64 + 1.0, 0.0),
                demand: d,
                service_time: 0.0,
                tw_open: 0.0,
                tw_close: 100.0,
            })
            .collect();
        Instance::new(
            customers,
            vec![Depot {
                id: DepotId(1),
                location: Point::new(0.0, 0.0),
                tw_open: 0.0,
                tw_close: 100.0,
            }],
            vec![VehicleSpec {
                id: VehicleId(1),
                home_depot: DepotId(1),
                capacity,
                max_route_duration: None,
            }],
        )
        .unwrap()
    }

    fn agents(inst: &Instance) -> Vec<VehicleAgent> {
        (0..inst.vehicles().len())
            .map(|v| VehicleAgent::new(inst, v, ChaCha8Rng::seed_from_u64(v as u64)))
            .collect()
    }

    #[test]
    fn construct_single_customer() {
        let inst = tiny(10.0, &[1.0]);
        let mut m = Market::with_all(&inst);
        let mut a = agents(&inst);
        assert_eq!(
            construct(&mut m, &mut a, &inst, PreferenceWeights::DISTANCE_ONLY),
            Ok(1)
        );
        assert!(m.is_empty());
        assert_eq!(a[0].objectives().dist, 2.0);
    }

    #[test]
    fn construct_stalls_on_capacity() {
        let inst = tiny(10.0, &[6.0, 6.0]);
        let mut m = Market::with_all(&inst);
        let mut a = agents(&inst);
        let err = construct(&mut m, &mut a, &inst, PreferenceWeights::DISTANCE_ONLY).unwrap_err();
        assert_eq!(err.unservable.len(), 1);
        assert_eq!(m.len(), 1);
        assert_eq!(a[0].len(), 1);
    }

    #[test]
    fn reallocate_with_zero_ejection_is_noop() {
        let inst = tiny(10.0, &[1.0, 1.0]);
        let mut m = Market::with_all(&inst);
        let mut a = agents(&inst);
        construct(&mut m, &mut a, &inst, PreferenceWeights::DISTANCE_ONLY).unwrap();
        let monitor = StagnationMonitor::new(10, 0);
        let out = reallocate(
            &mut m,
            &mut a,
            &monitor,
            EjectionRule::HighestSaving,
            &inst,
            PreferenceWeights::DISTANCE_ONLY,
        );
        assert!(out.is_empty() && m.is_empty());
    }
}
