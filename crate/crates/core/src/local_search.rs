//! The four intra-route neighbourhoods and randomized first-improvement descent.
//!
//! Positions are 1-indexed, matching how moves are written down: `Invert(2, 4)`
//! reverses the second through fourth orders. A shifted order ends up
//! occupying position `p2` of the resulting sequence.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::evaluation::{utility, RouteCache};
use crate::model::{Instance, PreferenceWeights, Route};

/// A move is accepted only if it lowers the weighted cost by more than this.
pub const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Invert,
    Exchange,
    ShiftForward,
    ShiftBackward,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [
        MoveKind::Invert,
        MoveKind::Exchange,
        MoveKind::ShiftForward,
        MoveKind::ShiftBackward,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub p1: usize,
    pub p2: usize,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({}, {})", self.kind, self.p1, self.p2)
    }
}

impl Move {
    pub const fn new(kind: MoveKind, p1: usize, p2: usize) -> Self {
        Self { kind, p1, p2 }
    }

    /// Index and ordering check. `Invert` and `Exchange` with `p1 == p2` are
    /// accepted as identity moves; the shifts need a strict ordering.
    pub fn is_valid_for(&self, len: usize) -> bool {
        let in_range = (1..=len).contains(&self.p1) && (1..=len).contains(&self.p2);
        in_range
            && match self.kind {
                MoveKind::Invert | MoveKind::Exchange => self.p1 <= self.p2,
                MoveKind::ShiftForward => self.p1 < self.p2,
                MoveKind::ShiftBackward => self.p1 > self.p2,
            }
    }

    /// Writes the rearranged block into `out` and returns the 0-based
    /// half-open range `lo..hi` of `seq` it replaces.
    pub(crate) fn rewrite<T: Copy>(&self, seq: &[T], out: &mut Vec<T>) -> (usize, usize) {
        out.clear();
        let (a, b) = (self.p1 - 1, self.p2 - 1);
        match self.kind {
            MoveKind::Invert => {
                out.extend(seq[a..=b].iter().rev());
                (a, b + 1)
            }
            MoveKind::Exchange => {
                if a == b {
                    out.push(seq[a]);
                } else {
                    out.push(seq[b]);
                    out.extend_from_slice(&seq[a + 1..b]);
                    out.push(seq[a]);
                }
                (a, b + 1)
            }
            MoveKind::ShiftForward => {
                out.extend_from_slice(&seq[a + 1..=b]);
                out.push(seq[a]);
                (a, b + 1)
            }
            MoveKind::ShiftBackward => {
                out.push(seq[a]);
                out.extend_from_slice(&seq[b..a]);
                (b, a + 1)
            }
        }
    }

    pub(crate) fn apply_in_place<T>(&self, seq: &mut [T]) {
        let (a, b) = (self.p1 - 1, self.p2 - 1);
        match self.kind {
            MoveKind::Invert => seq[a..=b].reverse(),
            MoveKind::Exchange => seq.swap(a, b),
            MoveKind::ShiftForward => seq[a..=b].rotate_left(1),
            MoveKind::ShiftBackward => seq[b..=a].rotate_right(1),
        }
    }

    /// Draws a kind uniformly, then a position pair uniformly from that
    /// kind's valid set. Needs `len >= 2`.
    pub fn sample<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        debug_assert!(len >= 2);
        let kind = MoveKind::ALL[rng.random_range(0..4)];
        let i = rng.random_range(0..len);
        let mut j = rng.random_range(0..len - 1);
        if j >= i {
            j += 1;
        }
        let (lo, hi) = (i.min(j) + 1, i.max(j) + 1);
        match kind {
            MoveKind::ShiftBackward => Move::new(kind, hi, lo),
            _ => Move::new(kind, lo, hi),
        }
    }
}

pub fn apply_move(route: &Route, mv: &Move) -> Result<Route, EvalError> {
    if !mv.is_valid_for(route.len()) {
        return Err(EvalError::InvalidMove(*mv, route.len()));
    }
    let mut out = route.clone();
    mv.apply_in_place(&mut out.sequence);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub route: Route,
    pub improved: bool,
    /// The move that was evaluated, if the route was long enough to sample one.
    pub attempted: Option<Move>,
    pub delta: f64,
}

/// Outcome of one step on a cached route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CachedStep {
    pub attempted: Option<Move>,
    pub accepted: bool,
    pub delta: f64,
}

/// Evaluates `mv` and applies it iff it is feasible and strictly improving.
pub(crate) fn try_move_cached(
    cache: &mut RouteCache,
    instance: &Instance,
    w: PreferenceWeights,
    mv: Move,
    scratch: &mut Vec<usize>,
) -> CachedStep {
    let before = cache.totals();
    let after = cache.after_move(instance, &mv, scratch);
    let delta = utility(after.objectives(), w) - utility(before.objectives(), w);
    let accepted = delta < -IMPROVEMENT_EPS && cache.is_feasible(instance, &after);
    if accepted {
        cache.apply(instance, &mv);
    }
    CachedStep {
        attempted: Some(mv),
        accepted,
        delta,
    }
}

pub(crate) fn improve_step_cached<R: Rng + ?Sized>(
    cache: &mut RouteCache,
    instance: &Instance,
    w: PreferenceWeights,
    rng: &mut R,
    scratch: &mut Vec<usize>,
) -> CachedStep {
    if cache.len() < 2 {
        return CachedStep {
            attempted: None,
            accepted: false,
            delta: 0.0,
        };
    }
    let mv = Move::sample(cache.len(), rng);
    try_move_cached(cache, instance, w, mv, scratch)
}

/// Applies improving steps until `patience` consecutive steps fail.
pub(crate) fn descend_cached<R: Rng + ?Sized>(
    cache: &mut RouteCache,
    instance: &Instance,
    w: PreferenceWeights,
    rng: &mut R,
    patience: u64,
    scratch: &mut Vec<usize>,
) -> u64 {
    if cache.len() < 2 {
        return 0;
    }
    let (mut failures, mut accepted) = (0, 0);
    while failures < patience {
        if improve_step_cached(cache, instance, w, rng, scratch).accepted {
            failures = 0;
            accepted += 1;
        } else {
            failures += 1;
        }
    }
    accepted
}

/// One randomized first-improvement step.
pub fn improve_step<R: Rng + ?Sized>(
    route: &Route,
    instance: &Instance,
    w: PreferenceWeights,
    rng: &mut R,
) -> Result<StepResult, EvalError> {
    let mut cache = RouteCache::from_route(route, instance)?;
    let step = improve_step_cached(&mut cache, instance, w, rng, &mut Vec::new());
    Ok(StepResult {
        route: if step.accepted {
            cache.to_route(instance)
        } else {
            route.clone()
        },
        improved: step.accepted,
        attempted: step.attempted,
        delta: step.delta,
    })
}

/// The acceptance rule of [`improve_step`] applied to a chosen move.
pub fn try_move(
    route: &Route,
    mv: Move,
    instance: &Instance,
    w: PreferenceWeights,
) -> Result<StepResult, EvalError> {
    if !mv.is_valid_for(route.len()) {
        return Err(EvalError::InvalidMove(mv, route.len()));
    }
    let mut cache = RouteCache::from_route(route, instance)?;
    let step = try_move_cached(&mut cache, instance, w, mv, &mut Vec::new());
    Ok(StepResult {
        route: if step.accepted {
            cache.to_route(instance)
        } else {
            route.clone()
        },
        improved: step.accepted,
        attempted: step.attempted,
        delta: step.delta,
    })
}

/// Repeats [`improve_step`] until `patience` consecutive steps fail to improve.
pub fn descend<R: Rng + ?Sized>(
    route: &Route,
    instance: &Instance,
    w: PreferenceWeights,
    rng: &mut R,
    patience: u64,
) -> Result<Route, EvalError> {
    let mut cache = RouteCache::from_route(route, instance)?;
    descend_cached(
        &mut cache,
        instance,
        w,
        rng,
        patience.max(1),
        &mut Vec::new(),
    );
    Ok(cache.to_route(instance))
}

/// Every valid move of every kind on a route of length `len`.
pub fn enumerate_moves(len: usize) -> impl Iterator<Item = Move> {
    let pairs = move || (1..=len).flat_map(move |a| (a + 1..=len).map(move |b| (a, b)));
    MoveKind::ALL.into_iter().flat_map(move |kind| {
        pairs().map(move |(a, b)| match kind {
            MoveKind::ShiftBackward => Move::new(kind, b, a),
            _ => Move::new(kind, a, b),
        })
    })
}
