//! Reader and writer for the Cordeau multi-depot VRPTW text format.
//!
//! ```text
//! type m n t
//! D Q                      (t lines; D = 0 means no duration limit)
//! id x y service demand freq ncombos combo... tw_open tw_close   (n customers)
//! id x y service demand freq ncombos combo... tw_open tw_close   (t depots)
//! ```
//!
//! Tokens are consumed positionally; line breaks only matter for diagnostics.
//! Visit frequency and combinations are read and discarded.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Customer, CustomerId, Depot, DepotId, Instance, Point, VehicleId, VehicleSpec};

/// Largest node count the parser will build a distance matrix for.
pub const MAX_NODES: usize = 10_000;

/// The 48-customer, 4-depot instance used throughout the tests and benches.
pub const PR01: &str = include_str!("../data/pr01.txt");

pub fn pr01() -> Instance {
    parse_cordeau(PR01).expect("bundled instance parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseIssueKind {
    MalformedHeader,
    BadFieldCount,
    NonNumericToken,
    InconsistentCounts,
    NegativeValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseIssue {
    /// 1-based.
    pub line: usize,
    pub kind: ParseIssueKind,
    pub message: String,
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {:?}: {}", self.line, self.kind, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub issues: Vec<ParseIssue>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.issues.len();
        write!(f, "{n} parse issue{}", if n == 1 { "" } else { "s" })?;
        for issue in &self.issues {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SerializeError {
    #[error("depot {0} has no vehicles or a different number than the first depot")]
    UnevenFleet(DepotId),
    #[error("vehicles of depot {0} differ in capacity or route duration")]
    MixedFleet(DepotId),
    #[error("vehicle ids are not numbered 1.. in depot order")]
    NonCanonicalVehicleIds,
}

struct Token<'a> {
    text: &'a str,
    line: usize,
}

struct Reader<'a> {
    tokens: std::iter::Peekable<std::vec::IntoIter<Token<'a>>>,
    last_line: usize,
    issues: Vec<ParseIssue>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        let tokens: Vec<Token<'a>> = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| {
                l.split_whitespace().map(move |t| Token {
                    text: t,
                    line: i + 1,
                })
            })
            .collect();
        Self {
            tokens: tokens.into_iter().peekable(),
            last_line: 1,
            issues: Vec::new(),
        }
    }

    fn issue(&mut self, line: usize, kind: ParseIssueKind, message: impl Into<String>) {
        self.issues.push(ParseIssue {
            line,
            kind,
            message: message.into(),
        });
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.tokens.next()?;
        self.last_line = t.line;
        Some(t)
    }

    /// Next token as a finite number; `None` if input ended (reported by the caller)
    /// or the token was not numeric (reported here, with NaN standing in).
    fn number(&mut self, what: &str) -> Option<(f64, usize)> {
        let t = self.next()?;
        match t.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Some((v, t.line)),
            _ => {
                self.issue(
                    t.line,
                    ParseIssueKind::NonNumericToken,
                    format!("{what}: expected a number, found {:?}", t.text),
                );
                Some((f64::NAN, t.line))
            }
        }
    }

    fn integer(&mut self, what: &str) -> Option<(Option<u32>, usize)> {
        let t = self.next()?;
        match t.text.parse::<u32>() {
            Ok(v) => Some((Some(v), t.line)),
            Err(_) => {
                self.issue(
                    t.line,
                    ParseIssueKind::NonNumericToken,
                    format!(
                        "{what}: expected a non-negative integer, found {:?}",
                        t.text
                    ),
                );
                Some((None, t.line))
            }
        }
    }
}

struct Record {
    line: usize,
    id: Option<u32>,
    x: f64,
    y: f64,
    service: f64,
    demand: f64,
    tw_open: f64,
    tw_close: f64,
}

/// Reads one node record; `None` if the input ends inside it.
fn read_record(r: &mut Reader<'_>, what: &str) -> Option<Record> {
    let start = r.tokens.peek().map(|t| t.line)?;
    let truncated = |r: &mut Reader<'_>| {
        let line = r.last_line;
        r.issue(
            line,
            ParseIssueKind::BadFieldCount,
            format!("{what} record starting on line {start} is truncated"),
        );
    };
    let (id, _) = r.integer(&format!("{what} id"))?;
    let mut fields = [0.0; 4];
    for (slot, name) in fields.iter_mut().zip(["x", "y", "service time", "demand"]) {
        let Some((v, _)) = r.number(name) else {
            truncated(r);
            return None;
        };
        *slot = v;
    }
    let Some((_freq, _)) = r.number("visit frequency") else {
        truncated(r);
        return None;
    };
    let Some((combos, line)) = r.integer("combination count") else {
        truncated(r);
        return None;
    };
    if combos.is_some_and(|c| c as usize > r.tokens.len()) {
        r.issue(
            line,
            ParseIssueKind::BadFieldCount,
            format!(
                "combination count {} exceeds the remaining input",
                combos.unwrap()
            ),
        );
        return None;
    }
    for _ in 0..combos.unwrap_or(0) {
        r.next();
    }
    let mut tw = [0.0; 2];
    for (slot, name) in tw.iter_mut().zip(["time window open", "time window close"]) {
        let Some((v, _)) = r.number(name) else {
            truncated(r);
            return None;
        };
        *slot = v;
    }
    let [x, y, service, demand] = fields;
    let rec = Record {
        line: start,
        id,
        x,
        y,
        service,
        demand,
        tw_open: tw[0],
        tw_close: tw[1],
    };
    for (v, name) in [
        (service, "service time"),
        (demand, "demand"),
        (rec.tw_open, "time window open"),
    ] {
        if v < 0.0 {
            r.issue(
                start,
                ParseIssueKind::NegativeValue,
                format!("{what} {name} is negative"),
            );
        }
    }
    if rec.tw_open > rec.tw_close {
        r.issue(
            start,
            ParseIssueKind::NegativeValue,
            format!("{what} time window closes before it opens"),
        );
    }
    Some(rec)
}

/// Parses a whole instance, collecting every detectable issue.
pub fn parse_cordeau(text: &str) -> Result<Instance, ParseError> {
    use ParseIssueKind::*;
    let mut r = Reader::new(text);

    let mut header = [None; 4];
    for (slot, name) in header.iter_mut().zip([
        "problem type",
        "vehicles per depot",
        "customer count",
        "depot count",
    ]) {
        match r.next() {
            Some(t) => match t.text.parse::<usize>() {
                Ok(v) => *slot = Some(v),
                Err(_) => {
                    let msg = format!(
                        "{name}: expected a non-negative integer, found {:?}",
                        t.text
                    );
                    r.issue(t.line, MalformedHeader, msg);
                }
            },
            None => {
                let line = r.last_line;
                r.issue(
                    line,
                    MalformedHeader,
                    format!("header ends before the {name}"),
                );
                return Err(ParseError { issues: r.issues });
            }
        }
    }
    let [_, Some(m), Some(n), Some(t)] = header else {
        return Err(ParseError { issues: r.issues });
    };
    if m == 0 || t == 0 {
        r.issue(
            1,
            MalformedHeader,
            "need at least one depot and one vehicle per depot",
        );
        return Err(ParseError { issues: r.issues });
    }
    if n.saturating_add(t) > MAX_NODES || m.saturating_mul(t) > MAX_NODES {
        r.issue(
            1,
            MalformedHeader,
            format!("instance exceeds {MAX_NODES} nodes or vehicles"),
        );
        return Err(ParseError { issues: r.issues });
    }

    let mut limits = Vec::new();
    for k in 0..t {
        let (Some((d, line)), Some((q, _))) =
            (r.number("max route duration"), r.number("max load"))
        else {
            let line = r.last_line;
            r.issue(
                line,
                InconsistentCounts,
                format!("expected {t} depot constraint lines, found {k}"),
            );
            return Err(ParseError { issues: r.issues });
        };
        if d < 0.0 || q < 0.0 {
            r.issue(
                line,
                NegativeValue,
                "route duration and load limits must be non-negative",
            );
        }
        limits.push((d, q));
    }

    let mut customers = Vec::new();
    let mut complete = true;
    while customers.len() < n {
        match read_record(&mut r, "customer") {
            Some(rec) => customers.push(rec),
            None => {
                complete = false;
                break;
            }
        }
    }
    let mut depots = Vec::new();
    while complete && depots.len() < t {
        match read_record(&mut r, "depot") {
            Some(rec) => depots.push(rec),
            None => complete = false,
        }
    }
    if !complete || customers.len() < n || depots.len() < t {
        let line = r.last_line;
        r.issue(
            line,
            InconsistentCounts,
            format!(
                "header declares {n} customers and {t} depots, found {} and {}",
                customers.len(),
                depots.len()
            ),
        );
    } else if let Some(tok) = r.next() {
        r.issue(
            tok.line,
            InconsistentCounts,
            format!("unexpected data after the last depot: {:?}", tok.text),
        );
    }
    for (recs, what) in [(&customers, "customer"), (&depots, "depot")] {
        let mut seen = std::collections::BTreeSet::new();
        for rec in recs.iter() {
            if let Some(id) = rec.id {
                if !seen.insert(id) {
                    r.issue(
                        rec.line,
                        InconsistentCounts,
                        format!("duplicate {what} id {id}"),
                    );
                }
            }
        }
    }
    if !r.issues.is_empty() {
        return Err(ParseError { issues: r.issues });
    }

    let customers = customers
        .into_iter()
        .map(|c| Customer {
            id: CustomerId(c.id.expect("checked")),
            location: Point::new(c.x, c.y),
            demand: c.demand,
            service_time: c.service,
            tw_open: c.tw_open,
            tw_close: c.tw_close,
        })
        .collect();
    let mut vehicles = Vec::with_capacity(m * t);
    let depots: Vec<Depot> = depots
        .into_iter()
        .zip(&limits)
        .enumerate()
        .map(|(k, (d, &(duration, capacity)))| {
            let id = DepotId(d.id.expect("checked"));
            for j in 0..m {
                vehicles.push(VehicleSpec {
                    id: VehicleId((k * m + j + 1) as u32),
                    home_depot: id,
                    capacity,
                    max_route_duration: (duration > 0.0).then_some(duration),
                });
            }
            Depot {
                id,
                location: Point::new(d.x, d.y),
                tw_open: d.tw_open,
                tw_close: d.tw_close,
            }
        })
        .collect();
    Instance::new(customers, depots, vehicles).map_err(|e| ParseError {
        issues: vec![ParseIssue {
            line: 1,
            kind: InconsistentCounts,
            message: e.to_string(),
        }],
    })
}

/// Writes `instance` with problem type 6. Fails if the fleet cannot be
/// expressed as `m` identical vehicles per depot numbered 1.. in depot order.
pub fn serialize_cordeau(instance: &Instance) -> Result<String, SerializeError> {
    use std::fmt::Write;
    let depots = instance.depots();
    let vehicles = instance.vehicles();
    let m = vehicles.len() / depots.len().max(1);
    let mut limits = Vec::with_capacity(depots.len());
    for (k, depot) in depots.iter().enumerate() {
        let fleet = vehicles.get(k * m..(k + 1) * m).unwrap_or_default();
        if m == 0 || fleet.len() != m || fleet.iter().any(|v| v.home_depot != depot.id) {
            return Err(SerializeError::UnevenFleet(depot.id));
        }
        if fleet
            .iter()
            .enumerate()
            .any(|(j, v)| v.id.0 as usize != k * m + j + 1)
        {
            return Err(SerializeError::NonCanonicalVehicleIds);
        }
        let first = &fleet[0];
        if fleet.iter().any(|v| {
            v.capacity != first.capacity || v.max_route_duration != first.max_route_duration
        }) {
            return Err(SerializeError::MixedFleet(depot.id));
        }
        limits.push((first.max_route_duration.unwrap_or(0.0), first.capacity));
    }
    if vehicles.len() != m * depots.len() {
        return Err(SerializeError::UnevenFleet(depots[0].id));
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "6 {} {} {}",
        m,
        instance.customers().len(),
        depots.len()
    );
    for (d, q) in limits {
        let _ = writeln!(out, "{d} {q}");
    }
    for c in instance.customers() {
        let _ = writeln!(
            out,
            "{} {} {} {} {} 1 1 1 {} {}",
            c.id, c.location.x, c.location.y, c.service_time, c.demand, c.tw_open, c.tw_close
        );
    }
    for d in depots {
        let _ = writeln!(
            out,
            "{} {} {} 0 0 0 0 {} {}",
            d.id, d.location.x, d.location.y, d.tw_open, d.tw_close
        );
    }
    Ok(out)
}
