use marketvrp_core::cordeau::{ParseIssueKind, PR01};
use marketvrp_core::*;
use proptest::prelude::*;

fn canonical_instance() -> impl Strategy<Value = Instance> {
    let customer = (
        -100.0..100.0f64,
        -100.0..100.0f64,
        0.0..30.0f64,
        0u32..40,
        0.0..500.0f64,
        0.0..200.0f64,
    );
    let depot = (
        -100.0..100.0f64,
        -100.0..100.0f64,
        0.0..100.0f64,
        500.0..2000.0f64,
    );
    (
        prop::collection::vec(customer, 1..15),
        prop::collection::vec(depot, 1..4),
        1usize..4,
        prop::collection::vec((1u32..300, prop::option::of(50.0..1000.0f64)), 4),
    )
        .prop_map(|(cs, ds, m, limits)| {
            let customers = cs
                .into_iter()
                .enumerate()
                .map(|(i, (x, y, s, q, open, width))| Customer {
                    id: CustomerId(i as u32 + 1),
                    location: Point::new(x, y),
                    demand: f64::from(q),
                    service_time: s,
                    tw_open: open,
                    tw_close: open + width,
                })
                .collect();
            let n = ds.len();
            let depots: Vec<Depot> = ds
                .into_iter()
                .enumerate()
                .map(|(k, (x, y, open, close))| Depot {
                    id: DepotId((100 + k) as u32),
                    location: Point::new(x, y),
                    tw_open: open,
                    tw_close: close,
                })
                .collect();
            let vehicles = (0..n * m)
                .map(|v| VehicleSpec {
                    id: VehicleId(v as u32 + 1),
                    home_depot: depots[v / m].id,
                    capacity: f64::from(limits[v / m].0),
                    max_route_duration: limits[v / m].1,
                })
                .collect();
            Instance::new(customers, depots, vehicles).unwrap()
        })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(inst in canonical_instance()) {
        let text = serialize_cordeau(&inst).unwrap();
        prop_assert_eq!(parse_cordeau(&text).unwrap(), inst);
    }

    #[test]
    fn parser_never_panics_on_noise(text in "[0-9 .\\-\\nxe]{0,400}") {
        if let Err(e) = parse_cordeau(&text) {
            prop_assert!(!e.issues.is_empty());
            prop_assert!(e.issues.iter().all(|i| i.line >= 1));
        }
    }

    #[test]
    fn parser_survives_corrupted_pr01(cut in 0usize..PR01.len(), junk in "[a-z0-9\\- ]{0,6}") {
        let mut text = PR01[..cut].to_string();
        text.push_str(&junk);
        text.push_str(&PR01[cut..]);
        match parse_cordeau(&text) {
            Ok(inst) => prop_assert_eq!(inst.vehicles().len(), 8),
            Err(e) => prop_assert!(e.issues.iter().all(|i| i.line >= 1 && !i.message.is_empty())),
        }
    }

    #[test]
    fn truncated_pr01_reports_counts(cut in 20usize..PR01.len() - 10) {
        let text = &PR01[..PR01[..cut].rfind('\n').unwrap()];
        let issues = parse_cordeau(text).unwrap_err().issues;
        prop_assert!(issues.iter().any(|i| i.kind == ParseIssueKind::InconsistentCounts));
    }
}

#[test]
fn pr01_round_trips() {
    let inst = pr01();
    assert_eq!(
        parse_cordeau(&serialize_cordeau(&inst).unwrap()).unwrap(),
        inst
    );
}

#[test]
fn pr01_depots_carry_their_windows() {
    let inst = pr01();
    let d = &inst.depots()[0];
    assert_eq!(
        (d.id, d.location, d.tw_open, d.tw_close),
        (DepotId(49), Point::new(4.163, 13.559), 0.0, 1000.0)
    );
    assert!(inst
        .vehicles()
        .iter()
        .all(|v| v.capacity == 200.0 && v.max_route_duration == Some(500.0)));
    assert_eq!(inst.vehicles()[2].home_depot, DepotId(50));
}

#[test]
fn minimal_instance_text() {
    let inst = Instance::new(
        vec![Customer {
            id: CustomerId(1),
            location: Point::new(1.5, -2.0),
            demand: 3.0,
            service_time: 0.25,
            tw_open: 10.0,
            tw_close: 20.0,
        }],
        vec![Depot {
            id: DepotId(2),
            location: Point::new(0.0, 0.0),
            tw_open: 0.0,
            tw_close: 100.0,
        }],
        vec![VehicleSpec {
            id: VehicleId(1),
            home_depot: DepotId(2),
            capacity: 8.0,
            max_route_duration: None,
        }],
    )
    .unwrap();
    assert_eq!(
        serialize_cordeau(&inst).unwrap(),
        "6 1 1 1\n0 8\n1 1.5 -2 0.25 3 1 1 1 10 20\n2 0 0 0 0 0 0 0 100\n"
    );
}

#[test]
fn header_count_mismatch() {
    let text = PR01.replacen("6 2 48 4", "6 2 47 4", 1);
    let issues = parse_cordeau(&text).unwrap_err().issues;
    assert!(
        issues
            .iter()
            .any(|i| i.kind == ParseIssueKind::InconsistentCounts),
        "{issues:?}"
    );
}

#[test]
fn non_canonical_fleets_are_refused() {
    let inst = Instance::new(
        vec![],
        vec![Depot {
            id: DepotId(1),
            location: Point::new(0.0, 0.0),
            tw_open: 0.0,
            tw_close: 1.0,
        }],
        vec![
            VehicleSpec {
                id: VehicleId(1),
                home_depot: DepotId(1),
                capacity: 1.0,
                max_route_duration: None,
            },
            VehicleSpec {
                id: VehicleId(2),
                home_depot: DepotId(1),
                capacity: 2.0,
                max_route_duration: None,
            },
        ],
    )
    .unwrap();
    assert!(serialize_cordeau(&inst).is_err());
}
