use flowlab_core::analytic;
use flowlab_core::fluid::{self, FluidError, FluidEvent, FluidOptions, Trajectory};
use flowlab_core::{DetectionMode, Discipline, RttMode, Scenario, ScenarioDoc, SteadyStateSummary};

fn run(s: &Scenario) -> Trajectory {
    fluid::simulate(s).expect("fluid run")
}

fn summary(s: &Scenario, warmup: f64) -> SteadyStateSummary {
    run(s).summarize(warmup).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// The 20/50 ms pair at 10 Mbps.
fn pair(disc: Discipline, buffer_kb: f64) -> ScenarioDoc {
    ScenarioDoc::new(10.0, buffer_kb, disc).tcp(20.0).tcp(50.0)
}

fn first_saturated_sample(traj: &Trajectory) -> Option<usize> {
    let (b, c) = (traj.scenario().buffer_pkts(), traj.scenario().capacity());
    traj.samples()
        .position(|s| s.total_queue() >= b * (1.0 - 1e-6) && s.total_rate() > c)
}

fn check_invariants(traj: &Trajectory) {
    let s = traj.scenario();
    let (b, c) = (s.buffer_pkts(), s.capacity());
    let mut last_t = f64::NEG_INFINITY;
    for x in traj.samples() {
        assert!(x.t > last_t, "times not increasing at {}", x.t);
        last_t = x.t;
        assert!(x
            .a
            .iter()
            .chain(x.q)
            .chain(x.d)
            .chain(x.l)
            .all(|v| *v >= 0.0 && v.is_finite()));
        assert!(
            x.total_queue() <= b * (1.0 + 1e-9),
            "ΣQ = {} > B at {}",
            x.total_queue(),
            x.t
        );
        let served: f64 = x.d.iter().sum();
        let backlogged = x.total_queue() > 1e-9 * b || x.total_rate() >= c;
        let want = if backlogged { c } else { x.total_rate() };
        assert!(
            (served - want).abs() <= 1e-9 * c,
            "ΣD = {served}, want {want} at t = {}",
            x.t
        );
    }
    if let Some(i) = first_saturated_sample(traj) {
        for x in traj.samples().skip(i) {
            assert!(x.total_queue() >= b * (1.0 - 1e-6), "buffer left full at t = {}", x.t);
            if s.flows().len() == 2 {
                assert!((x.q[0] + x.q[1] - b).abs() <= 1e-6 * b);
            }
        }
    }
}

#[test]
fn invariants_hold_for_every_discipline_and_mix() {
    for disc in Discipline::ALL {
        for doc in [
            pair(disc, 150.0).horizon(20.0),
            pair(disc, 150.0).horizon(20.0).rtt_mode(RttMode::QueueAugmented),
            ScenarioDoc::new(10.0, 150.0, disc).tcp(30.0).udp(3.0).horizon(20.0),
            ScenarioDoc::new(10.0, 150.0, disc).tcp(30.0).udp(7.0).horizon(20.0),
            ScenarioDoc::new(2.0, 600.0, disc)
                .tcp(10.0)
                .tcp(40.0)
                .tcp(80.0)
                .horizon(20.0),
        ] {
            let traj = run(&doc.build().unwrap());
            assert!(traj.first_saturation().is_some(), "{disc}: never saturated");
            check_invariants(&traj);
        }
    }
}

#[test]
fn delayed_detection_keeps_basic_invariants() {
    for disc in Discipline::ALL {
        let s = pair(disc, 150.0)
            .horizon(20.0)
            .detection_mode(DetectionMode::Delayed)
            .build()
            .unwrap();
        let traj = run(&s);
        for x in traj.samples() {
            assert!(x.a.iter().chain(x.q).all(|v| *v >= 0.0));
            assert!(x.total_queue() <= s.buffer_pkts() * (1.0 + 1e-9));
        }
        let sum = traj.summarize(10.0).unwrap();
        assert!(sum.utilization >= 0.97, "{disc}: {}", sum.utilization);
    }
}

#[test]
fn bit_identical_reruns() {
    let s = pair(Discipline::Sqf, 150.0).horizon(5.0).build().unwrap();
    let mut first = Vec::new();
    let mut second = Vec::new();
    run(&s).write_csv(&mut first).unwrap();
    run(&s).write_csv(&mut second).unwrap();
    assert_eq!(first, second);
    let header = String::from_utf8(first[..first.iter().position(|&b| b == b'\n').unwrap()].to_vec()).unwrap();
    assert_eq!(header, "t,A1,A2,Q1,Q2,D1,D2,L1,L2");
}

#[test]
fn halving_the_step_moves_summaries_less_than_half_a_percent() {
    let cases = [
        (pair(Discipline::Fq, 150.0).horizon(60.0), 10.0),
        (pair(Discipline::Lqf, 150.0).horizon(60.0), 10.0),
        (pair(Discipline::Sqf, 4500.0).horizon(60.0), 20.0),
    ];
    for (doc, warmup) in cases {
        let s = doc.build().unwrap();
        let coarse_dt = fluid::FluidModel::from_scenario(&s).default_step();
        let summarize = |dt: f64| {
            let opts = FluidOptions {
                dt: Some(dt),
                ..FluidOptions::default()
            };
            fluid::simulate_with(&s, &opts).unwrap().summarize(warmup).unwrap()
        };
        let (a, b) = (summarize(coarse_dt), summarize(coarse_dt / 2.0));
        for (fa, fb) in a.flows.iter().zip(&b.flows) {
            for (x, y) in [
                (fa.sending_rate, fb.sending_rate),
                (fa.throughput, fb.throughput),
                (fa.mean_queue.unwrap(), fb.mean_queue.unwrap()),
                (fa.loss_rate, fb.loss_rate),
            ] {
                assert!(rel(x, y) < 5e-3, "{}: {x} vs {y}", s.discipline());
            }
        }
    }
}

#[test]
fn step_guard_reports_the_flow() {
    // a coarse step against a large loss rate
    let s = pair(Discipline::Sqf, 150.0).horizon(5.0).build().unwrap();
    let opts = FluidOptions {
        dt: Some(5e-3),
        sample_period: 5e-3,
    };
    match fluid::simulate_with(&s, &opts) {
        Err(FluidError::StepTooLarge { flow, fraction, .. }) => {
            assert!(flow == 1 || flow == 2);
            assert!(fraction > 20.0);
        }
        other => panic!("expected StepTooLarge, got {other:?}"),
    }
    let bad = FluidOptions {
        dt: Some(-1.0),
        ..FluidOptions::default()
    };
    assert!(matches!(
        fluid::simulate_with(&s, &bad),
        Err(FluidError::InvalidOption(_))
    ));
    assert!(matches!(
        run(&s).summarize(5.0),
        Err(FluidError::WarmupBeyondHorizon { .. })
    ));
}

#[test]
fn single_flow_fills_the_link() {
    for disc in Discipline::ALL {
        let s = ScenarioDoc::new(10.0, 150.0, disc)
            .tcp(40.0)
            .horizon(30.0)
            .build()
            .unwrap();
        let sum = summary(&s, 10.0);
        assert!(sum.utilization > 0.999, "{disc}: {}", sum.utilization);
    }
}

#[test]
fn identical_flows_share_fq_evenly() {
    let s = ScenarioDoc::new(10.0, 150.0, Discipline::Fq)
        .tcp(30.0)
        .tcp(30.0)
        .horizon(30.0)
        .build()
        .unwrap();
    let sum = summary(&s, 10.0);
    let c = s.capacity();
    for f in &sum.flows {
        assert!(rel(f.throughput, c / 2.0) < 1e-3);
        assert!(rel(f.mean_queue.unwrap(), 50.0) < 1e-3);
    }
}

#[test]
fn constant_rtt_matches_fq_and_lqf_closed_forms() {
    for disc in [Discipline::Fq, Discipline::Lqf] {
        let s = pair(disc, 150.0).horizon(60.0).build().unwrap();
        let fl = summary(&s, 10.0);
        let an = analytic::analyze(&s).unwrap();
        for (f, a) in fl.flows.iter().zip(&an.flows) {
            assert!(rel(f.throughput, a.throughput) < 5e-3, "{disc} X {f:?} {a:?}");
            assert!(rel(f.sending_rate, a.sending_rate) < 5e-3, "{disc} A {f:?} {a:?}");
        }
    }
}

#[test]
fn sqf_limit_cycle_matches_closed_form() {
    // The cycle needs B ≥ C²/β (1736 packets here).
    let s = pair(Discipline::Sqf, 4500.0).horizon(120.0).build().unwrap();
    let fl = summary(&s, 40.0);
    let an = analytic::analyze(&s).unwrap();
    let c = s.capacity();
    let period = 2.0 * c * (1.0 / 2500.0 + 1.0 / 400.0);
    assert!(rel(fl.cycle_period.unwrap(), period) < 0.01, "{:?}", fl.cycle_period);
    for (f, a) in fl.flows.iter().zip(&an.flows) {
        assert!((f.throughput - a.throughput).abs() < 0.02 * c, "{f:?} {a:?}");
        assert!(rel(f.mean_queue.unwrap(), a.mean_queue.unwrap()) < 0.03, "{f:?} {a:?}");
        assert!(rel(f.sending_rate, a.sending_rate) < 0.03, "{f:?} {a:?}");
    }
}

#[test]
fn symmetric_sqf_period_is_four_c_over_alpha() {
    let doc = ScenarioDoc::parse(
        "capacity_mbps = 10\nbuffer_kb = 1500\ndiscipline = sqf\nhorizon_s = 40\n\
         [flow] kind=tcp rtt_ms=20 initial_rate_pps=200\n[flow] kind=tcp rtt_ms=20\n",
    )
    .unwrap();
    let s = doc.build().unwrap();
    let traj = run(&s);
    let want = 4.0 * s.capacity() / 2500.0;
    let got = traj.service_period(10.0).unwrap();
    assert!(rel(got, want) < 0.01, "{got} vs {want}");
}

#[test]
fn short_rtt_sqf_alternates_with_mirrored_queues() {
    let s = ScenarioDoc::new(10.0, 150.0, Discipline::Sqf)
        .tcp(2.0)
        .tcp(6.0)
        .horizon(4.0)
        .build()
        .unwrap();
    let traj = run(&s);
    let ts = traj.first_saturation().unwrap();
    let switches: Vec<usize> = traj
        .service_switches()
        .filter(|(t, _)| *t > ts)
        .map(|(_, k)| k)
        .collect();
    assert!(switches.len() >= 6, "{switches:?}");
    assert!(switches.windows(2).all(|w| w[0] != w[1]));
    assert!(traj
        .events()
        .iter()
        .any(|e| matches!(e, FluidEvent::MeetingPoint { .. })));
    let half = s.buffer_pkts() / 2.0;
    for x in traj.samples().filter(|x| x.t > ts) {
        assert!(((x.q[0] - half) + (x.q[1] - half)).abs() <= 1e-6 * s.buffer_pkts());
    }
}

#[test]
fn udp_beside_tcp_under_fq() {
    for (udp, tcp_x, udp_loss) in [(3.0, 7.0, 0.0), (7.0, 5.0, 2.0)] {
        let s = ScenarioDoc::new(10.0, 150.0, Discipline::Fq)
            .tcp(30.0)
            .udp(udp)
            .horizon(30.0)
            .build()
            .unwrap();
        let sum = summary(&s, 10.0);
        let u = s.units();
        assert!((u.pps_to_mbps(sum.flows[0].throughput) - tcp_x).abs() < 0.05);
        assert!((u.pps_to_mbps(sum.flows[1].loss_rate) - udp_loss).abs() < 0.05);
        // a UDP source never changes its rate
        assert!(run(&s).samples().all(|x| x.a[1] == u.mbps_to_pps(udp)));
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn discipline() -> impl Strategy<Value = Discipline> {
        prop::sample::select(Discipline::ALL.to_vec())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn invariants_hold_on_random_scenarios(
            disc in discipline(),
            capacity in 1.0f64..20.0,
            buffer_kb in 30.0f64..600.0,
            rtts in prop::collection::vec(5.0f64..120.0, 1..4),
            udp in prop::option::of(0.05f64..0.9),
            augmented in any::<bool>(),
        ) {
            let mut doc = ScenarioDoc::new(capacity, buffer_kb, disc).horizon(8.0);
            for r in &rtts {
                doc = doc.tcp(*r);
            }
            if let Some(share) = udp {
                doc = doc.udp(share * capacity);
            }
            if augmented {
                doc = doc.rtt_mode(RttMode::QueueAugmented);
            }
            let s = doc.build().unwrap();
            match fluid::simulate(&s) {
                Ok(traj) => check_invariants(&traj),
                // the guard is allowed to refuse a run, never to corrupt one
                Err(FluidError::StepTooLarge { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}
