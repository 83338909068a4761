use flowlab_core::fluid;
use flowlab_core::packetsim::{run_packet_sim, run_packet_sim_with, PacketOptions, PacketSim, PacketSimReport};
use flowlab_core::{Discipline, RttMode, Scenario, ScenarioDoc};

fn stepped(s: &Scenario) -> PacketSimReport {
    let mut sim = PacketSim::new(s, PacketOptions::for_scenario(s)).unwrap();
    let mut last = 0.0;
    while sim.step() {
        assert!(sim.now() >= last, "time went back");
        last = sim.now();
        if let Err(e) = sim.check_invariants() {
            panic!("t = {}: {e}", sim.now());
        }
    }
    sim.finish()
}

fn mbps(s: &Scenario, pps: f64) -> f64 {
    s.units().pps_to_mbps(pps)
}

/// Σ(sent − dropped) / Σsent over the measured interval.
fn aggregate_goodput(r: &PacketSimReport) -> f64 {
    let sent: f64 = r.summary.flows.iter().map(|f| f.sending_rate).sum();
    let lost: f64 = r.summary.flows.iter().map(|f| f.loss_rate).sum();
    1.0 - lost / sent
}

#[test]
fn invariants_hold_at_every_event() {
    for disc in Discipline::ALL {
        for doc in [
            ScenarioDoc::new(10.0, 150.0, disc).tcp(20.0).tcp(50.0),
            ScenarioDoc::new(10.0, 150.0, disc).tcp(20.0).udp(7.0),
            ScenarioDoc::new(10.0, 30.0, disc).tcp(2.0).tcp(5.0).tcp(10.0),
        ] {
            let s = doc.horizon(10.0).build().unwrap();
            let r = stepped(&s);
            for (c, f) in r.counters.iter().zip(&r.summary.flows) {
                assert!(c.conserved());
                assert!(c.delivered <= c.sent);
                assert!(f.throughput <= s.capacity() * (1.0 + 1e-9));
            }
            assert!(r.summary.utilization > 0.97, "{disc}: {}", r.summary.utilization);
        }
    }
}

#[test]
fn same_seed_same_report() {
    let s = ScenarioDoc::new(10.0, 150.0, Discipline::Sqf)
        .tcp(20.0)
        .udp(3.0)
        .horizon(10.0)
        .build()
        .unwrap();
    let (a, b) = (run_packet_sim(&s), run_packet_sim(&s));
    assert_eq!(a.to_json(), b.to_json());
    let (mut ta, mut tb) = (Vec::new(), Vec::new());
    a.write_trace_csv(&mut ta).unwrap();
    b.write_trace_csv(&mut tb).unwrap();
    assert_eq!(ta, tb);
    assert!(ta.starts_with(b"t,flow,rate_pkts\n"));
    let other = run_packet_sim(&s.with_seed(7));
    assert_ne!(a.counters, other.counters);
}

#[test]
fn trace_tiles_the_measured_interval() {
    let s = ScenarioDoc::new(10.0, 150.0, Discipline::Fq)
        .tcp(20.0)
        .tcp(50.0)
        .horizon(10.0)
        .build()
        .unwrap();
    let r = run_packet_sim_with(
        &s,
        PacketOptions {
            warmup: 2.0,
            window: 0.5,
        },
    )
    .unwrap();
    assert_eq!(r.trace.bits.len(), 16);
    assert_eq!(r.trace.start, 2.0);
    // the trace and the summary count the same deliveries
    let bits = s.units().packet_bits();
    let traced: f64 = r.trace.totals().iter().sum::<f64>() / bits;
    let summed: f64 = r.summary.throughputs().iter().sum::<f64>() * 8.0;
    assert!((traced - summed).abs() <= 1.0, "{traced} vs {summed}");
}

#[test]
fn fq_splits_the_link_evenly() {
    let s = ScenarioDoc::new(10.0, 150.0, Discipline::Fq)
        .tcp(20.0)
        .tcp(50.0)
        .horizon(60.0)
        .build()
        .unwrap();
    let r = run_packet_sim(&s);
    for f in &r.summary.flows {
        assert!((mbps(&s, f.throughput) - 5.0).abs() < 0.15);
    }
    assert!(r.short_term_jain.unwrap() > 0.99);
}

#[test]
fn udp_beside_tcp_fq_and_sqf() {
    // (discipline, udp rate, udp loss, tcp throughput), Mbps
    let table = [
        (Discipline::Fq, 3.0, 0.0, 7.0),
        (Discipline::Fq, 7.0, 2.0, 5.0),
        (Discipline::Sqf, 3.0, 0.0, 7.0),
        (Discipline::Sqf, 7.0, 0.0, 3.0),
    ];
    for (disc, x, loss, tcp) in table {
        let s = ScenarioDoc::new(10.0, 150.0, disc)
            .tcp(20.0)
            .udp(x)
            .horizon(60.0)
            .build()
            .unwrap();
        let r = run_packet_sim(&s);
        assert!(
            (mbps(&s, r.summary.flows[1].loss_rate) - loss).abs() < 0.3,
            "{disc} {x}"
        );
        assert!(
            (mbps(&s, r.summary.flows[0].throughput) - tcp).abs() < 0.3,
            "{disc} {x}"
        );
    }
}

#[test]
fn lone_cbr_flow_is_untouched() {
    let s = ScenarioDoc::new(10.0, 150.0, Discipline::Lqf)
        .udp(5.0)
        .horizon(20.0)
        .build()
        .unwrap();
    let r = run_packet_sim(&s);
    assert_eq!(r.counters[0].dropped, 0);
    assert_eq!(r.goodput_ratio[0], Some(1.0));
}

#[test]
fn sqf_loses_more_than_fq_and_lqf() {
    let run = |disc| {
        let s = ScenarioDoc::new(10.0, 150.0, disc)
            .tcp(10.0)
            .tcp(100.0)
            .tcp(200.0)
            .horizon(120.0)
            .build()
            .unwrap();
        aggregate_goodput(&run_packet_sim(&s))
    };
    let (fq, lqf, sqf) = (run(Discipline::Fq), run(Discipline::Lqf), run(Discipline::Sqf));
    assert!(sqf < fq && sqf < lqf, "fq {fq} lqf {lqf} sqf {sqf}");
}

#[test]
fn short_rtt_sqf_alternates() {
    let s = ScenarioDoc::new(10.0, 150.0, Discipline::Sqf)
        .tcp(2.0)
        .tcp(6.0)
        .horizon(10.0)
        .build()
        .unwrap();
    let r = run_packet_sim_with(
        &s,
        PacketOptions {
            warmup: 2.0,
            window: 0.05,
        },
    )
    .unwrap();
    // which flow holds most of each window
    let leaders: Vec<usize> = r
        .trace
        .bits
        .iter()
        .filter_map(|w| {
            let total: f64 = w.iter().sum();
            w.iter().position(|&b| b > 0.75 * total)
        })
        .collect();
    let switches = leaders.windows(2).filter(|p| p[0] != p[1]).count();
    assert!(switches >= 4, "{leaders:?}");
    assert!(r.short_term_jain.unwrap() + 0.1 < r.long_term_jain.unwrap());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn invariants_on_random_scenarios(
            disc in prop::sample::select(Discipline::ALL.to_vec()),
            capacity in 1.0f64..20.0,
            buffer_kb in 6.0f64..300.0,
            rtts in prop::collection::vec(1.0f64..150.0, 0..4),
            udp in prop::collection::vec(0.05f64..0.8, 0..2),
            seed in any::<u64>(),
        ) {
            prop_assume!(!rtts.is_empty() || !udp.is_empty());
            let mut doc = ScenarioDoc::new(capacity, buffer_kb, disc).horizon(3.0).seed(seed);
            for r in &rtts {
                doc = doc.tcp(*r);
            }
            for u in &udp {
                doc = doc.udp(u * capacity);
            }
            let s = doc.build().unwrap();
            let r = stepped(&s);
            for c in &r.counters {
                prop_assert!(c.conserved());
            }
            prop_assert!(r.summary.utilization <= 1.0 + 1e-9);
            prop_assert_eq!(r.to_json(), run_packet_sim(&s).to_json());
        }
    }
}

#[test]
fn packet_agrees_with_queue_augmented_fluid() {
    // |a − b| / max(|a|, |b|, 0.01·C) on every flow's X̄
    let mut docs = Vec::new();
    for disc in Discipline::ALL {
        docs.push(ScenarioDoc::new(10.0, 150.0, disc).tcp(20.0).tcp(50.0));
        docs.push(ScenarioDoc::new(10.0, 150.0, disc).tcp(20.0).udp(3.0));
        docs.push(ScenarioDoc::new(10.0, 150.0, disc).tcp(20.0).udp(7.0));
    }
    let mut misses = Vec::new();
    for doc in docs {
        let s = doc.horizon(60.0).rtt_mode(RttMode::QueueAugmented).build().unwrap();
        let fl = fluid::simulate(&s).unwrap().summarize(12.0).unwrap();
        let pk = run_packet_sim(&s);
        let c = s.capacity();
        for (k, (p, f)) in pk.summary.flows.iter().zip(&fl.flows).enumerate() {
            let dev = (p.throughput - f.throughput).abs() / p.throughput.max(f.throughput).max(0.01 * c);
            if dev > 0.15 {
                misses.push(format!(
                    "{} flow {}: packet {:.2} fluid {:.2} Mbps ({:.0}%)",
                    s.discipline(),
                    k + 1,
                    mbps(&s, p.throughput),
                    mbps(&s, f.throughput),
                    100.0 * dev
                ));
            }
        }
    }
    assert!(misses.is_empty(), "{}", misses.join("; "));
}
