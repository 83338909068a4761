//! Departure and loss rates of the virtual queues.

use crate::scenario::Discipline;

/// Departure rates D_k under `discipline`.
///
/// `eps_q` is the tie tolerance on queue lengths: queues within `eps_q` of
/// each other form one priority group, and a queue at most `eps_q` long is
/// treated as empty (it can only forward what arrives).
pub fn departure_rates(a: &[f64], q: &[f64], capacity: f64, discipline: Discipline, eps_q: f64) -> Vec<f64> {
    assert_eq!(a.len(), q.len(), "rate and queue vectors differ in length");
    let mut d = vec![0.0; a.len()];
    departure_rates_into(a, q, capacity, discipline, eps_q, &mut d);
    d
}

pub(crate) fn departure_rates_into(
    a: &[f64],
    q: &[f64],
    capacity: f64,
    discipline: Discipline,
    eps_q: f64,
    d: &mut [f64],
) {
    d.fill(0.0);
    match discipline {
        Discipline::Fq => water_fill(a, q, capacity, eps_q, d),
        Discipline::Lqf => by_priority(a, q, capacity, eps_q, d, true),
        Discipline::Sqf => by_priority(a, q, capacity, eps_q, d, false),
    }
}

/// Max-min fair split. A backlogged flow can absorb any share; an empty one
/// only needs its arrival rate.
fn water_fill(a: &[f64], q: &[f64], capacity: f64, eps_q: f64, d: &mut [f64]) {
    let n = a.len();
    let mut active: Vec<usize> = (0..n).collect();
    let mut remaining = capacity;
    loop {
        if active.is_empty() {
            return;
        }
        let share = remaining / active.len() as f64;
        let (limited, rest): (Vec<usize>, Vec<usize>) = active.iter().partition(|&&k| q[k] <= eps_q && a[k] < share);
        if limited.is_empty() {
            for &k in &rest {
                d[k] = share;
            }
            return;
        }
        for &k in &limited {
            d[k] = a[k];
            remaining -= a[k];
        }
        active = rest;
    }
}

/// LQF/SQF: queue groups are served strictly in priority order. An empty
/// group passes its arrivals through when they fit; a backlogged group takes
/// everything that is left.
fn by_priority(a: &[f64], q: &[f64], capacity: f64, eps_q: f64, d: &mut [f64], longest_first: bool) {
    let n = a.len();
    let mut order: Vec<usize> = (0..n).collect();
    if longest_first {
        order.sort_by(|&i, &j| q[j].total_cmp(&q[i]).then(i.cmp(&j)));
    } else {
        order.sort_by(|&i, &j| q[i].total_cmp(&q[j]).then(i.cmp(&j)));
    }
    let mut remaining = capacity;
    let mut start = 0;
    while start < n && remaining > 0.0 {
        let head = q[order[start]];
        let mut end = start + 1;
        while end < n && (q[order[end]] - head).abs() <= eps_q {
            end += 1;
        }
        let group = &order[start..end];
        let demand: f64 = group.iter().map(|&k| a[k]).sum();
        let backlogged = head > eps_q;
        if !backlogged && demand <= remaining {
            for &k in group {
                d[k] = a[k];
            }
            remaining -= demand;
        } else {
            for &k in group {
                d[k] = if demand > 0.0 {
                    remaining * a[k] / demand
                } else {
                    remaining / group.len() as f64
                };
            }
            remaining = 0.0;
        }
        start = end;
    }
}

/// Loss rates of the shared buffer: zero unless the buffer is full (within
/// `eps_b`). A single longest queue absorbs the whole excess (ΣA − C)⁺; a
/// tie among the longest queues loses each member's own excess (A_k − D_k)⁺.
pub fn loss_rates(a: &[f64], q: &[f64], d: &[f64], buffer: f64, capacity: f64, eps_q: f64, eps_b: f64) -> Vec<f64> {
    let mut l = vec![0.0; a.len()];
    loss_rates_into(a, q, d, buffer, capacity, eps_q, eps_b, &mut l);
    l
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn loss_rates_into(
    a: &[f64],
    q: &[f64],
    d: &[f64],
    buffer: f64,
    capacity: f64,
    eps_q: f64,
    eps_b: f64,
    l: &mut [f64],
) {
    l.fill(0.0);
    let total: f64 = q.iter().sum();
    if total < buffer - eps_b {
        return;
    }
    let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut longest = (0..q.len()).filter(|&k| q[k] >= max - eps_q);
    let first = longest.next().expect("at least one flow");
    if longest.next().is_none() {
        l[first] = (a.iter().sum::<f64>() - capacity).max(0.0);
    } else {
        for k in 0..q.len() {
            if q[k] >= max - eps_q {
                l[k] = (a[k] - d[k]).max(0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    #[test]
    fn fq_cases() {
        assert_eq!(
            departure_rates(&[8.0, 8.0], &[1.0, 1.0], 10.0, Discipline::Fq, EPS),
            vec![5.0, 5.0]
        );
        assert_eq!(
            departure_rates(&[3.0, 9.0], &[0.0, 2.0], 10.0, Discipline::Fq, EPS),
            vec![3.0, 7.0]
        );
        // nothing queued and under capacity: everything passes
        assert_eq!(
            departure_rates(&[3.0, 4.0], &[0.0, 0.0], 10.0, Discipline::Fq, EPS),
            vec![3.0, 4.0]
        );
        // nothing queued, overloaded
        assert_eq!(
            departure_rates(&[2.0, 9.0, 9.0], &[0.0; 3], 10.0, Discipline::Fq, EPS),
            vec![2.0, 4.0, 4.0]
        );
        // a backlogged flow keeps its fair share even with a low arrival rate
        assert_eq!(
            departure_rates(&[1.0, 9.0], &[5.0, 5.0], 10.0, Discipline::Fq, EPS),
            vec![5.0, 5.0]
        );
    }

    #[test]
    fn lqf_sqf_single_winner() {
        assert_eq!(
            departure_rates(&[1.0, 1.0], &[5.0, 3.0], 10.0, Discipline::Lqf, EPS),
            vec![10.0, 0.0]
        );
        assert_eq!(
            departure_rates(&[1.0, 1.0], &[5.0, 3.0], 10.0, Discipline::Sqf, EPS),
            vec![0.0, 10.0]
        );
        assert_eq!(
            departure_rates(&[4.0, 6.0], &[4.0, 4.0], 10.0, Discipline::Sqf, EPS),
            vec![4.0, 6.0]
        );
        assert_eq!(
            departure_rates(&[2.0, 6.0], &[4.0, 4.0], 10.0, Discipline::Lqf, EPS),
            vec![2.5, 7.5]
        );
    }

    #[test]
    fn sqf_empty_queue_passes_through() {
        // the empty flow is served at its arrival rate, the rest goes on
        assert_eq!(
            departure_rates(&[3.0, 1.0], &[0.0, 4.0], 10.0, Discipline::Sqf, EPS),
            vec![3.0, 7.0]
        );
        // LQF serves the backlogged queue first
        assert_eq!(
            departure_rates(&[3.0, 1.0], &[0.0, 4.0], 10.0, Discipline::Lqf, EPS),
            vec![0.0, 10.0]
        );
    }

    #[test]
    fn work_conservation() {
        let cases: [(&[f64], &[f64]); 4] = [
            (&[1.0, 2.0, 3.0], &[0.0, 0.0, 1.0]),
            (&[20.0, 0.0], &[0.0, 0.0]),
            (&[0.0, 0.0], &[1.0, 1.0]),
            (&[0.5, 0.5, 0.5], &[3.0, 0.0, 3.0]),
        ];
        for (a, q) in cases {
            for disc in Discipline::ALL {
                let d = departure_rates(a, q, 10.0, disc, EPS);
                let total: f64 = d.iter().sum();
                assert!(d.iter().all(|&x| x >= 0.0));
                let backlogged = q.iter().sum::<f64>() > 0.0 || a.iter().sum::<f64>() >= 10.0;
                let want = if backlogged { 10.0 } else { a.iter().sum() };
                assert!((total - want).abs() < 1e-12, "{disc} {a:?} {q:?} {d:?}");
            }
        }
    }

    #[test]
    fn losses() {
        let l = loss_rates(&[8.0, 6.0], &[70.0, 30.0], &[5.0, 5.0], 100.0, 10.0, EPS, 1e-4);
        assert_eq!(l, vec![4.0, 0.0]);
        let l = loss_rates(&[8.0, 6.0], &[50.0, 50.0], &[5.0, 5.0], 100.0, 10.0, EPS, 1e-4);
        assert_eq!(l, vec![3.0, 1.0]);
        let l = loss_rates(&[8.0, 6.0], &[25.0, 25.0], &[5.0, 5.0], 100.0, 10.0, EPS, 1e-4);
        assert_eq!(l, vec![0.0, 0.0]);
        let l = loss_rates(&[4.0, 3.0], &[70.0, 30.0], &[10.0, 0.0], 100.0, 10.0, EPS, 1e-4);
        assert_eq!(l, vec![0.0, 0.0]);
    }
}
