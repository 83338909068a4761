//! Link scheduler and buffer admission at packet granularity.

use crate::scenario::Discipline;

/// Deficit round robin with a one-packet quantum. All packets have the same
/// size, so every visit to a backlogged flow sends exactly one packet and
/// DRR reduces to plain round robin over the backlogged flows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundRobin {
    next: usize,
}

impl RoundRobin {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Flow whose head packet goes on the link next, or `None` when every
/// queue is empty. `head_arrivals[k]` is the arrival time of queue k's head
/// packet (ignored for empty queues).
///
/// FQ takes the backlogged queues in turn. LQF and SQF serve the longest /
/// shortest non-empty queue; among equal queues the one whose head packet
/// has waited longest goes first, then the lowest id. Serving a tie set in
/// arrival order shares it in proportion to the arrival rates, which is how
/// the fluid model splits a tie.
pub fn scheduler_select(
    lengths: &[usize],
    head_arrivals: &[f64],
    discipline: Discipline,
    rr: &mut RoundRobin,
) -> Option<usize> {
    let n = lengths.len();
    let target = match discipline {
        Discipline::Fq => {
            let k = (0..n).map(|i| (rr.next + i) % n).find(|&k| lengths[k] > 0)?;
            rr.next = (k + 1) % n;
            return Some(k);
        }
        Discipline::Lqf => lengths.iter().cloned().max()?,
        Discipline::Sqf => lengths.iter().cloned().filter(|&l| l > 0).min()?,
    };
    if target == 0 {
        return None;
    }
    (0..n)
        .filter(|&k| lengths[k] == target)
        .min_by(|&i, &j| head_arrivals[i].total_cmp(&head_arrivals[j]).then(i.cmp(&j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Enqueued,
    /// The arrival itself is lost.
    Dropped,
    /// `victim` loses its tail packet and the arrival is queued.
    PushedOut {
        victim: usize,
    },
}

/// Longest-queue-drop on a shared buffer of `buffer` packets.
pub fn lqd_admit(lengths: &[usize], buffer: usize, flow: usize) -> Admission {
    let occupancy: usize = lengths.iter().sum();
    if occupancy < buffer {
        return Admission::Enqueued;
    }
    let longest = lengths.iter().cloned().max().unwrap_or(0);
    if lengths[flow] >= longest {
        return Admission::Dropped;
    }
    let victim = lengths.iter().position(|&l| l == longest).expect("max exists");
    Admission::PushedOut { victim }
}
