//! AIMD window of a TCP source.

/// Sender state of one TCP flow. The window counts packets and is real
/// valued; `outstanding` counts packets released and neither acknowledged
/// nor reported lost.
#[derive(Debug, Clone, PartialEq)]
pub struct TcpState {
    pub cwnd: f64,
    pub outstanding: u32,
    /// Slow-start threshold; 0 keeps the flow in congestion avoidance.
    pub ssthresh: f64,
    /// Smoothed round-trip time, seconds.
    pub srtt: f64,
    pub last_decrease: Option<f64>,
}

impl TcpState {
    pub fn new(cwnd: f64, rtt: f64, slow_start: bool) -> Self {
        Self {
            cwnd: cwnd.max(1.0),
            outstanding: 0,
            ssthresh: if slow_start { f64::INFINITY } else { 0.0 },
            srtt: rtt,
            last_decrease: None,
        }
    }

    pub fn can_send(&self) -> bool {
        f64::from(self.outstanding) < self.cwnd
    }

    /// Counts a released packet.
    pub fn on_send(&mut self) {
        self.outstanding += 1;
    }

    /// An acknowledgement with round-trip sample `rtt`.
    pub fn on_ack(&mut self, rtt: f64) {
        self.outstanding = self.outstanding.saturating_sub(1);
        self.srtt += (rtt - self.srtt) / 8.0;
        tcp_on_ack(self);
    }

    /// A loss notice for one packet. Returns whether the window was cut.
    pub fn on_loss_notice(&mut self, now: f64) -> bool {
        self.outstanding = self.outstanding.saturating_sub(1);
        tcp_on_loss(self, now)
    }
}

/// Window growth on one ACK: +1 per ACK in slow start, +1/cwnd otherwise.
pub fn tcp_on_ack(s: &mut TcpState) {
    if s.cwnd < s.ssthresh {
        s.cwnd += 1.0;
    } else {
        s.cwnd += 1.0 / s.cwnd;
    }
}

/// Halves the window, at most once per smoothed RTT; losses reported within
/// one RTT of the last cut belong to the same congestion event.
pub fn tcp_on_loss(s: &mut TcpState, now: f64) -> bool {
    if let Some(t) = s.last_decrease {
        if now - t < s.srtt {
            return false;
        }
    }
    s.cwnd = (s.cwnd / 2.0).max(1.0);
    if s.ssthresh > 0.0 {
        s.ssthresh = s.cwnd;
    }
    s.last_decrease = Some(now);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_increase() {
        let mut s = TcpState::new(10.0, 0.02, false);
        tcp_on_ack(&mut s);
        assert!((s.cwnd - 10.1).abs() < 1e-12);
    }

    #[test]
    fn one_cut_per_rtt() {
        let mut s = TcpState::new(10.0, 0.02, false);
        assert!(tcp_on_loss(&mut s, 1.000));
        assert!(!tcp_on_loss(&mut s, 1.001));
        assert_eq!(s.cwnd, 5.0);
        assert!(tcp_on_loss(&mut s, 1.021));
        assert_eq!(s.cwnd, 2.5);
    }

    #[test]
    fn floor_of_one() {
        let mut s = TcpState::new(1.0, 0.02, false);
        tcp_on_loss(&mut s, 0.0);
        assert_eq!(s.cwnd, 1.0);
    }

    #[test]
    fn window_gates_sending() {
        let mut s = TcpState::new(2.5, 0.02, false);
        let mut sent = 0;
        while s.can_send() {
            s.on_send();
            sent += 1;
        }
        assert_eq!(sent, 3);
        s.on_ack(0.03);
        assert!(s.can_send());
        assert!((s.srtt - (0.02 + 0.01 / 8.0)).abs() < 1e-15);
    }

    #[test]
    fn slow_start_until_first_cut() {
        let mut s = TcpState::new(1.0, 0.02, true);
        for _ in 0..3 {
            tcp_on_ack(&mut s);
        }
        assert_eq!(s.cwnd, 4.0);
        tcp_on_loss(&mut s, 0.0);
        assert_eq!((s.cwnd, s.ssthresh), (2.0, 2.0));
        tcp_on_ack(&mut s);
        assert_eq!(s.cwnd, 2.5);
    }
}
