//! Canonical units.
//!
//! Every engine works in packets: rates in packets/second, queues in packets,
//! time in seconds. A packet is one MTU-sized segment, so the only conversion
//! factor needed is the packet size in bytes.

use serde::{Deserialize, Serialize};

const BITS_PER_BYTE: f64 = 8.0;

/// Conversion between the external units used in scenario files (Mbps, kB,
/// ms) and the internal packet units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    packet_bytes: u32,
}

impl Units {
    pub fn new(packet_bytes: u32) -> Self {
        Self { packet_bytes }
    }

    pub fn packet_bytes(&self) -> u32 {
        self.packet_bytes
    }

    pub fn packet_bits(&self) -> f64 {
        f64::from(self.packet_bytes) * BITS_PER_BYTE
    }

    pub fn bps_to_pps(&self, bits_per_second: f64) -> f64 {
        bits_per_second / self.packet_bits()
    }

    pub fn pps_to_bps(&self, packets_per_second: f64) -> f64 {
        packets_per_second * self.packet_bits()
    }

    pub fn mbps_to_pps(&self, mbps: f64) -> f64 {
        self.bps_to_pps(mbps * 1e6)
    }

    pub fn pps_to_mbps(&self, packets_per_second: f64) -> f64 {
        self.pps_to_bps(packets_per_second) / 1e6
    }

    /// Whole packets that fit in `bytes` of memory.
    pub fn bytes_to_packets(&self, bytes: f64) -> u64 {
        (bytes / f64::from(self.packet_bytes)).floor() as u64
    }
}

impl Default for Units {
    fn default() -> Self {
        Self::new(1500)
    }
}
