//! Parameterised 802.11-style OFDM: preamble, packet assembly, detection and CSI.

mod config;
mod csi;
mod detect;
mod packet;
mod preamble;

pub use config::RadioConfig;
pub use csi::{extract_csi, extract_csi_series, extract_symbol_csi, write_csi_csv, CsiMatrix};
pub use detect::{detect_preamble, Detection};
pub use packet::{
    build_packet, demodulate_packet, CodingRate, Mcs, Modulation, Packet, PacketMeta,
    MAX_PACKET_DURATION,
};
pub use preamble::{generate_preamble, Preamble};

/// Maximal-length x^7 + x^4 + 1 sequence generator used for training and pilot symbols.
#[derive(Debug, Clone)]
pub(crate) struct Lfsr(u8);

impl Lfsr {
    pub(crate) fn new() -> Self {
        Lfsr(0x7f)
    }

    pub(crate) fn next_bit(&mut self) -> bool {
        let b = ((self.0 >> 6) ^ (self.0 >> 3)) & 1;
        self.0 = ((self.0 << 1) | b) & 0x7f;
        b == 1
    }

    pub(crate) fn next_sign(&mut self) -> f64 {
        if self.next_bit() {
            -1.0
        } else {
            1.0
        }
    }
}
