use num_complex::Complex64;

use super::preamble::{ofdm_symbol, Preamble};
use super::{Lfsr, RadioConfig};
use crate::error::{ensure, invalid, Result};
use crate::signal::{fft, SampleBuffer};

/// Longest PPDU the PHY will build, in seconds.
pub const MAX_PACKET_DURATION: f64 = 5.484e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    /// Gray-coded amplitude levels per real dimension, with 802.11 power normalisation.
    fn axis(self) -> (usize, f64) {
        match self {
            Modulation::Bpsk => (1, 1.0),
            Modulation::Qpsk => (1, 1.0 / 2f64.sqrt()),
            Modulation::Qam16 => (2, 1.0 / 10f64.sqrt()),
            Modulation::Qam64 => (3, 1.0 / 42f64.sqrt()),
        }
    }

    /// Maps `bits_per_symbol()` bits to a constellation point.
    pub fn map(self, bits: &[bool]) -> Complex64 {
        let (per_axis, scale) = self.axis();
        match self {
            Modulation::Bpsk => Complex64::new(if bits[0] { 1.0 } else { -1.0 }, 0.0),
            _ => Complex64::new(
                gray_level(&bits[..per_axis]) * scale,
                gray_level(&bits[per_axis..2 * per_axis]) * scale,
            ),
        }
    }

    /// Nearest-point hard decision, the inverse of [`Modulation::map`].
    pub fn demap(self, z: Complex64, out: &mut Vec<bool>) {
        let (per_axis, scale) = self.axis();
        match self {
            Modulation::Bpsk => out.push(z.re > 0.0),
            _ => {
                gray_bits(z.re / scale, per_axis, out);
                gray_bits(z.im / scale, per_axis, out);
            }
        }
    }
}

// Amplitude for a Gray-coded group: the first bit picks the sign, later bits fold inward.
fn gray_level(bits: &[bool]) -> f64 {
    let m = bits.len();
    let mut index = 0usize;
    let mut acc = false;
    for &b in bits {
        acc ^= b;
        index = (index << 1) | acc as usize;
    }
    2.0 * index as f64 - ((1 << m) as f64 - 1.0)
}

fn gray_bits(level: f64, m: usize, out: &mut Vec<bool>) {
    let top = (1usize << m) - 1;
    let index = ((level + top as f64) / 2.0).round().clamp(0.0, top as f64) as usize;
    let mut prev = false;
    for i in (0..m).rev() {
        let bin = (index >> i) & 1 == 1;
        out.push(bin ^ prev);
        prev = bin;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodingRate {
    R1_2,
    R2_3,
    R3_4,
    R5_6,
}

impl CodingRate {
    pub fn value(self) -> f64 {
        match self {
            CodingRate::R1_2 => 0.5,
            CodingRate::R2_3 => 2.0 / 3.0,
            CodingRate::R3_4 => 0.75,
            CodingRate::R5_6 => 5.0 / 6.0,
        }
    }
}

/// Modulation and coding scheme. Coding itself is not simulated; the rate only sets how
/// many OFDM symbols a payload occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mcs {
    pub modulation: Modulation,
    pub rate: CodingRate,
}

impl Mcs {
    pub const fn new(modulation: Modulation, rate: CodingRate) -> Self {
        Self { modulation, rate }
    }

    /// Information bits carried per OFDM symbol.
    pub fn bits_per_ofdm_symbol(&self, cfg: &RadioConfig) -> f64 {
        (cfg.data_subcarriers().len() * self.modulation.bits_per_symbol()) as f64
            * self.rate.value()
    }
}

/// Timing and format of one PPDU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketMeta {
    pub tx_time: f64,
    pub mcs: Mcs,
    pub n_symbols: usize,
    pub duration: f64,
}

impl PacketMeta {
    pub fn new(tx_time: f64, mcs: Mcs, n_symbols: usize, cfg: &RadioConfig) -> Result<Self> {
        ensure(tx_time.is_finite(), || {
            "transmit time must be finite".to_string()
        })?;
        let preamble = 5 * cfg.fft_size();
        let duration = (preamble + n_symbols * cfg.symbol_len()) as f64 / cfg.sample_rate();
        ensure(duration <= MAX_PACKET_DURATION + 1e-12, || {
            format!("{n_symbols} symbols last {duration:.6} s, beyond the {MAX_PACKET_DURATION} s limit")
        })?;
        Ok(Self {
            tx_time,
            mcs,
            n_symbols,
            duration,
        })
    }

    /// Sizes a packet for `payload_bytes` of information at the given MCS.
    pub fn for_payload(
        tx_time: f64,
        mcs: Mcs,
        payload_bytes: usize,
        cfg: &RadioConfig,
    ) -> Result<Self> {
        let bits = (8 * payload_bytes) as f64;
        let n = (bits / mcs.bits_per_ofdm_symbol(cfg)).ceil() as usize;
        Self::new(tx_time, mcs, n, cfg)
    }

    /// Number of raw constellation bits the data symbols carry.
    pub fn capacity_bits(&self, cfg: &RadioConfig) -> usize {
        self.n_symbols * cfg.data_subcarriers().len() * self.mcs.modulation.bits_per_symbol()
    }
}

/// A modulated PPDU: preamble followed by data symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub buffer: SampleBuffer,
    pub meta: PacketMeta,
    /// Frequency-domain values of each data symbol on the used subcarriers (ascending order).
    pub symbols: Vec<Vec<Complex64>>,
    /// Length of the preamble in samples.
    pub preamble_len: usize,
}

impl Packet {
    /// Sample offset of data symbol `l` (start of its cyclic prefix).
    pub fn symbol_offset(&self, l: usize, cfg: &RadioConfig) -> usize {
        self.preamble_len + l * cfg.symbol_len()
    }
}

fn pilot_values(cfg: &RadioConfig, polarity: f64) -> impl Fn(i32) -> Complex64 + '_ {
    let outer = cfg.pilot_subcarriers().last().copied();
    move |k| {
        let base = if Some(k) == outer { -1.0 } else { 1.0 };
        Complex64::new(base * polarity, 0.0)
    }
}

/// Modulates `payload` (one bool per bit) into a packet described by `meta`.
///
/// Bits beyond the payload are filled with a fixed pseudo-random pad so that every
/// constellation point is defined.
pub fn build_packet(payload: &[bool], meta: &PacketMeta, cfg: &RadioConfig) -> Result<Packet> {
    let capacity = meta.capacity_bits(cfg);
    if payload.len() > capacity {
        return invalid(format!(
            "payload of {} bits exceeds capacity {capacity}",
            payload.len()
        ));
    }
    let preamble = Preamble::new(cfg);
    let modulation = meta.mcs.modulation;
    let bps = modulation.bits_per_symbol();
    let data_sc = cfg.data_subcarriers();
    let mut pad = Lfsr::new();
    let mut bits = payload.to_vec();
    while bits.len() < capacity {
        bits.push(pad.next_bit());
    }

    let mut samples = preamble.samples().to_vec();
    let mut symbols = Vec::with_capacity(meta.n_symbols);
    let mut polarity = Lfsr::new();
    let mut cursor = 0;
    for _ in 0..meta.n_symbols {
        let pilot = pilot_values(cfg, polarity.next_sign());
        let values: Vec<Complex64> = cfg
            .used_subcarriers()
            .iter()
            .map(|&k| {
                if data_sc.contains(&k) {
                    let v = modulation.map(&bits[cursor..cursor + bps]);
                    cursor += bps;
                    v
                } else {
                    pilot(k)
                }
            })
            .collect();
        let body = ofdm_symbol(cfg, cfg.used_subcarriers(), &values);
        samples.extend_from_slice(&body[cfg.fft_size() - cfg.cp_len()..]);
        samples.extend_from_slice(&body);
        symbols.push(values);
    }
    Ok(Packet {
        buffer: SampleBuffer::new(samples, cfg.sample_rate(), meta.tx_time)?,
        meta: *meta,
        symbols,
        preamble_len: preamble.len(),
    })
}

/// Hard-decision demodulation of a packet whose preamble starts at sample `start`.
///
/// The channel is estimated from the long training symbols and equalised per subcarrier.
/// Returns all constellation bits, padding included.
pub fn demodulate_packet(
    rx: &[Complex64],
    start: usize,
    meta: &PacketMeta,
    cfg: &RadioConfig,
) -> Result<Vec<bool>> {
    let n = cfg.fft_size();
    let preamble = Preamble::new(cfg);
    let end = start + preamble.len() + meta.n_symbols * cfg.symbol_len();
    ensure(end <= rx.len(), || {
        format!("packet needs {end} samples, buffer has {}", rx.len())
    })?;
    let lo = start + preamble.long_offset();
    let s1 = fft(&rx[lo..lo + n], n);
    let s2 = fft(&rx[lo + n..lo + 2 * n], n);
    let h: Vec<Complex64> = cfg
        .used_subcarriers()
        .iter()
        .zip(preamble.long_reference())
        .map(|(&k, &r)| (s1[cfg.bin(k)] + s2[cfg.bin(k)]) * 0.5 / r)
        .collect();
    let data_sc = cfg.data_subcarriers();
    let scale = (cfg.used_subcarriers().len() as f64).sqrt() / n as f64;
    let mut out = Vec::with_capacity(meta.capacity_bits(cfg));
    for l in 0..meta.n_symbols {
        let off = start + preamble.len() + l * cfg.symbol_len() + cfg.cp_len();
        let spec = fft(&rx[off..off + n], n);
        for (i, &k) in cfg.used_subcarriers().iter().enumerate() {
            if data_sc.contains(&k) {
                let z = spec[cfg.bin(k)] * scale / h[i];
                meta.mcs.modulation.demap(z, &mut out);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [Modulation; 4] = [
        Modulation::Bpsk,
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qam64,
    ];

    #[test]
    fn constellations_have_unit_power() {
        for m in ALL {
            let b = m.bits_per_symbol();
            let total: f64 = (0..1usize << b)
                .map(|v| {
                    let bits: Vec<bool> = (0..b).map(|i| (v >> (b - 1 - i)) & 1 == 1).collect();
                    m.map(&bits).norm_sqr()
                })
                .sum();
            assert!((total / (1 << b) as f64 - 1.0).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        let mut prev: Option<Vec<bool>> = None;
        for idx in 0..8 {
            let mut out = Vec::new();
            gray_bits(2.0 * idx as f64 - 7.0, 3, &mut out);
            if let Some(p) = prev {
                assert_eq!(p.iter().zip(&out).filter(|(a, b)| a != b).count(), 1);
            }
            assert_eq!(gray_level(&out), 2.0 * idx as f64 - 7.0);
            prev = Some(out);
        }
    }

    #[test]
    fn duration_limit() {
        let cfg = RadioConfig::default();
        let mcs = Mcs::new(Modulation::Bpsk, CodingRate::R1_2);
        assert!(PacketMeta::new(0.0, mcs, 1367, &cfg).is_ok());
        assert!(PacketMeta::new(0.0, mcs, 1368, &cfg).is_err());
        let m = PacketMeta::new(0.0, mcs, 10, &cfg).unwrap();
        assert!((m.duration - (320.0 + 800.0) / 20e6).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn loopback_recovers_payload(
            bits in proptest::collection::vec(any::<bool>(), 1..600),
            m in 0usize..4,
            gain_re in 0.2f64..3.0,
            gain_im in -3.0f64..3.0,
        ) {
            let cfg = RadioConfig::default();
            let mcs = Mcs::new(ALL[m], CodingRate::R1_2);
            let meta = PacketMeta::for_payload(0.0, mcs, bits.len().div_ceil(8), &cfg).unwrap();
            let pkt = build_packet(&bits, &meta, &cfg).unwrap();
            prop_assert!(pkt.meta.duration <= MAX_PACKET_DURATION);
            let g = Complex64::new(gain_re, gain_im);
            let rx: Vec<Complex64> = pkt.buffer.samples().iter().map(|s| s * g).collect();
            let got = demodulate_packet(&rx, 0, &meta, &cfg).unwrap();
            prop_assert_eq!(&got[..bits.len()], &bits[..]);
        }
    }
}
