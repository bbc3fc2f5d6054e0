use std::io::Write;

use num_complex::Complex64;

use super::preamble::Preamble;
use super::{Packet, RadioConfig};
use crate::error::{ensure, Result};
use crate::signal::{fft, SampleBuffer};

/// Channel state for one packet: `values[rx][tx][subcarrier]`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiMatrix {
    n_rx: usize,
    n_tx: usize,
    subcarriers: Vec<i32>,
    values: Vec<Complex64>,
    pub timestamp: f64,
    pub packet_id: u64,
}

impl CsiMatrix {
    /// `values` is laid out rx-major, then tx, then subcarrier.
    pub fn new(
        n_rx: usize,
        n_tx: usize,
        subcarriers: Vec<i32>,
        values: Vec<Complex64>,
        timestamp: f64,
        packet_id: u64,
    ) -> Result<Self> {
        ensure(n_rx > 0 && n_tx > 0 && !subcarriers.is_empty(), || {
            "CSI needs at least one antenna pair and subcarrier".to_string()
        })?;
        ensure(values.len() == n_rx * n_tx * subcarriers.len(), || {
            format!(
                "expected {} CSI values, got {}",
                n_rx * n_tx * subcarriers.len(),
                values.len()
            )
        })?;
        ensure(
            values.iter().all(|v| v.re.is_finite() && v.im.is_finite()),
            || "CSI values must be finite".to_string(),
        )?;
        ensure(timestamp.is_finite(), || {
            "timestamp must be finite".to_string()
        })?;
        Ok(Self {
            n_rx,
            n_tx,
            subcarriers,
            values,
            timestamp,
            packet_id,
        })
    }

    /// Single-transmitter CSI from one row per receive antenna.
    pub fn from_rows(
        rows: Vec<Vec<Complex64>>,
        subcarriers: Vec<i32>,
        timestamp: f64,
        packet_id: u64,
    ) -> Result<Self> {
        let n_rx = rows.len();
        Self::new(n_rx, 1, subcarriers, rows.concat(), timestamp, packet_id)
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn subcarriers(&self) -> &[i32] {
        &self.subcarriers
    }

    /// CSI across subcarriers for one antenna pair.
    pub fn row(&self, rx: usize, tx: usize) -> &[Complex64] {
        let n = self.subcarriers.len();
        let off = (rx * self.n_tx + tx) * n;
        &self.values[off..off + n]
    }

    pub fn get(&self, rx: usize, tx: usize, sc: usize) -> Complex64 {
        self.row(rx, tx)[sc]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Copy with every entry rotated by `phase` radians.
    pub fn rotated(&self, phase: f64) -> Self {
        let r = Complex64::from_polar(1.0, phase);
        Self {
            values: self.values.iter().map(|v| v * r).collect(),
            ..self.clone()
        }
    }
}

/// Estimates the channel from one FFT window.
///
/// `reference` holds the expected DFT output on each used subcarrier for a unit channel.
pub fn extract_symbol_csi(
    rx: &[Complex64],
    window_start: usize,
    reference: &[Complex64],
    cfg: &RadioConfig,
) -> Result<Vec<Complex64>> {
    let n = cfg.fft_size();
    ensure(window_start + n <= rx.len(), || {
        format!(
            "FFT window at {window_start} runs past the buffer of {}",
            rx.len()
        )
    })?;
    ensure(reference.len() == cfg.used_subcarriers().len(), || {
        "reference must cover every used subcarrier".to_string()
    })?;
    let spec = fft(&rx[window_start..window_start + n], n);
    Ok(cfg
        .used_subcarriers()
        .iter()
        .zip(reference)
        .map(|(&k, &r)| spec[cfg.bin(k)] / r)
        .collect())
}

/// CSI from the two long training symbols of a preamble starting at `index`, averaged.
///
/// One row per receive-antenna buffer; the timestamp is the preamble start time.
pub fn extract_csi(
    rx: &[SampleBuffer],
    index: usize,
    cfg: &RadioConfig,
    packet_id: u64,
) -> Result<CsiMatrix> {
    ensure(!rx.is_empty(), || {
        "need at least one receive antenna".to_string()
    })?;
    let pre = Preamble::new(cfg);
    let n = cfg.fft_size();
    let lo = index + pre.long_offset();
    let mut rows = Vec::with_capacity(rx.len());
    for buf in rx {
        let a = extract_symbol_csi(buf.samples(), lo, pre.long_reference(), cfg)?;
        let b = extract_symbol_csi(buf.samples(), lo + n, pre.long_reference(), cfg)?;
        rows.push(a.iter().zip(&b).map(|(x, y)| (x + y) * 0.5).collect());
    }
    CsiMatrix::from_rows(
        rows,
        cfg.used_subcarriers().to_vec(),
        rx[0].time_of(index),
        packet_id,
    )
}

/// Per-symbol CSI across a whole packet whose preamble starts at `index`.
///
/// Entry 0 and 1 come from the long training symbols; later entries use the known data
/// symbols of `packet` as reference, which a transmitter observing its own packet has.
pub fn extract_csi_series(
    rx: &[SampleBuffer],
    index: usize,
    packet: &Packet,
    cfg: &RadioConfig,
) -> Result<Vec<CsiMatrix>> {
    ensure(!rx.is_empty(), || {
        "need at least one receive antenna".to_string()
    })?;
    let pre = Preamble::new(cfg);
    let n = cfg.fft_size();
    let scale = n as f64 / (cfg.used_subcarriers().len() as f64).sqrt();
    let mut windows: Vec<(usize, Vec<Complex64>)> = vec![
        (index + pre.long_offset(), pre.long_reference().to_vec()),
        (index + pre.long_offset() + n, pre.long_reference().to_vec()),
    ];
    for (l, sym) in packet.symbols.iter().enumerate() {
        let start = index + packet.symbol_offset(l, cfg) + cfg.cp_len();
        windows.push((start, sym.iter().map(|v| v * scale).collect()));
    }
    windows
        .into_iter()
        .enumerate()
        .map(|(l, (start, reference))| {
            let rows = rx
                .iter()
                .map(|b| extract_symbol_csi(b.samples(), start, &reference, cfg))
                .collect::<Result<Vec<_>>>()?;
            CsiMatrix::from_rows(
                rows,
                cfg.used_subcarriers().to_vec(),
                rx[0].time_of(start),
                l as u64,
            )
        })
        .collect()
}

/// Writes CSI as `packet_id,timestamp_s,rx_ant,tx_ant,subcarrier,real,imag` rows with a header.
pub fn write_csi_csv<W: Write>(mut w: W, csi: &[CsiMatrix]) -> std::io::Result<()> {
    writeln!(
        w,
        "packet_id,timestamp_s,rx_ant,tx_ant,subcarrier,real,imag"
    )?;
    for m in csi {
        for rx in 0..m.n_rx {
            for tx in 0..m.n_tx {
                for (i, k) in m.subcarriers.iter().enumerate() {
                    let v = m.get(rx, tx, i);
                    writeln!(
                        w,
                        "{},{:.9},{},{},{},{:e},{:e}",
                        m.packet_id, m.timestamp, rx, tx, k, v.re, v.im
                    )?;
                }
            }
        }
    }
    Ok(())
}
