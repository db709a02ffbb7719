//! Analytic ground-truth BER for a provisioned lightpath.
//!
//! Each link is cut into full spans of `span_length` plus one shorter
//! remainder span; every span is followed by an EDFA whose gain exactly
//! compensates that span's loss. The accumulated ASE noise in the reference
//! bandwidth sets the linear SNR, which is then reduced by a nonlinear
//! penalty proportional to the total path length before being mapped to a
//! BER for the modulation format.

use crate::error::{Error, Result};
use crate::spectrum::{ModulationFormat, SlotRange};
use crate::topology::{Path, Topology};

const PLANCK: f64 = 6.626_070_15e-34;
const CARRIER_HZ: f64 = 193.4e12;

/// Lowest BER the oracle reports.
pub const BER_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyConfig {
    pub span_length_km: f64,
    pub noise_figure_db: f64,
    pub fiber_loss_db_per_km: f64,
    pub launch_power_dbm: f64,
    pub reference_bandwidth_ghz: f64,
    pub nonlinear_penalty_db_per_1000km: f64,
}

impl Default for PhyConfig {
    fn default() -> Self {
        PhyConfig {
            span_length_km: 80.0,
            noise_figure_db: 5.0,
            fiber_loss_db_per_km: 0.2,
            launch_power_dbm: -11.0,
            reference_bandwidth_ghz: 12.5,
            nonlinear_penalty_db_per_1000km: 1.0,
        }
    }
}

impl PhyConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("span_length_km", self.span_length_km),
            ("noise_figure_db", self.noise_figure_db),
            ("fiber_loss_db_per_km", self.fiber_loss_db_per_km),
            ("reference_bandwidth_ghz", self.reference_bandwidth_ghz),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(format!("{name} must be positive")));
            }
        }
        if !self.launch_power_dbm.is_finite() {
            return Err(Error::validation("launch_power_dbm must be finite"));
        }
        if !(self.nonlinear_penalty_db_per_1000km.is_finite()
            && self.nonlinear_penalty_db_per_1000km >= 0.0)
        {
            return Err(Error::validation(
                "nonlinear_penalty_db_per_1000km must be non-negative",
            ));
        }
        Ok(())
    }

    fn spans(&self, link_length_km: f64) -> usize {
        (link_length_km / self.span_length_km).ceil() as usize
    }
}

/// A provisioned connection with its ground-truth BER.
#[derive(Debug, Clone, PartialEq)]
pub struct Lightpath {
    pub request_id: u64,
    pub path: Path,
    pub format: ModulationFormat,
    pub slots: SlotRange,
    pub bit_rate_gbps: f64,
    pub slice: usize,
    pub ber: f64,
}

/// One amplifier per span; a link of length `l` has `ceil(l / span_length)`.
pub fn edfa_count(link_lengths_km: &[f64], phy: &PhyConfig) -> usize {
    link_lengths_km.iter().map(|&l| phy.spans(l)).sum()
}

pub fn path_edfa_count(topology: &Topology, path: &Path, phy: &PhyConfig) -> usize {
    edfa_count(&topology.link_lengths(path), phy)
}

/// Linear SNR after ASE accumulation and the length-proportional penalty.
pub fn snr(link_lengths_km: &[f64], phy: &PhyConfig) -> f64 {
    let nf = db_to_linear(phy.noise_figure_db);
    let bandwidth_hz = phy.reference_bandwidth_ghz * 1e9;
    let ase_watts: f64 = link_lengths_km
        .iter()
        .map(|&length| {
            let spans = phy.spans(length);
            let remainder = length - (spans - 1) as f64 * phy.span_length_km;
            let full_gain = db_to_linear(phy.fiber_loss_db_per_km * phy.span_length_km);
            let last_gain = db_to_linear(phy.fiber_loss_db_per_km * remainder);
            let gains = (spans - 1) as f64 * full_gain + last_gain;
            nf * PLANCK * CARRIER_HZ * gains * bandwidth_hz
        })
        .sum();
    let launch_watts = db_to_linear(phy.launch_power_dbm) * 1e-3;
    let total_km: f64 = link_lengths_km.iter().sum();
    let penalty_db = phy.nonlinear_penalty_db_per_1000km * total_km / 1000.0;
    launch_watts / ase_watts * db_to_linear(-penalty_db)
}

/// Gray-coded BER at linear SNR, `0.5 * erfc(sqrt(scale * snr))`.
///
/// The argument scale is that of the usual nearest-neighbour approximations
/// (BPSK 1, QPSK 1/2, 8-QAM 3/14, 16-QAM 1/10); the prefactor is 1/2 for
/// every format.
pub fn ber_from_snr(format: ModulationFormat, snr_linear: f64) -> f64 {
    let scale = match format {
        ModulationFormat::Bpsk => 1.0,
        ModulationFormat::Qpsk => 0.5,
        ModulationFormat::Qam8 => 3.0 / 14.0,
        ModulationFormat::Qam16 => 0.1,
    };
    let ber = 0.5 * libm::erfc((scale * snr_linear.max(0.0)).sqrt());
    ber.clamp(BER_FLOOR, 0.5)
}

/// Ground-truth BER of a lightpath over links with the given lengths.
pub fn estimate_ber(link_lengths_km: &[f64], format: ModulationFormat, phy: &PhyConfig) -> f64 {
    ber_from_snr(format, snr(link_lengths_km, phy))
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
