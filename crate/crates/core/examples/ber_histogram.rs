//! Prints the ground-truth BER distribution of a simulated run, per decade
//! and per QoT class, for checking that every class is populated.
//!
//! cargo run -p qot-core --release --example ber_histogram -- [launch_dbm] [penalty_db_per_1000km]

use qot_core::sim::{self, SimConfig};
use qot_core::traffic::{generate_requests, SliceProfile, TrafficConfig};
use qot_core::{load_topology, Dataset, PhyConfig};

fn main() -> qot_core::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut phy = PhyConfig::default();
    if let Some(&p) = args.first() {
        phy.launch_power_dbm = p;
    }
    if let Some(&c) = args.get(1) {
        phy.nonlinear_penalty_db_per_1000km = c;
    }
    let topology = load_topology(qot_core::topology::DEFAULT_TOPOLOGY)?;
    let profile = SliceProfile::parse("1e-8,1e-7,5e-7,1e-6,1e-5,1e-4")?;
    let events = generate_requests(&TrafficConfig::default(), &profile, topology.node_count(), 42)?;
    let config = SimConfig { phy, ..SimConfig::default() };
    let outcome = sim::run(&topology, &events, &config)?;
    println!("established {} blocked {}", outcome.lightpaths.len(), outcome.blocked);

    let mut decades = [0usize; 16];
    for lp in &outcome.lightpaths {
        let d = (-lp.ber.log10()).floor().clamp(0.0, 15.0) as usize;
        decades[d] += 1;
    }
    for (d, n) in decades.iter().enumerate() {
        println!("[1e-{:<2}, 1e-{:<2}) {n}", d + 1, d);
    }
    let mut formats = [0usize; 4];
    for lp in &outcome.lightpaths {
        formats[usize::from(lp.format.code() - 1)] += 1;
    }
    println!("formats BPSK/QPSK/8QAM/16QAM {formats:?}");

    for bers in ["1e-8,1e-6,1e-4", "1e-8,1e-7,1e-6,1e-5,1e-4", "1e-8,1e-7,5e-7,1e-6,1e-5,1e-4"] {
        let profile = SliceProfile::parse(bers)?;
        let k = profile.slice_count();
        let lightpaths: Vec<_> = outcome
            .lightpaths
            .iter()
            .cloned()
            .map(|mut lp| {
                lp.slice = (lp.slice - 1) % k + 1;
                lp
            })
            .collect();
        let d = Dataset::from_lightpaths(&lightpaths, &topology, &phy, profile, Default::default())?;
        println!("classes [{bers}] {:?}", d.class_histogram());
        let feasible: Vec<String> = d
            .partition()
            .iter()
            .map(|p| {
                let f = p.patterns.iter().filter(|x| x.binary == 1).count();
                format!("{}/{}", f, p.len())
            })
            .collect();
        println!("  feasible per slice {feasible:?}");
    }
    Ok(())
}
