//! Discrete-event provisioning loop: Dijkstra routing, distance-adaptive
//! modulation, first-fit spectrum and ground-truth BER for every lightpath.

use std::collections::HashMap;

use crate::error::Result;
use crate::phy::{self, Lightpath, PhyConfig};
use crate::spectrum::{self, GridConfig, ReachTable, SpectrumState};
use crate::topology::{NodeId, Path, Topology};
use crate::traffic::{Event, EventStream};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimConfig {
    pub grid: GridConfig,
    pub reach: ReachTable,
    pub phy: PhyConfig,
    /// Run a full spectrum audit after every event.
    pub audit: bool,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    /// Established lightpaths in arrival order.
    pub lightpaths: Vec<Lightpath>,
    pub blocked: usize,
    pub peak_active: usize,
}

/// Provisions every arrival of `events`. Lightpaths are set up regardless of
/// their BER; requests that find no free spectrum are counted as blocked and
/// leave no trace.
pub fn run(topology: &Topology, events: &EventStream, config: &SimConfig) -> Result<SimOutcome> {
    config.grid.validate()?;
    config.phy.validate()?;
    let mut state = SpectrumState::new(topology.links().len(), config.grid.slots_per_link);
    let mut routes: HashMap<(NodeId, NodeId), (Path, Vec<f64>)> = HashMap::new();
    let mut lightpaths = Vec::new();
    let mut blocked = 0;
    let mut peak_active = 0;

    for event in &events.events {
        match event {
            Event::Arrival(request) => {
                let (path, lengths) = match routes.entry((request.source, request.destination)) {
                    std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::hash_map::Entry::Vacant(e) => {
                        let path = topology.shortest_path(request.source, request.destination)?;
                        let lengths = topology.link_lengths(&path);
                        e.insert((path, lengths))
                    }
                };
                let length: f64 = lengths.iter().sum();
                let format = spectrum::select_modulation(length, &config.reach);
                let count = spectrum::required_slots(request.bit_rate_gbps, format, &config.grid);
                match state.first_fit(&path.links, count) {
                    Some(slots) => {
                        state.allocate(&path.links, slots, request.id)?;
                        lightpaths.push(Lightpath {
                            request_id: request.id,
                            path: path.clone(),
                            format,
                            slots,
                            bit_rate_gbps: request.bit_rate_gbps,
                            slice: request.slice,
                            ber: phy::estimate_ber(lengths, format, &config.phy),
                        });
                        peak_active = peak_active.max(state.active_lightpaths());
                    }
                    None => blocked += 1,
                }
            }
            Event::Departure { id, .. } => {
                // blocked requests were never allocated
                let _ = state.release(*id);
            }
        }
        if config.audit {
            state.audit()?;
        }
    }
    Ok(SimOutcome {
        lightpaths,
        blocked,
        peak_active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{load_topology, DEFAULT_TOPOLOGY};
    use crate::traffic::{generate_requests, SliceProfile, TrafficConfig};

    #[test]
    fn audited_run_on_default_topology() {
        let topology = load_topology(DEFAULT_TOPOLOGY).unwrap();
        let traffic = TrafficConfig {
            requests: 1500,
            ..TrafficConfig::default()
        };
        let profile = SliceProfile::parse("1e-8,1e-6,1e-4").unwrap();
        let events = generate_requests(&traffic, &profile, topology.node_count(), 42).unwrap();
        let config = SimConfig {
            audit: true,
            ..SimConfig::default()
        };
        let outcome = run(&topology, &events, &config).unwrap();
        assert_eq!(outcome.lightpaths.len() + outcome.blocked, 1500);
        assert!(outcome.peak_active > 100);
        for lp in &outcome.lightpaths {
            topology.validate_path(&lp.path).unwrap();
            assert!(lp.slots.end() <= 160);
            assert!(lp.ber > 0.0 && lp.ber <= 0.5);
        }
    }

    #[test]
    fn saturated_link_blocks() {
        let topology = load_topology("nodes 2\n0 1 100\n").unwrap();
        let traffic = TrafficConfig {
            requests: 400,
            load_erlangs: 10_000.0,
            bitrate_min_gbps: 200.0,
            bitrate_max_gbps: 200.0,
        };
        let profile = SliceProfile::parse("1e-6").unwrap();
        let events = generate_requests(&traffic, &profile, 2, 1).unwrap();
        let outcome = run(&topology, &events, &SimConfig::default()).unwrap();
        assert!(outcome.blocked > 0);
        // 200 Gb/s at 16-QAM takes 2 of 160 slots
        assert!(outcome.peak_active <= 80);
    }
}
