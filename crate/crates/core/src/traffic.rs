//! Dynamic request workload: Poisson arrivals, exponential holding times,
//! uniform source/destination pairs, slice requirements and bit rates.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::seed;
use crate::topology::NodeId;

/// Ordered BER requirements `B_1 < B_2 < ... < B_K`, one per slice type.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceProfile {
    thresholds: Vec<f64>,
}

impl SliceProfile {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::validation("slice profile needs at least one BER threshold"));
        }
        if let Some(bad) = thresholds.iter().find(|b| !(**b > 0.0 && **b < 0.5)) {
            return Err(Error::validation(format!(
                "BER threshold {bad} outside (0, 0.5)"
            )));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(
                "BER thresholds must be strictly increasing",
            ));
        }
        Ok(SliceProfile { thresholds })
    }

    /// Parses a comma-separated list such as `1e-8,1e-6,1e-4`.
    pub fn parse(list: &str) -> Result<Self> {
        let values = list
            .split([',', ';'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::validation(format!("bad BER threshold {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SliceProfile::new(values)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Number of slice types `K`.
    pub fn slice_count(&self) -> usize {
        self.thresholds.len()
    }

    /// Number of QoT classes of the centralized formulation, `K + 1`.
    pub fn class_count(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Requirement of slice `k` (1-based).
    pub fn threshold(&self, k: usize) -> f64 {
        self.thresholds[k - 1]
    }
}

impl fmt::Display for SliceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.thresholds.iter().map(|b| format!("{b:e}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub requests: usize,
    pub load_erlangs: f64,
    pub bitrate_min_gbps: f64,
    pub bitrate_max_gbps: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            requests: 20_000,
            load_erlangs: 400.0,
            bitrate_min_gbps: 10.0,
            bitrate_max_gbps: 200.0,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<()> {
        if self.requests == 0 {
            return Err(Error::validation("requests must be at least 1"));
        }
        if !(self.load_erlangs.is_finite() && self.load_erlangs > 0.0) {
            return Err(Error::validation("load_erlangs must be positive"));
        }
        if !(self.bitrate_min_gbps > 0.0 && self.bitrate_min_gbps <= self.bitrate_max_gbps) {
            return Err(Error::validation(
                "bit-rate range must satisfy 0 < bitrate_min <= bitrate_max",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionRequest {
    pub id: u64,
    pub source: NodeId,
    pub destination: NodeId,
    /// 1-based slice type.
    pub slice: usize,
    pub bit_rate_gbps: f64,
    pub arrival_time: f64,
    pub holding_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Arrival(ConnectionRequest),
    Departure { id: u64, time: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::Arrival(r) => r.arrival_time,
            Event::Departure { time, .. } => *time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventStream {
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn arrivals(&self) -> impl Iterator<Item = &ConnectionRequest> {
        self.events.iter().filter_map(|e| match e {
            Event::Arrival(r) => Some(r),
            Event::Departure { .. } => None,
        })
    }
}

/// Draws individual requests; owns the distributions, not the rng.
#[derive(Debug, Clone)]
pub struct RequestSampler {
    node_count: usize,
    slice_count: usize,
    bitrate_min: f64,
    bitrate_max: f64,
    inter_arrival: Exp<f64>,
    holding: Exp<f64>,
}

impl RequestSampler {
    /// Mean holding time is one time unit, so the arrival rate equals the load.
    pub fn new(config: &TrafficConfig, profile: &SliceProfile, node_count: usize) -> Result<Self> {
        config.validate()?;
        if node_count < 2 {
            return Err(Error::validation("traffic needs at least two nodes"));
        }
        Ok(RequestSampler {
            node_count,
            slice_count: profile.slice_count(),
            bitrate_min: config.bitrate_min_gbps,
            bitrate_max: config.bitrate_max_gbps,
            inter_arrival: Exp::new(config.load_erlangs)
                .map_err(|e| Error::validation(e.to_string()))?,
            holding: Exp::new(1.0).expect("unit rate is valid"),
        })
    }

    /// Samples the request arriving after `now`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, id: u64, now: f64) -> ConnectionRequest {
        let gap = self.inter_arrival.sample(rng);
        let mut holding_time = self.holding.sample(rng);
        if holding_time <= 0.0 {
            holding_time = f64::MIN_POSITIVE;
        }
        let source = rng.random_range(0..self.node_count);
        let mut destination = rng.random_range(0..self.node_count - 1);
        if destination >= source {
            destination += 1;
        }
        let slice = rng.random_range(1..=self.slice_count);
        let bit_rate_gbps = rng.random_range(self.bitrate_min..=self.bitrate_max);
        ConnectionRequest {
            id,
            source,
            destination,
            slice,
            bit_rate_gbps,
            arrival_time: now + gap,
            holding_time,
        }
    }
}

/// Generates `config.requests` arrivals plus their departures, time ordered.
/// Departures sort before arrivals at equal timestamps.
pub fn generate_requests(
    config: &TrafficConfig,
    profile: &SliceProfile,
    node_count: usize,
    master_seed: u64,
) -> Result<EventStream> {
    let sampler = RequestSampler::new(config, profile, node_count)?;
    let mut rng = seed::rng_for(master_seed, seed::TRAFFIC, 0);
    let mut now = 0.0;
    let mut keyed = Vec::with_capacity(2 * config.requests);
    for id in 0..config.requests as u64 {
        let request = sampler.sample(&mut rng, id, now);
        now = request.arrival_time;
        let departure = request.arrival_time + request.holding_time;
        keyed.push((departure, 0u8, id, Event::Departure { id, time: departure }));
        keyed.push((request.arrival_time, 1u8, id, Event::Arrival(request)));
    }
    keyed.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    Ok(EventStream {
        events: keyed.into_iter().map(|(.., e)| e).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn profile(k: usize) -> SliceProfile {
        SliceProfile::new((0..k).map(|i| 10f64.powi(-8 + i as i32)).collect()).unwrap()
    }

    fn config(requests: usize) -> TrafficConfig {
        TrafficConfig {
            requests,
            ..TrafficConfig::default()
        }
    }

    #[test]
    fn slice_profile_validation() {
        assert!(SliceProfile::new(vec![]).is_err());
        assert!(SliceProfile::new(vec![1e-6, 1e-8]).is_err());
        assert!(SliceProfile::new(vec![1e-6, 1e-6]).is_err());
        assert!(SliceProfile::new(vec![0.6]).is_err());
        let p = SliceProfile::parse("1e-8, 1e-6,1e-4").unwrap();
        assert_eq!(p.thresholds(), &[1e-8, 1e-6, 1e-4]);
        assert_eq!(p.class_count(), 4);
        assert_eq!(SliceProfile::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(generate_requests(&config(0), &profile(2), 5, 1).is_err());
        let bad_load = TrafficConfig {
            load_erlangs: 0.0,
            ..config(5)
        };
        assert!(generate_requests(&bad_load, &profile(2), 5, 1).is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let a = generate_requests(&config(500), &profile(3), 30, 42).unwrap();
        let b = generate_requests(&config(500), &profile(3), 30, 42).unwrap();
        assert_eq!(format!("{a:?}").into_bytes(), format!("{b:?}").into_bytes());
        let c = generate_requests(&config(500), &profile(3), 30, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_request_stream() {
        let s = generate_requests(&config(1), &profile(1), 4, 7).unwrap();
        assert_eq!(s.events.len(), 2);
        assert!(matches!(s.events[0], Event::Arrival(_)));
        assert!(matches!(s.events[1], Event::Departure { id: 0, .. }));
    }

    #[test]
    fn stream_is_ordered_and_paired() {
        let s = generate_requests(&config(3000), &profile(4), 10, 9).unwrap();
        assert!(s.events.windows(2).all(|w| w[0].time() <= w[1].time()));
        let mut arrived = HashMap::new();
        for e in &s.events {
            match e {
                Event::Arrival(r) => {
                    assert!(arrived.insert(r.id, false).is_none());
                }
                Event::Departure { id, .. } => {
                    let done = arrived.get_mut(id).expect("departure after arrival");
                    assert!(!*done);
                    *done = true;
                }
            }
        }
        assert_eq!(arrived.len(), 3000);
        assert!(arrived.values().all(|d| *d));
    }

    #[test]
    fn slice_frequencies_within_five_sigma() {
        let n = 20_000;
        let k = 5;
        let s = generate_requests(&config(n), &profile(k), 30, 42).unwrap();
        let mut counts = vec![0usize; k];
        for r in s.arrivals() {
            counts[r.slice - 1] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), n);
        // binomial(n, 1/k)
        let p = 1.0 / k as f64;
        let expected = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() <= 5.0 * sigma, "{c}");
        }
    }

    #[test]
    fn inter_arrival_times_match_load() {
        let n = 20_000;
        let s = generate_requests(&config(n), &profile(2), 30, 5).unwrap();
        let arrivals: Vec<_> = s.arrivals().collect();
        let mean_gap = arrivals.last().unwrap().arrival_time / n as f64;
        let mean_holding =
            arrivals.iter().map(|r| r.holding_time).sum::<f64>() / n as f64;
        assert!((mean_gap * 400.0 - mean_holding).abs() / mean_holding < 0.05);
    }

    #[test]
    fn two_node_pairs() {
        let sampler = RequestSampler::new(&config(1), &profile(1), 2).unwrap();
        let mut rng = seed::rng_for(3, "test", 0);
        for i in 0..200 {
            let r = sampler.sample(&mut rng, i, 0.0);
            assert!(matches!((r.source, r.destination), (0, 1) | (1, 0)));
            assert_eq!(r.slice, 1);
        }
    }

    #[test]
    fn bit_rate_mean_and_bounds() {
        let sampler = RequestSampler::new(&config(1), &profile(3), 30).unwrap();
        let mut rng = seed::rng_for(11, "test", 0);
        let n = 10_000;
        let mut sum = 0.0;
        for i in 0..n {
            let r = sampler.sample(&mut rng, i, 0.0);
            assert!((10.0..=200.0).contains(&r.bit_rate_gbps));
            assert!(r.source != r.destination && r.holding_time > 0.0);
            assert!((1..=3).contains(&r.slice));
            sum += r.bit_rate_gbps;
        }
        let mean = sum / n as f64;
        // sd of U(10,200) is 54.8; 5 standard errors is about 2.7
        assert!((100.0..=110.0).contains(&mean), "{mean}");
    }
}
