//! Flex-grid spectrum: modulation choice, slot sizing and first-fit
//! allocation under continuity, contiguity and no-overlap constraints.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::topology::LinkId;

pub type LightpathId = u64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub slots_per_link: usize,
    pub slot_width_ghz: f64,
    pub baud_rate_gbaud: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            slots_per_link: 160,
            slot_width_ghz: 25.0,
            baud_rate_gbaud: 16.0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slots_per_link == 0 || !(self.slot_width_ghz > 0.0) || !(self.baud_rate_gbaud > 0.0)
        {
            return Err(Error::validation("grid parameters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModulationFormat {
    Bpsk,
    Qpsk,
    Qam8,
    Qam16,
}

impl ModulationFormat {
    pub const ALL: [ModulationFormat; 4] = [
        ModulationFormat::Bpsk,
        ModulationFormat::Qpsk,
        ModulationFormat::Qam8,
        ModulationFormat::Qam16,
    ];

    /// Feature code: 1 = BPSK ... 4 = 16-QAM.
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn bits_per_symbol(self) -> u32 {
        u32::from(self.code())
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code).checked_sub(1)?).copied()
    }
}

impl fmt::Display for ModulationFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModulationFormat::Bpsk => "BPSK",
            ModulationFormat::Qpsk => "QPSK",
            ModulationFormat::Qam8 => "8-QAM",
            ModulationFormat::Qam16 => "16-QAM",
        })
    }
}

/// Transparent reach per format, indexed by `code - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachTable {
    reach_km: [f64; 4],
}

impl Default for ReachTable {
    fn default() -> Self {
        ReachTable {
            reach_km: [4000.0, 2000.0, 1000.0, 500.0],
        }
    }
}

impl ReachTable {
    pub fn new(reach_km: [f64; 4]) -> Result<Self> {
        if reach_km.iter().any(|r| !(*r > 0.0)) || reach_km.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::validation(
                "reach table must be positive and strictly decreasing from BPSK to 16-QAM",
            ));
        }
        Ok(ReachTable { reach_km })
    }

    /// Parses `bpsk,qpsk,8qam,16qam` reaches in km.
    pub fn parse(list: &str) -> Result<Self> {
        let values: Vec<f64> = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::validation(format!("bad reach {s:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let reach: [f64; 4] = values
            .try_into()
            .map_err(|_| Error::validation("reach table needs exactly four values"))?;
        ReachTable::new(reach)
    }

    pub fn reach_km(&self, format: ModulationFormat) -> f64 {
        self.reach_km[usize::from(format.code() - 1)]
    }

    pub fn values(&self) -> [f64; 4] {
        self.reach_km
    }
}

/// Highest-order format whose reach covers the path; BPSK when none does.
pub fn select_modulation(path_length_km: f64, reach: &ReachTable) -> ModulationFormat {
    ModulationFormat::ALL
        .iter()
        .rev()
        .copied()
        .find(|&f| reach.reach_km(f) >= path_length_km)
        .unwrap_or(ModulationFormat::Bpsk)
}

/// Slots needed for `bit_rate_gbps`, with polarization multiplexing:
/// one slot carries `2 * bits_per_symbol * baud_rate` Gb/s.
pub fn required_slots(bit_rate_gbps: f64, format: ModulationFormat, grid: &GridConfig) -> usize {
    let per_slot = 2.0 * f64::from(format.bits_per_symbol()) * grid.baud_rate_gbaud;
    ((bit_rate_gbps / per_slot).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotRange {
    pub start: usize,
    pub count: usize,
}

impl SlotRange {
    pub fn end(&self) -> usize {
        self.start + self.count
    }

    /// Central frequency in slot units.
    pub fn center(&self) -> f64 {
        self.start as f64 + self.count as f64 / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Allocation {
    links: Vec<LinkId>,
    range: SlotRange,
}

/// Per-link occupancy bitmaps plus the slot ownership map.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumState {
    slots_per_link: usize,
    words_per_link: usize,
    bitmaps: Vec<u64>,
    owners: Vec<Option<LightpathId>>,
    allocations: BTreeMap<LightpathId, Allocation>,
}

impl SpectrumState {
    pub fn new(link_count: usize, slots_per_link: usize) -> Self {
        let words_per_link = slots_per_link.div_ceil(64);
        SpectrumState {
            slots_per_link,
            words_per_link,
            bitmaps: vec![0; link_count * words_per_link],
            owners: vec![None; link_count * slots_per_link],
            allocations: BTreeMap::new(),
        }
    }

    pub fn slots_per_link(&self) -> usize {
        self.slots_per_link
    }

    pub fn link_count(&self) -> usize {
        self.owners.len() / self.slots_per_link.max(1)
    }

    pub fn active_lightpaths(&self) -> usize {
        self.allocations.len()
    }

    pub fn is_free(&self, link: LinkId, slot: usize) -> bool {
        let word = self.bitmaps[link * self.words_per_link + slot / 64];
        word & (1 << (slot % 64)) == 0
    }

    pub fn owner(&self, link: LinkId, slot: usize) -> Option<LightpathId> {
        self.owners[link * self.slots_per_link + slot]
    }

    /// Lowest start index where `count` contiguous slots are free on every
    /// link of the route; `None` when the request is blocked.
    pub fn first_fit(&self, links: &[LinkId], count: usize) -> Option<SlotRange> {
        if count == 0 || count > self.slots_per_link {
            return None;
        }
        let mut union = vec![0u64; self.words_per_link];
        for &link in links {
            let base = link * self.words_per_link;
            for (u, w) in union.iter_mut().zip(&self.bitmaps[base..base + self.words_per_link]) {
                *u |= w;
            }
        }
        let mut run = 0;
        for slot in 0..self.slots_per_link {
            if union[slot / 64] & (1 << (slot % 64)) == 0 {
                run += 1;
                if run == count {
                    return Some(SlotRange {
                        start: slot + 1 - count,
                        count,
                    });
                }
            } else {
                run = 0;
            }
        }
        None
    }

    pub fn allocate(&mut self, links: &[LinkId], range: SlotRange, id: LightpathId) -> Result<()> {
        if range.count == 0 || range.end() > self.slots_per_link {
            return Err(Error::validation(format!(
                "slot range {}+{} outside the {}-slot grid",
                range.start, range.count, self.slots_per_link
            )));
        }
        if let Some(&link) = links.iter().find(|&&l| l >= self.link_count()) {
            return Err(Error::validation(format!("unknown link {link}")));
        }
        if self.allocations.contains_key(&id) {
            return Err(Error::validation(format!("lightpath {id} already allocated")));
        }
        for &link in links {
            for slot in range.start..range.end() {
                if let Some(owner) = self.owner(link, slot) {
                    return Err(Error::SlotConflict { link, slot, owner });
                }
            }
        }
        for &link in links {
            for slot in range.start..range.end() {
                self.set(link, slot, Some(id));
            }
        }
        self.allocations.insert(
            id,
            Allocation {
                links: links.to_vec(),
                range,
            },
        );
        Ok(())
    }

    pub fn release(&mut self, id: LightpathId) -> Result<()> {
        let allocation = self
            .allocations
            .remove(&id)
            .ok_or(Error::UnknownLightpath(id))?;
        for &link in &allocation.links {
            for slot in allocation.range.start..allocation.range.end() {
                self.set(link, slot, None);
            }
        }
        Ok(())
    }

    fn set(&mut self, link: LinkId, slot: usize, owner: Option<LightpathId>) {
        let word = &mut self.bitmaps[link * self.words_per_link + slot / 64];
        let bit = 1 << (slot % 64);
        match owner {
            Some(_) => *word |= bit,
            None => *word &= !bit,
        }
        self.owners[link * self.slots_per_link + slot] = owner;
    }

    /// Cross-checks bitmaps, the ownership map and the allocation records.
    pub fn audit(&self) -> Result<()> {
        let mut expected: Vec<Option<LightpathId>> = vec![None; self.owners.len()];
        for (&id, allocation) in &self.allocations {
            for &link in &allocation.links {
                for slot in allocation.range.start..allocation.range.end() {
                    let cell = &mut expected[link * self.slots_per_link + slot];
                    if let Some(owner) = *cell {
                        return Err(Error::SlotConflict { link, slot, owner });
                    }
                    *cell = Some(id);
                }
            }
        }
        for link in 0..self.link_count() {
            for slot in 0..self.slots_per_link {
                let owner = self.owner(link, slot);
                if owner != expected[link * self.slots_per_link + slot]
                    || owner.is_some() == self.is_free(link, slot)
                {
                    return Err(Error::validation(format!(
                        "spectrum bookkeeping inconsistent at link {link}, slot {slot}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_first_fit(
        occupied: &[Vec<bool>],
        links: &[usize],
        count: usize,
    ) -> Option<usize> {
        let slots = occupied[0].len();
        (0..slots).find(|&start| {
            start + count <= slots
                && links
                    .iter()
                    .all(|&l| (start..start + count).all(|s| !occupied[l][s]))
        })
    }

    fn occupy(state: &mut SpectrumState, link: usize, slots: &[usize], id: &mut u64) {
        for &s in slots {
            state
                .allocate(&[link], SlotRange { start: s, count: 1 }, *id)
                .unwrap();
            *id += 1;
        }
    }

    #[test]
    fn modulation_selection() {
        let reach = ReachTable::default();
        assert_eq!(select_modulation(400.0, &reach), ModulationFormat::Qam16);
        assert_eq!(select_modulation(500.0, &reach), ModulationFormat::Qam16);
        assert_eq!(select_modulation(800.0, &reach), ModulationFormat::Qam8);
        assert_eq!(select_modulation(1500.0, &reach), ModulationFormat::Qpsk);
        assert_eq!(select_modulation(3000.0, &reach), ModulationFormat::Bpsk);
        assert_eq!(select_modulation(5000.0, &reach), ModulationFormat::Bpsk);
    }

    #[test]
    fn reach_table_validation() {
        assert!(ReachTable::new([4000.0, 2000.0, 2000.0, 500.0]).is_err());
        assert!(ReachTable::parse("4000,2000,1000").is_err());
        assert_eq!(
            ReachTable::parse("4000, 2000,1000,500").unwrap(),
            ReachTable::default()
        );
    }

    #[test]
    fn format_codes() {
        for f in ModulationFormat::ALL {
            assert_eq!(ModulationFormat::from_code(f.code()), Some(f));
            assert_eq!(f.bits_per_symbol(), u32::from(f.code()));
        }
        assert_eq!(ModulationFormat::from_code(0), None);
        assert_eq!(ModulationFormat::from_code(5), None);
    }

    #[test]
    fn slot_sizing() {
        let grid = GridConfig::default();
        assert_eq!(required_slots(100.0, ModulationFormat::Qpsk, &grid), 2);
        assert_eq!(required_slots(10.0, ModulationFormat::Bpsk, &grid), 1);
        assert_eq!(required_slots(200.0, ModulationFormat::Qam16, &grid), 2);
        assert_eq!(required_slots(200.0, ModulationFormat::Bpsk, &grid), 7);
        assert_eq!(required_slots(64.0, ModulationFormat::Qpsk, &grid), 1);
    }

    #[test]
    fn first_fit_respects_continuity() {
        let mut s = SpectrumState::new(2, 16);
        let mut id = 100;
        occupy(&mut s, 0, &[0, 1], &mut id);
        occupy(&mut s, 1, &[1, 2], &mut id);
        assert_eq!(s.first_fit(&[0, 1], 2), Some(SlotRange { start: 3, count: 2 }));
        assert_eq!(s.first_fit(&[0], 2), Some(SlotRange { start: 2, count: 2 }));
    }

    #[test]
    fn first_fit_edge_cases() {
        let mut s = SpectrumState::new(3, 160);
        assert_eq!(s.first_fit(&[0, 2], 2), Some(SlotRange { start: 0, count: 2 }));
        s.allocate(&[1], SlotRange { start: 0, count: 160 }, 1).unwrap();
        assert_eq!(s.first_fit(&[1], 1), None);
        assert_eq!(s.first_fit(&[0, 1], 1), None);
        // run crossing a word boundary
        s.allocate(&[0], SlotRange { start: 0, count: 62 }, 2).unwrap();
        assert_eq!(s.first_fit(&[0], 5), Some(SlotRange { start: 62, count: 5 }));
    }

    #[test]
    fn allocate_release_restores_state() {
        let mut s = SpectrumState::new(4, 160);
        s.allocate(&[0, 1], SlotRange { start: 5, count: 3 }, 1).unwrap();
        let before = s.clone();
        s.allocate(&[1, 2, 3], SlotRange { start: 20, count: 4 }, 2).unwrap();
        s.release(2).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn disjoint_allocations_coexist() {
        let mut s = SpectrumState::new(1, 16);
        s.allocate(&[0], SlotRange { start: 0, count: 3 }, 1).unwrap();
        s.allocate(&[0], SlotRange { start: 3, count: 3 }, 2).unwrap();
        assert_eq!(s.owner(0, 2), Some(1));
        assert_eq!(s.owner(0, 3), Some(2));
        s.audit().unwrap();
    }

    #[test]
    fn conflicts_and_unknown_ids() {
        let mut s = SpectrumState::new(2, 16);
        s.allocate(&[0, 1], SlotRange { start: 4, count: 4 }, 1).unwrap();
        let err = s
            .allocate(&[1], SlotRange { start: 7, count: 2 }, 2)
            .unwrap_err();
        assert!(matches!(err, Error::SlotConflict { link: 1, slot: 7, owner: 1 }));
        assert!(matches!(s.release(9), Err(Error::UnknownLightpath(9))));
        assert!(s.allocate(&[0], SlotRange { start: 15, count: 2 }, 3).is_err());
        s.audit().unwrap();
    }

    #[test]
    fn center_within_grid() {
        let r = SlotRange { start: 3, count: 2 };
        assert_eq!(r.center(), 4.0);
        assert_eq!(SlotRange { start: 0, count: 1 }.center(), 0.5);
    }

    proptest! {
        #[test]
        fn first_fit_matches_brute_force(
            links in 1usize..=3,
            slots in 1usize..=16,
            fill in prop::collection::vec(any::<bool>(), 48),
            count in 1usize..=6,
        ) {
            let mut s = SpectrumState::new(links, slots);
            let mut occupied = vec![vec![false; slots]; links];
            let mut id = 0;
            for l in 0..links {
                for slot in 0..slots {
                    if fill[l * 16 + slot] {
                        occupy(&mut s, l, &[slot], &mut id);
                        occupied[l][slot] = true;
                    }
                }
            }
            let route: Vec<usize> = (0..links).collect();
            let expected = brute_force_first_fit(&occupied, &route, count);
            prop_assert_eq!(s.first_fit(&route, count).map(|r| r.start), expected);
            if let Some(r) = s.first_fit(&route, count) {
                prop_assert!(r.center() >= 0.0 && r.center() <= slots as f64);
                let before = s.clone();
                s.allocate(&route, r, 10_000).unwrap();
                s.audit().unwrap();
                s.release(10_000).unwrap();
                prop_assert_eq!(s, before);
            }
        }
    }
}
