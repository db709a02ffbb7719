//! Labelled QoT datasets: the centralized multiclass set `D` and the
//! per-slice binary sets `D_k`, with CSV persistence and z-score scaling.

use std::fs;
use std::io::Write;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{self, Lightpath, PhyConfig};
use crate::spectrum::ModulationFormat;
use crate::topology::Topology;
use crate::traffic::SliceProfile;

pub const FEATURE_COUNT: usize = 7;

pub const CSV_HEADER: &str = "x1_len_km,x2_maxlink_km,x3_cfreq_slots,x4_nslots,x5_mod,x6_edfas,x7_nlinks,ber,slice_k,class_v,binary_y";

/// `[total length, max link length, central slot, slot count, modulation
/// code, EDFA count, link count]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn total_length_km(&self) -> f64 {
        self.0[0]
    }
    pub fn max_link_km(&self) -> f64 {
        self.0[1]
    }
    pub fn center_slot(&self) -> f64 {
        self.0[2]
    }
    pub fn slot_count(&self) -> f64 {
        self.0[3]
    }
    pub fn modulation_code(&self) -> f64 {
        self.0[4]
    }
    pub fn edfa_count(&self) -> f64 {
        self.0[5]
    }
    pub fn link_count(&self) -> f64 {
        self.0[6]
    }
}

pub fn extract_features(lightpath: &Lightpath, topology: &Topology, phy: &PhyConfig) -> Result<FeatureVector> {
    let metrics = topology.path_metrics(&lightpath.path)?;
    let edfas = phy::path_edfa_count(topology, &lightpath.path, phy);
    Ok(FeatureVector([
        metrics.total_length_km,
        metrics.max_link_length_km,
        lightpath.slots.center(),
        lightpath.slots.count as f64,
        f64::from(lightpath.format.code()),
        edfas as f64,
        metrics.hop_count as f64,
    ]))
}

/// QoT class `v` in `1..=K+1`: one plus the number of thresholds at or below
/// `ber`. A BER equal to `B_v` falls in the worse class.
pub fn encode_multiclass(ber: f64, profile: &SliceProfile) -> usize {
    1 + profile.thresholds().iter().filter(|&&b| ber >= b).count()
}

/// 1 when the lightpath meets requirement `threshold`, else 0.
pub fn encode_binary(ber: f64, threshold: f64) -> u8 {
    u8::from(ber < threshold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub features: FeatureVector,
    pub ber: f64,
    /// 1-based slice type.
    pub slice: usize,
    /// 1-based QoT class.
    pub class: usize,
    pub binary: u8,
}

impl Pattern {
    pub fn new(features: FeatureVector, ber: f64, slice: usize, profile: &SliceProfile) -> Self {
        Pattern {
            features,
            ber,
            slice,
            class: encode_multiclass(ber, profile),
            binary: encode_binary(ber, profile.threshold(slice)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    /// Set on a per-slice dataset `D_k`.
    pub slice: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub patterns: Vec<Pattern>,
    pub profile: SliceProfile,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn from_lightpaths(
        lightpaths: &[Lightpath],
        topology: &Topology,
        phy: &PhyConfig,
        profile: SliceProfile,
        provenance: Provenance,
    ) -> Result<Self> {
        let patterns = lightpaths
            .iter()
            .map(|lp| {
                if lp.slice == 0 || lp.slice > profile.slice_count() {
                    return Err(Error::validation(format!(
                        "lightpath {} has slice {} outside 1..={}",
                        lp.request_id,
                        lp.slice,
                        profile.slice_count()
                    )));
                }
                let features = extract_features(lp, topology, phy)?;
                Ok(Pattern::new(features, lp.ber, lp.slice, &profile))
            })
            .collect::<Result<_>>()?;
        Ok(Dataset {
            patterns,
            profile,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Pattern count per QoT class, index `v - 1`.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.profile.class_count()];
        for p in &self.patterns {
            counts[p.class - 1] += 1;
        }
        counts
    }

    /// Copy with every label recomputed against `profile`. Slice indices are
    /// kept and must fit the new profile.
    pub fn relabeled(&self, profile: SliceProfile) -> Result<Self> {
        if let Some(p) = self.patterns.iter().find(|p| p.slice > profile.slice_count()) {
            return Err(Error::validation(format!(
                "pattern slice {} exceeds the {} configured thresholds",
                p.slice,
                profile.slice_count()
            )));
        }
        Ok(Dataset {
            patterns: self
                .patterns
                .iter()
                .map(|p| Pattern::new(p.features, p.ber, p.slice, &profile))
                .collect(),
            profile,
            provenance: self.provenance.clone(),
        })
    }

    /// Splits `D` into `D_1..D_K` by slice index, preserving pattern order.
    pub fn partition(&self) -> Vec<Dataset> {
        (1..=self.profile.slice_count())
            .map(|k| Dataset {
                patterns: self
                    .patterns
                    .iter()
                    .filter(|p| p.slice == k)
                    .cloned()
                    .collect(),
                profile: self.profile.clone(),
                provenance: Provenance {
                    slice: Some(k),
                    ..self.provenance.clone()
                },
            })
            .collect()
    }

    pub fn features(&self) -> Vec<[f64; FEATURE_COUNT]> {
        self.patterns.iter().map(|p| p.features.0).collect()
    }

    /// Zero-based targets of the centralized problem (`class - 1`).
    pub fn multiclass_targets(&self) -> Vec<usize> {
        self.patterns.iter().map(|p| p.class - 1).collect()
    }

    /// Zero-based targets of the binary problem. Index 0 is the feasible
    /// class so that a single-slice problem lines up with the two-class
    /// centralized one.
    pub fn binary_targets(&self) -> Vec<usize> {
        self.patterns.iter().map(|p| usize::from(1 - p.binary)).collect()
    }

    pub fn write_csv(&self, destination: &FsPath) -> Result<()> {
        let mut buffer = Vec::new();
        self.write_to(&mut buffer)?;
        fs::write(destination, buffer).map_err(|e| Error::io(destination, e))
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<dataset>", e);
        writeln!(out, "# seed={}", self.provenance.seed).map_err(io)?;
        writeln!(out, "# config_hash={}", self.provenance.config_hash).map_err(io)?;
        writeln!(out, "# ber_thresholds={}", self.profile).map_err(io)?;
        if let Some(k) = self.provenance.slice {
            writeln!(out, "# slice={k}").map_err(io)?;
        }
        writeln!(out, "{CSV_HEADER}").map_err(io)?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for p in &self.patterns {
            writer.serialize(CsvRow::from(p))?;
        }
        writer.flush().map_err(io)?;
        Ok(())
    }

    pub fn read_csv(source: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut provenance = Provenance::default();
        let mut profile = None;
        let mut header_line = None;
        for (index, line) in text.lines().enumerate() {
            let Some(comment) = line.strip_prefix('#') else {
                header_line = Some((index + 1, line));
                break;
            };
            let Some((key, value)) = comment.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            let bad = |e: &dyn std::fmt::Display| Error::parse(index + 1, format!("{key}: {e}"));
            match key.trim() {
                "seed" => provenance.seed = value.parse().map_err(|e| bad(&e))?,
                "config_hash" => provenance.config_hash = value.to_string(),
                "ber_thresholds" => profile = Some(SliceProfile::parse(value)?),
                "slice" => provenance.slice = Some(value.parse().map_err(|e| bad(&e))?),
                _ => {}
            }
        }
        let profile =
            profile.ok_or_else(|| Error::validation("dataset is missing `# ber_thresholds=`"))?;
        match header_line {
            Some((_, line)) if line.trim_end() == CSV_HEADER => {}
            Some((line_no, line)) => {
                return Err(Error::parse(
                    line_no,
                    format!("header mismatch: expected {CSV_HEADER:?}, found {line:?}"),
                ))
            }
            None => return Err(Error::validation("dataset has no header line")),
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let mut record = csv::StringRecord::new();
        let mut patterns = Vec::new();
        loop {
            match reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {}
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line() as usize);
                    return Err(Error::parse(line, e.to_string()));
                }
            }
            let line = record.position().map_or(0, |p| p.line() as usize);
            let row: CsvRow = record
                .deserialize(Some(&headers))
                .map_err(|e| Error::parse(line, e.to_string()))?;
            patterns.push(row.into_pattern(&profile).map_err(|m| Error::parse(line, m))?);
        }
        Ok(Dataset {
            patterns,
            profile,
            provenance,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    x1_len_km: f64,
    x2_maxlink_km: f64,
    x3_cfreq_slots: f64,
    x4_nslots: f64,
    x5_mod: u8,
    x6_edfas: f64,
    x7_nlinks: f64,
    ber: f64,
    slice_k: usize,
    class_v: usize,
    binary_y: u8,
}

impl From<&Pattern> for CsvRow {
    fn from(p: &Pattern) -> Self {
        let x = p.features.0;
        CsvRow {
            x1_len_km: x[0],
            x2_maxlink_km: x[1],
            x3_cfreq_slots: x[2],
            x4_nslots: x[3],
            x5_mod: x[4] as u8,
            x6_edfas: x[5],
            x7_nlinks: x[6],
            ber: p.ber,
            slice_k: p.slice,
            class_v: p.class,
            binary_y: p.binary,
        }
    }
}

impl CsvRow {
    fn into_pattern(self, profile: &SliceProfile) -> std::result::Result<Pattern, String> {
        if ModulationFormat::from_code(self.x5_mod).is_none() {
            return Err(format!("modulation code {} outside 1..=4", self.x5_mod));
        }
        if self.slice_k == 0 || self.slice_k > profile.slice_count() {
            return Err(format!("slice {} outside 1..={}", self.slice_k, profile.slice_count()));
        }
        let features = FeatureVector([
            self.x1_len_km,
            self.x2_maxlink_km,
            self.x3_cfreq_slots,
            self.x4_nslots,
            f64::from(self.x5_mod),
            self.x6_edfas,
            self.x7_nlinks,
        ]);
        let pattern = Pattern::new(features, self.ber, self.slice_k, profile);
        if pattern.class != self.class_v || pattern.binary != self.binary_y {
            return Err(format!(
                "labels ({}, {}) disagree with BER {} under thresholds {profile}",
                self.class_v, self.binary_y, self.ber
            ));
        }
        Ok(pattern)
    }
}

/// Per-feature z-score statistics fitted on a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Population mean and standard deviation of each column.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::validation("cannot normalize an empty training split"))?;
        let width = first.as_ref().len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; width];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row.as_ref()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Normalizer { mean, std })
    }

    /// Z-scores one row. Columns with zero spread map to 0.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }

    pub fn apply_all<R: AsRef<[f64]>>(&self, rows: &[R]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r.as_ref())).collect()
    }
}
