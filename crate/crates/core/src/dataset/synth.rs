//! Synthetic CAN logs shaped like CICIoV2024.
//!
//! Each class draws its arbitration ID from a weighted pool and its payload
//! from a small template pool. With probability `noise`, one payload byte
//! is replaced by a uniform random value, which controls how many distinct
//! frames survive deduplication.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::record::{CanFrameRecord, RecordTable, SpecificClass};
use crate::error::{Error, Result};
use crate::rng;

pub const SYNTH_TAG: &str = "SYNTH";
pub const DOS_ID: u16 = 291;
pub const SPOOFING_IDS: [u16; 4] = [513, 476, 128, 344];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSynth {
    pub class: SpecificClass,
    pub count: usize,
    /// `(id, weight)` pairs.
    pub ids: Vec<(u16, f64)>,
    pub templates: Vec<[u8; 8]>,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: Vec<ClassSynth>,
}

impl ClassSynth {
    fn spoofing(class: SpecificClass, count: usize, id: u16, templates: &[[u8; 8]]) -> Self {
        Self {
            class,
            count,
            ids: vec![(id, 1.0)],
            templates: templates.to_vec(),
            noise: 0.004,
        }
    }
}

impl Default for SynthConfig {
    /// Roughly 1/20 of the CICIoV2024 class sizes.
    fn default() -> Self {
        let benign_ids: Vec<(u16, f64)> = [
            (535, 8.0),
            (516, 7.0),
            (359, 6.0),
            (65, 2.0),
            (1068, 2.0),
            (131, 2.0),
            (936, 2.0),
            (578, 2.0),
            (357, 1.5),
            (704, 1.0),
            (848, 1.0),
            (1072, 1.0),
            (1201, 1.0),
            (643, 1.0),
            (412, 1.0),
            (880, 1.0),
            (263, 1.0),
            (790, 1.0),
            (1438, 0.5),
        ]
        .to_vec();
        let benign_templates = vec![
            [96, 0, 0, 0, 0, 0, 0, 0],
            [132, 131, 6, 0, 0, 0, 0, 0],
            [127, 255, 127, 255, 127, 255, 127, 255],
            [152, 24, 0, 0, 0, 0, 0, 0],
            [103, 91, 6, 0, 0, 0, 0, 0],
            [16, 12, 13, 92, 86, 63, 138, 80],
            [0, 0, 0, 0, 0, 0, 0, 0],
            [200, 40, 125, 0, 6, 0, 0, 0],
        ];
        SynthConfig {
            classes: vec![
                ClassSynth {
                    class: SpecificClass::Benign,
                    count: 61_187,
                    ids: benign_ids,
                    templates: benign_templates,
                    noise: 0.05,
                },
                ClassSynth {
                    class: SpecificClass::Dos,
                    count: 3_733,
                    ids: vec![(DOS_ID, 1.0)],
                    templates: vec![[0; 8]],
                    noise: 0.005,
                },
                ClassSynth::spoofing(
                    SpecificClass::Gas,
                    500,
                    SPOOFING_IDS[0],
                    &[[255, 0, 255, 0, 0, 0, 0, 0], [250, 0, 255, 0, 0, 0, 0, 0]],
                ),
                ClassSynth::spoofing(
                    SpecificClass::Rpm,
                    2_745,
                    SPOOFING_IDS[1],
                    &[[0, 0, 0, 0, 255, 255, 0, 0], [0, 0, 0, 0, 254, 255, 0, 0]],
                ),
                ClassSynth::spoofing(
                    SpecificClass::Speed,
                    1_248,
                    SPOOFING_IDS[2],
                    &[[0, 255, 0, 0, 0, 0, 0, 0], [0, 250, 0, 0, 0, 0, 0, 0]],
                ),
                ClassSynth::spoofing(
                    SpecificClass::SteeringWheel,
                    999,
                    SPOOFING_IDS[3],
                    &[[64, 0, 0, 0, 0, 0, 0, 64], [64, 10, 0, 0, 0, 0, 0, 64]],
                ),
            ],
        }
    }
}

impl SynthConfig {
    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn count_for(&self, class: SpecificClass) -> usize {
        self.classes
            .iter()
            .filter(|c| c.class == class)
            .map(|c| c.count)
            .sum()
    }

    /// Same pools, every count multiplied by `factor` and rounded.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.classes {
            c.count = (c.count as f64 * factor).round() as usize;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.classes {
            if c.count == 0 {
                continue;
            }
            if c.ids.is_empty() || c.templates.is_empty() {
                return Err(Error::Config(format!(
                    "class {} requests {} records but has an empty id or template pool",
                    c.class, c.count
                )));
            }
            if !(0.0..=1.0).contains(&c.noise) {
                return Err(Error::Config(format!(
                    "class {} noise {} outside [0, 1]",
                    c.class, c.noise
                )));
            }
            if c.ids.iter().any(|&(_, w)| !(w >= 0.0 && w.is_finite()))
                || c.ids.iter().all(|&(_, w)| w == 0.0)
            {
                return Err(Error::Config(format!(
                    "class {} has invalid id weights",
                    c.class
                )));
            }
            let allowed = |id: u16| match c.class {
                SpecificClass::Dos => id == DOS_ID,
                SpecificClass::Benign => id <= super::record::MAX_CAN_ID,
                _ => SPOOFING_IDS.contains(&id),
            };
            if let Some(&(bad, _)) = c.ids.iter().find(|&&(id, _)| !allowed(id)) {
                return Err(Error::Config(format!(
                    "id {bad} not permitted for class {}",
                    c.class
                )));
            }
        }
        Ok(())
    }
}

/// Generates the configured classes in config order. Each class uses its
/// own seed-derived stream.
pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<RecordTable> {
    config.validate()?;
    let mut table = RecordTable::new();
    for (k, spec) in config.classes.iter().enumerate() {
        if spec.count == 0 {
            continue;
        }
        let mut rng = rng::derive(seed, k as u64);
        let weights = WeightedIndex::new(spec.ids.iter().map(|&(_, w)| w))
            .map_err(|e| Error::Config(format!("class {}: {e}", spec.class)))?;
        for _ in 0..spec.count {
            let id = spec.ids[weights.sample(&mut rng)].0;
            let mut data = spec.templates[rng.random_range(0..spec.templates.len())];
            if spec.noise > 0.0 && rng.random_bool(spec.noise) {
                let pos = rng.random_range(0..8);
                data[pos] = rng.random();
            }
            table.push(CanFrameRecord::new(id, data, spec.class)?, SYNTH_TAG);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only(class: SpecificClass, count: usize) -> SynthConfig {
        let mut cfg = SynthConfig::default();
        for c in &mut cfg.classes {
            c.count = if c.class == class { count } else { 0 };
        }
        cfg
    }

    #[test]
    fn dos_records_use_291() {
        let t = generate_synthetic(&only(SpecificClass::Dos, 100), 7).unwrap();
        assert_eq!(t.len(), 100);
        assert!(t.records().iter().all(|r| r.id == DOS_ID));
    }

    #[test]
    fn spoofing_ids_from_pool() {
        let t = generate_synthetic(&SynthConfig::default().scaled(0.05), 7).unwrap();
        for r in t.records() {
            if r.category == crate::dataset::Category::Spoofing {
                assert!(SPOOFING_IDS.contains(&r.id));
            }
        }
    }

    #[test]
    fn zero_counts_give_empty_table() {
        let t = generate_synthetic(&SynthConfig::default().scaled(0.0), 1).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig::default().scaled(0.02);
        assert_eq!(
            generate_synthetic(&cfg, 5).unwrap(),
            generate_synthetic(&cfg, 5).unwrap()
        );
    }

    #[test]
    fn empty_pool_rejected() {
        let mut cfg = only(SpecificClass::Gas, 10);
        cfg.classes[2].templates.clear();
        assert!(matches!(generate_synthetic(&cfg, 1), Err(Error::Config(_))));
    }

    #[test]
    fn foreign_dos_id_rejected() {
        let mut cfg = only(SpecificClass::Dos, 10);
        cfg.classes[1].ids = vec![(292, 1.0)];
        assert!(cfg.validate().is_err());
    }
}
