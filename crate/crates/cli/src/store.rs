//! JSON persistence for finalized samples.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use priority_sampling::samplers::{ThresholdSample, UniformSample, WeightedSample};
use priority_sampling::{ItemRecord, PrioritizedItem, PrioritySample};
use serde::{Deserialize, Serialize};

use crate::sampling::{Built, SamplerKind};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistedSample {
    pub format_version: u32,
    pub scheme: SamplerKind,
    pub k: usize,
    pub n: u64,
    #[serde(with = "extended_float::option")]
    pub threshold: Option<f64>,
    pub seed: u64,
    /// With-replacement samples only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_weight: Option<f64>,
    /// With-replacement slots that never received an item.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub empty_slots: usize,
    pub items: Vec<StoredItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredItem {
    pub id: u64,
    pub weight: f64,
    #[serde(
        default,
        with = "extended_float::option",
        skip_serializing_if = "Option::is_none"
    )]
    pub priority: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Slots held, for with-replacement samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<f64>,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

fn is_zero(x: &usize) -> bool {
    *x == 0
}

impl StoredItem {
    fn plain(item: &ItemRecord) -> Self {
        Self {
            id: item.id,
            weight: item.weight,
            priority: None,
            alpha: None,
            count: None,
            secondary: item.secondary,
            attributes: item.attributes.clone(),
        }
    }

    fn prioritized(p: &PrioritizedItem) -> Self {
        Self {
            priority: Some(p.priority),
            alpha: Some(p.alpha),
            ..Self::plain(&p.item)
        }
    }

    fn record(&self) -> Result<ItemRecord> {
        let mut item = ItemRecord::new(self.id, self.weight)?;
        item.attributes = self.attributes.clone();
        item.secondary = self.secondary;
        Ok(item)
    }

    fn prioritized_record(&self) -> Result<PrioritizedItem> {
        let (Some(priority), Some(alpha)) = (self.priority, self.alpha) else {
            bail!("item {} lacks a priority or alpha", self.id);
        };
        Ok(PrioritizedItem {
            item: self.record()?,
            alpha,
            priority,
        })
    }
}

impl PersistedSample {
    pub fn new(kind: SamplerKind, k: usize, seed: u64, built: &Built) -> Self {
        let mut out = Self {
            format_version: FORMAT_VERSION,
            scheme: kind,
            k,
            n: built.items_seen(),
            threshold: built.threshold(),
            seed,
            total_weight: None,
            empty_slots: 0,
            items: Vec::new(),
        };
        match built {
            Built::Pri(s) => out.items = s.entries().iter().map(StoredItem::prioritized).collect(),
            Built::Thr(s) => out.items = s.entries.iter().map(StoredItem::prioritized).collect(),
            Built::Uwr(s) => out.items = s.entries.iter().map(StoredItem::plain).collect(),
            Built::Wwr(s) => {
                out.total_weight = Some(s.total_weight);
                out.empty_slots = s.slots.iter().filter(|x| x.is_none()).count();
                out.items = s
                    .distinct()
                    .into_iter()
                    .map(|(item, count)| StoredItem {
                        count: Some(count),
                        ..StoredItem::plain(item)
                    })
                    .collect();
            }
        }
        out
    }

    pub fn to_built(&self) -> Result<Built> {
        if self.format_version != FORMAT_VERSION {
            bail!(
                "sample format version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            );
        }
        let threshold = || {
            self.threshold
                .with_context(|| format!("{} sample has no threshold", self.scheme.name()))
        };
        Ok(match self.scheme {
            SamplerKind::Pri | SamplerKind::PriRelaxed => {
                let entries = self
                    .items
                    .iter()
                    .map(StoredItem::prioritized_record)
                    .collect::<Result<_>>()?;
                Built::Pri(PrioritySample::from_parts(
                    self.k,
                    entries,
                    threshold()?,
                    self.n,
                )?)
            }
            SamplerKind::Thr => Built::Thr(ThresholdSample {
                k: self.k,
                threshold: threshold()?,
                entries: self
                    .items
                    .iter()
                    .map(StoredItem::prioritized_record)
                    .collect::<Result<_>>()?,
                items_seen: self.n,
            }),
            SamplerKind::Uwr => Built::Uwr(UniformSample {
                k: self.k,
                items_seen: self.n,
                entries: self
                    .items
                    .iter()
                    .map(StoredItem::record)
                    .collect::<Result<_>>()?,
            }),
            SamplerKind::Wwr => {
                let mut slots = Vec::with_capacity(self.k);
                for stored in &self.items {
                    let count = stored.count.unwrap_or(1);
                    let item = stored.record()?;
                    slots.extend(std::iter::repeat_n(Some(item), count));
                }
                slots.extend(std::iter::repeat_n(None, self.empty_slots));
                if slots.len() != self.k {
                    bail!("wwr sample holds {} slots but k is {}", slots.len(), self.k);
                }
                Built::Wwr(WeightedSample {
                    k: self.k,
                    total_weight: self
                        .total_weight
                        .context("wwr sample has no total_weight")?,
                    items_seen: self.n,
                    slots,
                })
            }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("parsing the sample file")
    }
}

/// JSON has no infinities; non-finite values are written as strings.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    fn write<S: Serializer>(x: f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x.is_nan() {
            s.serialize_str("NaN")
        } else if x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    fn read(r: Repr) -> Result<f64, String> {
        match r {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "NaN" => Ok(f64::NAN),
                _ => Err(format!("{t:?} is not a number")),
            },
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(x) => write(*x, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?
                .map(read)
                .transpose()
                .map_err(serde::de::Error::custom)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_priorities_survive() {
        let item = StoredItem {
            priority: Some(f64::INFINITY),
            ..StoredItem::plain(&ItemRecord::new(1, 2.0).unwrap())
        };
        let text = serde_json::to_string(&item).unwrap();
        assert!(text.contains("\"inf\""), "{text}");
        let back: StoredItem = serde_json::from_str(&text).unwrap();
        assert_eq!(back.priority, Some(f64::INFINITY));
    }

    #[test]
    fn version_is_checked() {
        let mut s = PersistedSample {
            format_version: 2,
            scheme: SamplerKind::Uwr,
            k: 1,
            n: 0,
            threshold: None,
            seed: 0,
            total_weight: None,
            empty_slots: 0,
            items: vec![],
        };
        assert!(s.to_built().is_err());
        s.format_version = 1;
        assert!(s.to_built().is_ok());
    }
}
