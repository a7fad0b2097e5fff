use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{generate_sample, GenerationConfig};
use crate::error::{Error, Result};
use crate::labelprep::LabelMapping;
use crate::seed;
use crate::volio::{ImageVolume, LabelVolume};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: u64,
    /// Position of the source variant in the stream's variant list.
    pub variant: usize,
    pub seed: u64,
    pub image: ImageVolume,
    pub label: LabelVolume,
}

/// A dense batch in C order with shape `(batch, x, y, z)`, i.e. `z` varies
/// fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub shape: [usize; 4],
    pub images: Vec<f32>,
    pub labels: Vec<u16>,
}

/// Infinite, index-addressed stream of synthetic samples.
///
/// Sample `i` belongs to epoch `i / n` and uses variant `perm_epoch[i % n]`,
/// where each epoch has its own seeded permutation; its generation seed is a
/// hash of `(base_seed, i)`. Any sample can therefore be produced
/// independently of all others, in any order and on any thread.
#[derive(Debug, Clone)]
pub struct SampleStream {
    variants: Arc<Vec<(LabelVolume, LabelMapping)>>,
    cfg: GenerationConfig,
    base_seed: u64,
}

impl SampleStream {
    pub fn new(
        variants: Vec<(LabelVolume, LabelMapping)>,
        cfg: GenerationConfig,
        base_seed: u64,
    ) -> Result<Self> {
        if variants.is_empty() {
            return Err(Error::Contract("sample stream needs at least one variant".into()));
        }
        cfg.validate()?;
        Ok(SampleStream {
            variants: Arc::new(variants),
            cfg,
            base_seed,
        })
    }

    pub fn len_variants(&self) -> usize {
        self.variants.len()
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.cfg
    }

    fn epoch_order(&self, epoch: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.variants.len()).collect();
        order.shuffle(&mut seed::rng_from(self.base_seed, &[seed::stage::SHUFFLE, epoch]));
        order
    }

    pub fn variant_index(&self, i: u64) -> usize {
        let n = self.variants.len() as u64;
        self.epoch_order(i / n)[(i % n) as usize]
    }

    pub fn sample_seed(&self, i: u64) -> u64 {
        seed::derive_seed(self.base_seed, &[seed::stage::SAMPLE, i])
    }

    pub fn sample(&self, i: u64) -> Result<Sample> {
        let variant = self.variant_index(i);
        let (lv, mapping) = &self.variants[variant];
        let seed = self.sample_seed(i);
        let (image, label) = generate_sample(lv, mapping, seed, &self.cfg)?;
        Ok(Sample {
            index: i,
            variant,
            seed,
            image,
            label,
        })
    }

    /// Sequential iterator starting at `start`.
    pub fn iter_from(&self, start: u64) -> impl Iterator<Item = Result<Sample>> + '_ {
        (start..).map(move |i| self.sample(i))
    }

    /// Generates `indices` on the current rayon pool; results come back in
    /// index order.
    pub fn samples_par(&self, indices: std::ops::Range<u64>) -> Vec<Result<Sample>> {
        indices.into_par_iter().map(|i| self.sample(i)).collect()
    }

    /// Samples `start..start + size` packed into one dense batch.
    pub fn batch(&self, start: u64, size: usize) -> Result<Batch> {
        if size == 0 {
            return Err(Error::Contract("batch size must be >= 1".into()));
        }
        let [nx, ny, nz] = self.cfg.output_shape;
        let per = nx * ny * nz;
        let mut images = vec![0f32; size * per];
        let mut labels = vec![0u16; size * per];
        let samples = self.samples_par(start..start + size as u64);
        for (b, s) in samples.into_iter().enumerate() {
            let s = s.map_err(|e| Error::Contract(format!("sample {}: {e}", start + b as u64)))?;
            let (img, lab) = (s.image.data(), s.label.data());
            let base = b * per;
            for z in 0..nz {
                for y in 0..ny {
                    for x in 0..nx {
                        let src = x + nx * (y + ny * z);
                        let dst = base + (x * ny + y) * nz + z;
                        images[dst] = img[src];
                        labels[dst] = u16::try_from(lab[src]).map_err(|_| {
                            Error::Validation(format!("target label {} exceeds u16", lab[src]))
                        })?;
                    }
                }
            }
        }
        Ok(Batch {
            shape: [size, nx, ny, nz],
            images,
            labels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volio::{Geometry, Volume};
    use std::collections::BTreeMap;

    fn stream(n: usize) -> SampleStream {
        let g = Geometry::new([10, 10, 8], [1.5; 3]);
        let mapping = LabelMapping {
            generation_to_target: BTreeMap::from([(0, 0), (5, 0), (6, 1)]),
            target_names: BTreeMap::from([(0, "bg".into()), (1, "a".into())]),
            n_targets: 1,
        };
        let variants = (0..n)
            .map(|k| {
                let lv = Volume::from_fn(g.clone(), |[x, _, _]| if x < 3 + k { 6 } else { 5 }).unwrap();
                (lv, mapping.clone())
            })
            .collect();
        let cfg = GenerationConfig {
            output_shape: [8, 6, 4],
            ..GenerationConfig::default()
        };
        SampleStream::new(variants, cfg, 42).unwrap()
    }

    #[test]
    fn each_epoch_covers_all_variants() {
        let s = stream(7);
        for epoch in 0..3u64 {
            let mut seen: Vec<usize> = (0..7).map(|j| s.variant_index(epoch * 7 + j)).collect();
            seen.sort();
            assert_eq!(seen, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn restart_reproduces() {
        let s = stream(3);
        let seq: Vec<Sample> = s.iter_from(0).take(5).map(Result::unwrap).collect();
        let again = s.sample(3).unwrap();
        assert_eq!(seq[3], again);
        let resumed: Vec<Sample> = s.iter_from(3).take(2).map(Result::unwrap).collect();
        assert_eq!(&seq[3..], &resumed[..]);
    }

    #[test]
    fn batch_layout_is_c_order() {
        let s = stream(2);
        let b = s.batch(4, 2).unwrap();
        assert_eq!(b.shape, [2, 8, 6, 4]);
        let one = s.sample(5).unwrap();
        let (x, y, z) = (3, 2, 1);
        let idx = ((8 + x) * 6 + y) * 4 + z;
        assert_eq!(b.images[idx], one.image.get(x, y, z));
        assert_eq!(b.labels[idx] as u32, one.label.get(x, y, z));
        assert!(s.batch(0, 0).is_err());
    }

    #[test]
    fn empty_variant_set_rejected() {
        assert!(SampleStream::new(vec![], GenerationConfig::default(), 0).is_err());
    }
}
