//! Composite-image sampling: S source tiles arranged in an r x c grid make
//! one large image whose multi-hot label covers only a chosen class subset.
//! Samples store tile indices; pixels materialize on demand.

use coact_nn::tensor::hwc_index;
use coact_nn::{Scalar, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::cifar::{CifarDataset, CIFAR_EDGE, CIFAR_PIXEL_BYTES};
use crate::data::idx::IdxImages;
use crate::error::{config_err, data_err, CoactError};
use crate::model::{Modality, SecondInputs};
use crate::training::CaseSequence;

/// Uniformly sized labeled tiles in sample-major HWC bytes.
#[derive(Debug, Clone)]
pub struct TileSource {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub class_count: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u16>,
}

impl TileSource {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn tile(&self, i: usize) -> &[u8] {
        let span = self.height * self.width * self.channels;
        &self.pixels[i * span..(i + 1) * span]
    }

    pub fn from_idx(images: IdxImages, labels: Vec<u8>) -> Result<Self, CoactError> {
        if images.count != labels.len() {
            return Err(data_err(format!(
                "{} images with {} labels",
                images.count,
                labels.len()
            )));
        }
        let class_count = labels.iter().map(|l| *l as usize + 1).max().unwrap_or(0);
        Ok(TileSource {
            height: images.height,
            width: images.width,
            channels: 1,
            class_count,
            pixels: images.pixels,
            labels: labels.into_iter().map(u16::from).collect(),
        })
    }

    pub fn from_cifar100(ds: CifarDataset) -> Result<Self, CoactError> {
        let count = ds.len();
        let mut pixels = Vec::with_capacity(count * CIFAR_PIXEL_BYTES);
        for i in 0..count {
            for y in 0..CIFAR_EDGE {
                for x in 0..CIFAR_EDGE {
                    for c in 0..3 {
                        pixels.push(ds.pixel(i, y, x, c));
                    }
                }
            }
        }
        Ok(TileSource {
            height: CIFAR_EDGE,
            width: CIFAR_EDGE,
            channels: 3,
            class_count: crate::data::cifar::CIFAR100_FINE_CLASSES,
            pixels,
            labels: ds.fine.iter().map(|l| u16::from(*l)).collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompositeSpec {
    pub rows: usize,
    pub cols: usize,
    /// Classes that appear in the label vector; everything else is drawn in
    /// pixels but ignored by the labels.
    pub labeled_subset: Vec<u16>,
    /// Draw S distinct classes per sample (the default) or S independent
    /// tiles that may repeat a class.
    pub distinct_classes: bool,
    pub seed: u64,
}

impl CompositeSpec {
    pub fn standard(labeled_subset: Vec<u16>, seed: u64) -> Self {
        CompositeSpec {
            rows: 2,
            cols: 3,
            labeled_subset,
            distinct_classes: true,
            seed,
        }
    }

    pub fn tiles_per_image(&self) -> usize {
        self.rows * self.cols
    }
}

/// One composite: the source-tile index for each grid slot, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeSample {
    pub tiles: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CompositeSet {
    pub spec: CompositeSpec,
    pub samples: Vec<CompositeSample>,
}

/// Stable per-sample stream so generation order never couples samples.
fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(index as u64),
    )
}

pub fn make_composites(
    source: &TileSource,
    count: usize,
    spec: &CompositeSpec,
) -> Result<CompositeSet, CoactError> {
    if spec.rows == 0 || spec.cols == 0 {
        return Err(config_err("composite grid must have rows and columns"));
    }
    if spec.labeled_subset.is_empty() {
        return Err(config_err("labeled subset must not be empty"));
    }
    if source.is_empty() {
        return Err(data_err("tile source is empty"));
    }
    for class in &spec.labeled_subset {
        if *class as usize >= source.class_count {
            return Err(config_err(format!(
                "labeled class {class} outside source's {} classes",
                source.class_count
            )));
        }
    }
    let s = spec.tiles_per_image();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); source.class_count];
    for (i, label) in source.labels.iter().enumerate() {
        by_class[*label as usize].push(i);
    }
    let present: Vec<usize> = (0..source.class_count)
        .filter(|c| !by_class[*c].is_empty())
        .collect();
    if spec.distinct_classes && s > present.len() {
        return Err(config_err(format!(
            "{s} distinct-class tiles from only {} populated classes",
            present.len()
        )));
    }

    let samples = (0..count)
        .map(|index| {
            let mut rng = sample_rng(spec.seed, index);
            let tiles = if spec.distinct_classes {
                let mut classes = present.clone();
                classes.shuffle(&mut rng);
                classes[..s]
                    .iter()
                    .map(|&c| by_class[c][rng.gen_range(0..by_class[c].len())])
                    .collect()
            } else {
                (0..s).map(|_| rng.gen_range(0..source.len())).collect()
            };
            CompositeSample { tiles }
        })
        .collect();
    Ok(CompositeSet {
        spec: spec.clone(),
        samples,
    })
}

/// Multi-hot label over the labeled subset: bit j set iff some tile carries
/// class `labeled_subset[j]`. Tile order cannot matter.
pub fn composite_label(
    source: &TileSource,
    sample: &CompositeSample,
    labeled_subset: &[u16],
) -> Vec<u8> {
    labeled_subset
        .iter()
        .map(|class| {
            u8::from(
                sample
                    .tiles
                    .iter()
                    .any(|&t| source.labels[t] == *class),
            )
        })
        .collect()
}

/// Stitch the grid into one [rows*th, cols*tw, ch] plane scaled to [0, 1].
pub fn composite_image<T: Scalar>(
    source: &TileSource,
    sample: &CompositeSample,
    spec: &CompositeSpec,
) -> Result<Tensor<T>, CoactError> {
    let (th, tw, ch) = (source.height, source.width, source.channels);
    let (height, width) = (spec.rows * th, spec.cols * tw);
    if sample.tiles.len() != spec.tiles_per_image() {
        return Err(data_err(format!(
            "sample has {} tiles for a {}x{} grid",
            sample.tiles.len(),
            spec.rows,
            spec.cols
        )));
    }
    let mut data = vec![T::zero(); height * width * ch];
    for (slot, &tile_index) in sample.tiles.iter().enumerate() {
        let (gy, gx) = (slot / spec.cols, slot % spec.cols);
        let tile = source.tile(tile_index);
        for y in 0..th {
            for x in 0..tw {
                for c in 0..ch {
                    let v = tile[hwc_index(tw, ch, y, x, c)];
                    data[hwc_index(width, ch, gy * th + y, gx * tw + x, c)] =
                        T::of(f64::from(v) / 255.0);
                }
            }
        }
    }
    Ok(Tensor::from_vec(&[height, width, ch], data)?)
}

/// Each composite becomes a one-second case: static images run the
/// recurrence for a single step from zero state.
pub fn composite_cases<T: Scalar>(
    source: &TileSource,
    set: &CompositeSet,
    prefix: &str,
) -> Result<Vec<CaseSequence<T>>, CoactError> {
    set.samples
        .iter()
        .enumerate()
        .map(|(i, sample)| {
            let image = composite_image::<T>(source, sample, &set.spec)?;
            let mut case = CaseSequence::new(format!("{prefix}{i:05}"));
            case.push(
                SecondInputs::just(Modality::Tiles, image),
                composite_label(source, sample, &set.spec.labeled_subset),
            );
            Ok(case)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ten 4x4 single-channel classes; class k lights pixel k.
    pub fn toy_source(per_class: usize) -> TileSource {
        let mut pixels = Vec::new();
        let mut labels = Vec::new();
        for copy in 0..per_class {
            for class in 0..10u16 {
                let mut tile = vec![0u8; 16];
                tile[class as usize] = 200 + (copy % 55) as u8;
                pixels.extend(tile);
                labels.push(class);
            }
        }
        TileSource {
            height: 4,
            width: 4,
            channels: 1,
            class_count: 10,
            pixels,
            labels,
        }
    }

    #[test]
    fn mnist_sized_tiles_make_a_56_by_84_composite() {
        let images = IdxImages {
            count: 12,
            height: 28,
            width: 28,
            pixels: vec![0; 12 * 28 * 28],
        };
        let labels: Vec<u8> = (0..12).map(|i| i % 10).collect();
        let source = TileSource::from_idx(images, labels).unwrap();
        let spec = CompositeSpec::standard((0..10).collect(), 1);
        let set = make_composites(&source, 2, &spec).unwrap();
        let image: Tensor<f32> =
            composite_image(&source, &set.samples[0], &set.spec).unwrap();
        assert_eq!(image.shape(), &[56, 84, 1]);
    }

    #[test]
    fn distinct_sampling_with_full_subset_gives_six_ones() {
        let source = toy_source(3);
        let spec = CompositeSpec::standard((0..10).collect(), 5);
        let set = make_composites(&source, 20, &spec).unwrap();
        for sample in &set.samples {
            let label = composite_label(&source, sample, &spec.labeled_subset);
            assert_eq!(label.iter().map(|b| *b as usize).sum::<usize>(), 6);
        }
    }

    #[test]
    fn labels_ignore_classes_outside_the_subset() {
        let source = toy_source(1);
        // Tiles of classes 0, 1, 7: only 0 and 1 are labeled.
        let sample = CompositeSample { tiles: vec![0, 1, 7, 0, 1, 7] };
        let label = composite_label(&source, &sample, &[0, 1, 2]);
        assert_eq!(label, vec![1, 1, 0]);
    }

    #[test]
    fn tile_order_never_changes_the_label() {
        let source = toy_source(2);
        let spec = CompositeSpec::standard((0..10).collect(), 9);
        let set = make_composites(&source, 10, &spec).unwrap();
        for sample in &set.samples {
            let base = composite_label(&source, sample, &spec.labeled_subset);
            let mut reversed = sample.clone();
            reversed.tiles.reverse();
            assert_eq!(composite_label(&source, &reversed, &spec.labeled_subset), base);
        }
    }

    #[test]
    fn too_few_classes_for_distinct_sampling_is_an_error() {
        let mut source = toy_source(1);
        source.labels.truncate(4);
        source.pixels.truncate(4 * 16);
        let spec = CompositeSpec::standard(vec![0, 1], 0);
        assert!(make_composites(&source, 1, &spec).is_err());
        // Repeats allowed: four classes suffice for six tiles.
        let spec = CompositeSpec {
            distinct_classes: false,
            ..spec
        };
        assert!(make_composites(&source, 1, &spec).is_ok());
    }

    #[test]
    fn generation_is_deterministic_and_per_sample_decoupled() {
        let source = toy_source(2);
        let spec = CompositeSpec::standard((0..10).collect(), 21);
        let a = make_composites(&source, 8, &spec).unwrap();
        let b = make_composites(&source, 8, &spec).unwrap();
        assert_eq!(a.samples, b.samples);
        // Generating fewer samples leaves the shared prefix intact.
        let c = make_composites(&source, 3, &spec).unwrap();
        assert_eq!(&a.samples[..3], &c.samples[..]);
    }

    #[test]
    fn pixels_scale_into_unit_range() {
        let source = toy_source(1);
        let spec = CompositeSpec::standard((0..10).collect(), 2);
        let set = make_composites(&source, 1, &spec).unwrap();
        let image: Tensor<f64> =
            composite_image(&source, &set.samples[0], &set.spec).unwrap();
        assert!(image.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(image.data().iter().any(|v| *v > 0.5), "tiles left no mark");
    }

    #[test]
    fn cases_carry_the_image_and_label() {
        let source = toy_source(2);
        let spec = CompositeSpec::standard((0..10).collect(), 3);
        let set = make_composites(&source, 4, &spec).unwrap();
        let cases: Vec<CaseSequence<f32>> =
            composite_cases(&source, &set, "train").unwrap();
        assert_eq!(cases.len(), 4);
        for case in &cases {
            case.validate(10).unwrap();
            assert_eq!(case.len(), 1);
            assert!(case.inputs[0].tiles.is_some());
        }
    }
}
