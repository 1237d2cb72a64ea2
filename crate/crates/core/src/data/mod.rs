//! Dataset plumbing: raw file formats, composite-image assembly, on-disk
//! case bundles, and the label-subset sweep built on top of them.

pub mod bundle;
pub mod cifar;
pub mod composites;
pub mod idx;
pub mod sweep;

pub use bundle::{load_case, load_cases, save_case, save_cases};
pub use cifar::{parse_cifar100, read_cifar100, write_cifar100, CifarDataset};
pub use composites::{
    composite_cases, composite_image, composite_label, make_composites, CompositeSample,
    CompositeSpec, TileSource,
};
pub use idx::{
    parse_idx_images, parse_idx_labels, read_idx_images, read_idx_labels, write_idx_images,
    write_idx_labels, IdxImages,
};
pub use sweep::{label_subset_sweep, render_sweep, SweepConfig, SweepPoint, SweepTable};
