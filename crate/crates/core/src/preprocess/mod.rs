//! Raw sensor streams to per-second network inputs: RFID event logs become
//! spatial RSS maps, PCM audio becomes MFSC log-energy maps, depth frames
//! are hole-filled and resized. Everything here is a pure function computed
//! in f64; callers cast to the training precision when bundling.

pub mod audio;
pub mod depth;
pub mod formats;
pub mod mfsc;
pub mod resize;
pub mod rss;

pub use audio::{read_wav, resample_linear};
pub use depth::depth_prepare;
pub use mfsc::{mfsc_extract, MfscConfig, MfscMap};
pub use rss::{build_rss_map, calibrate_coverage, AntennaGeometry, RfidRead};
