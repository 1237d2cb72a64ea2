//! Depth frame conditioning: hole filling, range normalization, and resize to
//! the 256 x 256 single-channel map the depth branch consumes.

use crate::error::{config_err, CoactError};
use crate::preprocess::resize::bilinear;
use coact_nn::Tensor;

pub const DEPTH_EXTENT: usize = 256;

/// Sensor reading of 0 means no return at that pixel.
pub const DEPTH_HOLE: u16 = 0;

pub struct DepthPrepared {
    /// 256 x 256 x 1 map with values in [0, 1].
    pub map: Tensor<f64>,
    /// Every input pixel was a hole; the map is all zeros.
    pub all_missing: bool,
}

/// Fill holes from the nearest valid pixel in raster order, then sweep in
/// reverse so leading holes inherit the first valid value. Returns false when
/// no pixel is valid.
fn fill_holes(frame: &mut [f64]) -> bool {
    let mut last = None;
    for v in frame.iter_mut() {
        if *v > 0.0 {
            last = Some(*v);
        } else if let Some(fill) = last {
            *v = fill;
        }
    }
    if last.is_none() {
        return false;
    }
    let mut last = None;
    for v in frame.iter_mut().rev() {
        if *v > 0.0 {
            last = Some(*v);
        } else if let Some(fill) = last {
            *v = fill;
        }
    }
    true
}

/// Raw sensor frame (row-major, `height x width`) to the presented map.
/// `max_range_mm` is the sensor's far limit; readings beyond it clamp to 1.
pub fn depth_prepare(
    frame: &[u16],
    height: usize,
    width: usize,
    max_range_mm: f64,
) -> Result<DepthPrepared, CoactError> {
    if height == 0 || width == 0 || frame.len() != height * width {
        return Err(config_err(format!(
            "depth frame {height}x{width} does not match {} samples",
            frame.len()
        )));
    }
    if max_range_mm <= 0.0 {
        return Err(config_err("depth max range must be positive"));
    }
    let mut values: Vec<f64> = frame.iter().map(|&v| v as f64).collect();
    let any_valid = fill_holes(&mut values);
    for v in values.iter_mut() {
        *v = (*v / max_range_mm).clamp(0.0, 1.0);
    }
    let plane = Tensor::from_vec(&[height, width], values)?;
    let resized = bilinear(&plane, DEPTH_EXTENT, DEPTH_EXTENT);
    let map = Tensor::from_vec(
        &[DEPTH_EXTENT, DEPTH_EXTENT, 1],
        resized.data().to_vec(),
    )?;
    Ok(DepthPrepared {
        map,
        all_missing: !any_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_scale_by_range_and_clamp() {
        let frame = vec![1000u16, 2000, 4000, 8000];
        let out = depth_prepare(&frame, 2, 2, 4000.0).unwrap();
        assert!(!out.all_missing);
        // Corners of the resized map coincide with input corners.
        let d = out.map.data();
        assert!((d[0] - 0.25).abs() < 1e-12);
        assert!((d[255] - 0.5).abs() < 1e-12);
        assert!((d[255 * 256] - 1.0).abs() < 1e-12);
        assert!((d[256 * 256 - 1] - 1.0).abs() < 1e-12, "beyond-range clamps");
    }

    #[test]
    fn interior_hole_inherits_the_previous_raster_value() {
        let frame = vec![1000u16, 0, 0, 3000];
        let mut values: Vec<f64> = frame.iter().map(|&v| v as f64).collect();
        assert!(fill_holes(&mut values));
        assert_eq!(values, [1000.0, 1000.0, 1000.0, 3000.0]);
    }

    #[test]
    fn leading_holes_take_the_first_valid_value() {
        let mut values = vec![0.0, 0.0, 2000.0, 0.0];
        assert!(fill_holes(&mut values));
        assert_eq!(values, [2000.0, 2000.0, 2000.0, 2000.0]);
    }

    #[test]
    fn all_holes_flag_with_all_zero_map() {
        let out = depth_prepare(&vec![0u16; 16], 4, 4, 4000.0).unwrap();
        assert!(out.all_missing);
        assert!(out.map.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hole_free_frame_is_unchanged_by_filling() {
        let mut values = vec![1.0, 2.0, 3.0, 4.0];
        let before = values.clone();
        assert!(fill_holes(&mut values));
        assert_eq!(values, before);
    }

    #[test]
    fn preparing_an_already_presented_map_is_idempotent() {
        let frame: Vec<u16> = (0..64 * 64).map(|i| 500 + (i % 97) as u16 * 30).collect();
        let once = depth_prepare(&frame, 64, 64, 4000.0).unwrap();
        let back: Vec<u16> = once
            .map
            .data()
            .iter()
            .map(|&v| (v * 4000.0).round() as u16)
            .collect();
        let twice = depth_prepare(&back, DEPTH_EXTENT, DEPTH_EXTENT, 4000.0).unwrap();
        let diff = once.map.max_abs_diff(&twice.map);
        assert!(diff < 1e-3, "second pass moved values by {diff}");
    }

    #[test]
    fn mismatched_extent_is_rejected() {
        assert!(depth_prepare(&[1, 2, 3], 2, 2, 4000.0).is_err());
        assert!(depth_prepare(&[1, 2, 3, 4], 2, 2, 0.0).is_err());
    }
}
