//! Spatial RSS maps from RFID reads. Each tagged object gets one floorplan
//! channel: every antenna's coverage region is filled with that object's
//! normalized signal strength, and the per-antenna maps are averaged
//! pixelwise, so overlap regions add up and dead zones stay at zero.

use crate::error::{config_err, data_err, CoactError};
use coact_nn::Tensor;
use serde::Deserialize;

/// One decoded RFID event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfidRead {
    pub timestamp: f64,
    pub tag_id: u32,
    pub antenna_id: u32,
    /// Raw received signal strength in dBm, typically -90..-30.
    pub rss_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageShape {
    Circle {
        radius: f64,
    },
    Ellipse {
        semi_axes: (f64, f64),
        rotation_deg: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Antenna {
    /// Center in decimeters; x runs along the 48-cell axis, y along the 36.
    pub center: (f64, f64),
    pub shape: CoverageShape,
}

/// Floorplan layout: grid extent in cells (1 cell = 1 dm^2) plus every
/// antenna's coverage region.
#[derive(Debug, Clone)]
pub struct AntennaGeometry {
    pub rows: usize,
    pub cols: usize,
    pub antennas: Vec<Antenna>,
}

impl Antenna {
    /// Containment test against a cell center.
    pub fn covers(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        match self.shape {
            CoverageShape::Circle { radius } => dx * dx + dy * dy <= radius * radius,
            CoverageShape::Ellipse {
                semi_axes: (a, b),
                rotation_deg,
            } => {
                let th = rotation_deg.to_radians();
                let u = dx * th.cos() + dy * th.sin();
                let v = -dx * th.sin() + dy * th.cos();
                (u / a) * (u / a) + (v / b) * (v / b) <= 1.0
            }
        }
    }
}

impl AntennaGeometry {
    pub fn validate(&self) -> Result<(), CoactError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(config_err("geometry extent must be positive"));
        }
        for (idx, ant) in self.antennas.iter().enumerate() {
            match ant.shape {
                CoverageShape::Circle { radius } if radius <= 0.0 => {
                    return Err(config_err(format!("antenna {idx}: radius must be positive")))
                }
                CoverageShape::Ellipse { semi_axes: (a, b), .. } if a <= 0.0 || b <= 0.0 => {
                    return Err(config_err(format!(
                        "antenna {idx}: semi-axes must be positive"
                    )))
                }
                _ => {}
            }
            let on_plan = (0..self.rows).any(|r| {
                (0..self.cols).any(|c| ant.covers(c as f64 + 0.5, r as f64 + 0.5))
            });
            if !on_plan {
                return Err(config_err(format!(
                    "antenna {idx}: coverage does not intersect the floorplan"
                )));
            }
        }
        Ok(())
    }

    /// Boolean coverage mask per antenna, row-major over cell centers.
    pub fn coverage_masks(&self) -> Vec<Vec<bool>> {
        self.antennas
            .iter()
            .map(|ant| {
                let mut mask = vec![false; self.rows * self.cols];
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        mask[r * self.cols + c] = ant.covers(c as f64 + 0.5, r as f64 + 0.5);
                    }
                }
                mask
            })
            .collect()
    }
}

/// Affine clamp of dBm to [0, 1], chosen so that zero means "no signal" and
/// stronger readings stay larger after zero-filled averaging.
pub fn normalize_rss(rss_dbm: f64, offset_dbm: f64, range_db: f64) -> f64 {
    ((rss_dbm + offset_dbm) / range_db).clamp(0.0, 1.0)
}

/// Default normalization window: -95 dBm floor over a 65 dB span.
pub const RSS_OFFSET_DBM: f64 = 95.0;
pub const RSS_RANGE_DB: f64 = 65.0;

/// Antenna coverage radii from walk-test measurements: each antenna's radius
/// is the arithmetic mean of its recorded visibility-loss distances (dm).
pub fn calibrate_coverage(
    measurements: &[(u32, f64)],
    antenna_count: usize,
) -> Result<Vec<f64>, CoactError> {
    let mut sums = vec![0.0f64; antenna_count];
    let mut counts = vec![0usize; antenna_count];
    for &(antenna, distance) in measurements {
        let idx = antenna as usize;
        if idx >= antenna_count {
            return Err(data_err(format!(
                "measurement names antenna {antenna}, only {antenna_count} exist"
            )));
        }
        sums[idx] += distance;
        counts[idx] += 1;
    }
    let missing: Vec<String> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| i.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(data_err(format!(
            "no walk measurements for antennas: {}",
            missing.join(", ")
        )));
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect())
}

/// One second of reads folded into a rows x cols x objects map.
pub struct RssBuild {
    pub map: Tensor<f64>,
    /// Reads dropped for unknown tag or antenna ids.
    pub skipped: usize,
}

/// Build the per-second map. Multiple reads of the same (tag, antenna) are
/// averaged in dBm before normalization with the `(offset_dbm, range_db)`
/// window. Every antenna contributes one map per object (normalized value
/// inside coverage, zero outside); the object's channel is the pixelwise
/// mean over all antennas, present or silent.
pub fn build_rss_map(
    reads: &[RfidRead],
    geometry: &AntennaGeometry,
    object_count: usize,
    normalization: (f64, f64),
) -> Result<RssBuild, CoactError> {
    let antenna_count = geometry.antennas.len();
    if antenna_count == 0 {
        return Err(config_err("geometry lists no antennas"));
    }
    let mut sum = vec![0.0f64; object_count * antenna_count];
    let mut count = vec![0u32; object_count * antenna_count];
    let mut skipped = 0usize;
    for read in reads {
        let tag = read.tag_id as usize;
        let ant = read.antenna_id as usize;
        if tag >= object_count || ant >= antenna_count {
            skipped += 1;
            continue;
        }
        sum[tag * antenna_count + ant] += read.rss_dbm;
        count[tag * antenna_count + ant] += 1;
    }

    let masks = geometry.coverage_masks();
    let (rows, cols) = (geometry.rows, geometry.cols);
    let mut map = Tensor::zeros(&[rows, cols, object_count]);
    let inv = 1.0 / antenna_count as f64;
    for tag in 0..object_count {
        for ant in 0..antenna_count {
            let c = count[tag * antenna_count + ant];
            if c == 0 {
                continue;
            }
            let mean_dbm = sum[tag * antenna_count + ant] / c as f64;
            let v = normalize_rss(mean_dbm, normalization.0, normalization.1) * inv;
            if v == 0.0 {
                continue;
            }
            let mask = &masks[ant];
            for cell in 0..rows * cols {
                if mask[cell] {
                    map.data_mut()[cell * object_count + tag] += v;
                }
            }
        }
    }
    Ok(RssBuild { map, skipped })
}

// -- geometry file -----------------------------------------------------------

#[derive(Deserialize)]
struct GeometryFile {
    extent: [usize; 2],
    #[serde(default)]
    antenna: Vec<AntennaEntry>,
}

#[derive(Deserialize)]
struct AntennaEntry {
    center: [f64; 2],
    shape: String,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    semi_axes: Option<[f64; 2]>,
    #[serde(default)]
    rotation_deg: Option<f64>,
}

impl AntennaGeometry {
    /// Parse the structured geometry config (TOML: `extent = [rows, cols]`
    /// plus one `[[antenna]]` table per antenna).
    pub fn from_toml(text: &str) -> Result<Self, CoactError> {
        let parsed: GeometryFile = toml::from_str(text)
            .map_err(|e| config_err(format!("geometry file: {e}")))?;
        let mut antennas = Vec::with_capacity(parsed.antenna.len());
        for (idx, entry) in parsed.antenna.iter().enumerate() {
            let shape = match entry.shape.as_str() {
                "circle" => CoverageShape::Circle {
                    radius: entry.radius.ok_or_else(|| {
                        config_err(format!("antenna {idx}: circle needs `radius`"))
                    })?,
                },
                "ellipse" => CoverageShape::Ellipse {
                    semi_axes: entry
                        .semi_axes
                        .map(|a| (a[0], a[1]))
                        .ok_or_else(|| {
                            config_err(format!("antenna {idx}: ellipse needs `semi_axes`"))
                        })?,
                    rotation_deg: entry.rotation_deg.unwrap_or(0.0),
                },
                other => {
                    return Err(config_err(format!(
                        "antenna {idx}: unknown shape {other:?} (circle|ellipse)"
                    )))
                }
            };
            antennas.push(Antenna {
                center: (entry.center[0], entry.center[1]),
                shape,
            });
        }
        let geometry = AntennaGeometry {
            rows: parsed.extent[0],
            cols: parsed.extent[1],
            antennas,
        };
        geometry.validate()?;
        Ok(geometry)
    }
}

/// Trauma-room default: 8 circular antennas spread over the 36 x 48 plan,
/// radius 12 dm (the calibrated visibility-loss distance).
pub fn default_geometry() -> AntennaGeometry {
    let centers = [
        (8.0, 9.0),
        (24.0, 9.0),
        (40.0, 9.0),
        (8.0, 27.0),
        (24.0, 27.0),
        (40.0, 27.0),
        (16.0, 18.0),
        (32.0, 18.0),
    ];
    AntennaGeometry {
        rows: 36,
        cols: 48,
        antennas: centers
            .iter()
            .map(|&center| Antenna {
                center,
                shape: CoverageShape::Circle { radius: 12.0 },
            })
            .collect(),
    }
}
