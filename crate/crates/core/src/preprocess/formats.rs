//! On-disk capture formats: RFID read logs, raw depth recordings, and
//! per-second activity label files.

use crate::error::CoactError;
use crate::preprocess::rss::RfidRead;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

fn line_err(path: &Path, line: usize, detail: impl Into<String>) -> CoactError {
    CoactError::Format {
        detail: format!("{}:{line}: {}", path.display(), detail.into()),
        offset: None,
    }
}

/// RFID log: one read per line as `timestamp,tag_id,antenna_id,rss_dbm`.
/// Blank lines and `#` comments are skipped. Timestamps are seconds from the
/// start of the case.
pub fn read_rfid_log(path: &Path) -> Result<Vec<RfidRead>, CoactError> {
    let file = fs::File::open(path)?;
    let mut reads = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(line_err(path, i + 1, format!("want 4 fields, got {}", fields.len())));
        }
        let parse_f = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| line_err(path, i + 1, format!("bad {what} '{s}'")))
        };
        let parse_u = |s: &str, what: &str| {
            s.parse::<u32>()
                .map_err(|_| line_err(path, i + 1, format!("bad {what} '{s}'")))
        };
        reads.push(RfidRead {
            timestamp: parse_f(fields[0], "timestamp")?,
            tag_id: parse_u(fields[1], "tag id")?,
            antenna_id: parse_u(fields[2], "antenna id")?,
            rss_dbm: parse_f(fields[3], "rss")?,
        });
    }
    Ok(reads)
}

/// Raw depth recording: an ASCII header line `width height fps max_range_mm`
/// followed by packed little-endian u16 frames, row-major.
#[derive(Debug)]
pub struct DepthRecording {
    pub width: usize,
    pub height: usize,
    pub fps: u32,
    pub max_range_mm: f64,
    /// frame-major: `frames[i]` is one `height * width` raster.
    pub frames: Vec<Vec<u16>>,
}

pub fn read_depth_recording(path: &Path) -> Result<DepthRecording, CoactError> {
    let file = fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(line_err(path, 1, "header wants `width height fps max_range_mm`"));
    }
    let width: usize = fields[0]
        .parse()
        .map_err(|_| line_err(path, 1, "bad width"))?;
    let height: usize = fields[1]
        .parse()
        .map_err(|_| line_err(path, 1, "bad height"))?;
    let fps: u32 = fields[2].parse().map_err(|_| line_err(path, 1, "bad fps"))?;
    let max_range_mm: f64 = fields[3]
        .parse()
        .map_err(|_| line_err(path, 1, "bad max range"))?;
    if width == 0 || height == 0 || fps == 0 {
        return Err(line_err(path, 1, "zero extent or rate"));
    }
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let frame_bytes = width * height * 2;
    if body.len() % frame_bytes != 0 {
        return Err(CoactError::Format {
            detail: format!(
                "{}: body is {} bytes, not a multiple of the {frame_bytes}-byte frame",
                path.display(),
                body.len()
            ),
            offset: Some(header.len() as u64),
        });
    }
    let frames = body
        .chunks_exact(frame_bytes)
        .map(|chunk| {
            chunk
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]]))
                .collect()
        })
        .collect();
    Ok(DepthRecording {
        width,
        height,
        fps,
        max_range_mm,
        frames,
    })
}

pub fn write_depth_recording(path: &Path, rec: &DepthRecording) -> Result<(), CoactError> {
    let mut bytes = format!(
        "{} {} {} {}\n",
        rec.width, rec.height, rec.fps, rec.max_range_mm
    )
    .into_bytes();
    for frame in &rec.frames {
        if frame.len() != rec.width * rec.height {
            return Err(CoactError::Data {
                detail: format!(
                    "frame has {} samples, want {}",
                    frame.len(),
                    rec.width * rec.height
                ),
            });
        }
        for &v in frame {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Labels: one line per second, `activity_count` space-separated 0/1 bits.
/// `#` comments and blank lines are skipped.
pub fn read_labels(path: &Path, activity_count: usize) -> Result<Vec<Vec<u8>>, CoactError> {
    let file = fs::File::open(path)?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let bits: Vec<u8> = trimmed
            .split_whitespace()
            .map(|tok| match tok {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(line_err(path, i + 1, format!("bit must be 0 or 1, got '{other}'"))),
            })
            .collect::<Result<_, _>>()?;
        if bits.len() != activity_count {
            return Err(line_err(
                path,
                i + 1,
                format!("want {activity_count} bits, got {}", bits.len()),
            ));
        }
        rows.push(bits);
    }
    Ok(rows)
}

pub fn write_labels(path: &Path, rows: &[Vec<u8>]) -> Result<(), CoactError> {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|b| b.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfid_log_parses_and_skips_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reads.csv");
        fs::write(
            &path,
            "# case 7\n0.5, 3, 1, -61.0\n\n1.25,4,0,-48.5\n",
        )
        .unwrap();
        let reads = read_rfid_log(&path).unwrap();
        assert_eq!(reads.len(), 2);
        assert_eq!(reads[0].tag_id, 3);
        assert_eq!(reads[0].antenna_id, 1);
        assert!((reads[0].rss_dbm + 61.0).abs() < 1e-12);
        assert!((reads[1].timestamp - 1.25).abs() < 1e-12);
    }

    #[test]
    fn rfid_log_reports_the_offending_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reads.csv");
        fs::write(&path, "0.5,3,1,-61.0\n0.6,oops,1,-50\n").unwrap();
        let err = read_rfid_log(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn depth_recording_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("case.depth");
        let rec = DepthRecording {
            width: 3,
            height: 2,
            fps: 30,
            max_range_mm: 4000.0,
            frames: vec![vec![0, 1, 2, 3, 4, 5], vec![10, 11, 12, 13, 14, 15]],
        };
        write_depth_recording(&path, &rec).unwrap();
        let back = read_depth_recording(&path).unwrap();
        assert_eq!(back.width, 3);
        assert_eq!(back.height, 2);
        assert_eq!(back.fps, 30);
        assert_eq!(back.frames, rec.frames);
    }

    #[test]
    fn depth_recording_rejects_ragged_body() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("case.depth");
        fs::write(&path, b"2 2 30 4000\n\x01\x00\x02\x00\x03").unwrap();
        let err = read_depth_recording(&path).unwrap_err();
        match err {
            CoactError::Format { offset, .. } => assert_eq!(offset, Some(12)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labels_round_trip_and_enforce_width() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.txt");
        let rows = vec![vec![0u8, 1, 0], vec![1, 1, 0]];
        write_labels(&path, &rows).unwrap();
        assert_eq!(read_labels(&path, 3).unwrap(), rows);
        assert!(read_labels(&path, 4).is_err());
        fs::write(&path, "0 2 0\n").unwrap();
        assert!(read_labels(&path, 3).is_err());
    }
}
