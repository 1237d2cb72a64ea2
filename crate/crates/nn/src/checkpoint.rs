//! Binary tensor archives. One format serves both model checkpoints and
//! preprocessed input bundles: a magic tag, a format version, then named
//! entries of `(name, dtype, dims, little-endian data)`.

use crate::error::NnError;
use crate::params::ParamStore;
use crate::scalar::{Dtype, Scalar};
use crate::tensor::Tensor;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"CATB";
const VERSION: u32 = 1;

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<(), NnError> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

struct Counter<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Counter<R> {
    fn read_exact_at(&mut self, buf: &mut [u8], what: &str) -> Result<(), NnError> {
        let at = self.offset;
        self.inner.read_exact(buf).map_err(|_| NnError::Format {
            detail: format!("truncated while reading {what}"),
            offset: Some(at),
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn read_u32(&mut self, what: &str) -> Result<u32, NnError> {
        let mut b = [0u8; 4];
        self.read_exact_at(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }
}

/// Write named tensors in iteration order.
pub fn write_tensor_file<T: Scalar>(
    path: &Path,
    entries: &[(String, &Tensor<T>)],
) -> Result<(), NnError> {
    let file = std::fs::File::create(path)
        .map_err(|e| NnError::Io(format!("create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    write_u32(&mut w, VERSION)?;
    write_u32(&mut w, entries.len() as u32)?;
    for (name, tensor) in entries {
        let name_bytes = name.as_bytes();
        write_u32(&mut w, name_bytes.len() as u32)?;
        w.write_all(name_bytes)?;
        w.write_all(&[T::DTYPE.code()])?;
        write_u32(&mut w, tensor.rank() as u32)?;
        for &d in tensor.shape() {
            write_u32(&mut w, d as u32)?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes_vec())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read every entry, converting elementwise if the file was written at a
/// different precision.
pub fn read_tensor_file<T: Scalar>(path: &Path) -> Result<Vec<(String, Tensor<T>)>, NnError> {
    let file = std::fs::File::open(path)
        .map_err(|e| NnError::Io(format!("open {}: {e}", path.display())))?;
    let mut r = Counter {
        inner: BufReader::new(file),
        offset: 0,
    };
    let mut magic = [0u8; 4];
    r.read_exact_at(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(NnError::Format {
            detail: format!("bad magic {magic:?}, expected {MAGIC:?}"),
            offset: Some(0),
        });
    }
    let version = r.read_u32("version")?;
    if version != VERSION {
        return Err(NnError::Format {
            detail: format!("unsupported version {version}"),
            offset: Some(4),
        });
    }
    let count = r.read_u32("entry count")?;
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_len = r.read_u32("name length")? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact_at(&mut name_bytes, "name")?;
        let name = String::from_utf8(name_bytes).map_err(|_| NnError::Format {
            detail: "entry name is not UTF-8".into(),
            offset: Some(r.offset),
        })?;
        let mut code = [0u8; 1];
        r.read_exact_at(&mut code, "dtype")?;
        let dtype = Dtype::from_code(code[0]).ok_or(NnError::Format {
            detail: format!("unknown dtype code {}", code[0]),
            offset: Some(r.offset - 1),
        })?;
        let rank = r.read_u32("rank")? as usize;
        if rank > 8 {
            return Err(NnError::Format {
                detail: format!("implausible rank {rank}"),
                offset: Some(r.offset - 4),
            });
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.read_u32("dimension")? as usize);
        }
        let len: usize = shape.iter().product();
        let elem = dtype.size_bytes();
        let mut raw = vec![0u8; len * elem];
        r.read_exact_at(&mut raw, &format!("data of {name}"))?;
        let tensor = match dtype {
            Dtype::F32 => {
                let data: Vec<f32> = raw.chunks_exact(4).map(f32::from_le_slice).collect();
                Tensor::from_vec(&shape, data)?.cast::<T>()
            }
            Dtype::F64 => {
                let data: Vec<f64> = raw.chunks_exact(8).map(f64::from_le_slice).collect();
                Tensor::from_vec(&shape, data)?.cast::<T>()
            }
        };
        entries.push((name, tensor));
    }
    Ok(entries)
}

/// Save every parameter of a store under its registered name.
pub fn save_params<T: Scalar>(path: &Path, params: &ParamStore<T>) -> Result<(), NnError> {
    let entries: Vec<(String, &Tensor<T>)> = params
        .iter()
        .map(|(_, p)| (p.name.clone(), &p.value))
        .collect();
    write_tensor_file(path, &entries)
}

/// Load values into an existing store by name. Every parameter must be
/// present with a matching shape; extra file entries are an error too, so a
/// checkpoint and a model can never silently drift apart.
pub fn load_params<T: Scalar>(path: &Path, params: &mut ParamStore<T>) -> Result<(), NnError> {
    let entries = read_tensor_file::<T>(path)?;
    if entries.len() != params.len() {
        return Err(NnError::Format {
            detail: format!(
                "checkpoint has {} tensors, model has {} parameters",
                entries.len(),
                params.len()
            ),
            offset: None,
        });
    }
    for (name, tensor) in entries {
        let id = params.id_of(&name).ok_or_else(|| NnError::Format {
            detail: format!("checkpoint tensor {name:?} has no matching parameter"),
            offset: None,
        })?;
        let p = params.get_mut(id);
        if p.value.shape() != tensor.shape() {
            return Err(NnError::Format {
                detail: format!(
                    "{name}: checkpoint shape {:?} vs model shape {:?}",
                    tensor.shape(),
                    p.value.shape()
                ),
                offset: None,
            });
        }
        p.value = tensor;
    }
    Ok(())
}
