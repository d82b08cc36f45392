//! NPY v1.0 and raw+JSON-sidecar readers/writers.
//!
//! Arrays are stored C-order with shape `(nz, ny, nx)`, which is the same
//! byte order as the in-memory x-fastest layout. Spacing lives in a JSON
//! sidecar next to the data file (`<stem>.json`) for both formats.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridDims, ScalarField};
use crate::error::{Error, Result};

const NPY_MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Npy,
    Raw,
}

impl FieldFormat {
    /// Guess from the file extension; anything but `.raw` is NPY.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("raw") => FieldFormat::Raw,
            _ => FieldFormat::Npy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U1,
    I1,
    F4,
    F8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::U1 | Dtype::I1 => 1,
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }

    fn npy_descr(self) -> &'static str {
        match self {
            Dtype::U1 => "|u1",
            Dtype::I1 => "|i1",
            Dtype::F4 => "<f4",
            Dtype::F8 => "<f8",
        }
    }

    fn from_npy_descr(descr: &str) -> Option<Self> {
        match descr {
            "|u1" | "<u1" | "u1" => Some(Dtype::U1),
            "|i1" | "<i1" | "i1" => Some(Dtype::I1),
            "<f4" => Some(Dtype::F4),
            "<f8" => Some(Dtype::F8),
            _ => None,
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, Dtype::U1 | Dtype::I1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    nx: usize,
    ny: usize,
    nz: usize,
    dtype: Dtype,
    spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn decode(bytes: &[u8], dtype: Dtype) -> Vec<f64> {
    match dtype {
        Dtype::U1 => bytes.iter().map(|&b| b as f64).collect(),
        Dtype::I1 => bytes.iter().map(|&b| b as i8 as f64).collect(),
        Dtype::F4 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F8 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    }
}

fn encode(values: &[f64], dtype: Dtype) -> Vec<u8> {
    match dtype {
        Dtype::U1 => values.iter().map(|&v| v as u8).collect(),
        Dtype::I1 => values.iter().map(|&v| v as i8 as u8).collect(),
        Dtype::F4 => values
            .iter()
            .flat_map(|&v| (v as f32).to_le_bytes())
            .collect(),
        Dtype::F8 => values.iter().flat_map(|&v| v.to_le_bytes()).collect(),
    }
}

fn npy_err(reason: impl Into<String>) -> Error {
    Error::Format {
        format: "npy",
        reason: reason.into(),
    }
}

/// Value of `'key': <value>` inside the NPY header dict.
fn header_entry<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let needle = format!("'{key}':");
    let start = header.find(&needle)? + needle.len();
    let rest = header[start..].trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')')? + 1
    } else if let Some(stripped) = rest.strip_prefix('\'') {
        stripped.find('\'')? + 2
    } else {
        rest.find([',', '}']).unwrap_or(rest.len())
    };
    Some(rest[..end].trim())
}

fn parse_npy(bytes: &[u8]) -> Result<(Dtype, [usize; 3], &[u8])> {
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(npy_err("missing magic string"));
    }
    let (header_len, offset) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 if bytes.len() >= 12 => (
            u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize,
            12,
        ),
        v => return Err(npy_err(format!("unsupported version {v}"))),
    };
    let body = offset + header_len;
    if bytes.len() < body {
        return Err(npy_err("truncated header"));
    }
    let header =
        std::str::from_utf8(&bytes[offset..body]).map_err(|_| npy_err("non-ascii header"))?;

    let descr = header_entry(header, "descr").ok_or_else(|| npy_err("no descr"))?;
    let descr = descr.trim_matches('\'');
    let dtype = Dtype::from_npy_descr(descr)
        .ok_or_else(|| npy_err(format!("unsupported dtype {descr}")))?;

    match header_entry(header, "fortran_order") {
        Some("False") => {}
        Some("True") => return Err(npy_err("fortran_order arrays are not supported")),
        _ => return Err(npy_err("no fortran_order")),
    }

    let shape = header_entry(header, "shape").ok_or_else(|| npy_err("no shape"))?;
    let axes = shape
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| npy_err(format!("bad shape {shape}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let [nz, ny, nx] = axes[..] else {
        return Err(npy_err(format!("expected a 3D array, got shape {shape}")));
    };

    let payload = &bytes[body..];
    let needed = nx * ny * nz * dtype.size();
    if payload.len() < needed {
        return Err(npy_err(format!(
            "payload has {} bytes, shape needs {needed}",
            payload.len()
        )));
    }
    Ok((dtype, [nx, ny, nz], &payload[..needed]))
}

fn npy_bytes(values: &[f64], dims: GridDims, dtype: Dtype) -> Vec<u8> {
    let mut header = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': ({}, {}, {}), }}",
        dtype.npy_descr(),
        dims.nz,
        dims.ny,
        dims.nx
    );
    // Pad so the data starts on a 64-byte boundary; header ends in '\n'.
    let unpadded = NPY_MAGIC.len() + 4 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + values.len() * dtype.size());
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&encode(values, dtype));
    out
}

fn read_sidecar(path: &Path) -> Result<Option<Sidecar>> {
    let p = sidecar_path(path);
    if !p.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Format {
            format: "sidecar",
            reason: e.to_string(),
        })
}

/// Loads a field and reports the stored element type.
pub fn load_field_with_dtype(path: &Path, format: FieldFormat) -> Result<(ScalarField, Dtype)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let sidecar = read_sidecar(path)?;
    let (dtype, [nx, ny, nz], payload) = match format {
        FieldFormat::Npy => parse_npy(&bytes)?,
        FieldFormat::Raw => {
            let sc = sidecar.as_ref().ok_or_else(|| Error::Format {
                format: "raw",
                reason: format!("missing sidecar {}", sidecar_path(path).display()),
            })?;
            let needed = sc.nx * sc.ny * sc.nz * sc.dtype.size();
            if bytes.len() != needed {
                return Err(Error::Format {
                    format: "raw",
                    reason: format!("file has {} bytes, sidecar implies {needed}", bytes.len()),
                });
            }
            (sc.dtype, [sc.nx, sc.ny, sc.nz], &bytes[..])
        }
    };
    let spacing = match &sidecar {
        Some(sc) if [sc.nx, sc.ny, sc.nz] == [nx, ny, nz] => sc.spacing,
        Some(_) => {
            return Err(Error::Format {
                format: "sidecar",
                reason: "sidecar dims disagree with the data header".into(),
            })
        }
        None => 1.0,
    };
    let dims = GridDims::with_spacing(nx, ny, nz, spacing)?;
    Ok((ScalarField::new(dims, decode(payload, dtype))?, dtype))
}

pub fn load_field(path: &Path, format: FieldFormat) -> Result<ScalarField> {
    load_field_with_dtype(path, format).map(|(f, _)| f)
}

fn write_with(
    field: &ScalarField,
    path: &Path,
    format: FieldFormat,
    dtype: Dtype,
    provenance: Option<&serde_json::Value>,
) -> Result<()> {
    let dims = field.dims();
    let data = match format {
        FieldFormat::Npy => npy_bytes(field.values(), dims, dtype),
        FieldFormat::Raw => encode(field.values(), dtype),
    };
    fs::write(path, data).map_err(|e| Error::io(path, e))?;
    let sidecar = Sidecar {
        nx: dims.nx,
        ny: dims.ny,
        nz: dims.nz,
        dtype,
        spacing: dims.spacing,
        provenance: provenance.cloned(),
    };
    let sp = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&sp, text + "\n").map_err(|e| Error::io(&sp, e))
}

/// Writes `f8` values plus the spacing sidecar.
pub fn save_field(field: &ScalarField, path: &Path, format: FieldFormat) -> Result<()> {
    write_with(field, path, format, Dtype::F8, None)
}

/// [`save_field`] with a provenance record stored in the sidecar.
pub fn save_field_annotated(
    field: &ScalarField,
    path: &Path,
    format: FieldFormat,
    provenance: &serde_json::Value,
) -> Result<()> {
    write_with(field, path, format, Dtype::F8, Some(provenance))
}

/// Writes a mask as `u1` 0/1 values.
pub fn save_mask(mask: &super::BinaryMask, path: &Path, format: FieldFormat) -> Result<()> {
    write_with(&mask.to_field(), path, format, Dtype::U1, None)
}

pub fn save_mask_annotated(
    mask: &super::BinaryMask,
    path: &Path,
    format: FieldFormat,
    provenance: &serde_json::Value,
) -> Result<()> {
    write_with(&mask.to_field(), path, format, Dtype::U1, Some(provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{threshold_mask, BinaryMask, Keep};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn npy_zeros_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.npy");
        let f = ScalarField::constant(GridDims::cube(4).unwrap(), 0.0).unwrap();
        save_field(&f, &p, FieldFormat::Npy).unwrap();
        let g = load_field(&p, FieldFormat::Npy).unwrap();
        assert_eq!(g.dims().shape(), [4, 4, 4]);
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn header_is_64_byte_aligned() {
        let d = GridDims::new(3, 2, 5).unwrap();
        let bytes = npy_bytes(&vec![0.0; d.len()], d, Dtype::F8);
        let hl = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((10 + hl) % 64, 0);
        assert_eq!(bytes[10 + hl - 1], b'\n');
        let header = std::str::from_utf8(&bytes[10..10 + hl]).unwrap();
        assert!(header.contains("'shape': (5, 2, 3)"));
    }

    #[test]
    fn small_field_roundtrip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let d = GridDims::with_spacing(2, 2, 2, 0.25).unwrap();
        let f = ScalarField::new(d, (1..=8).map(f64::from).collect()).unwrap();
        for (name, fmt) in [("a.npy", FieldFormat::Npy), ("a.raw", FieldFormat::Raw)] {
            let p = dir.path().join(name);
            save_field(&f, &p, fmt).unwrap();
            assert_eq!(load_field(&p, fmt).unwrap(), f);
        }
    }

    #[test]
    fn random_field_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = GridDims::cube(16).unwrap();
        let vals: Vec<f64> = (0..d.len())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let f = ScalarField::new(d, vals).unwrap();
        let p = dir.path().join("r.npy");
        save_field(&f, &p, FieldFormat::Npy).unwrap();
        let g = load_field(&p, FieldFormat::Npy).unwrap();
        let a: Vec<u64> = f.values().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = g.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn mask_roundtrip_via_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let d = GridDims::cube(5).unwrap();
        let m = BinaryMask::from_fn(d, |x, y, z| (x * 7 + y * 3 + z) % 4 == 1);
        let p = dir.path().join("m.npy");
        save_mask(&m, &p, FieldFormat::Npy).unwrap();
        let (f, dtype) = load_field_with_dtype(&p, FieldFormat::Npy).unwrap();
        assert_eq!(dtype, Dtype::U1);
        assert_eq!(threshold_mask(&f, 0.5, Keep::AboveOrEqual), m);
    }

    #[test]
    fn nan_rejected_with_index() {
        let dir = tempfile::tempdir().unwrap();
        let d = GridDims::cube(2).unwrap();
        let mut vals = vec![0.0; 8];
        vals[5] = f64::NAN;
        let p = dir.path().join("nan.npy");
        fs::write(&p, npy_bytes(&vals, d, Dtype::F8)).unwrap();
        match load_field(&p, FieldFormat::Npy) {
            Err(Error::NonFinite { index }) => assert_eq!(index, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_3d_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.npy");
        let mut bytes = npy_bytes(&[0.0; 4], GridDims::new(4, 1, 1).unwrap(), Dtype::F8);
        let header_end = 10 + u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        let header = String::from_utf8(bytes[10..header_end].to_vec()).unwrap();
        let patched = header.replace("(1, 1, 4)", "(4,)      ");
        bytes.splice(10..header_end, patched.into_bytes());
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            load_field(&p, FieldFormat::Npy),
            Err(Error::Format { .. })
        ));
        fs::write(&p, b"not an npy file").unwrap();
        assert!(load_field(&p, FieldFormat::Npy).is_err());
    }

    #[test]
    fn reads_f4_and_i1() {
        let dir = tempfile::tempdir().unwrap();
        let d = GridDims::new(3, 1, 1).unwrap();
        let p = dir.path().join("f4.npy");
        fs::write(&p, npy_bytes(&[0.5, -1.0, 2.0], d, Dtype::F4)).unwrap();
        assert_eq!(
            load_field(&p, FieldFormat::Npy).unwrap().values(),
            &[0.5, -1.0, 2.0]
        );
        fs::write(&p, npy_bytes(&[-3.0, 0.0, 7.0], d, Dtype::I1)).unwrap();
        assert_eq!(
            load_field(&p, FieldFormat::Npy).unwrap().values(),
            &[-3.0, 0.0, 7.0]
        );
    }
}
