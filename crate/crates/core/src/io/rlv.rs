//! RLV: raw label volume as a JSON header (`*.rlv.json`) plus a little-endian,
//! x-fastest payload next to it (`*.rlv.bin`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Dims, LabelVolume, Spacing};

pub const HEADER_SUFFIX: &str = ".rlv.json";
pub const PAYLOAD_SUFFIX: &str = ".rlv.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    U16,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlvHeader {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub dtype: Dtype,
    pub order: String,
    pub endianness: String,
}

/// Payload path that belongs to a header path.
pub fn payload_path(header: &Path) -> PathBuf {
    let name = header.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let stem = name.strip_suffix(HEADER_SUFFIX).unwrap_or(name);
    header.with_file_name(format!("{stem}{PAYLOAD_SUFFIX}"))
}

/// Writes `volume` as `<header>` + sibling payload. Labels up to 255 are stored as u8.
pub fn write_rlv(header_path: &Path, volume: &LabelVolume) -> Result<()> {
    let dtype = if volume.max_label() <= u8::MAX as u16 {
        Dtype::U8
    } else {
        Dtype::U16
    };
    let header = RlvHeader {
        dims: volume.dims().0,
        spacing_mm: volume.spacing().as_array(),
        dtype,
        order: "x-fastest".into(),
        endianness: "little".into(),
    };
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    fs::write(header_path, text).map_err(|e| Error::io(header_path, e))?;

    let payload: Vec<u8> = match dtype {
        Dtype::U8 => volume.voxels().iter().map(|&v| v as u8).collect(),
        Dtype::U16 => volume.voxels().iter().flat_map(|v| v.to_le_bytes()).collect(),
    };
    let bin = payload_path(header_path);
    fs::write(&bin, payload).map_err(|e| Error::io(&bin, e))
}

pub fn read_rlv(header_path: &Path) -> Result<LabelVolume> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header: RlvHeader = serde_json::from_str(&text)
        .map_err(|e| Error::format(header_path, format!("bad header: {e}")))?;
    if header.order != "x-fastest" || header.endianness != "little" {
        return Err(Error::format(
            header_path,
            format!("unsupported layout {} / {}", header.order, header.endianness),
        ));
    }
    let [nx, ny, nz] = header.dims;
    let dims = Dims::new(nx, ny, nz).map_err(|e| Error::format(header_path, e.to_string()))?;
    let spacing = Spacing::from_array(header.spacing_mm)
        .map_err(|e| Error::format(header_path, e.to_string()))?;

    let bin = payload_path(header_path);
    let expected = dims
        .len()
        .checked_mul(header.dtype.size())
        .ok_or_else(|| Error::format(header_path, "dims overflow"))?;
    let actual = fs::metadata(&bin).map_err(|e| Error::io(&bin, e))?.len();
    if actual != expected as u64 {
        return Err(Error::format(
            &bin,
            format!("payload holds {actual} bytes, header requires {expected}"),
        ));
    }
    let payload = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let voxels = match header.dtype {
        Dtype::U8 => payload.iter().map(|&b| b as u16).collect(),
        Dtype::U16 => payload
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect(),
    };
    LabelVolume::new(dims, spacing, voxels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_background_voxel_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.rlv.json");
        let v = LabelVolume::zeros(Dims::new(1, 1, 1).unwrap(), Spacing::isotropic(1.0).unwrap());
        write_rlv(&p, &v).unwrap();
        assert_eq!(read_rlv(&p).unwrap(), v);
        assert_eq!(fs::read(dir.path().join("a.rlv.bin")).unwrap(), vec![0u8]);
    }

    #[test]
    fn wide_labels_use_u16() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.rlv.json");
        let v = LabelVolume::new(
            Dims::new(3, 1, 1).unwrap(),
            Spacing::new(1.0, 2.0, 0.5).unwrap(),
            vec![0, 300, 65535],
        )
        .unwrap();
        write_rlv(&p, &v).unwrap();
        let header: RlvHeader = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(header.dtype, Dtype::U16);
        assert_eq!(read_rlv(&p).unwrap(), v);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.rlv.json");
        let v = LabelVolume::zeros(Dims::new(4, 4, 4).unwrap(), Spacing::isotropic(1.0).unwrap());
        write_rlv(&p, &v).unwrap();
        let bin = payload_path(&p);
        let mut bytes = fs::read(&bin).unwrap();
        bytes.pop();
        fs::write(&bin, bytes).unwrap();
        assert!(matches!(read_rlv(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn unknown_dtype_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.rlv.json");
        fs::write(
            &p,
            r#"{"dims":[1,1,1],"spacing_mm":[1,1,1],"dtype":"f32","order":"x-fastest","endianness":"little"}"#,
        )
        .unwrap();
        fs::write(payload_path(&p), [0u8; 4]).unwrap();
        assert!(matches!(read_rlv(&p), Err(Error::Format { .. })));
    }
}
