//! Minimal NIfTI-1 label reader.
//!
//! Supports single-file (`n+1`) and paired (`ni1`, `.hdr` + `.img`) layouts,
//! optionally gzip-compressed, with uint8, int16, uint16 and integral float32
//! voxels. Orientation is ignored.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::volume::{Dims, LabelVolume, Spacing};

const HEADER_SIZE: usize = 348;

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_FLOAT32: i16 = 16;
const DT_UINT16: i16 = 512;

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    if is_gz(path) {
        GzDecoder::new(file)
            .read_to_end(&mut buf)
            .map_err(|e| Error::io(path, e))?;
    } else {
        let mut file = file;
        file.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    }
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    little: bool,
}

impl Reader<'_> {
    fn i16(&self, off: usize) -> i16 {
        let b = [self.bytes[off], self.bytes[off + 1]];
        if self.little {
            i16::from_le_bytes(b)
        } else {
            i16::from_be_bytes(b)
        }
    }

    fn i32(&self, off: usize) -> i32 {
        let b: [u8; 4] = self.bytes[off..off + 4].try_into().unwrap();
        if self.little {
            i32::from_le_bytes(b)
        } else {
            i32::from_be_bytes(b)
        }
    }

    fn f32(&self, off: usize) -> f32 {
        f32::from_bits(self.i32(off) as u32)
    }
}

/// Path of the `.img` file paired with a `.hdr` header.
fn paired_image_path(path: &Path) -> PathBuf {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let image = if let Some(stem) = name.strip_suffix(".hdr.gz") {
        format!("{stem}.img.gz")
    } else if let Some(stem) = name.strip_suffix(".hdr") {
        format!("{stem}.img")
    } else {
        format!("{name}.img")
    };
    path.with_file_name(image)
}

/// Reads a NIfTI-1 label volume.
pub fn read_nifti_labels(path: &Path) -> Result<LabelVolume> {
    let bytes = read_all(path)?;
    if bytes.len() < HEADER_SIZE {
        return Err(Error::format(path, "file shorter than the 348-byte header"));
    }
    let little = match (
        i32::from_le_bytes(bytes[0..4].try_into().unwrap()),
        i32::from_be_bytes(bytes[0..4].try_into().unwrap()),
    ) {
        (348, _) => true,
        (_, 348) => false,
        _ => return Err(Error::format(path, "sizeof_hdr is not 348")),
    };
    let r = Reader {
        bytes: &bytes,
        little,
    };
    let magic = &bytes[344..348];
    let single_file = match magic {
        b"n+1\0" => true,
        b"ni1\0" => false,
        _ => return Err(Error::format(path, "missing NIfTI-1 magic")),
    };

    let ndim = r.i16(40);
    if !(1..=7).contains(&ndim) {
        return Err(Error::format(path, format!("invalid dim[0] = {ndim}")));
    }
    let mut dims = [1usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        if (a as i16) < ndim {
            let v = r.i16(42 + 2 * a);
            if v <= 0 {
                return Err(Error::format(path, format!("dim[{}] = {v}", a + 1)));
            }
            *d = v as usize;
        }
    }
    for a in 3..ndim as usize {
        if r.i16(42 + 2 * a) > 1 {
            return Err(Error::format(path, "only 3D label volumes are supported"));
        }
    }
    let dims = Dims::new(dims[0], dims[1], dims[2])?;

    let datatype = r.i16(70);
    let bytes_per_voxel = match datatype {
        DT_UINT8 => 1,
        DT_INT16 | DT_UINT16 => 2,
        DT_FLOAT32 => 4,
        other => {
            return Err(Error::format(path, format!("unsupported datatype code {other}")));
        }
    };

    let mut spacing = [1.0f64; 3];
    for (a, s) in spacing.iter_mut().enumerate() {
        if (a as i16) < ndim {
            *s = r.f32(80 + 4 * a) as f64;
        }
    }
    let spacing = Spacing::from_array(spacing)
        .map_err(|_| Error::format(path, format!("invalid pixdim {spacing:?}")))?;

    let slope = r.f32(112);
    let inter = r.f32(116);
    if !((slope == 0.0 || slope == 1.0) && (inter == 0.0 || inter.is_nan())) {
        return Err(Error::format(
            path,
            format!("scaling (scl_slope {slope}, scl_inter {inter}) is not identity"),
        ));
    }

    let qform = r.i16(252);
    let sform = r.i16(254);
    if qform != 0 || sform != 0 {
        log::warn!(
            "{}: orientation (qform {qform}, sform {sform}) ignored",
            path.display()
        );
    }

    let payload_len = dims.len() * bytes_per_voxel;
    let image_bytes;
    let payload: &[u8] = if single_file {
        let offset = r.f32(108);
        if !(offset >= HEADER_SIZE as f32) || offset.fract() != 0.0 {
            return Err(Error::format(path, format!("invalid vox_offset {offset}")));
        }
        let offset = offset as usize;
        if bytes.len() < offset || bytes.len() - offset < payload_len {
            return Err(Error::format(path, "truncated payload"));
        }
        &bytes[offset..offset + payload_len]
    } else {
        let img = paired_image_path(path);
        image_bytes = read_all(&img)?;
        if image_bytes.len() < payload_len {
            return Err(Error::format(&img, "truncated payload"));
        }
        &image_bytes[..payload_len]
    };

    let voxels = decode_payload(path, payload, datatype, &r)?;
    LabelVolume::new(dims, spacing, voxels)
}

fn decode_payload(path: &Path, payload: &[u8], datatype: i16, r: &Reader) -> Result<Vec<u16>> {
    let word = |c: &[u8]| -> [u8; 2] { [c[0], c[1]] };
    match datatype {
        DT_UINT8 => Ok(payload.iter().map(|&b| b as u16).collect()),
        DT_UINT16 => Ok(payload
            .chunks_exact(2)
            .map(|c| {
                if r.little {
                    u16::from_le_bytes(word(c))
                } else {
                    u16::from_be_bytes(word(c))
                }
            })
            .collect()),
        DT_INT16 => payload
            .chunks_exact(2)
            .map(|c| {
                let v = if r.little {
                    i16::from_le_bytes(word(c))
                } else {
                    i16::from_be_bytes(word(c))
                };
                u16::try_from(v).map_err(|_| Error::format(path, format!("negative label {v}")))
            })
            .collect(),
        DT_FLOAT32 => payload
            .chunks_exact(4)
            .map(|c| {
                let b: [u8; 4] = c.try_into().unwrap();
                let v = if r.little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                } as f64;
                let rounded = v.round();
                if v.is_finite()
                    && (v - rounded).abs() <= 1e-6
                    && (0.0..=u16::MAX as f64).contains(&rounded)
                {
                    Ok(rounded as u16)
                } else {
                    Err(Error::format(path, format!("non-integer float label {v}")))
                }
            })
            .collect(),
        _ => unreachable!("datatype validated by caller"),
    }
}

/// Writes a single-file, little-endian NIfTI-1 volume with uint8 or uint16 voxels.
///
/// A `.gz` extension produces a gzip-compressed file.
pub fn write_nifti_labels(path: &Path, volume: &LabelVolume) -> Result<()> {
    use std::io::Write;

    let wide = volume.max_label() > u8::MAX as u16;
    let mut h = vec![0u8; HEADER_SIZE];
    h[0..4].copy_from_slice(&348i32.to_le_bytes());
    let dims = volume.dims().0;
    let dim: [i16; 8] = [3, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        h[40 + 2 * i..42 + 2 * i].copy_from_slice(&d.to_le_bytes());
    }
    let (code, bitpix): (i16, i16) = if wide { (DT_UINT16, 16) } else { (DT_UINT8, 8) };
    h[70..72].copy_from_slice(&code.to_le_bytes());
    h[72..74].copy_from_slice(&bitpix.to_le_bytes());
    let s = volume.spacing().as_array();
    let pixdim: [f32; 4] = [1.0, s[0] as f32, s[1] as f32, s[2] as f32];
    for (i, p) in pixdim.iter().enumerate() {
        h[76 + 4 * i..80 + 4 * i].copy_from_slice(&p.to_le_bytes());
    }
    h[108..112].copy_from_slice(&352f32.to_le_bytes());
    h[112..116].copy_from_slice(&1f32.to_le_bytes());
    h[344..348].copy_from_slice(b"n+1\0");

    let mut data = h;
    data.extend_from_slice(&[0u8; 4]);
    if wide {
        for v in volume.voxels() {
            data.extend_from_slice(&v.to_le_bytes());
        }
    } else {
        data.extend(volume.voxels().iter().map(|&v| v as u8));
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    if is_gz(path) {
        let mut enc = flate2::write::GzEncoder::new(file, flate2::Compression::default());
        enc.write_all(&data).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?;
    } else {
        let mut file = file;
        file.write_all(&data).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
