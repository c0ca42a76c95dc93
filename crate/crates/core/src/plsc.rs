//! PLSC binary container: a 4-byte magic, a version byte, a little-endian
//! u32 header length, a UTF-8 JSON header, and a raw little-endian payload
//! in row-major order of the declared axes.
//!
//! Complex payloads are stored as interleaved re/im 32-bit floats
//! (`c32x2`). In-memory processing is 64-bit; the down-conversion happens
//! here and only here, so an encode/decode round trip of already-quantized
//! data is bit-exact. File writes go through a temp file plus rename.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::Array3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forward::DataCube;
use crate::geometry::Modality;
use crate::recon::{AxisSpec, ImageGrid, ImageVolume};
use crate::spectral::SpectralCube;
use crate::C64;

pub const MAGIC: &[u8; 4] = b"PLSC";
pub const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum PlscError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a PLSC container (bad magic)")]
    BadMagic,
    #[error("unsupported PLSC version {0}")]
    BadVersion(u8),
    #[error("container is truncated")]
    Truncated,
    #[error("header does not parse: {0}")]
    Header(#[from] serde_json::Error),
    #[error("payload holds {got} bytes but the axes declare {expected}")]
    PayloadSize { expected: usize, got: usize },
    #[error("container mismatch: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Datacube,
    Spectral,
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "c32x2")]
    C32x2,
    #[serde(rename = "f32")]
    F32,
}

impl Dtype {
    pub fn sample_bytes(self) -> usize {
        match self {
            Dtype::C32x2 => 8,
            Dtype::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisDesc {
    pub name: String,
    pub count: usize,
    pub start: f64,
    pub step: f64,
    pub unit: String,
}

impl AxisDesc {
    fn new(name: &str, count: usize, start: f64, step: f64, unit: &str) -> Self {
        AxisDesc {
            name: name.into(),
            count,
            start,
            step,
            unit: unit.into(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlscHeader {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modality: Option<Modality>,
    pub axes: Vec<AxisDesc>,
    pub dtype: Dtype,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl PlscHeader {
    pub fn payload_len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product::<usize>() * self.dtype.sample_bytes()
    }

    pub fn axis(&self, name: &str) -> Result<&AxisDesc, PlscError> {
        self.axes
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| PlscError::Mismatch(format!("missing axis '{name}'")))
    }
}

/// A parsed container: header plus raw payload bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub header: PlscHeader,
    pub payload: Vec<u8>,
}

impl Container {
    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let mut out = Vec::with_capacity(9 + header.len() + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Container, PlscError> {
        if bytes.len() < 9 {
            return Err(PlscError::Truncated);
        }
        if &bytes[0..4] != MAGIC {
            return Err(PlscError::BadMagic);
        }
        if bytes[4] != VERSION {
            return Err(PlscError::BadVersion(bytes[4]));
        }
        let hlen = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        if bytes.len() < 9 + hlen {
            return Err(PlscError::Truncated);
        }
        let header: PlscHeader = serde_json::from_slice(&bytes[9..9 + hlen])?;
        let payload = bytes[9 + hlen..].to_vec();
        let expected = header.payload_len();
        if payload.len() != expected {
            return Err(PlscError::PayloadSize {
                expected,
                got: payload.len(),
            });
        }
        Ok(Container { header, payload })
    }
}

fn complex_to_payload(data: &Array3<C64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() * 8);
    for v in data.iter() {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out
}

fn payload_to_complex(
    payload: &[u8],
    shape: (usize, usize, usize),
) -> Result<Array3<C64>, PlscError> {
    let n = shape.0 * shape.1 * shape.2;
    if payload.len() != n * 8 {
        return Err(PlscError::PayloadSize {
            expected: n * 8,
            got: payload.len(),
        });
    }
    let mut flat = Vec::with_capacity(n);
    for c in payload.chunks_exact(8) {
        let re = f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64;
        let im = f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64;
        flat.push(C64::new(re, im));
    }
    Array3::from_shape_vec(shape, flat)
        .map_err(|e| PlscError::Mismatch(format!("shape error: {e}")))
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), PlscError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| PlscError::Io(e.error))?;
    Ok(())
}

pub fn read_container(path: &Path) -> Result<Container, PlscError> {
    Container::decode(&std::fs::read(path)?)
}

// ---- datacube ----

pub fn datacube_to_container(cube: &DataCube, provenance: BTreeMap<String, String>) -> Container {
    let dz = cube.scan_step();
    let df = if cube.freqs.len() > 1 {
        cube.freqs[1] - cube.freqs[0]
    } else {
        0.0
    };
    let header = PlscHeader {
        kind: Kind::Datacube,
        modality: Some(cube.modality),
        axes: vec![
            AxisDesc::new("channel", cube.num_channels(), 0.0, 1.0, "index"),
            AxisDesc::new("z", cube.num_scans(), cube.z_positions[0], dz, "m"),
            AxisDesc::new("freq", cube.num_freqs(), cube.freqs[0], df, "Hz"),
        ],
        dtype: Dtype::C32x2,
        provenance,
    };
    Container {
        header,
        payload: complex_to_payload(&cube.samples),
    }
}

pub fn container_to_datacube(c: &Container) -> Result<DataCube, PlscError> {
    if c.header.kind != Kind::Datacube {
        return Err(PlscError::Mismatch(format!(
            "expected a datacube container, found {:?}",
            c.header.kind
        )));
    }
    if c.header.dtype != Dtype::C32x2 {
        return Err(PlscError::Mismatch("datacube payload must be c32x2".into()));
    }
    let ch = c.header.axis("channel")?.clone();
    let z = c.header.axis("z")?.clone();
    let f = c.header.axis("freq")?.clone();
    let samples = payload_to_complex(&c.payload, (ch.count, z.count, f.count))?;
    Ok(DataCube {
        samples,
        z_positions: z.values(),
        freqs: f.values(),
        modality: c
            .header
            .modality
            .ok_or_else(|| PlscError::Mismatch("datacube lacks a modality".into()))?,
    })
}

pub fn write_datacube(
    path: &Path,
    cube: &DataCube,
    provenance: BTreeMap<String, String>,
) -> Result<(), PlscError> {
    atomic_write(path, &datacube_to_container(cube, provenance).encode())
}

pub fn read_datacube(path: &Path) -> Result<(DataCube, PlscHeader), PlscError> {
    let c = read_container(path)?;
    let cube = container_to_datacube(&c)?;
    Ok((cube, c.header))
}

// ---- spectral ----

pub fn spectral_to_container(
    spec: &SpectralCube,
    mut provenance: BTreeMap<String, String>,
) -> Container {
    // The inverse transform needs the original scan geometry; the
    // normalization convention is recorded for cross-tool comparisons.
    provenance.insert("scan_start".into(), format!("{:?}", spec.scan_start));
    provenance.insert("scan_step".into(), format!("{:?}", spec.scan_step));
    provenance.insert("num_scans".into(), spec.num_scans.to_string());
    provenance.insert("pad_factor".into(), spec.pad_factor.to_string());
    provenance.insert(
        "fft_norm".into(),
        "forward: dz * sum exp(-j kz z); inverse: dkz/(2 pi) * sum exp(+j kz z)".into(),
    );
    let dkz = spec.kz_step();
    let df = spec.freqs[1] - spec.freqs[0];
    let header = PlscHeader {
        kind: Kind::Spectral,
        modality: Some(spec.modality),
        axes: vec![
            AxisDesc::new("channel", spec.num_channels(), 0.0, 1.0, "index"),
            AxisDesc::new("kz", spec.num_kz(), spec.kz[0], dkz, "rad/m"),
            AxisDesc::new("freq", spec.freqs.len(), spec.freqs[0], df, "Hz"),
        ],
        dtype: Dtype::C32x2,
        provenance,
    };
    Container {
        header,
        payload: complex_to_payload(&spec.samples),
    }
}

pub fn container_to_spectral(c: &Container) -> Result<SpectralCube, PlscError> {
    if c.header.kind != Kind::Spectral {
        return Err(PlscError::Mismatch(format!(
            "expected a spectral container, found {:?}",
            c.header.kind
        )));
    }
    let ch = c.header.axis("channel")?.clone();
    let kz = c.header.axis("kz")?.clone();
    let f = c.header.axis("freq")?.clone();
    let samples = payload_to_complex(&c.payload, (ch.count, kz.count, f.count))?;
    let get = |key: &str| -> Result<&String, PlscError> {
        c.header
            .provenance
            .get(key)
            .ok_or_else(|| PlscError::Mismatch(format!("spectral container lacks '{key}'")))
    };
    let parse_f64 = |key: &str| -> Result<f64, PlscError> {
        get(key)?
            .parse::<f64>()
            .map_err(|e| PlscError::Mismatch(format!("bad {key}: {e}")))
    };
    let parse_usize = |key: &str| -> Result<usize, PlscError> {
        get(key)?
            .parse::<usize>()
            .map_err(|e| PlscError::Mismatch(format!("bad {key}: {e}")))
    };
    Ok(SpectralCube {
        samples,
        kz: kz.values(),
        freqs: f.values(),
        modality: c
            .header
            .modality
            .ok_or_else(|| PlscError::Mismatch("spectral container lacks a modality".into()))?,
        pad_factor: parse_usize("pad_factor")?,
        scan_start: parse_f64("scan_start")?,
        scan_step: parse_f64("scan_step")?,
        num_scans: parse_usize("num_scans")?,
    })
}

// ---- image ----

pub fn image_to_container(img: &ImageVolume) -> Container {
    let provenance: BTreeMap<String, String> = img.provenance.clone();
    let axes = [
        ("x", &img.grid.x),
        ("y", &img.grid.y),
        ("z", &img.grid.z),
    ]
    .into_iter()
    .map(|(name, a)| {
        let vals = a.values();
        AxisDesc::new(name, a.count, vals[0], a.step(), "m")
    })
    .collect();
    let header = PlscHeader {
        kind: Kind::Image,
        modality: None,
        axes,
        dtype: Dtype::C32x2,
        provenance,
    };
    Container {
        header,
        payload: complex_to_payload(&img.data),
    }
}

pub fn container_to_image(c: &Container) -> Result<ImageVolume, PlscError> {
    if c.header.kind != Kind::Image {
        return Err(PlscError::Mismatch(format!(
            "expected an image container, found {:?}",
            c.header.kind
        )));
    }
    let x = c.header.axis("x")?.clone();
    let y = c.header.axis("y")?.clone();
    let z = c.header.axis("z")?.clone();
    let data = payload_to_complex(&c.payload, (x.count, y.count, z.count))?;
    let to_axis = |a: &AxisDesc| AxisSpec {
        min: a.start,
        max: a.start + (a.count.saturating_sub(1)) as f64 * a.step,
        count: a.count,
    };
    Ok(ImageVolume {
        data,
        grid: ImageGrid {
            x: to_axis(&x),
            y: to_axis(&y),
            z: to_axis(&z),
        },
        provenance: c.header.provenance.clone(),
    })
}

pub fn write_image(path: &Path, img: &ImageVolume) -> Result<(), PlscError> {
    atomic_write(path, &image_to_container(img).encode())
}

pub fn read_image(path: &Path) -> Result<ImageVolume, PlscError> {
    container_to_image(&read_container(path)?)
}

/// Apply the container's f32 quantization in memory: encode then decode
/// without touching the filesystem. Lets in-memory pipelines be compared
/// bit-for-bit against file-based ones.
pub fn quantize_image(img: &ImageVolume) -> ImageVolume {
    container_to_image(&Container::decode(&image_to_container(img).encode()).expect("self round trip"))
        .expect("self round trip")
}

/// Same quantization pass for data cubes.
pub fn quantize_datacube(cube: &DataCube) -> DataCube {
    container_to_datacube(
        &Container::decode(&datacube_to_container(cube, BTreeMap::new()).encode())
            .expect("self round trip"),
    )
    .expect("self round trip")
}
