//! File formats: point-cloud dumps, tiling dumps and isometry encoding.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::attractor::AttractorCloud;
use crate::geometry::{Region, Similitude};
use crate::system::GraphIfs;
use crate::tiling::{Tile, Tiling};

const CLOUD_MAGIC: &[u8; 8] = b"TFCLOUD1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad cloud header")]
    BadMagic,
    #[error("truncated cloud: expected {expected} values, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("dump was produced from system {found}, not {expected}")]
    SystemMismatch { expected: String, found: String },
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("invalid frame: {0}")]
    Frame(String),
}

/// JSON encoding of an isometry.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FrameJson {
    pub ortho: Vec<Vec<f64>>,
    pub translate: Vec<f64>,
}

impl FrameJson {
    pub fn from_map(e: &Similitude) -> Self {
        FrameJson { ortho: e.orthogonal_rows(), translate: e.translate().to_vec() }
    }

    pub fn to_map(&self) -> Result<Similitude, IoError> {
        let flat: Vec<f64> = self.ortho.iter().flatten().copied().collect();
        Similitude::from_parts(&flat, 1.0, &self.translate, Some(0)).map_err(|e| IoError::Frame(e.to_string()))
    }
}

pub fn serialize_frame<S: Serializer>(e: &Similitude, s: S) -> Result<S::Ok, S::Error> {
    FrameJson::from_map(e).serialize(s)
}

/// Human-readable form; in one dimension `y+0.5`, `−y+1`, otherwise the raw parts.
pub fn format_map(e: &Similitude) -> String {
    if e.dim() == 1 {
        let a = e.matrix()[0];
        let t = e.translate()[0];
        let lin = if (a - 1.0).abs() < 1e-12 {
            "y".to_string()
        } else if (a + 1.0).abs() < 1e-12 {
            "−y".to_string()
        } else {
            format!("{a}y")
        };
        if t.abs() < 1e-12 {
            lin
        } else if t < 0.0 {
            format!("{lin}−{}", trim(-t))
        } else {
            format!("{lin}+{}", trim(t))
        }
    } else {
        let f = FrameJson::from_map(e);
        format!("ortho={:?} translate={:?}", f.ortho, f.translate)
    }
}

fn trim(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    format!("{r}")
}

#[derive(Serialize, Deserialize)]
struct TileJson {
    v: String,
    m: i32,
    #[serde(rename = "E")]
    e: FrameJson,
    address: String,
}

#[derive(Serialize, Deserialize)]
struct TilingJson {
    system: String,
    theta: String,
    k: i64,
    tiles: Vec<TileJson>,
}

pub fn tiling_to_json(sys: &GraphIfs, t: &Tiling) -> String {
    let doc = TilingJson {
        system: sys.hash().to_string(),
        theta: t.theta.clone().unwrap_or_default(),
        k: t.k.unwrap_or(0),
        tiles: t
            .iter()
            .map(|tile| TileJson {
                v: sys.vertex_name(tile.vertex).to_string(),
                m: tile.class,
                e: FrameJson::from_map(&tile.frame),
                address: tile.address.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("tiling serializes")
}

/// Parse a dump; the recorded system hash must match `sys`.
pub fn tiling_from_json(sys: &GraphIfs, text: &str) -> Result<Tiling, IoError> {
    let doc: TilingJson = serde_json::from_str(text)?;
    if doc.system != sys.hash() {
        return Err(IoError::SystemMismatch { expected: sys.hash().to_string(), found: doc.system });
    }
    let mut out = Tiling::new();
    for t in doc.tiles {
        let vertex = sys.vertex_index(&t.v).ok_or_else(|| IoError::UnknownVertex(t.v.clone()))?;
        out.insert(Tile { class: t.m, frame: t.e.to_map()?, vertex, address: t.address });
    }
    out.theta = (!doc.theta.is_empty()).then_some(doc.theta);
    out.k = Some(doc.k);
    Ok(out)
}

/// Binary dump of all vertices' samples, vertex by vertex.
pub fn write_cloud_binary<W: Write>(cloud: &AttractorCloud, mut w: W) -> Result<(), IoError> {
    let count: usize = cloud.regions().iter().map(|r| r.len()).sum();
    w.write_all(CLOUD_MAGIC)?;
    w.write_all(&(cloud.dim() as u32).to_le_bytes())?;
    w.write_all(&(count as u32).to_le_bytes())?;
    for r in cloud.regions() {
        for x in r.coords() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_cloud_binary<R: Read>(mut r: R) -> Result<Region, IoError> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..8] != CLOUD_MAGIC {
        return Err(IoError::BadMagic);
    }
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = dim * count;
    if bytes.len() < expected * 8 {
        return Err(IoError::Truncated { expected, found: bytes.len() / 8 });
    }
    let coords = bytes.chunks_exact(8).take(expected).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Region::new(dim, coords))
}

pub fn write_cloud_csv<W: Write>(sys: &GraphIfs, cloud: &AttractorCloud, mut w: W) -> Result<(), IoError> {
    let header: Vec<String> = (1..=cloud.dim()).map(|i| format!("x{i}")).collect();
    writeln!(w, "vertex,{}", header.join(","))?;
    for (v, r) in cloud.regions().iter().enumerate() {
        for p in r.points() {
            let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{},{}", sys.vertex_name(v), row.join(","))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_format() {
        assert_eq!(format_map(&Similitude::translation(&[-1.0])), "y−1");
        assert_eq!(format_map(&Similitude::translation(&[0.5])), "y+0.5");
        assert_eq!(format_map(&Similitude::identity(1)), "y");
    }

    #[test]
    fn cloud_binary_round_trip() {
        let cloud = AttractorCloud::from_regions(vec![Region::new(2, vec![0.1, 0.2, 1.0 / 3.0, -4.0])], "test");
        let mut buf = Vec::new();
        write_cloud_binary(&cloud, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 32);
        let back = read_cloud_binary(&buf[..]).unwrap();
        assert_eq!(back.coords(), cloud.vertex(0).coords());
    }
}
