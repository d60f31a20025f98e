//! Point cloud and mesh files, reports and histograms.
//!
//! Every writer goes through a temporary file in the destination directory
//! that is renamed into place on success, so a failed run never leaves a
//! partial file behind.

mod obj;
mod ply;
mod report;
mod xyz;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};
use crate::halfedge::{HalfEdgeMesh, VertexClass};

pub use obj::{read_obj, write_obj};
pub use ply::{read_ply, write_ply, PlyData, PlyEncoding, PlyExtras};
pub use report::{histogram_csv, HistogramDoc, MeshSummary, ReportDocument, RunMetadata};
pub use xyz::{read_xyz, write_xyz};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ply,
    Obj,
    Xyz,
}

impl Format {
    /// Format named by the file extension.
    pub fn from_path(path: &Path) -> Result<Format> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("ply") => Ok(Format::Ply),
            Some("obj") => Ok(Format::Obj),
            Some("xyz") | Some("txt") | Some("pts") => Ok(Format::Xyz),
            _ => Err(Error::InvalidParam(format!(
                "cannot tell the format of '{}' (expected .ply, .obj or .xyz)",
                path.display()
            ))),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

/// Load a point cloud; a PLY `class` vertex property becomes the labels.
/// Mesh faces, if any, are ignored.
pub fn load_point_cloud(path: &Path, format: Option<Format>) -> Result<PointCloud> {
    let format = match format {
        Some(f) => f,
        None => Format::from_path(path)?,
    };
    let (points, labels) = match format {
        Format::Ply => {
            let d = read_ply(open(path)?)?;
            (d.positions, d.labels)
        }
        Format::Obj => (read_obj(open(path)?)?.0, None),
        Format::Xyz => (read_xyz(open(path)?)?, None),
    };
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cloud = PointCloud::new(points)?;
    cloud.set_labels(labels)?;
    Ok(cloud)
}

/// A mesh as loaded from disk, before connectivity validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMesh {
    pub positions: Vec<Point>,
    pub faces: Vec<[usize; 3]>,
    pub labels: Option<Vec<u32>>,
}

impl RawMesh {
    /// Build validated connectivity; nonzero labels mark external-edge
    /// vertices.
    pub fn into_halfedge(self) -> Result<HalfEdgeMesh> {
        let classes = self.labels.as_ref().map(|l| {
            l.iter()
                .map(|&c| {
                    if c == 0 {
                        VertexClass::Ordinary
                    } else {
                        VertexClass::ExternalEdge
                    }
                })
                .collect()
        });
        let mesh = HalfEdgeMesh::new(self.positions, self.faces)?;
        Ok(match classes {
            Some(c) => mesh.with_classes(c),
            None => mesh,
        })
    }
}

pub fn load_mesh(path: &Path) -> Result<RawMesh> {
    match Format::from_path(path)? {
        Format::Ply => {
            let d = read_ply(open(path)?)?;
            Ok(RawMesh {
                positions: d.positions,
                faces: d.faces,
                labels: d.labels,
            })
        }
        Format::Obj => {
            let (positions, faces) = read_obj(open(path)?)?;
            Ok(RawMesh {
                positions,
                faces,
                labels: None,
            })
        }
        Format::Xyz => Err(Error::InvalidParam(format!(
            "'{}' holds points only, not a mesh",
            path.display()
        ))),
    }
}

/// Write through a temporary sibling file renamed over `path` on success.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MeshWriteOptions<'a> {
    /// Per-vertex colors (PLY only).
    pub colors: Option<&'a [[u8; 3]]>,
    /// Write vertex classes as a `class` property (PLY only).
    pub classes: bool,
    pub encoding: Option<PlyEncoding>,
}

/// Save a mesh as PLY or OBJ by extension. PLY defaults to binary.
pub fn save_mesh(mesh: &HalfEdgeMesh, path: &Path, opts: MeshWriteOptions<'_>) -> Result<()> {
    let format = Format::from_path(path)?;
    let labels: Option<Vec<u32>> = opts
        .classes
        .then(|| mesh.classes().iter().map(|&c| u32::from(c == VertexClass::ExternalEdge)).collect());
    match format {
        Format::Ply => write_atomic(path, |w| {
            let extras = PlyExtras {
                labels: labels.as_deref(),
                colors: opts.colors,
                faces: Some(mesh.faces()),
            };
            write_ply(w, mesh.positions(), extras, opts.encoding.unwrap_or(PlyEncoding::BinaryLittleEndian))
        }),
        Format::Obj => write_atomic(path, |w| write_obj(w, mesh.positions(), mesh.faces())),
        Format::Xyz => Err(Error::InvalidParam("meshes are written as .ply or .obj".into())),
    }
}

/// Save a point cloud as PLY (with labels when present) or XYZ.
pub fn save_point_cloud(cloud: &PointCloud, path: &Path, encoding: Option<PlyEncoding>) -> Result<()> {
    match Format::from_path(path)? {
        Format::Ply => write_atomic(path, |w| {
            let extras = PlyExtras {
                labels: cloud.labels(),
                ..Default::default()
            };
            write_ply(w, cloud.points(), extras, encoding.unwrap_or(PlyEncoding::BinaryLittleEndian))
        }),
        Format::Xyz => write_atomic(path, |w| write_xyz(w, cloud.points())),
        Format::Obj => write_atomic(path, |w| write_obj(w, cloud.points(), &[])),
    }
}

pub fn save_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

pub fn save_report(doc: &ReportDocument, path: &Path) -> Result<()> {
    save_text(path, &doc.to_json())
}

pub fn save_histogram_csv(h: &crate::metrics::Histogram, path: &Path) -> Result<()> {
    save_text(path, &histogram_csv(h))
}
