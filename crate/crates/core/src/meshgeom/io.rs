//! Plain-text serialization of meshes and attached scalar fields.
//!
//! The format is line oriented and uses the shortest round-trip decimal
//! representation of f64, so a write/read cycle reproduces the mesh and
//! field values bit for bit.

use crate::error::{Error, Result};
use crate::meshgeom::mesh::{Point, VolumeMesh};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldLocation {
    Vertex,
    Cell,
}

/// A named scalar field attached to mesh vertices or cells.
#[derive(Clone, Debug)]
pub struct MeshField {
    pub name: String,
    pub location: FieldLocation,
    pub values: Vec<f64>,
}

pub fn write_mesh(path: &Path, mesh: &VolumeMesh, fields: &[MeshField]) -> Result<()> {
    for f in fields {
        let expected = match f.location {
            FieldLocation::Vertex => mesh.num_vertices(),
            FieldLocation::Cell => mesh.num_cells(),
        };
        if f.values.len() != expected {
            return Err(Error::InvalidMesh(format!(
                "field '{}' has {} values, expected {expected}",
                f.name,
                f.values.len()
            )));
        }
        if f.name.contains(char::is_whitespace) || f.name.is_empty() {
            return Err(Error::InvalidMesh(format!(
                "field name '{}' must be nonempty without whitespace",
                f.name
            )));
        }
    }
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "meshfield 1")?;
    writeln!(w, "dim {}", mesh.dim())?;
    writeln!(w, "vertices {}", mesh.num_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    writeln!(w, "cells {}", mesh.num_cells())?;
    for c in 0..mesh.num_cells() {
        let ids: Vec<String> = mesh.cell(c).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", ids.join(" "))?;
    }
    writeln!(w, "fields {}", fields.len())?;
    for f in fields {
        let loc = match f.location {
            FieldLocation::Vertex => "vertex",
            FieldLocation::Cell => "cell",
        };
        writeln!(w, "{} {} {}", f.name, loc, f.values.len())?;
        for v in &f.values {
            writeln!(w, "{v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<(VolumeMesh, Vec<MeshField>)> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::InvalidMesh("unexpected end of mesh file".into()))?
            .map_err(Error::from)
    };

    let header = next_line()?;
    if header.trim() != "meshfield 1" {
        return Err(Error::InvalidMesh(format!(
            "unsupported mesh file header '{header}'"
        )));
    }
    let dim = parse_tagged(&next_line()?, "dim")? as usize;
    let n_vertices = parse_tagged(&next_line()?, "vertices")? as usize;
    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let line = next_line()?;
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        let mut coord = [0.0f64; 3];
        for c in coord.iter_mut() {
            *c = it
                .next()
                .ok_or_else(|| Error::InvalidMesh("short vertex line".into()))?
                .map_err(|e| Error::InvalidMesh(format!("bad vertex coordinate: {e}")))?;
        }
        vertices.push(Point::new(coord[0], coord[1], coord[2]));
    }
    let n_cells = parse_tagged(&next_line()?, "cells")? as usize;
    let mut cells = Vec::with_capacity(n_cells * (dim + 1));
    for _ in 0..n_cells {
        let line = next_line()?;
        let ids: std::result::Result<Vec<usize>, _> =
            line.split_whitespace().map(str::parse::<usize>).collect();
        let ids = ids.map_err(|e| Error::InvalidMesh(format!("bad cell line: {e}")))?;
        if ids.len() != dim + 1 {
            return Err(Error::InvalidMesh(format!(
                "cell with {} vertices in dimension {dim}",
                ids.len()
            )));
        }
        cells.extend(ids);
    }
    let n_fields = parse_tagged(&next_line()?, "fields")? as usize;
    let mut fields = Vec::with_capacity(n_fields);
    for _ in 0..n_fields {
        let line = next_line()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::InvalidMesh(format!("bad field header '{line}'")));
        }
        let location = match parts[1] {
            "vertex" => FieldLocation::Vertex,
            "cell" => FieldLocation::Cell,
            other => {
                return Err(Error::InvalidMesh(format!(
                    "unknown field location '{other}'"
                )))
            }
        };
        let count: usize = parts[2]
            .parse()
            .map_err(|e| Error::InvalidMesh(format!("bad field count: {e}")))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let v: f64 = next_line()?
                .trim()
                .parse()
                .map_err(|e| Error::InvalidMesh(format!("bad field value: {e}")))?;
            values.push(v);
        }
        fields.push(MeshField {
            name: parts[0].to_string(),
            location,
            values,
        });
    }
    let mesh = VolumeMesh::new(dim, vertices, cells)?;
    for f in &fields {
        let expected = match f.location {
            FieldLocation::Vertex => mesh.num_vertices(),
            FieldLocation::Cell => mesh.num_cells(),
        };
        if f.values.len() != expected {
            return Err(Error::InvalidMesh(format!(
                "field '{}' has {} values, expected {expected}",
                f.name,
                f.values.len()
            )));
        }
    }
    Ok((mesh, fields))
}

fn parse_tagged(line: &str, tag: &str) -> Result<u64> {
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some(t), Some(v)) if t == tag => v
            .parse()
            .map_err(|e| Error::InvalidMesh(format!("bad '{tag}' value: {e}"))),
        _ => Err(Error::InvalidMesh(format!(
            "expected '{tag} <n>', got '{line}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgeom::generate::unit_disk_mesh;

    #[test]
    fn roundtrip_preserves_mesh_and_fields() {
        let mesh = unit_disk_mesh(4).unwrap();
        let vertex_field = MeshField {
            name: "u".into(),
            location: FieldLocation::Vertex,
            values: (0..mesh.num_vertices())
                .map(|k| (k as f64 * 0.37).sin() / 3.0)
                .collect(),
        };
        let cell_field = MeshField {
            name: "d1".into(),
            location: FieldLocation::Cell,
            values: (0..mesh.num_cells()).map(|k| k as f64 * 1e-17 + 0.1).collect(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.txt");
        write_mesh(&path, &mesh, &[vertex_field.clone(), cell_field.clone()]).unwrap();
        let (back, fields) = read_mesh(&path).unwrap();
        assert_eq!(back.hash(), mesh.hash());
        assert_eq!(fields.len(), 2);
        assert_eq!(fields[0].values, vertex_field.values);
        assert_eq!(fields[1].values, cell_field.values);
        assert_eq!(fields[1].location, FieldLocation::Cell);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "meshfield 1\ndim 2\nvertices 1\n0 0 0\n").unwrap();
        assert!(read_mesh(&path).is_err());
        std::fs::write(&path, "other format\n").unwrap();
        assert!(read_mesh(&path).is_err());
    }

    #[test]
    fn field_length_mismatch_is_rejected() {
        let mesh = unit_disk_mesh(2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.txt");
        let bad = MeshField {
            name: "u".into(),
            location: FieldLocation::Vertex,
            values: vec![1.0, 2.0],
        };
        assert!(write_mesh(&path, &mesh, &[bad]).is_err());
    }
}
