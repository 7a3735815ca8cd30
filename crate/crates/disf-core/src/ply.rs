//! ASCII PLY ingestion and export for oriented point clouds.
//!
//! Only the ASCII 1.0 flavour is supported, and vertices must carry
//! `x y z nx ny nz` scalar properties (extra scalar properties are ignored,
//! as are non-vertex elements such as faces). Normals are renormalized on
//! load so downstream code can rely on unit length; a zero-length normal is
//! a parse error, not a silent fixup. All errors carry 1-based line numbers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{UnitVec3, Vec3};
use crate::surface::{OrientedSurface, PointNormal};

#[derive(Debug)]
struct ElementDecl {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::PlyParse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Loads an oriented point cloud from an ASCII PLY file.
pub fn load_cloud(path: &Path) -> Result<OrientedSurface> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse {
        path: path.to_path_buf(),
        message: format!("cannot read file: {e}"),
    })?;
    parse_cloud(&text, path)
}

/// Parses PLY text; `path` is used only for error reporting.
pub fn parse_cloud(text: &str, path: &Path) -> Result<OrientedSurface> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (line_no, magic) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "empty file"))?;
    if magic != "ply" {
        return Err(parse_error(path, line_no, "expected 'ply' magic line"));
    }

    let mut elements: Vec<ElementDecl> = Vec::new();
    let mut format_seen = false;
    let mut header_end = 0usize;
    for (line_no, line) in lines.by_ref() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("comment") | Some("obj_info") | None => {}
            Some("format") => {
                let rest: Vec<&str> = tokens.collect();
                if rest != ["ascii", "1.0"] {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("unsupported format '{}'; only ascii 1.0", rest.join(" ")),
                    ));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = tokens
                    .next()
                    .ok_or_else(|| parse_error(path, line_no, "element without a name"))?;
                let count: usize = tokens
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_error(path, line_no, "element without a valid count"))?;
                elements.push(ElementDecl {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_error(path, line_no, "property before any element"))?;
                let kind = tokens
                    .next()
                    .ok_or_else(|| parse_error(path, line_no, "property without a type"))?;
                if kind == "list" {
                    if element.name == "vertex" {
                        return Err(parse_error(
                            path,
                            line_no,
                            "list properties are not supported on vertices",
                        ));
                    }
                    // List properties on other elements (face indices) are
                    // fine: those data lines are skipped wholesale.
                    continue;
                }
                let name = tokens
                    .next()
                    .ok_or_else(|| parse_error(path, line_no, "property without a name"))?;
                element.properties.push(name.to_string());
            }
            Some("end_header") => {
                header_end = line_no;
                break;
            }
            Some(other) => {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("unrecognized header keyword '{other}'"),
                ));
            }
        }
    }
    if header_end == 0 {
        return Err(parse_error(path, text.lines().count(), "missing end_header"));
    }
    if !format_seen {
        return Err(parse_error(path, header_end, "missing format declaration"));
    }

    let vertex = elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| parse_error(path, header_end, "no vertex element declared"))?;
    let column = |name: &str| vertex.properties.iter().position(|p| p == name);
    let coords = match (column("x"), column("y"), column("z")) {
        (Some(x), Some(y), Some(z)) => [x, y, z],
        _ => {
            return Err(parse_error(
                path,
                header_end,
                "vertex element must declare x, y, z properties",
            ))
        }
    };
    let normals = match (column("nx"), column("ny"), column("nz")) {
        (Some(x), Some(y), Some(z)) => [x, y, z],
        _ => {
            return Err(Error::MissingNormals {
                path: path.to_path_buf(),
            })
        }
    };

    let mut points = Vec::new();
    for element in &elements {
        for row in 0..element.count {
            let (line_no, line) = loop {
                match lines.next() {
                    Some((_, l)) if l.is_empty() => continue,
                    Some(pair) => break pair,
                    None => {
                        return Err(parse_error(
                            path,
                            text.lines().count(),
                            format!(
                                "unexpected end of file: element '{}' promises {} rows, found {row}",
                                element.name, element.count
                            ),
                        ))
                    }
                }
            };
            if element.name != "vertex" {
                continue;
            }
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| parse_error(path, line_no, format!("invalid number '{tok}'")))
                })
                .collect::<Result<_>>()?;
            if values.len() != vertex.properties.len() {
                return Err(parse_error(
                    path,
                    line_no,
                    format!(
                        "expected {} values, found {}",
                        vertex.properties.len(),
                        values.len()
                    ),
                ));
            }
            let position = Vec3::new(values[coords[0]], values[coords[1]], values[coords[2]]);
            let normal = Vec3::new(values[normals[0]], values[normals[1]], values[normals[2]]);
            if !position.iter().all(|c| c.is_finite()) {
                return Err(parse_error(path, line_no, "non-finite coordinate"));
            }
            let normal = UnitVec3::new(normal)
                .map_err(|_| parse_error(path, line_no, "normal has (near-)zero length"))?;
            points.push(PointNormal::new(position, normal));
        }
    }

    Ok(OrientedSurface::new(points))
}

/// Writes an oriented point cloud as ASCII PLY with `x y z nx ny nz`
/// properties. Numbers use Rust's shortest round-trip formatting, so a
/// save/load cycle reproduces the cloud exactly.
pub fn save_cloud(path: &Path, surface: &OrientedSurface) -> Result<()> {
    std::fs::write(path, cloud_to_string(surface))?;
    Ok(())
}

/// Renders the PLY text for a cloud.
pub fn cloud_to_string(surface: &OrientedSurface) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", surface.len());
    for name in ["x", "y", "z", "nx", "ny", "nz"] {
        let _ = writeln!(out, "property float {name}");
    }
    out.push_str("end_header\n");
    for pn in surface.iter() {
        let p = pn.position;
        let n = pn.normal.as_vec();
        let _ = writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z);
    }
    out
}
