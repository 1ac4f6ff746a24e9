//! PLY reader/writer for the vertex layouts produced by SfM exports.
//!
//! ASCII and binary-little-endian files are accepted; binary-little-endian
//! is the canonical output format. Recognized vertex properties are
//! x/y/z (float), red/green/blue (uchar), nx/ny/nz (float) and label
//! (int32). Unknown properties and non-vertex elements are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

use super::{Point, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(word: &str) -> Option<ScalarType> {
        Some(match word {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLittleEndian,
}

/// One parsed vertex property column.
#[derive(Debug, Clone)]
pub struct PlyColumn {
    pub name: String,
    /// Values widened to f64; integer properties round-trip exactly
    /// up to 2^53.
    pub values: Vec<f64>,
}

/// Raw vertex table of a PLY file: one column per scalar property.
#[derive(Debug, Clone)]
pub struct PlyData {
    pub vertex_count: usize,
    pub columns: Vec<PlyColumn>,
}

impl PlyData {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset: offset as u64,
        message: message.into(),
    }
}

struct HeaderInfo {
    format: Format,
    elements: Vec<Element>,
    body_start: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<HeaderInfo> {
    let mut offset = 0usize;
    let next_line = |offset: &mut usize| -> Result<(usize, String)> {
        let start = *offset;
        if start >= bytes.len() {
            return Err(parse_err(start, "unexpected end of file in header"));
        }
        let rel = bytes[start..].iter().position(|&b| b == b'\n');
        let end = rel.map(|r| start + r).unwrap_or(bytes.len());
        let line = std::str::from_utf8(&bytes[start..end])
            .map_err(|_| parse_err(start, "header is not valid UTF-8"))?
            .trim_end_matches('\r')
            .to_string();
        *offset = end.saturating_add(1).min(bytes.len() + 1);
        Ok((start, line))
    };

    let (magic_at, magic) = next_line(&mut offset)?;
    if magic.trim() != "ply" {
        return Err(parse_err(magic_at, format!("missing 'ply' magic in {}", path.display())));
    }

    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let (line_at, line) = next_line(&mut offset)?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.first().copied() {
            None | Some("comment") | Some("obj_info") => continue,
            Some("format") => {
                if words.len() < 2 {
                    return Err(parse_err(line_at, "format line needs an encoding"));
                }
                format = Some(match words[1] {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(Error::UnsupportedFormat(
                            "binary_big_endian PLY is not supported".into(),
                        ))
                    }
                    other => return Err(parse_err(line_at, format!("unknown format {other:?}"))),
                });
            }
            Some("element") => {
                if words.len() != 3 {
                    return Err(parse_err(line_at, "element line needs a name and a count"));
                }
                let count: usize = words[2]
                    .parse()
                    .map_err(|_| parse_err(line_at, format!("bad element count {:?}", words[2])))?;
                elements.push(Element {
                    name: words[1].to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line_at, "property before any element"))?;
                if words.len() == 5 && words[1] == "list" {
                    let count = ScalarType::parse(words[2])
                        .ok_or_else(|| parse_err(line_at, format!("bad list count type {:?}", words[2])))?;
                    let item = ScalarType::parse(words[3])
                        .ok_or_else(|| parse_err(line_at, format!("bad list item type {:?}", words[3])))?;
                    element.properties.push(Property {
                        name: words[4].to_string(),
                        kind: PropertyKind::List { count, item },
                    });
                } else if words.len() == 3 {
                    let ty = ScalarType::parse(words[1])
                        .ok_or_else(|| parse_err(line_at, format!("unknown property type {:?}", words[1])))?;
                    element.properties.push(Property {
                        name: words[2].to_string(),
                        kind: PropertyKind::Scalar(ty),
                    });
                } else {
                    return Err(parse_err(line_at, "malformed property line"));
                }
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(parse_err(line_at, format!("unknown header keyword {other:?}")));
            }
        }
    }

    let format = format.ok_or_else(|| parse_err(0, "header has no format line"))?;
    Ok(HeaderInfo {
        format,
        elements,
        body_start: offset.min(bytes.len()),
    })
}

struct BinaryCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BinaryCursor<'a> {
    fn read_scalar(&mut self, ty: ScalarType) -> Result<f64> {
        let n = ty.size();
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(parse_err(self.pos, "unexpected end of binary body"));
        }
        let b = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(match ty {
            ScalarType::I8 => b[0] as i8 as f64,
            ScalarType::U8 => b[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            ScalarType::F64 => f64::from_le_bytes([
                b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
            ]),
        })
    }
}

struct AsciiCursor<'a> {
    tokens: std::str::SplitWhitespace<'a>,
    consumed: usize,
    body_start: usize,
}

impl<'a> AsciiCursor<'a> {
    fn read_scalar(&mut self) -> Result<f64> {
        let tok = self
            .tokens
            .next()
            .ok_or_else(|| parse_err(self.body_start + self.consumed, "unexpected end of ASCII body"))?;
        self.consumed += tok.len() + 1;
        tok.parse::<f64>()
            .map_err(|_| parse_err(self.body_start + self.consumed, format!("bad numeric token {tok:?}")))
    }
}

/// Parse the raw vertex table of a PLY file.
pub fn read_ply_data(path: impl AsRef<Path>) -> Result<PlyData> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = parse_header(&bytes, path)?;

    let vertex = header
        .elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| parse_err(0, "no vertex element in header"))?
        .clone();

    let mut columns: Vec<PlyColumn> = vertex
        .properties
        .iter()
        .filter_map(|p| match p.kind {
            PropertyKind::Scalar(_) => Some(PlyColumn {
                name: p.name.clone(),
                values: Vec::with_capacity(vertex.count),
            }),
            PropertyKind::List { .. } => None,
        })
        .collect();

    match header.format {
        Format::BinaryLittleEndian => {
            let mut cur = BinaryCursor {
                bytes: &bytes,
                pos: header.body_start,
            };
            for element in &header.elements {
                let is_vertex = element.name == "vertex";
                for _ in 0..element.count {
                    let mut col = 0usize;
                    for prop in &element.properties {
                        match prop.kind {
                            PropertyKind::Scalar(ty) => {
                                let v = cur.read_scalar(ty)?;
                                if is_vertex {
                                    columns[col].values.push(v);
                                    col += 1;
                                }
                            }
                            PropertyKind::List { count, item } => {
                                let n = cur.read_scalar(count)? as usize;
                                for _ in 0..n {
                                    cur.read_scalar(item)?;
                                }
                            }
                        }
                    }
                }
            }
        }
        Format::Ascii => {
            let body = std::str::from_utf8(&bytes[header.body_start..])
                .map_err(|_| parse_err(header.body_start, "ASCII body is not valid UTF-8"))?;
            let mut cur = AsciiCursor {
                tokens: body.split_whitespace(),
                consumed: 0,
                body_start: header.body_start,
            };
            for element in &header.elements {
                let is_vertex = element.name == "vertex";
                for _ in 0..element.count {
                    let mut col = 0usize;
                    for prop in &element.properties {
                        match prop.kind {
                            PropertyKind::Scalar(_) => {
                                let v = cur.read_scalar()?;
                                if is_vertex {
                                    columns[col].values.push(v);
                                    col += 1;
                                }
                            }
                            PropertyKind::List { .. } => {
                                let n = cur.read_scalar()? as usize;
                                for _ in 0..n {
                                    cur.read_scalar()?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(PlyData {
        vertex_count: vertex.count,
        columns,
    })
}

/// Load a point cloud from a PLY file, in file order.
pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let data = read_ply_data(&path)?;
    let n = data.vertex_count;

    let x = data
        .column("x")
        .ok_or_else(|| parse_err(0, "vertex element lacks an x property"))?;
    let y = data
        .column("y")
        .ok_or_else(|| parse_err(0, "vertex element lacks a y property"))?;
    let z = data
        .column("z")
        .ok_or_else(|| parse_err(0, "vertex element lacks a z property"))?;

    let red = data.column("red");
    let green = data.column("green");
    let blue = data.column("blue");
    let has_color = red.is_some() && green.is_some() && blue.is_some();

    let nx = data.column("nx");
    let ny = data.column("ny");
    let nz = data.column("nz");
    let has_normal = nx.is_some() && ny.is_some() && nz.is_some();

    let label = data.column("label");

    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = Point::new(x[i], y[i], z[i]);
        if has_color {
            p.color = Some([
                red.unwrap()[i] as u8,
                green.unwrap()[i] as u8,
                blue.unwrap()[i] as u8,
            ]);
        }
        if has_normal {
            p.normal = Some(Vector3::new(nx.unwrap()[i], ny.unwrap()[i], nz.unwrap()[i]));
        }
        if let Some(label) = label {
            p.label = Some(label[i] as i32);
        }
        points.push(p);
    }

    Ok(PointCloud::new(points))
}

/// Write a cloud to PLY. Color, normal and label properties are emitted
/// when every point carries them.
pub fn write_ply(cloud: &PointCloud, path: impl AsRef<Path>, binary: bool) -> Result<()> {
    write_ply_with_extra(cloud, path, binary, &[])
}

/// Like [`write_ply`] but with extra int32 scalar columns (used for the
/// segmentation export/import round trip).
pub fn write_ply_with_extra(
    cloud: &PointCloud,
    path: impl AsRef<Path>,
    binary: bool,
    extra: &[(&str, &[i32])],
) -> Result<()> {
    let path = path.as_ref();
    for (name, values) in extra {
        assert_eq!(
            values.len(),
            cloud.len(),
            "extra column {name:?} must match the point count"
        );
    }

    let has_color = !cloud.is_empty() && cloud.points().iter().all(|p| p.color.is_some());
    let has_normal = !cloud.is_empty() && cloud.points().iter().all(|p| p.normal.is_some());
    let has_label = !cloud.is_empty() && cloud.points().iter().all(|p| p.label.is_some());

    let mut header = String::new();
    header.push_str("ply\n");
    header.push_str(if binary {
        "format binary_little_endian 1.0\n"
    } else {
        "format ascii 1.0\n"
    });
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    if has_color {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    if has_normal {
        header.push_str("property float nx\nproperty float ny\nproperty float nz\n");
    }
    if has_label {
        header.push_str("property int label\n");
    }
    for (name, _) in extra {
        header.push_str(&format!("property int {name}\n"));
    }
    header.push_str("end_header\n");

    let mut out: Vec<u8> = header.into_bytes();
    for (i, p) in cloud.points().iter().enumerate() {
        if binary {
            for a in 0..3 {
                out.extend_from_slice(&(p.position[a] as f32).to_le_bytes());
            }
            if has_color {
                out.extend_from_slice(&p.color.unwrap());
            }
            if has_normal {
                let n = p.normal.unwrap();
                for a in 0..3 {
                    out.extend_from_slice(&(n[a] as f32).to_le_bytes());
                }
            }
            if has_label {
                out.extend_from_slice(&p.label.unwrap().to_le_bytes());
            }
            for (_, values) in extra {
                out.extend_from_slice(&values[i].to_le_bytes());
            }
        } else {
            let mut fields: Vec<String> = (0..3)
                .map(|a| format!("{}", p.position[a] as f32))
                .collect();
            if has_color {
                let c = p.color.unwrap();
                fields.extend(c.iter().map(|v| v.to_string()));
            }
            if has_normal {
                let n = p.normal.unwrap();
                fields.extend((0..3).map(|a| format!("{}", n[a] as f32)));
            }
            if has_label {
                fields.push(p.label.unwrap().to_string());
            }
            for (_, values) in extra {
                fields.push(values[i].to_string());
            }
            out.extend_from_slice(fields.join(" ").as_bytes());
            out.push(b'\n');
        }
    }

    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}
