//! PLY point clouds: `ascii 1.0` and `binary_little_endian 1.0`.
//!
//! The reader takes x, y, z (float or double), optional red, green, blue
//! (uchar) and nx, ny, nz (float or double) from the `vertex` element. Other
//! properties and elements, list properties included, are skipped.

use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{GeometryError, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Self::F32 | Self::F64)
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Self::Scalar(name, _) | Self::List { name, .. } => name,
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Point(usize),
    Normal(usize),
    Color(usize),
    Skip,
}

fn malformed(msg: impl Into<String>) -> GeometryError {
    GeometryError::MalformedHeader(msg.into())
}

/// Parses the header and returns the format, elements and body offset.
fn parse_header(bytes: &[u8]) -> Result<(PlyFormat, Vec<Element>, usize), GeometryError> {
    let mut pos = 0;
    let mut next_line = || -> Result<&str, GeometryError> {
        let rest = &bytes[pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| malformed("missing end_header"))?;
        pos += end + 1;
        let line = std::str::from_utf8(&rest[..end]).map_err(|_| malformed("header is not text"))?;
        Ok(line.trim_end_matches('\r'))
    };

    if next_line()? != "ply" {
        return Err(malformed("missing ply magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line()?;
        let mut words = line.split_ascii_whitespace();
        match words.next() {
            Some("end_header") => break,
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                let kind = words.next().unwrap_or("");
                let version = words.next().unwrap_or("");
                if version != "1.0" {
                    return Err(GeometryError::UnsupportedFormat(format!("version {version:?}")));
                }
                format = Some(match kind {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => return Err(GeometryError::UnsupportedFormat(other.to_string())),
                });
            }
            Some("element") => {
                let (Some(name), Some(count), None) = (words.next(), words.next(), words.next()) else {
                    return Err(malformed(format!("bad element line {line:?}")));
                };
                let count = count
                    .parse()
                    .map_err(|_| malformed(format!("bad element count {count:?}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property before any element"))?;
                let words: Vec<&str> = words.collect();
                let ty = |s: &str| Scalar::parse(s).ok_or_else(|| malformed(format!("unknown type {s:?}")));
                let prop = match words[..] {
                    ["list", count, item, name] => Property::List {
                        name: name.to_string(),
                        count: ty(count)?,
                        item: ty(item)?,
                    },
                    [t, name] => Property::Scalar(name.to_string(), ty(t)?),
                    _ => return Err(malformed(format!("bad property line {line:?}"))),
                };
                if element.props.iter().any(|p| p.name() == prop.name()) {
                    return Err(malformed(format!("duplicate property {:?}", prop.name())));
                }
                element.props.push(prop);
            }
            Some(other) => return Err(malformed(format!("unknown keyword {other:?}"))),
        }
    }
    let format = format.ok_or_else(|| malformed("missing format line"))?;
    Ok((format, elements, pos))
}

/// Maps vertex properties to roles and reports which optional groups exist.
fn vertex_roles(vertex: &Element) -> Result<(Vec<Role>, bool, bool), GeometryError> {
    const GROUPS: [([&str; 3], fn(usize) -> Role); 3] = [
        (["x", "y", "z"], Role::Point),
        (["nx", "ny", "nz"], Role::Normal),
        (["red", "green", "blue"], Role::Color),
    ];
    let mut roles = vec![Role::Skip; vertex.props.len()];
    let mut present = [false; 3];
    for (g, (names, role)) in GROUPS.iter().enumerate() {
        let found: Vec<Option<usize>> = names
            .iter()
            .map(|n| vertex.props.iter().position(|p| p.name() == *n))
            .collect();
        if found.iter().all(Option::is_none) {
            continue;
        }
        for (k, idx) in found.iter().enumerate() {
            let idx = idx.ok_or_else(|| malformed(format!("vertex lacks {:?}", names[k])))?;
            let ok = match &vertex.props[idx] {
                Property::Scalar(_, t) if g == 2 => *t == Scalar::U8,
                Property::Scalar(_, t) => t.is_float(),
                Property::List { .. } => false,
            };
            if !ok {
                return Err(malformed(format!("vertex property {:?} has the wrong type", names[k])));
            }
            roles[idx] = role(k);
        }
        present[g] = true;
    }
    if !present[0] {
        return Err(malformed("vertex lacks x, y, z"));
    }
    Ok((roles, present[1], present[2]))
}

trait Values {
    /// Next value of type `ty`, or `None` when the body is exhausted.
    fn next(&mut self, ty: Scalar) -> Result<Option<f64>, GeometryError>;
    /// Skips `n` values of type `ty`; false when the body is exhausted.
    fn skip(&mut self, ty: Scalar, n: usize) -> Result<bool, GeometryError>;
}

struct AsciiValues<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl Values for AsciiValues<'_> {
    fn next(&mut self, ty: Scalar) -> Result<Option<f64>, GeometryError> {
        let Some(tok) = self.tokens.next() else {
            return Ok(None);
        };
        let bad = || GeometryError::MalformedBody(format!("bad {ty:?} value {tok:?}"));
        let v = match ty {
            Scalar::F32 => tok.parse::<f32>().map_err(|_| bad())? as f64,
            Scalar::F64 => tok.parse::<f64>().map_err(|_| bad())?,
            _ => {
                let v: i64 = tok.parse().map_err(|_| bad())?;
                let (lo, hi) = match ty {
                    Scalar::I8 => (i8::MIN as i64, i8::MAX as i64),
                    Scalar::U8 => (0, u8::MAX as i64),
                    Scalar::I16 => (i16::MIN as i64, i16::MAX as i64),
                    Scalar::U16 => (0, u16::MAX as i64),
                    Scalar::I32 => (i32::MIN as i64, i32::MAX as i64),
                    _ => (0, u32::MAX as i64),
                };
                if !(lo..=hi).contains(&v) {
                    return Err(bad());
                }
                v as f64
            }
        };
        Ok(Some(v))
    }

    fn skip(&mut self, _ty: Scalar, n: usize) -> Result<bool, GeometryError> {
        for _ in 0..n {
            if self.tokens.next().is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

struct LittleEndianValues<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Values for LittleEndianValues<'_> {
    fn next(&mut self, ty: Scalar) -> Result<Option<f64>, GeometryError> {
        let size = ty.size();
        let Some(b) = self.data.get(self.pos..self.pos + size) else {
            return Ok(None);
        };
        self.pos += size;
        Ok(Some(match ty {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b.try_into().unwrap()),
        }))
    }

    fn skip(&mut self, ty: Scalar, n: usize) -> Result<bool, GeometryError> {
        match n
            .checked_mul(ty.size())
            .and_then(|len| self.pos.checked_add(len))
            .filter(|&end| end <= self.data.len())
        {
            Some(end) => {
                self.pos = end;
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

fn list_len(count: f64) -> Result<usize, GeometryError> {
    if count < 0.0 || count.fract() != 0.0 {
        return Err(GeometryError::MalformedBody(format!("bad list length {count}")));
    }
    Ok(count as usize)
}

fn read_body(
    elements: &[Element],
    body_len: usize,
    values: &mut impl Values,
) -> Result<PointCloud, GeometryError> {
    let vertex_at = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| malformed("no vertex element"))?;
    let vertex = &elements[vertex_at];
    let (roles, has_normals, has_colors) = vertex_roles(vertex)?;
    let truncated = |read| GeometryError::TruncatedBody {
        expected: vertex.count,
        read,
    };

    for element in &elements[..vertex_at] {
        for _ in 0..element.count {
            for prop in &element.props {
                let complete = match *prop {
                    Property::Scalar(_, ty) => values.skip(ty, 1)?,
                    Property::List { count, item, .. } => match values.next(count)? {
                        Some(n) => values.skip(item, list_len(n)?)?,
                        None => false,
                    },
                };
                if !complete {
                    return Err(truncated(0));
                }
            }
        }
    }

    // every property takes at least one byte, so the body bounds the count
    let capacity = vertex.count.min(body_len / vertex.props.len().max(1));
    let mut points = Vec::with_capacity(capacity);
    let mut normals = Vec::with_capacity(if has_normals { capacity } else { 0 });
    let mut colors = Vec::with_capacity(if has_colors { capacity } else { 0 });
    for i in 0..vertex.count {
        let (mut p, mut n, mut c) = ([0.0; 3], [0.0; 3], [0u8; 3]);
        for (prop, role) in vertex.props.iter().zip(&roles) {
            match (prop, *role) {
                (Property::Scalar(_, ty), role) => {
                    let v = values.next(*ty)?.ok_or_else(|| truncated(i))?;
                    match role {
                        Role::Point(k) => p[k] = v,
                        Role::Normal(k) => n[k] = v,
                        Role::Color(k) => c[k] = v as u8,
                        Role::Skip => {}
                    }
                }
                (Property::List { count, item, .. }, _) => {
                    let len = values.next(*count)?.ok_or_else(|| truncated(i))?;
                    if !values.skip(*item, list_len(len)?)? {
                        return Err(truncated(i));
                    }
                }
            }
        }
        points.push(p);
        if has_normals {
            normals.push(n);
        }
        if has_colors {
            colors.push(c);
        }
    }
    PointCloud::new(
        points,
        has_colors.then_some(colors),
        has_normals.then_some(normals),
    )
}

/// Parses a PLY file held in memory.
pub fn decode_ply(bytes: &[u8]) -> Result<PointCloud, GeometryError> {
    let (format, elements, body_start) = parse_header(bytes)?;
    let body = &bytes[body_start..];
    match format {
        PlyFormat::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|_| GeometryError::MalformedBody("ascii body is not text".into()))?;
            let mut values = AsciiValues {
                tokens: text.split_ascii_whitespace(),
            };
            read_body(&elements, body.len(), &mut values)
        }
        PlyFormat::BinaryLittleEndian => {
            let mut values = LittleEndianValues { data: body, pos: 0 };
            read_body(&elements, body.len(), &mut values)
        }
    }
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud, GeometryError> {
    decode_ply(&std::fs::read(path)?)
}

fn header(pc: &PointCloud, format: PlyFormat) -> String {
    let mut h = String::from("ply\n");
    h.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    let _ = writeln!(h, "element vertex {}", pc.len());
    for name in ["x", "y", "z"] {
        let _ = writeln!(h, "property double {name}");
    }
    if pc.normals().is_some() {
        for name in ["nx", "ny", "nz"] {
            let _ = writeln!(h, "property double {name}");
        }
    }
    if pc.colors().is_some() {
        for name in ["red", "green", "blue"] {
            let _ = writeln!(h, "property uchar {name}");
        }
    }
    h.push_str("end_header\n");
    h
}

/// Writes `pc` as PLY. Coordinates are stored as doubles; ascii output
/// prints 9 significant digits.
pub fn write_ply_to<W: Write>(mut w: W, pc: &PointCloud, format: PlyFormat) -> Result<(), GeometryError> {
    w.write_all(header(pc, format).as_bytes())?;
    for i in 0..pc.len() {
        let normal = pc.normals().map(|n| n[i]);
        let color = pc.colors().map(|c| c[i]);
        match format {
            PlyFormat::Ascii => {
                let [x, y, z] = pc.points()[i];
                write!(w, "{x:.8e} {y:.8e} {z:.8e}")?;
                if let Some([a, b, c]) = normal {
                    write!(w, " {a:.8e} {b:.8e} {c:.8e}")?;
                }
                if let Some([r, g, b]) = color {
                    write!(w, " {r} {g} {b}")?;
                }
                w.write_all(b"\n")?;
            }
            PlyFormat::BinaryLittleEndian => {
                for v in pc.points()[i].iter().chain(normal.iter().flatten()) {
                    w.write_all(&v.to_le_bytes())?;
                }
                if let Some(c) = color {
                    w.write_all(&c)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn encode_ply(pc: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let mut out = Vec::new();
    write_ply_to(&mut out, pc, format).expect("writing to a Vec cannot fail");
    out
}

pub fn write_ply(pc: &PointCloud, path: impl AsRef<Path>, format: PlyFormat) -> Result<(), GeometryError> {
    let file = std::fs::File::create(path)?;
    write_ply_to(BufWriter::new(file), pc, format)
}
