//! PLY reading and writing (ascii and binary little endian).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
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
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("eight bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Contents of a PLY file relevant here.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlyData {
    pub positions: Vec<Point>,
    /// Per-vertex `class` property when present.
    pub labels: Option<Vec<u32>>,
    /// Faces, fan-triangulated when polygonal.
    pub faces: Vec<[usize; 3]>,
}

pub fn read_ply<R: BufRead>(mut r: R) -> Result<PlyData> {
    let mut line_no = 0;
    let next_line = |r: &mut R, line_no: &mut usize| -> Result<String> {
        let mut s = String::new();
        if r.read_line(&mut s)? == 0 {
            return Err(Error::parse(*line_no + 1, "unexpected end of file"));
        }
        *line_no += 1;
        Ok(s.trim_end_matches(['\r', '\n']).to_string())
    };

    if next_line(&mut r, &mut line_no)?.trim() != "ply" {
        return Err(Error::parse(1, "missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line(&mut r, &mut line_no)?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    other => {
                        return Err(Error::parse(line_no, format!("unsupported format '{other}'")))
                    }
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad element count '{count}'")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", ct, it, name] => {
                let (Some(ct), Some(it)) = (Scalar::parse(ct), Scalar::parse(it)) else {
                    return Err(Error::parse(line_no, "unknown list property type"));
                };
                elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "property before element"))?
                    .props
                    .push(Property::List(name.to_string(), ct, it));
            }
            ["property", ty, name] => {
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| Error::parse(line_no, format!("unknown property type '{ty}'")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "property before element"))?
                    .props
                    .push(Property::Scalar(name.to_string(), ty));
            }
            ["end_header"] => break,
            _ => return Err(Error::parse(line_no, format!("unrecognized header line '{line}'"))),
        }
    }
    let encoding = encoding.ok_or_else(|| Error::parse(line_no, "missing format line"))?;

    let mut data = PlyData::default();
    for el in &elements {
        let scalar_index = |n: &str| {
            el.props
                .iter()
                .position(|p| matches!(p, Property::Scalar(name, _) if name == n))
        };
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let xyz = [scalar_index("x"), scalar_index("y"), scalar_index("z")];
        let class = scalar_index("class");
        if is_vertex && xyz.iter().any(Option::is_none) {
            return Err(Error::parse(line_no, "vertex element lacks x, y or z"));
        }
        let face_list = el.props.iter().position(
            |p| matches!(p, Property::List(name, _, _) if name == "vertex_indices" || name == "vertex_index"),
        );
        if is_vertex {
            data.positions.reserve(el.count);
            if class.is_some() {
                data.labels = Some(Vec::with_capacity(el.count));
            }
        }
        for _ in 0..el.count {
            let (values, lists) = match encoding {
                PlyEncoding::Ascii => {
                    let line = next_line(&mut r, &mut line_no)?;
                    read_ascii_record(&line, &el.props, line_no)?
                }
                PlyEncoding::BinaryLittleEndian => read_binary_record(&mut r, &el.props, line_no)?,
            };
            if is_vertex {
                let c = |i: Option<usize>| values[i.expect("checked above")];
                let p = Point::new(c(xyz[0]), c(xyz[1]), c(xyz[2]));
                if !p.coords.iter().all(|v| v.is_finite()) {
                    return Err(Error::parse(line_no, "non-finite vertex coordinate"));
                }
                data.positions.push(p);
                if let (Some(ci), Some(labels)) = (class, data.labels.as_mut()) {
                    let v = values[ci];
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Error::parse(line_no, format!("class value {v} is not a label")));
                    }
                    labels.push(v as u32);
                }
            } else if is_face {
                let Some(li) = face_list else {
                    return Err(Error::parse(line_no, "face element lacks vertex_indices"));
                };
                let idx = &lists[li];
                if idx.len() < 3 {
                    return Err(Error::parse(line_no, "face with fewer than three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    data.faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
        }
    }
    Ok(data)
}

type Record = (Vec<f64>, Vec<Vec<usize>>);

fn read_ascii_record(line: &str, props: &[Property], line_no: usize) -> Result<Record> {
    let mut tok = line.split_whitespace();
    let mut num = |what: &str| -> Result<f64> {
        let t = tok
            .next()
            .ok_or_else(|| Error::parse(line_no, format!("missing value for '{what}'")))?;
        t.parse::<f64>()
            .map_err(|_| Error::parse(line_no, format!("bad number '{t}' for '{what}'")))
    };
    let mut values = vec![0.0; props.len()];
    let mut lists = vec![Vec::new(); props.len()];
    for (i, p) in props.iter().enumerate() {
        match p {
            // Round through the declared width so ascii and binary agree.
            Property::Scalar(name, Scalar::F32) => values[i] = num(name)? as f32 as f64,
            Property::Scalar(name, _) => values[i] = num(name)?,
            Property::List(name, _, _) => {
                let n = num(name)?;
                for _ in 0..n as usize {
                    lists[i].push(index_value(num(name)?, line_no)?);
                }
            }
        }
    }
    Ok((values, lists))
}

fn read_binary_record<R: BufRead>(r: &mut R, props: &[Property], line_no: usize) -> Result<Record> {
    let mut buf = [0u8; 8];
    let mut read = |r: &mut R, ty: Scalar| -> Result<f64> {
        let n = ty.size();
        r.read_exact(&mut buf[..n]).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::parse(line_no, "binary body ends early"),
            _ => Error::Io(e),
        })?;
        Ok(ty.read_le(&buf[..n]))
    };
    let mut values = vec![0.0; props.len()];
    let mut lists = vec![Vec::new(); props.len()];
    for (i, p) in props.iter().enumerate() {
        match *p {
            Property::Scalar(_, ty) => values[i] = read(r, ty)?,
            Property::List(_, ct, it) => {
                let n = read(r, ct)?;
                for _ in 0..n as usize {
                    lists[i].push(index_value(read(r, it)?, line_no)?);
                }
            }
        }
    }
    Ok((values, lists))
}

fn index_value(v: f64, line_no: usize) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::parse(line_no, format!("bad vertex index {v}")));
    }
    Ok(v as usize)
}

/// What to write besides positions.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlyExtras<'a> {
    pub labels: Option<&'a [u32]>,
    pub colors: Option<&'a [[u8; 3]]>,
    pub faces: Option<&'a [[usize; 3]]>,
}

/// Write positions as float32, then optional `class` (uint), `red`,
/// `green`, `blue` (uchar) vertex properties and triangle faces.
pub fn write_ply<W: Write>(
    mut w: W,
    positions: &[Point],
    extras: PlyExtras<'_>,
    encoding: PlyEncoding,
) -> Result<()> {
    let n = positions.len();
    if extras.labels.is_some_and(|l| l.len() != n) || extras.colors.is_some_and(|c| c.len() != n) {
        return Err(Error::InvalidParam("per-vertex data length differs from vertex count".into()));
    }
    writeln!(w, "ply")?;
    writeln!(
        w,
        "format {} 1.0",
        match encoding {
            PlyEncoding::Ascii => "ascii",
            PlyEncoding::BinaryLittleEndian => "binary_little_endian",
        }
    )?;
    writeln!(w, "element vertex {n}")?;
    for c in ["x", "y", "z"] {
        writeln!(w, "property float {c}")?;
    }
    if extras.labels.is_some() {
        writeln!(w, "property uint class")?;
    }
    if extras.colors.is_some() {
        for c in ["red", "green", "blue"] {
            writeln!(w, "property uchar {c}")?;
        }
    }
    if let Some(f) = extras.faces {
        writeln!(w, "element face {}", f.len())?;
        writeln!(w, "property list uchar int vertex_indices")?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in positions.iter().enumerate() {
        let xyz = [p.x as f32, p.y as f32, p.z as f32];
        match encoding {
            PlyEncoding::Ascii => {
                write!(w, "{} {} {}", xyz[0], xyz[1], xyz[2])?;
                if let Some(l) = extras.labels {
                    write!(w, " {}", l[i])?;
                }
                if let Some(c) = extras.colors {
                    write!(w, " {} {} {}", c[i][0], c[i][1], c[i][2])?;
                }
                writeln!(w)?;
            }
            PlyEncoding::BinaryLittleEndian => {
                for v in xyz {
                    w.write_all(&v.to_le_bytes())?;
                }
                if let Some(l) = extras.labels {
                    w.write_all(&l[i].to_le_bytes())?;
                }
                if let Some(c) = extras.colors {
                    w.write_all(&c[i])?;
                }
            }
        }
    }
    if let Some(faces) = extras.faces {
        for t in faces {
            let idx = t.map(|v| v as i32);
            match encoding {
                PlyEncoding::Ascii => writeln!(w, "3 {} {} {}", idx[0], idx[1], idx[2])?,
                PlyEncoding::BinaryLittleEndian => {
                    w.write_all(&[3u8])?;
                    for v in idx {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
