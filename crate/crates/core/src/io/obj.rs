//! Wavefront OBJ: `v` and `f` records only.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Vertices and fan-triangulated faces. Face indices may be negative
/// (relative) and may carry `/vt/vn` suffixes, which are ignored.
pub fn read_obj<R: BufRead>(r: R) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for v in &mut c {
                    let t = tok
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "vertex needs three coordinates"))?;
                    *v = t
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad coordinate '{t}'")))?;
                }
                if !c.iter().all(|v: &f64| v.is_finite()) {
                    return Err(Error::parse(line_no, "non-finite coordinate"));
                }
                positions.push(Point::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx = tok
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let v: i64 = head
                            .parse()
                            .map_err(|_| Error::parse(line_no, format!("bad face index '{t}'")))?;
                        let n = positions.len() as i64;
                        let abs = if v < 0 { n + v } else { v - 1 };
                        if v == 0 || abs < 0 || abs >= n {
                            return Err(Error::parse(line_no, format!("face index {v} out of range")));
                        }
                        Ok(abs as usize)
                    })
                    .collect::<Result<Vec<usize>>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(line_no, "face with fewer than three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((positions, faces))
}

pub fn write_obj<W: Write>(mut w: W, positions: &[Point], faces: &[[usize; 3]]) -> Result<()> {
    for p in positions {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for t in faces {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}
