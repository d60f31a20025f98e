//! Whitespace-separated `x y z` records; further columns are ignored.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::Point;

pub fn read_xyz<R: BufRead>(r: R) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut c = [0.0; 3];
        let mut tok = s.split(|ch: char| ch.is_whitespace() || ch == ',').filter(|t| !t.is_empty());
        for v in &mut c {
            let t = tok
                .next()
                .ok_or_else(|| Error::parse(i + 1, "expected three coordinates"))?;
            *v = t
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad coordinate '{t}'")))?;
        }
        if !c.iter().all(|v: &f64| v.is_finite()) {
            return Err(Error::parse(i + 1, "non-finite coordinate"));
        }
        out.push(Point::new(c[0], c[1], c[2]));
    }
    Ok(out)
}

pub fn write_xyz<W: Write>(mut w: W, points: &[Point]) -> Result<()> {
    for p in points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}
