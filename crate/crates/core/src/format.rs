//! Text and binary map formats.
//!
//! Text grammar (whitespace and newlines between fields are interchangeable,
//! `#` starts a comment, a map ends after its `root=` field):
//!
//! ```text
//! darts=<2m>
//! sigma=<cycles, e.g. (0 2 4)(1 5 3); omitted darts are fixed points>
//! alpha=<pairs, e.g. (0 1)(2 3)(4 5)>
//! root=<dart id, or `none` for the atomic map>
//! ```
//!
//! Binary cache layout, all integers little-endian `u32`: magic `MCLB`,
//! format version, record count, then per record: dart count, sigma array,
//! alpha array, root (`u32::MAX` for the atomic map).

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::map::{alpha, Dart, RootedMap};

pub const BINARY_MAGIC: &[u8; 4] = b"MCLB";
pub const BINARY_VERSION: u32 = 1;

pub fn to_text(map: &RootedMap) -> String {
    let mut out = String::new();
    let n = map.darts();
    let _ = writeln!(out, "darts={n}");
    out.push_str("sigma=");
    let vx = map.vertices();
    if !map.is_atomic() {
        for cyc in &vx.cycles {
            out.push('(');
            let parts: Vec<String> = cyc.iter().map(u32::to_string).collect();
            out.push_str(&parts.join(" "));
            out.push(')');
        }
    }
    out.push('\n');
    out.push_str("alpha=");
    for d in (0..n as Dart).step_by(2) {
        let _ = write!(out, "({} {})", d, alpha(d));
    }
    out.push('\n');
    if map.is_atomic() {
        out.push_str("root=none\n");
    } else {
        let _ = writeln!(out, "root={}", map.root());
    }
    out
}

/// Several maps separated by blank lines.
pub fn maps_to_text<'a>(maps: impl IntoIterator<Item = &'a RootedMap>) -> String {
    let parts: Vec<String> = maps.into_iter().map(to_text).collect();
    parts.join("\n")
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() {
            match self.src[self.pos] {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b' ' | b'\t' | b'\r' | b';' | b',' => self.pos += 1,
                b'#' => {
                    while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn key(&mut self) -> Result<Option<String>> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos] != b'=' {
            let c = self.src[self.pos];
            if c.is_ascii_whitespace() {
                return Err(self.err("expected `key=`"));
            }
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Err(self.err("expected `=`"));
        }
        let key = String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_lowercase();
        self.pos += 1;
        Ok(Some(key))
    }

    fn token(&mut self) -> Result<String> {
        while self.pos < self.src.len() && matches!(self.src[self.pos], b' ' | b'\t') {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.src.len()
            && !self.src[self.pos].is_ascii_whitespace()
            && !matches!(self.src[self.pos], b';' | b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("missing value"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    /// Reads `(a b c)(d e)...`; stops at the first non-parenthesis.
    fn cycles(&mut self) -> Result<Vec<Vec<u32>>> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.src.len() && matches!(self.src[self.pos], b' ' | b'\t') {
                self.pos += 1;
            }
            if self.pos >= self.src.len() || self.src[self.pos] != b'(' {
                return Ok(out);
            }
            self.pos += 1;
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos] != b')' {
                if self.src[self.pos] == b'\n' {
                    return Err(self.err("unterminated cycle"));
                }
                self.pos += 1;
            }
            if self.pos >= self.src.len() {
                return Err(self.err("unterminated cycle"));
            }
            let body = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            self.pos += 1;
            let mut cyc = Vec::new();
            for t in body.split(|c: char| c.is_whitespace() || c == ',') {
                if t.is_empty() {
                    continue;
                }
                cyc.push(t.parse::<u32>().map_err(|_| self.err(format!("bad dart `{t}`")))?);
            }
            if cyc.is_empty() {
                return Err(self.err("empty cycle"));
            }
            out.push(cyc);
        }
    }
}

fn cycles_to_perm(n: usize, cycles: &[Vec<u32>], name: &str, line: usize) -> Result<Vec<u32>> {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    let mut seen = vec![false; n];
    for cyc in cycles {
        for (i, &d) in cyc.iter().enumerate() {
            let du = d as usize;
            if du >= n {
                return Err(Error::Parse { line, msg: format!("{name}: dart {d} out of range") });
            }
            if seen[du] {
                return Err(Error::Parse { line, msg: format!("{name}: dart {d} repeated") });
            }
            seen[du] = true;
            perm[du] = cyc[(i + 1) % cyc.len()];
        }
    }
    Ok(perm)
}

/// Parses every map in `text`.
pub fn parse_maps(text: &str) -> Result<Vec<RootedMap>> {
    let mut lx = Lexer { src: text.as_bytes(), pos: 0, line: 1 };
    let mut maps = Vec::new();
    let mut darts: Option<usize> = None;
    let mut sigma: Option<(Vec<Vec<u32>>, usize)> = None;
    let mut alpha_cycles: Option<(Vec<Vec<u32>>, usize)> = None;
    while let Some(key) = lx.key()? {
        match key.as_str() {
            "darts" => {
                let t = lx.token()?;
                darts = Some(t.parse().map_err(|_| lx.err(format!("bad dart count `{t}`")))?);
            }
            "sigma" => sigma = Some((lx.cycles()?, lx.line)),
            "alpha" => alpha_cycles = Some((lx.cycles()?, lx.line)),
            "root" => {
                let line = lx.line;
                let t = lx.token()?;
                let n = darts.take().ok_or_else(|| lx.err("`root=` before `darts=`"))?;
                let (sc, sl) = sigma.take().ok_or_else(|| lx.err("missing `sigma=`"))?;
                let (ac, al) = alpha_cycles.take().ok_or_else(|| lx.err("missing `alpha=`"))?;
                if n == 0 {
                    if !sc.is_empty() || !ac.is_empty() || !(t == "none" || t == "0") {
                        return Err(Error::Parse { line, msg: "atomic map must be empty".into() });
                    }
                    maps.push(RootedMap::atomic());
                    continue;
                }
                let root: u32 = t.parse().map_err(|_| lx.err(format!("bad root `{t}`")))?;
                let s = cycles_to_perm(n, &sc, "sigma", sl)?;
                if ac.iter().any(|c| c.len() != 2) {
                    return Err(Error::Parse { line: al, msg: "alpha must consist of pairs".into() });
                }
                let a = cycles_to_perm(n, &ac, "alpha", al)?;
                let map = RootedMap::from_permutations(&s, &a, root)
                    .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
                maps.push(map);
            }
            other => return Err(lx.err(format!("unknown field `{other}`"))),
        }
    }
    if darts.is_some() || sigma.is_some() || alpha_cycles.is_some() {
        return Err(lx.err("incomplete map at end of input"));
    }
    Ok(maps)
}

/// Parses exactly one map.
pub fn parse_map(text: &str) -> Result<RootedMap> {
    let mut maps = parse_maps(text)?;
    match maps.len() {
        1 => Ok(maps.pop().unwrap()),
        k => Err(Error::Parse { line: 1, msg: format!("expected one map, found {k}") }),
    }
}

pub fn write_binary<W: Write>(mut w: W, maps: &[RootedMap]) -> std::io::Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(maps.len() as u32).to_le_bytes())?;
    for m in maps {
        let n = m.darts() as u32;
        w.write_all(&n.to_le_bytes())?;
        for &s in m.sigma_slice() {
            w.write_all(&s.to_le_bytes())?;
        }
        for d in 0..n {
            w.write_all(&alpha(d).to_le_bytes())?;
        }
        let root = if m.is_atomic() { u32::MAX } else { m.root() };
        w.write_all(&root.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Vec<RootedMap>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    let bad = |msg: &str| Error::Parse { line: 0, msg: msg.to_string() };
    if buf.len() < 12 || &buf[..4] != BINARY_MAGIC {
        return Err(bad("not a binary map file"));
    }
    let mut words = buf[4..]
        .chunks(4)
        .map(|c| if c.len() == 4 { Some(u32::from_le_bytes([c[0], c[1], c[2], c[3]])) } else { None });
    let mut next = || words.next().flatten().ok_or_else(|| bad("truncated binary map file"));
    let version = next()?;
    if version != BINARY_VERSION {
        return Err(bad(&format!("unsupported binary version {version}")));
    }
    let count = next()?;
    let mut maps = Vec::new();
    for _ in 0..count {
        let n = next()? as usize;
        let mut s = Vec::with_capacity(n);
        for _ in 0..n {
            s.push(next()?);
        }
        let mut a = Vec::with_capacity(n);
        for _ in 0..n {
            a.push(next()?);
        }
        let root = next()?;
        if n == 0 {
            maps.push(RootedMap::atomic());
        } else {
            maps.push(RootedMap::from_permutations(&s, &a, root).map_err(|e| bad(&e.to_string()))?);
        }
    }
    Ok(maps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let t = RootedMap::from_sigma(vec![2, 5, 4, 1, 0, 3], 3).unwrap();
        let text = to_text(&t);
        assert_eq!(parse_map(&text).unwrap(), t);
        let a = RootedMap::atomic();
        assert_eq!(parse_map(&to_text(&a)).unwrap(), a);
    }

    #[test]
    fn single_line_and_fixed_points() {
        let m = parse_map("darts=2 sigma= alpha=(0 1) root=1").unwrap();
        assert_eq!(m.num_vertices(), 2);
        let many = parse_maps("darts=2 sigma=(0 1) alpha=(0 1) root=0\ndarts=2 sigma=(0)(1) alpha=(1 0) root=0\n").unwrap();
        assert_eq!(many.len(), 2);
    }

    #[test]
    fn relabels_arbitrary_involution() {
        let m = parse_map("darts=4\nsigma=(0 1)(2)(3)\nalpha=(0 2)(1 3)\nroot=0").unwrap();
        assert_eq!(m.edges(), 2);
        assert_eq!(m.num_vertices(), 3);
    }

    #[test]
    fn rejects_invalid() {
        assert!(parse_map("darts=2 sigma=(0 1) alpha=(0)(1) root=0").is_err());
        assert!(parse_map("darts=4 sigma=(0 2 1 3) alpha=(0 1)(2 3) root=0").is_err());
        assert!(parse_map("darts=4 sigma=(0)(1)(2)(3) alpha=(0 1)(2 3) root=0").is_err());
        assert!(parse_map("darts=2 sigma=(0 1)").is_err());
    }

    #[test]
    fn binary_roundtrip() {
        let maps = vec![
            RootedMap::atomic(),
            RootedMap::from_sigma(vec![1, 0], 1).unwrap(),
            RootedMap::from_sigma(vec![2, 5, 4, 1, 0, 3], 0).unwrap(),
        ];
        let mut buf = Vec::new();
        write_binary(&mut buf, &maps).unwrap();
        assert_eq!(read_binary(&buf[..]).unwrap(), maps);
        assert!(read_binary(&buf[..buf.len() - 2]).is_err());
    }
}
