//! Plain-text node/element listing of a partitioned mesh, one record per
//! line:
//!
//! ```text
//! mesh <m> <nd>
//! node <index> <x> <y>
//! tri <index> <a> <b> <c> <subdomain>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, SubdomainPartition};

#[derive(Debug, Clone, PartialEq)]
pub struct MeshDump {
    pub m: usize,
    pub nd: usize,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub subdomains: Vec<usize>,
}

pub fn write_mesh_dump(mesh: &Mesh, partition: &SubdomainPartition) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mesh {} {}",
        mesh.elements_per_side(),
        partition.subdomains_per_side()
    );
    for (k, [x, y]) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(out, "node {k} {x:?} {y:?}");
    }
    for (k, [a, b, c]) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(out, "tri {k} {a} {b} {c} {}", partition.subdomain_of_triangle(k));
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

pub fn parse_mesh_dump(text: &str) -> Result<MeshDump> {
    let mut header: Option<(usize, usize)> = None;
    let mut nodes = Vec::new();
    let mut triangles = Vec::new();
    let mut subdomains = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("mesh") => {
                if header.is_some() {
                    return Err(parse_err(line, "duplicate header"));
                }
                let m: usize = field(toks.next(), line, "m")?;
                let nd: usize = field(toks.next(), line, "nd")?;
                if m == 0 || nd == 0 || m % nd != 0 {
                    return Err(parse_err(line, "inconsistent m/nd"));
                }
                header = Some((m, nd));
            }
            Some("node") => {
                let idx: usize = field(toks.next(), line, "node index")?;
                if idx != nodes.len() {
                    return Err(parse_err(line, "node indices must be consecutive"));
                }
                let x: f64 = field(toks.next(), line, "x")?;
                let y: f64 = field(toks.next(), line, "y")?;
                if !x.is_finite() || !y.is_finite() {
                    return Err(parse_err(line, "non-finite coordinate"));
                }
                nodes.push([x, y]);
            }
            Some("tri") => {
                let idx: usize = field(toks.next(), line, "triangle index")?;
                if idx != triangles.len() {
                    return Err(parse_err(line, "triangle indices must be consecutive"));
                }
                let mut tri = [0usize; 3];
                for v in tri.iter_mut() {
                    *v = field(toks.next(), line, "vertex")?;
                    if *v >= nodes.len() {
                        return Err(parse_err(line, "vertex refers to unknown node"));
                    }
                }
                let sub: usize = field(toks.next(), line, "subdomain")?;
                triangles.push(tri);
                subdomains.push(sub);
            }
            Some(other) => return Err(parse_err(line, format!("unknown record `{other}`"))),
            None => unreachable!(),
        }
        if toks.next().is_some() {
            return Err(parse_err(line, "trailing tokens"));
        }
    }

    let (m, nd) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    let last = text.lines().count();
    let expected_nodes = (m + 1).checked_mul(m + 1);
    let expected_tris = m.checked_mul(m).and_then(|v| v.checked_mul(2));
    if expected_nodes != Some(nodes.len()) || expected_tris != Some(triangles.len()) {
        return Err(parse_err(last, "record counts do not match header"));
    }
    if subdomains.iter().any(|&s| s >= nd * nd) {
        return Err(parse_err(last, "subdomain index out of range"));
    }
    Ok(MeshDump {
        m,
        nd,
        nodes,
        triangles,
        subdomains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_partition, build_structured_mesh};

    #[test]
    fn reparse_matches_mesh() {
        let mesh = build_structured_mesh(4).unwrap();
        let p = build_partition(&mesh, 2).unwrap();
        let dump = parse_mesh_dump(&write_mesh_dump(&mesh, &p)).unwrap();
        assert_eq!(dump.m, 4);
        assert_eq!(dump.nd, 2);
        assert_eq!(dump.nodes, mesh.nodes());
        assert_eq!(dump.triangles, mesh.triangles());
        assert_eq!(dump.subdomains[31], 3);
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "",
            "mesh 2 3",
            "mesh 1 1\nnode 1 0 0",
            "mesh 1 1\nnode 0 0 nan",
            "mesh 1 1\nnode 0 0 0\ntri 0 0 0 7 0",
            "mesh 1 1\nwhat",
            "mesh 1 1\nnode 0 0 0 0",
        ] {
            assert!(parse_mesh_dump(bad).is_err(), "{bad:?}");
        }
    }
}
