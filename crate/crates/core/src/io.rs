//! Line-oriented text formats.
//!
//! Graph: a header `n m_edges`, then one `u v` line per edge (0-indexed,
//! left part first). A factorisation adds a colour column: `u v c`. A list
//! assignment writes `u v c1,c2,...` per edge (empty lists leave the third
//! field blank). Lines starting with `#` are ignored.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{BiGraph, Factorisation};

fn content_lines(r: impl BufRead) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    r.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| match l {
        Ok(s) => !s.trim().is_empty() && !s.trim_start().starts_with('#'),
        Err(_) => true,
    })
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad {what}") })
}

fn read_header(lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>) -> Result<(usize, usize)> {
    let (line, text) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let text = text?;
    let mut tok = text.split_whitespace();
    Ok((parse_num(tok.next(), line, "n")?, parse_num(tok.next(), line, "edge count")?))
}

pub fn write_graph(h: &BiGraph, mut w: impl Write) -> Result<()> {
    writeln!(w, "{} {}", h.n(), h.num_edges())?;
    for &(u, v) in h.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn read_graph(r: impl BufRead) -> Result<BiGraph> {
    let mut lines = content_lines(r);
    let (n, m) = read_header(&mut lines)?;
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        let text = text?;
        let mut tok = text.split_whitespace();
        edges.push((parse_num(tok.next(), line, "u")?, parse_num(tok.next(), line, "v")?));
    }
    if edges.len() != m {
        return Err(Error::Parse { line: 1, msg: format!("header promises {m} edges, found {}", edges.len()) });
    }
    BiGraph::new(n, edges)
}

pub fn write_factorisation(f: &Factorisation, mut w: impl Write) -> Result<()> {
    let h = f.host();
    writeln!(w, "{} {}", h.n(), h.num_edges())?;
    for (&(u, v), c) in h.edges().iter().zip(f.colour_of()) {
        writeln!(w, "{u} {v} {c}")?;
    }
    Ok(())
}

pub fn read_factorisation(r: impl BufRead) -> Result<Factorisation> {
    let mut lines = content_lines(r);
    let (n, m) = read_header(&mut lines)?;
    let mut rows: Vec<(u32, u32, u32)> = Vec::with_capacity(m);
    for (line, text) in lines {
        let text = text?;
        let mut tok = text.split_whitespace();
        rows.push((
            parse_num(tok.next(), line, "u")?,
            parse_num(tok.next(), line, "v")?,
            parse_num(tok.next(), line, "colour")?,
        ));
    }
    if rows.len() != m {
        return Err(Error::Parse { line: 1, msg: format!("header promises {m} edges, found {}", rows.len()) });
    }
    let host = BiGraph::new(n, rows.iter().map(|&(u, v, _)| (u, v)).collect())?;
    let mut colour_of = vec![0u32; host.num_edges()];
    for &(u, v, c) in &rows {
        colour_of[host.edge_id(u as usize, v as usize).expect("edge just inserted")] = c;
    }
    let colours = rows.iter().map(|r| r.2 as usize + 1).max().unwrap_or(0);
    Factorisation::new(host, colours, colour_of)
}

pub fn write_lists(h: &BiGraph, lists: &[Vec<u32>], mut w: impl Write) -> Result<()> {
    writeln!(w, "{} {}", h.n(), h.num_edges())?;
    for (&(u, v), list) in h.edges().iter().zip(lists) {
        let joined: Vec<String> = list.iter().map(u32::to_string).collect();
        writeln!(w, "{u} {v} {}", joined.join(","))?;
    }
    Ok(())
}

pub fn read_lists(r: impl BufRead) -> Result<(BiGraph, Vec<Vec<u32>>)> {
    let mut lines = content_lines(r);
    let (n, _) = read_header(&mut lines)?;
    let mut rows = Vec::new();
    for (line, text) in lines {
        let text = text?;
        let mut tok = text.split_whitespace();
        let u: u32 = parse_num(tok.next(), line, "u")?;
        let v: u32 = parse_num(tok.next(), line, "v")?;
        let list = match tok.next() {
            None => Vec::new(),
            Some(s) => s
                .split(',')
                .map(|c| c.parse().map_err(|_| Error::Parse { line, msg: format!("bad colour {c:?}") }))
                .collect::<Result<Vec<u32>>>()?,
        };
        rows.push((u, v, list));
    }
    let host = BiGraph::new(n, rows.iter().map(|(u, v, _)| (*u, *v)).collect())?;
    let mut lists = vec![Vec::new(); host.num_edges()];
    for (u, v, list) in rows {
        lists[host.edge_id(u as usize, v as usize).expect("edge just inserted")] = list;
    }
    Ok((host, lists))
}
