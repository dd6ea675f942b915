//! Simple undirected graphs over `0..n` with an optional latent planted set.
//!
//! Adjacency is stored as one bitset row per vertex; rows are kept symmetric
//! and the diagonal is always clear.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    planted: Option<Vec<usize>>,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edge_count())
            .field("planted", &self.planted)
            .finish()
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(WORD).max(1);
        Graph {
            n,
            words,
            rows: vec![0; n * words],
            planted: None,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    /// Builds a graph from an upper-triangle predicate.
    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if edge(u, v) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::param("edges", format!("bad edge ({u}, {v}) for n = {n}")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[u64] {
        &self.rows[u * self.words..(u + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / WORD] >> (v % WORD) & 1 == 1
    }

    #[inline]
    pub fn add_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u != v);
        self.rows[u * self.words + v / WORD] |= 1 << (v % WORD);
        self.rows[v * self.words + u / WORD] |= 1 << (u % WORD);
    }

    #[inline]
    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.rows[u * self.words + v / WORD] &= !(1 << (v % WORD));
        self.rows[v * self.words + u / WORD] &= !(1 << (u % WORD));
    }

    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) {
        if present {
            self.add_edge(u, v)
        } else {
            self.remove_edge(u, v)
        }
    }

    pub fn planted(&self) -> Option<&[usize]> {
        self.planted.as_deref()
    }

    /// Attaches a latent support; indices are sorted and deduplicated.
    pub fn with_planted(mut self, mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        support.dedup();
        debug_assert!(support.iter().all(|&v| v < self.n));
        self.planted = Some(support);
        self
    }

    pub fn clear_planted(&mut self) {
        self.planted = None;
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|u| self.degree(u)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| ((u + 1)..self.n).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v)))
    }

    /// Number of edges with both endpoints in `set`.
    pub fn edges_within(&self, set: &[usize]) -> usize {
        let mut count = 0;
        for (i, &u) in set.iter().enumerate() {
            for &v in &set[i + 1..] {
                if self.has_edge(u, v) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Density of the subgraph induced by `set`; zero for sets smaller than two.
    pub fn density_within(&self, set: &[usize]) -> f64 {
        let k = set.len();
        if k < 2 {
            return 0.0;
        }
        self.edges_within(set) as f64 / (k * (k - 1) / 2) as f64
    }

    /// Induced subgraph on `vertices` (relabelled in the given order); the
    /// planted set is intersected and relabelled.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut g = Graph::empty(vertices.len());
        for (i, &u) in vertices.iter().enumerate() {
            for (j, &v) in vertices.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    g.add_edge(i, j);
                }
            }
        }
        if let Some(planted) = &self.planted {
            let support = vertices
                .iter()
                .enumerate()
                .filter(|(_, v)| planted.binary_search(v).is_ok())
                .map(|(i, _)| i)
                .collect();
            g = g.with_planted(support);
        }
        g
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n);
        let mut g = Graph::empty(self.n);
        for (u, v) in self.edges() {
            g.add_edge(perm[u], perm[v]);
        }
        if let Some(planted) = &self.planted {
            g = g.with_planted(planted.iter().map(|&v| perm[v]).collect());
        }
        g
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn sum_squared_degrees(&self) -> u64 {
        (0..self.n).map(|u| (self.degree(u) as u64).pow(2)).sum()
    }

    /// Population variance of the degree sequence.
    pub fn degree_variance(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let degrees = self.degrees();
        let n = self.n as f64;
        let mean = degrees.iter().sum::<usize>() as f64 / n;
        degrees.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / n
    }

    #[inline]
    fn common_neighbors(&self, u: usize, v: usize) -> usize {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn triangle_count(&self) -> u64 {
        let mut total = 0u64;
        for (u, v) in self.edges() {
            total += self.common_neighbors(u, v) as u64;
        }
        total / 3
    }

    /// Number of 4-cycles: each cycle has two diagonal pairs.
    pub fn four_cycle_count(&self) -> u64 {
        let mut total = 0u64;
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                let c = self.common_neighbors(u, v) as u64;
                total += c * c.saturating_sub(1) / 2;
            }
        }
        total / 2
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|u| !self.has_edge(u, u))
            && (0..self.n).all(|u| (0..self.n).all(|v| self.has_edge(u, v) == self.has_edge(v, u)))
    }

    /// `"n m"` header followed by one `"u v"` line per edge, `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edge_count());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_edge_list().as_bytes())?;
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
        let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('#') => None,
            other => Some((i + 1, other)),
        });
        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header = header?;
        let (n, m) = parse_pair(&header, line_no)?;
        let mut g = Graph::empty(n);
        let mut seen = 0;
        for (line_no, line) in lines {
            let (u, v) = parse_pair(&line?, line_no)?;
            if u >= n || v >= n || u == v {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("edge ({u}, {v}) invalid for n = {n}"),
                });
            }
            g.add_edge(u, v);
            seen += 1;
        }
        if seen != m {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {m} edges, found {seen}"),
            });
        }
        Ok(g)
    }

    /// Dense 0/1 adjacency, one comma-separated row per line.
    pub fn to_dense_csv(&self) -> String {
        let mut out = String::with_capacity(self.n * self.n * 2);
        for u in 0..self.n {
            for v in 0..self.n {
                if v > 0 {
                    out.push(',');
                }
                out.push(if self.has_edge(u, v) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn read_dense_csv<R: BufRead>(r: R) -> Result<Graph> {
        let mut rows: Vec<Vec<bool>> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| match c.trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected 0/1, got `{other}`"),
                    }),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        let mut g = Graph::empty(n);
        for (u, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parse {
                    line: u + 1,
                    message: format!("row has {} entries, expected {n}", row.len()),
                });
            }
            for (v, &bit) in row.iter().enumerate() {
                if bit != rows[v][u] || (u == v && bit) {
                    return Err(Error::Parse {
                        line: u + 1,
                        message: "matrix is not a simple symmetric adjacency".into(),
                    });
                }
                if v > u && bit {
                    g.add_edge(u, v);
                }
            }
        }
        Ok(g)
    }

    /// Support line: space-separated sorted indices.
    pub fn support_line(&self) -> Option<String> {
        self.planted.as_ref().map(|s| {
            s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        })
    }

    pub fn parse_support_line(line: &str) -> Result<Vec<usize>> {
        line.split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: 1,
                    message: format!("bad vertex index `{t}`"),
                })
            })
            .collect()
    }
}

fn parse_pair(line: &str, line_no: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected two non-negative integers, got `{line}`"),
            })
    };
    let a = next()?;
    let b = next()?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_triangles(g: &Graph) -> u64 {
        let n = g.n();
        let mut t = 0;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c) {
                        t += 1;
                    }
                }
            }
        }
        t
    }

    #[test]
    fn counts_on_small_graphs() {
        let k4 = Graph::complete(4);
        assert_eq!(k4.edge_count(), 6);
        assert_eq!(k4.triangle_count(), 4);
        assert_eq!(k4.four_cycle_count(), 3);
        assert_eq!(k4.sum_squared_degrees(), 36);

        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(c4.four_cycle_count(), 1);
        assert_eq!(c4.triangle_count(), 0);
        assert_eq!(c4.degree_variance(), 0.0);
    }

    #[test]
    fn wide_graph_crosses_word_boundary() {
        let g = Graph::from_fn(130, |u, v| (u * 7 + v * 3) % 5 == 0);
        assert!(g.is_symmetric());
        assert_eq!(g.triangle_count(), brute_triangles(&g));
        let degs = g.degrees();
        assert_eq!(degs.iter().sum::<usize>(), 2 * g.edge_count());
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let g = Graph::from_edges(5, &[(0, 4), (1, 2)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "5 2\n0 4\n1 2\n");
        let back = Graph::read_edge_list(text.as_bytes()).unwrap();
        assert_eq!(back, g);
        assert!(Graph::read_edge_list("3 1\n0 0\n".as_bytes()).is_err());
        assert!(Graph::read_edge_list("3 2\n0 1\n".as_bytes()).is_err());
    }

    #[test]
    fn dense_csv_round_trip() {
        let g = Graph::from_edges(3, &[(0, 2)]).unwrap();
        let csv = g.to_dense_csv();
        assert_eq!(csv, "0,0,1\n0,0,0\n1,0,0\n");
        assert_eq!(Graph::read_dense_csv(csv.as_bytes()).unwrap(), g);
        assert!(Graph::read_dense_csv("0,1\n0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn induced_and_permuted_track_support() {
        let g = Graph::complete(5).with_planted(vec![1, 3]);
        let sub = g.induced(&[3, 4, 0]);
        assert_eq!(sub.planted(), Some(&[0usize][..]));
        let p = g.permuted(&[4, 3, 2, 1, 0]);
        assert_eq!(p.planted(), Some(&[1usize, 3][..]));
        assert_eq!(p.edge_count(), 10);
    }
}
