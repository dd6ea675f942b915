use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernels::graph_clone;
use crate::model::{bern, uniform_subset, KpcParams};

/// Dense `n × n` matrix of bits, row-major. Not assumed symmetric.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitMatrix({}x{}, ones = {})", self.n, self.n, self.count_ones())
    }
}

impl BitMatrix {
    pub fn zeros(n: usize) -> Self {
        BitMatrix { n, bits: vec![false; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.n + j] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// The `rows × cols` block, flattened row-major.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<bool> {
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for i in rows {
            out.extend_from_slice(&self.bits[i * self.n + cols.start..i * self.n + cols.end]);
        }
        out
    }
}

/// Output of the partite embedding.
#[derive(Clone, Debug)]
pub struct PartiteSubmatrix {
    pub f: BitMatrix,
    /// Contiguous parts `S_i` of `[n]`, each of size `n / k0`.
    pub parts: Vec<std::ops::Range<usize>>,
    /// Embedded positions `T_i ⊂ S_i` (global indices, sorted).
    pub embedded: Vec<Vec<usize>>,
    /// Under a planted input, the position of the clique vertex inside each
    /// part, as an offset from the part's start.
    pub planted_cells: Option<Vec<usize>>,
}

/// Embeds a k-partite graph on `[N]` into an `n × n` bit matrix with
/// contiguous parts of size `n / k0`.
///
/// The input is cloned into `G1` and `G2` at density `Q`. Part `E_i` of the
/// source is placed on a uniform subset `T_i ⊂ S_i` by the sorted-order map;
/// off-diagonal blocks read `G1` below the block diagonal and `G2` above it,
/// diagonal blocks read `G1` above their own diagonal and `G2` below it.
/// Unembedded cells are fresh `Bern(Q)`. The diagonal of block `i` is one
/// on `X_i ∪ Y_i`, where `X_i` keeps each element of `T_i` with probability
/// `p` and `Y_i` is a uniform subset of `S_i \ T_i` of size
/// `max(Bin(n/k0, Q) - |X_i|, 0)` (clamped to the room available).
pub fn to_k_partite_submatrix<R: Rng + ?Sized>(
    graph: &Graph,
    partition: &KpcParams,
    p: f64,
    q: f64,
    n: usize,
    rng: &mut R,
) -> Result<PartiteSubmatrix> {
    partition.validate()?;
    let k0 = partition.k0;
    if graph.n() != partition.n {
        return Err(Error::param("graph", format!("has {} vertices, partition covers {}", graph.n(), partition.n)));
    }
    if n % k0 != 0 {
        return Err(Error::param("n", format!("n = {n} is not a multiple of k0 = {k0}")));
    }
    let m = n / k0;
    let part = partition.part_size();
    if part > m {
        return Err(Error::Infeasible(format!("parts of size {part} do not fit in blocks of size {m}")));
    }
    let clones = graph_clone(graph, p, q, 2, rng)?;
    let (g1, g2) = (&clones[0], &clones[1]);
    let big_q = crate::kernels::clone_density(p, q);

    let parts: Vec<_> = (0..k0).map(|i| i * m..(i + 1) * m).collect();
    let embedded: Vec<Vec<usize>> = parts
        .iter()
        .map(|s| uniform_subset(rng, m, part).into_iter().map(|a| s.start + a).collect())
        .collect();
    // source[a] = Some(vertex of G) for embedded positions
    let mut source = vec![None; n];
    let mut sorted_parts = partition.partition.clone();
    for (t, e) in embedded.iter().zip(sorted_parts.iter_mut()) {
        e.sort_unstable();
        for (&a, &v) in t.iter().zip(e.iter()) {
            source[a] = Some(v);
        }
    }
    let block_of = |a: usize| a / m;

    let mut f = BitMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let bit = match (source[a], source[b]) {
                (Some(u), Some(v)) => {
                    let (i, j) = (block_of(a), block_of(b));
                    let use_first = if i != j { i > j } else { a < b };
                    if use_first {
                        g1.has_edge(u, v)
                    } else {
                        g2.has_edge(u, v)
                    }
                }
                _ => bern(rng, big_q),
            };
            f.set(a, b, bit);
        }
    }

    let binomial = Binomial::new(m as u64, big_q).map_err(|e| Error::param("Q", e.to_string()))?;
    for (s, t) in parts.iter().zip(&embedded) {
        let mut x = 0usize;
        for &a in t {
            if bern(rng, p) {
                f.set(a, a, true);
                x += 1;
            }
        }
        let outside: Vec<usize> = s.clone().filter(|a| source[*a].is_none()).collect();
        let y = (binomial.sample(rng) as usize).saturating_sub(x).min(outside.len());
        for idx in uniform_subset(rng, outside.len(), y) {
            f.set(outside[idx], outside[idx], true);
        }
    }

    let planted_cells = graph.planted().map(|support| {
        let mut cells = vec![usize::MAX; k0];
        for (i, t) in embedded.iter().enumerate() {
            for &a in t {
                if let Some(v) = source[a] {
                    if support.binary_search(&v).is_ok() {
                        cells[i] = a - parts[i].start;
                    }
                }
            }
        }
        cells
    });
    if let Some(cells) = &planted_cells {
        if cells.iter().any(|&c| c == usize::MAX) {
            return Err(Error::param("graph", "planted set must meet every part exactly once"));
        }
    }
    Ok(PartiteSubmatrix {
        f,
        parts,
        embedded,
        planted_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_kpc;
    use crate::rng::stream;

    #[test]
    fn planted_cells_are_one_when_p_is_one() {
        let kpc = KpcParams::contiguous(100, 10, 1.0, 0.5).unwrap();
        let mut rng = stream(3, 0);
        for _ in 0..5 {
            let g = sample_kpc(&kpc, &mut rng).unwrap();
            let out = to_k_partite_submatrix(&g, &kpc, 1.0, 0.5, 250, &mut rng).unwrap();
            let cells = out.planted_cells.as_ref().unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    let (a, b) = (out.parts[i].start + cells[i], out.parts[j].start + cells[j]);
                    assert!(out.f.get(a, b));
                }
            }
            // X_i = T_i when p = 1
            for t in &out.embedded {
                assert!(t.iter().all(|&a| out.f.get(a, a)));
            }
        }
    }

    #[test]
    fn orientation_follows_the_clone_rule() {
        // a complete source graph makes both clones complete, so every
        // embedded off-diagonal cell must be one
        let kpc = KpcParams::contiguous(20, 2, 1.0, 0.5).unwrap();
        let g = Graph::complete(20);
        let out = to_k_partite_submatrix(&g, &kpc, 1.0, 0.5, 60, &mut stream(4, 0)).unwrap();
        for t in &out.embedded {
            for u in &out.embedded {
                for &a in t {
                    for &b in u {
                        if a != b {
                            assert!(out.f.get(a, b));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        let kpc = KpcParams::contiguous(100, 10, 1.0, 0.5).unwrap();
        let g = Graph::empty(100);
        assert!(to_k_partite_submatrix(&g, &kpc, 1.0, 0.5, 255, &mut stream(5, 0)).is_err());
        assert!(to_k_partite_submatrix(&g, &kpc, 1.0, 0.5, 50, &mut stream(5, 0)).is_err());
    }
}
