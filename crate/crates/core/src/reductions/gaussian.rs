use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernels::RejectionKernelSpec;
use crate::linalg::{orthonormalize_rows, DenseMatrix};
use crate::model::{bern, Bicluster};

/// Largest `m · tau · n` the random rotation will allocate.
pub const ROTATION_BUDGET: usize = 1 << 27;

/// `log(1 + 2 rho) / (2 sqrt(6 log n + 2 log 2))`.
pub fn bc_mean(n: usize, rho: f64) -> f64 {
    (1.0 + 2.0 * rho).ln() / (2.0 * (6.0 * (n as f64).ln() + 2.0 * 2f64.ln()).sqrt())
}

/// Kernel precision at which [`bc_mean`] sits exactly on the kernel bound
/// for `Bern(1/2 + rho)` against `Bern(1/2)`: `n (2 rho)^(1/3)`.
pub fn bc_kernel_budget(n: usize, rho: f64) -> u64 {
    ((n as f64) * (2.0 * rho).cbrt()).floor().max(2.0) as u64
}

/// Maps a graph with ambient density 1/2 to an asymmetric Gaussian matrix.
///
/// Entry `(i, j)` is the rejection kernel applied to the edge indicator
/// `{i, sigma(j)}` for a uniform column permutation `sigma`; the diagonal
/// pairs `i = sigma(j)` carry no edge and get a fresh `Bern(1/2)` bit. A
/// planted set `S` becomes a mean-`mu` rectangle on `S × sigma^-1(S)`, and
/// since `sigma` is uniform the column support is a uniform `k`-subset
/// independent of `S`.
pub fn bc_recovery_map<R: Rng + ?Sized>(graph: &Graph, rho: f64, rng: &mut R) -> Result<Bicluster> {
    let n = graph.n();
    if n < 2 {
        return Err(Error::param("graph", "need at least two vertices"));
    }
    if !(0.0..0.5).contains(&rho) || (rho > 0.0 && rho < 1.0 / n as f64) {
        return Err(Error::param("rho", format!("need rho = 0 or 1/n <= rho < 1/2, got {rho}")));
    }
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(rng);
    let matrix = if rho == 0.0 {
        DenseMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
    } else {
        let kernel = RejectionKernelSpec::new(0.5 + rho, 0.5, bc_mean(n, rho), bc_kernel_budget(n, rho))?;
        DenseMatrix::from_fn(n, n, |i, j| {
            let c = sigma[j];
            let bit = if i == c { bern(rng, 0.5) } else { graph.has_edge(i, c) };
            kernel.sample(bit, rng)
        })
    };
    let (rows, cols) = match graph.planted() {
        Some(s) => {
            let mut inverse = vec![0; n];
            for (j, &c) in sigma.iter().enumerate() {
                inverse[c] = j;
            }
            let mut cols: Vec<usize> = s.iter().map(|&v| inverse[v]).collect();
            cols.sort_unstable();
            (s.to_vec(), cols)
        }
        None => (Vec::new(), Vec::new()),
    };
    Ok(Bicluster { matrix, rows, cols })
}

/// Turns an `m × n` Gaussian matrix into `n` samples of dimension `m`
/// (returned as the rows of an `n × m` matrix).
///
/// `M` is padded with `(tau-1) n` fresh standard normal columns to
/// `X = [M | Z]` and multiplied by the first `n` columns of a Haar orthogonal
/// matrix `U`. With `X = L Q` (orthonormal rows `Q`), `Q U` is again Haar, so
/// the product equals in law `L P` for the first `n` columns of an
/// independent Haar `m × tau n` frame `P`; that is what is computed. Pure
/// noise maps exactly to pure noise and a mean `mu u vᵀ` becomes a spike of
/// strength about `mu^2/(tau n)` in the sample covariance.
pub fn random_rotation_to_bspca<R: Rng + ?Sized>(
    m_in: &DenseMatrix<f64>,
    tau: usize,
    rng: &mut R,
) -> Result<DenseMatrix<f64>> {
    let (m, n) = (m_in.rows(), m_in.cols());
    if tau < 2 {
        return Err(Error::param("tau", "need tau >= 2"));
    }
    let width = tau
        .checked_mul(n)
        .filter(|w| w.checked_mul(m).is_some_and(|c| c <= ROTATION_BUDGET))
        .ok_or(Error::BudgetExceeded {
            needed: (m as f64) * (tau as f64) * (n as f64),
            budget: ROTATION_BUDGET as f64,
        })?;
    if m > width {
        return Err(Error::param("tau", "tau n must be at least the row count"));
    }
    let mut x = DenseMatrix::from_fn(m, width, |i, j| if j < n { m_in[(i, j)] } else { rng.sample(StandardNormal) });
    let l = orthonormalize_rows(&mut x);
    let mut frame = DenseMatrix::from_fn(m, width, |_, _| rng.sample(StandardNormal));
    orthonormalize_rows(&mut frame);
    let head = DenseMatrix::from_fn(m, n, |i, j| frame[(i, j)]);
    // samples are the columns of L P[:, :n]
    Ok(l.matmul(&head).transpose())
}

/// Adds `(t-1) k` planted vertices to a planted clique instance.
///
/// New pairs are edges with probability `t/(2(t-1))`, new-old pairs with
/// probability 1/2; the vertices are then relabeled uniformly.
pub fn lift_pc_nonhomogeneous<R: Rng + ?Sized>(graph: &Graph, k: usize, t: usize, rng: &mut R) -> Result<Graph> {
    if t < 2 {
        return Err(Error::param("t", "need t >= 2"));
    }
    if let Some(s) = graph.planted() {
        if s.len() != k {
            return Err(Error::param("k", format!("planted set has {} vertices, expected {k}", s.len())));
        }
    }
    let n0 = graph.n();
    let extra = (t - 1) * k;
    let n = n0 + extra;
    let inner = t as f64 / (2.0 * (t - 1) as f64);
    let mut g = Graph::empty(n);
    for (u, v) in graph.edges() {
        g.add_edge(u, v);
    }
    for u in n0..n {
        for v in 0..u {
            let p = if v >= n0 { inner } else { 0.5 };
            if bern(rng, p) {
                g.add_edge(u, v);
            }
        }
    }
    let mut planted: Vec<usize> = graph.planted().map(<[usize]>::to_vec).unwrap_or_default();
    planted.extend(n0..n);
    let g = g.with_planted(planted);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    Ok(g.permuted(&perm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_erdos_renyi, sample_pds, PdsParams};
    use crate::rng::stream;

    #[test]
    fn bc_mean_worked_value() {
        assert!((bc_mean(256, 0.25) - 0.034437).abs() < 5e-7);
        assert_eq!(bc_mean(256, 0.0), 0.0);
        // the mean is admissible for the kernel at the chosen budget
        let b = bc_kernel_budget(256, 0.25);
        assert!(RejectionKernelSpec::new(0.75, 0.5, bc_mean(256, 0.25), b).is_ok());
    }

    #[test]
    fn bc_map_rejects_bad_rho() {
        let g = Graph::empty(10);
        let mut rng = stream(1, 0);
        assert!(bc_recovery_map(&g, 0.5, &mut rng).is_err());
        assert!(bc_recovery_map(&g, 0.05, &mut rng).is_err());
        assert!(bc_recovery_map(&g, 0.0, &mut rng).is_ok());
    }

    #[test]
    fn bc_support_is_mapped_through_the_permutation() {
        let pds = PdsParams::new(64, 8, 0.75, 0.5).unwrap();
        let mut rng = stream(2, 0);
        let g = sample_pds(&pds, &mut rng).unwrap();
        let bc = bc_recovery_map(&g, 0.25, &mut rng).unwrap();
        assert_eq!(bc.rows, g.planted().unwrap());
        assert_eq!(bc.cols.len(), 8);
    }

    #[test]
    fn rotation_shapes_and_budget() {
        let mut rng = stream(3, 0);
        let m = DenseMatrix::from_fn(4, 10, |_, _| rng.sample(StandardNormal));
        let y = random_rotation_to_bspca(&m, 3, &mut rng).unwrap();
        assert_eq!((y.rows(), y.cols()), (10, 4));
        assert!(random_rotation_to_bspca(&m, 1, &mut rng).is_err());
        let wide = DenseMatrix::zeros(1, 1 << 20);
        assert!(matches!(random_rotation_to_bspca(&wide, 1 << 8, &mut rng), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn lift_sizes_and_densities() {
        let mut rng = stream(4, 0);
        let g = sample_erdos_renyi(40, 0.5, &mut rng).unwrap().with_planted((0..5).collect());
        let lifted = lift_pc_nonhomogeneous(&g, 5, 3, &mut rng).unwrap();
        assert_eq!(lifted.n(), 50);
        assert_eq!(lifted.planted().unwrap().len(), 15);
        assert!(lift_pc_nonhomogeneous(&g, 5, 1, &mut rng).is_err());
        // t = 2 makes the new block complete
        let lifted = lift_pc_nonhomogeneous(&g, 5, 2, &mut rng).unwrap();
        let planted = lifted.planted().unwrap().to_vec();
        let new: Vec<usize> = planted.into_iter().filter(|&v| lifted.degree(v) > 0).collect();
        assert!(lifted.edges_within(&new) >= 10);
    }
}
