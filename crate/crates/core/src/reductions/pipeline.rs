use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{ReductionParams, TargetModel};
use super::partite::to_k_partite_submatrix;
use super::rotation::{bernoulli_rotate_block, RotationOptions};
use crate::design::{design_with_retries, isbm_design_with_retries, KroneckerDesign};
use crate::error::{Result, Stage};
use crate::graph::Graph;
use crate::kernels::{densify_to_target, threshold_gaussian_matrix, RejectionKernelSpec};
use crate::linalg::DenseMatrix;
use crate::model::KpcParams;
use crate::rng::{fork, stream};
use crate::scalar::{lit, to_f64, Real};

/// How many digraphs to try before giving up on a design.
pub const DESIGN_ATTEMPTS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub seed: u64,
    /// Declared total-variation cost of this stage.
    pub tv_budget: f64,
    pub millis: f64,
}

/// What a pipeline run did, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub version: u32,
    pub params: ReductionParams,
    pub planted_input: bool,
    pub stages: Vec<StageRecord>,
    pub total_tv_budget: f64,
    pub design_attempts: usize,
    pub design_sigma: f64,
    /// Offset of the clique vertex inside each part, when planted.
    pub planted_cells: Option<Vec<usize>>,
    /// Output support before the final relabeling.
    pub support_before_permutation: Option<Vec<usize>>,
    pub permutation: Vec<usize>,
}

impl ReductionTrace {
    /// Stage order of the pipeline.
    pub const ORDER: [Stage; 6] = [
        Stage::Design,
        Stage::ToPartite,
        Stage::Rotation,
        Stage::Threshold,
        Stage::Densify,
        Stage::Permute,
    ];

    pub fn stages_in_order(&self) -> bool {
        let pos = |s: Stage| Self::ORDER.iter().position(|&o| o == s);
        self.stages.windows(2).all(|w| pos(w[0].stage) < pos(w[1].stage))
    }

    /// The composed budget equals the sum of the stage budgets.
    pub fn budget_adds_up(&self) -> bool {
        let sum: f64 = self.stages.iter().map(|s| s.tv_budget).sum();
        (sum - self.total_tv_budget).abs() <= 1e-12 * sum.abs().max(1.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// A pipeline with its design and kernel built, ready to map many graphs.
#[derive(Clone, Debug)]
pub struct PreparedReduction<T = f64> {
    pub params: ReductionParams,
    pub design: KroneckerDesign<T>,
    pub kernel: RejectionKernelSpec<T>,
    pub design_seed: u64,
    design_millis: f64,
}

impl<T: Real + Send + Sync> PreparedReduction<T> {
    pub fn prepare<R: Rng + ?Sized>(params: ReductionParams, rng: &mut R) -> Result<Self> {
        let start = Instant::now();
        let design_seed = fork(rng);
        let mut drng = stream(design_seed, 0);
        let design = match params.target {
            TargetModel::PdsStar => {
                design_with_retries(params.m, params.r, lit::<T>(params.design_scale), DESIGN_ATTEMPTS, &mut drng)
            }
            TargetModel::Isbm => {
                isbm_design_with_retries(params.m, params.r, lit::<T>(params.c_hat), DESIGN_ATTEMPTS, &mut drng)
            }
        }
        .map_err(|e| e.at(Stage::Design))?;
        let kernel = RejectionKernelSpec::new(lit(params.p), lit(params.big_q), lit(params.mu_rk), params.r_rk)
            .map_err(|e| e.at(Stage::Derive))?;
        Ok(PreparedReduction {
            params,
            design,
            kernel,
            design_seed,
            design_millis: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Planted support of the output for given clique cells, before relabeling.
    pub fn support_for(&self, cells: &[usize]) -> Vec<usize> {
        let m = self.params.m;
        let sets = self.design.sets();
        let mut support: Vec<usize> = cells
            .iter()
            .enumerate()
            .flat_map(|(i, &t)| sets[t].iter().map(move |&a| i * m + a))
            .collect();
        support.sort_unstable();
        support
    }

    /// Runs the pipeline on one source graph.
    pub fn run<R: Rng + ?Sized>(
        &self,
        graph: &Graph,
        partition: &KpcParams,
        options: RotationOptions,
        rng: &mut R,
    ) -> Result<(Graph, ReductionTrace)> {
        let params = &self.params;
        let (n, m, k0) = (params.n, params.m, params.k0);
        let planted = graph.planted().is_some();
        let mut stages = vec![StageRecord {
            stage: Stage::Design,
            seed: self.design_seed,
            tv_budget: 0.0,
            millis: self.design_millis,
        }];
        let timed = |stage: Stage, seed: u64, budget: f64, start: Instant| StageRecord {
            stage,
            seed,
            tv_budget: budget,
            millis: start.elapsed().as_secs_f64() * 1e3,
        };
        let seeds: [u64; 4] = std::array::from_fn(|_| fork(rng));

        let t0 = Instant::now();
        let partite = to_k_partite_submatrix(graph, partition, params.p, params.q, n, &mut stream(seeds[0], 0))
            .map_err(|e| e.at(Stage::ToPartite))?;
        stages.push(timed(Stage::ToPartite, seeds[0], params.partite_budget(planted), t0));

        let t0 = Instant::now();
        let blocks: Vec<(usize, usize)> = (0..k0).flat_map(|i| (i..k0).map(move |j| (i, j))).collect();
        let outputs: Vec<Vec<T>> = blocks
            .par_iter()
            .map(|&(i, j)| {
                let bits = partite.f.block(partite.parts[i].clone(), partite.parts[j].clone());
                let mut brng = stream(seeds[1], (i * k0 + j) as u64);
                bernoulli_rotate_block(&bits, &self.design, &self.kernel, options, &mut brng)
            })
            .collect::<Result<_>>()
            .map_err(|e| e.at(Stage::Rotation))?;
        let mut mat = DenseMatrix::<T>::zeros(n, n);
        for (&(i, j), y) in blocks.iter().zip(&outputs) {
            for a in 0..m {
                let row = &mut mat.row_mut(i * m + a)[j * m..(j + 1) * m];
                row.copy_from_slice(&y[a * m..(a + 1) * m]);
            }
        }
        stages.push(timed(Stage::Rotation, seeds[1], params.rotation_budget(), t0));

        let t0 = Instant::now();
        let mut out = threshold_gaussian_matrix(&mat);
        let support = partite.planted_cells.as_ref().map(|c| self.support_for(c));
        if let Some(s) = &support {
            out = out.with_planted(s.clone());
        }
        stages.push(timed(Stage::Threshold, 0, 0.0, t0));

        if let Some(p0) = params.target_p0 {
            let t0 = Instant::now();
            out = densify_to_target(&out, p0, &mut stream(seeds[2], 0)).map_err(|e| e.at(Stage::Densify))?;
            stages.push(timed(Stage::Densify, seeds[2], 0.0, t0));
        }

        let t0 = Instant::now();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut stream(seeds[3], 0));
        let out = out.permuted(&perm);
        stages.push(timed(Stage::Permute, seeds[3], 0.0, t0));

        let total = stages.iter().map(|s| s.tv_budget).sum();
        let trace = ReductionTrace {
            version: 1,
            params: params.clone(),
            planted_input: planted,
            stages,
            total_tv_budget: total,
            design_attempts: self.design.attempts,
            design_sigma: to_f64(self.design.sigma_exact),
            planted_cells: partite.planted_cells,
            support_before_permutation: support,
            permutation: perm,
        };
        Ok((out, trace))
    }
}

fn reduce<R: Rng + ?Sized>(
    graph: &Graph,
    partition: &KpcParams,
    params: &ReductionParams,
    target: TargetModel,
    rng: &mut R,
) -> Result<(Graph, ReductionTrace)> {
    let mut params = params.clone();
    params.target = target;
    let prepared = PreparedReduction::<f64>::prepare(params, rng)?;
    prepared.run(graph, partition, RotationOptions::default(), rng)
}

/// k-PC to PDS*: partite embedding, blockwise rotations with the recentered
/// design, thresholding at zero, optional densification, relabeling.
pub fn reduce_kpc_to_pds_star<R: Rng + ?Sized>(
    graph: &Graph,
    partition: &KpcParams,
    params: &ReductionParams,
    rng: &mut R,
) -> Result<(Graph, ReductionTrace)> {
    reduce(graph, partition, params, TargetModel::PdsStar, rng)
}

/// k-PC to ISBM, the same pipeline with the design `(R ⊗ R)/C^2`.
pub fn reduce_kpc_to_isbm<R: Rng + ?Sized>(
    graph: &Graph,
    partition: &KpcParams,
    params: &ReductionParams,
    rng: &mut R,
) -> Result<(Graph, ReductionTrace)> {
    reduce(graph, partition, params, TargetModel::Isbm, rng)
}
