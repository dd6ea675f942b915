use pdsgap::harness::ks_two_sample;
use pdsgap::linalg::{dot, symmetric_eigen};
use pdsgap::model::{sample_erdos_renyi, sample_pds, PdsParams};
use pdsgap::reductions::{bc_mean, bc_recovery_map, lift_pc_nonhomogeneous, random_rotation_to_bspca};
use pdsgap::rng::stream;
use pdsgap::RealMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn bc_rectangle_carries_the_mean() {
    let (n, k, rho) = (256, 100, 0.25);
    let mu = bc_mean(n, rho);
    assert!((mu - 0.034437).abs() < 1e-6);
    let params = PdsParams::new(n, k, 0.5 + rho, 0.5).unwrap();
    let mut rng = stream(1, 0);
    let (mut inside, mut outside) = ((0.0, 0usize), (0.0, 0usize));
    for _ in 0..10 {
        let g = sample_pds(&params, &mut rng).unwrap();
        let bc = bc_recovery_map(&g, rho, &mut rng).unwrap();
        assert_eq!((bc.rows.len(), bc.cols.len()), (k, k));
        let mut in_rect = vec![false; n * n];
        for &i in &bc.rows {
            for &j in &bc.cols {
                in_rect[i * n + j] = true;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let acc = if in_rect[i * n + j] { &mut inside } else { &mut outside };
                acc.0 += bc.matrix[(i, j)];
                acc.1 += 1;
            }
        }
    }
    let m_in = inside.0 / inside.1 as f64;
    let m_out = outside.0 / outside.1 as f64;
    assert!((m_in - mu).abs() < 4.0 / (inside.1 as f64).sqrt(), "rectangle mean {m_in} vs {mu}");
    assert!(m_out.abs() < 4.0 / (outside.1 as f64).sqrt(), "background mean {m_out}");
}

#[test]
fn bc_without_signal_is_pure_noise() {
    let mut rng = stream(2, 0);
    let g = sample_erdos_renyi(120, 0.5, &mut rng).unwrap();
    let bc = bc_recovery_map(&g, 0.0, &mut rng).unwrap();
    assert!(bc.rows.is_empty() && bc.cols.is_empty());
    let reference: Vec<f64> = (0..120 * 120).map(|_| rng.sample(StandardNormal)).collect();
    assert!(ks_two_sample(bc.matrix.as_slice(), &reference).p_value > 0.01);
}

fn sample_covariance(x: &RealMatrix) -> RealMatrix {
    x.t_matmul(x).scaled(1.0 / x.rows() as f64)
}

#[test]
fn rotation_keeps_pure_noise_pure() {
    let (m, n, tau) = (20, 5000, 2);
    let mut rng = stream(3, 0);
    let noise = RealMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    let out = random_rotation_to_bspca(&noise, tau, &mut rng).unwrap();
    assert_eq!((out.rows(), out.cols()), (n, m));
    let dev = sample_covariance(&out).sub(&RealMatrix::identity(m));
    let (values, _) = symmetric_eigen(&dev);
    let op = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(op <= 0.15, "operator distance {op}");
    let reference: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    assert!(ks_two_sample(out.as_slice(), &reference).p_value > 0.01);
}

#[test]
fn rotation_turns_a_rectangle_into_a_spike() {
    let (m, n, tau, theta) = (20, 5000, 2, 0.5);
    let mut rng = stream(4, 0);
    let u: Vec<f64> = (0..m).map(|i| if i < 5 { 1.0 / 5f64.sqrt() } else { 0.0 }).collect();
    let v: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 } / (n as f64).sqrt()).collect();
    // the spike strength is mu^2 / (tau n)
    let mu = (theta * (tau * n) as f64).sqrt();
    let input = RealMatrix::from_fn(m, n, |i, j| mu * u[i] * v[j] + rng.sample::<f64, _>(StandardNormal));
    let out = random_rotation_to_bspca(&input, tau, &mut rng).unwrap();
    let (values, vectors) = symmetric_eigen(&sample_covariance(&out));
    let top = vectors.column(0);
    let cos = dot(&top, &u).abs();
    assert!(cos >= 0.8, "|cos| = {cos}");
    assert!((values[0] - 1.0 - theta).abs() < 0.15, "top eigenvalue {}", values[0]);
}

#[test]
fn lift_new_block_densities() {
    let mut rng = stream(5, 0);
    for (t, expected) in [(2, 1.0), (3, 0.75)] {
        let (n0, k, runs) = (60, 15, 40);
        let mut density = 0.0;
        for _ in 0..runs {
            // an unplanted input leaves only the new vertices in the support
            let g = sample_erdos_renyi(n0, 0.5, &mut rng).unwrap();
            let h = lift_pc_nonhomogeneous(&g, k, t, &mut rng).unwrap();
            assert_eq!(h.n(), n0 + (t - 1) * k);
            density += h.density_within(h.planted().unwrap()) / runs as f64;
        }
        assert!((density - expected).abs() < 0.02, "t = {t}: {density}");
    }
}

#[test]
fn lift_raises_planted_degrees_by_half_k() {
    let (n0, k, t, runs) = (200, 20, 3, 300);
    let n = n0 + (t - 1) * k;
    let params = PdsParams::new(n0, k, 1.0, 0.5).unwrap();
    let mut rng = stream(6, 0);
    let (mut planted, mut null) = (0.0, 0.0);
    for _ in 0..runs {
        let g = sample_pds(&params, &mut rng).unwrap();
        let h = lift_pc_nonhomogeneous(&g, k, t, &mut rng).unwrap();
        let s = h.planted().unwrap().to_vec();
        assert_eq!(s.len(), t * k);
        let deg = h.degrees();
        let sum_in: usize = s.iter().map(|&v| deg[v]).sum();
        planted += sum_in as f64 / s.len() as f64 / runs as f64;
        null += (deg.iter().sum::<usize>() - sum_in) as f64 / (n - s.len()) as f64 / runs as f64;
    }
    // exact excess: original planted vertices (k-1)/2, new ones k/2 - 1/(2(t-1))
    let tf = t as f64;
    let kf = k as f64;
    let excess = ((kf - 1.0) / 2.0 + (tf - 1.0) * (kf / 2.0 - 1.0 / (2.0 * (tf - 1.0)))) / tf;
    assert!((excess - kf / 2.0).abs() < 1.0);
    assert!((planted - null - excess).abs() < 0.5, "excess {} vs {excess}", planted - null);
}
