use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaxed_tikhonov::admm::matrix_model::{adjoint_p, apply_p};
use relaxed_tikhonov::graph::is_connected;
use relaxed_tikhonov::manifold::{lift_signs, re_mul_conj};
use relaxed_tikhonov::model::{adjoint_q, apply_q};
use relaxed_tikhonov::smallsym::{is_psd, project_shifted_psd, schur_complement};
use relaxed_tikhonov::synth::{sample_vmf, VmfParams};
use relaxed_tikhonov::{BlockField, EdgeScalars, Graph, Quaternion, SphereSignal, SymMatrix};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn bfs_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in pairs {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Random spanning tree plus `extra` random chords.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Graph {
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let e = (a.min(b), a.max(b));
        if a != b && !pairs.iter().any(|&(p, q)| (p.min(q), p.max(q)) == e) {
            pairs.push(e);
        }
    }
    Graph::from_index_pairs(n, pairs).unwrap()
}

fn nalgebra_of(a: &SymMatrix) -> DMatrix<f64> {
    let n = a.dim();
    DMatrix::from_fn(n, n, |i, j| a.get(i, j))
}

fn eigen_clip_oracle(a: &SymMatrix) -> DMatrix<f64> {
    let e = nalgebra_of(a).symmetric_eigen();
    let clipped = DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(-1.0)));
    &e.eigenvectors * clipped * e.eigenvectors.transpose()
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
    let v: Vec<f64> = (0..n * n).map(|_| rng.random_range(-scale..scale)).collect();
    SymMatrix::from_row_major(n, &v).unwrap()
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn connectivity_agrees_with_bfs(n in 1usize..=100, raw in proptest::collection::vec((0usize..100, 0usize..100), 0..150)) {
        let pairs: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        prop_assert_eq!(is_connected(n, &pairs), bfs_connected(n, &pairs));
    }

    #[test]
    fn projection_matches_eigen_clip(seed in any::<u64>(), dim in 1usize..=8, scale in 0.01f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sym(&mut rng, dim, scale);
        let p = project_shifted_psd(&a).unwrap();
        let oracle = eigen_clip_oracle(&a);
        let err = (nalgebra_of(&p) - &oracle).abs().max();
        prop_assert!(err < 1e-10 * scale.max(1.0), "error {}", err);
        prop_assert!(min_eig(&nalgebra_of(&p)) >= -1.0 - 1e-10);
        let again = project_shifted_psd(&p).unwrap();
        prop_assert!(again.max_abs_diff(&p) < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn adjoint_identity_on_random_graphs(seed in any::<u64>(), n in 2usize..12, extra in 0usize..10, d in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, extra);
        let x = SphereSignal::new(d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let ell = EdgeScalars::new((0..g.n_edges()).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let k = d + 2;
        let u = BlockField::from_blocks(&(0..g.n_edges()).map(|_| random_sym(&mut rng, k, 2.0)).collect::<Vec<_>>()).unwrap();
        let lhs = apply_q(&x, &ell, &g).unwrap().dot(&u);
        let (xs, ls) = adjoint_q(&u, &g).unwrap();
        let rhs: f64 = x.as_slice().iter().zip(xs.as_slice()).map(|(a, b)| a * b).sum::<f64>()
            + ell.as_slice().iter().zip(ls.as_slice()).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0) * (g.n_edges() as f64));
    }

    #[test]
    fn matrix_adjoint_identity(seed in any::<u64>(), n in 2usize..8, extra in 0usize..6, quat in any::<bool>()) {
        let d = if quat { 4 } else { 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, extra);
        let m = g.n_edges();
        let x = SphereSignal::new(d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let r = SphereSignal::new(d, (0..m * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let u = BlockField::from_blocks(&(0..m).map(|_| random_sym(&mut rng, 3 * d, 2.0)).collect::<Vec<_>>()).unwrap();
        let lhs = apply_p(&x, &r, &g).unwrap().dot(&u);
        let (xs, rs) = adjoint_p(&u, &g).unwrap();
        let rhs: f64 = x.as_slice().iter().zip(xs.as_slice()).map(|(a, b)| a * b).sum::<f64>()
            + r.as_slice().iter().zip(rs.as_slice()).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0) * (m as f64));
    }

    #[test]
    fn lifting_is_consistent_on_trees(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 0);
        let q: Vec<Quaternion> = (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                Quaternion::new(v[0] / s, v[1] / s, v[2] / s, v[3] / s)
            })
            .collect();
        let l = lift_signs(&q, &g).unwrap();
        prop_assert!(l.consistent);
        for (a, b) in l.lifted.iter().zip(&q) {
            prop_assert!(*a == *b || *a == -*b);
        }
        for &(a, b) in g.index_pairs() {
            prop_assert!(re_mul_conj(l.lifted[a], l.lifted[b]) >= 0.0);
        }
    }
}

#[test]
fn schur_complement_decides_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    let mut psd_seen = 0;
    while checked < 1000 {
        let b: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bm = DMatrix::from_row_slice(6, 6, &b);
        let shift = rng.random_range(0.0..0.6);
        let w = &bm * bm.transpose() - DMatrix::identity(6, 6) * shift;
        let k = rng.random_range(1..6);
        let lead = w.view((0, 0), (k, k)).into_owned();
        if min_eig(&lead) < 1e-3 {
            continue;
        }
        let ws = SymMatrix::from_row_major(6, w.as_slice()).unwrap();
        let s = schur_complement(&ws, k).unwrap();
        // Independent complement via nalgebra's inverse.
        let c = w.view((0, k), (k, 6 - k)).into_owned();
        let bb = w.view((k, k), (6 - k, 6 - k)).into_owned();
        let oracle = bb - c.transpose() * lead.try_inverse().unwrap() * c;
        assert!((nalgebra_of(&s) - &oracle).abs().max() < 1e-9);
        let (mw, ms) = (min_eig(&w), min_eig(&oracle));
        if mw.abs() < 1e-8 || ms.abs() < 1e-8 {
            continue;
        }
        assert_eq!(is_psd(&ws, 0.0), is_psd(&s, 0.0));
        assert_eq!(mw > 0.0, ms > 0.0);
        psd_seen += usize::from(mw > 0.0);
        checked += 1;
    }
    assert!(psd_seen > 50 && psd_seen < 950, "{psd_seen} PSD samples");
}

/// Density of the angle to the mean direction on `S^{d-1}`, unnormalized.
fn angle_density(theta: f64, kappa: f64, d: usize) -> f64 {
    (kappa * theta.cos()).exp() * theta.sin().abs().powi(d as i32 - 2)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn chi_square_check(d: usize, kappa: f64, seed: u64) {
    const BINS: usize = 36;
    const SAMPLES: usize = 100_000;
    let mut mu = vec![0.0; d];
    mu[d - 1] = 1.0;
    let draws = sample_vmf(&VmfParams::new(mu, kappa).unwrap(), seed, SAMPLES);
    // d = 2 bins the signed angle on (-π, π]; higher d the polar angle on [0, π].
    let (lo, hi) = if d == 2 { (-PI, PI) } else { (0.0, PI) };
    let width = (hi - lo) / BINS as f64;
    let mut counts = [0usize; BINS];
    for s in &draws {
        let theta = if d == 2 { s[0].atan2(s[1]) } else { s[d - 1].clamp(-1.0, 1.0).acos() };
        counts[(((theta - lo) / width) as usize).min(BINS - 1)] += 1;
    }
    let mass: Vec<f64> = (0..BINS)
        .map(|b| simpson(|t| angle_density(t, kappa, d), lo + b as f64 * width, lo + (b + 1) as f64 * width, 200))
        .collect();
    let total: f64 = mass.iter().sum();
    // Merge sparse tail bins so every expected count is at least 5.
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for (m, &c) in mass.iter().zip(&counts) {
        e_acc += m / total * SAMPLES as f64;
        o_acc += c as f64;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += o_acc;
        last.1 += e_acc;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let crit = ChiSquared::new((cells.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < crit, "d = {d}, κ = {kappa}: χ² = {stat} exceeds {crit} with {} cells", cells.len());
}

#[test]
fn vmf_angles_follow_the_density() {
    for (d, kappa, seed) in [(2, 1.0, 1), (2, 10.0, 2), (3, 2.0, 3), (3, 20.0, 4), (4, 5.0, 5), (4, 0.5, 6)] {
        chi_square_check(d, kappa, seed);
    }
}

#[test]
fn zero_concentration_is_uniform() {
    for d in 2..=4 {
        let mut mu = vec![0.0; d];
        mu[0] = 1.0;
        let count = 50_000;
        let draws = sample_vmf(&VmfParams::new(mu, 0.0).unwrap(), 40 + d as u64, count);
        let mean: Vec<f64> = (0..d).map(|c| draws.iter().map(|s| s[c]).sum::<f64>() / count as f64).collect();
        let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 4.0 / (count as f64).sqrt(), "d = {d}: mean norm {norm}");
    }
}

#[test]
fn projection_is_nearest_feasible_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let a = random_sym(&mut rng, 6, 3.0);
        let p = project_shifted_psd(&a).unwrap();
        let dist = a.sub(&p).frobenius_norm();
        for _ in 0..50 {
            let b: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..1.0)).collect();
            let bm = DMatrix::from_row_slice(6, 6, &b);
            let psd = &bm * bm.transpose() * rng.random_range(0.0..0.2);
            let c = nalgebra_of(&p) + psd;
            let cs = SymMatrix::from_row_major(6, c.as_slice()).unwrap();
            assert!(a.sub(&cs).frobenius_norm() >= dist - 1e-12);
        }
    }
}
