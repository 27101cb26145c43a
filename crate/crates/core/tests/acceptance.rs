//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relaxed_tikhonov::admm::matrix_model::{matrix_feasibility_check, solve_matrix_model, MatrixVariant};
use relaxed_tikhonov::admm::primal_update;
use relaxed_tikhonov::experiment::{run_experiment, ExperimentConfig, ExperimentName};
use relaxed_tikhonov::manifold::{
    axis_angle_to_quat, axis_angle_to_rotation, frobenius_identity_check, matrix_rep, quat_mul, quat_to_rotation,
    rotation_to_quat,
};
use relaxed_tikhonov::model::{
    adjoint_q, apply_q, brute_force_min, lemma_feasibility_check, objective_k, objective_tikhonov,
};
use relaxed_tikhonov::smallsym::project_shifted_psd;
use relaxed_tikhonov::{
    admm_solve, line_graph, BlockField, EdgeScalars, Graph, Quaternion, SolverConfig, SphereSignal, SymMatrix, Weights,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Graph {
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let e = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&e) {
            pairs.push(e);
        }
    }
    Graph::from_index_pairs(n, pairs).unwrap()
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
    let v: Vec<f64> = (0..n * n).map(|_| rng.random_range(-scale..scale)).collect();
    SymMatrix::from_row_major(n, &v).unwrap()
}

fn to_na(a: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
}

fn from_na(m: &DMatrix<f64>) -> SymMatrix {
    let n = m.nrows();
    let rows: Vec<f64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
    SymMatrix::from_row_major(n, &rows).unwrap()
}

fn circle_line() -> Outcome {
    let (mut dist, mut max_dev, mut iters, mut secs) = (0.0, 0.0f64, 0.0, 0.0);
    let mut worst_iters = 0;
    let seeds = 10;
    for seed in 0..seeds {
        let mut cfg = ExperimentConfig::defaults(ExperimentName::CircleLine);
        cfg.seed = seed;
        let r = run_experiment(&cfg).unwrap().report;
        let k = r.iterations_to_objective_eps.unwrap_or(usize::MAX);
        dist += r.mean_sphere_distance;
        max_dev = max_dev.max(r.max_sphere_deviation);
        iters += k as f64;
        worst_iters = worst_iters.max(k);
        secs += r.wall_time_seconds;
    }
    let n = seeds as f64;
    let (dist, iters, secs) = (dist / n, iters / n, secs / n);
    let pass = dist.abs() <= 1e-9 && max_dev <= 1e-9 && iters <= 300.0 && secs <= 60.0;
    outcome(
        pass,
        format!(
            "circle line, {seeds} seeds: mean(1-|x|) {dist:.2e}, max |1-|x|| {max_dev:.2e}, objective within 1e-5 after {iters:.1} iterations (worst {worst_iters}), {secs:.2} s per run"
        ),
    )
}

fn circle_grid() -> Outcome {
    let cfg = ExperimentConfig::defaults(ExperimentName::CircleGrid);
    let r = run_experiment(&cfg).unwrap().report;
    // Below the numerical resolution of the trace the sign and size of the
    // distance are rounding noise, so the monotonicity test saturates there.
    let floor = 1e-12;
    let tail: Vec<f64> = r.distance_trace[r.distance_trace.len() - 1000..].iter().map(|d| d.abs().max(floor)).collect();
    let jumps = tail.windows(2).filter(|w| w[1] > 1.1 * w[0]).count();
    // The same test over the part of the run that is still above the floor,
    // skipping the transient first 100 iterations.
    let resolved: Vec<f64> = r.distance_trace[100..].iter().map(|d| d.abs()).take_while(|&d| d > floor).collect();
    let early_jumps = resolved.windows(2).filter(|w| w[1] > 1.1 * w[0]).count();
    let pass = r.iterations == 6000 && r.mean_sphere_distance.abs() <= 1e-3 && jumps == 0;
    outcome(
        pass,
        format!(
            "circle image 90x90, {} iterations: mean(1-|x|) {:.2e}, max |1-|x|| {:.2e}, {jumps} increases over 10% in the last 1000 iterations, tail range [{:.1e}, {:.1e}]; above the floor (iterations 101-{}) {early_jumps} increases over 10%",
            r.iterations,
            r.mean_sphere_distance,
            r.max_sphere_deviation,
            tail.iter().copied().fold(f64::INFINITY, f64::min),
            tail.iter().copied().fold(0.0, f64::max),
            100 + resolved.len(),
        ),
    )
}

fn so3_line() -> Outcome {
    let mut cfg = ExperimentConfig::defaults(ExperimentName::So3Line);
    cfg.max_iter = 300;
    let r = run_experiment(&cfg).unwrap().report;
    let consistent = r.lifting_consistent == Some(true);
    let pass = consistent && r.mean_sphere_distance.abs() <= 1e-8 && r.max_sphere_deviation <= 1e-8;
    outcome(
        pass,
        format!(
            "rotation line N=1000, {} iterations: lifting consistent {consistent}, mean distance to unit quaternions {:.2e} (max {:.2e}), rmse {:.3} vs noisy {:.3}",
            r.iterations, r.mean_sphere_distance, r.max_sphere_deviation, r.rmse, r.rmse_noisy
        ),
    )
}

fn equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = SolverConfig { tol: 1e-10, max_iter: 500_000, ..SolverConfig::default() };
    let (mut worst_obj, mut worst_ell, mut worst_x) = (0.0f64, 0.0f64, 0.0f64);
    let mut unconverged = 0;
    for i in 0..50 {
        let d = if i % 2 == 0 { 2 } else { 4 };
        let n = rng.random_range(2..=6);
        let extra = rng.random_range(0..4);
        let g = random_graph(&mut rng, n, extra);
        let y = SphereSignal::from_vectors(&(0..n).map(|_| unit(&mut rng, d)).collect::<Vec<_>>()).unwrap();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let lam: Vec<f64> = (0..g.n_edges()).map(|_| rng.random_range(0.5..3.0)).collect();
        let wt = Weights::new(&g, w, lam).unwrap();
        let simple = admm_solve(&y, &g, &wt, &cfg).unwrap();
        let matrix = solve_matrix_model(&y, &g, &wt, &cfg, MatrixVariant::for_dim(d).unwrap()).unwrap();
        unconverged += usize::from(!simple.converged || !matrix.converged);
        let k = objective_k(&simple.x, &simple.ell, &y, &wt, &g).unwrap();
        worst_obj = worst_obj.max((k - matrix.objective_j).abs());
        let re = matrix.real_parts();
        worst_ell = worst_ell.max(
            simple.ell.as_slice().iter().zip(re.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        );
        worst_x = worst_x.max(
            simple.x.as_slice().iter().zip(matrix.x.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        );
    }
    let pass = unconverged == 0 && worst_obj <= 1e-6 && worst_ell <= 1e-5;
    outcome(
        pass,
        format!(
            "50 instances (d = 2, 4): max |K - J| {worst_obj:.2e}, max |l - Re r| {worst_ell:.2e}, max |x - x'| {worst_x:.2e}, {unconverged} runs short of residual 1e-10"
        ),
    )
}

fn projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_oracle, mut violations) = (0.0f64, 0);
    for _ in 0..1000 {
        let a = random_sym(&mut rng, 6, 3.0);
        let p = project_shifted_psd(&a).unwrap();
        let e = to_na(&a).symmetric_eigen();
        let clipped = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(-1.0))) * e.eigenvectors.transpose();
        worst_oracle = worst_oracle.max((to_na(&p) - &clipped).abs().max());
        let best = a.sub(&p).frobenius_norm();
        for j in 0..100 {
            let b = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
            let psd = &b * b.transpose();
            // Half the competitors sit near the projection, half anywhere in the set.
            let c = if j % 2 == 0 {
                to_na(&p) + psd * rng.random_range(0.0..0.1)
            } else {
                psd * rng.random_range(0.0..2.0) - DMatrix::identity(6, 6)
            };
            if a.sub(&from_na(&c)).frobenius_norm() < best - 1e-12 {
                violations += 1;
            }
        }
    }
    outcome(
        worst_oracle <= 1e-10 && violations == 0,
        format!("1000 matrices: max deviation from eigen-clip oracle {worst_oracle:.2e}, {violations} closer competitors out of 100000"),
    )
}

fn adjoint_and_primal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_adj = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(2..12);
        let extra = rng.random_range(0..8);
        let g = random_graph(&mut rng, n, extra);
        let x = SphereSignal::new(d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let ell = EdgeScalars::new((0..g.n_edges()).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let u = BlockField::from_blocks(&(0..g.n_edges()).map(|_| random_sym(&mut rng, d + 2, 2.0)).collect::<Vec<_>>())
            .unwrap();
        let lhs = apply_q(&x, &ell, &g).unwrap().dot(&u);
        let (xs, ls) = adjoint_q(&u, &g).unwrap();
        let rhs = dot(x.as_slice(), xs.as_slice()) + dot(ell.as_slice(), ls.as_slice());
        worst_adj = worst_adj.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }

    let mut worst_grad = 0.0f64;
    for _ in 0..200 {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(2..8);
        let extra = rng.random_range(0..5);
        let g = random_graph(&mut rng, n, extra);
        let m = g.n_edges();
        let y = SphereSignal::from_vectors(&(0..n).map(|_| unit(&mut rng, d)).collect::<Vec<_>>()).unwrap();
        let wt = Weights::new(
            &g,
            (0..n).map(|_| rng.random_range(0.5..2.0)).collect(),
            (0..m).map(|_| rng.random_range(0.5..3.0)).collect(),
        )
        .unwrap();
        let rho = rng.random_range(0.5..5.0);
        let blocks = |rng: &mut ChaCha8Rng| {
            BlockField::from_blocks(&(0..m).map(|_| random_sym(rng, d + 2, 1.0)).collect::<Vec<_>>()).unwrap()
        };
        let (u, z) = (blocks(&mut rng), blocks(&mut rng));
        let (x, ell) = primal_update(&u, &z, &y, &wt, &g, rho).unwrap();
        let lagrangian = |x: &SphereSignal, ell: &EdgeScalars| {
            let q = apply_q(x, ell, &g).unwrap();
            let r: f64 = q.as_slice().iter().zip(u.as_slice()).zip(z.as_slice()).map(|((a, b), c)| (a - b + c).powi(2)).sum();
            objective_k(x, ell, &y, &wt, &g).unwrap() + 0.5 * rho * r
        };
        let h = 1e-5;
        for i in 0..n * d {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp.as_mut_slice()[i] += h;
            xm.as_mut_slice()[i] -= h;
            worst_grad = worst_grad.max(((lagrangian(&xp, &ell) - lagrangian(&xm, &ell)) / (2.0 * h)).abs());
        }
        for e in 0..m {
            let (mut lp, mut lm) = (ell.clone(), ell.clone());
            lp.as_mut_slice()[e] += h;
            lm.as_mut_slice()[e] -= h;
            worst_grad = worst_grad.max(((lagrangian(&x, &lp) - lagrangian(&x, &lm)) / (2.0 * h)).abs());
        }
    }
    outcome(
        worst_adj <= 1e-12 && worst_grad < 1e-6,
        format!("adjoint identity on 1000 instances: max error {worst_adj:.2e}; augmented-Lagrangian gradient at the primal update on 200 instances: max {worst_grad:.2e}"),
    )
}

fn lemma_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tol = 1e-8;
    let (mut accepted, mut rejected) = (0, 0);
    let offset = |rng: &mut ChaCha8Rng| rng.random_range(0.05..0.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    for i in 0..1000 {
        // Cycle through the simplified blocks for d = 2, 3, 4 and the matrix
        // blocks for complex (d = 2) and quaternion (d = 4) entries.
        let kind = i % 5;
        let d = [2, 3, 4, 2, 4][kind];
        let xn = unit(&mut rng, d);
        let xm = if i % 50 == 0 { xn.clone() } else { unit(&mut rng, d) };
        let matrix = kind >= 3;
        let r: Vec<f64> = {
            let mm = matrix_rep(&xm, d).unwrap_or_default();
            (0..d).map(|a| (0..d).map(|b| mm.get(b * d + a).copied().unwrap_or(0.0) * xn[b]).sum()).collect()
        };
        let check = |xn: &[f64], xm: &[f64], ell: f64, r: &[f64]| {
            if matrix {
                matrix_feasibility_check(xn, xm, r, tol)
            } else {
                lemma_feasibility_check(xn, xm, ell, tol)
            }
        };
        let ell = dot(&xn, &xm);
        accepted += usize::from(check(&xn, &xm, ell, &r));

        // Break exactly one hypothesis.
        let (mut bn, mut bm, mut bl, mut br) = (xn.clone(), xm.clone(), ell, r.clone());
        match rng.random_range(0..3) {
            0 => {
                let s = 1.0 + offset(&mut rng);
                bn.iter_mut().for_each(|v| *v *= s);
            }
            1 => {
                let s = 1.0 + offset(&mut rng);
                bm.iter_mut().for_each(|v| *v *= s);
            }
            _ if matrix => {
                let dir = unit(&mut rng, d);
                let s = offset(&mut rng);
                br.iter_mut().zip(&dir).for_each(|(v, u)| *v += s * u);
            }
            _ => bl += offset(&mut rng),
        }
        rejected += usize::from(!check(&bn, &bm, bl, &br));
    }
    outcome(
        accepted == 1000 && rejected == 1000,
        format!("{accepted}/1000 valid constructions accepted, {rejected}/1000 single-hypothesis violations rejected"),
    )
}

fn brute_force_tightness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = SolverConfig { tol: 1e-10, max_iter: 200_000, retract: true, ..SolverConfig::default() };
    let step: f64 = 0.5;
    let h = step.to_radians();
    let (mut tight, mut within, mut non_tight) = (0, 0, 0);
    let mut worst_gap = 0.0f64;
    for i in 0..20 {
        let g = if i % 2 == 0 {
            line_graph(3).unwrap()
        } else {
            Graph::new(3, &[(1, 2), (2, 3), (1, 3)]).unwrap()
        };
        let y = SphereSignal::from_vectors(&(0..3).map(|_| unit(&mut rng, 2)).collect::<Vec<_>>()).unwrap();
        let wt = Weights::uniform(&g, 1.0, 1.0).unwrap();
        let res = admm_solve(&y, &g, &wt, &cfg).unwrap();
        if res.mean_sphere_distance.abs() > 1e-3 {
            non_tight += 1;
            continue;
        }
        tight += 1;
        let f_admm = objective_tikhonov(&res.x, &y, &wt, &g).unwrap();
        let (_, f_brute) = brute_force_min(&y, &wt, &g, step).unwrap();
        // Moving each angle by at most h/2 changes F by at most this much.
        let adj = g.adjacency();
        let bound: f64 = (0..3)
            .map(|n| {
                let yn = y.vertex(n);
                let lam: f64 = adj[n].iter().map(|&(_, e)| wt.edge()[e]).sum();
                0.5 * h * (wt.vertex()[n] * dot(yn, yn).sqrt() + lam)
            })
            .sum();
        let gap = f_admm - f_brute;
        worst_gap = worst_gap.max(gap.abs() / bound);
        within += usize::from(gap <= 1e-9 && -gap <= bound + 1e-9);
    }
    outcome(
        within == tight,
        format!("{tight} tight instances, {within} within the 0.5 degree grid bound (worst |gap|/bound {worst_gap:.3}), {non_tight} reported non-tight"),
    )
}

fn rodrigues(v: [f64; 3], a: f64) -> [[f64; 3]; 3] {
    let (s, c) = a.sin_cos();
    let t = 1.0 - c;
    let [x, y, z] = v;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

fn quaternion_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_rot, mut worst_trip, mut worst_frob) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let v = unit(&mut rng, 3);
        let v = [v[0], v[1], v[2]];
        let alpha = rng.random_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI);
        let q = axis_angle_to_quat(v, alpha).unwrap();
        let r = quat_to_rotation(q).unwrap();
        let oracle = rodrigues(v, alpha);
        let direct = axis_angle_to_rotation(v, alpha).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                worst_rot = worst_rot.max((r.0[i][j] - oracle[i][j]).abs()).max((direct.0[i][j] - oracle[i][j]).abs());
            }
        }
        let back = quat_to_rotation(rotation_to_quat(&r).unwrap()).unwrap();
        worst_trip = worst_trip.max(back.max_abs_diff(&r));

        let p = Quaternion::from_slice(&unit(&mut rng, 4)).unwrap();
        let (lhs, rhs) = frobenius_identity_check(q, p).unwrap();
        worst_frob = worst_frob.max((lhs - rhs).abs());
    }
    let (one, i, j, k) = (Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K);
    let table = [
        (quat_mul(i, i), -one),
        (quat_mul(j, j), -one),
        (quat_mul(k, k), -one),
        (quat_mul(quat_mul(i, j), k), -one),
        (quat_mul(i, j), k),
        (quat_mul(j, k), i),
        (quat_mul(k, i), j),
        (quat_mul(j, i), -k),
        (quat_mul(k, j), -i),
        (quat_mul(i, k), -j),
        (quat_mul(one, i), i),
    ];
    let hamilton = table.iter().all(|(a, b)| a == b);
    outcome(
        worst_rot <= 1e-12 && worst_trip < 1e-9 && worst_frob <= 1e-10 && hamilton,
        format!(
            "10000 samples: rotation formula error {worst_rot:.2e}, round trip {worst_trip:.2e}, Frobenius identity {worst_frob:.2e}, Hamilton table exact {hamilton}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("circle line graph", circle_line),
        ("circle image graph", circle_grid),
        ("rotation line graph", so3_line),
        ("simplified and matrix models agree", equivalence),
        ("shifted PSD projection", projection),
        ("adjoint and primal update", adjoint_and_primal),
        ("feasibility lemmas", lemma_suite),
        ("brute-force tightness", brute_force_tightness),
        ("quaternions and rotations", quaternion_suite),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "criterion {} [{}] {name}: {} ({:.1} s)",
            n + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
