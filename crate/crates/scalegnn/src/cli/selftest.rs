//! Built-in verification suites: gradient checks, homogeneity, halting
//! algebra, and oracle cross-checks against independent brute force.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CmdError, SelftestArgs, EXIT_INVARIANT, EXIT_OK};
use crate::graph::{batch, generate, Edge, GeneratorKind, Graph};
use crate::iter::{constant_confidence_residual, IterConfig, IterMode, Segmentation};
use crate::nn::{
    bind_mlp, gn_forward, homogenize_gn, init_gn, init_mlp, mlp_forward, Activation, GNBlockSpec,
    GnContext, GnDims, GnKind, MLPSpec, ParamSet,
};
use crate::tensor::{finite_diff_check, Executor, Immediate, Tape, Tensor};

struct Suite {
    name: &'static str,
    trials: usize,
    failure: Option<String>,
}

impl Suite {
    fn ok(name: &'static str, trials: usize) -> Self {
        Suite {
            name,
            trials,
            failure: None,
        }
    }

    fn fail(name: &'static str, trials: usize, message: String) -> Self {
        Suite {
            name,
            trials,
            failure: Some(message),
        }
    }
}

pub fn run(args: &SelftestArgs) -> Result<i32, CmdError> {
    let fault = args.inject_fault.as_deref();
    let suites = vec![
        gradient_suite(),
        homogeneity_suite(fault),
        l1_fixture_suite(),
        iterative_algebra_suite(),
        decay_reach_suite(),
        bellman_ford_realizability_suite(),
        oracle_cross_check_suite(),
        physics_suite(),
    ];
    let mut failed = false;
    for s in &suites {
        match &s.failure {
            None => println!("suite {:<28} PASS ({} trials)", s.name, s.trials),
            Some(msg) => {
                failed = true;
                println!("suite {:<28} FAIL ({} trials): {msg}", s.name, s.trials);
            }
        }
    }
    if failed {
        Ok(EXIT_INVARIANT)
    } else {
        println!("all {} suites passed", suites.len());
        Ok(EXIT_OK)
    }
}

fn random_weighted_graph(n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::with_structure(n, &[]);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < 0.45 {
                let w = rng.gen_range(0.5..1.5);
                g.edges.push(Edge::new(i, j, vec![w]));
                g.edges.push(Edge::new(j, i, vec![w]));
            }
        }
    }
    g
}

fn gradient_suite() -> Suite {
    let name = "gradient-checks";
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut trials = 0;

    // primitives through small compositions
    for trial in 0..10 {
        let x = Tensor::matrix(3, 4, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let w = Tensor::matrix(4, 2, (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let err = finite_diff_check(
            |tape: &mut Tape, v| {
                let wv = tape.leaf(w.clone());
                let z = tape.matmul(&v, &wv).unwrap();
                let a = tape.leaky_relu(&z, 0.01);
                tape.sigmoid(&a)
            },
            &x,
            1e-6,
        );
        trials += 1;
        if err > 1e-4 {
            return Suite::fail(name, trials, format!("primitive chain trial {trial}: {err}"));
        }
    }

    // every block kind
    let g = random_weighted_graph(6, 7);
    let b = batch(std::slice::from_ref(&g)).unwrap();
    for kind in [
        GnKind::MpnnMax,
        GnKind::PathGnn,
        GnKind::PathGnnSim,
        GnKind::Gcn,
        GnKind::Gat,
    ] {
        let spec = GNBlockSpec {
            kind,
            hidden: 4,
            mlp_hidden: 4,
            homogeneous: false,
            input_concat: false,
        };
        let dims = GnDims {
            node_attrs: 0,
            edge_attrs: 1,
        };
        let mut pset = ParamSet::new();
        init_gn(&mut rng, &mut pset, &spec, dims, "g");
        let h0 = Tensor::matrix(6, 4, (0..24).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let err = finite_diff_check(
            |tape: &mut Tape, hv| {
                let ctx = GnContext::from_batch(tape, &b, false);
                let mut bound = Vec::new();
                let binding = spec.bind(tape, &pset, dims, "g", &mut bound).unwrap();
                gn_forward(tape, &spec, &binding, &ctx, &hv).unwrap()
            },
            &h0,
            1e-6,
        );
        trials += 1;
        if err > 1e-4 {
            return Suite::fail(name, trials, format!("{kind:?} block: {err}"));
        }
    }
    Suite::ok(name, trials)
}

fn homogeneity_suite(fault: Option<&str>) -> Suite {
    let name = "homogeneity";
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let lambdas = [1e-3, 0.5, 2.0, 1e3];
    let mut trials = 0;

    // bias-free MLPs
    for seed in 0..20u64 {
        let spec = MLPSpec::new(vec![5, 16, 3], Activation::Relu, false);
        let mut pset = ParamSet::new();
        init_mlp(&mut rng, &mut pset, &spec, "m");
        // the fault hook plants a bias inside the "homogenized" layer
        let (spec, pset) = if fault == Some("homo-bias") {
            let mut biased = spec.clone();
            biased.use_bias = true;
            let mut p = pset.clone();
            p.insert("m/0/b", Tensor::full(vec![1, 16], 0.1));
            p.insert("m/1/b", Tensor::full(vec![1, 3], 0.1));
            (biased, p)
        } else {
            (spec, pset)
        };
        let mut ex = Immediate;
        let mut bound = Vec::new();
        let mlp = bind_mlp(&mut ex, &pset, &spec, "m", &mut bound).unwrap();
        let x =
            Tensor::matrix(4, 5, (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let base = mlp_forward(&mut ex, &spec, &mlp, &x).unwrap();
        for lambda in lambdas {
            let xs = crate::tensor::affine(&x, lambda, 0.0);
            let scaled = mlp_forward(&mut ex, &spec, &mlp, &xs).unwrap();
            trials += 1;
            for (a, b) in base.data().iter().zip(scaled.data()) {
                let want = lambda * a;
                let rel = (want - b).abs() / want.abs().max(b.abs()).max(1e-30);
                if rel > 1e-9 {
                    return Suite::fail(
                        name,
                        trials,
                        format!("mlp seed {seed} lambda {lambda}: rel {rel}"),
                    );
                }
            }
        }
    }

    // homogenized blocks of every kind
    for kind in [
        GnKind::MpnnMax,
        GnKind::PathGnn,
        GnKind::PathGnnSim,
        GnKind::Gcn,
        GnKind::Gat,
    ] {
        for seed in 0..5u64 {
            let g = random_weighted_graph(6, 50 + seed);
            if g.edges.is_empty() {
                continue;
            }
            let b = batch(std::slice::from_ref(&g)).unwrap();
            let spec = homogenize_gn(&GNBlockSpec {
                kind,
                hidden: 6,
                mlp_hidden: 6,
                homogeneous: false,
                input_concat: true,
            });
            let dims = GnDims {
                node_attrs: 2,
                edge_attrs: 1,
            };
            let mut pset = ParamSet::new();
            init_gn(&mut rng, &mut pset, &spec, dims, "g");
            let run = |lambda: f64| -> Tensor {
                let mut scaled = b.clone();
                scaled.graph.node_attrs = Tensor::new(
                    vec![6, 2],
                    (0..12).map(|i| lambda * ((i as f64) - 5.0) / 3.0).collect(),
                )
                .unwrap();
                for e in &mut scaled.graph.edges {
                    for a in &mut e.attr {
                        *a *= lambda;
                    }
                }
                let mut ex = Immediate;
                let ctx = GnContext::from_batch(&mut ex, &scaled, true);
                let mut bound = Vec::new();
                let binding = spec.bind(&mut ex, &pset, dims, "g", &mut bound).unwrap();
                let h = ex.leaf(Tensor::matrix(
                    6,
                    6,
                    (0..36).map(|i| lambda * ((i % 5) as f64 - 2.0)).collect(),
                )
                .unwrap());
                gn_forward(&mut ex, &spec, &binding, &ctx, &h).unwrap()
            };
            let base = run(1.0);
            for lambda in lambdas {
                let scaled = run(lambda);
                trials += 1;
                for (a, b) in base.data().iter().zip(scaled.data()) {
                    let want = lambda * a;
                    let rel = (want - b).abs() / want.abs().max(b.abs()).max(1e-30);
                    if rel > 1e-9 {
                        return Suite::fail(
                            name,
                            trials,
                            format!("{kind:?} seed {seed} lambda {lambda}: rel {rel}"),
                        );
                    }
                }
            }
        }
    }
    Suite::ok(name, trials)
}

fn l1_fixture_suite() -> Suite {
    let name = "l1-fixture";
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let m = 4;
    let spec = MLPSpec::new(vec![m, 2 * m, 1], Activation::Relu, false);
    let mut pset = ParamSet::new();
    // first layer stacks [I; -I] column-wise; second sums with ones
    let mut w1 = vec![0.0; m * 2 * m];
    for i in 0..m {
        w1[i * 2 * m + i] = 1.0;
        w1[i * 2 * m + m + i] = -1.0;
    }
    pset.insert("l1/0/w", Tensor::matrix(m, 2 * m, w1).unwrap());
    pset.insert("l1/1/w", Tensor::matrix(2 * m, 1, vec![1.0; 2 * m]).unwrap());
    let mut ex = Immediate;
    let mut bound = Vec::new();
    let mlp = bind_mlp(&mut ex, &pset, &spec, "l1", &mut bound).unwrap();
    let trials = 500;
    for t in 0..trials {
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let want: f64 = x.iter().map(|v| v.abs()).sum();
        let xv = ex.leaf(Tensor::matrix(1, m, x).unwrap());
        let y = mlp_forward(&mut ex, &spec, &mlp, &xv).unwrap();
        if y.data()[0] != want {
            return Suite::fail(name, t + 1, format!("{} vs {want}", y.data()[0]));
        }
    }
    Suite::ok(name, trials)
}

fn iterative_algebra_suite() -> Suite {
    let name = "iterative-algebra";
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut trials = 0;

    // two-step expectation formula
    let (a, b) = (0.35, 0.7);
    let cfg = IterConfig {
        epsilon: 0.2,
        decay: 1.0,
        ..IterConfig::default()
    };
    let mut ex = Immediate;
    let h0 = ex.leaf(Tensor::matrix(1, 1, vec![0.0]).unwrap());
    let (out, _) = crate::iter::iterate(
        &mut ex,
        |ex, h, _| Ok(ex.affine(h, 1.0, 1.0)),
        |ex, _, k| {
            let c = match k {
                1..=3 => 1e-300,
                4 => a,
                _ => b,
            };
            Ok(ex.leaf(Tensor::matrix(1, 1, vec![c]).unwrap()))
        },
        &h0,
        &Segmentation::single(1),
        &cfg,
        IterMode::Train,
    )
    .unwrap();
    trials += 1;
    let expect = a * 4.0 + (1.0 - a) * b * 5.0;
    if (out.item() - expect).abs() > 1e-12 {
        return Suite::fail(name, trials, format!("{} vs {expect}", out.item()));
    }

    // mass bookkeeping over random traces
    for trial in 0..300 {
        let len = rng.gen_range(1..80);
        let confs: Vec<f64> = (0..len).map(|_| rng.gen_range(1e-6..0.999)).collect();
        let decay = if trial % 2 == 0 { 1.0 } else { 0.9999 };
        let cfg = IterConfig {
            epsilon: 1e-4,
            decay,
            max_iter_train: 40,
            max_iter_eval: 40,
        };
        let mut ex = Immediate;
        let h0 = ex.leaf(Tensor::matrix(1, 1, vec![0.0]).unwrap());
        let confs2 = confs.clone();
        let (_, trace) = crate::iter::iterate(
            &mut ex,
            |ex, h, _| Ok(ex.affine(h, 1.0, 1.0)),
            move |ex, _, k| {
                Ok(ex.leaf(
                    Tensor::matrix(1, 1, vec![confs2[(k - 1).min(confs2.len() - 1)]]).unwrap(),
                ))
            },
            &h0,
            &Segmentation::single(1),
            &cfg,
            IterMode::Train,
        )
        .unwrap();
        trials += 1;
        let total = trace.weight_sum[0] + trace.residual[0];
        if (total - 1.0).abs() > 1e-12 {
            return Suite::fail(name, trials, format!("mass {total} at trial {trial}"));
        }
    }
    Suite::ok(name, trials)
}

fn decay_reach_suite() -> Suite {
    let name = "decay-reach";
    let eps = 1e-4;
    let crossing = |decay: f64| (1..=3000).find(|&k| constant_confidence_residual(0.05, decay, k) <= eps);
    let undecayed = crossing(1.0);
    let decayed_holds = constant_confidence_residual(0.05, 0.9999, 2500) > eps;
    match (undecayed, decayed_holds) {
        (Some(k), true) if k < 200 => Suite::ok(name, 2),
        (u, d) => Suite::fail(name, 2, format!("undecayed {u:?}, decayed holds {d}")),
    }
}

fn bellman_ford_realizability_suite() -> Suite {
    let name = "bellman-ford-fixture";
    let (spec, pset) = crate::nn::bellman_ford_message_params("bf");
    let mut trials = 0;
    for seed in 0..30u64 {
        let n = 4 + (seed as usize) % 14;
        let g = random_weighted_graph(n, 900 + seed);
        let b = batch(std::slice::from_ref(&g)).unwrap();
        let mut ex = Immediate;
        let ctx = GnContext::from_batch(&mut ex, &b, false);
        let mut bound = Vec::new();
        let dims = GnDims {
            node_attrs: 0,
            edge_attrs: 1,
        };
        let binding = spec.bind(&mut ex, &pset, dims, "bf", &mut bound).unwrap();
        let mut init = vec![-crate::oracles::UNREACHED; n];
        init[0] = 0.0;
        let mut h = ex.leaf(Tensor::column(init));
        for k in 1..=12usize {
            h = gn_forward(&mut ex, &spec, &binding, &ctx, &h).unwrap();
            let want = crate::oracles::bellman_ford_k(&g, 0, k).unwrap();
            trials += 1;
            for (got, w) in h.data().iter().zip(&want) {
                if (got + w).abs() > 1e-9 {
                    return Suite::fail(name, trials, format!("seed {seed} k {k}"));
                }
            }
        }
    }
    Suite::ok(name, trials)
}

fn oracle_cross_check_suite() -> Suite {
    let name = "oracle-cross-checks";
    let mut trials = 0;

    // dijkstra vs exhaustive simple-path enumeration
    for seed in 0..60u64 {
        let n = 4 + (seed as usize) % 5;
        let g = random_weighted_graph(n, 2000 + seed);
        let d = crate::oracles::dijkstra(&g, 0).unwrap();
        let adj = g.adjacency();
        for t in 0..n {
            let brute = brute_force_dist(&adj, 0, t, n);
            trials += 1;
            match brute {
                Some(v) => {
                    if (d.dist[t] - v).abs() > 1e-12 {
                        return Suite::fail(name, trials, format!("dijkstra seed {seed}"));
                    }
                }
                None => {
                    if d.reachable[t] {
                        return Suite::fail(name, trials, format!("reachability seed {seed}"));
                    }
                }
            }
        }
    }

    // held-karp vs permutation enumeration
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    for trial in 0..30 {
        let n = 4 + trial % 5;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(1.0..1000.0), rng.gen_range(1.0..1000.0)))
            .collect();
        let exact = crate::oracles::tsp_exact(&pts).unwrap();
        let brute = brute_force_tour(&pts);
        trials += 1;
        if (exact - brute).abs() > 1e-9 {
            return Suite::fail(name, trials, format!("tour trial {trial}: {exact} vs {brute}"));
        }
    }

    // union-find vs bfs flood fill
    for seed in 0..150u64 {
        let g = generate(GeneratorKind::Er { p: 0.12 }, 4 + (seed as usize) % 24, seed).unwrap();
        trials += 1;
        if crate::oracles::count_components(&g) != bfs_components(&g) {
            return Suite::fail(name, trials, format!("components seed {seed}"));
        }
    }
    Suite::ok(name, trials)
}

fn physics_suite() -> Suite {
    let name = "physics-consistency";
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let range = 200.0 * crate::oracles::BALL_RADIUS;
    let trials = 10_000;
    let mut collisions = 0;
    for t in 0..trials {
        let gap = rng.gen_range(0.0..range);
        let v = rng.gen_range(0.0..range);
        let s = crate::oracles::newton_step(6, gap, v, 1.0).unwrap();
        if v >= gap {
            collisions += 1;
            if s.left_speed + s.right_speed != v
                || s.left_speed * s.left_speed + s.right_speed * s.right_speed != v * v
            {
                return Suite::fail(name, t + 1, "conservation violated".into());
            }
        }
    }
    let freq = collisions as f64 / trials as f64;
    if (freq - 0.5).abs() > 0.02 {
        return Suite::fail(name, trials, format!("collision frequency {freq}"));
    }
    Suite::ok(name, trials)
}

fn brute_force_dist(adj: &[Vec<(usize, f64)>], s: usize, t: usize, n: usize) -> Option<f64> {
    fn go(
        u: usize,
        t: usize,
        acc: f64,
        adj: &[Vec<(usize, f64)>],
        visited: &mut [bool],
        best: &mut Option<f64>,
    ) {
        if u == t {
            *best = Some(best.map_or(acc, |b: f64| b.min(acc)));
            return;
        }
        visited[u] = true;
        for &(v, w) in &adj[u] {
            if !visited[v] {
                go(v, t, acc + w, adj, visited, best);
            }
        }
        visited[u] = false;
    }
    let mut best = None;
    go(s, t, 0.0, adj, &mut vec![false; n], &mut best);
    best
}

fn brute_force_tour(points: &[(f64, f64)]) -> f64 {
    fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    }
    fn permute(order: &mut Vec<usize>, k: usize, pts: &[(f64, f64)], best: &mut f64) {
        if k == order.len() {
            let mut len = dist(pts[0], pts[order[0]]);
            for w in order.windows(2) {
                len += dist(pts[w[0]], pts[w[1]]);
            }
            len += dist(pts[*order.last().unwrap()], pts[0]);
            *best = best.min(len);
            return;
        }
        for i in k..order.len() {
            order.swap(k, i);
            permute(order, k + 1, pts, best);
            order.swap(k, i);
        }
    }
    let mut order: Vec<usize> = (1..points.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut order, 0, points, &mut best);
    best
}

fn bfs_components(g: &Graph) -> usize {
    let mut adj = vec![Vec::new(); g.num_nodes];
    for e in &g.edges {
        adj[e.sender].push(e.receiver);
        adj[e.receiver].push(e.sender);
    }
    let mut seen = vec![false; g.num_nodes];
    let mut count = 0;
    for s in 0..g.num_nodes {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}
