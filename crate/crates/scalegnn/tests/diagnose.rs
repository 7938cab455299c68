//! Scratch walk diagnostics (run explicitly with --ignored).

use scalegnn::graph::batch;
use scalegnn::oracles::dijkstra;
use scalegnn::tasks::{
    generate_dataset, set_endpoint_onehots, shortest_path_endpoints, split_seed, DatasetSpec,
    Split, TaskKind,
};
use scalegnn::train::{Checkpoint, Model};

#[test]
#[ignore]
fn dump_walk_predictions() {
    let text = std::fs::read_to_string("/tmp/pilot_checkpoint.json").unwrap();
    let ck = Checkpoint::from_json(&text).unwrap();
    let model = Model::new(ck.model.clone());
    let eval20 = generate_dataset(&DatasetSpec {
        task: TaskKind::ShortestPath,
        generator: scalegnn::graph::GeneratorKind::default_lobster(),
        n_min: 20,
        n_max: 21,
        weighted: false,
        weight_min: 0.5,
        weight_max: 1.5,
        count: 5,
        master_seed: split_seed(1234, Split::Test),
    })
    .unwrap();
    for (i, s) in eval20.iter().enumerate() {
        let (src, tgt) = shortest_path_endpoints(s).unwrap();
        let d_to = {
            // true distances to tgt: dijkstra from tgt on reversed graph == same for undirected
            dijkstra(&s.graph, tgt).unwrap()
        };
        let true_path = dijkstra(&s.graph, src).unwrap().path_to(src, tgt).unwrap();
        println!(
            "sample {i}: n={} dist={} path={:?}",
            s.graph.num_nodes,
            s.target.scalar().unwrap(),
            true_path
        );
        for &node in &true_path {
            let mut g = s.graph.clone();
            set_endpoint_onehots(&mut g, node, tgt);
            let b = batch(std::slice::from_ref(&g)).unwrap();
            let (pred, traces) = model.predict(&ck.params, &b).unwrap();
            println!(
                "  node {node}: true {} pred {:.4} steps {}",
                d_to.dist[node],
                pred.data()[0],
                traces[0].halt_step[0],
            );
        }
    }
}

#[test]
#[ignore]
fn dump_confidence_trajectories() {
    let text = std::fs::read_to_string("/tmp/pilot_checkpoint.json").unwrap();
    let ck = Checkpoint::from_json(&text).unwrap();
    let model = Model::new(ck.model.clone());
    for size in [20usize, 50, 100] {
        let set = generate_dataset(&DatasetSpec {
            task: TaskKind::ShortestPath,
            generator: scalegnn::graph::GeneratorKind::default_lobster(),
            n_min: size,
            n_max: size + 1,
            weighted: false,
            weight_min: 0.5,
            weight_max: 1.5,
            count: 2,
            master_seed: split_seed(777, Split::Test),
        })
        .unwrap();
        for s in &set {
            let b = batch(std::slice::from_ref(&s.graph)).unwrap();
            let (_, traces) = model.predict(&ck.params, &b).unwrap();
            let t = &traces[0];
            let confs: Vec<(usize, f64)> = [1usize, 5, 10, 15, 20, 30, 50, 80, 120, 200, 400, 800, 1600, 3000]
                .iter()
                .filter(|&&k| k <= t.steps)
                .map(|&k| (k, t.confidences[k - 1][0]))
                .collect();
            println!(
                "size {size} dist {} steps {} halt {}: c = {confs:?}",
                s.target.scalar().unwrap(),
                t.steps,
                t.halt_step[0]
            );
        }
    }
}
