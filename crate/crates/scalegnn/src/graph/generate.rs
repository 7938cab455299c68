//! Random graph generators.
//!
//! Four families with deliberately different scaling behaviour:
//! Erdos-Renyi (tiny diameters), k-nearest-neighbour on a line segment,
//! planar Delaunay triangulations, and lobster trees whose diameter grows
//! linearly with node count. All are deterministic functions of
//! `(kind, n, seed)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError};
use crate::mix_seed;

/// Generator family and its shape parameters (node count is passed
/// separately so datasets can sweep it).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Every unordered pair is linked with probability `p`.
    Er { p: f64 },
    /// Points in the `dim`-cube, each linked to its `k` nearest
    /// neighbours; edges run from the centre node to the neighbour.
    Knn { dim: usize, k: usize },
    /// Delaunay triangulation of points in the `dim`-cube.
    Planar { dim: usize },
    /// A spine of `n` nodes plus two levels of random leaves.
    Lobster { p1: f64, p2: f64 },
}

impl GeneratorKind {
    /// Hyper-parameters used throughout the experiments.
    pub fn default_er() -> Self {
        GeneratorKind::Er { p: 0.5 }
    }

    pub fn default_knn() -> Self {
        GeneratorKind::Knn { dim: 1, k: 8 }
    }

    pub fn default_planar() -> Self {
        GeneratorKind::Planar { dim: 2 }
    }

    pub fn default_lobster() -> Self {
        GeneratorKind::Lobster { p1: 0.2, p2: 0.2 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Er { .. } => "er",
            GeneratorKind::Knn { .. } => "knn",
            GeneratorKind::Planar { .. } => "planar",
            GeneratorKind::Lobster { .. } => "lobster",
        }
    }

    fn validate(&self, n: usize) -> Result<(), GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidParam("node count must be >= 1".into()));
        }
        match *self {
            GeneratorKind::Er { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(GraphError::InvalidParam(format!("er p={p} outside [0,1]")));
                }
            }
            GeneratorKind::Knn { dim, k } => {
                if dim != 1 && dim != 2 {
                    return Err(GraphError::InvalidParam(format!("knn dim={dim}, want 1 or 2")));
                }
                if k == 0 {
                    return Err(GraphError::InvalidParam("knn k must be >= 1".into()));
                }
                if k >= n {
                    return Err(GraphError::KTooLarge { k, n });
                }
            }
            GeneratorKind::Planar { dim } => {
                if dim != 2 {
                    return Err(GraphError::InvalidParam(format!(
                        "planar dim={dim}, want 2"
                    )));
                }
            }
            GeneratorKind::Lobster { p1, p2 } => {
                for (name, p) in [("p1", p1), ("p2", p2)] {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(GraphError::InvalidParam(format!(
                            "lobster {name}={p} outside [0,1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Generate a structure-only graph; attributes are filled in by the task
/// encoders.
pub fn generate(kind: GeneratorKind, n: usize, seed: u64) -> Result<Graph, GraphError> {
    kind.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GeneratorKind::Er { p } => Ok(erdos_renyi(n, p, &mut rng)),
        GeneratorKind::Knn { dim, k } => Ok(knn(n, dim, k, &mut rng)),
        GeneratorKind::Planar { .. } => planar(n, seed),
        GeneratorKind::Lobster { p1, p2 } => Ok(lobster(n, p1, p2, &mut rng)),
    }
}

fn erdos_renyi(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut links = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                links.push((i, j));
            }
        }
    }
    Graph::with_structure(n, &links)
}

fn knn(n: usize, dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Graph {
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut edges = Vec::with_capacity(n * k);
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d2: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, j)
            })
            .collect();
        // equal distances break ties by node index (stable order)
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            edges.push(super::Edge::new(i, j, vec![]));
        }
    }
    Graph {
        num_nodes: n,
        node_attrs: crate::tensor::Tensor::zeros(vec![n, 0]),
        edges,
        global_attr: None,
    }
}

fn lobster(n: usize, p1: f64, p2: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut links: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    let n1 = binomial(n, p1, rng);
    let mut first_level = Vec::with_capacity(n1);
    let mut next = n;
    for _ in 0..n1 {
        let parent = rng.gen_range(0..n);
        links.push((parent, next));
        first_level.push(next);
        next += 1;
    }
    if !first_level.is_empty() {
        let n2 = binomial(n1, p2, rng);
        for _ in 0..n2 {
            let parent = first_level[rng.gen_range(0..first_level.len())];
            links.push((parent, next));
            next += 1;
        }
    }
    Graph::with_structure(next, &links)
}

fn binomial(n: usize, p: f64, rng: &mut ChaCha8Rng) -> usize {
    (0..n).filter(|_| rng.gen::<f64>() < p).count()
}

// ---- planar: Bowyer-Watson incremental Delaunay -------------------------

const PLANAR_RETRIES: u32 = 16;

fn planar(n: usize, seed: u64) -> Result<Graph, GraphError> {
    for attempt in 0..PLANAR_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt as u64));
        let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
        if let Some(links) = try_delaunay(&points) {
            return Ok(Graph::with_structure(n, &links));
        }
    }
    Err(GraphError::DegeneratePoints(PLANAR_RETRIES))
}

/// None when the point set is degenerate (duplicates, collinear, or a
/// numerically unstable circumcircle); the caller resamples.
fn try_delaunay(points: &[(f64, f64)]) -> Option<Vec<(usize, usize)>> {
    let n = points.len();
    if n == 1 {
        return Some(vec![]);
    }
    if n == 2 {
        if points[0] == points[1] {
            return None;
        }
        return Some(vec![(0, 1)]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = points[i].0 - points[j].0;
            let dy = points[i].1 - points[j].1;
            if dx * dx + dy * dy < 1e-24 {
                return None; // effectively duplicate points
            }
        }
    }
    if all_collinear(points) {
        return None;
    }

    // super-triangle comfortably containing the unit square
    let mut verts: Vec<(f64, f64)> = points.to_vec();
    verts.push((-10.0, -10.0));
    verts.push((11.0, -10.0));
    verts.push((0.5, 12.0));
    let (s0, s1, s2) = (n, n + 1, n + 2);

    let mut triangles: Vec<[usize; 3]> = vec![[s0, s1, s2]];
    for p in 0..n {
        let mut bad = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            match in_circumcircle(&verts, *tri, verts[p]) {
                Some(true) => bad.push(t),
                Some(false) => {}
                None => return None, // degenerate circumcircle
            }
        }
        // cavity boundary = edges owned by exactly one bad triangle
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &t in &bad {
            let tri = triangles[t];
            for e in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                if let Some(pos) = boundary.iter().position(|&b| b == key) {
                    boundary.remove(pos);
                } else {
                    boundary.push(key);
                }
            }
        }
        let mut keep: Vec<[usize; 3]> = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if !bad.contains(&t) {
                keep.push(*tri);
            }
        }
        for (a, b) in boundary {
            keep.push([a, b, p]);
        }
        triangles = keep;
    }

    let mut links = Vec::new();
    for tri in &triangles {
        if tri.iter().any(|&v| v >= n) {
            continue; // touches the super-triangle
        }
        for e in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            let key = (e.0.min(e.1), e.0.max(e.1));
            if !links.contains(&key) {
                links.push(key);
            }
        }
    }
    links.sort_unstable();
    Some(links)
}

fn all_collinear(points: &[(f64, f64)]) -> bool {
    let (x0, y0) = points[0];
    let Some(&(x1, y1)) = points[1..]
        .iter()
        .find(|&&(x, y)| (x - x0).abs() > 1e-12 || (y - y0).abs() > 1e-12)
    else {
        return true;
    };
    points.iter().all(|&(x, y)| {
        let cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
        cross.abs() < 1e-12
    })
}

/// Strict in-circle test for the triangle's circumcircle; None when the
/// triangle is too close to degenerate to trust the arithmetic.
fn in_circumcircle(verts: &[(f64, f64)], tri: [usize; 3], p: (f64, f64)) -> Option<bool> {
    let (ax, ay) = verts[tri[0]];
    let (bx, by) = verts[tri[1]];
    let (cx, cy) = verts[tri[2]];
    let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if d.abs() < 1e-12 {
        return None;
    }
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
    let uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
    let r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
    let d2 = (p.0 - ux) * (p.0 - ux) + (p.1 - uy) * (p.1 - uy);
    Some(d2 < r2)
}

// ---- multi-component composition ----------------------------------------

/// Disjoint union of up to `m_max` independently generated parts.
///
/// The returned label is the component count verified by union-find, not
/// the sampled part count: a base generator may emit an internally
/// disconnected part, and labels must be true counts.
pub fn generate_multi_component(
    n: usize,
    m_max: usize,
    base: GeneratorKind,
    seed: u64,
) -> Result<(Graph, usize), GraphError> {
    if n < m_max {
        return Err(GraphError::InvalidParam(format!(
            "need n >= m_max, got n={n}, m_max={m_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=m_max);
    let sizes = split_sizes(n, m, &mut rng);
    let mut merged_links: Vec<(usize, usize)> = Vec::new();
    let mut offset = 0;
    let mut total = 0;
    for (part, &size) in sizes.iter().enumerate() {
        let g = generate(base, size, mix_seed(seed, part as u64 + 1))?;
        // directed edges come in mirrored pairs; keep one per link
        for e in &g.edges {
            if e.sender < e.receiver {
                merged_links.push((offset + e.sender, offset + e.receiver));
            }
        }
        offset += g.num_nodes;
        total += g.num_nodes;
    }
    let graph = Graph::with_structure(total, &merged_links);
    let label = crate::oracles::count_components(&graph);
    Ok((graph, label))
}

/// Split `n` into `m` contiguous parts via m-1 distinct cut positions
/// drawn uniformly from 1..n-1.
fn split_sizes(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if m == 1 {
        return vec![n];
    }
    let mut positions: Vec<usize> = (1..n).collect();
    positions.shuffle(rng);
    let mut cuts: Vec<usize> = positions[..m - 1].to_vec();
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(m);
    let mut prev = 0;
    for c in cuts {
        sizes.push(c - prev);
        prev = c;
    }
    sizes.push(n - prev);
    sizes
}
