use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CostSpec, Plant};
use crate::error::{Error, Result};

/// `N` unit masses on a line joined by unit springs.
///
/// States are positions then velocities: `A = [0 I; T 0]`, `B = [0; I]` with
/// `T` tridiagonal (−2 on the diagonal, 1 off it). Weights are `Q = I`,
/// `R = r_scale·I`, `W = B·Bᵀ`, `Λ = 0`.
pub fn mass_spring(masses: usize, r_scale: f64) -> Result<(Plant, CostSpec)> {
    if masses == 0 {
        return Err(Error::Invalid("mass-spring system needs at least one mass".into()));
    }
    if !(r_scale > 0.0) {
        return Err(Error::Invalid(format!("R scale must be positive, got {r_scale}")));
    }
    let t = Mat::from_fn(masses, masses, |i, j| {
        if i == j {
            -2.0
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    });
    Ok(second_order(t, r_scale))
}

/// `A = [0 I; C 0]`, `B = [0; I]` for a coupling matrix `C`.
fn second_order(coupling: Mat<f64>, r_scale: f64) -> (Plant, CostSpec) {
    let nn = coupling.nrows();
    let n = 2 * nn;
    let a = Mat::from_fn(n, n, |i, j| {
        if i < nn && j == i + nn {
            1.0
        } else if i >= nn && j < nn {
            coupling[(i - nn, j)]
        } else {
            0.0
        }
    });
    let b = Mat::from_fn(n, nn, |i, j| if i == j + nn { 1.0 } else { 0.0 });
    let w = &b * b.transpose();
    let q = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
    let r = Mat::from_fn(nn, nn, |i, j| if i == j { r_scale } else { 0.0 });
    let plant = Plant::new(a, b, w).expect("generator dimensions are consistent");
    let cost = CostSpec::unregularized(q, r).expect("generator dimensions are consistent");
    (plant, cost)
}

/// Undirected unit-weight graph used by [`random_network`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl NetworkGraph {
    /// Erdős–Rényi graph with edge probability `density`, patched into a
    /// connected graph by linking every stray component to the main one.
    pub fn random(nodes: usize, density: f64, seed: u64) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Invalid(format!("network needs at least 2 nodes, got {nodes}")));
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::Invalid(format!("density must lie in (0, 1], got {density}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..nodes {
            for j in (i + 1)..nodes {
                if rng.random::<f64>() < density {
                    edges.push((i, j));
                }
            }
        }
        let mut parent: Vec<usize> = (0..nodes).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(i, j) in &edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut label = vec![usize::MAX; nodes];
        for v in 0..nodes {
            let root = find(&mut parent, v);
            if label[root] == usize::MAX {
                label[root] = components.len();
                components.push(Vec::new());
            }
            components[label[root]].push(v);
        }
        let mut connected = components[0].clone();
        for comp in &components[1..] {
            let from = comp[rng.random_range(0..comp.len())];
            let to = connected[rng.random_range(0..connected.len())];
            edges.push((from.min(to), from.max(to)));
            connected.extend_from_slice(comp);
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { nodes, edges })
    }

    pub fn laplacian(&self) -> Mat<f64> {
        let mut l = Mat::<f64>::zeros(self.nodes, self.nodes);
        for &(i, j) in &self.edges {
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
        }
        l
    }
}

/// Second-order consensus network: `A = [0 I; −L 0]` with `L` the Laplacian
/// of a connected random graph, one input per node, `Q = I`, `R = 10·I`,
/// `W = B·Bᵀ`.
pub fn random_network(nodes: usize, density: f64, seed: u64) -> Result<(Plant, CostSpec)> {
    let graph = NetworkGraph::random(nodes, density, seed)?;
    let coupling = graph.laplacian() * faer::Scale(-1.0);
    Ok(second_order(coupling, 10.0))
}
