use dynloop::oracle::reducibility_test;
use dynloop::{Cfg, VertexId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random reducible graph with at most `max_n` vertices: a random spanning
/// tree plus extra edges, each kept only if the graph stays reducible. A few
/// vertices are left unreachable.
pub fn random_reducible(seed: u64, max_n: usize) -> Cfg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let mut g = Cfg::with_vertices(n, VertexId::new(0)).unwrap();
    let reachable = if n > 3 { n - rng.gen_range(0..2) } else { n };
    for i in 1..reachable {
        let p = rng.gen_range(0..i);
        g.insert_edge_raw(VertexId::new(p), VertexId::new(i))
            .unwrap();
    }
    let extra = rng.gen_range(0..=2 * n);
    for _ in 0..extra {
        let u = VertexId::new(rng.gen_range(0..n));
        let w = VertexId::new(rng.gen_range(0..n));
        g.insert_edge_raw(u, w).unwrap();
        if !reducibility_test(&g) {
            g.delete_edge_raw(u, w).unwrap();
        }
    }
    g
}
