use std::collections::BTreeSet;

use proptest::prelude::*;
use sparsegnn::graphrep::*;
use sparsegnn::{rng, CooPattern, Error};

/// Six-node sample graph with nodes a..f as 0..5.
fn sample_graph() -> Graph {
    let [a, b, c, d, e, f] = [0, 1, 2, 3, 4, 5];
    Graph::from_edges(
        6,
        [(a, d), (a, f), (b, c), (b, d), (c, d), (c, e), (d, e), (e, f)],
    )
    .unwrap()
}

fn edge_set(g: &Graph) -> BTreeSet<(usize, usize)> {
    g.edges().collect()
}

/// Induced subgraph from first principles: an n×n boolean adjacency matrix
/// restricted to the sorted selection.
fn brute_induced(g: &Graph, nodes: &[usize]) -> BTreeSet<(usize, usize)> {
    let n = g.num_nodes();
    let mut adj = vec![vec![false; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        for &j in g.neighbors(i) {
            row[j] = true;
        }
    }
    let mut sel = nodes.to_vec();
    sel.sort_unstable();
    let mut out = BTreeSet::new();
    for (x, &u) in sel.iter().enumerate() {
        for (y, &v) in sel.iter().enumerate() {
            if x <= y && adj[u][v] {
                out.insert((x, y));
            }
        }
    }
    out
}

fn heap_permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            go(k - 1, a, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    let mut out = Vec::new();
    go(n, &mut (0..n).collect(), &mut out);
    out
}

/// Brute-force isomorphism test: try every bijection.
fn isomorphic(g: &Graph, h: &Graph) -> bool {
    if g.num_nodes() != h.num_nodes() || g.sorted_degrees() != h.sorted_degrees() {
        return false;
    }
    let target = edge_set(h);
    heap_permutations(g.num_nodes()).into_iter().any(|p| {
        g.edges()
            .map(|(i, j)| {
                let (a, b) = (p[i], p[j]);
                (a.min(b), a.max(b))
            })
            .collect::<BTreeSet<_>>()
            == target
    })
}

fn arb_graph(max_nodes: usize) -> impl Strategy<Value = Graph> {
    (1..=max_nodes).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..=n * 2)
            .prop_map(move |edges| Graph::from_edges(n, edges).unwrap())
    })
}

#[test]
fn coo_conversion_examples() {
    let g = coo_to_graph(&CooPattern::identity(4)).unwrap();
    assert_eq!(g.degrees(), &[1, 1, 1, 1]);
    assert!((0..4).all(|i| g.has_self_loop(i)));

    let sym = CooPattern::from_positions((2, 2), [(0, 1), (1, 0)]).unwrap();
    let one = CooPattern::from_positions((2, 2), [(0, 1)]).unwrap();
    let gs = coo_to_graph(&sym).unwrap();
    let go = coo_to_graph(&one).unwrap();
    assert_eq!(gs.degrees(), &[1, 1]);
    assert_eq!(gs, go);
    assert_eq!(gs.num_edges(), 1);

    let rect = CooPattern::from_positions((2, 3), [(0, 2)]).unwrap();
    assert!(matches!(
        coo_to_graph(&rect),
        Err(Error::UnsupportedShape { rows: 2, cols: 3 })
    ));
}

#[test]
fn coo_degrees_match_brute_force_adjacency() {
    for s in 0..20 {
        let p = sparsegnn::matgen::gen_random(25, 0.15, &mut rng::stream(s, 0)).unwrap();
        let n = 25;
        let mut adj = vec![vec![false; n]; n];
        for (r, c) in p.positions() {
            adj[r][c] = true;
            adj[c][r] = true;
        }
        let expected: Vec<usize> = adj.iter().map(|row| row.iter().filter(|&&b| b).count()).collect();
        assert_eq!(coo_to_graph(&p).unwrap().degrees(), expected.as_slice());
    }
}

#[test]
fn sample_graph_triangle_subgraph() {
    let g = sample_graph();
    let sub = g.induced_subgraph(&[1, 2, 3]).unwrap();
    assert_eq!(sub.num_nodes(), 3);
    assert_eq!(edge_set(&sub), [(0, 1), (0, 2), (1, 2)].into_iter().collect());
    assert_eq!(degree_histogram(&sub), vec![(2, 3)]);
}

#[test]
fn sample_graph_relabelling() {
    let g = sample_graph();
    // a→c, b→a, c→b, d→f, e→e, f→d
    let perm = Permutation::new(vec![2, 0, 1, 5, 4, 3]).unwrap();
    let h = relabel(&g, &perm).unwrap();
    assert_eq!(h.sorted_degrees(), g.sorted_degrees());
    assert_eq!(h.num_edges(), g.num_edges());
    assert!(h.has_edge(2, 5)); // {a, d} became {c, f}
    assert!(isomorphic(&g, &h));
}

#[test]
fn urns_examples() {
    let g = sample_graph();
    let full = urns_sample(&g, 1.0, &mut rng::stream(3, 0)).unwrap();
    assert_eq!(full, g);

    let star = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    let leaves = star.induced_subgraph(&[1, 2, 3, 4]).unwrap();
    assert_eq!(leaves.degrees(), &[0, 0, 0, 0]);
    assert!(brute_induced(&star, &[1, 2, 3, 4]).is_empty());

    for bad in [0.0, -0.5, 1.5, f64::NAN] {
        assert!(matches!(
            urns_sample(&g, bad, &mut rng::stream(0, 0)),
            Err(Error::InvalidParameter(_))
        ));
    }
    let half = urns_sample(&g, 0.5, &mut rng::stream(9, 0)).unwrap();
    assert_eq!(half.num_nodes(), 3);
    let third = urns_sample(&g, 0.34, &mut rng::stream(9, 0)).unwrap();
    assert_eq!(third.num_nodes(), 3);
}

#[test]
fn urns_matches_brute_force_on_small_graphs() {
    use rand::seq::index;
    for seed in 0..100u64 {
        let mut r = rng::stream(seed, 1);
        let n = 2 + (seed as usize * 7) % 63;
        let p = sparsegnn::matgen::gen_random(n, 0.1, &mut r).unwrap();
        let g = coo_to_graph(&p).unwrap();
        let fraction = 0.2 + 0.7 * (seed % 10) as f64 / 10.0;
        let sampled = urns_sample(&g, fraction, &mut rng::stream(seed, 2)).unwrap();
        // replay the same draw to recover which nodes were chosen
        let m = (fraction * n as f64).ceil() as usize;
        let chosen = index::sample(&mut rng::stream(seed, 2), n, m).into_vec();
        assert_eq!(sampled.num_nodes(), m);
        assert_eq!(edge_set(&sampled), brute_induced(&g, &chosen), "seed {seed}");
    }
}

#[test]
fn relabel_errors_and_identity() {
    let g = sample_graph();
    assert_eq!(relabel(&g, &Permutation::identity(6)).unwrap(), g);
    assert!(matches!(relabel(&g, &Permutation::identity(5)), Err(Error::InvalidParameter(_))));
    assert!(Permutation::new(vec![0, 0, 1]).is_err());
    assert!(Permutation::new(vec![0, 3, 1]).is_err());
}

#[test]
fn histogram_examples() {
    let tri = Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
    assert_eq!(degree_histogram(&tri), vec![(2, 3)]);
    let eye = coo_to_graph(&CooPattern::identity(7)).unwrap();
    assert_eq!(degree_histogram(&eye), vec![(1, 7)]);
    let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
    assert_eq!(degree_histogram(&star), vec![(1, 3), (3, 1)]);
}

#[test]
fn pattern_round_trip_through_graph() {
    let g = sample_graph();
    let p = g.to_pattern();
    assert_eq!(p.nnz(), 2 * g.num_edges());
    assert_eq!(coo_to_graph(&p).unwrap(), g);
}

proptest! {
    #[test]
    fn graph_invariants(g in arb_graph(30)) {
        for i in 0..g.num_nodes() {
            let ns = g.neighbors(i);
            prop_assert!(ns.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(g.degrees()[i], ns.len());
            for &j in ns {
                prop_assert!(g.neighbors(j).contains(&i));
            }
        }
        let mass: usize = degree_histogram(&g).iter().map(|&(_, c)| c).sum();
        prop_assert_eq!(mass, g.num_nodes());
    }

    #[test]
    fn relabel_preserves_structure(g in arb_graph(40), seed in any::<u64>()) {
        let perm = Permutation::random(g.num_nodes(), &mut rng::stream(seed, 0));
        let h = relabel(&g, &perm).unwrap();
        prop_assert_eq!(h.num_nodes(), g.num_nodes());
        prop_assert_eq!(h.num_edges(), g.num_edges());
        prop_assert_eq!(h.sorted_degrees(), g.sorted_degrees());
        for (i, j) in g.edges() {
            prop_assert!(h.has_edge(perm.apply(i), perm.apply(j)));
        }
    }

    #[test]
    fn relabel_isomorphic_small(g in arb_graph(8), seed in any::<u64>()) {
        let perm = Permutation::random(g.num_nodes(), &mut rng::stream(seed, 0));
        let h = relabel(&g, &perm).unwrap();
        prop_assert!(isomorphic(&g, &h));
    }

    #[test]
    fn urns_degrees_never_grow(g in arb_graph(40), seed in any::<u64>(), f in 0.05f64..=1.0) {
        let s = urns_sample(&g, f, &mut rng::stream(seed, 0)).unwrap();
        prop_assert_eq!(s.num_nodes(), ((f * g.num_nodes() as f64).ceil() as usize).min(g.num_nodes()));
        prop_assert!(s.max_degree() <= g.max_degree());
        prop_assert!(s.num_edges() <= g.num_edges());
    }
}

#[test]
fn isomorphism_oracle_rejects_non_isomorphic() {
    let path = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
    assert!(!isomorphic(&path, &star));
    // same degree sequence, different structure: 6-cycle vs two triangles
    let hex = Graph::from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
    let tris = Graph::from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
    assert!(!isomorphic(&hex, &tris));
}
