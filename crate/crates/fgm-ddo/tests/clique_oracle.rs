//! Bron–Kerbosch against a brute-force subset-maximality oracle: every graph
//! on up to 7 vertices (exhaustive over all edge sets) and 200 random graphs
//! on up to 12 vertices.

use fgm_ddo::fgm::{maximal_cliques, FgmGraph};
use fgm_ddo::Rng;

/// All maximal cliques by subset enumeration over bitmasks.
fn brute_force_cliques(d: usize, adj: &[u32]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for s in 1u32..(1u32 << d) {
        // Clique: every member is adjacent to all other members.
        let mut is_clique = true;
        for i in 0..d {
            if s & (1 << i) != 0 && (s & !(1u32 << i)) & !adj[i] != 0 {
                is_clique = false;
                break;
            }
        }
        if !is_clique {
            continue;
        }
        // Maximal: no outside vertex adjacent to all members.
        let mut maximal = true;
        for v in 0..d {
            if s & (1 << v) == 0 && s & !adj[v] == 0 {
                maximal = false;
                break;
            }
        }
        if maximal {
            out.push((0..d).filter(|i| s & (1 << i) != 0).collect());
        }
    }
    out.sort();
    out
}

fn check_graph(d: usize, edges: &[(usize, usize)]) {
    let mut adj = vec![0u32; d];
    for &(i, j) in edges {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    let graph = FgmGraph::with_edges(d, edges).unwrap();
    let got = maximal_cliques(&graph).unwrap();
    let expected = brute_force_cliques(d, &adj);
    assert_eq!(
        got.cliques(),
        expected.as_slice(),
        "mismatch on d={d}, edges={edges:?}"
    );
}

#[test]
fn exhaustive_up_to_seven_vertices() {
    for d in 1..=7usize {
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
            .collect();
        let num_masks: u64 = 1 << pairs.len();
        for mask in 0..num_masks {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &e)| e)
                .collect();
            check_graph(d, &edges);
        }
    }
}

#[test]
fn random_graphs_up_to_twelve_vertices() {
    let mut rng = Rng::new(2024);
    for trial in 0..200 {
        let d = 2 + rng.below(11); // 2..=12
        let p = 0.15 + 0.7 * rng.uniform();
        let mut edges = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                if rng.uniform() < p {
                    edges.push((i, j));
                }
            }
        }
        let _ = trial;
        check_graph(d, &edges);
    }
}
