use std::collections::BTreeSet;

use mgstd_core::{
    condensation_reachability, morse_decomposition, scc, transitive_reduction, CellIndex, Digraph,
};
use proptest::prelude::*;

fn closure(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                let row = r[k].clone();
                for (x, &y) in r[i].iter_mut().zip(&row) {
                    *x |= y;
                }
            }
        }
    }
    r
}

fn brute_components(n: usize, edges: &BTreeSet<(usize, usize)>) -> BTreeSet<Vec<usize>> {
    let r = closure(n, edges);
    (0..n)
        .map(|i| (0..n).filter(|&j| j == i || (r[i][j] && r[j][i])).collect())
        .collect()
}

fn digraph(n: usize, edges: &BTreeSet<(usize, usize)>) -> Digraph {
    Digraph::new(
        (0..n as u64).map(CellIndex),
        edges.iter().map(|&(a, b)| (CellIndex(a as u64), CellIndex(b as u64))),
    )
    .unwrap()
}

fn random_graph() -> impl Strategy<Value = (usize, BTreeSet<(usize, usize)>)> {
    (1usize..40, 0.02f64..0.3).prop_flat_map(|(n, p)| {
        proptest::collection::vec(proptest::bool::weighted(p), n * n).prop_map(move |bits| {
            let edges = bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(k, _)| (k / n, k % n))
                .collect();
            (n, edges)
        })
    })
}

fn random_dag() -> impl Strategy<Value = (usize, BTreeSet<(usize, usize)>)> {
    (1usize..12).prop_flat_map(|n| {
        proptest::collection::vec(proptest::bool::weighted(0.35), n * n).prop_map(move |bits| {
            let edges = bits
                .iter()
                .enumerate()
                .filter(|&(k, &b)| b && k / n < k % n)
                .map(|(k, _)| (k / n, k % n))
                .collect();
            (n, edges)
        })
    })
}

proptest! {
    #[test]
    fn scc_matches_mutual_reachability((n, edges) in random_graph()) {
        let got: BTreeSet<Vec<usize>> = scc(&digraph(n, &edges))
            .into_iter()
            .map(|c| c.into_iter().map(|x| x.0 as usize).collect())
            .collect();
        prop_assert_eq!(got, brute_components(n, &edges));
    }

    #[test]
    fn reduction_keeps_closure_and_is_minimal((n, edges) in random_dag()) {
        let red = transitive_reduction(n, &edges).unwrap();
        prop_assert!(red.is_subset(&edges));
        let full = closure(n, &edges);
        prop_assert_eq!(&closure(n, &red), &full);
        for e in &red {
            let mut fewer = red.clone();
            fewer.remove(e);
            prop_assert_ne!(&closure(n, &fewer), &full);
        }
    }

    #[test]
    fn morse_order_matches_witness_paths((n, edges) in random_graph()) {
        let g = digraph(n, &edges);
        let md = morse_decomposition(&g);
        let r = closure(n, &edges);
        for (a, sa) in md.sets().iter().enumerate() {
            // every set is strongly connected and nontrivial
            let x = sa[0].0 as usize;
            prop_assert!(sa.iter().all(|c| r[x][c.0 as usize] && r[c.0 as usize][x]));
            for (b, sb) in md.sets().iter().enumerate() {
                if a == b { continue; }
                let path = r[x][sb[0].0 as usize];
                prop_assert_eq!(md.order().contains(&(a, b)), path);
            }
        }
        // sizes are non-increasing
        prop_assert!(md.sets().windows(2).all(|w| w[0].len() >= w[1].len()));
    }

    #[test]
    fn names_survive_relabeling((n, edges) in random_graph(), offset in 0u64..1000) {
        // shifting every cell id keeps the relative order of cells
        let g = digraph(n, &edges);
        let moved = Digraph::new(
            (0..n as u64).map(|i| CellIndex(i + offset)),
            edges.iter().map(|&(a, b)| (CellIndex(a as u64 + offset), CellIndex(b as u64 + offset))),
        ).unwrap();
        let a = morse_decomposition(&g);
        let b = morse_decomposition(&moved);
        prop_assert_eq!(a.order(), b.order());
        for (x, y) in a.sets().iter().zip(b.sets()) {
            prop_assert!(x.iter().zip(y).all(|(p, q)| p.0 + offset == q.0));
        }
    }
}

#[test]
fn reachability_rejects_foreign_components() {
    let edges: BTreeSet<(usize, usize)> = [(0, 1)].into_iter().collect();
    let g = digraph(2, &edges);
    // 0 and 1 are not mutually reachable
    assert!(condensation_reachability(&g, &[vec![CellIndex(0), CellIndex(1)]]).is_err());
}
