mod common;

use common::BruteTree;
use lpcomp::embeddings::{CompressionModulus, Tree, TreeEmbedding};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn compare(brute: &BruteTree, tree: Tree, xi: Vec<f64>, p: f64) {
    let (rho, lip) = brute.curve(&xi, p);
    let emb = TreeEmbedding::new(tree, p, xi).unwrap();
    let tc = emb.compression_curve().unwrap();
    assert_eq!(tc.curve.max_t() as usize, rho.len());
    for (t, r) in tc.curve.samples.iter() {
        let b = rho[*t as usize - 1];
        assert!((r - b).abs() <= 1e-12 * b.max(1.0), "t = {t}: {r} vs {b}");
    }
    assert!((tc.lipschitz - lip).abs() <= 1e-12 * lip.max(1.0));
}

#[test]
fn binary_tree_depth_six() {
    let f = CompressionModulus::Power { a: 0.7 };
    let emb = TreeEmbedding::binary_from_modulus(6, &f, 2.0).unwrap();
    let brute = BruteTree::binary(6);
    compare(&brute, Tree::BinaryRooted(6), emb.xi.clone(), 2.0);
    let general = Tree::from_edges(127, &brute.edges(), 0).unwrap();
    compare(&brute, general, emb.xi, 2.0);
}

#[test]
fn random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..12 {
        let n = rng.gen_range(2..=200);
        let parent: Vec<usize> = (0..n).map(|v| if v == 0 { 0 } else { rng.gen_range(0..v) }).collect();
        let brute = BruteTree { parent, root: 0 };
        let tree = Tree::from_edges(n, &brute.edges(), 0).unwrap();
        let mut xi = vec![0.0, 0.0];
        while xi.len() < 2 * n + 2 {
            let last = *xi.last().unwrap();
            xi.push(last + rng.gen_range(0.0..1.0));
        }
        let p = [1.0, 2.0, 3.0][trial % 3];
        compare(&brute, tree, xi, p);
    }
}
