//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use glkit::structures::DecisionSet;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn theta(rng: &mut ChaCha8Rng, d: usize, max: u64) -> Vec<u64> {
    (0..d).map(|_| rng.gen_range(1..=max)).collect()
}

/// Integer θ for 1-sets with a unique largest entry.
pub fn one_set_theta(rng: &mut ChaCha8Rng, d: usize) -> Vec<u64> {
    loop {
        let t = theta(rng, d, 9);
        let max = *t.iter().max().unwrap();
        if t.iter().filter(|&&v| v == max).count() == 1 {
            return t;
        }
    }
}

pub fn random_mset(rng: &mut ChaCha8Rng) -> DecisionSet {
    let d = rng.gen_range(2..=8);
    let m = rng.gen_range(1..=d.min(4));
    DecisionSet::mset(d, m).unwrap()
}

/// DAG on `0..n` with edges going forward, every edge on some 0→n−1 path.
pub fn random_dag(rng: &mut ChaCha8Rng, max_paths: usize) -> DecisionSet {
    loop {
        let n = rng.gen_range(4..=10);
        let p = rng.gen_range(0.25..0.6);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        // Keep edges between nodes reachable from 0 and co-reachable to n−1.
        let mut fwd = vec![false; n];
        fwd[0] = true;
        for &(u, v) in &edges {
            if fwd[u] {
                fwd[v] = true;
            }
        }
        let mut bwd = vec![false; n];
        bwd[n - 1] = true;
        for &(u, v) in edges.iter().rev() {
            if bwd[v] {
                bwd[u] = true;
            }
        }
        let kept: Vec<(usize, usize)> = edges.into_iter().filter(|&(u, v)| fwd[u] && bwd[v]).collect();
        if kept.len() < 2 {
            continue;
        }
        let set = DecisionSet::path_dag(n, kept, 0, n - 1).unwrap();
        match set.enumerate(max_paths) {
            Ok(all) if all.len() >= 2 => return set,
            _ => continue,
        }
    }
}

pub fn random_matching(rng: &mut ChaCha8Rng, max_size: usize) -> DecisionSet {
    loop {
        let left = rng.gen_range(2..=4);
        let right = rng.gen_range(2..=4);
        let mut edges = Vec::new();
        for l in 0..left {
            for r in 0..right {
                if rng.gen_bool(0.6) {
                    edges.push((l, r));
                }
            }
        }
        edges.shuffle(rng);
        if edges.len() < 2 {
            continue;
        }
        let perfect = left == right && rng.gen_bool(0.5);
        let Ok(set) = DecisionSet::matching(left, right, edges, perfect) else { continue };
        match set.enumerate(max_size) {
            Ok(all) if all.len() >= 2 => {
                if set.check_covering().unwrap().uncovered.is_empty() {
                    return set;
                }
            }
            _ => continue,
        }
    }
}

pub fn random_perfect_matching(rng: &mut ChaCha8Rng) -> DecisionSet {
    loop {
        let n = rng.gen_range(2..=4);
        let mut edges = Vec::new();
        // A random permutation guarantees one perfect matching.
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for l in 0..n {
            for r in 0..n {
                if perm[l] == r || rng.gen_bool(0.4) {
                    edges.push((l, r));
                }
            }
        }
        let set = DecisionSet::matching(n, n, edges, true).unwrap();
        let all = set.enumerate(200).unwrap();
        if all.len() >= 2 && set.check_covering().unwrap().uncovered.is_empty() {
            return set;
        }
    }
}

/// Explicit family of distinct nonempty decisions covering every coordinate.
pub fn random_explicit(rng: &mut ChaCha8Rng) -> DecisionSet {
    loop {
        let d = rng.gen_range(2..=6);
        let k = rng.gen_range(2..=10);
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for _ in 0..k {
            let row: Vec<u8> = (0..d).map(|_| rng.gen_bool(0.5) as u8).collect();
            if row.iter().any(|&b| b == 1) && !rows.contains(&row) {
                rows.push(row);
            }
        }
        if rows.len() < 2 || (0..d).any(|i| rows.iter().all(|r| r[i] == 0)) {
            continue;
        }
        return DecisionSet::explicit(rows).unwrap();
    }
}

/// One instance of each kind in rotation.
pub fn random_structure(rng: &mut ChaCha8Rng, k: usize) -> DecisionSet {
    match k % 5 {
        0 => random_mset(rng),
        1 => random_dag(rng, 200),
        2 => random_matching(rng, 200),
        3 => random_perfect_matching(rng),
        _ => random_explicit(rng),
    }
}
