//! Maximum bipartite matching (Hopcroft–Karp).

use std::collections::VecDeque;

const NIL: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl Matching {
    pub fn empty(n_left: usize, n_right: usize) -> Self {
        Matching { left: vec![NIL; n_left], right: vec![NIL; n_right] }
    }

    pub fn size(&self) -> usize {
        self.left.iter().filter(|&&r| r != NIL).count()
    }

    pub fn is_perfect(&self) -> bool {
        self.left.len() == self.right.len() && self.left.iter().all(|&r| r != NIL)
    }

    pub fn mate_of_left(&self, l: usize) -> Option<usize> {
        (self.left[l] != NIL).then_some(self.left[l])
    }

    pub fn mate_of_right(&self, r: usize) -> Option<usize> {
        (self.right[r] != NIL).then_some(self.right[r])
    }

    pub fn set(&mut self, l: usize, r: usize) {
        self.left[l] = r;
        self.right[r] = l;
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left.iter().enumerate().filter(|(_, &r)| r != NIL).map(|(l, &r)| (l, r))
    }
}

/// Maximum matching from scratch; `adj[l]` lists the right neighbours of `l`.
pub fn hopcroft_karp(n_left: usize, n_right: usize, adj: &[Vec<usize>]) -> Matching {
    let mut m = Matching::empty(n_left, n_right);
    augment(&mut m, adj);
    m
}

/// Grows `m` to a maximum matching by shortest augmenting paths.
pub fn augment(m: &mut Matching, adj: &[Vec<usize>]) {
    let n_left = m.left.len();
    let mut dist = vec![0usize; n_left];
    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for l in 0..n_left {
            if m.left[l] == NIL {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = NIL;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let next = m.right[r];
                if next == NIL {
                    found = true;
                } else if dist[next] == NIL {
                    dist[next] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            return;
        }
        let mut progressed = false;
        for l in 0..n_left {
            if m.left[l] == NIL && dfs(l, m, adj, &mut dist) {
                progressed = true;
            }
        }
        if !progressed {
            return;
        }
    }
}

fn dfs(l: usize, m: &mut Matching, adj: &[Vec<usize>], dist: &mut [usize]) -> bool {
    for &r in &adj[l] {
        let next = m.right[r];
        if next == NIL || (dist[next] == dist[l].wrapping_add(1) && dfs(next, m, adj, dist)) {
            m.set(l, r);
            return true;
        }
    }
    dist[l] = NIL;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_max(n_left: usize, adj: &[Vec<usize>], used: &mut Vec<bool>, l: usize) -> usize {
        if l == n_left {
            return 0;
        }
        let mut best = brute_max(n_left, adj, used, l + 1);
        for &r in &adj[l] {
            if !used[r] {
                used[r] = true;
                best = best.max(1 + brute_max(n_left, adj, used, l + 1));
                used[r] = false;
            }
        }
        best
    }

    #[test]
    fn complete_is_perfect() {
        let adj = vec![vec![0, 1, 2]; 3];
        let m = hopcroft_karp(3, 3, &adj);
        assert!(m.is_perfect());
    }

    #[test]
    fn augments_partial() {
        // l0 greedily took r0, blocking l1.
        let adj = vec![vec![0, 1], vec![0]];
        let mut m = Matching::empty(2, 2);
        m.set(0, 0);
        augment(&mut m, &adj);
        assert_eq!(m.left, vec![1, 0]);
    }

    proptest! {
        #[test]
        fn size_matches_brute_force(edges in proptest::collection::vec((0usize..6, 0usize..6), 0..20)) {
            let mut adj = vec![Vec::new(); 6];
            for (l, r) in edges {
                if !adj[l].contains(&r) { adj[l].push(r); }
            }
            let m = hopcroft_karp(6, 6, &adj);
            for (l, r) in m.pairs() {
                prop_assert!(adj[l].contains(&r));
                prop_assert_eq!(m.right[r], l);
            }
            prop_assert_eq!(m.size(), brute_max(6, &adj, &mut vec![false; 6], 0));
        }
    }
}
