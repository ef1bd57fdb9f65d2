//! Dinic maximum flow on small integer networks.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { head: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    /// Adds an arc and returns its id; the reverse arc is `id ^ 1`.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let id = self.to.len();
        self.head[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.head[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
        id
    }

    /// Flow currently on arc `id`.
    pub fn flow(&self, id: usize) -> i64 {
        self.cap[id ^ 1]
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.head.len();
        let mut total = 0;
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &id in &self.head[u] {
                    let v = self.to[id];
                    if self.cap[id] > 0 && level[v] == usize::MAX {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; n];
            loop {
                let pushed = self.push(s, t, i64::MAX, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn push(&mut self, u: usize, t: usize, limit: i64, level: &[usize], next: &mut [usize]) -> i64 {
        if u == t {
            return limit;
        }
        while next[u] < self.head[u].len() {
            let id = self.head[u][next[u]];
            let v = self.to[id];
            if self.cap[id] > 0 && level[v] == level[u] + 1 {
                let got = self.push(v, t, limit.min(self.cap[id]), level, next);
                if got > 0 {
                    self.cap[id] -= got;
                    self.cap[id ^ 1] += got;
                    return got;
                }
            }
            next[u] += 1;
        }
        0
    }
}
