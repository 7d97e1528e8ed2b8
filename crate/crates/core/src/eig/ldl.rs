//! Envelope (skyline) LDLᴴ factorisation of a sparse Hermitian positive
//! definite matrix under reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::sparse::CsrMatrix;

/// Reverse Cuthill-McKee ordering; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix<Complex64>) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_last = |start: usize, visited: &[bool]| -> usize {
        let mut seen = visited.to_vec();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        last
    };

    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .unwrap();
        // two sweeps toward a pseudo-peripheral vertex
        let start = bfs_last(bfs_last(seed, &visited), &visited);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    /// Row `i` holds `L[i, first[i]..i]` at `start[i]..start[i + 1]`.
    start: Vec<usize>,
    lower: Vec<Complex64>,
    diag: Vec<f64>,
}

impl EnvelopeLdl {
    /// Factor `a`. Returns `None` if a pivot is not strictly positive.
    pub fn factor(a: &CsrMatrix<Complex64>) -> Option<EnvelopeLdl> {
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i]));
        }
        let mut lower = vec![Complex64::default(); start[n]];
        let mut diag = vec![0.0; n];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn < new {
                    lower[start[new] + jn - first[new]] = v;
                } else if jn == new {
                    diag[new] = v.re;
                }
            }
        }
        // Row-wise Crout: while row i is processed, its entries hold L·D.
        for i in 0..n {
            let fi = first[i];
            let row_i = start[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = lower[row_i + j - fi];
                let row_j = start[j];
                for k in lo..j {
                    s -= lower[row_i + k - fi] * lower[row_j + k - fj].conj();
                }
                lower[row_i + j - fi] = s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let u = lower[row_i + j - fi];
                let l = u / diag[j];
                d -= (l * u.conj()).re;
                lower[row_i + j - fi] = l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            diag[i] = d;
        }
        Some(EnvelopeLdl {
            perm,
            inv,
            first,
            start,
            lower,
            diag,
        })
    }

    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.diag.len();
        let mut y: Vec<Complex64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for (l, yj) in row.iter().zip(&y[fi..i]) {
                s -= l * yj;
            }
            y[i] = s;
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= d;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (l, yj) in row.iter().zip(y[fi..i].iter_mut()) {
                *yj -= l.conj() * xi;
            }
        }
        let mut x = vec![Complex64::default(); n];
        for (old, xo) in x.iter_mut().enumerate() {
            *xo = y[self.inv[old]];
        }
        x
    }
}
