//! Graph and network calculus: normalized adjacency, personalized-PageRank
//! diffusion, and the PTDF sensitivity matrix for DC power flow.

use crate::uc::Network;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetcalcError {
    #[error("empty graph")]
    EmptyGraph,
    #[error("network is not connected")]
    Disconnected,
    #[error("matrix power must be at least 1, got {0}")]
    BadPower(usize),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("singular linear system")]
    Singular,
}

/// Dense row-major matrix of f64, the workhorse value type for the numeric
/// layers in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        DenseMat { rows: r, cols: c, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max_abs_diff(&self, other: &DenseMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Sparse matrix in sorted coordinate form; no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    /// (row, col, value), sorted by (row, col), coordinates unique.
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.retain(|&(_, _, v)| v != 0.0);
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for pair in entries.windows(2) {
            assert!(
                (pair[0].0, pair[0].1) != (pair[1].0, pair[1].1),
                "duplicate coordinate ({}, {})",
                pair[0].0,
                pair[0].1
            );
        }
        for &(r, c, _) in &entries {
            assert!(r < rows && c < cols, "coordinate ({r}, {c}) outside {rows}x{cols}");
        }
        SparseMatrix { rows, cols, entries }
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut m = DenseMat::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m.set(r, c, v);
        }
        m
    }

    /// Apply to a dense matrix: `self * x`. Summation order is fixed by the
    /// sorted entry order, so results do not depend on threading.
    pub fn apply(&self, x: &DenseMat) -> Result<DenseMat, NetcalcError> {
        if self.cols != x.rows {
            return Err(NetcalcError::DimMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, x.rows, x.cols
            )));
        }
        let mut out = DenseMat::zeros(self.rows, x.cols);
        for &(r, c, v) in &self.entries {
            let src = c * x.cols;
            let dst = r * x.cols;
            for k in 0..x.cols {
                out.data[dst + k] += v * x.data[src + k];
            }
        }
        Ok(out)
    }

    /// Coordinate-list text dump for debugging and external cross-checks.
    pub fn to_coord_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.rows, self.cols, self.entries.len());
        for &(r, c, v) in &self.entries {
            let _ = writeln!(s, "{r} {c} {v:.12}");
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Dense LU with partial pivoting
// ---------------------------------------------------------------------------

/// LU factors of a dense square matrix with row partial pivoting.
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &DenseMat) -> Result<Self, NetcalcError> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best < 1e-12 {
                return Err(NetcalcError::Singular);
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let diag = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / diag;
                lu[i * n + k] = factor;
                for j in k + 1..n {
                    lu[i * n + j] -= factor * lu[k * n + j];
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let permuted: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 1..n {
            let mut sum = b[i];
            for j in 0..i {
                sum -= self.lu[i * n + j] * b[j];
            }
            b[i] = sum;
        }
        for i in (0..n).rev() {
            let mut sum = b[i];
            for j in i + 1..n {
                sum -= self.lu[i * n + j] * b[j];
            }
            b[i] = sum / self.lu[i * n + i];
        }
    }
}

// ---------------------------------------------------------------------------
// Graph operators
// ---------------------------------------------------------------------------

/// Self-loop-added, degree-normalized adjacency of the bus graph.
pub fn normalized_adjacency(net: &Network) -> Result<SparseMatrix, NetcalcError> {
    let n = net.bus_count();
    if n == 0 {
        return Err(NetcalcError::EmptyGraph);
    }
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        adj[i][i] = true;
    }
    for line in &net.lines {
        let (i, j) = match (net.bus_index(line.from), net.bus_index(line.to)) {
            (Some(i), Some(j)) => (i, j),
            _ => continue,
        };
        adj[i][j] = true;
        adj[j][i] = true;
    }
    let degree: Vec<f64> = (0..n)
        .map(|i| adj[i].iter().filter(|&&e| e).count() as f64)
        .collect();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] {
                entries.push((i, j, 1.0 / (degree[i] * degree[j]).sqrt()));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(n, n, entries))
}

/// Apply `m` to `x` exactly `p` times without ever materializing a dense
/// matrix power.
pub fn matrix_power_apply(m: &SparseMatrix, x: &DenseMat, p: usize) -> Result<DenseMat, NetcalcError> {
    if p < 1 {
        return Err(NetcalcError::BadPower(p));
    }
    let mut acc = m.apply(x)?;
    for _ in 1..p {
        acc = m.apply(&acc)?;
    }
    Ok(acc)
}

/// Personalized-PageRank diffusion operator with per-column top-k
/// sparsification and column-sum rescaling.
pub fn ppr_diffusion(a_norm: &SparseMatrix, alpha: f64, top_k: usize) -> Result<SparseMatrix, NetcalcError> {
    ppr_diffusion_with_options(a_norm, alpha, top_k, true)
}

/// As [`ppr_diffusion`], with the post-sparsification column rescaling
/// controllable. Rescaling restores each column to its pre-sparsification sum
/// so diffusion mass stays comparable across nodes.
pub fn ppr_diffusion_with_options(
    a_norm: &SparseMatrix,
    alpha: f64,
    top_k: usize,
    rescale: bool,
) -> Result<SparseMatrix, NetcalcError> {
    assert!(alpha > 0.0 && alpha < 1.0, "teleport probability must lie in (0,1)");
    let n = a_norm.rows;
    assert_eq!(n, a_norm.cols, "adjacency must be square");

    // M = I + (alpha - 1) * A_norm; S = alpha * M^{-1}.
    let mut m = DenseMat::identity(n);
    for &(r, c, v) in &a_norm.entries {
        m.data[r * n + c] += (alpha - 1.0) * v;
    }
    let lu = DenseLu::factor(&m)?;

    let mut entries = Vec::new();
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = alpha;
        lu.solve(&mut col);

        let col_sum: f64 = col.iter().sum();
        let mut order: Vec<usize> = (0..n).collect();
        // Highest entries first; index ascending keeps ties deterministic.
        order.sort_by(|&a, &b| col[b].partial_cmp(&col[a]).unwrap().then(a.cmp(&b)));
        let kept = &mut order[..top_k.min(n)];
        kept.sort_unstable();
        let kept_sum: f64 = kept.iter().map(|&i| col[i]).sum();
        let scale = if rescale && kept_sum.abs() > 1e-300 { col_sum / kept_sum } else { 1.0 };
        for &i in kept.iter() {
            let v = col[i] * scale;
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(n, n, entries))
}

// ---------------------------------------------------------------------------
// PTDF
// ---------------------------------------------------------------------------

/// Line-flow sensitivities to bus injections under DC power flow, with the
/// reference bus as the withdrawal point. Rows follow the line order in the
/// network; columns follow the bus order.
#[derive(Debug, Clone)]
pub struct PtdfMatrix {
    pub lines: usize,
    pub buses: usize,
    /// Row-major, `lines x buses`.
    pub data: Vec<f64>,
    pub reference_index: usize,
}

impl PtdfMatrix {
    #[inline]
    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.data[line * self.buses + bus]
    }

    pub fn row(&self, line: usize) -> &[f64] {
        &self.data[line * self.buses..(line + 1) * self.buses]
    }

    /// Line flows for a vector of net bus injections (any imbalance is
    /// implicitly absorbed at the reference bus).
    pub fn flows(&self, injections: &[f64]) -> Vec<f64> {
        assert_eq!(injections.len(), self.buses);
        (0..self.lines)
            .map(|l| {
                self.row(l)
                    .iter()
                    .zip(injections)
                    .map(|(p, inj)| p * inj)
                    .sum()
            })
            .collect()
    }
}

/// Build the PTDF matrix from line reactances via the reduced susceptance
/// Laplacian (reference row/column removed, one solve per line).
pub fn compute_ptdf(net: &Network) -> Result<PtdfMatrix, NetcalcError> {
    let n = net.bus_count();
    if n == 0 {
        return Err(NetcalcError::EmptyGraph);
    }
    if !net.is_connected() {
        return Err(NetcalcError::Disconnected);
    }
    let ref_idx = net
        .bus_index(net.reference_bus)
        .ok_or(NetcalcError::Disconnected)?;
    let lines = net.lines.len();
    let mut ptdf = PtdfMatrix { lines, buses: n, data: vec![0.0; lines * n], reference_index: ref_idx };
    if n == 1 {
        return Ok(ptdf);
    }

    // Reduced index map: bus position -> row in the reduced system.
    let reduced: Vec<Option<usize>> = (0..n)
        .map(|i| match i.cmp(&ref_idx) {
            std::cmp::Ordering::Less => Some(i),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(i - 1),
        })
        .collect();
    let m = n - 1;
    let mut b_red = DenseMat::zeros(m, m);
    for line in &net.lines {
        let b = 1.0 / line.reactance;
        let i = net.bus_index(line.from).expect("validated");
        let j = net.bus_index(line.to).expect("validated");
        if let Some(ri) = reduced[i] {
            b_red.data[ri * m + ri] += b;
        }
        if let Some(rj) = reduced[j] {
            b_red.data[rj * m + rj] += b;
        }
        if let (Some(ri), Some(rj)) = (reduced[i], reduced[j]) {
            b_red.data[ri * m + rj] -= b;
            b_red.data[rj * m + ri] -= b;
        }
    }
    let lu = DenseLu::factor(&b_red)?;

    let mut rhs = vec![0.0; m];
    for (l, line) in net.lines.iter().enumerate() {
        let b = 1.0 / line.reactance;
        let i = net.bus_index(line.from).expect("validated");
        let j = net.bus_index(line.to).expect("validated");
        rhs.iter_mut().for_each(|v| *v = 0.0);
        if let Some(ri) = reduced[i] {
            rhs[ri] += 1.0;
        }
        if let Some(rj) = reduced[j] {
            rhs[rj] -= 1.0;
        }
        lu.solve(&mut rhs);
        for bus in 0..n {
            if let Some(rb) = reduced[bus] {
                ptdf.data[l * n + bus] = b * rhs[rb];
            }
        }
    }
    Ok(ptdf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uc::Line;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn net(buses: usize, lines: &[(usize, usize, f64, f64)], reference: usize) -> Network {
        Network {
            buses: (0..buses).collect(),
            lines: lines
                .iter()
                .enumerate()
                .map(|(id, &(from, to, reactance, flow_limit))| Line { id, from, to, reactance, flow_limit })
                .collect(),
            reference_bus: reference,
        }
    }

    pub(crate) fn random_connected_net(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Network {
        let mut lines = Vec::new();
        for i in 1..n {
            let j = rng.gen_range(0..i);
            lines.push((i, j, rng.gen_range(0.05..0.3), rng.gen_range(5.0..50.0)));
        }
        for _ in 0..extra {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                lines.push((i, j, rng.gen_range(0.05..0.3), rng.gen_range(5.0..50.0)));
            }
        }
        net(n, &lines, 0)
    }

    #[test]
    fn adjacency_two_bus() {
        let a = normalized_adjacency(&net(2, &[(0, 1, 0.1, 10.0)], 0)).unwrap();
        let d = a.to_dense();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((d.get(i, j) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn adjacency_single_bus() {
        let a = normalized_adjacency(&net(1, &[], 0)).unwrap();
        assert_eq!(a.entries, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn adjacency_path_graph_middle_row() {
        let a = normalized_adjacency(&net(3, &[(0, 1, 0.1, 10.0), (1, 2, 0.1, 10.0)], 0)).unwrap();
        let d = a.to_dense();
        assert!((d.get(1, 0) - 1.0 / 6f64.sqrt()).abs() < 1e-12);
        assert!((d.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);
        assert!((d.get(1, 2) - 1.0 / 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adjacency_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..10);
            let extra = rng.gen_range(0..4);
            let network = random_connected_net(&mut rng, n, extra);
            let a = normalized_adjacency(&network).unwrap().to_dense();
            for i in 0..n {
                for j in 0..n {
                    assert!((a.get(i, j) - a.get(j, i)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn adjacency_row_sums_are_one_on_regular_graphs() {
        // Ring of 4 buses: every node has degree 3 after self-loops.
        let network = net(4, &[(0, 1, 0.1, 10.0), (1, 2, 0.1, 10.0), (2, 3, 0.1, 10.0), (3, 0, 0.1, 10.0)], 0);
        let a = normalized_adjacency(&network).unwrap().to_dense();
        for i in 0..4 {
            let row_sum: f64 = (0..4).map(|j| a.get(i, j)).sum();
            assert!((row_sum - 1.0).abs() < 1e-12);
        }
    }

    fn naive_matmul(a: &DenseMat, b: &DenseMat) -> DenseMat {
        let mut out = DenseMat::zeros(a.rows, b.cols);
        for i in 0..a.rows {
            for k in 0..a.cols {
                for j in 0..b.cols {
                    out.data[i * b.cols + j] += a.get(i, k) * b.get(k, j);
                }
            }
        }
        out
    }

    #[test]
    fn power_apply_matches_naive_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for r in 0..5 {
            for c in 0..5 {
                if rng.gen_bool(0.6) {
                    entries.push((r, c, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let m = SparseMatrix::from_triplets(5, 5, entries);
        let x = DenseMat::from_rows((0..5).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect());

        let p1 = matrix_power_apply(&m, &x, 1).unwrap();
        assert_eq!(p1.max_abs_diff(&m.apply(&x).unwrap()), 0.0);

        let md = m.to_dense();
        let naive3 = naive_matmul(&md, &naive_matmul(&md, &naive_matmul(&md, &x)));
        let p3 = matrix_power_apply(&m, &x, 3).unwrap();
        assert!(p3.max_abs_diff(&naive3) < 1e-12);

        let ident = SparseMatrix::from_triplets(5, 5, (0..5).map(|i| (i, i, 1.0)).collect());
        for p in [1, 2, 5] {
            assert_eq!(matrix_power_apply(&ident, &x, p).unwrap(), x);
        }
        assert!(matrix_power_apply(&m, &x, 0).is_err());
    }

    /// Truncated-series oracle for the PPR operator.
    pub(crate) fn ppr_series(a_norm: &SparseMatrix, alpha: f64, terms: usize) -> DenseMat {
        let n = a_norm.rows;
        let mut sum = DenseMat::identity(n);
        for v in sum.data.iter_mut() {
            *v *= alpha;
        }
        let mut power = DenseMat::identity(n);
        let mut coeff = alpha;
        for _ in 1..=terms {
            power = a_norm.apply(&power).unwrap();
            coeff *= 1.0 - alpha;
            for (dst, src) in sum.data.iter_mut().zip(&power.data) {
                *dst += coeff * src;
            }
        }
        sum
    }

    #[test]
    fn ppr_single_node_is_one() {
        let a = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 1.0)]);
        let s = ppr_diffusion(&a, 0.3, 1).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert!((s.entries[0].2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ppr_two_bus_worked_value() {
        let a = normalized_adjacency(&net(2, &[(0, 1, 0.1, 10.0)], 0)).unwrap();
        let s = ppr_diffusion(&a, 0.5, 2).unwrap().to_dense();
        let expect = [[0.75, 0.25], [0.25, 0.75]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.get(i, j) - expect[i][j]).abs() < 1e-12, "({i},{j}) = {}", s.get(i, j));
            }
        }
        let series = ppr_series(&a, 0.5, 40);
        assert!(s.max_abs_diff(&series) < 1e-9);
    }

    #[test]
    fn ppr_high_teleport_concentrates_on_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let network = random_connected_net(&mut rng, 8, 5);
        let a = normalized_adjacency(&network).unwrap();
        let s = ppr_diffusion(&a, 0.99, 8).unwrap().to_dense();
        let ident = DenseMat::identity(8);
        assert!(s.max_abs_diff(&ident) < 0.05);
    }

    /// Smallest truncation for which the geometric tail bound (1-alpha)^(N+1)
    /// drops below the requested tolerance.
    pub(crate) fn series_terms_for(alpha: f64, tol: f64) -> usize {
        let mut n = 1usize;
        while (1.0 - alpha).powi(n as i32 + 1) > tol {
            n += 1;
        }
        n.max(40)
    }

    #[test]
    fn ppr_full_topk_matches_series_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..15 {
            let n = rng.gen_range(2..=12);
            let extra = rng.gen_range(0..5);
            let network = random_connected_net(&mut rng, n, extra);
            let a = normalized_adjacency(&network).unwrap();
            for alpha in [0.1, 0.15, 0.5] {
                let closed = ppr_diffusion(&a, alpha, n).unwrap().to_dense();
                let series = ppr_series(&a, alpha, series_terms_for(alpha, 1e-7));
                assert!(closed.max_abs_diff(&series) < 1e-6, "alpha={alpha} n={n}");
                // A 40-term truncation can only be expected to agree up to
                // its geometric tail.
                let series40 = ppr_series(&a, alpha, 40);
                let tail = (1.0 - alpha).powi(41);
                assert!(closed.max_abs_diff(&series40) <= tail * 1.01 + 1e-9, "alpha={alpha} n={n}");
            }
        }
    }

    #[test]
    fn ppr_sparsified_columns_keep_their_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let network = random_connected_net(&mut rng, 10, 6);
        let a = normalized_adjacency(&network).unwrap();
        let full = ppr_diffusion(&a, 0.15, 10).unwrap().to_dense();
        let sparse = ppr_diffusion(&a, 0.15, 3).unwrap().to_dense();
        for j in 0..10 {
            let full_sum: f64 = (0..10).map(|i| full.get(i, j)).sum();
            let sparse_sum: f64 = (0..10).map(|i| sparse.get(i, j)).sum();
            assert!((full_sum - sparse_sum).abs() < 1e-9);
            let nnz = (0..10).filter(|&i| sparse.get(i, j) != 0.0).count();
            assert!(nnz <= 3);
        }
    }

    #[test]
    fn ptdf_two_bus_row() {
        let p = compute_ptdf(&net(2, &[(0, 1, 0.1, 10.0)], 1)).unwrap();
        assert!((p.get(0, 0) - 1.0).abs() < 1e-9);
        assert_eq!(p.get(0, 1), 0.0);
    }

    #[test]
    fn ptdf_triangle_flow_split() {
        // Lines: 0-2, 0-1, 1-2 with equal reactance, reference bus 2,
        // injection at bus 0.
        let network = net(3, &[(0, 2, 0.1, 10.0), (0, 1, 0.1, 10.0), (1, 2, 0.1, 10.0)], 2);
        let p = compute_ptdf(&network).unwrap();
        let flows = p.flows(&[1.0, 0.0, 0.0]);
        assert!((flows[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((flows[1] - 1.0 / 3.0).abs() < 1e-9);
        assert!((flows[2] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn ptdf_reference_only_injection_has_zero_flows() {
        let network = net(3, &[(0, 1, 0.1, 10.0), (1, 2, 0.2, 10.0)], 1);
        let p = compute_ptdf(&network).unwrap();
        let flows = p.flows(&[0.0, 7.5, 0.0]);
        for f in flows {
            assert_eq!(f, 0.0);
        }
    }

    #[test]
    fn ptdf_rows_bounded_and_reference_column_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.gen_range(2..=10);
            let extra = rng.gen_range(0..5);
            let network = random_connected_net(&mut rng, n, extra);
            let p = compute_ptdf(&network).unwrap();
            for l in 0..p.lines {
                assert_eq!(p.get(l, p.reference_index), 0.0);
                for b in 0..n {
                    assert!(p.get(l, b).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn ptdf_superposition_and_flow_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let n = rng.gen_range(2..=10);
            let extra = rng.gen_range(1..5);
            let network = random_connected_net(&mut rng, n, extra);
            let p = compute_ptdf(&network).unwrap();
            let inj1: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let inj2: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let sum: Vec<f64> = inj1.iter().zip(&inj2).map(|(a, b)| a + b).collect();
            let f1 = p.flows(&inj1);
            let f2 = p.flows(&inj2);
            let fs = p.flows(&sum);
            for l in 0..p.lines {
                assert!((f1[l] + f2[l] - fs[l]).abs() < 1e-12);
            }
            // Net flow into each non-reference bus equals its injection.
            let mut into = vec![0.0; n];
            for (l, line) in network.lines.iter().enumerate() {
                let i = network.bus_index(line.from).unwrap();
                let j = network.bus_index(line.to).unwrap();
                into[i] -= f1[l];
                into[j] += f1[l];
            }
            for b in 0..n {
                if b != p.reference_index {
                    assert!((into[b] + inj1[b]).abs() < 1e-8, "bus {b}");
                }
            }
        }
    }

    #[test]
    fn disconnected_network_is_rejected() {
        let network = net(3, &[(0, 1, 0.1, 10.0)], 0);
        assert!(matches!(compute_ptdf(&network), Err(NetcalcError::Disconnected)));
    }

    #[test]
    fn coord_text_dump_is_stable() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(1, 0, 0.25), (0, 1, 0.5)]);
        assert_eq!(m.to_coord_text(), "2 2 2\n0 1 0.500000000000\n1 0 0.250000000000\n");
    }
}
