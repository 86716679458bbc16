//! Sparse LU factorization of simplex bases with product-form eta updates.
//!
//! Left-looking factorization with partial pivoting over a dense workspace:
//! basis column j is solved against the first j pivots, then the largest
//! remaining entry is chosen as pivot j. FTRAN/BTRAN run over the factors
//! plus the eta file accumulated since the last refactorization.

/// Columns of the constraint matrix in compressed sparse column form.
#[derive(Debug, Clone)]
pub struct ColMatrix {
    pub rows: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl ColMatrix {
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[a..b], &self.values[a..b])
    }

    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }
}

#[derive(Debug)]
pub struct SingularBasis;

/// One product-form update: entering column spike and the basis row it
/// replaced.
struct Eta {
    row: usize,
    diag: f64,
    /// Off-pivot entries (row position, value).
    entries: Vec<(usize, f64)>,
}

pub struct BasisFactors {
    m: usize,
    /// L columns: (original row, value), unit diagonal implicit.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// U columns: entries strictly above the diagonal (pivot position, value).
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    /// original row -> pivot position
    row_pos: Vec<usize>,
    /// pivot position -> original row
    pos_row: Vec<usize>,
    etas: Vec<Eta>,
    work: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-10;
const DROP_TOL: f64 = 1e-12;

impl BasisFactors {
    /// Factorize the basis given by `basic` columns of `matrix`.
    pub fn factorize(matrix: &ColMatrix, basic: &[usize]) -> Result<Self, SingularBasis> {
        let m = matrix.rows;
        assert_eq!(basic.len(), m);
        let mut f = BasisFactors {
            m,
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            row_pos: vec![usize::MAX; m],
            pos_row: vec![usize::MAX; m],
            etas: Vec::new(),
            work: vec![0.0; m],
        };
        // Sparse left-looking elimination: only positions reachable from the
        // column's pattern are visited, in ascending pivot order via a
        // min-heap worklist.
        let mut w = std::mem::take(&mut f.work);
        let mut touched: Vec<usize> = Vec::with_capacity(64);
        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
            std::collections::BinaryHeap::with_capacity(64);
        let mut in_heap = vec![false; m];
        for (j, &col) in basic.iter().enumerate() {
            let (rows, vals) = matrix.col(col);
            for (&r, &v) in rows.iter().zip(vals) {
                if w[r] == 0.0 {
                    touched.push(r);
                }
                w[r] += v;
                let pos = f.row_pos[r];
                if pos != usize::MAX && !in_heap[pos] {
                    in_heap[pos] = true;
                    heap.push(std::cmp::Reverse(pos));
                }
            }
            while let Some(std::cmp::Reverse(k)) = heap.pop() {
                in_heap[k] = false;
                let wk = w[f.pos_row[k]];
                if wk == 0.0 {
                    continue;
                }
                for &(orig, lv) in &f.l_cols[k] {
                    if w[orig] == 0.0 {
                        touched.push(orig);
                    }
                    w[orig] -= lv * wk;
                    let pos = f.row_pos[orig];
                    if pos != usize::MAX && !in_heap[pos] {
                        in_heap[pos] = true;
                        heap.push(std::cmp::Reverse(pos));
                    }
                }
            }
            // Pivot: largest remaining entry among non-pivotal rows; lowest
            // row index on ties for determinism.
            touched.sort_unstable();
            let mut piv_row = usize::MAX;
            let mut piv_val = 0.0f64;
            for &r in &touched {
                if f.row_pos[r] == usize::MAX {
                    let a = w[r].abs();
                    if a > piv_val {
                        piv_val = a;
                        piv_row = r;
                    }
                }
            }
            if piv_val < PIVOT_TOL {
                for &r in &touched {
                    w[r] = 0.0;
                }
                f.work = w;
                return Err(SingularBasis);
            }
            let pivot = w[piv_row];
            let mut ucol = Vec::new();
            let mut lcol = Vec::new();
            for &r in &touched {
                let v = w[r];
                w[r] = 0.0;
                if v == 0.0 || r == piv_row {
                    continue;
                }
                match f.row_pos[r] {
                    usize::MAX => {
                        if (v / pivot).abs() > DROP_TOL {
                            lcol.push((r, v / pivot));
                        }
                    }
                    pos => {
                        if v.abs() > DROP_TOL {
                            ucol.push((pos, v));
                        }
                    }
                }
            }
            touched.clear();
            ucol.sort_unstable_by_key(|&(pos, _)| pos);
            f.row_pos[piv_row] = j;
            f.pos_row[j] = piv_row;
            f.u_diag.push(pivot);
            f.u_cols.push(ucol);
            f.l_cols.push(lcol);
        }
        f.work = w;
        Ok(f)
    }

    pub fn eta_count(&self) -> usize {
        self.etas.len()
    }

    /// Record a basis change: `spike_nz` holds the nonzeros of the entering
    /// column's FTRAN and `row` the basis position it replaces. Fails if the
    /// pivot element is numerically unusable (caller should refactorize).
    pub fn push_eta(&mut self, row: usize, spike_nz: &[(usize, f64)], diag: f64) -> Result<(), SingularBasis> {
        if diag.abs() < PIVOT_TOL {
            return Err(SingularBasis);
        }
        let entries: Vec<(usize, f64)> = spike_nz
            .iter()
            .filter(|&&(i, v)| i != row && v.abs() > DROP_TOL)
            .copied()
            .collect();
        self.etas.push(Eta { row, diag, entries });
        Ok(())
    }

    /// Solve B x = b; `x` is indexed by basis position.
    pub fn ftran(&self, b: &[f64], x: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            x[k] = b[self.pos_row[k]];
        }
        for k in 0..m {
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            for &(orig, lv) in &self.l_cols[k] {
                x[self.row_pos[orig]] -= lv * xk;
            }
        }
        for k in (0..m).rev() {
            let xk = x[k] / self.u_diag[k];
            x[k] = xk;
            if xk == 0.0 {
                continue;
            }
            for &(pos, uv) in &self.u_cols[k] {
                x[pos] -= uv * xk;
            }
        }
        for eta in &self.etas {
            let xr = x[eta.row] / eta.diag;
            x[eta.row] = xr;
            if xr == 0.0 {
                continue;
            }
            for &(i, v) in &eta.entries {
                x[i] -= v * xr;
            }
        }
    }

    /// Solve B^T y = c; `c` is indexed by basis position, `y` by original row.
    pub fn btran(&self, c: &[f64], y: &mut [f64]) {
        let m = self.m;
        let mut z = c.to_vec();
        for eta in self.etas.iter().rev() {
            let mut dot = 0.0;
            for &(i, v) in &eta.entries {
                dot += v * z[i];
            }
            z[eta.row] = (z[eta.row] - dot) / eta.diag;
        }
        // U^T w = z (forward), then L^T z = w (backward).
        for k in 0..m {
            let mut acc = z[k];
            for &(pos, uv) in &self.u_cols[k] {
                acc -= uv * z[pos];
            }
            z[k] = acc / self.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut acc = z[k];
            for &(orig, lv) in &self.l_cols[k] {
                acc -= lv * z[self.row_pos[orig]];
            }
            z[k] = acc;
        }
        for k in 0..m {
            y[self.pos_row[k]] = z[k];
        }
    }
}
