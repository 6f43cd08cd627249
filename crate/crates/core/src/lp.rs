//! Dense two-phase simplex with Bland's rule, generic over exact rationals and
//! tolerance-guarded floats.
//!
//! Solves `maximize c·x subject to A x = b, x >= 0`.

use std::fmt::Debug;

use num_traits::{One, Signed, Zero};

use crate::rational::Q;

pub trait Scalar: Clone + Debug {
    fn zero_s() -> Self;
    fn one_s() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn is_zero_s(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn less(&self, o: &Self) -> bool;
}

impl Scalar for Q {
    fn zero_s() -> Self {
        Zero::zero()
    }
    fn one_s() -> Self {
        One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_zero_s(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn less(&self, o: &Self) -> bool {
        self < o
    }
}

/// Float pivots treat magnitudes below this as zero.
pub const FLOAT_TOL: f64 = 1e-9;

impl Scalar for f64 {
    fn zero_s() -> Self {
        0.0
    }
    fn one_s() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_zero_s(&self) -> bool {
        self.abs() <= FLOAT_TOL
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_TOL
    }
    fn less(&self, o: &Self) -> bool {
        self < o
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<T>, value: T },
}

impl<T> LpOutcome<T> {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

struct Tableau<T> {
    /// m rows, each `ncols + 1` long; the last entry is the right-hand side.
    rows: Vec<Vec<T>>,
    /// Reduced costs followed by minus the objective value.
    obj: Vec<T>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.div(&p);
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero_s() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v = v.sub(&f.mul(pv));
            }
            row[c] = T::zero_s();
        }
        if !self.obj[c].is_zero_s() {
            let f = self.obj[c].clone();
            for (v, pv) in self.obj.iter_mut().zip(&prow) {
                *v = v.sub(&f.mul(pv));
            }
        }
        self.obj[c] = T::zero_s();
        self.basis[r] = c;
    }

    /// Rebuilds reduced costs for objective `c` given the current basis.
    fn set_objective(&mut self, c: &[T]) {
        let mut obj: Vec<T> = c.to_vec();
        obj.push(T::zero_s());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = c[b].clone();
            if cb.is_zero_s() {
                continue;
            }
            for (v, rv) in obj.iter_mut().zip(&self.rows[r]) {
                *v = v.sub(&cb.mul(rv));
            }
        }
        self.obj = obj;
    }

    /// Bland's rule iterations; returns false if unbounded.
    fn optimize(&mut self, allowed: &[bool]) -> bool {
        let rhs = self.ncols;
        loop {
            let Some(enter) = (0..self.ncols).find(|&j| allowed[j] && self.obj[j].is_pos()) else {
                return true;
            };
            let mut best: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_pos() {
                    continue;
                }
                let ratio = row[rhs].div(&row[enter]);
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        // Bland: ties go to the smallest basic variable
                        let tie = !br.less(&ratio) && self.basis[i] < self.basis[bi];
                        if ratio.less(&br) || tie {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

/// Maximizes `c·x` over `{x >= 0 : a x = b}`; `a` is given by rows.
pub fn maximize<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> LpOutcome<T> {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    let ncols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        assert_eq!(row.len(), n);
        let flip = b[i].is_neg();
        let mut t: Vec<T> = row
            .iter()
            .map(|v| if flip { T::zero_s().sub(v) } else { v.clone() })
            .collect();
        for k in 0..m {
            t.push(if k == i { T::one_s() } else { T::zero_s() });
        }
        t.push(if flip { T::zero_s().sub(&b[i]) } else { b[i].clone() });
        rows.push(t);
    }
    let mut tab = Tableau {
        rows,
        obj: Vec::new(),
        basis: (n..n + m).collect(),
        ncols,
    };

    // phase I: maximize minus the sum of artificials
    let mut phase1 = vec![T::zero_s(); ncols];
    for v in phase1.iter_mut().skip(n) {
        *v = T::zero_s().sub(&T::one_s());
    }
    tab.set_objective(&phase1);
    let all = vec![true; ncols];
    tab.optimize(&all);
    let infeasibility = tab.obj[ncols].clone();
    if !infeasibility.is_zero_s() {
        return LpOutcome::Infeasible;
    }

    // drive zero-valued artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] < n {
            r += 1;
            continue;
        }
        match (0..n).find(|&j| !tab.rows[r][j].is_zero_s()) {
            Some(j) => {
                tab.pivot(r, j);
                r += 1;
            }
            None => {
                tab.rows.remove(r);
                tab.basis.remove(r);
            }
        }
    }

    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(T::zero_s(), m));
    tab.set_objective(&cost);
    let allowed: Vec<bool> = (0..ncols).map(|j| j < n).collect();
    if !tab.optimize(&allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![T::zero_s(); n];
    for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
        if bv < n {
            x[bv] = row[ncols].clone();
        }
    }
    let value = x
        .iter()
        .zip(c)
        .fold(T::zero_s(), |acc, (xi, ci)| acc.add(&xi.mul(ci)));
    LpOutcome::Optimal { x, value }
}

/// Whether `{x >= 0 : a x = b}` is nonempty.
pub fn feasible<T: Scalar>(a: &[Vec<T>], b: &[T]) -> bool {
    let n = a.first().map_or(0, Vec::len);
    maximize(a, b, &vec![T::zero_s(); n]).is_feasible()
}
