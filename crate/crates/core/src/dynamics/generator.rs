//! Compiled Lindblad generators acting on (blocks of) operators.

use ndarray::linalg::general_mat_mul;
use ndarray::s;

use crate::algebra::{identity, kron, Matrix, C64, I, ONE, ZERO};
use crate::model::{Modulation, OperatorSchedule};

use super::dissipator::{Coefficient, Dissipator};

/// Fixed per-call cost of a dense product, in multiply-add units.
pub(crate) const PRODUCT_OVERHEAD: f64 = 2000.0;
/// Relative cost of one scalar sparse multiply-add against one inside GEMM.
const SPARSE_PENALTY: f64 = 4.0;
/// Matrices with at most `n² / SPARSE_FRACTION` nonzeros are stored sparse.
const SPARSE_FRACTION: usize = 8;

pub(crate) fn product_cost(n: usize) -> f64 {
    (n as f64).powi(3) + PRODUCT_OVERHEAD
}

/// Operand of a generator term. Blocks of qubit operators are often multiples
/// of the identity and ladder or Pauli operators are sparse.
#[derive(Debug, Clone)]
pub(crate) enum Factor {
    Scalar(C64),
    /// `(row, col, value)` triplets.
    Sparse(Vec<(usize, usize, C64)>),
    Dense(Matrix),
}

impl Factor {
    fn from_matrix(m: Matrix) -> Option<Factor> {
        let n = m.nrows();
        let d0 = m[[0, 0]];
        let scalar = (0..n).all(|i| (0..n).all(|j| if i == j { m[[i, j]] == d0 } else { m[[i, j]] == ZERO }));
        if scalar {
            return (d0 != ZERO).then_some(Factor::Scalar(d0));
        }
        let entries: Vec<_> = m.indexed_iter().filter(|(_, z)| **z != ZERO).map(|((i, j), z)| (i, j, *z)).collect();
        if entries.len() * SPARSE_FRACTION <= n * n {
            Some(Factor::Sparse(entries))
        } else {
            Some(Factor::Dense(m))
        }
    }

    fn to_matrix(&self, n: usize) -> Matrix {
        match self {
            Factor::Scalar(s) => Matrix::from_diag_elem(n, *s),
            Factor::Sparse(e) => {
                let mut m = Matrix::zeros((n, n));
                for &(i, j, z) in e {
                    m[[i, j]] += z;
                }
                m
            }
            Factor::Dense(m) => m.clone(),
        }
    }

    /// Cost of `F·X` or `X·F` for an `n × n` operand.
    fn cost(&self, n: usize) -> f64 {
        match self {
            Factor::Scalar(_) => (n * n) as f64,
            Factor::Sparse(e) => SPARSE_PENALTY * (e.len() * n) as f64,
            Factor::Dense(_) => product_cost(n),
        }
    }
}

fn slices<'a>(x: &'a Matrix, out: &'a mut Matrix) -> (&'a [C64], &'a mut [C64]) {
    (x.as_slice().expect("standard layout"), out.as_slice_mut().expect("standard layout"))
}

/// `out += c·F·X`.
fn left_mul(f: &Factor, c: C64, x: &Matrix, out: &mut Matrix) {
    match f {
        Factor::Scalar(s) => out.scaled_add(c * s, x),
        Factor::Dense(m) => general_mat_mul(c, m, x, ONE, out),
        Factor::Sparse(e) => {
            let n = x.ncols();
            let (xs, os) = slices(x, out);
            for &(r, k, z) in e {
                let w = c * z;
                let src = &xs[k * n..(k + 1) * n];
                for (o, v) in os[r * n..(r + 1) * n].iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
    }
}

/// `out += c·X·F`.
fn right_mul(f: &Factor, c: C64, x: &Matrix, out: &mut Matrix) {
    match f {
        Factor::Scalar(s) => out.scaled_add(c * s, x),
        Factor::Dense(m) => general_mat_mul(c, x, m, ONE, out),
        Factor::Sparse(e) => {
            let n = x.ncols();
            let (xs, os) = slices(x, out);
            let w: Vec<_> = e.iter().map(|&(k, j, z)| (k, j, c * z)).collect();
            for (xr, or) in xs.chunks_exact(n).zip(os.chunks_exact_mut(n)) {
                for &(k, j, z) in &w {
                    or[j] += z * xr[k];
                }
            }
        }
    }
}

/// `out += c·A·X·B`, `tmp` a work matrix.
fn sandwich(a: &Factor, b: &Factor, c: C64, x: &Matrix, out: &mut Matrix, tmp: &mut Matrix) {
    match (a, b) {
        (Factor::Scalar(s), _) => right_mul(b, c * s, x, out),
        (_, Factor::Scalar(s)) => left_mul(a, c * s, x, out),
        (Factor::Sparse(ea), Factor::Sparse(eb)) if ea.len() * eb.len() <= x.nrows() * (ea.len() + eb.len()) => {
            for &(r, k, za) in ea {
                for &(l, j, zb) in eb {
                    out[[r, j]] += c * za * zb * x[[k, l]];
                }
            }
        }
        _ => {
            tmp.fill(ZERO);
            left_mul(a, ONE, x, tmp);
            right_mul(b, c, tmp, out);
        }
    }
}

fn sandwich_cost(a: &Factor, b: &Factor, n: usize) -> f64 {
    match (a, b) {
        (Factor::Scalar(_), f) | (f, Factor::Scalar(_)) => f.cost(n),
        (Factor::Sparse(ea), Factor::Sparse(eb)) if ea.len() * eb.len() <= n * (ea.len() + eb.len()) => {
            SPARSE_PENALTY * (ea.len() * eb.len()) as f64
        }
        _ => a.cost(n) + b.cost(n) + (n * n) as f64,
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Jump {
    pub coeff: Coefficient,
    pub a: Factor,
    pub b: Factor,
}

/// One side of the coherent part, split for evaluation: sparse parts are
/// applied one by one, dense parts are summed and applied with one product.
#[derive(Debug, Clone, Default)]
struct Side {
    sparse: Vec<(Modulation, Factor)>,
    dense: Vec<(Modulation, Matrix)>,
}

impl Side {
    fn compile(parts: &[(Modulation, Matrix)]) -> Side {
        let mut side = Side::default();
        for (m, op) in parts {
            match Factor::from_matrix(op.clone()) {
                None => {}
                Some(Factor::Dense(d)) => side.dense.push((*m, d)),
                Some(f) => side.sparse.push((*m, f)),
            }
        }
        side
    }

    fn cost(&self, n: usize) -> f64 {
        let dense = if self.dense.is_empty() { 0.0 } else { product_cost(n) + ((self.dense.len() - 1) * n * n) as f64 };
        dense + self.sparse.iter().map(|(_, f)| f.cost(n)).sum::<f64>()
    }

    /// `out += c·K(t)·X` (left) or `out += c·X·K(t)` (right).
    fn apply(&self, t: f64, c: C64, x: &Matrix, out: &mut Matrix, work: &mut Matrix, left: bool) {
        let mul = if left { left_mul } else { right_mul };
        for (m, f) in &self.sparse {
            mul(f, c * m.value(t), x, out);
        }
        match self.dense.as_slice() {
            [] => {}
            [(m, d)] => {
                let w = c * m.value(t);
                if left {
                    general_mat_mul(w, d, x, ONE, out)
                } else {
                    general_mat_mul(w, x, d, ONE, out)
                }
            }
            parts => {
                assemble(parts, t, work);
                if left {
                    general_mat_mul(c, work, x, ONE, out)
                } else {
                    general_mat_mul(c, x, work, ONE, out)
                }
            }
        }
    }
}

/// `L(X) = −i K_L(t) X + i X K_R(t) + Σ_k c_k(t) A_k X B_k`, each `K` a sum of
/// modulated matrices with equal modulations merged.
#[derive(Debug, Clone)]
pub(crate) struct Generator {
    pub dim: usize,
    pub left: Vec<(Modulation, Matrix)>,
    pub right: Vec<(Modulation, Matrix)>,
    pub jumps: Vec<Jump>,
    left_ops: Side,
    right_ops: Side,
}

fn add_part(parts: &mut Vec<(Modulation, Matrix)>, m: Modulation, op: Matrix) {
    if let Some((_, acc)) = parts.iter_mut().find(|(k, _)| *k == m) {
        *acc += &op;
    } else {
        parts.push((m, op));
    }
}

fn assemble(parts: &[(Modulation, Matrix)], t: f64, out: &mut Matrix) {
    out.fill(ZERO);
    for (m, op) in parts {
        out.scaled_add(m.value(t), op);
    }
}

impl Generator {
    fn from_parts(
        dim: usize,
        left: Vec<(Modulation, Matrix)>,
        right: Vec<(Modulation, Matrix)>,
        jumps: Vec<Jump>,
    ) -> Self {
        let left_ops = Side::compile(&left);
        let right_ops = Side::compile(&right);
        Generator { dim, left, right, jumps, left_ops, right_ops }
    }

    pub fn new(h: &OperatorSchedule, dissipators: &[Dissipator]) -> Self {
        let dim = h.space().dim();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for term in h.terms() {
            add_part(&mut left, term.modulation, term.operator.clone());
            add_part(&mut right, term.modulation, term.operator.clone());
        }
        let mut jumps = Vec::new();
        for d in dissipators {
            for term in &d.terms {
                let ba = term.b.dot(&term.a);
                for (amp, m) in &term.coeff.0 {
                    add_part(&mut left, *m, &ba * (-0.5 * I * amp));
                    add_part(&mut right, *m, &ba * (0.5 * I * amp));
                }
                let (Some(a), Some(b)) = (Factor::from_matrix(term.a.clone()), Factor::from_matrix(term.b.clone()))
                else {
                    continue;
                };
                jumps.push(Jump { coeff: term.coeff.clone(), a, b });
            }
        }
        Generator::from_parts(dim, left, right, jumps)
    }

    pub fn modulations(&self) -> impl Iterator<Item = Modulation> + '_ {
        self.left
            .iter()
            .chain(&self.right)
            .map(|(m, _)| *m)
            .chain(self.jumps.iter().flat_map(|j| j.coeff.0.iter().map(|(_, m)| *m)))
    }

    pub fn is_constant(&self) -> bool {
        self.modulations().all(|m| m == Modulation::Constant)
    }

    pub fn has_jumps(&self) -> bool {
        !self.jumps.is_empty()
    }

    /// All operators vanish outside the `q × q` grid of `d × d` diagonal blocks.
    pub fn is_block_diagonal(&self, q: usize, d: usize) -> bool {
        let off_block = |m: &Matrix| {
            for i in 0..q * d {
                for j in 0..q * d {
                    if i / d != j / d && m[[i, j]] != ZERO {
                        return false;
                    }
                }
            }
            true
        };
        let factor_ok = |f: &Factor| match f {
            Factor::Scalar(_) => true,
            Factor::Sparse(e) => e.iter().all(|&(i, j, _)| i / d == j / d),
            Factor::Dense(m) => off_block(m),
        };
        self.left.iter().chain(&self.right).all(|(_, m)| off_block(m))
            && self.jumps.iter().all(|j| factor_ok(&j.a) && factor_ok(&j.b))
    }

    /// Generator of block `(i, j)`: `Ẋ_ij = −iK_L^{(i)}X_ij + iX_ij K_R^{(j)} + Σ c A^{(i)} X_ij B^{(j)}`.
    pub fn block(&self, i: usize, j: usize, d: usize) -> Generator {
        let cut = |m: &Matrix, k: usize| m.slice(s![k * d..(k + 1) * d, k * d..(k + 1) * d]).to_owned();
        let cut_factor = |f: &Factor, k: usize| match f {
            Factor::Scalar(s) => Some(Factor::Scalar(*s)),
            Factor::Sparse(_) => Factor::from_matrix(cut(&f.to_matrix(self.dim), k)),
            Factor::Dense(m) => Factor::from_matrix(cut(m, k)),
        };
        let nonzero = |m: &Matrix| m.iter().any(|z| *z != ZERO);
        let left = self.left.iter().map(|(md, m)| (*md, cut(m, i))).filter(|(_, m)| nonzero(m)).collect();
        let right = self.right.iter().map(|(md, m)| (*md, cut(m, j))).filter(|(_, m)| nonzero(m)).collect();
        let jumps = self
            .jumps
            .iter()
            .filter_map(|jump| {
                let a = cut_factor(&jump.a, i)?;
                let b = cut_factor(&jump.b, j)?;
                Some(Jump { coeff: jump.coeff.clone(), a, b })
            })
            .collect();
        Generator::from_parts(d, left, right, jumps)
    }

    /// `out = L(t)[x]`; `scratch` holds two `dim × dim` work matrices.
    pub fn apply(&self, t: f64, x: &Matrix, out: &mut Matrix, scratch: &mut [Matrix; 2]) {
        let [work, tmp] = scratch;
        let owned;
        let x = if x.is_standard_layout() {
            x
        } else {
            owned = x.as_standard_layout().into_owned();
            &owned
        };
        out.fill(ZERO);
        self.left_ops.apply(t, -I, x, out, work, true);
        self.right_ops.apply(t, I, x, out, work, false);
        for jump in &self.jumps {
            let c = jump.coeff.value(t);
            if c != ZERO {
                sandwich(&jump.a, &jump.b, c, x, out, tmp);
            }
        }
    }

    pub fn scratch(&self) -> [Matrix; 2] {
        let n = self.dim;
        [Matrix::zeros((n, n)), Matrix::zeros((n, n))]
    }

    /// `K_L(t)` and `K_R(t)`.
    pub fn effective_hamiltonians(&self, t: f64) -> (Matrix, Matrix) {
        let n = self.dim;
        let mut kl = Matrix::zeros((n, n));
        let mut kr = Matrix::zeros((n, n));
        assemble(&self.left, t, &mut kl);
        assemble(&self.right, t, &mut kr);
        (kl, kr)
    }

    /// Superoperator parts `S(t) = Σ_m f_m(t) S_m` acting on row-major
    /// `vec(X)`, using `vec(AXB) = (A ⊗ Bᵀ) vec(X)`.
    pub fn superoperator(&self) -> Vec<(Modulation, Matrix)> {
        let n = self.dim;
        let id = identity(n);
        let mut parts = Vec::new();
        for (m, k) in &self.left {
            add_part(&mut parts, *m, kron(k, &id) * (-I));
        }
        for (m, k) in &self.right {
            add_part(&mut parts, *m, kron(&id, &k.t().to_owned()) * I);
        }
        for jump in &self.jumps {
            let op = kron(&jump.a.to_matrix(n), &jump.b.to_matrix(n).t().to_owned());
            for (amp, m) in &jump.coeff.0 {
                add_part(&mut parts, *m, &op * *amp);
            }
        }
        parts.retain(|(_, op)| op.iter().any(|z| *z != ZERO));
        parts
    }

    /// Estimated cost of one evaluation of `apply`, in multiply-add units.
    pub fn eval_cost(&self) -> f64 {
        let n = self.dim;
        self.left_ops.cost(n)
            + self.right_ops.cost(n)
            + self.jumps.iter().map(|j| sandwich_cost(&j.a, &j.b, n)).sum::<f64>()
            + (n * n) as f64
    }

    /// Largest absolute entry scale of the constant parts plus all modulation
    /// frequencies; a proxy for the stiffness of the problem.
    pub fn rate_scale(&self) -> f64 {
        let norm = |m: &Matrix| crate::algebra::one_norm(m);
        let k: f64 = self.left.iter().map(|(_, m)| norm(m)).sum::<f64>()
            + self.right.iter().map(|(_, m)| norm(m)).sum::<f64>();
        let f = self.modulations().map(|m| m.frequency().abs()).fold(0.0, f64::max);
        k.max(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{annihilation, dagger, embed, max_abs, sigma_z, HilbertSpace};
    use crate::dynamics::dissipator::{photon_loss, qubit_dephasing, DissipatorKind};
    use ndarray::Array1;

    /// Plain evaluation of `−i[H,X] + Σ c(AXB − ½{BA, X})`.
    fn reference(h: &Matrix, terms: &[(C64, Matrix, Matrix)], x: &Matrix) -> Matrix {
        let mut out = (h.dot(x) - x.dot(h)) * (-I);
        for (c, a, b) in terms {
            let ba = b.dot(a);
            out = out + (a.dot(x).dot(b) - (ba.dot(x) + x.dot(&ba)) * C64::from(0.5)) * *c;
        }
        out
    }

    fn test_space() -> HilbertSpace {
        HilbertSpace::qubits_and_oscillators(2, &[3]).unwrap()
    }

    fn sample_model() -> (OperatorSchedule, Vec<Dissipator>, Matrix) {
        let space = test_space();
        let mut h = OperatorSchedule::new(space.clone());
        let a = embed(&annihilation(3).unwrap(), 2, &space).unwrap().into_data();
        let z1 = embed(&sigma_z(), 0, &space).unwrap().into_data();
        h.push(Modulation::Constant, dagger(&a).dot(&a) * C64::from(1.3)).unwrap();
        h.push(Modulation::Constant, z1.dot(&(&a + &dagger(&a))) * C64::from(0.4)).unwrap();
        let ds = vec![photon_loss(0.7, &space, 2).unwrap(), qubit_dephasing(0.2, &space, 1).unwrap()];
        let x = Matrix::from_shape_fn((12, 12), |(i, j)| C64::new((i * 7 + j) as f64 % 5.0 - 2.0, (i + 3 * j) as f64 % 3.0));
        (h, ds, x)
    }

    #[test]
    fn apply_matches_reference() {
        let (h, ds, x) = sample_model();
        let g = Generator::new(&h, &ds);
        let mut out = Matrix::zeros((12, 12));
        g.apply(0.0, &x, &mut out, &mut g.scratch());
        let hm = h.at(0.0).unwrap().into_data();
        let terms: Vec<_> = ds
            .iter()
            .flat_map(|d| d.terms.iter().map(|t| (t.coeff.value(0.0), t.a.clone(), t.b.clone())))
            .collect();
        let expect = reference(&hm, &terms, &x);
        assert!(max_abs(&(&out - &expect)) < 1e-12);
    }

    #[test]
    fn superoperator_matches_apply() {
        let (h, ds, x) = sample_model();
        let g = Generator::new(&h, &ds);
        let mut out = Matrix::zeros((12, 12));
        g.apply(0.0, &x, &mut out, &mut g.scratch());
        let parts = g.superoperator();
        let vec_x: Array1<C64> = x.iter().copied().collect();
        let mut acc = Array1::<C64>::zeros(144);
        for (m, s) in &parts {
            acc = acc + s.dot(&vec_x) * m.value(0.0);
        }
        let vec_out: Array1<C64> = out.iter().copied().collect();
        let err = (&acc - &vec_out).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn blocks_reproduce_full_action() {
        let (h, ds, x) = sample_model();
        let g = Generator::new(&h, &ds);
        assert!(g.is_block_diagonal(4, 3));
        let mut full = Matrix::zeros((12, 12));
        g.apply(0.0, &x, &mut full, &mut g.scratch());
        for i in 0..4 {
            for j in 0..4 {
                let gb = g.block(i, j, 3);
                let xb = x.slice(s![i * 3..i * 3 + 3, j * 3..j * 3 + 3]).to_owned();
                let mut ob = Matrix::zeros((3, 3));
                gb.apply(0.0, &xb, &mut ob, &mut gb.scratch());
                let expect = full.slice(s![i * 3..i * 3 + 3, j * 3..j * 3 + 3]).to_owned();
                assert!(max_abs(&(&ob - &expect)) < 1e-12);
            }
        }
        // dephasing blocks are scalar
        let b = g.block(0, 1, 3);
        assert!(b.jumps.iter().any(|j| matches!((&j.a, &j.b), (Factor::Scalar(_), Factor::Scalar(_)))));
    }

    #[test]
    fn transverse_jump_breaks_block_structure() {
        let space = test_space();
        let h = OperatorSchedule::new(space.clone());
        let sm = embed(&crate::algebra::sigma_minus(), 0, &space).unwrap().into_data();
        let d = Dissipator::lindblad(DissipatorKind::QubitDecay, Coefficient::constant(1.0), sm);
        assert!(!Generator::new(&h, &[d]).is_block_diagonal(4, 3));
    }
}
