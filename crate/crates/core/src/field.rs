//! Prime-field arithmetic over `F_q`, length-`v` symbol vectors, and exact
//! linear-system solving.
//!
//! Elements are stored as least nonnegative residues; the modulus lives in a
//! [`PrimeField`] context that is passed to every operation rather than being
//! carried per element. All arithmetic is exact, so the Gaussian elimination
//! here needs nothing beyond first-nonzero pivoting.

use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// An element of `F_q`, stored as the least nonnegative residue.
///
/// The modulus is carried by the enclosing [`PrimeField`], not per element;
/// mixing elements from different fields is the caller's responsibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(u64);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The prime field `F_q`. Construction validates primality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(PrimeField { q })
    }

    pub fn modulus(self) -> u64 {
        self.q
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem(self, value: u64) -> FieldElement {
        FieldElement(value % self.q)
    }

    pub fn add(self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 + b.0;
        FieldElement(if s >= self.q { s - self.q } else { s })
    }

    pub fn neg(self, a: FieldElement) -> FieldElement {
        FieldElement(if a.0 == 0 { 0 } else { self.q - a.0 })
    }

    pub fn sub(self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(mul_mod(a.0, b.0, self.q))
    }

    pub fn pow(self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a.0;
        let mut acc = 1u64 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(acc, base, self.q);
            }
            base = mul_mod(base, base, self.q);
            e >>= 1;
        }
        FieldElement(acc)
    }

    /// Multiplicative inverse via Fermat: `a^(q-2)`.
    pub fn inv(self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        Ok(self.pow(a, self.q - 2))
    }

    pub fn div(self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn random_element<R: Rng>(self, rng: &mut R) -> FieldElement {
        FieldElement(rng.gen_range(0..self.q))
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Deterministic Miller-Rabin, valid for all u64 with this witness set.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    base %= m;
    let mut acc = 1u64 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

/// A packet of length `v`: an element of `F_{q^v}` viewed as a vector over
/// `F_q`. Addition and scalar multiplication are componentwise; the code
/// never multiplies two packets, only takes `F_q`-linear combinations and
/// dot products.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolVector(Vec<FieldElement>);

impl SymbolVector {
    pub fn new(components: Vec<FieldElement>) -> Self {
        SymbolVector(components)
    }

    pub fn zero(v: usize) -> Self {
        SymbolVector(vec![FieldElement::ZERO; v])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[FieldElement] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &SymbolVector, field: PrimeField) -> Result<SymbolVector, FieldError> {
        if self.len() != other.len() {
            return Err(FieldError::LengthMismatch(self.len(), other.len()));
        }
        Ok(SymbolVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| field.add(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &SymbolVector, field: PrimeField) -> Result<SymbolVector, FieldError> {
        if self.len() != other.len() {
            return Err(FieldError::LengthMismatch(self.len(), other.len()));
        }
        Ok(SymbolVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| field.sub(a, b))
                .collect(),
        ))
    }

    pub fn scaled(&self, c: FieldElement, field: PrimeField) -> SymbolVector {
        SymbolVector(self.0.iter().map(|&a| field.mul(a, c)).collect())
    }

    /// `self += c * other`; the accumulation kernel used by encoding.
    pub fn add_scaled_assign(
        &mut self,
        other: &SymbolVector,
        c: FieldElement,
        field: PrimeField,
    ) -> Result<(), FieldError> {
        if self.len() != other.len() {
            return Err(FieldError::LengthMismatch(self.len(), other.len()));
        }
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a = field.add(*a, field.mul(b, c));
        }
        Ok(())
    }

    pub fn random<R: Rng>(v: usize, field: PrimeField, rng: &mut R) -> SymbolVector {
        SymbolVector((0..v).map(|_| field.random_element(rng)).collect())
    }

    pub fn random_nonzero<R: Rng>(v: usize, field: PrimeField, rng: &mut R) -> SymbolVector {
        loop {
            let s = Self::random(v, field, rng);
            if !s.is_zero() {
                return s;
            }
        }
    }
}

/// The correlation kernel: `x . y = sum_s x_s y_s` in `F_q`.
pub fn dot_product(
    field: PrimeField,
    x: &SymbolVector,
    y: &SymbolVector,
) -> Result<FieldElement, FieldError> {
    if x.len() != y.len() {
        return Err(FieldError::LengthMismatch(x.len(), y.len()));
    }
    let mut acc = FieldElement::ZERO;
    for (&a, &b) in x.components().iter().zip(y.components()) {
        acc = field.add(acc, field.mul(a, b));
    }
    Ok(acc)
}

/// Dense rows x cols matrix over `F_q`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl FieldMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<FieldElement>) -> Result<Self, FieldError> {
        if data.len() != rows * cols {
            return Err(FieldError::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(FieldMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix {
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Result<Self, FieldError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(FieldError::ShapeMismatch("ragged rows".into()));
        }
        Ok(FieldMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: FieldElement) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn select_rows(&self, sel: &[usize]) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(sel.len(), self.cols);
        for (i, &r) in sel.iter().enumerate() {
            for c in 0..self.cols {
                out.set(i, c, self.get(r, c));
            }
        }
        out
    }

    pub fn slice_cols(&self, start: usize, end: usize) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.rows, end - start);
        for r in 0..self.rows {
            for c in start..end {
                out.set(r, c - start, self.get(r, c));
            }
        }
        out
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn mul(&self, other: &FieldMatrix, field: PrimeField) -> Result<FieldMatrix, FieldError> {
        if self.cols != other.rows {
            return Err(FieldError::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = FieldMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = FieldElement::ZERO;
                for k in 0..self.cols {
                    acc = field.add(acc, field.mul(self.get(i, k), other.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Reduced row echelon form; returns the pivot column per pivot row.
    fn rref(&self, field: PrimeField) -> (FieldMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pr = 0;
        for pc in 0..m.cols {
            if pr == m.rows {
                break;
            }
            let Some(pivot_row) = (pr..m.rows).find(|&r| !m.get(r, pc).is_zero()) else {
                continue;
            };
            for c in 0..m.cols {
                let tmp = m.get(pr, c);
                m.set(pr, c, m.get(pivot_row, c));
                m.set(pivot_row, c, tmp);
            }
            let inv = field
                .inv(m.get(pr, pc))
                .expect("pivot is nonzero by selection");
            for c in 0..m.cols {
                m.set(pr, c, field.mul(m.get(pr, c), inv));
            }
            for r in 0..m.rows {
                if r != pr && !m.get(r, pc).is_zero() {
                    let f = m.get(r, pc);
                    for c in 0..m.cols {
                        let v = field.sub(m.get(r, c), field.mul(f, m.get(pr, c)));
                        m.set(r, c, v);
                    }
                }
            }
            pivots.push(pc);
            pr += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self, field: PrimeField) -> usize {
        self.rref(field).1.len()
    }

    /// Any solution of `A x = rhs`, or `None` when the system is inconsistent.
    pub fn solve_any(
        &self,
        rhs: &[FieldElement],
        field: PrimeField,
    ) -> Result<Option<Vec<FieldElement>>, FieldError> {
        if rhs.len() != self.rows {
            return Err(FieldError::ShapeMismatch(format!(
                "rhs length {} for {} rows",
                rhs.len(),
                self.rows
            )));
        }
        let mut aug = FieldMatrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, self.cols, rhs[r]);
        }
        let (red, pivots) = aug.rref(field);
        if pivots.contains(&self.cols) {
            return Ok(None); // a pivot in the rhs column: inconsistent
        }
        let mut x = vec![FieldElement::ZERO; self.cols];
        for (pr, &pc) in pivots.iter().enumerate() {
            x[pc] = red.get(pr, self.cols);
        }
        Ok(Some(x))
    }

    /// A basis for `{x : A x = 0}`.
    pub fn nullspace(&self, field: PrimeField) -> Vec<Vec<FieldElement>> {
        let (red, pivots) = self.rref(field);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::with_capacity(free.len());
        for &fc in &free {
            let mut x = vec![FieldElement::ZERO; self.cols];
            x[fc] = FieldElement::ONE;
            for (pr, &pc) in pivots.iter().enumerate() {
                x[pc] = field.neg(red.get(pr, fc));
            }
            basis.push(x);
        }
        basis
    }
}

/// Solves `A . Z = Y` exactly over `F_q`, where `A` is `m x m` and `Y` holds
/// `m` symbol vectors (one per row). Each of the `v` coordinates is an
/// independent linear system; they share one elimination pass.
pub fn solve_square_system(
    field: PrimeField,
    a: &FieldMatrix,
    y: &[SymbolVector],
) -> Result<Vec<SymbolVector>, FieldError> {
    let m = a.rows();
    if a.cols() != m {
        return Err(FieldError::ShapeMismatch(format!(
            "expected square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if y.len() != m {
        return Err(FieldError::ShapeMismatch(format!(
            "{} right-hand sides for {} rows",
            y.len(),
            m
        )));
    }
    let v = y.first().map_or(0, SymbolVector::len);
    if let Some(bad) = y.iter().find(|s| s.len() != v) {
        return Err(FieldError::LengthMismatch(v, bad.len()));
    }

    // Augmented grid [A | Y] with Y spread out as m x v elements.
    let mut lhs = a.clone();
    let mut rhs: Vec<Vec<FieldElement>> = y.iter().map(|s| s.components().to_vec()).collect();

    for col in 0..m {
        let pivot_row = (col..m)
            .find(|&r| !lhs.get(r, col).is_zero())
            .ok_or(FieldError::SingularMatrix)?;
        if pivot_row != col {
            for c in 0..m {
                let tmp = lhs.get(col, c);
                lhs.set(col, c, lhs.get(pivot_row, c));
                lhs.set(pivot_row, c, tmp);
            }
            rhs.swap(col, pivot_row);
        }
        let inv = field.inv(lhs.get(col, col))?;
        for c in 0..m {
            lhs.set(col, c, field.mul(lhs.get(col, c), inv));
        }
        for x in &mut rhs[col] {
            *x = field.mul(*x, inv);
        }
        for r in 0..m {
            if r == col || lhs.get(r, col).is_zero() {
                continue;
            }
            let f = lhs.get(r, col);
            for c in 0..m {
                let v = field.sub(lhs.get(r, c), field.mul(f, lhs.get(col, c)));
                lhs.set(r, c, v);
            }
            for s in 0..v {
                let vv = field.sub(rhs[r][s], field.mul(f, rhs[col][s]));
                rhs[r][s] = vv;
            }
        }
    }

    Ok(rhs.into_iter().map(SymbolVector::new).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f11() -> PrimeField {
        PrimeField::new(11).unwrap()
    }

    fn sv(field: PrimeField, vals: &[u64]) -> SymbolVector {
        SymbolVector::new(vals.iter().map(|&x| field.elem(x)).collect())
    }

    #[test]
    fn add_examples_mod_11() {
        let f = f11();
        assert_eq!(f.add(f.elem(7), f.elem(8)), f.elem(4));
        assert_eq!(f.add(f.elem(0), f.elem(5)), f.elem(5));
        assert_eq!(f.add(f.elem(6), f.elem(5)), f.elem(0));
    }

    #[test]
    fn mul_examples_mod_11() {
        let f = f11();
        assert_eq!(f.mul(f.elem(7), f.elem(8)), f.elem(1));
        assert_eq!(f.mul(f.elem(1), f.elem(9)), f.elem(9));
        assert_eq!(f.mul(f.elem(0), f.elem(4)), f.elem(0));
    }

    #[test]
    fn inv_examples_mod_11() {
        let f = f11();
        assert_eq!(f.inv(f.elem(7)).unwrap(), f.elem(8));
        assert_eq!(f.inv(f.elem(1)).unwrap(), f.elem(1));
        assert_eq!(f.inv(f.elem(10)).unwrap(), f.elem(10));
        assert_eq!(f.inv(f.elem(0)), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn primality() {
        for q in [2u64, 3, 11, 101, 257, 65521] {
            assert!(is_prime(q), "{q} should be prime");
        }
        for q in [0u64, 1, 4, 9, 21, 100, 65520] {
            assert!(!is_prime(q), "{q} should be composite");
        }
        assert_eq!(PrimeField::new(10), Err(FieldError::NotPrime(10)));
    }

    #[test]
    fn dot_product_examples() {
        let f = f11();
        // 1*4 + 2*5 + 3*6 = 32 = 10 mod 11
        assert_eq!(
            dot_product(f, &sv(f, &[1, 2, 3]), &sv(f, &[4, 5, 6])).unwrap(),
            f.elem(10)
        );
        assert_eq!(
            dot_product(f, &sv(f, &[3, 9, 2]), &SymbolVector::zero(3)).unwrap(),
            FieldElement::ZERO
        );
        assert_eq!(
            dot_product(f, &sv(f, &[1, 0]), &sv(f, &[0, 1])).unwrap(),
            FieldElement::ZERO
        );
        assert_eq!(
            dot_product(f, &sv(f, &[1, 2]), &sv(f, &[1, 2, 3])),
            Err(FieldError::LengthMismatch(2, 3))
        );
    }

    #[test]
    fn field_axioms_randomized() {
        // Associativity, commutativity, distributivity, inverses over random
        // triples for each modulus.
        for q in [11u64, 101, 65521] {
            let f = PrimeField::new(q).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(0x5eed ^ q);
            for _ in 0..10_000 {
                let a = f.random_element(&mut rng);
                let b = f.random_element(&mut rng);
                let c = f.random_element(&mut rng);
                assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                assert_eq!(f.add(a, f.neg(a)), FieldElement::ZERO);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
                }
            }
        }
    }

    #[test]
    fn solve_identity_system() {
        let f = f11();
        let a = FieldMatrix::identity(3);
        let y = vec![sv(f, &[1, 2]), sv(f, &[3, 4]), sv(f, &[5, 6])];
        assert_eq!(solve_square_system(f, &a, &y).unwrap(), y);
    }

    #[test]
    fn solve_hand_example() {
        let f = f11();
        let a = FieldMatrix::from_rows(vec![
            vec![f.elem(1), f.elem(1)],
            vec![f.elem(1), f.elem(2)],
        ])
        .unwrap();
        let y = vec![sv(f, &[3]), sv(f, &[5])];
        let z = solve_square_system(f, &a, &y).unwrap();
        assert_eq!(z, vec![sv(f, &[1]), sv(f, &[2])]);
    }

    #[test]
    fn solve_singular_detected() {
        let f = f11();
        let a = FieldMatrix::from_rows(vec![
            vec![f.elem(1), f.elem(2)],
            vec![f.elem(2), f.elem(4)],
        ])
        .unwrap();
        let y = vec![sv(f, &[3]), sv(f, &[5])];
        assert_eq!(
            solve_square_system(f, &a, &y),
            Err(FieldError::SingularMatrix)
        );
    }

    #[test]
    fn solve_needs_row_swap() {
        let f = f11();
        let a = FieldMatrix::from_rows(vec![
            vec![f.elem(0), f.elem(5)],
            vec![f.elem(3), f.elem(1)],
        ])
        .unwrap();
        let y = vec![sv(f, &[10]), sv(f, &[7])];
        let z = solve_square_system(f, &a, &y).unwrap();
        // Check by substitution.
        for (r, want) in y.iter().enumerate() {
            let mut acc = SymbolVector::zero(1);
            for c in 0..2 {
                acc.add_scaled_assign(&z[c], a.get(r, c), f).unwrap();
            }
            assert_eq!(&acc, want);
        }
    }

    #[test]
    fn rank_solve_any_nullspace() {
        let f = f11();
        let a = FieldMatrix::from_rows(vec![
            vec![f.elem(1), f.elem(2), f.elem(3)],
            vec![f.elem(2), f.elem(4), f.elem(6)],
        ])
        .unwrap();
        assert_eq!(a.rank(f), 1);
        let ns = a.nullspace(f);
        assert_eq!(ns.len(), 2);
        for x in &ns {
            for r in 0..a.rows() {
                let mut acc = FieldElement::ZERO;
                for c in 0..a.cols() {
                    acc = f.add(acc, f.mul(a.get(r, c), x[c]));
                }
                assert_eq!(acc, FieldElement::ZERO);
            }
        }
        // Consistent and inconsistent right-hand sides.
        assert!(a
            .solve_any(&[f.elem(1), f.elem(2)], f)
            .unwrap()
            .is_some());
        assert!(a.solve_any(&[f.elem(1), f.elem(3)], f).unwrap().is_none());
    }

    proptest! {
        #[test]
        fn dot_symmetric_bilinear(
            xs in prop::collection::vec(0u64..11, 1..9),
            ys in prop::collection::vec(0u64..11, 1..9),
            zs in prop::collection::vec(0u64..11, 1..9),
            c in 0u64..11,
        ) {
            let f = f11();
            let n = xs.len().min(ys.len()).min(zs.len());
            let x = sv(f, &xs[..n]);
            let y = sv(f, &ys[..n]);
            let z = sv(f, &zs[..n]);
            let c = f.elem(c);

            let xy = dot_product(f, &x, &y).unwrap();
            prop_assert_eq!(xy, dot_product(f, &y, &x).unwrap());

            // (x + c*z) . y = x.y + c*(z.y)
            let mut xcz = x.clone();
            xcz.add_scaled_assign(&z, c, f).unwrap();
            let lhs = dot_product(f, &xcz, &y).unwrap();
            let rhs = f.add(xy, f.mul(c, dot_product(f, &z, &y).unwrap()));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn solve_round_trips(seed in any::<u64>(), m in 1usize..6, v in 1usize..5) {
            let f = PrimeField::new(101).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let a = FieldMatrix::new(
                m,
                m,
                (0..m * m).map(|_| f.random_element(&mut rng)).collect(),
            ).unwrap();
            let y: Vec<SymbolVector> =
                (0..m).map(|_| SymbolVector::random(v, f, &mut rng)).collect();
            match solve_square_system(f, &a, &y) {
                Err(FieldError::SingularMatrix) => {
                    prop_assert!(a.rank(f) < m);
                }
                Ok(z) => {
                    // A * Z must reproduce Y exactly, coordinate by coordinate.
                    for r in 0..m {
                        let mut acc = SymbolVector::zero(v);
                        for c in 0..m {
                            acc.add_scaled_assign(&z[c], a.get(r, c), f).unwrap();
                        }
                        prop_assert_eq!(&acc, &y[r]);
                    }
                }
                Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
            }
        }
    }
}
