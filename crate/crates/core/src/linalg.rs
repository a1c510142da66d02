//! Small fixed-shape linear algebra for antisymmetric tensors.
//!
//! Everything here is dimension-generic through const generics; in practice
//! the dimensions are 2 to 7 (planar and spatial phase spaces, with or
//! without the time direction).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative rank tolerance shared by the kernel solvers.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A spatial 3-vector (position, momentum or a field strength).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        cross(self, o)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn get(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }

    pub fn to_na(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_na(v: &Vector3<f64>) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

/// A planar 2-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `ε_ij v_j` with `ε_12 = +1`.
    pub fn epsilon(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Right-handed cross product, `ε_123 = +1`.
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    Vec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// Matrix of the map `w ↦ v × w`.
///
/// Note the sign: entry `(i, j)` is `ε_ikj v_k = -ε_ijk v_k`, so this is the
/// negative of [`levi_civita`].
pub fn axial_to_matrix(v: Vec3) -> AntisymMatrix<3> {
    let mut m = AntisymMatrix::zeros();
    m.set(0, 1, -v.z);
    m.set(0, 2, v.y);
    m.set(1, 2, -v.x);
    m
}

/// The contraction `(ṽ)_ij = ε_ijk v_k`, so that `ṽ·w = w × v`.
pub fn levi_civita(v: Vec3) -> AntisymMatrix<3> {
    axial_to_matrix(-v)
}

/// Dense `N×N` matrix whose antisymmetry is structural: only the strict
/// upper triangle can be written, the lower triangle mirrors it with a sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntisymMatrix<const N: usize> {
    m: SMatrix<f64, N, N>,
}

impl<const N: usize> Default for AntisymMatrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> AntisymMatrix<N> {
    pub fn zeros() -> Self {
        AntisymMatrix { m: SMatrix::zeros() }
    }

    /// Builds the matrix from a function evaluated on the strict upper
    /// triangle `i < j`.
    pub fn from_upper(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = Self::zeros();
        for i in 0..N {
            for j in (i + 1)..N {
                a.set(i, j, f(i, j));
            }
        }
        a
    }

    /// Takes the strict upper triangle of `m`; the lower triangle and the
    /// diagonal are ignored.
    pub fn from_upper_of(m: &SMatrix<f64, N, N>) -> Self {
        Self::from_upper(|i, j| m[(i, j)])
    }

    pub const fn dim(&self) -> usize {
        N
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Sets `(i, j)` to `v` and `(j, i)` to `-v`. Setting a diagonal entry
    /// is a programming error.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i != j, "diagonal of an antisymmetric matrix is fixed at zero");
        self.m[(i, j)] = v;
        self.m[(j, i)] = -v;
    }

    /// Adds `v` to `(i, j)` and `-v` to `(j, i)`.
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn as_matrix(&self) -> &SMatrix<f64, N, N> {
        &self.m
    }

    pub fn mul_vec(&self, v: &SVector<f64, N>) -> SVector<f64, N> {
        self.m * v
    }

    pub fn scaled(&self, s: f64) -> Self {
        AntisymMatrix { m: self.m * s }
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|x| x.is_finite())
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        DMatrix::from_column_slice(N, N, self.m.as_slice()).singular_values().max()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.amax()
    }

    pub fn rank(&self, tol: f64) -> usize {
        N - nullspace(self, tol).len()
    }
}

impl<const N: usize> Add for AntisymMatrix<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        AntisymMatrix { m: self.m + o.m }
    }
}

impl<const N: usize> Sub for AntisymMatrix<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        AntisymMatrix { m: self.m - o.m }
    }
}

impl AntisymMatrix<3> {
    pub fn to_mat3(&self) -> Matrix3<f64> {
        self.m
    }

    /// Inverse of [`axial_to_matrix`].
    pub fn axial_vector(&self) -> Vec3 {
        Vec3::new(-self.get(1, 2), self.get(0, 2), -self.get(0, 1))
    }
}

/// Pfaffian by expansion along the first row. Exact combinatorial sum: 1, 3
/// and 15 terms for dimensions 2, 4 and 6.
pub fn pfaffian<const N: usize>(a: &AntisymMatrix<N>) -> Result<f64> {
    if N % 2 != 0 {
        return Err(Error::Dimension(format!("pfaffian of odd dimension {N}")));
    }
    let idx: Vec<usize> = (0..N).collect();
    Ok(pfaffian_rec(a, &idx))
}

fn pfaffian_rec<const N: usize>(a: &AntisymMatrix<N>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    let first = idx[0];
    let mut acc = 0.0;
    let mut rest = Vec::with_capacity(idx.len() - 2);
    for k in 1..idx.len() {
        let entry = a.get(first, idx[k]);
        if entry == 0.0 {
            continue;
        }
        rest.clear();
        rest.extend(idx[1..].iter().enumerate().filter(|&(n, _)| n + 1 != k).map(|(_, &i)| i));
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * entry * pfaffian_rec(a, &rest);
    }
    acc
}

/// Orthonormal basis of `{v : ‖A v‖ ≤ tol·‖A‖}` from the singular value
/// decomposition of `A`. The zero matrix has the full space as kernel.
pub fn nullspace<const N: usize>(a: &AntisymMatrix<N>, tol: f64) -> Vec<SVector<f64, N>> {
    assert!(tol > 0.0, "nullspace tolerance must be positive");
    let svd = DMatrix::from_column_slice(N, N, a.m.as_slice()).svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let cutoff = tol * smax;
    (0..N)
        .filter(|&k| svd.singular_values[k] <= cutoff)
        .map(|k| SVector::<f64, N>::from_fn(|i, _| v_t[(k, i)]))
        .collect()
}

/// `|det|` and inverse of a 3×3 matrix, failing when singular to working
/// precision relative to its scale.
pub(crate) fn invert3(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if m.determinant().abs() <= 1e-14 * scale * scale * scale {
        return None;
    }
    m.try_inverse()
}

pub(crate) fn mat3_mul_vec(m: &Matrix3<f64>, v: Vec3) -> Vec3 {
    Vec3::from_na(&(m * v.to_na()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_basis_orientation() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(cross(x, y), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(cross(y, x), Vec3::new(0.0, 0.0, -1.0));
        let a = Vec3::new(2.0, -3.0, 5.0);
        assert_eq!(cross(a, a), Vec3::ZERO);
    }

    #[test]
    fn axial_matrix_examples() {
        let m = axial_to_matrix(Vec3::new(0.0, 0.0, 1.0));
        let w = nalgebra::Vector3::new(1.0, 0.0, 0.0);
        let out = m.to_mat3() * w;
        assert_eq!(Vec3::from_na(&out), Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(axial_to_matrix(Vec3::ZERO), AntisymMatrix::zeros());
        let v = Vec3::new(0.3, -1.2, 2.5);
        assert_eq!(axial_to_matrix(v).axial_vector(), v);
        // ε_ijk v_k has the opposite orientation.
        assert_eq!(levi_civita(v).get(0, 1), v.z);
    }

    #[test]
    fn antisymmetry_is_structural() {
        let mut a = AntisymMatrix::<4>::zeros();
        a.set(0, 3, 2.5);
        a.add_to(3, 0, 1.0);
        assert_eq!(a.get(0, 3), 1.5);
        assert_eq!(a.get(3, 0), -1.5);
        for i in 0..4 {
            assert_eq!(a.get(i, i), 0.0);
        }
    }

    #[test]
    #[should_panic]
    fn diagonal_cannot_be_set() {
        AntisymMatrix::<3>::zeros().set(1, 1, 1.0);
    }

    #[test]
    fn pfaffian_small_cases() {
        let mut a = AntisymMatrix::<2>::zeros();
        a.set(0, 1, 3.5);
        assert_eq!(pfaffian(&a).unwrap(), 3.5);

        let mut b = AntisymMatrix::<6>::zeros();
        b.set(0, 1, 2.0);
        b.set(2, 3, -3.0);
        b.set(4, 5, 0.5);
        assert_eq!(pfaffian(&b).unwrap(), -3.0);

        assert!(matches!(pfaffian(&AntisymMatrix::<3>::zeros()), Err(Error::Dimension(_))));
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(nullspace(&AntisymMatrix::<3>::zeros(), 1e-10).len(), 3);
        let k = nullspace(&axial_to_matrix(Vec3::new(0.0, 0.0, 1.0)), 1e-10);
        assert_eq!(k.len(), 1);
        assert!((k[0][2].abs() - 1.0).abs() < 1e-14);
        // odd dimension always has a kernel
        let a = AntisymMatrix::<5>::from_upper(|i, j| (i * 5 + j) as f64 * 0.1 + 0.3);
        assert!(!nullspace(&a, 1e-10).is_empty());
    }
}
