//! Coordinate vectors for the algebra, its dual, the representation space and its dual.
//!
//! All four share one storage type; the newtypes keep pairings honest.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DVector;

macro_rules! coordinate_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(pub DVector<f64>);

        impl $name {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(DVector::from_vec(coords))
            }

            pub fn from_slice(coords: &[f64]) -> Self {
                Self(DVector::from_column_slice(coords))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(DVector::zeros(dim))
            }

            pub fn basis(dim: usize, i: usize) -> Self {
                let mut v = DVector::zeros(dim);
                v[i] = 1.0;
                Self(v)
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn coords(&self) -> &DVector<f64> {
                &self.0
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn max_abs(&self) -> f64 {
                self.0.amax()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }

            pub fn scale(&self, s: f64) -> Self {
                Self(&self.0 * s)
            }

            /// `self += s * other`
            pub fn axpy(&mut self, s: f64, other: &Self) {
                self.0.axpy(s, &other.0, 1.0);
            }

            pub fn dot(&self, other: &Self) -> f64 {
                self.0.dot(&other.0)
            }
        }

        impl From<DVector<f64>> for $name {
            fn from(v: DVector<f64>) -> Self {
                Self(v)
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl IndexMut<usize> for $name {
            fn index_mut(&mut self, i: usize) -> &mut f64 {
                &mut self.0[i]
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                $name(&self.0 + &rhs.0)
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                $name(&self.0 - &rhs.0)
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl Sub<&$name> for $name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                $name(self.0 - &rhs.0)
            }
        }

        impl Add<&$name> for $name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                $name(self.0 + &rhs.0)
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-self.0)
            }
        }

        impl Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-&self.0)
            }
        }

        impl Mul<f64> for $name {
            type Output = $name;
            fn mul(self, s: f64) -> $name {
                $name(self.0 * s)
            }
        }

        impl Mul<f64> for &$name {
            type Output = $name;
            fn mul(self, s: f64) -> $name {
                $name(&self.0 * s)
            }
        }

        impl AddAssign<&$name> for $name {
            fn add_assign(&mut self, rhs: &$name) {
                self.0 += &rhs.0;
            }
        }

        impl SubAssign<&$name> for $name {
            fn sub_assign(&mut self, rhs: &$name) {
                self.0 -= &rhs.0;
            }
        }
    };
}

coordinate_vector!(
    /// Element of the Lie algebra in the chosen basis.
    AlgebraVector
);
coordinate_vector!(
    /// Element of the dual of the Lie algebra (momenta).
    CoVector
);
coordinate_vector!(
    /// Element of the representation space `U`.
    UVector
);
coordinate_vector!(
    /// Element of the dual space `U*` (advected quantities).
    UCoVector
);

impl CoVector {
    pub fn pair(&self, v: &AlgebraVector) -> f64 {
        self.0.dot(&v.0)
    }
}

impl UCoVector {
    pub fn pair(&self, a: &UVector) -> f64 {
        self.0.dot(&a.0)
    }
}
