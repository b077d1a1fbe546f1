//! Vertex functions and edge functions.
//!
//! A `OneForm` stores one value per edge in the edge's stored orientation;
//! reading it against the orientation negates.

use std::ops::{Add, Index, IndexMut, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroForm<T = f64>(pub Vec<T>);

#[derive(Clone, Debug, PartialEq)]
pub struct OneForm<T = f64>(pub Vec<T>);

impl<T: Copy + Default> ZeroForm<T> {
    pub fn zeros(n: usize) -> Self {
        ZeroForm(vec![T::default(); n])
    }

    pub fn delta(n: usize, v: usize, value: T) -> Self {
        let mut z = Self::zeros(n);
        z.0[v] = value;
        z
    }
}

impl<T: Copy + Default> OneForm<T> {
    pub fn zeros(n: usize) -> Self {
        OneForm(vec![T::default(); n])
    }

    /// Indicator-type form with `value` on edge `e` and zero elsewhere.
    pub fn delta(n: usize, e: usize, value: T) -> Self {
        let mut w = Self::zeros(n);
        w.0[e] = value;
        w
    }
}

impl<T: Copy + Neg<Output = T>> OneForm<T> {
    /// Value on edge `e`, traversed against its orientation when `reversed`.
    pub fn oriented(&self, e: usize, reversed: bool) -> T {
        if reversed {
            -self.0[e]
        } else {
            self.0[e]
        }
    }
}

impl<T> ZeroForm<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T> OneForm<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl ZeroForm<i64> {
    pub fn to_real(&self) -> ZeroForm {
        ZeroForm(self.0.iter().map(|&x| x as f64).collect())
    }
}

impl OneForm<i64> {
    pub fn to_real(&self) -> OneForm {
        OneForm(self.0.iter().map(|&x| x as f64).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "form length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ZeroForm {
    /// `(f, g)_0 = Σ_v f_v g_v`.
    pub fn inner(&self, other: &ZeroForm) -> f64 {
        dot(&self.0, &other.0)
    }
}

impl OneForm {
    /// `(ω, η)_1 = Σ_e ω_e η_e` over stored orientations.
    pub fn inner(&self, other: &OneForm) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn scale(&self, s: f64) -> OneForm {
        OneForm(self.0.iter().map(|x| x * s).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Reduce every value to `(-π, π]`.
    pub fn wrapped(&self) -> OneForm {
        OneForm(self.0.iter().map(|&x| wrap_angle(x)).collect())
    }
}

impl ZeroForm {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Representative of `x mod 2π` in `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

macro_rules! elementwise {
    ($form:ident) => {
        impl<T> Index<usize> for $form<T> {
            type Output = T;
            fn index(&self, i: usize) -> &T {
                &self.0[i]
            }
        }
        impl<T> IndexMut<usize> for $form<T> {
            fn index_mut(&mut self, i: usize) -> &mut T {
                &mut self.0[i]
            }
        }
        impl<T: Copy + Add<Output = T>> Add for &$form<T> {
            type Output = $form<T>;
            fn add(self, rhs: Self) -> $form<T> {
                assert_eq!(self.0.len(), rhs.0.len(), "form length mismatch");
                $form(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
            }
        }
        impl<T: Copy + Sub<Output = T>> Sub for &$form<T> {
            type Output = $form<T>;
            fn sub(self, rhs: Self) -> $form<T> {
                assert_eq!(self.0.len(), rhs.0.len(), "form length mismatch");
                $form(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
            }
        }
    };
}

elementwise!(ZeroForm);
elementwise!(OneForm);
