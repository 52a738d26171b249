//! Tensor-product Bernstein coefficients of a polynomial over a box.
//!
//! On a box the polynomial's range lies between the smallest and largest
//! Bernstein coefficient, and the corner coefficients are the values at the
//! box vertices. Subdivision (de Casteljau at the midpoint of one axis)
//! tightens the enclosure.

use num_traits::Zero;

use crate::error::Result;
use crate::scalar::{binomial, midpoint, Rational};

use super::Polynomial;

#[derive(Debug, Clone)]
pub struct BernsteinPatch {
    bounds: Vec<(Rational, Rational)>,
    degs: Vec<usize>,
    strides: Vec<usize>,
    coeffs: Vec<Rational>,
    pub depth: u32,
}

impl BernsteinPatch {
    pub fn new(p: &Polynomial<Rational>, bounds: &[(Rational, Rational)]) -> Result<Self> {
        let n = p.nvars();
        let unit = p.affine_to_unit(bounds)?;
        let degs: Vec<usize> = (0..n).map(|i| p.degree_in(i) as usize).collect();
        let strides = strides_for(&degs);
        let size: usize = degs.iter().map(|d| d + 1).product();
        let mut coeffs = vec![Rational::zero(); size];
        for (alpha, c) in unit.terms() {
            let idx: usize = alpha.exps().iter().zip(&strides).map(|(&e, s)| e as usize * s).sum();
            coeffs[idx] = c.clone();
        }
        // Power basis -> Bernstein basis, one axis at a time:
        // b_k = Σ_{j ≤ k} C(k, j) / C(d, j) a_j.
        for axis in 0..n {
            let d = degs[axis];
            if d == 0 {
                continue;
            }
            let ratio: Vec<Vec<Rational>> = (0..=d)
                .map(|k| {
                    (0..=k)
                        .map(|j| {
                            Rational::new(binomial(k as u32, j as u32), binomial(d as u32, j as u32))
                        })
                        .collect()
                })
                .collect();
            for base in fiber_starts(&degs, &strides, axis) {
                let fiber: Vec<Rational> = (0..=d).map(|k| coeffs[base + k * strides[axis]].clone()).collect();
                for k in 0..=d {
                    let mut acc = Rational::zero();
                    for j in 0..=k {
                        if !fiber[j].is_zero() {
                            acc += &ratio[k][j] * &fiber[j];
                        }
                    }
                    coeffs[base + k * strides[axis]] = acc;
                }
            }
        }
        Ok(BernsteinPatch { bounds: bounds.to_vec(), degs, strides, coeffs, depth: 0 })
    }

    pub fn bounds(&self) -> &[(Rational, Rational)] {
        &self.bounds
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn min_coeff(&self) -> &Rational {
        self.coeffs.iter().min().expect("nonempty tensor")
    }

    pub fn max_coeff(&self) -> &Rational {
        self.coeffs.iter().max().expect("nonempty tensor")
    }

    /// Vertices of the box with the exact polynomial values there.
    pub fn corners(&self) -> Vec<(Vec<Rational>, Rational)> {
        let n = self.degs.len();
        (0..1usize << n)
            .map(|mask| {
                let mut idx = 0;
                let point: Vec<Rational> = (0..n)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            idx += self.degs[i] * self.strides[i];
                            self.bounds[i].1.clone()
                        } else {
                            self.bounds[i].0.clone()
                        }
                    })
                    .collect();
                (point, self.coeffs[idx].clone())
            })
            .collect()
    }

    pub fn center(&self) -> Vec<Rational> {
        self.bounds.iter().map(|(a, b)| midpoint(a, b)).collect()
    }

    /// Axis with the widest side.
    pub fn widest_axis(&self) -> usize {
        let mut best = 0;
        for i in 1..self.bounds.len() {
            let w = &self.bounds[i].1 - &self.bounds[i].0;
            if w > &self.bounds[best].1 - &self.bounds[best].0 {
                best = i;
            }
        }
        best
    }

    /// Split at the midpoint of `axis`.
    pub fn split(&self, axis: usize) -> (BernsteinPatch, BernsteinPatch) {
        let d = self.degs[axis];
        let mut left = self.clone();
        let mut right = self.clone();
        let (a, b) = &self.bounds[axis];
        let m = midpoint(a, b);
        left.bounds[axis].1 = m.clone();
        right.bounds[axis].0 = m;
        left.depth += 1;
        right.depth += 1;
        if d == 0 {
            return (left, right);
        }
        let half = Rational::new(1.into(), 2.into());
        let s = self.strides[axis];
        for base in fiber_starts(&self.degs, &self.strides, axis) {
            let mut work: Vec<Rational> = (0..=d).map(|k| self.coeffs[base + k * s].clone()).collect();
            left.coeffs[base] = work[0].clone();
            right.coeffs[base + d * s] = work[d].clone();
            for r in 1..=d {
                for k in 0..=d - r {
                    work[k] = (&work[k] + &work[k + 1]) * &half;
                }
                left.coeffs[base + r * s] = work[0].clone();
                right.coeffs[base + (d - r) * s] = work[d - r].clone();
            }
        }
        (left, right)
    }
}

fn strides_for(degs: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; degs.len()];
    for i in (0..degs.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * (degs[i + 1] + 1);
    }
    strides
}

/// Flat indices with coordinate 0 along `axis`.
fn fiber_starts(degs: &[usize], strides: &[usize], axis: usize) -> Vec<usize> {
    let size: usize = degs.iter().map(|d| d + 1).product();
    (0..size)
        .filter(|&idx| (idx / strides[axis]) % (degs[axis] + 1) == 0)
        .collect()
}
