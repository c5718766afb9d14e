//! Finite simplicial complexes embedded affinely in ℝ^n.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};

use crate::config::TOL;
use crate::error::{Error, Result};
use crate::subspace::Subspace;

/// Precomputed affine data of one simplex.
#[derive(Debug, Clone)]
pub struct SimplexGeom {
    pub base: DVector<f64>,
    /// Edge vectors v_i − v_0 as columns.
    pub edges: DMatrix<f64>,
    /// (EᵀE)⁻¹Eᵀ, mapping a point to affine coordinates.
    pinv: DMatrix<f64>,
    pub center: DVector<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct PlComplex {
    ambient: usize,
    vertices: Vec<DVector<f64>>,
    simplices: Vec<Vec<usize>>,
    geom: Vec<SimplexGeom>,
    index: HashMap<Vec<usize>, usize>,
}

fn faces(s: &[usize]) -> Vec<Vec<usize>> {
    let k = s.len();
    (1u32..(1 << k))
        .map(|mask| {
            (0..k)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| s[i])
                .collect()
        })
        .collect()
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|i| i as f64).product()
}

impl PlComplex {
    /// Complex generated by `tops` and all their faces.
    pub fn new_closed(ambient: usize, vertices: Vec<Vec<f64>>, tops: &[Vec<usize>]) -> Result<Self> {
        let mut all = BTreeSet::new();
        for t in tops {
            let mut t = t.clone();
            t.sort_unstable();
            t.dedup();
            for f in faces(&t) {
                all.insert(f);
            }
        }
        Self::build(ambient, vertices, all.into_iter().collect())
    }

    /// Complex from an explicit simplex list that must be closed under faces.
    pub fn from_listed(ambient: usize, vertices: Vec<Vec<f64>>, simplices: &[Vec<usize>]) -> Result<Self> {
        let listed: BTreeSet<Vec<usize>> = simplices
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.sort_unstable();
                s
            })
            .collect();
        for s in &listed {
            for f in faces(s) {
                if !listed.contains(&f) {
                    return Err(Error::Invalid(format!(
                        "face {f:?} of simplex {s:?} is not listed"
                    )));
                }
            }
        }
        Self::build(ambient, vertices, listed.into_iter().collect())
    }

    fn build(ambient: usize, vertices: Vec<Vec<f64>>, mut simplices: Vec<Vec<usize>>) -> Result<Self> {
        let vertices: Vec<DVector<f64>> = vertices
            .into_iter()
            .map(|v| {
                if v.len() != ambient {
                    Err(Error::Invalid(format!("vertex {v:?} not in ℝ^{ambient}")))
                } else {
                    Ok(DVector::from_vec(v))
                }
            })
            .collect::<Result<_>>()?;
        simplices.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        let mut geom = Vec::with_capacity(simplices.len());
        for s in &simplices {
            if s.len() != {
                let mut u = s.clone();
                u.dedup();
                u.len()
            } {
                return Err(Error::Invalid(format!("repeated vertex in {s:?}")));
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::Invalid(format!("vertex index {bad} out of range")));
            }
            if s.len() > ambient + 1 {
                return Err(Error::Invalid(format!("simplex {s:?} too large for ℝ^{ambient}")));
            }
            let base = vertices[s[0]].clone();
            let d = s.len() - 1;
            let mut edges = DMatrix::zeros(ambient, d);
            for (j, &i) in s[1..].iter().enumerate() {
                edges.set_column(j, &(&vertices[i] - &base));
            }
            let gram = edges.tr_mul(&edges);
            let vol = gram.determinant().max(0.0).sqrt() / factorial(d);
            if d > 0 && vol <= TOL.simplex_volume {
                return Err(Error::Invalid(format!("degenerate simplex {s:?} (volume {vol:e})")));
            }
            let pinv = if d == 0 {
                DMatrix::zeros(0, ambient)
            } else {
                gram.try_inverse()
                    .ok_or_else(|| Error::Invalid(format!("degenerate simplex {s:?}")))?
                    * edges.transpose()
            };
            let center = s.iter().fold(DVector::zeros(ambient), |a, &i| a + &vertices[i]) / s.len() as f64;
            let radius = s
                .iter()
                .map(|&i| (&vertices[i] - &center).norm())
                .fold(0.0, f64::max);
            geom.push(SimplexGeom {
                base,
                edges,
                pinv,
                center,
                radius,
            });
        }
        let index = simplices.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self {
            ambient,
            vertices,
            simplices,
            geom,
            index,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn simplex_dim(&self, i: usize) -> usize {
        self.simplices[i].len() - 1
    }

    pub fn geom(&self, i: usize) -> &SimplexGeom {
        &self.geom[i]
    }

    pub fn find(&self, verts: &[usize]) -> Option<usize> {
        let mut v = verts.to_vec();
        v.sort_unstable();
        self.index.get(&v).copied()
    }

    pub fn top_dim(&self) -> usize {
        self.simplices.last().map(|s| s.len() - 1).unwrap_or(0)
    }

    /// Longest edge.
    pub fn mesh(&self) -> f64 {
        self.simplices
            .iter()
            .filter(|s| s.len() == 2)
            .map(|s| (&self.vertices[s[0]] - &self.vertices[s[1]]).norm())
            .fold(0.0, f64::max)
    }

    /// Ids of simplices having `i` as a proper face.
    pub fn cofaces(&self, i: usize) -> Vec<usize> {
        let s = &self.simplices[i];
        (0..self.simplices.len())
            .filter(|&j| {
                let t = &self.simplices[j];
                t.len() > s.len() && s.iter().all(|v| t.contains(v))
            })
            .collect()
    }

    /// Faces (including itself) of simplex `i`.
    pub fn faces_of(&self, i: usize) -> Vec<usize> {
        faces(&self.simplices[i])
            .into_iter()
            .filter_map(|f| self.find(&f))
            .collect()
    }

    /// Affine coordinates (λ_0, …, λ_d) of the projection of `x` onto the
    /// affine hull of simplex `i`, and the distance from `x` to that hull.
    pub fn barycentric(&self, i: usize, x: &DVector<f64>) -> (Vec<f64>, f64) {
        let g = &self.geom[i];
        let rel = x - &g.base;
        let mu = &g.pinv * &rel;
        let foot = &g.edges * &mu;
        let dist = (rel - foot).norm();
        let mut lam = Vec::with_capacity(mu.len() + 1);
        lam.push(1.0 - mu.sum());
        lam.extend(mu.iter());
        (lam, dist)
    }

    /// The simplex whose relative interior contains `x`.
    pub fn locate(&self, x: &DVector<f64>, tol: f64) -> Option<usize> {
        // lowest dimension first so boundary points land on faces
        (0..self.simplices.len()).find(|&i| {
            let g = &self.geom[i];
            if (x - &g.center).norm() > g.radius + tol {
                return false;
            }
            let (lam, dist) = self.barycentric(i, x);
            dist <= tol && lam.iter().all(|&l| l > tol)
                || (lam.len() == 1 && dist <= tol)
        })
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.distance(x).0 <= tol
    }

    /// Exact Euclidean distance, nearest point and the simplex whose relative
    /// interior carries it.
    pub fn distance(&self, x: &DVector<f64>) -> (f64, DVector<f64>, usize) {
        self.distance_among(x, 0..self.simplices.len())
    }

    /// Distance restricted to a set of simplices closed under faces.
    pub fn distance_among(
        &self,
        x: &DVector<f64>,
        ids: impl IntoIterator<Item = usize>,
    ) -> (f64, DVector<f64>, usize) {
        let mut best = (f64::INFINITY, x.clone(), usize::MAX);
        for i in ids {
            let g = &self.geom[i];
            let lower = (x - &g.center).norm() - g.radius;
            if lower >= best.0 {
                continue;
            }
            let (lam, _) = self.barycentric(i, x);
            if lam.iter().all(|&l| l >= 0.0) || lam.len() == 1 {
                let mu = DVector::from_column_slice(&lam[1..]);
                let foot = &g.base + &g.edges * mu;
                let d = (x - &foot).norm();
                if d < best.0 {
                    best = (d, foot, i);
                }
            }
        }
        best
    }

    /// Affine direction space of simplex `i`.
    pub fn direction(&self, i: usize) -> Subspace {
        Subspace::span(self.ambient, &self.geom[i].edges).expect("shape")
    }

    /// d-dimensional volume of simplex `i`.
    pub fn volume(&self, i: usize) -> f64 {
        let e = &self.geom[i].edges;
        let d = e.ncols();
        e.tr_mul(e).determinant().max(0.0).sqrt() / factorial(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> PlComplex {
        PlComplex::new_closed(
            2,
            vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![-1.0, 1.0]],
            &[vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
        )
        .unwrap()
    }

    #[test]
    fn closure_and_validation() {
        let s = square();
        assert_eq!(s.len(), 8);
        assert_eq!(s.top_dim(), 1);
        assert!(PlComplex::from_listed(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]], &[vec![0, 1]]).is_err());
        assert!(PlComplex::new_closed(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
            &[vec![0, 1, 2]]
        )
        .is_err());
    }

    #[test]
    fn location_and_distance() {
        let s = square();
        let x = DVector::from_column_slice(&[1.0, 0.0]);
        let i = s.locate(&x, 1e-10).unwrap();
        assert_eq!(s.simplex_dim(i), 1);
        let c = DVector::from_column_slice(&[1.0, 1.0]);
        assert_eq!(s.simplex_dim(s.locate(&c, 1e-10).unwrap()), 0);
        let (d, foot, _) = s.distance(&DVector::from_column_slice(&[3.0, 4.0]));
        assert!((d - (4.0f64 + 9.0).sqrt()).abs() < 1e-12);
        assert!((foot - c).norm() < 1e-12);
        let (d, _, _) = s.distance(&DVector::from_column_slice(&[0.2, 0.0]));
        assert!((d - 0.8).abs() < 1e-12);
    }

    #[test]
    fn segment_direction() {
        let seg = PlComplex::new_closed(2, vec![vec![0.0, 0.0], vec![1.0, 1.0]], &[vec![0, 1]]).unwrap();
        let i = seg.locate(&DVector::from_column_slice(&[0.5, 0.5]), 1e-10).unwrap();
        let t = seg.direction(i);
        let e = Subspace::span_vectors(2, &[DVector::from_column_slice(&[1.0, 1.0])]).unwrap();
        assert!(crate::subspace::gap(&t, &e).unwrap() < 1e-12);
    }
}
