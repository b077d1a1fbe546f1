//! Exterior derivative, divergence, Laplacian, Green's function and the
//! Hodge split of one-forms into exact (★) and co-closed (◇) parts.

use crate::error::{Error, Result};
use crate::forms::{OneForm, ZeroForm};
use crate::graph::FiniteGraph;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

/// The two dual sectors: ★ = exact forms `dθ`, ◇ = co-closed forms `d*J = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sector {
    Star,
    Diamond,
}

impl Sector {
    pub fn dual(self) -> Sector {
        match self {
            Sector::Star => Sector::Diamond,
            Sector::Diamond => Sector::Star,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Star => "star",
            Sector::Diamond => "diamond",
        })
    }
}

impl FromStr for Sector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Sector> {
        match s {
            "star" | "★" => Ok(Sector::Star),
            "diamond" | "◇" => Ok(Sector::Diamond),
            _ => Err(Error::Invalid(format!("unknown sector `{s}` (star | diamond)"))),
        }
    }
}

/// `(df)_e = f(head) - f(tail)`.
pub fn d<T>(g: &FiniteGraph, f: &ZeroForm<T>) -> OneForm<T>
where
    T: Copy + Sub<Output = T>,
{
    assert_eq!(f.len(), g.n_vertices(), "zero-form length mismatch");
    OneForm(g.edges().iter().map(|e| f[e.head] - f[e.tail]).collect())
}

/// `(d*ω)_x = Σ_{y~x} ω_{yx}`: inflow minus outflow.
pub fn d_star<T>(g: &FiniteGraph, w: &OneForm<T>) -> ZeroForm<T>
where
    T: Copy + Default + Add<Output = T> + Neg<Output = T>,
{
    assert_eq!(w.len(), g.n_edges(), "one-form length mismatch");
    let mut out = ZeroForm::zeros(g.n_vertices());
    for (id, e) in g.edges().iter().enumerate() {
        out[e.head] = out[e.head] + w[id];
        out[e.tail] = out[e.tail] + -w[id];
    }
    out
}

/// `Δ = d*d` on all vertices: degree (with multiplicity) on the diagonal,
/// minus edge multiplicity off it.
pub fn laplacian_matrix(g: &FiniteGraph) -> DMatrix<f64> {
    let n = g.n_vertices();
    let mut m = DMatrix::zeros(n, n);
    for e in g.edges() {
        m[(e.tail, e.tail)] += 1.0;
        m[(e.head, e.head)] += 1.0;
        m[(e.tail, e.head)] -= 1.0;
        m[(e.head, e.tail)] -= 1.0;
    }
    m
}

/// Above this many vertices `Green` switches from Cholesky to conjugate gradients.
pub const DENSE_LIMIT: usize = 2000;
const CG_TOLERANCE: f64 = 1e-12;

enum Solver {
    Dense(Cholesky<f64, Dyn>),
    Iterative,
}

/// `Δ⁻¹` on `V \ {∂}` with Dirichlet condition `u(∂) = 0`.
pub struct Green {
    boundary: usize,
    /// Interior index of each vertex (`usize::MAX` for ∂).
    slot: Vec<usize>,
    degree: Vec<f64>,
    /// Interior neighbours of each interior vertex, with multiplicity.
    adjacency: Vec<Vec<usize>>,
    solver: Solver,
}

impl Green {
    pub fn new(g: &FiniteGraph) -> Result<Green> {
        Green::with_dense_limit(g, DENSE_LIMIT)
    }

    pub fn with_dense_limit(g: &FiniteGraph, dense_limit: usize) -> Result<Green> {
        let n = g.n_vertices();
        let boundary = g.boundary();
        let mut slot = vec![usize::MAX; n];
        for (i, v) in g.interior().enumerate() {
            slot[v] = i;
        }
        let m = n - 1;
        let mut degree = vec![0.0; m];
        let mut adjacency = vec![Vec::new(); m];
        for e in g.edges() {
            for (a, b) in [(e.tail, e.head), (e.head, e.tail)] {
                if a != boundary {
                    degree[slot[a]] += 1.0;
                    if b != boundary {
                        adjacency[slot[a]].push(slot[b]);
                    }
                }
            }
        }
        let solver = if n <= dense_limit {
            let mut mat = DMatrix::zeros(m, m);
            for i in 0..m {
                mat[(i, i)] = degree[i];
                for &j in &adjacency[i] {
                    mat[(i, j)] -= 1.0;
                }
            }
            let chol = Cholesky::new(mat)
                .ok_or_else(|| Error::Solver("Laplacian is not positive definite".into()))?;
            Solver::Dense(chol)
        } else {
            Solver::Iterative
        };
        Ok(Green {
            boundary,
            slot,
            degree,
            adjacency,
            solver,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.slot.len()
    }

    fn restrict(&self, f: &ZeroForm) -> DVector<f64> {
        assert_eq!(f.len(), self.n_vertices(), "zero-form length mismatch");
        let mut b = DVector::zeros(self.degree.len());
        for (v, &s) in self.slot.iter().enumerate() {
            if s != usize::MAX {
                b[s] = f[v];
            }
        }
        b
    }

    fn extend(&self, u: &DVector<f64>) -> ZeroForm {
        ZeroForm(
            self.slot
                .iter()
                .map(|&s| if s == usize::MAX { 0.0 } else { u[s] })
                .collect(),
        )
    }

    fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            u.len(),
            (0..u.len()).map(|i| {
                self.degree[i] * u[i] - self.adjacency[i].iter().map(|&j| u[j]).sum::<f64>()
            }),
        )
    }

    fn conjugate_gradient(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let norm_b = b.norm();
        let mut x = DVector::zeros(b.len());
        if norm_b == 0.0 {
            return Ok(x);
        }
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = r.dot(&r);
        for _ in 0..20 * b.len().max(10) {
            let ap = self.apply(&p);
            let alpha = rr / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            let rr_new = r.dot(&r);
            if rr_new.sqrt() <= CG_TOLERANCE * norm_b {
                return Ok(x);
            }
            p = &r + (rr_new / rr) * &p;
            rr = rr_new;
        }
        Err(Error::Solver(format!(
            "conjugate gradients did not reach relative residual {CG_TOLERANCE}"
        )))
    }

    /// `u` with `Δu = f` on `V \ {∂}` and `u(∂) = 0`; `f(∂)` is ignored.
    pub fn solve(&self, f: &ZeroForm) -> Result<ZeroForm> {
        let b = self.restrict(f);
        let u = match &self.solver {
            Solver::Dense(chol) => chol.solve(&b),
            Solver::Iterative => self.conjugate_gradient(&b)?,
        };
        Ok(self.extend(&u))
    }

    /// Expected visits to `w` of simple random walk from `v` killed at ∂,
    /// i.e. the `(v, w)` entry of `Δ⁻¹ D`.
    pub fn green_function(&self, v: usize, w: usize) -> Result<f64> {
        if v == self.boundary || w == self.boundary {
            return Ok(0.0);
        }
        let u = self.solve(&ZeroForm::delta(self.n_vertices(), w, 1.0))?;
        Ok(u[v] * self.degree[self.slot[w]])
    }

    /// `(Δ⁻¹ f, g)`.
    pub fn pairing(&self, f: &ZeroForm, g: &ZeroForm) -> Result<f64> {
        Ok(self.solve(f)?.inner(g))
    }

    /// Dense `Δ⁻¹` on interior vertices, in increasing vertex order.
    pub fn inverse_matrix(&self) -> Result<DMatrix<f64>> {
        let m = self.degree.len();
        let mut out = DMatrix::zeros(m, m);
        let interior: Vec<usize> = (0..self.n_vertices()).filter(|&v| v != self.boundary).collect();
        for (j, &w) in interior.iter().enumerate() {
            let u = self.solve(&ZeroForm::delta(self.n_vertices(), w, 1.0))?;
            for (i, &v) in interior.iter().enumerate() {
                out[(i, j)] = u[v];
            }
        }
        Ok(out)
    }
}

/// Convenience wrapper building a `Green` for one solve.
pub fn green_solve(g: &FiniteGraph, f: &ZeroForm) -> Result<ZeroForm> {
    Green::new(g)?.solve(f)
}

/// Orthogonal projection onto exact forms (★) or co-closed forms (◇).
pub fn hodge_project(g: &FiniteGraph, green: &Green, w: &OneForm, sector: Sector) -> Result<OneForm> {
    let star = d(g, &green.solve(&d_star(g, w))?);
    Ok(match sector {
        Sector::Star => star,
        Sector::Diamond => w - &star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_cycle, build_path, build_torus, Edge};

    #[test]
    fn derivative_examples() {
        let p = build_path(2, "xy:1").unwrap();
        assert_eq!(d(&p, &ZeroForm(vec![0.0, 1.0])).0, vec![1.0]);
        let tri = build_cycle(3, "xy:1").unwrap();
        assert_eq!(d(&tri, &ZeroForm(vec![0, 1, 3])).0, vec![1, 2, -3]);
        assert_eq!(d(&tri, &ZeroForm(vec![2.0; 3])).max_abs(), 0.0);
        assert_eq!(d_star(&p, &OneForm(vec![1.0])).0, vec![-1.0, 1.0]);
        assert_eq!(d_star(&tri, &OneForm(vec![1.0; 3])).max_abs(), 0.0);
    }

    #[test]
    fn path_green() {
        let p = build_path(3, "xy:1").unwrap();
        let green = Green::new(&p).unwrap();
        let u = green.solve(&ZeroForm::delta(3, 1, 1.0)).unwrap();
        assert!((u[0]).abs() < 1e-15 && (u[1] - 1.0).abs() < 1e-12 && (u[2] - 1.0).abs() < 1e-12);
        assert!((green.green_function(1, 1).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(green.solve(&ZeroForm::zeros(3)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn cg_matches_dense() {
        let t = build_torus(5, "xy:1").unwrap();
        let dense = Green::new(&t).unwrap();
        let cg = Green::with_dense_limit(&t, 0).unwrap();
        let f = ZeroForm((0..25).map(|i| ((i * 7) % 5) as f64 - 2.0).collect());
        let a = dense.solve(&f).unwrap();
        let b = cg.solve(&f).unwrap();
        assert!((&a - &b).max_abs() < 1e-10);
    }

    #[test]
    fn laplacian_is_d_star_d() {
        let g = FiniteGraph::new(
            4,
            vec![
                Edge::new(0, 1, "a"),
                Edge::new(1, 2, "a"),
                Edge::new(2, 0, "a"),
                Edge::new(1, 2, "a"),
                Edge::new(3, 2, "a"),
            ],
            0,
        )
        .unwrap();
        let lap = laplacian_matrix(&g);
        for j in 0..4 {
            let col = d_star(&g, &d(&g, &ZeroForm::delta(4, j, 1.0)));
            for i in 0..4 {
                assert!((lap[(i, j)] - col[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hodge_examples() {
        let tri = build_cycle(3, "xy:1").unwrap();
        let green = Green::new(&tri).unwrap();
        let cyc = OneForm(vec![1.0; 3]);
        assert!(hodge_project(&tri, &green, &cyc, Sector::Star).unwrap().max_abs() < 1e-12);
        let exact = d(&tri, &ZeroForm(vec![0.0, 2.0, -1.0]));
        let p = hodge_project(&tri, &green, &exact, Sector::Star).unwrap();
        assert!((&p - &exact).max_abs() < 1e-12);
    }

    #[test]
    fn sector_parse() {
        assert_eq!("star".parse::<Sector>().unwrap(), Sector::Star);
        assert_eq!(Sector::Star.dual(), Sector::Diamond);
        assert!("x".parse::<Sector>().is_err());
    }
}
