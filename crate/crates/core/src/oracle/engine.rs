//! Exhaustive enumeration of integer-linear parameterisations of one-forms.
//!
//! Each edge ("site") value is an integer combination of the enumerated
//! variables. Variables run over `{-K_j..K_j}` (heights) or `ℤ_M` (grid
//! indices of angles). Per-site weights and observable contributions are
//! tabulated by slot, and partial products are carried level by level, so a
//! leaf costs only the sites completed by the last variable.

use num_complex::Complex64;
use rayon::prelude::*;

/// Value range of the enumerated variables.
#[derive(Clone, Debug)]
pub(crate) enum Domain {
    /// Variable `j` ranges over `-k[j]..=k[j]`; site `e` is supported on
    /// `|value| <= support[e]` (weight zero outside).
    Heights { k: Vec<i64>, support: Vec<i64> },
    /// Every variable ranges over `0..m`; site values are taken mod `m`.
    Circle { m: usize },
}

/// Site `e` takes the value `Σ_{(j, a) in sites[e]} a · x_j`.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    dim: usize,
    sites: Vec<Vec<(usize, i64)>>,
    domain: Domain,
    /// Sites whose last variable is `j`.
    completes: Vec<Vec<usize>>,
    constant: Vec<usize>,
}

impl Plan {
    pub fn new(dim: usize, sites: Vec<Vec<(usize, i64)>>, domain: Domain) -> Plan {
        let mut completes = vec![Vec::new(); dim];
        let mut constant = Vec::new();
        for (e, terms) in sites.iter().enumerate() {
            match terms.iter().filter(|t| t.1 != 0).map(|t| t.0).max() {
                Some(j) => completes[j].push(e),
                None => constant.push(e),
            }
        }
        Plan {
            dim,
            sites,
            domain,
            completes,
            constant,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Number of leaves of the full (unpruned) enumeration.
    pub fn states(&self) -> f64 {
        match &self.domain {
            Domain::Heights { k, .. } => k.iter().map(|&k| (2 * k + 1) as f64).product(),
            Domain::Circle { m } => (*m as f64).powi(self.dim as i32),
        }
    }

    /// Site values in slot order.
    pub fn site_values(&self, e: usize) -> Vec<i64> {
        match &self.domain {
            Domain::Heights { support, .. } => (-support[e]..=support[e]).collect(),
            Domain::Circle { m } => (0..*m as i64).collect(),
        }
    }

    fn var_values(&self, j: usize) -> std::ops::Range<i64> {
        match &self.domain {
            Domain::Heights { k, .. } => -k[j]..k[j] + 1,
            Domain::Circle { m } => 0..*m as i64,
        }
    }

    /// Grid slot of site `e` (circle plans only).
    pub fn slot_of(&self, e: usize, x: &[i64]) -> usize {
        self.slot(e, x).expect("circle sites always have a slot")
    }

    #[inline]
    fn slot(&self, e: usize, x: &[i64]) -> Option<usize> {
        let v: i64 = self.sites[e].iter().map(|&(j, a)| a * x[j]).sum();
        match &self.domain {
            Domain::Heights { support, .. } => {
                let s = support[e];
                (v.abs() <= s).then(|| (v + s) as usize)
            }
            Domain::Circle { m } => Some(v.rem_euclid(*m as i64) as usize),
        }
    }
}

/// Per-site tables of additive (`lin`) and multiplicative (`prod`) observables.
#[derive(Clone, Debug, Default)]
pub(crate) struct Functionals {
    pub n_lin: usize,
    pub n_prod: usize,
    lin: Vec<Vec<(usize, Vec<f64>)>>,
    prod: Vec<Vec<(usize, Vec<Complex64>)>>,
}

impl Functionals {
    pub fn new(n_sites: usize) -> Functionals {
        Functionals {
            n_lin: 0,
            n_prod: 0,
            lin: vec![Vec::new(); n_sites],
            prod: vec![Vec::new(); n_sites],
        }
    }

    /// Adds `Σ_e table_e[slot_e]`; sites mapped to `None` contribute zero.
    pub fn add_lin(&mut self, mut per_site: impl FnMut(usize) -> Option<Vec<f64>>) -> usize {
        let id = self.n_lin;
        for e in 0..self.lin.len() {
            if let Some(t) = per_site(e) {
                self.lin[e].push((id, t));
            }
        }
        self.n_lin += 1;
        id
    }

    /// Adds `Π_e table_e[slot_e]`; sites mapped to `None` contribute one.
    pub fn add_prod(&mut self, mut per_site: impl FnMut(usize) -> Option<Vec<Complex64>>) -> usize {
        let id = self.n_prod;
        for e in 0..self.prod.len() {
            if let Some(t) = per_site(e) {
                self.prod[e].push((id, t));
            }
        }
        self.n_prod += 1;
        id
    }
}

/// What the observer sees at a leaf.
pub(crate) struct Leaf<'a> {
    pub x: &'a [i64],
    pub lin: &'a [f64],
    pub prod: &'a [Complex64],
}

/// Weighted sums over all leaves.
#[derive(Clone, Debug)]
pub(crate) struct Accum {
    pub z: f64,
    pub sums: Vec<f64>,
    pub leaves: u64,
}

impl Accum {
    fn new(n: usize) -> Accum {
        Accum {
            z: 0.0,
            sums: vec![0.0; n],
            leaves: 0,
        }
    }

    fn merge(&mut self, other: &Accum) {
        self.z += other.z;
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        self.leaves += other.leaves;
    }

    /// Normalised expectations `sums / z`.
    pub fn means(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.z).collect()
    }
}

struct Scratch {
    x: Vec<i64>,
    w: Vec<f64>,
    lin: Vec<f64>,
    prod: Vec<Complex64>,
    tmp: Vec<f64>,
    acc: Accum,
}

struct Run<'a, F> {
    plan: &'a Plan,
    weights: &'a [Vec<f64>],
    fun: &'a Functionals,
    /// Subtrees whose partial weight falls below `prune[level]` are skipped.
    prune: Vec<f64>,
    emit: &'a F,
}

impl<F> Run<'_, F>
where
    F: Fn(&Leaf, &mut [f64]) + Sync,
{
    fn root(&self, n_out: usize) -> Scratch {
        let (nl, np) = (self.fun.n_lin, self.fun.n_prod);
        let dim = self.plan.dim;
        let mut s = Scratch {
            x: vec![0; dim],
            w: vec![0.0; dim + 1],
            lin: vec![0.0; nl * (dim + 1)],
            prod: vec![Complex64::new(1.0, 0.0); np * (dim + 1)],
            tmp: vec![0.0; n_out],
            acc: Accum::new(n_out),
        };
        let mut w = 1.0;
        for &e in &self.plan.constant {
            let slot = self.plan.slot(e, &s.x).unwrap_or(usize::MAX);
            if slot == usize::MAX {
                w = 0.0;
                break;
            }
            w *= self.weights[e][slot];
            for (l, t) in &self.fun.lin[e] {
                s.lin[*l] += t[slot];
            }
            for (p, t) in &self.fun.prod[e] {
                s.prod[*p] *= t[slot];
            }
        }
        s.w[0] = w;
        s
    }

    /// Assign `x_level = v`, fold in the sites it completes, and descend.
    fn step(&self, level: usize, v: i64, s: &mut Scratch) {
        let (nl, np) = (self.fun.n_lin, self.fun.n_prod);
        s.x[level] = v;
        let mut w = s.w[level];
        s.lin.copy_within(level * nl..(level + 1) * nl, (level + 1) * nl);
        s.prod.copy_within(level * np..(level + 1) * np, (level + 1) * np);
        for &e in &self.plan.completes[level] {
            let Some(slot) = self.plan.slot(e, &s.x) else {
                return;
            };
            w *= self.weights[e][slot];
            if w == 0.0 {
                return;
            }
            for (l, t) in &self.fun.lin[e] {
                s.lin[(level + 1) * nl + l] += t[slot];
            }
            for (p, t) in &self.fun.prod[e] {
                s.prod[(level + 1) * np + p] *= t[slot];
            }
        }
        if w < self.prune[level + 1] {
            return;
        }
        if level + 1 == self.plan.dim {
            self.leaf(w, s);
        } else {
            s.w[level + 1] = w;
            for v in self.plan.var_values(level + 1) {
                self.step(level + 1, v, s);
            }
        }
    }

    fn leaf(&self, w: f64, s: &mut Scratch) {
        let dim = self.plan.dim;
        let (nl, np) = (self.fun.n_lin, self.fun.n_prod);
        s.tmp.iter_mut().for_each(|t| *t = 0.0);
        let leaf = Leaf {
            x: &s.x,
            lin: &s.lin[dim * nl..(dim + 1) * nl],
            prod: &s.prod[dim * np..(dim + 1) * np],
        };
        (self.emit)(&leaf, &mut s.tmp);
        for (a, t) in s.acc.sums.iter_mut().zip(&s.tmp) {
            *a += w * t;
        }
        s.acc.z += w;
        s.acc.leaves += 1;
    }
}

/// Relative weight below which height subtrees are dropped.
pub(crate) const PRUNE_RELATIVE: f64 = 1e-20;

/// Enumerates all leaves. Output is independent of the thread count: the
/// outermost variable's values are processed as separate chunks and
/// combined in index order.
pub(crate) fn enumerate<F>(
    plan: &Plan,
    weights: &[Vec<f64>],
    fun: &Functionals,
    n_out: usize,
    emit: F,
) -> Accum
where
    F: Fn(&Leaf, &mut [f64]) + Sync,
{
    let dim = plan.dim;
    // prune[l]: threshold on the partial product after level l-1, scaled by
    // the largest weight the remaining sites could still contribute.
    let site_max: Vec<f64> = weights
        .iter()
        .map(|t| t.iter().cloned().fold(0.0, f64::max))
        .collect();
    let mut prune = vec![0.0; dim + 1];
    if matches!(plan.domain, Domain::Heights { .. }) {
        let mut rest = vec![1.0; dim + 1];
        for l in (0..dim).rev() {
            rest[l] = rest[l + 1] * plan.completes[l].iter().map(|&e| site_max[e]).product::<f64>();
        }
        let reference = rest[0] * plan.constant.iter().map(|&e| site_max[e]).product::<f64>();
        for l in 0..=dim {
            prune[l] = PRUNE_RELATIVE * reference / rest[l];
        }
    }
    let run = Run {
        plan,
        weights,
        fun,
        prune,
        emit: &emit,
    };
    if dim == 0 {
        let mut s = run.root(n_out);
        let w = s.w[0];
        if w > 0.0 {
            run.leaf(w, &mut s);
        }
        return s.acc;
    }
    let chunks: Vec<Accum> = plan
        .var_values(0)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            let mut s = run.root(n_out);
            if s.w[0] > 0.0 {
                run.step(0, v, &mut s);
            }
            s.acc
        })
        .collect();
    let mut total = Accum::new(n_out);
    for c in &chunks {
        total.merge(c);
    }
    total
}
