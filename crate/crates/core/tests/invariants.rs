use hsdual::graph::build_cycle;
use hsdual::oracle::{height_expect, spin_expect, HeightObservable, ModelSpec, SpinObservable};
use hsdual::potentials::bessel::ln_bessel_i;
use hsdual::potentials::{convolution_residual, make_annealed, make_ivgff, make_lipschitz, make_xy, split_potential};
use hsdual::{d, d_star, hodge_project, Edge, FiniteGraph, Green, OneForm, PotentialRegistry, Sector, TreeGauge, ZeroForm};
use proptest::prelude::*;
use std::f64::consts::PI;

/// Connected multigraphs: a random spanning tree plus extra edges, with
/// random orientations, potentials and boundary.
fn graphs() -> impl Strategy<Value = FiniteGraph> {
    (2usize..8)
        .prop_flat_map(|n| {
            let tree = proptest::collection::vec((any::<prop::sample::Index>(), any::<bool>()), n - 1);
            let extra = proptest::collection::vec((0..n, 0..n - 1, any::<bool>()), 0..6);
            let pots = proptest::collection::vec(prop::sample::select(vec!["xy:1", "ivgff:0.5", "lipschitz:2"]), 16);
            (Just(n), tree, extra, pots, 0..n)
        })
        .prop_map(|(n, tree, extra, pots, boundary)| {
            let mut edges = Vec::new();
            for (v, (parent, flip)) in (1..n).zip(tree) {
                let p = parent.index(v);
                let (t, h) = if flip { (v, p) } else { (p, v) };
                edges.push((t, h));
            }
            for (a, b, flip) in extra {
                // skip over `a` so there are no self-loops
                let b = if b >= a { b + 1 } else { b };
                edges.push(if flip { (b, a) } else { (a, b) });
            }
            let edges = edges.into_iter().enumerate().map(|(i, (t, h))| Edge::new(t, h, pots[i % pots.len()])).collect();
            FiniteGraph::new(n, edges, boundary).unwrap()
        })
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0..3.0f64, len)
}

fn with_forms() -> impl Strategy<Value = (FiniteGraph, Vec<f64>, Vec<f64>)> {
    graphs().prop_flat_map(|g| {
        let (n, m) = (g.n_vertices(), g.n_edges());
        (Just(g), values(n), values(m))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn d_star_is_the_adjoint_of_d((g, f, w) in with_forms()) {
        // (df, ω) = Σ_e (f(head) - f(tail)) ω_e = (f, d*ω)
        let (f, w) = (ZeroForm(f), OneForm(w));
        let lhs = d(&g, &f).inner(&w);
        let rhs = f.inner(&d_star(&g, &w));
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn green_inverts_the_laplacian((g, f, _) in with_forms()) {
        let mut f = ZeroForm(f);
        f[g.boundary()] = 0.0;
        let u = Green::new(&g).unwrap().solve(&f).unwrap();
        prop_assert!(u[g.boundary()].abs() < 1e-12);
        let back = d_star(&g, &d(&g, &u));
        for v in g.interior() {
            prop_assert!((back[v] - f[v]).abs() < 1e-9, "v={} {} vs {}", v, back[v], f[v]);
        }
    }

    #[test]
    fn hodge_split_is_orthogonal((g, _, w) in with_forms()) {
        let green = Green::new(&g).unwrap();
        let w = OneForm(w);
        let star = hodge_project(&g, &green, &w, Sector::Star).unwrap();
        let diamond = hodge_project(&g, &green, &w, Sector::Diamond).unwrap();
        prop_assert!((&(&star + &diamond) - &w).max_abs() < 1e-10);
        prop_assert!(d_star(&g, &diamond).max_abs() < 1e-9);
        prop_assert!(star.inner(&diamond).abs() < 1e-9);
        let again = hodge_project(&g, &green, &star, Sector::Star).unwrap();
        prop_assert!((&again - &star).max_abs() < 1e-9);
    }

    #[test]
    fn gauge_extensions_are_co_closed(g in graphs(), seed in any::<u64>()) {
        let gauge = TreeGauge::new(&g);
        prop_assert_eq!(gauge.n_free(), g.cycle_rank());
        let x: Vec<f64> = (0..gauge.n_free()).map(|k| ((seed >> (k % 60)) & 0xff) as f64 / 40.0 - 3.0).collect();
        let j = gauge.extend(g.n_edges(), &x);
        prop_assert!(d_star(&g, &j).max_abs() < 1e-12);
        for (&e, &xe) in gauge.free_edges().iter().zip(&x) {
            prop_assert_eq!(j[e], xe);
        }
        let peeled = gauge.extend_by_peeling(&g, &x);
        prop_assert!((&peeled - &j).max_abs() < 1e-12);
    }

    #[test]
    fn text_round_trip(g in graphs()) {
        let text = g.to_text();
        let back = FiniteGraph::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back.boundary(), g.boundary());
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn spin_derivatives_match_finite_differences(
        which in 0usize..4,
        beta in 0.2..3.0f64,
        alpha in -PI..PI,
    ) {
        let pair = match which {
            0 => make_xy(beta),
            1 => make_ivgff(beta),
            2 => make_lipschitz(beta.max(0.8)),
            _ => make_annealed(&[(beta, 0.5), (2.0 * beta, 0.5)]),
        }
        .unwrap();
        let s = &pair.spin;
        let h = 1e-5;
        let v = s.eval(alpha);
        let du = (s.u(alpha + h) - s.u(alpha - h)) / (2.0 * h);
        let d2u = (s.du(alpha + h) - s.du(alpha - h)) / (2.0 * h);
        let scale = 1.0 + v.du.abs() + v.d2u.abs();
        prop_assert!((du - v.du).abs() < 1e-6 * scale, "{} vs {}", du, v.du);
        prop_assert!((d2u - v.d2u).abs() < 1e-6 * scale, "{} vs {}", d2u, v.d2u);
        prop_assert!((v.w.ln() + v.u).abs() < 1e-12 * (1.0 + v.u.abs()));
    }

    #[test]
    fn xy_split_convolves_back(beta in 0.2..4.0f64, k in 2u32..5) {
        let reg = PotentialRegistry::default();
        let xy = make_xy(beta).unwrap();
        let part = split_potential(&reg, &xy, k).unwrap();
        prop_assert!(convolution_residual(&xy.height, &part.height, k) < 1e-9);
    }

    #[test]
    fn height_truncation_is_converged(beta in 0.2..1.0f64, n in 3usize..5) {
        // with β ≤ 1 the XY weights c_n ~ (β/2)^n / n! are negligible beyond 12
        let g = build_cycle(n, &format!("xy:{beta}")).unwrap();
        let m = ModelSpec::new(g, &PotentialRegistry::default(), Sector::Diamond).unwrap();
        let obs = [HeightObservable::EdgePower(0, 2), HeightObservable::EdgePower(1, 4)];
        let a = height_expect(&m.clone().with_truncation(12), &obs).unwrap();
        let b = height_expect(&m.with_truncation(14), &obs).unwrap();
        for i in 0..obs.len() {
            prop_assert!((a.real(i) - b.real(i)).abs() < 1e-10, "{} vs {}", a.real(i), b.real(i));
        }
    }

    #[test]
    fn spin_quadrature_is_converged(beta in 0.2..2.0f64, twist in -PI..PI) {
        let g = build_cycle(3, &format!("ivgff:{beta}")).unwrap();
        let m = ModelSpec::new(g, &PotentialRegistry::default(), Sector::Diamond).unwrap();
        let eps = OneForm(vec![twist, 0.0, 0.5 * twist]);
        let obs = [SpinObservable::Twist(eps)];
        let a = spin_expect(&m.clone().with_quadrature(64), &obs).unwrap();
        let b = spin_expect(&m.with_quadrature(128), &obs).unwrap();
        prop_assert!((a.real(0) - b.real(0)).abs() < 1e-10, "{} vs {}", a.real(0), b.real(0));
    }
}

#[test]
fn bessel_asymptotics_at_large_argument() {
    // ln I_n(x) = x - ln(2πx)/2 + ln(1 - (μ-1)/8x + ...) with μ = 4n², three terms
    let x = 400.0f64;
    for n in [0u32, 1, 5] {
        let mu = 4.0 * (n * n) as f64;
        let z = 8.0 * x;
        let series = 1.0 - (mu - 1.0) / z + (mu - 1.0) * (mu - 9.0) / (2.0 * z * z)
            - (mu - 1.0) * (mu - 9.0) * (mu - 25.0) / (6.0 * z * z * z);
        let approx = x - 0.5 * (2.0 * PI * x).ln() + series.ln();
        let got = ln_bessel_i(n, x);
        assert!((got - approx).abs() < 1e-7, "n={n}: {got} vs {approx}");
    }
}
