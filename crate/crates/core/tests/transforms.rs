use hsdual::graph::{build_cycle, build_path, Edge};
use hsdual::oracle::{height_variances, verify_transform, verify_two_point_law, ModelSpec};
use hsdual::transforms::{add_auxiliary_edge, degree_reduce, glue_vertices, split_edge, star_tree_transform, Transformer};
use hsdual::{FiniteGraph, PotentialRegistry, Sector};

fn star_model(g: FiniteGraph, reg: &PotentialRegistry) -> ModelSpec {
    ModelSpec::new(g, reg, Sector::Star).unwrap()
}

#[test]
fn splitting_keeps_the_endpoint_law() {
    let reg = PotentialRegistry::default();
    let g = build_cycle(3, "xy:2").unwrap();
    let (s, map) = split_edge(&g, 1, 2, &reg).unwrap();
    let (before, after) = (star_model(g.clone(), &reg), star_model(s, &reg));
    let reps = verify_transform("split", &before, &after, &map, true).unwrap();
    assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    let e = g.edge(1);
    let law = verify_two_point_law(&before, &after, (e.tail, e.head), (map[e.tail], map[e.head])).unwrap();
    assert!(law.iter().all(|r| r.pass), "{law:?}");
}

#[test]
fn gluing_lowers_variance_on_four_vertices() {
    let reg = PotentialRegistry::default();
    let g = FiniteGraph::new(
        4,
        vec![Edge::new(0, 1, "xy:1"), Edge::new(1, 2, "xy:1"), Edge::new(2, 3, "xy:1"), Edge::new(3, 1, "xy:1")],
        0,
    )
    .unwrap();
    let before = star_model(g.clone(), &reg);
    for (a, b) in [(1, 3), (0, 2), (2, 3), (0, 3)] {
        let (h, map) = glue_vertices(&g, a, b).unwrap();
        let reps = verify_transform("glue", &before, &star_model(h, &reg), &map, false).unwrap();
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    }
}

#[test]
fn auxiliary_edge_interpolates_to_gluing() {
    let reg = PotentialRegistry::default();
    let g = build_path(4, "xy:1").unwrap();
    let (glued, map) = glue_vertices(&g, 1, 3).unwrap();
    let target = height_variances(&star_model(glued, &reg), &[map[2], map[3]]).unwrap();
    let mut last = f64::INFINITY;
    for lambda in [4.0, 1.0, 0.25, 0.0] {
        let aux = add_auxiliary_edge(&g, 1, 3, lambda).unwrap();
        let v = height_variances(&star_model(aux, &reg), &[2, 3]).unwrap();
        assert!(v[0] <= last + 1e-12);
        last = v[0];
        if lambda == 0.0 {
            assert!((v[0] - target[0]).abs() < 1e-12 && (v[1] - target[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn degree_reduction_and_star_tree_lower_variance() {
    let reg = PotentialRegistry::default();
    let edges = (1..=4).map(|i| Edge::new(0, i, "xy:1")).chain([Edge::new(1, 2, "xy:1")]).collect();
    let g = FiniteGraph::new(5, edges, 1).unwrap();
    let before = star_model(g.clone(), &reg);
    let mut t = Transformer::new(g.clone(), &reg);
    degree_reduce(&mut t, 0).unwrap();
    let (h, log) = t.finish();
    assert_eq!(h.neighbors(0).len(), 2);
    let reps = verify_transform("degree-reduce", &before, &star_model(h, &reg), &log.map, false).unwrap();
    assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    let (s, log) = star_tree_transform(&g, &reg).unwrap();
    let reps = verify_transform("star-tree", &before, &star_model(s, &reg), &log.map, false).unwrap();
    assert!(reps.iter().all(|r| r.pass), "{reps:?}");
    assert!(reps.iter().any(|r| r.lhs - r.rhs > 1e-6));
}
