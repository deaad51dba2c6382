//! Small named complexes, retractions, and perturbations shared by tests,
//! the check suites, and the command-line corpus.

use crate::complex::{check_maurer_cartan, ChainComplex, Perturbation};
use crate::graded::{GradedMap, GradedModule};
use crate::ring::Ring;
use crate::sdr::Sdr;

/// A single generator in degree 0 with zero differential.
pub fn point(ring: Ring) -> ChainComplex {
    ChainComplex::point(ring)
}

/// Two vertices `a`, `b` and an edge `e` with `d e = a - b`.
pub fn interval() -> ChainComplex {
    let m = GradedModule::new(Ring::Integers, [(0, 2), (1, 1)])
        .with_labels(0, &["a", "b"])
        .with_labels(1, &["e"]);
    let d = GradedMap::from_entries(m.clone(), m.clone(), -1, &[(1, 0, 0, 1), (1, 1, 0, -1)])
        .expect("interval differential");
    ChainComplex::new(m, d).expect("interval complex")
}

/// The retraction of the interval onto the point: both vertices map to the
/// basepoint, the basepoint includes as `a`, and `h b = -e` contracts the
/// edge.
pub fn interval_sdr() -> Sdr {
    let a = interval();
    let b = point(Ring::Integers);
    let f = GradedMap::from_entries(
        a.module().clone(),
        b.module().clone(),
        0,
        &[(0, 0, 0, 1), (0, 0, 1, 1)],
    )
    .expect("interval projection");
    let g = GradedMap::from_entries(b.module().clone(), a.module().clone(), 0, &[(0, 0, 0, 1)])
        .expect("interval inclusion");
    let h = GradedMap::from_entries(a.module().clone(), a.module().clone(), 1, &[(0, 0, 1, -1)])
        .expect("interval homotopy");
    Sdr::new(a, b, f, g, h).expect("interval retraction")
}

/// `delta e = -a` on the interval: admissible, and absorbed without any
/// induced perturbation on the point.
pub fn interval_perturbation() -> Perturbation {
    let c = interval();
    let m = c.module().clone();
    let delta = GradedMap::from_entries(m.clone(), m, -1, &[(1, 0, 0, -1)])
        .expect("interval perturbation");
    check_maurer_cartan(delta, &c).expect("interval perturbation satisfies Maurer-Cartan")
}

/// `delta e = -b` on the interval: a valid perturbation whose composite
/// with the homotopy is *not* nilpotent, so the perturbation machinery must
/// refuse it.
pub fn interval_feedback_perturbation() -> Perturbation {
    let c = interval();
    let m = c.module().clone();
    let delta = GradedMap::from_entries(m.clone(), m, -1, &[(1, 1, 0, -1)])
        .expect("interval feedback perturbation");
    check_maurer_cartan(delta, &c).expect("feedback perturbation satisfies Maurer-Cartan")
}

/// Two vertices `p`, `q` and two edges `u`, `v`, both running from `p` to
/// `q`: a circle made of two arcs.
pub fn circle() -> ChainComplex {
    let m = GradedModule::new(Ring::Integers, [(0, 2), (1, 2)])
        .with_labels(0, &["p", "q"])
        .with_labels(1, &["u", "v"]);
    let d = GradedMap::from_entries(
        m.clone(),
        m.clone(),
        -1,
        &[(1, 1, 0, 1), (1, 0, 0, -1), (1, 1, 1, 1), (1, 0, 1, -1)],
    )
    .expect("circle differential");
    ChainComplex::new(m, d).expect("circle complex")
}

/// The minimal model of the circle: one generator in each of degrees 0 and
/// 1 with zero differential.
pub fn circle_model() -> ChainComplex {
    let m = GradedModule::new(Ring::Integers, [(0, 1), (1, 1)])
        .with_labels(0, &["m0"])
        .with_labels(1, &["m1"]);
    let d = GradedMap::zero(m.clone(), m.clone(), -1);
    ChainComplex::new(m, d).expect("circle model")
}

/// The retraction of the two-arc circle onto its minimal model: vertices
/// collapse to `m0`, the class of `u` maps to `m1`, the model includes as
/// `p` and `u - v`, and `h q = v` contracts the redundant vertex.
pub fn circle_sdr() -> Sdr {
    let c = circle();
    let model = circle_model();
    let f = GradedMap::from_entries(
        c.module().clone(),
        model.module().clone(),
        0,
        &[(0, 0, 0, 1), (0, 0, 1, 1), (1, 0, 0, 1)],
    )
    .expect("circle projection");
    let g = GradedMap::from_entries(
        model.module().clone(),
        c.module().clone(),
        0,
        &[(0, 0, 0, 1), (1, 0, 0, 1), (1, 1, 0, -1)],
    )
    .expect("circle inclusion");
    let h = GradedMap::from_entries(c.module().clone(), c.module().clone(), 1, &[(0, 1, 1, 1)])
        .expect("circle homotopy");
    Sdr::new(c, model, f, g, h).expect("circle retraction")
}

/// `delta v = p` on the circle: admissible, kills the homology, and induces
/// `delta' m1 = -m0` on the minimal model.
pub fn circle_perturbation() -> Perturbation {
    let c = circle();
    let m = c.module().clone();
    let delta =
        GradedMap::from_entries(m.clone(), m, -1, &[(1, 0, 1, 1)]).expect("circle perturbation");
    check_maurer_cartan(delta, &c).expect("circle perturbation satisfies Maurer-Cartan")
}

/// `d e = n a`: one vertex, one edge, and an attaching map of degree `n`,
/// so the degree-0 homology is `Z/n`.
pub fn torsion_complex(n: i64) -> ChainComplex {
    let m = GradedModule::new(Ring::Integers, [(0, 1), (1, 1)])
        .with_labels(0, &["a"])
        .with_labels(1, &["e"]);
    let d = GradedMap::from_entries(m.clone(), m.clone(), -1, &[(1, 0, 0, n)])
        .expect("torsion differential");
    ChainComplex::new(m, d).expect("torsion complex")
}

/// A two-stage tower of retractions `A -> B -> C`: `C` is a point, `B`
/// adjoins the contractible pair `(x, y)`, and `A` adjoins another pair
/// `(x2, y2)` on top of `B`.
pub fn tower() -> (Sdr, Sdr) {
    let cm = GradedModule::new(Ring::Integers, [(0, 1)]).with_labels(0, &["c0"]);
    let c = ChainComplex::new(cm.clone(), GradedMap::zero(cm.clone(), cm.clone(), -1))
        .expect("tower base");

    let bm = GradedModule::new(Ring::Integers, [(0, 2), (1, 1)])
        .with_labels(0, &["c0", "y"])
        .with_labels(1, &["x"]);
    let db = GradedMap::from_entries(bm.clone(), bm.clone(), -1, &[(1, 1, 0, 1)])
        .expect("tower middle differential");
    let b = ChainComplex::new(bm.clone(), db).expect("tower middle");

    let am = GradedModule::new(Ring::Integers, [(0, 3), (1, 2)])
        .with_labels(0, &["c0", "y", "y2"])
        .with_labels(1, &["x", "x2"]);
    let da = GradedMap::from_entries(am.clone(), am.clone(), -1, &[(1, 1, 0, 1), (1, 2, 1, 1)])
        .expect("tower top differential");
    let a = ChainComplex::new(am.clone(), da).expect("tower top");

    let f2 = GradedMap::from_entries(bm.clone(), cm.clone(), 0, &[(0, 0, 0, 1)])
        .expect("bottom projection");
    let g2 = GradedMap::from_entries(cm.clone(), bm.clone(), 0, &[(0, 0, 0, 1)])
        .expect("bottom inclusion");
    let h2 = GradedMap::from_entries(bm.clone(), bm.clone(), 1, &[(0, 0, 1, 1)])
        .expect("bottom homotopy");
    let bottom = Sdr::new(b.clone(), c, f2, g2, h2).expect("bottom retraction");

    let f1 = GradedMap::from_entries(
        am.clone(),
        bm.clone(),
        0,
        &[(0, 0, 0, 1), (0, 1, 1, 1), (1, 0, 0, 1)],
    )
    .expect("top projection");
    let g1 = GradedMap::from_entries(
        bm.clone(),
        am.clone(),
        0,
        &[(0, 0, 0, 1), (0, 1, 1, 1), (1, 0, 0, 1)],
    )
    .expect("top inclusion");
    let h1 = GradedMap::from_entries(am.clone(), am.clone(), 1, &[(0, 1, 2, 1)])
        .expect("top homotopy");
    let top = Sdr::new(a, b, f1, g1, h1).expect("top retraction");
    (top, bottom)
}

/// `delta x = y2, delta x2 = c0` on the top of the tower: admissible for
/// both the top retraction and the stacked one, with a nonzero induced
/// perturbation on the middle complex.
pub fn tower_perturbation() -> Perturbation {
    let (top, _) = tower();
    let m = top.source().module().clone();
    let delta = GradedMap::from_entries(m.clone(), m, -1, &[(1, 2, 0, 1), (1, 0, 1, 1)])
        .expect("tower perturbation");
    check_maurer_cartan(delta, top.source()).expect("tower perturbation satisfies Maurer-Cartan")
}
