//! Discrete counterparts of the identities inside the strong-solution
//! energy argument, plus the integrability monitor's amplitude response.

use std::collections::BTreeMap;

use elflow::diagnostics::{self, MemorySink};
use elflow::field::{FieldData, MatrixField, VectorField};
use elflow::grid::{BoundaryMode, Grid};
use elflow::linsolve::LinearSolveConfig;
use elflow::ops;
use elflow::picard::{self, PicardConfig};
use elflow::scenario::build_scenario;
use std::f64::consts::PI;

/// `F∇u : F = ∇u : FᵀF` holds cell by cell; it is the matrix algebra
/// `AB : C = B : AᵀC` with no differencing involved, so only summation
/// order separates the two sides.
#[test]
fn stretch_contraction_matches_the_transposed_product_pointwise() {
    let g = Grid::new(2, &[12, 12], &[1.0, 1.0], BoundaryMode::Periodic).unwrap();
    let u = VectorField::from_fn(&g, |x| {
        [
            (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1] + 0.4).cos(),
            (2.0 * PI * x[0] + 0.8).cos() * (2.0 * PI * x[1]).sin(),
            0.0,
        ]
    });
    let f = MatrixField::from_fn(&g, |x| {
        [
            [x[0] + 0.3, x[1] * x[0], 0.0],
            [(x[1] - 0.5).powi(2), 1.0 - x[0], 0.0],
            [0.0; 3],
        ]
    });
    let stretch = ops::stretch(&f, &u);
    let gu = ops::grad_vector(&u);
    let dim = 2;
    let mut worst: f64 = 0.0;
    g.for_each_interior(|flat, _| {
        let mut lhs = 0.0; // (F∇u) : F
        for i in 0..dim {
            for k in 0..dim {
                lhs += stretch.entry(i, k)[flat] * f.entry(i, k)[flat];
            }
        }
        let mut rhs = 0.0; // ∇u : (FᵀF)
        for i in 0..dim {
            for j in 0..dim {
                let mut ftf = 0.0;
                for m in 0..dim {
                    ftf += f.entry(m, i)[flat] * f.entry(m, j)[flat];
                }
                rhs += gu.entry(i, j)[flat] * ftf;
            }
        }
        worst = worst.max((lhs - rhs).abs());
    });
    assert!(worst <= 1e-13, "pointwise algebra defect {worst}");
}

/// `⟨F, u·∇F⟩ = O(h²)` for discretely divergence-free u: the discrete
/// form of the transport cancellation.
#[test]
fn transport_term_cancels_against_divergence_free_velocity()
{
    let defect = |n: usize| -> f64 {
        let g = Grid::new(2, &[n, n], &[1.0, 1.0], BoundaryMode::Periodic).unwrap();
        let h = g.h(0);
        // discretely divergence-free Taylor-Green (symbol-scaled)
        let b = -(2.0 * PI * h).sin() / (2.0 * PI * h).sin();
        let u = VectorField::from_fn(&g, |x| {
            [
                (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos(),
                b * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin(),
                0.0,
            ]
        });
        let f = MatrixField::from_fn(&g, |x| {
            [
                [(2.0 * PI * x[0] + 0.3).sin() * (2.0 * PI * x[1] + 0.9).sin(), (4.0 * PI * x[0] + 0.2).sin(), 0.0],
                [(2.0 * PI * x[1] + 0.5).cos(), (2.0 * PI * x[0]).cos() * (4.0 * PI * x[1] + 0.1).sin(), 0.0],
                [0.0; 3],
            ]
        });
        let vol = g.cell_volume();
        (ops::advect(&u, &f).dot(&f) * vol).abs()
    };
    let d32 = defect(32);
    let d64 = defect(64);
    let ratio = d32 / d64;
    assert!((3.0..5.0).contains(&ratio), "transport cancellation ratio {ratio}");
}

/// For `d = (sin(ax)cos(by), cos(ax)sin(by))` the product `∇d⊙∇d` works
/// out to `((1 + cos2ax·cos2by)·a²/2, −(ab/2)sin2ax·sin2by; …)` and its
/// row-wise divergence to
/// `(−a(a²+b²)sin(2ax)cos(2by), −b(a²+b²)cos(2ax)sin(2by))`.
/// `elastic_stress(d_to_f(d))` must converge to that at second order,
/// which pins both the transpose-product identity and the sign.
#[test]
fn elastic_stress_matches_the_analytic_divergence_of_the_director_product() {
    let a = 2.0 * PI;
    let b = 4.0 * PI;
    let err = |n: usize| -> f64 {
        let g = Grid::new(2, &[n, n], &[1.0, 1.0], BoundaryMode::Periodic).unwrap();
        let d = VectorField::from_fn(&g, |x| {
            [(a * x[0]).sin() * (b * x[1]).cos(), (a * x[0]).cos() * (b * x[1]).sin(), 0.0]
        });
        let stress = ops::elastic_stress(&ops::d_to_f(&d));
        let exact = VectorField::from_fn(&g, |x| {
            let k2 = a * a + b * b;
            [
                -a * k2 * (2.0 * a * x[0]).sin() * (2.0 * b * x[1]).cos(),
                -b * k2 * (2.0 * a * x[0]).cos() * (2.0 * b * x[1]).sin(),
                0.0,
            ]
        });
        stress.max_abs_diff(&exact)
    };
    let e64 = err(64);
    let e128 = err(128);
    let ratio = e64 / e128;
    assert!(e128 < 30.0, "fine-grid stress error {e128}");
    assert!((3.0..5.0).contains(&ratio), "elastic stress refinement ratio {ratio}");
}

#[test]
fn integrability_integral_shrinks_with_the_initial_amplitude() {
    let run_integral = |amp: &str| -> f64 {
        let kv: BTreeMap<String, String> = [
            ("n".to_string(), "16".to_string()),
            ("amplitude".to_string(), amp.to_string()),
        ]
        .into();
        let sc = build_scenario("small_vortex", &kv).unwrap();
        let lincfg = LinearSolveConfig::default();
        let initial = sc.initial_state(&lincfg).unwrap();
        let cfg = PicardConfig::with_dt(1e-3);
        let mut sink = MemorySink::new();
        picard::advance(&initial, 2e-2, &cfg, &lincfg, None, &mut sink).unwrap();
        diagnostics::integrability_check(&sink.records, 1.0).unwrap()
    };
    let big = run_integral("1e-2");
    let small = run_integral("1e-3");
    assert!(small.is_finite() && big.is_finite());
    assert!(small < big, "∫G must shrink with amplitude: {small} vs {big}");
}

/// The discrete ratio ‖u‖_{W²,q,h} / ‖Δ_h u‖_{q,h} is surfaced as a
/// diagnostic only; no claim on its supremum.
#[test]
fn w2q_to_laplacian_ratio_is_finite_on_smooth_data() {
    let g = Grid::new(2, &[24, 24], &[1.0, 1.0], BoundaryMode::Dirichlet).unwrap();
    let u = VectorField::from_fn(&g, |x| {
        let b = |s: f64| (s * (1.0 - s)).powi(2);
        [b(x[0]) * b(x[1]), -b(x[0]) * b(x[1]), 0.0]
    });
    let ratio = diagnostics::w2q_to_laplacian_ratio(&u, 6.0);
    assert!(ratio.is_finite() && ratio > 0.0, "ratio {ratio}");
    let zero = diagnostics::w2q_to_laplacian_ratio(&VectorField::zeros(&g), 6.0);
    assert!(zero.is_nan(), "undefined for zero fields");
}
