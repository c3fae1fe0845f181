//! Randomized invariants.

use proptest::prelude::*;
use thermocap_core::grid::{divergence, gradient, inner, weighted_laplacian, CellField, FaceField, Grid, ScalarBc};
use thermocap_core::physics::{CoefficientModel, PhysParams, Potential};
use thermocap_core::presets::{Axis, InitialPresets, PhiPreset, ThetaPreset, TracePreset, VelocityPreset};
use thermocap_core::scheme::{run, SchemeConfig};

fn cells(g: &Grid, v: Vec<f64>, bc: ScalarBc) -> CellField {
    CellField::from_values(g, v, bc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summation_by_parts(
        s in prop::collection::vec(-1.0f64..1.0, 20),
        fx in prop::collection::vec(-1.0f64..1.0, 25),
        fy in prop::collection::vec(-1.0f64..1.0, 24),
    ) {
        let g = Grid::new(4, 5, 1.3, 0.7).unwrap();
        let s = cells(&g, s, ScalarBc::NeumannZero);
        let mut f = FaceField::zeros(&g);
        f.xcomp.copy_from_slice(&fx[..g.n_xfaces()]);
        f.ycomp.copy_from_slice(&fy[..g.n_yfaces()]);
        f.zero_normal_boundary();
        let lhs = inner(&divergence(&f, &g).unwrap(), &s, &g).unwrap()
            + inner(&f, &gradient(&s, &g).unwrap(), &g).unwrap();
        prop_assert!(lhs.abs() <= 1e-13);
    }

    #[test]
    fn weighted_laplacian_is_symmetric(
        a in prop::collection::vec(-1.0f64..1.0, 16),
        b in prop::collection::vec(-1.0f64..1.0, 16),
        c in prop::collection::vec(0.1f64..2.0, 40),
    ) {
        let g = Grid::unit_square(4).unwrap();
        let mut coef = FaceField::zeros(&g);
        coef.xcomp.copy_from_slice(&c[..20]);
        coef.ycomp.copy_from_slice(&c[20..]);
        let (a, b) = (cells(&g, a, ScalarBc::NeumannZero), cells(&g, b, ScalarBc::NeumannZero));
        let lab = inner(&weighted_laplacian(&coef, &a, &g).unwrap(), &b, &g).unwrap();
        let lba = inner(&weighted_laplacian(&coef, &b, &g).unwrap(), &a, &g).unwrap();
        prop_assert!((lab - lba).abs() <= 1e-13 * (1.0 + lab.abs()));
        prop_assert!(inner(&weighted_laplacian(&coef, &a, &g).unwrap(), &a, &g).unwrap() <= 1e-14);
    }

    #[test]
    fn potential_splitting(s in -0.999999f64..0.999999, a in 0.1f64..1.0, gap in 0.01f64..2.0) {
        let a_c = a + gap;
        let p = Potential::new(a, a_c, a_c).unwrap();
        prop_assert!(p.f_second(s).unwrap() >= p.c_w);
        let w = p.w_prime(s).unwrap();
        prop_assert!((p.f_prime(s).unwrap() - 2.0 * p.c_w * s - w).abs() <= 1e-12 * (1.0 + w.abs()));
        prop_assert_eq!(p.w_prime(-s).unwrap(), -w);
        prop_assert!(p.w_value(s).unwrap() >= p.w_lower_bound() - 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn short_runs_keep_the_invariants(
        seed in 0u64..1000,
        mean in -0.4f64..0.4,
        rho2 in 0.5f64..2.0,
        b in 0.0f64..0.5,
        lo in 0.0f64..0.5,
        hi in 0.5f64..1.0,
    ) {
        let g = Grid::new(8, 8, 4.0, 4.0).unwrap();
        let params = PhysParams {
            rho1: 1.0,
            rho2,
            lambda0: 0.05,
            b,
            gravity: 1.0,
            viscosity: CoefficientModel::constant(0.3),
            mobility: CoefficientModel::constant(0.2),
            conductivity: CoefficientModel::constant(0.5),
            ..PhysParams::default()
        };
        let pre = InitialPresets {
            phi: PhiPreset::Spinodal { seed, amplitude: 0.3, mean },
            theta: ThetaPreset::Gradient { low: lo, high: hi, axis: Axis::X },
            velocity: VelocityPreset::Random { seed: seed + 1, amplitude: 0.3, modes: 2 },
            boundary: TracePreset::Linear { low: lo, high: hi, axis: Axis::X },
        };
        let cfg = SchemeConfig { h: 0.05, n_steps: 5, ..SchemeConfig::default() };
        let out = run(&pre.build(&g).unwrap(), &params, &cfg, &g).unwrap();
        prop_assert!(out.is_clean(), "{:?}", out.failure);
        let m0 = out.ledger.rows[0].mass;
        for r in &out.ledger.rows {
            prop_assert!((r.mass - m0).abs() <= 1e-12);
            prop_assert!(r.phi_max_abs < 1.0);
            prop_assert!(r.theta_min >= lo - 1e-10 && r.theta_max <= hi + 1e-10);
            prop_assert!(r.identity_residual <= 1e-7);
        }
    }
}
