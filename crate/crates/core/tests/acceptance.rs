//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line (visible with `--nocapture`, and always on
//! failure).  `elgrow reproduce-paper` drives the same checklist.

use elgrow_core::accept;

macro_rules! criterion {
    ($name:ident, $idx:expr) => {
        #[test]
        fn $name() {
            let results = accept::run_all_filtered(&[$idx]);
            let r = &results[0];
            println!("{}", r.line());
            assert!(r.passed, "{}", r.line());
        }
    };
}

criterion!(criterion_01_green_golden, 1);
criterion!(criterion_02_green_area, 2);
criterion!(criterion_03_dirichlet_goldens, 3);
criterion!(criterion_04_defect_laws, 4);
criterion!(criterion_05_conversion, 5);
criterion!(criterion_06_richardson, 6);
criterion!(criterion_07_radial_rates, 7);
criterion!(criterion_08_balayage, 8);
criterion!(criterion_09_strong_weak, 9);
criterion!(criterion_10_inverse_maps, 10);
criterion!(criterion_11_negative_gate, 11);
criterion!(criterion_12_zero_curvature, 12);
