//! Shared unit-test fixtures. The lattice eigendecompositions cost seconds,
//! so each model is built once per test process and shared by reference.

use std::sync::OnceLock;

use crate::linop::eig::{biorthonormalize, eig, EigenSystem};
use crate::linop::Tolerances;
use crate::metric::{classify_spectrum, construct_frame, CPTFrame, SpectrumClassification};
use crate::models::{build_hamiltonian, make_grid, BuiltModel, ModelSpec};

pub struct Fixture {
    pub model: BuiltModel,
    pub eigensystem: EigenSystem,
    pub classification: SpectrumClassification,
    pub frame: CPTFrame,
}

fn build(spec: ModelSpec, grid: Option<(usize, f64)>, m: usize) -> Fixture {
    let tol = Tolerances::default();
    let grid = grid.map(|(n, l)| make_grid(n, l).expect("fixture grid"));
    let model = build_hamiltonian(&spec, grid.as_ref()).expect("fixture model");
    let mut es = eig(&model.hamiltonian.matrix, &tol).expect("fixture eig");
    biorthonormalize(&mut es, &tol).expect("fixture biortho");
    let cls = classify_spectrum(&es, &tol, m).expect("fixture classification");
    let frame = construct_frame(&model.hamiltonian, &model.par, &es, &cls, &tol)
        .expect("fixture frame");
    Fixture { model, eigensystem: es, classification: cls, frame }
}

/// Matrix2x2(r = 1, s = 1, theta = pi/6): unbroken, closed-form reference.
pub fn two_by_two() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| {
        build(
            ModelSpec::Matrix2x2 { r: 1.0, s: 1.0, theta: std::f64::consts::FRAC_PI_6 },
            None,
            2,
        )
    })
}

/// epsilon = 1 lattice (H = p^2 + i x^3) at N = 201, L = 8, keeping 5 modes.
pub fn eps_one() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| build(ModelSpec::EpsilonFamily { epsilon: 1.0 }, Some((201, 8.0)), 5))
}

/// epsilon = 0 Hermitian oscillator at N = 201, L = 8, keeping 5 modes.
pub fn oscillator() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| build(ModelSpec::EpsilonFamily { epsilon: 0.0 }, Some((201, 8.0)), 5))
}
