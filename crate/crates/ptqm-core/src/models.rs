//! Model catalog: symmetric Dirichlet grids, canonical lattice operators,
//! PT-symmetric Hamiltonians, and the polynomial potential mini-language.
//!
//! Time reversal is componentwise complex conjugation throughout; it is never
//! materialized as a matrix. That is only faithful on a node set that is
//! mirror-symmetric about 0, so the grid constructor builds the node mirror
//! bit-exactly and the parity identities below hold with zero residual.

pub mod parse;

use crate::error::Error;
use crate::linop::{CMatrix, C64, I, ONE, ZERO};
use crate::Result;
use parse::PolyPotential;

/// Interior nodes of a symmetric interval with Dirichlet endpoints excluded.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    half_width: f64,
    dx: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Lattice spacing, also the quadrature weight of the discrete L2 product.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }
}

/// Builds the grid with nodes `x_j = -L + (j+1) dx`, `dx = 2L/(N+1)`.
/// The upper half is stored as the exact negation of the lower half, so
/// `x_j = -x_{N-1-j}` holds bit-exactly (and exactly one node is 0.0 for
/// odd N).
pub fn make_grid(n: usize, half_width: f64) -> Result<Grid> {
    if n < 3 || !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::BadGrid { n, half_width });
    }
    let dx = 2.0 * half_width / (n as f64 + 1.0);
    let mut nodes = vec![0.0f64; n];
    let half = n / 2;
    for j in 0..half {
        let x = -half_width + (j as f64 + 1.0) * dx;
        nodes[j] = x;
        nodes[n - 1 - j] = -x;
    }
    if n % 2 == 1 {
        nodes[half] = 0.0;
    }
    Ok(Grid { n, half_width, dx, nodes })
}

/// A matrix tagged with its provenance: which operator it discretizes and on
/// which grid (None for intrinsically finite-dimensional models).
#[derive(Clone, Debug)]
pub struct DiscretizedOperator {
    pub label: String,
    pub matrix: CMatrix,
    pub grid: Option<Grid>,
}

impl DiscretizedOperator {
    /// Quadrature weight of the underlying inner product (1 without a grid).
    pub fn weight(&self) -> f64 {
        self.grid.as_ref().map_or(1.0, Grid::dx)
    }
}

/// The canonical lattice operators.
pub struct OperatorSet {
    pub x: DiscretizedOperator,
    pub mom: DiscretizedOperator,
    pub kin: DiscretizedOperator,
    pub par: DiscretizedOperator,
}

/// Position, momentum, kinetic, and parity operators on a grid.
///
/// Momentum is the central difference times -i (Hermitian, antisymmetric);
/// the kinetic term is the 3-point stencil (Dirichlet), real symmetric
/// positive definite; parity is the index-reversal permutation.
pub fn build_operators(grid: &Grid) -> OperatorSet {
    let n = grid.n();
    let dx = grid.dx();
    let x = CMatrix::diagonal(
        &grid
            .nodes()
            .iter()
            .map(|&v| C64::new(v, 0.0))
            .collect::<Vec<_>>(),
    );
    let mut mom = CMatrix::zeros(n);
    let coeff = I * C64::new(-1.0 / (2.0 * dx), 0.0);
    for j in 0..n {
        if j + 1 < n {
            mom.set(j, j + 1, coeff);
            mom.set(j + 1, j, -coeff);
        }
    }
    let mut kin = CMatrix::zeros(n);
    let inv2 = 1.0 / (dx * dx);
    for j in 0..n {
        kin.set(j, j, C64::new(2.0 * inv2, 0.0));
        if j + 1 < n {
            kin.set(j, j + 1, C64::new(-inv2, 0.0));
            kin.set(j + 1, j, C64::new(-inv2, 0.0));
        }
    }
    let par = CMatrix::from_fn(n, |i, j| if i + j == n - 1 { ONE } else { ZERO });
    let wrap = |label: &str, matrix: CMatrix| DiscretizedOperator {
        label: label.to_string(),
        matrix,
        grid: Some(grid.clone()),
    };
    OperatorSet {
        x: wrap("x", x),
        mom: wrap("p", mom),
        kin: wrap("p^2", kin),
        par: wrap("parity", par),
    }
}

/// Model selector for the catalog of PT-symmetric Hamiltonians.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    /// `H = [[r e^{i theta}, s], [s, r e^{-i theta}]]`; unbroken phase iff
    /// `s^2 >= r^2 sin^2(theta)`.
    Matrix2x2 { r: f64, s: f64, theta: f64 },
    /// `H = p^2 + x^2 (i x)^epsilon` on the real line, branch fixed below.
    EpsilonFamily { epsilon: f64 },
    /// The epsilon = 1 member, `H = p^2 + i x^3`.
    IXCubed,
    /// The epsilon = 0 member, `H = p^2 + x^2`.
    HermitianOscillator,
    /// `H = (p + i x)^2 + x^2 = p^2 + i (x p + p x)`: PT-symmetric but not
    /// complex symmetric.
    ShiftedSquare,
    /// `H = p^2 + V(x)` with a user-supplied polynomial V.
    PolyPotential(PolyPotential),
    /// Same, with V given as expression text (parsed on validation).
    PotentialExpr { source: String },
}

impl ModelSpec {
    /// Structural validation of the parameters; expression sources are
    /// parsed here so a bad config fails before any numerics run.
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Matrix2x2 { r, s, theta } => {
                for (name, v) in [("r", *r), ("s", *s), ("theta", *theta)] {
                    if !v.is_finite() {
                        return Err(Error::BadModelParameter {
                            parameter: name,
                            value: v,
                            domain: "finite real",
                        });
                    }
                }
                if *s == 0.0 {
                    return Err(Error::BadModelParameter {
                        parameter: "s",
                        value: *s,
                        domain: "s != 0",
                    });
                }
                Ok(())
            }
            ModelSpec::EpsilonFamily { epsilon } => {
                if !epsilon.is_finite() || *epsilon <= -1.0 || *epsilon >= 2.0 {
                    return Err(Error::BranchDomain { epsilon: *epsilon });
                }
                Ok(())
            }
            ModelSpec::PotentialExpr { source } => {
                parse::parse_potential(source).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// True when the model lives on a lattice (everything except Matrix2x2).
    pub fn needs_grid(&self) -> bool {
        !matches!(self, ModelSpec::Matrix2x2 { .. })
    }

    /// Desk-scale default grid for lattice models.
    pub fn default_grid(&self) -> Option<(usize, f64)> {
        match self {
            ModelSpec::Matrix2x2 { .. } => None,
            ModelSpec::ShiftedSquare => Some((301, 10.0)),
            _ => Some((201, 8.0)),
        }
    }

    /// Default number of kept modes: 10 on lattices, full dimension on 2x2.
    pub fn default_modes_kept(&self) -> usize {
        if self.needs_grid() {
            10
        } else {
            2
        }
    }

    /// Epsilon value for the members of the epsilon family.
    fn epsilon(&self) -> Option<f64> {
        match self {
            ModelSpec::EpsilonFamily { epsilon } => Some(*epsilon),
            ModelSpec::IXCubed => Some(1.0),
            ModelSpec::HermitianOscillator => Some(0.0),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpec::Matrix2x2 { r, s, theta } => {
                format!("matrix2x2(r={r}, s={s}, theta={theta})")
            }
            ModelSpec::EpsilonFamily { epsilon } => format!("epsilon_family(epsilon={epsilon})"),
            ModelSpec::IXCubed => "ix_cubed".to_string(),
            ModelSpec::HermitianOscillator => "hermitian_oscillator".to_string(),
            ModelSpec::ShiftedSquare => "shifted_square".to_string(),
            ModelSpec::PolyPotential(p) => format!("poly_potential({p})"),
            ModelSpec::PotentialExpr { source } => format!("potential_expr({source})"),
        }
    }
}

/// Branch rule for `x^2 (i x)^epsilon` on the real line:
/// `V(x) = |x|^(2+epsilon) exp(i epsilon (pi/2) sign(x))`, `sign(0) = 0`.
///
/// Algebraically equal to `x^2 |x|^epsilon exp(...)`, but written with the
/// fused exponent so the x = 0 node evaluates to 0 for every epsilon > -2
/// instead of producing `0 * inf` when epsilon < 0.
fn epsilon_potential(epsilon: f64, x: f64) -> C64 {
    let sign = if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    };
    let magnitude = x.abs().powf(2.0 + epsilon);
    C64::from_polar(magnitude, epsilon * std::f64::consts::FRAC_PI_2 * sign)
}

/// Diagonal potential matrix of a potential-bearing model on a grid.
///
/// Panics if called with a variant that has no local potential
/// (Matrix2x2, ShiftedSquare): that is a caller bug, not a runtime
/// condition.
pub fn potential_values(spec: &ModelSpec, grid: &Grid) -> Result<CMatrix> {
    spec.validate()?;
    if let Some(eps) = spec.epsilon() {
        let values: Vec<C64> = grid
            .nodes()
            .iter()
            .map(|&x| epsilon_potential(eps, x))
            .collect();
        return Ok(CMatrix::diagonal(&values));
    }
    let poly = match spec {
        ModelSpec::PolyPotential(p) => p.clone(),
        ModelSpec::PotentialExpr { source } => parse::parse_potential(source)?,
        other => panic!("{} has no local potential", other.label()),
    };
    let values: Vec<C64> = grid.nodes().iter().map(|&x| poly.eval(x)).collect();
    Ok(CMatrix::diagonal(&values))
}

/// A model realized as matrices: the Hamiltonian and the parity operator it
/// is PT-symmetric under.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub hamiltonian: DiscretizedOperator,
    pub par: DiscretizedOperator,
}

impl BuiltModel {
    pub fn dim(&self) -> usize {
        self.hamiltonian.matrix.dim()
    }

    pub fn weight(&self) -> f64 {
        self.hamiltonian.weight()
    }
}

/// Builds the Hamiltonian and parity matrices for a model. Lattice models
/// require a grid; `Matrix2x2` ignores it.
pub fn build_hamiltonian(spec: &ModelSpec, grid: Option<&Grid>) -> Result<BuiltModel> {
    spec.validate()?;
    if let ModelSpec::Matrix2x2 { r, s, theta } = spec {
        let e = C64::from_polar(*r, *theta);
        let sc = C64::new(*s, 0.0);
        let h = CMatrix::new(2, vec![e, sc, sc, e.conj()])?;
        let par = CMatrix::new(2, vec![ZERO, ONE, ONE, ZERO])?;
        return Ok(BuiltModel {
            hamiltonian: DiscretizedOperator {
                label: spec.label(),
                matrix: h,
                grid: None,
            },
            par: DiscretizedOperator {
                label: "parity".to_string(),
                matrix: par,
                grid: None,
            },
        });
    }
    let grid = grid.ok_or(Error::BadGrid { n: 0, half_width: 0.0 })?;
    let ops = build_operators(grid);
    let h = match spec {
        ModelSpec::ShiftedSquare => {
            // (p + ix)^2 + x^2 = p^2 + i(x p + p x)
            let xp = ops.x.matrix.mul(&ops.mom.matrix)?;
            let px = ops.mom.matrix.mul(&ops.x.matrix)?;
            ops.kin.matrix.add(&xp.add(&px)?.scale(I))?
        }
        _ => ops.kin.matrix.add(&potential_values(spec, grid)?)?,
    };
    Ok(BuiltModel {
        hamiltonian: DiscretizedOperator {
            label: spec.label(),
            matrix: h,
            grid: Some(grid.clone()),
        },
        par: ops.par,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{commutator_norm, Tolerances};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn grid_catalog_examples() {
        let g = make_grid(5, 3.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.nodes(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);

        let g = make_grid(4, 2.5).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.nodes(), &[-1.5, -0.5, 0.5, 1.5]);

        assert!(matches!(make_grid(2, 1.0), Err(Error::BadGrid { .. })));
        assert!(matches!(make_grid(5, 0.0), Err(Error::BadGrid { .. })));
    }

    #[test]
    fn grid_mirror_symmetry_is_bit_exact() {
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..200 {
            let n = rng.gen_range(3..400);
            let l: f64 = rng.gen_range(0.1..50.0);
            let g = make_grid(n, l).unwrap();
            for j in 0..n {
                // Exact floating equality, not approximate.
                assert_eq!(g.node(j), -g.node(n - 1 - j));
            }
        }
    }

    #[test]
    fn parity_identities_are_exact() {
        let g = make_grid(31, 4.0).unwrap();
        let ops = build_operators(&g);
        let par = &ops.par.matrix;
        assert_eq!(par.mul(par).unwrap(), CMatrix::identity(31));
        let pxp = par.mul(&ops.x.matrix).unwrap().mul(par).unwrap();
        assert_eq!(pxp, ops.x.matrix.scale(c(-1.0, 0.0)));
        let pmp = par.mul(&ops.mom.matrix).unwrap().mul(par).unwrap();
        assert_eq!(pmp, ops.mom.matrix.scale(c(-1.0, 0.0)));
        let pkp = par.mul(&ops.kin.matrix).unwrap().mul(par).unwrap();
        assert_eq!(pkp, ops.kin.matrix);
    }

    #[test]
    fn momentum_is_hermitian_and_antisymmetric() {
        let g = make_grid(17, 5.0).unwrap();
        let ops = build_operators(&g);
        let mom = &ops.mom.matrix;
        assert_eq!(mom.sub(&mom.adjoint()).unwrap().fro_norm(), 0.0);
        assert_eq!(mom.add(&mom.transpose()).unwrap().fro_norm(), 0.0);
    }

    #[test]
    fn kinetic_stencil_and_positivity() {
        let g = make_grid(21, 4.0).unwrap();
        let ops = build_operators(&g);
        let kin = &ops.kin.matrix;
        let inv2 = 1.0 / (g.dx() * g.dx());
        assert_eq!(kin.at(10, 10), c(2.0 * inv2, 0.0));
        assert_eq!(kin.at(10, 9), c(-inv2, 0.0));
        assert_eq!(kin.at(10, 11), c(-inv2, 0.0));
        assert!(kin.is_positive_definite(&Tolerances::default()).unwrap());
    }

    #[test]
    fn position_momentum_commutator_approximates_i() {
        // [X, Mom] is i times the neighbor-average stencil, which converges
        // to i*I in the interior; check a middle row.
        let g = make_grid(41, 6.0).unwrap();
        let ops = build_operators(&g);
        let xm = ops.x.matrix.mul(&ops.mom.matrix).unwrap();
        let mx = ops.mom.matrix.mul(&ops.x.matrix).unwrap();
        let comm = xm.sub(&mx).unwrap();
        let mid = 20;
        // Row pattern: i/2 on both neighbors, 0 on the diagonal.
        assert!((comm.at(mid, mid - 1) - c(0.0, 0.5)).norm() < 1e-12);
        assert!((comm.at(mid, mid + 1) - c(0.0, 0.5)).norm() < 1e-12);
        assert!(comm.at(mid, mid).norm() < 1e-12);
        assert!(commutator_norm(&ops.x.matrix, &ops.x.matrix).unwrap() == 0.0);
    }

    #[test]
    fn epsilon_potential_branch_examples() {
        // epsilon = 1 at x = 2: i * x^3 = 8i.
        let v = epsilon_potential(1.0, 2.0);
        assert!((v - c(0.0, 8.0)).norm() < 1e-12);
        // epsilon = 0 at x = 2: x^2 = 4 exactly.
        assert_eq!(epsilon_potential(0.0, 2.0), c(4.0, 0.0));
        // epsilon = 0.5 at x = -1: e^{-i pi/4}.
        let v = epsilon_potential(0.5, -1.0);
        let expected = c(0.5f64.sqrt(), -(0.5f64.sqrt()));
        assert!((v - expected).norm() < 1e-15);
        // sign(0) = 0 and |0|^(2+eps) = 0, for negative epsilon too.
        assert_eq!(epsilon_potential(-0.5, 0.0), ZERO);
        assert!(epsilon_potential(-0.9, 0.0).norm() == 0.0);
    }

    #[test]
    fn epsilon_window_is_enforced() {
        for bad in [-1.0, 2.0, -3.0, f64::NAN] {
            let spec = ModelSpec::EpsilonFamily { epsilon: bad };
            assert!(matches!(spec.validate(), Err(Error::BranchDomain { .. })));
        }
        assert!(ModelSpec::EpsilonFamily { epsilon: 1.999 }.validate().is_ok());
        assert!(ModelSpec::EpsilonFamily { epsilon: -0.999 }.validate().is_ok());
    }

    #[test]
    fn matrix2x2_definition_and_validation() {
        let spec = ModelSpec::Matrix2x2 { r: 1.0, s: 1.0, theta: std::f64::consts::FRAC_PI_6 };
        let model = build_hamiltonian(&spec, None).unwrap();
        let h = &model.hamiltonian.matrix;
        let e = C64::from_polar(1.0, std::f64::consts::FRAC_PI_6);
        assert!((h.at(0, 0) - e).norm() < 1e-15);
        assert!((h.at(1, 1) - e.conj()).norm() < 1e-15);
        assert_eq!(h.at(0, 1), ONE);
        assert_eq!(model.weight(), 1.0);

        let bad = ModelSpec::Matrix2x2 { r: 1.0, s: 0.0, theta: 0.1 };
        assert!(matches!(bad.validate(), Err(Error::BadModelParameter { .. })));
    }

    #[test]
    fn shifted_square_is_pt_symmetric_but_not_symmetric() {
        let g = make_grid(201, 8.0).unwrap();
        let model = build_hamiltonian(&ModelSpec::ShiftedSquare, Some(&g)).unwrap();
        let h = &model.hamiltonian.matrix;
        let par = &model.par.matrix;
        let hn = h.fro_norm();
        let sym = h.transpose().sub(h).unwrap().fro_norm() / hn;
        assert!(sym > 0.1, "symmetric residual {sym}");
        let pt = par.mul(&h.conj()).unwrap().mul(par).unwrap().sub(h).unwrap().fro_norm() / hn;
        assert!(pt <= 1e-9, "pt residual {pt}");
    }

    #[test]
    fn epsilon_one_hamiltonian_is_complex_symmetric() {
        let g = make_grid(61, 8.0).unwrap();
        let model = build_hamiltonian(&ModelSpec::IXCubed, Some(&g)).unwrap();
        let h = &model.hamiltonian.matrix;
        assert_eq!(h.transpose().sub(h).unwrap().fro_norm(), 0.0);
    }

    #[test]
    fn catalog_hamiltonians_are_pt_symmetric() {
        let g = make_grid(61, 6.0).unwrap();
        let specs = [
            ModelSpec::EpsilonFamily { epsilon: -0.5 },
            ModelSpec::EpsilonFamily { epsilon: 0.5 },
            ModelSpec::EpsilonFamily { epsilon: 1.5 },
            ModelSpec::IXCubed,
            ModelSpec::HermitianOscillator,
            ModelSpec::ShiftedSquare,
            ModelSpec::PotentialExpr { source: "x^2 + i*x^3".to_string() },
        ];
        for spec in specs {
            let model = build_hamiltonian(&spec, Some(&g)).unwrap();
            let h = &model.hamiltonian.matrix;
            let par = &model.par.matrix;
            let res = par.mul(&h.conj()).unwrap().mul(par).unwrap().sub(h).unwrap().fro_norm();
            assert!(res <= 1e-9 * h.fro_norm(), "{}: residual {res}", spec.label());
        }
        // And the 2x2 member, with parity [[0,1],[1,0]].
        let model = build_hamiltonian(
            &ModelSpec::Matrix2x2 { r: 2.0, s: 1.0, theta: 0.7 },
            None,
        )
        .unwrap();
        let h = &model.hamiltonian.matrix;
        let par = &model.par.matrix;
        let res = par.mul(&h.conj()).unwrap().mul(par).unwrap().sub(h).unwrap().fro_norm();
        assert!(res <= 1e-15);
    }

    #[test]
    fn missing_grid_is_rejected() {
        let err = build_hamiltonian(&ModelSpec::IXCubed, None).unwrap_err();
        assert!(matches!(err, Error::BadGrid { .. }));
    }

    #[test]
    fn poly_potential_model_matches_direct_evaluation() {
        let poly = parse::parse_potential("1 + 2*x^2").unwrap();
        let g = make_grid(5, 3.0).unwrap();
        let v = potential_values(&ModelSpec::PolyPotential(poly), &g).unwrap();
        assert_eq!(v.at(0, 0), c(9.0, 0.0)); // 1 + 2*4 at x = -2
        assert_eq!(v.at(2, 2), c(1.0, 0.0)); // x = 0
    }
}
