//! Observable audits against a CPT frame.
//!
//! Two candidate notions of "observable" compete for a PT-symmetric
//! Hamiltonian. The transpose condition (def1) demands A^T = Theta A Theta
//! with Theta = C Par followed by conjugation, the antilinear CPT map. The
//! metric condition (def2) demands that A be Hermitian in the eta inner
//! product, equivalently that eta A be a Hermitian matrix on the kept span.
//! The pseudo-Hermiticity relation (eq2) A^H = eta A eta^-1 ties the two
//! together: def1 operators satisfy it in exactly one metric ordering.
//!
//! Every audit returns residuals relative to the operator's own scale, so
//! verdicts are invariant under real rescaling of the operator. Residuals
//! of exact (full-span) frames are judged against `tau_alg`, lattice frames
//! against `tau_disc`; frame truncation leaves discretization-level error
//! in every kept-span identity.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;
use crate::linop::eig::{biorthonormalize, eig, hermitian_min_eigenvalue};
use crate::linop::{compress, CMatrix, Tolerances, C64};
use crate::metric::CPTFrame;
use crate::Result;

/// Gram off-diagonal tolerance for eigenbases of exact frames.
pub const GRAM_TOL_EXACT: f64 = 1e-8;

/// Gram off-diagonal tolerance for eigenbases of lattice frames.
pub const GRAM_TOL_LATTICE: f64 = 1e-6;

/// Residual tolerance appropriate to the frame class: algebraic for exact
/// frames, discretization for lattice frames.
fn frame_tolerance(frame: &CPTFrame, tol: &Tolerances) -> f64 {
    if frame.exact {
        tol.tau_alg
    } else {
        tol.tau_disc
    }
}

fn gram_tolerance(frame: &CPTFrame) -> f64 {
    if frame.exact {
        GRAM_TOL_EXACT
    } else {
        GRAM_TOL_LATTICE
    }
}

/// Relative deviations of an operator from complex symmetry and from PT
/// symmetry. Zero operators count as symmetric.
#[derive(Clone, Copy, Debug)]
pub struct SymmetryFlags {
    /// ||A^T - A|| / ||A||.
    pub symmetric_residual: f64,
    /// ||Par conj(A) Par - A|| / ||A||.
    pub pt_residual: f64,
}

/// Measures how far `a` is from A^T = A and from Par conj(A) Par = A.
pub fn symmetry_flags(a: &CMatrix, par: &CMatrix) -> Result<SymmetryFlags> {
    let scale = a.fro_norm();
    if scale == 0.0 {
        return Ok(SymmetryFlags { symmetric_residual: 0.0, pt_residual: 0.0 });
    }
    let symmetric_residual = a.transpose().sub(a)?.fro_norm() / scale;
    let pt = par.mul(&a.conj())?.mul(par)?;
    let pt_residual = pt.sub(a)?.fro_norm() / scale;
    Ok(SymmetryFlags { symmetric_residual, pt_residual })
}

/// Transpose-condition residual ||A^T Pi - S conj(A) conj(S) Pi|| / ||A||
/// with S = C Par, i.e. the matrix form of A^T = Theta A Theta on the kept
/// span. Requires Theta^2 = Pi to hold at the frame's stored residual; a
/// frame that fails the involution cannot support the condition at all.
pub fn def1_residual(a: &CMatrix, frame: &CPTFrame, tol: &Tolerances) -> Result<f64> {
    if !(frame.residuals.theta_involution <= tol.tau_disc) {
        return Err(Error::FrameInconsistent {
            check: "Theta^2 = Pi",
            residual: frame.residuals.theta_involution,
            tolerance: tol.tau_disc,
        });
    }
    let scale = a.fro_norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let s = frame.c.mul(&frame.par)?;
    let lhs = a.transpose().mul(&frame.projector)?;
    let rhs = s.mul(&a.conj())?.mul(&s.conj())?.mul(&frame.projector)?;
    Ok(lhs.sub(&rhs)?.fro_norm() / scale)
}

/// Pseudo-Hermiticity residuals in both metric orderings.
#[derive(Clone, Copy, Debug)]
pub struct Eq2Residuals {
    /// ||A^H eta - eta A|| / (||A|| ||eta||) with eta = Par * C.
    pub pc: f64,
    /// Same with eta = C * Par.
    pub cp: f64,
}

impl Eq2Residuals {
    pub fn min(&self) -> f64 {
        self.pc.min(self.cp)
    }
}

/// Measures the pseudo-Hermiticity relation A^H eta = eta A for both
/// orderings of the metric. The rank-deficient metric confines the relation
/// to the kept span from either side, so no explicit projector is needed.
/// A transpose-condition operator satisfies exactly one ordering; which one
/// depends on the frame, so consumers take the minimum.
pub fn eq2_residual(a: &CMatrix, frame: &CPTFrame) -> Result<Eq2Residuals> {
    let scale = a.fro_norm();
    if scale == 0.0 {
        return Ok(Eq2Residuals { pc: 0.0, cp: 0.0 });
    }
    let adag = a.adjoint();
    let mut residuals = [0.0f64; 2];
    for (slot, eta) in [
        (0, frame.par.mul(&frame.c)?),
        (1, frame.c.mul(&frame.par)?),
    ] {
        let defect = adag.mul(&eta)?.sub(&eta.mul(a)?)?.fro_norm();
        residuals[slot] = defect / (scale * eta.fro_norm().max(f64::MIN_POSITIVE));
    }
    Ok(Eq2Residuals { pc: residuals[0], cp: residuals[1] })
}

/// Kept-span Gram matrix G_ij = inner_eta(phi_i, A phi_j) of the operator.
/// Hermiticity of G is the metric observable condition restricted to the
/// kept span.
fn eta_gram(a: &CMatrix, frame: &CPTFrame) -> Result<CMatrix> {
    let ea = frame.eta.mul(a)?;
    let g = compress(&ea, &frame.kept_right, &frame.kept_right)?;
    Ok(g.scale(C64::new(frame.weight, 0.0)))
}

/// Metric-condition residual ||G - G^H|| / ||G|| for the kept-span Gram
/// matrix G_ij = inner_eta(phi_i, A phi_j). Relative to the restricted
/// operator's own scale; an operator that vanishes on the kept span is
/// trivially metric-Hermitian there.
pub fn def2_residual(a: &CMatrix, frame: &CPTFrame) -> Result<f64> {
    let g = eta_gram(a, frame)?;
    let scale = g.fro_norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(g.sub(&g.adjoint())?.fro_norm() / scale)
}

/// Reality of the restricted spectrum.
#[derive(Clone, Copy, Debug)]
pub struct RequirementI {
    pub pass: bool,
    /// max |Im lambda| over the restricted spectrum, relative to its
    /// spectral radius.
    pub max_abs_im: f64,
}

/// Existence of a complete eta-orthogonal eigenbasis on the kept span.
#[derive(Clone, Copy, Debug)]
pub struct RequirementII {
    pub pass: bool,
    /// Largest off-diagonal of the normalized eigenvector Gram matrix in
    /// the eta inner product; infinite when some eigenvector has
    /// non-positive eta norm.
    pub gram_deviation: f64,
    /// 1 - sigma_min/sigma_max of the eigenvector matrix.
    pub completeness_deviation: f64,
}

/// Outcome of auditing an operator against the two spectral requirements
/// for an observable: real spectrum, and a complete orthogonal eigenbasis
/// in the metric inner product.
#[derive(Clone, Copy, Debug)]
pub struct RequirementAudit {
    pub requirement_i: RequirementI,
    pub requirement_ii: RequirementII,
}

/// Audits the kept-span restriction of `a`. The restriction is the
/// biorthogonal compression chi_i^H A phi_j, whose spectrum is that of
/// Pi A Pi on the kept span. Requirement failures are recorded in the
/// result; only solver breakdowns surface as errors.
pub fn requirement_audit(
    a: &CMatrix,
    frame: &CPTFrame,
    tol: &Tolerances,
) -> Result<RequirementAudit> {
    let restricted = compress(a, &frame.kept_left, &frame.kept_right)?;
    let m = restricted.dim();
    let es = eig(&restricted, tol)?;

    let radius = es.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let max_im = es.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let max_abs_im = if radius == 0.0 { 0.0 } else { max_im / radius };
    let requirement_i = RequirementI { pass: max_abs_im <= tol.tau_real, max_abs_im };

    // Defectiveness: an eigenvector pair whose left/right pairing collapses
    // marks a Jordan-like restriction with no complete eigenbasis.
    let mut paired = es.clone();
    let defect_free = match biorthonormalize(&mut paired, tol) {
        Ok(()) => paired.defective.is_empty(),
        Err(Error::DefectiveSpectrum { .. }) => false,
        Err(e) => return Err(e),
    };

    // Completeness: relative rank margin of the eigenvector matrix.
    let y = CMatrix::from_fn(m, |i, j| es.right[j][i]);
    let yy = y.adjoint().mul(&y)?;
    let lambda_min = hermitian_min_eigenvalue(&yy, tol)?.max(0.0);
    let lambda_max = (-hermitian_min_eigenvalue(&yy.scale(C64::new(-1.0, 0.0)), tol)?).max(0.0);
    let (sigma_min, sigma_max) = (lambda_min.sqrt(), lambda_max.sqrt());
    let margin = if sigma_max == 0.0 { 0.0 } else { sigma_min / sigma_max };
    let completeness_deviation = 1.0 - margin;

    // Orthogonality: Gram matrix of the lifted eigenvectors under the eta
    // inner product, each normalized to unit eta norm.
    let dim = frame.dim();
    let mut lifted: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut positive = true;
    for k in 0..m {
        let mut u = vec![C64::new(0.0, 0.0); dim];
        for i in 0..m {
            let coeff = es.right[k][i];
            for (uj, pj) in u.iter_mut().zip(&frame.kept_right[i]) {
                *uj += coeff * pj;
            }
        }
        let nrm = frame.inner_eta(&u, &u)?.re;
        if nrm <= 0.0 {
            positive = false;
        } else {
            let inv = C64::new(1.0 / nrm.sqrt(), 0.0);
            for uj in u.iter_mut() {
                *uj *= inv;
            }
        }
        lifted.push(u);
    }
    let mut gram_deviation = if positive { 0.0 } else { f64::INFINITY };
    if positive {
        for k in 0..m {
            for l in 0..k {
                let overlap = frame.inner_eta(&lifted[k], &lifted[l])?.norm();
                gram_deviation = gram_deviation.max(overlap);
            }
        }
    }

    let pass = defect_free
        && margin > tol.tau_disc
        && positive
        && gram_deviation <= gram_tolerance(frame);
    let requirement_ii = RequirementII { pass, gram_deviation, completeness_deviation };

    Ok(RequirementAudit { requirement_i, requirement_ii })
}

/// Matrix elements of an operator between kept modes in the CPT inner
/// product, with the symmetry defect of the table.
#[derive(Clone, Debug)]
pub struct MatrixElementAudit {
    /// A_mn = inner_cpt(phi_m, A phi_n) over unit-CPT-norm kept modes.
    pub table: CMatrix,
    /// max |conj(A_mn) - A_nm|.
    pub max_asymmetry: f64,
    /// max |A_mn|, the scale the asymmetry is judged against.
    pub max_element: f64,
    pub pass: bool,
}

/// Tabulates A_mn = inner_cpt(phi_m, A phi_n) and checks the table is
/// Hermitian relative to its largest entry. Hermiticity of this table is
/// the sampled form of the metric observable condition, so the verdict
/// tracks `def2_residual` against the same tolerance.
pub fn matrix_element_audit(
    a: &CMatrix,
    frame: &CPTFrame,
    tol: &Tolerances,
) -> Result<MatrixElementAudit> {
    let m = frame.modes_kept;
    if m < 2 {
        return Err(Error::DimensionMismatch {
            left: m,
            right: 2,
            context: "matrix element audit needs at least two kept modes",
        });
    }
    let mut modes: Vec<Vec<C64>> = Vec::with_capacity(m);
    for phi in &frame.kept_right {
        let nrm = frame.inner_cpt(phi, phi)?.re;
        if nrm <= 0.0 {
            return Err(Error::FrameInconsistent {
                check: "kept modes have positive CPT norm",
                residual: nrm,
                tolerance: 0.0,
            });
        }
        let inv = C64::new(1.0 / nrm.sqrt(), 0.0);
        modes.push(phi.iter().map(|z| z * inv).collect());
    }
    let mut table = CMatrix::zeros(m);
    for n in 0..m {
        let an = a.apply(&modes[n])?;
        for row in 0..m {
            table.set(row, n, frame.inner_cpt(&modes[row], &an)?);
        }
    }
    let mut max_asymmetry = 0.0f64;
    let mut max_element = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            max_element = max_element.max(table.at(i, j).norm());
            max_asymmetry = max_asymmetry.max((table.at(i, j).conj() - table.at(j, i)).norm());
        }
    }
    let pass = max_asymmetry <= tol.tau_disc * max_element;
    Ok(MatrixElementAudit { table, max_asymmetry, max_element, pass })
}

/// Which observable definition a generated operator satisfies by
/// construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservableKind {
    /// Transpose condition A^T = Theta A Theta.
    Def1,
    /// Metric condition: eta A Hermitian.
    Def2,
}

fn standard_gaussian_matrix(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let normal = StandardNormal;
    CMatrix::from_fn(dim, |_, _| {
        let re: f64 = normal.sample(rng);
        let im: f64 = normal.sample(rng);
        C64::new(re, im)
    })
}

/// Theta-conjugation F(M) = (S conj(M) conj(S))^T with S = C Par. Fixed
/// points restricted to the kept span are the transpose-condition
/// observables.
fn theta_conjugate(m: &CMatrix, s: &CMatrix) -> Result<CMatrix> {
    Ok(s.mul(&m.conj())?.mul(&s.conj())?.transpose())
}

/// Draws a reproducible random observable of the requested kind. Def2
/// operators are eta^-1 times a Gaussian Hermitian matrix; Def1 operators
/// average a kept-span-restricted Gaussian matrix with its Theta conjugate.
/// The construction is verified before returning: residual at the frame's
/// tolerance class, and involutivity of the Theta conjugation for Def1.
pub fn generate_observable(
    kind: ObservableKind,
    frame: &CPTFrame,
    seed: u64,
) -> Result<CMatrix> {
    let tol = Tolerances::default();
    let gate = frame_tolerance(frame, &tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = frame.dim();
    match kind {
        ObservableKind::Def2 => {
            let z = standard_gaussian_matrix(dim, &mut rng);
            let b = z.add(&z.adjoint())?.scale(C64::new(0.5, 0.0));
            let a = frame.eta_inv.mul(&b)?;
            let residual = def2_residual(&a, frame)?;
            if !(residual <= gate) {
                return Err(Error::FrameInconsistent {
                    check: "generated operator is metric-Hermitian",
                    residual,
                    tolerance: gate,
                });
            }
            Ok(a)
        }
        ObservableKind::Def1 => {
            let z = standard_gaussian_matrix(dim, &mut rng);
            let m = frame.projector.mul(&z)?.mul(&frame.projector)?;
            let s = frame.c.mul(&frame.par)?;
            let fm = theta_conjugate(&m, &s)?;
            let a = m.add(&fm)?.scale(C64::new(0.5, 0.0));
            let involution = theta_conjugate(&fm, &s)?.sub(&m)?.fro_norm()
                / m.fro_norm().max(f64::MIN_POSITIVE);
            if !(involution <= gate) {
                return Err(Error::FrameInconsistent {
                    check: "Theta conjugation is involutive on the kept span",
                    residual: involution,
                    tolerance: gate,
                });
            }
            let residual = def1_residual(&a, frame, &tol)?;
            if !(residual <= gate) {
                return Err(Error::FrameInconsistent {
                    check: "generated operator satisfies the transpose condition",
                    residual,
                    tolerance: gate,
                });
            }
            Ok(a)
        }
    }
}

/// Overall classification of an audited operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Passes both the transpose and the metric condition.
    Def1AndDef2,
    /// Passes the metric condition only.
    Def2Only,
    /// Fails the metric condition.
    NotObservable,
    /// No frame verdict possible (frame construction failed upstream).
    Inapplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Def1AndDef2 => "def1_and_def2",
            Verdict::Def2Only => "def2_only",
            Verdict::NotObservable => "not_observable",
            Verdict::Inapplicable => "inapplicable",
        }
    }
}

/// Full audit record for one operator against one frame.
#[derive(Clone, Debug)]
pub struct ObservableReport {
    pub label: String,
    pub dim: usize,
    pub symmetric: bool,
    pub symmetric_residual: f64,
    pub pt_symmetric: bool,
    pub pt_residual: f64,
    /// The transpose condition presumes a complex-symmetric Hamiltonian;
    /// on frames of asymmetric Hamiltonians its residual is reported but
    /// carries no verdict weight.
    pub def1_applicable: bool,
    pub def1_residual: f64,
    pub eq2_residual_pc: f64,
    pub eq2_residual_cp: f64,
    pub def2_residual: f64,
    pub requirement_i: RequirementI,
    pub requirement_ii: RequirementII,
    pub matrix_element_pass: bool,
    pub matrix_element_asymmetry: f64,
    pub verdict: Verdict,
}

/// Runs every audit on `a` and condenses them into a verdict. The metric
/// condition decides observability; the transpose condition upgrades the
/// verdict only where it applies and passes.
pub fn classify_operator(
    a: &CMatrix,
    label: &str,
    frame: &CPTFrame,
    tol: &Tolerances,
) -> Result<ObservableReport> {
    if a.dim() != frame.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: frame.dim(),
            context: "operator audit",
        });
    }
    let gate = frame_tolerance(frame, tol);
    let flags = symmetry_flags(a, &frame.par)?;
    let def1_applicable = frame.hamiltonian_symmetric;
    let def1 = match def1_residual(a, frame, tol) {
        Ok(r) => r,
        Err(Error::FrameInconsistent { .. }) if !def1_applicable => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let eq2 = eq2_residual(a, frame)?;
    let def2 = def2_residual(a, frame)?;
    let requirements = requirement_audit(a, frame, tol)?;
    let elements = matrix_element_audit(a, frame, tol)?;

    let def2_pass = def2 <= gate;
    let def1_pass = def1_applicable && def1 <= gate;
    let verdict = if def2_pass && def1_pass {
        Verdict::Def1AndDef2
    } else if def2_pass {
        Verdict::Def2Only
    } else {
        Verdict::NotObservable
    };

    Ok(ObservableReport {
        label: label.to_string(),
        dim: a.dim(),
        symmetric: flags.symmetric_residual <= gate,
        symmetric_residual: flags.symmetric_residual,
        pt_symmetric: flags.pt_residual <= gate,
        pt_residual: flags.pt_residual,
        def1_applicable,
        def1_residual: def1,
        eq2_residual_pc: eq2.pc,
        eq2_residual_cp: eq2.cp,
        def2_residual: def2,
        requirement_i: requirements.requirement_i,
        requirement_ii: requirements.requirement_ii,
        matrix_element_pass: elements.pass,
        matrix_element_asymmetry: elements.max_asymmetry,
        verdict,
    })
}
