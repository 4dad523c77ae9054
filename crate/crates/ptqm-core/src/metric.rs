//! CPT frame construction: spectrum phase classification, the C operator
//! assembled from biorthogonal eigenpairs, the metric eta and its inverse,
//! and the two inner products the frame defines.
//!
//! On lattices only the m verified-real low modes enter the frame, and every
//! operator identity is asserted against the kept-span projector Pi rather
//! than the full identity: high finite-difference modes of a non-Hermitian
//! discretization are numerically unreliable.

use crate::error::Error;
use crate::linop::eig::{hermitian_min_eigenvalue, EigenSystem};
use crate::linop::{dot, dotu, norm2, scale_vec, CMatrix, Tolerances, C64};
use crate::models::DiscretizedOperator;
use crate::Result;

/// PT norms below this absolute floor signal an exceptional point: the mode
/// carries no usable sign. Absolute because PT-normalized modes have |p| = 1.
pub const PT_NORM_FLOOR: f64 = 1e-12;

/// Reality pattern of the low spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Every kept-candidate eigenvalue is real and certified.
    Unbroken,
    /// At least one kept-candidate eigenvalue has a nonreal value.
    Broken,
    /// All candidates are real but some lack residual certificates.
    PartiallyKept,
}

/// Which of the low modes survive the reality and certificate gates.
#[derive(Clone, Debug)]
pub struct SpectrumClassification {
    /// Indices (into the eigensystem) of the m smallest-|Re| modes,
    /// ascending by index, which for the sorted eigensystem means ascending
    /// by eigenvalue.
    pub candidates: Vec<usize>,
    /// Reality flag per candidate: |Im lambda| <= tau_real * spectral radius.
    pub reality: Vec<bool>,
    /// Candidates that pass both reality and the residual certificates.
    pub kept: Vec<usize>,
    pub phase: Phase,
    /// max |lambda| over the whole spectrum; scale for the reality test.
    pub spectral_radius: f64,
}

impl SpectrumClassification {
    /// Largest |Im| over the candidates, in absolute eigenvalue units.
    pub fn max_abs_im(&self, e: &EigenSystem) -> f64 {
        self.candidates
            .iter()
            .map(|&k| e.values[k].im.abs())
            .fold(0.0, f64::max)
    }
}

/// Flags the m smallest-|Re| modes as real/complex and certified/uncertified.
///
/// `Broken` as soon as one candidate fails the reality test; `PartiallyKept`
/// when all are real but some lack residual certificates at `tau_res`.
pub fn classify_spectrum(
    e: &EigenSystem,
    tol: &Tolerances,
    m: usize,
) -> Result<SpectrumClassification> {
    tol.validate()?;
    assert!(e.biortho, "classification requires a biorthonormalized eigensystem");
    let n = e.dim;
    let m = m.min(n);

    let mut by_abs_re: Vec<usize> = (0..n).collect();
    by_abs_re.sort_by(|&i, &j| {
        e.values[i]
            .re
            .abs()
            .total_cmp(&e.values[j].re.abs())
            .then(i.cmp(&j))
    });
    let mut candidates = by_abs_re[..m].to_vec();
    candidates.sort_unstable();

    let spectral_radius = e.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let reality: Vec<bool> = candidates
        .iter()
        .map(|&k| e.values[k].im.abs() <= tol.tau_real * spectral_radius)
        .collect();
    let certified: Vec<bool> = candidates
        .iter()
        .map(|&k| e.residual_right[k] <= tol.tau_res && e.residual_left[k] <= tol.tau_res)
        .collect();

    let kept: Vec<usize> = candidates
        .iter()
        .zip(reality.iter().zip(certified.iter()))
        .filter(|(_, (&r, &c))| r && c)
        .map(|(&k, _)| k)
        .collect();

    let phase = if reality.iter().any(|&r| !r) {
        Phase::Broken
    } else if kept.len() == candidates.len() {
        Phase::Unbroken
    } else {
        Phase::PartiallyKept
    };

    Ok(SpectrumClassification {
        candidates,
        reality,
        kept,
        phase,
        spectral_radius,
    })
}

/// Operator order that makes the metric Hermitian positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderConvention {
    /// eta = Par * C, eta_inv = C * Par.
    PC,
    /// eta = C * Par, eta_inv = Par * C.
    CP,
}

/// Residuals of the frame invariants, recomputed on every verification.
#[derive(Clone, Copy, Debug)]
pub struct FrameResiduals {
    /// ||C^2 - Pi|| / ||Pi||.
    pub c_squared: f64,
    /// ||(C H - H C) Pi|| / ||H||.
    pub commutant: f64,
    /// ||Par conj(C) Par - C|| / ||C||.
    pub pt_commutant: f64,
    /// ||S conj(S) - Pi|| / ||Pi|| with S = C * Par; the antilinear CPT map
    /// squares to the kept-span identity. Stored, gated by def1 consumers.
    pub theta_involution: f64,
    /// ||eta - eta^H|| / ||eta|| for the stored ordering.
    pub eta_hermiticity: f64,
    /// Smallest eigenvalue of the kept-span restriction of (eta + eta^H)/2.
    pub eta_min_eigenvalue: f64,
    /// ||H^H eta - eta H|| / (||H|| ||eta||) for the stored ordering.
    pub pseudo_hermiticity: f64,
}

/// The C operator and metric of a PT-symmetric Hamiltonian, restricted to
/// the kept modes. Immutable after construction; all fields are plain data.
#[derive(Clone, Debug)]
pub struct CPTFrame {
    pub par: CMatrix,
    pub c: CMatrix,
    /// Metric of the stored `order_convention`.
    pub eta: CMatrix,
    /// Kept-span inverse of `eta` (uses C^2 = Par^2 = 1 on the kept span).
    pub eta_inv: CMatrix,
    /// PT-norm sign per kept mode, in `kept_*` order.
    pub signs: Vec<i8>,
    /// Kept-span projector Pi = sum phi_n chi_n^H.
    pub projector: CMatrix,
    /// Lattice measure; 1 for matrix models.
    pub weight: f64,
    pub order_convention: OrderConvention,
    pub modes_kept: usize,
    /// Kept eigenvalues (certified real), ascending.
    pub kept_values: Vec<f64>,
    /// Phase-fixed, PT-normalized right vectors phi_n.
    pub kept_right: Vec<Vec<C64>>,
    /// Left vectors chi_n rescaled alongside, so chi_n^H phi_m = delta_nm.
    pub kept_left: Vec<Vec<C64>>,
    /// Whether the source Hamiltonian was complex symmetric (H^T = H).
    pub hamiltonian_symmetric: bool,
    /// True when the kept span is the whole space (matrix models).
    pub exact: bool,
    pub residuals: FrameResiduals,
}

fn conj_vec(v: &[C64]) -> Vec<C64> {
    v.iter().map(|z| z.conj()).collect()
}

/// dst += coeff * u * v^H.
fn rank_one_add(dst: &mut CMatrix, coeff: C64, u: &[C64], v: &[C64]) {
    let n = dst.dim();
    for i in 0..n {
        let cu = coeff * u[i];
        for j in 0..n {
            dst.set(i, j, dst.at(i, j) + cu * v[j].conj());
        }
    }
}

fn sub_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Hermiticity residual of g and the smallest eigenvalue of its kept-span
/// restriction R_ij = weight * phi_i^H ((g + g^H)/2) phi_j.
fn metric_quality(
    g: &CMatrix,
    phis: &[Vec<C64>],
    weight: f64,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let herm = g.sub(&g.adjoint())?.fro_norm() / g.fro_norm().max(f64::MIN_POSITIVE);
    let gs = g.add(&g.adjoint())?.scale(C64::new(0.5, 0.0));
    let m = phis.len();
    let mut r = CMatrix::zeros(m);
    for j in 0..m {
        let gv = gs.apply(&phis[j])?;
        for i in 0..m {
            r.set(i, j, C64::new(weight, 0.0) * dot(&phis[i], &gv));
        }
    }
    let min_eig = hermitian_min_eigenvalue(&r, tol)?;
    Ok((herm, min_eig))
}

/// Builds the CPT frame from the spectral data of a PT-symmetric Hamiltonian.
///
/// Procedure, per kept mode: (1) fix the global phase of phi so that
/// Par conj(phi) = phi, reading the correcting phase off the
/// largest-magnitude component; (2) compute the PT norm
/// p = weight * (Par conj(phi))^T phi, take s = sign(Re p), and rescale
/// phi (and chi, inversely) so |p| = 1. Then C = sum s_n phi_n chi_n^H,
/// Pi = sum phi_n chi_n^H, and the metric ordering (Par*C vs C*Par) is the
/// first that is Hermitian positive on the kept span. Every invariant is
/// re-verified on the assembled matrices before the frame is returned.
pub fn construct_frame(
    h: &DiscretizedOperator,
    par: &DiscretizedOperator,
    e: &EigenSystem,
    cls: &SpectrumClassification,
    tol: &Tolerances,
) -> Result<CPTFrame> {
    tol.validate()?;
    assert!(e.biortho, "frame construction requires a biorthonormalized eigensystem");
    let n = e.dim;
    let hm = &h.matrix;
    let pm = &par.matrix;
    if hm.dim() != n || pm.dim() != n {
        return Err(Error::DimensionMismatch {
            left: hm.dim(),
            right: n,
            context: "construct_frame operator vs eigensystem",
        });
    }

    if cls.phase == Phase::Broken {
        let complex_count = cls.reality.iter().filter(|r| !**r).count();
        return Err(Error::BrokenPhase {
            complex_count,
            candidate_count: cls.candidates.len(),
            max_im: cls.max_abs_im(e) / cls.spectral_radius.max(f64::MIN_POSITIVE),
        });
    }
    if cls.kept.is_empty() {
        return Err(Error::FrameInconsistent {
            check: "kept mode set is empty",
            residual: 0.0,
            tolerance: 0.0,
        });
    }

    let weight = h.weight();

    // Phase-fix and PT-normalize the kept eigenpairs.
    let mut kept_right: Vec<Vec<C64>> = Vec::with_capacity(cls.kept.len());
    let mut kept_left: Vec<Vec<C64>> = Vec::with_capacity(cls.kept.len());
    let mut signs: Vec<i8> = Vec::with_capacity(cls.kept.len());
    for &k in &cls.kept {
        let mut phi = e.right[k].clone();
        let mut chi = e.left[k].clone();
        let phi_norm = norm2(&phi).max(f64::MIN_POSITIVE);

        let theta = pm.apply(&conj_vec(&phi))?;
        let mut pivot = 0usize;
        let mut pivot_abs = -1.0;
        for (j, z) in phi.iter().enumerate() {
            let a = z.norm();
            if a > pivot_abs {
                pivot_abs = a;
                pivot = j;
            }
        }
        let mu = theta[pivot] / phi[pivot];
        let scaled: Vec<C64> = phi.iter().map(|z| mu * z).collect();
        let collinearity = sub_norm(&theta, &scaled) / phi_norm;
        if collinearity > tol.tau_disc {
            return Err(Error::PhaseFixFailure {
                mode: k,
                residual: collinearity,
                pt_norm: (dotu(&theta, &phi) * weight).norm(),
            });
        }
        let half_phase = C64::from_polar(1.0, mu.arg() / 2.0);
        scale_vec(&mut phi, half_phase);
        scale_vec(&mut chi, half_phase);

        let theta = pm.apply(&conj_vec(&phi))?;
        let fixed_point = sub_norm(&theta, &phi) / phi_norm;
        let p = dotu(&theta, &phi) * weight;
        if fixed_point > tol.tau_disc || p.norm() < PT_NORM_FLOOR {
            return Err(Error::PhaseFixFailure {
                mode: k,
                residual: fixed_point,
                pt_norm: p.norm(),
            });
        }
        signs.push(if p.re >= 0.0 { 1 } else { -1 });
        let r = p.norm().sqrt();
        scale_vec(&mut phi, C64::new(1.0 / r, 0.0));
        scale_vec(&mut chi, C64::new(r, 0.0));
        kept_right.push(phi);
        kept_left.push(chi);
    }

    // Spectral assembly of C and the kept-span projector.
    let mut c = CMatrix::zeros(n);
    let mut projector = CMatrix::zeros(n);
    for (idx, (phi, chi)) in kept_right.iter().zip(&kept_left).enumerate() {
        rank_one_add(&mut c, C64::new(signs[idx] as f64, 0.0), phi, chi);
        rank_one_add(&mut projector, C64::new(1.0, 0.0), phi, chi);
    }

    let pi_norm = projector.fro_norm().max(f64::MIN_POSITIVE);
    let h_norm = hm.fro_norm().max(f64::MIN_POSITIVE);
    let c_norm = c.fro_norm().max(f64::MIN_POSITIVE);

    let c_squared = c.mul(&c)?.sub(&projector)?.fro_norm() / pi_norm;
    if c_squared > tol.tau_disc {
        return Err(Error::FrameInconsistent {
            check: "C^2 = Pi",
            residual: c_squared,
            tolerance: tol.tau_disc,
        });
    }
    let commutant = c.mul(hm)?.sub(&hm.mul(&c)?)?.mul(&projector)?.fro_norm() / h_norm;
    if commutant > tol.tau_disc {
        return Err(Error::FrameInconsistent {
            check: "[C, H] Pi = 0",
            residual: commutant,
            tolerance: tol.tau_disc,
        });
    }
    let pt_commutant = pm.mul(&c.conj())?.mul(pm)?.sub(&c)?.fro_norm() / c_norm;
    if pt_commutant > tol.tau_disc {
        return Err(Error::FrameInconsistent {
            check: "[C, PT] = 0",
            residual: pt_commutant,
            tolerance: tol.tau_disc,
        });
    }

    // Metric ordering: the paper's eta = P*C is tried first; if Hermiticity
    // or kept-span positivity fails there but holds for C*P, the frame
    // records CP instead. Both failing is an error carrying both diagnoses.
    let eta_pc = pm.mul(&c)?;
    let eta_cp = c.mul(pm)?;
    let (herm_pc, min_pc) = metric_quality(&eta_pc, &kept_right, weight, tol)?;
    let (order, eta, eta_inv, herm, min_eig) = if herm_pc <= tol.tau_disc && min_pc > 0.0 {
        (OrderConvention::PC, eta_pc, eta_cp, herm_pc, min_pc)
    } else {
        let (herm_cp, min_cp) = metric_quality(&eta_cp, &kept_right, weight, tol)?;
        if herm_cp <= tol.tau_disc && min_cp > 0.0 {
            (OrderConvention::CP, eta_cp, eta_pc, herm_cp, min_cp)
        } else {
            return Err(Error::MetricNotPositive {
                herm_pc,
                min_eig_pc: min_pc,
                herm_cp,
                min_eig_cp: min_cp,
            });
        }
    };

    let eta_norm = eta.fro_norm().max(f64::MIN_POSITIVE);
    let pseudo =
        hm.adjoint().mul(&eta)?.sub(&eta.mul(hm)?)?.fro_norm() / (h_norm * eta_norm);
    if pseudo > tol.tau_disc {
        return Err(Error::FrameInconsistent {
            check: "H^H eta = eta H",
            residual: pseudo,
            tolerance: tol.tau_disc,
        });
    }

    let s_op = c.mul(pm)?;
    let theta_involution = s_op.mul(&s_op.conj())?.sub(&projector)?.fro_norm() / pi_norm;

    let symmetric_residual = hm.transpose().sub(hm)?.fro_norm() / h_norm;
    let kept_values: Vec<f64> = cls.kept.iter().map(|&k| e.values[k].re).collect();

    let frame = CPTFrame {
        par: pm.clone(),
        c,
        eta,
        eta_inv,
        signs,
        projector,
        weight,
        order_convention: order,
        modes_kept: kept_right.len(),
        kept_values,
        kept_right,
        kept_left,
        hamiltonian_symmetric: symmetric_residual <= tol.tau_disc,
        exact: cls.kept.len() == n,
        residuals: FrameResiduals {
            c_squared,
            commutant,
            pt_commutant,
            theta_involution,
            eta_hermiticity: herm,
            eta_min_eigenvalue: min_eig,
            pseudo_hermiticity: pseudo,
        },
    };

    // Invariants are re-verified on the assembled matrices, not assumed from
    // the construction path.
    let residuals = frame.verify(Some(hm), tol)?;
    Ok(CPTFrame { residuals, ..frame })
}

impl CPTFrame {
    /// Identity frame on a space with no PT structure: C = Par = eta = I,
    /// weight 1, every basis vector kept. Lets frame-parameterized audits
    /// run on bare matrices; `kept_values` are zero placeholders.
    pub fn trivial(dim: usize) -> CPTFrame {
        let id = CMatrix::identity(dim);
        let basis: Vec<Vec<C64>> = (0..dim)
            .map(|j| {
                let mut v = vec![C64::new(0.0, 0.0); dim];
                v[j] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        CPTFrame {
            par: id.clone(),
            c: id.clone(),
            eta: id.clone(),
            eta_inv: id.clone(),
            signs: vec![1; dim],
            projector: id,
            weight: 1.0,
            order_convention: OrderConvention::PC,
            modes_kept: dim,
            kept_values: vec![0.0; dim],
            kept_right: basis.clone(),
            kept_left: basis,
            hamiltonian_symmetric: true,
            exact: true,
            residuals: FrameResiduals {
                c_squared: 0.0,
                commutant: 0.0,
                pt_commutant: 0.0,
                theta_involution: 0.0,
                eta_hermiticity: 0.0,
                eta_min_eigenvalue: 1.0,
                pseudo_hermiticity: 0.0,
            },
        }
    }

    /// Recomputes the frame invariants from the stored matrices and gates
    /// them exactly as construction does. The commutant and
    /// pseudo-Hermiticity residuals need the Hamiltonian; when `h` is absent
    /// the stored values are carried over unchecked.
    pub fn verify(&self, h: Option<&CMatrix>, tol: &Tolerances) -> Result<FrameResiduals> {
        tol.validate()?;
        let pi_norm = self.projector.fro_norm().max(f64::MIN_POSITIVE);
        let c_norm = self.c.fro_norm().max(f64::MIN_POSITIVE);

        let c_squared = self.c.mul(&self.c)?.sub(&self.projector)?.fro_norm() / pi_norm;
        if c_squared > tol.tau_disc {
            return Err(Error::FrameInconsistent {
                check: "C^2 = Pi",
                residual: c_squared,
                tolerance: tol.tau_disc,
            });
        }
        let pt_commutant = self
            .par
            .mul(&self.c.conj())?
            .mul(&self.par)?
            .sub(&self.c)?
            .fro_norm()
            / c_norm;
        if pt_commutant > tol.tau_disc {
            return Err(Error::FrameInconsistent {
                check: "[C, PT] = 0",
                residual: pt_commutant,
                tolerance: tol.tau_disc,
            });
        }
        let s_op = self.c.mul(&self.par)?;
        let theta_involution =
            s_op.mul(&s_op.conj())?.sub(&self.projector)?.fro_norm() / pi_norm;

        let (herm, min_eig) = metric_quality(&self.eta, &self.kept_right, self.weight, tol)?;
        if herm > tol.tau_disc || min_eig <= 0.0 {
            let nan = f64::NAN;
            let (pc, cp) = match self.order_convention {
                OrderConvention::PC => ((herm, min_eig), (nan, nan)),
                OrderConvention::CP => ((nan, nan), (herm, min_eig)),
            };
            return Err(Error::MetricNotPositive {
                herm_pc: pc.0,
                min_eig_pc: pc.1,
                herm_cp: cp.0,
                min_eig_cp: cp.1,
            });
        }

        let (commutant, pseudo) = match h {
            Some(hm) => {
                let h_norm = hm.fro_norm().max(f64::MIN_POSITIVE);
                let commutant = self
                    .c
                    .mul(hm)?
                    .sub(&hm.mul(&self.c)?)?
                    .mul(&self.projector)?
                    .fro_norm()
                    / h_norm;
                if commutant > tol.tau_disc {
                    return Err(Error::FrameInconsistent {
                        check: "[C, H] Pi = 0",
                        residual: commutant,
                        tolerance: tol.tau_disc,
                    });
                }
                let eta_norm = self.eta.fro_norm().max(f64::MIN_POSITIVE);
                let pseudo = hm
                    .adjoint()
                    .mul(&self.eta)?
                    .sub(&self.eta.mul(hm)?)?
                    .fro_norm()
                    / (h_norm * eta_norm);
                if pseudo > tol.tau_disc {
                    return Err(Error::FrameInconsistent {
                        check: "H^H eta = eta H",
                        residual: pseudo,
                        tolerance: tol.tau_disc,
                    });
                }
                (commutant, pseudo)
            }
            None => (self.residuals.commutant, self.residuals.pseudo_hermiticity),
        };

        Ok(FrameResiduals {
            c_squared,
            commutant,
            pt_commutant,
            theta_involution,
            eta_hermiticity: herm,
            eta_min_eigenvalue: min_eig,
            pseudo_hermiticity: pseudo,
        })
    }

    /// Metric inner product weight * u^H eta v.
    pub fn inner_eta(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        self.check_dims(u, v, "inner_eta")?;
        let ev = self.eta.apply(v)?;
        Ok(dot(u, &ev) * C64::new(self.weight, 0.0))
    }

    /// CPT inner product weight * sum_j (C Par conj(u))_j v_j: the
    /// CPT-conjugate of u paired with v under the plain lattice sum. The map
    /// is structurally C * Par whatever the metric ordering.
    pub fn inner_cpt(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        self.check_dims(u, v, "inner_cpt")?;
        let t = self.par.apply(&conj_vec(u))?;
        let t = self.c.apply(&t)?;
        Ok(dotu(&t, v) * C64::new(self.weight, 0.0))
    }

    fn check_dims(&self, u: &[C64], v: &[C64], context: &'static str) -> Result<()> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                left: u.len(),
                right: v.len(),
                context,
            });
        }
        if u.len() != self.c.dim() {
            return Err(Error::DimensionMismatch {
                left: u.len(),
                right: self.c.dim(),
                context,
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }
}
