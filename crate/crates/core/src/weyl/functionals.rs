//! Fidelities and cost functionals on the Weyl chamber and on local invariants.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use super::{
    canonical_gate, in_pe_polyhedron, local_invariants, weyl_coordinates, LocalInvariants,
    NamedTarget, WeylPoint,
};
use crate::error::{Error, Result};
use crate::linalg::{closest_unitary_with, population_loss, DistanceNorm, Gate};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionalKind {
    /// Perfect-entangler fidelity on chamber coordinates.
    PeCspace,
    /// Local-equivalence-class fidelity on chamber coordinates.
    LecCspace,
    /// Perfect-entangler cost on local invariants.
    PeGinvariant,
    /// Squared distance of local invariants to a target.
    LiGinvariant,
    /// Phase-insensitive gate overlap with a fixed target gate.
    Sm,
}

impl FunctionalKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalKind::PeCspace => "pe_cspace",
            FunctionalKind::LecCspace => "lec_cspace",
            FunctionalKind::PeGinvariant => "pe_ginvariant",
            FunctionalKind::LiGinvariant => "li_ginvariant",
            FunctionalKind::Sm => "sm",
        }
    }

    pub fn needs_target(&self) -> bool {
        matches!(
            self,
            FunctionalKind::LecCspace | FunctionalKind::LiGinvariant | FunctionalKind::Sm
        )
    }

    pub fn is_cspace(&self) -> bool {
        matches!(self, FunctionalKind::PeCspace | FunctionalKind::LecCspace)
    }

    pub fn is_ginvariant(&self) -> bool {
        matches!(self, FunctionalKind::PeGinvariant | FunctionalKind::LiGinvariant)
    }

    pub fn is_pe(&self) -> bool {
        matches!(self, FunctionalKind::PeCspace | FunctionalKind::PeGinvariant)
    }
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            FunctionalKind::PeCspace,
            FunctionalKind::LecCspace,
            FunctionalKind::PeGinvariant,
            FunctionalKind::LiGinvariant,
            FunctionalKind::Sm,
        ]
        .into_iter()
        .find(|k| k.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::InvalidParameter(format!("unknown functional kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Named(NamedTarget),
    Point(WeylPoint),
    Invariants(LocalInvariants),
    Gate(Gate),
}

impl Target {
    pub fn point(&self) -> Result<WeylPoint> {
        match self {
            Target::Named(t) => Ok(t.point()),
            Target::Point(p) => Ok(*p),
            Target::Gate(g) => weyl_coordinates(g),
            Target::Invariants(_) => Err(Error::FunctionalMismatch {
                kind: "target".into(),
                reason: "chamber coordinates cannot be derived from invariants alone".into(),
            }),
        }
    }

    pub fn invariants(&self) -> Result<LocalInvariants> {
        match self {
            Target::Named(t) => Ok(t.invariants()),
            Target::Point(p) => local_invariants(&canonical_gate(p)),
            Target::Gate(g) => local_invariants(g),
            Target::Invariants(g) => Ok(*g),
        }
    }

    pub fn gate(&self) -> Result<Gate> {
        match self {
            Target::Named(t) => Ok(t.gate()),
            Target::Point(p) => Ok(canonical_gate(p)),
            Target::Gate(g) => Ok(*g),
            Target::Invariants(_) => Err(Error::FunctionalMismatch {
                kind: "target".into(),
                reason: "a gate cannot be derived from invariants alone".into(),
            }),
        }
    }
}

/// Sign applied to the population-loss weight in the combined cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossWeight {
    /// `(1 - w) * loss`, which penalizes leakage.
    #[default]
    OneMinusW,
    /// `(w - 1) * loss`.
    WMinusOne,
}

/// How the invariant-based perfect-entangler cost is formed from `D(g)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PeCost {
    /// `D(g)` itself.
    Raw,
    /// `|D(g)|` while the closest unitary lies outside the polyhedron, else 0.
    #[default]
    Saturated,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    pub target: Option<Target>,
    pub w: f64,
    pub norm: DistanceNorm,
    pub loss_weight: LossWeight,
    pub pe_cost: PeCost,
}

impl FunctionalSpec {
    pub fn new(kind: FunctionalKind, target: Option<Target>, w: f64) -> Result<Self> {
        let spec = Self {
            kind,
            target,
            w,
            norm: DistanceNorm::default(),
            loss_weight: LossWeight::default(),
            pe_cost: PeCost::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn pe_cspace() -> Self {
        Self::new(FunctionalKind::PeCspace, None, 1.0).expect("valid")
    }

    pub fn lec_cspace(target: Target) -> Self {
        Self::new(FunctionalKind::LecCspace, Some(target), 1.0).expect("valid")
    }

    pub fn pe_ginvariant(w: f64) -> Result<Self> {
        Self::new(FunctionalKind::PeGinvariant, None, w)
    }

    pub fn li_ginvariant(target: Target, w: f64) -> Result<Self> {
        Self::new(FunctionalKind::LiGinvariant, Some(target), w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::InvalidParameter(format!(
                "weight w = {} outside [0, 1]",
                self.w
            )));
        }
        if self.kind.needs_target() && self.target.is_none() {
            return Err(Error::FunctionalMismatch {
                kind: self.kind.to_string(),
                reason: "a target is required".into(),
            });
        }
        if self.kind == FunctionalKind::LecCspace {
            self.target.as_ref().map(|t| t.point()).transpose()?;
        }
        if self.kind == FunctionalKind::Sm {
            self.target.as_ref().map(|t| t.gate()).transpose()?;
        }
        Ok(())
    }

    pub fn with_norm(mut self, norm: DistanceNorm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_pe_cost(mut self, pe_cost: PeCost) -> Self {
        self.pe_cost = pe_cost;
        self
    }

    pub fn with_loss_weight(mut self, loss_weight: LossWeight) -> Self {
        self.loss_weight = loss_weight;
        self
    }

    fn require_target(&self) -> Result<&Target> {
        self.target.as_ref().ok_or_else(|| Error::FunctionalMismatch {
            kind: self.kind.to_string(),
            reason: "a target is required".into(),
        })
    }

    pub fn target_point(&self) -> Result<WeylPoint> {
        self.require_target()?.point()
    }

    pub fn target_invariants(&self) -> Result<LocalInvariants> {
        self.require_target()?.invariants()
    }

    /// Coefficient multiplying the population loss in [`j_tilde`].
    pub fn loss_coefficient(&self) -> f64 {
        match self.loss_weight {
            LossWeight::OneMinusW => 1.0 - self.w,
            LossWeight::WMinusOne => self.w - 1.0,
        }
    }
}

fn cos2(x: f64) -> f64 {
    x.cos().powi(2)
}

/// Perfect-entangler fidelity of a chamber point; 1 exactly inside the polyhedron.
pub fn f_pe(p: &WeylPoint) -> f64 {
    let WeylPoint { c1, c2, c3 } = *p;
    if c1 + c2 <= FRAC_PI_2 {
        cos2((c1 + c2 - FRAC_PI_2) / 4.0)
    } else if c2 + c3 >= FRAC_PI_2 {
        cos2((c2 + c3 - FRAC_PI_2) / 4.0)
    } else if c1 - c2 >= FRAC_PI_2 {
        cos2((c1 - c2 - FRAC_PI_2) / 4.0)
    } else {
        1.0
    }
}

/// Distance to the nearest multiple of `pi`, in `[-pi/2, pi/2]`.
fn wrap_pi(x: f64) -> f64 {
    x - PI * (x / PI).round()
}

fn lec_product(a: &WeylPoint, b: &WeylPoint) -> f64 {
    [a.c1 - b.c1, a.c2 - b.c2, a.c3 - b.c3]
        .iter()
        .map(|d| (wrap_pi(*d) / 2.0).cos())
        .product()
}

/// Fidelity of belonging to the local equivalence class of `target`.
/// The target's mirror image `(pi - c1, c2, -c3)` is the same class, and
/// coordinate differences are taken modulo `pi`.
pub fn f_lec(c_u: &WeylPoint, c_target: &WeylPoint) -> f64 {
    let mirror = WeylPoint::new(PI - c_target.c1, c_target.c2, -c_target.c3);
    lec_product(c_u, c_target).max(lec_product(c_u, &mirror))
}

fn closest_point(gate: &Gate, norm: DistanceNorm) -> Result<(WeylPoint, f64)> {
    let (u, dist) = closest_unitary_with(gate, norm)?;
    Ok((weyl_coordinates(&u)?, dist))
}

/// `F_PE(U) - ||U~ - U||` for the closest unitary `U`.
pub fn f_pe_tilde(gate: &Gate) -> Result<f64> {
    f_pe_tilde_with(gate, DistanceNorm::default())
}

pub fn f_pe_tilde_with(gate: &Gate, norm: DistanceNorm) -> Result<f64> {
    let (p, dist) = closest_point(gate, norm)?;
    Ok(f_pe(&p) - dist)
}

/// `F_LEC(U) - ||U~ - U||` for the closest unitary `U`.
pub fn f_lec_tilde(gate: &Gate, target: &WeylPoint) -> Result<f64> {
    f_lec_tilde_with(gate, target, DistanceNorm::default())
}

pub fn f_lec_tilde_with(gate: &Gate, target: &WeylPoint, norm: DistanceNorm) -> Result<f64> {
    let (p, dist) = closest_point(gate, norm)?;
    Ok(f_lec(&p, target) - dist)
}

/// Squared Euclidean distance between invariant triples.
pub fn j_li(g_u: &LocalInvariants, g_o: &LocalInvariants) -> f64 {
    (g_u.g1 - g_o.g1).powi(2) + (g_u.g2 - g_o.g2).powi(2) + (g_u.g3 - g_o.g3).powi(2)
}

/// `D = g3 sqrt(g1^2 + g2^2) - g1`.
pub fn d_pe(g: &LocalInvariants) -> f64 {
    g.g3 * g.g1.hypot(g.g2) - g.g1
}

/// Whether the closest unitary to `gate` lies in the polyhedron.
pub fn closest_in_pe(gate: &Gate) -> Result<bool> {
    let (u, _) = closest_unitary_with(gate, DistanceNorm::default())?;
    Ok(in_pe_polyhedron(&weyl_coordinates(&u)?))
}

/// Invariant-space part of the cost, before weighting.
pub fn j_core(gate: &Gate, spec: &FunctionalSpec) -> Result<f64> {
    let g = local_invariants(gate)?;
    match spec.kind {
        FunctionalKind::LiGinvariant => Ok(j_li(&g, &spec.target_invariants()?)),
        FunctionalKind::PeGinvariant => match spec.pe_cost {
            PeCost::Raw => Ok(d_pe(&g)),
            PeCost::Saturated => {
                if closest_in_pe(gate)? {
                    Ok(0.0)
                } else {
                    Ok(d_pe(&g).abs())
                }
            }
        },
        other => Err(Error::FunctionalMismatch {
            kind: other.to_string(),
            reason: "not an invariant-space functional".into(),
        }),
    }
}

/// `w J_core + (1 - w) loss` (sign of the second weight per `spec.loss_weight`).
pub fn j_tilde(gate: &Gate, spec: &FunctionalSpec) -> Result<f64> {
    let loss = population_loss(gate);
    let core = if spec.w == 0.0 { 0.0 } else { j_core(gate, spec)? };
    Ok(spec.w * core + spec.loss_coefficient() * loss)
}

/// `|tr(V^dagger U)|^2 / 16`.
pub fn f_sm(u: &Gate, v: &Gate) -> f64 {
    (v.0.adjoint() * u.0).trace().norm_sqr() / 16.0
}

/// Average gate fidelity of `gate` with respect to the unitary `o`,
/// `(tr(M^dagger M) + |tr M|^2) / 20` with `M = O^dagger U~`.
pub fn f_avg(gate: &Gate, o: &Gate) -> f64 {
    let m = o.0.adjoint() * gate.0;
    (m.norm_squared() + m.trace().norm_sqr()) / 20.0
}

/// Figure of merit maximized by the gradient-free optimizer: `F~_PE`,
/// `F~_LEC` or `F_sm` depending on the kind.
pub fn fidelity(gate: &Gate, spec: &FunctionalSpec) -> Result<f64> {
    match spec.kind {
        FunctionalKind::PeCspace => f_pe_tilde_with(gate, spec.norm),
        FunctionalKind::LecCspace => f_lec_tilde_with(gate, &spec.target_point()?, spec.norm),
        FunctionalKind::Sm => Ok(f_sm(gate, &spec.require_target()?.gate()?)),
        other => Err(Error::FunctionalMismatch {
            kind: other.to_string(),
            reason: "not a fidelity functional".into(),
        }),
    }
}

/// Chamber-space error `1 - F~` used to compare runs across functional kinds:
/// `1 - F~_PE` for the perfect-entangler kinds, `1 - F~_LEC` towards the
/// target otherwise. Invariant-only targets fall back to `J_LI`.
pub fn chamber_error(gate: &Gate, spec: &FunctionalSpec) -> Result<f64> {
    match spec.kind {
        FunctionalKind::PeCspace | FunctionalKind::PeGinvariant => {
            Ok(1.0 - f_pe_tilde_with(gate, spec.norm)?)
        }
        FunctionalKind::LecCspace | FunctionalKind::LiGinvariant => match spec.target_point() {
            Ok(p) => Ok(1.0 - f_lec_tilde_with(gate, &p, spec.norm)?),
            Err(_) => Ok(j_li(&local_invariants(gate)?, &spec.target_invariants()?)),
        },
        FunctionalKind::Sm => Ok(1.0 - fidelity(gate, spec)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    const COS2_PI8: f64 = 0.853_553_390_593_273_7;

    #[test]
    fn f_pe_examples() {
        assert_eq!(f_pe(&WeylPoint::new(FRAC_PI_2, 0.0, 0.0)), 1.0);
        assert!((f_pe(&WeylPoint::new(0.0, 0.0, 0.0)) - COS2_PI8).abs() < 1e-15);
        let s = FRAC_PI_2;
        assert!((f_pe(&WeylPoint::new(s, s, s)) - COS2_PI8).abs() < 1e-15);
        assert_eq!(f_pe(&NamedTarget::P.point()), 1.0);
    }

    #[test]
    fn f_lec_examples() {
        let a = WeylPoint::new(0.3, 0.2, 0.1);
        assert!((f_lec(&a, &a) - 1.0).abs() < 1e-15);
        let v = f_lec(&WeylPoint::new(0.0, 0.0, 0.0), &WeylPoint::new(FRAC_PI_2, 0.0, 0.0));
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let (x, y) = (0.4, 0.3);
        let m = f_lec(&WeylPoint::new(PI - x, y, 0.0), &WeylPoint::new(x, y, 0.0));
        assert!((m - 1.0).abs() < 1e-15);
        // identity and A1 are the same class
        assert!((f_lec(&NamedTarget::Identity.point(), &NamedTarget::A1.point()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tilde_variants() {
        assert!((f_pe_tilde(&Gate::cnot()).unwrap() - 1.0).abs() < 1e-12);
        let g = Gate::cnot().scale(c(0.99, 0.0));
        assert!((f_pe_tilde(&g).unwrap() - 0.99).abs() < 1e-12);
        let v = f_lec_tilde(&g, &NamedTarget::Cnot.point()).unwrap();
        assert!((v - 0.99).abs() < 1e-12);
    }

    #[test]
    fn j_li_examples() {
        let id = LocalInvariants::new(1.0, 0.0, 3.0);
        let cnot = LocalInvariants::new(0.0, 0.0, 1.0);
        assert_eq!(j_li(&id, &id), 0.0);
        assert_eq!(j_li(&id, &cnot), 5.0);
        assert_eq!(j_li(&LocalInvariants::new(0.25, 0.0, 1.0), &cnot), 1.0 / 16.0);
    }

    #[test]
    fn d_pe_examples() {
        assert_eq!(d_pe(&LocalInvariants::new(0.0, 0.0, 1.0)), 0.0);
        assert_eq!(d_pe(&LocalInvariants::new(1.0, 0.0, 3.0)), 2.0);
        let swap = local_invariants(&Gate::swap()).unwrap();
        assert!((d_pe(&swap) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn j_tilde_examples() {
        let spec = FunctionalSpec::pe_ginvariant(0.3).unwrap();
        assert!(j_tilde(&Gate::cnot(), &spec).unwrap().abs() < 1e-12);
        let raw = spec.with_pe_cost(PeCost::Raw);
        assert!(j_tilde(&Gate::cnot(), &raw).unwrap().abs() < 1e-12);

        let li = FunctionalSpec::li_ginvariant(Target::Named(NamedTarget::Cnot), 1.0).unwrap();
        assert!((j_tilde(&Gate::identity(), &li).unwrap() - 5.0).abs() < 1e-12);

        let mut lossy = Gate::identity();
        lossy.0[(3, 3)] = c(0.5_f64.sqrt(), 0.0);
        let w0 = FunctionalSpec::li_ginvariant(Target::Named(NamedTarget::Cnot), 0.0).unwrap();
        assert!((j_tilde(&lossy, &w0).unwrap() - 0.125).abs() < 1e-15);
        let printed = w0.with_loss_weight(LossWeight::WMinusOne);
        assert!((j_tilde(&lossy, &printed).unwrap() + 0.125).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(FunctionalSpec::new(FunctionalKind::PeGinvariant, None, 1.5).is_err());
        assert!(FunctionalSpec::new(FunctionalKind::LecCspace, None, 1.0).is_err());
        assert!(FunctionalSpec::new(FunctionalKind::LiGinvariant, None, 1.0).is_err());
        assert!(FunctionalSpec::new(
            FunctionalKind::LecCspace,
            Some(Target::Invariants(LocalInvariants::new(0.0, 0.0, 1.0))),
            1.0
        )
        .is_err());
        assert!(FunctionalSpec::new(FunctionalKind::PeCspace, None, 0.0).is_ok());
        assert_eq!("LI_ginvariant".parse::<FunctionalKind>().unwrap(), FunctionalKind::LiGinvariant);
    }

    #[test]
    fn f_sm_examples() {
        assert!((f_sm(&Gate::cnot(), &Gate::cnot()) - 1.0).abs() < 1e-15);
        assert!((f_sm(&Gate::cz(), &Gate::cnot()) - 0.25).abs() < 1e-15);
        let phased = Gate::swap().scale(num_complex::Complex64::from_polar(1.0, 0.8));
        assert!((f_sm(&phased, &Gate::swap()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn f_avg_examples() {
        let o = Gate::sqrt_swap();
        assert!((f_avg(&o, &o) - 1.0).abs() < 1e-14);
        assert_eq!(f_avg(&Gate(crate::linalg::Matrix4c::zeros()), &o), 0.0);
    }
}
