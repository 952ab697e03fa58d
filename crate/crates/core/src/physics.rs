//! Pressure laws and the Riemann invariant transformation.
//!
//! `R~(rho) = int_1^rho sqrt(p'(r)) / r dr` and `R± = R~(rho) ± q / rho`, with
//! `q` the mass flux density in kg/(m² s). All three laws have closed forms
//! for `R~` and its inverse.

use crate::error::{Error, Result};

pub const PA_PER_BAR: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawKind {
    /// `p = c² rho`.
    Isothermal { c: f64 },
    /// `p = a rho^gamma`.
    Isentropic { a: f64, gamma: f64 },
    /// American Gas Association model `p = RsT rho / (1 - alpha rho)`, `alpha <= 0`.
    Aga { rst: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw {
    kind: LawKind,
    rho_ref: f64,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "{name} must be positive, got {x}"
        )))
    }
}

impl PressureLaw {
    pub fn isothermal(c: f64) -> Result<Self> {
        positive("sound speed c", c)?;
        Self::checked(LawKind::Isothermal { c }, 1.0)
    }

    pub fn isentropic(a: f64, gamma: f64, rho_ref: f64) -> Result<Self> {
        positive("a", a)?;
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::validation(format!(
                "gamma must exceed 1, got {gamma}"
            )));
        }
        Self::checked(LawKind::Isentropic { a, gamma }, rho_ref)
    }

    pub fn aga(rst: f64, alpha: f64, rho_ref: f64) -> Result<Self> {
        positive("RsT", rst)?;
        if !(alpha.is_finite() && alpha <= 0.0) {
            return Err(Error::validation(format!(
                "AGA alpha must be <= 0, got {alpha}"
            )));
        }
        Self::checked(LawKind::Aga { rst, alpha }, rho_ref)
    }

    /// Same law, different reference density.
    pub fn with_rho_ref(self, rho_ref: f64) -> Result<Self> {
        Self::checked(self.kind, rho_ref)
    }

    fn checked(kind: LawKind, rho_ref: f64) -> Result<Self> {
        positive("reference density", rho_ref)?;
        let law = Self { kind, rho_ref };
        // Sampled monotonicity over a few decades around the reference density.
        let mut prev = law.pressure(rho_ref * 1e-3)?;
        for k in 1..=60 {
            let rho = rho_ref * 10f64.powf(-3.0 + 6.0 * k as f64 / 60.0);
            let p = law.pressure(rho)?;
            if p <= prev {
                return Err(Error::validation(format!(
                    "pressure law is not strictly increasing near rho = {rho}"
                )));
            }
            prev = p;
        }
        Ok(law)
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn rho_ref(&self) -> f64 {
        self.rho_ref
    }

    fn check_density(&self, rho: f64) -> Result<()> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Domain(format!(
                "density must be positive, got {rho}"
            )));
        }
        Ok(())
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(match self.kind {
            LawKind::Isothermal { c } => c * c * rho,
            LawKind::Isentropic { a, gamma } => a * rho.powf(gamma),
            LawKind::Aga { rst, alpha } => rst * rho / (1.0 - alpha * rho),
        })
    }

    /// `p'(rho)`.
    pub fn dp_drho(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(match self.kind {
            LawKind::Isothermal { c } => c * c,
            LawKind::Isentropic { a, gamma } => a * gamma * rho.powf(gamma - 1.0),
            LawKind::Aga { rst, alpha } => {
                let s = 1.0 - alpha * rho;
                rst / (s * s)
            }
        })
    }

    /// Inverse of the pressure law.
    pub fn density(&self, p: f64) -> Result<f64> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Domain(format!("pressure must be positive, got {p}")));
        }
        Ok(match self.kind {
            LawKind::Isothermal { c } => p / (c * c),
            LawKind::Isentropic { a, gamma } => (p / a).powf(1.0 / gamma),
            LawKind::Aga { rst, alpha } => {
                let denom = rst + alpha * p;
                if denom <= 0.0 {
                    return Err(Error::Domain(format!(
                        "pressure {p} Pa exceeds the AGA limit {}",
                        -rst / alpha
                    )));
                }
                p / denom
            }
        })
    }

    /// Sound speed `c = sqrt(p'(rho_ref))` used for the constant eigenvalues.
    pub fn sound_speed(&self) -> f64 {
        match self.kind {
            LawKind::Isothermal { c } => c,
            _ => self
                .dp_drho(self.rho_ref)
                .expect("reference density validated at construction")
                .sqrt(),
        }
    }

    pub fn rtilde(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(match self.kind {
            LawKind::Isothermal { c } => c * rho.ln(),
            LawKind::Isentropic { a, gamma } => {
                let k = isentropic_scale(a, gamma);
                k * (rho.powf(0.5 * (gamma - 1.0)) - 1.0)
            }
            LawKind::Aga { rst, alpha } => {
                // 1 / (r (1 - alpha r)) = 1/r + alpha / (1 - alpha r)
                rst.sqrt() * (rho.ln() - (-alpha * rho).ln_1p() + (-alpha).ln_1p())
            }
        })
    }

    pub fn rtilde_inverse(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::Domain(format!("invariant level {r} is not finite")));
        }
        let rho = match self.kind {
            LawKind::Isothermal { c } => (r / c).exp(),
            LawKind::Isentropic { a, gamma } => {
                let base = 1.0 + r / isentropic_scale(a, gamma);
                if base <= 0.0 {
                    return Err(Error::Domain(format!(
                        "invariant level {r} is below the vacuum limit {}",
                        -isentropic_scale(a, gamma)
                    )));
                }
                base.powf(2.0 / (gamma - 1.0))
            }
            LawKind::Aga { rst, alpha } => {
                let k = (r / rst.sqrt()).exp() / (1.0 - alpha);
                let denom = 1.0 + alpha * k;
                if denom <= 0.0 {
                    return Err(Error::Domain(format!(
                        "invariant level {r} exceeds the AGA density limit"
                    )));
                }
                k / denom
            }
        };
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Domain(format!(
                "invariant level {r} maps to inadmissible density {rho}"
            )));
        }
        Ok(rho)
    }

    pub fn to_riemann(&self, state: GasState) -> Result<RiemannPair> {
        let r = self.rtilde(state.rho)?;
        let v = state.q / state.rho;
        Ok(RiemannPair {
            plus: r + v,
            minus: r - v,
        })
    }

    pub fn from_riemann(&self, pair: RiemannPair) -> Result<GasState> {
        let rho = self.rtilde_inverse(pair.midpoint())?;
        Ok(GasState {
            rho,
            q: rho * pair.velocity(),
        })
    }

    pub fn pressure_from_riemann(&self, plus: f64, minus: f64) -> Result<f64> {
        let rho = self.rtilde_inverse(0.5 * (plus + minus))?;
        self.pressure(rho)
    }

    /// Eigenvalues `v ± sqrt(p'(rho))` of the quasilinear system, for diagnostics.
    pub fn quasilinear_eigenvalues(&self, plus: f64, minus: f64) -> Result<Eigenvalues> {
        let pair = RiemannPair { plus, minus };
        let rho = self.rtilde_inverse(pair.midpoint())?;
        let speed = self.dp_drho(rho)?.sqrt();
        let v = pair.velocity();
        Ok(Eigenvalues {
            plus: v + speed,
            minus: v - speed,
            mach: v / self.sound_speed(),
        })
    }

    /// Invariant pair of the reference state (rho_ref at rest).
    pub fn reference_pair(&self) -> RiemannPair {
        let r = self
            .rtilde(self.rho_ref)
            .expect("reference density validated at construction");
        RiemannPair { plus: r, minus: r }
    }
}

fn isentropic_scale(a: f64, gamma: f64) -> f64 {
    2.0 * (a * gamma).sqrt() / (gamma - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    /// Density in kg/m³.
    pub rho: f64,
    /// Mass flux density in kg/(m² s).
    pub q: f64,
}

impl GasState {
    pub fn new(rho: f64, q: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Domain(format!(
                "density must be positive, got {rho}"
            )));
        }
        if !q.is_finite() {
            return Err(Error::Domain(format!("mass flux {q} is not finite")));
        }
        Ok(Self { rho, q })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannPair {
    pub plus: f64,
    pub minus: f64,
}

impl RiemannPair {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.plus + self.minus)
    }

    pub fn velocity(&self) -> f64 {
        0.5 * (self.plus - self.minus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalues {
    pub plus: f64,
    pub minus: f64,
    pub mach: f64,
}

/// Friction source `nu |R+ - R-| (R+ - R-)`.
#[inline]
pub fn source_sigma(nu: f64, plus: f64, minus: f64) -> f64 {
    let d = plus - minus;
    nu * d.abs() * d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn isothermal_rtilde() {
        let law = PressureLaw::isothermal(2.0).unwrap();
        assert_eq!(law.rtilde(1.0).unwrap(), 0.0);
        assert_relative_eq!(law.rtilde(E).unwrap(), 2.0, epsilon = 1e-15);
        assert!(matches!(law.rtilde(0.0), Err(Error::Domain(_))));
        assert!(matches!(law.rtilde(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn conversion_examples() {
        let law = PressureLaw::isothermal(2.0).unwrap();
        let pair = law.to_riemann(GasState::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!((pair.plus, pair.minus), (0.0, 0.0));
        let pair = law.to_riemann(GasState::new(7.3, 0.0).unwrap()).unwrap();
        assert_eq!(pair.plus, pair.minus);

        let state = law
            .from_riemann(RiemannPair {
                plus: 3.0,
                minus: 1.0,
            })
            .unwrap();
        assert_relative_eq!(state.rho, E, epsilon = 1e-15);
        assert_relative_eq!(state.q, E, epsilon = 1e-15);
    }

    #[test]
    fn pressure_examples() {
        let c = 340.0;
        let law = PressureLaw::isothermal(c).unwrap();
        assert_relative_eq!(law.pressure_from_riemann(0.0, 0.0).unwrap(), c * c);

        // With a = 1, gamma = 2 both the general composition and the
        // normalized closed form a^(-1/2g) (m + a^(1/2))^(2g/(g-1)) give 1 at m = 0.
        let law = PressureLaw::isentropic(1.0, 2.0, 1.0).unwrap();
        let closed = |m: f64| (m + 1.0f64).powf(4.0);
        assert_relative_eq!(law.pressure_from_riemann(0.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(closed(0.0), 1.0);

        for (p, m) in [(1e5, -2e4), (3.0, 7.0), (-50.0, 10.0)] {
            assert!(
                PressureLaw::isothermal(340.0)
                    .unwrap()
                    .pressure_from_riemann(p, m)
                    .unwrap()
                    > 0.0
            );
        }
        // below the vacuum limit of the isentropic law
        assert!(matches!(
            law.pressure_from_riemann(-10.0, -10.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(source_sigma(0.25, 2.0, 1.0), 0.25);
        assert_eq!(source_sigma(0.3, 1.5, -4.0), -source_sigma(0.3, -4.0, 1.5));
        assert_relative_eq!(0.0137 / 4.0, 0.003425, epsilon = 1e-18);
    }

    #[test]
    fn eigenvalue_examples() {
        let iso = PressureLaw::isothermal(340.0).unwrap();
        let ev = iso.quasilinear_eigenvalues(1300.0, 1290.0).unwrap();
        assert_relative_eq!(ev.plus, 5.0 + 340.0);
        assert_relative_eq!(ev.minus, 5.0 - 340.0);
        assert_relative_eq!(ev.mach, 5.0 / 340.0);

        let law = PressureLaw::isentropic(37_000.0, 1.3, 50.0).unwrap();
        let r = law.rtilde(20.0).unwrap();
        let ev = law.quasilinear_eigenvalues(r, r).unwrap();
        let speed = law.dp_drho(20.0).unwrap().sqrt();
        assert_relative_eq!(ev.plus, speed, max_relative = 1e-12);
        assert_relative_eq!(ev.minus, -speed, max_relative = 1e-12);
    }

    #[test]
    fn reference_state_eigenvalues_are_constant_speeds() {
        for law in [
            PressureLaw::isothermal(340.0).unwrap(),
            PressureLaw::isentropic(37_000.0, 1.3, 50.0).unwrap(),
            PressureLaw::aga(115_600.0, -0.002, 50.0).unwrap(),
        ] {
            let c = law.sound_speed();
            let r = law.reference_pair();
            let ev = law.quasilinear_eigenvalues(r.plus, r.minus).unwrap();
            assert!((ev.plus - c).abs() <= 1e-12 * c, "{law:?}");
            assert!((ev.minus + c).abs() <= 1e-12 * c, "{law:?}");
        }
    }

    #[test]
    fn aga_with_zero_alpha_is_isothermal() {
        let aga = PressureLaw::aga(340.0 * 340.0, 0.0, 1.0).unwrap();
        let iso = PressureLaw::isothermal(340.0).unwrap();
        for rho in [0.1, 1.0, 51.9, 300.0] {
            assert_relative_eq!(
                aga.rtilde(rho).unwrap(),
                iso.rtilde(rho).unwrap(),
                max_relative = 1e-14,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                aga.pressure(rho).unwrap(),
                iso.pressure(rho).unwrap(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn law_validation() {
        assert!(PressureLaw::isothermal(0.0).is_err());
        assert!(PressureLaw::isentropic(1.0, 1.0, 1.0).is_err());
        assert!(PressureLaw::isentropic(-1.0, 1.4, 1.0).is_err());
        assert!(PressureLaw::aga(1.0, 0.1, 1.0).is_err());
        assert!(PressureLaw::aga(1.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn density_inverts_pressure() {
        for law in [
            PressureLaw::isothermal(340.0).unwrap(),
            PressureLaw::isentropic(37_000.0, 1.3, 50.0).unwrap(),
            PressureLaw::aga(115_600.0, -0.002, 50.0).unwrap(),
        ] {
            for p in [1e5, 6e6, 8e6] {
                let rho = law.density(p).unwrap();
                assert_relative_eq!(law.pressure(rho).unwrap(), p, max_relative = 1e-13);
            }
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn laws() -> Vec<PressureLaw> {
            vec![
                PressureLaw::isothermal(340.0).unwrap(),
                PressureLaw::isentropic(37_000.0, 1.3, 50.0).unwrap(),
                PressureLaw::aga(115_600.0, -0.002, 50.0).unwrap(),
            ]
        }

        proptest! {
            #[test]
            fn rtilde_round_trip(rho in 0.01..400.0f64) {
                for law in laws() {
                    let back = law.rtilde_inverse(law.rtilde(rho).unwrap()).unwrap();
                    prop_assert!((back - rho).abs() <= 1e-10 * rho);
                }
            }

            #[test]
            fn rtilde_strictly_increasing(rho in 0.01..400.0f64, step in 1e-6..10.0f64) {
                for law in laws() {
                    prop_assert!(law.rtilde(rho + step).unwrap() > law.rtilde(rho).unwrap());
                }
            }

            #[test]
            fn sigma_is_dissipative(nu in 0.0..1.0f64, a in -1e3..1e3f64, b in -1e3..1e3f64) {
                prop_assert!(source_sigma(nu, a, b) * (a - b) >= 0.0);
                prop_assert_eq!(source_sigma(nu, a, b), -source_sigma(nu, b, a));
            }
        }
    }
}
