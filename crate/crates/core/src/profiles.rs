//! Registered outer profiles: the scalar functions modulating the surface
//! height, together with their derived dilated forms.

use serde::{Deserialize, Serialize};

use crate::error::{CzError, Result};

/// A registered C1-class profile with phi(0) = 0 and a closed-form derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Profile {
    /// Identically zero (switches the oscillatory factor off).
    Zero,
    /// s^p for p >= 1.
    Power(f64),
    /// s + s^2: convex, but its derivative tends to 1, so doubling fails.
    AffinePlusSquare,
    /// exp(-1/s), extended by 0: flat to infinite order at 0.
    ExpFlat,
    /// u * sin(1/u), extended by 0: bounded but wildly oscillating slope.
    WildC1,
}

impl Profile {
    /// Parse a registry name: "zero", "power-p", "affine-plus-square",
    /// "exp-flat", "wild-c1".
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Profile::Zero),
            "affine-plus-square" => Ok(Profile::AffinePlusSquare),
            "exp-flat" => Ok(Profile::ExpFlat),
            "wild-c1" => Ok(Profile::WildC1),
            _ => {
                if let Some(rest) = name.strip_prefix("power-") {
                    let p: f64 = rest
                        .parse()
                        .map_err(|_| CzError::Input(format!("bad power profile {name:?}")))?;
                    if !(p >= 1.0) {
                        return Err(CzError::Input(format!(
                            "power profile needs exponent >= 1, got {p}"
                        )));
                    }
                    Ok(Profile::Power(p))
                } else {
                    Err(CzError::Input(format!("unknown profile {name:?}")))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Profile::Zero => "zero".into(),
            Profile::Power(p) => format!("power-{p}"),
            Profile::AffinePlusSquare => "affine-plus-square".into(),
            Profile::ExpFlat => "exp-flat".into(),
            Profile::WildC1 => "wild-c1".into(),
        }
    }

    /// phi(s) for s >= 0.
    pub fn value(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match self {
            Profile::Zero => 0.0,
            Profile::Power(p) => {
                if s == 0.0 {
                    0.0
                } else {
                    s.powf(*p)
                }
            }
            Profile::AffinePlusSquare => s + s * s,
            Profile::ExpFlat => {
                if s <= 0.0 {
                    0.0
                } else {
                    (-1.0 / s).exp()
                }
            }
            Profile::WildC1 => {
                if s == 0.0 {
                    0.0
                } else {
                    s * (1.0 / s).sin()
                }
            }
        }
    }

    /// phi'(s) for s > 0 (one-sided value at 0 where it exists).
    pub fn deriv(&self, s: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Power(p) => {
                if s == 0.0 {
                    if *p == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    p * s.powf(p - 1.0)
                }
            }
            Profile::AffinePlusSquare => 1.0 + 2.0 * s,
            Profile::ExpFlat => {
                if s <= 0.0 {
                    0.0
                } else {
                    (-1.0 / s).exp() / (s * s)
                }
            }
            Profile::WildC1 => {
                if s == 0.0 {
                    0.0
                } else {
                    let inv = 1.0 / s;
                    inv.sin() - inv.cos() * inv
                }
            }
        }
    }

    /// True when the profile is identically zero (phase contributes nothing).
    pub fn is_zero(&self) -> bool {
        matches!(self, Profile::Zero)
    }
}

impl TryFrom<String> for Profile {
    type Error = CzError;
    fn try_from(s: String) -> Result<Self> {
        Profile::parse(&s)
    }
}

impl From<Profile> for String {
    fn from(p: Profile) -> String {
        p.name()
    }
}

/// The dilated profile s -> phi(s^ell0), the form the dichotomy conditions
/// quantify over.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiBar {
    pub profile: Profile,
    pub ell0: u32,
}

impl PhiBar {
    pub fn new(profile: Profile, ell0: u32) -> Self {
        debug_assert!(ell0 >= 1);
        PhiBar { profile, ell0 }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.profile.value(s.powi(self.ell0 as i32))
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let e = self.ell0 as i32;
        if s == 0.0 {
            // Only ell0 = 1 with phi'(0) != 0 survives at the origin.
            return if e == 1 { self.profile.deriv(0.0) } else { 0.0 };
        }
        (e as f64) * s.powi(e - 1) * self.profile.deriv(s.powi(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_registry_names() {
        assert_eq!(Profile::parse("power-2").unwrap(), Profile::Power(2.0));
        assert_eq!(Profile::parse("power-1").unwrap(), Profile::Power(1.0));
        assert_eq!(
            Profile::parse("affine-plus-square").unwrap(),
            Profile::AffinePlusSquare
        );
        assert!(Profile::parse("power-0.5").is_err());
        assert!(Profile::parse("cubic").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let profiles = [
            Profile::Power(2.0),
            Profile::Power(3.5),
            Profile::AffinePlusSquare,
            Profile::ExpFlat,
            Profile::WildC1,
        ];
        let h = 1e-6;
        for p in &profiles {
            for &s in &[0.31, 0.57, 0.93] {
                let fd = (p.value(s + h) - p.value(s - h)) / (2.0 * h);
                let an = p.deriv(s);
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                    "{}: fd {fd} vs analytic {an} at {s}",
                    p.name()
                );
            }
        }
    }

    #[test]
    fn values_vanish_at_zero() {
        for p in [
            Profile::Zero,
            Profile::Power(2.0),
            Profile::AffinePlusSquare,
            Profile::ExpFlat,
            Profile::WildC1,
        ] {
            assert_eq!(p.value(0.0), 0.0);
        }
    }

    #[test]
    fn phi_bar_composes_the_dilation() {
        // phi = s (power-1) with ell0 = 2 gives phi_bar = s^2.
        let pb = PhiBar::new(Profile::Power(1.0), 2);
        assert_eq!(pb.value(0.5), 0.25);
        assert!((pb.deriv(0.5) - 1.0).abs() < 1e-15);

        // phi = s + s^2 with ell0 = 1 keeps its shape.
        let pb = PhiBar::new(Profile::AffinePlusSquare, 1);
        assert_eq!(pb.value(0.3), 0.3 + 0.09);
    }

    #[test]
    fn json_round_trip_uses_names() {
        let p = Profile::Power(2.0);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "\"power-2\"");
        let back: Profile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
