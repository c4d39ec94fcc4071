//! Floating-point helpers shared by the diagnostics and the exporters.

/// Formats a real with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Distance from `x` to the next representable double of larger magnitude.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if !a.is_finite() {
        return f64::NAN;
    }
    if a == 0.0 {
        return f64::from_bits(1);
    }
    f64::from_bits(a.to_bits() + 1) - a
}

/// `|a - b|` expressed in units of the last place of `max(|a|, |b|, scale)`.
///
/// Values that pass through zero (the counterexample vanishes at every knot)
/// have no meaningful relative precision, so comparisons are made against the
/// magnitude of the dominant term of the evaluation, passed in as `scale`.
pub fn ulps_at_scale(a: f64, b: f64, scale: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = a.abs().max(b.abs()).max(scale.abs());
    (a - b).abs() / ulp(m)
}

/// Serde adapters that write reals as decimal strings with 17 significant digits.
pub mod decimal_string {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt17(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }

    pub mod option {
        use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => s.serialize_some(&crate::numeric::fmt17(*v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| s.parse().map_err(D::Error::custom))
                .transpose()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ulp_of_one() {
        assert_eq!(ulp(1.0), f64::EPSILON);
        assert_eq!(ulp(-1.0), f64::EPSILON);
        assert_eq!(ulp(0.0), f64::from_bits(1));
    }

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, -1.0, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt17(-1.0), "-1.0000000000000000e0");
    }

    #[test]
    fn ulps_at_scale_uses_dominant_magnitude() {
        assert_eq!(ulps_at_scale(1.0, 1.0 + f64::EPSILON, 0.0), 1.0);
        // 1e-17 apart near zero is a fraction of an ulp at scale 1.
        assert!(ulps_at_scale(1e-17, 0.0, 1.0) < 1.0);
    }
}
