//! Triangular fuzzy numbers, the linguistic significance scale, and GMIR
//! defuzzification.
//!
//! Only the nonnegative arithmetic needed by the weighting models lives here:
//! construction with validation, componentwise multiplication, and the graded
//! mean integration representation `(l + 4m + u) / 6`.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("non-finite component in ({l}, {m}, {u})")]
    NonFinite { l: f64, m: f64, u: f64 },
    #[error("l > m: lower bound {l} exceeds modal value {m}")]
    LowerAboveModal { l: f64, m: f64 },
    #[error("m > u: modal value {m} exceeds upper bound {u}")]
    ModalAboveUpper { m: f64, u: f64 },
    #[error("negative lower bound {0}: fuzzy weights and significances must be nonnegative")]
    Negative(f64),
    #[error("unknown linguistic term {term:?}; valid terms: {}", valid.join(", "))]
    UnknownTerm { term: String, valid: Vec<String> },
    #[error("invalid linguistic scale: {0}")]
    InvalidScale(String),
}

/// A triangular fuzzy number `(l, m, u)` with `0 <= l <= m <= u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "[f64; 3]")]
pub struct Tfn {
    l: f64,
    m: f64,
    u: f64,
}

impl Tfn {
    pub const ONE: Tfn = Tfn {
        l: 1.0,
        m: 1.0,
        u: 1.0,
    };

    pub fn new(l: f64, m: f64, u: f64) -> Result<Self, FuzzyError> {
        if !(l.is_finite() && m.is_finite() && u.is_finite()) {
            return Err(FuzzyError::NonFinite { l, m, u });
        }
        if l > m {
            return Err(FuzzyError::LowerAboveModal { l, m });
        }
        if m > u {
            return Err(FuzzyError::ModalAboveUpper { m, u });
        }
        if l < 0.0 {
            return Err(FuzzyError::Negative(l));
        }
        Ok(Tfn { l, m, u })
    }

    /// The degenerate fuzzy number `(c, c, c)`.
    pub fn crisp(c: f64) -> Result<Self, FuzzyError> {
        Tfn::new(c, c, c)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn components(&self) -> [f64; 3] {
        [self.l, self.m, self.u]
    }

    pub fn is_crisp(&self) -> bool {
        self.l == self.m && self.m == self.u
    }

    /// Componentwise product. Closed over nonnegative TFNs, which the
    /// constructor guarantees.
    pub fn mul(&self, other: &Tfn) -> Tfn {
        Tfn {
            l: self.l * other.l,
            m: self.m * other.m,
            u: self.u * other.u,
        }
    }

    /// Graded mean integration representation, `(l + 4m + u) / 6`.
    ///
    /// Evaluated around the modal value so crisp and symmetric numbers
    /// return `m` exactly.
    pub fn gmir(&self) -> f64 {
        self.m + ((self.l - self.m) + (self.u - self.m)) / 6.0
    }

    pub fn spread(&self) -> f64 {
        self.u - self.l
    }

    /// Reporting order: GMIR value first, modal value breaks ties.
    pub fn report_cmp(&self, other: &Tfn) -> Ordering {
        self.gmir()
            .total_cmp(&other.gmir())
            .then_with(|| self.m.total_cmp(&other.m))
    }
}

impl From<Tfn> for [f64; 3] {
    fn from(t: Tfn) -> Self {
        t.components()
    }
}

impl TryFrom<[f64; 3]> for Tfn {
    type Error = FuzzyError;

    fn try_from(c: [f64; 3]) -> Result<Self, Self::Error> {
        Tfn::new(c[0], c[1], c[2])
    }
}

impl<'de> Deserialize<'de> for Tfn {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let c = <[f64; 3]>::deserialize(deserializer)?;
        Tfn::try_from(c).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Tfn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.l, self.m, self.u)
    }
}

pub fn tfn_mul(a: &Tfn, b: &Tfn) -> Tfn {
    a.mul(b)
}

pub fn gmir(t: &Tfn) -> f64 {
    t.gmir()
}

/// Ordered mapping from linguistic significance terms to fuzzy numbers.
///
/// Terms are unique, modal values never decrease along the list and GMIR
/// values strictly increase.
/// On disk the scale is a JSON object `{"Term": [l, m, u], ...}` whose key
/// order is taken as the scale order.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticScale {
    entries: Vec<(String, Tfn)>,
}

impl LinguisticScale {
    pub fn new(entries: Vec<(String, Tfn)>) -> Result<Self, FuzzyError> {
        if entries.is_empty() {
            return Err(FuzzyError::InvalidScale("scale has no terms".into()));
        }
        for (i, (name, _)) in entries.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(FuzzyError::InvalidScale(format!("term #{} has an empty name", i + 1)));
            }
            if entries[..i].iter().any(|(other, _)| other == name) {
                return Err(FuzzyError::InvalidScale(format!("duplicate term {name:?}")));
            }
        }
        for pair in entries.windows(2) {
            let (a, ta) = &pair[0];
            let (b, tb) = &pair[1];
            if tb.m() < ta.m() {
                return Err(FuzzyError::InvalidScale(format!(
                    "modal values must not decrease: {a:?} has m = {} but {b:?} has m = {}",
                    ta.m(),
                    tb.m()
                )));
            }
            if tb.gmir() <= ta.gmir() {
                return Err(FuzzyError::InvalidScale(format!(
                    "GMIR values must strictly increase: {a:?} has {} but {b:?} has {}",
                    ta.gmir(),
                    tb.gmir()
                )));
            }
        }
        Ok(LinguisticScale { entries })
    }

    /// Equally (1,1,1), Weakly (2/3,1,3/2), Moderately (3/2,2,5/2),
    /// Very (5/2,3,7/2), Absolutely (7/2,4,9/2).
    pub fn default_scale() -> Self {
        let raw: [(&str, [f64; 3]); 5] = [
            ("Equally Significant", [1.0, 1.0, 1.0]),
            ("Weakly Significant", [2.0 / 3.0, 1.0, 3.0 / 2.0]),
            ("Moderately Significant", [3.0 / 2.0, 2.0, 5.0 / 2.0]),
            ("Very Significant", [5.0 / 2.0, 3.0, 7.0 / 2.0]),
            ("Absolutely Significant", [7.0 / 2.0, 4.0, 9.0 / 2.0]),
        ];
        let entries = raw
            .iter()
            .map(|(name, c)| (name.to_string(), Tfn::try_from(*c).expect("default scale is valid")))
            .collect();
        LinguisticScale::new(entries).expect("default scale is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self, FuzzyError> {
        let raw: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)
            .map_err(|e| FuzzyError::InvalidScale(e.to_string()))?;
        let mut entries = Vec::with_capacity(raw.len());
        for (name, value) in raw {
            let t: Tfn = serde_json::from_value(value)
                .map_err(|e| FuzzyError::InvalidScale(format!("term {name:?}: {e}")))?;
            entries.push((name, t));
        }
        LinguisticScale::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, FuzzyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FuzzyError::InvalidScale(format!("{}: {e}", path.display())))?;
        LinguisticScale::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let mut map = serde_json::Map::new();
        for (name, t) in &self.entries {
            map.insert(name.clone(), serde_json::json!(t.components()));
        }
        let mut out = serde_json::to_string_pretty(&serde_json::Value::Object(map))
            .expect("scale serializes");
        out.push('\n');
        out
    }

    pub fn lookup(&self, term: &str) -> Result<Tfn, FuzzyError> {
        self.entries
            .iter()
            .find(|(name, _)| name == term)
            .map(|(_, t)| *t)
            .ok_or_else(|| FuzzyError::UnknownTerm {
                term: term.to_string(),
                valid: self.terms().map(str::to_string).collect(),
            })
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(name, _)| name.as_str())
    }

    pub fn entries(&self) -> &[(String, Tfn)] {
        &self.entries
    }
}

impl Default for LinguisticScale {
    fn default() -> Self {
        LinguisticScale::default_scale()
    }
}

pub fn linguistic_to_tfn(term: &str, scale: &LinguisticScale) -> Result<Tfn, FuzzyError> {
    scale.lookup(term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tfn(l: f64, m: f64, u: f64) -> Tfn {
        Tfn::new(l, m, u).unwrap()
    }

    #[test]
    fn make_accepts_valid_and_crisp() {
        let one = tfn(1.0, 1.0, 1.0);
        assert!(one.is_crisp());
        assert_eq!(one, Tfn::ONE);
        assert_eq!(tfn(0.5, 1.0, 2.5).components(), [0.5, 1.0, 2.5]);
    }

    #[test]
    fn make_names_violated_bound() {
        let err = Tfn::new(2.0, 1.0, 3.0).unwrap_err();
        assert!(matches!(err, FuzzyError::LowerAboveModal { .. }));
        assert!(err.to_string().starts_with("l > m"));
        let err = Tfn::new(1.0, 3.0, 2.0).unwrap_err();
        assert!(err.to_string().starts_with("m > u"));
        assert!(matches!(Tfn::new(-0.1, 0.0, 1.0), Err(FuzzyError::Negative(_))));
        assert!(matches!(Tfn::new(f64::NAN, 1.0, 1.0), Err(FuzzyError::NonFinite { .. })));
    }

    #[test]
    fn mul_examples() {
        let phi = tfn(1.5, 2.0, 2.5);
        assert_eq!(tfn_mul(&Tfn::ONE, &phi), phi);
        let scaled = tfn(0.1, 0.2, 0.3).mul(&tfn(2.0, 2.0, 2.0));
        assert!((scaled.l() - 0.2).abs() < 1e-15);
        assert!((scaled.m() - 0.4).abs() < 1e-15);
        assert!((scaled.u() - 0.6).abs() < 1e-15);
        assert_eq!(tfn(1.0, 2.0, 3.0).mul(&phi).components(), [1.5, 4.0, 7.5]);
    }

    #[test]
    fn gmir_examples() {
        assert_eq!(gmir(&Tfn::ONE), 1.0);
        assert_eq!(gmir(&tfn(0.0, 1.0, 2.0)), 1.0);
        assert!((gmir(&tfn(0.5, 1.0, 2.5)) - 7.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn default_scale_terms() {
        let scale = LinguisticScale::default_scale();
        assert_eq!(linguistic_to_tfn("Equally Significant", &scale).unwrap(), Tfn::ONE);
        assert_eq!(
            linguistic_to_tfn("Moderately Significant", &scale).unwrap().components(),
            [1.5, 2.0, 2.5]
        );
        let err = linguistic_to_tfn("Quite Significant", &scale).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Quite Significant"));
        assert!(msg.contains("Very Significant"));
    }

    #[test]
    fn scale_rejects_bad_tables() {
        let dup = LinguisticScale::new(vec![("A".into(), Tfn::ONE), ("A".into(), tfn(1.0, 2.0, 3.0))]);
        assert!(dup.is_err());
        let non_increasing =
            LinguisticScale::new(vec![("A".into(), tfn(1.0, 2.0, 3.0)), ("B".into(), tfn(1.0, 2.0, 3.0))]);
        assert!(non_increasing.is_err());
        let modal_drop =
            LinguisticScale::new(vec![("A".into(), tfn(1.0, 2.0, 3.0)), ("B".into(), tfn(1.0, 1.9, 9.0))]);
        assert!(modal_drop.is_err());
        // equal modal values are fine while GMIR increases
        let shared_modal =
            LinguisticScale::new(vec![("A".into(), Tfn::ONE), ("B".into(), tfn(2.0 / 3.0, 1.0, 1.5))]);
        assert!(shared_modal.is_ok());
        assert!(LinguisticScale::from_json_str(r#"{"A": [2, 1, 3]}"#).is_err());
        assert!(LinguisticScale::from_json_str(r#"{"A": [1, 1]}"#).is_err());
        assert!(LinguisticScale::from_json_str("{}").is_err());
    }

    #[test]
    fn scale_file_round_trip_is_exact() {
        let scale = LinguisticScale::default_scale();
        let back = LinguisticScale::from_json_str(&scale.to_json_string()).unwrap();
        assert_eq!(back, scale);
        for (name, t) in scale.entries() {
            assert_eq!(back.lookup(name).unwrap().components(), t.components());
        }
    }

    #[test]
    fn report_order_uses_gmir_then_modal() {
        let a = tfn(0.0, 1.0, 2.0);
        let b = tfn(0.5, 1.0, 1.5);
        assert_eq!(a.gmir(), b.gmir());
        assert_eq!(a.report_cmp(&b), Ordering::Equal);
        assert_eq!(tfn(0.0, 0.9, 2.4).report_cmp(&b), Ordering::Less);
        assert_eq!(b.report_cmp(&tfn(0.0, 0.5, 0.6)), Ordering::Greater);
    }

    fn arb_tfn() -> impl Strategy<Value = Tfn> {
        (0.0..10.0f64, 0.0..10.0f64, 0.0..10.0f64).prop_map(|(a, b, c)| {
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            Tfn::try_from(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn gmir_monotone_in_each_component(t in arb_tfn(), d in 0.0..5.0f64) {
            let base = t.gmir();
            let up_u = Tfn::new(t.l(), t.m(), t.u() + d).unwrap();
            prop_assert!(up_u.gmir() >= base);
            let up_m = Tfn::new(t.l(), t.m() + d, t.u() + d).unwrap();
            prop_assert!(up_m.gmir() >= base);
            let up_l = Tfn::new((t.l() + d).min(t.m()), t.m(), t.u()).unwrap();
            prop_assert!(up_l.gmir() >= base);
        }

        #[test]
        fn gmir_of_crisp_is_value(c in 0.0..100.0f64) {
            prop_assert_eq!(Tfn::crisp(c).unwrap().gmir(), c);
        }

        #[test]
        fn mul_identity_commutative_associative(a in arb_tfn(), b in arb_tfn(), c in arb_tfn()) {
            prop_assert_eq!(a.mul(&Tfn::ONE), a);
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            let left = a.mul(&b).mul(&c).components();
            let right = a.mul(&b.mul(&c)).components();
            for (x, y) in left.iter().zip(right) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
            // product of valid TFNs stays valid
            prop_assert!(Tfn::try_from(a.mul(&b).components()).is_ok());
        }
    }
}
