//! Canonical JSON rendering: monomials as `z1^a*zbar1^b*eta1^c*etabar1^d`,
//! real coefficients as `"p/q"` and complex ones as `["p/q", "r/s"]`.

use serde_json::{Map, Value};

use kstar::{GaussRational, Jet, NuSeries, Symbol};

pub fn coefficient(c: &GaussRational) -> Value {
    if c.im.is_zero() {
        Value::String(c.re.to_string())
    } else {
        Value::Array(vec![Value::String(c.re.to_string()), Value::String(c.im.to_string())])
    }
}

pub fn jet(j: &Jet) -> Value {
    let mut m = Map::new();
    for (idx, c) in j.terms() {
        m.insert(idx.render(j.n()), coefficient(c));
    }
    Value::Object(m)
}

pub fn symbol(s: &Symbol) -> Value {
    let n = s.n();
    let mut m = Map::new();
    for (fi, coeff) in s.terms() {
        let fiber = fi.render(n);
        for (idx, c) in coeff.terms() {
            let base = idx.render(n);
            let key = match (base.as_str(), fiber.as_str()) {
                ("1", f) => f.to_string(),
                (b, "1") => b.to_string(),
                (b, f) => format!("{b}*{f}"),
            };
            m.insert(key, coefficient(c));
        }
    }
    Value::Object(m)
}

pub fn series<T>(s: &NuSeries<T>, render: impl Fn(&T) -> Value) -> Value {
    let mut m = Map::new();
    for (r, c) in s.iter().enumerate() {
        m.insert(r.to_string(), render(c));
    }
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kstar::{FiberIndex, FiberVar, MultiIndex};

    #[test]
    fn canonical_forms() {
        assert_eq!(coefficient(&GaussRational::ratio(-3, 6)), Value::String("-1/2".into()));
        let c = GaussRational::new(kstar::Rational::zero(), kstar::Rational::new(2, 4).unwrap());
        assert_eq!(coefficient(&c), serde_json::json!(["0", "1/2"]));
        let j = Jet::from_terms(
            2,
            4,
            [
                (MultiIndex::from_indices(&[0, 0], &[1]), GaussRational::one()),
                (MultiIndex::ZERO, GaussRational::from_integer(3)),
            ],
        );
        assert_eq!(
            serde_json::to_string(&jet(&j)).unwrap(),
            r#"{"1":"3","z1^2*zbar2":"1"}"#
        );
        let fi = FiberIndex::var(FiberVar::Eta(0)).times(FiberVar::EtaBar(0));
        let s = Symbol::monomial(fi, &j);
        assert_eq!(
            serde_json::to_string(&symbol(&s)).unwrap(),
            r#"{"eta1*etabar1":"3","z1^2*zbar2*eta1*etabar1":"1"}"#
        );
    }
}
