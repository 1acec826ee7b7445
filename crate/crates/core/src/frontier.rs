//! Pareto frontier of a model collection, the TAF step curve, its concave
//! envelope (TAFI) and the weighted areas under both.
//!
//! Comparisons of fairness and accuracy values are exact. Callers that want
//! coarser equivalence classes round the metrics before building records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// One fitted model and its (fairness, accuracy) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord<T> {
    pub id: String,
    pub fairness: T,
    pub accuracy: T,
}

impl<T: Scalar> ModelRecord<T> {
    pub fn new(id: impl Into<String>, fairness: T, accuracy: T) -> Result<Self> {
        let rec = Self {
            id: id.into(),
            fairness,
            accuracy,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit(&format!("fairness of `{}`", self.id), self.fairness)?;
        check_unit(&format!("accuracy of `{}`", self.id), self.accuracy)
    }

    /// Weakly better on both axes and strictly better on one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.fairness >= other.fairness
            && self.accuracy >= other.accuracy
            && (self.fairness > other.fairness || self.accuracy > other.accuracy)
    }
}

fn check_unit<T: Scalar>(what: &str, v: T) -> Result<()> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(Error::out_of_range(what, to_f64(v), "[0, 1]"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<T> {
    pub fairness: T,
    pub accuracy: T,
}

/// Pareto-optimal points ordered by strictly decreasing fairness (and so
/// strictly increasing accuracy). The first point has fairness 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TafCurve<T> {
    points: Vec<CurvePoint<T>>,
    source_ids: Vec<String>,
}

impl<T: Scalar> TafCurve<T> {
    /// Rebuilds a curve from stored Pareto points, checking the ordering.
    pub fn from_points(points: Vec<CurvePoint<T>>, source_ids: Vec<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("TAF curve with no points".into()));
        }
        if points.len() != source_ids.len() {
            return Err(Error::LengthMismatch {
                what: "curve points vs source ids".into(),
                left: points.len(),
                right: source_ids.len(),
            });
        }
        for p in &points {
            check_unit("curve fairness", p.fairness)?;
            check_unit("curve accuracy", p.accuracy)?;
        }
        if points[0].fairness != T::one() {
            return Err(Error::NoPerfectlyFairModel);
        }
        for w in points.windows(2) {
            if !(w[1].fairness < w[0].fairness && w[1].accuracy > w[0].accuracy) {
                return Err(Error::InvalidInput(
                    "curve points must have strictly decreasing fairness and strictly increasing accuracy"
                        .into(),
                ));
            }
        }
        Ok(Self { points, source_ids })
    }

    pub fn points(&self) -> &[CurvePoint<T>] {
        &self.points
    }

    pub fn source_ids(&self) -> &[String] {
        &self.source_ids
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_accuracy(&self) -> T {
        self.points[self.points.len() - 1].accuracy
    }

    pub fn min_fairness(&self) -> T {
        self.points[self.points.len() - 1].fairness
    }
}

/// Upper concave envelope of a TAF curve, vertices by increasing fairness
/// from `(0, max accuracy)` to the perfectly fair point.
#[derive(Debug, Clone, PartialEq)]
pub struct TafiCurve<T> {
    vertices: Vec<CurvePoint<T>>,
}

impl<T: Scalar> TafiCurve<T> {
    pub fn vertices(&self) -> &[CurvePoint<T>] {
        &self.vertices
    }
}

/// Weights over fairness levels for FAUC: `x^alpha * 1{x > beta}` and the
/// point mass at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunction<T> {
    Uniform,
    Step { beta: T },
    Power { alpha: T, beta: T },
    PointMassZero,
}

impl<T: Scalar> WeightFunction<T> {
    pub fn step(beta: T) -> Result<Self> {
        check_unit("step weight beta", beta)?;
        Ok(Self::Step { beta })
    }

    pub fn power(alpha: T, beta: T) -> Result<Self> {
        check_unit("power weight beta", beta)?;
        if !(alpha >= T::one()) || !alpha.is_finite() {
            return Err(Error::out_of_range("power weight alpha", to_f64(alpha), "[1, inf)"));
        }
        Ok(Self::Power { alpha, beta })
    }

    /// `(exponent, cutoff)` of the `x^exponent * 1{x > cutoff}` form.
    fn shape(&self) -> Option<(T, T)> {
        match *self {
            Self::Uniform => Some((T::zero(), T::zero())),
            Self::Step { beta } => Some((T::zero(), beta)),
            Self::Power { alpha, beta } => Some((alpha, beta)),
            Self::PointMassZero => None,
        }
    }

    /// Density at `x`; `None` for the point mass.
    pub fn density(&self, x: T) -> Option<T> {
        let (exponent, cutoff) = self.shape()?;
        Some(match self {
            Self::Uniform => T::one(),
            _ if x > cutoff => x.powf(exponent),
            _ => T::zero(),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Uniform => "uniform".into(),
            Self::Step { beta } => format!("step:{beta}"),
            Self::Power { alpha, beta } => format!("power:{alpha}:{beta}"),
            Self::PointMassZero => "point_mass_zero".into(),
        }
    }
}

/// `∫_{lo}^{hi} x^p w(x) dx` in closed form.
fn weighted_moment<T: Scalar>(w: &WeightFunction<T>, lo: T, hi: T, p: i32) -> Result<T> {
    let (exponent, cutoff) = w.shape().ok_or(Error::PointMassSegment)?;
    let a = lo.max(cutoff);
    if hi <= a {
        return Ok(T::zero());
    }
    let e = exponent + T::from_i32(p + 1).expect("small integer");
    Ok((hi.powf(e) - a.powf(e)) / e)
}

/// Mass of the weight function on `[lo, hi]`.
pub fn weight_mass<T: Scalar>(w: &WeightFunction<T>, lo: T, hi: T) -> Result<T> {
    if !(T::zero() <= lo && lo <= hi && hi <= T::one()) {
        return Err(Error::InvalidInput(format!(
            "weight_mass needs 0 <= lo <= hi <= 1, got [{}, {}]",
            to_f64(lo),
            to_f64(hi)
        )));
    }
    weighted_moment(w, lo, hi, 0)
}

fn normalizer<T: Scalar>(w: &WeightFunction<T>) -> Result<T> {
    let total = weight_mass(w, T::zero(), T::one())?;
    if !(total > T::zero()) {
        return Err(Error::ZeroNormalizer);
    }
    Ok(total)
}

/// Pareto-optimal subset of `models` as a TAF curve.
///
/// Stable-sorts by decreasing fairness and keeps each model whose accuracy
/// beats everything fairer; a kept model replaces the previous one when both
/// share a fairness level. Exact duplicates keep the first occurrence.
pub fn pareto_filter<T: Scalar>(models: &[ModelRecord<T>]) -> Result<TafCurve<T>> {
    if models.is_empty() {
        return Err(Error::InvalidInput("no models".into()));
    }
    for m in models {
        m.validate()?;
    }
    if !models.iter().any(|m| m.fairness == T::one()) {
        return Err(Error::NoPerfectlyFairModel);
    }

    let mut order: Vec<usize> = (0..models.len()).collect();
    order.sort_by(|&a, &b| {
        models[b]
            .fairness
            .partial_cmp(&models[a].fairness)
            .expect("validated finite")
    });

    let mut kept: Vec<usize> = vec![order[0]];
    for &i in &order[1..] {
        let last = models[*kept.last().expect("non-empty")].clone();
        if models[i].accuracy > last.accuracy {
            if models[i].fairness == last.fairness {
                kept.pop();
            }
            kept.push(i);
        }
    }

    Ok(TafCurve {
        points: kept
            .iter()
            .map(|&i| CurvePoint {
                fairness: models[i].fairness,
                accuracy: models[i].accuracy,
            })
            .collect(),
        source_ids: kept.iter().map(|&i| models[i].id.clone()).collect(),
    })
}

fn check_level<T: Scalar>(f: T) -> Result<()> {
    if !(f >= T::zero() && f <= T::one()) {
        return Err(Error::out_of_range("fairness level", to_f64(f), "[0, 1]"));
    }
    Ok(())
}

/// Best accuracy among models with fairness `>= f`.
pub fn taf_eval<T: Scalar>(curve: &TafCurve<T>, f: T) -> Result<T> {
    check_level(f)?;
    // points are sorted by decreasing fairness; the answer is the last one
    // still at or above `f`
    let k = curve.points.partition_point(|p| p.fairness >= f);
    Ok(curve.points[k.max(1) - 1].accuracy)
}

/// Upper concave envelope of `{(0, max accuracy)} ∪ curve points`.
pub fn build_tafi<T: Scalar>(curve: &TafCurve<T>) -> TafiCurve<T> {
    let mut pts: Vec<CurvePoint<T>> = Vec::with_capacity(curve.len() + 1);
    pts.push(CurvePoint {
        fairness: T::zero(),
        accuracy: curve.max_accuracy(),
    });
    // ascending fairness
    pts.extend(curve.points.iter().rev().copied());
    pts.dedup_by(|b, a| a.fairness == b.fairness && a.accuracy == b.accuracy);

    let tol = T::epsilon() * lit(64.0);
    let mut hull: Vec<CurvePoint<T>> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let (ax, ay) = (a.fairness - o.fairness, a.accuracy - o.accuracy);
            let (bx, by) = (p.fairness - o.fairness, p.accuracy - o.accuracy);
            let cross = ax * by - ay * bx;
            let scale = (ax * ax + ay * ay).sqrt() * (bx * bx + by * by).sqrt();
            // drop `a` unless o→a→p turns strictly clockwise
            if cross >= -tol * scale {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    TafiCurve { vertices: hull }
}

/// Piecewise-linear interpolation of the envelope at `f`.
pub fn tafi_eval<T: Scalar>(tafi: &TafiCurve<T>, f: T) -> Result<T> {
    check_level(f)?;
    let v = &tafi.vertices;
    if v.len() == 1 {
        return Ok(v[0].accuracy);
    }
    let j = v.partition_point(|p| p.fairness < f).clamp(1, v.len() - 1);
    let (a, b) = (v[j - 1], v[j]);
    if f == b.fairness {
        return Ok(b.accuracy);
    }
    if f == a.fairness {
        return Ok(a.accuracy);
    }
    let t = (f - a.fairness) / (b.fairness - a.fairness);
    Ok(a.accuracy + t * (b.accuracy - a.accuracy))
}

/// Weighted, normalized area under the TAF step curve.
pub fn fauc<T: Scalar>(curve: &TafCurve<T>, w: &WeightFunction<T>) -> Result<T> {
    if let WeightFunction::PointMassZero = w {
        return taf_eval(curve, T::zero());
    }
    let total = normalizer(w)?;
    let mut area = T::zero();
    for (i, p) in curve.points.iter().enumerate() {
        let lo = curve
            .points
            .get(i + 1)
            .map_or(T::zero(), |next| next.fairness);
        area = area + p.accuracy * weight_mass(w, lo, p.fairness)?;
    }
    Ok(area / total)
}

/// Weighted, normalized area under the TAFI envelope.
pub fn fauci<T: Scalar>(tafi: &TafiCurve<T>, w: &WeightFunction<T>) -> Result<T> {
    if let WeightFunction::PointMassZero = w {
        return tafi_eval(tafi, T::zero());
    }
    let total = normalizer(w)?;
    let v = &tafi.vertices;
    if v.len() == 1 {
        return Ok(v[0].accuracy);
    }
    let mut area = T::zero();
    for seg in v.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let slope = (b.accuracy - a.accuracy) / (b.fairness - a.fairness);
        let intercept = a.accuracy - slope * a.fairness;
        area = area
            + intercept * weighted_moment(w, a.fairness, b.fairness, 0)?
            + slope * weighted_moment(w, a.fairness, b.fairness, 1)?;
    }
    Ok(area / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, f: f64, a: f64) -> ModelRecord<f64> {
        ModelRecord::new(id, f, a).unwrap()
    }

    fn pts(curve: &TafCurve<f64>) -> Vec<(f64, f64)> {
        curve.points().iter().map(|p| (p.fairness, p.accuracy)).collect()
    }

    fn verts(t: &TafiCurve<f64>) -> Vec<(f64, f64)> {
        t.vertices().iter().map(|p| (p.fairness, p.accuracy)).collect()
    }

    fn example_curve() -> TafCurve<f64> {
        pareto_filter(&[
            rec("c", 1.0, 0.5),
            rec("a", 0.8, 0.9),
            rec("b", 0.9, 0.7),
            rec("d", 0.85, 0.6),
        ])
        .unwrap()
    }

    #[test]
    fn pareto_singleton() {
        let c = pareto_filter(&[rec("c", 1.0, 0.5)]).unwrap();
        assert_eq!(pts(&c), [(1.0, 0.5)]);
    }

    #[test]
    fn pareto_drops_dominated() {
        let c = example_curve();
        assert_eq!(pts(&c), [(1.0, 0.5), (0.9, 0.7), (0.8, 0.9)]);
        assert_eq!(c.source_ids(), ["c", "b", "a"]);
    }

    #[test]
    fn pareto_equal_fairness_keeps_higher_accuracy() {
        let c = pareto_filter(&[rec("c", 1.0, 0.5), rec("x", 0.9, 0.6), rec("y", 0.9, 0.8)]).unwrap();
        assert_eq!(pts(&c), [(1.0, 0.5), (0.9, 0.8)]);
        assert_eq!(c.source_ids(), ["c", "y"]);
    }

    #[test]
    fn pareto_duplicate_keeps_first() {
        let c = pareto_filter(&[rec("c", 1.0, 0.5), rec("x", 0.9, 0.8), rec("y", 0.9, 0.8)]).unwrap();
        assert_eq!(c.source_ids(), ["c", "x"]);
    }

    #[test]
    fn pareto_fair_model_with_higher_accuracy_replaces_first() {
        let c = pareto_filter(&[rec("c", 1.0, 0.5), rec("d", 1.0, 0.6), rec("e", 0.5, 0.55)]).unwrap();
        assert_eq!(c.source_ids(), ["d"]);
    }

    #[test]
    fn pareto_errors() {
        assert!(matches!(
            pareto_filter(&[rec("a", 0.9, 0.5)]),
            Err(Error::NoPerfectlyFairModel)
        ));
        let bad = ModelRecord {
            id: "z".into(),
            fairness: 1.2,
            accuracy: 0.5,
        };
        assert!(matches!(pareto_filter(&[bad]), Err(Error::OutOfRange { .. })));
        assert!(ModelRecord::new("n", f64::NAN, 0.5).is_err());
    }

    #[test]
    fn taf_eval_examples() {
        let c = example_curve();
        assert_eq!(taf_eval(&c, 0.9).unwrap(), 0.7);
        assert_eq!(taf_eval(&c, 0.901).unwrap(), 0.5);
        assert_eq!(taf_eval(&c, 0.0).unwrap(), 0.9);
        assert_eq!(taf_eval(&c, 1.0).unwrap(), 0.5);
        assert!(taf_eval(&c, 1.5).is_err());
        assert!(taf_eval(&c, -0.1).is_err());
    }

    #[test]
    fn tafi_examples() {
        let single = pareto_filter(&[rec("c", 1.0, 0.5)]).unwrap();
        assert_eq!(verts(&build_tafi(&single)), [(0.0, 0.5), (1.0, 0.5)]);

        let t = build_tafi(&example_curve());
        assert_eq!(verts(&t), [(0.0, 0.9), (0.8, 0.9), (1.0, 0.5)]);

        let two = pareto_filter(&[rec("c", 1.0, 0.2), rec("m", 0.5, 0.9)]).unwrap();
        assert_eq!(verts(&build_tafi(&two)), [(0.0, 0.9), (0.5, 0.9), (1.0, 0.2)]);
    }

    #[test]
    fn tafi_with_model_at_zero_fairness() {
        let c = pareto_filter(&[rec("c", 1.0, 0.2), rec("z", 0.0, 0.9)]).unwrap();
        assert_eq!(verts(&build_tafi(&c)), [(0.0, 0.9), (1.0, 0.2)]);
    }

    #[test]
    fn tafi_eval_examples() {
        let t = build_tafi(&example_curve());
        assert!((tafi_eval(&t, 0.9).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(tafi_eval(&t, 0.8).unwrap(), 0.9);
        assert_eq!(tafi_eval(&t, 1.0).unwrap(), 0.5);
        assert_eq!(tafi_eval(&t, 0.3).unwrap(), 0.9);
        let single = build_tafi(&pareto_filter(&[rec("c", 1.0, 0.5)]).unwrap());
        for f in [0.0, 0.25, 0.5, 1.0] {
            assert_eq!(tafi_eval(&single, f).unwrap(), 0.5);
        }
    }

    #[test]
    fn weight_mass_examples() {
        let u = WeightFunction::<f64>::Uniform;
        assert_eq!(weight_mass(&u, 0.0, 1.0).unwrap(), 1.0);
        let s = WeightFunction::<f64>::step(0.8).unwrap();
        assert!((weight_mass(&s, 0.0, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(weight_mass(&s, 0.1, 0.7).unwrap(), 0.0);
        let p = WeightFunction::power(1.0, 0.0).unwrap();
        assert_eq!(weight_mass(&p, 0.0, 1.0).unwrap(), 0.5);
        assert!(matches!(
            weight_mass(&WeightFunction::<f64>::PointMassZero, 0.0, 1.0),
            Err(Error::PointMassSegment)
        ));
        assert!(weight_mass(&u, 0.5, 0.2).is_err());
    }

    #[test]
    fn weight_constructors_validate() {
        assert!(WeightFunction::step(1.5).is_err());
        assert!(WeightFunction::power(0.5, 0.2).is_err());
        assert!(WeightFunction::power(2.0, -0.1).is_err());
    }

    #[test]
    fn fauc_examples() {
        let c = example_curve();
        let f = fauc(&c, &WeightFunction::step(0.8).unwrap()).unwrap();
        assert!((f - 0.6).abs() < 1e-12);
        assert_eq!(fauc(&c, &WeightFunction::PointMassZero).unwrap(), 0.9);
        let constant = pareto_filter(&[rec("c", 1.0, 0.37)]).unwrap();
        assert!((fauc(&constant, &WeightFunction::Uniform).unwrap() - 0.37).abs() < 1e-15);
        assert!(matches!(
            fauc(&c, &WeightFunction::step(1.0).unwrap()),
            Err(Error::ZeroNormalizer)
        ));
    }

    #[test]
    fn fauci_examples() {
        let c = example_curve();
        let t = build_tafi(&c);
        let v = fauci(&t, &WeightFunction::Uniform).unwrap();
        assert!((v - 0.86).abs() < 1e-12);
        let constant = build_tafi(&pareto_filter(&[rec("c", 1.0, 0.37)]).unwrap());
        assert!((fauci(&constant, &WeightFunction::Uniform).unwrap() - 0.37).abs() < 1e-15);
        assert!((fauci(&constant, &WeightFunction::power(3.0, 0.4).unwrap()).unwrap() - 0.37).abs() < 1e-15);
        assert_eq!(fauci(&t, &WeightFunction::PointMassZero).unwrap(), 0.9);
        for w in [
            WeightFunction::Uniform,
            WeightFunction::step(0.8).unwrap(),
            WeightFunction::power(2.0, 0.3).unwrap(),
            WeightFunction::PointMassZero,
        ] {
            assert!(fauci(&t, &w).unwrap() >= fauc(&c, &w).unwrap() - 1e-12);
        }
    }

    #[test]
    fn from_points_validates_order() {
        let ok = TafCurve::from_points(
            vec![
                CurvePoint { fairness: 1.0, accuracy: 0.5 },
                CurvePoint { fairness: 0.9, accuracy: 0.7 },
            ],
            vec!["a".into(), "b".into()],
        );
        assert!(ok.is_ok());
        let bad = TafCurve::from_points(
            vec![
                CurvePoint { fairness: 1.0, accuracy: 0.5 },
                CurvePoint { fairness: 0.9, accuracy: 0.4 },
            ],
            vec!["a".into(), "b".into()],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn single_precision_curve() {
        let models = vec![
            ModelRecord::new("c", 1.0f32, 0.5).unwrap(),
            ModelRecord::new("a", 0.8f32, 0.9).unwrap(),
        ];
        let c = pareto_filter(&models).unwrap();
        let f = fauc(&c, &WeightFunction::Uniform).unwrap();
        assert!((f - (0.2 * 0.5 + 0.8 * 0.9)).abs() < 1e-6);
    }
}
