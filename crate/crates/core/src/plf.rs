//! Increasing piecewise-affine bijections of [0, ∞) with exact breakpoints.

use std::fmt::Debug;

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rat::{fmt_rat, parse_rat, Rat};

/// Exact scalar usable as a PLF coordinate.
pub trait Scalar: Num + Clone + Ord + Debug {}
impl<T: Num + Clone + Ord + Debug> Scalar for T {}

/// f(0) = 0, affine between consecutive breakpoints, slope `tail` after the last one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseLinear<T: Scalar> {
    points: Vec<(T, T)>,
    tail: T,
}

pub type Plf = PiecewiseLinear<Rat>;

impl<T: Scalar> PiecewiseLinear<T> {
    /// `points` must start at (0, 0) with strictly increasing coordinates; `tail` > 0.
    pub fn new(points: Vec<(T, T)>, tail: T) -> Result<Self> {
        if points.first() != Some(&(T::zero(), T::zero())) {
            return invalid("piecewise-linear function must start at (0, 0)");
        }
        if tail <= T::zero() {
            return invalid("final slope must be positive");
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return invalid("breakpoints must be strictly increasing");
            }
        }
        let mut f = PiecewiseLinear { points, tail };
        f.normalize();
        Ok(f)
    }

    pub fn identity() -> Self {
        Self::linear(T::one())
    }

    pub fn linear(slope: T) -> Self {
        PiecewiseLinear {
            points: vec![(T::zero(), T::zero())],
            tail: slope,
        }
    }

    /// Builds from consecutive (length, slope) segments followed by a final slope.
    pub fn from_segments(segments: &[(T, T)], tail: T) -> Result<Self> {
        let mut points = vec![(T::zero(), T::zero())];
        for (len, slope) in segments {
            if *len <= T::zero() || *slope <= T::zero() {
                return invalid("segment lengths and slopes must be positive");
            }
            let (x, y) = points.last().unwrap().clone();
            points.push((x + len.clone(), y + len.clone() * slope.clone()));
        }
        Self::new(points, tail)
    }

    fn normalize(&mut self) {
        // drop interior points where the slope does not change
        let mut out: Vec<(T, T)> = vec![self.points[0].clone()];
        for i in 1..self.points.len() {
            let next_slope = if i + 1 < self.points.len() {
                slope(&self.points[i], &self.points[i + 1])
            } else {
                self.tail.clone()
            };
            let prev_slope = slope(out.last().unwrap(), &self.points[i]);
            if prev_slope != next_slope {
                out.push(self.points[i].clone());
            }
        }
        self.points = out;
    }

    pub fn breakpoints(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn tail(&self) -> &T {
        &self.tail
    }

    /// Slopes of the successive segments, ending with the tail slope.
    pub fn slopes(&self) -> Vec<T> {
        let mut s: Vec<T> = self.points.windows(2).map(|w| slope(&w[0], &w[1])).collect();
        s.push(self.tail.clone());
        s
    }

    pub fn is_concave(&self) -> bool {
        self.slopes().windows(2).all(|w| w[1] <= w[0])
    }

    pub fn eval(&self, x: &T) -> Result<T> {
        if *x < T::zero() {
            return Err(Error::InvalidInput("argument must be >= 0".into()));
        }
        let idx = self.points.partition_point(|(px, _)| px <= x);
        let (x0, y0) = &self.points[idx - 1];
        let s = if idx < self.points.len() {
            slope(&self.points[idx - 1], &self.points[idx])
        } else {
            self.tail.clone()
        };
        Ok(y0.clone() + s * (x.clone() - x0.clone()))
    }

    pub fn inverse(&self) -> Self {
        PiecewiseLinear {
            points: self.points.iter().map(|(x, y)| (y.clone(), x.clone())).collect(),
            tail: T::one() / self.tail.clone(),
        }
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &Self) -> Self {
        let inv = inner.inverse();
        let mut xs: Vec<T> = inner.points.iter().map(|(x, _)| x.clone()).collect();
        for (y, _) in &self.points {
            xs.push(inv.eval(y).expect("breakpoints are non-negative"));
        }
        xs.sort();
        xs.dedup();
        let points = xs
            .into_iter()
            .map(|x| {
                let y = self.eval(&inner.eval(&x).unwrap()).unwrap();
                (x, y)
            })
            .collect();
        let mut f = PiecewiseLinear {
            points,
            tail: self.tail.clone() * inner.tail.clone(),
        };
        f.normalize();
        f
    }
}

fn slope<T: Scalar>(a: &(T, T), b: &(T, T)) -> T {
    (b.1.clone() - a.1.clone()) / (b.0.clone() - a.0.clone())
}

#[derive(Serialize, Deserialize)]
struct PlfRepr {
    points: Vec<[String; 2]>,
    tail: String,
}

impl Serialize for PiecewiseLinear<Rat> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlfRepr {
            points: self.points.iter().map(|(x, y)| [fmt_rat(x), fmt_rat(y)]).collect(),
            tail: fmt_rat(&self.tail),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseLinear<Rat> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = PlfRepr::deserialize(d)?;
        let points = r
            .points
            .iter()
            .map(|[x, y]| Ok((parse_rat(x)?, parse_rat(y)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let tail = parse_rat(&r.tail).map_err(D::Error::custom)?;
        PiecewiseLinear::new(points, tail).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use num_rational::Ratio;
    use proptest::prelude::*;

    #[test]
    fn basics() {
        let f = Plf::from_segments(&[(rat(1, 1), rat(1, 1)), (rat(1, 1), rat(1, 3))], rat(1, 9)).unwrap();
        assert_eq!(f.eval(&rat(2, 1)).unwrap(), rat(4, 3));
        assert_eq!(f.eval(&rat(3, 1)).unwrap(), rat(13, 9));
        assert!(f.is_concave());
        assert!(!f.inverse().is_concave());
        assert_eq!(f.inverse().compose(&f), Plf::identity());
        // collinear points merge
        let g = Plf::new(vec![(rat(0, 1), rat(0, 1)), (rat(1, 1), rat(1, 1))], rat(1, 1)).unwrap();
        assert_eq!(g, Plf::identity());
        assert!(Plf::new(vec![(rat(1, 1), rat(0, 1))], rat(1, 1)).is_err());
    }

    #[test]
    fn small_scalar() {
        let f = PiecewiseLinear::<Ratio<i64>>::from_segments(&[(Ratio::new(2, 1), Ratio::new(1, 2))], Ratio::new(1, 4))
            .unwrap();
        assert_eq!(f.eval(&Ratio::new(4, 1)).unwrap(), Ratio::new(3, 2));
    }

    #[test]
    fn round_trip() {
        let f = Plf::from_segments(&[(rat(1, 1), rat(1, 2))], rat(1, 6)).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"points":[["0","0"],["1","1/2"]],"tail":"1/6"}"#);
        assert_eq!(serde_json::from_str::<Plf>(&s).unwrap(), f);
    }

    fn concave() -> impl Strategy<Value = Plf> {
        (proptest::collection::vec((1i64..6, 1i64..4), 0..4), 1i64..8, 1i64..5).prop_map(|(segs, d0, t)| {
            // non-increasing slopes 1/d with d growing
            let mut d = d0;
            let mut out = Vec::new();
            for (len, step) in segs {
                out.push((rat(len, 2), rat(1, d)));
                d += step;
            }
            Plf::from_segments(&out, rat(1, d + t)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn inverse_law(f in concave(), x in 0i64..50) {
            prop_assert!(f.is_concave());
            prop_assert_eq!(f.inverse().compose(&f), Plf::identity());
            prop_assert_eq!(f.compose(&f.inverse()), Plf::identity());
            let x = rat(x, 3);
            prop_assert_eq!(f.inverse().eval(&f.eval(&x).unwrap()).unwrap(), x);
        }

        #[test]
        fn associativity(f in concave(), g in concave(), h in concave(), x in 0i64..40) {
            let left = f.compose(&g).compose(&h);
            let right = f.compose(&g.compose(&h));
            prop_assert_eq!(&left, &right);
            let x = rat(x, 2);
            prop_assert_eq!(left.eval(&x).unwrap(), f.eval(&g.eval(&h.eval(&x).unwrap()).unwrap()).unwrap());
            prop_assert!(left.is_concave());
        }
    }
}
