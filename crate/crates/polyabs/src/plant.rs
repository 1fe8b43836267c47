//! Plants, fixed-order controllers, and the closed-loop objective.
//!
//! A strictly proper SISO plant b(s)/a(s) under output feedback y(s)/x(s)
//! has characteristic polynomial a(s) x(s) + b(s) y(s). The controller's
//! free coefficients are the optimization variables everywhere else in the
//! crate: x is monic of exact degree m, y has degree at most m, so the
//! parameter vector is (x_0..x_{m-1}, y_0..y_m) of length 2m + 1.

use num_complex::Complex;
use serde::de::{Deserialize, Deserializer};
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::Real;

/// Strictly proper SISO plant as a coprime numerator/denominator pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant<T: Real> {
    num: Poly<T>,
    den: Poly<T>,
}

impl<T: Real> Plant<T> {
    /// Validates strict properness, realness and coprimality.
    pub fn new(num: Poly<T>, den: Poly<T>) -> Result<Self> {
        let dn = num
            .degree()
            .ok_or_else(|| Error::InvalidPlant("numerator is the zero polynomial".into()))?;
        let dd = den
            .degree()
            .ok_or_else(|| Error::InvalidPlant("denominator is the zero polynomial".into()))?;
        if dd <= dn {
            return Err(Error::InvalidPlant(format!(
                "not strictly proper: deg den = {dd} must exceed deg num = {dn}"
            )));
        }
        if !num.is_real() || !den.is_real() {
            return Err(Error::InvalidPlant("coefficients must be real".into()));
        }
        if dn >= 1 {
            let zeros = num.roots()?.roots;
            let poles = den.roots()?.roots;
            for z in &zeros {
                for p in &poles {
                    if (*z - *p).norm() <= T::of(1e-8) {
                        return Err(Error::InvalidPlant(format!(
                            "num and den share a root near ({}, {})",
                            z.re, z.im
                        )));
                    }
                }
            }
        }
        Ok(Plant { num, den })
    }

    /// The two-mass-spring benchmark: b(s) = 1, a(s) = s^4 + 2 s^2.
    pub fn benchmark() -> Self {
        Plant {
            num: Poly::from_f64s(&[1.0]),
            den: Poly::from_f64s(&[0.0, 0.0, 2.0, 0.0, 1.0]),
        }
    }

    pub fn num(&self) -> &Poly<T> {
        &self.num
    }

    pub fn den(&self) -> &Poly<T> {
        &self.den
    }

    /// Denominator degree: the closed loop has degree `order() + m`.
    pub fn order(&self) -> usize {
        self.den.degree().expect("validated nonzero")
    }
}

/// Output-feedback controller y(s)/x(s) of fixed order m.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller<T: Real> {
    order: usize,
    x: Poly<T>,
    y: Poly<T>,
}

impl<T: Real> Controller<T> {
    /// Validates that x is real monic of exact degree `order` and y is real
    /// of degree at most `order` (y may be zero).
    pub fn new(order: usize, x: Poly<T>, y: Poly<T>) -> Result<Self> {
        if x.degree() != Some(order) {
            return Err(Error::InvalidController(format!(
                "x must have exact degree {order}, got {:?}",
                x.degree()
            )));
        }
        if !x.is_real() || !y.is_real() {
            return Err(Error::InvalidController("coefficients must be real".into()));
        }
        let lead = x.leading().expect("degree checked");
        if (lead - Complex::new(T::one(), T::zero())).norm() > T::of(1e-12) {
            return Err(Error::InvalidController(format!(
                "x must be monic, leading coefficient is {}",
                lead.re
            )));
        }
        if let Some(dy) = y.degree() {
            if dy > order {
                return Err(Error::InvalidController(format!(
                    "deg y = {dy} exceeds controller order {order}"
                )));
            }
        }
        Ok(Controller { order, x, y })
    }

    /// Builds the controller from the free-coefficient vector
    /// `(x_0..x_{m-1}, y_0..y_m)`; the monic leading term of x is implied.
    pub fn from_parameters(order: usize, params: &[T]) -> Self {
        assert_eq!(params.len(), 2 * order + 1, "parameter vector has length 2m + 1");
        let mut xc = params[..order].to_vec();
        xc.push(T::one());
        let y = Poly::from_real(&params[order..]);
        Controller { order, x: Poly::from_real(&xc), y }
    }

    /// The free-coefficient vector `(x_0..x_{m-1}, y_0..y_m)`.
    pub fn parameters(&self) -> Vec<T> {
        let mut p: Vec<T> = (0..self.order).map(|j| self.x.coeff(j).re).collect();
        p.extend((0..=self.order).map(|j| self.y.coeff(j).re));
        p
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn x(&self) -> &Poly<T> {
        &self.x
    }

    pub fn y(&self) -> &Poly<T> {
        &self.y
    }
}

/// Closed-loop characteristic polynomial a(s) x(s) + b(s) y(s).
///
/// Monic of degree `plant.order() + k.order()` whenever the plant
/// denominator is monic, since deg(b y) < deg(a x) by strict properness.
pub fn closed_loop_poly<T: Real>(plant: &Plant<T>, k: &Controller<T>) -> Poly<T> {
    &(plant.den() * k.x()) + &(plant.num() * k.y())
}

/// The design objective: spectral abscissa of the closed loop.
pub fn objective<T: Real>(plant: &Plant<T>, k: &Controller<T>) -> Result<T> {
    closed_loop_poly(plant, k).abscissa()
}

// --- serialization -------------------------------------------------------

impl<'de, T: Real> Deserialize<'de> for Plant<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(bound = "", deny_unknown_fields)]
        struct Repr<T: Real> {
            num: Poly<T>,
            den: Poly<T>,
        }
        let repr = Repr::deserialize(deserializer)?;
        Plant::new(repr.num, repr.den).map_err(serde::de::Error::custom)
    }
}

impl<T: Real> Serialize for Plant<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Plant", 2)?;
        s.serialize_field("num", &self.num)?;
        s.serialize_field("den", &self.den)?;
        s.end()
    }
}

impl<'de, T: Real> Deserialize<'de> for Controller<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(bound = "", deny_unknown_fields)]
        struct Repr<T: Real> {
            order: usize,
            x: Poly<T>,
            y: Poly<T>,
        }
        let repr = Repr::deserialize(deserializer)?;
        Controller::new(repr.order, repr.x, repr.y).map_err(serde::de::Error::custom)
    }
}

impl<T: Real> Serialize for Controller<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Controller", 3)?;
        s.serialize_field("order", &self.order)?;
        s.serialize_field("x", &self.x)?;
        s.serialize_field("y", &self.y)?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Poly<f64>;

    /// The optimal second-order controller of the benchmark, in exact
    /// closed form: x = (15 z^2 - 2) - 6 z s + s^2, y = z^6 - 6 z^5 s +
    /// (15 z^4 - 2 (15 z^2 - 2)) s^2 evaluated at z = -sqrt(15)/5.
    pub(crate) fn xystar() -> Controller<f64> {
        let s15 = 15.0_f64.sqrt();
        Controller::from_parameters(
            2,
            &[7.0, 6.0 * s15 / 5.0, 27.0 / 125.0, 54.0 * s15 / 125.0, -43.0 / 5.0],
        )
    }

    /// (s + sqrt(15)/5)^6 expanded by hand.
    pub(crate) fn pxystar() -> P {
        let s15 = 15.0_f64.sqrt();
        P::from_f64s(&[
            27.0 / 125.0,
            54.0 * s15 / 125.0,
            27.0 / 5.0,
            12.0 * s15 / 5.0,
            9.0,
            6.0 * s15 / 5.0,
            1.0,
        ])
    }

    #[test]
    fn static_gain_closed_loop() {
        let plant = Plant::benchmark();
        for k in [0.0, 0.5, 1.0] {
            let ctl = Controller::new(0, P::one(), P::from_f64s(&[k])).unwrap();
            let p = closed_loop_poly(&plant, &ctl);
            assert_eq!(p, P::from_f64s(&[k, 0.0, 2.0, 0.0, 1.0]));
        }
    }

    #[test]
    fn optimal_controller_closed_loop_is_the_sextic() {
        let p = closed_loop_poly(&Plant::benchmark(), &xystar());
        let want = pxystar();
        assert_eq!(p.degree(), Some(6));
        for j in 0..=6 {
            assert!(
                (p.coeff(j) - want.coeff(j)).norm() <= 1e-14 * want.coeff(j).norm().max(1.0),
                "coefficient {j}: {} vs {}",
                p.coeff(j).re,
                want.coeff(j).re
            );
        }
    }

    #[test]
    fn marginal_first_order_controller() {
        let plant = Plant::benchmark();
        for k in [0.2, 1.0] {
            let ctl = Controller::new(1, P::from_f64s(&[0.0, 1.0]), P::from_f64s(&[0.0, k]))
                .unwrap();
            let p = closed_loop_poly(&plant, &ctl);
            assert_eq!(p, P::from_f64s(&[0.0, k, 0.0, 2.0, 0.0, 1.0]));
        }
    }

    #[test]
    fn objective_values() {
        let plant = Plant::benchmark();
        for k in [0.0, 0.5, 1.0] {
            let ctl = Controller::new(0, P::one(), P::from_f64s(&[k])).unwrap();
            assert!(objective(&plant, &ctl).unwrap().abs() < 1e-6, "k={k}");
        }
        let alpha = objective(&plant, &xystar()).unwrap();
        assert!((alpha + 15.0_f64.sqrt() / 5.0).abs() < 1e-2, "alpha = {alpha}");
    }

    #[test]
    fn parameter_round_trip() {
        let params = [1.5, -2.0, 0.25, 3.0, -1.0];
        let ctl = Controller::from_parameters(2, &params);
        assert_eq!(ctl.parameters(), params);
        assert_eq!(ctl.x().leading().unwrap().re, 1.0);
        // Trailing zero in y still round-trips through the padded vector.
        let flat = Controller::from_parameters(1, &[2.0, 5.0, 0.0]);
        assert_eq!(flat.y().degree(), Some(0));
        assert_eq!(flat.parameters(), vec![2.0, 5.0, 0.0]);
    }

    #[test]
    fn controller_validation() {
        assert!(Controller::new(1, P::from_f64s(&[1.0, 2.0]), P::zero()).is_err());
        assert!(Controller::new(2, P::from_f64s(&[1.0, 1.0]), P::zero()).is_err());
        assert!(Controller::new(
            1,
            P::from_f64s(&[0.0, 1.0]),
            P::from_f64s(&[0.0, 0.0, 1.0])
        )
        .is_err());
        assert!(Controller::new(0, P::one(), P::zero()).is_ok());
    }

    #[test]
    fn plant_validation() {
        let ok = Plant::new(P::from_f64s(&[1.0, 1.0]), P::from_f64s(&[0.0, 0.0, 1.0]));
        assert!(ok.is_ok());
        // Shared simple root at -1: num = s + 1, den = (s + 1)(s + 2).
        let shared = Plant::new(
            P::from_f64s(&[1.0, 1.0]),
            P::from_f64s(&[2.0, 3.0, 1.0]),
        );
        assert!(matches!(shared, Err(Error::InvalidPlant(_))));
        let improper = Plant::new(P::from_f64s(&[1.0, 1.0]), P::from_f64s(&[1.0, 1.0]));
        assert!(matches!(improper, Err(Error::InvalidPlant(_))));
        assert!(matches!(
            Plant::new(P::zero(), P::from_f64s(&[0.0, 1.0])),
            Err(Error::InvalidPlant(_))
        ));
    }

    #[test]
    fn closed_loop_degree_and_leading() {
        let plant = Plant::benchmark();
        let ctl = Controller::from_parameters(3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let p = closed_loop_poly(&plant, &ctl);
        assert_eq!(p.degree(), Some(7));
        assert_eq!(p.leading().unwrap().re, 1.0);
    }

    #[test]
    fn serde_round_trip() {
        let text = r#"{"num": [1], "den": [0, 0, 2, 0, 1]}"#;
        let plant: Plant<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(plant, Plant::benchmark());

        let ctl_text = r#"{"order": 2, "x": [7, "4.5", 1], "y": [1, 2, 3]}"#;
        let ctl: Controller<f64> = serde_json::from_str(ctl_text).unwrap();
        assert_eq!(ctl.parameters(), vec![7.0, 4.5, 1.0, 2.0, 3.0]);

        let json = serde_json::to_string(&ctl).unwrap();
        let back: Controller<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ctl);

        // Validation runs inside deserialization.
        let bad = r#"{"order": 2, "x": [7, 4.5, 2], "y": [1]}"#;
        assert!(serde_json::from_str::<Controller<f64>>(bad).is_err());
        let bad_plant = r#"{"num": [1, 1], "den": [1, 1]}"#;
        assert!(serde_json::from_str::<Plant<f64>>(bad_plant).is_err());
    }
}
