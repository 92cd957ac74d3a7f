//! Closed-form critical-intensity expansions with itemized terms.

use serde::{Deserialize, Serialize};

use crate::diagrams::{diagram_report, DiagramReport};
use crate::error::{argument, Result};
use crate::geometry::{ball_volume, check_dim, sphere_measure};
use crate::models::{default_heat_amplitude, AdjacencySpec};
use crate::real::{lit, Real};

pub const ENVELOPE: &str = "envelope, constant unknown";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Term<T> {
    pub name: String,
    /// Human-readable formula the value was computed from.
    pub formula: String,
    pub value: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl<T: Real> Term<T> {
    fn new(name: &str, formula: impl Into<String>, value: T) -> Self {
        Term { name: name.into(), formula: formula.into(), value, note: None }
    }

    fn envelope(name: &str, formula: impl Into<String>, value: T) -> Self {
        Term { note: Some(ENVELOPE.into()), ..Term::new(name, formula, value) }
    }
}

/// Which quantity `leading + sum(correction_terms)` describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `norm1 * lambda_c`, the expected degree at criticality.
    ExpectedDegree,
    /// `lambda_c = leading * (1 + sum)`.
    LambdaC,
}

/// `lambda_c = prefactor * (1 + sum(terms))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NormalizedForm<T> {
    pub prefactor: T,
    pub terms: Vec<Term<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ExpansionReport<T> {
    pub model: String,
    pub quantity: Quantity,
    pub norm1: T,
    pub leading: T,
    pub correction_terms: Vec<Term<T>>,
    pub error_envelope: Vec<Term<T>>,
    /// Reference asymptotics of the diagrams behind the corrections.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagram_asymptotics: Vec<Term<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_form: Option<NormalizedForm<T>>,
    pub predicted_lambda_c: T,
    pub predicted_expected_degree: T,
}

impl<T: Real> ExpansionReport<T> {
    pub fn correction_sum(&self) -> T {
        self.correction_terms.iter().map(|t| t.value).sum()
    }

    pub fn envelope_sum(&self) -> T {
        self.error_envelope.iter().map(|t| t.value).sum()
    }

    pub fn term(&self, name: &str) -> Option<&Term<T>> {
        self.correction_terms
            .iter()
            .chain(&self.error_envelope)
            .chain(&self.diagram_asymptotics)
            .find(|t| t.name == name)
    }

    fn finish(mut self) -> Self {
        let s = T::one() + self.correction_sum();
        match self.quantity {
            Quantity::ExpectedDegree => {
                self.predicted_expected_degree = self.leading * s;
                self.predicted_lambda_c = self.predicted_expected_degree / self.norm1;
            }
            Quantity::LambdaC => {
                self.predicted_lambda_c = self.leading * s;
                self.predicted_expected_degree = self.predicted_lambda_c * self.norm1;
            }
        }
        self
    }
}

/// `1 + phi3/n^2 + (3/2) phi4/n^3` with the remainder
/// `(phi3/n^2)^2 + (phi4/n^3)^2 + Omega + E + beta^N` itemized.
pub fn general_expansion<T: Real>(spec: &AdjacencySpec<T>, c: T, n: u32) -> Result<ExpansionReport<T>> {
    Ok(expansion_from_report(&diagram_report(spec, c)?, n))
}

pub fn expansion_from_report<T: Real>(rep: &DiagramReport<T>, n: u32) -> ExpansionReport<T> {
    let n1 = rep.norm1;
    let get = |k: usize| rep.loops.get(&k).copied().unwrap_or(T::zero());
    let t3 = get(3) / (n1 * n1);
    let t4 = get(4) / (n1 * n1 * n1);
    let three_half: T = lit(1.5);
    let mut env = vec![
        Term::envelope("triangle_sq", "(phi^{*3}(o,o)/||Phi||^2)^2", t3 * t3),
        Term::envelope("square_sq", "(phi^{*4}(o,o)/||Phi||^3)^2", t4 * t4),
        Term::envelope("omega", "Omega(L)", rep.omega),
        Term::envelope("error_e", format!("E(L), C={}", rep.c_used), rep.err_e),
    ];
    env.push(Term::envelope("beta_pow", format!("beta(L)^{n}"), rep.beta.powi(n as i32)));
    ExpansionReport {
        model: rep.spec.describe(),
        quantity: Quantity::ExpectedDegree,
        norm1: n1,
        leading: T::one(),
        correction_terms: vec![
            Term::new("triangle", "phi^{*3}(o,o)/||Phi||^2", t3),
            Term::new("square", "(3/2) phi^{*4}(o,o)/||Phi||^3", three_half * t4),
        ],
        error_envelope: env,
        diagram_asymptotics: Vec::new(),
        normalized_form: None,
        predicted_lambda_c: T::zero(),
        predicted_expected_degree: T::zero(),
    }
    .finish()
}

/// `S_{d-2} / S_{d-1}`.
fn sphere_ratio<T: Real>(d: usize) -> T {
    sphere_measure::<T>(d - 2) / sphere_measure::<T>(d - 1)
}

/// Coefficient of `e^{-(d-1)L/2}` in the Boolean expected degree.
pub fn boolean_degree_coefficient<T: Real>(d: usize) -> Result<T> {
    check_dim(d)?;
    let dm1 = T::from_usize_(d - 1);
    Ok(sphere_ratio::<T>(d) * lit::<T>(2.0).powi(d as i32 + 2) / dm1)
}

/// Exact ball volume and its large-`L` decomposition
/// `leading * (1 - correction)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NormDecomposition<T> {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: T,
    pub exact: T,
    /// `S_{d-1} / ((d-1) 2^{d-1}) e^{(d-1)L}`.
    pub leading: T,
    /// Asymptotic relative correction.
    pub correction: Term<T>,
    /// `1 - exact / leading`.
    pub exact_relative_correction: T,
}

/// Relative volume correction: `2e^{-L}` for d=2, `4L e^{-2L}` for d=3,
/// `(d-1)^2/(d-3) e^{-2L}` for d>=4.
fn volume_correction<T: Real>(d: usize, l: T) -> Term<T> {
    let e2 = (-lit::<T>(2.0) * l).exp();
    match d {
        2 => Term::new("volume", "2 e^{-L}", lit::<T>(2.0) * (-l).exp()),
        3 => Term::new("volume", "4 L e^{-2L}", lit::<T>(4.0) * l * e2),
        _ => {
            let c = T::from_usize_((d - 1) * (d - 1)) / T::from_usize_(d - 3);
            Term::new("volume", format!("({}^2/{}) e^{{-2L}}", d - 1, d - 3), c * e2)
        }
    }
}

pub fn boolean_norm_closed_forms<T: Real>(d: usize, l: T) -> Result<NormDecomposition<T>> {
    check_dim(d)?;
    if !(l > T::zero()) {
        return argument("L must be positive");
    }
    let exact = ball_volume(d, l)?;
    let dm1 = T::from_usize_(d - 1);
    let leading = sphere_measure::<T>(d - 1) / (dm1 * lit::<T>(2.0).powi(d as i32 - 1)) * (dm1 * l).exp();
    Ok(NormDecomposition {
        d,
        l,
        exact,
        leading,
        correction: volume_correction(d, l),
        exact_relative_correction: T::one() - exact / leading,
    })
}

fn boolean_diagram_asymptotics<T: Real>(d: usize, l: T) -> Vec<Term<T>> {
    let s = sphere_ratio::<T>(d);
    let dm1 = T::from_usize_(d - 1);
    let two: T = lit(2.0);
    let half = (-dm1 * l * lit(0.5)).exp();
    let full = l * (-dm1 * l).exp();
    vec![
        Term::new(
            "phi3_over_norm2",
            "(S_{d-2}/S_{d-1}) 2^{d+2}/(d-1) e^{-(d-1)L/2}",
            s * two.powi(d as i32 + 2) / dm1 * half,
        ),
        Term::new(
            "phi4_over_norm3",
            "(S_{d-2}/S_{d-1})^2 2^{2d+3}/(d-1) L e^{-(d-1)L}",
            s * s * two.powi(2 * d as i32 + 3) / dm1 * full,
        ),
        Term::new(
            "phi1_2_2_over_norm3",
            "(S_{d-2}/S_{d-1})^2 2^{2d+2}/(d-1) L e^{-(d-1)L}",
            s * s * two.powi(2 * d as i32 + 2) / dm1 * full,
        ),
    ]
}

fn degree_term<T: Real>(d: usize, l: T) -> Result<Term<T>> {
    let c = boolean_degree_coefficient::<T>(d)?;
    let dm1 = T::from_usize_(d - 1);
    Ok(Term::new(
        "degree",
        match d {
            2 => format!("{} e^{{-L/2}}", fmt_coef(d)),
            _ => format!("{} e^{{-{}L/2}}", fmt_coef(d), d - 1),
        },
        c * (-dm1 * l * lit(0.5)).exp(),
    ))
}

fn fmt_coef(d: usize) -> String {
    match d {
        2 => "(16/pi)".into(),
        3 => "8".into(),
        4 => "(128/(3pi))".into(),
        5 => "24".into(),
        _ => format!("(S_{}/S_{}) 2^{}/{}", d - 2, d - 1, d + 2, d - 1),
    }
}

/// `mu(B_L) lambda_c = 1 + (S_{d-2}/S_{d-1}) 2^{d+2}/(d-1) e^{-(d-1)L/2} + o(.)`.
pub fn boolean_expected_degree_expansion<T: Real>(d: usize, l: T) -> Result<ExpansionReport<T>> {
    let norm = boolean_norm_closed_forms(d, l)?;
    let dm1 = T::from_usize_(d - 1);
    Ok(ExpansionReport {
        model: format!("boolean d={d} L={l}"),
        quantity: Quantity::ExpectedDegree,
        norm1: norm.exact,
        leading: T::one(),
        correction_terms: vec![degree_term(d, l)?],
        error_envelope: vec![Term::envelope("remainder", "L e^{-(d-1)L}", l * (-dm1 * l).exp())],
        diagram_asymptotics: boolean_diagram_asymptotics(d, l),
        normalized_form: None,
        predicted_lambda_c: T::zero(),
        predicted_expected_degree: T::zero(),
    }
    .finish())
}

/// `lambda_c = ((d-1) 2^{d-1} / S_{d-1}) e^{-(d-1)L} (1 + correction)`, where the
/// correction is the degree term for d<=4, degree plus volume for d=5 (total
/// `32 e^{-2L}`), and the volume term for d>=6.
pub fn boolean_lambda_c_expansion<T: Real>(d: usize, l: T) -> Result<ExpansionReport<T>> {
    let norm = boolean_norm_closed_forms(d, l)?;
    let dm1 = T::from_usize_(d - 1);
    let leading = dm1 * lit::<T>(2.0).powi(d as i32 - 1) / sphere_measure::<T>(d - 1) * (-dm1 * l).exp();
    let deg = degree_term(d, l)?;
    let vol = volume_correction(d, l);
    let (corr, sub) = match d {
        2..=4 => (vec![deg], vec![vol]),
        5 => (vec![deg, vol], vec![]),
        _ => (vec![vol], vec![deg]),
    };
    let mut env: Vec<Term<T>> = sub
        .into_iter()
        .map(|t| Term::envelope(&format!("{}_subleading", t.name), t.formula, t.value))
        .collect();
    env.push(Term::envelope("remainder", "L e^{-(d-1)L}", l * (-dm1 * l).exp()));
    Ok(ExpansionReport {
        model: format!("boolean d={d} L={l}"),
        quantity: Quantity::LambdaC,
        norm1: norm.exact,
        leading,
        correction_terms: corr,
        error_envelope: env,
        diagram_asymptotics: Vec::new(),
        normalized_form: None,
        predicted_lambda_c: T::zero(),
        predicted_expected_degree: T::zero(),
    }
    .finish())
}

/// Heat kernel on `H^3`:
/// `A lambda_c = 1 + A (6 pi)^{-3/2} L^{-3/2} e^{-3L/2} + (3/2) A (8 pi)^{-3/2} L^{-3/2} e^{-2L} + O(.)`.
pub fn heat_expansion<T: Real>(l: T, amplitude: T) -> Result<ExpansionReport<T>> {
    let spec = AdjacencySpec::heat3(l, Some(amplitude))?;
    let a = amplitude;
    let pi = T::PI();
    let l32 = l.powf(lit(-1.5));
    let t3 = a / (lit::<T>(6.0) * pi).powf(lit(1.5)) * l32 * (-lit::<T>(1.5) * l).exp();
    let t4 = lit::<T>(1.5) * a / (lit::<T>(8.0) * pi).powf(lit(1.5)) * l32 * (-lit::<T>(2.0) * l).exp();
    let e52 = (-lit::<T>(2.5) * l).exp();
    let max = default_heat_amplitude(l);
    let normalized_form = if (a - max).abs() <= T::tol(1e-12) * max {
        let third = T::one() / (lit::<T>(3.0) * lit::<T>(3.0).sqrt());
        Some(NormalizedForm {
            prefactor: (lit::<T>(2.0) * pi).powf(lit(-1.5)) * l32 * (-l * lit(0.5)).exp(),
            terms: vec![
                Term::new("triangle", "(1/(3 sqrt 3)) e^{-L}", third * (-l).exp()),
                Term::new("square", "(3/16) e^{-3L/2}", lit::<T>(3.0 / 16.0) * (-lit::<T>(1.5) * l).exp()),
                Term::envelope("remainder", "L^{-3/2} e^{-3L/2}", l32 * (-lit::<T>(1.5) * l).exp()),
            ],
        })
    } else {
        None
    };
    Ok(ExpansionReport {
        model: spec.describe(),
        quantity: Quantity::ExpectedDegree,
        norm1: a,
        leading: T::one(),
        correction_terms: vec![
            Term::new("triangle", "A (6 pi)^{-3/2} L^{-3/2} e^{-3L/2}", t3),
            Term::new("square", "(3/2) A (8 pi)^{-3/2} L^{-3/2} e^{-2L}", t4),
        ],
        error_envelope: vec![
            Term::envelope("linear", "A L^{-3/2} e^{-5L/2}", a * l32 * e52),
            Term::envelope("quadratic", "A^2 L^{-9/2} e^{-5L/2}", a * a * l32.powi(3) * e52),
        ],
        diagram_asymptotics: Vec::new(),
        normalized_form,
        predicted_lambda_c: T::zero(),
        predicted_expected_degree: T::zero(),
    }
    .finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn boolean_coefficients() {
        let c = |d| boolean_degree_coefficient::<f64>(d).unwrap();
        assert!(close(c(2), 16.0 / PI, 1e-14));
        assert!(close(c(3), 8.0, 1e-14));
        assert!(close(c(4), 128.0 / (3.0 * PI), 1e-14));
        assert!(close(c(5), 24.0, 1e-14));
    }

    #[test]
    fn lambda_c_piecewise() {
        let l = 3.0;
        let r4 = boolean_lambda_c_expansion(4, l).unwrap();
        assert!(close(r4.correction_sum(), 128.0 / (3.0 * PI) * (-1.5 * l).exp(), 1e-13));
        let r5 = boolean_lambda_c_expansion(5, l).unwrap();
        assert!(close(r5.correction_sum(), 32.0 * (-2.0 * l).exp(), 1e-13));
        let r6 = boolean_lambda_c_expansion(6, l).unwrap();
        assert!(close(r6.correction_sum(), 25.0 / 3.0 * (-2.0 * l).exp(), 1e-13));
        let r2 = boolean_lambda_c_expansion(2, l).unwrap();
        assert!(close(r2.leading, (-l).exp() / PI, 1e-14));
    }

    #[test]
    fn invariant_degree_is_lambda_times_norm() {
        for r in [
            boolean_lambda_c_expansion(3, 2.0).unwrap(),
            boolean_expected_degree_expansion(2, 5.0).unwrap(),
            heat_expansion(4.0, default_heat_amplitude(4.0)).unwrap(),
        ] {
            assert!(close(r.predicted_expected_degree, r.predicted_lambda_c * r.norm1, 1e-12));
            assert!(r.correction_terms.iter().all(|t| t.value > 0.0));
            assert!(r.error_envelope.iter().all(|t| t.note.as_deref() == Some(ENVELOPE)));
        }
    }

    #[test]
    fn norm_decomposition() {
        let n = boolean_norm_closed_forms(2, 7.0).unwrap();
        assert!(close(n.exact, 2.0 * PI * (7.0f64.cosh() - 1.0), 1e-13));
        assert!(close(n.exact_relative_correction, n.correction.value, 1e-2));
        let n3 = boolean_norm_closed_forms(3, 6.0).unwrap();
        let want = 4.0 * PI * ((12.0f64).sinh() / 4.0 - 3.0);
        assert!(close(n3.exact, want, 1e-12));
        assert!(close(n3.exact_relative_correction, n3.correction.value, 1e-2));
    }

    #[test]
    fn heat_default_display() {
        let l = 5.0;
        let r = heat_expansion(l, default_heat_amplitude(l)).unwrap();
        let nf = r.normalized_form.as_ref().unwrap();
        assert!(close(nf.terms[0].value, (-l).exp() / (3.0 * 3f64.sqrt()), 1e-12));
        assert!(close(nf.terms[1].value, 3.0 / 16.0 * (-1.5 * l).exp(), 1e-12));
        assert!(close(r.correction_terms[0].value, nf.terms[0].value, 1e-12));
        assert!(close(r.correction_terms[1].value, nf.terms[1].value, 1e-12));
        let lam = nf.prefactor * (1.0 + nf.terms[0].value + nf.terms[1].value);
        assert!(close(lam, r.predicted_lambda_c, 1e-12));
        assert!(heat_expansion(l, 2.0 * default_heat_amplitude(l)).is_err());
        assert!(heat_expansion(l, 0.0).is_err());
        assert!(heat_expansion(l, 1.0).unwrap().normalized_form.is_none());
    }

    #[test]
    fn degenerate_diagrams_give_unit_degree() {
        let spec = AdjacencySpec::boolean(2, 1.0).unwrap();
        let rep = DiagramReport {
            spec,
            norm1: 1.0,
            norm2: 1.0,
            loops: BTreeMap::from([(2, 0.0), (3, 0.0), (4, 0.0)]),
            mixed: vec![],
            beta: 0.0,
            omega: 0.0,
            omega_terms: [0.0; 4],
            err_e: 0.0,
            err_e_star: 0.0,
            c_used: 2.0,
        };
        let e = expansion_from_report(&rep, 3);
        assert_eq!(e.predicted_expected_degree, 1.0);
    }
}
