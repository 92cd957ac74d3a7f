//! Loop and mixed diagrams and the error functionals built from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::geometry::radial_integral;
use crate::models::{norm_1to1, norm_2to2, AdjacencySpec};
use crate::quad::QuadOptions;
use crate::real::{lit, Real};
use crate::transform::{loop_value, ConvOptions, ConvPowers, Cut, FnRadial, Product, Radial};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiagramOptions<T> {
    /// Constant `C` in `E(L)`; any bound on `lambda_c ||Phi||` is admissible.
    pub c: T,
    /// Truncation of unbounded profiles (relative tail mass).
    pub trunc_eps: T,
    pub conv: ConvOptions<T>,
    pub quad: QuadOptions<T>,
}

impl<T: Real> Default for DiagramOptions<T> {
    fn default() -> Self {
        DiagramOptions {
            c: lit(2.0),
            trunc_eps: T::tol(1e-14),
            conv: ConvOptions::default(),
            quad: QuadOptions::with_tol(1e-300, 1e-10),
        }
    }
}

/// Convolution powers `phi, phi^{*2}, phi^{*3}` of one model, reused across diagrams.
pub struct DiagramEngine<T: Real> {
    pub spec: AdjacencySpec<T>,
    pub norm1: T,
    pub norm2: T,
    phi: Cut<T, AdjacencySpec<T>>,
    powers: ConvPowers<T>,
    opts: DiagramOptions<T>,
}

impl<T: Real> DiagramEngine<T> {
    pub fn new(spec: &AdjacencySpec<T>, opts: DiagramOptions<T>) -> Result<Self> {
        let norm1 = norm_1to1(spec)?;
        let norm2 = norm_2to2(spec)?;
        let phi = spec.truncated(opts.trunc_eps)?;
        let powers = ConvPowers::new(&phi, spec.d, 3, &opts.conv)?;
        Ok(DiagramEngine { spec: spec.clone(), norm1, norm2, phi, powers, opts })
    }

    /// Radial profile of `phi^{*k}`, `k in 1..=3`; `k = 1` is the exact model.
    pub fn profile(&self, k: usize) -> &dyn Radial<T> {
        if k == 1 {
            &self.phi
        } else {
            self.powers.power(k)
        }
    }

    /// `phi^{*n}(o,o)` for `2 <= n <= 6`.
    pub fn loop_value(&self, n: usize) -> Result<T> {
        if n == 2 {
            // phi^{*2}(o,o) = int phi^2 straight from the model.
            let p = Product(vec![&self.phi, &self.phi]);
            return Ok(radial_integral(&p, self.spec.d, &self.opts.quad)?.value);
        }
        loop_value(&self.phi, &self.powers, n, &self.opts.quad)
    }

    /// `int phi^{*n1} phi^{*n2} phi^{*n3} dmu` for `1 <= n_i <= 3`.
    pub fn mixed(&self, n1: usize, n2: usize, n3: usize) -> Result<T> {
        for n in [n1, n2, n3] {
            if !(1..=3).contains(&n) {
                return argument(format!("mixed diagram order {n} outside 1..=3"));
            }
        }
        let p = Product(vec![self.profile(n1), self.profile(n2), self.profile(n3)]);
        Ok(radial_integral(&p, self.spec.d, &self.opts.quad)?.value)
    }

    pub fn beta(&self) -> Result<T> {
        let l2 = self.loop_value(2)?;
        Ok((self.norm2 / self.norm1 * l2 / self.norm1).sqrt())
    }

    /// The four normalized terms of `Omega(L)`, in order
    /// `(2,2,1)/n^3, loop5/n^4, (2,2,2)/n^4, loop6/n^5`.
    pub fn omega_terms(&self) -> Result<[T; 4]> {
        let n = self.norm1;
        Ok([
            self.mixed(2, 2, 1)? / n.powi(3),
            self.loop_value(5)? / n.powi(4),
            self.mixed(2, 2, 2)? / n.powi(4),
            self.loop_value(6)? / n.powi(5),
        ])
    }

    pub fn omega(&self) -> Result<T> {
        Ok(self.omega_terms()?.iter().copied().sum())
    }

    fn positive_part(&self, integrand: impl Fn(T) -> T + Sync) -> Result<T> {
        let two = self.powers.power(2);
        let mut breaks = two.breaks();
        let s = self.phi.support();
        if s.is_finite() {
            breaks.push(s);
        }
        let f = FnRadial { f: |r: T| integrand(r).max(T::zero()), support: two.support(), breaks };
        Ok(radial_integral(&f, self.spec.d, &self.opts.quad)?.value / self.norm1)
    }

    /// `E(L) = (1/n) int ((C/n) phi2 phi + (C^2/(2n^2)) phi2^2 - phi/2)_+ dmu`.
    pub fn error_e(&self, c: T) -> Result<T> {
        if !(c > T::zero()) {
            return argument("C must be positive");
        }
        let n = self.norm1;
        let two = self.powers.power(2);
        let spec = &self.spec;
        self.positive_part(|r| {
            let p = spec.phi(r);
            let q = two.eval(r);
            c / n * q * p + c * c / (lit::<T>(2.0) * n * n) * q * q - p * lit(0.5)
        })
    }

    /// `E*(L) = (1/n) int ((C^2/n^2) phi2^2 - phi/2)_+ dmu`.
    pub fn error_e_star(&self, c: T) -> Result<T> {
        if !(c > T::zero()) {
            return argument("C must be positive");
        }
        let n = self.norm1;
        let two = self.powers.power(2);
        let spec = &self.spec;
        self.positive_part(|r| {
            let q = two.eval(r);
            c * c / (n * n) * q * q - spec.phi(r) * lit(0.5)
        })
    }

    pub fn report(&self) -> Result<DiagramReport<T>> {
        let mut loops = BTreeMap::new();
        for n in 2..=6 {
            loops.insert(n, self.loop_value(n)?);
        }
        let mixed = [[2, 2, 1], [1, 2, 2], [2, 2, 2]]
            .iter()
            .map(|&k| Ok(MixedEntry { orders: k, value: self.mixed(k[0], k[1], k[2])? }))
            .collect::<Result<Vec<_>>>()?;
        let omega_terms = self.omega_terms()?;
        let c = self.opts.c;
        Ok(DiagramReport {
            spec: self.spec.clone(),
            norm1: self.norm1,
            norm2: self.norm2,
            beta: (self.norm2 / self.norm1 * loops[&2] / self.norm1).sqrt(),
            loops,
            mixed,
            omega: omega_terms.iter().copied().sum(),
            omega_terms,
            err_e: self.error_e(c)?,
            err_e_star: self.error_e_star(c)?,
            c_used: c,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedEntry<T> {
    pub orders: [usize; 3],
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DiagramReport<T> {
    pub spec: AdjacencySpec<T>,
    pub norm1: T,
    pub norm2: T,
    /// `n -> phi^{*n}(o,o)` for `n = 2..=6`.
    pub loops: BTreeMap<usize, T>,
    pub mixed: Vec<MixedEntry<T>>,
    pub beta: T,
    pub omega: T,
    pub omega_terms: [T; 4],
    #[serde(rename = "errE")]
    pub err_e: T,
    #[serde(rename = "errEstar")]
    pub err_e_star: T,
    #[serde(rename = "C_used")]
    pub c_used: T,
}

impl<T: Real> DiagramReport<T> {
    pub fn mixed_value(&self, orders: [usize; 3]) -> Option<T> {
        let mut key = orders;
        key.sort_unstable();
        self.mixed.iter().find(|m| {
            let mut k = m.orders;
            k.sort_unstable();
            k == key
        })
        .map(|m| m.value)
    }
}

pub fn diagram_report<T: Real>(spec: &AdjacencySpec<T>, c: T) -> Result<DiagramReport<T>> {
    let opts = DiagramOptions { c, ..DiagramOptions::default() };
    DiagramEngine::new(spec, opts)?.report()
}

pub fn mixed_diagram<T: Real>(spec: &AdjacencySpec<T>, n1: usize, n2: usize, n3: usize) -> Result<T> {
    DiagramEngine::new(spec, DiagramOptions::default())?.mixed(n1, n2, n3)
}

pub fn beta<T: Real>(spec: &AdjacencySpec<T>) -> Result<T> {
    DiagramEngine::new(spec, DiagramOptions::default())?.beta()
}

pub fn omega<T: Real>(spec: &AdjacencySpec<T>) -> Result<T> {
    DiagramEngine::new(spec, DiagramOptions::default())?.omega()
}

pub fn error_e<T: Real>(spec: &AdjacencySpec<T>, c: T) -> Result<T> {
    DiagramEngine::new(spec, DiagramOptions::default())?.error_e(c)
}

pub fn error_e_star<T: Real>(spec: &AdjacencySpec<T>, c: T) -> Result<T> {
    DiagramEngine::new(spec, DiagramOptions::default())?.error_e_star(c)
}

/// Closed-form heat-kernel loop `phi^{*n}(o,o) = A^n (2 pi n)^{-3/2} L^{-3/2} e^{-nL/2}`.
pub fn heat_loop_closed_form<T: Real>(l: T, amplitude: T, n: usize) -> T {
    let nf = T::from_usize_(n);
    amplitude.powi(n as i32) / (lit::<T>(2.0) * T::PI() * nf).powf(lit(1.5)) * l.powf(lit(-1.5))
        * (-nf * l * lit(0.5)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::default_heat_amplitude;

    fn small() -> DiagramOptions<f64> {
        DiagramOptions { conv: ConvOptions { nodes: 384, ..ConvOptions::default() }, ..DiagramOptions::default() }
    }

    #[test]
    fn boolean_basics() {
        let spec = AdjacencySpec::boolean(2, 1.0).unwrap();
        let e = DiagramEngine::new(&spec, small()).unwrap();
        let n = e.norm1;
        assert!((e.loop_value(2).unwrap() - n).abs() < 1e-10 * n);
        assert!((e.mixed(1, 1, 1).unwrap() - n).abs() < 1e-10 * n);
        let b = e.beta().unwrap();
        assert!((b - (e.norm2 / n).sqrt()).abs() < 1e-10);
        let a = e.mixed(2, 2, 1).unwrap();
        let c = e.mixed(1, 2, 2).unwrap();
        assert!((a - c).abs() / a < 1e-12);
        assert!(e.mixed(4, 1, 1).is_err());
    }

    #[test]
    fn heat_loops_close_to_closed_form() {
        let l = 2.0;
        let a = default_heat_amplitude(l);
        let spec = AdjacencySpec::heat3(l, None).unwrap();
        let e = DiagramEngine::new(&spec, small()).unwrap();
        for n in 2..=4 {
            let want = heat_loop_closed_form(l, a, n);
            let got = e.loop_value(n).unwrap();
            assert!((got - want).abs() / want < 1e-4, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn error_functionals_nonnegative() {
        let spec = AdjacencySpec::boolean(2, 2.0).unwrap();
        let e = DiagramEngine::new(&spec, small()).unwrap();
        let es = e.error_e_star(2.0).unwrap();
        assert!(e.error_e(2.0).unwrap() >= 0.0 && es >= 0.0);
        let bound = 4.0 * e.loop_value(4).unwrap() / e.norm1.powi(3);
        assert!(es <= bound * (1.0 + 1e-8));
        assert!(e.error_e(0.0).is_err());
    }
}
