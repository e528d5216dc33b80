//! Gated nonlinearity.
//!
//! Input layout: `scalars ⊕ n×0e gates ⊕ gated`, where `n` is the number of
//! channels in `gated` (all degree > 0). Output layout: `scalars ⊕ gated`.
//! Scalars go through SiLU; gated channel `k` is scaled by `sigmoid(gate_k)`.

use crate::autodiff::Rows;
use crate::so3::{IrrepsLayout, LayoutEntry, Parity, SteerableTensor};
use crate::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    input: IrrepsLayout,
    output: IrrepsLayout,
    n_scalars: usize,
    /// `(input column, output column, dim)` of every gated channel.
    gated: Vec<(usize, usize, usize)>,
}

impl Gate {
    pub fn new(scalars: &IrrepsLayout, gated: &IrrepsLayout) -> Result<Self> {
        if scalars.entries().iter().any(|e| !e.irrep.is_scalar()) {
            return Err(Error::Precondition(format!("gate scalars `{scalars}` must all be 0e")));
        }
        if gated.entries().iter().any(|e| e.irrep.degree == 0) {
            return Err(Error::Precondition(format!("gated part `{gated}` must have degree > 0")));
        }
        let n_scalars = scalars.total_dim();
        let n_gates = gated.num_channels();
        let mut entries = scalars.entries().to_vec();
        if n_gates > 0 {
            entries.push(LayoutEntry {
                mult: n_gates,
                irrep: crate::so3::Irrep::new(0, Parity::Even),
            });
        }
        entries.extend_from_slice(gated.entries());
        let input = IrrepsLayout::new(entries)?;
        let output = scalars.concat(gated);
        let mut cols = Vec::with_capacity(n_gates);
        let (mut ic, mut oc) = (n_scalars + n_gates, n_scalars);
        for e in gated.entries() {
            for _ in 0..e.mult {
                cols.push((ic, oc, e.irrep.dim()));
                ic += e.irrep.dim();
                oc += e.irrep.dim();
            }
        }
        Ok(Self {
            input,
            output,
            n_scalars,
            gated: cols,
        })
    }

    /// Splits a hidden layout of leading 0e entries followed by degree > 0
    /// entries into the gate that produces it.
    pub fn for_output(hidden: &IrrepsLayout) -> Result<Self> {
        let split = hidden
            .entries()
            .iter()
            .position(|e| e.irrep.degree > 0)
            .unwrap_or(hidden.len());
        let (s, g) = hidden.entries().split_at(split);
        if g.iter().any(|e| e.irrep.degree == 0) {
            return Err(Error::Precondition(format!(
                "layout `{hidden}` must list scalars before higher degrees"
            )));
        }
        if s.is_empty() {
            return Err(Error::Precondition(format!("layout `{hidden}` has no scalar entry")));
        }
        Self::new(&IrrepsLayout::new(s.to_vec())?, &IrrepsLayout::new(g.to_vec())?)
    }

    /// Recovers the gate structure from its input layout; fails when the
    /// gate entry is missing or has the wrong multiplicity.
    pub fn from_input_layout(layout: &IrrepsLayout) -> Result<Self> {
        let entries = layout.entries();
        let first_gated = entries.iter().position(|e| e.irrep.degree > 0);
        let Some(first) = first_gated else {
            return Self::new(layout, &IrrepsLayout::default());
        };
        let gated = IrrepsLayout::new(entries[first..].to_vec())?;
        let missing = || Error::Precondition(format!("layout `{layout}` lacks gate scalars"));
        if first == 0 {
            return Err(missing());
        }
        let gate = entries[first - 1];
        if !gate.irrep.is_scalar() || gate.mult != gated.num_channels() {
            return Err(missing());
        }
        let g = Self::new(&IrrepsLayout::new(entries[..first - 1].to_vec())?, &gated)?;
        debug_assert_eq!(&g.input, layout);
        Ok(g)
    }

    pub fn input_layout(&self) -> &IrrepsLayout {
        &self.input
    }

    pub fn output_layout(&self) -> &IrrepsLayout {
        &self.output
    }

    fn check(&self, x: &Rows) -> Result<()> {
        if x.cols != self.input.total_dim() {
            return Err(Error::LayoutMismatch {
                expected: self.input.to_string(),
                found: format!("{} columns", x.cols),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &Rows) -> Result<Rows> {
        self.check(x)?;
        let mut out = Rows::zeros(x.rows, self.output.total_dim());
        for r in 0..x.rows {
            let (xr, or) = (x.row(r), out.row_mut(r));
            for c in 0..self.n_scalars {
                or[c] = silu(xr[c]);
            }
            for (k, &(ic, oc, d)) in self.gated.iter().enumerate() {
                let s = sigmoid(xr[self.n_scalars + k]);
                for i in 0..d {
                    or[oc + i] = s * xr[ic + i];
                }
            }
        }
        Ok(out)
    }

    pub fn backward(&self, x: &Rows, gout: &Rows, gx: &mut Rows) -> Result<()> {
        self.check(x)?;
        for r in 0..x.rows {
            let (xr, gr, gxr) = (x.row(r), gout.row(r), gx.row_mut(r));
            for c in 0..self.n_scalars {
                gxr[c] += gr[c] * silu_grad(xr[c]);
            }
            for (k, &(ic, oc, d)) in self.gated.iter().enumerate() {
                let gc = self.n_scalars + k;
                let s = sigmoid(xr[gc]);
                let mut dot = 0.0;
                for i in 0..d {
                    gxr[ic + i] += s * gr[oc + i];
                    dot += gr[oc + i] * xr[ic + i];
                }
                gxr[gc] += dot * s * (1.0 - s);
            }
        }
        Ok(())
    }

    pub fn apply(&self, t: &SteerableTensor) -> Result<SteerableTensor> {
        if t.layout() != &self.input {
            return Err(Error::LayoutMismatch {
                expected: self.input.to_string(),
                found: t.layout().to_string(),
            });
        }
        let x = Rows::new(1, t.coefficients().len(), t.coefficients().to_vec())?;
        SteerableTensor::new(self.output.clone(), self.forward(&x)?.data)
    }
}

/// Applies the gate whose input layout is `t.layout()`.
pub fn gated_nonlinearity(t: &SteerableTensor) -> Result<SteerableTensor> {
    Gate::from_input_layout(t.layout())?.apply(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{rotate_steerable, Rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn layout(s: &str) -> IrrepsLayout {
        s.parse().unwrap()
    }

    #[test]
    fn zero_gate_halves_vector() {
        let t = SteerableTensor::new(layout("1x0e+1x0e+1x1o"), vec![0.0, 0.0, 2.0, -4.0, 6.0]).unwrap();
        let out = gated_nonlinearity(&t).unwrap();
        assert_eq!(out.layout(), &layout("1x0e+1x1o"));
        assert_eq!(out.coefficients(), &[0.0, 1.0, -2.0, 3.0]);
    }

    #[test]
    fn all_scalar_is_silu() {
        let t = SteerableTensor::new(layout("3x0e"), vec![-1.0, 0.5, 2.0]).unwrap();
        let out = gated_nonlinearity(&t).unwrap();
        for (o, x) in out.coefficients().iter().zip(t.coefficients()) {
            assert!((o - x / (1.0 + (-x).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_gates_rejected() {
        assert!(Gate::from_input_layout(&layout("2x0e+3x1o")).is_err());
        assert!(Gate::from_input_layout(&layout("1x1o")).is_err());
        assert!(Gate::for_output(&layout("1x1o+2x0e")).is_err());
        let g = Gate::for_output(&layout("4x0e+2x1o+1x2e")).unwrap();
        assert_eq!(g.input_layout(), &layout("4x0e+3x0e+2x1o+1x2e"));
    }

    #[test]
    fn equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Gate::for_output(&layout("2x0e+2x1o+1x2e")).unwrap();
        for _ in 0..20 {
            let c = (0..g.input_layout().total_dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let t = SteerableTensor::new(g.input_layout().clone(), c).unwrap();
            let r = Rotation::random(&mut rng);
            let lhs = g.apply(&rotate_steerable(&t, &r).unwrap()).unwrap();
            let rhs = rotate_steerable(&g.apply(&t).unwrap(), &r).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10 * (1.0 + rhs.norm()));
        }
    }
}
