//! Weighted Clebsch-Gordan tensor products `x ⊗ y → out`.
//!
//! A path couples entry `i1` of the first layout with entry `i2` of the second
//! into entry `i3` of the output. Its weights form a `[m1][m2][m3]` block:
//!
//! `out[w][c] += Σ_{u,v} W[u][v][w] Σ_{a,b} C[a,b,c] x[u][a] y[v][b]`.
//!
//! Optional biases are added to the even scalar output channels only, which
//! keeps the map equivariant.

use std::sync::Arc;

use rand::Rng;

use crate::autodiff::Rows;
use crate::so3::{clebsch_gordan, CgTensor, IrrepsLayout, SteerableTensor};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct TpPath {
    pub in1: usize,
    pub in2: usize,
    pub out: usize,
    cg: Arc<CgTensor>,
    m: [usize; 3],
    d: [usize; 3],
    off: [usize; 3],
    weights: usize,
}

impl TpPath {
    pub fn num_weights(&self) -> usize {
        self.m[0] * self.m[1] * self.m[2]
    }
}

#[derive(Clone, Debug)]
pub struct TensorProduct {
    in1: IrrepsLayout,
    in2: IrrepsLayout,
    out: IrrepsLayout,
    paths: Vec<TpPath>,
    n_weights: usize,
    /// Output columns receiving a bias, in parameter order.
    bias_cols: Vec<usize>,
    /// Number of `(u, v)` combinations feeding each output entry.
    fan_in: Vec<usize>,
}

/// Whether the selection rule allows coupling `i1 ⊗ i2 → i3`.
fn allowed(in1: &IrrepsLayout, in2: &IrrepsLayout, out: &IrrepsLayout, p: (usize, usize, usize)) -> bool {
    let (a, b, c) = (
        in1.entries()[p.0].irrep,
        in2.entries()[p.1].irrep,
        out.entries()[p.2].irrep,
    );
    crate::so3::triangle(a.degree, b.degree, c.degree) && a.parity.product(b.parity) == c.parity
}

impl TensorProduct {
    /// Every path allowed by the selection rule.
    pub fn new(in1: IrrepsLayout, in2: IrrepsLayout, out: IrrepsLayout, bias: bool) -> Result<Self> {
        let mut paths = Vec::new();
        for i1 in 0..in1.len() {
            for i2 in 0..in2.len() {
                for i3 in 0..out.len() {
                    if allowed(&in1, &in2, &out, (i1, i2, i3)) {
                        paths.push((i1, i2, i3));
                    }
                }
            }
        }
        Self::with_paths(in1, in2, out, &paths, bias)
    }

    pub fn with_paths(
        in1: IrrepsLayout,
        in2: IrrepsLayout,
        out: IrrepsLayout,
        paths: &[(usize, usize, usize)],
        bias: bool,
    ) -> Result<Self> {
        let (o1, o2, o3) = (in1.offsets(), in2.offsets(), out.offsets());
        let mut built = Vec::with_capacity(paths.len());
        let mut fan_in = vec![0; out.len()];
        let mut n_weights = 0;
        for &p in paths {
            if p.0 >= in1.len() || p.1 >= in2.len() || p.2 >= out.len() {
                return Err(Error::Precondition(format!("path {p:?} indexes a missing entry")));
            }
            if !allowed(&in1, &in2, &out, p) {
                let e = |l: &IrrepsLayout, i: usize| l.entries()[i].irrep;
                return Err(Error::Precondition(format!(
                    "path {} ⊗ {} → {} violates the selection rule",
                    e(&in1, p.0),
                    e(&in2, p.1),
                    e(&out, p.2)
                )));
            }
            let (e1, e2, e3) = (in1.entries()[p.0], in2.entries()[p.1], out.entries()[p.2]);
            let path = TpPath {
                in1: p.0,
                in2: p.1,
                out: p.2,
                cg: clebsch_gordan(e1.irrep.degree, e2.irrep.degree, e3.irrep.degree)?,
                m: [e1.mult, e2.mult, e3.mult],
                d: [e1.irrep.dim(), e2.irrep.dim(), e3.irrep.dim()],
                off: [o1[p.0], o2[p.1], o3[p.2]],
                weights: n_weights,
            };
            n_weights += path.num_weights();
            fan_in[p.2] += e1.mult * e2.mult;
            built.push(path);
        }
        let mut bias_cols = Vec::new();
        if bias {
            for (e, &o) in out.entries().iter().zip(&o3) {
                if e.irrep.is_scalar() {
                    bias_cols.extend(o..o + e.mult);
                }
            }
        }
        Ok(Self {
            in1,
            in2,
            out,
            paths: built,
            n_weights,
            bias_cols,
            fan_in,
        })
    }

    pub fn layout_in1(&self) -> &IrrepsLayout {
        &self.in1
    }

    pub fn layout_in2(&self) -> &IrrepsLayout {
        &self.in2
    }

    pub fn layout_out(&self) -> &IrrepsLayout {
        &self.out
    }

    pub fn paths(&self) -> &[TpPath] {
        &self.paths
    }

    pub fn num_weights(&self) -> usize {
        self.n_weights
    }

    /// Weights followed by biases.
    pub fn num_params(&self) -> usize {
        self.n_weights + self.bias_cols.len()
    }

    /// Weights uniform in `±1/√fan_in` of their output entry, biases zero.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R, params: &mut [f64]) {
        for p in &self.paths {
            let bound = 1.0 / (self.fan_in[p.out] as f64).sqrt();
            for w in &mut params[p.weights..p.weights + p.num_weights()] {
                *w = rng.random_range(-bound..=bound);
            }
        }
        params[self.n_weights..self.num_params()].fill(0.0);
    }

    fn check(&self, x: &Rows, y: &Rows, params: &[f64]) -> Result<()> {
        if x.cols != self.in1.total_dim() || y.cols != self.in2.total_dim() {
            return Err(Error::LayoutMismatch {
                expected: format!("{} ⊗ {}", self.in1, self.in2),
                found: format!("{} ⊗ {} columns", x.cols, y.cols),
            });
        }
        y.check_broadcast(x.rows, "second operand")?;
        if params.len() != self.num_params() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for a tensor product with {}",
                params.len(),
                self.num_params()
            )));
        }
        Ok(())
    }

    /// Contracts one row with the CG tensor of `p` into `t[(u m2 + v) d3 + c]`.
    #[inline]
    fn contract(p: &TpPath, xr: &[f64], yr: &[f64], t: &mut [f64]) {
        let [m1, m2, _] = p.m;
        let [d1, d2, d3] = p.d;
        let [o1, o2, _] = p.off;
        t[..m1 * m2 * d3].fill(0.0);
        for e in p.cg.nonzeros() {
            let (a, b, c) = (e.a as usize, e.b as usize, e.c as usize);
            for u in 0..m1 {
                let xa = e.value * xr[o1 + u * d1 + a];
                if xa == 0.0 {
                    continue;
                }
                for v in 0..m2 {
                    t[(u * m2 + v) * d3 + c] += xa * yr[o2 + v * d2 + b];
                }
            }
        }
    }

    fn scratch_len(&self) -> usize {
        self.paths
            .iter()
            .map(|p| p.m[0] * p.m[1] * p.d[2])
            .max()
            .unwrap_or(0)
    }

    /// Row-wise product; `y` may be a single row broadcast over `x`.
    pub fn forward(&self, x: &Rows, y: &Rows, params: &[f64]) -> Result<Rows> {
        self.check(x, y, params)?;
        let mut out = Rows::zeros(x.rows, self.out.total_dim());
        let mut t = vec![0.0; self.scratch_len()];
        let bias = &params[self.n_weights..];
        for r in 0..x.rows {
            let (xr, yr) = (x.row(r), y.row_bcast(r));
            let or = out.row_mut(r);
            for p in &self.paths {
                Self::contract(p, xr, yr, &mut t);
                let [m1, m2, m3] = p.m;
                let d3 = p.d[2];
                let w = &params[p.weights..p.weights + p.num_weights()];
                if d3 == 1 {
                    let dst = &mut or[p.off[2]..p.off[2] + m3];
                    for (uv, &tv) in t[..m1 * m2].iter().enumerate() {
                        for (o, wt) in dst.iter_mut().zip(&w[uv * m3..(uv + 1) * m3]) {
                            *o += wt * tv;
                        }
                    }
                    continue;
                }
                for uv in 0..m1 * m2 {
                    let tv = &t[uv * d3..(uv + 1) * d3];
                    for k in 0..m3 {
                        let wt = w[uv * m3 + k];
                        let dst = &mut or[p.off[2] + k * d3..p.off[2] + (k + 1) * d3];
                        for (o, s) in dst.iter_mut().zip(tv) {
                            *o += wt * s;
                        }
                    }
                }
            }
            for (&col, b) in self.bias_cols.iter().zip(bias) {
                or[col] += b;
            }
        }
        Ok(out)
    }

    /// Accumulates vector-Jacobian products into `gx`, `gy` (when requested)
    /// and `gparams`.
    pub fn backward(
        &self,
        x: &Rows,
        y: &Rows,
        params: &[f64],
        gout: &Rows,
        mut gx: Option<&mut Rows>,
        mut gy: Option<&mut Rows>,
        gparams: &mut [f64],
    ) -> Result<()> {
        self.check(x, y, params)?;
        let n = self.scratch_len();
        let (mut t, mut gt) = (vec![0.0; n], vec![0.0; n]);
        for r in 0..x.rows {
            let (xr, yr, gr) = (x.row(r), y.row_bcast(r), gout.row(r));
            for p in &self.paths {
                let [m1, m2, m3] = p.m;
                let [d1, d2, d3] = p.d;
                let [o1, o2, o3] = p.off;
                Self::contract(p, xr, yr, &mut t);
                let w = &params[p.weights..p.weights + p.num_weights()];
                let gw = &mut gparams[p.weights..p.weights + p.num_weights()];
                gt[..m1 * m2 * d3].fill(0.0);
                if d3 == 1 {
                    let g = &gr[o3..o3 + m3];
                    for uv in 0..m1 * m2 {
                        let (wrow, gwrow) = (&w[uv * m3..(uv + 1) * m3], &mut gw[uv * m3..(uv + 1) * m3]);
                        let mut acc = 0.0;
                        for ((wt, gwt), gk) in wrow.iter().zip(gwrow.iter_mut()).zip(g) {
                            acc += wt * gk;
                            *gwt += gk * t[uv];
                        }
                        gt[uv] = acc;
                    }
                } else {
                    for uv in 0..m1 * m2 {
                        let tv = &t[uv * d3..(uv + 1) * d3];
                        let gtv = &mut gt[uv * d3..(uv + 1) * d3];
                        for k in 0..m3 {
                            let g = &gr[o3 + k * d3..o3 + (k + 1) * d3];
                            let wt = w[uv * m3 + k];
                            let mut acc = 0.0;
                            for c in 0..d3 {
                                acc += g[c] * tv[c];
                                gtv[c] += wt * g[c];
                            }
                            gw[uv * m3 + k] += acc;
                        }
                    }
                }
                if let Some(gx) = gx.as_deref_mut() {
                    let gxr = gx.row_mut(r);
                    for e in p.cg.nonzeros() {
                        let (a, b, c) = (e.a as usize, e.b as usize, e.c as usize);
                        for u in 0..m1 {
                            let mut acc = 0.0;
                            for v in 0..m2 {
                                acc += gt[(u * m2 + v) * d3 + c] * yr[o2 + v * d2 + b];
                            }
                            gxr[o1 + u * d1 + a] += e.value * acc;
                        }
                    }
                }
                if let Some(gy) = gy.as_deref_mut() {
                    let gyr = if gy.rows == 1 { gy.row_mut(0) } else { gy.row_mut(r) };
                    for e in p.cg.nonzeros() {
                        let (a, b, c) = (e.a as usize, e.b as usize, e.c as usize);
                        for v in 0..m2 {
                            let mut acc = 0.0;
                            for u in 0..m1 {
                                acc += gt[(u * m2 + v) * d3 + c] * xr[o1 + u * d1 + a];
                            }
                            gyr[o2 + v * d2 + b] += e.value * acc;
                        }
                    }
                }
            }
            let gb = &mut gparams[self.n_weights..];
            for (&col, g) in self.bias_cols.iter().zip(gb.iter_mut()) {
                *g += gr[col];
            }
        }
        Ok(())
    }

    /// Single-tensor convenience wrapper around [`TensorProduct::forward`].
    pub fn apply(&self, params: &[f64], a: &SteerableTensor, b: &SteerableTensor) -> Result<SteerableTensor> {
        if a.layout() != &self.in1 || b.layout() != &self.in2 {
            return Err(Error::LayoutMismatch {
                expected: format!("{} ⊗ {}", self.in1, self.in2),
                found: format!("{} ⊗ {}", a.layout(), b.layout()),
            });
        }
        let x = Rows::new(1, a.coefficients().len(), a.coefficients().to_vec())?;
        let y = Rows::new(1, b.coefficients().len(), b.coefficients().to_vec())?;
        let out = self.forward(&x, &y, params)?;
        SteerableTensor::new(self.out.clone(), out.data)
    }
}

/// A tensor product together with its own weights.
#[derive(Clone, Debug)]
pub struct TensorProductMap {
    pub structure: Arc<TensorProduct>,
    pub weights: Vec<f64>,
}

impl TensorProductMap {
    pub fn new(structure: TensorProduct, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != structure.num_params() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} parameters",
                weights.len(),
                structure.num_params()
            )));
        }
        Ok(Self {
            structure: Arc::new(structure),
            weights,
        })
    }
}

pub fn tensor_product(map: &TensorProductMap, a: &SteerableTensor, b: &SteerableTensor) -> Result<SteerableTensor> {
    map.structure.apply(&map.weights, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{cartesian_to_l1, rotate_steerable, Rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout(s: &str) -> IrrepsLayout {
        s.parse().unwrap()
    }

    fn random_tensor(l: &IrrepsLayout, rng: &mut ChaCha8Rng) -> SteerableTensor {
        let c = (0..l.total_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        SteerableTensor::new(l.clone(), c).unwrap()
    }

    #[test]
    fn scalar_path_is_weighted_product() {
        let tp = TensorProduct::new(layout("1x0e"), layout("1x0e"), layout("1x0e"), false).unwrap();
        let map = TensorProductMap::new(tp, vec![2.5]).unwrap();
        let x = SteerableTensor::new(layout("1x0e"), vec![3.0]).unwrap();
        let y = SteerableTensor::new(layout("1x0e"), vec![-2.0]).unwrap();
        assert_eq!(tensor_product(&map, &x, &y).unwrap().coefficients(), &[-15.0]);
    }

    #[test]
    fn vector_dot_product_path() {
        let tp = TensorProduct::new(layout("1x1o"), layout("1x1o"), layout("1x0e"), false).unwrap();
        let map = TensorProductMap::new(tp, vec![1.0]).unwrap();
        let (u, v) = ([0.3, -1.2, 0.7], [2.0, 0.5, -0.4]);
        let a = SteerableTensor::new(layout("1x1o"), cartesian_to_l1(u).to_vec()).unwrap();
        let b = SteerableTensor::new(layout("1x1o"), cartesian_to_l1(v).to_vec()).unwrap();
        let out = tensor_product(&map, &a, &b).unwrap().coefficients()[0];
        let cg = clebsch_gordan(1, 1, 0).unwrap();
        let mut brute = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                brute += cg.get(i, j, 0) * a.coefficients()[i] * b.coefficients()[j];
            }
        }
        assert!((out - brute).abs() < 1e-14);
        // With unit-norm CG, (1 ⊗ 1 → 0) is ±u·v/√3.
        let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        assert!((out.abs() - dot.abs() / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn equivariant_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (l1, l2, l3) = (layout("2x0e+2x1o+1x2e"), layout("1x0e+1x1o+1x2e"), layout("3x0e+2x1o+2x2e"));
        let tp = TensorProduct::new(l1.clone(), l2.clone(), l3, true).unwrap();
        let mut w = vec![0.0; tp.num_params()];
        tp.init(&mut rng, &mut w);
        w[tp.num_weights()..].iter_mut().for_each(|b| *b = 0.3);
        for _ in 0..50 {
            let (a, b) = (random_tensor(&l1, &mut rng), random_tensor(&l2, &mut rng));
            let r = Rotation::random(&mut rng);
            let lhs = tp
                .apply(&w, &rotate_steerable(&a, &r).unwrap(), &rotate_steerable(&b, &r).unwrap())
                .unwrap();
            let rhs = rotate_steerable(&tp.apply(&w, &a, &b).unwrap(), &r).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn rejects_bad_paths_and_layouts() {
        assert!(TensorProduct::with_paths(layout("1x1o"), layout("1x1o"), layout("1x1o"), &[(0, 0, 0)], false).is_err());
        assert!(TensorProduct::with_paths(layout("1x1o"), layout("1x1o"), layout("1x0o"), &[(0, 0, 0)], false).is_err());
        let tp = TensorProduct::new(layout("1x1o"), layout("1x0e"), layout("1x1o"), false).unwrap();
        let a = SteerableTensor::zeros(layout("1x0e"));
        assert!(matches!(tp.apply(&[1.0], &a, &a), Err(Error::LayoutMismatch { .. })));
    }

    #[test]
    fn weight_count_and_fan_in_bounds() {
        let tp = TensorProduct::new(layout("4x0e+2x1o"), layout("1x0e+1x1o"), layout("3x0e+5x1o"), true).unwrap();
        let expect: usize = tp
            .paths()
            .iter()
            .map(|p| {
                let e = |l: &IrrepsLayout, i: usize| l.entries()[i].mult;
                e(tp.layout_in1(), p.in1) * e(tp.layout_in2(), p.in2) * e(tp.layout_out(), p.out)
            })
            .sum();
        assert_eq!(tp.num_weights(), expect);
        assert_eq!(tp.num_params(), expect + 3);
        let mut w = vec![9.0; tp.num_params()];
        tp.init(&mut ChaCha8Rng::seed_from_u64(1), &mut w);
        assert!(w[..expect].iter().all(|v| v.abs() <= 1.0 / 2.0));
        assert!(w[expect..].iter().all(|v| *v == 0.0));
    }
}
