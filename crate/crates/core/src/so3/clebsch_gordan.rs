//! Real Clebsch-Gordan coefficients obtained as the null vector of the
//! intertwining constraint
//!
//! `Σ_ab C[a,b,c] D1[a,a'] D2[b,b'] = Σ_c' D3[c,c'] C[a',b',c']`
//!
//! stacked over a few fixed rotations. The intertwiner space is one
//! dimensional whenever the triangle rule holds, so the smallest eigenvector of
//! the normal equations is the answer up to scale and sign. Results are cached
//! per degree triple.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_degree, wigner_d, Rotation};
use crate::{Error, Result};

/// Non-zero coefficient `C[a, b, c]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgEntry {
    pub a: u16,
    pub b: u16,
    pub c: u16,
    pub value: f64,
}

/// Dense `(2l1+1) × (2l2+1) × (2l3+1)` coefficient tensor, normalized so that
/// the squared entries sum to `2 l3 + 1`.
#[derive(Clone, Debug)]
pub struct CgTensor {
    pub degrees: (u32, u32, u32),
    dims: (usize, usize, usize),
    data: Vec<f64>,
    nonzeros: Vec<CgEntry>,
}

impl CgTensor {
    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        let (_, d2, d3) = self.dims;
        self.data[(a * d2 + b) * d3 + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn nonzeros(&self) -> &[CgEntry] {
        &self.nonzeros
    }

    pub fn is_zero(&self) -> bool {
        self.nonzeros.is_empty()
    }
}

/// Whether `l3` can appear in `l1 ⊗ l2`.
pub fn triangle(l1: u32, l2: u32, l3: u32) -> bool {
    l1.abs_diff(l2) <= l3 && l3 <= l1 + l2
}

type Cache = Mutex<HashMap<(u32, u32, u32), Arc<CgTensor>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficient tensor coupling degrees `l1 ⊗ l2 → l3`; all zero outside the
/// triangle rule.
pub fn clebsch_gordan(l1: u32, l2: u32, l3: u32) -> Result<Arc<CgTensor>> {
    check_degree(l1)?;
    check_degree(l2)?;
    check_degree(l3)?;
    let key = (l1, l2, l3);
    if let Some(t) = cache().lock().expect("cg cache poisoned").get(&key) {
        return Ok(Arc::clone(t));
    }
    let tensor = Arc::new(compute(l1, l2, l3)?);
    cache()
        .lock()
        .expect("cg cache poisoned")
        .entry(key)
        .or_insert_with(|| Arc::clone(&tensor));
    Ok(tensor)
}

fn compute(l1: u32, l2: u32, l3: u32) -> Result<CgTensor> {
    let (d1, d2, d3) = (
        2 * l1 as usize + 1,
        2 * l2 as usize + 1,
        2 * l3 as usize + 1,
    );
    let n = d1 * d2 * d3;
    let idx = |a: usize, b: usize, c: usize| (a * d2 + b) * d3 + c;

    if !triangle(l1, l2, l3) {
        return Ok(CgTensor {
            degrees: (l1, l2, l3),
            dims: (d1, d2, d3),
            data: vec![0.0; n],
            nonzeros: Vec::new(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x00c1_eb5c);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for _ in 0..3 {
        let r = Rotation::random(&mut rng);
        let (w1, w2, w3) = (wigner_d(l1, &r)?, wigner_d(l2, &r)?, wigner_d(l3, &r)?);
        let mut m = DMatrix::<f64>::zeros(n, n);
        for ap in 0..d1 {
            for bp in 0..d2 {
                for c in 0..d3 {
                    let row = idx(ap, bp, c);
                    for a in 0..d1 {
                        for b in 0..d2 {
                            m[(row, idx(a, b, c))] += w1[(a, ap)] * w2[(b, bp)];
                        }
                    }
                    for cp in 0..d3 {
                        m[(row, idx(ap, bp, cp))] -= w3[(c, cp)];
                    }
                }
            }
        }
        gram += m.transpose() * &m;
    }

    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let scale = eig.eigenvalues.amax().max(1.0);
    if n > 1 && eig.eigenvalues[order[1]] < 1e-8 * scale {
        return Err(Error::Degenerate(format!(
            "intertwiner space for ({l1},{l2},{l3}) is not one dimensional"
        )));
    }
    let v = eig.eigenvectors.column(order[0]);

    let norm2: f64 = v.iter().map(|x| x * x).sum();
    let factor = (d3 as f64 / norm2).sqrt();
    let mut data: Vec<f64> = v.iter().map(|x| x * factor).collect();
    for x in &mut data {
        if x.abs() < 1e-13 {
            *x = 0.0;
        }
    }
    if let Some(first) = data.iter().find(|x| x.abs() > 1e-9) {
        if *first < 0.0 {
            data.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let mut nonzeros = Vec::new();
    for a in 0..d1 {
        for b in 0..d2 {
            for c in 0..d3 {
                let value = data[idx(a, b, c)];
                if value != 0.0 {
                    nonzeros.push(CgEntry {
                        a: a as u16,
                        b: b as u16,
                        c: c as u16,
                        value,
                    });
                }
            }
        }
    }
    Ok(CgTensor {
        degrees: (l1, l2, l3),
        dims: (d1, d2, d3),
        data,
        nonzeros,
    })
}
