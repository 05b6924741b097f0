//! A handful of classic Hock-Schittkowski test problems, written as
//! deterministic bases for noise augmentation. Inequalities `g(x) >= 0`
//! are stored as `c(x) = -g(x) <= 0`; simple bounds become trailing
//! inequality rows.

use alloc::vec::Vec;

use super::augmented::DeterministicBase;
use crate::dense::Matrix;
use crate::math::ln;

type ObjFn = fn(&[f64], &mut [f64]) -> f64;
type ConFn = fn(&[f64], &mut [f64], &mut [f64]);
type JacFn = fn(&[f64], &mut Matrix, &mut Matrix);

struct HsDef {
    name: &'static str,
    n: usize,
    n_eq: usize,
    n_gen_ineq: usize,
    /// `(index, lower, upper)`; infinite entries are skipped.
    bounds: &'static [(usize, f64, f64)],
    x0: &'static [f64],
    obj: ObjFn,
    cons: ConFn,
    jac: JacFn,
}

#[derive(Clone, Copy)]
pub struct HsProblem {
    def: &'static HsDef,
}

impl core::fmt::Debug for HsProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("HsProblem").field("name", &self.def.name).finish()
    }
}

impl HsProblem {
    pub fn name(&self) -> &'static str {
        self.def.name
    }

    fn bound_rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        // (variable, sign, offset): sign * x_i + offset <= 0
        self.def.bounds.iter().flat_map(|&(i, lo, hi)| {
            let lower = lo.is_finite().then_some((i, -1.0, lo));
            let upper = hi.is_finite().then_some((i, 1.0, -hi));
            lower.into_iter().chain(upper)
        })
    }
}

pub const HS_NAMES: &[&str] =
    &["hs6", "hs7", "hs26", "hs27", "hs28", "hs39", "hs40", "hs48", "hs21", "hs35", "hs43", "hs65", "hs71", "hs76"];

pub fn hock_schittkowski(name: &str) -> Option<HsProblem> {
    DEFS.iter().find(|d| d.name == name).map(|def| HsProblem { def })
}

impl DeterministicBase for HsProblem {
    fn dim(&self) -> usize {
        self.def.n
    }

    fn num_eq(&self) -> usize {
        self.def.n_eq
    }

    fn num_ineq(&self) -> usize {
        self.def.n_gen_ineq + self.bound_rows().count()
    }

    fn value_grad_acc(&self, x: &[f64], weight: f64, grad: &mut [f64]) -> f64 {
        let mut g = [0.0; 8];
        let f = (self.def.obj)(x, &mut g[..self.def.n]);
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += weight * b;
        }
        f
    }

    fn constraints(&self, x: &[f64], c_eq: &mut [f64], c_in: &mut [f64]) {
        let k = self.def.n_gen_ineq;
        (self.def.cons)(x, c_eq, &mut c_in[..k]);
        for (row, (i, sign, offset)) in self.bound_rows().enumerate() {
            c_in[k + row] = sign * x[i] + offset;
        }
    }

    fn jacobians(&self, x: &[f64], j_eq: &mut Matrix, j_in: &mut Matrix) {
        let k = self.def.n_gen_ineq;
        let mut general = Matrix::zeros(k, self.def.n);
        (self.def.jac)(x, j_eq, &mut general);
        for r in 0..k {
            j_in.row_mut(r).copy_from_slice(general.row(r));
        }
        for (row, (i, sign, _)) in self.bound_rows().enumerate() {
            let dst = j_in.row_mut(k + row);
            dst.iter_mut().for_each(|v| *v = 0.0);
            dst[i] = sign;
        }
    }

    fn initial_point(&self) -> Vec<f64> {
        self.def.x0.to_vec()
    }
}

fn set_row(m: &mut Matrix, r: usize, vals: &[f64]) {
    m.row_mut(r).copy_from_slice(vals);
}

const INF: f64 = f64::INFINITY;

static DEFS: &[HsDef] = &[
    HsDef {
        name: "hs6",
        n: 2,
        n_eq: 1,
        n_gen_ineq: 0,
        bounds: &[],
        x0: &[-1.2, 1.0],
        obj: |x, g| {
            g[0] = -2.0 * (1.0 - x[0]);
            g[1] = 0.0;
            (1.0 - x[0]) * (1.0 - x[0])
        },
        cons: |x, ce, _| ce[0] = 10.0 * (x[1] - x[0] * x[0]),
        jac: |x, je, _| set_row(je, 0, &[-20.0 * x[0], 10.0]),
    },
    HsDef {
        name: "hs7",
        n: 2,
        n_eq: 1,
        n_gen_ineq: 0,
        bounds: &[],
        x0: &[2.0, 2.0],
        obj: |x, g| {
            let s = 1.0 + x[0] * x[0];
            g[0] = 2.0 * x[0] / s;
            g[1] = -1.0;
            ln(s) - x[1]
        },
        cons: |x, ce, _| {
            let s = 1.0 + x[0] * x[0];
            ce[0] = s * s + x[1] * x[1] - 4.0;
        },
        jac: |x, je, _| {
            let s = 1.0 + x[0] * x[0];
            set_row(je, 0, &[4.0 * x[0] * s, 2.0 * x[1]]);
        },
    },
    HsDef {
        name: "hs26",
        n: 3,
        n_eq: 1,
        n_gen_ineq: 0,
        bounds: &[],
        x0: &[-2.6, 2.0, 2.0],
        obj: |x, g| {
            let a = x[0] - x[1];
            let b = x[1] - x[2];
            g[0] = 2.0 * a;
            g[1] = -2.0 * a + 4.0 * b * b * b;
            g[2] = -4.0 * b * b * b;
            a * a + b * b * b * b
        },
        cons: |x, ce, _| ce[0] = (1.0 + x[1] * x[1]) * x[0] + x[2] * x[2] * x[2] * x[2] - 3.0,
        jac: |x, je, _| set_row(je, 0, &[1.0 + x[1] * x[1], 2.0 * x[0] * x[1], 4.0 * x[2] * x[2] * x[2]]),
    },
    HsDef {
        name: "hs27",
        n: 3,
        n_eq: 1,
        n_gen_ineq: 0,
        bounds: &[],
        x0: &[2.0, 2.0, 2.0],
        obj: |x, g| {
            let r = x[1] - x[0] * x[0];
            g[0] = 0.02 * (x[0] - 1.0) - 4.0 * x[0] * r;
            g[1] = 2.0 * r;
            g[2] = 0.0;
            0.01 * (x[0] - 1.0) * (x[0] - 1.0) + r * r
        },
        cons: |x, ce, _| ce[0] = x[0] + x[2] * x[2] + 1.0,
        jac: |x, je, _| set_row(je, 0, &[1.0, 0.0, 2.0 * x[2]]),
    },
    HsDef {
        name: "hs28",
        n: 3,
        n_eq: 1,
        n_gen_ineq: 0,
        bounds: &[],
        x0: &[-4.0, 1.0, 1.0],
        obj: |x, g| {
            let a = x[0] + x[1];
            let b = x[1] + x[2];
            g[0] = 2.0 * a;
            g[1] = 2.0 * a + 2.0 * b;
            g[2] = 2.0 * b;
            a * a + b * b
        },
        cons: |x, ce, _| ce[0] = x[0] + 2.0 * x[1] + 3.0 * x[2] - 1.0,
        jac: |_, je, _| set_row(je, 0, &[1.0, 2.0, 3.0]),
    },
    HsDef {
        name: "hs39",
        n: 4,
        n_eq: 2,
        n_gen_ineq: 0,
        bounds: &[],
        x0: &[2.0, 2.0, 2.0, 2.0],
        obj: |x, g| {
            g.copy_from_slice(&[-1.0, 0.0, 0.0, 0.0]);
            -x[0]
        },
        cons: |x, ce, _| {
            ce[0] = x[1] - x[0] * x[0] * x[0] - x[2] * x[2];
            ce[1] = x[0] * x[0] - x[1] - x[3] * x[3];
        },
        jac: |x, je, _| {
            set_row(je, 0, &[-3.0 * x[0] * x[0], 1.0, -2.0 * x[2], 0.0]);
            set_row(je, 1, &[2.0 * x[0], -1.0, 0.0, -2.0 * x[3]]);
        },
    },
    HsDef {
        name: "hs40",
        n: 4,
        n_eq: 3,
        n_gen_ineq: 0,
        bounds: &[],
        x0: &[0.8, 0.8, 0.8, 0.8],
        obj: |x, g| {
            g[0] = -x[1] * x[2] * x[3];
            g[1] = -x[0] * x[2] * x[3];
            g[2] = -x[0] * x[1] * x[3];
            g[3] = -x[0] * x[1] * x[2];
            -x[0] * x[1] * x[2] * x[3]
        },
        cons: |x, ce, _| {
            ce[0] = x[0] * x[0] * x[0] + x[1] * x[1] - 1.0;
            ce[1] = x[0] * x[0] * x[3] - x[2];
            ce[2] = x[3] * x[3] - x[1];
        },
        jac: |x, je, _| {
            set_row(je, 0, &[3.0 * x[0] * x[0], 2.0 * x[1], 0.0, 0.0]);
            set_row(je, 1, &[2.0 * x[0] * x[3], 0.0, -1.0, x[0] * x[0]]);
            set_row(je, 2, &[0.0, -1.0, 0.0, 2.0 * x[3]]);
        },
    },
    HsDef {
        name: "hs48",
        n: 5,
        n_eq: 2,
        n_gen_ineq: 0,
        bounds: &[],
        x0: &[3.0, 5.0, -3.0, 2.0, -2.0],
        obj: |x, g| {
            let a = x[1] - x[2];
            let b = x[3] - x[4];
            g[0] = 2.0 * (x[0] - 1.0);
            g[1] = 2.0 * a;
            g[2] = -2.0 * a;
            g[3] = 2.0 * b;
            g[4] = -2.0 * b;
            (x[0] - 1.0) * (x[0] - 1.0) + a * a + b * b
        },
        cons: |x, ce, _| {
            ce[0] = x.iter().sum::<f64>() - 5.0;
            ce[1] = x[2] - 2.0 * (x[3] + x[4]) + 3.0;
        },
        jac: |_, je, _| {
            set_row(je, 0, &[1.0; 5]);
            set_row(je, 1, &[0.0, 0.0, 1.0, -2.0, -2.0]);
        },
    },
    HsDef {
        name: "hs21",
        n: 2,
        n_eq: 0,
        n_gen_ineq: 1,
        bounds: &[(0, 2.0, 50.0), (1, -50.0, 50.0)],
        x0: &[-1.0, -1.0],
        obj: |x, g| {
            g[0] = 0.02 * x[0];
            g[1] = 2.0 * x[1];
            0.01 * x[0] * x[0] + x[1] * x[1] - 100.0
        },
        cons: |x, _, ci| ci[0] = -10.0 * x[0] + x[1] + 10.0,
        jac: |_, _, ji| set_row(ji, 0, &[-10.0, 1.0]),
    },
    HsDef {
        name: "hs35",
        n: 3,
        n_eq: 0,
        n_gen_ineq: 1,
        bounds: &[(0, 0.0, INF), (1, 0.0, INF), (2, 0.0, INF)],
        x0: &[0.5, 0.5, 0.5],
        obj: |x, g| {
            g[0] = -8.0 + 4.0 * x[0] + 2.0 * x[1] + 2.0 * x[2];
            g[1] = -6.0 + 4.0 * x[1] + 2.0 * x[0];
            g[2] = -4.0 + 2.0 * x[2] + 2.0 * x[0];
            9.0 - 8.0 * x[0] - 6.0 * x[1] - 4.0 * x[2]
                + 2.0 * x[0] * x[0]
                + 2.0 * x[1] * x[1]
                + x[2] * x[2]
                + 2.0 * x[0] * x[1]
                + 2.0 * x[0] * x[2]
        },
        cons: |x, _, ci| ci[0] = x[0] + x[1] + 2.0 * x[2] - 3.0,
        jac: |_, _, ji| set_row(ji, 0, &[1.0, 1.0, 2.0]),
    },
    HsDef {
        name: "hs43",
        n: 4,
        n_eq: 0,
        n_gen_ineq: 3,
        bounds: &[],
        x0: &[0.0, 0.0, 0.0, 0.0],
        obj: |x, g| {
            g[0] = 2.0 * x[0] - 5.0;
            g[1] = 2.0 * x[1] - 5.0;
            g[2] = 4.0 * x[2] - 21.0;
            g[3] = 2.0 * x[3] + 7.0;
            x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2] + x[3] * x[3] - 5.0 * x[0] - 5.0 * x[1] - 21.0 * x[2]
                + 7.0 * x[3]
        },
        cons: |x, _, ci| {
            let sq = |v: f64| v * v;
            ci[0] = sq(x[0]) + sq(x[1]) + sq(x[2]) + sq(x[3]) + x[0] - x[1] + x[2] - x[3] - 8.0;
            ci[1] = sq(x[0]) + 2.0 * sq(x[1]) + sq(x[2]) + 2.0 * sq(x[3]) - x[0] - x[3] - 10.0;
            ci[2] = 2.0 * sq(x[0]) + sq(x[1]) + sq(x[2]) + 2.0 * x[0] - x[1] - x[3] - 5.0;
        },
        jac: |x, _, ji| {
            set_row(ji, 0, &[2.0 * x[0] + 1.0, 2.0 * x[1] - 1.0, 2.0 * x[2] + 1.0, 2.0 * x[3] - 1.0]);
            set_row(ji, 1, &[2.0 * x[0] - 1.0, 4.0 * x[1], 2.0 * x[2], 4.0 * x[3] - 1.0]);
            set_row(ji, 2, &[4.0 * x[0] + 2.0, 2.0 * x[1] - 1.0, 2.0 * x[2], -1.0]);
        },
    },
    HsDef {
        name: "hs65",
        n: 3,
        n_eq: 0,
        n_gen_ineq: 1,
        bounds: &[(0, -4.5, 4.5), (1, -4.5, 4.5), (2, -5.0, 5.0)],
        x0: &[-5.0, 5.0, 0.0],
        obj: |x, g| {
            let a = x[0] - x[1];
            let b = x[0] + x[1] - 10.0;
            g[0] = 2.0 * a + 2.0 * b / 9.0;
            g[1] = -2.0 * a + 2.0 * b / 9.0;
            g[2] = 2.0 * (x[2] - 5.0);
            a * a + b * b / 9.0 + (x[2] - 5.0) * (x[2] - 5.0)
        },
        cons: |x, _, ci| ci[0] = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 48.0,
        jac: |x, _, ji| set_row(ji, 0, &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2]]),
    },
    HsDef {
        name: "hs71",
        n: 4,
        n_eq: 1,
        n_gen_ineq: 1,
        bounds: &[(0, 1.0, 5.0), (1, 1.0, 5.0), (2, 1.0, 5.0), (3, 1.0, 5.0)],
        x0: &[1.0, 5.0, 5.0, 1.0],
        obj: |x, g| {
            let s = x[0] + x[1] + x[2];
            g[0] = x[3] * (2.0 * x[0] + x[1] + x[2]);
            g[1] = x[0] * x[3];
            g[2] = x[0] * x[3] + 1.0;
            g[3] = x[0] * s;
            x[0] * x[3] * s + x[2]
        },
        cons: |x, ce, ci| {
            ce[0] = x.iter().map(|v| v * v).sum::<f64>() - 40.0;
            ci[0] = 25.0 - x[0] * x[1] * x[2] * x[3];
        },
        jac: |x, je, ji| {
            set_row(je, 0, &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2], 2.0 * x[3]]);
            set_row(ji, 0, &[-x[1] * x[2] * x[3], -x[0] * x[2] * x[3], -x[0] * x[1] * x[3], -x[0] * x[1] * x[2]]);
        },
    },
    HsDef {
        name: "hs76",
        n: 4,
        n_eq: 0,
        n_gen_ineq: 3,
        bounds: &[(0, 0.0, INF), (1, 0.0, INF), (2, 0.0, INF), (3, 0.0, INF)],
        x0: &[0.5, 0.5, 0.5, 0.5],
        obj: |x, g| {
            g[0] = 2.0 * x[0] - x[2] - 1.0;
            g[1] = x[1] - 3.0;
            g[2] = 2.0 * x[2] - x[0] + x[3] + 1.0;
            g[3] = x[3] + x[2] - 1.0;
            x[0] * x[0] + 0.5 * x[1] * x[1] + x[2] * x[2] + 0.5 * x[3] * x[3] - x[0] * x[2] + x[2] * x[3] - x[0]
                - 3.0 * x[1]
                + x[2]
                - x[3]
        },
        cons: |x, _, ci| {
            ci[0] = x[0] + 2.0 * x[1] + x[2] + x[3] - 5.0;
            ci[1] = 3.0 * x[0] + x[1] + 2.0 * x[2] - x[3] - 4.0;
            ci[2] = -x[1] - 4.0 * x[2] + 1.5;
        },
        jac: |_, _, ji| {
            set_row(ji, 0, &[1.0, 2.0, 1.0, 1.0]);
            set_row(ji, 1, &[3.0, 1.0, 2.0, -1.0]);
            set_row(ji, 2, &[0.0, -1.0, -4.0, 0.0]);
        },
    },
];
