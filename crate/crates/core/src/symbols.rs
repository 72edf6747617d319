//! Declarative symbol expressions, as used by scenario files.
//!
//! An expression is a function of `(x, ω)` on the cosphere bundle, sampled
//! onto a [`CosphereGrid`] to give a [`HomogeneousSymbol`].

use serde::{Deserialize, Serialize};

use crate::error::{GopError, Result};
use crate::phasespace::{CosphereGrid, HomogeneousSymbol};
use crate::scalar::{Complex, Real};

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolExpr {
    Const {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// `amp · e^{i k·x}`.
    Mode {
        k: [i64; 2],
        #[serde(default = "one")]
        amp: f64,
    },
    /// `amp · cos(k·x)`.
    Cos {
        k: [i64; 2],
        #[serde(default = "one")]
        amp: f64,
    },
    /// `amp · sin(k·x)`.
    Sin {
        k: [i64; 2],
        #[serde(default = "one")]
        amp: f64,
    },
    /// Poisson kernel `(1 − r²) / (1 − 2r cos(k·x) + r²)`, analytic for `|r| < 1`.
    Poisson {
        r: f64,
        k: [i64; 2],
    },
    /// Component `ω_i` of the unit covector.
    Direction {
        component: usize,
    },
    /// `plus` where `ω·axis > 0`, `minus` elsewhere.
    SignSplit {
        #[serde(default = "default_axis")]
        axis: [f64; 2],
        plus: Box<SymbolExpr>,
        minus: Box<SymbolExpr>,
    },
    /// Smooth bump `bump((x_axis − centre)/radius)` in the wrapped coordinate.
    Bump {
        axis: usize,
        centre: f64,
        radius: f64,
    },
    /// Indicator of `lo ≤ x_axis < hi` (no smoothing).
    Window {
        axis: usize,
        lo: f64,
        hi: f64,
    },
    Sum {
        terms: Vec<SymbolExpr>,
    },
    Product {
        factors: Vec<SymbolExpr>,
    },
    Reciprocal {
        of: Box<SymbolExpr>,
    },
    Exp {
        of: Box<SymbolExpr>,
    },
    Conj {
        of: Box<SymbolExpr>,
    },
    /// Raw cell samples in grid order (`point·n_dirs + dir`).
    Samples {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

fn default_axis() -> [f64; 2] {
    [1.0, 0.0]
}

type C = Complex<f64>;

fn kx(k: &[i64; 2], x: &[f64; 2]) -> f64 {
    k[0] as f64 * x[0] + k[1] as f64 * x[1]
}

impl SymbolExpr {
    pub fn constant(v: f64) -> Self {
        Self::Const { re: v, im: 0.0 }
    }

    /// Value at `(x, ω)`; `Samples` has no pointwise meaning and yields an error.
    pub fn eval(&self, x: &[f64; 2], w: &[f64; 2]) -> Result<C> {
        Ok(match self {
            Self::Const { re, im } => C::new(*re, *im),
            Self::Mode { k, amp } => C::from_polar(*amp, kx(k, x)),
            Self::Cos { k, amp } => C::new(amp * kx(k, x).cos(), 0.0),
            Self::Sin { k, amp } => C::new(amp * kx(k, x).sin(), 0.0),
            Self::Poisson { r, k } => {
                if !(r.abs() < 1.0) {
                    return Err(GopError::Usage("poisson symbol needs |r| < 1".into()));
                }
                C::new(
                    (1.0 - r * r) / (1.0 - 2.0 * r * kx(k, x).cos() + r * r),
                    0.0,
                )
            }
            Self::Direction { component } => C::new(
                *w.get(*component)
                    .ok_or_else(|| GopError::Usage("direction component must be 0 or 1".into()))?,
                0.0,
            ),
            Self::SignSplit { axis, plus, minus } => {
                if w[0] * axis[0] + w[1] * axis[1] > 0.0 {
                    plus.eval(x, w)?
                } else {
                    minus.eval(x, w)?
                }
            }
            Self::Bump {
                axis,
                centre,
                radius,
            } => {
                let xa = *x
                    .get(*axis)
                    .ok_or_else(|| GopError::Usage("axis must be 0 or 1".into()))?;
                if !(*radius > 0.0) {
                    return Err(GopError::Usage("bump radius must be positive".into()));
                }
                let s = crate::scalar::wrap_centered(xa - centre) / radius;
                C::new(
                    if s.abs() < 1.0 {
                        crate::quantize::bump(s)
                    } else {
                        0.0
                    },
                    0.0,
                )
            }
            Self::Window { axis, lo, hi } => {
                let xa = *x
                    .get(*axis)
                    .ok_or_else(|| GopError::Usage("axis must be 0 or 1".into()))?;
                C::new(if xa >= *lo && xa < *hi { 1.0 } else { 0.0 }, 0.0)
            }
            Self::Sum { terms } => terms.iter().try_fold(C::new(0.0, 0.0), |acc, t| {
                Ok::<_, GopError>(acc + t.eval(x, w)?)
            })?,
            Self::Product { factors } => factors.iter().try_fold(C::new(1.0, 0.0), |acc, t| {
                Ok::<_, GopError>(acc * t.eval(x, w)?)
            })?,
            Self::Reciprocal { of } => {
                let v = of.eval(x, w)?;
                if v.norm() < 1e-14 {
                    return Err(GopError::Domain("reciprocal of a vanishing symbol".into()));
                }
                v.inv()
            }
            Self::Exp { of } => of.eval(x, w)?.exp(),
            Self::Conj { of } => of.eval(x, w)?.conj(),
            Self::Samples { .. } => {
                return Err(GopError::Usage(
                    "sampled symbols cannot be evaluated pointwise".into(),
                ))
            }
        })
    }

    /// Samples the expression on every cell of `layout`.
    pub fn sample<T: Real>(&self, layout: CosphereGrid) -> Result<HomogeneousSymbol<T>> {
        let conv = |z: C| Complex::new(T::lit(z.re), T::lit(z.im));
        if let Self::Samples { re, im } = self {
            if !im.is_empty() && im.len() != re.len() {
                return Err(GopError::Usage("sample arrays differ in length".into()));
            }
            let vals = re
                .iter()
                .enumerate()
                .map(|(k, r)| conv(C::new(*r, im.get(k).copied().unwrap_or(0.0))))
                .collect();
            return HomogeneousSymbol::from_samples(layout, vals);
        }
        let vals = (0..layout.n_cells())
            .map(|c| {
                let m = layout.cell_point::<f64>(c);
                self.eval(&m.x, &m.p).map(conv)
            })
            .collect::<Result<Vec<_>>>()?;
        HomogeneousSymbol::from_samples(layout, vals)
    }
}
