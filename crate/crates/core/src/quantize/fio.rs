use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::GridOperator;
use crate::error::{GopError, Result};
use crate::hamflow::{FlowMap, GeneratingFunction};
use crate::phasespace::{CosphereGrid, HomogeneousSymbol, TorusGrid};
use crate::scalar::{expi, Complex, Real};
use crate::spectral::Spectral;

pub type AmplitudeFn<T> = Arc<dyn Fn(T, &[T; 2], &[T; 2]) -> Complex<T> + Send + Sync>;

/// Smooth family of amplitudes `a(g, x, ω)`, supported in `g ∈ [lo, hi]`.
#[derive(Clone)]
pub struct AmplitudeFamily<T: Real> {
    f: AmplitudeFn<T>,
    support: [T; 2],
    descriptor: String,
}

impl<T: Real> fmt::Debug for AmplitudeFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmplitudeFamily")
            .field("descriptor", &self.descriptor)
            .field(
                "support",
                &[self.support[0].as_f64(), self.support[1].as_f64()],
            )
            .finish()
    }
}

/// `exp(−1/(1 − s²))` on `|s| < 1`, normalized to 1 at the centre.
pub fn bump<T: Real>(s: T) -> T {
    if s.mag() >= T::one() {
        T::zero()
    } else {
        (T::one() - T::one() / (T::one() - s * s)).exp()
    }
}

impl<T: Real> AmplitudeFamily<T> {
    pub fn new(
        support: [T; 2],
        descriptor: impl Into<String>,
        f: impl Fn(T, &[T; 2], &[T; 2]) -> Complex<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(support[0] <= support[1]) {
            return Err(GopError::Usage(
                "amplitude support must satisfy lo <= hi".into(),
            ));
        }
        Ok(Self {
            f: Arc::new(f),
            support,
            descriptor: descriptor.into(),
        })
    }

    /// `a ≡ value` for `|g| ≤ half_width`.
    pub fn constant(value: Complex<T>, half_width: T) -> Self {
        Self {
            f: Arc::new(move |_, _, _| value),
            support: [-half_width, half_width],
            descriptor: format!("const({value})"),
        }
    }

    /// `g`-independent amplitude read from a symbol.
    pub fn from_symbol(sym: HomogeneousSymbol<T>, half_width: T) -> Self {
        Self {
            f: Arc::new(move |_, x, w| {
                sym.eval_unchecked(&crate::phasespace::PhasePoint::new(*x, *w))
            }),
            support: [-half_width, half_width],
            descriptor: "symbol".into(),
        }
    }

    /// `bump((g − centre)/radius) · profile(x, ω)`.
    pub fn bump_profile(
        centre: T,
        radius: T,
        profile: impl Fn(&[T; 2], &[T; 2]) -> Complex<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(move |g, x, w| profile(x, w) * bump((g - centre) / radius)),
            support: [centre - radius, centre + radius],
            descriptor: "bump".into(),
        }
    }

    pub fn support(&self) -> [T; 2] {
        self.support
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn contains(&self, g: T) -> bool {
        g >= self.support[0] && g <= self.support[1]
    }

    /// Value at `(g, x, ω)`; zero outside the declared support.
    pub fn eval(&self, g: T, x: &[T; 2], omega: &[T; 2]) -> Complex<T> {
        if self.contains(g) {
            (self.f)(g, x, omega)
        } else {
            Complex::new(T::zero(), T::zero())
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Discrete oscillatory-integral kernel
/// `K(x_j, x_k) = N⁻¹ Σ_{p'} e^{i(S(x_j,p') − p'·x_k)} a(x_j, p'/|p'|)`
/// over the grid frequencies, with the zero mode carried by the direction
/// mean of the amplitude. `g = id`, `a ≡ 1` gives the identity.
pub fn quantize_canonical<T: Real>(
    g: &FlowMap<T>,
    s: &GeneratingFunction<T>,
    amp: &AmplitudeFamily<T>,
    grid: TorusGrid,
) -> Result<GridOperator<T>> {
    if g.time() != s.time() || g.hamiltonian().descriptor() != s.hamiltonian().descriptor() {
        return Err(GopError::Usage(
            "generating function does not belong to the flow".into(),
        ));
    }
    if g.hamiltonian().dim() != grid.dim() {
        return Err(GopError::GridMismatch(
            "flow and grid dimensions differ".into(),
        ));
    }
    let n = grid.len();
    let t = g.time();
    let layout = CosphereGrid::standard(grid);
    let freqs: Vec<[i64; 2]> = (0..n).map(|f| grid.frequency(f)).collect();
    let sp = Spectral::<T>::new(grid);
    let inv = T::one() / T::from_index(n);

    let rows: Vec<Result<Vec<Complex<T>>>> = {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|j| {
                let x = grid.point::<T>(j);
                let mut unit_action: HashMap<[i64; 2], T> = HashMap::new();
                let mut w = vec![Complex::new(T::zero(), T::zero()); n];
                let mut mean = Complex::new(T::zero(), T::zero());
                for d in 0..layout.n_dirs() {
                    mean += amp.eval(t, &x, &layout.direction(d));
                }
                w[0] = mean / T::from_index(layout.n_dirs());
                for (f, xi) in freqs.iter().enumerate().skip(1) {
                    let gd = gcd(xi[0], xi[1]);
                    let prim = [xi[0] / gd, xi[1] / gd];
                    let pn = (T::from_int(prim[0] * prim[0] + prim[1] * prim[1])).sqrt();
                    let dir = [T::from_int(prim[0]) / pn, T::from_int(prim[1]) / pn];
                    let su = match unit_action.get(&prim) {
                        Some(v) => *v,
                        None => {
                            let v = s.evaluate(&x, &dir)?;
                            unit_action.insert(prim, v);
                            v
                        }
                    };
                    let scale = pn * T::from_int(gd);
                    w[f] = expi(scale * su) * amp.eval(t, &x, &dir);
                }
                sp.forward(&mut w);
                Ok(w)
            })
            .collect()
    };
    let mut data = Vec::with_capacity(n * n);
    for r in rows {
        data.extend(r?.into_iter().map(|z| z * inv));
    }
    GridOperator::new(
        grid,
        nalgebra::DMatrix::from_row_slice(n, n, &data),
        format!("Phi[{}]", g.hamiltonian().descriptor()),
    )
}

/// Unitary polar factor `W V*` of `Φ = W Σ V*`.
pub fn unitarize<T: Real>(phi: &GridOperator<T>) -> Result<GridOperator<T>> {
    let svd = phi.matrix().clone().svd(true, true);
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b));
    if !(smin >= T::lit(super::SIGMA_FLOOR)) {
        return Err(GopError::Conditioning {
            sigma_min: smin.as_f64(),
            floor: super::SIGMA_FLOOR,
        });
    }
    let u = svd.u.expect("requested") * svd.v_t.expect("requested");
    GridOperator::new(phi.grid(), u, format!("U[{}]", phi.descriptor()))
}

/// `‖U U* − I‖`.
pub fn unitarity_residual<T: Real>(u: &GridOperator<T>) -> T {
    let m = u.matrix();
    let n = m.nrows();
    super::operator::spectral_norm(
        &(m * m.adjoint() - nalgebra::DMatrix::<Complex<T>>::identity(n, n)),
    )
}
