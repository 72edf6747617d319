//! Scenario files: schema, validation and construction of the core objects.

use gop_core::crossed::{Action, CrossedElement, GroupKind, GroupModel};
use gop_core::phasespace::{CosphereGrid, Hamiltonian, TorusGrid};
use gop_core::quantize::{AmplitudeFamily, Representation};
use gop_core::symbols::SymbolExpr;
use gop_core::{Complex, GopError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    pub manifold: Manifold,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub representation: Option<RepresentationSpec>,
    /// Hamiltonians by name (`linear:v1[,v2]`, `abs-p`, `zero`, `quadratic-example`).
    #[serde(default)]
    pub hamiltonians: Vec<String>,
    #[serde(default)]
    pub element: Option<ElementSpec>,
    pub experiments: Vec<ExperimentSpec>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifold {
    pub dim: usize,
    pub n_points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Cyclic {
        order: u32,
        action: ActionSpec,
    },
    Integers {
        action: ActionSpec,
    },
    Line {
        tau: f64,
        window: u32,
        action: ActionSpec,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    Trivial,
    /// `x ↦ x + param(g)·velocity`.
    Translation {
        velocity: [f64; 2],
    },
    /// `exp(param(g)·unit_time·V_H)`.
    HamiltonianFlow {
        hamiltonian: String,
        #[serde(default = "one")]
        unit_time: f64,
        #[serde(default = "default_step")]
        integrator_step: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RepresentationSpec {
    /// Plain shifts along the group's translation velocity.
    Translations,
    /// Shifts made unitary for the volume density `density`.
    WeightedTranslations { density: SymbolExpr },
    /// Quantized flow of the group's Hamiltonian.
    Canonical {
        #[serde(default)]
        unitarize: bool,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    /// Coefficient of the unit `1` as `[re, im]`.
    #[serde(default)]
    pub unit: [f64; 2],
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    /// Haar-bump average `∫ φ(t/r) a δ_t dt` over a line group.
    #[serde(default)]
    pub averaged: Option<AveragedSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub g: i64,
    pub symbol: SymbolExpr,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragedSpec {
    pub symbol: SymbolExpr,
    pub radius: f64,
}

/// Per-experiment overrides of the scenario-level setup.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Context {
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub n_points: Option<usize>,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub representation: Option<RepresentationSpec>,
    #[serde(default)]
    pub hamiltonians: Option<Vec<String>>,
    #[serde(default)]
    pub element: Option<ElementSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Flow {
        hamiltonian: String,
        time: f64,
        #[serde(default = "default_step")]
        step: f64,
    },
    Translation {
        shift: [f64; 2],
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Identity,
    Translation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceSpec {
    pub time: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default)]
    pub max_fraction: f64,
    /// Only judge cells whose trajectory stays inside the centred chart
    /// `(−π, π)^d`; chart-defined Hamiltonians are not smooth at the seam.
    #[serde(default)]
    pub interior_only: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSpec {
    pub hamiltonian: String,
    pub time: f64,
    pub coarse_step: f64,
    #[serde(default = "default_order_ratio")]
    pub min_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeSpec {
    pub a: ElementSpec,
    pub b: ElementSpec,
    #[serde(default = "default_compose_cutoffs")]
    pub cutoffs: [usize; 2],
    #[serde(default = "default_compose_ratio")]
    pub min_ratio: f64,
}

/// One experiment. Every tolerance is explicit with a default.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    /// Euler identity on random cosphere samples and the two transverse-set routes.
    Transverse {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        #[serde(default = "default_zero_tol")]
        tol: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_euler_tol")]
        euler_tol: f64,
        #[serde(default)]
        invariance: Option<InvarianceSpec>,
    },
    /// Homogeneous-canonical and Hamilton–Jacobi residuals of integrated flows.
    Hamjac {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        #[serde(default = "default_times")]
        times: Vec<f64>,
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default = "default_hamjac_samples")]
        samples: usize,
        #[serde(default = "default_hom4_tol")]
        hom4_tol: f64,
        #[serde(default = "default_hj_tol")]
        hj_tol: f64,
        #[serde(default)]
        order: Option<OrderSpec>,
    },
    /// Quantized flow against the identity or the underlying translation.
    Calibration {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        hamiltonian: String,
        time: f64,
        #[serde(default = "default_step")]
        step: f64,
        reference: Reference,
        tol: f64,
    },
    /// Band residuals of `Φ Op(a) Φ⁻¹ − Op(a∘g⁻¹)`.
    Egorov {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        symbol: SymbolExpr,
        map: MapSpec,
        cutoffs: Vec<usize>,
        /// Required `r(first)/r(last)`.
        #[serde(default)]
        min_ratio: Option<f64>,
        /// Required bound on every residual.
        #[serde(default)]
        max_residual: Option<f64>,
    },
    /// Crossed-product laws on seeded random elements, covariance and symbol composition.
    Algebra {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        #[serde(default = "default_algebra_samples")]
        samples: usize,
        law_tol: f64,
        #[serde(default)]
        compose: Option<ComposeSpec>,
    },
    /// Finite-section singular values of the trajectory operators.
    Trajectory {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        #[serde(default = "default_bases")]
        bases: usize,
        #[serde(default = "default_windows")]
        windows: Vec<usize>,
        #[serde(default = "default_section_threshold")]
        threshold: f64,
        #[serde(default)]
        min_sigma: Option<f64>,
        /// Required `σ(W_max) ≤ ratio·σ(W_min)`.
        #[serde(default)]
        max_decay_ratio: Option<f64>,
    },
    /// Sections, symbol inverse, almost inverse and numerical index across grid sizes.
    Ellipticity {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        #[serde(default = "default_sizes")]
        sizes: Vec<usize>,
        #[serde(default = "default_bases")]
        bases: usize,
        #[serde(default = "default_windows")]
        windows: Vec<usize>,
        #[serde(default = "default_section_threshold")]
        section_threshold: f64,
        #[serde(default)]
        inverse_cap: Option<usize>,
        #[serde(default = "default_inverse_tol")]
        inverse_tol: f64,
        #[serde(default = "default_band")]
        band: usize,
        #[serde(default = "default_svd_tol")]
        svd_tol: f64,
        #[serde(default)]
        expect_index: Option<i64>,
        #[serde(default)]
        expect_consistent: Option<bool>,
        #[serde(default)]
        expect_almost_inverse: Option<bool>,
        #[serde(default)]
        min_gap: Option<f64>,
    },
    /// Estimated against predicted wave front of the assembled operator.
    Wavefront {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        #[serde(default = "default_wf_sizes")]
        sizes: Vec<usize>,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_slack_cells")]
        slack: usize,
        #[serde(default = "default_fraction")]
        max_fraction: f64,
    },
    /// High-band norm decay of the assembled operator.
    Smoothing {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        #[serde(default = "default_wf_sizes")]
        sizes: Vec<usize>,
        #[serde(default = "one")]
        min_exponent: f64,
        #[serde(default = "default_stability")]
        stability: f64,
    },
    /// Stationary set of the flow's generating phase against the predicted pairs.
    Stationary {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        context: Context,
        #[serde(default = "default_zero_tol_time")]
        time_tol: f64,
        #[serde(default = "default_floor")]
        floor: f64,
        #[serde(default = "default_slack_cells")]
        max_distance: usize,
    },
}

fn one() -> f64 {
    1.0
}
fn default_step() -> f64 {
    0.01
}
fn default_slack() -> f64 {
    1e-6
}
fn default_order_ratio() -> f64 {
    8.0
}
fn default_compose_cutoffs() -> [usize; 2] {
    [4, 16]
}
fn default_compose_ratio() -> f64 {
    1.5
}
fn default_zero_tol() -> f64 {
    1e-9
}
fn default_zero_tol_time() -> f64 {
    1e-6
}
fn default_samples() -> usize {
    1000
}
fn default_euler_tol() -> f64 {
    1e-10
}
fn default_times() -> Vec<f64> {
    vec![0.1, 0.25]
}
fn default_hamjac_samples() -> usize {
    20
}
fn default_hom4_tol() -> f64 {
    1e-6
}
fn default_hj_tol() -> f64 {
    1e-5
}
fn default_algebra_samples() -> usize {
    8
}
fn default_bases() -> usize {
    16
}
fn default_windows() -> Vec<usize> {
    vec![8, 16, 32, 64]
}
fn default_section_threshold() -> f64 {
    1e-3
}
fn default_sizes() -> Vec<usize> {
    vec![64, 128, 256]
}
fn default_inverse_tol() -> f64 {
    1e-6
}
fn default_band() -> usize {
    8
}
fn default_svd_tol() -> f64 {
    1e-6
}
fn default_wf_sizes() -> Vec<usize> {
    vec![128, 256]
}
fn default_window() -> usize {
    gop_core::microlocal::DEFAULT_WINDOW
}
fn default_threshold() -> f64 {
    gop_core::microlocal::DEFAULT_THRESHOLD
}
fn default_slack_cells() -> usize {
    2
}
fn default_fraction() -> f64 {
    gop_core::microlocal::CONTAINMENT_TOL
}
fn default_stability() -> f64 {
    0.3
}
fn default_floor() -> f64 {
    1e-12
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Transverse { .. } => "transverse",
            Self::Hamjac { .. } => "hamjac",
            Self::Calibration { .. } => "calibration",
            Self::Egorov { .. } => "egorov",
            Self::Algebra { .. } => "algebra",
            Self::Trajectory { .. } => "trajectory",
            Self::Ellipticity { .. } => "ellipticity",
            Self::Wavefront { .. } => "wavefront",
            Self::Smoothing { .. } => "smoothing",
            Self::Stationary { .. } => "stationary",
        }
    }

    pub fn name(&self) -> String {
        let (name, _) = self.parts();
        name.clone().unwrap_or_else(|| self.kind().to_string())
    }

    pub fn context(&self) -> &Context {
        self.parts().1
    }

    fn parts(&self) -> (&Option<String>, &Context) {
        match self {
            Self::Transverse { name, context, .. }
            | Self::Hamjac { name, context, .. }
            | Self::Calibration { name, context, .. }
            | Self::Egorov { name, context, .. }
            | Self::Algebra { name, context, .. }
            | Self::Trajectory { name, context, .. }
            | Self::Ellipticity { name, context, .. }
            | Self::Wavefront { name, context, .. }
            | Self::Smoothing { name, context, .. }
            | Self::Stationary { name, context, .. } => (name, context),
        }
    }
}

/// The scenario setup seen by one experiment after applying its overrides.
#[derive(Clone, Debug)]
pub struct Setup {
    pub dim: usize,
    pub n_points: usize,
    pub group: Option<GroupSpec>,
    pub representation: Option<RepresentationSpec>,
    pub hamiltonians: Vec<String>,
    pub element: Option<ElementSpec>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(text)
            .map_err(|e| GopError::Usage(format!("invalid scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn setup(&self, exp: &ExperimentSpec) -> Setup {
        let c = exp.context();
        Setup {
            dim: c.dim.unwrap_or(self.manifold.dim),
            n_points: c.n_points.unwrap_or(self.manifold.n_points),
            group: c.group.clone().or_else(|| self.group.clone()),
            representation: c
                .representation
                .clone()
                .or_else(|| self.representation.clone()),
            hamiltonians: c
                .hamiltonians
                .clone()
                .unwrap_or_else(|| self.hamiltonians.clone()),
            element: c.element.clone().or_else(|| self.element.clone()),
        }
    }

    /// Builds every object an experiment will need on its base grid, so
    /// configuration mistakes surface before anything runs.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(GopError::Usage("scenario name is empty".into()));
        }
        if self.experiments.is_empty() {
            return Err(GopError::Usage("scenario lists no experiments".into()));
        }
        let mut names: Vec<String> = self.experiments.iter().map(ExperimentSpec::name).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(GopError::Usage(format!(
                "duplicate experiment name {:?}",
                w[0]
            )));
        }
        for exp in &self.experiments {
            let s = self.setup(exp);
            let ctx = |e: GopError| GopError::Usage(format!("experiment {:?}: {e}", exp.name()));
            s.grid().map_err(ctx)?;
            s.hamiltonian_list().map_err(ctx)?;
            if let Some(g) = &s.group {
                let group = g.build(s.dim).map_err(ctx)?;
                if let Some(e) = &s.element {
                    e.build(&group, s.layout().map_err(ctx)?).map_err(ctx)?;
                }
            }
            exp.validate(&s).map_err(ctx)?;
        }
        Ok(())
    }
}

impl ExperimentSpec {
    fn validate(&self, s: &Setup) -> Result<()> {
        let need = |what: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(GopError::Usage(format!(
                    "{} experiment needs {what}",
                    self.kind()
                )))
            }
        };
        match self {
            Self::Transverse { .. } | Self::Hamjac { .. } => {
                need("at least one hamiltonian", !s.hamiltonians.is_empty())
            }
            Self::Algebra { samples, .. } => {
                need("a group", s.group.is_some())?;
                need("samples > 0", *samples > 0)
            }
            Self::Trajectory { windows, .. } => {
                need(
                    "a group and an element",
                    s.group.is_some() && s.element.is_some(),
                )?;
                need("windows", !windows.is_empty())
            }
            Self::Ellipticity { sizes, .. } => {
                need(
                    "a group and an element",
                    s.group.is_some() && s.element.is_some(),
                )?;
                need("at least three sizes", sizes.len() >= 3)
            }
            Self::Wavefront { sizes, .. } | Self::Smoothing { sizes, .. } => {
                need(
                    "a group and an element",
                    s.group.is_some() && s.element.is_some(),
                )?;
                need("at least one size", !sizes.is_empty())
            }
            Self::Stationary { .. } => {
                need(
                    "a group and an element",
                    s.group.is_some() && s.element.is_some(),
                )?;
                need("exactly one hamiltonian", s.hamiltonians.len() == 1)
            }
            Self::Egorov { cutoffs, .. } => need("at least one cutoff", !cutoffs.is_empty()),
            Self::Calibration { .. } => Ok(()),
        }
    }
}

impl Setup {
    pub fn grid(&self) -> Result<TorusGrid> {
        self.grid_at(self.n_points)
    }

    pub fn grid_at(&self, n: usize) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, n)
    }

    pub fn layout(&self) -> Result<CosphereGrid> {
        Ok(CosphereGrid::standard(self.grid()?))
    }

    pub fn hamiltonian_list(&self) -> Result<Vec<Hamiltonian<f64>>> {
        self.hamiltonians
            .iter()
            .map(|h| Hamiltonian::from_name(h, self.dim))
            .collect()
    }

    pub fn group(&self) -> Result<GroupModel<f64>> {
        self.group
            .as_ref()
            .ok_or_else(|| GopError::Usage("no group configured".into()))?
            .build(self.dim)
    }

    pub fn element_at(&self, group: &GroupModel<f64>, n: usize) -> Result<CrossedElement<f64>> {
        let spec = self
            .element
            .as_ref()
            .ok_or_else(|| GopError::Usage("no element configured".into()))?;
        spec.build(group, CosphereGrid::standard(self.grid_at(n)?))
    }

    pub fn representation(
        &self,
        group: &GroupModel<f64>,
        grid: TorusGrid,
    ) -> Result<Representation<f64>> {
        let spec = match &self.representation {
            Some(r) => r.clone(),
            None => match group.action() {
                Action::HamiltonianFlow { .. } => {
                    RepresentationSpec::Canonical { unitarize: false }
                }
                _ => RepresentationSpec::Translations,
            },
        };
        let velocity = || match group.action() {
            Action::Translation { velocity } => Ok(*velocity),
            Action::Trivial => Ok([0.0, 0.0]),
            _ => Err(GopError::Usage(
                "translation representation needs a translation action".into(),
            )),
        };
        match spec {
            RepresentationSpec::Translations => Ok(Representation::Translations {
                velocity: velocity()?,
            }),
            RepresentationSpec::WeightedTranslations { density } => {
                let lay = CosphereGrid::standard(grid);
                let d = (0..grid.len())
                    .map(|j| {
                        density
                            .eval(&grid.point(j), &lay.direction(0))
                            .map(|z| z.re)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Representation::WeightedTranslations {
                    velocity: velocity()?,
                    density: d,
                })
            }
            RepresentationSpec::Canonical { unitarize } => match group.action() {
                Action::HamiltonianFlow {
                    hamiltonian,
                    unit_time,
                    integrator_step,
                } => Ok(Representation::Canonical {
                    hamiltonian: hamiltonian.clone(),
                    unit_time: *unit_time,
                    integrator_step: *integrator_step,
                    amplitude: AmplitudeFamily::constant(Complex::new(1.0, 0.0), 1.0),
                    unitarize,
                }),
                _ => Err(GopError::Usage(
                    "canonical representation needs a hamiltonian_flow action".into(),
                )),
            },
        }
    }
}

impl GroupSpec {
    pub fn build(&self, dim: usize) -> Result<GroupModel<f64>> {
        let (kind, action) = match self {
            Self::Cyclic { order, action } => (GroupKind::Cyclic { order: *order }, action),
            Self::Integers { action } => (GroupKind::Integers, action),
            Self::Line {
                tau,
                window,
                action,
            } => (
                GroupKind::Line {
                    tau: *tau,
                    window: *window,
                },
                action,
            ),
        };
        let action = match action {
            ActionSpec::Trivial => Action::Trivial,
            ActionSpec::Translation { velocity } => Action::Translation {
                velocity: *velocity,
            },
            ActionSpec::HamiltonianFlow {
                hamiltonian,
                unit_time,
                integrator_step,
            } => Action::HamiltonianFlow {
                hamiltonian: Hamiltonian::from_name(hamiltonian, dim)?,
                unit_time: *unit_time,
                integrator_step: *integrator_step,
            },
        };
        GroupModel::new(kind, action, dim)
    }
}

impl ElementSpec {
    pub fn build(
        &self,
        group: &GroupModel<f64>,
        layout: CosphereGrid,
    ) -> Result<CrossedElement<f64>> {
        let unit = Complex::new(self.unit[0], self.unit[1]);
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.g, t.symbol.sample(layout)?)))
            .collect::<Result<Vec<_>>>()?;
        let base = CrossedElement::from_terms(layout, terms, unit)?;
        match &self.averaged {
            None => Ok(base),
            Some(av) => base.add(&CrossedElement::averaged(
                group,
                &av.symbol.sample(layout)?,
                av.radius,
            )?),
        }
    }
}
