//! Discretized model families: Robin-to-Neumann, conformal deformation,
//! small Dirichlet holes and Fourier-multiplier operators.

mod conformal;
mod grid;
mod hole;
mod pseudo;
mod robin;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturbation::{
    defect_functional, BaseMode, CorrectorResult, PerturbationInstance, RestrictionMap, DEFAULT_GAP_THRESHOLD,
};
use crate::scalar::Real;
use crate::spectral::{solve_on_subspace, EigenOptions, EigenSolution, FormSystem, SubspaceSpec};

pub use pseudo::{
    check_symbol, circulant_on_mask, dominance, frequencies, pseudo_operator, spectral_quadrature, FractionalSymbol,
    FrozenSymbol, SymbolDominance, SymbolFamily, TabulatedSymbol,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub mode_index: usize,
    pub kind: ModelKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum ModelKind {
    Robin(RobinSpec),
    Conformal(ConformalSpec),
    DirichletHole(HoleSpec),
    PseudoSymbol(PseudoSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RobinDomain {
    Interval,
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobinSpec {
    pub domain: RobinDomain,
    /// Nodes per axis, boundary included.
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "shape")]
pub enum ConformalProfile {
    Constant {
        value: f64,
    },
    /// `a Π cos(π(x_k - ½))`.
    CosineBump {
        amplitude: f64,
    },
    /// `a sin(2πx₁)`, odd about the mid-plane.
    OddSine {
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalSpec {
    /// Space dimension, 2 or 3.
    pub dimension: usize,
    pub nodes: usize,
    pub profile: ConformalProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleSpec {
    pub nodes: usize,
    pub center: [f64; 2],
    /// `r(ε) = radius_scale · ε`.
    pub radius_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "region")]
pub enum PseudoMask {
    LeftHalf,
    Range { start: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    /// `1 + |2πξ|^{2-2ε}`.
    Fractional,
    /// The ε = 0 fractional symbol at every ε.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSpec {
    pub lattice: usize,
    pub mask: PseudoMask,
    pub symbol: SymbolKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    Robin,
    Conformal,
    DirichletHole,
    PseudoSymbol,
}

impl ModelTag {
    pub const ALL: [ModelTag; 4] = [
        ModelTag::Robin,
        ModelTag::Conformal,
        ModelTag::DirichletHole,
        ModelTag::PseudoSymbol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Robin => "robin",
            ModelTag::Conformal => "conformal",
            ModelTag::DirichletHole => "dirichlet-hole",
            ModelTag::PseudoSymbol => "pseudo-symbol",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl ModelSpec {
    pub fn default_for(tag: ModelTag) -> Self {
        let kind = match tag {
            ModelTag::Robin => ModelKind::Robin(RobinSpec {
                domain: RobinDomain::Interval,
                nodes: 401,
            }),
            ModelTag::Conformal => ModelKind::Conformal(ConformalSpec {
                dimension: 3,
                nodes: 17,
                profile: ConformalProfile::Constant { value: 1.0 },
            }),
            ModelTag::DirichletHole => ModelKind::DirichletHole(HoleSpec {
                nodes: 64,
                center: [0.5, 0.5],
                radius_scale: 0.25,
            }),
            ModelTag::PseudoSymbol => ModelKind::PseudoSymbol(PseudoSpec {
                lattice: 128,
                mask: PseudoMask::LeftHalf,
                symbol: SymbolKind::Fractional,
            }),
        };
        Self { mode_index: 0, kind }
    }

    pub fn tag(&self) -> ModelTag {
        match self.kind {
            ModelKind::Robin(_) => ModelTag::Robin,
            ModelKind::Conformal(_) => ModelTag::Conformal,
            ModelKind::DirichletHole(_) => ModelTag::DirichletHole,
            ModelKind::PseudoSymbol(_) => ModelTag::PseudoSymbol,
        }
    }

    /// Overrides the per-axis resolution (lattice size for the pseudo model).
    pub fn with_grid(mut self, n: usize) -> Self {
        match &mut self.kind {
            ModelKind::Robin(s) => s.nodes = n,
            ModelKind::Conformal(s) => s.nodes = n,
            ModelKind::DirichletHole(s) => s.nodes = n,
            ModelKind::PseudoSymbol(s) => s.lattice = n,
        }
        self
    }

    pub fn grid(&self) -> usize {
        match &self.kind {
            ModelKind::Robin(s) => s.nodes,
            ModelKind::Conformal(s) => s.nodes,
            ModelKind::DirichletHole(s) => s.nodes,
            ModelKind::PseudoSymbol(s) => s.lattice,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ModelKind::Robin(s) => check_resolution(s.nodes),
            ModelKind::Conformal(s) => {
                check_resolution(s.nodes)?;
                if !(s.dimension == 2 || s.dimension == 3) {
                    return Err(Error::Validation(format!(
                        "conformal dimension must be 2 or 3, got {}",
                        s.dimension
                    )));
                }
                if !s.profile.sup_norm().is_finite() {
                    return Err(Error::Validation("conformal profile must be bounded".into()));
                }
                Ok(())
            }
            ModelKind::DirichletHole(s) => {
                check_resolution(s.nodes)?;
                let [cx, cy] = s.center;
                if !(cx > 0.0 && cx < 1.0 && cy > 0.0 && cy < 1.0) {
                    return Err(Error::Validation(format!(
                        "hole center ({cx}, {cy}) is not strictly inside the unit square"
                    )));
                }
                if !(s.radius_scale > 0.0 && s.radius_scale.is_finite()) {
                    return Err(Error::Validation("hole radius scale must be positive".into()));
                }
                Ok(())
            }
            ModelKind::PseudoSymbol(s) => {
                check_resolution(s.lattice)?;
                let mask = pseudo::mask_nodes(s);
                pseudo::check_lattice(s.lattice, &mask)?;
                if mask.len() >= s.lattice {
                    return Err(Error::Validation("mask must be a proper subset of the lattice".into()));
                }
                Ok(())
            }
        }
    }

    /// Default ε schedule for this model.
    pub fn default_schedule(&self) -> Vec<f64> {
        match &self.kind {
            ModelKind::DirichletHole(s) => {
                let h = 1.0 / (s.nodes - 1) as f64;
                (2..=6).rev().map(|k| k as f64 * h / s.radius_scale).collect()
            }
            _ => geometric_schedule(0.1, 0.5, 8),
        }
    }

    /// Validates a single ε against the model's admissible range.
    pub fn check_eps(&self, eps: f64) -> Result<()> {
        if !eps.is_finite() {
            return Err(Error::Validation(format!("ε must be finite, got {eps}")));
        }
        match &self.kind {
            ModelKind::Robin(_) | ModelKind::DirichletHole(_) if eps < 0.0 => Err(Error::Validation(format!(
                "ε must be nonnegative for this model, got {eps}"
            ))),
            ModelKind::Conformal(s) if eps.abs() * s.profile.sup_norm() > 0.5 => Err(Error::Validation(format!(
                "ε‖Ψ‖∞ = {} exceeds 0.5",
                eps.abs() * s.profile.sup_norm()
            ))),
            ModelKind::DirichletHole(s) => hole::hole_nodes(s, eps).map(|_| ()),
            _ => Ok(()),
        }
    }
}

fn check_resolution(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::Validation(format!(
            "resolution {n} is below the minimum of 8 per axis"
        )));
    }
    Ok(())
}

pub fn geometric_schedule(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start * ratio.powi(k as i32)).collect()
}

/// The model's first-order law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "law", content = "value")]
pub enum LeadingCoefficient {
    /// `λ_ε - λ₀ = c ε + o(ε)`.
    Linear(f64),
    /// `λ_ε - λ₀ = Cap_φ₀(K_ε) + o(Cap)`.
    CapacityRatio,
}

impl LeadingCoefficient {
    pub fn linear(self) -> Option<f64> {
        match self {
            LeadingCoefficient::Linear(c) => Some(c),
            LeadingCoefficient::CapacityRatio => None,
        }
    }
}

/// One member of a model family, with its perturbation data.
#[derive(Debug, Clone)]
pub struct ModelInstance<T> {
    pub tag: ModelTag,
    pub eps: T,
    pub instance: PerturbationInstance<T>,
    /// Relative gap between the analytic and the generic defect.
    pub defect_discrepancy: T,
    /// Hole node set (capacity model).
    pub hole: Option<Vec<usize>>,
}

/// A model with its base problem solved once.
#[derive(Debug, Clone)]
pub struct PreparedModel<T> {
    spec: ModelSpec,
    base_form: FormSystem<T>,
    base_subspace: SubspaceSpec,
    base_solution: EigenSolution<T>,
    base: BaseMode<T>,
    eigen: EigenOptions<T>,
}

impl<T: Real> PreparedModel<T> {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        Self::with_options(spec, EigenOptions::default(), T::lit(DEFAULT_GAP_THRESHOLD))
    }

    pub fn with_options(spec: &ModelSpec, eigen: EigenOptions<T>, gap_threshold: T) -> Result<Self> {
        spec.validate()?;
        let (base_form, base_subspace) = assemble(spec, T::zero())?;
        let k = spec.mode_index + 3;
        let base_solution = solve_on_subspace(&base_form, &base_subspace, k, &eigen)?;
        let free = base_subspace.free_indices(base_form.dim())?.len();
        let base = BaseMode::from_solution(&base_solution, spec.mode_index, free, gap_threshold)?;
        Ok(Self {
            spec: spec.clone(),
            base_form,
            base_subspace,
            base_solution,
            base,
            eigen,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn base(&self) -> &BaseMode<T> {
        &self.base
    }

    pub fn base_form(&self) -> &FormSystem<T> {
        &self.base_form
    }

    pub fn base_subspace(&self) -> &SubspaceSpec {
        &self.base_subspace
    }

    pub fn base_solution(&self) -> &EigenSolution<T> {
        &self.base_solution
    }

    pub fn eigen_options(&self) -> &EigenOptions<T> {
        &self.eigen
    }

    pub fn instance(&self, eps: T) -> Result<ModelInstance<T>> {
        self.spec.check_eps(eps.as_f64())?;
        let (form, subspace) = assemble(&self.spec, eps)?;
        let generic = defect_functional(&self.base, &form, &subspace, &RestrictionMap::Identity)?;
        let analytic = analytic_defect(&self.spec, eps, &self.base, &self.base_form, &form, &subspace)?;
        let defect = analytic.unwrap_or(generic);
        let instance = PerturbationInstance::new(&self.base, form, subspace, defect, RestrictionMap::Identity)?;
        let defect_discrepancy = instance.consistency_residual();
        let hole = match &self.spec.kind {
            ModelKind::DirichletHole(s) => Some(hole::hole_nodes(s, eps.as_f64())?),
            _ => None,
        };
        Ok(ModelInstance {
            tag: self.spec.tag(),
            eps,
            instance,
            defect_discrepancy,
            hole,
        })
    }

    /// Enough perturbed eigenpairs to track the base mode.
    pub fn perturbed_eigenpairs(&self, inst: &ModelInstance<T>) -> Result<EigenSolution<T>> {
        let form = inst.instance.perturbed();
        let k = self.spec.mode_index + 3;
        solve_on_subspace(form, inst.instance.subspace(), k, &self.eigen)
    }

    pub fn leading_coefficient(&self) -> Result<LeadingCoefficient> {
        leading_coefficient(&self.spec, &self.base)
    }
}

/// Stiffness/mass and admissible subspace at parameter ε.
pub fn assemble<T: Real>(spec: &ModelSpec, eps: T) -> Result<(FormSystem<T>, SubspaceSpec)> {
    match &spec.kind {
        ModelKind::Robin(s) => Ok((robin::assemble(s, eps)?, SubspaceSpec::Full)),
        ModelKind::Conformal(s) => Ok((conformal::assemble(s, eps)?, conformal::dirichlet(s))),
        ModelKind::DirichletHole(s) => {
            let form = hole::assemble(s)?;
            let nodes = hole::hole_nodes(s, eps.as_f64())?;
            let sub = if nodes.is_empty() {
                SubspaceSpec::Full
            } else {
                SubspaceSpec::ZeroOnIndexSet(nodes)
            };
            Ok((form, sub))
        }
        ModelKind::PseudoSymbol(s) => {
            let f = pseudo::family::<T>(&s.symbol);
            let form = pseudo::pseudo_operator(s.lattice, &pseudo::mask_nodes(s), f.as_ref(), eps)?;
            Ok((form, SubspaceSpec::Full))
        }
    }
}

/// The model's closed-form defect vector, where one exists.
fn analytic_defect<T: Real>(
    spec: &ModelSpec,
    eps: T,
    base: &BaseMode<T>,
    base_form: &FormSystem<T>,
    form: &FormSystem<T>,
    subspace: &SubspaceSpec,
) -> Result<Option<DVector<T>>> {
    let phi = &base.eigenfunction;
    let ell = match &spec.kind {
        ModelKind::Robin(s) => robin::boundary_weights::<T>(s).component_mul(phi) * eps,
        ModelKind::Conformal(_) => {
            let da = form.apply(phi) - base_form.apply(phi);
            let dm = (form.mass() - base_form.mass()).component_mul(phi);
            subspace.project(&(da - dm * base.eigenvalue))?
        }
        ModelKind::DirichletHole(_) => DVector::zeros(form.dim()),
        ModelKind::PseudoSymbol(_) => form.apply(phi) - base_form.apply(phi),
    };
    Ok(Some(ell))
}

pub fn leading_coefficient<T: Real>(spec: &ModelSpec, base: &BaseMode<T>) -> Result<LeadingCoefficient> {
    let phi = &base.eigenfunction;
    match &spec.kind {
        ModelKind::Robin(s) => {
            let bw = robin::boundary_weights::<T>(s);
            let c = bw
                .iter()
                .zip(phi.iter())
                .fold(T::zero(), |acc, (&w, &p)| acc + w * p * p);
            Ok(LeadingCoefficient::Linear(c.as_f64()))
        }
        ModelKind::Conformal(s) => {
            let (da, dm) = conformal::derivative::<T>(s)?;
            let c = da.bilinear(phi, phi) - dm.component_mul(phi).dot(phi) * base.eigenvalue;
            Ok(LeadingCoefficient::Linear(c.as_f64()))
        }
        ModelKind::DirichletHole(_) => Ok(LeadingCoefficient::CapacityRatio),
        ModelKind::PseudoSymbol(s) => {
            let f = pseudo::family::<T>(&s.symbol);
            let c = spectral_quadrature(s.lattice, &pseudo::mask_nodes(s), phi, |xi| f.derivative_at_zero(xi));
            Ok(LeadingCoefficient::Linear(c.as_f64()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityReport {
    /// `E(V, V)`.
    pub capacity: f64,
    /// `λ₀ (V, φ₀)`.
    pub cross_check: f64,
    pub relative_discrepancy: f64,
}

/// Weighted capacity of the hole, `E(V, V)`, cross-checked against
/// `λ₀ (V, φ₀)`.
pub fn weighted_capacity<T: Real>(inst: &ModelInstance<T>, corrector: &CorrectorResult<T>) -> Result<CapacityReport> {
    if inst.tag != ModelTag::DirichletHole {
        return Err(Error::Kind(format!(
            "capacity is defined for the hole model, not {}",
            inst.tag
        )));
    }
    let p = &inst.instance;
    let capacity = corrector.energy;
    let cross = p.perturbed().inner(&corrector.v, p.restricted_base()) * p.base_eigenvalue();
    let scale = capacity.abs().max(cross.abs());
    let rel = if scale > T::zero() {
        (capacity - cross).abs() / scale
    } else {
        T::zero()
    };
    Ok(CapacityReport {
        capacity: capacity.as_f64(),
        cross_check: cross.as_f64(),
        relative_discrepancy: rel.as_f64(),
    })
}

/// Robin trace constant `sup ∫_∂Ω u² / E₀(u)` on the discrete space.
pub fn robin_trace_constant<T: Real>(spec: &ModelSpec) -> Result<T> {
    match &spec.kind {
        ModelKind::Robin(s) => robin::trace_constant(s),
        _ => Err(Error::Kind("trace constant is defined for the Robin model only".into())),
    }
}

/// Nodal values of the conformal profile Ψ.
pub fn conformal_profile<T: Real>(spec: &ModelSpec) -> Result<DVector<T>> {
    match &spec.kind {
        ModelKind::Conformal(s) => {
            let v = conformal::profile_values(s);
            Ok(DVector::from_iterator(v.len(), v.into_iter().map(T::lit)))
        }
        _ => Err(Error::Kind("profile is defined for the conformal model only".into())),
    }
}

/// Plain-text node table (coordinates and mass), or the hole mask for the
/// capacity model.
pub fn export_table(spec: &ModelSpec, eps: f64) -> Result<String> {
    match &spec.kind {
        ModelKind::DirichletHole(s) => hole::mask_table(s, eps),
        _ => Ok(assemble::<f64>(spec, eps)?.0.space().to_table()),
    }
}

/// Symbol dominance constants for the pseudo model at ε.
pub fn symbol_dominance(spec: &ModelSpec, eps: f64) -> Result<SymbolDominance> {
    match &spec.kind {
        ModelKind::PseudoSymbol(s) => {
            let f = pseudo::family::<f64>(&s.symbol);
            Ok(dominance(f.as_ref(), s.lattice, eps))
        }
        _ => Err(Error::Kind(
            "symbol dominance is defined for the pseudo model only".into(),
        )),
    }
}

fn build<T: Real>(spec: &ModelSpec, eps: T, tag: ModelTag) -> Result<ModelInstance<T>> {
    if spec.tag() != tag {
        return Err(Error::Kind(format!("expected a {tag} spec, got {}", spec.tag())));
    }
    PreparedModel::new(spec)?.instance(eps)
}

pub fn build_robin<T: Real>(spec: &ModelSpec, eps: T) -> Result<ModelInstance<T>> {
    build(spec, eps, ModelTag::Robin)
}

pub fn build_conformal<T: Real>(spec: &ModelSpec, eps: T) -> Result<ModelInstance<T>> {
    build(spec, eps, ModelTag::Conformal)
}

pub fn build_dirichlet_hole<T: Real>(spec: &ModelSpec, eps: T) -> Result<ModelInstance<T>> {
    build(spec, eps, ModelTag::DirichletHole)
}

pub fn build_pseudo<T: Real>(spec: &ModelSpec, eps: T) -> Result<ModelInstance<T>> {
    build(spec, eps, ModelTag::PseudoSymbol)
}
