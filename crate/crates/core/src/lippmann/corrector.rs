//! Corrector solves: the diffusion hierarchy, its scale-dependent variants,
//! and the Helmholtz family, with caching and residual re-verification.

use super::background::{BackgroundModel, ModelMode};
use super::operator::{IntegralOperator, OperatorKind};
use super::profile::InclusionProfile;
use crate::error::{Error, Result};
use crate::kernels::KernelEval;
use crate::linalg::{DenseSolution, DenseSolver};
use crate::meshgeom::{factorial, FieldLocation, MeshField, MultiIndex, Point, VolumeMesh};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

/// Relative residual every accepted corrector solve must meet.
pub const SOLVE_TOL: f64 = 1e-10;
/// Amplification of a random right-hand side beyond which the second-kind
/// system is treated as numerically singular.
const CONDITION_CAP: f64 = 1e12;
/// Spectral distance to −1 below which scale-free Helmholtz solves refuse.
const SPECTRAL_REFUSE: f64 = 1e-6;

/// Which corrector a solved field represents, with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum CorrectorKind {
    /// Level `level` of the diffusion hierarchy for the pair (j, k).
    PhiJkl {
        j: MultiIndex,
        k: MultiIndex,
        level: u32,
    },
    /// Solution of the full-coefficient equation with the inverse
    /// background kept un-expanded at scale ε.
    PsiEps { j: MultiIndex, eps: f64 },
    /// Corrector driven by ∇D₁ through the scalar kernel; requires a
    /// smooth contrast and constant background.
    PhiMod { j: MultiIndex },
    /// Helmholtz corrector of (I + ε^η T)φ = −T x^j.
    PhiEta { j: MultiIndex, eta: f64, eps: f64 },
}

/// A solved corrector: nodal values on the mesh of B, cellwise gradients,
/// and the relative residual of the accepted solve.
#[derive(Clone, Debug)]
pub struct CorrectorField {
    kind: CorrectorKind,
    mesh: Arc<VolumeMesh>,
    nodal: Vec<f64>,
    cell_gradients: Vec<Point>,
    residual: f64,
}

impl CorrectorField {
    fn new(kind: CorrectorKind, mesh: Arc<VolumeMesh>, nodal: Vec<f64>, residual: f64) -> Self {
        let cell_gradients = (0..mesh.num_cells())
            .map(|c| mesh.p1_gradient(c, &nodal))
            .collect();
        CorrectorField {
            kind,
            mesh,
            nodal,
            cell_gradients,
            residual,
        }
    }

    pub fn kind(&self) -> &CorrectorKind {
        &self.kind
    }

    pub fn mesh(&self) -> &Arc<VolumeMesh> {
        &self.mesh
    }

    pub fn nodal(&self) -> &[f64] {
        &self.nodal
    }

    pub fn value(&self, v: usize) -> f64 {
        self.nodal[v]
    }

    pub fn cell_gradient(&self, c: usize) -> Point {
        self.cell_gradients[c]
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// P1 interpolant at a point x inside cell c.
    pub fn value_at(&self, c: usize, x: &Point) -> f64 {
        let lam = self.mesh.barycentric(c, x);
        self.mesh
            .cell(c)
            .iter()
            .zip(lam.iter())
            .map(|(v, l)| self.nodal[*v] * l)
            .sum()
    }

    /// ‖∇φ‖_{L²(B)} from the cellwise gradients.
    pub fn gradient_l2(&self) -> f64 {
        (0..self.mesh.num_cells())
            .map(|c| self.cell_gradients[c].norm_squared() * self.mesh.cell_measure(c))
            .sum::<f64>()
            .sqrt()
    }

    pub fn nodal_linf(&self) -> f64 {
        self.nodal.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn to_mesh_field(&self, name: &str) -> MeshField {
        MeshField {
            name: name.to_string(),
            location: FieldLocation::Vertex,
            values: self.nodal.clone(),
        }
    }
}

type HierarchyKey = (MultiIndex, MultiIndex, u32);

/// One assembled operator plus everything needed to solve, cache and verify
/// the corrector family on a fixed (profile, background) pair.
pub struct CorrectorWorkspace {
    profile: InclusionProfile,
    model: BackgroundModel,
    eval: KernelEval,
    operator: IntegralOperator,
    solver: Option<DenseSolver>,
    cache: Mutex<BTreeMap<HierarchyKey, Arc<CorrectorField>>>,
    spectral_margin: Mutex<Option<f64>>,
    condition_probe: Option<f64>,
}

impl CorrectorWorkspace {
    /// Assembles the base operator for the model's mode and, in diffusion
    /// mode, factors I + T₀ once for the whole hierarchy.
    pub fn new(profile: InclusionProfile, model: BackgroundModel) -> Result<Self> {
        let dim = profile.mesh().dim();
        if dim != model.dim() {
            return Err(Error::Dimension(model.dim()));
        }
        let eval = KernelEval::new(dim)?;
        let (operator, solver, condition_probe) = match model.mode() {
            ModelMode::Diffusion => {
                profile.check_positivity(model.d0())?;
                let op = IntegralOperator::assemble(OperatorKind::T0, &profile, &model, &eval)?;
                let solver = op.matrix().clone().solver();
                let ratio = Self::condition_probe(&solver)?;
                if !ratio.is_finite() || ratio > CONDITION_CAP {
                    return Err(Error::IllPosed(format!(
                        "second-kind system amplifies a random right-hand side by {ratio:.3e}"
                    )));
                }
                (op, Some(solver), Some(ratio))
            }
            ModelMode::Helmholtz => {
                let op =
                    IntegralOperator::assemble(OperatorKind::Helmholtz, &profile, &model, &eval)?;
                (op, None, None)
            }
        };
        Ok(CorrectorWorkspace {
            profile,
            model,
            eval,
            operator,
            solver,
            cache: Mutex::new(BTreeMap::new()),
            spectral_margin: Mutex::new(None),
            condition_probe,
        })
    }

    fn condition_probe(solver: &DenseSolver) -> Result<f64> {
        let n = solver.n();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sol = solver.solve(&b)?;
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nx = sol.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(nx / nb)
    }

    pub fn profile(&self) -> &InclusionProfile {
        &self.profile
    }

    pub fn model(&self) -> &BackgroundModel {
        &self.model
    }

    pub fn eval(&self) -> &KernelEval {
        &self.eval
    }

    pub fn operator(&self) -> &IntegralOperator {
        &self.operator
    }

    pub fn mesh(&self) -> &Arc<VolumeMesh> {
        self.profile.mesh()
    }

    /// Amplification factor measured on a random right-hand side at
    /// construction; None in Helmholtz mode.
    pub fn conditioning(&self) -> Option<f64> {
        self.condition_probe
    }

    /// φ_jk^0: the base corrector of the hierarchy.
    pub fn solve_corrector_base(
        &self,
        j: &MultiIndex,
        k: &MultiIndex,
    ) -> Result<Arc<CorrectorField>> {
        self.solve_corrector_hierarchy(j, k, 0)
    }

    /// φ_jk^l, built iteratively from cached lower levels.
    pub fn solve_corrector_hierarchy(
        &self,
        j: &MultiIndex,
        k: &MultiIndex,
        level: u32,
    ) -> Result<Arc<CorrectorField>> {
        self.require_mode(ModelMode::Diffusion)?;
        let dim = self.model.dim();
        if j.dim() != dim || k.dim() != dim {
            return Err(Error::Dimension(j.dim().max(k.dim())));
        }
        if j.order() == 0 {
            return Err(Error::Config("corrector index j must have |j| >= 1".into()));
        }
        if level as usize > dim {
            return Err(Error::Config(format!(
                "hierarchy level {level} exceeds the depth cap {dim}"
            )));
        }
        let key = (j.clone(), k.clone(), level);
        if let Some(f) = self.cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(f));
        }
        let kind = CorrectorKind::PhiJkl {
            j: j.clone(),
            k: k.clone(),
            level,
        };
        let field = if level == 0 {
            let d0_inv = self.model.d0_inv();
            let profile = &self.profile;
            let rhs = self.collocate_grad_kernel(|c, x| {
                -d0_inv * profile.value_at(c, x) * k.eval(x) * j.grad(x)
            });
            self.solve_base_system(kind, rhs)?
        } else {
            let mut terms = Vec::new();
            for (m, t) in self.model.taylor_indices() {
                if m.order() <= level {
                    let low = self.solve_corrector_hierarchy(j, k, level - m.order())?;
                    let coeff = factorial(level) * t / factorial(level - m.order());
                    terms.push((coeff, m.clone(), low));
                }
            }
            if terms.is_empty() {
                self.zero_field(kind)
            } else {
                let profile = &self.profile;
                let rhs = self.collocate_grad_kernel(|c, x| {
                    let mut s = Point::zeros();
                    for (coeff, m, low) in &terms {
                        s += *coeff * m.eval(x) * low.cell_gradient(c);
                    }
                    -profile.value_at(c, x) * s
                });
                self.solve_base_system(kind, rhs)?
            }
        };
        let mut cache = self.cache.lock().unwrap();
        let entry = cache.entry(key).or_insert_with(|| Arc::new(field));
        Ok(Arc::clone(entry))
    }

    /// Ψ_j^ε: assembles the un-expanded operator I + Tᵉ and solves it.
    pub fn solve_psi_eps(&self, j: &MultiIndex, eps: f64) -> Result<CorrectorField> {
        self.require_mode(ModelMode::Diffusion)?;
        if !(eps > 0.0) {
            return Err(Error::Config(format!("scale must be positive, got {eps}")));
        }
        let low = self.scaled_coefficient_bound(eps);
        if low <= 0.0 {
            return Err(Error::IllPosed(format!(
                "scaled coefficient 1 + D₁·D₀⁻¹(x₀+εx) reaches {low:.3e}"
            )));
        }
        let op =
            IntegralOperator::assemble(OperatorKind::TEps { eps }, &self.profile, &self.model, &self.eval)?;
        let profile = &self.profile;
        let model = &self.model;
        let rhs = self.collocate_grad_kernel(|c, x| {
            -profile.value_at(c, x) * model.d0_inv_at(&(eps * x)) * j.grad(x)
        });
        let kind = CorrectorKind::PsiEps { j: j.clone(), eps };
        if rhs.iter().all(|v| *v == 0.0) {
            return Ok(self.zero_field(kind));
        }
        let solver = op.matrix().clone().solver();
        let sol = solver.solve_checked(op.matrix(), &rhs)?;
        self.accept(kind, sol)
    }

    /// Φ_j: the gradient-contrast corrector with the scalar kernel.
    pub fn solve_phi_modified(&self, j: &MultiIndex) -> Result<CorrectorField> {
        self.require_mode(ModelMode::Diffusion)?;
        if !self.model.is_constant() {
            return Err(Error::Config(
                "the gradient-contrast corrector requires a constant background".into(),
            ));
        }
        if self.profile.closed_form().is_none() {
            return Err(Error::Config(
                "the gradient-contrast corrector needs an analytic contrast gradient".into(),
            ));
        }
        let d0_inv = self.model.d0_inv();
        let profile = &self.profile;
        let rhs = self.collocate_scalar_kernel(|_c, x| {
            d0_inv
                * profile
                    .gradient_at(x)
                    .expect("analytic profile checked above")
                    .dot(&j.grad(x))
        });
        let kind = CorrectorKind::PhiMod { j: j.clone() };
        if rhs.iter().all(|v| *v == 0.0) {
            return Ok(self.zero_field(kind));
        }
        let solver = self.solver.as_ref().expect("diffusion mode has a solver");
        let sol = solver.solve_checked(self.operator.matrix(), &rhs)?;
        self.accept(kind, sol)
    }

    /// φ_j^η at scale ε: solves (I + ε^η T)φ = −T x^j with the exact
    /// right-hand side −∫ q₁ x^j Γ(· − y).
    pub fn solve_helmholtz_corrector(
        &self,
        j: &MultiIndex,
        eta: f64,
        eps: f64,
    ) -> Result<CorrectorField> {
        self.require_mode(ModelMode::Helmholtz)?;
        if !(0.0..=2.0).contains(&eta) {
            return Err(Error::Config(format!("eta must lie in [0, 2], got {eta}")));
        }
        if eps < 0.0 {
            return Err(Error::Config(format!("scale must be nonnegative, got {eps}")));
        }
        if eta == 0.0 {
            let margin = self.check_h2()?;
            if margin < SPECTRAL_REFUSE {
                return Err(Error::IllPosed(format!(
                    "spectrum of T approaches −1 (margin {margin:.3e}); the scale-free equation is not solvable"
                )));
            }
        }
        let scale = if eta == 0.0 { 1.0 } else { eps.powf(eta) };
        let profile = &self.profile;
        let rhs = self.collocate_scalar_kernel(|c, x| -profile.value_at(c, x) * j.eval(x));
        let kind = CorrectorKind::PhiEta {
            j: j.clone(),
            eta,
            eps,
        };
        if rhs.iter().all(|v| *v == 0.0) {
            return Ok(self.zero_field(kind));
        }
        let sys = self.operator.scaled_system(scale);
        let solver = sys.clone().solver();
        let sol = solver.solve_checked(&sys, &rhs)?;
        self.accept(kind, sol)
    }

    /// Distance of the spectrum of the discretized scalar-kernel T from −1.
    pub fn check_h2(&self) -> Result<f64> {
        self.require_mode(ModelMode::Helmholtz)?;
        let mut cached = self.spectral_margin.lock().unwrap();
        if let Some(m) = *cached {
            return Ok(m);
        }
        let eig = self.operator.matrix().complex_eigenvalues();
        let margin = eig
            .iter()
            .map(|(re, im)| ((re + 1.0).powi(2) + im * im).sqrt())
            .fold(f64::INFINITY, f64::min);
        if !margin.is_finite() {
            return Err(Error::LinearSolve(
                "eigenvalue computation returned no finite margin".into(),
            ));
        }
        *cached = Some(margin);
        Ok(margin)
    }

    /// Value of the corrector's integral representation at any point,
    /// including outside B.
    pub fn extension_value(&self, field: &CorrectorField, y: &Point) -> Result<f64> {
        let (s, v) = self.extension_sources(field)?;
        let mesh = self.profile.mesh();
        let mut acc = 0.0;
        for c in 0..mesh.num_cells() {
            if let Some(s) = &s {
                acc += self.eval.cell_weighted_gamma(mesh, c, y, |x| s(c, x));
            }
            if let Some(v) = &v {
                acc += self.eval.cell_vector_grad_gamma(mesh, c, y, |x| v(c, x));
            }
        }
        Ok(acc)
    }

    /// Gradient of the corrector's integral representation; y must lie
    /// outside every cell of B.
    pub fn extension_gradient(&self, field: &CorrectorField, y: &Point) -> Result<Point> {
        let (s, v) = self.extension_sources(field)?;
        let mesh = self.profile.mesh();
        let mut acc = Point::zeros();
        for c in 0..mesh.num_cells() {
            if let Some(s) = &s {
                acc -= self.eval.cell_weighted_grad_gamma(mesh, c, y, |x| s(c, x));
            }
            if let Some(v) = &v {
                acc -= self.eval.cell_vector_hess_gamma(mesh, c, y, |x| v(c, x))?;
            }
        }
        Ok(acc)
    }

    /// Max over probe directions of |φ(R·dir)| · R^{d−1}; bounded and
    /// nearly R-independent when the field has the expected far-field decay.
    pub fn far_field_probe(&self, field: &CorrectorField, radius: f64) -> Result<f64> {
        if radius <= 1.0 {
            return Err(Error::Config(format!(
                "probe radius must exceed the reference domain, got {radius}"
            )));
        }
        let dim = self.profile.mesh().dim();
        let dirs: Vec<Point> = if dim == 2 {
            (0..8)
                .map(|i| {
                    let t = std::f64::consts::TAU * (i as f64 + 0.37) / 8.0;
                    Point::new(t.cos(), t.sin(), 0.0)
                })
                .collect()
        } else {
            let mut d = vec![
                Point::new(1.0, 0.0, 0.0),
                Point::new(-1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, -1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
                Point::new(0.0, 0.0, -1.0),
            ];
            let s = 1.0 / f64::sqrt(3.0);
            for sx in [-1.0, 1.0] {
                for sy in [-1.0, 1.0] {
                    for sz in [-1.0, 1.0] {
                        d.push(Point::new(s * sx, s * sy, s * sz));
                    }
                }
            }
            d
        };
        let mut worst = 0.0f64;
        for dir in dirs {
            let v = self.extension_value(field, &(radius * dir))?;
            worst = worst.max(v.abs() * radius.powi(dim as i32 - 1));
        }
        Ok(worst)
    }

    fn require_mode(&self, mode: ModelMode) -> Result<()> {
        if self.model.mode() != mode {
            return Err(Error::Config(format!(
                "operation requires {mode:?} mode, model is {:?}",
                self.model.mode()
            )));
        }
        Ok(())
    }

    fn scaled_coefficient_bound(&self, eps: f64) -> f64 {
        let mesh = self.profile.mesh();
        let mut low = f64::INFINITY;
        for c in 0..mesh.num_cells() {
            for x in mesh.cell_quad_points(c) {
                low = low
                    .min(1.0 + self.profile.value_at(c, x) * self.model.d0_inv_at(&(eps * x)));
            }
        }
        low
    }

    fn solve_base_system(&self, kind: CorrectorKind, rhs: Vec<f64>) -> Result<CorrectorField> {
        if rhs.iter().all(|v| *v == 0.0) {
            return Ok(self.zero_field(kind));
        }
        let solver = self.solver.as_ref().expect("diffusion mode has a solver");
        let sol = solver.solve_checked(self.operator.matrix(), &rhs)?;
        self.accept(kind, sol)
    }

    fn accept(&self, kind: CorrectorKind, sol: DenseSolution) -> Result<CorrectorField> {
        if !(sol.residual <= SOLVE_TOL) {
            return Err(Error::LinearSolve(format!(
                "corrector solve residual {:.3e} exceeds tolerance {SOLVE_TOL:.0e}",
                sol.residual
            )));
        }
        Ok(CorrectorField::new(
            kind,
            Arc::clone(self.profile.mesh()),
            sol.x,
            sol.residual,
        ))
    }

    fn zero_field(&self, kind: CorrectorKind) -> CorrectorField {
        CorrectorField::new(
            kind,
            Arc::clone(self.profile.mesh()),
            vec![0.0; self.profile.mesh().num_vertices()],
            0.0,
        )
    }

    /// Collocates Σ_c ∫_c f(c,x)·∇Γ(x−y_p) dx at every mesh vertex y_p.
    fn collocate_grad_kernel<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(usize, &Point) -> Point + Sync,
    {
        let mesh = self.profile.mesh();
        (0..mesh.num_vertices())
            .into_par_iter()
            .map(|p| self.grad_kernel_value_at(&f, mesh.vertex(p)))
            .collect()
    }

    fn grad_kernel_value_at<F>(&self, f: &F, y: &Point) -> f64
    where
        F: Fn(usize, &Point) -> Point,
    {
        let mesh = self.profile.mesh();
        (0..mesh.num_cells())
            .map(|c| self.eval.cell_vector_grad_gamma(mesh, c, y, |x| f(c, x)))
            .sum()
    }

    /// Collocates Σ_c ∫_c w(c,x) Γ(x−y_p) dx at every mesh vertex y_p.
    fn collocate_scalar_kernel<F>(&self, w: F) -> Vec<f64>
    where
        F: Fn(usize, &Point) -> f64 + Sync,
    {
        let mesh = self.profile.mesh();
        (0..mesh.num_vertices())
            .into_par_iter()
            .map(|p| {
                let y = mesh.vertex(p);
                (0..mesh.num_cells())
                    .map(|c| self.eval.cell_weighted_gamma(mesh, c, y, |x| w(c, x)))
                    .sum()
            })
            .collect()
    }

    /// Scalar and vector source densities whose potentials reproduce the
    /// field through φ = rhs − Tφ, used by the extension evaluators.
    #[allow(clippy::type_complexity)]
    fn extension_sources<'a>(
        &'a self,
        field: &'a CorrectorField,
    ) -> Result<(
        Option<Box<dyn Fn(usize, &Point) -> f64 + 'a>>,
        Option<Box<dyn Fn(usize, &Point) -> Point + 'a>>,
    )> {
        let profile = &self.profile;
        match field.kind().clone() {
            CorrectorKind::PhiJkl { j, k, level } => {
                let d0_inv = self.model.d0_inv();
                let mut terms = Vec::new();
                if level >= 1 {
                    for (m, t) in self.model.taylor_indices() {
                        if m.order() <= level {
                            let low = self.solve_corrector_hierarchy(&j, &k, level - m.order())?;
                            let coeff = factorial(level) * t / factorial(level - m.order());
                            terms.push((coeff, m.clone(), low));
                        }
                    }
                }
                let vector = move |c: usize, x: &Point| {
                    let mut s = d0_inv * field.cell_gradient(c);
                    if level == 0 {
                        s += d0_inv * k.eval(x) * j.grad(x);
                    }
                    for (coeff, m, low) in &terms {
                        s += *coeff * m.eval(x) * low.cell_gradient(c);
                    }
                    -profile.value_at(c, x) * s
                };
                Ok((None, Some(Box::new(vector))))
            }
            CorrectorKind::PsiEps { j, eps } => {
                let model = &self.model;
                let vector = move |c: usize, x: &Point| {
                    let s = j.grad(x) + field.cell_gradient(c);
                    -profile.value_at(c, x) * model.d0_inv_at(&(eps * x)) * s
                };
                Ok((None, Some(Box::new(vector))))
            }
            CorrectorKind::PhiMod { j } => {
                let d0_inv = self.model.d0_inv();
                let scalar = move |_c: usize, x: &Point| {
                    d0_inv
                        * profile
                            .gradient_at(x)
                            .expect("gradient-contrast fields come from analytic profiles")
                            .dot(&j.grad(x))
                };
                let vector = move |c: usize, x: &Point| {
                    -d0_inv * profile.value_at(c, x) * field.cell_gradient(c)
                };
                Ok((Some(Box::new(scalar)), Some(Box::new(vector))))
            }
            CorrectorKind::PhiEta { j, eta, eps } => {
                let scale = if eta == 0.0 { 1.0 } else { eps.powf(eta) };
                let scalar = move |c: usize, x: &Point| {
                    -profile.value_at(c, x) * (j.eval(x) + scale * field.value_at(c, x))
                };
                Ok((Some(Box::new(scalar)), None))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lippmann::profile::{ProfileFn, Regularity};
    use crate::meshgeom::unit_disk_mesh;
    use approx::assert_relative_eq;

    fn bump_profile(mesh_rings: usize, amplitude: f64) -> InclusionProfile {
        let mesh = Arc::new(unit_disk_mesh(mesh_rings).unwrap());
        InclusionProfile::analytic(
            mesh,
            ProfileFn::RadialBump {
                amplitude,
                radius: 0.85,
            },
            Regularity::SmoothCompact,
        )
    }

    fn e1() -> MultiIndex {
        MultiIndex::unit(2, 0)
    }

    fn zero2() -> MultiIndex {
        MultiIndex::zero(2)
    }

    #[test]
    fn zero_contrast_yields_zero_corrector() {
        let mesh = Arc::new(unit_disk_mesh(3).unwrap());
        let profile = InclusionProfile::analytic(
            mesh,
            ProfileFn::Constant(0.0),
            Regularity::SmoothCompact,
        );
        let model = BackgroundModel::constant_diffusion(2, 1.0).unwrap();
        let ws = CorrectorWorkspace::new(profile, model).unwrap();
        let phi = ws.solve_corrector_base(&e1(), &zero2()).unwrap();
        assert_eq!(phi.nodal_linf(), 0.0);
        assert_eq!(phi.residual(), 0.0);
    }

    #[test]
    fn hierarchy_validates_inputs_and_caches() {
        let ws = CorrectorWorkspace::new(
            bump_profile(4, 0.6),
            BackgroundModel::constant_diffusion(2, 1.0).unwrap(),
        )
        .unwrap();
        assert!(ws.solve_corrector_hierarchy(&e1(), &zero2(), 3).is_err());
        assert!(ws.solve_corrector_base(&zero2(), &zero2()).is_err());
        let a = ws.solve_corrector_base(&e1(), &zero2()).unwrap();
        let b = ws.solve_corrector_base(&e1(), &zero2()).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn constant_background_kills_higher_levels() {
        let ws = CorrectorWorkspace::new(
            bump_profile(4, 0.6),
            BackgroundModel::constant_diffusion(2, 2.0).unwrap(),
        )
        .unwrap();
        for level in [1, 2] {
            let f = ws
                .solve_corrector_hierarchy(&e1(), &zero2(), level)
                .unwrap();
            assert_eq!(f.nodal_linf(), 0.0);
        }
    }

    #[test]
    fn psi_matches_base_corrector_for_constant_background() {
        let ws = CorrectorWorkspace::new(
            bump_profile(4, 0.6),
            BackgroundModel::constant_diffusion(2, 1.5).unwrap(),
        )
        .unwrap();
        let base = ws.solve_corrector_base(&e1(), &zero2()).unwrap();
        let psi = ws.solve_psi_eps(&e1(), 0.2).unwrap();
        let scale = base.nodal_linf();
        for (a, b) in psi.nodal().iter().zip(base.nodal()) {
            assert_relative_eq!(a, b, epsilon = 1e-12 * scale);
        }
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let ws = CorrectorWorkspace::new(
            bump_profile(3, 0.5),
            BackgroundModel::helmholtz(2, 1.0, 2.0).unwrap(),
        )
        .unwrap();
        assert!(ws.solve_corrector_base(&e1(), &zero2()).is_err());
        assert!(ws.solve_psi_eps(&e1(), 0.1).is_err());
        let ws2 = CorrectorWorkspace::new(
            bump_profile(3, 0.5),
            BackgroundModel::constant_diffusion(2, 1.0).unwrap(),
        )
        .unwrap();
        assert!(ws2.solve_helmholtz_corrector(&zero2(), 2.0, 0.1).is_err());
        assert!(ws2.check_h2().is_err());
    }

    #[test]
    fn helmholtz_zero_scale_returns_negated_kernel_moment() {
        let ws = CorrectorWorkspace::new(
            bump_profile(4, 1.0),
            BackgroundModel::helmholtz(2, 1.0, 2.0).unwrap(),
        )
        .unwrap();
        let phi = ws.solve_helmholtz_corrector(&zero2(), 2.0, 0.0).unwrap();
        let ones = vec![1.0; ws.mesh().num_vertices()];
        let t_one = ws.operator().apply_t(&ones);
        let scale = phi.nodal_linf();
        for (a, b) in phi.nodal().iter().zip(&t_one) {
            assert_relative_eq!(*a, -b, epsilon = 1e-10 * scale);
        }
    }

    #[test]
    fn spectral_margin_is_one_for_zero_potential() {
        let mesh = Arc::new(unit_disk_mesh(3).unwrap());
        let profile = InclusionProfile::analytic(
            mesh,
            ProfileFn::Constant(0.0),
            Regularity::SmoothCompact,
        );
        let ws = CorrectorWorkspace::new(
            profile,
            BackgroundModel::helmholtz(2, 1.0, 2.0).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(ws.check_h2().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_modified_requires_constant_background_and_analytic_profile() {
        let mesh = Arc::new(unit_disk_mesh(3).unwrap());
        let cellwise =
            InclusionProfile::cellwise(Arc::clone(&mesh), vec![0.5; mesh.num_cells()]).unwrap();
        let ws = CorrectorWorkspace::new(
            cellwise,
            BackgroundModel::constant_diffusion(2, 1.0).unwrap(),
        )
        .unwrap();
        assert!(ws.solve_phi_modified(&e1()).is_err());

        let mut taylor = BTreeMap::new();
        taylor.insert(MultiIndex::unit(2, 0), 0.1);
        let varying = BackgroundModel::with_inverse_taylor(2, 1.0, taylor).unwrap();
        let ws2 = CorrectorWorkspace::new(bump_profile(3, 0.5), varying).unwrap();
        assert!(ws2.solve_phi_modified(&e1()).is_err());
    }

    /// Max over mirror vertex pairs of |φ(−x₁,x₂) + φ(x₁,x₂)|, relative to
    /// ‖φ‖_∞.
    fn reflection_asymmetry(rings: usize) -> f64 {
        let ws = CorrectorWorkspace::new(
            bump_profile(rings, 0.8),
            BackgroundModel::constant_diffusion(2, 1.0).unwrap(),
        )
        .unwrap();
        let phi = ws.solve_corrector_base(&e1(), &zero2()).unwrap();
        let mesh = ws.mesh();
        let scale = phi.nodal_linf();
        assert!(scale > 1e-3, "corrector unexpectedly small: {scale:.3e}");
        let mut worst = 0.0f64;
        for v in 0..mesh.num_vertices() {
            let p = mesh.vertex(v);
            let mirrored = Point::new(-p.x, p.y, 0.0);
            let w = (0..mesh.num_vertices())
                .min_by(|a, b| {
                    let da = (mesh.vertex(*a) - mirrored).norm();
                    let db = (mesh.vertex(*b) - mirrored).norm();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            assert!(
                (mesh.vertex(w) - mirrored).norm() < 1e-9,
                "mesh not mirror-symmetric"
            );
            worst = worst.max((phi.value(w) + phi.value(v)).abs());
        }
        worst / scale
    }

    #[test]
    fn corrector_is_odd_under_reflection_with_symmetric_data() {
        // The vertex set is mirror-symmetric in x₁ but the triangulation
        // diagonals are not, so oddness holds at discretization accuracy
        // and must improve under refinement.
        let coarse = reflection_asymmetry(6);
        let fine = reflection_asymmetry(12);
        assert!(coarse < 2e-2, "coarse asymmetry {coarse:.3e} too large");
        assert!(
            fine < coarse / 1.5,
            "asymmetry did not shrink under refinement: {coarse:.3e} -> {fine:.3e}"
        );
    }
}
