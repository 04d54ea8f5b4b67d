//! Piecewise-linear finite element assembly: degrees of freedom, material
//! laws, stiffness action, loads, boundary mass matrices and contact traces.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{RegionTag, TriangulationLevel};

/// Degrees of freedom of a scalar (1 component) or displacement (2
/// components) field; Dirichlet vertices are eliminated.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub dimension: usize,
    /// Global indices `vertex * dimension + component` that are not fixed.
    pub free_dofs: Vec<usize>,
    /// Global index -> position in the free vector.
    pub node_to_dof: Vec<Option<usize>>,
}

impl DofMap {
    pub fn new(mesh: &TriangulationLevel, dimension: usize) -> Result<DofMap> {
        if !(dimension == 1 || dimension == 2) {
            return Err(invalid("dimension", "must be 1 or 2"));
        }
        if mesh.dim == 1 && dimension != 1 {
            return Err(invalid("dimension", "1D meshes carry scalar fields only"));
        }
        if mesh.region_measure(RegionTag::Dirichlet) <= 0.0 {
            return Err(Error::EmptyRegion(RegionTag::Dirichlet));
        }
        let mut fixed = vec![false; mesh.vertex_count()];
        for e in mesh.edges_with_tag(RegionTag::Dirichlet) {
            fixed[e.vertices[0]] = true;
            fixed[e.vertices[1]] = true;
        }
        let mut node_to_dof = vec![None; mesh.vertex_count() * dimension];
        let mut free_dofs = Vec::new();
        for (v, &is_fixed) in fixed.iter().enumerate() {
            if is_fixed {
                continue;
            }
            for c in 0..dimension {
                node_to_dof[v * dimension + c] = Some(free_dofs.len());
                free_dofs.push(v * dimension + c);
            }
        }
        Ok(DofMap { dimension, free_dofs, node_to_dof })
    }

    pub fn len(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free_dofs.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.node_to_dof.len() / self.dimension
    }

    pub fn dof(&self, vertex: usize, component: usize) -> Option<usize> {
        self.node_to_dof[vertex * self.dimension + component]
    }

    /// Free part of a full-length nodal vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&g| full[g]).collect()
    }

    /// Full-length nodal vector with zeros on fixed dofs.
    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.node_to_dof.len()];
        for (k, &g) in self.free_dofs.iter().enumerate() {
            full[g] = free[k];
        }
        full
    }

    /// Nodal value at `vertex` (second entry zero for scalar fields).
    pub fn vertex_value(&self, u: &[f64], vertex: usize) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate().take(self.dimension) {
            if let Some(k) = self.dof(vertex, c) {
                *o = u[k];
            }
        }
        out
    }

    pub fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), found: u.len() });
        }
        Ok(())
    }
}

/// Constitutive law `sigma = F(eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialLaw {
    LinearIsotropic { lame_lambda: f64, lame_mu: f64 },
    /// `F(eps) = 2 (mu0 + mu1 / (1 + saturation |eps|)) eps`.
    NonlinearHencky { mu0: f64, mu1: f64, saturation: f64 },
}

impl MaterialLaw {
    pub fn linear(lame_lambda: f64, lame_mu: f64) -> Result<Self> {
        if !(lame_mu > 0.0 && lame_mu.is_finite()) {
            return Err(invalid("material.mu", "must be positive and finite"));
        }
        if !(lame_lambda >= 0.0 && lame_lambda.is_finite()) {
            return Err(invalid("material.lambda", "must be nonnegative and finite"));
        }
        Ok(MaterialLaw::LinearIsotropic { lame_lambda, lame_mu })
    }

    pub fn hencky(mu0: f64, mu1: f64, saturation: f64) -> Result<Self> {
        if !(mu0 > 0.0 && mu0.is_finite()) {
            return Err(invalid("material.mu0", "must be positive and finite"));
        }
        if !(mu1 >= 0.0 && saturation >= 0.0 && mu1.is_finite() && saturation.is_finite()) {
            return Err(invalid("material.mu1", "mu1 and saturation must be nonnegative"));
        }
        if mu1 * saturation > mu0 {
            return Err(invalid("material.mu1", "requires mu1 * saturation <= mu0"));
        }
        Ok(MaterialLaw::NonlinearHencky { mu0, mu1, saturation })
    }

    /// The `(eps(u), eps(v))` inner product used as the energy norm.
    pub fn energy_norm_law() -> Self {
        MaterialLaw::LinearIsotropic { lame_lambda: 0.0, lame_mu: 0.5 }
    }

    /// Strong monotonicity constant `m_F`.
    pub fn monotonicity_constant(&self) -> f64 {
        match *self {
            MaterialLaw::LinearIsotropic { lame_mu, .. } => 2.0 * lame_mu,
            MaterialLaw::NonlinearHencky { mu0, .. } => 2.0 * mu0,
        }
    }

    /// Lipschitz constant `L_F`.
    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            MaterialLaw::LinearIsotropic { lame_lambda, lame_mu } => 2.0 * lame_mu + 2.0 * lame_lambda,
            MaterialLaw::NonlinearHencky { mu0, mu1, .. } => 2.0 * (mu0 + mu1),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, MaterialLaw::LinearIsotropic { .. })
    }

    /// Stress, tangent (row-major `n x n`) and energy density at a strain.
    ///
    /// `weights` define the strain inner product (`[1, 1, 2]` for the
    /// symmetric tensor stored as `[e11, e22, e12]`, all ones for gradients).
    pub fn evaluate(&self, strain: &[f64], weights: &[f64], tensor: bool) -> (Vec<f64>, Vec<f64>, f64) {
        let n = strain.len();
        let norm2: f64 = strain.iter().zip(weights).map(|(e, w)| w * e * e).sum();
        let mut stress = vec![0.0; n];
        let mut tangent = vec![0.0; n * n];
        let energy;
        match *self {
            MaterialLaw::LinearIsotropic { lame_lambda, lame_mu } => {
                for i in 0..n {
                    stress[i] = 2.0 * lame_mu * strain[i];
                    tangent[i * n + i] = 2.0 * lame_mu;
                }
                if tensor {
                    let tr = strain[0] + strain[1];
                    for i in 0..2 {
                        stress[i] += lame_lambda * tr;
                        tangent[i * n] += lame_lambda;
                        tangent[i * n + 1] += lame_lambda;
                    }
                    energy = lame_mu * norm2 + 0.5 * lame_lambda * tr * tr;
                } else {
                    energy = lame_mu * norm2;
                }
            }
            MaterialLaw::NonlinearHencky { mu0, mu1, saturation: s } => {
                let t = norm2.sqrt();
                let psi = mu0 + mu1 / (1.0 + s * t);
                let dpsi = -mu1 * s / (1.0 + s * t).powi(2);
                for i in 0..n {
                    stress[i] = 2.0 * psi * strain[i];
                    tangent[i * n + i] = 2.0 * psi;
                }
                if t > 0.0 {
                    for i in 0..n {
                        for j in 0..n {
                            tangent[i * n + j] += 2.0 * dpsi / t * strain[i] * weights[j] * strain[j];
                        }
                    }
                }
                energy = if s > 0.0 {
                    mu0 * t * t + 2.0 * mu1 * (t / s - (s * t).ln_1p() / (s * s))
                } else {
                    (mu0 + mu1) * t * t
                };
            }
        }
        (stress, tangent, energy)
    }
}

#[derive(Debug, Clone)]
struct ElementKinematics {
    measure: f64,
    /// Free-dof index of each local dof (None when fixed).
    dofs: Vec<Option<usize>>,
    /// Strain-displacement matrix, row-major `ncomp x nloc`.
    b: Vec<f64>,
}

/// The operator `u -> A u` with `<A u, v> = int F(eps(u)) . eps(v) dx`.
#[derive(Debug, Clone)]
pub struct StiffnessOperator {
    pub law: MaterialLaw,
    n: usize,
    weights: Vec<f64>,
    tensor: bool,
    elements: Vec<ElementKinematics>,
    matrix: Option<CsrMatrix>,
}

pub fn assemble_stiffness_action(
    mesh: &TriangulationLevel,
    law: MaterialLaw,
    dofmap: &DofMap,
) -> Result<StiffnessOperator> {
    let d = dofmap.dimension;
    let v = &mesh.vertices;
    let mut elements = Vec::with_capacity(mesh.element_count());
    let (weights, tensor) = match (mesh.dim, d) {
        (1, _) => (vec![1.0], false),
        (2, 1) => (vec![1.0, 1.0], false),
        _ => (vec![1.0, 1.0, 2.0], true),
    };
    if mesh.dim == 1 {
        for &[a, b] in &mesh.segments {
            let len = v[b][0] - v[a][0];
            if len <= 0.0 {
                return Err(Error::Assembly(format!("segment [{a}, {b}] has zero length")));
            }
            elements.push(ElementKinematics {
                measure: len,
                dofs: vec![dofmap.dof(a, 0), dofmap.dof(b, 0)],
                b: vec![-1.0 / len, 1.0 / len],
            });
        }
    } else {
        for &tri in &mesh.triangles {
            let [p0, p1, p2] = [v[tri[0]], v[tri[1]], v[tri[2]]];
            let area = crate::mesh::signed_area(p0, p1, p2);
            if area.abs() < 1e-300 || !area.is_finite() {
                return Err(Error::Assembly(format!("triangle {tri:?} has zero area")));
            }
            let pts = [p0, p1, p2];
            let mut gb = [0.0; 3];
            let mut gc = [0.0; 3];
            for i in 0..3 {
                let (pj, pk) = (pts[(i + 1) % 3], pts[(i + 2) % 3]);
                gb[i] = (pj[1] - pk[1]) / (2.0 * area);
                gc[i] = (pk[0] - pj[0]) / (2.0 * area);
            }
            let (dofs, b) = if d == 1 {
                let dofs = tri.iter().map(|&vi| dofmap.dof(vi, 0)).collect();
                let mut b = vec![0.0; 6];
                b[..3].copy_from_slice(&gb);
                b[3..].copy_from_slice(&gc);
                (dofs, b)
            } else {
                let dofs = tri.iter().flat_map(|&vi| [dofmap.dof(vi, 0), dofmap.dof(vi, 1)]).collect();
                let mut b = vec![0.0; 18];
                for i in 0..3 {
                    b[2 * i] = gb[i];
                    b[6 + 2 * i + 1] = gc[i];
                    b[12 + 2 * i] = 0.5 * gc[i];
                    b[12 + 2 * i + 1] = 0.5 * gb[i];
                }
                (dofs, b)
            };
            elements.push(ElementKinematics { measure: area, dofs, b });
        }
    }
    let mut op = StiffnessOperator { law, n: dofmap.len(), weights, tensor, elements, matrix: None };
    if law.is_linear() {
        op.matrix = Some(op.tangent(&vec![0.0; op.n]));
    }
    Ok(op)
}

impl StiffnessOperator {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Explicit sparse matrix, available for linear laws.
    pub fn matrix(&self) -> Option<&CsrMatrix> {
        self.matrix.as_ref()
    }

    fn strain(&self, el: &ElementKinematics, u: &[f64]) -> Vec<f64> {
        let nloc = el.dofs.len();
        let ncomp = self.weights.len();
        (0..ncomp)
            .map(|r| {
                el.dofs
                    .iter()
                    .enumerate()
                    .filter_map(|(k, d)| d.map(|d| el.b[r * nloc + k] * u[d]))
                    .sum()
            })
            .collect()
    }

    /// Dual representation of `A u`.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        let ncomp = self.weights.len();
        for el in &self.elements {
            let eps = self.strain(el, u);
            let (sigma, _, _) = self.law.evaluate(&eps, &self.weights, self.tensor);
            let nloc = el.dofs.len();
            for (k, d) in el.dofs.iter().enumerate() {
                if let Some(d) = d {
                    let val: f64 = (0..ncomp).map(|c| el.b[c * nloc + k] * self.weights[c] * sigma[c]).sum();
                    r[*d] += el.measure * val;
                }
            }
        }
        r
    }

    /// Consistent tangent of `A` at `u` (symmetric for both laws).
    pub fn tangent(&self, u: &[f64]) -> CsrMatrix {
        let mut t = TripletBuilder::new(self.n);
        let ncomp = self.weights.len();
        for el in &self.elements {
            let eps = self.strain(el, u);
            let (_, c, _) = self.law.evaluate(&eps, &self.weights, self.tensor);
            let nloc = el.dofs.len();
            // wc = diag(w) C B  (ncomp x nloc)
            let mut wcb = vec![0.0; ncomp * nloc];
            for i in 0..ncomp {
                for k in 0..nloc {
                    let s: f64 = (0..ncomp).map(|j| c[i * ncomp + j] * el.b[j * nloc + k]).sum();
                    wcb[i * nloc + k] = self.weights[i] * s;
                }
            }
            for (a, da) in el.dofs.iter().enumerate() {
                let Some(da) = da else { continue };
                for (b, db) in el.dofs.iter().enumerate() {
                    let Some(db) = db else { continue };
                    let s: f64 = (0..ncomp).map(|i| el.b[i * nloc + a] * wcb[i * nloc + b]).sum();
                    if s != 0.0 {
                        t.push(*da, *db, el.measure * s);
                    }
                }
            }
        }
        t.build()
    }

    /// Stored energy `int W(eps(u)) dx`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.elements
            .iter()
            .map(|el| {
                let eps = self.strain(el, u);
                el.measure * self.law.evaluate(&eps, &self.weights, self.tensor).2
            })
            .sum()
    }
}

/// Matrix of the energy inner product `int eps(u) . eps(v) dx` (or
/// `int grad u . grad v dx` for scalar fields).
pub fn energy_matrix(mesh: &TriangulationLevel, dofmap: &DofMap) -> Result<CsrMatrix> {
    let op = assemble_stiffness_action(mesh, MaterialLaw::energy_norm_law(), dofmap)?;
    Ok(op.matrix.expect("linear law has a matrix"))
}

type VectorField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Body force density `f0` and surface traction `f2` on the Neumann region.
#[derive(Clone)]
pub struct LoadSpec {
    pub body_force: VectorField,
    pub traction: VectorField,
}

impl fmt::Debug for LoadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LoadSpec")
            .field("body_force(0,0)", &(self.body_force)([0.0, 0.0]))
            .field("traction(0,0)", &(self.traction)([0.0, 0.0]))
            .finish()
    }
}

impl LoadSpec {
    pub fn new(
        body_force: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        traction: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        LoadSpec { body_force: Arc::new(body_force), traction: Arc::new(traction) }
    }

    pub fn zero() -> Self {
        Self::constant([0.0, 0.0], [0.0, 0.0])
    }

    pub fn constant(body: [f64; 2], traction: [f64; 2]) -> Self {
        Self::new(move |_| body, move |_| traction)
    }

    /// Body force `body + slope_x * x`, constant traction.
    pub fn affine_in_x(body: [f64; 2], slope_x: [f64; 2], traction: [f64; 2]) -> Self {
        Self::affine_sine_in_x(body, slope_x, [0.0, 0.0], traction)
    }

    /// Body force `body + slope_x * x + sine_x * sin(2 pi x)`, constant traction.
    pub fn affine_sine_in_x(body: [f64; 2], slope_x: [f64; 2], sine_x: [f64; 2], traction: [f64; 2]) -> Self {
        Self::new(
            move |p| {
                let s = (2.0 * std::f64::consts::PI * p[0]).sin();
                [body[0] + slope_x[0] * p[0] + sine_x[0] * s, body[1] + slope_x[1] * p[0] + sine_x[1] * s]
            },
            move |_| traction,
        )
    }
}

pub(crate) const GAUSS2: [(f64, f64); 2] = [
    (0.5 - 0.288_675_134_594_812_9, 0.5),
    (0.5 + 0.288_675_134_594_812_9, 0.5),
];

/// Load vector over all nodal dofs (Dirichlet ones included); use
/// [`DofMap::restrict`] to eliminate them.
pub fn assemble_load(mesh: &TriangulationLevel, loads: &LoadSpec, dofmap: &DofMap) -> Result<Vec<f64>> {
    let d = dofmap.dimension;
    let v = &mesh.vertices;
    let mut f = vec![0.0; mesh.vertex_count() * d];
    let check = |val: [f64; 2], what: &str| -> Result<[f64; 2]> {
        if val[..d].iter().all(|x| x.is_finite()) {
            Ok(val)
        } else {
            Err(invalid(what, "load is not finite at a quadrature point"))
        }
    };
    if mesh.dim == 1 {
        for &[a, b] in &mesh.segments {
            let len = v[b][0] - v[a][0];
            let fm = check((loads.body_force)([0.5 * (v[a][0] + v[b][0]), 0.0]), "load.body")?;
            f[a] += 0.5 * len * fm[0];
            f[b] += 0.5 * len * fm[0];
        }
    } else {
        for &tri in &mesh.triangles {
            let [p0, p1, p2] = [v[tri[0]], v[tri[1]], v[tri[2]]];
            let area = crate::mesh::signed_area(p0, p1, p2);
            let c = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
            let fm = check((loads.body_force)(c), "load.body")?;
            for &vi in &tri {
                for comp in 0..d {
                    f[vi * d + comp] += area / 3.0 * fm[comp];
                }
            }
        }
    }
    for e in mesh.edges_with_tag(RegionTag::Neumann) {
        let [a, b] = e.vertices;
        if a == b {
            let t = check((loads.traction)(v[a]), "load.traction")?;
            f[a * d] += t[0];
            continue;
        }
        let len = mesh.facet_measure(e);
        for (s, w) in GAUSS2 {
            let x = [(1.0 - s) * v[a][0] + s * v[b][0], (1.0 - s) * v[a][1] + s * v[b][1]];
            let t = check((loads.traction)(x), "load.traction")?;
            for comp in 0..d {
                f[a * d + comp] += w * len * (1.0 - s) * t[comp];
                f[b * d + comp] += w * len * s * t[comp];
            }
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEdge {
    pub vertices: [usize; 2],
    pub length: f64,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

/// Geometry of one contact region.
#[derive(Debug, Clone)]
pub struct BoundaryTraceData {
    pub region: RegionTag,
    pub contact_edges: Vec<ContactEdge>,
    /// Averaged outward unit normal per contact vertex, sorted by vertex.
    pub node_normals: Vec<(usize, [f64; 2])>,
}

fn rotate90(n: [f64; 2]) -> [f64; 2] {
    [-n[1], n[0]]
}

impl BoundaryTraceData {
    pub fn new(mesh: &TriangulationLevel, region: RegionTag) -> Result<Self> {
        let mut contact_edges = Vec::new();
        let mut acc: std::collections::BTreeMap<usize, [f64; 2]> = Default::default();
        for e in mesh.edges_with_tag(region) {
            let normal = mesh.facet_normal(e);
            contact_edges.push(ContactEdge {
                vertices: e.vertices,
                length: mesh.facet_measure(e),
                normal,
                tangent: rotate90(normal),
            });
            for &vi in &e.vertices {
                let n = acc.entry(vi).or_insert([0.0, 0.0]);
                if e.vertices[0] == e.vertices[1] && n != &[0.0, 0.0] {
                    continue;
                }
                n[0] += normal[0];
                n[1] += normal[1];
            }
        }
        if contact_edges.is_empty() {
            return Err(Error::EmptyRegion(region));
        }
        let node_normals = acc
            .into_iter()
            .map(|(vi, n)| {
                let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
                (vi, [n[0] / len, n[1] / len])
            })
            .collect();
        Ok(BoundaryTraceData { region, contact_edges, node_normals })
    }

    pub fn measure(&self) -> f64 {
        self.contact_edges.iter().map(|e| e.length).sum()
    }
}

/// Which part of the boundary trace a mass matrix couples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraceMode {
    Normal,
    Tangential,
    FullVector,
    Scalar,
}

impl TraceMode {
    pub fn name(self) -> &'static str {
        match self {
            TraceMode::Normal => "normal_component",
            TraceMode::Tangential => "tangential_component",
            TraceMode::FullVector => "full_vector",
            TraceMode::Scalar => "scalar",
        }
    }
}

fn projector(mode: TraceMode, e: &ContactEdge) -> [[f64; 2]; 2] {
    let outer = |a: [f64; 2]| [[a[0] * a[0], a[0] * a[1]], [a[1] * a[0], a[1] * a[1]]];
    match mode {
        TraceMode::Normal => outer(e.normal),
        TraceMode::Tangential => outer(e.tangent),
        TraceMode::FullVector | TraceMode::Scalar => [[1.0, 0.0], [0.0, 1.0]],
    }
}

/// Exact boundary mass matrix `int_region (P u) . v ds` on free dofs.
pub fn assemble_boundary_mass(
    mesh: &TriangulationLevel,
    dofmap: &DofMap,
    region: RegionTag,
    mode: TraceMode,
) -> Result<CsrMatrix> {
    let traces = BoundaryTraceData::new(mesh, region)?;
    let d = dofmap.dimension;
    if (d == 1) != (mode == TraceMode::Scalar) && !(d == 1 && mode == TraceMode::Normal) {
        return Err(invalid("mode", format!("{mode:?} does not apply to a {d}-component field")));
    }
    let mut t = TripletBuilder::new(dofmap.len());
    for e in &traces.contact_edges {
        let [a, b] = e.vertices;
        let local: Vec<(usize, usize, f64)> = if a == b {
            vec![(a, a, 1.0)]
        } else {
            let m = e.length / 6.0;
            vec![(a, a, 2.0 * m), (a, b, m), (b, a, m), (b, b, 2.0 * m)]
        };
        let p = if d == 1 { [[1.0, 0.0], [0.0, 0.0]] } else { projector(mode, e) };
        for (va, vb, m) in local {
            for ci in 0..d {
                for cj in 0..d {
                    let (Some(i), Some(j)) = (dofmap.dof(va, ci), dofmap.dof(vb, cj)) else { continue };
                    let val = m * p[ci][cj];
                    if val != 0.0 {
                        t.push(i, j, val);
                    }
                }
            }
        }
    }
    Ok(t.build())
}

/// Normal and tangential trace at a contact vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeTrace {
    pub vertex: usize,
    pub normal: f64,
    pub tangential: [f64; 2],
}

/// `u_nu = u . nu`, `u_tau = u - u_nu nu` at each contact vertex, using the
/// averaged vertex normal. Scalar fields return `u_nu = u`.
pub fn trace_values(u: &[f64], traces: &BoundaryTraceData, dofmap: &DofMap) -> Vec<NodeTrace> {
    traces
        .node_normals
        .iter()
        .map(|&(vertex, nu)| {
            let val = dofmap.vertex_value(u, vertex);
            if dofmap.dimension == 1 {
                NodeTrace { vertex, normal: val[0], tangential: [0.0, 0.0] }
            } else {
                let un = val[0] * nu[0] + val[1] * nu[1];
                NodeTrace { vertex, normal: un, tangential: [val[0] - un * nu[0], val[1] - un * nu[1]] }
            }
        })
        .collect()
}

/// One Gauss point on a contact edge.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub weight: f64,
    pub x: [f64; 2],
    pub vertices: [usize; 2],
    pub shape: [f64; 2],
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

/// Normal and scalar tangential trace value at a quadrature point
/// (`||u_tau|| = |tangential|` in 2D).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceSample {
    pub normal: f64,
    pub tangential: f64,
}

/// Two-point Gauss quadrature on a contact region (exact for products of
/// linear traces); a single unit-weight point for 1D endpoints.
#[derive(Debug, Clone)]
pub struct TraceQuadrature {
    pub region: RegionTag,
    pub points: Vec<TracePoint>,
    dimension: usize,
}

impl TraceQuadrature {
    pub fn new(mesh: &TriangulationLevel, dofmap: &DofMap, region: RegionTag) -> Result<Self> {
        let traces = BoundaryTraceData::new(mesh, region)?;
        let v = &mesh.vertices;
        let mut points = Vec::new();
        for e in &traces.contact_edges {
            let [a, b] = e.vertices;
            if a == b {
                points.push(TracePoint {
                    weight: 1.0,
                    x: v[a],
                    vertices: [a, a],
                    shape: [1.0, 0.0],
                    normal: e.normal,
                    tangent: e.tangent,
                });
                continue;
            }
            for (s, w) in GAUSS2 {
                points.push(TracePoint {
                    weight: w * e.length,
                    x: [(1.0 - s) * v[a][0] + s * v[b][0], (1.0 - s) * v[a][1] + s * v[b][1]],
                    vertices: [a, b],
                    shape: [1.0 - s, s],
                    normal: e.normal,
                    tangent: e.tangent,
                });
            }
        }
        Ok(TraceQuadrature { region, points, dimension: dofmap.dimension })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Direction of the trace component on the displacement dofs.
    fn direction(&self, p: &TracePoint, tangential: bool) -> [f64; 2] {
        if self.dimension == 1 {
            if tangential {
                [0.0, 0.0]
            } else {
                [1.0, 0.0]
            }
        } else if tangential {
            p.tangent
        } else {
            p.normal
        }
    }

    pub fn samples(&self, dofmap: &DofMap, u: &[f64]) -> Vec<TraceSample> {
        self.points
            .iter()
            .map(|p| {
                let ua = dofmap.vertex_value(u, p.vertices[0]);
                let ub = dofmap.vertex_value(u, p.vertices[1]);
                let val = [
                    p.shape[0] * ua[0] + p.shape[1] * ub[0],
                    p.shape[0] * ua[1] + p.shape[1] * ub[1],
                ];
                let n = self.direction(p, false);
                let t = self.direction(p, true);
                TraceSample { normal: val[0] * n[0] + val[1] * n[1], tangential: val[0] * t[0] + val[1] * t[1] }
            })
            .collect()
    }

    /// Adds `coef * (trace component test function)` at point `q` to `r`.
    pub fn scatter(&self, dofmap: &DofMap, r: &mut [f64], q: usize, tangential: bool, coef: f64) {
        let p = &self.points[q];
        let dir = self.direction(p, tangential);
        let nodes = if p.vertices[0] == p.vertices[1] { 1 } else { 2 };
        for k in 0..nodes {
            for c in 0..self.dimension {
                if let Some(i) = dofmap.dof(p.vertices[k], c) {
                    r[i] += coef * p.shape[k] * dir[c];
                }
            }
        }
    }

    /// Adds `coef * (trace component) x (trace component)` at point `q`.
    pub fn scatter_outer(&self, dofmap: &DofMap, t: &mut TripletBuilder, q: usize, tangential: bool, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let p = &self.points[q];
        let dir = self.direction(p, tangential);
        let nodes = if p.vertices[0] == p.vertices[1] { 1 } else { 2 };
        for ka in 0..nodes {
            for ca in 0..self.dimension {
                let Some(i) = dofmap.dof(p.vertices[ka], ca) else { continue };
                for kb in 0..nodes {
                    for cb in 0..self.dimension {
                        let Some(j) = dofmap.dof(p.vertices[kb], cb) else { continue };
                        let val = coef * p.shape[ka] * dir[ca] * p.shape[kb] * dir[cb];
                        if val != 0.0 {
                            t.push(i, j, val);
                        }
                    }
                }
            }
        }
    }
}
