//! Manifold ideals in graph normal form and formal submanifolds.
//!
//! A manifold ideal is stored through its canonical graph presentation:
//! pivot variables `x_p` solved as series `phi_p` in the remaining (free)
//! variables, with generators `x_p - phi_p(free)`. Pivots are chosen
//! greedily in the fixed global variable order, so two presentations of the
//! same ideal normalize identically and equality is structural.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::context::VariableContext;
use crate::error::{CoreError, Result};
use crate::linalg::Matrix;
use crate::scalar::GaussianRational;
use crate::series::{graph_solve, Order, TruncatedSeries};
use crate::vecfield::FormalVectorField;

/// Ground field of the ideal: `Real` ideals are sigma-invariant in their
/// complexified representation, `Complex` ideals carry no reality structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Real,
    Complex,
}

/// Tri-state verdict for jet-level ideal membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    /// Membership holds for every term visible at the certified order; when
    /// the order is `Exact` this is a definitive yes.
    In { certified: Order },
    /// A visible term witnesses non-membership (definitive).
    NotIn,
    /// The reliable order is too small to see anything.
    Undecided,
}

impl Membership {
    pub fn holds(&self) -> bool {
        matches!(self, Membership::In { .. })
    }
}

/// A formal submanifold, identified with its manifold ideal in graph form.
#[derive(Clone, PartialEq, Eq)]
pub struct FormalSubmanifold {
    ctx: Arc<VariableContext>,
    field: FieldKind,
    /// Pivot variable indices, ascending.
    pivots: Vec<usize>,
    /// `graphs[i]` is `phi` for `pivots[i]`: a series in the free variables.
    graphs: Vec<TruncatedSeries>,
}

impl core::fmt::Debug for FormalSubmanifold {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Submanifold(dim {}, codim {};", self.dim(), self.codim())?;
        for (i, &p) in self.pivots.iter().enumerate() {
            write!(f, " {} = {};", self.ctx.name(p), self.graphs[i].render())?;
        }
        write!(f, ")")
    }
}

impl FormalSubmanifold {
    /// Normalize raw generators into graph form. The generators must vanish
    /// at 0 and have linearly independent differentials there; pivots are the
    /// first admissible variables in the global order. For `Real` ideals the
    /// sigma-invariance of the ideal is verified at the working order.
    pub fn from_generators(
        ctx: &Arc<VariableContext>,
        raw: &[TruncatedSeries],
        field: FieldKind,
        target: u32,
    ) -> Result<Self> {
        for g in raw {
            if **g.context() != **ctx {
                return Err(CoreError::MismatchedContexts);
            }
            if !g.constant_term().is_zero() {
                return Err(CoreError::NotAManifoldIdeal(String::from(
                    "a generator does not vanish at 0",
                )));
            }
        }
        // Row-reduce the differentials, tracking the generator combinations,
        // to find independent rows and deterministic pivot columns.
        let m = ctx.len();
        let k = raw.len();
        let mut aug = Matrix::zeros(k, m + k);
        for (i, g) in raw.iter().enumerate() {
            for v in 0..m {
                aug.set(i, v, g.linear_coeff(v));
            }
            aug.set(i, m + i, GaussianRational::one());
        }
        let pivcols = aug.rref();
        // Rows whose pivot lies in the variable block have independent
        // differentials; rows pivoting in the tracking block are generator
        // combinations with vanishing differential ("extra" elements that
        // must already lie in the ideal for it to be a manifold ideal).
        let mut pivot_vars = Vec::new();
        let mut combined = Vec::new();
        let mut extra = Vec::new();
        for (i, &c) in pivcols.iter().enumerate() {
            let mut g = TruncatedSeries::zero(ctx, Order::Exact);
            for j in 0..k {
                g = g.add(&raw[j].scale(aug.get(i, m + j)))?;
            }
            if c < m {
                pivot_vars.push(c);
                combined.push(g);
            } else if !g.is_zero() {
                extra.push(g);
            }
        }

        let graphs = graph_solve(&combined, &pivot_vars, target)?;
        let sub = Self { ctx: ctx.clone(), field, pivots: pivot_vars, graphs };
        for e in &extra {
            if matches!(sub.contains(e, 1), Membership::NotIn) {
                return Err(CoreError::NotAManifoldIdeal(String::from(
                    "a generator with vanishing differential is not in the graph ideal",
                )));
            }
        }
        let mut sub = sub;
        // Sort pivots ascending, keeping graphs aligned.
        let mut idx: Vec<usize> = (0..sub.pivots.len()).collect();
        idx.sort_by_key(|&i| sub.pivots[i]);
        sub.pivots = idx.iter().map(|&i| sub.pivots[i]).collect();
        sub.graphs = idx.iter().map(|&i| sub.graphs[i].clone()).collect();

        if field == FieldKind::Real {
            sub.verify_sigma_invariant()?;
        }
        Ok(sub)
    }

    fn verify_sigma_invariant(&self) -> Result<()> {
        for g in self.generators() {
            if !self.contains(&g.conjugate(), 1).holds() {
                return Err(CoreError::NotReal(String::from("manifold ideal")));
            }
        }
        Ok(())
    }

    /// The whole ambient space (zero ideal).
    pub fn full_space(ctx: &Arc<VariableContext>, field: FieldKind) -> Self {
        Self { ctx: ctx.clone(), field, pivots: Vec::new(), graphs: Vec::new() }
    }

    /// The origin: every variable is a pivot with zero graph.
    pub fn origin(ctx: &Arc<VariableContext>, field: FieldKind) -> Self {
        Self {
            ctx: ctx.clone(),
            field,
            pivots: (0..ctx.len()).collect(),
            graphs: (0..ctx.len())
                .map(|_| TruncatedSeries::zero(ctx, Order::Exact))
                .collect(),
        }
    }

    pub fn context(&self) -> &Arc<VariableContext> {
        &self.ctx
    }

    pub fn field(&self) -> FieldKind {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.ctx.len() - self.pivots.len()
    }

    pub fn codim(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn graph(&self, i: usize) -> &TruncatedSeries {
        &self.graphs[i]
    }

    /// Free variables (ambient indices), ascending.
    pub fn free_vars(&self) -> Vec<usize> {
        (0..self.ctx.len()).filter(|v| !self.pivots.contains(v)).collect()
    }

    /// Canonical generators `x_p - phi_p(free)`.
    pub fn generators(&self) -> Vec<TruncatedSeries> {
        self.pivots
            .iter()
            .zip(&self.graphs)
            .map(|(&p, phi)| {
                TruncatedSeries::variable(&self.ctx, p)
                    .sub(phi)
                    .expect("same context")
            })
            .collect()
    }

    /// Reliable order of the graph data.
    pub fn order(&self) -> Order {
        self.graphs.iter().map(|g| g.order()).fold(Order::Exact, Order::min_with)
    }

    /// The shear substitution `x_p -> x_p + phi_p(free)` mapping the ideal to
    /// the pure pivot ideal; exact coordinates for membership tests.
    fn shear_subst(&self) -> Vec<TruncatedSeries> {
        (0..self.ctx.len())
            .map(|v| {
                let xv = TruncatedSeries::variable(&self.ctx, v);
                match self.pivots.iter().position(|&p| p == v) {
                    Some(i) => xv.add(&self.graphs[i]).expect("same context"),
                    None => xv,
                }
            })
            .collect()
    }

    /// Jet-level membership `f in I(O)^power`: pull `f` through the shear
    /// coordinates and read the pivot-degree valuation. Exact at jet level:
    /// membership in `I^p` equals pullback valuation `>= p` in the pivot
    /// block.
    pub fn contains(&self, f: &TruncatedSeries, power: u32) -> Membership {
        assert!(power >= 1);
        if **f.context() != *self.ctx {
            return Membership::Undecided;
        }
        if self.pivots.is_empty() {
            // Zero ideal: only the zero series is a member.
            return if f.is_zero() {
                Membership::In { certified: f.order() }
            } else {
                Membership::NotIn
            };
        }
        let g = match f.compose(&self.shear_subst()) {
            Ok(g) => g,
            Err(_) => return Membership::Undecided,
        };
        let pivot_degree = |m: &crate::series::Monomial| -> u32 {
            self.pivots.iter().map(|&p| m.0[p]).sum()
        };
        if g.terms().any(|(m, _)| pivot_degree(m) < power) {
            return Membership::NotIn;
        }
        match g.order() {
            Order::Exact => Membership::In { certified: Order::Exact },
            Order::Finite(n) if n >= power => Membership::In { certified: Order::Finite(n) },
            Order::Finite(_) => Membership::Undecided,
        }
    }

    /// Lowest pivot-block valuation of `f` through the shear coordinates,
    /// i.e. the largest `s` with `f in I(O)^s` visible at the working order.
    /// `None` when the pullback has no visible terms.
    pub fn ideal_valuation(&self, f: &TruncatedSeries) -> Result<Option<u32>> {
        if **f.context() != *self.ctx {
            return Err(CoreError::MismatchedContexts);
        }
        if self.pivots.is_empty() {
            return Ok(if f.is_zero() { None } else { Some(0) });
        }
        let g = f.compose(&self.shear_subst())?;
        Ok(g.terms()
            .map(|(m, _)| self.pivots.iter().map(|&p| m.0[p]).sum())
            .min())
    }

    /// Inclusion `self included in other` as sets, i.e. `I(other)` contained
    /// in `I(self)`.
    pub fn included_in(&self, other: &FormalSubmanifold) -> bool {
        other.generators().iter().all(|g| self.contains(g, 1).holds())
    }

    /// Tangent space at 0: kernel of the generator differentials.
    pub fn tangent_space(&self) -> Vec<Vec<GaussianRational>> {
        if self.pivots.is_empty() {
            return (0..self.ctx.len())
                .map(|v| {
                    let mut e = alloc::vec![GaussianRational::zero(); self.ctx.len()];
                    e[v] = GaussianRational::one();
                    e
                })
                .collect();
        }
        let rows: Vec<Vec<GaussianRational>> = self
            .generators()
            .iter()
            .map(|g| (0..self.ctx.len()).map(|v| g.linear_coeff(v)).collect())
            .collect();
        Matrix::from_rows(rows).kernel()
    }

    /// Graph parametrization: free variables become parameters `t_i` (in
    /// order), pivots are their graphs. Substituting every generator yields 0
    /// up to the reliable order.
    pub fn parametrize(&self) -> Parametrization {
        let dim = self.dim();
        let names: Vec<String> = (0..dim).map(|i| alloc::format!("t{i}")).collect();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let pctx = VariableContext::real(&name_refs);
        let free = self.free_vars();
        // Ambient variable -> series in parameters (pivots filled below).
        let var_map: Vec<TruncatedSeries> = (0..self.ctx.len())
            .map(|v| match free.iter().position(|&u| u == v) {
                Some(i) => TruncatedSeries::variable(&pctx, i),
                None => TruncatedSeries::zero(&pctx, Order::Exact),
            })
            .collect();
        let components: Vec<TruncatedSeries> = (0..self.ctx.len())
            .map(|v| match self.pivots.iter().position(|&p| p == v) {
                None => var_map[v].clone(),
                Some(i) => self.graphs[i]
                    .compose(&var_map)
                    .expect("graphs involve only free variables"),
            })
            .collect();
        Parametrization { source_ctx: pctx, components, ambient_ctx: self.ctx.clone() }
    }

    /// Basis of the tangent module `D_O` modulo `I(O)`: one graph-lifted
    /// field per free variable, `d/dx_s + sum_j (d phi_j / d x_s) d/dx_{p_j}`.
    pub fn tangent_module_basis(&self) -> Vec<FormalVectorField> {
        self.free_vars()
            .iter()
            .map(|&s| {
                let mut l = FormalVectorField::coordinate(&self.ctx, s);
                for (j, &p) in self.pivots.iter().enumerate() {
                    l.set_coeff(p, self.graphs[j].differentiate(s));
                }
                l
            })
            .collect()
    }

    /// `L(I(O)) subset I(O)` tested on the canonical generators.
    pub fn is_tangent(&self, l: &FormalVectorField) -> Membership {
        let mut certified = Order::Exact;
        for g in self.generators() {
            let lg = match l.apply(&g) {
                Ok(lg) => lg,
                Err(_) => return Membership::Undecided,
            };
            match self.contains(&lg, 1) {
                Membership::NotIn => return Membership::NotIn,
                Membership::Undecided => return Membership::Undecided,
                Membership::In { certified: c } => certified = certified.min_with(c),
            }
        }
        Membership::In { certified }
    }

    /// Approximate `l` (tangent to `self`) by a field tangent to both `self`
    /// and the larger `v`: project onto the graph-lifted basis of `v`. The
    /// difference has all coefficients in `I(self)`.
    pub fn approximate_in_larger(
        &self,
        l: &FormalVectorField,
        v: &FormalSubmanifold,
    ) -> Result<FormalVectorField> {
        if !self.included_in(v) {
            return Err(CoreError::NotIncluded(String::from("O not contained in V")));
        }
        if !self.is_tangent(l).holds() {
            return Err(CoreError::NotTangent(String::from("input field")));
        }
        let basis = v.tangent_module_basis();
        let mut out = FormalVectorField::zero(&self.ctx, l.order());
        for (s, x) in v.free_vars().iter().zip(&basis) {
            out = out.add(&x.mul_series(l.coeff(*s))?)?;
        }
        Ok(out)
    }

    /// Structural equality of ideals at the stored order: same pivots and
    /// identical graph series (orders may differ).
    pub fn same_ideal(&self, other: &FormalSubmanifold) -> bool {
        self.pivots == other.pivots
            && self.graphs.iter().zip(&other.graphs).all(|(a, b)| {
                let o = a.order().min_with(b.order());
                a.truncated(o) == b.truncated(o)
            })
    }
}

/// A formal parametrization: one component series per ambient variable, in
/// parameter variables.
#[derive(Clone, Debug)]
pub struct Parametrization {
    source_ctx: Arc<VariableContext>,
    ambient_ctx: Arc<VariableContext>,
    components: Vec<TruncatedSeries>,
}

impl Parametrization {
    pub fn new(
        source_ctx: Arc<VariableContext>,
        ambient_ctx: Arc<VariableContext>,
        components: Vec<TruncatedSeries>,
    ) -> Self {
        assert_eq!(components.len(), ambient_ctx.len());
        for c in &components {
            assert_eq!(**c.context(), *source_ctx);
        }
        Self { source_ctx, ambient_ctx, components }
    }

    pub fn source_dim(&self) -> usize {
        self.source_ctx.len()
    }

    pub fn source_context(&self) -> &Arc<VariableContext> {
        &self.source_ctx
    }

    pub fn ambient_context(&self) -> &Arc<VariableContext> {
        &self.ambient_ctx
    }

    pub fn components(&self) -> &[TruncatedSeries] {
        &self.components
    }

    /// Pull an ambient series back through the parametrization.
    pub fn pull_back(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        if **f.context() != *self.ambient_ctx {
            return Err(CoreError::MismatchedContexts);
        }
        f.compose(&self.components)
    }

    /// Rank of the differential at 0.
    pub fn rank_at_origin(&self) -> usize {
        let rows: Vec<Vec<GaussianRational>> = self
            .components
            .iter()
            .map(|c| (0..self.source_ctx.len()).map(|v| c.linear_coeff(v)).collect())
            .collect();
        Matrix::from_rows(rows).rank()
    }
}

/// Joint formal parametrization of a nested pair `X` inside `Y`: a
/// parametrization `A(t', t'')` of `Y` with `A(t', 0)` parametrizing `X`.
/// Parameters are ordered `t'` (dim X of them) then `t''`.
pub fn joint_parametrize(
    x: &FormalSubmanifold,
    y: &FormalSubmanifold,
    target: u32,
) -> Result<Parametrization> {
    if !x.included_in(y) {
        return Err(CoreError::NotIncluded(String::from("X not contained in Y")));
    }
    let b = y.parametrize();
    // Pull back the generators of I(X) through B; nonzero pullbacks cut the
    // preimage of X in the parameter space of Y.
    let mut pulled: Vec<TruncatedSeries> = Vec::new();
    for g in x.generators() {
        let p = b.pull_back(&g)?;
        if !p.is_zero() {
            pulled.push(p);
        }
    }
    let param_x =
        FormalSubmanifold::from_generators(b.source_context(), &pulled, FieldKind::Real, target)
            .map_err(|_| {
                CoreError::NotAManifoldIdeal(String::from("pullback of I(X) through Y"))
            })?;
    if param_x.dim() != x.dim() {
        return Err(CoreError::NotAManifoldIdeal(String::from(
            "pullback of I(X) has unexpected dimension",
        )));
    }

    // Flattening coordinates: free parameters of param_x become t', its
    // pivots become graphs offset by fresh t'' coordinates.
    let s_prime = x.dim();
    let s_dprime = y.dim() - x.dim();
    let names: Vec<String> = (0..s_prime)
        .map(|i| alloc::format!("tp{i}"))
        .chain((0..s_dprime).map(|i| alloc::format!("ts{i}")))
        .collect();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let jctx = VariableContext::real(&name_refs);

    let free = param_x.free_vars();
    // Map each Y-parameter to a series in (t', t'').
    let mut c_map: Vec<TruncatedSeries> =
        alloc::vec![TruncatedSeries::zero(&jctx, Order::Exact); b.source_dim()];
    for (i, &u) in free.iter().enumerate() {
        c_map[u] = TruncatedSeries::variable(&jctx, i);
    }
    // Free slots set; now fill pivots as graph + t'' offset.
    for (j, &p) in param_x.pivots().iter().enumerate() {
        let graph_in_j = param_x.graph(j).compose(&c_map)?;
        c_map[p] = graph_in_j.add(&TruncatedSeries::variable(&jctx, s_prime + j))?;
    }

    let components = b
        .components()
        .iter()
        .map(|c| c.compose(&c_map))
        .collect::<Result<Vec<_>>>()?;
    Ok(Parametrization::new(jctx, y.context().clone(), components))
}
