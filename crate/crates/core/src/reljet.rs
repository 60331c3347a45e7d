//! Jets relative to a nested pair of formal submanifolds, relative contact
//! orders, approximation lemmas and supertangent vector fields.
//!
//! All memberships in `C I(O)^s + C I(V)` are decided by pullback through a
//! joint parametrization `A(t', t'')`: the pullback of that ideal is exactly
//! the `t''`-power ideal, so membership reads off the `t''`-valuation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::context::VarKind;
use crate::cr::apply_j_vector;
use crate::error::{CoreError, Result};
use crate::linalg::RowSpace;
use crate::manifold::{joint_parametrize, FormalSubmanifold, Membership, Parametrization};
use crate::series::{Order, TruncatedSeries};
use crate::types::TypeValue;
use crate::vecfield::FormalVectorField;

/// A nested pair `O` inside `V` inside the jet of a hypersurface `{R = 0}`,
/// with a joint parametrization.
pub struct RelativePair {
    pub o: FormalSubmanifold,
    pub v: FormalSubmanifold,
    pub joint: Parametrization,
    /// Number of `t'` parameters (the dimension of `O`).
    pub s_prime: usize,
    /// The recentred defining series of the hypersurface jet.
    pub r: TruncatedSeries,
}

impl RelativePair {
    pub fn new(
        o: FormalSubmanifold,
        v: FormalSubmanifold,
        r: TruncatedSeries,
        target: u32,
    ) -> Result<Self> {
        if !o.included_in(&v) {
            return Err(CoreError::NotIncluded(String::from("O not contained in V")));
        }
        let joint = joint_parametrize(&o, &v, target)?;
        let s_prime = o.dim();
        Ok(Self { o, v, joint, s_prime, r })
    }

    /// `t''`-degree of a monomial in the joint parameter context.
    fn tpp_degree(&self, m: &crate::series::Monomial) -> u32 {
        m.0[self.s_prime..].iter().sum()
    }

    /// Least visible `t''`-degree of the pullback of `F`; `None` when the
    /// pullback vanishes to the reliable order.
    pub fn pullback_valuation(&self, f: &TruncatedSeries) -> Result<(Option<u32>, Order)> {
        let pulled = self.joint.pull_back(f)?;
        let val = pulled.terms().map(|(m, _)| self.tpp_degree(m)).min();
        Ok((val, pulled.order()))
    }

    /// Membership `F in C I(O)^s + C I(V)` via pullback valuation.
    pub fn in_relative_ideal(&self, f: &TruncatedSeries, s: u32) -> Result<Membership> {
        let (val, order) = self.pullback_valuation(f)?;
        Ok(match val {
            Some(v) if v < s => Membership::NotIn,
            _ => match order {
                Order::Exact => Membership::In { certified: Order::Exact },
                Order::Finite(n) if n >= s => Membership::In { certified: order },
                Order::Finite(_) => Membership::Undecided,
            },
        })
    }
}

/// A `(k, O, V)`-jet: the pullback representative with `t''`-degree at most
/// `k`. Two series are equivalent iff their representatives coincide.
pub struct RelativeJet {
    pub k: u32,
    pub representative: TruncatedSeries,
}

pub fn relative_jet(f: &TruncatedSeries, pair: &RelativePair, k: u32) -> Result<RelativeJet> {
    let pulled = pair.joint.pull_back(f)?;
    let kept: Vec<(Vec<u32>, crate::scalar::GaussianRational)> = pulled
        .terms()
        .filter(|(m, _)| pair.tpp_degree(m) <= k)
        .map(|(m, c)| (m.0.clone(), c.clone()))
        .collect();
    Ok(RelativeJet {
        k,
        representative: TruncatedSeries::from_terms(
            pair.joint.source_context(),
            kept,
            pulled.order(),
        ),
    })
}

/// Relative contact order `k = min{s : R in I(O)^s + I(V)}`, read as the
/// least `t''`-degree of the pullback of `R`. Requires `R in I(O)`.
pub fn relative_contact_order(pair: &RelativePair) -> Result<TypeValue> {
    if matches!(pair.o.contains(&pair.r, 1), Membership::NotIn) {
        return Err(CoreError::Precondition(String::from("R is not in I(O)")));
    }
    let (val, order) = pair.pullback_valuation(&pair.r)?;
    Ok(match val {
        Some(v) => TypeValue::Finite(v),
        None => match order {
            Order::Exact => TypeValue::AtLeast(u32::MAX),
            Order::Finite(n) => TypeValue::AtLeast(n),
        },
    })
}

/// Approximate a formal map into the hypersurface `{R = 0}` (graph form):
/// replace the pivot component of `a` by the graph composed with the other
/// components. Satisfies `R o A~ = 0` and `A~ - A = 0 mod (R o A)`.
pub fn approximate_map(
    r: &TruncatedSeries,
    a: &[TruncatedSeries],
    target: u32,
) -> Result<Vec<TruncatedSeries>> {
    let ctx = r.context().clone();
    assert_eq!(a.len(), ctx.len());
    let pivot = (0..ctx.len())
        .find(|&v| !r.linear_coeff(v).is_zero())
        .ok_or_else(|| CoreError::NotAHypersurfacePoint(String::from("dR(0) = 0")))?;
    let graph = crate::series::graph_solve(core::slice::from_ref(r), &[pivot], target)?;
    // Phi(a') for the non-pivot components a'.
    let subst: Vec<TruncatedSeries> = (0..ctx.len())
        .map(|v| {
            if v == pivot {
                TruncatedSeries::zero(a[0].context(), Order::Exact)
            } else {
                a[v].clone()
            }
        })
        .collect();
    let mut out = a.to_vec();
    out[pivot] = graph[0].compose(&subst)?;
    Ok(out)
}

/// Approximate a `(1,0)` formal field by one annihilating `R`:
/// `L~ = L - (LR / R_{z_n}) d/dz_n` for the first holomorphic variable with
/// `R_{z_n}(0) != 0`. Satisfies `L~ R = 0` and `L~ = L mod (LR)`.
pub fn approximate_field(
    r: &TruncatedSeries,
    l: &FormalVectorField,
    target: u32,
) -> Result<FormalVectorField> {
    let ctx = r.context().clone();
    let pivot = ctx
        .holo_vars()
        .into_iter()
        .find(|&j| !r.linear_coeff(j).is_zero())
        .ok_or_else(|| {
            CoreError::NotAHypersurfacePoint(String::from(
                "all holomorphic partials of R vanish at 0",
            ))
        })?;
    let lr = l.apply(r)?;
    let r_pivot_inv = r.differentiate(pivot).invert(target)?;
    let mut out = l.clone();
    let corr = lr.mul(&r_pivot_inv)?;
    out.set_coeff(pivot, l.coeff(pivot).sub(&corr)?);
    Ok(out)
}

/// Supertangent test (relative contact order `k`): `L in C D_V` with
/// `L R in C I(O)^k + C I(V)`.
pub fn supertangent_check(
    pair: &RelativePair,
    l: &FormalVectorField,
    k: u32,
) -> Result<bool> {
    if matches!(pair.v.is_tangent(l), Membership::NotIn) {
        return Err(CoreError::NotTangent(String::from("supertangent candidate")));
    }
    let lr = l.apply(&pair.r)?;
    Ok(pair.in_relative_ideal(&lr, k)?.holds())
}

/// Complex-supertangent test: both `L` and `JL` are supertangent.
pub fn complex_supertangent_check(
    pair: &RelativePair,
    l: &FormalVectorField,
    k: u32,
) -> Result<bool> {
    Ok(supertangent_check(pair, l, k)? && supertangent_check(pair, &l.apply_j(), k)?)
}

/// Jet-testing contract (vanishing jets from vanishing derivative jets):
/// given `F in I(X)^{k''} + I(Y)` with `0 < k' <= k''`, if all `k'`-fold
/// derivatives along the tangent basis of `Y` have vanishing
/// `(k''-k', X, Y)`-jets then `F in I(X)^{k''+1} + I(Y)`. Returns whether
/// the contract held on this instance (vacuously when the hypothesis fails).
pub fn jet_testing(
    pair: &RelativePair,
    f: &TruncatedSeries,
    k_prime: u32,
    k_dprime: u32,
) -> Result<bool> {
    if k_prime == 0 || k_prime > k_dprime {
        return Err(CoreError::Precondition(String::from("need 0 < k' <= k''")));
    }
    if !pair.in_relative_ideal(f, k_dprime)?.holds() {
        return Err(CoreError::Precondition(String::from(
            "F is not in I(X)^{k''} + I(Y)",
        )));
    }
    let basis = pair.v.tangent_module_basis();
    // All words of length k' over the tangent basis.
    let mut level: Vec<TruncatedSeries> = alloc::vec![f.clone()];
    for _ in 0..k_prime {
        let mut next = Vec::with_capacity(level.len() * basis.len());
        for g in &level {
            for l in &basis {
                next.push(l.apply(g)?);
            }
        }
        level = next;
    }
    let threshold = k_dprime - k_prime;
    let mut hypothesis = true;
    for g in &level {
        let (val, _) = pair.pullback_valuation(g)?;
        if let Some(v) = val {
            if v <= threshold {
                hypothesis = false;
                break;
            }
        }
    }
    if !hypothesis {
        return Ok(true); // the lemma is silent
    }
    Ok(pair.in_relative_ideal(f, k_dprime + 1)?.holds())
}

/// The complex hessian `dd-bar R` contracted with a `(1,0)` field and a
/// `(0,1)` field: `sum_{i,j} R_{z_i zeta_j} a_i b_j`.
pub fn hessian_contract(
    r: &TruncatedSeries,
    l10: &FormalVectorField,
    l01: &FormalVectorField,
) -> Result<TruncatedSeries> {
    let ctx = r.context().clone();
    let mut acc = TruncatedSeries::zero(&ctx, Order::Exact);
    for i in 0..ctx.len() {
        if ctx.kind(i) != VarKind::Holo || l10.coeff(i).is_zero() {
            continue;
        }
        let ri = r.differentiate(i);
        for j in 0..ctx.len() {
            if ctx.kind(j) != VarKind::AntiHolo || l01.coeff(j).is_zero() {
                continue;
            }
            let rij = ri.differentiate(j);
            acc = acc.add(&rij.mul(l10.coeff(i))?.mul(l01.coeff(j))?)?;
        }
    }
    Ok(acc)
}

/// Checkable assumptions of the formal Diederich-Fornaess setup for a pair:
/// genericity at 0, `R in I(O)`, complex-tangency of `D_O`, and finite
/// commutator type of `O`.
#[derive(Debug, Clone)]
pub struct PairAssumptions {
    pub generic: bool,
    pub r_in_io: bool,
    pub complex_tangential: bool,
    pub finite_commutator_type: bool,
}

impl PairAssumptions {
    /// Assumptions (1)-(3): the gate for the parity corollaries. Assumption
    /// (4) (finite commutator type) enters only the full tangency theorem
    /// and fails legitimately for totally real orbits.
    pub fn first_three_hold(&self) -> bool {
        self.generic && self.r_in_io && self.complex_tangential
    }

    pub fn all_hold(&self) -> bool {
        self.first_three_hold() && self.finite_commutator_type
    }
}

pub fn check_pair_assumptions(pair: &RelativePair, target: u32) -> Result<PairAssumptions> {
    let ctx = pair.o.context().clone();
    // (1) T0 O + J T0 O = T0 V.
    let t0 = pair.o.tangent_space();
    let mut span = RowSpace::new(ctx.len());
    for t in &t0 {
        span.insert(t.clone());
        span.insert(apply_j_vector(&ctx, t));
    }
    let t0v = pair.v.tangent_space();
    let mut vspan = RowSpace::new(ctx.len());
    for t in &t0v {
        vspan.insert(t.clone());
    }
    let generic = span.dim() == vspan.dim() && t0.iter().all(|t| vspan.contains(t));

    // (2) R in I(O).
    let r_in_io = pair.o.contains(&pair.r, 1).holds();

    // (3) D_O complex-tangential: theta(T) and its conjugate lie in C I(O)
    // for the tangent basis, with theta = dR^{1,0}.
    let holo = ctx.holo_vars();
    let theta: Vec<TruncatedSeries> = holo.iter().map(|&j| pair.r.differentiate(j)).collect();
    let mut complex_tangential = true;
    for l in pair.o.tangent_module_basis() {
        let mut contraction = TruncatedSeries::zero(&ctx, Order::Exact);
        for (i, &j) in holo.iter().enumerate() {
            if l.coeff(j).is_zero() {
                continue;
            }
            contraction = contraction.add(&l.coeff(j).mul(&theta[i])?)?;
        }
        if matches!(pair.o.contains(&contraction, 1), Membership::NotIn) {
            complex_tangential = false;
        }
        let conj_contraction = contraction.conjugate();
        if matches!(pair.o.contains(&conj_contraction, 1), Membership::NotIn) {
            complex_tangential = false;
        }
    }

    // (4) Lie(D10_O + conj D10_O)(0) = C T_0 O.
    let d10 = crate::cr::d10_module(&pair.o, target)?;
    let mut gens: Vec<FormalVectorField> = d10.basis.clone();
    for b in &d10.basis {
        gens.push(b.conjugate());
    }
    let finite_commutator_type = if gens.is_empty() {
        t0.is_empty()
    } else {
        let dim = crate::orbit::evaluation_dimension(&gens, target);
        let mut t0span = RowSpace::new(ctx.len());
        for t in &t0 {
            t0span.insert(t.clone());
        }
        dim == t0span.dim()
    };

    Ok(PairAssumptions { generic, r_in_io, complex_tangential, finite_commutator_type })
}

/// Parity and hessian-membership report for a pseudoconvex pair.
#[derive(Debug, Clone)]
pub struct ParityReport {
    pub skipped: bool,
    pub assumptions: PairAssumptions,
    pub k: Option<TypeValue>,
    pub k_at_least_2: Option<bool>,
    pub k_even: Option<bool>,
    /// Per supplied (1,0) field: `Some(holds)` when the field is
    /// supertangent and the hessian membership was tested.
    pub hessian_memberships: Vec<Option<bool>>,
    pub violations: Vec<String>,
}

/// On a pseudoconvex instance satisfying the checkable assumptions: the
/// relative contact order is at least 2 and even, and for supertangent
/// `(1,0)` fields the hessian `dd-bar R(L, conj L)` lies in
/// `I(O)^k + I(V)`.
pub fn hessian_parity_checks(
    pair: &RelativePair,
    d10v_fields: &[FormalVectorField],
    pseudoconvex: bool,
    target: u32,
) -> Result<ParityReport> {
    let assumptions = check_pair_assumptions(pair, target)?;
    if !pseudoconvex || !assumptions.first_three_hold() {
        return Ok(ParityReport {
            skipped: true,
            assumptions,
            k: None,
            k_at_least_2: None,
            k_even: None,
            hessian_memberships: Vec::new(),
            violations: Vec::new(),
        });
    }
    let mut violations = Vec::new();
    let k = relative_contact_order(pair)?;
    let (k_at_least_2, k_even, k_val) = match k {
        TypeValue::Finite(kv) => {
            if kv < 2 {
                violations.push(alloc::format!("relative contact order {kv} < 2"));
            }
            if kv % 2 != 0 {
                violations.push(alloc::format!("relative contact order {kv} is odd"));
            }
            (Some(kv >= 2), Some(kv % 2 == 0), Some(kv))
        }
        TypeValue::AtLeast(_) => (None, None, None),
    };

    let mut hessian_memberships = Vec::new();
    if let Some(kv) = k_val {
        for l in d10v_fields {
            if !l.is_holomorphic_type() {
                hessian_memberships.push(None);
                continue;
            }
            if !supertangent_check(pair, l, kv)? {
                hessian_memberships.push(None);
                continue;
            }
            let h = hessian_contract(&pair.r, l, &l.conjugate())?;
            let holds = pair.in_relative_ideal(&h, kv)?.holds();
            if !holds {
                violations.push(String::from(
                    "hessian membership fails for a supertangent field",
                ));
            }
            hessian_memberships.push(Some(holds));
        }
    }

    Ok(ParityReport {
        skipped: false,
        assumptions,
        k: Some(k),
        k_at_least_2,
        k_even,
        hessian_memberships,
        violations,
    })
}

/// Bracket closure of supertangent fields tangent to both `O` and `V`
/// (relative contact order `k`). When both inputs are complex-supertangent
/// the bracket is required to be complex-supertangent (the Lie-algebra
/// property); otherwise the bracket is checked for plain supertangency.
pub fn lie_closure_check(
    pair: &RelativePair,
    l2: &FormalVectorField,
    l1: &FormalVectorField,
    k: u32,
) -> Result<bool> {
    for l in [l2, l1] {
        if !pair.o.is_tangent(l).holds() || !pair.v.is_tangent(l).holds() {
            return Err(CoreError::NotTangent(String::from("lie closure input")));
        }
        if !supertangent_check(pair, l, k)? {
            return Err(CoreError::Precondition(String::from(
                "input is not supertangent",
            )));
        }
    }
    let both_complex = complex_supertangent_check(pair, l2, k)?
        && complex_supertangent_check(pair, l1, k)?;
    let br = l2.bracket(l1)?;
    if both_complex {
        complex_supertangent_check(pair, &br, k)
    } else {
        supertangent_check(pair, &br, k)
    }
}
