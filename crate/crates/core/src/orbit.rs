//! Orbits of Lie algebras of formal vector fields.
//!
//! The orbit of a family of formal vector fields is the unique formal
//! submanifold of dimension `dim g(0)` to which every field is tangent,
//! where `g` is the generated Lie algebra. It is computed in three steps:
//! close the generators under Lie brackets until the span (truncated at the
//! working order) stabilizes, build an immersion by composing truncated
//! formal flows `exp(t_j L^j)` of fields spanning `g(0)`, and recover the
//! manifold ideal by graph-normalizing the elimination of that immersion.
//!
//! Module multiples of the generators never enlarge the construction: by
//! `[fL, gM] = fg[L,M] + f(Lg)M - g(Mf)L`, iterated brackets of module
//! elements stay inside the module generated by iterated brackets of the
//! plain generators, and evaluation at 0 factors through the latter.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::context::VariableContext;
use crate::error::{CoreError, Result};
use crate::linalg::RowSpace;
use crate::manifold::{FieldKind, FormalSubmanifold, Membership};
use crate::scalar::{GaussianRational, Rational};
use crate::series::{Order, TruncatedSeries};
use crate::vecfield::FormalVectorField;

/// Outcome of the bracket closure.
pub struct OrbitClosure {
    /// Independent fields found (generators and iterated brackets).
    pub fields: Vec<FormalVectorField>,
    /// Dimension of the evaluation space `g(0)`.
    pub value_dim: usize,
    /// Whether the truncated closure stabilized within the budget.
    pub stabilized: bool,
}

fn field_to_vec(l: &FormalVectorField, degree_cap: u32) -> Vec<(usize, crate::series::Monomial, GaussianRational)> {
    let mut out = Vec::new();
    for (slot, c) in l.coeffs().iter().enumerate() {
        for (m, coef) in c.terms() {
            if m.degree() <= degree_cap {
                out.push((slot, m.clone(), coef.clone()));
            }
        }
    }
    out
}

/// Close a family of fields under Lie brackets, tracking the linear span of
/// the truncated coefficient vectors. The budget bounds the bracket depth.
pub fn bracket_closure(
    generators: &[FormalVectorField],
    degree_cap: u32,
    budget: u32,
) -> OrbitClosure {
    assert!(!generators.is_empty());
    let ctx = generators[0].context().clone();
    let m = ctx.len();

    // Index the monomials on demand: sparse vectors over (slot, monomial).
    let mut columns: alloc::collections::BTreeMap<(usize, Vec<u32>), usize> =
        alloc::collections::BTreeMap::new();
    #[allow(unused_mut)]
    let mut col_of = |slot: usize, mono: &crate::series::Monomial| -> usize {
        let key = (slot, mono.0.clone());
        let next = columns.len();
        *columns.entry(key).or_insert(next)
    };

    // The RowSpace needs a fixed width; bound it by indexing lazily into a
    // growable dense representation.
    let mut span: Vec<Vec<(usize, GaussianRational)>> = Vec::new(); // reduced rows, sparse
    let mut fields: Vec<FormalVectorField> = Vec::new();

    // Sparse elimination: keep rows normalized with a recorded leading column.
    let mut leads: Vec<usize> = Vec::new();
    let insert = |l: &FormalVectorField,
                      span: &mut Vec<Vec<(usize, GaussianRational)>>,
                      leads: &mut Vec<usize>,
                      col_of: &mut dyn FnMut(usize, &crate::series::Monomial) -> usize|
     -> bool {
        let mut dense: alloc::collections::BTreeMap<usize, GaussianRational> =
            alloc::collections::BTreeMap::new();
        for (slot, mono, c) in field_to_vec(l, degree_cap) {
            dense.insert(col_of(slot, &mono), c);
        }
        // Reduce against existing rows.
        for (row, &lead) in span.iter().zip(leads.iter()) {
            if let Some(f) = dense.get(&lead).cloned() {
                if f.is_zero() {
                    continue;
                }
                for (c, v) in row {
                    let delta = &f * v;
                    let e = dense.entry(*c).or_insert_with(GaussianRational::zero);
                    *e -= &delta;
                    if e.is_zero() {
                        dense.remove(c);
                    }
                }
            }
        }
        let Some((&lead, _)) = dense.iter().next() else {
            return false;
        };
        let inv = dense[&lead].inv();
        let row: Vec<(usize, GaussianRational)> =
            dense.iter().map(|(c, v)| (*c, v * &inv)).collect();
        span.push(row);
        leads.push(lead);
        true
    };

    let mut frontier: Vec<usize> = Vec::new();
    for g in generators {
        if insert(g, &mut span, &mut leads, &mut col_of) {
            fields.push(g.clone());
            frontier.push(fields.len() - 1);
        }
    }

    let mut stabilized = false;
    for _depth in 0..budget {
        if frontier.is_empty() {
            stabilized = true;
            break;
        }
        let mut new_frontier = Vec::new();
        let upto = fields.len();
        for &fi in &frontier {
            for bi in 0..upto {
                if bi == fi {
                    continue;
                }
                let Ok(br) = fields[bi].bracket(&fields[fi]) else {
                    continue;
                };
                if br.is_zero() {
                    continue;
                }
                if insert(&br, &mut span, &mut leads, &mut col_of) {
                    fields.push(br);
                    new_frontier.push(fields.len() - 1);
                }
            }
        }
        frontier = new_frontier;
    }
    if frontier.is_empty() {
        stabilized = true;
    }

    // Evaluation space g(0).
    let mut values = RowSpace::new(m);
    let mut value_dim = 0;
    for f in &fields {
        if values.insert(f.value_at_origin()) {
            value_dim += 1;
        }
    }

    OrbitClosure { fields, value_dim, stabilized }
}

/// Apply the truncated Lie-series flow `exp(t L)` to a function: the pullback
/// `f(Phi_t(x)) = sum_k t^k/k! (L^k f)(x)`. Summands are shifted by the exact
/// monomial `t^k`, so the reliable order does not erode across iterations;
/// the sum is cut at `t`-degree `order`.
fn exp_apply(
    l: &FormalVectorField,
    t_var: usize,
    f: &TruncatedSeries,
    order: u32,
) -> Result<TruncatedSeries> {
    let ctx = f.context().clone();
    let mut acc = f.clone();
    let mut deriv = f.clone();
    let mut factorial = Rational::one();
    let mut terminated = false;
    let mut t_exps = alloc::vec![0u32; ctx.len()];
    for k in 1..=order {
        deriv = l.apply(&deriv)?;
        if deriv.is_zero() && deriv.order().is_exact() {
            terminated = true;
            break;
        }
        factorial *= Rational::from_integer(BigInt::from(k));
        let coef = GaussianRational::new(Rational::one() / factorial.clone(), Rational::zero());
        t_exps[t_var] = k;
        acc = acc.add(&deriv.scale(&coef).mul_monomial(&t_exps))?;
    }
    Ok(if terminated { acc } else { acc.truncated(Order::Finite(order)) })
}

/// The orbit of the Lie algebra generated by `generators` (and their module
/// multiples). `field` fixes the ground field of the resulting ideal; real
/// orbits require sigma-fixed generators. The working order is `target` and
/// the bracket-depth budget defaults to it.
pub fn lie_orbit(
    generators: &[FormalVectorField],
    field: FieldKind,
    target: u32,
) -> Result<FormalSubmanifold> {
    lie_orbit_with_budget(generators, field, target, target)
}

pub fn lie_orbit_with_budget(
    generators: &[FormalVectorField],
    field: FieldKind,
    target: u32,
    budget: u32,
) -> Result<FormalSubmanifold> {
    if generators.is_empty() {
        return Err(CoreError::Precondition(alloc::string::String::from(
            "orbit of an empty family",
        )));
    }
    let ctx = generators[0].context().clone();
    if field == FieldKind::Real {
        for g in generators {
            if !g.is_real() {
                return Err(CoreError::NotReal(alloc::string::String::from(
                    "orbit generator",
                )));
            }
        }
    }

    let closure = bracket_closure(generators, target, budget);
    if !closure.stabilized {
        return Err(CoreError::OrbitNotStabilized { dim_lower_bound: closure.value_dim });
    }
    let d = closure.value_dim;
    if d == 0 {
        let o = FormalSubmanifold::origin(&ctx, field);
        return Ok(o);
    }
    if d == ctx.len() {
        return Ok(FormalSubmanifold::full_space(&ctx, field));
    }

    // Spanning fields: greedily pick closure fields with independent values.
    let mut values = RowSpace::new(ctx.len());
    let mut spanning: Vec<&FormalVectorField> = Vec::new();
    for f in &closure.fields {
        if values.insert(f.value_at_origin()) {
            spanning.push(f);
            if spanning.len() == d {
                break;
            }
        }
    }
    debug_assert_eq!(spanning.len(), d);

    // Extended context with flow parameters in front.
    let names: Vec<alloc::string::String> =
        (0..d).map(|i| alloc::format!("s{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let ectx = ctx.with_parameters(&name_refs);
    let lift_series = |s: &TruncatedSeries| -> TruncatedSeries {
        TruncatedSeries::from_terms(
            &ectx,
            s.terms().map(|(m, c)| {
                let mut exps = alloc::vec![0u32; ectx.len()];
                exps[d..].copy_from_slice(&m.0);
                (exps, c.clone())
            }),
            s.order(),
        )
    };
    let lifted: Vec<FormalVectorField> = spanning
        .iter()
        .map(|l| {
            let mut coeffs = alloc::vec![TruncatedSeries::zero(&ectx, Order::Exact); d];
            coeffs.extend(l.coeffs().iter().map(lift_series));
            FormalVectorField::new(coeffs)
        })
        .collect();

    // Coordinates pulled through the composed flows, then evaluated
    // at x = 0: an immersion A(t) with dA(0) spanning g(0).
    let mut pulled: Vec<TruncatedSeries> = (0..ctx.len())
        .map(|v| TruncatedSeries::variable(&ectx, d + v))
        .collect();
    for (j, l) in lifted.iter().enumerate() {
        for comp in pulled.iter_mut() {
            *comp = exp_apply(l, j, comp, target)?;
        }
    }
    // Set the ambient variables to zero; parameters remain.
    let tctx = VariableContext::real(&name_refs);
    let to_params: Vec<TruncatedSeries> = (0..ectx.len())
        .map(|v| {
            if v < d {
                TruncatedSeries::variable(&tctx, v)
            } else {
                TruncatedSeries::zero(&tctx, Order::Exact)
            }
        })
        .collect();
    let immersion: Vec<TruncatedSeries> = pulled
        .iter()
        .map(|c| c.compose(&to_params))
        .collect::<Result<_>>()?;

    // Select d ambient coordinates with invertible Jacobian at 0, greedily in
    // the global variable order; they become the free variables.
    let mut sel: Vec<usize> = Vec::new();
    {
        let mut rs = RowSpace::new(d);
        for v in 0..ctx.len() {
            let row: Vec<GaussianRational> =
                (0..d).map(|j| immersion[v].linear_coeff(j)).collect();
            if rs.insert(row) {
                sel.push(v);
                if sel.len() == d {
                    break;
                }
            }
        }
    }
    if sel.len() != d {
        return Err(CoreError::Precondition(alloc::string::String::from(
            "flow immersion is rank deficient",
        )));
    }

    // Invert t -> (A_sel(t)) formally: solve A_sel(t) - u = 0 for t.
    let unames: Vec<alloc::string::String> =
        (0..d).map(|i| alloc::format!("u{i}")).collect();
    let uname_refs: Vec<&str> = unames.iter().map(|s| s.as_str()).collect();
    let utctx = tctx.with_parameters(&uname_refs); // u0..ud-1, s0..sd-1
    let lift_t = |s: &TruncatedSeries| -> TruncatedSeries {
        TruncatedSeries::from_terms(
            &utctx,
            s.terms().map(|(m, c)| {
                let mut exps = alloc::vec![0u32; utctx.len()];
                exps[d..].copy_from_slice(&m.0);
                (exps, c.clone())
            }),
            s.order(),
        )
    };
    let system: Vec<TruncatedSeries> = sel
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            lift_t(&immersion[v])
                .sub(&TruncatedSeries::variable(&utctx, i))
                .expect("same context")
        })
        .collect();
    let t_pivots: Vec<usize> = (d..2 * d).collect();
    let inverse = crate::series::graph_solve(&system, &t_pivots, target)?;

    // Generators: x_v - A_v(t(u)) for non-selected v, with u_i renamed to the
    // ambient variable sel_i. The inverse graphs involve only the u-slots.
    let inverse_map: Vec<TruncatedSeries> = (0..utctx.len())
        .map(|w| {
            if w < d {
                TruncatedSeries::variable(&utctx, w)
            } else {
                inverse[w - d].clone()
            }
        })
        .collect();
    let mut gens: Vec<TruncatedSeries> = Vec::new();
    for v in 0..ctx.len() {
        if sel.contains(&v) {
            continue;
        }
        let a_v_u = lift_t(&immersion[v]).compose(&inverse_map)?;
        debug_assert!(a_v_u.terms().all(|(m, _)| m.0[d..].iter().all(|&e| e == 0)));
        let renamed = TruncatedSeries::from_terms(
            &ctx,
            a_v_u.terms().map(|(m, c)| {
                let mut exps = alloc::vec![0u32; ctx.len()];
                for (i, &e) in m.0[..d].iter().enumerate() {
                    exps[sel[i]] += e;
                }
                (exps, c.clone())
            }),
            a_v_u.order(),
        );
        gens.push(TruncatedSeries::variable(&ctx, v).sub(&renamed)?);
    }

    let orbit = FormalSubmanifold::from_generators(&ctx, &gens, field, target)?;

    // Every input field must be tangent to the result.
    for g in generators {
        if matches!(orbit.is_tangent(g), Membership::NotIn) {
            return Err(CoreError::Precondition(alloc::string::String::from(
                "orbit construction produced a manifold some generator is not tangent to",
            )));
        }
    }
    debug_assert_eq!(orbit.dim(), d);
    Ok(orbit)
}

/// Dimension of the evaluation space `g(0)` of the bracket closure; cheap
/// entry point used by finiteness checks.
pub fn evaluation_dimension(generators: &[FormalVectorField], target: u32) -> usize {
    bracket_closure(generators, target, target).value_dim
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::VariableContext;

    #[test]
    fn abelian_orbit_is_a_line() {
        // g generated by {d_x} in R^2: orbit {y=0}, dim 1.
        let ctx = VariableContext::real(&["x", "y"]);
        let dx = FormalVectorField::coordinate(&ctx, 0);
        let o = lie_orbit(&[dx], FieldKind::Real, 8).unwrap();
        assert_eq!(o.dim(), 1);
        assert_eq!(o.pivots(), &[1]);
        assert!(o.graph(0).is_zero());
    }

    #[test]
    fn brackets_fill_the_plane() {
        // g generated by {d_x, x^2 d_y}: [d_x,[d_x, x^2 d_y]] = 2 d_y.
        let ctx = VariableContext::real(&["x", "y"]);
        let dx = FormalVectorField::coordinate(&ctx, 0);
        let x2dy = FormalVectorField::coordinate(&ctx, 1)
            .mul_series(&TruncatedSeries::variable(&ctx, 0).pow(2).unwrap())
            .unwrap();
        let o = lie_orbit(&[dx, x2dy], FieldKind::Real, 8).unwrap();
        assert_eq!(o.dim(), 2);
        assert_eq!(o.codim(), 0);
    }

    #[test]
    fn curved_orbit_graph() {
        // The single field d_x + 2x d_y is tangent to every parabola
        // {y = x^2 + c}; its orbit through 0 is {y = x^2}.
        let ctx = VariableContext::real(&["x", "y"]);
        let mut l = FormalVectorField::coordinate(&ctx, 0);
        l.set_coeff(
            1,
            TruncatedSeries::variable(&ctx, 0).scale(&GaussianRational::from_int(2)),
        );
        let o = lie_orbit(&[l.clone()], FieldKind::Real, 8).unwrap();
        assert_eq!(o.dim(), 1);
        assert_eq!(o.pivots(), &[1]);
        assert_eq!(o.graph(0).render(), "x^2");
        assert!(o.is_tangent(&l).holds());
    }

    #[test]
    fn rotation_orbit_is_full_plane_minus_nothing() {
        // Rotation field -y d_x + x d_y vanishes at 0: orbit is the origin.
        let ctx = VariableContext::real(&["x", "y"]);
        let rot = {
            let mut f = FormalVectorField::zero(&ctx, Order::Exact);
            f.set_coeff(0, TruncatedSeries::variable(&ctx, 1).neg());
            f.set_coeff(1, TruncatedSeries::variable(&ctx, 0));
            f
        };
        let o = lie_orbit(&[rot], FieldKind::Real, 8).unwrap();
        assert_eq!(o.dim(), 0);
    }

    #[test]
    fn heisenberg_tangent_frame_orbit_is_hypersurface_jet() {
        // Re L, Im L for L = d_z + zeta d_w on the Heisenberg hypersurface
        // r = -w - zeta_w + z zeta: their orbit is the hypersurface jet
        // {w = z zeta - zeta_w} of real dimension 3.
        let ctx = VariableContext::complexified(&["z", "w"]);
        let z = TruncatedSeries::variable(&ctx, 0);
        let zeta = TruncatedSeries::variable(&ctx, 2);
        let mut l = FormalVectorField::coordinate(&ctx, 0);
        l.set_coeff(1, zeta.clone());
        let re = l.real_part();
        let im = l.imag_part();
        let o = lie_orbit(&[re.clone(), im.clone()], FieldKind::Real, 8).unwrap();
        assert_eq!(o.dim(), 3);
        // The defining series r lies in I(O).
        let w = TruncatedSeries::variable(&ctx, 1);
        let zeta_w = TruncatedSeries::variable(&ctx, 3);
        let r = w
            .neg()
            .sub(&zeta_w)
            .unwrap()
            .add(&z.mul(&zeta).unwrap())
            .unwrap();
        assert!(o.contains(&r, 1).holds());
        assert!(o.is_tangent(&re).holds());
        assert!(o.is_tangent(&im).holds());
    }

    #[test]
    fn levi_flat_direction_orbit_is_complex_line() {
        // L = d_z on the Levi-flat r = -w - zeta_w: Re/Im parts generate the
        // abelian algebra spanning the z-plane; orbit = {w = -zeta_w}
        // intersected with ... in fact {Re w-form}: w + zeta_w = 0 alone is
        // NOT it; the orbit of span{Re d_z, Im d_z} is {w = 0, zeta_w = 0}.
        let ctx = VariableContext::complexified(&["z", "w"]);
        let l = FormalVectorField::coordinate(&ctx, 0);
        let o = lie_orbit(&[l.real_part(), l.imag_part()], FieldKind::Real, 8).unwrap();
        assert_eq!(o.dim(), 2);
        assert_eq!(o.pivots(), &[1, 3]);
        assert!(o.graph(0).is_zero());
        assert!(o.graph(1).is_zero());
    }
}
