//! Formal CR submanifolds: (1,0) tangent modules, the CR test, and the
//! intrinsic complexification.
//!
//! A real formal submanifold of complex space is carried in the complexified
//! `(z, zeta)` representation. `D10` is the module of `(1,0)` formal fields
//! preserving the ideal; the submanifold is CR when every `(1,0)` tangent
//! vector at 0 extends to such a field. For CR submanifolds the holomorphic
//! part of the complexified ideal is again a manifold ideal and defines the
//! intrinsic complexification.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::context::{VarKind, VariableContext};
use crate::error::{CoreError, Result};
use crate::linalg::{Matrix, RowSpace};
use crate::manifold::{FieldKind, FormalSubmanifold};
use crate::scalar::GaussianRational;
use crate::series::{Monomial, Order, TruncatedSeries};
use crate::vecfield::FormalVectorField;

/// All monomials in the chosen variable subset up to total degree `d`.
pub(crate) fn monomials_upto(nvars: usize, allowed: &[usize], d: u32) -> Vec<Monomial> {
    let mut out = alloc::vec![Monomial::unit(nvars)];
    let mut layer = out.clone();
    for _ in 0..d {
        let mut next = Vec::new();
        for m in &layer {
            // Raise only variables at or after the largest raised one, so
            // each monomial is produced exactly once.
            let start = match (0..nvars).rev().find(|&u| m.0[u] > 0) {
                None => 0,
                Some(u) => allowed.iter().position(|&v| v == u).unwrap_or(0),
            };
            for &v in &allowed[start..] {
                let mut e = m.0.clone();
                e[v] += 1;
                next.push(Monomial(e));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out.sort();
    out.dedup();
    out
}

/// Solution data for the `(1,0)` tangent module of `O` at the working order.
pub struct D10Module {
    /// Minimal generating list of the jet-solution module, found greedily in
    /// ascending valuation.
    pub basis: Vec<FormalVectorField>,
    /// Basis of the evaluation space `D10(0)` as vectors over the
    /// holomorphic variables.
    pub evaluation: Vec<Vec<GaussianRational>>,
    /// Order at which the solution space was computed.
    pub order: u32,
}

/// Compute the module of `(1,0)` formal vector fields tangent to `O`, by
/// exact linear algebra on the tangency equations at the working order.
///
/// The unknowns are the coefficients on the free holomorphic directions
/// (as series in the free variables); coefficients on pivot holomorphic
/// directions are then determined, and generators with non-holomorphic
/// pivots impose linear relations over the series ring.
pub fn d10_module(o: &FormalSubmanifold, target: u32) -> Result<D10Module> {
    let ctx = o.context().clone();
    let holo: Vec<usize> = ctx.holo_vars();
    let free = o.free_vars();
    let free_holo: Vec<usize> =
        free.iter().copied().filter(|&v| ctx.kind(v) == VarKind::Holo).collect();

    // Pullbacks (through the graph substitution) of d g_i / d z_j.
    let graph_subst: Vec<TruncatedSeries> = (0..ctx.len())
        .map(|v| match o.pivots().iter().position(|&p| p == v) {
            Some(i) => o.graph(i).clone(),
            None => TruncatedSeries::variable(&ctx, v),
        })
        .collect();
    let gens = o.generators();
    let mut dcoef: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(gens.len());
    for g in &gens {
        let mut row = Vec::with_capacity(holo.len());
        for &j in &holo {
            row.push(g.differentiate(j).compose(&graph_subst)?);
        }
        dcoef.push(row);
    }

    // Unknown jets: alpha_j for each free holomorphic j, over monomials in
    // the free variables up to the working degree.
    let monos = monomials_upto(ctx.len(), &free, target);
    let n_unk = free_holo.len() * monos.len();
    if n_unk == 0 {
        return Ok(D10Module { basis: Vec::new(), evaluation: Vec::new(), order: target });
    }

    // Constraints from generators with non-holomorphic pivots:
    // sum_j alpha_j * (d g_i / d z_j datum) = 0, coefficientwise.
    let mut rows: Vec<Vec<GaussianRational>> = Vec::new();
    for (i, &p) in o.pivots().iter().enumerate() {
        if ctx.kind(p) == VarKind::Holo {
            continue;
        }
        let mut table: alloc::collections::BTreeMap<Monomial, Vec<(usize, GaussianRational)>> =
            alloc::collections::BTreeMap::new();
        for (jj, &j) in free_holo.iter().enumerate() {
            let pos = holo.iter().position(|&h| h == j).unwrap();
            for (mi, mono) in monos.iter().enumerate() {
                for (cm, cc) in dcoef[i][pos].terms() {
                    let rm = mono.mul(cm);
                    if rm.degree() > target {
                        continue;
                    }
                    table.entry(rm).or_default().push((jj * monos.len() + mi, cc.clone()));
                }
            }
        }
        for (_rm, entries) in table {
            let mut row = alloc::vec![GaussianRational::zero(); n_unk];
            for (col, c) in entries {
                row[col] += &c;
            }
            rows.push(row);
        }
    }

    let solutions = if rows.is_empty() {
        (0..n_unk)
            .map(|u| {
                let mut v = alloc::vec![GaussianRational::zero(); n_unk];
                v[u] = GaussianRational::one();
                v
            })
            .collect()
    } else {
        Matrix::from_rows(rows).kernel()
    };

    // Assemble fields from solution jets.
    let jet_to_field = |sol: &[GaussianRational]| -> Result<FormalVectorField> {
        let mut f = FormalVectorField::zero(&ctx, Order::Finite(target));
        for (jj, &j) in free_holo.iter().enumerate() {
            let mut terms: Vec<(Vec<u32>, GaussianRational)> = Vec::new();
            for (mi, mono) in monos.iter().enumerate() {
                let c = sol[jj * monos.len() + mi].clone();
                if !c.is_zero() {
                    terms.push((mono.0.clone(), c));
                }
            }
            f.set_coeff(j, TruncatedSeries::from_terms(&ctx, terms, Order::Finite(target)));
        }
        for (i, &p) in o.pivots().iter().enumerate() {
            if ctx.kind(p) != VarKind::Holo {
                continue;
            }
            // The generator is x_p - phi_i, so the p-coefficient follows
            // from L(g_i) = a_p + sum_j a_j d(g_i)/dz_j|_{j != p} in I.
            let mut acc = TruncatedSeries::zero(&ctx, Order::Finite(target));
            for &j in &free_holo {
                let pos = holo.iter().position(|&h| h == j).unwrap();
                acc = acc.sub(&f.coeff(j).mul(&dcoef[i][pos])?)?;
            }
            f.set_coeff(p, acc);
        }
        Ok(f)
    };

    let mut eval_rows = RowSpace::new(holo.len());
    let mut evaluation = Vec::new();
    let mut fields_by_val: Vec<(u32, FormalVectorField)> = Vec::new();
    for sol in &solutions {
        let f = jet_to_field(sol)?;
        let val = f
            .coeffs()
            .iter()
            .filter_map(|c| c.valuation())
            .min()
            .unwrap_or(target + 1);
        let ev: Vec<GaussianRational> =
            holo.iter().map(|&j| f.coeff(j).constant_term()).collect();
        if eval_rows.insert(ev.clone()) {
            evaluation.push(ev);
        }
        fields_by_val.push((val, f));
    }
    fields_by_val.sort_by_key(|(v, _)| *v);

    // Greedy module generators: a field joins the basis only when it lies
    // outside the module (truncated monomial multiples) of the earlier ones.
    let n_cols = holo.len() * monos.len();
    let all_free_monos = &monos;
    let field_vec = |f: &FormalVectorField| -> Vec<GaussianRational> {
        let mut v = alloc::vec![GaussianRational::zero(); n_cols];
        for (jj, &j) in holo.iter().enumerate() {
            for (m, c) in f.coeff(j).terms() {
                if let Ok(mi) = all_free_monos.binary_search(m) {
                    v[jj * all_free_monos.len() + mi] = c.clone();
                }
            }
        }
        v
    };
    let mut module_span = RowSpace::new(n_cols);
    let mut basis = Vec::new();
    for (_val, f) in &fields_by_val {
        if module_span.contains(&field_vec(f)) {
            continue;
        }
        basis.push(f.clone());
        for mono in all_free_monos {
            let mf = FormalVectorField::new(
                f.coeffs()
                    .iter()
                    .map(|c| c.mul_monomial(&mono.0).truncated(Order::Finite(target)))
                    .collect::<Vec<_>>(),
            );
            module_span.insert(field_vec(&mf));
        }
    }

    Ok(D10Module { basis, evaluation, order: target })
}

/// The `(1,0)` tangent space `H10_0 O = H10_0 C^n  cap  C T_0 O`, as vectors
/// over the holomorphic variables.
pub fn h10_tangent_space(o: &FormalSubmanifold) -> Vec<Vec<GaussianRational>> {
    let ctx = o.context();
    let holo = ctx.holo_vars();
    let gens = o.generators();
    if gens.is_empty() {
        return (0..holo.len())
            .map(|i| {
                let mut e = alloc::vec![GaussianRational::zero(); holo.len()];
                e[i] = GaussianRational::one();
                e
            })
            .collect();
    }
    let rows: Vec<Vec<GaussianRational>> = gens
        .iter()
        .map(|g| holo.iter().map(|&j| g.linear_coeff(j)).collect())
        .collect();
    Matrix::from_rows(rows).kernel()
}

/// Verdict of the formal CR test. A positive answer is certified only at the
/// working order: the truncated `D10` evaluation may overestimate the true
/// infinite-order module evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrVerdict {
    pub is_cr: bool,
    pub certified_order: u32,
    pub h10_dim: usize,
    pub d10_eval_dim: usize,
}

/// Formal CR test: `H10_0 O` contained in `D10_O(0)`.
pub fn cr_check(o: &FormalSubmanifold, target: u32) -> Result<CrVerdict> {
    if o.field() != FieldKind::Real {
        return Err(CoreError::Precondition(String::from(
            "cr_check needs a real submanifold",
        )));
    }
    let h10 = h10_tangent_space(o);
    let d10 = d10_module(o, target)?;
    let mut span = RowSpace::new(o.context().holo_vars().len());
    for v in &d10.evaluation {
        span.insert(v.clone());
    }
    let is_cr = h10.iter().all(|v| span.contains(v));
    Ok(CrVerdict {
        is_cr,
        certified_order: target,
        h10_dim: h10.len(),
        d10_eval_dim: d10.evaluation.len(),
    })
}

/// Outcome of the intrinsic complexification.
pub enum Complexification {
    /// The elimination ideal is a manifold ideal. `complex` is the intrinsic
    /// complexification cut by the holomorphic generators alone; `realified`
    /// adds the conjugated generators and is the carrier used for nested
    /// pairs.
    Manifold {
        holomorphic_generators: Vec<TruncatedSeries>,
        complex: FormalSubmanifold,
        realified: FormalSubmanifold,
    },
    /// The CR test failed; the truncated elimination ideal is returned for
    /// inspection (it need not be a manifold ideal).
    Singular { elimination: Vec<TruncatedSeries> },
}

/// Jet slice of the elimination ideal `C I(O) cap C[[z]]`: holomorphic
/// polynomials of degree at most `target` whose pullback through the graph
/// substitution of `O` vanishes.
pub fn holomorphic_elimination(
    o: &FormalSubmanifold,
    target: u32,
) -> Result<Vec<TruncatedSeries>> {
    let ctx = o.context().clone();
    let holo = ctx.holo_vars();
    let graph_subst: Vec<TruncatedSeries> = (0..ctx.len())
        .map(|v| match o.pivots().iter().position(|&p| p == v) {
            Some(i) => o.graph(i).clone(),
            None => TruncatedSeries::variable(&ctx, v),
        })
        .collect();
    let candidates: Vec<Monomial> = monomials_upto(ctx.len(), &holo, target)
        .into_iter()
        .filter(|m| !m.is_unit())
        .collect();

    let mut col_index: alloc::collections::BTreeMap<Monomial, usize> =
        alloc::collections::BTreeMap::new();
    let mut rows_sparse: Vec<Vec<(usize, GaussianRational)>> = Vec::new();
    let mut exactness = Order::Exact;
    for cand in &candidates {
        let poly = TruncatedSeries::from_terms(
            &ctx,
            [(cand.0.clone(), GaussianRational::one())],
            Order::Exact,
        );
        let pulled = poly.compose(&graph_subst)?;
        exactness = exactness.min_with(pulled.order());
        let mut row = Vec::new();
        for (m, c) in pulled.terms() {
            let next = col_index.len();
            let idx = *col_index.entry(m.clone()).or_insert(next);
            row.push((idx, c.clone()));
        }
        rows_sparse.push(row);
    }
    // Combinations sum_i x_i * pullback_i = 0: kernel of the column matrix.
    let mut mat = Matrix::zeros(col_index.len(), candidates.len());
    for (i, row) in rows_sparse.iter().enumerate() {
        for (j, c) in row {
            mat.set(*j, i, c.clone());
        }
    }
    let order = exactness.min_with(Order::Finite(target));
    Ok(mat
        .kernel()
        .into_iter()
        .map(|combo| {
            TruncatedSeries::from_terms(
                &ctx,
                combo
                    .iter()
                    .zip(&candidates)
                    .filter(|(c, _)| !c.is_zero())
                    .map(|(c, m)| (m.0.clone(), c.clone())),
                order,
            )
        })
        .filter(|s| !s.is_zero())
        .collect())
}

/// Intrinsic complexification of a real CR formal submanifold. On success
/// the tangent identity `T0 O + J T0 O = T0 V` is verified exactly; on a
/// failed CR test the truncated elimination ideal is returned instead.
pub fn intrinsic_complexification(
    o: &FormalSubmanifold,
    target: u32,
) -> Result<Complexification> {
    let verdict = cr_check(o, target)?;
    let elimination = holomorphic_elimination(o, target)?;
    if !verdict.is_cr {
        return Ok(Complexification::Singular { elimination });
    }
    let ctx = o.context().clone();
    let holo = ctx.holo_vars();

    // Generators with independent differentials, greedily.
    let mut lin = RowSpace::new(ctx.len());
    let mut gens: Vec<TruncatedSeries> = Vec::new();
    for f in &elimination {
        let row: Vec<GaussianRational> = (0..ctx.len()).map(|v| f.linear_coeff(v)).collect();
        if lin.insert(row) {
            gens.push(f.clone());
        }
    }

    // Expected complex codimension from T0 V = T0 O + J T0 O.
    let t0 = o.tangent_space();
    let mut tv = RowSpace::new(ctx.len());
    for v in &t0 {
        tv.insert(v.clone());
        tv.insert(apply_j_vector(&ctx, v));
    }
    let expected_real_codim = 2 * holo.len() - tv.dim();
    if 2 * gens.len() != expected_real_codim {
        return Err(CoreError::NotAManifoldIdeal(alloc::format!(
            "elimination ideal has {} independent differentials, tangent spaces need {}",
            gens.len(),
            expected_real_codim / 2
        )));
    }

    let complex = FormalSubmanifold::from_generators(&ctx, &gens, FieldKind::Complex, target)?;
    let mut real_gens = gens.clone();
    for g in &gens {
        real_gens.push(g.conjugate());
    }
    let realified =
        FormalSubmanifold::from_generators(&ctx, &real_gens, FieldKind::Real, target)?;

    // Postcondition, exact: T0 O + J T0 O = T0 V.
    let t0v = realified.tangent_space();
    let mut tv_check = RowSpace::new(ctx.len());
    for v in &t0v {
        tv_check.insert(v.clone());
    }
    if tv_check.dim() != tv.dim() || !t0.iter().all(|v| tv_check.contains(v)) {
        return Err(CoreError::Precondition(String::from(
            "intrinsic complexification violates T0 O + J T0 O = T0 V",
        )));
    }

    Ok(Complexification::Manifold { holomorphic_generators: gens, complex, realified })
}

/// `J` on tangent vectors in the complexified representation: multiply the
/// holomorphic slots by `i` and the antiholomorphic slots by `-i`.
pub fn apply_j_vector(
    ctx: &Arc<VariableContext>,
    v: &[GaussianRational],
) -> Vec<GaussianRational> {
    let i = GaussianRational::i();
    v.iter()
        .enumerate()
        .map(|(idx, c)| match ctx.kind(idx) {
            VarKind::Holo => c * &i,
            VarKind::AntiHolo => c * &i.conj(),
            VarKind::Real => c.clone(),
        })
        .collect()
}

/// Tangent-module splitting `D_V = (D_O cap D_V) + J (D_O cap D_V) mod I(V)`
/// for a generic pair: project a spanning tangent basis of `O` into
/// `D_O cap D_V` and test that the values and their `J`-images span `T0 V`
/// (spanning the tangent space at 0 spans the module).
pub fn dv_splitting_check(o: &FormalSubmanifold, v: &FormalSubmanifold) -> Result<bool> {
    let ctx = o.context().clone();
    let t0 = o.tangent_space();
    let mut span = RowSpace::new(ctx.len());
    for t in &t0 {
        span.insert(t.clone());
        span.insert(apply_j_vector(&ctx, t));
    }
    let t0v = v.tangent_space();
    let mut vspan = RowSpace::new(ctx.len());
    for t in &t0v {
        vspan.insert(t.clone());
    }
    if span.dim() != vspan.dim() || !t0.iter().all(|t| vspan.contains(t)) {
        return Err(CoreError::Precondition(String::from(
            "pair is not generic: T0 O + J T0 O != T0 V",
        )));
    }

    let mut got = RowSpace::new(ctx.len());
    for l in o.tangent_module_basis() {
        let lt = o.approximate_in_larger(&l, v)?;
        if !v.is_tangent(&lt).holds() || !o.is_tangent(&lt).holds() {
            return Ok(false);
        }
        got.insert(lt.value_at_origin());
        got.insert(lt.apply_j().value_at_origin());
    }
    Ok(t0v.iter().all(|t| got.contains(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::VariableContext;

    fn c2_ctx() -> Arc<VariableContext> {
        VariableContext::complexified(&["z", "w"])
    }

    fn sv(ctx: &Arc<VariableContext>, v: usize) -> TruncatedSeries {
        TruncatedSeries::variable(ctx, v)
    }

    /// The complex line {w=0} as a real submanifold of C^2.
    fn complex_line(ctx: &Arc<VariableContext>) -> FormalSubmanifold {
        FormalSubmanifold::from_generators(
            ctx,
            &[sv(ctx, 1), sv(ctx, 3)],
            FieldKind::Real,
            8,
        )
        .unwrap()
    }

    /// The totally real axis {w=0, Im z=0}.
    fn real_axis(ctx: &Arc<VariableContext>) -> FormalSubmanifold {
        FormalSubmanifold::from_generators(
            ctx,
            &[sv(ctx, 1), sv(ctx, 3), sv(ctx, 0).sub(&sv(ctx, 2)).unwrap()],
            FieldKind::Real,
            8,
        )
        .unwrap()
    }

    #[test]
    fn d10_of_complex_line_contains_dz() {
        let ctx = c2_ctx();
        let o = complex_line(&ctx);
        let d10 = d10_module(&o, 6).unwrap();
        let mut span = RowSpace::new(2);
        for v in &d10.evaluation {
            span.insert(v.clone());
        }
        assert!(span.contains(&[GaussianRational::one(), GaussianRational::zero()]));
        assert!(d10
            .basis
            .iter()
            .any(|f| f.coeff(0).constant_term().is_one() && f.coeff(1).is_zero()));
    }

    #[test]
    fn d10_of_real_axis_evaluates_to_zero() {
        let ctx = c2_ctx();
        let o = real_axis(&ctx);
        let d10 = d10_module(&o, 6).unwrap();
        assert!(d10.evaluation.is_empty());
        // H10 of the axis is also zero, so the axis is CR (totally real).
        assert!(h10_tangent_space(&o).is_empty());
        assert!(cr_check(&o, 6).unwrap().is_cr);
    }

    #[test]
    fn complex_line_is_cr_with_full_h10() {
        let ctx = c2_ctx();
        let o = complex_line(&ctx);
        let verdict = cr_check(&o, 6).unwrap();
        assert!(verdict.is_cr);
        assert_eq!(verdict.h10_dim, 1);
    }

    #[test]
    fn complexification_of_real_axis_is_the_line() {
        let ctx = c2_ctx();
        let o = real_axis(&ctx);
        match intrinsic_complexification(&o, 8).unwrap() {
            Complexification::Manifold { holomorphic_generators, realified, .. } => {
                assert_eq!(holomorphic_generators.len(), 1);
                assert_eq!(holomorphic_generators[0].render(), "w");
                assert!(realified.same_ideal(&complex_line(&ctx)));
            }
            Complexification::Singular { .. } => panic!("axis is CR"),
        }
    }

    #[test]
    fn complexification_of_complex_manifold_is_itself() {
        let ctx = c2_ctx();
        let o = complex_line(&ctx);
        match intrinsic_complexification(&o, 8).unwrap() {
            Complexification::Manifold { realified, .. } => {
                assert!(realified.same_ideal(&o));
            }
            Complexification::Singular { .. } => panic!("line is CR"),
        }
    }

    #[test]
    fn lamel_lebl_example_is_not_cr_and_eliminates_to_singular_ideal() {
        // M = {w1 = |z|^4, w2 = |z|^6} in C^3: not CR; the elimination ideal
        // contains w1^3 - w2^2.
        let ctx = VariableContext::complexified(&["z", "w1", "w2"]);
        let z = sv(&ctx, 0);
        let w1 = sv(&ctx, 1);
        let w2 = sv(&ctx, 2);
        let zeta = sv(&ctx, 3);
        let zeta_w1 = sv(&ctx, 4);
        let zeta_w2 = sv(&ctx, 5);
        let z2zeta2 = z.pow(2).unwrap().mul(&zeta.pow(2).unwrap()).unwrap();
        let z3zeta3 = z.pow(3).unwrap().mul(&zeta.pow(3).unwrap()).unwrap();
        let gens = [
            w1.sub(&z2zeta2).unwrap(),
            zeta_w1.sub(&z2zeta2).unwrap(),
            w2.sub(&z3zeta3).unwrap(),
            zeta_w2.sub(&z3zeta3).unwrap(),
        ];
        let o = FormalSubmanifold::from_generators(&ctx, &gens, FieldKind::Real, 12).unwrap();
        assert_eq!(o.dim(), 2);
        let verdict = cr_check(&o, 8).unwrap();
        assert!(!verdict.is_cr);
        assert_eq!(verdict.h10_dim, 1);
        assert_eq!(verdict.d10_eval_dim, 0);
        match intrinsic_complexification(&o, 8).unwrap() {
            Complexification::Singular { elimination } => {
                let target = w1.pow(3).unwrap().sub(&w2.pow(2).unwrap()).unwrap();
                let mut monos: Vec<Monomial> = elimination
                    .iter()
                    .flat_map(|f| f.terms().map(|(m, _)| m.clone()))
                    .chain(target.terms().map(|(m, _)| m.clone()))
                    .collect();
                monos.sort();
                monos.dedup();
                let vecify = |f: &TruncatedSeries| -> Vec<GaussianRational> {
                    monos.iter().map(|m| f.coeff(&m.0)).collect()
                };
                let mut span = RowSpace::new(monos.len());
                for f in &elimination {
                    span.insert(vecify(f));
                }
                assert!(span.contains(&vecify(&target)));
            }
            Complexification::Manifold { .. } => panic!("Lamel-Lebl example is singular"),
        }
    }

    #[test]
    fn splitting_check_for_axis_in_line() {
        let ctx = c2_ctx();
        let o = real_axis(&ctx);
        let v = complex_line(&ctx);
        assert!(dv_splitting_check(&o, &v).unwrap());
        assert!(dv_splitting_check(&v, &v).unwrap());
        // Non-generic pair: the origin inside the line fails the gate.
        let pt = FormalSubmanifold::origin(&ctx, FieldKind::Real);
        assert!(dv_splitting_check(&pt, &v).is_err());
    }
}
