//! Pointwise CR invariants of a subbundle frame: commutator type, Levi type,
//! complex and real formal orbits, contact order and contact type.
//!
//! Truncated computation cannot certify a true infinity, so every "infinite"
//! verdict is reported as `AtLeast(bound)` with the exhausted bound attached.

use alloc::vec::Vec;

use crate::error::Result;
use crate::hypersurface::{Hypersurface, SubbundleFrame};
use crate::linalg::{Matrix, RowSpace};
use crate::manifold::{FieldKind, FormalSubmanifold};
use crate::orbit::lie_orbit;
use crate::scalar::GaussianRational;
use crate::series::{Monomial, Order, TruncatedSeries};
use crate::vecfield::FormalVectorField;

/// A type value: exact, or only bounded below by the exhausted search bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeValue {
    Finite(u32),
    AtLeast(u32),
}

impl TypeValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, TypeValue::Finite(_))
    }
}

impl core::fmt::Display for TypeValue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TypeValue::Finite(t) => write!(f, "{t}"),
            TypeValue::AtLeast(b) => write!(f, ">={b}"),
        }
    }
}

/// Frame fields and their conjugates: the word alphabet for the type
/// searches.
fn word_alphabet(frame: &SubbundleFrame) -> Vec<FormalVectorField> {
    let mut fields: Vec<FormalVectorField> = frame.fields().to_vec();
    for f in frame.fields() {
        fields.push(f.conjugate());
    }
    fields
}

/// Is the value of this ambient field at the base point outside `C H S`,
/// i.e. does theta or its conjugate pair nontrivially with it?
fn sticks_out_of_chs(s: &Hypersurface, x: &FormalVectorField) -> Result<bool> {
    let theta_val = s.theta_contract(x)?.constant_term();
    if !theta_val.is_zero() {
        return Ok(true);
    }
    // Conjugate form: contract the conjugated field and conjugate back.
    let bar_val = s.theta_contract(&x.conjugate())?.constant_term();
    Ok(!bar_val.is_zero())
}

/// Commutator type `t(E, p)`: the least `t >= 2` such that some iterated
/// bracket `[L^t, ..., [L^2, L^1]...]` of frame fields and conjugates has a
/// value at the base point outside `C H S`.
pub fn commutator_type(
    s: &Hypersurface,
    frame: &SubbundleFrame,
    word_bound: u32,
) -> Result<TypeValue> {
    assert!(word_bound >= 2);
    let alphabet = word_alphabet(frame);
    // Level t-1 holds the iterated brackets of t-1 innermost fields.
    let mut level: Vec<FormalVectorField> = alphabet.clone();
    for t in 2..=word_bound {
        let mut next = Vec::with_capacity(level.len() * alphabet.len());
        for b in &level {
            for f in &alphabet {
                let br = f.bracket(b)?;
                if sticks_out_of_chs(s, &br)? {
                    return Ok(TypeValue::Finite(t));
                }
                next.push(br);
            }
        }
        level = next;
    }
    Ok(TypeValue::AtLeast(word_bound))
}

/// Levi type `c(E, p)`: the least `t >= 2` with
/// `L^t ... L^3 theta([L^2, L^1])(p) != 0` over words of frame fields and
/// conjugates.
pub fn levi_type(
    s: &Hypersurface,
    frame: &SubbundleFrame,
    word_bound: u32,
) -> Result<TypeValue> {
    assert!(word_bound >= 2);
    let alphabet = word_alphabet(frame);
    // Level 2: the Levi contractions theta([L^2, L^1]).
    let mut level: Vec<TruncatedSeries> = Vec::new();
    for l2 in &alphabet {
        for l1 in &alphabet {
            let g = s.theta_contract(&l2.bracket(l1)?)?;
            if !g.constant_term().is_zero() {
                return Ok(TypeValue::Finite(2));
            }
            level.push(g);
        }
    }
    for t in 3..=word_bound {
        let mut next = Vec::with_capacity(level.len() * alphabet.len());
        for g in &level {
            for f in &alphabet {
                let fg = f.apply(g)?;
                if !fg.constant_term().is_zero() {
                    return Ok(TypeValue::Finite(t));
                }
                next.push(fg);
            }
        }
        level = next;
    }
    Ok(TypeValue::AtLeast(word_bound))
}

/// The complex formal orbit of a frame at jet level: the annihilator ideal
/// `{f in C[[z]] : (L^t ... L^1 f)(0) = 0 for all words in the frame fields}`
/// intersected with polynomials of degree at most `jet_order`.
///
/// Words run over the frame exactly as given: a sigma-closed orbit is
/// requested by passing a frame containing the conjugated fields. (With
/// conjugates always included, every Levi-nondegenerate frame annihilates
/// only the zero ideal and the contact type collapses to 1; the fixtures pin
/// the frame-as-given convention.)
pub struct ComplexOrbit {
    /// Basis of the degree-bounded slice of the annihilator ideal
    /// (holomorphic polynomials).
    pub ideal_slice: Vec<TruncatedSeries>,
    /// When the slice is recognized as (the slice of) a manifold ideal: the
    /// realified carrier, cut by the holomorphic generators and their
    /// conjugates.
    pub manifold: Option<FormalSubmanifold>,
    /// Holomorphic graph generators when `manifold` is present.
    pub holomorphic_generators: Vec<TruncatedSeries>,
    pub jet_order: u32,
    /// Word-length cap used by the functional search.
    pub word_cap: u32,
    /// Whether the span of word functionals stabilized below the cap.
    pub stabilized: bool,
}

/// Sparse evaluation functional on polynomial jets: coefficients over
/// monomials. `(nu . L)(f) = nu(L f)`.
type Functional = alloc::collections::BTreeMap<Monomial, GaussianRational>;

fn compose_functional(
    nu: &Functional,
    l: &FormalVectorField,
    degree_cap: u32,
) -> Functional {
    let ctx = l.context();
    let nvars = ctx.len();
    let mut out: Functional = Functional::new();
    for (m, vc) in nu {
        for (j, a) in l.coeffs().iter().enumerate() {
            for (mu, ac) in a.terms() {
                // a_{j,mu} x^mu d_j maps x^beta to beta_j x^{beta - e_j + mu};
                // the preimage of m is beta = m + e_j - mu.
                let mut beta = alloc::vec![0i64; nvars];
                let mut ok = true;
                for v in 0..nvars {
                    let b = m.0[v] as i64 + u32::from(v == j) as i64 - mu.0[v] as i64;
                    if b < 0 {
                        ok = false;
                        break;
                    }
                    beta[v] = b;
                }
                if !ok || beta[j] == 0 {
                    continue;
                }
                let beta = Monomial(beta.iter().map(|&b| b as u32).collect());
                if beta.degree() > degree_cap {
                    continue;
                }
                let factor = GaussianRational::from_int(beta.0[j] as i64);
                let contrib = &(vc * ac) * &factor;
                use alloc::collections::btree_map::Entry;
                match out.entry(beta) {
                    Entry::Vacant(e) => {
                        e.insert(contrib);
                    }
                    Entry::Occupied(mut e) => {
                        *e.get_mut() += &contrib;
                        if e.get().is_zero() {
                            e.remove();
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn complex_formal_orbit(
    s: &Hypersurface,
    fields: &[FormalVectorField],
    jet_order: u32,
) -> Result<ComplexOrbit> {
    complex_formal_orbit_with_cap(s, fields, jet_order, 2 * jet_order)
}

pub fn complex_formal_orbit_with_cap(
    s: &Hypersurface,
    fields: &[FormalVectorField],
    jet_order: u32,
    word_cap: u32,
) -> Result<ComplexOrbit> {
    let ctx = s.context().clone();
    let degree_cap = jet_order.max(word_cap);

    // Index functionals as vectors over the monomials that appear.
    let mut col_index: alloc::collections::BTreeMap<Monomial, usize> =
        alloc::collections::BTreeMap::new();
    let mut span: Vec<Vec<(usize, GaussianRational)>> = Vec::new();
    let mut leads: Vec<usize> = Vec::new();
    let mut functionals: Vec<Functional> = Vec::new();
    let insert = |nu: &Functional,
                      span: &mut Vec<Vec<(usize, GaussianRational)>>,
                      leads: &mut Vec<usize>,
                      col_index: &mut alloc::collections::BTreeMap<Monomial, usize>|
     -> bool {
        let mut dense: alloc::collections::BTreeMap<usize, GaussianRational> =
            alloc::collections::BTreeMap::new();
        for (m, c) in nu {
            let next = col_index.len();
            let idx = *col_index.entry(m.clone()).or_insert(next);
            dense.insert(idx, c.clone());
        }
        for (row, &lead) in span.iter().zip(leads.iter()) {
            if let Some(f) = dense.get(&lead).cloned() {
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
        span.push(dense.iter().map(|(c, v)| (*c, v * &inv)).collect());
        leads.push(lead);
        true
    };

    // Evaluation at the base point.
    let mut delta = Functional::new();
    delta.insert(Monomial::unit(ctx.len()), GaussianRational::one());
    insert(&delta, &mut span, &mut leads, &mut col_index);
    functionals.push(delta);

    let mut frontier: Vec<usize> = alloc::vec![0];
    let mut stabilized = false;
    for _depth in 0..word_cap {
        if frontier.is_empty() {
            stabilized = true;
            break;
        }
        let mut next = Vec::new();
        for &fi in &frontier {
            for l in fields {
                let nu = compose_functional(&functionals[fi], l, degree_cap);
                if nu.is_empty() {
                    continue;
                }
                if insert(&nu, &mut span, &mut leads, &mut col_index) {
                    functionals.push(nu);
                    next.push(functionals.len() - 1);
                }
            }
        }
        frontier = next;
    }
    if frontier.is_empty() {
        stabilized = true;
    }

    // Annihilator within holomorphic polynomials of degree <= jet_order.
    let holo = ctx.holo_vars();
    let candidates: Vec<Monomial> =
        crate::cr::monomials_upto(ctx.len(), &holo, jet_order)
            .into_iter()
            .filter(|m| !m.is_unit())
            .collect();
    let mut mat = Matrix::zeros(functionals.len(), candidates.len());
    for (i, nu) in functionals.iter().enumerate() {
        for (j, cand) in candidates.iter().enumerate() {
            if let Some(c) = nu.get(cand) {
                mat.set(i, j, c.clone());
            }
        }
    }
    let kernel = mat.kernel();
    let ideal_slice: Vec<TruncatedSeries> = kernel
        .into_iter()
        .map(|combo| {
            TruncatedSeries::from_terms(
                &ctx,
                combo
                    .iter()
                    .zip(&candidates)
                    .filter(|(c, _)| !c.is_zero())
                    .map(|(c, m)| (m.0.clone(), c.clone())),
                Order::Finite(jet_order),
            )
        })
        .filter(|f| !f.is_zero())
        .collect();

    // Try to recognize the slice as a manifold ideal: graph generators from
    // elements with independent differentials, then completeness check.
    let mut lin = RowSpace::new(ctx.len());
    let mut gens = Vec::new();
    for f in &ideal_slice {
        let row: Vec<GaussianRational> = (0..ctx.len()).map(|v| f.linear_coeff(v)).collect();
        if lin.insert(row) {
            gens.push(f.clone());
        }
    }
    let manifold = if gens.is_empty() && !ideal_slice.is_empty() {
        None
    } else {
        let mut real_gens = gens.clone();
        for g in &gens {
            real_gens.push(g.conjugate());
        }
        match FormalSubmanifold::from_generators(&ctx, &real_gens, FieldKind::Real, jet_order)
        {
            Ok(m) => {
                // Completeness: every slice element must lie in the ideal.
                let complete = ideal_slice.iter().all(|f| m.contains(f, 1).holds());
                if complete {
                    Some(m)
                } else {
                    None
                }
            }
            Err(_) => None,
        }
    };

    Ok(ComplexOrbit {
        ideal_slice,
        manifold,
        holomorphic_generators: gens,
        jet_order,
        word_cap,
        stabilized,
    })
}

/// Contact order between `S` and a formal variety `V`: the largest
/// `k <= jet_order` with `R in I(V) + m^k`, computed in the shear
/// coordinates of `V` (the reported value is the max `k` of the definition).
pub fn contact_order(
    s: &Hypersurface,
    v: &FormalSubmanifold,
    jet_order: u32,
) -> Result<TypeValue> {
    let r = s.defining_series();
    if v.codim() == 0 {
        // Zero ideal: the valuation of r itself (necessarily 1).
        return Ok(match r.valuation() {
            Some(val) => TypeValue::Finite(val),
            None => TypeValue::AtLeast(jet_order),
        });
    }
    // In shear coordinates the ideal becomes the pivot ideal and the maximal
    // ideal is preserved, so the contact order is the least total degree of
    // a pivot-free term of the pulled-back defining series.
    let shear: Vec<TruncatedSeries> = (0..v.context().len())
        .map(|u| {
            let xv = TruncatedSeries::variable(v.context(), u);
            match v.pivots().iter().position(|&p| p == u) {
                Some(i) => xv.add(v.graph(i)).expect("same context"),
                None => xv,
            }
        })
        .collect();
    let pulled = r.compose(&shear)?;
    let min_free = pulled
        .terms()
        .filter(|(m, _)| v.pivots().iter().all(|&p| m.0[p] == 0))
        .map(|(m, _)| m.degree())
        .min();
    Ok(match min_free {
        Some(k) => TypeValue::Finite(k),
        None => TypeValue::AtLeast(jet_order),
    })
}

/// Contact order against a jet-level ideal slice that is not known to be a
/// manifold ideal: exact linear algebra on degree-truncated spans of the
/// slice (and its conjugates) plus the maximal-ideal powers.
pub fn contact_order_jet(
    s: &Hypersurface,
    ideal_slice: &[TruncatedSeries],
    jet_order: u32,
) -> Result<TypeValue> {
    let ctx = s.context().clone();
    let r = s.defining_series();
    let all: Vec<usize> = (0..ctx.len()).collect();
    let monos = crate::cr::monomials_upto(ctx.len(), &all, jet_order);
    let mono_index: alloc::collections::BTreeMap<&Monomial, usize> =
        monos.iter().enumerate().map(|(i, m)| (m, i)).collect();

    // Degree-truncated span of ideal multiples, conjugates included.
    let mut basis: Vec<TruncatedSeries> = Vec::new();
    for f in ideal_slice {
        basis.push(f.clone());
        basis.push(f.conjugate());
    }
    let mut multiples: Vec<Vec<GaussianRational>> = Vec::new();
    for b in &basis {
        let bval = b.valuation().unwrap_or(0);
        for m in &monos {
            if m.degree() + bval > jet_order {
                continue;
            }
            let prod = b.mul_monomial(&m.0);
            let mut vec = alloc::vec![GaussianRational::zero(); monos.len()];
            for (pm, pc) in prod.terms() {
                if let Some(&i) = mono_index.get(pm) {
                    vec[i] = pc.clone();
                }
            }
            multiples.push(vec);
        }
    }
    let mut rvec = alloc::vec![GaussianRational::zero(); monos.len()];
    for (m, c) in r.terms() {
        if let Some(&i) = mono_index.get(m) {
            rvec[i] = c.clone();
        }
    }

    // max k with R|_{<k} in the projection of the span to degrees < k.
    let mut best = 0u32;
    for k in 1..=jet_order {
        let cols: Vec<usize> =
            (0..monos.len()).filter(|&i| monos[i].degree() < k).collect();
        let mut mat = Matrix::zeros(cols.len(), multiples.len());
        for (j, mult) in multiples.iter().enumerate() {
            for (ri, &ci) in cols.iter().enumerate() {
                mat.set(ri, j, mult[ci].clone());
            }
        }
        let target: Vec<GaussianRational> =
            cols.iter().map(|&ci| rvec[ci].clone()).collect();
        if mat.solve(&target).is_some() {
            best = k;
        } else {
            break;
        }
    }
    if best == jet_order {
        Ok(TypeValue::AtLeast(jet_order))
    } else {
        Ok(TypeValue::Finite(best))
    }
}

/// Contact type `a(E, p)`: the contact order between `S` and the complex
/// formal orbit of the frame.
pub fn contact_type(
    s: &Hypersurface,
    frame: &SubbundleFrame,
    jet_order: u32,
) -> Result<(TypeValue, ComplexOrbit)> {
    let orbit = complex_formal_orbit(s, frame.fields(), jet_order)?;
    let value = match &orbit.manifold {
        Some(v) => contact_order(s, v, jet_order)?,
        None => contact_order_jet(s, &orbit.ideal_slice, jet_order)?,
    };
    Ok((value, orbit))
}

/// Real formal orbit of a frame: the orbit of the Lie algebra generated by
/// the real and imaginary parts of the frame fields. Verifies the inclusion
/// of the orbit in the hypersurface jet (`R in I(O)`).
pub fn real_formal_orbit(
    s: &Hypersurface,
    frame: &SubbundleFrame,
) -> Result<FormalSubmanifold> {
    let mut gens = Vec::with_capacity(2 * frame.rank());
    for l in frame.fields() {
        gens.push(l.real_part());
        gens.push(l.imag_part());
    }
    let o = lie_orbit(&gens, FieldKind::Real, s.jet_order())?;
    if matches!(o.contains(s.defining_series(), 1), crate::manifold::Membership::NotIn) {
        return Err(crate::error::CoreError::Precondition(
            alloc::string::String::from("real formal orbit escapes the hypersurface jet"),
        ));
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::VariableContext;
    use alloc::sync::Arc;

    fn hypersurface_from(
        ctx: &Arc<VariableContext>,
        r: TruncatedSeries,
        order: u32,
    ) -> Hypersurface {
        Hypersurface::new(r, order).unwrap()
    }

    /// r = -w - zeta_w + (z zeta)^k in C^2.
    fn graded_model(k: u32) -> (Arc<VariableContext>, Hypersurface) {
        let ctx = VariableContext::complexified(&["z", "w"]);
        let z = TruncatedSeries::variable(&ctx, 0);
        let w = TruncatedSeries::variable(&ctx, 1);
        let zeta = TruncatedSeries::variable(&ctx, 2);
        let zeta_w = TruncatedSeries::variable(&ctx, 3);
        let r = w
            .neg()
            .sub(&zeta_w)
            .unwrap()
            .add(&z.mul(&zeta).unwrap().pow(k).unwrap())
            .unwrap();
        let s = hypersurface_from(&ctx, r, 10);
        (ctx, s)
    }

    #[test]
    fn heisenberg_types_are_two() {
        let (_, s) = graded_model(1);
        let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
        assert_eq!(commutator_type(&s, &frame, 6).unwrap(), TypeValue::Finite(2));
        assert_eq!(levi_type(&s, &frame, 6).unwrap(), TypeValue::Finite(2));
    }

    #[test]
    fn graded_model_types_are_2k() {
        for k in [2u32, 3] {
            let (_, s) = graded_model(k);
            let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
            assert_eq!(
                commutator_type(&s, &frame, 8).unwrap(),
                TypeValue::Finite(2 * k),
                "commutator type at k={k}"
            );
            assert_eq!(
                levi_type(&s, &frame, 8).unwrap(),
                TypeValue::Finite(2 * k),
                "levi type at k={k}"
            );
        }
    }

    #[test]
    fn levi_flat_types_hit_the_bound() {
        let ctx = VariableContext::complexified(&["z", "w"]);
        let w = TruncatedSeries::variable(&ctx, 1);
        let zeta_w = TruncatedSeries::variable(&ctx, 3);
        let r = w.neg().sub(&zeta_w).unwrap();
        let s = hypersurface_from(&ctx, r, 10);
        let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
        assert_eq!(commutator_type(&s, &frame, 6).unwrap(), TypeValue::AtLeast(6));
        assert_eq!(levi_type(&s, &frame, 6).unwrap(), TypeValue::AtLeast(6));
    }

    #[test]
    fn complex_orbit_of_levi_flat_frame_is_the_line() {
        let ctx = VariableContext::complexified(&["z", "w"]);
        let w = TruncatedSeries::variable(&ctx, 1);
        let zeta_w = TruncatedSeries::variable(&ctx, 3);
        let r = w.clone().neg().sub(&zeta_w).unwrap();
        let s = hypersurface_from(&ctx, r, 8);
        let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
        let orbit = complex_formal_orbit(&s, frame.fields(), 6).unwrap();
        assert_eq!(orbit.holomorphic_generators.len(), 1);
        assert_eq!(orbit.holomorphic_generators[0].render(), "w");
        assert!(orbit.manifold.is_some());
    }

    #[test]
    fn complex_orbit_of_sigma_closed_heisenberg_frame_is_zero_ideal() {
        // Passing the sigma-closed frame {L, sigma L} makes the word
        // functionals span the full jet dual: zero ideal at every order.
        let (_, s) = graded_model(1);
        let l = s.tangent_frame().unwrap().remove(0);
        let fields = alloc::vec![l.clone(), l.conjugate()];
        let orbit = complex_formal_orbit(&s, &fields, 5).unwrap();
        assert!(orbit.ideal_slice.is_empty());
        assert_eq!(orbit.manifold.as_ref().map(|m| m.codim()), Some(0));
    }

    #[test]
    fn heisenberg_pure_frame_orbit_is_the_line_and_contact_two() {
        let (_, s) = graded_model(1);
        let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
        let (a, orbit) = contact_type(&s, &frame, 8).unwrap();
        assert_eq!(orbit.holomorphic_generators.len(), 1);
        assert_eq!(orbit.holomorphic_generators[0].render(), "w");
        assert_eq!(a, TypeValue::Finite(2));
    }

    #[test]
    fn graded_model_contact_type_is_2k() {
        for k in [2u32, 3] {
            let (_, s) = graded_model(k);
            let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
            let (a, _) = contact_type(&s, &frame, 8).unwrap();
            assert_eq!(a, TypeValue::Finite(2 * k), "contact type at k={k}");
        }
    }

    #[test]
    fn contact_order_examples() {
        // V = complex line {w=0}: Heisenberg has contact 2, the k=2 model 4.
        let (ctx, s1) = graded_model(1);
        let w = TruncatedSeries::variable(&ctx, 1);
        let zeta_w = TruncatedSeries::variable(&ctx, 3);
        let v = FormalSubmanifold::from_generators(
            &ctx,
            &[w, zeta_w],
            FieldKind::Real,
            8,
        )
        .unwrap();
        assert_eq!(contact_order(&s1, &v, 8).unwrap(), TypeValue::Finite(2));
        let (_, s2) = graded_model(2);
        assert_eq!(contact_order(&s2, &v, 8).unwrap(), TypeValue::Finite(4));
    }

    #[test]
    fn real_orbit_of_heisenberg_frame_is_the_full_jet() {
        let (_, s) = graded_model(1);
        let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
        let o = real_formal_orbit(&s, &frame).unwrap();
        assert_eq!(o.dim(), 3);
    }

    #[test]
    fn real_orbit_of_levi_flat_frame_is_the_complex_line() {
        let ctx = VariableContext::complexified(&["z", "w"]);
        let w = TruncatedSeries::variable(&ctx, 1);
        let zeta_w = TruncatedSeries::variable(&ctx, 3);
        let r = w.neg().sub(&zeta_w).unwrap();
        let s = hypersurface_from(&ctx, r, 8);
        let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
        let o = real_formal_orbit(&s, &frame).unwrap();
        assert_eq!(o.dim(), 2);
        assert_eq!(o.pivots(), &[1, 3]);
    }
}
