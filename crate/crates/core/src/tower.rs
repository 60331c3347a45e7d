//! Theta-dual forms, towers and the tower multitype.
//!
//! A tower is a nested sequence of subbundles of `H10 S`, each cut out of
//! the previous one by a dual form of recorded order; the tower multitype is
//! the lexicographically minimum multi-order over towers. The search is a
//! branch-and-bound: at each stage, words over the section menu of the
//! current frame are enumerated by increasing order, all minimal-order forms
//! that survive at the base point are collected, and the search branches
//! over the distinct kernels they cut; branches that cannot beat the
//! incumbent are pruned.

use alloc::vec::Vec;

use crate::error::Result;
use crate::hypersurface::{section_menu, Hypersurface, SectionPick, SubbundleFrame};
use crate::scalar::GaussianRational;
use crate::series::TruncatedSeries;
use crate::types::TypeValue;
use crate::vecfield::FormalVectorField;

/// A theta-dual form produced from a word of section picks; `order_t` is the
/// word length plus one. For `order_t = 2` the value is the Levi contraction
/// `theta([. , L1])`; for higher orders the form is the differential of the
/// real dual function restricted to `H10`.
pub struct DualForm {
    /// Outermost-first picks: `word[0]` is `L^t`, the last entry is `L^1`.
    pub word: Vec<SectionPick>,
    /// Use `Re(i g)` instead of `Re(g)` for the dual function.
    pub imag_variant: bool,
    pub order_t: u32,
    /// Values of the form on the ambient default `H10` frame (series).
    pub components: Vec<TruncatedSeries>,
    /// The real dual function, present when `order_t >= 3`.
    pub dual_function: Option<TruncatedSeries>,
}

/// Evaluate the dual-form data of a word over a frame.
///
/// For a word `(L^t, ..., L^1)` of length `t-1 >= 2` the dual function is
/// `f = Re(L^t ... L^3 theta([L^2, L^1]))` (with an `i` slipped in when
/// `imag_variant` is set, realizing the "multiply by i if necessary" case
/// split); the form value on a section `xi` is `(xi f)`.
pub fn theta_dual_form(
    s: &Hypersurface,
    frame: &SubbundleFrame,
    word: &[SectionPick],
    imag_variant: bool,
) -> Result<DualForm> {
    assert!(!word.is_empty());
    let order_t = word.len() as u32 + 1;
    let ambient = SubbundleFrame::new(s, s.tangent_frame()?)?;
    if order_t == 2 {
        // Levi contraction against the single pick.
        let l1 = word[0].realize(frame);
        let components = ambient
            .fields()
            .iter()
            .map(|f| s.theta_contract(&f.bracket(&l1)?))
            .collect::<Result<Vec<_>>>()?;
        return Ok(DualForm {
            word: word.to_vec(),
            imag_variant: false,
            order_t,
            components,
            dual_function: None,
        });
    }
    let fields: Vec<FormalVectorField> =
        word.iter().map(|p| p.realize(frame)).collect();
    let n = fields.len();
    let mut g = s.theta_contract(&fields[n - 2].bracket(&fields[n - 1])?)?;
    for idx in (0..n - 2).rev() {
        g = fields[idx].apply(&g)?;
    }
    if imag_variant {
        g = g.scale(&GaussianRational::i());
    }
    let f = g.real_part();
    let components = ambient
        .fields()
        .iter()
        .map(|l| l.apply(&f))
        .collect::<Result<Vec<_>>>()?;
    Ok(DualForm {
        word: word.to_vec(),
        imag_variant,
        order_t,
        components,
        dual_function: Some(f),
    })
}

/// One stage of a tower certificate.
pub struct TowerStage {
    pub order_t: u32,
    pub word: Vec<SectionPick>,
    pub imag_variant: bool,
    /// Value covector of the chosen form on the stage frame at the base
    /// point (length = rank of the previous frame).
    pub covector: Vec<GaussianRational>,
    /// Value covector on the ambient default H10 frame at the base point.
    pub ambient_covector: Vec<GaussianRational>,
    /// The associated real dual function (orders >= 3).
    pub dual_function: Option<TruncatedSeries>,
    /// Frame of the cut subbundle, as coefficient combinations over the
    /// previous stage frame.
    pub kernel_in_prev: Vec<Vec<GaussianRational>>,
}

/// A tower certificate: the stages actually constructed, with frames.
pub struct Tower {
    pub stages: Vec<TowerStage>,
    /// Frames `E_0, E_1, ..., E_m` (E_0 is the ambient H10 frame).
    pub frames: Vec<Vec<FormalVectorField>>,
}

/// The tower multitype with its witnessing tower and the search bounds.
pub struct Multitype {
    pub entries: Vec<TypeValue>,
    pub certificate: Tower,
    pub word_bound: u32,
    pub jet_order: u32,
}

impl Multitype {
    pub fn render_entries(&self) -> alloc::string::String {
        use alloc::string::ToString;
        let parts: Vec<alloc::string::String> =
            self.entries.iter().map(|e| e.to_string()).collect();
        alloc::format!("({})", parts.join(","))
    }
}

/// `q`-finiteness of a multitype tuple: fewer than `q` entries are infinite
/// at the search bound. The verdict is only meaningful at the bounds used.
pub fn q_finite(entries: &[TypeValue], q: usize) -> bool {
    entries.iter().filter(|e| !e.is_finite()).count() < q
}

/// Lexicographic comparison with `AtLeast` greater than every finite entry.
fn lex_less(a: &[TypeValue], b: &[TypeValue]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        let (fx, fy) = (entry_key(x), entry_key(y));
        if fx != fy {
            return fx < fy;
        }
    }
    false
}

fn entry_key(e: &TypeValue) -> u64 {
    match e {
        TypeValue::Finite(t) => *t as u64,
        TypeValue::AtLeast(_) => u64::MAX,
    }
}

struct SearchCtx<'a> {
    s: &'a Hypersurface,
    word_bound: u32,
    jet_order: u32,
    n_entries: usize,
    best: Option<(Vec<TypeValue>, Tower)>,
}

/// Candidate forms at a stage: the minimal order with nonvanishing forms on
/// the current frame, and the distinct kernels they cut.
struct StageCandidates {
    order_t: u32,
    /// (word, imag_variant, covector on the frame).
    forms: Vec<(Vec<SectionPick>, bool, Vec<GaussianRational>)>,
}

fn find_stage_candidates(
    s: &Hypersurface,
    frame: &SubbundleFrame,
    word_bound: u32,
) -> Result<Option<StageCandidates>> {
    let menu = section_menu(frame.rank());
    let realized: Vec<FormalVectorField> =
        menu.iter().map(|p| p.realize(frame)).collect();

    // order 2: Levi contractions.
    let mut found: Vec<(Vec<SectionPick>, bool, Vec<GaussianRational>)> = Vec::new();
    for (pi, pick) in menu.iter().enumerate() {
        let mut cov = Vec::with_capacity(frame.rank());
        let mut nonzero = false;
        for e in frame.fields() {
            let v = s
                .theta_contract(&e.bracket(&realized[pi])?)?
                .constant_term();
            nonzero |= !v.is_zero();
            cov.push(v);
        }
        if nonzero {
            found.push((alloc::vec![pick.clone()], false, cov));
        }
    }
    if !found.is_empty() {
        return Ok(Some(StageCandidates { order_t: 2, forms: found }));
    }

    // Higher orders: maintain the level of series
    //   g_word = L^s ... L^3 theta([L^2, L^1])
    // keyed by the word suffix, and extend outward one field at a time.
    let mut level: Vec<(Vec<usize>, TruncatedSeries)> = Vec::new();
    for (i2, l2) in realized.iter().enumerate() {
        for (i1, l1) in realized.iter().enumerate() {
            let g = s.theta_contract(&l2.bracket(l1)?)?;
            level.push((alloc::vec![i2, i1], g));
        }
    }
    for t in 3..=word_bound {
        // Words of length t-1: the stored words already have length t-2 in
        // indices (suffix) -- test them with each real-part variant.
        let mut found: Vec<(Vec<SectionPick>, bool, Vec<GaussianRational>)> = Vec::new();
        for (suffix, g) in &level {
            for imag in [false, true] {
                let cand = if imag {
                    g.scale(&GaussianRational::i()).real_part()
                } else {
                    g.real_part()
                };
                let mut cov = Vec::with_capacity(frame.rank());
                let mut nonzero = false;
                for e in frame.fields() {
                    let v = e.apply(&cand)?.constant_term();
                    nonzero |= !v.is_zero();
                    cov.push(v);
                }
                if nonzero {
                    let word: Vec<SectionPick> =
                        suffix.iter().map(|&i| menu[i].clone()).collect();
                    found.push((word, imag, cov));
                }
            }
        }
        if !found.is_empty() {
            return Ok(Some(StageCandidates { order_t: t, forms: found }));
        }
        if t == word_bound {
            break;
        }
        let mut next = Vec::with_capacity(level.len() * realized.len());
        for (suffix, g) in &level {
            for (i, l) in realized.iter().enumerate() {
                let mut word = alloc::vec![i];
                word.extend(suffix.iter().copied());
                next.push((word, l.apply(g)?));
            }
        }
        level = next;
    }
    Ok(None)
}

fn search_stage(
    ctx: &mut SearchCtx<'_>,
    frames: Vec<Vec<FormalVectorField>>,
    stages: Vec<TowerStage>,
    prefix: Vec<TypeValue>,
) -> Result<()> {
    let frame_fields = frames.last().unwrap().clone();
    // Prune: even the best possible completion (all 2s) cannot beat the
    // incumbent.
    if let Some((best_entries, _)) = &ctx.best {
        let mut optimistic = prefix.clone();
        while optimistic.len() < ctx.n_entries {
            optimistic.push(TypeValue::Finite(2));
        }
        if !lex_less(&optimistic, best_entries) {
            return Ok(());
        }
    }

    if frame_fields.is_empty() {
        // Complete tower: all entries assigned.
        debug_assert_eq!(prefix.len(), ctx.n_entries);
        finish(ctx, prefix, frames, stages);
        return Ok(());
    }

    let frame = SubbundleFrame::new(ctx.s, frame_fields.clone())?;
    let candidates = find_stage_candidates(ctx.s, &frame, ctx.word_bound)?;
    match candidates {
        None => {
            // No form within the bound: the tower stops here; remaining
            // entries are at least the bound.
            let mut entries = prefix;
            while entries.len() < ctx.n_entries {
                entries.push(TypeValue::AtLeast(ctx.word_bound));
            }
            finish(ctx, entries, frames, stages);
            Ok(())
        }
        Some(cands) => {
            // Branch over distinct kernels, in discovery order.
            let mut seen: Vec<Vec<GaussianRational>> = Vec::new();
            for (word, imag, cov) in cands.forms {
                let norm = normalize_covector(&cov);
                if seen.contains(&norm) {
                    continue;
                }
                seen.push(norm);
                // Kernel of the covector inside the frame span.
                let kernel = covector_kernel(&cov);
                let next_frame: Vec<FormalVectorField> = kernel
                    .iter()
                    .map(|combo| {
                        let mut acc: Option<FormalVectorField> = None;
                        for (c, f) in combo.iter().zip(&frame_fields) {
                            if c.is_zero() {
                                continue;
                            }
                            let part = f.scale(c);
                            acc = Some(match acc {
                                None => part,
                                Some(a) => a.add(&part).expect("ctx"),
                            });
                        }
                        acc.unwrap_or_else(|| {
                            FormalVectorField::zero(
                                ctx.s.context(),
                                crate::series::Order::Exact,
                            )
                        })
                    })
                    .filter(|f| !f.is_zero())
                    .collect();
                debug_assert_eq!(next_frame.len(), frame_fields.len() - 1);

                let form = theta_dual_form(ctx.s, &frame, &word, imag)?;
                let ambient_covector = form
                    .components
                    .iter()
                    .map(|c| c.constant_term())
                    .collect();
                let stage = TowerStage {
                    order_t: cands.order_t,
                    word,
                    imag_variant: imag,
                    covector: cov.clone(),
                    ambient_covector,
                    dual_function: form.dual_function,
                    kernel_in_prev: kernel,
                };
                let mut new_frames = frames.clone();
                new_frames.push(next_frame);
                let mut new_stages = stages.clone();
                new_stages.push(stage);
                let mut new_prefix = prefix.clone();
                new_prefix.push(TypeValue::Finite(cands.order_t));
                search_stage(ctx, new_frames, new_stages, new_prefix)?;
            }
            Ok(())
        }
    }
}

fn finish(
    ctx: &mut SearchCtx<'_>,
    entries: Vec<TypeValue>,
    frames: Vec<Vec<FormalVectorField>>,
    stages: Vec<TowerStage>,
) {
    let better = match &ctx.best {
        None => true,
        Some((best_entries, _)) => lex_less(&entries, best_entries),
    };
    if better {
        ctx.best = Some((entries, Tower { stages, frames }));
    }
}

fn normalize_covector(cov: &[GaussianRational]) -> Vec<GaussianRational> {
    let lead = cov.iter().find(|c| !c.is_zero()).expect("nonzero covector");
    let inv = lead.inv();
    cov.iter().map(|c| c * &inv).collect()
}

fn covector_kernel(cov: &[GaussianRational]) -> Vec<Vec<GaussianRational>> {
    crate::linalg::Matrix::from_rows(alloc::vec![cov.to_vec()]).kernel()
}

impl Clone for TowerStage {
    fn clone(&self) -> Self {
        Self {
            order_t: self.order_t,
            word: self.word.clone(),
            imag_variant: self.imag_variant,
            covector: self.covector.clone(),
            ambient_covector: self.ambient_covector.clone(),
            dual_function: self.dual_function.clone(),
            kernel_in_prev: self.kernel_in_prev.clone(),
        }
    }
}

/// Compute the tower multitype at the base point by lexicographic
/// branch-and-bound over towers built from the section menu.
pub fn tower_multitype(
    s: &Hypersurface,
    word_bound: u32,
    jet_order: u32,
) -> Result<Multitype> {
    assert!(word_bound >= 2);
    let ambient = s.tangent_frame()?;
    let n_entries = ambient.len();
    let mut ctx = SearchCtx { s, word_bound, jet_order, n_entries, best: None };
    search_stage(&mut ctx, alloc::vec![ambient], Vec::new(), Vec::new())?;
    let (entries, certificate) = ctx.best.expect("search always yields a candidate");
    Ok(Multitype { entries, certificate, word_bound, jet_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::VariableContext;
    use alloc::sync::Arc;

    fn graded_model(k: u32) -> Hypersurface {
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
        Hypersurface::new(r, 10).unwrap()
    }

    pub(crate) fn example_1_11() -> Hypersurface {
        // r = -w - zeta_w + z1 zeta1 z2 zeta2 in C^3 (flat term as zero jet).
        let ctx = VariableContext::complexified(&["z1", "z2", "w"]);
        let z1 = TruncatedSeries::variable(&ctx, 0);
        let z2 = TruncatedSeries::variable(&ctx, 1);
        let w = TruncatedSeries::variable(&ctx, 2);
        let zeta1 = TruncatedSeries::variable(&ctx, 3);
        let zeta2 = TruncatedSeries::variable(&ctx, 4);
        let zeta_w = TruncatedSeries::variable(&ctx, 5);
        let quartic = z1
            .mul(&zeta1)
            .unwrap()
            .mul(&z2.mul(&zeta2).unwrap())
            .unwrap();
        let r = w.neg().sub(&zeta_w).unwrap().add(&quartic).unwrap();
        Hypersurface::new(r, 8).unwrap()
    }

    #[test]
    fn heisenberg_multitype_is_two() {
        let s = graded_model(1);
        let m = tower_multitype(&s, 4, 8).unwrap();
        assert_eq!(m.entries, alloc::vec![TypeValue::Finite(2)]);
    }

    #[test]
    fn graded_models_multitype_is_2k() {
        for k in [2u32, 3] {
            let s = graded_model(k);
            let m = tower_multitype(&s, 2 * k + 1, 8).unwrap();
            assert_eq!(m.entries, alloc::vec![TypeValue::Finite(2 * k)], "k={k}");
        }
    }

    #[test]
    fn levi_flat_multitype_hits_bound() {
        let ctx = VariableContext::complexified(&["z", "w"]);
        let w = TruncatedSeries::variable(&ctx, 1);
        let zeta_w = TruncatedSeries::variable(&ctx, 3);
        let r = w.neg().sub(&zeta_w).unwrap();
        let s = Hypersurface::new(r, 8).unwrap();
        let m = tower_multitype(&s, 4, 8).unwrap();
        assert_eq!(m.entries, alloc::vec![TypeValue::AtLeast(4)]);
    }

    #[test]
    fn example_1_11_multitype_is_4_4() {
        let s = example_1_11();
        let m = tower_multitype(&s, 4, 8).unwrap();
        assert_eq!(
            m.entries,
            alloc::vec![TypeValue::Finite(4), TypeValue::Finite(4)]
        );
        // Certificate: the first stage has order 4 and its form is
        // c (dz1 + dz2) up to scalar.
        let st = &m.certificate.stages[0];
        assert_eq!(st.order_t, 4);
        let cov = normalize_covector(&st.ambient_covector);
        assert_eq!(cov.len(), 2);
        assert_eq!(cov[0], GaussianRational::one());
        assert_eq!(cov[1], GaussianRational::one());
    }

    #[test]
    fn q_finiteness_counts() {
        let f = TypeValue::Finite(4);
        let inf = TypeValue::AtLeast(6);
        assert!(q_finite(&[f, f], 1));
        assert!(!q_finite(&[TypeValue::Finite(2), inf], 1));
        assert!(q_finite(&[TypeValue::Finite(2), inf], 2));
    }

    #[test]
    fn dual_form_order_two_is_levi_contraction() {
        let s = graded_model(1);
        let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
        let menu = section_menu(1);
        // word (sigma L): omega(L) = theta([L, sigma L]) = 1 at 0.
        let word = alloc::vec![menu[1].clone()];
        let form = theta_dual_form(&s, &frame, &word, false).unwrap();
        assert_eq!(form.order_t, 2);
        assert_eq!(form.components[0].constant_term(), GaussianRational::one());
    }

    #[test]
    fn example_1_11_paper_word_gives_dz1_plus_dz2() {
        // The combined section L = L1 + L2 with word (sigma L, L, sigma L)
        // yields a form with equal nonzero components on the frame.
        let s = example_1_11();
        let frame = SubbundleFrame::new(&s, s.tangent_frame().unwrap()).unwrap();
        let combined = SectionPick {
            coeffs: alloc::vec![GaussianRational::one(), GaussianRational::one()],
            conjugated: false,
        };
        let conj = SectionPick { conjugated: true, ..combined.clone() };
        let word = alloc::vec![conj.clone(), combined.clone(), conj];
        let form = theta_dual_form(&s, &frame, &word, false).unwrap();
        assert_eq!(form.order_t, 4);
        let v0 = form.components[0].constant_term();
        let v1 = form.components[1].constant_term();
        assert!(!v0.is_zero());
        assert_eq!(v0, v1);
        let _: &Arc<VariableContext> = s.context();
    }
}
