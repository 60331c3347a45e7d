//! Formal vector fields: derivations with truncated series coefficients.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::context::{VarKind, VariableContext};
use crate::error::{CoreError, Result};
use crate::scalar::GaussianRational;
use crate::series::{Order, TruncatedSeries};

/// `L = sum_j a_j(x) d/dx_j` with one coefficient series per ambient variable.
#[derive(Clone, PartialEq, Eq)]
pub struct FormalVectorField {
    coeffs: Vec<TruncatedSeries>,
}

impl FormalVectorField {
    pub fn new(coeffs: Vec<TruncatedSeries>) -> Self {
        assert!(!coeffs.is_empty());
        let ctx = coeffs[0].context().clone();
        assert_eq!(coeffs.len(), ctx.len(), "one coefficient per variable");
        for c in &coeffs {
            assert_eq!(**c.context(), *ctx, "coefficients share the context");
        }
        Self { coeffs }
    }

    pub fn zero(ctx: &Arc<VariableContext>, order: Order) -> Self {
        Self::new((0..ctx.len()).map(|_| TruncatedSeries::zero(ctx, order)).collect())
    }

    /// The coordinate field `d/dx_v`.
    pub fn coordinate(ctx: &Arc<VariableContext>, v: usize) -> Self {
        let mut f = Self::zero(ctx, Order::Exact);
        f.coeffs[v] = TruncatedSeries::one(ctx);
        f
    }

    pub fn context(&self) -> &Arc<VariableContext> {
        self.coeffs[0].context()
    }

    pub fn coeff(&self, v: usize) -> &TruncatedSeries {
        &self.coeffs[v]
    }

    pub fn coeffs(&self) -> &[TruncatedSeries] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, v: usize, s: TruncatedSeries) {
        assert_eq!(*s.context(), *self.context());
        self.coeffs[v] = s;
    }

    pub fn order(&self) -> Order {
        self.coeffs.iter().map(|c| c.order()).fold(Order::Exact, Order::min_with)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Apply the derivation to a series (Leibniz rule holds term for term).
    pub fn apply(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        let ctx = self.context();
        if **f.context() != **ctx {
            return Err(CoreError::MismatchedContexts);
        }
        let mut acc = TruncatedSeries::zero(ctx, self.order().min_with(f.order().decrement()));
        for v in 0..ctx.len() {
            if self.coeffs[v].is_zero() {
                continue;
            }
            acc = acc.add(&self.coeffs[v].mul(&f.differentiate(v))?)?;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.neg()).collect())
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        Self::new(self.coeffs.iter().map(|s| s.scale(c)).collect())
    }

    /// Multiply by a series: `(f L)(g) = f (L g)`.
    pub fn mul_series(&self, f: &TruncatedSeries) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.mul(f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(coeffs))
    }

    /// Lie bracket `[self, other]`: antisymmetric, satisfies Jacobi up to
    /// the reliable order.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        let ctx = self.context().clone();
        let mut coeffs = Vec::with_capacity(ctx.len());
        for v in 0..ctx.len() {
            let a = self.apply(&other.coeffs[v])?;
            let b = other.apply(&self.coeffs[v])?;
            coeffs.push(a.sub(&b)?);
        }
        Ok(Self::new(coeffs))
    }

    /// Conjugated field: `sigma(L) g = sigma(L(sigma g))`; coefficients are
    /// conjugated as series and moved to the partner variable slot.
    pub fn conjugate(&self) -> Self {
        let ctx = self.context().clone();
        let mut coeffs = alloc::vec![
            TruncatedSeries::zero(&ctx, self.order());
            ctx.len()
        ];
        for v in 0..ctx.len() {
            coeffs[ctx.conj_of(v)] = self.coeffs[v].conjugate();
        }
        Self::new(coeffs)
    }

    pub fn is_real(&self) -> bool {
        self.conjugate() == *self
    }

    /// `(L + sigma L)/2`.
    pub fn real_part(&self) -> Self {
        self.add(&self.conjugate())
            .expect("same context")
            .scale(&GaussianRational::from_ratio(1, 2))
    }

    /// `(L - sigma L)/(2i)`, i.e. the real field `Re(iL)` up to sign
    /// conventions: `Im L = (L - sigma L) / (2i)`.
    pub fn imag_part(&self) -> Self {
        let minus_i_half = GaussianRational::i().inv().scale_half();
        self.sub(&self.conjugate()).expect("same context").scale(&minus_i_half)
    }

    /// The complex structure `J`: multiplies holomorphic components by `i`
    /// and antiholomorphic ones by `-i`. Panics on real (unpaired) variables
    /// with nonzero coefficient.
    pub fn apply_j(&self) -> Self {
        let ctx = self.context().clone();
        let i = GaussianRational::i();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(v, c)| match ctx.kind(v) {
                VarKind::Holo => c.scale(&i),
                VarKind::AntiHolo => c.scale(&i.conj()),
                VarKind::Real => {
                    assert!(c.is_zero(), "J undefined on real coordinate directions");
                    c.clone()
                }
            })
            .collect();
        Self::new(coeffs)
    }

    /// Is this a (1,0) field: coefficients only on holomorphic directions?
    pub fn is_holomorphic_type(&self) -> bool {
        let ctx = self.context();
        self.coeffs
            .iter()
            .enumerate()
            .all(|(v, c)| ctx.kind(v) == VarKind::Holo || c.is_zero())
    }

    /// Values of the coefficients at 0.
    pub fn value_at_origin(&self) -> Vec<GaussianRational> {
        self.coeffs.iter().map(|c| c.constant_term()).collect()
    }

    pub fn truncated(&self, order: Order) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.truncated(order)).collect())
    }
}

trait ScaleHalf {
    fn scale_half(self) -> GaussianRational;
}

impl ScaleHalf for GaussianRational {
    fn scale_half(self) -> GaussianRational {
        &self * &GaussianRational::from_ratio(1, 2)
    }
}

impl core::fmt::Debug for FormalVectorField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let ctx = self.context();
        let mut first = true;
        for (v, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})∂_{}", c.render(), ctx.name(v))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::VariableContext;

    #[test]
    fn leibniz_rule() {
        let ctx = VariableContext::real(&["x", "y"]);
        let x = TruncatedSeries::variable(&ctx, 0);
        let y = TruncatedSeries::variable(&ctx, 1);
        let l = FormalVectorField::new(alloc::vec![y.clone(), x.mul(&x).unwrap()]);
        let f = x.pow(2).unwrap().add(&y.pow(3).unwrap()).unwrap();
        let g = x.mul(&y).unwrap();
        let lhs = l.apply(&f.mul(&g).unwrap()).unwrap();
        let rhs = l.apply(&f).unwrap().mul(&g).unwrap().add(&f.mul(&l.apply(&g).unwrap()).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn bracket_antisymmetry_and_jacobi() {
        let ctx = VariableContext::real(&["x", "y"]);
        let x = TruncatedSeries::variable(&ctx, 0);
        let y = TruncatedSeries::variable(&ctx, 1);
        let one = TruncatedSeries::one(&ctx);
        let zero = TruncatedSeries::zero(&ctx, Order::Exact);
        let a = FormalVectorField::new(alloc::vec![one.clone(), x.clone()]);
        let b = FormalVectorField::new(alloc::vec![y.clone(), zero.clone()]);
        let c = FormalVectorField::new(alloc::vec![x.mul(&y).unwrap(), one.clone()]);
        let ab = a.bracket(&b).unwrap();
        let ba = b.bracket(&a).unwrap();
        assert_eq!(ab, ba.neg());
        let jac = a
            .bracket(&b.bracket(&c).unwrap())
            .unwrap()
            .add(&b.bracket(&c.bracket(&a).unwrap()).unwrap())
            .unwrap()
            .add(&c.bracket(&a.bracket(&b).unwrap()).unwrap())
            .unwrap();
        assert!(jac.is_zero());
    }

    #[test]
    fn bracket_example_produces_dy() {
        // [d_x, x^2 d_y] = 2x d_y, and [d_x, [d_x, x^2 d_y]] = 2 d_y.
        let ctx = VariableContext::real(&["x", "y"]);
        let dx = FormalVectorField::coordinate(&ctx, 0);
        let x2dy = FormalVectorField::coordinate(&ctx, 1)
            .mul_series(&TruncatedSeries::variable(&ctx, 0).pow(2).unwrap())
            .unwrap();
        let b1 = dx.bracket(&x2dy).unwrap();
        let b2 = dx.bracket(&b1).unwrap();
        assert_eq!(b2, FormalVectorField::coordinate(&ctx, 1).scale(&GaussianRational::from_int(2)));
    }

    #[test]
    fn conjugate_swaps_slots() {
        let ctx = VariableContext::complexified(&["z"]);
        let zeta = TruncatedSeries::variable(&ctx, 1);
        // L = zeta d_z; sigma L = z d_zeta.
        let mut l = FormalVectorField::zero(&ctx, Order::Exact);
        l.set_coeff(0, zeta);
        let s = l.conjugate();
        assert!(s.coeff(0).is_zero());
        assert_eq!(s.coeff(1), &TruncatedSeries::variable(&ctx, 0));
        assert_eq!(s.conjugate(), l);
    }
}
