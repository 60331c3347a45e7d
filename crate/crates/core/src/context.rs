//! Variable contexts: ordered variable names, the conjugation pairing, weights.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::scalar::Rational;

/// How a variable behaves under the formal conjugation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// A holomorphic coordinate `z_j`; paired with its `AntiHolo` partner.
    Holo,
    /// The formal conjugate `zeta_j` of a holomorphic coordinate.
    AntiHolo,
    /// A real coordinate or parameter; self-paired under `sigma`.
    Real,
}

/// An ordered list of variables with an involutive conjugation pairing and
/// strictly positive weights (default 1). The order of the list is the fixed
/// global variable order: it drives the graded-lex term order and every
/// deterministic pivot choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableContext {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    /// `conj[v]` is the index of the sigma-partner of `v` (itself for real vars).
    conj: Vec<usize>,
    weights: Vec<Rational>,
}

impl VariableContext {
    /// All-real variables, each self-paired.
    pub fn real(names: &[&str]) -> Arc<Self> {
        let n = names.len();
        Arc::new(Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            kinds: alloc::vec![VarKind::Real; n],
            conj: (0..n).collect(),
            weights: alloc::vec![Rational::one(); n],
        })
    }

    /// A complexified context: for each name `z` in `holo` the variable `z`
    /// followed (in the second block) by its conjugate named `prefix + z`.
    /// Layout: `z_1, ..., z_m, zeta_1, ..., zeta_m`.
    pub fn complexified(holo: &[&str]) -> Arc<Self> {
        let m = holo.len();
        let mut names: Vec<String> = holo.iter().map(|s| s.to_string()).collect();
        for s in holo {
            names.push(alloc::format!("zeta_{s}"));
        }
        let mut kinds = alloc::vec![VarKind::Holo; m];
        kinds.extend(alloc::vec![VarKind::AntiHolo; m]);
        let conj = (0..2 * m).map(|v| if v < m { v + m } else { v - m }).collect();
        Arc::new(Self { names, kinds, conj, weights: alloc::vec![Rational::one(); 2 * m] })
    }

    /// Fully custom construction. `conj` must be an involution compatible
    /// with `kinds`, and weights strictly positive.
    pub fn new(
        names: Vec<String>,
        kinds: Vec<VarKind>,
        conj: Vec<usize>,
        weights: Vec<Rational>,
    ) -> Arc<Self> {
        let n = names.len();
        assert_eq!(kinds.len(), n);
        assert_eq!(conj.len(), n);
        assert_eq!(weights.len(), n);
        for v in 0..n {
            assert!(conj[v] < n && conj[conj[v]] == v, "conjugation must be an involution");
            match kinds[v] {
                VarKind::Real => assert_eq!(conj[v], v),
                VarKind::Holo => assert_eq!(kinds[conj[v]], VarKind::AntiHolo),
                VarKind::AntiHolo => assert_eq!(kinds[conj[v]], VarKind::Holo),
            }
            assert!(weights[v].is_positive(), "weights must be strictly positive");
        }
        Arc::new(Self { names, kinds, conj, weights })
    }

    /// A context extending `self` with real parameters prepended.
    /// Layout: `t_0, ..., t_{k-1}, <original variables>`.
    pub fn with_parameters(self: &Arc<Self>, params: &[&str]) -> Arc<Self> {
        let k = params.len();
        let mut names: Vec<String> = params.iter().map(|s| s.to_string()).collect();
        names.extend(self.names.iter().cloned());
        let mut kinds = alloc::vec![VarKind::Real; k];
        kinds.extend(self.kinds.iter().copied());
        let mut conj: Vec<usize> = (0..k).collect();
        conj.extend(self.conj.iter().map(|&c| c + k));
        let mut weights = alloc::vec![Rational::one(); k];
        weights.extend(self.weights.iter().cloned());
        VariableContext::new(names, kinds, conj, weights)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn kind(&self, v: usize) -> VarKind {
        self.kinds[v]
    }

    pub fn conj_of(&self, v: usize) -> usize {
        self.conj[v]
    }

    pub fn weight(&self, v: usize) -> &Rational {
        &self.weights[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Indices of the holomorphic variables, in order.
    pub fn holo_vars(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.kinds[v] == VarKind::Holo).collect()
    }

    /// Weight of an exponent vector: sum of `alpha_v * weight_v`.
    pub fn weight_of(&self, exps: &[u32]) -> Rational {
        let mut w = Rational::new(BigInt::from(0), BigInt::from(1));
        for (v, &e) in exps.iter().enumerate() {
            if e > 0 {
                w += self.weights[v].clone() * Rational::from_integer(BigInt::from(e));
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexified_pairing_is_involutive() {
        let ctx = VariableContext::complexified(&["z", "w"]);
        assert_eq!(ctx.len(), 4);
        assert_eq!(ctx.name(2), "zeta_z");
        for v in 0..4 {
            assert_eq!(ctx.conj_of(ctx.conj_of(v)), v);
        }
        assert_eq!(ctx.kind(0), VarKind::Holo);
        assert_eq!(ctx.kind(3), VarKind::AntiHolo);
    }

    #[test]
    fn parameters_prepend() {
        let ctx = VariableContext::complexified(&["z"]);
        let ext = ctx.with_parameters(&["t0", "t1"]);
        assert_eq!(ext.len(), 4);
        assert_eq!(ext.name(0), "t0");
        assert_eq!(ext.name(2), "z");
        assert_eq!(ext.conj_of(2), 3);
        assert_eq!(ext.kind(1), VarKind::Real);
    }
}
