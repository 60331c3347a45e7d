//! Truncated multivariate formal power series over the Gaussian rationals.
//!
//! A series carries its own reliable order: every monomial of total degree
//! `<= N` is exactly correct and no stored term exceeds that degree. `Exact`
//! marks a polynomial with no truncation error at all; operations propagate
//! the tightest provable order. Zero coefficients are never stored, so
//! equality up to the reliable order is plain structural equality.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::Neg;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::context::VariableContext;
use crate::error::{CoreError, Result};
use crate::scalar::{GaussianRational, Rational};

/// Dense exponent vector ordered by graded lex: total degree first, then
/// lexicographic with earlier variables more significant.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn unit(nvars: usize) -> Self {
        Monomial(alloc::vec![0; nvars])
    }

    pub fn var(nvars: usize, v: usize) -> Self {
        let mut e = alloc::vec![0; nvars];
        e[v] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        // Graded lex, ascending in total degree; within a degree the earlier
        // variables carry higher powers first (so `z^2` precedes `zeta^2`).
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Reliable order of a series. `Finite(n)` means all terms of total degree
/// `<= n` are correct; `Exact` means the series is a polynomial with no
/// truncation error. `Finite(a) < Finite(b) < Exact` for `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Finite(u32),
    Exact,
}

impl Order {
    pub fn min_with(self, other: Order) -> Order {
        core::cmp::min(self, other)
    }

    /// Does this order certify all degrees `<= d`?
    pub fn covers(self, d: u32) -> bool {
        match self {
            Order::Exact => true,
            Order::Finite(n) => n >= d,
        }
    }

    pub fn decrement(self) -> Order {
        match self {
            Order::Exact => Order::Exact,
            Order::Finite(n) => Order::Finite(n.saturating_sub(1)),
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Order::Exact)
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Exact => write!(f, "exact"),
            Order::Finite(n) => write!(f, "{n}"),
        }
    }
}

/// A truncated formal power series in the variables of a shared context.
#[derive(Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    ctx: Arc<VariableContext>,
    terms: BTreeMap<Monomial, GaussianRational>,
    order: Order,
}

impl TruncatedSeries {
    pub fn zero(ctx: &Arc<VariableContext>, order: Order) -> Self {
        Self { ctx: ctx.clone(), terms: BTreeMap::new(), order }
    }

    pub fn constant(ctx: &Arc<VariableContext>, c: GaussianRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::unit(ctx.len()), c);
        }
        Self { ctx: ctx.clone(), terms, order: Order::Exact }
    }

    pub fn one(ctx: &Arc<VariableContext>) -> Self {
        Self::constant(ctx, GaussianRational::one())
    }

    pub fn variable(ctx: &Arc<VariableContext>, v: usize) -> Self {
        assert!(v < ctx.len());
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::var(ctx.len(), v), GaussianRational::one());
        Self { ctx: ctx.clone(), terms, order: Order::Exact }
    }

    pub fn monomial(
        ctx: &Arc<VariableContext>,
        exps: &[u32],
        c: GaussianRational,
    ) -> Self {
        assert_eq!(exps.len(), ctx.len());
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial(exps.to_vec()), c);
        }
        Self { ctx: ctx.clone(), terms, order: Order::Exact }
    }

    pub fn from_terms(
        ctx: &Arc<VariableContext>,
        terms: impl IntoIterator<Item = (Vec<u32>, GaussianRational)>,
        order: Order,
    ) -> Self {
        let mut s = Self::zero(ctx, order);
        for (exps, c) in terms {
            assert_eq!(exps.len(), ctx.len());
            s.add_term(Monomial(exps), c);
        }
        s
    }

    pub fn context(&self) -> &Arc<VariableContext> {
        &self.ctx
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Identically zero, not just zero up to truncation.
    pub fn is_exactly_zero(&self) -> bool {
        self.terms.is_empty() && self.order.is_exact()
    }

    pub fn coeff(&self, exps: &[u32]) -> GaussianRational {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(GaussianRational::zero)
    }

    pub fn constant_term(&self) -> GaussianRational {
        self.coeff(&alloc::vec![0; self.ctx.len()])
    }

    /// Minimal total degree of a stored term; `None` for the zero series.
    pub fn valuation(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).min()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    fn add_term(&mut self, m: Monomial, c: GaussianRational) {
        if c.is_zero() || !self.order.covers(m.degree()) {
            return;
        }
        use alloc::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn check_ctx(&self, other: &Self) -> Result<()> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(CoreError::MismatchedContexts)
        }
    }

    /// Drop terms above `order` and lower the reliable order accordingly.
    pub fn truncated(&self, order: Order) -> Self {
        let order = self.order.min_with(order);
        let mut s = Self::zero(&self.ctx, order);
        for (m, c) in &self.terms {
            if order.covers(m.degree()) {
                s.terms.insert(m.clone(), c.clone());
            }
        }
        s
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let mut s = self.truncated(other.order);
        for (m, c) in &other.terms {
            s.add_term(m.clone(), c.clone());
        }
        Ok(s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut s = Self::zero(&self.ctx, self.order);
        for (m, c) in &self.terms {
            s.terms.insert(m.clone(), c.clone().neg());
        }
        s
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        let mut s = Self::zero(&self.ctx, self.order);
        if c.is_zero() {
            return s;
        }
        for (m, co) in &self.terms {
            s.terms.insert(m.clone(), co * c);
        }
        s
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        let order = self.order.min_with(other.order);
        let mut s = Self::zero(&self.ctx, order);
        for (ma, ca) in &self.terms {
            if !order.covers(ma.degree()) {
                continue;
            }
            for (mb, cb) in &other.terms {
                let d = ma.degree() + mb.degree();
                if !order.covers(d) {
                    break; // other.terms ascends in graded order
                }
                s.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(s)
    }

    /// Multiply by an exact monomial. Unlike general `mul`, the reliable
    /// order rises by the monomial degree: unknown tail terms are shifted up
    /// with everything else.
    pub fn mul_monomial(&self, exps: &[u32]) -> Self {
        assert_eq!(exps.len(), self.ctx.len());
        let mono = Monomial(exps.to_vec());
        let d = mono.degree();
        let order = match self.order {
            Order::Exact => Order::Exact,
            Order::Finite(n) => Order::Finite(n.saturating_add(d)),
        };
        let mut s = Self::zero(&self.ctx, order);
        for (m, c) in &self.terms {
            s.terms.insert(m.mul(&mono), c.clone());
        }
        s
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::one(&self.ctx).truncated(self.order);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Exact partial derivative. Reliable order drops by one.
    pub fn differentiate(&self, v: usize) -> Self {
        assert!(v < self.ctx.len());
        let mut s = Self::zero(&self.ctx, self.order.decrement());
        for (m, c) in &self.terms {
            let e = m.0[v];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[v] = e - 1;
            let factor = GaussianRational::from_int(e as i64);
            s.add_term(Monomial(exps), c * &factor);
        }
        s
    }

    /// Formal conjugation `sigma`: conjugate coefficients and swap each
    /// variable with its pairing partner. An involution.
    pub fn conjugate(&self) -> Self {
        let mut s = Self::zero(&self.ctx, self.order);
        for (m, c) in &self.terms {
            let mut exps = alloc::vec![0u32; self.ctx.len()];
            for (v, &e) in m.0.iter().enumerate() {
                exps[self.ctx.conj_of(v)] += e;
            }
            s.add_term(Monomial(exps), c.conj());
        }
        s
    }

    /// Is the series fixed by `sigma` on all stored terms?
    pub fn is_real(&self) -> bool {
        self.conjugate() == *self
    }

    /// Real part `(f + sigma f)/2`.
    pub fn real_part(&self) -> Self {
        self.add(&self.conjugate())
            .expect("same context")
            .scale(&GaussianRational::from_ratio(1, 2))
    }

    /// Imaginary part `(f - sigma f)/(2i)`.
    pub fn imag_part(&self) -> Self {
        let minus_i_half = GaussianRational::new(
            Rational::zero(),
            Rational::new(BigInt::from(-1), BigInt::from(2)),
        );
        self.sub(&self.conjugate()).expect("same context").scale(&minus_i_half)
    }

    /// Substitute a series (over a common target context) for every variable.
    /// Each substituted series must have zero constant term so the result is
    /// well defined order by order.
    pub fn compose(&self, subst: &[TruncatedSeries]) -> Result<TruncatedSeries> {
        assert_eq!(subst.len(), self.ctx.len(), "one series per variable");
        let target_ctx = match subst.first() {
            Some(s) => s.context().clone(),
            None => self.ctx.clone(),
        };
        for (v, s) in subst.iter().enumerate() {
            if *s.context() != target_ctx {
                return Err(CoreError::MismatchedContexts);
            }
            if !s.constant_term().is_zero() {
                return Err(CoreError::NonzeroConstantTerm(String::from(self.ctx.name(v))));
            }
        }

        // Which variables can actually contribute: all of them if the series
        // is truncated (the unknown tail may contain any variable).
        let relevant: Vec<bool> = if self.order.is_exact() {
            let mut used = alloc::vec![false; self.ctx.len()];
            for m in self.terms.keys() {
                for (v, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        used[v] = true;
                    }
                }
            }
            used
        } else {
            alloc::vec![true; self.ctx.len()]
        };

        // Tightest provable order.
        let mut order = Order::Exact;
        // Valuation lower bound of each substituted series (tail included).
        let vals: Vec<u64> = subst
            .iter()
            .map(|s| match (s.valuation(), s.order) {
                (Some(v), _) => v as u64,
                (None, Order::Exact) => u64::MAX, // exactly zero
                (None, Order::Finite(n)) => n as u64 + 1,
            })
            .collect();
        for (v, s) in subst.iter().enumerate() {
            if !relevant[v] {
                continue;
            }
            if let Order::Finite(n) = s.order {
                order = order.min_with(Order::Finite(n));
            }
        }
        if let Order::Finite(nf) = self.order {
            let valmin = (0..subst.len())
                .filter(|&v| relevant[v])
                .map(|v| vals[v])
                .min()
                .unwrap_or(u64::MAX);
            let bound = if valmin == u64::MAX {
                Order::Exact
            } else {
                let through = (nf as u64 + 1).saturating_mul(valmin).saturating_sub(1);
                Order::Finite(through.min(u32::MAX as u64) as u32)
            };
            order = order.min_with(bound);
        }

        let mut acc = TruncatedSeries::zero(&target_ctx, order);
        // Power cache per variable.
        let mut pow_cache: Vec<BTreeMap<u32, TruncatedSeries>> =
            (0..subst.len()).map(|_| BTreeMap::new()).collect();
        for (m, c) in &self.terms {
            let mut term = TruncatedSeries::constant(&target_ctx, c.clone()).truncated(order);
            for (v, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !pow_cache[v].contains_key(&e) {
                    let p = subst[v].truncated(order).pow(e)?;
                    pow_cache[v].insert(e, p);
                }
                term = term.mul(&pow_cache[v][&e])?;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// The identity substitution for a context.
    pub fn identity_subst(ctx: &Arc<VariableContext>) -> Vec<TruncatedSeries> {
        (0..ctx.len()).map(|v| TruncatedSeries::variable(ctx, v)).collect()
    }

    /// Multiplicative inverse of a unit series, reliable through `target`.
    pub fn invert(&self, target: u32) -> Result<TruncatedSeries> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(CoreError::NotAUnit);
        }
        let order = self.order.min_with(Order::Finite(target));
        // f = c0 (1 - s) with val(s) >= 1; 1/f = (1/c0) sum s^k.
        let c0_inv = c0.inv();
        let s_full = TruncatedSeries::constant(&self.ctx, GaussianRational::one())
            .sub(&self.scale(&c0_inv))?;
        if s_full.is_exactly_zero() {
            // Constant series invert exactly.
            return Ok(TruncatedSeries::constant(&self.ctx, c0_inv));
        }
        let s = s_full.truncated(order);
        let mut acc = TruncatedSeries::one(&self.ctx).truncated(order);
        let mut p = TruncatedSeries::one(&self.ctx).truncated(order);
        let n = match order {
            Order::Finite(n) => n,
            Order::Exact => target,
        };
        for _ in 0..n {
            p = p.mul(&s)?;
            if p.is_zero() {
                break;
            }
            acc = acc.add(&p)?;
        }
        Ok(acc.scale(&c0_inv))
    }

    /// Weighted-homogeneous component of weight exactly `k`. Errors if any
    /// stored term has weight strictly below `k`.
    pub fn lowest_weighted_component(
        &self,
        weights: &[Rational],
        k: &Rational,
    ) -> Result<TruncatedSeries> {
        assert_eq!(weights.len(), self.ctx.len());
        for w in weights {
            assert!(w.is_positive(), "weights must be positive");
        }
        let mut s = Self::zero(&self.ctx, self.order);
        for (m, c) in &self.terms {
            let mut wt = Rational::zero();
            for (v, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    wt += weights[v].clone() * Rational::from_integer(BigInt::from(e));
                }
            }
            match wt.cmp(k) {
                Ordering::Less => return Err(CoreError::TermsBelowWeight),
                Ordering::Equal => {
                    s.terms.insert(m.clone(), c.clone());
                }
                Ordering::Greater => {}
            }
        }
        Ok(s)
    }

    /// Rewrite a polynomial in coordinates centred at `p`: the result `g`
    /// satisfies `g(x) = f(x + p)` exactly. Errors on truncated input.
    pub fn recentre(&self, p: &[GaussianRational]) -> Result<TruncatedSeries> {
        if !self.order.is_exact() {
            return Err(CoreError::NotPolynomial);
        }
        assert_eq!(p.len(), self.ctx.len());
        let mut acc = TruncatedSeries::zero(&self.ctx, Order::Exact);
        for (m, c) in &self.terms {
            let mut term = TruncatedSeries::constant(&self.ctx, c.clone());
            for (v, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                // (x_v + p_v)^e
                let shifted = TruncatedSeries::variable(&self.ctx, v)
                    .add(&TruncatedSeries::constant(&self.ctx, p[v].clone()))?;
                term = term.mul(&shifted.pow(e)?)?;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Exact evaluation of a polynomial at a point.
    pub fn eval(&self, p: &[GaussianRational]) -> Result<GaussianRational> {
        if !self.order.is_exact() {
            return Err(CoreError::NotPolynomial);
        }
        assert_eq!(p.len(), self.ctx.len());
        let mut acc = GaussianRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    t = &t * &p[v];
                }
            }
            acc += &t;
        }
        Ok(acc)
    }

    /// Coefficient of the degree-1 term in variable `v` (the differential at 0).
    pub fn linear_coeff(&self, v: usize) -> GaussianRational {
        let mut exps = alloc::vec![0u32; self.ctx.len()];
        exps[v] = 1;
        self.coeff(&exps)
    }

    /// Canonical text rendering: terms ascending in graded-lex order, exact
    /// rationals as `p/q`, imaginary unit spelled `i`.
    pub fn render(&self) -> String {
        use alloc::format;
        if self.terms.is_empty() {
            return String::from("0");
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let coeff = c.render();
            let (sign, mag) = if let Some(stripped) = coeff.strip_prefix('-') {
                if c.is_real() || c.re.is_zero() {
                    ("-", String::from(stripped))
                } else {
                    ("+", coeff.clone())
                }
            } else {
                ("+", coeff.clone())
            };
            if i == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(if sign == "-" { " - " } else { " + " });
            }
            let mut mono = String::new();
            for (v, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !mono.is_empty() {
                    mono.push('*');
                }
                mono.push_str(self.ctx.name(v));
                if e > 1 {
                    mono.push_str(&format!("^{e}"));
                }
            }
            if mono.is_empty() {
                out.push_str(&mag);
            } else if mag == "1" {
                out.push_str(&mono);
            } else {
                out.push_str(&format!("{mag}*{mono}"));
            }
        }
        out
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Debug for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (order {})", self.render(), self.order)
    }
}

/// Formal implicit function theorem in graph form: given generators `gens`
/// vanishing at 0 whose Jacobian in the `pivots` columns is invertible at 0,
/// solve each pivot variable as a series in the remaining variables so that
/// substituting the graphs into every generator yields 0 up to the reliable
/// order. The returned series are indexed like `pivots` and involve no pivot
/// variable.
pub fn graph_solve(
    gens: &[TruncatedSeries],
    pivots: &[usize],
    target: u32,
) -> Result<Vec<TruncatedSeries>> {
    assert_eq!(gens.len(), pivots.len(), "square system required");
    let k = pivots.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let ctx = gens[0].context().clone();
    for g in gens {
        if *g.context() != ctx {
            return Err(CoreError::MismatchedContexts);
        }
        if !g.constant_term().is_zero() {
            return Err(CoreError::Precondition(String::from(
                "generators must vanish at 0",
            )));
        }
    }
    for (i, &p) in pivots.iter().enumerate() {
        assert!(p < ctx.len());
        assert!(!pivots[..i].contains(&p), "pivots must be distinct");
    }

    // Jacobian in the pivot columns at 0.
    let jac: Vec<Vec<GaussianRational>> = gens
        .iter()
        .map(|g| pivots.iter().map(|&p| g.linear_coeff(p)).collect())
        .collect();
    let jac_inv = crate::linalg::Matrix::from_rows(jac)
        .inverse()
        .ok_or(CoreError::SingularJacobian)?;

    let order = gens
        .iter()
        .map(|g| g.order)
        .fold(Order::Finite(target), Order::min_with);
    let n_target = match order {
        Order::Finite(n) => n,
        Order::Exact => target,
    };

    // Shortcut: system linear in the pivots with constant coefficients.
    let linear_in_pivots = gens.iter().all(|g| {
        g.terms().all(|(m, _)| {
            let pivot_deg: u32 = pivots.iter().map(|&p| m.0[p]).sum();
            pivot_deg == 0 || (pivot_deg == 1 && m.degree() == 1)
        })
    });
    if linear_in_pivots {
        // gens = J * x_pivots + G(free); solution x_pivots = -J^{-1} G.
        let rest: Vec<TruncatedSeries> = gens
            .iter()
            .map(|g| {
                let mut s = TruncatedSeries::zero(&ctx, g.order);
                for (m, c) in g.terms() {
                    let pivot_deg: u32 = pivots.iter().map(|&p| m.0[p]).sum();
                    if pivot_deg == 0 {
                        s.terms.insert(m.clone(), c.clone());
                    }
                }
                s
            })
            .collect();
        let mut solution = Vec::with_capacity(k);
        for i in 0..k {
            let mut phi = TruncatedSeries::zero(&ctx, rest[0].order);
            for (j, r) in rest.iter().enumerate() {
                phi = phi.add(&r.scale(&jac_inv.get(i, j).clone().neg()))?;
            }
            solution.push(phi);
        }
        return Ok(solution);
    }

    // Kantorovich iteration with the constant Jacobian inverse: the solved
    // order grows by at least one per step.
    let work = Order::Finite(n_target);
    let mut phi: Vec<TruncatedSeries> =
        (0..k).map(|_| TruncatedSeries::zero(&ctx, work)).collect();
    for _step in 0..=n_target {
        let subst: Vec<TruncatedSeries> = (0..ctx.len())
            .map(|v| match pivots.iter().position(|&p| p == v) {
                Some(i) => phi[i].clone(),
                None => TruncatedSeries::variable(&ctx, v).truncated(work),
            })
            .collect();
        let residuals: Vec<TruncatedSeries> = gens
            .iter()
            .map(|g| g.truncated(work).compose(&subst))
            .collect::<Result<_>>()?;
        if residuals.iter().all(|r| r.is_zero()) {
            break;
        }
        for i in 0..k {
            let mut corr = TruncatedSeries::zero(&ctx, work);
            for (j, r) in residuals.iter().enumerate() {
                corr = corr.add(&r.scale(&jac_inv.get(i, j).clone().neg()))?;
            }
            phi[i] = phi[i].add(&corr)?;
        }
    }

    // Mark exact when the generators are exact and the residual vanishes
    // identically without truncation.
    let all_exact = gens.iter().all(|g| g.order.is_exact());
    if all_exact {
        let subst_exact: Vec<TruncatedSeries> = (0..ctx.len())
            .map(|v| match pivots.iter().position(|&p| p == v) {
                Some(i) => TruncatedSeries {
                    ctx: ctx.clone(),
                    terms: phi[i].terms.clone(),
                    order: Order::Exact,
                },
                None => TruncatedSeries::variable(&ctx, v),
            })
            .collect();
        let exact_residuals: Result<Vec<TruncatedSeries>> =
            gens.iter().map(|g| g.compose(&subst_exact)).collect();
        if let Ok(rs) = exact_residuals {
            if rs.iter().all(|r| r.is_exactly_zero()) {
                return Ok(pivots.iter().map(|&p| subst_exact[p].clone()).collect());
            }
        }
    }

    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy_ctx() -> Arc<VariableContext> {
        VariableContext::real(&["x", "y"])
    }

    fn gr(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    #[test]
    fn difference_of_squares() {
        let ctx = VariableContext::real(&["x"]);
        let one = TruncatedSeries::one(&ctx);
        let x = TruncatedSeries::variable(&ctx, 0);
        let a = one.add(&x).unwrap();
        let b = one.sub(&x).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!(p.render(), "1 - x^2");
        assert!(p.order().is_exact());
    }

    #[test]
    fn additive_identity() {
        let ctx = xy_ctx();
        let f = TruncatedSeries::from_terms(
            &ctx,
            [(alloc::vec![2, 1], gr(3)), (alloc::vec![0, 1], gr(-1))],
            Order::Finite(5),
        );
        let z = TruncatedSeries::zero(&ctx, Order::Finite(9));
        let s = f.add(&z).unwrap();
        assert_eq!(s.terms, f.terms);
        assert_eq!(s.order(), Order::Finite(5));
    }

    #[test]
    fn squares_cross_terms_cancel() {
        // (z+zeta)^2 + (z-zeta)^2 = 2 z^2 + 2 zeta^2
        let ctx = VariableContext::complexified(&["z"]);
        let z = TruncatedSeries::variable(&ctx, 0);
        let zeta = TruncatedSeries::variable(&ctx, 1);
        let s = z.add(&zeta).unwrap().pow(2).unwrap();
        let d = z.sub(&zeta).unwrap().pow(2).unwrap();
        let sum = s.add(&d).unwrap();
        assert_eq!(sum.render(), "2*z^2 + 2*zeta_z^2");
    }

    #[test]
    fn derivative_basics() {
        let ctx = VariableContext::complexified(&["z"]);
        let z = TruncatedSeries::variable(&ctx, 0);
        let zeta = TruncatedSeries::variable(&ctx, 1);
        let f = z.pow(2).unwrap().mul(&zeta).unwrap();
        assert_eq!(f.differentiate(0).render(), "2*z*zeta_z");
        let c = TruncatedSeries::constant(&ctx, gr(7));
        assert!(c.differentiate(0).is_zero());
        // d/dz (z+zeta)^3 = 3 (z+zeta)^2
        let g = z.add(&zeta).unwrap().pow(3).unwrap();
        let expect = z.add(&zeta).unwrap().pow(2).unwrap().scale(&gr(3));
        assert_eq!(g.differentiate(0), expect);
    }

    #[test]
    fn compose_expansion() {
        // f(x) = x^2, x -> t + t^2 gives t^2 + 2t^3 + t^4
        let ctx = VariableContext::real(&["x"]);
        let tctx = VariableContext::real(&["t"]);
        let f = TruncatedSeries::variable(&ctx, 0).pow(2).unwrap();
        let t = TruncatedSeries::variable(&tctx, 0);
        let sub = t.add(&t.pow(2).unwrap()).unwrap();
        let g = f.compose(&[sub]).unwrap();
        assert_eq!(g.render(), "t^2 + 2*t^3 + t^4");
        assert!(g.order().is_exact());
    }

    #[test]
    fn compose_identity_is_identity() {
        let ctx = xy_ctx();
        let f = TruncatedSeries::from_terms(
            &ctx,
            [(alloc::vec![1, 2], gr(5)), (alloc::vec![3, 0], gr(-2))],
            Order::Finite(6),
        );
        let id = TruncatedSeries::identity_subst(&ctx);
        assert_eq!(f.compose(&id).unwrap(), f);
    }

    #[test]
    fn compose_monomial_valuations() {
        // f(x,y) = x y, x -> t, y -> t^2 gives t^3
        let ctx = xy_ctx();
        let tctx = VariableContext::real(&["t"]);
        let f = TruncatedSeries::from_terms(&ctx, [(alloc::vec![1, 1], gr(1))], Order::Exact);
        let t = TruncatedSeries::variable(&tctx, 0);
        let g = f.compose(&[t.clone(), t.pow(2).unwrap()]).unwrap();
        assert_eq!(g.render(), "t^3");
    }

    #[test]
    fn compose_rejects_constant_terms() {
        let ctx = VariableContext::real(&["x"]);
        let f = TruncatedSeries::variable(&ctx, 0);
        let bad = TruncatedSeries::one(&ctx);
        assert!(matches!(
            f.compose(&[bad]),
            Err(CoreError::NonzeroConstantTerm(_))
        ));
    }

    #[test]
    fn conjugation_rules() {
        let ctx = VariableContext::complexified(&["z"]);
        let z = TruncatedSeries::variable(&ctx, 0);
        let zeta = TruncatedSeries::variable(&ctx, 1);
        // sigma(i z) = -i zeta
        let f = z.scale(&GaussianRational::i());
        assert_eq!(f.conjugate(), zeta.scale(&GaussianRational::i()).neg());
        // sigma(z zeta) = z zeta
        let m = z.mul(&zeta).unwrap();
        assert!(m.is_real());
    }

    #[test]
    fn sigma_is_an_involution_and_antihomomorphism() {
        let ctx = VariableContext::complexified(&["z", "w"]);
        let f = TruncatedSeries::from_terms(
            &ctx,
            [
                (alloc::vec![1, 0, 2, 0], GaussianRational::new(
                    Rational::new(BigInt::from(1), BigInt::from(3)),
                    Rational::new(BigInt::from(-1), BigInt::from(2)),
                )),
                (alloc::vec![0, 1, 0, 1], gr(2)),
            ],
            Order::Finite(7),
        );
        let g = TruncatedSeries::from_terms(
            &ctx,
            [(alloc::vec![0, 0, 1, 1], GaussianRational::i())],
            Order::Finite(7),
        );
        assert_eq!(f.conjugate().conjugate(), f);
        assert_eq!(
            f.mul(&g).unwrap().conjugate(),
            f.conjugate().mul(&g.conjugate()).unwrap()
        );
        let c = GaussianRational::new(
            Rational::new(BigInt::from(2), BigInt::from(5)),
            Rational::new(BigInt::from(1), BigInt::from(1)),
        );
        assert_eq!(f.scale(&c).conjugate(), f.conjugate().scale(&c.conj()));
    }

    #[test]
    fn graph_solve_already_graph() {
        let ctx = xy_ctx();
        // F = y - x^2, pivot y
        let f = TruncatedSeries::variable(&ctx, 1)
            .sub(&TruncatedSeries::variable(&ctx, 0).pow(2).unwrap())
            .unwrap();
        let sol = graph_solve(&[f.clone()], &[1], 8).unwrap();
        assert_eq!(sol[0].render(), "x^2");
        assert!(sol[0].order().is_exact());
    }

    #[test]
    fn graph_solve_geometric_series() {
        let ctx = xy_ctx();
        // F = y + y x - x, pivot y: y = x - x^2 + x^3 - ...
        let x = TruncatedSeries::variable(&ctx, 0);
        let y = TruncatedSeries::variable(&ctx, 1);
        let f = y.add(&y.mul(&x).unwrap()).unwrap().sub(&x).unwrap();
        let sol = graph_solve(&[f.clone()], &[1], 5).unwrap();
        assert_eq!(sol[0].render(), "x - x^2 + x^3 - x^4 + x^5");
        // Substituting back annihilates F up to the reliable order.
        let subst = alloc::vec![x.truncated(Order::Finite(5)), sol[0].clone()];
        assert!(f.compose(&subst).unwrap().is_zero());
    }

    #[test]
    fn graph_solve_singular_is_an_error() {
        let ctx = VariableContext::real(&["x"]);
        let f = TruncatedSeries::variable(&ctx, 0).pow(2).unwrap();
        assert_eq!(graph_solve(&[f], &[0], 5), Err(CoreError::SingularJacobian));
    }

    #[test]
    fn lowest_weighted_component_selects() {
        let ctx = xy_ctx();
        // f = x^2 + y^3, weights (1,1), k=2 -> x^2
        let f = TruncatedSeries::from_terms(
            &ctx,
            [(alloc::vec![2, 0], gr(1)), (alloc::vec![0, 3], gr(1))],
            Order::Exact,
        );
        let w = alloc::vec![Rational::from_integer(BigInt::from(1)); 2];
        let k = Rational::from_integer(BigInt::from(2));
        assert_eq!(f.lowest_weighted_component(&w, &k).unwrap().render(), "x^2");
        // terms below k error out
        let k3 = Rational::from_integer(BigInt::from(3));
        assert_eq!(
            f.lowest_weighted_component(&w, &k3),
            Err(CoreError::TermsBelowWeight)
        );
        // f = x^2 y + x^5 with weights (1,2): k=4 picks x^2 y
        let g = TruncatedSeries::from_terms(
            &ctx,
            [(alloc::vec![2, 1], gr(1)), (alloc::vec![5, 0], gr(1))],
            Order::Exact,
        );
        let w2 = alloc::vec![
            Rational::from_integer(BigInt::from(1)),
            Rational::from_integer(BigInt::from(2)),
        ];
        let k4 = Rational::from_integer(BigInt::from(4));
        assert_eq!(g.lowest_weighted_component(&w2, &k4).unwrap().render(), "x^2*y");
    }

    #[test]
    fn recentre_examples() {
        let ctx = VariableContext::real(&["x"]);
        let f = TruncatedSeries::variable(&ctx, 0).pow(2).unwrap();
        let g = f.recentre(&[gr(1)]).unwrap();
        assert_eq!(g.render(), "1 + 2*x + x^2");
        // p = 0 leaves f unchanged
        assert_eq!(f.recentre(&[gr(0)]).unwrap(), f);

        let ctx2 = xy_ctx();
        let xy = TruncatedSeries::from_terms(&ctx2, [(alloc::vec![1, 1], gr(1))], Order::Exact);
        let h = xy.recentre(&[gr(1), gr(-1)]).unwrap();
        assert_eq!(h.render(), "-1 - x + y + x*y");

        let trunc = TruncatedSeries::zero(&ctx, Order::Finite(3));
        assert_eq!(trunc.recentre(&[gr(1)]), Err(CoreError::NotPolynomial));
    }

    #[test]
    fn invert_unit_series() {
        let ctx = VariableContext::real(&["x"]);
        let one = TruncatedSeries::one(&ctx);
        let x = TruncatedSeries::variable(&ctx, 0);
        let f = one.add(&x).unwrap();
        let inv = f.invert(4).unwrap();
        assert_eq!(inv.render(), "1 - x + x^2 - x^3 + x^4");
        assert!(f.mul(&inv).unwrap().sub(&one.truncated(Order::Finite(4))).unwrap().is_zero());
    }

    #[test]
    fn mul_order_is_min() {
        let ctx = VariableContext::real(&["x"]);
        let a = TruncatedSeries::variable(&ctx, 0).truncated(Order::Finite(3));
        let b = TruncatedSeries::variable(&ctx, 0).truncated(Order::Finite(7));
        assert_eq!(a.mul(&b).unwrap().order(), Order::Finite(3));
    }
}
