//! Symbolic expressions in jet coordinates `(x, u₀, u₁, …)` with smooth
//! coefficient fields: the Lagrangian densities, their vertical and total
//! derivatives, the vertical Euler field, and the Euler-Lagrange operator.
//!
//! Expressions print to a canonical prefix notation and parse back exactly.
//! The grammar:
//!
//! ```text
//! expr   := number | "x" | uvar | ident | "(" op ")"
//! op     := "+" expr expr* | "*" expr expr* | "^" expr int
//!         | ("sin" | "cos" | "exp") expr
//! uvar   := "u" digits                  — jet variable u_j
//! ident  := [A-Za-z_][A-Za-z0-9_']*     — coefficient field, bound by the
//!                                         parse environment
//! number := f64 literal as produced by Rust's Display
//! ```
//!
//! Simplification is rudimentary by design: sums and products are flattened,
//! constants folded, and syntactically identical terms with opposite signs
//! cancelled. Anything stronger is a computer-algebra project; the kernel
//! tests that rely on expressions vanishing do so numerically.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::jet::Jet;

/// Named smooth coefficient field appearing inside an expression.
#[derive(Debug, Clone)]
pub struct CoeffField {
    name: String,
    field: Arc<Field>,
}

impl PartialEq for CoeffField {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && *self.field == *other.field
    }
}

impl CoeffField {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
}

/// Unary smooth functions usable inside expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
}

impl UnaryFn {
    fn apply(self, v: f64) -> f64 {
        match self {
            UnaryFn::Sin => v.sin(),
            UnaryFn::Cos => v.cos(),
            UnaryFn::Exp => v.exp(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
        }
    }
}

/// Expression tree over jet coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum JetExpr {
    Const(f64),
    /// The base-space coordinate x.
    X,
    /// Jet variable u_j, the j-th derivative coordinate.
    U(usize),
    /// A named coefficient field, sampled at the evaluation point.
    Coeff(CoeffField),
    Sum(Vec<JetExpr>),
    Prod(Vec<JetExpr>),
    /// Integer power of a subexpression.
    Pow(Box<JetExpr>, i32),
    Unary(UnaryFn, Box<JetExpr>),
}

/// Result of the Euler-Lagrange operator: the EL density and the boundary
/// current produced by the integration-by-parts bookkeeping (the telescoping
/// representative; `None` for order-zero densities).
#[derive(Debug, Clone, PartialEq)]
pub struct ElResult {
    pub expr: JetExpr,
    pub boundary_current: Option<JetExpr>,
}

fn valid_coeff_name(name: &str) -> bool {
    let mut chars = name.chars();
    let first_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    if !first_ok || !name.chars().skip(1).all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
    {
        return false;
    }
    if matches!(name, "x" | "sin" | "cos" | "exp") {
        return false;
    }
    // u followed by digits is a jet variable.
    let mut cs = name.chars();
    if cs.next() == Some('u') && name.len() > 1 && name.chars().skip(1).all(|c| c.is_ascii_digit())
    {
        return false;
    }
    true
}

impl JetExpr {
    pub fn constant(c: f64) -> JetExpr {
        assert!(c.is_finite(), "expression constants must be finite");
        JetExpr::Const(c)
    }

    pub fn x() -> JetExpr {
        JetExpr::X
    }

    pub fn u(j: usize) -> JetExpr {
        JetExpr::U(j)
    }

    pub fn coeff(name: &str, field: Field) -> Result<JetExpr> {
        if !valid_coeff_name(name) {
            return Err(Error::BadCoefficientName(name.to_string()));
        }
        Ok(JetExpr::Coeff(CoeffField {
            name: name.to_string(),
            field: Arc::new(field),
        }))
    }

    pub fn add(self, rhs: JetExpr) -> Result<JetExpr> {
        check_grids(&self, &rhs)?;
        Ok(JetExpr::Sum(vec![self, rhs]).normalized())
    }

    pub fn sub(self, rhs: JetExpr) -> Result<JetExpr> {
        self.add(rhs.neg())
    }

    pub fn mul(self, rhs: JetExpr) -> Result<JetExpr> {
        check_grids(&self, &rhs)?;
        Ok(JetExpr::Prod(vec![self, rhs]).normalized())
    }

    pub fn neg(self) -> JetExpr {
        JetExpr::Prod(vec![JetExpr::Const(-1.0), self]).normalized()
    }

    pub fn powi(self, n: i32) -> JetExpr {
        JetExpr::Pow(Box::new(self), n).normalized()
    }

    pub fn sin(self) -> JetExpr {
        JetExpr::Unary(UnaryFn::Sin, Box::new(self)).normalized()
    }

    pub fn cos(self) -> JetExpr {
        JetExpr::Unary(UnaryFn::Cos, Box::new(self)).normalized()
    }

    pub fn exp(self) -> JetExpr {
        JetExpr::Unary(UnaryFn::Exp, Box::new(self)).normalized()
    }

    /// Largest jet variable index appearing in the tree, if any.
    pub fn max_jet_order(&self) -> Option<usize> {
        match self {
            JetExpr::Const(_) | JetExpr::X | JetExpr::Coeff(_) => None,
            JetExpr::U(j) => Some(*j),
            JetExpr::Sum(v) | JetExpr::Prod(v) => v.iter().filter_map(|e| e.max_jet_order()).max(),
            JetExpr::Pow(b, _) | JetExpr::Unary(_, b) => b.max_jet_order(),
        }
    }

    /// Jet order needed for evaluation (0 when no jet variable appears).
    pub fn jet_order(&self) -> usize {
        self.max_jet_order().unwrap_or(0)
    }

    pub fn contains_x(&self) -> bool {
        match self {
            JetExpr::X => true,
            JetExpr::Const(_) | JetExpr::U(_) | JetExpr::Coeff(_) => false,
            JetExpr::Sum(v) | JetExpr::Prod(v) => v.iter().any(|e| e.contains_x()),
            JetExpr::Pow(b, _) | JetExpr::Unary(_, b) => b.contains_x(),
        }
    }

    /// The grid shared by all coefficient fields, if any appear.
    pub fn grid(&self) -> Option<GridSpec> {
        match self {
            JetExpr::Coeff(c) => Some(c.field.grid()),
            JetExpr::Const(_) | JetExpr::X | JetExpr::U(_) => None,
            JetExpr::Sum(v) | JetExpr::Prod(v) => v.iter().find_map(|e| e.grid()),
            JetExpr::Pow(b, _) | JetExpr::Unary(_, b) => b.grid(),
        }
    }

    /// Symbolic partial derivative with respect to the jet variable `u_j`,
    /// treating x and the other u_i as independent coordinates.
    pub fn vertical_derivative(&self, j: usize) -> JetExpr {
        let d = match self {
            JetExpr::Const(_) | JetExpr::X | JetExpr::Coeff(_) => JetExpr::Const(0.0),
            JetExpr::U(i) => JetExpr::Const(if *i == j { 1.0 } else { 0.0 }),
            JetExpr::Sum(v) => JetExpr::Sum(v.iter().map(|e| e.vertical_derivative(j)).collect()),
            JetExpr::Prod(v) => leibniz(v, &|e| e.vertical_derivative(j)),
            JetExpr::Pow(b, n) => power_rule(b, *n, &|e| e.vertical_derivative(j)),
            JetExpr::Unary(f, b) => chain_rule(*f, b, &|e| e.vertical_derivative(j)),
        };
        d.normalized()
    }

    /// Total derivative `D_x f = ∂f/∂x + Σ_j u_{j+1} ∂f/∂u_j`. Coefficient
    /// fields are differentiated spectrally, with a prime appended to the
    /// name.
    pub fn total_derivative(&self) -> JetExpr {
        let d = match self {
            JetExpr::Const(_) => JetExpr::Const(0.0),
            JetExpr::X => JetExpr::Const(1.0),
            JetExpr::U(j) => JetExpr::U(j + 1),
            JetExpr::Coeff(c) => JetExpr::Coeff(CoeffField {
                name: format!("{}'", c.name),
                field: Arc::new(
                    c.field
                        .derivative(1)
                        .expect("first spectral derivative is always within the guard"),
                ),
            }),
            JetExpr::Sum(v) => JetExpr::Sum(v.iter().map(|e| e.total_derivative()).collect()),
            JetExpr::Prod(v) => leibniz(v, &|e| e.total_derivative()),
            JetExpr::Pow(b, n) => power_rule(b, *n, &|e| e.total_derivative()),
            JetExpr::Unary(f, b) => chain_rule(*f, b, &|e| e.total_derivative()),
        };
        d.normalized()
    }

    /// Vertical Euler field `ρf = Σ_j u_j ∂f/∂u_j`.
    pub fn vertical_euler(&self) -> JetExpr {
        let k = match self.max_jet_order() {
            Some(k) => k,
            None => return JetExpr::Const(0.0),
        };
        let terms: Vec<JetExpr> = (0..=k)
            .map(|j| JetExpr::Prod(vec![JetExpr::U(j), self.vertical_derivative(j)]))
            .collect();
        JetExpr::Sum(terms).normalized()
    }

    /// Euler-Lagrange operator
    /// `EL(f) = Σ_{j=0}^{k} (-1)^j D_x^j (∂f/∂u_j)`,
    /// together with the boundary current from the integration-by-parts
    /// bookkeeping:
    /// `jc = Σ_{j≥1} Σ_{i=0}^{j-1} (-1)^i u_{j-1-i} D_x^i(∂f/∂u_j)`,
    /// which satisfies `ρf = u₀·EL(f) + D_x(jc)` identically.
    pub fn euler_lagrange(&self) -> ElResult {
        let k = self.max_jet_order().unwrap_or(0);
        let mut el_terms = Vec::new();
        let mut current_terms = Vec::new();
        for j in 0..=k {
            let fj = self.vertical_derivative(j);
            // D_x^i (∂f/∂u_j) for i = 0..=j
            let mut dstack = vec![fj];
            for _ in 0..j {
                let next = dstack.last().unwrap().total_derivative();
                dstack.push(next);
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            el_terms.push(JetExpr::Prod(vec![
                JetExpr::Const(sign),
                dstack[j].clone(),
            ]));
            for (i, d) in dstack.iter().take(j).enumerate() {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                current_terms.push(JetExpr::Prod(vec![
                    JetExpr::Const(s),
                    JetExpr::U(j - 1 - i),
                    d.clone(),
                ]));
            }
        }
        let expr = JetExpr::Sum(el_terms).normalized();
        let boundary_current = if current_terms.is_empty() {
            None
        } else {
            Some(JetExpr::Sum(current_terms).normalized())
        };
        ElResult {
            expr,
            boundary_current,
        }
    }

    /// Numerical value of the tree on a jet. Coefficient fields are sampled
    /// at the jet's base point, which must be one of their grid nodes.
    pub fn evaluate(&self, jet: &Jet) -> Result<f64> {
        if let Some(need) = self.max_jet_order() {
            if need > jet.order() {
                return Err(Error::JetOrderTooSmall {
                    need,
                    have: jet.order(),
                });
            }
        }
        self.eval_inner(&mut |j| jet.value(j), jet.base_point(), &mut |f| {
            f.value_at(jet.base_point())
        })
    }

    /// Fast path for quadrature: evaluate at grid node `idx` with jet values
    /// taken from a precomputed derivative stack.
    pub(crate) fn evaluate_at_node(&self, idx: usize, x: f64, stack: &[Field]) -> f64 {
        match self {
            JetExpr::Const(c) => *c,
            JetExpr::X => x,
            JetExpr::U(j) => stack[*j].value_at_node(idx),
            JetExpr::Coeff(c) => c.field.value_at_node(idx),
            JetExpr::Sum(v) => v.iter().map(|e| e.evaluate_at_node(idx, x, stack)).sum(),
            JetExpr::Prod(v) => v
                .iter()
                .map(|e| e.evaluate_at_node(idx, x, stack))
                .product(),
            JetExpr::Pow(b, n) => b.evaluate_at_node(idx, x, stack).powi(*n),
            JetExpr::Unary(f, b) => f.apply(b.evaluate_at_node(idx, x, stack)),
        }
    }

    fn eval_inner(
        &self,
        u: &mut dyn FnMut(usize) -> f64,
        x: f64,
        coeff: &mut dyn FnMut(&Field) -> Result<f64>,
    ) -> Result<f64> {
        Ok(match self {
            JetExpr::Const(c) => *c,
            JetExpr::X => x,
            JetExpr::U(j) => u(*j),
            JetExpr::Coeff(c) => coeff(&c.field)?,
            JetExpr::Sum(v) => {
                let mut acc = 0.0;
                for e in v {
                    acc += e.eval_inner(u, x, coeff)?;
                }
                acc
            }
            JetExpr::Prod(v) => {
                let mut acc = 1.0;
                for e in v {
                    acc *= e.eval_inner(u, x, coeff)?;
                }
                acc
            }
            JetExpr::Pow(b, n) => b.eval_inner(u, x, coeff)?.powi(*n),
            JetExpr::Unary(f, b) => f.apply(b.eval_inner(u, x, coeff)?),
        })
    }

    /// Canonical prefix-notation string; [`parse`] inverts it exactly.
    pub fn print(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }

    fn write(&self, out: &mut String) {
        match self {
            JetExpr::Const(c) => out.push_str(&format!("{c}")),
            JetExpr::X => out.push('x'),
            JetExpr::U(j) => out.push_str(&format!("u{j}")),
            JetExpr::Coeff(c) => out.push_str(&c.name),
            JetExpr::Sum(v) => {
                out.push_str("(+");
                for e in v {
                    out.push(' ');
                    e.write(out);
                }
                out.push(')');
            }
            JetExpr::Prod(v) => {
                out.push_str("(*");
                for e in v {
                    out.push(' ');
                    e.write(out);
                }
                out.push(')');
            }
            JetExpr::Pow(b, n) => {
                out.push_str("(^ ");
                b.write(out);
                out.push_str(&format!(" {n})"));
            }
            JetExpr::Unary(f, b) => {
                out.push('(');
                out.push_str(f.name());
                out.push(' ');
                b.write(out);
                out.push(')');
            }
        }
    }

    /// Flatten sums and products, fold constants, and cancel syntactically
    /// identical terms of opposite sign.
    pub fn normalized(&self) -> JetExpr {
        match self {
            JetExpr::Const(_) | JetExpr::X | JetExpr::U(_) | JetExpr::Coeff(_) => self.clone(),
            JetExpr::Sum(v) => {
                let mut terms: Vec<(f64, JetExpr)> = Vec::new();
                for e in v {
                    let e = e.normalized();
                    match e {
                        JetExpr::Sum(inner) => {
                            for t in inner {
                                push_term(&mut terms, split_const(t));
                            }
                        }
                        other => push_term(&mut terms, split_const(other)),
                    }
                }
                rebuild_sum(terms)
            }
            JetExpr::Prod(v) => {
                let mut constant = 1.0;
                let mut factors: Vec<(JetExpr, i32)> = Vec::new();
                for e in v {
                    let e = e.normalized();
                    match e {
                        JetExpr::Prod(inner) => {
                            for f in inner {
                                absorb_factor(&mut constant, &mut factors, f);
                            }
                        }
                        other => absorb_factor(&mut constant, &mut factors, other),
                    }
                }
                rebuild_prod(constant, factors)
            }
            JetExpr::Pow(b, n) => {
                let b = b.normalized();
                match (b, *n) {
                    (_, 0) => JetExpr::Const(1.0),
                    (e, 1) => e,
                    (JetExpr::Const(c), n) => JetExpr::Const(c.powi(n)),
                    (JetExpr::Pow(inner, m), n) => JetExpr::Pow(inner, m * n),
                    (e, n) => JetExpr::Pow(Box::new(e), n),
                }
            }
            JetExpr::Unary(f, b) => {
                let b = b.normalized();
                match b {
                    JetExpr::Const(c) => JetExpr::Const(f.apply(c)),
                    e => JetExpr::Unary(*f, Box::new(e)),
                }
            }
        }
    }
}

fn check_grids(a: &JetExpr, b: &JetExpr) -> Result<()> {
    if let (Some(ga), Some(gb)) = (a.grid(), b.grid()) {
        if ga != gb {
            return Err(Error::GridMismatch(ga.n_points(), gb.n_points()));
        }
    }
    Ok(())
}

fn leibniz(factors: &[JetExpr], d: &dyn Fn(&JetExpr) -> JetExpr) -> JetExpr {
    let terms: Vec<JetExpr> = (0..factors.len())
        .map(|i| {
            let mut prod: Vec<JetExpr> = factors.to_vec();
            prod[i] = d(&factors[i]);
            JetExpr::Prod(prod)
        })
        .collect();
    JetExpr::Sum(terms)
}

fn power_rule(base: &JetExpr, n: i32, d: &dyn Fn(&JetExpr) -> JetExpr) -> JetExpr {
    if n == 0 {
        return JetExpr::Const(0.0);
    }
    JetExpr::Prod(vec![
        JetExpr::Const(n as f64),
        JetExpr::Pow(Box::new(base.clone()), n - 1),
        d(base),
    ])
}

fn chain_rule(f: UnaryFn, inner: &JetExpr, d: &dyn Fn(&JetExpr) -> JetExpr) -> JetExpr {
    let outer = match f {
        UnaryFn::Sin => JetExpr::Unary(UnaryFn::Cos, Box::new(inner.clone())),
        UnaryFn::Cos => JetExpr::Prod(vec![
            JetExpr::Const(-1.0),
            JetExpr::Unary(UnaryFn::Sin, Box::new(inner.clone())),
        ]),
        UnaryFn::Exp => JetExpr::Unary(UnaryFn::Exp, Box::new(inner.clone())),
    };
    JetExpr::Prod(vec![outer, d(inner)])
}

/// Split a normalized term into (scalar coefficient, monomial key).
fn split_const(t: JetExpr) -> (f64, JetExpr) {
    match t {
        JetExpr::Const(c) => (c, JetExpr::Const(1.0)),
        JetExpr::Prod(list) => {
            let mut c = 1.0;
            let mut rest: Vec<JetExpr> = Vec::with_capacity(list.len());
            for f in list {
                if let JetExpr::Const(k) = f {
                    c *= k;
                } else {
                    rest.push(f);
                }
            }
            match rest.len() {
                0 => (c, JetExpr::Const(1.0)),
                1 => (c, rest.pop().unwrap()),
                _ => (c, JetExpr::Prod(rest)),
            }
        }
        other => (1.0, other),
    }
}

fn push_term(terms: &mut Vec<(f64, JetExpr)>, (c, key): (f64, JetExpr)) {
    if c == 0.0 {
        return;
    }
    for (tc, tk) in terms.iter_mut() {
        if *tk == key {
            *tc += c;
            return;
        }
    }
    terms.push((c, key));
}

fn rebuild_sum(terms: Vec<(f64, JetExpr)>) -> JetExpr {
    let mut out: Vec<JetExpr> = Vec::new();
    for (c, key) in terms {
        if c == 0.0 {
            continue;
        }
        let term = match (c, key) {
            (c, JetExpr::Const(k)) => JetExpr::Const(c * k),
            (c, key) if c == 1.0 => key,
            (c, JetExpr::Prod(mut list)) => {
                let mut full = vec![JetExpr::Const(c)];
                full.append(&mut list);
                JetExpr::Prod(full)
            }
            (c, key) => JetExpr::Prod(vec![JetExpr::Const(c), key]),
        };
        out.push(term);
    }
    match out.len() {
        0 => JetExpr::Const(0.0),
        1 => out.pop().unwrap(),
        _ => {
            out.sort_by(expr_cmp_ref);
            JetExpr::Sum(out)
        }
    }
}

fn absorb_factor(constant: &mut f64, factors: &mut Vec<(JetExpr, i32)>, f: JetExpr) {
    match f {
        JetExpr::Const(c) => *constant *= c,
        JetExpr::Pow(b, n) => merge_factor(factors, *b, n),
        other => merge_factor(factors, other, 1),
    }
}

fn merge_factor(factors: &mut Vec<(JetExpr, i32)>, base: JetExpr, n: i32) {
    for (b, e) in factors.iter_mut() {
        if *b == base {
            *e += n;
            return;
        }
    }
    factors.push((base, n));
}

fn rebuild_prod(constant: f64, factors: Vec<(JetExpr, i32)>) -> JetExpr {
    if constant == 0.0 {
        return JetExpr::Const(0.0);
    }
    let mut out: Vec<JetExpr> = Vec::new();
    for (b, e) in factors {
        match e {
            0 => {}
            1 => out.push(b),
            n => out.push(JetExpr::Pow(Box::new(b), n)),
        }
    }
    out.sort_by(expr_cmp_ref);
    if out.is_empty() {
        return JetExpr::Const(constant);
    }
    if constant != 1.0 {
        out.insert(0, JetExpr::Const(constant));
    }
    if out.len() == 1 {
        out.pop().unwrap()
    } else {
        JetExpr::Prod(out)
    }
}

fn expr_cmp_ref(a: &JetExpr, b: &JetExpr) -> std::cmp::Ordering {
    expr_cmp(a, b)
}

/// Deterministic structural ordering used to canonicalize sums and products.
fn expr_cmp(a: &JetExpr, b: &JetExpr) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    fn rank(e: &JetExpr) -> u8 {
        match e {
            JetExpr::Const(_) => 0,
            JetExpr::X => 1,
            JetExpr::U(_) => 2,
            JetExpr::Coeff(_) => 3,
            JetExpr::Pow(..) => 4,
            JetExpr::Unary(..) => 5,
            JetExpr::Prod(_) => 6,
            JetExpr::Sum(_) => 7,
        }
    }
    match (a, b) {
        (JetExpr::Const(x), JetExpr::Const(y)) => x.total_cmp(y),
        (JetExpr::U(i), JetExpr::U(j)) => i.cmp(j),
        (JetExpr::Coeff(p), JetExpr::Coeff(q)) => p.name.cmp(&q.name),
        (JetExpr::Pow(b1, n1), JetExpr::Pow(b2, n2)) => {
            expr_cmp(b1, b2).then(n1.cmp(n2))
        }
        (JetExpr::Unary(f1, b1), JetExpr::Unary(f2, b2)) => f1.cmp(f2).then(expr_cmp(b1, b2)),
        (JetExpr::Sum(v1), JetExpr::Sum(v2)) | (JetExpr::Prod(v1), JetExpr::Prod(v2)) => {
            for (x, y) in v1.iter().zip(v2.iter()) {
                let c = expr_cmp(x, y);
                if c != Ordering::Equal {
                    return c;
                }
            }
            v1.len().cmp(&v2.len())
        }
        _ => rank(a).cmp(&rank(b)),
    }
}

impl fmt::Display for JetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.print())
    }
}

/// Coefficient-field bindings available to the parser.
pub type CoeffBindings = BTreeMap<String, Field>;

/// Parse the canonical prefix notation produced by [`JetExpr::print`].
/// Identifiers other than `x` and `u<digits>` must be bound in `env`.
pub fn parse(src: &str, env: &CoeffBindings) -> Result<JetExpr> {
    let mut p = Parser {
        bytes: src.as_bytes(),
        pos: 0,
        env,
        depth: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    env: &'a CoeffBindings,
    depth: usize,
}

const MAX_PARSE_DEPTH: usize = 200;

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            at: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<JetExpr> {
        if self.depth >= MAX_PARSE_DEPTH {
            return Err(self.err("expression too deeply nested"));
        }
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                self.depth += 1;
                let e = self.form();
                self.depth -= 1;
                let e = e?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c == b'-' || c == b'+' || c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn form(&mut self) -> Result<JetExpr> {
        self.skip_ws();
        match self.peek() {
            Some(b'+') => {
                self.pos += 1;
                let args = self.args(1)?;
                Ok(JetExpr::Sum(args))
            }
            Some(b'*') => {
                self.pos += 1;
                let args = self.args(1)?;
                Ok(JetExpr::Prod(args))
            }
            Some(b'^') => {
                self.pos += 1;
                let base = self.expr()?;
                self.skip_ws();
                let n = self.integer()?;
                Ok(JetExpr::Pow(Box::new(base), n))
            }
            _ => {
                let word = self.word()?;
                let f = match word.as_str() {
                    "sin" => UnaryFn::Sin,
                    "cos" => UnaryFn::Cos,
                    "exp" => UnaryFn::Exp,
                    _ => return Err(self.err("unknown operator")),
                };
                let inner = self.expr()?;
                Ok(JetExpr::Unary(f, Box::new(inner)))
            }
        }
    }

    fn args(&mut self, min: usize) -> Result<Vec<JetExpr>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(b')') || self.peek().is_none() {
                break;
            }
            out.push(self.expr()?);
        }
        if out.len() < min {
            return Err(self.err("operator needs at least one argument"));
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<JetExpr> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit()
                || c == b'.'
                || c == b'-'
                || c == b'+'
                || c == b'e'
                || c == b'E'
            {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| self.err("malformed number"))?;
        if !v.is_finite() {
            return Err(self.err("number out of range"));
        }
        Ok(JetExpr::Const(v))
    }

    fn integer(&mut self) -> Result<i32> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("malformed integer exponent"))
    }

    fn word(&mut self) -> Result<String> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.err("expected identifier"));
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .to_string())
    }

    fn identifier(&mut self) -> Result<JetExpr> {
        let word = self.word()?;
        if word == "x" {
            return Ok(JetExpr::X);
        }
        if let Some(rest) = word.strip_prefix('u') {
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                let j: usize = rest
                    .parse()
                    .map_err(|_| self.err("jet variable index out of range"))?;
                if j > 64 {
                    return Err(self.err("jet variable index out of range"));
                }
                return Ok(JetExpr::U(j));
            }
        }
        match self.env.get(&word) {
            Some(field) => JetExpr::coeff(&word, field.clone()),
            None => Err(self.err("unbound coefficient field")),
        }
    }
}

#[cfg(test)]
pub(crate) mod testgen {
    //! Random expression trees for property tests.

    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// A random expression of bounded depth whose jet variables stay below
    /// `max_order` and which never contains the bare coordinate x.
    pub(crate) fn random_expr(
        rng: &mut ChaCha8Rng,
        grid: GridSpec,
        max_order: usize,
        depth: usize,
    ) -> JetExpr {
        if depth == 0 {
            return match rng.random_range(0..4) {
                0 => JetExpr::constant(rng.random_range(-1.5..1.5)),
                1 | 2 => JetExpr::u(rng.random_range(0..=max_order)),
                _ => {
                    let seed = rng.random_range(0..1_000_000u64);
                    let field = Field::from_fn(grid, |x| {
                        0.4 + 0.3 * (x + seed as f64).sin()
                    });
                    JetExpr::coeff("w", field).unwrap()
                }
            };
        }
        let a = random_expr(rng, grid, max_order, depth - 1);
        match rng.random_range(0..6) {
            0 => a.add(random_expr(rng, grid, max_order, depth - 1)).unwrap(),
            1 => a.mul(random_expr(rng, grid, max_order, depth - 1)).unwrap(),
            2 => a.powi(rng.random_range(2..=3)),
            3 => a.sin(),
            4 => a.cos(),
            _ => a,
        }
    }

    /// Deterministic helper for tests that need one generator instance.
    #[allow(dead_code)]
    pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}
