//! Truncated Taylor series of the exact flow and of the Runge-Kutta step for
//! polynomial vector fields, computed two ways each.
//!
//! The direct routes (Picard iteration for the flow, fixed-point iteration of
//! the stage equations for the step) never look at trees. The tree routes sum
//! `alpha_t / t! * F(t)(x0)` and `alpha_t * b^T W(t) * F(t)(x0)` over all
//! trees of each order. All arithmetic is exact, so agreement is tested with
//! zero tolerance.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::algebra::{format_rational, q, Monomial, Polynomial, RenderStyle, Variable};
use crate::conditions::{numeric_weight, numeric_weight_vector};
use crate::document::{self, DocumentError, Object};
use crate::trees::{enumerate_by_leaf, RootedTree};
use crate::verify::ButcherTableau;
use crate::SCHEMA;

/// State variable `x1`, `x2`, ... (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateVar(pub usize);

impl Variable for StateVar {
    fn write_plain(&self, out: &mut String) {
        let _ = write!(out, "x{}", self.0);
    }

    fn write_latex(&self, out: &mut String) {
        let _ = write!(out, "x_{{{}}}", self.0);
    }

    fn parse_prefix(text: &str) -> Option<(Self, usize)> {
        let digits = text.strip_prefix('x')?;
        let len = digits
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(digits.len());
        let index = &digits[..len];
        if index.is_empty() || index.starts_with('0') {
            return None;
        }
        Some((StateVar(index.parse().ok()?), 1 + len))
    }
}

pub type FieldPolynomial = Polynomial<StateVar>;

/// Autonomous right-hand side `x' = f(x)` with polynomial components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyVectorField {
    components: Vec<FieldPolynomial>,
}

impl PolyVectorField {
    pub fn new(components: Vec<FieldPolynomial>) -> Result<Self, DocumentError> {
        let dim = components.len();
        if dim == 0 {
            return Err(DocumentError::Invalid(
                "a vector field needs at least one component".into(),
            ));
        }
        for (k, c) in components.iter().enumerate() {
            if let Some(v) = c.variables().into_iter().find(|v| v.0 > dim) {
                return Err(DocumentError::Invalid(format!(
                    "component {} uses x{} but the dimension is {dim}",
                    k + 1,
                    v.0
                )));
            }
        }
        Ok(PolyVectorField { components })
    }

    /// Reads `{"dim": d, "components": ["x2", "-x1", ...]}`.
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let obj = Object::parse(text, &["dim", "components"])?;
        let dim = document::as_positive_integer("dim", obj.require("dim")?)?;
        let items = document::as_array("components", obj.require("components")?)?;
        if items.len() != dim {
            return Err(DocumentError::Dimension {
                field: "components".into(),
                expected: dim,
                found: items.len(),
            });
        }
        let components = items
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let field = format!("components[{}]", k + 1);
                let text = document::as_string(&field, v)?;
                FieldPolynomial::parse(text)
                    .map_err(|source| DocumentError::Polynomial { field, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(components)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[FieldPolynomial] {
        &self.components
    }

    pub fn eval(&self, x: &[BigRational]) -> Vec<BigRational> {
        self.components
            .iter()
            .map(|c| c.eval(|v| x[v.0 - 1].clone()))
            .collect()
    }

    /// Random field with every monomial of degree `<= max_degree` present
    /// with probability 2/3 and a coefficient `n/d`, `|n| <= 3`, `1 <= d <= 3`.
    pub fn random<R: Rng>(rng: &mut R, dim: usize, max_degree: u32) -> Self {
        let monomials = monomials_up_to(dim, max_degree);
        let components = (0..dim)
            .map(|_| {
                FieldPolynomial::from_terms(monomials.iter().filter_map(|m| {
                    if rng.gen_range(0..3) == 0 {
                        return None;
                    }
                    Some((m.clone(), q(rng.gen_range(-3..=3), rng.gen_range(1..=3))))
                }))
            })
            .collect();
        PolyVectorField { components }
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|c| c.render(RenderStyle::Plain))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn monomials_up_to(dim: usize, max_degree: u32) -> Vec<Monomial<StateVar>> {
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![Monomial::one()];
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for m in &frontier {
            for v in 1..=dim {
                let grown = Monomial::from_factors(
                    m.factors()
                        .iter()
                        .cloned()
                        .chain(std::iter::once((StateVar(v), 1))),
                );
                if !next.contains(&grown) {
                    next.push(grown);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Random point with coordinates `n/d`, `|n| <= 2`, `1 <= d <= 2`.
pub fn random_point<R: Rng>(rng: &mut R, dim: usize) -> Vec<BigRational> {
    (0..dim)
        .map(|_| q(rng.gen_range(-2..=2), rng.gen_range(1..=2)))
        .collect()
}

/// `sum_m v[m] * dg/dx_m`.
fn directional_derivative(g: &FieldPolynomial, v: &[BigRational]) -> FieldPolynomial {
    v.iter()
        .enumerate()
        .filter(|(_, vm)| !vm.is_zero())
        .fold(FieldPolynomial::zero(), |acc, (m, vm)| {
            &acc + &g.derivative(&StateVar(m + 1)).scale(vm)
        })
}

/// Elementary differentials `F(t)(x0)`, memoized per tree.
pub struct ElementaryDifferentials<'f> {
    field: &'f PolyVectorField,
    x0: Vec<BigRational>,
    cache: HashMap<RootedTree, Vec<BigRational>>,
}

impl<'f> ElementaryDifferentials<'f> {
    pub fn new(field: &'f PolyVectorField, x0: &[BigRational]) -> Self {
        assert_eq!(x0.len(), field.dim(), "point dimension");
        ElementaryDifferentials {
            field,
            x0: x0.to_vec(),
            cache: HashMap::new(),
        }
    }

    /// `F([t_1..t_n])(x0) = f^(n)(x0)[F(t_1)(x0), ..., F(t_n)(x0)]`.
    pub fn value(&mut self, t: &RootedTree) -> Vec<BigRational> {
        if let Some(v) = self.cache.get(t) {
            return v.clone();
        }
        let args: Vec<Vec<BigRational>> = t.children().iter().map(|c| self.value(c)).collect();
        let value = apply_derivative(self.field, &self.x0, &args);
        self.cache.insert(t.clone(), value.clone());
        value
    }
}

/// `f^(n)(x0)[args...]` by iterated exact directional derivatives.
pub fn apply_derivative(
    field: &PolyVectorField,
    x0: &[BigRational],
    args: &[Vec<BigRational>],
) -> Vec<BigRational> {
    field
        .components
        .iter()
        .map(|c| {
            args.iter()
                .fold(c.clone(), |g, v| directional_derivative(&g, v))
                .eval(|v| x0[v.0 - 1].clone())
        })
        .collect()
}

pub fn elementary_differential(
    field: &PolyVectorField,
    t: &RootedTree,
    x0: &[BigRational],
) -> Vec<BigRational> {
    ElementaryDifferentials::new(field, x0).value(t)
}

/// Vector-valued power series in `τ`, truncated after degree `degree`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TauSeries {
    coefficients: Vec<Vec<BigRational>>,
}

impl TauSeries {
    pub fn zero(dim: usize, degree: usize) -> Self {
        TauSeries {
            coefficients: vec![vec![BigRational::zero(); dim]; degree + 1],
        }
    }

    pub fn constant(x: &[BigRational], degree: usize) -> Self {
        let mut s = Self::zero(x.len(), degree);
        s.coefficients[0] = x.to_vec();
        s
    }

    pub fn from_coefficients(coefficients: Vec<Vec<BigRational>>) -> Self {
        assert!(!coefficients.is_empty(), "at least the constant term");
        TauSeries { coefficients }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0].len()
    }

    /// Coefficient vector of `τ^q`.
    pub fn coefficient(&self, q: usize) -> &[BigRational] {
        &self.coefficients[q]
    }

    pub fn coefficients(&self) -> &[Vec<BigRational>] {
        &self.coefficients
    }

    /// Scalar series of one component.
    pub fn component(&self, k: usize) -> Vec<BigRational> {
        self.coefficients.iter().map(|c| c[k].clone()).collect()
    }

    pub fn add(&self, other: &TauSeries) -> TauSeries {
        TauSeries {
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, r: &BigRational) -> TauSeries {
        TauSeries {
            coefficients: self
                .coefficients
                .iter()
                .map(|c| c.iter().map(|x| x * r).collect())
                .collect(),
        }
    }

    /// `τ * self`, truncated at the same degree.
    pub fn shift(&self) -> TauSeries {
        let mut coefficients = vec![vec![BigRational::zero(); self.dim()]];
        coefficients.extend(self.coefficients[..self.degree()].iter().cloned());
        TauSeries { coefficients }
    }

    /// `∫_0^τ self`, truncated at the same degree.
    pub fn integrate(&self) -> TauSeries {
        let mut out = self.shift();
        for (q, c) in out.coefficients.iter_mut().enumerate().skip(1) {
            let inv = BigRational::new(1.into(), (q as i64).into());
            for x in c.iter_mut() {
                *x *= &inv;
            }
        }
        out
    }

    pub fn truncate(&self, degree: usize) -> TauSeries {
        TauSeries {
            coefficients: self.coefficients[..=degree.min(self.degree())].to_vec(),
        }
    }

    /// First degree, up to the smaller truncation order, where the two differ.
    pub fn first_difference(&self, other: &TauSeries) -> Option<usize> {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .position(|(a, b)| a != b)
    }

    pub fn agrees_with(&self, other: &TauSeries) -> bool {
        self.first_difference(other).is_none()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (q, c) in self.coefficients.iter().enumerate() {
            let parts: Vec<String> = c.iter().map(format_rational).collect();
            let _ = writeln!(out, "  tau^{q}: [{}]", parts.join(", "));
        }
        out
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        self.coefficients
            .iter()
            .map(|c| c.iter().map(format_rational).collect())
            .collect()
    }
}

fn series_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len();
    let mut out = vec![BigRational::zero(); n];
    for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
        for (j, y) in b.iter().take(n - i).enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `f(y(τ))` truncated at the degree of `y`.
pub fn compose(field: &PolyVectorField, y: &TauSeries) -> TauSeries {
    let n = y.degree() + 1;
    let scalar: Vec<Vec<BigRational>> = (0..y.dim()).map(|k| y.component(k)).collect();
    let mut powers: HashMap<(usize, u32), Vec<BigRational>> = HashMap::new();
    let mut power = |v: usize, e: u32| -> Vec<BigRational> {
        powers
            .entry((v, e))
            .or_insert_with(|| {
                let mut acc = vec![BigRational::zero(); n];
                acc[0] = BigRational::one();
                for _ in 0..e {
                    acc = series_mul(&acc, &scalar[v]);
                }
                acc
            })
            .clone()
    };
    let mut out = TauSeries::zero(y.dim(), y.degree());
    for (k, c) in field.components.iter().enumerate() {
        let mut sum = vec![BigRational::zero(); n];
        for (m, coeff) in c.terms() {
            let mut term = vec![BigRational::zero(); n];
            term[0] = coeff.clone();
            for (v, e) in m.factors() {
                term = series_mul(&term, &power(v.0 - 1, *e));
            }
            for (s, t) in sum.iter_mut().zip(term) {
                *s += t;
            }
        }
        for (q, s) in sum.into_iter().enumerate() {
            out.coefficients[q][k] = s;
        }
    }
    out
}

/// Flow expansion `x0 + sum_{#t <= p} τ^#t alpha_t / t! F(t)(x0)`.
pub fn flow_series_trees(field: &PolyVectorField, x0: &[BigRational], p: usize) -> TauSeries {
    let trees = enumerate_by_leaf(p.max(1));
    let mut diffs = ElementaryDifferentials::new(field, x0);
    let mut series = TauSeries::constant(x0, p);
    for t in trees.iter().filter(|t| t.order() <= p) {
        let weight = t.alpha() / BigRational::from_integer(t.factorial().into());
        add_scaled(
            &mut series.coefficients[t.order()],
            &weight,
            &diffs.value(t),
        );
    }
    series
}

/// Flow expansion by Picard iteration `y <- x0 + ∫ f(y)`; each sweep fixes
/// one more coefficient, so `p` sweeps suffice.
pub fn flow_series_picard(field: &PolyVectorField, x0: &[BigRational], p: usize) -> TauSeries {
    let start = TauSeries::constant(x0, p);
    let mut y = start.clone();
    for _ in 0..p {
        y = start.add(&compose(field, &y).integrate());
    }
    y
}

/// Stage series `k_i` of the step, by fixed-point iteration of
/// `k_i = f(x0 + τ sum_j a[i,j] k_j)` truncated at degree `p`.
pub fn rk_stages_direct(
    field: &PolyVectorField,
    tab: &ButcherTableau,
    x0: &[BigRational],
    p: usize,
) -> Vec<TauSeries> {
    let s = tab.stages();
    let sweeps = if tab.is_explicit() { s } else { p + 1 };
    let start = TauSeries::constant(x0, p);
    let mut stages = vec![TauSeries::zero(field.dim(), p); s];
    for _ in 0..sweeps {
        stages = tab
            .a()
            .iter()
            .map(|row| {
                let combo = row
                    .iter()
                    .zip(&stages)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(TauSeries::zero(field.dim(), p), |acc, (a, k)| {
                        acc.add(&k.scale(a))
                    });
                compose(field, &start.add(&combo.shift()))
            })
            .collect();
    }
    stages
}

/// Step expansion `x0 + τ sum_i b_i k_i` from the directly iterated stages.
pub fn rk_series_direct(
    field: &PolyVectorField,
    tab: &ButcherTableau,
    x0: &[BigRational],
    p: usize,
) -> TauSeries {
    let stages = rk_stages_direct(field, tab, x0, p);
    let combo = tab
        .b()
        .iter()
        .zip(&stages)
        .fold(TauSeries::zero(field.dim(), p), |acc, (b, k)| {
            acc.add(&k.scale(b))
        });
    TauSeries::constant(x0, p).add(&combo.shift())
}

/// Step expansion `x0 + sum_{#t <= p} τ^#t alpha_t b^T W(t) F(t)(x0)`.
pub fn rk_series_trees(
    field: &PolyVectorField,
    tab: &ButcherTableau,
    x0: &[BigRational],
    p: usize,
) -> TauSeries {
    let trees = enumerate_by_leaf(p.max(1));
    let mut diffs = ElementaryDifferentials::new(field, x0);
    let mut series = TauSeries::constant(x0, p);
    for t in trees.iter().filter(|t| t.order() <= p) {
        let weight = t.alpha() * numeric_weight(t, tab.a(), tab.b());
        add_scaled(
            &mut series.coefficients[t.order()],
            &weight,
            &diffs.value(t),
        );
    }
    series
}

/// Stage expansions `k_i = sum_{#t <= p} τ^(#t-1) alpha_t W(t)_i F(t)(x0)`,
/// truncated at degree `p - 1`. For `p = 0` the single-node term is still
/// included, so the result always has a constant term.
pub fn stage_series_trees(
    field: &PolyVectorField,
    tab: &ButcherTableau,
    x0: &[BigRational],
    p: usize,
) -> Vec<TauSeries> {
    let p = p.max(1);
    let trees = enumerate_by_leaf(p);
    let mut diffs = ElementaryDifferentials::new(field, x0);
    let mut stages = vec![TauSeries::zero(field.dim(), p - 1); tab.stages()];
    for t in trees.iter() {
        let w = numeric_weight_vector(t, tab.a());
        let f = diffs.value(t);
        let alpha = t.alpha();
        for (k, wi) in stages.iter_mut().zip(w) {
            add_scaled(&mut k.coefficients[t.order() - 1], &(&alpha * wi), &f);
        }
    }
    stages
}

fn add_scaled(target: &mut [BigRational], r: &BigRational, v: &[BigRational]) {
    if r.is_zero() {
        return;
    }
    for (t, x) in target.iter_mut().zip(v) {
        *t += r * x;
    }
}

/// Comparison of the discrete flow of one tableau against the exact flow.
#[derive(Clone, Debug, PartialEq)]
pub struct StepComparison {
    pub tableau_name: String,
    pub trees: TauSeries,
    pub direct: TauSeries,
    /// First degree where the step and the exact flow disagree, if any up to `p`.
    pub first_flow_mismatch: Option<usize>,
}

impl StepComparison {
    pub fn lemma_agrees(&self) -> bool {
        self.trees.agrees_with(&self.direct)
    }
}

/// Results of the oracle comparisons for one field and point.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub field: PolyVectorField,
    pub x0: Vec<BigRational>,
    pub p: usize,
    pub flow_trees: TauSeries,
    pub flow_picard: TauSeries,
    pub step: Option<StepComparison>,
}

impl OracleReport {
    pub fn flow_agrees(&self) -> bool {
        self.flow_trees.agrees_with(&self.flow_picard)
    }

    /// Both expansions of each flow agree.
    pub fn all_agree(&self) -> bool {
        self.flow_agrees() && self.step.as_ref().is_none_or(StepComparison::lemma_agrees)
    }

    /// Scalar problems satisfy extra identities from order 5 on, so their
    /// agreement says less about systems.
    pub fn scalar_caveat(&self) -> bool {
        self.field.dim() == 1
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let x0: Vec<String> = self.x0.iter().map(format_rational).collect();
        let _ = writeln!(out, "field: {}", self.field);
        let _ = writeln!(out, "x0: [{}]", x0.join(", "));
        let _ = writeln!(out, "p: {}", self.p);
        if self.scalar_caveat() {
            let _ = writeln!(
                out,
                "note: scalar field (d = 1); systems need d >= 2 from order 5 on"
            );
        }
        let _ = writeln!(out, "flow (trees):");
        out.push_str(&self.flow_trees.to_text());
        let _ = writeln!(out, "flow (picard):");
        out.push_str(&self.flow_picard.to_text());
        let _ = writeln!(out, "flow expansions agree: {}", yes_no(self.flow_agrees()));
        if let Some(step) = &self.step {
            let name = if step.tableau_name.is_empty() {
                "(unnamed)"
            } else {
                &step.tableau_name
            };
            let _ = writeln!(out, "step ({name}, trees):");
            out.push_str(&step.trees.to_text());
            let _ = writeln!(out, "step ({name}, stages):");
            out.push_str(&step.direct.to_text());
            let _ = writeln!(
                out,
                "step expansions agree: {}",
                yes_no(step.lemma_agrees())
            );
            match step.first_flow_mismatch {
                Some(q) => {
                    let _ = writeln!(out, "step and flow first differ at degree {q}");
                }
                None => {
                    let _ = writeln!(out, "step and flow agree through degree {}", self.p);
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct StepJson {
            tableau: String,
            trees: Vec<Vec<String>>,
            stages: Vec<Vec<String>>,
            agree: bool,
            first_flow_mismatch: Option<usize>,
        }
        #[derive(Serialize)]
        struct Json {
            schema: &'static str,
            dim: usize,
            components: Vec<String>,
            x0: Vec<String>,
            p: usize,
            scalar_caveat: bool,
            flow_trees: Vec<Vec<String>>,
            flow_picard: Vec<Vec<String>>,
            flow_agree: bool,
            #[serde(skip_serializing_if = "Option::is_none")]
            step: Option<StepJson>,
        }
        let json = Json {
            schema: SCHEMA,
            dim: self.field.dim(),
            components: self
                .field
                .components
                .iter()
                .map(|c| c.to_string())
                .collect(),
            x0: self.x0.iter().map(format_rational).collect(),
            p: self.p,
            scalar_caveat: self.scalar_caveat(),
            flow_trees: self.flow_trees.to_strings(),
            flow_picard: self.flow_picard.to_strings(),
            flow_agree: self.flow_agrees(),
            step: self.step.as_ref().map(|s| StepJson {
                tableau: s.tableau_name.clone(),
                trees: s.trees.to_strings(),
                stages: s.direct.to_strings(),
                agree: s.lemma_agrees(),
                first_flow_mismatch: s.first_flow_mismatch,
            }),
        };
        serde_json::to_string_pretty(&json).expect("serializable")
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Runs every comparison for one field, point and optional tableau.
pub fn compare(
    field: &PolyVectorField,
    x0: &[BigRational],
    p: usize,
    tableau: Option<&ButcherTableau>,
) -> OracleReport {
    let flow_trees = flow_series_trees(field, x0, p);
    let flow_picard = flow_series_picard(field, x0, p);
    let step = tableau.map(|tab| {
        let trees = rk_series_trees(field, tab, x0, p);
        let direct = rk_series_direct(field, tab, x0, p);
        let first_flow_mismatch = direct.first_difference(&flow_picard);
        StepComparison {
            tableau_name: tab.name().to_string(),
            trees,
            direct,
            first_flow_mismatch,
        }
    });
    OracleReport {
        field: field.clone(),
        x0: x0.to_vec(),
        p,
        flow_trees,
        flow_picard,
        step,
    }
}
