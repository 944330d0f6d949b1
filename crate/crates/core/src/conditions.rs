//! Elementary weights and Runge-Kutta order conditions.
//!
//! For a tree `t = [t_1, ..., t_n]` the weight vector has components
//! `W(t)_i = prod_k (sum_j a[i,j] W(t_k)_j)`, and the order condition of `t`
//! reads `sum_i b[i] W(t)_i == 1 / t!`.

use std::collections::{BTreeMap, HashMap, HashSet};

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{
    format_rational, format_rational_latex, CoeffPolynomial, CoeffVar, RenderStyle,
};
use crate::trees::{enumerate_by_leaf, RootedTree};

/// How weights are emitted.
///
/// `explicit` drops every `a[i,j]` with `i <= j` and sets `c[1] = 0`.
/// `substitute_c` writes the row sum `sum_j a[i,j]` as `c[i]`; this only
/// happens where a child is the single node, since that is exactly where the
/// row sum appears.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GenerationFlags {
    pub explicit: bool,
    pub substitute_c: bool,
}

impl GenerationFlags {
    pub const RAW: GenerationFlags = GenerationFlags {
        explicit: false,
        substitute_c: false,
    };
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderCondition {
    pub tree: RootedTree,
    pub lhs: CoeffPolynomial,
    pub rhs: BigRational,
}

impl OrderCondition {
    pub fn order(&self) -> usize {
        self.tree.order()
    }

    /// `0 == rhs` with `rhs != 0`: no tableau of this shape satisfies it.
    pub fn is_unsatisfiable(&self) -> bool {
        self.lhs.is_zero() && !self.rhs.is_zero()
    }

    /// `lhs == rhs` in plain form, `lhs = rhs` in LaTeX.
    pub fn render(&self, style: RenderStyle) -> String {
        match style {
            RenderStyle::Plain => format!(
                "{} == {}",
                self.lhs.render(style),
                format_rational(&self.rhs)
            ),
            RenderStyle::Latex => format!(
                "{} = {}",
                self.lhs.render(style),
                format_rational_latex(&self.rhs)
            ),
        }
    }
}

/// Weight vectors for one stage count, memoized per tree.
pub struct WeightGenerator {
    stages: usize,
    flags: GenerationFlags,
    cache: HashMap<RootedTree, Vec<CoeffPolynomial>>,
}

impl WeightGenerator {
    pub fn new(stages: usize, flags: GenerationFlags) -> Self {
        assert!(stages >= 1, "at least one stage");
        WeightGenerator {
            stages,
            flags,
            cache: HashMap::new(),
        }
    }

    pub fn weight_vector(&mut self, t: &RootedTree) -> Vec<CoeffPolynomial> {
        if let Some(w) = self.cache.get(t) {
            return w.clone();
        }
        let s = self.stages;
        let mut w = vec![CoeffPolynomial::one(); s];
        for child in t.children() {
            let inner = if child.is_single_node() && self.flags.substitute_c {
                None
            } else {
                Some(self.weight_vector(child))
            };
            for (i, component) in w.iter_mut().enumerate() {
                let stage = i + 1;
                let factor = match &inner {
                    None if self.flags.explicit && stage == 1 => CoeffPolynomial::zero(),
                    None => CoeffPolynomial::var(CoeffVar::C(stage)),
                    Some(inner) => self.row_product(stage, inner),
                };
                *component = &*component * &factor;
            }
        }
        self.cache.insert(t.clone(), w.clone());
        w
    }

    /// `sum_j a[stage,j] * inner_j`.
    fn row_product(&self, stage: usize, inner: &[CoeffPolynomial]) -> CoeffPolynomial {
        let upper = if self.flags.explicit {
            stage - 1
        } else {
            self.stages
        };
        let mut sum = CoeffPolynomial::zero();
        for (j, w) in inner.iter().enumerate().take(upper) {
            let a = CoeffPolynomial::var(CoeffVar::A(stage, j + 1));
            sum = &sum + &(&a * w);
        }
        sum
    }

    pub fn weight(&mut self, t: &RootedTree) -> CoeffPolynomial {
        self.weight_vector(t)
            .iter()
            .enumerate()
            .fold(CoeffPolynomial::zero(), |acc, (i, w)| {
                &acc + &(&CoeffPolynomial::var(CoeffVar::B(i + 1)) * w)
            })
    }

    pub fn condition(&mut self, t: &RootedTree) -> OrderCondition {
        OrderCondition {
            tree: t.clone(),
            lhs: self.weight(t),
            rhs: BigRational::new(1.into(), t.factorial().into()),
        }
    }
}

pub fn elementary_weight_vector(
    t: &RootedTree,
    stages: usize,
    flags: GenerationFlags,
) -> Vec<CoeffPolynomial> {
    WeightGenerator::new(stages, flags).weight_vector(t)
}

/// `b^T W(t)` as an expanded polynomial.
pub fn elementary_weight(t: &RootedTree, stages: usize, flags: GenerationFlags) -> CoeffPolynomial {
    WeightGenerator::new(stages, flags).weight(t)
}

pub fn order_condition(t: &RootedTree, stages: usize, flags: GenerationFlags) -> OrderCondition {
    WeightGenerator::new(stages, flags).condition(t)
}

/// One condition per given tree, in the given order, without deduplication.
pub fn generate_conditions<'a>(
    trees: impl IntoIterator<Item = &'a RootedTree>,
    stages: usize,
    flags: GenerationFlags,
) -> Vec<OrderCondition> {
    let mut gen = WeightGenerator::new(stages, flags);
    trees.into_iter().map(|t| gen.condition(t)).collect()
}

/// All conditions for trees of order `<= p` in canonical tree order.
///
/// Conditions that coincide after the flag substitutions are kept once, at
/// the first tree producing them. Unsatisfiable conditions are kept.
pub fn all_order_conditions(
    p: usize,
    stages: usize,
    flags: GenerationFlags,
) -> Vec<OrderCondition> {
    let trees = enumerate_by_leaf(p);
    dedup_conditions(generate_conditions(trees.iter(), stages, flags))
}

pub fn dedup_conditions(conditions: Vec<OrderCondition>) -> Vec<OrderCondition> {
    let mut seen = HashSet::new();
    conditions
        .into_iter()
        .filter(|c| seen.insert((c.lhs.clone(), c.rhs.clone())))
        .collect()
}

/// Exact `W(t)` for a concrete coefficient matrix, by the same recursion.
pub fn numeric_weight_vector(t: &RootedTree, a: &[Vec<BigRational>]) -> Vec<BigRational> {
    fn go(
        t: &RootedTree,
        a: &[Vec<BigRational>],
        cache: &mut HashMap<RootedTree, Vec<BigRational>>,
    ) -> Vec<BigRational> {
        if let Some(w) = cache.get(t) {
            return w.clone();
        }
        let mut w = vec![BigRational::one(); a.len()];
        for child in t.children() {
            let inner = go(child, a, cache);
            for (wi, row) in w.iter_mut().zip(a) {
                let dot = row
                    .iter()
                    .zip(&inner)
                    .fold(BigRational::zero(), |acc, (x, y)| acc + x * y);
                *wi *= dot;
            }
        }
        cache.insert(t.clone(), w.clone());
        w
    }
    go(t, a, &mut HashMap::new())
}

/// Exact `b^T W(t)` for concrete coefficients.
pub fn numeric_weight(t: &RootedTree, a: &[Vec<BigRational>], b: &[BigRational]) -> BigRational {
    numeric_weight_vector(t, a)
        .iter()
        .zip(b)
        .fold(BigRational::zero(), |acc, (w, bi)| acc + w * bi)
}

/// Binding of `b[i]` and `a[i,j]` to concrete values.
pub fn coefficient_binding(
    a: &[Vec<BigRational>],
    b: &[BigRational],
) -> BTreeMap<CoeffVar, BigRational> {
    let mut binding = BTreeMap::new();
    for (i, bi) in b.iter().enumerate() {
        binding.insert(CoeffVar::B(i + 1), bi.clone());
    }
    for (i, row) in a.iter().enumerate() {
        for (j, aij) in row.iter().enumerate() {
            binding.insert(CoeffVar::A(i + 1, j + 1), aij.clone());
        }
    }
    binding
}

/// Summation indices by depth.
pub const INDEX_ALPHABET: [&str; 11] = ["i", "j", "k", "l", "m", "p", "q", "r", "u", "v", "w"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionsError {
    #[error("tree of height {height} needs more than the {max} available summation indices")]
    TooDeep { height: usize, max: usize },
}

/// Nested-sum form of `b^T W(t)` for a symbolic stage count `s`, e.g.
/// `sum_{i=1}^{s} b_i (sum_{j=1}^{s} a_{i,j})`. Equal children are grouped
/// into a power.
pub fn render_generic(t: &RootedTree) -> Result<String, ConditionsError> {
    render_generic_styled(t, RenderStyle::Plain)
}

/// `render_generic` in either plain or LaTeX notation.
pub fn render_generic_styled(
    t: &RootedTree,
    style: RenderStyle,
) -> Result<String, ConditionsError> {
    if t.height() > INDEX_ALPHABET.len() {
        return Err(ConditionsError::TooDeep {
            height: t.height(),
            max: INDEX_ALPHABET.len(),
        });
    }
    let sum = match style {
        RenderStyle::Plain => "sum",
        RenderStyle::Latex => "\\sum",
    };
    let mut out = format!("{sum}_{{{0}=1}}^{{s}} b_{0}", INDEX_ALPHABET[0]);
    write_children(t, 0, style, &mut out);
    Ok(out)
}

fn write_children(t: &RootedTree, depth: usize, style: RenderStyle, out: &mut String) {
    let (sum, open, close) = match style {
        RenderStyle::Plain => ("sum", "(", ")"),
        RenderStyle::Latex => ("\\sum", "\\Big(", "\\Big)"),
    };
    for (mult, child) in t.children().iter().dedup_with_count() {
        let outer = INDEX_ALPHABET[depth];
        let inner = INDEX_ALPHABET[depth + 1];
        out.push_str(&format!(
            " {open}{sum}_{{{inner}=1}}^{{s}} a_{{{outer},{inner}}}"
        ));
        write_children(child, depth + 1, style, out);
        out.push_str(close);
        if mult > 1 {
            out.push_str(&format!("^{mult}"));
        }
    }
}
