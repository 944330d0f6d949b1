//! Butcher tableaux and exact order verification.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::algebra::{format_rational, int, q, to_f64};
use crate::conditions::{coefficient_binding, GenerationFlags, WeightGenerator};
use crate::document::{self, DocumentError, Object};
use crate::trees::{enumerate_by_leaf, format_tree, RootedTree};
use crate::SCHEMA;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ButcherTableau {
    name: String,
    a: Vec<Vec<BigRational>>,
    b: Vec<BigRational>,
    c: Vec<BigRational>,
    explicit: bool,
}

impl ButcherTableau {
    /// Checks dimensions; `c` defaults to the row sums of `a`.
    pub fn new(
        name: impl Into<String>,
        a: Vec<Vec<BigRational>>,
        b: Vec<BigRational>,
        c: Option<Vec<BigRational>>,
    ) -> Result<Self, DocumentError> {
        let s = b.len();
        if s == 0 {
            return Err(DocumentError::Invalid(
                "a tableau needs at least one stage".into(),
            ));
        }
        if a.len() != s {
            return Err(DocumentError::Dimension {
                field: "A".into(),
                expected: s,
                found: a.len(),
            });
        }
        for (i, row) in a.iter().enumerate() {
            if row.len() != s {
                return Err(DocumentError::Dimension {
                    field: format!("A[{}]", i + 1),
                    expected: s,
                    found: row.len(),
                });
            }
        }
        let row_sums = row_sums(&a);
        let c = match c {
            Some(c) if c.len() != s => {
                return Err(DocumentError::Dimension {
                    field: "c".into(),
                    expected: s,
                    found: c.len(),
                })
            }
            Some(c) => c,
            None => row_sums,
        };
        let explicit = a
            .iter()
            .enumerate()
            .all(|(i, row)| row[i..].iter().all(Zero::is_zero));
        Ok(ButcherTableau {
            name: name.into(),
            a,
            b,
            c,
            explicit,
        })
    }

    /// Reads the JSON tableau document:
    /// `{"name", "stages", "A", "b", "c"}` with `name` and `c` optional and
    /// every entry a rational string.
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let obj = Object::parse(text, &["name", "stages", "A", "b", "c"])?;
        let s = document::as_positive_integer("stages", obj.require("stages")?)?;
        let name = match obj.get("name") {
            Some(v) => document::as_string("name", v)?.to_string(),
            None => String::new(),
        };
        let rows = document::as_array("A", obj.require("A")?)?;
        if rows.len() != s {
            return Err(DocumentError::Dimension {
                field: "A".into(),
                expected: s,
                found: rows.len(),
            });
        }
        let a = rows
            .iter()
            .enumerate()
            .map(|(i, row)| document::rational_vector(&format!("A[{}]", i + 1), row, s))
            .collect::<Result<Vec<_>, _>>()?;
        let b = document::rational_vector("b", obj.require("b")?, s)?;
        let c = obj
            .get("c")
            .map(|v| document::rational_vector("c", v, s))
            .transpose()?;
        Self::new(name, a, b, c)
    }

    pub fn to_json(&self) -> String {
        let strings = |v: &[BigRational]| v.iter().map(format_rational).collect::<Vec<_>>();
        let value = serde_json::json!({
            "name": self.name,
            "stages": self.stages(),
            "A": self.a.iter().map(|row| strings(row)).collect::<Vec<_>>(),
            "b": strings(&self.b),
            "c": strings(&self.c),
        });
        serde_json::to_string_pretty(&value).expect("serializable")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &[Vec<BigRational>] {
        &self.a
    }

    pub fn b(&self) -> &[BigRational] {
        &self.b
    }

    pub fn c(&self) -> &[BigRational] {
        &self.c
    }

    /// Strictly lower triangular `A`.
    pub fn is_explicit(&self) -> bool {
        self.explicit
    }

    /// Whether `c[i] = sum_j a[i,j]` holds for every stage.
    pub fn row_sum_consistent(&self) -> bool {
        row_sums(&self.a) == self.c
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same method with every `b[i]` multiplied by `factor`.
    pub fn scale_b(&self, factor: &BigRational) -> Self {
        ButcherTableau {
            b: self.b.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }

    pub fn explicit_euler() -> Self {
        Self::new("explicit Euler", vec![vec![int(0)]], vec![int(1)], None).expect("valid")
    }

    pub fn implicit_midpoint() -> Self {
        Self::new("implicit midpoint", vec![vec![q(1, 2)]], vec![int(1)], None).expect("valid")
    }

    pub fn classical_rk4() -> Self {
        let z = || int(0);
        Self::new(
            "classical RK4",
            vec![
                vec![z(), z(), z(), z()],
                vec![q(1, 2), z(), z(), z()],
                vec![z(), q(1, 2), z(), z()],
                vec![z(), z(), int(1), z()],
            ],
            vec![q(1, 6), q(1, 3), q(1, 3), q(1, 6)],
            None,
        )
        .expect("valid")
    }

    /// Butcher's explicit 6-stage, order 5 family with `c = (0, u, 1/4, 1/2,
    /// 3/4, 1)`, `b[2] = 0` and `a[4,3] = v`, in its corrected form (the
    /// printed book values of `a[5,1]` and `a[5,2]` are wrong). Requires `u != 0`.
    pub fn butcher_order5_family(u: &BigRational, v: &BigRational) -> Self {
        assert!(!u.is_zero(), "the family is undefined at u = 0");
        let one = int(1);
        let uv = u * v;
        let z = || int(0);
        let a = vec![
            vec![z(), z(), z(), z(), z(), z()],
            vec![u.clone(), z(), z(), z(), z(), z()],
            vec![
                (int(-1) + int(8) * u) / (int(32) * u),
                one.clone() / (int(32) * u),
                z(),
                z(),
                z(),
                z(),
            ],
            vec![
                (int(-1) + int(4) * u + int(2) * v - int(8) * &uv) / (int(8) * u),
                (&one - int(2) * v) / (int(8) * u),
                v.clone(),
                z(),
                z(),
                z(),
            ],
            vec![
                int(3) * (&one - int(3) * u - v + int(4) * &uv) / (int(16) * u),
                int(3) * (int(-1) + v) / (int(16) * u),
                q(-3, 4) * (int(-1) + v),
                q(9, 16),
                z(),
                z(),
            ],
            vec![
                (int(-7) + int(22) * u + int(6) * v - int(24) * &uv) / (int(14) * u),
                (int(7) - int(6) * v) / (int(14) * u),
                int(12) * v / int(7),
                q(-12, 7),
                q(8, 7),
                z(),
            ],
        ];
        let b = vec![q(7, 90), z(), q(16, 45), q(2, 15), q(16, 45), q(7, 90)];
        Self::new(
            format!("Butcher 6-stage order 5 (u={u}, v={v})"),
            a,
            b,
            None,
        )
        .expect("valid")
    }
}

fn row_sums(a: &[Vec<BigRational>]) -> Vec<BigRational> {
    a.iter()
        .map(|row| row.iter().fold(BigRational::zero(), |acc, x| acc + x))
        .collect()
}

pub fn load_tableau(text: &str) -> Result<ButcherTableau, DocumentError> {
    ButcherTableau::from_json(text)
}

/// Weights of `tab` as generated polynomials, bound to the tableau entries.
struct TableauWeights<'t> {
    tab: &'t ButcherTableau,
    generator: WeightGenerator,
    binding: std::collections::BTreeMap<crate::algebra::CoeffVar, BigRational>,
}

impl<'t> TableauWeights<'t> {
    fn new(tab: &'t ButcherTableau) -> Self {
        // entries with i <= j are zero for explicit tableaux, so dropping them changes nothing
        let flags = GenerationFlags {
            explicit: tab.is_explicit(),
            substitute_c: false,
        };
        TableauWeights {
            tab,
            generator: WeightGenerator::new(tab.stages(), flags),
            binding: coefficient_binding(&tab.a, &tab.b),
        }
    }

    fn weight(&mut self, tree: &RootedTree) -> BigRational {
        debug_assert_eq!(
            self.binding.len(),
            self.tab.stages() * (self.tab.stages() + 1)
        );
        self.generator
            .weight(tree)
            .substitute(&self.binding)
            .evaluate_constant()
            .expect("all coefficient variables are bound")
    }
}

/// `b^T W(tree) - 1/tree!` on the tableau entries.
pub fn residual(tab: &ButcherTableau, tree: &RootedTree) -> BigRational {
    let weight = TableauWeights::new(tab).weight(tree);
    weight - BigRational::new(1.into(), tree.factorial().into())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VerifyMode {
    Exact,
    /// Residuals are rounded to `f64` and accepted when `|r| <= tol`.
    Float {
        tol: f64,
    },
}

impl VerifyMode {
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;

    pub fn accepts(&self, residual: &BigRational) -> bool {
        match self {
            VerifyMode::Exact => residual.is_zero(),
            VerifyMode::Float { tol } => to_f64(residual).abs() <= *tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualEntry {
    pub tree: RootedTree,
    pub order: usize,
    pub weight_value: BigRational,
    pub rhs: BigRational,
    pub residual: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderReport {
    pub tableau_name: String,
    pub stages: usize,
    pub explicit: bool,
    pub requested_order: usize,
    pub achieved_order: usize,
    pub residuals: Vec<ResidualEntry>,
    pub row_sum_consistent: bool,
    pub mode: VerifyMode,
}

/// Checks order conditions order by order up to `p_max`, stopping after the
/// first order with a violated condition. All residuals up to and including
/// that order are reported.
pub fn verify_order(tab: &ButcherTableau, p_max: usize, mode: VerifyMode) -> OrderReport {
    assert!(p_max >= 1, "maximum order must be positive");
    let trees = enumerate_by_leaf(p_max);
    let mut weights = TableauWeights::new(tab);
    let mut residuals = Vec::new();
    let mut achieved_order = 0;
    for q in 1..=p_max {
        let mut all_ok = true;
        for tree in trees.of_order(q) {
            let weight_value = weights.weight(tree);
            let rhs = BigRational::new(1.into(), tree.factorial().into());
            let residual = &weight_value - &rhs;
            all_ok &= mode.accepts(&residual);
            residuals.push(ResidualEntry {
                tree: tree.clone(),
                order: q,
                weight_value,
                rhs,
                residual,
            });
        }
        if !all_ok {
            break;
        }
        achieved_order = q;
    }
    OrderReport {
        tableau_name: tab.name().to_string(),
        stages: tab.stages(),
        explicit: tab.is_explicit(),
        requested_order: p_max,
        achieved_order,
        residuals,
        row_sum_consistent: tab.row_sum_consistent(),
        mode,
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema: &'static str,
    tableau: &'a str,
    stages: usize,
    explicit: bool,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    requested_order: usize,
    achieved_order: usize,
    row_sum_consistent: bool,
    residuals: Vec<ResidualJson>,
}

#[derive(Serialize)]
struct ResidualJson {
    tree: String,
    order: usize,
    weight: String,
    rhs: String,
    residual: String,
    satisfied: bool,
}

impl OrderReport {
    pub fn entries_failing(&self) -> impl Iterator<Item = &ResidualEntry> {
        self.residuals
            .iter()
            .filter(|e| !self.mode.accepts(&e.residual))
    }

    pub fn to_json(&self) -> String {
        let (mode, tolerance) = match self.mode {
            VerifyMode::Exact => ("exact", None),
            VerifyMode::Float { tol } => ("float", Some(tol)),
        };
        let report = ReportJson {
            schema: SCHEMA,
            tableau: &self.tableau_name,
            stages: self.stages,
            explicit: self.explicit,
            mode,
            tolerance,
            requested_order: self.requested_order,
            achieved_order: self.achieved_order,
            row_sum_consistent: self.row_sum_consistent,
            residuals: self
                .residuals
                .iter()
                .map(|e| ResidualJson {
                    tree: format_tree(&e.tree),
                    order: e.order,
                    weight: format_rational(&e.weight_value),
                    rhs: format_rational(&e.rhs),
                    residual: format_rational(&e.residual),
                    satisfied: self.mode.accepts(&e.residual),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&report).expect("serializable")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let name = if self.tableau_name.is_empty() {
            "(unnamed)"
        } else {
            &self.tableau_name
        };
        let kind = if self.explicit {
            "explicit"
        } else {
            "implicit"
        };
        let plural = if self.stages == 1 { "" } else { "s" };
        let _ = writeln!(
            out,
            "tableau: {name} ({} stage{plural}, {kind})",
            self.stages
        );
        let _ = writeln!(
            out,
            "row sums consistent with c: {}",
            if self.row_sum_consistent { "yes" } else { "no" }
        );
        let _ = match self.mode {
            VerifyMode::Exact => writeln!(out, "mode: exact"),
            VerifyMode::Float { tol } => writeln!(out, "mode: float (tol {tol:e})"),
        };
        let width = self
            .residuals
            .iter()
            .map(|e| format_tree(&e.tree).len())
            .max()
            .unwrap_or(4)
            .max(4);
        let _ = writeln!(
            out,
            "order  {:<width$}  {:>14}  {:>10}  {:>14}",
            "tree", "weight", "1/t!", "residual"
        );
        for e in &self.residuals {
            let mark = if self.mode.accepts(&e.residual) {
                ""
            } else {
                "  FAIL"
            };
            let _ = writeln!(
                out,
                "{:>5}  {:<width$}  {:>14}  {:>10}  {:>14}{mark}",
                e.order,
                format_tree(&e.tree),
                format_rational(&e.weight_value),
                format_rational(&e.rhs),
                format_rational(&e.residual),
            );
        }
        let _ = writeln!(
            out,
            "achieved order {} (requested {})",
            self.achieved_order, self.requested_order
        );
        out
    }
}

/// Largest residual magnitude among the listed entries, as `f64`.
pub fn max_abs_residual(report: &OrderReport) -> f64 {
    report
        .residuals
        .iter()
        .map(|e| to_f64(&e.residual.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::parse_tree;

    const RK4_JSON: &str = r#"{
        "name": "classical RK4",
        "stages": 4,
        "A": [["0","0","0","0"],["1/2","0","0","0"],["0","1/2","0","0"],["0","0","1","0"]],
        "b": ["1/6","1/3","1/3","1/6"]
    }"#;

    #[test]
    fn loads_rk4() {
        let tab = load_tableau(RK4_JSON).unwrap();
        assert_eq!(tab.stages(), 4);
        assert!(tab.is_explicit());
        assert_eq!(tab.c(), &[int(0), q(1, 2), q(1, 2), int(1)]);
        assert!(tab.row_sum_consistent());
        assert_eq!(tab, ButcherTableau::classical_rk4());
        assert_eq!(load_tableau(&tab.to_json()).unwrap(), tab);
    }

    #[test]
    fn defaults_and_implicit_flag() {
        let mid = load_tableau(r#"{"stages": 1, "A": [["1/2"]], "b": ["1"]}"#).unwrap();
        assert_eq!(mid.c(), &[q(1, 2)]);
        assert!(!mid.is_explicit());
        assert_eq!(mid.name(), "");
        let off = load_tableau(r#"{"stages": 1, "A": [["1/2"]], "b": ["1"], "c": ["0"]}"#).unwrap();
        assert!(!off.row_sum_consistent());
    }

    #[test]
    fn load_errors_are_distinct() {
        let cases = [
            (r#"{"stages": 2, "A": [["0"]], "b": ["1"]}"#, "dimension A"),
            (
                r#"{"stages": 2, "A": [["0","0"],["1"]], "b": ["1","0"]}"#,
                "dimension A[2]",
            ),
            (
                r#"{"stages": 1, "A": [["0"]], "b": ["1"], "c": ["0","1"]}"#,
                "dimension c",
            ),
            (r#"{"stages": 1, "A": [["x"]], "b": ["1"]}"#, "rational"),
            (
                r#"{"stages": 1, "A": [["0"]], "b": ["1"], "b": ["1"]}"#,
                "duplicate",
            ),
            (r#"{"stages": 1, "A": [["0"]]}"#, "missing"),
            (r#"{"stages": 0, "A": [], "b": []}"#, "type"),
            (
                r#"{"stages": 1, "A": [["0"]], "b": ["1"], "d": 1}"#,
                "unknown",
            ),
            (r#"{"stages": 1, "A": [["0"]], "b": ["1/0"]}"#, "rational"),
            ("not json", "json"),
        ];
        for (text, kind) in cases {
            let err = load_tableau(text).unwrap_err();
            let ok = match kind {
                "dimension A" => {
                    matches!(&err, DocumentError::Dimension { field, .. } if field == "A")
                }
                "dimension A[2]" => {
                    matches!(&err, DocumentError::Dimension { field, expected: 2, found: 1 } if field == "A[2]")
                }
                "dimension c" => {
                    matches!(&err, DocumentError::Dimension { field, .. } if field == "c")
                }
                "rational" => matches!(err, DocumentError::Rational { .. }),
                "duplicate" => err == DocumentError::DuplicateField("b".into()),
                "missing" => err == DocumentError::MissingField("b"),
                "type" => matches!(err, DocumentError::WrongType { .. }),
                "unknown" => err == DocumentError::UnknownField("d".into()),
                "json" => matches!(err, DocumentError::Json(_)),
                _ => unreachable!(),
            };
            assert!(ok, "{kind}: got {err:?}");
        }
    }

    #[test]
    fn rk4_residuals() {
        let rk4 = ButcherTableau::classical_rk4();
        assert_eq!(residual(&rk4, &parse_tree("[]").unwrap()), int(0));
        // sum b_i c_i^4 = 5/24, minus 1/5
        assert_eq!(residual(&rk4, &RootedTree::bushy(5)), q(1, 120));
        let euler = ButcherTableau::explicit_euler();
        assert_eq!(residual(&euler, &RootedTree::chain(2)), q(-1, 2));
    }

    #[test]
    fn achieved_orders() {
        let rk4 = verify_order(&ButcherTableau::classical_rk4(), 5, VerifyMode::Exact);
        assert_eq!(rk4.achieved_order, 4);
        assert_eq!(rk4.residuals.len(), 17);
        assert!(rk4
            .entries_failing()
            .any(|e| e.tree == RootedTree::bushy(5) && e.residual == q(1, 120)));

        let euler = verify_order(&ButcherTableau::explicit_euler(), 3, VerifyMode::Exact);
        assert_eq!(euler.achieved_order, 1);
        // first failure visible, nothing beyond it
        assert_eq!(euler.residuals.len(), 2);

        let mid = verify_order(&ButcherTableau::implicit_midpoint(), 4, VerifyMode::Exact);
        assert_eq!(mid.achieved_order, 2);

        let family = ButcherTableau::butcher_order5_family(&q(2, 5), &q(1, 3));
        assert!(family.is_explicit() && family.row_sum_consistent());
        assert_eq!(
            family.c(),
            &[int(0), q(2, 5), q(1, 4), q(1, 2), q(3, 4), int(1)]
        );
        assert_eq!(
            verify_order(&family, 6, VerifyMode::Exact).achieved_order,
            5
        );
    }

    #[test]
    fn scaling_b_breaks_the_first_condition() {
        let rk4 = ButcherTableau::classical_rk4();
        for factor in [q(1, 2), q(3, 2), int(2)] {
            let report = verify_order(&rk4.scale_b(&factor), 4, VerifyMode::Exact);
            assert_eq!(report.achieved_order, 0);
            assert_eq!(report.residuals[0].residual, &factor - int(1));
        }
    }

    #[test]
    fn explicit_methods_stop_at_stage_count() {
        // any explicit tableau fails the chain of order s + 1
        let tabs = [
            ButcherTableau::explicit_euler(),
            ButcherTableau::classical_rk4(),
            ButcherTableau::butcher_order5_family(&q(1, 3), &q(1, 2)),
        ];
        for tab in tabs {
            let s = tab.stages();
            assert_eq!(
                residual(&tab, &RootedTree::chain(s + 1)),
                -BigRational::new(
                    1.into(),
                    crate::trees::RootedTree::chain(s + 1).factorial().into()
                )
            );
            assert!(verify_order(&tab, s + 1, VerifyMode::Exact).achieved_order <= s);
        }
    }

    #[test]
    fn float_mode_tolerance() {
        let rk4 = ButcherTableau::classical_rk4();
        let perturbed = ButcherTableau::new(
            "perturbed",
            rk4.a().to_vec(),
            vec![
                q(1, 6) + q(1, 10i64.pow(14)),
                q(1, 3),
                q(1, 3),
                q(1, 6) - q(1, 10i64.pow(14)),
            ],
            None,
        )
        .unwrap();
        assert_eq!(
            verify_order(&perturbed, 5, VerifyMode::Exact).achieved_order,
            1
        );
        let float = verify_order(
            &perturbed,
            5,
            VerifyMode::Float {
                tol: VerifyMode::DEFAULT_TOLERANCE,
            },
        );
        assert_eq!(float.achieved_order, 4);
        assert!(max_abs_residual(&float) > 1e-3);
    }

    #[test]
    fn decimal_tableau_in_float_mode() {
        let tab = load_tableau(
            r#"{"stages": 2, "A": [["0","0"],["0.6666666666666666","0"]], "b": ["0.25","0.75"]}"#,
        )
        .unwrap();
        assert_eq!(verify_order(&tab, 3, VerifyMode::Exact).achieved_order, 1);
        let report = verify_order(&tab, 3, VerifyMode::Float { tol: 1e-12 });
        assert_eq!(report.achieved_order, 2);
    }

    #[test]
    fn report_renderings() {
        let report = verify_order(&ButcherTableau::explicit_euler(), 2, VerifyMode::Exact);
        let text = report.to_text();
        assert!(text.contains("achieved order 1 (requested 2)"));
        assert!(text
            .lines()
            .any(|l| l.contains("[[]]") && l.ends_with("FAIL")));
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["schema"], "butcher-kit/1");
        assert_eq!(json["achieved_order"], 1);
        assert_eq!(json["residuals"][1]["residual"], "-1/2");
        assert_eq!(json["residuals"][1]["satisfied"], false);
    }
}
