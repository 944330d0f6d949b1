//! Rooted trees as unordered recursive lists of subtrees.
//!
//! A tree is stored in canonical form: its children are kept sorted under
//! the total order implemented by [`Ord`] (first by number of nodes, then
//! lexicographically on the sorted children). Two trees built from the same
//! multiset of subtrees are therefore structurally identical, and equality,
//! hashing and ordering all agree with unordered equality.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RootedTree {
    children: Vec<RootedTree>,
    order: usize,
}

impl RootedTree {
    /// The single node tree, written `[]`.
    pub fn single_node() -> Self {
        RootedTree {
            children: Vec::new(),
            order: 1,
        }
    }

    /// Builds the tree whose root has the given subtrees as children, in any order.
    pub fn from_children(mut children: Vec<RootedTree>) -> Self {
        children.sort();
        let order = 1 + children.iter().map(|c| c.order).sum::<usize>();
        RootedTree { children, order }
    }

    /// Path graph with `order` nodes; `chain(1)` is the single node.
    pub fn chain(order: usize) -> Self {
        assert!(order >= 1, "a tree has at least one node");
        (1..order).fold(Self::single_node(), |t, _| Self::from_children(vec![t]))
    }

    /// Root with `order - 1` leaves attached directly.
    pub fn bushy(order: usize) -> Self {
        assert!(order >= 1, "a tree has at least one node");
        Self::from_children(vec![Self::single_node(); order - 1])
    }

    pub fn children(&self) -> &[RootedTree] {
        &self.children
    }

    pub fn is_single_node(&self) -> bool {
        self.children.is_empty()
    }

    /// Number of nodes.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        1 + self.children.iter().map(|c| c.height()).max().unwrap_or(0)
    }

    /// `t! = order(t) * t_1! * ... * t_n!`.
    pub fn factorial(&self) -> BigUint {
        self.children
            .iter()
            .fold(BigUint::from(self.order), |acc, c| acc * c.factorial())
    }

    /// Number of distinct ordered tuples realizing the unordered child list:
    /// `n! / prod(m_g!)` over the multiplicities `m_g` of equal children.
    pub fn symmetry_delta(&self) -> BigUint {
        let n = self.children.len();
        let denom = self
            .children
            .iter()
            .dedup_with_count()
            .fold(BigUint::one(), |acc, (m, _)| acc * factorial(m));
        factorial(n) / denom
    }

    /// `alpha_t = delta_t / n! * alpha_{t_1} * ... * alpha_{t_n}`.
    pub fn alpha(&self) -> BigRational {
        let own = BigRational::new(
            self.symmetry_delta().into(),
            factorial(self.children.len()).into(),
        );
        self.children.iter().fold(own, |acc, c| acc * c.alpha())
    }

    /// All trees obtained by attaching one new leaf to some node of `self`.
    pub fn add_leaf(&self) -> BTreeSet<RootedTree> {
        let mut cache = HashMap::new();
        add_leaf_memo(self, &mut cache).clone()
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

impl Ord for RootedTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order
            .cmp(&other.order)
            .then_with(|| self.children.cmp(&other.children))
    }
}

impl PartialOrd for RootedTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order on canonical trees used for canonical forms and output order.
pub fn compare_trees(t1: &RootedTree, t2: &RootedTree) -> Ordering {
    t1.cmp(t2)
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, child) in self.children.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{child}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RootedTree({self})")
    }
}

/// Canonical bracket string, e.g. `[[],[[]]]`.
pub fn format_tree(t: &RootedTree) -> String {
    t.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeParseError {
    #[error("unexpected end of input at byte {0}")]
    UnexpectedEnd(usize),
    #[error("unexpected character {found:?} at byte {pos}, expected {expected}")]
    Unexpected {
        pos: usize,
        found: char,
        expected: &'static str,
    },
}

/// Parses the bracket grammar `tree := "[" [ tree ("," tree)* ] "]"`.
///
/// ASCII whitespace between tokens is ignored and `⊙` is accepted as a
/// synonym for `[]`.
pub fn parse_tree(text: &str) -> Result<RootedTree, TreeParseError> {
    let mut parser = Parser { text, pos: 0 };
    let tree = parser.tree()?;
    parser.skip_ws();
    match parser.peek() {
        None => Ok(tree),
        Some(c) => Err(TreeParseError::Unexpected {
            pos: parser.pos,
            found: c,
            expected: "end of input",
        }),
    }
}

impl FromStr for RootedTree {
    type Err = TreeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_tree(s)
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn tree(&mut self) -> Result<RootedTree, TreeParseError> {
        self.skip_ws();
        let pos = self.pos;
        match self.bump() {
            Some('⊙') => Ok(RootedTree::single_node()),
            Some('[') => {
                let mut children = Vec::new();
                self.skip_ws();
                if self.peek() == Some(']') {
                    self.bump();
                    return Ok(RootedTree::single_node());
                }
                loop {
                    children.push(self.tree()?);
                    self.skip_ws();
                    let pos = self.pos;
                    match self.bump() {
                        Some(',') => continue,
                        Some(']') => break,
                        Some(found) => {
                            return Err(TreeParseError::Unexpected {
                                pos,
                                found,
                                expected: "',' or ']'",
                            })
                        }
                        None => return Err(TreeParseError::UnexpectedEnd(pos)),
                    }
                }
                Ok(RootedTree::from_children(children))
            }
            Some(found) => Err(TreeParseError::Unexpected {
                pos,
                found,
                expected: "'[' or '⊙'",
            }),
            None => Err(TreeParseError::UnexpectedEnd(pos)),
        }
    }
}

/// Trees grouped by order `1..=max_order`, each group duplicate free and
/// iterated in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeSetByOrder {
    per_order: Vec<BTreeSet<RootedTree>>,
}

impl TreeSetByOrder {
    pub fn max_order(&self) -> usize {
        self.per_order.len()
    }

    /// Trees of order exactly `q`; empty for `q` outside `1..=max_order`.
    pub fn of_order(&self, q: usize) -> impl Iterator<Item = &RootedTree> {
        q.checked_sub(1)
            .and_then(|k| self.per_order.get(k))
            .into_iter()
            .flatten()
    }

    pub fn count(&self, q: usize) -> usize {
        q.checked_sub(1)
            .and_then(|k| self.per_order.get(k))
            .map_or(0, BTreeSet::len)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.per_order.iter().map(BTreeSet::len).collect()
    }

    pub fn total(&self) -> usize {
        self.per_order.iter().map(BTreeSet::len).sum()
    }

    /// All trees, by increasing order and canonically within an order.
    pub fn iter(&self) -> impl Iterator<Item = &RootedTree> {
        self.per_order.iter().flatten()
    }

    pub fn groups(&self) -> impl Iterator<Item = (usize, &BTreeSet<RootedTree>)> {
        self.per_order.iter().enumerate().map(|(k, s)| (k + 1, s))
    }
}

fn add_leaf_memo<'c>(
    t: &RootedTree,
    cache: &'c mut HashMap<RootedTree, BTreeSet<RootedTree>>,
) -> &'c BTreeSet<RootedTree> {
    if !cache.contains_key(t) {
        let mut out = BTreeSet::new();
        let mut grafted = t.children.clone();
        grafted.push(RootedTree::single_node());
        out.insert(RootedTree::from_children(grafted));
        for (k, child) in t.children.iter().enumerate() {
            // equal neighbours give the same results
            if k > 0 && t.children[k - 1] == *child {
                continue;
            }
            let grown: Vec<RootedTree> = add_leaf_memo(child, cache).iter().cloned().collect();
            for g in grown {
                let mut children = t.children.clone();
                children[k] = g;
                out.insert(RootedTree::from_children(children));
            }
        }
        cache.insert(t.clone(), out);
    }
    &cache[t]
}

/// All trees of order `1..=p`, grown by attaching a leaf to every node of
/// every tree of the previous order.
pub fn enumerate_by_leaf(p: usize) -> TreeSetByOrder {
    assert!(p >= 1, "order must be positive");
    let mut cache = HashMap::new();
    let mut per_order = vec![BTreeSet::from([RootedTree::single_node()])];
    for _ in 1..p {
        let prev = per_order.last().expect("nonempty");
        let mut next = BTreeSet::new();
        for t in prev {
            next.extend(add_leaf_memo(t, &mut cache).iter().cloned());
        }
        per_order.push(next);
    }
    TreeSetByOrder { per_order }
}

/// Partitions of `n` into non-increasing positive parts.
pub fn integer_partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=max_part.min(n)).rev() {
            prefix.push(part);
            go(n - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// All trees of order `1..=p`, built from the root: for every partition
/// `q - 1 = p_1 + ... + p_n` every multiset of already generated subtrees of
/// orders `p_1, ..., p_n` becomes the child list of a new root.
pub fn enumerate_by_partitions(p: usize) -> TreeSetByOrder {
    assert!(p >= 1, "order must be positive");
    let mut per_order: Vec<BTreeSet<RootedTree>> = Vec::with_capacity(p);
    for q in 1..=p {
        let mut trees = BTreeSet::new();
        for partition in integer_partitions(q - 1) {
            // one factor per distinct part: all multisets of that many trees of that order
            let factors: Vec<Vec<Vec<RootedTree>>> = partition
                .iter()
                .dedup_with_count()
                .map(|(mult, &part)| {
                    per_order[part - 1]
                        .iter()
                        .cloned()
                        .combinations_with_replacement(mult)
                        .collect()
                })
                .collect();
            for choice in factors.into_iter().multi_cartesian_product() {
                trees.insert(RootedTree::from_children(choice.concat()));
            }
        }
        if q == 1 {
            trees.insert(RootedTree::single_node());
        }
        per_order.push(trees);
    }
    TreeSetByOrder { per_order }
}

/// Number of increasing labelings `order! / t!`, as a machine integer.
pub fn labeling_count(t: &RootedTree) -> Option<u64> {
    (factorial(t.order) / t.factorial()).to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf() -> RootedTree {
        RootedTree::single_node()
    }

    fn t(s: &str) -> RootedTree {
        parse_tree(s).unwrap()
    }

    #[test]
    fn single_node_basics() {
        let n = leaf();
        assert!(n.children().is_empty());
        assert_eq!(n.order(), 1);
        assert_eq!(format_tree(&n), "[]");
        assert_eq!(n.factorial(), BigUint::from(1u32));
        assert_eq!(n.symmetry_delta(), BigUint::from(1u32));
        assert_eq!(n.alpha(), BigRational::one());
    }

    #[test]
    fn from_children_is_unordered() {
        let a = RootedTree::from_children(vec![leaf(), RootedTree::chain(2)]);
        let b = RootedTree::from_children(vec![RootedTree::chain(2), leaf()]);
        assert_eq!(a, b);
        assert_eq!(RootedTree::from_children(vec![]), leaf());
        assert_eq!(RootedTree::from_children(vec![leaf(), leaf()]).order(), 3);
    }

    #[test]
    fn paper_input_example_collapses() {
        // f''(f''(f, f'(f)), f) and f''(f, f''(f'(f), f))
        let b1 = t("[[[],[[]]],[]]");
        let b2 = t("[[],[[[]],[]]]");
        assert_eq!(b1, b2);
        assert_eq!(format_tree(&b1), "[[],[[],[[]]]]");
    }

    #[test]
    fn ordering() {
        assert_eq!(
            compare_trees(&leaf(), &RootedTree::chain(2)),
            Ordering::Less
        );
        let x = t("[[],[[]]]");
        assert_eq!(compare_trees(&x, &x), Ordering::Equal);
        // same order, tie broken on children: [] < [[]]
        assert_eq!(compare_trees(&t("[[],[]]"), &t("[[[]]]")), Ordering::Less);
        assert_eq!(
            compare_trees(&t("[[[]]]"), &t("[[],[]]")),
            Ordering::Greater
        );
    }

    #[test]
    fn worked_example_order_factorial_alpha() {
        // f''(f'''(f'(f), f'(f), f), f)
        let beta = t("[[[⊙],[⊙],⊙],⊙]");
        assert_eq!(beta.order(), 8);
        assert_eq!(beta.factorial(), BigUint::from(192u32));
        assert_eq!(beta.alpha(), BigRational::new(1.into(), 2.into()));
        assert_eq!(t("[[[]],[[]],[]]").symmetry_delta(), BigUint::from(3u32));
    }

    #[test]
    fn chains_and_bushes() {
        for q in 1..=10 {
            let c = RootedTree::chain(q);
            assert_eq!(c.order(), q);
            assert_eq!(c.height(), q);
            // q! by direct product
            let direct = (1..=q as u64).product::<u64>();
            assert_eq!(c.factorial(), BigUint::from(direct));
            assert_eq!(c.alpha(), BigRational::one());
        }
        assert_eq!(RootedTree::bushy(4).symmetry_delta(), BigUint::from(1u32));
        assert_eq!(
            RootedTree::bushy(3).alpha(),
            BigRational::new(1.into(), 2.into())
        );
    }

    #[test]
    fn alpha_of_cherry_matches_labeling_count() {
        // 3!/3 = 2 labelings of the ordered cherry; the two leaves are
        // interchangeable so only one survives in the unordered tree.
        let cherry = RootedTree::bushy(3);
        assert_eq!(labeling_count(&cherry), Some(2));
        assert_eq!(
            cherry.alpha() * BigRational::from_integer(2.into()),
            BigRational::one()
        );
    }

    #[test]
    fn parse_accepts_whitespace_and_glyph() {
        assert_eq!(t("[]"), leaf());
        assert_eq!(t("⊙"), leaf());
        assert_eq!(t(" [ [ ] , [ [ ] ] ] "), t("[[],[[]]]"));
        assert_eq!(t("[[],[[]]]").order(), 4);
        assert_eq!(t("[[[]],[]]"), t("[[],[[]]]"));
    }

    #[test]
    fn parse_errors_carry_position() {
        assert_eq!(parse_tree(""), Err(TreeParseError::UnexpectedEnd(0)));
        assert_eq!(parse_tree("[[]"), Err(TreeParseError::UnexpectedEnd(3)));
        assert!(matches!(
            parse_tree("[]]"),
            Err(TreeParseError::Unexpected {
                pos: 2,
                found: ']',
                ..
            })
        ));
        assert!(matches!(
            parse_tree("[x]"),
            Err(TreeParseError::Unexpected {
                pos: 1,
                found: 'x',
                ..
            })
        ));
        assert!(matches!(
            parse_tree("[[],]"),
            Err(TreeParseError::Unexpected {
                pos: 4,
                found: ']',
                ..
            })
        ));
        assert!(matches!(
            parse_tree("[[][]]"),
            Err(TreeParseError::Unexpected {
                pos: 3,
                found: '[',
                ..
            })
        ));
    }

    #[test]
    fn order_four_sets() {
        let trees = enumerate_by_leaf(4);
        let got: Vec<Vec<String>> = trees
            .groups()
            .map(|(_, s)| s.iter().map(format_tree).collect())
            .collect();
        assert_eq!(
            got,
            vec![
                vec!["[]"],
                vec!["[[]]"],
                vec!["[[],[]]", "[[[]]]"],
                vec!["[[],[],[]]", "[[],[[]]]", "[[[],[]]]", "[[[[]]]]"],
            ]
        );
        assert_eq!(enumerate_by_leaf(1).counts(), vec![1]);
        assert_eq!(enumerate_by_partitions(1).counts(), vec![1]);
    }

    #[test]
    fn counts_through_ten() {
        let expected = vec![1, 1, 2, 4, 9, 20, 48, 115, 286, 719];
        let leaf = enumerate_by_leaf(10);
        assert_eq!(leaf.counts(), expected);
        assert_eq!(leaf.total(), 1205);
        assert_eq!(enumerate_by_partitions(10).counts(), expected);
    }

    #[test]
    fn both_enumerations_agree() {
        for p in 1..=8 {
            assert_eq!(enumerate_by_leaf(p), enumerate_by_partitions(p), "p = {p}");
        }
    }

    #[test]
    fn partitions_of_small_numbers() {
        assert_eq!(integer_partitions(0), vec![Vec::<usize>::new()]);
        assert_eq!(
            integer_partitions(4),
            vec![
                vec![4],
                vec![3, 1],
                vec![2, 2],
                vec![2, 1, 1],
                vec![1, 1, 1, 1]
            ]
        );
        // p(1..=10)
        let sizes: Vec<usize> = (1..=10).map(|n| integer_partitions(n).len()).collect();
        assert_eq!(sizes, vec![1, 2, 3, 5, 7, 11, 15, 22, 30, 42]);
    }

    #[test]
    fn add_leaf_of_cherry() {
        let grown: Vec<String> = RootedTree::bushy(3)
            .add_leaf()
            .iter()
            .map(format_tree)
            .collect();
        assert_eq!(grown, vec!["[[],[],[]]", "[[],[[]]]"]);
    }

    #[test]
    fn round_trip_all_order_ten_trees() {
        for t in enumerate_by_leaf(10).of_order(10) {
            assert_eq!(&parse_tree(&format_tree(t)).unwrap(), t);
        }
    }
}
