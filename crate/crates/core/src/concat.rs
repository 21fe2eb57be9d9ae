//! Concatenated `n -> 1` codes built from 2- and 3-bit subunits.
//!
//! Alice encodes groups of bits with subunit codes and feeds the resulting
//! one-bit messages into the next layer until one bit is left. Bob decodes
//! top-down, using each decoded bit as the received message of the subunit
//! one level below.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::class_of;
use crate::error::{Error, Result};
use crate::mzi::{entangled_state, Setting};
use crate::qrac::{default_bases, quantum_success};
use crate::qubit::{joint_distribution, PureState};
use crate::rng::{pick_outcome, stream_rng, KeyedStream};

const CHUNK: u64 = 1 << 14;

/// Tree node; leaves carry their input bit position (zero-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(usize),
    Unit(Vec<Node>),
}

impl Node {
    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Leaf(_) => f.write_str("·"),
            Node::Unit(children) => {
                write!(f, "[{}", children.len())?;
                for c in children {
                    f.write_str(",")?;
                    c.write(f)?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A concatenation scheme over `n` input bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcatTree {
    n: usize,
    root: Node,
}

impl ConcatTree {
    /// Checks arities and that the leaves are exactly `0..n`.
    pub fn new(root: Node) -> Result<Self> {
        fn visit(node: &Node, seen: &mut Vec<usize>) -> Result<()> {
            match node {
                Node::Leaf(i) => seen.push(*i),
                Node::Unit(children) => {
                    if !(2..=3).contains(&children.len()) {
                        return Err(Error::UnsupportedBitCount {
                            n: children.len(),
                            reason: "subunits have arity 2 or 3",
                        });
                    }
                    for c in children {
                        visit(c, seen)?;
                    }
                }
            }
            Ok(())
        }
        if matches!(root, Node::Leaf(_)) {
            return Err(Error::UnsupportedBitCount {
                n: 1,
                reason: "a tree needs at least one subunit",
            });
        }
        let mut seen = Vec::new();
        visit(&root, &mut seen)?;
        let n = seen.len();
        seen.sort_unstable();
        if seen.iter().enumerate().any(|(k, i)| k != *i) {
            return Err(Error::InvalidBases(format!(
                "leaf positions must be 0..{n}, each used once"
            )));
        }
        Ok(ConcatTree { n, root })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// `(k_i, j_i)` per leaf: arity-2 and arity-3 ancestor counts.
    pub fn depth_profile(&self) -> Vec<DepthProfile> {
        fn visit(node: &Node, acc: DepthProfile, out: &mut [DepthProfile]) {
            match node {
                Node::Leaf(i) => out[*i] = acc,
                Node::Unit(children) => {
                    let acc = if children.len() == 2 {
                        DepthProfile {
                            k: acc.k + 1,
                            ..acc
                        }
                    } else {
                        DepthProfile {
                            j: acc.j + 1,
                            ..acc
                        }
                    };
                    for c in children {
                        visit(c, acc, out);
                    }
                }
            }
        }
        let mut out = vec![DepthProfile::default(); self.n];
        visit(&self.root, DepthProfile::default(), &mut out);
        out
    }

    /// Number of subunits of arity 2 and 3.
    pub fn unit_counts(&self) -> (usize, usize) {
        fn visit(node: &Node, acc: &mut (usize, usize)) {
            if let Node::Unit(children) = node {
                if children.len() == 2 {
                    acc.0 += 1;
                } else {
                    acc.1 += 1;
                }
                children.iter().for_each(|c| visit(c, acc));
            }
        }
        let mut acc = (0, 0);
        visit(&self.root, &mut acc);
        acc
    }

    /// Subunits (outermost first) on the way from the root to `leaf`, with
    /// the zero-based child position taken at each.
    fn ancestors(&self, leaf: usize) -> Vec<(usize, usize)> {
        fn visit(node: &Node, leaf: usize, path: &mut Vec<(usize, usize)>) -> bool {
            match node {
                Node::Leaf(i) => *i == leaf,
                Node::Unit(children) => {
                    for (pos, c) in children.iter().enumerate() {
                        path.push((children.len(), pos));
                        if visit(c, leaf, path) {
                            return true;
                        }
                        path.pop();
                    }
                    false
                }
            }
        }
        let mut path = Vec::new();
        visit(&self.root, leaf, &mut path);
        path
    }
}

impl fmt::Display for ConcatTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f)
    }
}

impl FromStr for ConcatTree {
    type Err = Error;

    /// Nested arity lists such as `[2,[2,·,·],[2,·,·]]`; leaves may be
    /// written `·`, `.`, `_` or `x` and are numbered left to right.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = TreeParser {
            s,
            pos: 0,
            leaves: 0,
        };
        let root = p.node()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        ConcatTree::new(root)
    }
}

struct TreeParser<'a> {
    s: &'a str,
    pos: usize,
    leaves: usize,
}

impl TreeParser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::TreeParse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek().filter(|c| c.is_whitespace()) {
            self.pos += c.len_utf8();
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            _ => Err(self.error(&format!("expected '{want}'"))),
        }
    }

    fn node(&mut self) -> Result<Node> {
        self.skip_ws();
        match self.peek() {
            Some(c @ ('·' | '.' | '_' | 'x')) => {
                self.pos += c.len_utf8();
                self.leaves += 1;
                Ok(Node::Leaf(self.leaves - 1))
            }
            Some('[') => {
                self.pos += 1;
                self.skip_ws();
                let start = self.pos;
                let digits = self.s[start..]
                    .chars()
                    .take_while(char::is_ascii_digit)
                    .count();
                if digits == 0 {
                    return Err(self.error("expected subunit arity"));
                }
                let arity: usize = self.s[start..start + digits]
                    .parse()
                    .map_err(|_| self.error("arity out of range"))?;
                if !(2..=3).contains(&arity) {
                    return Err(self.error("arity must be 2 or 3"));
                }
                self.pos += digits;
                let mut children = Vec::with_capacity(arity);
                for _ in 0..arity {
                    self.expect(',')?;
                    children.push(self.node()?);
                }
                self.expect(']')?;
                Ok(Node::Unit(children))
            }
            _ => Err(self.error("expected '[' or a leaf marker")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthProfile {
    pub k: u32,
    pub j: u32,
}

impl DepthProfile {
    pub fn success(&self) -> f64 {
        pkj(self.k, self.j)
    }
}

/// `(k, j)` with `n = 2^k 3^j`, if `n` is 3-smooth.
pub fn smooth_exponents(mut n: usize) -> Option<(u32, u32)> {
    if n == 0 {
        return None;
    }
    let (mut k, mut j) = (0, 0);
    while n.is_multiple_of(2) {
        n /= 2;
        k += 1;
    }
    while n.is_multiple_of(3) {
        n /= 3;
        j += 1;
    }
    (n == 1).then_some((k, j))
}

/// Least `m >= n` of the form `2^k 3^j`.
pub fn smooth_ceiling(n: usize) -> usize {
    (n.max(1)..)
        .find(|m| smooth_exponents(*m).is_some())
        .expect("powers of two are unbounded")
}

/// Balanced tree for 3-smooth `n`: arity-3 layers next to the leaves, then
/// arity-2 layers up to the root.
pub fn build_tree(n: usize) -> Result<ConcatTree> {
    let (k, j) = smooth_exponents(n).ok_or(Error::NotSmooth(n))?;
    if n < 2 {
        return Err(Error::UnsupportedBitCount {
            n,
            reason: "a tree needs at least two input bits",
        });
    }
    let mut layer: Vec<Node> = (0..n).map(Node::Leaf).collect();
    for arity in std::iter::repeat_n(3, j as usize).chain(std::iter::repeat_n(2, k as usize)) {
        let mut next = Vec::with_capacity(layer.len() / arity);
        let mut it = layer.into_iter();
        loop {
            let group: Vec<Node> = it.by_ref().take(arity).collect();
            if group.is_empty() {
                break;
            }
            next.push(Node::Unit(group));
        }
        layer = next;
    }
    let root = layer.pop().expect("one root");
    ConcatTree::new(root)
}

/// `½ (1 + 2^(-k/2) 3^(-j/2))`.
pub fn pkj(k: u32, j: u32) -> f64 {
    0.5 * (1.0 + 2f64.powf(-f64::from(k) / 2.0) * 3f64.powf(-f64::from(j) / 2.0))
}

pub fn analytic_per_bit(t: &ConcatTree) -> Vec<f64> {
    t.depth_profile()
        .iter()
        .map(DepthProfile::success)
        .collect()
}

/// Per-leaf success as `½ (1 + Π (2 p_s - 1))` over ancestor subunits, with
/// `p_s` the single-stage success of the default 2- or 3-bit protocol.
pub fn bias_product_per_bit(t: &ConcatTree) -> Result<Vec<f64>> {
    let p2 = quantum_success(&default_bases(2)?)?;
    let p3 = quantum_success(&default_bases(3)?)?;
    Ok((0..t.n())
        .map(|leaf| {
            let bias: f64 = t
                .ancestors(leaf)
                .iter()
                .map(|(arity, _)| {
                    if *arity == 2 {
                        2.0 * p2 - 1.0
                    } else {
                        2.0 * p3 - 1.0
                    }
                })
                .product();
            0.5 * (1.0 + bias)
        })
        .collect())
}

/// `½ + 1 / (2 √n)`.
pub fn quantum_bound(n: usize) -> f64 {
    0.5 + 0.5 / (n as f64).sqrt()
}

/// Quantum value reached after padding `n` up to the next 3-smooth size.
pub fn padded_lower_bound(n: usize) -> f64 {
    quantum_bound(smooth_ceiling(n))
}

/// How each subunit's two-party statistics are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Born rule on the path-spin singlet with Alice measuring along `Â_i`.
    #[default]
    Born,
    /// The interferometer model with BS2+PS2 tuned to `-Â_i`.
    Mzi,
}

/// Joint outcome tables for one subunit arity, indexed `[class][query]`.
struct UnitTables {
    probs: Vec<Vec<[f64; 4]>>,
    /// Added to `x_1 ⊕ α` to form Alice's message.
    flip: u8,
}

impl UnitTables {
    fn build(arity: usize, engine: Engine) -> Result<Self> {
        let bases = default_bases(arity)?;
        let singlet = PureState::path_spin_singlet();
        let mzi_state = entangled_state(
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::PI,
        )?;
        let probs = bases
            .alice
            .iter()
            .enumerate()
            .map(|(i, a)| {
                bases
                    .bob
                    .iter()
                    .enumerate()
                    .map(|(j, b)| match engine {
                        Engine::Born => joint_distribution(&singlet, a, b),
                        Engine::Mzi => Setting::from_directions(i + 1, j + 1, &-*a, b)
                            .born_probabilities(&mzi_state),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let flip = match engine {
            Engine::Born => 1,
            Engine::Mzi => 0,
        };
        Ok(UnitTables { probs, flip })
    }
}

#[derive(Debug, Clone, Copy)]
enum Child {
    Leaf(usize),
    Unit(usize),
}

/// Subunits in post-order with the per-unit Bob query for one target leaf.
struct Plan {
    units: Vec<Vec<Child>>,
    bob_query: Vec<usize>,
    /// Unit ids from the root down to the target leaf.
    path: Vec<usize>,
}

impl Plan {
    fn new(t: &ConcatTree, leaf: usize) -> Self {
        fn visit(
            node: &Node,
            leaf: usize,
            units: &mut Vec<Vec<Child>>,
            query: &mut Vec<usize>,
            path: &mut Vec<usize>,
        ) -> (Child, bool) {
            match node {
                Node::Leaf(i) => (Child::Leaf(*i), *i == leaf),
                Node::Unit(children) => {
                    let mut kids = Vec::with_capacity(children.len());
                    let mut on_path = None;
                    for (pos, c) in children.iter().enumerate() {
                        let (child, hit) = visit(c, leaf, units, query, path);
                        if hit {
                            on_path = Some(pos);
                        }
                        kids.push(child);
                    }
                    let id = units.len();
                    units.push(kids);
                    query.push(on_path.unwrap_or(0));
                    if on_path.is_some() {
                        path.push(id);
                    }
                    (Child::Unit(id), on_path.is_some())
                }
            }
        }
        let (mut units, mut bob_query, mut path) = (Vec::new(), Vec::new(), Vec::new());
        visit(&t.root, leaf, &mut units, &mut bob_query, &mut path);
        path.reverse();
        Plan {
            units,
            bob_query,
            path,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    pub query: usize,
    pub successes: u64,
    pub shots: u64,
    pub rate: f64,
}

fn check_input(t: &ConcatTree, input: &[u8], query: usize) -> Result<()> {
    if input.len() != t.n() {
        return Err(Error::BitCountMismatch {
            expected: t.n(),
            got: input.len(),
        });
    }
    if let Some(b) = input.iter().find(|b| **b > 1) {
        return Err(Error::InvalidOutcome(*b));
    }
    if query == 0 || query > t.n() {
        return Err(Error::QueryOutOfRange { query, n: t.n() });
    }
    Ok(())
}

/// Runs the full encode/decode chain `shots` times for the 1-based `query`
/// and counts how often Bob recovers `input[query - 1]`.
///
/// Each subunit consumes one keyed draw per shot, so the result does not
/// depend on how shots are split across workers.
pub fn simulate(
    t: &ConcatTree,
    input: &[u8],
    query: usize,
    shots: u64,
    seed: u64,
    engine: Engine,
) -> Result<SimulationOutcome> {
    check_input(t, input, query)?;
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let tables = [UnitTables::build(2, engine)?, UnitTables::build(3, engine)?];
    let plan = Plan::new(t, query - 1);
    let units = plan.units.len() as u64;
    let target = input[query - 1];

    let run_chunk = |start: u64, end: u64| -> u64 {
        let mut stream = KeyedStream::at(seed, query as u64, start * units);
        let mut msg = vec![0u8; plan.units.len()];
        let mut bob = vec![0u8; plan.units.len()];
        let mut wins = 0;
        for _ in start..end {
            for (id, kids) in plan.units.iter().enumerate() {
                let arity = kids.len();
                let mut x = 0u32;
                for c in kids {
                    let bit = match c {
                        Child::Leaf(i) => input[*i],
                        Child::Unit(u) => msg[*u],
                    };
                    x = (x << 1) | u32::from(bit);
                }
                let table = &tables[arity - 2];
                let p = &table.probs[class_of(x, arity)][plan.bob_query[id]];
                let outcome = pick_outcome(p, stream.next_uniform());
                let alice = (outcome >> 1) as u8;
                let x1 = (x >> (arity - 1)) as u8 & 1;
                msg[id] = x1 ^ alice ^ table.flip;
                bob[id] = (outcome & 1) as u8;
            }
            let mut y = msg[plan.units.len() - 1];
            for id in &plan.path {
                y ^= bob[*id];
            }
            wins += u64::from(y == target);
        }
        wins
    };

    let successes: u64 = (0..shots.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| run_chunk(c * CHUNK, ((c + 1) * CHUNK).min(shots)))
        .sum();
    Ok(SimulationOutcome {
        query,
        successes,
        shots,
        rate: successes as f64 / shots as f64,
    })
}

/// A non-smooth `n` embedded into the balanced tree of size
/// `smooth_ceiling(n)`, with the extra leaves fixed to 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedCode {
    n: usize,
    tree: ConcatTree,
    leaf_of: Vec<usize>,
    permuted: bool,
}

impl PaddedCode {
    /// Input bit `k` sits on leaf `k`; dummies fill the tail.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedBitCount {
                n,
                reason: "padding needs at least two input bits",
            });
        }
        let tree = build_tree(smooth_ceiling(n))?;
        Ok(PaddedCode {
            n,
            tree,
            leaf_of: (0..n).collect(),
            permuted: false,
        })
    }

    /// Input bits placed on a uniformly random set of leaves drawn from a
    /// seed both parties hold. Stand-in for a shared-randomness protocol.
    pub fn with_shared_permutation(n: usize, seed: u64) -> Result<Self> {
        let mut code = Self::new(n)?;
        let mut leaves: Vec<usize> = (0..code.tree.n()).collect();
        leaves.shuffle(&mut stream_rng(seed, 0));
        leaves.truncate(n);
        code.leaf_of = leaves;
        code.permuted = true;
        Ok(code)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tree(&self) -> &ConcatTree {
        &self.tree
    }

    pub fn is_permuted(&self) -> bool {
        self.permuted
    }

    /// Zero-based leaf holding input bit `k` (zero-based).
    pub fn leaf_of(&self, k: usize) -> usize {
        self.leaf_of[k]
    }

    pub fn embed(&self, input: &[u8]) -> Result<Vec<u8>> {
        if input.len() != self.n {
            return Err(Error::BitCountMismatch {
                expected: self.n,
                got: input.len(),
            });
        }
        let mut full = vec![0u8; self.tree.n()];
        for (k, bit) in input.iter().enumerate() {
            full[self.leaf_of[k]] = *bit;
        }
        Ok(full)
    }

    pub fn per_bit_success(&self) -> Vec<f64> {
        let all = analytic_per_bit(&self.tree);
        self.leaf_of.iter().map(|l| all[*l]).collect()
    }

    pub fn simulate(
        &self,
        input: &[u8],
        query: usize,
        shots: u64,
        seed: u64,
        engine: Engine,
    ) -> Result<SimulationOutcome> {
        if query == 0 || query > self.n {
            return Err(Error::QueryOutOfRange { query, n: self.n });
        }
        let full = self.embed(input)?;
        let mut out = simulate(
            &self.tree,
            &full,
            self.leaf_of[query - 1] + 1,
            shots,
            seed,
            engine,
        )?;
        out.query = query;
        Ok(out)
    }
}
