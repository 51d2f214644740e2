use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::state::{partners, CoevolState};

/// Default reciprocity product above which two agents count as connected.
pub const DEFAULT_RECIPROCITY: f64 = 0.25;

/// Tolerance for recognizing the uniform network.
const UNIFORM_TOL: f64 = 1e-3;

/// Smallest return weight that keeps a committed spoke attached to its hub.
pub const SERVED_WEIGHT: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MotifLabel {
    Pair,
    /// Star on `k` agents: one center and `k - 1` spokes.
    Star(usize),
    Isolated,
    /// No reciprocated link anywhere in the network.
    Cyclic,
    /// Uniformly connected network.
    Symmetric,
    Other,
}

impl MotifLabel {
    /// Size of a star-like motif, counting a pair as a two-agent star.
    pub fn star_size(&self) -> Option<usize> {
        match *self {
            MotifLabel::Pair => Some(2),
            MotifLabel::Star(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for MotifLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotifLabel::Pair => f.write_str("pair"),
            MotifLabel::Star(k) => write!(f, "star-{k}"),
            MotifLabel::Isolated => f.write_str("isolated"),
            MotifLabel::Cyclic => f.write_str("cyclic"),
            MotifLabel::Symmetric => f.write_str("symmetric"),
            MotifLabel::Other => f.write_str("other"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    /// Agents in increasing order.
    pub members: Vec<usize>,
    pub label: MotifLabel,
}

/// Partition of the agents into motifs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifCensus {
    /// Components ordered by their smallest member.
    pub components: Vec<Component>,
}

impl MotifCensus {
    pub fn counts(&self) -> BTreeMap<MotifLabel, usize> {
        let mut out = BTreeMap::new();
        for c in &self.components {
            *out.entry(c.label).or_insert(0) += 1;
        }
        out
    }

    /// Canonical text form such as `pair+star-3`, labels sorted.
    pub fn signature(&self) -> String {
        let mut parts = Vec::new();
        for (label, count) in self.counts() {
            parts.extend(std::iter::repeat_n(label.to_string(), count));
        }
        parts.join("+")
    }

    /// Whether every component is a pair, a star or an isolated agent.
    pub fn is_star_partition(&self) -> bool {
        self.components
            .iter()
            .all(|c| matches!(c.label, MotifLabel::Pair | MotifLabel::Star(_) | MotifLabel::Isolated))
    }
}

/// Labels the motifs of `s` on the graph with an edge `(x, y)` whenever
/// `c_xy c_yx > threshold`, or when one side is committed
/// (`c_xy >= 1 - threshold`) and the other still serves it
/// (`c_yx > 0.01`). The second rule keeps stars with many spokes intact: a
/// hub spreads its weight, so some hub-spoke products are necessarily small.
///
/// The uniform network is reported as one `Symmetric` component. A network
/// without any reciprocated edge is one `Cyclic` component; otherwise
/// edgeless agents are `Isolated`, two-agent components `Pair`, components
/// with one hub adjacent to everybody and no other edges `Star(k)`, and
/// anything else `Other`.
pub fn motif_census(s: &CoevolState, threshold: f64) -> MotifCensus {
    let n = s.n();
    let everyone: Vec<usize> = (0..n).collect();
    let uniform = 1.0 / (n.max(2) - 1) as f64;
    if n >= 3 && (0..n).all(|x| partners(n, x).all(|y| (s.link(x, y) - uniform).abs() < UNIFORM_TOL)) {
        return MotifCensus { components: vec![Component { members: everyone, label: MotifLabel::Symmetric }] };
    }

    let committed = |x: usize, y: usize| s.link(x, y) >= 1.0 - threshold && s.link(y, x) > SERVED_WEIGHT;
    let adjacent =
        |x: usize, y: usize| x != y && (s.reciprocity(x, y) > threshold || committed(x, y) || committed(y, x));
    let mut seen = vec![false; n];
    let mut groups = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut members = vec![root];
        let mut frontier = vec![root];
        while let Some(x) = frontier.pop() {
            for y in 0..n {
                if !seen[y] && adjacent(x, y) {
                    seen[y] = true;
                    members.push(y);
                    frontier.push(y);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    if groups.iter().all(|g| g.len() == 1) {
        return MotifCensus { components: vec![Component { members: everyone, label: MotifLabel::Cyclic }] };
    }

    let components = groups
        .into_iter()
        .map(|members| {
            let k = members.len();
            let label = match k {
                1 => MotifLabel::Isolated,
                2 => MotifLabel::Pair,
                _ => {
                    let degree = |x: usize| members.iter().filter(|&&y| adjacent(x, y)).count();
                    let edges: usize = members.iter().map(|&x| degree(x)).sum::<usize>() / 2;
                    let hub = members.iter().any(|&x| degree(x) == k - 1);
                    if hub && edges == k - 1 {
                        MotifLabel::Star(k)
                    } else {
                        MotifLabel::Other
                    }
                }
            };
            Component { members, label }
        })
        .collect();
    MotifCensus { components }
}
