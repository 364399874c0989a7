//! Strong connectivity, end components and maximal end component (MEC)
//! decomposition.

use std::collections::BTreeSet;

use crate::model::VassMdp;

/// A pair (C, L) of states and transitions, both sorted by index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndComponent {
    pub states: Vec<usize>,
    pub transitions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MecDecomposition {
    /// Sorted by smallest member state.
    pub mecs: Vec<EndComponent>,
    /// MEC index of each state, if any.
    pub membership: Vec<Option<usize>>,
}

/// Strongly connected components of a directed graph given by adjacency
/// lists. Returns the component id of every node; ids are in reverse
/// topological order of the condensation (Tarjan order).
pub fn scc_ids(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    const UNVISITED: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNVISITED; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut count = 0;
    // Explicit call stack of (node, next edge position).
    let mut calls: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        calls.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(top) = calls.last_mut() {
            let v = top.0;
            if top.1 < adj[v].len() {
                let w = adj[v][top.1];
                top.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    (comp, count)
}

fn adjacency(m: &VassMdp, alive: &[bool]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m.num_states()];
    for (i, t) in m.transitions().iter().enumerate() {
        if alive[i] {
            adj[t.source].push(t.target);
        }
    }
    adj
}

/// True iff every state reaches every state.
pub fn is_strongly_connected(m: &VassMdp) -> bool {
    if m.num_states() == 0 {
        return false;
    }
    let (_, count) = scc_ids(&adjacency(m, &vec![true; m.num_transitions()]));
    count == 1
}

/// MEC decomposition of the whole model.
pub fn mec_decomposition(m: &VassMdp) -> MecDecomposition {
    mec_decomposition_within(m, &vec![true; m.num_transitions()])
}

/// MEC decomposition of the sub-MDP using only transitions with
/// `allowed[t]`. A probabilistic state with a disallowed outgoing transition
/// cannot belong to any end component, and neither can a dangling state.
pub fn mec_decomposition_within(m: &VassMdp, allowed: &[bool]) -> MecDecomposition {
    let n = m.num_states();
    let mut alive_t = allowed.to_vec();
    let mut alive_s = vec![true; n];
    loop {
        let mut changed = false;
        for p in 0..n {
            if !alive_s[p] {
                continue;
            }
            let out = m.outgoing(p);
            let dead = if m.is_probabilistic(p) {
                out.is_empty() || out.iter().any(|&t| !alive_t[t])
            } else {
                out.iter().all(|&t| !alive_t[t])
            };
            if dead {
                alive_s[p] = false;
                changed = true;
                for &t in m.outgoing(p).iter().chain(m.incoming(p)) {
                    alive_t[t] = false;
                }
            }
        }
        if changed {
            continue;
        }
        let (comp, _) = scc_ids(&adjacency(m, &alive_t));
        for (i, t) in m.transitions().iter().enumerate() {
            if alive_t[i] && comp[t.source] != comp[t.target] {
                alive_t[i] = false;
                changed = true;
            }
        }
        if !changed {
            let mut mecs: Vec<EndComponent> = Vec::new();
            let mut by_comp = std::collections::BTreeMap::new();
            for p in (0..n).filter(|&p| alive_s[p]) {
                let slot = *by_comp.entry(comp[p]).or_insert_with(|| {
                    mecs.push(EndComponent {
                        states: Vec::new(),
                        transitions: Vec::new(),
                    });
                    mecs.len() - 1
                });
                mecs[slot].states.push(p);
            }
            let mut membership = vec![None; n];
            for (i, mec) in mecs.iter().enumerate() {
                for &p in &mec.states {
                    membership[p] = Some(i);
                }
            }
            for (i, t) in m.transitions().iter().enumerate() {
                if alive_t[i] {
                    let slot = membership[t.source].expect("alive transition has alive source");
                    mecs[slot].transitions.push(i);
                }
            }
            // States are visited in index order, so MECs are already sorted
            // by their smallest member.
            return MecDecomposition { mecs, membership };
        }
    }
}

/// Outcome of each end-component condition, checked independently.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EcConditions {
    pub nonempty: bool,
    pub nondeterministic_keep_one: bool,
    pub probabilistic_keep_all: bool,
    pub closed: bool,
    pub strongly_connected: bool,
}

impl EcConditions {
    pub fn all(&self) -> bool {
        self.nonempty
            && self.nondeterministic_keep_one
            && self.probabilistic_keep_all
            && self.closed
            && self.strongly_connected
    }
}

pub fn end_component_conditions(
    m: &VassMdp,
    states: &BTreeSet<usize>,
    transitions: &BTreeSet<usize>,
) -> EcConditions {
    let nonempty = !states.is_empty();
    let nondeterministic_keep_one = states
        .iter()
        .filter(|&&p| !m.is_probabilistic(p))
        .all(|&p| m.outgoing(p).iter().any(|t| transitions.contains(t)));
    let probabilistic_keep_all = states
        .iter()
        .filter(|&&p| m.is_probabilistic(p))
        .all(|&p| m.outgoing(p).iter().all(|t| transitions.contains(t)));
    let closed = transitions.iter().all(|&t| {
        let tr = m.transition(t);
        states.contains(&tr.source) && states.contains(&tr.target)
    });
    let strongly_connected = if closed && nonempty {
        let order: Vec<usize> = states.iter().copied().collect();
        let local = |p: usize| order.binary_search(&p).expect("closed");
        let mut adj = vec![Vec::new(); order.len()];
        for &t in transitions {
            let tr = m.transition(t);
            adj[local(tr.source)].push(local(tr.target));
        }
        scc_ids(&adj).1 == 1
    } else {
        false
    };
    EcConditions {
        nonempty,
        nondeterministic_keep_one,
        probabilistic_keep_all,
        closed,
        strongly_connected,
    }
}

/// True iff (C, L) satisfies all end-component conditions.
pub fn is_end_component(m: &VassMdp, states: &BTreeSet<usize>, transitions: &BTreeSet<usize>) -> bool {
    end_component_conditions(m, states, transitions).all()
}
