//! Concrete state machinery: mixed-radix global indexing, local projections
//! and transition groups.
//!
//! Valuations are vectors of value indices (position `k` holds the index of
//! variable `k`'s value within its declared domain).

use crate::problem::{Owner, Topology};

/// Default ceiling on the number of global states.
pub const DEFAULT_STATE_BOUND: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("state space too large: {count} states exceed the bound of {bound}")]
    Overflow { count: u128, bound: usize },
    #[error("value index {index} out of domain for variable #{var}")]
    ValueOutOfDomain { var: usize, index: usize },
    #[error("transition {from} -> {to} changes a variable outside the write set of process {process}")]
    NotAProcessTransition {
        process: usize,
        from: usize,
        to: usize,
    },
}

impl SpaceError {
    pub fn code(&self) -> &'static str {
        match self {
            SpaceError::Overflow { .. } => "OVERFLOW",
            SpaceError::ValueOutOfDomain { .. } => "VALUE_OUT_OF_DOMAIN",
            SpaceError::NotAProcessTransition { .. } => "NOT_A_PROCESS_TRANSITION",
        }
    }
}

/// Number of global states, bounded by [`DEFAULT_STATE_BOUND`].
pub fn state_count(topo: &Topology) -> Result<usize, SpaceError> {
    state_count_bounded(topo, DEFAULT_STATE_BOUND)
}

pub fn state_count_bounded(topo: &Topology, bound: usize) -> Result<usize, SpaceError> {
    let mut count: u128 = 1;
    for v in &topo.vars {
        count = count.saturating_mul(v.domain_size() as u128);
        if count > bound as u128 {
            return Err(SpaceError::Overflow { count, bound });
        }
    }
    Ok(count as usize)
}

#[derive(Clone, Debug)]
pub struct StateSpace {
    sizes: Vec<usize>,
    place: Vec<usize>,
    count: usize,
    values: Vec<Vec<i64>>,
    read_sets: Vec<Vec<usize>>,
    write_sets: Vec<Vec<usize>>,
    local_sizes: Vec<usize>,
    write_counts: Vec<usize>,
    /// Per process, the variables it does not read (for group expansion).
    unread: Vec<Vec<usize>>,
}

impl StateSpace {
    pub fn new(topo: &Topology) -> Result<Self, SpaceError> {
        Self::with_bound(topo, DEFAULT_STATE_BOUND)
    }

    pub fn with_bound(topo: &Topology, bound: usize) -> Result<Self, SpaceError> {
        let count = state_count_bounded(topo, bound)?;
        let sizes: Vec<usize> = topo.vars.iter().map(|v| v.domain_size()).collect();
        let mut place = Vec::with_capacity(sizes.len());
        let mut acc = 1usize;
        for &d in &sizes {
            place.push(acc);
            acc *= d;
        }
        let product = |set: &[usize]| set.iter().map(|&v| sizes[v]).product::<usize>();
        let local_sizes = topo.read_sets.iter().map(|r| product(r)).collect();
        let write_counts = topo.write_sets.iter().map(|w| product(w)).collect();
        let unread = topo
            .read_sets
            .iter()
            .map(|r| (0..sizes.len()).filter(|v| !r.contains(v)).collect())
            .collect();
        Ok(StateSpace {
            place,
            count,
            values: topo.vars.iter().map(|v| v.values.clone()).collect(),
            read_sets: topo.read_sets.clone(),
            write_sets: topo.write_sets.clone(),
            local_sizes,
            write_counts,
            unread,
            sizes,
        })
    }

    pub fn state_count(&self) -> usize {
        self.count
    }

    pub fn var_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn process_count(&self) -> usize {
        self.read_sets.len()
    }

    pub fn domain_size(&self, var: usize) -> usize {
        self.sizes[var]
    }

    pub fn read_set(&self, process: usize) -> &[usize] {
        &self.read_sets[process]
    }

    pub fn write_set(&self, process: usize) -> &[usize] {
        &self.write_sets[process]
    }

    pub fn index_of(&self, valuation: &[usize]) -> Result<usize, SpaceError> {
        let mut s = 0;
        for (var, (&x, &d)) in valuation.iter().zip(&self.sizes).enumerate() {
            if x >= d {
                return Err(SpaceError::ValueOutOfDomain { var, index: x });
            }
            s += x * self.place[var];
        }
        Ok(s)
    }

    pub fn valuation_of(&self, s: usize) -> Vec<usize> {
        (0..self.sizes.len()).map(|v| self.digit(s, v)).collect()
    }

    /// Value index of variable `var` in state `s`.
    pub fn digit(&self, s: usize, var: usize) -> usize {
        (s / self.place[var]) % self.sizes[var]
    }

    /// Declared value of variable `var` in state `s`.
    pub fn value(&self, s: usize, var: usize) -> i64 {
        self.values[var][self.digit(s, var)]
    }

    pub fn declared_values(&self, var: usize) -> &[i64] {
        &self.values[var]
    }

    pub fn with_digit(&self, s: usize, var: usize, x: usize) -> usize {
        s - self.digit(s, var) * self.place[var] + x * self.place[var]
    }

    pub fn local_size(&self, process: usize) -> usize {
        self.local_sizes[process]
    }

    /// Read-set projection of `s`, mixed radix in global variable order.
    pub fn project_local(&self, s: usize, process: usize) -> usize {
        project(&self.read_sets[process], &self.sizes, |v| self.digit(s, v))
    }

    /// Value indices of the read-set variables for a local state, in
    /// read-set order.
    pub fn local_valuation(&self, process: usize, local: usize) -> Vec<usize> {
        unproject(&self.read_sets[process], &self.sizes, local)
    }

    /// Value index of `var` within local state `local` of `process`.
    pub fn local_digit(&self, process: usize, local: usize, var: usize) -> Option<usize> {
        let mut rest = local;
        for &v in &self.read_sets[process] {
            let d = self.sizes[v];
            if v == var {
                return Some(rest % d);
            }
            rest /= d;
        }
        None
    }

    /// Number of valuations of the write set.
    pub fn write_count(&self, process: usize) -> usize {
        self.write_counts[process]
    }

    pub fn write_valuation(&self, process: usize, w: usize) -> Vec<usize> {
        unproject(&self.write_sets[process], &self.sizes, w)
    }

    pub fn current_write(&self, s: usize, process: usize) -> usize {
        project(&self.write_sets[process], &self.sizes, |v| self.digit(s, v))
    }

    /// Write valuation that a local state already holds.
    pub fn current_write_of_local(&self, process: usize, local: usize) -> usize {
        project(&self.write_sets[process], &self.sizes, |v| {
            self.local_digit(process, local, v)
                .expect("write set is contained in the read set")
        })
    }

    /// Overwrites the write set of `process` in `s` with valuation `w`.
    pub fn apply_write(&self, s: usize, process: usize, w: usize) -> usize {
        let mut t = s;
        let mut rest = w;
        for &v in &self.write_sets[process] {
            let d = self.sizes[v];
            t = self.with_digit(t, v, rest % d);
            rest /= d;
        }
        t
    }

    /// Local state space of a predicate owner. Global predicates see the
    /// whole state.
    pub fn owner_local_size(&self, owner: Owner) -> usize {
        match owner {
            Owner::Process(i) => self.local_size(i),
            Owner::Global => self.count,
        }
    }

    pub fn owner_local(&self, owner: Owner, s: usize) -> usize {
        match owner {
            Owner::Process(i) => self.project_local(s, i),
            Owner::Global => s,
        }
    }

    /// All global states whose read-set projection for `process` is `local`.
    pub fn states_with_local(&self, process: usize, local: usize) -> Vec<usize> {
        let mut base = 0;
        for (&v, x) in self.read_sets[process].iter().zip(self.local_valuation(process, local)) {
            base += x * self.place[v];
        }
        let unread = &self.unread[process];
        let free: usize = unread.iter().map(|&v| self.sizes[v]).product();
        (0..free)
            .map(|k| {
                let mut s = base;
                let mut rest = k;
                for &v in unread {
                    s += (rest % self.sizes[v]) * self.place[v];
                    rest /= self.sizes[v];
                }
                s
            })
            .collect()
    }

    fn check_process_transition(&self, (from, to): (usize, usize), process: usize) -> Result<(), SpaceError> {
        let writes = &self.write_sets[process];
        for v in 0..self.sizes.len() {
            if !writes.contains(&v) && self.digit(from, v) != self.digit(to, v) {
                return Err(SpaceError::NotAProcessTransition { process, from, to });
            }
        }
        Ok(())
    }

    /// Whether two transitions of `process` belong to the same group.
    pub fn same_group(
        &self,
        t1: (usize, usize),
        t2: (usize, usize),
        process: usize,
    ) -> Result<bool, SpaceError> {
        self.check_process_transition(t1, process)?;
        self.check_process_transition(t2, process)?;
        Ok(self.project_local(t1.0, process) == self.project_local(t2.0, process)
            && self.project_local(t1.1, process) == self.project_local(t2.1, process))
    }

    /// Distinct indices always decode to distinct valuations. Checked by
    /// exhaustive pairwise comparison, so only call it on small spaces.
    pub fn check_state_distinction(&self) -> bool {
        let vals: Vec<Vec<usize>> = (0..self.count).map(|s| self.valuation_of(s)).collect();
        for a in 0..vals.len() {
            for b in a + 1..vals.len() {
                if vals[a] == vals[b] {
                    return false;
                }
            }
        }
        true
    }
}

fn project(set: &[usize], sizes: &[usize], digit: impl Fn(usize) -> usize) -> usize {
    let mut idx = 0;
    let mut place = 1;
    for &v in set {
        idx += digit(v) * place;
        place *= sizes[v];
    }
    idx
}

fn unproject(set: &[usize], sizes: &[usize], mut idx: usize) -> Vec<usize> {
    set.iter()
        .map(|&v| {
            let x = idx % sizes[v];
            idx /= sizes[v];
            x
        })
        .collect()
}

/// All global transitions of `process` that start from local state
/// `source_local` and write `target_write`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionGroup {
    pub process: usize,
    pub source_local: usize,
    pub target_write: usize,
}

impl TransitionGroup {
    pub fn expand(&self, space: &StateSpace) -> Vec<(usize, usize)> {
        space
            .states_with_local(self.process, self.source_local)
            .into_iter()
            .map(|s| (s, space.apply_write(s, self.process, self.target_write)))
            .collect()
    }

    pub fn is_self_loop(&self, space: &StateSpace) -> bool {
        space.current_write_of_local(self.process, self.source_local) == self.target_write
    }
}
