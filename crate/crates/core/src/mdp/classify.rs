//! Connectedness classes of an MDP.
//!
//! Communicating and weakly communicating are existential over policies and
//! are decided exactly from the union support graph: an MDP communicates iff
//! that graph is strongly connected, and it is weakly communicating iff all
//! states that are recurrent under *some* policy (the union of its end
//! components) are mutually reachable. Ergodic and unichain quantify over
//! every policy and are checked by enumerating the `A^S` deterministic
//! stationary policies, or a seeded sample of them beyond the cap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{policy_count, StationaryPolicy, TabularMDP};
use crate::graph::{reachable, support, Components};

pub const DEFAULT_POLICY_CAP: u128 = 1_000_000;

/// Seed of the policy sample drawn when enumeration exceeds the cap.
pub const CAPPED_SAMPLE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ClassifyMethod {
    /// All `A^S` policies were checked.
    Exhaustive { policies: u128 },
    /// Only `sampled` uniformly drawn policies were checked; the ergodic
    /// and unichain flags may be false positives.
    Capped { sampled: u128 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectednessReport {
    pub ergodic: bool,
    pub unichain: bool,
    pub communicating: bool,
    pub weakly_communicating: bool,
    /// One line per violated class.
    pub witnesses: Vec<String>,
    pub method: ClassifyMethod,
}

impl ConnectednessReport {
    pub fn is_exhaustive(&self) -> bool {
        matches!(self.method, ClassifyMethod::Exhaustive { .. })
    }

    pub fn witness(&self) -> Option<&str> {
        self.witnesses.first().map(String::as_str)
    }
}

fn union_graph(mdp: &TabularMDP) -> Vec<Vec<usize>> {
    let n = mdp.n_states();
    (0..n)
        .map(|s| {
            (0..n)
                .filter(|&j| (0..mdp.n_actions()).any(|a| mdp.row(s, a)[j] > 0.0))
                .collect()
        })
        .collect()
}

/// Maximal end components: state sets that some choice of actions keeps
/// closed and strongly connected. A state is recurrent under some stationary
/// policy iff it lies in one of them.
pub fn end_components(mdp: &TabularMDP) -> Vec<Vec<usize>> {
    let n = mdp.n_states();
    let mut allowed: Vec<Vec<usize>> = (0..n).map(|_| (0..mdp.n_actions()).collect()).collect();
    let successors = |s: usize, a: usize| -> Vec<usize> { (0..n).filter(|&j| mdp.row(s, a)[j] > 0.0).collect() };
    loop {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                let mut v: Vec<usize> = allowed[s].iter().flat_map(|&a| successors(s, a)).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let comps = Components::new(&adj);
        let alive: Vec<bool> = allowed.iter().map(|a| !a.is_empty()).collect();
        let mut changed = false;
        for s in 0..n {
            let before = allowed[s].len();
            allowed[s].retain(|&a| {
                successors(s, a)
                    .iter()
                    .all(|&j| comps.of[j] == comps.of[s] && alive[j])
            });
            changed |= allowed[s].len() != before;
        }
        if !changed {
            return comps
                .members
                .into_iter()
                .filter(|m| m.iter().all(|&s| !allowed[s].is_empty()))
                .collect();
        }
    }
}

/// True iff the union support graph is strongly connected.
pub(crate) fn communicating_witness(mdp: &TabularMDP) -> Option<String> {
    let adj = union_graph(mdp);
    for s in 0..mdp.n_states() {
        let seen = reachable(&adj, s);
        if let Some(t) = seen.iter().position(|&x| !x) {
            return Some(format!("not communicating: state {t} is unreachable from state {s} under every policy"));
        }
    }
    None
}

pub(crate) fn weakly_communicating_witness(mdp: &TabularMDP) -> Option<String> {
    let adj = union_graph(mdp);
    let recurrent: Vec<usize> = end_components(mdp).into_iter().flatten().collect();
    for &s in &recurrent {
        let seen = reachable(&adj, s);
        if let Some(&t) = recurrent.iter().find(|&&t| !seen[t]) {
            return Some(format!(
                "not weakly communicating: states {s} and {t} are each recurrent under some policy but {t} is unreachable from {s}"
            ));
        }
    }
    None
}

/// Checks one policy; returns (irreducible, single recurrent class,
/// number of recurrent classes).
fn policy_structure(mdp: &TabularMDP, policy: &StationaryPolicy) -> (bool, usize) {
    let (p, _) = mdp.induced_chain(policy);
    let adj = support(&p, mdp.n_states());
    let comps = Components::new(&adj);
    (comps.len() == 1, comps.closed(&adj).len())
}

pub fn classify(mdp: &TabularMDP, policy_cap: u128) -> ConnectednessReport {
    let mut witnesses = Vec::new();
    let comm = communicating_witness(mdp);
    let weak = weakly_communicating_witness(mdp);

    let total = policy_count(mdp.n_states(), mdp.n_actions());
    let (mut ergodic, mut unichain) = (true, true);
    let mut erg_witness = None;
    let mut uni_witness = None;
    let mut check = |policy: StationaryPolicy| -> bool {
        let (irreducible, classes) = policy_structure(mdp, &policy);
        if ergodic && !irreducible {
            ergodic = false;
            erg_witness = Some(format!(
                "not ergodic: policy {:?} induces a reducible chain",
                policy.actions()
            ));
        }
        if unichain && classes != 1 {
            unichain = false;
            uni_witness = Some(format!(
                "not unichain: policy {:?} induces {classes} recurrent classes",
                policy.actions()
            ));
        }
        ergodic || unichain
    };

    let method = if total <= policy_cap {
        for policy in StationaryPolicy::enumerate(mdp.n_states(), mdp.n_actions()) {
            if !check(policy) {
                break;
            }
        }
        ClassifyMethod::Exhaustive { policies: total }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(CAPPED_SAMPLE_SEED);
        for _ in 0..policy_cap {
            let actions = (0..mdp.n_states())
                .map(|_| rng.random_range(0..mdp.n_actions()))
                .collect();
            if !check(StationaryPolicy::new(actions, mdp.n_actions()).expect("in range")) {
                break;
            }
        }
        ClassifyMethod::Capped { sampled: policy_cap }
    };

    witnesses.extend(erg_witness);
    witnesses.extend(uni_witness);
    let communicating = comm.is_none();
    let weakly_communicating = weak.is_none();
    witnesses.extend(comm);
    witnesses.extend(weak);
    ConnectednessReport {
        ergodic,
        unichain,
        communicating,
        weakly_communicating,
        witnesses,
        method,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{chain, heaven_hell, random_mdp, two_point_bandit, RewardModel};

    /// Brute-force oracle: reachability "under some policy" by enumerating
    /// every deterministic policy and taking the union of reachable sets.
    fn reachable_under_some_policy(mdp: &TabularMDP, from: usize, to: usize) -> bool {
        StationaryPolicy::enumerate(mdp.n_states(), mdp.n_actions()).any(|pi| {
            let (p, _) = mdp.induced_chain(&pi);
            reachable(&support(&p, mdp.n_states()), from)[to]
        })
    }

    #[test]
    fn heaven_hell_is_not_weakly_communicating() {
        let m = heaven_hell(1, true).unwrap();
        let r = classify(&m, DEFAULT_POLICY_CAP);
        assert!(!r.communicating);
        assert!(!r.weakly_communicating);
        assert!(!r.unichain);
        assert!(!r.ergodic);
        assert_eq!(r.method, ClassifyMethod::Exhaustive { policies: 8 });
        // Oracle over all 8 policies: s1 and s2 are mutually unreachable.
        assert!(!reachable_under_some_policy(&m, 1, 2));
        assert!(!reachable_under_some_policy(&m, 2, 1));
        assert_eq!(end_components(&m), vec![vec![1], vec![2]]);
        assert!(r.witnesses.iter().any(|w| w.starts_with("not weakly communicating")));
    }

    #[test]
    fn single_state_is_everything() {
        let r = classify(&two_point_bandit(0.0).unwrap(), DEFAULT_POLICY_CAP);
        assert!(r.ergodic && r.unichain && r.communicating && r.weakly_communicating);
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn uniform_rows_are_ergodic() {
        let m = TabularMDP::from_flat(2, 2, vec![0.5; 8], vec![RewardModel::PointMass(0.0); 4]).unwrap();
        let r = classify(&m, DEFAULT_POLICY_CAP);
        assert!(r.ergodic);
        assert_eq!(r.method, ClassifyMethod::Exhaustive { policies: 4 });
    }

    #[test]
    fn chain_communicates_but_is_not_ergodic() {
        let r = classify(&chain(3, 0.005, 1.0).unwrap(), DEFAULT_POLICY_CAP);
        assert!(r.communicating && r.weakly_communicating);
        // "Always left" makes state 0 absorbing, so the chain is reducible.
        assert!(!r.ergodic);
        assert!(r.unichain);
    }

    #[test]
    fn transient_prefix_is_weakly_communicating() {
        // State 0 can only leave; states 1 and 2 form a cycle.
        let t = vec![
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, //
            0.0, 1.0, 0.0,
        ];
        let m = TabularMDP::from_flat(3, 1, t, vec![RewardModel::PointMass(0.0); 3]).unwrap();
        let r = classify(&m, DEFAULT_POLICY_CAP);
        assert!(!r.communicating);
        assert!(r.weakly_communicating);
        assert!(r.unichain);
    }

    #[test]
    fn capped_is_marked() {
        let m = random_mdp(6, 3, 1.0, 1).unwrap();
        let r = classify(&m, 10);
        assert_eq!(r.method, ClassifyMethod::Capped { sampled: 10 });
        assert!(!r.is_exhaustive());
    }

    #[test]
    fn communicating_matches_policy_oracle() {
        for seed in 0..60 {
            let m = random_mdp(4, 2, 0.3, seed).unwrap();
            let r = classify(&m, DEFAULT_POLICY_CAP);
            let oracle = (0..4).all(|s| (0..4).all(|t| reachable_under_some_policy(&m, s, t)));
            assert_eq!(r.communicating, oracle, "seed {seed}");
        }
    }
}
