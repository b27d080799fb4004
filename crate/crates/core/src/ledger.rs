//! Cluster-wide bookkeeping of node capacity and live task allocations.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ids::{ExecutionId, NodeId, TaskId};
use crate::resources::Resources;
use crate::strategy::NodeSnapshot;

/// Live allocations are keyed by execution and task, since task ids are only
/// unique within one execution.
pub type AllocationKey = (ExecutionId, TaskId);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    pub node: NodeId,
    pub resources: Resources,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct NodeAccount {
    capacity: Resources,
    allocated: Resources,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResourceLedger {
    nodes: BTreeMap<NodeId, NodeAccount>,
    allocations: BTreeMap<AllocationKey, Allocation>,
}

impl ResourceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId, capacity: Resources) {
        self.nodes.insert(
            id,
            NodeAccount {
                capacity,
                allocated: Resources::ZERO,
            },
        );
    }

    pub fn capacity(&self, node: &NodeId) -> Option<Resources> {
        self.nodes.get(node).map(|n| n.capacity)
    }

    pub fn allocated(&self, node: &NodeId) -> Option<Resources> {
        self.nodes.get(node).map(|n| n.allocated)
    }

    pub fn allocation(&self, key: &AllocationKey) -> Option<&Allocation> {
        self.allocations.get(key)
    }

    pub fn live_allocations(&self) -> usize {
        self.allocations.len()
    }

    /// Allocations currently held on `node`.
    pub fn allocations_on<'a>(&'a self, node: &'a NodeId) -> impl Iterator<Item = &'a AllocationKey> + 'a {
        self.allocations
            .iter()
            .filter(move |(_, a)| &a.node == node)
            .map(|(k, _)| k)
    }

    /// Snapshots of the listed nodes, in the order given.
    pub fn snapshots<'a>(&self, nodes: impl IntoIterator<Item = &'a NodeId>) -> Vec<NodeSnapshot> {
        nodes
            .into_iter()
            .filter_map(|id| {
                self.nodes.get(id).map(|n| NodeSnapshot {
                    id: id.clone(),
                    capacity: n.capacity,
                    allocated: n.allocated,
                })
            })
            .collect()
    }

    pub fn reserve(&mut self, key: AllocationKey, node: &NodeId, resources: Resources) -> Result<()> {
        let account = self
            .nodes
            .get_mut(node)
            .ok_or_else(|| Error::UnknownNode(node.clone()))?;
        if self.allocations.contains_key(&key) {
            return Err(Error::LedgerViolation(format!(
                "task {}/{} already holds an allocation",
                key.0, key.1
            )));
        }
        let after = account.allocated + resources;
        if !after.fits_within(&account.capacity) {
            return Err(Error::LedgerViolation(format!(
                "reserving {resources:?} on {node} exceeds capacity {:?}",
                account.capacity
            )));
        }
        account.allocated = after;
        self.allocations.insert(
            key,
            Allocation {
                node: node.clone(),
                resources,
            },
        );
        Ok(())
    }

    pub fn release(&mut self, key: &AllocationKey) -> Option<Allocation> {
        let alloc = self.allocations.remove(key)?;
        let account = self
            .nodes
            .get_mut(&alloc.node)
            .expect("allocation refers to a known node");
        account.allocated = account.allocated - alloc.resources;
        Some(alloc)
    }

    /// Re-derives every node's allocation from the live allocation list and
    /// checks it against both the stored counters and the node capacity.
    pub fn audit(&self) -> Result<()> {
        let mut sums: BTreeMap<&NodeId, Resources> = BTreeMap::new();
        for ((exec, task), alloc) in &self.allocations {
            if !self.nodes.contains_key(&alloc.node) {
                return Err(Error::LedgerViolation(format!(
                    "{exec}/{task} allocated on unknown node {}",
                    alloc.node
                )));
            }
            let sum = sums.entry(&alloc.node).or_default();
            *sum = *sum + alloc.resources;
        }
        for (id, account) in &self.nodes {
            let expected = sums.get(id).copied().unwrap_or_default();
            if expected != account.allocated {
                return Err(Error::LedgerViolation(format!(
                    "node {id}: counters {:?} but allocations sum to {expected:?}",
                    account.allocated
                )));
            }
            if !account.allocated.fits_within(&account.capacity) {
                return Err(Error::LedgerViolation(format!(
                    "node {id}: allocated {:?} exceeds capacity {:?}",
                    account.allocated, account.capacity
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::Millicores;

    fn key(t: &str) -> AllocationKey {
        (ExecutionId::parse("e").unwrap(), t.into())
    }

    fn res(cpus: u64, mem: u64) -> Resources {
        Resources::new(Millicores::from_cores(cpus), mem)
    }

    #[test]
    fn reserve_then_release_restores_counters() {
        let mut ledger = ResourceLedger::new();
        ledger.add_node("n1".into(), res(4, 100));
        let before = ledger.clone();
        ledger.reserve(key("a"), &"n1".into(), res(3, 60)).unwrap();
        ledger.audit().unwrap();
        assert_eq!(ledger.allocated(&"n1".into()), Some(res(3, 60)));
        assert_eq!(ledger.release(&key("a")).unwrap().resources, res(3, 60));
        assert_eq!(ledger, before);
    }

    #[test]
    fn overcommit_is_refused() {
        let mut ledger = ResourceLedger::new();
        ledger.add_node("n1".into(), res(4, 100));
        ledger.reserve(key("a"), &"n1".into(), res(3, 10)).unwrap();
        assert!(ledger.reserve(key("b"), &"n1".into(), res(2, 10)).is_err());
        assert!(ledger.reserve(key("c"), &"n1".into(), res(1, 91)).is_err());
        assert!(ledger.reserve(key("a"), &"n1".into(), res(1, 1)).is_err());
        ledger.audit().unwrap();
    }

    #[test]
    fn audit_detects_drifted_counters() {
        let mut ledger = ResourceLedger::new();
        ledger.add_node("n1".into(), res(4, 100));
        ledger.reserve(key("a"), &"n1".into(), res(1, 1)).unwrap();
        ledger.nodes.get_mut(&NodeId::from("n1")).unwrap().allocated = res(2, 1);
        assert!(ledger.audit().is_err());
    }
}
