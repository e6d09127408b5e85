#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mcgs/serde.hpp"
#include "mcgs/types.hpp"

namespace mcgs {

struct StructureReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// DAG of solution nodes: a primary-edge tree rooted at v0 plus optional
// reference edges that always point from an older node to a newer one.
// With zero reference edges the structure is exactly a search tree.
//
// Node ids are dense and monotone in creation order (v0 == 0). State
// transitions are restricted: Drafted -> {Evaluated, Buggy, Failed} via
// record_outcome, Buggy -> Failed via mark_failed. Stats only ever grow.
class SolutionGraph {
 public:
  SolutionGraph();

  // Creates a Drafted child of parent. created_step is stamped from
  // set_current_step. Throws UnknownParent / GraphFinalized.
  NodeId add_child(NodeId parent, SolutionPayload payload, OperatorKind op);

  // Adds reference edges source -> target for every source, all-or-nothing.
  // Throws UnknownNode, EmptySources, BackwardReference (source not strictly
  // older than target), DuplicateEdge (any existing edge on the same pair,
  // or a repeated source). Updates target provenance.
  void add_reference_edges(const std::vector<NodeId>& sources, NodeId target,
                           RefKind kind);

  const SolutionNode& node(NodeId id) const;
  bool has_node(NodeId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < nodes_.size();
  }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<NodeId>& primary_children(NodeId id) const;
  // Incoming reference edge sources of target, in insertion order.
  const std::vector<NodeId>& reference_sources(NodeId target) const;
  const std::vector<EdgeRecord>& edges() const { return edges_; }
  std::int64_t reference_edge_count() const { return ref_edge_count_; }

  // leaf first, root last.
  std::vector<NodeId> primary_path_to_root(NodeId leaf) const;
  bool is_ancestor(NodeId ancestor, NodeId id) const;
  // Children of v0 produced by Draft (aggregation roots excluded).
  int draft_children_of_root() const;

  void set_current_step(std::int64_t step) { current_step_ = step; }
  std::int64_t current_step() const { return current_step_; }

  void finalize() { finalized_ = true; }
  bool finalized() const { return finalized_; }

  // Drafted -> Evaluated (metric required) | Buggy | Failed (no metric).
  void record_outcome(NodeId id, ExecState state, std::optional<double> metric);
  // Buggy -> Failed (debug budget exhausted).
  void mark_failed(NodeId id);
  void mark_review_warned(NodeId id);
  // One backpropagation increment: N += 1, Q += delta.
  void add_visit(NodeId id, double delta);

  StructureReport validate_structure() const;

  Json to_json() const;
  static SolutionGraph from_json(const Json& j);

  // Restore interface used by snapshot loading and event-log replay. Bypasses
  // transition checks; validate_structure() audits the result.
  void restore_node(SolutionNode n);
  void restore_edge(const EdgeRecord& e);
  void restore_stats(NodeId id, NodeStats stats);
  void restore_state(NodeId id, ExecState state, std::optional<double> metric);

 private:
  SolutionNode& node_mut(NodeId id);
  void index_edge(const EdgeRecord& e);

  std::vector<SolutionNode> nodes_;
  std::vector<EdgeRecord> edges_;
  std::vector<std::vector<NodeId>> children_;  // primary edges only
  std::vector<std::vector<NodeId>> in_refs_;
  std::set<std::pair<NodeId, NodeId>> edge_keys_;
  std::int64_t ref_edge_count_ = 0;
  std::int64_t current_step_ = 0;
  bool finalized_ = false;
};

}  // namespace mcgs
