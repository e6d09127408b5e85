#include "mcgs/graph.hpp"

#include <algorithm>

#include "mcgs/errors.hpp"

namespace mcgs {

namespace {

std::string nstr(NodeId id) { return std::to_string(id); }

}  // namespace

SolutionGraph::SolutionGraph() {
  SolutionNode root;
  root.node_id = kRootId;
  root.branch_id = kNoNode;
  root.depth = 0;
  root.state = ExecState::Root;
  root.created_step = 0;
  nodes_.push_back(std::move(root));
  children_.emplace_back();
  in_refs_.emplace_back();
}

const SolutionNode& SolutionGraph::node(NodeId id) const {
  if (!has_node(id)) raise(Errc::UnknownNode, "node " + nstr(id));
  return nodes_[static_cast<std::size_t>(id)];
}

SolutionNode& SolutionGraph::node_mut(NodeId id) {
  if (!has_node(id)) raise(Errc::UnknownNode, "node " + nstr(id));
  return nodes_[static_cast<std::size_t>(id)];
}

const std::vector<NodeId>& SolutionGraph::primary_children(NodeId id) const {
  if (!has_node(id)) raise(Errc::UnknownNode, "node " + nstr(id));
  return children_[static_cast<std::size_t>(id)];
}

const std::vector<NodeId>& SolutionGraph::reference_sources(NodeId target) const {
  if (!has_node(target)) raise(Errc::UnknownNode, "node " + nstr(target));
  return in_refs_[static_cast<std::size_t>(target)];
}

NodeId SolutionGraph::add_child(NodeId parent, SolutionPayload payload,
                                OperatorKind op) {
  if (finalized_) raise(Errc::GraphFinalized, "graph accepts no new nodes");
  if (!has_node(parent)) raise(Errc::UnknownParent, "parent " + nstr(parent));

  const SolutionNode& p = nodes_[static_cast<std::size_t>(parent)];
  SolutionNode n;
  n.node_id = static_cast<NodeId>(nodes_.size());
  n.parent_id = parent;
  n.branch_id = parent == kRootId ? n.node_id : p.branch_id;
  n.depth = p.depth + 1;
  payload.provenance.clear();  // provenance is owned by reference edges
  n.payload = std::move(payload);
  n.state = ExecState::Drafted;
  n.created_step = current_step_;
  n.debug_count = op == OperatorKind::Debug ? p.debug_count + 1 : 0;
  n.operator_used = op;

  nodes_.push_back(std::move(n));
  children_.emplace_back();
  in_refs_.emplace_back();
  const NodeId id = nodes_.back().node_id;
  index_edge(EdgeRecord{parent, id, EdgeKind::Primary, std::nullopt});
  return id;
}

void SolutionGraph::add_reference_edges(const std::vector<NodeId>& sources,
                                        NodeId target, RefKind kind) {
  if (sources.empty()) raise(Errc::EmptySources, "reference edges need sources");
  if (!has_node(target)) raise(Errc::UnknownNode, "target " + nstr(target));
  const auto target_step = node(target).created_step;

  // Validate everything before touching state; the call is all-or-nothing.
  std::set<NodeId> seen;
  for (NodeId src : sources) {
    if (!has_node(src)) raise(Errc::UnknownNode, "source " + nstr(src));
    if (!seen.insert(src).second) {
      raise(Errc::DuplicateEdge, "source " + nstr(src) + " repeated");
    }
    if (node(src).created_step >= target_step) {
      raise(Errc::BackwardReference,
            "source " + nstr(src) + " is not older than target " + nstr(target));
    }
    if (edge_keys_.count({src, target}) != 0) {
      raise(Errc::DuplicateEdge, nstr(src) + " -> " + nstr(target) + " exists");
    }
  }

  for (NodeId src : sources) {
    index_edge(EdgeRecord{src, target, EdgeKind::Reference, kind});
  }
}

void SolutionGraph::index_edge(const EdgeRecord& e) {
  edges_.push_back(e);
  edge_keys_.insert({e.source, e.target});
  if (e.kind == EdgeKind::Primary) {
    children_[static_cast<std::size_t>(e.source)].push_back(e.target);
  } else {
    ++ref_edge_count_;
    in_refs_[static_cast<std::size_t>(e.target)].push_back(e.source);
    auto& prov = nodes_[static_cast<std::size_t>(e.target)].payload.provenance;
    auto it = std::lower_bound(prov.begin(), prov.end(), e.source);
    if (it == prov.end() || *it != e.source) prov.insert(it, e.source);
  }
}

std::vector<NodeId> SolutionGraph::primary_path_to_root(NodeId leaf) const {
  if (!has_node(leaf)) raise(Errc::UnknownNode, "node " + nstr(leaf));
  std::vector<NodeId> path;
  NodeId cur = leaf;
  while (true) {
    path.push_back(cur);
    const auto& n = nodes_[static_cast<std::size_t>(cur)];
    if (!n.parent_id) break;
    cur = *n.parent_id;
  }
  return path;
}

bool SolutionGraph::is_ancestor(NodeId ancestor, NodeId id) const {
  if (!has_node(ancestor) || !has_node(id)) return false;
  NodeId cur = id;
  while (true) {
    const auto& n = nodes_[static_cast<std::size_t>(cur)];
    if (!n.parent_id) return false;
    cur = *n.parent_id;
    if (cur == ancestor) return true;
  }
}

int SolutionGraph::draft_children_of_root() const {
  int count = 0;
  for (NodeId c : children_[0]) {
    const auto& n = nodes_[static_cast<std::size_t>(c)];
    if (n.operator_used && *n.operator_used == OperatorKind::Draft) ++count;
  }
  return count;
}

void SolutionGraph::record_outcome(NodeId id, ExecState state,
                                   std::optional<double> metric) {
  SolutionNode& n = node_mut(id);
  if (n.state != ExecState::Drafted) {
    raise(Errc::StructureInvalid,
          "node " + nstr(id) + " outcome already recorded");
  }
  if (state == ExecState::Evaluated) {
    if (!metric) raise(Errc::MissingMetric, "evaluated node " + nstr(id));
  } else if (state == ExecState::Buggy || state == ExecState::Failed) {
    metric.reset();
  } else {
    raise(Errc::StructureInvalid, "invalid outcome state for node " + nstr(id));
  }
  n.state = state;
  n.metric = metric;
}

void SolutionGraph::mark_failed(NodeId id) {
  SolutionNode& n = node_mut(id);
  if (n.state != ExecState::Buggy) {
    raise(Errc::StructureInvalid, "node " + nstr(id) + " is not buggy");
  }
  n.state = ExecState::Failed;
}

void SolutionGraph::mark_review_warned(NodeId id) {
  node_mut(id).review_warned = true;
}

void SolutionGraph::add_visit(NodeId id, double delta) {
  NodeStats& s = node_mut(id).stats;
  s.visits += 1;
  s.value += delta;
}

StructureReport SolutionGraph::validate_structure() const {
  StructureReport report;
  auto bad = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

  if (nodes_.empty() || nodes_[0].node_id != kRootId ||
      nodes_[0].state != ExecState::Root) {
    bad("node 0 must exist with state root");
    return report;
  }
  const SolutionNode& root = nodes_[0];
  if (root.parent_id) bad("root must have no parent");
  if (root.depth != 0) bad("root depth must be 0");
  if (root.metric) bad("root must have no metric");
  if (root.branch_id != kNoNode) bad("root belongs to no branch");

  // Primary edge targets, for tree-ness accounting.
  std::vector<int> primary_in(nodes_.size(), 0);
  std::set<std::pair<NodeId, NodeId>> ref_pairs;
  std::set<std::pair<NodeId, NodeId>> primary_pairs;
  for (const EdgeRecord& e : edges_) {
    if (!has_node(e.source) || !has_node(e.target)) {
      bad("edge " + nstr(e.source) + " -> " + nstr(e.target) +
          " references a missing node");
      continue;
    }
    const auto& src = nodes_[static_cast<std::size_t>(e.source)];
    const auto& tgt = nodes_[static_cast<std::size_t>(e.target)];
    if (src.created_step >= tgt.created_step) {
      bad("edge " + nstr(e.source) + " -> " + nstr(e.target) +
          " does not advance created_step");
    }
    if (e.kind == EdgeKind::Primary) {
      primary_in[static_cast<std::size_t>(e.target)] += 1;
      primary_pairs.insert({e.source, e.target});
      if (e.ref_kind) bad("primary edge with ref_kind");
      if (!tgt.parent_id || *tgt.parent_id != e.source) {
        bad("primary edge " + nstr(e.source) + " -> " + nstr(e.target) +
            " disagrees with parent_id");
      }
    } else {
      if (!e.ref_kind) bad("reference edge without ref_kind");
      if (!ref_pairs.insert({e.source, e.target}).second) {
        bad("duplicate reference edge " + nstr(e.source) + " -> " + nstr(e.target));
      }
    }
  }
  for (const auto& pair : ref_pairs) {
    if (primary_pairs.count(pair) != 0) {
      bad("reference edge duplicates primary edge " + nstr(pair.first) + " -> " +
          nstr(pair.second));
    }
  }

  for (const SolutionNode& n : nodes_) {
    const std::string label = "node " + nstr(n.node_id);
    if (n.node_id == kRootId) continue;
    if (n.state == ExecState::Root) bad(label + ": non-root node with root state");
    if (!n.parent_id) {
      bad(label + ": missing parent");
      continue;
    }
    if (!has_node(*n.parent_id) || *n.parent_id >= n.node_id) {
      bad(label + ": parent must be an older node");
      continue;
    }
    if (primary_in[static_cast<std::size_t>(n.node_id)] != 1) {
      bad(label + ": must have exactly one incoming primary edge");
    }
    const auto& p = nodes_[static_cast<std::size_t>(*n.parent_id)];
    if (n.depth != p.depth + 1) bad(label + ": depth != parent depth + 1");
    const NodeId want_branch = *n.parent_id == kRootId ? n.node_id : p.branch_id;
    if (n.branch_id != want_branch) bad(label + ": branch_id violates inheritance");
    if (n.metric.has_value() != (n.state == ExecState::Evaluated)) {
      bad(label + ": metric presence must match evaluated state");
    }
    if (n.operator_used && *n.operator_used == OperatorKind::Debug) {
      if (n.debug_count != p.debug_count + 1) {
        bad(label + ": debug_count must extend the parent chain");
      }
    } else if (n.debug_count != 0) {
      bad(label + ": debug_count must be 0 for non-debug nodes");
    }
    if (n.stats.visits < 0) bad(label + ": negative visit count");
    if (n.stats.visits == 0 && n.stats.value != 0.0) {
      bad(label + ": value without visits");
    }
    // provenance == sorted set of incoming reference sources
    auto sources = in_refs_[static_cast<std::size_t>(n.node_id)];
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    if (sources != n.payload.provenance) {
      bad(label + ": provenance disagrees with incoming reference edges");
    }
  }
  if (!root.payload.provenance.empty() || !in_refs_[0].empty()) {
    bad("root cannot be a reference target");
  }
  return report;
}

Json SolutionGraph::to_json() const {
  Json nodes = Json::array();
  for (const SolutionNode& n : nodes_) nodes.push_back(node_to_json(n));
  Json edges = Json::array();
  for (const EdgeRecord& e : edges_) edges.push_back(edge_to_json(e));
  return Json{{"nodes", nodes}, {"edges", edges}};
}

SolutionGraph SolutionGraph::from_json(const Json& j) {
  SolutionGraph g;
  const Json& nodes = require_field(j, "nodes");
  const Json& edges = require_field(j, "edges");
  if (!nodes.is_array() || nodes.empty()) {
    raise(Errc::ConfigError, "snapshot must contain a node array");
  }
  bool first = true;
  for (const Json& nj : nodes) {
    SolutionNode n = node_from_json(nj);
    if (first) {
      // Replace the constructor root so restored root fields survive.
      if (n.node_id != kRootId) raise(Errc::ConfigError, "first node must be v0");
      g.nodes_[0] = std::move(n);
      first = false;
      continue;
    }
    g.restore_node(std::move(n));
  }
  for (const Json& ej : edges) g.restore_edge(edge_from_json(ej));
  return g;
}

void SolutionGraph::restore_node(SolutionNode n) {
  if (n.node_id != static_cast<NodeId>(nodes_.size())) {
    raise(Errc::StructureInvalid,
          "restored node id " + nstr(n.node_id) + " out of order");
  }
  n.payload.provenance.clear();  // rebuilt by restore_edge
  nodes_.push_back(std::move(n));
  children_.emplace_back();
  in_refs_.emplace_back();
}

void SolutionGraph::restore_edge(const EdgeRecord& e) {
  if (!has_node(e.source) || !has_node(e.target)) {
    raise(Errc::UnknownNode, "restored edge endpoint missing");
  }
  if (edge_keys_.count({e.source, e.target}) != 0) {
    raise(Errc::DuplicateEdge, nstr(e.source) + " -> " + nstr(e.target));
  }
  index_edge(e);
}

void SolutionGraph::restore_stats(NodeId id, NodeStats stats) {
  node_mut(id).stats = stats;
}

void SolutionGraph::restore_state(NodeId id, ExecState state,
                                  std::optional<double> metric) {
  SolutionNode& n = node_mut(id);
  n.state = state;
  n.metric = metric;
}

}  // namespace mcgs
