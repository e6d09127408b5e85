#include "mcgs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mcgs/errors.hpp"
#include "mcgs/rng.hpp"

namespace mcgs {

CoordRole coord_role(int dim, int dims) {
  const int quarter = std::max(1, dims / 4);
  if (dim < quarter) return CoordRole::Model;
  if (dim < 2 * quarter) return CoordRole::Feature;
  if (dim < 3 * quarter) return CoordRole::Strategy;
  return CoordRole::Plain;
}

std::optional<SyntheticDesign> SyntheticDesign::parse(const std::string& artifact) {
  const Json j = Json::parse(artifact, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object() || !j.contains("coords") || !j.contains("metric")) {
    return std::nullopt;
  }
  const Json& coords = j.at("coords");
  const Json& metric = j.at("metric");
  if (!coords.is_array() || !metric.is_string()) return std::nullopt;
  SyntheticDesign d;
  for (const Json& c : coords) {
    if (!c.is_number_integer()) return std::nullopt;
    d.coords.push_back(c.get<int>());
  }
  d.metric_name = metric.get<std::string>();
  return d;
}

std::string SyntheticDesign::serialize() const {
  return Json{{"coords", coords}, {"metric", metric_name}}.dump();
}

std::vector<int> SyntheticDesign::invalid_indices(int cardinality) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= cardinality) out.push_back(static_cast<int>(i));
  }
  return out;
}

Json SyntheticTaskTables::to_json() const {
  Json bonus_arr = Json::array();
  for (const PairBonus& b : bonuses) {
    bonus_arr.push_back(Json{{"a_dim", b.a_dim},
                             {"a_val", b.a_val},
                             {"b_dim", b.b_dim},
                             {"b_val", b.b_val},
                             {"amount", b.amount}});
  }
  return Json{{"task_id", task_id},
              {"dims", dims},
              {"cardinality", cardinality},
              {"direction", to_string(direction)},
              {"tables", tables},
              {"bonuses", bonus_arr}};
}

SyntheticTaskTables SyntheticTaskTables::from_json(const Json& j) {
  SyntheticTaskTables t;
  t.task_id = get_string(j, "task_id");
  t.dims = static_cast<int>(get_int(j, "dims"));
  t.cardinality = static_cast<int>(get_int(j, "cardinality"));
  t.direction = parse_direction(get_string(j, "direction"));
  t.tables = require_field(j, "tables").get<std::vector<std::vector<double>>>();
  for (const Json& bj : require_field(j, "bonuses")) {
    PairBonus b;
    b.a_dim = static_cast<int>(get_int(bj, "a_dim"));
    b.a_val = static_cast<int>(get_int(bj, "a_val"));
    b.b_dim = static_cast<int>(get_int(bj, "b_dim"));
    b.b_val = static_cast<int>(get_int(bj, "b_val"));
    b.amount = get_double(bj, "amount");
    t.bonuses.push_back(b);
  }
  if (t.tables.size() != static_cast<std::size_t>(t.dims)) {
    raise(Errc::TaskLoadError, "table row count disagrees with dims");
  }
  for (const auto& row : t.tables) {
    if (row.size() != static_cast<std::size_t>(t.cardinality)) {
      raise(Errc::TaskLoadError, "table column count disagrees with cardinality");
    }
  }
  return t;
}

namespace {

// Lowest index holding the direction-best value.
int argbest(const std::vector<double>& row, Direction dir) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(row.size()); ++k) {
    if (metric_better(dir, row[k], row[best])) best = k;
  }
  return best;
}

}  // namespace

SyntheticTaskTables generate_task_tables(const TaskSpec& task) {
  SyntheticTaskTables t;
  t.task_id = task.task_id;
  t.dims = task.design_dims;
  t.cardinality = task.design_cardinality;
  t.direction = task.direction;

  Rng rng(stable_hash64(task.task_id));
  t.tables.assign(t.dims, std::vector<double>(t.cardinality, 0.0));
  for (int d = 0; d < t.dims; ++d) {
    for (int k = 0; k < t.cardinality; ++k) {
      t.tables[d][k] = rng.uniform01() / t.dims;
    }
  }
  // Keep the optimum off review-flagged boundary values.
  if (t.cardinality >= 4) {
    for (int d = 0; d < t.dims; ++d) {
      const int best = argbest(t.tables[d], t.direction);
      if (best == 0 || best == t.cardinality - 1) {
        const int j = static_cast<int>(rng.uniform_int(1, t.cardinality - 2));
        std::swap(t.tables[d][best], t.tables[d][j]);
      }
    }
  }
  // Synergy bonuses anchored at the argbest pair, sign matching direction:
  // the coordinate-wise best design stays the exact global optimum.
  const int pairs = std::min(3, t.dims / 2);
  for (int i = 0; i < pairs; ++i) {
    PairBonus b;
    b.a_dim = 2 * i;
    b.b_dim = 2 * i + 1;
    b.a_val = argbest(t.tables[b.a_dim], t.direction);
    b.b_val = argbest(t.tables[b.b_dim], t.direction);
    b.amount = (0.5 + 0.5 * rng.uniform01()) / t.dims * direction_sign(t.direction);
    t.bonuses.push_back(b);
  }
  return t;
}

SyntheticEnvironment::SyntheticEnvironment(const TaskSpec& task, std::uint64_t run_seed)
    : tables_(generate_task_tables(task)), run_seed_(run_seed) {}

SyntheticEnvironment::SyntheticEnvironment(SyntheticTaskTables tables,
                                           std::uint64_t run_seed)
    : tables_(std::move(tables)), run_seed_(run_seed) {}

double SyntheticEnvironment::raw_metric(const std::vector<int>& coords) const {
  double sum = 0.0;
  for (int d = 0; d < tables_.dims; ++d) sum += tables_.tables[d][coords[d]];
  for (const PairBonus& b : tables_.bonuses) {
    if (coords[b.a_dim] == b.a_val && coords[b.b_dim] == b.b_val) sum += b.amount;
  }
  return sum;
}

std::pair<std::vector<int>, double> SyntheticEnvironment::known_optimum() const {
  std::vector<int> coords(tables_.dims);
  for (int d = 0; d < tables_.dims; ++d) {
    coords[d] = argbest(tables_.tables[d], tables_.direction);
  }
  return {coords, raw_metric(coords)};
}

EvalOutcome SyntheticEnvironment::evaluate(const SolutionPayload& payload,
                                           const TaskSpec& task) {
  const auto design = SyntheticDesign::parse(payload.artifact);
  if (!design) {
    return {EvalStatus::Buggy, std::nullopt, "artifact does not parse as a design"};
  }
  if (design->coords.size() != static_cast<std::size_t>(tables_.dims)) {
    return {EvalStatus::Buggy, std::nullopt,
            "design has " + std::to_string(design->coords.size()) +
                " coordinates, expected " + std::to_string(tables_.dims)};
  }
  const auto invalid = design->invalid_indices(tables_.cardinality);
  if (!invalid.empty()) {
    return {EvalStatus::Buggy, std::nullopt,
            "coordinate " + std::to_string(invalid.front()) + " value " +
                std::to_string(design->coords[invalid.front()]) + " out of range"};
  }
  double metric = raw_metric(design->coords);
  if (task.eval_noise_sigma > 0.0) {
    std::ostringstream key;
    for (int c : design->coords) key << c << ',';
    const std::uint64_t noise_seed = mix_seed(
        mix_seed(run_seed_, stable_hash64(tables_.task_id)), stable_hash64(key.str()));
    Rng noise(noise_seed);
    metric += noise.gaussian(0.0, task.eval_noise_sigma);
  }
  return {EvalStatus::Evaluated, metric, "ok"};
}

namespace {

struct ParsedMember {
  const ReferencePayload* ref;
  SyntheticDesign design;
};

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << v[i];
  }
  return out.str();
}

std::string join_nodes(const std::vector<NodeId>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << v[i];
  }
  return out.str();
}

}  // namespace

SolutionPayload SyntheticEnvironment::ensemble_combine(
    const std::vector<ReferencePayload>& members, const TaskSpec& task) {
  std::vector<ParsedMember> parsed;
  for (const ReferencePayload& m : members) {
    auto d = SyntheticDesign::parse(m.payload.artifact);
    if (d && d->coords.size() == static_cast<std::size_t>(tables_.dims)) {
      parsed.push_back({&m, std::move(*d)});
    }
  }
  if (parsed.empty()) {
    raise(Errc::EngineFailure, "no ensemble member carries a usable design");
  }
  // Best-metric-first order decides majority ties; stable on input order.
  std::stable_sort(parsed.begin(), parsed.end(),
                   [&task](const ParsedMember& a, const ParsedMember& b) {
                     const double ma = a.ref->metric.value_or(0.0);
                     const double mb = b.ref->metric.value_or(0.0);
                     return metric_better(task.direction, ma, mb);
                   });

  std::vector<int> coords(tables_.dims, 0);
  for (int d = 0; d < tables_.dims; ++d) {
    std::map<int, int> votes;
    for (const ParsedMember& m : parsed) votes[m.design.coords[d]] += 1;
    int best_count = 0;
    for (const auto& [value, count] : votes) best_count = std::max(best_count, count);
    // First member in best-first order whose value is among the tied leaders.
    for (const ParsedMember& m : parsed) {
      if (votes[m.design.coords[d]] == best_count) {
        coords[d] = m.design.coords[d];
        break;
      }
    }
  }

  std::vector<NodeId> member_ids;
  for (const ParsedMember& m : parsed) member_ids.push_back(m.ref->node);
  SolutionPayload out;
  SyntheticDesign design{coords, task.metric_name};
  out.artifact = design.serialize();
  out.plan = "ensemble: combine " + std::to_string(parsed.size()) + " members";
  out.analysis = "majority vote over nodes " + join_nodes(member_ids);
  return out;
}

namespace {

struct EvaluatedRef {
  const ReferencePayload* ref;
  SyntheticDesign design;
};

std::vector<int> role_pool(int dims, CoordRole role) {
  std::vector<int> pool;
  for (int d = 0; d < dims; ++d) {
    if (coord_role(d, dims) == role) pool.push_back(d);
  }
  if (pool.empty()) {
    for (int d = 0; d < dims; ++d) pool.push_back(d);
  }
  return pool;
}

// Evaluated references with parseable designs, best metric first (stable).
std::vector<EvaluatedRef> evaluated_refs(const ProposalRequest& req) {
  std::vector<EvaluatedRef> out;
  for (const ReferencePayload& r : req.references) {
    if (r.state != ExecState::Evaluated || !r.metric) continue;
    auto d = SyntheticDesign::parse(r.payload.artifact);
    if (d && d->coords.size() == static_cast<std::size_t>(req.task.design_dims)) {
      out.push_back({&r, std::move(*d)});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [&req](const EvaluatedRef& a, const EvaluatedRef& b) {
                     return metric_better(req.task.direction, *a.ref->metric,
                                          *b.ref->metric);
                   });
  return out;
}

// Designs already tried near the target; proposing one of these again wastes
// a simulation.
std::vector<std::vector<int>> known_designs(const ProposalRequest& req,
                                            const SyntheticDesign* target) {
  std::vector<std::vector<int>> out;
  if (target) out.push_back(target->coords);
  for (const ReferencePayload& r : req.references) {
    auto d = SyntheticDesign::parse(r.payload.artifact);
    if (d && d->coords.size() == static_cast<std::size_t>(req.task.design_dims)) {
      out.push_back(std::move(d->coords));
    }
  }
  return out;
}

bool is_known(const std::vector<std::vector<int>>& known, const std::vector<int>& c) {
  return std::find(known.begin(), known.end(), c) != known.end();
}

// First in-range recommendation for dim among the injected entries.
std::optional<int> kb_value_for(const std::vector<KnowledgeEntry>& entries, int dim,
                                int cardinality) {
  for (const KnowledgeEntry& e : entries) {
    auto it = e.recommendation.find(dim);
    if (it != e.recommendation.end() && it->second >= 0 && it->second < cardinality) {
      return it->second;
    }
  }
  return std::nullopt;
}

}  // namespace

SolutionPayload SyntheticEngine::propose(const ProposalRequest& req) {
  const TaskSpec& task = req.task;
  const int D = task.design_dims;
  const int K = task.design_cardinality;
  Rng rng(req.seed);
  SolutionPayload out;

  auto finish = [&](std::vector<int> coords, std::string plan, std::string analysis,
                    bool injectable) {
    if (injectable && rng.uniform01() < params_.bug_injection_prob) {
      const int d = static_cast<int>(rng.uniform_int(0, D - 1));
      coords[d] = K + static_cast<int>(rng.uniform_int(0, 3));
      analysis += "; injected fault at dim " + std::to_string(d);
    }
    SyntheticDesign design{std::move(coords), task.metric_name};
    out.artifact = design.serialize();
    out.plan = std::move(plan);
    out.analysis = std::move(analysis);
    return out;
  };

  switch (req.op) {
    case OperatorKind::Draft: {
      std::vector<int> coords(D);
      for (int d = 0; d < D; ++d) coords[d] = static_cast<int>(rng.uniform_int(0, K - 1));
      std::vector<int> guided;
      for (const KnowledgeEntry& e : req.kb_context) {
        for (const auto& [dim, value] : e.recommendation) {
          if (dim < 0 || dim >= D || value < 0 || value >= K) continue;
          if (rng.uniform01() < params_.kb_bias_prob) {
            coords[dim] = value;
            if (std::find(guided.begin(), guided.end(), dim) == guided.end()) {
              guided.push_back(dim);
            }
          }
        }
      }
      const std::string plan = req.kb_context.empty()
                                   ? "draft: sample a fresh design"
                                   : "draft: sample a fresh design with kb hints";
      const std::string analysis =
          guided.empty() ? "uniform sample" : "kb-guided dims " + join_ints(guided);
      return finish(std::move(coords), plan, analysis, true);
    }

    case OperatorKind::Debug: {
      auto target = SyntheticDesign::parse(req.target.artifact);
      if (!target || target->coords.size() != static_cast<std::size_t>(D)) {
        std::vector<int> coords(D);
        for (int d = 0; d < D; ++d) {
          coords[d] = static_cast<int>(rng.uniform_int(0, K - 1));
        }
        return finish(std::move(coords), "debug: rebuild unusable artifact",
                      "resampled all dims", false);
      }
      auto coords = target->coords;
      const auto invalid = target->invalid_indices(K);
      if (invalid.empty()) {
        return finish(std::move(coords), "debug: nothing to repair",
                      "design already valid", false);
      }
      const int i = invalid.front();
      const int old = coords[i];
      coords[i] = std::clamp(old, 0, K - 1);
      return finish(std::move(coords), "debug: clamp coordinate " + std::to_string(i),
                    "dim " + std::to_string(i) + ": " + std::to_string(old) + " -> " +
                        std::to_string(coords[i]),
                    false);
    }

    case OperatorKind::ImproveNormal:
    case OperatorKind::ImproveFE:
    case OperatorKind::ImproveCS: {
      auto target = SyntheticDesign::parse(req.target.artifact);
      if (!target || target->coords.size() != static_cast<std::size_t>(D)) {
        raise(Errc::EngineFailure, "improve target is not a usable design");
      }
      const CoordRole role = req.op == OperatorKind::ImproveNormal ? CoordRole::Plain
                             : req.op == OperatorKind::ImproveFE   ? CoordRole::Feature
                                                                   : CoordRole::Strategy;
      const auto pool = role_pool(D, role);
      const auto refs = evaluated_refs(req);
      const auto known = known_designs(req, &*target);

      // Coordinate values tried by references that trail the target
      // decisively, beyond what evaluation noise alone could explain.
      // Anything closer is not evidence against the value: a near-tie
      // design may well carry optimal coordinates.
      std::vector<std::set<int>> worse(D);
      if (req.target_metric) {
        const double margin = 2.0 * task.eval_noise_sigma;
        for (const EvaluatedRef& r : refs) {
          const double handicapped =
              *r.ref->metric + direction_sign(task.direction) * margin;
          if (metric_better(task.direction, *req.target_metric, handicapped)) {
            for (int d = 0; d < D; ++d) worse[d].insert(r.design.coords[d]);
          }
        }
      }

      // Per-value evidence for recombination: the designs in view (target
      // plus references) vote on each coordinate with their metrics.
      // avg_metric(v at dim c) over supporting designs estimates how well
      // value v serves, which identifies proven coordinates far faster
      // than a blind walk can.
      struct Evidence {
        double sum = 0.0;
        int count = 0;
      };
      std::vector<std::map<int, Evidence>> votes(D);
      if (req.target_metric) {
        for (int d = 0; d < D; ++d) {
          Evidence& e = votes[d][target->coords[d]];
          e.sum += *req.target_metric;
          e.count += 1;
        }
        for (const EvaluatedRef& r : refs) {
          for (int d = 0; d < D; ++d) {
            Evidence& e = votes[d][r.design.coords[d]];
            e.sum += *r.ref->metric;
            e.count += 1;
          }
        }
      }
      const auto consensus_value = [&](int c, int cur) -> std::optional<int> {
        const auto& tally = votes[c];
        if (tally.size() < 2) return std::nullopt;  // nothing to choose between
        int best_v = cur;
        double best_avg = tally.at(cur).sum / tally.at(cur).count;
        for (const auto& [v, e] : tally) {
          const double avg = e.sum / e.count;
          if (metric_better(task.direction, avg, best_avg)) {
            best_v = v;
            best_avg = avg;
          }
        }
        if (best_v == cur) return std::nullopt;
        return best_v;
      };

      std::vector<int> coords;
      std::string note;
      for (int attempt = 0; attempt < 4; ++attempt) {
        coords = target->coords;
        note.clear();
        const int c = pool[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
        const int cur = coords[c];
        int nv = cur;
        if (req.op == OperatorKind::ImproveNormal) {
          // Split effort between adopting the best-evidenced value and a
          // blind neighbor walk, so novel values keep entering the pool.
          const auto adopted = consensus_value(c, cur);
          if (adopted && rng.uniform01() < 0.5) {
            nv = *adopted;
            note = " by reference consensus";
          } else {
            int step = rng.uniform01() < 0.5 ? 1 : -1;
            // Avoid re-trying a neighbor a reference already reached while
            // trailing decisively; flip when the other side is untried.
            const int fwd = std::clamp(cur + step, 0, K - 1);
            const int bwd = std::clamp(cur - step, 0, K - 1);
            if (worse[c].count(fwd) != 0 && worse[c].count(bwd) == 0 &&
                bwd != cur) {
              step = -step;
              note = " away from tried value " + std::to_string(fwd);
            }
            nv = std::clamp(cur + step, 0, K - 1);
            if (nv == cur) nv = std::clamp(cur - step, 0, K - 1);
          }
        } else {
          const auto kbv = kb_value_for(req.kb_context, c, K);
          if (kbv && rng.uniform01() < params_.kb_bias_prob) {
            nv = *kbv;
            note = " from kb hint";
          } else {
            std::vector<int> allowed;
            for (int v = 0; v < K; ++v) {
              if (v != cur && worse[c].count(v) == 0) allowed.push_back(v);
            }
            if (allowed.empty()) {
              for (int v = 0; v < K; ++v) {
                if (v != cur) allowed.push_back(v);
              }
            }
            nv = allowed[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(allowed.size()) - 1))];
          }
        }
        coords[c] = nv;
        if (!is_known(known, coords)) {
          note = "dim " + std::to_string(c) + ": " + std::to_string(cur) + " -> " +
                 std::to_string(nv) + note;
          break;
        }
        note = "dim " + std::to_string(c) + ": " + std::to_string(cur) + " -> " +
               std::to_string(nv) + note;
      }
      const char* what = req.op == OperatorKind::ImproveNormal ? "nudge plain dim"
                         : req.op == OperatorKind::ImproveFE   ? "resample feature dim"
                                                               : "resample strategy dim";
      const std::string opname(to_string(req.op));
      return finish(std::move(coords), opname + ": " + what, note, true);
    }

    case OperatorKind::Fusion: {
      struct Source {
        std::vector<int> coords;
        double metric;
        NodeId node;
      };
      std::vector<Source> sources;
      for (const EvaluatedRef& r : evaluated_refs(req)) {
        sources.push_back({r.design.coords, *r.ref->metric, r.ref->node});
      }
      if (req.target_metric) {
        auto target = SyntheticDesign::parse(req.target.artifact);
        if (target && target->coords.size() == static_cast<std::size_t>(D)) {
          sources.push_back({target->coords, *req.target_metric, kNoNode});
        }
      }
      if (sources.empty()) {
        raise(Errc::EngineFailure, "fusion needs at least one evaluated source");
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i < sources.size(); ++i) {
        if (metric_better(task.direction, sources[i].metric, sources[best].metric)) {
          best = i;
        }
      }
      std::vector<int> coords = sources[best].coords;
      std::vector<int> mutated;
      for (int d = 0; d < D; ++d) {
        if (rng.uniform01() < 0.1) {
          coords[d] = static_cast<int>(rng.uniform_int(0, K - 1));
          mutated.push_back(d);
        }
      }
      const std::string base = sources[best].node == kNoNode
                                   ? "target"
                                   : "node " + std::to_string(sources[best].node);
      const std::string analysis =
          "base: " + base +
          (mutated.empty() ? "; no mutation" : "; mutated dims " + join_ints(mutated));
      return finish(std::move(coords),
                    "fusion: merge " + std::to_string(sources.size()) + " sources",
                    analysis, false);
    }

    case OperatorKind::CodeReview:
    case OperatorKind::Ensemble:
      break;
  }
  raise(Errc::EngineFailure,
        std::string("operator ") + to_string(req.op) + " does not propose designs");
}

ReviewVerdict SyntheticEngine::review(const SolutionPayload& candidate,
                                      const TaskSpec& task) {
  ReviewVerdict v;
  const auto design = SyntheticDesign::parse(candidate.artifact);
  if (!design) {
    v.decision = ReviewDecision::Reject;
    v.issues.push_back("artifact does not parse as a design");
    return v;
  }
  if (design->coords.size() != static_cast<std::size_t>(task.design_dims)) {
    v.decision = ReviewDecision::Reject;
    v.issues.push_back("design has " + std::to_string(design->coords.size()) +
                       " coordinates, task expects " +
                       std::to_string(task.design_dims));
    return v;
  }
  if (design->metric_name != task.metric_name) {
    v.decision = ReviewDecision::Reject;
    v.issues.push_back("declared metric '" + design->metric_name +
                       "' does not match task metric '" + task.metric_name + "'");
    return v;
  }
  const int K = task.design_cardinality;
  for (std::size_t i = 0; i < design->coords.size(); ++i) {
    const int val = design->coords[i];
    if (val < 0 || val >= K) {
      v.issues.push_back("coordinate " + std::to_string(i) + " value " +
                         std::to_string(val) + " out of range [0, " +
                         std::to_string(K - 1) + "]");
    } else if (val == 0 || val == K - 1) {
      v.issues.push_back("coordinate " + std::to_string(i) + " at boundary value " +
                         std::to_string(val));
    }
  }
  v.decision = v.issues.empty() ? ReviewDecision::Pass : ReviewDecision::Warn;
  return v;
}

}  // namespace mcgs
