#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcgs/engine.hpp"
#include "mcgs/serde.hpp"

namespace mcgs {

// Roles partition the coordinate index range in quarters: model, feature,
// strategy, plain. Draft sets all of them; ImproveFE/ImproveCS resample one
// feature/strategy coordinate; ImproveNormal nudges one plain coordinate.
enum class CoordRole { Model, Feature, Strategy, Plain };
CoordRole coord_role(int dim, int dims);

// A design point: dims integer coordinates, each valid in [0, cardinality-1].
// Serialized into the payload artifact as {"coords":[...],"metric":"name"};
// the declared metric name is what code review checks against the task.
struct SyntheticDesign {
  std::vector<int> coords;
  std::string metric_name;

  static std::optional<SyntheticDesign> parse(const std::string& artifact);
  std::string serialize() const;
  std::vector<int> invalid_indices(int cardinality) const;
};

struct PairBonus {
  int a_dim = 0;
  int a_val = 0;
  int b_dim = 0;
  int b_val = 0;
  double amount = 0.0;
};

// Seeded landscape for one task. The raw metric is the sum of one table cell
// per coordinate plus every matched pair bonus, accumulated in that exact
// order (tables by ascending dim, then bonuses in stored order), which makes
// bit-exact recomputation from the persisted document possible.
//
// Bonuses are anchored at the per-dimension argbest values and their sign
// follows the task direction, so the coordinate-wise best design is the exact
// global optimum. Argbest indices avoid 0 and cardinality-1; code review
// flags boundary values and the optimum must not sit on a flagged value.
struct SyntheticTaskTables {
  std::string task_id;
  int dims = 8;
  int cardinality = 16;
  Direction direction = Direction::Maximize;
  std::vector<std::vector<double>> tables;  // [dims][cardinality]
  std::vector<PairBonus> bonuses;

  Json to_json() const;
  static SyntheticTaskTables from_json(const Json& j);
};

// Deterministic in task_id (tables), direction, dims and cardinality.
SyntheticTaskTables generate_task_tables(const TaskSpec& task);

class SyntheticEnvironment : public Environment {
 public:
  SyntheticEnvironment(const TaskSpec& task, std::uint64_t run_seed);
  SyntheticEnvironment(SyntheticTaskTables tables, std::uint64_t run_seed);

  // Unparseable or out-of-range designs come back Buggy with the offending
  // coordinate named in the log. Valid designs get raw_metric plus a noise
  // draw that is a pure function of (design, task, run seed).
  EvalOutcome evaluate(const SolutionPayload& payload, const TaskSpec& task) override;

  // Coordinate-wise majority vote; ties resolved from the best-metric member.
  SolutionPayload ensemble_combine(const std::vector<ReferencePayload>& members,
                                   const TaskSpec& task) override;

  double raw_metric(const std::vector<int>& coords) const;
  // Per-dimension argbest design and its raw metric; the global optimum.
  std::pair<std::vector<int>, double> known_optimum() const;

  const SyntheticTaskTables& tables() const { return tables_; }

 private:
  SyntheticTaskTables tables_;
  std::uint64_t run_seed_;
};

struct SyntheticParams {
  double kb_bias_prob = 0.8;        // tied to kb_init_ref_prob
  double bug_injection_prob = 0.1;  // Draft/Improve emit an invalid coordinate
};

class SyntheticEngine : public ProposalEngine {
 public:
  explicit SyntheticEngine(SyntheticParams params = {}) : params_(params) {}

  SolutionPayload propose(const ProposalRequest& request) override;
  ReviewVerdict review(const SolutionPayload& candidate, const TaskSpec& task) override;

 private:
  SyntheticParams params_;
};

}  // namespace mcgs
