#pragma once

#include <map>
#include <string>
#include <vector>

#include "mcgs/rng.hpp"
#include "mcgs/serde.hpp"
#include "mcgs/types.hpp"

namespace mcgs {

struct KnowledgeEntry {
  std::string entry_id;
  KnowledgeLevel level = KnowledgeLevel::Model;
  std::vector<std::string> keywords;
  std::string title;
  std::string guidance;
  // Synthetic-engine hint: design coordinate -> recommended value. Empty when
  // the entry carries prose guidance only.
  std::map<int, int> recommendation;
};

struct KnowledgeBase {
  std::string version;
  std::vector<KnowledgeEntry> entries;
};

enum class KbPhase { Init, Search };

KnowledgeBase load_knowledge_base(const std::string& path);  // TaskLoadError
Json knowledge_base_to_json(const KnowledgeBase& kb);
KnowledgeBase knowledge_base_from_json(const Json& j);

// Case-insensitive keyword scoring against the task description: one point
// per keyword that appears as a substring. Entries with score zero are
// dropped; the rest are ordered by score descending, then entry_id ascending.
std::vector<KnowledgeEntry> retrieve(const KnowledgeBase& kb, const TaskSpec& task);

// Filters retrieved entries for one expansion. Init phase (Draft): with
// probability init_ref_prob returns the Model plus Data level entries, else
// nothing; no randomness is consumed when no such entries exist. Search
// phase: ImproveFE gets Data entries, ImproveCS gets Strategy entries, every
// other operator gets nothing.
std::vector<KnowledgeEntry> injection_context(
    const std::vector<KnowledgeEntry>& retrieved, KbPhase phase, OperatorKind op,
    double init_ref_prob, Rng& rng);

}  // namespace mcgs
