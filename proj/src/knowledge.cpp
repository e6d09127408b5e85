#include "mcgs/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "mcgs/errors.hpp"

namespace mcgs {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

KnowledgeBase load_knowledge_base(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::TaskLoadError, "cannot open knowledge base '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    raise(Errc::TaskLoadError, "knowledge base '" + path + "': " + e.what());
  }
  return knowledge_base_from_json(j);
}

Json knowledge_base_to_json(const KnowledgeBase& kb) {
  Json entries = Json::array();
  for (const KnowledgeEntry& e : kb.entries) {
    Json rec = Json::object();
    for (const auto& [coord, value] : e.recommendation) {
      rec[std::to_string(coord)] = value;
    }
    entries.push_back(Json{{"entry_id", e.entry_id},
                           {"level", to_string(e.level)},
                           {"keywords", e.keywords},
                           {"title", e.title},
                           {"guidance", e.guidance},
                           {"recommendation", rec}});
  }
  return Json{{"version", kb.version}, {"entries", entries}};
}

namespace {

KnowledgeBase check_entry_ids(KnowledgeBase kb) {
  std::vector<std::string> ids;
  for (const auto& e : kb.entries) ids.push_back(e.entry_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    raise(Errc::TaskLoadError, "knowledge base has duplicate entry ids");
  }
  return kb;
}

}  // namespace

KnowledgeBase knowledge_base_from_json(const Json& j) {
  KnowledgeBase kb;
  kb.version = j.contains("version") ? get_string(j, "version") : "";
  const Json& entries = require_field(j, "entries");
  if (!entries.is_array()) raise(Errc::TaskLoadError, "entries must be an array");
  for (const Json& ej : entries) {
    KnowledgeEntry e;
    e.entry_id = get_string(ej, "entry_id");
    e.level = parse_knowledge_level(get_string(ej, "level"));
    e.keywords = require_field(ej, "keywords").get<std::vector<std::string>>();
    e.title = get_string(ej, "title");
    e.guidance = get_string(ej, "guidance");
    if (ej.contains("recommendation")) {
      for (const auto& [key, value] : ej.at("recommendation").items()) {
        e.recommendation[std::stoi(key)] = value.get<int>();
      }
    }
    kb.entries.push_back(std::move(e));
  }
  return check_entry_ids(std::move(kb));
}

std::vector<KnowledgeEntry> retrieve(const KnowledgeBase& kb, const TaskSpec& task) {
  const std::string haystack = lower(task.description);
  std::vector<std::pair<int, const KnowledgeEntry*>> scored;
  for (const KnowledgeEntry& e : kb.entries) {
    int score = 0;
    for (const std::string& kw : e.keywords) {
      if (!kw.empty() && haystack.find(lower(kw)) != std::string::npos) ++score;
    }
    if (score > 0) scored.emplace_back(score, &e);
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second->entry_id < b.second->entry_id;
            });
  std::vector<KnowledgeEntry> out;
  out.reserve(scored.size());
  for (const auto& [score, entry] : scored) out.push_back(*entry);
  return out;
}

std::vector<KnowledgeEntry> injection_context(
    const std::vector<KnowledgeEntry>& retrieved, KbPhase phase, OperatorKind op,
    double init_ref_prob, Rng& rng) {
  std::vector<KnowledgeEntry> out;
  if (phase == KbPhase::Init) {
    if (op != OperatorKind::Draft) return out;
    for (const KnowledgeEntry& e : retrieved) {
      if (e.level == KnowledgeLevel::Model || e.level == KnowledgeLevel::Data) {
        out.push_back(e);
      }
    }
    if (out.empty()) return out;  // keep the rng stream untouched
    if (rng.uniform01() >= init_ref_prob) out.clear();
    return out;
  }
  KnowledgeLevel want;
  if (op == OperatorKind::ImproveFE) {
    want = KnowledgeLevel::Data;
  } else if (op == OperatorKind::ImproveCS) {
    want = KnowledgeLevel::Strategy;
  } else {
    return out;
  }
  for (const KnowledgeEntry& e : retrieved) {
    if (e.level == want) out.push_back(e);
  }
  return out;
}

}  // namespace mcgs
