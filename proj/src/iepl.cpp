#include "aegis/iepl.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace aegis::iepl {

std::string effect_name(Effect e) {
  switch (e) {
    case Effect::ALLOW: return "ALLOW";
    case Effect::DENY: return "DENY";
    case Effect::DEFER: return "DEFER";
  }
  throw MalformedDocument("unknown effect value");
}

Effect effect_from_name(const std::string& name) {
  if (name == "ALLOW") return Effect::ALLOW;
  if (name == "DENY") return Effect::DENY;
  if (name == "DEFER") return Effect::DEFER;
  throw MalformedDocument("effect must be ALLOW, DENY or DEFER: got '" + name + "'");
}

bool glob_match(std::string_view pattern, std::string_view value) {
  size_t p = 0, v = 0;
  size_t star = std::string_view::npos, star_v = 0;
  while (v < value.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == value[v])) {
      ++p;
      ++v;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      star_v = v;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      v = ++star_v;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

void validate_document(const PolicyDocument& doc) {
  if (doc.version < 1) throw MalformedDocument("version must be >= 1");
  if (doc.rules.empty()) throw MalformedDocument("rules list is empty");
  std::unordered_set<std::string> ids;
  for (const auto& rule : doc.rules) {
    if (rule.rule_id.empty()) throw MalformedDocument("rule with empty rule_id");
    if (!ids.insert(rule.rule_id).second)
      throw MalformedDocument("duplicate rule_id: " + rule.rule_id);
  }
  if (!(doc.risk_threshold_alpha >= 0.0 && doc.risk_threshold_alpha <= 1.0) ||
      std::isnan(doc.risk_threshold_alpha))
    throw MalformedDocument("risk_threshold_alpha must be in [0,1]");
  const auto& q = doc.quorum_config;
  if (q.n_validators < 1) throw MalformedDocument("n_validators must be positive");
  if (q.quorum_q < 1 || q.quorum_q > q.n_validators)
    throw MalformedDocument("quorum_q must satisfy 1 <= q <= N");
  if (q.epoch_length < 1) throw MalformedDocument("epoch_length must be positive");
  if (q.byzantine_bound_f != (q.n_validators - 1) / 3)
    throw MalformedDocument("byzantine_bound_f must equal floor((N-1)/3)");
  if (doc.lineage.size() != doc.version - 1)
    throw MalformedDocument("lineage length must equal version - 1");
  if (doc.charter_id.empty()) throw MalformedDocument("charter_id is empty");
}

namespace {

json match_to_json(const MatchPredicate& m) {
  json j = json::object();
  if (m.category) j["category"] = *m.category;
  if (m.resource_glob) j["resource_glob"] = *m.resource_glob;
  if (!m.tags_all.empty()) j["tags_all"] = m.tags_all;
  return j;
}

MatchPredicate match_from_json(const json& j) {
  if (!j.is_object()) throw MalformedDocument("rule match must be an object");
  MatchPredicate m;
  for (const auto& [key, value] : j.items()) {
    if (key == "category") m.category = value.get<std::string>();
    else if (key == "resource_glob") m.resource_glob = value.get<std::string>();
    else if (key == "tags_all") m.tags_all = value.get<std::set<std::string>>();
    else throw MalformedDocument("unknown match key: " + key);
  }
  return m;
}

json rule_to_json(const PolicyRule& r) {
  return json{{"effect", effect_name(r.effect)},
              {"match", match_to_json(r.match)},
              {"rule_id", r.rule_id},
              {"weight", r.weight}};
}

PolicyRule rule_from_json(const json& j) {
  if (!j.is_object()) throw MalformedDocument("rule must be an object");
  PolicyRule r;
  bool saw_effect = false, saw_id = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "effect") {
      r.effect = effect_from_name(value.get<std::string>());
      saw_effect = true;
    } else if (key == "match") {
      r.match = match_from_json(value);
    } else if (key == "rule_id") {
      r.rule_id = value.get<std::string>();
      saw_id = true;
    } else if (key == "weight") {
      r.weight = value.get<double>();
    } else {
      throw MalformedDocument("unknown rule key: " + key);
    }
  }
  if (!saw_effect || !saw_id) throw MalformedDocument("rule missing effect or rule_id");
  return r;
}

}  // namespace

json to_json(const PolicyDocument& doc) {
  json rules = json::array();
  for (const auto& r : doc.rules) rules.push_back(rule_to_json(r));
  json lineage = json::array();
  for (const auto& h : doc.lineage) lineage.push_back(h.hex());
  return json{{"charter_id", doc.charter_id},
              {"lineage", lineage},
              {"prohibited_operations", doc.prohibited_operations},
              {"quorum_config",
               {{"byzantine_bound_f", doc.quorum_config.byzantine_bound_f},
                {"epoch_length", doc.quorum_config.epoch_length},
                {"n_validators", doc.quorum_config.n_validators},
                {"quorum_q", doc.quorum_config.quorum_q}}},
              {"risk_threshold_alpha", doc.risk_threshold_alpha},
              {"rules", rules},
              {"version", doc.version}};
}

PolicyDocument document_from_json(const json& j) {
  if (!j.is_object()) throw MalformedDocument("charter must be a JSON object");
  PolicyDocument doc;
  doc.charter_id.clear();
  for (const auto& [key, value] : j.items()) {
    if (key == "charter_id") {
      doc.charter_id = value.get<std::string>();
    } else if (key == "lineage") {
      for (const auto& h : value) doc.lineage.push_back(PolicyHash::from_hex(h.get<std::string>()));
    } else if (key == "prohibited_operations") {
      doc.prohibited_operations = value.get<std::set<std::string>>();
    } else if (key == "quorum_config") {
      doc.quorum_config.byzantine_bound_f = value.at("byzantine_bound_f").get<int>();
      doc.quorum_config.epoch_length = value.at("epoch_length").get<std::uint64_t>();
      doc.quorum_config.n_validators = value.at("n_validators").get<int>();
      doc.quorum_config.quorum_q = value.at("quorum_q").get<int>();
      if (value.size() != 4) throw MalformedDocument("unknown key in quorum_config");
    } else if (key == "risk_threshold_alpha") {
      doc.risk_threshold_alpha = value.get<double>();
    } else if (key == "rules") {
      doc.rules.clear();
      for (const auto& r : value) doc.rules.push_back(rule_from_json(r));
    } else if (key == "version") {
      doc.version = value.get<std::uint64_t>();
    } else {
      throw MalformedDocument("unknown charter key: " + key);
    }
  }
  validate_document(doc);
  return doc;
}

std::string canonicalize(const PolicyDocument& doc) {
  validate_document(doc);
  return canonical::dump(to_json(doc));
}

PolicyDocument parse(std::string_view canonical_bytes) {
  json j;
  try {
    j = json::parse(canonical_bytes);
  } catch (const json::exception& e) {
    throw MalformedDocument(std::string("charter parse error: ") + e.what());
  }
  return document_from_json(j);
}

PolicyHash seal(const PolicyDocument& doc) { return crypto::sha3_256(canonicalize(doc)); }

bool edit_is_evolvable(const PolicyEdit& edit) {
  if (edit.field == "risk_threshold_alpha") return edit.op == "set";
  if (edit.field == "rules") return edit.op == "add" || edit.op == "remove" || edit.op == "set";
  if (edit.field == "prohibited_operations") return edit.op == "add" || edit.op == "remove";
  if (edit.field == "quorum_config.epoch_length") return edit.op == "set";
  return false;
}

json to_json(const PolicyEdit& edit) {
  json j{{"field", edit.field}, {"op", edit.op}, {"value", edit.value}};
  if (edit.index) j["index"] = *edit.index;
  return j;
}

PolicyEdit edit_from_json(const json& j) {
  if (!j.is_object() || !j.contains("field") || !j.contains("op") || !j.contains("value"))
    throw MalformedAmendment("edit requires field, op and value");
  PolicyEdit e;
  e.field = j.at("field").get<std::string>();
  e.op = j.at("op").get<std::string>();
  e.value = j.at("value");
  if (j.contains("index")) e.index = j.at("index").get<std::uint64_t>();
  return e;
}

json to_json(const AmendmentProposal& p) {
  json edits = json::array();
  for (const auto& e : p.edits) edits.push_back(to_json(e));
  return json{{"base_hash", p.base_hash.hex()},
              {"edits", edits},
              {"justification", p.justification},
              {"proposal_id", p.proposal_id},
              {"proposed_at", p.proposed_at}};
}

AmendmentProposal amendment_from_json(const json& j) {
  AmendmentProposal p;
  try {
    p.proposal_id = j.at("proposal_id").get<std::string>();
    p.base_hash = PolicyHash::from_hex(j.at("base_hash").get<std::string>());
    p.justification = j.at("justification").get<std::string>();
    p.proposed_at = j.at("proposed_at").get<std::string>();
    for (const auto& e : j.at("edits")) p.edits.push_back(edit_from_json(e));
  } catch (const json::exception& e) {
    throw MalformedAmendment(std::string("amendment parse error: ") + e.what());
  }
  return p;
}

namespace {

void apply_edit(PolicyDocument& doc, const PolicyEdit& edit) {
  if (edit.field == "risk_threshold_alpha") {
    doc.risk_threshold_alpha = edit.value.get<double>();
    return;
  }
  if (edit.field == "quorum_config.epoch_length") {
    doc.quorum_config.epoch_length = edit.value.get<std::uint64_t>();
    return;
  }
  if (edit.field == "prohibited_operations") {
    auto category = edit.value.get<std::string>();
    if (edit.op == "add") doc.prohibited_operations.insert(category);
    else doc.prohibited_operations.erase(category);
    return;
  }
  if (edit.field == "rules") {
    if (edit.op == "add") {
      auto rule = rule_from_json(edit.value);
      size_t at = edit.index ? std::min<size_t>(*edit.index, doc.rules.size()) : doc.rules.size();
      doc.rules.insert(doc.rules.begin() + at, std::move(rule));
      return;
    }
    if (edit.op == "remove") {
      auto id = edit.value.get<std::string>();
      auto it = std::find_if(doc.rules.begin(), doc.rules.end(),
                             [&](const PolicyRule& r) { return r.rule_id == id; });
      if (it == doc.rules.end()) throw MalformedAmendment("remove of unknown rule_id: " + id);
      doc.rules.erase(it);
      return;
    }
    if (edit.op == "set") {
      auto rule = rule_from_json(edit.value);
      auto it = std::find_if(doc.rules.begin(), doc.rules.end(),
                             [&](const PolicyRule& r) { return r.rule_id == rule.rule_id; });
      if (it == doc.rules.end())
        throw MalformedAmendment("set of unknown rule_id: " + rule.rule_id);
      *it = std::move(rule);
      return;
    }
  }
  throw MalformedAmendment("unintelligible edit: " + edit.field + "/" + edit.op);
}

}  // namespace

PolicyDocument apply_amendment(const PolicyDocument& doc, const AmendmentProposal& amendment) {
  PolicyHash current = seal(doc);
  if (amendment.base_hash != current)
    throw BaseHashMismatch("amendment base hash " + amendment.base_hash.hex() +
                           " does not match the live policy " + current.hex());
  for (const auto& edit : amendment.edits) {
    if (!edit_is_evolvable(edit))
      throw ImmutableFieldEdit("edit touches an immutable field: " + edit.field + "/" + edit.op);
  }
  PolicyDocument next = doc;
  for (const auto& edit : amendment.edits) apply_edit(next, edit);
  next.version = doc.version + 1;
  next.lineage.push_back(current);
  validate_document(next);
  return next;
}

}  // namespace aegis::iepl
