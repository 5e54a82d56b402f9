#include "flipparse/profile.hpp"

#include <algorithm>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace flipparse {

using json = nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ProfileError("unknown key '" + key + "' in " + where);
    }
  }
}

const json& require(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ProfileError("missing mandatory table '" + key + "'");
  return *it;
}

std::vector<std::string> string_list(const json& obj, const std::string& key) {
  const json& v = require(obj, key);
  if (!v.is_array()) throw ProfileError("'" + key + "' must be a list of strings");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw ProfileError("'" + key + "' must be a list of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string string_field(const json& obj, const std::string& key) {
  const json& v = require(obj, key);
  if (!v.is_string() || v.get<std::string>().empty()) {
    throw ProfileError("'" + key + "' must be a non-empty string");
  }
  return v.get<std::string>();
}

NodeTemplate node_template(const json& obj, const std::string& key) {
  const json& v = require(obj, key);
  reject_unknown_keys(v, {"form", "lemma", "upos"}, key);
  NodeTemplate t{string_field(v, "form"), string_field(v, "lemma"), string_field(v, "upos")};
  if (!is_upos(t.upos)) throw ProfileError(key + ": unknown UPOS '" + t.upos + "'");
  return t;
}

bool pattern_matches(const std::string& pattern, const FeatureBag& feats, const char* key) {
  if (pattern == "*") return true;
  auto it = feats.find(key);
  if (pattern == "_") return it == feats.end();
  return it != feats.end() && it->second == pattern;
}

}  // namespace

int LanguageProfile::group_index(std::string_view text) const {
  for (size_t i = 0; i < letter_groups.size(); ++i) {
    if (letter_groups[i].text == text) return static_cast<int>(i);
  }
  return -1;
}

const SuffixRule* LanguageProfile::lookup_suffix(std::string_view function,
                                                 const FeatureBag& feats) const {
  for (const auto& rule : suffix_table) {
    if (rule.function != "*" && rule.function != function) continue;
    if (pattern_matches(rule.gender, feats, "Gender") &&
        pattern_matches(rule.number, feats, "Number") &&
        pattern_matches(rule.person, feats, "Person")) {
      return &rule;
    }
  }
  return nullptr;
}

namespace {

LanguageProfile profile_from_json(const json& doc) {
  if (!doc.is_object()) throw ProfileError("profile must be a JSON object");
  reject_unknown_keys(doc,
                      {"format_version", "name", "notes", "letter_groups", "prefix_functions",
                       "conj_letter", "relativizer_suffix", "implicit_det_letter",
                       "implicit_det_node", "possessive_marker", "case_keep_local_upos",
                       "suffix_swap_upos", "note1_deprels", "note2_deprels", "suffix_functions",
                       "suffix_table"},
                      "profile");

  const json& version = require(doc, "format_version");
  if (!version.is_number_integer() || version.get<int>() != kProfileFormatVersion) {
    throw ProfileError("unsupported profile format_version " + version.dump());
  }

  LanguageProfile p;
  p.name = string_field(doc, "name");
  if (doc.contains("notes")) {
    const json& notes = doc["notes"];
    if (notes.is_array()) {
      for (const auto& line : notes) p.notes += line.get<std::string>() + "\n";
    } else {
      p.notes = notes.get<std::string>();
    }
  }

  const json& groups = require(doc, "letter_groups");
  if (!groups.is_array() || groups.empty()) {
    throw ProfileError("'letter_groups' must be a non-empty list");
  }
  for (const auto& g : groups) {
    reject_unknown_keys(g, {"text", "rank"}, "letter_groups entry");
    LetterGroup group{string_field(g, "text"), require(g, "rank").get<int>()};
    if (p.group_index(group.text) >= 0) {
      throw ProfileError("duplicate letter-group '" + group.text + "'");
    }
    p.letter_groups.push_back(std::move(group));
  }

  const json& functions = require(doc, "prefix_functions");
  if (!functions.is_object()) throw ProfileError("'prefix_functions' must be an object");
  for (const auto& [group, list] : functions.items()) {
    if (p.group_index(group) < 0) {
      throw ProfileError("prefix_functions names unknown letter-group '" + group + "'");
    }
    auto tags = string_list(functions, group);
    if (tags.empty()) throw ProfileError("prefix_functions['" + group + "'] is empty");
    for (const auto& t : tags) {
      if (!is_upos(t)) throw ProfileError("prefix_functions: unknown UPOS '" + t + "'");
    }
    p.prefix_functions[group] = std::move(tags);
  }
  for (const auto& g : p.letter_groups) {
    if (!p.prefix_functions.contains(g.text)) {
      throw ProfileError("letter-group '" + g.text + "' has no prefix_functions entry");
    }
  }

  p.conj_letter = string_field(doc, "conj_letter");
  p.relativizer_suffix = string_field(doc, "relativizer_suffix");
  p.implicit_det_letter = string_field(doc, "implicit_det_letter");
  p.implicit_det = node_template(doc, "implicit_det_node");
  p.possessive_marker = node_template(doc, "possessive_marker");
  p.case_keep_local_upos = string_list(doc, "case_keep_local_upos");
  p.suffix_swap_upos = string_list(doc, "suffix_swap_upos");
  p.note1_deprels = string_list(doc, "note1_deprels");
  p.note2_deprels = string_list(doc, "note2_deprels");

  const json& suffix_functions = require(doc, "suffix_functions");
  if (!suffix_functions.is_object()) throw ProfileError("'suffix_functions' must be an object");
  for (const auto& [name, upos] : suffix_functions.items()) {
    if (!upos.is_string() || !is_upos(upos.get<std::string>())) {
      throw ProfileError("suffix_functions['" + name + "'] must be a UPOS tag");
    }
    p.suffix_functions[name] = upos.get<std::string>();
  }

  const json& table = require(doc, "suffix_table");
  if (!table.is_array()) throw ProfileError("'suffix_table' must be a list");
  for (const auto& row : table) {
    reject_unknown_keys(row, {"function", "gender", "number", "person", "form", "lemma"},
                        "suffix_table row");
    SuffixRule rule{string_field(row, "function"), string_field(row, "gender"),
                    string_field(row, "number"),   string_field(row, "person"),
                    string_field(row, "form"),     string_field(row, "lemma")};
    if (rule.function != "*" && !p.suffix_functions.contains(rule.function)) {
      throw ProfileError("suffix_table names unknown suffix function '" + rule.function + "'");
    }
    p.suffix_table.push_back(std::move(rule));
  }
  return p;
}

}  // namespace

LanguageProfile parse_profile(std::string_view json_text) {
  try {
    return profile_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ProfileError(std::string("malformed profile: ") + e.what());
  }
}

LanguageProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProfileError("cannot open profile " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_profile(buf.str());
  } catch (const ProfileError& e) {
    throw ProfileError(path.string() + ": " + e.what());
  }
}

std::filesystem::path resolve_profile_path(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return name_or_path;
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("FLIPPARSE_PROFILE_DIR"); env && *env) dirs.emplace_back(env);
#ifdef FLIPPARSE_DEFAULT_PROFILE_DIR
  dirs.emplace_back(FLIPPARSE_DEFAULT_PROFILE_DIR);
#endif
  for (const auto& dir : dirs) {
    fs::path candidate = dir / (name_or_path + ".json");
    if (fs::exists(candidate)) return candidate;
  }
  throw ProfileError("profile '" + name_or_path + "' not found");
}

namespace {

void enumerate_from(std::string_view surface, size_t pos, int last_rank,
                    const LanguageProfile& profile, std::vector<std::string>& current,
                    std::vector<std::vector<std::string>>& out) {
  out.push_back(current);
  const std::string_view rest = surface.substr(pos);
  for (const auto& group : profile.letter_groups) {
    if (group.rank <= last_rank) continue;
    // The main word must keep at least one character.
    if (rest.size() <= group.text.size() || !rest.starts_with(group.text)) continue;
    current.push_back(group.text);
    enumerate_from(surface, pos + group.text.size(), group.rank, profile, current, out);
    current.pop_back();
  }
}

}  // namespace

std::vector<std::vector<std::string>> enumerate_valid_prefix_sets(
    std::string_view surface, const LanguageProfile& profile) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> current;
  enumerate_from(surface, 0, INT_MIN, profile, current, out);
  return out;
}

}  // namespace flipparse
