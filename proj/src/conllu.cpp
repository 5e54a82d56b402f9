#include "flipparse/conllu.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace flipparse {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<int> to_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string field_or_blank(const std::string& s) { return s.empty() ? "_" : s; }

constexpr std::string_view kTextPrefix = "# text = ";

}  // namespace

std::vector<WholeToken> tokenize_whitespace(std::string_view line) {
  std::vector<WholeToken> tokens;
  std::istringstream in{std::string(line)};
  std::string word;
  while (in >> word) {
    tokens.push_back({static_cast<int>(tokens.size()) + 1, word});
  }
  return tokens;
}

std::string format_feats(const FeatureBag& feats) {
  if (feats.empty()) return "_";
  std::string out;
  for (const auto& [key, value] : feats) {
    if (!out.empty()) out += '|';
    out += key;
    out += '=';
    out += value;
  }
  return out;
}

FeatureBag parse_feats(std::string_view field) {
  FeatureBag feats;
  if (field == "_" || field.empty()) return feats;
  for (auto item : split(field, '|')) {
    auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size()) {
      throw std::invalid_argument("malformed feature '" + std::string(item) + "'");
    }
    feats.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
  }
  return feats;
}

const std::vector<std::string>& upos_inventory() {
  static const std::vector<std::string> tags = {
      "ADJ",  "ADP",  "ADV",  "AUX",   "CCONJ", "DET", "INTJ", "NOUN", "NUM",
      "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};
  return tags;
}

bool is_upos(std::string_view tag) {
  const auto& tags = upos_inventory();
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::vector<WholeToken> whole_tokens_of(const UdSentence& sentence) {
  std::vector<WholeToken> tokens;
  size_t span = 0;
  for (size_t i = 0; i < sentence.nodes.size(); ++i) {
    const int id = sentence.nodes[i].id;
    if (span < sentence.spans.size() && sentence.spans[span].start == id) {
      tokens.push_back({static_cast<int>(tokens.size()) + 1, sentence.spans[span].surface});
      i += sentence.spans[span].end - sentence.spans[span].start;
      ++span;
      continue;
    }
    tokens.push_back({static_cast<int>(tokens.size()) + 1, sentence.nodes[i].form});
  }
  return tokens;
}

std::vector<Diagnostic> validate_tree(const UdSentence& sentence) {
  std::vector<Diagnostic> diags;
  const int m = static_cast<int>(sentence.nodes.size());
  std::vector<int> head(m + 1, 0);
  int roots = 0;
  int first_root = 0;
  for (const auto& node : sentence.nodes) {
    if (node.head < 0 || node.head > m) {
      diags.push_back({DiagnosticKind::kHeadOutOfRange, node.id,
                       "node " + std::to_string(node.id) + " has head " +
                           std::to_string(node.head) + " outside 0.." + std::to_string(m),
                       {}});
      head[node.id] = -1;
      continue;
    }
    if (node.head == node.id) {
      diags.push_back({DiagnosticKind::kSelfHead, node.id,
                       "node " + std::to_string(node.id) + " is its own head", {node.id}});
      head[node.id] = -1;
      continue;
    }
    head[node.id] = node.head;
    if (node.head == 0) {
      if (++roots == 1) {
        first_root = node.id;
      } else {
        diags.push_back({DiagnosticKind::kMultipleRoots, node.id,
                         "node " + std::to_string(node.id) + " is a second root (first is " +
                             std::to_string(first_root) + ")",
                         {}});
      }
    }
  }
  if (m > 0 && roots == 0) {
    diags.push_back({DiagnosticKind::kNoRoot, 1, "no node is attached to the root", {}});
  }

  // 0 = unvisited, 1 = on current walk, 2 = done
  std::vector<int> state(m + 1, 0);
  for (int start = 1; start <= m; ++start) {
    if (state[start] != 0) continue;
    std::vector<int> walk;
    int v = start;
    while (v > 0 && state[v] == 0) {
      state[v] = 1;
      walk.push_back(v);
      v = head[v];
    }
    if (v > 0 && state[v] == 1) {
      auto it = std::find(walk.begin(), walk.end(), v);
      std::vector<int> cycle(it, walk.end());
      std::string msg = "cycle through nodes";
      for (int c : cycle) msg += " " + std::to_string(c);
      diags.push_back({DiagnosticKind::kCycle, *std::min_element(cycle.begin(), cycle.end()), msg,
                       cycle});
    }
    for (int w : walk) state[w] = 2;
  }

  int last_end = 0;
  for (const auto& span : sentence.spans) {
    if (span.start < 1 || span.end > m || span.start >= span.end || span.start <= last_end) {
      diags.push_back({DiagnosticKind::kBadSpan, span.start,
                       "multiword span " + std::to_string(span.start) + "-" +
                           std::to_string(span.end) + " is empty, overlapping or out of range",
                       {}});
    }
    last_end = std::max(last_end, span.end);
  }
  return diags;
}

ConlluError::ConlluError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string describe(const std::vector<Diagnostic>& diagnostics) {
  std::string msg = "invalid dependency tree";
  for (const auto& d : diagnostics) msg += "; " + d.message;
  return msg;
}

}  // namespace

ValidationError::ValidationError(int line, std::vector<Diagnostic> diagnostics)
    : std::runtime_error("sentence ending at line " + std::to_string(line) + ": " +
                         describe(diagnostics)),
      line_(line),
      diagnostics_(std::move(diagnostics)) {}

std::vector<int> ValidationError::cycle() const {
  for (const auto& d : diagnostics_) {
    if (d.kind == DiagnosticKind::kCycle || d.kind == DiagnosticKind::kSelfHead) return d.cycle;
  }
  return {};
}

std::vector<UdSentence> parse_conllu(std::string_view text) {
  std::vector<UdSentence> sentences;
  UdSentence current;
  bool open = false;
  int line_no = 0;

  auto finish = [&]() {
    if (!open) return;
    auto diags = validate_tree(current);
    if (!diags.empty()) throw ValidationError(line_no, std::move(diags));
    sentences.push_back(std::move(current));
    current = UdSentence{};
    open = false;
  };

  for (auto raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      finish();
      continue;
    }
    open = true;
    if (line.front() == '#') {
      if (line.starts_with(kTextPrefix) && !current.text) {
        current.text = std::string(line.substr(kTextPrefix.size()));
      } else {
        current.comments.emplace_back(line);
      }
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 10) {
      throw ConlluError(line_no, "expected 10 tab-separated columns, found " +
                                     std::to_string(cols.size()));
    }
    const std::string_view id = cols[0];
    if (auto dash = id.find('-'); dash != std::string_view::npos) {
      auto start = to_int(id.substr(0, dash));
      auto end = to_int(id.substr(dash + 1));
      if (!start || !end) throw ConlluError(line_no, "bad multiword range '" + std::string(id) + "'");
      if (*start != static_cast<int>(current.nodes.size()) + 1) {
        throw ConlluError(line_no, "multiword range does not start at the next node id");
      }
      current.spans.push_back({*start, *end, std::string(cols[1]), std::string(cols[9])});
      continue;
    }
    if (id.find('.') != std::string_view::npos) {
      throw ConlluError(line_no, "empty nodes are not supported");
    }
    auto node_id = to_int(id);
    if (!node_id) throw ConlluError(line_no, "bad node id '" + std::string(id) + "'");
    if (*node_id != static_cast<int>(current.nodes.size()) + 1) {
      throw ConlluError(line_no, "node ids must be contiguous from 1");
    }
    UdNode node;
    node.id = *node_id;
    node.form = std::string(cols[1]);
    node.lemma = std::string(cols[2]);
    node.upos = std::string(cols[3]);
    if (!is_upos(node.upos)) throw ConlluError(line_no, "unknown UPOS '" + node.upos + "'");
    node.xpos = std::string(cols[4]);
    try {
      node.feats = parse_feats(cols[5]);
    } catch (const std::invalid_argument& e) {
      throw ConlluError(line_no, e.what());
    }
    auto head = to_int(cols[6]);
    if (!head) throw ConlluError(line_no, "bad head '" + std::string(cols[6]) + "'");
    node.head = *head;
    node.deprel = std::string(cols[7]);
    node.deps = std::string(cols[8]);
    node.misc = std::string(cols[9]);
    current.nodes.push_back(std::move(node));
  }
  finish();
  return sentences;
}

std::string serialize_conllu(const UdSentence& sentence) {
  std::string out;
  for (const auto& c : sentence.comments) {
    out += c;
    out += '\n';
  }
  if (sentence.text) {
    out += kTextPrefix;
    out += *sentence.text;
    out += '\n';
  }
  size_t span = 0;
  for (const auto& node : sentence.nodes) {
    if (span < sentence.spans.size() && sentence.spans[span].start == node.id) {
      const auto& s = sentence.spans[span++];
      out += std::to_string(s.start) + "-" + std::to_string(s.end) + "\t" + s.surface +
             "\t_\t_\t_\t_\t_\t_\t_\t" + field_or_blank(s.misc) + "\n";
    }
    out += std::to_string(node.id);
    for (const std::string* f : {&node.form, &node.lemma, &node.upos, &node.xpos}) {
      out += '\t';
      out += field_or_blank(*f);
    }
    out += '\t' + format_feats(node.feats);
    out += '\t' + std::to_string(node.head);
    out += '\t' + field_or_blank(node.deprel);
    out += '\t' + field_or_blank(node.deps);
    out += '\t' + field_or_blank(node.misc);
    out += '\n';
  }
  out += '\n';
  return out;
}

std::string serialize_conllu(const std::vector<UdSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) out += serialize_conllu(s);
  return out;
}

}  // namespace flipparse
