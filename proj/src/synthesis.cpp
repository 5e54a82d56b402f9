#include "flipparse/synthesis.hpp"

#include <algorithm>

namespace flipparse {

namespace {

bool contains(const std::vector<std::string>& list, std::string_view value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

// Head of whole token `token_index` after escalating past it. The root has
// no segment to attach to, so such escalations stay on the token.
HeadRef escalate(int token_index, const DepPrediction& dep) {
  return dep.head == 0 ? HeadRef::token(token_index) : HeadRef::token(dep.head);
}

std::string describe_suffix(const SuffixPrediction& s) {
  auto get = [&](const char* key) {
    auto it = s.features.find(key);
    return it == s.features.end() ? std::string("_") : it->second;
  };
  return "(" + s.function + ", Gender=" + get("Gender") + ", Number=" + get("Number") +
         ", Person=" + get("Person") + ")";
}

struct PendingNode {
  UdNode node;
  HeadRef head;
};

}  // namespace

std::string_view to_string(SynthesisBranch branch) {
  switch (branch) {
    case SynthesisBranch::kMarkLocal: return "mark/local";
    case SynthesisBranch::kMarkEscalated: return "mark/escalated";
    case SynthesisBranch::kCcLocal: return "cc/local";
    case SynthesisBranch::kCcEscalated: return "cc/escalated";
    case SynthesisBranch::kCaseLocal: return "case/local";
    case SynthesisBranch::kCaseEscalated: return "case/escalated";
    case SynthesisBranch::kDet: return "det";
    case SynthesisBranch::kImplicitDet: return "implicit-det";
    case SynthesisBranch::kSuffixSwap: return "suffix/swap";
    case SynthesisBranch::kSuffixObj: return "suffix/obj";
    case SynthesisBranch::kSuffixPoss: return "suffix/poss";
  }
  return "?";
}

void SynthesisInput::validate() const {
  const size_t n = tokens.size();
  if (deps.size() != n || morphs.size() != n || segs.size() != n || lemmas.size() != n) {
    throw std::invalid_argument("synthesis input lists differ in length");
  }
  for (size_t i = 0; i < n; ++i) {
    const int self = static_cast<int>(i) + 1;
    if (deps[i].head < 0 || deps[i].head > static_cast<int>(n) || deps[i].head == self) {
      throw std::invalid_argument("token " + std::to_string(self) + " has invalid head " +
                                  std::to_string(deps[i].head));
    }
    size_t offset = 0;
    for (const auto& prefix : segs[i].prefixes) {
      if (tokens[i].surface.compare(offset, prefix.size(), prefix) != 0) {
        throw std::invalid_argument("prefix '" + prefix + "' does not match token '" +
                                    tokens[i].surface + "'");
      }
      offset += prefix.size();
    }
    if (offset >= tokens[i].surface.size()) {
      throw std::invalid_argument("prefixes consume all of token '" + tokens[i].surface + "'");
    }
  }
}

std::string choose_prefix_function(const std::string& prefix, std::vector<std::string>& functions,
                                   const LanguageProfile& profile) {
  auto table = profile.prefix_functions.find(prefix);
  if (table == profile.prefix_functions.end() || table->second.empty()) {
    throw std::invalid_argument("'" + prefix + "' is not a letter-group of profile " + profile.name);
  }
  for (const auto& candidate : table->second) {
    auto it = std::find(functions.begin(), functions.end(), candidate);
    if (it != functions.end()) {
      functions.erase(it);
      return candidate;
    }
  }
  return table->second.front();
}

PrefixAttachment attach_prefix(const std::string& prefix, const std::string& pos, int token_index,
                               const MorphPrediction& morph, const DepPrediction& dep,
                               const LanguageProfile& profile) {
  const HeadRef self = HeadRef::token(token_index);
  if (prefix.ends_with(profile.relativizer_suffix)) {
    if (morph.upos != "VERB") return {escalate(token_index, dep), "mark", SynthesisBranch::kMarkEscalated};
    return {self, "mark", SynthesisBranch::kMarkLocal};
  }
  if (prefix == profile.conj_letter) {
    if (!contains(profile.note1_deprels, dep.relation)) {
      return {escalate(token_index, dep), "cc", SynthesisBranch::kCcEscalated};
    }
    return {self, "cc", SynthesisBranch::kCcLocal};
  }
  PrefixAttachment out{self, "case", SynthesisBranch::kCaseLocal};
  if (!contains(profile.case_keep_local_upos, morph.upos) &&
      contains(profile.note2_deprels, dep.relation)) {
    out.head = escalate(token_index, dep);
    out.branch = SynthesisBranch::kCaseEscalated;
  }
  if (prefix == profile.implicit_det_letter && pos == "DET") {
    out.deprel = "det";
    out.branch = SynthesisBranch::kDet;
  }
  return out;
}

SuffixExpansion expand_suffix(int token_index, const MorphPrediction& morph,
                              const DepPrediction& dep, const LemmaPrediction& lemma,
                              const LanguageProfile& profile) {
  if (!morph.suffix) throw std::invalid_argument("expand_suffix: token has no suffix");
  const SuffixPrediction& s = *morph.suffix;
  auto upos = profile.suffix_functions.find(s.function);
  if (upos == profile.suffix_functions.end()) {
    throw SynthesisError("profile " + profile.name + " has no suffix function '" + s.function + "'");
  }
  const SuffixRule* rule = profile.lookup_suffix(s.function, s.features);
  if (rule == nullptr) {
    throw SynthesisError("profile " + profile.name + " has no suffix entry for " + describe_suffix(s));
  }

  SuffixExpansion out;
  out.main_form = lemma.lemma;
  out.suffix.form = rule->form;
  out.suffix.lemma = rule->lemma;
  out.suffix.upos = upos->second;
  out.suffix.feats = s.features;
  out.suffix_head = HeadRef::token(token_index);
  if (contains(profile.suffix_swap_upos, morph.upos)) {
    out.suffix.deprel = dep.relation;
    out.suffix_head = dep.head == 0 ? HeadRef::root() : HeadRef::token(dep.head);
    out.main_reattached = true;
    out.branch = SynthesisBranch::kSuffixSwap;
  } else if (morph.upos == "VERB") {
    out.suffix.deprel = "obj";
    out.branch = SynthesisBranch::kSuffixObj;
  } else {
    out.suffix.deprel = "nmod:poss";
    out.possessive_marker = true;
    out.branch = SynthesisBranch::kSuffixPoss;
  }
  return out;
}

bool needs_implicit_det(const MorphPrediction& morph, const SegPrediction& seg,
                        const LanguageProfile& profile) {
  return !contains(seg.prefixes, profile.implicit_det_letter) &&
         contains(morph.proclitic_functions, "DET");
}

UdSentence convert_to_ud(const SynthesisInput& input, const LanguageProfile& profile,
                         SynthesisTrace* trace) {
  input.validate();
  const int n = static_cast<int>(input.tokens.size());
  std::vector<PendingNode> out;
  std::vector<int> representative(n + 1, -1);  // token -> output position carrying its arc
  UdSentence sentence;

  auto note = [&](int token, SynthesisBranch b) {
    if (trace != nullptr) trace->push_back({token, b});
  };

  for (int i = 1; i <= n; ++i) {
    const auto& token = input.tokens[i - 1];
    const auto& dep = input.deps[i - 1];
    const auto& morph = input.morphs[i - 1];
    const auto& seg = input.segs[i - 1];
    const auto& lemma = input.lemmas[i - 1];
    const size_t first = out.size();

    std::vector<std::string> functions = morph.proclitic_functions;
    size_t consumed = 0;
    for (const auto& prefix : seg.prefixes) {
      const std::string pos = choose_prefix_function(prefix, functions, profile);
      const PrefixAttachment a = attach_prefix(prefix, pos, i, morph, dep, profile);
      note(i, a.branch);
      PendingNode p;
      p.node.form = prefix;
      p.node.lemma = prefix;
      p.node.upos = pos;
      p.node.deprel = a.deprel;
      p.head = a.head;
      out.push_back(std::move(p));
      consumed += prefix.size();
    }

    const int main_pos = static_cast<int>(out.size()) + (needs_implicit_det(morph, seg, profile) ? 1 : 0);
    if (needs_implicit_det(morph, seg, profile)) {
      note(i, SynthesisBranch::kImplicitDet);
      PendingNode det;
      det.node.form = profile.implicit_det.form;
      det.node.lemma = profile.implicit_det.lemma;
      det.node.upos = profile.implicit_det.upos;
      det.node.deprel = "det";
      det.head = HeadRef::local(main_pos);
      out.push_back(std::move(det));
    }

    PendingNode main;
    main.node.form = token.surface.substr(consumed);
    main.node.lemma = lemma.lemma;
    main.node.upos = morph.upos;
    main.node.feats = morph.features;
    main.node.deprel = dep.relation;
    main.head = dep.head == 0 ? HeadRef::root() : HeadRef::token(dep.head);
    out.push_back(std::move(main));
    representative[i] = main_pos;

    if (morph.suffix) {
      SuffixExpansion x = expand_suffix(i, morph, dep, lemma, profile);
      note(i, x.branch);
      out[main_pos].node.form = x.main_form;
      const int suffix_pos = static_cast<int>(out.size()) + (x.possessive_marker ? 1 : 0);
      if (x.main_reattached) {
        out[main_pos].node.deprel = "case";
        out[main_pos].head = HeadRef::local(suffix_pos);
        representative[i] = suffix_pos;
      }
      if (x.possessive_marker) {
        PendingNode marker;
        marker.node.form = profile.possessive_marker.form;
        marker.node.lemma = profile.possessive_marker.lemma;
        marker.node.upos = profile.possessive_marker.upos;
        marker.node.deprel = "case";
        marker.head = HeadRef::local(suffix_pos);
        out.push_back(std::move(marker));
      }
      out.push_back({std::move(x.suffix), x.suffix_head});
    }

    if (out.size() - first >= 2) {
      sentence.spans.push_back({static_cast<int>(first) + 1, static_cast<int>(out.size()),
                                token.surface, "_"});
    }
  }

  sentence.nodes.reserve(out.size());
  for (size_t k = 0; k < out.size(); ++k) {
    UdNode node = std::move(out[k].node);
    node.id = static_cast<int>(k) + 1;
    const HeadRef& h = out[k].head;
    switch (h.kind) {
      case HeadRef::Kind::kRoot: node.head = 0; break;
      case HeadRef::Kind::kToken: node.head = representative[h.index] + 1; break;
      case HeadRef::Kind::kLocal: node.head = h.index + 1; break;
    }
    sentence.nodes.push_back(std::move(node));
  }

  std::string text;
  for (const auto& t : input.tokens) {
    if (!text.empty()) text += ' ';
    text += t.surface;
  }
  sentence.text = std::move(text);

  if (auto diags = validate_tree(sentence); n > 0 && !diags.empty()) {
    throw SynthesisError("synthesized analysis is not a tree: " + diags.front().message);
  }
  return sentence;
}

SynthesisInput decompose_ud(const UdSentence& sentence, const LanguageProfile& profile) {
  // node id -> whole-token index
  std::vector<int> owner(sentence.nodes.size() + 1, 0);
  struct Group {
    int first = 0;  // node ids, inclusive
    int last = 0;
    std::string surface;
  };
  std::vector<Group> groups;
  size_t next_span = 0;
  for (int id = 1; id <= static_cast<int>(sentence.nodes.size());) {
    if (next_span < sentence.spans.size() && sentence.spans[next_span].start == id) {
      const auto& s = sentence.spans[next_span++];
      groups.push_back({s.start, s.end, s.surface});
      id = s.end + 1;
    } else {
      groups.push_back({id, id, sentence.nodes[id - 1].form});
      ++id;
    }
    for (int k = groups.back().first; k <= groups.back().last; ++k) {
      owner[k] = static_cast<int>(groups.size());
    }
  }

  SynthesisInput in;
  for (size_t g = 0; g < groups.size(); ++g) {
    const Group& grp = groups[g];
    const int index = static_cast<int>(g) + 1;
    auto node = [&](int id) -> const UdNode& { return sentence.nodes[id - 1]; };
    in.tokens.push_back({index, grp.surface});

    // Leading nodes that spell letter-groups are prefixes as long as what
    // follows still reads as [implicit det] main [marker] suffix.
    auto suffix_function = [&](const UdNode& suffix) -> std::string {
      for (const auto& [function, upos] : profile.suffix_functions) {
        const SuffixRule* rule = profile.lookup_suffix(function, suffix.feats);
        if (upos == suffix.upos && rule != nullptr && rule->form == suffix.form &&
            rule->lemma == suffix.lemma) {
          return function;
        }
      }
      return {};
    };
    auto tail_fits = [&](int id, size_t consumed) {
      if (id < grp.last && node(id).form == profile.implicit_det.form) ++id;
      const int len = grp.last - id + 1;
      if (len == 1) return node(id).form == grp.surface.substr(consumed);
      if (len == 3 && node(id + 1).form != profile.possessive_marker.form) return false;
      return (len == 2 || len == 3) && !suffix_function(node(grp.last)).empty();
    };
    int prefix_count = -1;
    {
      size_t consumed = 0;
      for (int k = 0;; ++k) {
        if (tail_fits(grp.first + k, consumed)) prefix_count = k;
        const int id = grp.first + k;
        if (id >= grp.last || !profile.is_letter_group(node(id).form) ||
            grp.surface.compare(consumed, node(id).form.size(), node(id).form) != 0) {
          break;
        }
        consumed += node(id).form.size();
        if (consumed >= grp.surface.size()) break;
      }
    }
    if (prefix_count < 0) {
      throw SynthesisError("token '" + grp.surface + "' is not in synthesized form");
    }

    int id = grp.first;
    SegPrediction seg;
    MorphPrediction morph;
    for (; id < grp.first + prefix_count; ++id) {
      seg.prefixes.push_back(node(id).form);
      if (!contains(morph.proclitic_functions, node(id).upos)) {
        morph.proclitic_functions.push_back(node(id).upos);
      }
    }
    if (id < grp.last && node(id).form == profile.implicit_det.form) {
      if (!contains(morph.proclitic_functions, "DET")) morph.proclitic_functions.push_back("DET");
      ++id;
    }
    const UdNode& main = node(id);
    morph.upos = main.upos;
    morph.features = main.feats;
    const UdNode* carrier = &main;
    if (id < grp.last) {
      const UdNode& suffix = node(grp.last);
      SuffixPrediction s{suffix_function(suffix), suffix.feats};
      morph.suffix = std::move(s);
      if (contains(profile.suffix_swap_upos, main.upos)) carrier = &suffix;
    }
    in.morphs.push_back(std::move(morph));
    in.segs.push_back(std::move(seg));
    in.lemmas.push_back({main.lemma, true});
    in.deps.push_back({carrier->head == 0 ? 0 : owner[carrier->head], carrier->deprel});
  }
  return in;
}

}  // namespace flipparse
