#include "flipparse/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "flipparse/bundle.hpp"
#include "flipparse/pipeline.hpp"
#include "flipparse/scoring.hpp"

namespace flipparse {

namespace {

// Failure to load or read data; reported with exit status 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string bundle;
  std::string profile = "hebrew";
  std::string input;
  std::string output;
  std::string embeddings;
  int batch = 32;
  int threads = 1;
  bool ner = false;
  std::string format;
  std::uint64_t seed = 7;
  int dim = 64;
  int d_head = kDefaultHeadDim;
  int vocab = 256;
  std::string gold;
  std::string pred;
  int sentences = 100;
  int min_len = 16;
  int max_len = 256;
  double gate_ms = 0.0;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

LanguageProfile load_profile_arg(const std::string& arg) {
  try {
    return load_profile(resolve_profile_path(arg));
  } catch (const ProfileError& e) {
    throw DataError(std::string("profile: ") + e.what());
  }
}

ModelBundle load_bundle_arg(const CommonOptions& o, const LanguageProfile& profile) {
  if (o.bundle.empty()) return synthetic_bundle(o.seed, o.dim, profile, o.d_head, o.vocab);
  try {
    return load_bundle(o.bundle);
  } catch (const BundleError& e) {
    std::string msg = std::string("bundle '") + o.bundle + "': " + e.what();
    if (e.offset()) msg += " (offset " + std::to_string(*e.offset()) + ")";
    throw DataError(msg);
  }
}

std::unique_ptr<EmbeddingStore> load_store_arg(const std::string& path) {
  if (path.empty()) return nullptr;
  try {
    return std::make_unique<EmbeddingStore>(EmbeddingStore::load(path));
  } catch (const BundleError& e) {
    throw DataError(std::string("embeddings '") + path + "': " + e.what());
  }
}

// Output goes to --output when given, otherwise to the caller's stream.
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw DataError("cannot write '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<UdSentence> read_conllu_arg(const std::string& path, const char* role) {
  try {
    return parse_conllu(read_file(path));
  } catch (const ConlluError& e) {
    throw DataError(std::string(role) + " '" + path + "' " + e.what());
  } catch (const ValidationError& e) {
    throw DataError(std::string(role) + " '" + path + "' " + e.what());
  }
}

int cmd_parse(const CommonOptions& o, std::istream& in, std::ostream& out, std::ostream& err) {
  if (o.format != "conllu") throw CLI::ValidationError("--format", "parse only writes conllu");
  const LanguageProfile profile = load_profile_arg(o.profile);
  const ModelBundle bundle = load_bundle_arg(o, profile);
  const auto store = load_store_arg(o.embeddings);
  std::optional<Pipeline> pipeline;
  try {
    pipeline.emplace(bundle, profile, store.get());
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }

  std::ifstream file;
  std::istream* source = &in;
  if (!o.input.empty()) {
    file.open(o.input, std::ios::binary);
    if (!file) throw DataError("cannot open '" + o.input + "'");
    source = &file;
  }
  OutputTarget target(o.output, out);

  int failures = 0;
  int sentence_id = 0;
  std::vector<std::string> batch;
  auto flush = [&] {
    std::vector<std::string> rendered(batch.size());
    std::vector<std::string> errors(batch.size());
    auto work = [&](size_t worker, size_t workers) {
      for (size_t k = worker; k < batch.size(); k += workers) {
        try {
          const auto tokens = tokenize_whitespace(batch[k]);
          ParseResult r = pipeline->parse(tokens, o.ner);
          r.sentence.comments.insert(r.sentence.comments.begin(),
                                     "# sent_id = " + std::to_string(sentence_id + 1 + k));
          rendered[k] = serialize_conllu(r.sentence);
        } catch (const std::exception& e) {
          errors[k] = e.what();
        }
      }
    };
    const size_t workers = std::min<size_t>(static_cast<size_t>(o.threads), batch.size());
    if (workers <= 1) {
      work(0, 1);
    } else {
      std::vector<std::thread> pool;
      for (size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
      for (auto& t : pool) t.join();
    }
    for (size_t k = 0; k < batch.size(); ++k) {
      if (errors[k].empty()) {
        target.get() << rendered[k];
      } else {
        ++failures;
        err << "sentence " << sentence_id + 1 + k << ": " << errors[k] << "\n";
      }
    }
    sentence_id += static_cast<int>(batch.size());
    batch.clear();
  };

  std::string line;
  while (std::getline(*source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (tokenize_whitespace(line).empty()) continue;
    batch.push_back(line);
    if (static_cast<int>(batch.size()) >= o.batch) flush();
  }
  if (!batch.empty()) flush();
  target.get().flush();
  return failures == 0 ? kExitOk : kExitData;
}

int cmd_eval(const CommonOptions& o, std::ostream& out) {
  if (o.format != "report" && o.format != "json") {
    throw CLI::ValidationError("--format", "eval writes report or json");
  }
  const std::string pred_path = o.pred.empty() ? o.input : o.pred;
  if (pred_path.empty()) throw CLI::RequiredError("--pred");
  const auto gold = read_conllu_arg(o.gold, "gold");
  const auto pred = read_conllu_arg(pred_path, "prediction");
  ScoreReport report;
  try {
    report = score_corpus(pred, gold);
  } catch (const AlignmentError& e) {
    throw DataError(std::string("misaligned files: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  OutputTarget target(o.output, out);
  target.get() << (o.format == "json" ? report.to_json() : report.to_text());
  return kExitOk;
}

struct Timing {
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

Timing summarize(std::vector<double> ms) {
  if (ms.empty()) return {};
  std::sort(ms.begin(), ms.end());
  const size_t n = ms.size();
  const double median = n % 2 == 1 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
  const size_t p95 = std::min(n - 1, static_cast<size_t>(0.95 * static_cast<double>(n - 1) + 0.5));
  return {median, ms[p95]};
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

int cmd_bench(const CommonOptions& o, std::ostream& out) {
  if (o.format != "report" && o.format != "json") {
    throw CLI::ValidationError("--format", "bench writes report or json");
  }
  const LanguageProfile profile = load_profile_arg(o.profile);
  const ModelBundle bundle = load_bundle_arg(o, profile);
  const Pipeline pipeline(bundle, profile);
  const auto corpus = generate_corpus(o.seed, o.sentences, o.min_len, o.max_len, profile);

  using clock = std::chrono::steady_clock;
  auto elapsed_ms = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  // one untimed pass warms caches and allocators
  for (size_t i = 0; i < std::min<size_t>(corpus.size(), 5); ++i) pipeline.parse(corpus[i]);

  std::vector<double> post;
  std::vector<double> full;
  size_t nodes = 0;
  for (const auto& tokens : corpus) {
    const EmbeddingMatrix e = pipeline.embed(tokens);
    auto t0 = clock::now();
    const ParseResult r = pipeline.parse_embedded(e, tokens);
    auto t1 = clock::now();
    post.push_back(elapsed_ms(t0, t1));
    nodes += r.sentence.nodes.size();

    t0 = clock::now();
    const ParseResult again = pipeline.parse(tokens);
    t1 = clock::now();
    full.push_back(elapsed_ms(t0, t1));
  }
  const Timing a = summarize(post);
  const Timing b = summarize(full);
  const bool gated = o.gate_ms > 0.0;
  const bool pass = !gated || a.median_ms <= o.gate_ms;

  OutputTarget target(o.output, out);
  if (o.format == "json") {
    nlohmann::ordered_json j;
    j["sentences"] = corpus.size();
    j["min_len"] = o.min_len;
    j["max_len"] = o.max_len;
    j["d"] = bundle.d;
    j["d_head"] = bundle.d_head;
    j["post_encoder"] = {{"median_ms", a.median_ms}, {"p95_ms", a.p95_ms}};
    j["full_pipeline"] = {{"median_ms", b.median_ms}, {"p95_ms", b.p95_ms}};
    if (gated) j["gate"] = {{"median_ms_max", o.gate_ms}, {"pass", pass}};
    target.get() << j.dump(2) << "\n";
  } else {
    target.get() << "sentences " << corpus.size() << " (lengths " << o.min_len << ".." << o.max_len
                 << "), d=" << bundle.d << ", d_head=" << bundle.d_head << ", nodes " << nodes
                 << "\n"
                 << "post_encoder   median_ms " << fixed4(a.median_ms) << "  p95_ms "
                 << fixed4(a.p95_ms) << "\n"
                 << "full_pipeline  median_ms " << fixed4(b.median_ms) << "  p95_ms "
                 << fixed4(b.p95_ms) << "\n";
    if (gated) {
      target.get() << "gate median <= " << fixed4(o.gate_ms) << " ms: " << (pass ? "pass" : "FAIL")
                   << "\n";
    }
  }
  return pass ? kExitOk : kExitData;
}

int cmd_coverage(const CommonOptions& o, std::ostream& out) {
  const LanguageProfile profile = load_profile_arg(o.profile);
  const ModelBundle bundle = load_bundle_arg(o, profile);
  const auto gold = read_conllu_arg(o.gold, "gold");
  OutputTarget target(o.output, out);
  target.get() << "lemma_coverage " << fixed4(lemma_coverage(gold, bundle.vocab)) << "\n";
  return kExitOk;
}

}  // namespace

std::vector<std::vector<WholeToken>> generate_corpus(std::uint64_t seed, int count, int min_len,
                                                     int max_len, const LanguageProfile& profile) {
  if (count < 0 || min_len < 1 || max_len < min_len) {
    throw std::invalid_argument("generate_corpus: need count >= 0 and 1 <= min_len <= max_len");
  }
  std::vector<std::string> pieces;
  for (const auto& g : profile.letter_groups) pieces.push_back(g.text);
  for (char c = 'a'; c <= 'z'; ++c) pieces.emplace_back(1, c);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> length(min_len, max_len);
  std::uniform_int_distribution<int> word_len(2, 7);
  std::uniform_int_distribution<size_t> piece(0, pieces.size() - 1);
  std::vector<std::vector<WholeToken>> corpus;
  corpus.reserve(static_cast<size_t>(count));
  for (int s = 0; s < count; ++s) {
    std::vector<WholeToken> tokens;
    const int n = length(rng);
    for (int i = 1; i <= n; ++i) {
      std::string word;
      for (int k = word_len(rng); k > 0; --k) word += pieces[piece(rng)];
      tokens.push_back({i, std::move(word)});
    }
    corpus.push_back(std::move(tokens));
  }
  return corpus;
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Flipped-pipeline parser for morphologically rich languages", "flipparse"};
  app.require_subcommand(1);
  CommonOptions o;

  auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("--bundle", o.bundle, "Model bundle file (synthetic bundle when omitted)");
    cmd->add_option("--profile", o.profile, "Language profile name or path");
    cmd->add_option("--seed", o.seed, "Seed of the synthetic bundle and corpus");
    cmd->add_option("--dim", o.dim, "Embedding width of the synthetic bundle")
        ->check(CLI::Range(4, 1 << 14));
    cmd->add_option("--d-head", o.d_head, "Attention width of the synthetic bundle")
        ->check(CLI::Range(1, 1 << 14));
    cmd->add_option("--vocab", o.vocab, "Lemma vocabulary size of the synthetic bundle")
        ->check(CLI::Range(2, 1 << 22));
    cmd->add_option("--output,-o", o.output, "Output file (default stdout)");
  };

  CLI::App* parse = app.add_subcommand("parse", "Parse whitespace-tokenized sentences to CoNLL-U");
  add_model(parse);
  parse->add_option("--input,-i", o.input, "Input file, one sentence per line (default stdin)");
  parse->add_option("--embeddings", o.embeddings, "Embedding dump to use instead of the synthetic embedder");
  parse->add_option("--batch", o.batch, "Sentences per parallel group")->check(CLI::PositiveNumber);
  parse->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1, 256));
  parse->add_flag("--ner", o.ner, "Emit NER tags as a sentence comment");
  parse->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"conllu"}))
      ->default_str("conllu");

  CLI::App* eval = app.add_subcommand("eval", "Score predicted CoNLL-U against gold");
  eval->add_option("--gold", o.gold, "Gold CoNLL-U")->required();
  eval->add_option("--pred,--input", o.pred, "Predicted CoNLL-U")->required();
  eval->add_option("--output,-o", o.output, "Output file (default stdout)");
  eval->add_option("--format", o.format, "report or json")->check(CLI::IsMember({"report", "json"}));

  CLI::App* bench = app.add_subcommand("bench", "Time the post-encoder and full pipelines");
  add_model(bench);
  bench->add_option("--sentences", o.sentences, "Corpus size")->check(CLI::PositiveNumber);
  bench->add_option("--min-len", o.min_len, "Shortest sentence")->check(CLI::PositiveNumber);
  bench->add_option("--max-len", o.max_len, "Longest sentence")->check(CLI::PositiveNumber);
  bench->add_option("--gate-ms", o.gate_ms, "Fail when the post-encoder median exceeds this");
  bench->add_option("--format", o.format, "report or json")->check(CLI::IsMember({"report", "json"}));

  CLI::App* coverage = app.add_subcommand("coverage", "Share of gold lemmas in the bundle vocabulary");
  add_model(coverage);
  coverage->add_option("--gold", o.gold, "Gold CoNLL-U")->required();

  std::vector<std::string> argv_storage;
  argv_storage.push_back("flipparse");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (bench->parsed() && o.bundle.empty() && !bench->count("--dim")) o.dim = 768;
    if (bench->parsed() && o.max_len < o.min_len) {
      throw CLI::ValidationError("--max-len", "must not be below --min-len");
    }
    if (parse->parsed()) {
      if (o.format.empty()) o.format = "conllu";
      return cmd_parse(o, in, out, err);
    }
    if (o.format.empty()) o.format = "report";
    if (eval->parsed()) return cmd_eval(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
    return cmd_coverage(o, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const DataError& e) {
    err << "flipparse: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "flipparse: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace flipparse
