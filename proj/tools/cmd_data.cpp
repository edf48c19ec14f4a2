/* Copyright 2026 The knnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// gen-toy, build, merge, map-fit, map-apply

#include <algorithm>
#include <iostream>
#include <memory>

#include "commands.hpp"
#include "knnmt/align.hpp"
#include "knnmt/decode.hpp"
#include "knnmt/features/table.hpp"
#include "knnmt/synthetic.hpp"
#include "knnmt/vecstore.hpp"

namespace knnmt::cli {
namespace {

struct IndexFlags {
  std::string kind = "exact";
  uint32_t cells = 0;
  uint32_t probe = 8;

  void add_to(CLI::App* sub) {
    sub->add_option("--index", kind, "exact or cell")->capture_default_str();
    sub->add_option("--cells", cells, "cell count for --index cell (0: about sqrt(n))")->capture_default_str();
    sub->add_option("--probe", probe, "cells probed per query")->capture_default_str();
  }

  IndexSpec spec() const {
    IndexSpec s;
    s.kind = parse_index_kind(kind);
    s.n_cells = cells;
    s.n_probe = probe;
    return s;
  }
};

json provenance_json(const Datastore& s) {
  json langs = json::object();
  for (const auto& l : s.languages()) langs[l.lang.code()] = l.count;
  return {{"entries", s.size()}, {"dim", s.dim()}, {"vocab_size", s.vocab_size()},
          {"index", std::string(to_string(s.index_spec().kind))}, {"languages", langs}};
}

// ---------------------------------------------------------------------------

// Made-up distances driven by family membership and word order, plus a little
// seeded jitter, so the regression has something to find.
LinguisticDistances toy_distances(const ToyCorpusSpec& spec) {
  LinguisticDistances d;
  for (size_t i = 0; i < spec.languages.size(); ++i) {
    for (size_t j = i + 1; j < spec.languages.size(); ++j) {
      const auto& a = spec.languages[i];
      const auto& b = spec.languages[j];
      bool same = a.family == b.family;
      Rng rng(hash_combine(spec.seed, stable_hash(a.lang.code() + "|" + b.lang.code())));
      auto jitter = [&](double v) { return std::clamp(v + rng.uniform(-0.08, 0.08), 0.0, 1.0); };
      LinguisticDistances::Row row = {jitter(same ? 0.25 : 0.60), jitter(same ? 0.15 : 0.85),
                                      jitter(same ? 0.30 : 0.65), jitter(a.reorder == b.reorder ? 0.20 : 0.80),
                                      jitter(same ? 0.35 : 0.70)};
      d.set(a.lang, b.lang, row);
    }
  }
  return d;
}

void register_gen_toy(CLI::App& app, std::vector<Command>& cmds) {
  struct Opts {
    std::string out;
    uint64_t seed = 1;
    size_t concepts = 150, pool = 4000, test = 100;
    double scale = 1.0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = add_command(app, cmds, "gen-toy", "Generate a seeded synthetic multilingual toy corpus");
  sub->add_option("--out", o->out, "output directory")->required();
  sub->add_option("--seed", o->seed, "generator seed")->capture_default_str();
  sub->add_option("--concepts", o->concepts, "target vocabulary size")->capture_default_str();
  sub->add_option("--pool-sentences", o->pool, "shared sentence pool")->capture_default_str();
  sub->add_option("--test-sentences", o->test, "multi-parallel test sentences")->capture_default_str();
  sub->add_option("--scale", o->scale, "multiplier on every language's training size")->capture_default_str();
  cmds.back().run = [o](RunManifest& m) {
    require(o->scale > 0.0, ErrorCode::invalid_argument, "--scale must be positive");
    ensure_dir(o->out);
    m.set_path(o->out + "/gen-toy.manifest.json");
    m.seed(o->seed);
    auto spec = ToyCorpusSpec::default_spec(o->seed);
    spec.concepts = o->concepts;
    spec.pool_sentences = o->pool;
    spec.test_sentences = o->test;
    for (auto& l : spec.languages)
      l.train_sentences = std::max<size_t>(1, static_cast<size_t>(static_cast<double>(l.train_sentences) * o->scale));
    Stopwatch sw;
    auto corpus = generate_toy_corpus(spec);
    m.timing("generate", sw.seconds());

    const std::string dir = o->out + "/";
    const std::string tgt = corpus.target.code();
    auto put = [&](const std::string& path, const std::vector<std::string>& lines) {
      write_lines(path, lines);
      m.output(path);
    };
    put(dir + "vocab.txt", corpus.vocab);
    std::vector<std::string> langs_tsv = {"lang\tfamily\ttrain_sentences\treorder"};
    json sizes = json::object();
    for (const auto& l : spec.languages) {
      const auto& code = l.lang.code();
      put(dir + "train-" + code + "." + code, corpus.train.at(l.lang).source);
      put(dir + "train-" + code + "." + tgt, corpus.train.at(l.lang).target);
      put(dir + "test." + code, corpus.test.at(l.lang).source);
      langs_tsv.push_back(code + "\t" + l.family + "\t" + std::to_string(corpus.train.at(l.lang).source.size()) +
                          "\t" + (l.reorder ? "1" : "0"));
      sizes[code] = corpus.train.at(l.lang).source.size();
    }
    put(dir + "test." + tgt, corpus.test.begin()->second.target);
    put(dir + "languages.tsv", langs_tsv);
    toy_distances(spec).save(dir + "distances.tsv");
    m.output(dir + "distances.tsv");
    m["vocab_size"] = corpus.vocab.size();
    m["train_sentences"] = sizes;
    m["test_sentences"] = spec.test_sentences;
    m["target"] = tgt;
    std::cout << "wrote toy corpus (" << spec.languages.size() << " languages, " << corpus.vocab.size()
              << " types) to " << o->out << '\n';
  };
}

// ---------------------------------------------------------------------------

void register_build(CLI::App& app, std::vector<Command>& cmds) {
  struct Opts {
    std::string corpus, src, tgt = "en", vocab, dump, out, dump_out, lang;
    uint32_t dim = 64;
    IndexFlags index;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = add_command(app, cmds, "build", "Build a datastore from a parallel corpus or a context dump");
  sub->add_option("--corpus", o->corpus, "corpus prefix; reads <prefix>.<src> and <prefix>.<tgt>");
  sub->add_option("--src", o->src, "source language");
  sub->add_option("--tgt", o->tgt, "target language")->capture_default_str();
  sub->add_option("--vocab", o->vocab, "token vocabulary file");
  sub->add_option("--dim", o->dim, "featurizer dimension")->capture_default_str();
  sub->add_option("--lang", o->lang, "provenance tag for the entries (default: --src)");
  sub->add_option("--dump", o->dump, "build from an RDMP1 context dump instead of a corpus");
  sub->add_option("--out", o->out, "datastore file to write (KDS1)");
  sub->add_option("--dump-out", o->dump_out, "also write the contexts as an RDMP1 dump");
  o->index.add_to(sub);
  cmds.back().run = [o](RunManifest& m) {
    require(!o->out.empty() || !o->dump_out.empty(), ErrorCode::invalid_argument, "give --out and/or --dump-out");
    require(o->corpus.empty() != o->dump.empty(), ErrorCode::invalid_argument, "give exactly one of --corpus, --dump");
    m.set_path(sidecar(!o->out.empty() ? o->out : o->dump_out));
    Stopwatch sw;
    std::vector<ReprRecord> records;
    uint32_t dim = o->dim, vocab_size = 0;
    LanguageTag lang;
    if (!o->corpus.empty()) {
      require(!o->src.empty() && !o->vocab.empty(), ErrorCode::invalid_argument, "--corpus needs --src and --vocab");
      lang = LanguageTag(o->lang.empty() ? o->src : o->lang);
      auto vocab = Vocabulary::load(o->vocab);
      auto pairs = encode_parallel(read_parallel_text(o->corpus, o->src, o->tgt), vocab);
      m.input(corpus_path(o->corpus, o->src));
      m.input(corpus_path(o->corpus, o->tgt));
      m.input(o->vocab);
      ToyBaseModel model(pairs, vocab.size(), dim);
      records = collect_contexts(model, pairs, lang);
      vocab_size = static_cast<uint32_t>(vocab.size());
      size_t target_tokens = 0;
      for (const auto& p : pairs) target_tokens += p.target.size();
      m["sentences"] = pairs.size();
      m["target_tokens"] = target_tokens;
      m["tokenizer"] = "whitespace";
      m["corpus"] = o->corpus;
    } else {
      auto dump = read_dump(o->dump);
      m.input(o->dump);
      dim = dump.header.dim;
      vocab_size = dump.header.vocab_size;
      lang = dump.header.lang;
      records = std::move(dump.records);
      m["tokenizer"] = "unknown (from dump)";
      m["corpus"] = o->dump;
    }
    m.timing("contexts", sw.seconds());
    if (!o->dump_out.empty()) {
      write_dump(o->dump_out, dim, vocab_size, lang, records);
      m.output(o->dump_out);
      m["dump_records"] = records.size();
    }
    if (!o->out.empty()) {
      sw.reset();
      auto store = build_datastore(records, dim, vocab_size, o->index.spec());
      m.timing("index", sw.seconds());
      save_datastore(store, o->out);
      m.output(o->out);
      m["datastore"] = provenance_json(store);
      std::cout << "built " << o->out << ": " << store.size() << " entries, d=" << store.dim() << '\n';
    } else {
      std::cout << "wrote " << o->dump_out << ": " << records.size() << " records, d=" << dim << '\n';
    }
  };
}

void register_merge(CLI::App& app, std::vector<Command>& cmds) {
  struct Opts {
    std::vector<std::string> stores;
    std::string out, index;
    uint32_t cells = 0, probe = 8;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = add_command(app, cmds, "merge", "Union several datastores into one multilingual store");
  sub->add_option("--store", o->stores, "input datastores (repeat or comma-separate)")->required()->delimiter(',');
  sub->add_option("--out", o->out, "merged datastore")->required();
  sub->add_option("--index", o->index, "exact or cell (default: first input's index)");
  sub->add_option("--cells", o->cells, "cell count for --index cell")->capture_default_str();
  sub->add_option("--probe", o->probe, "cells probed per query")->capture_default_str();
  cmds.back().run = [o](RunManifest& m) {
    m.set_path(sidecar(o->out));
    Stopwatch sw;
    std::vector<Datastore> stores;
    for (const auto& p : o->stores) {
      stores.push_back(load_datastore(p));
      m.input(p);
    }
    m.timing("load", sw.seconds());
    std::optional<IndexSpec> spec;
    if (!o->index.empty()) spec = IndexSpec{parse_index_kind(o->index), o->cells, o->probe};
    sw.reset();
    auto merged = merge_datastores(stores, spec);
    m.timing("merge", sw.seconds());
    save_datastore(merged, o->out);
    m.output(o->out);
    m["datastore"] = provenance_json(merged);
    std::cout << "merged " << stores.size() << " stores into " << o->out << ": " << merged.size() << " entries\n";
  };
}

void register_map_fit(CLI::App& app, std::vector<Command>& cmds) {
  struct Opts {
    std::string from, to, alignment, out;
    std::vector<std::string> targets;
    std::optional<double> ridge;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = add_command(app, cmds, "map-fit", "Fit a linear map from one store's context space into another's");
  sub->add_option("--from", o->from, "datastore of the language being mapped")->required();
  sub->add_option("--to", o->to, "datastore of the language mapped into")->required();
  sub->add_option("--alignment", o->alignment, "TSV of sentence_id_from<TAB>sentence_id_to");
  sub->add_option("--targets", o->targets, "two target-side files; sentences align where the targets are identical")
      ->expected(2)
      ->delimiter(',');
  sub->add_option("--ridge", o->ridge, "ridge strength (default 1e-6 * trace(X'X) / d; 0 for plain least squares)");
  sub->add_option("--out", o->out, "map file (KLM1)")->required();
  cmds.back().run = [o](RunManifest& m) {
    require(o->alignment.empty() != o->targets.empty(), ErrorCode::invalid_argument,
            "give exactly one of --alignment, --targets");
    m.set_path(sidecar(o->out));
    auto a = load_datastore(o->from);
    auto b = load_datastore(o->to);
    m.input(o->from);
    m.input(o->to);
    SentenceAlignment alignment;
    if (!o->alignment.empty()) {
      alignment = load_alignment(o->alignment);
      m.input(o->alignment);
    } else {
      alignment = align_by_target(read_lines(o->targets[0]), read_lines(o->targets[1]));
      m.input(o->targets[0]);
      m.input(o->targets[1]);
    }
    Stopwatch sw;
    auto pairs = extract_training_pairs(a, b, alignment);
    double ridge = o->ridge ? *o->ridge : default_ridge(pairs);
    require(ridge >= 0.0, ErrorCode::invalid_argument, "--ridge must be non-negative");
    auto fit = fit_linear_map(pairs, ridge);
    m.timing("fit", sw.seconds());
    save_linear_map(fit.map, o->out);
    m.output(o->out);
    m["aligned_sentences"] = alignment.size();
    m["training_rows"] = pairs.rows();
    m["ridge"] = ridge;
    m["residual"] = fit.residual;
    std::cout << "fitted " << pairs.source_lang.code() << "->" << pairs.target_lang.code() << " map on "
              << pairs.rows() << " rows, residual " << fit.residual << '\n';
  };
}

void register_map_apply(CLI::App& app, std::vector<Command>& cmds) {
  struct Opts {
    std::string store, map, out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = add_command(app, cmds, "map-apply", "Apply a linear map to every key of a datastore");
  sub->add_option("--store", o->store, "input datastore")->required();
  sub->add_option("--map", o->map, "map file (KLM1)")->required();
  sub->add_option("--out", o->out, "mapped datastore")->required();
  cmds.back().run = [o](RunManifest& m) {
    m.set_path(sidecar(o->out));
    auto store = load_datastore(o->store);
    auto map = load_linear_map(o->map);
    m.input(o->store);
    m.input(o->map);
    Stopwatch sw;
    auto mapped = map_datastore(store, map);
    m.timing("map", sw.seconds());
    save_datastore(mapped, o->out);
    m.output(o->out);
    m["datastore"] = provenance_json(mapped);
    std::cout << "mapped " << store.size() << " keys into " << o->out << '\n';
  };
}

}  // namespace

void register_data_commands(CLI::App& app, std::vector<Command>& cmds) {
  register_gen_toy(app, cmds);
  register_build(app, cmds);
  register_merge(app, cmds);
  register_map_fit(app, cmds);
  register_map_apply(app, cmds);
}

}  // namespace knnmt::cli
