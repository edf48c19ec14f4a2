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

// translate, bleu

#include <atomic>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <thread>

#include "commands.hpp"
#include "knnmt/align.hpp"
#include "knnmt/decode.hpp"
#include "knnmt/mteval.hpp"
#include "knnmt/transfer/rtp.hpp"
#include "knnmt/vecstore.hpp"

namespace knnmt::cli {
namespace {

constexpr size_t kWarmupBatch = 16;  // sentences decoded before the clock starts

std::string number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

/// out.txt + tag -> out.tag.txt
std::string tagged_path(const std::string& path, const std::string& tag) {
  std::filesystem::path p(path);
  auto ext = p.extension().string();
  p.replace_extension();
  return p.string() + "." + tag + ext;
}

struct Decoded {
  std::vector<TokenId> tokens;
  size_t steps = 0;  // tokens produced, the end-of-sequence step included
};

/// Decodes sentences [begin, end) on `jobs` threads; results land at their
/// input positions.
void decode_range(const KnnDecoder& dec, const std::vector<std::vector<TokenId>>& sources, size_t begin, size_t end,
                  size_t beam, size_t max_len, size_t jobs, std::vector<Decoded>& out) {
  std::atomic<size_t> next{begin};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    try {
      for (size_t i; (i = next.fetch_add(1)) < end;) {
        auto h = beam <= 1 ? greedy_search(dec, sources[i], max_len) : beam_search(dec, sources[i], beam, max_len);
        out[i].steps = h.tokens.size() + (h.finished ? 1 : 0);
        out[i].tokens = std::move(h.tokens);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
      next = end;
    }
  };
  std::vector<std::thread> pool;
  for (size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void register_translate(CLI::App& app, std::vector<Command>& cmds) {
  struct Opts {
    std::string train, src, tgt = "en", vocab, input, output, map;
    std::vector<std::string> stores;
    std::vector<size_t> k = {32};
    std::vector<double> lambda = {0.5}, temperature = {10.0};
    uint32_t dim = 64;
    size_t beam = 1, max_len = 100, jobs = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = add_command(app, cmds, "translate", "Translate with a toy base model plus optional kNN retrieval");
  sub->add_option("--train", o->train, "corpus prefix the base model is estimated from")->required();
  sub->add_option("--src", o->src, "source language")->required();
  sub->add_option("--tgt", o->tgt, "target language")->capture_default_str();
  sub->add_option("--vocab", o->vocab, "token vocabulary file")->required();
  sub->add_option("--dim", o->dim, "featurizer dimension")->capture_default_str();
  sub->add_option("--input", o->input, "source sentences, one per line")->required();
  sub->add_option("--output", o->output, "translations; grid runs insert a .k-lambda-T tag")->required();
  sub->add_option("--store", o->stores, "datastores to retrieve from (merged when several)")->delimiter(',');
  sub->add_option("--map", o->map, "linear map applied to every query (KLM1)");
  sub->add_option("--k", o->k, "neighbours; a list sweeps a grid")->delimiter(',')->capture_default_str();
  sub->add_option("--lambda", o->lambda, "interpolation weight; a list sweeps a grid")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--temperature", o->temperature, "kNN softmax temperature; a list sweeps a grid")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--beam", o->beam, "beam size (1: greedy)")->capture_default_str();
  sub->add_option("--max-len", o->max_len, "maximum output length")->capture_default_str();
  sub->add_option("--jobs", o->jobs, "decoding threads")->capture_default_str();
  cmds.back().run = [o, sub](RunManifest& first) {
    require(o->max_len >= 1 && o->jobs >= 1 && o->beam >= 1, ErrorCode::invalid_argument,
            "--max-len, --jobs and --beam must be positive");
    first.set_path(sidecar(o->output));  // so early failures are recorded too
    Stopwatch setup;
    auto vocab = Vocabulary::load(o->vocab);
    auto pairs = encode_parallel(read_parallel_text(o->train, o->src, o->tgt), vocab);
    ToyBaseModel model(pairs, vocab.size(), o->dim);
    std::vector<std::vector<TokenId>> sources;
    for (const auto& line : read_lines(o->input)) sources.push_back(vocab.encode(line));
    std::optional<Datastore> store;
    if (!o->stores.empty()) {
      std::vector<Datastore> parts;
      for (const auto& p : o->stores) parts.push_back(load_datastore(p));
      store = parts.size() == 1 ? std::move(parts.front()) : merge_datastores(parts);
    }
    std::optional<LinearMap> map;
    if (!o->map.empty()) map = load_linear_map(o->map);
    const double setup_seconds = setup.seconds();

    struct Point {
      KnnConfig cfg;
      std::string path;
    };
    std::vector<Point> grid;
    const bool sweep = o->k.size() * o->lambda.size() * o->temperature.size() > 1;
    for (size_t k : o->k)
      for (double l : o->lambda)
        for (double t : o->temperature) {
          KnnConfig cfg{k, l, t};
          cfg.validate();
          std::string tag = "k" + std::to_string(k) + "-lambda" + number(l) + "-T" + number(t);
          grid.push_back({cfg, sweep ? tagged_path(o->output, tag) : o->output});
        }

    auto run_point = [&](const Point& pt, RunManifest& m) {
      m.set_path(sidecar(pt.path));
      m.record_config(*sub);
      m["k"] = pt.cfg.k;
      m["lambda"] = pt.cfg.lambda;
      m["temperature"] = pt.cfg.temperature;
      m.input(corpus_path(o->train, o->src));
      m.input(corpus_path(o->train, o->tgt));
      m.input(o->vocab);
      m.input(o->input);
      for (const auto& s : o->stores) m.input(s);
      if (map) m.input(o->map);
      m.timing("setup", setup_seconds);
      KnnDecoder dec(model, store ? &*store : nullptr, map ? &*map : nullptr, pt.cfg);
      std::vector<Decoded> out(sources.size());
      const size_t warm = std::min(kWarmupBatch, sources.size());
      Stopwatch sw;
      decode_range(dec, sources, 0, warm, o->beam, o->max_len, o->jobs, out);
      const double warm_seconds = sw.seconds();
      sw.reset();
      decode_range(dec, sources, warm, sources.size(), o->beam, o->max_len, o->jobs, out);
      const double timed_seconds = sw.seconds();
      size_t all_steps = 0, timed_steps = 0;
      for (size_t i = 0; i < out.size(); ++i) {
        all_steps += out[i].steps;
        if (i >= warm) timed_steps += out[i].steps;
      }
      m.timing("warmup", warm_seconds);
      m.timing("decode", timed_seconds);
      // Everything fits in the warm-up batch: report it rather than nothing.
      if (warm == sources.size()) m.throughput(all_steps, warm_seconds);
      else m.throughput(timed_steps, timed_seconds);
      m["sentences"] = sources.size();
      m["decoded_tokens"] = all_steps;
      std::vector<std::string> lines;
      lines.reserve(out.size());
      for (const auto& d : out) lines.push_back(vocab.decode(d.tokens));
      write_lines(pt.path, lines);
      m.output(pt.path);
      std::cout << pt.path << ": " << sources.size() << " sentences, k=" << pt.cfg.k << " lambda=" << pt.cfg.lambda
                << " T=" << pt.cfg.temperature << '\n';
    };

    // The caller writes `first`; the other grid points write their own.
    Stopwatch wall;
    run_point(grid.front(), first);
    for (size_t g = 1; g < grid.size(); ++g) {
      RunManifest m("translate");
      wall.reset();
      run_point(grid[g], m);
      m.write("ok", wall.seconds() + setup_seconds);
    }
    first["grid_points"] = grid.size();
  };
}

std::vector<std::vector<std::string>> tokenized(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  for (const auto& line : read_lines(path)) out.push_back(split_whitespace(line));
  return out;
}

void register_bleu(CLI::App& app, std::vector<Command>& cmds) {
  struct Opts {
    std::string hyp, ref, smoothing = "exp", out, table, lang, column, scale = "percent";
  };
  auto o = std::make_shared<Opts>();
  auto* sub = add_command(app, cmds, "bleu", "Corpus BLEU of whitespace-tokenized hypotheses against references");
  sub->add_option("--hyp", o->hyp, "hypothesis file")->required();
  sub->add_option("--ref", o->ref, "reference file, line-aligned")->required();
  sub->add_option("--smoothing", o->smoothing, "none or exp")->capture_default_str();
  sub->add_option("--out", o->out, "JSON score file");
  sub->add_option("--table", o->table, "BLEU table (TSV) to record the score in");
  sub->add_option("--lang", o->lang, "row of --table");
  sub->add_option("--column", o->column, "bilingual or multilingual");
  sub->add_option("--scale", o->scale, "scale for a newly created --table (percent or unit)")->capture_default_str();
  cmds.back().run = [o](RunManifest& m) {
    m.set_path(!o->out.empty() ? sidecar(o->out) : o->hyp + ".bleu.manifest.json");
    m.input(o->hyp);
    m.input(o->ref);
    auto score = bleu(tokenized(o->hyp), tokenized(o->ref), parse_smoothing(o->smoothing));
    auto pct = score.as_percent();
    json j = {{"score", score.score},
              {"score_percent", pct.score},
              {"precisions", score.precisions},
              {"matches", score.matches},
              {"totals", score.totals},
              {"brevity_penalty", score.brevity_penalty},
              {"hyp_len", score.hyp_len},
              {"ref_len", score.ref_len},
              {"smoothing", o->smoothing},
              {"signature", "nrefs:1|tok:whitespace|smooth:" + o->smoothing}};
    m["bleu"] = j;
    if (!o->out.empty()) {
      std::ofstream out(o->out, std::ios::trunc);
      require(out.good(), ErrorCode::io, "cannot write " + o->out);
      out << j.dump(2) << '\n';
      m.output(o->out);
    }
    if (!o->table.empty()) {
      require(!o->lang.empty() && (o->column == "bilingual" || o->column == "multilingual"),
              ErrorCode::invalid_argument, "--table needs --lang and --column bilingual|multilingual");
      BleuTable table;
      if (std::filesystem::exists(o->table)) table = load_bleu_table(o->table);
      else table.scale = parse_scale(o->scale);
      double v = table.scale == ScoreScale::percent ? pct.score : score.score;
      LanguageTag lang(o->lang);
      // A new row starts with both columns equal; the other column is
      // expected to be recorded by a second call.
      BleuScores row = table.rows.count(lang) ? table.rows.at(lang) : BleuScores{v, v};
      (o->column == "bilingual" ? row.bilingual : row.multilingual) = v;
      table.set(lang, row);
      save_bleu_table(table, o->table);
      m.output(o->table);
    }
    std::cout << std::fixed << std::setprecision(2) << "BLEU = " << pct.score << " " << 100 * score.precisions[0];
    for (size_t n = 1; n < kBleuOrder; ++n) std::cout << '/' << 100 * score.precisions[n];
    std::cout << std::setprecision(3) << " (BP = " << score.brevity_penalty << ", hyp_len = " << score.hyp_len
              << ", ref_len = " << score.ref_len << ")\n";
  };
}

}  // namespace

void register_translate_commands(CLI::App& app, std::vector<Command>& cmds) {
  register_translate(app, cmds);
  register_bleu(app, cmds);
}

}  // namespace knnmt::cli
