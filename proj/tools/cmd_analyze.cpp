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

// analyze: xsim matrix, RTP, features, regression, Spearman

#include <iostream>
#include <memory>

#include "commands.hpp"
#include "knnmt/decode.hpp"
#include "knnmt/features.hpp"
#include "knnmt/transfer.hpp"

namespace knnmt::cli {
namespace {

struct Opts {
  std::vector<std::string> dumps, corpora, generated;
  std::string target = "en", pivot, bleu, vocab, distances, out_dir, weighting = "mean", format = "both";
  bool macro = false, no_noise = false;
  size_t n_shuffles = 50, ngram = 1;
  uint64_t seed = 1;
};

json regression_json(const RegressionReport& r) {
  json folds = json::array(), imps = json::array();
  for (const auto& f : r.folds) folds.push_back({{"held_out", f.held_out.code()}, {"n_test", f.n_test}, {"mae", f.mae}});
  for (const auto& i : r.importances)
    imps.push_back({{"feature", i.name}, {"mean", i.mean}, {"stddev", i.stddev}, {"n_shuffles", i.drops.size()}});
  return {{"features", r.feature_names},
          {"folds", folds},
          {"mean_mae", r.mean_mae},
          {"averaging", r.macro_average ? "macro" : "micro"},
          {"coefficients", r.coefficients},
          {"intercept", r.intercept},
          {"ridge", r.ridge},
          {"importances", imps},
          {"noise_mae", r.noise_mae ? json(*r.noise_mae) : json(nullptr)}};
}

void write_tsv(const std::string& path, const std::vector<std::string>& lines, RunManifest& m) {
  write_lines(path, lines);
  m.output(path);
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void run(const Opts& o, RunManifest& m) {
  require(o.format == "tsv" || o.format == "json" || o.format == "both", ErrorCode::invalid_argument,
          "--format must be tsv, json or both");
  ensure_dir(o.out_dir);
  const std::string dir = o.out_dir + "/";
  m.set_path(dir + "analyze.manifest.json");
  m.seed(o.seed);
  const bool tsv = o.format != "json", js = o.format != "tsv";
  const LanguageTag target(o.target), pivot(o.pivot.empty() ? o.target : o.pivot);

  Stopwatch sw;
  auto dumps = ContextDumpSet::from_files(o.dumps, target);
  for (const auto& d : o.dumps) m.input(d);
  auto langs = dumps.languages();
  XsimOptions xo;
  if (o.weighting == "inverse-step") xo.weighting = TimestepWeighting::inverse_step;
  else require(o.weighting == "mean", ErrorCode::invalid_argument, "--xsim-weighting must be mean or inverse-step");
  auto sims = similarity_matrix(dumps, langs, xo);
  m.timing("xsim", sw.seconds());

  json report;
  report["target"] = target.code();
  report["pivot"] = pivot.code();
  report["xsim_weighting"] = o.weighting;
  json codes = json::array();
  for (const auto& l : langs) codes.push_back(l.code());
  report["languages"] = codes;
  json matrix = json::array();
  std::vector<std::string> xsim_lines = {"lang\t" + [&] {
    std::vector<std::string> c;
    for (const auto& l : langs) c.push_back(l.code());
    return join(c, "\t");
  }()};
  for (const auto& a : langs) {
    json row = json::array();
    std::string line = a.code();
    for (const auto& b : langs) {
      row.push_back(sims.at(a, b));
      line += "\t" + num(sims.at(a, b));
    }
    matrix.push_back(row);
    xsim_lines.push_back(line);
  }
  report["xsim"] = {{"languages", codes}, {"matrix", matrix}};
  if (tsv) write_tsv(dir + "xsim.tsv", xsim_lines, m);

  report["rtp"] = nullptr;
  report["spearman"] = nullptr;
  if (!o.bleu.empty()) {
    auto table = load_bleu_table(o.bleu);
    m.input(o.bleu);
    json list = json::array();
    std::vector<std::string> lines = {"lang\trtp\tdelta_bleu\tbilingual\tmultilingual"};
    std::vector<double> rtps, deltas;
    for (const auto& l : langs) {
      if (l == pivot) continue;
      auto terms = rtp_terms(l, sims, table, langs, pivot);
      double value = 0.0;
      json jt = json::array();
      for (const auto& t : terms) {
        value += t.contribution;
        jt.push_back({{"donor", t.donor.code()}, {"delta_bleu", t.delta_bleu}, {"xsim", t.xsim},
                      {"contribution", t.contribution}});
      }
      const auto& s = table.at(l);
      double delta = s.multilingual - s.bilingual;
      rtps.push_back(value);
      deltas.push_back(delta);
      list.push_back({{"lang", l.code()}, {"rtp", value}, {"delta_bleu", delta}, {"bilingual", s.bilingual},
                      {"multilingual", s.multilingual}, {"terms", jt}});
      lines.push_back(l.code() + "\t" + num(value) + "\t" + num(delta) + "\t" + num(s.bilingual) + "\t" +
                      num(s.multilingual));
    }
    report["rtp"] = {{"scale", to_string(table.scale)}, {"languages", list}};
    if (tsv) write_tsv(dir + "rtp.tsv", lines, m);
    auto rho = spearman(rtps, deltas);
    report["spearman"] = {{"x", "rtp"}, {"y", "delta_bleu"}, {"rho", rho.rho}, {"n", rho.n}};
    std::cout << "spearman(rtp, delta_bleu) = " << rho.rho << " over " << rho.n << " languages\n";
  }

  report["features"] = nullptr;
  report["regression"] = nullptr;
  if (!o.corpora.empty()) {
    require(!o.vocab.empty() && !o.distances.empty() && !o.generated.empty(), ErrorCode::invalid_argument,
            "--corpus needs --vocab, --distances and --generated");
    sw.reset();
    auto vocab = Vocabulary::load(o.vocab);
    auto distances = LinguisticDistances::load(o.distances);
    m.input(o.vocab);
    m.input(o.distances);
    std::map<LanguageTag, Corpus> corpora;
    for (const auto& arg : o.corpora) {
      auto [lang, prefix] = lang_value(arg);
      auto pairs = encode_parallel(read_parallel_text(prefix, lang.code(), target.code()), vocab);
      corpora.emplace(lang, Corpus::from_pairs(lang, pairs));
      m.input(corpus_path(prefix, lang.code()));
    }
    std::map<LanguageTag, std::vector<std::vector<TokenId>>> generated;
    for (const auto& arg : o.generated) {
      auto [lang, path] = lang_value(arg);
      auto& out = generated[lang];
      for (const auto& line : read_lines(path)) out.push_back(vocab.encode(line));
      m.input(path);
    }
    std::vector<LanguagePair> pairs;
    for (size_t i = 0; i < langs.size(); ++i)
      for (size_t j = i + 1; j < langs.size(); ++j)
        if (langs[i] != pivot && langs[j] != pivot) pairs.push_back({langs[i], langs[j]});
    auto table = build_feature_table(
        corpora, generated, distances, vocab.size(), pairs,
        [&](const LanguageTag& a, const LanguageTag& b) { return sims.at(a, b); }, o.ngram);
    m.timing("features", sw.seconds());
    json rows = json::array();
    for (const auto& r : table.rows)
      rows.push_back({{"lang1", r.lang1.code()}, {"lang2", r.lang2.code()}, {"features", r.features}, {"xsim", r.xsim}});
    report["features"] = {{"names", table.names}, {"rows", rows}};
    if (tsv) {
      table.save(dir + "features.tsv");
      m.output(dir + "features.tsv");
    }

    sw.reset();
    RegressionOptions ro;
    ro.macro_average = o.macro;
    ro.n_shuffles = o.n_shuffles;
    ro.seed = o.seed;
    ro.noise_baseline = !o.no_noise;
    auto reg = predict_xsim_loo(table, ro);
    m.timing("regression", sw.seconds());
    report["regression"] = regression_json(reg);
    if (tsv) {
      std::vector<std::string> lines = {"feature\tcoefficient\timportance_mean\timportance_stddev"};
      for (size_t f = 0; f < reg.feature_names.size(); ++f)
        lines.push_back(reg.feature_names[f] + "\t" + num(reg.coefficients[f]) + "\t" + num(reg.importances[f].mean) +
                        "\t" + num(reg.importances[f].stddev));
      write_tsv(dir + "regression.tsv", lines, m);
    }
    std::cout << "leave-one-language-out MAE = " << reg.mean_mae;
    if (reg.noise_mae) std::cout << " (noise features: " << *reg.noise_mae << ")";
    std::cout << '\n';
  }

  if (js) {
    std::ofstream out(dir + "report.json", std::ios::trunc);
    require(out.good(), ErrorCode::io, "cannot write " + dir + "report.json");
    out << report.dump(2) << '\n';
    m.output(dir + "report.json");
  }
  std::cout << "analysed " << langs.size() << " languages into " << o.out_dir << '\n';
}

}  // namespace

void register_analyze_command(CLI::App& app, std::vector<Command>& cmds) {
  auto o = std::make_shared<Opts>();
  auto* sub = add_command(app, cmds, "analyze", "Transfer analysis over context dumps, BLEU scores and corpora");
  sub->add_option("--dumps", o->dumps, "RDMP1 context dumps of one multi-parallel set, one per language")
      ->required()
      ->delimiter(',');
  sub->add_option("--target", o->target, "shared target language")->capture_default_str();
  sub->add_option("--pivot", o->pivot, "language left out of RTP sums (default: --target)");
  sub->add_option("--bleu", o->bleu, "BLEU table (TSV); enables RTP and the Spearman report");
  sub->add_option("--corpus", o->corpora, "lang=prefix training corpora; enables features and regression")
      ->delimiter(',');
  sub->add_option("--generated", o->generated, "lang=file translations of the shared test set")->delimiter(',');
  sub->add_option("--vocab", o->vocab, "token vocabulary file");
  sub->add_option("--distances", o->distances, "linguistic distance TSV");
  sub->add_option("--out-dir", o->out_dir, "report directory")->required();
  sub->add_option("--xsim-weighting", o->weighting, "mean or inverse-step")->capture_default_str();
  sub->add_option("--ngram", o->ngram, "largest n-gram order of the target overlap feature")->capture_default_str();
  sub->add_flag("--macro", o->macro, "average MAE over folds instead of over pairs");
  sub->add_flag("--no-noise-baseline", o->no_noise, "skip the uniform-noise baseline");
  sub->add_option("--n-shuffles", o->n_shuffles, "permutations per feature")->capture_default_str();
  sub->add_option("--seed", o->seed, "permutation and noise seed")->capture_default_str();
  sub->add_option("--format", o->format, "tsv, json or both")->capture_default_str();
  cmds.back().run = [o](RunManifest& m) { run(*o, m); };
}

}  // namespace knnmt::cli
