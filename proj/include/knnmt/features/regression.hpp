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

#pragma once

// Predicting xsim from pair features: ordinary least squares with an
// intercept, evaluated leave-one-language-out, with permutation importance.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knnmt/features/table.hpp"
#include "knnmt/linalg.hpp"
#include "knnmt/random.hpp"

namespace knnmt {

struct OlsModel {
  std::vector<double> coef;
  double intercept = 0.0;
  double ridge = 0.0;  // > 0 when the design was singular and the fallback was used

  double predict(std::span<const double> x) const {
    double y = intercept;
    for (size_t j = 0; j < coef.size(); ++j) y += coef[j] * x[j];
    return y;
  }

  std::vector<double> predict(const Eigen::MatrixXd& x) const {
    std::vector<double> out(static_cast<size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double y = intercept;
      for (size_t j = 0; j < coef.size(); ++j) y += coef[j] * x(i, static_cast<Eigen::Index>(j));
      out[static_cast<size_t>(i)] = y;
    }
    return out;
  }
};

/// Least squares on centred data, so the intercept is never penalised. A
/// singular design (see ldlt_singular) is retried with ridge
/// 1e-6 * trace(Xc^T Xc) / p when `allow_ridge` is set.
inline OlsModel fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool allow_ridge = true) {
  require(x.rows() == y.size(), ErrorCode::shape_mismatch, "design and target differ in rows");
  require(x.rows() >= 1, ErrorCode::insufficient_data, "cannot fit on zero rows");
  const Eigen::Index p = x.cols();
  OlsModel m;
  m.coef.assign(static_cast<size_t>(p), 0.0);
  Eigen::RowVectorXd mean_x = x.colwise().mean();
  const double mean_y = y.mean();
  if (p == 0) {
    m.intercept = mean_y;
    return m;
  }
  Eigen::MatrixXd xc = x.rowwise() - mean_x;
  Eigen::VectorXd yc = y.array() - mean_y;
  Eigen::MatrixXd gram = xc.transpose() * xc;
  Eigen::VectorXd rhs = xc.transpose() * yc;

  auto solve = [&](double ridge) -> std::optional<Eigen::VectorXd> {
    Eigen::MatrixXd g = gram;
    g.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    if (ldlt_singular(ldlt, g)) return std::nullopt;
    return ldlt.solve(rhs);
  };

  auto beta = solve(0.0);
  if (!beta) {
    require(allow_ridge, ErrorCode::singular_system, "feature design is singular");
    const double trace = gram.trace();
    if (trace == 0.0) {
      // every column constant: the intercept alone fits
      m.intercept = mean_y;
      m.ridge = 0.0;
      return m;
    }
    m.ridge = 1e-6 * trace / static_cast<double>(p);
    beta = solve(m.ridge);
    require(beta.has_value(), ErrorCode::singular_system, "feature design is singular even with ridge");
  }
  for (Eigen::Index j = 0; j < p; ++j) m.coef[static_cast<size_t>(j)] = (*beta)(j);
  m.intercept = mean_y - mean_x.dot(*beta);
  return m;
}

inline double mean_absolute_error(std::span<const double> pred, std::span<const double> truth) {
  require(pred.size() == truth.size() && !pred.empty(), ErrorCode::empty_input, "MAE over an empty set");
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

struct FeatureImportance {
  std::string name;
  double mean = 0.0;    // mean MAE increase over shuffles
  double stddev = 0.0;  // population standard deviation over shuffles
  std::vector<double> drops;
};

/// Core of permutation importance: `score(x)` returns the MAE of the model
/// under evaluation on design `x`; each column is permuted `n_shuffles` times
/// with a Fisher-Yates shuffle seeded from (seed, column).
inline std::vector<FeatureImportance> permutation_importance(const std::function<double(const Eigen::MatrixXd&)>& score,
                                                             const Eigen::MatrixXd& x,
                                                             const std::vector<std::string>& names, size_t n_shuffles,
                                                             uint64_t seed) {
  require(n_shuffles >= 1, ErrorCode::invalid_argument, "n_shuffles must be >= 1");
  require(x.rows() >= 1, ErrorCode::empty_input, "permutation importance needs validation rows");
  require(names.size() == static_cast<size_t>(x.cols()), ErrorCode::shape_mismatch, "one name per column expected");
  const double base = score(x);
  std::vector<FeatureImportance> out;
  std::vector<size_t> perm(static_cast<size_t>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    FeatureImportance imp{names[static_cast<size_t>(j)], 0.0, 0.0, {}};
    Rng rng(hash_combine(seed, static_cast<uint64_t>(j)));
    Eigen::MatrixXd shuffled = x;
    for (size_t s = 0; s < n_shuffles; ++s) {
      for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      rng.shuffle(std::span<size_t>(perm));
      for (size_t i = 0; i < perm.size(); ++i)
        shuffled(static_cast<Eigen::Index>(i), j) = x(static_cast<Eigen::Index>(perm[i]), j);
      imp.drops.push_back(score(shuffled) - base);
    }
    for (double d : imp.drops) imp.mean += d;
    imp.mean /= static_cast<double>(n_shuffles);
    for (double d : imp.drops) imp.stddev += (d - imp.mean) * (d - imp.mean);
    imp.stddev = std::sqrt(imp.stddev / static_cast<double>(n_shuffles));
    out.push_back(std::move(imp));
  }
  return out;
}

/// Permutation importance of one fitted model on a validation set.
inline std::vector<FeatureImportance> permutation_importance(const OlsModel& model, const Eigen::MatrixXd& x,
                                                             const Eigen::VectorXd& y,
                                                             const std::vector<std::string>& names, size_t n_shuffles,
                                                             uint64_t seed) {
  std::vector<double> truth(y.data(), y.data() + y.size());
  return permutation_importance([&](const Eigen::MatrixXd& m) { return mean_absolute_error(model.predict(m), truth); },
                                x, names, n_shuffles, seed);
}

struct RegressionOptions {
  bool macro_average = false;  // mean of fold MAEs instead of the mean over all held-out predictions
  bool allow_ridge_fallback = true;
  size_t n_shuffles = 50;
  uint64_t seed = 1;
  bool noise_baseline = true;  // also evaluate the protocol on uniform-noise features
};

struct FoldResult {
  LanguageTag held_out;
  size_t n_test = 0;
  double mae = 0.0;
};

struct RegressionReport {
  std::vector<std::string> feature_names;
  std::vector<FoldResult> folds;
  double mean_mae = 0.0;
  bool macro_average = false;
  std::vector<double> coefficients;  // full-data fit
  double intercept = 0.0;
  double ridge = 0.0;
  std::vector<FeatureImportance> importances;
  std::optional<double> noise_mae;
};

namespace detail {

/// Fold models for a leave-one-language-out split of the table rows.
struct LooPlan {
  std::vector<LanguageTag> languages;
  std::vector<std::vector<size_t>> test_rows;
  std::vector<OlsModel> models;
};

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

inline LooPlan plan_folds(const FeatureTable& t, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          bool allow_ridge) {
  LooPlan plan;
  plan.languages = t.languages();
  require(plan.languages.size() >= 3, ErrorCode::insufficient_data,
          "leave-one-language-out needs at least 3 languages, got " + std::to_string(plan.languages.size()));
  for (const auto& held : plan.languages) {
    std::vector<size_t> train, test;
    for (size_t i = 0; i < t.rows.size(); ++i)
      (t.rows[i].lang1 == held || t.rows[i].lang2 == held ? test : train).push_back(i);
    require(!train.empty(), ErrorCode::insufficient_data, "holding out " + held.code() + " leaves no training pairs");
    Eigen::VectorXd ytrain(static_cast<Eigen::Index>(train.size()));
    for (size_t i = 0; i < train.size(); ++i) ytrain(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(train[i]));
    plan.models.push_back(fit_ols(select_rows(x, train), ytrain, allow_ridge));
    plan.test_rows.push_back(std::move(test));
  }
  return plan;
}

/// Held-out MAE of the plan on design `x`; fold MAEs go to `folds` if given.
inline double plan_mae(const LooPlan& plan, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool macro,
                       std::vector<FoldResult>* folds = nullptr) {
  double abs_sum = 0.0, fold_sum = 0.0;
  size_t count = 0, used_folds = 0;
  std::vector<double> row(static_cast<size_t>(x.cols()));
  for (size_t f = 0; f < plan.models.size(); ++f) {
    const auto& rows = plan.test_rows[f];
    if (rows.empty()) continue;
    double fold_abs = 0.0;
    for (size_t r : rows) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<size_t>(j)] = x(static_cast<Eigen::Index>(r), j);
      fold_abs += std::abs(plan.models[f].predict(row) - y(static_cast<Eigen::Index>(r)));
    }
    abs_sum += fold_abs;
    count += rows.size();
    fold_sum += fold_abs / static_cast<double>(rows.size());
    ++used_folds;
    if (folds) folds->push_back({plan.languages[f], rows.size(), fold_abs / static_cast<double>(rows.size())});
  }
  require(count > 0, ErrorCode::empty_input, "no held-out pairs");
  return macro ? fold_sum / static_cast<double>(used_folds) : abs_sum / static_cast<double>(count);
}

inline Eigen::MatrixXd design(const FeatureTable& t) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.n_features()));
  for (size_t i = 0; i < t.rows.size(); ++i) {
    require(t.rows[i].features.size() == t.n_features(), ErrorCode::shape_mismatch,
            "row " + std::to_string(i) + " has " + std::to_string(t.rows[i].features.size()) + " features");
    for (size_t j = 0; j < t.n_features(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i].features[j];
  }
  return x;
}

}  // namespace detail

/// Leave-one-language-out evaluation. Each language's pairs form one test
/// fold; the model of that fold never sees a pair involving the language.
/// Permutation importance permutes a column over the whole table and
/// re-scores the fold models on their held-out pairs.
inline RegressionReport predict_xsim_loo(const FeatureTable& table, const RegressionOptions& opts = {}) {
  require(!table.rows.empty(), ErrorCode::empty_input, "empty feature table");
  const Eigen::MatrixXd x = detail::design(table);
  Eigen::VectorXd y(static_cast<Eigen::Index>(table.rows.size()));
  for (size_t i = 0; i < table.rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = table.rows[i].xsim;

  RegressionReport rep;
  rep.feature_names = table.names;
  rep.macro_average = opts.macro_average;
  auto plan = detail::plan_folds(table, x, y, opts.allow_ridge_fallback);
  rep.mean_mae = detail::plan_mae(plan, x, y, opts.macro_average, &rep.folds);

  auto full = fit_ols(x, y, opts.allow_ridge_fallback);
  rep.coefficients = full.coef;
  rep.intercept = full.intercept;
  rep.ridge = full.ridge;

  if (opts.n_shuffles > 0 && table.n_features() > 0)
    rep.importances = permutation_importance(
        [&](const Eigen::MatrixXd& m) { return detail::plan_mae(plan, m, y, opts.macro_average); }, x, table.names,
        opts.n_shuffles, opts.seed);

  if (opts.noise_baseline) {
    Rng rng(hash_combine(opts.seed, 0x4E015Eull));
    Eigen::MatrixXd noise(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.uniform();
    auto noise_plan = detail::plan_folds(table, noise, y, true);
    rep.noise_mae = detail::plan_mae(noise_plan, noise, y, opts.macro_average);
  }
  return rep;
}

}  // namespace knnmt
