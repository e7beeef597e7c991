#include "celo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "celo/error.hpp"
#include "celo/format.hpp"

namespace celo {

std::string to_string(Criterion criterion) {
  return criterion == Criterion::FinalLoss ? "final_loss" : "speedup";
}

namespace {

constexpr double kDenomGuard = 1e-12;

void check_baseline(const std::vector<std::vector<RunRecord>>& records,
                    const std::vector<RunRecord>& adam_best) {
  CELO_CHECK(!records.empty(), "no records to score");
  CELO_CHECK(records.size() == adam_best.size(),
             "no valid baseline: need one best Adam record per task");
  for (const RunRecord& base : adam_best) {
    if (!std::isfinite(final_loss(base))) {
      throw Error("no valid baseline: best Adam run for task " + base.task_id +
                  " is not finite");
    }
  }
}

}  // namespace

ScoreMatrix loss_scores(const std::vector<std::vector<RunRecord>>& records,
                        const std::vector<RunRecord>& adam_best) {
  check_baseline(records, adam_best);
  ScoreMatrix matrix;
  matrix.trials = static_cast<int64_t>(records[0].size());
  for (size_t m = 0; m < records.size(); ++m) {
    CELO_CHECK(static_cast<int64_t>(records[m].size()) == matrix.trials,
               "ragged trial counts");
    matrix.task_ids.push_back(adam_best[m].task_id);
    const double base = final_loss(adam_best[m]);
    for (const RunRecord& run : records[m]) {
      if (matrix.optimizer_id.empty()) matrix.optimizer_id = run.optimizer_id;
      const double fl = final_loss(run);
      const double score =
          std::isfinite(fl) ? base / std::max(fl, kDenomGuard) : 0.0;
      matrix.scores.push_back(score);
    }
  }
  return matrix;
}

ScoreMatrix speedup_scores(const std::vector<std::vector<RunRecord>>& records,
                           const std::vector<RunRecord>& adam_best) {
  check_baseline(records, adam_best);
  ScoreMatrix matrix;
  matrix.trials = static_cast<int64_t>(records[0].size());
  for (size_t m = 0; m < records.size(); ++m) {
    CELO_CHECK(static_cast<int64_t>(records[m].size()) == matrix.trials,
               "ragged trial counts");
    matrix.task_ids.push_back(adam_best[m].task_id);
    const double target = final_loss(adam_best[m]);
    const double horizon = static_cast<double>(adam_best[m].steps);
    for (const RunRecord& run : records[m]) {
      if (matrix.optimizer_id.empty()) matrix.optimizer_id = run.optimizer_id;
      double score = 0.0;
      if (!run.diverged) {
        const std::vector<double> smoothed = smooth(run.losses);
        for (size_t t = 0; t < smoothed.size(); ++t) {
          if (smoothed[t] <= target) {
            score = horizon / static_cast<double>(t + 1);
            break;
          }
        }
      }
      matrix.scores.push_back(score);
    }
  }
  return matrix;
}

double iqm(const ScoreMatrix& matrix) {
  std::vector<double> pooled = matrix.scores;
  CELO_CHECK(pooled.size() >= 4, "iqm needs at least 4 pooled scores");
  std::sort(pooled.begin(), pooled.end());
  const size_t drop = pooled.size() / 4;
  double acc = 0.0;
  for (size_t i = drop; i < pooled.size() - drop; ++i) acc += pooled[i];
  return acc / static_cast<double>(pooled.size() - 2 * drop);
}

double optimality_gap(const ScoreMatrix& matrix) {
  CELO_CHECK(!matrix.scores.empty(), "optimality_gap needs scores");
  double acc = 0.0;
  for (double s : matrix.scores) acc += std::min(s, 1.0);
  return 1.0 - acc / static_cast<double>(matrix.scores.size());
}

double median_score(const ScoreMatrix& matrix) {
  CELO_CHECK(!matrix.scores.empty() && matrix.tasks() > 0, "median_score needs scores");
  std::vector<double> means;
  means.reserve(static_cast<size_t>(matrix.tasks()));
  for (int64_t m = 0; m < matrix.tasks(); ++m) {
    double acc = 0.0;
    for (int64_t n = 0; n < matrix.trials; ++n) acc += matrix.at(m, n);
    means.push_back(acc / static_cast<double>(matrix.trials));
  }
  std::sort(means.begin(), means.end());
  const size_t mid = means.size() / 2;
  if (means.size() % 2 == 1) return means[mid];
  return 0.5 * (means[mid - 1] + means[mid]);
}

MetricReport build_report(const ScoreMatrix& matrix, Criterion criterion) {
  MetricReport report;
  report.optimizer_id = matrix.optimizer_id;
  report.criterion = criterion;
  report.iqm = iqm(matrix);
  report.median = median_score(matrix);
  report.optimality_gap = celo::optimality_gap(matrix);
  for (int64_t m = 0; m < matrix.tasks(); ++m) {
    double acc = 0.0;
    for (int64_t n = 0; n < matrix.trials; ++n) acc += matrix.at(m, n);
    report.per_task_means.push_back(acc / static_cast<double>(matrix.trials));
  }
  return report;
}

void write_report_csv(const std::string& path, const std::vector<MetricReport>& reports) {
  std::ofstream out(path);
  CELO_CHECK(static_cast<bool>(out), "cannot open " + path);
  out << "optimizer,criterion,iqm,median,og\n";
  for (const MetricReport& r : reports) {
    out << r.optimizer_id << ',' << to_string(r.criterion) << ','
        << format_double(r.iqm) << ',' << format_double(r.median) << ','
        << format_double(r.optimality_gap) << '\n';
  }
  CELO_CHECK(static_cast<bool>(out), "write failed: " + path);
}

void write_score_matrix_csv(const std::string& path, const ScoreMatrix& matrix) {
  std::ofstream out(path);
  CELO_CHECK(static_cast<bool>(out), "cannot open " + path);
  out << "task,trial,score\n";
  for (int64_t m = 0; m < matrix.tasks(); ++m) {
    for (int64_t n = 0; n < matrix.trials; ++n) {
      out << matrix.task_ids[static_cast<size_t>(m)] << ',' << n << ','
          << format_double(matrix.at(m, n)) << '\n';
    }
  }
  CELO_CHECK(static_cast<bool>(out), "write failed: " + path);
}

}  // namespace celo
