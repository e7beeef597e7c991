#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "celo/record.hpp"

namespace celo {

enum class Criterion { FinalLoss, Speedup };
std::string to_string(Criterion criterion);

// M tasks x N trials of nonnegative normalized scores. Divergence maps
// to 0, never to NaN.
struct ScoreMatrix {
  std::string optimizer_id;
  std::vector<std::string> task_ids;  // M
  int64_t trials = 0;                 // N
  std::vector<double> scores;         // row-major M x N

  int64_t tasks() const { return static_cast<int64_t>(task_ids.size()); }
  double at(int64_t task, int64_t trial) const { return scores[static_cast<size_t>(task * trials + trial)]; }
};

// records[task][trial] scored against the per-task best Adam record:
// s = final_adam / max(final_opt, 1e-12).
ScoreMatrix loss_scores(const std::vector<std::vector<RunRecord>>& records,
                        const std::vector<RunRecord>& adam_best);

// s = T / T_opt where T_opt is the first step whose smoothed loss reaches
// the best Adam run's smoothed final loss; 0 when never reached.
ScoreMatrix speedup_scores(const std::vector<std::vector<RunRecord>>& records,
                           const std::vector<RunRecord>& adam_best);

// Pool all M*N entries, drop floor(0.25*MN) from each end, mean the rest.
double iqm(const ScoreMatrix& matrix);
// 1 - mean(min(s, 1)) over all pooled entries.
double optimality_gap(const ScoreMatrix& matrix);
// Median over per-task mean scores.
double median_score(const ScoreMatrix& matrix);

struct MetricReport {
  std::string optimizer_id;
  Criterion criterion = Criterion::FinalLoss;
  double iqm = 0.0;
  double median = 0.0;
  double optimality_gap = 0.0;
  std::vector<double> per_task_means;
};

MetricReport build_report(const ScoreMatrix& matrix, Criterion criterion);

// CSV rows: optimizer,criterion,iqm,median,og.
void write_report_csv(const std::string& path, const std::vector<MetricReport>& reports);
// Raw matrix export: task,trial,score.
void write_score_matrix_csv(const std::string& path, const ScoreMatrix& matrix);

}  // namespace celo
