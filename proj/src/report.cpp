#include "kanheat/report.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kanheat/errors.hpp"
#include "kanheat/format.hpp"
#include "kanheat/svg.hpp"

namespace kanheat {

namespace fs = std::filesystem;

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

std::string rate_dir(double rate) { return format_fixed(rate, 2); }

namespace {

std::string history_text(const TrainHistory& h) {
  std::ostringstream os;
  write_history_csv(h, os);
  return os.str();
}

std::string metrics_fields(const Metrics& m) {
  return format_real(m.r2) + ',' + format_real(m.mape) + ',' + format_real(m.smape) + ',' + format_real(m.pearson) +
         ',' + format_real(m.mse);
}

constexpr const char* kNanMetrics = "nan,nan,nan,nan,nan";

std::string predictions_text(const std::vector<double>& truth, const std::vector<double>& pred) {
  std::string s = "truth,prediction\n";
  for (std::size_t i = 0; i < truth.size() && i < pred.size(); ++i) {
    s += format_real(truth[i]) + ',' + format_real(pred[i]) + '\n';
  }
  return s;
}

std::string seed_dir(std::size_t k) { return "seed" + std::to_string(k); }

std::string pm(double mean, double sd) { return format_fixed(mean, 2) + " ± " + format_fixed(sd, 2); }

}  // namespace

// ---------------------------------------------------------------------------
// Cases

void emit_report(const CaseReport& report, const fs::path& dir) {
  std::string metrics = "seed,status,r2,mape,smape,pearson,mse,network_r2,complexity,partial,best\n";
  std::string formulas;
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const SeedRun& r = report.runs[i];
    const bool best = static_cast<int>(i) == report.best;
    metrics += std::to_string(r.seed) + ',' + (r.ok ? "ok" : "failed") + ',' +
               (r.ok ? metrics_fields(r.metrics) : kNanMetrics) + ',' +
               (r.ok ? format_real(r.network_r2) : "nan") + ',' + std::to_string(r.complexity) + ',' +
               (r.partial ? "1" : "0") + ',' + (best ? "1" : "0") + '\n';

    formulas += "# seed " + std::to_string(r.seed) + (best ? " (best)" : "") + '\n';
    if (!r.ok) {
      formulas += "error: " + r.error + "\n\n";
    } else {
      formulas += "r2: " + format_real(r.metrics.r2) + '\n';
      formulas += "complexity: " + std::to_string(r.complexity) + (r.partial ? " (partial)" : "") + '\n';
      formulas += "infix: " + r.formula + '\n';
      formulas += "sexpr: " + r.sexpr + '\n';
      if (r.linear) {
        formulas += "linear:";
        for (double c : r.linear->coefs) formulas += ' ' + format_real(c);
        formulas += " intercept " + format_real(r.linear->intercept) + '\n';
      }
      if (!r.gp_formula.empty()) formulas += "gp: " + r.gp_formula + " r2 " + format_real(r.gp_r2) + '\n';
      formulas += '\n';
    }

    const fs::path run_dir = dir / "kan" / rate_dir(1.0) / seed_dir(i);
    write_text_file(run_dir / "history_adam.csv", history_text(r.history));
    write_text_file(run_dir / "history_finetune.csv", history_text(r.finetune));
    write_text_file(run_dir / "predictions.csv", predictions_text(r.truth, r.prediction));
    std::string log;
    for (const auto& l : r.log) log += l + '\n';
    if (!r.ok) log += "error: " + r.error + '\n';
    write_text_file(run_dir / "log.txt", log);
  }
  write_text_file(dir / "metrics.csv", metrics);
  write_text_file(dir / "formulas.txt", formulas);

  const SeedRun* best = report.best_run();
  write_text_file(dir / "history_best.csv", history_text(best ? best->history : TrainHistory{}));
  if (best) {
    std::vector<std::size_t> order(best->truth.size());
    std::iota(order.begin(), order.end(), 0);
    const bool by_input = !best->axis.empty();
    if (by_input) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return best->axis[a] < best->axis[b]; });
    } else {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return best->truth[a] < best->truth[b]; });
    }
    PlotSeries truth{"analytical", {}, {}}, kan{"KAN formula", {}, {}};
    for (std::size_t k = 0; k < order.size(); ++k) {
      const double x = by_input ? best->axis[order[k]] : static_cast<double>(k);
      truth.x.push_back(x);
      truth.y.push_back(best->truth[order[k]]);
      kan.x.push_back(x);
      kan.y.push_back(best->prediction[order[k]]);
    }
    const PlotLabels labels{"Case " + report.id + ": test split", by_input ? best->axis_label : "test sample (by truth)",
                            "target"};
    write_text_file(dir / "prediction.svg", svg_line_chart(labels, {truth, kan}));
  }
}

// ---------------------------------------------------------------------------
// Sparsity

void emit_report(const SparsityReport& report, const fs::path& dir) {
  std::string summary = "model,rate,n,skipped,mean_r2,std_r2\n";
  std::string metrics = "model,rate,seed,status,r2,mape,smape,pearson,mse\n";
  std::vector<BarGroup> groups;
  for (const SparsityCell& cell : report.cells) {
    const std::string model = model_name(cell.model);
    summary += model + ',' + rate_dir(cell.rate) + ',' + std::to_string(cell.r2.n) + ',' + (cell.skipped ? "1" : "0") +
               ',' + format_real(cell.r2.mean) + ',' + format_real(cell.r2.std) + '\n';
    if (groups.empty() || groups.back().label != model) groups.push_back({model, {}, {}});
    groups.back().values.push_back(cell.r2.mean);
    groups.back().errors.push_back(cell.r2.std);
    for (std::size_t k = 0; k < cell.runs.size(); ++k) {
      const ModelOutcome& o = cell.runs[k];
      metrics += model + ',' + rate_dir(cell.rate) + ',' + std::to_string(k) + ',' + (o.ok ? "ok" : "failed") + ',' +
                 (o.ok ? metrics_fields(o.metrics) : kNanMetrics) + '\n';
      const fs::path run_dir = dir / model / rate_dir(cell.rate) / seed_dir(k);
      write_text_file(run_dir / "history_train.csv", history_text(o.history));
      write_text_file(run_dir / "metrics.csv", "status,r2,mape,smape,pearson,mse\n" + std::string(o.ok ? "ok," : "failed,") +
                                                   (o.ok ? metrics_fields(o.metrics) : kNanMetrics) + '\n');
    }
  }
  write_text_file(dir / "summary.csv", summary);
  write_text_file(dir / "metrics.csv", metrics);
  std::string warnings;
  for (const auto& w : report.warnings) warnings += w + '\n';
  write_text_file(dir / "warnings.txt", warnings);
  std::vector<std::string> categories;
  for (double r : report.rates) categories.push_back(format_fixed(100.0 * r, 0) + "%");
  write_text_file(dir / "sparsity.svg",
                  svg_bar_chart({"Test R2 by training data availability", "training data", "R2"}, categories, groups));
}

// ---------------------------------------------------------------------------
// Continual

std::string continual_table(const ContinualReport& report) {
  std::string s = "model rate | after task 1: T1 T2 T3 | after task 2: T1 T2 T3 | after task 3: T1 T2 T3 | n\n";
  for (const ContinualCell& cell : report.cells) {
    s += model_name(cell.model) + ' ' + format_fixed(100.0 * cell.rate, 0) + "%";
    for (std::size_t t = 0; t < 3; ++t) {
      s += " |";
      for (std::size_t e = 0; e < 3; ++e) s += ' ' + pm(cell.mean[t][e], cell.std[t][e]);
    }
    s += " | " + std::to_string(cell.n) + '\n';
  }
  return s;
}

void emit_report(const ContinualReport& report, const fs::path& dir) {
  std::string summary = "model,rate,after_task,eval_task,n,mean_r2,std_r2\n";
  std::string metrics = "model,rate,seed,after_task,eval_task,r2\n";
  std::string failures;
  for (const ContinualCell& cell : report.cells) {
    const std::string model = model_name(cell.model);
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t e = 0; e < 3; ++e) {
        summary += model + ',' + rate_dir(cell.rate) + ',' + std::to_string(t + 1) + ',' + std::to_string(e + 1) + ',' +
                   std::to_string(cell.n) + ',' + format_real(cell.mean[t][e]) + ',' + format_real(cell.std[t][e]) + '\n';
      }
    }
    for (std::size_t i = 0; i < cell.matrices.size(); ++i) {
      const TaskMatrix& m = cell.matrices[i];
      std::string matrix = "after_task,T1,T2,T3\n";
      for (std::size_t t = 0; t < 3; ++t) {
        matrix += std::to_string(t + 1);
        for (std::size_t e = 0; e < 3; ++e) {
          matrix += ',' + format_real(m[t][e]);
          metrics += model + ',' + rate_dir(cell.rate) + ',' + std::to_string(cell.seeds[i]) + ',' + std::to_string(t + 1) +
                     ',' + std::to_string(e + 1) + ',' + format_real(m[t][e]) + '\n';
        }
        matrix += '\n';
      }
      write_text_file(dir / model / rate_dir(cell.rate) / seed_dir(cell.seeds[i]) / "matrix.csv", matrix);
    }
    for (const auto& f : cell.failures) failures += model + ' ' + rate_dir(cell.rate) + ' ' + f + '\n';
  }
  write_text_file(dir / "summary.csv", summary);
  write_text_file(dir / "metrics.csv", metrics);
  write_text_file(dir / "table.txt", continual_table(report));
  write_text_file(dir / "failures.txt", failures);
}

// ---------------------------------------------------------------------------
// Extreme values

void emit_report(const ExtremeReport& report, const fs::path& dir) {
  std::string summary = "model,threshold,n,count,mean_r2,std_r2,mean_signed_error,std_signed_error\n";
  std::string metrics = "model,seed,threshold,status,count,r2,mean_signed_error\n";
  std::vector<PlotSeries> scatter;
  for (const ExtremeModel& em : report.models) {
    const std::string model = model_name(em.model);
    for (std::size_t k = 0; k < em.runs.size(); ++k) {
      const ModelOutcome& o = em.runs[k];
      if (!o.ok) {
        metrics += model + ',' + std::to_string(k) + ",all,failed,0,nan,nan\n";
      }
      for (const ExtremeRow& row : em.rows[k]) {
        metrics += model + ',' + std::to_string(k) + ',' + format_fixed(row.threshold, 2) + ',' +
                   (row.skipped ? "skipped" : "ok") + ',' + std::to_string(row.count) + ',' + format_real(row.r2) + ',' +
                   format_real(row.mean_signed_error) + '\n';
      }
      const fs::path run_dir = dir / model / rate_dir(1.0) / seed_dir(k);
      write_text_file(run_dir / "history_train.csv", history_text(o.history));
      write_text_file(run_dir / "predictions.csv", predictions_text(o.truth, o.prediction));
    }
    for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
      std::vector<double> r2s, bias;
      std::size_t count = 0;
      for (const auto& rows : em.rows) {
        if (t >= rows.size() || rows[t].skipped) continue;
        count = rows[t].count;
        if (std::isfinite(rows[t].r2)) r2s.push_back(rows[t].r2);
        bias.push_back(rows[t].mean_signed_error);
      }
      const Aggregate a = aggregate(r2s);
      const Aggregate b = aggregate(bias);
      summary += model + ',' + format_fixed(report.thresholds[t], 2) + ',' + std::to_string(b.n) + ',' +
                 std::to_string(count) + ',' + format_real(a.mean) + ',' + format_real(a.std) + ',' +
                 format_real(b.mean) + ',' + format_real(b.std) + '\n';
    }
    if (!em.runs.empty() && em.runs.front().ok) {
      scatter.push_back({model, em.runs.front().truth, em.runs.front().prediction});
    }
  }
  write_text_file(dir / "summary.csv", summary);
  write_text_file(dir / "metrics.csv", metrics);
  write_text_file(dir / "scatter.svg", svg_scatter({"Predicted vs observed heat flow", "observed", "predicted"}, scatter));
}

}  // namespace kanheat
