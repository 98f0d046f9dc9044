#pragma once

#include <filesystem>
#include <string>

#include "kanheat/experiments.hpp"

namespace kanheat {

// Report files. Every writer is deterministic in its inputs and throws
// IoError naming the path it failed on.
//
//   case:      metrics.csv, formulas.txt, history_best.csv, prediction.svg,
//              kan/1.00/seed<k>/{history_adam.csv, history_finetune.csv,
//              predictions.csv, log.txt}
//   sparsity:  summary.csv, metrics.csv, sparsity.svg, warnings.txt,
//              <model>/<rate>/seed<k>/{history_train.csv, metrics.csv}
//   continual: summary.csv, metrics.csv, table.txt, failures.txt,
//              <model>/<rate>/seed<k>/matrix.csv
//   extreme:   summary.csv, metrics.csv, scatter.svg,
//              <model>/1.00/seed<k>/{history_train.csv, predictions.csv}
void emit_report(const CaseReport& report, const std::filesystem::path& dir);
void emit_report(const SparsityReport& report, const std::filesystem::path& dir);
void emit_report(const ContinualReport& report, const std::filesystem::path& dir);
void emit_report(const ExtremeReport& report, const std::filesystem::path& dir);

// Table-3 layout: one line per model and rate, "mean ± std" per
// (after task, evaluated task).
std::string continual_table(const ContinualReport& report);

std::string rate_dir(double rate);  // "0.25"

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace kanheat
