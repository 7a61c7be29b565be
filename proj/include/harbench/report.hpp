#pragma once

#include "harbench/experiment.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace harbench {

struct ReportRow {
    char combo = 'a';
    std::string name;
    std::string label;  // e.g. "Chest and Ankle IMU (l)"
    std::size_t modality = 0;
    double mean_accuracy_pct = 0.0;
    double std_accuracy_pct = 0.0;
    double mean_epochs = 0.0;
    double std_epochs = 0.0;
    std::size_t subsample = 1;
};

/// Rows sorted by mean accuracy descending, ties by combination letter.
std::vector<ReportRow> build_table(std::span<const ExperimentResult> results);

/// Aligned plain-text table, two decimals.
std::string render_table(std::span<const ExperimentResult> results);

/// combo,name,modality,mean_val_acc,std_val_acc,mean_epochs,std_epochs
std::string render_csv(std::span<const ExperimentResult> results);

nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult experiment_from_json(const nlohmann::json& j);

/// Full structured summary: per-fold results, loss minima, modality groups.
nlohmann::json summary_json(std::span<const ExperimentResult> results);

/// Writes results.csv, table.txt and summary.json into `out_dir`.
/// Throws Error{Io}.
void emit_report(std::span<const ExperimentResult> results, const std::filesystem::path& out_dir);

/// Per-combination summary file, `<out_dir>/summaries/<letter>.json`.
std::filesystem::path summary_path(const std::filesystem::path& out_dir, char combo);
void write_summary(const ExperimentResult& result, const std::filesystem::path& out_dir);

/// Reads every stored per-combination summary, in catalog order.
std::vector<ExperimentResult> load_summaries(const std::filesystem::path& out_dir);

}  // namespace harbench
