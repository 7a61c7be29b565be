#include "harbench/report.hpp"

#include "harbench/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace harbench {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorKind::Io, fmt::format("cannot write {}", path.string()));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<ExperimentResult> catalog_sorted(std::span<const ExperimentResult> results) {
    std::vector<ExperimentResult> out(results.begin(), results.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.combo < b.combo; });
    return out;
}

}  // namespace

std::vector<ReportRow> build_table(std::span<const ExperimentResult> results) {
    std::vector<ReportRow> rows;
    for (const auto& r : results) {
        rows.push_back({r.combo, r.name, fmt::format("{} ({})", r.name, r.combo), r.modality,
                        100.0 * r.mean_val_accuracy, 100.0 * r.std_val_accuracy, r.mean_epochs,
                        r.std_epochs, r.subsample});
    }
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.mean_accuracy_pct != b.mean_accuracy_pct) return a.mean_accuracy_pct > b.mean_accuracy_pct;
        return a.combo < b.combo;
    });
    return rows;
}

std::string render_table(std::span<const ExperimentResult> results) {
    const auto rows = build_table(results);
    std::size_t width = std::string_view("Input Data").size();
    bool subsampled = false;
    for (const auto& r : rows) {
        width = std::max(width, r.label.size() + (r.subsample > 1 ? 2 : 0));
        subsampled |= r.subsample > 1;
    }
    std::string out = fmt::format("{:<{}}  {:>12}  {:>11}  {:>10}  {:>10}\n", "Input Data", width,
                                  "val_accuracy", "val_acc_std", "epochs", "epochs_std");
    for (const auto& r : rows) {
        const std::string label = r.subsample > 1 ? r.label + " *" : r.label;
        out += fmt::format("{:<{}}  {:>12.2f}  {:>11.2f}  {:>10.2f}  {:>10.2f}\n", label, width,
                           r.mean_accuracy_pct, r.std_accuracy_pct, r.mean_epochs, r.std_epochs);
    }
    if (subsampled) out += "* trained and validated on a subsample of the windows\n";
    return out;
}

std::string render_csv(std::span<const ExperimentResult> results) {
    std::string out = "combo,name,modality,mean_val_acc,std_val_acc,mean_epochs,std_epochs\n";
    for (const auto& r : build_table(results)) {
        out += fmt::format("{},{},{},{:.2f},{:.2f},{:.2f},{:.2f}\n", r.combo, csv_field(r.name), r.modality,
                           r.mean_accuracy_pct, r.std_accuracy_pct, r.mean_epochs, r.std_epochs);
    }
    return out;
}

nlohmann::json to_json(const ExperimentResult& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds) {
        nlohmann::json train_loss = nlohmann::json::array();
        nlohmann::json val_loss = nlohmann::json::array();
        nlohmann::json val_acc = nlohmann::json::array();
        for (const auto& e : f.curve) {
            train_loss.push_back(e.train_loss);
            val_loss.push_back(e.val_loss);
            val_acc.push_back(e.val_accuracy);
        }
        folds.push_back({{"fold_index", f.fold_index},
                         {"val_subject", f.val_subject},
                         {"seed", f.seed},
                         {"best_val_accuracy", f.best_val_accuracy},
                         {"best_val_loss", f.best_val_loss},
                         {"best_epoch", f.best_epoch},
                         {"epochs_trained", f.epochs_trained},
                         {"train_windows", f.train_windows},
                         {"val_windows", f.val_windows},
                         {"curve", {{"train_loss", train_loss}, {"val_loss", val_loss}, {"val_accuracy", val_acc}}}});
    }
    return {{"combo", std::string(1, r.combo)},
            {"name", r.name},
            {"modality", r.modality},
            {"subsample", r.subsample},
            {"mean_val_accuracy", r.mean_val_accuracy},
            {"std_val_accuracy", r.std_val_accuracy},
            {"mean_epochs", r.mean_epochs},
            {"std_epochs", r.std_epochs},
            {"folds", folds}};
}

ExperimentResult experiment_from_json(const nlohmann::json& j) {
    try {
        ExperimentResult r;
        const auto combo = j.at("combo").get<std::string>();
        if (combo.size() != 1) throw Error(ErrorKind::BadCache, "summary: bad combo field");
        r.combo = combo[0];
        r.name = j.at("name").get<std::string>();
        r.modality = j.at("modality").get<std::size_t>();
        r.subsample = j.at("subsample").get<std::size_t>();
        r.mean_val_accuracy = j.at("mean_val_accuracy").get<double>();
        r.std_val_accuracy = j.at("std_val_accuracy").get<double>();
        r.mean_epochs = j.at("mean_epochs").get<double>();
        r.std_epochs = j.at("std_epochs").get<double>();
        for (const auto& jf : j.at("folds")) {
            FoldResult f;
            f.fold_index = jf.at("fold_index").get<std::size_t>();
            f.val_subject = jf.at("val_subject").get<int>();
            f.seed = jf.at("seed").get<std::uint64_t>();
            f.best_val_accuracy = jf.at("best_val_accuracy").get<double>();
            f.best_val_loss = jf.at("best_val_loss").get<double>();
            f.best_epoch = jf.at("best_epoch").get<std::size_t>();
            f.epochs_trained = jf.at("epochs_trained").get<std::size_t>();
            f.train_windows = jf.at("train_windows").get<std::size_t>();
            f.val_windows = jf.at("val_windows").get<std::size_t>();
            const auto& c = jf.at("curve");
            const auto tl = c.at("train_loss").get<std::vector<double>>();
            const auto vl = c.at("val_loss").get<std::vector<double>>();
            const auto va = c.at("val_accuracy").get<std::vector<double>>();
            if (tl.size() != vl.size() || vl.size() != va.size()) {
                throw Error(ErrorKind::BadCache, "summary: curve columns differ in length");
            }
            for (std::size_t i = 0; i < tl.size(); ++i) f.curve.push_back({tl[i], vl[i], va[i]});
            r.folds.push_back(std::move(f));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadCache, fmt::format("summary: {}", e.what()));
    }
}

nlohmann::json summary_json(std::span<const ExperimentResult> results) {
    const auto sorted = catalog_sorted(results);
    nlohmann::json combos = nlohmann::json::array();
    nlohmann::json fold_acc = nlohmann::json::object();
    nlohmann::json loss_minima = nlohmann::json::object();
    nlohmann::json epochs = nlohmann::json::object();
    for (const auto& r : sorted) {
        combos.push_back(to_json(r));
        const std::string key(1, r.combo);
        fold_acc[key] = nlohmann::json::array();
        loss_minima[key] = nlohmann::json::array();
        epochs[key] = nlohmann::json::array();
        for (const auto& f : r.folds) {
            fold_acc[key].push_back(f.best_val_accuracy);
            loss_minima[key].push_back(f.best_val_loss);
            epochs[key].push_back(f.epochs_trained);
        }
    }
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : modality_group_stats(sorted)) {
        groups.push_back({{"modality", g.modality},
                          {"combinations", g.combinations},
                          {"mean_accuracy", g.mean_accuracy},
                          {"min", g.min},
                          {"q1", g.q1},
                          {"median", g.median},
                          {"q3", g.q3},
                          {"max", g.max}});
    }
    return {{"combinations", combos},
            {"fold_accuracies", fold_acc},
            {"loss_minima", loss_minima},
            {"epochs", epochs},
            {"modality_groups", groups}};
}

void emit_report(std::span<const ExperimentResult> results, const std::filesystem::path& out_dir) {
    if (results.empty()) throw Error(ErrorKind::EmptyInput, "no results to report");
    write_file(out_dir / "results.csv", render_csv(results));
    write_file(out_dir / "table.txt", render_table(results));
    write_file(out_dir / "summary.json", summary_json(results).dump(2) + "\n");
}

std::filesystem::path summary_path(const std::filesystem::path& out_dir, char combo) {
    return out_dir / "summaries" / (std::string(1, combo) + ".json");
}

void write_summary(const ExperimentResult& result, const std::filesystem::path& out_dir) {
    write_file(summary_path(out_dir, result.combo), to_json(result).dump(2) + "\n");
}

std::vector<ExperimentResult> load_summaries(const std::filesystem::path& out_dir) {
    std::vector<ExperimentResult> out;
    for (const auto& combo : combination_catalog()) {
        const auto path = summary_path(out_dir, combo.id);
        if (!std::filesystem::exists(path)) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::BadCache, fmt::format("{}: {}", path.string(), e.what()));
        }
        out.push_back(experiment_from_json(j));
    }
    return out;
}

}  // namespace harbench
