// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//   harbench_acceptance            criteria 1-8 (5 skipped)
//   harbench_acceptance --full-data   criterion 5 on the real dataset
#include "harbench/cli.hpp"
#include "harbench/error.hpp"
#include "harbench/experiment.hpp"
#include "harbench/gradcheck.hpp"
#include "harbench/report.hpp"
#include "harbench/synthetic.hpp"

#include "../support.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <thread>

using namespace harbench;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    enum Status { Pass, Fail, Skip } status = Pass;
    std::string detail;
};

Verdict pass_if(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Verdict()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {Verdict::Fail, fmt::format("exception: {}", e.what())};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    static const char* names[] = {"PASS", "FAIL", "SKIP"};
    if (v.status == Verdict::Fail) ++failures;
    std::cout << fmt::format("{} {} {}: {} ({:.1f} s)", names[v.status], id, title, v.detail, seconds) << std::endl;
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<WindowSet> combo_windows(char id) {
    std::vector<WindowSet> out;
    for (const auto& s : testing::synthetic_full_windows()) out.push_back(select_channels(s, find_combination(id)));
    return out;
}

std::vector<int> subject_ids(const std::vector<WindowSet>& sets) {
    std::vector<int> ids;
    for (const auto& s : sets) ids.push_back(s.origins.front().subject_id);
    return ids;
}

Verdict gradient_check_criterion() {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::map<std::string, std::size_t> min_checked;
    std::size_t skipped = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
        nn::GradCheckOptions options;
        options.seed = seed;
        options.samples_per_layer = 256;
        const auto report = nn::gradient_check(options);
        worst = std::max(worst, report.max_rel_error);
        skipped += report.skipped_kinks;
        for (const auto& layer : report.layers) {
            auto [it, fresh] = min_checked.emplace(layer.layer, layer.checked);
            if (!fresh) it->second = std::min(it->second, layer.checked);
        }
    }
    const double seconds = elapsed_since(start);
    std::string per_layer;
    for (const auto& [layer, n] : min_checked) per_layer += fmt::format(" {}={}", layer, n);
    return pass_if(worst < 1e-4 && seconds < 120.0,
                   fmt::format("max rel error {:.2e} over 3 seeds, N=6, batch 4; checked per seed:{}; "
                               "out layer has {} parameters; {} kink coordinates skipped",
                               worst, per_layer, nn::kFc2Units * nn::kDefaultClasses + nn::kDefaultClasses, skipped));
}

Verdict initial_loss_criterion() {
    double worst = 0.0;
    std::size_t batches = 0;
    for (const auto& combo : combination_catalog()) {
        const auto sets = combo_windows(combo.id);
        const auto ids = subject_ids(sets);
        const std::vector<int> train(ids.begin(), ids.end() - 1);
        const auto fold = build_fold_datasets(sets, train, ids.back(), FitScope::TrainOnly);
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto params = nn::init_network(combo.modality(), nn::kDefaultClasses, seed);
            Rng rng(seed);
            std::vector<std::size_t> order(fold.train.size());
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(std::span<std::size_t>(order));
            for (std::size_t b = 0; b < 5; ++b) {
                std::vector<double> batch;
                std::vector<int> labels;
                for (std::size_t i = 0; i < 64; ++i) {
                    const auto w = fold.train.window(order[b * 64 + i]);
                    batch.insert(batch.end(), w.begin(), w.end());
                    labels.push_back(fold.train.labels[order[b * 64 + i]]);
                }
                const auto probs = nn::predict_proba(params, batch, 64);
                worst = std::max(worst, std::abs(nn::cross_entropy(probs, labels, 5) - std::log(5.0)));
                ++batches;
            }
        }
    }
    return pass_if(worst < 0.05, fmt::format("max |loss - ln 5| = {:.4f} over {} standardized batches of 64 "
                                             "(15 combinations x 3 seeds)", worst, batches));
}

Verdict param_count_criterion() {
    std::string detail;
    bool ok = true;
    const std::map<std::size_t, std::size_t> expected = {{6, 25733}, {9, 26069}, {12, 26405}, {18, 27077}};
    for (const auto& [n, want] : expected) {
        std::size_t enumerated = 0;
        for (const auto& t : nn::init_network(n, 5, 1).tensors()) enumerated += t.size();
        ok &= nn::param_count(n, 5) == enumerated && enumerated == want;
        detail += fmt::format("{}N={}: {}", detail.empty() ? "" : ", ", n, enumerated);
    }
    return pass_if(ok, detail);
}

Verdict overfit_criterion() {
    const auto start = std::chrono::steady_clock::now();
    // 40 windows per class drawn round-robin across subjects.
    const auto sets = combo_windows('d');
    WindowSet picked;
    picked.modality = sets.front().modality;
    std::array<std::size_t, kNumClasses> taken{};
    for (std::size_t i = 0; picked.size() < 200; ++i) {
        bool any = false;
        for (const auto& s : sets) {
            const std::size_t idx = i;
            if (idx >= s.size()) continue;
            any = true;
            const int y = s.labels[idx];
            if (taken[static_cast<std::size_t>(y)] >= 40) continue;
            ++taken[static_cast<std::size_t>(y)];
            picked.data.insert(picked.data.end(), s.window(idx).begin(), s.window(idx).end());
            picked.labels.push_back(y);
            picked.origins.push_back(s.origins[idx]);
            if (picked.size() == 200) break;
        }
        if (!any) break;
    }
    if (picked.size() != 200) return {Verdict::Fail, "could not assemble 200 balanced windows"};
    const auto train = apply_stats(fit_stats(picked, FitScope::TrainOnly), picked);

    nn::Hyperparams hyper;
    hyper.max_epochs = 300;
    hyper.patience = 300;
    std::size_t reached = 0;
    const auto trained = train_fold(train, train, hyper, 42, [&](std::size_t epoch, const EpochStats& s) {
        if (reached == 0 && s.val_accuracy >= 0.99) reached = epoch;
    });
    const auto eval = nn::evaluate(trained.best_params, train);
    const double seconds = elapsed_since(start);
    return pass_if(eval.accuracy >= 0.99 && seconds < 300.0,
                   fmt::format("combo d, 200 windows (40 per class): train accuracy {:.2f}% at best epoch {}, "
                               "first reached 99% at epoch {}",
                               100.0 * eval.accuracy, trained.result.best_epoch, reached));
}

Verdict determinism_criterion() {
    const auto dir = testing::scratch_dir("acceptance_determinism");
    SyntheticOptions options;
    options.subjects = {101, 102, 103, 104};
    options.seconds_per_activity = 10.0;
    write_synthetic_dataset(dir / "data", options);
    const std::vector<std::string> args = {"run", "--force", "--data-root", (dir / "data").string(),
                                           "--out", (dir / "out").string(), "--combos", "d,l",
                                           "--seed", "42", "--subsample", "2", "--max-epochs", "4", "--jobs", "2"};
    std::ostringstream sink;
    if (run_cli(args, sink, sink) != 0) return {Verdict::Fail, "first run failed: " + sink.str()};
    const auto first = slurp(dir / "out" / "summary.json");
    if (run_cli(args, sink, sink) != 0) return {Verdict::Fail, "second run failed: " + sink.str()};
    const auto second = slurp(dir / "out" / "summary.json");
    return pass_if(!first.empty() && first == second,
                   fmt::format("two forced runs (combos d,l, 4 folds, seed 42) produced {} summary.json ({} bytes)",
                               first == second ? "byte-identical" : "different", first.size()));
}

Verdict pipeline_criterion() {
    std::size_t count_errors = 0;
    for (std::size_t length = 0; length <= 500; ++length) {
        std::size_t enumerated = 0;
        for (std::size_t off = 0; off + kWindowLength <= length; off += kWindowStride) ++enumerated;
        if (window_count(length) != enumerated) ++count_errors;
    }

    double worst_mean = 0.0;
    double worst_std = 0.0;
    std::size_t folds = 0;
    std::size_t leaks = 0;
    for (const auto& combo : combination_catalog()) {
        const auto sets = combo_windows(combo.id);
        for (const auto& spec : make_folds(subject_ids(sets))) {
            const auto fold = build_fold_datasets(sets, spec.train_subjects, spec.val_subject, FitScope::TrainOnly);
            ++folds;
            std::set<int> train_ids;
            for (const auto& o : fold.train.origins) train_ids.insert(o.subject_id);
            for (const auto& o : fold.val.origins) {
                if (o.subject_id != spec.val_subject || train_ids.count(o.subject_id) > 0) ++leaks;
            }
            const std::size_t n = fold.train.modality;
            const std::size_t rows = fold.train.size() * kWindowLength;
            for (std::size_t c = 0; c < n; ++c) {
                if (fold.stats.stddev[c] <= kStdFloor) continue;
                long double sum = 0;
                for (std::size_t r = 0; r < rows; ++r) sum += fold.train.data[r * n + c];
                const double mean = static_cast<double>(sum / rows);
                long double ss = 0;
                for (std::size_t r = 0; r < rows; ++r) {
                    const long double d = fold.train.data[r * n + c] - mean;
                    ss += d * d;
                }
                worst_mean = std::max(worst_mean, std::abs(mean));
                worst_std = std::max(worst_std, std::abs(std::sqrt(static_cast<double>(ss / rows)) - 1.0));
            }
        }
    }
    return pass_if(count_errors == 0 && worst_mean < 1e-9 && worst_std < 1e-9 && leaks == 0 && folds == 120,
                   fmt::format("window count exact for L in [0, 500] ({} mismatches); max |mean| {:.1e}, "
                               "max |std - 1| {:.1e}; {} folds, {} leaked windows",
                               count_errors, worst_mean, worst_std, folds, leaks));
}

Verdict catalog_criterion() {
    const std::map<char, std::size_t> expected = {{'a', 9},  {'b', 9},  {'c', 18}, {'d', 6},  {'e', 6},
                                                  {'f', 6},  {'g', 6},  {'h', 6},  {'i', 12}, {'j', 6},
                                                  {'k', 6},  {'l', 12}, {'m', 6},  {'n', 6},  {'o', 12}};
    std::map<char, std::size_t> actual;
    for (const auto& c : combination_catalog()) actual[c.id] = c.modality();
    return pass_if(actual == expected, fmt::format("{} combinations with expected modalities", actual.size()));
}

int full_data() {
    const char* root = std::getenv("HARBENCH_DATA_ROOT");
    if (root == nullptr || *root == '\0') {
        std::cout << "SKIP 5 full-data benchmark: HARBENCH_DATA_ROOT is not set" << std::endl;
        return 77;
    }
    const char* sub_env = std::getenv("HARBENCH_FULL_SUBSAMPLE");
    const std::string subsample = sub_env != nullptr ? sub_env : "4";
    const char* out_env = std::getenv("HARBENCH_FULL_OUT");
    const std::string out = out_env != nullptr ? out_env : "harbench_full";
    const std::string jobs = std::to_string(std::max(1u, std::thread::hardware_concurrency()));

    criterion(5, "full-data benchmark", [&]() -> Verdict {
        const std::vector<std::string> args = {"run", "--data-root", root, "--out", out, "--combos", "c,f,l",
                                               "--norm-scope", "global", "--seed", "42", "--subsample", subsample,
                                               "--jobs", jobs};
        const int code = run_cli(args, std::cout, std::cerr);
        if (code != 0) return {Verdict::Fail, fmt::format("harbench run exited {}", code)};
        std::map<char, double> acc;
        for (const auto& r : load_summaries(out)) acc[r.combo] = 100.0 * r.mean_val_accuracy;
        if (acc.count('c') == 0 || acc.count('f') == 0 || acc.count('l') == 0) {
            return {Verdict::Fail, "missing summaries"};
        }
        const bool ok = acc['l'] >= 97.0 && acc['c'] >= 97.0 && acc['f'] <= 92.0 && acc['l'] - acc['f'] >= 8.0;
        return pass_if(ok, fmt::format("subsample {}: l {:.2f}%, c {:.2f}%, f {:.2f}%, l - f {:.2f} points", subsample,
                                       acc['l'], acc['c'], acc['f'], acc['l'] - acc['f']));
    });
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1 && std::string_view(argv[1]) == "--full-data") return full_data();
    if (argc > 1) {
        std::cerr << "usage: harbench_acceptance [--full-data]\n";
        return 2;
    }

    criterion(1, "gradient check", gradient_check_criterion);
    criterion(2, "initial loss", initial_loss_criterion);
    criterion(3, "parameter counts", param_count_criterion);
    criterion(4, "overfit sanity", overfit_criterion);
    std::cout << "SKIP 5 full-data benchmark: needs the PAMAP2 dataset; run with --full-data "
                 "and HARBENCH_DATA_ROOT set" << std::endl;
    criterion(6, "determinism", determinism_criterion);
    criterion(7, "pipeline properties", pipeline_criterion);
    criterion(8, "catalog conformance", catalog_criterion);
    std::cout << (failures == 0 ? "acceptance: all run criteria passed" : fmt::format("acceptance: {} failed", failures))
              << std::endl;
    return failures == 0 ? 0 : 1;
}
