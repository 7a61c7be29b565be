#include "harbench/cli.hpp"

#include "harbench/config.hpp"
#include "harbench/error.hpp"
#include "harbench/experiment.hpp"
#include "harbench/gradcheck.hpp"
#include "harbench/pamap2.hpp"
#include "harbench/pipeline.hpp"
#include "harbench/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

namespace harbench {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
    std::string config_file;
    std::vector<std::pair<std::string, std::string*>> values;  // key, storage
    std::vector<std::pair<std::string, CLI::Option*>> flags;
    bool force = false;
};

void add_run_options(CLI::App& cmd, CommonOptions& opts, std::vector<std::unique_ptr<std::string>>& storage) {
    cmd.add_option("--config", opts.config_file, "key = value configuration file");
    static const std::pair<const char*, const char*> keys[] = {
        {"data-root", "PAMAP2 Protocol directory (falls back to HARBENCH_DATA_ROOT)"},
        {"combos", "comma-separated combination letters a-o, or 'all'"},
        {"seed", "base random seed"},
        {"lr", "Adam learning rate"},
        {"batch-size", "mini-batch size"},
        {"max-epochs", "epoch cap"},
        {"patience", "early-stopping patience in epochs"},
        {"min-delta", "minimum validation-loss improvement"},
        {"norm-scope", "standardization fit scope: train | global"},
        {"accel-range", "accelerometer triple: 16g | 6g"},
        {"subsample", "keep every k-th window"},
        {"max-gap", "longest interpolated dropout, in samples"},
        {"jobs", "folds trained in parallel"},
        {"out", "output directory"},
    };
    for (const auto& [key, help] : keys) {
        storage.push_back(std::make_unique<std::string>());
        auto* opt = cmd.add_option(std::string("--") + key, *storage.back(), help);
        opts.values.emplace_back(key, storage.back().get());
        opts.flags.emplace_back(key, opt);
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, fmt::format("cannot read {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig resolve_config(const CommonOptions& opts) {
    ConfigOverrides overrides;
    for (std::size_t i = 0; i < opts.values.size(); ++i) {
        if (opts.flags[i].second->count() > 0) overrides.emplace_back(opts.values[i].first, *opts.values[i].second);
    }
    const std::string text = opts.config_file.empty() ? std::string() : read_text(opts.config_file);
    RunConfig config = load_config(text, overrides);
    if (config.data_root.empty()) {
        if (const char* env = std::getenv("HARBENCH_DATA_ROOT"); env != nullptr) config.data_root = env;
    }
    return config;
}

fs::path cache_file(const RunConfig& config, int subject) {
    return config.out_dir / "cache" / fmt::format("subject{}.{}.bin", subject, to_string(config.accel_range));
}

std::vector<SubjectRecording> load_cached(const RunConfig& config) {
    std::vector<SubjectRecording> out;
    const fs::path dir = config.out_dir / "cache";
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return out;
    std::vector<fs::path> files;
    const std::string suffix = "." + to_string(config.accel_range) + ".bin";
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.size() > suffix.size() && name.ends_with(suffix)) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        out.push_back(read_cache(in));
    }
    return out;
}

std::vector<SubjectRecording> load_recordings(const RunConfig& config, std::ostream& out) {
    if (auto cached = load_cached(config); !cached.empty()) {
        out << fmt::format("using {} cached recording(s) from {}\n", cached.size(),
                           (config.out_dir / "cache").string());
        return cached;
    }
    if (config.data_root.empty()) {
        throw Error(ErrorKind::Io, "no data root: pass --data-root or set HARBENCH_DATA_ROOT");
    }
    return load_data_root(config.data_root, config.accel_range);
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw Error(ErrorKind::Io, fmt::format("cannot write {}", path.string()));
}

int cmd_prepare(const RunConfig& config, std::ostream& out) {
    if (config.data_root.empty()) {
        throw Error(ErrorKind::Io, "no data root: pass --data-root or set HARBENCH_DATA_ROOT");
    }
    const auto recordings = load_data_root(config.data_root, config.accel_range);
    fs::create_directories(config.out_dir / "cache");
    for (const auto& rec : recordings) {
        std::ofstream f(cache_file(config, rec.subject_id), std::ios::binary);
        write_cache(f, rec);
    }
    const auto labels = default_label_map();
    const auto all = all_channels_combination();
    out << fmt::format("{:<8}{:>9}", "subject", "samples");
    for (int c = 0; c < kNumClasses; ++c) out << fmt::format("{:>19}", class_name(c));
    out << '\n';
    for (const auto& rec : recordings) {
        const auto windows = subject_windows(rec, labels, all, config.max_gap);
        std::array<std::size_t, kNumClasses> counts{};
        for (int y : windows.labels) ++counts[static_cast<std::size_t>(y)];
        out << fmt::format("{:<8}{:>9}", rec.subject_id, rec.size());
        for (auto n : counts) out << fmt::format("{:>19}", n);
        out << '\n';
    }
    const auto eligible = eligible_subjects(recordings, labels, config.max_gap);
    out << "eligible subjects:";
    for (int s : eligible) out << ' ' << s;
    out << fmt::format("\ncache written to {}\n", (config.out_dir / "cache").string());
    return 0;
}

void write_fold_outputs(const fs::path& out_dir, char combo, const FoldSpec& spec, const TrainedFold& trained) {
    std::string log = "epoch,train_loss,val_loss,val_acc\n";
    for (std::size_t e = 0; e < trained.result.curve.size(); ++e) {
        const auto& s = trained.result.curve[e];
        log += fmt::format("{},{},{},{}\n", e + 1, s.train_loss, s.val_loss, s.val_accuracy);
    }
    write_text(out_dir / "logs" / fmt::format("{}_fold{}.csv", combo, spec.fold_index), log);
    const fs::path model = out_dir / "models" / fmt::format("{}_fold{}.bin", combo, spec.fold_index);
    fs::create_directories(model.parent_path());
    std::ofstream f(model, std::ios::binary);
    nn::save_checkpoint(f, trained.best_params);
}

int cmd_run(const RunConfig& config, bool force, std::ostream& out, std::ostream& err) {
    fs::create_directories(config.out_dir);
    write_text(config.out_dir / "config.resolved", to_config_text(config));

    std::vector<WindowSet> full;
    bool loaded = false;
    std::mutex log_mutex;
    for (char id : config.combos) {
        const auto& combo = find_combination(id);
        if (!force && fs::exists(summary_path(config.out_dir, id))) {
            out << fmt::format("{}: summary exists, skipping (use --force to retrain)\n", combo.label());
            continue;
        }
        if (!loaded) {
            const auto recordings = load_recordings(config, out);
            const auto labels = default_label_map();
            const auto eligible = eligible_subjects(recordings, labels, config.max_gap);
            const auto all = all_channels_combination();
            for (const auto& rec : recordings) {
                if (std::find(eligible.begin(), eligible.end(), rec.subject_id) == eligible.end()) continue;
                full.push_back(subject_windows(rec, labels, all, config.max_gap));
            }
            loaded = true;
        }
        ExperimentOptions options;
        options.scope = config.scope;
        options.subsample = config.subsample;
        options.jobs = config.jobs;
        options.on_fold = [&](const FoldSpec& spec, const TrainedFold& trained) {
            write_fold_outputs(config.out_dir, id, spec, trained);
            std::lock_guard lock(log_mutex);
            err << fmt::format("{} fold {} (subject {}): best val acc {:.4f} at epoch {}, {} epochs\n", id,
                               spec.fold_index, spec.val_subject, trained.result.best_val_accuracy,
                               trained.result.best_epoch, trained.result.epochs_trained);
        };
        const auto start = std::chrono::steady_clock::now();
        const auto result = run_experiment(full, combo, config.hyper, options);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_summary(result, config.out_dir);
        out << fmt::format("{}: mean val acc {:.2f}% (std {:.2f}), mean epochs {:.1f}, {:.1f} s\n", combo.label(),
                           100.0 * result.mean_val_accuracy, 100.0 * result.std_val_accuracy, result.mean_epochs,
                           seconds);
    }
    const auto results = load_summaries(config.out_dir);
    emit_report(results, config.out_dir);
    out << render_table(results);
    return 0;
}

int cmd_report(const RunConfig& config, std::ostream& out) {
    const auto results = load_summaries(config.out_dir);
    if (results.empty()) {
        throw Error(ErrorKind::Io, fmt::format("no summaries under {}", (config.out_dir / "summaries").string()));
    }
    emit_report(results, config.out_dir);
    out << render_table(results);
    return 0;
}

constexpr double kGradCheckThreshold = 1e-4;

int cmd_gradcheck(std::uint64_t seed, std::size_t seeds, std::size_t samples, std::ostream& out) {
    double worst = 0.0;
    for (std::size_t i = 0; i < seeds; ++i) {
        nn::GradCheckOptions opts;
        opts.seed = seed + i;
        opts.samples_per_layer = samples;
        const auto report = nn::gradient_check(opts);
        for (const auto& layer : report.layers) {
            out << fmt::format("seed {} {:<6} checked {:>4}  max rel error {:.3e}\n", opts.seed, layer.layer,
                               layer.checked, layer.max_rel_error);
        }
        if (report.skipped_kinks > 0) {
            out << fmt::format("seed {} skipped {} coordinate(s) straddling a ReLU/pool kink\n", opts.seed,
                               report.skipped_kinks);
        }
        worst = std::max(worst, report.max_rel_error);
    }
    out << fmt::format("max relative error: {:.3e}\n", worst);
    return worst < kGradCheckThreshold ? 0 : 3;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inertial-sensor combination benchmark for activity recognition", "harbench"};
    app.require_subcommand(1);

    std::vector<std::unique_ptr<std::string>> storage;
    CommonOptions prepare_opts;
    CommonOptions run_opts;
    CommonOptions report_opts;

    auto* prepare = app.add_subcommand("prepare", "parse and cache the dataset, print window counts");
    add_run_options(*prepare, prepare_opts, storage);
    auto* run = app.add_subcommand("run", "train and evaluate the selected combinations");
    add_run_options(*run, run_opts, storage);
    run->add_flag("--force", run_opts.force, "retrain combinations that already have summaries");
    auto* report = app.add_subcommand("report", "re-render reports from stored summaries");
    add_run_options(*report, report_opts, storage);

    std::uint64_t gc_seed = 1;
    std::size_t gc_seeds = 3;
    std::size_t gc_samples = 256;
    auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
    gradcheck->add_option("--seed", gc_seed, "first seed");
    gradcheck->add_option("--seeds", gc_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
    gradcheck->add_option("--samples", gc_samples, "parameters sampled per layer")->check(CLI::PositiveNumber);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "harbench: " << e.what() << '\n' << app.help();
        return 1;
    }

    try {
        if (prepare->parsed()) return cmd_prepare(resolve_config(prepare_opts), out);
        if (run->parsed()) return cmd_run(resolve_config(run_opts), run_opts.force, out, err);
        if (report->parsed()) return cmd_report(resolve_config(report_opts), out);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, gc_seeds, gc_samples, out);
    } catch (const Error& e) {
        err << "harbench: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "harbench: " << e.what() << '\n';
        return 2;
    }
    err << app.help();
    return 1;
}

}  // namespace harbench
