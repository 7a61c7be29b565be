#include "harbench/experiment.hpp"

#include "harbench/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <thread>

namespace harbench {

std::vector<FoldSpec> make_folds(std::vector<int> subjects) {
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    if (subjects.size() < 2) {
        throw Error(ErrorKind::InsufficientSubjects,
                    fmt::format("{} subject(s); leave-one-subject-out needs at least 2", subjects.size()));
    }
    std::vector<FoldSpec> folds;
    for (std::size_t k = 0; k < subjects.size(); ++k) {
        FoldSpec f;
        f.fold_index = k;
        f.val_subject = subjects[k];
        for (int s : subjects) {
            if (s != subjects[k]) f.train_subjects.push_back(s);
        }
        folds.push_back(std::move(f));
    }
    return folds;
}

bool EarlyStopping::update(double val_loss) {
    if (!seen_) {
        seen_ = true;
        best_ = anchor_ = val_loss;
        stale_epochs_ = 0;
        return true;
    }
    const bool new_min = val_loss < best_;
    if (new_min) best_ = val_loss;
    if (val_loss < anchor_ - min_delta_) {
        anchor_ = val_loss;
        stale_epochs_ = 0;
    } else {
        ++stale_epochs_;
    }
    return new_min;
}

TrainedFold train_fold(const WindowSet& train, const WindowSet& val, const nn::Hyperparams& hyper,
                       std::uint64_t seed, const EpochCallback& on_epoch) {
    hyper.validate();
    if (train.empty() || val.empty()) throw Error(ErrorKind::EmptyInput, "train_fold: empty window set");
    if (train.modality != val.modality) {
        throw Error(ErrorKind::ChannelMismatch, "train and validation modalities differ");
    }

    TrainedFold out;
    nn::NetworkParams params = nn::init_network(train.modality, nn::kDefaultClasses, seed);
    nn::AdamState adam = nn::AdamState::for_params(params);
    Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
    EarlyStopping stopper(hyper.patience, hyper.min_delta);

    const std::size_t stride = train.window_stride();
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> batch;
    std::vector<int> labels;

    FoldResult& result = out.result;
    result.seed = seed;
    result.train_windows = train.size();
    result.val_windows = val.size();

    for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
            const std::size_t count = std::min(hyper.batch_size, order.size() - start);
            batch.resize(count * stride);
            labels.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const auto w = train.window(order[start + i]);
                std::copy(w.begin(), w.end(), batch.begin() + static_cast<std::ptrdiff_t>(i * stride));
                labels[i] = train.labels[order[start + i]];
            }
            const auto fwd = nn::forward(params, batch, count, nn::Mode::Train, hyper.dropout_rate, rng);
            const auto lg = nn::loss_and_grad(params, fwd.cache, fwd.probs, labels);
            nn::adam_step(params, lg.grads, adam, hyper);
            loss_sum += lg.loss * static_cast<double>(count);
        }

        const auto eval = nn::evaluate(params, val);
        if (!std::isfinite(eval.loss)) {
            throw Error(ErrorKind::DivergedLoss, fmt::format("validation loss is {} at epoch {}", eval.loss, epoch));
        }
        const EpochStats stats{loss_sum / static_cast<double>(order.size()), eval.loss, eval.accuracy};
        result.curve.push_back(stats);
        result.epochs_trained = epoch;
        if (stopper.update(eval.loss)) {
            out.best_params = params;
            result.best_epoch = epoch;
            result.best_val_loss = eval.loss;
            result.best_val_accuracy = eval.accuracy;
        }
        if (on_epoch) on_epoch(epoch, stats);
        if (stopper.should_stop()) break;
    }
    return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / n)};
}

}  // namespace

void aggregate(ExperimentResult& result) {
    if (result.folds.empty()) throw Error(ErrorKind::EmptyInput, "no fold results to aggregate");
    std::vector<double> acc;
    std::vector<double> epochs;
    for (const auto& f : result.folds) {
        acc.push_back(f.best_val_accuracy);
        epochs.push_back(static_cast<double>(f.epochs_trained));
    }
    std::tie(result.mean_val_accuracy, result.std_val_accuracy) = mean_std(acc);
    std::tie(result.mean_epochs, result.std_epochs) = mean_std(epochs);
}

ExperimentResult run_experiment(std::span<const WindowSet> full_windows, const SignalCombination& combo,
                                const nn::Hyperparams& hyper, const ExperimentOptions& options) {
    hyper.validate();
    std::vector<WindowSet> per_subject;
    std::vector<int> subjects;
    for (const auto& set : full_windows) {
        if (set.empty()) continue;
        subjects.push_back(set.origins.front().subject_id);
        per_subject.push_back(subsample(select_channels(set, combo), options.subsample));
    }
    const auto folds = make_folds(subjects);

    // Every subject validates exactly once.
    std::map<int, int> val_count;
    for (const auto& f : folds) ++val_count[f.val_subject];
    for (int s : subjects) {
        if (val_count[s] != 1) {
            throw Error(ErrorKind::Leakage, fmt::format("subject {} validated {} times", s, val_count[s]));
        }
    }

    ExperimentResult result;
    result.combo = combo.id;
    result.name = combo.name;
    result.modality = combo.modality();
    result.subsample = options.subsample;
    result.folds.resize(folds.size());
    std::vector<std::exception_ptr> errors(folds.size());

    auto run_fold = [&](std::size_t k) {
        try {
            const FoldSpec& spec = folds[k];
            const auto data = build_fold_datasets(per_subject, spec.train_subjects, spec.val_subject, options.scope);
            EpochCallback cb;
            if (options.on_epoch) {
                cb = [&](std::size_t epoch, const EpochStats& s) { options.on_epoch(spec, epoch, s); };
            }
            auto trained = train_fold(data.train, data.val, hyper, hyper.seed ^ spec.fold_index, cb);
            trained.result.fold_index = spec.fold_index;
            trained.result.val_subject = spec.val_subject;
            if (options.on_fold) options.on_fold(spec, trained);
            result.folds[k] = std::move(trained.result);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };

    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, folds.size());
    if (jobs == 1) {
        for (std::size_t k = 0; k < folds.size(); ++k) run_fold(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t k = next++; k < folds.size(); k = next++) run_fold(k);
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    aggregate(result);
    return result;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorKind::EmptyInput, "quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

std::vector<ModalityGroup> modality_group_stats(std::span<const ExperimentResult> results) {
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : results) {
        auto& [means, folds] = groups[r.modality];
        means.push_back(r.mean_val_accuracy);
        for (const auto& f : r.folds) folds.push_back(f.best_val_accuracy);
    }
    std::vector<ModalityGroup> out;
    for (const auto& [modality, data] : groups) {
        const auto& [means, folds] = data;
        ModalityGroup g;
        g.modality = modality;
        g.combinations = means.size();
        g.mean_accuracy = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
        if (!folds.empty()) {
            g.min = quantile(folds, 0.0);
            g.q1 = quantile(folds, 0.25);
            g.median = quantile(folds, 0.5);
            g.q3 = quantile(folds, 0.75);
            g.max = quantile(folds, 1.0);
        }
        out.push_back(g);
    }
    return out;
}

}  // namespace harbench
