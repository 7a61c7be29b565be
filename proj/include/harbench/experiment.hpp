#pragma once

#include "harbench/nn.hpp"
#include "harbench/pipeline.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace harbench {

struct FoldSpec {
    std::size_t fold_index = 0;
    std::vector<int> train_subjects;
    int val_subject = 0;
};

/// Leave-one-subject-out folds, ordered by subject id.
/// Throws Error{InsufficientSubjects} for fewer than two subjects.
std::vector<FoldSpec> make_folds(std::vector<int> subjects);

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct FoldResult {
    std::size_t fold_index = 0;
    int val_subject = 0;
    std::uint64_t seed = 0;
    double best_val_accuracy = 0.0;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;  // 1-based
    std::size_t epochs_trained = 0;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    std::vector<EpochStats> curve;
};

/// Patience counter for validation loss. The best snapshot tracks the true
/// minimum; only drops of at least `min_delta` below the last significant
/// loss reset the patience counter.
class EarlyStopping {
public:
    EarlyStopping(std::size_t patience, double min_delta)
        : patience_(patience), min_delta_(min_delta) {}

    /// Records one epoch's loss; returns true if it is a new minimum.
    bool update(double val_loss);
    bool should_stop() const noexcept { return stale_epochs_ >= patience_; }
    double best() const noexcept { return best_; }
    std::size_t stale_epochs() const noexcept { return stale_epochs_; }

private:
    std::size_t patience_;
    double min_delta_;
    bool seen_ = false;
    double best_ = 0.0;
    double anchor_ = 0.0;
    std::size_t stale_epochs_ = 0;
};

struct TrainedFold {
    FoldResult result;
    nn::NetworkParams best_params;
};

/// Called after every epoch with (1-based epoch, stats).
using EpochCallback = std::function<void(std::size_t, const EpochStats&)>;

/// Mini-batch Adam with per-epoch shuffling and early stopping on validation
/// loss. Returns the parameters from the lowest-validation-loss epoch.
/// Throws Error{DivergedLoss} if the validation loss becomes non-finite.
TrainedFold train_fold(const WindowSet& train, const WindowSet& val,
                       const nn::Hyperparams& hyper, std::uint64_t seed,
                       const EpochCallback& on_epoch = {});

struct ExperimentResult {
    char combo = 'a';
    std::string name;
    std::size_t modality = 0;
    std::size_t subsample = 1;
    std::vector<FoldResult> folds;
    double mean_val_accuracy = 0.0;
    double std_val_accuracy = 0.0;  // population
    double mean_epochs = 0.0;
    double std_epochs = 0.0;
};

/// Fills the aggregate fields from `result.folds`.
void aggregate(ExperimentResult& result);

struct ExperimentOptions {
    FitScope scope = FitScope::TrainOnly;
    std::size_t subsample = 1;
    std::size_t jobs = 1;
    /// Optional hook, e.g. to write per-fold logs and checkpoints.
    std::function<void(const FoldSpec&, const TrainedFold&)> on_fold;
    /// Optional per-epoch hook, invoked from the training thread of that fold.
    std::function<void(const FoldSpec&, std::size_t, const EpochStats&)> on_epoch;
};

/// Leave-one-subject-out training of one combination. `full_windows` holds
/// one 18-channel window set per eligible subject. Fold k uses seed
/// `hyper.seed ^ k`.
ExperimentResult run_experiment(std::span<const WindowSet> full_windows,
                                const SignalCombination& combo, const nn::Hyperparams& hyper,
                                const ExperimentOptions& options = {});

struct ModalityGroup {
    std::size_t modality = 0;
    std::size_t combinations = 0;
    double mean_accuracy = 0.0;  // mean of the combinations' means
    double min = 0.0;            // fold accuracy distribution
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Linear-interpolated quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Groups by modality, ascending; empty groups are omitted.
std::vector<ModalityGroup> modality_group_stats(std::span<const ExperimentResult> results);

}  // namespace harbench
