#pragma once

#include "seprank/ortho.hpp"
#include "seprank/racnet.hpp"
#include "seprank/tasks.hpp"

namespace seprank {

enum class LossKind { PerStepCE, FinalStepCE };

// A network plus, in scoRNN mode, the Cayley parameters behind each hidden
// matrix. refresh_orthogonal() re-materializes w_hid from the skew params.
struct TrainableModel {
    RacNetwork<double> net;
    std::vector<SkewParam> skews;
    bool orthogonal = false;
};

void to_json(nlohmann::json& j, const TrainableModel& model);
void from_json(const nlohmann::json& j, TrainableModel& model);

// Glorot-uniform dense weights; skew parameters via sample_skew_init with
// rho = floor(R/2); h0 is all-ones for RAC and zero otherwise.
TrainableModel init_model(std::size_t depth, std::size_t channels, std::size_t embed_dim,
                          std::size_t classes, Nonlin g, bool orthogonal, Rng& rng);
void refresh_orthogonal(TrainableModel& model);

// Flat parameter order: per layer w_in, then w_hid (or the skew upper
// triangle in scoRNN mode), modReLU bias when present, h0; finally w_out.
std::size_t flat_param_count(const TrainableModel& model);
std::vector<double> flatten_params(const TrainableModel& model);
void unflatten_params(TrainableModel& model, const std::vector<double>& flat);

// One training batch. Token mode carries 1-based token sequences (one-hot
// inputs); scalar mode carries one real input channel per step (M == 1).
struct Batch {
    std::vector<std::vector<std::size_t>> tokens;  // [B][T]
    Mat<double> scalars;                           // B x T when tokens is empty
    std::vector<std::vector<int>> per_step;        // [B][T] 0-based classes (PerStepCE)
    std::vector<int> final_label;                  // [B] 0-based classes (FinalStepCE)

    std::size_t batch_size() const { return tokens.empty() ? scalars.rows : tokens.size(); }
    std::size_t t_steps() const { return tokens.empty() ? scalars.cols : tokens[0].size(); }
};

struct GradResult {
    std::vector<double> grads;  // flat, matching flatten_params
    double loss = 0.0;          // mean over the batch (summed over scored steps)
};

// Reverse-mode gradients through the stacked recurrence; scoRNN hidden
// gradients are routed through scornn_grad into skew-parameter space.
// Throws NumericError when a non-finite value appears.
GradResult backprop(const TrainableModel& model, const Batch& batch, LossKind loss);

struct RmsPropState {
    double gamma = 0.9;
    double lr = 1e-3;
    double eps = 1e-8;
    std::vector<double> acc;

    void init(std::size_t n) { acc.assign(n, 0.0); }
};

// acc <- gamma acc + (1-gamma) g^2 ; p <- p - lr g / (sqrt(acc) + eps).
void rmsprop_step(RmsPropState& state, std::vector<double>& params,
                  const std::vector<double>& grads);

// Batched greedy predictions (argmax per scored step).
std::vector<std::vector<std::size_t>> predict_per_step(const TrainableModel& model,
                                                       const Batch& batch);
std::vector<int> predict_final(const TrainableModel& model, const Batch& batch);

struct TrainConfig {
    std::size_t batch_size = 128;
    std::size_t max_iters = 10000;
    std::vector<double> lr_sweep = {1e-3, 3e-4, 1e-4};
    double gamma = 0.9;
    double eps = 1e-8;
    std::size_t eval_every = 250;       // quick-metric / validation cadence
    std::size_t quick_eval_samples = 512;
    std::size_t eval_samples = 10000;   // held-out metric sample count
    double success_threshold = 0.99;
    bool stop_at_success = true;
    std::size_t patience = 10;          // early-stopping checks (dataset mode)
    std::uint64_t seed = 1;
    bool clip_gradients = false;
    double clip_norm = 1.0;
    std::size_t loss_curve_stride = 50;

    nlohmann::json to_json() const;
};

struct ExperimentResult {
    nlohmann::json config_echo;
    std::size_t iterations = 0;
    double final_metric = 0.0;
    bool success = false;
    bool diverged = false;
    double best_lr = 0.0;
    double seconds = 0.0;
    std::vector<std::pair<std::size_t, double>> loss_curve;

    nlohmann::json to_json() const;
};

// Synthetic-task descriptor: fresh batches from the generator every
// iteration, metric on freshly drawn held-out samples.
struct SyntheticTask {
    LossKind loss = LossKind::PerStepCE;
    std::function<Batch(std::size_t count, Rng&)> sample;
    std::function<double(const TrainableModel&, std::size_t samples, Rng&)> metric;
};

SyntheticTask make_copy_task(const CopyConfig& cfg);
SyntheticTask make_sim_task(const SimConfig& cfg);

// Trains over the learning-rate sweep (in order, stopping at the first
// success); returns the best result. The model argument is the initial
// state, cloned per sweep entry.
// `trained`, when given, receives the parameters behind the returned result.
ExperimentResult train_loop(const TrainableModel& init, const SyntheticTask& task,
                            const TrainConfig& cfg, TrainableModel* trained = nullptr);

// Dataset mode: epochs over a fixed set with validation-loss early stopping.
struct DatasetTask {
    const MnistData* train = nullptr;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> validation_indices;
    const MnistData* test = nullptr;  // final metric set (falls back to validation)
};

ExperimentResult train_loop_dataset(const TrainableModel& init, const DatasetTask& task,
                                    const TrainConfig& cfg, TrainableModel* trained = nullptr);

// ---- frontier sweeps -------------------------------------------------------

struct FrontierCell {
    std::size_t depth = 0;
    std::size_t channels = 0;
    std::size_t params = 0;
    double hardness = 0.0;
    double metric = 0.0;
    bool success = false;
    std::size_t iters = 0;
    double seconds = 0.0;
};

using CellTrainer = std::function<FrontierCell(std::size_t depth, std::size_t channels,
                                               double hardness)>;

// Runs every (arch, hardness) cell, distributing across a worker pool;
// results come back in grid order regardless of scheduling.
std::vector<FrontierCell> success_frontier(
    const std::vector<std::pair<std::size_t, std::size_t>>& archs,
    const std::vector<double>& hardness, const CellTrainer& train_cell, unsigned jobs = 1);

// Largest hardness with success per architecture; -infinity when none.
double frontier_max(const std::vector<FrontierCell>& cells, std::size_t depth);

std::string frontier_csv_header();
std::string frontier_csv_row(const FrontierCell& cell);

}  // namespace seprank
