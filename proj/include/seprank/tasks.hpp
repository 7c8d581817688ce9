#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "seprank/common.hpp"

namespace seprank {

// Token ids are 1-based: data symbols 1..n, blank n+1, trigger n+2 (copy
// task only).
struct Vocabulary {
    std::size_t n = 0;
    std::size_t blank_id() const { return n + 1; }
    std::size_t trigger_id() const { return n + 2; }
};

struct CopyConfig {
    std::size_t m = 1;  // data length
    std::size_t b = 0;  // delay time
    std::size_t n = 2;  // alphabet size
    std::size_t seq_len() const { return b + 2 * m; }
    void validate() const;
};

struct SimConfig {
    std::size_t t = 4;  // sequence length, even
    std::size_t m = 2;  // substring length, even, < t/2
    std::size_t n = 2;  // alphabet size
    void validate() const;
};

// Similarity class labels.
inline constexpr int kSimClassZero = 0;  // no aligned pair matches
inline constexpr int kSimClassHalf = 1;  // exactly m/2 aligned matches
inline constexpr int kSimClassFull = 2;  // identical substrings

struct TaskSample {
    std::vector<std::size_t> input;   // length T
    std::vector<std::size_t> target;  // per-step targets (copy task); empty otherwise
    int label = -1;                   // final-step class (similarity); -1 otherwise
};

// Copy task: m data tokens, B blanks, the trigger at position m+B+1, then
// m-1 blanks; the target replays the data over the last m steps.
TaskSample gen_copy(const CopyConfig& cfg, Rng& rng);

// Mean per-character match over the final m positions only.
double data_accuracy(const std::vector<std::vector<std::size_t>>& preds,
                     const std::vector<std::vector<std::size_t>>& targets, std::size_t m,
                     std::size_t b);

// Start-end similarity task; the class is drawn uniformly from the three.
TaskSample gen_sim(const SimConfig& cfg, Rng& rng);

// m * log2(n).
double bits_memorized(std::size_t m, std::size_t n);

// ---- permuted pixel-by-pixel MNIST pipeline -------------------------------

struct MnistData {
    std::size_t count = 0;
    std::size_t pixels = 0;              // 784 for MNIST
    std::vector<float> images;           // count*pixels, scaled to [0,1]
    std::vector<int> labels;             // count entries in [0,9]
};

// IDX pair loader; both files may independently be gzip-compressed.
MnistData load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Writers used by fixtures and round-trip checks (raw IDX, uncompressed).
void write_mnist_idx(const std::string& images_path, const std::string& labels_path,
                     const MnistData& data);

// Fixed pixel permutation: seed 0 is reserved for the identity order.
std::vector<std::size_t> make_permutation(std::size_t n, std::uint64_t seed);
std::vector<std::size_t> invert_permutation(const std::vector<std::size_t>& perm);
// out[i*n + k] = in[i*n + perm[k]]
MnistData permute_pixels(const MnistData& data, std::uint64_t seed);

// Seeded shuffle; the last k indices form the validation split.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};
SplitIndices validation_split(std::size_t count, std::size_t k, std::uint64_t seed);

// ---- JSON-lines datasets ---------------------------------------------------

void write_jsonl(const std::string& path, const nlohmann::json& header,
                 const std::vector<TaskSample>& samples);
std::pair<nlohmann::json, std::vector<TaskSample>> read_jsonl(const std::string& path);

}  // namespace seprank
