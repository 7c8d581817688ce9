#pragma once

#include <functional>

#include "seprank/racnet.hpp"

namespace seprank {

// Composition of K units into rbar non-negative parts — a bucket of K balls
// in rbar colors.
struct StateVector {
    std::vector<std::size_t> counts;

    std::size_t total() const {
        std::size_t s = 0;
        for (std::size_t c : counts) s += c;
        return s;
    }
    bool operator==(const StateVector&) const = default;
};

// Removal chain p^(K-1), ..., p^(1): one ball leaves per step, counts are
// componentwise non-increasing. Empty for K <= 1.
struct Trajectory {
    std::vector<StateVector> states;
};

enum class Verdict { Equal, AtLeast, Violation };
std::string verdict_name(Verdict v);

struct SepRankReport {
    std::string check;
    std::size_t m = 0, r = 0, t = 0, l = 0;
    long long measured = 0;
    BigInt expected;
    Verdict verdict = Verdict::Violation;
    bool exact = true;
    std::size_t trials = 0, failures = 0;

    nlohmann::json to_json() const;
    std::string csv_row() const;
    static std::string csv_header();
};

// All compositions of k into rbar parts, lexicographic by counts.
std::vector<StateVector> enumerate_states(std::size_t rbar, std::size_t k);

// All removal chains from p down to a single ball. Guarded by a total cap
// since the count is the multinomial of p.
std::vector<Trajectory> enumerate_trajectories(const StateVector& p, std::size_t max_total = 8);

// Both sides of the bucket decomposition identity for one multi-index d
// (1-based tokens), and the exhaustive check over the whole grid.
Rational decomp_lhs(const Mat<Rational>& z, std::size_t t_steps, const std::vector<std::size_t>& d);
Rational decomp_rhs(const Mat<Rational>& z, std::size_t t_steps, const std::vector<std::size_t>& d);
bool verify_decomp_identity(const Mat<Rational>& z, std::size_t t_steps);

// Strict vector rearrangement inequality for one non-identity permutation of
// pairwise-distinct non-negative vectors.
bool rearrangement_check(const std::vector<std::vector<long long>>& vectors,
                         const std::vector<std::size_t>& sigma);

// Accumulated reward of the simple lowest-color-first strategy.
BigInt rho_star(const StateVector& p_hat, std::uint64_t omega);

// Max over trajectories of sum_j omega^{d_j} p^{(K-j+1)}_{d_j}; exhaustive
// search with an independent memoized-DP cross-check.
BigInt bucket_reward_optimal(const std::vector<std::size_t>& d, const StateVector& p,
                             std::uint64_t omega);
BigInt bucket_reward_dp(const std::vector<std::size_t>& d, const StateVector& p,
                        std::uint64_t omega);

// True iff over all states of the bucket, the optimal reward for the sorted
// color sequence d is attained uniquely at the state matching d's counts.
bool verify_unique_argmax(const std::vector<std::size_t>& d, std::uint64_t omega, std::size_t rbar);

// Number of repetitions of the start-end unit in the depth-L chain-of-products
// view: tuples T/2+1 <= t_2 <= ... <= t_L <= T counted by direct iteration.
BigInt repetition_count_nested(std::size_t t_steps, std::size_t depth);
// Asserts the nested count equals ((T/2 multichoose L-1)) and returns it.
BigInt repetition_count(std::size_t t_steps, std::size_t depth);

// Predicted start-end matricization rank of a bond-R MPS: min(R, M^{T/2}).
std::size_t min_cut_mps_rank(std::size_t r, std::size_t m, std::size_t t_steps);

// Exact start-end separation rank of a depth-1 RAC via its weights tensor.
std::size_t sep_rank_shallow(const RacNetwork<Rational>& net, std::size_t t_steps,
                             std::size_t klass = 0, std::size_t cap = kDefaultTensorCap);
std::size_t sep_rank_shallow_float(const RacNetwork<double>& net, std::size_t t_steps,
                                   std::size_t klass = 0, double rel_tol = 1e-10,
                                   std::size_t cap = kDefaultTensorCap);

// Rank of the start-end matricization of a grid tensor: a lower bound on the
// separation rank of the underlying function.
std::size_t sep_rank_lower_bound(const DenseTensor<Rational>& grid);
std::size_t sep_rank_lower_bound_float(const DenseTensor<double>& grid, double rel_tol = 1e-10);

// Builds the full grid tensor of an evaluator and returns its exact
// start-end matricization rank. Small grids only.
std::size_t brute_force_sep_rank(const std::function<Rational(const std::vector<std::size_t>&)>& eval,
                                 std::size_t m, std::size_t t_steps, std::size_t cap = 4096);

// Random depth-1 RAC with integer weights in [-5, 5], no all-zero rows, an
// exactly invertible hidden matrix and the pseudoinverse initial state.
RacNetwork<Rational> random_rational_shallow_net(std::size_t m, std::size_t r, std::size_t classes,
                                                 Rng& rng);
RacNetwork<double> random_float_deep_net(std::size_t depth, std::size_t m, std::size_t r,
                                         std::size_t classes, Rng& rng);

// Theorem harnesses (see the report fields for their verdict conventions).
SepRankReport verify_theorem_shallow(std::size_t m, std::size_t r, std::size_t t_steps,
                                     std::size_t trials, Rng& rng,
                                     std::size_t cap = kDefaultTensorCap);
SepRankReport verify_theorem_deep(std::size_t m, std::size_t r, std::size_t t_steps,
                                  const Rational& z, std::uint64_t omega, std::size_t float_trials,
                                  Rng& rng, std::size_t cap = kDefaultTensorCap);
SepRankReport verify_min_cut(std::size_t r, std::size_t m, std::size_t t_steps, std::size_t trials,
                             Rng& rng, double rel_tol = 1e-10, std::size_t cap = kDefaultTensorCap);
SepRankReport verify_hadamard_bound(std::size_t trials, Rng& rng);

struct PolySpotcheck {
    bool ok = false;                  // target rank reached outside the recorded set
    std::vector<Rational> deficient;  // sampled points below the target rank
};
PolySpotcheck poly_full_rank_spotcheck(
    const std::function<Mat<Rational>(const Rational&)>& family,
    const std::vector<Rational>& samples, std::size_t target_rank);

}  // namespace seprank
