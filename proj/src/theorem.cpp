#include "seprank/theorem.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace seprank {

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Equal: return "equal";
        case Verdict::AtLeast: return "at-least";
        case Verdict::Violation: return "violation";
    }
    return "violation";
}

nlohmann::json SepRankReport::to_json() const {
    return nlohmann::json{{"check", check},       {"M", m},
                          {"R", r},               {"T", t},
                          {"L", l},               {"measured", measured},
                          {"expected", expected.to_string()},
                          {"verdict", verdict_name(verdict)},
                          {"arithmetic", exact ? "exact" : "float"},
                          {"trials", trials},    {"failures", failures}};
}

std::string SepRankReport::csv_header() {
    return "check,M,R,T,L,measured,expected,verdict,arithmetic,trials,failures";
}

std::string SepRankReport::csv_row() const {
    std::ostringstream os;
    os << check << ',' << m << ',' << r << ',' << t << ',' << l << ',' << measured << ','
       << expected.to_string() << ',' << verdict_name(verdict) << ','
       << (exact ? "exact" : "float") << ',' << trials << ',' << failures;
    return os.str();
}

std::vector<StateVector> enumerate_states(std::size_t rbar, std::size_t k) {
    if (rbar == 0) throw std::invalid_argument("enumerate_states: rbar >= 1 required");
    std::vector<StateVector> out;
    StateVector cur;
    cur.counts.assign(rbar, 0);
    // Lexicographic: recurse on the first coordinate ascending.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
        if (pos + 1 == rbar) {
            cur.counts[pos] = left;
            out.push_back(cur);
            return;
        }
        for (std::size_t c = 0; c <= left; ++c) {
            cur.counts[pos] = c;
            rec(pos + 1, left - c);
        }
    };
    rec(0, k);
    return out;
}

std::vector<Trajectory> enumerate_trajectories(const StateVector& p, std::size_t max_total) {
    const std::size_t k = p.total();
    if (k > max_total) throw CapExceeded("enumerate_trajectories: bucket too large");
    std::vector<Trajectory> out;
    Trajectory cur;
    StateVector state = p;
    std::function<void()> rec = [&]() {
        if (state.total() <= 1) {
            out.push_back(cur);
            return;
        }
        for (std::size_t c = 0; c < state.counts.size(); ++c) {
            if (state.counts[c] == 0) continue;
            --state.counts[c];
            cur.states.push_back(state);
            rec();
            cur.states.pop_back();
            ++state.counts[c];
        }
    };
    rec();
    return out;
}

Rational decomp_lhs(const Mat<Rational>& z, std::size_t t_steps, const std::vector<std::size_t>& d) {
    const std::size_t rbar = z.rows;
    if (d.size() != t_steps) throw std::invalid_argument("decomp_lhs: index length");
    Rational prod(1);
    for (std::size_t t = t_steps / 2; t < t_steps; ++t) {
        Rational s(0);
        for (std::size_t r = 0; r < rbar; ++r) {
            Rational inner(1);
            for (std::size_t j = 0; j <= t; ++j) inner *= z(r, d[j] - 1);
            s += inner;
        }
        prod *= s;
    }
    return prod;
}

Rational decomp_rhs(const Mat<Rational>& z, std::size_t t_steps, const std::vector<std::size_t>& d) {
    const std::size_t rbar = z.rows;
    const std::size_t k = t_steps / 2;
    if (d.size() != t_steps) throw std::invalid_argument("decomp_rhs: index length");
    Rational total(0);
    for (const StateVector& p : enumerate_states(rbar, k)) {
        for (const Trajectory& traj : enumerate_trajectories(p)) {
            // Exponent of Z_{r d_j}: p_r for j <= T/2, then the trajectory
            // states p^(T-j+1) across the second half.
            Rational term(1);
            for (std::size_t r = 0; r < rbar; ++r) {
                for (std::size_t j = 0; j < k; ++j) {
                    term *= z(r, d[j] - 1).pow(static_cast<long long>(p.counts[r]));
                }
                for (std::size_t j = k; j < t_steps; ++j) {
                    const StateVector& st = j == k ? p : traj.states[j - k - 1];
                    term *= z(r, d[j] - 1).pow(static_cast<long long>(st.counts[r]));
                }
            }
            total += term;
        }
    }
    return total;
}

bool verify_decomp_identity(const Mat<Rational>& z, std::size_t t_steps) {
    if (t_steps % 2 != 0) throw std::invalid_argument("verify_decomp_identity: even T required");
    const std::size_t m = z.cols;
    std::vector<std::size_t> d(t_steps, 1);
    for (;;) {
        if (!(decomp_lhs(z, t_steps, d) == decomp_rhs(z, t_steps, d))) return false;
        std::size_t t = t_steps;
        while (t-- > 0) {
            if (++d[t] <= m) break;
            d[t] = 1;
        }
        if (t == static_cast<std::size_t>(-1)) break;
    }
    return true;
}

bool rearrangement_check(const std::vector<std::vector<long long>>& vectors,
                         const std::vector<std::size_t>& sigma) {
    const std::size_t n = vectors.size();
    if (sigma.size() != n) throw std::invalid_argument("rearrangement_check: permutation size");
    bool identity = true;
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (sigma[i] >= n || seen[sigma[i]]) throw std::invalid_argument("rearrangement_check: not a permutation");
        seen[sigma[i]] = true;
        if (sigma[i] != i) identity = false;
    }
    if (identity) throw std::invalid_argument("rearrangement_check: identity permutation has no claim");
    for (std::size_t i = 0; i < n; ++i) {
        for (const long long v : vectors[i])
            if (v < 0) throw std::invalid_argument("rearrangement_check: negative entry");
        for (std::size_t j = i + 1; j < n; ++j)
            if (vectors[i] == vectors[j])
                throw std::invalid_argument("rearrangement_check: duplicate vectors");
    }
    BigInt lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = vectors[i];
        const auto& b = vectors[sigma[i]];
        if (a.size() != b.size()) throw std::invalid_argument("rearrangement_check: dimension mismatch");
        for (std::size_t c = 0; c < a.size(); ++c) {
            lhs += BigInt(a[c]) * BigInt(b[c]);
            rhs += BigInt(a[c]) * BigInt(a[c]);
        }
    }
    return lhs < rhs;
}

BigInt rho_star(const StateVector& p_hat, std::uint64_t omega) {
    BigInt total = 0;
    BigInt wpow = 1;
    for (std::size_t r = 0; r < p_hat.counts.size(); ++r) {
        wpow *= BigInt::from_u64(omega);
        const std::uint64_t c = p_hat.counts[r];
        total += wpow * BigInt::from_u64(c * (c + 1) / 2);
    }
    return total;
}

namespace {

void check_bucket_args(const std::vector<std::size_t>& d, const StateVector& p) {
    if (d.size() != p.total())
        throw std::invalid_argument("bucket reward: color sequence length must equal ball count");
    for (std::size_t c : d)
        if (c == 0 || c > p.counts.size())
            throw std::invalid_argument("bucket reward: color outside [rbar]");
}

BigInt reward_exhaustive(std::vector<std::size_t>& q, std::size_t step,
                         const std::vector<std::size_t>& d, const std::vector<BigInt>& wpow) {
    // Reward reads the state before the removal at this step.
    BigInt here = wpow[d[step] - 1] * BigInt::from_u64(q[d[step] - 1]);
    if (step + 1 == d.size()) return here;
    bool any = false;
    BigInt best = 0;
    for (std::size_t c = 0; c < q.size(); ++c) {
        if (q[c] == 0) continue;
        --q[c];
        BigInt sub = reward_exhaustive(q, step + 1, d, wpow);
        ++q[c];
        if (!any || sub > best) {
            best = std::move(sub);
            any = true;
        }
    }
    return here + best;
}

}  // namespace

BigInt bucket_reward_optimal(const std::vector<std::size_t>& d, const StateVector& p,
                             std::uint64_t omega) {
    check_bucket_args(d, p);
    if (p.total() == 0) return 0;
    if (p.total() > 10) throw CapExceeded("bucket_reward_optimal: bucket too large");
    std::vector<BigInt> wpow(p.counts.size());
    BigInt w = 1;
    for (std::size_t r = 0; r < p.counts.size(); ++r) {
        w *= BigInt::from_u64(omega);
        wpow[r] = w;
    }
    std::vector<std::size_t> q = p.counts;
    return reward_exhaustive(q, 0, d, wpow);
}

BigInt bucket_reward_dp(const std::vector<std::size_t>& d, const StateVector& p,
                        std::uint64_t omega) {
    check_bucket_args(d, p);
    const std::size_t k = p.total();
    if (k == 0) return 0;
    std::vector<BigInt> wpow(p.counts.size());
    BigInt w = 1;
    for (std::size_t r = 0; r < p.counts.size(); ++r) {
        w *= BigInt::from_u64(omega);
        wpow[r] = w;
    }
    // Mixed-radix encoding of sub-states bounded by the initial counts.
    std::vector<std::size_t> radix(p.counts.size());
    std::size_t span = 1;
    for (std::size_t r = 0; r < p.counts.size(); ++r) {
        radix[r] = span;
        span *= p.counts[r] + 1;
    }
    auto encode = [&](const std::vector<std::size_t>& q) {
        std::size_t code = 0;
        for (std::size_t r = 0; r < q.size(); ++r) code += q[r] * radix[r];
        return code;
    };
    std::vector<BigInt> memo(span);
    std::vector<bool> have(span, false);
    std::function<BigInt(std::vector<std::size_t>&, std::size_t)> rec =
        [&](std::vector<std::size_t>& q, std::size_t step) -> BigInt {
        const std::size_t code = encode(q);
        if (have[code]) return memo[code];
        BigInt here = wpow[d[step] - 1] * BigInt::from_u64(q[d[step] - 1]);
        if (step + 1 < d.size()) {
            bool any = false;
            BigInt best = 0;
            for (std::size_t c = 0; c < q.size(); ++c) {
                if (q[c] == 0) continue;
                --q[c];
                BigInt sub = rec(q, step + 1);
                ++q[c];
                if (!any || sub > best) {
                    best = std::move(sub);
                    any = true;
                }
            }
            here += best;
        }
        have[code] = true;
        memo[code] = here;
        return memo[code];
    };
    std::vector<std::size_t> q = p.counts;
    return rec(q, 0);
}

bool verify_unique_argmax(const std::vector<std::size_t>& d, std::uint64_t omega,
                          std::size_t rbar) {
    for (std::size_t j = 0; j + 1 < d.size(); ++j)
        if (d[j] > d[j + 1]) throw std::invalid_argument("verify_unique_argmax: d must be sorted");
    const std::size_t k = d.size();
    StateVector p_hat;
    p_hat.counts.assign(rbar, 0);
    for (std::size_t c : d) {
        if (c == 0 || c > rbar) throw std::invalid_argument("verify_unique_argmax: color range");
        ++p_hat.counts[c - 1];
    }
    BigInt best_at_hat;
    bool found_hat = false;
    for (const StateVector& p : enumerate_states(rbar, k)) {
        if (p == p_hat) {
            best_at_hat = bucket_reward_dp(d, p, omega);
            found_hat = true;
            break;
        }
    }
    if (!found_hat) return false;
    for (const StateVector& p : enumerate_states(rbar, k)) {
        if (p == p_hat) continue;
        if (!(bucket_reward_dp(d, p, omega) < best_at_hat)) return false;
    }
    return true;
}

BigInt repetition_count_nested(std::size_t t_steps, std::size_t depth) {
    if (t_steps % 2 != 0 || t_steps == 0)
        throw std::invalid_argument("repetition_count: even T >= 2 required");
    if (depth == 0) throw std::invalid_argument("repetition_count: L >= 1 required");
    // Count weakly increasing tuples (t_2 <= ... <= t_L) in {T/2+1..T}; only
    // the tuple count matters — each factor of the chain of products holds
    // the start-end unit once. L = 1 has the empty tuple alone.
    BigInt count = 0;
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t level, std::size_t hi) {
        if (level == 1) {
            count += 1;
            return;
        }
        for (std::size_t t = t_steps / 2 + 1; t <= hi; ++t) rec(level - 1, t);
    };
    rec(depth, t_steps);
    return count;
}

BigInt repetition_count(std::size_t t_steps, std::size_t depth) {
    BigInt nested = repetition_count_nested(t_steps, depth);
    BigInt closed = multiset_coeff(t_steps / 2, depth - 1);
    if (nested != closed) throw NumericError("repetition_count: nested sum != closed form");
    return closed;
}

std::size_t min_cut_mps_rank(std::size_t r, std::size_t m, std::size_t t_steps) {
    if (t_steps % 2 != 0) throw std::invalid_argument("min_cut_mps_rank: even T required");
    if (m == 0) throw std::invalid_argument("min_cut_mps_rank: M >= 1 required");
    std::size_t cut = 1;
    for (std::size_t i = 0; i < t_steps / 2; ++i) {
        if (cut >= r) return r;  // M^{T/2} can only grow past R from here
        cut *= m;
    }
    return std::min(r, cut);
}

std::size_t sep_rank_shallow(const RacNetwork<Rational>& net, std::size_t t_steps,
                             std::size_t klass, std::size_t cap) {
    if (t_steps % 2 != 0) throw std::invalid_argument("sep_rank_shallow: even T required");
    DenseTensor<Rational> a = build_weights_tensor_tt(net, klass, t_steps, cap);
    return exact_rank(matricize(a, Partition::start_end(t_steps)));
}

std::size_t sep_rank_shallow_float(const RacNetwork<double>& net, std::size_t t_steps,
                                   std::size_t klass, double rel_tol, std::size_t cap) {
    if (t_steps % 2 != 0) throw std::invalid_argument("sep_rank_shallow_float: even T required");
    DenseTensor<double> a = build_weights_tensor_tt(net, klass, t_steps, cap);
    return numeric_rank(matricize(a, Partition::start_end(t_steps)), rel_tol);
}

std::size_t sep_rank_lower_bound(const DenseTensor<Rational>& grid) {
    return exact_rank(matricize(grid, Partition::start_end(grid.order())));
}

std::size_t sep_rank_lower_bound_float(const DenseTensor<double>& grid, double rel_tol) {
    return numeric_rank(matricize(grid, Partition::start_end(grid.order())), rel_tol);
}

std::size_t brute_force_sep_rank(const std::function<Rational(const std::vector<std::size_t>&)>& eval,
                                 std::size_t m, std::size_t t_steps, std::size_t cap) {
    DenseTensor<Rational> grid = grid_tensor<Rational>(eval, m, t_steps, cap);
    return sep_rank_lower_bound(grid);
}

RacNetwork<Rational> random_rational_shallow_net(std::size_t m, std::size_t r, std::size_t classes,
                                                 Rng& rng) {
    // [-99, 99] keeps the arithmetic exact while making the degenerate
    // (rank-deficient) integer draws rare enough for a 95% pass-rate check.
    std::uniform_int_distribution<int> coef(-99, 99);
    auto fill = [&](Mat<Rational>& mat) {
        for (;;) {
            bool bad_row = false;
            for (std::size_t i = 0; i < mat.rows; ++i) {
                bool all_zero = true;
                for (std::size_t j = 0; j < mat.cols; ++j) {
                    int c = coef(rng);
                    mat(i, j) = Rational(c);
                    if (c != 0) all_zero = false;
                }
                if (all_zero) bad_row = true;
            }
            if (!bad_row) return;
        }
    };
    RacNetwork<Rational> net;
    net.nonlin = Nonlin::Rac;
    net.embed_dim = m;
    net.channels = r;
    net.num_classes = classes;
    LayerWeights<Rational> lw;
    lw.w_in = Mat<Rational>(r, m);
    fill(lw.w_in);
    lw.w_hid = Mat<Rational>(r, r);
    do {
        fill(lw.w_hid);
    } while (!rational_inverse(lw.w_hid));  // invertible a.e.; resample the null set
    lw.h0 = pseudo_inverse_init(lw.w_hid);
    net.layers.push_back(std::move(lw));
    net.w_out = Mat<Rational>(classes, r);
    fill(net.w_out);
    net.validate();
    return net;
}

RacNetwork<double> random_float_deep_net(std::size_t depth, std::size_t m, std::size_t r,
                                         std::size_t classes, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RacNetwork<double> net;
    net.nonlin = Nonlin::Rac;
    net.embed_dim = m;
    net.channels = r;
    net.num_classes = classes;
    for (std::size_t l = 0; l < depth; ++l) {
        LayerWeights<double> lw;
        lw.w_in = Mat<double>(r, l == 0 ? m : r);
        lw.w_hid = Mat<double>(r, r);
        for (auto& x : lw.w_in.a) x = u(rng);
        for (auto& x : lw.w_hid.a) x = u(rng);
        lw.h0 = pseudo_inverse_init(lw.w_hid);
        net.layers.push_back(std::move(lw));
    }
    net.w_out = Mat<double>(classes, r);
    for (auto& x : net.w_out.a) x = u(rng);
    net.validate();
    return net;
}

SepRankReport verify_theorem_shallow(std::size_t m, std::size_t r, std::size_t t_steps,
                                     std::size_t trials, Rng& rng, std::size_t cap) {
    SepRankReport rep;
    rep.check = "theorem-shallow";
    rep.m = m;
    rep.r = r;
    rep.t = t_steps;
    rep.l = 1;
    rep.exact = true;
    rep.trials = trials;
    const std::size_t expected = min_cut_mps_rank(r, m, t_steps);
    rep.expected = BigInt::from_u64(expected);
    bool exceeded = false;
    std::size_t max_seen = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        RacNetwork<Rational> net = random_rational_shallow_net(m, r, 1, rng);
        std::size_t rank = sep_rank_shallow(net, t_steps, 0, cap);
        max_seen = std::max(max_seen, rank);
        if (rank != expected) ++rep.failures;
        if (rank > expected) exceeded = true;
    }
    rep.measured = static_cast<long long>(max_seen);
    const bool pass_rate = (trials - rep.failures) * 20 >= trials * 19;  // >= 95%
    rep.verdict = (!exceeded && pass_rate) ? Verdict::Equal : Verdict::Violation;
    return rep;
}

SepRankReport verify_theorem_deep(std::size_t m, std::size_t r, std::size_t t_steps,
                                  const Rational& z, std::uint64_t omega, std::size_t float_trials,
                                  Rng& rng, std::size_t cap) {
    SepRankReport rep;
    rep.check = "theorem-deep";
    rep.m = m;
    rep.r = r;
    rep.t = t_steps;
    rep.l = 2;
    rep.exact = true;
    rep.expected = multiset_coeff(std::min(m, r), t_steps / 2);
    DenseTensor<Rational> grid = deep_grid_closed_form(m, r, t_steps, z, omega, cap);
    std::size_t rank = sep_rank_lower_bound(grid);
    rep.measured = static_cast<long long>(rank);
    rep.verdict = BigInt::from_u64(rank) >= rep.expected ? Verdict::AtLeast : Verdict::Violation;
    // Float trials on generic weights demonstrate genericity; recorded only.
    rep.trials = float_trials;
    for (std::size_t i = 0; i < float_trials; ++i) {
        RacNetwork<double> net = random_float_deep_net(2, m, r, 1, rng);
        DenseTensor<double> g = grid_tensor<double>(
            [&](const std::vector<std::size_t>& tokens) { return deep_forward(net, tokens)[0]; }, m,
            t_steps, cap);
        if (BigInt::from_u64(sep_rank_lower_bound_float(g)) < rep.expected) ++rep.failures;
    }
    return rep;
}

SepRankReport verify_min_cut(std::size_t r, std::size_t m, std::size_t t_steps, std::size_t trials,
                             Rng& rng, double rel_tol, std::size_t cap) {
    SepRankReport rep;
    rep.check = "min-cut";
    rep.m = m;
    rep.r = r;
    rep.t = t_steps;
    rep.l = 1;
    rep.exact = false;
    rep.trials = trials;
    const std::size_t expected = min_cut_mps_rank(r, m, t_steps);
    rep.expected = BigInt::from_u64(expected);
    std::normal_distribution<double> gauss(0.0, 1.0);
    bool exceeded = false;
    std::size_t max_seen = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        MpsChain<double> chain;
        for (std::size_t t = 0; t < t_steps; ++t) {
            DenseTensor<double> core({r, m, r});
            for (auto& x : core.v) x = gauss(rng);
            chain.cores.push_back(std::move(core));
        }
        chain.left.resize(r);
        chain.right.resize(r);
        for (auto& x : chain.left) x = gauss(rng);
        for (auto& x : chain.right) x = gauss(rng);
        DenseTensor<double> full = mps_contract(chain, cap);
        std::size_t rank = numeric_rank(matricize(full, Partition::start_end(t_steps)), rel_tol);
        max_seen = std::max(max_seen, rank);
        if (rank != expected) ++rep.failures;
        if (rank > expected) exceeded = true;
    }
    rep.measured = static_cast<long long>(max_seen);
    const bool pass_rate = (trials - rep.failures) * 20 >= trials * 19;
    rep.verdict = (!exceeded && pass_rate) ? Verdict::Equal : Verdict::Violation;
    return rep;
}

SepRankReport verify_hadamard_bound(std::size_t trials, Rng& rng) {
    SepRankReport rep;
    rep.check = "hadamard-bound";
    rep.exact = false;
    rep.trials = trials;
    std::uniform_int_distribution<std::size_t> rank_dist(1, 3);
    std::uniform_int_distribution<std::size_t> size_dist(2, 8);
    std::uniform_int_distribution<std::uint64_t> pow_dist(0, 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t it = 0; it < trials; ++it) {
        const std::size_t rr = rank_dist(rng);
        const std::size_t n = std::max(size_dist(rng), rr), m2 = std::max(size_dist(rng), rr);
        Mat<double> mat(n, m2);
        for (std::size_t component = 0; component < rr; ++component) {
            std::vector<double> x(n), y(m2);
            for (auto& v : x) v = u(rng);
            for (auto& v : y) v = u(rng);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m2; ++j) mat(i, j) += x[i] * y[j];
        }
        const std::uint64_t p = pow_dist(rng);
        const std::size_t rank = numeric_rank(hadamard_power(mat, p));
        const BigInt bound = multiset_coeff(rr, p);
        rep.m = m2;
        rep.r = rr;
        rep.measured = static_cast<long long>(rank);
        rep.expected = bound;
        if (BigInt::from_u64(rank) > bound) ++rep.failures;
    }
    rep.verdict = rep.failures == 0 ? Verdict::AtLeast : Verdict::Violation;
    return rep;
}

PolySpotcheck poly_full_rank_spotcheck(
    const std::function<Mat<Rational>(const Rational&)>& family,
    const std::vector<Rational>& samples, std::size_t target_rank) {
    if (samples.size() < 3)
        throw std::invalid_argument("poly_full_rank_spotcheck: at least 3 sample points");
    PolySpotcheck out;
    for (const Rational& x : samples) {
        if (exact_rank(family(x)) < target_rank) out.deficient.push_back(x);
    }
    out.ok = out.deficient.size() < samples.size();
    return out;
}

}  // namespace seprank
