#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "collision_lab/config.hpp"
#include "collision_lab/errors.hpp"
#include "collision_lab/exact_dist.hpp"
#include "collision_lab/rational.hpp"

namespace collision_lab {

/// Stateless 64-bit mixer (splitmix64 finalizer). Used both to derive
/// per-trial seeds and as the per-trial generator, so simulation results
/// depend only on (seed, trial index), never on the thread count.
[[nodiscard]] inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class trial_rng {
  public:
    explicit trial_rng(std::uint64_t seed) : state_(seed) {}

    [[nodiscard]] std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) by rejection on the top bits
    /// (Lemire's multiply-shift method).
    [[nodiscard]] std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::logic_error("trial_rng::below: zero bound");
        using u128 = unsigned __int128;
        std::uint64_t x = next();
        u128 m = static_cast<u128>(x) * static_cast<u128>(bound);
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next();
                m = static_cast<u128>(x) * static_cast<u128>(bound);
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    [[nodiscard]] double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

/// Seed for trial i of a run: a two-step hash so neighbouring trials are
/// decorrelated and distinct runs with distinct seeds never share streams.
[[nodiscard]] inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
    return mix64(mix64(seed) + trial);
}

/// Worker count: COLLISION_LAB_THREADS if set, otherwise the hardware count.
[[nodiscard]] inline unsigned worker_count() {
    if (const char* env = std::getenv("COLLISION_LAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(std::min(v, 256L));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? hw : 1;
}

struct simulation_report {
    process_mode mode = process_mode::K1;
    int r = 2;
    long trials = 0;
    std::uint64_t seed = 0;
    double mean = 0;
    double std_error = 0;
    /// (k, fraction of trials with waiting time > k), up to the largest
    /// observed waiting time minus one; later fractions are all zero.
    std::vector<std::pair<long, double>> empirical_survival;
    std::map<std::string, double> extras;
};

namespace detail {

/// Accumulator merged across threads. All members are integer counts, so the
/// merge is exact and the merged result is independent of the partition.
struct sim_accumulator {
    std::vector<std::uint64_t> hist; ///< hist[t] = number of trials with T = t
    long double sum = 0;
    long double sum_sq = 0;
    std::uint64_t true_collision = 0; ///< trials with K = R (K2 mode only)

    void record(long t) {
        if (hist.size() <= static_cast<std::size_t>(t)) hist.resize(static_cast<std::size_t>(t) + 1, 0);
        ++hist[static_cast<std::size_t>(t)];
        sum += t;
        sum_sq += static_cast<long double>(t) * t;
    }
    void merge(const sim_accumulator& o) {
        if (hist.size() < o.hist.size()) hist.resize(o.hist.size(), 0);
        for (std::size_t i = 0; i < o.hist.size(); ++i) hist[i] += o.hist[i];
        sum += o.sum;
        sum_sq += o.sum_sq;
        true_collision += o.true_collision;
    }
};

/// Reusable per-thread drawing state for one configuration.
struct urn_state {
    std::vector<long> colour_of;   ///< ball index -> cell index
    std::vector<long> balls;       ///< permutation workspace for K1
    std::vector<long> count;       ///< per-cell Y (K1) or Z (R) or Y (K2)
    std::vector<long> count2;      ///< per-cell Z for joint K2 trials
    std::vector<unsigned char> seen; ///< per-ball flag for with-replacement Y
    std::vector<long> touched;     ///< cells touched this trial
    std::vector<long> touched_balls;

    explicit urn_state(const configuration& cfg) {
        colour_of.reserve(static_cast<std::size_t>(cfg.n));
        for (std::size_t c = 0; c < cfg.sizes.size(); ++c)
            for (long j = 0; j < cfg.sizes[c]; ++j) colour_of.push_back(static_cast<long>(c));
        balls = colour_of; // K1 shuffles colours directly; ball identity is immaterial there
        count.assign(cfg.sizes.size(), 0);
        count2.assign(cfg.sizes.size(), 0);
        seen.assign(colour_of.size(), 0);
    }

    void reset_counts() {
        for (long c : touched) {
            count[static_cast<std::size_t>(c)] = 0;
            count2[static_cast<std::size_t>(c)] = 0;
        }
        touched.clear();
        for (long b : touched_balls) seen[static_cast<std::size_t>(b)] = 0;
        touched_balls.clear();
    }
};

/// One K1 trial: partial Fisher-Yates over the colour multiset, undone
/// afterwards so each trial costs O(K), not O(n).
[[nodiscard]] inline long run_trial_K1(urn_state& st, int r, trial_rng& rng) {
    const auto n = static_cast<std::uint64_t>(st.balls.size());
    long result = 0;
    std::vector<std::pair<std::size_t, std::size_t>> swaps;
    for (std::uint64_t j = 0; j < n; ++j) {
        const std::size_t pick = static_cast<std::size_t>(j + rng.below(n - j));
        if (pick != j) {
            std::swap(st.balls[static_cast<std::size_t>(j)], st.balls[pick]);
            swaps.emplace_back(static_cast<std::size_t>(j), pick);
        }
        const long c = st.balls[static_cast<std::size_t>(j)];
        if (st.count[static_cast<std::size_t>(c)] == 0) st.touched.push_back(c);
        if (++st.count[static_cast<std::size_t>(c)] == r) {
            result = static_cast<long>(j) + 1;
            break;
        }
    }
    for (auto it = swaps.rbegin(); it != swaps.rend(); ++it)
        std::swap(st.balls[it->first], st.balls[it->second]);
    st.reset_counts();
    if (result == 0) throw std::logic_error("run_trial_K1: no r-fold cell reached");
    return result;
}

/// One with-replacement trial, tracking per-cell draw counts Z and distinct
/// counts Y jointly. Returns (R, K2); for mode R the caller stops reading at
/// the first component and we exit as soon as Z hits r.
[[nodiscard]] inline std::pair<long, long> run_trial_with_replacement(urn_state& st, int r,
                                                                      trial_rng& rng,
                                                                      bool need_K2) {
    const auto n = static_cast<std::uint64_t>(st.colour_of.size());
    long R = 0, K2 = 0;
    for (long k = 1;; ++k) {
        const auto b = static_cast<std::size_t>(rng.below(n));
        const auto c = static_cast<std::size_t>(st.colour_of[b]);
        if (st.count[c] == 0 && st.count2[c] == 0) st.touched.push_back(static_cast<long>(c));
        if (++st.count2[c] == r && R == 0) {
            R = k;
            if (!need_K2) break;
        }
        if (!st.seen[b]) {
            st.seen[b] = 1;
            st.touched_balls.push_back(static_cast<long>(b));
            if (++st.count[c] == r) {
                K2 = k;
                break;
            }
        }
    }
    st.reset_counts();
    return {R, K2};
}

[[nodiscard]] inline simulation_report finalize_report(process_mode mode, int r, long trials,
                                                       std::uint64_t seed,
                                                       const sim_accumulator& acc) {
    simulation_report rep;
    rep.mode = mode;
    rep.r = r;
    rep.trials = trials;
    rep.seed = seed;
    const auto nt = static_cast<long double>(trials);
    rep.mean = static_cast<double>(acc.sum / nt);
    if (trials > 1) {
        const long double var = (acc.sum_sq - acc.sum * acc.sum / nt) / (nt - 1);
        rep.std_error = static_cast<double>(std::sqrt(std::max(var, 0.0L) / nt));
    }
    // survival fraction P(T > k) via a suffix sum over the histogram
    std::uint64_t above = 0;
    for (std::size_t i = 0; i < acc.hist.size(); ++i) above += acc.hist[i];
    for (std::size_t k = 0; k + 1 < acc.hist.size(); ++k) {
        above -= acc.hist[k];
        rep.empirical_survival.emplace_back(static_cast<long>(k),
                                            static_cast<double>(static_cast<long double>(above) / nt));
    }
    if (mode == process_mode::K2) {
        rep.extras["fraction_true_collision"] =
            static_cast<double>(static_cast<long double>(acc.true_collision) / nt);
        rep.extras["fraction_repeat_first"] =
            1.0 - rep.extras["fraction_true_collision"];
    }
    return rep;
}

template <typename TrialFn>
[[nodiscard]] inline sim_accumulator run_parallel_trials(long trials, std::uint64_t seed,
                                                         const TrialFn& make_worker) {
    const unsigned workers =
        static_cast<unsigned>(std::min<long>(worker_count(), std::max<long>(trials, 1)));
    std::vector<sim_accumulator> accs(workers);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    const long chunk = (trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const long lo = static_cast<long>(w) * chunk;
        const long hi = std::min(trials, lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&, w, lo, hi] {
            try {
                make_worker(accs[w], lo, hi, seed);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    sim_accumulator total;
    for (const auto& a : accs) total.merge(a);
    return total;
}

} // namespace detail

/// Monte Carlo estimate of the chosen waiting time. Reproducible: the result
/// depends only on the arguments, not on the worker count.
[[nodiscard]] inline simulation_report simulate_waiting_times(const configuration& cfg, int r,
                                                              process_mode mode, long trials,
                                                              std::uint64_t seed) {
    if (r < 2) throw domain_error("simulate_waiting_times: r must be at least 2");
    if (trials < 1) throw invalid_query_error("simulate_waiting_times: trials must be positive");
    if (mode != process_mode::R) require_collision_possible(cfg, r);
    if (cfg.n < 1) throw invalid_query_error("simulate_waiting_times: empty configuration");

    auto worker = [&](detail::sim_accumulator& acc, long lo, long hi, std::uint64_t s) {
        detail::urn_state st(cfg);
        for (long i = lo; i < hi; ++i) {
            trial_rng rng(trial_seed(s, static_cast<std::uint64_t>(i)));
            switch (mode) {
                case process_mode::K1: acc.record(detail::run_trial_K1(st, r, rng)); break;
                case process_mode::R:
                    acc.record(detail::run_trial_with_replacement(st, r, rng, false).first);
                    break;
                case process_mode::K2: {
                    const auto [R, K2] = detail::run_trial_with_replacement(st, r, rng, true);
                    acc.record(K2);
                    if (R == K2) ++acc.true_collision;
                    break;
                }
            }
        }
    };
    const detail::sim_accumulator acc = detail::run_parallel_trials(trials, seed, worker);
    return detail::finalize_report(mode, r, trials, seed, acc);
}

/// Two-stage experiment: each trial first fills the urn with a multinomial
/// configuration (model.n balls over m cells with the model's probabilities),
/// then runs the drawing process on the realised urn.
[[nodiscard]] inline simulation_report simulate_two_stage(const multinomial_model& model, long m,
                                                          int r, process_mode mode, long trials,
                                                          std::uint64_t seed) {
    if (r < 2) throw domain_error("simulate_two_stage: r must be at least 2");
    if (trials < 1) throw invalid_query_error("simulate_two_stage: trials must be positive");
    if (m != static_cast<long>(model.probs.size()))
        throw invalid_query_error("simulate_two_stage: m must equal the number of probabilities");

    std::vector<double> cdf(model.probs.size());
    double acc_p = 0;
    for (std::size_t i = 0; i < model.probs.size(); ++i) {
        acc_p += to_double(model.probs[i]);
        cdf[i] = acc_p;
    }
    cdf.back() = 1.0;

    const auto n = static_cast<std::size_t>(model.n);
    auto worker = [&](detail::sim_accumulator& acc, long lo, long hi, std::uint64_t s) {
        std::vector<long> colour_of(n);
        std::vector<long> count(model.probs.size(), 0);
        std::vector<long> count2(model.probs.size(), 0);
        std::vector<unsigned char> seen(n, 0);
        for (long i = lo; i < hi; ++i) {
            trial_rng rng(trial_seed(s, static_cast<std::uint64_t>(i)));
            // Stage 1: i.i.d. colours by cdf inversion. The creation order of
            // the balls is exchangeable, so for the without-replacement mode
            // reading them in this order IS a uniform draw order.
            for (std::size_t b = 0; b < n; ++b) {
                const double u = rng.uniform01();
                colour_of[b] = static_cast<long>(
                    std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                if (colour_of[b] >= static_cast<long>(cdf.size()))
                    colour_of[b] = static_cast<long>(cdf.size()) - 1;
            }
            std::fill(count.begin(), count.end(), 0);
            std::fill(count2.begin(), count2.end(), 0);
            std::fill(seen.begin(), seen.end(), 0);
            long result = 0;
            bool hit = false;
            switch (mode) {
                case process_mode::K1: {
                    for (std::size_t k = 0; k < n; ++k) {
                        const auto c = static_cast<std::size_t>(colour_of[k]);
                        if (++count[c] == r) {
                            result = static_cast<long>(k) + 1;
                            hit = true;
                            break;
                        }
                    }
                    if (!hit)
                        throw invalid_query_error(
                            "simulate_two_stage: a K1 trial ran out of balls; with these "
                            "probabilities an r-fold cell is not guaranteed");
                    acc.record(result);
                    break;
                }
                case process_mode::R:
                case process_mode::K2: {
                    long R = 0, K2 = 0;
                    for (long k = 1;; ++k) {
                        const auto b = static_cast<std::size_t>(
                            rng.below(static_cast<std::uint64_t>(n)));
                        const auto c = static_cast<std::size_t>(colour_of[b]);
                        if (++count2[c] == r && R == 0) {
                            R = k;
                            if (mode == process_mode::R) break;
                        }
                        if (!seen[b]) {
                            seen[b] = 1;
                            if (++count[c] == r) {
                                K2 = k;
                                break;
                            }
                        }
                    }
                    if (mode == process_mode::R) {
                        acc.record(R);
                    } else {
                        acc.record(K2);
                        if (R == K2) ++acc.true_collision;
                    }
                    break;
                }
            }
        }
    };
    const detail::sim_accumulator total = detail::run_parallel_trials(trials, seed, worker);
    return detail::finalize_report(mode, r, trials, seed, total);
}

/// Exhaustive ground truth on tiny instances: enumerate every equiprobable
/// ordered draw sequence and count the prefixes without an r-fold hit.
[[nodiscard]] inline survival_table brute_force_survival(const configuration& cfg, int r,
                                                         process_mode mode, long k_max) {
    if (r < 2) throw domain_error("brute_force_survival: r must be at least 2");
    if (k_max < 0) throw out_of_range_error("brute_force_survival: k_max must be nonnegative");
    if (mode != process_mode::R) require_collision_possible(cfg, r);
    if (cfg.n < 1) throw invalid_query_error("brute_force_survival: empty configuration");

    const bool with_replacement = mode != process_mode::K1;
    const long depth_cap = with_replacement ? k_max : std::min(k_max, cfg.n);
    // Feasibility guard: the enumeration touches sum_{k<=cap} (#sequences of
    // length k) nodes, bounded by twice the count at the deepest level.
    {
        double work = 1;
        for (long k = 0; k < depth_cap; ++k) {
            work *= static_cast<double>(with_replacement ? cfg.n : cfg.n - k);
            if (work > 1e7)
                throw resource_error(
                    "brute_force_survival: more than 1e7 draw sequences; shrink n or k_max");
        }
    }

    const auto n = static_cast<std::size_t>(cfg.n);
    std::vector<long> colour_of;
    for (std::size_t c = 0; c < cfg.sizes.size(); ++c)
        for (long j = 0; j < cfg.sizes[c]; ++j) colour_of.push_back(static_cast<long>(c));

    std::vector<Int> surviving(static_cast<std::size_t>(depth_cap) + 1, Int(0));
    surviving[0] = 1;
    std::vector<long> countY(cfg.sizes.size(), 0), countZ(cfg.sizes.size(), 0);
    std::vector<unsigned char> used(n, 0); // drawn already (K1) / seen (K2)

    // Depth-first over ball choices; a prefix is counted at every depth it
    // survives, and subtrees below an r-fold hit are pruned.
    auto dfs = [&](auto&& self, long depth) -> void {
        if (depth == depth_cap) return;
        for (std::size_t b = 0; b < n; ++b) {
            if (!with_replacement && used[b]) continue;
            const auto c = static_cast<std::size_t>(colour_of[b]);
            bool hit = false;
            bool marked = false;
            switch (mode) {
                case process_mode::K1:
                    used[b] = 1;
                    marked = true;
                    hit = ++countY[c] == r;
                    break;
                case process_mode::R: hit = ++countZ[c] == r; break;
                case process_mode::K2:
                    ++countZ[c];
                    if (!used[b]) {
                        used[b] = 1;
                        marked = true;
                        hit = ++countY[c] == r;
                    }
                    break;
            }
            if (!hit) {
                surviving[static_cast<std::size_t>(depth) + 1] += 1;
                self(self, depth + 1);
            }
            switch (mode) {
                case process_mode::K1:
                    --countY[c];
                    break;
                case process_mode::R: --countZ[c]; break;
                case process_mode::K2:
                    --countZ[c];
                    if (marked) --countY[c];
                    break;
            }
            if (marked) used[b] = 0;
        }
    };
    dfs(dfs, 0);

    survival_table out;
    out.mode = mode;
    out.r = r;
    out.exact = true;
    Int denom(1);
    for (long k = 0; k <= k_max; ++k) {
        if (k > 0) denom *= Int(with_replacement ? cfg.n : cfg.n - (k - 1));
        Rat p(0);
        if (k <= depth_cap && (with_replacement || k <= cfg.n)) {
            p = Rat(surviving[static_cast<std::size_t>(k)], denom);
            p.canonicalize();
        }
        out.entries.push_back(prob_value::from_rat(p));
    }
    return out;
}

/// Exact distributions of the number of cyclic points Z(f) over the uniform
/// law on the mappings with the given preimage-size configuration, and of the
/// trajectory length rho(x, f) = min{j : f^j(x) revisits an earlier point}
/// over the uniform law on (starting point, mapping).
struct fixed_indegree_distributions {
    std::vector<std::pair<long, Rat>> Z_distribution;   ///< (z, P(Z = z))
    std::vector<std::pair<long, Rat>> rho_distribution; ///< (l, P(rho = l))
    Int mappings; ///< |F_c| = multinomial(n; x)
};

namespace detail {

/// A mapping of {1..n} to itself with the given preimage sizes needs every
/// ball to land back inside the domain: at least n cells listed, and no mass
/// on a cell with index beyond n.
inline void require_self_mapping(const configuration& cfg, const char* who) {
    if (static_cast<long>(cfg.sizes.size()) < cfg.n)
        throw invalid_query_error(std::string(who) +
                                  ": a self-mapping needs at least n cells (pad with zeros)");
    for (std::size_t c = static_cast<std::size_t>(cfg.n); c < cfg.sizes.size(); ++c)
        if (cfg.sizes[c] != 0)
            throw invalid_query_error(std::string(who) +
                                      ": cells beyond index n must be empty for a self-mapping");
}

} // namespace detail

[[nodiscard]] inline fixed_indegree_distributions enumerate_fixed_indegree(
    const configuration& cfg) {
    if (cfg.n < 1) throw invalid_query_error("enumerate_fixed_indegree: empty configuration");
    detail::require_self_mapping(cfg, "enumerate_fixed_indegree");
    const Int total = multinomial_int(cfg.sizes);
    if (total > 1000000)
        throw resource_error("enumerate_fixed_indegree: more than 1e6 mappings; shrink n");

    const auto n = static_cast<std::size_t>(cfg.n);
    std::vector<long> values; // multiset of images, one entry per domain point
    for (std::size_t c = 0; c < cfg.sizes.size(); ++c)
        for (long j = 0; j < cfg.sizes[c]; ++j) values.push_back(static_cast<long>(c));
    std::sort(values.begin(), values.end());

    std::map<long, Int> z_counts;
    std::map<long, Int> rho_counts;
    std::vector<long> state(n), order(n);
    do {
        // Z(f): peel non-cyclic points by walking each unresolved trajectory.
        // state: 0 unknown, 1 on current walk (order = position), 2 resolved.
        std::fill(state.begin(), state.end(), 0);
        long cyclic = 0;
        for (std::size_t start = 0; start < n; ++start) {
            if (state[start] != 0) continue;
            std::vector<std::size_t> path;
            std::size_t v = start;
            while (state[v] == 0) {
                state[v] = 1;
                order[v] = static_cast<long>(path.size());
                path.push_back(v);
                v = static_cast<std::size_t>(values[v]);
            }
            if (state[v] == 1) cyclic += static_cast<long>(path.size()) - order[v];
            for (std::size_t u : path) state[u] = 2;
        }
        z_counts[cyclic] += 1;
        // rho(x, f) for every starting point x: first revisit of any earlier
        // trajectory point (the start itself included).
        for (std::size_t start = 0; start < n; ++start) {
            std::fill(state.begin(), state.end(), 0);
            std::size_t v = start;
            long steps = 0;
            while (state[v] == 0) {
                state[v] = 1;
                v = static_cast<std::size_t>(values[v]);
                ++steps;
            }
            rho_counts[steps] += 1;
        }
    } while (std::next_permutation(values.begin(), values.end()));

    fixed_indegree_distributions out;
    out.mappings = total;
    for (const auto& [z, count] : z_counts) {
        Rat p(count, total);
        p.canonicalize();
        out.Z_distribution.emplace_back(z, p);
    }
    const Int denom = total * Int(cfg.n);
    for (const auto& [l, count] : rho_counts) {
        Rat p(count, denom);
        p.canonicalize();
        out.rho_distribution.emplace_back(l, p);
    }
    return out;
}

/// One uniform sample from the mappings with the given configuration: a
/// uniformly random permutation of the value multiset.
[[nodiscard]] inline std::vector<long> sample_fixed_indegree(const configuration& cfg,
                                                             std::uint64_t seed) {
    detail::require_self_mapping(cfg, "sample_fixed_indegree");
    std::vector<long> values;
    for (std::size_t c = 0; c < cfg.sizes.size(); ++c)
        for (long j = 0; j < cfg.sizes[c]; ++j) values.push_back(static_cast<long>(c));
    trial_rng rng(mix64(seed));
    for (std::size_t j = values.size(); j > 1; --j)
        std::swap(values[j - 1], values[static_cast<std::size_t>(rng.below(j))]);
    return values;
}

} // namespace collision_lab
