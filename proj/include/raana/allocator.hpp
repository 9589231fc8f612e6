#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "raana/core.hpp"

namespace raana {

struct LayerSensitivity {
    std::string label;
    std::uint64_t param_count = 0;
    double alpha = 0.0;
};

struct SensitivityProfile {
    std::vector<LayerSensitivity> layers;

    std::uint64_t total_params() const {
        std::uint64_t sum = 0;
        for (const auto& l : layers) sum += l.param_count;
        return sum;
    }
};

struct BitAllocation {
    std::vector<int> bits;            // one entry per layer
    double objective = 0.0;           // sum of alpha_k * 2^-b_k
    std::uint64_t consumed_budget = 0;  // exact sum of b_k * m_k
    std::uint64_t total_budget = 0;
    std::uint64_t reduced_budget = 0;  // total_budget / gcd
    std::uint64_t gcd = 1;
    std::uint64_t dp_updates = 0;      // relaxation steps taken by the solver
};

struct GcdReduction {
    std::vector<std::uint64_t> params;
    std::uint64_t budget = 0;
    std::uint64_t gcd = 1;
};

inline GcdReduction reduce_by_gcd(std::span<const std::uint64_t> params,
                                  std::uint64_t budget) {
    std::uint64_t g = budget;
    for (const std::uint64_t m : params) g = std::gcd(g, m);
    if (g == 0) g = 1;
    GcdReduction out;
    out.gcd = g;
    out.budget = budget / g;
    out.params.reserve(params.size());
    for (const std::uint64_t m : params) out.params.push_back(m / g);
    return out;
}

/// sum over layers of alpha_k * 2^-b_k.
inline double objective(const SensitivityProfile& profile, std::span<const int> bits) {
    if (bits.size() != profile.layers.size())
        throw invalid_config_error("objective: allocation size does not match profile");
    double sum = 0.0;
    for (std::size_t k = 0; k < bits.size(); ++k)
        sum += profile.layers[k].alpha * std::ldexp(1.0, -bits[k]);
    return sum;
}

namespace detail {

inline std::vector<int> checked_candidates(std::span<const int> candidates) {
    if (candidates.empty())
        throw invalid_config_error("bit allocation: empty candidate set");
    std::vector<int> b(candidates.begin(), candidates.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    if (b.front() < 1 || b.back() > 62)
        throw invalid_config_error("bit allocation: candidate bit widths must lie in [1, 62]");
    return b;
}

inline void check_profile(const SensitivityProfile& profile) {
    if (profile.layers.empty())
        throw invalid_config_error("bit allocation: profile has no layers");
    for (const auto& l : profile.layers) {
        if (l.param_count == 0)
            throw invalid_config_error("bit allocation: layer '" + l.label +
                                       "' has zero parameters");
        if (!(l.alpha >= 0.0) || !std::isfinite(l.alpha))
            throw invalid_config_error("bit allocation: layer '" + l.label +
                                       "' has invalid sensitivity");
    }
}

inline std::uint64_t min_feasible_budget(const SensitivityProfile& profile, int min_bits) {
    std::uint64_t sum = 0;
    for (const auto& l : profile.layers) sum += l.param_count * std::uint64_t(min_bits);
    return sum;
}

/// floor(m * b / g + 1/2), the solver's rounded per-layer cost in reduced
/// units. Exact whenever g divides m, which holds for the joint gcd.
inline std::uint64_t rounded_cost(std::uint64_t m, int b, std::uint64_t g) {
    const unsigned __int128 num = (unsigned __int128)(m) * (unsigned __int128)(b);
    return std::uint64_t((2 * num + g) / (2 * (unsigned __int128)g));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact solver: dynamic programming over (layer, consumed reduced budget)
// after dividing all parameter counts and the budget by their joint gcd.
// Ties are broken toward the smaller consumed budget, then toward the
// lexicographically smallest per-layer bit sequence.
// ---------------------------------------------------------------------------

inline BitAllocation allocate_dp(const SensitivityProfile& profile,
                                 std::span<const int> candidates, std::uint64_t budget) {
    detail::check_profile(profile);
    const std::vector<int> b_set = detail::checked_candidates(candidates);
    const std::size_t num_layers = profile.layers.size();

    const std::uint64_t min_needed = detail::min_feasible_budget(profile, b_set.front());
    if (budget < min_needed)
        throw infeasible_budget_error(
            "bit budget " + std::to_string(budget) + " below minimum feasible budget " +
                std::to_string(min_needed) + " (" + std::to_string(b_set.front()) +
                " bits on every layer)",
            min_needed);

    std::vector<std::uint64_t> params;
    params.reserve(num_layers);
    for (const auto& l : profile.layers) params.push_back(l.param_count);
    const GcdReduction reduced = reduce_by_gcd(params, budget);
    const std::uint64_t r_max = reduced.budget;
    if ((r_max + 1) * std::uint64_t(num_layers) > std::uint64_t(1) << 30)
        throw invalid_config_error(
            "bit allocation: reduced budget " + std::to_string(r_max) +
            " too large for the table solver; coarsen the budget so the gcd grows");

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(r_max + 1, inf);
    std::vector<double> cur(r_max + 1, inf);
    // choice[k][r]: index into b_set of the width picked at layer k to reach
    // exactly r reduced units; -1 when unreachable.
    std::vector<std::vector<std::int8_t>> choice(num_layers,
                                                 std::vector<std::int8_t>(r_max + 1, -1));
    std::uint64_t updates = 0;

    // Walk parent pointers back from (layer k, reduced budget r).
    auto backtrack = [&](std::size_t k, std::uint64_t r) {
        std::vector<int> bits(k + 1);
        for (std::size_t layer = k + 1; layer-- > 0;) {
            const int idx = choice[layer][r];
            const int b = b_set[std::size_t(idx)];
            bits[layer] = b;
            r -= detail::rounded_cost(params[layer], b, reduced.gcd);
        }
        return bits;
    };

    for (std::size_t k = 0; k < num_layers; ++k) {
        std::fill(cur.begin(), cur.end(), inf);
        const double alpha = profile.layers[k].alpha;
        for (std::size_t bi = 0; bi < b_set.size(); ++bi) {
            const int b = b_set[bi];
            const std::uint64_t cost = detail::rounded_cost(params[k], b, reduced.gcd);
            const double term = alpha * std::ldexp(1.0, -b);
            if (cost > r_max) continue;
            if (k == 0) {
                ++updates;
                if (term < cur[cost]) {
                    cur[cost] = term;
                    choice[0][cost] = std::int8_t(bi);
                }
                // equal values tie toward the smaller b, which arrives first
            } else {
                for (std::uint64_t r = 0; r + cost <= r_max; ++r) {
                    if (prev[r] == inf) continue;
                    ++updates;
                    const double cand = prev[r] + term;
                    const std::uint64_t target = r + cost;
                    if (cand < cur[target]) {
                        cur[target] = cand;
                        choice[k][target] = std::int8_t(bi);
                    } else if (cand == cur[target] && choice[k][target] >= 0) {
                        // resolve exact ties lexicographically
                        std::vector<int> challenger = backtrack(k - 1, r);
                        challenger.push_back(b);
                        const std::vector<int> incumbent = backtrack(k, target);
                        if (challenger < incumbent) choice[k][target] = std::int8_t(bi);
                    }
                }
            }
        }
        std::swap(prev, cur);
    }

    std::uint64_t best_r = 0;
    double best_value = inf;
    for (std::uint64_t r = 0; r <= r_max; ++r) {
        if (prev[r] < best_value) {
            best_value = prev[r];
            best_r = r;
        }
    }
    if (best_value == inf)
        throw infeasible_budget_error("bit budget infeasible for the candidate set",
                                      min_needed);

    BitAllocation out;
    out.bits = backtrack(num_layers - 1, best_r);
    out.gcd = reduced.gcd;
    out.reduced_budget = r_max;
    out.total_budget = budget;
    out.dp_updates = updates;
    out.objective = objective(profile, out.bits);
    out.consumed_budget = 0;
    for (std::size_t k = 0; k < num_layers; ++k)
        out.consumed_budget += params[k] * std::uint64_t(out.bits[k]);
    // The rounded cost model can in principle under-count; re-verify with
    // exact arithmetic.
    if (out.consumed_budget > budget)
        throw error("bit allocation exceeded the exact budget after rounding");
    return out;
}

/// Exhaustive reference solver over the same rounded-cost model; guarded to
/// small instances.
inline BitAllocation allocate_bruteforce(const SensitivityProfile& profile,
                                         std::span<const int> candidates,
                                         std::uint64_t budget) {
    detail::check_profile(profile);
    const std::vector<int> b_set = detail::checked_candidates(candidates);
    const std::size_t num_layers = profile.layers.size();

    double combos = 1.0;
    for (std::size_t k = 0; k < num_layers; ++k) combos *= double(b_set.size());
    if (combos > 1e7)
        throw invalid_config_error("allocate_bruteforce: instance too large (" +
                                   std::to_string(combos) + " assignments)");

    const std::uint64_t min_needed = detail::min_feasible_budget(profile, b_set.front());
    if (budget < min_needed)
        throw infeasible_budget_error(
            "bit budget " + std::to_string(budget) + " below minimum feasible budget " +
                std::to_string(min_needed),
            min_needed);

    std::vector<std::uint64_t> params;
    for (const auto& l : profile.layers) params.push_back(l.param_count);
    const GcdReduction reduced = reduce_by_gcd(params, budget);

    std::vector<std::size_t> idx(num_layers, 0);
    std::vector<int> bits(num_layers);
    BitAllocation best;
    double best_obj = std::numeric_limits<double>::infinity();
    std::uint64_t best_cost = 0;
    bool found = false;

    while (true) {
        std::uint64_t cost = 0;
        double obj = 0.0;
        for (std::size_t k = 0; k < num_layers; ++k) {
            const int b = b_set[idx[k]];
            bits[k] = b;
            cost += detail::rounded_cost(params[k], b, reduced.gcd);
            obj += profile.layers[k].alpha * std::ldexp(1.0, -b);
        }
        if (cost <= reduced.budget) {
            // enumeration is lexicographic, so strict comparisons keep the
            // lexicographically first among exact ties
            if (!found || obj < best_obj || (obj == best_obj && cost < best_cost)) {
                found = true;
                best_obj = obj;
                best_cost = cost;
                best.bits = bits;
            }
        }
        bool rolled_over = true;
        for (std::size_t pos = num_layers; pos-- > 0;) {
            if (++idx[pos] < b_set.size()) {
                rolled_over = false;
                break;
            }
            idx[pos] = 0;
        }
        if (rolled_over) break;
    }

    if (!found)
        throw infeasible_budget_error("bit budget infeasible for the candidate set",
                                      min_needed);
    best.gcd = reduced.gcd;
    best.reduced_budget = reduced.budget;
    best.total_budget = budget;
    best.objective = objective(profile, best.bits);
    best.consumed_budget = 0;
    for (std::size_t k = 0; k < num_layers; ++k)
        best.consumed_budget += params[k] * std::uint64_t(best.bits[k]);
    return best;
}

// ---------------------------------------------------------------------------
// Text formats: one `label params alpha` line per layer for profiles, and a
// keyed structured report for allocations.
// ---------------------------------------------------------------------------

inline void write_profile(std::ostream& os, const SensitivityProfile& profile) {
    os.precision(17);
    for (const auto& l : profile.layers)
        os << l.label << ' ' << l.param_count << ' ' << l.alpha << '\n';
}

inline SensitivityProfile read_profile(std::istream& is) {
    SensitivityProfile profile;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        LayerSensitivity layer;
        if (!(ls >> layer.label >> layer.param_count >> layer.alpha))
            throw invalid_config_error("sensitivity profile: malformed line " +
                                       std::to_string(line_no) + ": '" + line + "'");
        std::string extra;
        if (ls >> extra)
            throw invalid_config_error("sensitivity profile: trailing tokens on line " +
                                       std::to_string(line_no));
        profile.layers.push_back(std::move(layer));
    }
    if (profile.layers.empty())
        throw invalid_config_error("sensitivity profile: no layers found");
    return profile;
}

inline void write_allocation(std::ostream& os, const SensitivityProfile& profile,
                             const BitAllocation& alloc,
                             const std::string& calibration_mode = "none",
                             std::uint32_t calibration_samples = 0) {
    if (alloc.bits.size() != profile.layers.size())
        throw invalid_config_error("write_allocation: allocation/profile size mismatch");
    os.precision(17);
    os << "raana-allocation v1\n";
    os << "objective " << alloc.objective << '\n';
    os << "budget-total " << alloc.total_budget << '\n';
    os << "budget-consumed " << alloc.consumed_budget << '\n';
    os << "gcd " << alloc.gcd << '\n';
    os << "reduced-budget " << alloc.reduced_budget << '\n';
    os << "calibration " << calibration_mode << ' ' << calibration_samples << '\n';
    for (std::size_t k = 0; k < alloc.bits.size(); ++k)
        os << "layer " << profile.layers[k].label << ' ' << alloc.bits[k] << '\n';
    os << "end\n";
}

struct AllocationFile {
    std::vector<std::string> labels;
    BitAllocation allocation;
    std::string calibration_mode = "none";
    std::uint32_t calibration_samples = 0;
};

inline AllocationFile read_allocation(std::istream& is) {
    AllocationFile out;
    std::string line;
    if (!std::getline(is, line) || line != "raana-allocation v1")
        throw unsupported_format_error("allocation file: missing 'raana-allocation v1' header");
    bool saw_end = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "end") {
            saw_end = true;
            break;
        } else if (key == "objective") {
            ls >> out.allocation.objective;
        } else if (key == "budget-total") {
            ls >> out.allocation.total_budget;
        } else if (key == "budget-consumed") {
            ls >> out.allocation.consumed_budget;
        } else if (key == "gcd") {
            ls >> out.allocation.gcd;
        } else if (key == "reduced-budget") {
            ls >> out.allocation.reduced_budget;
        } else if (key == "calibration") {
            ls >> out.calibration_mode >> out.calibration_samples;
        } else if (key == "layer") {
            std::string label;
            int bits = 0;
            if (!(ls >> label >> bits))
                throw invalid_config_error("allocation file: malformed layer line: '" +
                                           line + "'");
            out.labels.push_back(std::move(label));
            out.allocation.bits.push_back(bits);
        } else {
            throw invalid_config_error("allocation file: unknown key '" + key + "'");
        }
        if (ls.fail())
            throw invalid_config_error("allocation file: malformed line: '" + line + "'");
    }
    if (!saw_end) throw invalid_config_error("allocation file: missing 'end' terminator");
    if (out.labels.empty()) throw invalid_config_error("allocation file: no layers");
    return out;
}

}  // namespace raana
