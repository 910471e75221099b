#include "rbsteer/chain.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "rbsteer/lp.hpp"

namespace rbsteer {

namespace {

using Graph = std::vector<std::vector<bool>>;

Graph union_graph(const ArmModel& model) {
    const std::size_t S = model.num_states;
    Graph g(S, std::vector<bool>(S, false));
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) g[i][j] = model.P0(i, j) > 0.0 || model.P1(i, j) > 0.0;
    return g;
}

// Largest set W of states outside `closed` such that every state in W has an
// action keeping it inside W with probability one. A nonempty W means some
// policy has a recurrent class away from the closed class.
std::vector<bool> trapping_set(const ArmModel& model, const std::vector<bool>& closed) {
    const std::size_t S = model.num_states;
    std::vector<bool> in(S);
    for (std::size_t s = 0; s < S; ++s) in[s] = !closed[s];
    auto stays = [&](const Matrix& P, std::size_t s) {
        for (std::size_t t = 0; t < S; ++t)
            if (P(s, t) > 0.0 && !in[t]) return false;
        return true;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t s = 0; s < S; ++s) {
            if (in[s] && !stays(model.P0, s) && !stays(model.P1, s)) {
                in[s] = false;
                changed = true;
            }
        }
    }
    return in;
}

}  // namespace

ChainStructure analyze_chain(const ArmModel& model) {
    const std::size_t S = model.num_states;
    const Graph g = union_graph(model);

    // Transitive closure (reflexive).
    Graph reach = g;
    for (std::size_t i = 0; i < S; ++i) reach[i][i] = true;
    for (std::size_t k = 0; k < S; ++k)
        for (std::size_t i = 0; i < S; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < S; ++j)
                    if (reach[k][j]) reach[i][j] = true;

    ChainStructure out;
    std::vector<std::size_t> class_of(S, S);
    for (std::size_t s = 0; s < S; ++s) {
        if (class_of[s] != S) continue;
        std::vector<std::size_t> members;
        for (std::size_t t = s; t < S; ++t)
            if (reach[s][t] && reach[t][s]) {
                members.push_back(t);
                class_of[t] = out.classes.size();
            }
        out.classes.push_back(std::move(members));
    }

    std::vector<bool> in_closed(S, false);
    for (std::size_t c = 0; c < out.classes.size(); ++c) {
        bool closed = true;
        for (std::size_t s : out.classes[c])
            for (std::size_t t = 0; t < S; ++t)
                if (g[s][t] && class_of[t] != c) closed = false;
        if (closed) {
            out.closed_classes.push_back(c);
            for (std::size_t s : out.classes[c]) in_closed[s] = true;
        }
    }
    for (std::size_t s = 0; s < S; ++s)
        if (!in_closed[s]) out.transient_states.push_back(s);

    if (out.closed_classes.size() == 1) {
        const auto trap = trapping_set(model, in_closed);
        out.weakly_communicating = std::none_of(trap.begin(), trap.end(), [](bool b) { return b; });
    }

    // Periods: BFS levels inside each class; the period is the gcd of
    // level[u] + 1 - level[v] over the class's internal edges.
    out.periods_under_Palpha.assign(S, 1);
    for (const auto& members : out.classes) {
        const std::size_t c = class_of[members.front()];
        std::vector<long> level(S, -1);
        std::queue<std::size_t> queue;
        level[members.front()] = 0;
        queue.push(members.front());
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop();
            for (std::size_t w = 0; w < S; ++w) {
                if (g[v][w] && class_of[w] == c && level[w] < 0) {
                    level[w] = level[v] + 1;
                    queue.push(w);
                }
            }
        }
        long period = 0;
        for (std::size_t v : members)
            for (std::size_t w : members)
                if (g[v][w]) period = std::gcd(period, std::abs(level[v] + 1 - level[w]));
        for (std::size_t v : members) out.periods_under_Palpha[v] = period > 0 ? static_cast<int>(period) : 1;
    }
    return out;
}

std::optional<ReachabilityCertificate> find_certificate(const ArmModel& model, const StationaryPoint& sp,
                                                        int cap) {
    if (cap < 1) throw InputError("certificate cap must be at least 1");
    const auto targets = support(sp);
    if (targets.empty()) return std::nullopt;
    const double max_x = *std::max_element(sp.x_star.begin(), sp.x_star.end());
    const Matrix mixed = model.mixed_transition();
    Matrix power = mixed;
    for (int T0 = 1; T0 <= cap; ++T0) {
        double p0 = kInf;
        for (std::size_t s = 0; s < model.num_states; ++s)
            for (std::size_t t : targets) p0 = std::min(p0, power(s, t));
        if (p0 > kPositiveEntry) return ReachabilityCertificate{T0, p0, p0 / max_x};
        power = power * mixed;
    }
    return std::nullopt;
}

}  // namespace rbsteer
