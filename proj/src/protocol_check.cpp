#include "wavemsa/protocol_check.hpp"

#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

namespace wavemsa {

namespace {

// Kahn's algorithm over an explicit edge set.
bool acyclic(const std::set<std::pair<std::size_t, std::size_t>>& edges) {
    std::map<std::size_t, std::size_t> indegree;
    std::map<std::size_t, std::vector<std::size_t>> adj;
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        indegree[b];
        ++indegree[b];
        indegree[a];
    }
    std::vector<std::size_t> ready;
    for (auto [n, d] : indegree)
        if (d == 0) ready.push_back(n);
    std::size_t seen = 0;
    while (!ready.empty()) {
        auto n = ready.back();
        ready.pop_back();
        ++seen;
        for (auto m : adj[n])
            if (--indegree[m] == 0) ready.push_back(m);
    }
    return seen == indegree.size();
}

}  // namespace

ProtocolReport check_protocol(const std::vector<Event>& events, const PartitionGrid& grid) {
    ProtocolReport rep;
    const std::size_t k = grid.k();

    // (wave, phase) -> edges receiver -> sender
    std::map<std::pair<std::size_t, int>, std::set<std::pair<std::size_t, std::size_t>>> waits;
    // (wave, source, destination) -> seq of the send
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::uint64_t> sends;
    std::unordered_map<long, std::uint64_t> ended;

    for (const auto& e : events) {
        switch (e.kind) {
            case EventKind::send:
                ++rep.messages;
                waits[{e.wave, static_cast<int>(e.phase)}].emplace(static_cast<std::size_t>(e.peer), e.worker);
                sends[{e.wave, e.worker, static_cast<std::size_t>(e.peer)}] = e.seq;
                break;
            case EventKind::deliver: {
                auto it = sends.find({e.wave, static_cast<std::size_t>(e.peer), e.worker});
                if (it == sends.end() || it->second > e.seq) {
                    rep.sends_precede_deliveries = false;
                    rep.violations.push_back("delivery to worker " + std::to_string(e.worker) + " in wave " +
                                             std::to_string(e.wave) + " has no earlier send");
                }
                break;
            }
            case EventKind::consume:
                if (e.value >= e.wave) {
                    rep.consumed_after_delivery = false;
                    rep.violations.push_back("partition " + std::to_string(e.partition) + " in wave " +
                                             std::to_string(e.wave) + " read a cell delivered in wave " +
                                             std::to_string(e.value));
                }
                break;
            case EventKind::compute_begin: {
                const MultiIndex g = grid.unflat(static_cast<std::size_t>(e.partition));
                if (g.sum() != e.wave) {
                    rep.wave_safe = false;
                    rep.violations.push_back("partition " + g.to_string() + " computed in wave " +
                                             std::to_string(e.wave));
                }
                for (std::uint32_t m = 1; m < (1U << k); ++m) {
                    MultiIndex pred = g;
                    bool ok = true;
                    for (std::size_t i = 0; i < k && ok; ++i) {
                        if (!(m & axis_bit(i, k))) continue;
                        if (pred[i] == 0) ok = false;
                        else --pred[i];
                    }
                    if (!ok) continue;
                    auto it = ended.find(static_cast<long>(grid.flat(pred)));
                    if (it == ended.end() || it->second > e.seq) {
                        rep.wave_safe = false;
                        rep.violations.push_back("partition " + g.to_string() + " started before predecessor " +
                                                 pred.to_string() + " finished");
                    }
                }
                break;
            }
            case EventKind::compute_end: ended[e.partition] = e.seq; break;
            case EventKind::barrier: break;
        }
    }
    for (const auto& [key, edges] : waits) {
        if (!acyclic(edges)) {
            rep.wait_for_acyclic = false;
            rep.violations.push_back("wait-for cycle in wave " + std::to_string(key.first) + " phase " +
                                     std::to_string(key.second));
        }
    }
    return rep;
}

}  // namespace wavemsa
