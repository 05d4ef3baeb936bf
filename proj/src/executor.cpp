#include "wavemsa/executor.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <barrier>
#include <chrono>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace wavemsa {

namespace {

using Clock = std::chrono::steady_clock;

template <typename Score>
class Mailbox {
public:
    void post(DependencyMessage<Score> msg) {
        std::lock_guard lock(mutex_);
        inbox_.push_back(std::move(msg));
    }
    std::vector<DependencyMessage<Score>> drain() {
        std::lock_guard lock(mutex_);
        return std::exchange(inbox_, {});
    }

private:
    std::mutex mutex_;
    std::vector<DependencyMessage<Score>> inbox_;
};


}  // namespace

template <typename Score>
ScoreBlock<Score>::ScoreBlock(PartitionId id, Box box)
    : id_(std::move(id)), box_(std::move(box)), strides_(box_.lo.size(), 1) {
    for (std::size_t i = strides_.size() - 1; i-- > 0;) strides_[i] = strides_[i + 1] * (box_.hi[i + 1] - box_.lo[i + 1] + 1);
    const auto n = box_.cell_count();
    values_.assign(n, Score{});
    moves_.assign(n, 0);
}

template <typename Score>
std::size_t ScoreBlock<Score>::local_offset(const MultiIndex& global_cell) const {
    if (!box_.contains(global_cell))
        throw BoundsError("cell " + global_cell.to_string() + " outside partition " + id_.grid.to_string());
    std::size_t off = 0;
    for (std::size_t i = 0; i < strides_.size(); ++i) off += (global_cell[i] - box_.lo[i]) * strides_[i];
    return off;
}

template <typename Score>
void OcinStore<Score>::deliver(const DependencyMessage<Score>& msg) {
    if (msg.source == msg.destination) throw ContractViolation("message addressed to self");
    for (const auto& rec : msg.payload) entries_[rec.offset] = Entry{rec.score, rec.move, msg.source, msg.wave, false};
}

template <typename Score>
typename OcinStore<Score>::Entry* OcinStore<Score>::find(Offset offset) {
    auto it = entries_.find(offset);
    return it == entries_.end() ? nullptr : &it->second;
}

template <typename Score>
std::size_t OcinStore<Score>::unconsumed() const {
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](const auto& kv) { return !kv.second.consumed; }));
}

template <typename Score>
RunContext<Score>::RunContext(const SequenceSet& s, const ScoringScheme& scheme, std::size_t partition_size,
                              std::size_t workers, SchedulePolicy policy)
    : seqs(s), grid(s.shape(), partition_size), sched(grid, workers, policy), kernel(s, scheme) {}

template <typename Score>
PartitionOutput<Score> compute_partition(const RunContext<Score>& ctx, std::size_t worker, const PartitionId& part,
                                         const BlockStore<Score>& local_blocks, OcinStore<Score>& ocin) {
    const PartitionGrid& grid = ctx.grid;
    const Shape& shape = grid.shape();
    const std::size_t k = grid.k();
    const Box box = grid.box(part.grid);
    const Box owned = grid.owned_box(part.grid);
    PartitionOutput<Score> out{ScoreBlock<Score>(part, box), {}, 0, 0, 0, 0};
    ScoreBlock<Score>& block = out.block;

    const auto& gstr = shape.strides();
    auto global_offset = [&](const MultiIndex& c) {
        Offset off = 0;
        for (std::size_t s = 0; s < k; ++s) off += c[s] * gstr[s];
        return off;
    };
    auto advance = [k](MultiIndex& c, const Box& b) {
        for (std::size_t s = k; s-- > 0;) {
            if (c[s] < b.hi[s]) {
                ++c[s];
                return true;
            }
            c[s] = b.lo[s];
        }
        return false;
    };

    // Low faces: cells this partition covers but a lower partition computes.
    const auto& lstr = block.local_strides();
    MultiIndex cell = box.lo;
    do {
        bool is_owned = true;
        std::size_t local = 0;
        for (std::size_t s = 0; s < k; ++s) {
            is_owned = is_owned && cell[s] >= owned.lo[s];
            local += (cell[s] - box.lo[s]) * lstr[s];
        }
        if (is_owned) continue;
        const std::size_t src_flat = grid.owner_flat(cell.coords());
        const std::size_t src_worker = ctx.sched.owner(src_flat);
        if (src_worker == worker) {
            auto it = local_blocks.find(src_flat);
            if (it == local_blocks.end())
                throw DependencyError("cell " + cell.to_string() + " needed by partition " + part.grid.to_string() +
                                      ": local partition " + grid.unflat(src_flat).to_string() + " not computed yet");
            const auto src_local = it->second.local_offset(cell);
            block.set(local, it->second.value(src_local), it->second.move(src_local));
        } else {
            auto* entry = ocin.find(global_offset(cell));
            if (!entry)
                throw DependencyError("cell " + cell.to_string() + " needed by partition " + part.grid.to_string() +
                                      " missing from OCin; expected from worker " + std::to_string(src_worker) +
                                      " (partition " + grid.unflat(src_flat).to_string() + ")");
            entry->consumed = true;
            block.set(local, entry->score, entry->move);
            out.earliest_delivery_wave = out.consumed_remote == 0
                                             ? entry->delivered_wave
                                             : std::min(out.earliest_delivery_wave, entry->delivered_wave);
            ++out.consumed_remote;
            out.latest_delivery_wave = std::max(out.latest_delivery_wave, entry->delivered_wave);
        }
    } while (advance(cell, box));

    const std::uint32_t full = (1U << k) - 1U;
    std::vector<std::size_t> delta(std::size_t{1} << k, 0);
    for (std::uint32_t m = 1; m <= full; ++m)
        for (std::size_t s = 0; s < k; ++s)
            if (m & axis_bit(s, k)) delta[m] += lstr[s];

    std::vector<std::size_t> dests;
    std::array<std::size_t, kMaxDims> probe{};
    const bool origin_partition = part.grid.sum() == 0;
    cell = owned.lo;
    do {
        std::size_t local = 0;
        std::uint32_t high_axes = 0;  // axes where the cell sits on a face shared with a higher partition
        for (std::size_t s = 0; s < k; ++s) {
            local += (cell[s] - box.lo[s]) * lstr[s];
            if (cell[s] == owned.hi[s] && owned.hi[s] + 1 < shape[s]) high_axes |= axis_bit(s, k);
        }
        if (origin_partition && local == 0) {
            block.set(local, Score{}, 0);
        } else {
            auto [v, m] = ctx.kernel.evaluate(cell.coords(), [&](std::uint32_t mask) { return block.value(local - delta[mask]); });
            block.set(local, v, m);
        }
        ++out.cells_computed;

        // Dependency analysis: a higher neighbour can only leave this partition
        // through an axis where the cell is on the high face.
        if (high_axes != 0) {
            dests.clear();
            for (std::uint32_t m = 1; m <= full; ++m) {
                if ((m & high_axes) == 0) continue;
                bool inside = true;
                for (std::size_t s = 0; s < k; ++s) {
                    probe[s] = cell[s] + ((m & axis_bit(s, k)) ? 1 : 0);
                    inside = inside && probe[s] < shape[s];
                }
                if (!inside) continue;
                const std::size_t dest = ctx.sched.owner(grid.owner_flat({probe.data(), k}));
                if (dest != worker) dests.push_back(dest);
            }
            std::sort(dests.begin(), dests.end());
            dests.erase(std::unique(dests.begin(), dests.end()), dests.end());
            for (auto dest : dests) out.outgoing[dest].push_back({global_offset(cell), block.value(local), block.move(local)});
        }
    } while (advance(cell, owned));
    return out;
}

const char* event_name(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::compute_begin: return "compute_begin";
        case EventKind::compute_end: return "compute_end";
        case EventKind::consume: return "consume";
        case EventKind::send: return "send";
        case EventKind::deliver: return "deliver";
        case EventKind::barrier: return "barrier";
    }
    return "?";
}

template <typename Score>
std::uint64_t RunReport<Score>::total_payload() const {
    return std::accumulate(waves.begin(), waves.end(), std::uint64_t{0},
                           [](std::uint64_t acc, const WaveStats& w) { return acc + w.payload_cells; });
}

template <typename Score>
std::size_t RunReport<Score>::total_messages() const {
    return std::accumulate(waves.begin(), waves.end(), std::size_t{0},
                           [](std::size_t acc, const WaveStats& w) { return acc + w.messages; });
}

template <typename Score>
std::uint64_t RunReport<Score>::total_elapsed_ns() const {
    return std::accumulate(waves.begin(), waves.end(), std::uint64_t{0},
                           [](std::uint64_t acc, const WaveStats& w) { return acc + w.elapsed_ns; });
}

template <typename Score>
std::size_t RunReport<Score>::idle_workers() const {
    return static_cast<std::size_t>(std::count(partitions.begin(), partitions.end(), std::size_t{0}));
}

template <typename Score>
ScoreTensor<Score> assemble_global(const PartitionGrid& grid, const std::vector<const ScoreBlock<Score>*>& blocks) {
    const Shape& shape = grid.shape();
    const std::size_t k = shape.k();
    const auto& gstr = shape.strides();
    ScoreTensor<Score> tensor(shape);
    std::vector<bool> filled(shape.cell_count(), false);
    // Calls fn(cell, global offset, local offset) for every cell of `box` inside block b.
    auto for_each_cell = [&](const ScoreBlock<Score>& b, const Box& box, auto&& fn) {
        const auto& lstr = b.local_strides();
        MultiIndex cell = box.lo;
        for (;;) {
            Offset off = 0;
            std::size_t local = 0;
            for (std::size_t s = 0; s < k; ++s) {
                off += cell[s] * gstr[s];
                local += (cell[s] - b.box().lo[s]) * lstr[s];
            }
            fn(cell, off, local);
            std::size_t s = k;
            while (s-- > 0) {
                if (cell[s] < box.hi[s]) {
                    ++cell[s];
                    break;
                }
                cell[s] = box.lo[s];
            }
            if (s == static_cast<std::size_t>(-1)) return;
        }
    };
    for (const auto* b : blocks) {
        for_each_cell(*b, grid.owned_box(b->partition().grid), [&](const MultiIndex& cell, Offset off, std::size_t local) {
            if (filled[off]) throw ConsistencyError("cell " + cell.to_string() + " computed by two partitions");
            filled[off] = true;
            tensor.set(off, b->value(local), b->move(local));
        });
    }
    if (std::find(filled.begin(), filled.end(), false) != filled.end())
        throw ConsistencyError("assembled tensor has cells no partition computed");
    for (const auto* b : blocks) {
        const Box owned = grid.owned_box(b->partition().grid);
        for_each_cell(*b, b->box(), [&](const MultiIndex& cell, Offset off, std::size_t local) {
            if (owned.contains(cell)) return;
            if (!ScoreTraits<Score>::same(tensor.value(off), b->value(local)) || tensor.move(off) != b->move(local))
                throw ConsistencyError("received copy of cell " + cell.to_string() + " in partition " +
                                       b->partition().grid.to_string() + " disagrees with its owner");
        });
    }
    return tensor;
}

template <typename Score>
ParallelResult<Score> run_parallel(const SequenceSet& seqs, const ScoringScheme& scheme,
                                   const ExecutorOptions& options) {
    if (options.workers < 1) throw ConfigError("need at least one worker");
    const Shape shape = seqs.shape();
    if (shape.cell_count() > options.max_cells)
        throw CapacityError("tensor (" + shape.to_string() + ") has " + std::to_string(shape.cell_count()) +
                            " cells, above the cap of " + std::to_string(options.max_cells));
    const RunContext<Score> ctx(seqs, scheme, options.partition_size, options.workers, options.policy);
    const std::size_t V = options.workers;
    const std::size_t wave_count = ctx.grid.wave_count();

    struct WorkerState {
        BlockStore<Score> blocks;
        OcinStore<Score> ocin;
        std::vector<Event> events;
        std::vector<WaveStats> waves;  // messages and payload this worker sent
        std::uint64_t cells = 0;
        std::size_t partitions = 0;
        std::uint64_t sent = 0;
        std::exception_ptr error;
        std::string error_context;
    };
    std::vector<WorkerState> state(V);
    std::vector<Mailbox<Score>> mailboxes(V);
    std::atomic<std::uint64_t> seq{0};
    std::atomic<bool> abort{false};

    std::vector<std::uint64_t> wave_ns(wave_count, 0);
    std::size_t barrier_round = 0;
    auto wave_start = Clock::now();
    auto on_barrier = [&]() noexcept {
        // Three barriers per wave; the third closes it.
        if (barrier_round % 3 == 2) {
            const auto now = Clock::now();
            const auto w = barrier_round / 3;
            if (w < wave_ns.size())
                wave_ns[w] = static_cast<std::uint64_t>(
                    std::chrono::duration_cast<std::chrono::nanoseconds>(now - wave_start).count());
            wave_start = now;
        }
        ++barrier_round;
    };
    std::barrier sync(static_cast<std::ptrdiff_t>(V), on_barrier);

    auto log = [&](WorkerState& ws, Event e) {
        if (!options.record_events) return;
        e.seq = seq.fetch_add(1, std::memory_order_relaxed);
        ws.events.push_back(e);
    };

    auto worker_main = [&](std::size_t me) {
        WorkerState& ws = state[me];
        ws.waves.resize(wave_count);
        for (std::size_t w = 0; w < wave_count; ++w) {
            std::map<std::size_t, std::vector<CellRecord<Score>>> ocout;
            const auto& wave = ctx.sched.waves()[w];
            try {
                for (const auto& part : wave) {
                    const std::size_t flat = ctx.grid.flat(part.grid);
                    if (ctx.sched.owner(flat) != me) continue;
                    ws.error_context = "wave " + std::to_string(w) + ", partition " + part.grid.to_string();
                    if (options.before_partition) options.before_partition(w, part, me);
                    log(ws, {0, me, w, EventKind::compute_begin, static_cast<long>(flat)});
                    auto res = compute_partition(ctx, me, part, ws.blocks, ws.ocin);
                    if (res.consumed_remote > 0)
                        log(ws, {0, me, w, EventKind::consume, static_cast<long>(flat), -1, ExchangePhase::none,
                                 res.latest_delivery_wave, res.consumed_remote});
                    log(ws, {0, me, w, EventKind::compute_end, static_cast<long>(flat)});
                    ws.cells += res.cells_computed;
                    ++ws.partitions;
                    for (auto& [dest, cells] : res.outgoing) {
                        auto& buf = ocout[dest];
                        buf.insert(buf.end(), cells.begin(), cells.end());
                    }
                    ws.blocks.emplace(flat, std::move(res.block));
                }
            } catch (...) {
                ws.error = std::current_exception();
                abort.store(true);
            }
            log(ws, {0, me, w, EventKind::barrier});
            sync.arrive_and_wait();
            if (abort.load()) return;

            auto post_phase = [&](ExchangePhase phase) {
                for (auto& [dest, cells] : ocout) {
                    if ((phase == ExchangePhase::downward) != (dest < me)) continue;
                    if (cells.empty()) continue;
                    ws.waves[w].messages += 1;
                    ws.waves[w].payload_cells += cells.size();
                    ws.sent += cells.size();
                    log(ws, {0, me, w, EventKind::send, -1, static_cast<long>(dest), phase, cells.size()});
                    mailboxes[dest].post({me, dest, w, phase, std::move(cells)});
                }
            };
            post_phase(ExchangePhase::downward);
            log(ws, {0, me, w, EventKind::barrier, -1, -1, ExchangePhase::downward});
            sync.arrive_and_wait();
            post_phase(ExchangePhase::upward);
            log(ws, {0, me, w, EventKind::barrier, -1, -1, ExchangePhase::upward});
            sync.arrive_and_wait();
            for (auto& msg : mailboxes[me].drain()) {
                if (msg.source == me) {
                    ws.error = std::make_exception_ptr(ContractViolation("message addressed to self"));
                    abort.store(true);
                    continue;
                }
                log(ws, {0, me, w, EventKind::deliver, -1, static_cast<long>(msg.source), msg.phase,
                         msg.payload.size()});
                ws.ocin.deliver(msg);
            }
        }
    };

    {
        std::vector<std::jthread> threads;
        threads.reserve(V);
        wave_start = Clock::now();
        for (std::size_t m = 0; m < V; ++m) threads.emplace_back(worker_main, m);
    }

    for (std::size_t m = 0; m < V; ++m) {
        if (!state[m].error) continue;
        const std::string where = "worker " + std::to_string(m) + " failed at " + state[m].error_context + ": ";
        try {
            std::rethrow_exception(state[m].error);
        } catch (const DependencyError& e) {
            throw DependencyError(where + e.what());
        } catch (const std::exception& e) {
            throw ExecutionError(where + e.what());
        } catch (...) {
            throw ExecutionError(where + "unknown failure");
        }
    }

    RunReport<Score> report;
    report.waves.resize(wave_count);
    for (std::size_t w = 0; w < wave_count; ++w) {
        report.waves[w].wave = w;
        report.waves[w].partitions = ctx.sched.waves()[w].size();
        report.waves[w].elapsed_ns = wave_ns[w];
    }
    std::vector<const ScoreBlock<Score>*> blocks;
    for (std::size_t m = 0; m < V; ++m) {
        auto& ws = state[m];
        report.cells_computed.push_back(ws.cells);
        report.partitions.push_back(ws.partitions);
        report.cells_sent.push_back(ws.sent);
        for (std::size_t w = 0; w < wave_count; ++w) {
            report.waves[w].messages += ws.waves[w].messages;
            report.waves[w].payload_cells += ws.waves[w].payload_cells;
        }
        if (auto n = ws.ocin.unconsumed())
            report.warnings.push_back("worker " + std::to_string(m) + " holds " + std::to_string(n) +
                                      " unconsumed OCin entries");
        report.events.insert(report.events.end(), ws.events.begin(), ws.events.end());
        for (const auto& [id, b] : ws.blocks) blocks.push_back(&b);
    }
    std::sort(report.events.begin(), report.events.end(), [](const Event& a, const Event& b) { return a.seq < b.seq; });

    ScoreTensor<Score> tensor = assemble_global(ctx.grid, blocks);
    report.terminal_score = tensor.terminal_value();
    Alignment aln = traceback(tensor, seqs);
    return {std::move(tensor), std::move(aln), std::move(report)};
}

template <typename Score>
void write_report_csv(std::ostream& out, const RunReport<Score>& report) {
    out << "wave,partitions,messages,payload_cells,elapsed_ns\n";
    for (const auto& w : report.waves)
        out << w.wave << ',' << w.partitions << ',' << w.messages << ',' << w.payload_cells << ',' << w.elapsed_ns
            << '\n';
}

void write_event_log(std::ostream& out, const std::vector<Event>& events, const PartitionGrid& grid) {
    for (const auto& e : events) {
        out << e.worker << ' ' << e.wave << ' ' << event_name(e.kind) << ' ';
        if (e.partition >= 0) out << grid.unflat(static_cast<std::size_t>(e.partition)).to_string();
        else out << '-';
        switch (e.kind) {
            case EventKind::send:
            case EventKind::deliver:
                out << " peer=" << e.peer << " phase=" << static_cast<int>(e.phase) << " cells=" << e.value;
                break;
            case EventKind::consume: out << " delivered_wave=" << e.value << " cells=" << e.count; break;
            case EventKind::barrier: out << " phase=" << static_cast<int>(e.phase); break;
            default: break;
        }
        out << '\n';
    }
}

#define WAVEMSA_INSTANTIATE(S)                                                                                      \
    template class ScoreBlock<S>;                                                                                   \
    template class OcinStore<S>;                                                                                    \
    template struct RunContext<S>;                                                                                  \
    template struct RunReport<S>;                                                                                   \
    template PartitionOutput<S> compute_partition(const RunContext<S>&, std::size_t, const PartitionId&,            \
                                                  const BlockStore<S>&, OcinStore<S>&);                             \
    template ScoreTensor<S> assemble_global(const PartitionGrid&, const std::vector<const ScoreBlock<S>*>&);        \
    template ParallelResult<S> run_parallel(const SequenceSet&, const ScoringScheme&, const ExecutorOptions&);      \
    template void write_report_csv(std::ostream&, const RunReport<S>&);

WAVEMSA_INSTANTIATE(std::int64_t)
WAVEMSA_INSTANTIATE(double)

}  // namespace wavemsa
