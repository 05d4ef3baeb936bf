#pragma once

#include "wavemsa/dp_core.hpp"
#include "wavemsa/partitioner.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace wavemsa {

/// One overlapping cell as it travels between workers.
template <typename Score>
struct CellRecord {
    Offset offset = 0;  // global flat offset
    Score score{};
    MoveMask move = 0;
};

enum class ExchangePhase : std::uint8_t { none = 0, downward = 1, upward = 2 };

/// Ocout buffer for one (source, destination) pair after one wave. Downward
/// messages go to lower ranks, upward ones to higher ranks.
template <typename Score>
struct DependencyMessage {
    std::size_t source = 0;
    std::size_t destination = 0;
    std::size_t wave = 0;
    ExchangePhase phase = ExchangePhase::none;
    std::vector<CellRecord<Score>> payload;
};

/// Scores over one partition's full box; low-face cells are copies.
template <typename Score>
class ScoreBlock {
public:
    ScoreBlock(PartitionId id, Box box);

    [[nodiscard]] const PartitionId& partition() const noexcept { return id_; }
    [[nodiscard]] const Box& box() const noexcept { return box_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::size_t local_offset(const MultiIndex& global_cell) const;
    [[nodiscard]] Score value(std::size_t local) const { return values_[local]; }
    [[nodiscard]] MoveMask move(std::size_t local) const { return moves_[local]; }
    void set(std::size_t local, Score v, MoveMask m) {
        values_[local] = v;
        moves_[local] = m;
    }
    [[nodiscard]] const std::vector<std::size_t>& local_strides() const noexcept { return strides_; }

private:
    PartitionId id_;
    Box box_;
    std::vector<std::size_t> strides_;
    std::vector<Score> values_;
    std::vector<MoveMask> moves_;
};

/// OCin: received cells keyed by global offset. Entries persist for the
/// whole run because a successor may sit up to k waves later.
template <typename Score>
class OcinStore {
public:
    struct Entry {
        Score score{};
        MoveMask move = 0;
        std::size_t source = 0;
        std::size_t delivered_wave = 0;
        bool consumed = false;
    };

    void deliver(const DependencyMessage<Score>& msg);
    [[nodiscard]] Entry* find(Offset offset);
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] std::size_t unconsumed() const;

private:
    std::unordered_map<Offset, Entry> entries_;
};

template <typename Score>
using BlockStore = std::unordered_map<std::size_t, ScoreBlock<Score>>;  // by partition flat id

/// Everything every worker reads and nobody writes during a run.
template <typename Score>
struct RunContext {
    RunContext(const SequenceSet& seqs, const ScoringScheme& scheme, std::size_t partition_size,
               std::size_t workers, SchedulePolicy policy);

    const SequenceSet& seqs;
    PartitionGrid grid;
    WaveSchedule sched;
    CellKernel<Score> kernel;
};

template <typename Score>
struct PartitionOutput {
    ScoreBlock<Score> block;
    std::map<std::size_t, std::vector<CellRecord<Score>>> outgoing;  // by destination worker
    std::size_t cells_computed = 0;
    std::size_t consumed_remote = 0;       // cells read from OCin
    std::size_t latest_delivery_wave = 0;  // newest delivered_wave among them
    std::size_t earliest_delivery_wave = 0;  // oldest delivered_wave among them
};

/// Scores one partition on `worker`. Low faces come from the worker's own
/// blocks when the owning partition is local, otherwise from OCin; a missing
/// cell raises DependencyError naming the cell and its expected source.
template <typename Score>
PartitionOutput<Score> compute_partition(const RunContext<Score>& ctx, std::size_t worker, const PartitionId& part,
                                         const BlockStore<Score>& local_blocks, OcinStore<Score>& ocin);

enum class EventKind : std::uint8_t { compute_begin, compute_end, consume, send, deliver, barrier };

[[nodiscard]] const char* event_name(EventKind kind) noexcept;

/// One protocol event. `seq` is a global order across all workers.
struct Event {
    std::uint64_t seq = 0;
    std::size_t worker = 0;
    std::size_t wave = 0;
    EventKind kind = EventKind::barrier;
    long partition = -1;  // flat partition id
    long peer = -1;       // send: destination, deliver: source
    ExchangePhase phase = ExchangePhase::none;
    std::size_t value = 0;  // consume: latest delivery wave; send/deliver: payload cells
    std::size_t count = 0;  // consume: cells read from OCin
};

struct WaveStats {
    std::size_t wave = 0;
    std::size_t partitions = 0;
    std::size_t messages = 0;
    std::uint64_t payload_cells = 0;
    std::uint64_t elapsed_ns = 0;
};

template <typename Score>
struct RunReport {
    Score terminal_score{};
    std::vector<std::uint64_t> cells_computed;  // per worker
    std::vector<std::size_t> partitions;        // per worker
    std::vector<std::uint64_t> cells_sent;      // per worker
    std::vector<WaveStats> waves;
    std::vector<std::string> warnings;
    std::vector<Event> events;  // empty unless recorded

    [[nodiscard]] std::uint64_t total_payload() const;
    [[nodiscard]] std::size_t total_messages() const;
    [[nodiscard]] std::uint64_t total_elapsed_ns() const;
    [[nodiscard]] std::size_t idle_workers() const;
};

struct ExecutorOptions {
    std::size_t partition_size = 3;
    std::size_t workers = 1;
    SchedulePolicy policy = SchedulePolicy::block;
    bool record_events = false;
    Offset max_cells = default_max_cells();
    /// Test hook called by the worker before each partition it computes.
    std::function<void(std::size_t wave, const PartitionId&, std::size_t worker)> before_partition;
};

template <typename Score>
struct ParallelResult {
    ScoreTensor<Score> tensor;
    Alignment alignment;
    RunReport<Score> report;
};

/// Scores the tensor with V worker threads, wave by wave, exchanging
/// overlapping cells in two phases per wave (to lower ranks, barrier, to
/// higher ranks, barrier), then assembles and traces back.
template <typename Score>
ParallelResult<Score> run_parallel(const SequenceSet& seqs, const ScoringScheme& scheme,
                                   const ExecutorOptions& options);

/// Builds the global tensor from every block, taking each cell from its
/// owner and checking every received copy against it.
template <typename Score>
ScoreTensor<Score> assemble_global(const PartitionGrid& grid, const std::vector<const ScoreBlock<Score>*>& blocks);

/// CSV: wave,partitions,messages,payload_cells,elapsed_ns
template <typename Score>
void write_report_csv(std::ostream& out, const RunReport<Score>& report);

/// One event per line: worker wave event partition [peer phase value count]
void write_event_log(std::ostream& out, const std::vector<Event>& events, const PartitionGrid& grid);

}  // namespace wavemsa
