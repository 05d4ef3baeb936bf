#pragma once

#include "wavemsa/moa_index.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace wavemsa {

/// Closed per-axis cell ranges [lo_i, hi_i].
struct Box {
    MultiIndex lo;
    MultiIndex hi;

    [[nodiscard]] bool contains(const MultiIndex& cell) const noexcept;
    [[nodiscard]] Offset cell_count() const noexcept;
};

/// A partition: identified by its grid coordinates; its first cell is
/// grid * (S - 1) and its wave is the grid coordinate sum.
struct PartitionId {
    MultiIndex grid;
    MultiIndex first_cell;
    std::size_t wave = 0;

    friend bool operator==(const PartitionId& a, const PartitionId& b) { return a.grid == b.grid; }
};

/// Cubic partitions of side S overlapping their neighbours by one cell per
/// axis. The last partition on an axis is short when (rho_i - 1) is not a
/// multiple of (S - 1).
class PartitionGrid {
public:
    /// Throws ConfigError unless 2 <= S <= min rho_i.
    PartitionGrid(Shape shape, std::size_t partition_size);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t k() const noexcept { return shape_.k(); }
    [[nodiscard]] std::size_t partition_size() const noexcept { return size_; }
    [[nodiscard]] const std::vector<std::size_t>& counts() const noexcept { return counts_; }
    [[nodiscard]] std::size_t total_partitions() const noexcept { return total_; }
    [[nodiscard]] std::size_t wave_count() const noexcept { return waves_; }

    [[nodiscard]] bool contains(const MultiIndex& grid) const noexcept;
    [[nodiscard]] std::size_t flat(const MultiIndex& grid) const;
    [[nodiscard]] MultiIndex unflat(std::size_t id) const;
    [[nodiscard]] PartitionId partition(const MultiIndex& grid) const;
    /// Flat id of the partition that computes `cell` (no bounds check).
    [[nodiscard]] std::size_t owner_flat(std::span<const std::size_t> cell) const noexcept;
    /// Every cell the partition covers, including shared low faces.
    [[nodiscard]] Box box(const MultiIndex& grid) const;
    /// Cells the partition computes: its box minus low faces shared with a
    /// lower partition.
    [[nodiscard]] Box owned_box(const MultiIndex& grid) const;

private:
    Shape shape_;
    std::size_t size_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> grid_strides_;
    std::size_t total_ = 1;
    std::size_t waves_ = 1;
};

PartitionGrid build_grid(const Shape& shape, std::size_t partition_size);

/// Closed forms from p_i = (rho_i - 1) / (S - 1), defined only when every
/// (rho_i - 1) is a multiple of (S - 1).
std::optional<std::size_t> closed_form_wave_count(const Shape& shape, std::size_t partition_size);
std::optional<std::size_t> closed_form_partition_count(const Shape& shape, std::size_t partition_size);

/// Partitions of n into at most `parts` parts, each at most `max_part`,
/// produced in reverse lexicographic order as non-increasing vectors of
/// length `parts` padded with zeros.
class IntegerPartitions {
public:
    IntegerPartitions(std::size_t n, std::size_t parts, std::size_t max_part);
    /// Writes the next partition into `out`; false when exhausted.
    bool next(std::vector<std::size_t>& out);

private:
    std::size_t n_, parts_, max_part_;
    std::vector<std::size_t> current_;
    bool started_ = false;
    bool done_ = false;
};

/// Partitions at grid distance w, built from integer partitions of w and
/// their distinct permutations, filtered by the grid bounds, sorted
/// lexicographically.
std::vector<PartitionId> enumerate_wave(const PartitionGrid& grid, std::size_t wave);

/// |enumerate_wave| without materializing it. With no bounds this is
/// C(w + k - 1, k - 1).
std::uint64_t count_wave(std::size_t k, std::size_t wave,
                         const std::optional<std::vector<std::size_t>>& bounds = std::nullopt);

/// The overlapping-cell recurrence in its literal form:
/// C_0 = rho_0 - 1, C_i = C_{i-1} * rho_i + (prod_{j<=i} p_j) * 2^i - 1,
/// C = sum C_i. Kept for reference; it does not count shared cells.
std::uint64_t overlap_cells_formula(const PartitionGrid& grid);

/// Interior boundary coordinates m(S-1), 1 <= m <= p - 1, on one axis.
std::vector<std::size_t> boundary_positions(std::size_t extent, std::size_t partition_size);

/// Cells covered by two or more partitions, by enumeration. Refuses
/// (CapacityError) above `max_cells`.
std::uint64_t overlap_cells_oracle(const PartitionGrid& grid, Offset max_cells = 10'000'000);

/// Grid coordinates of the unique partition that computes `cell`.
MultiIndex owner_of_cell(const PartitionGrid& grid, const MultiIndex& cell);

enum class SchedulePolicy { block, round_robin };

[[nodiscard]] SchedulePolicy parse_schedule_policy(std::string_view name);

/// Per-wave partition lists and their worker ranks.
class WaveSchedule {
public:
    WaveSchedule(const PartitionGrid& grid, std::size_t workers, SchedulePolicy policy);

    [[nodiscard]] std::size_t workers() const noexcept { return workers_; }
    [[nodiscard]] const std::vector<std::vector<PartitionId>>& waves() const noexcept { return waves_; }
    [[nodiscard]] std::size_t owner(std::size_t partition_flat) const { return owner_[partition_flat]; }
    [[nodiscard]] std::size_t owner(const PartitionGrid& grid, const MultiIndex& g) const {
        return owner_[grid.flat(g)];
    }
    /// p_m: partitions assigned to each worker over all waves.
    [[nodiscard]] std::vector<std::size_t> allocation() const;

private:
    std::size_t workers_;
    std::vector<std::vector<PartitionId>> waves_;
    std::vector<std::size_t> owner_;
};

/// Worker for the j-th partition of a wave with `wave_size` partitions:
/// block policy uses blocks of ceil(wave_size / V), round robin uses j mod V.
std::size_t assign_worker(std::size_t j, std::size_t wave_size, std::size_t workers,
                          SchedulePolicy policy = SchedulePolicy::block);

WaveSchedule schedule(const PartitionGrid& grid, std::size_t workers,
                      SchedulePolicy policy = SchedulePolicy::block);

struct DependencyEdge {
    MultiIndex from;
    MultiIndex to;
    OffsetVector offset;
};

/// g -> g + d for every offset vector d that stays inside the grid.
std::vector<DependencyEdge> dependency_edges(const PartitionGrid& grid);

/// Distinct (destination worker, cell) pairs each worker must send: cells it
/// computes that lie inside a partition owned by another worker.
std::vector<std::uint64_t> cells_sent_per_worker(const PartitionGrid& grid, const WaveSchedule& sched);

}  // namespace wavemsa
